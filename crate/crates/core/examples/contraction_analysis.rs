//! Closed-form Jacobian of the fixed-point map at the solution, its
//! eigenvalues, and what happens when the same flows meet doubled demands.
//!
//! cargo run --example contraction_analysis

use hydrofp::format::NetworkFile;
use hydrofp::jacobian::contraction_report;
use hydrofp::solver::{solve_system, SolverConfig, System};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let file = NetworkFile::parse(include_str!("reference-net.txt"))?;
    let system = System::new(&file.network)?;
    let result = solve_system(&system, &SolverConfig::default())?;

    let report = contraction_report(&system, &result.flows_cfs, Some(&result.trace))?;
    println!("eigenvalue magnitudes:");
    for m in &report.eigenvalue_magnitudes {
        println!("  {m:.6}");
    }
    println!("rho = {:.4}", report.spectral_radius);
    println!("empirical ratio = {:.4}", report.empirical_ratio.unwrap_or(f64::NAN));
    println!("local contraction: {}", report.is_local_contraction);

    let doubled = System::new(&file.network.with_scaled_demands(2.0))?;
    let stressed = contraction_report(&doubled, &result.flows_cfs, None)?;
    println!();
    println!("same flows, doubled demands:");
    println!("rho = {:.4}, local contraction: {}", stressed.spectral_radius, stressed.is_local_contraction);
    Ok(())
}
