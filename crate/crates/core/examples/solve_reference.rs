//! Solve the bundled two-loop network and print flows, heads and the
//! convergence trace.
//!
//! cargo run --example solve_reference

use hydrofp::document::SolutionDocument;
use hydrofp::format::NetworkFile;
use hydrofp::solver::{solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let file = NetworkFile::parse(include_str!("reference-net.txt"))?;
    let mut config = SolverConfig::default();
    file.options.apply(&mut config);

    let result = solve(&file.network, &config)?;
    let doc = SolutionDocument::from_result(&result, None);
    doc.write_table(&mut std::io::stdout())?;

    println!();
    println!("  k   step (GPM)   ratio");
    for t in result.trace.iter().filter(|t| t.iter <= 5 || t.iter % 10 == 0) {
        match t.ratio {
            Some(r) => println!("{:3}   {:10.4e}   {r:.4}", t.iter, t.step_inf_gpm),
            None => println!("{:3}   {:10.4e}", t.iter, t.step_inf_gpm),
        }
    }
    println!(
        "continuity {:.2e} GPM, energy {:.2e} ft",
        result.residuals.continuity_gpm, result.residuals.energy_ft
    );
    for w in &result.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
