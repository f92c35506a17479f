//! Solve the stacked continuity/energy system by damped Newton and compare
//! with the fixed-point answer.
//!
//! cargo run --example newton_crosscheck

use hydrofp::format::NetworkFile;
use hydrofp::newton::{newton_solve, FullState, NewtonOptions};
use hydrofp::solver::{solve_system, SolverConfig, System};
use hydrofp::units::cfs_to_gpm;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let file = NetworkFile::parse(include_str!("reference-net.txt"))?;
    let system = System::new(&file.network)?;

    let fp = solve_system(&system, &SolverConfig::default())?;
    let nr = newton_solve(&system, &FullState::uniform(&system, 600.0), &NewtonOptions::default())?;
    println!("fixed point: {} iterations", fp.iterations);
    println!("newton:      {} iterations, residual {:.2e}", nr.iterations, nr.residual_inf);

    println!("pipe   fp (GPM)   newton (GPM)   diff");
    for (i, p) in file.network.pipes().iter().enumerate() {
        let a = cfs_to_gpm(fp.flows_cfs[i]);
        let b = cfs_to_gpm(nr.state.q[i]);
        println!("{:4}   {a:9.4}   {b:12.4}   {:.1e}", p.id, (a - b).abs());
    }
    let dh = (&fp.heads_ft - &nr.state.h).amax();
    println!("max head difference {dh:.2e} ft");
    Ok(())
}
