//! Generate random looped networks, solve each one, and check the analytic
//! Jacobian against central finite differences.
//!
//! cargo run --example random_networks -- [count] [first-seed]

use hydrofp::jacobian::{finite_difference_jacobian, jacobian_at, spectral_radius, DEFAULT_FD_STEP};
use hydrofp::solver::{solve_system, SolverConfig, System};
use hydrofp::synth::RandomNetwork;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let count: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let first: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let generator = RandomNetwork::default();
    println!("seed  nodes  pipes  loops  iters     rho   |J - FD|");
    for seed in first..first + count {
        let net = generator.generate(seed);
        let system = System::new(&net)?;
        let r = solve_system(&system, &SolverConfig::default())?;

        let q = generator.random_flows(&net, seed, 0.1);
        let j = jacobian_at(&system, &q)?;
        let fd = finite_difference_jacobian(&system, &q, DEFAULT_FD_STEP)?;
        let err = (&j - &fd).amax() / j.amax().max(1.0);
        let rho = if r.converged {
            format!("{:.4}", spectral_radius(&jacobian_at(&system, &r.flows_cfs)?)?)
        } else {
            "-".into()
        };
        println!(
            "{seed:4}  {:5}  {:5}  {:5}  {:5}  {rho:>6}   {err:.1e}",
            net.node_count(),
            net.pipe_count(),
            net.loop_count(),
            r.iterations
        );
    }
    Ok(())
}
