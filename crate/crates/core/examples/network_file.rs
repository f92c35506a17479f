//! Parse a network file, report validation problems, and write it back out.
//!
//! cargo run --example network_file -- [path]

use hydrofp::format::NetworkFile;
use hydrofp::hydraulics::{min_turbulent_flow, resistance_coefficient};
use hydrofp::units::{cfs_to_gpm, convert, Unit};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => include_str!("reference-net.txt").to_string(),
    };
    let file = match NetworkFile::parse(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let net = &file.network;
    println!(
        "{} junctions, {} pipes, {} loops, demand {} GPM ({:.4} cfs)",
        net.node_count(),
        net.pipe_count(),
        net.loop_count(),
        net.total_demand_gpm(),
        convert(net.total_demand_gpm(), Unit::Gpm, Unit::Cfs)?
    );

    let fluid = hydrofp::FluidProperties::default();
    println!("pipe   resistance   min turbulent flow (GPM)");
    for p in net.pipes() {
        let a = resistance_coefficient(p)?;
        let q_min = cfs_to_gpm(min_turbulent_flow(p, &fluid));
        println!("{:4}   {a:10.4}   {q_min:8.3}", p.id);
    }

    println!();
    print!("{}", file.to_text());
    Ok(())
}
