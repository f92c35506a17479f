//! The 8-node, 9-pipe looped example network and its published steady state.

use crate::network::{Junction, Network, Pipe, Reservoir};

/// Published flows, GPM, pipes 1..=9 (two-decimal rounding).
pub const REFERENCE_FLOWS_GPM: [f64; 9] = [
    815.03, 446.65, 218.38, 3.35, -146.65, 300.00, 65.03, -134.97, 815.03,
];

/// Published heads, feet, junctions 1..=7 (two-decimal rounding).
pub const REFERENCE_HEADS_FT: [f64; 7] = [846.01, 842.01, 833.14, 829.32, 833.14, 837.38, 829.84];

pub const REFERENCE_ITERATIONS: usize = 69;
pub const REFERENCE_SPECTRAL_RADIUS: f64 = 0.8520;
pub const REFERENCE_COMMON_RATIO: f64 = 0.85;

/// Same network as the bundled `reference-net.txt`.
pub fn reference_network() -> Network {
    // (from, to, length ft, diameter in); C = 100 throughout
    const PIPES: [(usize, usize, f64, f64); 9] = [
        (0, 1, 3000.0, 14.0),
        (2, 6, 5000.0, 12.0),
        (2, 3, 5000.0, 8.0),
        (3, 5, 5000.0, 8.0),
        (5, 6, 5000.0, 8.0),
        (6, 7, 7000.0, 10.0),
        (3, 4, 5000.0, 6.0),
        (4, 0, 7000.0, 6.0),
        (1, 2, 3000.0, 14.0),
    ];
    const DEMANDS_GPM: [f64; 7] = [0.0, 150.0, 150.0, 200.0, 150.0, 0.0, 300.0];

    Network::new(
        Reservoir { head_ft: 850.0 },
        DEMANDS_GPM
            .iter()
            .enumerate()
            .map(|(i, &demand_gpm)| Junction { id: i + 1, demand_gpm })
            .collect(),
        PIPES
            .iter()
            .enumerate()
            .map(|(i, &(from, to, length_ft, diameter_in))| Pipe {
                id: i + 1,
                from,
                to,
                length_ft,
                diameter_in,
                roughness: 100.0,
            })
            .collect(),
    )
}
