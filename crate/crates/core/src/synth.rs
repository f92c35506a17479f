//! Seeded random networks for property tests, benchmarks and examples.

use std::ops::RangeInclusive;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::{Junction, Network, Pipe, Reservoir};

const DIAMETERS_IN: [f64; 7] = [6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0];

/// Connected network generator: a random spanning tree rooted at the
/// reservoir plus `extra_pipes` chords, each with a random orientation.
#[derive(Debug, Clone)]
pub struct RandomNetwork {
    pub junctions: RangeInclusive<usize>,
    pub extra_pipes: RangeInclusive<usize>,
    pub length_ft: (f64, f64),
    pub roughness: (f64, f64),
    pub demand_gpm: (f64, f64),
    pub head_ft: f64,
}

impl Default for RandomNetwork {
    fn default() -> Self {
        Self {
            junctions: 2..=15,
            extra_pipes: 1..=10,
            length_ft: (500.0, 8000.0),
            roughness: (90.0, 140.0),
            demand_gpm: (0.0, 300.0),
            head_ft: 850.0,
        }
    }
}

impl RandomNetwork {
    pub fn generate(&self, seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(self.junctions.clone());
        let extra = rng.random_range(self.extra_pipes.clone());

        let mut ends = Vec::with_capacity(n + extra);
        for node in 1..=n {
            ends.push((rng.random_range(0..node), node));
        }
        for _ in 0..extra {
            let a = rng.random_range(0..=n);
            let mut b = rng.random_range(0..n);
            if b >= a {
                b += 1;
            }
            ends.push((a, b));
        }

        let pipes = ends
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let (from, to) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
                Pipe {
                    id: i + 1,
                    from,
                    to,
                    length_ft: rng.random_range(self.length_ft.0..=self.length_ft.1),
                    diameter_in: DIAMETERS_IN[rng.random_range(0..DIAMETERS_IN.len())],
                    roughness: rng.random_range(self.roughness.0..=self.roughness.1),
                }
            })
            .collect();

        let mut junctions: Vec<Junction> = (1..=n)
            .map(|id| Junction {
                id,
                demand_gpm: rng.random_range(self.demand_gpm.0..=self.demand_gpm.1),
            })
            .collect();
        if junctions.iter().all(|j| j.demand_gpm == 0.0) {
            junctions[n - 1].demand_gpm = self.demand_gpm.1.max(1.0);
        }

        Network::new(Reservoir { head_ft: self.head_ft }, junctions, pipes)
    }

    /// Random flows in cfs with |q| ∈ [min_abs, min_abs + 2] and random signs.
    pub fn random_flows(&self, network: &Network, seed: u64, min_abs: f64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(network.pipe_count(), |_, _| {
            let magnitude = min_abs + rng.random_range(0.0..2.0);
            if rng.random_bool(0.5) {
                magnitude
            } else {
                -magnitude
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_networks_are_valid_and_bounded() {
        let gen = RandomNetwork::default();
        for seed in 0..200 {
            let net = gen.generate(seed);
            assert!(net.validate().is_valid(), "seed {seed}: {:?}", net.validate());
            assert!(net.node_count() <= 15 && net.pipe_count() <= 25);
            assert!(net.total_demand_gpm() > 0.0);
        }
    }

    #[test]
    fn deterministic() {
        let gen = RandomNetwork::default();
        assert_eq!(gen.generate(42), gen.generate(42));
    }
}
