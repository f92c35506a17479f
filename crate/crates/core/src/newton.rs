//! Damped Newton-Raphson on the stacked continuity and energy equations,
//! unknowns x = [q; h]. Used to cross-check the fixed-point solution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hydraulics::{head_loss, pipe_head_loss_slope};
use crate::solver::System;
use crate::units::gpm_to_cfs;

/// Flows (cfs) and junction heads (ft).
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub q: DVector<f64>,
    pub h: DVector<f64>,
}

impl FullState {
    /// Uniform flow (GPM) on every pipe and reservoir head at every junction.
    pub fn uniform(system: &System, flow_gpm: f64) -> Self {
        Self {
            q: DVector::repeat(system.pipe_count(), gpm_to_cfs(flow_gpm)),
            h: DVector::repeat(system.node_count(), system.reservoir_head()),
        }
    }

    fn stacked(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.h.len() + self.q.len());
        x.rows_mut(0, self.q.len()).copy_from(&self.q);
        x.rows_mut(self.q.len(), self.h.len()).copy_from(&self.h);
        x
    }

    fn unstack(x: &DVector<f64>, pipes: usize) -> Self {
        Self {
            q: x.rows(0, pipes).into_owned(),
            h: x.rows(pipes, x.len() - pipes).into_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// On the ∞-norm of the stacked residual (cfs rows, ft rows).
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// |q| below which the head-loss slope is evaluated at this value, cfs.
    pub kink_guard: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
            max_halvings: 30,
            kink_guard: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResult {
    pub state: FullState,
    pub iterations: usize,
    pub converged: bool,
    pub residual_inf: f64,
}

/// r = [𝓘q − s ; ℏ(q) − 𝓘ᵀ(h − h₀·1)], length N + L.
pub fn full_residual(system: &System, state: &FullState) -> Result<DVector<f64>> {
    system.check_flow_len(&state.q)?;
    if state.h.len() != system.node_count() {
        return Err(Error::Config(format!(
            "head vector has length {}, network has {} junctions",
            state.h.len(),
            system.node_count()
        )));
    }
    let inc = &system.incidence().reduced;
    let n = system.node_count();
    let l = system.pipe_count();
    let continuity = inc * &state.q - system.injections();
    let energy = head_loss(&state.q, system.resistance())
        - inc.tr_mul(&state.h.add_scalar(-system.reservoir_head()));
    let mut r = DVector::zeros(n + l);
    r.rows_mut(0, n).copy_from(&continuity);
    r.rows_mut(n, l).copy_from(&energy);
    Ok(r)
}

/// ∂r/∂[q; h] = [[𝓘, 0], [diag(1.852·A·|q|^0.852), −𝓘ᵀ]].
pub fn residual_jacobian(system: &System, q: &DVector<f64>, kink_guard: f64) -> DMatrix<f64> {
    let inc = &system.incidence().reduced;
    let n = system.node_count();
    let l = system.pipe_count();
    let mut m = DMatrix::zeros(n + l, l + n);
    m.view_mut((0, 0), (n, l)).copy_from(inc);
    m.view_mut((n, l), (l, n)).copy_from(&(-inc.transpose()));
    for (i, (&flow, &a)) in q.iter().zip(system.resistance().iter()).enumerate() {
        let guarded = if flow.abs() < kink_guard { kink_guard } else { flow };
        m[(n + i, i)] = pipe_head_loss_slope(guarded, a);
    }
    m
}

pub fn newton_solve(system: &System, start: &FullState, options: &NewtonOptions) -> Result<NewtonResult> {
    let l = system.pipe_count();
    let mut state = start.clone();
    let mut r = full_residual(system, &state)?;
    let mut norm = r.amax();
    let mut iterations = 0;

    while norm > options.tolerance && iterations < options.max_iterations {
        iterations += 1;
        let jac = residual_jacobian(system, &state.q, options.kink_guard);
        let dx = jac
            .lu()
            .solve(&(-&r))
            .filter(|dx| dx.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularNewton { iteration: iterations })?;

        let x = state.stacked();
        let mut t = 1.0;
        let mut trial = FullState::unstack(&(&x + &dx * t), l);
        let mut trial_r = full_residual(system, &trial)?;
        for _ in 0..options.max_halvings {
            if trial_r.amax() < norm {
                break;
            }
            t *= 0.5;
            trial = FullState::unstack(&(&x + &dx * t), l);
            trial_r = full_residual(system, &trial)?;
        }
        state = trial;
        r = trial_r;
        norm = r.amax();
    }

    Ok(NewtonResult {
        state,
        iterations,
        converged: norm <= options.tolerance,
        residual_inf: norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydraulics::pipe_head_loss;
    use crate::network::{Junction, Network, Pipe, Reservoir};
    use crate::reference::{reference_network, REFERENCE_FLOWS_GPM, REFERENCE_HEADS_FT};
    use crate::solver::{solve_system, SolverConfig};
    use crate::synth::RandomNetwork;
    use crate::units::{cfs_to_gpm, GPM_PER_CFS};

    #[test]
    fn reference_solution_residual() {
        let system = System::new(&reference_network()).unwrap();
        let state = FullState {
            q: DVector::from_iterator(9, REFERENCE_FLOWS_GPM.iter().map(|&x| gpm_to_cfs(x))),
            h: DVector::from_row_slice(&REFERENCE_HEADS_FT),
        };
        let r = full_residual(&system, &state).unwrap();
        let continuity_gpm = r.rows(0, 7).amax() * GPM_PER_CFS;
        let energy_ft = r.rows(7, 9).amax();
        assert!(continuity_gpm < 0.01, "{continuity_gpm}");
        assert!(energy_ft < 0.01, "{energy_ft}");
    }

    #[test]
    fn zero_demand_rest_state() {
        let system = System::new(&reference_network().with_scaled_demands(0.0)).unwrap();
        let rest = FullState {
            q: DVector::zeros(9),
            h: DVector::repeat(7, 850.0),
        };
        assert_eq!(full_residual(&system, &rest).unwrap(), DVector::zeros(16));

        let r = newton_solve(&system, &FullState::uniform(&system, 600.0), &NewtonOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.state.q.amax() < 1e-3);
        assert!((r.state.h.add_scalar(-850.0)).amax() < 1e-6);
    }

    #[test]
    fn continuity_block_is_incidence_times_flow() {
        let gen = RandomNetwork::default();
        let net = gen.generate(3);
        let system = System::new(&net).unwrap();
        let state = FullState {
            q: gen.random_flows(&net, 9, 0.0),
            h: DVector::from_fn(net.node_count(), |i, _| 800.0 + i as f64),
        };
        let r = full_residual(&system, &state).unwrap();
        let expected = &system.incidence().reduced * &state.q - system.injections();
        assert_eq!(r.rows(0, net.node_count()).into_owned(), expected);
    }

    #[test]
    fn single_pipe_closed_form() {
        let net = Network::new(
            Reservoir { head_ft: 200.0 },
            vec![Junction { id: 1, demand_gpm: 250.0 }],
            vec![Pipe {
                id: 1,
                from: 1,
                to: 0,
                length_ft: 2500.0,
                diameter_in: 10.0,
                roughness: 110.0,
            }],
        );
        let system = System::new(&net).unwrap();
        let r = newton_solve(&system, &FullState::uniform(&system, 600.0), &NewtonOptions::default()).unwrap();
        assert!(r.converged);
        let d = gpm_to_cfs(250.0);
        // pipe runs 1 → 0, so it carries −d
        assert!((r.state.q[0] + d).abs() < 1e-10);
        let a = system.resistance()[0];
        assert!((r.state.h[0] - (200.0 - a * d.powf(1.852))).abs() < 1e-10);
    }

    #[test]
    fn agrees_with_fixed_point() {
        let system = System::new(&reference_network()).unwrap();
        let newton = newton_solve(&system, &FullState::uniform(&system, 600.0), &NewtonOptions::default()).unwrap();
        assert!(newton.converged);

        let tight = SolverConfig {
            tolerance_gpm: 1e-6,
            ..Default::default()
        };
        let fp = solve_system(&system, &tight).unwrap();
        assert!(cfs_to_gpm((&fp.flows_cfs - &newton.state.q).amax()) < 1e-4);

        let fp = solve_system(&system, &SolverConfig::default()).unwrap();
        assert!(cfs_to_gpm((&fp.flows_cfs - &newton.state.q).amax()) < 1e-3);
        assert!((&fp.heads_ft - &newton.state.h).amax() < 1e-3);
    }

    #[test]
    fn slope_block_matches_finite_differences() {
        let system = System::new(&reference_network()).unwrap();
        let q = DVector::from_iterator(9, REFERENCE_FLOWS_GPM.iter().map(|&x| gpm_to_cfs(x)));
        let jac = residual_jacobian(&system, &q, 1e-10);
        for (i, (&flow, &a)) in q.iter().zip(system.resistance().iter()).enumerate() {
            let h = 1e-6 * flow.abs();
            let fd = (pipe_head_loss(flow + h, a) - pipe_head_loss(flow - h, a)) / (2.0 * h);
            let exact = jac[(7 + i, i)];
            assert!((fd - exact).abs() <= 1e-6 * exact, "pipe {}: {fd} vs {exact}", i + 1);
        }
    }

    #[test]
    fn kink_guard_keeps_matrix_finite() {
        let system = System::new(&reference_network()).unwrap();
        let jac = residual_jacobian(&system, &DVector::zeros(9), 1e-10);
        assert!(jac.iter().all(|x| x.is_finite()));
        assert!(jac[(7, 0)] > 0.0);
    }
}
