//! Derivative of the fixed-point map and local-contraction diagnostics.
//!
//! With E = diag(|q|^-0.852), F = -0.852·diag(|q|^-1.852·sign q),
//! H = A⁻¹·diag(|q|^-1.852·sign q) and Z = 𝓘A⁻¹E𝓘ᵀ,
//!
//! ```text
//! J(q) = A⁻¹ [F + 0.852·E𝓘ᵀZ⁻¹𝓘H] diag(𝓘ᵀZ⁻¹s)
//! ```
//!
//! The factor 0.852 on the coupling term comes from dZ/dq_m, which carries
//! the conductance derivative -0.852·A⁻¹|q_m|^-1.852·sign q_m. Dropping it
//! leaves ρ(J*) unchanged but shifts the junction-mode eigenvalues from 0 to
//! 0.148, so a spanning tree (where T is constant) would get J = 0.148·I.
//!
//! At a fixed point the diagonal factor collapses to -0.852·I, so
//! J* = -0.852·(I - P) with P = G𝓘ᵀZ⁻¹𝓘 a projector: its spectrum is
//! {-0.852 (one per loop), 0 (one per junction)}.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hydraulics::{HW_EXPONENT, HW_FLOW_EXPONENT};
use crate::solver::{System, TraceRecord};
use crate::units::cfs_to_gpm;

/// Relative step of the central-difference Jacobian.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// sign with sign(0) = +1.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Diagonal factors (as vectors) and the weighted Laplacian at a flow vector.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianParts {
    pub e: DVector<f64>,
    pub f: DVector<f64>,
    pub h: DVector<f64>,
    pub z: DMatrix<f64>,
}

impl JacobianParts {
    pub fn at(system: &System, q: &DVector<f64>) -> Result<Self> {
        check_nondegenerate(system, q)?;
        let a = system.resistance();
        let e = q.map(|x| x.abs().powf(-HW_FLOW_EXPONENT));
        let f = q.map(|x| -HW_FLOW_EXPONENT * x.abs().powf(-HW_EXPONENT) * sign(x));
        let h = q.zip_map(a, |x, a| x.abs().powf(-HW_EXPONENT) * sign(x) / a);
        let z = system.laplacian(&e.component_div(a));
        Ok(Self { e, f, h, z })
    }
}

fn check_nondegenerate(system: &System, q: &DVector<f64>) -> Result<()> {
    if q.len() != system.pipe_count() {
        return Err(Error::FlowLength {
            expected: system.pipe_count(),
            got: q.len(),
        });
    }
    let floor = system.flow_floor();
    match q.iter().position(|x| x.is_nan() || x.abs() <= floor) {
        Some(i) => Err(Error::NearZeroFlow {
            pipe: i + 1,
            flow: q[i],
        }),
        None => Ok(()),
    }
}

/// Closed-form J(q), L×L.
pub fn jacobian_at(system: &System, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    let parts = JacobianParts::at(system, q)?;
    let chol = parts.z.clone().cholesky().ok_or(Error::NumericallyDisconnected)?;
    let inc = &system.incidence().reduced;
    let a = system.resistance();

    let u = inc.tr_mul(&chol.solve(system.injections()));
    // 𝓘ᵀZ⁻¹𝓘
    let coupling = inc.tr_mul(&chol.solve(inc));

    let l = system.pipe_count();
    Ok(DMatrix::from_fn(l, l, |row, col| {
        let mut inner = HW_FLOW_EXPONENT * parts.e[row] * coupling[(row, col)] * parts.h[col];
        if row == col {
            inner += parts.f[row];
        }
        inner * u[col] / a[row]
    }))
}

/// Central differences of T, one column per pipe, step `rel_step·max(1, |q_ℓ|)`.
pub fn finite_difference_jacobian(system: &System, q: &DVector<f64>, rel_step: f64) -> Result<DMatrix<f64>> {
    system.apply_map(q)?;
    let l = q.len();
    let mut jac = DMatrix::zeros(l, l);
    for col in 0..l {
        let step = rel_step * q[col].abs().max(1.0);
        if q[col].is_nan() || q[col].abs() <= 10.0 * step {
            return Err(Error::StepTooLarge {
                pipe: col + 1,
                step,
                flow: q[col],
            });
        }
        let mut plus = q.clone();
        plus[col] += step;
        let mut minus = q.clone();
        minus[col] -= step;
        let diff = (system.apply_map(&plus)? - system.apply_map(&minus)?) / (2.0 * step);
        jac.set_column(col, &diff);
    }
    Ok(jac)
}

/// Eigenvalue moduli of a general square matrix, largest first.
pub fn eigenvalue_magnitudes(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 100 * m.nrows().max(10))
        .ok_or_else(|| Error::EigenNoConvergence {
            dim: m.nrows(),
            norm: m.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max),
        })?;
    let mut mags: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    Ok(mags)
}

/// ρ = max |λ_i|.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalue_magnitudes(m)?.first().copied().unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub jacobian: DMatrix<f64>,
    /// Largest first.
    pub eigenvalue_magnitudes: Vec<f64>,
    pub spectral_radius: f64,
    pub is_local_contraction: bool,
    /// Predicted asymptotic step ratio; equal to the spectral radius.
    pub rate_estimate: f64,
    /// Last step ratio of the supplied trace.
    pub empirical_ratio: Option<f64>,
    /// ‖q − T(q)‖∞ at the analysed flows, GPM.
    pub fixed_point_residual_gpm: f64,
}

/// Local contraction verdict at `q_star`. Makes no claim about the size of
/// the basin around it.
pub fn contraction_report(
    system: &System,
    q_star: &DVector<f64>,
    trace: Option<&[TraceRecord]>,
) -> Result<ContractionReport> {
    let jacobian = jacobian_at(system, q_star)?;
    let eigenvalue_magnitudes = eigenvalue_magnitudes(&jacobian)?;
    let spectral_radius = eigenvalue_magnitudes.first().copied().unwrap_or(0.0);
    let fixed_point_residual_gpm = cfs_to_gpm((system.apply_map(q_star)? - q_star).amax());
    Ok(ContractionReport {
        jacobian,
        eigenvalue_magnitudes,
        spectral_radius,
        is_local_contraction: spectral_radius < 1.0,
        rate_estimate: spectral_radius,
        empirical_ratio: trace.and_then(|t| t.iter().rev().find_map(|r| r.ratio)),
        fixed_point_residual_gpm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Junction, Network, Pipe, Reservoir};
    use crate::reference::reference_network;
    use crate::solver::{solve_system, SolverConfig};
    use crate::synth::RandomNetwork;
    use proptest::prelude::*;

    fn rel_inf(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let norm = |m: &DMatrix<f64>| m.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
        norm(&(a - b)) / norm(a).max(1.0)
    }

    fn converged_reference() -> (System, DVector<f64>, Vec<TraceRecord>) {
        let system = System::new(&reference_network()).unwrap();
        let r = solve_system(&system, &SolverConfig::default()).unwrap();
        (system, r.flows_cfs, r.trace)
    }

    #[test]
    fn radius_of_trivial_matrices() {
        assert_eq!(spectral_radius(&DMatrix::identity(5, 5)).unwrap(), 1.0);
        assert_eq!(spectral_radius(&DMatrix::zeros(4, 4)).unwrap(), 0.0);
        // rotation: eigenvalues ±i·2
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        assert!((spectral_radius(&rot).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sign_of_zero_is_positive() {
        assert_eq!(sign(0.0), 1.0);
        assert_eq!(sign(-0.0), 1.0);
        assert_eq!(sign(-3.0), -1.0);
    }

    #[test]
    fn single_pipe_jacobian_vanishes() {
        let net = Network::new(
            Reservoir { head_ft: 100.0 },
            vec![Junction { id: 1, demand_gpm: 50.0 }],
            vec![Pipe {
                id: 1,
                from: 0,
                to: 1,
                length_ft: 1000.0,
                diameter_in: 8.0,
                roughness: 120.0,
            }],
        );
        let system = System::new(&net).unwrap();
        for q in [0.01, 0.5, -2.0] {
            let j = jacobian_at(&system, &DVector::from_vec(vec![q])).unwrap();
            assert_eq!(j.shape(), (1, 1));
            assert!(j[(0, 0)].abs() < 1e-12, "{j}");
        }
    }

    #[test]
    fn zero_flow_is_rejected() {
        let (system, mut q, _) = converged_reference();
        q[3] = 0.0;
        assert!(matches!(
            jacobian_at(&system, &q),
            Err(Error::NearZeroFlow { pipe: 4, .. })
        ));
        q[3] = 1e-6;
        assert!(matches!(
            finite_difference_jacobian(&system, &q, DEFAULT_FD_STEP),
            Err(Error::StepTooLarge { pipe: 4, .. })
        ));
    }

    #[test]
    fn reference_radius() {
        let (system, q, trace) = converged_reference();
        let report = contraction_report(&system, &q, Some(&trace)).unwrap();
        assert!((report.spectral_radius - 0.8520).abs() < 0.005, "{}", report.spectral_radius);
        assert!(report.is_local_contraction);
        assert_eq!(report.rate_estimate, report.spectral_radius);
        let ratio = report.empirical_ratio.unwrap();
        assert!((ratio - report.rate_estimate).abs() < 0.01, "{ratio}");
        // two loops at -0.852, seven zeros
        assert_eq!(report.eigenvalue_magnitudes.len(), 9);
        assert!((report.eigenvalue_magnitudes[1] - 0.852).abs() < 0.005);
        assert!(report.eigenvalue_magnitudes[2] < 0.01);
    }

    #[test]
    fn reference_radius_is_stable_under_perturbation() {
        let (system, q, _) = converged_reference();
        let rho = spectral_radius(&jacobian_at(&system, &q).unwrap()).unwrap();
        let bumped = q.map(|x| x * (1.0 + 1e-6));
        let rho2 = spectral_radius(&jacobian_at(&system, &bumped).unwrap()).unwrap();
        assert!((rho - rho2).abs() < 1e-3);
    }

    #[test]
    fn scaled_demands_break_contraction() {
        // J is linear in s: doubling the demands at the original fixed point doubles J.
        let (_, q, _) = converged_reference();
        let scaled = System::new(&reference_network().with_scaled_demands(2.0)).unwrap();
        let report = contraction_report(&scaled, &q, None).unwrap();
        assert!(report.spectral_radius >= 1.0);
        assert!(!report.is_local_contraction);
        assert_eq!(report.empirical_ratio, None);
    }

    #[test]
    fn zero_demand_gives_zero_matrices() {
        let system = System::new(&reference_network().with_scaled_demands(0.0)).unwrap();
        let q = DVector::from_fn(9, |i, _| 0.3 + 0.1 * i as f64);
        assert_eq!(jacobian_at(&system, &q).unwrap(), DMatrix::zeros(9, 9));
        assert_eq!(finite_difference_jacobian(&system, &q, DEFAULT_FD_STEP).unwrap(), DMatrix::zeros(9, 9));
    }

    #[test]
    fn doubling_demand_doubles_jacobian_exactly() {
        let gen = RandomNetwork::default();
        for seed in 0..10 {
            let net = gen.generate(seed);
            let q = gen.random_flows(&net, seed + 100, 0.05);
            let j1 = jacobian_at(&System::new(&net).unwrap(), &q).unwrap();
            let j2 = jacobian_at(&System::new(&net.with_scaled_demands(2.0)).unwrap(), &q).unwrap();
            assert_eq!(j2, j1 * 2.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn analytic_matches_finite_differences(seed in any::<u64>()) {
            let gen = RandomNetwork::default();
            let net = gen.generate(seed);
            let system = System::new(&net).unwrap();
            let q = gen.random_flows(&net, !seed, 0.05);
            let exact = jacobian_at(&system, &q).unwrap();
            let fd = finite_difference_jacobian(&system, &q, DEFAULT_FD_STEP).unwrap();
            prop_assert!(rel_inf(&exact, &fd) <= 1e-5, "{}", rel_inf(&exact, &fd));
        }

        #[test]
        fn trees_have_zero_jacobian(seed in any::<u64>()) {
            let gen = RandomNetwork { extra_pipes: 0..=0, ..Default::default() };
            let net = gen.generate(seed);
            let system = System::new(&net).unwrap();
            let q = gen.random_flows(&net, seed ^ 7, 0.05);
            prop_assert!(jacobian_at(&system, &q).unwrap().amax() <= 1e-8);
            // T is constant here, so a coarse step has no truncation error and less rounding noise
            let fd = finite_difference_jacobian(&system, &q, 1e-3).unwrap().amax();
            prop_assert!(fd <= 1e-8, "{fd:e}");
        }
    }
}
