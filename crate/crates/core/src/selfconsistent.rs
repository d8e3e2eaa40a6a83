//! Stationary correlation matrix of the monitored junction.
//!
//! The self-consistency
//!   D = (1/pi) Int dw G^R [ f_L Gamma_L + f_R Gamma_R + gamma O D O ] G^A
//! is linear in D, so it splits into a drive term (the source) and a linear
//! map assembled as a dense n^2 x n^2 operator. Both are integrated on a
//! single shared set of adaptive panels so every basis element sees the same
//! Green's function samples.

use crate::error::{Error, Result};
use crate::greens::{dressed_greens, junction_quadrature, reservoir_self_energy};
use crate::linalg;
use crate::model::{Junction, Lead};
use crate::numerics::{integrate_matrix, QuadratureSpec};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::cell::RefCell;
use std::f64::consts::PI;

const SOLVER_TOLERANCE: f64 = 1e-9;
const EIGENVALUE_TOLERANCE: f64 = 1e-9;
const FIXED_POINT_TOLERANCE: f64 = 1e-12;

/// The linear structure of the self-consistency: D = source + map[D].
#[derive(Debug, Clone)]
pub struct TransferTensor {
    /// Drive term, n x n, Hermitian.
    pub source: DMatrix<Complex64>,
    /// Monitoring feedback as a dense n^2 x n^2 operator acting on
    /// row-major vectorized matrices.
    pub map: DMatrix<Complex64>,
    n: usize,
    /// Total quadrature error estimate of the assembly.
    pub quadrature_error: f64,
}

impl TransferTensor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Apply the feedback map to a matrix.
    pub fn apply_map(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        unvec(&(&self.map * vec_rm(x)), self.n)
    }

    fn residual_of(&self, d: &DMatrix<Complex64>) -> f64 {
        let rhs = &self.source + self.apply_map(d);
        linalg::max_abs(&(d - rhs))
    }

    /// Rebuild the source for a junction that differs from the one this
    /// tensor was assembled for only in its chemical potentials or
    /// temperatures; the feedback map is bias-independent and reused.
    pub fn rebiased(&self, junction: &Junction, spec: &QuadratureSpec) -> Result<TransferTensor> {
        let (source, error) = assemble_source(junction, spec)?;
        Ok(TransferTensor {
            source,
            map: self.map.clone(),
            n: self.n,
            quadrature_error: self.quadrature_error.max(error),
        })
    }
}

/// Stationary single-particle correlation matrix D_ij = <d^dag_j d_i>.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    /// Hermitian n x n matrix with spectrum in [0, 1].
    pub matrix: DMatrix<Complex64>,
    /// max |D - source - map[D]| after solving.
    pub residual: f64,
    /// Largest entry change applied when hermitizing the raw solution.
    pub hermitization: f64,
    /// Iteration count of the fixed-point solver, if that path was used.
    pub iterations: Option<usize>,
}

pub(crate) fn vec_rm(m: &DMatrix<Complex64>) -> DVector<Complex64> {
    let n = m.nrows();
    DVector::from_fn(n * n, |k, _| m[(k / n, k % n)])
}

pub(crate) fn unvec(v: &DVector<Complex64>, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// Assemble source and feedback map for a junction.
pub fn assemble_transfer(junction: &Junction, spec: &QuadratureSpec) -> Result<TransferTensor> {
    assemble_with_drive(junction, spec, 1.0, true)
}

/// Source term only; used to re-bias a junction without re-integrating the
/// (bias-independent) feedback map.
pub fn assemble_source(
    junction: &Junction,
    spec: &QuadratureSpec,
) -> Result<(DMatrix<Complex64>, f64)> {
    let tensor = assemble_with_drive(junction, spec, 1.0, false)?;
    Ok((tensor.source, tensor.quadrature_error))
}

/// `drive_scale` multiplies the occupations f_r in the source (a test hook
/// for checking linearity in the drive); `feedback` enables the gamma map.
fn assemble_with_drive(
    junction: &Junction,
    spec: &QuadratureSpec,
    drive_scale: f64,
    feedback: bool,
) -> Result<TransferTensor> {
    junction.validated()?;
    let n = junction.n_sites();
    let qspec = junction_quadrature(junction, spec);
    let o = junction.monitor.matrix().clone();
    let gamma_active = feedback && junction.gamma > 0.0 && !junction.monitor.is_zero();

    // Columns 0..n^2 hold the sandwich kernel (G^R O) (x) (O G^A) in the
    // row-major convention, column n^2 holds the vectorized source integrand.
    let cols = if gamma_active { n * n + 1 } else { 1 };
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |w: f64| -> DMatrix<Complex64> {
        let g = match dressed_greens(junction, w) {
            Ok(g) => g,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                return DMatrix::from_element(n * n, cols, Complex64::new(f64::NAN, 0.0));
            }
        };
        let mut drive = DMatrix::<Complex64>::zeros(n, n);
        for lead in Lead::BOTH {
            let res = junction.reservoir(lead);
            let f = drive_scale * res.fermi(w);
            drive += reservoir_self_energy(res, n, w).gamma * Complex64::new(f, 0.0);
        }
        let source_part = &g.retarded * drive * &g.advanced;
        let mut out = DMatrix::<Complex64>::zeros(n * n, cols);
        if gamma_active {
            let a = &g.retarded * &o;
            let b = &o * &g.advanced;
            for i in 0..n {
                for j in 0..n {
                    let row = i * n + j;
                    for p in 0..n {
                        for q in 0..n {
                            out[(row, p * n + q)] = a[(i, p)] * b[(q, j)];
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                out[(i * n + j, cols - 1)] = source_part[(i, j)];
            }
        }
        out
    };

    let result = integrate_matrix(integrand, &qspec);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let integral = result?;

    let inv_pi = Complex64::new(1.0 / PI, 0.0);
    let source = DMatrix::from_fn(n, n, |i, j| integral.value[(i * n + j, cols - 1)] * inv_pi);
    let map = if gamma_active {
        let g = Complex64::new(junction.gamma / PI, 0.0);
        DMatrix::from_fn(n * n, n * n, |r, c| integral.value[(r, c)] * g)
    } else {
        DMatrix::zeros(n * n, n * n)
    };
    Ok(TransferTensor { source, map, n, quadrature_error: integral.error })
}

/// Solve (1 - map) D = source as a dense linear system.
pub fn solve_correlation(tensor: &TransferTensor) -> Result<CorrelationMatrix> {
    let n2 = tensor.n * tensor.n;
    let system = DMatrix::identity(n2, n2) - &tensor.map;
    let rhs = vec_rm(&tensor.source);
    let solution = system.lu().solve(&rhs).ok_or(Error::NonContractiveMap)?;
    finalize(tensor, unvec(&solution, tensor.n), None)
}

/// Damped fixed-point iteration D <- (1-d) D + d (source + map[D]),
/// starting from the source. Cross-validates `solve_correlation`.
pub fn solve_fixed_point(
    tensor: &TransferTensor,
    damping: f64,
    max_iter: usize,
) -> Result<CorrelationMatrix> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::invalid(format!("damping must be in (0, 1], got {damping}")));
    }
    let mut d = tensor.source.clone();
    for iter in 0..max_iter {
        let next = &d * Complex64::new(1.0 - damping, 0.0)
            + (&tensor.source + tensor.apply_map(&d)) * Complex64::new(damping, 0.0);
        let update = linalg::max_abs(&(&next - &d));
        d = next;
        if update < FIXED_POINT_TOLERANCE {
            return finalize(tensor, d, Some(iter + 1));
        }
    }
    Err(Error::IterationLimit { max_iter, residual: tensor.residual_of(&d) })
}

fn finalize(
    tensor: &TransferTensor,
    raw: DMatrix<Complex64>,
    iterations: Option<usize>,
) -> Result<CorrelationMatrix> {
    let (matrix, hermitization) = linalg::hermitize(&raw);
    let residual = tensor.residual_of(&matrix);
    if residual > SOLVER_TOLERANCE {
        return Err(Error::ResidualTooLarge { residual, tolerance: SOLVER_TOLERANCE });
    }
    for ev in linalg::hermitian_eigenvalues(&matrix) {
        if !(-EIGENVALUE_TOLERANCE..=1.0 + EIGENVALUE_TOLERANCE).contains(&ev) {
            return Err(Error::UnphysicalCorrelation { eigenvalue: ev });
        }
    }
    Ok(CorrelationMatrix { matrix, residual, hermitization, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Hybridization, HybridizationKind, MonitorOperator, Reservoir, SystemHamiltonian,
    };
    use crate::numerics::integrate;
    use approx::assert_relative_eq;

    fn filter(coupling: f64, width: f64, center: f64) -> HybridizationKind {
        HybridizationKind::LorentzianFilter { coupling, width, center }
    }

    fn two_filter_level(eps_d: f64, gamma: f64) -> Junction {
        Junction::new(
            SystemHamiltonian::single_level(eps_d),
            MonitorOperator::site_occupation(1, 0),
            Reservoir::new(Hybridization::on_site(filter(1.0, 0.55, -1.48), 0), 0.0, 0.0),
            Reservoir::new(Hybridization::on_site(filter(1.0, 0.55, 1.48), 0), 0.0, 0.0),
            gamma,
        )
    }

    fn flat_equilibrium_level(gamma0: f64, mu: f64, temperature: f64) -> Junction {
        let kind = HybridizationKind::FlatBand { gamma0, half_bandwidth: 40.0, wide_band: true };
        Junction::new(
            SystemHamiltonian::single_level(0.2),
            MonitorOperator::site_occupation(1, 0),
            Reservoir::new(Hybridization::on_site(kind.clone(), 0), mu, temperature),
            Reservoir::new(Hybridization::on_site(kind, 0), mu, temperature),
            0.0,
        )
    }

    #[test]
    fn map_is_zero_without_monitoring() {
        let spec = QuadratureSpec::default();
        let tt = assemble_transfer(&two_filter_level(0.0, 0.0), &spec).unwrap();
        assert!(tt.map.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn map_is_zero_for_zero_monitor_operator() {
        let mut j = two_filter_level(0.0, 2.0);
        j.monitor = MonitorOperator::new(DMatrix::zeros(1, 1)).unwrap();
        let tt = assemble_transfer(&j, &QuadratureSpec::default()).unwrap();
        assert!(tt.map.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_level_map_entry_matches_scalar_quadrature() {
        let gamma = 1.0;
        let j = two_filter_level(0.0, gamma);
        let tt = assemble_transfer(&j, &QuadratureSpec::default()).unwrap();
        assert_eq!(tt.map.nrows(), 1);
        // Independent scalar route: gamma/pi Int |G^R|^2 dw with the closed-form resolvent.
        let spec = QuadratureSpec::default().with_breakpoints([-1.48, 0.0, 1.48]);
        let reference = integrate(
            |w| {
                let s = filter(1.0, 0.55, -1.48).retarded(w) + filter(1.0, 0.55, 1.48).retarded(w);
                let g = (Complex64::new(w, gamma) - s).inv();
                g.norm_sqr() * gamma / std::f64::consts::PI
            },
            &spec,
        )
        .unwrap();
        let m = tt.map[(0, 0)].re;
        assert!(m > 0.0 && m < 1.0, "map entry {m} outside (0, 1)");
        assert_relative_eq!(m, reference.value, max_relative = 1e-8);
    }

    #[test]
    fn equilibrium_occupation_without_monitoring() {
        let (gamma0, mu, t) = (0.4, 0.3, 0.2);
        let j = flat_equilibrium_level(gamma0, mu, t);
        let tt = assemble_transfer(&j, &QuadratureSpec::default()).unwrap();
        let d = solve_correlation(&tt).unwrap();
        // <n>_eq = Int A(w) f(w) dw with a width-2*Gamma0 Lorentzian A.
        let spec = QuadratureSpec::default().with_breakpoints([0.2, mu]);
        let expected = integrate(
            |w| {
                let a = (2.0 * gamma0 / std::f64::consts::PI)
                    / ((w - 0.2).powi(2) + (2.0 * gamma0).powi(2));
                a * crate::model::fermi(w, mu, t).unwrap()
            },
            &spec,
        )
        .unwrap();
        assert_relative_eq!(d.matrix[(0, 0)].re, expected.value, max_relative = 1e-8);
        assert!(d.matrix[(0, 0)].im.abs() < 1e-12);
    }

    #[test]
    fn empty_bands_give_vanishing_correlations() {
        let mut j = two_filter_level(0.4, 1.5);
        j.left.mu = -1e6;
        j.right.mu = -1e6;
        j.left.temperature = 0.0;
        j.right.temperature = 0.0;
        let tt = assemble_transfer(&j, &QuadratureSpec::default()).unwrap();
        let d = solve_correlation(&tt).unwrap();
        assert!(linalg::max_abs(&d.matrix) < 1e-12);
    }

    #[test]
    fn fixed_point_converges_in_one_iteration_without_monitoring() {
        let tt = assemble_transfer(&two_filter_level(0.1, 0.0), &QuadratureSpec::default()).unwrap();
        let d = solve_fixed_point(&tt, 1.0, 50).unwrap();
        assert_eq!(d.iterations, Some(1));
    }

    #[test]
    fn fixed_point_rate_equals_scalar_map_entry() {
        let j = two_filter_level(0.0, 2.0);
        let tt = assemble_transfer(&j, &QuadratureSpec::default()).unwrap();
        let m = tt.map[(0, 0)].re;
        // Updates of the undamped scalar iteration form an exact geometric
        // sequence with ratio equal to the map entry.
        let s = tt.source[(0, 0)].re;
        let mut d = s;
        let mut updates = Vec::new();
        for _ in 0..6 {
            let next = s + m * d;
            updates.push((next - d).abs());
            d = next;
        }
        for w in updates.windows(2) {
            assert_relative_eq!(w[1] / w[0], m, max_relative = 1e-10);
        }
        // And the fixed-point solver needs more iterations the larger gamma is.
        let iters = |gamma: f64| {
            let tt = assemble_transfer(&two_filter_level(0.0, gamma), &QuadratureSpec::default())
                .unwrap();
            solve_fixed_point(&tt, 1.0, 10_000).unwrap().iterations.unwrap()
        };
        assert!(iters(2.0) > iters(0.5));
    }

    #[test]
    fn fixed_point_iteration_limit_error() {
        let tt = assemble_transfer(&two_filter_level(0.0, 3.0), &QuadratureSpec::default()).unwrap();
        match solve_fixed_point(&tt, 0.5, 2) {
            Err(Error::IterationLimit { max_iter: 2, .. }) => {}
            other => panic!("expected IterationLimit, got {other:?}"),
        }
    }

    #[test]
    fn doubling_the_drive_doubles_d_without_feedback() {
        let j = two_filter_level(0.3, 1.2);
        let spec = QuadratureSpec::default();
        let single = assemble_with_drive(&j, &spec, 1.0, false).unwrap();
        let double = assemble_with_drive(&j, &spec, 2.0, false).unwrap();
        let d1 = solve_correlation(&single).unwrap();
        let d2 = solve_correlation(&double).unwrap();
        assert_relative_eq!(
            d2.matrix[(0, 0)].re,
            2.0 * d1.matrix[(0, 0)].re,
            max_relative = 1e-9
        );
    }

    #[test]
    fn hermiticity_of_map_output() {
        // The sandwich map sends Hermitian matrices to Hermitian matrices.
        let j = Junction::new(
            SystemHamiltonian::diagonal(&[0.5, -0.3]),
            MonitorOperator::cross_correlation(2, 0, 1),
            Reservoir::new(Hybridization::on_site(filter(1.0, 0.5, 0.5), 0), 0.1, 0.3),
            Reservoir::new(Hybridization::on_site(filter(1.0, 0.5, -0.3), 1), -0.1, 0.5),
            0.8,
        );
        let tt = assemble_transfer(&j, &QuadratureSpec::default()).unwrap();
        let x = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.3, 0.0),
                Complex64::new(0.1, 0.2),
                Complex64::new(0.1, -0.2),
                Complex64::new(0.9, 0.0),
            ],
        );
        let y = tt.apply_map(&x);
        assert!(linalg::max_abs(&(&y - y.adjoint())) < 1e-10);
    }
}
