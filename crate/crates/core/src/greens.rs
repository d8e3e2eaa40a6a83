//! Reservoir self-energies and the dressed retarded/advanced Green's
//! functions of the monitored junction, plus spectral and transmission
//! functions.
//!
//! Monitoring enters the retarded sector only as the frequency-independent
//! lifetime gamma O^2. The occupation-carrying Keldysh sector is handled by
//! the `selfconsistent` module.

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{tanh_half, Junction, Lead, Reservoir};
use crate::numerics::QuadratureSpec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Reservoir self-energy components at a fixed frequency, embedded on the
/// system orbitals.
#[derive(Debug, Clone)]
pub struct SelfEnergy {
    /// Retarded component Sigma^R(omega).
    pub retarded: DMatrix<Complex64>,
    /// Hybridization Gamma(omega) = (Sigma^A - Sigma^R) / 2, positive semidefinite.
    pub gamma: DMatrix<Complex64>,
    /// Keldysh component Sigma^K(omega) = -2i Gamma tanh((omega - mu)/2T).
    pub keldysh: DMatrix<Complex64>,
}

/// Retarded and advanced self-energy plus hybridization of one reservoir.
pub fn reservoir_self_energy(res: &Reservoir, n_sites: usize, omega: f64) -> SelfEnergy {
    let v = res.hybridization.coupling_vector(n_sites);
    let outer = &v * v.adjoint();
    let kernel = res.hybridization.kind.retarded(omega);
    let gamma_value = res.hybridization.kind.value(omega);
    let retarded = &outer * kernel;
    let gamma = &outer * Complex64::new(gamma_value, 0.0);
    let keldysh = &gamma * Complex64::new(0.0, -2.0 * tanh_half(omega, res.mu, res.temperature));
    SelfEnergy { retarded, gamma, keldysh }
}

/// Dressed retarded and advanced Green's functions at one frequency.
#[derive(Debug, Clone)]
pub struct DressedGreens {
    pub retarded: DMatrix<Complex64>,
    pub advanced: DMatrix<Complex64>,
}

const RCOND_LIMIT: f64 = 1e-13;
const INVERSION_RESIDUAL_LIMIT: f64 = 1e-10;

/// G^R(omega) = [omega - h - Sigma^R_L - Sigma^R_R + i gamma O^2]^{-1} and
/// its conjugate transpose.
pub fn dressed_greens(junction: &Junction, omega: f64) -> Result<DressedGreens> {
    let n = junction.n_sites();
    let mut a = DMatrix::<Complex64>::identity(n, n) * Complex64::new(omega, 0.0);
    a -= junction.hamiltonian.matrix();
    for lead in Lead::BOTH {
        let se = reservoir_self_energy(junction.reservoir(lead), n, omega);
        a -= se.retarded;
    }
    let o = junction.monitor.matrix();
    a += o * o * Complex64::new(0.0, junction.gamma);

    let retarded = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::NearSingular { omega, rcond: 0.0 })?;

    let rcond = 1.0 / (linalg::norm1(&a) * linalg::norm1(&retarded)).max(f64::MIN_POSITIVE);
    if rcond < RCOND_LIMIT {
        return Err(Error::NearSingular { omega, rcond });
    }
    let residual = linalg::max_abs(&(&a * &retarded - DMatrix::identity(n, n)));
    if residual > INVERSION_RESIDUAL_LIMIT {
        return Err(Error::NearSingular { omega, rcond });
    }

    let advanced = retarded.adjoint();
    Ok(DressedGreens { retarded, advanced })
}

/// Spectral function A(omega) = i (G^R - G^A) / 2 pi, Hermitian and PSD.
pub fn spectral_function(junction: &Junction, omega: f64) -> Result<DMatrix<Complex64>> {
    let g = dressed_greens(junction, omega)?;
    Ok((g.retarded - g.advanced) * Complex64::new(0.0, 1.0 / (2.0 * PI)))
}

/// Transmission probability T(omega) = 4 tr[Gamma_L G^R Gamma_R G^A].
pub fn transmission(junction: &Junction, omega: f64) -> Result<f64> {
    let g = dressed_greens(junction, omega)?;
    let n = junction.n_sites();
    let gamma_l = reservoir_self_energy(&junction.left, n, omega).gamma;
    let gamma_r = reservoir_self_energy(&junction.right, n, omega).gamma;
    let t = 4.0 * (gamma_l * &g.retarded * gamma_r * &g.advanced).trace();
    debug_assert!(t.im.abs() <= 1e-10 * (1.0 + t.re.abs()));
    Ok(t.re.max(0.0))
}

/// Frequencies at which the junction's Green's functions have structure:
/// eigenvalues of h, hybridization resonances and band edges, and the
/// chemical potentials (Fermi steps at T = 0).
pub fn junction_breakpoints(junction: &Junction) -> Vec<f64> {
    let mut bps = linalg::hermitian_eigenvalues(junction.hamiltonian.matrix());
    for lead in Lead::BOTH {
        let res = junction.reservoir(lead);
        bps.extend(res.hybridization.kind.breakpoints());
        bps.push(res.mu);
    }
    bps.retain(|b| b.is_finite());
    bps
}

/// Quadrature spec augmented with this junction's breakpoints.
pub fn junction_quadrature(junction: &Junction, spec: &QuadratureSpec) -> QuadratureSpec {
    spec.with_breakpoints(junction_breakpoints(junction))
}
