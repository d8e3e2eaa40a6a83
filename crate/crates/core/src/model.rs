//! Physical problem definition: system Hamiltonian, monitored observable,
//! reservoirs and their hybridization functions.
//!
//! Units: hbar = e = k_B = 1 and all energies are measured in a reference
//! hopping t, so every quantity here is a dimensionless number. Particle
//! currents come out in units of t, heat currents in t^2.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;

pub(crate) const HERMITICITY_TOL: f64 = 1e-12;

/// Reservoir selector for two-terminal junctions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lead {
    Left,
    Right,
}

impl Lead {
    pub const BOTH: [Lead; 2] = [Lead::Left, Lead::Right];

    /// The opposite reservoir.
    pub fn other(self) -> Lead {
        match self {
            Lead::Left => Lead::Right,
            Lead::Right => Lead::Left,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Lead::Left => "left",
            Lead::Right => "right",
        }
    }
}

impl fmt::Display for Lead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Current moment: particle number (zeta = 0) or heat (zeta = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    Particle,
    Heat,
}

impl Moment {
    pub const BOTH: [Moment; 2] = [Moment::Particle, Moment::Heat];

    /// Exponent of the (omega - mu_r) weight in the current integral.
    pub fn exponent(self) -> u32 {
        match self {
            Moment::Particle => 0,
            Moment::Heat => 1,
        }
    }
}

/// Fermi-Dirac occupation. Zero temperature is handled as an exact step:
/// 1 below mu, 1/2 at mu, 0 above.
pub fn fermi(omega: f64, mu: f64, temperature: f64) -> Result<f64> {
    if temperature < 0.0 || !temperature.is_finite() {
        return Err(Error::invalid(format!(
            "temperature must be finite and >= 0, got {temperature}"
        )));
    }
    Ok(fermi_unchecked(omega, mu, temperature))
}

/// `fermi` without the temperature check, for hot loops over validated reservoirs.
#[inline]
pub(crate) fn fermi_unchecked(omega: f64, mu: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return match omega.partial_cmp(&mu) {
            Some(std::cmp::Ordering::Less) => 1.0,
            Some(std::cmp::Ordering::Equal) => 0.5,
            _ => 0.0,
        };
    }
    let x = (omega - mu) / temperature;
    // Branch on the sign so exp never overflows, only underflows to 0.
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// tanh((omega - mu) / 2T), reducing to sign(omega - mu) at T = 0.
#[inline]
pub(crate) fn tanh_half(omega: f64, mu: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        (omega - mu).signum() * if omega == mu { 0.0 } else { 1.0 }
    } else {
        ((omega - mu) / (2.0 * temperature)).tanh()
    }
}

/// Effective monitoring strength of a bosonic bath of coupling `tau`,
/// chemical potential `mu_b` and temperature `t_b` attached to the
/// monitored observable: gamma = pi tau^2 coth(|mu_b| / 2 t_b).
pub fn gamma_from_bosonic_bath(tau: f64, mu_b: f64, t_b: f64) -> Result<f64> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(Error::invalid(format!("coupling tau must be >= 0, got {tau}")));
    }
    if mu_b == 0.0 || !mu_b.is_finite() {
        return Err(Error::invalid(
            "bosonic bath chemical potential must be nonzero (coth diverges at 0)",
        ));
    }
    if t_b <= 0.0 || !t_b.is_finite() {
        return Err(Error::invalid(format!(
            "bosonic bath temperature must be > 0, got {t_b}"
        )));
    }
    let x = mu_b.abs() / (2.0 * t_b);
    // coth(x) = 1 + 2/(e^{2x} - 1); for large x the correction underflows to 0.
    let coth = if x > 350.0 { 1.0 } else { 1.0 + 2.0 / ((2.0 * x).exp_m1()) };
    Ok(PI * tau * tau * coth)
}

/// Frequency-resolved coupling strength between a reservoir and the system,
/// before embedding onto system orbitals.
#[derive(Debug, Clone, PartialEq)]
pub enum HybridizationKind {
    /// Metallic lead seen through a single-level energy filter:
    /// Sigma^R(w) = t_c^2 / (w - center + i width), so
    /// Gamma(w) = t_c^2 width / ((w - center)^2 + width^2).
    LorentzianFilter {
        coupling: f64,
        width: f64,
        center: f64,
    },
    /// Gamma(w) = gamma0 inside |w| <= half_bandwidth, zero outside.
    /// With `wide_band` the band cutoff is dropped entirely: Gamma is the
    /// constant gamma0 on the whole real line and Sigma^R = -i gamma0.
    FlatBand {
        gamma0: f64,
        half_bandwidth: f64,
        wide_band: bool,
    },
    /// Piecewise-linear interpolation of sampled Gamma values, clamped to
    /// zero outside the grid.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl HybridizationKind {
    fn check(&self) -> std::result::Result<(), String> {
        match self {
            HybridizationKind::LorentzianFilter { coupling, width, center } => {
                if !(coupling.is_finite() && width.is_finite() && center.is_finite()) {
                    return Err("non-finite Lorentzian filter parameter".into());
                }
                if *coupling <= 0.0 {
                    return Err(format!("filter coupling must be > 0, got {coupling}"));
                }
                if *width <= 0.0 {
                    return Err(format!("filter width must be > 0, got {width}"));
                }
                Ok(())
            }
            HybridizationKind::FlatBand { gamma0, half_bandwidth, .. } => {
                if !(gamma0.is_finite() && half_bandwidth.is_finite()) {
                    return Err("non-finite flat-band parameter".into());
                }
                if *gamma0 < 0.0 {
                    return Err(format!("flat-band gamma0 must be >= 0, got {gamma0}"));
                }
                if *half_bandwidth <= 0.0 {
                    return Err(format!(
                        "flat-band half bandwidth must be > 0, got {half_bandwidth}"
                    ));
                }
                Ok(())
            }
            HybridizationKind::Tabulated { grid, values } => {
                if grid.len() != values.len() {
                    return Err(format!(
                        "tabulated grid ({}) and values ({}) lengths differ",
                        grid.len(),
                        values.len()
                    ));
                }
                if grid.len() < 2 {
                    return Err("tabulated hybridization needs at least two points".into());
                }
                if grid.iter().any(|x| !x.is_finite()) || values.iter().any(|v| !v.is_finite()) {
                    return Err("non-finite tabulated entry".into());
                }
                if grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("tabulated grid must be strictly ascending".into());
                }
                if let Some(v) = values.iter().find(|v| **v < 0.0) {
                    return Err(format!("tabulated Gamma must be >= 0, got {v}"));
                }
                Ok(())
            }
        }
    }

    /// Scalar hybridization Gamma(omega) >= 0.
    pub fn value(&self, omega: f64) -> f64 {
        match self {
            HybridizationKind::LorentzianFilter { coupling, width, center } => {
                let d = omega - center;
                coupling * coupling * width / (d * d + width * width)
            }
            HybridizationKind::FlatBand { gamma0, half_bandwidth, wide_band } => {
                if *wide_band || omega.abs() <= *half_bandwidth {
                    *gamma0
                } else {
                    0.0
                }
            }
            HybridizationKind::Tabulated { grid, values } => {
                let n = grid.len();
                if omega < grid[0] || omega > grid[n - 1] {
                    return 0.0;
                }
                let k = match grid.partition_point(|x| *x <= omega) {
                    0 => 1,
                    p if p >= n => n - 1,
                    p => p,
                };
                let (x0, x1) = (grid[k - 1], grid[k]);
                let (v0, v1) = (values[k - 1], values[k]);
                v0 + (v1 - v0) * (omega - x0) / (x1 - x0)
            }
        }
    }

    /// Scalar retarded self-energy kernel. Its imaginary part is -Gamma(omega);
    /// the real part is the Hilbert transform of Gamma.
    pub fn retarded(&self, omega: f64) -> Complex64 {
        match self {
            HybridizationKind::LorentzianFilter { coupling, width, center } => {
                coupling * coupling / Complex64::new(omega - center, *width)
            }
            HybridizationKind::FlatBand { gamma0, half_bandwidth, wide_band } => {
                if *wide_band {
                    return Complex64::new(0.0, -gamma0);
                }
                let w = *half_bandwidth;
                // Principal value of (gamma0/pi) \int_{-W}^{W} dw'/(w - w').
                let re = if omega.abs() == w {
                    0.0 // the log singularity is integrable; the midpoint is irrelevant
                } else {
                    gamma0 / PI * ((omega + w).abs() / (omega - w).abs()).ln()
                };
                Complex64::new(re, -self.value(omega))
            }
            HybridizationKind::Tabulated { grid, values } => {
                let mut re = 0.0;
                for k in 1..grid.len() {
                    let (x0, x1) = (grid[k - 1], grid[k]);
                    let (v0, v1) = (values[k - 1], values[k]);
                    let slope = (v1 - v0) / (x1 - x0);
                    // PV of \int_{x0}^{x1} (v0 + slope (x - x0)) / (omega - x) dx
                    //   = (v(omega)) ln|...| - slope (x1 - x0), with v continued linearly.
                    let v_at = v0 + slope * (omega - x0);
                    let num = (omega - x0).abs();
                    let den = (omega - x1).abs();
                    if num > 0.0 && den > 0.0 {
                        re += v_at * (num / den).ln() - slope * (x1 - x0);
                    } else {
                        re += -slope * (x1 - x0);
                    }
                }
                Complex64::new(re / PI, -self.value(omega))
            }
        }
    }

    /// Frequencies where the kernel has structure; used to seed quadrature panels.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match self {
            HybridizationKind::LorentzianFilter { width, center, .. } => {
                vec![*center, center - width, center + width]
            }
            HybridizationKind::FlatBand { half_bandwidth, wide_band, .. } => {
                if *wide_band {
                    vec![]
                } else {
                    vec![-half_bandwidth, *half_bandwidth]
                }
            }
            HybridizationKind::Tabulated { grid, .. } => grid.clone(),
        }
    }

    /// Characteristic energy width of the kernel.
    pub(crate) fn scale(&self) -> f64 {
        match self {
            HybridizationKind::LorentzianFilter { width, .. } => *width,
            HybridizationKind::FlatBand { half_bandwidth, wide_band, .. } => {
                if *wide_band {
                    1.0
                } else {
                    *half_bandwidth
                }
            }
            HybridizationKind::Tabulated { grid, .. } => {
                (grid[grid.len() - 1] - grid[0]).max(1.0)
            }
        }
    }
}

/// Scalar hybridization evaluated on a model; total function of omega.
pub fn hybridization_value(kind: &HybridizationKind, omega: f64) -> f64 {
    kind.value(omega)
}

/// Hybridization kernel together with its embedding onto system orbitals.
///
/// The induced matrix is rank one, Gamma_r(w) = Gamma(w) v v^dagger, with v
/// built from `coupling_sites`. Positive semidefiniteness is automatic.
#[derive(Debug, Clone, PartialEq)]
pub struct Hybridization {
    pub kind: HybridizationKind,
    pub coupling_sites: Vec<(usize, f64)>,
}

impl Hybridization {
    pub fn new(kind: HybridizationKind, coupling_sites: Vec<(usize, f64)>) -> Self {
        Hybridization { kind, coupling_sites }
    }

    /// Single-site embedding with unit weight.
    pub fn on_site(kind: HybridizationKind, site: usize) -> Self {
        Hybridization { kind, coupling_sites: vec![(site, 1.0)] }
    }

    pub(crate) fn coupling_vector(&self, n: usize) -> DVector<Complex64> {
        let mut v = DVector::zeros(n);
        for &(site, weight) in &self.coupling_sites {
            v[site] += Complex64::new(weight, 0.0);
        }
        v
    }
}

/// Thermal reservoir: hybridization plus chemical potential and temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct Reservoir {
    pub hybridization: Hybridization,
    pub mu: f64,
    pub temperature: f64,
}

impl Reservoir {
    pub fn new(hybridization: Hybridization, mu: f64, temperature: f64) -> Self {
        Reservoir { hybridization, mu, temperature }
    }

    /// Occupation of this reservoir at frequency omega.
    pub fn fermi(&self, omega: f64) -> f64 {
        fermi_unchecked(omega, self.mu, self.temperature)
    }

}

/// Single-particle system Hamiltonian, Hermitian n x n.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemHamiltonian {
    matrix: DMatrix<Complex64>,
}

impl SystemHamiltonian {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let h = SystemHamiltonian { matrix };
        match hermiticity_defect(&h.matrix) {
            Some((i, j, mag)) => Err(Error::invalid(format!(
                "Hamiltonian is not Hermitian at ({i}, {j}): |h_ij - conj(h_ji)| = {mag:.3e}"
            ))),
            None if h.matrix.nrows() == 0 => {
                Err(Error::invalid("Hamiltonian needs at least one site"))
            }
            None => Ok(h),
        }
    }

    /// Single level of energy eps_d.
    pub fn single_level(eps_d: f64) -> Self {
        SystemHamiltonian {
            matrix: DMatrix::from_element(1, 1, Complex64::new(eps_d, 0.0)),
        }
    }

    /// Diagonal Hamiltonian of uncoupled levels.
    pub fn diagonal(levels: &[f64]) -> Self {
        let n = levels.len();
        SystemHamiltonian {
            matrix: DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new(levels[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

/// Hermitian matrix of the monitored single-particle observable.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorOperator {
    matrix: DMatrix<Complex64>,
}

impl MonitorOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let o = MonitorOperator { matrix };
        match hermiticity_defect(&o.matrix) {
            Some((i, j, mag)) => Err(Error::invalid(format!(
                "monitor operator is not Hermitian at ({i}, {j}): defect {mag:.3e}"
            ))),
            None => Ok(o),
        }
    }

    /// Occupation monitor of a single site: O = e_site e_site^dagger.
    pub fn site_occupation(n: usize, site: usize) -> Self {
        let mut m = DMatrix::zeros(n, n);
        m[(site, site)] = Complex64::new(1.0, 0.0);
        MonitorOperator { matrix: m }
    }

    /// Cross-correlation monitor of two sites: O = |a><b| + |b><a|.
    pub fn cross_correlation(n: usize, a: usize, b: usize) -> Self {
        let mut m = DMatrix::zeros(n, n);
        m[(a, b)] = Complex64::new(1.0, 0.0);
        m[(b, a)] = Complex64::new(1.0, 0.0);
        MonitorOperator { matrix: m }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|z| z.norm() == 0.0)
    }
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> Option<(usize, usize, f64)> {
    if m.nrows() != m.ncols() {
        return Some((0, 0, f64::INFINITY));
    }
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > HERMITICITY_TOL {
                return Some((i, j, d));
            }
        }
    }
    None
}

/// A two-terminal monitored junction.
#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub hamiltonian: SystemHamiltonian,
    pub monitor: MonitorOperator,
    pub left: Reservoir,
    pub right: Reservoir,
    pub gamma: f64,
}

impl Junction {
    pub fn new(
        hamiltonian: SystemHamiltonian,
        monitor: MonitorOperator,
        left: Reservoir,
        right: Reservoir,
        gamma: f64,
    ) -> Self {
        Junction { hamiltonian, monitor, left, right, gamma }
    }

    pub fn n_sites(&self) -> usize {
        self.hamiltonian.n_sites()
    }

    pub fn reservoir(&self, lead: Lead) -> &Reservoir {
        match lead {
            Lead::Left => &self.left,
            Lead::Right => &self.right,
        }
    }

    pub fn reservoir_mut(&mut self, lead: Lead) -> &mut Reservoir {
        match lead {
            Lead::Left => &mut self.left,
            Lead::Right => &mut self.right,
        }
    }

    /// Apply a symmetric bias delta_mu = mu_R - mu_L around `mu`.
    pub fn with_symmetric_bias(&self, mu: f64, delta_mu: f64) -> Junction {
        let mut j = self.clone();
        j.left.mu = mu - delta_mu / 2.0;
        j.right.mu = mu + delta_mu / 2.0;
        j
    }

    /// Check every type invariant, collecting all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.hamiltonian.matrix.nrows();
        if self.hamiltonian.matrix.ncols() != n || n == 0 {
            violations.push(Violation::DimensionMismatch {
                what: "hamiltonian",
                rows: self.hamiltonian.matrix.nrows(),
                cols: self.hamiltonian.matrix.ncols(),
                expected: n.max(1),
            });
        }
        if let Some((i, j, mag)) = hermiticity_defect(&self.hamiltonian.matrix) {
            violations.push(Violation::NonHermitian { what: "hamiltonian", row: i, col: j, defect: mag });
        }
        if self.monitor.matrix.nrows() != n || self.monitor.matrix.ncols() != n {
            violations.push(Violation::DimensionMismatch {
                what: "monitor",
                rows: self.monitor.matrix.nrows(),
                cols: self.monitor.matrix.ncols(),
                expected: n,
            });
        } else if let Some((i, j, mag)) = hermiticity_defect(&self.monitor.matrix) {
            violations.push(Violation::NonHermitian { what: "monitor", row: i, col: j, defect: mag });
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            violations.push(Violation::NegativeMonitoringStrength(self.gamma));
        }
        for lead in Lead::BOTH {
            let res = self.reservoir(lead);
            if !(res.temperature >= 0.0) || !res.temperature.is_finite() {
                violations.push(Violation::NegativeTemperature { lead, value: res.temperature });
            }
            if !res.mu.is_finite() {
                violations.push(Violation::InvalidHybridization {
                    lead,
                    reason: format!("chemical potential is not finite: {}", res.mu),
                });
            }
            if let Err(reason) = res.hybridization.kind.check() {
                violations.push(Violation::InvalidHybridization { lead, reason });
            }
            if res.hybridization.coupling_sites.is_empty() {
                violations.push(Violation::EmptyCouplingSites { lead });
            }
            for &(site, weight) in &res.hybridization.coupling_sites {
                if site >= n {
                    violations.push(Violation::CouplingSiteOutOfRange { lead, site, n_sites: n });
                }
                if !weight.is_finite() {
                    violations.push(Violation::InvalidHybridization {
                        lead,
                        reason: format!("coupling weight on site {site} is not finite"),
                    });
                }
            }
        }
        ValidationReport { violations }
    }

    /// Validate and convert any violation into an error.
    pub fn validated(&self) -> Result<&Self> {
        let report = self.validate();
        if report.is_ok() {
            Ok(self)
        } else {
            Err(Error::InvalidJunction(report))
        }
    }
}

/// Outcome of `Junction::validate`; passes iff no violation was found.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidJunction(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonHermitian { what: &'static str, row: usize, col: usize, defect: f64 },
    DimensionMismatch { what: &'static str, rows: usize, cols: usize, expected: usize },
    NegativeMonitoringStrength(f64),
    NegativeTemperature { lead: Lead, value: f64 },
    InvalidHybridization { lead: Lead, reason: String },
    EmptyCouplingSites { lead: Lead },
    CouplingSiteOutOfRange { lead: Lead, site: usize, n_sites: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonHermitian { what, row, col, defect } => write!(
                f,
                "{what} is not Hermitian at ({row}, {col}): defect {defect:.3e}"
            ),
            Violation::DimensionMismatch { what, rows, cols, expected } => write!(
                f,
                "{what} has shape {rows}x{cols}, expected {expected}x{expected}"
            ),
            Violation::NegativeMonitoringStrength(g) => {
                write!(f, "negative monitoring strength: gamma = {g}")
            }
            Violation::NegativeTemperature { lead, value } => {
                write!(f, "{lead} reservoir has negative temperature {value}")
            }
            Violation::InvalidHybridization { lead, reason } => {
                write!(f, "{lead} reservoir hybridization invalid: {reason}")
            }
            Violation::EmptyCouplingSites { lead } => {
                write!(f, "{lead} reservoir couples to no site")
            }
            Violation::CouplingSiteOutOfRange { lead, site, n_sites } => write!(
                f,
                "{lead} reservoir couples to site {site}, but the system has {n_sites} sites"
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn fermi_symmetry_point() {
        for t in [1e-6, 0.1, 1.0, 100.0] {
            assert_relative_eq!(fermi(0.3, 0.3, t).unwrap(), 0.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn fermi_zero_temperature_step() {
        assert_eq!(fermi(1.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(fermi(-1.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(fermi(0.0, 0.0, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn fermi_log_three_quarter_point() {
        let t = 0.37;
        let mu = -0.2;
        assert_relative_eq!(
            fermi(mu + t * 3.0f64.ln(), mu, t).unwrap(),
            0.25,
            max_relative = 1e-13
        );
    }

    #[test]
    fn fermi_extreme_arguments_do_not_overflow() {
        assert_eq!(fermi(1e6, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(fermi(-1e6, 0.0, 1.0).unwrap(), 1.0);
        assert!(fermi(1e6, 0.0, 1.0).unwrap().is_finite());
    }

    #[test]
    fn fermi_rejects_negative_temperature() {
        assert!(fermi(0.0, 0.0, -0.1).is_err());
    }

    #[test]
    fn lorentzian_peak_and_half_maximum() {
        let kind = HybridizationKind::LorentzianFilter { coupling: 1.0, width: 0.55, center: 1.48 };
        let peak = 1.0 / 0.55;
        assert_relative_eq!(kind.value(1.48), peak, max_relative = 1e-14);
        assert_relative_eq!(kind.value(1.48 + 0.55), peak / 2.0, max_relative = 1e-14);
        assert_relative_eq!(kind.value(1.48 - 0.55), peak / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn lorentzian_value_away_from_peak() {
        let kind = HybridizationKind::LorentzianFilter { coupling: 1.0, width: 0.55, center: 1.48 };
        let expected = 0.55 / (1.48 * 1.48 + 0.55 * 0.55);
        assert_relative_eq!(kind.value(0.0), expected, max_relative = 1e-14);
    }

    #[test]
    fn flat_band_indicator() {
        let kind = HybridizationKind::FlatBand { gamma0: 0.3, half_bandwidth: 2.0, wide_band: false };
        assert_eq!(kind.value(1.999), 0.3);
        assert_eq!(kind.value(-1.5), 0.3);
        assert_eq!(kind.value(2.001), 0.0);
        let wide = HybridizationKind::FlatBand { gamma0: 0.3, half_bandwidth: 2.0, wide_band: true };
        assert_eq!(wide.value(1e6), 0.3);
    }

    #[test]
    fn tabulated_interpolates_and_clamps() {
        let kind = HybridizationKind::Tabulated {
            grid: vec![-1.0, 0.0, 1.0],
            values: vec![0.0, 2.0, 1.0],
        };
        assert_relative_eq!(kind.value(-0.5), 1.0, max_relative = 1e-14);
        assert_relative_eq!(kind.value(0.5), 1.5, max_relative = 1e-14);
        assert_eq!(kind.value(-1.5), 0.0);
        assert_eq!(kind.value(1.5), 0.0);
    }

    #[test]
    fn bosonic_bath_limits() {
        // coth -> 1 when the bath chemical potential dominates the temperature.
        let g = gamma_from_bosonic_bath(0.7, -5.0, 1e-4).unwrap();
        assert_relative_eq!(g, PI * 0.49, max_relative = 1e-12);
        assert_eq!(gamma_from_bosonic_bath(0.0, 1.0, 1.0).unwrap(), 0.0);
        // |mu_B| = 2 T_B puts the coth argument at exactly 1.
        let e2 = 2.0f64.exp();
        let coth1 = (e2 + 1.0) / (e2 - 1.0);
        assert_relative_eq!(
            gamma_from_bosonic_bath(1.0, 2.0, 1.0).unwrap(),
            PI * coth1,
            max_relative = 1e-13
        );
    }

    #[test]
    fn bosonic_bath_rejects_bad_parameters() {
        assert!(gamma_from_bosonic_bath(1.0, 0.0, 1.0).is_err());
        assert!(gamma_from_bosonic_bath(1.0, 1.0, 0.0).is_err());
        assert!(gamma_from_bosonic_bath(1.0, 1.0, -2.0).is_err());
    }

    fn tiny_junction(gamma: f64) -> Junction {
        let kind = HybridizationKind::LorentzianFilter { coupling: 1.0, width: 0.5, center: 0.0 };
        Junction::new(
            SystemHamiltonian::single_level(0.0),
            MonitorOperator::site_occupation(1, 0),
            Reservoir::new(Hybridization::on_site(kind.clone(), 0), 0.0, 0.0),
            Reservoir::new(Hybridization::on_site(kind, 0), 0.0, 0.0),
            gamma,
        )
    }

    #[test]
    fn validate_passes_hermitian_junction() {
        assert!(tiny_junction(0.0).validate().is_ok());
    }

    #[test]
    fn validate_reports_non_hermitian_hamiltonian_with_index() {
        let mut j = tiny_junction(0.0);
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        m[(1, 0)] = Complex64::new(0.5, 0.0);
        j.hamiltonian = SystemHamiltonian { matrix: m };
        j.monitor = MonitorOperator::site_occupation(2, 0);
        j.left.hybridization.coupling_sites = vec![(0, 1.0)];
        j.right.hybridization.coupling_sites = vec![(1, 1.0)];
        let report = j.validate();
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::NonHermitian { what: "hamiltonian", row: 0, col: 1, .. }
        )));
    }

    #[test]
    fn validate_reports_negative_gamma() {
        let j = tiny_junction(-0.1);
        let report = j.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NegativeMonitoringStrength(_))));
        assert!(format!("{report}").contains("negative monitoring strength"));
    }

    proptest! {
        #[test]
        fn fermi_is_non_increasing(
            w1 in -50.0f64..50.0, w2 in -50.0f64..50.0,
            mu in -5.0f64..5.0, t in 1e-3f64..10.0,
        ) {
            let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
            prop_assert!(fermi(lo, mu, t).unwrap() >= fermi(hi, mu, t).unwrap());
        }

        #[test]
        fn fermi_particle_hole_symmetry(
            w in -50.0f64..50.0, mu in -5.0f64..5.0, t in 1e-3f64..10.0,
        ) {
            let s = fermi(w, mu, t).unwrap() + fermi(2.0 * mu - w, mu, t).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn hybridization_is_nonnegative(
            w in -100.0f64..100.0,
            coupling in 0.1f64..3.0, width in 0.05f64..3.0, center in -5.0f64..5.0,
        ) {
            let kind = HybridizationKind::LorentzianFilter { coupling, width, center };
            prop_assert!(kind.value(w) >= 0.0);
        }

        #[test]
        fn bosonic_gamma_increases_with_temperature(
            tau in 0.1f64..2.0, mu_b in 0.5f64..5.0,
            t1 in 0.01f64..5.0, dt in 0.01f64..5.0,
        ) {
            let g1 = gamma_from_bosonic_bath(tau, mu_b, t1).unwrap();
            let g2 = gamma_from_bosonic_bath(tau, mu_b, t1 + dt).unwrap();
            prop_assert!(g2 > g1);
        }
    }
}
