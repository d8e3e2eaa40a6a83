//! Exact particle and heat currents, split into elastic and inelastic
//! channels, plus the derived quantities built on them: differential
//! conductance, generated power, stopping voltage, cooling maps and the
//! coefficient of performance.
//!
//! Sign convention: positive current flows *into* the named reservoir.
//! Particle currents are in units of t, heat currents in t^2.

use crate::error::{Error, Result};
use crate::greens::{dressed_greens, junction_quadrature, reservoir_self_energy};
use crate::model::{Junction, Lead, Moment};
use crate::numerics::{integrate_matrix, QuadratureSpec};
use crate::selfconsistent::{
    assemble_transfer, solve_correlation, CorrelationMatrix, TransferTensor,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::cell::RefCell;
use std::f64::consts::PI;

const CONSERVATION_TOL: f64 = 1e-9;
/// Absolute floor (in units of t) below which conservation is checked
/// against a fixed scale instead of the current itself.
const CONSERVATION_FLOOR: f64 = 1e-3;

/// One current channel split into its energy-conserving and
/// monitor-mediated parts.
#[derive(Debug, Clone, Copy, Default)]
pub struct CurrentSplit {
    pub elastic: f64,
    pub inelastic: f64,
}

impl CurrentSplit {
    pub fn total(&self) -> f64 {
        self.elastic + self.inelastic
    }
}

/// Particle and heat currents flowing into one reservoir.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeadCurrents {
    pub particle: CurrentSplit,
    pub heat: CurrentSplit,
}

impl LeadCurrents {
    pub fn split(&self, moment: Moment) -> CurrentSplit {
        match moment {
            Moment::Particle => self.particle,
            Moment::Heat => self.heat,
        }
    }
}

/// Full steady-state transport solution of a junction.
#[derive(Debug, Clone)]
pub struct TransportResult {
    pub left: LeadCurrents,
    pub right: LeadCurrents,
    pub correlation: CorrelationMatrix,
    /// Summed quadrature error estimates of assembly and current integrals.
    pub quadrature_error: f64,
    /// J0_L + J0_R, which vanishes for a number-conserving monitor.
    pub conservation_defect: f64,
    mu: [f64; 2],
}

impl TransportResult {
    pub fn lead(&self, lead: Lead) -> &LeadCurrents {
        match lead {
            Lead::Left => &self.left,
            Lead::Right => &self.right,
        }
    }

    /// Particle current through the junction, J0 = J0_R.
    pub fn through_current(&self) -> f64 {
        self.right.particle.total()
    }

    /// Energy current into a reservoir, J^E_r = J1_r + mu_r J0_r.
    pub fn energy_current(&self, lead: Lead) -> f64 {
        let mu = match lead {
            Lead::Left => self.mu[0],
            Lead::Right => self.mu[1],
        };
        self.lead(lead).heat.total() + mu * self.lead(lead).particle.total()
    }

    /// Energy injected by the monitor, W = -sum_r J^E_r. Reported as a
    /// diagnostic; no sign is asserted.
    pub fn measurement_power(&self) -> f64 {
        -(self.energy_current(Lead::Left) + self.energy_current(Lead::Right))
    }
}

/// Elastic (Landauer-type) current into reservoir `lead`:
/// (2/pi) Int (w - mu_r)^zeta (f_rbar - f_r) tr[Gamma_r G^R Gamma_rbar G^A] dw.
pub fn elastic_current(
    junction: &Junction,
    lead: Lead,
    moment: Moment,
    spec: &QuadratureSpec,
) -> Result<f64> {
    junction.validated()?;
    let (splits, _) = current_components(junction, None, &[(lead, moment)], spec)?;
    Ok(splits[0].elastic)
}

/// Monitor-mediated current into reservoir `lead`:
/// gamma (2/pi) Int (w - mu_r)^zeta tr[Gamma_r G^R O (D - f_r) O G^A] dw.
pub fn inelastic_current(
    junction: &Junction,
    correlation: &CorrelationMatrix,
    lead: Lead,
    moment: Moment,
    spec: &QuadratureSpec,
) -> Result<f64> {
    junction.validated()?;
    let (splits, _) =
        current_components(junction, Some(&correlation.matrix), &[(lead, moment)], spec)?;
    Ok(splits[0].inelastic)
}

/// Solve the junction and evaluate all four currents with their
/// elastic/inelastic split, checking particle conservation.
pub fn transport(junction: &Junction, spec: &QuadratureSpec) -> Result<TransportResult> {
    junction.validated()?;
    let tensor = assemble_transfer(junction, spec)?;
    transport_with_tensor(junction, &tensor, spec)
}

pub(crate) fn transport_with_tensor(
    junction: &Junction,
    tensor: &TransferTensor,
    spec: &QuadratureSpec,
) -> Result<TransportResult> {
    let correlation = solve_correlation(tensor)?;
    let selection = [
        (Lead::Left, Moment::Particle),
        (Lead::Left, Moment::Heat),
        (Lead::Right, Moment::Particle),
        (Lead::Right, Moment::Heat),
    ];
    let (splits, current_err) =
        current_components(junction, Some(&correlation.matrix), &selection, spec)?;
    let left = LeadCurrents { particle: splits[0], heat: splits[1] };
    let right = LeadCurrents { particle: splits[2], heat: splits[3] };

    let defect = left.particle.total() + right.particle.total();
    let limit = CONSERVATION_TOL * left.particle.total().abs().max(CONSERVATION_FLOOR);
    if defect.abs() > 10.0 * limit {
        return Err(Error::ConservationViolation { defect: defect.abs(), limit });
    }

    Ok(TransportResult {
        left,
        right,
        correlation,
        quadrature_error: tensor.quadrature_error + current_err,
        conservation_defect: defect,
        mu: [junction.left.mu, junction.right.mu],
    })
}

/// All requested (lead, moment) channels in a single quadrature so every
/// channel shares the same Green's function samples.
fn current_components(
    junction: &Junction,
    correlation: Option<&DMatrix<Complex64>>,
    selection: &[(Lead, Moment)],
    spec: &QuadratureSpec,
) -> Result<(Vec<CurrentSplit>, f64)> {
    let n = junction.n_sites();
    let qspec = junction_quadrature(junction, spec);
    let gamma = junction.gamma;
    let o = junction.monitor.matrix();
    let inelastic_active =
        gamma > 0.0 && !junction.monitor.is_zero() && correlation.is_some();
    let odo = correlation.map(|d| o * d * o);
    let osq = o * o;

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let rows = 2 * selection.len();
    let integrand = |w: f64| -> DMatrix<Complex64> {
        let g = match dressed_greens(junction, w) {
            Ok(g) => g,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                return DMatrix::from_element(rows, 1, Complex64::new(f64::NAN, 0.0));
            }
        };
        let gam_l = reservoir_self_energy(&junction.left, n, w).gamma;
        let gam_r = reservoir_self_energy(&junction.right, n, w).gamma;
        let f_l = junction.left.fermi(w);
        let f_r = junction.right.fermi(w);
        let mut out = DMatrix::<Complex64>::zeros(rows, 1);
        for (k, &(lead, moment)) in selection.iter().enumerate() {
            let (gam_this, gam_other, f_this, f_other, mu) = match lead {
                Lead::Left => (&gam_l, &gam_r, f_l, f_r, junction.left.mu),
                Lead::Right => (&gam_r, &gam_l, f_r, f_l, junction.right.mu),
            };
            let weight = match moment {
                Moment::Particle => 1.0,
                Moment::Heat => w - mu,
            };
            let elastic =
                (f_other - f_this) * (gam_this * &g.retarded * gam_other * &g.advanced).trace().re;
            out[(2 * k, 0)] = Complex64::new(weight * elastic, 0.0);
            if inelastic_active {
                let x = odo.as_ref().unwrap() - &osq * Complex64::new(f_this, 0.0);
                let inelastic = (gam_this * &g.retarded * x * &g.advanced).trace().re;
                out[(2 * k + 1, 0)] = Complex64::new(weight * inelastic, 0.0);
            }
        }
        out
    };

    let result = integrate_matrix(integrand, &qspec);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let integral = result?;
    let splits = (0..selection.len())
        .map(|k| CurrentSplit {
            elastic: integral.value[(2 * k, 0)].re * 2.0 / PI,
            inelastic: integral.value[(2 * k + 1, 0)].re * 2.0 * gamma / PI,
        })
        .collect();
    Ok((splits, integral.error))
}

/// J0_R of the junction biased symmetrically by delta_mu = mu_R - mu_L
/// around `mu`, reusing a previously assembled feedback map.
fn through_current_at_bias(
    junction: &Junction,
    base: &TransferTensor,
    mu: f64,
    delta_mu: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let biased = junction.with_symmetric_bias(mu, delta_mu);
    let tensor = base.rebiased(&biased, spec)?;
    let correlation = solve_correlation(&tensor)?;
    let (splits, _) = current_components(
        &biased,
        Some(&correlation.matrix),
        &[(Lead::Right, Moment::Particle)],
        spec,
    )?;
    Ok(splits[0].total())
}

/// Differential conductance dJ0_R / d(mu_L - mu_R) at common chemical
/// potential `mu`, by a Richardson-extrapolated symmetric difference.
pub fn differential_conductance(
    junction: &Junction,
    mu: f64,
    step: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::invalid(format!("conductance step must be > 0, got {step}")));
    }
    junction.validated()?;
    let base = assemble_transfer(junction, spec)?;
    let estimate = |h: f64| -> Result<f64> {
        // delta_mu below is mu_R - mu_L, so dJ/d(mu_L - mu_R) flips its sign.
        let plus = through_current_at_bias(junction, &base, mu, -h, spec)?;
        let minus = through_current_at_bias(junction, &base, mu, h, spec)?;
        Ok((plus - minus) / (2.0 * h))
    };
    let coarse = estimate(step)?;
    let fine = estimate(step / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// One point of a power curve.
#[derive(Debug, Clone, Copy)]
pub struct PowerPoint {
    /// Applied bias delta_mu = mu_R - mu_L.
    pub delta_mu: f64,
    /// Exact generated power P = delta_mu * J0.
    pub power: f64,
    /// Linear-response parabola delta_mu J0|_0 - delta_mu^2 G.
    pub linear_response: f64,
}

/// Generated power over a bias grid, with the linear-response parabola for
/// comparison. The bias is applied symmetrically around the junction's mean
/// chemical potential.
pub fn power_curve(
    junction: &Junction,
    delta_mu_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<PowerPoint>> {
    junction.validated()?;
    let mu = 0.5 * (junction.left.mu + junction.right.mu);
    let base = assemble_transfer(junction, spec)?;
    let j0 = through_current_at_bias(junction, &base, mu, 0.0, spec)?;
    let conductance = differential_conductance(junction, mu, 1e-4, spec)?;
    delta_mu_grid
        .par_iter()
        .map(|&dmu| {
            let j = through_current_at_bias(junction, &base, mu, dmu, spec)?;
            Ok(PowerPoint {
                delta_mu: dmu,
                power: dmu * j,
                linear_response: dmu * j0 - dmu * dmu * conductance,
            })
        })
        .collect()
}

/// Bias at which the monitor-driven current is exactly cancelled. Found by
/// bracket expansion and bisection on the side opposing the zero-bias
/// current; the result satisfies |J0(delta_mu_stop)| <= 1e-10.
pub fn stopping_voltage(junction: &Junction, spec: &QuadratureSpec) -> Result<f64> {
    junction.validated()?;
    let mu = 0.5 * (junction.left.mu + junction.right.mu);
    let base = assemble_transfer(junction, spec)?;
    let j0 = through_current_at_bias(junction, &base, mu, 0.0, spec)?;
    if j0.abs() < 1e-14 {
        return Err(Error::NoZeroBiasCurrent);
    }

    const BRACKET_LIMIT: f64 = 1e3;
    let direction = j0.signum();
    let mut lo = 0.0;
    let mut f_lo = j0;
    let mut width = 1e-3;
    let (mut hi, mut f_hi) = loop {
        let candidate = direction * width;
        let f = through_current_at_bias(junction, &base, mu, candidate, spec)?;
        if f.signum() != f_lo.signum() {
            break (candidate, f);
        }
        lo = candidate;
        f_lo = f;
        width *= 2.0;
        if width > BRACKET_LIMIT {
            return Err(Error::NoStoppingVoltage { bracket: BRACKET_LIMIT });
        }
    };

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = through_current_at_bias(junction, &base, mu, mid, spec)?;
        if f.abs() <= 1e-10 {
            return Ok(mid);
        }
        if f.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
            f_hi = f;
        }
    }
    // The bracket collapsed without the current dipping below threshold.
    if f_hi.abs() <= f_lo.abs() {
        Ok(hi)
    } else {
        Ok(lo)
    }
}

/// Sign map of the heat current into the right reservoir over a level-energy
/// grid; cooling means J1_R < 0.
#[derive(Debug, Clone)]
pub struct CoolingMap {
    pub eps_left: Vec<f64>,
    pub eps_right: Vec<f64>,
    pub gammas: Vec<f64>,
    /// heat_right[g][(i, k)] = J1_R at (eps_left[i], eps_right[k], gammas[g]).
    pub heat_right: Vec<DMatrix<f64>>,
}

impl CoolingMap {
    pub fn cooling_cells(&self, gamma_index: usize) -> usize {
        self.heat_right[gamma_index].iter().filter(|h| **h < 0.0).count()
    }

    pub fn heat(&self, gamma_index: usize, left_index: usize, right_index: usize) -> f64 {
        self.heat_right[gamma_index][(left_index, right_index)]
    }
}

/// Evaluate J1_R on a (eps_left, eps_right) grid for each monitoring
/// strength. `build` constructs the junction for one grid point.
pub fn cooling_map<B>(
    build: B,
    eps_left: &[f64],
    eps_right: &[f64],
    gammas: &[f64],
    spec: &QuadratureSpec,
) -> Result<CoolingMap>
where
    B: Fn(f64, f64, f64) -> Junction + Sync,
{
    if eps_left.is_empty() || eps_right.is_empty() || gammas.is_empty() {
        return Err(Error::invalid("cooling map grids must be non-empty"));
    }
    let mut heat_right = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let entries: Result<Vec<f64>> = (0..eps_left.len() * eps_right.len())
            .into_par_iter()
            .map(|flat| {
                let i = flat / eps_right.len();
                let k = flat % eps_right.len();
                let junction = build(eps_left[i], eps_right[k], gamma);
                junction.validated()?;
                let tensor = assemble_transfer(&junction, spec)?;
                let correlation = solve_correlation(&tensor)?;
                let (splits, _) = current_components(
                    &junction,
                    Some(&correlation.matrix),
                    &[(Lead::Right, Moment::Heat)],
                    spec,
                )?;
                Ok(splits[0].total())
            })
            .collect();
        let entries = entries?;
        heat_right.push(DMatrix::from_fn(eps_left.len(), eps_right.len(), |i, k| {
            entries[i * eps_right.len() + k]
        }));
    }
    Ok(CoolingMap {
        eps_left: eps_left.to_vec(),
        eps_right: eps_right.to_vec(),
        gammas: gammas.to_vec(),
        heat_right,
    })
}

/// COP = |J1_R / (J1_R + J1_L)| from two heat currents.
pub fn cop_value(j1_right: f64, j1_left: f64) -> Result<f64> {
    let denom = j1_right + j1_left;
    if denom == 0.0 {
        return Err(Error::UndefinedCop);
    }
    Ok((j1_right / denom).abs())
}

/// Coefficient of performance of measurement cooling for a junction.
pub fn cop(junction: &Junction, spec: &QuadratureSpec) -> Result<f64> {
    let result = transport(junction, spec)?;
    cop_value(result.right.heat.total(), result.left.heat.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Hybridization, HybridizationKind, MonitorOperator, Reservoir, SystemHamiltonian,
    };
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

    fn wide_band_level(eps_d: f64, gamma0: f64, gamma: f64) -> Junction {
        let kind =
            HybridizationKind::FlatBand { gamma0, half_bandwidth: 50.0, wide_band: true };
        Junction::new(
            SystemHamiltonian::single_level(eps_d),
            MonitorOperator::site_occupation(1, 0),
            Reservoir::new(Hybridization::on_site(kind.clone(), 0), 0.0, 0.0),
            Reservoir::new(Hybridization::on_site(kind, 0), 0.0, 0.0),
            gamma,
        )
    }

    #[test]
    fn zero_bias_elastic_current_vanishes() {
        let j = two_filter_level(0.4, 0.7);
        for lead in Lead::BOTH {
            for moment in Moment::BOTH {
                let c = elastic_current(&j, lead, moment, &QuadratureSpec::default()).unwrap();
                assert!(c.abs() < 1e-13, "{lead} {moment:?} elastic {c}");
            }
        }
    }

    #[test]
    fn landauer_linear_response_at_resonance() {
        // Unit transmission at T = 0 gives conductance 1/2pi, so a small
        // bias delta_mu produces J0 = delta_mu / 2pi.
        let dmu = 1e-3;
        let mut j = wide_band_level(0.0, 0.3, 0.0);
        j.left.mu = dmu / 2.0;
        j.right.mu = -dmu / 2.0;
        let c = elastic_current(&j, Lead::Right, Moment::Particle, &QuadratureSpec::default())
            .unwrap();
        assert_relative_eq!(c, dmu / (2.0 * PI), max_relative = 1e-6);
    }

    #[test]
    fn inelastic_current_vanishes_without_monitoring() {
        let j = two_filter_level(0.3, 0.0);
        let tensor = assemble_transfer(&j, &QuadratureSpec::default()).unwrap();
        let corr = solve_correlation(&tensor).unwrap();
        let c = inelastic_current(&j, &corr, Lead::Right, Moment::Particle, &QuadratureSpec::default())
            .unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn flat_band_zero_bias_null_current() {
        // With strictly frequency-independent hybridizations the unbiased
        // particle current vanishes for any monitoring strength. Heat
        // currents are not evaluated here: for a wide-band reservoir under
        // monitoring they are ultraviolet-divergent.
        let spec = QuadratureSpec::default();
        for gamma in [0.1, 1.0, 10.0] {
            let j = wide_band_level(0.7, 0.4, gamma);
            let tensor = assemble_transfer(&j, &spec).unwrap();
            let corr = solve_correlation(&tensor).unwrap();
            let j0 = elastic_current(&j, Lead::Right, Moment::Particle, &spec).unwrap()
                + inelastic_current(&j, &corr, Lead::Right, Moment::Particle, &spec).unwrap();
            assert!(j0.abs() <= 1e-9, "gamma {gamma}: J0 = {j0}");
        }
    }

    #[test]
    fn particle_conservation_and_energy_conservation_without_monitoring() {
        let mut j = two_filter_level(0.2, 0.0);
        j.left.mu = 0.3;
        j.right.mu = -0.1;
        j.left.temperature = 0.4;
        j.right.temperature = 0.1;
        let r = transport(&j, &QuadratureSpec::default()).unwrap();
        assert!(r.conservation_defect.abs() < 1e-9);
        let energy = r.energy_current(Lead::Left) + r.energy_current(Lead::Right);
        assert!(energy.abs() < 1e-9, "energy defect {energy}");
    }

    #[test]
    fn monitored_junction_conserves_particles() {
        let mut j = two_filter_level(0.5, 1.3);
        j.left.mu = 0.2;
        j.right.mu = -0.2;
        j.left.temperature = 0.3;
        j.right.temperature = 0.6;
        let r = transport(&j, &QuadratureSpec::default()).unwrap();
        assert!(
            r.conservation_defect.abs() <= 1e-9 * r.left.particle.total().abs().max(1e-3),
            "defect {}",
            r.conservation_defect
        );
    }

    #[test]
    fn unbiased_monitored_junction_drives_nonreciprocal_current() {
        let j = two_filter_level(0.0, 1.0);
        let r = transport(&j, &QuadratureSpec::default()).unwrap();
        assert!(r.through_current().abs() > 1e-4, "J0 = {}", r.through_current());
        // Elastic part is strictly zero at zero bias; everything is inelastic.
        assert!(r.right.particle.elastic.abs() < 1e-13);
    }

    #[test]
    fn resonant_conductance_quantum() {
        let j = wide_band_level(0.0, 0.3, 0.0);
        let g = differential_conductance(&j, 0.0, 1e-4, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(g, 1.0 / (2.0 * PI), max_relative = 1e-6);
    }

    #[test]
    fn conductance_far_off_resonance_vanishes() {
        let j = two_filter_level(0.0, 0.1);
        let g = differential_conductance(&j, 40.0, 1e-4, &QuadratureSpec::default()).unwrap();
        assert!(g.abs() < 1e-8, "G = {g}");
    }

    #[test]
    fn power_vanishes_at_zero_bias_and_at_stopping_voltage() {
        let j = two_filter_level(0.0, 1.0);
        let spec = QuadratureSpec::default();
        let stop = stopping_voltage(&j, &spec).unwrap();
        let points = power_curve(&j, &[0.0, stop], &spec).unwrap();
        assert_eq!(points[0].power, 0.0);
        assert!(points[1].power.abs() < 1e-10 * stop.abs().max(1.0));
    }

    #[test]
    fn stopping_voltage_requires_zero_bias_current() {
        let j = two_filter_level(0.0, 0.0);
        match stopping_voltage(&j, &QuadratureSpec::default()) {
            Err(Error::NoZeroBiasCurrent) => {}
            other => panic!("expected NoZeroBiasCurrent, got {other:?}"),
        }
    }

    #[test]
    fn cop_arithmetic() {
        assert_relative_eq!(cop_value(-1.0, 3.0).unwrap(), 0.5);
        assert_eq!(cop_value(0.0, 2.0).unwrap(), 0.0);
        assert!(matches!(cop_value(1.0, -1.0), Err(Error::UndefinedCop)));
    }
}
