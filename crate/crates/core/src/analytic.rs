//! Closed-form scalar implementations of the two worked junction models:
//! a monitored single level between two reservoirs, and two uncoupled
//! levels joined only by cross-correlation monitoring. These serve as exact
//! oracles for the general matrix engine and as fast paths for parameter
//! sweeps.
//!
//! All double frequency integrals factorize into products of single
//! integrals because the kernels separate as g(w) h(w') minus cross terms.

use crate::error::{Error, Result};
use crate::model::{HybridizationKind, Lead};
use crate::numerics::{integrate, QuadratureSpec};
use num_complex::Complex64;
use std::f64::consts::PI;

/// One reservoir seen by a scalar model: kernel plus thermal state.
#[derive(Debug, Clone)]
pub struct ScalarReservoir {
    pub kind: HybridizationKind,
    pub mu: f64,
    pub temperature: f64,
}

impl ScalarReservoir {
    pub fn new(kind: HybridizationKind, mu: f64, temperature: f64) -> Self {
        ScalarReservoir { kind, mu, temperature }
    }

    pub fn fermi(&self, omega: f64) -> f64 {
        crate::model::fermi_unchecked(omega, self.mu, self.temperature)
    }

    pub fn gamma(&self, omega: f64) -> f64 {
        self.kind.value(omega)
    }

    pub fn sigma(&self, omega: f64) -> Complex64 {
        self.kind.retarded(omega)
    }

    fn check(&self) -> Result<()> {
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::invalid(format!(
                "reservoir temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::invalid("reservoir chemical potential must be finite"));
        }
        Ok(())
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.kind.breakpoints();
        b.push(self.mu);
        b
    }
}

/// Elastic/inelastic/total split of a scalar-model current.
#[derive(Debug, Clone, Copy)]
pub struct CurrentParts {
    pub elastic: f64,
    pub inelastic: f64,
}

impl CurrentParts {
    pub fn total(&self) -> f64 {
        self.elastic + self.inelastic
    }
}

// ---------------------------------------------------------------------------
// Monitored single level
// ---------------------------------------------------------------------------

/// Single level of energy eps_d whose occupation is monitored at strength
/// gamma, coupled to two reservoirs through scalar self-energies.
#[derive(Debug, Clone)]
pub struct SingleLevelModel {
    pub eps_d: f64,
    pub gamma: f64,
    pub left: ScalarReservoir,
    pub right: ScalarReservoir,
}

impl SingleLevelModel {
    fn check(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        self.left.check()?;
        self.right.check()
    }

    fn reservoir(&self, lead: Lead) -> &ScalarReservoir {
        match lead {
            Lead::Left => &self.left,
            Lead::Right => &self.right,
        }
    }

    fn quadrature(&self, spec: &QuadratureSpec) -> QuadratureSpec {
        let mut bps = vec![self.eps_d];
        bps.extend(self.left.breakpoints());
        bps.extend(self.right.breakpoints());
        spec.with_breakpoints(bps)
    }

    /// Dressed level resolvent 1 / (w - eps_d - Sigma_L - Sigma_R + i gamma).
    pub fn resolvent(&self, omega: f64) -> Complex64 {
        (Complex64::new(omega - self.eps_d, self.gamma)
            - self.left.sigma(omega)
            - self.right.sigma(omega))
        .inv()
    }

    /// Spectral function (Gamma_L + Gamma_R + gamma) |g|^2 / pi.
    pub fn spectral(&self, omega: f64) -> f64 {
        let width = self.left.gamma(omega) + self.right.gamma(omega) + self.gamma;
        width * self.resolvent(omega).norm_sqr() / PI
    }

    /// Escape weight P_r = Gamma_r / (Gamma_L + Gamma_R + gamma).
    pub fn escape_weight(&self, lead: Lead, omega: f64) -> f64 {
        self.reservoir(lead).gamma(omega)
            / (self.left.gamma(omega) + self.right.gamma(omega) + self.gamma)
    }

    /// Stationary occupation
    /// <n> = Int A (f_L P_L + f_R P_R) / Int A (P_L + P_R).
    pub fn occupation(&self, spec: &QuadratureSpec) -> Result<f64> {
        self.check()?;
        let m = self.moments(spec)?;
        Ok((m.q_left + m.q_right) / (m.p_left + m.p_right))
    }

    /// Particle current J0 = J0_R through the level, split into the
    /// Breit-Wigner elastic part and the monitor-mediated inelastic part.
    pub fn particle_current(&self, spec: &QuadratureSpec) -> Result<CurrentParts> {
        self.check()?;
        let qspec = self.quadrature(spec);
        let elastic = integrate(
            |w| {
                let gl = self.left.gamma(w);
                let gr = self.right.gamma(w);
                let a = self.spectral(w);
                2.0 * a * gl * gr / (gl + gr + self.gamma)
                    * (self.left.fermi(w) - self.right.fermi(w))
            },
            &qspec,
        )?
        .value;
        let m = self.moments(spec)?;
        let occupation = (m.q_left + m.q_right) / (m.p_left + m.p_right);
        // Factorized double integral: 2 gamma (q_L p_R - p_L q_R) / (p_L + p_R).
        let inelastic = 2.0 * self.gamma * (occupation * m.p_right - m.q_right);
        Ok(CurrentParts { elastic, inelastic })
    }

    fn moments(&self, spec: &QuadratureSpec) -> Result<LevelMoments> {
        let qspec = self.quadrature(spec);
        let weighted = |lead: Lead, with_fermi: bool| -> Result<f64> {
            Ok(integrate(
                |w| {
                    let a = self.spectral(w) * self.escape_weight(lead, w);
                    if with_fermi {
                        a * self.reservoir(lead).fermi(w)
                    } else {
                        a
                    }
                },
                &qspec,
            )?
            .value)
        };
        Ok(LevelMoments {
            p_left: weighted(Lead::Left, false)?,
            p_right: weighted(Lead::Right, false)?,
            q_left: weighted(Lead::Left, true)?,
            q_right: weighted(Lead::Right, true)?,
        })
    }
}

struct LevelMoments {
    p_left: f64,
    p_right: f64,
    q_left: f64,
    q_right: f64,
}

// ---------------------------------------------------------------------------
// Cross-correlation-monitored pair of levels
// ---------------------------------------------------------------------------

/// Two uncoupled levels eps_L, eps_R joined only by monitoring of their
/// cross-correlation. Without inter-site hopping the off-diagonal Green's
/// functions vanish and transport is purely inelastic.
#[derive(Debug, Clone)]
pub struct TwoSiteModel {
    pub eps_left: f64,
    pub eps_right: f64,
    pub gamma: f64,
    pub left: ScalarReservoir,
    pub right: ScalarReservoir,
}

impl TwoSiteModel {
    fn check(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        self.left.check()?;
        self.right.check()
    }

    fn level(&self, lead: Lead) -> f64 {
        match lead {
            Lead::Left => self.eps_left,
            Lead::Right => self.eps_right,
        }
    }

    fn reservoir(&self, lead: Lead) -> &ScalarReservoir {
        match lead {
            Lead::Left => &self.left,
            Lead::Right => &self.right,
        }
    }

    fn quadrature(&self, spec: &QuadratureSpec) -> QuadratureSpec {
        let mut bps = vec![self.eps_left, self.eps_right];
        bps.extend(self.left.breakpoints());
        bps.extend(self.right.breakpoints());
        spec.with_breakpoints(bps)
    }

    /// Spectral function of one level, A_r = (Gamma_r + gamma)|g_r|^2 / pi.
    pub fn spectral(&self, lead: Lead, omega: f64) -> f64 {
        let g = (Complex64::new(omega - self.level(lead), self.gamma)
            - self.reservoir(lead).sigma(omega))
        .inv();
        (self.reservoir(lead).gamma(omega) + self.gamma) * g.norm_sqr() / PI
    }

    /// P_r = Gamma_r / (Gamma_r + gamma) for this model.
    pub fn escape_weight(&self, lead: Lead, omega: f64) -> f64 {
        let g = self.reservoir(lead).gamma(omega);
        g / (g + self.gamma)
    }

    /// Stationary occupations (<n_L>, <n_R>).
    pub fn occupations(&self, spec: &QuadratureSpec) -> Result<(f64, f64)> {
        self.check()?;
        let m = self.moments(spec)?;
        Ok((m.occupation(Lead::Left)?, m.occupation(Lead::Right)?))
    }

    /// Heat current J1_R flowing into the right reservoir; negative values
    /// mean the reservoir is being cooled by the measurement.
    pub fn heat_current_right(&self, spec: &QuadratureSpec) -> Result<f64> {
        self.check()?;
        self.heat_current(Lead::Right, spec)
    }

    /// Heat current J1_L into the left reservoir (mirror of
    /// `heat_current_right`), needed for the coefficient of performance.
    pub fn heat_current_left(&self, spec: &QuadratureSpec) -> Result<f64> {
        self.check()?;
        self.heat_current(Lead::Left, spec)
    }

    /// Particle current J0_R into the right reservoir.
    pub fn particle_current_right(&self, spec: &QuadratureSpec) -> Result<f64> {
        self.check()?;
        let m = self.moments(spec)?;
        let n_other = m.occupation(Lead::Left)?;
        Ok(2.0 * self.gamma * (m.a[1] * n_other - m.b[1]))
    }

    fn heat_current(&self, lead: Lead, spec: &QuadratureSpec) -> Result<f64> {
        let qspec = self.quadrature(spec);
        let res = self.reservoir(lead);
        let kernel = |w: f64, with_fermi: bool| {
            let v = (w - res.mu) * self.spectral(lead, w) * self.escape_weight(lead, w);
            if with_fermi {
                v * res.fermi(w)
            } else {
                v
            }
        };
        let e = integrate(|w| kernel(w, false), &qspec)?.value;
        let h = integrate(|w| kernel(w, true), &qspec)?.value;
        let m = self.moments(spec)?;
        let n_other = m.occupation(lead.other())?;
        Ok(2.0 * self.gamma * (e * n_other - h))
    }

    /// Spectral function of one level with the monitoring broadening
    /// dropped, i.e. evaluated at gamma = 0.
    pub fn spectral_unmonitored(&self, lead: Lead, omega: f64) -> f64 {
        let g = (Complex64::new(omega - self.level(lead), 0.0)
            - self.reservoir(lead).sigma(omega))
        .inv();
        self.reservoir(lead).gamma(omega) * g.norm_sqr() / PI
    }

    /// Leading small-gamma heat current,
    /// 2 gamma Int (w - mu_R) A_R [ <n_L>_eq - f_R ] dw,
    /// with the escape weights replaced by one and the spectral functions
    /// taken at zeroth order in gamma. (Keeping the gamma broadening inside
    /// A_R would make the (w - mu_R)-weighted tail log-divergent, so the
    /// consistent leading-order expression drops it.)
    pub fn small_gamma_heat_right(&self, spec: &QuadratureSpec) -> Result<f64> {
        self.check()?;
        let qspec = self.quadrature(spec);
        let n_left_eq = integrate(
            |w| self.spectral_unmonitored(Lead::Left, w) * self.left.fermi(w),
            &qspec,
        )?
        .value;
        let r = integrate(
            |w| {
                (w - self.right.mu)
                    * self.spectral_unmonitored(Lead::Right, w)
                    * (n_left_eq - self.right.fermi(w))
            },
            &qspec,
        )?
        .value;
        Ok(2.0 * self.gamma * r)
    }

    fn moments(&self, spec: &QuadratureSpec) -> Result<SiteMoments> {
        let qspec = self.quadrature(spec);
        let mut a = [0.0; 2];
        let mut b = [0.0; 2];
        for (k, lead) in Lead::BOTH.into_iter().enumerate() {
            a[k] = integrate(
                |w| self.spectral(lead, w) * self.escape_weight(lead, w),
                &qspec,
            )?
            .value;
            b[k] = integrate(
                |w| {
                    self.spectral(lead, w)
                        * self.escape_weight(lead, w)
                        * self.reservoir(lead).fermi(w)
                },
                &qspec,
            )?
            .value;
        }
        Ok(SiteMoments { a, b })
    }
}

/// Single integrals a_r = Int P_r A_r and b_r = Int f_r P_r A_r; the
/// occupations follow from the linear pair
/// n_r = b_r + (1 - a_r) n_rbar with denominator N = a_L + a_R - a_L a_R.
struct SiteMoments {
    a: [f64; 2],
    b: [f64; 2],
}

impl SiteMoments {
    fn occupation(&self, lead: Lead) -> Result<f64> {
        let (this, other) = match lead {
            Lead::Left => (0, 1),
            Lead::Right => (1, 0),
        };
        let denom = self.a[0] + self.a[1] - self.a[0] * self.a[1];
        if denom.abs() < 1e-14 {
            return Err(Error::DegenerateDenominator { denominator: denom });
        }
        Ok((self.b[this] + (1.0 - self.a[this]) * self.b[other]) / denom)
    }
}
