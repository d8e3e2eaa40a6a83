//! Ready-made junction builders for the two reference devices: the
//! two-filter monitored level (a measurement-driven particle pump) and the
//! cross-correlation-monitored level pair (a measurement-driven cooler).
//! Each builder has a matching closed-form model in `analytic`.

use crate::analytic::{ScalarReservoir, SingleLevelModel, TwoSiteModel};
use crate::model::{
    Hybridization, HybridizationKind, Junction, MonitorOperator, Reservoir, SystemHamiltonian,
};

/// Monitored single level coupled to two reservoirs through Lorentzian
/// energy filters placed antisymmetrically at +/- `filter_offset`. The
/// defaults maximize the unbiased monitor-driven current.
#[derive(Debug, Clone)]
pub struct TwoFilterLevel {
    pub eps_d: f64,
    pub gamma: f64,
    /// Right filter sits at +offset, left filter at -offset.
    pub filter_offset: f64,
    pub filter_width: f64,
    /// Level-filter tunnel coupling (the reference energy unit).
    pub coupling: f64,
    pub mu_left: f64,
    pub mu_right: f64,
    pub t_left: f64,
    pub t_right: f64,
}

impl TwoFilterLevel {
    pub fn new(eps_d: f64, gamma: f64) -> Self {
        TwoFilterLevel {
            eps_d,
            gamma,
            filter_offset: 1.48,
            filter_width: 0.55,
            coupling: 1.0,
            mu_left: 0.0,
            mu_right: 0.0,
            t_left: 0.0,
            t_right: 0.0,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.t_left = temperature;
        self.t_right = temperature;
        self
    }

    fn kind(&self, center: f64) -> HybridizationKind {
        HybridizationKind::LorentzianFilter {
            coupling: self.coupling,
            width: self.filter_width,
            center,
        }
    }

    pub fn junction(&self) -> Junction {
        Junction::new(
            SystemHamiltonian::single_level(self.eps_d),
            MonitorOperator::site_occupation(1, 0),
            Reservoir::new(
                Hybridization::on_site(self.kind(-self.filter_offset), 0),
                self.mu_left,
                self.t_left,
            ),
            Reservoir::new(
                Hybridization::on_site(self.kind(self.filter_offset), 0),
                self.mu_right,
                self.t_right,
            ),
            self.gamma,
        )
    }

    /// Closed-form twin of `junction`.
    pub fn analytic(&self) -> SingleLevelModel {
        SingleLevelModel {
            eps_d: self.eps_d,
            gamma: self.gamma,
            left: ScalarReservoir::new(self.kind(-self.filter_offset), self.mu_left, self.t_left),
            right: ScalarReservoir::new(self.kind(self.filter_offset), self.mu_right, self.t_right),
        }
    }
}

/// Two uncoupled levels whose cross-correlation is monitored; each level is
/// read through a filter aligned with its own energy. Cooling the right
/// reservoir means J1_R < 0.
#[derive(Debug, Clone)]
pub struct CrossCorrelationCooler {
    pub eps_left: f64,
    pub eps_right: f64,
    pub gamma: f64,
    pub filter_width: f64,
    pub coupling: f64,
    pub mu_left: f64,
    pub mu_right: f64,
    pub t_left: f64,
    pub t_right: f64,
}

impl CrossCorrelationCooler {
    pub fn new(eps_left: f64, eps_right: f64, gamma: f64) -> Self {
        CrossCorrelationCooler {
            eps_left,
            eps_right,
            gamma,
            filter_width: 0.5,
            coupling: 1.0,
            mu_left: 0.0,
            mu_right: 0.0,
            t_left: 1.0,
            t_right: 1.0,
        }
    }

    /// Operating point used for the cooling benchmarks:
    /// eps_L = 10, eps_R = 3, both reservoirs at temperature 1.
    pub fn reference_point(gamma: f64) -> Self {
        CrossCorrelationCooler::new(10.0, 3.0, gamma)
    }

    fn kind(&self, center: f64) -> HybridizationKind {
        HybridizationKind::LorentzianFilter {
            coupling: self.coupling,
            width: self.filter_width,
            center,
        }
    }

    pub fn junction(&self) -> Junction {
        Junction::new(
            SystemHamiltonian::diagonal(&[self.eps_left, self.eps_right]),
            MonitorOperator::cross_correlation(2, 0, 1),
            Reservoir::new(
                Hybridization::on_site(self.kind(self.eps_left), 0),
                self.mu_left,
                self.t_left,
            ),
            Reservoir::new(
                Hybridization::on_site(self.kind(self.eps_right), 1),
                self.mu_right,
                self.t_right,
            ),
            self.gamma,
        )
    }

    /// Closed-form twin of `junction`.
    pub fn analytic(&self) -> TwoSiteModel {
        TwoSiteModel {
            eps_left: self.eps_left,
            eps_right: self.eps_right,
            gamma: self.gamma,
            left: ScalarReservoir::new(self.kind(self.eps_left), self.mu_left, self.t_left),
            right: ScalarReservoir::new(self.kind(self.eps_right), self.mu_right, self.t_right),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_produce_valid_junctions() {
        assert!(TwoFilterLevel::new(0.0, 1.0).junction().validate().is_ok());
        assert!(CrossCorrelationCooler::reference_point(0.5)
            .junction()
            .validate()
            .is_ok());
    }

    #[test]
    fn cooler_filters_are_aligned_with_levels() {
        let c = CrossCorrelationCooler::new(4.0, -2.0, 0.3);
        let j = c.junction();
        match &j.left.hybridization.kind {
            HybridizationKind::LorentzianFilter { center, .. } => assert_eq!(*center, 4.0),
            _ => panic!("unexpected hybridization"),
        }
        match &j.right.hybridization.kind {
            HybridizationKind::LorentzianFilter { center, .. } => assert_eq!(*center, -2.0),
            _ => panic!("unexpected hybridization"),
        }
    }
}
