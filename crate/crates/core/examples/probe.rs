// Scratch numerical probe used during development; not part of the library.
use monitored_transport::currents::{differential_conductance, power_curve, transport};
use monitored_transport::model::{Lead, Moment};
use monitored_transport::oracle::{discretize, oracle_currents, steady_state};
use monitored_transport::scenarios::{CrossCorrelationCooler, TwoFilterLevel};
use monitored_transport::QuadratureSpec;

fn main() {
    let spec = QuadratureSpec::default();

    println!("=== symmetric two-site junction, gamma = 0.8 ===");
    let sym = CrossCorrelationCooler {
        eps_left: 2.0,
        eps_right: 2.0,
        gamma: 0.8,
        t_left: 1.0,
        t_right: 1.0,
        ..CrossCorrelationCooler::new(2.0, 2.0, 0.8)
    };
    let model = sym.analytic();
    let j1r_analytic = model.heat_current_right(&spec).unwrap();
    let j1l_analytic = model.heat_current_left(&spec).unwrap();
    let j0r_analytic = model.particle_current_right(&spec).unwrap();
    println!("analytic: J1_R = {j1r_analytic:.8}, J1_L = {j1l_analytic:.8}, J0_R = {j0r_analytic:.3e}");
    let engine = transport(&sym.junction(), &spec).unwrap();
    println!(
        "engine:   J1_R = {:.8}, J1_L = {:.8}, J0_R = {:.3e}",
        engine.right.heat.total(),
        engine.left.heat.total(),
        engine.through_current()
    );
    for m in [100usize, 200] {
        let dj = discretize(&sym.junction(), m, Some((-15.0, 20.0)), None).unwrap();
        let st = steady_state(&dj).unwrap();
        let oc = oracle_currents(&dj, &st);
        println!(
            "oracle M={m}: J1_R = {:.8}, J1_L = {:.8}, J0_R = {:.3e}",
            oc.right.1, oc.left.1, oc.right.0
        );
    }

    println!("\n=== reference cooling point, gamma = 0.1 ===");
    let cool = CrossCorrelationCooler::reference_point(0.1);
    let model = cool.analytic();
    println!(
        "analytic: J1_R = {:.8}",
        model.heat_current_right(&spec).unwrap()
    );
    let engine = transport(&cool.junction(), &spec).unwrap();
    println!(
        "engine:   J1_R = {:.8} (elastic {:.3e})",
        engine.right.heat.total(),
        engine.right.heat.elastic
    );

    println!("\n=== two-filter level, gamma = 1: engine vs analytic ===");
    let level = TwoFilterLevel::new(0.0, 1.0);
    let m = level.analytic();
    let occ = m.occupation(&spec).unwrap();
    let cur = m.particle_current(&spec).unwrap();
    println!("analytic: n = {occ:.10}, J0 = {:.10} (el {:.3e})", cur.total(), cur.elastic);
    let engine = transport(&level.junction(), &spec).unwrap();
    println!(
        "engine:   n = {:.10}, J0 = {:.10} (el {:.3e}, inel {:.10})",
        engine.correlation.matrix[(0, 0)].re,
        engine.through_current(),
        engine.right.particle.elastic,
        engine.right.particle.inelastic
    );
    for m in [100usize, 200, 400] {
        let dj = discretize(&level.junction(), m, Some((-35.0, 35.0)), None).unwrap();
        let st = steady_state(&dj).unwrap();
        let oc = oracle_currents(&dj, &st);
        println!(
            "oracle M={m} (band 70, kappa 2dx): J0 = {:.8}  rel err {:.3e}",
            oc.right.0,
            (oc.right.0 - engine.through_current()).abs() / engine.through_current().abs()
        );
    }
    for m in [100usize, 200, 400] {
        let dj = discretize(&level.junction(), m, Some((-35.0, 35.0)), Some(70.0 / m as f64))
            .unwrap();
        let st = steady_state(&dj).unwrap();
        let oc = oracle_currents(&dj, &st);
        println!(
            "oracle M={m} (band 70, kappa 1dx): J0 = {:.8}  rel err {:.3e}",
            oc.right.0,
            (oc.right.0 - engine.through_current()).abs() / engine.through_current().abs()
        );
    }

    println!("\n=== power curve factor check, gamma = 0.1 ===");
    let weak = TwoFilterLevel::new(0.0, 0.1);
    let j = weak.junction();
    let g = differential_conductance(&j, 0.0, 1e-4, &spec).unwrap();
    let engine = transport(&j, &spec).unwrap();
    let j0 = engine.through_current();
    println!("J0|_0 = {j0:.8}, G = {g:.8}");
    println!("J0^2/(2G) = {:.8}, J0^2/(4G) = {:.8}", j0 * j0 / (2.0 * g), j0 * j0 / (4.0 * g));
    let stop_est = j0 / g;
    let grid: Vec<f64> = (0..61).map(|k| stop_est * 1.2 * k as f64 / 60.0).collect();
    let pts = power_curve(&j, &grid, &spec).unwrap();
    let pmax = pts.iter().map(|p| p.power).fold(f64::NEG_INFINITY, f64::max);
    let pmax_lin = pts
        .iter()
        .map(|p| p.linear_response)
        .fold(f64::NEG_INFINITY, f64::max);
    println!("max P = {pmax:.8}, max P_lin = {pmax_lin:.8}");

    println!("\n=== conservation with complex Hamiltonian, gamma > 0 ===");
    use monitored_transport::model::{
        Hybridization, HybridizationKind, Junction, MonitorOperator, Reservoir, SystemHamiltonian,
    };
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    let h = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.3, 0.0),
            Complex64::new(0.4, 0.7),
            Complex64::new(0.4, -0.7),
            Complex64::new(-0.5, 0.0),
        ],
    );
    let o = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.2, 0.1),
            Complex64::new(0.2, -0.1),
            Complex64::new(-0.3, 0.0),
        ],
    );
    let jc = Junction::new(
        SystemHamiltonian::new(h).unwrap(),
        MonitorOperator::new(o).unwrap(),
        Reservoir::new(
            Hybridization::on_site(
                HybridizationKind::LorentzianFilter { coupling: 1.0, width: 0.5, center: -1.0 },
                0,
            ),
            0.25,
            0.3,
        ),
        Reservoir::new(
            Hybridization::on_site(
                HybridizationKind::LorentzianFilter { coupling: 0.8, width: 0.8, center: 1.2 },
                1,
            ),
            -0.15,
            0.6,
        ),
        1.4,
    );
    let r = transport(&jc, &spec).unwrap();
    println!(
        "J0_L = {:.10}, J0_R = {:.10}, defect = {:.3e}",
        r.left.particle.total(),
        r.right.particle.total(),
        r.conservation_defect
    );
    println!(
        "elastic parts: L {:.6e}, R {:.6e} (sum {:.3e})",
        r.left.particle.elastic,
        r.right.particle.elastic,
        r.left.particle.elastic + r.right.particle.elastic
    );
    let _ = (Lead::Left, Moment::Heat);
}
