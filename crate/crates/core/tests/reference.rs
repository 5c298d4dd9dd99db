//! Cross-checks of the FEM kernels against the shooting oracle and closed
//! forms, beyond the acceptance suite.

use std::f64::consts::PI;

use torsion_core::conformal::{rigidity_of_image, ConformalMap};
use torsion_core::functionals::rigidity;
use torsion_core::geometry::RadialMetric;
use torsion_core::mesh::{build_disk_mesh, TriMesh};
use torsion_core::radial_oracle::{oracle_rigidity, shoot_eigen, shoot_torsion, DEFAULT_SHOOT_TOL};
use torsion_core::shape::{shape_derivative_eigen, shape_derivative_torsion, FlowSpec};
use torsion_core::solver::{cg_solve, solve_eigen, solve_torsion, Discretization, SolveOptions, WeightField};

fn ones(mesh: &TriMesh) -> WeightField {
    WeightField::ones(mesh.n_vertices())
}

fn oracle_t(gamma: f64, radius: f64) -> f64 {
    oracle_rigidity(&shoot_torsion(&RadialMetric::flat(), gamma, radius, DEFAULT_SHOOT_TOL).unwrap()).t
}

#[test]
fn fem_profile_matches_oracle() {
    let mesh = build_disk_mesh(1.0, 60).unwrap();
    let w = ones(&mesh);
    let sol = solve_torsion(&mesh, &w, 0.5, &SolveOptions::default()).unwrap();
    let profile = shoot_torsion(&RadialMetric::flat(), 0.5, 1.0, DEFAULT_SHOOT_TOL).unwrap();
    let mut worst: f64 = 0.0;
    for (p, u) in mesh.vertices().iter().zip(&sol.u) {
        worst = worst.max((u - profile.u_at(p[0].hypot(p[1]))).abs());
    }
    assert!(worst / profile.alpha < 5e-3, "max-norm error {worst}");
}

#[test]
fn fem_rigidity_matches_oracle() {
    let mesh = build_disk_mesh(1.0, 60).unwrap();
    let w = ones(&mesh);
    for gamma in [0.0, 0.3, 0.6] {
        let t = rigidity(&solve_torsion(&mesh, &w, gamma, &SolveOptions::default()).unwrap()).t_power;
        let exact = oracle_t(gamma, 1.0);
        assert!((t - exact).abs() / exact < 5e-3, "gamma={gamma}: {t} vs {exact}");
    }
}

#[test]
fn rigidity_converges_at_second_order() {
    let exact = oracle_t(0.3, 1.0);
    let errors: Vec<f64> = [20, 40, 80]
        .iter()
        .map(|&n| {
            let mesh = build_disk_mesh(1.0, n).unwrap();
            let w = ones(&mesh);
            let t = rigidity(&solve_torsion(&mesh, &w, 0.3, &SolveOptions::default()).unwrap()).t_power;
            (t - exact).abs()
        })
        .collect();
    for pair in errors.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!(order >= 1.8, "observed order {order} from {errors:?}");
    }
}

#[test]
fn linear_problem_needs_one_picard_step() {
    let mesh = build_disk_mesh(1.0, 10).unwrap();
    let w = ones(&mesh);
    let sol = solve_torsion(&mesh, &w, 0.0, &SolveOptions::default()).unwrap();
    assert!(sol.iterations <= 1);
}

#[test]
fn cg_on_stiffness_gives_linear_torsion() {
    let mesh = build_disk_mesh(1.0, 12).unwrap();
    let w = ones(&mesh);
    let disc = Discretization::new(&mesh, &w).unwrap();
    let b = disc.source_load(&vec![1.0; mesh.n_vertices()], 0.0);
    let x = cg_solve(disc.stiffness(), &b, 1e-12, None).unwrap();
    let sol = solve_torsion(&mesh, &w, 0.0, &SolveOptions::default()).unwrap();
    let u = disc.extend(&x);
    for (a, b) in u.iter().zip(&sol.u) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn eigenvalue_homogeneity() {
    let opts = SolveOptions::default();
    let m1 = build_disk_mesh(1.0, 40).unwrap();
    let m2 = build_disk_mesh(2.0, 40).unwrap();
    let (w1, w2) = (ones(&m1), ones(&m2));
    let l1 = solve_eigen(&m1, &w1, &opts).unwrap();
    let l2 = solve_eigen(&m2, &w2, &opts).unwrap();
    assert!((l2.lambda - l1.lambda / 4.0).abs() / l2.lambda < 1e-3);
    let d1 = shape_derivative_eigen(&l1, &FlowSpec::radial());
    let d2 = shape_derivative_eigen(&l2, &FlowSpec::radial());
    assert!((d2 - d1 / 8.0).abs() / d2.abs() < 1e-2, "{d1} {d2}");
    assert_eq!(shape_derivative_eigen(&l1, &FlowSpec::zero()), 0.0);
}

#[test]
fn torsion_variation_follows_scaling_law() {
    let mesh = build_disk_mesh(1.0, 60).unwrap();
    let w = ones(&mesh);
    let sol = solve_torsion(&mesh, &w, 0.5, &SolveOptions::default()).unwrap();
    let d = shape_derivative_torsion(&sol, &FlowSpec::radial()).unwrap();
    let expected = 4.0 / 0.5 * oracle_t(0.5, 1.0);
    assert!((d - expected).abs() / expected < 2e-2, "{d} vs {expected}");
}

#[test]
fn curved_disks_match_the_oracle() {
    let opts = SolveOptions::default();
    for (name, radius) in [("sphere", 1.0), ("hyperbolic", 1.5), ("cone:0.5:0.2", 1.0)] {
        let metric = RadialMetric::parse(name).unwrap();
        let iso = metric.isothermal_chart(radius).unwrap();
        let mesh = build_disk_mesh(iso.chart_radius, 40).unwrap();
        let w = WeightField::from_chart(&mesh, &iso.chart).unwrap();
        let t = rigidity(&solve_torsion(&mesh, &w, 0.3, &opts).unwrap()).t_power;
        let exact = oracle_rigidity(&shoot_torsion(&metric, 0.3, radius, DEFAULT_SHOOT_TOL).unwrap()).t;
        assert!((t - exact).abs() / exact < 1e-2, "{name}: {t} vs {exact}");
        let lambda = solve_eigen(&mesh, &w, &opts).unwrap().lambda;
        let oracle = shoot_eigen(&metric, radius, 1e-12).unwrap();
        assert!((lambda - oracle).abs() / oracle < 1e-2, "{name}: {lambda} vs {oracle}");
    }
}

#[test]
fn image_rigidity_examples() {
    let opts = SolveOptions::default();
    let t = rigidity_of_image(&ConformalMap::Identity, 1.0, 0.0, 40, &opts).unwrap();
    assert!((t - PI / 8.0).abs() / (PI / 8.0) < 5e-3);
    let map = ConformalMap::linear(num_complex::Complex64::new(0.0, 2.0), num_complex::Complex64::new(5.0, 1.0)).unwrap();
    let t_map = rigidity_of_image(&map, 0.7, 0.3, 40, &opts).unwrap();
    let t_disk = rigidity_of_image(&ConformalMap::Identity, 0.7, 0.3, 40, &opts).unwrap();
    assert!((t_map / t_disk - 2f64.powf(4.0 / 0.7)).abs() / 2f64.powf(4.0 / 0.7) < 1e-9);
}
