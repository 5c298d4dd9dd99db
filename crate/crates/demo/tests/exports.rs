use std::f64::consts::PI;

use torsion_demo::{image_solution_json, radial_profile_json, schwarz_sweep_json};

#[test]
fn flat_profile_matches_closed_form() {
    let v = radial_profile_json("flat", 0.0, 1.0).unwrap();
    assert!((v["T"].as_f64().unwrap() - PI / 8.0).abs() < 1e-8);
    assert!((v["profile"][0]["u"].as_f64().unwrap() - 0.25).abs() < 1e-8);
    assert_eq!(v["profile"].as_array().unwrap().len(), 101);
    let q: Vec<f64> = v["sweep"].as_array().unwrap().iter().map(|p| p["Q"].as_f64().unwrap()).collect();
    assert!(q.iter().all(|x| (x / q[0] - 1.0).abs() < 1e-6));
}

#[test]
fn sweep_omitted_without_known_tau() {
    let v = radial_profile_json("sphere", 0.5, 1.0).unwrap();
    assert!(v["sweep"].is_null());
    assert!(v["T"].as_f64().unwrap() > 0.0);
    assert!(radial_profile_json("torus", 0.5, 1.0).is_err());
}

#[test]
fn schwarz_ratio_increases() {
    let v = schwarz_sweep_json("quad:0.3", 0.0, 16, 5).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 5);
    assert_eq!(v["nondecreasing"], true);
    let id = schwarz_sweep_json("identity", 0.5, 16, 3).unwrap();
    for p in id["points"].as_array().unwrap() {
        assert!((p["Phi"].as_f64().unwrap() - 1.0).abs() < 2e-2);
    }
}

#[test]
fn image_heatmap() {
    let v = image_solution_json("mobius:0.3", 0.8, 0.5, 12).unwrap();
    let n = v["vertices"].as_array().unwrap().len();
    assert_eq!(v["u"].as_array().unwrap().len(), n);
    assert!(v["triangles"].as_array().unwrap().iter().flat_map(|t| t.as_array().unwrap()).all(|i| (i.as_u64().unwrap() as usize) < n));
    let (t, t_pull) = (v["T"].as_f64().unwrap(), v["T_pullback"].as_f64().unwrap());
    assert!((t / t_pull - 1.0).abs() < 5e-2, "{t} vs {t_pull}");
    assert!(image_solution_json("quad:0.9", 0.9, 0.5, 8).is_err());
}
