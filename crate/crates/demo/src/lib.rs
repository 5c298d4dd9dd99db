//! Browser front end for the torsion lab. Each export takes plain numbers
//! and strings and returns a JSON document for the page to draw.

use serde_json::{json, Value};
use torsion_core::conformal::{map_mesh, pullback_weight, schwarz_ratio_sweep, ConformalMap};
use torsion_core::functionals::rigidity;
use torsion_core::geometry::RadialMetric;
use torsion_core::mesh::build_disk_mesh;
use torsion_core::radial_oracle::{oracle_rigidity, shoot_torsion, sweep_q, DEFAULT_SHOOT_TOL};
use torsion_core::solver::{solve_torsion, SolveOptions, WeightField};
use torsion_core::Error;
use wasm_bindgen::prelude::*;

const MAX_RINGS: usize = 48;
const MAX_POINTS: usize = 24;

fn to_js(result: Result<Value, Error>) -> Result<String, JsValue> {
    result.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e.to_string()))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64).collect()
}

/// Radial profile `u(r)` on the geodesic disk of radius `radius`, and the
/// monotone quotient `Q(r)` on `(0, radius]` when the metric has a known
/// isoperimetric constant.
pub fn radial_profile_json(metric: &str, gamma: f64, radius: f64) -> Result<Value, Error> {
    let metric = RadialMetric::parse(metric)?;
    let profile = shoot_torsion(&metric, gamma, radius, DEFAULT_SHOOT_TOL)?;
    let oracle = oracle_rigidity(&profile);
    let samples: Vec<Value> = linspace(0.0, radius, 101)
        .into_iter()
        .map(|r| json!({ "r": r, "u": profile.u_at(r) }))
        .collect();
    let sweep = match metric.exact_tau() {
        Some(tau) => {
            let grid = linspace(radius / 20.0, radius, 20);
            json!(sweep_q(&metric, gamma, &tau, &grid)?)
        }
        None => Value::Null,
    };
    Ok(json!({
        "metric": metric.name(),
        "gamma": gamma,
        "radius": radius,
        "alpha": profile.alpha,
        "T": oracle.t,
        "profile": samples,
        "sweep": sweep,
    }))
}

/// `Φ(f; r)` at `points` radii spread over the univalence disk of `map`.
pub fn schwarz_sweep_json(map: &str, gamma: f64, n_rings: usize, points: usize) -> Result<Value, Error> {
    let map: ConformalMap = map.parse()?;
    let rho = map.univalence_radius();
    let points = points.clamp(2, MAX_POINTS);
    let grid = linspace(0.1 * rho, 0.9 * rho, points);
    let sweep = schwarz_ratio_sweep(&map, gamma, &grid, n_rings.clamp(4, MAX_RINGS), &SolveOptions::default())?;
    Ok(json!(sweep))
}

/// Solves on the image `f(B_radius)` and returns the mesh with nodal values
/// for a heat map.
pub fn image_solution_json(map: &str, radius: f64, gamma: f64, n_rings: usize) -> Result<Value, Error> {
    let map: ConformalMap = map.parse()?;
    let disk = build_disk_mesh(radius, n_rings.clamp(2, MAX_RINGS))?;
    let image = map_mesh(&disk, &map)?;
    let flat = WeightField::ones(image.n_vertices());
    let sol = solve_torsion(&image, &flat, gamma, &SolveOptions::default())?;
    let report = rigidity(&sol);
    let pulled = pullback_weight(&map, &disk)?;
    let on_disk = solve_torsion(&disk, &pulled, gamma, &SolveOptions::default())?;
    Ok(json!({
        "map": map.to_string(),
        "gamma": gamma,
        "radius": radius,
        "T": report.t_grad,
        "T_pullback": rigidity(&on_disk).t_grad,
        "max_u": sol.max_value(),
        "vertices": image.vertices(),
        "triangles": image.triangles(),
        "u": sol.u,
    }))
}

#[wasm_bindgen]
pub fn radial_profile(metric: &str, gamma: f64, radius: f64) -> Result<String, JsValue> {
    to_js(radial_profile_json(metric, gamma, radius))
}

#[wasm_bindgen]
pub fn schwarz_sweep(map: &str, gamma: f64, n_rings: usize, points: usize) -> Result<String, JsValue> {
    to_js(schwarz_sweep_json(map, gamma, n_rings, points))
}

#[wasm_bindgen]
pub fn image_solution(map: &str, radius: f64, gamma: f64, n_rings: usize) -> Result<String, JsValue> {
    to_js(image_solution_json(map, radius, gamma, n_rings))
}
