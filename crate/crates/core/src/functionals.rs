//! Integral functionals of discrete torsion and eigen solutions.
//!
//! Boundary quantities use a recovered normal derivative on each boundary
//! edge (see [`FluxRecovery`]). With a conformal weight `w = e^{2φ}` the metric
//! factors are `|∇u|_g = e^{−φ}|∇u|_e` and `dL_g = e^{φ} dL_e`, with `e^{φ}`
//! taken as `√w` at the edge midpoint.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::TauValue;
use crate::mesh::{Point, TriMesh};
use crate::solver::{element_gradient, source_power, EigenSolution, TorsionSolution, WeightField, TRI_QUAD};

/// How the normal derivative on boundary edges is recovered from P1 data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxRecovery {
    /// Constant gradient of the triangle owning the edge; first order.
    OneSided,
    /// Least-squares quadratic fitted on the two-ring patch of each edge
    /// endpoint and differentiated at the edge midpoint; second order.
    #[default]
    Patch,
}

/// Normal derivative data on one boundary edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgeFlux {
    pub midpoint: Point,
    /// Outward Euclidean unit normal.
    pub normal: [f64; 2],
    /// Euclidean edge length.
    pub length: f64,
    /// Recovered `∂u/∂ν` (Euclidean).
    pub dnu: f64,
    /// `e^{φ}` at the midpoint.
    pub conformal_factor: f64,
}

fn vertex_neighbors(mesh: &TriMesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.n_vertices()];
    for tri in mesh.triangles() {
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    adj[tri[a]].push(tri[b]);
                }
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Quadratic `u ≈ c₀ + c₁X + c₂Y + c₃X² + c₄XY + c₅Y²` in local coordinates
/// `X = (x − x₀)/s`, `Y = (y − y₀)/s`.
struct QuadraticFit {
    center: Point,
    scale: f64,
    c: [f64; 6],
}

impl QuadraticFit {
    fn gradient(&self, p: Point) -> [f64; 2] {
        let x = (p[0] - self.center[0]) / self.scale;
        let y = (p[1] - self.center[1]) / self.scale;
        let c = &self.c;
        [
            (c[1] + 2.0 * c[3] * x + c[4] * y) / self.scale,
            (c[2] + c[4] * x + 2.0 * c[5] * y) / self.scale,
        ]
    }
}

fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let pivot = a[col];
            let f = a[row][col] / pivot[col];
            for (v, p) in a[row].iter_mut().zip(pivot).skip(col) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn patch_fit(mesh: &TriMesh, adj: &[Vec<usize>], u: &[f64], center: usize) -> Option<QuadraticFit> {
    let mut patch: Vec<usize> = adj[center].clone();
    for &n in &adj[center] {
        patch.extend_from_slice(&adj[n]);
    }
    patch.push(center);
    patch.sort_unstable();
    patch.dedup();
    if patch.len() < 6 {
        return None;
    }
    let v = mesh.vertices();
    let c0 = v[center];
    let scale = patch
        .iter()
        .map(|&j| (v[j][0] - c0[0]).hypot(v[j][1] - c0[1]))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut ata = [[0.0; 6]; 6];
    let mut atb = [0.0; 6];
    for &j in &patch {
        let x = (v[j][0] - c0[0]) / scale;
        let y = (v[j][1] - c0[1]) / scale;
        let row = [1.0, x, y, x * x, x * y, y * y];
        for a in 0..6 {
            for b in 0..6 {
                ata[a][b] += row[a] * row[b];
            }
            atb[a] += row[a] * u[j];
        }
    }
    let c = solve_dense(ata, atb)?;
    Some(QuadraticFit { center: c0, scale, c })
}

/// Recovered normal derivatives on every boundary edge, in loop order.
pub fn boundary_fluxes(mesh: &TriMesh, weight: &WeightField, u: &[f64], method: FluxRecovery) -> Vec<EdgeFlux> {
    let v = mesh.vertices();
    let w = weight.values();
    let adj = match method {
        FluxRecovery::Patch => vertex_neighbors(mesh),
        FluxRecovery::OneSided => Vec::new(),
    };
    let mut fits: std::collections::HashMap<usize, Option<QuadraticFit>> = std::collections::HashMap::new();
    mesh.boundary_edges()
        .iter()
        .enumerate()
        .map(|(e, &[i, j])| {
            let (p, q) = (v[i], v[j]);
            let d = [q[0] - p[0], q[1] - p[1]];
            let length = d[0].hypot(d[1]);
            // domain on the left of i -> j, so the outward normal points right
            let normal = [d[1] / length, -d[0] / length];
            let midpoint = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let one_sided = || element_gradient(mesh, u, mesh.boundary_owner(e));
            let g = match method {
                FluxRecovery::OneSided => one_sided(),
                FluxRecovery::Patch => {
                    let mut acc = [0.0; 2];
                    let mut count = 0.0;
                    for k in [i, j] {
                        let fit = fits.entry(k).or_insert_with(|| patch_fit(mesh, &adj, u, k));
                        if let Some(fit) = fit {
                            let gk = fit.gradient(midpoint);
                            acc[0] += gk[0];
                            acc[1] += gk[1];
                            count += 1.0;
                        }
                    }
                    if count > 0.0 {
                        [acc[0] / count, acc[1] / count]
                    } else {
                        one_sided()
                    }
                }
            };
            EdgeFlux {
                midpoint,
                normal,
                length,
                dnu: g[0] * normal[0] + g[1] * normal[1],
                conformal_factor: (0.5 * (w[i] + w[j])).sqrt(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RigidityReport {
    /// `∫ |∇u|²_g dA_g`
    #[serde(rename = "T_grad")]
    pub t_grad: f64,
    /// `∫ u^{1+γ} dA_g`
    #[serde(rename = "T_power")]
    pub t_power: f64,
    /// `∫ u^γ dA_g`
    #[serde(rename = "I_gamma")]
    pub i_gamma: f64,
    /// `∫_∂ |∇u|_g dL_g`
    #[serde(rename = "flux_L1")]
    pub flux_l1: f64,
    /// `∫_∂ |∇u|²_g dL_g`
    #[serde(rename = "flux_L2")]
    pub flux_l2: f64,
    /// `L_g(∂O)`
    pub boundary_length: f64,
}

impl RigidityReport {
    /// Relative gap between the two forms of the rigidity.
    pub fn two_form_defect(&self) -> f64 {
        (self.t_grad - self.t_power).abs() / self.t_grad.max(self.t_power)
    }

    /// Relative gap in `∫ u^γ = ∫_∂ |∇u|`.
    pub fn green_defect(&self) -> f64 {
        (self.i_gamma - self.flux_l1).abs() / self.i_gamma
    }
}

/// `∫ g(u) w dA` by the 3-point rule on every triangle.
fn weighted_integral(mesh: &TriMesh, weight: &WeightField, u: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let w = weight.values();
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        for bary in &TRI_QUAD {
            let uq: f64 = (0..3).map(|k| bary[k] * u[tri[k]]).sum();
            let wq: f64 = (0..3).map(|k| bary[k] * w[tri[k]]).sum();
            total += g(uq) * wq * area / 3.0;
        }
    }
    total
}

pub fn rigidity(sol: &TorsionSolution<'_>) -> RigidityReport {
    rigidity_with(sol, FluxRecovery::default())
}

pub fn rigidity_with(sol: &TorsionSolution<'_>, method: FluxRecovery) -> RigidityReport {
    rigidity_of_field(sol.mesh, sol.weight, &sol.u, sol.gamma, method)
}

/// The functionals of [`rigidity`] for an arbitrary nodal field.
pub fn rigidity_of_field(
    mesh: &TriMesh,
    weight: &WeightField,
    u: &[f64],
    gamma: f64,
    method: FluxRecovery,
) -> RigidityReport {
    let fluxes = boundary_fluxes(mesh, weight, u, method);
    let boundary_length = fluxes.iter().map(|e| e.conformal_factor * e.length).sum();
    if u.iter().all(|&x| x == 0.0) {
        return RigidityReport {
            t_grad: 0.0,
            t_power: 0.0,
            i_gamma: 0.0,
            flux_l1: 0.0,
            flux_l2: 0.0,
            boundary_length,
        };
    }
    let t_grad = (0..mesh.triangles().len())
        .map(|t| {
            let g = element_gradient(mesh, u, t);
            (g[0] * g[0] + g[1] * g[1]) * mesh.triangle_area(t)
        })
        .sum();
    let t_power = weighted_integral(mesh, weight, u, |s| s.max(0.0) * source_power(s, gamma));
    let i_gamma = weighted_integral(mesh, weight, u, |s| source_power(s, gamma));
    // |∇u|_g dL_g = |∇u|_e dL_e and |∇u|²_g dL_g = e^{−φ}|∇u|²_e dL_e
    let flux_l1 = fluxes.iter().map(|e| e.dnu.abs() * e.length).sum();
    let flux_l2 = fluxes.iter().map(|e| e.dnu * e.dnu * e.length / e.conformal_factor).sum();
    RigidityReport { t_grad, t_power, i_gamma, flux_l1, flux_l2, boundary_length }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsoperimetryRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `∫|∇u|²` against `((1+γ)/(2τ)) (∫_∂ |∇u|)²`
    pub lhs_flux: f64,
    pub rhs_flux: f64,
    pub ratio_flux: f64,
}

/// `∫ u^{1+γ} ≤ ((1+γ)/(2τ)) (∫ u^γ)²` and its boundary-flux form.
pub fn isoperimetry_ratio(report: &RigidityReport, gamma: f64, tau: &TauValue) -> Result<IsoperimetryRatio> {
    let tau = tau.require_positive()?;
    let c = (1.0 + gamma) / (2.0 * tau);
    let rhs = c * report.i_gamma * report.i_gamma;
    let rhs_flux = c * report.flux_l1 * report.flux_l1;
    Ok(IsoperimetryRatio {
        lhs: report.t_power,
        rhs,
        ratio: report.t_power / rhs,
        lhs_flux: report.t_grad,
        rhs_flux,
        ratio_flux: report.t_grad / rhs_flux,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenIsoperimetryRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `∫ u² ≤ (Λ/τ) (∫ u)²` for the normalized principal eigenfunction.
pub fn eigen_isoperimetry_ratio(eig: &EigenSolution<'_>, tau: &TauValue) -> Result<EigenIsoperimetryRatio> {
    let tau = tau.require_positive()?;
    let lhs = weighted_integral(eig.mesh, eig.weight, &eig.u, |s| s * s);
    let mean = weighted_integral(eig.mesh, eig.weight, &eig.u, |s| s);
    let rhs = eig.lambda / tau * mean * mean;
    Ok(EigenIsoperimetryRatio { lhs, rhs, ratio: lhs / rhs })
}

/// `κ_γ = T^{−(1−γ)/(1+γ)}`: the constant for which `v = c u` solves
/// `Δv = −κ v^γ` under `∫ v^{1+γ} = 1`.
pub fn kappa_gamma(report: &RigidityReport, gamma: f64) -> Result<f64> {
    if !(report.t_power > 0.0) || !report.t_power.is_finite() {
        return Err(Error::Argument(format!("rigidity must be positive, got {}", report.t_power)));
    }
    Ok(report.t_power.powf(-(1.0 - gamma) / (1.0 + gamma)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelPoint {
    pub t: f64,
    /// `A_g({u > t})`
    pub a: f64,
    /// `∫_{u>t} u^γ dA_g`
    #[serde(rename = "I")]
    pub i_gamma: f64,
    /// `∫_{u=t} |∇u|_g dL_g`
    pub flux: f64,
}

fn lerp(a: f64, b: f64, s: f64) -> f64 {
    a + s * (b - a)
}

/// Superlevel-set area, moment and level-line flux of the P1 interpolant at
/// a single level `t`.
pub fn level_set_at(mesh: &TriMesh, weight: &WeightField, u: &[f64], gamma: f64, t: f64) -> LevelPoint {
    let w = weight.values();
    let mut a = 0.0;
    let mut moment = 0.0;
    let mut flux = 0.0;
    for (tri_idx, tri) in mesh.triangles().iter().enumerate() {
        let pts = mesh.triangle_points(tri_idx);
        let uv = tri.map(|i| u[i]);
        let wv = tri.map(|i| w[i]);
        let above = uv.map(|x| x > t);
        if !above.iter().any(|&x| x) {
            continue;
        }
        // clip the triangle to {u > t}: polygon vertices as (point, u, w)
        let mut poly: Vec<(Point, f64, f64)> = Vec::with_capacity(4);
        let mut cut: Vec<Point> = Vec::with_capacity(2);
        for k in 0..3 {
            let l = (k + 1) % 3;
            if above[k] {
                poly.push((pts[k], uv[k], wv[k]));
            }
            if above[k] != above[l] {
                let s = (t - uv[k]) / (uv[l] - uv[k]);
                let p = [lerp(pts[k][0], pts[l][0], s), lerp(pts[k][1], pts[l][1], s)];
                poly.push((p, t, lerp(wv[k], wv[l], s)));
                cut.push(p);
            }
        }
        for k in 1..poly.len().saturating_sub(1) {
            let (p0, p1, p2) = (poly[0], poly[k], poly[k + 1]);
            let area = crate::mesh::signed_area(p0.0, p1.0, p2.0);
            a += area * (p0.2 + p1.2 + p2.2) / 3.0;
            for bary in &TRI_QUAD {
                let uq = bary[0] * p0.1 + bary[1] * p1.1 + bary[2] * p2.1;
                let wq = bary[0] * p0.2 + bary[1] * p1.2 + bary[2] * p2.2;
                moment += source_power(uq, gamma) * wq * area / 3.0;
            }
        }
        if cut.len() == 2 {
            let g = element_gradient(mesh, u, tri_idx);
            let len = (cut[1][0] - cut[0][0]).hypot(cut[1][1] - cut[0][1]);
            flux += g[0].hypot(g[1]) * len;
        }
    }
    LevelPoint { t, a, i_gamma: moment, flux }
}

/// Level diagnostics on `n_levels` equally spaced levels strictly inside
/// `(0, max u)`.
pub fn level_set_profile(sol: &TorsionSolution<'_>, n_levels: usize) -> Result<Vec<LevelPoint>> {
    if n_levels < 2 {
        return Err(Error::Argument("need at least two levels".into()));
    }
    let top = sol.max_value();
    Ok((1..=n_levels)
        .map(|k| {
            let t = top * k as f64 / (n_levels + 1) as f64;
            level_set_at(sol.mesh, sol.weight, &sol.u, sol.gamma, t)
        })
        .collect())
}

/// `max_t |I_γ(t) − flux(t)| / I_γ(0)` over a profile.
pub fn flux_identity_defect(profile: &[LevelPoint], i_gamma_0: f64) -> f64 {
    profile.iter().map(|p| (p.i_gamma - p.flux).abs() / i_gamma_0).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk_mesh, build_ellipse_mesh};
    use crate::solver::{solve_eigen, solve_torsion, SolveOptions};
    use std::f64::consts::PI;

    #[test]
    fn disk_torsion_functionals() {
        let mesh = build_disk_mesh(1.0, 60).unwrap();
        let w = WeightField::ones(mesh.n_vertices());
        let sol = solve_torsion(&mesh, &w, 0.0, &SolveOptions::default()).unwrap();
        let rep = rigidity(&sol);
        let t = PI / 8.0;
        assert!((rep.t_grad - t).abs() / t < 5e-3, "{rep:?}");
        assert!((rep.t_power - t).abs() / t < 5e-3, "{rep:?}");
        assert!((rep.i_gamma - PI).abs() / PI < 5e-3);
        assert!((rep.flux_l1 - PI).abs() / PI < 1e-2);
        assert!(rep.green_defect() < 1e-2);
        assert!(rep.flux_l1 * rep.flux_l1 <= rep.boundary_length * rep.flux_l2);
        let iso = isoperimetry_ratio(&rep, 0.0, &TauValue::flat()).unwrap();
        assert!((iso.ratio - 1.0).abs() < 1e-2, "{iso:?}");
        let kappa = kappa_gamma(&rep, 0.0).unwrap();
        assert!((kappa - 8.0 / PI).abs() / (8.0 / PI) < 5e-3);
    }

    #[test]
    fn zero_field_guard() {
        let mesh = build_disk_mesh(1.0, 4).unwrap();
        let w = WeightField::ones(mesh.n_vertices());
        let rep = rigidity_of_field(&mesh, &w, &vec![0.0; mesh.n_vertices()], 0.0, FluxRecovery::Patch);
        assert_eq!((rep.t_grad, rep.t_power, rep.i_gamma, rep.flux_l1, rep.flux_l2), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(kappa_gamma(&rep, 0.0).is_err());
    }

    #[test]
    fn kappa_unit_and_tau_guard() {
        let rep = RigidityReport { t_grad: 1.0, t_power: 1.0, i_gamma: 1.0, flux_l1: 1.0, flux_l2: 1.0, boundary_length: 1.0 };
        assert_eq!(kappa_gamma(&rep, 0.37).unwrap(), 1.0);
        let zero_tau = TauValue::user(0.0).unwrap();
        assert!(isoperimetry_ratio(&rep, 0.0, &zero_tau).is_err());
    }

    #[test]
    fn ellipse_is_strictly_below_one() {
        let mesh = build_ellipse_mesh(2.0, 1.0, 40).unwrap();
        let w = WeightField::ones(mesh.n_vertices());
        let sol = solve_torsion(&mesh, &w, 0.0, &SolveOptions::default()).unwrap();
        let iso = isoperimetry_ratio(&rigidity(&sol), 0.0, &TauValue::flat()).unwrap();
        // closed form 2ab/(a²+b²)
        assert!((iso.ratio - 0.8).abs() < 1e-2, "{iso:?}");
    }

    #[test]
    fn disk_eigen_ratio_is_scale_invariant() {
        let tau = TauValue::flat();
        let m1 = build_disk_mesh(1.0, 30).unwrap();
        let m2 = build_disk_mesh(2.0, 30).unwrap();
        let w = WeightField::ones(m1.n_vertices());
        let r1 = eigen_isoperimetry_ratio(&solve_eigen(&m1, &w, &SolveOptions::default()).unwrap(), &tau).unwrap();
        let r2 = eigen_isoperimetry_ratio(&solve_eigen(&m2, &w, &SolveOptions::default()).unwrap(), &tau).unwrap();
        assert!((r1.ratio - 1.0).abs() < 1e-2);
        assert!((r1.ratio - r2.ratio).abs() < 1e-3);
        assert!((r1.lhs - 1.0).abs() < 1e-10);
    }

    #[test]
    fn disk_level_sets() {
        let mesh = build_disk_mesh(1.0, 40).unwrap();
        let w = WeightField::ones(mesh.n_vertices());
        let sol = solve_torsion(&mesh, &w, 0.0, &SolveOptions::default()).unwrap();
        let prof = level_set_profile(&sol, 20).unwrap();
        for p in prof.iter().filter(|p| p.t <= 0.2) {
            let exact = PI * (1.0 - 4.0 * p.t);
            assert!((p.a - exact).abs() / exact < 2e-2, "{p:?}");
        }
        assert!(prof.windows(2).all(|w| w[1].a <= w[0].a && w[1].i_gamma <= w[0].i_gamma));
        assert!(flux_identity_defect(&prof, rigidity(&sol).i_gamma) < 2e-2);
        let top = level_set_at(&mesh, &w, &sol.u, 0.0, sol.max_value());
        assert_eq!((top.a, top.i_gamma, top.flux), (0.0, 0.0, 0.0));
    }
}
