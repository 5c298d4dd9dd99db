//! Weak-form assembly of `Δ_g u = −u^γ` on a P1 mesh, damped Picard
//! iteration for the semilinear problem and inverse power iteration for the
//! principal Dirichlet eigenvalue.
//!
//! In two dimensions the Dirichlet energy is conformally invariant, so for a
//! chart metric `e^{2φ}|dx|²` the stiffness matrix is the Euclidean one and
//! only mass-type integrals carry the weight `w = e^{2φ}`.

mod sparse;

pub use sparse::{cg_solve, dot, CsrMatrix, LinearOperator, DEFAULT_CG_TOL};

use crate::error::{Error, Result};
use crate::geometry::ConformalChart;
use crate::mesh::{Point, TriMesh};

/// Order-2 interior rule on triangles: barycentric coordinates, equal
/// weights of one third.
pub(crate) const TRI_QUAD: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

/// Gradients of the three barycentric basis functions of a triangle.
pub(crate) fn basis_gradients(p: [Point; 3], area: f64) -> [[f64; 2]; 3] {
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        g[i] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
    }
    g
}

/// Constant gradient of the P1 interpolant of `u` on triangle `t`.
pub(crate) fn element_gradient(mesh: &TriMesh, u: &[f64], t: usize) -> [f64; 2] {
    let tri = mesh.triangles()[t];
    let g = basis_gradients(mesh.triangle_points(t), mesh.triangle_area(t));
    let mut out = [0.0; 2];
    for k in 0..3 {
        out[0] += u[tri[k]] * g[k][0];
        out[1] += u[tri[k]] * g[k][1];
    }
    out
}

/// `s ↦ s^γ` with the convention `s^0 = 1` and negative values clipped.
pub(crate) fn source_power(s: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else {
        s.max(0.0).powf(gamma)
    }
}

/// Per-vertex area weights `w_i = e^{2φ(x_i)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    values: Vec<f64>,
}

impl WeightField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Argument(format!("weight at vertex {i} is not positive: {}", values[i])));
        }
        Ok(Self { values })
    }

    /// The flat metric.
    pub fn ones(n: usize) -> Self {
        Self { values: vec![1.0; n] }
    }

    pub fn from_chart(mesh: &TriMesh, chart: &ConformalChart) -> Result<Self> {
        Self::new(mesh.vertices().iter().map(|p| chart.weight(p[0], p[1])).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Nodal P1 coefficients.
pub type ScalarField = Vec<f64>;

/// Dirichlet problem data shared by the torsion and eigen solvers: the
/// stiffness matrix restricted to interior nodes and the dof numbering.
pub struct Discretization<'a> {
    pub mesh: &'a TriMesh,
    pub weight: &'a WeightField,
    /// interior dof of each vertex, `None` on the boundary
    dof: Vec<Option<usize>>,
    interior: Vec<usize>,
    stiffness: CsrMatrix,
}

impl<'a> Discretization<'a> {
    pub fn new(mesh: &'a TriMesh, weight: &'a WeightField) -> Result<Self> {
        if weight.len() != mesh.n_vertices() {
            return Err(Error::Argument(format!(
                "weight has {} values for {} vertices",
                weight.len(),
                mesh.n_vertices()
            )));
        }
        let mask = mesh.boundary_mask();
        let mut dof = vec![None; mesh.n_vertices()];
        let mut interior = Vec::new();
        for (i, &b) in mask.iter().enumerate() {
            if !b {
                dof[i] = Some(interior.len());
                interior.push(i);
            }
        }
        if interior.is_empty() {
            return Err(Error::Mesh("mesh has no interior vertices".into()));
        }
        let mut trip = Vec::with_capacity(9 * mesh.triangles().len());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let area = mesh.triangle_area(t);
            let g = basis_gradients(mesh.triangle_points(t), area);
            for a in 0..3 {
                let Some(i) = dof[tri[a]] else { continue };
                for b in 0..3 {
                    let Some(j) = dof[tri[b]] else { continue };
                    trip.push((i, j, area * (g[a][0] * g[b][0] + g[a][1] * g[b][1])));
                }
            }
        }
        let stiffness = CsrMatrix::from_triplets(interior.len(), &trip);
        Ok(Self { mesh, weight, dof, interior, stiffness })
    }

    pub fn n_dofs(&self) -> usize {
        self.interior.len()
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Interior values of a nodal field.
    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&i| u[i]).collect()
    }

    /// Nodal field with zero boundary values.
    pub fn extend(&self, x: &[f64]) -> ScalarField {
        let mut u = vec![0.0; self.mesh.n_vertices()];
        for (k, &i) in self.interior.iter().enumerate() {
            u[i] = x[k];
        }
        u
    }

    /// Load vector `∫ u^γ φ_i w dA` for nodal `u`, by the 3-point rule with
    /// `u` and `w` interpolated at the quadrature points.
    pub fn source_load(&self, u: &[f64], gamma: f64) -> Vec<f64> {
        let w = self.weight.values();
        let mut load = vec![0.0; self.n_dofs()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let area = self.mesh.triangle_area(t);
            for bary in &TRI_QUAD {
                let uq: f64 = (0..3).map(|k| bary[k] * u[tri[k]]).sum();
                let wq: f64 = (0..3).map(|k| bary[k] * w[tri[k]]).sum();
                let s = source_power(uq, gamma) * wq * area / 3.0;
                for k in 0..3 {
                    if let Some(i) = self.dof[tri[k]] {
                        load[i] += s * bary[k];
                    }
                }
            }
        }
        load
    }

    /// Weighted consistent mass matrix on interior nodes, same quadrature.
    pub fn mass(&self) -> CsrMatrix {
        let w = self.weight.values();
        let mut trip = Vec::with_capacity(9 * self.mesh.triangles().len());
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let area = self.mesh.triangle_area(t);
            for bary in &TRI_QUAD {
                let wq: f64 = (0..3).map(|k| bary[k] * w[tri[k]]).sum();
                for a in 0..3 {
                    let Some(i) = self.dof[tri[a]] else { continue };
                    for b in 0..3 {
                        let Some(j) = self.dof[tri[b]] else { continue };
                        trip.push((i, j, wq * area / 3.0 * bary[a] * bary[b]));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.n_dofs(), &trip)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Fixed-point (or eigenvalue) tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial Picard damping θ; halved to 0.5 once the residual grows.
    pub damping: f64,
    pub cg_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 500, damping: 1.0, cg_tol: DEFAULT_CG_TOL }
    }
}

impl SolveOptions {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.cg_tol > 0.0) {
            return Err(Error::Argument("tolerances must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Argument(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

/// Converged positive solution of `Δ_g u = −u^γ`, `u = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct TorsionSolution<'a> {
    pub u: ScalarField,
    pub gamma: f64,
    pub mesh: &'a TriMesh,
    pub weight: &'a WeightField,
    /// Picard updates performed after the initial linear solve.
    pub iterations: usize,
    /// Final max-norm fixed-point update relative to `max u`.
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

impl TorsionSolution<'_> {
    pub fn max_value(&self) -> f64 {
        self.u.iter().copied().fold(0.0, f64::max)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Argument(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    Ok(())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves the semilinear torsion problem by damped Picard iteration started
/// from the linear (`γ = 0`) torsion function.
pub fn solve_torsion<'a>(
    mesh: &'a TriMesh,
    weight: &'a WeightField,
    gamma: f64,
    opts: &SolveOptions,
) -> Result<TorsionSolution<'a>> {
    solve_torsion_from(mesh, weight, gamma, opts, None)
}

/// As [`solve_torsion`], optionally starting from a given positive nodal
/// iterate (for instance the solution on a nearby domain).
pub fn solve_torsion_from<'a>(
    mesh: &'a TriMesh,
    weight: &'a WeightField,
    gamma: f64,
    opts: &SolveOptions,
    initial: Option<&[f64]>,
) -> Result<TorsionSolution<'a>> {
    check_gamma(gamma)?;
    opts.check()?;
    let disc = Discretization::new(mesh, weight)?;
    let k = disc.stiffness();
    let mut x = match initial {
        Some(u0) if u0.len() == mesh.n_vertices() => disc.restrict(u0),
        Some(u0) => {
            return Err(Error::Argument(format!("initial iterate has {} values", u0.len())));
        }
        None => {
            let ones = vec![1.0; mesh.n_vertices()];
            cg_solve(k, &disc.source_load(&ones, 0.0), opts.cg_tol, None)?
        }
    };
    let mut theta = opts.damping;
    let mut history: Vec<f64> = Vec::new();
    loop {
        let u = disc.extend(&x);
        let rhs = disc.source_load(&u, gamma);
        let x_new = cg_solve(k, &rhs, opts.cg_tol, Some(&x))?;
        let scale = max_abs(&x_new).max(f64::MIN_POSITIVE);
        let diff = x.iter().zip(&x_new).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        let residual = diff / scale;
        if let Some(&prev) = history.last() {
            if residual > prev && theta > 0.5 {
                theta = 0.5;
            }
        }
        history.push(residual);
        if residual <= opts.tol {
            x = x_new;
            break;
        }
        if history.len() >= opts.max_iter {
            return Err(Error::convergence(history));
        }
        for (xi, ni) in x.iter_mut().zip(&x_new) {
            *xi = (1.0 - theta) * *xi + theta * ni;
        }
    }
    Ok(TorsionSolution {
        u: disc.extend(&x),
        gamma,
        mesh,
        weight,
        iterations: history.len(),
        residual: *history.last().expect("at least one update"),
        residual_history: history,
    })
}

/// Principal Dirichlet eigenpair, `∫ u² dA_g = 1`, `u > 0` inside.
#[derive(Debug, Clone)]
pub struct EigenSolution<'a> {
    pub lambda: f64,
    pub u: ScalarField,
    pub mesh: &'a TriMesh,
    pub weight: &'a WeightField,
    pub iterations: usize,
    /// `‖K u − λ M u‖ / ‖λ M u‖` at exit.
    pub residual: f64,
}

/// Inverse power iteration for the smallest eigenvalue of
/// `K u = λ M_w u`.
pub fn solve_eigen<'a>(
    mesh: &'a TriMesh,
    weight: &'a WeightField,
    opts: &SolveOptions,
) -> Result<EigenSolution<'a>> {
    opts.check()?;
    let disc = Discretization::new(mesh, weight)?;
    let k = disc.stiffness();
    let m = disc.mass();
    let n = disc.n_dofs();
    // the torsion function is positive and close to the principal mode
    let mut x = cg_solve(k, &m.mul_vec(&vec![1.0; n]), opts.cg_tol, None)?;
    let normalize = |x: &mut Vec<f64>| {
        let s = m.bilinear(x, x).sqrt();
        x.iter_mut().for_each(|v| *v /= s);
    };
    normalize(&mut x);
    let mut lambda = k.bilinear(&x, &x);
    let mut history = Vec::new();
    for it in 1..=opts.max_iter {
        let mx = m.mul_vec(&x);
        let mut y = cg_solve(k, &mx, opts.cg_tol, Some(&x))?;
        normalize(&mut y);
        let lambda_new = k.bilinear(&y, &y);
        let change = (lambda_new - lambda).abs() / lambda_new;
        let vec_change = x.iter().zip(&y).fold(0.0, |a: f64, (p, q)| a.max((p - q).abs())) / max_abs(&y);
        history.push(change);
        x = y;
        lambda = lambda_new;
        if change <= opts.tol && vec_change <= opts.tol.sqrt() {
            let ky = k.mul_vec(&x);
            let my = m.mul_vec(&x);
            let num: f64 = ky.iter().zip(&my).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = my.iter().map(|b| (lambda * b).powi(2)).sum::<f64>().sqrt();
            // fix the sign positive at the interior maximum
            let imax = (0..n).max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())).unwrap_or(0);
            if x[imax] < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(EigenSolution {
                lambda,
                u: disc.extend(&x),
                mesh,
                weight,
                iterations: it,
                residual: num / den,
            });
        }
    }
    Err(Error::convergence(history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk_mesh, build_rectangle_mesh};

    #[test]
    fn disk_torsion_center_value() {
        let mesh = build_disk_mesh(1.0, 60).unwrap();
        let w = WeightField::ones(mesh.n_vertices());
        let sol = solve_torsion(&mesh, &w, 0.0, &SolveOptions::default()).unwrap();
        assert!((sol.u[0] - 0.25).abs() / 0.25 < 5e-3, "u(0) = {}", sol.u[0]);
        // linear problem: the first Picard update is already the fixed point
        assert_eq!(sol.iterations, 1);
        for &b in mesh.boundary_vertices() {
            assert_eq!(sol.u[b], 0.0);
        }
    }

    #[test]
    fn disk_torsion_is_positive_and_radially_decreasing() {
        let n = 20;
        let mesh = build_disk_mesh(1.0, n).unwrap();
        let w = WeightField::ones(mesh.n_vertices());
        let sol = solve_torsion(&mesh, &w, 0.0, &SolveOptions::default()).unwrap();
        let mut prev = f64::INFINITY;
        let mut start = 0;
        for k in 0..n {
            let count = if k == 0 { 1 } else { 6 * k };
            let ring = &sol.u[start..start + count];
            let max = ring.iter().copied().fold(f64::MIN, f64::max);
            let min = ring.iter().copied().fold(f64::MAX, f64::min);
            assert!(min > 0.0);
            assert!(max < prev);
            prev = min;
            start += count;
        }
    }

    #[test]
    fn rejects_gamma_one() {
        let mesh = build_disk_mesh(1.0, 4).unwrap();
        let w = WeightField::ones(mesh.n_vertices());
        assert!(matches!(
            solve_torsion(&mesh, &w, 1.0, &SolveOptions::default()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn convergence_error_carries_history() {
        let mesh = build_disk_mesh(1.0, 6).unwrap();
        let w = WeightField::ones(mesh.n_vertices());
        let opts = SolveOptions { max_iter: 3, ..SolveOptions::default() };
        match solve_torsion(&mesh, &w, 0.9, &opts) {
            Err(Error::Convergence { history, .. }) => assert_eq!(history.len(), 3),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn weights_must_be_positive() {
        assert!(WeightField::new(vec![1.0, 0.0]).is_err());
        assert!(WeightField::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn square_eigenvalue() {
        let mesh = build_rectangle_mesh(1.0, 1.0, 40, 40).unwrap();
        let w = WeightField::ones(mesh.n_vertices());
        let eig = solve_eigen(&mesh, &w, &SolveOptions::default()).unwrap();
        let exact = 2.0 * std::f64::consts::PI.powi(2);
        assert!((eig.lambda - exact).abs() / exact < 1e-2, "lambda = {}", eig.lambda);
        assert!(eig.u.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn constant_weight_scales_eigenvalue() {
        let mesh = build_disk_mesh(1.0, 12).unwrap();
        let one = WeightField::ones(mesh.n_vertices());
        let four = WeightField::new(vec![4.0; mesh.n_vertices()]).unwrap();
        let a = solve_eigen(&mesh, &one, &SolveOptions::default()).unwrap();
        let b = solve_eigen(&mesh, &four, &SolveOptions::default()).unwrap();
        assert!((a.lambda / b.lambda - 4.0).abs() < 1e-9);
    }
}
