//! Domain flows and first variations of the rigidity and the principal
//! eigenvalue, with centered finite-difference validation by re-solving on
//! deformed meshes.
//!
//! Both variations are boundary integrals of `(∂_ν u)² V`, where `V = ⟨Ξ, ν⟩`
//! is the normal speed of the flow. In a conformal chart the metric factors
//! `e^{−2φ}` (squared normal derivative), `e^{φ}` (normal speed) and `e^{φ}`
//! (length element) cancel, so the chart-coordinate Euclidean expression is
//! exact.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{boundary_fluxes, FluxRecovery};
use crate::mesh::{signed_area, Point, TriMesh};
use crate::solver::{solve_eigen, solve_torsion, solve_torsion_from, EigenSolution, SolveOptions, TorsionSolution, WeightField};

type Field = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Velocity field `Ξ` generating the flow `∂_t ξ = Ξ(ξ)`.
#[derive(Clone)]
pub struct FlowSpec {
    velocity: Field,
    name: String,
    /// Largest `|t|` the flow is meant to be used with.
    pub t_range: f64,
}

impl fmt::Debug for FlowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowSpec").field("name", &self.name).field("t_range", &self.t_range).finish()
    }
}

impl FlowSpec {
    pub fn new(name: impl Into<String>, t_range: f64, velocity: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        Self { velocity: Arc::new(velocity), name: name.into(), t_range }
    }

    /// Unit radial field `x/|x|` (zero at the origin).
    pub fn radial() -> Self {
        Self::new("radial", 0.1, |p| {
            let r = p[0].hypot(p[1]);
            if r == 0.0 {
                [0.0, 0.0]
            } else {
                [p[0] / r, p[1] / r]
            }
        })
    }

    pub fn translate(dx: f64, dy: f64) -> Self {
        Self::new(format!("translate:{dx},{dy}"), 1.0, move |_| [dx, dy])
    }

    /// Horizontal stretch `Ξ = (x, 0)`, with normal speed `x ν_x` on the
    /// boundary.
    pub fn stretch_x() -> Self {
        Self::new("normal-x", 0.1, |p| [p[0], 0.0])
    }

    pub fn zero() -> Self {
        Self::new("zero", 1.0, |_| [0.0, 0.0])
    }

    /// Parses `radial`, `translate:dx,dy`, `normal-x` or `zero`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.split_once(':') {
            None if spec == "radial" => Ok(Self::radial()),
            None if spec == "normal-x" => Ok(Self::stretch_x()),
            None if spec == "zero" => Ok(Self::zero()),
            Some(("translate", args)) => {
                let (a, b) = args
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("flow `{spec}`: expected translate:dx,dy")))?;
                let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("flow `{spec}`: {e}")));
                Ok(Self::translate(num(a)?, num(b)?))
            }
            _ => Err(Error::Parse(format!("unknown flow `{spec}`"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn velocity(&self, p: Point) -> [f64; 2] {
        (self.velocity)(p)
    }

    /// Pointwise sum of two flows.
    pub fn plus(&self, other: &FlowSpec) -> FlowSpec {
        let (a, b) = (self.velocity.clone(), other.velocity.clone());
        FlowSpec {
            velocity: Arc::new(move |p| {
                let (u, v) = (a(p), b(p));
                [u[0] + v[0], u[1] + v[1]]
            }),
            name: format!("{}+{}", self.name, other.name),
            t_range: self.t_range.min(other.t_range),
        }
    }

    /// Normal speed `⟨Ξ, ν⟩` at the midpoint of every boundary edge.
    pub fn normal_speeds(&self, mesh: &TriMesh) -> Vec<f64> {
        let v = mesh.vertices();
        mesh.boundary_edges()
            .iter()
            .map(|&[i, j]| {
                let (p, q) = (v[i], v[j]);
                let d = [q[0] - p[0], q[1] - p[1]];
                let len = d[0].hypot(d[1]);
                let n = [d[1] / len, -d[0] / len];
                let xi = self.velocity([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                xi[0] * n[0] + xi[1] * n[1]
            })
            .collect()
    }
}

/// Moves every vertex by one explicit step `x ↦ x + t Ξ(x)`.
pub fn deform_mesh(mesh: &TriMesh, flow: &FlowSpec, t: f64) -> Result<TriMesh> {
    if t.abs() > flow.t_range {
        return Err(Error::Argument(format!("|t| = {} exceeds the flow range {}", t.abs(), flow.t_range)));
    }
    let moved: Vec<Point> = mesh
        .vertices()
        .iter()
        .map(|&p| {
            let xi = flow.velocity(p);
            [p[0] + t * xi[0], p[1] + t * xi[1]]
        })
        .collect();
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let [a, b, c] = tri.map(|i| moved[i]);
        if !(signed_area(a, b, c) > 0.0) {
            return Err(Error::Deformation { triangle: k, t });
        }
    }
    mesh.with_vertices(moved)
}

fn boundary_integral(mesh: &TriMesh, weight: &WeightField, u: &[f64], flow: &FlowSpec) -> f64 {
    let speeds = flow.normal_speeds(mesh);
    boundary_fluxes(mesh, weight, u, FluxRecovery::default())
        .iter()
        .zip(&speeds)
        .map(|(e, v)| e.dnu * e.dnu * v * e.length)
        .sum()
}

/// `dT/dt = ((1+γ)/(1−γ)) ∫_∂ (∂_ν u)² V dL`.
pub fn shape_derivative_torsion(sol: &TorsionSolution<'_>, flow: &FlowSpec) -> Result<f64> {
    if !(sol.gamma < 1.0) {
        return Err(Error::Argument("the torsion variation requires gamma < 1".into()));
    }
    let factor = (1.0 + sol.gamma) / (1.0 - sol.gamma);
    Ok(factor * boundary_integral(sol.mesh, sol.weight, &sol.u, flow))
}

/// `dΛ/dt = −∫_∂ (∂_ν u)² V dL` for the normalized eigenfunction.
pub fn shape_derivative_eigen(eig: &EigenSolution<'_>, flow: &FlowSpec) -> f64 {
    -boundary_integral(eig.mesh, eig.weight, &eig.u, flow)
}

/// Which functional [`fd_validate`] differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariationMode {
    Torsion { gamma: f64 },
    Eigen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdReport {
    pub analytic: f64,
    pub fd: f64,
    pub rel_err: f64,
}

/// Largest distance between two boundary vertices.
pub fn diameter(mesh: &TriMesh) -> f64 {
    let v = mesh.vertices();
    let b = mesh.boundary_vertices();
    let mut d: f64 = 0.0;
    for (k, &i) in b.iter().enumerate() {
        for &j in &b[k + 1..] {
            d = d.max((v[i][0] - v[j][0]).hypot(v[i][1] - v[j][1]));
        }
    }
    d
}

/// Default finite-difference step, `10⁻³` times the domain diameter.
pub fn default_step(mesh: &TriMesh) -> f64 {
    1e-3 * diameter(mesh)
}

/// Compares the boundary-integral variation on `mesh` with the centered
/// difference `(F(+h) − F(−h)) / 2h` of full re-solves on `deform_mesh(mesh,
/// flow, ±h)`. `weight_for` supplies the metric weight of each mesh.
pub fn fd_validate(
    mesh: &TriMesh,
    weight_for: impl Fn(&TriMesh) -> Result<WeightField>,
    mode: VariationMode,
    flow: &FlowSpec,
    h: f64,
    opts: &SolveOptions,
) -> Result<FdReport> {
    if !(h > 0.0) {
        return Err(Error::Argument("finite-difference step must be positive".into()));
    }
    let plus = deform_mesh(mesh, flow, h)?;
    let minus = deform_mesh(mesh, flow, -h)?;
    let (w0, wp, wm) = (weight_for(mesh)?, weight_for(&plus)?, weight_for(&minus)?);
    let (analytic, fp, fm) = match mode {
        VariationMode::Torsion { gamma } => {
            let base = solve_torsion(mesh, &w0, gamma, opts)?;
            let analytic = shape_derivative_torsion(&base, flow)?;
            let t = |m: &TriMesh, w: &WeightField| -> Result<f64> {
                let s = solve_torsion_from(m, w, gamma, opts, Some(&base.u))?;
                Ok(crate::functionals::rigidity(&s).t_power)
            };
            (analytic, t(&plus, &wp)?, t(&minus, &wm)?)
        }
        VariationMode::Eigen => {
            let base = solve_eigen(mesh, &w0, opts)?;
            let analytic = shape_derivative_eigen(&base, flow);
            (analytic, solve_eigen(&plus, &wp, opts)?.lambda, solve_eigen(&minus, &wm, opts)?.lambda)
        }
    };
    let fd = (fp - fm) / (2.0 * h);
    let rel_err = (analytic - fd).abs() / fd.abs().max(1e-300);
    Ok(FdReport { analytic, fd, rel_err })
}

/// Convenience weight builder for the flat plane.
pub fn flat_weight(mesh: &TriMesh) -> Result<WeightField> {
    Ok(WeightField::ones(mesh.n_vertices()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk_mesh, build_ellipse_mesh};
    use std::f64::consts::PI;

    #[test]
    fn radial_flow_grows_the_disk() {
        let mesh = build_disk_mesh(1.0, 8).unwrap();
        let moved = deform_mesh(&mesh, &FlowSpec::radial(), 0.05).unwrap();
        for &b in moved.boundary_vertices() {
            let p = moved.vertices()[b];
            assert!((p[0].hypot(p[1]) - 1.05).abs() < 1e-14);
        }
        assert_eq!(deform_mesh(&mesh, &FlowSpec::zero(), 0.05).unwrap(), mesh);
    }

    #[test]
    fn translation_is_rigid() {
        let mesh = build_disk_mesh(1.0, 10).unwrap();
        let moved = deform_mesh(&mesh, &FlowSpec::translate(0.3, -0.2), 1.0).unwrap();
        assert!((moved.area() - mesh.area()).abs() < 1e-12);
        let w = WeightField::ones(mesh.n_vertices());
        let a = crate::functionals::rigidity(&solve_torsion(&mesh, &w, 0.3, &SolveOptions::default()).unwrap());
        let b = crate::functionals::rigidity(&solve_torsion(&moved, &w, 0.3, &SolveOptions::default()).unwrap());
        assert!((a.t_power - b.t_power).abs() / a.t_power < 1e-9);
    }

    #[test]
    fn inverted_deformation_is_reported() {
        let mesh = build_disk_mesh(1.0, 4).unwrap();
        let fold = FlowSpec::new("fold", 10.0, |p| [-2.0 * p[0], 0.0]);
        assert!(matches!(deform_mesh(&mesh, &fold, 1.0), Err(Error::Deformation { .. })));
        assert!(deform_mesh(&mesh, &FlowSpec::radial(), 1.0).is_err());
    }

    #[test]
    fn disk_torsion_variation() {
        let mesh = build_disk_mesh(1.0, 40).unwrap();
        let w = WeightField::ones(mesh.n_vertices());
        let sol = solve_torsion(&mesh, &w, 0.0, &SolveOptions::default()).unwrap();
        let d = shape_derivative_torsion(&sol, &FlowSpec::radial()).unwrap();
        assert!((d - PI / 2.0).abs() / (PI / 2.0) < 2e-2, "{d}");
        assert_eq!(shape_derivative_torsion(&sol, &FlowSpec::zero()).unwrap(), 0.0);
    }

    #[test]
    fn tangential_fields_do_not_contribute() {
        let (a, b) = (2.0, 1.0);
        let mesh = build_ellipse_mesh(a, b, 20).unwrap();
        let w = WeightField::ones(mesh.n_vertices());
        let sol = solve_torsion(&mesh, &w, 0.3, &SolveOptions::default()).unwrap();
        let base = FlowSpec::stretch_x();
        let spin = FlowSpec::new("spin", 1.0, move |p| [-a / b * p[1], b / a * p[0]]);
        let d0 = shape_derivative_torsion(&sol, &base).unwrap();
        let d1 = shape_derivative_torsion(&sol, &base.plus(&spin)).unwrap();
        assert!((d0 - d1).abs() <= 1e-12 * d0.abs());
    }

    #[test]
    fn parse_flows() {
        assert_eq!(FlowSpec::parse("radial").unwrap().name(), "radial");
        assert_eq!(FlowSpec::parse("translate:1,2").unwrap().velocity([5.0, 5.0]), [1.0, 2.0]);
        assert_eq!(FlowSpec::parse("normal-x").unwrap().velocity([2.0, 3.0]), [2.0, 0.0]);
        assert!(FlowSpec::parse("swirl").is_err());
    }
}
