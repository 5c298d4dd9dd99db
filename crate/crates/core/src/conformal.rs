//! Univalent maps of the unit disk, conformal pullback of image-domain
//! problems, and the Schwarz-lemma ratio
//! `Φ(f; r) = T(f(B_r)) / T(B_r)`.
//!
//! Solving on `f(B_r)` is equivalent to the weighted problem
//! `Δv = −|f′|² v^γ` on `B_r`, so image domains never need to be meshed
//! except for cross-checks.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::rigidity;
use crate::geometry::RadialMetric;
use crate::mesh::{build_disk_mesh, TriMesh};
use crate::par::parallel_map;
use crate::radial_oracle::{is_nondecreasing, oracle_rigidity, shoot_torsion, DEFAULT_SHOOT_TOL};
use crate::solver::{solve_torsion, SolveOptions, WeightField};

/// Angular and radial resolution of the injectivity certificate.
const CERT_GRID: usize = 64;
const CERT_TOL: f64 = 1e-12;
/// Slack allowed when checking that a vertex lies inside the univalence disk.
const RADIUS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConformalMap {
    Identity,
    /// `a z + b`
    Linear { a: Complex64, b: Complex64 },
    /// `z + c z²`
    Quadratic { c: Complex64 },
    /// `z / (1 − c z)`
    Mobius { c: Complex64 },
    /// `z + c z³`
    Cubic { c: Complex64 },
}

impl ConformalMap {
    pub fn linear(a: Complex64, b: Complex64) -> Result<Self> {
        if a == Complex64::new(0.0, 0.0) {
            return Err(Error::Argument("linear map needs a nonzero slope".into()));
        }
        Ok(Self::Linear { a, b })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match *self {
            Self::Identity => z,
            Self::Linear { a, b } => a * z + b,
            Self::Quadratic { c } => z + c * z * z,
            Self::Mobius { c } => z / (1.0 - c * z),
            Self::Cubic { c } => z + c * z * z * z,
        }
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        match *self {
            Self::Identity => Complex64::new(1.0, 0.0),
            Self::Linear { a, .. } => a,
            Self::Quadratic { c } => 1.0 + 2.0 * c * z,
            Self::Mobius { c } => {
                let d = 1.0 - c * z;
                1.0 / (d * d)
            }
            Self::Cubic { c } => 1.0 + 3.0 * c * z * z,
        }
    }

    /// Largest `ρ ≤ 1` on which the map is injective with `f′ ≠ 0`.
    ///
    /// For `z + cz²` and `z + cz³` the divided difference
    /// `(f(z₁) − f(z₂))/(z₁ − z₂)` is `1 + c(z₁ + z₂)` resp.
    /// `1 + c(z₁² + z₁z₂ + z₂²)`, which cannot vanish for `|z| < 1/(2|c|)`
    /// resp. `1/√(3|c|)`. Möbius maps are injective away from the pole.
    pub fn univalence_radius(&self) -> f64 {
        let bound = match *self {
            Self::Identity | Self::Linear { .. } => 1.0,
            Self::Quadratic { c } => 1.0 / (2.0 * c.norm()),
            Self::Mobius { c } => 1.0 / c.norm(),
            Self::Cubic { c } => 1.0 / (3.0 * c.norm()).sqrt(),
        };
        bound.min(1.0)
    }

    /// Numerical certificate: `f′ ≠ 0` and pairwise-distinct images on a
    /// 64×64 polar grid of the univalence disk.
    pub fn certify(&self) -> Result<()> {
        let rho = self.univalence_radius();
        let mut images = vec![self.eval(Complex64::new(0.0, 0.0))];
        for i in 1..=CERT_GRID {
            let r = rho * i as f64 / CERT_GRID as f64;
            for k in 0..CERT_GRID {
                let z = Complex64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / CERT_GRID as f64);
                if i < CERT_GRID && self.deriv(z).norm() == 0.0 {
                    return Err(Error::Domain(format!("{self}: critical point at {z}")));
                }
                images.push(self.eval(z));
            }
        }
        let scale = images.iter().map(|w| w.norm()).fold(1.0, f64::max);
        // Sort along the real axis so only nearby candidates are compared.
        images.sort_by(|a, b| a.re.total_cmp(&b.re));
        let tol = CERT_TOL * scale;
        for (i, w) in images.iter().enumerate() {
            for v in &images[i + 1..] {
                if v.re - w.re > tol {
                    break;
                }
                if (v - w).norm() <= tol {
                    return Err(Error::Domain(format!("{self}: images coincide near {w}")));
                }
            }
        }
        Ok(())
    }

    fn check_inside(&self, z: Complex64) -> Result<()> {
        let rho = self.univalence_radius();
        if z.norm() > rho * (1.0 + RADIUS_SLACK) {
            return Err(Error::Domain(format!("point {z} lies outside the univalence radius {rho} of {self}")));
        }
        Ok(())
    }
}

fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{},{}", z.re, z.im)
    }
}

impl fmt::Display for ConformalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Identity => write!(f, "identity"),
            Self::Linear { a, b } if b == Complex64::new(0.0, 0.0) => write!(f, "linear:{}", fmt_complex(a)),
            Self::Linear { a, b } => write!(f, "linear:{}:{}", fmt_complex(a), fmt_complex(b)),
            Self::Quadratic { c } => write!(f, "quad:{}", fmt_complex(c)),
            Self::Mobius { c } => write!(f, "mobius:{}", fmt_complex(c)),
            Self::Cubic { c } => write!(f, "cubic:{}", fmt_complex(c)),
        }
    }
}

fn parse_complex(s: &str) -> Result<Complex64> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad number `{t}`: {e}")));
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(num(re)?, num(im)?)),
        None => Ok(Complex64::new(num(s)?, 0.0)),
    }
}

impl FromStr for ConformalMap {
    type Err = Error;

    /// `identity`, `linear:a[:b]`, `quad:c`, `mobius:c`, `cubic:c`; complex
    /// coefficients are written `re` or `re,im`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let map = match parts.as_slice() {
            ["identity"] => Self::Identity,
            ["linear", a] => Self::linear(parse_complex(a)?, Complex64::new(0.0, 0.0))?,
            ["linear", a, b] => Self::linear(parse_complex(a)?, parse_complex(b)?)?,
            ["quad", c] => Self::Quadratic { c: parse_complex(c)? },
            ["mobius", c] => Self::Mobius { c: parse_complex(c)? },
            ["cubic", c] => Self::Cubic { c: parse_complex(c)? },
            _ => return Err(Error::Parse(format!("unknown map `{s}`"))),
        };
        if !(map.univalence_radius() > 0.0) {
            return Err(Error::Parse(format!("map `{s}` has no univalence disk")));
        }
        Ok(map)
    }
}

/// Vertex-wise image of `mesh` under `map`.
pub fn map_mesh(mesh: &TriMesh, map: &ConformalMap) -> Result<TriMesh> {
    let mut out = Vec::with_capacity(mesh.n_vertices());
    for p in mesh.vertices() {
        let z = Complex64::new(p[0], p[1]);
        map.check_inside(z)?;
        let w = map.eval(z);
        out.push([w.re, w.im]);
    }
    mesh.with_vertices(out)
}

/// Per-vertex conformal weight `|f′(z_i)|²`.
pub fn pullback_weight(map: &ConformalMap, mesh: &TriMesh) -> Result<WeightField> {
    let mut w = Vec::with_capacity(mesh.n_vertices());
    for p in mesh.vertices() {
        let z = Complex64::new(p[0], p[1]);
        map.check_inside(z)?;
        w.push(map.deriv(z).norm_sqr());
    }
    WeightField::new(w)
}

/// `T_γ(f(B_r))` from the weighted disk problem on a `n_rings` disk mesh.
pub fn rigidity_of_image(map: &ConformalMap, r: f64, gamma: f64, n_rings: usize, opts: &SolveOptions) -> Result<f64> {
    let mesh = build_disk_mesh(r, n_rings)?;
    let weight = pullback_weight(map, &mesh)?;
    Ok(rigidity(&solve_torsion(&mesh, &weight, gamma, opts)?).t_power)
}

/// Cross-check of [`rigidity_of_image`]: the flat problem solved directly on
/// the mapped mesh.
pub fn rigidity_of_image_direct(map: &ConformalMap, r: f64, gamma: f64, n_rings: usize, opts: &SolveOptions) -> Result<f64> {
    let mesh = map_mesh(&build_disk_mesh(r, n_rings)?, map)?;
    let weight = WeightField::ones(mesh.n_vertices());
    Ok(rigidity(&solve_torsion(&mesh, &weight, gamma, opts)?).t_power)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchwarzPoint {
    pub r: f64,
    #[serde(rename = "T_image")]
    pub t_image: f64,
    #[serde(rename = "T_disk")]
    pub t_disk: f64,
    #[serde(rename = "Phi")]
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchwarzSweep {
    pub map: String,
    pub gamma: f64,
    pub points: Vec<SchwarzPoint>,
    /// Relative tolerance of the monotonicity test.
    pub tolerance: f64,
    /// Every forward difference is `≥ −tolerance·Φ`.
    pub nondecreasing: bool,
    /// Every forward difference exceeds `10·tolerance·Φ`.
    pub strictly_increasing: bool,
    /// Smallest forward difference relative to `Φ`.
    pub min_rel_step: f64,
    /// `|f′(0)|^{4/(1−γ)}`, the `r → 0` limit of `Φ`.
    pub phi_limit: f64,
}

/// Default relative tolerance of [`schwarz_ratio_sweep`]'s verdicts.
pub const SCHWARZ_TOL: f64 = 1e-4;

/// `Φ(f; r)` over `grid`; the disk denominator comes from the radial oracle.
/// Grid points are solved concurrently.
pub fn schwarz_ratio_sweep(map: &ConformalMap, gamma: f64, grid: &[f64], n_rings: usize, opts: &SolveOptions) -> Result<SchwarzSweep> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.is_empty() {
        return Err(Error::Argument("radius grid must be nonempty and strictly increasing".into()));
    }
    let rho = map.univalence_radius();
    if grid[0] <= 0.0 || grid[grid.len() - 1] >= rho {
        return Err(Error::Domain(format!("radius grid must lie in (0, {rho})")));
    }
    let flat = RadialMetric::flat();
    let points = parallel_map(grid, |&r| -> Result<SchwarzPoint> {
        let t_image = rigidity_of_image(map, r, gamma, n_rings, opts)?;
        let t_disk = oracle_rigidity(&shoot_torsion(&flat, gamma, r, DEFAULT_SHOOT_TOL)?).t;
        Ok(SchwarzPoint { r, t_image, t_disk, phi: t_image / t_disk })
    });
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    let phis: Vec<f64> = points.iter().map(|p| p.phi).collect();
    let min_rel_step = phis.windows(2).map(|w| (w[1] - w[0]) / w[0]).fold(f64::INFINITY, f64::min);
    let tolerance = SCHWARZ_TOL;
    Ok(SchwarzSweep {
        map: map.to_string(),
        gamma,
        nondecreasing: is_nondecreasing(&phis, tolerance),
        strictly_increasing: phis.len() > 1 && min_rel_step > 10.0 * tolerance,
        min_rel_step: if phis.len() > 1 { min_rel_step } else { 0.0 },
        phi_limit: map.deriv(Complex64::new(0.0, 0.0)).norm().powf(4.0 / (1.0 - gamma)),
        points,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn catalogue_radii() {
        assert_eq!(ConformalMap::Quadratic { c: c(0.2) }.univalence_radius(), 1.0);
        assert_eq!(ConformalMap::Quadratic { c: c(1.0) }.univalence_radius(), 0.5);
        assert_eq!(ConformalMap::Mobius { c: c(2.0) }.univalence_radius(), 0.5);
        assert!((ConformalMap::Cubic { c: c(1.0) }.univalence_radius() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        for s in ["identity", "linear:3", "linear:1,1:0.5", "quad:0.2", "quad:0.5", "mobius:0.5", "cubic:0.3"] {
            let m: ConformalMap = s.parse().unwrap();
            m.certify().unwrap();
            assert_eq!(m.to_string().parse::<ConformalMap>().unwrap(), m);
        }
        assert!("linear:0".parse::<ConformalMap>().is_err());
        assert!("exp:1".parse::<ConformalMap>().is_err());
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let z = Complex64::new(0.3, -0.2);
        for m in ["quad:0.2,0.1", "mobius:0.4", "cubic:0.3", "linear:2,1:3"] {
            let m: ConformalMap = m.parse().unwrap();
            let h = 1e-6;
            let fd = (m.eval(z + h) - m.eval(z - h)) / (2.0 * h);
            assert!((fd - m.deriv(z)).norm() < 1e-8);
        }
    }

    #[test]
    fn pullback_examples() {
        let mesh = build_disk_mesh(1.0, 4).unwrap();
        assert!(pullback_weight(&ConformalMap::Identity, &mesh).unwrap().values().iter().all(|&w| w == 1.0));
        let two = ConformalMap::linear(c(2.0), c(0.0)).unwrap();
        assert!(pullback_weight(&two, &mesh).unwrap().values().iter().all(|&w| w == 4.0));
        let quad = ConformalMap::Quadratic { c: c(0.2) };
        let half = build_disk_mesh(0.5, 2).unwrap();
        let w = pullback_weight(&quad, &half).unwrap();
        let k = half.vertices().iter().position(|p| (p[0] - 0.5).abs() < 1e-15 && p[1].abs() < 1e-15).unwrap();
        assert!((w.values()[k] - 1.44).abs() < 1e-14);
        let big = ConformalMap::Quadratic { c: c(1.0) };
        assert!(matches!(pullback_weight(&big, &mesh), Err(Error::Domain(_))));
    }

    #[test]
    fn map_mesh_examples() {
        let mesh = build_disk_mesh(1.0, 6).unwrap();
        assert_eq!(map_mesh(&mesh, &ConformalMap::Identity).unwrap(), mesh);
        let two = map_mesh(&mesh, &ConformalMap::linear(c(2.0), c(0.0)).unwrap()).unwrap();
        for t in 0..mesh.triangles().len() {
            assert!((two.triangle_area(t) - 4.0 * mesh.triangle_area(t)).abs() < 1e-14);
        }
        map_mesh(&mesh, &ConformalMap::Quadratic { c: c(0.2) }).unwrap();
        assert!(map_mesh(&mesh, &ConformalMap::Mobius { c: c(2.0) }).is_err());
    }

    #[test]
    fn identity_image_is_the_disk() {
        let t = rigidity_of_image(&ConformalMap::Identity, 1.0, 0.0, 30, &SolveOptions::default()).unwrap();
        assert!((t - PI / 8.0).abs() / (PI / 8.0) < 5e-3);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let m = ConformalMap::Identity;
        let o = SolveOptions::default();
        assert!(schwarz_ratio_sweep(&m, 0.0, &[0.5, 0.2], 4, &o).is_err());
        assert!(schwarz_ratio_sweep(&m, 0.0, &[0.5, 1.0], 4, &o).is_err());
        assert!(schwarz_ratio_sweep(&m, 0.0, &[], 4, &o).is_err());
    }
}
