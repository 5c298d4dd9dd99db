//! Rotationally symmetric and conformal metrics on planar charts.
//!
//! A [`RadialMetric`] is the warped product `dr² + f(r)² dθ²` in geodesic polar
//! coordinates around a pole, so geodesic disks are coordinate disks and the
//! circle of radius `r` has length `2π f(r)`. A [`ConformalChart`] is a planar
//! chart carrying the metric `e^{2φ}(dx² + dy²)`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::spline::CubicSpline;

/// Smoothing width of the cone apex when none is given.
pub const DEFAULT_CONE_EPS: f64 = 0.05;

const POLE_PROBE: f64 = 1e-8;
const POLE_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;
const AREA_REL_TOL: f64 = 1e-10;

#[derive(Clone)]
enum Warp {
    Flat,
    /// `f(r) = r (β + (1-β) exp(-(r/ε)²))`
    Cone { beta: f64, eps: f64 },
    Sphere,
    Hyperbolic,
    Table(Arc<CubicSpline>),
}

#[derive(Clone)]
pub struct RadialMetric {
    warp: Warp,
    r_max: f64,
    name: String,
}

impl fmt::Debug for RadialMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialMetric")
            .field("name", &self.name)
            .field("r_max", &self.r_max)
            .finish()
    }
}

impl RadialMetric {
    pub fn flat() -> Self {
        Self { warp: Warp::Flat, r_max: 1e6, name: "flat".into() }
    }

    /// Cone of aperture `2πβ` with the apex smoothed over a width `eps`.
    pub fn cone(beta: f64, eps: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::Argument(format!("cone beta must lie in (0, 1], got {beta}")));
        }
        if !(eps > 0.0) {
            return Err(Error::Argument(format!("cone smoothing eps must be positive, got {eps}")));
        }
        Ok(Self {
            warp: Warp::Cone { beta, eps },
            r_max: 1e6,
            name: format!("cone:{beta}:{eps}"),
        })
    }

    /// Unit round sphere around a pole; valid up to the antipode.
    pub fn sphere() -> Self {
        Self { warp: Warp::Sphere, r_max: PI, name: "sphere".into() }
    }

    /// Hyperbolic plane of curvature −1 (the `sinh` warp).
    pub fn hyperbolic() -> Self {
        Self { warp: Warp::Hyperbolic, r_max: 20.0, name: "hyperbolic".into() }
    }

    /// Warp interpolated from a table `(r_i, f(r_i))` by a natural cubic spline.
    pub fn from_table(r: Vec<f64>, f: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        let spline = CubicSpline::new(r, f)?;
        let (lo, hi) = spline.domain();
        if lo.abs() > 1e-12 {
            return Err(Error::Argument("warp table must start at r = 0".into()));
        }
        let metric = Self { warp: Warp::Table(Arc::new(spline)), r_max: hi, name: name.into() };
        metric.validate()?;
        Ok(metric)
    }

    /// Reads a whitespace-separated two-column table `r f(r)`; lines starting
    /// with `#` are skipped.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut r = Vec::new();
        let mut f = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() < 2 {
                return Err(Error::Parse(format!("{}:{}: expected two columns", path.display(), lineno + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1)))
            };
            r.push(parse(cols[0])?);
            f.push(parse(cols[1])?);
        }
        Self::from_table(r, f, format!("user:{}", path.display()))
    }

    /// Parses `flat`, `cone:<beta>[:eps]`, `sphere`, `hyperbolic` or `user:<file>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut parts = spec.splitn(2, ':');
        let head = parts.next().unwrap_or_default();
        let rest = parts.next();
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("metric `{spec}`: {e}")));
        match (head, rest) {
            ("flat", None) => Ok(Self::flat()),
            ("sphere", None) => Ok(Self::sphere()),
            ("hyperbolic", None) => Ok(Self::hyperbolic()),
            ("cone", Some(args)) => {
                let mut it = args.split(':');
                let beta = num(it.next().unwrap_or_default())?;
                let eps = match it.next() {
                    Some(e) => num(e)?,
                    None => DEFAULT_CONE_EPS,
                };
                Self::cone(beta, eps)
            }
            ("user", Some(path)) => Self::from_table_file(Path::new(path)),
            _ => Err(Error::Parse(format!("unknown metric `{spec}`"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.warp, Warp::Flat)
    }

    /// The isoperimetric constant when it is known in closed form.
    pub fn exact_tau(&self) -> Option<TauValue> {
        match self.warp {
            Warp::Flat => Some(TauValue::flat()),
            Warp::Cone { beta, .. } => Some(TauValue {
                value: 4.0 * PI * beta,
                provenance: TauProvenance::ExactAnalytic,
            }),
            _ => None,
        }
    }

    /// Warp function `f(r)`.
    pub fn f(&self, r: f64) -> f64 {
        match &self.warp {
            Warp::Flat => r,
            Warp::Cone { beta, eps } => {
                let g = (1.0 - beta) * (-(r / eps).powi(2)).exp();
                r * (beta + g)
            }
            Warp::Sphere => r.sin(),
            Warp::Hyperbolic => r.sinh(),
            Warp::Table(s) => s.eval(r),
        }
    }

    /// `f'(r)`.
    pub fn df(&self, r: f64) -> f64 {
        match &self.warp {
            Warp::Flat => 1.0,
            Warp::Cone { beta, eps } => {
                let s = (r / eps).powi(2);
                beta + (1.0 - beta) * (-s).exp() * (1.0 - 2.0 * s)
            }
            Warp::Sphere => r.cos(),
            Warp::Hyperbolic => r.cosh(),
            Warp::Table(s) => (s.eval(r + FD_STEP) - s.eval(r - FD_STEP)) / (2.0 * FD_STEP),
        }
    }

    /// `f''(r)`.
    pub fn d2f(&self, r: f64) -> f64 {
        match &self.warp {
            Warp::Flat => 0.0,
            Warp::Cone { beta, eps } => {
                let e2 = eps * eps;
                let g = (1.0 - beta) * (-(r * r / e2)).exp();
                g * r / e2 * (4.0 * r * r / e2 - 6.0)
            }
            Warp::Sphere => -r.sin(),
            Warp::Hyperbolic => r.sinh(),
            Warp::Table(s) => {
                (s.eval(r + FD_STEP) - 2.0 * s.eval(r) + s.eval(r - FD_STEP)) / (FD_STEP * FD_STEP)
            }
        }
    }

    /// Checks the pole condition and positivity of the warp on a sample grid.
    pub fn validate(&self) -> Result<()> {
        let d = POLE_PROBE;
        if (self.f(d) / d - 1.0).abs() > POLE_TOL || (self.df(d) - 1.0).abs() > POLE_TOL {
            return Err(Error::Domain(format!(
                "metric {}: warp violates f(0) = 0, f'(0) = 1 (f(δ)/δ = {}, f'(δ) = {})",
                self.name,
                self.f(d) / d,
                self.df(d)
            )));
        }
        let n = 2000;
        let top = self.r_max.min(1e3);
        for i in 1..=n {
            let r = top * i as f64 / n as f64;
            if !(self.f(r) > 0.0) {
                return Err(Error::Domain(format!("metric {}: f({r}) is not positive", self.name)));
            }
        }
        Ok(())
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if r > 0.0 && r <= self.r_max {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "radius {r} outside (0, {}] for metric {}",
                self.r_max, self.name
            )))
        }
    }

    pub fn gauss_curvature(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(-self.d2f(r) / self.f(r))
    }

    /// Length of the geodesic circle of radius `r`.
    pub fn circle_length(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(2.0 * PI * self.f(r))
    }

    /// Area of the geodesic disk of radius `r`.
    pub fn disk_area(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        let mut integral = 0.0;
        // split at the smoothing scale of the cone so the quadrature sees the bump
        let mut a = 0.0;
        if let Warp::Cone { eps, .. } = self.warp {
            let knee = (6.0 * eps).min(r);
            integral += quad::integrate(|s| self.f(s), 0.0, knee, AREA_REL_TOL);
            a = knee;
        }
        integral += quad::integrate(|s| self.f(s), a, r, AREA_REL_TOL);
        Ok(2.0 * PI * integral)
    }

    /// Bishop–Gromov comparison on a radius grid: `f(r)/r` nonincreasing and
    /// `f(r) ≤ r`.
    pub fn bishop_gromov_check(&self, r_grid: &[f64]) -> Result<BishopGromovReport> {
        validate_grid(self, r_grid)?;
        let mut worst: f64 = 0.0;
        let mut monotone_ok = true;
        let mut bound_ok = true;
        let ratios: Vec<f64> = r_grid.iter().map(|&r| self.f(r) / r).collect();
        for w in ratios.windows(2) {
            let excess = (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE);
            if excess > 1e-9 {
                monotone_ok = false;
            }
            worst = worst.max(excess);
        }
        for &r in r_grid {
            let excess = self.f(r) - r;
            if excess > 1e-9 {
                bound_ok = false;
            }
            worst = worst.max(excess);
        }
        Ok(BishopGromovReport { monotone_ok, bound_ok, worst_violation: worst.max(0.0) })
    }

    /// Isothermal coordinates on the geodesic disk of radius `radius`.
    ///
    /// With `ρ(r) = r·exp(∫₀^r (1/f − 1/s) ds)` the metric becomes
    /// `e^{2φ}(dρ² + ρ² dθ²)` with `e^{φ} = f(r)/ρ`, so the geodesic disk is
    /// the coordinate disk of radius `ρ(radius)` in a [`ConformalChart`].
    pub fn isothermal_chart(&self, radius: f64) -> Result<IsothermalDisk> {
        self.check_radius(radius)?;
        if self.is_flat() {
            return Ok(IsothermalDisk { chart: ConformalChart::flat(), chart_radius: radius });
        }
        // nodes cluster at the pole; a short tail past `radius` keeps the
        // chart usable for slightly deformed meshes
        const NODES: usize = 2000;
        const TAIL: usize = 100;
        let tail_end = (1.05 * radius).min(self.r_max * (1.0 - 1e-9)).max(radius);
        let defect = |s: f64| 1.0 / self.f(s) - 1.0 / s;
        let mut rho = vec![0.0];
        let mut phi = vec![0.0];
        let mut g = 0.0;
        let mut prev = 0.0;
        let tail = if tail_end > radius { TAIL } else { 0 };
        for i in 1..=NODES + tail {
            let r = if i <= NODES {
                radius * (i as f64 / NODES as f64).powi(2)
            } else {
                radius + (tail_end - radius) * (i - NODES) as f64 / TAIL as f64
            };
            g += quad::integrate(defect, prev, r, 1e-12);
            prev = r;
            let f = self.f(r);
            if !(f > 0.0) {
                return Err(Error::Domain(format!("warp vanishes at r = {r}")));
            }
            rho.push(r * g.exp());
            phi.push((f / r).ln() - g);
        }
        let chart_radius = rho[NODES];
        let b = rho[rho.len() - 1] * (1.0 + 1e-9);
        let spline = CubicSpline::new(rho, phi)?;
        let chart = ConformalChart::new(move |x, y| spline.eval(x.hypot(y)), [-b, b, -b, b]);
        Ok(IsothermalDisk { chart, chart_radius })
    }

    /// Upper bound for the isoperimetric constant obtained by restricting the
    /// infimum to the geodesic circles of the grid.
    pub fn tau_circle_upper_bound(&self, r_grid: &[f64]) -> Result<TauValue> {
        validate_grid(self, r_grid)?;
        let mut best = f64::INFINITY;
        for &r in r_grid {
            let len = self.circle_length(r)?;
            let area = self.disk_area(r)?;
            best = best.min(len * len / area);
        }
        Ok(TauValue { value: best, provenance: TauProvenance::CircleUpperBound })
    }
}

fn validate_grid(metric: &RadialMetric, r_grid: &[f64]) -> Result<()> {
    if r_grid.is_empty() {
        return Err(Error::Argument("radius grid is empty".into()));
    }
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("radius grid must increase strictly".into()));
    }
    for &r in r_grid {
        metric.check_radius(r)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BishopGromovReport {
    pub monotone_ok: bool,
    pub bound_ok: bool,
    pub worst_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauProvenance {
    ExactFlat,
    ExactAnalytic,
    CircleUpperBound,
    UserSupplied,
}

/// Isoperimetric constant of a surface together with where it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauValue {
    pub value: f64,
    pub provenance: TauProvenance,
}

impl TauValue {
    pub fn flat() -> Self {
        Self { value: 4.0 * PI, provenance: TauProvenance::ExactFlat }
    }

    pub fn user(value: f64) -> Result<Self> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::Argument(format!("tau must be finite and nonnegative, got {value}")));
        }
        Ok(Self { value, provenance: TauProvenance::UserSupplied })
    }

    pub fn require_positive(&self) -> Result<f64> {
        if self.value > 0.0 {
            Ok(self.value)
        } else {
            Err(Error::Argument(format!("tau must be positive, got {}", self.value)))
        }
    }
}

/// Geodesic disk of a [`RadialMetric`] in isothermal coordinates.
#[derive(Debug, Clone)]
pub struct IsothermalDisk {
    pub chart: ConformalChart,
    /// Coordinate radius of the geodesic disk.
    pub chart_radius: f64,
}

/// Planar chart with metric `e^{2φ}(dx² + dy²)`.
#[derive(Clone)]
pub struct ConformalChart {
    log_factor: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    /// Axis-aligned box `[x0, x1] × [y0, y1]` where the chart is valid.
    pub domain_bound: [f64; 4],
}

impl fmt::Debug for ConformalChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConformalChart").field("domain_bound", &self.domain_bound).finish()
    }
}

impl ConformalChart {
    pub fn new(
        log_factor: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        domain_bound: [f64; 4],
    ) -> Self {
        Self { log_factor: Arc::new(log_factor), domain_bound }
    }

    /// The Euclidean plane, `φ ≡ 0`.
    pub fn flat() -> Self {
        Self::new(|_, _| 0.0, [f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY])
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let [x0, x1, y0, y1] = self.domain_bound;
        x >= x0 && x <= x1 && y >= y0 && y <= y1
    }

    pub fn log_factor(&self, x: f64, y: f64) -> f64 {
        (self.log_factor)(x, y)
    }

    /// Area weight `e^{2φ}`.
    pub fn weight(&self, x: f64, y: f64) -> f64 {
        (2.0 * self.log_factor(x, y)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn curvature_examples() {
        assert_eq!(RadialMetric::flat().gauss_curvature(0.7).unwrap(), 0.0);
        assert!(close(RadialMetric::sphere().gauss_curvature(1.0).unwrap(), 1.0, 1e-14));
        assert!(close(RadialMetric::hyperbolic().gauss_curvature(1.0).unwrap(), -1.0, 1e-14));
        assert!(RadialMetric::sphere().gauss_curvature(4.0).is_err());
        assert!(RadialMetric::flat().gauss_curvature(0.0).is_err());
    }

    #[test]
    fn cone_derivatives_match_finite_differences() {
        let m = RadialMetric::cone(0.5, 0.05).unwrap();
        for &r in &[0.01, 0.04, 0.07, 0.12, 0.5] {
            let h = 1e-6;
            let df = (m.f(r + h) - m.f(r - h)) / (2.0 * h);
            let d2f = (m.df(r + h) - m.df(r - h)) / (2.0 * h);
            assert!((df - m.df(r)).abs() < 1e-7, "r={r}");
            assert!((d2f - m.d2f(r)).abs() < 1e-4 * m.d2f(r).abs().max(1.0), "r={r}");
        }
    }

    #[test]
    fn lengths_and_areas() {
        let flat = RadialMetric::flat();
        assert!(close(flat.circle_length(1.0).unwrap(), 2.0 * PI, 1e-15));
        assert!(close(flat.disk_area(1.0).unwrap(), PI, 1e-12));

        // with a tiny apex the smoothed cone is the exact cone to machine precision
        let cone = RadialMetric::cone(0.5, 1e-4).unwrap();
        assert!(close(cone.circle_length(2.0).unwrap(), 2.0 * PI, 1e-14));
        assert!(close(cone.disk_area(2.0).unwrap(), 2.0 * PI, 1e-8));

        let sphere = RadialMetric::sphere();
        assert!(close(sphere.circle_length(FRAC_PI_2).unwrap(), 2.0 * PI, 1e-15));
        assert!(close(sphere.disk_area(FRAC_PI_2).unwrap(), 2.0 * PI, 1e-10));
    }

    #[test]
    fn smoothed_cone_area_includes_apex_correction() {
        // ∫₀^r s(β + (1-β)e^{-s²/ε²}) ds = βr²/2 + (1-β)ε²/2 (1 - e^{-r²/ε²})
        let (beta, eps, r): (f64, f64, f64) = (0.5, 0.05, 0.3);
        let exact = 2.0 * PI * (beta * r * r / 2.0 + (1.0 - beta) * eps * eps / 2.0 * (1.0 - (-(r * r) / (eps * eps)).exp()));
        let got = RadialMetric::cone(beta, eps).unwrap().disk_area(r).unwrap();
        assert!(((got - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn bishop_gromov_examples() {
        let rep = RadialMetric::flat().bishop_gromov_check(&[0.5, 1.0, 2.0]).unwrap();
        assert!(rep.monotone_ok && rep.bound_ok);
        assert_eq!(rep.worst_violation, 0.0);

        let rep = RadialMetric::sphere().bishop_gromov_check(&[0.5, 1.0, 1.5]).unwrap();
        assert!(rep.monotone_ok && rep.bound_ok);

        let rep = RadialMetric::hyperbolic().bishop_gromov_check(&[0.5, 1.0]).unwrap();
        assert!(!rep.monotone_ok);
        assert!(!rep.bound_ok);
        assert!(rep.worst_violation > 0.0);

        assert!(RadialMetric::flat().bishop_gromov_check(&[]).is_err());
    }

    #[test]
    fn tau_bounds() {
        let grid: Vec<f64> = (1..=10).map(|i| 0.3 * i as f64).collect();
        let flat = RadialMetric::flat().tau_circle_upper_bound(&grid).unwrap();
        assert!(close(flat.value, 4.0 * PI, 1e-10));
        assert_eq!(flat.provenance, TauProvenance::CircleUpperBound);

        let cone = RadialMetric::cone(0.5, 1e-4).unwrap().tau_circle_upper_bound(&grid).unwrap();
        assert!(close(cone.value, 2.0 * PI, 1e-6));

        let sphere = RadialMetric::sphere().tau_circle_upper_bound(&grid).unwrap();
        assert!(sphere.value < 1.0);
    }

    #[test]
    fn pole_condition_checked_for_tables() {
        let r: Vec<f64> = (0..=300).map(|i| i as f64 * 0.01).collect();
        let good: Vec<f64> = r.iter().map(|v| v.sin()).collect();
        let m = RadialMetric::from_table(r.clone(), good, "sin").unwrap();
        assert!(close(m.gauss_curvature(1.0).unwrap(), 1.0, 1e-3));

        let bad: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
        assert!(RadialMetric::from_table(r, bad, "double").is_err());
    }

    #[test]
    fn parse_registry() {
        assert!(RadialMetric::parse("flat").unwrap().is_flat());
        assert_eq!(RadialMetric::parse("cone:0.5").unwrap().name(), "cone:0.5:0.05");
        assert_eq!(RadialMetric::parse("cone:0.25:0.1").unwrap().name(), "cone:0.25:0.1");
        assert!(RadialMetric::parse("torus").is_err());
        assert!(RadialMetric::parse("cone:2").is_err());
    }

    #[test]
    fn conformal_chart_weight() {
        let chart = ConformalChart::new(|x, _| 0.5 * x, [-1.0, 1.0, -1.0, 1.0]);
        assert!(close(chart.weight(1.0, 0.0), 1f64.exp(), 1e-15));
        assert!(chart.contains(0.0, 0.0) && !chart.contains(2.0, 0.0));
        assert_eq!(ConformalChart::flat().weight(3.0, -2.0), 1.0);
    }

    #[test]
    fn isothermal_charts() {
        let flat = RadialMetric::flat().isothermal_chart(2.0).unwrap();
        assert_eq!(flat.chart_radius, 2.0);
        // stereographic and Poincaré coordinates in closed form
        let s = RadialMetric::sphere().isothermal_chart(1.0).unwrap();
        assert!(close(s.chart_radius, 2.0 * (0.5f64).tan(), 1e-10));
        let rho = 0.7 * s.chart_radius;
        assert!(close(s.chart.weight(rho, 0.0), (4.0 / (1.0 + rho * rho / 4.0).powi(2)) / 4.0, 1e-8));
        let h = RadialMetric::hyperbolic().isothermal_chart(1.5).unwrap();
        assert!(close(h.chart_radius, 2.0 * (0.75f64).tanh(), 1e-10));
        let rho = 0.3 * h.chart_radius;
        assert!(close(h.chart.weight(0.0, rho), 1.0 / (1.0 - rho * rho / 4.0).powi(2), 1e-8));
    }
}
