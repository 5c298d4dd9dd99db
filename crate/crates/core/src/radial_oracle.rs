//! Shooting solver for geodesic disks of a [`RadialMetric`].
//!
//! In geodesic polar coordinates the torsion problem reduces to
//! `(f u')' = −f u^γ` on `(0, R)` with `u'(0) = 0`, `u(R) = 0`. The ODE is
//! integrated in the flux variable `p = f u'`, which removes the `f'/f` pole,
//! and the center value `α = u(0)` is found by bracketing and Illinois
//! regula falsi. The same machinery with `(f u')' = −λ f u` and bisection on
//! `λ` gives principal Dirichlet eigenvalues.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{RadialMetric, TauValue};
use crate::ode::{self, Tolerances};

/// Relative tolerance of the ODE integration.
const ODE_RTOL: f64 = 1e-12;
/// Series start offset in units of the disk radius.
const START_OFFSET: f64 = 1e-6;
/// Default shooting tolerance on `u(R)` relative to `α`.
pub const DEFAULT_SHOOT_TOL: f64 = 1e-10;

fn source(u: f64, gamma: f64) -> f64 {
    if u > 0.0 {
        if gamma == 0.0 {
            1.0
        } else {
            u.powf(gamma)
        }
    } else {
        0.0
    }
}

/// Radial torsion profile on `[0, R]`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub r_nodes: Vec<f64>,
    pub u_values: Vec<f64>,
    pub du_values: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub radius: f64,
    pub metric: RadialMetric,
    rigidity: f64,
    moment: f64,
}

impl RadialProfile {
    /// Cubic Hermite interpolation of `u` at `r ∈ [0, R]`.
    pub fn u_at(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, self.radius);
        let k = self.r_nodes.partition_point(|&x| x <= r).clamp(1, self.r_nodes.len() - 1) - 1;
        let (r0, r1) = (self.r_nodes[k], self.r_nodes[k + 1]);
        let h = r1 - r0;
        let s = (r - r0) / h;
        let (h00, h10, h01, h11) = (
            2.0 * s * s * s - 3.0 * s * s + 1.0,
            s * s * s - 2.0 * s * s + s,
            -2.0 * s * s * s + 3.0 * s * s,
            s * s * s - s * s,
        );
        h00 * self.u_values[k] + h10 * h * self.du_values[k] + h01 * self.u_values[k + 1] + h11 * h * self.du_values[k + 1]
    }

    /// Boundary derivative `u'(R)`.
    pub fn flux(&self) -> f64 {
        *self.du_values.last().expect("nonempty profile")
    }
}

struct Shot {
    traj: ode::Trajectory<4>,
    r0: f64,
}

fn shoot_once(metric: &RadialMetric, gamma: f64, radius: f64, alpha: f64) -> Result<Shot> {
    let r0 = START_OFFSET * radius;
    let a_g = source(alpha, gamma);
    // two-term series at the pole (f(r) ≈ r)
    let u0 = alpha - a_g * r0 * r0 / 4.0;
    let du0 = -a_g * r0 / 2.0;
    let y0 = [
        u0,
        metric.f(r0) * du0,
        PI * alpha * a_g * r0 * r0,
        PI * a_g * r0 * r0,
    ];
    let rhs = |r: f64, y: &[f64; 4]| {
        let f = metric.f(r);
        let s = source(y[0], gamma);
        [y[1] / f, -f * s, 2.0 * PI * y[0].max(0.0) * s * f, 2.0 * PI * s * f]
    };
    let scale_u = alpha;
    let scale_p = a_g * radius * radius;
    let tol = Tolerances {
        rtol: ODE_RTOL,
        atol: [1e-13 * scale_u, 1e-13 * scale_p, 1e-13 * scale_u * scale_p, 1e-13 * scale_p],
    };
    let traj = ode::integrate(rhs, r0, y0, radius, tol, |_, _| false)?;
    Ok(Shot { traj, r0 })
}

fn end_value(metric: &RadialMetric, gamma: f64, radius: f64, alpha: f64) -> Result<f64> {
    Ok(shoot_once(metric, gamma, radius, alpha)?.traj.last().1[0])
}

fn check_radius(metric: &RadialMetric, radius: f64) -> Result<()> {
    if radius > 0.0 && radius <= metric.r_max() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius {radius} outside (0, {}]", metric.r_max())))
    }
}

/// Shoots on the center value until `|u(R)| ≤ tol·α` and returns the
/// profile.
pub fn shoot_torsion(metric: &RadialMetric, gamma: f64, radius: f64, tol: f64) -> Result<RadialProfile> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Argument(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument("shooting tolerance must be positive".into()));
    }
    check_radius(metric, radius)?;

    // flat-disk guess α = (R²/4)^{1/(1-γ)}, then expand geometrically
    let guess = (radius * radius / 4.0).powf(1.0 / (1.0 - gamma));
    let mut lo = guess;
    let mut hi = guess;
    let mut g_lo = end_value(metric, gamma, radius, lo)?;
    let mut g_hi = g_lo;
    let mut expansions = 0;
    while g_lo >= 0.0 {
        lo /= 2.0;
        g_lo = end_value(metric, gamma, radius, lo)?;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Oracle { message: "no lower bracket for the center value".into(), lo, hi });
        }
    }
    expansions = 0;
    while g_hi <= 0.0 {
        hi *= 2.0;
        g_hi = end_value(metric, gamma, radius, hi)?;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Oracle { message: "no upper bracket for the center value".into(), lo, hi });
        }
    }

    // Illinois regula falsi on the bracket
    let mut alpha = 0.5 * (lo + hi);
    let mut side = 0i8;
    for _ in 0..200 {
        alpha = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if !(alpha > lo && alpha < hi) {
            alpha = 0.5 * (lo + hi);
        }
        let g = end_value(metric, gamma, radius, alpha)?;
        if g.abs() <= tol * alpha || (hi - lo) <= 1e-15 * hi {
            break;
        }
        if g < 0.0 {
            lo = alpha;
            g_lo = g;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = alpha;
            g_hi = g;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }

    let shot = shoot_once(metric, gamma, radius, alpha)?;
    let (_, end) = shot.traj.last();
    if end[0].abs() > tol * alpha * 10.0 {
        return Err(Error::Oracle { message: format!("shooting stalled with u(R) = {:e}", end[0]), lo, hi });
    }
    let mut r_nodes = vec![0.0];
    let mut u_values = vec![alpha];
    let mut du_values = vec![0.0];
    debug_assert_eq!(shot.traj.t[0], shot.r0);
    for (r, y) in shot.traj.t.iter().zip(&shot.traj.y) {
        r_nodes.push(*r);
        u_values.push(y[0]);
        du_values.push(y[1] / metric.f(*r));
    }
    Ok(RadialProfile {
        r_nodes,
        u_values,
        du_values,
        alpha,
        gamma,
        radius,
        metric: metric.clone(),
        rigidity: end[2],
        moment: end[3],
    })
}

/// Functionals of a radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleRigidity {
    /// `2π ∫ u^{1+γ} f dr`
    #[serde(rename = "T")]
    pub t: f64,
    /// `2π ∫ u^γ f dr`
    pub i_gamma: f64,
    /// `u'(R)`
    pub flux: f64,
}

/// Rigidity, moment and boundary flux of a converged profile, accumulated
/// by the adaptive integrator alongside the shooting ODE.
pub fn oracle_rigidity(profile: &RadialProfile) -> OracleRigidity {
    OracleRigidity { t: profile.rigidity, i_gamma: profile.moment, flux: profile.flux() }
}

/// Integrates the eigen ODE; `None` when `u` changes sign before `R`.
fn eigen_end_value(metric: &RadialMetric, radius: f64, lambda: f64) -> Result<Option<f64>> {
    let r0 = START_OFFSET * radius;
    let y0 = [1.0 - lambda * r0 * r0 / 4.0, metric.f(r0) * (-lambda * r0 / 2.0)];
    let rhs = |r: f64, y: &[f64; 2]| {
        let f = metric.f(r);
        [y[1] / f, -lambda * f * y[0]]
    };
    let tol = Tolerances { rtol: ODE_RTOL, atol: [1e-14, 1e-14 * lambda.max(1.0) * radius * radius] };
    let traj = ode::integrate(rhs, r0, y0, radius, tol, |r, y| y[0] < 0.0 && r < radius)?;
    let (r, y) = traj.last();
    if r < radius {
        Ok(None)
    } else {
        Ok(Some(y[0]))
    }
}

/// Smallest `λ` for which the regular solution with `u(0) = 1` vanishes at
/// `R` while staying positive inside.
pub fn shoot_eigen(metric: &RadialMetric, radius: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Argument("shooting tolerance must be positive".into()));
    }
    check_radius(metric, radius)?;
    let below = |v: Option<f64>| matches!(v, Some(x) if x > 0.0);
    let mut lo = 0.0;
    let mut hi = 1.0 / (radius * radius);
    let mut expansions = 0;
    while below(eigen_end_value(metric, radius, hi)?) {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Oracle { message: "no eigenvalue bracket".into(), lo, hi });
        }
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if below(eigen_end_value(metric, radius, mid)?) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QPoint {
    pub r: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

fn check_grid(r_grid: &[f64]) -> Result<()> {
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[1] <= w[0]) || r_grid[0] <= 0.0 {
        return Err(Error::Argument("radius grid must be nonempty, positive and increasing".into()));
    }
    Ok(())
}

/// `Q(r) = T(B(o, r)) / r^{τ/(π(1−γ))}` on the grid.
pub fn sweep_q(metric: &RadialMetric, gamma: f64, tau: &TauValue, r_grid: &[f64]) -> Result<Vec<QPoint>> {
    let tau = tau.require_positive()?;
    check_grid(r_grid)?;
    let exponent = tau / (PI * (1.0 - gamma));
    r_grid
        .iter()
        .map(|&r| {
            let t = oracle_rigidity(&shoot_torsion(metric, gamma, r, DEFAULT_SHOOT_TOL)?).t;
            Ok(QPoint { r, t, q: t / r.powf(exponent) })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenQPoint {
    pub r: f64,
    pub lambda: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

/// `Q(r) = Λ(B(o, r)) · r^{τ/(2π)}` on the grid.
pub fn sweep_eigen_q(metric: &RadialMetric, tau: &TauValue, r_grid: &[f64]) -> Result<Vec<EigenQPoint>> {
    let tau = tau.require_positive()?;
    check_grid(r_grid)?;
    let exponent = tau / (2.0 * PI);
    r_grid
        .iter()
        .map(|&r| {
            let lambda = shoot_eigen(metric, r, 1e-12)?;
            Ok(EigenQPoint { r, lambda, q: lambda * r.powf(exponent) })
        })
        .collect()
}

/// True when every step `v[k+1] − v[k]` is at least `−rel_tol·|v[k]|`.
pub fn is_nondecreasing(values: &[f64], rel_tol: f64) -> bool {
    values.windows(2).all(|w| w[1] - w[0] >= -rel_tol * w[0].abs())
}

/// True when every step `v[k+1] − v[k]` is at most `rel_tol·|v[k]|`.
pub fn is_nonincreasing(values: &[f64], rel_tol: f64) -> bool {
    values.windows(2).all(|w| w[1] - w[0] <= rel_tol * w[0].abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = DEFAULT_SHOOT_TOL;

    #[test]
    fn flat_linear_torsion_profile() {
        let p = shoot_torsion(&RadialMetric::flat(), 0.0, 1.0, TOL).unwrap();
        assert!((p.alpha - 0.25).abs() < 1e-8);
        for &r in &[0.0, 0.1, 0.37, 0.5, 0.81, 1.0] {
            assert!((p.u_at(r) - (1.0 - r * r) / 4.0).abs() < 1e-8, "r = {r}");
        }
        let p2 = shoot_torsion(&RadialMetric::flat(), 0.0, 2.0, TOL).unwrap();
        assert!((p2.alpha - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flat_rigidity_and_green_identity() {
        let p = shoot_torsion(&RadialMetric::flat(), 0.0, 1.0, TOL).unwrap();
        let o = oracle_rigidity(&p);
        assert!((o.t - PI / 8.0).abs() < 1e-9);
        assert!((o.i_gamma - PI).abs() < 1e-9);
        assert!((o.flux + 0.5).abs() < 1e-9);
        assert!((o.i_gamma - o.flux.abs() * 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn flat_equality_identity_for_several_gammas() {
        for gamma in [0.0, 0.3, 0.6] {
            let o = oracle_rigidity(&shoot_torsion(&RadialMetric::flat(), gamma, 1.0, TOL).unwrap());
            let rhs = (1.0 + gamma) * PI / 2.0 * o.flux * o.flux;
            assert!((o.t - rhs).abs() / o.t < 1e-8, "gamma = {gamma}");
        }
    }

    #[test]
    fn cone_profile_matches_flat_outside_apex() {
        let flat = shoot_torsion(&RadialMetric::flat(), 0.0, 1.0, TOL).unwrap();
        let cone = shoot_torsion(&RadialMetric::cone(0.5, 1e-4).unwrap(), 0.0, 1.0, TOL).unwrap();
        for &r in &[0.05, 0.2, 0.5, 0.9] {
            assert!((flat.u_at(r) - cone.u_at(r)).abs() < 1e-6, "r = {r}");
        }
    }

    #[test]
    fn profile_is_decreasing() {
        let p = shoot_torsion(&RadialMetric::sphere(), 0.5, 2.0, TOL).unwrap();
        assert!(p.u_values.windows(2).all(|w| w[1] < w[0]));
        assert!(p.du_values[1..].iter().all(|&d| d < 0.0));
    }

    #[test]
    fn eigenvalues() {
        let j0_sq = 5.783185962946784;
        let l1 = shoot_eigen(&RadialMetric::flat(), 1.0, 1e-12).unwrap();
        assert!((l1 - j0_sq).abs() < 1e-5);
        let l2 = shoot_eigen(&RadialMetric::flat(), 2.0, 1e-12).unwrap();
        assert!((l2 - l1 / 4.0).abs() < 1e-8);
        let hemi = shoot_eigen(&RadialMetric::sphere(), std::f64::consts::FRAC_PI_2, 1e-12).unwrap();
        assert!((hemi - 2.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(shoot_torsion(&RadialMetric::flat(), 1.0, 1.0, TOL).is_err());
        assert!(shoot_torsion(&RadialMetric::sphere(), 0.0, 4.0, TOL).is_err());
        assert!(sweep_q(&RadialMetric::flat(), 0.0, &TauValue::flat(), &[]).is_err());
    }

    #[test]
    fn flat_q_is_constant() {
        let grid = [0.5, 1.0, 1.5, 2.0];
        let q = sweep_q(&RadialMetric::flat(), 0.0, &TauValue::flat(), &grid).unwrap();
        for pt in &q {
            assert!((pt.q - PI / 8.0).abs() / (PI / 8.0) < 1e-8);
        }
        let q = sweep_q(&RadialMetric::flat(), 0.5, &TauValue::flat(), &grid).unwrap();
        for pt in &q {
            assert!((pt.q - q[0].q).abs() / q[0].q < 1e-8);
        }
    }
}
