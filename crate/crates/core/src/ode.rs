//! Adaptive Dormand–Prince 5(4) integration for small first-order systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Mixed error control: component `i` is accepted when its local error is
/// below `atol[i] + rtol·|y_i|`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
}

/// Accepted steps of an integration, including the initial point.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().expect("nonempty"), *self.y.last().expect("nonempty"))
    }
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1`. `stop` is checked after
/// every accepted step and ends the integration early when it returns true.
pub fn integrate<const N: usize, F, S>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: Tolerances<N>,
    stop: S,
) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    S: Fn(f64, &[f64; N]) -> bool,
{
    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut h = span * 1e-3;
    let mut traj = Trajectory { t: vec![t0], y: vec![y0] };
    let mut k = [[0.0; N]; 7];
    k[0] = rhs(t, &y);
    let max_steps = 1_000_000;
    for _ in 0..max_steps {
        if t >= t1 {
            return Ok(traj);
        }
        if t + h > t1 {
            h = t1 - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                for j in 0..s {
                    *v += h * A[s][j] * k[j][i];
                }
            }
            k[s] = rhs(t + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for i in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            let sc = tol.atol[i] + tol.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (d5 - d4)).abs() / sc);
        }
        if err <= 1.0 {
            t = if (t1 - (t + h)).abs() <= 1e-15 * span.abs() { t1 } else { t + h };
            y = y5;
            // FSAL: the last stage is the derivative at the new point
            k[0] = k[6];
            traj.t.push(t);
            traj.y.push(y);
            if stop(t, &y) {
                return Ok(traj);
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h.abs() < 1e-14 * span.abs() {
            return Err(Error::Domain(format!("step size underflow at t = {t}")));
        }
    }
    Err(Error::Domain("too many integration steps".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let tol = Tolerances { rtol: 1e-12, atol: [1e-14; 2] };
        let tr = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 3.0, tol, |_, _| false).unwrap();
        let (t, y) = tr.last();
        assert_eq!(t, 3.0);
        assert!((y[0] - 3f64.sin()).abs() < 1e-10);
        assert!((y[1] - 3f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn early_stop() {
        let tol = Tolerances { rtol: 1e-10, atol: [1e-12] };
        let tr = integrate(|_, _: &[f64; 1]| [-1.0], 0.0, [1.0], 5.0, tol, |_, y| y[0] < 0.0).unwrap();
        let (t, y) = tr.last();
        assert!(t < 5.0 && y[0] < 0.0);
    }
}
