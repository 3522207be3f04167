//! Shape-preserving piecewise cubic Hermite interpolation (PCHIP).
//!
//! Interior node slopes use the weighted harmonic mean of the adjacent
//! secants (Fritsch–Butland), which keeps the interpolant monotone on every
//! interval where the data are monotone. End slopes come from the usual
//! one-sided three-point formula unless the caller pins them.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    step: Option<f64>,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if sign(d) != sign(m0) {
        0.0
    } else if sign(m0) != sign(m1) && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Detects a uniform grid so lookups can skip the binary search.
pub(crate) fn uniform_step(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let n = x.len() - 1;
    let step = (x[n] - x[0]) / n as f64;
    let tol = 1e-9 * step;
    x.windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= tol)
        .then_some(step)
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::with_end_slopes(x, y, None, None)
    }

    /// Builds the interpolant, optionally overriding the end slopes. Pinned
    /// slopes are clipped into `[0, 3·secant]` (or the mirrored range for
    /// decreasing data) so that shape preservation survives the override.
    pub fn with_end_slopes(
        x: Vec<f64>,
        y: Vec<f64>,
        left: Option<f64>,
        right: Option<f64>,
    ) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::domain("pchip: x and y must have equal length >= 2"));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("pchip: non-finite input"));
        }
        if let Some(k) = x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::domain(format!(
                "pchip: abscissae not strictly increasing at index {}",
                k + 1
            )));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let m: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = m[0];
            d[1] = m[0];
        } else {
            for k in 1..n - 1 {
                if m[k - 1] * m[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / m[k - 1] + w2 / m[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], m[0], m[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
        }
        let clip = |s: f64, secant: f64| {
            if secant == 0.0 {
                0.0
            } else if secant > 0.0 {
                s.clamp(0.0, 3.0 * secant)
            } else {
                s.clamp(3.0 * secant, 0.0)
            }
        };
        if let Some(s) = left {
            d[0] = clip(s, m[0]);
        }
        if let Some(s) = right {
            d[n - 1] = clip(s, m[n - 2]);
        }
        let step = uniform_step(&x);
        Ok(Self { x, y, d, step })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    /// Index `k` of the interval `[x_k, x_{k+1}]` containing `t` (clamped).
    pub fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        let k = match self.step {
            Some(step) => {
                let r = ((t - self.x[0]) / step).floor();
                if r < 0.0 {
                    0
                } else {
                    (r as usize).min(n - 2)
                }
            }
            None => self.x.partition_point(|&v| v <= t).saturating_sub(1).min(n - 2),
        };
        // guard against rounding in the uniform fast path
        if k + 1 < n - 1 && t >= self.x[k + 1] {
            k + 1
        } else if k > 0 && t < self.x[k] {
            k - 1
        } else {
            k
        }
    }

    /// Value at `t`. Outside the data range the end cubic is not
    /// extrapolated; the end value is returned.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = self.interval(t);
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }

    /// First derivative at `t` (zero outside the data range).
    pub fn derivative(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t < self.x[0] || t > self.x[n - 1] {
            return 0.0;
        }
        let k = self.interval(t);
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let dh00 = (6.0 * s2 - 6.0 * s) / h;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = (-6.0 * s2 + 6.0 * s) / h;
        let dh11 = 3.0 * s2 - 2.0 * s;
        dh00 * self.y[k] + dh10 * self.d[k] + dh01 * self.y[k + 1] + dh11 * self.d[k + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_lines() {
        let x: Vec<f64> = (0..6).map(|k| k as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(p.eval(*xi), *yi);
        }
        assert!((p.eval(1.3) - 3.6).abs() < 1e-14);
        assert!((p.derivative(1.3) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn no_overshoot_on_step_data() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![0.0, 0.0, 1.0, 1.0, 1.0];
        let p = Pchip::new(x, y).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=400 {
            let v = p.eval(k as f64 * 0.01);
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn rejects_unsorted_abscissae() {
        assert!(Pchip::new(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
    }
}
