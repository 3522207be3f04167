//! Monotone wave profiles on a truncated grid with analytic exponential tails.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::nonlinearity::Reaction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Exponential model of a profile beyond one end of its grid.
///
/// Left: `A·(−t)^j·e^{λt}`, anchored so it passes through the first grid
/// value. Right: `κ − B·e^{−μt}`, anchored at the last grid value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub side: Side,
    pub rate: f64,
    pub coeff: f64,
    pub poly_degree: u8,
    pub offset: f64,
    pub anchor_t: f64,
    pub anchor_value: f64,
}

impl TailModel {
    pub fn left(rate: f64, poly_degree: u8, anchor_t: f64, anchor_value: f64) -> Self {
        let coeff = anchor_value
            * (-rate * anchor_t).exp()
            * if poly_degree == 1 { 1.0 / (-anchor_t) } else { 1.0 };
        Self { side: Side::Left, rate, coeff, poly_degree, offset: 0.0, anchor_t, anchor_value }
    }

    pub fn right(rate: f64, kappa: f64, anchor_t: f64, anchor_value: f64) -> Self {
        let coeff = (kappa - anchor_value) * (rate * anchor_t).exp();
        Self { side: Side::Right, rate, coeff, poly_degree: 0, offset: kappa, anchor_t, anchor_value }
    }

    pub fn value(&self, t: f64) -> f64 {
        let dt = t - self.anchor_t;
        match self.side {
            Side::Left => {
                let poly = if self.poly_degree == 1 { t / self.anchor_t } else { 1.0 };
                self.anchor_value * poly * (self.rate * dt).exp()
            }
            Side::Right => self.offset - (self.offset - self.anchor_value) * (-self.rate * dt).exp(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self.side {
            Side::Left => {
                let log_slope =
                    if self.poly_degree == 1 { self.rate + 1.0 / t } else { self.rate };
                self.value(t) * log_slope
            }
            Side::Right => {
                self.rate * (self.offset - self.anchor_value) * (-self.rate * (t - self.anchor_t)).exp()
            }
        }
    }

    fn shifted(&self, s0: f64) -> Self {
        let mut m = *self;
        m.anchor_t -= s0;
        match m.side {
            Side::Left => TailModel::left(m.rate, m.poly_degree, m.anchor_t, m.anchor_value),
            Side::Right => TailModel::right(m.rate, m.offset, m.anchor_t, m.anchor_value),
        }
    }
}

/// Optional overrides for tail fitting in [`make_profile`].
#[derive(Clone, Copy, Debug, Default)]
pub struct TailHints {
    pub left_rate: Option<f64>,
    pub left_degree: Option<u8>,
    pub right_rate: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub poly_degree: u8,
    pub r_squared: f64,
    pub window: (f64, f64),
}

impl DecayFit {
    pub fn reliable(&self) -> bool {
        self.r_squared >= 0.999
    }
}

/// A nondecreasing profile `φ` with limits `0` and `κ`.
///
/// Profiles built by [`make_profile`] or [`Profile::new`] satisfy the strict
/// invariants (strictly increasing values inside `(0, κ)`). Upper and lower
/// bounds such as `min{κ, e^{λt}}` touch the limits; they are built with
/// [`Profile::bound`], which only requires `0 ≤ φ ≤ κ` and monotonicity.
#[derive(Clone, Debug)]
pub struct Profile {
    grid: Vec<f64>,
    values: Vec<f64>,
    c: f64,
    h: f64,
    kappa: f64,
    left: TailModel,
    right: TailModel,
    interp: Pchip,
    strict: bool,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    c: f64,
    h: f64,
    kappa: f64,
    left_tail: TailModel,
    right_tail: TailModel,
}

fn check_arrays(grid: &[f64], values: &[f64]) -> Result<()> {
    if grid.len() != values.len() {
        return Err(Error::domain("grid and values differ in length"));
    }
    if grid.len() < 16 {
        return Err(Error::domain(format!("profile needs at least 16 nodes, got {}", grid.len())));
    }
    if grid.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::domain("profile data must be finite"));
    }
    if let Some(k) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!("grid not strictly increasing at index {}", k + 1)));
    }
    let steps = grid.windows(2).map(|w| w[1] - w[0]);
    let (lo, hi) = steps.fold((f64::MAX, 0.0f64), |(a, b), s| (a.min(s), b.max(s)));
    if hi > 10.0 * lo * (1.0 + 1e-12) {
        return Err(Error::domain(format!("grid steps vary too much: max {hi} vs min {lo}")));
    }
    Ok(())
}

/// Least squares line through `(x, y)`: slope, intercept, residual sum of squares, r².
pub(crate) fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ssr / syy).clamp(0.0, 1.0) } else { 1.0 };
    (slope, icpt, ssr, r2)
}

/// Log-linear fit of a left tail, choosing `(−t)e^{λt}` over `e^{λt}` when it
/// reduces the residual by at least a factor 10.
fn fit_left(t: &[f64], v: &[f64]) -> (f64, u8, f64) {
    let y: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let (r0, _, ssr0, r2_0) = line_fit(t, &y);
    if t.iter().all(|&s| s < 0.0) {
        let y1: Vec<f64> = y.iter().zip(t).map(|(a, s)| a - (-s).ln()).collect();
        let (r1, _, ssr1, r2_1) = line_fit(t, &y1);
        if ssr0 >= 10.0 * ssr1 && r1 > 0.0 {
            return (r1, 1, r2_1);
        }
    }
    (r0, 0, r2_0)
}

impl Profile {
    /// Strict constructor with explicit tail rates; both tails are anchored at
    /// the grid ends, so they match the end values exactly.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: Vec<f64>,
        values: Vec<f64>,
        c: f64,
        h: f64,
        kappa: f64,
        left_rate: f64,
        left_degree: u8,
        right_rate: f64,
    ) -> Result<Self> {
        Self::build(grid, values, c, h, kappa, left_rate, left_degree, right_rate, kappa, true)
    }

    /// Relaxed constructor for upper/lower bounds: values need only be
    /// nondecreasing (up to `1e-13·κ`) and inside `[0, κ]`.
    #[allow(clippy::too_many_arguments)]
    pub fn bound(
        grid: Vec<f64>,
        values: Vec<f64>,
        c: f64,
        h: f64,
        kappa: f64,
        left_rate: f64,
        left_degree: u8,
        right_rate: f64,
    ) -> Result<Self> {
        Self::build(grid, values, c, h, kappa, left_rate, left_degree, right_rate, kappa, false)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        grid: Vec<f64>,
        values: Vec<f64>,
        c: f64,
        h: f64,
        kappa: f64,
        left_rate: f64,
        left_degree: u8,
        right_rate: f64,
        right_offset: f64,
        strict: bool,
    ) -> Result<Self> {
        check_arrays(&grid, &values)?;
        if !(kappa > 0.0) || !(c > 0.0) || !(h >= 0.0) {
            return Err(Error::domain(format!("invalid profile parameters c = {c}, h = {h}, kappa = {kappa}")));
        }
        if !(left_rate > 0.0 && right_rate > 0.0) {
            return Err(Error::domain(format!(
                "tail rates must be positive, got left {left_rate}, right {right_rate}"
            )));
        }
        if left_degree > 1 {
            return Err(Error::domain("left tail polynomial degree must be 0 or 1"));
        }
        let n = grid.len();
        if left_degree == 1 && !(grid[0] < -1.0 / left_rate) {
            return Err(Error::domain("degree-1 left tail needs t0 < -1/rate"));
        }
        if strict {
            if let Some(k) = values.windows(2).position(|w| w[1] <= w[0]) {
                return Err(Error::domain(format!(
                    "values not strictly increasing at index {} (t = {}): {} then {}",
                    k + 1,
                    grid[k + 1],
                    values[k],
                    values[k + 1]
                )));
            }
            if !(values[0] > 0.0 && values[n - 1] < kappa) {
                return Err(Error::domain(format!(
                    "values must lie in (0, kappa): first {}, last {}",
                    values[0],
                    values[n - 1]
                )));
            }
        } else {
            // rounding-level wiggles near the limits are tolerated
            let slack = 1e-13 * kappa;
            if let Some(k) = values.windows(2).position(|w| w[1] < w[0] - slack) {
                return Err(Error::domain(format!(
                    "bound values decrease at index {} (t = {})",
                    k + 1,
                    grid[k + 1]
                )));
            }
            if values[0] < 0.0 || values[n - 1] > right_offset + slack || right_offset > kappa {
                return Err(Error::domain(format!(
                    "bound values must lie in [0, {right_offset}] (kappa = {kappa}): first {}, last {}",
                    values[0],
                    values[n - 1]
                )));
            }
        }
        let left = TailModel::left(left_rate, left_degree, grid[0], values[0]);
        let right = TailModel::right(right_rate, right_offset, grid[n - 1], values[n - 1]);
        let interp = Pchip::with_end_slopes(
            grid.clone(),
            values.clone(),
            Some(left.derivative(grid[0])),
            Some(right.derivative(grid[n - 1])),
        )?;
        Ok(Self { grid, values, c, h, kappa, left, right, interp, strict })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn left_tail(&self) -> &TailModel {
        &self.left
    }

    pub fn right_tail(&self) -> &TailModel {
        &self.right
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.grid.len();
        if t < self.grid[0] {
            let v = self.left.value(t);
            if self.strict {
                v.clamp(f64::MIN_POSITIVE, self.values[0])
            } else {
                v.clamp(0.0, self.values[0])
            }
        } else if t > self.grid[n - 1] {
            let v = self.right.value(t);
            if self.strict {
                v.clamp(self.values[n - 1], self.kappa.next_down())
            } else {
                v.clamp(self.values[n - 1], self.right.offset)
            }
        } else {
            self.interp.eval(t)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let n = self.grid.len();
        if t < self.grid[0] {
            self.left.derivative(t)
        } else if t > self.grid[n - 1] {
            self.right.derivative(t)
        } else {
            self.interp.derivative(t)
        }
    }

    /// The profile of `t ↦ φ(t + s0)`, carried on the shifted grid.
    pub fn shift(&self, s0: f64) -> Profile {
        let grid: Vec<f64> = self.grid.iter().map(|t| t - s0).collect();
        let left = self.left.shifted(s0);
        let right = self.right.shifted(s0);
        let interp = Pchip::with_end_slopes(
            grid.clone(),
            self.values.clone(),
            Some(left.derivative(grid[0])),
            Some(right.derivative(*grid.last().unwrap())),
        )
        .expect("shifted grid stays valid");
        Profile { grid, values: self.values.clone(), left, right, interp, ..self.clone() }
    }

    /// Same grid, parameters and tail rates with new values. The result is
    /// strict when the values allow it and a bound otherwise.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Profile> {
        let n = values.len();
        let strict = n == self.grid.len()
            && self.right.offset == self.kappa
            && values.windows(2).all(|w| w[1] > w[0])
            && values[0] > 0.0
            && values[n - 1] < self.kappa;
        Profile::build(
            self.grid.clone(),
            values,
            self.c,
            self.h,
            self.kappa,
            self.left.rate,
            self.left.poly_degree,
            self.right.rate,
            self.right.offset,
            strict,
        )
    }

    /// Like [`Profile::with_values`], with a new right-tail limit.
    pub fn with_right_offset(&self, values: Vec<f64>, offset: f64) -> Result<Profile> {
        if offset == self.right.offset {
            return self.with_values(values);
        }
        Profile::build(
            self.grid.clone(),
            values,
            self.c,
            self.h,
            self.kappa,
            self.left.rate,
            self.left.poly_degree,
            self.right.rate,
            offset,
            false,
        )
    }

    /// The same function viewed as a bound in a problem with the larger
    /// limit `kappa`; the right tail keeps its own limit.
    pub fn embed(&self, kappa: f64) -> Result<Profile> {
        Profile::build(
            self.grid.clone(),
            self.values.clone(),
            self.c,
            self.h,
            kappa,
            self.left.rate,
            self.left.poly_degree,
            self.right.rate,
            self.right.offset,
            false,
        )
    }

    /// Samples the profile on a new grid, keeping both tail rates.
    pub fn resample(&self, grid: Vec<f64>) -> Result<Profile> {
        let values: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        Profile::build(
            grid,
            values,
            self.c,
            self.h,
            self.kappa,
            self.left.rate,
            self.left.poly_degree,
            self.right.rate,
            self.right.offset,
            self.strict,
        )
    }

    /// Smallest `t` with `φ(t) = level`, found by bisection on the monotone profile.
    pub fn level_crossing(&self, level: f64) -> Option<f64> {
        let n = self.grid.len();
        if !(level > 0.0 && level < self.kappa) {
            return None;
        }
        let k = self.values.partition_point(|&v| v < level);
        let (mut lo, mut hi) = if k == 0 {
            if self.left.value(self.grid[0] - 1e6) > level {
                return None;
            }
            let mut lo = self.grid[0] - 1.0;
            while self.eval(lo) >= level {
                lo -= 2.0 * (self.grid[0] - lo);
            }
            (lo, self.grid[0])
        } else if k == n {
            if self.right.value(self.grid[n - 1] + 1e6) < level {
                return None;
            }
            let mut hi = self.grid[n - 1] + 1.0;
            while self.eval(hi) < level {
                hi += 2.0 * (hi - self.grid[n - 1]);
            }
            (self.grid[n - 1], hi)
        } else {
            (self.grid[k - 1], self.grid[k])
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Shifted copy normalised to `φ(0) = κ/2`.
    pub fn normalized(&self) -> Result<Profile> {
        let t = self
            .level_crossing(0.5 * self.kappa)
            .ok_or_else(|| Error::domain("profile never reaches kappa/2"))?;
        Ok(self.shift(t))
    }

    /// Decay fit of `ln φ` on the grid nodes inside `window`.
    pub fn decay_rate_fit(&self, window: (f64, f64)) -> Result<DecayFit> {
        let (lo, hi) = window;
        let mut t = Vec::new();
        let mut v = Vec::new();
        for (&s, &x) in self.grid.iter().zip(&self.values) {
            if s >= lo && s <= hi {
                if !(x > 0.0) {
                    return Err(Error::domain(format!("nonpositive value {x} at t = {s} in fit window")));
                }
                if x >= self.kappa / 20.0 {
                    return Err(Error::domain(format!(
                        "fit window reaches t = {s} where phi = {x} >= kappa/20"
                    )));
                }
                t.push(s);
                v.push(x);
            }
        }
        if t.len() < 8 {
            return Err(Error::domain(format!("fit window holds {} nodes, need >= 8", t.len())));
        }
        let (rate, poly_degree, r_squared) = fit_left(&t, &v);
        Ok(DecayFit { rate, poly_degree, r_squared, window })
    }

    /// Fit window between the nodes where `φ` crosses `lo·κ` and `hi·κ`.
    pub fn level_window(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let a = self.level_crossing(lo * self.kappa)?;
        let b = self.level_crossing(hi * self.kappa)?;
        Some((a.max(self.grid[0]), b))
    }

    /// Sup over interior nodes of `|φ″ − cφ′ − φ + g(φ(t − ch))|`, with
    /// five-point centred differences at the local grid spacing.
    pub fn residual(&self, g: &dyn Reaction) -> Result<f64> {
        let n = self.grid.len();
        if n < 5 {
            return Err(Error::domain("grid too coarse for the five-point stencil"));
        }
        let mut worst: f64 = 0.0;
        for k in 2..n - 2 {
            worst = worst.max(self.residual_at(k, g).abs());
        }
        Ok(worst)
    }

    /// Signed residual at grid node `k` (`2 ≤ k ≤ N − 2`).
    pub fn residual_at(&self, k: usize, g: &dyn Reaction) -> f64 {
        let t = self.grid[k];
        let d = (self.grid[k + 1] - self.grid[k]).min(self.grid[k] - self.grid[k - 1]);
        let (m2, m1, p1, p2) = if (self.grid[k + 2] - t - 2.0 * d).abs() < 1e-9 * d
            && (t - self.grid[k - 2] - 2.0 * d).abs() < 1e-9 * d
        {
            (self.values[k - 2], self.values[k - 1], self.values[k + 1], self.values[k + 2])
        } else {
            (self.eval(t - 2.0 * d), self.eval(t - d), self.eval(t + d), self.eval(t + 2.0 * d))
        };
        let v = self.values[k];
        let d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * d);
        let d2 = (-p2 + 16.0 * p1 - 30.0 * v + 16.0 * m1 - m2) / (12.0 * d * d);
        d2 - self.c * d1 - v + g.react(self.eval(t - self.c * self.h))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "phi"])?;
        for (t, v) in self.grid.iter().zip(&self.values) {
            w.write_record([format!("{t:e}"), format!("{v:e}")])?;
        }
        w.flush()?;
        let side = Sidecar {
            c: self.c,
            h: self.h,
            kappa: self.kappa,
            left_tail: self.left,
            right_tail: self.right,
        };
        std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&side)?)?;
        Ok(())
    }

    /// Reads `t,phi` rows and the JSON sidecar next to the CSV file.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Profile> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path)?;
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for rec in r.deserialize() {
            let (t, v): (f64, f64) = rec?;
            grid.push(t);
            values.push(v);
        }
        let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(path.with_extension("json"))?)?;
        let strict = side.right_tail.offset == side.kappa
            && values.windows(2).all(|w| w[1] > w[0])
            && values.first().is_some_and(|&v| v > 0.0)
            && values.last().is_some_and(|&v| v < side.kappa);
        Profile::build(
            grid,
            values,
            side.c,
            side.h,
            side.kappa,
            side.left_tail.rate,
            side.left_tail.poly_degree,
            side.right_tail.rate,
            side.right_tail.offset,
            strict,
        )
    }
}

/// Builds a strict profile, fitting both tails on the outer 10% of nodes.
pub fn make_profile(
    grid: Vec<f64>,
    values: Vec<f64>,
    c: f64,
    h: f64,
    kappa: f64,
    hints: TailHints,
) -> Result<Profile> {
    check_arrays(&grid, &values)?;
    if let Some(k) = values.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!(
            "values not strictly increasing at index {} (t = {})",
            k + 1,
            grid[k + 1]
        )));
    }
    let n = grid.len();
    let m = (n / 10).max(4);
    let (mut lrate, mut ldeg, _) = fit_left(&grid[..m], &values[..m]);
    if let Some(r) = hints.left_rate {
        lrate = r;
        ldeg = hints.left_degree.unwrap_or(0);
    }
    let rrate = match hints.right_rate {
        Some(r) => r,
        None => {
            let y: Vec<f64> = values[n - m..].iter().map(|v| (kappa - v).max(f64::MIN_POSITIVE).ln()).collect();
            -line_fit(&grid[n - m..], &y).0
        }
    };
    if !(lrate > 0.0 && rrate > 0.0) {
        return Err(Error::domain(format!(
            "tail fit produced non-positive rates (left {lrate}, right {rrate}); values not monotone near the ends"
        )));
    }
    Profile::new(grid, values, c, h, kappa, lrate, ldeg, rrate)
}

/// `n` uniformly spaced nodes on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|k| a + step * k as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn logistic() -> Profile {
        let grid = uniform_grid(-20.0, 20.0, 2001);
        let values = grid.iter().map(|t| 1.0 / (1.0 + (-t).exp())).collect();
        make_profile(grid, values, 1.0, 0.0, 1.0, TailHints::default()).unwrap()
    }

    #[test]
    fn logistic_tails_have_unit_rates() {
        let p = logistic();
        assert!((p.left_tail().rate - 1.0).abs() < 1e-6);
        assert_eq!(p.left_tail().poly_degree, 0);
        assert!((p.right_tail().rate - 1.0).abs() < 1e-6);
    }

    #[test]
    fn smoothed_kink_left_rate() {
        // smooth minimum of 1 and e^{t/2}
        let grid = uniform_grid(-60.0, 5.0, 4001);
        let values = grid
            .iter()
            .map(|&t| {
                let e: f64 = (0.5 * t).exp();
                e / (1.0 + e.powi(8)).powf(0.125)
            })
            .collect();
        let p = make_profile(grid, values, 1.0, 0.0, 1.0, TailHints { right_rate: Some(1.0), ..Default::default() })
            .unwrap();
        assert!((p.left_tail().rate - 0.5).abs() < 1e-3);
    }

    #[test]
    fn constant_values_rejected() {
        let grid = uniform_grid(0.0, 1.0, 20);
        let err = make_profile(grid, vec![0.5; 20], 1.0, 0.0, 1.0, TailHints::default()).unwrap_err();
        assert!(err.to_string().contains("not strictly increasing"), "{err}");
    }

    #[test]
    fn eval_hits_nodes_and_tails() {
        let p = logistic();
        for k in [0, 17, 1000, 2000] {
            assert_eq!(p.eval(p.grid()[k]), p.values()[k]);
        }
        let t = -50.0;
        assert!((p.eval(t) - p.left_tail().value(t)).abs() <= 1e-15 * p.eval(t));
        assert!(p.eval(-1e6) > 0.0 && p.eval(1e6) < 1.0);
    }

    #[test]
    fn shift_round_trip_and_tail_law() {
        let p = logistic();
        let q = p.shift(0.0);
        assert_eq!(q.values(), p.values());
        let s = 1.7;
        let back = p.shift(s).shift(-s);
        for k in 0..=400 {
            let t = -30.0 + 0.15 * k as f64;
            assert!((back.eval(t) - p.eval(t)).abs() <= 1e-8);
        }
        let shifted = p.shift(s);
        let ratio = shifted.left_tail().coeff / p.left_tail().coeff;
        assert!((ratio / (p.left_tail().rate * s).exp() - 1.0).abs() < 1e-12);
        for k in 0..100 {
            let t = -25.0 + 0.5 * k as f64;
            assert!((shifted.eval(t) - p.eval(t + s)).abs() <= 1e-9);
        }
    }

    #[test]
    fn decay_fit_synthetic() {
        let grid = uniform_grid(-40.0, -5.0, 701);
        let e: Vec<f64> = grid.iter().map(|t| 1e-3 * (0.7 * t).exp()).collect();
        let p = Profile::new(grid.clone(), e, 1.0, 0.0, 1.0, 0.7, 0, 1.0).unwrap();
        let fit = p.decay_rate_fit((-38.0, -8.0)).unwrap();
        assert_eq!(fit.poly_degree, 0);
        assert!((fit.rate - 0.7).abs() < 1e-3);
        let te: Vec<f64> = grid.iter().map(|t| 1e-4 * (-t) * (0.7 * t).exp()).collect();
        let p = Profile::new(grid, te, 1.0, 0.0, 1.0, 0.7, 1, 1.0).unwrap();
        let fit = p.decay_rate_fit((-38.0, -8.0)).unwrap();
        assert_eq!(fit.poly_degree, 1);
        assert!((fit.rate - 0.7).abs() < 5e-3);
        assert!(p.decay_rate_fit((-38.0, -37.9)).is_err());
    }

    #[test]
    fn linear_eigenfunction_residual() {
        // g = p·u with χ(λ, c) = 0 at h = 0: λ² − cλ − 1 + p = 0
        let (c, p): (f64, f64) = (3.0, 2.0);
        let lam = 0.5 * (c - (c * c - 4.0 * (p - 1.0)).sqrt());
        let grid = uniform_grid(-30.0, -10.0, 2001);
        let v: Vec<f64> = grid.iter().map(|t| (lam * t).exp()).collect();
        let prof = Profile::new(grid, v, c, 0.0, 1.0, lam, 0, 1.0).unwrap();
        let g = move |u: f64| p * u;
        assert!(prof.residual(&g).unwrap() <= 1e-8);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("front.csv");
        let p = logistic();
        p.write_csv(&path).unwrap();
        let q = Profile::read_csv(&path).unwrap();
        assert_eq!(q.len(), p.len());
        for k in 0..p.len() {
            assert!((q.values()[k] - p.values()[k]).abs() <= 1e-15 * p.values()[k].max(1e-300));
        }
        assert_eq!(q.left_tail().rate, p.left_tail().rate);
    }

    proptest! {
        #[test]
        fn eval_is_monotone_and_bounded(a in -1e6..1e6f64, b in -1e6..1e6f64) {
            let p = logistic();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(p.eval(lo) <= p.eval(hi));
            prop_assert!(p.eval(lo) > 0.0 && p.eval(hi) < 1.0);
        }

        #[test]
        fn eval_monotone_near_transition(a in -40.0..40.0f64, d in 0.0..1.0f64) {
            let p = logistic();
            prop_assert!(p.eval(a) <= p.eval(a + d));
        }

        #[test]
        fn decay_rate_is_shift_invariant(s in -3.0..3.0f64) {
            let p = logistic();
            let f0 = p.decay_rate_fit((-19.0, -8.0)).unwrap();
            let f1 = p.shift(s).decay_rate_fit((-19.0 - s, -8.0 - s)).unwrap();
            prop_assert!((f0.rate - f1.rate).abs() <= 1e-6);
        }
    }
}
