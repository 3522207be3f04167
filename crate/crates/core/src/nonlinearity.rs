//! Reaction functions `g`, their certified constants, the hypothesis
//! validator and the lower minorant `g₋ = min{g, p}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::Pchip;

/// Anything that can play the role of the delayed reaction term.
///
/// Implemented by [`NonlinearitySpec`] and by plain closures, which lets the
/// kernel operator be exercised with linear test reactions that fail the
/// monostable hypothesis on purpose.
pub trait Reaction: Sync {
    fn react(&self, u: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> Reaction for F {
    fn react(&self, u: f64) -> f64 {
        self(u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    RationalKpp,
    MonotoneSpline,
    UserTable,
    LowerMinorant,
}

/// Constants of the small-argument bound `|g(u)/u − g'(0)| ≤ C·u^θ` on `(0, δ]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hoelder {
    #[serde(rename = "C")]
    pub c: f64,
    pub theta: f64,
    pub delta: f64,
}

#[derive(Clone, Debug)]
enum Shape {
    Rational { p: f64, b: f64 },
    Spline(Pchip),
    Table { x: Vec<f64>, y: Vec<f64> },
    Minorant { base: Box<NonlinearitySpec>, a: f64 },
}

/// A monostable reaction function with its derived constants.
///
/// `gp0`, `gp_kappa` and `gp_plus` are always recomputed from the shape; they
/// are never read from configuration files.
#[derive(Clone, Debug)]
pub struct NonlinearitySpec {
    family: Family,
    shape: Shape,
    kappa: f64,
    hoelder: Hoelder,
    gp0: f64,
    gp_kappa: f64,
    gp_plus: f64,
}

/// Control points of the shipped non-sub-tangential spline. With delay
/// `h = 0.5` its fronts are pushed: the minimal speed sits well above the
/// linear-determinacy speed.
pub const PUSHED_CANDIDATE_POINTS: [(f64, f64); 8] = [
    (0.0, 0.0),
    (0.02, 0.03),
    (0.04, 0.06),
    (0.15, 0.35),
    (0.3, 0.8),
    (0.5, 0.95),
    (1.0, 1.0),
    (1.5, 1.02),
];

/// Delay paired with [`PUSHED_CANDIDATE_POINTS`] in examples and tests.
pub const PUSHED_CANDIDATE_DELAY: f64 = 0.5;

fn check_points(points: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<f64>)> {
    if points.len() < 2 {
        return Err(Error::domain("at least two control points are required"));
    }
    if points[0] != (0.0, 0.0) {
        return Err(Error::domain("the first control point must be (0, 0)"));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::domain("control points must be finite"));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("control abscissae must be strictly increasing"));
    }
    Ok((x, y))
}

impl NonlinearitySpec {
    /// `g(u) = p·u / (1 + ((p−1)/κ)·u)`: concave, sub-tangential, `g(κ) = κ`.
    pub fn rational_kpp(p: f64, kappa: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::domain(format!("rational_kpp: p must be positive, got {p}")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::domain(format!("kappa must be positive, got {kappa}")));
        }
        let b = (p - 1.0) / kappa;
        let hoelder = Hoelder {
            c: (2.0 * p * (p - 1.0).abs() / kappa).max(f64::MIN_POSITIVE),
            theta: 1.0,
            delta: kappa,
        };
        Ok(Self {
            family: Family::RationalKpp,
            shape: Shape::Rational { p, b },
            kappa,
            hoelder,
            gp0: p,
            gp_kappa: p / (1.0 + b * kappa).powi(2),
            gp_plus: p,
        })
    }

    /// Monotone cubic Hermite interpolant through `points`, constant beyond
    /// the last abscissa.
    pub fn monotone_spline(points: &[(f64, f64)], kappa: f64) -> Result<Self> {
        let (x, y) = check_points(points)?;
        let pchip = Pchip::new(x.clone(), y)?;
        let gp0 = pchip.slopes()[0];
        let mut spec = Self::assemble(Family::MonotoneSpline, Shape::Spline(pchip), kappa)?;
        spec.gp0 = gp0;
        spec.gp_kappa = spec.derivative(kappa).unwrap_or(f64::NAN);
        spec.hoelder = spec.fit_hoelder(x[1]);
        spec.gp_plus = spec.sup_ratio()?;
        Ok(spec)
    }

    /// Piecewise-linear table, constant beyond the last abscissa.
    pub fn user_table(points: &[(f64, f64)], kappa: f64) -> Result<Self> {
        let (x, y) = check_points(points)?;
        let gp0 = (y[1] - y[0]) / (x[1] - x[0]);
        let delta = x[1];
        let mut spec = Self::assemble(Family::UserTable, Shape::Table { x, y }, kappa)?;
        spec.gp0 = gp0;
        spec.gp_kappa = spec.table_left_slope(kappa);
        spec.hoelder = spec.fit_hoelder(delta);
        spec.gp_plus = spec.sup_ratio()?;
        Ok(spec)
    }

    /// The shipped pushed-candidate spline (κ = 1).
    pub fn pushed_candidate() -> Self {
        Self::monotone_spline(&PUSHED_CANDIDATE_POINTS, 1.0).expect("shipped spline is well formed")
    }

    fn assemble(family: Family, shape: Shape, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::domain(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self {
            family,
            shape,
            kappa,
            hoelder: Hoelder { c: 1.0, theta: 1.0, delta: kappa },
            gp0: f64::NAN,
            gp_kappa: f64::NAN,
            gp_plus: f64::NAN,
        })
    }

    fn table_left_slope(&self, u: f64) -> f64 {
        match &self.shape {
            Shape::Table { x, y } => {
                let k = x.partition_point(|&v| v < u).clamp(1, x.len() - 1);
                (y[k] - y[k - 1]) / (x[k] - x[k - 1])
            }
            _ => f64::NAN,
        }
    }

    /// Numerical Hölder constants with `θ = 1` on `(0, delta]`.
    fn fit_hoelder(&self, delta: f64) -> Hoelder {
        let mut worst: f64 = 0.0;
        for k in 0..=4000 {
            let u = delta * 10f64.powf(-6.0 + 6.0 * k as f64 / 4000.0);
            worst = worst.max((self.value(u) / u - self.gp0).abs() / u);
            if let Some(d) = self.derivative(u) {
                worst = worst.max((d - self.gp0).abs() / u);
            }
        }
        Hoelder { c: (1.05 * worst).max(1e-9), theta: 1.0, delta }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gp0(&self) -> f64 {
        self.gp0
    }

    pub fn gp_kappa(&self) -> f64 {
        self.gp_kappa
    }

    pub fn gp_plus(&self) -> f64 {
        self.gp_plus
    }

    pub fn hoelder(&self) -> Hoelder {
        self.hoelder
    }

    /// Replaces the Hölder triple (used when loading declared constants).
    pub fn with_hoelder(mut self, hoelder: Hoelder) -> Self {
        self.hoelder = hoelder;
        self
    }

    /// Largest argument at which `g` is not yet extended as a constant.
    fn support_end(&self) -> f64 {
        match &self.shape {
            Shape::Rational { .. } => 1.5 * self.kappa,
            Shape::Spline(p) => *p.x().last().unwrap(),
            Shape::Table { x, .. } => *x.last().unwrap(),
            Shape::Minorant { base, .. } => base.support_end(),
        }
    }

    /// `g(u)` for `u ≥ 0`; negative arguments are treated as zero.
    pub fn value(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match &self.shape {
            Shape::Rational { p, b } => {
                let u = u.min(1.5 * self.kappa);
                p * u / (1.0 + b * u)
            }
            Shape::Spline(pchip) => pchip.eval(u),
            Shape::Table { x, y } => {
                let n = x.len();
                if u >= x[n - 1] {
                    return y[n - 1];
                }
                let k = x.partition_point(|&v| v <= u).clamp(1, n - 1);
                let w = (u - x[k - 1]) / (x[k] - x[k - 1]);
                y[k - 1] + w * (y[k] - y[k - 1])
            }
            Shape::Minorant { base, a } => {
                let p = base.gp0 * u / (1.0 + a * u);
                base.value(u).min(p)
            }
        }
    }

    /// Checked evaluation of `g`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if u.is_nan() || u < 0.0 {
            return Err(Error::domain(format!("g is defined on [0, inf), got u = {u}")));
        }
        Ok(self.value(u))
    }

    /// `g'(u)` when the family exposes a derivative (tables do not).
    pub fn derivative(&self, u: f64) -> Option<f64> {
        let u = u.max(0.0);
        match &self.shape {
            Shape::Rational { p, b } => {
                if u > 1.5 * self.kappa {
                    Some(0.0)
                } else {
                    Some(p / (1.0 + b * u).powi(2))
                }
            }
            Shape::Spline(pchip) => Some(pchip.derivative(u)),
            Shape::Table { .. } => None,
            Shape::Minorant { base, a } => {
                let p = base.gp0 * u / (1.0 + a * u);
                if base.value(u) <= p {
                    base.derivative(u)
                } else {
                    Some(base.gp0 / (1.0 + a * u).powi(2))
                }
            }
        }
    }

    /// `sup_{u>0} g(u)/u`, refined near the maximiser by golden-section search.
    pub fn sup_ratio(&self) -> Result<f64> {
        if let Shape::Rational { p, .. } = self.shape {
            if p >= 1.0 {
                return Ok(p);
            }
        }
        let hi = 1.5 * self.kappa;
        let ratio = |u: f64| self.value(u) / u;
        let n = 4000;
        let mut grid: Vec<f64> = (1..=n).map(|k| hi * k as f64 / n as f64).collect();
        grid.extend((0..200).map(|k| hi * 1e-8 * 10f64.powf(k as f64 * 5.0 / 200.0)));
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (imax, &umax) = grid
            .iter()
            .enumerate()
            .max_by(|a, b| ratio(*a.1).partial_cmp(&ratio(*b.1)).unwrap())
            .unwrap();
        let coarse = ratio(umax);
        if imax == 0 || coarse <= self.gp0 {
            return Ok(self.gp0.max(coarse));
        }
        let mut lo = grid[imax - 1];
        let mut up = if imax + 1 < grid.len() { grid[imax + 1] } else { hi };
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = up - gr * (up - lo);
        let mut x2 = lo + gr * (up - lo);
        let (mut f1, mut f2) = (ratio(x1), ratio(x2));
        let mut best = coarse.max(f1).max(f2);
        for _ in 0..300 {
            if f1 > f2 {
                up = x2;
                x2 = x1;
                f2 = f1;
                x1 = up - gr * (up - lo);
                f1 = ratio(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (up - lo);
                f2 = ratio(x2);
            }
            let next = best.max(f1).max(f2);
            let settled = (next - best).abs() <= 1e-10 * next.abs() && (up - lo) <= 1e-10 * up;
            best = next;
            if settled {
                return Ok(best.max(self.gp0));
            }
        }
        Err(Error::numeric(format!(
            "sup_ratio: refinement did not settle near u = {umax} (bracket [{lo}, {up}])"
        )))
    }

    /// `g₋ = min{g, p}` with `p(x) = g'(0)x/(1 + Ax)`, `A = 2(g'(0) − 1)/κ`.
    /// Its positive fixed point is `κ/2`.
    pub fn lower_minorant(&self) -> Self {
        let a = 2.0 * (self.gp0 - 1.0) / self.kappa;
        let h = self.hoelder;
        let delta = h.delta.min(0.5 * self.kappa);
        let c = h.c.max(2.0 * self.gp0 * a * delta.powf(1.0 - h.theta));
        let mut spec = Self {
            family: Family::LowerMinorant,
            shape: Shape::Minorant { base: Box::new(self.clone()), a },
            kappa: 0.5 * self.kappa,
            hoelder: Hoelder { c, theta: h.theta, delta },
            gp0: self.gp0,
            gp_kappa: f64::NAN,
            gp_plus: self.gp0,
        };
        spec.gp_kappa = spec.derivative(spec.kappa).unwrap_or(1.0 / self.gp0);
        spec
    }

    /// Whether `g(x) ≤ g'(0)·x` holds on a fine grid of `[0, 1.5κ]`.
    pub fn is_subtangential(&self) -> bool {
        (1..=20_000).all(|k| {
            let u = 1.5 * self.kappa * k as f64 / 20_000.0;
            self.value(u) <= self.gp0 * u * (1.0 + 1e-12)
        })
    }

    /// Runs every hypothesis check on grids with `n_samples` points.
    pub fn validate_h(&self, n_samples: usize) -> Result<ValidationReport> {
        self.validate(n_samples, Monotonicity::Strict)
    }

    /// Like [`validate_h`](Self::validate_h) but accepting nondecreasing `g`,
    /// which the lattice uniqueness statement allows.
    pub fn validate_h_relaxed(&self, n_samples: usize) -> Result<ValidationReport> {
        self.validate(n_samples, Monotonicity::Nondecreasing)
    }

    fn validate(&self, n_samples: usize, mode: Monotonicity) -> Result<ValidationReport> {
        if n_samples < 100 {
            return Err(Error::domain(format!("validate_h needs n_samples >= 100, got {n_samples}")));
        }
        let kappa = self.kappa;
        let mut checks = Vec::new();

        let g0 = self.value(0.0);
        checks.push(Check::new("g(0) = 0", g0.abs() <= 1e-14, Some(0.0), 1e-14 - g0.abs()));
        let gk = self.value(kappa);
        let tol = 1e-12 * kappa;
        checks.push(Check::new(
            "g(kappa) = kappa",
            (gk - kappa).abs() <= tol,
            Some(kappa),
            tol - (gk - kappa).abs(),
        ));

        let top = (1.5 * kappa).min(self.support_end());
        let mut worst = (f64::INFINITY, 0.0);
        let mut prev = self.value(0.0);
        for k in 1..=n_samples {
            let u = top * k as f64 / n_samples as f64;
            let v = self.value(u);
            if v - prev < worst.0 {
                worst = (v - prev, u);
            }
            prev = v;
        }
        let (name, ok) = match mode {
            Monotonicity::Strict => ("strictly increasing", worst.0 > 0.0),
            Monotonicity::Nondecreasing => ("nondecreasing", worst.0 >= 0.0),
        };
        checks.push(Check::new(name, ok, Some(worst.1), worst.0));

        checks.push(Check::new("g'(0) > 1", self.gp0 > 1.0, Some(0.0), self.gp0 - 1.0));
        checks.push(Check::new(
            "g'(kappa) < 1",
            self.gp_kappa < 1.0,
            Some(kappa),
            1.0 - self.gp_kappa,
        ));

        // g(x) > x strictly inside (0, κ) and g(x) < x on (κ, 1.5κ]
        let mut worst = (f64::INFINITY, f64::NAN);
        for k in 1..n_samples {
            let u = kappa * k as f64 / n_samples as f64;
            let m = self.value(u) - u;
            if m < worst.0 {
                worst = (m, u);
            }
            let w = kappa * (1.0 + 0.5 * k as f64 / n_samples as f64);
            let m = w - self.value(w);
            if m < worst.0 {
                worst = (m, w);
            }
        }
        checks.push(Check::new("exactly two fixed points", worst.0 > 0.0, Some(worst.1), worst.0));

        let plus_ok = match self.family {
            Family::RationalKpp => self.gp_plus == self.gp0,
            _ => self.gp_plus >= self.gp0 - 1e-9,
        };
        checks.push(Check::new("g'_+ >= g'(0)", plus_ok, None, self.gp_plus - self.gp0));

        let h = self.hoelder;
        let valid_triple = h.c > 0.0 && h.theta > 0.0 && h.theta <= 1.0 && h.delta > 0.0;
        checks.push(Check::new("hoelder constants admissible", valid_triple, None, 0.0));
        let samples = sample_small(h.delta, n_samples);
        let mut worst = (f64::INFINITY, f64::NAN);
        for &u in &samples {
            let bound = h.c * u.powf(h.theta) * (1.0 + 1e-9) + 1e-13;
            let m = bound - (self.value(u) / u - self.gp0).abs();
            if m < worst.0 {
                worst = (m, u);
            }
        }
        checks.push(Check::new("hoelder ratio bound (gco)", worst.0 >= 0.0, Some(worst.1), worst.0));
        if self.derivative(0.5 * h.delta).is_some() {
            let mut worst = (f64::INFINITY, f64::NAN);
            for &u in &samples {
                let d = self.derivative(u).unwrap();
                let bound = h.c * u.powf(h.theta) * (1.0 + 1e-9) + 1e-13;
                let m = bound - (d - self.gp0).abs();
                if m < worst.0 {
                    worst = (m, u);
                }
            }
            checks.push(Check::new(
                "hoelder derivative bound (gcos)",
                worst.0 >= 0.0,
                Some(worst.1),
                worst.0,
            ));
        }

        let passed = checks.iter().all(|c| c.passed);
        Ok(ValidationReport { passed, checks })
    }

    pub fn to_file(&self) -> SpecFile {
        let params = match &self.shape {
            Shape::Rational { p, .. } => serde_json::json!({ "p": p }),
            Shape::Spline(pchip) => {
                let pts: Vec<[f64; 2]> =
                    pchip.x().iter().zip(pchip.y()).map(|(a, b)| [*a, *b]).collect();
                serde_json::json!({ "points": pts })
            }
            Shape::Table { x, y } => {
                let pts: Vec<[f64; 2]> = x.iter().zip(y).map(|(a, b)| [*a, *b]).collect();
                serde_json::json!({ "points": pts })
            }
            Shape::Minorant { base, .. } => serde_json::json!({ "base": base.to_file() }),
        };
        SpecFile { family: self.family, params, kappa: self.kappa, hoelder: Some(self.hoelder) }
    }

    pub fn from_file(file: SpecFile) -> Result<Self> {
        let points = |params: &serde_json::Value| -> Result<Vec<(f64, f64)>> {
            let pts: Vec<[f64; 2]> = serde_json::from_value(
                params.get("points").cloned().ok_or_else(|| Error::config("params.points missing"))?,
            )?;
            Ok(pts.into_iter().map(|p| (p[0], p[1])).collect())
        };
        let spec = match file.family {
            Family::RationalKpp => {
                let p = file
                    .params
                    .get("p")
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| Error::config("params.p missing"))?;
                Self::rational_kpp(p, file.kappa)?
            }
            Family::MonotoneSpline => Self::monotone_spline(&points(&file.params)?, file.kappa)?,
            Family::UserTable => Self::user_table(&points(&file.params)?, file.kappa)?,
            Family::LowerMinorant => {
                let base: SpecFile = serde_json::from_value(
                    file.params.get("base").cloned().ok_or_else(|| Error::config("params.base missing"))?,
                )?;
                Self::from_file(base)?.lower_minorant()
            }
        };
        Ok(match file.hoelder {
            Some(h) => spec.with_hoelder(h),
            None => spec,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Reaction for NonlinearitySpec {
    fn react(&self, u: f64) -> f64 {
        self.value(u)
    }
}

/// Geometric plus uniform samples of `(0, delta]`.
fn sample_small(delta: f64, n: usize) -> Vec<f64> {
    let mut s: Vec<f64> = (1..=n).map(|k| delta * k as f64 / n as f64).collect();
    s.extend((0..n).map(|k| delta * 10f64.powf(-8.0 + 8.0 * k as f64 / n as f64)));
    s
}

#[derive(Clone, Copy, Debug)]
enum Monotonicity {
    Strict,
    Nondecreasing,
}

/// On-disk form of a [`NonlinearitySpec`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpecFile {
    pub family: Family,
    pub params: serde_json::Value,
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hoelder: Option<Hoelder>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Abscissa of the worst sample, when the check is pointwise.
    pub worst_at: Option<f64>,
    /// Distance from failure at the worst sample; negative when failing.
    pub margin: f64,
}

impl Check {
    fn new(name: &str, passed: bool, worst_at: Option<f64>, margin: f64) -> Self {
        Self { name: name.to_string(), passed, worst_at, margin }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
