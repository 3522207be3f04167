//! Upper and lower solutions and the monotone squeeze producing fronts.

use serde::{Deserialize, Serialize};

use crate::charspec::{kappa_rate, real_roots, roots_at, CharParams};
use crate::error::{Error, Result};
use crate::greens::apply_a_values;
use crate::nonlinearity::{NonlinearitySpec, Reaction};
use crate::profile::{DecayFit, Profile};

/// Discretisation and stopping parameters shared by all solves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    /// Target grid step; the actual step divides `ch` exactly.
    pub step: f64,
    /// Relative size of the profile at the left and the deficit at the right
    /// grid end.
    pub tail_level: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Allowed violation of the squeeze ordering, relative to `κ`.
    pub order_slack: f64,
    /// Iterations without a new smallest increment before giving up.
    pub stall_window: usize,
    /// Levels (relative to `κ`) bounding the decay-fit window.
    pub fit_levels: (f64, f64),
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            step: 1.0 / 300.0,
            tail_level: 1e-12,
            tol: 1e-10,
            max_iter: 500,
            order_slack: 1e-9,
            stall_window: 50,
            fit_levels: (1e-9, 1e-5),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    KppUpper,
    ContinuationUpper,
    Relaxation,
}

#[derive(Clone, Debug)]
pub struct BoundPair {
    pub lower: Profile,
    pub upper: Profile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationReport {
    pub iterations: usize,
    pub delta_history: Vec<f64>,
    pub final_residual: f64,
    pub converged: bool,
    /// Largest gap between the downward and upward limits.
    pub bracket_gap: f64,
    /// Shift applied to the lower bound before iterating.
    pub alignment: f64,
    pub collapsed: bool,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct FrontResult {
    pub profile: Profile,
    pub report: IterationReport,
    pub decay: Option<DecayFit>,
    pub strategy: Strategy,
}

/// A uniform grid whose step divides `ch` and that has a node at `anchor`.
pub fn solver_grid(c: f64, h: f64, a: f64, b: f64, anchor: f64, step: f64) -> Vec<f64> {
    let lag = c * h;
    let d = if lag > 0.0 { lag / (lag / step).ceil() } else { step };
    let lo = ((a - anchor) / d).floor() as i64;
    let hi = ((b - anchor) / d).ceil() as i64;
    (lo..=hi).map(|k| anchor + k as f64 * d).collect()
}

/// Grid covering the transition of a front whose left tail decays at `lam`
/// (normalised near `φ(t) = e^{λt}`) and whose right deficit decays at `mu`.
fn front_grid(c: f64, h: f64, kappa: f64, lam: f64, mu: f64, num: &Numerics) -> Vec<f64> {
    let depth = (1.0 / num.tail_level).ln();
    let corner = kappa.ln() / lam;
    let a = corner - (depth + 2.0) / lam;
    let b = corner + (depth + 2.0) / mu + 4.0 + c * h;
    solver_grid(c, h, a, b, corner, num.step)
}

/// `min{κ, e^{λt}}` on `grid` as a bound profile.
fn exp_cap(grid: &[f64], c: f64, h: f64, kappa: f64, lam: f64, mu: f64) -> Result<Profile> {
    let values = grid.iter().map(|&t| (lam * t).exp().min(kappa)).collect();
    Profile::bound(grid.to_vec(), values, c, h, kappa, lam, 0, mu)
}

/// Largest upper-solution defect `E(t) = φ″ − cφ′ − φ + g(φ(t − ch))` over
/// nodes at least two steps away from every point in `corners`.
pub fn max_defect(profile: &Profile, g: &dyn Reaction, corners: &[f64]) -> f64 {
    let grid = profile.grid();
    let n = grid.len();
    let d = grid[1] - grid[0];
    (2..n - 2)
        .filter(|&k| corners.iter().all(|&s| (grid[k] - s).abs() > 2.5 * d))
        .map(|k| profile.residual_at(k, g))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest-root upper solution `min{κ, e^{λ₂⁺t}}`, where `λ₂⁺` is the
/// smaller root of `χ` with slope `g'₊`. Its corner sits at `t = ln κ / λ₂⁺`.
pub fn kpp_upper(c: f64, h: f64, spec: &NonlinearitySpec) -> Result<Profile> {
    kpp_upper_with(c, h, spec, &Numerics::default())
}

pub fn kpp_upper_with(c: f64, h: f64, spec: &NonlinearitySpec, num: &Numerics) -> Result<Profile> {
    let params = CharParams::new(c, h, spec.gp_plus())?;
    let roots = real_roots(&params).ok_or_else(|| {
        Error::domain(format!("kpp_upper: c = {c} is below the critical speed for g'_+ = {}", spec.gp_plus()))
    })?;
    let lam = roots.lambda2;
    let mu = kappa_rate(spec.gp_kappa(), c, h)?;
    let grid = front_grid(c, h, spec.kappa(), lam, mu, num);
    let upper = exp_cap(&grid, c, h, spec.kappa(), lam, mu)?;
    let corner = spec.kappa().ln() / lam;
    let defect = max_defect(&upper, spec, &[corner]);
    if defect > 1e-9 * spec.kappa() {
        return Err(Error::numeric(format!(
            "kpp_upper: upper-solution defect {defect:e} exceeds 1e-9 away from the corner"
        )));
    }
    Ok(upper)
}

/// Lower solution with limits `0` and `κ/2`: the front of the minorant
/// problem `g₋ = min{g, p}` at speed `c`, computed on the grid of `like`.
pub fn lower_front(c: f64, h: f64, spec: &NonlinearitySpec) -> Result<Profile> {
    let num = Numerics::default();
    let upper = kpp_upper_with(c, h, spec, &num)?;
    lower_front_on(c, h, spec, upper.grid(), &num)
}

pub fn lower_front_on(
    c: f64,
    h: f64,
    spec: &NonlinearitySpec,
    grid: &[f64],
    num: &Numerics,
) -> Result<Profile> {
    let minorant = spec.lower_minorant();
    let lam = roots_at(spec, c, h)?.lambda2;
    let mu = kappa_rate(minorant.gp_kappa(), c, h)?;
    let start = exp_cap(grid, c, h, minorant.kappa(), lam, mu)?;
    let inner = Numerics { tol: num.tol.min(1e-12), max_iter: 20 * num.max_iter, ..*num };
    let (front, report) = descend(start, &minorant, c, h, &inner)?;
    if !report.converged {
        return Err(Error::numeric(format!(
            "lower_front: minorant problem did not converge at c = {c} ({})",
            report.note
        )));
    }
    front.embed(spec.kappa())
}

/// Plain iteration `φ ↦ 𝒜φ` from `start`, tracking increments.
fn descend(
    start: Profile,
    g: &NonlinearitySpec,
    c: f64,
    h: f64,
    num: &Numerics,
) -> Result<(Profile, IterationReport)> {
    let mut cur = start;
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut converged = false;
    let mut note = String::new();
    for _ in 0..num.max_iter {
        let next = apply_a_values(&cur, g, c, h)?;
        let delta = next.iter().zip(cur.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        history.push(delta);
        cur = cur.with_values(next)?;
        if delta <= num.tol {
            converged = true;
            break;
        }
        if delta < best {
            best = delta;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= num.stall_window {
                note = format!("stalled at delta {best:e}");
                break;
            }
        }
    }
    let report = IterationReport {
        iterations: history.len(),
        delta_history: history,
        final_residual: f64::NAN,
        converged,
        bracket_gap: f64::NAN,
        alignment: 0.0,
        collapsed: false,
        note,
    };
    Ok((cur, report))
}

/// Shift (a multiple of the grid step) that puts `lower` under `upper`,
/// starting from equal left-tail coefficients.
fn align(lower: &Profile, upper: &Profile, slack: f64) -> Result<(Profile, f64)> {
    let grid = upper.grid();
    let d = grid[1] - grid[0];
    let (ll, lu) = (lower.left_tail(), upper.left_tail());
    if ll.rate < lu.rate * (1.0 - 1e-9) {
        return Err(Error::domain(format!(
            "lower bound decays at {} but the upper at {}: no shift orders them at -inf",
            ll.rate, lu.rate
        )));
    }
    let mut s = if (ll.rate - lu.rate).abs() <= 1e-9 * lu.rate && ll.poly_degree == lu.poly_degree {
        (lu.coeff / ll.coeff).ln() / ll.rate
    } else {
        // match the left grid end
        let t0 = grid[0];
        (lower.level_crossing(upper.eval(t0).max(f64::MIN_POSITIVE)).unwrap_or(t0)) - t0
    };
    s = d * (s / d).floor();
    for _ in 0..400 {
        let cand = lower.shift(s).resample(grid.to_vec())?;
        let excess = cand
            .values()
            .iter()
            .zip(upper.values())
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        if excess <= slack {
            return Ok((cand, s));
        }
        s -= d * (1.0 + (0.05 / lu.rate / d).floor());
    }
    Err(Error::domain("could not shift the lower bound under the upper bound"))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn first_excess(grid: &[f64], lo: &[f64], hi: &[f64], slack: f64) -> Option<(f64, f64)> {
    lo.iter()
        .zip(hi)
        .enumerate()
        .map(|(k, (a, b))| (k, a - b))
        .filter(|&(_, e)| e > slack)
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(k, e)| (grid[k], e))
}

/// Fits the left decay between the levels in `num.fit_levels`.
pub fn fit_decay(profile: &Profile, levels: (f64, f64)) -> Option<DecayFit> {
    let w = profile.level_window(levels.0, levels.1)?;
    profile.decay_rate_fit(w).ok()
}

/// Monotone squeeze: `𝒜ⁿ` applied to the upper bound from above and to the
/// (aligned) lower bound from below, with the ordering chain asserted at
/// every step. The downward limit is returned as the front.
pub fn iterate(
    bounds: &BoundPair,
    spec: &NonlinearitySpec,
    c: f64,
    h: f64,
    num: &Numerics,
) -> Result<FrontResult> {
    squeeze(&bounds.upper, Some(&bounds.lower), spec, c, h, num)
}

/// The downward half of the squeeze alone, for when no lower bound is
/// available. Collapse is then the only sign of a missing front.
pub fn descend_upper(
    upper: &Profile,
    spec: &NonlinearitySpec,
    c: f64,
    h: f64,
    num: &Numerics,
) -> Result<FrontResult> {
    squeeze(upper, None, spec, c, h, num)
}

fn squeeze(
    upper: &Profile,
    lower: Option<&Profile>,
    spec: &NonlinearitySpec,
    c: f64,
    h: f64,
    num: &Numerics,
) -> Result<FrontResult> {
    let kappa = spec.kappa();
    let slack = num.order_slack * kappa;
    let grid = upper.grid().to_vec();
    let (mut lo, alignment) = match lower {
        Some(l) => {
            let (l, s) = align(l, upper, slack)?;
            (Some(l), s)
        }
        None => (None, 0.0),
    };
    let gauge_t = upper.level_crossing(0.5 * kappa).unwrap_or(0.0);
    let gauge = grid.partition_point(|&t| t < gauge_t).min(grid.len() - 1);
    let mut up = upper.clone();
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut converged = false;
    let mut collapsed = false;
    let mut note = String::new();
    for it in 1..=num.max_iter {
        let up_next = apply_a_values(&up, spec, c, h)?;
        if let Some((t, excess)) = first_excess(&grid, &up_next, up.values(), slack) {
            return Err(Error::Ordering { iteration: it, t, excess });
        }
        let du = sup_diff(&up_next, up.values());
        let mut delta = du;
        if let Some(l) = lo.as_mut() {
            let lo_next = apply_a_values(l, spec, c, h)?;
            for (a, b) in [(l.values(), &lo_next[..]), (&lo_next[..], &up_next[..])] {
                if let Some((t, excess)) = first_excess(&grid, a, b, slack) {
                    return Err(Error::Ordering { iteration: it, t, excess });
                }
            }
            delta = delta.max(sup_diff(&lo_next, l.values()));
            // the limit of the lower iterates at +inf climbs as g(offset)
            let last = *lo_next.last().unwrap();
            let offset = spec.value(l.right_tail().offset).max(last).min(kappa);
            *l = l.with_right_offset(lo_next, offset)?;
        }
        history.push(du);
        up = up.with_values(up_next)?;
        if up.values()[gauge] < 0.01 * kappa {
            collapsed = true;
            note = format!("collapse: value at the gauge point fell below kappa/100 at iteration {it}");
            break;
        }
        if delta <= num.tol {
            converged = true;
            break;
        }
        if delta < best {
            best = delta;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= num.stall_window {
                note = format!("stalled: no increment below {best:e} in {} iterations", num.stall_window);
                break;
            }
        }
    }
    if !converged && note.is_empty() {
        note = format!("max_iter = {} reached", num.max_iter);
    }
    let bracket_gap = lo.as_ref().map_or(f64::NAN, |l| sup_diff(up.values(), l.values()));
    let final_residual = up.residual(spec)?;
    let decay = fit_decay(&up, num.fit_levels);
    Ok(FrontResult {
        profile: up,
        report: IterationReport {
            iterations: history.len(),
            delta_history: history,
            final_residual,
            converged,
            bracket_gap,
            alignment,
            collapsed,
            note,
        },
        decay,
        strategy: Strategy::KppUpper,
    })
}

/// Bounds for the squeeze at speed `c`: `min{κ, e^{λ₂⁺t}}` above and the
/// minorant front below, on a common grid.
pub fn kpp_bounds(c: f64, h: f64, spec: &NonlinearitySpec, num: &Numerics) -> Result<BoundPair> {
    let upper = kpp_upper_with(c, h, spec, num)?;
    let lower = lower_front_on(c, h, spec, upper.grid(), num)?;
    Ok(BoundPair { lower, upper })
}

/// How a relaxation run treats the left tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailMode {
    /// Tail rate fixed at `λ₂(c)` and anchored: the coefficient of `e^{λ₂t}`
    /// is conserved, which pins the translate.
    Pinned,
    /// Steep tail (rate between `λ₁(c)` and `ξ₂`); the profile is free to
    /// drift and is re-centred on the grid.
    Steep,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelaxReport {
    pub iterations: usize,
    pub converged: bool,
    /// Position of the `κ/2` crossing, in the frame moving at `c`.
    pub positions: Vec<f64>,
    /// Least-squares drift of the crossing per iteration over the second half.
    pub drift: f64,
    pub delta_history: Vec<f64>,
}

fn crossing(grid: &[f64], v: &[f64], level: f64) -> Option<f64> {
    let k = v.partition_point(|&x| x < level);
    if k == 0 || k == v.len() {
        return None;
    }
    let w = (level - v[k - 1]) / (v[k] - v[k - 1]);
    Some(grid[k - 1] + w * (grid[k] - grid[k - 1]))
}

/// Steep tail rate used by [`TailMode::Steep`].
pub fn steep_rate(spec: &NonlinearitySpec, c: f64, h: f64) -> f64 {
    let xi2 = crate::charspec::xi_roots(c).xi2;
    match real_roots(&CharParams { c, h, p: spec.gp0() }) {
        Some(r) => 0.5 * (r.lambda1 + xi2),
        None => 0.75 * xi2,
    }
}

/// Pseudo-time relaxation `φ_{n+1} = 𝒜φ_n` (not a monotone squeeze).
pub fn relax(
    start: Profile,
    spec: &NonlinearitySpec,
    c: f64,
    h: f64,
    mode: TailMode,
    num: &Numerics,
) -> Result<(Profile, RelaxReport)> {
    let kappa = spec.kappa();
    let grid = start.grid().to_vec();
    let d = grid[1] - grid[0];
    let width = grid[grid.len() - 1] - grid[0];
    let home = crossing(&grid, start.values(), 0.5 * kappa)
        .ok_or_else(|| Error::domain("start profile does not cross kappa/2"))?;
    let mut cur = start;
    let mut offset = 0.0;
    let mut positions = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..num.max_iter {
        let next = apply_a_values(&cur, spec, c, h)?;
        let delta = sup_diff(&next, cur.values());
        history.push(delta);
        cur = cur.with_values(next)?;
        let x = match crossing(&grid, cur.values(), 0.5 * kappa) {
            Some(x) => x,
            None => break,
        };
        positions.push(x + offset);
        if mode == TailMode::Steep && (x - home).abs() > 0.1 * width {
            let m = ((x - home) / d).round();
            let shift = m * d;
            let vals: Vec<f64> = grid.iter().map(|&t| cur.eval(t + shift)).collect();
            cur = cur.with_values(vals)?;
            offset += shift;
        }
        if delta <= num.tol {
            converged = true;
            break;
        }
    }
    let half = positions.len() / 2;
    let drift = if positions.len() - half >= 2 {
        let it: Vec<f64> = (half..positions.len()).map(|k| k as f64).collect();
        crate::profile::line_fit(&it, &positions[half..]).0
    } else {
        f64::NAN
    };
    let report = RelaxReport { iterations: history.len(), converged, positions, drift, delta_history: history };
    Ok((cur, report))
}

/// `min{κ, e^{λ₂t}}` with `λ₂` taken at `g'(0)`: start for [`TailMode::Pinned`].
pub fn pinned_start(spec: &NonlinearitySpec, c: f64, h: f64, num: &Numerics) -> Result<Profile> {
    let lam = roots_at(spec, c, h)?.lambda2;
    let mu = kappa_rate(spec.gp_kappa(), c, h)?;
    let grid = front_grid(c, h, spec.kappa(), lam, mu, num);
    exp_cap(&grid, c, h, spec.kappa(), lam, mu)
}

/// Steep initial data `κ/(1 + e^{−λ_s t})` on `[a, b]`.
pub fn steep_start(
    spec: &NonlinearitySpec,
    c: f64,
    h: f64,
    a: f64,
    b: f64,
    num: &Numerics,
) -> Result<Profile> {
    let kappa = spec.kappa();
    let ls = steep_rate(spec, c, h);
    let mu = kappa_rate(spec.gp_kappa(), c, h)?;
    let grid = solver_grid(c, h, a, b, 0.0, num.step);
    let values: Vec<f64> = grid.iter().map(|&t| kappa / (1.0 + (-ls * t).exp())).collect();
    Profile::bound(grid, values, c, h, kappa, ls, 0, mu.min(ls))
}

/// Upper solution at `c_prime` built over a front at a slower speed `c0`:
/// `min{κ, σφ + b²e^{λ₂′t} + be^{λ₂t}}` with `λ₂ = λ₂(c0)`, `λ₂′ = λ₂(c′)`.
#[derive(Clone, Debug)]
pub struct ContinuationUpper {
    pub profile: Profile,
    /// `T₃`, where the sum reaches `κ`.
    pub corner: f64,
    pub sigma: f64,
    pub b: f64,
    /// Largest `E₊` away from the corner and where it occurs.
    pub max_defect: f64,
    pub worst_t: f64,
    pub attempts: usize,
}

/// One attempt of the continuation construction with fixed `sigma` and `b`.
///
/// `E₊` is evaluated semi-analytically: the second derivative of the base
/// front is taken from its own equation, so only `φ'` is interpolated.
pub fn continuation_upper(
    base: &Profile,
    spec: &NonlinearitySpec,
    c_prime: f64,
    sigma: f64,
    b: f64,
    num: &Numerics,
) -> Result<ContinuationUpper> {
    let (c0, h, kappa) = (base.c(), base.h(), spec.kappa());
    if !(c_prime > c0) {
        return Err(Error::domain(format!("continuation needs c' > c0, got c' = {c_prime}, c0 = {c0}")));
    }
    if !(sigma > 1.0) || !(b > 0.0 && b <= 1.0) {
        return Err(Error::domain(format!("need sigma > 1 and b in (0, 1], got {sigma}, {b}")));
    }
    let l2 = roots_at(spec, c0, h)?.lambda2;
    let l2p = roots_at(spec, c_prime, h)?.lambda2;
    let theta = spec.hoelder().theta;
    if !((1.0 + theta) * l2p > l2) {
        return Err(Error::domain(format!(
            "c' too far from c0: (1 + theta) lambda2(c') = {} <= lambda2(c0) = {l2}",
            (1.0 + theta) * l2p
        )));
    }
    let a = b * b;
    let phi_b = |t: f64| sigma * base.eval(t) + a * (l2p * t).exp() + b * (l2 * t).exp();
    let hi = base.level_crossing(kappa / sigma).unwrap_or(base.grid()[base.len() - 1]);
    let mut lo = hi - 1.0;
    while phi_b(lo) >= kappa {
        lo -= 2.0 * (hi - lo);
    }
    let corner = crate::charspec::bisect(lo, hi, |t| phi_b(t) - kappa);
    let mu = kappa_rate(spec.gp_kappa(), c_prime, h)?;
    let depth = (1.0 / num.tail_level).ln();
    let left = base.grid()[0].min(((num.tail_level * kappa).ln() - 2.0) / l2p);
    let right = corner + (depth + 2.0) / mu + 4.0 + c_prime * h;
    let grid = solver_grid(c_prime, h, left, right, corner, num.step);
    let plus = |t: f64| if t >= corner { kappa } else { phi_b(t).min(kappa) };
    let values: Vec<f64> = grid.iter().map(|&t| plus(t)).collect();
    let profile = Profile::bound(grid, values, c_prime, h, kappa, l2p, 0, mu)?;

    let lin = |l: f64| l * l - c_prime * l - 1.0;
    let d = profile.grid()[1] - profile.grid()[0];
    let mut max_defect = f64::NEG_INFINITY;
    let mut worst_t = f64::NAN;
    for &t in profile.grid() {
        if (t - corner).abs() <= 2.5 * d {
            continue;
        }
        let delayed = spec.value(plus(t - c_prime * h));
        let e = if t < corner {
            let dphi = base.derivative(t);
            sigma * ((c0 - c_prime) * dphi - spec.value(base.eval(t - c0 * h)))
                + a * lin(l2p) * (l2p * t).exp()
                + b * lin(l2) * (l2 * t).exp()
                + delayed
        } else {
            delayed - kappa
        };
        if e > max_defect {
            max_defect = e;
            worst_t = t;
        }
    }
    Ok(ContinuationUpper { profile, corner, sigma, b, max_defect, worst_t, attempts: 1 })
}

/// [`continuation_upper`] with geometric backtracking: `b` and `σ − 1`
/// start at `1e-2` and are halved after every rejected attempt (at most 20).
pub fn continuation_upper_auto(
    base: &Profile,
    spec: &NonlinearitySpec,
    c_prime: f64,
    num: &Numerics,
) -> Result<ContinuationUpper> {
    let tol = num.order_slack * spec.kappa();
    let (mut s1, mut b) = (1e-2, 1e-2);
    let mut last = None;
    for attempt in 1..=20 {
        let mut up = continuation_upper(base, spec, c_prime, 1.0 + s1, b, num)?;
        up.attempts = attempt;
        if up.max_defect <= tol {
            return Ok(up);
        }
        last = Some((up.worst_t, up.max_defect));
        s1 *= 0.5;
        b *= 0.5;
    }
    let (t, margin) = last.unwrap();
    Err(Error::numeric(format!(
        "continuation upper solution rejected after 20 attempts: E+ = {margin:e} at t = {t}"
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Below `c_#`: no real characteristic roots, hence no front.
    NoRealRoots,
    /// The squeeze converged to a nontrivial front.
    SqueezeConverged,
    /// The squeeze stayed ordered and away from zero without meeting `tol`.
    SqueezeHeld,
    /// The iterates collapsed toward zero.
    Collapsed,
    /// Steep data recede in the frame moving at `c`: slower fronts exist.
    Recedes,
    /// Steep data invade: the spreading speed exceeds `c`.
    Invades,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExistenceProbe {
    pub c: f64,
    pub exists: bool,
    pub verdict: Verdict,
    pub drift: Option<f64>,
    pub iterations: usize,
}

fn squeeze_probe(spec: &NonlinearitySpec, c: f64, h: f64, num: &Numerics) -> Result<FrontResult> {
    // the minorant front converges too slowly near c_# to serve as a probe
    let upper = kpp_upper_with(c, h, spec, num)?;
    descend_upper(&upper, spec, c, h, num)
}

/// Whether a monotone front exists at speed `c`.
///
/// Sub-tangential reactions are probed by the descent from
/// `min{κ, e^{λ₂t}}` (a front exists unless the iterates collapse).
/// Otherwise the drift of steep data under pseudo-time relaxation decides:
/// receding data mean the minimal speed is below `c`.
pub fn front_exists(spec: &NonlinearitySpec, c: f64, h: f64, num: &Numerics) -> Result<ExistenceProbe> {
    let bounds = crate::charspec::speed_bounds(spec, h)?;
    let probe = |exists, verdict, drift, iterations| Ok(ExistenceProbe { c, exists, verdict, drift, iterations });
    if c < bounds.c_sharp {
        return probe(false, Verdict::NoRealRoots, None, 0);
    }
    if spec.is_subtangential() {
        let r = squeeze_probe(spec, c, h, num)?;
        let it = r.report.iterations;
        return if r.report.collapsed {
            probe(false, Verdict::Collapsed, None, it)
        } else if r.report.converged {
            probe(true, Verdict::SqueezeConverged, None, it)
        } else {
            probe(true, Verdict::SqueezeHeld, None, it)
        };
    }
    let (_, report) = steep_relaxation(spec, c, h, num)?;
    if report.drift > 0.0 {
        probe(true, Verdict::Recedes, Some(report.drift), report.iterations)
    } else {
        probe(false, Verdict::Invades, Some(report.drift), report.iterations)
    }
}

/// Numerics of the drift probe: a coarser grid and a fixed number of steps.
pub fn probe_numerics(num: &Numerics) -> Numerics {
    Numerics { step: num.step.max(0.01), tol: 0.0, max_iter: 3000, ..*num }
}

/// Steep data relaxed for a fixed number of steps on `[-60, 60]`.
pub fn steep_relaxation(
    spec: &NonlinearitySpec,
    c: f64,
    h: f64,
    num: &Numerics,
) -> Result<(Profile, RelaxReport)> {
    let pn = probe_numerics(num);
    let start = steep_start(spec, c, h, -60.0, 60.0, &pn)?;
    relax(start, spec, c, h, TailMode::Steep, &pn)
}

fn relaxation_result(profile: Profile, rep: RelaxReport, spec: &NonlinearitySpec, num: &Numerics, note: String) -> Result<FrontResult> {
    let final_residual = profile.residual(spec)?;
    let decay = fit_decay(&profile, num.fit_levels);
    Ok(FrontResult {
        report: IterationReport {
            iterations: rep.iterations,
            delta_history: rep.delta_history,
            final_residual,
            converged: rep.converged,
            bracket_gap: f64::NAN,
            alignment: 0.0,
            collapsed: false,
            note,
        },
        profile,
        decay,
        strategy: Strategy::Relaxation,
    })
}

/// Front at speed `c`.
///
/// * below `c_#`: steep data are relaxed and the (non-convergent) outcome
///   is reported;
/// * sub-tangential `g`: the squeeze between `min{κ, e^{λ₂t}}` and the
///   minorant front;
/// * otherwise, with a `seed` front at a slower speed: the squeeze between
///   the continuation upper solution and the minorant front;
/// * otherwise: relaxation with the `e^{λ₂t}` tail pinned.
pub fn solve_front(
    spec: &NonlinearitySpec,
    c: f64,
    h: f64,
    num: &Numerics,
    seed: Option<&Profile>,
) -> Result<FrontResult> {
    let bounds = crate::charspec::speed_bounds(spec, h)?;
    if c < bounds.c_sharp {
        let (profile, rep) = steep_relaxation(spec, c, h, num)?;
        let drift = rep.drift;
        let mut r = relaxation_result(
            profile,
            rep,
            spec,
            num,
            format!("no real characteristic roots below c_# = {}; steep data drift {drift:e} per iteration", bounds.c_sharp),
        )?;
        r.report.converged = false;
        return Ok(r);
    }
    if spec.is_subtangential() {
        let upper = kpp_upper_with(c, h, spec, num)?;
        let lower = lower_front_on(c, h, spec, upper.grid(), num)?;
        return iterate(&BoundPair { lower, upper }, spec, c, h, num);
    }
    if let Some(base) = seed.filter(|b| b.c() < c) {
        if let Ok(up) = continuation_upper_auto(base, spec, c, num) {
            let lower = lower_front_on(c, h, spec, up.profile.grid(), num)?;
            let mut r = iterate(&BoundPair { lower, upper: up.profile }, spec, c, h, num)?;
            r.strategy = Strategy::ContinuationUpper;
            if r.report.converged {
                return Ok(r);
            }
        }
    }
    let relax_num = Numerics { max_iter: num.max_iter.max(5000), ..*num };
    let start = pinned_start(spec, c, h, &relax_num)?;
    let (profile, rep) = relax(start, spec, c, h, TailMode::Pinned, &relax_num)?;
    let note = if rep.converged { String::new() } else { format!("max_iter = {} reached", relax_num.max_iter) };
    relaxation_result(profile, rep, spec, num, note)
}

/// The critical front: steep data relaxed at (a speed just above) `c_*`,
/// normalised so that `φ(0) = κ/2`.
pub fn critical_front(spec: &NonlinearitySpec, c: f64, h: f64, num: &Numerics) -> Result<FrontResult> {
    let pn = Numerics { max_iter: 6000, ..probe_numerics(num) };
    let start = steep_start(spec, c, h, -60.0, 60.0, &pn)?;
    let (profile, rep) = relax(start, spec, c, h, TailMode::Steep, &pn)?;
    let note = format!("drift {:e} per iteration", rep.drift);
    let profile = profile.normalized()?;
    relaxation_result(profile, rep, spec, num, note)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionSign {
    pub region: String,
    pub from: f64,
    pub to: f64,
    /// Largest `E₊` sampled on the region (`-inf` if no node falls in it).
    pub max_defect: f64,
}

/// Three-piece candidate upper solution at `c′ < c_*` over a critical front
/// assumed to decay at `λ₂(c_*)`, with the sign of `E₊` on each piece.
#[derive(Clone, Debug)]
pub struct PerturbationReport {
    pub profile: Profile,
    pub t1: f64,
    pub t2: f64,
    pub rho: f64,
    pub lambda2: f64,
    pub lambda2_prime: f64,
    pub regions: Vec<RegionSign>,
    /// One-sided derivatives at `T₁` (left, right).
    pub jump_t1: (f64, f64),
    /// One-sided derivatives at `T₂` (left, right).
    pub jump_t2: (f64, f64),
    /// `E₊ ≤ 0` on every region and both corner jumps negative.
    pub valid: bool,
}

/// Builds `Me^{ρt} + ae^{λ₂′t}` for `t ≤ T₁`, `φ + ε` on `(T₁, T₂]` and
/// `κ` beyond, with `ρ = λ₂(1 + θ)`.
#[allow(clippy::too_many_arguments)]
pub fn pushed_perturbation_upper(
    critical: &Profile,
    spec: &NonlinearitySpec,
    c_prime: f64,
    eps: f64,
    m: f64,
    a: f64,
    theta: f64,
) -> Result<PerturbationReport> {
    let (cs, h, kappa) = (critical.c(), critical.h(), spec.kappa());
    if !(c_prime < cs) {
        return Err(Error::domain(format!("need c' < c_* = {cs}, got {c_prime}")));
    }
    if !(eps > 0.0 && eps < kappa && m > 0.0 && a > 0.0 && theta > 0.0) {
        return Err(Error::domain("need 0 < eps < kappa and positive M, a, theta"));
    }
    let l2 = roots_at(spec, cs, h)?.lambda2;
    let l2p = roots_at(spec, c_prime, h)?.lambda2;
    let rho = l2 * (1.0 + theta);
    if !(rho > l2p) {
        return Err(Error::domain(format!("rho = {rho} does not exceed lambda2(c') = {l2p}")));
    }
    let head = |t: f64| m * (rho * t).exp() + a * (l2p * t).exp();
    let gap = |t: f64| head(t) - critical.eval(t);
    let grid = critical.grid();
    let k = grid
        .iter()
        .position(|&t| gap(t) >= 0.0)
        .ok_or_else(|| Error::numeric("glue point T1 not found: M e^{rho t} + a e^{lambda2' t} stays below the front"))?;
    if k == 0 {
        return Err(Error::numeric("glue point T1 not found: the exponential head exceeds the front at the left end"));
    }
    let t1 = crate::charspec::bisect(grid[k - 1], grid[k], gap);
    let t2 = critical
        .level_crossing(kappa - eps)
        .ok_or_else(|| Error::numeric("glue point T2 not found: phi never reaches kappa - eps"))?;
    if !(t2 > t1) {
        return Err(Error::numeric(format!("glue points out of order: T1 = {t1}, T2 = {t2}")));
    }
    let plus = |t: f64| {
        if t <= t1 {
            head(t)
        } else if t <= t2 {
            critical.eval(t) + eps
        } else {
            kappa
        }
    };
    let values: Vec<f64> = grid.iter().map(|&t| plus(t)).collect();
    let mu = kappa_rate(spec.gp_kappa(), c_prime, h)?;
    let profile = Profile::bound(grid.to_vec(), values, c_prime, h, kappa, rho.min(l2p), 0, mu)?;

    let lin = |l: f64| l * l - c_prime * l - 1.0;
    let defect = |t: f64| {
        let delayed = spec.value(plus(t - c_prime * h));
        if t <= t1 {
            m * lin(rho) * (rho * t).exp() + a * lin(l2p) * (l2p * t).exp() + delayed
        } else if t <= t2 {
            (cs - c_prime) * critical.derivative(t) - eps - spec.value(critical.eval(t - cs * h)) + delayed
        } else {
            delayed - kappa
        }
    };
    let lag = c_prime * h;
    let bounds = [
        ("t <= T1", f64::NEG_INFINITY, t1),
        ("T1 < t <= T1 + c'h", t1, t1 + lag),
        ("T1 + c'h < t <= T2", t1 + lag, t2),
        ("T2 < t <= T2 + c'h", t2, t2 + lag),
        ("t > T2 + c'h", t2 + lag, f64::INFINITY),
    ];
    let d = grid[1] - grid[0];
    let regions: Vec<RegionSign> = bounds
        .iter()
        .map(|&(name, from, to)| {
            let max_defect = grid
                .iter()
                .filter(|&&t| t > from && t <= to)
                .filter(|&&t| (t - t1).abs() > 2.5 * d && (t - t2).abs() > 2.5 * d)
                .map(|&t| defect(t))
                .fold(f64::NEG_INFINITY, f64::max);
            RegionSign { region: name.to_string(), from, to, max_defect }
        })
        .collect();
    let jump_t1 = (m * rho * (rho * t1).exp() + a * l2p * (l2p * t1).exp(), critical.derivative(t1));
    let jump_t2 = (critical.derivative(t2), 0.0);
    let valid = regions.iter().all(|r| r.max_defect <= 0.0) && jump_t1.1 < jump_t1.0 && jump_t2.1 < jump_t2.0;
    Ok(PerturbationReport { profile, t1, t2, rho, lambda2: l2, lambda2_prime: l2p, regions, jump_t1, jump_t2, valid })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kpp_upper_corner_and_rate() {
        let g = NonlinearitySpec::rational_kpp(2.0, 1.0).unwrap();
        let up = kpp_upper(2.5, 0.0, &g).unwrap();
        assert!((up.left_tail().rate - 0.5).abs() < 1e-12);
        assert!((up.eval(0.0) - 1.0).abs() < 1e-15);
        assert!(up.eval(-1e-3) < 1.0);
    }

    #[test]
    fn linear_majorant_has_zero_defect() {
        let g = NonlinearitySpec::rational_kpp(2.0, 1.0).unwrap();
        let up = kpp_upper(2.5, 0.3, &g).unwrap();
        let lin = |u: f64| 2.0 * u;
        let grid = up.grid();
        let d = grid[1] - grid[0];
        let mut worst: f64 = 0.0;
        for k in 2..grid.len() - 2 {
            if grid[k] < -2.5 * d {
                worst = worst.max(up.residual_at(k, &lin).abs());
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn below_majorant_speed_is_rejected() {
        let g = NonlinearitySpec::rational_kpp(2.0, 1.0).unwrap();
        assert!(matches!(kpp_upper(1.9, 0.0, &g), Err(Error::Domain(_))));
    }

    fn kpp() -> NonlinearitySpec {
        NonlinearitySpec::rational_kpp(2.0, 1.0).unwrap()
    }

    #[test]
    fn kpp_upper_is_an_upper_solution() {
        let g = kpp();
        let num = Numerics { step: 0.005, ..Numerics::default() };
        let up = kpp_upper_with(2.5, 0.5, &g, &num).unwrap();
        assert!(up.len() >= 10_000);
        let corner = up.grid()[up.values().iter().position(|&v| v >= 1.0).unwrap()];
        assert!(max_defect(&up, &g, &[corner]) <= 1e-9);
    }

    #[test]
    fn lower_front_properties() {
        let (g, c, h) = (kpp(), 2.3, 0.0);
        let lo = lower_front(c, h, &g).unwrap();
        assert!((lo.right_tail().offset - 0.5).abs() < 1e-12);
        let lam = roots_at(&g, c, h).unwrap().lambda2;
        let fit = fit_decay(&lo, (1e-9, 1e-5)).unwrap();
        assert!((fit.rate - lam).abs() <= 0.02 * lam, "{} {lam}", fit.rate);
        let worst = (2..lo.len() - 2).map(|k| lo.residual_at(k, &g)).fold(f64::INFINITY, f64::min);
        assert!(worst >= -1e-9, "{worst:e}");
    }

    #[test]
    fn squeeze_converges_with_delay() {
        let (g, h) = (kpp(), 0.5);
        let c = crate::charspec::speed_bounds(&g, h).unwrap().c_sharp + 0.3;
        let num = Numerics::default();
        let r = iterate(&kpp_bounds(c, h, &g, &num).unwrap(), &g, c, h, &num).unwrap();
        assert!(r.report.converged);
        assert!(r.report.iterations <= 500);
        assert!(r.report.final_residual <= 1e-6);
        assert!(r.report.bracket_gap <= 10.0 * num.tol, "{:e}", r.report.bracket_gap);
        let lam = roots_at(&g, c, h).unwrap().lambda2;
        assert!((r.decay.unwrap().rate - lam).abs() <= 0.02 * lam);
        assert!(r.profile.values().windows(2).all(|w| w[1] > w[0] || w[1] >= 1.0 - 1e-12));
    }

    #[test]
    fn refeeding_a_front_stops_at_once() {
        let (g, c, h) = (kpp(), 2.3, 0.0);
        let num = Numerics::default();
        let front = solve_front(&g, c, h, &num, None).unwrap();
        let again = descend_upper(&front.profile, &g, c, h, &Numerics { tol: 1e-9, ..num }).unwrap();
        assert_eq!(again.report.iterations, 1);
        assert!(again.report.delta_history[0] <= 1e-9);
    }

    #[test]
    fn below_c_sharp_nothing_converges() {
        let (g, h) = (kpp(), 0.0);
        let r = solve_front(&g, 1.95, h, &Numerics::default(), None).unwrap();
        assert!(!r.report.converged);
        let p = front_exists(&g, 1.95, h, &Numerics::default()).unwrap();
        assert!(!p.exists);
        assert_eq!(p.verdict, Verdict::NoRealRoots);
    }

    #[test]
    fn continuation_over_a_pushed_front() {
        let g = NonlinearitySpec::pushed_candidate();
        let (c0, h) = (1.212, 0.5);
        let num = Numerics::default();
        let base = solve_front(&g, c0, h, &num, None).unwrap();
        assert!(base.report.converged);
        let up = continuation_upper_auto(&base.profile, &g, c0 + 0.01, &num).unwrap();
        assert!(up.attempts <= 20);
        assert!(up.max_defect <= 1e-9);
        assert!(up.sigma > 1.0 && up.b > 0.0 && up.b <= 1.0);
        // continuation only runs towards faster speeds
        assert!(continuation_upper(&base.profile, &g, c0 - 0.01, 1.01, 0.01, &num).is_err());
    }

    #[test]
    fn perturbation_diagnostics() {
        let (g, cs, h) = (kpp(), 2.3, 0.5);
        let front = solve_front(&g, cs, h, &Numerics::default(), None).unwrap().profile.normalized().unwrap();
        let r = pushed_perturbation_upper(&front, &g, 2.2, 1e-3, 1.0, 1.0, 0.5).unwrap();
        assert!(r.rho > r.lambda2_prime);
        assert!(r.t2 > r.t1);
        assert!(r.jump_t1.0 > r.jump_t1.1);
        let last = r.regions.last().unwrap();
        assert_eq!(last.max_defect, 0.0);
        assert!(pushed_perturbation_upper(&front, &g, 2.4, 1e-3, 1.0, 1.0, 0.5).is_err());
    }
}
