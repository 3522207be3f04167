//! Characteristic analysis of the nonlocal lattice model
//!
//! `u_n' = D[u_{n+1} + u_{n-1} - 2u_n] - u_n + Σ_k β(n-k) g(u_k(t-h))`.
//!
//! Wave profiles `φ(n + ct)` of this model decay at `-∞` like
//! `(-t)^j e^{λt}`, where `λ` is the smallest positive zero of
//! `χ̃(z, c) = 1 + 2D + cz - D(e^z + e^{-z}) - g'(0) e^{-chz} B(z)`.

use serde::{Deserialize, Serialize};

use crate::charspec::bisect;
use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::profile::Profile;

/// Interaction kernel `β` on `ℤ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// Finitely many nonzero weights, as `(k, β(k))` pairs.
    Finite { weights: Vec<(i64, f64)> },
    /// `β(k) = (1-q)/(1+q) q^{|k|}`.
    Geometric { q: f64 },
    /// Sampled weights of a kernel with possibly infinite support. The
    /// abscissa of convergence is declared or estimated from the samples.
    Tabulated { weights: Vec<(i64, f64)>, gamma_sharp: Option<f64> },
}

/// `γ^#` with a flag for estimates from finitely many samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSharp {
    pub value: f64,
    pub approximate: bool,
}

const MASS_TOL: f64 = 1e-12;

fn check_weights(weights: &[(i64, f64)]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::domain("kernel has no weights"));
    }
    if let Some(&(k, w)) = weights.iter().find(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::domain(format!("kernel weight beta({k}) = {w} is not a nonnegative number")));
    }
    let mut ks: Vec<i64> = weights.iter().map(|&(k, _)| k).collect();
    ks.sort_unstable();
    if ks.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("kernel lists an index twice"));
    }
    let mass: f64 = weights.iter().map(|&(_, w)| w).sum();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::domain(format!("kernel weights sum to {mass}, not 1")));
    }
    Ok(())
}

impl Kernel {
    /// All mass at `k = 0`: the local model.
    pub fn delta() -> Self {
        Kernel::Finite { weights: vec![(0, 1.0)] }
    }

    /// `β(±1) = 1/2`.
    pub fn symmetric() -> Self {
        Kernel::Finite { weights: vec![(-1, 0.5), (1, 0.5)] }
    }

    pub fn geometric(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain(format!("geometric kernel needs 0 < q < 1, got {q}")));
        }
        Ok(Kernel::Geometric { q })
    }

    pub fn finite(weights: Vec<(i64, f64)>) -> Result<Self> {
        check_weights(&weights)?;
        Ok(Kernel::Finite { weights })
    }

    pub fn tabulated(weights: Vec<(i64, f64)>, gamma_sharp: Option<f64>) -> Result<Self> {
        check_weights(&weights)?;
        if let Some(g) = gamma_sharp {
            if !(g > 0.0) {
                return Err(Error::domain(format!("declared gamma_sharp must be positive, got {g}")));
            }
        }
        Ok(Kernel::Tabulated { weights, gamma_sharp })
    }

    /// Checks the invariants of kernels built directly or deserialised.
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Geometric { q } => Kernel::geometric(*q).map(|_| ()),
            Kernel::Finite { weights } => check_weights(weights),
            Kernel::Tabulated { weights, gamma_sharp } => {
                Kernel::tabulated(weights.clone(), *gamma_sharp).map(|_| ())
            }
        }
    }

    pub fn weight(&self, k: i64) -> f64 {
        match self {
            Kernel::Geometric { q } => (1.0 - q) / (1.0 + q) * q.powi(k.unsigned_abs().min(i32::MAX as u64) as i32),
            Kernel::Finite { weights } | Kernel::Tabulated { weights, .. } => {
                weights.iter().find(|&&(j, _)| j == k).map_or(0.0, |&(_, w)| w)
            }
        }
    }

    /// Nonzero weights, dropping a tail of total mass below `tail`.
    pub fn truncated(&self, tail: f64) -> Vec<(i64, f64)> {
        match self {
            Kernel::Geometric { q } => {
                // mass beyond |k| = K is 2q^{K+1}/(1+q)
                let mut k = 0i64;
                while 2.0 * q.powi(k as i32 + 1) / (1.0 + q) >= tail {
                    k += 1;
                }
                (-k..=k).map(|j| (j, self.weight(j))).collect()
            }
            Kernel::Finite { weights } | Kernel::Tabulated { weights, .. } => {
                let mut w: Vec<(i64, f64)> = weights.iter().copied().filter(|&(_, x)| x > 0.0).collect();
                w.sort_by_key(|&(k, _)| k);
                w
            }
        }
    }
}

/// Abscissa of convergence of `B(z) = Σ β(k) e^{-zk}`, from the
/// Cauchy–Hadamard formula `γ^# = -limsup k⁻¹ ln β(-k)`.
pub fn gamma_sharp(kernel: &Kernel) -> GammaSharp {
    match kernel {
        Kernel::Finite { .. } => GammaSharp { value: f64::INFINITY, approximate: false },
        Kernel::Geometric { q } => GammaSharp { value: (1.0 / q).ln(), approximate: false },
        Kernel::Tabulated { gamma_sharp: Some(g), .. } => GammaSharp { value: *g, approximate: false },
        Kernel::Tabulated { weights, gamma_sharp: None } => {
            let mut neg: Vec<(i64, f64)> =
                weights.iter().filter(|&&(k, w)| k < 0 && w > 0.0).map(|&(k, w)| (-k, w)).collect();
            if neg.is_empty() {
                return GammaSharp { value: f64::INFINITY, approximate: true };
            }
            neg.sort_by_key(|&(k, _)| k);
            // limsup over the upper half of the sampled range
            let kmax = neg.last().unwrap().0;
            let sup = neg
                .iter()
                .filter(|&&(k, _)| 2 * k >= kmax)
                .map(|&(k, w)| w.ln() / k as f64)
                .fold(f64::NEG_INFINITY, f64::max);
            GammaSharp { value: (-sup).max(0.0), approximate: true }
        }
    }
}

/// Largest `z` at which `B` is evaluated: `γ^#` itself, or 95% of it when
/// it is only estimated.
fn z_limit(kernel: &Kernel) -> f64 {
    let g = gamma_sharp(kernel);
    if g.approximate {
        0.95 * g.value
    } else {
        g.value
    }
}

/// `B(z) = Σ β(k) e^{-zk}` for `0 ≤ z < γ^#`.
pub fn b_transform(kernel: &Kernel, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::domain(format!("B(z) needs z >= 0, got {z}")));
    }
    let limit = z_limit(kernel);
    if z >= limit {
        return Err(Error::domain(format!("B(z) diverges: z = {z} is not below gamma_sharp bound {limit}")));
    }
    match kernel {
        Kernel::Finite { weights } | Kernel::Tabulated { weights, .. } => {
            Ok(weights.iter().map(|&(k, w)| w * (-z * k as f64).exp()).sum())
        }
        Kernel::Geometric { q } => {
            let w0 = (1.0 - q) / (1.0 + q);
            let (a, b) = (q * (-z).exp(), q * z.exp());
            // partial sums of the two geometric tails, each ratio below 1
            let mut sum = w0;
            let (mut ta, mut tb) = (w0 * a, w0 * b);
            for _ in 0..1_000_000 {
                sum += ta + tb;
                // remaining tail of both series is ta·a/(1-a) + tb·b/(1-b)
                let rest = ta * a / (1.0 - a) + tb * b / (1.0 - b);
                if rest < 1e-14 * sum {
                    return Ok(sum + rest);
                }
                ta *= a;
                tb *= b;
            }
            Err(Error::numeric(format!("B(z) series did not settle at z = {z}")))
        }
    }
}

/// Model data for the characteristic analysis at a given speed.
#[derive(Clone, Debug)]
pub struct LatticeModel {
    pub d: f64,
    pub kernel: Kernel,
    pub h: f64,
    pub spec: NonlinearitySpec,
    pub c: f64,
}

impl LatticeModel {
    pub fn new(d: f64, kernel: Kernel, h: f64, spec: NonlinearitySpec, c: f64) -> Result<Self> {
        if !(d >= 0.0) || !(h >= 0.0) || !c.is_finite() {
            return Err(Error::domain(format!("invalid lattice model D = {d}, h = {h}, c = {c}")));
        }
        kernel.validate()?;
        if !(gamma_sharp(&kernel).value > 0.0) {
            return Err(Error::domain("gamma_sharp must be positive"));
        }
        Ok(Self { d, kernel, h, spec, c })
    }

    pub fn at_speed(&self, c: f64) -> Self {
        Self { c, ..self.clone() }
    }
}

/// `χ̃(z, c)`.
pub fn lattice_chi(z: f64, model: &LatticeModel) -> Result<f64> {
    let LatticeModel { d, h, c, .. } = *model;
    let b = b_transform(&model.kernel, z)?;
    Ok(1.0 + 2.0 * d + c * z - d * (z.exp() + (-z).exp()) - model.spec.gp0() * (-c * h * z).exp() * b)
}

/// `∂χ̃/∂z`, with `B'` by central differences.
fn lattice_chi_dz(z: f64, model: &LatticeModel) -> Result<f64> {
    let LatticeModel { d, h, c, .. } = *model;
    let limit = z_limit(&model.kernel);
    let e = 1e-6 * (1.0 + z);
    let (lo, hi) = ((z - e).max(0.0), (z + e).min(0.5 * (z + limit)));
    let b = b_transform(&model.kernel, z)?;
    let db = (b_transform(&model.kernel, hi)? - b_transform(&model.kernel, lo)?) / (hi - lo);
    let p = model.spec.gp0();
    let w = (-c * h * z).exp();
    Ok(c - d * (z.exp() - (-z).exp()) - p * w * (db - c * h * b))
}

/// Magnitude of the terms of `χ̃′`, used to normalise the multiplicity test.
fn dz_scale(z: f64, model: &LatticeModel) -> f64 {
    let LatticeModel { d, h, c, .. } = *model;
    let b = b_transform(&model.kernel, z).unwrap_or(1.0);
    1.0 + c.abs() + d * (z.exp() + (-z).exp()) + model.spec.gp0() * (-c * h * z).exp() * b * (1.0 + (c * h).abs())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeCharReport {
    pub gamma_sharp: f64,
    pub gamma_approximate: bool,
    /// Smallest positive zero of `χ̃` below `γ^#`, if any.
    pub lambda: Option<f64>,
    /// `1` for a double zero, `0` otherwise.
    pub multiplicity_j: Option<u8>,
    pub residual: Option<f64>,
    pub note: String,
}

/// Threshold on the normalised `|χ̃′(λ)|` below which a zero is double.
pub const MULTIPLICITY_TOL: f64 = 1e-8;

/// Maximiser of the concave map `z ↦ χ̃(z, c)` on `[0, limit)`.
fn argmax(model: &LatticeModel, limit: f64) -> Result<f64> {
    let mut hi = 1.0f64.min(0.5 * limit);
    while lattice_chi_dz(hi, model)? > 0.0 {
        if hi >= 0.999 * limit || hi > 700.0 {
            return Ok(hi);
        }
        hi = (2.0 * hi).min(0.5 * (hi + limit)).min(700.0);
    }
    let f = |z: f64| lattice_chi_dz(z, model).unwrap_or(f64::NAN);
    if f(0.0) <= 0.0 {
        return Ok(0.0);
    }
    Ok(bisect(0.0, hi, f))
}

/// Smallest positive zero `λ < γ^#` of `χ̃(·, c)` and its multiplicity.
pub fn lattice_lambda(model: &LatticeModel) -> Result<LatticeCharReport> {
    if model.c == 0.0 {
        return Err(Error::domain("lattice_lambda needs c != 0"));
    }
    let gs = gamma_sharp(&model.kernel);
    let limit = z_limit(&model.kernel).min(700.0);
    let mut report = LatticeCharReport {
        gamma_sharp: gs.value,
        gamma_approximate: gs.approximate,
        lambda: None,
        multiplicity_j: None,
        residual: None,
        note: String::new(),
    };
    let zmax = argmax(model, limit)?;
    let top = lattice_chi(zmax, model)?;
    let scale = dz_scale(zmax, model);
    if top.abs() <= 1e-12 * scale {
        report.lambda = Some(zmax);
        report.multiplicity_j = Some(1);
        report.residual = Some(top.abs());
        report.note = "double zero at the maximum of chi".into();
        return Ok(report);
    }
    if top < 0.0 {
        report.note = format!("no zero in (0, gamma_sharp): max chi = {top:e} at z = {zmax}");
        return Ok(report);
    }
    let f = |z: f64| lattice_chi(z, model).unwrap_or(f64::NAN);
    let lambda = bisect(0.0, zmax, f);
    let slope = lattice_chi_dz(lambda, model)?.abs() / dz_scale(lambda, model);
    report.lambda = Some(lambda);
    report.multiplicity_j = Some(u8::from(slope <= MULTIPLICITY_TOL));
    report.residual = Some(f(lambda).abs());
    Ok(report)
}

/// Speed at which `χ̃` acquires a double positive zero, and that zero.
pub fn lattice_double_root_speed(model: &LatticeModel) -> Result<(f64, f64)> {
    let limit = z_limit(&model.kernel).min(700.0);
    let top = |c: f64| -> Result<f64> {
        let m = model.at_speed(c);
        let z = argmax(&m, limit)?;
        lattice_chi(z, &m)
    };
    if top(1e-9)? >= 0.0 {
        return Err(Error::domain("chi has a positive zero at every speed"));
    }
    let mut hi = 1.0;
    while top(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::numeric("no double-root speed below 1e6"));
        }
    }
    let c = bisect(1e-9, hi, |c| top(c).unwrap_or(f64::NAN));
    let m = model.at_speed(c);
    Ok((c, argmax(&m, limit)?))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ShiftMatch {
    pub s0: f64,
    pub sup_error: f64,
}

/// Shift `s0` making `t ↦ b(t + s0)` cross `κ/2` where `a` does, and the
/// largest remaining difference over the grid of `a`.
pub fn shift_match(a: &Profile, b: &Profile) -> Result<ShiftMatch> {
    if (a.kappa() - b.kappa()).abs() > 1e-9 {
        return Err(Error::domain(format!("profiles have different kappa: {} and {}", a.kappa(), b.kappa())));
    }
    let level = 0.5 * a.kappa();
    let ta = a.level_crossing(level).ok_or_else(|| Error::domain("first profile never reaches kappa/2"))?;
    let tb = b.level_crossing(level).ok_or_else(|| Error::domain("second profile never reaches kappa/2"))?;
    let s0 = tb - ta;
    let sup_error = a.grid().iter().zip(a.values()).map(|(&t, &v)| (v - b.eval(t + s0)).abs()).fold(0.0, f64::max);
    Ok(ShiftMatch { s0, sup_error })
}
