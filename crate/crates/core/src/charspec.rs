//! Characteristic equation `χ(z, c) = z² − cz − 1 + p·e^{−zch}` of the
//! linearisation at zero, its critical speeds and the kernel exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharParams {
    pub c: f64,
    pub h: f64,
    pub p: f64,
}

impl CharParams {
    pub fn new(c: f64, h: f64, p: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("speed must be positive, got c = {c}")));
        }
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::domain(format!("delay must be nonnegative, got h = {h}")));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::domain(format!("slope must exceed 1, got p = {p}")));
        }
        Ok(Self { c, h, p })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharRoots {
    pub lambda2: f64,
    pub lambda1: f64,
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedBounds {
    pub c_sharp: f64,
    pub c_star_upper: f64,
    pub lambda_sharp: f64,
}

/// Roots `ξ₁ < 0 < ξ₂` of `z² − cz − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelRoots {
    pub xi1: f64,
    pub xi2: f64,
}

pub fn chi(z: f64, params: &CharParams) -> f64 {
    let CharParams { c, h, p } = *params;
    z * z - c * z - 1.0 + p * (-z * c * h).exp()
}

pub fn chi_dz(z: f64, params: &CharParams) -> f64 {
    let CharParams { c, h, p } = *params;
    2.0 * z - c - p * c * h * (-z * c * h).exp()
}

pub fn chi_dzz(z: f64, params: &CharParams) -> f64 {
    let CharParams { c, h, p } = *params;
    2.0 + p * (c * h).powi(2) * (-z * c * h).exp()
}

/// Bisection for a sign change of `f` on `[lo, hi]`, run until the midpoint
/// is no longer representable between the endpoints.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimiser of the convex map `z ↦ χ(z, c)` on `[0, ∞)`.
fn argmin(params: &CharParams) -> f64 {
    let CharParams { c, h, p } = *params;
    let hi = 0.5 * (c + p * c * h) + 1.0;
    bisect(0.0, hi, |z| chi_dz(z, params))
}

/// Positive real roots `λ₂ ≤ λ₁` of `χ(·, c)`, or `None` when `c < c_#`.
pub fn real_roots(params: &CharParams) -> Option<CharRoots> {
    let zmin = argmin(params);
    let m = chi(zmin, params);
    let scale = 1e-12 * params.p.max(1.0);
    if m > scale {
        return None;
    }
    if m.abs() <= scale {
        return Some(CharRoots { lambda2: zmin, lambda1: zmin, degenerate: true });
    }
    let f = |z| chi(z, params);
    let lambda2 = bisect(0.0, zmin, f);
    let lambda1 = bisect(zmin, params.c + 2.0, f);
    Some(CharRoots { lambda2, lambda1, degenerate: false })
}

fn min_chi(c: f64, h: f64, p: f64) -> (f64, f64) {
    let params = CharParams { c, h, p };
    let z = argmin(&params);
    (chi(z, &params), z)
}

/// The speed `c_#` at which `χ` acquires a double positive root, and that root.
pub fn double_root_speed(h: f64, p: f64) -> Result<(f64, f64)> {
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("delay must be nonnegative, got h = {h}")));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::domain(format!("slope must exceed 1, got p = {p}")));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut expansions = 0;
    while min_chi(hi, h, p).0 > 0.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::numeric(format!(
                "double_root_speed: no sign change of min chi up to c = {hi} (h = {h}, p = {p})"
            )));
        }
    }
    let c = bisect(lo, hi, |c| min_chi(c, h, p).0);
    Ok((c, min_chi(c, h, p).1))
}

pub fn xi_roots(c: f64) -> KernelRoots {
    let s = c.hypot(2.0);
    if c >= 0.0 {
        let xi2 = 0.5 * (c + s);
        KernelRoots { xi1: -1.0 / xi2, xi2 }
    } else {
        let xi1 = 0.5 * (c - s);
        KernelRoots { xi1, xi2: -1.0 / xi1 }
    }
}

pub fn speed_bounds(spec: &NonlinearitySpec, h: f64) -> Result<SpeedBounds> {
    let (c_sharp, lambda_sharp) = double_root_speed(h, spec.gp0())?;
    let c_star_upper = if spec.gp_plus() == spec.gp0() {
        c_sharp
    } else {
        double_root_speed(h, spec.gp_plus())?.0
    };
    Ok(SpeedBounds { c_sharp, c_star_upper, lambda_sharp })
}

/// Roots of `χ(·, c)` at slope `g'(0)`, as a domain error when `c < c_#`.
pub fn roots_at(spec: &NonlinearitySpec, c: f64, h: f64) -> Result<CharRoots> {
    let params = CharParams::new(c, h, spec.gp0())?;
    real_roots(&params).ok_or_else(|| {
        Error::domain(format!("no real characteristic roots at c = {c}, h = {h} (c < c_#)"))
    })
}

/// Approach rate `μ > 0` at `+∞`: the positive root of
/// `μ² + cμ − 1 + g'(κ)·e^{μch} = 0` from the linearisation at `κ`.
pub fn kappa_rate(gp_kappa: f64, c: f64, h: f64) -> Result<f64> {
    if !(gp_kappa < 1.0) {
        return Err(Error::domain(format!("g'(kappa) = {gp_kappa} is not below 1")));
    }
    let f = |m: f64| m * m + c * m - 1.0 + gp_kappa.max(0.0) * (m * c * h).exp();
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    Ok(bisect(0.0, hi, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_delay_quadratic_roots() {
        let r = real_roots(&CharParams::new(3.0, 0.0, 2.0).unwrap()).unwrap();
        let s5 = 5f64.sqrt();
        assert!((r.lambda2 - (3.0 - s5) / 2.0).abs() < 1e-13);
        assert!((r.lambda1 - (3.0 + s5) / 2.0).abs() < 1e-13);
        assert!(!r.degenerate);
        let d = real_roots(&CharParams::new(2.0, 0.0, 2.0).unwrap()).unwrap();
        assert!(d.degenerate);
        assert!((d.lambda1 - 1.0).abs() < 1e-12);
        assert!(real_roots(&CharParams::new(1.9, 0.0, 2.0).unwrap()).is_none());
    }

    #[test]
    fn chi_at_zero() {
        let params = CharParams::new(1.3, 0.7, 2.5).unwrap();
        assert_eq!(chi(0.0, &params), 1.5);
        let flat = CharParams::new(1.3, 0.0, 2.5).unwrap();
        assert!((chi(0.4, &flat) - (0.16 - 1.3 * 0.4 + 1.5)).abs() < 1e-15);
    }

    #[test]
    fn zero_delay_critical_speed() {
        for p in [1.5, 2.0, 5.0] {
            let (c, l) = double_root_speed(0.0, p).unwrap();
            assert!((c - 2.0 * (p - 1.0_f64).sqrt()).abs() < 1e-10);
            assert!((l - (p - 1.0_f64).sqrt()).abs() < 1e-9);
        }
    }

    /// At `h = 1` the double root sits at `z = c`, so `c_# = sqrt(ln p)`.
    #[test]
    fn unit_delay_critical_speed_closed_form() {
        for p in [1.5, 2.0, 3.0, 7.0] {
            let (c, l) = double_root_speed(1.0, p).unwrap();
            let exact = p.ln().sqrt();
            assert!((c - exact).abs() < 1e-10, "p = {p}: {c} vs {exact}");
            assert!((l - exact).abs() < 1e-6);
        }
    }

    /// Brute-force 2-D scan minimising |χ| + |∂χ/∂z| over a (z, c) grid.
    #[test]
    fn unit_delay_critical_speed_grid_scan() {
        let p = 2.0;
        let mut best = (f64::MAX, 0.0, 0.0);
        let (mut c0, mut c1, mut z0, mut z1) = (0.1, 3.0, 0.01, 3.0);
        for _ in 0..6 {
            for i in 0..=200 {
                let c = c0 + (c1 - c0) * i as f64 / 200.0;
                for j in 0..=200 {
                    let z = z0 + (z1 - z0) * j as f64 / 200.0;
                    let prm = CharParams { c, h: 1.0, p };
                    let v = chi(z, &prm).abs() + chi_dz(z, &prm).abs();
                    if v < best.0 {
                        best = (v, c, z);
                    }
                }
            }
            let (wc, wz) = ((c1 - c0) / 20.0, (z1 - z0) / 20.0);
            (c0, c1, z0, z1) = (best.1 - wc, best.1 + wc, best.2 - wz, best.2 + wz);
        }
        let (c, _) = double_root_speed(1.0, p).unwrap();
        assert!((c - best.1).abs() < 1e-6, "{c} vs scan {}", best.1);
        assert!((c - 0.832_554_611_157_697_7).abs() < 1e-10);
    }

    #[test]
    fn kernel_roots_vieta() {
        let k = xi_roots(1.5);
        assert!((k.xi1 + 0.5).abs() < 1e-15 && (k.xi2 - 2.0).abs() < 1e-15);
        let k = xi_roots(1e-4);
        assert!((k.xi1 * k.xi2 + 1.0).abs() < 1e-14);
        let k = xi_roots(10.0);
        assert!((k.xi1 + k.xi2 - 10.0).abs() < 1e-14 * 10.0);
    }

    #[test]
    fn kpp_bounds_coincide() {
        let g = NonlinearitySpec::rational_kpp(2.0, 1.0).unwrap();
        let b = speed_bounds(&g, 0.0).unwrap();
        assert!((b.c_sharp - 2.0).abs() < 1e-10);
        assert_eq!(b.c_sharp, b.c_star_upper);
        let g = NonlinearitySpec::rational_kpp(5.0, 1.0).unwrap();
        let b = speed_bounds(&g, 0.0).unwrap();
        assert!((b.c_star_upper - 4.0).abs() < 1e-10);
    }

    #[test]
    fn pushed_candidate_bounds_are_separated() {
        let g = NonlinearitySpec::pushed_candidate();
        let b = speed_bounds(&g, 0.5).unwrap();
        assert!(b.c_star_upper > b.c_sharp + 0.3);
    }

    #[test]
    fn kappa_rate_zero_delay() {
        // μ² + cμ − 1 + q = 0
        let (q, c) = (0.5, 2.0);
        let mu = kappa_rate(q, c, 0.0).unwrap();
        assert!((mu - 0.5 * (-c + (c * c + 4.0 * (1.0 - q)).sqrt())).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn roots_bracket_double_root(h in 0.0..2.0f64, p in 1.1..6.0f64, dc in 1e-3..5.0f64) {
            let (cs, ls) = double_root_speed(h, p).unwrap();
            let prm = CharParams::new(cs + dc, h, p).unwrap();
            let r = real_roots(&prm).unwrap();
            prop_assert!(r.lambda2 < ls && ls < r.lambda1);
            for z in [r.lambda2, r.lambda1] {
                prop_assert!(chi(z, &prm).abs() <= 1e-12 * (1.0 + chi_dzz(z, &prm)));
            }
            let mid = 0.5 * (r.lambda2 + r.lambda1);
            prop_assert!(chi(mid, &prm) < 0.0);
            prop_assert!(chi(0.5 * r.lambda2, &prm) > 0.0);
            prop_assert!(chi(1.5 * r.lambda1, &prm) > 0.0);
        }

        #[test]
        fn lambda2_decreases_with_speed(h in 0.0..2.0f64, p in 1.1..6.0f64, a in 1e-3..5.0f64, d in 1e-3..1.0f64) {
            let (cs, _) = double_root_speed(h, p).unwrap();
            let l = |c| real_roots(&CharParams::new(c, h, p).unwrap()).unwrap().lambda2;
            prop_assert!(l(cs + a + d) < l(cs + a));
        }

        #[test]
        fn critical_speed_monotone_in_slope_and_delay(h in 0.0..2.0f64, p in 1.1..6.0f64, dp in 0.01..2.0f64, dh in 0.01..1.0f64) {
            let c = double_root_speed(h, p).unwrap().0;
            prop_assert!(double_root_speed(h, p + dp).unwrap().0 > c);
            // a longer delay weakens the delayed feedback, so c_# drops
            prop_assert!(double_root_speed(h + dh, p).unwrap().0 < c);
        }
    }
}
