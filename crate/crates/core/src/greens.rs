//! The two-sided exponential kernel of `ψ″ − cψ′ − ψ`: the monotone operator
//!
//! ```text
//! (𝒜φ)(t) = [∫_{−∞}^t e^{ξ₁(t−s)} F(s) ds + ∫_t^{∞} e^{ξ₂(t−s)} F(s) ds] / (ξ₂ − ξ₁),
//! F(s) = g(φ(s − ch)),
//! ```
//!
//! and the representation of solutions with prescribed jumps.
//!
//! Both half-line integrals are accumulated cell by cell. On a cell the
//! integrand factor is interpolated geometrically when its end values share
//! a sign (exact for exponentials) and linearly otherwise; the exponential
//! weight is integrated exactly in both cases.

use serde::{Deserialize, Serialize};

use crate::charspec::{xi_roots, KernelRoots};
use crate::error::{Error, Result};
use crate::nonlinearity::Reaction;
use crate::profile::Profile;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpData {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// `(eˣ − 1)/x`.
fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-300 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// `∫₀¹ e^{xw} w dw`.
fn phi2(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        0.5 + x / 3.0 + x * x / 8.0 + x * x * x / 30.0 + x.powi(4) / 144.0
    } else {
        (x.exp() * (x - 1.0) + 1.0) / (x * x)
    }
}

/// `∫₀^Δ e^{ξ(Δ−u)} F(u) du` for `F` with end values `fa`, `fb`.
fn cell_left(fa: f64, fb: f64, d: f64, xi: f64) -> f64 {
    let x = xi * d;
    if fa * fb > 0.0 {
        fb * d * phi1(x - (fb / fa).ln())
    } else {
        let w = phi2(x);
        d * (fa * w + fb * (phi1(x) - w))
    }
}

/// `∫₀^Δ e^{−ξu} F(u) du` for `F` with end values `fa`, `fb`.
fn cell_right(fa: f64, fb: f64, d: f64, xi: f64) -> f64 {
    let y = -xi * d;
    if fa * fb > 0.0 {
        fa * d * phi1((fb / fa).ln() + y)
    } else {
        let w = phi2(y);
        d * (fa * (phi1(y) - w) + fb * w)
    }
}

/// `I_L(t_k) + I_R(t_k)` on every node. `cell(k)` gives the integrand's
/// one-sided limits on `[t_k, t_{k+1}]`; the closures are the integrals
/// beyond the grid ends.
fn sweep(
    grid: &[f64],
    xi: KernelRoots,
    left_closure: f64,
    right_closure: f64,
    cell: impl Fn(usize) -> (f64, f64),
) -> Vec<f64> {
    let n = grid.len();
    let mut out = vec![0.0; n];
    let cells: Vec<(f64, f64)> = (0..n - 1).map(&cell).collect();
    let step = crate::interp::uniform_step(grid);
    let (e1u, e2u) = match step {
        Some(d) => ((xi.xi1 * d).exp(), (-xi.xi2 * d).exp()),
        None => (f64::NAN, f64::NAN),
    };
    let mut acc = left_closure;
    out[0] = acc;
    for k in 0..n - 1 {
        let d = grid[k + 1] - grid[k];
        let e1 = if step.is_some() { e1u } else { (xi.xi1 * d).exp() };
        let (fa, fb) = cells[k];
        acc = e1 * acc + cell_left(fa, fb, d, xi.xi1);
        out[k + 1] = acc;
    }
    let mut acc = right_closure;
    out[n - 1] += acc;
    for k in (0..n - 1).rev() {
        let d = grid[k + 1] - grid[k];
        let e2 = if step.is_some() { e2u } else { (-xi.xi2 * d).exp() };
        let (fa, fb) = cells[k];
        acc = e2 * acc + cell_right(fa, fb, d, xi.xi2);
        out[k] += acc;
    }
    out
}

/// Number of grid steps in the lag `ch` when it is an exact multiple of a
/// uniform step.
pub(crate) fn node_lag(grid: &[f64], lag: f64) -> Option<usize> {
    let d = crate::interp::uniform_step(grid)?;
    let m = (lag / d).round();
    ((lag - m * d).abs() <= 1e-9 * d).then_some(m as usize)
}

/// Values of `𝒜φ` on the grid of `phi`.
pub fn apply_a_values(phi: &Profile, g: &dyn Reaction, c: f64, h: f64) -> Result<Vec<f64>> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("speed must be positive, got {c}")));
    }
    let xi = xi_roots(c);
    let left = *phi.left_tail();
    let right = *phi.right_tail();
    if !(left.rate < xi.xi2) {
        return Err(Error::domain(format!(
            "left tail rate {} is not below xi2 = {}",
            left.rate, xi.xi2
        )));
    }
    let grid = phi.grid();
    let vals = phi.values();
    let n = grid.len();
    let lag = c * h;
    let f: Vec<f64> = match node_lag(grid, lag) {
        Some(m) => (0..n)
            .map(|k| g.react(if k >= m { vals[k - m] } else { phi.eval(grid[k] - lag) }))
            .collect(),
        None => grid.iter().map(|&t| g.react(phi.eval(t - lag))).collect(),
    };
    let f = curvature_corrected(grid, f);
    let t0 = grid[0];
    let k1 = left.rate - xi.xi1;
    let left_closure = if left.poly_degree == 1 {
        f[0] * (1.0 / k1 + 1.0 / (-t0 * k1 * k1))
    } else {
        f[0] / k1
    };
    let f_inf = g.react(right.offset);
    let right_closure = f_inf / xi.xi2 - (f_inf - f[n - 1]) / (xi.xi2 + right.rate);
    let mass = xi.xi2 - xi.xi1;
    let mut out = sweep(grid, xi, left_closure, right_closure, |k| (f[k], f[k + 1]));
    for v in &mut out {
        *v /= mass;
    }
    Ok(out)
}

/// Node values adjusted by the leading interpolation error, `F − Δ²/12·F''`
/// (with `F''` replaced by `F·(ln F)''` where the cell rule is geometric).
/// Exact exponentials are left unchanged. Only applied on uniform grids.
fn curvature_corrected(grid: &[f64], mut f: Vec<f64>) -> Vec<f64> {
    let n = f.len();
    if n < 3 || crate::interp::uniform_step(grid).is_none() {
        return f;
    }
    let orig = f.clone();
    for k in 1..n - 1 {
        let (a, b, c) = (orig[k - 1], orig[k], orig[k + 1]);
        f[k] = if a > 0.0 && b > 0.0 && c > 0.0 {
            b * (-(c.ln() - 2.0 * b.ln() + a.ln()) / 12.0).exp()
        } else {
            b - (c - 2.0 * b + a) / 12.0
        };
    }
    f
}

/// `𝒜φ` as a profile on the grid of `phi`, keeping the tail rates of `phi`.
#[allow(non_snake_case)]
pub fn apply_A(phi: &Profile, g: &dyn Reaction, c: f64, h: f64) -> Result<Profile> {
    let values = apply_a_values(phi, g, c, h)?;
    phi.with_values(values)
}

/// Solution of `ψ″ − cψ′ − ψ = f` with prescribed jumps `Δψ = α_j`,
/// `Δψ′ = β_j`, evaluated on `grid`. At a node equal to a jump location the
/// right limit is returned. `f` is extended as a constant beyond the grid.
pub fn impulsive_solve(
    f: &dyn Fn(f64) -> f64,
    jumps: &[JumpData],
    c: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    if jumps.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(Error::domain("jump locations must be strictly increasing"));
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("grid must be strictly increasing with at least two nodes"));
    }
    let xi = xi_roots(c);
    let n = grid.len();
    let left_closure = f(grid[0]) / -xi.xi1;
    let right_closure = f(grid[n - 1]) / xi.xi2;
    let integrals = sweep(grid, xi, left_closure, right_closure, |k| {
        let eta = 1e-9 * (grid[k + 1] - grid[k]);
        (f(grid[k] + eta), f(grid[k + 1] - eta))
    });
    let mass = xi.xi2 - xi.xi1;
    Ok(grid
        .iter()
        .zip(integrals)
        .map(|(&t, i)| -i / mass + jump_terms(t, jumps, xi))
        .collect())
}

fn jump_terms(t: f64, jumps: &[JumpData], xi: KernelRoots) -> f64 {
    let mass = xi.xi2 - xi.xi1;
    jumps
        .iter()
        .map(|j| {
            if t < j.t {
                (xi.xi2 * (t - j.t)).exp() * (xi.xi1 * j.alpha - j.beta)
            } else {
                (xi.xi1 * (t - j.t)).exp() * (xi.xi2 * j.alpha - j.beta)
            }
        })
        .sum::<f64>()
        / mass
}

/// Left-limit companion of the jump sums, used to read off `Δψ` at `t_j`.
pub fn jump_terms_left(t: f64, jumps: &[JumpData], c: f64) -> f64 {
    let xi = xi_roots(c);
    let mass = xi.xi2 - xi.xi1;
    jumps
        .iter()
        .map(|j| {
            if t <= j.t {
                (xi.xi2 * (t - j.t)).exp() * (xi.xi1 * j.alpha - j.beta)
            } else {
                (xi.xi1 * (t - j.t)).exp() * (xi.xi2 * j.alpha - j.beta)
            }
        })
        .sum::<f64>()
        / mass
}

/// Factor by which `𝒜` multiplies `e^{λt}` for the linear reaction `g = p·u`.
pub fn linear_eigenfactor(lambda: f64, c: f64, h: f64, p: f64) -> f64 {
    p * (-lambda * c * h).exp() / (1.0 + c * lambda - lambda * lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charspec::{real_roots, CharParams};
    use crate::nonlinearity::NonlinearitySpec;
    use crate::profile::uniform_grid;
    use proptest::prelude::*;

    fn exp_profile(lam: f64, c: f64, h: f64, a: f64, b: f64, n: usize) -> Profile {
        let grid = uniform_grid(a, b, n);
        let v: Vec<f64> = grid.iter().map(|t| (lam * t).exp()).collect();
        let kappa = 2.0 * v[n - 1];
        Profile::new(grid, v, c, h, kappa, lam, 0, 1.0).unwrap()
    }

    #[test]
    fn eigenrelation_for_linear_reaction() {
        let (c, h, p) = (2.5, 0.4, 2.0);
        let r = real_roots(&CharParams::new(c, h, p).unwrap()).unwrap();
        let xi = xi_roots(c);
        for lam in [r.lambda2, r.lambda1] {
            let prof = exp_profile(lam, c, h, -40.0, 0.0, 8001);
            let g = move |u: f64| p * u;
            let out = apply_a_values(&prof, &g, c, h).unwrap();
            let cut = 40.0 / (xi.xi2 - lam);
            let mut worst: f64 = 0.0;
            for (k, &t) in prof.grid().iter().enumerate() {
                if t < -cut {
                    worst = worst.max((out[k] / prof.values()[k] - 1.0).abs());
                }
            }
            assert!(worst < 1e-10, "lambda {lam}: {worst}");
        }
    }

    #[test]
    fn eigenfactor_off_root() {
        let (c, h, p, lam) = (2.0, 0.3, 1.7, 0.8);
        let prof = exp_profile(lam, c, h, -40.0, 0.0, 4001);
        let g = move |u: f64| p * u;
        let out = apply_a_values(&prof, &g, c, h).unwrap();
        let factor = linear_eigenfactor(lam, c, h, p);
        let k = 1000;
        assert!((out[k] / prof.values()[k] - factor).abs() < 1e-10);
    }

    #[test]
    fn kernel_mass_is_one() {
        let grid = uniform_grid(-30.0, 30.0, 3001);
        let c = 1.3;
        let prof = Profile::bound(grid, vec![1.0; 3001], c, 0.0, 1.0, 0.5, 0, 1.0).unwrap();
        let out = apply_a_values(&prof, &|u: f64| u, c, 0.0).unwrap();
        let xi = xi_roots(c);
        for (k, &t) in prof.grid().iter().enumerate() {
            if (-xi.xi1 * (t + 30.0)) > 30.0 {
                assert!((out[k] - 1.0).abs() < 1e-10, "t = {t}: {}", out[k]);
            }
        }
        let g = NonlinearitySpec::rational_kpp(2.0, 1.0).unwrap();
        let out = apply_a_values(&prof, &g, c, 0.0).unwrap();
        assert!((out[3000] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_forcing_gives_constant() {
        let grid = uniform_grid(-5.0, 5.0, 101);
        let psi = impulsive_solve(&|_| -1.0, &[], 0.7, &grid).unwrap();
        for v in psi {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_value_jump() {
        let c = 1.5;
        let xi = xi_roots(c);
        let jumps = [JumpData { t: 0.0, alpha: 1.0, beta: 0.0 }];
        let grid = uniform_grid(-4.0, 4.0, 81);
        let psi = impulsive_solve(&|_| 0.0, &jumps, c, &grid).unwrap();
        for (&t, &v) in grid.iter().zip(&psi) {
            let exact = if t < 0.0 {
                (xi.xi2 * t).exp() * xi.xi1 / (xi.xi2 - xi.xi1)
            } else {
                (xi.xi1 * t).exp() * xi.xi2 / (xi.xi2 - xi.xi1)
            };
            assert!((v - exact).abs() < 1e-14);
        }
        let jump = psi[40] - jump_terms_left(0.0, &jumps, c);
        assert!((jump - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unordered_jumps_rejected() {
        let jumps = [JumpData { t: 1.0, alpha: 1.0, beta: 0.0 }, JumpData { t: 0.0, alpha: 1.0, beta: 0.0 }];
        assert!(impulsive_solve(&|_| 0.0, &jumps, 1.0, &[0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn operator_preserves_order(seed in 0u64..1000, shift in 0.0..2.0f64) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = NonlinearitySpec::rational_kpp(2.0, 1.0).unwrap();
            let grid = uniform_grid(-20.0, 20.0, 801);
            let base: Vec<f64> = grid.iter().map(|t| 1.0 / (1.0 + (-t).exp())).collect();
            let a = Profile::new(grid.clone(), base.clone(), 2.5, 0.5, 1.0, 1.0, 0, 1.0).unwrap();
            let mut bump = 0.0;
            let hi: Vec<f64> = grid
                .iter()
                .map(|t| {
                    bump += rng.gen_range(0.0..1e-3);
                    (1.0 / (1.0 + (-(t + shift)).exp()) + bump * 1e-3).min(1.0)
                })
                .collect();
            let hi: Vec<f64> = hi.iter().zip(&base).map(|(x, y)| x.max(*y)).collect();
            let b = Profile::bound(grid, hi, 2.5, 0.5, 1.0, 1.0, 0, 1.0).unwrap();
            let oa = apply_a_values(&a, &g, 2.5, 0.5).unwrap();
            let ob = apply_a_values(&b, &g, 2.5, 0.5).unwrap();
            for (x, y) in oa.iter().zip(&ob) {
                prop_assert!(x <= &(y + 1e-15));
            }
        }

        #[test]
        fn linear_in_the_reaction(a in 0.1..3.0f64, b in 0.1..3.0f64) {
            let grid = uniform_grid(-20.0, 20.0, 801);
            let v: Vec<f64> = grid.iter().map(|t| 1.0 / (1.0 + (-t).exp())).collect();
            let p = Profile::new(grid, v, 2.0, 0.2, 1.0, 1.0, 0, 1.0).unwrap();
            let sum = apply_a_values(&p, &|u: f64| (a + b) * u, 2.0, 0.2).unwrap();
            let pa = apply_a_values(&p, &|u: f64| a * u, 2.0, 0.2).unwrap();
            let pb = apply_a_values(&p, &|u: f64| b * u, 2.0, 0.2).unwrap();
            for k in 0..sum.len() {
                prop_assert!((sum[k] - pa[k] - pb[k]).abs() <= 1e-12 * sum[k].abs().max(1e-300));
            }
        }
    }
}
