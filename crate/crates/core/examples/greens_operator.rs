//! The Green's kernel operator on an exponential, and the impulsive formula.

use wavefront::charspec::{roots_at, xi_roots};
use wavefront::greens::{apply_a_values, impulsive_solve, JumpData};
use wavefront::nonlinearity::NonlinearitySpec;
use wavefront::profile::{uniform_grid, Profile};

fn main() -> wavefront::Result<()> {
    let (c, h, p) = (2.5, 0.4, 2.0);
    let lam = roots_at(&NonlinearitySpec::rational_kpp(p, 1.0)?, c, h)?.lambda2;
    let grid = uniform_grid(-40.0, 0.0, 8001);
    let v: Vec<f64> = grid.iter().map(|t| (lam * t).exp()).collect();
    let phi = Profile::new(grid.clone(), v.clone(), c, h, 2.0, lam, 0, 1.0)?;
    // the linear reaction p·u makes e^{λ₂t} a fixed point
    let out = apply_a_values(&phi, &|u: f64| p * u, c, h)?;
    let cut = -40.0 / (xi_roots(c).xi2 - lam);
    let err = grid
        .iter()
        .zip(out.iter().zip(&v))
        .filter(|(t, _)| **t < cut)
        .map(|(_, (a, b))| (a / b - 1.0).abs())
        .fold(0.0, f64::max);
    println!("A e^(lambda2 t) vs e^(lambda2 t): sup relative error {err:.2e}");

    let grid = uniform_grid(-4.0, 4.0, 9);
    let jumps = [JumpData { t: 0.0, alpha: 1.0, beta: 0.0 }];
    let psi = impulsive_solve(&|_| 0.0, &jumps, 1.5, &grid)?;
    println!("unit value jump at 0, c = 1.5:");
    for (t, v) in grid.iter().zip(psi) {
        println!("  psi({t:>4}) = {v:.6}");
    }
    Ok(())
}
