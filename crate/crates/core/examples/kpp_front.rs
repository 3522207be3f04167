//! A front of the delayed KPP equation from the monotone squeeze between
//! min{κ, e^{λ₂t}} and the minorant front.

use wavefront::charspec::{roots_at, speed_bounds};
use wavefront::nonlinearity::NonlinearitySpec;
use wavefront::solver::{solve_front, Numerics};

fn main() -> wavefront::Result<()> {
    let g = NonlinearitySpec::rational_kpp(2.0, 1.0)?;
    let h = 1.0;
    let c = speed_bounds(&g, h)?.c_sharp + 0.3;
    let front = solve_front(&g, c, h, &Numerics::default(), None)?;
    let r = &front.report;
    println!("c = {c:.6}, strategy {:?}", front.strategy);
    println!("converged {} after {} iterations, residual {:.2e}, bracket gap {:.2e}", r.converged, r.iterations, r.final_residual, r.bracket_gap);
    let fit = front.decay.expect("left tail resolved");
    println!("left decay {:.6} (lambda2 = {:.6}, r^2 = {:.8})", fit.rate, roots_at(&g, c, h)?.lambda2, fit.r_squared);

    let phi = front.profile.normalized()?;
    for t in [-20.0, -10.0, -5.0, 0.0, 5.0, 10.0] {
        println!("  phi({t:>5}) = {:.6e}", phi.eval(t));
    }
    let out = std::env::temp_dir().join("kpp_front.csv");
    phi.write_csv(&out)?;
    println!("profile written to {}", out.display());
    Ok(())
}
