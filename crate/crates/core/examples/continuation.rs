//! Continuation from a pushed-candidate front to a slightly faster speed:
//! min{κ, σφ + b²e^{λ₂′t} + be^{λ₂t}} is an upper solution once σ − 1 and b
//! are small enough, and the squeeze from it converges.

use wavefront::nonlinearity::NonlinearitySpec;
use wavefront::solver::{continuation_upper_auto, solve_front, Numerics};

fn main() -> wavefront::Result<()> {
    let g = NonlinearitySpec::pushed_candidate();
    let (c0, h) = (1.212, 0.5);
    let num = Numerics::default();
    let base = solve_front(&g, c0, h, &num, None)?;
    println!("base front at c0 = {c0}: {:?}, {} iterations, residual {:.2e}", base.strategy, base.report.iterations, base.report.final_residual);

    let c1 = c0 + 0.01;
    let up = continuation_upper_auto(&base.profile, &g, c1, &num)?;
    println!(
        "upper solution at c' = {c1}: sigma = {}, b = {}, corner at {:.4}, max E+ = {:.2e} ({} attempts)",
        up.sigma, up.b, up.corner, up.max_defect, up.attempts
    );

    let next = solve_front(&g, c1, h, &num, Some(&base.profile))?;
    let fit = next.decay.expect("tail resolved");
    println!(
        "front at c' = {c1}: {:?}, converged {}, residual {:.2e}, decay {:.6}",
        next.strategy, next.report.converged, next.report.final_residual, fit.rate
    );
    Ok(())
}
