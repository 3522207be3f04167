//! Two fronts at the same speed built from different upper solutions agree
//! up to translation.

use wavefront::charspec::speed_bounds;
use wavefront::lattice::shift_match;
use wavefront::nonlinearity::NonlinearitySpec;
use wavefront::solver::{continuation_upper_auto, iterate, lower_front_on, solve_front, BoundPair, Numerics};

fn main() -> wavefront::Result<()> {
    let g = NonlinearitySpec::rational_kpp(2.0, 1.0)?;
    let h = 0.5;
    let num = Numerics::default();
    let c = speed_bounds(&g, h)?.c_sharp + 0.4;

    let a = solve_front(&g, c, h, &num, None)?;
    let slower = solve_front(&g, c - 0.02, h, &num, None)?;
    let up = continuation_upper_auto(&slower.profile, &g, c, &num)?;
    let lower = lower_front_on(c, h, &g, up.profile.grid(), &num)?;
    let b = iterate(&BoundPair { lower, upper: up.profile }, &g, c, h, &num)?;

    let m = shift_match(&a.profile, &b.profile)?;
    println!("c = {c:.4}: shift {:.6}, sup difference after shifting {:.2e}", m.s0, m.sup_error);
    Ok(())
}
