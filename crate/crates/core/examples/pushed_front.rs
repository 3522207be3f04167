//! Pushed fronts: the spline reaction exceeds g'(0)u on an interior
//! interval, so its minimal speed lies above c_# and the critical front
//! decays at the fast rate λ₁ rather than λ₂. Takes about a minute.

use wavefront::nonlinearity::NonlinearitySpec;
use wavefront::speedscan::estimate_cstar;

fn main() -> wavefront::Result<()> {
    let g = NonlinearitySpec::pushed_candidate();
    let h = 0.5;
    let r = estimate_cstar(&g, h, 1e-3)?;
    let ev = &r.evidence;
    println!("c_# = {:.6}, c^*(g'_+) = {:.6}", ev.c_sharp, ev.c_star_upper);
    println!("c_* = {:.6} (bracket {:.6} .. {:.6})", r.c_star, r.bracket.0, r.bracket.1);
    if let Some(s) = r.dns_speed {
        println!("spreading speed {:.5}", s.speed);
    }
    let rate = ev.decay_at_cstar.map_or(f64::NAN, |f| f.rate);
    println!("decay at c_*: {rate:.5}; lambda1 = {:.5}, lambda2 = {:.5}", ev.lambda1_at_cstar, ev.lambda2_at_cstar);
    println!("classification: {:?}", r.classification);
    for p in &r.probes {
        println!("  probe c = {:.5}: {:?} drift {:?}", p.c, p.verdict, p.drift);
    }
    Ok(())
}
