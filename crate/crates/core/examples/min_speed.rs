//! Minimal speed of the delayed KPP equation by bisection on front
//! existence, cross-checked against a direct simulation.

use wavefront::nonlinearity::NonlinearitySpec;
use wavefront::speedscan::estimate_cstar;

fn main() -> wavefront::Result<()> {
    let g = NonlinearitySpec::rational_kpp(2.0, 1.0)?;
    for h in [0.0, 1.0] {
        let r = estimate_cstar(&g, h, 1e-3)?;
        let dns = r.dns_speed.expect("simulation ran");
        println!(
            "h = {h}: c_* in [{:.6}, {:.6}], c_# = {:.6}, spreading speed {:.4} +- {:.1e}, {:?}",
            r.bracket.0, r.bracket.1, r.evidence.c_sharp, dns.speed, dns.stderr, r.classification
        );
        for d in &r.evidence.decay_above {
            println!("    c = {:.4}: decay {:.6} vs lambda2 {:.6}", d.c, d.fit.map_or(f64::NAN, |f| f.rate), d.lambda2);
        }
    }
    Ok(())
}
