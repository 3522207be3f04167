//! Critical speed c_# and the roots of the characteristic function.
//!
//! c_# falls as the delay grows: the delayed term weakens the linear
//! growth ahead of the front.

use wavefront::charspec::{double_root_speed, real_roots, CharParams};

fn main() -> wavefront::Result<()> {
    let p = 2.0;
    println!("{:>5} {:>10} {:>10}", "h", "c_#", "lambda_#");
    for h in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
        let (c, lam) = double_root_speed(h, p)?;
        println!("{h:>5} {c:>10.6} {lam:>10.6}");
    }

    let h = 0.5;
    let (c_sharp, _) = double_root_speed(h, p)?;
    println!("\nroots at h = {h}:");
    for dc in [0.0, 0.1, 0.5, 1.0] {
        let c = c_sharp + dc;
        if let Some(r) = real_roots(&CharParams::new(c, h, p)?) {
            println!("  c = {c:.4}: lambda2 = {:.6}, lambda1 = {:.6}, degenerate = {}", r.lambda2, r.lambda1, r.degenerate);
        }
    }
    // below c_# there is nothing to find
    assert!(real_roots(&CharParams::new(c_sharp - 0.1, h, p)?).is_none());
    Ok(())
}
