//! Hypothesis checks on the two shipped reaction functions.

use wavefront::nonlinearity::NonlinearitySpec;

fn main() -> wavefront::Result<()> {
    let specs = [
        ("rational KPP, p = 2", NonlinearitySpec::rational_kpp(2.0, 1.0)?),
        ("pushed candidate spline", NonlinearitySpec::pushed_candidate()),
    ];
    for (name, g) in &specs {
        let report = g.validate_h(4000)?;
        println!("{name}: g'(0) = {:.4}, g'(kappa) = {:.4}, g'_+ = {:.4}", g.gp0(), g.gp_kappa(), g.gp_plus());
        println!("  sub-tangential: {}", g.is_subtangential());
        for check in &report.checks {
            println!("  [{}] {} (margin {:.3e})", if check.passed { "ok" } else { "FAIL" }, check.name, check.margin);
        }
    }
    Ok(())
}
