//! Direct simulation of step data and the measured spreading speed.

use wavefront::charspec::double_root_speed;
use wavefront::dns::{measure_speed, simulate, Init, SimConfig};
use wavefront::nonlinearity::NonlinearitySpec;

fn main() -> wavefront::Result<()> {
    let g = NonlinearitySpec::rational_kpp(2.0, 1.0)?;
    for h in [0.0, 0.5, 1.0] {
        let dt = 0.01;
        let cfg = SimConfig::continuum(g.clone(), h, 0.2, dt, (0.0, 400.0), 150.0, Init::Step { at: 50.0 }).record_every(100);
        let traj = simulate(&cfg)?;
        let est = measure_speed(&traj, 0.5)?;
        let (c_sharp, _) = double_root_speed(h, 2.0)?;
        println!("h = {h}: measured {:.4} +- {:.1e}, c_# = {c_sharp:.4}", est.speed, est.stderr);
    }
    Ok(())
}
