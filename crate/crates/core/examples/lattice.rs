//! Lattice characteristic data for a nonlocal kernel, and a simulated
//! lattice front whose leading edge follows the predicted decay.

use wavefront::dns::{front_position, measure_speed, simulate, Init, SimConfig};
use wavefront::lattice::{gamma_sharp, lattice_double_root_speed, lattice_lambda, Kernel, LatticeModel};
use wavefront::nonlinearity::NonlinearitySpec;

fn main() -> wavefront::Result<()> {
    let g = NonlinearitySpec::rational_kpp(2.0, 1.0)?;
    let kernel = Kernel::geometric(0.3)?;
    println!("gamma_sharp = {:?}", gamma_sharp(&kernel));
    let model = LatticeModel::new(1.0, kernel.clone(), 0.5, g.clone(), 1.0)?;
    let (c_min, lam_min) = lattice_double_root_speed(&model)?;
    println!("double root at c = {c_min:.6}, lambda = {lam_min:.6}");
    for c in [c_min + 0.1, c_min + 0.5, c_min + 1.0] {
        let r = lattice_lambda(&model.at_speed(c))?;
        println!("  c = {c:.4}: lambda = {:?}, multiplicity index {:?}", r.lambda, r.multiplicity_j);
    }

    // data with a slow tail e^{-λ₀n} select the speed where λ₀ is a zero
    let lam0 = 0.6 * lam_min;
    let init: Vec<f64> = (0..=800).map(|n| (-lam0 * (n as f64 - 60.0)).exp().min(1.0)).collect();
    let cfg = SimConfig::lattice(g, 0.5, 1.0, kernel, 0.05, (0.0, 800.0), 120.0, Init::Values(init)).record_every(20);
    let traj = simulate(&cfg)?;
    let speed = measure_speed(&traj, 0.5)?.speed;
    let lead = front_position(&traj.x, traj.last(), 1e-6).unwrap_or(f64::NAN);
    let r = lattice_lambda(&model.at_speed(speed))?;
    println!("tail rate {lam0:.4}: measured speed {speed:.4}, predicted lambda {:?}, leading edge at n = {lead:.1}", r.lambda);
    Ok(())
}
