//! End-to-end acceptance checks. Each test writes one PASS/FAIL line to
//! stderr (bypassing the test harness capture) before asserting.

use std::io::Write;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavefront::charspec::{double_root_speed, real_roots, roots_at, speed_bounds, xi_roots, CharParams};
use wavefront::dns::{front_position, measure_speed, simulate, Init, SimConfig};
use wavefront::greens::{apply_a_values, impulsive_solve, linear_eigenfactor, JumpData};
use wavefront::lattice::{gamma_sharp, lattice_chi, lattice_double_root_speed, lattice_lambda, shift_match, Kernel, LatticeModel};
use wavefront::nonlinearity::NonlinearitySpec;
use wavefront::profile::{uniform_grid, Profile};
use wavefront::solver::{
    continuation_upper_auto, front_exists, iterate, kpp_bounds, lower_front_on, solve_front, BoundPair, Numerics,
};
use wavefront::speedscan::{estimate_cstar, Classification, SpeedScanReport};

/// Minimal speed of the shipped spline spec at `h = 0.5`, from the first
/// verified scan.
const PUSHED_C_STAR: f64 = 1.0119490497138148;
const PUSHED_H: f64 = 0.5;

fn report(n: u32, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n} ({name}): {verdict}  {detail}");
}

fn kpp() -> NonlinearitySpec {
    NonlinearitySpec::rational_kpp(2.0, 1.0).unwrap()
}

fn kpp_scan(h: f64) -> &'static SpeedScanReport {
    static H0: OnceLock<SpeedScanReport> = OnceLock::new();
    static H1: OnceLock<SpeedScanReport> = OnceLock::new();
    let cell = if h == 0.0 { &H0 } else { &H1 };
    cell.get_or_init(|| estimate_cstar(&kpp(), h, 1e-3).unwrap())
}

#[test]
fn criterion_1_characteristic_closed_forms() {
    let mut worst_speed: f64 = 0.0;
    let mut worst_root: f64 = 0.0;
    for p in [1.5, 2.0, 5.0] {
        let (c, lam) = double_root_speed(0.0, p).unwrap();
        worst_speed = worst_speed.max((c - 2.0 * (p - 1.0f64).sqrt()).abs());
        worst_root = worst_root.max((lam - (p - 1.0f64).sqrt()).abs());
    }
    let mut worst_vieta: f64 = 0.0;
    for c in [0.1, 0.5, 1.0, 2.0, 3.7, 10.0] {
        let xi = xi_roots(c);
        worst_vieta = worst_vieta.max((xi.xi1 + xi.xi2 - c).abs()).max((xi.xi1 * xi.xi2 + 1.0).abs());
    }
    let ok = worst_speed <= 1e-9 && worst_root <= 1e-9 && worst_vieta <= 1e-14;
    report(1, "characteristic closed forms", ok, &format!("speed {worst_speed:.1e}, root {worst_root:.1e}, vieta {worst_vieta:.1e}"));
    assert!(ok);
}

#[test]
fn criterion_2_greens_eigenrelation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let p = rng.gen_range(1.2..5.0);
        let h = rng.gen_range(0.0..1.5);
        let c = double_root_speed(h, p).unwrap().0 + rng.gen_range(0.05..2.0);
        let lam = real_roots(&CharParams::new(c, h, p).unwrap()).unwrap().lambda2;
        let (a, b) = (-60.0 / lam.max(1.0), 0.0);
        let grid = uniform_grid(a, b, 12001);
        let v: Vec<f64> = grid.iter().map(|t| (lam * t).exp()).collect();
        let kappa = 2.0 * v[v.len() - 1];
        let prof = Profile::new(grid.clone(), v.clone(), c, h, kappa, lam, 0, 1.0).unwrap();
        let out = apply_a_values(&prof, &move |u: f64| p * u, c, h).unwrap();
        // p e^{-λch} / (1 + cλ - λ²), which is 1 at a root
        let factor = p * (-lam * c * h).exp() / (1.0 + c * lam - lam * lam);
        assert!((factor - linear_eigenfactor(lam, c, h, p)).abs() < 1e-12);
        // the interior stays clear of the right truncation
        let cut = b - 40.0 / (xi_roots(c).xi2 - lam);
        for (k, &t) in grid.iter().enumerate() {
            if t < cut {
                worst = worst.max((out[k] / v[k] - factor).abs());
            }
        }
    }
    let ok = worst <= 1e-8;
    report(2, "Green's eigenrelation", ok, &format!("sup relative error {worst:.1e} over 10 random (c, h, p)"));
    assert!(ok);
}

#[test]
fn criterion_3_impulsive_formula() {
    let grid = uniform_grid(-5.0, 5.0, 1001);
    let flat = impulsive_solve(&|_| -1.0, &[], 0.9, &grid).unwrap();
    let flat_err = flat.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);

    let c = 1.3;
    let d = 1e-3;
    let grid = uniform_grid(-30.0, 30.0, 60001);
    let jumps = [JumpData { t: -1.0, alpha: 0.5, beta: -0.2 }, JumpData { t: 1.5, alpha: -0.3, beta: 0.7 }];
    let f = |t: f64| -0.5 * (1.0 + t.tanh());
    let psi = impulsive_solve(&f, &jumps, c, &grid).unwrap();
    let node = |t: f64| ((t + 30.0) / d).round() as usize;
    let mut jump_err: f64 = 0.0;
    for j in &jumps {
        let k = node(j.t);
        // left limits by cubic extrapolation, right limit at the node;
        // third-order one-sided derivatives
        let left = 4.0 * psi[k - 1] - 6.0 * psi[k - 2] + 4.0 * psi[k - 3] - psi[k - 4];
        let dleft = (11.0 * left - 18.0 * psi[k - 1] + 9.0 * psi[k - 2] - 2.0 * psi[k - 3]) / (6.0 * d);
        let dright = (-11.0 * psi[k] + 18.0 * psi[k + 1] - 9.0 * psi[k + 2] + 2.0 * psi[k + 3]) / (6.0 * d);
        jump_err = jump_err.max((psi[k] - left - j.alpha).abs()).max((dright - dleft - j.beta).abs());
    }
    let mut ode_err: f64 = 0.0;
    for k in node(-20.0)..node(20.0) {
        let t = grid[k];
        if jumps.iter().any(|j| (t - j.t).abs() < 3.5 * d) {
            continue;
        }
        let d2 = (-psi[k + 2] + 16.0 * psi[k + 1] - 30.0 * psi[k] + 16.0 * psi[k - 1] - psi[k - 2]) / (12.0 * d * d);
        let d1 = (-psi[k + 2] + 8.0 * psi[k + 1] - 8.0 * psi[k - 1] + psi[k - 2]) / (12.0 * d);
        ode_err = ode_err.max((d2 - c * d1 - psi[k] - f(t)).abs());
    }
    let ok = flat_err <= 1e-10 && jump_err <= 1e-6 && ode_err <= 1e-6;
    report(3, "impulsive formula", ok, &format!("constant {flat_err:.1e}, jumps {jump_err:.1e}, ode residual {ode_err:.1e}"));
    assert!(ok);
}

#[test]
fn criterion_4_monotone_squeeze() {
    let g = kpp();
    let num = Numerics::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for h in [0.0, 0.5, 1.0] {
        let c = speed_bounds(&g, h).unwrap().c_sharp + 0.3;
        let lam = roots_at(&g, c, h).unwrap().lambda2;
        // an ordering violation surfaces as an error
        let r = iterate(&kpp_bounds(c, h, &g, &num).unwrap(), &g, c, h, &num);
        match r {
            Ok(r) => {
                let rate = r.decay.map_or(f64::NAN, |d| d.rate);
                let pass = r.report.converged
                    && r.report.iterations <= 500
                    && r.report.final_residual <= 1e-6
                    && (rate - lam).abs() <= 0.02 * lam;
                ok &= pass;
                detail.push(format!(
                    "h={h}: {} it, residual {:.1e}, rate {rate:.6} vs {lam:.6}",
                    r.report.iterations, r.report.final_residual
                ));
            }
            Err(e) => {
                ok = false;
                detail.push(format!("h={h}: {e}"));
            }
        }
    }
    report(4, "monotone squeeze", ok, &detail.join("; "));
    assert!(ok);
}

#[test]
fn criterion_5_pulled_minimal_speed() {
    let mut ok = true;
    let mut detail = Vec::new();
    for h in [0.0, 1.0] {
        let r = kpp_scan(h);
        let c_sharp = r.evidence.c_sharp;
        let dns = r.dns_speed.map_or(f64::NAN, |s| s.speed);
        let pass = (r.c_star - c_sharp).abs() <= 2e-3
            && r.classification == Classification::Pulled
            && (dns - r.c_star).abs() <= 0.05 * r.c_star;
        ok &= pass;
        detail.push(format!("h={h}: c_star {:.6} vs c_# {c_sharp:.6}, {:?}, dns {dns:.4}", r.c_star, r.classification));
    }
    report(5, "pulled minimal speed", ok, &detail.join("; "));
    assert!(ok);
}

#[test]
fn criterion_6_pushed_regime() {
    let r = estimate_cstar(&NonlinearitySpec::pushed_candidate(), PUSHED_H, 1e-3).unwrap();
    let ev = &r.evidence;
    let rate = ev.decay_at_cstar.map_or(f64::NAN, |d| d.rate);
    let (l1, l2) = (ev.lambda1_at_cstar, ev.lambda2_at_cstar);
    let ok = r.c_star > ev.c_sharp + 0.05
        && r.classification == Classification::Pushed
        && (rate - l1).abs() <= 0.05 * l1
        && (rate - l2).abs() > 0.20 * l2
        && (r.c_star - PUSHED_C_STAR).abs() <= r.tol;
    report(
        6,
        "pushed regime",
        ok,
        &format!(
            "c_star {:.6} (c_# {:.6}), {:?}, rate {rate:.5} vs lambda1 {l1:.5}, lambda2 {l2:.5}",
            r.c_star, ev.c_sharp, r.classification
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_uniqueness_up_to_shift() {
    let (g, h) = (kpp(), 0.5);
    let num = Numerics::default();
    let c_star = speed_bounds(&g, h).unwrap().c_sharp;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for _ in 0..5 {
        let c = c_star + rng.gen_range(0.2..0.8);
        let a = solve_front(&g, c, h, &num, None).unwrap();
        // independent pair: continuation upper solution over a slower front
        let base = solve_front(&g, c - 0.02, h, &num, None).unwrap();
        let b = continuation_upper_auto(&base.profile, &g, c, &num).and_then(|up| {
            let lower = lower_front_on(c, h, &g, up.profile.grid(), &num)?;
            iterate(&BoundPair { lower, upper: up.profile }, &g, c, h, &num)
        });
        match b {
            Ok(b) => {
                let m = shift_match(&a.profile.normalized().unwrap(), &b.profile.normalized().unwrap()).unwrap();
                worst = worst.max(m.sup_error);
            }
            Err(e) => failures.push(format!("c={c:.4}: {e}")),
        }
    }
    let ok = failures.is_empty() && worst <= 1e-5;
    report(7, "uniqueness up to shift", ok, &format!("worst sup error {worst:.1e} over 5 speeds {}", failures.join("; ")));
    assert!(ok);
}

#[test]
fn criterion_8_lattice_characteristic() {
    let g = kpp();
    let p = g.gp0();
    let geo = Kernel::geometric(0.3).unwrap();
    let model = LatticeModel::new(1.0, geo.clone(), 0.5, g.clone(), 1.7).unwrap();
    let at_zero = lattice_chi(0.0, &model).unwrap() == 1.0 - p;
    let mut gamma_err: f64 = 0.0;
    for q in [0.1, 0.3, 0.5, 0.9] {
        let gs = gamma_sharp(&Kernel::geometric(q).unwrap());
        gamma_err = gamma_err.max((gs.value - (1.0 / q).ln()).abs());
    }
    let mut reduction_err: f64 = 0.0;
    for c in [0.5, 1.0, 3.0] {
        let m = LatticeModel::new(0.0, Kernel::delta(), 0.0, g.clone(), c).unwrap();
        let lam = lattice_lambda(&m).unwrap().lambda.unwrap();
        reduction_err = reduction_err.max((lam - (p - 1.0) / c).abs());
    }

    // decay of a simulated lattice front against the smallest zero at its
    // measured speed; the kernel is lopsided so its orientation matters
    let kernel = Kernel::finite(vec![(-1, 0.2), (0, 0.5), (1, 0.3)]).unwrap();
    let lm = LatticeModel::new(1.0, kernel.clone(), 0.5, g.clone(), 1.0).unwrap();
    let (_, lam_min) = lattice_double_root_speed(&lm).unwrap();
    let lam0 = 0.6 * lam_min;
    let nodes = 801;
    let init: Vec<f64> = (0..nodes).map(|n| (-lam0 * (n as f64 - 60.0)).exp().min(1.0)).collect();
    let cfg = SimConfig::lattice(g.clone(), 0.5, 1.0, kernel, 0.05, (0.0, 800.0), 120.0, Init::Values(init)).record_every(20);
    let traj = simulate(&cfg).unwrap();
    let speed = measure_speed(&traj, 0.5).unwrap().speed;
    let front = front_position(&traj.x, traj.last(), 0.5).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = traj
        .x
        .iter()
        .zip(traj.last())
        .filter(|(&x, &u)| x > front && (1e-9..=1e-5).contains(&u))
        .map(|(&x, &u)| (x, u.ln()))
        .unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let decay = -slope;
    let predicted = lattice_lambda(&lm.at_speed(speed)).unwrap().lambda.unwrap_or(f64::NAN);
    let decay_ok = (decay - predicted).abs() <= 0.05 * predicted;

    let ok = at_zero && gamma_err <= 1e-10 && reduction_err <= 1e-10 && decay_ok;
    report(
        8,
        "lattice characteristic",
        ok,
        &format!(
            "chi(0) exact {at_zero}, gamma {gamma_err:.1e}, reduction {reduction_err:.1e}, dns decay {decay:.4} vs lambda {predicted:.4} at c = {speed:.4}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_9_non_existence_side() {
    let g = kpp();
    let num = Numerics::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for h in [0.0, 1.0] {
        let c_sharp = speed_bounds(&g, h).unwrap().c_sharp;
        let c = c_sharp - 0.05;
        let r = solve_front(&g, c, h, &num, None).unwrap();
        let probe = front_exists(&g, c, h, &num).unwrap();
        let scan = kpp_scan(h);
        let lowest_ok = scan.probes.iter().filter(|p| p.exists).map(|p| p.c).fold(f64::INFINITY, f64::min);
        let pass = !r.report.converged && !probe.exists && lowest_ok >= c_sharp - 2e-3 && scan.bracket.0 >= c_sharp - 2e-3;
        ok &= pass;
        detail.push(format!(
            "h={h}: converged {}, exists {}, lowest accepted speed {lowest_ok:.6} (c_# {c_sharp:.6})",
            r.report.converged, probe.exists
        ));
    }
    report(9, "non-existence side", ok, &detail.join("; "));
    assert!(ok);
}
