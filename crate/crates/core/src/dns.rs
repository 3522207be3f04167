//! Direct simulation of the time-dependent equations in one space dimension.
//!
//! The frame is mirrored with respect to the profile variable: `κ` sits on
//! the left, `0` on the right and fronts move towards `+x`. A profile `φ` at
//! speed `c` corresponds to `u(t, x) = φ(ct - x)`.
//!
//! Time stepping is explicit Euler. The delayed slice is read from a ring
//! buffer holding the last `h/dt + 1` states, so `dt` must divide `h`.

use std::collections::VecDeque;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Kernel;
use crate::nonlinearity::{NonlinearitySpec, SpecFile};
use crate::profile::{line_fit, Profile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `u_t = u_xx - u + g(u(t - h, x))`, centred differences in `x`.
    ContinuumPde,
    /// `u_n' = D[u_{n+1} + u_{n-1} - 2u_n] - u_n + Σ β(n-k) g(u_k(t-h))`.
    Lattice,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Init {
    /// `κ` left of `at`, `0` from `at` on.
    Step { at: f64 },
    /// `min{κ, height·exp(-((x - center)/width)²)}`.
    SeedBump { center: f64, width: f64, height: f64 },
    Constant { value: f64 },
    /// A profile from CSV placed with its `κ/2` crossing at `at`.
    ProfileImport { path: PathBuf, at: f64 },
    /// A profile placed with its `κ/2` crossing at `at`; the history on
    /// `[-h, 0]` is the travelling wave itself.
    #[serde(skip)]
    Front { profile: Box<Profile>, at: f64 },
    /// Node values; constant history.
    #[serde(skip)]
    Values(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub model: Model,
    pub spec: NonlinearitySpec,
    pub h: f64,
    /// Lattice coupling `D`.
    pub d: f64,
    /// Lattice interaction kernel; `δ₀` gives the local model.
    pub kernel: Kernel,
    /// Node spacing; fixed to 1 for the lattice.
    pub dx: f64,
    pub dt: f64,
    pub domain: (f64, f64),
    pub t_final: f64,
    pub init: Init,
    /// Store every `record_every`-th state.
    pub record_every: usize,
}

impl SimConfig {
    pub fn continuum(spec: NonlinearitySpec, h: f64, dx: f64, dt: f64, domain: (f64, f64), t_final: f64, init: Init) -> Self {
        Self {
            model: Model::ContinuumPde,
            spec,
            h,
            d: 1.0,
            kernel: Kernel::delta(),
            dx,
            dt,
            domain,
            t_final,
            init,
            record_every: 1,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn lattice(
        spec: NonlinearitySpec,
        h: f64,
        d: f64,
        kernel: Kernel,
        dt: f64,
        domain: (f64, f64),
        t_final: f64,
        init: Init,
    ) -> Self {
        Self { model: Model::Lattice, spec, h, d, kernel, dx: 1.0, dt, domain, t_final, init, record_every: 1 }
    }

    pub fn record_every(mut self, k: usize) -> Self {
        self.record_every = k.max(1);
        self
    }

    /// Number of steps `h/dt` spanned by the delay.
    pub fn delay_steps(&self) -> Result<usize> {
        let r = self.h / self.dt;
        let m = r.round();
        if (r - m).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::config(format!("dt = {} does not divide h = {}", self.dt, self.h)));
        }
        if m > 1e4 {
            return Err(Error::config(format!("h/dt = {m} exceeds 1e4 stored slices")));
        }
        Ok(m as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(self.dt > 0.0 && self.t_final > 0.0 && self.h >= 0.0 && hi > lo) {
            return Err(Error::config("need dt > 0, t_final > 0, h >= 0 and a nonempty domain"));
        }
        self.delay_steps()?;
        match self.model {
            Model::ContinuumPde => {
                if !(self.dx > 0.0) {
                    return Err(Error::config("dx must be positive"));
                }
                if self.dt > 0.4 * self.dx * self.dx * (1.0 + 1e-12) {
                    return Err(Error::config(format!(
                        "stability: dt = {} exceeds 0.4 dx^2 = {}",
                        self.dt,
                        0.4 * self.dx * self.dx
                    )));
                }
            }
            Model::Lattice => {
                if !(self.d >= 0.0) {
                    return Err(Error::config("lattice coupling D must be nonnegative"));
                }
                if self.dt * (2.0 * self.d + 1.0) > 1.0 {
                    return Err(Error::config(format!(
                        "stability: dt (2D + 1) = {} exceeds 1",
                        self.dt * (2.0 * self.d + 1.0)
                    )));
                }
                self.kernel.validate()?;
            }
        }
        if self.nodes().len() < 3 {
            return Err(Error::config("domain holds fewer than 3 nodes"));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<f64> {
        let (lo, hi) = self.domain;
        let step = if self.model == Model::Lattice { 1.0 } else { self.dx };
        let lo = if self.model == Model::Lattice { lo.ceil() } else { lo };
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| lo + k as f64 * step).collect()
    }
}

/// JSON form of [`SimConfig`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimFile {
    pub model: Model,
    pub spec: SpecFile,
    pub h: f64,
    #[serde(default = "one")]
    pub d: f64,
    #[serde(default)]
    pub kernel: Option<Kernel>,
    #[serde(default = "one")]
    pub dx: f64,
    pub dt: f64,
    pub domain: (f64, f64),
    pub t_final: f64,
    pub init: Init,
    #[serde(default = "one_usize")]
    pub record_every: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl SimFile {
    pub fn into_config(self) -> Result<SimConfig> {
        let spec = NonlinearitySpec::from_file(self.spec)?;
        let cfg = SimConfig {
            model: self.model,
            spec,
            h: self.h,
            d: self.d,
            kernel: self.kernel.unwrap_or_else(Kernel::delta),
            dx: if self.model == Model::Lattice { 1.0 } else { self.dx },
            dt: self.dt,
            domain: self.domain,
            t_final: self.t_final,
            init: self.init,
            record_every: self.record_every.max(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Stored states of a run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub kappa: f64,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory stores the initial state")
    }

    /// One CSV per stored state (`x,u`) in `dir`, named by index.
    pub fn write_snapshots(&self, dir: impl AsRef<std::path::Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (k, u) in self.states.iter().enumerate() {
            let path = dir.join(format!("snapshot_{k:05}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["x", "u"])?;
            for (x, v) in self.x.iter().zip(u) {
                w.write_record([x.to_string(), v.to_string()])?;
            }
            w.flush()?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn initial_history(cfg: &SimConfig, x: &[f64], m: usize) -> Result<Vec<Vec<f64>>> {
    let kappa = cfg.spec.kappa();
    let clampv = |v: f64| v.clamp(0.0, kappa);
    let constant = |u: Vec<f64>| vec![u; m + 1];
    Ok(match &cfg.init {
        Init::Step { at } => constant(x.iter().map(|&s| if s < *at { kappa } else { 0.0 }).collect()),
        Init::SeedBump { center, width, height } => {
            constant(x.iter().map(|&s| clampv(height * (-((s - center) / width).powi(2)).exp())).collect())
        }
        Init::Constant { value } => constant(vec![clampv(*value); x.len()]),
        Init::Values(v) => {
            if v.len() != x.len() {
                return Err(Error::config(format!("initial values have length {}, grid {}", v.len(), x.len())));
            }
            constant(v.iter().map(|&s| clampv(s)).collect())
        }
        Init::ProfileImport { path, at } => {
            let p = Profile::read_csv(path)?;
            traveling_history(&p, *at, x, m, cfg.dt)?
        }
        Init::Front { profile, at } => traveling_history(profile, *at, x, m, cfg.dt)?,
    })
}

/// `u(t, x) = φ(ct - (x - at))` at `t = -m dt, …, 0`, with the profile
/// normalised to cross `κ/2` at 0.
fn traveling_history(p: &Profile, at: f64, x: &[f64], m: usize, dt: f64) -> Result<Vec<Vec<f64>>> {
    let p = p.normalized()?;
    let c = p.c();
    Ok((0..=m)
        .map(|j| {
            let t = -((m - j) as f64) * dt;
            x.iter().map(|&s| p.eval(c * t - (s - at))).collect()
        })
        .collect())
}

/// Runs the configured simulation and returns the stored states.
pub fn simulate(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let kappa = cfg.spec.kappa();
    let x = cfg.nodes();
    let n = x.len();
    let m = cfg.delay_steps()?;
    let mut ring: VecDeque<Vec<f64>> = initial_history(cfg, &x, m)?.into();
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let (left, right) = (ring.back().unwrap()[0], ring.back().unwrap()[n - 1]);
    // truncated and mirrored kernel: weight of g(u_{i-j}) is β(-j)
    let taps: Vec<(i64, f64)> = match cfg.model {
        Model::Lattice => cfg.kernel.truncated(1e-12).into_iter().map(|(k, w)| (-k, w)).collect(),
        Model::ContinuumPde => vec![(0, 1.0)],
    };
    let local = taps.len() == 1 && taps[0].0 == 0;
    let diff = match cfg.model {
        Model::ContinuumPde => 1.0 / (cfg.dx * cfg.dx),
        Model::Lattice => cfg.d,
    };
    let g_left = cfg.spec.value(left);
    let g_right = cfg.spec.value(right);
    let mut gdel = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut times = vec![0.0];
    let mut states = vec![ring.back().unwrap().clone()];
    for step in 1..=steps {
        let cur = ring.back().unwrap();
        let del = ring.front().unwrap();
        for (gd, &v) in gdel.iter_mut().zip(del) {
            *gd = cfg.spec.value(v);
        }
        next[0] = left;
        next[n - 1] = right;
        for i in 1..n - 1 {
            let reaction = if local {
                gdel[i]
            } else {
                taps.iter()
                    .map(|&(j, w)| {
                        let k = i as i64 - j;
                        let gv = if k < 0 {
                            g_left
                        } else if k >= n as i64 {
                            g_right
                        } else {
                            gdel[k as usize]
                        };
                        w * gv
                    })
                    .sum()
            };
            let lap = cur[i + 1] - 2.0 * cur[i] + cur[i - 1];
            let v = cur[i] + cfg.dt * (diff * lap - cur[i] + reaction);
            next[i] = v.clamp(0.0, kappa);
        }
        // the oldest slice becomes the next scratch buffer
        let spare = if ring.len() > m { ring.pop_front().unwrap() } else { vec![0.0; n] };
        ring.push_back(std::mem::replace(&mut next, spare));
        if step % cfg.record_every == 0 || step == steps {
            times.push(step as f64 * cfg.dt);
            states.push(ring.back().unwrap().clone());
        }
    }
    Ok(Trajectory { x, times, states, kappa })
}

/// Where a nonincreasing state crosses `level`, by linear inverse
/// interpolation at the leading edge.
pub fn front_position(x: &[f64], u: &[f64], level: f64) -> Option<f64> {
    let i = u.iter().rposition(|&v| v >= level)?;
    if i + 1 == u.len() {
        return None;
    }
    let (a, b) = (u[i], u[i + 1]);
    let w = if a > b { (a - level) / (a - b) } else { 0.0 };
    Some(x[i] + w * (x[i + 1] - x[i]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrontSpeedEstimate {
    pub level: f64,
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope over the fit window.
    pub speed: f64,
    pub stderr: f64,
    /// First time inside the fit window.
    pub fit_from: f64,
    /// Smallest distance of the front to either boundary in the window.
    pub boundary_margin: f64,
    pub note: String,
}

/// Fit options of [`measure_speed_with`].
#[derive(Clone, Copy, Debug)]
pub struct SpeedFit {
    /// Leading fraction of the run discarded as transient.
    pub burn_in: f64,
    pub min_samples: usize,
    /// Required distance of the front to the boundaries.
    pub min_margin: f64,
}

impl Default for SpeedFit {
    fn default() -> Self {
        Self { burn_in: 0.2, min_samples: 50, min_margin: 50.0 }
    }
}

pub fn measure_speed(traj: &Trajectory, level: f64) -> Result<FrontSpeedEstimate> {
    measure_speed_with(traj, level, SpeedFit::default())
}

pub fn measure_speed_with(traj: &Trajectory, level: f64, fit: SpeedFit) -> Result<FrontSpeedEstimate> {
    let t_end = *traj.times.last().unwrap();
    let t0 = fit.burn_in * t_end;
    let mut samples = Vec::new();
    for (t, u) in traj.times.iter().zip(&traj.states) {
        if let Some(p) = front_position(&traj.x, u, level) {
            samples.push((*t, p));
        }
    }
    if samples.is_empty() {
        return Err(Error::numeric(format!("level {level} never crossed")));
    }
    let window: Vec<(f64, f64)> = samples.iter().copied().filter(|&(t, _)| t >= t0).collect();
    if window.len() < fit.min_samples {
        return Err(Error::numeric(format!(
            "fit window holds {} samples, need {}",
            window.len(),
            fit.min_samples
        )));
    }
    let (lo, hi) = (traj.x[0], traj.x[traj.x.len() - 1]);
    let boundary_margin = window.iter().map(|&(_, p)| (p - lo).min(hi - p)).fold(f64::INFINITY, f64::min);
    if boundary_margin < fit.min_margin {
        return Err(Error::numeric(format!(
            "front came within {boundary_margin} of a boundary during the fit window (need {})",
            fit.min_margin
        )));
    }
    let t: Vec<f64> = window.iter().map(|s| s.0).collect();
    let p: Vec<f64> = window.iter().map(|s| s.1).collect();
    let (speed, intercept, _, _) = line_fit(&t, &p);
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|&s| (s - tm).powi(2)).sum();
    let sse: f64 = t.iter().zip(&p).map(|(&s, &q)| (q - intercept - speed * s).powi(2)).sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(FrontSpeedEstimate {
        level,
        samples,
        speed,
        stderr,
        fit_from: t0,
        boundary_margin,
        note: "empirical spreading speed; not a proven estimator of the minimal speed".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kpp() -> NonlinearitySpec {
        NonlinearitySpec::rational_kpp(2.0, 1.0).unwrap()
    }

    #[test]
    fn equilibria_are_preserved() {
        for v in [0.0, 1.0] {
            let cfg = SimConfig::continuum(kpp(), 0.5, 0.2, 0.01, (0.0, 40.0), 5.0, Init::Constant { value: v });
            let tr = simulate(&cfg).unwrap();
            assert!(tr.states.iter().flatten().all(|&u| (u - v).abs() <= 1e-12));
            assert!(measure_speed(&tr, 0.5).is_err());
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cfg = SimConfig::continuum(kpp(), 0.5, 0.1, 0.005, (0.0, 10.0), 1.0, Init::Step { at: 5.0 });
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = SimConfig::continuum(kpp(), 0.5, 0.2, 0.003, (0.0, 10.0), 1.0, Init::Step { at: 5.0 });
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = SimConfig::lattice(kpp(), 0.5, 1.0, Kernel::delta(), 0.5, (0.0, 10.0), 1.0, Init::Step { at: 5.0 });
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn step_data_spread_at_the_linear_speed() {
        let cfg = SimConfig::continuum(kpp(), 0.0, 0.2, 0.01, (0.0, 400.0), 100.0, Init::Step { at: 60.0 })
            .record_every(25);
        let est = measure_speed(&simulate(&cfg).unwrap(), 0.5).unwrap();
        assert!((est.speed - 2.0).abs() <= 0.06, "{}", est.speed);
    }

    #[test]
    fn lattice_kernel_orientation() {
        // β(1) = 1 feeds node n from node n - 1 in the paper's frame, which is
        // node n + 1 here: a one-sided kernel must still give a front
        let k = Kernel::finite(vec![(1, 1.0)]).unwrap();
        let cfg = SimConfig::lattice(kpp(), 0.0, 1.0, k, 0.05, (0.0, 200.0), 40.0, Init::Step { at: 30.0 })
            .record_every(10);
        let tr = simulate(&cfg).unwrap();
        let p0 = front_position(&tr.x, &tr.states[0], 0.5).unwrap();
        let p1 = front_position(&tr.x, tr.last(), 0.5).unwrap();
        assert!(p1 > p0);
    }

    #[test]
    fn travelling_wave_is_translated() {
        let (spec, h, c) = (kpp(), 0.5, 1.4);
        let front = crate::solver::solve_front(&spec, c, h, &crate::solver::Numerics::default(), None).unwrap();
        let p = front.profile.normalized().unwrap();
        let init = Init::Front { profile: Box::new(p.clone()), at: 0.0 };
        let cfg = SimConfig::continuum(spec, h, 0.05, 1e-3, (-60.0, 60.0), 20.0, init).record_every(100_000);
        let tr = simulate(&cfg).unwrap();
        let t = *tr.times.last().unwrap();
        let err = tr
            .x
            .iter()
            .zip(tr.last())
            .filter(|(x, _)| x.abs() < 40.0)
            .map(|(x, u)| (u - p.eval(c * t - x)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "{err:e}");
    }

    #[test]
    fn measured_speed_is_stable_under_refinement() {
        let speed = |dx: f64| {
            let dt = 0.5 / (0.5 / (0.4 * dx * dx)).ceil();
            let cfg = SimConfig::continuum(kpp(), 0.5, dx, dt, (0.0, 300.0), 100.0, Init::Step { at: 60.0 })
                .record_every((1.0 / dt).round() as usize);
            measure_speed(&simulate(&cfg).unwrap(), 0.5).unwrap().speed
        };
        let (coarse, fine) = (speed(0.2), speed(0.1));
        assert!((coarse - fine).abs() <= 0.01 * fine, "{coarse} {fine}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn ordered_data_stay_ordered(seed in proptest::collection::vec(0.0..1.0f64, 41), gap in proptest::collection::vec(0.0..0.5f64, 41), h in 0.0..1.0f64) {
            let h = (h * 10.0).round() / 10.0;
            let lo: Vec<f64> = seed.clone();
            let hi: Vec<f64> = seed.iter().zip(&gap).map(|(a, b)| (a + b).min(1.0)).collect();
            let run = |v: Vec<f64>| {
                let cfg = SimConfig::continuum(kpp(), h, 0.5, 0.1, (0.0, 20.0), 3.0, Init::Values(v));
                simulate(&cfg).unwrap()
            };
            let (a, b) = (run(lo), run(hi));
            for (u, v) in a.states.iter().zip(&b.states) {
                prop_assert!(u.iter().zip(v).all(|(x, y)| x <= y));
            }
        }

        #[test]
        fn monotone_data_stay_monotone(mut v in proptest::collection::vec(0.0..1.0f64, 41), h in 0.0..1.0f64) {
            let h = (h * 10.0).round() / 10.0;
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            // frozen boundary nodes must be equilibria for this to hold
            v[0] = 1.0;
            *v.last_mut().unwrap() = 0.0;
            let cfg = SimConfig::lattice(kpp(), h, 0.8, Kernel::geometric(0.3).unwrap(), 0.1, (0.0, 40.0), 3.0, Init::Values(v));
            let tr = simulate(&cfg).unwrap();
            for u in &tr.states {
                prop_assert!(u.windows(2).all(|w| w[1] <= w[0] + 1e-10));
            }
        }
    }
}
