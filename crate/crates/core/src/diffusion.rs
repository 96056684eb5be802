//! Monte Carlo for the continuous side: squared Bessel and Feller
//! diffusions, planar Brownian motion conditioned to stay in the unit disk,
//! Ray–Knight profiles, dominance tests and Brownian motion with bounded
//! local time.
//!
//! Every routine is deterministic given its seed. Path `i` (or worker `i`)
//! draws from ChaCha stream `i` of the master seed, and results are merged
//! in index order, so thread count never changes the output.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{self, QuadratureConfig};
use crate::error::{Error, Result};
use crate::regen::stream_rng;
use crate::stats::{self, CompensatedSum, Moments};

/// Independent rejection workers; fixed so results do not depend on the
/// size of the thread pool.
const WORKERS: usize = 8;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn par_paths<T: Send>(n: usize, seed: u64, f: impl Fn(&mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
    (0..n)
        .into_par_iter()
        .map(|i| f(&mut stream_rng(seed, i as u64)))
        .collect()
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn grid_len(t_end: f64, dt: f64) -> Result<usize> {
    positive("T", t_end)?;
    positive("dt", dt)?;
    if dt > t_end {
        return Err(Error::InvalidParameter(format!("dt = {dt} exceeds T = {t_end}")));
    }
    Ok((t_end / dt + 1e-9).floor() as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiffusionKind {
    Besq2,
    Feller,
    DiskCond,
    Bm1d,
}

/// Values on the grid `0, dt, 2 dt, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionPath {
    pub kind: DiffusionKind,
    pub dt: f64,
    pub seed: u64,
    pub values: Vec<f64>,
}

impl DiffusionPath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }
}

/// One Euler step of `dZ = 2 sqrt(Z) dB`, absorbed at 0.
fn feller_step(z: f64, sdt: f64, rng: &mut ChaCha8Rng) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        (z + 2.0 * z.sqrt() * sdt * normal(rng)).max(0.0)
    }
}

/// Squared Bessel process of dimension 2 (as `|W|^2` for planar Brownian
/// motion, exact on the grid) or 0 (Feller diffusion, truncated Euler with
/// absorption).
pub fn simulate_besq(dim: u32, y0: f64, t_end: f64, dt: f64, seed: u64) -> Result<DiffusionPath> {
    let n = grid_len(t_end, dt)?;
    if !(y0 >= 0.0 && y0.is_finite()) {
        return Err(Error::InvalidParameter(format!("y0 must be nonnegative, got {y0}")));
    }
    let mut rng = stream_rng(seed, 0);
    let sdt = dt.sqrt();
    let mut values = Vec::with_capacity(n + 1);
    values.push(y0);
    let kind = match dim {
        2 => {
            let mut w = [y0.sqrt(), 0.0];
            for _ in 0..n {
                w[0] += sdt * normal(&mut rng);
                w[1] += sdt * normal(&mut rng);
                values.push(w[0] * w[0] + w[1] * w[1]);
            }
            DiffusionKind::Besq2
        }
        0 => {
            let mut z = y0;
            for _ in 0..n {
                z = feller_step(z, sdt, &mut rng);
                values.push(z);
            }
            DiffusionKind::Feller
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "only dimensions 0 and 2 are supported, got {dim}"
            )))
        }
    };
    Ok(DiffusionPath {
        kind,
        dt,
        seed,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub t: f64,
    pub mean: f64,
    pub mean_se: f64,
    pub expected_mean: f64,
    /// Mean of `(Y_t - expected_mean)^2`, an unbiased variance estimate.
    pub variance: f64,
    pub variance_se: f64,
    pub expected_variance: f64,
}

impl MomentRow {
    pub fn mean_z(&self) -> f64 {
        (self.mean - self.expected_mean) / self.mean_se
    }

    pub fn variance_z(&self) -> f64 {
        (self.variance - self.expected_variance) / self.variance_se
    }
}

/// Sample mean and variance of `BESQ^dim(y0)` at `times` against
/// `E Y_t = y0 + dim t` and `Var Y_t = 4 y0 t + 2 dim t^2`.
pub fn moment_check(
    dim: u32,
    y0: f64,
    times: &[f64],
    dt: f64,
    num_paths: usize,
    seed: u64,
) -> Result<Vec<MomentRow>> {
    let t_end = times.iter().copied().fold(0.0, f64::max);
    grid_len(t_end, dt)?;
    if num_paths < 2 {
        return Err(Error::InvalidParameter("need at least two paths".into()));
    }
    let idx: Vec<usize> = times.iter().map(|t| (t / dt + 1e-9).round() as usize).collect();
    let samples = par_paths(num_paths, seed, |rng| {
        let path = simulate_besq(dim, y0, t_end, dt, rng.gen()).expect("validated above");
        idx.iter().map(|&i| path.values[i]).collect::<Vec<f64>>()
    });
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let expected_mean = y0 + f64::from(dim) * t;
            let mut m = Moments::default();
            let mut v = Moments::default();
            for s in &samples {
                m.push(s[k]);
                v.push((s[k] - expected_mean).powi(2));
            }
            MomentRow {
                t,
                mean: m.mean,
                mean_se: m.std_error(),
                expected_mean,
                variance: v.mean,
                variance_se: v.std_error(),
                expected_variance: 4.0 * y0 * t + 2.0 * f64::from(dim) * t * t,
            }
        })
        .collect())
}

/// An empirical proportion against its exact value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionCheck {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub std_error: f64,
    pub expected: f64,
}

impl ProportionCheck {
    fn new(successes: u64, trials: u64, expected: f64) -> Self {
        let p = successes as f64 / trials as f64;
        ProportionCheck {
            successes,
            trials,
            p_hat: p,
            std_error: (expected * (1.0 - expected) / trials as f64).sqrt(),
            expected,
        }
    }

    pub fn z_score(&self) -> f64 {
        (self.p_hat - self.expected) / self.std_error
    }
}

/// `P(sup Z < 1)` for the Feller diffusion started at `1 - delta`, which
/// equals `delta` because `Z` is a martingale absorbed at 0.
pub fn feller_exit_probability(delta: f64, dt: f64, num_paths: usize, seed: u64) -> Result<ProportionCheck> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    positive("dt", dt)?;
    let sdt = dt.sqrt();
    let hits = par_paths(num_paths, seed, |rng| {
        let mut z = 1.0 - delta;
        loop {
            z = feller_step(z, sdt, rng);
            if z >= 1.0 {
                return false;
            }
            if z == 0.0 {
                return true;
            }
        }
    });
    let s = hits.iter().filter(|&&h| h).count() as u64;
    Ok(ProportionCheck::new(s, num_paths as u64, delta))
}

/// `P(BM from 0 hits a before -b) = b / (a + b)` by Euler with discrete
/// monitoring, a control on the time discretization.
pub fn bm_exit_probability(a: f64, b: f64, dt: f64, num_paths: usize, seed: u64) -> Result<ProportionCheck> {
    positive("a", a)?;
    positive("b", b)?;
    positive("dt", dt)?;
    let sdt = dt.sqrt();
    let hits = par_paths(num_paths, seed, |rng| {
        let mut x = 0.0;
        loop {
            x += sdt * normal(rng);
            if x >= a {
                return true;
            }
            if x <= -b {
                return false;
            }
        }
    });
    let s = hits.iter().filter(|&&h| h).count() as u64;
    Ok(ProportionCheck::new(s, num_paths as u64, b / (a + b)))
}

/// Binned occupation density: bin `i` covers `[lo + i h, lo + (i+1) h)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeGrid {
    pub h: f64,
    pub lo: f64,
    pub density: Vec<f64>,
    pub elapsed: f64,
}

impl LocalTimeGrid {
    pub fn new(h: f64) -> Result<Self> {
        positive("bin width", h)?;
        Ok(LocalTimeGrid {
            h,
            lo: 0.0,
            density: Vec::new(),
            elapsed: 0.0,
        })
    }

    /// Credit `dt` units of time spent at `x`.
    pub fn add(&mut self, x: f64, dt: f64) {
        if self.density.is_empty() {
            self.lo = (x / self.h).floor() * self.h;
            self.density.push(0.0);
        }
        let mut i = ((x - self.lo) / self.h).floor();
        if i < 0.0 {
            let extra = (-i) as usize;
            let mut v = vec![0.0; extra];
            v.extend_from_slice(&self.density);
            self.density = v;
            self.lo -= extra as f64 * self.h;
            i = 0.0;
        }
        let i = i as usize;
        if i >= self.density.len() {
            self.density.resize(i + 1, 0.0);
        }
        self.density[i] += dt / self.h;
        self.elapsed += dt;
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ density h`, equal to the elapsed time by the occupation formula.
    pub fn total_time(&self) -> f64 {
        let mut s = CompensatedSum::default();
        for d in &self.density {
            s.add(d * self.h);
        }
        s.value()
    }

    /// Relative gap between the binned total and the elapsed time.
    pub fn occupation_error(&self) -> f64 {
        if self.elapsed == 0.0 {
            return 0.0;
        }
        (self.total_time() - self.elapsed).abs() / self.elapsed
    }
}

/// Euler Brownian motion run until it reaches `a` or time `t_max`.
pub fn bm_occupation(a: f64, dt: f64, h: f64, t_max: f64, rng: &mut ChaCha8Rng) -> Result<LocalTimeGrid> {
    positive("a", a)?;
    positive("t_max", t_max)?;
    positive("dt", dt)?;
    let mut grid = LocalTimeGrid::new(h)?;
    let sdt = dt.sqrt();
    let mut x = 0.0;
    let mut t = 0.0;
    while x < a && t < t_max {
        grid.add(x, dt);
        x += sdt * normal(rng);
        t += dt;
    }
    Ok(grid)
}

/// Local times of Brownian motion at the lattice `delta Z`, stopped when
/// the walk reaches site `top`.
///
/// The walk of successive lattice levels hit by Brownian motion is a simple
/// random walk, and each visit to a site adds an independent exponential
/// amount of local time with mean `delta`. If `floor` is given, excursions
/// below it are collapsed into one more visit to the floor site, which
/// leaves every local time at or above the floor unchanged in law.
struct LatticeLocalTime {
    delta: f64,
    offset: i64,
    local: Vec<f64>,
}

impl LatticeLocalTime {
    fn new(delta: f64) -> Self {
        LatticeLocalTime {
            delta,
            offset: 0,
            local: Vec::new(),
        }
    }

    fn reset(&mut self, lo: i64, hi: i64) {
        self.offset = -lo;
        self.local.clear();
        self.local.resize((hi - lo + 1) as usize, 0.0);
    }

    fn slot(&mut self, k: i64) -> usize {
        if k + self.offset < 0 {
            let extra = (-(k + self.offset)) as usize + self.local.len();
            let mut v = vec![0.0; extra];
            v.extend_from_slice(&self.local);
            self.local = v;
            self.offset += extra as i64;
        }
        (k + self.offset) as usize
    }

    /// Run to `top`; returns `false` as soon as some local time exceeds `cap`.
    fn run(&mut self, top: i64, floor: Option<i64>, cap: f64, rng: &mut ChaCha8Rng) -> bool {
        let exp = Exp::new(1.0 / self.delta).expect("positive rate");
        let mut k = 0i64;
        while k < top {
            let i = self.slot(k);
            self.local[i] += rng.sample(exp);
            if self.local[i] > cap {
                return false;
            }
            let up = rng.gen::<bool>();
            if up {
                k += 1;
            } else if floor != Some(k) {
                k -= 1;
            }
        }
        true
    }

    fn at(&self, k: i64) -> f64 {
        let i = k + self.offset;
        if i < 0 || i as usize >= self.local.len() {
            0.0
        } else {
            self.local[i as usize]
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayKnightConfig {
    pub a: f64,
    pub dt: f64,
    /// Lattice spacing for the local-time profile.
    pub h: f64,
    pub num_paths: usize,
    pub seed: u64,
    /// Paths used for the Euler occupation-identity check.
    pub occupation_paths: usize,
}

impl RayKnightConfig {
    pub fn new(a: f64, num_paths: usize, seed: u64) -> Self {
        let dt = 1e-4;
        RayKnightConfig {
            a,
            dt,
            h: 10.0 * dt.sqrt(),
            num_paths,
            seed,
            occupation_paths: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    /// Distance below `a` (upper side) or below 0 (lower side).
    pub x: f64,
    pub level: f64,
    pub mean: f64,
    pub expected_mean: f64,
    pub rel_err_mean: f64,
    pub variance: f64,
    pub expected_variance: f64,
    pub rel_err_variance: f64,
}

impl ProfileRow {
    fn new(x: f64, level: f64, m: &Moments, expected_mean: f64, expected_variance: f64) -> Self {
        ProfileRow {
            x,
            level,
            mean: m.mean,
            expected_mean,
            rel_err_mean: (m.mean - expected_mean).abs() / expected_mean,
            variance: m.variance(),
            expected_variance,
            rel_err_variance: (m.variance() - expected_variance).abs() / expected_variance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayKnightReport {
    pub config: RayKnightConfig,
    /// `L(tau_a, a - x)` for `x` in `[0.2 a, a]` against `BESQ^2(0)`.
    pub besq_rows: Vec<ProfileRow>,
    /// `L(tau_a, -x)` for `x` in `(0, a]` against the Feller diffusion
    /// started at `L(tau_a, 0)`: mean `2a`, variance `4a^2 + 8 a x`.
    pub feller_rows: Vec<ProfileRow>,
    pub max_rel_err_mean: f64,
    pub max_rel_err_variance: f64,
    /// Worst per-path `|Σ bins h - elapsed| / elapsed` over Euler paths.
    pub occupation_max_rel_err: f64,
}

pub fn ray_knight_check(config: &RayKnightConfig) -> Result<RayKnightReport> {
    let a = config.a;
    if !(1.0..=4.0).contains(&a) {
        return Err(Error::InvalidParameter(format!("a must lie in [1, 4], got {a}")));
    }
    positive("h", config.h)?;
    positive("dt", config.dt)?;
    if config.num_paths < 2 {
        return Err(Error::InvalidParameter("need at least two paths".into()));
    }
    let delta = config.h;
    let top = (a / delta).round() as i64;
    let delta = a / top as f64;
    let profiles = par_paths(config.num_paths, config.seed, |rng| {
        let mut lt = LatticeLocalTime::new(delta);
        lt.reset(-top, top);
        lt.run(top, Some(-top), f64::INFINITY, rng);
        (-top..=top).map(|k| lt.at(k)).collect::<Vec<f64>>()
    });
    let moments_at = |k: i64| {
        let mut m = Moments::default();
        for p in &profiles {
            m.push(p[(k + top) as usize]);
        }
        m
    };
    let mut besq_rows = Vec::new();
    for j in 0..=top {
        let x = j as f64 * delta;
        if x < 0.2 * a - 1e-12 {
            continue;
        }
        besq_rows.push(ProfileRow::new(x, a - x, &moments_at(top - j), 2.0 * x, 4.0 * x * x));
    }
    let feller_rows: Vec<ProfileRow> = (1..=top)
        .map(|j| {
            let x = j as f64 * delta;
            ProfileRow::new(x, -x, &moments_at(-j), 2.0 * a, 4.0 * a * a + 8.0 * a * x)
        })
        .collect();
    let occupation = par_paths(config.occupation_paths, config.seed ^ 0x0cc0, |rng| {
        bm_occupation(a, config.dt, config.h, 50.0, rng).map(|g| g.occupation_error())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let max_rel_err_mean = besq_rows.iter().map(|r| r.rel_err_mean).fold(0.0, f64::max);
    let max_rel_err_variance = besq_rows
        .iter()
        .map(|r| r.rel_err_variance)
        .fold(0.0, f64::max);
    Ok(RayKnightReport {
        config: config.clone(),
        besq_rows,
        feller_rows,
        max_rel_err_mean,
        max_rel_err_variance,
        occupation_max_rel_err: occupation.into_iter().fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedBmConfig {
    pub a: f64,
    pub dt: f64,
    pub h: f64,
    pub num_accepted: usize,
    pub seed: u64,
    pub max_attempts: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedBm {
    /// `delta Σ_k L(tau_a, k delta)`, the occupation formula on the lattice.
    pub tau: f64,
    pub sup_local_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedBmReport {
    pub config: BoundedBmConfig,
    pub attempts: u64,
    pub acceptance_rate: f64,
    pub mean_tau_over_a: f64,
    pub mean_tau_over_a_se: f64,
    pub mean_sup_local_time: f64,
    pub mean_sup_local_time_se: f64,
    pub accepted: Vec<AcceptedBm>,
}

/// Brownian motion to `tau_a` conditioned by rejection on every lattice
/// local time staying at most 1.
pub fn reject_bm_bounded_localtime(config: &BoundedBmConfig) -> Result<BoundedBmReport> {
    let a = config.a;
    positive("a", a)?;
    if a > 3.0 {
        return Err(Error::InvalidParameter(format!(
            "a = {a} is above 3, where acceptance becomes infeasible"
        )));
    }
    positive("h", config.h)?;
    let top = ((a / config.h).round() as i64).max(1);
    let delta = a / top as f64;
    let per_worker = config.max_attempts / WORKERS as u64;
    let parts: Vec<(Vec<AcceptedBm>, u64)> = (0..WORKERS)
        .into_par_iter()
        .map(|w| {
            let want = config.num_accepted / WORKERS + usize::from(w < config.num_accepted % WORKERS);
            let mut rng = stream_rng(config.seed, w as u64);
            let mut lt = LatticeLocalTime::new(delta);
            let mut out = Vec::with_capacity(want);
            let mut attempts = 0u64;
            while out.len() < want && attempts < per_worker {
                attempts += 1;
                lt.reset(-top, top);
                if lt.run(top, None, 1.0, &mut rng) {
                    let mut s = CompensatedSum::default();
                    lt.local.iter().for_each(|&l| s.add(l));
                    out.push(AcceptedBm {
                        tau: delta * s.value(),
                        sup_local_time: lt.local.iter().copied().fold(0.0, f64::max),
                    });
                }
            }
            (out, attempts)
        })
        .collect();
    let attempts: u64 = parts.iter().map(|p| p.1).sum();
    let accepted: Vec<AcceptedBm> = parts.into_iter().flat_map(|p| p.0).collect();
    if accepted.len() < config.num_accepted {
        return Err(Error::Timeout {
            accepted: accepted.len(),
            attempts,
        });
    }
    let mut tau = Moments::default();
    let mut sup = Moments::default();
    for x in &accepted {
        tau.push(x.tau / a);
        sup.push(x.sup_local_time);
    }
    Ok(BoundedBmReport {
        config: config.clone(),
        attempts,
        acceptance_rate: accepted.len() as f64 / attempts as f64,
        mean_tau_over_a: tau.mean,
        mean_tau_over_a_se: tau.std_error(),
        mean_sup_local_time: sup.mean,
        mean_sup_local_time_se: sup.std_error(),
        accepted,
    })
}

/// A barrier `t -> f(t)` for the dominance tests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Barrier {
    Infinite,
    Constant { value: f64 },
    Linear { intercept: f64, slope: f64 },
}

impl Barrier {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Barrier::Infinite => f64::INFINITY,
            Barrier::Constant { value } => value,
            Barrier::Linear { intercept, slope } => intercept + slope * t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceConfig {
    pub f: Barrier,
    pub g: Barrier,
    pub t_end: f64,
    pub y0: f64,
    pub num_accepted: usize,
    pub seed: u64,
    pub steps: usize,
    pub alpha: f64,
    pub max_attempts: u64,
}

impl DominanceConfig {
    pub fn new(f: Barrier, g: Barrier, t_end: f64, y0: f64, num_accepted: usize, seed: u64) -> Self {
        DominanceConfig {
            f,
            g,
            t_end,
            y0,
            num_accepted,
            seed,
            steps: 100,
            alpha: 0.01,
            max_attempts: 200_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub n_f: usize,
    pub n_g: usize,
    pub attempts_f: u64,
    pub attempts_g: u64,
    pub probe_time: f64,
    /// `sup_y (F_f(y) - F_g(y))`: evidence against `Y^f ⪰ Y^g`.
    pub discrepancy: f64,
    /// `sup_y (F_g(y) - F_f(y))`: evidence for strict dominance.
    pub reverse_discrepancy: f64,
    pub critical: f64,
    pub alpha: f64,
    pub pass: bool,
}

/// `BESQ^2(y0)` on the grid conditioned by rejection to stay below
/// `barrier`; returns the values at the middle grid point.
fn conditioned_besq_probe(
    barrier: Barrier,
    config: &DominanceConfig,
    seed: u64,
) -> Result<(Vec<f64>, u64)> {
    let dt = config.t_end / config.steps as f64;
    let sdt = dt.sqrt();
    let probe = config.steps / 2;
    let limits: Vec<f64> = (0..=config.steps).map(|i| barrier.at(i as f64 * dt)).collect();
    let per_worker = config.max_attempts / WORKERS as u64;
    let parts: Vec<(Vec<f64>, u64)> = (0..WORKERS)
        .into_par_iter()
        .map(|w| {
            let want = config.num_accepted / WORKERS + usize::from(w < config.num_accepted % WORKERS);
            let mut rng = stream_rng(seed, w as u64);
            let mut out = Vec::with_capacity(want);
            let mut attempts = 0u64;
            'attempt: while out.len() < want && attempts < per_worker {
                attempts += 1;
                let mut p = [config.y0.sqrt(), 0.0];
                let mut at_probe = config.y0;
                for (i, &lim) in limits.iter().enumerate().skip(1) {
                    p[0] += sdt * normal(&mut rng);
                    p[1] += sdt * normal(&mut rng);
                    let y = p[0] * p[0] + p[1] * p[1];
                    if y > lim {
                        continue 'attempt;
                    }
                    if i == probe {
                        at_probe = y;
                    }
                }
                out.push(at_probe);
            }
            (out, attempts)
        })
        .collect();
    let attempts = parts.iter().map(|p| p.1).sum();
    let values: Vec<f64> = parts.into_iter().flat_map(|p| p.0).collect();
    if values.len() < config.num_accepted {
        return Err(Error::Timeout {
            accepted: values.len(),
            attempts,
        });
    }
    Ok((values, attempts))
}

/// One-sided two-sample test of `Y^f ⪰ Y^g` at time `T/2`.
pub fn dominance_test(config: &DominanceConfig) -> Result<DominanceReport> {
    positive("T", config.t_end)?;
    if config.steps < 2 || config.num_accepted == 0 {
        return Err(Error::InvalidParameter("need at least two steps and one sample".into()));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", config.alpha)));
    }
    let dt = config.t_end / config.steps as f64;
    for i in 0..=config.steps {
        let t = i as f64 * dt;
        if config.g.at(t) > config.f.at(t) {
            return Err(Error::InvalidParameter(format!("g exceeds f at t = {t}")));
        }
    }
    if config.y0 > config.g.at(0.0) {
        return Err(Error::InvalidParameter("y0 lies above the lower barrier".into()));
    }
    let (yf, attempts_f) = conditioned_besq_probe(config.f, config, config.seed)?;
    let (yg, attempts_g) = conditioned_besq_probe(config.g, config, config.seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let discrepancy = stats::ks_one_sided(&yf, &yg);
    let critical = stats::ks_one_sided_critical(yf.len(), yg.len(), config.alpha);
    Ok(DominanceReport {
        n_f: yf.len(),
        n_g: yg.len(),
        attempts_f,
        attempts_g,
        probe_time: (config.steps / 2) as f64 * dt,
        discrepancy,
        reverse_discrepancy: stats::ks_one_sided(&yg, &yf),
        critical,
        alpha: config.alpha,
        pass: discrepancy <= critical,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub z: f64,
    pub p_hat: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FellerAreaReport {
    pub y0: f64,
    pub dt: f64,
    pub t_max: f64,
    pub num_paths: usize,
    pub seed: u64,
    pub absorbed_fraction: f64,
    pub rows: Vec<TailRow>,
    pub warning: Option<String>,
}

/// Empirical tail of `∫_0^∞ Z_s ds` for the Feller diffusion from `y0`.
pub fn feller_area_tail(
    z_grid: &[f64],
    y0: f64,
    dt: f64,
    t_max: f64,
    num_paths: usize,
    seed: u64,
) -> Result<FellerAreaReport> {
    positive("y0", y0)?;
    grid_len(t_max, dt)?;
    if num_paths == 0 {
        return Err(Error::InvalidParameter("need at least one path".into()));
    }
    let sdt = dt.sqrt();
    let runs = par_paths(num_paths, seed, |rng| {
        let mut z = y0;
        let mut area = CompensatedSum::default();
        let mut t = 0.0;
        while z > 0.0 && t < t_max {
            area.add(z * dt);
            z = feller_step(z, sdt, rng);
            t += dt;
        }
        (area.value(), z == 0.0)
    });
    let absorbed = runs.iter().filter(|r| r.1).count() as f64 / num_paths as f64;
    let warning = (absorbed < 0.999).then(|| {
        format!("only {:.4} of paths were absorbed before T_max = {t_max}", absorbed)
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let z99 = stats::normal_quantile(0.995);
    let rows = z_grid
        .iter()
        .map(|&z| {
            let k = runs.iter().filter(|r| r.0 > z).count() as u64;
            let (lo, hi) = stats::wilson_interval(k, num_paths as u64, z99);
            TailRow {
                z,
                p_hat: k as f64 / num_paths as f64,
                wilson_low: lo,
                wilson_high: hi,
            }
        })
        .collect();
    Ok(FellerAreaReport {
        y0,
        dt,
        t_max,
        num_paths,
        seed,
        absorbed_fraction: absorbed,
        rows,
        warning,
    })
}

/// The drift `∇ log φ(x) = k(|x|^2) x` of planar Brownian motion
/// conditioned to stay in the unit disk forever, with
/// `φ(x) = J0(j0 |x|)` and `k(u) = -j0 J1(j0 r) / (r J0(j0 r))`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskDrift {
    pub j0: f64,
    /// `J0(j0 r)` as a polynomial in `u = r^2`.
    p: Vec<f64>,
    /// `J1(j0 r) / r` as a polynomial in `u`.
    q: Vec<f64>,
}

impl Default for DiskDrift {
    fn default() -> Self {
        Self::new()
    }
}

impl DiskDrift {
    pub fn new() -> Self {
        let j0 = bessel::find_j0().j0;
        let s = j0 * j0 / 4.0;
        let mut p = Vec::new();
        let mut q = Vec::new();
        let (mut a, mut b) = (1.0, j0 / 2.0);
        for k in 0..20u32 {
            p.push(a);
            q.push(b);
            let kk = f64::from(k + 1);
            a *= -s / (kk * kk);
            b *= -s / (kk * (kk + 1.0));
        }
        DiskDrift { j0, p, q }
    }

    fn horner(c: &[f64], u: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &x| acc * u + x)
    }

    /// `φ` at radius `r = sqrt(u)`.
    pub fn phi(&self, u: f64) -> f64 {
        Self::horner(&self.p, u)
    }

    pub fn coefficient(&self, u: f64) -> f64 {
        -self.j0 * Self::horner(&self.q, u) / Self::horner(&self.p, u)
    }

    pub fn drift(&self, x: [f64; 2]) -> [f64; 2] {
        let k = self.coefficient(x[0] * x[0] + x[1] * x[1]);
        [k * x[0], k * x[1]]
    }
}

/// Radius beyond which proposals are checked for refinement.
const DISK_SHRINK_RADIUS: f64 = 0.95;
const DISK_COLLAPSE_RADIUS: f64 = 1.0 - 1e-6;
/// Smallest substep as a fraction of `dt`; about 17 levels of subdivision.
const DISK_MIN_STEP_FRACTION: f64 = 1e-10;

struct DiskStepper<'a> {
    drift: &'a DiskDrift,
    dt_min: f64,
    refinements: u64,
}

impl DiskStepper<'_> {
    /// Advance by time `h` with Brownian increment `dw`. A proposal that
    /// lands beyond radius 0.95 with a step that is coarse next to the
    /// boundary distance is replaced by four substeps whose increments are
    /// a Brownian bridge summing to `dw`, down to `dt_min`.
    fn advance(&mut self, x: &mut [f64; 2], h: f64, dw: [f64; 2], rng: &mut ChaCha8Rng) -> Result<()> {
        let d = self.drift.drift(*x);
        let y = [x[0] + d[0] * h + dw[0], x[1] + d[1] * h + dw[1]];
        let r_new = (y[0] * y[0] + y[1] * y[1]).sqrt();
        if r_new > DISK_SHRINK_RADIUS {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let gap = (1.0 - r).min(1.0 - r_new.min(1.0));
            let move_len = ((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2)).sqrt();
            let coarse = r_new >= DISK_COLLAPSE_RADIUS || move_len > 0.5 * gap;
            if coarse && h / 4.0 >= self.dt_min {
                self.refinements += 1;
                let sub = h / 4.0;
                let s = sub.sqrt();
                let g: Vec<[f64; 2]> = (0..4).map(|_| [s * normal(rng), s * normal(rng)]).collect();
                let shift = [
                    (g.iter().map(|v| v[0]).sum::<f64>() - dw[0]) / 4.0,
                    (g.iter().map(|v| v[1]).sum::<f64>() - dw[1]) / 4.0,
                ];
                for v in g {
                    self.advance(x, sub, [v[0] - shift[0], v[1] - shift[1]], rng)?;
                }
                return Ok(());
            }
            if r_new >= DISK_COLLAPSE_RADIUS {
                return Err(Error::StepCollapse {
                    radius: r_new,
                    dt_min: self.dt_min,
                });
            }
        }
        *x = y;
        Ok(())
    }
}

/// `|Z_t|^2` on the grid for the disk-conditioned diffusion started at
/// radius `r0`.
pub fn simulate_disk_conditioned(t_end: f64, dt: f64, r0: f64, seed: u64) -> Result<DiffusionPath> {
    let n = grid_len(t_end, dt)?;
    if !(0.0..DISK_SHRINK_RADIUS).contains(&r0) {
        return Err(Error::InvalidParameter(format!("r0 must lie in [0, 0.95), got {r0}")));
    }
    let drift = DiskDrift::new();
    let mut st = DiskStepper {
        drift: &drift,
        dt_min: dt * DISK_MIN_STEP_FRACTION,
        refinements: 0,
    };
    let mut rng = stream_rng(seed, 0);
    let sdt = dt.sqrt();
    let mut x = [r0, 0.0];
    let mut values = Vec::with_capacity(n + 1);
    values.push(r0 * r0);
    for _ in 0..n {
        let dw = [sdt * normal(&mut rng), sdt * normal(&mut rng)];
        st.advance(&mut x, dt, dw, &mut rng)?;
        values.push(x[0] * x[0] + x[1] * x[1]);
    }
    Ok(DiffusionPath {
        kind: DiffusionKind::DiskCond,
        dt,
        seed,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskErgodicConfig {
    pub t_end: f64,
    pub dt: f64,
    pub r0: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Spacing in time of the radius samples used for the histogram test.
    pub sample_every: f64,
    pub bins: usize,
}

impl DiskErgodicConfig {
    pub fn new(t_end: f64, dt: f64, replicas: usize, seed: u64) -> Self {
        DiskErgodicConfig {
            t_end,
            dt,
            r0: 0.5,
            replicas,
            seed,
            sample_every: 1.0,
            bins: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `(lower edge, observed, expected)` after merging sparse bins.
    pub bins: Vec<(f64, u64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskErgodicReport {
    pub config: DiskErgodicConfig,
    pub m0: f64,
    pub time_average: f64,
    /// Standard error from the spread of replica averages.
    pub std_error: f64,
    pub abs_error: f64,
    pub replica_averages: Vec<f64>,
    pub refinements: u64,
    pub histogram: ChiSquareReport,
}

/// Long-run time average of `|Z_t|^2` over independent replicas, plus a
/// chi-square comparison of sampled radii with the density
/// `2π r φ(r)^2 / C`.
pub fn disk_ergodic(config: &DiskErgodicConfig) -> Result<DiskErgodicReport> {
    let n = grid_len(config.t_end, config.dt)?;
    if config.replicas == 0 || config.bins < 2 {
        return Err(Error::InvalidParameter("need one replica and two bins".into()));
    }
    positive("sample spacing", config.sample_every)?;
    let stride = ((config.sample_every / config.dt).round() as usize).max(1);
    let drift = DiskDrift::new();
    let runs = (0..config.replicas)
        .into_par_iter()
        .map(|rep| -> Result<(f64, Vec<f64>, u64)> {
            let mut st = DiskStepper {
                drift: &drift,
                dt_min: config.dt * DISK_MIN_STEP_FRACTION,
                refinements: 0,
            };
            let mut rng = stream_rng(config.seed, rep as u64);
            let sdt = config.dt.sqrt();
            let mut x = [config.r0, 0.0];
            let mut sum = CompensatedSum::default();
            let mut radii = Vec::with_capacity(n / stride + 1);
            for i in 1..=n {
                let dw = [sdt * normal(&mut rng), sdt * normal(&mut rng)];
                st.advance(&mut x, config.dt, dw, &mut rng)?;
                let u = x[0] * x[0] + x[1] * x[1];
                sum.add(u);
                if i % stride == 0 {
                    radii.push(u.sqrt());
                }
            }
            Ok((sum.value() / n as f64, radii, st.refinements))
        })
        .collect::<Result<Vec<_>>>()?;
    let replica_averages: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let mut m = Moments::default();
    replica_averages.iter().for_each(|&v| m.push(v));
    let m0 = bessel::compute_m0(&QuadratureConfig::default())?.closed;
    let radii: Vec<f64> = runs.iter().flat_map(|r| r.1.iter().copied()).collect();
    let histogram = radial_chi_square(&radii, config.bins, &drift)?;
    Ok(DiskErgodicReport {
        config: config.clone(),
        m0,
        time_average: m.mean,
        std_error: m.std_error(),
        abs_error: (m.mean - m0).abs(),
        replica_averages,
        refinements: runs.iter().map(|r| r.2).sum(),
        histogram,
    })
}

fn radial_chi_square(radii: &[f64], bins: usize, drift: &DiskDrift) -> Result<ChiSquareReport> {
    let cfg = QuadratureConfig::default();
    let density = |r: f64| r * drift.phi(r * r).powi(2);
    let total = bessel::integrate(density, 0.0, 1.0, &cfg)?;
    let n = radii.len() as f64;
    let width = 1.0 / bins as f64;
    let mut observed = vec![0u64; bins];
    for &r in radii {
        observed[((r / width) as usize).min(bins - 1)] += 1;
    }
    let mut merged: Vec<(f64, u64, f64)> = Vec::new();
    let mut pending: Option<(f64, u64, f64)> = None;
    for (i, &obs) in observed.iter().enumerate() {
        let lo = i as f64 * width;
        let e = n * bessel::integrate(density, lo, lo + width, &cfg)? / total;
        let cur = match pending.take() {
            Some((l, o, x)) => (l, o + obs, x + e),
            None => (lo, obs, e),
        };
        if cur.2 < 5.0 {
            pending = Some(cur);
        } else {
            merged.push(cur);
        }
    }
    if let Some((_, o, e)) = pending {
        match merged.last_mut() {
            Some(last) => {
                last.1 += o;
                last.2 += e;
            }
            None => merged.push((0.0, o, e)),
        }
    }
    let statistic: f64 = merged
        .iter()
        .map(|&(_, o, e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = merged.len().saturating_sub(1).max(1);
    Ok(ChiSquareReport {
        statistic,
        dof,
        p_value: stats::chi_square_sf(statistic, dof),
        bins: merged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_lengths_and_kinds() {
        let p = simulate_besq(2, 0.0, 1.0, 0.01, 1).unwrap();
        assert_eq!(p.len(), 101);
        assert_eq!(p.kind, DiffusionKind::Besq2);
        assert!(p.values.iter().all(|&v| v >= 0.0));
        let f = simulate_besq(0, 1.0, 1.0, 0.001, 1).unwrap();
        assert_eq!(f.len(), 1001);
        assert!(f.values.iter().all(|&v| v >= 0.0));
        assert!(simulate_besq(1, 1.0, 1.0, 0.01, 1).is_err());
        assert!(simulate_besq(2, -1.0, 1.0, 0.01, 1).is_err());
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = simulate_besq(0, 1.0, 1.0, 0.01, 42).unwrap();
        let b = simulate_besq(0, 1.0, 1.0, 0.01, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn drift_vanishes_at_centre() {
        let d = DiskDrift::new();
        assert_eq!(d.drift([0.0, 0.0]), [0.0, 0.0]);
        assert!(d.coefficient(0.0).is_finite());
        // inward everywhere in the open disk
        for i in 1..100 {
            let r = i as f64 / 100.0;
            assert!(d.coefficient(r * r) < 0.0);
        }
        assert!((d.phi(1.0)).abs() < 1e-12);
    }

    #[test]
    fn local_time_grid_identity() {
        let mut g = LocalTimeGrid::new(0.1).unwrap();
        for i in 0..1000 {
            g.add((i as f64 * 0.37).sin(), 1e-3);
        }
        assert!(g.occupation_error() < 1e-12);
        assert!(LocalTimeGrid::new(0.0).is_err());
    }

    #[test]
    fn barriers() {
        assert_eq!(Barrier::Infinite.at(3.0), f64::INFINITY);
        assert_eq!(Barrier::Linear { intercept: 1.0, slope: 2.0 }.at(0.5), 2.0);
        let bad = DominanceConfig::new(
            Barrier::Constant { value: 0.5 },
            Barrier::Constant { value: 1.0 },
            1.0,
            0.1,
            10,
            1,
        );
        assert!(dominance_test(&bad).is_err());
    }
}
