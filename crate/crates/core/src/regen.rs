//! The limit measure `Q` through its regenerative excursion decomposition.
//!
//! Under `Q` the path splits at its regeneration levels into independent
//! excursions: the first one is drawn from the class `M~` and every later
//! one i.i.d. from `M`, each with probability proportional to
//! `e^{c4 h} 2^{-m}` for an excursion of height `h` and length `m`.
//! With the height exponent the weights of `M` sum to `Σ_h e^{c4 h} P(L_h)`,
//! which is exactly one at the renewal rate, so the truncated tables are
//! close to normalized already.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::DEFAULT_NODE_BUDGET;
use crate::lattice::{self, EventParams, ExcursionClass, LatticePath};
use crate::stats::normal_quantile;

/// Deterministic RNG for stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    pub path: LatticePath,
    pub height: i64,
    pub weight: f64,
}

impl Excursion {
    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }
}

/// Every excursion-class member up to a length cutoff, with its weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionTable {
    pub l0: u32,
    pub c4: f64,
    pub m_max: usize,
    pub class: ExcursionClass,
    pub entries: Vec<Excursion>,
    pub z_trunc: f64,
    /// Weight share of the two longest lengths, a proxy for the mass lost
    /// to the cutoff.
    pub tail_band_fraction: f64,
}

struct TableDfs {
    l0: u8,
    class: ExcursionClass,
    m_max: usize,
    offset: i64,
    counts: Vec<u8>,
    /// levels >= 1 visited exactly once
    singles: usize,
    max: i64,
    steps: Vec<i8>,
    found: Vec<(Vec<i8>, i64)>,
    nodes: u64,
    budget: u64,
}

impl TableDfs {
    fn slot(&self, x: i64) -> usize {
        (x + self.offset) as usize
    }

    fn dfs(&mut self, pos: i64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget {
                budget: self.budget,
            });
        }
        if self.steps.len() == self.m_max {
            return Ok(());
        }
        for step in [-1i8, 1] {
            let next = pos + i64::from(step);
            if next <= 0 && !self.class.allows_negative() {
                continue;
            }
            let i = self.slot(next);
            if self.counts[i] >= self.l0 {
                continue;
            }
            self.steps.push(step);
            let new_max = next > self.max;
            if new_max && self.singles == 0 {
                self.found.push((self.steps.clone(), next));
            }
            let prev_max = self.max;
            if new_max {
                self.max = next;
            }
            self.counts[i] += 1;
            if next >= 1 {
                match self.counts[i] {
                    1 => self.singles += 1,
                    2 => self.singles -= 1,
                    _ => {}
                }
            }
            self.dfs(next)?;
            if next >= 1 {
                match self.counts[i] {
                    1 => self.singles -= 1,
                    2 => self.singles += 1,
                    _ => {}
                }
            }
            self.counts[i] -= 1;
            self.max = prev_max;
            self.steps.pop();
        }
        Ok(())
    }
}

pub fn excursion_weight(c4: f64, height: i64, len: usize) -> f64 {
    (c4 * height as f64 - len as f64 * std::f64::consts::LN_2).exp()
}

pub fn build_excursion_table(
    l0: u32,
    c4: f64,
    m_max: usize,
    class: ExcursionClass,
) -> Result<ExcursionTable> {
    build_excursion_table_with_budget(l0, c4, m_max, class, DEFAULT_NODE_BUDGET)
}

pub fn build_excursion_table_with_budget(
    l0: u32,
    c4: f64,
    m_max: usize,
    class: ExcursionClass,
    budget: u64,
) -> Result<ExcursionTable> {
    if !(c4 > 0.0 && c4 <= std::f64::consts::LN_2 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "c4 must lie in (0, log 2], got {c4}"
        )));
    }
    if m_max == 0 {
        return Err(Error::InvalidParameter("m_max must be at least 1".into()));
    }
    if l0 == 0 {
        return Err(Error::InvalidParameter("L0 must be at least 1".into()));
    }
    let offset = m_max as i64 + 1;
    let mut dfs = TableDfs {
        l0: l0.min(u32::from(u8::MAX)) as u8,
        class,
        m_max,
        offset,
        counts: vec![0; 2 * m_max + 3],
        singles: 0,
        max: 0,
        steps: Vec::with_capacity(m_max),
        found: Vec::new(),
        nodes: 0,
        budget,
    };
    dfs.dfs(0)?;
    let entries: Vec<Excursion> = dfs
        .found
        .into_iter()
        .map(|(steps, height)| {
            let weight = excursion_weight(c4, height, steps.len());
            Excursion {
                path: LatticePath::from_steps_unchecked(steps),
                height,
                weight,
            }
        })
        .collect();
    let z_trunc: f64 = entries.iter().map(|e| e.weight).sum();
    let band: f64 = entries
        .iter()
        .filter(|e| e.len() + 1 >= m_max)
        .fold(0.0, |acc, e| acc + e.weight);
    Ok(ExcursionTable {
        l0,
        c4,
        m_max,
        class,
        entries,
        z_trunc,
        tail_band_fraction: band / z_trunc,
    })
}

impl ExcursionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every `M` excursion of height at most this value is in the table.
    pub fn complete_height(&self) -> Option<i64> {
        match self.class {
            ExcursionClass::Positive => Some((self.m_max as i64 - 1) / i64::from(self.l0) + 1),
            ExcursionClass::First => None,
        }
    }

    pub fn mean_height(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.weight * e.height as f64)
            .sum::<f64>()
            / self.z_trunc
    }

    pub fn mean_length(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.weight * e.len() as f64)
            .sum::<f64>()
            / self.z_trunc
    }

    /// Speed of the truncated law: `E[height] / E[length]`.
    pub fn speed(&self) -> f64 {
        self.mean_height() / self.mean_length()
    }

    fn sampler(&self) -> Result<WeightedIndex<f64>> {
        WeightedIndex::new(self.entries.iter().map(|e| e.weight))
            .map_err(|e| Error::InvalidParameter(format!("excursion table: {e}")))
    }

    /// `Q`-probability that the excursion sequence starting with this table
    /// (and continuing i.i.d. from `rest`) begins with `prefix`.
    fn cylinder_prob(&self, rest: &ExcursionTable, prefix: &[i8]) -> f64 {
        if prefix.is_empty() {
            return 1.0;
        }
        let mut total = 0.0;
        for e in &self.entries {
            let steps = e.path.steps();
            if steps.len() >= prefix.len() {
                if steps[..prefix.len()] == *prefix {
                    total += e.weight;
                }
            } else if prefix[..steps.len()] == *steps {
                total += e.weight * rest.cylinder_prob(rest, &prefix[steps.len()..]);
            }
        }
        total / self.z_trunc
    }
}

/// `Q(S_1..S_k follow prefix)` under the truncated tables.
pub fn q_cylinder(first: &ExcursionTable, table: &ExcursionTable, prefix: &[i8]) -> f64 {
    first.cylinder_prob(table, prefix)
}

/// A path under `Q` assembled from sampled excursions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegenPath {
    pub excursions: Vec<LatticePath>,
    /// `nu[0] = 0`, `nu[j]` = level reached after `j` excursions.
    pub nu: Vec<i64>,
    /// `sigma[0] = 0`, `sigma[j]` = time at which `nu[j]` is first hit.
    pub sigma: Vec<usize>,
    pub seed: u64,
}

impl RegenPath {
    pub fn full_path(&self) -> LatticePath {
        let steps: Vec<i8> = self
            .excursions
            .iter()
            .flat_map(|e| e.steps().iter().copied())
            .collect();
        LatticePath::from_steps_unchecked(steps)
    }

    /// `sigma_{j+1} - sigma_j <= L0 (nu_{j+1} - nu_j - 1) + 1` for `j >= 1`.
    pub fn satisfies_length_bound(&self, l0: u32) -> bool {
        (1..self.nu.len().saturating_sub(1)).all(|j| {
            let dsig = (self.sigma[j + 1] - self.sigma[j]) as i64;
            let dnu = self.nu[j + 1] - self.nu[j];
            dsig <= i64::from(l0) * (dnu - 1) + 1
        })
    }
}

fn check_pair(first: &ExcursionTable, table: &ExcursionTable) -> Result<()> {
    if first.is_empty() || table.is_empty() {
        return Err(Error::InvalidParameter("excursion tables must be nonempty".into()));
    }
    if first.l0 != table.l0 || first.c4 != table.c4 {
        return Err(Error::InvalidParameter(
            "excursion tables disagree on L0 or c4".into(),
        ));
    }
    Ok(())
}

/// Draw the first excursion from `first` and `num_excursions` further
/// excursions i.i.d. from `table`.
pub fn sample_regen_path(
    first: &ExcursionTable,
    table: &ExcursionTable,
    num_excursions: usize,
    seed: u64,
) -> Result<RegenPath> {
    check_pair(first, table)?;
    let mut rng = stream_rng(seed, 0);
    let d_first = first.sampler()?;
    let d_rest = table.sampler()?;
    let mut excursions = Vec::with_capacity(num_excursions + 1);
    let mut nu = vec![0i64];
    let mut sigma = vec![0usize];
    let mut push = |e: &Excursion| {
        nu.push(nu.last().unwrap() + e.height);
        sigma.push(sigma.last().unwrap() + e.len());
        excursions.push(e.path.clone());
    };
    push(&first.entries[d_first.sample(&mut rng)]);
    for _ in 0..num_excursions {
        push(&table.entries[d_rest.sample(&mut rng)]);
    }
    Ok(RegenPath {
        excursions,
        nu,
        sigma,
        seed,
    })
}

/// Inputs of [`estimate_speed`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedConfig {
    pub l0: u32,
    pub c4: f64,
    pub m_max: usize,
    pub num_excursions: usize,
    pub num_replicas: usize,
    pub seed: u64,
    pub confidence: f64,
}

impl SpeedConfig {
    pub fn new(l0: u32, c4: f64, m_max: usize, seed: u64) -> Self {
        SpeedConfig {
            l0,
            c4,
            m_max,
            num_excursions: 100_000,
            num_replicas: 1,
            seed,
            confidence: 0.99,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub gamma_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    /// Excursions used, over all replicas (the first excursion excluded).
    pub num_excursions: usize,
    pub l0: u32,
    pub c4: f64,
    pub m_max: usize,
    pub seed: u64,
    pub replica_gammas: Vec<f64>,
    /// Exact speed of the truncated excursion law.
    pub table_gamma: f64,
    pub z_trunc: f64,
    pub tail_band_fraction: f64,
}

#[derive(Clone, Copy, Default)]
struct RatioSums {
    n: f64,
    h: f64,
    m: f64,
    hh: f64,
    mm: f64,
    hm: f64,
}

impl RatioSums {
    fn add(&mut self, h: f64, m: f64) {
        self.n += 1.0;
        self.h += h;
        self.m += m;
        self.hh += h * h;
        self.mm += m * m;
        self.hm += h * m;
    }

    fn merge(mut self, o: RatioSums) -> RatioSums {
        self.n += o.n;
        self.h += o.h;
        self.m += o.m;
        self.hh += o.hh;
        self.mm += o.mm;
        self.hm += o.hm;
        self
    }

    fn ratio(&self) -> f64 {
        self.h / self.m
    }

    /// Delta-method standard error of `mean(h) / mean(m)`.
    fn ratio_se(&self) -> f64 {
        let n = self.n;
        let (mh, mm) = (self.h / n, self.m / n);
        let var_h = (self.hh - n * mh * mh) / (n - 1.0);
        let var_m = (self.mm - n * mm * mm) / (n - 1.0);
        let cov = (self.hm - n * mh * mm) / (n - 1.0);
        let r = mh / mm;
        ((var_h - 2.0 * r * cov + r * r * var_m).max(0.0) / (n * mm * mm)).sqrt()
    }
}

pub fn estimate_speed_with_table(table: &ExcursionTable, config: &SpeedConfig) -> Result<SpeedEstimate> {
    if config.num_excursions < 2 || config.num_replicas == 0 {
        return Err(Error::InvalidParameter(
            "need at least two excursions and one replica".into(),
        ));
    }
    let dist = table.sampler()?;
    let per_replica: Vec<RatioSums> = (0..config.num_replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(config.seed, r as u64 + 1);
            let mut s = RatioSums::default();
            for _ in 0..config.num_excursions {
                let e = &table.entries[dist.sample(&mut rng)];
                s.add(e.height as f64, e.len() as f64);
            }
            s
        })
        .collect();
    let pooled = per_replica
        .iter()
        .copied()
        .fold(RatioSums::default(), RatioSums::merge);
    let gamma_hat = pooled.ratio();
    let z = normal_quantile(0.5 + config.confidence / 2.0);
    let half = z * pooled.ratio_se();
    Ok(SpeedEstimate {
        gamma_hat,
        ci_low: gamma_hat - half,
        ci_high: gamma_hat + half,
        confidence: config.confidence,
        num_excursions: config.num_excursions * config.num_replicas,
        l0: config.l0,
        c4: config.c4,
        m_max: config.m_max,
        seed: config.seed,
        replica_gammas: per_replica.iter().map(RatioSums::ratio).collect(),
        table_gamma: table.speed(),
        z_trunc: table.z_trunc,
        tail_band_fraction: table.tail_band_fraction,
    })
}

/// Speed `E[nu increment] / E[sigma increment]` over i.i.d. excursions after
/// the first, with a delta-method confidence interval.
pub fn estimate_speed(config: &SpeedConfig) -> Result<SpeedEstimate> {
    let table = build_excursion_table(config.l0, config.c4, config.m_max, ExcursionClass::Positive)?;
    estimate_speed_with_table(&table, config)
}

/// Visit counts for a walk of unbounded range, reset between attempts.
struct SiteCounts {
    counts: Vec<u8>,
    offset: i64,
    touched_lo: i64,
    touched_hi: i64,
}

impl SiteCounts {
    fn new(lo: i64, hi: i64) -> Self {
        SiteCounts {
            counts: vec![0; (hi - lo + 1) as usize],
            offset: -lo,
            touched_lo: 0,
            touched_hi: 0,
        }
    }

    /// Record a visit to `x` and return the new count.
    fn visit(&mut self, x: i64) -> u8 {
        if x + self.offset < 0 {
            let grow = self.counts.len().max((-(x + self.offset)) as usize + 1);
            let mut v = vec![0u8; grow];
            v.extend_from_slice(&self.counts);
            self.counts = v;
            self.offset += grow as i64;
        }
        let i = (x + self.offset) as usize;
        if i >= self.counts.len() {
            self.counts.resize(i + 1, 0);
        }
        self.touched_lo = self.touched_lo.min(x);
        self.touched_hi = self.touched_hi.max(x);
        self.counts[i] = self.counts[i].saturating_add(1);
        self.counts[i]
    }

    fn reset(&mut self) {
        let a = (self.touched_lo + self.offset) as usize;
        let b = (self.touched_hi + self.offset) as usize;
        self.counts[a..=b].iter_mut().for_each(|c| *c = 0);
        self.touched_lo = 0;
        self.touched_hi = 0;
    }
}

/// Exact draws from `P(· | B_r)` by rejection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectionSample {
    pub r: u32,
    pub l0: u32,
    pub seed: u64,
    pub attempts: u64,
    pub accepted: Vec<LatticePath>,
}

impl RejectionSample {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted.len() as f64 / self.attempts as f64
    }

    /// Binomial standard error of the acceptance rate.
    pub fn acceptance_se(&self) -> f64 {
        let p = self.acceptance_rate();
        (p * (1.0 - p) / self.attempts as f64).sqrt()
    }
}

/// One simple random walk run to `tau_r`, aborted the moment any site is
/// visited more than `L0` times.
fn attempt_b(r: i64, l0: u8, counts: &mut SiteCounts, rng: &mut impl Rng, steps: &mut Vec<i8>) -> bool {
    steps.clear();
    counts.reset();
    let mut pos = 0i64;
    loop {
        let step: i8 = if rng.gen::<bool>() { 1 } else { -1 };
        steps.push(step);
        pos += i64::from(step);
        if counts.visit(pos) > l0 {
            return false;
        }
        if pos == r {
            return true;
        }
    }
}

pub fn rejection_conditional(
    r: u32,
    l0: u32,
    num_accepted: usize,
    seed: u64,
    max_attempts: u64,
) -> Result<RejectionSample> {
    EventParams::new(l0, i64::from(r))?;
    let mut sample = RejectionSample {
        r,
        l0,
        seed,
        attempts: 0,
        accepted: Vec::with_capacity(num_accepted),
    };
    if r == 0 {
        sample.attempts = num_accepted as u64;
        sample.accepted = vec![LatticePath::empty(); num_accepted];
        return Ok(sample);
    }
    let mut rng = stream_rng(seed, u64::from(r));
    let mut counts = SiteCounts::new(-64, i64::from(r) + 1);
    let mut steps = Vec::new();
    let l0 = l0.min(254) as u8;
    while sample.accepted.len() < num_accepted {
        if sample.attempts >= max_attempts {
            return Err(Error::Timeout {
                accepted: sample.accepted.len(),
                attempts: sample.attempts,
            });
        }
        sample.attempts += 1;
        if attempt_b(i64::from(r), l0, &mut counts, &mut rng, &mut steps) {
            sample
                .accepted
                .push(LatticePath::from_steps_unchecked(steps.clone()));
        }
    }
    Ok(sample)
}

/// `P̂(cylinder | B_r)` for one `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderEstimate {
    pub r: u32,
    pub p_hat: f64,
    pub std_error: f64,
    pub accepted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderRow {
    pub prefix: Vec<i8>,
    /// The prefix alone already breaks the visit bound.
    pub forbidden: bool,
    pub q_value: f64,
    pub estimates: Vec<CylinderEstimate>,
    /// Successive estimates agree within three combined standard errors.
    pub stable: bool,
    pub monotone: bool,
    /// Last estimate within three standard errors of `q_value`.
    pub matches_q: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderDiagnostics {
    pub l0: u32,
    pub seed: u64,
    pub rows: Vec<CylinderRow>,
}

/// Estimate cylinder probabilities under `P(· | B_r)` for each `r` and
/// compare them with their `Q` values from the excursion tables.
#[allow(clippy::too_many_arguments)]
pub fn cylinder_diagnostics(
    cylinders: &[Vec<i8>],
    r_list: &[u32],
    l0: u32,
    num_accepted: usize,
    seed: u64,
    max_attempts: u64,
    first: &ExcursionTable,
    table: &ExcursionTable,
) -> Result<CylinderDiagnostics> {
    check_pair(first, table)?;
    for c in cylinders {
        if c.len() > 6 {
            return Err(Error::InvalidParameter(
                "cylinders longer than 6 steps are not supported".into(),
            ));
        }
        LatticePath::new(c.clone())?;
    }
    let samples = r_list
        .iter()
        .map(|&r| rejection_conditional(r, l0, num_accepted, seed, max_attempts))
        .collect::<Result<Vec<_>>>()?;
    let rows = cylinders
        .iter()
        .map(|prefix| {
            let forbidden =
                lattice::local_time_profile(&LatticePath::from_steps_unchecked(prefix.clone())).max() > l0;
            let estimates: Vec<CylinderEstimate> = samples
                .iter()
                .map(|s| {
                    // paths shorter than the prefix continue as a free walk
                    let mut rng = stream_rng(seed ^ 0x5eed, u64::from(s.r));
                    let hits = s
                        .accepted
                        .iter()
                        .filter(|p| {
                            let steps = p.steps();
                            prefix.iter().enumerate().all(|(i, &st)| match steps.get(i) {
                                Some(&x) => x == st,
                                None => (if rng.gen::<bool>() { 1 } else { -1 }) == st,
                            })
                        })
                        .count();
                    let n = s.accepted.len() as f64;
                    let p = hits as f64 / n;
                    CylinderEstimate {
                        r: s.r,
                        p_hat: p,
                        std_error: (p * (1.0 - p) / n).sqrt(),
                        accepted: s.accepted.len(),
                    }
                })
                .collect();
            let q_value = q_cylinder(first, table, prefix);
            let stable = estimates.windows(2).all(|w| {
                let se = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
                (w[0].p_hat - w[1].p_hat).abs() <= 3.0 * se.max(1e-12)
            });
            let monotone = estimates.windows(2).all(|w| w[1].p_hat >= w[0].p_hat)
                || estimates.windows(2).all(|w| w[1].p_hat <= w[0].p_hat);
            let matches_q = estimates
                .last()
                .map(|e| (e.p_hat - q_value).abs() <= 3.0 * e.std_error.max(1e-12))
                .unwrap_or(true);
            CylinderRow {
                prefix: prefix.clone(),
                forbidden,
                q_value,
                estimates,
                stable,
                monotone,
                matches_q,
            }
        })
        .collect();
    Ok(CylinderDiagnostics { l0, seed, rows })
}
