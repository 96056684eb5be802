//! Reproducible runs of every ltbound computation: one configuration in,
//! one self-describing JSON report out.

pub mod cache;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use ltbound_core::bessel::{self, QuadratureConfig};
use ltbound_core::diffusion::{self, Barrier};
use ltbound_core::exact::{self, EnumConfig, EnumRecord, RecordKind, DEFAULT_NODE_BUDGET};
use ltbound_core::regen::{self, SpeedConfig};
use ltbound_core::ExcursionClass;

use cache::{Cache, Lookup};

pub const TOOL: &str = "ltbound";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Git-style content hash: SHA-256 of `"blob <len>\0<content>"`.
pub fn content_hash(content: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()));
    h.update(content);
    hex::encode(h.finalize())
}

/// One subcommand with all of its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    Enumerate {
        l0: u32,
        n_max: u32,
        with_b: bool,
        max_len: u32,
        max_depth: u32,
    },
    RenewalCheck {
        l0: u32,
        n_max: u32,
    },
    Constants {
        l0: u32,
        n_max: u32,
        max_len: u32,
        max_depth: u32,
    },
    SampleQ {
        l0: u32,
        m_max: usize,
        num_excursions: usize,
        seed: u64,
        c4: Option<f64>,
        n_c4: u32,
    },
    Speed {
        l0: u32,
        m_max: usize,
        num_excursions: usize,
        num_replicas: usize,
        seed: u64,
        c4: Option<f64>,
        n_c4: u32,
        confidence: f64,
    },
    RejectRw {
        l0: u32,
        r: Vec<u32>,
        num_accepted: usize,
        seed: u64,
        max_attempts: u64,
        m_max: usize,
        c4: Option<f64>,
        n_c4: u32,
        max_len: u32,
        max_depth: u32,
    },
    Bessel {
        tolerance: f64,
        max_subdivisions: usize,
    },
    Gamma0 {
        bound_constants: Vec<f64>,
    },
    SdeErgodic {
        t_end: f64,
        dt: f64,
        replicas: usize,
        seed: u64,
        r0: f64,
    },
    RayKnight {
        a: f64,
        dt: f64,
        h: f64,
        num_paths: usize,
        seed: u64,
    },
    Dominance {
        f: Barrier,
        g: Barrier,
        t_end: f64,
        y0: f64,
        num_accepted: usize,
        seed: u64,
        steps: usize,
        alpha: f64,
    },
    RejectBm {
        a: Vec<f64>,
        dt: f64,
        h: f64,
        num_accepted: usize,
        seed: u64,
        max_attempts: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Enumerate { .. } => "enumerate",
            Command::RenewalCheck { .. } => "renewal-check",
            Command::Constants { .. } => "constants",
            Command::SampleQ { .. } => "sample-q",
            Command::Speed { .. } => "speed",
            Command::RejectRw { .. } => "reject-rw",
            Command::Bessel { .. } => "bessel",
            Command::Gamma0 { .. } => "gamma0",
            Command::SdeErgodic { .. } => "sde-ergodic",
            Command::RayKnight { .. } => "ray-knight",
            Command::Dominance { .. } => "dominance",
            Command::RejectBm { .. } => "reject-bm",
        }
    }

    /// Reject nonsensical numeric inputs before any work starts.
    pub fn validate(&self) -> Result<()> {
        fn pos_f(name: &str, v: f64) -> Result<()> {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} must be positive, got {v}");
            }
            Ok(())
        }
        fn pos_u(name: &str, v: u64) -> Result<()> {
            if v == 0 {
                bail!("{name} must be positive");
            }
            Ok(())
        }
        match self {
            Command::Enumerate { l0, n_max, .. }
            | Command::RenewalCheck { l0, n_max }
            | Command::Constants { l0, n_max, .. } => {
                pos_u("L0", u64::from(*l0))?;
                pos_u("n_max", u64::from(*n_max))?;
            }
            Command::SampleQ {
                l0, m_max, num_excursions, ..
            } => {
                pos_u("L0", u64::from(*l0))?;
                pos_u("m_max", *m_max as u64)?;
                pos_u("num_excursions", *num_excursions as u64)?;
            }
            Command::Speed {
                l0,
                m_max,
                num_excursions,
                num_replicas,
                confidence,
                ..
            } => {
                pos_u("L0", u64::from(*l0))?;
                pos_u("m_max", *m_max as u64)?;
                pos_u("num_excursions", *num_excursions as u64)?;
                pos_u("num_replicas", *num_replicas as u64)?;
                if !(*confidence > 0.0 && *confidence < 1.0) {
                    bail!("confidence must lie in (0, 1), got {confidence}");
                }
            }
            Command::RejectRw {
                l0, r, num_accepted, ..
            } => {
                pos_u("L0", u64::from(*l0))?;
                pos_u("num_accepted", *num_accepted as u64)?;
                if r.is_empty() {
                    bail!("at least one r is required");
                }
            }
            Command::Bessel {
                tolerance,
                max_subdivisions,
            } => {
                pos_f("tolerance", *tolerance)?;
                pos_u("max_subdivisions", *max_subdivisions as u64)?;
            }
            Command::Gamma0 { bound_constants } => {
                for c in bound_constants {
                    pos_f("bound constant", *c)?;
                }
            }
            Command::SdeErgodic {
                t_end, dt, replicas, ..
            } => {
                pos_f("T", *t_end)?;
                pos_f("dt", *dt)?;
                pos_u("replicas", *replicas as u64)?;
            }
            Command::RayKnight {
                a, dt, h, num_paths, ..
            } => {
                pos_f("a", *a)?;
                pos_f("dt", *dt)?;
                pos_f("h", *h)?;
                pos_u("num_paths", *num_paths as u64)?;
            }
            Command::Dominance {
                t_end,
                num_accepted,
                steps,
                ..
            } => {
                pos_f("T", *t_end)?;
                pos_u("num_accepted", *num_accepted as u64)?;
                pos_u("steps", *steps as u64)?;
            }
            Command::RejectBm {
                a, dt, h, num_accepted, ..
            } => {
                for v in a {
                    pos_f("a", *v)?;
                }
                pos_f("dt", *dt)?;
                pos_f("h", *h)?;
                pos_u("num_accepted", *num_accepted as u64)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// Where JSON reports and CSV artifacts are written, if anywhere.
    pub output_dir: Option<PathBuf>,
    /// Worker cap for the parallel parts; `None` uses every core.
    pub threads: Option<usize>,
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            output_dir: None,
            threads: None,
            cache_dir: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Computed,
    Cached,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config: Command,
    pub input_hash: String,
    pub provenance: Provenance,
    /// Identical across runs of the same configuration.
    pub results: Value,
    pub warnings: Vec<String>,
    pub artifacts: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

struct Outcome {
    results: Value,
    provenance: Provenance,
    warnings: Vec<String>,
    artifacts: Vec<PathBuf>,
}

impl Outcome {
    fn computed(results: Value) -> Self {
        Outcome {
            results,
            provenance: Provenance::Computed,
            warnings: Vec::new(),
            artifacts: Vec::new(),
        }
    }
}

/// Execute one configured subcommand.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.command.validate()?;
    let start = Instant::now();
    let input_hash = content_hash(&serde_json::to_string(&config.command)?);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building worker pool")?;
    let outcome = pool.install(|| dispatch(config))?;
    let mut report = RunReport {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        subcommand: config.command.name().to_string(),
        config: config.command.clone(),
        input_hash,
        provenance: outcome.provenance,
        results: outcome.results,
        warnings: outcome.warnings,
        artifacts: outcome.artifacts,
        wall_clock_seconds: 0.0,
    };
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    if let Some(dir) = &config.output_dir {
        let path = dir.join(format!("{}.json", report.subcommand));
        fs::write(&path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report)
}

fn c4_or_estimate(l0: u32, c4: Option<f64>, n_c4: u32) -> Result<f64> {
    match c4 {
        Some(c) => Ok(c),
        None => Ok(exact::estimate_c4(l0, n_c4)?.point),
    }
}

fn csv_writer(dir: &Path, name: &str) -> Result<(csv::Writer<fs::File>, PathBuf)> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((w, path))
}

fn dispatch(config: &RunConfig) -> Result<Outcome> {
    let out = config.output_dir.as_deref();
    match &config.command {
        Command::Enumerate {
            l0,
            n_max,
            with_b,
            max_len,
            max_depth,
        } => enumerate(config, *l0, *n_max, *with_b, *max_len, *max_depth),
        Command::RenewalCheck { l0, n_max } => {
            let report = exact::renewal_check(*n_max, *l0)?;
            Ok(Outcome::computed(json!({
                "all_hold": report.all_hold(),
                "report": report,
            })))
        }
        Command::Constants {
            l0,
            n_max,
            max_len,
            max_depth,
        } => {
            let cfg = EnumConfig::new(*l0, *n_max, *max_len, *max_depth)?;
            Ok(Outcome::computed(serde_json::to_value(exact::constants_report(&cfg)?)?))
        }
        Command::SampleQ {
            l0,
            m_max,
            num_excursions,
            seed,
            c4,
            n_c4,
        } => {
            let c = c4_or_estimate(*l0, *c4, *n_c4)?;
            let first = regen::build_excursion_table(*l0, c, *m_max, ExcursionClass::First)?;
            let table = regen::build_excursion_table(*l0, c, *m_max, ExcursionClass::Positive)?;
            let path = regen::sample_regen_path(&first, &table, *num_excursions, *seed)?;
            let full = path.full_path();
            let last = path.nu.len() - 1;
            let mut outcome = Outcome::computed(json!({
                "c4": c,
                "seed": seed,
                "num_excursions": num_excursions,
                "first_table_size": first.len(),
                "table_size": table.len(),
                "z_trunc_first": first.z_trunc,
                "z_trunc": table.z_trunc,
                "final_level": path.nu[last],
                "final_time": path.sigma[last],
                "empirical_speed": (path.nu[last] - path.nu[1]) as f64
                    / (path.sigma[last] - path.sigma[1]).max(1) as f64,
                "max_local_time": ltbound_core::lattice::local_time_profile(&full).max(),
                "length_bound_holds": path.satisfies_length_bound(*l0),
            }));
            if let Some(dir) = out {
                let (mut w, p) = csv_writer(dir, "regen_path.csv")?;
                w.write_record(["j", "nu_j", "sigma_j"])?;
                for (j, (nu, sigma)) in path.nu.iter().zip(&path.sigma).enumerate() {
                    w.write_record([j.to_string(), nu.to_string(), sigma.to_string()])?;
                }
                w.flush()?;
                outcome.artifacts.push(p);
            }
            Ok(outcome)
        }
        Command::Speed {
            l0,
            m_max,
            num_excursions,
            num_replicas,
            seed,
            c4,
            n_c4,
            confidence,
        } => {
            let c = c4_or_estimate(*l0, *c4, *n_c4)?;
            let cfg = SpeedConfig {
                l0: *l0,
                c4: c,
                m_max: *m_max,
                num_excursions: *num_excursions,
                num_replicas: *num_replicas,
                seed: *seed,
                confidence: *confidence,
            };
            let est = regen::estimate_speed(&cfg)?;
            let mut outcome = Outcome::computed(json!({
                "estimate": est,
                "exceeds_one_over_l0": est.ci_low > 1.0 / f64::from(*l0),
            }));
            if est.tail_band_fraction > 1e-3 {
                outcome.warnings.push(format!(
                    "longest length band carries {:.2e} of the table weight; raise m_max",
                    est.tail_band_fraction
                ));
            }
            Ok(outcome)
        }
        Command::RejectRw {
            l0,
            r,
            num_accepted,
            seed,
            max_attempts,
            m_max,
            c4,
            n_c4,
            max_len,
            max_depth,
        } => {
            let c = c4_or_estimate(*l0, *c4, *n_c4)?;
            let first = regen::build_excursion_table(*l0, c, *m_max, ExcursionClass::First)?;
            let table = regen::build_excursion_table(*l0, c, *m_max, ExcursionClass::Positive)?;
            let mut rows = Vec::new();
            for &ri in r {
                let s = regen::rejection_conditional(ri, *l0, *num_accepted, *seed, *max_attempts)?;
                let bracket = EnumConfig::new(*l0, ri, (*max_len).max(ri), *max_depth)
                    .and_then(|cfg| exact::prob_b(ri, &cfg))
                    .map(|b| json!([b.interval.lower.to_f64(), b.interval.upper.to_f64()]))
                    .unwrap_or(Value::Null);
                rows.push(json!({
                    "r": ri,
                    "attempts": s.attempts,
                    "accepted": s.accepted.len(),
                    "acceptance_rate": s.acceptance_rate(),
                    "acceptance_se": s.acceptance_se(),
                    "exact_bracket": bracket,
                }));
            }
            let cylinders: Vec<Vec<i8>> = vec![
                vec![1],
                vec![1, 1],
                vec![1, -1],
                vec![-1, 1, 1],
                vec![1, 1, -1, 1],
                vec![1, -1, 1, -1, 1],
            ];
            let diag = regen::cylinder_diagnostics(
                &cylinders,
                r,
                *l0,
                *num_accepted,
                *seed,
                *max_attempts,
                &first,
                &table,
            )?;
            let mut outcome = Outcome::computed(json!({
                "c4": c,
                "rejection": rows,
                "cylinders": diag,
            }));
            for row in &diag.rows {
                if !row.stable || !row.monotone {
                    outcome.warnings.push(format!(
                        "cylinder {:?}: estimates are {}",
                        row.prefix,
                        if row.stable { "non-monotone" } else { "not stable across r" }
                    ));
                }
            }
            Ok(outcome)
        }
        Command::Bessel {
            tolerance,
            max_subdivisions,
        } => {
            let cfg = QuadratureConfig {
                tolerance: *tolerance,
                max_subdivisions: *max_subdivisions,
                ..QuadratureConfig::default()
            };
            let constants = bessel::continuous_constants(&cfg)?;
            Ok(Outcome::computed(json!({
                "constants": constants,
                "schafheitlin": [
                    {"mu": 1.0, "z": constants.j0, "residual": bessel::schafheitlin_residual(1.0, constants.j0, &cfg)?},
                    {"mu": 0.0, "z": 1.0, "residual": bessel::schafheitlin_residual(0.0, 1.0, &cfg)?},
                    {"mu": 2.0, "z": 5.0, "residual": bessel::schafheitlin_residual(2.0, 5.0, &cfg)?},
                ],
                "orthogonality_residual": constants.orthogonality_residual,
                "m0_agreement": (constants.m0_ratio - constants.m0).abs(),
            })))
        }
        Command::Gamma0 { bound_constants } => {
            let root = bessel::find_j0();
            let gamma0 = bessel::compute_gamma0();
            let rescaled: Vec<Value> = bound_constants
                .iter()
                .map(|c| json!({"bound_constant": c, "speed": gamma0 / c}))
                .collect();
            Ok(Outcome::computed(json!({
                "gamma0": gamma0,
                "gamma0_display": format!("{gamma0:.4}"),
                "j0": root.j0,
                "j0_bracket": root.bracket,
                "m0": 1.0 / gamma0,
                "rescaled": rescaled,
            })))
        }
        Command::SdeErgodic {
            t_end,
            dt,
            replicas,
            seed,
            r0,
        } => {
            let mut cfg = diffusion::DiskErgodicConfig::new(*t_end, *dt, *replicas, *seed);
            cfg.r0 = *r0;
            let r = diffusion::disk_ergodic(&cfg)?;
            Ok(Outcome::computed(json!({
                "within_0_01": r.abs_error < 0.01,
                "report": r,
            })))
        }
        Command::RayKnight {
            a,
            dt,
            h,
            num_paths,
            seed,
        } => {
            let cfg = diffusion::RayKnightConfig {
                a: *a,
                dt: *dt,
                h: *h,
                num_paths: *num_paths,
                seed: *seed,
                occupation_paths: 20,
            };
            let r = diffusion::ray_knight_check(&cfg)?;
            let mut outcome = Outcome::computed(serde_json::to_value(&r)?);
            if let Some(dir) = out {
                let (mut w, p) = csv_writer(dir, "ray_knight_profile.csv")?;
                w.write_record([
                    "side", "x", "level", "mean", "expected_mean", "variance", "expected_variance",
                ])?;
                for (side, rows) in [("besq2", &r.besq_rows), ("feller", &r.feller_rows)] {
                    for row in rows {
                        w.write_record([
                            side.to_string(),
                            row.x.to_string(),
                            row.level.to_string(),
                            row.mean.to_string(),
                            row.expected_mean.to_string(),
                            row.variance.to_string(),
                            row.expected_variance.to_string(),
                        ])?;
                    }
                }
                w.flush()?;
                outcome.artifacts.push(p);
            }
            Ok(outcome)
        }
        Command::Dominance {
            f,
            g,
            t_end,
            y0,
            num_accepted,
            seed,
            steps,
            alpha,
        } => {
            let mut cfg = diffusion::DominanceConfig::new(*f, *g, *t_end, *y0, *num_accepted, *seed);
            cfg.steps = *steps;
            cfg.alpha = *alpha;
            Ok(Outcome::computed(serde_json::to_value(diffusion::dominance_test(&cfg)?)?))
        }
        Command::RejectBm {
            a,
            dt,
            h,
            num_accepted,
            seed,
            max_attempts,
        } => {
            let mut summaries = Vec::new();
            let mut accepted = Vec::new();
            for &ai in a {
                let r = diffusion::reject_bm_bounded_localtime(&diffusion::BoundedBmConfig {
                    a: ai,
                    dt: *dt,
                    h: *h,
                    num_accepted: *num_accepted,
                    seed: *seed,
                    max_attempts: *max_attempts,
                })?;
                summaries.push(json!({
                    "a": ai,
                    "attempts": r.attempts,
                    "acceptance_rate": r.acceptance_rate,
                    "mean_tau_over_a": r.mean_tau_over_a,
                    "mean_tau_over_a_se": r.mean_tau_over_a_se,
                    "mean_sup_local_time": r.mean_sup_local_time,
                    "mean_sup_local_time_se": r.mean_sup_local_time_se,
                }));
                accepted.push((ai, r.accepted));
            }
            let tau: Vec<f64> = summaries
                .iter()
                .map(|s| s["mean_tau_over_a"].as_f64().unwrap_or(f64::NAN))
                .collect();
            let mut outcome = Outcome::computed(json!({
                "m0": bessel::compute_gamma0().recip(),
                "tau_over_a_decreasing": tau.windows(2).all(|w| w[1] < w[0]),
                "runs": summaries,
            }));
            if let Some(dir) = out {
                let (mut w, p) = csv_writer(dir, "reject_bm.csv")?;
                w.write_record(["a", "tau", "sup_local_time"])?;
                for (ai, acc) in &accepted {
                    for x in acc {
                        w.write_record([ai.to_string(), x.tau.to_string(), x.sup_local_time.to_string()])?;
                    }
                }
                w.flush()?;
                outcome.artifacts.push(p);
            }
            Ok(outcome)
        }
    }
}

fn enumerate(
    config: &RunConfig,
    l0: u32,
    n_max: u32,
    with_b: bool,
    max_len: u32,
    max_depth: u32,
) -> Result<Outcome> {
    let key = content_hash(
        &json!({
            "table": "enumerate-v1",
            "l0": l0,
            "n_max": n_max,
            "with_b": with_b,
            "max_len": max_len,
            "max_depth": max_depth,
        })
        .to_string(),
    );
    let cache = Cache::resolve(config.cache_dir.as_deref());
    let mut warnings = Vec::new();
    match cache.lookup(&key)? {
        Lookup::Hit(results) => {
            return Ok(Outcome {
                results,
                provenance: Provenance::Cached,
                warnings,
                artifacts: Vec::new(),
            })
        }
        Lookup::Corrupt(why) => {
            let msg = format!("cache entry rejected, recomputing: {why}");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        Lookup::Miss => {}
    }
    let table = exact::confined_table(n_max, l0, DEFAULT_NODE_BUDGET)?;
    let mut records = Vec::new();
    for n in 0..=n_max {
        for (kind, value) in [
            (RecordKind::BPlus, &table.b_plus[n as usize]),
            (RecordKind::L, &table.irreducible[n as usize]),
        ] {
            records.push(EnumRecord {
                l0,
                n,
                kind,
                value: value.clone(),
                upper: None,
                config: None,
            });
        }
    }
    if with_b {
        let cfg = EnumConfig::new(l0, n_max, max_len, max_depth)?;
        for n in 0..=n_max {
            let b = exact::prob_b(n, &cfg)?;
            records.push(EnumRecord {
                l0,
                n,
                kind: RecordKind::B,
                value: b.interval.lower,
                upper: Some(b.interval.upper),
                config: Some(cfg.clone()),
            });
        }
    }
    let results = json!({ "l0": l0, "n_max": n_max, "records": records });
    cache.store(&key, &results)?;
    let mut outcome = Outcome::computed(results);
    outcome.warnings = warnings;
    if let Some(dir) = &config.output_dir {
        let (mut w, p) = csv_writer(dir, "enumerate.csv")?;
        w.write_record(["l0", "n", "kind", "numerator", "exponent", "upper_numerator", "upper_exponent"])?;
        for r in &records {
            let kind = match r.kind {
                RecordKind::BPlus => "B+",
                RecordKind::L => "L",
                RecordKind::B => "B",
            };
            let (un, ue) = match &r.upper {
                Some(u) => (u.numerator().to_string(), u.exponent().to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([
                r.l0.to_string(),
                r.n.to_string(),
                kind.to_string(),
                r.value.numerator().to_string(),
                r.value.exponent().to_string(),
                un,
                ue,
            ])?;
        }
        w.flush()?;
        outcome.artifacts.push(p);
    }
    Ok(outcome)
}

/// Machine-readable failure record.
pub fn error_record(subcommand: &str, err: &anyhow::Error) -> Value {
    let kind = match err.downcast_ref::<ltbound_core::Error>() {
        Some(ltbound_core::Error::InvalidParameter(_)) => "invalid_parameter",
        Some(ltbound_core::Error::Contract(_)) => "contract",
        Some(ltbound_core::Error::Budget { .. }) => "budget",
        Some(ltbound_core::Error::Domain { .. }) => "domain",
        Some(ltbound_core::Error::Quadrature { .. }) => "quadrature",
        Some(ltbound_core::Error::NoRoot) => "no_root",
        Some(ltbound_core::Error::Timeout { .. }) => "timeout",
        Some(ltbound_core::Error::StepCollapse { .. }) => "step_collapse",
        None if err.downcast_ref::<std::io::Error>().is_some() => "io",
        None => "config",
    };
    json!({
        "tool": TOOL,
        "version": VERSION,
        "subcommand": subcommand,
        "error": { "kind": kind, "message": format!("{err:#}") },
    })
}
