use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};

use ltbound_cli::{error_record, run, Command, RunConfig};
use ltbound_core::diffusion::Barrier;

const AFTER_HELP: &str = "\
CSV artifacts (written only with --output-dir):
  enumerate.csv           l0,n,kind,numerator,exponent,upper_numerator,upper_exponent
                          value = numerator / 2^exponent; upper_* only for kind B
  regen_path.csv          j,nu_j,sigma_j   (regeneration levels and times)
  ray_knight_profile.csv  side,x,level,mean,expected_mean,variance,expected_variance
  reject_bm.csv           a,tau,sup_local_time   (one row per accepted path)

Every run also writes <output-dir>/<subcommand>.json, the report printed on stdout.
Barriers for `dominance`: inf | <constant> | lin:<intercept>,<slope>";

#[derive(Parser)]
#[command(name = "ltbound", version, about = "Walks and Brownian paths with bounded local time", after_help = AFTER_HELP)]
struct Cli {
    /// Directory for JSON reports and CSV artifacts.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Enumeration cache directory (default: $LTBOUND_CACHE_DIR or .ltbound-cache).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Excursions {
    #[arg(long = "L0")]
    l0: u32,
    /// Longest excursion kept in the truncated tables.
    #[arg(long, default_value_t = 24)]
    m_max: usize,
    /// Use this value of c4 instead of the exact-enumeration estimate.
    #[arg(long)]
    c4: Option<f64>,
    /// Horizon of the enumeration that estimates c4.
    #[arg(long, default_value_t = 12)]
    n_c4: u32,
}

#[derive(Subcommand)]
enum Sub {
    /// Exact probabilities of B+_n, L_n and optionally bracketed B_n.
    Enumerate {
        #[arg(long = "L0")]
        l0: u32,
        #[arg(long)]
        n_max: u32,
        #[arg(long)]
        with_b: bool,
        #[arg(long, default_value_t = 40)]
        max_len: u32,
        #[arg(long, default_value_t = 8)]
        max_depth: u32,
    },
    /// Verify the renewal identity for every n up to n_max.
    RenewalCheck {
        #[arg(long = "L0")]
        l0: u32,
        #[arg(long)]
        n_max: u32,
    },
    /// Decay-rate brackets and derived constants.
    Constants {
        #[arg(long = "L0")]
        l0: u32,
        #[arg(long)]
        n_max: u32,
        #[arg(long, default_value_t = 40)]
        max_len: u32,
        #[arg(long, default_value_t = 8)]
        max_depth: u32,
    },
    /// Sample one regenerative path.
    SampleQ {
        #[command(flatten)]
        ex: Excursions,
        #[arg(long, default_value_t = 1000)]
        num_excursions: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Estimate the asymptotic speed with a confidence interval.
    Speed {
        #[command(flatten)]
        ex: Excursions,
        #[arg(long, default_value_t = 100_000)]
        num_excursions: usize,
        #[arg(long, default_value_t = 1)]
        num_replicas: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
    },
    /// Rejection-sample walks conditioned on B_r and compare cylinders with Q.
    RejectRw {
        #[command(flatten)]
        ex: Excursions,
        /// Comma-separated horizons.
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<u32>,
        #[arg(long, default_value_t = 2000)]
        num_accepted: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 200_000_000)]
        max_attempts: u64,
        #[arg(long, default_value_t = 40)]
        max_len: u32,
        #[arg(long, default_value_t = 8)]
        max_depth: u32,
    },
    /// Bessel root, identities and the continuum constants.
    Bessel {
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        #[arg(long, default_value_t = 2000)]
        max_subdivisions: usize,
    },
    /// The limiting speed constant.
    Gamma0 {
        /// Rescale the speed by these local-time bounds.
        #[arg(long, value_delimiter = ',')]
        bound_constants: Vec<f64>,
    },
    /// Time average of |X|^2 for the conditioned disk diffusion.
    SdeErgodic {
        #[arg(long = "T", default_value_t = 10_000.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long, default_value_t = 8)]
        replicas: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        r0: f64,
    },
    /// Local-time profile of Brownian motion against BESQ2 and Feller laws.
    RayKnight {
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        /// Lattice spacing (default 10 sqrt(dt)).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        num_paths: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Stochastic dominance of BESQ0 conditioned under two barriers.
    Dominance {
        #[arg(long, value_parser = parse_barrier)]
        f: Barrier,
        #[arg(long, value_parser = parse_barrier)]
        g: Barrier,
        #[arg(long = "T", default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.1)]
        y0: f64,
        #[arg(long, default_value_t = 2000)]
        num_accepted: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
    },
    /// Brownian motion to level a with local time bounded by 1.
    RejectBm {
        /// Comma-separated target levels.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        a: Vec<f64>,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        /// Lattice spacing (default 10 sqrt(dt)).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        num_accepted: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 200_000_000)]
        max_attempts: u64,
    },
}

fn parse_barrier(s: &str) -> Result<Barrier> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") {
        return Ok(Barrier::Infinite);
    }
    if let Some(rest) = s.strip_prefix("lin:") {
        let (a, b) = rest
            .split_once(',')
            .ok_or_else(|| anyhow!("expected lin:<intercept>,<slope>"))?;
        return Ok(Barrier::Linear {
            intercept: a.trim().parse()?,
            slope: b.trim().parse()?,
        });
    }
    match s.parse::<f64>() {
        Ok(value) => Ok(Barrier::Constant { value }),
        Err(_) => bail!("unrecognised barrier {s:?}"),
    }
}

fn default_h(dt: f64, h: Option<f64>) -> f64 {
    h.unwrap_or(10.0 * dt.sqrt())
}

impl Sub {
    fn into_command(self) -> Command {
        match self {
            Sub::Enumerate {
                l0,
                n_max,
                with_b,
                max_len,
                max_depth,
            } => Command::Enumerate {
                l0,
                n_max,
                with_b,
                max_len,
                max_depth,
            },
            Sub::RenewalCheck { l0, n_max } => Command::RenewalCheck { l0, n_max },
            Sub::Constants {
                l0,
                n_max,
                max_len,
                max_depth,
            } => Command::Constants {
                l0,
                n_max,
                max_len,
                max_depth,
            },
            Sub::SampleQ {
                ex,
                num_excursions,
                seed,
            } => Command::SampleQ {
                l0: ex.l0,
                m_max: ex.m_max,
                num_excursions,
                seed,
                c4: ex.c4,
                n_c4: ex.n_c4,
            },
            Sub::Speed {
                ex,
                num_excursions,
                num_replicas,
                seed,
                confidence,
            } => Command::Speed {
                l0: ex.l0,
                m_max: ex.m_max,
                num_excursions,
                num_replicas,
                seed,
                c4: ex.c4,
                n_c4: ex.n_c4,
                confidence,
            },
            Sub::RejectRw {
                ex,
                r,
                num_accepted,
                seed,
                max_attempts,
                max_len,
                max_depth,
            } => Command::RejectRw {
                l0: ex.l0,
                r,
                num_accepted,
                seed,
                max_attempts,
                m_max: ex.m_max,
                c4: ex.c4,
                n_c4: ex.n_c4,
                max_len,
                max_depth,
            },
            Sub::Bessel {
                tolerance,
                max_subdivisions,
            } => Command::Bessel {
                tolerance,
                max_subdivisions,
            },
            Sub::Gamma0 { bound_constants } => Command::Gamma0 { bound_constants },
            Sub::SdeErgodic {
                t_end,
                dt,
                replicas,
                seed,
                r0,
            } => Command::SdeErgodic {
                t_end,
                dt,
                replicas,
                seed,
                r0,
            },
            Sub::RayKnight {
                a,
                dt,
                h,
                num_paths,
                seed,
            } => Command::RayKnight {
                a,
                dt,
                h: default_h(dt, h),
                num_paths,
                seed,
            },
            Sub::Dominance {
                f,
                g,
                t_end,
                y0,
                num_accepted,
                seed,
                steps,
                alpha,
            } => Command::Dominance {
                f,
                g,
                t_end,
                y0,
                num_accepted,
                seed,
                steps,
                alpha,
            },
            Sub::RejectBm {
                a,
                dt,
                h,
                num_accepted,
                seed,
                max_attempts,
            } => Command::RejectBm {
                a,
                dt,
                h: default_h(dt, h),
                num_accepted,
                seed,
                max_attempts,
            },
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = cli.command.into_command();
    let name = command.name();
    let config = RunConfig {
        command,
        output_dir: cli.output_dir,
        threads: cli.threads,
        cache_dir: cli.cache_dir,
    };
    if let Some(dir) = &config.output_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            let err = anyhow::Error::from(e).context(format!("creating {}", dir.display()));
            eprintln!("{}", error_record(name, &err));
            return ExitCode::from(2);
        }
    }
    match run(&config) {
        Ok(report) => match serde_json::to_string_pretty(&report) {
            Ok(s) => {
                println!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}", error_record(name, &e.into()));
                ExitCode::FAILURE
            }
        },
        Err(err) => {
            eprintln!("{}", error_record(name, &err));
            ExitCode::FAILURE
        }
    }
}
