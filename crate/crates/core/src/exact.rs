//! Exhaustive enumeration of constrained walks and the exact probabilities
//! of `B_n^+`, `L_n` and (bracketed) `B_n`, together with the renewal
//! identity and the renewal-rate constants derived from them.
//!
//! Everything up to [`renewal_root`] is exact dyadic arithmetic. The float
//! boundary is `renewal_root` and [`constants_report`].

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicProb, ProbInterval};
use crate::error::{Error, Result};

/// Default cap on DFS node expansions.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// Truncation settings for the unconfined enumeration of `B_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumConfig {
    pub l0: u32,
    pub n_max: u32,
    /// Longest path enumerated when the walk may leave `(0, n)`.
    pub max_len: u32,
    /// Deepest level below 0 the walk may reach.
    pub max_depth: u32,
    pub node_budget: u64,
}

impl EnumConfig {
    pub fn new(l0: u32, n_max: u32, max_len: u32, max_depth: u32) -> Result<Self> {
        if l0 == 0 {
            return Err(Error::InvalidParameter("L0 must be at least 1".into()));
        }
        if max_len < n_max {
            return Err(Error::InvalidParameter(format!(
                "max_len ({max_len}) must be at least n_max ({n_max})"
            )));
        }
        if max_len > 120 {
            return Err(Error::InvalidParameter(format!(
                "max_len ({max_len}) exceeds the supported 120"
            )));
        }
        Ok(EnumConfig {
            l0,
            n_max,
            max_len,
            max_depth,
            node_budget: DEFAULT_NODE_BUDGET,
        })
    }

    pub fn with_budget(mut self, node_budget: u64) -> Self {
        self.node_budget = node_budget;
        self
    }
}

/// Number of enumerated paths per length, for `B_n^+` and its irreducible
/// part `L_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfinedCounts {
    pub b_plus: Vec<u128>,
    pub irreducible: Vec<u128>,
    pub nodes: u64,
}

struct Confined {
    n: usize,
    l0: u8,
    counts: Vec<u8>,
    /// interior levels visited at least twice
    doubled: usize,
    b_plus: Vec<u128>,
    irreducible: Vec<u128>,
    nodes: u64,
    budget: u64,
}

impl Confined {
    fn dfs(&mut self, pos: usize, len: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget {
                budget: self.budget,
            });
        }
        for next in [pos - 1, pos + 1] {
            if next == self.n {
                let m = len + 1;
                self.b_plus[m] += 1;
                if self.doubled == self.n - 1 {
                    self.irreducible[m] += 1;
                }
            } else if next >= 1 && self.counts[next] < self.l0 {
                self.counts[next] += 1;
                if self.counts[next] == 2 {
                    self.doubled += 1;
                }
                self.dfs(next, len + 1)?;
                if self.counts[next] == 2 {
                    self.doubled -= 1;
                }
                self.counts[next] -= 1;
            }
        }
        Ok(())
    }
}

/// Enumerate every `B_n^+` path. Such paths have length at most
/// `L0 (n - 1) + 1`, so the enumeration is complete.
pub fn confined_counts(n: u32, l0: u32, budget: u64) -> Result<ConfinedCounts> {
    if l0 == 0 {
        return Err(Error::InvalidParameter("L0 must be at least 1".into()));
    }
    let n = n as usize;
    if n == 0 {
        return Ok(ConfinedCounts {
            b_plus: vec![1],
            irreducible: vec![0],
            nodes: 0,
        });
    }
    let max_len = l0 as usize * (n - 1) + 1;
    let mut st = Confined {
        n,
        l0: l0.min(u32::from(u8::MAX)) as u8,
        counts: vec![0; n],
        doubled: 0,
        b_plus: vec![0; max_len + 1],
        irreducible: vec![0; max_len + 1],
        nodes: 0,
        budget,
    };
    if n == 1 {
        st.b_plus[1] = 1;
        st.irreducible[1] = 1;
        return Ok(ConfinedCounts {
            b_plus: st.b_plus,
            irreducible: st.irreducible,
            nodes: 1,
        });
    }
    // the first step is forced to +1
    st.counts[1] = 1;
    st.dfs(1, 1)?;
    Ok(ConfinedCounts {
        b_plus: st.b_plus,
        irreducible: st.irreducible,
        nodes: st.nodes,
    })
}

/// `P(B_n^+)`, with `P(B_0^+) = 1`.
pub fn prob_b_plus(n: u32, l0: u32) -> Result<DyadicProb> {
    let c = confined_counts(n, l0, DEFAULT_NODE_BUDGET)?;
    Ok(DyadicProb::from_length_counts(&c.b_plus))
}

/// `P(L_n)`, with `P(L_0) = 0` and `P(L_1) = 1/2`.
pub fn prob_l(n: u32, l0: u32) -> Result<DyadicProb> {
    let c = confined_counts(n, l0, DEFAULT_NODE_BUDGET)?;
    Ok(DyadicProb::from_length_counts(&c.irreducible))
}

/// Exact `P(B_n^+)` and `P(L_n)` for `n = 0..=n_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfinedTable {
    pub l0: u32,
    pub b_plus: Vec<DyadicProb>,
    pub irreducible: Vec<DyadicProb>,
}

pub fn confined_table(n_max: u32, l0: u32, budget: u64) -> Result<ConfinedTable> {
    let mut b_plus = Vec::with_capacity(n_max as usize + 1);
    let mut irreducible = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let c = confined_counts(n, l0, budget)?;
        b_plus.push(DyadicProb::from_length_counts(&c.b_plus));
        irreducible.push(DyadicProb::from_length_counts(&c.irreducible));
    }
    Ok(ConfinedTable {
        l0,
        b_plus,
        irreducible,
    })
}

/// Bracket on `P(B_n)` together with how it was obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BEnumeration {
    pub n: u32,
    pub interval: ProbInterval,
    /// Mass of `B_n` paths found within the truncation.
    pub found: DyadicProb,
    /// Mass of paths still alive (no violation, `n` not reached) at `max_len`.
    pub alive_at_cap: DyadicProb,
    /// Mass of alive paths stepping below `-max_depth`.
    pub depth_breach: DyadicProb,
    /// Window bound `(1 - 2^-(2L0+2))^floor(j / (2L0+2))` on surviving `j`
    /// steps, summed over the binding truncations.
    pub geometric_tail: DyadicProb,
    pub nodes: u64,
}

struct Unconfined {
    n: i64,
    l0: u8,
    lo: i64,
    max_len: usize,
    counts: Vec<u8>,
    found: Vec<u128>,
    alive_at_cap: u128,
    breach: Vec<u128>,
    nodes: u64,
    budget: u64,
}

impl Unconfined {
    fn idx(&self, x: i64) -> usize {
        (x - self.lo) as usize
    }

    fn dfs(&mut self, pos: i64, len: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget {
                budget: self.budget,
            });
        }
        if len == self.max_len {
            self.alive_at_cap += 1;
            return Ok(());
        }
        for next in [pos - 1, pos + 1] {
            if next == self.n {
                self.found[len + 1] += 1;
            } else if next < self.lo {
                self.breach[len + 1] += 1;
            } else {
                let i = self.idx(next);
                if self.counts[i] < self.l0 {
                    self.counts[i] += 1;
                    self.dfs(next, len + 1)?;
                    self.counts[i] -= 1;
                }
            }
        }
        Ok(())
    }
}

fn geometric_window_bound(j: u32, l0: u32) -> DyadicProb {
    let w = 2 * l0 + 2;
    let per_window = DyadicProb::pow2_neg(w)
        .complement()
        .expect("2^-w <= 1");
    per_window.pow(j / w)
}

/// Bracket `P(B_n)` by enumerating every walk that reaches `n` within
/// `max_len` steps without dipping below `-max_depth`.
///
/// Every `B_n` path missed by the truncation has a prefix that is either
/// still alive at `max_len` or alive when it first steps below `-max_depth`;
/// those prefix masses are computed exactly. The window bound on survival is
/// also evaluated and the tighter of the two tails is used.
pub fn prob_b(n: u32, config: &EnumConfig) -> Result<BEnumeration> {
    if n == 0 {
        return Ok(BEnumeration {
            n,
            interval: ProbInterval::point(DyadicProb::one()),
            found: DyadicProb::one(),
            alive_at_cap: DyadicProb::zero(),
            depth_breach: DyadicProb::zero(),
            geometric_tail: DyadicProb::zero(),
            nodes: 0,
        });
    }
    if config.l0 == 0 {
        return Err(Error::InvalidParameter("L0 must be at least 1".into()));
    }
    let max_len = config.max_len as usize;
    let lo = -(i64::from(config.max_depth));
    let n_i = i64::from(n);
    let mut st = Unconfined {
        n: n_i,
        l0: config.l0.min(u32::from(u8::MAX)) as u8,
        lo,
        max_len,
        counts: vec![0; (n_i - lo + 1) as usize],
        found: vec![0; max_len + 1],
        alive_at_cap: 0,
        breach: vec![0; max_len + 1],
        nodes: 0,
        budget: config.node_budget,
    };
    st.dfs(0, 0)?;

    let found = DyadicProb::from_length_counts(&st.found);
    let mut cap = vec![0u128; max_len + 1];
    cap[max_len] = st.alive_at_cap;
    let alive_at_cap = DyadicProb::from_length_counts(&cap);
    let depth_breach = DyadicProb::from_length_counts(&st.breach);

    let mut geometric_tail = if st.alive_at_cap > 0 {
        geometric_window_bound(config.max_len, config.l0)
    } else {
        DyadicProb::zero()
    };
    if !depth_breach.is_zero() {
        geometric_tail = &geometric_tail + &geometric_window_bound(config.max_depth + 1, config.l0);
    }
    let exact_tail = &alive_at_cap + &depth_breach;
    let tail = if exact_tail <= geometric_tail {
        exact_tail
    } else {
        geometric_tail.clone()
    };
    let upper = (&found + &tail).clamp_to_one();
    Ok(BEnumeration {
        n,
        interval: ProbInterval::new(found.clone(), upper),
        found,
        alive_at_cap,
        depth_breach,
        geometric_tail,
        nodes: st.nodes,
    })
}

/// One row of the renewal identity `P(B_n^+) = Σ_j P(L_j) P(B_{n-j}^+)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenewalRow {
    pub n: u32,
    pub lhs: DyadicProb,
    pub rhs: DyadicProb,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenewalReport {
    pub l0: u32,
    pub rows: Vec<RenewalRow>,
}

impl RenewalReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

pub fn renewal_check_table(table: &ConfinedTable) -> RenewalReport {
    let n_max = table.b_plus.len().saturating_sub(1);
    let rows = (1..=n_max)
        .map(|n| {
            let rhs: DyadicProb = (1..=n)
                .map(|j| &table.irreducible[j] * &table.b_plus[n - j])
                .sum();
            let lhs = table.b_plus[n].clone();
            RenewalRow {
                n: n as u32,
                holds: lhs == rhs,
                lhs,
                rhs,
            }
        })
        .collect();
    RenewalReport {
        l0: table.l0,
        rows,
    }
}

pub fn renewal_check(n_max: u32, l0: u32) -> Result<RenewalReport> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let table = confined_table(n_max, l0, DEFAULT_NODE_BUDGET)?;
    Ok(renewal_check_table(&table))
}

const ROOT_LO: f64 = 1e-9;
const ROOT_TOL: f64 = 1e-10;

/// Root `c` of `Σ_{n>=1} e^{c n} p_l[n] = 1` on `(1e-9, log 2]`, where
/// `p_l[0]` is ignored. The sum is increasing in `c`, so bisection applies.
pub fn renewal_root(p_l: &[f64]) -> Result<f64> {
    let f = |c: f64| -> f64 {
        p_l.iter()
            .enumerate()
            .skip(1)
            .map(|(n, &p)| (c * n as f64).exp() * p)
            .sum::<f64>()
            - 1.0
    };
    let mut lo = ROOT_LO;
    let mut hi = std::f64::consts::LN_2;
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo >= 0.0 || f_hi < 0.0 {
        return Err(Error::NoRoot);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Truncated renewal roots, one per truncation level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C4Estimate {
    pub l0: u32,
    pub n_max: u32,
    /// Root at `n_max`. Bounds the renewal rate from above.
    pub point: f64,
    /// Root at `ceil(n_max / 2)`; never below `point`.
    pub conservative_high: f64,
    /// `(n, root(n))` for every `n` in `ceil(n_max/2)..=n_max` with a root.
    pub roots: Vec<(u32, f64)>,
    /// Whether `roots` is nonincreasing in `n`.
    pub monotone: bool,
}

fn l_floats(table: &ConfinedTable, upto: usize) -> Vec<f64> {
    table.irreducible[..=upto].iter().map(|p| p.to_f64()).collect()
}

pub fn estimate_c4_from_table(table: &ConfinedTable) -> Result<C4Estimate> {
    let n_max = table.irreducible.len().saturating_sub(1);
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let half = n_max.div_ceil(2);
    let point = renewal_root(&l_floats(table, n_max))?;
    let conservative_high = renewal_root(&l_floats(table, half))?;
    let roots: Vec<(u32, f64)> = (half..=n_max)
        .filter_map(|n| renewal_root(&l_floats(table, n)).ok().map(|c| (n as u32, c)))
        .collect();
    let monotone = roots.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(C4Estimate {
        l0: table.l0,
        n_max: n_max as u32,
        point,
        conservative_high,
        roots,
        monotone,
    })
}

pub fn estimate_c4(l0: u32, n_max: u32) -> Result<C4Estimate> {
    let table = confined_table(n_max, l0, DEFAULT_NODE_BUDGET)?;
    estimate_c4_from_table(&table)
}

/// Estimates and brackets for the renewal constants at one `L0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub l0: u32,
    /// `[max_n -log(upper P(B_n))/n, root(n_max)]`.
    pub c4_bracket: [f64; 2],
    pub c4: C4Estimate,
    /// `Σ n e^{c n} P(L_n)`
    pub mu_hat: f64,
    pub c5_hat: f64,
    pub c6_hat: f64,
    pub c7_bracket: [f64; 2],
    /// `u_n = e^{c n} P(B_n^+)`, `n = 0..=n_max`.
    pub u: Vec<f64>,
    /// `f_n = e^{c n} P(L_n)`, `n = 0..=n_max`.
    pub f: Vec<f64>,
    /// `(max - min) / mean` of `u_n` over the last third of the range.
    pub u_tail_spread: f64,
    /// Smallest `P(B_n^+) / upper(P(B_n))` over the computed `n`.
    pub min_ratio: f64,
    pub b_brackets: Vec<BEnumeration>,
    pub truncation: EnumConfig,
}

pub fn constants_report(config: &EnumConfig) -> Result<ConstantsReport> {
    if config.n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let table = confined_table(config.n_max, config.l0, config.node_budget)?;
    let c4 = estimate_c4_from_table(&table)?;
    let c = c4.point;
    let n_max = config.n_max as usize;

    let f: Vec<f64> = (0..=n_max)
        .map(|n| (c * n as f64).exp() * table.irreducible[n].to_f64())
        .collect();
    let u: Vec<f64> = (0..=n_max)
        .map(|n| (c * n as f64).exp() * table.b_plus[n].to_f64())
        .collect();
    let mu_hat: f64 = f.iter().enumerate().map(|(n, fnv)| n as f64 * fnv).sum();

    let start = n_max - n_max / 3;
    let tail = &u[start.max(1)..=n_max];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let u_tail_spread = (hi - lo) / mean;

    let b_brackets = (1..=config.n_max)
        .map(|n| prob_b(n, config))
        .collect::<Result<Vec<_>>>()?;
    let min_ratio = b_brackets
        .iter()
        .map(|b| table.b_plus[b.n as usize].to_f64() / b.interval.upper.to_f64())
        .fold(f64::INFINITY, f64::min);
    let c4_low = b_brackets
        .iter()
        .map(|b| -b.interval.upper.ln() / f64::from(b.n))
        .fold(0.0, f64::max);

    let last = b_brackets.last().expect("n_max >= 1");
    let scale = (c * f64::from(last.n)).exp();
    let c5_hat = table.b_plus[last.n as usize].to_f64() / last.interval.midpoint();
    let c7_bracket = [
        scale * last.interval.lower.to_f64(),
        scale * last.interval.upper.to_f64(),
    ];

    Ok(ConstantsReport {
        l0: config.l0,
        c4_bracket: [c4_low, c],
        c6_hat: 1.0 / mu_hat,
        c4,
        mu_hat,
        c5_hat,
        c7_bracket,
        u,
        f,
        u_tail_spread,
        min_ratio,
        b_brackets,
        truncation: config.clone(),
    })
}

/// Which enumerated probability a persisted record holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RecordKind {
    #[serde(rename = "B+")]
    BPlus,
    #[serde(rename = "L")]
    L,
    #[serde(rename = "B")]
    B,
}

/// Persisted enumeration result. `value` is the exact probability for `B+`
/// and `L`, and the lower end of the bracket for `B` (with `upper` set).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumRecord {
    pub l0: u32,
    pub n: u32,
    pub kind: RecordKind,
    #[serde(flatten)]
    pub value: DyadicProb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<DyadicProb>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<EnumConfig>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn d(n: u64, e: u32) -> DyadicProb {
        DyadicProb::new(BigUint::from(n), e)
    }

    #[test]
    fn b_plus_small_values() {
        assert_eq!(prob_b_plus(0, 2).unwrap(), DyadicProb::one());
        for l0 in 1..=4 {
            assert_eq!(prob_b_plus(1, l0).unwrap(), d(1, 1));
        }
        assert_eq!(prob_b_plus(2, 2).unwrap(), d(1, 2));
        assert_eq!(prob_b_plus(3, 2).unwrap(), d(5, 5));
        // with L0 = 1 only the straight path survives
        assert_eq!(prob_b_plus(5, 1).unwrap(), d(1, 5));
    }

    #[test]
    fn irreducible_small_values() {
        assert_eq!(prob_l(0, 2).unwrap(), DyadicProb::zero());
        assert_eq!(prob_l(1, 2).unwrap(), d(1, 1));
        assert_eq!(prob_l(2, 2).unwrap(), DyadicProb::zero());
        assert_eq!(prob_l(3, 2).unwrap(), d(1, 5));
        assert_eq!(prob_l(4, 1).unwrap(), DyadicProb::zero());
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(
            confined_counts(8, 3, 10),
            Err(Error::Budget { budget: 10 })
        );
        let cfg = EnumConfig::new(2, 3, 20, 5).unwrap().with_budget(5);
        assert!(matches!(prob_b(3, &cfg), Err(Error::Budget { .. })));
    }

    #[test]
    fn b_bracket_small() {
        let cfg = EnumConfig::new(2, 1, 3, 3).unwrap();
        let b = prob_b(1, &cfg).unwrap();
        assert_eq!(b.found, d(5, 3));
        assert!(b.interval.upper > b.interval.lower);
        let b0 = prob_b(0, &cfg).unwrap();
        assert_eq!(b0.interval, ProbInterval::point(DyadicProb::one()));
    }

    #[test]
    fn renewal_examples() {
        let rep = renewal_check(3, 2).unwrap();
        assert!(rep.all_hold());
        assert_eq!(rep.rows[0].lhs, d(1, 1));
        assert_eq!(rep.rows[2].lhs, d(5, 5));
        assert!(renewal_check(0, 2).is_err());
    }

    #[test]
    fn root_degenerate_and_failure() {
        let c = renewal_root(&[0.0, 0.5]).unwrap();
        assert!((c - std::f64::consts::LN_2).abs() < 1e-9);
        // mass already 1 at c -> 0: no root in the open interval
        assert_eq!(renewal_root(&[0.0, 1.0]), Err(Error::NoRoot));
    }

    #[test]
    fn config_validation() {
        assert!(EnumConfig::new(2, 10, 5, 3).is_err());
        assert!(EnumConfig::new(0, 1, 5, 3).is_err());
        assert!(EnumConfig::new(2, 1, 500, 3).is_err());
    }

    #[test]
    fn record_wire_format() {
        let rec = EnumRecord {
            l0: 2,
            n: 3,
            kind: RecordKind::BPlus,
            value: d(5, 5),
            upper: None,
            config: None,
        };
        let v: serde_json::Value = serde_json::to_value(&rec).unwrap();
        assert_eq!(v["kind"], "B+");
        assert_eq!(v["numerator"], "5");
        assert_eq!(v["exponent"], 5);
        let back: EnumRecord = serde_json::from_value(v).unwrap();
        assert_eq!(back, rec);
    }
}
