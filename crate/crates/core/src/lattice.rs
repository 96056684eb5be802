//! Nearest-neighbour lattice paths and the discrete events built on them.
//!
//! Local time counts visits at times `1..=m` only: the starting point is not
//! a visit. Every predicate in this module, and every enumerator built on
//! top of it, uses this convention, so e.g. the one-step path `(+1)` has
//! local time 0 at the origin.

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite simple random walk path started at 0, stored as its steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LatticePath {
    steps: Vec<i8>,
}

impl LatticePath {
    pub fn new(steps: Vec<i8>) -> Result<Self> {
        if let Some(bad) = steps.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::InvalidParameter(format!(
                "lattice steps must be +1 or -1, got {bad}"
            )));
        }
        Ok(LatticePath { steps })
    }

    /// Steps already known to be ±1.
    pub(crate) fn from_steps_unchecked(steps: Vec<i8>) -> Self {
        debug_assert!(steps.iter().all(|s| *s == 1 || *s == -1));
        LatticePath { steps }
    }

    pub fn empty() -> Self {
        LatticePath::default()
    }

    pub fn steps(&self) -> &[i8] {
        &self.steps
    }

    /// Number of steps `m`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `S_0 = 0, S_1, ..., S_m`.
    pub fn positions(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut s = 0i64;
        out.push(s);
        for &st in &self.steps {
            s += i64::from(st);
            out.push(s);
        }
        out
    }

    pub fn end(&self) -> i64 {
        self.steps.iter().map(|&s| i64::from(s)).sum()
    }

    pub fn concat(&self, other: &LatticePath) -> LatticePath {
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        LatticePath { steps }
    }

    /// Prefix made of the first `k` steps.
    pub fn prefix(&self, k: usize) -> LatticePath {
        LatticePath {
            steps: self.steps[..k].to_vec(),
        }
    }

    /// Steps `k..`, re-rooted at 0 (the shift `T` evaluated at time `k`).
    pub fn suffix(&self, k: usize) -> LatticePath {
        LatticePath {
            steps: self.steps[k..].to_vec(),
        }
    }
}

/// Visit counts `L(m, x) = #{1 <= j <= m : S_j = x}`.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LocalTimeProfile {
    counts: BTreeMap<i64, u32>,
}

impl LocalTimeProfile {
    pub fn get(&self, site: i64) -> u32 {
        self.counts.get(&site).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }

    pub fn max(&self) -> u32 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.counts.iter().map(|(&x, &c)| (x, c))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Visit bound `L0` and target level `n` of the events `B_n`, `B_n^+`, `L_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventParams {
    pub l0: u32,
    pub n: i64,
}

impl EventParams {
    /// `l0 = 1` is accepted (with a warning) for exploration; the regenerative
    /// theory needs `l0 >= 2`.
    pub fn new(l0: u32, n: i64) -> Result<Self> {
        if l0 == 0 {
            return Err(Error::InvalidParameter("L0 must be at least 1".into()));
        }
        if n < 0 {
            return Err(Error::InvalidParameter(format!(
                "target level must be nonnegative, got {n}"
            )));
        }
        if l0 == 1 {
            warn!("L0 = 1 lies outside the regime L0 >= 2 covered by the regenerative theory");
        }
        Ok(EventParams { l0, n })
    }
}

pub fn local_time_profile(path: &LatticePath) -> LocalTimeProfile {
    let mut counts = BTreeMap::new();
    for &x in &path.positions()[1..] {
        *counts.entry(x).or_insert(0) += 1;
    }
    LocalTimeProfile { counts }
}

/// Smallest `i >= 1` with `S_i = level`.
pub fn first_hit(path: &LatticePath, level: i64) -> Option<usize> {
    let mut s = 0i64;
    for (i, &st) in path.steps.iter().enumerate() {
        s += i64::from(st);
        if s == level {
            return Some(i + 1);
        }
    }
    None
}

fn within_visit_bound(path: &LatticePath, l0: u32) -> bool {
    local_time_profile(path).max() <= l0
}

/// `B_n`: the path ends at its first visit to `n` and no site is visited more
/// than `L0` times along the way. `B_0` is the empty path.
pub fn is_b(path: &LatticePath, params: &EventParams) -> bool {
    let m = path.len();
    if params.n == 0 {
        return m == 0;
    }
    first_hit(path, params.n) == Some(m) && within_visit_bound(path, params.l0)
}

/// `B_n^+`: `B_n` with the path strictly inside `(0, n)` before its last step.
pub fn is_b_plus(path: &LatticePath, params: &EventParams) -> bool {
    if !is_b(path, params) {
        return false;
    }
    if params.n == 0 {
        return true;
    }
    let pos = path.positions();
    pos[1..pos.len() - 1]
        .iter()
        .all(|&x| x > 0 && x < params.n)
}

/// `L_n`: a `B_n^+` path with no level `0 < k < n` at which it splits into a
/// `B_k^+` prefix and a shifted `B_{n-k}^+` suffix.
pub fn is_irreducible(path: &LatticePath, params: &EventParams) -> Result<bool> {
    if !is_b_plus(path, params) {
        return Err(Error::Contract(format!(
            "irreducibility queried for a path outside B+_{} (L0 = {})",
            params.n, params.l0
        )));
    }
    for k in 1..params.n {
        let Some(tau) = first_hit(path, k) else {
            continue;
        };
        let head = EventParams { l0: params.l0, n: k };
        let tail = EventParams {
            l0: params.l0,
            n: params.n - k,
        };
        if is_b_plus(&path.prefix(tau), &head) && is_b_plus(&path.suffix(tau), &tail) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Regeneration levels `(nu, sigma)` certifiable inside the finite prefix:
/// levels `nu >= 1` first hit at `sigma < m` and never revisited, with every
/// later position strictly above `nu`. The final position is never
/// certifiable.
pub fn regeneration_levels(path: &LatticePath) -> Vec<(i64, usize)> {
    let pos = path.positions();
    let m = path.len();
    if m < 2 {
        return Vec::new();
    }
    // later_min[i] = min(pos[i+1..=m])
    let mut later_min = vec![i64::MAX; m + 1];
    for i in (0..m).rev() {
        later_min[i] = later_min[i + 1].min(pos[i + 1]);
    }
    let mut out = Vec::new();
    let mut running_max = 0i64;
    for i in 1..m {
        if pos[i] > running_max {
            running_max = pos[i];
            if later_min[i] > pos[i] {
                out.push((pos[i], i));
            }
        }
    }
    out
}

/// Excursion classes for the regenerative decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExcursionClass {
    /// `M_m`: strictly positive after time 0. Excursions after the first.
    Positive,
    /// `M~_m`: may dip to or below 0. The first excursion.
    First,
}

impl ExcursionClass {
    pub fn allows_negative(self) -> bool {
        matches!(self, ExcursionClass::First)
    }
}

/// Membership of a path in `M_m` (or `M~_m`): nearest-neighbour from 0,
/// visit bound `L0`, strict final maximum, and no interior index `j` with
/// everything before below `S_j` and everything after above it.
pub fn in_excursion_class(path: &LatticePath, l0: u32, class: ExcursionClass) -> bool {
    let m = path.len();
    if m == 0 {
        return false;
    }
    let pos = path.positions();
    let top = pos[m];
    if pos[..m].iter().any(|&x| x >= top) {
        return false;
    }
    if !class.allows_negative() && pos[1..].iter().any(|&x| x <= 0) {
        return false;
    }
    if !within_visit_bound(path, l0) {
        return false;
    }
    let mut before_max = vec![i64::MIN; m + 1];
    for j in 1..=m {
        before_max[j] = before_max[j - 1].max(pos[j - 1]);
    }
    let mut after_min = vec![i64::MAX; m + 1];
    for j in (0..m).rev() {
        after_min[j] = after_min[j + 1].min(pos[j + 1]);
    }
    !(1..m).any(|j| before_max[j] < pos[j] && pos[j] < after_min[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(steps: &[i8]) -> LatticePath {
        LatticePath::new(steps.to_vec()).unwrap()
    }

    fn ev(l0: u32, n: i64) -> EventParams {
        EventParams::new(l0, n).unwrap()
    }

    #[test]
    fn rejects_bad_steps() {
        assert!(LatticePath::new(vec![1, 2]).is_err());
        assert!(LatticePath::new(vec![0]).is_err());
        assert!(EventParams::new(0, 3).is_err());
        assert!(EventParams::new(2, -1).is_err());
        assert!(EventParams::new(1, 3).is_ok());
    }

    #[test]
    fn local_time_examples() {
        assert!(local_time_profile(&LatticePath::empty()).is_empty());
        let one = local_time_profile(&p(&[1]));
        assert_eq!(one.get(1), 1);
        assert_eq!(one.get(0), 0);
        let prof = local_time_profile(&p(&[-1, 1, 1]));
        assert_eq!(
            prof.iter().collect::<Vec<_>>(),
            vec![(-1, 1), (0, 1), (1, 1)]
        );
        assert_eq!(prof.total(), 3);
    }

    #[test]
    fn first_hit_examples() {
        assert_eq!(first_hit(&p(&[1, 1]), 2), Some(2));
        assert_eq!(first_hit(&p(&[-1, 1, 1]), 1), Some(3));
        assert_eq!(first_hit(&p(&[1, -1]), 2), None);
        assert_eq!(first_hit(&p(&[1, -1]), 0), Some(2));
    }

    #[test]
    fn b_plus_examples() {
        assert!(is_b_plus(&p(&[1]), &ev(2, 1)));
        assert!(!is_b_plus(&p(&[1, -1, 1, 1]), &ev(2, 2)));
        assert!(is_b_plus(&p(&[1, 1, -1, 1, 1]), &ev(2, 3)));
        assert!(!is_b_plus(&p(&[1, 1, -1, 1, 1]), &ev(1, 3)));
        // must end at the first visit
        assert!(!is_b_plus(&p(&[1, 1, -1, 1]), &ev(2, 2)));
        assert!(is_b_plus(&LatticePath::empty(), &ev(2, 0)));
    }

    #[test]
    fn b_allows_negative_excursions() {
        assert!(is_b(&p(&[-1, 1, 1]), &ev(2, 1)));
        assert!(!is_b_plus(&p(&[-1, 1, 1]), &ev(2, 1)));
        // 0 visited three times after time 0
        assert!(!is_b(&p(&[-1, 1, -1, 1, -1, 1, 1]), &ev(2, 1)));
        assert!(is_b(&p(&[-1, 1, -1, 1, -1, 1, 1]), &ev(3, 1)));
    }

    #[test]
    fn irreducible_examples() {
        assert_eq!(is_irreducible(&p(&[1]), &ev(2, 1)), Ok(true));
        assert_eq!(is_irreducible(&p(&[1, 1]), &ev(2, 2)), Ok(false));
        assert_eq!(is_irreducible(&p(&[1, 1, -1, 1, 1]), &ev(2, 3)), Ok(true));
        assert!(matches!(
            is_irreducible(&p(&[1, -1, 1]), &ev(2, 1)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn regeneration_examples() {
        assert_eq!(regeneration_levels(&p(&[1, 1, 1])), vec![(1, 1), (2, 2)]);
        assert!(regeneration_levels(&p(&[1, -1, 1, 1])).is_empty());
        let two = p(&[1, 1, -1, 1, 1]).concat(&p(&[1]));
        assert_eq!(regeneration_levels(&two), vec![(3, 5)]);
        assert!(regeneration_levels(&LatticePath::empty()).is_empty());
    }

    #[test]
    fn excursion_class_examples() {
        use ExcursionClass::*;
        assert!(in_excursion_class(&p(&[1]), 2, Positive));
        assert!(in_excursion_class(&p(&[1]), 2, First));
        assert!(in_excursion_class(&p(&[-1, 1, 1]), 2, First));
        assert!(!in_excursion_class(&p(&[-1, 1, 1]), 2, Positive));
        assert!(!in_excursion_class(&p(&[1, 1]), 2, Positive));
        assert!(in_excursion_class(&p(&[1, 1, -1, 1, 1]), 2, Positive));
        assert!(!in_excursion_class(&p(&[1, 1, -1, 1, 1]), 1, Positive));
        // final point must be a strict maximum
        assert!(!in_excursion_class(&p(&[1, -1, 1]), 2, First));
        assert!(!in_excursion_class(&LatticePath::empty(), 2, First));
    }
}
