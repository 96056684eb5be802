use std::collections::HashMap;

use ltbound_core::lattice::{
    first_hit, in_excursion_class, is_b, is_b_plus, is_irreducible, local_time_profile,
    regeneration_levels,
};
use ltbound_core::{EventParams, ExcursionClass, LatticePath};
use proptest::prelude::*;

/// Every ±1 sequence of exactly `len` steps.
fn all_paths(len: usize) -> impl Iterator<Item = Vec<i8>> {
    (0u64..1 << len).map(move |bits| {
        (0..len)
            .map(|i| if bits >> i & 1 == 1 { 1 } else { -1 })
            .collect()
    })
}

fn positions(steps: &[i8]) -> Vec<i64> {
    let mut p = vec![0i64];
    for &s in steps {
        p.push(p.last().unwrap() + i64::from(s));
    }
    p
}

fn naive_counts(steps: &[i8]) -> HashMap<i64, u32> {
    let mut c = HashMap::new();
    for &x in &positions(steps)[1..] {
        *c.entry(x).or_insert(0) += 1;
    }
    c
}

/// Straight transcription of the `B_n^+` definition.
fn naive_b_plus(steps: &[i8], l0: u32, n: i64) -> bool {
    let p = positions(steps);
    let m = steps.len();
    if n == 0 {
        return m == 0;
    }
    if m == 0 || p[m] != n {
        return false;
    }
    (1..m).all(|i| p[i] > 0 && p[i] < n) && naive_counts(steps).values().all(|&c| c <= l0)
}

fn split_points(steps: &[i8], l0: u32, n: i64) -> Vec<i64> {
    let p = positions(steps);
    (1..n)
        .filter(|&k| {
            let t = p.iter().position(|&x| x == k).unwrap();
            naive_b_plus(&steps[..t], l0, k) && naive_b_plus(&steps[t..], l0, n - k)
        })
        .collect()
}

#[test]
fn spec_examples() {
    let p = |s: &[i8]| LatticePath::new(s.to_vec()).unwrap();
    assert!(local_time_profile(&LatticePath::empty()).is_empty());
    let prof = local_time_profile(&p(&[-1, 1, 1]));
    assert_eq!((prof.get(-1), prof.get(0), prof.get(1)), (1, 1, 1));
    assert_eq!(first_hit(&p(&[1, 1]), 2), Some(2));
    assert_eq!(first_hit(&p(&[-1, 1, 1]), 1), Some(3));
    assert_eq!(first_hit(&p(&[1, -1]), 2), None);
    let ev = |l0, n| EventParams::new(l0, n).unwrap();
    assert!(is_b_plus(&p(&[1]), &ev(2, 1)));
    assert!(is_b_plus(&p(&[1, 1, -1, 1, 1]), &ev(2, 3)));
    assert!(is_irreducible(&p(&[1]), &ev(2, 1)).unwrap());
    assert!(!is_irreducible(&p(&[1, 1]), &ev(2, 2)).unwrap());
    assert!(is_irreducible(&p(&[1, 1, -1, 1, 1]), &ev(2, 3)).unwrap());
    assert!(is_irreducible(&p(&[1, -1, 1]), &ev(2, 1)).is_err());
    assert!(regeneration_levels(&p(&[1, -1, 1, 1])).is_empty());
    let levels: Vec<i64> = regeneration_levels(&p(&[1, 1, 1])).iter().map(|l| l.0).collect();
    assert_eq!(levels, vec![1, 2]);
    // heights 3 and 1
    let two = p(&[1, 1, -1, 1, 1, 1]);
    let levels: Vec<i64> = regeneration_levels(&two).iter().map(|l| l.0).collect();
    assert_eq!(levels, vec![3]);
    assert!(in_excursion_class(&p(&[1]), 2, ExcursionClass::Positive));
    assert!(in_excursion_class(&p(&[1]), 2, ExcursionClass::First));
    assert!(in_excursion_class(&p(&[-1, 1, 1]), 2, ExcursionClass::First));
    assert!(!in_excursion_class(&p(&[-1, 1, 1]), 2, ExcursionClass::Positive));
    assert!(!in_excursion_class(&p(&[1, 1]), 2, ExcursionClass::First));
}

#[test]
fn predicates_match_brute_force() {
    for l0 in [2u32, 3] {
        for n in 0..=5i64 {
            let ev = EventParams::new(l0, n).unwrap();
            let max_len = (l0 as i64 * (n - 1).max(0) + 1) as usize;
            for len in 0..=max_len + 2 {
                for steps in all_paths(len) {
                    let path = LatticePath::new(steps.clone()).unwrap();
                    let naive = naive_b_plus(&steps, l0, n);
                    assert_eq!(is_b_plus(&path, &ev), naive, "{steps:?} l0={l0} n={n}");
                    if naive {
                        assert!(is_b(&path, &ev));
                        assert!(len <= max_len);
                        let splits = split_points(&steps, l0, n);
                        assert_eq!(is_irreducible(&path, &ev).unwrap(), splits.is_empty());
                    }
                }
            }
        }
    }
}

/// Each `B_n^+` path factors uniquely as an irreducible head followed by a
/// shifted `B^+` tail: the first split point.
#[test]
fn unique_first_decomposition() {
    for l0 in [2u32, 3] {
        for n in 1..=6i64 {
            let max_len = (l0 as i64 * (n - 1) + 1) as usize;
            for len in 1..=max_len {
                for steps in all_paths(len) {
                    if !naive_b_plus(&steps, l0, n) {
                        continue;
                    }
                    let heads: Vec<i64> = (1..=n)
                        .filter(|&k| {
                            let p = positions(&steps);
                            let t = p.iter().position(|&x| x == k).unwrap();
                            naive_b_plus(&steps[..t], l0, k)
                                && split_points(&steps[..t], l0, k).is_empty()
                                && (k == n || naive_b_plus(&steps[t..], l0, n - k))
                        })
                        .collect();
                    assert_eq!(heads.len(), 1, "{steps:?}");
                }
            }
        }
    }
}

#[test]
fn excursion_classes_match_definition() {
    let l0 = 2;
    for len in 1..=9 {
        for steps in all_paths(len) {
            let path = LatticePath::new(steps.clone()).unwrap();
            let p = positions(&steps);
            let h = p[len];
            let strict_max = h >= 1 && p[..len].iter().all(|&x| x < h);
            let bounded = naive_counts(&steps).values().all(|&c| c <= l0);
            let dense = (1..h).all(|x| naive_counts(&steps).get(&x).copied().unwrap_or(0) >= 2);
            let first = strict_max && bounded && dense;
            let positive = first && p[1..].iter().all(|&x| x > 0);
            assert_eq!(in_excursion_class(&path, l0, ExcursionClass::First), first, "{steps:?}");
            assert_eq!(in_excursion_class(&path, l0, ExcursionClass::Positive), positive, "{steps:?}");
            if positive {
                let ev = EventParams::new(l0, h).unwrap();
                assert!(is_irreducible(&path, &ev).unwrap());
            }
        }
    }
}

fn steps_strategy() -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 0..40)
}

proptest! {
    #[test]
    fn profile_total_is_length(steps in steps_strategy()) {
        let path = LatticePath::new(steps.clone()).unwrap();
        let prof = local_time_profile(&path);
        prop_assert_eq!(prof.total(), steps.len() as u64);
        let naive = naive_counts(&steps);
        for (x, c) in prof.iter() {
            prop_assert_eq!(naive[&x], c);
        }
    }

    #[test]
    fn class_inclusions(steps in steps_strategy(), l0 in 2u32..4) {
        let path = LatticePath::new(steps).unwrap();
        if in_excursion_class(&path, l0, ExcursionClass::Positive) {
            prop_assert!(in_excursion_class(&path, l0, ExcursionClass::First));
            let ev = EventParams::new(l0, path.end()).unwrap();
            prop_assert!(is_b_plus(&path, &ev));
            prop_assert!(is_irreducible(&path, &ev).unwrap());
        }
    }

    #[test]
    fn regeneration_levels_are_visited_once(steps in steps_strategy()) {
        let path = LatticePath::new(steps.clone()).unwrap();
        let p = positions(&steps);
        let levels = regeneration_levels(&path);
        for w in levels.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
        }
        for (nu, sigma) in levels {
            prop_assert_eq!(first_hit(&path, nu), Some(sigma));
            prop_assert_eq!(p.iter().filter(|&&x| x == nu).count(), 1);
            prop_assert!(p[sigma + 1..].iter().all(|&x| x > nu));
        }
    }
}
