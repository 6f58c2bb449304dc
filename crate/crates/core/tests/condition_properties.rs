use cpecs::condition::candidates;
use cpecs::{ConditionStrategy, ConfidenceBox, Oracle, OsaSpec, TopK};
use proptest::prelude::*;

const GRID: ConditionStrategy = ConditionStrategy::GridScan { resolution: 21 };

fn unit_box(m: usize) -> impl Strategy<Value = ConfidenceBox> {
    prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), m).prop_map(|pairs| {
        let (lo, hi) = pairs.iter().map(|(a, b)| (a.min(*b), a.max(*b))).unzip();
        ConfidenceBox::new(lo, hi).unwrap()
    })
}

fn oracles() -> Vec<Box<dyn Oracle>> {
    vec![
        Box::new(TopK::best_arm(2).unwrap()),
        Box::new(TopK::best_arm(3).unwrap()),
        Box::new(TopK::new(3, 2).unwrap()),
        Box::new(OsaSpec::new(vec![1, 2], 7).unwrap()),
        Box::new(OsaSpec::new(vec![2, 1, 3], 10).unwrap()),
    ]
}

/// Shrinks every side of `bx` toward a point inside it by the fractions `f`.
fn shrink(bx: &ConfidenceBox, f: &[(f64, f64)]) -> ConfidenceBox {
    let (lo, hi) = bx
        .lower()
        .iter()
        .zip(bx.upper())
        .zip(f)
        .map(|((l, u), (a, b))| {
            let w = u - l;
            let nl = l + w * a.min(*b);
            let nu = u - w * (1.0 - a.max(*b));
            (nl, nu.max(nl))
        })
        .unzip();
    ConfidenceBox::new(lo, hi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn strategies_agree_on_bi_monotone_oracles(b2 in unit_box(2), b3 in unit_box(3)) {
        for oracle in oracles() {
            let bx = if oracle.arm_count() == 2 { &b2 } else { &b3 };
            let exact = candidates(ConditionStrategy::BiMonotone, oracle.as_ref(), bx).unwrap();
            let corners = candidates(ConditionStrategy::CornerEnumeration, oracle.as_ref(), bx).unwrap();
            let grid = candidates(GRID, oracle.as_ref(), bx).unwrap();
            prop_assert_eq!(&exact, &corners, "{} on {:?}", oracle.name(), bx);
            prop_assert_eq!(&exact, &grid, "{} on {:?}", oracle.name(), bx);
        }
    }

    #[test]
    fn shrinking_never_creates_candidates(
        bx in unit_box(3),
        f in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 3),
    ) {
        let inner = shrink(&bx, &f);
        for oracle in oracles().into_iter().filter(|o| o.arm_count() == 3) {
            let outer = candidates(ConditionStrategy::BiMonotone, oracle.as_ref(), &bx).unwrap();
            let narrow = candidates(ConditionStrategy::BiMonotone, oracle.as_ref(), &inner).unwrap();
            prop_assert!(narrow.iter().all(|i| outer.contains(i)), "{:?} -> {:?}", outer, narrow);
        }
    }

    #[test]
    fn no_candidates_means_one_decision_on_the_lattice(bx in unit_box(2)) {
        let bx = shrink(&bx, &[(0.3, 0.5), (0.4, 0.6)]);
        for oracle in oracles().into_iter().filter(|o| o.arm_count() == 2) {
            if !candidates(GRID, oracle.as_ref(), &bx).unwrap().is_empty() {
                continue;
            }
            let first = oracle.maximize(bx.lower());
            for a in 0..=20 {
                for b in 0..=20 {
                    let theta: Vec<f64> = [a, b]
                        .iter()
                        .enumerate()
                        .map(|(i, s)| bx.lower()[i] + (bx.upper()[i] - bx.lower()[i]) * *s as f64 / 20.0)
                        .collect();
                    prop_assert_eq!(&oracle.maximize(&theta), &first);
                }
            }
        }
    }
}
