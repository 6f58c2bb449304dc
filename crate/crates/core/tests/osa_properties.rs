use cpecs::osa::greedy_osa_traced;
use cpecs::types::{optimal_decisions, DEFAULT_ENUMERATION_LIMIT};
use cpecs::{Oracle, OsaSpec, ParameterVector};
use proptest::prelude::*;

fn osa_case() -> impl Strategy<Value = (Vec<u64>, u64, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|m| {
        (
            prop::collection::vec(1u64..=3, m),
            m as u64..=12,
            prop::collection::vec((0u8..=10).prop_map(|v| v as f64 / 10.0), m),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn base_vector_never_exceeds_an_optimum((n, k, theta) in osa_case()) {
        let spec = OsaSpec::new(n, k).unwrap();
        let (_, scratch) = greedy_osa_traced(&spec, &theta);
        let pv = ParameterVector::new(theta).unwrap();
        for opt in optimal_decisions(&spec, &pv, DEFAULT_ENUMERATION_LIMIT).unwrap() {
            for (y, b) in opt.as_slice().iter().zip(&scratch.base) {
                prop_assert!(*y >= *b as f64, "optimum {} below base {:?}", opt, scratch.base);
            }
        }
    }

    #[test]
    fn budget_is_spent_and_increments_are_bounded((n, k, theta) in osa_case()) {
        let spec = OsaSpec::new(n, k).unwrap();
        let (y, scratch) = greedy_osa_traced(&spec, &theta);
        prop_assert_eq!(y.iter().sum::<u64>(), k);
        prop_assert!(y.iter().all(|v| *v >= 1));
        prop_assert_eq!(scratch.increments, k - scratch.base.iter().sum::<u64>());
        if scratch.alpha.iter().all(|a| *a >= 1.0) {
            let m = theta.len() as f64;
            let slack: f64 = scratch.slack.iter().sum();
            prop_assert!(scratch.increments as f64 <= (m - 1.0) * slack + m + 1e-9,
                "{} increments, slack {}", scratch.increments, slack);
        }
    }
}

#[test]
fn osa_maximizer_is_bi_monotone_on_the_tenth_lattice() {
    let grid: Vec<f64> = (0..=10).map(|v| v as f64 / 10.0).collect();
    for (n, k) in [(vec![1, 2, 1], 9u64), (vec![3, 1, 2], 12), (vec![1, 1, 1], 7)] {
        let spec = OsaSpec::new(n, k).unwrap();
        let mut theta = [0.0; 3];
        for &a in &grid {
            for &b in &grid {
                for axis in 0..3 {
                    for w in grid.windows(2) {
                        let others = [a, b];
                        let mut o = others.iter();
                        for (j, slot) in theta.iter_mut().enumerate() {
                            *slot = if j == axis { w[0] } else { *o.next().unwrap() };
                        }
                        let lo = spec.maximize(&theta).0;
                        theta[axis] = w[1];
                        let hi = spec.maximize(&theta).0;
                        for j in 0..3 {
                            let ok = if j == axis { hi[j] >= lo[j] } else { hi[j] <= lo[j] };
                            assert!(ok, "raising theta_{axis} at {theta:?}: {lo:?} -> {hi:?}");
                        }
                    }
                }
            }
        }
    }
}

/// Every m <= 3 case of the tenth grid with n_i <= 3 and k <= 12.
#[test]
fn greedy_matches_enumeration_exhaustively_for_three_groups() {
    let grid: Vec<f64> = (0..=10).map(|v| v as f64 / 10.0).collect();
    let mut cases = 0u64;
    for m in 1..=3usize {
        let mut n = vec![1u64; m];
        loop {
            for k in m as u64..=12 {
                let spec = OsaSpec::new(n.clone(), k).unwrap();
                let mut idx = vec![0usize; m];
                loop {
                    let theta: Vec<f64> = idx.iter().map(|i| grid[*i]).collect();
                    let pv = ParameterVector::new(theta).unwrap();
                    let greedy = cpecs::greedy_osa(&spec, &pv).unwrap();
                    let opt = optimal_decisions(&spec, &pv, DEFAULT_ENUMERATION_LIMIT).unwrap();
                    assert_eq!(greedy, opt[0], "n = {n:?}, k = {k}, theta = {pv:?}");
                    cases += 1;
                    if !advance(&mut idx, grid.len()) {
                        break;
                    }
                }
            }
            let mut digits: Vec<usize> = n.iter().map(|v| *v as usize - 1).collect();
            if !advance(&mut digits, 3) {
                break;
            }
            n = digits.iter().map(|d| *d as u64 + 1).collect();
        }
    }
    assert!(cases > 300_000);
}

fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}
