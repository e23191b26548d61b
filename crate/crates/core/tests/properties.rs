use lrdproc::{
    conditional_next, enumerate_all, joint_probability, EngineConfig, OccupancyPattern, Params, StrategyChoice,
};
use proptest::prelude::*;

fn params_strategy(m: usize) -> impl Strategy<Value = Params> {
    (
        prop::collection::vec(0.05f64..0.95, m),
        prop::collection::vec(0.02f64..0.9, m),
        prop::collection::vec(0.01f64..1.0, m),
    )
        .prop_filter_map("inadmissible", move |(h, raw_p, scale)| {
            let p: Vec<f64> = raw_p.iter().map(|v| v / m as f64).collect();
            let c: Vec<f64> = p.iter().zip(&scale).map(|(pk, s)| s * pk.min(1.0 - pk)).collect();
            Params::new(h, p, c).ok()
        })
}

fn any_params() -> impl Strategy<Value = Params> {
    (1usize..=3).prop_flat_map(params_strategy)
}

fn prob(p: &Params, pat: &OccupancyPattern) -> f64 {
    joint_probability(p, pat, StrategyChoice::Dp, &EngineConfig::default()).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn paths_are_positive_and_normalized(p in any_params()) {
        let n = if p.m() == 3 { 4 } else { 5 };
        let t = enumerate_all(&p, n).unwrap();
        prop_assert!(t.min() > 0.0);
        prop_assert!((t.total() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn shifting_a_pattern_keeps_its_probability(p in any_params(), shift in 1u64..50, seed in any::<u64>()) {
        let m = p.m() as u64;
        let states: Vec<usize> = (0..6).map(|i| ((seed >> (4 * i)) % (m + 1)) as usize).collect();
        let pat = OccupancyPattern::from_path(&states);
        let a = prob(&p, &pat);
        let b = prob(&p, &pat.shifted(shift));
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn summing_one_time_out_gives_the_shorter_law(p in any_params(), seed in any::<u64>(), drop in 1u64..=5) {
        let m = p.m();
        let mut pat = OccupancyPattern::new();
        for t in 1..=5u64 {
            if t != drop {
                pat = pat.with(t, ((seed >> (3 * t)) % (m as u64 + 1)) as usize);
            }
        }
        let sum: f64 = (0..=m)
            .map(|s| {
                let mut full = pat.clone();
                full.assign(drop, s).unwrap();
                prob(&p, &full)
            })
            .sum();
        prop_assert!((sum - prob(&p, &pat)).abs() <= 1e-12);
    }

    #[test]
    fn closed_form_conditional_when_no_base_state_intervenes(p in any_params(), seed in any::<u64>()) {
        let m = p.m();
        let ell = 1 + (seed % m as u64) as usize;
        let mut states: Vec<usize> = (0..4).map(|i| ((seed >> (5 * i + 7)) % (m as u64 + 1)) as usize).collect();
        states.push(ell);
        let n = states.len() as u64;
        let hist = OccupancyPattern::from_path(&states);
        let d = conditional_next(&p, &hist, n + 1, &EngineConfig::default()).unwrap();
        prop_assert!((d.prob(ell) - p.kernel(ell, 1)).abs() <= 1e-10);
        let total: f64 = d.probs.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
    }
}

/// The indicator of one state in a multi-state process has the law of the
/// single-state process with that state's parameters.
#[test]
fn one_state_indicator_is_the_single_state_process() {
    let p = Params::new(vec![0.8, 0.6], vec![0.2, 0.3], vec![0.1, 0.1]).unwrap();
    let n = 6usize;
    let table = enumerate_all(&p, n).unwrap();
    for k in 1..=2 {
        let single = Params::new(vec![p.hurst(k)], vec![p.prob(k)], vec![p.coupling(k)]).unwrap();
        let reduced = enumerate_all(&single, n).unwrap();
        let mut merged = vec![0.0; 1 << n];
        for code in 0..table.probs.len() {
            let bits = table.path(code).iter().fold(0usize, |acc, &s| acc * 2 + usize::from(s as usize == k));
            merged[bits] += table.probs[code];
        }
        for (a, b) in merged.iter().zip(&reduced.probs) {
            assert!((a - b).abs() <= 1e-12, "state {k}: {a} vs {b}");
        }
    }
}

#[test]
fn tainted_results_are_flagged() {
    let p = Params::new_unchecked(vec![0.8], vec![0.5], vec![0.6]).unwrap();
    let r = joint_probability(&p, &OccupancyPattern::parse_compact("101").unwrap(), StrategyChoice::Dp, &EngineConfig::default()).unwrap();
    assert!(r.tainted);
}
