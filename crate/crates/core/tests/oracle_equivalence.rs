use lrdproc::{
    d_star_dp, d_star_recursive, enumerate_all, joint_probability, EngineConfig, OccupancyPattern, Params,
    StrategyChoice,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn canonical() -> Params {
    Params::new(vec![0.8, 0.6], vec![0.2, 0.3], vec![0.1, 0.1]).unwrap()
}

fn three_states() -> Params {
    Params::new(vec![0.9, 0.5, 0.2], vec![0.1, 0.2, 0.25], vec![0.05, 0.1, 0.05]).unwrap()
}

fn check_all_paths(params: &Params, n: usize) {
    let cfg = EngineConfig::default();
    let table = enumerate_all(params, n).unwrap();
    for code in 0..table.probs.len() {
        let pat = OccupancyPattern::from_path(&table.path(code));
        let expect = table.probs[code];
        let dp = d_star_dp(params, &pat, &cfg).unwrap().value;
        let rec = d_star_recursive(params, &pat, &cfg).unwrap().value;
        let auto = joint_probability(params, &pat, StrategyChoice::Auto, &cfg).unwrap().value;
        for got in [dp, rec, auto] {
            assert!((got - expect).abs() <= 1e-10, "{} : {got} vs {expect}", table.sequence_string(code));
        }
    }
}

#[test]
fn every_path_matches_the_oracle_two_states() {
    for n in 1..=6 {
        check_all_paths(&canonical(), n);
    }
}

#[test]
fn every_path_matches_the_oracle_three_states() {
    for n in 1..=4 {
        check_all_paths(&three_states(), n);
    }
}

#[test]
fn partial_patterns_match_marginalized_tables() {
    // a partial pattern on 1..=5 is the sum of the total paths agreeing with it
    let p = canonical();
    let cfg = EngineConfig::default();
    let table = enumerate_all(&p, 5).unwrap();
    let pattern = OccupancyPattern::new().with(1, 0).with(3, 2).with(5, 0);
    let expect: f64 = (0..table.probs.len())
        .filter(|&code| {
            let path = table.path(code);
            path[0] == 0 && path[2] == 2 && path[4] == 0
        })
        .map(|code| table.probs[code])
        .sum();
    for s in [StrategyChoice::Recursive, StrategyChoice::Dp] {
        let got = joint_probability(&p, &pattern, s, &cfg).unwrap().value;
        assert!((got - expect).abs() <= 1e-12, "{s:?}: {got} vs {expect}");
    }
}

#[test]
fn recursion_matches_scan_on_random_patterns() {
    let params = [canonical(), three_states()];
    let cfg = EngineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for i in 0..200 {
        let p = &params[i % 2];
        let m = p.m();
        let mut pattern = OccupancyPattern::new();
        let mut zeros = 0;
        for t in 1..=40u64 {
            if rng.random_bool(0.35) {
                let mut s = rng.random_range(0..=m);
                if s == 0 && zeros == 12 {
                    s = 1;
                }
                zeros += usize::from(s == 0);
                pattern = pattern.with(t, s);
            }
        }
        let a = d_star_dp(p, &pattern, &cfg).unwrap().value;
        let b = d_star_recursive(p, &pattern, &cfg).unwrap().value;
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300) || (a - b).abs() <= 1e-14, "{pattern}: {a} vs {b}");
    }
}
