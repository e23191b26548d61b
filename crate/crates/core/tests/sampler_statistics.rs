use lrdproc::analytics::{chi_square_against, covariance_report, mean_estimate};
use lrdproc::{enumerate_all, sample_batch, Params, SamplerConfig};

fn canonical() -> Params {
    Params::new(vec![0.8, 0.6], vec![0.2, 0.3], vec![0.1, 0.1]).unwrap()
}

#[test]
fn short_paths_follow_the_exact_law() {
    let p = canonical();
    let table = enumerate_all(&p, 5).unwrap();
    let batch = sample_batch(&p, 5, 30_000, 17, 1, &SamplerConfig::default()).unwrap();
    let t = chi_square_against(&table, &batch.paths);
    assert!(t.passes(1e-3), "{t:?}");
}

#[test]
fn three_state_paths_follow_the_exact_law() {
    let p = Params::new(vec![0.9, 0.5, 0.2], vec![0.1, 0.2, 0.25], vec![0.05, 0.1, 0.05]).unwrap();
    let table = enumerate_all(&p, 4).unwrap();
    let batch = sample_batch(&p, 4, 30_000, 23, 1, &SamplerConfig::default()).unwrap();
    let t = chi_square_against(&table, &batch.paths);
    assert!(t.passes(1e-3), "{t:?}");
}

#[test]
fn marginals_and_short_lag_covariances() {
    let p = canonical();
    let batch = sample_batch(&p, 30, 20_000, 29, 1, &SamplerConfig::default()).unwrap();
    for k in 0..=2u8 {
        let freq: Vec<f64> = batch
            .paths
            .iter()
            .map(|path| path.states.iter().filter(|&&s| s == k).count() as f64 / 30.0)
            .collect();
        let est = mean_estimate(&freq);
        assert!(est.within(p.prob(k as usize), 4.0), "state {k}: {est:?}");
    }
    let report = covariance_report(&p, &batch.paths, &[(1, 1), (1, 2), (0, 0)], &[1, 2, 5]).unwrap();
    for c in report {
        assert!(c.estimate.within(c.theoretical, 4.0), "{c:?}");
    }
}
