use marw::walk::codes::MatrixCode;
use marw::walk::sampler::{memory_pmf, sample_matrix_index};
use marw::walk::MemorySampler;
use marw::{ModelParams, RngStream, SequenceCache};

const DRAWS: usize = 200_000;

/// Pearson statistic against `expected` probabilities, with a bound of mean + 5 sd.
fn chi_square(counts: &[u64], expected: &[f64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let stat = counts
        .iter()
        .zip(expected)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let df = expected.iter().filter(|&&p| p > 0.0).count() as f64 - 1.0;
    (stat, df + 5.0 * (2.0 * df).sqrt())
}

#[test]
fn recalled_time_follows_the_memory_law() {
    for &beta in &[0.0, 0.5, 1.0, 3.7] {
        let params = ModelParams::new(2, 0.5, beta).unwrap();
        let cache = SequenceCache::new(&params, 100).unwrap();
        let sampler = MemorySampler::for_beta(beta);
        let mut rng = RngStream::new(21, beta.to_bits());
        for n in [1usize, 2, 7, 40] {
            let mut counts = vec![0u64; n + 1];
            for _ in 0..DRAWS {
                counts[sampler.sample(n, cache.cum_mu_table(), &mut rng)] += 1;
            }
            let pmf = memory_pmf(n, beta, cache.mu_table().unwrap());
            let (stat, bound) = chi_square(&counts, &pmf);
            assert!(stat < bound.max(1.0), "beta {beta}, n {n}: chi2 {stat} > {bound}");
        }
    }
}

#[test]
fn matrix_code_follows_its_law() {
    for &(d, p) in &[(1, 0.3), (2, 0.5), (3, 0.9), (4, 0.0)] {
        let m = 2 * d;
        let mut counts = vec![0u64; m];
        let mut rng = RngStream::new(22, d as u64);
        for _ in 0..DRAWS {
            counts[sample_matrix_index(p, d, &mut rng)] += 1;
        }
        let expected: Vec<f64> = (0..m).map(|i| MatrixCode::from_index(i, d).probability(p, d)).collect();
        let (stat, bound) = chi_square(&counts, &expected);
        assert!(stat < bound.max(1.0), "d {d}, p {p}: chi2 {stat} > {bound}");
    }
}
