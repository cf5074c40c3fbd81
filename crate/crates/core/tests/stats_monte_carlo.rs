use datefrag::datefmt::Language;
use datefrag::stats::{fe_logistic, krippendorff_alpha_ordinal, zscore, AnalysisRow, Resource, INTERACTION_TERMS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BETA: [f64; 8] = [0.3, -0.6, 0.5, -0.4, 0.2, -0.3, 0.25, 0.15];
const MODEL_BETA: [f64; 3] = [0.0, 0.2, -0.2];

/// Rows whose outcome follows the interaction model on the sample
/// z-scores, or a fair coin when `null` is set.
fn simulate(n: usize, seed: u64, null: bool) -> Vec<AnalysisRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let l: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let (mz, lz) = (zscore(&m).unwrap(), zscore(&l).unwrap());
    (0..n)
        .map(|i| {
            let language = Language::ALL[i % 5];
            let low = (Resource::of(language) == Resource::Low) as u8 as f64;
            let x = [1.0, mz[i], lz[i], low, mz[i] * lz[i], mz[i] * low, lz[i] * low, mz[i] * lz[i] * low];
            let eta: f64 = x.iter().zip(BETA).map(|(a, b)| a * b).sum::<f64>() + MODEL_BETA[i % 3];
            let p = if null { 0.5 } else { 1.0 / (1.0 + (-eta).exp()) };
            AnalysisRow {
                model_id: format!("m{}", i % 3),
                question_id: format!("q{i}"),
                language,
                resource: None,
                mdfr: m[i],
                linearity: l[i],
                correct: rng.random_bool(p) as u8,
            }
        })
        .collect()
}

#[test]
fn coefficients_recovered_within_two_se() {
    // Each interval covers with probability ~0.954; pooled coverage over
    // 10 × 10 coefficients must stay near that.
    let (mut covered, mut total) = (0, 0);
    for seed in 0..10 {
        let res = fe_logistic(&simulate(5000, seed, false), true).unwrap();
        let truth = BETA.iter().copied().chain(MODEL_BETA[1..].iter().copied());
        for (t, want) in res.terms.iter().zip(truth) {
            assert_eq!(t.z, t.beta / t.se);
            covered += ((t.beta - want).abs() <= 2.0 * t.se) as usize;
            total += 1;
        }
    }
    assert_eq!(total, 100);
    assert!(covered >= 88, "{covered}/{total}");
}

#[test]
fn null_outcome_rarely_looks_significant() {
    let seeds = 40;
    let quiet = (0..seeds)
        .filter(|&s| {
            let res = fe_logistic(&simulate(1000, 100 + s, true), false).unwrap();
            res.terms.iter().filter(|t| t.name != INTERACTION_TERMS[0]).all(|t| t.z.abs() < 3.0)
        })
        .count();
    assert!(quiet as f64 >= 0.95 * seeds as f64, "{quiet}/{seeds}");
}

#[test]
fn random_ratings_have_no_agreement() {
    let alphas: Vec<f64> = (0..20u64)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let units: Vec<Vec<f64>> =
                (0..100).map(|_| (0..5).map(|_| rng.random_range(1..=5) as f64).collect()).collect();
            krippendorff_alpha_ordinal(&units).unwrap()
        })
        .collect();
    let mean = alphas.iter().sum::<f64>() / alphas.len() as f64;
    assert!(mean.abs() <= 0.05, "mean α {mean}");
    assert!(alphas.iter().all(|a| a.abs() < 0.15), "{alphas:?}");
}
