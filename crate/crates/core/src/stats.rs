//! Correlations, fixed-effects logistic regression and ordinal agreement.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::datefmt::Language;
use crate::mdfr::RatingRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("zero variance")]
    DegenerateVariance,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("outcome is perfectly separated; coefficients diverge")]
    SeparationDetected,
    #[error("design matrix is singular")]
    Singular,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("line {line}: {msg}")]
    Schema { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewPoints { needed: 3, got: x.len() });
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; ties share the mean of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Standardizes to mean 0 and sample standard deviation 1.
pub fn zscore(x: &[f64]) -> Result<Vec<f64>, StatsError> {
    if x.len() < 2 {
        return Err(StatsError::TooFewPoints { needed: 2, got: x.len() });
    }
    let m = mean(x);
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64;
    if var == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let sd = var.sqrt();
    Ok(x.iter().map(|v| (v - m) / sd).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resource {
    High,
    Low,
}

impl Resource {
    pub fn of(lang: Language) -> Self {
        if lang.is_high_resource() {
            Self::High
        } else {
            Self::Low
        }
    }
}

/// One (model, question) observation joined with its predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub model_id: String,
    pub question_id: String,
    pub language: Language,
    /// Derived from the language when absent.
    #[serde(default)]
    pub resource: Option<Resource>,
    pub mdfr: f64,
    pub linearity: f64,
    pub correct: u8,
}

impl AnalysisRow {
    pub fn resource(&self) -> Resource {
        self.resource.unwrap_or(Resource::of(self.language))
    }
}

fn csv_err(e: csv::Error) -> StatsError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::Io(_) => StatsError::Io(e.to_string()),
        _ => StatsError::Schema { line, msg: e.to_string() },
    }
}

pub fn read_analysis_rows(r: impl Read) -> Result<Vec<AnalysisRow>, StatsError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<AnalysisRow>().enumerate() {
        let line = i + 2;
        let row = rec.map_err(|e| match csv_err(e) {
            StatsError::Schema { msg, .. } => StatsError::Schema { line, msg },
            other => other,
        })?;
        let schema = |msg: String| StatsError::Schema { line, msg };
        if row.correct > 1 {
            return Err(schema(format!("correct must be 0 or 1, got {}", row.correct)));
        }
        if !row.mdfr.is_finite() || !row.linearity.is_finite() {
            return Err(schema("mdfr and linearity must be finite".into()));
        }
        if row.resource.is_some_and(|r| r != Resource::of(row.language)) {
            return Err(schema(format!("resource does not match language {}", row.language)));
        }
        out.push(row);
    }
    Ok(out)
}

pub fn write_analysis_rows(w: impl Write, rows: &[AnalysisRow]) -> Result<(), StatsError> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        let filled = AnalysisRow { resource: Some(r.resource()), ..r.clone() };
        wtr.serialize(filled).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| StatsError::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub beta: f64,
    pub se: f64,
    /// Wald statistic β/SE.
    pub z: f64,
    /// Two-sided normal p-value of z.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub terms: Vec<Term>,
    pub n: usize,
    pub iterations: usize,
    pub log_likelihood: f64,
}

impl RegressionResult {
    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }
}

pub const INTERACTION_TERMS: [&str; 8] = [
    "intercept",
    "mdfr_z",
    "lin_z",
    "resource_low",
    "mdfr_z:lin_z",
    "mdfr_z:resource_low",
    "lin_z:resource_low",
    "mdfr_z:lin_z:resource_low",
];

/// Term names, design matrix and 0/1 outcomes.
pub type Design = (Vec<String>, DMatrix<f64>, DVector<f64>);

/// Three-way interaction design over z-scored predictors, with one
/// dummy per model except the first in sorted order.
pub fn interaction_design(rows: &[AnalysisRow], model_dummies: bool) -> Result<Design, StatsError> {
    let mz = zscore(&rows.iter().map(|r| r.mdfr).collect::<Vec<_>>())?;
    let lz = zscore(&rows.iter().map(|r| r.linearity).collect::<Vec<_>>())?;
    let models: Vec<&str> = if model_dummies {
        rows.iter().map(|r| r.model_id.as_str()).collect::<BTreeSet<_>>().into_iter().skip(1).collect()
    } else {
        Vec::new()
    };
    let mut names: Vec<String> = INTERACTION_TERMS.iter().map(|s| s.to_string()).collect();
    names.extend(models.iter().map(|m| format!("model[{m}]")));
    let p = names.len();
    let x = DMatrix::from_fn(rows.len(), p, |i, j| {
        let (m, l) = (mz[i], lz[i]);
        let low = (rows[i].resource() == Resource::Low) as u8 as f64;
        match j {
            0 => 1.0,
            1 => m,
            2 => l,
            3 => low,
            4 => m * l,
            5 => m * low,
            6 => l * low,
            7 => m * l * low,
            _ => (rows[i].model_id == models[j - 8]) as u8 as f64,
        }
    });
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.correct as f64));
    Ok((names, x, y))
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Cholesky of a symmetric positive-definite matrix, rejecting pivots
/// that are negligible against the largest diagonal entry.
fn spd_cholesky(m: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let max_diag = m.diagonal().iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let n = m.nrows();
    Cholesky::new(m).filter(|c| {
        let l = c.l_dirty();
        (0..n).all(|i| l[(i, i)] * l[(i, i)] > 1e-12 * max_diag)
    })
}

/// Logistic regression by Newton/IRLS from β = 0. Stops when
/// max |Δβ| < 1e-8, or fails after 100 iterations.
pub fn logistic_irls(names: Vec<String>, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<RegressionResult, StatsError> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(StatsError::TooFewPoints { needed: p + 1, got: n });
    }
    let ones = y.iter().filter(|v| **v == 1.0).count();
    if ones == 0 || ones == n {
        return Err(StatsError::InsufficientData("outcome has a single class".into()));
    }
    if spd_cholesky(x.transpose() * x).is_none() {
        return Err(StatsError::Singular);
    }

    const MAX_ITER: usize = 100;
    const DIVERGED: f64 = 30.0;
    let mut beta = DVector::zeros(p);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let eta = x * &beta;
        let mu = eta.map(sigmoid);
        let w = mu.map(|m| m * (1.0 - m));
        let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * w[i]);
        let info = x.transpose() * xw;
        let grad = x.transpose() * (y - &mu);
        let chol = spd_cholesky(info).ok_or(StatsError::SeparationDetected)?;
        let step = chol.solve(&grad);
        beta += &step;
        if beta.amax() > DIVERGED {
            return Err(StatsError::SeparationDetected);
        }
        if step.amax() < 1e-8 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(StatsError::SeparationDetected);
    }

    let eta = x * &beta;
    let mu = eta.map(sigmoid);
    let w = mu.map(|m| m * (1.0 - m));
    let info = x.transpose() * DMatrix::from_fn(n, p, |i, j| x[(i, j)] * w[i]);
    let cov = spd_cholesky(info).ok_or(StatsError::SeparationDetected)?.inverse();
    let log_likelihood = y
        .iter()
        .zip(eta.iter())
        .map(|(yi, e)| yi * e - if *e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() })
        .sum();
    let terms = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let se = cov[(j, j)].sqrt();
            let z = beta[j] / se;
            Term { name, beta: beta[j], se, z, p: erfc(z.abs() / std::f64::consts::SQRT_2) }
        })
        .collect();
    Ok(RegressionResult { terms, n, iterations, log_likelihood })
}

/// `correct ~ mdfr_z * lin_z * resource_low` with optional model
/// fixed effects.
pub fn fe_logistic(rows: &[AnalysisRow], include_model_dummies: bool) -> Result<RegressionResult, StatsError> {
    let (names, x, y) = interaction_design(rows, include_model_dummies)?;
    logistic_irls(names, &x, &y)
}

pub const REGRESSION_HEADER: &str =
    "# fixed-effects logistic approximation: question and model random intercepts are not estimated; standard errors may be anti-conservative";

pub fn write_regression_csv(mut w: impl Write, res: &RegressionResult) -> std::io::Result<()> {
    writeln!(w, "{REGRESSION_HEADER}")?;
    writeln!(w, "term,beta,se,z,p")?;
    for t in &res.terms {
        writeln!(w, "{},{:.6},{:.6},{:.6},{:.6e}", t.name, t.beta, t.se, t.z, t.p)?;
    }
    Ok(())
}

/// Ordinal Krippendorff's α over items rated by several annotators.
/// Items with a single rating are not pairable and are skipped.
pub fn krippendorff_alpha_ordinal(units: &[Vec<f64>]) -> Result<f64, StatsError> {
    let pairable: Vec<&Vec<f64>> = units.iter().filter(|u| u.len() >= 2).collect();
    if pairable.len() < 2 {
        return Err(StatsError::InsufficientData(format!("{} pairable items", pairable.len())));
    }
    let mut values: Vec<f64> = pairable.iter().flat_map(|u| u.iter().copied()).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let c = values.len();
    let idx = |v: f64| values.binary_search_by(|x| x.total_cmp(&v)).expect("value present");

    // Coincidence matrix.
    let mut o = vec![vec![0.0; c]; c];
    for u in &pairable {
        let m = u.len() as f64;
        for (i, a) in u.iter().enumerate() {
            for (j, b) in u.iter().enumerate() {
                if i != j {
                    o[idx(*a)][idx(*b)] += 1.0 / (m - 1.0);
                }
            }
        }
    }
    let nc: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = nc.iter().sum();
    let delta2 = |a: usize, b: usize| {
        let (lo, hi) = (a.min(b), a.max(b));
        let s: f64 = nc[lo..=hi].iter().sum::<f64>() - (nc[lo] + nc[hi]) / 2.0;
        s * s
    };
    let (mut observed, mut expected) = (0.0, 0.0);
    for a in 0..c {
        for b in 0..c {
            let d = delta2(a, b);
            observed += o[a][b] * d;
            expected += nc[a] * nc[b] * d;
        }
    }
    if expected == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

/// α over rating records; needs at least two annotators and two items.
pub fn krippendorff_alpha(ratings: &[RatingRecord]) -> Result<f64, StatsError> {
    let annotators: BTreeSet<&str> = ratings.iter().map(|r| r.annotator_id.as_str()).collect();
    if annotators.len() < 2 {
        return Err(StatsError::InsufficientData(format!("{} annotators", annotators.len())));
    }
    let mut units: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in ratings {
        units.entry(&r.item_id).or_default().insert(&r.annotator_id, r.rating as f64);
    }
    let units: Vec<Vec<f64>> = units.into_values().map(|m| m.into_values().collect()).collect();
    krippendorff_alpha_ordinal(&units)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(close(pearson(&x, &x.map(|v| 2.0 * v + 1.0)).unwrap(), 1.0, 1e-15));
        assert!(close(pearson(&x, &x.map(|v| -v)).unwrap(), -1.0, 1e-15));
        // cov = 8/4 = 2, var x = var y = 10/4: r = 2 / 2.5.
        assert!(close(pearson(&x, &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap(), 0.8, 1e-12));
        assert_eq!(pearson(&x, &[1.0; 5]), Err(StatsError::DegenerateVariance));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFewPoints { .. })));
    }

    #[test]
    fn rank_correlations_with_ties() {
        let a = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0];
        let b = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0, 2.0, 8.0];
        assert!(close(pearson(&a, &b).unwrap(), 0.10492284287735881, 1e-12));
        assert!(close(spearman(&a, &b).unwrap(), 0.13471506281091267, 1e-12));
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), [1.5, 3.0, 1.5, 4.0]);

        // Brute-force ranks: count smaller values plus half the equal ones.
        let brute = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|x| {
                    let less = v.iter().filter(|y| *y < x).count() as f64;
                    let eq = v.iter().filter(|y| *y == x).count() as f64;
                    less + (eq + 1.0) / 2.0
                })
                .collect()
        };
        assert_eq!(average_ranks(&a), brute(&a));
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        assert!(close(spearman(&x, &y).unwrap(), 1.0, 1e-15));
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert!(close(spearman(&x, &rev).unwrap(), -1.0, 1e-15));
    }

    #[test]
    fn zscores() {
        let z = zscore(&[0.0, 2.0]).unwrap();
        assert!(close(z[0], -std::f64::consts::FRAC_1_SQRT_2, 1e-15));
        assert!(close(z[1], std::f64::consts::FRAC_1_SQRT_2, 1e-15));
        let once = zscore(&[1.0, 5.0, 2.0, 8.0]).unwrap();
        let twice = zscore(&once).unwrap();
        assert!(once.iter().zip(&twice).all(|(a, b)| close(*a, *b, 1e-12)));
        assert_eq!(zscore(&[3.0; 4]), Err(StatsError::DegenerateVariance));
    }

    /// Deterministic fixture shared with an external statsmodels fit.
    fn fixture_rows() -> Vec<AnalysisRow> {
        (0..200)
            .map(|i: u64| {
                let mdfr = ((i * 37) % 101) as f64 / 100.0;
                let lin = ((i * 53) % 97) as f64 / 96.0;
                let language = Language::ALL[(i % 5) as usize];
                let low = if language.is_high_resource() { 0.0 } else { 1.0 };
                let eta: f64 = 0.4 - 1.5 * mdfr + 1.0 * lin - 0.5 * low;
                let p = 1.0 / (1.0 + (-eta).exp());
                let u = ((i * 7919) % 1000) as f64 / 1000.0;
                AnalysisRow {
                    model_id: format!("m{}", i % 3),
                    question_id: format!("q{i}"),
                    language,
                    resource: None,
                    mdfr,
                    linearity: lin,
                    correct: (u < p) as u8,
                }
            })
            .collect()
    }

    #[test]
    fn logistic_matches_reference_fit() {
        let beta = [
            0.15125256333807321,
            -0.5788353556439086,
            0.16472831351941733,
            -0.5221903798692784,
            -0.139479859310604,
            0.12419054044493526,
            0.0845028767945173,
            0.23165195885950118,
        ];
        let se = [
            0.19217771764756372,
            0.1986551643917506,
            0.19272356486877185,
            0.30406728426853163,
            0.19468622836828778,
            0.31190703827405836,
            0.30659887940531716,
            0.3086759257330162,
        ];
        let res = fe_logistic(&fixture_rows(), false).unwrap();
        assert_eq!(res.terms.len(), 8);
        for (t, (b, s)) in res.terms.iter().zip(beta.iter().zip(se)) {
            assert!(close(t.beta, *b, 1e-7), "{} {} vs {b}", t.name, t.beta);
            assert!(close(t.se, s, 1e-7), "{} {} vs {s}", t.name, t.se);
            assert_eq!(t.z, t.beta / t.se);
        }
    }

    #[test]
    fn logistic_with_model_dummies() {
        let p = [
            0.4808630902657105,
            0.0036615295507018415,
            0.3972039359565842,
            0.08512819590747477,
            0.47309801704922494,
            0.6862408548004195,
            0.7759188224794039,
            0.44149211098857866,
            0.9353518671271033,
            0.7372495263608199,
        ];
        let res = fe_logistic(&fixture_rows(), true).unwrap();
        assert_eq!(res.terms[8].name, "model[m1]");
        assert_eq!(res.terms[9].name, "model[m2]");
        assert!(close(res.terms[9].beta, -0.12238273824173332, 1e-7));
        for (t, want) in res.terms.iter().zip(p) {
            assert!(close(t.p, want, 1e-7), "{}", t.name);
        }
    }

    #[test]
    fn affine_rescaling_of_raw_predictors() {
        let rows = fixture_rows();
        let scaled: Vec<AnalysisRow> =
            rows.iter().map(|r| AnalysisRow { mdfr: 3.0 * r.mdfr - 7.0, linearity: 0.01 * r.linearity + 2.0, ..r.clone() }).collect();
        let a = fe_logistic(&rows, false).unwrap();
        let b = fe_logistic(&scaled, false).unwrap();
        for (x, y) in a.terms.iter().zip(&b.terms) {
            assert!(close(x.beta, y.beta, 1e-6));
        }
    }

    #[test]
    fn logistic_failures() {
        let mut rows = fixture_rows();
        for r in rows.iter_mut() {
            r.correct = (r.mdfr < 0.5) as u8;
        }
        assert_eq!(fe_logistic(&rows, false), Err(StatsError::SeparationDetected));
        for r in rows.iter_mut() {
            r.correct = 1;
        }
        assert!(matches!(fe_logistic(&rows, false), Err(StatsError::InsufficientData(_))));
        let rows: Vec<AnalysisRow> = fixture_rows().into_iter().map(|r| AnalysisRow { language: Language::En, ..r }).collect();
        assert_eq!(fe_logistic(&rows, false), Err(StatsError::Singular));
    }

    #[test]
    fn alpha_reference_matrix() {
        // 4 coders × 12 units with gaps; units listed column-wise.
        let units: Vec<Vec<f64>> = vec![
            vec![1.0, 1.0, 1.0],
            vec![2.0, 2.0, 3.0, 2.0],
            vec![3.0, 3.0, 3.0, 3.0],
            vec![3.0, 3.0, 3.0, 3.0],
            vec![2.0, 2.0, 2.0, 2.0],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![4.0, 4.0, 4.0, 4.0],
            vec![1.0, 1.0, 2.0, 1.0],
            vec![2.0, 2.0, 2.0, 2.0],
            vec![5.0, 5.0, 5.0],
            vec![1.0, 1.0],
            vec![3.0],
        ];
        assert!(close(krippendorff_alpha_ordinal(&units).unwrap(), 0.8153875037548814, 1e-12));
    }

    #[test]
    fn alpha_from_records() {
        let rec = |item: &str, ann: &str, rating| RatingRecord { item_id: item.into(), annotator_id: ann.into(), rating };
        let same: Vec<RatingRecord> =
            (0..6).flat_map(|i| ["a", "b", "c"].map(|a| rec(&format!("i{i}"), a, (i % 5 + 1) as u8))).collect();
        assert!(close(krippendorff_alpha(&same).unwrap(), 1.0, 1e-15));
        let one = vec![rec("i0", "a", 1), rec("i1", "a", 2)];
        assert!(matches!(krippendorff_alpha(&one), Err(StatsError::InsufficientData(_))));
    }

    #[test]
    fn analysis_csv_round_trip() {
        let rows = fixture_rows();
        let mut buf = Vec::new();
        write_analysis_rows(&mut buf, &rows[..5]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("model_id,question_id,language,resource,mdfr,linearity,correct\n"));
        let back = read_analysis_rows(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 5);
        assert_eq!(back[3].resource, Some(Resource::Low));
        let bad = "model_id,question_id,language,resource,mdfr,linearity,correct\nm,q,en,low,0.1,0.2,1\n";
        assert!(matches!(read_analysis_rows(bad.as_bytes()), Err(StatsError::Schema { line: 2, .. })));
        let bad = "model_id,question_id,language,resource,mdfr,linearity,correct\nm,q,en,,0.1,0.2,1\nm,q,xx,,0.1,0.2,1\n";
        assert!(matches!(read_analysis_rows(bad.as_bytes()), Err(StatsError::Schema { line: 3, .. })));
    }
}
