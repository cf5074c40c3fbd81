//! Temporal geometry of hidden-state vectors: year means, path segments,
//! linear probes and PCA.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::GregorianDate;
use crate::datefmt::Language;

/// Samples per (language, format, year) in a dump.
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{key}: expected {expected} samples, found {found}")]
    MissingSamples { key: String, expected: usize, found: usize },
    #[error("no mean embedding for {missing} (between {before} and {after})")]
    GapInYears { before: i32, missing: i32, after: i32 },
    #[error("targets have zero variance")]
    DegenerateTargets,
    #[error("vector dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("line {line}: {msg}")]
    Schema { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for GeometryError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub language: Language,
    /// Format label as written by the extractor (e.g. iso, slash, long).
    pub format: String,
    pub date: GregorianDate,
    pub sample: usize,
    pub layer: usize,
    pub dim: usize,
    pub vector: Vec<f64>,
}

/// Reads an embedding dump; every vector must be finite, match its `dim`
/// field, and share one dimension with the rest of the file.
pub fn read_embeddings(r: impl BufRead) -> Result<Vec<EmbeddingRecord>, GeometryError> {
    let mut out: Vec<EmbeddingRecord> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |msg: String| GeometryError::Schema { line: i + 1, msg };
        let rec: EmbeddingRecord = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if rec.vector.len() != rec.dim {
            return Err(schema(format!("dim is {} but vector has {} entries", rec.dim, rec.vector.len())));
        }
        if let Some(first) = out.first() {
            if first.dim != rec.dim {
                return Err(schema(format!("dim {} differs from earlier dim {}", rec.dim, first.dim)));
            }
        }
        if rec.vector.iter().any(|v| !v.is_finite()) {
            return Err(schema("non-finite vector entry".into()));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_embeddings(mut w: impl Write, records: &[EmbeddingRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Elementwise mean of exactly `k` vectors of equal length.
pub fn mean_year_embedding(vectors: &[&[f64]], k: usize) -> Result<Vec<f64>, GeometryError> {
    if vectors.len() != k || k == 0 {
        return Err(GeometryError::MissingSamples { key: "mean".into(), expected: k, found: vectors.len() });
    }
    let d = vectors[0].len();
    let mut mean = vec![0.0; d];
    for v in vectors {
        if v.len() != d {
            return Err(GeometryError::DimensionMismatch { expected: d, found: v.len() });
        }
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    Ok(mean)
}

/// One (language, format, layer) slice of a dump.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SliceKey {
    pub language: Language,
    pub format: String,
    pub layer: usize,
}

impl fmt::Display for SliceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/layer {}", self.language, self.format, self.layer)
    }
}

pub fn slices(records: &[EmbeddingRecord]) -> BTreeMap<SliceKey, Vec<&EmbeddingRecord>> {
    let mut out: BTreeMap<SliceKey, Vec<&EmbeddingRecord>> = BTreeMap::new();
    for r in records {
        let key = SliceKey { language: r.language, format: r.format.clone(), layer: r.layer };
        out.entry(key).or_default().push(r);
    }
    for v in out.values_mut() {
        v.sort_by_key(|r| (r.date, r.sample));
    }
    out
}

/// Mean embedding per year of one slice. Each year needs `k` records
/// with distinct sample indices and distinct dates.
pub fn year_means(key: &SliceKey, slice: &[&EmbeddingRecord], k: usize) -> Result<BTreeMap<i32, Vec<f64>>, GeometryError> {
    let mut by_year: BTreeMap<i32, Vec<&EmbeddingRecord>> = BTreeMap::new();
    for r in slice {
        by_year.entry(r.date.year()).or_default().push(r);
    }
    let mut out = BTreeMap::new();
    for (year, recs) in by_year {
        let samples: BTreeSet<usize> = recs.iter().map(|r| r.sample).collect();
        let dates: BTreeSet<GregorianDate> = recs.iter().map(|r| r.date).collect();
        let found = samples.len().min(dates.len()).min(recs.len());
        if recs.len() != k || found != k {
            return Err(GeometryError::MissingSamples { key: format!("{key}/{year}"), expected: k, found });
        }
        let vs: Vec<&[f64]> = recs.iter().map(|r| r.vector.as_slice()).collect();
        out.insert(year, mean_year_embedding(&vs, k)?);
    }
    Ok(out)
}

/// s_y = h̄_{y+1} − h̄_y over consecutive years.
pub fn line_segments(means: &BTreeMap<i32, Vec<f64>>) -> Result<Vec<Vec<f64>>, GeometryError> {
    let years: Vec<i32> = means.keys().copied().collect();
    for w in years.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(GeometryError::GapInYears { before: w[0], missing: w[0] + 1, after: w[1] });
        }
    }
    Ok(means
        .values()
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| w[1].iter().zip(w[0].iter()).map(|(b, a)| b - a).collect())
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathDirection {
    pub mean_step: Vec<f64>,
    /// Mean cosine of each segment against the mean step, in [−1, 1].
    /// A zero segment contributes 0; a zero mean step gives 0.
    pub straightness: f64,
}

pub fn path_direction(segments: &[Vec<f64>]) -> Result<PathDirection, GeometryError> {
    if segments.is_empty() {
        return Err(GeometryError::TooFewPoints { needed: 1, got: 0 });
    }
    let k = segments.len();
    let refs: Vec<&[f64]> = segments.iter().map(Vec::as_slice).collect();
    let mean_step = mean_year_embedding(&refs, k)?;
    let scale = segments.iter().map(|s| norm(s)).fold(0.0, f64::max);
    let dn = norm(&mean_step);
    if dn <= 1e-12 * scale || dn == 0.0 {
        return Ok(PathDirection { mean_step, straightness: 0.0 });
    }
    let total: f64 = segments
        .iter()
        .map(|s| {
            let sn = norm(s);
            if sn == 0.0 {
                0.0
            } else {
                (dot(s, &mean_step) / (sn * dn)).clamp(-1.0, 1.0)
            }
        })
        .sum();
    Ok(PathDirection { mean_step, straightness: total / k as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub language: Language,
    pub format: String,
    pub layer: usize,
    pub years: Vec<i32>,
    pub segments: Vec<Vec<f64>>,
    pub mean_step: Vec<f64>,
    pub straightness: f64,
}

pub fn path_summaries(records: &[EmbeddingRecord], k: usize) -> Result<Vec<PathSummary>, GeometryError> {
    let mut out = Vec::new();
    for (key, slice) in slices(records) {
        let means = year_means(&key, &slice, k)?;
        let segments = line_segments(&means)?;
        let dir = path_direction(&segments)?;
        out.push(PathSummary {
            language: key.language,
            format: key.format,
            layer: key.layer,
            years: means.keys().copied().collect(),
            segments,
            mean_step: dir.mean_step,
            straightness: dir.straightness,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Year,
    Month,
    Day,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Year, Component::Month, Component::Day];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Year => "year",
            Self::Month => "month",
            Self::Day => "day",
        }
    }

    pub fn of(&self, d: GregorianDate) -> f64 {
        match self {
            Self::Year => d.year() as f64,
            Self::Month => d.month() as f64,
            Self::Day => d.day() as f64,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "year" => Ok(Self::Year),
            "month" => Ok(Self::Month),
            "day" => Ok(Self::Day),
            _ => Err(format!("unknown component {s:?}")),
        }
    }
}

/// A fitted affine readout ĉ = w·x + b.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Ridge strength, when the normal equations were singular.
    pub ridge: Option<f64>,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFit {
    pub fit: LinearFit,
    pub r2_in: f64,
    /// Pooled out-of-fold R².
    pub r2_cv: f64,
    pub folds: usize,
}

fn variance_sum(y: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - m) * (v - m)).sum()
}

/// Least-squares affine fit. Falls back to ridge with
/// λ = 1e-6·tr(XcᵀXc)/d on centered data when XcᵀXc is singular; the
/// dual form is used when there are no more points than dimensions.
pub fn fit_affine(x: &[Vec<f64>], y: &[f64]) -> Result<LinearFit, GeometryError> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(GeometryError::TooFewPoints { needed: 2, got: n.min(y.len()) });
    }
    let d = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != d) {
        return Err(GeometryError::DimensionMismatch { expected: d, found: bad.len() });
    }
    let mut xm = vec![0.0; d];
    for r in x {
        for (m, v) in xm.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let ym = y.iter().sum::<f64>() / n as f64;
    let xc = DMatrix::from_fn(n, d, |i, j| x[i][j] - xm[j]);
    let yc = DVector::from_fn(n, |i, _| y[i] - ym);
    let trace: f64 = xc.iter().map(|v| v * v).sum();
    let lambda = 1e-6 * trace / d.max(1) as f64;

    let (w, ridge) = if n > d {
        let g = xc.transpose() * &xc;
        let rhs = xc.transpose() * &yc;
        let max_diag = g.diagonal().max();
        let solved = Cholesky::new(g.clone()).filter(|c| {
            let l = c.l_dirty();
            (0..d).all(|i| l[(i, i)] * l[(i, i)] > 1e-12 * max_diag)
        });
        match solved {
            Some(c) => (c.solve(&rhs), None),
            None => {
                let reg = g + DMatrix::identity(d, d) * lambda;
                (Cholesky::new(reg).map(|c| c.solve(&rhs)).unwrap_or_else(|| DVector::zeros(d)), Some(lambda))
            }
        }
    } else {
        let k = &xc * xc.transpose() + DMatrix::identity(n, n) * lambda;
        let alpha = Cholesky::new(k).map(|c| c.solve(&yc)).unwrap_or_else(|| DVector::zeros(n));
        (xc.transpose() * alpha, Some(lambda))
    };
    let weights: Vec<f64> = w.iter().copied().collect();
    let bias = ym - dot(&weights, &xm);
    Ok(LinearFit { weights, bias, ridge })
}

pub fn r_squared(y: &[f64], pred: &[f64]) -> f64 {
    let ss_tot = variance_sum(y);
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - ss_res / ss_tot
}

/// Fits `c ≈ w·x + b`, reporting in-sample R² and pooled R² over
/// `folds` seeded shuffled folds.
pub fn fit_linear_probe(x: &[Vec<f64>], c: &[f64], folds: usize, seed: u64) -> Result<ProbeFit, GeometryError> {
    let n = x.len();
    if n != c.len() {
        return Err(GeometryError::DimensionMismatch { expected: n, found: c.len() });
    }
    if n < 2 || variance_sum(c) == 0.0 {
        return Err(if n < 2 { GeometryError::TooFewPoints { needed: 2, got: n } } else { GeometryError::DegenerateTargets });
    }
    let fit = fit_affine(x, c)?;
    let pred: Vec<f64> = x.iter().map(|r| fit.predict(r)).collect();
    let r2_in = r_squared(c, &pred);

    let folds = folds.clamp(2, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut oof = vec![0.0; n];
    for f in 0..folds {
        let test: Vec<usize> = order.iter().copied().skip(f).step_by(folds).collect();
        let train: Vec<usize> = order.iter().copied().filter(|i| !test.contains(i)).collect();
        let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let ty: Vec<f64> = train.iter().map(|&i| c[i]).collect();
        let ty_mean = ty.iter().sum::<f64>() / ty.len() as f64;
        let model = if ty.len() >= 2 && variance_sum(&ty) > 0.0 { Some(fit_affine(&tx, &ty)?) } else { None };
        for &i in &test {
            oof[i] = model.as_ref().map_or(ty_mean, |m| m.predict(&x[i]));
        }
    }
    let r2_cv = r_squared(c, &oof);
    Ok(ProbeFit { fit, r2_in, r2_cv, folds })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub component: Component,
    pub language: Language,
    pub format: String,
    pub layer: usize,
    pub r2_in: f64,
    pub r2_cv: f64,
    pub folds: usize,
    pub weight_norm: f64,
    pub n: usize,
}

/// Probes every slice of a dump: Year on year means, Month and Day on
/// the individual vectors. Fold shuffles derive from `seed` and the
/// slice's position in sorted order.
pub fn probe_dump(records: &[EmbeddingRecord], k: usize, folds: usize, seed: u64) -> Result<Vec<ProbeResult>, GeometryError> {
    use rayon::prelude::*;
    let slices: Vec<(SliceKey, Vec<&EmbeddingRecord>)> = slices(records).into_iter().collect();
    let nested: Vec<Vec<ProbeResult>> = slices
        .par_iter()
        .enumerate()
        .map(|(idx, (key, slice))| {
            let mut out = Vec::new();
            let means = year_means(key, slice, k)?;
            for (ci, comp) in Component::ALL.into_iter().enumerate() {
                let (x, y): (Vec<Vec<f64>>, Vec<f64>) = match comp {
                    Component::Year => means.iter().map(|(yr, v)| (v.clone(), *yr as f64)).unzip(),
                    _ => slice.iter().map(|r| (r.vector.clone(), comp.of(r.date))).unzip(),
                };
                let s = seed.wrapping_add((idx as u64) * 3 + ci as u64);
                match fit_linear_probe(&x, &y, folds, s) {
                    Ok(p) => out.push(ProbeResult {
                        component: comp,
                        language: key.language,
                        format: key.format.clone(),
                        layer: key.layer,
                        r2_in: p.r2_in,
                        r2_cv: p.r2_cv,
                        folds: p.folds,
                        weight_norm: norm(&p.fit.weights),
                        n: x.len(),
                    }),
                    // Constant targets (e.g. one year only) carry no probe.
                    Err(GeometryError::DegenerateTargets) | Err(GeometryError::TooFewPoints { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(out)
        })
        .collect::<Result<_, GeometryError>>()?;
    Ok(nested.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluation {
    InSample,
    #[default]
    KFold,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearityRow {
    pub language: Language,
    pub component: Component,
    pub best_layer: usize,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearitySummary {
    pub rows: Vec<LinearityRow>,
    /// Mean over components of the per-component best R².
    pub overall: BTreeMap<Language, f64>,
}

/// Per (language, component): R² averaged over formats at each layer,
/// then the best layer. Ties keep the lowest layer.
pub fn linearity_summary(results: &[ProbeResult], eval: Evaluation) -> LinearitySummary {
    let mut acc: BTreeMap<(Language, Component), BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for r in results {
        let v = match eval {
            Evaluation::InSample => r.r2_in,
            Evaluation::KFold => r.r2_cv,
        };
        let e = acc.entry((r.language, r.component)).or_default().entry(r.layer).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let mut summary = LinearitySummary::default();
    let mut per_lang: BTreeMap<Language, Vec<f64>> = BTreeMap::new();
    for ((language, component), layers) in acc {
        let (best_layer, r2) = layers
            .iter()
            .map(|(l, (s, n))| (*l, s / *n as f64))
            .fold(None, |best: Option<(usize, f64)>, (l, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((l, v)),
            })
            .expect("non-empty layer map");
        per_lang.entry(language).or_default().push(r2);
        summary.rows.push(LinearityRow { language, component, best_layer, r2 });
    }
    summary.overall = per_lang.into_iter().map(|(l, v)| (l, v.iter().sum::<f64>() / v.len() as f64)).collect();
    summary
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with eigenvectors as columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let m = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::identity(m, m);
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)] * a[(i, j)]).sum();
        if off.sqrt() <= 1e-15 * scale || scale == 0.0 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| v[(r, order[c])]);
    (values, vectors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit principal axes, each with its first nonzero entry positive.
    pub components: Vec<Vec<f64>>,
    /// Coordinates of each input point on the axes.
    pub coords: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// Fraction of total variance per component.
    pub explained_ratio: Vec<f64>,
}

/// PCA by eigen-decomposing the smaller of the covariance and Gram matrices.
pub fn pca_project(x: &[Vec<f64>], k: usize) -> Result<Pca, GeometryError> {
    let n = x.len();
    if n < 2 {
        return Err(GeometryError::TooFewPoints { needed: 2, got: n });
    }
    let d = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != d) {
        return Err(GeometryError::DimensionMismatch { expected: d, found: bad.len() });
    }
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let xc = DMatrix::from_fn(n, d, |i, j| x[i][j] - mean[j]);
    let denom = (n - 1) as f64;
    let total: f64 = xc.iter().map(|v| v * v).sum::<f64>() / denom;
    let k = k.min(d).min(n);

    let mut axes: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    if d <= n {
        let cov = xc.transpose() * &xc / denom;
        let (vals, vecs) = jacobi_eigen(&cov);
        for (i, val) in vals.iter().take(k).enumerate() {
            axes.push(vecs.column(i).into_owned());
            variances.push(val.max(0.0));
        }
    } else {
        let gram = &xc * xc.transpose();
        let (vals, vecs) = jacobi_eigen(&gram);
        for (i, val) in vals.iter().take(k).enumerate() {
            let lam = val.max(0.0);
            let u = xc.transpose() * vecs.column(i);
            let un = u.norm();
            axes.push(if un > 0.0 { u / un } else { DVector::zeros(d) });
            variances.push(lam / denom);
        }
    }
    for a in axes.iter_mut() {
        if let Some(first) = a.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                *a = -a.clone();
            }
        }
    }
    let coords = (0..n).map(|i| axes.iter().map(|a| xc.row(i).transpose().dot(a)).collect()).collect();
    let explained_ratio = variances.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect();
    Ok(Pca {
        mean,
        components: axes.iter().map(|a| a.iter().copied().collect()).collect(),
        coords,
        explained_variance: variances,
        explained_ratio,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaPanel {
    pub key: SliceKey,
    pub years: Vec<i32>,
    pub pca: Pca,
}

/// Two-component PCA of the year means of every slice.
pub fn pca_year_panels(records: &[EmbeddingRecord], k: usize) -> Result<Vec<PcaPanel>, GeometryError> {
    let mut out = Vec::new();
    for (key, slice) in slices(records) {
        let means = year_means(&key, &slice, k)?;
        if means.len() < 2 {
            continue;
        }
        let years = means.keys().copied().collect();
        let pts: Vec<Vec<f64>> = means.into_values().collect();
        let pca = pca_project(&pts, 2)?;
        out.push(PcaPanel { key, years, pca });
    }
    Ok(out)
}

pub fn write_probe_csv(mut w: impl Write, results: &[ProbeResult]) -> std::io::Result<()> {
    writeln!(w, "language,format,component,layer,r2_in,r2_cv,folds,weight_norm,n")?;
    for r in results {
        writeln!(
            w,
            "{},{},{},{},{:.6},{:.6},{},{:.6},{}",
            r.language, r.format, r.component, r.layer, r.r2_in, r.r2_cv, r.folds, r.weight_norm, r.n
        )?;
    }
    Ok(())
}

pub fn write_path_csv(mut w: impl Write, paths: &[PathSummary]) -> std::io::Result<()> {
    writeln!(w, "language,format,layer,first_year,last_year,segments,mean_step_norm,straightness")?;
    for p in paths {
        writeln!(
            w,
            "{},{},{},{},{},{},{:.6},{:.6}",
            p.language,
            p.format,
            p.layer,
            p.years.first().copied().unwrap_or_default(),
            p.years.last().copied().unwrap_or_default(),
            p.segments.len(),
            norm(&p.mean_step),
            p.straightness
        )?;
    }
    Ok(())
}

pub fn write_pca_csv(mut w: impl Write, panels: &[PcaPanel]) -> std::io::Result<()> {
    writeln!(w, "language,format,layer,year,pc1,pc2,ratio1,ratio2")?;
    for p in panels {
        let ratio = |i: usize| p.pca.explained_ratio.get(i).copied().unwrap_or(0.0);
        for (year, c) in p.years.iter().zip(&p.pca.coords) {
            let pc = |i: usize| c.get(i).copied().unwrap_or(0.0);
            writeln!(
                w,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                p.key.language,
                p.key.format,
                p.key.layer,
                year,
                pc(0),
                pc(1),
                ratio(0),
                ratio(1)
            )?;
        }
    }
    Ok(())
}

pub fn write_linearity_csv(mut w: impl Write, s: &LinearitySummary) -> std::io::Result<()> {
    writeln!(w, "language,component,best_layer,r2")?;
    for r in &s.rows {
        writeln!(w, "{},{},{},{:.6}", r.language, r.component, r.best_layer, r.r2)?;
    }
    for (l, v) in &s.overall {
        writeln!(w, "{l},overall,,{v:.6}")?;
    }
    Ok(())
}

/// A synthetic dump: each vector is `year·u + month·v + day·w` plus
/// isotropic Gaussian-ish noise of standard deviation `noise`, for every
/// (language, format, layer). Dates are drawn with distinct days per year.
#[allow(clippy::too_many_arguments)]
pub fn synthetic_dump(
    languages: &[Language],
    formats: &[&str],
    years: std::ops::RangeInclusive<i32>,
    layers: usize,
    dim: usize,
    k: usize,
    noise: f64,
    seed: u64,
) -> Vec<EmbeddingRecord> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = norm(&v);
        v.into_iter().map(|x| x / n).collect::<Vec<f64>>()
    };
    let dirs: Vec<[Vec<f64>; 3]> = (0..layers).map(|_| [unit(&mut rng), unit(&mut rng), unit(&mut rng)]).collect();
    let mut out = Vec::new();
    for &language in languages {
        for &format in formats {
            for year in years.clone() {
                let mut used = BTreeSet::new();
                let mut dates = Vec::new();
                while dates.len() < k {
                    let m = rng.random_range(1..=12u8);
                    let d = rng.random_range(1..=28u8);
                    if used.insert((m, d)) {
                        dates.push(GregorianDate::new(year, m, d).expect("valid day"));
                    }
                }
                for (sample, date) in dates.into_iter().enumerate() {
                    for (layer, [u, v, w]) in dirs.iter().enumerate() {
                        let vector = (0..dim)
                            .map(|j| {
                                // Sum of 12 uniforms: unit variance, near-Gaussian.
                                let e: f64 = (0..12).map(|_| rng.random_range(0.0..1.0)).sum::<f64>() - 6.0;
                                (year - years.start()) as f64 * u[j]
                                    + date.month() as f64 * v[j]
                                    + date.day() as f64 * w[j]
                                    + noise * e
                            })
                            .collect();
                        out.push(EmbeddingRecord { language, format: format.to_string(), date, sample, layer, dim, vector });
                    }
                }
            }
        }
    }
    out
}
