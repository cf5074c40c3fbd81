//! Date fragmentation features, the weighted mDFR score, weight
//! calibration from severity ratings, and the per-cell report.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::CalendarSystem;
use crate::datefmt::{is_ignorable, Language, Role};
use crate::semtok::{baseline_unit_count, SemanticSegmentation};
use crate::tok_adapter::ModelTokenization;

#[derive(Debug, Error)]
pub enum MdfrError {
    #[error("tokenization text {tok:?} differs from segmentation input {seg:?}")]
    InputMismatch { seg: String, tok: String },
    #[error("invalid tokenization: {0}")]
    InvalidTokenization(String),
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("line {line}: {msg}")]
    Schema { line: usize, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// How the structural-divergence component θ is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaConvention {
    /// Cosine distance between the token-start and unit-start indicator
    /// vectors over visible byte positions: 1 − |T∩B| / √(|T|·|B|).
    #[default]
    BoundaryCosine,
    /// Cosine distance between per-unit token-overlap counts and the
    /// all-ones vector. Scale-invariant: uniform over-splitting scores 0.
    UnitCoverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragFeatures {
    pub split: u8,
    pub delimiter_lost: u8,
    pub delta_n_norm: f64,
    pub theta: f64,
    pub n: usize,
    pub n_b: usize,
}

impl FragFeatures {
    pub fn zero(n_b: usize) -> Self {
        Self { split: 0, delimiter_lost: 0, delta_n_norm: 0.0, theta: 0.0, n: n_b, n_b }
    }

    pub fn vector(&self) -> [f64; 4] {
        [self.split as f64, self.delimiter_lost as f64, self.delta_n_norm, self.theta]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdfrWeights {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl MdfrWeights {
    pub const DEFAULT: MdfrWeights = MdfrWeights { a1: 0.2, a2: 0.2, a3: 0.1, a4: 0.5 };
    /// Weights fitted to 100 human-rated items (5 annotators each).
    pub const HUMAN_STUDY: MdfrWeights = MdfrWeights { a1: 0.2015, a2: 0.1932, a3: 0.1053, a4: 0.5000 };

    /// Non-negative and summing to 1 (within 1e-6).
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Result<Self, MdfrError> {
        let w = Self { a1, a2, a3, a4 };
        w.check()?;
        Ok(w)
    }

    pub fn check(&self) -> Result<(), MdfrError> {
        let v = self.vector();
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(MdfrError::InvalidWeights(format!("{v:?} has a negative or non-finite entry")));
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(MdfrError::InvalidWeights(format!("{v:?} sums to {sum}")));
        }
        Ok(())
    }

    pub fn vector(&self) -> [f64; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }
}

impl Default for MdfrWeights {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub fn compute_features(seg: &SemanticSegmentation, tok: &ModelTokenization) -> Result<FragFeatures, MdfrError> {
    compute_features_with(seg, tok, ThetaConvention::default())
}

pub fn compute_features_with(
    seg: &SemanticSegmentation,
    tok: &ModelTokenization,
    theta: ThetaConvention,
) -> Result<FragFeatures, MdfrError> {
    if seg.input != tok.text {
        return Err(MdfrError::InputMismatch { seg: seg.input.clone(), tok: tok.text.clone() });
    }
    tok.validate().map_err(MdfrError::InvalidTokenization)?;

    // owner[b] = unit holding visible byte b
    let mut owner: Vec<Option<usize>> = vec![None; seg.input.len()];
    for (i, u) in seg.units.iter().enumerate() {
        for (off, c) in u.text.char_indices() {
            if !is_ignorable(c) {
                let at = u.byte_span.start + off;
                owner[at..at + c.len_utf8()].fill(Some(i));
            }
        }
    }
    let content_units: Vec<usize> = (0..seg.units.len()).filter(|&i| seg.units[i].has_content()).collect();
    let is_delim = |i: usize| seg.units[i].role == Role::Delimiter;

    let mut touches = vec![0usize; seg.units.len()];
    let mut n = 0;
    let mut delimiter_lost = 0;
    let mut token_starts = Vec::new();
    for t in &tok.tokens {
        let mut units: Vec<usize> = owner[t.start..t.end].iter().flatten().copied().collect();
        units.dedup();
        units.sort_unstable();
        units.dedup();
        if units.is_empty() {
            continue;
        }
        n += 1;
        if units.iter().any(|&u| is_delim(u)) && units.iter().any(|&u| !is_delim(u)) {
            delimiter_lost = 1;
        }
        for &u in &units {
            touches[u] += 1;
        }
        token_starts.push((t.start..t.end).find(|&b| owner[b].is_some()).unwrap());
    }

    let split = content_units.iter().any(|&u| !is_delim(u) && touches[u] >= 2) as u8;
    let n_b = baseline_unit_count(seg);
    let delta_n_norm = ((n as f64 - n_b as f64) / n_b as f64).clamp(0.0, 1.0);

    let theta = match theta {
        ThetaConvention::BoundaryCosine => {
            let unit_starts: Vec<usize> =
                content_units.iter().map(|&u| (seg.units[u].byte_span.clone()).find(|&b| owner[b].is_some()).unwrap()).collect();
            let shared = token_starts.iter().filter(|s| unit_starts.contains(s)).count();
            1.0 - shared as f64 / ((token_starts.len() * unit_starts.len()) as f64).sqrt()
        }
        ThetaConvention::UnitCoverage => {
            let t: Vec<f64> = content_units.iter().map(|&u| touches[u] as f64).collect();
            let dot: f64 = t.iter().sum();
            let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
            1.0 - dot / (norm * (t.len() as f64).sqrt())
        }
    };

    Ok(FragFeatures {
        split,
        delimiter_lost,
        delta_n_norm,
        theta: theta.clamp(0.0, 1.0),
        n,
        n_b,
    })
}

/// F = a1·split + a2·delimiter_lost + a3·ΔN + a4·θ.
pub fn mdfr_score(f: &FragFeatures, w: &MdfrWeights) -> f64 {
    f.vector().iter().zip(w.vector()).map(|(x, a)| x * a).sum()
}

/// Lawson–Hanson active-set NNLS: argmin ‖Ax − b‖ subject to x ≥ 0.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let tol = 10.0 * f64::EPSILON * a.abs().row_sum().max() * a.nrows().max(n) as f64;
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let solve = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = a.select_columns(&idx);
        let z = sub.svd(true, true).solve(b, 1e-12).expect("svd with vectors");
        let mut s = DVector::zeros(n);
        for (k, &j) in idx.iter().enumerate() {
            s[j] = z[k];
        }
        s
    };
    for _ in 0..3 * n.max(1) {
        let w = a.transpose() * (b - a * &x);
        let Some(j) = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&p, &q| w[p].total_cmp(&w[q])) else {
            break;
        };
        passive[j] = true;
        loop {
            let s = solve(&passive);
            if (0..n).filter(|&i| passive[i]).all(|i| s[i] > tol) {
                x = s;
                break;
            }
            let alpha = (0..n)
                .filter(|&i| passive[i] && s[i] <= tol)
                .map(|i| x[i] / (x[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            x += (s - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i].abs() <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub weights: MdfrWeights,
    /// Non-negative fit before normalization.
    pub raw: [f64; 4],
    /// RMSE of the un-normalized fit against the rescaled ratings.
    pub residual_rmse: f64,
}

/// Fits weights to mean 1–5 severity ratings: ratings are rescaled with
/// (r − 1)/4, fitted by NNLS without intercept, then normalized to sum 1.
pub fn calibrate_weights(rows: &[(FragFeatures, f64)]) -> Result<Calibration, MdfrError> {
    if rows.len() < 8 {
        return Err(MdfrError::DegenerateDesign(format!("{} rows, need at least 8", rows.len())));
    }
    let a = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i].0.vector()[j]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|(_, r)| (r - 1.0) / 4.0));
    let sv = a.singular_values();
    let rank = sv.iter().filter(|&&s| s > 1e-10 * sv.max()).count();
    if rank < 4 {
        return Err(MdfrError::DegenerateDesign(format!("feature matrix has rank {rank} < 4")));
    }
    let x = nnls(&a, &b);
    let residual = &a * &x - &b;
    let residual_rmse = (residual.norm_squared() / rows.len() as f64).sqrt();
    let sum = x.sum();
    if sum <= 0.0 {
        return Err(MdfrError::DegenerateDesign("all fitted weights are zero".into()));
    }
    let w = &x / sum;
    Ok(Calibration {
        weights: MdfrWeights::new(w[0], w[1], w[2], w[3])?,
        raw: [x[0], x[1], x[2], x[3]],
        residual_rmse,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub item_id: String,
    pub annotator_id: String,
    pub rating: u8,
}

/// Reads `item_id,annotator_id,rating` CSV; ratings must lie in 1..=5.
pub fn read_ratings(r: impl Read) -> Result<Vec<RatingRecord>, MdfrError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<RatingRecord>().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| MdfrError::Schema { line, msg: e.to_string() })?;
        if !(1..=5).contains(&rec.rating) {
            return Err(MdfrError::Schema { line, msg: format!("rating {} outside 1..=5", rec.rating) });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Mean rating per item, ordered by item id.
pub fn mean_ratings(records: &[RatingRecord]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.item_id.clone()).or_default();
        e.0 += r.rating as f64;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReportCell {
    pub calendar: CalendarSystem,
    pub language: Language,
}

impl ReportCell {
    /// Report columns, in order.
    pub const COLUMNS: [ReportCell; 9] = [
        Self::new(CalendarSystem::Gregorian, Language::Ar),
        Self::new(CalendarSystem::Gregorian, Language::Zh),
        Self::new(CalendarSystem::Gregorian, Language::En),
        Self::new(CalendarSystem::Gregorian, Language::De),
        Self::new(CalendarSystem::Gregorian, Language::Ha),
        Self::new(CalendarSystem::Lunar, Language::Zh),
        Self::new(CalendarSystem::Hijri, Language::Ar),
        Self::new(CalendarSystem::Hijri, Language::En),
        Self::new(CalendarSystem::Hijri, Language::Ha),
    ];

    pub const fn new(calendar: CalendarSystem, language: Language) -> Self {
        Self { calendar, language }
    }

    pub fn column_name(&self) -> String {
        let cal = match self.calendar {
            CalendarSystem::Gregorian => "greg",
            CalendarSystem::Hijri => "hijri",
            CalendarSystem::Lunar => "lunar",
        };
        format!("{cal}_{}", self.language)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub language: Language,
    pub calendar: CalendarSystem,
    pub tokenizer_id: String,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdfrReport {
    /// Tokenizer id -> mean F per column (None when the cell has no scores).
    pub rows: BTreeMap<String, [Option<f64>; 9]>,
    /// Scores whose (language, calendar) is not a report column.
    pub dropped: usize,
}

pub fn aggregate_report(scores: &[ScoreRow]) -> MdfrReport {
    let mut acc: BTreeMap<String, [(f64, usize); 9]> = BTreeMap::new();
    let mut dropped = 0;
    for s in scores {
        let cell = ReportCell::new(s.calendar, s.language);
        let Some(col) = ReportCell::COLUMNS.iter().position(|c| *c == cell) else {
            dropped += 1;
            continue;
        };
        let e = &mut acc.entry(s.tokenizer_id.clone()).or_insert([(0.0, 0); 9])[col];
        e.0 += s.f;
        e.1 += 1;
    }
    let rows = acc
        .into_iter()
        .map(|(k, cells)| (k, cells.map(|(sum, n)| (n > 0).then(|| sum / n as f64))))
        .collect();
    MdfrReport { rows, dropped }
}

impl MdfrReport {
    /// CSV with one row per tokenizer; empty fields for cells without scores.
    pub fn write_csv(&self, w: impl Write) -> Result<(), MdfrError> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["tokenizer_id".to_string()];
        header.extend(ReportCell::COLUMNS.iter().map(|c| c.column_name()));
        wtr.write_record(&header).map_err(csv_io)?;
        for (id, cells) in &self.rows {
            let mut rec = vec![id.clone()];
            rec.extend(cells.iter().map(|c| c.map(|v| format!("{v:.4}")).unwrap_or_default()));
            wtr.write_record(&rec).map_err(csv_io)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_io(e: csv::Error) -> MdfrError {
    MdfrError::Io(std::io::Error::other(e.to_string()))
}
