use std::collections::BTreeMap;
use std::io::Write;

use datefrag::benchgen::{self, BenchmarkRecord, SeedQuestion};
use datefrag::datefmt::Language;
use datefrag::geometry::{self, Evaluation};
use datefrag::mdfr::{self, FragFeatures, MdfrWeights, ScoreRow, ThetaConvention};
use datefrag::scorer::{self, Prediction};
use datefrag::semtok::baseline_segment;
use datefrag::stats::{self, AnalysisRow};
use datefrag::tok_adapter::{self, BpeModel, ModelTokenization};
use serde::{Deserialize, Serialize};

use crate::io::{open, read_lines, read_to_string, write_atomic, CliResult, Failure};
use crate::*;

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Gen(a) => gen(a, cli.seed),
        Command::Segment(a) => segment(a),
        Command::Tokenize(a) => tokenize(a),
        Command::Mdfr(a) => mdfr_cmd(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Score(a) => score(a),
        Command::Probe(a) => probe(a, cli.seed),
        Command::Geometry(a) => geometry_cmd(a),
        Command::SynthEmbeddings(a) => synth(a, cli.seed),
        Command::Correlate(a) => correlate(a),
        Command::Regress(a) => regress(a),
        Command::Alpha(a) => alpha(a),
    }
}

fn jsonl<T: Serialize>(w: &mut dyn Write, items: &[T]) -> std::io::Result<()> {
    for it in items {
        serde_json::to_writer(&mut *w, it)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn gen(a: &GenArgs, seed: u64) -> CliResult<()> {
    let mut seeds: Vec<SeedQuestion> = match (&a.seeds, a.synthetic) {
        (Some(path), _) => benchgen::read_jsonl(open(path)?).map_err(|e| Failure::from(e).at(path.display()))?,
        (None, Some(n)) => benchgen::synthetic_seeds(n, &Language::ALL, seed),
        (None, None) => return Err(Failure::Input("either --seeds or --synthetic is required".into())),
    };
    if !a.langs.is_empty() {
        seeds.retain(|s| a.langs.contains(&s.language));
    }
    let records = benchgen::expand_all(&seeds)?;

    let mut report = benchgen::validate_corpus(&records, a.expect_per_cell.unwrap_or(0));
    if a.expect_per_cell.is_none() {
        report.count_failures.clear();
    }
    if let Some(path) = &a.report {
        write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            w.write_all(b"\n")
        })?;
    }
    if !report.passed() {
        for f in report.count_failures.iter().take(10) {
            eprintln!("  {f}");
        }
        for i in report.issues.iter().take(10) {
            eprintln!("  {}: {}", i.record_id, i.problem);
        }
        return Err(Failure::Validation(format!(
            "{} count failures, {} record issues",
            report.count_failures.len(),
            report.issues.len()
        )));
    }
    if let Some(path) = &a.write_seeds {
        write_atomic(path, |w| jsonl(w, &seeds))?;
    }
    write_atomic(&a.out, |w| jsonl(w, &records))?;
    eprintln!("datefrag: {} seeds -> {} records", seeds.len(), records.len());
    Ok(())
}

fn segment(a: &SegmentArgs) -> CliResult<()> {
    let mut out = Vec::new();
    for (line, text) in read_lines(&a.input)? {
        let seg = baseline_segment(&text, a.lang, a.format).map_err(|e| Failure::from(e).at(format!("{}:{line}", a.input.display())))?;
        out.push(seg);
    }
    write_atomic(&a.out, |w| jsonl(w, &out))
}

fn tokenize(a: &TokenizeArgs) -> CliResult<()> {
    let model = match (&a.vocab, &a.merges) {
        (Some(v), Some(m)) => Some(BpeModel::from_strs(&read_to_string(v)?, &read_to_string(m)?, a.pattern.as_deref())?),
        _ => None,
    };
    let mut out = Vec::new();
    for (line, text) in read_lines(&a.input)? {
        let id = format!("line-{line}");
        let place = format!("{}:{line}", a.input.display());
        let mut tok = match &model {
            Some(m) => tok_adapter::bpe_tokenize(m, &text, &id, &a.tokenizer_id).map_err(|e| Failure::from(e).at(&place))?,
            None => {
                let seg = baseline_segment(&text, a.lang, a.format).map_err(|e| Failure::from(e).at(&place))?;
                ModelTokenization::from_segmentation(&seg, &id)
            }
        };
        tok.language = Some(a.lang);
        tok.format = Some(a.format);
        out.push(tok);
    }
    write_atomic(&a.out, |w| tok_adapter::write_pretokenized(w, &out))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MdfrRow {
    id: String,
    tokenizer_id: String,
    language: Language,
    format: datefrag::datefmt::FormatKind,
    calendar: datefrag::calendar::CalendarSystem,
    #[serde(flatten)]
    features: FragFeatures,
    f: f64,
}

fn mdfr_cmd(a: &MdfrArgs) -> CliResult<()> {
    let weights = match &a.weights {
        Some(p) => {
            let w: MdfrWeights =
                serde_json::from_str(&read_to_string(p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            w.check().map_err(|e| Failure::from(e).at(p.display()))?;
            w
        }
        None => MdfrWeights::DEFAULT,
    };
    let theta = match a.theta {
        Theta::BoundaryCosine => ThetaConvention::BoundaryCosine,
        Theta::UnitCoverage => ThetaConvention::UnitCoverage,
    };
    let toks = tok_adapter::read_pretokenized(open(&a.input)?).map_err(|e| Failure::from(e).at(a.input.display()))?;

    use rayon::prelude::*;
    let rows: Vec<MdfrRow> = toks
        .par_iter()
        .map(|t| {
            let place = format!("{} record {}", a.input.display(), t.id);
            let (lang, kind) = match (t.language.or(a.lang), t.format.or(a.format)) {
                (Some(l), Some(k)) => (l, k),
                _ => return Err(Failure::Input(format!("{place}: no language/format; pass --lang and --format"))),
            };
            let seg = baseline_segment(&t.text, lang, kind).map_err(|e| Failure::from(e).at(&place))?;
            let features = mdfr::compute_features_with(&seg, t, theta).map_err(|e| Failure::from(e).at(&place))?;
            Ok(MdfrRow {
                id: t.id.clone(),
                tokenizer_id: t.tokenizer_id.clone(),
                language: lang,
                format: kind,
                calendar: seg.calendar,
                f: mdfr::mdfr_score(&features, &weights),
                features,
            })
        })
        .collect::<CliResult<_>>()?;

    if let Some(path) = &a.report {
        let scores: Vec<ScoreRow> = rows
            .iter()
            .map(|r| ScoreRow { language: r.language, calendar: r.calendar, tokenizer_id: r.tokenizer_id.clone(), f: r.f })
            .collect();
        let report = mdfr::aggregate_report(&scores);
        write_atomic(path, |w| report.write_csv(w).map_err(std::io::Error::other))?;
    }
    write_atomic(&a.out, |w| jsonl(w, &rows))
}

#[derive(Serialize)]
struct CalibrationOut {
    #[serde(flatten)]
    weights: MdfrWeights,
    raw: [f64; 4],
    residual_rmse: f64,
    items: usize,
    alpha: Option<f64>,
}

fn calibrate(a: &CalibrateArgs) -> CliResult<()> {
    let rows: Vec<MdfrRow> = benchgen::read_jsonl(open(&a.features)?).map_err(|e| Failure::from(e).at(a.features.display()))?;
    let by_id: BTreeMap<&str, &MdfrRow> = rows.iter().map(|r| (r.id.as_str(), r)).collect();
    let ratings = mdfr::read_ratings(open(&a.ratings)?).map_err(|e| Failure::from(e).at(a.ratings.display()))?;
    let means = mdfr::mean_ratings(&ratings);
    let mut design = Vec::new();
    for (item, r) in &means {
        let row = by_id
            .get(item.as_str())
            .ok_or_else(|| Failure::Validation(format!("rated item {item:?} has no feature row")))?;
        design.push((row.features, *r));
    }
    let cal = mdfr::calibrate_weights(&design)?;
    let out = CalibrationOut {
        weights: cal.weights,
        raw: cal.raw,
        residual_rmse: cal.residual_rmse,
        items: design.len(),
        alpha: stats::krippendorff_alpha(&ratings).ok(),
    };
    write_atomic(&a.out, |w| {
        serde_json::to_writer_pretty(&mut *w, &out)?;
        w.write_all(b"\n")
    })
}

fn score(a: &ScoreArgs) -> CliResult<()> {
    let records: Vec<BenchmarkRecord> = benchgen::read_jsonl(open(&a.bench)?).map_err(|e| Failure::from(e).at(a.bench.display()))?;
    let preds: Vec<Prediction> =
        benchgen::read_jsonl(open(&a.predictions)?).map_err(|e| Failure::from(e).at(a.predictions.display()))?;
    let verdicts = scorer::score_all(&preds, &records)?;
    write_atomic(&a.out, |w| scorer::write_verdicts_csv(w, &verdicts))?;
    if let Some(path) = &a.accuracy {
        let tagged: Vec<(String, scorer::Verdict)> = preds
            .iter()
            .zip(verdicts)
            .map(|(p, v)| (p.model_id.clone().unwrap_or_else(|| a.model.clone()), v))
            .collect();
        let table = scorer::accuracy_table(&tagged, &records)?;
        for w in &table.warnings {
            eprintln!("datefrag: warning: {w}");
        }
        write_atomic(path, |w| table.write_csv(w))?;
    }
    Ok(())
}

fn read_embeddings(path: &std::path::Path) -> CliResult<Vec<geometry::EmbeddingRecord>> {
    geometry::read_embeddings(open(path)?).map_err(|e| Failure::from(e).at(path.display()))
}

fn probe(a: &ProbeArgs, seed: u64) -> CliResult<()> {
    let recs = read_embeddings(&a.embeddings)?;
    let results = geometry::probe_dump(&recs, a.k, a.folds, seed)?;
    write_atomic(&a.out, |w| geometry::write_probe_csv(w, &results))?;
    if let Some(path) = &a.summary {
        let eval = match a.eval {
            Eval::InSample => Evaluation::InSample,
            Eval::Kfold => Evaluation::KFold,
        };
        let summary = geometry::linearity_summary(&results, eval);
        write_atomic(path, |w| geometry::write_linearity_csv(w, &summary))?;
    }
    Ok(())
}

fn geometry_cmd(a: &GeometryArgs) -> CliResult<()> {
    let recs = read_embeddings(&a.embeddings)?;
    let paths = geometry::path_summaries(&recs, a.k)?;
    write_atomic(&a.paths, |w| geometry::write_path_csv(w, &paths))?;
    if let Some(path) = &a.pca {
        let panels = geometry::pca_year_panels(&recs, a.k)?;
        write_atomic(path, |w| geometry::write_pca_csv(w, &panels))?;
    }
    Ok(())
}

fn synth(a: &SynthArgs, seed: u64) -> CliResult<()> {
    if a.first_year > a.last_year || a.dim == 0 || a.k == 0 || a.k > 336 {
        return Err(Failure::Input("need first-year <= last-year, dim >= 1 and 1 <= k <= 336".into()));
    }
    let formats: Vec<&str> = a.formats.iter().map(String::as_str).collect();
    let recs = geometry::synthetic_dump(&a.langs, &formats, a.first_year..=a.last_year, a.layers, a.dim, a.k, a.noise, seed);
    write_atomic(&a.out, |w| geometry::write_embeddings(w, &recs))
}

fn column(r: &AnalysisRow, c: Column) -> f64 {
    match c {
        Column::Mdfr => r.mdfr,
        Column::Linearity => r.linearity,
        Column::Correct => r.correct as f64,
    }
}

fn read_analysis(path: &std::path::Path) -> CliResult<Vec<AnalysisRow>> {
    stats::read_analysis_rows(open(path)?).map_err(|e| Failure::from(e).at(path.display()))
}

fn correlate(a: &CorrelateArgs) -> CliResult<()> {
    let rows = read_analysis(&a.input)?;
    // group -> unit -> (sum x, sum y, n)
    let mut groups: BTreeMap<String, BTreeMap<String, (f64, f64, usize)>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let group = match a.by {
            GroupBy::All => "all".to_string(),
            GroupBy::Language => r.language.to_string(),
            GroupBy::Resource => format!("{:?}", r.resource()).to_lowercase(),
            GroupBy::Model => r.model_id.clone(),
        };
        let unit = match a.mean_by {
            MeanBy::None => format!("{i:012}"),
            MeanBy::Model => r.model_id.clone(),
            MeanBy::Question => r.question_id.clone(),
        };
        let e = groups.entry(group).or_default().entry(unit).or_default();
        e.0 += column(r, a.x);
        e.1 += column(r, a.y);
        e.2 += 1;
    }
    write_atomic(&a.out, |w| {
        writeln!(w, "group,n,pearson,spearman")?;
        for (g, units) in &groups {
            let (x, y): (Vec<f64>, Vec<f64>) = units.values().map(|(sx, sy, n)| (sx / *n as f64, sy / *n as f64)).unzip();
            let fmt = |r: Result<f64, stats::StatsError>| r.map(|v| format!("{v:.6}")).unwrap_or_default();
            writeln!(w, "{g},{},{},{}", x.len(), fmt(stats::pearson(&x, &y)), fmt(stats::spearman(&x, &y)))?;
        }
        Ok(())
    })
}

fn regress(a: &RegressArgs) -> CliResult<()> {
    let rows = read_analysis(&a.input)?;
    let res = stats::fe_logistic(&rows, a.model_dummies)?;
    write_atomic(&a.out, |w| stats::write_regression_csv(w, &res))
}

fn alpha(a: &AlphaArgs) -> CliResult<()> {
    let ratings = mdfr::read_ratings(open(&a.ratings)?).map_err(|e| Failure::from(e).at(a.ratings.display()))?;
    let alpha = stats::krippendorff_alpha(&ratings)?;
    println!("{alpha:.6}");
    if let Some(path) = &a.out {
        write_atomic(path, |w| writeln!(w, "{{\"alpha\":{alpha},\"ratings\":{}}}", ratings.len()))?;
    }
    Ok(())
}
