use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use msef_core::model::attention_heatmap;
use msef_core::stats::{
    agreement_rate, bland_altman, corr_matrix, distribution_summary, ols_fit, out_of_range_rate, poly_fit_r2,
    precision_recall_f1, shapiro_wilk, tertile_label, tertile_recode, AgreementMode, ConfusionCounts, CorrMethod,
    Range, StatsError,
};
use msef_data::io::{read_csv, sha256_file};
use msef_data::likert::HumanScore;
use msef_data::records::FEATURES;
use msef_data::synth::text::question;
use msef_data::synth::{truth_scores, TABLE1_BETAS};
use msef_data::{DimensionKind, DimensionRegistry, ImageRecord};

use super::curate::HUMAN_SCORES_FILE;
use super::evaluate::PredictionRow;
use super::train::{load_checkpoint, load_images};
use super::{ensure_dir, require, write_text};
use crate::config::{Layout, RunConfig};
use crate::error::{CliError, Result};
use crate::report::*;
use crate::svg;

const SATISFACTION: &str = "satisfaction";
const CONNECTIVITY: &str = "connectivity";
const OVERALL: &str = "overall_satisfaction";

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    pub report: std::path::PathBuf,
    pub omitted: Vec<String>,
    pub figures: usize,
}

fn hash_inputs(layout: &Layout, paths: &[&Path]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for p in paths {
        if p.exists() {
            out.insert(layout.relative(p), sha256_file(p)?);
        }
    }
    Ok(out)
}

fn require_len(xs: &[f64], n: usize, what: &str) -> std::result::Result<(), StatsError> {
    if xs.len() < n {
        Err(StatsError::Input(format!("{what}: {} values, need at least {n}", xs.len())))
    } else {
        Ok(())
    }
}

fn classify(truth: &[f64], pred: &[f64]) -> std::result::Result<DimensionF1, StatsError> {
    let t = tertile_recode(truth)?;
    let labels: Vec<usize> = pred.iter().map(|p| tertile_label(*p, t.cuts)).collect();
    let counts = ConfusionCounts::from_labels(&t.labels, &labels, 3)?;
    Ok(DimensionF1 { n: truth.len(), cuts: t.cuts, report: precision_recall_f1(&counts) })
}

fn polynomial(x: &[f64], y: &[f64]) -> std::result::Result<Polynomial, StatsError> {
    let linear = poly_fit_r2(x, y, 1)?;
    let quadratic = poly_fit_r2(x, y, 2)?;
    Ok(Polynomial {
        response: SATISFACTION.into(),
        predictor: CONNECTIVITY.into(),
        n: x.len(),
        vertex: quadratic.vertex(),
        r2_gain: quadratic.r2 - linear.r2,
        linear,
        quadratic,
    })
}

fn ols_table(surveyed: &[&ImageRecord]) -> std::result::Result<OlsTable, StatsError> {
    let columns: Vec<(String, Vec<f64>)> = TABLE1_BETAS
        .iter()
        .map(|(k, _)| (k.to_string(), surveyed.iter().map(|i| i.feature(k)).collect()))
        .collect();
    let y: Vec<f64> = surveyed.iter().filter_map(|i| i.satisfaction).collect();
    let fit = ols_fit(&columns, &y, true)?;
    Ok(OlsTable {
        response: SATISFACTION.into(),
        n: fit.n,
        df: fit.df,
        r2: fit.r2,
        sigma2: fit.sigma2,
        coefficients: fit.coefficients,
    })
}

fn csv_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

fn ols_csv(t: &OlsTable) -> String {
    let mut s = String::from("term,beta,se,t,p,ci_lo,ci_hi\n");
    for c in &t.coefficients {
        let cells = [c.beta, c.se, c.t, c.p, c.ci_lo, c.ci_hi].map(csv_number);
        s.push_str(&format!("{},{}\n", c.name, cells.join(",")));
    }
    s
}

fn matrix_csv(m: &msef_core::stats::CorrMatrix<f64>) -> String {
    let mut s = format!("variable,{}\n", m.names.join(","));
    for (name, row) in m.names.iter().zip(&m.values) {
        let cells: Vec<String> = row.iter().map(|v| csv_number(*v)).collect();
        s.push_str(&format!("{name},{}\n", cells.join(",")));
    }
    s
}

fn attention_figure(layout: &Layout, images: &BTreeMap<String, ImageRecord>, image_id: &str) -> Result<String> {
    let path = layout.checkpoint();
    if !path.exists() {
        return Err(CliError::user("no checkpoint"));
    }
    let (model, _) = load_checkpoint(&path)?.restore::<f64>()?;
    let record = &images[image_id];
    let tokens = model.vocab.encode(question(OVERALL));
    let out = model.forward(&record.image(), &tokens)?;
    let grid = attention_heatmap(&out, model.config.vit_layers, 0)?;
    Ok(svg::heatmap(&grid, &format!("query attention, {image_id}")))
}

/// Computes every audit statistic from the curated corpus, the human scores
/// and the predictions, then writes `report.json`, its schema, figures and
/// tables.
pub fn run(config: &RunConfig, layout: &Layout) -> Result<AuditSummary> {
    let human_path = layout.curated.join(HUMAN_SCORES_FILE);
    require(&layout.predictions, "predictions file")?;
    require(&human_path, "human scores")?;
    let registry = DimensionRegistry::default();
    let images = load_images(&layout.curated)?;
    let humans: Vec<HumanScore> = read_csv(&human_path)?;
    let predictions: Vec<PredictionRow> = read_csv(&layout.predictions)?;
    for p in &predictions {
        if !images.contains_key(&p.image_id) {
            return Err(CliError::user(format!("prediction for unknown image {}", p.image_id)));
        }
        if registry.get(&p.dimension).is_none() {
            return Err(CliError::user(format!("prediction for unknown dimension {}", p.dimension)));
        }
    }
    let human: BTreeMap<(&str, &str), f64> =
        humans.iter().map(|h| ((h.image_id.as_str(), h.dimension.as_str()), h.normalized_mean)).collect();
    let truth: BTreeMap<&str, BTreeMap<String, f64>> =
        images.iter().map(|(id, rec)| (id.as_str(), truth_scores(rec))).collect();
    let mut by_dim: BTreeMap<&str, Vec<&PredictionRow>> = BTreeMap::new();
    for p in &predictions {
        by_dim.entry(p.dimension.as_str()).or_default().push(p);
    }
    let tol = config.report.tolerance;

    let mut classification = BTreeMap::new();
    for dim in registry.of_kind(DimensionKind::Objective) {
        let rows = by_dim.get(dim.key.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let t: Vec<f64> = rows.iter().map(|p| truth[p.image_id.as_str()][&dim.key]).collect();
        let s: Vec<f64> = rows.iter().map(|p| p.score).collect();
        classification.insert(dim.key.clone(), Stat::from(classify(&t, &s)));
    }
    let f1s: Vec<f64> =
        classification.values().filter_map(|c: &Stat<DimensionF1>| c.value()).map(|c| c.report.macro_avg.f1).collect();
    let macro_f1 = if f1s.is_empty() {
        Stat::omitted("no objective dimension could be classified")
    } else {
        Stat::Ok { value: f1s.iter().sum::<f64>() / f1s.len() as f64 }
    };

    let mut bland = BTreeMap::new();
    let (mut model_all, mut human_all) = (Vec::new(), Vec::new());
    let mut ba_points: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for dim in registry.of_kind(DimensionKind::Subjective) {
        let (mut m, mut h) = (Vec::new(), Vec::new());
        for p in by_dim.get(dim.key.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
            if let Some(v) = human.get(&(p.image_id.as_str(), dim.key.as_str())) {
                m.push(p.score);
                h.push(*v);
            }
        }
        bland.insert(dim.key.clone(), Stat::from(bland_altman(&m, &h)));
        model_all.extend(m.iter().map(|x| x.round()));
        human_all.extend(h.iter().map(|x| x.round()));
        ba_points.insert(dim.key.as_str(), (m, h));
    }
    let agreement = Stat::from((|| {
        Ok(Agreement {
            n: model_all.len(),
            exact: agreement_rate(&model_all, &human_all, AgreementMode::Exact)?,
            fuzzy: agreement_rate(&model_all, &human_all, AgreementMode::Fuzzy(tol))?,
            tolerance: tol,
        })
    })());

    let (mut refs, mut preds) = (Vec::new(), Vec::new());
    for p in &predictions {
        let reference = match registry.get(&p.dimension).map(|d| d.kind) {
            Some(DimensionKind::Subjective) => human.get(&(p.image_id.as_str(), p.dimension.as_str())).copied(),
            _ => Some(truth[p.image_id.as_str()][&p.dimension]),
        };
        if let Some(r) = reference {
            refs.push(Range { lo: r - tol, hi: r + tol });
            preds.push(p.score);
        }
    }
    let out_of_range = Stat::from(
        require_len(&preds, 1, "out-of-range")
            .and_then(|_| out_of_range_rate(&preds, &refs))
            .map(|o| OutOfRangeSummary { n: preds.len(), rate: o.rate, tolerance: tol, offending: o.offending.len() }),
    );

    let surveyed: Vec<&ImageRecord> = images.values().filter(|i| i.satisfaction.is_some()).collect();
    let satisfaction: Vec<f64> = surveyed.iter().filter_map(|i| i.satisfaction).collect();
    let connectivity: Vec<f64> = surveyed.iter().map(|i| i.feature(CONNECTIVITY)).collect();
    let ols = Stat::from(ols_table(&surveyed));
    let poly = Stat::from(polynomial(&connectivity, &satisfaction));
    let mut columns: Vec<(String, Vec<f64>)> =
        FEATURES.iter().map(|k| (k.to_string(), surveyed.iter().map(|i| i.feature(k)).collect())).collect();
    columns.push((SATISFACTION.into(), satisfaction.clone()));
    let mut correlations = BTreeMap::new();
    for (name, method) in [("pearson", CorrMethod::Pearson), ("spearman", CorrMethod::Spearman)] {
        correlations.insert(name.to_string(), Stat::from(corr_matrix(&columns, method)));
    }

    let mut distributions = BTreeMap::new();
    for dim in registry.keys() {
        let xs: Vec<f64> = by_dim.get(dim).map(|r| r.iter().map(|p| p.score).collect()).unwrap_or_default();
        distributions.insert(dim.to_string(), Stat::from(distribution_summary(&xs)));
    }
    distributions.insert(SATISFACTION.to_string(), Stat::from(distribution_summary(&satisfaction)));
    let overall: Vec<f64> = by_dim.get(OVERALL).map(|r| r.iter().map(|p| p.score).collect()).unwrap_or_default();
    let normality = Stat::from(shapiro_wilk(&overall));

    ensure_dir(&layout.report)?;
    let mut figures = Vec::new();
    let mut omitted_figures = BTreeMap::new();
    if config.report.figures {
        let fig_dir = layout.report.join("figures");
        ensure_dir(&fig_dir)?;
        let mut emit = |name: &str, svg: std::result::Result<String, String>| -> Result<()> {
            match svg {
                Ok(text) => {
                    let path = fig_dir.join(name);
                    write_text(&path, &text)?;
                    figures.push(layout.relative(&path));
                }
                Err(reason) => {
                    omitted_figures.insert(name.to_string(), reason);
                }
            }
            Ok(())
        };
        let hist = if satisfaction.is_empty() {
            Err("no surveyed images".to_string())
        } else {
            Ok(svg::histogram(&satisfaction, config.report.histogram_bins.max(1), "Street satisfaction", SATISFACTION))
        };
        emit("satisfaction_histogram.svg", hist)?;
        let scatter = match poly.value() {
            Some(p) => {
                let (lo, hi) = connectivity.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
                let curve: Vec<(f64, f64)> = (0..=50)
                    .map(|i| lo + (hi - lo) * i as f64 / 50.0)
                    .map(|x| (x, p.quadratic.eval(x)))
                    .collect();
                Ok(svg::scatter(&connectivity, &satisfaction, Some(&curve), "Satisfaction against connectivity", CONNECTIVITY, SATISFACTION))
            }
            None => Err("quadratic fit unavailable".to_string()),
        };
        emit("connectivity_scatter.svg", scatter)?;
        let ba = match (bland.get(OVERALL).and_then(|s| s.value()), ba_points.get(OVERALL)) {
            (Some(r), Some((m, h))) => {
                let means: Vec<f64> = m.iter().zip(h).map(|(a, b)| 0.5 * (a + b)).collect();
                let diffs: Vec<f64> = m.iter().zip(h).map(|(a, b)| a - b).collect();
                Ok(svg::bland_altman(&means, &diffs, r.bias, r.lower, r.upper, "Model against survey, overall satisfaction"))
            }
            _ => Err("Bland-Altman unavailable for overall_satisfaction".to_string()),
        };
        emit("bland_altman_overall.svg", ba)?;
        let first = predictions.iter().map(|p| p.image_id.as_str()).collect::<BTreeSet<_>>().into_iter().next();
        let heat = match first {
            Some(id) => attention_figure(layout, &images, id).map_err(|e| e.to_string()),
            None => Err("no predicted images".to_string()),
        };
        emit("attention_heatmap.svg", heat)?;
    }

    let mut tables = Vec::new();
    if config.report.tables {
        let dir = layout.report.join("tables");
        ensure_dir(&dir)?;
        if let Some(t) = ols.value() {
            let path = dir.join("ols.csv");
            write_text(&path, &ols_csv(t))?;
            tables.push(layout.relative(&path));
        }
        for (name, m) in &correlations {
            if let Some(m) = m.value() {
                let path = dir.join(format!("correlations_{name}.csv"));
                write_text(&path, &matrix_csv(m))?;
                tables.push(layout.relative(&path));
            }
        }
    }

    let checkpoint = layout.checkpoint();
    let inputs = hash_inputs(
        layout,
        &[
            &layout.predictions,
            &human_path,
            &layout.curated.join(msef_data::synth::corpus::IMAGES_FILE),
            &layout.curated.join(msef_data::synth::corpus::TRIPLETS_FILE),
            &checkpoint,
        ],
    )?;
    let predicted: BTreeSet<&str> = predictions.iter().map(|p| p.image_id.as_str()).collect();
    let report = EvalReport {
        schema_version: SCHEMA_VERSION.into(),
        seed: config.seed,
        inputs,
        counts: Counts {
            images: images.len(),
            surveyed_images: surveyed.len(),
            predicted_images: predicted.len(),
            predictions: predictions.len(),
        },
        classification,
        macro_f1,
        agreement,
        bland_altman: bland,
        ols,
        polynomial: poly,
        correlations,
        out_of_range,
        distributions,
        normality,
        figures,
        tables,
        omitted_figures,
    };
    let mut omitted = Vec::new();
    let json = serde_json::to_value(&report)?;
    collect_omitted(&json, "", &mut omitted);
    omitted.extend(report.omitted_figures.iter().map(|(name, reason)| format!("figure {name}: {reason}")));
    let path = layout.report.join(REPORT_FILE);
    write_text(&path, &(serde_json::to_string_pretty(&json)? + "\n"))?;
    write_text(&layout.report.join(SCHEMA_FILE), &(serde_json::to_string_pretty(&schema())? + "\n"))?;
    Ok(AuditSummary { report: path, omitted, figures: report.figures.len() })
}

fn collect_omitted(v: &serde_json::Value, at: &str, out: &mut Vec<String>) {
    if let serde_json::Value::Object(map) = v {
        if map.get("status").and_then(|s| s.as_str()) == Some("omitted") {
            let reason = map.get("reason").and_then(|r| r.as_str()).unwrap_or("");
            out.push(format!("{at}: {reason}"));
            return;
        }
        for (k, child) in map {
            let path = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
            collect_omitted(child, &path, out);
        }
    }
}
