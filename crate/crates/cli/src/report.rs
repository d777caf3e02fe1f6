//! Metric files written by `evaluate` and the tables rendered by `report`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kgcl_core::eval::{two_sample_ttest, EvalReport};
use kgcl_core::{Error, Result};
use serde_json::{json, Value};

use crate::commands::write_file;
use crate::config::RunConfig;
use crate::workspace;

/// Named headline metrics in display order.
pub fn metric_rows(report: &EvalReport, diversity_k: usize) -> Vec<(String, Option<f64>)> {
    let mut rows = vec![("auc".to_string(), report.auc), ("f1".to_string(), report.f1)];
    rows.extend(report.ranking.iter().map(|&(k, r, _)| (format!("recall@{k}"), Some(r))));
    rows.extend(report.ranking.iter().map(|&(k, _, n)| (format!("ndcg@{k}"), Some(n))));
    rows.push((format!("inter@{diversity_k}"), report.inter_list));
    rows.push((format!("intra@{diversity_k}"), report.intra_list));
    rows.push(("alignment".to_string(), report.alignment));
    rows.push(("uniformity".to_string(), report.uniformity));
    rows
}

fn na(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "NA".into())
}

pub fn write_metrics(dir: &Path, cfg: &RunConfig, split: &str, report: &EvalReport) -> Result<()> {
    let rows = metric_rows(report, cfg.eval.diversity_k);
    let k = cfg.eval.cold_start_k;

    let mut tsv = String::from("metric\tvalue\n");
    for (name, v) in &rows {
        writeln!(tsv, "{name}\t{}", na(*v)).unwrap();
    }
    writeln!(tsv, "ranked_users\t{}", report.ranked_users).unwrap();
    write_file(&dir.join(workspace::METRICS_TSV), &tsv)?;

    let mut cold = format!("percentile\tmax_interactions\tusers\tndcg@{k}\trecall@{k}\n");
    for r in &report.cold_start {
        writeln!(
            cold,
            "{}\t{}\t{}\t{}\t{}",
            r.percentile,
            r.max_interactions,
            r.users,
            na(r.ndcg),
            na(r.recall)
        )
        .unwrap();
    }
    write_file(&dir.join(workspace::COLD_START), &cold)?;

    let doc = json!({
        "arm": cfg.arm(),
        "split": split,
        "seed": cfg.seed(),
        "gamma": cfg.hp.gamma,
        "contrastive": cfg.contrastive.map(|m| m.as_str()),
        "semantic_text": cfg.use_embeddings(),
        "metrics": rows.iter().map(|(n, v)| json!({"name": n, "value": v})).collect::<Vec<_>>(),
        "ranked_users": report.ranked_users,
        "cold_start_k": k,
        "cold_start": report.cold_start.iter().map(|r| json!({
            "percentile": r.percentile,
            "max_interactions": r.max_interactions,
            "users": r.users,
            "ndcg": r.ndcg,
            "recall": r.recall,
        })).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("metrics serialize");
    text.push('\n');
    write_file(&dir.join(workspace::METRICS_JSON), &text)
}

/// Left-aligned first column, right-aligned others.
pub fn table(title: &str, header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width = header.iter().map(|h| h.chars().count()).collect::<Vec<_>>();
    for r in rows {
        for (i, c) in r.iter().enumerate().take(cols) {
            width[i] = width[i].max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            let pad = width[i] - c.chars().count();
            if i > 0 {
                s.push_str("  ");
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            } else {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            }
        }
        s.trim_end().to_string()
    };
    let mut out = format!("{title}\n");
    out.push_str(&line(header));
    out.push('\n');
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

fn fmt4(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

/// Summary printed by `evaluate`.
pub fn render_single(cfg: &RunConfig, split: &str, report: &EvalReport) -> String {
    let rows: Vec<Vec<String>> = metric_rows(report, cfg.eval.diversity_k)
        .into_iter()
        .map(|(n, v)| vec![n, fmt4(v)])
        .collect();
    let mut out = table(
        &format!("{} on {split} ({} users ranked)", cfg.arm(), report.ranked_users),
        &["metric".into(), "value".into()],
        &rows,
    );
    let k = cfg.eval.cold_start_k;
    let cold: Vec<Vec<String>> = report
        .cold_start
        .iter()
        .map(|r| {
            vec![
                format!("bottom {}%", r.percentile),
                r.max_interactions.to_string(),
                r.users.to_string(),
                fmt4(r.ndcg),
                fmt4(r.recall),
            ]
        })
        .collect();
    out.push('\n');
    out.push_str(&table(
        "cold start",
        &[
            "stratum".into(),
            "max train".into(),
            "users".into(),
            format!("ndcg@{k}"),
            format!("recall@{k}"),
        ],
        &cold,
    ));
    out
}

/// One evaluated run read back from `metrics.json`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub label: String,
    pub source: PathBuf,
    /// Headline metrics followed by `cold@<p>` NDCG per stratum.
    pub values: Vec<(String, Option<f64>)>,
}

impl RunMetrics {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).and_then(|(_, v)| *v)
    }
}

/// Reads `[label=]path`, where path is a run directory or a metrics file.
pub fn read_run(spec: &str) -> Result<RunMetrics> {
    let (label, raw) = match spec.split_once('=') {
        Some((l, p)) if !l.is_empty() => (Some(l.to_string()), p),
        _ => (None, spec),
    };
    let mut path = PathBuf::from(raw);
    if path.is_dir() {
        path = path.join(workspace::METRICS_JSON);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let bad = |msg: &str| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        msg: msg.to_string(),
    };
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    let label = match label {
        Some(l) => l,
        None => doc["arm"].as_str().ok_or_else(|| bad("missing `arm`"))?.to_string(),
    };
    let mut values = Vec::new();
    for m in doc["metrics"].as_array().ok_or_else(|| bad("missing `metrics`"))? {
        let name = m["name"].as_str().ok_or_else(|| bad("metric without a name"))?;
        values.push((name.to_string(), m["value"].as_f64()));
    }
    for r in doc["cold_start"].as_array().map(Vec::as_slice).unwrap_or_default() {
        let p = r["percentile"]
            .as_f64()
            .ok_or_else(|| bad("stratum without a percentile"))?;
        values.push((format!("cold@{p}"), r["ndcg"].as_f64()));
    }
    Ok(RunMetrics {
        label,
        source: path,
        values,
    })
}

struct Arm<'a> {
    label: &'a str,
    runs: Vec<&'a RunMetrics>,
}

impl Arm<'_> {
    fn sample(&self, metric: &str) -> Vec<f64> {
        self.runs.iter().filter_map(|r| r.get(metric)).collect()
    }

    fn cell(&self, metric: &str) -> String {
        let xs = self.sample(metric);
        match xs.len() {
            0 => "-".into(),
            1 => format!("{:.4}", xs[0]),
            n => {
                let mean = xs.iter().sum::<f64>() / n as f64;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                format!("{mean:.4} ± {:.4}", var.sqrt())
            }
        }
    }
}

fn group(runs: &[RunMetrics]) -> Vec<Arm<'_>> {
    let mut arms: Vec<Arm<'_>> = Vec::new();
    for r in runs {
        match arms.iter_mut().find(|a| a.label == r.label) {
            Some(a) => a.runs.push(r),
            None => arms.push(Arm {
                label: &r.label,
                runs: vec![r],
            }),
        }
    }
    arms
}

fn metric_names(runs: &[RunMetrics], keep: impl Fn(&str) -> bool) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in runs {
        for (n, _) in &r.values {
            if keep(n) && !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    names
}

fn arm_table(title: &str, arms: &[Arm<'_>], metrics: &[String], with_runs: bool) -> String {
    let mut header = vec!["arm".to_string()];
    if with_runs {
        header.push("runs".into());
    }
    header.extend(metrics.iter().cloned());
    let rows: Vec<Vec<String>> = arms
        .iter()
        .map(|a| {
            let mut row = vec![a.label.to_string()];
            if with_runs {
                row.push(a.runs.len().to_string());
            }
            row.extend(metrics.iter().map(|m| a.cell(m)));
            row
        })
        .collect();
    table(title, &header, &rows)
}

/// Aligned tables over runs grouped by arm, with Welch tests of every arm
/// against `baseline` where both have at least two runs.
pub fn render_report(runs: &[RunMetrics], baseline: &str) -> String {
    let arms = group(runs);
    let ctr = metric_names(runs, |n| n == "auc" || n == "f1");
    let topk = metric_names(runs, |n| n.starts_with("recall@") || n.starts_with("ndcg@"));
    let geometry = metric_names(runs, |n| {
        n.starts_with("inter@") || n.starts_with("intra@") || n == "alignment" || n == "uniformity"
    });
    let cold = metric_names(runs, |n| n.starts_with("cold@"));

    let mut out = arm_table("CTR prediction", &arms, &ctr, true);
    out.push('\n');
    out.push_str(&arm_table("Top-K recommendation", &arms, &topk, false));
    out.push('\n');
    out.push_str(&arm_table("Diversity and embedding geometry", &arms, &geometry, false));
    if !cold.is_empty() {
        out.push('\n');
        out.push_str(&arm_table(
            "Cold start (NDCG by training-count percentile)",
            &arms,
            &cold,
            false,
        ));
    }

    let Some(base) = arms.iter().find(|a| a.label == baseline) else {
        return out;
    };
    let mut rows = Vec::new();
    for arm in arms.iter().filter(|a| a.label != baseline) {
        for m in ctr.iter().chain(&topk).chain(&geometry) {
            let (a, b) = (arm.sample(m), base.sample(m));
            if a.len() < 2 || b.len() < 2 {
                continue;
            }
            let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
            let (t, p) = match two_sample_ttest(&a, &b) {
                Ok(r) => (format!("{:.3}", r.t), format!("{:.2e}", r.p)),
                Err(_) => ("-".into(), "-".into()),
            };
            rows.push(vec![
                arm.label.to_string(),
                m.clone(),
                format!("{:.4}", mean(&b)),
                format!("{:.4}", mean(&a)),
                t,
                p,
            ]);
        }
    }
    if !rows.is_empty() {
        out.push('\n');
        out.push_str(&table(
            &format!("Welch t-test against `{baseline}`"),
            &[
                "arm".into(),
                "metric".into(),
                "baseline".into(),
                "arm mean".into(),
                "t".into(),
                "p".into(),
            ],
            &rows,
        ));
    }
    out
}
