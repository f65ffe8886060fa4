//! Per-cell metric reports and rendered result tables.
//!
//! Each cell gets a machine-readable `metrics/<cell>.json` plus CSV views;
//! `render_tables` folds every cell into `report/tables.{csv,json,md}` with
//! the average-performance, bootstrap-mean, and confidence-interval column
//! groups. Cells named by the manifest but missing their metrics artifacts
//! render as explicit "missing" rows.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::llmclient::LedgerSummary;
use crate::metrics::TemporalStats;
use crate::stats::{BootstrapResult, StabilityResult};

use super::manifest::RunManifest;
use super::RunnerError;

/// Aggregates of one repetition of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepMetrics {
    pub rep: usize,
    pub users_prompted: usize,
    /// Users with non-empty ground truth, admitted to accuracy metrics.
    pub users_scored: usize,
    /// Users excluded for empty ground truth.
    pub users_excluded: usize,
    pub users_failed: usize,
    pub users_skipped: usize,
    pub ndcg: f64,
    pub recall: f64,
    pub hit_rate: f64,
    pub hit_indicator: f64,
    pub average_rank: Option<f64>,
    pub gini: Option<f64>,
    pub hhi: Option<f64>,
    pub entropy: Option<f64>,
    pub coverage: f64,
    pub temporal: Option<TemporalStats>,
    pub matched_slots: usize,
    pub unmatched_slots: usize,
    /// Percentile bootstrap per accuracy metric, keyed "ndcg"/"recall"/"hit_rate".
    pub bootstrap: BTreeMap<String, BootstrapResult>,
}

/// Full report for one cell across its repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub cell: String,
    pub eval_k: usize,
    pub reps: Vec<RepMetrics>,
    /// Cross-repetition stability per metric; present when reps >= 2.
    pub stability: BTreeMap<String, StabilityResult>,
}

impl CellReport {
    pub fn compute_stability(&mut self) {
        self.stability.clear();
        if self.reps.len() < 2 {
            return;
        }
        type Getter = fn(&RepMetrics) -> f64;
        let series: [(&str, Getter); 4] = [
            ("ndcg", |r| r.ndcg),
            ("recall", |r| r.recall),
            ("hit_rate", |r| r.hit_rate),
            ("coverage", |r| r.coverage),
        ];
        for (name, get) in series {
            let values: Vec<f64> = self.reps.iter().map(get).collect();
            if let Ok(result) = crate::stats::stability_summary(&values) {
                self.stability.insert(name.to_string(), result);
            }
        }
    }

    /// Long-format CSV: one row per (rep, metric).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "cell,rep,metric,value,bootstrap_mean,ci_low,ci_high")?;
        for rep in &self.reps {
            let rows: Vec<(&str, Option<f64>)> = vec![
                ("ndcg", Some(rep.ndcg)),
                ("recall", Some(rep.recall)),
                ("hit_rate", Some(rep.hit_rate)),
                ("hit_indicator", Some(rep.hit_indicator)),
                ("average_rank", rep.average_rank),
                ("gini", rep.gini),
                ("hhi", rep.hhi),
                ("entropy", rep.entropy),
                ("coverage", Some(rep.coverage)),
                ("median_year", rep.temporal.as_ref().map(|t| t.median_year)),
                ("std_year", rep.temporal.as_ref().map(|t| t.std_year)),
            ];
            for (metric, value) in rows {
                let value = value.map(|v| format!("{v:.6}")).unwrap_or_default();
                let (bm, lo, hi) = match rep.bootstrap.get(metric) {
                    Some(b) => (
                        format!("{:.6}", b.mean_of_means),
                        format!("{:.6}", b.ci_low),
                        format!("{:.6}", b.ci_high),
                    ),
                    None => (String::new(), String::new(), String::new()),
                };
                writeln!(
                    w,
                    "{},{},{metric},{value},{bm},{lo},{hi}",
                    self.cell, rep.rep
                )?;
            }
        }
        Ok(())
    }

    pub fn save(&self, metrics_dir: &Path) -> Result<(), RunnerError> {
        std::fs::create_dir_all(metrics_dir).map_err(|e| RunnerError::Io {
            path: metrics_dir.display().to_string(),
            source: e,
        })?;
        let json_path = metrics_dir.join(format!("{}.json", self.cell));
        let raw = serde_json::to_string_pretty(self).expect("report serialization is infallible");
        std::fs::write(&json_path, raw + "\n").map_err(|e| RunnerError::Io {
            path: json_path.display().to_string(),
            source: e,
        })?;
        let csv_path = metrics_dir.join(format!("{}.csv", self.cell));
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a vec cannot fail");
        std::fs::write(&csv_path, buf).map_err(|e| RunnerError::Io {
            path: csv_path.display().to_string(),
            source: e,
        })
    }

    pub fn load(metrics_dir: &Path, cell: &str) -> Result<Self, RunnerError> {
        let path = metrics_dir.join(format!("{cell}.json"));
        let raw = std::fs::read_to_string(&path).map_err(|e| RunnerError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&raw)
            .map_err(|e| RunnerError::Config(format!("metrics {}: {e}", path.display())))
    }
}

/// Confidence interval rendered as "(lo, hi)" with 6 decimals.
pub fn format_ci(result: &BootstrapResult) -> String {
    format!("({:.6}, {:.6})", result.ci_low, result.ci_high)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}"))
        .unwrap_or_else(|| "-".to_string())
}

const TABLE_HEADER: [&str; 14] = [
    "cell",
    "ndcg",
    "recall",
    "hit_rate",
    "bootstrap_ndcg",
    "ndcg_ci",
    "bootstrap_recall",
    "recall_ci",
    "gini",
    "hhi",
    "entropy",
    "coverage",
    "median_year",
    "ndcg_run_std",
];

fn table_row(report: &CellReport) -> Vec<String> {
    let rep0 = &report.reps[0];
    let boot = |name: &str| rep0.bootstrap.get(name);
    vec![
        report.cell.clone(),
        format!("{:.6}", rep0.ndcg),
        format!("{:.6}", rep0.recall),
        format!("{:.6}", rep0.hit_rate),
        fmt_opt(boot("ndcg").map(|b| b.mean_of_means)),
        boot("ndcg")
            .map(format_ci)
            .unwrap_or_else(|| "-".to_string()),
        fmt_opt(boot("recall").map(|b| b.mean_of_means)),
        boot("recall")
            .map(format_ci)
            .unwrap_or_else(|| "-".to_string()),
        fmt_opt(rep0.gini),
        fmt_opt(rep0.hhi),
        fmt_opt(rep0.entropy),
        format!("{:.6}", rep0.coverage),
        fmt_opt(rep0.temporal.as_ref().map(|t| t.median_year)),
        fmt_opt(report.stability.get("ndcg").map(|s| s.std)),
    ]
}

fn missing_row(cell: &str) -> Vec<String> {
    let mut row = vec![cell.to_string()];
    row.extend(std::iter::repeat_n(
        "missing".to_string(),
        TABLE_HEADER.len() - 1,
    ));
    row
}

#[derive(Serialize)]
struct TablesJson<'a> {
    config_hash: &'a str,
    cells: BTreeMap<String, Option<&'a CellReport>>,
    cost: Option<&'a LedgerSummary>,
}

/// Render `report/tables.{csv,json,md}` from the manifest and the per-cell
/// metrics artifacts under `results_dir`. Idempotent: re-rendering writes
/// byte-identical files.
pub fn render_tables(results_dir: &Path) -> Result<(), RunnerError> {
    let manifest = RunManifest::load(&results_dir.join("manifest.json"))?;
    let metrics_dir = results_dir.join("metrics");
    let report_dir = results_dir.join("report");
    std::fs::create_dir_all(&report_dir).map_err(|e| RunnerError::Io {
        path: report_dir.display().to_string(),
        source: e,
    })?;

    let mut reports: BTreeMap<String, Option<CellReport>> = BTreeMap::new();
    for cell in manifest.cells.keys() {
        reports.insert(cell.clone(), CellReport::load(&metrics_dir, cell).ok());
    }
    let cost: Option<LedgerSummary> = std::fs::read_to_string(results_dir.join("report/cost.json"))
        .ok()
        .and_then(|raw| serde_json::from_str(&raw).ok());

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (cell, report) in &reports {
        match report {
            Some(r) if !r.reps.is_empty() => rows.push(table_row(r)),
            _ => rows.push(missing_row(cell)),
        }
    }

    // csv
    let mut csv = String::new();
    csv.push_str(&TABLE_HEADER.join(","));
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    write_atomic(&report_dir.join("tables.csv"), csv.as_bytes())?;

    // json
    let json = TablesJson {
        config_hash: &manifest.config_hash,
        cells: reports
            .iter()
            .map(|(k, v)| (k.clone(), v.as_ref()))
            .collect(),
        cost: cost.as_ref(),
    };
    let raw = serde_json::to_string_pretty(&json).expect("tables serialization is infallible");
    write_atomic(&report_dir.join("tables.json"), (raw + "\n").as_bytes())?;

    // aligned markdown
    let mut widths: Vec<usize> = TABLE_HEADER.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (i, value) in row.iter().enumerate() {
            widths[i] = widths[i].max(value.len());
        }
    }
    let mut md = String::new();
    let fmt_row = |cells: &[String], widths: &[usize]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}", w = w))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let header: Vec<String> = TABLE_HEADER.iter().map(|s| s.to_string()).collect();
    md.push_str(&fmt_row(&header, &widths));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    md.push_str(&fmt_row(&rule, &widths));
    for row in &rows {
        md.push_str(&fmt_row(row, &widths));
    }
    if let Some(cost) = &cost {
        md.push_str(&format!(
            "\nCost: {} calls, ${:.4} total, {:.1} mean tokens/call\n",
            cost.calls, cost.total_cost, cost.mean_tokens_per_call
        ));
    }
    write_atomic(&report_dir.join("tables.md"), md.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunnerError> {
    std::fs::write(path, bytes).map_err(|e| RunnerError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
