//! Run-directory persistence and report rendering.
//!
//! Every run directory has the same five artifacts: `meta.json` (the full
//! resolved config, classification, constants, and tool version — and the
//! directory's only timestamp), `series.csv` (the recorded data, RFC-4180
//! quoting), `verdicts.json` (the suite verdict block), `report.md`
//! (timestamp-free markdown rendered from the other files), and
//! `plots.gp` (a plain-text gnuplot script referencing `series.csv`).
//! The directory is self-describing: the report and plot script can be
//! regenerated from the other artifacts alone, byte-identically.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::decay_harness::{EnvelopeResult, HarnessError, KernelNormRow, NormSeries, WeightSpec};
use crate::evolution_engine::PicardOutcome;
use crate::exponent_calculus::{
    DecayRateTable, DerivedConstants, ParamError, ProblemParams, ScanSummary, Scenario,
    TheoremVerdict,
};

pub const META_FILE: &str = "meta.json";
pub const SERIES_FILE: &str = "series.csv";
pub const VERDICTS_FILE: &str = "verdicts.json";
pub const REPORT_FILE: &str = "report.md";
pub const PLOTS_FILE: &str = "plots.gp";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

fn io_err(path: &Path, source: std::io::Error) -> ReportError {
    ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Everything needed to re-interpret a run directory: tool and format
/// versions, the command, the full resolved config, and the
/// classification attached to it. `created_unix` is the only timestamp
/// anywhere in the directory and is never echoed into the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool: String,
    pub version: String,
    pub format_version: u32,
    pub command: String,
    #[serde(default)]
    pub created_unix: Option<u64>,
    pub config: RunConfig,
    #[serde(default)]
    pub verdict: Option<TheoremVerdict>,
    #[serde(default)]
    pub constants: Option<DerivedConstants>,
    #[serde(default)]
    pub rates: Option<DecayRateTable>,
}

impl RunMeta {
    pub fn new(command: &str, config: RunConfig) -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
        RunMeta {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            format_version: 1,
            command: command.to_string(),
            created_unix,
            config,
            verdict: None,
            constants: None,
            rates: None,
        }
    }
}

/// The verdict block of a run directory, tagged by suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "suite", rename_all = "snake_case")]
pub enum Verdicts {
    Check {
        verdict: TheoremVerdict,
        constants: DerivedConstants,
        rates: Option<DecayRateTable>,
    },
    Scan {
        summary: ScanSummary,
    },
    Kernel {
        rows: Vec<KernelNormRow>,
    },
    Linear {
        rows: Vec<EnvelopeResult>,
    },
    Run {
        scenario: Scenario,
        weights: Option<WeightSpec>,
        /// X(T): the weighted sup norm over the whole horizon.
        x_norm: Option<f64>,
        envelopes: Vec<EnvelopeResult>,
        gn: Vec<EnvelopeResult>,
        /// Time at which the run truncated on non-finite values, if any.
        blowup: Option<f64>,
    },
    Picard {
        outcome: PicardOutcome,
    },
}

pub fn ensure_dir(dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn read_text(path: &Path) -> Result<String, ReportError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ReportError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    write_text(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ReportError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| ReportError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn write_meta(dir: &Path, meta: &RunMeta) -> Result<(), ReportError> {
    write_json(&dir.join(META_FILE), meta)
}

pub fn read_meta(dir: &Path) -> Result<RunMeta, ReportError> {
    read_json(&dir.join(META_FILE))
}

pub fn write_verdicts(dir: &Path, verdicts: &Verdicts) -> Result<(), ReportError> {
    write_json(&dir.join(VERDICTS_FILE), verdicts)
}

pub fn read_verdicts(dir: &Path) -> Result<Verdicts, ReportError> {
    read_json(&dir.join(VERDICTS_FILE))
}

/// JSON's shortest-roundtrip rendering of a float; used everywhere a
/// number is printed so that report tables echo `verdicts.json` exactly.
pub fn fmt_f64(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| v.to_string())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "-".into())
}

/// Writes a norm series as CSV: header `t`, then one column per norm.
pub fn write_series(dir: &Path, series: &NormSeries) -> Result<(), ReportError> {
    let path = dir.join(SERIES_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| ReportError::Csv {
        path: path.clone(),
        source: e,
    })?;
    let mut header = vec!["t".to_string()];
    header.extend(series.column_names().map(|s| s.to_string()));
    let write = |w: &mut csv::Writer<std::fs::File>, rec: Vec<String>| {
        w.write_record(&rec).map_err(|e| ReportError::Csv {
            path: path.clone(),
            source: e,
        })
    };
    write(&mut w, header)?;
    for (i, &t) in series.times.iter().enumerate() {
        let mut rec = vec![fmt_f64(t)];
        rec.extend(series.columns.iter().map(|(_, vals)| fmt_f64(vals[i])));
        write(&mut w, rec)?;
    }
    w.flush().map_err(|e| io_err(&path, e))
}

/// Reads a norm series back from CSV. The blow-up flag is not part of
/// the CSV; it travels in the verdict block.
pub fn read_series(dir: &Path) -> Result<NormSeries, ReportError> {
    let path = dir.join(SERIES_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| ReportError::Csv {
        path: path.clone(),
        source: e,
    })?;
    let headers: Vec<String> = r
        .headers()
        .map_err(|e| ReportError::Csv {
            path: path.clone(),
            source: e,
        })?
        .iter()
        .map(|s| s.to_string())
        .collect();
    if headers.first().map(String::as_str) != Some("t") {
        return Err(ReportError::Malformed {
            path,
            message: "first CSV column must be `t`".into(),
        });
    }
    let mut times = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len().saturating_sub(1)];
    for rec in r.records() {
        let rec = rec.map_err(|e| ReportError::Csv {
            path: path.clone(),
            source: e,
        })?;
        let parse = |s: &str| -> Result<f64, ReportError> {
            s.parse::<f64>().map_err(|_| ReportError::Malformed {
                path: path.clone(),
                message: format!("not a number: {s:?}"),
            })
        };
        times.push(parse(rec.get(0).unwrap_or(""))?);
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(parse(rec.get(c + 1).unwrap_or(""))?);
        }
    }
    let mut series = NormSeries::new(times)?;
    for (name, vals) in headers.iter().skip(1).zip(cols) {
        series.add_column(name.clone(), vals)?;
    }
    Ok(series)
}

/// One row of the scan region map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCsvRow {
    pub n: u32,
    pub sigma1: f64,
    pub sigma2: f64,
    pub m: f64,
    pub q: f64,
    pub p1: f64,
    pub p2: f64,
    /// Scenario display name, or "invalid" for rejected tuples.
    pub scenario: String,
    pub eps_p1_sigma2: Option<f64>,
    pub eps_p2_sigma1: Option<f64>,
    /// Classification note or the validation error message.
    pub note: String,
}

/// Flattens scan results into CSV rows, one per grid tuple.
pub fn scan_rows(
    results: &[(ProblemParams, Result<TheoremVerdict, ParamError>)],
) -> Vec<ScanCsvRow> {
    results
        .iter()
        .map(|(p, res)| {
            let (scenario, e1, e2, note) = match res {
                Ok(v) => (
                    v.scenario.to_string(),
                    v.eps_p1_sigma2,
                    v.eps_p2_sigma1,
                    v.note.clone().unwrap_or_default(),
                ),
                Err(e) => ("invalid".to_string(), None, None, e.to_string()),
            };
            ScanCsvRow {
                n: p.n,
                sigma1: p.sigma1,
                sigma2: p.sigma2,
                m: p.m,
                q: p.q,
                p1: p.p1,
                p2: p.p2,
                scenario,
                eps_p1_sigma2: e1,
                eps_p2_sigma1: e2,
                note,
            }
        })
        .collect()
}

pub fn write_scan_csv(dir: &Path, rows: &[ScanCsvRow]) -> Result<(), ReportError> {
    let path = dir.join(SERIES_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| ReportError::Csv {
        path: path.clone(),
        source: e,
    })?;
    for row in rows {
        w.serialize(row).map_err(|e| ReportError::Csv {
            path: path.clone(),
            source: e,
        })?;
    }
    // An empty scan still gets a header line.
    if rows.is_empty() {
        w.write_record([
            "n",
            "sigma1",
            "sigma2",
            "m",
            "q",
            "p1",
            "p2",
            "scenario",
            "eps_p1_sigma2",
            "eps_p2_sigma1",
            "note",
        ])
        .map_err(|e| ReportError::Csv {
            path: path.clone(),
            source: e,
        })?;
    }
    w.flush().map_err(|e| io_err(&path, e))
}

pub fn read_scan_csv(dir: &Path) -> Result<Vec<ScanCsvRow>, ReportError> {
    let path = dir.join(SERIES_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| ReportError::Csv {
        path: path.clone(),
        source: e,
    })?;
    r.deserialize()
        .map(|rec| {
            rec.map_err(|e| ReportError::Csv {
                path: path.clone(),
                source: e,
            })
        })
        .collect()
}

/// A serde-renamed identifier as its wire string (e.g. family "1.1/1.3").
pub fn serde_name<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v)
        .unwrap_or_default()
        .trim_matches('"')
        .to_string()
}

/// The cmd_check headline: the scenario's display name, whether it
/// applies, and the loss exponent in the slot the scenario reads.
pub fn scenario_line(verdict: &TheoremVerdict) -> String {
    // The examples print integral losses without a trailing ".0".
    let short = |v: f64| {
        if v.is_finite() && v == v.trunc() && v.abs() < 1e15 {
            format!("{}", v as i64)
        } else {
            fmt_f64(v)
        }
    };
    match verdict.scenario {
        Scenario::None => format!("{}", verdict.scenario),
        Scenario::Thm11Loss => format!(
            "{}: APPLIES, \u{3b5}(p\u{2081},\u{3c3}\u{2082})={}",
            verdict.scenario,
            verdict
                .eps_p1_sigma2
                .map(short)
                .unwrap_or_else(|| "-".into())
        ),
        Scenario::Thm12Loss => format!(
            "{}: APPLIES, \u{3b5}(p\u{2082},\u{3c3}\u{2081})={}",
            verdict.scenario,
            verdict
                .eps_p2_sigma1
                .map(short)
                .unwrap_or_else(|| "-".into())
        ),
        _ => format!("{}: APPLIES", verdict.scenario),
    }
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    out.push('|');
    for h in header {
        out.push_str(&format!(" {h} |"));
    }
    out.push_str("\n|");
    for _ in header {
        out.push_str(" --- |");
    }
    out.push('\n');
    for row in rows {
        out.push('|');
        for cell in row {
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
}

fn pass_label(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn envelope_table(out: &mut String, rows: &[EnvelopeResult]) {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                format!("`{}`", r.column),
                fmt_f64(r.exponent),
                fmt_f64(r.early_sup),
                fmt_f64(r.late_sup),
                fmt_f64(r.sup_constant),
                fmt_opt(r.fitted_slope),
                pass_label(r.pass).to_string(),
            ]
        })
        .collect();
    table(
        out,
        &[
            "column",
            "exponent",
            "early sup",
            "late sup",
            "sup constant",
            "fitted slope",
            "verdict",
        ],
        &body,
    );
}

fn classification_section(
    out: &mut String,
    verdict: &TheoremVerdict,
    constants: Option<&DerivedConstants>,
    rates: Option<&DecayRateTable>,
) {
    out.push_str("## Classification\n\n");
    out.push_str(&scenario_line(verdict));
    out.push('\n');
    if let Some(note) = &verdict.note {
        out.push_str(&format!("\n> {note}\n"));
    }
    out.push('\n');
    if verdict.eps_p1_sigma2.is_some() || verdict.eps_p2_sigma1.is_some() {
        out.push_str(&format!(
            "Loss exponents: \u{3b5}(p\u{2081},\u{3c3}\u{2082}) = {}, \u{3b5}(p\u{2082},\u{3c3}\u{2081}) = {}\n\n",
            fmt_opt(verdict.eps_p1_sigma2),
            fmt_opt(verdict.eps_p2_sigma1),
        ));
    }
    if let Some(c) = constants {
        out.push_str("### Derived constants\n\n");
        table(
            out,
            &["[n/2]", "alpha", "beta", "gamma", "kappa1", "kappa2", "r"],
            &[vec![
                c.half_n.to_string(),
                fmt_f64(c.alpha),
                fmt_f64(c.beta),
                fmt_f64(c.gamma),
                fmt_f64(c.kappa1),
                fmt_f64(c.kappa2),
                fmt_f64(c.r),
            ]],
        );
        out.push('\n');
    }
    if let Some(r) = rates {
        out.push_str("### Predicted decay rates (exponent of (1+t))\n\n");
        table(
            out,
            &[
                "component",
                "L^q",
                "\\|D\\|^sigma and d/dt",
                "\\|D\\|^{2 sigma}",
            ],
            &[
                vec![
                    "u".into(),
                    fmt_f64(r.u.rate_lq),
                    fmt_f64(r.u.rate_mid),
                    fmt_f64(r.u.rate_top),
                ],
                vec![
                    "v".into(),
                    fmt_f64(r.v.rate_lq),
                    fmt_f64(r.v.rate_mid),
                    fmt_f64(r.v.rate_top),
                ],
            ],
        );
        out.push('\n');
    }
    out.push_str("### Conditions\n\n");
    let rows: Vec<Vec<String>> = verdict
        .report
        .entries
        .iter()
        .map(|c| {
            vec![
                serde_name(&c.family),
                serde_name(&c.id),
                fmt_f64(c.lhs),
                fmt_f64(c.rhs),
                if c.satisfied {
                    "holds".into()
                } else {
                    "violated".into()
                },
                c.note.clone(),
            ]
        })
        .collect();
    table(
        out,
        &["family", "condition", "lhs", "rhs", "status", "note"],
        &rows,
    );
    out.push('\n');
}

fn config_section(out: &mut String, meta: &RunMeta) {
    let p = &meta.config.params;
    out.push_str("## Configuration\n\n");
    table(
        out,
        &["n", "sigma1", "sigma2", "m", "q", "p1", "p2"],
        &[vec![
            p.n.to_string(),
            fmt_f64(p.sigma1),
            fmt_f64(p.sigma2),
            fmt_f64(p.m),
            fmt_f64(p.q),
            fmt_f64(p.p1),
            fmt_f64(p.p2),
        ]],
    );
    let grid = serde_json::to_string(&meta.config.grid).unwrap_or_default();
    let stepper = serde_json::to_string(&meta.config.stepper).unwrap_or_default();
    let data = serde_json::to_string(&meta.config.data).unwrap_or_default();
    out.push_str(&format!("\n- grid: `{grid}`\n"));
    out.push_str(&format!("- stepper: `{stepper}`\n"));
    out.push_str(&format!("- data: `{data}`\n"));
    out.push_str(&format!(
        "- horizon: t_end = {}\n\n",
        fmt_f64(meta.config.t_end)
    ));
}

fn series_section(out: &mut String, series: Option<&NormSeries>) {
    out.push_str("## Series\n\n");
    match series {
        Some(s) if !s.times.is_empty() => {
            let first = *s.times.first().unwrap();
            let last = *s.times.last().unwrap();
            out.push_str(&format!(
                "{} samples, t in [{}, {}], columns: {}\n\n",
                s.times.len(),
                fmt_f64(first),
                fmt_f64(last),
                s.column_names()
                    .map(|c| format!("`{c}`"))
                    .collect::<Vec<_>>()
                    .join(", "),
            ));
        }
        _ => out.push_str("no data\n\n"),
    }
}

/// Renders the timestamp-free markdown report from the other artifacts.
pub fn render_report(meta: &RunMeta, verdicts: &Verdicts, series: Option<&NormSeries>) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {} {} report\n\n", meta.tool, meta.command));
    out.push_str(&format!(
        "tool version {}, format {}\n\n",
        meta.version, meta.format_version
    ));
    config_section(&mut out, meta);

    match verdicts {
        Verdicts::Check {
            verdict,
            constants,
            rates,
        } => {
            classification_section(&mut out, verdict, Some(constants), rates.as_ref());
        }
        Verdicts::Scan { summary } => {
            out.push_str("## Region map\n\n");
            table(
                &mut out,
                &["scenario", "tuples"],
                &[
                    vec![
                        "Theorem 1.1 (loss of decay)".into(),
                        summary.thm11_loss.to_string(),
                    ],
                    vec![
                        "Theorem 1.2 (loss of decay)".into(),
                        summary.thm12_loss.to_string(),
                    ],
                    vec![
                        "Theorem 1.3 (no loss of decay)".into(),
                        summary.thm13_no_loss.to_string(),
                    ],
                    vec![
                        "Theorem 1.4 (no loss of decay)".into(),
                        summary.thm14_no_loss.to_string(),
                    ],
                    vec!["no theorem applies".into(), summary.none.to_string()],
                    vec!["invalid".into(), summary.invalid.to_string()],
                    vec!["total".into(), summary.total.to_string()],
                ],
            );
            out.push_str("\nThe full region map is `series.csv`, one row per tuple.\n\n");
        }
        Verdicts::Kernel { rows } => {
            out.push_str("## Kernel norm decay\n\n");
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.a),
                        r.end.label().to_string(),
                        fmt_f64(r.exponent),
                        fmt_f64(r.envelope.early_sup),
                        fmt_f64(r.envelope.late_sup),
                        fmt_opt(r.fit.map(|f| f.slope)),
                        fmt_opt(r.majorant_fit.map(|f| f.slope)),
                        pass_label(r.envelope.pass).to_string(),
                    ]
                })
                .collect();
            table(
                &mut out,
                &[
                    "a",
                    "endpoint",
                    "exponent",
                    "early sup",
                    "late sup",
                    "fitted slope",
                    "majorant slope",
                    "verdict",
                ],
                &body,
            );
            out.push('\n');
        }
        Verdicts::Linear { rows } => {
            out.push_str("## Linear decay envelopes\n\n");
            envelope_table(&mut out, rows);
            out.push('\n');
        }
        Verdicts::Run {
            scenario,
            weights,
            x_norm,
            envelopes,
            gn,
            blowup,
        } => {
            if let Some(v) = &meta.verdict {
                classification_section(&mut out, v, meta.constants.as_ref(), meta.rates.as_ref());
            }
            out.push_str("## Solution norms\n\n");
            out.push_str(&format!("- scenario: {scenario}\n"));
            out.push_str(&format!("- X(T) norm: {}\n", fmt_opt(*x_norm)));
            match blowup {
                Some(t) => out.push_str(&format!(
                    "- blow-up observed: run truncated at t = {}\n",
                    fmt_f64(*t)
                )),
                None => out.push_str("- blow-up: none\n"),
            }
            if let Some(w) = weights {
                let spec: Vec<String> = w
                    .entries
                    .iter()
                    .map(|e| format!("`{}`:{}", e.column, fmt_f64(e.exponent)))
                    .collect();
                out.push_str(&format!("- weights: {}\n", spec.join(", ")));
            }
            out.push('\n');
            if !envelopes.is_empty() {
                out.push_str("### Weighted envelope checks\n\n");
                envelope_table(&mut out, envelopes);
                out.push('\n');
            }
            if !gn.is_empty() {
                out.push_str("### Gagliardo-Nirenberg envelope checks\n\n");
                envelope_table(&mut out, gn);
                out.push('\n');
            }
        }
        Verdicts::Picard { outcome } => {
            out.push_str("## Picard iteration\n\n");
            let rows: Vec<Vec<String>> = outcome
                .distances
                .iter()
                .enumerate()
                .map(|(k, d)| {
                    let ratio = if k == 0 {
                        "-".to_string()
                    } else {
                        fmt_f64(d / outcome.distances[k - 1])
                    };
                    vec![k.to_string(), fmt_f64(*d), ratio]
                })
                .collect();
            table(&mut out, &["k", "d_k", "d_k / d_{k-1}"], &rows);
            out.push_str(&format!(
                "\n- diverged: {}\n- converged: {}\n\n",
                outcome.diverged, outcome.converged
            ));
        }
    }

    series_section(&mut out, series);
    out.push_str("---\n\n");
    out.push_str(
        "Conventions: the Young index r is defined by 1 + 1/q = 1/r + 1/m \
         (Notations) and the decay statements reuse it unchanged. Envelope \
         verdicts are one-sided bound checks (sup-ratio stabilization over \
         the late window), not sharpness claims; fitted slopes are reported \
         for sharpness study only.\n",
    );
    out
}

/// Renders the gnuplot script. Time-series directories plot every column
/// of `series.csv` against 1 + t on log-log axes; scan directories get a
/// p1-p2 scatter of the region map.
pub fn render_plots(verdicts: &Verdicts, series: Option<&NormSeries>) -> String {
    let mut out = String::new();
    out.push_str("# gnuplot script; run from the directory containing series.csv\n");
    match verdicts {
        Verdicts::Scan { .. } => {
            out.push_str("set datafile separator ','\n");
            out.push_str("set key off\n");
            out.push_str("set xlabel 'p1'\n");
            out.push_str("set ylabel 'p2'\n");
            out.push_str("# scenario per point is in column 8 of series.csv\n");
            out.push_str("plot 'series.csv' using 6:7 with points pt 7\n");
        }
        _ => match series {
            Some(s) if !s.times.is_empty() && !s.columns.is_empty() => {
                let ncols = s.columns.len() + 1;
                out.push_str("set datafile separator ','\n");
                out.push_str("set key outside autotitle columnhead\n");
                out.push_str("set logscale xy\n");
                out.push_str("set xlabel '1+t'\n");
                out.push_str("set ylabel 'value'\n");
                out.push_str(&format!(
                    "plot for [i=2:{ncols}] 'series.csv' using (1+$1):i with lines\n"
                ));
            }
            _ => out.push_str("# no series data to plot\n"),
        },
    }
    out
}

/// Writes a complete run directory: meta, series, verdicts, report, and
/// plot script.
pub fn write_run_dir(
    dir: &Path,
    meta: &RunMeta,
    series: &NormSeries,
    verdicts: &Verdicts,
) -> Result<(), ReportError> {
    ensure_dir(dir)?;
    write_meta(dir, meta)?;
    write_series(dir, series)?;
    write_verdicts(dir, verdicts)?;
    write_text(
        &dir.join(REPORT_FILE),
        &render_report(meta, verdicts, Some(series)),
    )?;
    write_text(&dir.join(PLOTS_FILE), &render_plots(verdicts, Some(series)))?;
    Ok(())
}

/// Writes a scan directory: the series slot holds the region map CSV.
pub fn write_scan_dir(
    dir: &Path,
    meta: &RunMeta,
    rows: &[ScanCsvRow],
    verdicts: &Verdicts,
) -> Result<(), ReportError> {
    ensure_dir(dir)?;
    write_meta(dir, meta)?;
    write_scan_csv(dir, rows)?;
    write_verdicts(dir, verdicts)?;
    write_text(&dir.join(REPORT_FILE), &render_report(meta, verdicts, None))?;
    write_text(&dir.join(PLOTS_FILE), &render_plots(verdicts, None))?;
    Ok(())
}

/// Regenerates `report.md` and `plots.gp` from the directory alone and
/// returns the markdown. Byte-identical to what the producing command
/// wrote.
pub fn regenerate_report(dir: &Path) -> Result<String, ReportError> {
    let meta = read_meta(dir)?;
    let verdicts = read_verdicts(dir)?;
    let series = match &verdicts {
        Verdicts::Scan { .. } => None,
        _ => Some(read_series(dir)?),
    };
    let report = render_report(&meta, &verdicts, series.as_ref());
    write_text(&dir.join(REPORT_FILE), &report)?;
    write_text(
        &dir.join(PLOTS_FILE),
        &render_plots(&verdicts, series.as_ref()),
    )?;
    Ok(report)
}
