//! Report rendering and emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::tables::write_trace_csv;
use crate::postprocess::PosteriorReport;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!("format must be text or csv, got '{other}'"))),
        }
    }
}

/// Rejects reports whose Method 1 part kept no iterations.
pub fn check_report(report: &PosteriorReport) -> Result<()> {
    let k = report.model_names.len();
    if k == 0 || report.probs.len() != k || report.prior_weights.len() != k {
        return Err(Error::InvalidArgument("report is incomplete".into()));
    }
    if let Some(m1) = &report.method1 {
        if m1.iterations <= m1.burnin || m1.chains.is_empty() || m1.chains.iter().any(|c| c.trace.is_empty()) {
            return Err(Error::NoPostBurnin);
        }
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.4}"),
        _ => "-".into(),
    }
}

fn pad(name: &str, width: usize) -> String {
    format!("{name:<width$}")
}

/// Plain-text report: probabilities with standard errors, Bayes factors,
/// the transition matrix and the settings used.
pub fn render_text(report: &PosteriorReport) -> Result<String> {
    check_report(report)?;
    let k = report.model_names.len();
    let w = report.model_names.iter().map(String::len).max().unwrap_or(5).max(5) + 4;
    let mut s = String::new();
    let _ = writeln!(s, "Posterior model probabilities");
    let _ = writeln!(s, "seed: {}", report.seed.map_or("-".into(), |v| v.to_string()));
    let _ = writeln!(s);

    let _ = writeln!(s, "Summary (prior weights as requested)");
    let target = report.probs_under_target();
    for (i, name) in report.model_names.iter().enumerate() {
        let _ = writeln!(s, "  Pr(M_{} | y) = {:.2}   {}", i + 1, target[i], name);
    }
    let _ = writeln!(s);

    let _ = writeln!(s, "Estimates under the prior weights used in the run");
    let _ = write!(s, "  {}{:>8}", pad("model", w), "prior");
    let m1 = report.method1.as_ref();
    let m2 = report.method2.as_ref();
    if m1.is_some() {
        let _ = write!(s, "{:>12}{:>10}{:>12}{:>10}", "indicator", "se", "rao-black.", "se");
    }
    if m2.is_some() {
        let _ = write!(s, "{:>12}{:>10}", "stationary", "se");
    }
    let _ = writeln!(s);
    for i in 0..k {
        let label = format!("{} {}", i + 1, report.model_names[i]);
        let _ = write!(s, "  {}{:>8.4}", pad(&label, w), report.prior_weights[i]);
        if let Some(m) = m1 {
            let _ = write!(
                s,
                "{:>12.4}{:>10}{:>12.4}{:>10}",
                m.probs_indicator[i],
                fmt_opt(m.se_indicator.as_ref().map(|v| v[i])),
                m.probs_rao_blackwell[i],
                fmt_opt(m.se_rao_blackwell.as_ref().map(|v| v[i])),
            );
        }
        if let Some(m) = m2 {
            let _ = write!(
                s,
                "{:>12.4}{:>10}",
                m.stationary[i],
                fmt_opt(m.se_stationary.as_ref().map(|v| v[i]))
            );
        }
        let _ = writeln!(s);
    }
    if let Some(p) = &report.probs_target_prior {
        let _ = writeln!(s);
        let _ = writeln!(s, "Reweighted to the requested prior weights");
        for i in 0..k {
            let label = format!("{} {}", i + 1, report.model_names[i]);
            let _ = writeln!(s, "  {}{:>8.4}{:>12.6}", pad(&label, w), report.target_prior[i], p[i]);
        }
    }
    if let Some(t) = &report.tuning {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "Prior tuning: {} after {} round(s); visit frequencies {}",
            if t.converged { "converged" } else { "not converged" },
            t.rounds,
            t.visit_frequencies.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" ")
        );
    }

    if let Some(bf) = &report.bayes_factors {
        let _ = writeln!(s);
        let _ = writeln!(s, "Bayes factors BF_jk = (p_j / p_k) / (q_j / q_k)");
        for j in 0..k {
            for l in 0..k {
                if j != l {
                    let _ = writeln!(s, "  BF_{}{} = {:.4}", j + 1, l + 1, bf[j][l]);
                }
            }
        }
    }

    if let Some(m) = m2 {
        let _ = writeln!(s);
        let _ = writeln!(s, "Transition matrix ({} draws per model)", m.draws_per_model);
        for (h, row) in m.transition.matrix.iter().enumerate() {
            let vals: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
            let ses: Vec<String> = m.transition.std_errors[h].iter().map(|v| fmt_opt(Some(*v))).collect();
            let _ = writeln!(s, "  {}  (se {})", vals.join("  "), ses.join(" "));
        }
    }
    if let Some(m) = m1 {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "Method 1: {} chain(s) x {} iterations, burn-in {}",
            m.chains.len(),
            m.iterations,
            m.burnin
        );
        let visits: Vec<String> = m.visits.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "  visits: {}", visits.join(" "));
    }
    if !report.diagnostics.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "Diagnostics");
        for d in &report.diagnostics {
            let _ = writeln!(s, "  {d}");
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Settings");
    let echo = toml::to_string(&report.settings).map_err(|e| Error::Config(e.to_string()))?;
    for line in echo.lines() {
        let _ = writeln!(s, "  {line}");
    }
    Ok(s)
}

fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

fn opt_cell(v: Option<&Vec<f64>>, i: usize) -> String {
    v.map_or(String::new(), |x| x[i].to_string())
}

/// One row per model with every estimate and standard error.
pub fn render_probabilities_csv(report: &PosteriorReport) -> Result<String> {
    check_report(report)?;
    let mut s = csv_line(
        &[
            "model",
            "name",
            "prior",
            "indicator",
            "se_indicator",
            "rao_blackwell",
            "se_rao_blackwell",
            "stationary",
            "se_stationary",
            "target_prior",
            "prob_target_prior",
        ]
        .map(String::from),
    );
    let m1 = report.method1.as_ref();
    let m2 = report.method2.as_ref();
    let target = report.probs_under_target();
    for i in 0..report.model_names.len() {
        s.push_str(&csv_line(&[
            (i + 1).to_string(),
            report.model_names[i].clone(),
            report.prior_weights[i].to_string(),
            opt_cell(m1.map(|m| &m.probs_indicator), i),
            opt_cell(m1.and_then(|m| m.se_indicator.as_ref()), i),
            opt_cell(m1.map(|m| &m.probs_rao_blackwell), i),
            opt_cell(m1.and_then(|m| m.se_rao_blackwell.as_ref()), i),
            opt_cell(m2.map(|m| &m.stationary), i),
            opt_cell(m2.and_then(|m| m.se_stationary.as_ref()), i),
            report.target_prior[i].to_string(),
            target[i].to_string(),
        ]));
    }
    Ok(s)
}

fn matrix_csv(m: &[Vec<f64>]) -> String {
    let k = m.len();
    let mut header = vec!["from".to_string()];
    header.extend((1..=k).map(|j| format!("model_{j}")));
    let mut s = csv_line(&header);
    for (h, row) in m.iter().enumerate() {
        let mut rec = vec![format!("model_{}", h + 1)];
        rec.extend(row.iter().map(f64::to_string));
        s.push_str(&csv_line(&rec));
    }
    s
}

fn write(path: PathBuf, contents: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes `report.json`, the report in `format`, and one cumulative trace
/// CSV per Method 1 chain into `dir`. Returns the files written.
pub fn emit_report(report: &PosteriorReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    check_report(report)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
    write(dir.join("report.json"), json.as_bytes(), &mut written)?;
    match format {
        ReportFormat::Text => write(dir.join("report.txt"), render_text(report)?.as_bytes(), &mut written)?,
        ReportFormat::Csv => {
            write(
                dir.join("probabilities.csv"),
                render_probabilities_csv(report)?.as_bytes(),
                &mut written,
            )?;
            if let Some(bf) = &report.bayes_factors {
                write(dir.join("bayes_factors.csv"), matrix_csv(bf).as_bytes(), &mut written)?;
            }
            if let Some(m2) = &report.method2 {
                write(
                    dir.join("transition.csv"),
                    matrix_csv(&m2.transition.matrix).as_bytes(),
                    &mut written,
                )?;
            }
        }
    }
    if let Some(m1) = &report.method1 {
        for (c, chain) in m1.chains.iter().enumerate() {
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, chain, report.model_names.len())?;
            write(dir.join(format!("trace_chain{}.csv", c + 1)), &buf, &mut written)?;
        }
    }
    Ok(written)
}

pub fn parse_report_json(text: &str) -> Result<PosteriorReport> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("report JSON: {e}")))
}

pub fn load_report_json(path: &Path) -> Result<PosteriorReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report_json(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
