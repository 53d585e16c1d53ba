use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SCHEMA_VERSION};
use super::summary::{aggregate, Stats, SummaryRow};
use super::sweep::TrialRecord;
use crate::error::{Error, Result};
use crate::io::{format_f64, save_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(format!(
                "unknown format '{other}', expected csv or json"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema_version: u32,
    pub config_hash: String,
    pub master_seed: u64,
    pub code_version: String,
    pub records: usize,
    pub config: ExperimentConfig,
}

pub const RECORD_COLUMNS: [&str; 9] = [
    "algorithm",
    "trial",
    "p",
    "nu",
    "per_entry_error",
    "frob_error",
    "dist_error",
    "wall_time_ms",
    "flags",
];

fn csv_string(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn records_to_csv(records: &[TrialRecord]) -> Result<String> {
    let header: Vec<String> = RECORD_COLUMNS.iter().map(|s| s.to_string()).collect();
    csv_string(
        &header,
        records.iter().map(|r| {
            vec![
                r.algorithm.name().to_string(),
                r.trial.to_string(),
                r.p.to_string(),
                r.nu.to_string(),
                format_f64(r.per_entry_error),
                format_f64(r.frob_error),
                format_f64(r.dist_error),
                r.wall_time_ms.to_string(),
                r.flags.clone(),
            ]
        }),
    )
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut header: Vec<String> = ["algorithm", "p", "nu", "trials", "failures"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for metric in ["per_entry_error", "frob_error", "dist_error"] {
        for stat in ["mean", "std", "min", "max"] {
            header.push(format!("{metric}_{stat}"));
        }
    }
    let stats = |s: &Stats| [s.mean, s.std, s.min, s.max].map(format_f64);
    csv_string(
        &header,
        rows.iter().map(|r| {
            let mut row = vec![
                r.algorithm.name().to_string(),
                r.p.to_string(),
                r.nu.to_string(),
                r.trials.to_string(),
                r.failures.to_string(),
            ];
            row.extend(stats(&r.per_entry_error));
            row.extend(stats(&r.frob_error));
            row.extend(stats(&r.dist_error));
            row
        }),
    )
}

/// Mean Frobenius error against `nu`, one line per algorithm, for the first `p` in the summary.
pub fn render_svg(rows: &[SummaryRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 60.0;
    let Some(first) = rows.first() else {
        return String::new();
    };
    let rows: Vec<&SummaryRow> = rows
        .iter()
        .filter(|r| r.p == first.p && r.frob_error.mean.is_finite())
        .collect();
    let (mut x_max, mut y_max) = (0.0f64, 0.0f64);
    for r in &rows {
        x_max = x_max.max(r.nu);
        y_max = y_max.max(r.frob_error.mean);
    }
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let sx = |v: f64| PAD + v / x_max * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - v / y_max * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD},{} L{PAD},{} L{},{}" stroke="black" fill="none"/>"#,
        PAD,
        H - PAD,
        W - PAD,
        H - PAD
    );
    for k in 0..=4 {
        let xv = x_max * k as f64 / 4.0;
        let yv = y_max * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.2}</text>"#,
            sx(xv),
            H - PAD + 18.0,
            xv
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.1}</text>"#,
            PAD - 6.0,
            sy(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">noise std nu</text>"#,
        W / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">mean ||D_hat - D||_F</text>"#,
        H / 2.0,
        H / 2.0
    );

    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let mut algorithms = Vec::new();
    for r in &rows {
        if !algorithms.contains(&r.algorithm) {
            algorithms.push(r.algorithm);
        }
    }
    for (k, alg) in algorithms.iter().enumerate() {
        let color = colors[k % colors.len()];
        let mut pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.algorithm == *alg)
            .map(|r| (r.nu, r.frob_error.mean))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#,
            path.join(" ")
        );
        let ly = PAD + 18.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            PAD + 10.0,
            PAD + 40.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{}</text>"#,
            PAD + 46.0,
            ly + 4.0,
            alg.name()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `records`, `summary` (CSV or JSON) and `meta.json`, plus `errors_vs_nu.svg` when asked.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    records: &[TrialRecord],
    format: OutputFormat,
    plot: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let summary = aggregate(records)?;
    let mut written = Vec::new();
    match format {
        OutputFormat::Csv => {
            let rec_path = dir.join("records.csv");
            fs::write(&rec_path, records_to_csv(records)?)?;
            let sum_path = dir.join("summary.csv");
            fs::write(&sum_path, summary_to_csv(&summary)?)?;
            written.extend([rec_path, sum_path]);
        }
        OutputFormat::Json => {
            let rec_path = dir.join("records.json");
            save_json(&rec_path, &records)?;
            let sum_path = dir.join("summary.json");
            save_json(&sum_path, &summary)?;
            written.extend([rec_path, sum_path]);
        }
    }
    let meta = RunMeta {
        schema_version: SCHEMA_VERSION,
        config_hash: cfg.hash()?,
        master_seed: cfg.master_seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        records: records.len(),
        config: cfg.clone(),
    };
    let meta_path = dir.join("meta.json");
    save_json(&meta_path, &meta)?;
    written.push(meta_path);
    if plot {
        let svg_path = dir.join("errors_vs_nu.svg");
        fs::write(&svg_path, render_svg(&summary))?;
        written.push(svg_path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::super::config::Algorithm;
    use super::super::sweep::run_sweep;
    use super::*;

    #[test]
    fn records_header_is_fixed() {
        let cfg = ExperimentConfig::new(10, 2, vec![0.5], vec![0.1], 1, 3);
        let csv = records_to_csv(&run_sweep(&cfg).unwrap()).unwrap();
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "algorithm,trial,p,nu,per_entry_error,frob_error,dist_error,wall_time_ms,flags"
        );
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn outputs_are_written_and_reproducible() {
        let mut cfg = ExperimentConfig::new(12, 2, vec![0.6], vec![0.1, 0.5], 2, 8);
        cfg.algorithms = vec![Algorithm::SvdReconstruct, Algorithm::OptSpace];
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for dir in [a.path(), b.path()] {
            let recs = run_sweep(&cfg).unwrap();
            let files = write_outputs(dir, &cfg, &recs, OutputFormat::Csv, true).unwrap();
            assert_eq!(files.len(), 4);
        }
        for name in [
            "records.csv",
            "summary.csv",
            "meta.json",
            "errors_vs_nu.svg",
        ] {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap(),
                "{name}"
            );
        }
        let summary = fs::read_to_string(a.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 1 + 2 * 2);
        let svg = fs::read_to_string(a.path().join("errors_vs_nu.svg")).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn json_format() {
        let cfg = ExperimentConfig::new(10, 2, vec![0.5], vec![0.1], 2, 3);
        let dir = tempfile::tempdir().unwrap();
        write_outputs(
            dir.path(),
            &cfg,
            &run_sweep(&cfg).unwrap(),
            OutputFormat::Json,
            false,
        )
        .unwrap();
        let recs: Vec<TrialRecord> =
            serde_json::from_str(&fs::read_to_string(dir.path().join("records.json")).unwrap())
                .unwrap();
        assert_eq!(recs.len(), 2);
        let meta: RunMeta =
            serde_json::from_str(&fs::read_to_string(dir.path().join("meta.json")).unwrap())
                .unwrap();
        assert_eq!(meta.config, cfg);
        assert_eq!(meta.config_hash, cfg.hash().unwrap());
    }
}
