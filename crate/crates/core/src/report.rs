//! Run configs on disk, manifest/CSV emission and human-readable reports.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{EdgeError, Result};
use crate::experiments::{ExperimentConfig, GateKind, RunManifest};

/// Overrides the output directory of every run.
pub const OUTPUT_DIR_ENV: &str = "EDGELAB_OUTPUT_DIR";

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRIALS_FILE: &str = "trials.csv";
pub const CDF_FILE: &str = "cdf.csv";

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| EdgeError::Config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_toml_str(&text)
}

/// Flag, then environment, then the config's `[output] dir`, then
/// `runs/<kind>-<seed>`.
pub fn output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUTPUT_DIR_ENV).filter(|p| !p.is_empty()) {
        return PathBuf::from(p);
    }
    match &cfg.output.dir {
        Some(d) => PathBuf::from(d),
        None => PathBuf::from("runs").join(format!("{}-{}", cfg.kind().name(), cfg.run.master_seed)),
    }
}

fn csv_err(e: csv::Error) -> EdgeError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => EdgeError::Io(io),
        other => EdgeError::Parse(format!("{other:?}")),
    }
}

/// `trial,seed,excluded,<columns>`; excluded trials leave the value cells empty.
pub fn write_trials_csv<W: Write>(m: &RunManifest, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["trial".to_string(), "seed".into(), "excluded".into()];
    header.extend(m.columns.iter().cloned());
    out.write_record(&header).map_err(csv_err)?;
    for r in &m.records {
        let mut row = vec![r.trial.to_string(), r.seed.to_string(), r.excluded.to_string()];
        if r.excluded {
            row.extend(m.columns.iter().map(|_| String::new()));
        } else {
            row.extend(r.values.iter().map(|v| v.to_string()));
        }
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Plot-ready `x,empirical_cdf,analytic_cdf`.
pub fn write_cdf_csv<W: Write>(m: &RunManifest, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "empirical_cdf", "analytic_cdf"])
        .map_err(csv_err)?;
    for row in &m.cdf_table {
        out.write_record([
            row.x.to_string(),
            row.empirical_cdf.to_string(),
            row.analytic_cdf.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_manifest<W: Write>(m: &RunManifest, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, m)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_manifest<R: Read>(r: R) -> Result<RunManifest> {
    serde_json::from_reader(r).map_err(|e| EdgeError::Parse(format!("manifest: {e}")))
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let f = File::open(path).map_err(|e| EdgeError::Config(format!("cannot open {}: {e}", path.display())))?;
    read_manifest(std::io::BufReader::new(f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub manifest: PathBuf,
    pub trials: PathBuf,
    pub cdf: PathBuf,
}

/// Write manifest and both CSVs into `dir`. On failure every file this call
/// created is removed again.
pub fn write_run(m: &RunManifest, dir: &Path) -> Result<RunFiles> {
    let files = RunFiles {
        manifest: dir.join(MANIFEST_FILE),
        trials: dir.join(TRIALS_FILE),
        cdf: dir.join(CDF_FILE),
    };
    let dir_existed = dir.exists();
    let mut created: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut open = |p: &Path| -> Result<BufWriter<File>> {
            let f = File::create(p)?;
            created.push(p.to_path_buf());
            Ok(BufWriter::new(f))
        };
        write_trials_csv(m, open(&files.trials)?)?;
        write_cdf_csv(m, open(&files.cdf)?)?;
        write_manifest(m, open(&files.manifest)?)?;
        Ok(())
    })();
    if let Err(e) = result {
        for p in &created {
            let _ = fs::remove_file(p);
        }
        if !dir_existed {
            let _ = fs::remove_dir(dir);
        }
        return Err(e);
    }
    Ok(files)
}

/// Up to 6 decimals, trailing zeros trimmed: `0.367879`, `2.25`, `3`.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "-0" => "0".into(),
        _ => s.into(),
    }
}

fn gate_text(s: &crate::experiments::Score) -> (String, &'static str) {
    let Some(g) = s.gate else {
        return ("-".into(), "-");
    };
    let text = match (g.lower, g.upper) {
        (Some(l), Some(u)) => format!("[{l}, {u}]"),
        (Some(l), None) => format!(">= {l}"),
        (None, Some(u)) => format!("<= {u}"),
        (None, None) => "-".into(),
    };
    let kind = match g.kind {
        GateKind::Hard => "hard",
        GateKind::Soft => "soft",
    };
    (text, kind)
}

/// Plain-text summary. Numbers are printed in shortest round-trip form, so
/// every score reads back as exactly the stored value.
pub fn render_report(m: &RunManifest) -> String {
    let mut out = String::new();
    let cfg = &m.config;
    let _ = writeln!(out, "{} run (edgelab {})", cfg.kind().name(), m.version);
    let _ = writeln!(
        out,
        "trials {}  excluded {}  master_seed {}  threads {}  wall_clock {:.2} s",
        cfg.run.trials, m.excluded, cfg.run.master_seed, cfg.run.threads, m.wall_clock_seconds
    );
    let _ = writeln!(out);

    let rows: Vec<[String; 5]> = m
        .scores
        .iter()
        .map(|s| {
            let (gate, kind) = gate_text(s);
            let status = match s.passed {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "-",
            };
            [s.name.clone(), s.value.to_string(), gate, kind.into(), status.into()]
        })
        .collect();
    let header = ["score", "value", "gate", "kind", "status"].map(String::from);
    push_table(&mut out, &header, &rows);

    if !m.summary.is_empty() {
        let _ = writeln!(out);
        let rows: Vec<[String; 2]> = m.summary.iter().map(|(k, v)| [k.clone(), v.to_string()]).collect();
        push_table(&mut out, &["summary".to_string(), "value".to_string()], &rows);
    }
    if !m.notes.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "notes");
        for n in &m.notes {
            let _ = writeln!(out, "  {n}");
        }
    }
    out
}

fn push_table<const N: usize>(out: &mut String, header: &[String; N], rows: &[[String; N]]) {
    let mut width = header.clone().map(|h| h.len());
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String; N]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&width).enumerate() {
            if i + 1 == N {
                s.push_str(c);
            } else {
                let _ = write!(s, "{c:<w$}  ");
            }
        }
        s.trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(header));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
}
