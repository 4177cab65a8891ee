//! Versioned data files. Data files hold no timestamps, so identical inputs
//! give byte-identical files; run metadata goes in the manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rydpol::dressed::{DressedManifold, StrengthRow};
use rydpol::spectra::Spectrogram;
use serde::Serialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub const SPECTROGRAM_MAGIC: &str = "rydpol-spectrogram";
pub const DRESSED_LEVELS_MAGIC: &str = "rydpol-dressed-levels";
pub const STRENGTHS_MAGIC: &str = "rydpol-transition-strengths";
pub const DRESSED_MAGIC: &str = "rydpol-dressed";
pub const MANIFEST_MAGIC: &str = "rydpol-manifest";
pub const VERIFY_MAGIC: &str = "rydpol-verify";

fn header(out: &mut String, magic: &str, meta: &[(&str, String)]) {
    writeln!(out, "# {magic}\t{SCHEMA_VERSION}").unwrap();
    for (k, v) in meta {
        writeln!(out, "# {k}\t{v}").unwrap();
    }
}

pub fn spectrogram_tsv(s: &Spectrogram) -> String {
    let mut out = String::new();
    header(
        &mut out,
        SPECTROGRAM_MAGIC,
        &[
            ("ladder", s.ladder.clone()),
            ("rf_rabi_rad_s", format!("{:e}", s.rf_rabi)),
            ("vapor_hash", s.vapor_hash.clone()),
            ("reference_alpha_per_m", format!("{:e}", s.reference_alpha)),
            ("reference_transmission", format!("{:e}", s.reference_transmission)),
            ("shape", format!("{}\t{}", s.theta_deg.len(), s.detuning.len())),
        ],
    );
    out.push_str("theta_deg\tdetuning_rad_s\talpha_per_m\ttransmission\tsignal\n");
    for (r, theta) in s.theta_deg.iter().enumerate() {
        for (c, dc) in s.detuning.iter().enumerate() {
            writeln!(
                out,
                "{theta:e}\t{dc:e}\t{:e}\t{:e}\t{:e}",
                s.alpha[r][c], s.transmission[r][c], s.signal[r][c]
            )
            .unwrap();
        }
    }
    out
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    format: &'a str,
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

fn versioned_json<T: Serialize>(format: &str, body: T) -> String {
    let mut s = serde_json::to_string(&Versioned {
        format,
        schema_version: SCHEMA_VERSION,
        body,
    })
    .expect("report types serialize to JSON");
    s.push('\n');
    s
}

pub fn spectrogram_json(s: &Spectrogram) -> String {
    versioned_json(SPECTROGRAM_MAGIC, s)
}

pub fn dressed_levels_tsv(ladder: &str, m: &DressedManifold) -> String {
    let mut out = String::new();
    header(
        &mut out,
        DRESSED_LEVELS_MAGIC,
        &[
            ("ladder", ladder.to_owned()),
            ("rf_rabi_rad_s", format!("{:e}", m.rf_rabi)),
            ("rf_detuning_rad_s", format!("{:e}", m.rf_detuning)),
        ],
    );
    out.push_str("mj\tmi\tmf\ts\tshift_rad_s\n");
    for e in &m.entries {
        writeln!(out, "{}\t{}\t{}\t{}\t{:e}", e.mj, e.mi, e.mf(), e.s, e.shift).unwrap();
    }
    out
}

pub fn strengths_tsv(ladder: &str, m: &DressedManifold, rows: &[StrengthRow]) -> String {
    let mut out = String::new();
    header(
        &mut out,
        STRENGTHS_MAGIC,
        &[
            ("ladder", ladder.to_owned()),
            ("rf_rabi_rad_s", format!("{:e}", m.rf_rabi)),
            ("rf_detuning_rad_s", format!("{:e}", m.rf_detuning)),
        ],
    );
    out.push_str("i_f\ti_mf\tmj\tmi\ts\tshift_rad_s\tstrength\n");
    for r in rows {
        let e = &r.entry;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:e}\t{:e}",
            r.i_state.f, r.i_state.mf, e.mj, e.mi, e.s, e.shift, r.strength
        )
        .unwrap();
    }
    out
}

#[derive(Serialize)]
struct DressedReport<'a> {
    ladder: &'a str,
    manifold: &'a DressedManifold,
    strengths: &'a [StrengthRow],
}

pub fn dressed_json(ladder: &str, m: &DressedManifold, rows: &[StrengthRow]) -> String {
    versioned_json(
        DRESSED_MAGIC,
        DressedReport {
            ladder,
            manifold: m,
            strengths: rows,
        },
    )
}

pub fn verify_json<T: Serialize>(report: T) -> String {
    versioned_json(VERIFY_MAGIC, report)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    engine_version: &'a str,
    started_unix_s: u64,
    wall_time_s: f64,
    workers: usize,
    outputs: &'a [String],
    /// Resolved scenario as TOML; `rydpol <command> --config` on this
    /// manifest re-runs it.
    config: &'a str,
}

pub struct RunInfo {
    pub started: SystemTime,
    pub wall_time: Duration,
    pub workers: usize,
}

pub fn manifest_json(command: &str, info: &RunInfo, outputs: &[String], config: &str) -> String {
    let mut s = serde_json::to_string_pretty(&Versioned {
        format: MANIFEST_MAGIC,
        schema_version: SCHEMA_VERSION,
        body: Manifest {
            command,
            engine_version: rydpol::VERSION,
            started_unix_s: info.started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            wall_time_s: info.wall_time.as_secs_f64(),
            workers: info.workers,
            outputs,
            config,
        },
    })
    .expect("manifest serializes to JSON");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rydpol::basis::{preset, Preset, R1, R2};
    use rydpol::dressed::{dress_rydberg_pair, transition_strength_table};

    fn tiny() -> Spectrogram {
        Spectrogram {
            ladder: "type1".into(),
            rf_rabi: 1.0,
            vapor_hash: "00".into(),
            theta_deg: vec![0.0, 90.0],
            detuning: vec![-1.0, 0.0, 1.0],
            alpha: vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            transmission: vec![vec![0.5; 3]; 2],
            signal: vec![vec![0.25; 3]; 2],
            reference_alpha: 7.0,
            reference_transmission: 0.1,
        }
    }

    #[test]
    fn spectrogram_tsv_layout() {
        let t = spectrogram_tsv(&tiny());
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "# rydpol-spectrogram\t1");
        let body: Vec<&str> = lines.iter().copied().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 1 + 6);
        assert_eq!(body[0].split('\t').count(), 5);
        assert_eq!(body[4], "9e1\t-1e0\t4e0\t5e-1\t2.5e-1");
    }

    #[test]
    fn spectrogram_json_is_versioned() {
        let v: serde_json::Value = serde_json::from_str(&spectrogram_json(&tiny())).unwrap();
        assert_eq!(v["format"], SPECTROGRAM_MAGIC);
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["alpha"][1][2], 6.0);
    }

    #[test]
    fn dressed_tables() {
        let ladder = preset(Preset::Type2);
        let m = dress_rydberg_pair(&ladder.levels[R1], &ladder.levels[R2], ladder.nuclear_spin, 3.0, 0.0).unwrap();
        let rows = transition_strength_table(&ladder, &m).unwrap();
        let levels = dressed_levels_tsv("type2", &m);
        let spectators: Vec<&str> = levels.lines().filter(|l| l.split('\t').nth(3) == Some("0")).collect();
        assert!(!spectators.is_empty());
        assert!(spectators
            .iter()
            .all(|l| l.starts_with("3/2\t") || l.starts_with("-3/2\t")));
        let strengths = strengths_tsv("type2", &m, &rows);
        assert_eq!(
            strengths.lines().filter(|l| !l.starts_with('#')).count(),
            rows.len() + 1
        );
    }
}
