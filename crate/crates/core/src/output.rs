//! Result files: CSV tables, column dumps of trajectories and emission
//! records, a JSON summary and SVG plots.
//!
//! Every number in a CSV is written as C `%.12e` (`1.234500000000e-03`,
//! `nan` for cells without herald density). Landscape rows run over `t_v`
//! fastest, so row `i_h * n_v + i_v` is cell `(i_h, i_v)`.
//!
//! A study run writes, under `<out>/`:
//!
//! ```text
//! summary.json
//! omega_b_<value>/
//!     trajectory_node_{a,b}.csv   emission_node_{a,b}.csv
//!     landscape_<pattern>.csv     tradeoff.csv
//!     a_populations.svg           f_tradeoff.svg
//!     b_f_raw_<pattern>.svg       c_f_corr_<pattern>.svg
//!     d_density_<pattern>.svg     e_corr_angle_<pattern>.svg
//!     e_corr_azimuth_<pattern>.svg
//! ```
//!
//! A sweep writes `summary.json`, `sweep.csv` and `sweep.svg`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::dynamics::{AmplitudeTrajectory, EmissionRecord};
use crate::error::{Error, Result};
use crate::experiment::{ScenarioResult, SweepResult, TradeoffCurve, TradeoffMark};
use crate::herald::HeraldPattern;
use crate::landscape::HeraldLandscape;
use crate::model::basis;
use crate::plot::{line_plot, Heatmap, Series};

pub const LANDSCAPE_HEADER: &str = "t_h,t_v,f_raw,f_corr,density,corr_angle,corr_azimuth";
pub const TRADEOFF_HEADER: &str = "threshold,retained_raw,retained_corrected";
pub const SWEEP_HEADER: &str = "delta_b,f_avg_raw,f_avg_corrected,success_probability,rabi_down,rabi_up";

/// C-style `%.12e`.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn row(values: &[f64]) -> String {
    values.iter().map(|&v| sci(v)).collect::<Vec<_>>().join(",")
}

pub fn landscape_csv(l: &HeraldLandscape) -> String {
    let mut s = String::with_capacity(120 * (l.len() + 1));
    s.push_str(LANDSCAPE_HEADER);
    s.push('\n');
    let (nh, nv) = l.shape();
    for ih in 0..nh {
        for iv in 0..nv {
            let k = l.index(ih, iv);
            s.push_str(&row(&[
                l.t_h[ih],
                l.t_v[iv],
                l.f_raw[k],
                l.f_corr[k],
                l.density[k],
                l.corr_angle[k],
                l.corr_azimuth[k],
            ]));
            s.push('\n');
        }
    }
    s
}

/// Inverse of [`landscape_csv`]. The file does not carry the herald
/// pattern, so the caller supplies it.
pub fn parse_landscape_csv(text: &str, pattern: HeraldPattern) -> Result<HeraldLandscape> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty landscape file".into()))?;
    if header.trim() != LANDSCAPE_HEADER {
        return Err(Error::Parse(format!("unexpected landscape header '{}'", header.trim())));
    }
    let mut rows: Vec<[f64; 7]> = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse(format!("row {}: expected 7 columns, got {}", n + 1, fields.len())));
        }
        let mut r = [0.0; 7];
        for (slot, f) in r.iter_mut().zip(&fields) {
            *slot = f
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad number '{}'", n + 1, f.trim())))?;
        }
        rows.push(r);
    }
    let nv = rows.iter().take_while(|r| !rows.is_empty() && r[0] == rows[0][0]).count();
    let nh = rows.len().checked_div(nv).unwrap_or(0);
    if nh * nv != rows.len() {
        return Err(Error::Parse(format!("{} rows do not form a grid with {nv} t_v values", rows.len())));
    }
    for (k, r) in rows.iter().enumerate() {
        let (ih, iv) = (k / nv, k % nv);
        if r[0] != rows[ih * nv][0] || r[1] != rows[iv][1] {
            return Err(Error::Parse(format!("row {}: times out of grid order", k + 1)));
        }
    }
    let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<_>>();
    Ok(HeraldLandscape {
        t_h: (0..nh).map(|i| rows[i * nv][0]).collect(),
        t_v: rows.iter().take(nv).map(|r| r[1]).collect(),
        pattern,
        f_raw: col(2),
        f_corr: col(3),
        density: col(4),
        corr_angle: col(5),
        corr_azimuth: col(6),
    })
}

/// Time plus real and imaginary parts of each basis amplitude.
pub fn trajectory_table(traj: &AmplitudeTrajectory) -> String {
    let mut s = String::from("t");
    for l in basis::LABELS {
        let _ = write!(s, ",re_{l},im_{l}");
    }
    s.push('\n');
    for (i, st) in traj.states.iter().enumerate() {
        let mut vals = vec![traj.grid.time(i)];
        for a in st.amplitudes.iter() {
            vals.push(a.re);
            vals.push(a.im);
        }
        s.push_str(&row(&vals));
        s.push('\n');
    }
    s
}

const RECORD_LABELS: [[&str; 2]; 2] = [["up_h", "up_v"], ["down_h", "down_v"]];

/// Time plus real and imaginary parts of the four output wavepackets,
/// indexed by qubit branch and polarisation.
pub fn emission_table(rec: &EmissionRecord) -> String {
    let mut s = String::from("t");
    for l in RECORD_LABELS.iter().flatten() {
        let _ = write!(s, ",re_{l},im_{l}");
    }
    s.push('\n');
    for i in 0..rec.grid.n {
        let mut vals = vec![rec.grid.time(i)];
        for x in 0..2 {
            for y in 0..2 {
                vals.push(rec.w[x][y][i].re);
                vals.push(rec.w[x][y][i].im);
            }
        }
        s.push_str(&row(&vals));
        s.push('\n');
    }
    s
}

pub fn tradeoff_csv(raw: &TradeoffCurve, corrected: &TradeoffCurve) -> String {
    let mut s = format!("{TRADEOFF_HEADER}\n");
    for ((t, r), c) in raw.thresholds.iter().zip(&raw.retained).zip(&corrected.retained) {
        s.push_str(&row(&[*t, *r, *c]));
        s.push('\n');
    }
    s
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for p in &sweep.points {
        s.push_str(&row(&[
            p.delta_b,
            p.average_raw,
            p.average_corrected,
            p.success_total,
            p.rabi_down,
            p.rabi_up,
        ]));
        s.push('\n');
    }
    s
}

/// Hex SHA-256 of the canonical TOML form of the config.
pub fn scenario_hash(cfg: &ScenarioConfig) -> Result<String> {
    let digest = Sha256::digest(cfg.to_toml()?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// The only wall-clock dependent part of any output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub generated_unix: u64,
    pub version: String,
}

impl Metadata {
    pub fn now() -> Self {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Metadata {
            generated_unix: secs,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPoint {
    pub omega_b: f64,
    pub directory: String,
    pub rabi_node_a: [f64; 2],
    pub rabi_node_b: [f64; 2],
    pub success_total: f64,
    pub success_patterns: f64,
    pub average_raw: f64,
    pub average_corrected: f64,
    pub marks_raw: Vec<TradeoffMark>,
    pub marks_corrected: Vec<TradeoffMark>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub scenario_hash: String,
    pub patterns: Vec<HeraldPattern>,
    pub resolution: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub study: Vec<StudyPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepResult>,
    pub metadata: Metadata,
}

impl RunSummary {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Directory name of one study point, fixed to six decimals.
pub fn study_directory(omega_b: f64) -> String {
    format!("omega_b_{omega_b:.6}")
}

/// Writes text and returns the path written.
pub fn write_file(path: &Path, text: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Landscape CSV plus, when the landscape has cells, its five heatmaps.
/// Contours mark the greedy regions reaching each trade-off target.
pub fn write_landscape(
    dir: &Path,
    l: &HeraldLandscape,
    marks_raw: &[TradeoffMark],
    marks_corrected: &[TradeoffMark],
) -> Result<Vec<PathBuf>> {
    let tag = l.pattern.to_string();
    let mut written = vec![write_file(&dir.join(format!("landscape_{tag}.csv")), &landscape_csv(l))?];
    if l.is_empty() {
        return Ok(written);
    }
    // plots put t_h on the horizontal axis, so rows must run over t_v
    let t = l.transposed();
    let level = |marks: &[TradeoffMark], stroke: &'static str| -> Vec<(f64, &'static str)> {
        marks.iter().filter_map(|m| m.min_fidelity.map(|f| (f, stroke))).collect()
    };
    let panels = [
        ("b_f_raw", "raw fidelity", t.f_raw.as_slice(), level(marks_raw, "#1f4fff"), false),
        ("c_f_corr", "corrected fidelity", &t.f_corr, level(marks_corrected, "#e0201b"), false),
        ("d_density", "herald density", &t.density, Vec::new(), false),
        ("e_corr_angle", "correction angle (rad)", &t.corr_angle, Vec::new(), true),
        ("e_corr_azimuth", "correction azimuth (rad)", &t.corr_azimuth, Vec::new(), false),
    ];
    for (name, title, values, contours, arrows) in panels {
        let title = format!("{title}, pattern {tag}");
        let mut map = Heatmap::new(&title, "t_H", "t_V", &l.t_h, &l.t_v, values);
        map.contours = contours;
        if arrows {
            map.arrows = Some(&t.corr_azimuth);
        }
        written.push(write_file(&dir.join(format!("{name}_{tag}.svg")), &map.render())?);
    }
    Ok(written)
}

fn write_point(dir: &Path, r: &ScenarioResult) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (node, run) in [("a", &r.node_a), ("b", &r.node_b)] {
        written.push(write_file(
            &dir.join(format!("trajectory_node_{node}.csv")),
            &trajectory_table(&run.trajectory),
        )?);
        written.push(write_file(
            &dir.join(format!("emission_node_{node}.csv")),
            &emission_table(&run.record),
        )?);
    }
    for l in &r.landscapes {
        written.extend(write_landscape(dir, l, &r.tradeoff_raw.marks, &r.tradeoff_corrected.marks)?);
    }
    written.push(write_file(&dir.join("tradeoff.csv"), &tradeoff_csv(&r.tradeoff_raw, &r.tradeoff_corrected))?);

    let traj = &r.node_b.trajectory;
    let times = traj.grid.times();
    let pops: Vec<Vec<f64>> = (0..6).map(|k| traj.populations(k)).collect();
    let series: Vec<Series> = basis::LABELS
        .iter()
        .zip(&pops)
        .map(|(label, y)| Series { label, x: &times, y })
        .collect();
    let title = format!("populations, birefringent node, Omega_B = {}", r.omega_b);
    written.push(write_file(
        &dir.join("a_populations.svg"),
        &line_plot(&title, "t", "population", &series),
    )?);
    written.push(write_file(&dir.join("f_tradeoff.svg"), &tradeoff_svg(&r.tradeoff_raw, &r.tradeoff_corrected))?);
    Ok(written)
}

pub fn tradeoff_svg(raw: &TradeoffCurve, corrected: &TradeoffCurve) -> String {
    let raw_marks: Vec<(String, [f64; 2], [f64; 2])> = raw
        .marks
        .iter()
        .chain(&corrected.marks)
        .filter_map(|m| {
            m.min_fidelity
                .map(|f| (format!("{} avg {}", m.target_average, m.retained), [f, f], [0.0, m.retained]))
        })
        .collect();
    let mut series = vec![
        Series { label: "raw", x: &raw.thresholds, y: &raw.retained },
        Series { label: "corrected", x: &corrected.thresholds, y: &corrected.retained },
    ];
    for (label, x, y) in &raw_marks {
        series.push(Series { label, x, y });
    }
    line_plot("success probability against minimum fidelity", "minimum fidelity", "success probability", &series)
}

/// Writes every study point and the summary; returns all paths.
pub fn write_study(out: &Path, cfg: &ScenarioConfig, results: &[ScenarioResult]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut study = Vec::new();
    for r in results {
        let name = study_directory(r.omega_b);
        written.extend(write_point(&out.join(&name), r)?);
        let rabi = |run: &crate::experiment::NodeRun| [run.params.drive.down.rabi_peak, run.params.drive.up.rabi_peak];
        study.push(StudyPoint {
            omega_b: r.omega_b,
            directory: name,
            rabi_node_a: rabi(&r.node_a),
            rabi_node_b: rabi(&r.node_b),
            success_total: r.success_total,
            success_patterns: r.success_patterns,
            average_raw: r.average_raw,
            average_corrected: r.average_corrected,
            marks_raw: r.tradeoff_raw.marks.clone(),
            marks_corrected: r.tradeoff_corrected.marks.clone(),
        });
    }
    let summary = RunSummary {
        scenario: cfg.name.clone(),
        scenario_hash: scenario_hash(cfg)?,
        patterns: cfg.landscape.patterns.clone(),
        resolution: cfg.landscape.resolution,
        study,
        sweep: None,
        metadata: Metadata::now(),
    };
    written.push(write_file(&out.join("summary.json"), &summary.to_json()?)?);
    Ok(written)
}

pub fn write_sweep(out: &Path, cfg: &ScenarioConfig, sweep: &SweepResult) -> Result<Vec<PathBuf>> {
    let mut written = vec![write_file(&out.join("sweep.csv"), &sweep_csv(sweep))?];
    let col = |f: fn(&crate::experiment::SweepPoint) -> f64| sweep.points.iter().map(f).collect::<Vec<_>>();
    let (x, raw, corr, succ) = (
        col(|p| p.delta_b),
        col(|p| p.average_raw),
        col(|p| p.average_corrected),
        col(|p| p.success_total),
    );
    let series = [
        Series { label: "raw", x: &x, y: &raw },
        Series { label: "corrected", x: &x, y: &corr },
        Series { label: "success probability", x: &x, y: &succ },
    ];
    let title = format!("deliberate splitting, Omega_B = {}", sweep.omega_b);
    written.push(write_file(&out.join("sweep.svg"), &line_plot(&title, "delta_B", "fidelity / probability", &series))?);
    let summary = RunSummary {
        scenario: cfg.name.clone(),
        scenario_hash: scenario_hash(cfg)?,
        patterns: cfg.landscape.patterns.clone(),
        resolution: cfg.landscape.resolution,
        study: Vec::new(),
        sweep: Some(sweep.clone()),
        metadata: Metadata::now(),
    };
    written.push(write_file(&out.join("summary.json"), &summary.to_json()?)?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;
    use crate::experiment::SweepPoint;
    use proptest::prelude::*;

    fn toy_landscape(nh: usize, nv: usize) -> HeraldLandscape {
        let n = nh * nv;
        let f = |k: usize, s: f64| (0..n).map(|i| ((i + k) as f64 * s).sin()).collect::<Vec<_>>();
        let mut density = f(3, 0.7);
        if n > 0 {
            density[0] = 0.0;
        }
        let mut f_raw = f(0, 0.3);
        if n > 0 {
            f_raw[0] = f64::NAN;
        }
        HeraldLandscape {
            t_h: (0..nh).map(|i| 0.25 * i as f64).collect(),
            t_v: (0..nv).map(|i| -1.0 + 0.5 * i as f64).collect(),
            pattern: HeraldPattern::CD,
            f_raw,
            f_corr: f(1, 0.11),
            density,
            corr_angle: f(2, 1.3),
            corr_azimuth: f(4, -2.1),
        }
    }

    #[test]
    fn c_style_exponent() {
        assert_eq!(sci(1.2345e-3), "1.234500000000e-03");
        assert_eq!(sci(-6.0), "-6.000000000000e+00");
        assert_eq!(sci(0.0), "0.000000000000e+00");
        assert_eq!(sci(2.5e123), "2.500000000000e+123");
        assert_eq!(sci(f64::NAN), "nan");
    }

    #[test]
    fn landscape_csv_round_trips() {
        let l = toy_landscape(4, 3);
        let text = landscape_csv(&l);
        assert_eq!(text.lines().count(), 13);
        let back = parse_landscape_csv(&text, HeraldPattern::CD).unwrap();
        assert_eq!(back.shape(), (4, 3));
        assert!(back.f_raw[0].is_nan());
        for (a, b) in l.f_corr.iter().zip(&back.f_corr) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
        // the text form is a fixed point
        assert_eq!(landscape_csv(&back), text);
    }

    #[test]
    fn empty_landscape_is_header_only_without_svg() {
        let l = toy_landscape(0, 0);
        let dir = tempfile::tempdir().unwrap();
        let written = write_landscape(dir.path(), &l, &[], &[]).unwrap();
        assert_eq!(written.len(), 1);
        assert_eq!(fs::read_to_string(&written[0]).unwrap(), format!("{LANDSCAPE_HEADER}\n"));
        let back = parse_landscape_csv(&landscape_csv(&l), HeraldPattern::CC).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn landscape_writes_five_heatmaps() {
        let l = toy_landscape(5, 5);
        let dir = tempfile::tempdir().unwrap();
        let written = write_landscape(dir.path(), &l, &[], &[]).unwrap();
        let svgs = written.iter().filter(|p| p.extension().unwrap() == "svg").count();
        assert_eq!(svgs, 5);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(parse_landscape_csv("a,b\n", HeraldPattern::CC).is_err());
        let bad = format!("{LANDSCAPE_HEADER}\n1,2,3\n");
        assert!(parse_landscape_csv(&bad, HeraldPattern::CC).is_err());
        let ragged = format!("{LANDSCAPE_HEADER}\n0,0,1,1,1,0,0\n0,1,1,1,1,0,0\n1,0,1,1,1,0,0\n");
        assert!(parse_landscape_csv(&ragged, HeraldPattern::CC).is_err());
    }

    #[test]
    fn write_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_file(&blocker.join("sub.csv"), "y").unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }

    #[test]
    fn hash_tracks_config_content() {
        let a = preset("fig2").unwrap();
        let mut b = a.clone();
        assert_eq!(scenario_hash(&a).unwrap(), scenario_hash(&b).unwrap());
        b.landscape.resolution += 1;
        assert_ne!(scenario_hash(&a).unwrap(), scenario_hash(&b).unwrap());
        assert_eq!(scenario_hash(&a).unwrap().len(), 64);
    }

    fn finite() -> impl Strategy<Value = f64> {
        -1e6..1e6f64
    }

    proptest! {
        #[test]
        fn summary_json_round_trips(
            vals in prop::collection::vec(finite(), 12),
            hit in any::<bool>(),
        ) {
            let mark = TradeoffMark {
                target_average: vals[0],
                retained: vals[1],
                min_fidelity: hit.then_some(vals[2]),
            };
            let summary = RunSummary {
                scenario: "s".into(),
                scenario_hash: "00".into(),
                patterns: vec![HeraldPattern::CC, HeraldPattern::DC],
                resolution: 7,
                study: vec![StudyPoint {
                    omega_b: vals[3],
                    directory: study_directory(vals[3]),
                    rabi_node_a: [vals[4], vals[5]],
                    rabi_node_b: [vals[6], vals[7]],
                    success_total: vals[8],
                    success_patterns: vals[9],
                    average_raw: vals[10],
                    average_corrected: vals[11],
                    marks_raw: vec![mark],
                    marks_corrected: vec![],
                }],
                sweep: Some(SweepResult {
                    omega_b: vals[0],
                    theta_b: vals[1],
                    points: vec![SweepPoint {
                        delta_b: vals[2],
                        average_raw: vals[3],
                        average_corrected: vals[4],
                        success_total: vals[5],
                        rabi_down: vals[6],
                        rabi_up: vals[7],
                    }],
                }),
                metadata: Metadata { generated_unix: 1, version: "0".into() },
            };
            let back = RunSummary::from_json(&summary.to_json().unwrap()).unwrap();
            prop_assert_eq!(back, summary);
        }

        #[test]
        fn sci_parses_back_to_twelve_digits(x in finite()) {
            let y: f64 = sci(x).parse().unwrap();
            prop_assert!((x - y).abs() <= 5e-13 * x.abs());
        }
    }
}
