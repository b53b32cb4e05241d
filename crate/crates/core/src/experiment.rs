//! Scenario orchestration: pulse calibration, landscape studies over Ω_B,
//! fidelity/success trade-offs and deliberate-birefringence sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CalibrationConfig, ScenarioConfig};
use crate::dynamics::{emission_for, evolve_fast, extract_emission, AmplitudeTrajectory, EmissionRecord, TimeGrid};
use crate::error::{Error, Result};
use crate::herald::{sample_pair, JonesElement};
use crate::landscape::{compute_landscape, FidelityKind, HeraldLandscape, Region};
use crate::model::{SingleExcitationState, SystemParams};
use crate::numerics::trapezoid_weights;

const BISECTION_STEPS: usize = 40;
const MAX_BRACKET_STEPS: usize = 8;
/// Fraction of emission left outside the landscape axis at each end.
const AXIS_CUT: f64 = 1e-10;
const CALIBRATION_STEPS: usize = 1024;

fn trial_record(params: &SystemParams, tail: f64) -> Result<EmissionRecord> {
    let grid = TimeGrid::for_params(params, tail, CALIBRATION_STEPS)?;
    let traj = evolve_fast(params, &grid, &SingleExcitationState::ground())?;
    Ok(extract_emission(&traj, params))
}

fn scaled(params: &SystemParams, scale: f64, ratio: f64) -> SystemParams {
    let mut p = *params;
    p.drive.down.rabi_peak = params.drive.down.rabi_peak * scale / ratio.sqrt();
    p.drive.up.rabi_peak = params.drive.up.rabi_peak * scale * ratio.sqrt();
    p
}

/// Root of `f` near `x = 1`: march outward by factors of two until the sign
/// changes, then bisect in `log x`. Only a local bracket is searched since
/// the calibration targets are not monotone over wide ranges.
fn bracket_and_bisect(mut f: impl FnMut(f64) -> Result<f64>, what: &str) -> Result<f64> {
    let f1 = f(1.0)?;
    if f1 == 0.0 {
        return Ok(1.0);
    }
    let (f_up, f_down) = (f(2.0)?, f(0.5)?);
    let (mut a, mut fa, mut b) = if f_up.signum() != f1.signum() {
        (0.0, f1, 2f64.ln())
    } else if f_down.signum() != f1.signum() {
        (0.5f64.ln(), f_down, 0.0)
    } else {
        let up = f_up.abs() < f_down.abs();
        let step = if up { 2f64.ln() } else { -(2f64.ln()) };
        let (mut x, mut fx) = (step, if up { f_up } else { f_down });
        let mut found = None;
        for _ in 0..MAX_BRACKET_STEPS {
            let next = x + step;
            let f_next = f(next.exp())?;
            if f_next.signum() != fx.signum() {
                found = Some(if up { (x, fx, next) } else { (next, f_next, x) });
                break;
            }
            x = next;
            fx = f_next;
        }
        found.ok_or_else(|| Error::Calibration(format!("{what}: target not reachable (last residual {fx:.3e})")))?
    };
    for _ in 0..BISECTION_STEPS {
        let m = 0.5 * (a + b);
        let fm = f(m.exp())?;
        if fm == 0.0 {
            return Ok(m.exp());
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Adjust the pump strengths so the photon's 5%–95% emission time equals
/// the target and, if requested, both branches emit with equal probability.
/// The two searches alternate for `iterations` rounds.
pub fn calibrate(params: &SystemParams, cal: &CalibrationConfig, tail: f64) -> Result<SystemParams> {
    let mut p = *params;
    if p.drive.down.rabi_peak <= 0.0 || p.drive.up.rabi_peak <= 0.0 {
        return Err(Error::Calibration("both tones need a positive starting Rabi frequency".into()));
    }
    let separate_tones = (p.drive.down.detuning - p.drive.up.detuning).abs() >= 1e-12;
    for _ in 0..cal.iterations.max(1) {
        let base = p;
        let scale = bracket_and_bisect(
            |s| Ok(cal.target_duration - trial_record(&scaled(&base, s, 1.0), tail)?.emission_duration(0.05, 0.95)),
            "emission duration",
        )?;
        p = scaled(&base, scale, 1.0);
        if cal.balance_branches && separate_tones {
            let base = p;
            let ratio = bracket_and_bisect(
                |r| {
                    let rec = trial_record(&scaled(&base, 1.0, r), tail)?;
                    Ok(rec.branch_probability(0) - rec.branch_probability(1))
                },
                "branch balance",
            )?;
            p = scaled(&base, 1.0, ratio);
        }
    }
    Ok(p)
}

/// Evolution and emission record of one node.
#[derive(Debug, Clone)]
pub struct NodeRun {
    pub params: SystemParams,
    pub trajectory: AmplitudeTrajectory,
    pub record: EmissionRecord,
}

impl NodeRun {
    pub fn new(params: SystemParams, tail: f64, steps: usize) -> Result<Self> {
        let (trajectory, record) = emission_for(&params, tail, steps)?;
        Ok(Self {
            params,
            trajectory,
            record,
        })
    }
}

/// Parameters of both nodes with node B's Ω_B (and optionally both nodes'
/// δ_B) overridden. Node B reuses node A's calibrated pump strengths.
pub fn prepare_nodes(
    cfg: &ScenarioConfig,
    omega_b: f64,
    delta_b: Option<f64>,
    theta_b: Option<f64>,
) -> Result<(SystemParams, SystemParams)> {
    let mut node_a = cfg.node_a.clone();
    let mut node_b = cfg.node_b.clone();
    node_b.birefringence.omega_b = omega_b;
    if let Some(theta) = theta_b {
        node_b.birefringence.theta_b = theta;
    }
    if let Some(d) = delta_b {
        node_a.birefringence.delta_b = d;
        node_b.birefringence.delta_b = d;
    }
    let mut a = node_a.to_params()?;
    let mut b = node_b.to_params()?;
    if cfg.calibration.enabled {
        a = calibrate(&a, &cfg.calibration, cfg.landscape.tail)?;
        b.drive.down.rabi_peak = a.drive.down.rabi_peak;
        b.drive.up.rabi_peak = a.drive.up.rabi_peak;
    }
    Ok((a, b))
}

/// Axis covering both nodes' emission, trimmed where the cumulative
/// emission is below `AXIS_CUT` at either end.
pub fn landscape_axis(rec_a: &EmissionRecord, rec_b: &EmissionRecord, resolution: usize) -> Result<TimeGrid> {
    if rec_a.grid != rec_b.grid {
        return Err(Error::GridMismatch);
    }
    let grid = rec_a.grid;
    let flux: Vec<f64> = rec_a.flux().iter().zip(rec_b.flux()).map(|(a, b)| a + b).collect();
    let cum = crate::numerics::cumulative_trapezoid(&flux, grid.dt());
    let total = *cum.last().unwrap_or(&0.0);
    if !(total > 0.0) {
        return TimeGrid::new(grid.t0, grid.t1, resolution);
    }
    let first = cum.partition_point(|&c| c < AXIS_CUT * total).saturating_sub(1);
    let last = cum.partition_point(|&c| c < (1.0 - AXIS_CUT) * total).min(grid.n - 1);
    TimeGrid::new(grid.time(first), grid.time(last.max(first + 1)), resolution)
}

/// Probability of any two-click herald (all four patterns), from the joint
/// density before the beam splitter.
pub fn total_success_probability(
    rec_a: &EmissionRecord,
    rec_b: &EmissionRecord,
    jones_a: &JonesElement,
    jones_b: &JonesElement,
    axis: &TimeGrid,
) -> Result<f64> {
    let times = axis.times();
    let w = trapezoid_weights(axis.n, axis.dt());
    let rows: Result<Vec<f64>> = (0..axis.n)
        .into_par_iter()
        .map(|i| {
            let mut row = 0.0;
            for j in 0..axis.n {
                let s = sample_pair(rec_a, rec_b, jones_a, jones_b, times[i], times[j])?;
                row += w[j] * s.pre_splitter_density();
            }
            Ok(w[i] * row)
        })
        .collect();
    Ok(rows?.iter().sum())
}

/// Retained success probability as a function of a per-event fidelity cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub kind: FidelityKind,
    /// Success probability with no cut.
    pub total: f64,
    pub thresholds: Vec<f64>,
    pub retained: Vec<f64>,
    pub marks: Vec<TradeoffMark>,
}

/// Largest highest-fidelity-first region whose average fidelity still
/// reaches `target_average`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffMark {
    pub target_average: f64,
    pub retained: f64,
    /// Lowest per-event fidelity admitted into the region; `None` when even
    /// the best cell falls short of the target.
    pub min_fidelity: Option<f64>,
}

/// Cells of all `landscapes` pooled, sorted by descending fidelity; the
/// retained probability at threshold `f` counts cells with fidelity `≥ f`.
pub fn tradeoff_curve(
    landscapes: &[HeraldLandscape],
    kind: FidelityKind,
    targets: &[f64],
    samples: usize,
) -> Result<TradeoffCurve> {
    let mut cells: Vec<(f64, f64)> = Vec::new();
    for l in landscapes {
        let weights = l.cell_weights();
        let f = l.fidelity(kind);
        for k in 0..l.len() {
            let p = weights[k] * l.density[k];
            if p > 0.0 && f[k].is_finite() {
                cells.push((f[k], p));
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::EmptyLandscape);
    }
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut cum_p = Vec::with_capacity(cells.len());
    let mut cum_fp = Vec::with_capacity(cells.len());
    let (mut p, mut fp) = (0.0, 0.0);
    for (f, w) in &cells {
        p += w;
        fp += f * w;
        cum_p.push(p);
        cum_fp.push(fp);
    }
    let total = p;
    let samples = samples.max(2);
    let thresholds: Vec<f64> = (0..samples).map(|i| i as f64 / (samples - 1) as f64).collect();
    let retained = thresholds
        .iter()
        .map(|&t| {
            let n = cells.partition_point(|c| c.0 >= t - 1e-12);
            if n == 0 {
                0.0
            } else {
                cum_p[n - 1]
            }
        })
        .collect();
    // prefix averages never increase along the sorted cells
    let prefix_avg: Vec<f64> = cum_fp.iter().zip(&cum_p).map(|(a, b)| a / b).collect();
    let marks = targets
        .iter()
        .map(|&target| {
            let n = prefix_avg.partition_point(|&a| a >= target);
            if n == 0 {
                TradeoffMark {
                    target_average: target,
                    retained: 0.0,
                    min_fidelity: None,
                }
            } else {
                TradeoffMark {
                    target_average: target,
                    retained: cum_p[n - 1],
                    min_fidelity: Some(cells[n - 1].0),
                }
            }
        })
        .collect();
    Ok(TradeoffCurve {
        kind,
        total,
        thresholds,
        retained,
        marks,
    })
}

pub const TRADEOFF_SAMPLES: usize = 1001;

/// Everything computed for one node-B Ω_B value.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub omega_b: f64,
    pub node_a: NodeRun,
    pub node_b: NodeRun,
    /// One landscape per configured herald pattern.
    pub landscapes: Vec<HeraldLandscape>,
    /// Two-click success probability over all four patterns.
    pub success_total: f64,
    /// Success probability of the configured patterns.
    pub success_patterns: f64,
    pub average_raw: f64,
    pub average_corrected: f64,
    pub tradeoff_raw: TradeoffCurve,
    pub tradeoff_corrected: TradeoffCurve,
}

/// Density-weighted average over the full plane of several patterns.
pub fn pooled_average(landscapes: &[HeraldLandscape], kind: FidelityKind) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for l in landscapes {
        let p = l.success_probability(&Region::Full)?;
        if p > 0.0 {
            num += p * l.integrated_fidelity(kind, &Region::Full)?;
            den += p;
        }
    }
    if !(den > 0.0) {
        return Err(Error::EmptyRegion);
    }
    Ok(num / den)
}

/// Run one scenario at the given node-B Ω_B with already prepared nodes.
pub fn run_nodes(cfg: &ScenarioConfig, a: SystemParams, b: SystemParams) -> Result<ScenarioResult> {
    let l = &cfg.landscape;
    let node_a = NodeRun::new(a, l.tail, l.record_steps)?;
    let node_b = NodeRun::new(b, l.tail, l.record_steps)?;
    let jones_a = cfg.node_a.jones.element()?;
    let jones_b = cfg.node_b.jones.element()?;
    let axis = landscape_axis(&node_a.record, &node_b.record, l.resolution)?;
    let landscapes = l
        .patterns
        .iter()
        .map(|&p| compute_landscape(&node_a.record, &node_b.record, &jones_a, &jones_b, p, &axis, l.correction))
        .collect::<Result<Vec<_>>>()?;
    let success_total = total_success_probability(&node_a.record, &node_b.record, &jones_a, &jones_b, &axis)?;
    let success_patterns = landscapes
        .iter()
        .map(|x| x.success_probability(&Region::Full))
        .sum::<Result<f64>>()?;
    Ok(ScenarioResult {
        omega_b: b.birefringence.omega_b,
        average_raw: pooled_average(&landscapes, FidelityKind::Raw)?,
        average_corrected: pooled_average(&landscapes, FidelityKind::Corrected)?,
        tradeoff_raw: tradeoff_curve(&landscapes, FidelityKind::Raw, &l.thresholds, TRADEOFF_SAMPLES)?,
        tradeoff_corrected: tradeoff_curve(&landscapes, FidelityKind::Corrected, &l.thresholds, TRADEOFF_SAMPLES)?,
        node_a,
        node_b,
        landscapes,
        success_total,
        success_patterns,
    })
}

/// Landscapes at one node-B Ω_B value.
pub fn run_scenario(cfg: &ScenarioConfig, omega_b: f64) -> Result<ScenarioResult> {
    let (a, b) = prepare_nodes(cfg, omega_b, None, None)?;
    run_nodes(cfg, a, b)
}

/// Landscapes for every Ω_B value of the study, in order.
pub fn run_study(cfg: &ScenarioConfig) -> Result<Vec<ScenarioResult>> {
    cfg.study_values().into_iter().map(|w| run_scenario(cfg, w)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta_b: f64,
    pub average_raw: f64,
    pub average_corrected: f64,
    pub success_total: f64,
    pub rabi_down: f64,
    pub rabi_up: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub omega_b: f64,
    pub theta_b: f64,
    pub points: Vec<SweepPoint>,
}

/// Deliberate splitting δ_B on both nodes against a fixed node-B Ω_B. At
/// each point the tones are retuned onto Raman resonance and, unless
/// disabled, the pump strengths recalibrated.
pub fn sweep_deliberate(cfg: &ScenarioConfig, delta_b_values: &[f64]) -> Result<SweepResult> {
    if delta_b_values.is_empty() || !delta_b_values.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::field("sweep.delta_b", "need ascending values"));
    }
    let sweep = cfg.sweep.clone().unwrap_or(crate::config::SweepConfig {
        omega_b: 1.0,
        theta_b: std::f64::consts::FRAC_PI_4,
        delta_b: delta_b_values.to_vec(),
        recalibrate: true,
    });
    // without recalibration every point reuses the δ_B = first calibration
    let fixed = if sweep.recalibrate {
        None
    } else {
        Some(prepare_nodes(cfg, sweep.omega_b, Some(delta_b_values[0]), Some(sweep.theta_b))?.0)
    };
    let points = delta_b_values
        .par_iter()
        .map(|&delta_b| {
            let mut point_cfg = cfg.clone();
            if fixed.is_some() {
                point_cfg.calibration.enabled = false;
            }
            let (mut a, mut b) = prepare_nodes(&point_cfg, sweep.omega_b, Some(delta_b), Some(sweep.theta_b))?;
            if let Some(f) = &fixed {
                for p in [&mut a, &mut b] {
                    p.drive.down.rabi_peak = f.drive.down.rabi_peak;
                    p.drive.up.rabi_peak = f.drive.up.rabi_peak;
                }
            }
            let r = run_nodes(&point_cfg, a, b)?;
            Ok(SweepPoint {
                delta_b,
                average_raw: r.average_raw,
                average_corrected: r.average_corrected,
                success_total: r.success_total,
                rabi_down: a.drive.down.rabi_peak,
                rabi_up: a.drive.up.rabi_peak,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        omega_b: sweep.omega_b,
        theta_b: sweep.theta_b,
        points,
    })
}
