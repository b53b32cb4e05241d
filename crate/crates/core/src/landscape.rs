//! Detection-time landscapes: per-cell raw and corrected fidelity, herald
//! density and correction parameters over a square (t_h, t_v) grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correction::{both_node_fidelity, optimal_correction};
use crate::dynamics::{EmissionRecord, TimeGrid};
use crate::error::{Error, Result};
use crate::herald::{raw_fidelity, ClickSamples, HeraldPattern, JonesElement};
use crate::model::C64;
use crate::numerics::trapezoid_weights;

/// Which fidelity field a reduction reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityKind {
    Raw,
    Corrected,
}

impl FidelityKind {
    pub fn label(&self) -> &'static str {
        match self {
            FidelityKind::Raw => "raw",
            FidelityKind::Corrected => "corrected",
        }
    }
}

/// Where local corrections may act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionScope {
    /// Node B only; the reported unitary acts there.
    #[default]
    NodeB,
    /// Both nodes; same fidelity for pure states, the reported unitary is
    /// still the node-B one.
    BothNodes,
}

/// Row-major fields indexed `[i_h * t_v.len() + i_v]`. Cells where no
/// herald is possible (zero density) hold NaN in every fidelity field.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldLandscape {
    pub t_h: Vec<f64>,
    pub t_v: Vec<f64>,
    pub pattern: HeraldPattern,
    pub f_raw: Vec<f64>,
    pub f_corr: Vec<f64>,
    pub density: Vec<f64>,
    pub corr_angle: Vec<f64>,
    pub corr_azimuth: Vec<f64>,
}

/// Subset of cells an average is taken over.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Full,
    /// Row-major cell mask, same layout as the landscape fields.
    Mask(Vec<bool>),
    /// Both detection times inside `[t_min, t_max]`.
    Window { t_min: f64, t_max: f64 },
}

impl HeraldLandscape {
    pub fn shape(&self) -> (usize, usize) {
        (self.t_h.len(), self.t_v.len())
    }

    pub fn len(&self) -> usize {
        self.t_h.len() * self.t_v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i_h: usize, i_v: usize) -> usize {
        i_h * self.t_v.len() + i_v
    }

    pub fn fidelity(&self, kind: FidelityKind) -> &[f64] {
        match kind {
            FidelityKind::Raw => &self.f_raw,
            FidelityKind::Corrected => &self.f_corr,
        }
    }

    /// 2-D trapezoid weight of every cell.
    pub fn cell_weights(&self) -> Vec<f64> {
        let step = |t: &[f64]| if t.len() > 1 { t[1] - t[0] } else { 0.0 };
        let wh = trapezoid_weights(self.t_h.len(), step(&self.t_h));
        let wv = trapezoid_weights(self.t_v.len(), step(&self.t_v));
        wh.iter().flat_map(|a| wv.iter().map(move |b| a * b)).collect()
    }

    fn region_mask(&self, region: &Region) -> Result<Vec<bool>> {
        match region {
            Region::Full => Ok(vec![true; self.len()]),
            Region::Mask(m) => {
                if m.len() != self.len() {
                    return Err(Error::Grid(format!(
                        "region mask has {} cells, landscape has {}",
                        m.len(),
                        self.len()
                    )));
                }
                Ok(m.clone())
            }
            Region::Window { t_min, t_max } => {
                let inside = |t: f64| t >= *t_min && t <= *t_max;
                Ok(self
                    .t_h
                    .iter()
                    .flat_map(|&th| self.t_v.iter().map(move |&tv| inside(th) && inside(tv)))
                    .collect())
            }
        }
    }

    /// `∫_R ρ` for this pattern.
    pub fn success_probability(&self, region: &Region) -> Result<f64> {
        let mask = self.region_mask(region)?;
        Ok(self
            .cell_weights()
            .iter()
            .zip(&self.density)
            .zip(&mask)
            .filter(|(_, m)| **m)
            .map(|((w, r), _)| w * r)
            .sum())
    }

    /// Density-weighted average `∫_R ρF / ∫_R ρ`.
    pub fn integrated_fidelity(&self, kind: FidelityKind, region: &Region) -> Result<f64> {
        let mask = self.region_mask(region)?;
        let weights = self.cell_weights();
        let f = self.fidelity(kind);
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..self.len() {
            let w = weights[k] * self.density[k];
            if mask[k] && w > 0.0 {
                num += w * f[k];
                den += w;
            }
        }
        if !(den > 0.0) {
            return Err(Error::EmptyRegion);
        }
        Ok(num / den)
    }

    /// Transpose the landscape: swaps the roles of t_h and t_v.
    pub fn transposed(&self) -> Self {
        let (nh, nv) = self.shape();
        let tr = |f: &[f64]| -> Vec<f64> {
            (0..nv)
                .flat_map(|j| (0..nh).map(move |i| (i, j)))
                .map(|(i, j)| f[i * nv + j])
                .collect()
        };
        Self {
            t_h: self.t_v.clone(),
            t_v: self.t_h.clone(),
            pattern: self.pattern,
            f_raw: tr(&self.f_raw),
            f_corr: tr(&self.f_corr),
            density: tr(&self.density),
            corr_angle: tr(&self.corr_angle),
            corr_azimuth: tr(&self.corr_azimuth),
        }
    }
}

type Sample = [[C64; 2]; 2];

fn sample_axis(rec: &EmissionRecord, jones: &JonesElement, axis: &[f64]) -> Result<Vec<Sample>> {
    axis.iter()
        .map(|&t| Ok(jones.apply_branches(rec.sample(t)?)))
        .collect()
}

/// Evaluate every cell of `axis × axis`. Cells are independent and computed
/// in parallel; the result does not depend on the thread count.
pub fn compute_landscape(
    rec_a: &EmissionRecord,
    rec_b: &EmissionRecord,
    jones_a: &JonesElement,
    jones_b: &JonesElement,
    pattern: HeraldPattern,
    axis: &TimeGrid,
    scope: CorrectionScope,
) -> Result<HeraldLandscape> {
    if rec_a.grid != rec_b.grid {
        return Err(Error::GridMismatch);
    }
    let times = axis.times();
    let a = sample_axis(rec_a, jones_a, &times)?;
    let b = sample_axis(rec_b, jones_b, &times)?;
    let phase = pattern.bell_phase();
    let n = times.len();

    let rows: Vec<Vec<[f64; 5]>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let samples = ClickSamples {
                        a_at_h: a[i],
                        a_at_v: a[j],
                        b_at_h: b[i],
                        b_at_v: b[j],
                    };
                    let state = samples.project(pattern, times[i], times[j]);
                    let density = state.norm_sqr();
                    let (Ok(raw), Ok(corr)) = (raw_fidelity(&state, phase), optimal_correction(&state, phase)) else {
                        return [f64::NAN, f64::NAN, density, f64::NAN, f64::NAN];
                    };
                    let f_corr = match scope {
                        CorrectionScope::NodeB => corr.fidelity_corrected,
                        CorrectionScope::BothNodes => both_node_fidelity(&state).unwrap_or(f64::NAN),
                    };
                    [raw, f_corr, density, corr.rotation_angle, corr.azimuth]
                })
                .collect()
        })
        .collect();

    let cells: Vec<[f64; 5]> = rows.into_iter().flatten().collect();
    let field = |k: usize| cells.iter().map(|c| c[k]).collect::<Vec<f64>>();
    Ok(HeraldLandscape {
        t_h: times.clone(),
        t_v: times,
        pattern,
        f_raw: field(0),
        f_corr: field(1),
        density: field(2),
        corr_angle: field(3),
        corr_azimuth: field(4),
    })
}
