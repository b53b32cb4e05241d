//! Two-photon interference on a 50/50 beam splitter and projection onto a
//! pair of polarisation-resolved detector clicks.
//!
//! Node A feeds input port `a` and node B input port `b`. Creation operators
//! transform as `a† → (c† − d†)/√2` and `b† → (c† + d†)/√2`. A herald is one
//! H click at time `t_h` and one V click at time `t_v`, each on port c or d.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::EmissionRecord;
use crate::error::{Error, Result};
use crate::model::{is_unitary, Matrix2c, C64, UNITARY_TOL};
use crate::numerics::trapezoid_weights;

const H: usize = 0;
const V: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    C,
    D,
}

/// Detector ports of the H click and the V click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HeraldPattern {
    pub port_h: Port,
    pub port_v: Port,
}

impl HeraldPattern {
    pub const CC: HeraldPattern = HeraldPattern { port_h: Port::C, port_v: Port::C };
    pub const CD: HeraldPattern = HeraldPattern { port_h: Port::C, port_v: Port::D };
    pub const DC: HeraldPattern = HeraldPattern { port_h: Port::D, port_v: Port::C };
    pub const DD: HeraldPattern = HeraldPattern { port_h: Port::D, port_v: Port::D };
    pub const ALL: [HeraldPattern; 4] = [Self::CC, Self::CD, Self::DC, Self::DD];

    /// Clicks on the same port herald Ψ⁺, on different ports Ψ⁻.
    pub fn bell_phase(&self) -> BellPhase {
        if self.port_h == self.port_v {
            BellPhase::Plus
        } else {
            BellPhase::Minus
        }
    }
}

impl fmt::Display for HeraldPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = |port: Port| match port {
            Port::C => 'c',
            Port::D => 'd',
        };
        write!(f, "{}{}", p(self.port_h), p(self.port_v))
    }
}

impl FromStr for HeraldPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let port = |c: char| match c.to_ascii_lowercase() {
            'c' => Ok(Port::C),
            'd' => Ok(Port::D),
            _ => Err(Error::Parse(format!("herald pattern '{s}': ports must be c or d"))),
        };
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 2 {
            return Err(Error::Parse(format!("herald pattern '{s}' must be two ports, e.g. \"cc\"")));
        }
        Ok(HeraldPattern {
            port_h: port(chars[0])?,
            port_v: port(chars[1])?,
        })
    }
}

impl Serialize for HeraldPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HeraldPattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sign of the target Bell state `(|↑↓⟩ ± |↓↑⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellPhase {
    Plus,
    Minus,
}

impl BellPhase {
    pub fn sign(&self) -> f64 {
        match self {
            BellPhase::Plus => 1.0,
            BellPhase::Minus => -1.0,
        }
    }
}

/// A fixed polarisation transformation applied to one node's output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesElement(Matrix2c);

impl JonesElement {
    pub fn new(m: Matrix2c) -> Result<Self> {
        if !is_unitary(&m, UNITARY_TOL) {
            return Err(Error::field("jones", "must be unitary to 1e-12"));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix2c::identity())
    }

    /// Real rotation of the H/V axes by `angle`.
    pub fn rotator(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix2c::new(
            C64::from(c),
            C64::from(-s),
            C64::from(s),
            C64::from(c),
        ))
    }

    /// Linear retarder with fast axis at `axis` and retardance `phase`
    /// (π/2 for a quarter-wave plate).
    pub fn retarder(axis: f64, phase: f64) -> Self {
        let r = Self::rotator(axis).0;
        let d = Matrix2c::new(
            C64::from_polar(1.0, -0.5 * phase),
            C64::from(0.0),
            C64::from(0.0),
            C64::from_polar(1.0, 0.5 * phase),
        );
        Self(r * d * r.adjoint())
    }

    pub fn matrix(&self) -> &Matrix2c {
        &self.0
    }

    pub fn apply(&self, field: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [
            m[(0, 0)] * field[0] + m[(0, 1)] * field[1],
            m[(1, 0)] * field[0] + m[(1, 1)] * field[1],
        ]
    }

    /// Apply to both branches of a sampled record, `[x][y]`.
    pub fn apply_branches(&self, out: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
        [self.apply(out[0]), self.apply(out[1])]
    }
}

impl Default for JonesElement {
    fn default() -> Self {
        Self::identity()
    }
}

/// Unnormalised two-qubit state left behind by one herald event, over
/// `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩` (node A first).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalState {
    pub t_h: f64,
    pub t_v: f64,
    pub amps: [C64; 4],
}

impl ConditionalState {
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Node-B kets paired with node A in |↑⟩ and |↓⟩: `(u, d)`.
    pub fn node_b_kets(&self) -> ([C64; 2], [C64; 2]) {
        ([self.amps[0], self.amps[1]], [self.amps[2], self.amps[3]])
    }
}

/// Beam-splitter amplitude for a photon entering from node A or B to `port`.
fn splitter(node_b: bool, port: Port) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match (node_b, port) {
        (false, Port::D) => -s,
        _ => s,
    }
}

/// Branch outputs `[x][y]` of both nodes at the two click times, already
/// passed through the nodes' Jones elements.
#[derive(Debug, Clone, Copy)]
pub struct ClickSamples {
    pub a_at_h: [[C64; 2]; 2],
    pub a_at_v: [[C64; 2]; 2],
    pub b_at_h: [[C64; 2]; 2],
    pub b_at_v: [[C64; 2]; 2],
}

impl ClickSamples {
    /// Project onto the clicks of `pattern`.
    pub fn project(&self, pattern: HeraldPattern, t_h: f64, t_v: f64) -> ConditionalState {
        let a_first = splitter(false, pattern.port_h) * splitter(true, pattern.port_v);
        let b_first = splitter(false, pattern.port_v) * splitter(true, pattern.port_h);
        let mut amps = [C64::new(0.0, 0.0); 4];
        for xa in 0..2 {
            for xb in 0..2 {
                // A supplies the H click and B the V click, or the other way round.
                let ah_bv = self.a_at_h[xa][H] * self.b_at_v[xb][V];
                let av_bh = self.a_at_v[xa][V] * self.b_at_h[xb][H];
                amps[2 * xa + xb] = ah_bv * a_first + av_bh * b_first;
            }
        }
        ConditionalState { t_h, t_v, amps }
    }

    /// Joint H-at-`t_h`, V-at-`t_v` density before the beam splitter, summed
    /// over qubit states and which node supplied which photon.
    pub fn pre_splitter_density(&self) -> f64 {
        let mut total = 0.0;
        for xa in 0..2 {
            for xb in 0..2 {
                total += (self.a_at_h[xa][H] * self.b_at_v[xb][V]).norm_sqr();
                total += (self.a_at_v[xa][V] * self.b_at_h[xb][H]).norm_sqr();
            }
        }
        total
    }
}

pub(crate) fn sample_pair(
    rec_a: &EmissionRecord,
    rec_b: &EmissionRecord,
    jones_a: &JonesElement,
    jones_b: &JonesElement,
    t_h: f64,
    t_v: f64,
) -> Result<ClickSamples> {
    if rec_a.grid != rec_b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(ClickSamples {
        a_at_h: jones_a.apply_branches(rec_a.sample(t_h)?),
        a_at_v: jones_a.apply_branches(rec_a.sample(t_v)?),
        b_at_h: jones_b.apply_branches(rec_b.sample(t_h)?),
        b_at_v: jones_b.apply_branches(rec_b.sample(t_v)?),
    })
}

/// Conditional two-qubit state for an H click at `t_h` and a V click at `t_v`.
/// Off-grid times are linearly interpolated.
pub fn conditional_state(
    rec_a: &EmissionRecord,
    rec_b: &EmissionRecord,
    jones_a: &JonesElement,
    jones_b: &JonesElement,
    pattern: HeraldPattern,
    t_h: f64,
    t_v: f64,
) -> Result<ConditionalState> {
    Ok(sample_pair(rec_a, rec_b, jones_a, jones_b, t_h, t_v)?.project(pattern, t_h, t_v))
}

/// `|⟨Ψ±|ψ⟩|² / ⟨ψ|ψ⟩`.
pub fn raw_fidelity(state: &ConditionalState, phase: BellPhase) -> Result<f64> {
    let norm = state.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let overlap = state.amps[1] + state.amps[2] * phase.sign();
    Ok((0.5 * overlap.norm_sqr() / norm).clamp(0.0, 1.0))
}

/// Joint detection probability density of the event.
pub fn herald_density(state: &ConditionalState) -> f64 {
    state.norm_sqr()
}

fn inner(f: &[C64], g: &[C64], w: &[f64]) -> C64 {
    f.iter().zip(g).zip(w).map(|((a, b), w)| a.conj() * b * *w).sum()
}

/// Closed-form event-averaged fidelity for two non-birefringent nodes,
/// `(1 + Re[⟨α_H,β_H⟩⟨β_V,α_V⟩]) / 2`, with unit-normalised wavepackets.
/// Uses trapezoid quadrature on the record grid.
pub fn overlap_product_fidelity(rec_a: &EmissionRecord, rec_b: &EmissionRecord) -> Result<f64> {
    if rec_a.grid != rec_b.grid {
        return Err(Error::GridMismatch);
    }
    let w = trapezoid_weights(rec_a.grid.n, rec_a.grid.dt());
    let unit = |s: &[C64]| -> Result<Vec<C64>> {
        let n = inner(s, s, &w).re.sqrt();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(s.iter().map(|z| z / n).collect())
    };
    let alpha_h = unit(&rec_a.w[H][H])?;
    let alpha_v = unit(&rec_a.w[V][V])?;
    let beta_h = unit(&rec_b.w[H][H])?;
    let beta_v = unit(&rec_b.w[V][V])?;
    let prod = inner(&alpha_h, &beta_h, &w) * inner(&beta_v, &alpha_v, &w);
    Ok(0.5 * (1.0 + prod.re))
}
