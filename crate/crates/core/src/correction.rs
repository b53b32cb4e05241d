//! Optimal local unitary on node B for a heralded two-qubit state.
//!
//! Writing the state as `|↑⟩|u⟩ + |↓⟩|d⟩` (node A first), the overlap with
//! `(|↑↓⟩ ± |↓↑⟩)/√2` after a node-B unitary `U` is `Tr(U M)/√2` with
//! `M = |u⟩⟨↓| ± |d⟩⟨↑|`. The maximum of `|Tr(U M)|` over unitaries is the
//! sum of singular values of `M`, reached at `U = V W†` for `M = W Σ V†`.

use crate::error::{Error, Result};
use crate::herald::{BellPhase, ConditionalState};
use crate::model::{Matrix2c, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionResult {
    pub fidelity_corrected: f64,
    /// Node-B unitary, applied after detection.
    pub unitary: Matrix2c,
    /// θ in `exp(−iθ/2 n̂·σ)`, in `[0, π]`.
    pub rotation_angle: f64,
    pub rotation_axis: [f64; 3],
    /// Azimuth of the rotation axis on the Bloch sphere, signed radians.
    pub azimuth: f64,
}

/// `M = |u⟩⟨↓| ± |d⟩⟨↑|` in the node-B basis.
pub fn overlap_operator(state: &ConditionalState, phase: BellPhase) -> Matrix2c {
    let (u, d) = state.node_b_kets();
    let s = phase.sign();
    Matrix2c::new(d[0] * s, u[0], d[1] * s, u[1])
}

/// `σ₁ + σ₂` of a 2×2 matrix, from `(σ₁+σ₂)² = ‖M‖_F² + 2|det M|`.
fn singular_value_sum(m: &Matrix2c) -> f64 {
    let frob = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    (frob + 2.0 * m.determinant().norm()).sqrt()
}

/// Best Bell fidelity reachable with a unitary on node B.
pub fn corrected_fidelity(state: &ConditionalState, phase: BellPhase) -> Result<f64> {
    let norm = state.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let s = singular_value_sum(&overlap_operator(state, phase));
    Ok((0.5 * s * s / norm).clamp(0.0, 1.0))
}

/// Best Bell fidelity reachable with unitaries on both nodes:
/// `(λ₁ + λ₂)²/2` from the Schmidt coefficients of the normalised state.
/// For a pure state this equals [`corrected_fidelity`].
pub fn both_node_fidelity(state: &ConditionalState) -> Result<f64> {
    let norm = state.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let a = &state.amps;
    let coeffs = Matrix2c::new(a[0], a[1], a[2], a[3]);
    let s = singular_value_sum(&coeffs);
    Ok((0.5 * s * s / norm).clamp(0.0, 1.0))
}

pub fn optimal_correction(state: &ConditionalState, phase: BellPhase) -> Result<CorrectionResult> {
    let fidelity_corrected = corrected_fidelity(state, phase)?;
    let m = overlap_operator(state, phase);
    let svd = m.svd(true, true);
    let (w, v_t) = match (svd.u, svd.v_t) {
        (Some(w), Some(v_t)) => (w, v_t),
        _ => return Err(Error::ZeroNorm),
    };
    let unitary = v_t.adjoint() * w.adjoint();
    let (rotation_angle, rotation_axis, azimuth) = rotation_parameters(&unitary);
    Ok(CorrectionResult {
        fidelity_corrected,
        unitary,
        rotation_angle,
        rotation_axis,
        azimuth,
    })
}

/// Angle, Bloch axis and axis azimuth of `u` written as `exp(−iθ/2 n̂·σ)`
/// up to a global phase chosen so the trace is real and non-negative.
pub fn rotation_parameters(u: &Matrix2c) -> (f64, [f64; 3], f64) {
    let mut su = u / u.determinant().sqrt();
    if su.trace().re < 0.0 {
        su = -su;
    }
    let half_cos = (0.5 * su.trace().re).clamp(-1.0, 1.0);
    let angle = 2.0 * half_cos.acos();
    let n = [
        -(su[(0, 1)].im + su[(1, 0)].im),
        su[(1, 0)].re - su[(0, 1)].re,
        su[(1, 1)].im - su[(0, 0)].im,
    ];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if len < 1e-14 {
        return (angle, [0.0, 0.0, 1.0], 0.0);
    }
    let axis = [n[0] / len, n[1] / len, n[2] / len];
    (angle, axis, axis[1].atan2(axis[0]))
}

/// Apply `u` to node B.
pub fn apply_node_b(state: &ConditionalState, u: &Matrix2c) -> ConditionalState {
    let (up, down) = state.node_b_kets();
    let rot = |k: [C64; 2]| {
        [
            u[(0, 0)] * k[0] + u[(0, 1)] * k[1],
            u[(1, 0)] * k[0] + u[(1, 1)] * k[1],
        ]
    };
    let (up, down) = (rot(up), rot(down));
    ConditionalState {
        amps: [up[0], up[1], down[0], down[1]],
        ..*state
    }
}

/// The normalised state recast as
/// `c₁|↑⟩|↓''⟩ + c₂|↓⟩(√(1−p)|↑''⟩ + √p|↓''⟩)`, with `|↓''⟩ ∝ u` and the
/// phase of `|↑''⟩` chosen so that `c₂` is common to both terms.
/// `p = 0` is a Bell state up to a node-B unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplifiedForm {
    pub c1: f64,
    pub c2: C64,
    pub p: f64,
    pub basis_up: [C64; 2],
    pub basis_down: [C64; 2],
}

pub fn simplified_form(state: &ConditionalState) -> Result<SimplifiedForm> {
    let norm = state.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let scale = norm.sqrt();
    let (u, d) = state.node_b_kets();
    let u = [u[0] / scale, u[1] / scale];
    let d = [d[0] / scale, d[1] / scale];
    let c1 = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
    let d_norm = (d[0].norm_sqr() + d[1].norm_sqr()).sqrt();
    let basis_down = if c1 > 0.0 {
        [u[0] / c1, u[1] / c1]
    } else {
        [C64::from(0.0), C64::from(1.0)]
    };
    let mut basis_up = [-basis_down[1].conj(), basis_down[0].conj()];
    let on_down = basis_down[0].conj() * d[0] + basis_down[1].conj() * d[1];
    let on_up = basis_up[0].conj() * d[0] + basis_up[1].conj() * d[1];
    let p = if d_norm > 0.0 {
        (on_down.norm_sqr() / (d_norm * d_norm)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let phase = if on_down.norm() > 0.0 { on_down.arg() } else { on_up.arg() };
    let shift = C64::from_polar(1.0, on_up.arg() - phase);
    basis_up = [basis_up[0] * shift, basis_up[1] * shift];
    Ok(SimplifiedForm {
        c1,
        c2: C64::from_polar(d_norm, phase),
        p,
        basis_up,
        basis_down,
    })
}
