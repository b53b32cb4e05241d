//! Physical parameters of one emitter–cavity node and its effective Hamiltonian.
//!
//! The node is restricted to the single-excitation manifold
//!
//! ```text
//! |g,0⟩, |e,0⟩, |↑,1_H⟩, |↑,1_V⟩, |↓,1_H⟩, |↓,1_V⟩
//! ```
//!
//! A bichromatic pump drives |g⟩ ↔ |e⟩; the cavity vacuum closes the Raman
//! legs |e⟩ ↔ |↑⟩ (σ⁺) and |e⟩ ↔ |↓⟩ (σ⁻). Cavity decay and spontaneous
//! emission appear as anti-Hermitian diagonal terms: neither returns
//! population to the coherent manifold.
//!
//! All frequencies are in units of the cavity field decay rate κ and all times
//! in units of 1/κ. Photon states rotate at the cavity mean frequency plus the
//! |↑⟩ energy, so the |↓,1_x⟩ states carry the Zeeman splitting Δ on their
//! diagonal and each drive tone enters with the phase `exp(-i δ_k t)`, where
//! δ_k is measured from the (|↑⟩, cavity mean) Raman resonance.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};

pub type C64 = Complex64;
pub type Matrix2c = SMatrix<C64, 2, 2>;
pub type Matrix6c = SMatrix<C64, 6, 6>;
pub type Vector6c = SVector<C64, 6>;

/// Tolerance on unitarity of the emission basis and Jones elements.
pub const UNITARY_TOL: f64 = 1e-12;

/// Indices of the single-excitation basis states.
pub mod basis {
    pub const G0: usize = 0;
    pub const E0: usize = 1;
    pub const UP_H: usize = 2;
    pub const UP_V: usize = 3;
    pub const DOWN_H: usize = 4;
    pub const DOWN_V: usize = 5;

    pub const LABELS: [&str; 6] = ["g0", "e0", "up_h", "up_v", "down_h", "down_v"];

    /// Index of |s, 1_y⟩ for qubit `s` (0 = ↑, 1 = ↓) and polarisation `y` (0 = H, 1 = V).
    pub const fn photon(qubit: usize, pol: usize) -> usize {
        2 + 2 * qubit + pol
    }
}

/// Shape of a drive pulse on [0, duration].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Envelope {
    /// `sin²(π t / T)`.
    Sin2 { duration: f64 },
    /// Unit plateau with `sin²` edges of length `rise` at both ends.
    FlatTop { duration: f64, rise: f64 },
}

impl Envelope {
    pub fn duration(&self) -> f64 {
        match *self {
            Envelope::Sin2 { duration } | Envelope::FlatTop { duration, .. } => duration,
        }
    }

    /// Envelope value at `t`; zero outside [0, T].
    pub fn value(&self, t: f64) -> f64 {
        let duration = self.duration();
        if !(0.0..=duration).contains(&t) {
            return 0.0;
        }
        match *self {
            Envelope::Sin2 { duration } => (std::f64::consts::PI * t / duration).sin().powi(2),
            Envelope::FlatTop { duration, rise } => {
                let edge = |s: f64| (0.5 * std::f64::consts::PI * s / rise).sin().powi(2);
                if t < rise {
                    edge(t)
                } else if t > duration - rise {
                    edge(duration - t)
                } else {
                    1.0
                }
            }
        }
    }

    fn check(&self, field: &str, errs: &mut Vec<FieldError>) {
        let duration = self.duration();
        if !(duration > 0.0 && duration.is_finite()) {
            errs.push(fe(format!("{field}.duration"), "must be positive and finite"));
        }
        if let Envelope::FlatTop { rise, .. } = *self {
            if !(rise > 0.0 && 2.0 * rise <= duration) {
                errs.push(fe(format!("{field}.rise"), "must satisfy 0 < rise <= duration/2"));
            }
        }
    }
}

/// One tone of the bichromatic pump on |g⟩ ↔ |e⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTone {
    /// Peak Rabi frequency Ω (the coupling matrix element is Ω·f(t)/2).
    pub rabi_peak: f64,
    /// Frequency of the tone relative to the (|↑⟩, cavity mean) Raman resonance.
    pub detuning: f64,
    pub envelope: Envelope,
}

impl DriveTone {
    /// Coupling matrix element ⟨e|H|g⟩ contributed by this tone at time `t`.
    pub fn coupling(&self, t: f64) -> C64 {
        let amp = 0.5 * self.rabi_peak * self.envelope.value(t);
        C64::from_polar(amp, -self.detuning * t)
    }
}

/// The two pump tones, labelled by the qubit branch each is tuned to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BichromaticDrive {
    /// Tone δ₁, resonant with the |↓⟩ branch.
    pub down: DriveTone,
    /// Tone δ₂, resonant with the |↑⟩ branch.
    pub up: DriveTone,
}

impl BichromaticDrive {
    /// End of the drive window (the longer of the two envelopes).
    pub fn window(&self) -> f64 {
        self.down.envelope.duration().max(self.up.envelope.duration())
    }

    pub fn coupling(&self, t: f64) -> C64 {
        self.down.coupling(t) + self.up.coupling(t)
    }

    pub fn max_rabi(&self) -> f64 {
        self.down.rabi_peak.max(self.up.rabi_peak)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityBirefringence {
    /// Eigenmode splitting Ω_B of the (possibly off-axis) birefringence.
    pub omega_b: f64,
    /// Deliberate splitting δ_B = ω_V − ω_H on the H/V diagonal. With the
    /// |↓⟩ branch emitting V this widens the Raman tone separation to Δ + δ_B.
    pub delta_b: f64,
    /// Angle of the Ω_B eigenbasis relative to H/V, in radians.
    pub theta_b: f64,
}

impl CavityBirefringence {
    pub const NONE: CavityBirefringence = CavityBirefringence {
        omega_b: 0.0,
        delta_b: 0.0,
        theta_b: 0.0,
    };

    /// 2×2 Hermitian polarisation block in the H/V basis.
    pub fn polarization_block(&self) -> Matrix2c {
        let half = 0.5 * self.omega_b;
        let (s, c) = (2.0 * self.theta_b).sin_cos();
        let d = 0.5 * self.delta_b;
        Matrix2c::new(
            C64::new(half * c - d, 0.0),
            C64::new(half * s, 0.0),
            C64::new(half * s, 0.0),
            C64::new(-half * c + d, 0.0),
        )
    }
}

impl Default for CavityBirefringence {
    fn default() -> Self {
        Self::NONE
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Coupling of |e⟩ ↔ |↑⟩ (σ⁺ emission).
    pub g_up: C64,
    /// Coupling of |e⟩ ↔ |↓⟩ (σ⁻ emission).
    pub g_down: C64,
    /// Field decay rate of the H eigenmode.
    pub kappa_h: f64,
    /// Field decay rate of the V eigenmode.
    pub kappa_v: f64,
    /// Spontaneous emission rate of |e⟩ (population decay).
    pub gamma: f64,
    /// Qubit splitting Δ = E↓ − E↑.
    pub delta_zeeman: f64,
    /// Energy of |e,0⟩ in the rotating frame (one-photon detuning).
    pub excited_offset: f64,
    pub birefringence: CavityBirefringence,
    pub drive: BichromaticDrive,
    /// Column 0 (1) holds the H/V amplitudes of the σ⁺ (σ⁻) transition's cavity mode.
    pub emission_basis: Matrix2c,
}

/// Couplings with `|g_up|²/|g_down|² = ratio` and `|g_up|² + |g_down|² = 2 g²`.
pub fn couplings_from_branching(g: f64, ratio: f64) -> (C64, C64) {
    let up = g * (2.0 * ratio / (1.0 + ratio)).sqrt();
    let down = g * (2.0 / (1.0 + ratio)).sqrt();
    (C64::new(up, 0.0), C64::new(down, 0.0))
}

pub fn is_unitary(m: &Matrix2c, tol: f64) -> bool {
    let p = m.adjoint() * m;
    (p - Matrix2c::identity()).iter().all(|z| z.norm() <= tol)
}

fn fe(field: impl Into<String>, message: impl Into<String>) -> FieldError {
    FieldError {
        field: field.into(),
        message: message.into(),
    }
}

impl SystemParams {
    /// Check every physical invariant, reporting all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("kappa_h", self.kappa_h),
            ("kappa_v", self.kappa_v),
            ("gamma", self.gamma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(fe(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("delta_zeeman", self.delta_zeeman),
            ("excited_offset", self.excited_offset),
            ("birefringence.theta_b", self.birefringence.theta_b),
        ] {
            if !v.is_finite() {
                errs.push(fe(name, "must be finite"));
            }
        }
        if !(self.g_up.norm().is_finite() && self.g_down.norm().is_finite()) {
            errs.push(fe("g", "couplings must be finite"));
        }
        if !(self.birefringence.omega_b >= 0.0 && self.birefringence.omega_b.is_finite()) {
            errs.push(fe("birefringence.omega_b", "must be non-negative"));
        }
        if !(self.birefringence.delta_b >= 0.0 && self.birefringence.delta_b.is_finite()) {
            errs.push(fe("birefringence.delta_b", "must be non-negative"));
        }
        for (name, tone) in [("drive.down", &self.drive.down), ("drive.up", &self.drive.up)] {
            if !(tone.rabi_peak >= 0.0 && tone.rabi_peak.is_finite()) {
                errs.push(fe(format!("{name}.rabi_peak"), "must be non-negative"));
            }
            if !tone.detuning.is_finite() {
                errs.push(fe(format!("{name}.detuning"), "must be finite"));
            }
            tone.envelope.check(name, &mut errs);
        }
        if !is_unitary(&self.emission_basis, UNITARY_TOL) {
            errs.push(fe("emission_basis", "must be unitary to 1e-12"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(errs))
        }
    }

    /// Drive detunings (δ₁ for |↓⟩, δ₂ for |↑⟩) that put each tone on Raman
    /// resonance with the cavity mode its branch emits into. Only the
    /// deliberate splitting δ_B is compensated; Ω_B is treated as a perturbation.
    pub fn raman_resonant_detunings(&self) -> (f64, f64) {
        let d = 0.5 * self.birefringence.delta_b;
        let shift = |col: usize| {
            let h = self.emission_basis[(0, col)].norm_sqr();
            let v = self.emission_basis[(1, col)].norm_sqr();
            d * (v - h)
        };
        (self.delta_zeeman + shift(1), shift(0))
    }

    /// Retune both tones onto Raman resonance and place |e⟩ midway between
    /// them, offset by `one_photon_detuning`.
    pub fn retuned(mut self, one_photon_detuning: f64) -> Self {
        let (down, up) = self.raman_resonant_detunings();
        self.drive.down.detuning = down;
        self.drive.up.detuning = up;
        self.excited_offset = 0.5 * (down + up) + one_photon_detuning;
        self
    }

    /// Largest frequency scale entering the Hamiltonian.
    pub fn max_frequency(&self) -> f64 {
        let pol = self.birefringence.polarization_block();
        let pol_scale = pol.iter().map(|z| z.norm()).fold(0.0, f64::max);
        [
            self.g_up.norm(),
            self.g_down.norm(),
            self.kappa_h,
            self.kappa_v,
            0.5 * self.gamma,
            self.delta_zeeman.abs(),
            self.excited_offset.abs(),
            pol_scale,
            self.drive.down.rabi_peak,
            self.drive.up.rabi_peak,
            self.drive.down.detuning.abs(),
            self.drive.up.detuning.abs(),
            (self.drive.down.detuning - self.drive.up.detuning).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
        .max(1e-3)
    }
}

/// Effective non-Hermitian Hamiltonian at time `t` in the drive window.
pub fn build_effective_hamiltonian(params: &SystemParams, t: f64) -> Result<Matrix6c> {
    if !is_unitary(&params.emission_basis, UNITARY_TOL) {
        return Err(Error::field("emission_basis", "must be unitary to 1e-12"));
    }
    let window = params.drive.window();
    if !(0.0..=window).contains(&t) {
        return Err(Error::OutsideDriveWindow { t, window });
    }
    Ok(hamiltonian_unchecked(params, t))
}

/// Same as [`build_effective_hamiltonian`] with no window check; the drive is
/// zero outside its envelopes.
pub(crate) fn hamiltonian_unchecked(params: &SystemParams, t: f64) -> Matrix6c {
    use basis::*;
    let mut h = Matrix6c::zeros();
    let i = C64::i();

    let omega = params.drive.coupling(t);
    h[(E0, G0)] = omega;
    h[(G0, E0)] = omega.conj();

    let b = &params.emission_basis;
    for pol in 0..2 {
        for (qubit, g) in [(0, params.g_up), (1, params.g_down)] {
            let c = g * b[(pol, qubit)];
            let k = photon(qubit, pol);
            h[(k, E0)] = c;
            h[(E0, k)] = c.conj();
        }
    }

    let block = params.birefringence.polarization_block();
    for qubit in 0..2 {
        let zeeman = if qubit == 1 { params.delta_zeeman } else { 0.0 };
        for r in 0..2 {
            for c in 0..2 {
                h[(photon(qubit, r), photon(qubit, c))] += block[(r, c)];
            }
            h[(photon(qubit, r), photon(qubit, r))] += C64::new(zeeman, 0.0);
        }
        h[(photon(qubit, 0), photon(qubit, 0))] -= i * params.kappa_h;
        h[(photon(qubit, 1), photon(qubit, 1))] -= i * params.kappa_v;
    }

    h[(E0, E0)] += C64::new(params.excited_offset, 0.0) - i * (0.5 * params.gamma);
    h
}

/// Amplitudes over the six single-excitation basis states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleExcitationState {
    pub amplitudes: Vector6c,
}

impl SingleExcitationState {
    pub fn ground() -> Self {
        Self::basis(basis::G0)
    }

    pub fn basis(index: usize) -> Self {
        let mut amplitudes = Vector6c::zeros();
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    /// Degenerate two-branch node: g = κ = γ/0.6, Δ = 0, sin² pulse.
    pub fn degenerate(omega_b: f64) -> SystemParams {
        let (g_up, g_down) = couplings_from_branching(1.0, 1.0);
        let tone = DriveTone {
            rabi_peak: 1.0,
            detuning: 0.0,
            envelope: Envelope::Sin2 { duration: 20.0 },
        };
        SystemParams {
            g_up,
            g_down,
            kappa_h: 1.0,
            kappa_v: 1.0,
            gamma: 0.6,
            delta_zeeman: 0.0,
            excited_offset: 0.0,
            birefringence: CavityBirefringence {
                omega_b,
                delta_b: 0.0,
                theta_b: FRAC_PI_4,
            },
            drive: BichromaticDrive { down: tone, up: tone },
            emission_basis: Matrix2c::identity(),
        }
    }

    fn is_hermitian(h: &Matrix6c, tol: f64) -> bool {
        (h - h.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn all_interactions_off_leaves_zeeman_diagonal() {
        let mut p = degenerate(0.0);
        p.kappa_h = 0.0;
        p.kappa_v = 0.0;
        p.gamma = 0.0;
        p.birefringence.theta_b = 0.0;
        p.g_up = C64::new(0.0, 0.0);
        p.g_down = C64::new(0.0, 0.0);
        p.drive.up.rabi_peak = 0.0;
        p.drive.down.rabi_peak = 0.0;
        p.delta_zeeman = 2.5;
        let h = build_effective_hamiltonian(&p, 0.0).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                let expect = if r == c && (r == basis::DOWN_H || r == basis::DOWN_V) {
                    2.5
                } else {
                    0.0
                };
                assert_eq!(h[(r, c)], C64::new(expect, 0.0), "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn off_axis_splitting_is_fully_off_diagonal() {
        let mut p = degenerate(1.0);
        p.birefringence.theta_b = FRAC_PI_4;
        let block = p.birefringence.polarization_block();
        assert!((block[(0, 1)].norm() - 0.5).abs() < 1e-15);
        assert!(block[(0, 0)].norm() < 1e-15);
        let h = build_effective_hamiltonian(&p, 3.0).unwrap();
        assert!((h[(basis::UP_H, basis::UP_V)].norm() - 0.5).abs() < 1e-15);
        assert!((h[(basis::DOWN_V, basis::DOWN_H)].norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn decay_terms_of_degenerate_node() {
        let p = degenerate(0.0);
        let h = build_effective_hamiltonian(&p, 5.0).unwrap();
        assert!((h[(basis::E0, basis::E0)] - C64::new(0.0, -0.3)).norm() < 1e-15);
        for k in [basis::UP_H, basis::UP_V, basis::DOWN_H, basis::DOWN_V] {
            assert!((h[(k, k)] - C64::new(0.0, -1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn hermitian_without_losses() {
        let mut p = degenerate(0.7);
        p.kappa_h = 0.0;
        p.kappa_v = 0.0;
        p.gamma = 0.0;
        p.delta_zeeman = 1.3;
        p.birefringence.delta_b = 2.0;
        p.drive.down.detuning = 1.0;
        for t in [0.0, 3.3, 10.0, 20.0] {
            let h = build_effective_hamiltonian(&p, t).unwrap();
            assert!(is_hermitian(&h, 1e-12));
        }
    }

    #[test]
    fn no_birefringence_gives_scalar_block() {
        let b = CavityBirefringence {
            omega_b: 0.0,
            delta_b: 0.0,
            theta_b: 0.3,
        };
        let block = b.polarization_block();
        assert_eq!(block, Matrix2c::zeros());
    }

    #[test]
    fn basis_covariance_under_polarisation_rotation() {
        let mut p = degenerate(0.8);
        p.birefringence.theta_b = 0.2;
        let phi: f64 = 0.37;
        let (s, c) = phi.sin_cos();
        let rot = Matrix2c::new(
            C64::new(c, 0.0),
            C64::new(-s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        );
        let mut q = p;
        q.emission_basis = rot * p.emission_basis;
        q.birefringence.theta_b += phi;

        let mut u = Matrix6c::identity();
        for qubit in 0..2 {
            for r in 0..2 {
                for cc in 0..2 {
                    u[(basis::photon(qubit, r), basis::photon(qubit, cc))] = rot[(r, cc)];
                }
            }
        }
        let t = 7.5;
        let hp = build_effective_hamiltonian(&p, t).unwrap();
        let hq = build_effective_hamiltonian(&q, t).unwrap();
        let diff = u * hp * u.adjoint() - hq;
        assert!(diff.iter().all(|z| z.norm() < 1e-12), "{diff}");
    }

    #[test]
    fn rejects_non_unitary_basis_and_out_of_window_times() {
        let mut p = degenerate(0.0);
        assert!(matches!(
            build_effective_hamiltonian(&p, 20.5),
            Err(Error::OutsideDriveWindow { .. })
        ));
        assert!(build_effective_hamiltonian(&p, -0.1).is_err());
        p.emission_basis[(0, 0)] = C64::new(1.1, 0.0);
        assert!(matches!(
            build_effective_hamiltonian(&p, 1.0),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn branching_ratio_is_squared_coupling_ratio() {
        let (up, down) = couplings_from_branching(1.0, 1.25);
        assert!((up.norm_sqr() / down.norm_sqr() - 1.25).abs() < 1e-14);
        assert!((up.norm_sqr() + down.norm_sqr() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn validation_reports_every_bad_field() {
        let mut p = degenerate(0.0);
        p.kappa_h = -1.0;
        p.gamma = 0.0;
        p.birefringence.delta_b = -2.0;
        match p.validate() {
            Err(Error::Invalid(errs)) => {
                let fields: Vec<_> = errs.iter().map(|e| e.field.as_str()).collect();
                assert_eq!(fields, ["kappa_h", "gamma", "birefringence.delta_b"]);
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn resonant_detunings_follow_deliberate_splitting() {
        let mut p = degenerate(1.0);
        p.delta_zeeman = 5.0;
        p.birefringence.delta_b = 4.0;
        let (down, up) = p.raman_resonant_detunings();
        assert!((down - 7.0).abs() < 1e-15);
        assert!((up + 2.0).abs() < 1e-15);
        let r = p.retuned(0.0);
        assert!((r.excited_offset - 2.5).abs() < 1e-15);
    }

    #[test]
    fn flat_top_envelope_shape() {
        let env = Envelope::FlatTop {
            duration: 10.0,
            rise: 2.0,
        };
        assert_eq!(env.value(5.0), 1.0);
        assert!((env.value(1.0) - 0.5).abs() < 1e-15);
        assert!((env.value(9.0) - 0.5).abs() < 1e-12);
        assert_eq!(env.value(10.5), 0.0);
    }
}
