//! Full master-equation evolution used as a brute-force cross-check of the
//! amplitude dynamics.
//!
//! The density matrix lives on the six coherent single-excitation states plus
//! one absorbing "lost" level. The Hamiltonian is the Hermitian part of the
//! effective Hamiltonian; every loss channel is an explicit collapse operator
//! that moves population into the lost level:
//!
//! ```text
//! L = √(2κ_H) |lost⟩⟨s,1_H|,  √(2κ_V) |lost⟩⟨s,1_V|,  √γ |lost⟩⟨e,0|
//! dρ/dt = -i[H, ρ] + Σ_L (L ρ L† − ½{L†L, ρ})
//! ```
//!
//! No channel feeds the coherent subspace, so its populations must equal the
//! squared amplitudes of [`crate::dynamics::evolve`].

use nalgebra::SMatrix;

use crate::dynamics::{TimeGrid, MAX_STEP_SCALE};
use crate::error::{Error, Result};
use crate::model::{basis, hamiltonian_unchecked, SingleExcitationState, SystemParams, C64};
use crate::numerics::rk4_step;

pub const DIM: usize = 7;
/// Index of the absorbing level.
pub const LOST: usize = 6;

pub type Matrix7c = SMatrix<C64, DIM, DIM>;

const TRACE_TOL: f64 = 1e-9;
const POSITIVITY_TOL: f64 = -1e-9;
const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub rho: Matrix7c,
}

impl DensityState {
    pub fn pure(state: &SingleExcitationState) -> Self {
        let mut psi = SMatrix::<C64, DIM, 1>::zeros();
        for i in 0..6 {
            psi[i] = state.amplitudes[i];
        }
        Self {
            rho: psi * psi.adjoint(),
        }
    }

    pub fn ground() -> Self {
        Self::pure(&SingleExcitationState::ground())
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn population(&self, index: usize) -> f64 {
        self.rho[(index, index)].re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.rho + self.rho.adjoint()) * C64::from(0.5);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self) -> Result<()> {
        let herm_err = (self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut errs = Vec::new();
        if (self.trace() - 1.0).abs() > TRACE_TOL {
            errs.push(crate::error::FieldError {
                field: "rho".into(),
                message: format!("trace {} differs from 1", self.trace()),
            });
        }
        if herm_err > HERMITICITY_TOL {
            errs.push(crate::error::FieldError {
                field: "rho".into(),
                message: format!("not Hermitian (max deviation {herm_err:.3e})"),
            });
        }
        if !errs.is_empty() {
            return Err(Error::Invalid(errs));
        }
        let min = self.min_eigenvalue();
        if min < POSITIVITY_TOL {
            return Err(Error::Positivity {
                min_eigenvalue: min,
                t: f64::NAN,
            });
        }
        Ok(())
    }
}

fn collapse_operators(params: &SystemParams) -> Vec<Matrix7c> {
    let mut ops = Vec::new();
    let mut jump = |from: usize, rate: f64| {
        if rate > 0.0 {
            let mut l = Matrix7c::zeros();
            l[(LOST, from)] = C64::from(rate.sqrt());
            ops.push(l);
        }
    };
    for qubit in 0..2 {
        jump(basis::photon(qubit, 0), 2.0 * params.kappa_h);
        jump(basis::photon(qubit, 1), 2.0 * params.kappa_v);
    }
    jump(basis::E0, params.gamma);
    ops
}

fn hermitian_part(params: &SystemParams, t: f64) -> Matrix7c {
    let h = hamiltonian_unchecked(params, t);
    let h = (h + h.adjoint()) * C64::from(0.5);
    let mut out = Matrix7c::zeros();
    out.fixed_view_mut::<6, 6>(0, 0).copy_from(&h);
    out
}

/// Master-equation evolution sampled on `grid`; the first entry is `initial`.
pub fn evolve_lindblad(
    params: &SystemParams,
    grid: &TimeGrid,
    initial: &DensityState,
) -> Result<Vec<DensityState>> {
    initial.check()?;
    let ops = collapse_operators(params);
    let dissipators: Vec<(Matrix7c, Matrix7c)> = ops
        .iter()
        .map(|l| (*l, l.adjoint() * l * C64::from(0.5)))
        .collect();
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |t: f64, rho: &Matrix7c| {
        let h = hermitian_part(params, t);
        let mut d = (h * rho - rho * h) * minus_i;
        for (l, half_ldl) in &dissipators {
            d += l * rho * l.adjoint() - half_ldl * rho - rho * half_ldl;
        }
        d
    };

    let h_max = MAX_STEP_SCALE / params.max_frequency();
    let substeps = 2 * ((grid.dt() / h_max).ceil() as usize).max(1);
    let h = grid.dt() / substeps as f64;

    let mut rho = initial.rho;
    let mut out = Vec::with_capacity(grid.n);
    out.push(initial.clone());
    for i in 1..grid.n {
        let start = grid.time(i - 1);
        for k in 0..substeps {
            rho = rk4_step(&rhs, start + k as f64 * h, &rho, h);
        }
        let state = DensityState { rho };
        let min = state.min_eigenvalue();
        if min < POSITIVITY_TOL {
            return Err(Error::Positivity {
                min_eigenvalue: min,
                t: grid.time(i),
            });
        }
        out.push(state);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve;
    use crate::model::tests::degenerate;

    fn short_grid() -> TimeGrid {
        TimeGrid::new(0.0, 26.0, 261).unwrap()
    }

    #[test]
    fn zero_drive_is_stationary() {
        let mut p = degenerate(1.0);
        p.drive.up.rabi_peak = 0.0;
        p.drive.down.rabi_peak = 0.0;
        let out = evolve_lindblad(&p, &short_grid(), &DensityState::ground()).unwrap();
        for s in &out {
            assert_eq!(s.rho, DensityState::ground().rho);
        }
    }

    #[test]
    fn trace_is_preserved_and_loss_accumulates() {
        let p = degenerate(2.0 / 3.0);
        let out = evolve_lindblad(&p, &short_grid(), &DensityState::ground()).unwrap();
        for s in &out {
            assert!((s.trace() - 1.0).abs() < 1e-9);
        }
        let lost: Vec<f64> = out.iter().map(|s| s.population(LOST)).collect();
        assert!(lost.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(*lost.last().unwrap() > 0.9);
    }

    #[test]
    fn populations_match_amplitude_dynamics() {
        let p = degenerate(1.0);
        let grid = short_grid();
        let rho = evolve_lindblad(&p, &grid, &DensityState::ground()).unwrap();
        let traj = evolve(&p, &grid, &SingleExcitationState::ground()).unwrap();
        let mut worst = 0.0_f64;
        for (r, s) in rho.iter().zip(&traj.states) {
            for k in 0..6 {
                worst = worst.max((r.population(k) - s.population(k)).abs());
            }
        }
        assert!(worst < 1e-6, "max deviation {worst:.3e}");
        // polarisation oscillation populates |↑,1_V⟩
        assert!(rho.iter().any(|r| r.population(basis::UP_V) > 1e-3));
    }

    #[test]
    fn rejects_invalid_initial_state() {
        let mut bad = DensityState::ground();
        bad.rho[(0, 0)] = C64::from(0.5);
        assert!(evolve_lindblad(&degenerate(0.0), &short_grid(), &bad).is_err());
    }
}
