//! Time evolution of one node under its effective Hamiltonian and the
//! conversion of cavity amplitudes into output wavepackets.

use crate::error::{Error, Result};
use crate::model::{basis, hamiltonian_unchecked, SingleExcitationState, SystemParams, Vector6c, C64};
use crate::numerics::{cumulative_trapezoid, integrate_uniform, rk4_step};

/// Largest internal step as a fraction of the fastest period scale (1/ω_max).
pub const MAX_STEP_SCALE: f64 = 0.01;
/// Step-halving tolerance on every amplitude.
pub const HALVING_TOL: f64 = 1e-6;
/// Minimum free-decay tail after the drive window, in units of 1/κ.
pub const MIN_TAIL: f64 = 4.0;
const MAX_DOUBLINGS: usize = 6;

/// Uniform sampling of `[t0, t1]` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::Grid(format!("need t1 > t0, got [{t0}, {t1}]")));
        }
        if n < 2 {
            return Err(Error::Grid(format!("need at least 2 samples, got {n}")));
        }
        Ok(Self { t0, t1, n })
    }

    /// Default record grid: `steps` intervals over the drive window plus `tail`.
    pub fn for_params(params: &SystemParams, tail: f64, steps: usize) -> Result<Self> {
        Self::new(0.0, params.drive.window() + tail, steps + 1)
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.n - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.time(i)).collect()
    }

    /// Linear-interpolation stencil `(i, frac)` for time `t`.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let tol = 1e-9 * self.dt();
        if !(t >= self.t0 - tol && t <= self.t1 + tol) {
            return Err(Error::OutsideGrid(t));
        }
        let x = ((t - self.t0) / self.dt()).clamp(0.0, (self.n - 1) as f64);
        let i = (x.floor() as usize).min(self.n - 2);
        Ok((i, x - i as f64))
    }
}

/// Sampled amplitudes of the six basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrajectory {
    pub grid: TimeGrid,
    pub states: Vec<SingleExcitationState>,
}

impl AmplitudeTrajectory {
    pub fn populations(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.population(index)).collect()
    }

    pub fn norms_sqr(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.norm_sqr()).collect()
    }

    pub fn amplitudes(&self, index: usize) -> Vec<C64> {
        self.states.iter().map(|s| s.amplitudes[index]).collect()
    }
}

/// Integrate `i dψ/dt = H_eff(t) ψ` on `grid`.
///
/// Each output interval is sub-stepped so the internal RK4 step stays below
/// `MAX_STEP_SCALE / ω_max`; the result is then compared against a run with
/// half the step and refined until every amplitude agrees to `HALVING_TOL`.
pub fn evolve(
    params: &SystemParams,
    grid: &TimeGrid,
    initial: &SingleExcitationState,
) -> Result<AmplitudeTrajectory> {
    check_preconditions(params, grid, initial)?;
    let mut substeps = base_substeps(params, grid);
    let mut coarse = integrate(params, grid, initial, substeps);
    let mut deviation = f64::INFINITY;
    for _ in 0..=MAX_DOUBLINGS {
        let fine = integrate(params, grid, initial, 2 * substeps);
        deviation = max_deviation(&coarse, &fine);
        if deviation < HALVING_TOL {
            return Ok(AmplitudeTrajectory {
                grid: *grid,
                states: fine,
            });
        }
        coarse = fine;
        substeps *= 2;
    }
    Err(Error::NonConvergence {
        deviation,
        substeps,
    })
}

/// Single integration pass at the base step size, without the halving check.
/// Used by calibration loops where many trial evolutions are needed.
pub fn evolve_fast(
    params: &SystemParams,
    grid: &TimeGrid,
    initial: &SingleExcitationState,
) -> Result<AmplitudeTrajectory> {
    check_preconditions(params, grid, initial)?;
    let states = integrate(params, grid, initial, base_substeps(params, grid));
    Ok(AmplitudeTrajectory {
        grid: *grid,
        states,
    })
}

fn check_preconditions(
    params: &SystemParams,
    grid: &TimeGrid,
    initial: &SingleExcitationState,
) -> Result<()> {
    let norm = initial.norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::field("initial", format!("state must be normalised, |ψ|² = {norm}")));
    }
    let kappa = params.kappa_h.min(params.kappa_v);
    let needed = params.drive.window() + if kappa > 0.0 { MIN_TAIL / kappa } else { 0.0 };
    if grid.t0 > 0.0 || grid.t1 < needed - 1e-12 {
        return Err(Error::Grid(format!(
            "grid [{}, {}] must cover [0, {needed}] (drive window plus {MIN_TAIL}/κ tail)",
            grid.t0, grid.t1
        )));
    }
    Ok(())
}

fn base_substeps(params: &SystemParams, grid: &TimeGrid) -> usize {
    let h_max = MAX_STEP_SCALE / params.max_frequency();
    ((grid.dt() / h_max).ceil() as usize).max(1)
}

fn integrate(
    params: &SystemParams,
    grid: &TimeGrid,
    initial: &SingleExcitationState,
    substeps: usize,
) -> Vec<SingleExcitationState> {
    // Only the pump coupling is time dependent.
    let mut static_part = hamiltonian_unchecked(params, -1.0);
    static_part[(basis::E0, basis::G0)] = C64::new(0.0, 0.0);
    static_part[(basis::G0, basis::E0)] = C64::new(0.0, 0.0);
    let minus_i = C64::new(0.0, -1.0);
    let drive = params.drive;
    let rhs = move |t: f64, y: &Vector6c| {
        let mut out = static_part * y;
        let c = drive.coupling(t);
        out[basis::E0] += c * y[basis::G0];
        out[basis::G0] += c.conj() * y[basis::E0];
        out * minus_i
    };

    let h = grid.dt() / substeps as f64;
    let mut y = initial.amplitudes;
    let mut out = Vec::with_capacity(grid.n);
    out.push(SingleExcitationState { amplitudes: y });
    for i in 1..grid.n {
        let start = grid.time(i - 1);
        for k in 0..substeps {
            y = rk4_step(&rhs, start + k as f64 * h, &y, h);
        }
        out.push(SingleExcitationState { amplitudes: y });
    }
    out
}

fn max_deviation(a: &[SingleExcitationState], b: &[SingleExcitationState]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| (x.amplitudes - y.amplitudes).iter().map(|z| z.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

/// Output wavepacket components of one node.
///
/// `w[x][y][k]` is the output field amplitude at time `grid.time(k)` into
/// detector polarisation `y` for the branch that ideally emits `x` (H from
/// |↑⟩, V from |↓⟩), expressed in the qubit rotating frame. Normalised forms
/// and coefficients follow `w = coefficient · normalised`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionRecord {
    pub grid: TimeGrid,
    pub w: [[Vec<C64>; 2]; 2],
}

impl EmissionRecord {
    /// `‖w[x][y]‖²`, the probability of branch `x` emitting into `y`.
    pub fn norm_sqr(&self, x: usize, y: usize) -> f64 {
        let v: Vec<f64> = self.w[x][y].iter().map(|z| z.norm_sqr()).collect();
        integrate_uniform(&v, self.grid.dt())
    }

    /// Normalisation coefficient (`h^{β,H} = ‖w[H][H]‖` and friends).
    pub fn coefficient(&self, x: usize, y: usize) -> f64 {
        self.norm_sqr(x, y).sqrt()
    }

    /// Unit-norm wavepacket `w[x][y] / ‖w[x][y]‖`, or zeros if empty.
    pub fn normalized(&self, x: usize, y: usize) -> Vec<C64> {
        let c = self.coefficient(x, y);
        if c == 0.0 {
            return vec![C64::new(0.0, 0.0); self.grid.n];
        }
        self.w[x][y].iter().map(|z| z / c).collect()
    }

    /// Total emission probability of branch `x`.
    pub fn branch_probability(&self, x: usize) -> f64 {
        self.norm_sqr(x, 0) + self.norm_sqr(x, 1)
    }

    pub fn total_probability(&self) -> f64 {
        self.branch_probability(0) + self.branch_probability(1)
    }

    /// Emitted flux summed over branches and polarisations, per sample.
    pub fn flux(&self) -> Vec<f64> {
        (0..self.grid.n)
            .map(|k| {
                self.w
                    .iter()
                    .flat_map(|row| row.iter())
                    .map(|c| c[k].norm_sqr())
                    .sum()
            })
            .collect()
    }

    /// Time between the `lo` and `hi` crossings of the normalised cumulative
    /// emission (e.g. 0.05 and 0.95).
    pub fn emission_duration(&self, lo: f64, hi: f64) -> f64 {
        let cum = cumulative_trapezoid(&self.flux(), self.grid.dt());
        let total = *cum.last().unwrap_or(&0.0);
        if total <= 0.0 {
            return 0.0;
        }
        let crossing = |level: f64| {
            let target = level * total;
            let k = cum.partition_point(|&c| c < target);
            if k == 0 {
                return self.grid.time(0);
            }
            let (a, b) = (cum[k - 1], cum[k.min(cum.len() - 1)]);
            let frac = if b > a { (target - a) / (b - a) } else { 0.0 };
            self.grid.time(k - 1) + frac * self.grid.dt()
        };
        crossing(hi) - crossing(lo)
    }

    /// Linearly interpolated `[w[x][H](t), w[x][V](t)]` for both branches.
    pub fn sample(&self, t: f64) -> Result<[[C64; 2]; 2]> {
        let (i, f) = self.grid.locate(t)?;
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (x, row) in out.iter_mut().enumerate() {
            for (y, v) in row.iter_mut().enumerate() {
                let s = &self.w[x][y];
                *v = s[i] * (1.0 - f) + s[i + 1] * f;
            }
        }
        Ok(out)
    }
}

/// Read the output wavepackets off a trajectory: `w[x][y] = √(2κ_y) c_{s(x),y}`,
/// with the |↓⟩ branch moved into the qubit rotating frame by `exp(iΔt)`.
pub fn extract_emission(traj: &AmplitudeTrajectory, params: &SystemParams) -> EmissionRecord {
    let rates = [(2.0 * params.kappa_h).sqrt(), (2.0 * params.kappa_v).sqrt()];
    let times = traj.grid.times();
    let mut w: [[Vec<C64>; 2]; 2] = Default::default();
    for (qubit, row) in w.iter_mut().enumerate() {
        for (pol, series) in row.iter_mut().enumerate() {
            let idx = basis::photon(qubit, pol);
            *series = traj
                .states
                .iter()
                .zip(&times)
                .map(|(s, &t)| {
                    let frame = if qubit == 1 {
                        C64::from_polar(1.0, params.delta_zeeman * t)
                    } else {
                        C64::new(1.0, 0.0)
                    };
                    s.amplitudes[idx] * rates[pol] * frame
                })
                .collect();
        }
    }
    EmissionRecord {
        grid: traj.grid,
        w,
    }
}

/// Convenience: evolve from |g,0⟩ on the default grid and extract the record.
pub fn emission_for(params: &SystemParams, tail: f64, steps: usize) -> Result<(AmplitudeTrajectory, EmissionRecord)> {
    let grid = TimeGrid::for_params(params, tail, steps)?;
    let traj = evolve(params, &grid, &SingleExcitationState::ground())?;
    let rec = extract_emission(&traj, params);
    Ok((traj, rec))
}
