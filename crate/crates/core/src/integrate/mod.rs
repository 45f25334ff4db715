//! Integrating-factor Runge–Kutta stepping of the extended system and the
//! Picard iteration built on the same Duhamel structure.

mod functional;
mod picard;

pub use functional::{functional_terms, FunctionalSeries, FunctionalSpec};
pub use picard::{picard_solve, PicardConfig, PicardReport};

use serde::{Deserialize, Serialize};

use crate::dynamics::{rhs_extended_with, rhs_original_with, HallParams, HallState};
use crate::field::{curl, heat_factor, leray_project, SpectralField};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    IfRk2,
    IfRk4,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::IfRk2 => 2,
            Scheme::IfRk4 => 4,
        }
    }
}

/// Which nonlinear sources drive the step. `Original` evolves `(u, b)` and
/// resets `J := ∇×b` after every step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Extended,
    Original,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    /// Keep every `snapshot_stride`-th step; the final state is always kept.
    pub snapshot_stride: usize,
    pub dealias: bool,
    pub formulation: Formulation,
    /// With `false` only the heat flow acts.
    pub nonlinear: bool,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            scheme: Scheme::IfRk4,
            t_end,
            snapshot_stride: 1,
            dealias: true,
            formulation: Formulation::Extended,
            nonlinear: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParameter("snapshot_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened when `dt` does not divide
    /// `t_end`.
    pub fn steps(&self) -> usize {
        let r = self.t_end / self.dt;
        let nearest = r.round();
        if (r - nearest).abs() <= 1e-9 * r.max(1.0) {
            nearest as usize
        } else {
            r.ceil() as usize
        }
    }

    fn time_at(&self, step: usize, steps: usize) -> f64 {
        if step == steps {
            self.t_end
        } else {
            step as f64 * self.dt
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// A non-finite or runaway value appeared; `t_last` is the last valid time.
    Diverged { t_last: f64, step: usize },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<HallState>,
    pub status: RunStatus,
    pub steps: usize,
    /// Largest relative `L²` change made by the per-step Leray re-projection.
    pub max_projection: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &HallState {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }
}

/// `(u, b, J)` as a vector for Runge–Kutta combinations.
#[derive(Clone, Debug)]
pub(crate) struct Triple(pub(crate) [SpectralField; 3]);

impl Triple {
    pub(crate) fn of(s: &HallState) -> Self {
        Triple([s.u.clone(), s.b.clone(), s.j.clone()])
    }

    pub(crate) fn zeros_like(s: &HallState) -> Self {
        let z = SpectralField::zeros(*s.grid());
        Triple([z.clone(), z.clone(), z])
    }

    pub(crate) fn state(self, t: f64, params: HallParams) -> HallState {
        let [u, b, j] = self.0;
        HallState { u, b, j, t, params }
    }

    /// `e^{hLΔ}` with `L = diag(μ, ν, ν)`; `h` may be negative.
    pub(crate) fn heat(&self, p: &HallParams, h: f64) -> Self {
        let k = [p.mu, p.nu, p.nu];
        Triple(std::array::from_fn(|i| heat_factor(&self.0[i], k[i] * h)))
    }

    pub(crate) fn comb(terms: &[(f64, &Triple)]) -> Self {
        Triple(std::array::from_fn(|i| {
            let mut acc = terms[0].1 .0[i].scale(terms[0].0);
            for (a, t) in &terms[1..] {
                acc.axpy(*a, &t.0[i]).expect("same grid");
            }
            acc
        }))
    }

    pub(crate) fn sub(&self, other: &Triple) -> Self {
        Triple::comb(&[(1.0, self), (-1.0, other)])
    }

    fn finite_norm(&self) -> Option<f64> {
        let n = self.0.iter().map(|f| f.l2_norm()).sum::<f64>();
        n.is_finite().then_some(n)
    }
}

/// Nonlinear sources for the chosen formulation, without diffusion.
pub(crate) fn nonlinear_sources(y: &Triple, params: HallParams, formulation: Formulation, dealias: bool) -> Triple {
    let s = HallState { u: y.0[0].clone(), b: y.0[1].clone(), j: y.0[2].clone(), t: 0.0, params };
    match formulation {
        Formulation::Extended => {
            let r = rhs_extended_with(&s, dealias);
            Triple([r.du, r.db, r.dj])
        }
        Formulation::Original => {
            let r = rhs_original_with(&s, dealias);
            let dj = curl(&r.db);
            Triple([r.du, r.db, dj])
        }
    }
}

fn rk_step(y: &Triple, h: f64, params: &HallParams, cfg: &IntegratorConfig) -> Triple {
    let n = |x: &Triple| {
        if cfg.nonlinear {
            nonlinear_sources(x, *params, cfg.formulation, cfg.dealias)
        } else {
            Triple::zeros_like(&HallState::zeros(*x.0[0].grid(), *params))
        }
    };
    match cfg.scheme {
        Scheme::IfRk2 => {
            let k1 = n(y);
            let ystar = Triple::comb(&[(1.0, y), (h, &k1)]).heat(params, h);
            let k2 = n(&ystar);
            let base = Triple::comb(&[(1.0, y), (0.5 * h, &k1)]).heat(params, h);
            Triple::comb(&[(1.0, &base), (0.5 * h, &k2)])
        }
        Scheme::IfRk4 => {
            let half = 0.5 * h;
            let k1 = n(y);
            let ey = y.heat(params, half);
            let k2 = n(&Triple::comb(&[(1.0, y), (half, &k1)]).heat(params, half));
            let k3 = n(&Triple::comb(&[(1.0, &ey), (half, &k2)]));
            let k4 = n(&Triple::comb(&[(1.0, &ey.heat(params, half)), (h, &k3.heat(params, half))]));
            // y⁺ = E²y + h/6 (E²k1 + 2E(k2 + k3) + k4)
            let inner = Triple::comb(&[(1.0, &Triple::comb(&[(1.0, y), (h / 6.0, &k1)]).heat(params, half)), (h / 3.0, &k2), (h / 3.0, &k3)]);
            Triple::comb(&[(1.0, &inner.heat(params, half)), (h / 6.0, &k4)])
        }
    }
}

/// Leray re-projection and mean removal; returns the relative size of the
/// correction.
fn reproject(y: &mut Triple, formulation: Formulation) -> f64 {
    let mut worst: f64 = 0.0;
    for f in y.0.iter_mut() {
        let mut p = leray_project(f);
        p.remove_mean();
        let before = f.l2_norm();
        if before > 0.0 {
            worst = worst.max(f.sub(&p).expect("same grid").l2_norm() / before);
        }
        *f = p;
    }
    if formulation == Formulation::Original {
        y.0[2] = curl(&y.0[1]);
    }
    worst
}

/// Runaway threshold relative to the initial size.
const BLOWUP_FACTOR: f64 = 1e12;

/// Advances `state` to `cfg.t_end`, calling `observer` on the initial state
/// and after every step.
pub fn evolve_with(state: &HallState, cfg: &IntegratorConfig, mut observer: impl FnMut(&HallState)) -> Result<Trajectory> {
    cfg.validate()?;
    let params = state.params;
    let steps = cfg.steps();
    let mut y = Triple::of(state);
    let mut t = state.t;
    let t0 = state.t;
    let limit = BLOWUP_FACTOR * (1.0 + y.finite_norm().unwrap_or(f64::INFINITY));
    let mut snapshots = vec![state.clone()];
    observer(state);
    let mut max_projection: f64 = 0.0;
    let mut status = RunStatus::Completed;
    for step in 1..=steps {
        let t_next = t0 + cfg.time_at(step, steps);
        let mut next = rk_step(&y, t_next - t, &params, cfg);
        max_projection = max_projection.max(reproject(&mut next, cfg.formulation));
        match next.finite_norm() {
            Some(norm) if norm <= limit => {}
            _ => {
                status = RunStatus::Diverged { t_last: t, step: step - 1 };
                break;
            }
        }
        y = next;
        t = t_next;
        let s = y.clone().state(t, params);
        observer(&s);
        if step % cfg.snapshot_stride == 0 || step == steps {
            snapshots.push(s);
        }
    }
    if let RunStatus::Diverged { .. } = status {
        let last = y.state(t, params);
        if snapshots.last().map(|s| s.t) != Some(t) {
            snapshots.push(last);
        }
    }
    Ok(Trajectory { snapshots, status, steps, max_projection })
}

pub fn evolve(state: &HallState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    evolve_with(state, cfg, |_| {})
}

/// Exact heat flow `(e^{μtΔ}u₀, e^{νtΔ}b₀, e^{νtΔ}J₀)` at time `t`.
pub fn free_solution(u0: &SpectralField, b0: &SpectralField, j0: &SpectralField, params: HallParams, t: f64) -> Result<HallState> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let s = HallState::from_parts(u0.clone(), b0.clone(), j0.clone(), 0.0, params)?;
    Ok(Triple::of(&s).heat(&params, t).state(t, params))
}

#[cfg(test)]
mod tests;
