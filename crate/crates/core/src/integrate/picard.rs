use serde::{Deserialize, Serialize};

use super::{evolve, nonlinear_sources, Formulation, FunctionalSeries, FunctionalSpec, IntegratorConfig, RunStatus, Scheme, Trajectory, Triple};
use crate::dynamics::{HallParams, HallState};
use crate::field::SpectralField;
use crate::lp::{DyadicPartition, Profile};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub dt: f64,
    pub t_end: f64,
    pub n_max: usize,
    /// Stop once `δⁿ` falls below this.
    pub tol: f64,
    pub spec: FunctionalSpec,
    /// Stage quadrature of the Duhamel solve, shared with the marcher.
    pub scheme: Scheme,
    pub dealias: bool,
    /// Also run the marcher with the same scheme and record the sup-in-time
    /// distance to the last iterate.
    pub compare_with_marcher: bool,
}

impl PicardConfig {
    pub fn new(dt: f64, t_end: f64, n_max: usize, tol: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            t_end,
            n_max,
            tol,
            spec: FunctionalSpec::new(2.0, 2.0, true)?,
            scheme: Scheme::IfRk4,
            dealias: true,
            compare_with_marcher: true,
        };
        cfg.steps()?;
        Ok(cfg)
    }

    /// Uniform step count; the cubic quadrature needs at least three steps.
    pub fn steps(&self) -> Result<usize> {
        let ic = IntegratorConfig::new(self.dt, self.t_end)?;
        let m = ic.steps();
        if ((m as f64) * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must divide t_end = {}", self.dt, self.t_end)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    /// Number of iterates computed after the free solution.
    pub iterations: usize,
    /// Functional of iterate `n`, index 0 being the free solution.
    pub e_functionals: Vec<f64>,
    /// `δⁿ`, the functional of iterate `n` minus iterate `n−1`; `δ⁰` is the
    /// functional of the free solution.
    pub deltas: Vec<f64>,
    /// `ratios[n−1] = δⁿ/δⁿ⁻¹` for `n ≥ 1`.
    pub ratios: Vec<f64>,
    /// `sup_n` of `e_functionals`.
    pub bound_m: f64,
    pub converged: bool,
    /// Three consecutive ratios at or above one.
    pub non_contraction: bool,
    /// Sup-in-time critical-norm distance between the last iterate and the
    /// marcher, when requested.
    pub marcher_difference: Option<f64>,
}

impl PicardReport {
    /// Largest `δⁿ/δⁿ⁻¹` over `n ≥ from` among the computed iterates.
    pub fn worst_ratio_from(&self, from: usize) -> f64 {
        self.ratios.iter().skip(from.saturating_sub(1)).copied().fold(0.0, f64::max)
    }
}

fn series(partition: &DyadicPartition, spec: &FunctionalSpec, params: &HallParams, times: &[f64], ys: &[Triple]) -> Result<FunctionalSeries> {
    let mut s = FunctionalSeries::default();
    for (t, y) in times.iter().zip(ys) {
        let (level, smooth) = super::functional_terms(partition, spec, params, [&y.0[0], &y.0[1], &y.0[2]])?;
        s.push(*t, level, smooth);
    }
    Ok(s)
}

/// Stage offsets within a step, in units of `h`.
fn stage_offsets(scheme: Scheme) -> &'static [f64] {
    match scheme {
        Scheme::IfRk2 => &[0.0, 1.0],
        Scheme::IfRk4 => &[0.0, 0.5, 0.5, 1.0],
    }
}

/// One integrating-factor step of `y' = Ly + k(t)` with the stage sources
/// `k` given: returns the stage values the same step would feed to the
/// nonlinearity, and the endpoint. With `k_i = N(stage_i)` this is exactly
/// the marcher's step.
fn linear_step(y: &Triple, k: &[Triple], params: &HallParams, h: f64, scheme: Scheme) -> (Vec<Triple>, Triple) {
    match scheme {
        Scheme::IfRk2 => {
            let y2 = Triple::comb(&[(1.0, y), (h, &k[0])]).heat(params, h);
            let base = Triple::comb(&[(1.0, y), (0.5 * h, &k[0])]).heat(params, h);
            let next = Triple::comb(&[(1.0, &base), (0.5 * h, &k[1])]);
            (vec![y.clone(), y2], next)
        }
        Scheme::IfRk4 => {
            let half = 0.5 * h;
            let ey = y.heat(params, half);
            let y2 = Triple::comb(&[(1.0, y), (half, &k[0])]).heat(params, half);
            let y3 = Triple::comb(&[(1.0, &ey), (half, &k[1])]);
            let y4 = Triple::comb(&[(1.0, &ey.heat(params, half)), (h, &k[2].heat(params, half))]);
            let inner = Triple::comb(&[(1.0, &Triple::comb(&[(1.0, y), (h / 6.0, &k[0])]).heat(params, half)), (h / 3.0, &k[1]), (h / 3.0, &k[2])]);
            let next = Triple::comb(&[(1.0, &inner.heat(params, half)), (h / 6.0, &k[3])]);
            (vec![y.clone(), y2, y3, y4], next)
        }
    }
}

/// Duhamel integral of a prescribed source `f(t)` on the uniform grid,
/// `bar(0) = 0`, with the stage quadrature of `scheme`.
#[cfg(test)]
pub(super) fn duhamel(f: impl Fn(f64) -> Triple, zero: &Triple, params: &HallParams, h: f64, steps: usize, scheme: Scheme) -> Vec<Triple> {
    let mut out = vec![zero.clone()];
    for m in 0..steps {
        let t = m as f64 * h;
        let k: Vec<Triple> = stage_offsets(scheme).iter().map(|c| f(t + c * h)).collect();
        let (_, next) = linear_step(&out[m], &k, params, h, scheme);
        out.push(next);
    }
    out
}

/// Picard iteration from the zero start. Iterate `n` solves the linear heat
/// system whose sources are the nonlinearity evaluated at the stage values of
/// iterate `n−1`, so the discrete fixed point is the marcher's trajectory.
pub fn picard_solve(
    u0: &SpectralField,
    b0: &SpectralField,
    j0: &SpectralField,
    params: HallParams,
    cfg: &PicardConfig,
) -> Result<(Trajectory, PicardReport)> {
    let steps = cfg.steps()?;
    let start = HallState::from_parts(u0.clone(), b0.clone(), j0.clone(), 0.0, params)?;
    let grid = *start.grid();
    let partition = DyadicPartition::new(&grid, Profile::default())?;
    let h = cfg.dt;
    let offsets = stage_offsets(cfg.scheme);
    let times: Vec<f64> = (0..=steps).map(|m| m as f64 * h).collect();
    let y0 = Triple::of(&start);
    let free = |t: f64| y0.heat(&params, t);
    let zero = Triple::zeros_like(&start);
    let free_ends: Vec<Triple> = times.iter().map(|&t| free(t)).collect();

    let e0 = series(&partition, &cfg.spec, &params, &times, &free_ends)?.total();
    let mut report = PicardReport {
        iterations: 0,
        e_functionals: vec![e0],
        deltas: vec![e0],
        ratios: Vec::new(),
        bound_m: e0,
        converged: e0 < cfg.tol,
        non_contraction: false,
        marcher_difference: None,
    };
    let mut stages: Vec<Vec<Triple>> = vec![vec![zero.clone(); offsets.len()]; steps];
    let mut bar: Vec<Triple> = vec![zero.clone(); steps + 1];
    let mut streak = 0;
    while !report.converged && report.iterations < cfg.n_max {
        let mut next_bar = vec![zero.clone()];
        let mut next_stages = Vec::with_capacity(steps);
        for m in 0..steps {
            let k: Vec<Triple> = offsets
                .iter()
                .zip(&stages[m])
                .map(|(c, y)| {
                    let full = Triple::comb(&[(1.0, &free(times[m] + c * h)), (1.0, y)]);
                    nonlinear_sources(&full, params, Formulation::Extended, cfg.dealias)
                })
                .collect();
            let (st, next) = linear_step(&next_bar[m], &k, &params, h, cfg.scheme);
            next_stages.push(st);
            next_bar.push(next);
        }
        let diff: Vec<Triple> = next_bar.iter().zip(&bar).map(|(a, b)| a.sub(b)).collect();
        let full: Vec<Triple> = free_ends.iter().zip(&next_bar).map(|(a, b)| Triple::comb(&[(1.0, a), (1.0, b)])).collect();
        let delta = series(&partition, &cfg.spec, &params, &times, &diff)?.total();
        let e = series(&partition, &cfg.spec, &params, &times, &full)?.total();
        if !delta.is_finite() || !e.is_finite() {
            report.non_contraction = true;
            break;
        }
        let prev = *report.deltas.last().unwrap();
        let ratio = if delta == 0.0 { 0.0 } else { delta / prev };
        report.iterations += 1;
        report.deltas.push(delta);
        report.e_functionals.push(e);
        report.ratios.push(ratio);
        report.bound_m = report.bound_m.max(e);
        bar = next_bar;
        stages = next_stages;
        streak = if ratio >= 1.0 { streak + 1 } else { 0 };
        if streak >= 3 {
            report.non_contraction = true;
            break;
        }
        report.converged = delta < cfg.tol;
    }

    let snapshots: Vec<HallState> = free_ends
        .iter()
        .zip(&bar)
        .zip(&times)
        .map(|((a, b), &t)| Triple::comb(&[(1.0, a), (1.0, b)]).state(t, params))
        .collect();
    let status = if report.non_contraction && !report.deltas.last().unwrap().is_finite() {
        RunStatus::Diverged { t_last: 0.0, step: 0 }
    } else {
        RunStatus::Completed
    };
    let trajectory = Trajectory { snapshots, status, steps, max_projection: 0.0 };

    if cfg.compare_with_marcher {
        let mut ic = IntegratorConfig::new(h, cfg.t_end)?;
        ic.scheme = cfg.scheme;
        ic.dealias = cfg.dealias;
        let marched = evolve(&start, &ic)?;
        let mut worst: f64 = 0.0;
        for (a, b) in trajectory.snapshots.iter().zip(&marched.snapshots) {
            let d = Triple::of(a).sub(&Triple::of(b));
            let (level, _) = super::functional_terms(&partition, &cfg.spec, &params, [&d.0[0], &d.0[1], &d.0[2]])?;
            worst = worst.max(level);
        }
        report.marcher_difference = Some(if marched.diverged() { f64::INFINITY } else { worst });
    }
    Ok((trajectory, report))
}
