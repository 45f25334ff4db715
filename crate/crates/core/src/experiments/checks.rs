use serde::{Deserialize, Serialize};

use super::{log_bisect, Bound, Check, ExperimentConfig, ExperimentReport, Series};
use crate::dynamics::{energy_balance_residual, energy_sample, rhs_extended, with_diffusion, HallState};
use crate::field::{laplacian, rescale_field, Grid, ScalarField, SpectralField};
use crate::integrate::{evolve_with, picard_solve, IntegratorConfig, PicardConfig, PicardReport, Trajectory};
use crate::lp::{commutator_block_norm, product_law_ratio, DyadicPartition, Profile, ProductLaw};
use crate::random::{random_field, random_scalar, Spectrum};
use crate::{Error, Result};

/// Relative current defect above which a trajectory counts as inconsistent.
pub const CONSISTENCY_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// `max` over snapshots of `‖J − ∇×b‖/‖∇×b‖`.
    pub max_defect: f64,
    pub threshold: f64,
    pub defects: Series,
    /// The initial snapshot already violates `J = ∇×b`.
    pub inconsistent_initialization: bool,
    /// `b` and `J` vanish identically, so the defect is exactly zero.
    pub degenerate: bool,
}

impl ConsistencyReport {
    pub fn consistent(&self) -> bool {
        self.max_defect < self.threshold
    }
}

pub fn consistency_check(trajectory: &Trajectory) -> ConsistencyReport {
    let mut defects = Series::new("current_defect");
    for s in &trajectory.snapshots {
        defects.push(s.t, s.current_defect());
    }
    let degenerate = trajectory.snapshots.iter().all(|s| s.b.max_abs_coeff() == 0.0 && s.j.max_abs_coeff() == 0.0);
    let first = defects.values.first().copied().unwrap_or(0.0);
    ConsistencyReport {
        max_defect: defects.values.iter().copied().fold(0.0, f64::max),
        threshold: CONSISTENCY_THRESHOLD,
        inconsistent_initialization: first >= CONSISTENCY_THRESHOLD,
        degenerate,
        defects,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingCase {
    pub name: String,
    /// `‖rescale(rhs(s)) − rhs(rescale(s))‖_{L²}`
    pub absolute: f64,
    /// `absolute / ‖rhs(rescale(s))‖_{L²}`
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub lambda: usize,
    pub epsilon: f64,
    pub cases: Vec<ScalingCase>,
}

impl ScalingReport {
    pub fn case(&self, name: &str) -> Option<&ScalingCase> {
        self.cases.iter().find(|c| c.name == name)
    }
}

fn compare(name: &str, pairs: &[(SpectralField, SpectralField)]) -> ScalingCase {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in pairs {
        num += a.sub(b).expect("same grid").l2_norm().powi(2);
        den += b.l2_norm().powi(2);
    }
    let absolute = num.sqrt();
    ScalingCase { name: name.into(), absolute, relative: if absolute == 0.0 { 0.0 } else { absolute / den.sqrt() } }
}

/// Full right-hand side cut to twice the state support; beyond it only
/// transform rounding survives, which a dilation would move onto resolved modes.
fn full_rhs(s: &HallState) -> [SpectralField; 3] {
    let r = with_diffusion(s, &rhs_extended(s));
    let kc = 2.0 * s.u.support_radius().max(s.b.support_radius()) * s.grid().k0() * (1.0 + 1e-12);
    let cut = |f: SpectralField| f.map_radial(|k| if k <= kc { 1.0 } else { 0.0 });
    [cut(r.du), cut(r.db), cut(r.dj)]
}

/// Compares `rhs∘rescale` with `rescale∘rhs` under
/// `(u, b) ↦ (λu(λx), λb(λx))` (cases `heat`, `mhd` with `ε = 0`, and
/// `hall_mhd` with the state's `ε`) and under `b ↦ b(λx)` with `u = 0`
/// (case `hall_equation`, induction equation only).
pub fn scaling_equivariance_check(state: &HallState, lambda: usize) -> Result<ScalingReport> {
    let rs = |f: &SpectralField, p: i32| rescale_field(f, lambda, p);
    let mut cases = Vec::new();

    let heat_lhs = rs(&laplacian(&state.u), 3)?;
    let heat_rhs = laplacian(&rs(&state.u, 1)?);
    cases.push(compare("heat", &[(heat_lhs, heat_rhs)]));

    let dilate = |s: &HallState, pu: i32, pb: i32| -> Result<HallState> {
        Ok(HallState { u: rs(&s.u, pu)?, b: rs(&s.b, pb)?, j: rs(&s.j, pb + 1)?, t: s.t, params: s.params })
    };
    let mhd_case = |name: &str, s: &HallState| -> Result<ScalingCase> {
        let scaled = dilate(s, 1, 1)?;
        let a = full_rhs(s);
        let b = full_rhs(&scaled);
        let [au, ab, aj] = a;
        let [bu, bb, bj] = b;
        Ok(compare(name, &[(rs(&au, 3)?, bu), (rs(&ab, 3)?, bb), (rs(&aj, 4)?, bj)]))
    };
    let mut mhd = state.clone();
    mhd.params.epsilon = 0.0;
    cases.push(mhd_case("mhd", &mhd)?);
    cases.push(mhd_case("hall_mhd", state)?);

    let hall = HallState { u: SpectralField::zeros(*state.grid()), ..state.clone() };
    let scaled = dilate(&hall, 0, 0)?;
    let [_, ab, aj] = full_rhs(&hall);
    let [_, bb, bj] = full_rhs(&scaled);
    cases.push(compare("hall_equation", &[(rs(&ab, 2)?, bb), (rs(&aj, 3)?, bj)]));

    Ok(ScalingReport { lambda, epsilon: state.params.epsilon, cases })
}

/// Commutator ratios over seeds at two resolutions; the fine maximum may
/// exceed the coarse one by at most `growth_limit`.
pub fn commutator_ratio_study(
    grids: [Grid; 2],
    spectrum: &Spectrum,
    seeds: std::ops::Range<u64>,
    growth_limit: f64,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("commutator", None);
    let mut maxima = [0.0f64; 2];
    for (k, g) in grids.iter().enumerate() {
        let part = DyadicPartition::new(g, Profile::Quintic)?;
        let mut series = Series::new(format!("ratio_n{}", g.n()));
        for seed in seeds.clone() {
            let w = random_field(*g, spectrum, seed, true);
            let z = random_field(*g, spectrum, seed.wrapping_add(10_000), true);
            let r = commutator_block_norm(&part, &w, &z)?.ratio();
            series.push(seed as f64, r);
            maxima[k] = maxima[k].max(r);
        }
        report.series.push(series);
        report.scalar(format!("max_ratio_n{}", g.n()), maxima[k]);
    }
    report.check(Check::new("max_ratio_finite", maxima[1], Bound::AtMost { limit: f64::MAX }));
    report.check(Check::at_most("fine_over_coarse", maxima[1] / maxima[0], growth_limit));
    Ok(report)
}

/// Records the largest sampled ratio of each product estimate at each grid;
/// only finiteness is checked.
pub fn product_law_study(grids: &[Grid], laws: &[ProductLaw], spectrum: &Spectrum, seeds: std::ops::Range<u64>) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("product_laws", None);
    for (li, law) in laws.iter().enumerate() {
        for g in grids {
            let part = DyadicPartition::new(g, Profile::Quintic)?;
            let mut worst: f64 = 0.0;
            for seed in seeds.clone() {
                let a: ScalarField = random_scalar(*g, spectrum, seed);
                let b = random_scalar(*g, spectrum, seed.wrapping_add(20_000));
                worst = worst.max(product_law_ratio(&part, &a, &b, *law)?.ratio());
            }
            report.scalar(format!("law{li}_max_ratio_n{}", g.n()), worst);
            report.check(Check::new(format!("law{li}_finite_n{}", g.n()), worst, Bound::AtMost { limit: f64::MAX }));
        }
        report.note(format!("law{li}: {law:?}"));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyConvergence {
    pub dts: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `log2(r_i/r_{i+1})` for successive halvings.
    pub orders: Vec<f64>,
}

/// Energy-balance residual of runs with successively halved steps.
pub fn energy_convergence_study(state: &HallState, dt: f64, t_end: f64, levels: usize) -> Result<EnergyConvergence> {
    let mut dts = Vec::new();
    let mut residuals = Vec::new();
    for l in 0..levels {
        let h = dt / 2f64.powi(l as i32);
        let mut samples = Vec::new();
        let traj = evolve_with(state, &IntegratorConfig::new(h, t_end)?, |s| samples.push(energy_sample(s)))?;
        if traj.diverged() {
            return Err(Error::InvalidParameter(format!("run diverged at dt = {h}")));
        }
        dts.push(h);
        residuals.push(energy_balance_residual(&samples)?);
    }
    let orders = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(EnergyConvergence { dts, residuals, orders })
}

/// Picard run on the configured data rescaled to `amplitude`.
pub fn picard_at(cfg: &ExperimentConfig, amplitude: f64, n_max: usize, tol: f64, compare: bool) -> Result<PicardReport> {
    let mut c = cfg.clone();
    c.amplitude = amplitude;
    let s = c.initial_state()?;
    let mut pc = PicardConfig::new(c.dt, c.t_end, n_max, tol)?;
    pc.compare_with_marcher = compare;
    pc.spec = c.spec(true)?;
    Ok(picard_solve(&s.u, &s.b, &s.j, s.params, &pc)?.1)
}

/// Largest `δⁿ/δⁿ⁻¹` over `n ≥ 2` until `tol` or `n_max`; infinite when the
/// iteration stops contracting.
pub fn picard_worst_ratio(cfg: &ExperimentConfig, amplitude: f64, n_max: usize, tol: f64) -> Result<f64> {
    let r = picard_at(cfg, amplitude, n_max, tol, false)?;
    Ok(if r.non_contraction || !r.converged { f64::INFINITY } else { r.worst_ratio_from(2) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    /// Largest amplitude found with worst ratio below the target.
    pub threshold: f64,
    /// Smallest amplitude found at or above the target.
    pub upper: f64,
    pub target_ratio: f64,
    /// `(amplitude, worst ratio)` for every evaluation.
    pub evaluations: Vec<(f64, f64)>,
}

/// Amplitude at which the worst Picard contraction ratio crosses
/// `target_ratio`, by bracketing then geometric bisection.
pub fn locate_picard_threshold(
    cfg: &ExperimentConfig,
    target_ratio: f64,
    n_max: usize,
    tol: f64,
    iterations: usize,
) -> Result<ThresholdSearch> {
    let mut evaluations = Vec::new();
    let mut eval = |a: f64| -> Result<bool> {
        let w = picard_worst_ratio(cfg, a, n_max, tol)?;
        evaluations.push((a, w));
        Ok(w < target_ratio)
    };
    let mut lo = cfg.amplitude;
    let mut hi = cfg.amplitude;
    if eval(lo)? {
        loop {
            hi *= 2.0;
            if !eval(hi)? {
                break;
            }
            lo = hi;
            if hi > 1e6 {
                return Err(Error::InvalidParameter("no contraction breakdown below amplitude 1e6".into()));
            }
        }
    } else {
        loop {
            lo /= 2.0;
            if eval(lo)? {
                break;
            }
            hi = lo;
            if lo < 1e-12 {
                return Err(Error::InvalidParameter("contraction target not met above amplitude 1e-12".into()));
            }
        }
    }
    let (lo, hi) = log_bisect(lo, hi, iterations, &mut eval)?;
    Ok(ThresholdSearch { threshold: lo, upper: hi, target_ratio, evaluations })
}

/// Threshold search followed by a comparison run at half the threshold.
pub fn run_picard(cfg: &ExperimentConfig, n_max: usize, tol: f64, bisect: usize) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("picard", Some(cfg));
    let search = locate_picard_threshold(cfg, 0.5, n_max, tol, bisect)?;
    let amplitude = 0.5 * search.threshold;
    let r = picard_at(cfg, amplitude, n_max, tol, true)?;
    report.scalar("threshold", search.threshold);
    report.scalar("threshold_upper", search.upper);
    report.scalar("amplitude", amplitude);
    report.scalar("iterations", r.iterations as f64);
    report.scalar("bound_m", r.bound_m);
    let mut ladder = Series::new("worst_ratio_by_amplitude");
    let mut evals = search.evaluations.clone();
    evals.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (a, w) in evals {
        ladder.push(a, w);
    }
    let mut deltas = Series::new("delta");
    for (n, d) in r.deltas.iter().enumerate() {
        deltas.push(n as f64, *d);
    }
    let mut ratios = Series::new("ratio");
    for (n, q) in r.ratios.iter().enumerate() {
        ratios.push((n + 1) as f64, *q);
    }
    report.series = vec![ladder, deltas, ratios];
    report.check(Check::at_most("worst_ratio_from_2", r.worst_ratio_from(2), 0.5));
    report.check(Check::at_most("not_converged", if r.converged { 0.0 } else { 1.0 }, 0.0));
    report.check(Check::at_most("marcher_difference", r.marcher_difference.unwrap_or(f64::INFINITY), 1e-8));
    // uniform bound: every iterate stays within twice the free solution
    report.check(Check::at_most("bound_m", r.bound_m, 2.0 * r.e_functionals[0]));
    Ok(report)
}

/// Equivariance of the `ε = 0` parts and linear growth in `ε` of the Hall
/// residual over `epsilons` (ascending, positive).
pub fn run_scaling(cfg: &ExperimentConfig, epsilons: &[f64]) -> Result<ExperimentReport> {
    if epsilons.len() < 2 || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter("scaling needs at least two positive ε values".into()));
    }
    let mut report = ExperimentReport::new("scaling", Some(cfg));
    let base = cfg.initial_state()?;
    let mut exact: f64 = 0.0;
    let mut hall = Series::new("hall_residual");
    for &eps in epsilons {
        let mut s = base.clone();
        s.params.epsilon = eps;
        let r = scaling_equivariance_check(&s, 2)?;
        for c in &r.cases {
            if c.name != "hall_mhd" {
                exact = exact.max(c.relative);
            }
        }
        hall.push(eps, r.case("hall_mhd").map_or(f64::NAN, |c| c.absolute));
    }
    report.check(Check::at_most("equivariance_residual", exact, 1e-11));
    let slopes: Vec<f64> = hall.values.iter().zip(epsilons).map(|(r, e)| r / e).collect();
    let spread = slopes.iter().map(|s| (s / slopes[0] - 1.0).abs()).fold(0.0, f64::max);
    report.scalar("hall_residual_per_epsilon", slopes[0]);
    report.check(Check::at_most("hall_linearity_deviation", spread, 1e-6));
    report.check(Check::new("hall_residual_per_epsilon", slopes[0], Bound::AtLeast { limit: 1e-12 }));
    report.series.push(hall);
    Ok(report)
}

/// Evolves consistent data and checks `J = ∇×b` along the run.
pub fn run_consistency(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("consistency", Some(cfg));
    let s = cfg.initial_state()?;
    let traj = crate::integrate::evolve(&s, &cfg.integrator()?)?;
    let r = consistency_check(&traj);
    report.scalar("max_defect", r.max_defect);
    if traj.diverged() {
        report.check(Check::at_most("diverged", 1.0, 0.0));
    }
    report.check(Check::at_most("max_current_defect", r.max_defect, r.threshold));
    report.series.push(r.defects);
    Ok(report)
}
