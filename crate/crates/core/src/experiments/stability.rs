use serde::{Deserialize, Serialize};

use super::{Check, ExperimentConfig, ExperimentReport, Series, Verdict};
use crate::dynamics::{electron_velocity, HallState};
use crate::field::{curl, SpectralField};
use crate::integrate::{evolve, FunctionalSeries, IntegratorConfig};
use crate::lp::{shell_lp_norms, DyadicPartition};
use crate::{Error, Result};

/// Share of `μ` seen by the block energy estimate: `|k| ≥ 3/4·2^j` on shell `j`.
pub const EFFECTIVE_DIFFUSION: f64 = 9.0 / 16.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    /// `‖(δu₀, δb₀, δv₀)‖_{Ḃ^{1/2}_{2,1}}`.
    pub eta: f64,
    /// Frozen exponent constant; `None` calibrates it from this run.
    pub c_hat: Option<f64>,
    /// Seed offset of the perturbation relative to the reference seed.
    pub perturbation_seed: u64,
    /// Coefficient of the `X·D` term in the integral inequality.
    pub gronwall_c: f64,
    /// Multiplier applied to calibrated constants.
    pub safety: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { eta: 1e-3, c_hat: None, perturbation_seed: 7_777, gronwall_c: 1.0, safety: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GronwallOutcome {
    /// Hypotheses met and the conclusion holds at every time.
    Holds,
    HypothesisNotMet { reason: String },
    ConclusionViolated { t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub outcome: GronwallOutcome,
    /// `max_t` of integral-inequality LHS minus RHS; nonpositive when it holds.
    pub hypothesis_excess: f64,
    /// `2C·X(0)·exp(∫Ω̃)/μ`; must be below one.
    pub smallness_ratio: f64,
    /// `max_t` of conclusion LHS minus RHS; nonpositive when it holds.
    pub conclusion_excess: f64,
}

impl GronwallReport {
    pub fn holds(&self) -> bool {
        self.outcome == GronwallOutcome::Holds
    }
}

fn cumulative_trapezoid(t: &[f64], f: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for i in 1..t.len() {
        out[i] = out[i - 1] + 0.5 * (f(i) + f(i - 1)) * (t[i] - t[i - 1]);
    }
    out
}

/// Slack for comparisons of accumulated floating-point sums.
const ROUNDING: f64 = 1e-12;

/// Checks the integral inequality
/// `X(t) + μ∫D ≤ X(0) + ∫(Ω̃X + C·X·D)`, then smallness
/// `2C·X(0)·exp(∫Ω̃) < μ`, and only then the conclusion
/// `X(t) + μ/2·∫D ≤ X(0)·exp(∫Ω̃)` at every sample.
pub fn gronwall_check(t: &[f64], x: &[f64], d: &[f64], omega: &[f64], c: f64, mu: f64) -> Result<GronwallReport> {
    let n = t.len();
    for s in [x, d, omega] {
        if s.len() != n {
            return Err(Error::ShapeMismatch { expected: n, got: s.len() });
        }
    }
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("times must increase".into()));
    }
    if x.iter().chain(d).chain(omega).any(|v| !(*v >= 0.0)) || !(c >= 0.0) || !(mu > 0.0) {
        return Err(Error::InvalidParameter("series and constants must be nonnegative, μ positive".into()));
    }
    let int_d = cumulative_trapezoid(t, |i| d[i]);
    let int_src = cumulative_trapezoid(t, |i| omega[i] * x[i] + c * x[i] * d[i]);
    let int_om = cumulative_trapezoid(t, |i| omega[i]);
    let scale = |v: f64| ROUNDING * (v.abs() + x[0]);
    let mut hypothesis_excess = f64::NEG_INFINITY;
    let mut first_bad = None;
    for i in 0..n {
        let lhs = x[i] + mu * int_d[i];
        let rhs = x[0] + int_src[i];
        hypothesis_excess = hypothesis_excess.max(lhs - rhs);
        if lhs - rhs > scale(rhs) && first_bad.is_none() {
            first_bad = Some(t[i]);
        }
    }
    let smallness_ratio = 2.0 * c * x[0] * int_om[n - 1].exp() / mu;
    let mut report = GronwallReport {
        outcome: GronwallOutcome::Holds,
        hypothesis_excess,
        smallness_ratio,
        conclusion_excess: f64::NAN,
    };
    if let Some(tb) = first_bad {
        report.outcome = GronwallOutcome::HypothesisNotMet { reason: format!("integral inequality fails at t = {tb}") };
        return Ok(report);
    }
    if !(smallness_ratio < 1.0) {
        report.outcome = GronwallOutcome::HypothesisNotMet { reason: format!("smallness ratio {smallness_ratio} ≥ 1") };
        return Ok(report);
    }
    let mut excess = f64::NEG_INFINITY;
    for i in 0..n {
        let lhs = x[i] + 0.5 * mu * int_d[i];
        let rhs = x[0] * int_om[i].exp();
        excess = excess.max(lhs - rhs);
        if lhs - rhs > scale(rhs) && report.outcome == GronwallOutcome::Holds {
            report.outcome = GronwallOutcome::ConclusionViolated { t: t[i] };
        }
    }
    report.conclusion_excess = excess;
    Ok(report)
}

/// Smallest `C_Ω ≥ 0` for which the integral inequality holds with
/// `Ω̃ = C_Ω·omega0`; infinite when no value works.
pub fn calibrate_omega(t: &[f64], x: &[f64], d: &[f64], omega0: &[f64], c: f64, mu: f64) -> f64 {
    let int_d = cumulative_trapezoid(t, |i| d[i]);
    let int_xd = cumulative_trapezoid(t, |i| x[i] * d[i]);
    let int_ox = cumulative_trapezoid(t, |i| omega0[i] * x[i]);
    let mut need: f64 = 0.0;
    for i in 0..t.len() {
        let r = x[i] + mu * int_d[i] - x[0] - c * int_xd[i];
        if r <= ROUNDING * (x[i] + x[0]) {
            continue;
        }
        if int_ox[i] > 0.0 {
            need = need.max(r / int_ox[i]);
        } else {
            return f64::INFINITY;
        }
    }
    need
}

/// `2^{js}`-weighted `ℓ¹` sums at `s = 1/2, 3/2, 5/2` for `p = 2`.
fn norms3(partition: &DyadicPartition, f: &SpectralField) -> Result<[f64; 3]> {
    let n = shell_lp_norms(partition, f, 2.0)?;
    Ok([n.besov(0.5, 1.0), n.besov(1.5, 1.0), n.besov(2.5, 1.0)])
}

fn perturbation(cfg: &ExperimentConfig, state: &HallState, opts: &StabilityOptions, partition: &DyadicPartition) -> Result<HallState> {
    let mut pc = cfg.clone();
    pc.seed = cfg.seed.wrapping_add(opts.perturbation_seed);
    let (du, db) = pc.raw_data()?;
    let dv = du.sub(&curl(&db).scale(cfg.epsilon))?;
    let size = norms3(partition, &du)?[0] + norms3(partition, &db)?[0] + norms3(partition, &dv)?[0];
    if opts.eta == 0.0 || size == 0.0 {
        return Ok(state.clone());
    }
    let k = opts.eta / size;
    let mut u = state.u.add_scaled(k, &du)?;
    let mut b = state.b.add_scaled(k, &db)?;
    u.remove_mean();
    b.remove_mean();
    HallState::from_data(crate::field::leray_project(&u), crate::field::leray_project(&b), state.params)
}

/// Reference run against a perturbed run differing by `η`: checks the
/// difference functional against `η·exp(Ĉ·R)` with `R` the reference
/// functional, and feeds the measured series to [`gronwall_check`].
pub fn run_stability(cfg: &ExperimentConfig, opts: &StabilityOptions) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("stability", Some(cfg));
    if cfg.mu != cfg.nu || cfg.p != 2.0 || cfg.q != 2.0 {
        report.verdict = Verdict::HypothesisNotMet;
        report.note("stability requires μ = ν and p = q = 2");
        return Ok(report);
    }
    if !(opts.eta >= 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be nonnegative, got {}", opts.eta)));
    }
    let partition = cfg.partition()?;
    let reference = cfg.initial_state()?;
    let perturbed = perturbation(cfg, &reference, opts, &partition)?;
    let ic = cfg.integrator()?;
    let steps = ic.steps();
    let one = IntegratorConfig { snapshot_stride: 1, ..ic };

    let mut diff = FunctionalSeries::default();
    let mut refr = FunctionalSeries::default();
    let (mut times, mut xs, mut ds, mut om0) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut a = reference;
    let mut b = perturbed;
    let mut diverged = None;
    for step in 0..=steps {
        let va = electron_velocity(&a);
        let vb = electron_velocity(&b);
        let [u1, u3, u5] = norms3(&partition, &a.u)?;
        let [b1, b3, b5] = norms3(&partition, &a.b)?;
        let [j1, _, j5] = norms3(&partition, &a.j)?;
        let [_, v3, v5] = norms3(&partition, &va)?;
        refr.push(a.t, u1 + b1 + j1, u5 + b5 + j5);
        let du = a.u.sub(&b.u)?;
        let db = a.b.sub(&b.b)?;
        let dj = a.j.sub(&b.j)?;
        let dv = va.sub(&vb)?;
        let [du1, _, du5] = norms3(&partition, &du)?;
        let [db1, _, db5] = norms3(&partition, &db)?;
        let [dj1, _, dj5] = norms3(&partition, &dj)?;
        let [dv1, _, dv5] = norms3(&partition, &dv)?;
        diff.push(a.t, du1 + db1 + dj1, du5 + db5 + dj5);
        times.push(a.t);
        xs.push(du1 + db1 + dv1);
        ds.push(du5 + db5 + dv5);
        om0.push((u3 + b3 + v3).powi(2) + v5);
        if step == steps {
            break;
        }
        let h = if step + 1 == steps { cfg.t_end - a.t } else { cfg.dt };
        let cfg_h = IntegratorConfig { dt: h, t_end: h, ..one };
        let ta = evolve(&a, &cfg_h)?;
        let tb = evolve(&b, &cfg_h)?;
        if ta.diverged() || tb.diverged() {
            diverged = Some((ta.diverged(), tb.diverged(), a.t));
            break;
        }
        a = ta.last().clone();
        b = tb.last().clone();
    }

    let d_total = diff.total();
    let r_total = refr.total();
    report.scalar("eta", opts.eta);
    report.scalar("difference_functional", d_total);
    report.scalar("reference_functional", r_total);
    if let Some((ra, rb, t)) = diverged {
        report.check(Check::at_most("diverged", 1.0, 0.0));
        report.note(format!("divergence at t = {t} (reference: {ra}, perturbed: {rb})"));
    }
    match opts.c_hat {
        None => {
            let c_hat = if opts.eta > 0.0 && d_total > 0.0 && r_total > 0.0 {
                opts.safety * (d_total / opts.eta).ln().max(0.0) / r_total
            } else {
                0.0
            };
            report.scalar("c_hat", c_hat);
            report.note("pilot run: exponent constant calibrated");
        }
        Some(c_hat) => {
            report.scalar("c_hat", c_hat);
            report.check(Check::at_most("difference_over_bound", d_total, opts.eta * (c_hat * r_total).exp()));
        }
    }

    let mu_eff = EFFECTIVE_DIFFUSION * cfg.mu;
    let c_omega = opts.safety * calibrate_omega(&times, &xs, &ds, &om0, opts.gronwall_c, mu_eff);
    report.scalar("c_omega", c_omega);
    let omega: Vec<f64> = om0.iter().map(|o| c_omega * o).collect();
    if c_omega.is_finite() && opts.eta > 0.0 {
        let g = gronwall_check(&times, &xs, &ds, &omega, opts.gronwall_c, mu_eff)?;
        report.scalar("gronwall_smallness_ratio", g.smallness_ratio);
        report.scalar("gronwall_conclusion_excess", g.conclusion_excess);
        match &g.outcome {
            GronwallOutcome::Holds => {}
            GronwallOutcome::HypothesisNotMet { reason } => {
                report.note(format!("gronwall hypothesis not met: {reason}"));
                if report.verdict == Verdict::Pass {
                    report.verdict = Verdict::HypothesisNotMet;
                }
            }
            GronwallOutcome::ConclusionViolated { t } => {
                report.check(Check::at_most("gronwall_conclusion_violated_at", *t, f64::NEG_INFINITY));
            }
        }
    } else if opts.eta > 0.0 {
        report.note("no finite Ω̃ constant satisfies the integral inequality");
        report.verdict = Verdict::HypothesisNotMet;
    }

    let mut sx = Series::new("gronwall_x");
    let mut sd = Series::new("gronwall_d");
    let mut so = Series::new("gronwall_omega");
    let mut sf = Series::new("difference_level");
    for i in 0..times.len() {
        sx.push(times[i], xs[i]);
        sd.push(times[i], ds[i]);
        so.push(times[i], omega[i]);
        sf.push(times[i], diff.level[i]);
    }
    report.series = vec![sx, sd, so, sf];
    Ok(report)
}
