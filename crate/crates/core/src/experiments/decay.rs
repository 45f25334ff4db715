use serde::{Deserialize, Serialize};

use super::{fit_power_law, Bound, Check, ExperimentConfig, ExperimentReport, Series, Verdict};
use crate::dynamics::HallState;
use crate::field::{multi_indices, partial, SpectralField};
use crate::integrate::{evolve_with, IntegratorConfig};
use crate::lp::{shell_lp_norms, DyadicPartition, ShellNorms};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    /// Derivative orders `m` to monitor in one run.
    pub orders: Vec<u32>,
    /// Steps per time segment. The first segment is `[0, steps·dt]`, each
    /// later one doubles the elapsed time with a step of `elapsed/steps`.
    pub segment_steps: usize,
    /// Slope tolerance around `−m/2`.
    pub slope_tolerance: f64,
    /// Largest accepted `sup τ^{m/2}X(τ)` over the window relative to its value
    /// at the window start.
    pub w_ratio_limit: f64,
    /// Minimum window length in decades of `t`.
    pub min_decades: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self { orders: vec![1, 2], segment_steps: 32, slope_tolerance: 0.25, w_ratio_limit: 2.0, min_decades: 0.5 }
    }
}

/// `max_{|α|=m} ‖∂^α f‖` at critical regularity, with the shell norms of the
/// maximizing derivative.
fn derivative_norm(partition: &DyadicPartition, f: &SpectralField, m: u32, p: f64, s: f64) -> Result<(f64, ShellNorms)> {
    let mut best: Option<(f64, ShellNorms)> = None;
    for alpha in multi_indices(m) {
        let norms = shell_lp_norms(partition, &partial(f, alpha), p)?;
        let v = norms.besov(s, 1.0);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, norms));
        }
    }
    Ok(best.expect("at least one multi-index"))
}

/// `Σ 2^j w_j / Σ w_j` over the shell contributions.
fn centroid(parts: &[(&ShellNorms, f64)]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (norms, s) in parts {
        for c in norms.contributions(*s) {
            num += 2f64.powi(c.j) * c.contribution;
            den += c.contribution;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

struct Sample {
    t: f64,
    value: f64,
    centroid: f64,
}

/// Decay of `‖D^m u‖_{Ḃ^{3/p−1}_{p,1}} + ‖D^m b‖_{Ḃ^{3/q−1}_{q,1}}`. The fit
/// window opens once the centroid of the monitored spectrum has halved and
/// closes when it drops below twice the box wavenumber.
pub fn run_decay(cfg: &ExperimentConfig, options: &DecayOptions) -> Result<ExperimentReport> {
    let state = cfg.initial_state()?;
    let partition = cfg.partition()?;
    let grid = *state.grid();
    let (su, sb) = (3.0 / cfg.p - 1.0, 3.0 / cfg.q - 1.0);
    let mut samples: Vec<Vec<Sample>> = options.orders.iter().map(|_| Vec::new()).collect();
    let mut failure = None;
    let mut last_t = f64::NEG_INFINITY;
    let mut observe = |s: &HallState| {
        if s.t <= last_t {
            return;
        }
        last_t = s.t;
        for (k, &m) in options.orders.iter().enumerate() {
            let r = derivative_norm(&partition, &s.u, m, cfg.p, su)
                .and_then(|a| Ok((a, derivative_norm(&partition, &s.b, m, cfg.q, sb)?)));
            match r {
                Ok(((vu, nu_), (vb, nb))) => samples[k].push(Sample {
                    t: s.t,
                    value: vu + vb,
                    centroid: centroid(&[(&nu_, su), (&nb, sb)]),
                }),
                Err(e) => failure = Some(e),
            }
        }
    };

    let mut report = ExperimentReport::new("decay", Some(cfg));
    let base = cfg.integrator()?;
    let steps = options.segment_steps.max(1);
    let mut current = state;
    let mut seg_len = steps as f64 * cfg.dt;
    let mut dt = cfg.dt;
    let mut segments = 0;
    while current.t < cfg.t_end * (1.0 - 1e-12) {
        let len = seg_len.min(cfg.t_end - current.t);
        let ic = IntegratorConfig { dt, t_end: len, snapshot_stride: steps, ..base };
        ic.validate()?;
        let traj = evolve_with(&current, &ic, &mut observe)?;
        segments += 1;
        if traj.diverged() {
            report.check(Check::at_most("diverged", 1.0, 0.0));
            report.note(format!("run diverged: {:?}", traj.status));
            break;
        }
        current = traj.last().clone();
        seg_len = current.t;
        dt = seg_len / steps as f64;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    report.scalar("segments", segments as f64);
    let k_min = grid.k0();

    let mut verdicts = Vec::new();
    for (k, &m) in options.orders.iter().enumerate() {
        let smp = &samples[k];
        let mut value = Series::new(format!("dm_norm_m{m}"));
        let mut cen = Series::new(format!("centroid_m{m}"));
        for s in smp {
            value.push(s.t, s.value);
            cen.push(s.t, s.centroid);
        }
        report.series.push(value);
        report.series.push(cen);
        if m == 0 {
            let x0 = smp[0].value;
            let peak = smp.iter().map(|s| s.value).fold(0.0, f64::max);
            report.note("m = 0 carries no decay claim; only boundedness is checked");
            report.check(Check::at_most("m0_sup_over_initial", peak, 2.0 * x0));
            continue;
        }
        let c0 = smp[0].centroid;
        let start = smp.iter().position(|s| s.t > 0.0 && s.centroid <= 0.5 * c0);
        let end = smp.iter().position(|s| s.centroid < 2.0 * k_min).unwrap_or(smp.len());
        let window: &[Sample] = match start {
            Some(a) if end > a + 2 => &smp[a..end],
            _ => &[],
        };
        if window.is_empty() {
            report.note(format!("m = {m}: no admissible fit window"));
            verdicts.push(Verdict::Inconclusive);
            continue;
        }
        let (t0, t1) = (window[0].t, window[window.len() - 1].t);
        let decades = (t1 / t0).log10();
        report.scalar(format!("window_start_m{m}"), t0);
        report.scalar(format!("window_end_m{m}"), t1);
        report.scalar(format!("window_decades_m{m}"), decades);
        let times: Vec<f64> = window.iter().map(|s| s.t).collect();
        let values: Vec<f64> = window.iter().map(|s| s.value).collect();
        let fit = fit_power_law(&format!("dm_norm_m{m}"), &times, &values)?;
        let target = -(m as f64) / 2.0;
        let half = m as f64 / 2.0;
        let w0 = t0.powf(half) * window[0].value;
        let w_peak = window.iter().map(|s| s.t.powf(half) * s.value).fold(0.0, f64::max);
        let mut w = Series::new(format!("w_m{m}"));
        let mut sup: f64 = 0.0;
        for s in smp {
            sup = sup.max(s.t.powf(half) * s.value);
            w.push(s.t, sup);
        }
        report.series.push(w);
        report.scalar(format!("w_ratio_m{m}"), w_peak / w0);
        if decades < options.min_decades {
            report.note(format!("m = {m}: window spans {decades:.3} decades, below {}", options.min_decades));
            report.fits.push(fit);
            verdicts.push(Verdict::Inconclusive);
            continue;
        }
        let tol = options.slope_tolerance;
        report.check(Check::new(format!("slope_m{m}"), fit.slope, Bound::Within { lo: target - tol, hi: target + tol }));
        report.check(Check::at_most(format!("w_ratio_m{m}"), w_peak / w0, options.w_ratio_limit));
        report.fits.push(fit);
    }
    verdicts.push(report.verdict);
    report.verdict = ExperimentReport::combine(verdicts);
    Ok(report)
}
