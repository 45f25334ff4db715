use super::{Check, ExperimentConfig, ExperimentReport, Series, Verdict};
use crate::integrate::{evolve_with, functional_terms, FunctionalSeries};
use crate::Result;

/// Evolves the configured data and checks that the running solution
/// functional stays below twice its initial value.
pub fn run_global_bound(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let state = cfg.initial_state()?;
    let partition = cfg.partition()?;
    let spec = cfg.spec(true)?;
    let params = state.params;
    let mut series = FunctionalSeries::default();
    let mut failure = None;
    let traj = evolve_with(&state, &cfg.integrator()?, |s| {
        match functional_terms(&partition, &spec, &params, [&s.u, &s.b, &s.j]) {
            Ok((level, smooth)) => series.push(s.t, level, smooth),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    let mut report = ExperimentReport::new("bound", Some(cfg));
    let running = series.running();
    let f0 = series.level[0];
    let peak = running.iter().copied().fold(0.0, f64::max);
    report.scalar("initial_level", f0);
    report.scalar("max_functional", peak);
    report.scalar("margin", 2.0 * f0 - peak);
    report.check(Check::at_most("functional_max", peak, 2.0 * f0));
    if traj.diverged() {
        report.check(Check::at_most("diverged", 1.0, 0.0));
        report.note(format!("run diverged: {:?}", traj.status));
    }
    if !cfg.nonlinear {
        // pure heat: the instantaneous critical norm cannot grow
        let growth = series.level.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        report.check(Check::at_most("level_growth_without_sources", growth, 1e-12 * f0.max(f64::MIN_POSITIVE)));
    }
    if report.verdict == Verdict::Fail && cfg.nonlinear {
        report.note("bound exceeded: the data may lie outside the smallness regime");
    }
    let mut f = Series::new("functional");
    let mut l = Series::new("critical_level");
    let mut d = Series::new("dissipative_rate");
    for (i, t) in series.times.iter().enumerate() {
        f.push(*t, running[i]);
        l.push(*t, series.level[i]);
        d.push(*t, series.smooth[i]);
    }
    report.series = vec![f, l, d];
    Ok(report)
}
