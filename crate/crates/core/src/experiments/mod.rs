//! Numerical experiments: global bound, decay, stability, scaling and the
//! supporting checks, each producing an [`ExperimentReport`].

mod bound;
mod checks;
mod decay;
mod fit;
mod stability;

pub use bound::run_global_bound;
pub use checks::{
    commutator_ratio_study, consistency_check, energy_convergence_study, locate_picard_threshold, picard_at, picard_worst_ratio,
    product_law_study, run_consistency, run_picard, run_scaling, scaling_equivariance_check, ConsistencyReport, EnergyConvergence, ScalingCase, ScalingReport,
    ThresholdSearch,
};
pub use decay::{run_decay, DecayOptions};
pub use fit::{fit_power_law, SlopeFit};
pub use stability::{gronwall_check, run_stability, GronwallOutcome, GronwallReport, StabilityOptions};

use serde::{Deserialize, Serialize};

use crate::dynamics::{HallParams, HallState};
use crate::field::{curl, Grid, SpectralField};
use crate::integrate::{functional_terms, FunctionalSpec, IntegratorConfig, Scheme};
use crate::lp::{DyadicPartition, Profile};
use crate::random::{random_field, taylor_green, Spectrum};
use crate::{Error, Result};

/// Initial-data family. Amplitudes are fixed afterwards by normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataFamily {
    Zero,
    /// Divergence-free random data with the given radial spectrum.
    Random { spectrum: Spectrum },
    /// Taylor–Green-like velocity; `b` is a rotated copy.
    TaylorGreen { mode: usize },
    /// Random data on the plateau of one shell.
    SingleShell { j: i32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub length: f64,
    pub mu: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub family: DataFamily,
    /// Target of `‖u₀‖_{Ḃ^{3/p−1}_{p,1}} + ‖b₀‖_{Ḃ^{3/q−1}_{q,1}} + ‖∇×b₀‖_{Ḃ^{3/q−1}_{q,1}}`.
    pub amplitude: f64,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub profile: Profile,
    /// With `false` only the heat flow acts.
    pub nonlinear: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 32,
            length: std::f64::consts::TAU,
            mu: 1.0,
            nu: 1.0,
            epsilon: 0.5,
            family: DataFamily::Random { spectrum: Spectrum::band(4.0) },
            amplitude: 0.1,
            p: 2.0,
            q: 2.0,
            seed: 1,
            dt: 0.02,
            t_end: 1.0,
            scheme: Scheme::IfRk4,
            profile: Profile::Quintic,
            nonlinear: true,
        }
    }
}

/// Which hypotheses on `(p, q)` the pair satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    /// `1 ≤ p ≤ q < ∞` and `−min{1/3, 1/(2p)} ≤ 1/q − 1/p`.
    pub global: bool,
    /// The above plus `−1/3 < 1/q − 1/p`.
    pub decay: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        Grid::new(self.n, self.length)?;
        HallParams::new(self.mu, self.nu, self.epsilon)?;
        IntegratorConfig::new(self.dt, self.t_end)?;
        FunctionalSpec::new(self.p, self.q, true)?;
        if !(self.amplitude > 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!("amplitude must be positive, got {}", self.amplitude)));
        }
        Ok(())
    }

    pub fn admissibility(&self) -> Admissibility {
        let (p, q) = (self.p, self.q);
        let gap = 1.0 / q - 1.0 / p;
        let global = p >= 1.0 && p <= q && q.is_finite() && -(1.0f64 / 3.0).min(0.5 / p) <= gap;
        Admissibility { global, decay: global && gap > -1.0 / 3.0 }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n, self.length)
    }

    pub fn params(&self) -> Result<HallParams> {
        HallParams::new(self.mu, self.nu, self.epsilon)
    }

    pub fn partition(&self) -> Result<DyadicPartition> {
        DyadicPartition::new(&self.grid()?, self.profile)
    }

    pub fn spec(&self, weighted: bool) -> Result<FunctionalSpec> {
        FunctionalSpec::new(self.p, self.q, weighted)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        let mut c = IntegratorConfig::new(self.dt, self.t_end)?;
        c.scheme = self.scheme;
        c.nonlinear = self.nonlinear;
        Ok(c)
    }

    /// Unnormalized `(u₀, b₀)` of the configured family.
    pub fn raw_data(&self) -> Result<(SpectralField, SpectralField)> {
        let g = self.grid()?;
        Ok(match &self.family {
            DataFamily::Zero => (SpectralField::zeros(g), SpectralField::zeros(g)),
            DataFamily::Random { spectrum } => (
                random_field(g, spectrum, self.seed, true),
                random_field(g, spectrum, self.seed.wrapping_add(0x9e37_79b9), true),
            ),
            DataFamily::SingleShell { j } => {
                let s = Spectrum::Shell { j: *j };
                (random_field(g, &s, self.seed, true), random_field(g, &s, self.seed.wrapping_add(0x9e37_79b9), true))
            }
            DataFamily::TaylorGreen { mode } => {
                let u = taylor_green(g, *mode, 1.0);
                // (u_y, u_z, u_x) stays divergence-free
                let c = u.components();
                let b = SpectralField::from_components(g, [c[1].clone(), c[2].clone(), c[0].clone()])?;
                (u, b)
            }
        })
    }

    /// Data normalized so that the critical combination equals `amplitude`.
    pub fn initial_state(&self) -> Result<HallState> {
        self.validate()?;
        let (u, b) = self.raw_data()?;
        let params = self.params()?;
        let level = critical_level(&self.partition()?, &self.spec(true)?, &params, &u, &b)?;
        let scale = if level > 0.0 { self.amplitude / level } else { 0.0 };
        let (mut u, mut b) = (u.scale(scale), b.scale(scale));
        u.remove_mean();
        b.remove_mean();
        HallState::from_data(u, b, params)
    }
}

/// `‖u‖_{Ḃ^{3/p−1}_{p,1}} + ‖b‖_{Ḃ^{3/q−1}_{q,1}} + ‖∇×b‖_{Ḃ^{3/q−1}_{q,1}}`.
pub fn critical_level(
    partition: &DyadicPartition,
    spec: &FunctionalSpec,
    params: &HallParams,
    u: &SpectralField,
    b: &SpectralField,
) -> Result<f64> {
    Ok(functional_terms(partition, spec, params, [u, b, &curl(b)])?.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Not enough signal to decide; not a failure.
    Inconclusive,
    /// A precondition of the claim is violated; the claim is not tested.
    HypothesisNotMet,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bound {
    AtMost { limit: f64 },
    AtLeast { limit: f64 },
    Within { lo: f64, hi: f64 },
}

impl Bound {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost { limit } => v <= limit,
            Bound::AtLeast { limit } => v >= limit,
            Bound::Within { lo, hi } => v >= lo && v <= hi,
        }
    }
}

/// A measured value against a declared tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, bound: Bound) -> Self {
        Self { name: name.into(), value, passed: bound.holds(value), bound }
    }

    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, Bound::AtMost { limit })
    }
}

/// A named time series.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn push(&mut self, t: f64, v: f64) {
        self.times.push(t);
        self.values.push(v);
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: Option<ExperimentConfig>,
    pub admissibility: Option<Admissibility>,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub series: Vec<Series>,
    pub fits: Vec<SlopeFit>,
    /// Named scalar outcomes (margins, calibrated constants, thresholds).
    pub scalars: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, config: Option<&ExperimentConfig>) -> Self {
        Self {
            experiment: experiment.into(),
            admissibility: config.map(|c| c.admissibility()),
            config: config.cloned(),
            verdict: Verdict::Pass,
            checks: Vec::new(),
            series: Vec::new(),
            fits: Vec::new(),
            scalars: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn check(&mut self, c: Check) {
        if !c.passed && self.verdict == Verdict::Pass {
            self.verdict = Verdict::Fail;
        }
        self.checks.push(c);
    }

    pub fn scalar(&mut self, name: impl Into<String>, v: f64) {
        self.scalars.push((name.into(), v));
    }

    pub fn scalar_value(&self, name: &str) -> Option<f64> {
        self.scalars.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Worst of several verdicts, ordered fail, unmet hypothesis,
    /// inconclusive, pass.
    pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in verdicts {
            out = match (out, v) {
                (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
                (Verdict::HypothesisNotMet, _) | (_, Verdict::HypothesisNotMet) => Verdict::HypothesisNotMet,
                (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
                _ => Verdict::Pass,
            };
        }
        out
    }
}

/// Geometric bisection for the crossing of a monotone predicate: `below(lo)`
/// holds and `below(hi)` does not. Returns the final bracket.
pub fn log_bisect(mut lo: f64, mut hi: f64, iterations: usize, mut below: impl FnMut(f64) -> Result<bool>) -> Result<(f64, f64)> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("invalid bracket [{lo}, {hi}]")));
    }
    for _ in 0..iterations {
        let mid = (lo * hi).sqrt();
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}
