use serde::{Deserialize, Serialize};

use crate::dynamics::HallParams;
use crate::field::SpectralField;
use crate::lp::{shell_lp_norms, DyadicPartition};
use crate::{Error, Result};

/// Norms of the solution functional: `u` in `Ḃ^{3/p−1}_{p,1}`, `b` and `J` in
/// `Ḃ^{3/q−1}_{q,1}`, integrated parts two derivatives higher.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSpec {
    pub p: f64,
    pub q: f64,
    /// Weight the integrated parts by `μ` and `ν`.
    pub weighted: bool,
}

impl FunctionalSpec {
    pub fn new(p: f64, q: f64, weighted: bool) -> Result<Self> {
        for e in [p, q] {
            if !(e >= 1.0) {
                return Err(Error::InvalidExponent(e));
            }
        }
        Ok(Self { p, q, weighted })
    }

    pub fn critical_u(&self) -> f64 {
        3.0 / self.p - 1.0
    }

    pub fn critical_b(&self) -> f64 {
        3.0 / self.q - 1.0
    }
}

/// `(level, smooth)` at one instant: `level = ‖u‖ + ‖b‖ + ‖J‖` at critical
/// regularity, `smooth` the same two derivatives higher, weighted if asked.
pub fn functional_terms(
    partition: &DyadicPartition,
    spec: &FunctionalSpec,
    params: &HallParams,
    fields: [&SpectralField; 3],
) -> Result<(f64, f64)> {
    let (su, sb) = (spec.critical_u(), spec.critical_b());
    let nu_ = shell_lp_norms(partition, fields[0], spec.p)?;
    let nb = shell_lp_norms(partition, fields[1], spec.q)?;
    let nj = shell_lp_norms(partition, fields[2], spec.q)?;
    let level = nu_.besov(su, 1.0) + nb.besov(sb, 1.0) + nj.besov(sb, 1.0);
    let (wu, wb) = if spec.weighted { (params.mu, params.nu) } else { (1.0, 1.0) };
    let smooth = wu * nu_.besov(su + 2.0, 1.0) + wb * (nb.besov(sb + 2.0, 1.0) + nj.besov(sb + 2.0, 1.0));
    Ok((level, smooth))
}

/// Sampled functional `F(t) = sup_{τ≤t} level(τ) + ∫₀ᵗ smooth`, with the
/// integral by the trapezoidal rule over the samples.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSeries {
    pub times: Vec<f64>,
    pub level: Vec<f64>,
    pub smooth: Vec<f64>,
}

impl FunctionalSeries {
    pub fn push(&mut self, t: f64, level: f64, smooth: f64) {
        self.times.push(t);
        self.level.push(level);
        self.smooth.push(smooth);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `F(t_i)` for every sample.
    pub fn running(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut sup: f64 = 0.0;
        let mut integral = 0.0;
        for i in 0..self.len() {
            sup = sup.max(self.level[i]);
            if i > 0 {
                integral += 0.5 * (self.smooth[i] + self.smooth[i - 1]) * (self.times[i] - self.times[i - 1]);
            }
            out.push(sup + integral);
        }
        out
    }

    /// `F` over the whole window.
    pub fn total(&self) -> f64 {
        self.running().last().copied().unwrap_or(0.0)
    }

    pub fn sup_level(&self) -> f64 {
        self.level.iter().copied().fold(0.0, f64::max)
    }
}
