use serde::{Deserialize, Serialize};

use super::HallState;
use crate::field::SpectralField;
use crate::{Error, Result};

/// Total energy and dissipation rate at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    /// `½(‖u‖² + ‖b‖²)`
    pub energy: f64,
    /// `μ‖∇u‖² + ν‖∇b‖²`
    pub dissipation: f64,
}

fn gradient_sq(f: &SpectralField) -> f64 {
    f.map_radial(|k| k).l2_norm().powi(2)
}

pub fn energy_sample(s: &HallState) -> EnergySample {
    EnergySample {
        t: s.t,
        energy: 0.5 * (s.u.l2_norm().powi(2) + s.b.l2_norm().powi(2)),
        dissipation: s.params.mu * gradient_sq(&s.u) + s.params.nu * gradient_sq(&s.b),
    }
}

/// `max_i |dE/dt + D| / D` over interior samples, with `dE/dt` from central
/// differences. Samples with zero dissipation and zero energy change count as
/// exact.
pub fn energy_balance_residual(samples: &[EnergySample]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: samples.len() });
    }
    let mut worst: f64 = 0.0;
    for w in samples.windows(3) {
        let dt = w[2].t - w[0].t;
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter("energy samples must have increasing times".into()));
        }
        let de = (w[2].energy - w[0].energy) / dt;
        let num = (de + w[1].dissipation).abs();
        if num == 0.0 {
            continue;
        }
        worst = worst.max(num / w[1].dissipation);
    }
    Ok(worst)
}
