use serde::{Deserialize, Serialize};

use crate::field::{cross, multi_indices, partial, ScalarField, SpectralField};
use crate::{Complex64, Error, Result};

use super::{bony::dealiased_product, shell_lp_norms, DyadicPartition, ShellNorms};

/// `max_{|α|=k} ‖∂^α Δ_j u‖_{L^q} / (2^{j(k + 3(1/p − 1/q))}‖Δ_j u‖_{L^p})`.
///
/// The field is first projected onto shell `j`; a field with an empty block
/// yields `NaN`.
pub fn bernstein_ratio(
    partition: &DyadicPartition,
    u: &SpectralField,
    j: i32,
    k: u32,
    p: f64,
    q: f64,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if !(q >= p) {
        return Err(Error::ExponentOrder { p, q });
    }
    let block = partition.shell_project(u, j)?;
    let base = block.lp_norm(p)?;
    let mut top: f64 = 0.0;
    for alpha in multi_indices(k) {
        top = top.max(partial(&block, alpha).lp_norm(q)?);
    }
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    let lambda = 2f64.powi(j);
    Ok(top / (lambda.powf(k as f64 + 3.0 * (inv(p) - inv(q))) * base))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorNorm {
    /// `Σ_j 2^{3j/2}‖Δ_j(w×z) − w×Δ_j z‖_{L²}`
    pub lhs: f64,
    /// `‖∇w‖_{Ḃ^{3/2}_{2,1}}·‖z‖_{Ḃ^{1/2}_{2,1}}`
    pub rhs: f64,
}

impl CommutatorNorm {
    /// `lhs/rhs`, zero when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

/// Block norm of the commutator `[Δ_j, w×]z` with dealiased products.
pub fn commutator_block_norm(partition: &DyadicPartition, w: &SpectralField, z: &SpectralField) -> Result<CommutatorNorm> {
    if w.grid() != z.grid() || w.grid() != partition.grid() {
        return Err(Error::GridMismatch);
    }
    let wz = cross(w, z)?;
    let mut lhs = 0.0;
    for j in partition.shells() {
        let a = partition.shell_project(&wz, j)?;
        let b = cross(w, &partition.shell_project(z, j)?)?;
        lhs += 2f64.powf(1.5 * j as f64) * a.sub(&b)?.l2_norm();
    }
    let grad_w = w.map_radial(|k| k);
    let rhs = shell_lp_norms(partition, &grad_w, 2.0)?.besov(1.5, 1.0) * shell_lp_norms(partition, z, 2.0)?.besov(0.5, 1.0);
    Ok(CommutatorNorm { lhs, rhs })
}

/// Both sides of `‖u‖_{Ḃ^{θs+(1−θ)s̃}_{p,1}} ≤ ‖u‖^θ_{Ḃ^s_{p,1}}‖u‖^{1−θ}_{Ḃ^{s̃}_{p,1}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSample {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn interpolation_sides(norms: &ShellNorms, s: f64, s_tilde: f64, theta: f64) -> Result<InterpolationSample> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("θ must lie in (0, 1), got {theta}")));
    }
    if !(s < s_tilde) {
        return Err(Error::InvalidParameter(format!("need s < s̃, got {s} and {s_tilde}")));
    }
    let mid = theta * s + (1.0 - theta) * s_tilde;
    Ok(InterpolationSample {
        lhs: norms.besov(mid, 1.0),
        rhs: norms.besov(s, 1.0).powf(theta) * norms.besov(s_tilde, 1.0).powf(1.0 - theta),
    })
}

/// Product estimates whose ratio LHS/RHS is sampled over random fields. The
/// constants are unknown, so only the boundedness of the sampled ratio across
/// seeds and resolutions is meaningful.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProductLaw {
    /// `‖ab‖_{Ḃ^{s1+s2−3/p}_{q,1}} ≲ ‖a‖_{Ḃ^{s1}_{p,1}}‖b‖_{Ḃ^{s2}_{q,1}}`
    Holder { p: f64, q: f64, s1: f64, s2: f64 },
    /// `‖ab‖_{Ḃ^{3/p}_{p,1}} ≲ ‖a‖_{Ḃ^{3/q−θ}_{q,1}}‖b‖_{Ḃ^{3/q+θ}_{q,1}} + (a↔b)`
    Theta { p: f64, q: f64, theta: f64 },
    /// `‖ab‖_{Ḃ^{3/q}_{p,1}} ≲ ‖a‖_{Ḃ^{3/q}_{q,1}}‖b‖_{Ḃ^{6/q−3/p}_{q,1}} + (a↔b)`
    Critical { p: f64, q: f64 },
    /// `‖(σ(D)a)∂₁b‖_{Ḃ^{3/q}_{q,1}} ≲ ‖a‖_{Ḃ^{3/q−1}_{q,1}}‖b‖_{Ḃ^{3/q+1}_{q,1}}`, `σ(ξ) = iξ₁/|ξ|²`
    SigmaFirst { q: f64 },
    /// `‖a ∂₁(σ(D)b)‖_{Ḃ^{3/q}_{q,1}} ≲ ‖a‖_{Ḃ^{3/q}_{q,1}}‖b‖_{Ḃ^{3/q}_{q,1}}`
    SigmaSecond { q: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductLawSample {
    pub lhs: f64,
    pub rhs: f64,
}

impl ProductLawSample {
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

fn apply_modes(f: &ScalarField, m: impl Fn([f64; 3]) -> Complex64) -> ScalarField {
    let g = *f.grid();
    let t = g.mode_table();
    let mut out = f.clone();
    let c = out.coefficients_mut();
    t.for_each(|idx, ix, iy, iz| c[idx] *= m(t.kdvec(ix, iy, iz)));
    out
}

fn sigma(f: &ScalarField) -> ScalarField {
    apply_modes(f, |k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k[0] / k2)
        }
    })
}

fn d1(f: &ScalarField) -> ScalarField {
    apply_modes(f, |k| Complex64::new(0.0, k[0]))
}

/// Samples one product estimate on a pair of scalar fields.
pub fn product_law_ratio(
    partition: &DyadicPartition,
    a: &ScalarField,
    b: &ScalarField,
    law: ProductLaw,
) -> Result<ProductLawSample> {
    let norm = |f: &ScalarField, s: f64, p: f64| -> Result<f64> { Ok(shell_lp_norms(partition, f, p)?.besov(s, 1.0)) };
    let order = |p: f64, q: f64| if q >= p { Ok(()) } else { Err(Error::ExponentOrder { p, q }) };
    let (lhs, rhs) = match law {
        ProductLaw::Holder { p, q, s1, s2 } => {
            order(p, q)?;
            let ab = dealiased_product(a, b)?;
            (norm(&ab, s1 + s2 - 3.0 / p, q)?, norm(a, s1, p)? * norm(b, s2, q)?)
        }
        ProductLaw::Theta { p, q, theta } => {
            order(p, q)?;
            let ab = dealiased_product(a, b)?;
            let lo = 3.0 / q - theta;
            let hi = 3.0 / q + theta;
            (
                norm(&ab, 3.0 / p, p)?,
                norm(a, lo, q)? * norm(b, hi, q)? + norm(a, hi, q)? * norm(b, lo, q)?,
            )
        }
        ProductLaw::Critical { p, q } => {
            order(p, q)?;
            let ab = dealiased_product(a, b)?;
            let s = 6.0 / q - 3.0 / p;
            (
                norm(&ab, 3.0 / q, p)?,
                norm(a, 3.0 / q, q)? * norm(b, s, q)? + norm(a, s, q)? * norm(b, 3.0 / q, q)?,
            )
        }
        ProductLaw::SigmaFirst { q } => {
            let prod = dealiased_product(&sigma(a), &d1(b))?;
            (norm(&prod, 3.0 / q, q)?, norm(a, 3.0 / q - 1.0, q)? * norm(b, 3.0 / q + 1.0, q)?)
        }
        ProductLaw::SigmaSecond { q } => {
            let prod = dealiased_product(a, &d1(&sigma(b)))?;
            (norm(&prod, 3.0 / q, q)?, norm(a, 3.0 / q, q)? * norm(b, 3.0 / q, q)?)
        }
    };
    Ok(ProductLawSample { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::lp::Profile;
    use crate::random::{random_field, Spectrum};

    #[test]
    fn commutator_trivial_cases() {
        let g = Grid::new(16, std::f64::consts::TAU).unwrap();
        let p = DyadicPartition::new(&g, Profile::Quintic).unwrap();
        let z = random_field(g, &Spectrum::band(5.0), 2, true);
        let mut w = SpectralField::zeros(g);
        w.components_mut()[1][0] = Complex64::new(1.5, 0.0);
        let c = commutator_block_norm(&p, &w, &z).unwrap();
        assert!(c.lhs < 1e-13 * z.l2_norm());
        let zero = SpectralField::zeros(g);
        let w2 = random_field(g, &Spectrum::band(5.0), 3, true);
        let c0 = commutator_block_norm(&p, &w2, &zero).unwrap();
        assert!(c0.lhs < 1e-12 * w2.l2_norm());
        assert_eq!(c0.rhs, 0.0);
    }

    #[test]
    fn interpolation_single_shell_is_equality() {
        let g = Grid::new(32, std::f64::consts::TAU).unwrap();
        let p = DyadicPartition::new(&g, Profile::Quintic).unwrap();
        let u = random_field(g, &Spectrum::Shell { j: 2 }, 4, true);
        let n = shell_lp_norms(&p, &u, 2.0).unwrap();
        let i = interpolation_sides(&n, -0.5, 1.5, 0.3).unwrap();
        assert!((i.lhs - i.rhs).abs() < 1e-13 * i.rhs);
        assert!(interpolation_sides(&n, 1.5, -0.5, 0.3).is_err());
        assert!(interpolation_sides(&n, -0.5, 1.5, 1.0).is_err());
    }

    #[test]
    fn bernstein_rejects_reversed_exponents() {
        let g = Grid::new(16, std::f64::consts::TAU).unwrap();
        let p = DyadicPartition::new(&g, Profile::Quintic).unwrap();
        let u = random_field(g, &Spectrum::band(5.0), 2, true);
        assert!(matches!(bernstein_ratio(&p, &u, 1, 1, 3.0, 2.0), Err(Error::ExponentOrder { .. })));
    }
}
