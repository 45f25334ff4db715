//! Littlewood–Paley analysis on the periodic box.
//!
//! The low-pass profile `χ` is radial, equal to 1 on `|ξ| <= 3/4` and to 0 on
//! `|ξ| >= 4/3`, with a polynomial smoothstep in between. The annulus bump is
//! `φ(ξ) = χ(ξ/2) − χ(ξ)`, supported in `3/4 <= |ξ| <= 8/3` and identically 1
//! on the plateau `4/3 <= |ξ| <= 3/2`. Shell `j` acts as the multiplier
//! `φ(2^{-j}|k|)` on physical wavenumbers.

mod besov;
mod bony;
mod estimates;

pub use besov::{besov_norm, shell_lp_norms, BesovIndex, BesovNorm, ShellContribution, ShellNorms};
pub use bony::{bony_paraproduct, bony_remainder, dealiased_product};
pub use estimates::{
    bernstein_ratio, commutator_block_norm, interpolation_sides, product_law_ratio, CommutatorNorm, InterpolationSample,
    ProductLaw, ProductLawSample,
};

use serde::{Deserialize, Serialize};

use crate::field::{FourierField, Grid};
use crate::{Error, Result};

/// Inner and outer radius of the `χ` transition.
pub const CHI_INNER: f64 = 0.75;
pub const CHI_OUTER: f64 = 4.0 / 3.0;

/// Smoothness class of the `χ` transition polynomial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    /// `3t² − 2t³`, C¹.
    Cubic,
    /// `6t⁵ − 15t⁴ + 10t³`, C².
    #[default]
    Quintic,
    /// `35t⁴ − 84t⁵ + 70t⁶ − 20t⁷`, C³.
    Septic,
}

impl Profile {
    fn smoothstep(self, t: f64) -> f64 {
        match self {
            Profile::Cubic => t * t * (3.0 - 2.0 * t),
            Profile::Quintic => t * t * t * (t * (6.0 * t - 15.0) + 10.0),
            Profile::Septic => {
                let t4 = t * t * t * t;
                t4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))
            }
        }
    }
}

/// Dyadic partition of unity resolved on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicPartition {
    j_min: i32,
    j_max: i32,
    profile: Profile,
    grid: Grid,
}

impl DyadicPartition {
    /// Chooses `j_min` so the lowest lattice shell `|k| = k0` lies on or above
    /// the plateau of the first block, and `j_max` so that the plateau of the
    /// last block reaches the dealiasing radius.
    pub fn new(grid: &Grid, profile: Profile) -> Result<Self> {
        let k0 = grid.k0();
        let j_min = (CHI_INNER * k0).log2().floor() as i32;
        let j_max = (grid.dealias_wavenumber() * 2.0 / 3.0).log2().ceil() as i32;
        let shells = j_max - j_min + 1;
        if shells < 3 {
            return Err(Error::TooFewShells { shells });
        }
        Ok(Self { j_min, j_max, profile, grid: *grid })
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn shells(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    pub fn len(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `χ(r)`
    pub fn chi(&self, r: f64) -> f64 {
        if r <= CHI_INNER {
            1.0
        } else if r >= CHI_OUTER {
            0.0
        } else {
            1.0 - self.profile.smoothstep((r - CHI_INNER) / (CHI_OUTER - CHI_INNER))
        }
    }

    /// `φ(r) = χ(r/2) − χ(r)`
    pub fn phi(&self, r: f64) -> f64 {
        self.chi(0.5 * r) - self.chi(r)
    }

    /// Multiplier of block `j` at wavenumber magnitude `k`.
    pub fn weight(&self, j: i32, k: f64) -> f64 {
        self.phi(k / 2f64.powi(j))
    }

    /// Multiplier of `S_j = Σ_{j_min <= ℓ < j} Δ_ℓ`, telescoped to
    /// `χ(2^{-j}k) − χ(2^{-j_min}k)`.
    pub fn low_pass_weight(&self, j: i32, k: f64) -> f64 {
        if j <= self.j_min {
            return 0.0;
        }
        self.chi(k / 2f64.powi(j)) - self.chi(k / 2f64.powi(self.j_min))
    }

    /// `Σ_j φ(2^{-j}k)` over the resolved shells.
    pub fn coverage(&self, k: f64) -> f64 {
        self.shells().map(|j| self.weight(j, k)).sum()
    }

    /// Band `[4/3·2^{j_min}, 3/2·2^{j_max}]` on which the resolved blocks sum
    /// to one.
    pub fn covered_band(&self) -> (f64, f64) {
        (CHI_OUTER * 2f64.powi(self.j_min), 1.5 * 2f64.powi(self.j_max))
    }

    /// Shells whose block can be nonzero at wavenumber `k`, clipped to range.
    pub(crate) fn active_shells(&self, k: f64) -> impl Iterator<Item = i32> + '_ {
        let base = if k > 0.0 { k.log2().floor() as i32 } else { i32::MIN / 2 };
        (base - 1..=base + 1).filter(move |&j| j >= self.j_min && j <= self.j_max && k > 0.0)
    }

    fn check(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::ShellOutOfRange { j, j_min: self.j_min, j_max: self.j_max });
        }
        Ok(())
    }

    fn check_grid(&self, g: &Grid) -> Result<()> {
        if *g != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `Δ_j u`
    pub fn shell_project<F: FourierField>(&self, u: &F, j: i32) -> Result<F> {
        self.check(j)?;
        self.check_grid(u.grid())?;
        Ok(u.map_radial(&|k| self.weight(j, k)))
    }

    /// `S_j u`, defined for `j_min <= j <= j_max + 1`.
    pub fn low_pass<F: FourierField>(&self, u: &F, j: i32) -> Result<F> {
        if j < self.j_min || j > self.j_max + 1 {
            return Err(Error::ShellOutOfRange { j, j_min: self.j_min, j_max: self.j_max + 1 });
        }
        self.check_grid(u.grid())?;
        Ok(u.map_radial(&|k| self.low_pass_weight(j, k)))
    }

    /// Largest deviation of `Σ_j φ_j` from one over nonzero lattice vectors in
    /// the covered band.
    pub fn partition_defect(&self) -> f64 {
        let (lo, hi) = self.covered_band();
        let t = self.grid.mode_table();
        let mut worst: f64 = 0.0;
        t.for_each(|_, ix, iy, iz| {
            let k = t.kmag(ix, iy, iz);
            if k > 0.0 && k >= lo && k <= hi {
                worst = worst.max((self.coverage(k) - 1.0).abs());
            }
        });
        worst
    }

    /// Whether every nonzero in-band lattice vector lies in the covered band.
    pub fn covers_dealiased_band(&self) -> bool {
        let (lo, hi) = self.covered_band();
        self.grid.k0() >= lo && self.grid.dealias_wavenumber() <= hi
    }
}

/// Per-shell copies `Δ_j u` of one field.
#[derive(Clone, Debug)]
pub struct ShellDecomposition<F> {
    j_min: i32,
    blocks: Vec<F>,
}

impl<F: FourierField> ShellDecomposition<F> {
    pub fn new(partition: &DyadicPartition, u: &F) -> Result<Self> {
        let blocks = partition.shells().map(|j| partition.shell_project(u, j)).collect::<Result<Vec<_>>>()?;
        Ok(Self { j_min: partition.j_min(), blocks })
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_min + self.blocks.len() as i32 - 1
    }

    pub fn block(&self, j: i32) -> Option<&F> {
        let i = j.checked_sub(self.j_min)?;
        usize::try_from(i).ok().and_then(|i| self.blocks.get(i))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (i32, &F)> {
        self.blocks.iter().enumerate().map(move |(i, b)| (self.j_min + i as i32, b))
    }

    /// `Σ_j Δ_j u`
    pub fn reconstruct(&self) -> Result<F> {
        let mut it = self.blocks.iter();
        let mut acc = it.next().expect("partition has at least three shells").clone();
        for b in it {
            acc = acc.sum(b)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SpectralField;
    use crate::random::{random_field, Spectrum};

    fn grid(n: usize) -> Grid {
        Grid::new(n, std::f64::consts::TAU).unwrap()
    }

    #[test]
    fn shell_range_for_reference_grid() {
        let p = DyadicPartition::new(&grid(64), Profile::Quintic).unwrap();
        assert_eq!((p.j_min(), p.j_max()), (-1, 4));
        assert!(p.covers_dealiased_band());
        let p8 = DyadicPartition::new(&grid(8), Profile::Quintic).unwrap();
        assert!(p8.len() >= 3);
    }

    #[test]
    fn partition_of_unity_on_lattice() {
        for n in [16, 32, 64] {
            for prof in [Profile::Cubic, Profile::Quintic, Profile::Septic] {
                let p = DyadicPartition::new(&grid(n), prof).unwrap();
                assert!(p.partition_defect() < 1e-12, "n={n} {prof:?}");
            }
        }
    }

    #[test]
    fn bump_support_and_plateau() {
        let p = DyadicPartition::new(&grid(32), Profile::Quintic).unwrap();
        assert_eq!(p.phi(0.0), 0.0);
        assert_eq!(p.phi(0.75), 0.0);
        assert_eq!(p.phi(8.0 / 3.0), 0.0);
        assert_eq!(p.phi(3.0), 0.0);
        for r in [4.0 / 3.0, 1.4, 1.5] {
            assert_eq!(p.phi(r), 1.0);
            assert_eq!(p.phi(r * 2.0), 0.0);
            assert_eq!(p.phi(r / 2.0), 0.0);
        }
        for i in 0..400 {
            let r = i as f64 * 0.01;
            assert!(p.phi(r) >= 0.0);
            assert!(p.phi(r) * p.phi(r / 4.0) == 0.0);
        }
    }

    #[test]
    fn shell_out_of_range() {
        let g = grid(16);
        let p = DyadicPartition::new(&g, Profile::Quintic).unwrap();
        let f = SpectralField::zeros(g);
        assert!(matches!(p.shell_project(&f, p.j_max() + 1), Err(Error::ShellOutOfRange { .. })));
        assert!(p.low_pass(&f, p.j_max() + 1).is_ok());
    }

    #[test]
    fn decomposition_reconstructs_meanfree_part() {
        let g = grid(32);
        let p = DyadicPartition::new(&g, Profile::Quintic).unwrap();
        let mut u = random_field(g, &Spectrum::band(10.0), 3, false);
        u.components_mut()[0][0] = crate::Complex64::new(0.7, 0.0);
        let d = ShellDecomposition::new(&p, &u).unwrap();
        let rec = d.reconstruct().unwrap();
        let mut mf = u.clone();
        mf.remove_mean();
        assert!(rec.sub(&mf).unwrap().l2_norm() / u.l2_norm() < 1e-11);
        let s = p.low_pass(&u, p.j_max() + 1).unwrap();
        assert!(s.sub(&mf).unwrap().l2_norm() / u.l2_norm() < 1e-11);
    }

    #[test]
    fn plateau_mode_is_single_shell() {
        let g = grid(32);
        let p = DyadicPartition::new(&g, Profile::Quintic).unwrap();
        let u = random_field(g, &Spectrum::Shell { j: 2 }, 8, true);
        let d2 = p.shell_project(&u, 2).unwrap();
        assert!(d2.sub(&u).unwrap().l2_norm() < 1e-15 * u.l2_norm().max(1.0));
        assert_eq!(p.shell_project(&u, 1).unwrap().l2_norm(), 0.0);
        assert_eq!(p.shell_project(&u, 3).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn almost_orthogonality() {
        let g = grid(32);
        let p = DyadicPartition::new(&g, Profile::Quintic).unwrap();
        let u = random_field(g, &Spectrum::band(10.0), 5, false);
        for j in p.shells() {
            for k in p.shells() {
                if (j - k).abs() >= 2 {
                    let dd = p.shell_project(&p.shell_project(&u, k).unwrap(), j).unwrap();
                    assert_eq!(dd.l2_norm(), 0.0);
                }
            }
        }
    }
}
