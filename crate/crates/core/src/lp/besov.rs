use serde::{Deserialize, Serialize};

use super::DyadicPartition;
use crate::field::FourierField;
use crate::{Error, Result};

/// Homogeneous Besov index `(s, p, r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub r: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        if !(r >= 1.0) {
            return Err(Error::InvalidExponent(r));
        }
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("regularity s = {s}")));
        }
        Ok(Self { s, p, r })
    }

    /// Critical index `Ḃ^{3/p−1}_{p,1}`.
    pub fn critical(p: f64) -> Result<Self> {
        Self::new(3.0 / p - 1.0, p, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellContribution {
    pub j: i32,
    /// `‖Δ_j u‖_{L^p}`
    pub block_norm: f64,
    /// `2^{js}‖Δ_j u‖_{L^p}`
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovNorm {
    pub index: BesovIndex,
    pub value: f64,
    pub shells: Vec<ShellContribution>,
    /// Share of the `L²` energy of the mean-free part carried by lattice
    /// modes where the resolved blocks do not sum to one.
    pub uncovered_fraction: f64,
    /// `‖ū‖` of the zero mode, invisible to homogeneous norms.
    pub mean_magnitude: f64,
}

/// Block `L^p` norms `‖Δ_j u‖_{L^p}` for every resolved shell; any
/// homogeneous Besov norm with that `p` follows without further transforms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellNorms {
    pub p: f64,
    pub j_min: i32,
    pub norms: Vec<f64>,
    pub uncovered_fraction: f64,
    pub mean_magnitude: f64,
}

fn lr_sum(values: impl Iterator<Item = f64>, r: f64) -> f64 {
    if r.is_infinite() {
        values.fold(0.0, f64::max)
    } else if r == 1.0 {
        values.sum()
    } else {
        values.map(|v| v.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

impl ShellNorms {
    pub fn contributions(&self, s: f64) -> impl Iterator<Item = ShellContribution> + '_ {
        self.norms.iter().enumerate().map(move |(i, &block_norm)| {
            let j = self.j_min + i as i32;
            ShellContribution { j, block_norm, contribution: 2f64.powf(j as f64 * s) * block_norm }
        })
    }

    /// `‖(2^{js}‖Δ_j u‖_{L^p})_j‖_{ℓ^r}`
    pub fn besov(&self, s: f64, r: f64) -> f64 {
        lr_sum(self.contributions(s).map(|c| c.contribution), r)
    }

    pub fn norm(&self, index: BesovIndex) -> BesovNorm {
        BesovNorm {
            index,
            value: self.besov(index.s, index.r),
            shells: self.contributions(index.s).collect(),
            uncovered_fraction: self.uncovered_fraction,
            mean_magnitude: self.mean_magnitude,
        }
    }
}

/// Per-shell `L^p` norms. `p = 2` uses Parseval in a single pass over modes;
/// other exponents transform each block to physical space.
pub fn shell_lp_norms<F: FourierField>(partition: &DyadicPartition, u: &F, p: f64) -> Result<ShellNorms> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if u.grid() != partition.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *u.grid();
    let power = u.mode_power();
    let t = grid.mode_table();
    let nshell = partition.len();
    let mut sums = vec![0.0; nshell];
    let mut comp = vec![0.0; nshell];
    let mut total = 0.0;
    let mut uncovered = 0.0;
    let mean_magnitude = power[0].sqrt();
    t.for_each(|idx, ix, iy, iz| {
        if idx == 0 {
            return;
        }
        let pw = power[idx];
        if pw == 0.0 {
            return;
        }
        let k = t.kmag(ix, iy, iz);
        total += pw;
        let mut cover = 0.0;
        for j in partition.active_shells(k) {
            let w = partition.weight(j, k);
            if w == 0.0 {
                continue;
            }
            cover += w;
            if p == 2.0 {
                // Neumaier summation
                let i = (j - partition.j_min()) as usize;
                let x = w * w * pw;
                let s = sums[i] + x;
                if f64::abs(sums[i]) >= x.abs() {
                    comp[i] += (sums[i] - s) + x;
                } else {
                    comp[i] += (x - s) + sums[i];
                }
                sums[i] = s;
            }
        }
        if (cover - 1.0).abs() > 1e-12 {
            uncovered += pw;
        }
    });
    let norms = if p == 2.0 {
        let vol = grid.volume();
        sums.iter().zip(&comp).map(|(s, c)| ((s + c) * vol).sqrt()).collect()
    } else {
        partition
            .shells()
            .map(|j| partition.shell_project(u, j)?.lp_norm(p))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(ShellNorms {
        p,
        j_min: partition.j_min(),
        norms,
        uncovered_fraction: if total > 0.0 { uncovered / total } else { 0.0 },
        mean_magnitude,
    })
}

/// Truncated homogeneous Besov norm over the resolved shells.
pub fn besov_norm<F: FourierField>(partition: &DyadicPartition, u: &F, index: BesovIndex) -> Result<BesovNorm> {
    Ok(shell_lp_norms(partition, u, index.p)?.norm(index))
}
