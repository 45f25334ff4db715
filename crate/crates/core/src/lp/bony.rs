use crate::fft;
use crate::field::{FourierField, ScalarField};
use crate::{Error, Result};

use super::DyadicPartition;

fn same_grid(a: &ScalarField, b: &ScalarField, p: &DyadicPartition) -> Result<()> {
    if a.grid() != b.grid() || a.grid() != p.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `P_K(a·b)`: physical-space product truncated to the 2/3-rule band.
pub fn dealiased_product(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let n = a.grid().n();
    let (x, y) = fft::inverse_pair(a.coefficients(), b.coefficients(), n);
    let prod: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let mut out = ScalarField::from_samples(*a.grid(), &prod)?;
    out.dealias();
    Ok(out)
}

/// Accumulates `Σ_q f_q·g_q` in physical space and returns its dealiased
/// transform.
fn sum_of_products(pairs: impl Iterator<Item = (ScalarField, ScalarField)>, grid: crate::field::Grid) -> Result<ScalarField> {
    let n = grid.n();
    let mut acc = vec![0.0; grid.len()];
    for (f, g) in pairs {
        let (x, y) = fft::inverse_pair(f.coefficients(), g.coefficients(), n);
        for ((a, p), q) in acc.iter_mut().zip(&x).zip(&y) {
            *a += p * q;
        }
    }
    let mut out = ScalarField::from_samples(grid, &acc)?;
    out.dealias();
    Ok(out)
}

/// Paraproduct `T_u v = Σ_q S_{q−1}u·Δ_q v`.
pub fn bony_paraproduct(partition: &DyadicPartition, u: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    same_grid(u, v, partition)?;
    let pairs = partition
        .shells()
        .filter(|&q| q - 1 > partition.j_min())
        .map(|q| Ok((partition.low_pass(u, q - 1)?, partition.shell_project(v, q)?)))
        .collect::<Result<Vec<_>>>()?;
    sum_of_products(pairs.into_iter(), *u.grid())
}

/// Remainder `R(u, v) = Σ_q Σ_{|q'−q|<=1} Δ_q u·Δ_{q'} v`.
pub fn bony_remainder(partition: &DyadicPartition, u: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    same_grid(u, v, partition)?;
    let pairs = partition
        .shells()
        .map(|q| {
            let du = partition.shell_project(u, q)?;
            let mut band = partition.shell_project(v, q)?;
            for qq in [q - 1, q + 1] {
                if qq >= partition.j_min() && qq <= partition.j_max() {
                    band = band.sum(&partition.shell_project(v, qq)?)?;
                }
            }
            Ok((du, band))
        })
        .collect::<Result<Vec<_>>>()?;
    sum_of_products(pairs.into_iter(), *u.grid())
}
