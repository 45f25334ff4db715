//! Three-dimensional complex FFTs on `n³` row-major cubes.
//!
//! Each 3D transform is three batched 1D passes along the contiguous axis,
//! with a cyclic axis rotation `(a, b, c) -> (c, a, b)` after every pass; three
//! rotations restore the original layout. Real fields are transformed two at a
//! time by packing them into the real and imaginary parts of one complex cube.
//!
//! Normalisation: [`forward`] divides by `n³`, [`inverse`] does not.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Lines handed to one rustfft call; keeps per-task scratch small when the
/// batch is split across threads.
const LINES_PER_TASK: usize = 64;

fn batched_lines(fft: &dyn Fft<f64>, data: &mut [Complex64], n: usize) {
    let chunk = n * LINES_PER_TASK;
    let run = |block: &mut [Complex64]| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(block, &mut scratch);
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk).for_each(run);
    }
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk).for_each(run);
}

/// `out[(c*n + a)*n + b] = input[(a*n + b)*n + c]`
fn rotate(input: &[Complex64], out: &mut [Complex64], n: usize) {
    let fill = |(c, slab): (usize, &mut [Complex64])| {
        for a in 0..n {
            let row = &mut slab[a * n..(a + 1) * n];
            let base = a * n * n + c;
            for (b, o) in row.iter_mut().enumerate() {
                *o = input[base + b * n];
            }
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(n * n).enumerate().for_each(fill);
    }
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(n * n).enumerate().for_each(fill);
}

fn transform_3d(data: &mut Vec<Complex64>, n: usize, fft: &dyn Fft<f64>) {
    debug_assert_eq!(data.len(), n * n * n);
    let mut tmp = vec![Complex64::new(0.0, 0.0); data.len()];
    for _ in 0..3 {
        batched_lines(fft, data, n);
        rotate(data, &mut tmp, n);
        std::mem::swap(data, &mut tmp);
    }
}

/// In-place forward transform with `1/n³` normalisation.
pub fn forward(data: &mut Vec<Complex64>, n: usize) {
    let p = plans(n);
    transform_3d(data, n, p.forward.as_ref());
    let scale = 1.0 / (n * n * n) as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// In-place inverse transform, unnormalised: `f(x) = Σ_k f̂(k) e^{ik·x}`.
pub fn inverse(data: &mut Vec<Complex64>, n: usize) {
    let p = plans(n);
    transform_3d(data, n, p.inverse.as_ref());
}

/// Flat index of the mode `-k` given the flat index of `k`.
#[inline]
pub(crate) fn conj_index(idx: usize, n: usize) -> usize {
    let iz = idx % n;
    let iy = (idx / n) % n;
    let ix = idx / (n * n);
    let neg = |i: usize| (n - i) % n;
    (neg(ix) * n + neg(iy)) * n + neg(iz)
}

/// Inverse transform of two Hermitian coefficient arrays in one complex pass.
pub fn inverse_pair(a: &[Complex64], b: &[Complex64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut z: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
    inverse(&mut z, n);
    (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
}

/// Inverse transform of one Hermitian coefficient array.
pub fn inverse_real(a: &[Complex64], n: usize) -> Vec<f64> {
    let mut z = a.to_vec();
    inverse(&mut z, n);
    z.iter().map(|c| c.re).collect()
}

/// Forward transform of two real sample arrays in one complex pass. The
/// separated outputs are exactly Hermitian.
pub fn forward_pair(x: &[f64], y: &[f64], n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut z: Vec<Complex64> = x.iter().zip(y).map(|(&a, &b)| Complex64::new(a, b)).collect();
    forward(&mut z, n);
    let mut xa = vec![Complex64::new(0.0, 0.0); z.len()];
    let mut yb = vec![Complex64::new(0.0, 0.0); z.len()];
    for idx in 0..z.len() {
        let zk = z[idx];
        let zm = z[conj_index(idx, n)].conj();
        xa[idx] = (zk + zm) * 0.5;
        // (zk - zm) / (2i)
        let d = (zk - zm) * 0.5;
        yb[idx] = Complex64::new(d.im, -d.re);
    }
    (xa, yb)
}

/// Forward transform of one real sample array; output exactly Hermitian.
pub fn forward_real(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut z: Vec<Complex64> = x.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    forward(&mut z, n);
    (0..z.len())
        .map(|idx| (z[idx] + z[conj_index(idx, n)].conj()) * 0.5)
        .collect()
}

/// Inverse transforms of many Hermitian arrays, packing them two at a time.
pub fn inverse_many(fields: &[&[Complex64]], n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        match pair {
            [a, b] => {
                let (x, y) = inverse_pair(a, b, n);
                out.push(x);
                out.push(y);
            }
            [a] => out.push(inverse_real(a, n)),
            _ => unreachable!(),
        }
    }
    out
}

/// Forward transforms of many real arrays, packing them two at a time.
pub fn forward_many(samples: &[&[f64]], n: usize) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(samples.len());
    for pair in samples.chunks(2) {
        match pair {
            [a, b] => {
                let (x, y) = forward_pair(a, b, n);
                out.push(x);
                out.push(y);
            }
            [a] => out.push(forward_real(a, n)),
            _ => unreachable!(),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[Complex64], n: usize) -> Vec<Complex64> {
        let tau = std::f64::consts::TAU;
        let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
        for kx in 0..n {
            for ky in 0..n {
                for kz in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for x in 0..n {
                        for y in 0..n {
                            for z in 0..n {
                                let phase = -tau * ((kx * x + ky * y + kz * z) % n) as f64 / n as f64;
                                acc += data[(x * n + y) * n + z] * Complex64::from_polar(1.0, phase);
                            }
                        }
                    }
                    out[(kx * n + ky) * n + kz] = acc / (n * n * n) as f64;
                }
            }
        }
        out
    }

    #[test]
    fn forward_matches_direct_dft() {
        let n = 4;
        let data: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let expected = naive_dft(&data, n);
        let mut got = data.clone();
        forward(&mut got, n);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-14);
        }
        inverse(&mut got, n);
        for (a, b) in got.iter().zip(&data) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn paired_real_transforms_match_single() {
        let n = 8;
        let x: Vec<f64> = (0..n * n * n).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..n * n * n).map(|i| (i as f64 * 0.3).cos() + 0.5).collect();
        let (xa, yb) = forward_pair(&x, &y, n);
        let xs = forward_real(&x, n);
        let ys = forward_real(&y, n);
        for i in 0..xa.len() {
            assert!((xa[i] - xs[i]).norm() < 1e-15);
            assert!((yb[i] - ys[i]).norm() < 1e-15);
            // exact Hermitian symmetry of the separated outputs
            assert_eq!(xa[conj_index(i, n)], xa[i].conj());
        }
        let (xr, yr) = inverse_pair(&xa, &yb, n);
        for i in 0..x.len() {
            assert!((xr[i] - x[i]).abs() < 1e-13);
            assert!((yr[i] - y[i]).abs() < 1e-13);
        }
    }
}
