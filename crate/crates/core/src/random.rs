//! Reproducible random and structured initial data.
//!
//! Random coefficients are drawn per integer lattice vector in a fixed
//! canonical order that depends only on the spectrum's cutoff, never on `n`,
//! so one seed describes the same continuum field at every resolution that
//! resolves its band.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::field::{leray_project, Grid, ScalarField, SpectralField};

/// Radial amplitude profile of random data, in physical wavenumber units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Spectrum {
    /// Unit amplitude for `k_min <= |k| <= k_max`.
    Band { k_min: f64, k_max: f64 },
    /// Amplitude `|k|^{-alpha}` for `k_min <= |k| <= k_max`.
    PowerLaw { k_min: f64, k_max: f64, alpha: f64 },
    /// Unit amplitude on the plateau `4/3·2^j <= |k| <= 3/2·2^j` of shell `j`,
    /// where exactly one Littlewood–Paley block is active.
    Shell { j: i32 },
}

impl Spectrum {
    pub fn band(k_max: f64) -> Self {
        Spectrum::Band { k_min: 0.0, k_max }
    }

    pub fn amplitude(&self, k: f64) -> f64 {
        if k == 0.0 {
            return 0.0;
        }
        match *self {
            Spectrum::Band { k_min, k_max } => (k >= k_min && k <= k_max) as u8 as f64,
            Spectrum::PowerLaw { k_min, k_max, alpha } => {
                if k >= k_min && k <= k_max {
                    k.powf(-alpha)
                } else {
                    0.0
                }
            }
            Spectrum::Shell { j } => {
                let r = k / 2f64.powi(j);
                (4.0 / 3.0..=1.5).contains(&r) as u8 as f64
            }
        }
    }

    /// Largest wavenumber with nonzero amplitude.
    pub fn k_max(&self) -> f64 {
        match *self {
            Spectrum::Band { k_max, .. } | Spectrum::PowerLaw { k_max, .. } => k_max,
            Spectrum::Shell { j } => 1.5 * 2f64.powi(j),
        }
    }
}

fn canonical(m: [i64; 3]) -> bool {
    m[0] > 0 || (m[0] == 0 && (m[1] > 0 || (m[1] == 0 && m[2] > 0)))
}

/// Visits canonical half-lattice vectors inside the cube of radius
/// `floor(k_max/k0)`, drawing `draws` standard normals for each, and hands
/// in-band representable ones to `place`.
fn draw_lattice(
    grid: &Grid,
    spectrum: &Spectrum,
    seed: u64,
    draws: usize,
    mut place: impl FnMut(usize, usize, f64, &[f64]),
) {
    let k0 = grid.k0();
    let r = (spectrum.k_max() / k0 + 1e-9).floor() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; draws];
    for mx in 0..=r {
        for my in -r..=r {
            for mz in -r..=r {
                let m = [mx, my, mz];
                if !canonical(m) {
                    continue;
                }
                for b in buf.iter_mut() {
                    *b = StandardNormal.sample(&mut rng);
                }
                let kmag = k0 * ((mx * mx + my * my + mz * mz) as f64).sqrt();
                let a = spectrum.amplitude(kmag);
                if a == 0.0 || !grid.in_band(m) {
                    continue;
                }
                let (Some(ix), Some(iy), Some(iz)) =
                    (grid.index_of_mode(mx), grid.index_of_mode(my), grid.index_of_mode(mz))
                else {
                    continue;
                };
                let (jx, jy, jz) = (
                    grid.index_of_mode(-mx).unwrap(),
                    grid.index_of_mode(-my).unwrap(),
                    grid.index_of_mode(-mz).unwrap(),
                );
                place(grid.flat(ix, iy, iz), grid.flat(jx, jy, jz), a, &buf);
            }
        }
    }
}

/// Random real vector field with the given radial spectrum, Leray-projected
/// when `divfree` is set. The mean is zero.
pub fn random_field(grid: Grid, spectrum: &Spectrum, seed: u64, divfree: bool) -> SpectralField {
    let mut out = SpectralField::zeros(grid);
    {
        let comps = out.components_mut();
        draw_lattice(&grid, spectrum, seed, 6, |plus, minus, a, g| {
            for c in 0..3 {
                let v = Complex64::new(g[2 * c], g[2 * c + 1]) * a;
                comps[c][plus] = v;
                comps[c][minus] = v.conj();
            }
        });
    }
    if divfree {
        leray_project(&out)
    } else {
        out
    }
}

/// Random real scalar field with the given radial spectrum and zero mean.
pub fn random_scalar(grid: Grid, spectrum: &Spectrum, seed: u64) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    {
        let c = out.coefficients_mut();
        draw_lattice(&grid, spectrum, seed, 2, |plus, minus, a, g| {
            let v = Complex64::new(g[0], g[1]) * a;
            c[plus] = v;
            c[minus] = v.conj();
        });
    }
    out
}

/// Taylor–Green-like vortex `(sin ax cos ay cos az, −cos ax sin ay cos az, 0)`
/// with `a = mode·2π/L`; divergence-free and mean-zero.
pub fn taylor_green(grid: Grid, mode: usize, amplitude: f64) -> SpectralField {
    let a = grid.k0() * mode as f64;
    let phys = crate::field::PhysicalField::from_fn(grid, |x, y, z| {
        [
            amplitude * (a * x).sin() * (a * y).cos() * (a * z).cos(),
            -amplitude * (a * x).cos() * (a * y).sin() * (a * z).cos(),
            0.0,
        ]
    });
    SpectralField::from_physical(&phys).with_divfree(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::divergence;

    #[test]
    fn same_seed_same_field_across_resolutions() {
        let s = Spectrum::band(3.0);
        let a = random_field(Grid::new(16, std::f64::consts::TAU).unwrap(), &s, 9, true);
        let b = random_field(Grid::new(32, std::f64::consts::TAU).unwrap(), &s, 9, true);
        let ga = *a.grid();
        let gb = *b.grid();
        for m in [[1i64, 0, 0], [2, -1, 1], [0, 3, 0], [-1, -1, 2]] {
            let ia = ga.flat(
                ga.index_of_mode(m[0]).unwrap(),
                ga.index_of_mode(m[1]).unwrap(),
                ga.index_of_mode(m[2]).unwrap(),
            );
            let ib = gb.flat(
                gb.index_of_mode(m[0]).unwrap(),
                gb.index_of_mode(m[1]).unwrap(),
                gb.index_of_mode(m[2]).unwrap(),
            );
            for c in 0..3 {
                assert_eq!(a.component(c)[ia], b.component(c)[ib]);
            }
        }
        assert!((a.l2_norm() - b.l2_norm()).abs() < 1e-12 * a.l2_norm());
    }

    #[test]
    fn random_data_is_real_meanfree_divfree() {
        let g = Grid::new(16, std::f64::consts::TAU).unwrap();
        let f = random_field(g, &Spectrum::PowerLaw { k_min: 1.0, k_max: 5.0, alpha: 2.0 }, 1, true);
        assert!(f.hermitian_defect() < 1e-15);
        assert_eq!(f.mean(), [Complex64::new(0.0, 0.0); 3]);
        assert!(divergence(&f).max_abs_coeff() < 1e-14);
        assert!(f.l2_norm() > 0.0);
        let tg = taylor_green(g, 1, 1.0);
        assert!(divergence(&tg).max_abs_coeff() < 1e-14);
    }

    #[test]
    fn shell_spectrum_is_on_plateau() {
        let g = Grid::new(32, std::f64::consts::TAU).unwrap();
        let f = random_scalar(g, &Spectrum::Shell { j: 2 }, 4);
        let r = f
            .coefficients()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .count();
        assert!(r > 0);
        let sup = {
            let mut v = SpectralField::zeros(g);
            v.components_mut()[0].copy_from_slice(f.coefficients());
            v.support_radius()
        };
        assert!((16.0 / 3.0..=6.0).contains(&sup));
    }
}
