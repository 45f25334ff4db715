//! Hall-MHD right-hand sides and structural diagnostics.
//!
//! All products are formed pointwise on the collocation grid and truncated to
//! the spherical 2/3-rule band. Sources returned here exclude diffusion unless
//! the function name says otherwise; the integrators apply the heat part
//! exactly.

mod energy;
mod forms;

pub use energy::{energy_balance_residual, energy_sample, EnergySample};
pub use forms::{q_a, q_b};

use serde::{Deserialize, Serialize};

use crate::fft;
use crate::field::{
    curl, curl_inv_unchecked, dealiased_from_samples, divergence, leray_project, Grid, PhysicalField, ScalarField,
    SpectralField,
};
use crate::{Error, Result};

use forms::{antisym_divergence, sym_divergence, Tensor};

/// Physical parameters: viscosity `μ`, resistivity `ν`, Hall coefficient `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HallParams {
    pub mu: f64,
    pub nu: f64,
    pub epsilon: f64,
}

impl HallParams {
    pub fn new(mu: f64, nu: f64, epsilon: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("viscosity mu = {mu} must be positive")));
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!("resistivity nu = {nu} must be positive")));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("Hall coefficient epsilon = {epsilon} must be >= 0")));
        }
        Ok(Self { mu, nu, epsilon })
    }
}

/// Divergence tolerance used when validating constructed states.
pub const TOL_DIV: f64 = 1e-10;

/// Evolving state `(u, b, J, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HallState {
    pub u: SpectralField,
    pub b: SpectralField,
    pub j: SpectralField,
    pub t: f64,
    pub params: HallParams,
}

fn check_initial(name: &str, f: &SpectralField) -> Result<()> {
    let defect = f.divergence_defect();
    if defect > TOL_DIV {
        return Err(Error::InvalidParameter(format!("{name} is not divergence-free (defect {defect:e})")));
    }
    let m = f.mean();
    if m.iter().any(|c| c.norm() > 0.0) {
        return Err(Error::InvalidParameter(format!("{name} has a nonzero mean")));
    }
    Ok(())
}

impl HallState {
    /// State at `t = 0` from velocity and magnetic data, with `J := ∇×b`.
    pub fn from_data(u: SpectralField, b: SpectralField, params: HallParams) -> Result<Self> {
        if u.grid() != b.grid() {
            return Err(Error::GridMismatch);
        }
        check_initial("u", &u)?;
        check_initial("b", &b)?;
        let j = curl(&b);
        Ok(Self { u: u.with_divfree(true), b: b.with_divfree(true), j, t: 0.0, params })
    }

    /// State with an independently prescribed current, which need not equal
    /// `∇×b`.
    pub fn from_parts(u: SpectralField, b: SpectralField, j: SpectralField, t: f64, params: HallParams) -> Result<Self> {
        if u.grid() != b.grid() || u.grid() != j.grid() {
            return Err(Error::GridMismatch);
        }
        check_initial("u", &u)?;
        check_initial("b", &b)?;
        check_initial("J", &j)?;
        Ok(Self { u, b, j, t, params })
    }

    pub fn zeros(grid: Grid, params: HallParams) -> Self {
        let z = SpectralField::zeros(grid);
        Self { u: z.clone(), b: z.clone(), j: z, t: 0.0, params }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `‖J − ∇×b‖_{L²} / ‖∇×b‖_{L²}`; zero when both vanish.
    pub fn current_defect(&self) -> f64 {
        let cb = curl(&self.b);
        let num = self.j.sub(&cb).expect("same grid").l2_norm();
        let den = cb.l2_norm();
        if num == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// Nonlinear sources of the extended system.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedRhs {
    pub du: SpectralField,
    pub db: SpectralField,
    pub dj: SpectralField,
}

/// Nonlinear sources of the original `(u, b)` system.
#[derive(Clone, Debug, PartialEq)]
pub struct OriginalRhs {
    pub du: SpectralField,
    pub db: SpectralField,
}

fn finish(f: SpectralField, dealias: bool) -> SpectralField {
    if dealias {
        f.dealiased()
    } else {
        f
    }
}

fn physical_many(fields: &[&SpectralField]) -> Vec<[Vec<f64>; 3]> {
    let n = fields[0].grid().n();
    let mut slices: Vec<&[crate::Complex64]> = Vec::with_capacity(3 * fields.len());
    for f in fields {
        for c in 0..3 {
            slices.push(f.component(c));
        }
    }
    let mut out = fft::inverse_many(&slices, n).into_iter();
    fields.iter().map(|_| [out.next().unwrap(), out.next().unwrap(), out.next().unwrap()]).collect()
}

pub(crate) fn rhs_extended_with(s: &HallState, dealias: bool) -> ExtendedRhs {
    let grid = *s.grid();
    let eps = s.params.epsilon;
    let c = curl_inv_unchecked(&s.j);
    let mut phys = physical_many(&[&s.u, &s.b, &s.j, &c]).into_iter();
    let (u, b, j, c) = (phys.next().unwrap(), phys.next().unwrap(), phys.next().unwrap(), phys.next().unwrap());
    let len = grid.len();
    // v = u − εJ
    let v: [Vec<f64>; 3] = std::array::from_fn(|k| (0..len).map(|i| u[k][i] - eps * j[k][i]).collect());

    // symmetric tensor b⊗b − u⊗u; ½(div(v⊗w) + div(w⊗v)) with v = w is div(v⊗v)
    let mom = Tensor::symmetric(len, |a, bb, i| b[a][i] * b[bb][i] - u[a][i] * u[bb][i]);
    let du = leray_project(&finish(sym_divergence(grid, mom), dealias));

    let db = finish(antisym_divergence(grid, Tensor::antisymmetric(&v, &b)), dealias);
    let qc = finish(antisym_divergence(grid, Tensor::antisymmetric(&v, &c)), dealias);
    let dj = curl(&qc);
    ExtendedRhs { du, db: db.with_divfree(true), dj }
}

/// Sources `(Q_a(b,b) − Q_a(u,u), Q_b(u−εJ, b), ∇×Q_b(u−εJ, curl⁻¹J))`.
pub fn rhs_extended(s: &HallState) -> ExtendedRhs {
    rhs_extended_with(s, true)
}

/// `(f·∇)g` for physical `f` and spectral `g`, returned in physical space.
fn advect(f: &[Vec<f64>; 3], g: &SpectralField) -> [Vec<f64>; 3] {
    let len = g.grid().len();
    let dg: Vec<SpectralField> = (0..3)
        .map(|axis| {
            let mut alpha = [0u32; 3];
            alpha[axis] = 1;
            crate::field::partial(g, alpha)
        })
        .collect();
    let phys = physical_many(&[&dg[0], &dg[1], &dg[2]]);
    std::array::from_fn(|c| (0..len).map(|i| (0..3).map(|k| f[k][i] * phys[k][c][i]).sum()).collect())
}

pub(crate) fn rhs_original_with(s: &HallState, dealias: bool) -> OriginalRhs {
    let grid = *s.grid();
    let eps = s.params.epsilon;
    let len = grid.len();
    let cb = curl(&s.b);
    let mut phys = physical_many(&[&s.u, &s.b, &cb]).into_iter();
    let (u, b, cbp) = (phys.next().unwrap(), phys.next().unwrap(), phys.next().unwrap());

    let bb = advect(&b, &s.b);
    let uu = advect(&u, &s.u);
    let force: [Vec<f64>; 3] = std::array::from_fn(|c| (0..len).map(|i| bb[c][i] - uu[c][i]).collect());
    let du = leray_project(&finish(SpectralField::from_physical(&PhysicalField::new(grid, force).unwrap()), dealias));

    let w: [Vec<f64>; 3] = std::array::from_fn(|c| (0..len).map(|i| u[c][i] - eps * cbp[c][i]).collect());
    let cross = crate::field::cross_physical(&w, &b);
    let prod = if dealias {
        dealiased_from_samples(grid, cross)
    } else {
        SpectralField::from_physical(&PhysicalField::new(grid, cross).unwrap())
    };
    OriginalRhs { du, db: curl(&prod) }
}

/// Sources `(P(b·∇b − u·∇u), ∇×((u − ε∇×b)×b))` computed from `u` and `b`
/// only; the stored current is ignored.
pub fn rhs_original(s: &HallState) -> OriginalRhs {
    rhs_original_with(s, true)
}

/// Adds `κΔ` to each source: `(μΔu, νΔb, νΔJ)`.
pub fn with_diffusion(s: &HallState, rhs: &ExtendedRhs) -> ExtendedRhs {
    let lap = |f: &SpectralField, k: f64| crate::field::laplacian(f).scale(k);
    ExtendedRhs {
        du: rhs.du.add(&lap(&s.u, s.params.mu)).unwrap(),
        db: rhs.db.add(&lap(&s.b, s.params.nu)).unwrap(),
        dj: rhs.dj.add(&lap(&s.j, s.params.nu)).unwrap(),
    }
}

/// Pressure `π` with zero mean, solving `Δπ = div(b·∇b − u·∇u)`.
pub fn pressure_recover(s: &HallState) -> ScalarField {
    let grid = *s.grid();
    let len = grid.len();
    let mut phys = physical_many(&[&s.u, &s.b]).into_iter();
    let (u, b) = (phys.next().unwrap(), phys.next().unwrap());
    let bb = advect(&b, &s.b);
    let uu = advect(&u, &s.u);
    let force: [Vec<f64>; 3] = std::array::from_fn(|c| (0..len).map(|i| bb[c][i] - uu[c][i]).collect());
    let f = dealiased_from_samples(grid, force);
    let d = divergence(&f);
    let t = grid.mode_table();
    let mut out = ScalarField::zeros(grid);
    let c = out.coefficients_mut();
    t.for_each(|idx, ix, iy, iz| {
        let k = t.kvec(ix, iy, iz);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            c[idx] = -d.coefficients()[idx] / k2;
        }
    });
    out
}

/// Unprojected momentum source `b·∇b − u·∇u` (dealiased).
pub fn momentum_force(s: &HallState) -> SpectralField {
    let grid = *s.grid();
    let len = grid.len();
    let mut phys = physical_many(&[&s.u, &s.b]).into_iter();
    let (u, b) = (phys.next().unwrap(), phys.next().unwrap());
    let bb = advect(&b, &s.b);
    let uu = advect(&u, &s.u);
    let force: [Vec<f64>; 3] = std::array::from_fn(|c| (0..len).map(|i| bb[c][i] - uu[c][i]).collect());
    dealiased_from_samples(grid, force)
}

/// Electron velocity `v = u − εJ`.
pub fn electron_velocity(s: &HallState) -> SpectralField {
    s.u.add_scaled(-s.params.epsilon, &s.j).expect("state fields share a grid")
}

/// The two forms of the Hall cancellation, each normalised by
/// `‖∇×v‖²_{L²}‖b‖_{L^∞} + floor`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HallCancellation {
    /// Grid quadrature of `((∇×v)×b)·(∇×v)`.
    pub pointwise: f64,
    /// `⟨∇×P_K((∇×v)×b), v⟩_{L²}` via Parseval.
    pub integrated: f64,
    pub normalization: f64,
}

pub const CANCELLATION_FLOOR: f64 = 1e-300;

pub fn hall_cancellation_residual(v: &SpectralField, b: &SpectralField) -> Result<HallCancellation> {
    if v.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *v.grid();
    let w = curl(v);
    let mut phys = physical_many(&[&w, b]).into_iter();
    let (wp, bp) = (phys.next().unwrap(), phys.next().unwrap());
    let c = crate::field::cross_physical(&wp, &bp);
    let len = grid.len();
    let point = crate::sum::pairwise_sum_by(len, &|i| c[0][i] * wp[0][i] + c[1][i] * wp[1][i] + c[2][i] * wp[2][i])
        * grid.cell_volume();
    let binf = (0..len).map(|i| (bp[0][i].powi(2) + bp[1][i].powi(2) + bp[2][i].powi(2)).sqrt()).fold(0.0, f64::max);
    let norm = w.l2_norm().powi(2) * binf + CANCELLATION_FLOOR;
    let integrated = curl(&dealiased_from_samples(grid, c)).inner(v)?;
    Ok(HallCancellation { pointwise: (point / norm).abs(), integrated: (integrated / norm).abs(), normalization: norm })
}
