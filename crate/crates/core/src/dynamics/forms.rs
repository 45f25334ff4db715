use crate::fft;
use crate::field::{leray_project, Grid, SpectralField};
use crate::{Complex64, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Physical samples of a rank-2 tensor with symmetric (6 stored entries) or
/// antisymmetric (3 stored entries: 12, 13, 23) structure.
pub(crate) struct Tensor(Vec<Vec<f64>>);

const SYM: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

impl Tensor {
    pub(crate) fn symmetric(len: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        Tensor(SYM.iter().map(|&(a, b)| (0..len).map(|i| f(a, b, i)).collect()).collect())
    }

    /// `A^{jk} = v^j w^k − w^j v^k`
    pub(crate) fn antisymmetric(v: &[Vec<f64>; 3], w: &[Vec<f64>; 3]) -> Self {
        let len = v[0].len();
        let entry = |a: usize, b: usize| -> Vec<f64> { (0..len).map(|i| v[a][i] * w[b][i] - w[a][i] * v[b][i]).collect() };
        Tensor(vec![entry(0, 1), entry(0, 2), entry(1, 2)])
    }

    fn forward(&self, n: usize) -> Vec<Vec<Complex64>> {
        let s: Vec<&[f64]> = self.0.iter().map(|v| v.as_slice()).collect();
        fft::forward_many(&s, n)
    }
}

/// `(div T)^j = Σ_k ∂_k T^{jk}` for symmetric `T`.
pub(crate) fn sym_divergence(grid: Grid, t: Tensor) -> SpectralField {
    let h = t.forward(grid.n());
    let at = |a: usize, b: usize, idx: usize| {
        let pos = SYM.iter().position(|&(x, y)| (x, y) == (a.min(b), a.max(b))).unwrap();
        h[pos][idx]
    };
    let mt = grid.mode_table();
    let mut out = SpectralField::zeros(grid);
    {
        let comps = out.components_mut();
        mt.for_each(|idx, ix, iy, iz| {
            let k = mt.kdvec(ix, iy, iz);
            for j in 0..3 {
                comps[j][idx] = I * (at(j, 0, idx) * k[0] + at(j, 1, idx) * k[1] + at(j, 2, idx) * k[2]);
            }
        });
    }
    out
}

/// `(div A)^j = Σ_k ∂_k A^{jk}` for antisymmetric `A`.
pub(crate) fn antisym_divergence(grid: Grid, t: Tensor) -> SpectralField {
    let h = t.forward(grid.n());
    let mt = grid.mode_table();
    let mut out = SpectralField::zeros(grid);
    {
        let comps = out.components_mut();
        mt.for_each(|idx, ix, iy, iz| {
            let k = mt.kdvec(ix, iy, iz);
            let (a12, a13, a23) = (h[0][idx], h[1][idx], h[2][idx]);
            comps[0][idx] = I * (a12 * k[1] + a13 * k[2]);
            comps[1][idx] = I * (a23 * k[2] - a12 * k[0]);
            comps[2][idx] = I * (-(a13 * k[0]) - a23 * k[1]);
        });
    }
    out
}

/// `Q_a(v, w) = ½P(div(v⊗w) + div(w⊗v))`, dealiased.
pub fn q_a(v: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    if v.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *v.grid();
    let pv = v.to_physical();
    let pw = w.to_physical();
    let (a, b) = (pv.components(), pw.components());
    let t = Tensor::symmetric(grid.len(), |x, y, i| 0.5 * (a[x][i] * b[y][i] + b[x][i] * a[y][i]));
    Ok(leray_project(&sym_divergence(grid, t).dealiased()))
}

/// `Q_b(v, w) = div(v⊗w) − div(w⊗v)`, dealiased.
pub fn q_b(v: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    if v.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *v.grid();
    let pv = v.to_physical();
    let pw = w.to_physical();
    Ok(antisym_divergence(grid, Tensor::antisymmetric(pv.components(), pw.components())).dealiased())
}
