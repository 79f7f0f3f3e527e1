//! Dense complex matrices and the Hermitian-operator toolkit everything else
//! is built on: eigendecompositions, PSD checks with explicit tolerances,
//! support projectors, pseudo-inverse square roots, Kronecker products,
//! partial traces, subsystem permutations, and Uhlmann fidelity.
//!
//! Matrices are stored row-major; the JSON encoding is
//! `{"rows": r, "cols": c, "data": [[re, im], ...]}` with `data` row-major.

use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type C64 = num_complex::Complex<f64>;

/// Default absolute tolerance for Hermiticity checks.
pub const HERM_TOL: f64 = 1e-10;
/// Default relative eigenvalue cutoff defining numerical supports/ranks.
pub const RANK_TOL: f64 = 1e-9;
/// Default slack for positive-semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-9;

pub const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub const fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let v = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i  ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cr(1.0);
        }
        m
    }

    /// Builds from a row-major closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from nested real rows (imaginary parts zero).
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c0 = rows.first().map_or(0, |r| r.len());
        Self::from_fn(r, c0, |i, j| cr(rows[i][j]))
    }

    /// Rank-one projector `|v><v|` from an unnormalised vector.
    pub fn projector(v: &[C64]) -> Self {
        let n2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj() / n2)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> CMatrix {
        self.scale(cr(s))
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Hilbert–Schmidt inner product `tr(A† B)`.
    pub fn inner(&self, other: &CMatrix) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Real part of `tr(A† B)`; exact inner product for Hermitian pairs.
    pub fn inner_re(&self, other: &CMatrix) -> f64 {
        self.inner(other).re
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> CMatrix {
        assert!(self.is_square());
        self.add(&self.dagger()).scale_re(0.5)
    }

    fn to_na(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            rows: usize,
            cols: usize,
            data: Vec<[f64; 2]>,
            #[serde(skip)]
            _p: &'a (),
        }
        let data = self.data.iter().map(|z| [z.re, z.im]).collect();
        Repr {
            rows: self.rows,
            cols: self.cols,
            data,
            _p: &(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            rows: usize,
            cols: usize,
            data: Vec<[f64; 2]>,
        }
        let r = Repr::deserialize(d)?;
        if r.data.len() != r.rows * r.cols {
            return Err(D::Error::custom(format!(
                "matrix data has {} entries, expected {}x{}",
                r.data.len(),
                r.rows,
                r.cols
            )));
        }
        Ok(CMatrix {
            rows: r.rows,
            cols: r.cols,
            data: r.data.iter().map(|[re, im]| c(*re, *im)).collect(),
        })
    }
}

/// Square matrix validated (and symmetrised) to be Hermitian.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HermOp {
    mat: CMatrix,
}

impl HermOp {
    /// Checks `‖M − M†‖_max ≤ herm_tol·max(1, ‖M‖_max)`, then stores the
    /// symmetrised part so downstream algebra sees an exactly Hermitian matrix.
    pub fn new(mat: CMatrix, herm_tol: f64) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Dimension(format!(
                "Hermitian operator must be square, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        if !mat.is_hermitian(herm_tol) {
            return Err(Error::Domain(format!(
                "matrix is not Hermitian within tolerance {herm_tol:e}"
            )));
        }
        Ok(HermOp {
            mat: mat.hermitian_part(),
        })
    }

    pub fn new_default(mat: CMatrix) -> Result<Self> {
        Self::new(mat, HERM_TOL)
    }

    /// Wraps a matrix that is Hermitian by construction.
    pub fn from_exact(mat: CMatrix) -> Self {
        debug_assert!(mat.is_hermitian(1e-8));
        HermOp {
            mat: mat.hermitian_part(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        HermOp {
            mat: CMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        HermOp {
            mat: CMatrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix {
        self.mat
    }
}

impl<'de> Deserialize<'de> for HermOp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = CMatrix::deserialize(d)?;
        HermOp::new(m, HERM_TOL).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and a
/// unitary whose columns are the matching eigenvectors.
pub fn eigh(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !h.is_square() {
        return Err(Error::Dimension("eigh needs a square matrix".into()));
    }
    let n = h.rows();
    if n == 0 {
        return Ok((vec![], CMatrix::zeros(0, 0)));
    }
    let na = h.hermitian_part().to_na();
    let eig = na
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Hermitian eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((vals, vecs))
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eig(h: &CMatrix) -> Result<f64> {
    let (vals, _) = eigh(h)?;
    vals.last()
        .copied()
        .ok_or_else(|| Error::Dimension("empty matrix".into()))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig(h: &CMatrix) -> Result<f64> {
    let (vals, _) = eigh(h)?;
    vals.first()
        .copied()
        .ok_or_else(|| Error::Dimension("empty matrix".into()))
}

/// Operator norm (largest absolute eigenvalue) of a Hermitian matrix.
pub fn op_norm(h: &CMatrix) -> Result<f64> {
    let (vals, _) = eigh(h)?;
    Ok(vals.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// `H ⪰ 0` up to slack: `λ_min ≥ −tol·max(1, ‖H‖_op)`.
pub fn is_psd(h: &CMatrix, tol: f64) -> Result<bool> {
    let (vals, _) = eigh(h)?;
    let norm = vals.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(vals.first().map_or(true, |&lo| lo >= -tol * norm.max(1.0)))
}

/// Projection of a Hermitian matrix onto the PSD cone: negative eigenvalues
/// are zeroed. Intended for sanitising solver outputs that are PSD up to
/// numerical noise before feeding them into validated constructors.
pub fn psd_clamp(h: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = eigh(h)?;
    let n = h.rows();
    let mut out = CMatrix::zeros(n, n);
    for k in 0..n {
        if vals[k] <= 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += vecs[(i, k)] * vecs[(j, k)].conj() * cr(vals[k]);
            }
        }
    }
    Ok(out)
}

/// Projector onto eigenspaces of a PSD matrix with eigenvalue
/// `> rank_tol·λ_max`. The zero matrix maps to the zero projector.
pub fn support_projector(h: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    let (vals, vecs) = eigh(h)?;
    let n = h.rows();
    let top = vals.last().copied().unwrap_or(0.0);
    if vals.first().copied().unwrap_or(0.0) < -PSD_TOL * top.max(1.0) {
        return Err(Error::Domain(
            "support projector requested for a matrix with negative eigenvalues".into(),
        ));
    }
    let cutoff = rank_tol * top.max(0.0);
    let mut p = CMatrix::zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        if v > cutoff && v > 0.0 {
            let col: Vec<C64> = (0..n).map(|i| vecs[(i, k)]).collect();
            for i in 0..n {
                for j in 0..n {
                    p[(i, j)] += col[i] * col[j].conj();
                }
            }
        }
    }
    Ok(p)
}

/// `(√H, H^{-1/2} on supp H)` for PSD `H`, with eigenvalues below
/// `rank_tol·λ_max` treated as zero.
pub fn pinv_sqrt(h: &CMatrix, rank_tol: f64) -> Result<(CMatrix, CMatrix)> {
    let (vals, vecs) = eigh(h)?;
    let n = h.rows();
    let top = vals.last().copied().unwrap_or(0.0);
    if vals.first().copied().unwrap_or(0.0) < -PSD_TOL * top.max(1.0) {
        return Err(Error::Domain("pinv_sqrt needs a PSD matrix".into()));
    }
    let cutoff = rank_tol * top.max(0.0);
    let mut sqrt = CMatrix::zeros(n, n);
    let mut inv_sqrt = CMatrix::zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        if v <= cutoff || v <= 0.0 {
            continue;
        }
        let col: Vec<C64> = (0..n).map(|i| vecs[(i, k)]).collect();
        let (s, si) = (v.sqrt(), 1.0 / v.sqrt());
        for i in 0..n {
            for j in 0..n {
                let outer = col[i] * col[j].conj();
                sqrt[(i, j)] += outer * cr(s);
                inv_sqrt[(i, j)] += outer * cr(si);
            }
        }
    }
    Ok((sqrt, inv_sqrt))
}

/// Which tensor factor `partial_trace` keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of an operator on `C^{dA} ⊗ C^{dB}` (composite index
/// `a·dB + b`), keeping the requested factor.
pub fn partial_trace(m: &CMatrix, da: usize, db: usize, keep: Keep) -> Result<CMatrix> {
    if m.rows() != da * db || !m.is_square() {
        return Err(Error::Dimension(format!(
            "partial trace: operator is {}x{}, expected {0}x{0} with {0} = {da}*{db}",
            m.rows(),
            m.cols()
        )));
    }
    match keep {
        Keep::First => {
            let mut out = CMatrix::zeros(da, da);
            for a in 0..da {
                for ap in 0..da {
                    let mut s = cr(0.0);
                    for b in 0..db {
                        s += m[(a * db + b, ap * db + b)];
                    }
                    out[(a, ap)] = s;
                }
            }
            Ok(out)
        }
        Keep::Second => {
            let mut out = CMatrix::zeros(db, db);
            for b in 0..db {
                for bp in 0..db {
                    let mut s = cr(0.0);
                    for a in 0..da {
                        s += m[(a * db + b, a * db + bp)];
                    }
                    out[(b, bp)] = s;
                }
            }
            Ok(out)
        }
    }
}

/// Reorders tensor factors: `perm[new_slot] = old_slot`, so factor
/// `perm[k]` of the input becomes factor `k` of the output.
pub fn permute_systems(m: &CMatrix, dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if m.rows() != total || !m.is_square() {
        return Err(Error::Dimension(
            "permute_systems: operator size does not match subsystem dims".into(),
        ));
    }
    if perm.len() != dims.len() {
        return Err(Error::Dimension(
            "permute_systems: permutation length mismatch".into(),
        ));
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::Domain("permute_systems: not a permutation".into()));
        }
        seen[p] = true;
    }
    let k = dims.len();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    // old multi-index for a flat old index
    let decompose = |mut idx: usize| -> Vec<usize> {
        let mut digits = vec![0usize; k];
        for slot in (0..k).rev() {
            digits[slot] = idx % dims[slot];
            idx /= dims[slot];
        }
        digits
    };
    let recompose = |digits: &[usize]| -> usize {
        let mut idx = 0;
        for slot in 0..k {
            idx = idx * new_dims[slot] + digits[perm[slot]];
        }
        idx
    };
    let mut out = CMatrix::zeros(total, total);
    for i in 0..total {
        let di = decompose(i);
        let ni = recompose(&di);
        for j in 0..total {
            let dj = decompose(j);
            out[(ni, recompose(&dj))] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Uhlmann fidelity `F(ρ,σ) = (tr √(√ρ σ √ρ))²` of two density matrices.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    for (name, m) in [("first", rho), ("second", sigma)] {
        if !is_psd(m, 1e-8)? {
            return Err(Error::Domain(format!("{name} argument is not PSD")));
        }
        if (m.trace().re - 1.0).abs() > 1e-8 || m.trace().im.abs() > 1e-10 {
            return Err(Error::Domain(format!("{name} argument is not unit trace")));
        }
    }
    if rho.rows() != sigma.rows() {
        return Err(Error::Dimension("fidelity: dimension mismatch".into()));
    }
    let (s, _) = pinv_sqrt(&rho.hermitian_part(), 0.0)?;
    let inner = s.matmul(sigma).matmul(&s).hermitian_part();
    let (vals, _) = eigh(&inner)?;
    let root_sum: f64 = vals.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).min(1.0))
}

// ---------------------------------------------------------------------------
// Real coordinates for Hermitian matrices.
//
// A Hermitian d×d matrix has d² real coordinates in the orthonormal basis
// {E_ii} ∪ {(E_ij+E_ji)/√2, i(E_ij−E_ji)/√2 : i<j}: first the d diagonal
// entries, then for each pair (i<j) in lexicographic order the scaled real
// and imaginary parts (√2·Re H_ij, √2·Im H_ij). Coordinate vectors are
// isometric: hvec(A)·hvec(B) = tr(AB).
// ---------------------------------------------------------------------------

/// Number of real coordinates of a Hermitian d×d matrix.
pub fn hvec_len(d: usize) -> usize {
    d * d
}

/// Real coordinate vector of a Hermitian matrix.
pub fn hvec(h: &CMatrix) -> Vec<f64> {
    let d = h.rows();
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        v.push(h[(i, i)].re);
    }
    let s = std::f64::consts::SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            v.push(s * h[(i, j)].re);
            v.push(s * h[(i, j)].im);
        }
    }
    v
}

/// Inverse of [`hvec`].
pub fn unhvec(d: usize, v: &[f64]) -> CMatrix {
    assert_eq!(v.len(), d * d);
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = cr(v[i]);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let (re, im) = (v[k] * s, v[k + 1] * s);
            m[(i, j)] = c(re, im);
            m[(j, i)] = c(re, -im);
            k += 2;
        }
    }
    m
}

/// The `k`-th orthonormal Hermitian basis matrix for dimension `d`.
pub fn hvec_basis(d: usize, k: usize) -> CMatrix {
    let mut v = vec![0.0; d * d];
    v[k] = 1.0;
    unhvec(d, &v)
}
