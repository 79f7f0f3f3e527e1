//! Conic-program model and solver bridge.
//!
//! Programs are stated over real scalar variables and Hermitian matrix
//! variables, with affine Hermitian-valued expressions entering PSD and
//! equality constraints. Lowering to the interior-point backend works in
//! real coordinates:
//!
//! * Hermitian variables are their `hvec` coordinates (orthonormal, so the
//!   trace pairing is the dot product);
//! * operator equalities become rows in a zero cone, one per coordinate;
//! * a PSD constraint on a complex expression becomes a PSD-triangle cone on
//!   the real symmetric *realification* `[[Re H, −Im H], [Im H, Re H]]`,
//!   which is PSD exactly when `H` is;
//! * every constraint row uses `A[:,j] = −coords(F_j)`, `b = coords(F_0)`
//!   for the expression `F_0 + Σ_j x_j F_j`, so the slack equals the
//!   expression's coordinates.
//!
//! Results carry primal values, dual multipliers mapped back to complex
//! matrices, and feasibility residuals; optimal solves are accepted only
//! after the residuals and the primal–dual gap pass the requested
//! tolerances. On top of the generic model this module provides the named
//! programs used by the monotone layer: the projective primal/dual pair,
//! the support pre-check deciding finiteness, robustness and weight
//! programs, cone membership, dual-cone tests, and linear-fractional
//! maximisation via the Charnes–Cooper normalisation.

use crate::cones::{ConeSpec, HermLinMap};
use crate::linalg::{
    hvec, hvec_basis, hvec_len, min_eig, op_norm, support_projector, unhvec, CMatrix, RANK_TOL,
};
use crate::{Error, Result};
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus,
    SupportedConeT::{self, NonnegativeConeT, PSDTriangleConeT, ZeroConeT},
};
use serde::{Deserialize, Serialize};

/// Threshold on the support pre-check value below which the projective
/// objective is declared infinite.
pub const SUPPORT_TAU_TOL: f64 = 1e-8;

/// Solver and certificate tolerances.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverOpts {
    /// Residual tolerance for accepting a claimed-optimal solution
    /// (scaled by the constant terms of the program).
    pub feas_tol: f64,
    /// Primal–dual gap tolerance, relative to `max(1, |value|)`.
    pub gap_tol: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for SolverOpts {
    fn default() -> Self {
        SolverOpts {
            feas_tol: 1e-7,
            gap_tol: 1e-6,
            max_iter: 500,
            verbose: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Min,
    Max,
}

/// Handle to a scalar decision variable.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScalarVar(usize);

/// Handle to a Hermitian matrix decision variable (a block of `hvec`
/// coordinates).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HermVar {
    start: usize,
    pub dim: usize,
}

/// Real affine functional of the decision variables.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AffineReal {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineReal {
    pub fn zero() -> Self {
        AffineReal::default()
    }

    pub fn from_scalar(v: ScalarVar, coeff: f64) -> Self {
        AffineReal {
            constant: 0.0,
            terms: vec![(v.0, coeff)],
        }
    }

    pub fn add_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn add_scalar(mut self, v: ScalarVar, coeff: f64) -> Self {
        self.terms.push((v.0, coeff));
        self
    }

    pub fn plus(mut self, other: &AffineReal) -> Self {
        self.constant += other.constant;
        self.terms.extend(other.terms.iter().copied());
        self
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.constant *= s;
        self.terms.iter_mut().for_each(|t| t.1 *= s);
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }
}

/// Hermitian-matrix-valued affine expression `F_0 + Σ_j x_j F_j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineHerm {
    pub dim: usize,
    constant: CMatrix,
    terms: Vec<(usize, CMatrix)>,
}

impl AffineHerm {
    pub fn zero(dim: usize) -> Self {
        AffineHerm {
            dim,
            constant: CMatrix::zeros(dim, dim),
            terms: vec![],
        }
    }

    pub fn from_const(m: &CMatrix) -> Self {
        AffineHerm {
            dim: m.rows(),
            constant: m.clone(),
            terms: vec![],
        }
    }

    pub fn add_const(mut self, m: &CMatrix) -> Self {
        assert_eq!(m.rows(), self.dim);
        self.constant = self.constant.add(m);
        self
    }

    /// Adds `coeff · v` for a scalar variable.
    pub fn add_scalar(mut self, v: ScalarVar, coeff: &CMatrix) -> Self {
        assert_eq!(coeff.rows(), self.dim);
        self.terms.push((v.0, coeff.clone()));
        self
    }

    /// Adds `scale · V` for a Hermitian variable of matching dimension.
    pub fn add_herm(mut self, v: &HermVar, scale: f64) -> Self {
        assert_eq!(v.dim, self.dim);
        for k in 0..hvec_len(v.dim) {
            self.terms
                .push((v.start + k, hvec_basis(v.dim, k).scale_re(scale)));
        }
        self
    }

    /// Adds `scale · map(V)` for a Hermitian variable.
    pub fn add_mapped(mut self, v: &HermVar, map: &HermLinMap, scale: f64) -> Self {
        assert_eq!(map.dim_in, v.dim);
        assert_eq!(map.dim_out, self.dim);
        let (ni, no) = (hvec_len(map.dim_in), hvec_len(map.dim_out));
        for k in 0..ni {
            let col: Vec<f64> = (0..no).map(|r| map.coeff(r, k)).collect();
            if col.iter().all(|&v| v == 0.0) {
                continue;
            }
            self.terms
                .push((v.start + k, unhvec(map.dim_out, &col).scale_re(scale)));
        }
        self
    }

    pub fn neg(mut self) -> Self {
        self.constant = self.constant.scale_re(-1.0);
        for t in &mut self.terms {
            t.1 = t.1.scale_re(-1.0);
        }
        self
    }

    pub fn plus(mut self, other: &AffineHerm) -> Self {
        assert_eq!(self.dim, other.dim);
        self.constant = self.constant.add(&other.constant);
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn minus(self, other: &AffineHerm) -> Self {
        self.plus(&other.clone().neg())
    }

    /// Applies a real-linear matrix map to the whole expression (constant
    /// and coefficients alike), e.g. `X ↦ X − ΠXΠ`.
    pub fn map_linear(mut self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        self.constant = f(&self.constant);
        for t in &mut self.terms {
            t.1 = f(&t.1);
        }
        self.dim = self.constant.rows();
        self
    }

    /// The real affine functional `tr(expr)`.
    pub fn trace_aff(&self) -> AffineReal {
        AffineReal {
            constant: self.constant.trace().re,
            terms: self.terms.iter().map(|(j, f)| (*j, f.trace().re)).collect(),
        }
    }

    /// The real affine functional `⟨w, expr⟩` (trace inner product).
    pub fn inner_aff(&self, w: &CMatrix) -> AffineReal {
        AffineReal {
            constant: w.inner_re(&self.constant),
            terms: self
                .terms
                .iter()
                .map(|(j, f)| (*j, w.inner_re(f)))
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> CMatrix {
        let mut acc = self.constant.clone();
        for (j, f) in &self.terms {
            acc = acc.add(&f.scale_re(x[*j]));
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Outcome of a solve, in the user's objective sense.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub value: f64,
    pub dual_value: f64,
    /// `|value − dual_value|`.
    pub gap: f64,
    x: Vec<f64>,
    /// Complex dual multipliers, one per PSD constraint (in order).
    pub psd_duals: Vec<CMatrix>,
    /// Complex dual multipliers, one per operator equality (in order).
    pub eq_op_duals: Vec<CMatrix>,
    /// Worst equality residual at the returned point.
    pub max_eq_residual: f64,
    /// Most negative eigenvalue over all PSD constraints (`0` if none).
    pub min_psd_eig: f64,
}

impl SolveResult {
    pub fn scalar(&self, v: ScalarVar) -> f64 {
        self.x[v.0]
    }

    pub fn herm(&self, v: &HermVar) -> CMatrix {
        unhvec(v.dim, &self.x[v.start..v.start + hvec_len(v.dim)])
    }

    pub fn eval_herm(&self, e: &AffineHerm) -> CMatrix {
        e.eval(&self.x)
    }

    pub fn eval_real(&self, e: &AffineReal) -> f64 {
        e.eval(&self.x)
    }
}

/// A conic program over scalar and Hermitian variables. Serialises to JSON
/// for inspection and round-tripping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConicProgram {
    n_cols: usize,
    sense: Sense,
    objective: AffineReal,
    psd: Vec<AffineHerm>,
    eq_ops: Vec<AffineHerm>,
    eq_scalars: Vec<AffineReal>,
    nonneg: Vec<AffineReal>,
}

impl ConicProgram {
    pub fn new(sense: Sense) -> Self {
        ConicProgram {
            n_cols: 0,
            sense,
            objective: AffineReal::zero(),
            psd: vec![],
            eq_ops: vec![],
            eq_scalars: vec![],
            nonneg: vec![],
        }
    }

    pub fn minimize() -> Self {
        Self::new(Sense::Min)
    }

    pub fn maximize() -> Self {
        Self::new(Sense::Max)
    }

    pub fn scalar(&mut self) -> ScalarVar {
        let v = ScalarVar(self.n_cols);
        self.n_cols += 1;
        v
    }

    pub fn herm(&mut self, dim: usize) -> HermVar {
        let v = HermVar {
            start: self.n_cols,
            dim,
        };
        self.n_cols += hvec_len(dim);
        v
    }

    pub fn require_psd(&mut self, e: AffineHerm) {
        self.psd.push(e);
    }

    pub fn require_eq_zero(&mut self, e: AffineHerm) {
        self.eq_ops.push(e);
    }

    pub fn require_scalar_eq_zero(&mut self, e: AffineReal) {
        self.eq_scalars.push(e);
    }

    pub fn require_nonneg(&mut self, e: AffineReal) {
        self.nonneg.push(e);
    }

    pub fn set_objective(&mut self, e: AffineReal) {
        self.objective = e;
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("program serialisation cannot fail")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        serde_json::from_value(v.clone())
            .map_err(|e| Error::Config(format!("bad conic program JSON: {e}")))
    }

    fn rows_total(&self) -> usize {
        self.eq_scalars.len()
            + self.eq_ops.iter().map(|e| hvec_len(e.dim)).sum::<usize>()
            + self.nonneg.len()
            + self.psd.iter().map(|e| tri_len(2 * e.dim)).sum::<usize>()
    }

    /// Lowers, solves, extracts, and (for claimed-optimal outcomes) verifies
    /// residuals and gap against `opts`.
    pub fn solve(&self, opts: &SolverOpts) -> Result<SolveResult> {
        let n = self.n_cols;
        let m = self.rows_total();
        let mut a = vec![0.0f64; m * n];
        let mut b = vec![0.0f64; m];
        let mut cones: Vec<SupportedConeT<f64>> = vec![];
        let mut row = 0usize;

        // scalar equalities
        if !self.eq_scalars.is_empty() {
            for e in &self.eq_scalars {
                b[row] = e.constant;
                for &(j, cf) in &e.terms {
                    a[row * n + j] -= cf;
                }
                row += 1;
            }
            cones.push(ZeroConeT(self.eq_scalars.len()));
        }
        // operator equalities, one zero-cone block per equality
        for e in &self.eq_ops {
            let hl = hvec_len(e.dim);
            let coords = hvec(&e.constant);
            b[row..row + hl].copy_from_slice(&coords);
            for (j, f) in &e.terms {
                let fc = hvec(f);
                for (r, v) in fc.iter().enumerate() {
                    a[(row + r) * n + j] -= v;
                }
            }
            row += hl;
            cones.push(ZeroConeT(hl));
        }
        // scalar inequalities
        if !self.nonneg.is_empty() {
            for e in &self.nonneg {
                b[row] = e.constant;
                for &(j, cf) in &e.terms {
                    a[row * n + j] -= cf;
                }
                row += 1;
            }
            cones.push(NonnegativeConeT(self.nonneg.len()));
        }
        // PSD constraints on realified expressions
        for e in &self.psd {
            let nr = 2 * e.dim;
            let sl = tri_len(nr);
            svec_realified_into(&e.constant, &mut b[row..row + sl]);
            let mut col_buf = vec![0.0; sl];
            for (j, f) in &e.terms {
                svec_realified_into(f, &mut col_buf);
                for (r, v) in col_buf.iter().enumerate() {
                    a[(row + r) * n + j] -= v;
                }
            }
            row += sl;
            cones.push(PSDTriangleConeT(nr));
        }
        debug_assert_eq!(row, m);

        // objective: lowered problem always minimises
        let sgn = match self.sense {
            Sense::Min => 1.0,
            Sense::Max => -1.0,
        };
        let mut q = vec![0.0f64; n];
        for &(j, cf) in &self.objective.terms {
            q[j] += sgn * cf;
        }

        let a_csc = dense_to_csc(&a, m, n);
        let p_csc = CscMatrix::<f64>::zeros((n, n));
        let settings = DefaultSettings {
            verbose: opts.verbose,
            max_iter: opts.max_iter,
            tol_gap_abs: 1e-10,
            tol_gap_rel: 1e-10,
            tol_feas: 1e-9,
            ..Default::default()
        };
        let mut solver = DefaultSolver::new(&p_csc, &q, &a_csc, &b, &cones, settings)
            .map_err(|e| Error::Numerical(format!("solver rejected problem data: {e:?}")))?;
        solver.solve();
        let sol = &solver.solution;

        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            other => {
                return Err(Error::Numerical(format!(
                    "interior-point solve failed with status {other:?}"
                )))
            }
        };

        if status != SolveStatus::Optimal {
            return Ok(SolveResult {
                status,
                value: f64::NAN,
                dual_value: f64::NAN,
                gap: f64::NAN,
                x: vec![],
                psd_duals: vec![],
                eq_op_duals: vec![],
                max_eq_residual: f64::NAN,
                min_psd_eig: f64::NAN,
            });
        }

        let x = sol.x.clone();
        let value = sgn * sol.obj_val + self.objective.constant;
        let dual_value = sgn * sol.obj_val_dual + self.objective.constant;
        let gap = (value - dual_value).abs();

        // slice duals back out in cone order
        let mut psd_duals = Vec::with_capacity(self.psd.len());
        let mut eq_op_duals = Vec::with_capacity(self.eq_ops.len());
        {
            let z = &sol.z;
            let mut off = 0usize;
            if !self.eq_scalars.is_empty() {
                off += self.eq_scalars.len();
            }
            for e in &self.eq_ops {
                let hl = hvec_len(e.dim);
                eq_op_duals.push(unhvec(e.dim, &z[off..off + hl]));
                off += hl;
            }
            if !self.nonneg.is_empty() {
                off += self.nonneg.len();
            }
            for e in &self.psd {
                let sl = tri_len(2 * e.dim);
                psd_duals.push(herm_dual_from_svec(&z[off..off + sl], e.dim));
                off += sl;
            }
        }

        // Residuals at the extracted point, judged relative to the size of
        // what the solver actually built: a solution with entries of size s
        // satisfies its constraints to small multiples of s, not of the
        // constant terms, so the evaluated constraint norms join the scale.
        let mut scale = 1.0f64;
        for e in self.eq_ops.iter().chain(self.psd.iter()) {
            scale = scale.max(e.constant.max_abs());
        }
        for e in self.eq_scalars.iter().chain(self.nonneg.iter()) {
            scale = scale.max(e.constant.abs());
        }
        let mut max_eq = 0.0f64;
        for e in &self.eq_scalars {
            max_eq = max_eq.max(e.eval(&x).abs());
        }
        for e in &self.eq_ops {
            max_eq = max_eq.max(e.eval(&x).max_abs());
        }
        let mut min_psd = 0.0f64;
        for e in &self.nonneg {
            min_psd = min_psd.min(e.eval(&x));
        }
        for e in &self.psd {
            let m = e.eval(&x).hermitian_part();
            scale = scale.max(op_norm(&m)?);
            min_psd = min_psd.min(min_eig(&m)?);
        }

        let res = SolveResult {
            status,
            value,
            dual_value,
            gap,
            x,
            psd_duals,
            eq_op_duals,
            max_eq_residual: max_eq,
            min_psd_eig: min_psd,
        };
        if max_eq > opts.feas_tol * scale {
            return Err(Error::Numerical(format!(
                "equality residual {max_eq:.3e} exceeds tolerance (scale {scale:.3e})"
            )));
        }
        if min_psd < -opts.feas_tol * scale {
            return Err(Error::Numerical(format!(
                "PSD constraint violated by {:.3e} (scale {scale:.3e})",
                -min_psd
            )));
        }
        if gap > opts.gap_tol * value.abs().max(1.0) {
            return Err(Error::Numerical(format!(
                "primal-dual gap {gap:.3e} exceeds tolerance at value {value:.6}"
            )));
        }
        Ok(res)
    }
}

fn tri_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Writes `svec(realify(h))` into `out`: upper triangle, column-major,
/// off-diagonal entries scaled by √2 (the backend's PSD-triangle packing,
/// which makes the svec dot product equal the matrix inner product).
fn svec_realified_into(h: &CMatrix, out: &mut [f64]) {
    let d = h.rows();
    let n = 2 * d;
    debug_assert_eq!(out.len(), tri_len(n));
    let sq2 = std::f64::consts::SQRT_2;
    // realified entry (r, c): block pattern [[Re, −Im], [Im, Re]]
    let entry = |r: usize, cc: usize| -> f64 {
        let v = h[(r % d, cc % d)];
        match (r >= d, cc >= d) {
            (false, false) | (true, true) => v.re,
            (false, true) => -v.im,
            (true, false) => v.im,
        }
    };
    let mut k = 0;
    for ccol in 0..n {
        for r in 0..=ccol {
            out[k] = if r == ccol {
                entry(r, ccol)
            } else {
                entry(r, ccol) * sq2
            };
            k += 1;
        }
    }
}

/// Maps a PSD-triangle dual block back to the complex multiplier `W` with
/// `⟨realify(F), Z⟩ = ⟨F, W⟩` for all Hermitian `F`:
/// `W = (Z₁₁ + Z₂₂) + i(Z₂₁ − Z₁₂)`.
fn herm_dual_from_svec(z: &[f64], d: usize) -> CMatrix {
    let n = 2 * d;
    debug_assert_eq!(z.len(), tri_len(n));
    let sq2 = std::f64::consts::SQRT_2;
    let mut zm = vec![0.0f64; n * n];
    let mut k = 0;
    for c in 0..n {
        for r in 0..=c {
            let v = z[k];
            k += 1;
            if r == c {
                zm[r * n + c] = v;
            } else {
                zm[r * n + c] = v / sq2;
                zm[c * n + r] = v / sq2;
            }
        }
    }
    CMatrix::from_fn(d, d, |i, j| {
        crate::linalg::c(
            zm[i * n + j] + zm[(i + d) * n + (j + d)],
            zm[(i + d) * n + j] - zm[i * n + (j + d)],
        )
    })
    .hermitian_part()
}

fn dense_to_csc(a: &[f64], m: usize, n: usize) -> CscMatrix<f64> {
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = vec![];
    let mut nzval = vec![];
    colptr.push(0);
    for j in 0..n {
        for i in 0..m {
            let v = a[i * n + j];
            if v != 0.0 {
                rowval.push(i);
                nzval.push(v);
            }
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

// ---------------------------------------------------------------------------
// Cone installation
// ---------------------------------------------------------------------------

/// Parameter-block variables of a cone installed into a program.
pub struct ConeVars {
    pub params: Vec<HermVar>,
}

/// Adds the cone's parameter blocks (PSD-constrained) and operator
/// equalities to the program.
pub fn install_cone(p: &mut ConicProgram, spec: &ConeSpec) -> ConeVars {
    let params: Vec<HermVar> = spec.block_dims.iter().map(|&d| p.herm(d)).collect();
    for v in &params {
        p.require_psd(AffineHerm::zero(v.dim).add_herm(v, 1.0));
    }
    for eq in &spec.equalities {
        let mut e = AffineHerm::zero(eq.dim);
        for (b, m) in eq.maps.iter().enumerate() {
            if let Some(m) = m {
                e = e.add_mapped(&params[b], m, 1.0);
            }
        }
        p.require_eq_zero(e);
    }
    ConeVars { params }
}

/// Affine expressions for the cone's assembled slots.
pub fn cone_slot_exprs(spec: &ConeSpec, vars: &ConeVars) -> Vec<AffineHerm> {
    let dims = spec.slot_dims();
    dims.iter()
        .enumerate()
        .map(|(s, &sd)| {
            let mut e = AffineHerm::zero(sd);
            for (b, m) in spec.assembly[s].iter().enumerate() {
                if let Some(m) = m {
                    e = e.add_mapped(&vars.params[b], m, 1.0);
                }
            }
            e
        })
        .collect()
}

/// The affine normaliser `Σ_s tr(slot_s) / divisor`.
pub fn normalizer_aff(spec: &ConeSpec, slots: &[AffineHerm]) -> AffineReal {
    let mut acc = AffineReal::zero();
    for s in slots {
        acc = acc.plus(&s.trace_aff());
    }
    acc.scale(1.0 / spec.kind.normalizer_divisor())
}

fn check_target(spec: &ConeSpec, t: &[CMatrix]) -> Result<()> {
    let dims = spec.slot_dims();
    if t.len() != dims.len() {
        return Err(Error::Dimension(format!(
            "target has {} slots, cone expects {}",
            t.len(),
            dims.len()
        )));
    }
    for (s, m) in t.iter().enumerate() {
        if m.rows() != dims[s] || m.cols() != dims[s] {
            return Err(Error::Dimension(format!(
                "target slot {s} is {}×{}, cone expects {}×{}",
                m.rows(),
                m.cols(),
                dims[s],
                dims[s]
            )));
        }
        if !m.is_hermitian(crate::linalg::HERM_TOL) {
            return Err(Error::Domain(format!("target slot {s} is not Hermitian")));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Named programs
// ---------------------------------------------------------------------------

/// Result of the support pre-check: the largest `τ` such that some
/// normalised cone element is supported exactly on the target's support
/// with `X_s ⪰ τ·Π_s`. The projective objective is finite iff `τ > 0`.
#[derive(Clone, Debug)]
pub struct SupportCheck {
    pub tau: f64,
    pub finite: bool,
}

/// Decides finiteness of the projective programs by maximising the support
/// margin `τ`.
pub fn support_precheck(spec: &ConeSpec, t: &[CMatrix], opts: &SolverOpts) -> Result<SupportCheck> {
    check_target(spec, t)?;
    let mut p = ConicProgram::maximize();
    let tau = p.scalar();
    // τ ≥ 0 makes every slot PSD (X_s ⪰ τΠ_s ⪰ 0), so containment in the
    // support reduces to the single scalar equality tr(Π⊥ X_s Π⊥) = 0 per
    // slot — far fewer (and non-redundant) equality rows than the matrix
    // form X_s = Π X_s Π, which interior-point solvers handle poorly.
    p.require_nonneg(AffineReal::from_scalar(tau, 1.0));
    let vars = install_cone(&mut p, spec);
    let slots = cone_slot_exprs(spec, &vars);
    let mut norm = AffineReal::zero();
    for (s, slot) in slots.iter().enumerate() {
        let pi = support_projector(&t[s].hermitian_part(), RANK_TOL)?;
        let pi_perp = CMatrix::identity(pi.rows()).sub(&pi);
        // support containment: tr(Π⊥ X_s Π⊥) = 0
        let leak = slot
            .clone()
            .map_linear(|m| pi_perp.matmul(m).matmul(&pi_perp))
            .trace_aff();
        p.require_scalar_eq_zero(leak);
        // margin: X_s − τ Π ⪰ 0
        p.require_psd(slot.clone().add_scalar(tau, &pi.scale_re(-1.0)));
        norm = norm.plus(&slot.trace_aff());
    }
    // Compactness: Σ_s tr X_s ≤ 1 via an explicit slack. The inequality
    // keeps the program feasible (X = 0, τ = 0) even when no cone element
    // fits inside the support — the equality variant is infeasible there,
    // which interior-point solvers certify unreliably. Scaling X scales the
    // attainable τ, so the optimum still sits at trace 1 whenever τ* > 0.
    let slack = p.scalar();
    p.require_nonneg(AffineReal::from_scalar(slack, 1.0));
    p.require_scalar_eq_zero(norm.add_scalar(slack, 1.0).add_const(-1.0));
    p.set_objective(AffineReal::from_scalar(tau, 1.0));
    let res = p.solve(opts)?;
    match res.status {
        SolveStatus::Optimal => Ok(SupportCheck {
            tau: res.value,
            finite: res.value > SUPPORT_TAU_TOL,
        }),
        SolveStatus::Infeasible => Ok(SupportCheck {
            tau: 0.0,
            finite: false,
        }),
        SolveStatus::Unbounded => Err(Error::Numerical(
            "support pre-check reported unbounded, which should be impossible".into(),
        )),
    }
}

/// Primal projective solve: the optimal `γ` with `T ⪯ X ⪯ γT` over the cone,
/// plus the optimiser and its normaliser value.
#[derive(Clone, Debug)]
pub struct ProjectivePrimal {
    pub gamma: f64,
    pub x_slots: Vec<CMatrix>,
    pub params: Vec<CMatrix>,
    /// Normaliser of the optimiser (the scale `λ` splitting `γ = λ·μ`).
    pub lambda: f64,
    pub gap: f64,
}

/// Solves the projective primal. `Ok(None)` means infeasible (value `+∞`).
pub fn solve_projective_primal(
    spec: &ConeSpec,
    t: &[CMatrix],
    opts: &SolverOpts,
) -> Result<Option<ProjectivePrimal>> {
    check_target(spec, t)?;
    let mut p = ConicProgram::minimize();
    let gamma = p.scalar();
    let vars = install_cone(&mut p, spec);
    let slots = cone_slot_exprs(spec, &vars);
    for (s, slot) in slots.iter().enumerate() {
        // X_s − T_s ⪰ 0
        p.require_psd(slot.clone().add_const(&t[s].scale_re(-1.0)));
        // γ T_s − X_s ⪰ 0
        p.require_psd(slot.clone().neg().add_scalar(gamma, &t[s]));
    }
    p.set_objective(AffineReal::from_scalar(gamma, 1.0));
    let res = p.solve(opts)?;
    match res.status {
        SolveStatus::Optimal => {
            let x_slots: Vec<CMatrix> = slots.iter().map(|e| res.eval_herm(e)).collect();
            let params: Vec<CMatrix> = vars.params.iter().map(|v| res.herm(v)).collect();
            let lambda = x_slots.iter().map(|m| m.trace().re).sum::<f64>()
                / spec.kind.normalizer_divisor();
            Ok(Some(ProjectivePrimal {
                gamma: res.value,
                x_slots,
                params,
                lambda,
                gap: res.gap,
            }))
        }
        SolveStatus::Infeasible => Ok(None),
        SolveStatus::Unbounded => Err(Error::Numerical(
            "projective primal reported unbounded below, which should be impossible".into(),
        )),
    }
}

/// Dual projective solve: witnesses `A, B ⪰ 0` with `⟨B,T⟩ = 1`,
/// `B − A ∈ cone*`, maximising `⟨A,T⟩`.
#[derive(Clone, Debug)]
pub struct ProjectiveDual {
    pub value: f64,
    pub a_slots: Vec<CMatrix>,
    pub b_slots: Vec<CMatrix>,
    pub gap: f64,
}

/// Solves the projective dual. `Ok(None)` means unbounded (value `+∞`).
pub fn solve_projective_dual(
    spec: &ConeSpec,
    t: &[CMatrix],
    opts: &SolverOpts,
) -> Result<Option<ProjectiveDual>> {
    check_target(spec, t)?;
    let dims = spec.slot_dims();
    let mut p = ConicProgram::maximize();
    let a_vars: Vec<HermVar> = dims.iter().map(|&d| p.herm(d)).collect();
    let b_vars: Vec<HermVar> = dims.iter().map(|&d| p.herm(d)).collect();
    let y_vars: Vec<HermVar> = spec.equalities.iter().map(|e| p.herm(e.dim)).collect();
    for v in a_vars.iter().chain(b_vars.iter()) {
        p.require_psd(AffineHerm::zero(v.dim).add_herm(v, 1.0));
    }
    // per parameter block: Σ_s assembly[s][b]†(B_s − A_s) − Σ_e L_{e,b}†(Y_e) ⪰ 0
    for b in 0..spec.n_blocks() {
        let bd = spec.block_dims[b];
        let mut e = AffineHerm::zero(bd);
        for s in 0..dims.len() {
            if let Some(map) = &spec.assembly[s][b] {
                let adj = map.adjoint();
                e = e.add_mapped(&b_vars[s], &adj, 1.0);
                e = e.add_mapped(&a_vars[s], &adj, -1.0);
            }
        }
        for (ei, eq) in spec.equalities.iter().enumerate() {
            if let Some(map) = &eq.maps[b] {
                e = e.add_mapped(&y_vars[ei], &map.adjoint(), -1.0);
            }
        }
        p.require_psd(e);
    }
    // normalisation ⟨B, T⟩ = 1
    let mut btr = AffineReal::zero();
    let mut atr = AffineReal::zero();
    for (s, &d) in dims.iter().enumerate() {
        let be = AffineHerm::zero(d).add_herm(&b_vars[s], 1.0);
        let ae = AffineHerm::zero(d).add_herm(&a_vars[s], 1.0);
        btr = btr.plus(&be.inner_aff(&t[s]));
        atr = atr.plus(&ae.inner_aff(&t[s]));
    }
    p.require_scalar_eq_zero(btr.add_const(-1.0));
    p.set_objective(atr);
    let res = p.solve(opts)?;
    match res.status {
        SolveStatus::Optimal => Ok(Some(ProjectiveDual {
            value: res.value,
            a_slots: a_vars.iter().map(|v| res.herm(v)).collect(),
            b_slots: b_vars.iter().map(|v| res.herm(v)).collect(),
            gap: res.gap,
        })),
        SolveStatus::Unbounded => Ok(None),
        SolveStatus::Infeasible => Err(Error::Numerical(
            "projective dual reported infeasible; target may have zero trace".into(),
        )),
    }
}

/// Robustness/weight solve output.
#[derive(Clone, Debug)]
pub struct ScaleSolve {
    pub value: f64,
    pub x_slots: Vec<CMatrix>,
    pub params: Vec<CMatrix>,
    pub gap: f64,
}

/// Generalised robustness: `min normalizer(X)` s.t. `X ⪰ T` slotwise,
/// `X ∈ cone`. `Ok(None)` if infeasible (no cone element dominates `T`).
pub fn solve_robustness(
    spec: &ConeSpec,
    t: &[CMatrix],
    opts: &SolverOpts,
) -> Result<Option<ScaleSolve>> {
    solve_scale(spec, t, opts, true)
}

/// Free weight: `max normalizer(X)` s.t. `X ⪯ T` slotwise, `X ∈ cone`.
pub fn solve_weight(spec: &ConeSpec, t: &[CMatrix], opts: &SolverOpts) -> Result<Option<ScaleSolve>> {
    solve_scale(spec, t, opts, false)
}

fn solve_scale(
    spec: &ConeSpec,
    t: &[CMatrix],
    opts: &SolverOpts,
    robustness: bool,
) -> Result<Option<ScaleSolve>> {
    check_target(spec, t)?;
    let mut p = if robustness {
        ConicProgram::minimize()
    } else {
        ConicProgram::maximize()
    };
    let vars = install_cone(&mut p, spec);
    let slots = cone_slot_exprs(spec, &vars);
    for (s, slot) in slots.iter().enumerate() {
        let diff = slot.clone().add_const(&t[s].scale_re(-1.0));
        if robustness {
            p.require_psd(diff); // X ⪰ T
        } else {
            p.require_psd(diff.neg()); // X ⪯ T
        }
    }
    p.set_objective(normalizer_aff(spec, &slots));
    let res = p.solve(opts)?;
    match res.status {
        SolveStatus::Optimal => Ok(Some(ScaleSolve {
            value: res.value,
            x_slots: slots.iter().map(|e| res.eval_herm(e)).collect(),
            params: vars.params.iter().map(|v| res.herm(v)).collect(),
            gap: res.gap,
        })),
        SolveStatus::Infeasible => Ok(None),
        SolveStatus::Unbounded => Err(Error::Numerical(
            "scale program reported unbounded, which should be impossible".into(),
        )),
    }
}

/// Minimises `Σ_s ⟨W_s, X_s⟩` over the normalised cone slice
/// `normalizer(X) = 1`. Returns the value and an optimiser; the value is
/// `≥ 0` for every `W` in the dual cone.
pub fn cone_min_inner(
    spec: &ConeSpec,
    w: &[CMatrix],
    opts: &SolverOpts,
) -> Result<(f64, Vec<CMatrix>)> {
    check_target(spec, w)?;
    let mut p = ConicProgram::minimize();
    let vars = install_cone(&mut p, spec);
    let slots = cone_slot_exprs(spec, &vars);
    let mut obj = AffineReal::zero();
    for (s, slot) in slots.iter().enumerate() {
        obj = obj.plus(&slot.inner_aff(&w[s]));
    }
    p.require_scalar_eq_zero(normalizer_aff(spec, &slots).add_const(-1.0));
    p.set_objective(obj);
    let res = p.solve(opts)?;
    match res.status {
        SolveStatus::Optimal => Ok((res.value, slots.iter().map(|e| res.eval_herm(e)).collect())),
        SolveStatus::Infeasible => Err(Error::IllPosed(
            "cone has an empty normalised slice".into(),
        )),
        SolveStatus::Unbounded => Err(Error::IllPosed(
            "cone slice is unbounded; inner minimisation diverges".into(),
        )),
    }
}

/// Tests membership of `W` in the dual cone (up to tolerance), returning the
/// minimum slice inner product as a margin.
pub fn dual_cone_membership(
    spec: &ConeSpec,
    w: &[CMatrix],
    opts: &SolverOpts,
) -> Result<(bool, f64)> {
    let (margin, _) = cone_min_inner(spec, w, opts)?;
    Ok((margin >= -opts.feas_tol, margin))
}

/// Tests membership of `X` in the cone by minimising the interior-direction
/// shift `s` with `X + s·assemble(interior) ∈ cone`; `X` is a member iff the
/// optimum is `≤ 0` (up to tolerance). Returns `(member, s)`.
pub fn cone_membership(spec: &ConeSpec, x: &[CMatrix], opts: &SolverOpts) -> Result<(bool, f64)> {
    check_target(spec, x)?;
    let interior_slots = spec.assemble(&spec.interior)?;
    let mut p = ConicProgram::minimize();
    let s_var = p.scalar();
    let vars = install_cone(&mut p, spec);
    let slots = cone_slot_exprs(spec, &vars);
    for (s, slot) in slots.iter().enumerate() {
        // assembly(v) − s·interior_s − X_s = 0
        p.require_eq_zero(
            slot.clone()
                .add_scalar(s_var, &interior_slots[s].scale_re(-1.0))
                .add_const(&x[s].scale_re(-1.0)),
        );
    }
    p.set_objective(AffineReal::from_scalar(s_var, 1.0));
    let res = p.solve(opts)?;
    match res.status {
        SolveStatus::Optimal => Ok((res.value <= opts.feas_tol, res.value)),
        // X outside the linear span of the cone: no shift ever reaches it
        SolveStatus::Infeasible => Ok((false, f64::INFINITY)),
        SolveStatus::Unbounded => Err(Error::Numerical(
            "membership program reported unbounded below, which should be impossible".into(),
        )),
    }
}

/// Maximises the linear-fractional objective `⟨C,X⟩ / ⟨D,X⟩` over nonzero
/// cone elements via the Charnes–Cooper normalisation `⟨D,X⟩ = 1`.
/// The caller should ensure `D` is strictly positive on the cone (e.g. via
/// [`dual_cone_membership`]); otherwise the program may be unbounded.
pub fn solve_linear_fractional(
    spec: &ConeSpec,
    c_slots: &[CMatrix],
    d_slots: &[CMatrix],
    opts: &SolverOpts,
) -> Result<(f64, Vec<CMatrix>)> {
    check_target(spec, c_slots)?;
    check_target(spec, d_slots)?;
    let mut p = ConicProgram::maximize();
    let vars = install_cone(&mut p, spec);
    let slots = cone_slot_exprs(spec, &vars);
    let mut num = AffineReal::zero();
    let mut den = AffineReal::zero();
    for (s, slot) in slots.iter().enumerate() {
        num = num.plus(&slot.inner_aff(&c_slots[s]));
        den = den.plus(&slot.inner_aff(&d_slots[s]));
    }
    p.require_scalar_eq_zero(den.add_const(-1.0));
    p.set_objective(num);
    let res = p.solve(opts)?;
    match res.status {
        SolveStatus::Optimal => Ok((res.value, slots.iter().map(|e| res.eval_herm(e)).collect())),
        SolveStatus::Infeasible => Err(Error::IllPosed(
            "linear-fractional program infeasible: denominator cannot be normalised on the cone"
                .into(),
        )),
        SolveStatus::Unbounded => Err(Error::IllPosed(
            "linear-fractional program unbounded: denominator is not strictly positive on the cone"
                .into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::incoherent_state_cone;
    use crate::linalg::{c, cr, eigh, max_eig, CMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_herm(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(d, d, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .hermitian_part()
    }

    #[test]
    fn svec_dot_matches_matrix_inner() {
        // ⟨svec(realify F), svec(realify G)⟩ = ⟨realify F, realify G⟩ = 2⟨F,G⟩
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..10 {
            let f = random_herm(3, &mut rng);
            let g = random_herm(3, &mut rng);
            let mut sf = vec![0.0; tri_len(6)];
            let mut sg = vec![0.0; tri_len(6)];
            svec_realified_into(&f, &mut sf);
            svec_realified_into(&g, &mut sg);
            let dot: f64 = sf.iter().zip(&sg).map(|(a, b)| a * b).sum();
            assert!((dot - 2.0 * f.inner_re(&g)).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_unpack_inverts_pairing() {
        // herm_dual_from_svec(svec(realify F)) should give 2F
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let f = random_herm(3, &mut rng);
        let mut sf = vec![0.0; tri_len(6)];
        svec_realified_into(&f, &mut sf);
        let w = herm_dual_from_svec(&sf, 3);
        assert!(w.sub(&f.scale_re(2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn largest_eigenvalue_via_psd_constraint() {
        // min t s.t. tI − C ⪰ 0, with a genuinely complex C
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let cm = random_herm(3, &mut rng);
            let lmax = max_eig(&cm).unwrap();
            let mut p = ConicProgram::minimize();
            let t = p.scalar();
            p.require_psd(
                AffineHerm::from_const(&cm.scale_re(-1.0))
                    .add_scalar(t, &CMatrix::identity(3)),
            );
            p.set_objective(AffineReal::from_scalar(t, 1.0));
            let res = p.solve(&SolverOpts::default()).unwrap();
            assert_eq!(res.status, SolveStatus::Optimal);
            assert!((res.value - lmax).abs() < 1e-7, "value {} vs λmax {}", res.value, lmax);
            // dual multiplier: tr Z = 1, ⟨C, Z⟩ = λmax, Z ⪰ 0
            let z = &res.psd_duals[0];
            assert!((z.trace().re - 1.0).abs() < 1e-6);
            assert!((cm.inner_re(z) - lmax).abs() < 1e-6);
            assert!(crate::linalg::is_psd(z, 1e-8).unwrap());
        }
    }

    #[test]
    fn scalar_lp_and_statuses() {
        // min x + 2y s.t. x + y = 1, x ≥ 0, y ≥ 0  → 1 at (1, 0)
        let mut p = ConicProgram::minimize();
        let x = p.scalar();
        let y = p.scalar();
        p.require_scalar_eq_zero(
            AffineReal::from_scalar(x, 1.0).add_scalar(y, 1.0).add_const(-1.0),
        );
        p.require_nonneg(AffineReal::from_scalar(x, 1.0));
        p.require_nonneg(AffineReal::from_scalar(y, 1.0));
        p.set_objective(AffineReal::from_scalar(x, 1.0).add_scalar(y, 2.0));
        let res = p.solve(&SolverOpts::default()).unwrap();
        assert!((res.value - 1.0).abs() < 1e-8);
        assert!((res.scalar(x) - 1.0).abs() < 1e-7);

        // unbounded: min −x, x ≥ 0
        let mut p = ConicProgram::minimize();
        let x = p.scalar();
        p.require_nonneg(AffineReal::from_scalar(x, 1.0));
        p.set_objective(AffineReal::from_scalar(x, -1.0));
        let res = p.solve(&SolverOpts::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Unbounded);

        // infeasible: x ≥ 0 and −x − 1 ≥ 0
        let mut p = ConicProgram::minimize();
        let x = p.scalar();
        p.require_nonneg(AffineReal::from_scalar(x, 1.0));
        p.require_nonneg(AffineReal::from_scalar(x, -1.0).add_const(-1.0));
        p.set_objective(AffineReal::from_scalar(x, 1.0));
        let res = p.solve(&SolverOpts::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
    }

    #[test]
    fn diagonal_robustness_of_max_coherent() {
        // min tr X s.t. X diagonal PSD, X ⪰ |+⟩⟨+|  → 2 at X = I
        let cone = incoherent_state_cone(2);
        let plus = CMatrix::from_fn(2, 2, |_, _| c(0.5, 0.0));
        let sol = solve_robustness(&cone, &[plus], &SolverOpts::default())
            .unwrap()
            .unwrap();
        assert!((sol.value - 2.0).abs() < 1e-7);
        assert!(sol.x_slots[0].sub(&CMatrix::identity(2)).max_abs() < 1e-5);
    }

    #[test]
    fn projective_value_on_coherence_anchor() {
        // T = ½I + ¼X has optimal γ = 3 over diagonal PSD matrices,
        // attained by X = diag(3/4, 3/4)
        let cone = incoherent_state_cone(2);
        let t = CMatrix::from_fn(2, 2, |i, j| if i == j { c(0.5, 0.0) } else { c(0.25, 0.0) });
        let opts = SolverOpts::default();
        let pre = support_precheck(&cone, &[t.clone()], &opts).unwrap();
        assert!(pre.finite && pre.tau > 0.1);
        let primal = solve_projective_primal(&cone, &[t.clone()], &opts)
            .unwrap()
            .unwrap();
        assert!((primal.gamma - 3.0).abs() < 1e-6, "γ = {}", primal.gamma);
        let dual = solve_projective_dual(&cone, &[t.clone()], &opts)
            .unwrap()
            .unwrap();
        assert!((dual.value - 3.0).abs() < 1e-6, "dual = {}", dual.value);
        // sandwich: T ⪯ X ⪯ γT
        let x = &primal.x_slots[0];
        assert!(min_eig(&x.sub(&t)).unwrap() > -1e-7);
        assert!(min_eig(&t.scale_re(primal.gamma).sub(x)).unwrap() > -1e-7);
        // γ = λ·μ decomposition: λ = tr X
        assert!((primal.lambda - x.trace().re).abs() < 1e-10);
    }

    #[test]
    fn projective_infinite_on_support_mismatch() {
        // |+⟩⟨+| has no diagonal element with equal support
        let cone = incoherent_state_cone(2);
        let plus = CMatrix::from_fn(2, 2, |_, _| c(0.5, 0.0));
        let opts = SolverOpts::default();
        let pre = support_precheck(&cone, &[plus.clone()], &opts).unwrap();
        assert!(!pre.finite, "τ = {}", pre.tau);
        // dual must be unbounded (reported as None)
        let dual = solve_projective_dual(&cone, &[plus.clone()], &opts).unwrap();
        assert!(dual.is_none());
    }

    #[test]
    fn membership_and_dual_cone() {
        let cone = incoherent_state_cone(2);
        let opts = SolverOpts::default();
        let mut diag = CMatrix::zeros(2, 2);
        diag[(0, 0)] = cr(0.3);
        diag[(1, 1)] = cr(0.7);
        let (inside, s) = cone_membership(&cone, &[diag], &opts).unwrap();
        assert!(inside && s <= 1e-7, "s = {s}");
        let plus = CMatrix::from_fn(2, 2, |_, _| c(0.5, 0.0));
        let (inside, s) = cone_membership(&cone, &[plus], &opts).unwrap();
        assert!(!inside && s > 0.1, "s = {s}");

        // dual cone of diagonal-PSD = matrices with nonnegative diagonal
        let mut w = CMatrix::from_fn(2, 2, |_, _| c(5.0, 0.0));
        w[(0, 0)] = cr(1.0);
        w[(1, 1)] = cr(1.0);
        let (ok, margin) = dual_cone_membership(&cone, &[w], &opts).unwrap();
        assert!(ok && (margin - 1.0).abs() < 1e-6);
        let mut w2 = CMatrix::identity(2);
        w2[(1, 1)] = cr(-0.5);
        let (ok, margin) = dual_cone_membership(&cone, &[w2], &opts).unwrap();
        assert!(!ok && (margin + 0.5).abs() < 1e-6);
    }

    #[test]
    fn linear_fractional_selects_best_ratio() {
        // max (x₁ + 3x₂)/(x₁ + x₂) over diagonal PSD → 3
        let cone = incoherent_state_cone(2);
        let mut cnum = CMatrix::zeros(2, 2);
        cnum[(0, 0)] = cr(1.0);
        cnum[(1, 1)] = cr(3.0);
        let (v, x) = solve_linear_fractional(
            &cone,
            &[cnum],
            &[CMatrix::identity(2)],
            &SolverOpts::default(),
        )
        .unwrap();
        assert!((v - 3.0).abs() < 1e-7);
        assert!(x[0][(0, 0)].re < 1e-6 && (x[0][(1, 1)].re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn weight_of_diagonally_dominated_target() {
        // T = diag(0.6, 0.4) ⇒ weight = tr T = 1 (T itself is free)
        let cone = incoherent_state_cone(2);
        let mut t = CMatrix::zeros(2, 2);
        t[(0, 0)] = cr(0.6);
        t[(1, 1)] = cr(0.4);
        let sol = solve_weight(&cone, &[t], &SolverOpts::default()).unwrap().unwrap();
        assert!((sol.value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn program_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let cm = random_herm(3, &mut rng);
        let mut p = ConicProgram::minimize();
        let t = p.scalar();
        p.require_psd(
            AffineHerm::from_const(&cm.scale_re(-1.0)).add_scalar(t, &CMatrix::identity(3)),
        );
        p.set_objective(AffineReal::from_scalar(t, 1.0));
        let j = p.to_json();
        let p2 = ConicProgram::from_json(&j).unwrap();
        let opts = SolverOpts::default();
        let (r1, r2) = (p.solve(&opts).unwrap(), p2.solve(&opts).unwrap());
        assert!((r1.value - r2.value).abs() < 1e-10);
        let _ = eigh(&cm).unwrap();
    }
}
