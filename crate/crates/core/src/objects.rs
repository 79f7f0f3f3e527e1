//! Validated quantum objects — density operators, channels in Choi form,
//! POVM sets, state ensembles — together with the Choi-calculus helpers
//! (apply, compose, tensor, replacement, measurement embedding) and seeded
//! random generators used by the property suites and the CLI.
//!
//! Choi convention: for a channel `E: A → B` the Choi matrix lives on
//! `A ⊗ B` (input copy first) and is `J = Σ_ij |i><j| ⊗ E(|i><j|)`, built
//! from the unnormalised maximally entangled operator. Complete positivity
//! is `J ⪰ 0`; trace preservation is `Tr_B J = I_A` (trace over the
//! *output* factor).

use crate::linalg::{
    c, cr, is_psd, partial_trace, permute_systems, CMatrix, Keep, C64, HERM_TOL, PSD_TOL,
};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tolerance for trace-preservation and completeness checks.
pub const TP_TOL: f64 = 1e-8;

/// Unit-trace PSD operator.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct DensityOperator {
    mat: CMatrix,
}

impl DensityOperator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Dimension("state must be square".into()));
        }
        if !mat.is_hermitian(HERM_TOL) {
            return Err(Error::Domain("state is not Hermitian".into()));
        }
        let mat = mat.hermitian_part();
        if !is_psd(&mat, PSD_TOL)? {
            return Err(Error::Domain("state is not positive semidefinite".into()));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TP_TOL || tr.im.abs() > TP_TOL {
            return Err(Error::Domain(format!(
                "state trace is {:.12}, expected 1",
                tr.re
            )));
        }
        Ok(DensityOperator { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    /// Purity `tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.mat.inner_re(&self.mat)
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        self.purity() >= 1.0 - tol
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = CMatrix::deserialize(d)?;
        DensityOperator::new(m).map_err(serde::de::Error::custom)
    }
}

/// Completely positive trace-preserving map in Choi form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelChoi {
    pub dim_in: usize,
    pub dim_out: usize,
    choi: CMatrix,
}

impl ChannelChoi {
    /// Validates CP (`J ⪰ 0`) and TP (`Tr_out J = I_in`).
    pub fn new(dim_in: usize, dim_out: usize, choi: CMatrix) -> Result<Self> {
        if choi.rows() != dim_in * dim_out || !choi.is_square() {
            return Err(Error::Dimension(format!(
                "Choi matrix is {}x{}, expected {} = {dim_in}*{dim_out} square",
                choi.rows(),
                choi.cols(),
                dim_in * dim_out
            )));
        }
        if !choi.is_hermitian(HERM_TOL) {
            return Err(Error::Domain("Choi matrix is not Hermitian".into()));
        }
        let choi = choi.hermitian_part();
        if !is_psd(&choi, PSD_TOL)? {
            return Err(Error::Domain(
                "channel is not completely positive (Choi has negative eigenvalues)".into(),
            ));
        }
        let marg = partial_trace(&choi, dim_in, dim_out, Keep::First)?;
        let dev = marg.sub(&CMatrix::identity(dim_in)).max_abs();
        if dev > TP_TOL {
            return Err(Error::Domain(format!(
                "channel is not trace preserving (‖Tr_out J − I‖ = {dev:.3e})"
            )));
        }
        Ok(ChannelChoi {
            dim_in,
            dim_out,
            choi,
        })
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    /// Applies the channel to a (not necessarily PSD) square input.
    pub fn apply_mat(&self, rho: &CMatrix) -> Result<CMatrix> {
        apply_choi(&self.choi, self.dim_in, self.dim_out, rho)
    }

    /// Applies `id_R ⊗ E` to an operator on `R ⊗ A`; the reference factor
    /// may be trivial (`dim R = 1`).
    pub fn apply_bipartite(&self, sigma: &CMatrix) -> Result<CMatrix> {
        apply_choi_bipartite(&self.choi, self.dim_in, self.dim_out, sigma)
    }
}

/// Unnormalised maximally entangled operator `Σ_ij |ii><jj|` on `C^d ⊗ C^d`.
pub fn max_entangled(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = cr(1.0);
        }
    }
    m
}

/// Choi matrix of `ρ ↦ Σ_e K_e ρ K_e†`; checks `Σ_e K_e† K_e = I`.
pub fn choi_from_kraus(kraus: &[CMatrix], dim_in: usize, dim_out: usize) -> Result<ChannelChoi> {
    if kraus.is_empty() {
        return Err(Error::Domain("empty Kraus list".into()));
    }
    let mut sum = CMatrix::zeros(dim_in, dim_in);
    for k in kraus {
        if k.rows() != dim_out || k.cols() != dim_in {
            return Err(Error::Dimension(format!(
                "Kraus operator is {}x{}, expected {dim_out}x{dim_in}",
                k.rows(),
                k.cols()
            )));
        }
        sum = sum.add(&k.dagger().matmul(k));
    }
    if sum.sub(&CMatrix::identity(dim_in)).max_abs() > TP_TOL {
        return Err(Error::Domain("Kraus operators are not trace preserving".into()));
    }
    let mut j = CMatrix::zeros(dim_in * dim_out, dim_in * dim_out);
    for k in kraus {
        // (I ⊗ K)(Σ|ii><jj|)(I ⊗ K)†: entry ((i,a),(j,b)) += K[a,i]·conj(K[b,j])
        for i in 0..dim_in {
            for jj in 0..dim_in {
                for a in 0..dim_out {
                    for b in 0..dim_out {
                        j[(i * dim_out + a, jj * dim_out + b)] += k[(a, i)] * k[(b, jj)].conj();
                    }
                }
            }
        }
    }
    ChannelChoi::new(dim_in, dim_out, j)
}

/// `E(ρ) = Tr_in[(ρ^T ⊗ I_out) J]` for an arbitrary square input; linear,
/// so it is also used on non-PSD operators and Hermitian basis elements.
pub fn apply_choi(choi: &CMatrix, dim_in: usize, dim_out: usize, rho: &CMatrix) -> Result<CMatrix> {
    if rho.rows() != dim_in || !rho.is_square() {
        return Err(Error::Dimension(format!(
            "channel input is {}x{}, expected {dim_in}x{dim_in}",
            rho.rows(),
            rho.cols()
        )));
    }
    let mut out = CMatrix::zeros(dim_out, dim_out);
    for a in 0..dim_out {
        for b in 0..dim_out {
            let mut s = cr(0.0);
            for i in 0..dim_in {
                for jj in 0..dim_in {
                    // E(ρ) = Σ_ij ρ_ij E(|i><j|), and E(|i><j|) is Choi block (i,j)
                    s += rho[(i, jj)] * choi[(i * dim_out + a, jj * dim_out + b)];
                }
            }
            out[(a, b)] = s;
        }
    }
    Ok(out)
}

/// `(id_R ⊗ E)(σ)` for `σ` on `R ⊗ A`, computed entrywise from the Choi
/// blocks: `out[(r,b),(r',b')] = Σ_{a,a'} σ[(r,a),(r',a')] J[(a,b),(a',b')]`.
pub fn apply_choi_bipartite(
    choi: &CMatrix,
    dim_in: usize,
    dim_out: usize,
    sigma: &CMatrix,
) -> Result<CMatrix> {
    if !sigma.is_square() || sigma.rows() % dim_in != 0 {
        return Err(Error::Dimension(format!(
            "bipartite input of size {} is not a multiple of channel input {dim_in}",
            sigma.rows()
        )));
    }
    let dr = sigma.rows() / dim_in;
    let mut out = CMatrix::zeros(dr * dim_out, dr * dim_out);
    for r in 0..dr {
        for rp in 0..dr {
            for bcol in 0..dim_out {
                for bp in 0..dim_out {
                    let mut s = cr(0.0);
                    for a in 0..dim_in {
                        for ap in 0..dim_in {
                            s += sigma[(r * dim_in + a, rp * dim_in + ap)]
                                * choi[(a * dim_out + bcol, ap * dim_out + bp)];
                        }
                    }
                    out[(r * dim_out + bcol, rp * dim_out + bp)] = s;
                }
            }
        }
    }
    Ok(out)
}

/// Replacement channel `ρ ↦ tr(ρ)·ω` with Choi `I_in ⊗ ω`.
pub fn replacement_channel(omega: &DensityOperator, dim_in: usize) -> Result<ChannelChoi> {
    ChannelChoi::new(
        dim_in,
        omega.dim(),
        CMatrix::identity(dim_in).kron(omega.mat()),
    )
}

/// If `J ≈ I ⊗ ω`, returns the replaced state `ω` (trace-normalised).
pub fn replacement_state(ch: &ChannelChoi) -> Result<DensityOperator> {
    let omega = partial_trace(ch.choi(), ch.dim_in, ch.dim_out, Keep::Second)?
        .scale_re(1.0 / ch.dim_in as f64);
    let rebuilt = CMatrix::identity(ch.dim_in).kron(&omega);
    if rebuilt.sub(ch.choi()).max_abs() > 1e-8 * ch.choi().max_abs().max(1.0) {
        return Err(Error::Mode("channel is not a replacement channel".into()));
    }
    DensityOperator::new(omega)
}

/// Choi matrix of `E ⊗ F` on the composite input/output ordering
/// `(A⊗C) → (B⊗D)`.
pub fn tensor_channels(e: &ChannelChoi, f: &ChannelChoi) -> Result<ChannelChoi> {
    // J_E ⊗ J_F has factor order (A, B, C, D); reorder to (A, C, B, D).
    let big = e.choi().kron(f.choi());
    let dims = [e.dim_in, e.dim_out, f.dim_in, f.dim_out];
    let perm = [0, 2, 1, 3];
    let j = permute_systems(&big, &dims, &perm)?;
    ChannelChoi::new(e.dim_in * f.dim_in, e.dim_out * f.dim_out, j)
}

/// Choi matrix of `second ∘ first`.
pub fn compose_channels(second: &ChannelChoi, first: &ChannelChoi) -> Result<ChannelChoi> {
    if first.dim_out != second.dim_in {
        return Err(Error::Dimension(format!(
            "composition mismatch: first outputs {}, second expects {}",
            first.dim_out, second.dim_in
        )));
    }
    let din = first.dim_in;
    let dout = second.dim_out;
    let mut j = CMatrix::zeros(din * dout, din * dout);
    for i in 0..din {
        for jj in 0..din {
            // first(|i><j|) is the (i,j) Choi block of `first`
            let block = CMatrix::from_fn(first.dim_out, first.dim_out, |a, b| {
                first.choi()[(i * first.dim_out + a, jj * first.dim_out + b)]
            });
            let mapped = apply_choi(second.choi(), second.dim_in, second.dim_out, &block)?;
            for a in 0..dout {
                for b in 0..dout {
                    j[(i * dout + a, jj * dout + b)] = mapped[(a, b)];
                }
            }
        }
    }
    ChannelChoi::new(din, dout, j)
}

/// Grid of POVM effects: `m` measurement settings with `n` outcomes each on
/// a `d`-dimensional system. Each setting satisfies `Σ_a M_{a|x} = I`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PovmSet {
    pub dim: usize,
    pub m: usize,
    pub n: usize,
    effects: Vec<Vec<CMatrix>>,
}

impl PovmSet {
    pub fn new(dim: usize, effects: Vec<Vec<CMatrix>>) -> Result<Self> {
        let m = effects.len();
        if m == 0 {
            return Err(Error::Domain("POVM set has no settings".into()));
        }
        let n = effects[0].len();
        if n == 0 {
            return Err(Error::Domain("POVM setting has no outcomes".into()));
        }
        for row in &effects {
            if row.len() != n {
                return Err(Error::Dimension(
                    "all settings must have the same number of outcomes".into(),
                ));
            }
            let mut sum = CMatrix::zeros(dim, dim);
            for eff in row {
                if eff.rows() != dim || !eff.is_square() {
                    return Err(Error::Dimension(format!(
                        "effect is {}x{}, expected {dim}x{dim}",
                        eff.rows(),
                        eff.cols()
                    )));
                }
                if !eff.is_hermitian(HERM_TOL) {
                    return Err(Error::Domain("effect is not Hermitian".into()));
                }
                if !is_psd(eff, PSD_TOL)? {
                    return Err(Error::Domain("effect is not PSD".into()));
                }
                sum = sum.add(eff);
            }
            if sum.sub(&CMatrix::identity(dim)).max_abs() > TP_TOL {
                return Err(Error::Domain(
                    "effects of a setting do not sum to the identity".into(),
                ));
            }
        }
        let effects = effects
            .into_iter()
            .map(|row| row.into_iter().map(|e| e.hermitian_part()).collect())
            .collect();
        Ok(PovmSet {
            dim,
            m,
            n,
            effects,
        })
    }

    /// Single measurement (one setting).
    pub fn single(dim: usize, effects: Vec<CMatrix>) -> Result<Self> {
        Self::new(dim, vec![effects])
    }

    pub fn effect(&self, x: usize, a: usize) -> &CMatrix {
        &self.effects[x][a]
    }

    pub fn effects(&self) -> &Vec<Vec<CMatrix>> {
        &self.effects
    }

    /// Effects flattened in `(x, a)` row-major order — the slot order used
    /// by the cone/engine layer.
    pub fn slots(&self) -> Vec<CMatrix> {
        self.effects.iter().flatten().cloned().collect()
    }
}

/// Measure-and-prepare embedding of a POVM set into a channel: the input is
/// `setting ⊗ system` (dimension `m·d`), the output registers the outcome
/// (dimension `n`):
/// `E(σ ⊗ ρ) = Σ_{x,a} <x|σ|x> tr(M_{a|x} ρ) |a><a|`.
///
/// Its Choi matrix is block diagonal, `Σ_{x,a} |x><x| ⊗ M_{a|x}^T ⊗ |a><a|`,
/// and is linear in the effects — which is what lets free-set cones of POVM
/// grids be pushed through this map.
pub fn embed_povmset_channel(ms: &PovmSet) -> Result<ChannelChoi> {
    let (d, m, n) = (ms.dim, ms.m, ms.n);
    let din = m * d;
    let mut j = CMatrix::zeros(din * n, din * n);
    for x in 0..m {
        for a in 0..n {
            let mt = ms.effect(x, a).transpose();
            for r in 0..d {
                for rp in 0..d {
                    // input index (x, r), output index a
                    let row = (x * d + r) * n + a;
                    let col = (x * d + rp) * n + a;
                    j[(row, col)] += mt[(r, rp)];
                }
            }
        }
    }
    ChannelChoi::new(din, n, j)
}

/// Finite ensemble of states with probabilities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateEnsemble {
    pub probs: Vec<f64>,
    pub states: Vec<CMatrix>,
}

impl StateEnsemble {
    pub fn new(probs: Vec<f64>, states: Vec<CMatrix>) -> Result<Self> {
        if probs.len() != states.len() || probs.is_empty() {
            return Err(Error::Dimension(
                "ensemble needs matching, nonempty probability and state lists".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < -1e-12) || (total - 1.0).abs() > 1e-8 {
            return Err(Error::Domain(
                "ensemble probabilities must be nonnegative and sum to 1".into(),
            ));
        }
        let d = states[0].rows();
        for s in &states {
            if s.rows() != d {
                return Err(Error::Dimension("ensemble states differ in dimension".into()));
            }
            DensityOperator::new(s.clone())?;
        }
        Ok(StateEnsemble { probs, states })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].rows()
    }
}

// ---------------------------------------------------------------------------
// Seeded random generators (ChaCha-backed, deterministic per seed).
// ---------------------------------------------------------------------------

/// Standard normal via Box–Muller.
fn randn<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(randn(rng), randn(rng)).scale(std::f64::consts::FRAC_1_SQRT_2)
    })
}

trait ComplexScale {
    fn scale(self, s: f64) -> C64;
}
impl ComplexScale for C64 {
    fn scale(self, s: f64) -> C64 {
        C64::new(self.re * s, self.im * s)
    }
}

/// Hilbert–Schmidt random density matrix `GG†/tr(GG†)`.
pub fn random_state<R: Rng>(d: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(d, d, rng);
    let gg = g.matmul(&g.dagger());
    let tr = gg.trace().re;
    DensityOperator::new(gg.scale_re(1.0 / tr)).expect("Wishart matrix is a state")
}

/// Haar-random pure state as a projector.
pub fn random_pure<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let v: Vec<C64> = (0..d).map(|_| c(randn(rng), randn(rng))).collect();
    CMatrix::projector(&v)
}

/// Haar-random isometry `C^cols → C^rows` (Gram–Schmidt on Ginibre columns).
pub fn haar_isometry<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(cols <= rows, "isometry needs rows ≥ cols");
    let g = ginibre(rows, cols, rng);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(cols);
    for jcol in 0..cols {
        let mut v: Vec<C64> = (0..rows).map(|i| g[(i, jcol)]).collect();
        for prev in &q {
            let ip: C64 = prev.iter().zip(&v).map(|(p, x)| p.conj() * x).sum();
            for i in 0..rows {
                v[i] -= prev[i] * ip;
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= norm;
        }
        q.push(v);
    }
    CMatrix::from_fn(rows, cols, |i, j| q[j][i])
}

/// Haar-random unitary.
pub fn haar_unitary<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    haar_isometry(d, d, rng)
}

/// Random CPTP map via a Haar-random Stinespring isometry
/// `V: C^{d_in} → C^{d_out} ⊗ C^{d_env}` with `d_env = d_in·d_out`.
pub fn random_channel<R: Rng>(dim_in: usize, dim_out: usize, rng: &mut R) -> ChannelChoi {
    let denv = (dim_in * dim_out).max(1);
    let v = haar_isometry(dim_out * denv, dim_in, rng);
    // K_e[(b, i)] = V[(b, e), i] with row index b·denv + e
    let kraus: Vec<CMatrix> = (0..denv)
        .map(|e| CMatrix::from_fn(dim_out, dim_in, |b, i| v[(b * denv + e, i)]))
        .collect();
    choi_from_kraus(&kraus, dim_in, dim_out).expect("Stinespring construction is CPTP")
}

/// Random POVM set: each setting is a Haar-rotated projective measurement
/// mixed with flat noise, `M_{a|x} = η U_x P_a U_x† + (1−η) q_a I` with `q`
/// uniform on the simplex. `n > d` is allowed (surplus outcomes are purely
/// noise). Pass `eta = None` to draw `η` uniformly from `[0.3, 0.9]`.
pub fn random_povm_set<R: Rng>(
    d: usize,
    m: usize,
    n: usize,
    eta: Option<f64>,
    rng: &mut R,
) -> PovmSet {
    let mut settings = Vec::with_capacity(m);
    for _ in 0..m {
        let eta_x = eta.unwrap_or_else(|| rng.gen_range(0.3..0.9));
        let u = haar_unitary(d, rng);
        // partition the basis into n groups, sizes as equal as possible
        let mut sizes = vec![d / n; n];
        for extra in sizes.iter_mut().take(d % n) {
            *extra += 1;
        }
        let mut q: Vec<f64> = (0..n).map(|_| -(rng.gen_range(f64::MIN_POSITIVE..1.0f64)).ln()).collect();
        let qs: f64 = q.iter().sum();
        q.iter_mut().for_each(|x| *x /= qs);
        let mut effects = Vec::with_capacity(n);
        let mut offset = 0usize;
        for (a, &sz) in sizes.iter().enumerate() {
            let mut proj = CMatrix::zeros(d, d);
            for kcol in offset..offset + sz {
                let col: Vec<C64> = (0..d).map(|i| u[(i, kcol)]).collect();
                for i in 0..d {
                    for j in 0..d {
                        proj[(i, j)] += col[i] * col[j].conj();
                    }
                }
            }
            offset += sz;
            let eff = proj
                .scale_re(eta_x)
                .add(&CMatrix::identity(d).scale_re((1.0 - eta_x) * q[a]));
            effects.push(eff);
        }
        settings.push(effects);
    }
    PovmSet::new(d, settings).expect("noisy projective construction is a POVM set")
}

/// The noisy two-outcome qubit pair (sharp `Z` and `X` smeared with flat
/// noise): `M_{a|1} = η P^Z_a + (1−η) I/2`, `M_{a|2} = η P^X_a + (1−η) I/2`.
pub fn noisy_zx_pair(eta: f64) -> Result<PovmSet> {
    let p0 = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let p1 = CMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]);
    let pp = CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
    let pm = CMatrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]);
    let half = CMatrix::identity(2).scale_re((1.0 - eta) * 0.5);
    let eff = |p: &CMatrix| p.scale_re(eta).add(&half);
    PovmSet::new(2, vec![vec![eff(&p0), eff(&p1)], vec![eff(&pp), eff(&pm)]])
}

/// Noisy sharp qubit `Z` measurement, a single-setting convenience.
pub fn noisy_z(eta: f64) -> Result<PovmSet> {
    let p0 = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let p1 = CMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]);
    let half = CMatrix::identity(2).scale_re((1.0 - eta) * 0.5);
    PovmSet::single(2, vec![p0.scale_re(eta).add(&half), p1.scale_re(eta).add(&half)])
}

/// Qubit depolarizing channel `ρ ↦ (1−p)ρ + p·tr(ρ)·I/2`.
pub fn depolarizing(d: usize, p: f64) -> Result<ChannelChoi> {
    let phi = max_entangled(d);
    let iso = phi
        .scale_re(1.0 - p)
        .add(&CMatrix::identity(d * d).scale_re(p / d as f64));
    ChannelChoi::new(d, d, iso)
}

/// Identity channel.
pub fn identity_channel(d: usize) -> ChannelChoi {
    ChannelChoi::new(d, d, max_entangled(d)).expect("identity Choi is CPTP")
}

/// Full dephasing in the computational basis.
pub fn dephasing_channel(d: usize) -> ChannelChoi {
    let mut j = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        j[(i * d + i, i * d + i)] = cr(1.0);
    }
    ChannelChoi::new(d, d, j).expect("dephasing Choi is CPTP")
}

/// Unitary conjugation channel.
pub fn unitary_channel(u: &CMatrix) -> Result<ChannelChoi> {
    choi_from_kraus(std::slice::from_ref(u), u.cols(), u.rows())
}

/// Purity of `E(ψ)` minimised over sampled pure inputs — the pure-target
/// premise checker used before distillation bounds. Unitary, isometric, and
/// pure-replacement channels pass; anything that mixes some pure input is
/// flagged.
pub fn min_output_purity<R: Rng>(ch: &ChannelChoi, samples: usize, rng: &mut R) -> Result<f64> {
    let d = ch.dim_in;
    let mut worst = f64::INFINITY;
    let mut inputs: Vec<CMatrix> = Vec::with_capacity(samples + d);
    for i in 0..d {
        let mut basis = CMatrix::zeros(d, d);
        basis[(i, i)] = cr(1.0);
        inputs.push(basis);
    }
    for _ in 0..samples {
        inputs.push(random_pure(d, rng));
    }
    for psi in &inputs {
        let out = ch.apply_mat(psi)?;
        let purity = out.inner_re(&out) / out.trace().re.powi(2);
        worst = worst.min(purity);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_choi_is_max_entangled_and_acts_trivially() {
        let id = identity_channel(2);
        assert!(id.choi().sub(&max_entangled(2)).max_abs() < 1e-14);
        // a genuinely complex Hermitian input, so transposition errors show
        let rho = CMatrix::from_fn(2, 2, |i, j| c(0.3 + (i * 2 + j) as f64 * 0.1, 0.2 * (j as f64 - i as f64)))
            .hermitian_part();
        assert!(id.apply_mat(&rho).unwrap().sub(&rho).max_abs() < 1e-13);
        // and a non-Hermitian basis element
        let mut e01 = CMatrix::zeros(2, 2);
        e01[(0, 1)] = cr(1.0);
        assert!(id.apply_mat(&e01).unwrap().sub(&e01).max_abs() < 1e-13);
    }

    #[test]
    fn depolarizing_matches_kraus_oracle() {
        // Kraus route: {√(1−3p/4) I, √p X/2, √p Y/2, √p Z/2}
        let p = 0.5f64;
        let x = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let y = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => cr(0.0),
        });
        let z = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let kraus = vec![
            CMatrix::identity(2).scale_re((1.0 - 3.0 * p / 4.0).sqrt()),
            x.scale_re(p.sqrt() / 2.0),
            y.scale_re(p.sqrt() / 2.0),
            z.scale_re(p.sqrt() / 2.0),
        ];
        let via_kraus = choi_from_kraus(&kraus, 2, 2).unwrap();
        let direct = depolarizing(2, p).unwrap();
        assert!(via_kraus.choi().sub(direct.choi()).max_abs() < 1e-12);
        // sending half of a maximally entangled pair through yields the
        // matching isotropic state
        let iso = direct
            .apply_bipartite(&max_entangled(2).scale_re(0.5))
            .unwrap();
        let expected = max_entangled(2)
            .scale_re((1.0 - p) * 0.5)
            .add(&CMatrix::identity(4).scale_re(p / 4.0));
        assert!(iso.sub(&expected).max_abs() < 1e-12);
    }

    #[test]
    fn choi_rejects_non_tp_and_non_cp() {
        // non-TP: all-zero matrix
        assert!(ChannelChoi::new(2, 2, CMatrix::zeros(4, 4)).is_err());
        // non-CP: transpose map Choi (the SWAP has negative eigenvalues)
        let mut swap = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(i * 2 + j, j * 2 + i)] = cr(1.0);
            }
        }
        assert!(ChannelChoi::new(2, 2, swap).is_err());
    }

    #[test]
    fn random_channels_are_cptp_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let ch = random_channel(2, 3, &mut rng);
        assert_eq!((ch.dim_in, ch.dim_out), (2, 3));
        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        let ch2 = random_channel(2, 3, &mut rng2);
        assert!(ch.choi().sub(ch2.choi()).max_abs() == 0.0);
    }

    #[test]
    fn compose_matches_kraus_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = random_channel(2, 3, &mut rng);
        let f = random_channel(3, 2, &mut rng);
        let fe = compose_channels(&f, &e).unwrap();
        // oracle: apply sequentially to a basis of inputs
        for i in 0..2 {
            for j in 0..2 {
                let mut basis = CMatrix::zeros(2, 2);
                basis[(i, j)] = cr(1.0);
                let seq = f.apply_mat(&e.apply_mat(&basis).unwrap()).unwrap();
                let direct = apply_choi(fe.choi(), 2, 2, &basis).unwrap();
                assert!(seq.sub(&direct).max_abs() < 1e-11);
            }
        }
    }

    #[test]
    fn tensor_matches_separate_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let e = random_channel(2, 2, &mut rng);
        let f = random_channel(2, 2, &mut rng);
        let ef = tensor_channels(&e, &f).unwrap();
        let rho = random_state(2, &mut rng);
        let tau = random_state(2, &mut rng);
        let lhs = ef.apply_mat(&rho.mat().kron(tau.mat())).unwrap();
        let rhs = e
            .apply_mat(rho.mat())
            .unwrap()
            .kron(&f.apply_mat(tau.mat()).unwrap());
        assert!(lhs.sub(&rhs).max_abs() < 1e-11);
    }

    #[test]
    fn replacement_channel_replaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let omega = random_state(2, &mut rng);
        let ch = replacement_channel(&omega, 3).unwrap();
        let rho = random_state(3, &mut rng);
        let out = ch.apply_mat(rho.mat()).unwrap();
        assert!(out.sub(omega.mat()).max_abs() < 1e-12);
        let back = replacement_state(&ch).unwrap();
        assert!(back.mat().sub(omega.mat()).max_abs() < 1e-12);
        // a generic channel is flagged as non-replacement
        assert!(replacement_state(&random_channel(2, 2, &mut rng)).is_err());
    }

    #[test]
    fn embedding_channel_measures() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ms = random_povm_set(2, 2, 2, Some(0.7), &mut rng);
        let ch = embed_povmset_channel(&ms).unwrap();
        assert_eq!((ch.dim_in, ch.dim_out), (4, 2));
        let rho = random_state(2, &mut rng);
        for x in 0..2 {
            let mut setting = CMatrix::zeros(2, 2);
            setting[(x, x)] = cr(1.0);
            let out = ch.apply_mat(&setting.kron(rho.mat())).unwrap();
            for a in 0..2 {
                let born = ms.effect(x, a).inner_re(rho.mat());
                assert!((out[(a, a)].re - born).abs() < 1e-11);
            }
            assert!(out[(0, 1)].norm() < 1e-11);
        }
    }

    #[test]
    fn povm_validation_rejects_incomplete() {
        let half = CMatrix::identity(2).scale_re(0.5);
        assert!(PovmSet::single(2, vec![half.clone(), half.clone()]).is_ok());
        assert!(PovmSet::single(2, vec![half.clone(), half.scale_re(0.5)]).is_err());
    }

    #[test]
    fn noisy_zx_threshold_effects_are_valid() {
        for eta in [0.0, 0.25, 0.70710678, 1.0] {
            let ms = noisy_zx_pair(eta).unwrap();
            assert_eq!((ms.m, ms.n), (2, 2));
        }
    }

    #[test]
    fn random_povm_sets_are_valid_and_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let ms1 = random_povm_set(3, 2, 3, None, &mut a);
        let ms2 = random_povm_set(3, 2, 3, None, &mut b);
        for x in 0..2 {
            for o in 0..3 {
                assert!(ms1.effect(x, o).sub(ms2.effect(x, o)).max_abs() == 0.0);
            }
        }
    }

    #[test]
    fn ensemble_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s1 = random_state(2, &mut rng);
        let s2 = random_state(2, &mut rng);
        assert!(StateEnsemble::new(
            vec![0.5, 0.5],
            vec![s1.mat().clone(), s2.mat().clone()]
        )
        .is_ok());
        assert!(StateEnsemble::new(
            vec![0.7, 0.7],
            vec![s1.mat().clone(), s2.mat().clone()]
        )
        .is_err());
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = haar_unitary(4, &mut rng);
        let gram = u.dagger().matmul(&u);
        assert!(gram.sub(&CMatrix::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn replacement_has_pure_outputs_iff_target_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let plus = CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let pure_target = replacement_channel(&DensityOperator::new(plus).unwrap(), 2).unwrap();
        assert!(min_output_purity(&pure_target, 5, &mut rng).unwrap() > 1.0 - 1e-10);
        let mixed = replacement_channel(&random_state(2, &mut rng), 2).unwrap();
        assert!(min_output_purity(&mixed, 5, &mut rng).unwrap() < 0.999);
    }

    #[test]
    fn eigh_based_validation_catches_scaled_choi() {
        // J and 2J: the latter fails the TP check
        let id = identity_channel(2);
        let scaled = id.choi().scale_re(2.0);
        assert!(ChannelChoi::new(2, 2, scaled).is_err());
        assert!(eigh(&id.choi().clone()).is_ok());
    }
}
