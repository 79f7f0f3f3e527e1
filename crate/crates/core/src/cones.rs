//! Finite descriptions of the convex cones generated by free sets.
//!
//! A cone is specified as the image of a product of PSD parameter blocks
//! under a real-linear assembly map, intersected with homogeneous linear
//! equality constraints:
//!
//! ```text
//! cone = { assembly(v) : v_b ⪰ 0 for every block b, Σ_b L_b(v_b) = 0 }
//! ```
//!
//! All maps act on the real coordinate vectors of Hermitian matrices (see
//! `linalg::hvec`), where the coordinate basis is orthonormal, so adjoints
//! are plain matrix transposes. Each spec stores a strictly feasible
//! interior point, which both witnesses that the cone is solid inside its
//! equality subspace and licenses the dual description
//! `w ∈ cone* ⇔ ∃y: assembly†(w) − L†(y) ⪰ 0 blockwise` used by the engine.
//!
//! Built-ins: incoherent states (diagonal PSD), replacement channels over an
//! inner state cone, jointly measurable POVM grids (deterministic-strategy
//! parents), trivial POVMs (noise measurements `q_i·I`), and the channel
//! embedding of the jointly measurable cone.

use crate::linalg::{cr, hvec, hvec_basis, hvec_len, unhvec, CMatrix};
use crate::objects::PovmSet;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// What kind of object the cone's ambient space holds. Determines slot
/// layout and the slice normaliser used by robustness programs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "object")]
pub enum ObjectKind {
    /// Single operator slot of dimension `d`.
    State { d: usize },
    /// Single Choi slot of dimension `d_in·d_out`.
    Channel { d_in: usize, d_out: usize },
    /// `m·n` effect slots of dimension `d`, in `(setting, outcome)` row-major order.
    PovmSet { d: usize, m: usize, n: usize },
}

impl ObjectKind {
    pub fn slot_dims(&self) -> Vec<usize> {
        match *self {
            ObjectKind::State { d } => vec![d],
            ObjectKind::Channel { d_in, d_out } => vec![d_in * d_out],
            ObjectKind::PovmSet { d, m, n } => vec![d; m * n],
        }
    }

    /// `normalizer(X) = Σ_s tr X_s / divisor` maps a cone element to the
    /// scale of the free object it is a multiple of: traces of states are 1,
    /// of Choi matrices `d_in`, of POVM grids `m·d`.
    pub fn normalizer_divisor(&self) -> f64 {
        match *self {
            ObjectKind::State { .. } => 1.0,
            ObjectKind::Channel { d_in, .. } => d_in as f64,
            ObjectKind::PovmSet { d, m, .. } => (m * d) as f64,
        }
    }
}

/// Dense real-linear map between Hermitian spaces, stored as a matrix on
/// `hvec` coordinates (row-major, `out_len × in_len`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HermLinMap {
    pub dim_in: usize,
    pub dim_out: usize,
    a: Vec<f64>,
}

impl HermLinMap {
    pub fn zeros(dim_in: usize, dim_out: usize) -> Self {
        HermLinMap {
            dim_in,
            dim_out,
            a: vec![0.0; hvec_len(dim_in) * hvec_len(dim_out)],
        }
    }

    /// Builds the coordinate matrix by applying `f` to every basis element.
    /// `f` must be real-linear on Hermitian matrices.
    pub fn from_fn(dim_in: usize, dim_out: usize, mut f: impl FnMut(&CMatrix) -> CMatrix) -> Self {
        let (ni, no) = (hvec_len(dim_in), hvec_len(dim_out));
        let mut a = vec![0.0; ni * no];
        for k in 0..ni {
            let img = f(&hvec_basis(dim_in, k));
            debug_assert_eq!(img.rows(), dim_out);
            let col = hvec(&img.hermitian_part());
            for (r, val) in col.iter().enumerate() {
                a[r * ni + k] = *val;
            }
        }
        HermLinMap {
            dim_in,
            dim_out,
            a,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, d, |m| m.clone())
    }

    /// Coefficient `(out coordinate r, in coordinate k)`.
    pub fn coeff(&self, r: usize, k: usize) -> f64 {
        self.a[r * hvec_len(self.dim_in) + k]
    }

    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let (ni, no) = (hvec_len(self.dim_in), hvec_len(self.dim_out));
        assert_eq!(v.len(), ni);
        let mut out = vec![0.0; no];
        for r in 0..no {
            let row = &self.a[r * ni..(r + 1) * ni];
            out[r] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn apply(&self, h: &CMatrix) -> CMatrix {
        unhvec(self.dim_out, &self.apply_vec(&hvec(h)))
    }

    /// Adjoint with respect to the trace inner product (coordinate transpose).
    pub fn adjoint(&self) -> HermLinMap {
        let (ni, no) = (hvec_len(self.dim_in), hvec_len(self.dim_out));
        let mut a = vec![0.0; ni * no];
        for r in 0..no {
            for k in 0..ni {
                a[k * no + r] = self.a[r * ni + k];
            }
        }
        HermLinMap {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            a,
        }
    }

    pub fn scale(&self, s: f64) -> HermLinMap {
        HermLinMap {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            a: self.a.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &HermLinMap) -> HermLinMap {
        assert_eq!((self.dim_in, self.dim_out), (other.dim_in, other.dim_out));
        HermLinMap {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &HermLinMap) -> HermLinMap {
        assert_eq!(self.dim_in, other.dim_out);
        let (ni, nm, no) = (
            hvec_len(other.dim_in),
            hvec_len(self.dim_in),
            hvec_len(self.dim_out),
        );
        let mut a = vec![0.0; ni * no];
        for r in 0..no {
            for k in 0..ni {
                let mut s = 0.0;
                for j in 0..nm {
                    s += self.a[r * nm + j] * other.a[j * ni + k];
                }
                a[r * ni + k] = s;
            }
        }
        HermLinMap {
            dim_in: other.dim_in,
            dim_out: self.dim_out,
            a,
        }
    }
}

/// One homogeneous operator equality `Σ_b maps[b](v_b) = 0`; `None` means
/// the block does not enter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeEquality {
    pub dim: usize,
    pub maps: Vec<Option<HermLinMap>>,
}

/// How random feasible parameters are drawn for the property suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreeSampler {
    Incoherent,
    Replacement,
    JointlyMeasurable,
    TrivialPovm,
    /// No sampler available (custom cones).
    None,
}

/// Finite description of a free-set cone. See the module docs for the
/// geometry; `interior` must satisfy every equality exactly and be strictly
/// positive definite blockwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeSpec {
    pub kind: ObjectKind,
    /// Registry tag (`"incoherent"`, `"custom"`, ...) for JSON round trips.
    pub name: String,
    pub block_dims: Vec<usize>,
    pub equalities: Vec<ConeEquality>,
    /// `assembly[slot][block]`, `None` when a block does not feed a slot.
    pub assembly: Vec<Vec<Option<HermLinMap>>>,
    pub interior: Vec<CMatrix>,
    pub sampler: FreeSampler,
}

impl ConeSpec {
    pub fn slot_dims(&self) -> Vec<usize> {
        self.kind.slot_dims()
    }

    pub fn n_slots(&self) -> usize {
        self.slot_dims().len()
    }

    pub fn n_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Applies the assembly map to parameter blocks.
    pub fn assemble(&self, params: &[CMatrix]) -> Result<Vec<CMatrix>> {
        if params.len() != self.n_blocks() {
            return Err(Error::Dimension(format!(
                "cone has {} parameter blocks, got {}",
                self.n_blocks(),
                params.len()
            )));
        }
        let dims = self.slot_dims();
        let mut out = Vec::with_capacity(dims.len());
        for (s, &sd) in dims.iter().enumerate() {
            let mut acc = CMatrix::zeros(sd, sd);
            for (b, p) in params.iter().enumerate() {
                if let Some(map) = &self.assembly[s][b] {
                    acc = acc.add(&map.apply(p));
                }
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Structural validation: shapes line up, the interior point satisfies
    /// every equality, and it is strictly PD blockwise.
    pub fn validate(&self) -> Result<()> {
        let n_slots = self.n_slots();
        if self.assembly.len() != n_slots {
            return Err(Error::Config("assembly rows must match slot count".into()));
        }
        for row in &self.assembly {
            if row.len() != self.n_blocks() {
                return Err(Error::Config("assembly columns must match block count".into()));
            }
        }
        for (s, row) in self.assembly.iter().enumerate() {
            for (b, m) in row.iter().enumerate() {
                if let Some(m) = m {
                    if m.dim_in != self.block_dims[b] || m.dim_out != self.slot_dims()[s] {
                        return Err(Error::Config(format!(
                            "assembly map ({s},{b}) has shape {}→{}, expected {}→{}",
                            m.dim_in,
                            m.dim_out,
                            self.block_dims[b],
                            self.slot_dims()[s]
                        )));
                    }
                }
            }
        }
        if self.interior.len() != self.n_blocks() {
            return Err(Error::Config("interior point must cover every block".into()));
        }
        for (b, p) in self.interior.iter().enumerate() {
            if p.rows() != self.block_dims[b] {
                return Err(Error::Config(format!("interior block {b} has wrong dimension")));
            }
            let lo = crate::linalg::min_eig(&p.hermitian_part())?;
            if lo <= 1e-12 {
                return Err(Error::Config(format!(
                    "interior block {b} is not strictly positive (λ_min = {lo:.3e})"
                )));
            }
        }
        for (e, eq) in self.equalities.iter().enumerate() {
            if eq.maps.len() != self.n_blocks() {
                return Err(Error::Config(format!("equality {e} must cover every block")));
            }
            let mut acc = CMatrix::zeros(eq.dim, eq.dim);
            for (b, m) in eq.maps.iter().enumerate() {
                if let Some(m) = m {
                    if m.dim_in != self.block_dims[b] || m.dim_out != eq.dim {
                        return Err(Error::Config(format!("equality {e} map {b} has wrong shape")));
                    }
                    acc = acc.add(&m.apply(&self.interior[b]));
                }
            }
            if acc.max_abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "interior point violates equality {e} by {:.3e}",
                    acc.max_abs()
                )));
            }
        }
        Ok(())
    }

    /// Random feasible parameters for the attached sampler, for property and
    /// closure tests. The result is blockwise PSD and satisfies every
    /// equality exactly (up to arithmetic).
    pub fn random_params<R: Rng>(&self, rng: &mut R) -> Result<Vec<CMatrix>> {
        use crate::objects::ginibre;
        match self.sampler {
            FreeSampler::Incoherent => {
                let d = self.block_dims[0];
                let mut m = CMatrix::zeros(d, d);
                for i in 0..d {
                    m[(i, i)] = cr(rng.gen_range(0.05..1.0));
                }
                Ok(vec![m])
            }
            FreeSampler::Replacement => {
                // the single state block of the inner cone, diagonal case
                let d = self.block_dims[0];
                let mut m = CMatrix::zeros(d, d);
                for i in 0..d {
                    m[(i, i)] = cr(rng.gen_range(0.05..1.0));
                }
                Ok(vec![m])
            }
            FreeSampler::JointlyMeasurable => {
                // random parent POVM: normalise Wishart blocks so they sum to I
                let d = self.block_dims[0];
                let k = self.n_blocks() - 1; // last block is the scalar t
                let h: Vec<CMatrix> = (0..k)
                    .map(|_| {
                        let g = ginibre(d, d, rng);
                        g.matmul(&g.dagger())
                    })
                    .collect();
                let mut total = CMatrix::zeros(d, d);
                for x in &h {
                    total = total.add(x);
                }
                let (_, inv_sqrt) = crate::linalg::pinv_sqrt(&total.hermitian_part(), 1e-12)?;
                let mut params: Vec<CMatrix> = h
                    .iter()
                    .map(|x| inv_sqrt.matmul(x).matmul(&inv_sqrt).hermitian_part())
                    .collect();
                let mut t = CMatrix::zeros(1, 1);
                t[(0, 0)] = cr(1.0);
                params.push(t);
                Ok(params)
            }
            FreeSampler::TrivialPovm => {
                let n = self.n_blocks();
                let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
                let total: f64 = q.iter().sum();
                q.iter_mut().for_each(|x| *x /= total);
                Ok(q
                    .iter()
                    .map(|&v| {
                        let mut m = CMatrix::zeros(1, 1);
                        m[(0, 0)] = cr(v);
                        m
                    })
                    .collect())
            }
            FreeSampler::None => Err(Error::Mode("cone has no random sampler attached".into())),
        }
    }
}

/// Diagonal PSD matrices: one `d×d` PSD block with all off-diagonal
/// coordinates pinned to zero.
pub fn incoherent_state_cone(d: usize) -> ConeSpec {
    let offdiag = HermLinMap::from_fn(d, d, |m| {
        let mut out = m.clone();
        for i in 0..d {
            out[(i, i)] = cr(0.0);
        }
        out
    });
    ConeSpec {
        kind: ObjectKind::State { d },
        name: "incoherent".into(),
        block_dims: vec![d],
        equalities: vec![ConeEquality {
            dim: d,
            maps: vec![Some(offdiag)],
        }],
        assembly: vec![vec![Some(HermLinMap::identity(d))]],
        interior: vec![CMatrix::identity(d)],
        sampler: FreeSampler::Incoherent,
    }
}

/// Channels that replace the input with a free state: Choi matrices
/// `I_{d_in} ⊗ σ̃` with `σ̃` ranging over the inner state cone.
pub fn replacement_channel_cone(inner: &ConeSpec, d_in: usize) -> Result<ConeSpec> {
    let d = match inner.kind {
        ObjectKind::State { d } => d,
        _ => {
            return Err(Error::Config(
                "replacement cone needs an inner state cone".into(),
            ))
        }
    };
    let id_in = CMatrix::identity(d_in);
    let assembly = vec![inner.assembly[0]
        .iter()
        .map(|m| {
            m.as_ref().map(|inner_map| {
                HermLinMap::from_fn(inner_map.dim_in, d_in * d, |v| id_in.kron(&inner_map.apply(v)))
            })
        })
        .collect()];
    Ok(ConeSpec {
        kind: ObjectKind::Channel {
            d_in,
            d_out: d,
        },
        name: "replacement".into(),
        block_dims: inner.block_dims.clone(),
        equalities: inner.equalities.clone(),
        assembly,
        interior: inner.interior.clone(),
        sampler: FreeSampler::Replacement,
    })
}

/// Number of deterministic response strategies `settings → outcomes`.
pub fn strategy_count(m: usize, n: usize) -> Result<usize> {
    let count = (n as u64).checked_pow(m as u32).unwrap_or(u64::MAX);
    if count > 64 {
        return Err(Error::Size(format!(
            "jointly measurable cone needs n^m ≤ 64 strategies, got {n}^{m}"
        )));
    }
    Ok(count as usize)
}

/// Outcome assigned to setting `x` by strategy `lambda` (base-`n` digits,
/// setting 0 most significant).
pub fn strategy_outcome(lambda: usize, x: usize, m: usize, n: usize) -> usize {
    (lambda / n.pow((m - 1 - x) as u32)) % n
}

/// Jointly measurable POVM grids, scaled: effects `M_{a|x} = Σ_{λ(x)=a} G_λ`
/// for a parent `G_λ ⪰ 0` with `Σ_λ G_λ = t·I`, `t ≥ 0`. Membership at
/// `t = 1` is exactly joint measurability.
pub fn jointly_measurable_cone(d: usize, m: usize, n: usize) -> Result<ConeSpec> {
    let n_lam = strategy_count(m, n)?;
    let mut block_dims = vec![d; n_lam];
    block_dims.push(1); // the scale t
    let id = HermLinMap::identity(d);
    // Σ_λ G_λ − t·I = 0
    let mut eq_maps: Vec<Option<HermLinMap>> = (0..n_lam).map(|_| Some(id.clone())).collect();
    eq_maps.push(Some(HermLinMap::from_fn(1, d, |s| {
        CMatrix::identity(d).scale(s[(0, 0)] * cr(-1.0))
    })));
    let mut assembly = Vec::with_capacity(m * n);
    for x in 0..m {
        for a in 0..n {
            let mut row: Vec<Option<HermLinMap>> = Vec::with_capacity(n_lam + 1);
            for lambda in 0..n_lam {
                row.push((strategy_outcome(lambda, x, m, n) == a).then(|| id.clone()));
            }
            row.push(None);
            assembly.push(row);
        }
    }
    let mut interior: Vec<CMatrix> =
        vec![CMatrix::identity(d).scale_re(1.0 / n_lam as f64); n_lam];
    let mut t = CMatrix::zeros(1, 1);
    t[(0, 0)] = cr(1.0);
    interior.push(t);
    Ok(ConeSpec {
        kind: ObjectKind::PovmSet { d, m, n },
        name: "jointly_measurable".into(),
        block_dims,
        equalities: vec![ConeEquality {
            dim: d,
            maps: eq_maps,
        }],
        assembly,
        interior,
        sampler: FreeSampler::JointlyMeasurable,
    })
}

/// Trivial (noise) measurements `{q_a·I}_a`, `q ≥ 0` — the free set for
/// measurement informativeness. Single setting.
pub fn trivial_povm_cone(d: usize, n: usize) -> ConeSpec {
    let scalar_to_id =
        HermLinMap::from_fn(1, d, |s| CMatrix::identity(d).scale(s[(0, 0)] * cr(1.0)));
    let assembly = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| (a == b).then(|| scalar_to_id.clone()))
                .collect()
        })
        .collect();
    let one = {
        let mut m = CMatrix::zeros(1, 1);
        m[(0, 0)] = cr(1.0);
        m
    };
    ConeSpec {
        kind: ObjectKind::PovmSet { d, m: 1, n },
        name: "trivial_povm".into(),
        block_dims: vec![1; n],
        equalities: vec![],
        assembly,
        interior: vec![one; n],
        sampler: FreeSampler::TrivialPovm,
    }
}

/// The jointly measurable cone pushed through the measurement-embedding
/// channel: Choi matrices `Σ_{x,a} |x><x| ⊗ M_{a|x}^T ⊗ |a><a|` with
/// `{M_{a|x}}` ranging over the jointly measurable cone. Input dimension
/// `m·d`, output dimension `n`.
pub fn embedded_compatible_channel_cone(d: usize, m: usize, n: usize) -> Result<ConeSpec> {
    let jm = jointly_measurable_cone(d, m, n)?;
    let n_lam = strategy_count(m, n)?;
    let dj = m * d * n;
    // block G_λ feeds Σ_x |x><x| ⊗ G^T ⊗ |λ(x)><λ(x)|
    let mut row: Vec<Option<HermLinMap>> = Vec::with_capacity(n_lam + 1);
    for lambda in 0..n_lam {
        row.push(Some(HermLinMap::from_fn(d, dj, move |g| {
            let gt = g.transpose();
            let mut out = CMatrix::zeros(dj, dj);
            for x in 0..m {
                let a = strategy_outcome(lambda, x, m, n);
                for r in 0..d {
                    for rp in 0..d {
                        let idx_r = (x * d + r) * n + a;
                        let idx_c = (x * d + rp) * n + a;
                        out[(idx_r, idx_c)] += gt[(r, rp)];
                    }
                }
            }
            out
        })));
    }
    row.push(None);
    Ok(ConeSpec {
        kind: ObjectKind::Channel {
            d_in: m * d,
            d_out: n,
        },
        name: "embedded_compatible".into(),
        block_dims: jm.block_dims,
        equalities: jm.equalities,
        assembly: vec![row],
        interior: jm.interior,
        sampler: FreeSampler::JointlyMeasurable,
    })
}

/// Builds the POVM set assembled from jointly-measurable-cone parameters
/// with `t = 1` (for cross-checks between the grid and channel pictures).
pub fn povm_set_from_jm_params(d: usize, m: usize, n: usize, params: &[CMatrix]) -> Result<PovmSet> {
    let jm = jointly_measurable_cone(d, m, n)?;
    let slots = jm.assemble(params)?;
    let effects: Vec<Vec<CMatrix>> = (0..m)
        .map(|x| (0..n).map(|a| slots[x * n + a].clone()).collect())
        .collect();
    PovmSet::new(d, effects)
}

// ---------------------------------------------------------------------------
// JSON registry
// ---------------------------------------------------------------------------

/// Parses a cone description. Built-in kinds take small parameter sets;
/// `"custom"` embeds a full [`ConeSpec`] under `"spec"`, which is validated
/// before use.
///
/// ```json
/// {"kind": "incoherent", "d": 2}
/// {"kind": "replacement", "d_in": 2, "inner": {"kind": "incoherent", "d": 2}}
/// {"kind": "jointly_measurable", "d": 2, "m": 2, "n": 2}
/// {"kind": "trivial_povm", "d": 2, "n": 2}
/// {"kind": "embedded_compatible", "d": 2, "m": 2, "n": 2}
/// {"kind": "custom", "spec": { ... }}
/// ```
pub fn cone_from_json(v: &serde_json::Value) -> Result<ConeSpec> {
    let kind = v
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| Error::Config("cone JSON needs a string \"kind\"".into()))?;
    let dim = |key: &str| -> Result<usize> {
        v.get(key)
            .and_then(|x| x.as_u64())
            .map(|x| x as usize)
            .ok_or_else(|| Error::Config(format!("cone JSON needs integer \"{key}\"")))
    };
    let spec = match kind {
        "incoherent" => incoherent_state_cone(dim("d")?),
        "replacement" => {
            let inner_v = v
                .get("inner")
                .ok_or_else(|| Error::Config("replacement cone needs \"inner\"".into()))?;
            let inner = cone_from_json(inner_v)?;
            replacement_channel_cone(&inner, dim("d_in")?)?
        }
        "jointly_measurable" => jointly_measurable_cone(dim("d")?, dim("m")?, dim("n")?)?,
        "trivial_povm" => trivial_povm_cone(dim("d")?, dim("n")?),
        "embedded_compatible" => embedded_compatible_channel_cone(dim("d")?, dim("m")?, dim("n")?)?,
        "custom" => {
            let spec_v = v
                .get("spec")
                .ok_or_else(|| Error::Config("custom cone needs \"spec\"".into()))?;
            serde_json::from_value(spec_v.clone())
                .map_err(|e| Error::Config(format!("bad custom cone spec: {e}")))?
        }
        other => {
            return Err(Error::Config(format!("unknown cone kind {other:?}")));
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Inverse of [`cone_from_json`] for built-ins; custom cones serialise fully.
pub fn cone_to_json(spec: &ConeSpec) -> serde_json::Value {
    use serde_json::json;
    match (spec.name.as_str(), spec.kind) {
        ("incoherent", ObjectKind::State { d }) => json!({"kind": "incoherent", "d": d}),
        ("replacement", ObjectKind::Channel { d_in, d_out }) => json!({
            "kind": "replacement", "d_in": d_in,
            "inner": {"kind": "incoherent", "d": d_out},
        }),
        ("jointly_measurable", ObjectKind::PovmSet { d, m, n }) => {
            json!({"kind": "jointly_measurable", "d": d, "m": m, "n": n})
        }
        ("trivial_povm", ObjectKind::PovmSet { d, n, .. }) => {
            json!({"kind": "trivial_povm", "d": d, "n": n})
        }
        ("embedded_compatible", ObjectKind::Channel { d_in, d_out }) => {
            // d_in = m·d and d_out = n are not invertible alone; embed fully
            let _ = (d_in, d_out);
            json!({"kind": "custom", "spec": serde_json::to_value(spec).unwrap()})
        }
        _ => json!({"kind": "custom", "spec": serde_json::to_value(spec).unwrap()}),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, is_psd};
    use crate::objects::embed_povmset_channel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_herm(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(d, d, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .hermitian_part()
    }

    #[test]
    fn linmap_adjoint_is_trace_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let map = HermLinMap::from_fn(2, 3, |m| {
            // embed a qubit operator into the top-left corner, plus trace on the diagonal
            let mut out = CMatrix::zeros(3, 3);
            for i in 0..2 {
                for j in 0..2 {
                    out[(i, j)] = m[(i, j)];
                }
            }
            out[(2, 2)] = m.trace();
            out
        });
        for _ in 0..10 {
            let v = random_herm(2, &mut rng);
            let w = random_herm(3, &mut rng);
            let lhs = w.inner_re(&map.apply(&v));
            let rhs = map.adjoint().apply(&w).inner_re(&v);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn linmap_compose_matches_sequential_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let f = HermLinMap::from_fn(2, 4, |m| CMatrix::identity(2).kron(m).scale_re(0.5));
        let g = HermLinMap::from_fn(4, 4, |m| m.transpose());
        let gf = g.compose(&f);
        for _ in 0..5 {
            let v = random_herm(2, &mut rng);
            let seq = g.apply(&f.apply(&v));
            assert!(gf.apply(&v).sub(&seq).max_abs() < 1e-12);
        }
    }

    #[test]
    fn builtin_cones_validate() {
        incoherent_state_cone(3).validate().unwrap();
        trivial_povm_cone(2, 3).validate().unwrap();
        jointly_measurable_cone(2, 2, 2).unwrap().validate().unwrap();
        embedded_compatible_channel_cone(2, 2, 2).unwrap().validate().unwrap();
        let inner = incoherent_state_cone(2);
        replacement_channel_cone(&inner, 2).unwrap().validate().unwrap();
    }

    #[test]
    fn strategy_guard_rejects_large_grids() {
        assert!(jointly_measurable_cone(2, 4, 3).is_err()); // 3^4 = 81 > 64
        assert!(jointly_measurable_cone(2, 3, 4).unwrap().validate().is_ok());
    }

    #[test]
    fn incoherent_assembly_is_diagonal_and_scales() {
        let cone = incoherent_state_cone(2);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..5 {
            let params = cone.random_params(&mut rng).unwrap();
            let x = &cone.assemble(&params).unwrap()[0];
            assert!(x[(0, 1)].norm() < 1e-15);
            assert!(is_psd(x, 1e-12).unwrap());
            // cone scaling: assembling scaled params scales the element
            let scaled: Vec<CMatrix> = params.iter().map(|p| p.scale_re(2.5)).collect();
            let y = &cone.assemble(&scaled).unwrap()[0];
            assert!(y.sub(&x.scale_re(2.5)).max_abs() < 1e-13);
        }
    }

    #[test]
    fn jm_random_params_assemble_to_povm_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let cone = jointly_measurable_cone(2, 2, 2).unwrap();
        for _ in 0..20 {
            let params = cone.random_params(&mut rng).unwrap();
            // equality holds: Σ G_λ = t·I
            let mut total = CMatrix::zeros(2, 2);
            for g in &params[..4] {
                assert!(is_psd(g, 1e-10).unwrap());
                total = total.add(g);
            }
            let t = params[4][(0, 0)].re;
            assert!(total.sub(&CMatrix::identity(2).scale_re(t)).max_abs() < 1e-10);
            // assembled slots form settings that sum to t·I
            let slots = cone.assemble(&params).unwrap();
            for x in 0..2 {
                let sum = slots[x * 2].add(&slots[x * 2 + 1]);
                assert!(sum.sub(&CMatrix::identity(2).scale_re(t)).max_abs() < 1e-10);
            }
            let ms = povm_set_from_jm_params(2, 2, 2, &params).unwrap();
            assert_eq!((ms.m, ms.n), (2, 2));
        }
    }

    #[test]
    fn embedded_cone_matches_channel_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let jm = jointly_measurable_cone(2, 2, 2).unwrap();
        let emb = embedded_compatible_channel_cone(2, 2, 2).unwrap();
        for _ in 0..5 {
            let params = jm.random_params(&mut rng).unwrap();
            let ms = povm_set_from_jm_params(2, 2, 2, &params).unwrap();
            let via_channel = embed_povmset_channel(&ms).unwrap();
            let via_cone = &emb.assemble(&params).unwrap()[0];
            assert!(via_cone.sub(via_channel.choi()).max_abs() < 1e-10);
        }
    }

    #[test]
    fn replacement_assembly_is_identity_tensor_state() {
        let inner = incoherent_state_cone(2);
        let cone = replacement_channel_cone(&inner, 3).unwrap();
        let mut diag = CMatrix::zeros(2, 2);
        diag[(0, 0)] = cr(0.3);
        diag[(1, 1)] = cr(0.7);
        let j = &cone.assemble(&[diag.clone()]).unwrap()[0];
        assert!(j.sub(&CMatrix::identity(3).kron(&diag)).max_abs() < 1e-13);
    }

    #[test]
    fn nonneg_combinations_stay_feasible() {
        // conic combinations of feasible parameter tuples remain feasible
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let cone = jointly_measurable_cone(2, 2, 2).unwrap();
        let p1 = cone.random_params(&mut rng).unwrap();
        let p2 = cone.random_params(&mut rng).unwrap();
        let (s1, s2) = (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
        let combo: Vec<CMatrix> = p1
            .iter()
            .zip(&p2)
            .map(|(a, b)| a.scale_re(s1).add(&b.scale_re(s2)))
            .collect();
        for g in &combo[..4] {
            assert!(is_psd(g, 1e-10).unwrap());
        }
        let t = combo[4][(0, 0)].re;
        let mut total = CMatrix::zeros(2, 2);
        for g in &combo[..4] {
            total = total.add(g);
        }
        assert!(total.sub(&CMatrix::identity(2).scale_re(t)).max_abs() < 1e-9);
    }

    #[test]
    fn registry_round_trips() {
        for v in [
            serde_json::json!({"kind": "incoherent", "d": 3}),
            serde_json::json!({"kind": "trivial_povm", "d": 2, "n": 2}),
            serde_json::json!({"kind": "jointly_measurable", "d": 2, "m": 2, "n": 2}),
            serde_json::json!({"kind": "replacement", "d_in": 2, "inner": {"kind": "incoherent", "d": 2}}),
        ] {
            let spec = cone_from_json(&v).unwrap();
            let back = cone_to_json(&spec);
            assert_eq!(v, back);
        }
        // custom route
        let spec = embedded_compatible_channel_cone(2, 2, 2).unwrap();
        let j = cone_to_json(&spec);
        let re = cone_from_json(&j).unwrap();
        assert_eq!(re.block_dims, spec.block_dims);
        assert!(cone_from_json(&serde_json::json!({"kind": "nope"})).is_err());
    }

    #[test]
    fn strategy_indexing_consistent() {
        // m=2, n=2: λ = 2·λ(0) + λ(1)
        assert_eq!(strategy_outcome(0b10, 0, 2, 2), 1);
        assert_eq!(strategy_outcome(0b10, 1, 2, 2), 0);
        let m = 3;
        let n = 2;
        for lambda in 0..strategy_count(m, n).unwrap() {
            let digits: Vec<usize> = (0..m).map(|x| strategy_outcome(lambda, x, m, n)).collect();
            let rebuilt = digits.iter().fold(0, |acc, &d| acc * n + d);
            assert_eq!(rebuilt, lambda);
        }
    }
}
