//! Deterministic distillation limits.
//!
//! Converting a channel `E` into a resourceful target `T` by a free protocol
//! cannot beat the projective value: any output `N` with worst-case fidelity
//! `F(N, T) ≥ 1 − ε` forces
//!
//! ```text
//! ε ≥ ( F(T)/(1 − F(T)) · Ω(E) + 1 )⁻¹
//! ```
//!
//! where `F(T)` is the fidelity overlap of the target with the free set, and
//! `n` parallel uses obey `n ≥ log_Ω [(1−ε)(1−F)/(εF)]` whenever the free
//! set is closed under the combining operation (tensor or composition), via
//! submultiplicativity of the projective value.
//!
//! Worst-case channel fidelity is NP-hard in general; exact values are only
//! offered where the structure allows (replacement channels, whose outputs
//! ignore the input), and every sampled quantity is flagged as the one-sided
//! bound it is.

use crate::cones::{ConeSpec, FreeSampler, ObjectKind};
use crate::engine::{cone_membership, cone_min_inner, SolverOpts};
use crate::linalg::{
    fidelity, hvec_basis, hvec_len, permute_systems, CMatrix, C64,
};
use crate::monotones::proj_robustness_channel;
use crate::objects::{
    apply_choi, apply_choi_bipartite, max_entangled, min_output_purity, replacement_state,
    ChannelChoi, DensityOperator,
};
use crate::{Error, Extended, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Purity slack for the "pure target" premise and for pure-input checks.
pub const PURITY_TOL: f64 = 1e-8;

/// Whether a reported fidelity-type value is exact or a one-sided bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityBound {
    /// The value is exact (up to solver/eigensolver tolerance).
    Exact,
    /// The value came from sampling a minimisation: the true value is
    /// less than or equal to it.
    Upper,
}

/// A fidelity-type value together with its bound character.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FidelityEstimate {
    pub value: f64,
    pub bound: FidelityBound,
}

/// How to evaluate a worst-case channel fidelity or channel overlap.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FidelityMode {
    /// Closed form for replacement channels; errors on anything else.
    ExactReplacement,
    /// Seeded net of pure bipartite inputs with local refinement. The
    /// result is an upper bound on the true minimum.
    Sampled {
        samples: usize,
        refine_rounds: usize,
        seed: u64,
    },
}

impl Default for FidelityMode {
    fn default() -> Self {
        FidelityMode::Sampled {
            samples: 40,
            refine_rounds: 3,
            seed: 7,
        }
    }
}

fn random_unit<R: Rng>(d: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|z| z / norm).collect();
        }
    }
}

fn perturb_unit<R: Rng>(v: &[C64], delta: f64, rng: &mut R) -> Vec<C64> {
    let g = random_unit(v.len(), rng);
    let w: Vec<C64> = v
        .iter()
        .zip(&g)
        .map(|(a, b)| a + b * C64::new(delta, 0.0))
        .collect();
    let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    w.iter().map(|z| z / norm).collect()
}

/// Worst-case fidelity `min_ψ F(id⊗E(ψ), id⊗F(ψ))` between two channels.
///
/// `ExactReplacement` uses the fact that replacement channels ignore their
/// input, so the minimum is the fidelity of the replaced states. `Sampled`
/// evaluates the objective on a seeded net of pure bipartite inputs
/// (including the maximally entangled one) and refines locally around the
/// best point; the result only upper-bounds the true minimum.
pub fn worst_case_fidelity(
    e: &ChannelChoi,
    f: &ChannelChoi,
    mode: FidelityMode,
) -> Result<FidelityEstimate> {
    if e.dim_in != f.dim_in || e.dim_out != f.dim_out {
        return Err(Error::Dimension(
            "worst-case fidelity needs channels with identical shapes".into(),
        ));
    }
    match mode {
        FidelityMode::ExactReplacement => {
            let omega = replacement_state(e)?;
            let tau = replacement_state(f)?;
            Ok(FidelityEstimate {
                value: fidelity(omega.mat(), tau.mat())?,
                bound: FidelityBound::Exact,
            })
        }
        FidelityMode::Sampled {
            samples,
            refine_rounds,
            seed,
        } => {
            let d = e.dim_in;
            let dd = d * d;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let eval = |psi: &CMatrix| -> Result<f64> {
                let out_e = apply_choi_bipartite(e.choi(), e.dim_in, e.dim_out, psi)?;
                let out_f = apply_choi_bipartite(f.choi(), f.dim_in, f.dim_out, psi)?;
                fidelity(&out_e, &out_f)
            };
            // the maximally entangled input is the canonical worst case
            let phi = max_entangled(d).scale_re(1.0 / d as f64);
            let mut best_val = eval(&phi)?;
            let mut best_vec: Vec<C64> = {
                let s = (d as f64).sqrt().recip();
                let mut v = vec![C64::new(0.0, 0.0); dd];
                for i in 0..d {
                    v[i * d + i] = C64::new(s, 0.0);
                }
                v
            };
            for _ in 0..samples {
                let v = random_unit(dd, &mut rng);
                let val = eval(&CMatrix::projector(&v))?;
                if val < best_val {
                    best_val = val;
                    best_vec = v;
                }
            }
            let mut delta = 0.3;
            for _ in 0..refine_rounds {
                for _ in 0..samples / 2 {
                    let v = perturb_unit(&best_vec, delta, &mut rng);
                    let val = eval(&CMatrix::projector(&v))?;
                    if val < best_val {
                        best_val = val;
                        best_vec = v;
                    }
                }
                delta /= 3.0;
            }
            Ok(FidelityEstimate {
                value: best_val,
                bound: FidelityBound::Upper,
            })
        }
    }
}

/// Fidelity overlap of a pure state with the free set:
/// `max_{σ free} ⟨φ, σ⟩`, a conic linear program.
pub fn free_overlap_state(
    phi: &DensityOperator,
    spec: &ConeSpec,
    opts: &SolverOpts,
) -> Result<f64> {
    let want = ObjectKind::State { d: phi.dim() };
    if spec.kind != want {
        return Err(Error::Config(format!(
            "cone describes {:?} but the state is {:?}",
            spec.kind, want
        )));
    }
    if !phi.is_pure(PURITY_TOL) {
        return Err(Error::Domain(
            "the overlap formula needs a pure target state".into(),
        ));
    }
    let (neg, _) = cone_min_inner(spec, &[phi.mat().scale_re(-1.0)], opts).map_err(|e| match e {
        Error::IllPosed(_) => Error::Domain("the free set is empty".into()),
        other => other,
    })?;
    Ok((-neg).clamp(0.0, 1.0))
}

/// Exact overlap of a pure replacement target with a replacement free set:
/// `⟨(I/d_in)⊗φ, I⊗σ⟩ = ⟨φ, σ⟩` turns the state overlap into a conic LP
/// directly over the channel cone.
fn pure_replacement_overlap(t: &ChannelChoi, spec: &ConeSpec, opts: &SolverOpts) -> Result<f64> {
    let phi = replacement_state(t)?;
    if !phi.is_pure(PURITY_TOL) {
        return Err(Error::Mode(
            "exact channel overlap needs a pure replacement target".into(),
        ));
    }
    let w = CMatrix::identity(t.dim_in)
        .scale_re(1.0 / t.dim_in as f64)
        .kron(phi.mat());
    let (neg, _) = cone_min_inner(spec, &[w.scale_re(-1.0)], opts)?;
    Ok((-neg).clamp(0.0, 1.0))
}

/// Fidelity overlap of a channel with the free channel set,
/// `max_{M free} min_ψ F(id⊗T(ψ), id⊗M(ψ))`.
///
/// Free targets have overlap exactly `1` (detected by cone membership).
/// `ExactReplacement` handles pure replacement targets over replacement
/// free sets, where the minimax collapses to the state overlap. `Sampled`
/// evaluates the inner-product form `min_ψ max_M ⟨id⊗T(ψ), id⊗M(ψ)⟩` on a
/// pure-input net and upper-bounds the `min`; the form equals the fidelity
/// only while the target keeps pure inputs pure (with reference), so each
/// sample is purity-guarded, and replacement targets are routed to the
/// exact collapse instead.
pub fn free_overlap_channel(
    t: &ChannelChoi,
    spec: &ConeSpec,
    mode: FidelityMode,
    opts: &SolverOpts,
) -> Result<FidelityEstimate> {
    let want = ObjectKind::Channel {
        d_in: t.dim_in,
        d_out: t.dim_out,
    };
    if spec.kind != want {
        return Err(Error::Config(format!(
            "cone describes {:?} but the channel is {:?}",
            spec.kind, want
        )));
    }
    let (member, _) = cone_membership(spec, &[t.choi().clone()], opts)?;
    if member {
        return Ok(FidelityEstimate {
            value: 1.0,
            bound: FidelityBound::Exact,
        });
    }
    match mode {
        FidelityMode::ExactReplacement => {
            if spec.sampler != FreeSampler::Replacement {
                return Err(Error::Mode(
                    "exact channel overlap is only available over replacement free sets".into(),
                ));
            }
            Ok(FidelityEstimate {
                value: pure_replacement_overlap(t, spec, opts)?,
                bound: FidelityBound::Exact,
            })
        }
        FidelityMode::Sampled {
            samples,
            refine_rounds,
            seed,
        } => {
            // Replacement targets over replacement free sets collapse to an
            // exact state overlap — prefer that to sampling. (They do NOT
            // satisfy the pure-output premise below: with an entangled
            // reference the output ψ_R⊗φ is mixed, and the inner-product
            // form would understate the fidelity.)
            if spec.sampler == FreeSampler::Replacement && replacement_state(t).is_ok() {
                return Ok(FidelityEstimate {
                    value: pure_replacement_overlap(t, spec, opts)?,
                    bound: FidelityBound::Exact,
                });
            }
            let d = t.dim_in;
            let dd = d * d;
            let dj = t.dim_in * t.dim_out;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // inner maximisation over the free set at a fixed pure input;
            // valid only while the target keeps pure inputs pure, so guard
            // every sample
            let eval = |psi: &CMatrix| -> Result<f64> {
                let x = apply_choi_bipartite(t.choi(), t.dim_in, t.dim_out, psi)?;
                if x.inner_re(&x) < 1.0 - 100.0 * PURITY_TOL {
                    return Err(Error::Mode(
                        "target output is mixed on a sampled pure input; the sampled \
                         overlap formula needs a target that keeps pure states pure"
                            .into(),
                    ));
                }
                let mut k = CMatrix::zeros(dj, dj);
                for idx in 0..hvec_len(dj) {
                    let basis = hvec_basis(dj, idx);
                    let out = apply_choi_bipartite(&basis, t.dim_in, t.dim_out, psi)?;
                    let val = x.inner_re(&out);
                    if val != 0.0 {
                        k = k.add(&basis.scale_re(val));
                    }
                }
                let (neg, _) = cone_min_inner(spec, &[k.scale_re(-1.0)], opts)?;
                Ok(-neg)
            };
            let phi = max_entangled(d).scale_re(1.0 / d as f64);
            let mut best_val = eval(&phi)?;
            let mut best_vec: Vec<C64> = {
                let s = (d as f64).sqrt().recip();
                let mut v = vec![C64::new(0.0, 0.0); dd];
                for i in 0..d {
                    v[i * d + i] = C64::new(s, 0.0);
                }
                v
            };
            for _ in 0..samples {
                let v = random_unit(dd, &mut rng);
                let val = eval(&CMatrix::projector(&v))?;
                if val < best_val {
                    best_val = val;
                    best_vec = v;
                }
            }
            let mut delta = 0.3;
            for _ in 0..refine_rounds {
                for _ in 0..samples / 2 {
                    let v = perturb_unit(&best_vec, delta, &mut rng);
                    let val = eval(&CMatrix::projector(&v))?;
                    if val < best_val {
                        best_val = val;
                        best_vec = v;
                    }
                }
                delta /= 3.0;
            }
            Ok(FidelityEstimate {
                value: best_val.clamp(0.0, 1.0),
                bound: FidelityBound::Upper,
            })
        }
    }
}

/// Checks the distillation premise that the target maps pure inputs to pure
/// outputs, by sampling. Unitary/isometric channels and pure replacement
/// channels pass.
pub fn check_pure_target(t: &ChannelChoi, samples: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let purity = min_output_purity(t, samples, &mut rng)?;
    if purity < 1.0 - 100.0 * PURITY_TOL {
        return Err(Error::Domain(format!(
            "target channel mixes some pure input (sampled output purity {purity:.6}); \
             the distillation bound does not apply"
        )));
    }
    Ok(())
}

/// Lower bound on the error of any free conversion toward a target with
/// free-set overlap `overlap`, from an input with projective value `omega`:
/// `ε ≥ (overlap/(1−overlap)·omega + 1)⁻¹`.
///
/// An infinite projective value (or a free target, `overlap = 1`) makes the
/// bound vacuous and returns `0`.
pub fn error_bound(omega: &Extended, overlap: f64) -> Result<f64> {
    if !(overlap > 0.0 && overlap <= 1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "overlap must lie in (0, 1], got {overlap}"
        )));
    }
    let overlap = overlap.min(1.0);
    if overlap >= 1.0 {
        return Ok(0.0);
    }
    let om = match omega {
        Extended::Infinite => return Ok(0.0),
        Extended::Finite(v) => *v,
    };
    if om < 1.0 - 1e-9 {
        return Err(Error::Domain(format!(
            "the projective value is at least 1 by definition, got {om}"
        )));
    }
    Ok(1.0 / (overlap / (1.0 - overlap) * om.max(1.0) + 1.0))
}

/// Lower bound on the number of parallel uses needed to distil a target
/// with overlap `overlap` up to error `eps` from a channel with projective
/// value `omega`: `n ≥ log_omega [(1−eps)(1−overlap)/(eps·overlap)]`.
/// The caller takes the ceiling.
///
/// `omega = 1` cannot be a base (the bound is undefined, and genuinely no
/// finite count suffices when the ratio exceeds 1); `omega = ∞` gives the
/// vacuous bound `0`.
pub fn overhead_bound(omega: &Extended, overlap: f64, eps: f64) -> Result<f64> {
    if !(overlap > 0.0 && overlap < 1.0) {
        return Err(Error::Domain(format!(
            "overlap must lie strictly inside (0, 1), got {overlap}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!(
            "error must lie strictly inside (0, 1), got {eps}"
        )));
    }
    let om = match omega {
        Extended::Infinite => return Ok(0.0),
        Extended::Finite(v) => *v,
    };
    if om <= 1.0 + 1e-12 {
        return Err(Error::IllPosed(
            "the input's projective value is 1 (it is free up to tolerance): \
             no number of copies helps, and the logarithm base is degenerate"
                .into(),
        ));
    }
    let arg = (1.0 - eps) * (1.0 - overlap) / (eps * overlap);
    Ok(arg.ln() / om.ln())
}

/// How two channels are combined in a submultiplicativity check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    Tensor,
    Compose,
}

/// Result of a submultiplicativity check `Ω(E·F) ≤ Ω(E)·Ω(F)`.
#[derive(Clone, Debug, Serialize)]
pub struct SubmultReport {
    /// Projective value of the combined channel over the product cone.
    pub lhs: Extended,
    /// Product of the individual projective values.
    pub rhs: Extended,
    /// `lhs ≤ rhs` up to relative tolerance `1e-6`.
    pub ok: bool,
}

/// Raw Choi matrix of `E ⊗ F` from raw Choi matrices (no channel
/// validation, so it applies to arbitrary cone elements).
fn tensor_choi_raw(
    je: &CMatrix,
    de_in: usize,
    de_out: usize,
    jf: &CMatrix,
    df_in: usize,
    df_out: usize,
) -> Result<CMatrix> {
    let big = je.kron(jf);
    permute_systems(&big, &[de_in, de_out, df_in, df_out], &[0, 2, 1, 3])
}

/// Raw Choi matrix of `second ∘ first` from raw Choi matrices.
fn compose_choi_raw(
    j2: &CMatrix,
    d2_in: usize,
    d2_out: usize,
    j1: &CMatrix,
    d1_in: usize,
    d1_out: usize,
) -> Result<CMatrix> {
    if d1_out != d2_in {
        return Err(Error::Dimension(format!(
            "composition mismatch: first outputs {d1_out}, second expects {d2_in}"
        )));
    }
    let mut j = CMatrix::zeros(d1_in * d2_out, d1_in * d2_out);
    for i in 0..d1_in {
        for jj in 0..d1_in {
            let block = CMatrix::from_fn(d1_out, d1_out, |a, b| {
                j1[(i * d1_out + a, jj * d1_out + b)]
            });
            let mapped = apply_choi(j2, d2_in, d2_out, &block)?;
            for a in 0..d2_out {
                for b in 0..d2_out {
                    j[(i * d2_out + a, jj * d2_out + b)] = mapped[(a, b)];
                }
            }
        }
    }
    Ok(j)
}

const CLOSURE_SAMPLES: usize = 4;
const CLOSURE_SEED: u64 = 0x517cc1b727220a95;

/// Checks `Ω(E⊗F) ≤ Ω(E)·Ω(F)` (or the composition variant) by solving
/// both sides. `o` is the free cone for the individual channels and
/// `o_product` the free cone on the combined space; the latter must be
/// closed under the combining operation, which is spot-checked on random
/// free elements before anything is solved (a violation is a configuration
/// error — the inequality is only a theorem for closed families).
pub fn submultiplicativity_check(
    e: &ChannelChoi,
    f: &ChannelChoi,
    o: &ConeSpec,
    o_product: &ConeSpec,
    mode: CombineMode,
    opts: &SolverOpts,
) -> Result<SubmultReport> {
    for ch in [e, f] {
        let want = ObjectKind::Channel {
            d_in: ch.dim_in,
            d_out: ch.dim_out,
        };
        if o.kind != want {
            return Err(Error::Config(format!(
                "factor cone describes {:?} but a factor is {:?}",
                o.kind, want
            )));
        }
    }

    // spot-check closure on random free pairs
    if o.sampler != FreeSampler::None {
        let mut rng = ChaCha8Rng::seed_from_u64(CLOSURE_SEED);
        for _ in 0..CLOSURE_SAMPLES {
            let m1 = o.assemble(&o.random_params(&mut rng)?)?;
            let m2 = o.assemble(&o.random_params(&mut rng)?)?;
            let prod = match mode {
                CombineMode::Tensor => tensor_choi_raw(
                    &m1[0], e.dim_in, e.dim_out, &m2[0], f.dim_in, f.dim_out,
                )?,
                CombineMode::Compose => compose_choi_raw(
                    &m1[0], e.dim_in, e.dim_out, &m2[0], f.dim_in, f.dim_out,
                )?,
            };
            let (member, shift) = cone_membership(o_product, &[prod], opts)?;
            if !member {
                return Err(Error::Config(format!(
                    "the product cone is not closed under {mode:?} \
                     (a combined free element fails membership by {shift:.2e}); \
                     submultiplicativity is only a theorem for closed families"
                )));
            }
        }
    }

    let combined = match mode {
        CombineMode::Tensor => crate::objects::tensor_channels(e, f)?,
        CombineMode::Compose => crate::objects::compose_channels(e, f)?,
    };
    let lhs = proj_robustness_channel(o_product, &combined, opts)?.value;
    let ve = proj_robustness_channel(o, e, opts)?.value;
    let vf = proj_robustness_channel(o, f, opts)?.value;
    let rhs = ve.mul(vf);
    let ok = match (lhs, rhs) {
        (Extended::Finite(l), Extended::Finite(r)) => l <= r * (1.0 + 1e-6),
        (Extended::Finite(_), Extended::Infinite) => true,
        (Extended::Infinite, Extended::Infinite) => true,
        (Extended::Infinite, Extended::Finite(_)) => false,
    };
    Ok(SubmultReport { lhs, rhs, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{incoherent_state_cone, replacement_channel_cone};
    use crate::linalg::cr;
    use crate::objects::{dephasing_channel, identity_channel, replacement_channel};

    fn plus_state() -> DensityOperator {
        DensityOperator::new(CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap()
    }

    fn mixed_zx() -> DensityOperator {
        DensityOperator::new(CMatrix::from_real_rows(&[&[0.5, 0.25], &[0.25, 0.5]])).unwrap()
    }

    #[test]
    fn state_overlap_matches_closed_forms() {
        let spec = incoherent_state_cone(2);
        let opts = SolverOpts::default();
        let ket0 = DensityOperator::new(CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]))
            .unwrap();
        assert!((free_overlap_state(&ket0, &spec, &opts).unwrap() - 1.0).abs() < 1e-7);
        assert!((free_overlap_state(&plus_state(), &spec, &opts).unwrap() - 0.5).abs() < 1e-7);

        // cos θ|0⟩ + sin θ|1⟩ at θ = π/6: best diagonal overlap is cos²θ
        let th = std::f64::consts::PI / 6.0;
        let v = [cr(th.cos()), cr(th.sin())];
        let psi = DensityOperator::new(CMatrix::projector(&v)).unwrap();
        assert!((free_overlap_state(&psi, &spec, &opts).unwrap() - 0.75).abs() < 1e-7);

        // mixed input is rejected
        let mixed = DensityOperator::new(CMatrix::identity(2).scale_re(0.5)).unwrap();
        assert!(matches!(
            free_overlap_state(&mixed, &spec, &opts),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn worst_case_fidelity_replacement_and_sampled() {
        // identical channels: fidelity 1 in both modes
        let r_plus = replacement_channel(&plus_state(), 2).unwrap();
        let est = worst_case_fidelity(&r_plus, &r_plus, FidelityMode::ExactReplacement).unwrap();
        assert!((est.value - 1.0).abs() < 1e-10);
        assert_eq!(est.bound, FidelityBound::Exact);

        // replacement pair: fidelity of the replaced states; F(|0⟩⟨0|, I/2) = 1/2
        let ket0 = DensityOperator::new(CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]))
            .unwrap();
        let mixed = DensityOperator::new(CMatrix::identity(2).scale_re(0.5)).unwrap();
        let est = worst_case_fidelity(
            &replacement_channel(&ket0, 2).unwrap(),
            &replacement_channel(&mixed, 2).unwrap(),
            FidelityMode::ExactReplacement,
        )
        .unwrap();
        assert!((est.value - 0.5).abs() < 1e-10, "got {}", est.value);

        // exact mode rejects non-replacement channels
        assert!(matches!(
            worst_case_fidelity(
                &identity_channel(2),
                &dephasing_channel(2),
                FidelityMode::ExactReplacement
            ),
            Err(Error::Mode(_))
        ));

        // sampled identity-vs-dephasing: the maximally entangled input is
        // the true minimiser at 1/2, and the net always contains it
        let est = worst_case_fidelity(
            &identity_channel(2),
            &dephasing_channel(2),
            FidelityMode::Sampled {
                samples: 30,
                refine_rounds: 2,
                seed: 5,
            },
        )
        .unwrap();
        assert_eq!(est.bound, FidelityBound::Upper);
        assert!((est.value - 0.5).abs() < 1e-9, "got {}", est.value);

        // sampled on identical channels stays at 1
        let est =
            worst_case_fidelity(&r_plus, &r_plus, FidelityMode::default()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn channel_overlap_reduces_to_state_overlap() {
        let inner = incoherent_state_cone(2);
        let spec = replacement_channel_cone(&inner, 2).unwrap();
        let opts = SolverOpts::default();

        // free replacement target: overlap 1 via membership
        let mixed = DensityOperator::new(CMatrix::identity(2).scale_re(0.5)).unwrap();
        let est = free_overlap_channel(
            &replacement_channel(&mixed, 2).unwrap(),
            &spec,
            FidelityMode::ExactReplacement,
            &opts,
        )
        .unwrap();
        assert!((est.value - 1.0).abs() < 1e-9);

        // pure resourceful replacement target: the state overlap, exactly
        let r_plus = replacement_channel(&plus_state(), 2).unwrap();
        let est =
            free_overlap_channel(&r_plus, &spec, FidelityMode::ExactReplacement, &opts).unwrap();
        assert!((est.value - 0.5).abs() < 1e-6, "got {}", est.value);
        assert_eq!(est.bound, FidelityBound::Exact);

        // sampled mode reroutes replacement targets to the exact collapse
        let est = free_overlap_channel(
            &r_plus,
            &spec,
            FidelityMode::Sampled {
                samples: 12,
                refine_rounds: 1,
                seed: 3,
            },
            &opts,
        )
        .unwrap();
        assert_eq!(est.bound, FidelityBound::Exact);
        assert!((est.value - 0.5).abs() < 1e-6, "overlap {}", est.value);

        // ... even when the replaced state is mixed and resourceful, where
        // the premise fails and an honest error comes back
        let tilted = DensityOperator::new(
            plus_state().mat().scale_re(0.8).add(&CMatrix::identity(2).scale_re(0.1)),
        )
        .unwrap();
        let res = free_overlap_channel(
            &replacement_channel(&tilted, 2).unwrap(),
            &spec,
            FidelityMode::Sampled {
                samples: 6,
                refine_rounds: 1,
                seed: 3,
            },
            &opts,
        );
        assert!(matches!(res, Err(Error::Mode(_))), "got {res:?}");
    }

    #[test]
    fn sampled_channel_overlap_on_a_unitary_target() {
        // identity target over incoherent replacements: the maximally
        // entangled input forces every replacement down to 1/4, and no pure
        // input does better than 1/4 against the best diagonal replacement
        // (max over outcomes of the Schmidt weights squared ≥ purity/2 ≥ 1/4),
        // so the sampled upper bound lands on the true value
        let inner = incoherent_state_cone(2);
        let spec = replacement_channel_cone(&inner, 2).unwrap();
        let est = free_overlap_channel(
            &identity_channel(2),
            &spec,
            FidelityMode::Sampled {
                samples: 10,
                refine_rounds: 1,
                seed: 11,
            },
            &SolverOpts::default(),
        )
        .unwrap();
        assert_eq!(est.bound, FidelityBound::Upper);
        assert!((est.value - 0.25).abs() < 1e-7, "got {}", est.value);

        // a mixing target trips the purity guard
        let res = free_overlap_channel(
            &crate::objects::depolarizing(2, 0.5).unwrap(),
            &spec,
            FidelityMode::default(),
            &SolverOpts::default(),
        );
        assert!(matches!(res, Err(Error::Mode(_))), "got {res:?}");
    }

    #[test]
    fn pure_target_checker() {
        let r_plus = replacement_channel(&plus_state(), 2).unwrap();
        check_pure_target(&r_plus, 20, 1).unwrap();
        let mixed = DensityOperator::new(CMatrix::identity(2).scale_re(0.5)).unwrap();
        assert!(matches!(
            check_pure_target(&replacement_channel(&mixed, 2).unwrap(), 20, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn error_bound_values_and_monotonicity() {
        assert!((error_bound(&Extended::Finite(3.0), 0.5).unwrap() - 0.25).abs() < 1e-12);
        assert!((error_bound(&Extended::Finite(1.0), 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(error_bound(&Extended::Infinite, 0.5).unwrap(), 0.0);
        assert_eq!(error_bound(&Extended::Finite(3.0), 1.0).unwrap(), 0.0);
        assert!(matches!(
            error_bound(&Extended::Finite(3.0), 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            error_bound(&Extended::Finite(3.0), 1.5),
            Err(Error::Domain(_))
        ));

        // decreasing in the projective value and in the overlap: stronger
        // inputs and more-nearly-free targets both loosen the floor
        let mut prev = f64::INFINITY;
        for om in [1.0, 1.5, 2.0, 3.0, 5.0, 10.0] {
            let v = error_bound(&Extended::Finite(om), 0.5).unwrap();
            assert!(v < prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for fl in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let v = error_bound(&Extended::Finite(3.0), fl).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn overhead_bound_values() {
        // log_3(0.99·0.5 / (0.01·0.5)) = ln 99 / ln 3 ≈ 4.18265
        let v = overhead_bound(&Extended::Finite(3.0), 0.5, 0.01).unwrap();
        assert!((v - 99.0_f64.ln() / 3.0_f64.ln()).abs() < 1e-12);
        assert!((v - 4.182_658).abs() < 1e-5);

        let v = overhead_bound(&Extended::Finite(9.0), 0.5, 0.01).unwrap();
        assert!((v - 99.0_f64.ln() / 9.0_f64.ln()).abs() < 1e-12);

        // ratio exactly 1: zero copies suffice as far as this bound knows
        // (1−ε)(1−F)/(εF) = 1 at F = 0.5, ε = 0.5
        let v = overhead_bound(&Extended::Finite(3.0), 0.5, 0.5).unwrap();
        assert!(v.abs() < 1e-12);

        assert_eq!(overhead_bound(&Extended::Infinite, 0.5, 0.01).unwrap(), 0.0);
        assert!(matches!(
            overhead_bound(&Extended::Finite(1.0), 0.5, 0.01),
            Err(Error::IllPosed(_))
        ));
        assert!(matches!(
            overhead_bound(&Extended::Finite(3.0), 1.0, 0.01),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn submultiplicativity_tensor_and_compose() {
        let inner2 = incoherent_state_cone(2);
        let spec2 = replacement_channel_cone(&inner2, 2).unwrap();
        let opts = SolverOpts::default();

        // free ⊗ free: both sides are 1
        let mixed = DensityOperator::new(CMatrix::identity(2).scale_re(0.5)).unwrap();
        let free = replacement_channel(&mixed, 2).unwrap();
        let inner4 = incoherent_state_cone(4);
        let spec4 = replacement_channel_cone(&inner4, 4).unwrap();
        let rep = submultiplicativity_check(
            &free,
            &free,
            &spec2,
            &spec4,
            CombineMode::Tensor,
            &opts,
        )
        .unwrap();
        assert!(rep.ok);
        match (rep.lhs, rep.rhs) {
            (Extended::Finite(l), Extended::Finite(r)) => {
                assert!((l - 1.0).abs() < 1e-5 && (r - 1.0).abs() < 1e-5)
            }
            other => panic!("expected finite unit values, got {other:?}"),
        }

        // resourceful ⊗ resourceful: lhs ≤ 9 with rhs = 9
        let r = replacement_channel(&mixed_zx(), 2).unwrap();
        let rep = submultiplicativity_check(
            &r,
            &r,
            &spec2,
            &spec4,
            CombineMode::Tensor,
            &opts,
        )
        .unwrap();
        assert!(rep.ok, "tensor submultiplicativity failed: {rep:?}");
        match rep.rhs {
            Extended::Finite(v) => assert!((v - 9.0).abs() < 1e-4, "rhs = {v}"),
            _ => panic!("rhs should be finite"),
        }

        // resourceful ∘ free replacement = the resourceful one
        let rep = submultiplicativity_check(
            &r,
            &free,
            &spec2,
            &spec2,
            CombineMode::Compose,
            &opts,
        )
        .unwrap();
        assert!(rep.ok);
        match (rep.lhs, rep.rhs) {
            (Extended::Finite(l), Extended::Finite(rr)) => {
                assert!((l - 3.0).abs() < 1e-4, "lhs = {l}");
                assert!((rr - 3.0).abs() < 1e-4, "rhs = {rr}");
            }
            other => panic!("expected finite values, got {other:?}"),
        }
    }

    #[test]
    fn closure_violation_is_a_config_error() {
        // a "replacement onto the maximally mixed state" cone on the
        // product space: tensor products of incoherent replacements do not
        // stay inside it, so the spot check must trip
        let inner2 = incoherent_state_cone(2);
        let spec2 = replacement_channel_cone(&inner2, 2).unwrap();
        let maximally_mixed_only = {
            let inner = crate::cones::ConeSpec {
                kind: ObjectKind::State { d: 4 },
                name: "custom".into(),
                block_dims: vec![1],
                equalities: vec![],
                assembly: vec![vec![Some(crate::cones::HermLinMap::from_fn(
                    1,
                    4,
                    |x| {
                        let s = x[(0, 0)].re;
                        CMatrix::identity(4).scale_re(s / 4.0)
                    },
                ))]],
                interior: vec![CMatrix::identity(1)],
                sampler: FreeSampler::None,
            };
            replacement_channel_cone(&inner, 4).unwrap()
        };
        let mixed = DensityOperator::new(CMatrix::identity(2).scale_re(0.5)).unwrap();
        let free = replacement_channel(&mixed, 2).unwrap();
        let res = submultiplicativity_check(
            &free,
            &free,
            &spec2,
            &maximally_mixed_only,
            CombineMode::Tensor,
            &SolverOpts::default(),
        );
        assert!(matches!(res, Err(Error::Config(_))), "got {res:?}");
    }

    #[test]
    fn realized_conversions_respect_the_error_bound() {
        // Mix a resourceful pure replacement target with free noise and
        // check every realized infidelity obeys the bound computed from the
        // mixture's own projective value (the identity protocol is free).
        let inner = incoherent_state_cone(2);
        let spec = replacement_channel_cone(&inner, 2).unwrap();
        let opts = SolverOpts::default();
        let target = replacement_channel(&plus_state(), 2).unwrap();
        let overlap =
            free_overlap_channel(&target, &spec, FidelityMode::ExactReplacement, &opts)
                .unwrap()
                .value;
        let mixed = DensityOperator::new(CMatrix::identity(2).scale_re(0.5)).unwrap();
        for delta in [0.05, 0.1, 0.2, 0.4, 0.7] {
            let omega_state = DensityOperator::new(
                plus_state()
                    .mat()
                    .scale_re(1.0 - delta)
                    .add(&mixed.mat().scale_re(delta)),
            )
            .unwrap();
            let n = replacement_channel(&omega_state, 2).unwrap();
            let rep = proj_robustness_channel(&spec, &n, &opts).unwrap();
            let eps = 1.0
                - worst_case_fidelity(&n, &target, FidelityMode::ExactReplacement)
                    .unwrap()
                    .value;
            let bound = error_bound(&rep.value, overlap).unwrap();
            assert!(
                eps >= bound - 1e-6,
                "delta {delta}: realized error {eps} beats the bound {bound}"
            );
            // the feasibility chain behind the bound, on the same instance;
            // the slack absorbs eigensolver noise in ε amplified by 1/(1−F)²
            if let (Some(lambda), Some(mu)) = (rep.lambda, rep.mu) {
                let chain = (1.0 - eps) * (1.0 - overlap) / (eps * overlap);
                assert!(
                    lambda * mu >= chain * (1.0 - 1e-6) - 1e-7,
                    "delta {delta}: λμ = {} < chain {chain}",
                    lambda * mu
                );
            }
        }
    }
}
