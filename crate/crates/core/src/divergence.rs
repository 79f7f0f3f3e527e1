//! Max-relative divergence `R_max(ρ‖σ) = inf{λ : ρ ≤ λσ}` in closed form,
//! for states, channels (on their Choi matrices), and POVM grids (worst
//! effect pair). Returns `∞` exactly when the support of the first argument
//! is not contained in the support of the second, decided by an explicit
//! projector test — never by letting a solver diverge.

use crate::linalg::{eigh, max_eig, op_norm, pinv_sqrt, support_projector, CMatrix};
use crate::objects::{ChannelChoi, PovmSet};
use crate::{Error, Extended, Result};

/// `R_max` between two PSD operators.
///
/// Support test: with `Π` the support projector of `σ` at `rank_tol`,
/// require `‖(I−Π)ρ(I−Π)‖_op ≤ rank_tol·‖ρ‖_op`; otherwise the value is
/// `∞`. On matching supports the value is the top eigenvalue of
/// `σ^{-1/2} ρ σ^{-1/2}` taken on the support.
pub fn rmax_psd(rho: &CMatrix, sigma: &CMatrix, rank_tol: f64) -> Result<Extended> {
    if rho.rows() != sigma.rows() || !rho.is_square() || !sigma.is_square() {
        return Err(Error::Dimension("rmax: operands must be square and equal-dimensional".into()));
    }
    let rho_norm = op_norm(rho)?;
    if rho_norm <= f64::MIN_POSITIVE {
        // 0 ≤ λσ for every λ ≥ 0
        return Ok(Extended::Finite(0.0));
    }
    let proj = support_projector(sigma, rank_tol)?;
    let off = {
        let q = CMatrix::identity(rho.rows()).sub(&proj);
        q.matmul(rho).matmul(&q).hermitian_part()
    };
    if op_norm(&off)? > rank_tol * rho_norm {
        return Ok(Extended::Infinite);
    }
    let (_, inv_sqrt) = pinv_sqrt(sigma, rank_tol)?;
    let sandwiched = inv_sqrt.matmul(rho).matmul(&inv_sqrt).hermitian_part();
    Ok(Extended::Finite(max_eig(&sandwiched)?.max(0.0)))
}

/// Validates PSD-ness of both arguments before delegating to [`rmax_psd`].
pub fn rmax_states(rho: &CMatrix, sigma: &CMatrix, rank_tol: f64) -> Result<Extended> {
    for (name, m) in [("first", rho), ("second", sigma)] {
        if !m.is_hermitian(1e-8) {
            return Err(Error::Domain(format!("rmax: {name} argument is not Hermitian")));
        }
        let lo = eigh(&m.hermitian_part())?.0.first().copied().unwrap_or(0.0);
        if lo < -1e-9 * op_norm(m)?.max(1.0) {
            return Err(Error::Domain(format!("rmax: {name} argument is not PSD")));
        }
    }
    rmax_psd(&rho.hermitian_part(), &sigma.hermitian_part(), rank_tol)
}

/// `log₂ R_max`, the max-relative entropy; `∞` propagates, `R_max = 0`
/// gives `−∞` as an error (the zero operator carries no divergence).
pub fn dmax_states(rho: &CMatrix, sigma: &CMatrix, rank_tol: f64) -> Result<Extended> {
    match rmax_states(rho, sigma, rank_tol)? {
        Extended::Infinite => Ok(Extended::Infinite),
        Extended::Finite(v) if v > 0.0 => Ok(Extended::Finite(v.log2())),
        Extended::Finite(_) => Err(Error::Domain("dmax of the zero operator is −∞".into())),
    }
}

/// Channel divergence: `R_max` of the Choi matrices. For channels this equals
/// the stabilised divergence maximised over inputs, so no extra optimisation
/// is needed.
pub fn rmax_channels(e: &ChannelChoi, f: &ChannelChoi, rank_tol: f64) -> Result<Extended> {
    if e.dim_in != f.dim_in || e.dim_out != f.dim_out {
        return Err(Error::Dimension("rmax: channel shapes differ".into()));
    }
    rmax_psd(e.choi(), f.choi(), rank_tol)
}

/// POVM-set divergence: `inf{λ : M_{a|x} ≤ λ N_{a|x} ∀ a,x}`, i.e. the
/// worst effect pair across the grid.
pub fn rmax_povms(m: &PovmSet, n: &PovmSet, rank_tol: f64) -> Result<Extended> {
    if m.dim != n.dim || m.m != n.m || m.n != n.n {
        return Err(Error::Dimension("rmax: POVM set shapes differ".into()));
    }
    let mut worst = Extended::Finite(0.0);
    for x in 0..m.m {
        for a in 0..m.n {
            worst = worst.max(rmax_psd(m.effect(x, a), n.effect(x, a), rank_tol)?);
        }
    }
    Ok(worst)
}

/// `R_max` between lists of PSD slot operators (the engine-facing form:
/// states are one slot, channels one Choi slot, POVM sets a grid of slots).
pub fn rmax_slots(a: &[CMatrix], b: &[CMatrix], rank_tol: f64) -> Result<Extended> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Dimension("rmax: slot lists must match and be nonempty".into()));
    }
    let mut worst = Extended::Finite(0.0);
    for (x, y) in a.iter().zip(b) {
        worst = worst.max(rmax_psd(x, y, rank_tol)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_psd, RANK_TOL};
    use crate::objects::{depolarizing, identity_channel, noisy_z, random_state};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: bisection on λ with a PSD feasibility test of
    /// λσ − ρ, declaring ∞ if even a huge multiple fails. Uses an absolute
    /// eigenvalue slack so support mismatches of order one are never washed
    /// out by the magnitude of λσ.
    fn rmax_bisect(rho: &CMatrix, sigma: &CMatrix) -> Extended {
        let feasible = |lam: f64| {
            let m = sigma.scale_re(lam).sub(rho).hermitian_part();
            eigh(&m).unwrap().0[0] >= -1e-11
        };
        let mut hi = 1.0;
        while !feasible(hi) {
            hi *= 2.0;
            if hi > 1e8 {
                return Extended::Infinite;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Extended::Finite(hi)
    }

    #[test]
    fn plus_state_against_maximally_mixed_is_two() {
        let plus = CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let id2 = CMatrix::identity(2).scale_re(0.5);
        let v = rmax_states(&plus, &id2, RANK_TOL).unwrap();
        assert!((v.finite().unwrap() - 2.0).abs() < 1e-10);
        match rmax_bisect(&plus, &id2) {
            Extended::Finite(o) => assert!((o - 2.0).abs() < 1e-7),
            Extended::Infinite => panic!("oracle disagreed"),
        }
        // and D_max = 1 bit
        assert!((dmax_states(&plus, &id2, RANK_TOL).unwrap().finite().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn support_mismatch_is_infinite_both_ways() {
        let zero = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let plus = CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert_eq!(rmax_states(&plus, &zero, RANK_TOL).unwrap(), Extended::Infinite);
        assert_eq!(rmax_bisect(&plus, &zero), Extended::Infinite);
        // reversed comparison is finite: |0><0| ≤ 2·|+><+| fails too (different ray)
        assert_eq!(rmax_states(&zero, &plus, RANK_TOL).unwrap(), Extended::Infinite);
    }

    #[test]
    fn zero_numerator_gives_zero() {
        let id2 = CMatrix::identity(2).scale_re(0.5);
        let z = CMatrix::zeros(2, 2);
        assert_eq!(rmax_states(&z, &id2, RANK_TOL).unwrap(), Extended::Finite(0.0));
    }

    #[test]
    fn closed_form_matches_bisection_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut infinite_seen = 0;
        for trial in 0..100 {
            let d = rng.gen_range(2..=4);
            let a = random_state(d, &mut rng).mat().scale_re(rng.gen_range(0.5..2.0));
            // every third pair: deliberately rank-deficient denominator
            let b = if trial % 3 == 0 {
                let p = crate::objects::random_pure(d, &mut rng);
                p.scale_re(rng.gen_range(0.5..2.0))
            } else {
                random_state(d, &mut rng).mat().scale_re(rng.gen_range(0.5..2.0))
            };
            assert!(is_psd(&a, 1e-9).unwrap() && is_psd(&b, 1e-9).unwrap());
            let closed = rmax_psd(&a, &b, RANK_TOL).unwrap();
            let oracle = rmax_bisect(&a, &b);
            match (closed, oracle) {
                (Extended::Finite(c), Extended::Finite(o)) => {
                    assert!((c - o).abs() <= 1e-7 * c.max(1.0), "trial {trial}: {c} vs {o}");
                }
                (Extended::Infinite, Extended::Infinite) => infinite_seen += 1,
                other => panic!("trial {trial}: closed/oracle disagree on finiteness: {other:?}"),
            }
        }
        assert!(infinite_seen >= 20, "support-mismatch cases were not exercised");
    }

    #[test]
    fn identity_vs_depolarizing_choi_value() {
        let id = identity_channel(2);
        let dep = depolarizing(2, 0.5).unwrap();
        let v = rmax_channels(&id, &dep, RANK_TOL).unwrap().finite().unwrap();
        // J_dep has eigenvalue 5/4 on the entangled ray, so 2/(5/4) = 1.6
        assert!((v - 1.6).abs() < 1e-10);
        match rmax_bisect(id.choi(), dep.choi()) {
            Extended::Finite(o) => assert!((v - o).abs() < 1e-7),
            _ => panic!("oracle disagreed"),
        }
    }

    #[test]
    fn povm_divergence_is_worst_effect_pair() {
        let sharp = noisy_z(1.0).unwrap();
        let noisy = noisy_z(0.5).unwrap();
        // sharp effect P_0 vs noisy effect 0.5 P_0 + 0.25 I: eigenvalues
        // (0.75, 0.25) on (|0>,|1>); P_0 ≤ λ·M_0 needs λ = 1/0.75
        let v = rmax_povms(&sharp, &noisy, RANK_TOL).unwrap().finite().unwrap();
        assert!((v - 1.0 / 0.75).abs() < 1e-10);
        // reversed direction: M_0 ≤ λ P_0 impossible (support mismatch)
        assert_eq!(rmax_povms(&noisy, &sharp, RANK_TOL).unwrap(), Extended::Infinite);
    }

    #[test]
    fn rejects_indefinite_arguments() {
        let z = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let id2 = CMatrix::identity(2);
        assert!(rmax_states(&z, &id2, RANK_TOL).is_err());
    }
}
