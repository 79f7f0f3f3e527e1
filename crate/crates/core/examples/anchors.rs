//! Desk-check driver: computes a handful of analytically known values
//! through the public API and prints what it finds. Useful as a smoke test
//! that the conic engine, the builtin cones, and the report plumbing agree
//! with closed-form answers.

use resmon_core::cones::incoherent_state_cone;
use resmon_core::engine::SolverOpts;
use resmon_core::linalg::{cr, CMatrix};
use resmon_core::monotones::{
    bounds_report, proj_robustness_incompatibility, proj_robustness_state,
};
use resmon_core::objects::{noisy_zx_pair, DensityOperator};
use resmon_core::Extended;

fn main() {
    let opts = SolverOpts::default();

    // 1. Qubit state (1/2)I + (1/4)X against the incoherent cone.
    //    Closed form: eigenvalues 3/4 and 1/4 give projective value 3,
    //    generalized robustness 3/2, free weight 1/2.
    let rho = DensityOperator::new(CMatrix::from_real_rows(&[&[0.5, 0.25], &[0.25, 0.5]]))
        .expect("valid density operator");
    let spec = incoherent_state_cone(2);
    let rep = proj_robustness_state(&spec, &rho, &opts).expect("solve");
    println!("coherent qubit: value = {:?}", rep.value);
    println!(
        "  lambda = {:.9}, mu = {:.9}, cross_gap = {:.3e}",
        rep.lambda.unwrap(),
        rep.mu.unwrap(),
        rep.cross_gap.unwrap()
    );
    let sigma = &rep.sigma.as_ref().unwrap()[0];
    println!(
        "  sigma = diag({:.6}, {:.6}), offdiag = {:.2e}",
        sigma[(0, 0)].re,
        sigma[(1, 1)].re,
        sigma[(0, 1)].norm()
    );
    let b = bounds_report(&spec, &[rho.mat().clone()], &opts).expect("bounds");
    println!(
        "  robustness = {:?}, weight = {:?}, sandwich = [{:?}, {:?}]",
        b.robustness, b.weight, b.lower, b.upper
    );

    // 2. Maximally coherent |+><+|: no incoherent state shares its support,
    //    so the value must be flagged infinite by the pre-check.
    let plus = DensityOperator::new(CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]))
        .expect("valid density operator");
    let rep = proj_robustness_state(&spec, &plus, &opts).expect("solve");
    println!(
        "pure |+>: value = {:?}, reason = {:?}, support_tau = {:.2e}",
        rep.value,
        rep.reason.as_deref(),
        rep.support_tau
    );

    // 3. Measurement incompatibility of the noisy Z/X pair. The pair is
    //    jointly measurable iff the visibility is at most 1/sqrt(2), so
    //    0.6 must give exactly 1 and 0.75 must give a value above 1.
    for eta in [0.6, 0.75] {
        let pair = noisy_zx_pair(eta).expect("povm pair");
        let rep = proj_robustness_incompatibility(&pair, &opts).expect("solve");
        println!("noisy Z/X pair, eta = {eta}: value = {:?}", rep.value);
    }

    // 4. Error paths must be typed errors, not panics or wrong answers.
    let qutrit = DensityOperator::new(CMatrix::from_fn(3, 3, |i, j| {
        if i == j {
            cr(1.0 / 3.0)
        } else {
            cr(0.0)
        }
    }))
    .expect("valid density operator");
    match proj_robustness_state(&spec, &qutrit, &opts) {
        Err(e) => println!("qutrit into qubit cone -> error: {e}"),
        Ok(_) => println!("qutrit into qubit cone -> UNEXPECTED OK"),
    }
    match DensityOperator::new(CMatrix::from_real_rows(&[&[0.5, 0.9], &[0.9, 0.5]])) {
        Err(e) => println!("non-PSD density input -> error: {e}"),
        Ok(_) => println!("non-PSD density input -> UNEXPECTED OK"),
    }

    // Exit nonzero if the headline number is off so this can gate scripts.
    match rep_value_finite(&proj_robustness_state(&spec, &rho, &opts).unwrap().value) {
        Some(v) if (v - 3.0).abs() < 1e-5 => {}
        other => {
            eprintln!("anchor value drifted: {other:?}");
            std::process::exit(1);
        }
    }
}

fn rep_value_finite(v: &Extended) -> Option<f64> {
    match v {
        Extended::Finite(x) => Some(*x),
        Extended::Infinite => None,
    }
}
