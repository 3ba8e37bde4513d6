//! Moments, central moments and lag-1 covariances for the one-factor model
//! with compound-Poisson jumps in the return process.
//!
//! The jump-extended return over interval `n` is `y_n = A_n + B_n` with
//! `A_n` the diffusion return and `B_n` the compound Poisson increment over
//! the same interval. The driving processes are independent and the jump
//! increments are i.i.d. across intervals, so every moment is a binomial
//! convolution of the diffusion formulae from [`crate::heston`] with the
//! jump-increment moments from [`crate::cpp`]:
//!
//! ```text
//! E[y^l]                = Σ_i C(l,i) E[A^i] E[B^{l-i}]
//! E[y_n^{l1} y_{n+1}^{l2}] = Σ_i Σ_j C(l1,i) C(l2,j) E[A_n^i A_{n+1}^j] E[B^{l1-i}] E[B^{l2-j}]
//! ```
//!
//! Results live in the diffusion signature extended by
//! `('lambda', 'mu_j', 'sigma_j')`, so setting `lambda = 0` collapses every
//! formula to its diffusion counterpart by evaluation alone.

use std::sync::{Arc, OnceLock};

use crate::combinatorics::choose;
use crate::cpp;
use crate::heston::{self, ModelError};
use crate::ito::slots;
use crate::poly::{GPoly, Rational, SlotSignature};

/// Final signature of jump-model formulae: the eight diffusion slots plus
/// `('lambda', 'mu_j', 'sigma_j')`.
pub fn svj_moment_signature() -> Arc<SlotSignature> {
    static SIG: OnceLock<Arc<SlotSignature>> = OnceLock::new();
    SIG.get_or_init(|| {
        SlotSignature::new([
            (slots::EXP_NEG_KH, false),
            (slots::H, false),
            (slots::K_INV, false),
            (slots::MU, false),
            (slots::THETA, false),
            (slots::SIGMA_V, false),
            (slots::RHO, false),
            (slots::SQRT_ONE_MINUS_RHO2, true),
            (slots::LAMBDA, false),
            (slots::MU_J, false),
            (slots::SIGMA_J, false),
        ])
        .unwrap()
    })
    .clone()
}

/// Embed a diffusion-signature or jump-signature polynomial into the
/// combined signature (slot names coincide, including the shared `h`).
fn lift(p: &GPoly) -> Result<GPoly, ModelError> {
    Ok(p.extend_signature(&svj_moment_signature(), &[])?)
}

/// Raw moment `E[y_n^l]` of the jump-extended return.
pub fn svj_moment_y(l: u32) -> Result<GPoly, ModelError> {
    let mut acc = GPoly::zero(svj_moment_signature());
    for i in 0..=l {
        let a = lift(&heston::moment_y(i)?)?;
        let b = lift(&cpp::cpp_raw_moment(l - i))?;
        acc = acc.try_add(&a.try_mul(&b)?.scalar_mul(&Rational::from(choose(l, i))))?;
    }
    Ok(acc)
}

/// Central moment `E[(y_n - E[y_n])^l]`: the centered parts of the diffusion
/// and jump components convolve the same way as the raw parts.
pub fn svj_cmom_y(l: u32) -> Result<GPoly, ModelError> {
    let mut acc = GPoly::zero(svj_moment_signature());
    for i in 0..=l {
        let a = lift(&heston::cmom_y(i)?)?;
        let b = lift(&cpp::cpp_central_moment(l - i))?;
        acc = acc.try_add(&a.try_mul(&b)?.scalar_mul(&Rational::from(choose(l, i))))?;
    }
    Ok(acc)
}

/// Lag-1 covariance of order `(l1, l2)` for the jump-extended model. Jump
/// increments on distinct intervals are independent, so all dependence flows
/// through the diffusion cross moments.
///
/// # Panics
///
/// Both orders must be at least one.
pub fn svj_cov_yy(l1: u32, l2: u32) -> Result<GPoly, ModelError> {
    assert!(l1 >= 1 && l2 >= 1, "covariance orders must be >= 1");
    let sig = svj_moment_signature();
    let mut cross = GPoly::zero(sig);
    for i in 0..=l1 {
        for j in 0..=l2 {
            let c = Rational::from(choose(l1, i) * choose(l2, j));
            let a = lift(&heston::raw_cross_moment(i, j)?)?;
            let b1 = lift(&cpp::cpp_raw_moment(l1 - i))?;
            let b2 = lift(&cpp::cpp_raw_moment(l2 - j))?;
            cross = cross.try_add(&a.try_mul(&b1)?.try_mul(&b2)?.scalar_mul(&c))?;
        }
    }
    let marginals = svj_moment_y(l1)?.try_mul(&svj_moment_y(l2)?)?;
    Ok(cross.try_sub(&marginals)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{eval_poly, HestonParams, SlotRegistry, SvjParams};
    use crate::poly::rat;
    use approx::assert_relative_eq;

    fn table_params() -> SvjParams {
        let heston = HestonParams::new(0.125, 0.1, 0.25, 0.1, -0.7, 1.0).unwrap();
        SvjParams::new(heston, 0.01, 0.0, 0.05).unwrap()
    }

    #[test]
    fn first_moment_is_drift_plus_jump_mean() {
        let m1 = svj_moment_y(1).unwrap();
        // (mu - theta/2) h + lambda h mu_j
        let expected = GPoly::from_terms(
            svj_moment_signature(),
            [
                (vec![0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0], rat(1, 1)),
                (vec![0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0], rat(-1, 2)),
                (vec![0, 1, 0, 0, 0, 0, 0, 0, 1, 1, 0], rat(1, 1)),
            ],
        )
        .unwrap();
        assert_eq!(m1, expected);
    }

    #[test]
    fn zero_jump_rate_reduces_to_diffusion_model() {
        let p = table_params();
        let mut zero_rate = p;
        zero_rate.lambda = 0.0;
        let reg = SlotRegistry::svj(&zero_rate);
        let heston_reg = SlotRegistry::heston(&p.heston);
        for l in 1..=5u32 {
            let svj = eval_poly(&svj_moment_y(l).unwrap(), &reg).unwrap();
            let diff = eval_poly(&heston::moment_y(l).unwrap(), &heston_reg).unwrap();
            assert_relative_eq!(svj, diff, max_relative = 1e-12, epsilon = 1e-15);
            let svj_c = eval_poly(&svj_cmom_y(l).unwrap(), &reg).unwrap();
            let diff_c = eval_poly(&heston::cmom_y(l).unwrap(), &heston_reg).unwrap();
            assert_relative_eq!(svj_c, diff_c, max_relative = 1e-12, epsilon = 1e-15);
        }
        for (l1, l2) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            let svj = eval_poly(&svj_cov_yy(l1, l2).unwrap(), &reg).unwrap();
            let diff = eval_poly(&heston::cov_yy(l1, l2).unwrap(), &heston_reg).unwrap();
            assert_relative_eq!(svj, diff, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn symmetric_jumps_leave_odd_central_moments_unchanged() {
        // mu_j = 0 gives a symmetric jump law: no skew contribution.
        let p = table_params();
        let reg = SlotRegistry::svj(&p);
        let heston_reg = SlotRegistry::heston(&p.heston);
        let svj3 = eval_poly(&svj_cmom_y(3).unwrap(), &reg).unwrap();
        let heston3 = eval_poly(&heston::cmom_y(3).unwrap(), &heston_reg).unwrap();
        assert_relative_eq!(svj3, heston3, max_relative = 1e-12);
    }

    #[test]
    fn independent_jumps_leave_cov11_at_diffusion_value() {
        let p = table_params();
        let reg = SlotRegistry::svj(&p);
        // with sigma_v = 0 the diffusion decorrelates and jumps cannot help
        let reg0 = reg.clone().with(crate::ito::slots::SIGMA_V, 0.0);
        let c11 = svj_cov_yy(1, 1).unwrap();
        assert_relative_eq!(eval_poly(&c11, &reg0).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn jump_slots_carry_only_nonnegative_exponents() {
        for l in 0..=4u32 {
            for (key, _) in svj_moment_y(l).unwrap().terms() {
                assert!(key[8] >= 0 && key[9] >= 0 && key[10] >= 0);
            }
        }
    }
}
