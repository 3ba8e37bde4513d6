//! Exact moments of compound Poisson increments with normally distributed
//! jump sizes.
//!
//! An increment over an interval of length `h` is `z = Σ_{i=1}^{N} J_i` with
//! `N ~ Poisson(lambda h)` and i.i.d. `J_i ~ N(mu_j, sigma_j^2)`. Its
//! cumulants are `κ_r = lambda h E[J^r]`, and raw moments follow from the
//! moments-from-cumulants recursion
//!
//! ```text
//! M_m = Σ_{r=1}^{m} C(m-1, r-1) κ_r M_{m-r},    M_0 = 1.
//! ```
//!
//! The jump-size distribution enters only through its raw moments
//! ([`normal_raw_moment`]), so alternative distributions plug in by
//! supplying that one input.

use std::sync::{Arc, OnceLock};

use num::One;

use crate::combinatorics::{choose, double_factorial};
use crate::ito::slots;
use crate::poly::{GPoly, Rational, SlotSignature};

/// Signature of jump-size moments: `('mu_j', 'sigma_j')`.
pub fn normal_moment_signature() -> Arc<SlotSignature> {
    static SIG: OnceLock<Arc<SlotSignature>> = OnceLock::new();
    SIG.get_or_init(|| SlotSignature::new([(slots::MU_J, false), (slots::SIGMA_J, false)]).unwrap())
        .clone()
}

/// Signature of compound Poisson increment moments:
/// `('lambda', 'h', 'mu_j', 'sigma_j')`.
pub fn cpp_signature() -> Arc<SlotSignature> {
    static SIG: OnceLock<Arc<SlotSignature>> = OnceLock::new();
    SIG.get_or_init(|| {
        SlotSignature::new([
            (slots::LAMBDA, false),
            (slots::H, false),
            (slots::MU_J, false),
            (slots::SIGMA_J, false),
        ])
        .unwrap()
    })
    .clone()
}

/// Raw moment of `N(mu_j, sigma_j^2)`:
/// `E[J^m] = Σ_{i=0}^{⌊m/2⌋} C(m, 2i) (2i-1)!! mu_j^{m-2i} sigma_j^{2i}`.
pub fn normal_raw_moment(m: u32) -> GPoly {
    let sig = normal_moment_signature();
    let mut terms = Vec::with_capacity(m as usize / 2 + 1);
    for i in 0..=(m / 2) {
        let odd_df = if i == 0 {
            num::BigInt::one()
        } else {
            double_factorial(2 * i - 1)
        };
        let c = Rational::from(choose(m, 2 * i) * odd_df);
        terms.push((vec![(m - 2 * i) as i32, (2 * i) as i32], c));
    }
    GPoly::from_terms(sig, terms).unwrap()
}

/// Cumulant `κ_r = lambda h E[J^r]` over [`cpp_signature`].
fn cumulant(r: u32) -> GPoly {
    let sig = cpp_signature();
    let jump = normal_raw_moment(r).extend_signature(&sig, &[]).unwrap();
    jump.shift_exponent(slots::LAMBDA, 1)
        .unwrap()
        .shift_exponent(slots::H, 1)
        .unwrap()
}

/// Raw moment `E[z(h)^m]` of the compound Poisson increment.
pub fn cpp_raw_moment(m: u32) -> GPoly {
    let sig = cpp_signature();
    let mut moments: Vec<GPoly> = vec![GPoly::one(sig.clone())];
    for n in 1..=m {
        let mut acc = GPoly::zero(sig.clone());
        for r in 1..=n {
            let c = Rational::from(choose(n - 1, r - 1));
            acc = acc
                .try_add(
                    &cumulant(r)
                        .try_mul(&moments[(n - r) as usize])
                        .unwrap()
                        .scalar_mul(&c),
                )
                .unwrap();
        }
        moments.push(acc);
    }
    moments.pop().unwrap()
}

/// Central moment `E[(z(h) - lambda h mu_j)^m]` by binomial recombination of
/// [`cpp_raw_moment`].
pub fn cpp_central_moment(m: u32) -> GPoly {
    let sig = cpp_signature();
    let mut acc = GPoly::zero(sig.clone());
    for i in 0..=m {
        let mut c = Rational::from(choose(m, i));
        if (m - i) % 2 == 1 {
            c = -c;
        }
        let e = (m - i) as i32;
        let mean_pow = GPoly::monomial(sig.clone(), vec![e, e, e, 0], c).unwrap();
        acc = acc
            .try_add(&cpp_raw_moment(i).try_mul(&mean_pow).unwrap())
            .unwrap();
    }
    acc
}
