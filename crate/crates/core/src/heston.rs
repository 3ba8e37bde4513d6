//! Raw moments, central moments and lag-1 cross-covariances of the
//! discretized return of the one-factor stochastic volatility model.
//!
//! The return over interval `n` splits as `y_n = (mu - theta/2) h + ybar_n`
//! where the centered part decomposes into four building blocks,
//!
//! ```text
//! ybar = sigma_v/(2k) e^{-kt} IE + (rho - sigma_v/(2k)) I
//!        + sqrt(1-rho^2) I* - beta vbar_{n-1}
//! beta = (1 - e^{-kh}) / (2k),   vbar = v - theta
//! ```
//!
//! Moments follow by multinomial expansion into combination moments
//! `E[IE^{m1} I^{m2} I*^{m3} vbar^{m4}]`, evaluated in two stages: the inner
//! conditional expectation from [`crate::ito::cond_ieii_moment`]'s recursion,
//! the outer expectation over the stationary variance law from
//! [`crate::ito::central_moment_vbar`].
//!
//! Lag-1 cross moments `E[y_n^{l1} y_{n+1}^{l2}]` use the Markov property:
//! `E[y_{n+1}^{l2} | v_n]` is a polynomial in `vbar_n`, and the transition
//! identity `vbar_n = e^{-kh} vbar_{n-1} + sigma_v e^{-knh} IE_n` turns each
//! `vbar_n^r` into combination moments of interval `n` again.
//!
//! All results live in the eight-slot signature
//! `('e^{-kh}', 'h', 'k^{-}', 'mu', 'theta', 'sigma_v', 'rho', 'sqrt(1-rho^2)')`;
//! every interval-origin factor must cancel exactly during assembly, and
//! [`ModelError::Assembly`] reports any residue.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use num::One;
use thiserror::Error;

use crate::combinatorics::{choose, compositions, multinomial};
use crate::ito::{self, slots, IndexTriple};
use crate::poly::{rat, GPoly, PolyError, Rational, SlotSignature};

/// Errors raised during moment assembly.
#[derive(Debug, Error)]
pub enum ModelError {
    /// The interval-origin exponential failed to cancel; indicates an
    /// internally inconsistent decomposition.
    #[error("interval-origin factors failed to cancel during moment assembly")]
    Assembly,
    /// Underlying polynomial failure.
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Final signature of all return-moment formulae:
/// `('e^{-kh}', 'h', 'k^{-}', 'mu', 'theta', 'sigma_v', 'rho', 'sqrt(1-rho^2)')`.
///
/// The `sqrt(1-rho^2)` exponent is even in every base formula; it may turn
/// negative (and odd) only in derivative outputs, so that slot alone admits
/// negative exponents.
pub fn return_moment_signature() -> Arc<SlotSignature> {
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
        ])
        .unwrap()
    })
    .clone()
}

// Slot positions in the final signature.
const EXP_NEG_KH: usize = 0;
const H: usize = 1;
const K_INV: usize = 2;
const MU: usize = 3;
const THETA: usize = 4;
const SIGMA_V: usize = 5;
const RHO: usize = 6;
const SQRT: usize = 7;
/// Position of the symbolic `vbar` power in the working signature.
const VBAR: usize = 8;

/// Working signature during assembly: the final slots plus a trailing
/// `vbar_{n-1}` slot holding conditional-moment powers that the outer
/// expectation has not yet absorbed.
fn working_signature() -> Arc<SlotSignature> {
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
            (slots::VBAR_PREV, false),
        ])
        .unwrap()
    })
    .clone()
}

/// Conditional combination moment `E[IE^{b1} I^{b2} I*^{b3} | v_{n-1}]` at
/// `t = nh`, multiplied by the `e^{-b1 k n h}` loading that accompanies each
/// `IE` power, re-expressed over the working signature.
///
/// Every term of the recursion output must carry the interval-origin
/// exponent `b1` exactly and an elapsed-time exponential no larger than
/// `b1`; both are asserted here rather than assumed.
fn cond_block(b1: u32, b2: u32, b3: u32) -> Result<GPoly, ModelError> {
    let m = ito::cond_ieii_moment_vbar(IndexTriple::new(b1, b2, b3));
    let w9 = working_signature();
    let mut terms = Vec::with_capacity(m.num_terms());
    for (key, coeff) in m.terms() {
        // key layout: [e^{k(n-1)h}, e^{k tau}, tau, vbar, k^-, theta, sigma_v]
        if key[0] != b1 as i32 {
            return Err(ModelError::Assembly);
        }
        let f = key[1] - b1 as i32; // elapsed-time exponent after compensation
        if f > 0 {
            return Err(ModelError::Assembly);
        }
        let mut nk = vec![0i32; 9];
        nk[EXP_NEG_KH] = -f;
        nk[H] = key[2];
        nk[K_INV] = key[4];
        nk[THETA] = key[5];
        nk[SIGMA_V] = key[6];
        nk[VBAR] = key[3];
        terms.push((nk, coeff.clone()));
    }
    Ok(GPoly::from_terms(w9, terms)?)
}

/// Outer expectation over the stationary variance law: each `vbar^l` power
/// becomes the exact central moment `E[vbar^l]`.
fn outer_expectation(p: &GPoly) -> Result<GPoly, ModelError> {
    let r8 = return_moment_signature();
    let mut acc = GPoly::zero(r8.clone());
    for (key, coeff) in p.terms() {
        let l = key[VBAR] as u32;
        let base = GPoly::monomial(r8.clone(), key[..VBAR].to_vec(), coeff.clone())?;
        let ev = ito::central_moment_vbar(l).extend_signature(&r8, &[])?;
        acc = acc.try_add(&base.try_mul(&ev)?)?;
    }
    Ok(acc)
}

/// Deterministic loading of one multinomial cell of `ybar^d`:
/// `(sigma_v/(2k))^{b1} (rho - sigma_v/(2k))^{b2} sqrt(1-rho^2)^{b3} (-beta)^{b4}`
/// with `beta = (1-e^{-kh})/(2k)`. The `e^{-b1 k t}` part of the `IE`
/// loading lives in [`cond_block`].
fn ybar_weight(b: &[u32]) -> Result<GPoly, ModelError> {
    let r8 = return_moment_signature();
    let (b1, b2, b3, b4) = (b[0], b[1], b[2], b[3]);

    let mut ie_key = vec![0i32; 8];
    ie_key[SIGMA_V] = b1 as i32;
    ie_key[K_INV] = b1 as i32;
    let mut sqrt_key = vec![0i32; 8];
    sqrt_key[SQRT] = b3 as i32;
    let ie_load = GPoly::monomial(r8.clone(), ie_key, rat(1, 1i64 << b1))?;
    let sqrt_load = GPoly::monomial(r8.clone(), sqrt_key, Rational::one())?;

    let rho_base = GPoly::from_terms(
        r8.clone(),
        [
            (key_with(&[(RHO, 1)]), rat(1, 1)),
            (key_with(&[(SIGMA_V, 1), (K_INV, 1)]), rat(-1, 2)),
        ],
    )?;
    let neg_beta_base = GPoly::from_terms(
        r8.clone(),
        [
            (key_with(&[(K_INV, 1)]), rat(-1, 2)),
            (key_with(&[(EXP_NEG_KH, 1), (K_INV, 1)]), rat(1, 2)),
        ],
    )?;

    Ok(ie_load
        .try_mul(&rho_base.pow_int(b2)?)?
        .try_mul(&sqrt_load)?
        .try_mul(&neg_beta_base.pow_int(b4)?)?)
}

fn key_with(entries: &[(usize, i32)]) -> Vec<i32> {
    let mut k = vec![0i32; 8];
    for &(i, e) in entries {
        k[i] = e;
    }
    k
}

/// `((mu - theta/2) h)^m` — the deterministic part of the return.
fn mean_pow(m: u32) -> Result<GPoly, ModelError> {
    let r8 = return_moment_signature();
    let base = GPoly::from_terms(
        r8,
        [
            (key_with(&[(H, 1), (MU, 1)]), rat(1, 1)),
            (key_with(&[(H, 1), (THETA, 1)]), rat(-1, 2)),
        ],
    )?;
    Ok(base.pow_int(m)?)
}

/// `E[ybar^d | v_{n-1}]` over the working signature: multinomial expansion
/// of the four-block decomposition into combination moments.
fn ybar_cond_power(d: u32) -> Result<GPoly, ModelError> {
    let w9 = working_signature();
    let mut acc = GPoly::zero(w9.clone());
    for b in compositions(d, 4) {
        if b[2] % 2 == 1 {
            // odd I* power: conditionally centered Gaussian, vanishes
            continue;
        }
        let block = cond_block(b[0], b[1], b[2])?;
        if block.is_zero() {
            continue;
        }
        let block = block.shift_exponent(slots::VBAR_PREV, b[3] as i32)?;
        let weight = ybar_weight(&b)?.extend_signature(&w9, &[])?;
        let coeff = Rational::from(multinomial(&b));
        acc = acc.try_add(&block.try_mul(&weight)?.scalar_mul(&coeff))?;
    }
    Ok(acc)
}

/// Conditional raw moment `E[y^l | v_{n-1}]` over the working signature,
/// with `vbar` powers kept symbolic. For `l = 1` this is the conditional
/// mean `(mu - theta/2) h - beta vbar`.
fn cond_moment_y(l: u32) -> Result<GPoly, ModelError> {
    let w9 = working_signature();
    let mut acc = GPoly::zero(w9.clone());
    for i in 0..=l {
        let mean = mean_pow(l - i)?
            .extend_signature(&w9, &[])?
            .scalar_mul(&Rational::from(choose(l, i)));
        acc = acc.try_add(&ybar_cond_power(i)?.try_mul(&mean)?)?;
    }
    Ok(acc)
}

/// Central moment `E[(y_n - E[y_n])^l]` over [`return_moment_signature`].
pub fn cmom_y(l: u32) -> Result<GPoly, ModelError> {
    outer_expectation(&ybar_cond_power(l)?)
}

/// Raw moment `E[y_n^l]` over [`return_moment_signature`].
pub fn moment_y(l: u32) -> Result<GPoly, ModelError> {
    outer_expectation(&cond_moment_y(l)?)
}

/// `E[y_n^{l1} vbar_n^{r}]`: the return over interval `n` against a power of
/// the *end-of-interval* centered variance, via the transition identity
/// `vbar_n = e^{-kh} vbar_{n-1} + sigma_v e^{-knh} IE_n`.
fn moment_y_times_vbar_next(l1: u32, r: u32) -> Result<GPoly, ModelError> {
    let r8 = return_moment_signature();
    let mut acc = GPoly::zero(r8.clone());
    for i in 0..=l1 {
        let mean = mean_pow(l1 - i)?.scalar_mul(&Rational::from(choose(l1, i)));
        for b in compositions(i, 4) {
            if b[2] % 2 == 1 {
                continue;
            }
            let weight = ybar_weight(&b)?.try_mul(&mean)?;
            if weight.is_zero() {
                continue;
            }
            let multinom = Rational::from(multinomial(&b));
            for c in 0..=r {
                // vbar_n^r -> C(r,c) (e^{-kh} vbar)^{r-c} (sigma_v e^{-knh} IE_n)^c;
                // the e^{-cknh} loading is folded into cond_block's first index.
                let block = cond_block(b[0] + c, b[1], b[2])?;
                if block.is_zero() {
                    continue;
                }
                let block = block.shift_exponent(slots::VBAR_PREV, (b[3] + r - c) as i32)?;
                let split = GPoly::monomial(
                    r8.clone(),
                    key_with(&[(EXP_NEG_KH, (r - c) as i32), (SIGMA_V, c as i32)]),
                    Rational::from(choose(r, c)),
                )?;
                let contrib = outer_expectation(&block)?
                    .try_mul(&weight)?
                    .try_mul(&split)?
                    .scalar_mul(&multinom);
                acc = acc.try_add(&contrib)?;
            }
        }
    }
    Ok(acc)
}

/// Joint raw cross moment `E[y_n^{l1} y_{n+1}^{l2}]` over
/// [`return_moment_signature`] (stationarity makes it independent of `n`).
///
/// The second interval is reduced through the Markov property:
/// `E[y_{n+1}^{l2} | v_n]` is expanded as a polynomial in `vbar_n`, each
/// power of which is paired with `y_n^{l1}` through
/// `moment_y_times_vbar_next`.
pub fn raw_cross_moment(l1: u32, l2: u32) -> Result<GPoly, ModelError> {
    let r8 = return_moment_signature();
    let g = cond_moment_y(l2)?;
    // group by vbar_n power
    let mut by_power: BTreeMap<u32, Vec<(Vec<i32>, Rational)>> = BTreeMap::new();
    for (key, coeff) in g.terms() {
        by_power
            .entry(key[VBAR] as u32)
            .or_default()
            .push((key[..VBAR].to_vec(), coeff.clone()));
    }
    let mut acc = GPoly::zero(r8.clone());
    for (r, terms) in by_power {
        let g_r = GPoly::from_terms(r8.clone(), terms)?;
        acc = acc.try_add(&g_r.try_mul(&moment_y_times_vbar_next(l1, r)?)?)?;
    }
    Ok(acc)
}

/// Lag-1 covariance of order `(l1, l2)`:
/// `E[y_n^{l1} y_{n+1}^{l2}] - E[y_n^{l1}] E[y_{n+1}^{l2}]`.
///
/// # Panics
///
/// Both orders must be at least one.
pub fn cov_yy(l1: u32, l2: u32) -> Result<GPoly, ModelError> {
    assert!(l1 >= 1 && l2 >= 1, "covariance orders must be >= 1");
    let cross = raw_cross_moment(l1, l2)?;
    let marginals = moment_y(l1)?.try_mul(&moment_y(l2)?)?;
    Ok(cross.try_sub(&marginals)?)
}
