//! Conditional Itô product moments for the square-root variance process.
//!
//! Over one observation interval starting at `(n-1)h`, three stochastic
//! integrals drive the return decomposition:
//!
//! ```text
//! I(t)  = ∫ sqrt(v(s)) dw_v(s)
//! I*(t) = ∫ sqrt(v(s)) dw(s)
//! IE(t) = ∫ e^{ks} sqrt(v(s)) dw_v(s)
//! ```
//!
//! This module derives the conditional product moment
//! `E[IE^{m1} I^{m2} I*^{m3} | v_{n-1}]` in closed form as a [`GPoly`]
//! whose monomials are
//!
//! ```text
//! e^{m1 k(n-1)h} * e^{ik[t-(n-1)h]} * [t-(n-1)h]^j * v_{n-1}^l * k^{-o} * theta^p * sigma_v^q
//! ```
//!
//! The derivation is a twelve-term recursion obtained from the Itô product
//! rule: each quadratic-variation pairing contributes three integrals after
//! substituting `v(s) = theta + e^{-k[s-(n-1)h]} vbar_{n-1} + sigma_v e^{-ks} IE(s)`,
//! where `vbar_{n-1} = v_{n-1} - theta`. The time integrals reduce termwise
//! to the closed-form table [`int_et`].
//!
//! Stationary moments of the variance itself, `E[v^m]` and `E[vbar^m]`, are
//! derived from the gamma stationary law of the square-root diffusion.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num::{One, Zero};

use crate::combinatorics::choose;
use crate::poly::{rat, GPoly, PolyError, Rational, SlotSignature};

/// Slot-name constants shared across the crate.
pub mod slots {
    /// `e^{k(n-1)h}` — interval-origin exponential (cancels in final formulae).
    pub const EXP_ORIGIN: &str = "e^{k(n-1)h}";
    /// `e^{k[t-(n-1)h]}` — elapsed-time exponential inside an interval.
    pub const EXP_TAU: &str = "e^{k[t-(n-1)h]}";
    /// `[t-(n-1)h]` — elapsed time inside an interval.
    pub const TAU: &str = "[t-(n-1)h]";
    /// `v_{n-1}` — variance at the interval start.
    pub const V_PREV: &str = "v_{n-1}";
    /// `vbar_{n-1}` — centered variance `v_{n-1} - theta` (internal form).
    pub const VBAR_PREV: &str = "vbar_{n-1}";
    /// `k^{-}` — inverse powers of the mean-reversion speed.
    pub const K_INV: &str = "k^{-}";
    /// Long-run variance level.
    pub const THETA: &str = "theta";
    /// Volatility of variance.
    pub const SIGMA_V: &str = "sigma_v";
    /// `e^{-kh}` — one-interval decay factor (final signatures).
    pub const EXP_NEG_KH: &str = "e^{-kh}";
    /// Observation interval length.
    pub const H: &str = "h";
    /// Drift parameter.
    pub const MU: &str = "mu";
    /// Brownian correlation.
    pub const RHO: &str = "rho";
    /// `sqrt(1-rho^2)` — the orthogonal-noise loading.
    pub const SQRT_ONE_MINUS_RHO2: &str = "sqrt(1-rho^2)";
    /// Positive powers of `k` (appears only after differentiation w.r.t. `h`).
    pub const K_POS: &str = "k";
    /// Jump arrival rate.
    pub const LAMBDA: &str = "lambda";
    /// Jump-size mean.
    pub const MU_J: &str = "mu_j";
    /// Jump-size standard deviation.
    pub const SIGMA_J: &str = "sigma_j";
}

/// Orders `(m1, m2, m3)` of the conditional product moment
/// `E[IE^{m1} I^{m2} I*^{m3} | v_{n-1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexTriple {
    /// Power of `IE`.
    pub m1: u32,
    /// Power of `I`.
    pub m2: u32,
    /// Power of `I*`.
    pub m3: u32,
}

impl IndexTriple {
    /// Construct a triple of nonnegative orders.
    pub fn new(m1: u32, m2: u32, m3: u32) -> Self {
        IndexTriple { m1, m2, m3 }
    }

    /// Total order `m1 + m2 + m3`.
    pub fn order(&self) -> u32 {
        self.m1 + self.m2 + self.m3
    }
}

/// Signature of the closed-form integral table: `(e^{k[t-(n-1)h]}, [t-(n-1)h], k^{-})`.
pub fn integral_signature() -> Arc<SlotSignature> {
    static SIG: OnceLock<Arc<SlotSignature>> = OnceLock::new();
    SIG.get_or_init(|| {
        SlotSignature::new([
            (slots::EXP_TAU, true),
            (slots::TAU, false),
            (slots::K_INV, false),
        ])
        .unwrap()
    })
    .clone()
}

/// Public signature of conditional product moments (polynomial in `v_{n-1}`).
pub fn cond_moment_signature() -> Arc<SlotSignature> {
    static SIG: OnceLock<Arc<SlotSignature>> = OnceLock::new();
    SIG.get_or_init(|| {
        SlotSignature::new([
            (slots::EXP_ORIGIN, false),
            (slots::EXP_TAU, true),
            (slots::TAU, false),
            (slots::V_PREV, false),
            (slots::K_INV, false),
            (slots::THETA, false),
            (slots::SIGMA_V, false),
        ])
        .unwrap()
    })
    .clone()
}

/// Internal signature carrying `vbar_{n-1}` instead of `v_{n-1}`. The
/// recursion's coefficients are stated in the centered variance; the public
/// boundary expands `vbar = v - theta`.
pub(crate) fn cond_moment_signature_vbar() -> Arc<SlotSignature> {
    static SIG: OnceLock<Arc<SlotSignature>> = OnceLock::new();
    SIG.get_or_init(|| {
        SlotSignature::new([
            (slots::EXP_ORIGIN, false),
            (slots::EXP_TAU, true),
            (slots::TAU, false),
            (slots::VBAR_PREV, false),
            (slots::K_INV, false),
            (slots::THETA, false),
            (slots::SIGMA_V, false),
        ])
        .unwrap()
    })
    .clone()
}

/// Signature of stationary variance moments: `(theta, sigma_v, k^{-})`.
pub fn variance_moment_signature() -> Arc<SlotSignature> {
    static SIG: OnceLock<Arc<SlotSignature>> = OnceLock::new();
    SIG.get_or_init(|| {
        SlotSignature::new([
            (slots::THETA, false),
            (slots::SIGMA_V, false),
            (slots::K_INV, false),
        ])
        .unwrap()
    })
    .clone()
}

/// Closed form of the definite integral
/// `∫_{(n-1)h}^{t} e^{ik[s-(n-1)h]} [s-(n-1)h]^j ds`
/// over [`integral_signature`].
///
/// The antiderivative of `e^{ikτ} τ^j` for `i != 0` is
/// `Σ_{r=0}^{j} c_r k^{-(r+1)} e^{ikτ} τ^{j-r}` with `c_0 = 1/i` and
/// `c_r = -(j - r + 1) c_{r-1} / i`; evaluating at both bounds leaves an
/// extra constant `-c_j k^{-(j+1)}` from the lower bound. For `i = 0` the
/// integrand is the plain power `τ^j`.
pub fn int_et(i: i32, j: u32) -> GPoly {
    let sig = integral_signature();
    let j_i32 = j as i32;
    if i == 0 {
        // ∫ τ^j dτ = τ^{j+1} / (j+1)
        return GPoly::monomial(sig, vec![0, j_i32 + 1, 0], rat(1, i64::from(j) + 1)).unwrap();
    }
    let mut terms: Vec<(Vec<i32>, Rational)> = Vec::with_capacity(j as usize + 2);
    let mut c = rat(1, i64::from(i)); // c_0 = 1/i
    terms.push((vec![i, j_i32, 1], c.clone()));
    for r in 1..=j_i32 {
        c *= rat(-i64::from(j_i32 - r + 1), i64::from(i));
        terms.push((vec![i, j_i32 - r, r + 1], c.clone()));
    }
    // lower bound: only the τ^0 term survives
    terms.push((vec![0, 0, j_i32 + 1], -c));
    GPoly::from_terms(sig, terms).unwrap()
}

/// Termwise integration `∫_{(n-1)h}^{t} e^{mk[s-(n-1)h]} p(s) ds`.
///
/// `p` may be over any signature containing the `e^{k[t-(n-1)h]}`,
/// `[t-(n-1)h]` and `k^{-}` slots; all other slots pass through untouched.
/// Callers are responsible for rewriting absolute-time factors `e^{aks}` as
/// `e^{ak(n-1)h} e^{ak[s-(n-1)h]}` first and shifting the `e^{k(n-1)h}` slot
/// themselves.
pub fn int_e_poly(m: i32, p: &GPoly) -> Result<GPoly, PolyError> {
    let sig = p.signature();
    let f = sig
        .index_of(slots::EXP_TAU)
        .ok_or_else(|| PolyError::UnknownSlot(slots::EXP_TAU.to_string()))?;
    let t = sig
        .index_of(slots::TAU)
        .ok_or_else(|| PolyError::UnknownSlot(slots::TAU.to_string()))?;
    let k = sig
        .index_of(slots::K_INV)
        .ok_or_else(|| PolyError::UnknownSlot(slots::K_INV.to_string()))?;
    let mut out = GPoly::zero(sig.clone());
    for (key, coeff) in p.terms() {
        if key[t] < 0 {
            return Err(PolyError::NegativeExponentViolation {
                slot: slots::TAU.to_string(),
                exponent: key[t],
            });
        }
        let table = int_et(m + key[f], key[t] as u32);
        let mut pieces = Vec::with_capacity(table.num_terms());
        for (tk, tc) in table.terms() {
            let mut nk = key.to_vec();
            nk[f] = tk[0];
            nk[t] = tk[1];
            nk[k] += tk[2];
            pieces.push((nk, coeff * tc));
        }
        out = out.try_add(&GPoly::from_terms(sig.clone(), pieces)?)?;
    }
    Ok(out)
}

fn cond_cache() -> &'static Mutex<HashMap<IndexTriple, Arc<GPoly>>> {
    static CACHE: OnceLock<Mutex<HashMap<IndexTriple, Arc<GPoly>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Conditional product moment in the internal `vbar` form, memoized.
///
/// Concurrent callers may duplicate the derivation of a triple but never
/// observe a partial entry: the cache is only touched with finished values.
pub(crate) fn cond_ieii_moment_vbar(t: IndexTriple) -> Arc<GPoly> {
    if let Some(p) = cond_cache().lock().unwrap().get(&t) {
        return p.clone();
    }
    let computed = Arc::new(derive_vbar(t));
    cond_cache()
        .lock()
        .unwrap()
        .entry(t)
        .or_insert(computed)
        .clone()
}

/// One term of the twelve-term recursion:
/// `coeff * extra * e^{shift·k(n-1)h} * ∫ e^{a·k[s-(n-1)h]} M(child) ds`
/// where `extra` is one of `vbar_{n-1}`, `theta`, `sigma_v` and `shift`
/// already accounts for the rewrite of absolute-time exponentials.
fn recursion_term(
    child: (i32, i32, i32),
    a: i32,
    origin_shift: i32,
    extra_slot: &str,
    coeff: Rational,
) -> GPoly {
    let sig = cond_moment_signature_vbar();
    if coeff.is_zero() || child.0 < 0 || child.1 < 0 || child.2 < 0 {
        return GPoly::zero(sig);
    }
    let m = cond_ieii_moment_vbar(IndexTriple::new(
        child.0 as u32,
        child.1 as u32,
        child.2 as u32,
    ));
    let integrated = int_e_poly(a, &m).expect("recursion signature has the integral slots");
    integrated
        .shift_exponent(slots::EXP_ORIGIN, origin_shift)
        .expect("origin exponent stays nonnegative in the recursion")
        .shift_exponent(extra_slot, 1)
        .expect("factor slots are nonnegative")
        .scalar_mul(&coeff)
}

fn derive_vbar(t: IndexTriple) -> GPoly {
    let sig = cond_moment_signature_vbar();
    if t.order() == 0 {
        return GPoly::one(sig);
    }
    let (m1, m2, m3) = (t.m1 as i32, t.m2 as i32, t.m3 as i32);
    // Quadratic-variation pairing coefficients. The products d<IE,I*> and
    // d<I,I*> vanish (independent drivers), which is why I* only ever steps
    // down by two; odd m3 therefore yields the zero polynomial.
    let c_ee = rat(i64::from(m1) * i64::from(m1 - 1), 2);
    let c_ii = rat(i64::from(m2) * i64::from(m2 - 1), 2);
    let c_ei = rat(i64::from(m1) * i64::from(m2), 1);
    let c_ss = rat(i64::from(m3) * i64::from(m3 - 1), 2);

    let terms = [
        // d<IE,IE> = e^{2ks} v(s) ds
        ((m1 - 2, m2, m3), 1, 2, slots::VBAR_PREV, c_ee.clone()),
        ((m1 - 2, m2, m3), 2, 2, slots::THETA, c_ee.clone()),
        ((m1 - 1, m2, m3), 1, 1, slots::SIGMA_V, c_ee),
        // d<I,I> = v(s) ds
        ((m1, m2 - 2, m3), -1, 0, slots::VBAR_PREV, c_ii.clone()),
        ((m1, m2 - 2, m3), 0, 0, slots::THETA, c_ii.clone()),
        ((m1 + 1, m2 - 2, m3), -1, -1, slots::SIGMA_V, c_ii),
        // d<IE,I> = e^{ks} v(s) ds
        ((m1 - 1, m2 - 1, m3), 0, 1, slots::VBAR_PREV, c_ei.clone()),
        ((m1 - 1, m2 - 1, m3), 1, 1, slots::THETA, c_ei.clone()),
        ((m1, m2 - 1, m3), 0, 0, slots::SIGMA_V, c_ei),
        // d<I*,I*> = v(s) ds
        ((m1, m2, m3 - 2), -1, 0, slots::VBAR_PREV, c_ss.clone()),
        ((m1, m2, m3 - 2), 0, 0, slots::THETA, c_ss.clone()),
        ((m1 + 1, m2, m3 - 2), -1, -1, slots::SIGMA_V, c_ss),
    ];

    let mut acc = GPoly::zero(sig);
    for (child, a, shift, slot, coeff) in terms {
        acc = acc
            .try_add(&recursion_term(child, a, shift, slot, coeff))
            .expect("all recursion terms share one signature");
    }
    acc
}

/// Conditional product moment `E[IE^{m1} I^{m2} I*^{m3} | v_{n-1}]` over
/// [`cond_moment_signature`], i.e. expanded in powers of `v_{n-1}`.
///
/// `(0,0,0)` yields the constant one; any triple of total order one and any
/// triple with odd `m3` yield the zero polynomial.
///
/// Derivations are memoized process-wide: repeated calls return structurally
/// identical polynomials, and concurrent callers may at worst duplicate work
/// for a not-yet-cached triple.
pub fn cond_ieii_moment(t: IndexTriple) -> GPoly {
    let vbar_form = cond_ieii_moment_vbar(t);
    let sig = cond_moment_signature();
    let vbar_idx = 3; // slot position shared by both forms
    let mut out = GPoly::zero(sig.clone());
    for (key, coeff) in vbar_form.terms() {
        let l = key[vbar_idx] as u32;
        // vbar^l = (v - theta)^l
        for i in 0..=l {
            let mut nk = key.to_vec();
            nk[vbar_idx] = i as i32;
            nk[5] += (l - i) as i32; // theta slot
            let mut c = coeff * Rational::from(choose(l, i));
            if (l - i) % 2 == 1 {
                c = -c;
            }
            out = out
                .try_add(&GPoly::monomial(sig.clone(), nk, c).unwrap())
                .unwrap();
        }
    }
    out
}

/// Stationary raw moment of the variance over [`variance_moment_signature`]:
/// `E[v^m] = Π_{j=0}^{m-1} (theta + j sigma_v^2 / (2k))`, from the gamma
/// stationary law of the square-root diffusion.
pub fn moment_v(m: u32) -> GPoly {
    let sig = variance_moment_signature();
    let mut acc = GPoly::one(sig.clone());
    for j in 0..m {
        let factor = GPoly::from_terms(
            sig.clone(),
            [
                (vec![1, 0, 0], Rational::one()),
                (vec![0, 2, 1], rat(i64::from(j), 2)),
            ],
        )
        .unwrap();
        acc = acc.try_mul(&factor).unwrap();
    }
    acc
}

/// Stationary central moment `E[(v - theta)^m]` by binomial recombination of
/// [`moment_v`]. `m = 1` gives the zero polynomial and `m = 2` gives
/// `theta sigma_v^2 / (2k)`.
pub fn central_moment_vbar(m: u32) -> GPoly {
    let sig = variance_moment_signature();
    let mut acc = GPoly::zero(sig.clone());
    for i in 0..=m {
        // C(m,i) E[v^i] (-theta)^{m-i}
        let mut c = Rational::from(choose(m, i));
        if (m - i) % 2 == 1 {
            c = -c;
        }
        let theta_pow = GPoly::monomial(sig.clone(), vec![(m - i) as i32, 0, 0], c).unwrap();
        acc = acc
            .try_add(&moment_v(i).try_mul(&theta_pow).unwrap())
            .unwrap();
    }
    acc
}
