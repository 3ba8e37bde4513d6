//! Numeric evaluation of [`GPoly`] values and exact symbolic partial
//! differentiation with respect to the model parameters.
//!
//! Evaluation gives meaning to slot names through a [`SlotRegistry`]: a map
//! from slot name to the numeric value of that symbolic factor (not of the
//! whole monomial). `'e^{-kh}'` maps to `exp(-k h)`, `'k^{-}'` to `1/k`,
//! plain parameter slots to themselves. The polynomial layer stays purely
//! syntactic; everything numeric lives here.
//!
//! Differentiation is exact and stays in the polynomial representation. Per
//! slot the chain rule is:
//!
//! ```text
//! d/dk   e^{-akh} = -a h e^{-akh}          ('h' exponent +1)
//! d/dk   k^{-o}   = -o k^{-(o+1)}
//! d/dh   e^{-akh} = -a k e^{-akh}          (positive 'k' power, appended slot)
//! d/drho (sqrt(1-rho^2))^w = -w rho (sqrt(1-rho^2))^{w-2}
//! ```
//!
//! so every derivative is again a [`GPoly`]; the `sqrt(1-rho^2)` slot may go
//! negative in derivative outputs.

use std::collections::BTreeMap;

use num::Zero;
use thiserror::Error;

use crate::ito::slots;
use crate::poly::{GPoly, PolyError, Rational, SlotSignature};

/// Errors raised by evaluation, differentiation and parameter handling.
#[derive(Debug, Error)]
pub enum EvalError {
    /// A slot name has no registered numeric factor.
    #[error("no numeric factor registered for slot '{0}'")]
    UnknownSlot(String),
    /// A zero factor was raised to a negative exponent.
    #[error("singular evaluation: slot '{slot}' has factor 0 with negative exponent {exponent}")]
    SingularEvaluation {
        /// Offending slot name.
        slot: String,
        /// The negative exponent requested.
        exponent: i32,
    },
    /// Differentiation parameter outside the model parameter set.
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    /// Differentiation of a polynomial still carrying interval-local slots.
    #[error("cannot differentiate through interval-local slot '{0}'")]
    UnsupportedSignature(String),
    /// Parameter values outside their domain.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// Malformed or incomplete parameter file.
    #[error("parameter file: {0}")]
    ParamFile(String),
    /// Underlying polynomial failure.
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Parameters of the one-factor stochastic volatility model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonParams {
    /// Constant return drift.
    pub mu: f64,
    /// Mean-reversion speed of the variance, `> 0`.
    pub k: f64,
    /// Long-run variance level, `> 0`.
    pub theta: f64,
    /// Volatility of variance, `> 0`.
    pub sigma_v: f64,
    /// Brownian correlation, in `(-1, 1)`.
    pub rho: f64,
    /// Observation interval length, `> 0`.
    pub h: f64,
}

impl HestonParams {
    /// Validate basic domains. The Feller condition is checked separately by
    /// [`HestonParams::feller_ok`]: it is enforced for simulation but only a
    /// warning for evaluation.
    pub fn new(
        mu: f64,
        k: f64,
        theta: f64,
        sigma_v: f64,
        rho: f64,
        h: f64,
    ) -> Result<Self, EvalError> {
        let p = HestonParams {
            mu,
            k,
            theta,
            sigma_v,
            rho,
            h,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), EvalError> {
        if !self.mu.is_finite() {
            return Err(EvalError::InvalidParams(format!(
                "mu = {} must be finite",
                self.mu
            )));
        }
        for (name, v) in [
            ("k", self.k),
            ("theta", self.theta),
            ("sigma_v", self.sigma_v),
            ("h", self.h),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EvalError::InvalidParams(format!(
                    "{name} = {v} must be > 0"
                )));
            }
        }
        if !(self.rho.is_finite() && self.rho.abs() < 1.0) {
            return Err(EvalError::InvalidParams(format!(
                "rho = {} must lie in (-1, 1)",
                self.rho
            )));
        }
        Ok(())
    }

    /// Feller condition `2 k theta > sigma_v^2` (positivity of the variance
    /// process).
    pub fn feller_ok(&self) -> bool {
        2.0 * self.k * self.theta > self.sigma_v * self.sigma_v
    }
}

/// Parameters of the jump-in-return extension: diffusion parameters plus a
/// compound Poisson jump stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvjParams {
    /// Diffusion parameters.
    pub heston: HestonParams,
    /// Jump arrival rate, `>= 0`.
    pub lambda: f64,
    /// Jump-size mean.
    pub mu_j: f64,
    /// Jump-size standard deviation, `>= 0`.
    pub sigma_j: f64,
}

impl SvjParams {
    /// Validate basic domains.
    pub fn new(
        heston: HestonParams,
        lambda: f64,
        mu_j: f64,
        sigma_j: f64,
    ) -> Result<Self, EvalError> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(EvalError::InvalidParams(format!(
                "lambda = {lambda} must be >= 0"
            )));
        }
        if !mu_j.is_finite() {
            return Err(EvalError::InvalidParams(format!(
                "mu_j = {mu_j} must be finite"
            )));
        }
        if !(sigma_j.is_finite() && sigma_j >= 0.0) {
            return Err(EvalError::InvalidParams(format!(
                "sigma_j = {sigma_j} must be >= 0"
            )));
        }
        Ok(SvjParams {
            heston,
            lambda,
            mu_j,
            sigma_j,
        })
    }
}

/// The nine differentiable model parameters.
pub const PARAM_NAMES: [&str; 9] = [
    "mu", "k", "theta", "sigma_v", "rho", "h", "lambda", "mu_j", "sigma_j",
];

/// Map from slot name to the numeric value of that symbolic factor.
#[derive(Debug, Clone, Default)]
pub struct SlotRegistry {
    factors: BTreeMap<String, f64>,
}

impl SlotRegistry {
    /// Registry with no factors; populate with [`SlotRegistry::with`].
    pub fn empty() -> Self {
        SlotRegistry::default()
    }

    /// Add or override a factor (builder style).
    pub fn with(mut self, name: &str, factor: f64) -> Self {
        self.factors.insert(name.to_string(), factor);
        self
    }

    /// Factors for the final moment signature of the diffusion model.
    pub fn heston(p: &HestonParams) -> Self {
        SlotRegistry::empty()
            .with(slots::EXP_NEG_KH, (-p.k * p.h).exp())
            .with(slots::H, p.h)
            .with(slots::K_INV, 1.0 / p.k)
            .with(slots::K_POS, p.k)
            .with(slots::MU, p.mu)
            .with(slots::THETA, p.theta)
            .with(slots::SIGMA_V, p.sigma_v)
            .with(slots::RHO, p.rho)
            .with(slots::SQRT_ONE_MINUS_RHO2, (1.0 - p.rho * p.rho).sqrt())
    }

    /// Factors for the jump-extended signature.
    pub fn svj(p: &SvjParams) -> Self {
        Self::heston(&p.heston)
            .with(slots::LAMBDA, p.lambda)
            .with(slots::MU_J, p.mu_j)
            .with(slots::SIGMA_J, p.sigma_j)
    }

    /// Factors for conditional product-moment polynomials over one interval,
    /// with the interval origin placed at time zero (so `e^{k(n-1)h} = 1`),
    /// elapsed time `tau` and starting variance `v_prev`.
    pub fn cond_moment(k: f64, theta: f64, sigma_v: f64, v_prev: f64, tau: f64) -> Self {
        SlotRegistry::empty()
            .with(slots::EXP_ORIGIN, 1.0)
            .with(slots::EXP_TAU, (k * tau).exp())
            .with(slots::TAU, tau)
            .with(slots::V_PREV, v_prev)
            .with(slots::VBAR_PREV, v_prev - theta)
            .with(slots::K_INV, 1.0 / k)
            .with(slots::THETA, theta)
            .with(slots::SIGMA_V, sigma_v)
    }

    /// Look up a factor.
    pub fn factor(&self, name: &str) -> Option<f64> {
        self.factors.get(name).copied()
    }
}

/// Evaluate a polynomial: `Σ coeff · Π factor^exponent` in double precision.
pub fn eval_poly(p: &GPoly, registry: &SlotRegistry) -> Result<f64, EvalError> {
    let sig = p.signature();
    let factors: Vec<f64> = sig
        .names()
        .map(|n| {
            registry
                .factor(n)
                .ok_or_else(|| EvalError::UnknownSlot(n.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut total = 0.0;
    for (key, coeff) in p.terms() {
        let mut prod = rational_to_f64(coeff);
        for (i, &e) in key.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if factors[i] == 0.0 && e < 0 {
                return Err(EvalError::SingularEvaluation {
                    slot: sig.slot(i).name.clone(),
                    exponent: e,
                });
            }
            prod *= factors[i].powi(e);
        }
        total += prod;
    }
    Ok(total)
}

/// Evaluate with exact rational factor values; used where bit-exact equality
/// matters (for instance comparing two algebraic routes).
pub fn eval_exact(p: &GPoly, factors: &BTreeMap<String, Rational>) -> Result<Rational, EvalError> {
    let sig = p.signature();
    let vals: Vec<&Rational> = sig
        .names()
        .map(|n| {
            factors
                .get(n)
                .ok_or_else(|| EvalError::UnknownSlot(n.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut total = Rational::zero();
    for (key, coeff) in p.terms() {
        let mut prod = coeff.clone();
        for (i, &e) in key.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if vals[i].is_zero() && e < 0 {
                return Err(EvalError::SingularEvaluation {
                    slot: sig.slot(i).name.clone(),
                    exponent: e,
                });
            }
            if e > 0 {
                for _ in 0..e {
                    prod *= vals[i];
                }
            } else {
                for _ in 0..(-e) {
                    prod /= vals[i];
                }
            }
        }
        total += prod;
    }
    Ok(total)
}

fn rational_to_f64(r: &Rational) -> f64 {
    use num::ToPrimitive;
    r.to_f64()
        .expect("rational magnitudes stay within f64 range")
}

/// Slot names a final-moment polynomial may carry; anything else (the
/// interval-local slots of the conditional-moment layer) cannot be
/// differentiated with respect to the model parameters.
const DIFFERENTIABLE_SLOTS: [&str; 12] = [
    slots::EXP_NEG_KH,
    slots::H,
    slots::K_INV,
    slots::K_POS,
    slots::MU,
    slots::THETA,
    slots::SIGMA_V,
    slots::RHO,
    slots::SQRT_ONE_MINUS_RHO2,
    slots::LAMBDA,
    slots::MU_J,
    slots::SIGMA_J,
];

/// Exact partial derivative with respect to one of [`PARAM_NAMES`].
///
/// The result is canonical. Differentiating with respect to `h` maps
/// `e^{-akh}` to `-ak e^{-akh}`, which needs a positive power of `k`; the
/// signature is extended with a trailing `'k'` slot in that case.
pub fn diff_poly(p: &GPoly, param: &str) -> Result<GPoly, EvalError> {
    if !PARAM_NAMES.contains(&param) {
        return Err(EvalError::UnknownParameter(param.to_string()));
    }
    let sig = p.signature();
    for name in sig.names() {
        if !DIFFERENTIABLE_SLOTS.contains(&name) {
            return Err(EvalError::UnsupportedSignature(name.to_string()));
        }
    }

    // d/dh needs a 'k' slot for the e^{-akh} chain rule.
    let needs_k = param == "h" && sig.index_of(slots::EXP_NEG_KH).is_some();
    let (work, out_sig) = if needs_k && sig.index_of(slots::K_POS).is_none() {
        let extended = SlotSignature::new(
            (0..sig.len())
                .map(|i| {
                    let s = sig.slot(i);
                    (s.name.clone(), s.allow_negative_exponent)
                })
                .chain([(slots::K_POS.to_string(), false)]),
        )?;
        (p.extend_signature(&extended, &[])?, extended)
    } else {
        (p.clone(), sig.clone())
    };

    let idx = |name: &str| out_sig.index_of(name);
    let mut out = GPoly::zero(out_sig.clone());
    let push = |out: &mut GPoly, key: Vec<i32>, c: Rational| {
        if !c.is_zero() {
            *out = out
                .try_add(
                    &GPoly::monomial(out_sig.clone(), key, c)
                        .expect("derivative keys respect the slot policy"),
                )
                .expect("same signature");
        }
    };

    for (key, coeff) in work.terms() {
        match param {
            // plain power rule on the parameter's own slot
            "mu" | "theta" | "sigma_v" | "lambda" | "mu_j" | "sigma_j" => {
                if let Some(i) = idx(param) {
                    let e = key[i];
                    if e != 0 {
                        let mut nk = key.to_vec();
                        nk[i] -= 1;
                        push(&mut out, nk, coeff * Rational::from_integer(e.into()));
                    }
                }
            }
            "k" => {
                // e^{-akh} -> -a h e^{-akh}
                if let (Some(ie), Some(ih)) = (idx(slots::EXP_NEG_KH), idx(slots::H)) {
                    let a = key[ie];
                    if a != 0 {
                        let mut nk = key.to_vec();
                        nk[ih] += 1;
                        push(&mut out, nk, coeff * Rational::from_integer((-a).into()));
                    }
                }
                // k^{-o} -> -o k^{-(o+1)}
                if let Some(io) = idx(slots::K_INV) {
                    let o = key[io];
                    if o != 0 {
                        let mut nk = key.to_vec();
                        nk[io] += 1;
                        push(&mut out, nk, coeff * Rational::from_integer((-o).into()));
                    }
                }
                // k^{g} -> g k^{g-1}
                if let Some(ig) = idx(slots::K_POS) {
                    let g = key[ig];
                    if g != 0 {
                        let mut nk = key.to_vec();
                        nk[ig] -= 1;
                        push(&mut out, nk, coeff * Rational::from_integer(g.into()));
                    }
                }
            }
            "h" => {
                if let Some(ih) = idx(slots::H) {
                    let j = key[ih];
                    if j != 0 {
                        let mut nk = key.to_vec();
                        nk[ih] -= 1;
                        push(&mut out, nk, coeff * Rational::from_integer(j.into()));
                    }
                }
                // e^{-akh} -> -a k e^{-akh}
                if let Some(ie) = idx(slots::EXP_NEG_KH) {
                    let a = key[ie];
                    if a != 0 {
                        let ig = idx(slots::K_POS).expect("signature extended above");
                        let mut nk = key.to_vec();
                        nk[ig] += 1;
                        push(&mut out, nk, coeff * Rational::from_integer((-a).into()));
                    }
                }
            }
            "rho" => {
                if let Some(ir) = idx(slots::RHO) {
                    let s = key[ir];
                    if s != 0 {
                        let mut nk = key.to_vec();
                        nk[ir] -= 1;
                        push(&mut out, nk, coeff * Rational::from_integer(s.into()));
                    }
                }
                // (sqrt(1-rho^2))^w -> -w rho (sqrt(1-rho^2))^{w-2}
                if let (Some(iw), Some(ir)) = (idx(slots::SQRT_ONE_MINUS_RHO2), idx(slots::RHO)) {
                    let w = key[iw];
                    if w != 0 {
                        let mut nk = key.to_vec();
                        nk[iw] -= 2;
                        nk[ir] += 1;
                        push(&mut out, nk, coeff * Rational::from_integer((-w).into()));
                    }
                }
            }
            _ => unreachable!("param checked against PARAM_NAMES"),
        }
    }
    Ok(out)
}

/// Parse a flat `key=value` or JSON-object parameter file into a name/value
/// map. Lines starting with `#` and blank lines are ignored in the flat
/// format. Unknown keys are rejected.
pub fn parse_params_file(text: &str) -> Result<BTreeMap<String, f64>, EvalError> {
    let trimmed = text.trim_start();
    let map: BTreeMap<String, f64> = if trimmed.starts_with('{') {
        serde_json::from_str(trimmed).map_err(|e| EvalError::ParamFile(e.to_string()))?
    } else {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                EvalError::ParamFile(format!("line {}: expected key=value", lineno + 1))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                EvalError::ParamFile(format!(
                    "line {}: '{}' is not a number",
                    lineno + 1,
                    value.trim()
                ))
            })?;
            map.insert(key.trim().to_string(), value);
        }
        map
    };
    for key in map.keys() {
        if !PARAM_NAMES.contains(&key.as_str()) {
            return Err(EvalError::ParamFile(format!("unknown parameter '{key}'")));
        }
    }
    Ok(map)
}

fn require(map: &BTreeMap<String, f64>, key: &str) -> Result<f64, EvalError> {
    map.get(key)
        .copied()
        .ok_or_else(|| EvalError::ParamFile(format!("missing parameter '{key}'")))
}

/// Build diffusion parameters from a parsed parameter map; jump parameters
/// must be absent.
pub fn heston_params_from_map(map: &BTreeMap<String, f64>) -> Result<HestonParams, EvalError> {
    for jump in ["lambda", "mu_j", "sigma_j"] {
        if map.contains_key(jump) {
            return Err(EvalError::ParamFile(format!(
                "parameter '{jump}' does not apply to the pure-diffusion model"
            )));
        }
    }
    HestonParams::new(
        require(map, "mu")?,
        require(map, "k")?,
        require(map, "theta")?,
        require(map, "sigma_v")?,
        require(map, "rho")?,
        require(map, "h")?,
    )
}

/// Build jump-model parameters from a parsed parameter map.
pub fn svj_params_from_map(map: &BTreeMap<String, f64>) -> Result<SvjParams, EvalError> {
    let heston = HestonParams::new(
        require(map, "mu")?,
        require(map, "k")?,
        require(map, "theta")?,
        require(map, "sigma_v")?,
        require(map, "rho")?,
        require(map, "h")?,
    )?;
    SvjParams::new(
        heston,
        require(map, "lambda")?,
        require(map, "mu_j")?,
        require(map, "sigma_j")?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;
    use approx::assert_relative_eq;

    fn table1_heston() -> HestonParams {
        HestonParams::new(0.125, 0.1, 0.25, 0.1, -0.7, 1.0).unwrap()
    }

    #[test]
    fn param_validation() {
        assert!(HestonParams::new(0.1, 0.0, 0.25, 0.1, 0.0, 1.0).is_err());
        assert!(HestonParams::new(0.1, 1.0, 0.25, 0.1, 1.0, 1.0).is_err());
        assert!(HestonParams::new(0.1, 1.0, 0.25, 0.1, 0.0, -1.0).is_err());
        let p = table1_heston();
        assert!(p.feller_ok());
        assert!(SvjParams::new(p, -0.1, 0.0, 0.1).is_err());
        assert!(SvjParams::new(p, 0.1, 0.0, -0.1).is_err());
    }

    #[test]
    fn eval_constant_and_unknown_slot() {
        let sig = SlotSignature::new([("mystery", false)]).unwrap();
        let one = GPoly::one(sig.clone());
        assert_relative_eq!(
            eval_poly(&one, &SlotRegistry::empty().with("mystery", 3.0)).unwrap(),
            1.0
        );
        assert!(matches!(
            eval_poly(
                &GPoly::monomial(sig, vec![1], rat(1, 1)).unwrap(),
                &SlotRegistry::empty()
            ),
            Err(EvalError::UnknownSlot(_))
        ));
    }

    #[test]
    fn eval_singular_on_negative_power_of_zero() {
        let sig = SlotSignature::new([("x", true)]).unwrap();
        let p = GPoly::monomial(sig, vec![-2], rat(1, 1)).unwrap();
        let reg = SlotRegistry::empty().with("x", 0.0);
        assert!(matches!(
            eval_poly(&p, &reg),
            Err(EvalError::SingularEvaluation { .. })
        ));
    }

    #[test]
    fn eval_is_multiplicative() {
        let sig = SlotSignature::new([("x", true), ("y", false)]).unwrap();
        let p = GPoly::from_terms(
            sig.clone(),
            [(vec![1, 0], rat(2, 3)), (vec![-1, 2], rat(-5, 7))],
        )
        .unwrap();
        let q = GPoly::from_terms(
            sig.clone(),
            [(vec![0, 1], rat(1, 2)), (vec![2, 0], rat(4, 1))],
        )
        .unwrap();
        let reg = SlotRegistry::empty().with("x", 1.7).with("y", -0.35);
        let lhs = eval_poly(&p.try_mul(&q).unwrap(), &reg).unwrap();
        let rhs = eval_poly(&p, &reg).unwrap() * eval_poly(&q, &reg).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn extend_signature_preserves_evaluation() {
        let src = SlotSignature::new([("theta", false), ("sigma_v", false)]).unwrap();
        let dst = SlotSignature::new([
            ("k^{-}", false),
            ("sigma_v", false),
            ("mu", false),
            ("theta", false),
        ])
        .unwrap();
        let p =
            GPoly::from_terms(src, [(vec![2, 1], rat(3, 7)), (vec![0, 3], rat(-5, 2))]).unwrap();
        let q = p.extend_signature(&dst, &[]).unwrap();
        let reg = SlotRegistry::empty()
            .with("theta", 0.31)
            .with("sigma_v", 1.7)
            .with("k^{-}", 2.2)
            .with("mu", -0.4);
        assert_relative_eq!(
            eval_poly(&p, &reg).unwrap(),
            eval_poly(&q, &reg).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn partials_of_the_first_moment() {
        let m1 = crate::heston::moment_y(1).unwrap();
        let sig = crate::heston::return_moment_signature();
        // d/dmu -> h
        assert_eq!(
            diff_poly(&m1, "mu").unwrap(),
            GPoly::monomial(sig.clone(), vec![0, 1, 0, 0, 0, 0, 0, 0], rat(1, 1)).unwrap()
        );
        // d/dtheta -> -h/2
        assert_eq!(
            diff_poly(&m1, "theta").unwrap(),
            GPoly::monomial(sig.clone(), vec![0, 1, 0, 0, 0, 0, 0, 0], rat(-1, 2)).unwrap()
        );
        // d/drho -> 0
        assert!(diff_poly(&m1, "rho").unwrap().is_zero());
    }

    #[test]
    fn diff_rejects_unknown_parameter_and_interval_slots() {
        let p = GPoly::one(crate::heston::return_moment_signature());
        assert!(matches!(
            diff_poly(&p, "nu"),
            Err(EvalError::UnknownParameter(_))
        ));
        let q = GPoly::one(crate::ito::cond_moment_signature());
        assert!(matches!(
            diff_poly(&q, "k"),
            Err(EvalError::UnsupportedSignature(_))
        ));
    }

    #[test]
    fn diff_is_linear() {
        let sig = crate::heston::return_moment_signature();
        let p = GPoly::from_terms(
            sig.clone(),
            [
                (vec![2, 1, 1, 0, 1, 0, 0, 0], rat(3, 5)),
                (vec![0, 2, 0, 1, 0, 2, 1, 2], rat(-7, 2)),
            ],
        )
        .unwrap();
        let q =
            GPoly::from_terms(sig.clone(), [(vec![1, 0, 3, 0, 0, 1, 0, 2], rat(9, 4))]).unwrap();
        for param in PARAM_NAMES {
            let combo = p
                .scalar_mul(&rat(2, 3))
                .try_add(&q.scalar_mul(&rat(-5, 9)))
                .unwrap();
            let lhs = diff_poly(&combo, param).unwrap();
            let rhs = diff_poly(&p, param)
                .unwrap()
                .scalar_mul(&rat(2, 3))
                .try_add(&diff_poly(&q, param).unwrap().scalar_mul(&rat(-5, 9)))
                .unwrap();
            assert_eq!(lhs, rhs, "param {param}");
        }
    }

    #[test]
    fn diff_wrt_h_extends_with_k_slot() {
        let sig = crate::heston::return_moment_signature();
        // e^{-2kh} h
        let p = GPoly::monomial(sig, vec![2, 1, 0, 0, 0, 0, 0, 0], rat(1, 1)).unwrap();
        let d = diff_poly(&p, "h").unwrap();
        // d/dh = e^{-2kh} - 2k h e^{-2kh}
        assert_eq!(d.signature().len(), 9);
        assert_eq!(d.signature().names().last(), Some("k"));
        let expected = GPoly::from_terms(
            d.signature().clone(),
            [
                (vec![2, 0, 0, 0, 0, 0, 0, 0, 0], rat(1, 1)),
                (vec![2, 1, 0, 0, 0, 0, 0, 0, 1], rat(-2, 1)),
            ],
        )
        .unwrap();
        assert_eq!(d, expected);
    }

    #[test]
    fn params_file_flat_and_json() {
        let flat = "# comment\nmu = 0.125\nk=0.1\n\ntheta=0.25\nsigma_v=0.1\nrho=-0.7\nh=1\n";
        let map = parse_params_file(flat).unwrap();
        let p = heston_params_from_map(&map).unwrap();
        assert_eq!(p, table1_heston());

        let json = r#"{"mu":0.125,"k":0.1,"theta":0.25,"sigma_v":0.1,"rho":-0.7,"h":1,
                       "lambda":0.01,"mu_j":0.0,"sigma_j":0.05}"#;
        let map = parse_params_file(json).unwrap();
        let svj = svj_params_from_map(&map).unwrap();
        assert_eq!(svj.lambda, 0.01);
        assert_eq!(svj.heston, table1_heston());
    }

    #[test]
    fn params_file_rejects_unknown_and_missing_keys() {
        assert!(matches!(
            parse_params_file("nu=1\n"),
            Err(EvalError::ParamFile(_))
        ));
        assert!(matches!(
            parse_params_file(r#"{"mu":0.1,"vol":2}"#),
            Err(EvalError::ParamFile(_))
        ));
        let incomplete = parse_params_file("mu=0.1\n").unwrap();
        assert!(matches!(
            heston_params_from_map(&incomplete),
            Err(EvalError::ParamFile(_))
        ));
        // jump parameters rejected for the pure-diffusion model
        let with_jumps = parse_params_file(
            "mu=0.1\nk=1\ntheta=0.2\nsigma_v=0.1\nrho=0\nh=1\nlambda=0.5\nmu_j=0\nsigma_j=0.1\n",
        )
        .unwrap();
        assert!(heston_params_from_map(&with_jumps).is_err());
        assert!(svj_params_from_map(&with_jumps).is_ok());
    }
}
