//! Generalized sparse polynomials over exact rationals.
//!
//! A [`GPoly`] is a finite map from integer exponent vectors (`key`s) to
//! `BigRational` coefficients. The meaning of each exponent position is given
//! by a [`SlotSignature`]: an ordered list of named symbolic factors such as
//! `'e^{-kh}'` or `'sigma_v'`. A term
//!
//! ```text
//! (a, j, o, p, ...) -> c
//! ```
//!
//! stands for `c * name1^a * name2^j * name3^o * name4^p * ...`. Slot names
//! are opaque labels here; numeric semantics are supplied by the evaluator's
//! slot registry, which keeps this module purely syntactic.
//!
//! Polynomials are canonical at all times: zero coefficients are never
//! stored, every key has the signature's length, and a slot that disallows
//! negative exponents never holds one. Keys iterate in lexicographic order,
//! so rendering and serialization are deterministic.
//!
//! Values are immutable after construction and every operation is a pure
//! function, so polynomials can be shared across threads freely.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num::bigint::BigInt;
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

/// Exact coefficient type used throughout the crate.
pub type Rational = num::BigRational;

/// Shorthand for building a rational from machine integers.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Errors raised by polynomial construction and arithmetic.
#[derive(Debug, Error)]
pub enum PolyError {
    /// Two operands carry different slot signatures.
    #[error("signature mismatch: ({0}) vs ({1})")]
    SignatureMismatch(String, String),
    /// An operation produced a negative exponent in a slot that forbids one.
    #[error("negative exponent {exponent} in slot '{slot}' which disallows negative exponents")]
    NegativeExponentViolation {
        /// Offending slot name.
        slot: String,
        /// The exponent that was produced.
        exponent: i32,
    },
    /// A slot name was not found in the signature.
    #[error("unknown slot '{0}'")]
    UnknownSlot(String),
    /// A signature declared the same slot name twice.
    #[error("duplicate slot name '{0}' in signature")]
    DuplicateSlot(String),
    /// A key's length does not match the signature's length.
    #[error("key length {got} does not match signature length {expected}")]
    KeyLength {
        /// Length of the offending key.
        got: usize,
        /// Expected signature length.
        expected: usize,
    },
    /// Byte input was not valid JSON.
    #[error("malformed polynomial JSON: {0}")]
    Parse(String),
    /// JSON was well-formed but violates the polynomial schema.
    #[error("polynomial JSON violates schema: {0}")]
    Schema(String),
}

/// One named exponent position of a signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    /// Symbolic-factor label, e.g. `"e^{-kh}"` or `"sigma_v"`.
    pub name: String,
    /// Whether keys may carry a negative exponent in this position.
    pub allow_negative_exponent: bool,
}

/// Ordered list of named symbolic factors giving meaning to key positions.
///
/// Signatures compare equal iff their name sequences are identical; the
/// negative-exponent policy is a construction-time constraint, not part of
/// the identity.
#[derive(Debug, Clone, Eq)]
pub struct SlotSignature {
    slots: Vec<Slot>,
}

impl PartialEq for SlotSignature {
    fn eq(&self, other: &Self) -> bool {
        self.slots.len() == other.slots.len()
            && self
                .slots
                .iter()
                .zip(&other.slots)
                .all(|(a, b)| a.name == b.name)
    }
}

impl SlotSignature {
    /// Build a signature from `(name, allow_negative_exponent)` pairs.
    pub fn new<I, S>(slots: I) -> Result<Arc<Self>, PolyError>
    where
        I: IntoIterator<Item = (S, bool)>,
        S: Into<String>,
    {
        let slots: Vec<Slot> = slots
            .into_iter()
            .map(|(name, allow)| Slot {
                name: name.into(),
                allow_negative_exponent: allow,
            })
            .collect();
        for (i, s) in slots.iter().enumerate() {
            if slots[..i].iter().any(|t| t.name == s.name) {
                return Err(PolyError::DuplicateSlot(s.name.clone()));
            }
        }
        Ok(Arc::new(SlotSignature { slots }))
    }

    /// Signature where every slot admits negative exponents. Used when
    /// reconstructing polynomials from interchange formats that do not carry
    /// the per-slot policy.
    pub fn permissive<I, S>(names: I) -> Result<Arc<Self>, PolyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(names.into_iter().map(|n| (n, true)))
    }

    /// Number of slots.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    /// True when the signature has no slots (constants only).
    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Position of a slot name.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.name == name)
    }

    /// Slot at position `i`.
    pub fn slot(&self, i: usize) -> &Slot {
        &self.slots[i]
    }

    /// Iterate over slot names in order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|s| s.name.as_str())
    }

    fn describe(&self) -> String {
        self.names().collect::<Vec<_>>().join(", ")
    }

    fn check_key(&self, key: &[i32]) -> Result<(), PolyError> {
        if key.len() != self.slots.len() {
            return Err(PolyError::KeyLength {
                got: key.len(),
                expected: self.slots.len(),
            });
        }
        for (slot, &e) in self.slots.iter().zip(key) {
            if e < 0 && !slot.allow_negative_exponent {
                return Err(PolyError::NegativeExponentViolation {
                    slot: slot.name.clone(),
                    exponent: e,
                });
            }
        }
        Ok(())
    }
}

/// Sparse generalized polynomial: exponent vectors over a [`SlotSignature`],
/// mapped to exact rational coefficients.
#[derive(Debug, Clone)]
pub struct GPoly {
    signature: Arc<SlotSignature>,
    terms: BTreeMap<Vec<i32>, Rational>,
}

impl PartialEq for GPoly {
    fn eq(&self, other: &Self) -> bool {
        self.signature == other.signature && self.terms == other.terms
    }
}

impl Eq for GPoly {}

impl GPoly {
    /// The zero polynomial (no stored terms).
    pub fn zero(signature: Arc<SlotSignature>) -> Self {
        GPoly {
            signature,
            terms: BTreeMap::new(),
        }
    }

    /// The constant-one polynomial.
    pub fn one(signature: Arc<SlotSignature>) -> Self {
        Self::constant(signature, Rational::one())
    }

    /// A constant polynomial.
    pub fn constant(signature: Arc<SlotSignature>, c: Rational) -> Self {
        let mut p = Self::zero(signature);
        if !c.is_zero() {
            p.terms.insert(vec![0; p.signature.len()], c);
        }
        p
    }

    /// A single-term polynomial. The key is validated against the signature.
    pub fn monomial(
        signature: Arc<SlotSignature>,
        key: Vec<i32>,
        coeff: Rational,
    ) -> Result<Self, PolyError> {
        signature.check_key(&key)?;
        let mut p = Self::zero(signature);
        if !coeff.is_zero() {
            p.terms.insert(key, coeff);
        }
        Ok(p)
    }

    /// Build a polynomial from `(key, coefficient)` pairs, merging duplicate
    /// keys and dropping zero coefficients.
    pub fn from_terms<I>(signature: Arc<SlotSignature>, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<i32>, Rational)>,
    {
        let mut p = Self::zero(signature);
        for (key, coeff) in terms {
            p.signature.check_key(&key)?;
            p.add_term(key, coeff);
        }
        Ok(p)
    }

    /// The polynomial's signature.
    pub fn signature(&self) -> &Arc<SlotSignature> {
        &self.signature
    }

    /// Number of stored (nonzero) terms.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// True when no terms are stored.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterate terms in lexicographic key order.
    pub fn terms(&self) -> impl Iterator<Item = (&[i32], &Rational)> {
        self.terms.iter().map(|(k, c)| (k.as_slice(), c))
    }

    /// Coefficient of `key`, if a term with that key is stored.
    pub fn coeff(&self, key: &[i32]) -> Option<&Rational> {
        self.terms.get(key)
    }

    fn add_term(&mut self, key: Vec<i32>, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_same_signature(&self, other: &Self) -> Result<(), PolyError> {
        if self.signature == other.signature {
            Ok(())
        } else {
            Err(PolyError::SignatureMismatch(
                self.signature.describe(),
                other.signature.describe(),
            ))
        }
    }

    /// Termwise sum. Fails on signature mismatch.
    pub fn try_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_signature(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        Ok(out)
    }

    /// Termwise difference. Fails on signature mismatch.
    pub fn try_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_signature(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), -c.clone());
        }
        Ok(out)
    }

    /// Distributive product: exponent vectors add componentwise, coefficients
    /// multiply. Fails on signature mismatch or when a product key puts a
    /// negative exponent into a slot that disallows one.
    pub fn try_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_signature(other)?;
        let mut out = Self::zero(self.signature.clone());
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let key: Vec<i32> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                self.signature.check_key(&key)?;
                out.add_term(key, ca * cb);
            }
        }
        Ok(out)
    }

    /// Multiply every coefficient by `c`. `scalar_mul(p, 0)` is the zero
    /// polynomial.
    pub fn scalar_mul(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.signature.clone());
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    /// Additive inverse.
    pub fn neg(&self) -> Self {
        self.scalar_mul(&-Rational::one())
    }

    /// Integer power by repeated multiplication; `pow_int(p, 0)` is the
    /// constant-one polynomial in `p`'s signature.
    pub fn pow_int(&self, n: u32) -> Result<Self, PolyError> {
        let mut out = Self::one(self.signature.clone());
        for _ in 0..n {
            out = out.try_mul(self)?;
        }
        Ok(out)
    }

    /// Add `delta` to the exponent of `slot` in every key. Equivalent to
    /// multiplying by the formal factor `slot^delta`.
    pub fn shift_exponent(&self, slot: &str, delta: i32) -> Result<Self, PolyError> {
        let idx = self
            .signature
            .index_of(slot)
            .ok_or_else(|| PolyError::UnknownSlot(slot.to_string()))?;
        if delta == 0 {
            return Ok(self.clone());
        }
        let mut out = Self::zero(self.signature.clone());
        for (k, c) in &self.terms {
            let mut key = k.clone();
            key[idx] += delta;
            self.signature.check_key(&key)?;
            out.terms.insert(key, c.clone());
        }
        Ok(out)
    }

    /// Re-express the polynomial over a larger (or permuted) signature.
    ///
    /// Every slot of `self` must map to a distinct slot of `target`; slots
    /// not listed in `mapping` map to the target slot of the same name.
    /// Unmapped target slots receive exponent zero, so evaluation is
    /// preserved.
    pub fn extend_signature(
        &self,
        target: &Arc<SlotSignature>,
        mapping: &[(&str, &str)],
    ) -> Result<Self, PolyError> {
        let mut positions = Vec::with_capacity(self.signature.len());
        for name in self.signature.names() {
            let image = mapping
                .iter()
                .find(|(src, _)| *src == name)
                .map(|(_, dst)| *dst)
                .unwrap_or(name);
            let idx = target
                .index_of(image)
                .ok_or_else(|| PolyError::UnknownSlot(image.to_string()))?;
            if positions.contains(&idx) {
                return Err(PolyError::DuplicateSlot(image.to_string()));
            }
            positions.push(idx);
        }
        let mut out = Self::zero(target.clone());
        for (k, c) in &self.terms {
            let mut key = vec![0i32; target.len()];
            for (src, &dst) in positions.iter().enumerate() {
                key[dst] = k[src];
            }
            target.check_key(&key)?;
            out.add_term(key, c.clone());
        }
        Ok(out)
    }

    /// Serialize to the interchange JSON schema:
    ///
    /// ```text
    /// {"keyfor": ["name1", ...], "terms": [{"key": [..], "num": n, "den": d}, ..]}
    /// ```
    ///
    /// Terms are sorted lexicographically by key and coefficients are exact
    /// integers of arbitrary size, so the output is bit-stable and suitable
    /// for golden files.
    pub fn to_json(&self) -> Vec<u8> {
        let repr = PolyRepr {
            keyfor: self.signature.names().map(String::from).collect(),
            terms: self
                .terms
                .iter()
                .map(|(k, c)| TermRepr {
                    key: k.clone(),
                    num: RawValue::from_string(c.numer().to_string())
                        .expect("integer literal is valid JSON"),
                    den: RawValue::from_string(c.denom().to_string())
                        .expect("integer literal is valid JSON"),
                })
                .collect(),
        };
        serde_json::to_vec(&repr).expect("polynomial serialization cannot fail")
    }

    /// Parse the interchange JSON schema produced by [`GPoly::to_json`].
    ///
    /// The schema does not carry the per-slot negativity policy, so the
    /// reconstructed signature is permissive (every slot admits negative
    /// exponents). Signature equality ignores the policy, so
    /// `from_json(to_json(p)) == p` exactly.
    pub fn from_json(bytes: &[u8]) -> Result<Self, PolyError> {
        let repr: PolyRepr =
            serde_json::from_slice(bytes).map_err(|e| PolyError::Parse(e.to_string()))?;
        let signature =
            SlotSignature::permissive(repr.keyfor).map_err(|e| PolyError::Schema(e.to_string()))?;
        let mut poly = Self::zero(signature);
        for t in repr.terms {
            if t.key.len() != poly.signature.len() {
                return Err(PolyError::Schema(format!(
                    "key length {} does not match keyfor length {}",
                    t.key.len(),
                    poly.signature.len()
                )));
            }
            let num = parse_json_int(&t.num)?;
            let den = parse_json_int(&t.den)?;
            if den.is_zero() {
                return Err(PolyError::Schema("zero denominator".to_string()));
            }
            if poly.terms.contains_key(&t.key) {
                return Err(PolyError::Schema(format!("duplicate key {:?}", t.key)));
            }
            let coeff = Rational::new(num, den);
            if !coeff.is_zero() {
                poly.terms.insert(t.key, coeff);
            }
        }
        Ok(poly)
    }
}

fn parse_json_int(raw: &RawValue) -> Result<BigInt, PolyError> {
    BigInt::from_str(raw.get().trim())
        .map_err(|_| PolyError::Schema(format!("'{}' is not an integer", raw.get())))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyRepr {
    keyfor: Vec<String>,
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRepr {
    key: Vec<i32>,
    num: Box<RawValue>,
    den: Box<RawValue>,
}

/// Canonical text rendering: terms in lexicographic key order joined by
/// `" + "`, each as `coeff * name^e ...` with zero exponents omitted and
/// negative coefficients carrying a leading minus. The zero polynomial
/// renders as `0`.
impl fmt::Display for GPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let rendered: Vec<String> = self
            .terms
            .iter()
            .map(|(key, coeff)| {
                let mut s = coeff.to_string();
                for (slot, &e) in self.signature.slots.iter().zip(key) {
                    match e {
                        0 => {}
                        1 => {
                            s.push_str(" * ");
                            s.push_str(&slot.name);
                        }
                        _ => {
                            s.push_str(" * ");
                            s.push_str(&slot.name);
                            s.push('^');
                            s.push_str(&e.to_string());
                        }
                    }
                }
                s
            })
            .collect();
        write!(f, "{}", rendered.join(" + "))
    }
}

impl std::ops::Add for &GPoly {
    type Output = GPoly;
    /// Panics on signature mismatch; use [`GPoly::try_add`] for a fallible
    /// variant.
    fn add(self, rhs: &GPoly) -> GPoly {
        self.try_add(rhs).unwrap()
    }
}

impl std::ops::Sub for &GPoly {
    type Output = GPoly;
    /// Panics on signature mismatch; use [`GPoly::try_sub`].
    fn sub(self, rhs: &GPoly) -> GPoly {
        self.try_sub(rhs).unwrap()
    }
}

impl std::ops::Mul for &GPoly {
    type Output = GPoly;
    /// Panics on signature mismatch or policy violation; use
    /// [`GPoly::try_mul`].
    fn mul(self, rhs: &GPoly) -> GPoly {
        self.try_mul(rhs).unwrap()
    }
}
