//! Exact combinatorial helpers: binomial coefficients, multinomial
//! coefficients and double factorials over big integers.
//!
//! Inputs are unsigned, so the usual negative-argument domain errors are
//! unrepresentable by construction.

use num::bigint::BigInt;
use num::One;

/// Binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn choose(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Multinomial coefficient `(sum counts)! / prod(counts[i]!)`.
pub fn multinomial(counts: &[u32]) -> BigInt {
    let mut acc = BigInt::one();
    let mut total = 0u32;
    for &c in counts {
        total += c;
        acc *= choose(total, c);
    }
    acc
}

/// Double factorial `n!! = n (n-2) (n-4) ...`, with `0!! = 1`.
pub fn double_factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    let mut i = n;
    while i > 1 {
        acc *= BigInt::from(i);
        i -= 2;
    }
    acc
}

/// All ordered splits of `total` into `parts` nonnegative integers.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}
