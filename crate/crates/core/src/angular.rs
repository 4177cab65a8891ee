//! Angular-momentum algebra: Wigner 3j and 6j symbols and Clebsch-Gordan
//! coefficients.
//!
//! All angular momenta are carried as [`HalfInt`], which stores twice the
//! value so that half-integers and selection rules stay exact. The symbols are
//! evaluated with the Racah sum formulas; every factorial ratio is assembled
//! in prime-factorized form before being turned into a float, so the
//! prefactors never overflow and the individual sum terms are exact up to the
//! final rounding.

use std::cell::Cell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::{LazyLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// An integer or half-integer, stored as twice its value. Serializes as the
/// plain number (`1.5`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl Serialize for HalfInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        let twice = 2.0 * v;
        if twice.fract() != 0.0 || twice.abs() > i32::MAX as f64 {
            return Err(serde::de::Error::custom(format!(
                "{v} is not an integer or half-integer"
            )));
        }
        Ok(HalfInt(twice as i32))
    }
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const ONE: HalfInt = HalfInt(2);

    pub const fn from_twice(twice_value: i32) -> Self {
        HalfInt(twice_value)
    }

    pub const fn int(value: i32) -> Self {
        HalfInt(2 * value)
    }

    /// `numerator / 2`, e.g. `HalfInt::half(5)` is 5/2.
    pub const fn half(numerator: i32) -> Self {
        HalfInt(numerator)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// `2j + 1` as an integer.
    pub const fn multiplicity(self) -> i32 {
        self.0 + 1
    }

    /// Projections `-j, -j + 1, ..., j` in ascending order.
    pub fn projections(self) -> impl DoubleEndedIterator<Item = HalfInt> + Clone {
        let j = self.0;
        (0..=j).map(move |k| HalfInt(2 * k - j))
    }

    /// Values `lo, lo + 1, ..., hi` (empty when `lo > hi`).
    pub fn range_inclusive(lo: HalfInt, hi: HalfInt) -> impl Iterator<Item = HalfInt> + Clone {
        (lo.0..=hi.0).step_by(2).map(HalfInt)
    }

    /// Parses `"5/2"`, `"-3/2"`, `"2"` or `"1.5"`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: i32 = num.trim().parse().map_err(|_| bad_halfint(s))?;
            match den.trim() {
                "2" => Ok(HalfInt(num)),
                "1" => Ok(HalfInt(2 * num)),
                _ => Err(bad_halfint(s)),
            }
        } else if let Ok(n) = s.parse::<i32>() {
            Ok(HalfInt(2 * n))
        } else {
            let x: f64 = s.parse().map_err(|_| bad_halfint(s))?;
            let twice = 2.0 * x;
            if (twice - twice.round()).abs() > 1e-9 {
                return Err(bad_halfint(s));
            }
            Ok(HalfInt(twice.round() as i32))
        }
    }
}

fn bad_halfint(s: &str) -> crate::Error {
    crate::Error::Domain(format!("`{s}` is not an integer or half-integer"))
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

/// `(-1)^x` for an integer-valued `x` given as twice its value.
pub(crate) fn parity_sign(twice: i32) -> f64 {
    debug_assert!(twice % 2 == 0, "phase exponent must be an integer");
    if (twice / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.0, b.0, c.0);
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

fn check_pair(j: HalfInt, m: HalfInt) -> Result<()> {
    if j.0 < 0 {
        return domain(format!("negative angular momentum {j}"));
    }
    if (j.0 - m.0) % 2 != 0 {
        return domain(format!("j - m is not an integer for j = {j}, m = {m}"));
    }
    if m.0.abs() > j.0 {
        return domain(format!("|m| > j for j = {j}, m = {m}"));
    }
    Ok(())
}

fn check_magnitude(j: HalfInt) -> Result<()> {
    if j.0 < 0 {
        return domain(format!("negative angular momentum {j}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// prime-factorized factorial products

fn primes_up_to(n: u32) -> Vec<u32> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut p = 2;
    while p * p <= n {
        if sieve[p] {
            for k in (p * p..=n).step_by(p) {
                sieve[k] = false;
            }
        }
        p += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(k, &is_prime)| is_prime.then_some(k as u32))
        .collect()
}

static PRIMES: LazyLock<Vec<u32>> = LazyLock::new(|| primes_up_to(1024));

/// A product of factorials to integer powers, kept as exponents over primes.
/// Exponents are doubled so that square roots stay exact.
struct FactorialProduct {
    twice_exponents: Vec<i64>,
}

impl FactorialProduct {
    fn new() -> Self {
        FactorialProduct {
            twice_exponents: vec![0; PRIMES.len()],
        }
    }

    /// Multiplies by `(n!)^(twice_power / 2)`.
    fn mul_factorial(&mut self, n: i32, twice_power: i64) {
        assert!(n >= 0, "factorial of negative argument");
        assert!(
            (n as u32) <= *PRIMES.last().unwrap(),
            "factorial argument {n} out of range"
        );
        let n = n as u64;
        for (slot, &p) in self.twice_exponents.iter_mut().zip(PRIMES.iter()) {
            let p = p as u64;
            if p > n {
                break;
            }
            // Legendre's formula
            let mut e = 0u64;
            let mut pk = p;
            while pk <= n {
                e += n / pk;
                pk *= p;
            }
            *slot += twice_power * e as i64;
        }
    }

    fn value(&self) -> f64 {
        let mut whole = 1.0f64;
        let mut under_root = 1.0f64;
        for (&e2, &p) in self.twice_exponents.iter().zip(PRIMES.iter()) {
            if e2 == 0 {
                continue;
            }
            let p = p as f64;
            whole *= p.powi((e2.div_euclid(2)) as i32);
            if e2.rem_euclid(2) == 1 {
                under_root *= p;
            }
        }
        whole * under_root.sqrt()
    }
}

// ---------------------------------------------------------------------------
// memo caches

type Key6 = [i32; 6];

static CACHE_3J: LazyLock<RwLock<HashMap<Key6, f64>>> = LazyLock::new(Default::default);
static CACHE_6J: LazyLock<RwLock<HashMap<Key6, f64>>> = LazyLock::new(Default::default);

thread_local! {
    /// Additive offset applied to every nonzero 6j value on this thread.
    /// Zero in normal operation; only the verification suite's mutation check
    /// sets it.
    static SIXJ_PERTURBATION: Cell<f64> = const { Cell::new(0.0) };
}

/// Adds `offset` to every nonzero 6j symbol subsequently evaluated on the
/// calling thread. Exists so that the verification suite can confirm its
/// checks detect a broken 6j.
#[doc(hidden)]
pub fn set_6j_perturbation(offset: f64) {
    SIXJ_PERTURBATION.with(|p| p.set(offset));
}

fn sixj_perturbation() -> f64 {
    SIXJ_PERTURBATION.with(Cell::get)
}

fn cached(cache: &RwLock<HashMap<Key6, f64>>, key: Key6, compute: impl FnOnce() -> f64) -> f64 {
    if let Some(&v) = cache.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return v;
    }
    let v = compute();
    cache.write().unwrap_or_else(|e| e.into_inner()).insert(key, v);
    v
}

pub fn clear_caches() {
    CACHE_3J.write().unwrap_or_else(|e| e.into_inner()).clear();
    CACHE_6J.write().unwrap_or_else(|e| e.into_inner()).clear();
}

// ---------------------------------------------------------------------------
// symbols

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
pub fn wigner_3j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> Result<f64> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(j3, m3)?;
    if m1.0 + m2.0 + m3.0 != 0 || !triangle(j1, j2, j3) {
        return Ok(0.0);
    }
    let key = [j1.0, j2.0, j3.0, m1.0, m2.0, m3.0];
    Ok(cached(&CACHE_3J, key, || racah_3j(key)))
}

fn racah_3j([j1, j2, j3, m1, m2, m3]: Key6) -> f64 {
    // all arguments below are integers: work with halves
    let h = |x: i32| -> i32 {
        debug_assert!(x % 2 == 0);
        x / 2
    };
    let mut prefactor = FactorialProduct::new();
    prefactor.mul_factorial(h(j1 + j2 - j3), 1);
    prefactor.mul_factorial(h(j1 - j2 + j3), 1);
    prefactor.mul_factorial(h(-j1 + j2 + j3), 1);
    prefactor.mul_factorial(h(j1 + j2 + j3) + 1, -1);
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        prefactor.mul_factorial(h(j + m), 1);
        prefactor.mul_factorial(h(j - m), 1);
    }

    let a1 = h(j3 - j2 + m1);
    let a2 = h(j3 - j1 - m2);
    let b1 = h(j1 + j2 - j3);
    let b2 = h(j1 - m1);
    let b3 = h(j2 + m2);
    let k_min = 0.max(-a1).max(-a2);
    let k_max = b1.min(b2).min(b3);

    let mut sum = 0.0;
    for k in k_min..=k_max {
        let mut term = FactorialProduct {
            twice_exponents: prefactor.twice_exponents.clone(),
        };
        for n in [k, a1 + k, a2 + k, b1 - k, b2 - k, b3 - k] {
            term.mul_factorial(n, -2);
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * term.value();
    }
    parity_sign(j1 - j2 - m3) * sum
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`.
pub fn wigner_6j(j1: HalfInt, j2: HalfInt, j3: HalfInt, j4: HalfInt, j5: HalfInt, j6: HalfInt) -> Result<f64> {
    for j in [j1, j2, j3, j4, j5, j6] {
        check_magnitude(j)?;
    }
    if !(triangle(j1, j2, j3) && triangle(j1, j5, j6) && triangle(j4, j2, j6) && triangle(j4, j5, j3)) {
        return Ok(0.0);
    }
    let key = [j1.0, j2.0, j3.0, j4.0, j5.0, j6.0];
    let v = cached(&CACHE_6J, key, || racah_6j(key));
    let offset = sixj_perturbation();
    if offset != 0.0 && v != 0.0 {
        Ok(v + offset)
    } else {
        Ok(v)
    }
}

fn racah_6j([j1, j2, j3, j4, j5, j6]: Key6) -> f64 {
    let h = |x: i32| -> i32 {
        debug_assert!(x % 2 == 0);
        x / 2
    };
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    let mut prefactor = FactorialProduct::new();
    for &(a, b, c) in &triads {
        prefactor.mul_factorial(h(a + b - c), 1);
        prefactor.mul_factorial(h(a - b + c), 1);
        prefactor.mul_factorial(h(-a + b + c), 1);
        prefactor.mul_factorial(h(a + b + c) + 1, -1);
    }
    let sums: Vec<i32> = triads.iter().map(|&(a, b, c)| h(a + b + c)).collect();
    let quads = [h(j1 + j2 + j4 + j5), h(j2 + j3 + j5 + j6), h(j3 + j1 + j6 + j4)];
    let t_min = *sums.iter().max().unwrap();
    let t_max = *quads.iter().min().unwrap();

    let mut total = 0.0;
    for t in t_min..=t_max {
        let mut term = FactorialProduct {
            twice_exponents: prefactor.twice_exponents.clone(),
        };
        term.mul_factorial(t + 1, 2);
        for &s in &sums {
            term.mul_factorial(t - s, -2);
        }
        for &q in &quads {
            term.mul_factorial(q - t, -2);
        }
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * term.value();
    }
    total
}

/// Clebsch-Gordan coefficient `<j1 m1 j2 m2 | J M>`.
pub fn clebsch_gordan(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, j: HalfInt, m: HalfInt) -> Result<f64> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(j, m)?;
    if m1 + m2 != m {
        return Ok(0.0);
    }
    let w = wigner_3j(j1, j2, j, m1, m2, -m)?;
    Ok(parity_sign(j1.0 - j2.0 + m.0) * (j.multiplicity() as f64).sqrt() * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h(n: i32) -> HalfInt {
        HalfInt::half(n)
    }

    #[test]
    fn halfint_parse_and_display() {
        assert_eq!(HalfInt::parse("5/2").unwrap(), h(5));
        assert_eq!(HalfInt::parse("-3/2").unwrap(), h(-3));
        assert_eq!(HalfInt::parse("2").unwrap(), HalfInt::int(2));
        assert_eq!(HalfInt::parse("1.5").unwrap(), h(3));
        assert!(HalfInt::parse("1/3").is_err());
        assert!(HalfInt::parse("0.3").is_err());
        assert_eq!(h(5).to_string(), "5/2");
        assert_eq!(HalfInt::int(-2).to_string(), "-2");
        let ms: Vec<_> = h(3).projections().collect();
        assert_eq!(ms, vec![h(-3), h(-1), h(1), h(3)]);
    }

    #[test]
    fn prime_factorial_value() {
        let mut p = FactorialProduct::new();
        p.mul_factorial(10, 2);
        assert_eq!(p.value(), 3_628_800.0);
        let mut q = FactorialProduct::new();
        q.mul_factorial(5, 1);
        assert_abs_diff_eq!(q.value(), 120f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn three_j_known_values() {
        let one = HalfInt::ONE;
        let zero = HalfInt::ZERO;
        let v = wigner_3j(one, one, zero, zero, zero, zero).unwrap();
        assert_abs_diff_eq!(v, -1.0 / 3f64.sqrt(), epsilon = 1e-14);
        assert_eq!(wigner_3j(one, one, one, one, one, -one).unwrap(), 0.0);
        // (1/2 1/2 1; 1/2 -1/2 0) = 1/sqrt(6)
        let v = wigner_3j(h(1), h(1), one, h(1), h(-1), zero).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 6f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn ninefold_ratio() {
        let a = wigner_3j(h(3), h(3), HalfInt::ONE, h(-3), h(3), HalfInt::ZERO).unwrap();
        let b = wigner_3j(h(3), h(3), HalfInt::ONE, h(-1), h(1), HalfInt::ZERO).unwrap();
        assert_abs_diff_eq!(a * a / (b * b), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn three_j_rejects_malformed() {
        assert!(wigner_3j(h(1), h(1), HalfInt::ONE, HalfInt::ZERO, HalfInt::ZERO, HalfInt::ZERO).is_err());
        assert!(wigner_3j(
            HalfInt::ONE,
            HalfInt::ONE,
            HalfInt::ONE,
            HalfInt::int(2),
            HalfInt::ZERO,
            HalfInt::ZERO
        )
        .is_err());
        assert!(wigner_6j(
            HalfInt::int(-1),
            HalfInt::ONE,
            HalfInt::ONE,
            HalfInt::ONE,
            HalfInt::ONE,
            HalfInt::ONE
        )
        .is_err());
    }

    #[test]
    fn six_j_known_values() {
        let one = HalfInt::ONE;
        assert_eq!(wigner_6j(one, one, HalfInt::int(3), one, one, one).unwrap(), 0.0);
        let v = wigner_6j(h(1), h(1), one, h(1), h(1), one).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 6.0, epsilon = 1e-14);
        let v = wigner_6j(one, one, HalfInt::ZERO, one, one, HalfInt::ZERO).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn clebsch_gordan_known_values() {
        let v = clebsch_gordan(h(5), h(5), h(3), h(3), HalfInt::int(4), HalfInt::int(4)).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        assert_eq!(
            clebsch_gordan(h(1), h(1), h(1), h(1), HalfInt::ONE, HalfInt::ZERO).unwrap(),
            0.0
        );
        let v = clebsch_gordan(h(1), h(1), h(1), h(-1), HalfInt::ZERO, HalfInt::ZERO).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn parity_sign_handles_negatives() {
        assert_eq!(parity_sign(-2), -1.0);
        assert_eq!(parity_sign(-4), 1.0);
        assert_eq!(parity_sign(6), -1.0);
    }
}
