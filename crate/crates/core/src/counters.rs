//! Fermat-number adding machines, product rotations, Π₁ sequences and the
//! choice of construction parameters.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CounterError {
    #[error("simulation needs {needed} steps, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("alphabet exponent {0} too large to simulate")]
    AlphabetTooLarge(u32),
    #[error("moduli and steps differ in length")]
    Arity,
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("target {0} outside (0, 2]")]
    TargetRange(String),
    #[error("depth must be at least 1")]
    ZeroDepth,
}

/// Counter alphabet of size `2^(2^l)` with successor `c -> c + 1 mod size`
/// and `c_max = size - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CounterAlphabet {
    pub l: u32,
}

impl CounterAlphabet {
    pub fn new(l: u32) -> Result<Self, CounterError> {
        if l > 5 {
            return Err(CounterError::AlphabetTooLarge(l));
        }
        Ok(CounterAlphabet { l })
    }

    pub fn size(self) -> u64 {
        1u64 << (1u32 << self.l)
    }

    pub fn successor(self, c: u64) -> u64 {
        if c + 1 == self.size() {
            0
        } else {
            c + 1
        }
    }

    pub fn c_max(self) -> u64 {
        self.size() - 1
    }
}

/// Base-2 logarithm of the linear-counter alphabet
/// `A x Q^3 x D x {<-,->} x {on,off}^2` with `|A| = |Q| = 2^(2^l)` and
/// `|D| = 2^d_exp`.
pub fn counter_alphabet_log2(l: u32, d_exp: i64) -> i64 {
    4 * (1i64 << l) + d_exp + 1 + 2
}

/// Exponent of `|D|` making the counter alphabet exactly `2^(8 2^l)`.
pub fn normalized_d_exp(l: u32) -> i64 {
    4 * (1i64 << l) - 3
}

/// Word of counter symbols, least significant first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FermatCounter {
    pub size: u64,
    pub word: Vec<u64>,
    pub frozen: bool,
}

impl FermatCounter {
    pub fn zero(size: u64, width: usize) -> Self {
        FermatCounter { size, word: vec![0; width], frozen: false }
    }

    fn is_max(&self) -> bool {
        self.word.iter().all(|&c| c + 1 == self.size)
    }

    /// One adding-machine step, suspended once when the word is maximal.
    pub fn increment(&self) -> FermatCounter {
        let mut next = self.clone();
        if self.is_max() && !self.frozen {
            next.frozen = true;
            return next;
        }
        next.frozen = false;
        for c in next.word.iter_mut() {
            if *c + 1 == self.size {
                *c = 0;
            } else {
                *c += 1;
                break;
            }
        }
        next
    }
}

impl fmt::Display for FermatCounter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits: Vec<String> = self.word.iter().rev().map(|c| c.to_string()).collect();
        write!(f, "[{}]{}", digits.join(","), if self.frozen { "*" } else { "" })
    }
}

pub fn analytic_period(size: u64, width: u32) -> BigUint {
    BigUint::from(size).pow(width) + 1u32
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeriodRun {
    pub period: u64,
    pub freezes: u64,
}

/// Cycle length of the counter started at the all-zero word.
pub fn measured_period(size: u64, width: u32, budget: u64) -> Result<PeriodRun, CounterError> {
    let want = analytic_period(size, width);
    if want > BigUint::from(budget) {
        return Err(CounterError::BudgetExceeded { needed: want.to_string(), budget });
    }
    let start = FermatCounter::zero(size, width as usize);
    let mut c = start.increment();
    let mut period = 1u64;
    let mut freezes = c.frozen as u64;
    while c != start {
        c = c.increment();
        period += 1;
        freezes += c.frozen as u64;
        if period > budget {
            return Err(CounterError::BudgetExceeded { needed: format!(">{budget}"), budget });
        }
    }
    Ok(PeriodRun { period, freezes })
}

/// `F_n = 2^(2^n) + 1`.
pub fn fermat(n: u32) -> BigUint {
    (BigUint::one() << (1usize << n)) + 1u32
}

pub fn pairwise_coprime(xs: &[BigUint]) -> bool {
    xs.iter().enumerate().all(|(i, a)| xs[i + 1..].iter().all(|b| a.gcd(b).is_one()))
}

/// Period of the linear counter in an order `qp` cell row: the alphabet
/// `2^(8 2^l)` raised to the `2^(mq)` active columns, plus the frozen step.
pub fn construction_period(l: u32, m: u32, q: u32) -> BigUint {
    let base = BigUint::one() << (8usize << l);
    base.pow(1u32 << (m * q)) + 1u32
}

/// `x -> x + steps` on a product of cyclic groups.
#[derive(Clone, Debug, Serialize)]
pub struct ProductRotation {
    pub moduli: Vec<u64>,
    pub steps: Vec<u64>,
}

impl ProductRotation {
    pub fn new(moduli: Vec<u64>, steps: Vec<u64>) -> Result<Self, CounterError> {
        if moduli.len() != steps.len() {
            return Err(CounterError::Arity);
        }
        if moduli.contains(&0) {
            return Err(CounterError::ZeroModulus);
        }
        let steps = steps.iter().zip(&moduli).map(|(s, m)| s % m).collect();
        Ok(ProductRotation { moduli, steps })
    }

    /// The rotation of the minimality argument on `k = moduli.len()`
    /// counters: coordinate `j` advances by `4^((2^k - 2^j) p)`.
    pub fn hierarchical(moduli: Vec<u64>, p: u32) -> Result<Self, CounterError> {
        let k = moduli.len() as u32;
        let steps = moduli
            .iter()
            .enumerate()
            .map(|(j, &m)| {
                let e = ((1u64 << k) - (1u64 << (j as u32 + 1))) * p as u64;
                BigUint::from(4u32).modpow(&BigUint::from(e), &BigUint::from(m)).to_u64().unwrap()
            })
            .collect();
        ProductRotation::new(moduli, steps)
    }

    pub fn apply(&self, x: &mut [u64]) {
        for ((c, s), m) in x.iter_mut().zip(&self.steps).zip(&self.moduli) {
            *c = (*c + s) % m;
        }
    }

    pub fn size(&self) -> BigUint {
        self.moduli.iter().map(|&m| BigUint::from(m)).product()
    }
}

/// Orbit length of `start`, and whether the orbit is the whole product.
pub fn orbit_is_full(r: &ProductRotation, start: &[u64], budget: u64) -> Result<(bool, u64), CounterError> {
    if start.len() != r.moduli.len() {
        return Err(CounterError::Arity);
    }
    let size = r.size();
    if size > BigUint::from(budget) {
        return Err(CounterError::BudgetExceeded { needed: size.to_string(), budget });
    }
    let start: Vec<u64> = start.iter().zip(&r.moduli).map(|(s, m)| s % m).collect();
    let mut x = start.clone();
    let mut len = 0u64;
    loop {
        r.apply(&mut x);
        len += 1;
        if x == start {
            break;
        }
    }
    Ok((BigUint::from(len) == size, len))
}

type Program = Arc<dyn Fn(u64, u64) -> Option<u8> + Send + Sync>;

/// Source of a Π₁ sequence `a_n = inf_i eps(n, i)`.
#[derive(Clone)]
pub enum Pi1Sequence {
    /// `eps[n][i]`; rows are padded with their last entry.
    Table(Vec<Vec<u8>>),
    /// `eps(n, i)`, `None` when the program ran out of steps.
    Program(Program),
}

impl Pi1Sequence {
    pub fn program<F: Fn(u64, u64) -> Option<u8> + Send + Sync + 'static>(f: F) -> Self {
        Pi1Sequence::Program(Arc::new(f))
    }

    /// The constant sequence `a_n = v`.
    pub fn constant(v: u8) -> Self {
        Pi1Sequence::program(move |_, _| Some(v))
    }

    /// `a_n = values[n mod len]`, each zero witnessed at `i = n mod 7`.
    pub fn periodic(values: Vec<u8>) -> Self {
        Pi1Sequence::program(move |n, i| {
            let v = values[(n % values.len() as u64) as usize];
            Some(if v == 0 && i >= n % 7 { 0 } else { 1 })
        })
    }

    fn eps(&self, n: u64, i: u64) -> Option<u8> {
        match self {
            Pi1Sequence::Table(rows) => {
                let row = rows.get(n as usize)?;
                row.get(i as usize).or(row.last()).copied()
            }
            Pi1Sequence::Program(f) => f(n, i),
        }
    }
}

impl fmt::Debug for Pi1Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pi1Sequence::Table(t) => f.debug_tuple("Table").field(t).finish(),
            Pi1Sequence::Program(_) => f.write_str("Program(..)"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "value", rename_all = "snake_case")]
pub enum Pi1Value {
    Zero { witness: u64 },
    /// No zero among the first `depth` entries.
    OneSoFar { depth: u64 },
    /// The program gave up at `i`.
    Unknown { at: u64 },
}

impl Pi1Value {
    /// The depth-limited approximation of `a_n`.
    pub fn as_bit(self) -> u8 {
        match self {
            Pi1Value::Zero { .. } => 0,
            _ => 1,
        }
    }
}

pub fn pi1_value(seq: &Pi1Sequence, n: u64, depth: u64) -> Result<Pi1Value, CounterError> {
    if depth == 0 {
        return Err(CounterError::ZeroDepth);
    }
    for i in 0..depth {
        match seq.eps(n, i) {
            Some(0) => return Ok(Pi1Value::Zero { witness: i }),
            Some(_) => {}
            None => return Ok(Pi1Value::Unknown { at: i }),
        }
    }
    Ok(Pi1Value::OneSoFar { depth })
}

/// `(2/n) sum_{j=1..n} a_j`, each `a_j` read at the given depth.
pub fn delta2_approx(seq: &Pi1Sequence, n: u64, depth: u64) -> Result<BigRational, CounterError> {
    if n == 0 {
        return Err(CounterError::ZeroDepth);
    }
    let mut ones = 0u64;
    for j in 1..=n {
        ones += pi1_value(seq, j, depth)?.as_bit() as u64;
    }
    Ok(BigRational::new(BigInt::from(2 * ones), BigInt::from(n)))
}

/// Indices `2^k` below `a.len()` where the construction needs `a = 0` but
/// the prefix has 1.
pub fn construction_violations(a: &[u8]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut q = 1usize;
    while q < a.len() {
        if a[q] != 0 {
            out.push(q);
        }
        q *= 2;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamSelection {
    #[serde(serialize_with = "ser_ratio")]
    pub x: BigRational,
    pub m: u32,
    pub p: u64,
    #[serde(serialize_with = "ser_ratio")]
    pub z: BigRational,
    pub z_f64: f64,
    pub residual: f64,
}

pub fn ser_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

pub fn ratio_f64(r: &BigRational) -> f64 {
    // scale to keep precision for huge numerators and denominators
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        return n / d;
    }
    let shift = r.denom().bits().max(r.numer().bits()) as i64 - 900;
    let sn = r.numer() >> shift.max(0) as usize;
    let sd = r.denom() >> shift.max(0) as usize;
    sn.to_f64().unwrap() / sd.to_f64().unwrap()
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Dimension of the construction with Mersenne parameter `p` and density `z`.
pub fn dimension_of(p: u64, z: &BigRational) -> BigRational {
    let p = BigInt::from(p);
    let inv = BigRational::new(BigInt::one(), p.clone());
    let half = BigRational::new(BigInt::one(), p * 2);
    inv + z * (BigRational::one() - half)
}

/// Least `m >= 2` with `1/p < x` and `m/p < z_m / 2` where `p = 2^m - 1`
/// and `z_m = (x - 1/p) / (1 - 1/(2p))`.
pub fn select_params(x: &BigRational) -> Result<ParamSelection, CounterError> {
    if !x.is_positive() || *x > ratio(2, 1) {
        return Err(CounterError::TargetRange(x.to_string()));
    }
    let mut m = 2u32;
    loop {
        let p = (1u64 << m) - 1;
        let inv = ratio(1, p as i64);
        if inv < *x {
            let z = (x - &inv) / (BigRational::one() - ratio(1, 2 * p as i64));
            if ratio(m as i64, p as i64) < &z / ratio(2, 1) {
                let residual = ratio_f64(&(dimension_of(p, &z) - x).abs());
                return Ok(ParamSelection { x: x.clone(), m, p, z_f64: ratio_f64(&z), z, residual });
            }
        }
        m += 1;
    }
}

pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(a.trim().parse().ok()?, d));
    }
    if let Some((a, b)) = s.split_once('.') {
        let neg = a.starts_with('-');
        let whole: BigInt = if a.is_empty() || a == "-" { BigInt::zero() } else { a.parse().ok()? };
        if b.is_empty() || !b.bytes().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let scale = BigInt::from(10).pow(b.len() as u32);
        let frac: BigInt = b.parse().ok()?;
        let frac = if neg { -frac } else { frac };
        return Some(BigRational::new(whole * &scale + frac, scale));
    }
    Some(BigRational::from_integer(s.parse().ok()?))
}
