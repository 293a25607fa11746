//! Abstract simulation of the cell hierarchy: hierarchy-bit colorings,
//! random-bit budgets, active columns and the entropy-dimension bounds.
//!
//! Two tree shapes are simulated. In pure mode every cell has 2 x 2
//! children and a cell with frequency bit 0 passes its color to one child.
//! In construction mode a node stands for a cell of order `qp`; its
//! children are the `16^p` cells of order `(q-1)p` below it, addressed by
//! one base-4 digit per axis and per order. The four cells of the next
//! order inside a cell are the ones whose first digits are 1 or 2 on both
//! axes, so a restart reaches `4 * 16^(p-1)` children.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::census::log2_big;
use crate::counters::{dimension_of, ratio_f64, ser_ratio};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("p = {0} is not of the form 2^m - 1 with m >= 1")]
    NotMersenne(u64),
    #[error("frequency prefix has {have} bits, {need} needed")]
    ShortPrefix { have: usize, need: usize },
    #[error("c_{k} = {c} outside 0..={max}")]
    CountRange { k: u32, c: u64, max: u64 },
    #[error("d_{k}: exponent 2^k-1-c_k-k = {e} is negative")]
    NegativeExponent { k: u32, e: i64 },
    #[error("formula value {0} is not an integer")]
    NotInteger(String),
    #[error("q = {0} is a power of two")]
    PowerOfTwo(u64),
    #[error("q must be at least 1")]
    ZeroQ,
    #[error("n = {n} too small: q'_n = {q}")]
    TooSmall { n: u64, q: i64 },
    #[error("z = {0} outside [0, 2]")]
    DensityRange(String),
    #[error("tree too large for explicit enumeration")]
    TooLarge,
}

/// `m` with `p = 2^m - 1`.
pub fn mersenne_exponent(p: u64) -> Result<u32, HierarchyError> {
    let m = (p + 1).trailing_zeros();
    if p == 0 || (p + 1).count_ones() != 1 {
        return Err(HierarchyError::NotMersenne(p));
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pure,
    Construction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HColor {
    Purple,
    Gray,
}

/// Frequency and grouping bits indexed by level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BitAssignments {
    pub f: Vec<u8>,
    pub g: Vec<u8>,
}

impl BitAssignments {
    /// `f = a`, no grouping.
    pub fn pure(a: &[u8]) -> Self {
        BitAssignments { f: a.to_vec(), g: vec![0; a.len()] }
    }

    /// `f = a`, grouping bit 1 exactly at the powers of two.
    pub fn construction(a: &[u8]) -> Self {
        let g = (0..a.len()).map(|q| (q > 0 && q.is_power_of_two()) as u8).collect();
        BitAssignments { f: a.to_vec(), g }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CellTree {
    pub p: u32,
    /// Levels below the root: single orders in pure mode, blocks of `p`
    /// orders in construction mode.
    pub depth: u32,
    pub mode: Mode,
}

impl CellTree {
    pub fn fan_out(&self) -> BigUint {
        match self.mode {
            Mode::Pure => BigUint::from(4u32),
            Mode::Construction => BigUint::from(16u32).pow(self.p),
        }
    }

    /// Children of a restart: the cells of the next order inside.
    pub fn restart(&self) -> BigUint {
        match self.mode {
            Mode::Pure => BigUint::one(),
            Mode::Construction => BigUint::from(4u32) * BigUint::from(16u32).pow(self.p - 1),
        }
    }

    /// Children keeping a purple color through a frequency bit 0.
    pub fn selected(&self) -> BigUint {
        match self.mode {
            Mode::Pure => BigUint::one(),
            Mode::Construction => BigUint::from(4u32),
        }
    }
}

/// Node counts by color, from the root level down to the leaves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HierarchyColoring {
    pub levels: Vec<LevelCount>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelCount {
    pub level: u32,
    #[serde(serialize_with = "ser_big")]
    pub purple: BigUint,
    #[serde(serialize_with = "ser_big")]
    pub gray: BigUint,
    /// Purple nodes whose ancestors up to the root are all purple.
    #[serde(serialize_with = "ser_big")]
    pub lineage: BigUint,
}

pub fn ser_big<S: serde::Serializer>(b: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&b.to_string())
}

impl HierarchyColoring {
    pub fn leaves(&self) -> &LevelCount {
        self.levels.last().unwrap()
    }
}

fn need(bits: &BitAssignments, n: usize) -> Result<(), HierarchyError> {
    if bits.f.len() < n || bits.g.len() < n {
        return Err(HierarchyError::ShortPrefix { have: bits.f.len().min(bits.g.len()), need: n });
    }
    Ok(())
}

/// Propagates colors level by level, counting nodes.
///
/// Pure mode uses bits `0..depth`, from the root step `depth - 1` down to
/// step 0. Construction mode starts from the root's inner cells and uses
/// the bits of levels `depth - 1` down to `1`.
pub fn assign_hierarchy_bits(
    tree: &CellTree,
    bits: &BitAssignments,
    root: HColor,
) -> Result<HierarchyColoring, HierarchyError> {
    let fan = tree.fan_out();
    let restart = tree.restart();
    let sel = tree.selected();
    let mut levels = Vec::new();
    let (mut purple, mut gray, steps): (BigUint, BigUint, Vec<u32>) = match tree.mode {
        Mode::Pure => {
            need(bits, tree.depth as usize)?;
            let (p, g) = if root == HColor::Purple { (BigUint::one(), BigUint::zero()) } else { (BigUint::zero(), BigUint::one()) };
            (p, g, (0..tree.depth).rev().collect())
        }
        Mode::Construction => {
            need(bits, tree.depth.max(1) as usize)?;
            let (p, g) = if root == HColor::Purple { (restart.clone(), BigUint::zero()) } else { (BigUint::zero(), restart.clone()) };
            (p, g, (1..tree.depth.max(1)).rev().collect())
        }
    };
    let mut lineage = purple.clone();
    let top = match tree.mode {
        Mode::Pure => tree.depth,
        Mode::Construction => tree.depth.max(1) - 1,
    };
    levels.push(LevelCount { level: top, purple: purple.clone(), gray: gray.clone(), lineage: lineage.clone() });
    for q in steps {
        let (f, g) = (bits.f[q as usize], bits.g[q as usize]);
        let (np, ng, nl) = if g == 1 && tree.mode == Mode::Construction {
            let all = &purple + &gray;
            (&all * &restart, &all * (&fan - &restart), &lineage * &restart)
        } else if f == 1 {
            (&purple * &fan, &gray * &fan, &lineage * &fan)
        } else {
            (&purple * &sel, &purple * (&fan - &sel) + &gray * &fan, &lineage * &sel)
        };
        purple = np;
        gray = ng;
        lineage = nl;
        let level = if tree.mode == Mode::Pure { q } else { q - 1 };
        levels.push(LevelCount { level, purple: purple.clone(), gray: gray.clone(), lineage: lineage.clone() });
    }
    Ok(HierarchyColoring { levels })
}

/// Purple leaves times the four blue corners of an order-0 cell.
pub fn purple_corner_count(c: &HierarchyColoring) -> BigUint {
    &c.leaves().purple * 4u32
}

/// Corners of leaves reached from the root through purple nodes only.
pub fn lineage_corner_count(c: &HierarchyColoring) -> BigUint {
    &c.leaves().lineage * 4u32
}

/// Node-by-node enumeration of the same colorings for small trees; returns
/// the purple and gray leaf counts.
pub fn enumerate_coloring(tree: &CellTree, bits: &BitAssignments, root: HColor) -> Result<(u64, u64, u64), HierarchyError> {
    let total = tree.fan_out().pow(tree.depth).to_u64().ok_or(HierarchyError::TooLarge)?;
    if total > 5_000_000 {
        return Err(HierarchyError::TooLarge);
    }
    let p = tree.p as usize;
    // child digits: pure mode one bit per axis, construction mode p base-4 digits per axis
    let children: Vec<(Vec<u8>, Vec<u8>)> = match tree.mode {
        Mode::Pure => vec![(vec![0], vec![0]), (vec![0], vec![1]), (vec![1], vec![0]), (vec![1], vec![1])],
        Mode::Construction => {
            let n = 16usize.pow(tree.p);
            (0..n)
                .map(|mut i| {
                    let mut h = vec![0u8; p];
                    let mut v = vec![0u8; p];
                    for d in 0..p {
                        h[d] = (i % 4) as u8;
                        i /= 4;
                        v[d] = (i % 4) as u8;
                        i /= 4;
                    }
                    (h, v)
                })
                .collect()
        }
    };
    let inner = |h: &[u8], v: &[u8]| (1..=2).contains(&h[0]) && (1..=2).contains(&v[0]);
    let extreme = |w: &[u8]| w.iter().all(|&d| d == 0) || w.iter().all(|&d| d == 3);
    let selected = |h: &[u8], v: &[u8]| match tree.mode {
        Mode::Pure => h[0] == 0 && v[0] == 0,
        Mode::Construction => extreme(h) && extreme(v),
    };
    let unbroken = root == HColor::Purple;
    let mut frontier: Vec<(HColor, bool)> = match tree.mode {
        Mode::Pure => {
            need(bits, tree.depth as usize)?;
            vec![(root, unbroken)]
        }
        Mode::Construction => {
            need(bits, tree.depth.max(1) as usize)?;
            children.iter().filter(|(h, v)| inner(h, v)).map(|_| (root, unbroken)).collect()
        }
    };
    let steps: Vec<u32> = match tree.mode {
        Mode::Pure => (0..tree.depth).rev().collect(),
        Mode::Construction => (1..tree.depth.max(1)).rev().collect(),
    };
    for q in steps {
        let (f, g) = (bits.f[q as usize], bits.g[q as usize]);
        let mut next = Vec::with_capacity(frontier.len() * children.len());
        for &(c, line) in &frontier {
            for (h, v) in &children {
                let color = if g == 1 && tree.mode == Mode::Construction {
                    if inner(h, v) {
                        HColor::Purple
                    } else {
                        HColor::Gray
                    }
                } else if c == HColor::Gray {
                    HColor::Gray
                } else if f == 1 || selected(h, v) {
                    HColor::Purple
                } else {
                    HColor::Gray
                };
                next.push((color, line && color == HColor::Purple));
            }
        }
        frontier = next;
    }
    let purple = frontier.iter().filter(|c| c.0 == HColor::Purple).count() as u64;
    let lineage = frontier.iter().filter(|c| c.1).count() as u64;
    Ok((purple, frontier.len() as u64 - purple, lineage))
}

/// `2 * 2^r * (p+1)^q` with `n = qp + r`.
pub fn active_columns(n: u64, p: u64) -> Result<BigUint, HierarchyError> {
    mersenne_exponent(p)?;
    let (q, r) = (n / p, n % p);
    Ok(BigUint::from(2u32) * (BigUint::one() << r as usize) * BigUint::from(p + 1).pow(q as u32))
}

/// Active functional columns of an order `qp` cell, `2^(mq)`.
pub fn active_functional_columns(q: u64, p: u64) -> Result<BigUint, HierarchyError> {
    let m = mersenne_exponent(p)?;
    Ok(BigUint::one() << (m as u64 * q) as usize)
}

/// The address set `{0^j 1^(p-j)}`, as words with the first letter in the
/// most significant bit.
pub fn delta_set(p: u32) -> Vec<u64> {
    (0..=p).map(|j| (1u64 << (p - j)) - 1).collect()
}

/// Counts active columns on an order-`n` face by scanning every column:
/// the top `r` address bits are free, each lower block of `p` bits must
/// lie in the address set, and every selected order-0 cell has two
/// active columns.
pub fn active_columns_by_scan(n: u32, p: u32) -> Result<u64, HierarchyError> {
    mersenne_exponent(p as u64)?;
    if n > 24 {
        return Err(HierarchyError::TooLarge);
    }
    let delta = delta_set(p);
    let q = n / p;
    let mask = (1u64 << p) - 1;
    let mut count = 0;
    for col in 0..(1u64 << n) {
        if (0..q).all(|b| delta.contains(&((col >> (b * p)) & mask))) {
            count += 2;
        }
    }
    Ok(count)
}

/// Ones among `a_0 .. a_{len-1}`.
fn ones(a: &[u8], len: usize) -> Result<u64, HierarchyError> {
    if a.len() < len {
        return Err(HierarchyError::ShortPrefix { have: a.len(), need: len });
    }
    Ok(a[..len].iter().filter(|&&x| x == 1).count() as u64)
}

fn pow_r(base: u32, e: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(base).pow(e.unsigned_abs() as u32));
    if e >= 0 {
        b
    } else {
        BigRational::one() / b
    }
}

fn to_uint(r: BigRational) -> Result<BigUint, HierarchyError> {
    if !r.is_integer() {
        return Err(HierarchyError::NotInteger(r.to_string()));
    }
    Ok(r.to_integer().to_biguint().expect("non-negative"))
}

/// `d_k = 4 4^k 16^(k(p-1)) 4^(2^k-1-c_k-k) 4 16^(p-1) 16^(p c_k)` as an
/// exact rational; the exponent of the middle factor can be negative.
pub fn d_k_exact(p: u32, k: u32, c_k: u64) -> Result<BigRational, HierarchyError> {
    let max = 1u64 << k;
    if c_k > max {
        return Err(HierarchyError::CountRange { k, c: c_k, max });
    }
    let (p, k, c) = (p as i64, k as i64, c_k as i64);
    let e4 = 1 + k + ((1i64 << k) - 1 - c - k) + 1;
    let e16 = k * (p - 1) + (p - 1) + p * c;
    Ok(pow_r(4, e4) * pow_r(16, e16))
}

/// `d_k` for prefixes the construction allows; a negative middle exponent
/// is reported even when the product is still an integer.
pub fn d_k(p: u32, k: u32, c_k: u64) -> Result<BigUint, HierarchyError> {
    let e = (1i64 << k) - 1 - c_k as i64 - k as i64;
    if e < 0 {
        return Err(HierarchyError::NegativeExponent { k, e });
    }
    to_uint(d_k_exact(p, k, c_k)?)
}

/// Corners of an order `2^k p` cell reached by the purple border color,
/// by tree simulation with the construction bits of `a`.
pub fn d_k_simulated(p: u32, k: u32, a: &[u8]) -> Result<BigUint, HierarchyError> {
    let tree = CellTree { p, depth: 1 << k, mode: Mode::Construction };
    let c = assign_hierarchy_bits(&tree, &BitAssignments::construction(a), HColor::Purple)?;
    Ok(lineage_corner_count(&c))
}

/// `floor(log2 q)`.
fn floor_log2(q: u64) -> u32 {
    63 - q.leading_zeros()
}

pub fn lambda1(p: u32, q: u64, a: &[u8]) -> Result<BigUint, HierarchyError> {
    if q == 0 {
        return Err(HierarchyError::ZeroQ);
    }
    let mut s = BigUint::zero();
    for j in 0..=floor_log2(q) {
        s += d_k(p, j, ones(a, 1 << j)?)?;
    }
    Ok(s)
}

/// The extra term of a purple border:
/// `4 4^(L+1) 16^(L(p-1)) 4^(c0_q - L) 16^(p c1_q)` with `L = floor(log2 q)`.
pub fn border_term(p: u32, q: u64, a: &[u8]) -> Result<BigUint, HierarchyError> {
    let l = floor_log2(q) as i64;
    let c1 = ones(a, q as usize)? as i64;
    let c0 = q as i64 - c1;
    let p = p as i64;
    to_uint(pow_r(4, 1 + l + 1 + c0 - l) * pow_r(16, l * (p - 1) + p * c1))
}

pub fn lambda2(p: u32, q: u64, a: &[u8]) -> Result<BigUint, HierarchyError> {
    Ok(lambda1(p, q, a)? + border_term(p, q, a)?)
}

pub const ALPHA: u32 = 32;

/// Exponent of the polynomial factor in the upper bound.
pub fn lambda_exponent(p: u32) -> u32 {
    4 * (p - 1) + 1
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetReport {
    pub p: u32,
    pub q: u64,
    pub c0: u64,
    pub c1: u64,
    #[serde(serialize_with = "ser_vec_big")]
    pub d: Vec<BigUint>,
    #[serde(serialize_with = "ser_vec_big")]
    pub d_simulated: Vec<BigUint>,
    #[serde(serialize_with = "ser_big")]
    pub lambda1: BigUint,
    #[serde(serialize_with = "ser_big")]
    pub lambda2: BigUint,
    /// `4^c0 16^(p c1)`.
    #[serde(serialize_with = "ser_big")]
    pub lower: BigUint,
    /// `alpha q^lambda 4^c0 16^(p c1)`.
    #[serde(serialize_with = "ser_big")]
    pub upper: BigUint,
    /// `log2(2^lambda1 + 2^lambda2)` with the simulated `d_j`, as a float.
    pub log2_rq: f64,
    /// Lower bound <= log2 r_q <= upper bound, decided exactly.
    pub within_bounds: bool,
    pub l_k: Vec<u64>,
}

fn ser_vec_big<S: serde::Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for b in v {
        seq.serialize_element(&b.to_string())?;
    }
    seq.end()
}

/// Random-bit budget of an order `2qp+2` supertile. In construction mode
/// `q` must not be a power of two and every `d_j` exponent must be
/// non-negative.
pub fn lambda_bounds(p: u32, q: u64, a: &[u8], construction: bool) -> Result<BudgetReport, HierarchyError> {
    mersenne_exponent(p as u64)?;
    if q == 0 {
        return Err(HierarchyError::ZeroQ);
    }
    if construction && q.is_power_of_two() {
        return Err(HierarchyError::PowerOfTwo(q));
    }
    let top = floor_log2(q);
    if a.len() < (1usize << top).max(q as usize) {
        return Err(HierarchyError::ShortPrefix { have: a.len(), need: (1usize << top).max(q as usize) });
    }
    let c1 = ones(a, q as usize)?;
    let c0 = q - c1;
    let mut d = Vec::new();
    let mut d_simulated = Vec::new();
    let mut l_ks = Vec::new();
    for j in 0..=top {
        let cj = ones(a, 1 << j)?;
        d.push(if construction { d_k(p, j, cj)? } else { to_uint(d_k_exact(p, j, cj)?)? });
        d_simulated.push(d_k_simulated(p, j, a)?);
        l_ks.push(l_k(p, j, cj)?);
    }
    let lambda1: BigUint = d.iter().sum();
    let lambda2 = &lambda1 + border_term(p, q, a)?;
    let sim1: BigUint = d_simulated.iter().sum();
    let sim2 = &sim1 + border_term(p, q, a)?;
    let base = BigUint::from(4u32).pow(c0 as u32) * BigUint::from(16u32).pow(p * c1 as u32);
    let upper = BigUint::from(ALPHA) * BigUint::from(q).pow(lambda_exponent(p)) * &base;
    // log2(2^a + 2^b) lies in [max(a, b), max(a, b) + 1]
    let hi = sim1.clone().max(sim2.clone());
    let gap = (&hi - sim1.clone().min(sim2.clone())).to_f64().unwrap_or(f64::INFINITY);
    let log2_rq = log2_float(&hi) + (1.0 + (-gap).exp2()).log2();
    let within_bounds = base <= hi && hi < upper;
    Ok(BudgetReport {
        p,
        q,
        c0,
        c1,
        d,
        d_simulated,
        lambda1,
        lambda2,
        lower: base,
        upper,
        log2_rq,
        within_bounds,
        l_k: l_ks,
    })
}

fn log2_float(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or_else(|| 2f64.powf(log2_big(x)))
}

/// `l_k = 4[(k+1)(p-1)+1] + 2(2^k-1-c_k) + 4p c_k`.
pub fn l_k(p: u32, k: u32, c_k: u64) -> Result<u64, HierarchyError> {
    let max = (1u64 << k) - 1;
    if c_k > max + 1 {
        return Err(HierarchyError::CountRange { k, c: c_k, max: max + 1 });
    }
    let (p, k) = (p as i64, k as i64);
    let v = 4 * ((k + 1) * (p - 1) + 1) + 2 * (max as i64 - c_k as i64) + 4 * p * c_k as i64;
    Ok(v as u64)
}

/// `1/p + z (1 - 1/(2p))`.
pub fn xz_entropy_dimension(p: u64, z: &BigRational) -> Result<BigRational, HierarchyError> {
    mersenne_exponent(p)?;
    let two = BigRational::from_integer(BigInt::from(2));
    if *z < BigRational::zero() || *z > two {
        return Err(HierarchyError::DensityRange(z.to_string()));
    }
    Ok(dimension_of(p, z))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundSequences {
    pub n: u64,
    pub q_n: u64,
    pub q_prime_n: u64,
    pub upper: f64,
    pub lower: f64,
    #[serde(serialize_with = "ser_ratio")]
    pub limit: BigRational,
}

/// The indices `q_n`, `q'_n` and the two estimates of
/// `log2 log2 N_n / log2 n`; `l` fixes the counter alphabet `2^(8 2^l)`.
pub fn bound_sequences(n: u64, p: u32, a: &[u8], l: u32) -> Result<BoundSequences, HierarchyError> {
    mersenne_exponent(p as u64)?;
    let log_n = (n as f64).log2();
    let qp = (log_n / (2.0 * p as f64)).floor() as i64 - 2;
    if n < 2 || qp < 0 {
        return Err(HierarchyError::TooSmall { n, q: qp });
    }
    let q_n = (log_n / (2.0 * p as f64)).ceil() as u64 + 1;
    let q_prime = qp as u64;
    let c1 = ones(a, q_n as usize)?;
    let c0 = q_n - c1;
    let c1p = ones(a, q_prime as usize)?;
    let c0p = q_prime - c1p;
    // log2 of the counter term and of the random-bit term, then log2 of their sum
    let counter = ((p + 1) as f64).log2() + q_n as f64 * ((p + 1) as f64).log2() + (8u64 << l) as f64;
    let counter = counter.exp2();
    let random_log = (ALPHA as f64).log2()
        + lambda_exponent(p) as f64 * (q_n as f64).log2()
        + 2.0 * c0 as f64
        + 4.0 * p as f64 * c1 as f64;
    let total = if random_log > 1000.0 { random_log } else { (counter + random_log.exp2()).log2() };
    let upper = total / log_n;
    let lower = (2.0 * c0p as f64 + 4.0 * p as f64 * c1p as f64) / log_n;
    let z = BigRational::new(BigInt::from(2 * c1), BigInt::from(q_n));
    Ok(BoundSequences { n, q_n, q_prime_n: q_prime, upper, lower, limit: dimension_of(p as u64, &z) })
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    ratio_f64(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn active_column_counts() {
        assert_eq!(active_columns(0, 3).unwrap(), BigUint::from(2u32));
        assert_eq!(active_columns(4, 3).unwrap(), BigUint::from(16u32));
        assert_eq!(active_columns(3, 3).unwrap(), BigUint::from(8u32));
        assert_eq!(active_functional_columns(1, 3).unwrap(), BigUint::from(4u32));
        assert!(active_columns(3, 4).is_err());
        for p in [1u32, 3, 7] {
            for n in 0..=14 {
                assert_eq!(BigUint::from(active_columns_by_scan(n, p).unwrap()), active_columns(n as u64, p as u64).unwrap());
            }
        }
    }

    #[test]
    fn delta_words() {
        assert_eq!(delta_set(3), vec![0b111, 0b011, 0b001, 0b000]);
    }

    #[test]
    fn pure_mode() {
        let tree = CellTree { p: 3, depth: 4, mode: Mode::Pure };
        let c = assign_hierarchy_bits(&tree, &BitAssignments::pure(&[1, 1, 1, 1]), HColor::Purple).unwrap();
        assert_eq!(c.leaves().purple, BigUint::from(256u32));
        let c = assign_hierarchy_bits(&tree, &BitAssignments::pure(&[0; 4]), HColor::Gray).unwrap();
        assert!(c.leaves().purple.is_zero());
        let two = CellTree { p: 3, depth: 2, mode: Mode::Pure };
        let c = assign_hierarchy_bits(&two, &BitAssignments::pure(&[1, 1]), HColor::Purple).unwrap();
        assert_eq!(purple_corner_count(&c), BigUint::from(64u32));
    }

    #[test]
    fn grouping_reaches_under_gray() {
        let tree = CellTree { p: 3, depth: 2, mode: Mode::Construction };
        let bits = BitAssignments::construction(&[0, 0]);
        assert_eq!(bits.g, vec![0, 1]);
        let c = assign_hierarchy_bits(&tree, &bits, HColor::Gray).unwrap();
        assert!(!c.leaves().purple.is_zero());
    }

    #[test]
    fn formula_values() {
        assert_eq!(d_k(3, 0, 0).unwrap(), BigUint::from(4096u32));
        assert_eq!(d_k(3, 1, 0).unwrap(), BigUint::one() << 22);
        assert_eq!(d_k_exact(3, 0, 1).unwrap(), r(1 << 22, 1));
        assert_eq!(d_k(3, 0, 1), Err(HierarchyError::NegativeExponent { k: 0, e: -1 }));
        assert!(d_k(3, 1, 2).is_err());
        assert_eq!(d_k_simulated(3, 0, &[0]).unwrap(), BigUint::from(4096u32));
        assert_eq!(d_k_simulated(3, 1, &[0, 0]).unwrap(), BigUint::one() << 22);
        // two grouping levels: gray cells left by the first regain purple at the second
        let tree = CellTree { p: 3, depth: 4, mode: Mode::Construction };
        let c = assign_hierarchy_bits(&tree, &BitAssignments::construction(&[0, 0, 0, 1]), HColor::Purple).unwrap();
        assert_eq!(lineage_corner_count(&c), d_k(3, 2, 1).unwrap());
        assert!(purple_corner_count(&c) > lineage_corner_count(&c));
    }

    #[test]
    fn enumeration_agrees_with_counts() {
        for (tree, a) in [
            (CellTree { p: 1, depth: 3, mode: Mode::Construction }, vec![0u8, 0, 1]),
            (CellTree { p: 1, depth: 3, mode: Mode::Construction }, vec![0u8, 0, 0]),
            (CellTree { p: 2, depth: 2, mode: Mode::Construction }, vec![0u8, 0]),
            (CellTree { p: 1, depth: 4, mode: Mode::Construction }, vec![0u8, 0, 0, 1]),
            (CellTree { p: 3, depth: 5, mode: Mode::Pure }, vec![1u8, 0, 1, 0, 0]),
        ] {
            for root in [HColor::Purple, HColor::Gray] {
                let bits = if tree.mode == Mode::Pure { BitAssignments::pure(&a) } else { BitAssignments::construction(&a) };
                let c = assign_hierarchy_bits(&tree, &bits, root).unwrap();
                let (pu, gr, li) = enumerate_coloring(&tree, &bits, root).unwrap();
                let l = c.leaves();
                assert_eq!(
                    (BigUint::from(pu), BigUint::from(gr), BigUint::from(li)),
                    (l.purple.clone(), l.gray.clone(), l.lineage.clone())
                );
            }
        }
    }

    #[test]
    fn budget_examples() {
        let rep = lambda_bounds(3, 3, &[0, 0, 0], true).unwrap();
        assert_eq!((rep.c0, rep.c1), (3, 0));
        assert_eq!(rep.lower, BigUint::from(64u32));
        let rep = lambda_bounds(3, 3, &[1, 1, 1], false).unwrap();
        assert_eq!(rep.lower, BigUint::from(16u32).pow(9));
        assert_eq!(lambda1(3, 1, &[0]).unwrap(), d_k(3, 0, 0).unwrap());
        assert!(lambda_bounds(3, 4, &[0; 4], true).is_err());
    }

    #[test]
    fn l_k_values() {
        assert_eq!(l_k(3, 0, 0).unwrap(), 12);
        assert_eq!(l_k(3, 1, 0).unwrap(), 22);
        assert!(l_k(3, 0, 0).unwrap() < l_k(3, 1, 0).unwrap());
        assert!(l_k(3, 1, 0).unwrap() < l_k(3, 2, 0).unwrap());
    }

    #[test]
    fn dimension_formula() {
        assert_eq!(xz_entropy_dimension(3, &r(0, 1)).unwrap(), r(1, 3));
        assert_eq!(xz_entropy_dimension(3, &r(2, 1)).unwrap(), r(2, 1));
        assert!(xz_entropy_dimension(3, &r(3, 1)).is_err());
        assert!(xz_entropy_dimension(4, &r(1, 1)).is_err());
    }

    #[test]
    fn bound_indices() {
        let a = vec![0u8; 64];
        let b = bound_sequences(1 << 30, 3, &a, 1).unwrap();
        assert_eq!(b.q_prime_n, 3);
        assert_eq!(b.q_n, 6);
        assert!(bound_sequences(1 << 11, 3, &a, 1).is_err());
        assert_eq!(bound_sequences(1 << 12, 3, &a, 1).unwrap().q_prime_n, 0);
        let qn = ((12f64) / 6.0).ceil() as u64 + 1;
        assert_eq!(qn, 3);
    }

    fn construction_prefix(bits: &[u8]) -> Vec<u8> {
        bits.iter().enumerate().map(|(i, &b)| if i == 0 || i.is_power_of_two() { 0 } else { b }).collect()
    }

    #[test]
    fn budgets_within_bounds() {
        let mut rng = 0x9e37_79b9u64;
        for q in 2..=64u64 {
            if q.is_power_of_two() {
                continue;
            }
            for _ in 0..4 {
                let bits: Vec<u8> = (0..64)
                    .map(|_| {
                        rng ^= rng << 13;
                        rng ^= rng >> 7;
                        rng ^= rng << 17;
                        (rng & 1) as u8
                    })
                    .collect();
                let a = construction_prefix(&bits);
                let rep = lambda_bounds(3, q, &a, true).unwrap();
                assert!(rep.lambda1 <= rep.lambda2);
                assert_eq!(rep.d, rep.d_simulated);
                assert!(rep.within_bounds, "q = {q}");
            }
        }
    }

    proptest! {
        #[test]
        fn pure_count_is_four_to_the_sum(a in proptest::collection::vec(0u8..2, 1..7)) {
            let tree = CellTree { p: 3, depth: a.len() as u32, mode: Mode::Pure };
            let c = assign_hierarchy_bits(&tree, &BitAssignments::pure(&a), HColor::Purple).unwrap();
            let s: u32 = a.iter().map(|&x| x as u32).sum();
            prop_assert_eq!(c.leaves().purple.clone(), BigUint::from(4u32).pow(s));
        }

        #[test]
        fn grouping_subtrees_have_purple(a in proptest::collection::vec(0u8..2, 2..5), gray in any::<bool>()) {
            let tree = CellTree { p: 1, depth: a.len() as u32, mode: Mode::Construction };
            let root = if gray { HColor::Gray } else { HColor::Purple };
            let c = assign_hierarchy_bits(&tree, &BitAssignments::construction(&a), root).unwrap();
            prop_assert!(!c.leaves().purple.is_zero());
        }

        #[test]
        fn mersenne_power(m in 1u32..6, q in 0u64..8) {
            let p = (1u64 << m) - 1;
            prop_assert_eq!(BigUint::from(p + 1).pow(q as u32), BigUint::one() << (m as u64 * q) as usize);
        }

        #[test]
        fn upper_above_lower(e in 19u32..60, bits in proptest::collection::vec(0u8..2, 64)) {
            let b = bound_sequences(1u64 << e, 3, &bits, 1).unwrap();
            prop_assert!(b.upper >= b.lower);
        }
    }
}
