//! Patterns, blocks and subshifts of finite type on `Z^d`.
//!
//! Positions are integer vectors compared lexicographically, so iterating a
//! [`Pattern`] visits cells with the last coordinate varying fastest. A
//! forbidden pattern is stored as a cylinder: each cell carries a set of
//! symbols, and the pattern occurs wherever every cell holds a member of its
//! set. Plain patterns are the singleton case.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer lattice position.
pub type Pos = Vec<i32>;

/// Set of symbol ids.
pub type SymSet = FixedBitSet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SftError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("symbol id {0} is outside the alphabet")]
    Alphabet(u32),
    #[error("duplicate symbol name `{0}`")]
    DuplicateName(String),
    #[error("duplicate forbidden pattern `{0}`")]
    DuplicateForbidden(String),
    #[error("support is empty")]
    EmptySupport,
    #[error("map is not total: symbol {0} has no image")]
    PartialMap(u32),
    #[error("pattern is not a cube")]
    NotACube,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub id: u32,
    pub name: String,
}

/// Builds a dense alphabet from names.
pub fn alphabet<S: AsRef<str>>(names: &[S]) -> Vec<Symbol> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| Symbol { id: i as u32, name: n.as_ref().to_string() })
        .collect()
}

/// Anything that assigns symbols to some lattice positions.
pub trait Lattice {
    fn dim(&self) -> usize;
    fn symbol_at(&self, p: &[i32]) -> Option<u32>;
    /// Visits every cell in lexicographic order.
    fn for_each_cell<F: FnMut(&[i32], u32)>(&self, f: F);
}

/// Finite assignment of symbols to lattice positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern {
    dim: usize,
    cells: BTreeMap<Pos, u32>,
}

impl Pattern {
    pub fn new(dim: usize) -> Self {
        Pattern { dim, cells: BTreeMap::new() }
    }

    pub fn from_cells<I: IntoIterator<Item = (Pos, u32)>>(dim: usize, cells: I) -> Result<Self, SftError> {
        let mut p = Pattern::new(dim);
        for (pos, s) in cells {
            p.insert(pos, s)?;
        }
        Ok(p)
    }

    pub fn insert(&mut self, pos: Pos, sym: u32) -> Result<(), SftError> {
        if pos.len() != self.dim {
            return Err(SftError::Dimension { expected: self.dim, got: pos.len() });
        }
        self.cells.insert(pos, sym);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, pos: &[i32]) -> Option<u32> {
        self.cells.get(pos).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pos, u32)> {
        self.cells.iter().map(|(p, s)| (p, *s))
    }

    pub fn support(&self) -> impl Iterator<Item = &Pos> {
        self.cells.keys()
    }

    /// Lexicographically least and greatest corners of the bounding box.
    pub fn bounds(&self) -> Option<(Pos, Pos)> {
        let mut it = self.cells.keys();
        let first = it.next()?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for p in it {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Some((lo, hi))
    }
}

impl Lattice for Pattern {
    fn dim(&self) -> usize {
        self.dim
    }
    fn symbol_at(&self, p: &[i32]) -> Option<u32> {
        self.cells.get(p).copied()
    }
    fn for_each_cell<F: FnMut(&[i32], u32)>(&self, mut f: F) {
        for (p, s) in &self.cells {
            f(p, *s);
        }
    }
}

/// Pattern whose support is an axis-aligned cube `origin + [0, side)^d`,
/// stored densely with the last coordinate fastest.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    dim: usize,
    origin: Pos,
    side: usize,
    data: Vec<u32>,
}

impl Block {
    pub fn filled(dim: usize, side: usize, sym: u32) -> Self {
        Block { dim, origin: vec![0; dim], side, data: vec![sym; side.pow(dim as u32)] }
    }

    pub fn from_vec(dim: usize, side: usize, data: Vec<u32>) -> Self {
        assert_eq!(data.len(), side.pow(dim as u32), "block data length");
        Block { dim, origin: vec![0; dim], side, data }
    }

    pub fn from_pattern(p: &Pattern) -> Result<Self, SftError> {
        let (lo, hi) = p.bounds().ok_or(SftError::EmptySupport)?;
        let side = (hi[0] - lo[0] + 1) as usize;
        if (0..p.dim).any(|k| (hi[k] - lo[k] + 1) as usize != side) || p.len() != side.pow(p.dim as u32) {
            return Err(SftError::NotACube);
        }
        let data = p.cells.values().copied().collect();
        Ok(Block { dim: p.dim, origin: lo, side, data })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn origin(&self) -> &[i32] {
        &self.origin
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn with_origin(mut self, origin: Pos) -> Self {
        assert_eq!(origin.len(), self.dim);
        self.origin = origin;
        self
    }

    fn offset(&self, rel: &[i32]) -> Option<usize> {
        let mut idx = 0usize;
        for &c in rel {
            if c < 0 || c as usize >= self.side {
                return None;
            }
            idx = idx * self.side + c as usize;
        }
        Some(idx)
    }

    /// Symbol at coordinates relative to the origin.
    pub fn at(&self, rel: &[i32]) -> Option<u32> {
        self.offset(rel).map(|i| self.data[i])
    }

    pub fn set(&mut self, rel: &[i32], sym: u32) {
        let i = self.offset(rel).expect("position inside block");
        self.data[i] = sym;
    }

    /// 2D convenience accessor, `x` is the first coordinate.
    pub fn at2(&self, x: i32, y: i32) -> Option<u32> {
        self.at(&[x, y])
    }

    /// Relative coordinates of the cell stored at `index`.
    pub fn coords(&self, mut index: usize) -> Pos {
        let mut c = vec![0; self.dim];
        for k in (0..self.dim).rev() {
            c[k] = (index % self.side) as i32;
            index /= self.side;
        }
        c
    }

    /// Sub-cube at relative `at` of side `side`, re-rooted at the origin.
    pub fn sub_block(&self, at: &[i32], side: usize) -> Option<Block> {
        if at.iter().any(|&c| c < 0 || c as usize + side > self.side) {
            return None;
        }
        let n = side.pow(self.dim as u32);
        let mut data = Vec::with_capacity(n);
        let mut rel = vec![0i32; self.dim];
        for i in 0..n {
            let mut r = i;
            for k in (0..self.dim).rev() {
                rel[k] = at[k] + (r % side) as i32;
                r /= side;
            }
            data.push(self.at(&rel).unwrap());
        }
        Some(Block { dim: self.dim, origin: vec![0; self.dim], side, data })
    }

    pub fn to_pattern(&self) -> Pattern {
        let mut cells = BTreeMap::new();
        for (i, &s) in self.data.iter().enumerate() {
            let mut c = self.coords(i);
            for k in 0..self.dim {
                c[k] += self.origin[k];
            }
            cells.insert(c, s);
        }
        Pattern { dim: self.dim, cells }
    }
}

impl Lattice for Block {
    fn dim(&self) -> usize {
        self.dim
    }
    fn symbol_at(&self, p: &[i32]) -> Option<u32> {
        let mut idx = 0usize;
        for k in 0..self.dim {
            let c = p[k] - self.origin[k];
            if c < 0 || c as usize >= self.side {
                return None;
            }
            idx = idx * self.side + c as usize;
        }
        Some(self.data[idx])
    }
    fn for_each_cell<F: FnMut(&[i32], u32)>(&self, mut f: F) {
        for (i, &s) in self.data.iter().enumerate() {
            let mut c = self.coords(i);
            for k in 0..self.dim {
                c[k] += self.origin[k];
            }
            f(&c, s);
        }
    }
}

pub fn translate_pattern(p: &Pattern, v: &[i32]) -> Result<Pattern, SftError> {
    if v.len() != p.dim {
        return Err(SftError::Dimension { expected: p.dim, got: v.len() });
    }
    let cells = p
        .cells
        .iter()
        .map(|(pos, &s)| (pos.iter().zip(v).map(|(a, b)| a + b).collect(), s))
        .collect();
    Ok(Pattern { dim: p.dim, cells })
}

pub fn map_symbols(p: &Pattern, f: &[u32]) -> Result<Pattern, SftError> {
    let mut cells = BTreeMap::new();
    for (pos, &s) in &p.cells {
        let t = *f.get(s as usize).ok_or(SftError::PartialMap(s))?;
        cells.insert(pos.clone(), t);
    }
    Ok(Pattern { dim: p.dim, cells })
}

/// All translations `v` with `p + v` occurring in `lat`, sorted.
pub fn occurrences<L: Lattice>(lat: &L, p: &Pattern) -> Vec<Pos> {
    let Some((anchor, &first)) = p.cells.iter().next() else {
        return Vec::new();
    };
    let mut found = Vec::new();
    let mut probe = vec![0i32; p.dim];
    lat.for_each_cell(|pos, s| {
        if s != first {
            return;
        }
        let v: Pos = pos.iter().zip(anchor).map(|(a, b)| a - b).collect();
        let hit = p.cells.iter().all(|(q, &t)| {
            for k in 0..q.len() {
                probe[k] = q[k] + v[k];
            }
            lat.symbol_at(&probe) == Some(t)
        });
        if hit {
            found.push(v);
        }
    });
    found.sort();
    found
}

/// Forbidden cylinder: occurs at `v` when every `v + offset` holds a symbol
/// of the matching set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Forbidden {
    pub label: String,
    pub cells: Vec<(Pos, SymSet)>,
}

impl Forbidden {
    pub fn new(label: impl Into<String>, cells: Vec<(Pos, SymSet)>) -> Self {
        Forbidden { label: label.into(), cells }
    }

    pub fn from_pattern(label: impl Into<String>, p: &Pattern, alphabet_len: usize) -> Self {
        let cells = p
            .iter()
            .map(|(pos, s)| {
                let mut set = SymSet::with_capacity(alphabet_len);
                set.insert(s as usize);
                (pos.clone(), set)
            })
            .collect();
        Forbidden { label: label.into(), cells }
    }

    /// Largest coordinate spread of the support.
    pub fn diameter(&self) -> i32 {
        let d = self.cells.first().map_or(0, |c| c.0.len());
        (0..d)
            .map(|k| {
                let lo = self.cells.iter().map(|c| c.0[k]).min().unwrap_or(0);
                let hi = self.cells.iter().map(|c| c.0[k]).max().unwrap_or(0);
                hi - lo
            })
            .max()
            .unwrap_or(0)
    }

    /// True when this cylinder is a single explicit pattern.
    pub fn as_pattern(&self) -> Option<Pattern> {
        let d = self.cells.first()?.0.len();
        let mut p = Pattern::new(d);
        for (pos, set) in &self.cells {
            if set.count_ones(..) != 1 {
                return None;
            }
            p.insert(pos.clone(), set.ones().next().unwrap() as u32).ok()?;
        }
        Some(p)
    }
}

/// A single occurrence of a forbidden pattern.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Violation {
    pub at: Pos,
    pub forbidden: usize,
}

#[derive(Clone, Debug)]
pub struct SftSpec {
    dim: usize,
    alphabet: Vec<Symbol>,
    forbidden: Vec<Forbidden>,
    by_anchor: Vec<Vec<usize>>,
}

impl SftSpec {
    pub fn new(dim: usize, alphabet: Vec<Symbol>, forbidden: Vec<Forbidden>) -> Result<Self, SftError> {
        let mut names = std::collections::HashSet::new();
        for (i, s) in alphabet.iter().enumerate() {
            if s.id as usize != i {
                return Err(SftError::Alphabet(s.id));
            }
            if !names.insert(s.name.as_str()) {
                return Err(SftError::DuplicateName(s.name.clone()));
            }
        }
        let n = alphabet.len();
        let mut forbidden: Vec<Forbidden> = forbidden;
        for f in &mut forbidden {
            if f.cells.is_empty() {
                return Err(SftError::EmptySupport);
            }
            for (pos, set) in &mut f.cells {
                if pos.len() != dim {
                    return Err(SftError::Dimension { expected: dim, got: pos.len() });
                }
                if let Some(bad) = set.ones().find(|&s| s >= n) {
                    return Err(SftError::Alphabet(bad as u32));
                }
                set.grow(n);
            }
            f.cells.sort_by(|a, b| a.0.cmp(&b.0));
        }
        for i in 0..forbidden.len() {
            for j in 0..i {
                if forbidden[i].cells == forbidden[j].cells {
                    return Err(SftError::DuplicateForbidden(forbidden[i].label.clone()));
                }
            }
        }
        let mut by_anchor = vec![Vec::new(); n];
        for (i, f) in forbidden.iter().enumerate() {
            for s in f.cells[0].1.ones() {
                by_anchor[s].push(i);
            }
        }
        Ok(SftSpec { dim, alphabet, forbidden, by_anchor })
    }

    /// Full shift on the given alphabet.
    pub fn full_shift(dim: usize, alphabet: Vec<Symbol>) -> Self {
        SftSpec::new(dim, alphabet, Vec::new()).expect("full shift is well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet.len()
    }

    pub fn forbidden(&self) -> &[Forbidden] {
        &self.forbidden
    }

    pub fn names(&self) -> Vec<String> {
        self.alphabet.iter().map(|s| s.name.clone()).collect()
    }

    /// Largest diameter of a forbidden support, at least 1.
    pub fn rank(&self) -> i32 {
        self.forbidden.iter().map(Forbidden::diameter).max().unwrap_or(0).max(1)
    }

    /// Copy of this spec without forbidden pattern `index`.
    pub fn without(&self, index: usize) -> SftSpec {
        let mut f = self.forbidden.clone();
        f.remove(index);
        SftSpec::new(self.dim, self.alphabet.clone(), f).expect("subset of a valid spec")
    }

    pub fn set_of(&self, syms: &[u32]) -> SymSet {
        let mut s = SymSet::with_capacity(self.alphabet.len());
        for &x in syms {
            s.insert(x as usize);
        }
        s
    }

    /// Forbidden patterns that may start at a cell holding `sym`.
    pub(crate) fn anchored(&self, sym: u32) -> &[usize] {
        &self.by_anchor[sym as usize]
    }

    /// Product subshift `X x Z` on the pair alphabet, pair `(a, b)` having id
    /// `a * |B| + b`.
    pub fn product(&self, other: &SftSpec) -> Result<SftSpec, SftError> {
        if self.dim != other.dim {
            return Err(SftError::Dimension { expected: self.dim, got: other.dim });
        }
        let (na, nb) = (self.alphabet.len(), other.alphabet.len());
        let names: Vec<String> = self
            .alphabet
            .iter()
            .flat_map(|a| other.alphabet.iter().map(move |b| format!("{}.{}", a.name, b.name)))
            .collect();
        let lift = |set: &SymSet, left: bool| {
            let mut out = SymSet::with_capacity(na * nb);
            for a in 0..na {
                for b in 0..nb {
                    if (left && set.contains(a)) || (!left && set.contains(b)) {
                        out.insert(a * nb + b);
                    }
                }
            }
            out
        };
        let mut forbidden = Vec::new();
        for f in &self.forbidden {
            let cells = f.cells.iter().map(|(p, s)| (p.clone(), lift(s, true))).collect();
            forbidden.push(Forbidden::new(format!("L:{}", f.label), cells));
        }
        for f in &other.forbidden {
            let cells = f.cells.iter().map(|(p, s)| (p.clone(), lift(s, false))).collect();
            forbidden.push(Forbidden::new(format!("R:{}", f.label), cells));
        }
        SftSpec::new(self.dim, alphabet(&names), forbidden)
    }
}

/// Every occurrence of every forbidden pattern in `lat`, sorted by position.
pub fn check_locally_admissible<L: Lattice>(lat: &L, sft: &SftSpec) -> Result<Vec<Violation>, SftError> {
    if lat.dim() != sft.dim {
        return Err(SftError::Dimension { expected: sft.dim, got: lat.dim() });
    }
    let n = sft.alphabet.len() as u32;
    let mut bad = None;
    let mut out = Vec::new();
    let mut probe = vec![0i32; sft.dim];
    lat.for_each_cell(|pos, s| {
        if s >= n {
            bad.get_or_insert(s);
            return;
        }
        for &fi in sft.anchored(s) {
            let f = &sft.forbidden[fi];
            let anchor = &f.cells[0].0;
            let hit = f.cells[1..].iter().all(|(off, set)| {
                for k in 0..pos.len() {
                    probe[k] = pos[k] + off[k] - anchor[k];
                }
                matches!(lat.symbol_at(&probe), Some(t) if set.contains(t as usize))
            });
            if hit {
                let at = pos.iter().zip(anchor).map(|(a, b)| a - b).collect();
                out.push(Violation { at, forbidden: fi });
            }
        }
    });
    if let Some(s) = bad {
        return Err(SftError::Alphabet(s));
    }
    out.sort();
    Ok(out)
}

/// One-dimensional golden-mean shift: no two adjacent `1`s.
pub fn golden_mean() -> SftSpec {
    let f = Pattern::from_cells(1, [(vec![0], 1), (vec![1], 1)]).unwrap();
    SftSpec::new(1, alphabet(&["0", "1"]), vec![Forbidden::from_pattern("11", &f, 2)]).unwrap()
}

/// Two-dimensional hard-square shift: no two orthogonally adjacent `1`s.
pub fn hard_square() -> SftSpec {
    let h = Pattern::from_cells(2, [(vec![0, 0], 1), (vec![1, 0], 1)]).unwrap();
    let v = Pattern::from_cells(2, [(vec![0, 0], 1), (vec![0, 1], 1)]).unwrap();
    SftSpec::new(
        2,
        alphabet(&["0", "1"]),
        vec![Forbidden::from_pattern("h11", &h, 2), Forbidden::from_pattern("v11", &v, 2)],
    )
    .unwrap()
}
