//! Exact pattern counting, entropy-dimension estimates and the
//! low-complexity construction for the upper bound on minimal SFTs.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::sft::{check_locally_admissible, Block, Lattice, Pattern, Pos, SftSpec, SymSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CensusError {
    #[error("search budget of {budget} nodes exhausted; result incomplete")]
    Incomplete { budget: u64 },
    #[error("brute force needs {needed} assignments, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("transfer method supports dimension 1 or 2, got {0}")]
    TransferDimension(usize),
    #[error("transfer slice budget of {0} exceeded")]
    SliceBudget(usize),
    #[error("curve has fewer than two usable points")]
    TooFewPoints,
    #[error("no admissible completion exists")]
    NotCompletable,
    #[error("level {k} exceeds constructed depth {n}")]
    LevelTooDeep { k: u32, n: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Backtracking,
    Bruteforce,
    Transfer,
}

impl Method {
    pub fn short(self) -> &'static str {
        match self {
            Method::Backtracking => "bt",
            Method::Bruteforce => "bf",
            Method::Transfer => "transfer",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CountResult {
    pub n: usize,
    pub count: BigUint,
    pub method: Method,
    pub elapsed: Duration,
}

/// Finite region of `Z^d`: a box `[0, shape_0) x ...`, optionally with
/// periodic wrap-around.
#[derive(Clone, Debug)]
pub struct Region {
    pub shape: Vec<usize>,
    pub torus: bool,
}

impl Region {
    pub fn cube(dim: usize, side: usize) -> Self {
        Region { shape: vec![side; dim], torus: false }
    }

    pub fn torus(shape: Vec<usize>) -> Self {
        Region { shape, torus: true }
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, mut i: usize) -> Pos {
        let mut c = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            c[k] = (i % self.shape[k]) as i32;
            i /= self.shape[k];
        }
        c
    }

    pub fn index(&self, p: &[i32]) -> Option<usize> {
        let mut idx = 0usize;
        for (k, &c) in p.iter().enumerate() {
            let s = self.shape[k] as i32;
            let c = if self.torus {
                c.rem_euclid(s)
            } else if c < 0 || c >= s {
                return None;
            } else {
                c
            };
            idx = idx * self.shape[k] + c as usize;
        }
        Some(idx)
    }
}

#[derive(Clone, Copy, Debug)]
struct Edge {
    other: usize,
    /// For `a` in this variable, the allowed values of `other`.
    table: usize,
}

#[derive(Clone, Debug)]
struct Nogood {
    vars: Vec<usize>,
    sets: Vec<SymSet>,
}

/// Constraint problem for the admissible patterns of an SFT on a region.
#[derive(Clone, Debug)]
pub struct Csp {
    n_syms: usize,
    init: Vec<SymSet>,
    edges: Vec<Vec<Edge>>,
    tables: Vec<Vec<SymSet>>,
    nogoods: Vec<Nogood>,
    var_nogoods: Vec<Vec<usize>>,
}

fn transpose(t: &[SymSet], n: usize) -> Vec<SymSet> {
    let mut out = vec![SymSet::with_capacity(n); n];
    for (a, row) in t.iter().enumerate() {
        for b in row.ones() {
            out[b].insert(a);
        }
    }
    out
}

fn full_set(n: usize) -> SymSet {
    let mut s = SymSet::with_capacity(n);
    s.insert_range(..);
    s
}

impl Csp {
    pub fn new(sft: &SftSpec, region: &Region) -> Csp {
        let n = sft.alphabet_len();
        let nv = region.len();
        let mut init = vec![full_set(n); nv];
        let mut offset_tables: Vec<(Pos, Vec<SymSet>)> = Vec::new();
        let mut wide = Vec::new();
        for f in sft.forbidden() {
            match f.cells.len() {
                1 => {
                    for d in init.iter_mut() {
                        d.difference_with(&f.cells[0].1);
                    }
                }
                2 => {
                    let delta: Pos = f.cells[1].0.iter().zip(&f.cells[0].0).map(|(a, b)| a - b).collect();
                    let idx = match offset_tables.iter().position(|(d, _)| *d == delta) {
                        Some(i) => i,
                        None => {
                            offset_tables.push((delta, vec![full_set(n); n]));
                            offset_tables.len() - 1
                        }
                    };
                    let t = &mut offset_tables[idx].1;
                    for a in f.cells[0].1.ones() {
                        t[a].difference_with(&f.cells[1].1);
                    }
                }
                _ => wide.push(f),
            }
        }
        let mut tables: Vec<Vec<SymSet>> = Vec::new();
        let mut cache: HashMap<Vec<(usize, bool)>, usize> = HashMap::new();
        let mut contrib: BTreeMap<(usize, usize), Vec<(usize, bool)>> = BTreeMap::new();
        let transposed: Vec<Vec<SymSet>> = offset_tables.iter().map(|(_, t)| transpose(t, n)).collect();
        for x in 0..nv {
            let p = region.coords(x);
            for (oi, (delta, t)) in offset_tables.iter().enumerate() {
                let q: Pos = p.iter().zip(delta).map(|(a, b)| a + b).collect();
                let Some(y) = region.index(&q) else { continue };
                if y == x {
                    let keep: Vec<usize> = init[x].ones().filter(|&a| t[a].contains(a)).collect();
                    let mut s = SymSet::with_capacity(n);
                    s.extend(keep);
                    init[x] = s;
                } else {
                    contrib.entry((x, y)).or_default().push((oi, true));
                    contrib.entry((y, x)).or_default().push((oi, false));
                }
            }
        }
        let mut edges = vec![Vec::new(); nv];
        for ((x, y), mut parts) in contrib {
            parts.sort();
            parts.dedup();
            let id = *cache.entry(parts.clone()).or_insert_with(|| {
                let mut t = vec![full_set(n); n];
                for &(oi, fwd) in &parts {
                    let src = if fwd { &offset_tables[oi].1 } else { &transposed[oi] };
                    for a in 0..n {
                        t[a].intersect_with(&src[a]);
                    }
                }
                tables.push(t);
                tables.len() - 1
            });
            edges[x].push(Edge { other: y, table: id });
        }
        let mut nogoods = Vec::new();
        for f in wide {
            let lo: Vec<i32> = (0..region.dim()).map(|k| f.cells.iter().map(|c| c.0[k]).min().unwrap()).collect();
            let hi: Vec<i32> = (0..region.dim()).map(|k| f.cells.iter().map(|c| c.0[k]).max().unwrap()).collect();
            for x in 0..nv {
                let v = region.coords(x);
                if !region.torus && (0..region.dim()).any(|k| v[k] + hi[k] - lo[k] >= region.shape[k] as i32) {
                    continue;
                }
                let mut vars: Vec<usize> = Vec::new();
                let mut sets: Vec<SymSet> = Vec::new();
                let mut ok = true;
                for (off, set) in &f.cells {
                    let q: Pos = (0..region.dim()).map(|k| v[k] + off[k] - lo[k]).collect();
                    let Some(y) = region.index(&q) else {
                        ok = false;
                        break;
                    };
                    if let Some(i) = vars.iter().position(|&w| w == y) {
                        sets[i].intersect_with(set);
                    } else {
                        vars.push(y);
                        sets.push(set.clone());
                    }
                }
                if ok {
                    nogoods.push(Nogood { vars, sets });
                }
            }
        }
        let mut var_nogoods = vec![Vec::new(); nv];
        for (i, g) in nogoods.iter().enumerate() {
            for &v in &g.vars {
                var_nogoods[v].push(i);
            }
        }
        Csp { n_syms: n, init, edges, tables, nogoods, var_nogoods }
    }

    pub fn n_vars(&self) -> usize {
        self.init.len()
    }

    /// Initial domains after full propagation; `None` when inconsistent.
    pub fn initial(&self) -> Option<Vec<SymSet>> {
        let mut d = self.init.clone();
        let all: Vec<usize> = (0..d.len()).collect();
        self.propagate(&mut d, all).then_some(d)
    }

    /// Restricts the domain of `var` and propagates.
    pub fn restrict(&self, d: &mut [SymSet], var: usize, allowed: &SymSet) -> bool {
        let before = d[var].count_ones(..);
        d[var].intersect_with(allowed);
        if d[var].count_ones(..) == before {
            return !d[var].is_clear();
        }
        !d[var].is_clear() && self.propagate(d, vec![var])
    }

    pub fn propagate(&self, d: &mut [SymSet], start: Vec<usize>) -> bool {
        let mut queued = vec![false; d.len()];
        let mut queue = VecDeque::new();
        for v in start {
            if !queued[v] {
                queued[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(y) = queue.pop_front() {
            queued[y] = false;
            if d[y].is_clear() {
                return false;
            }
            for e in &self.edges[y] {
                // the edge stored at y lists x = e.other; revise x against y
                let x = e.other;
                let back = self.edges[x].iter().find(|b| b.other == y).expect("symmetric edges");
                let t = &self.tables[back.table];
                let drop: Vec<usize> = d[x].ones().filter(|&a| t[a].is_disjoint(&d[y])).collect();
                if !drop.is_empty() {
                    for a in drop {
                        d[x].set(a, false);
                    }
                    if d[x].is_clear() {
                        return false;
                    }
                    if !queued[x] {
                        queued[x] = true;
                        queue.push_back(x);
                    }
                }
            }
            for &gi in &self.var_nogoods[y] {
                let g = &self.nogoods[gi];
                let mut open = None;
                let mut n_open = 0;
                let mut dead = false;
                for (i, &v) in g.vars.iter().enumerate() {
                    if d[v].is_disjoint(&g.sets[i]) {
                        dead = true;
                        break;
                    }
                    if !d[v].is_subset(&g.sets[i]) {
                        n_open += 1;
                        open = Some(i);
                    }
                }
                if dead {
                    continue;
                }
                match n_open {
                    0 => return false,
                    1 => {
                        let i = open.unwrap();
                        let v = g.vars[i];
                        d[v].difference_with(&g.sets[i]);
                        if d[v].is_clear() {
                            return false;
                        }
                        if !queued[v] {
                            queued[v] = true;
                            queue.push_back(v);
                        }
                    }
                    _ => {}
                }
            }
        }
        true
    }

    fn has_live_constraint(&self, d: &[SymSet]) -> bool {
        for (x, es) in self.edges.iter().enumerate() {
            if d[x].count_ones(..) < 2 {
                continue;
            }
            for e in es {
                if d[e.other].count_ones(..) < 2 {
                    continue;
                }
                let t = &self.tables[e.table];
                if d[x].ones().any(|a| !d[e.other].is_subset(&t[a])) {
                    return true;
                }
            }
        }
        self.nogoods
            .iter()
            .any(|g| g.vars.iter().enumerate().all(|(i, &v)| !d[v].is_disjoint(&g.sets[i])))
    }

    fn choose_mrv(d: &[SymSet]) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for (i, s) in d.iter().enumerate() {
            let c = s.count_ones(..);
            if c > 1 && best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, i));
                if c == 2 {
                    break;
                }
            }
        }
        best.map(|(_, i)| i)
    }

    fn branch(&self, d: &[SymSet], var: usize, a: usize) -> Option<Vec<SymSet>> {
        let mut nd = d.to_vec();
        let mut s = SymSet::with_capacity(self.n_syms);
        s.insert(a);
        nd[var] = s;
        self.propagate(&mut nd, vec![var]).then_some(nd)
    }

    fn count_rec(&self, d: Vec<SymSet>, nodes: &AtomicU64, budget: u64) -> Result<BigUint, CensusError> {
        if nodes.fetch_add(1, Ordering::Relaxed) >= budget {
            return Err(CensusError::Incomplete { budget });
        }
        let Some(v) = Self::choose_mrv(&d) else {
            return Ok(BigUint::one());
        };
        if !self.has_live_constraint(&d) {
            return Ok(d.iter().map(|s| BigUint::from(s.count_ones(..))).product());
        }
        let mut total = BigUint::zero();
        for a in d[v].ones() {
            if let Some(nd) = self.branch(&d, v, a) {
                total += self.count_rec(nd, nodes, budget)?;
            }
        }
        Ok(total)
    }

    /// Number of complete assignments consistent with `d`.
    pub fn count_from(&self, d: Vec<SymSet>, budget: u64) -> Result<BigUint, CensusError> {
        let nodes = AtomicU64::new(0);
        let Some(v) = Self::choose_mrv(&d) else {
            return Ok(BigUint::one());
        };
        if !self.has_live_constraint(&d) {
            return Ok(d.iter().map(|s| BigUint::from(s.count_ones(..))).product());
        }
        let vals: Vec<usize> = d[v].ones().collect();
        let parts: Result<Vec<BigUint>, CensusError> = vals
            .par_iter()
            .map(|&a| match self.branch(&d, v, a) {
                Some(nd) => self.count_rec(nd, &nodes, budget),
                None => Ok(BigUint::zero()),
            })
            .collect();
        Ok(parts?.into_iter().sum())
    }

    pub fn count(&self, budget: u64) -> Result<BigUint, CensusError> {
        match self.initial() {
            Some(d) => self.count_from(d, budget),
            None => Ok(BigUint::zero()),
        }
    }

    /// Visits solutions in lexicographic order (variables by index, values
    /// ascending). The visitor returns `false` to stop.
    pub fn for_each_solution<F: FnMut(&[u32]) -> bool>(
        &self,
        d: Vec<SymSet>,
        budget: u64,
        f: &mut F,
    ) -> Result<bool, CensusError> {
        let mut nodes = 0u64;
        self.lex_rec(d, 0, &mut nodes, budget, f)
    }

    fn lex_rec<F: FnMut(&[u32]) -> bool>(
        &self,
        d: Vec<SymSet>,
        from: usize,
        nodes: &mut u64,
        budget: u64,
        f: &mut F,
    ) -> Result<bool, CensusError> {
        *nodes += 1;
        if *nodes > budget {
            return Err(CensusError::Incomplete { budget });
        }
        let next = (from..d.len()).find(|&i| d[i].count_ones(..) > 1);
        let Some(v) = next else {
            let sol: Vec<u32> = d.iter().map(|s| s.ones().next().unwrap() as u32).collect();
            return Ok(f(&sol));
        };
        for a in d[v].ones() {
            if let Some(nd) = self.branch(&d, v, a) {
                if !self.lex_rec(nd, v + 1, nodes, budget, f)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn first_solution(&self, d: Vec<SymSet>, budget: u64) -> Result<Option<Vec<u32>>, CensusError> {
        let mut found = None;
        self.for_each_solution(d, budget, &mut |s| {
            found = Some(s.to_vec());
            false
        })?;
        Ok(found)
    }
}

pub const DEFAULT_BUDGET: u64 = 50_000_000;

/// Exact count of locally admissible `n`-blocks.
pub fn count_blocks(sft: &SftSpec, n: usize, method: Method, budget: u64) -> Result<CountResult, CensusError> {
    let start = Instant::now();
    let count = match method {
        Method::Backtracking => {
            if sft.forbidden().is_empty() {
                BigUint::from(sft.alphabet_len()).pow((n.pow(sft.dim() as u32)) as u32)
            } else {
                Csp::new(sft, &Region::cube(sft.dim(), n)).count(budget)?
            }
        }
        Method::Bruteforce => return count_blocks_bruteforce(sft, n, budget),
        Method::Transfer => count_transfer(sft, n, budget as usize)?,
    };
    Ok(CountResult { n, count, method, elapsed: start.elapsed() })
}

/// Exhaustive enumeration, checking every assignment with the generic
/// rule checker.
pub fn count_blocks_bruteforce(sft: &SftSpec, n: usize, budget: u64) -> Result<CountResult, CensusError> {
    let start = Instant::now();
    let k = sft.alphabet_len();
    let cells = n.pow(sft.dim() as u32);
    let needed = BigUint::from(k).pow(cells as u32);
    if needed > BigUint::from(budget) {
        return Err(CensusError::BudgetExceeded { needed: needed.to_string(), budget });
    }
    let mut count = 0u64;
    if k > 0 {
        let mut data = vec![0u32; cells];
        loop {
            let b = Block::from_vec(sft.dim(), n, data.clone());
            if check_locally_admissible(&b, sft).expect("symbols in range").is_empty() {
                count += 1;
            }
            let mut i = cells;
            loop {
                if i == 0 {
                    return Ok(CountResult {
                        n,
                        count: count.into(),
                        method: Method::Bruteforce,
                        elapsed: start.elapsed(),
                    });
                }
                i -= 1;
                data[i] += 1;
                if (data[i] as usize) < k {
                    break;
                }
                data[i] = 0;
            }
        }
    }
    Ok(CountResult { n, count: BigUint::zero(), method: Method::Bruteforce, elapsed: start.elapsed() })
}

/// Vertical extent (along the first axis) of the widest forbidden pattern.
fn height(sft: &SftSpec) -> usize {
    sft.forbidden()
        .iter()
        .map(|f| {
            let lo = f.cells.iter().map(|c| c.0[0]).min().unwrap();
            let hi = f.cells.iter().map(|c| c.0[0]).max().unwrap();
            (hi - lo + 1) as usize
        })
        .max()
        .unwrap_or(1)
}

/// Rows (slices orthogonal to the first axis) are admissible `1 x n`
/// patterns; a block is a stack of rows checked on sliding windows.
struct RowTransfer {
    h: usize,
    rows: Vec<Vec<u32>>,
    row_id: HashMap<Vec<u32>, usize>,
    /// Window problems with `w` rows, for `w = 1..=h`.
    windows: Vec<Csp>,
    width: usize,
}

impl RowTransfer {
    fn new(sft: &SftSpec, n: usize, slice_budget: usize) -> Result<Self, CensusError> {
        let d = sft.dim();
        if d == 0 || d > 2 {
            return Err(CensusError::TransferDimension(d));
        }
        let width = if d == 1 { 1 } else { n };
        let shape = |w: usize| if d == 1 { vec![w] } else { vec![w, n] };
        let h = height(sft).min(n.max(1));
        let windows: Vec<Csp> = (1..=h).map(|w| Csp::new(sft, &Region { shape: shape(w), torus: false })).collect();
        let mut rows = Vec::new();
        if let Some(init) = windows[0].initial() {
            let mut over = false;
            windows[0].for_each_solution(init, DEFAULT_BUDGET, &mut |s| {
                rows.push(s.to_vec());
                over = rows.len() > slice_budget;
                !over
            })?;
            if over {
                return Err(CensusError::SliceBudget(slice_budget));
            }
        }
        let row_id = rows.iter().enumerate().map(|(i, r)| (r.clone(), i)).collect();
        Ok(RowTransfer { h, rows, row_id, windows, width })
    }

    /// Rows that may follow the given last rows.
    fn successors(&self, tail: &[usize]) -> Result<Vec<usize>, CensusError> {
        if tail.is_empty() {
            return Ok((0..self.rows.len()).collect());
        }
        let csp = &self.windows[tail.len()];
        let Some(mut d) = csp.initial() else { return Ok(Vec::new()) };
        let k = csp.n_syms;
        for (r, &row) in tail.iter().enumerate() {
            for (c, &s) in self.rows[row].iter().enumerate() {
                let mut set = SymSet::with_capacity(k);
                set.insert(s as usize);
                if !csp.restrict(&mut d, r * self.width + c, &set) {
                    return Ok(Vec::new());
                }
            }
        }
        let mut out = Vec::new();
        let skip = tail.len() * self.width;
        csp.for_each_solution(d, DEFAULT_BUDGET, &mut |s| {
            out.push(self.row_id[&s[skip..]]);
            true
        })?;
        Ok(out)
    }

    fn tail(&self, rows: &[usize]) -> Vec<usize> {
        let keep = (self.h - 1).min(rows.len());
        rows[rows.len() - keep..].to_vec()
    }
}

fn count_transfer(sft: &SftSpec, n: usize, slice_budget: usize) -> Result<BigUint, CensusError> {
    let t = RowTransfer::new(sft, n, slice_budget)?;
    let mut states: HashMap<Vec<usize>, BigUint> = HashMap::new();
    states.insert(Vec::new(), BigUint::one());
    let mut succ_cache: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for _ in 0..n {
        let mut next: HashMap<Vec<usize>, BigUint> = HashMap::new();
        for (tail, c) in &states {
            if !succ_cache.contains_key(tail) {
                succ_cache.insert(tail.clone(), t.successors(tail)?);
            }
            let succ = succ_cache[tail].clone();
            for r in succ {
                let mut rows = tail.clone();
                rows.push(r);
                *next.entry(t.tail(&rows)).or_insert_with(BigUint::zero) += c;
            }
        }
        states = next;
    }
    Ok(states.values().sum())
}

/// All locally admissible `n`-blocks, in lexicographic order of their data.
pub fn enumerate_blocks(sft: &SftSpec, n: usize, method: Method, budget: u64) -> Result<Vec<Block>, CensusError> {
    let d = sft.dim();
    let mut out = match method {
        Method::Transfer => {
            let t = RowTransfer::new(sft, n, budget as usize)?;
            let mut partial: Vec<Vec<usize>> = vec![Vec::new()];
            let mut succ_cache: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
            for _ in 0..n {
                let mut next = Vec::new();
                for rows in &partial {
                    let tail = t.tail(rows);
                    if !succ_cache.contains_key(&tail) {
                        let next = t.successors(&tail)?;
                        succ_cache.insert(tail.clone(), next);
                    }
                    let succ = &succ_cache[&tail];
                    for &r in succ.iter() {
                        let mut ext = rows.clone();
                        ext.push(r);
                        next.push(ext);
                    }
                }
                partial = next;
                if partial.len() as u64 > budget {
                    return Err(CensusError::Incomplete { budget });
                }
            }
            partial
                .into_iter()
                .map(|rows| Block::from_vec(d, n, rows.iter().flat_map(|&r| t.rows[r].iter().copied()).collect()))
                .collect::<Vec<_>>()
        }
        _ => {
            let csp = Csp::new(sft, &Region::cube(d, n));
            let mut out = Vec::new();
            if let Some(init) = csp.initial() {
                csp.for_each_solution(init, budget, &mut |s| {
                    out.push(Block::from_vec(d, n, s.to_vec()));
                    true
                })?;
            }
            out
        }
    };
    out.sort_by(|a, b| a.data().cmp(b.data()));
    Ok(out)
}

/// True when `b` is the centre of some locally admissible block with a
/// margin of `r` cells on every side.
pub fn extends(sft: &SftSpec, b: &Block, r: usize, budget: u64) -> Result<bool, CensusError> {
    let d = sft.dim();
    let side = b.side() + 2 * r;
    let region = Region::cube(d, side);
    let csp = Csp::new(sft, &region);
    let Some(mut dom) = csp.initial() else { return Ok(false) };
    for (i, &s) in b.data().iter().enumerate() {
        let p: Pos = b.coords(i).iter().map(|c| c + r as i32).collect();
        let mut set = SymSet::with_capacity(sft.alphabet_len());
        set.insert(s as usize);
        if !csp.restrict(&mut dom, region.index(&p).unwrap(), &set) {
            return Ok(false);
        }
    }
    Ok(csp.first_solution(dom, budget)?.is_some())
}

/// Periodic point found by [`periodic_search`].
#[derive(Clone, Debug)]
pub struct PeriodicWitness {
    pub periods: Vec<usize>,
    pub cells: Pattern,
}

/// Searches every torus with periods in `[1, max_period]^d`, returning the
/// witness with the least period vector.
pub fn periodic_search(sft: &SftSpec, max_period: usize, budget: u64) -> Result<Option<PeriodicWitness>, CensusError> {
    let d = sft.dim();
    let mut shapes = vec![Vec::new()];
    for _ in 0..d {
        shapes = shapes
            .into_iter()
            .flat_map(|s: Vec<usize>| {
                (1..=max_period).map(move |p| {
                    let mut t = s.clone();
                    t.push(p);
                    t
                })
            })
            .collect();
    }
    let results: Vec<Result<Option<PeriodicWitness>, CensusError>> = shapes
        .par_iter()
        .map(|shape| {
            let region = Region::torus(shape.clone());
            let csp = Csp::new(sft, &region);
            let Some(init) = csp.initial() else { return Ok(None) };
            let sol = csp.first_solution(init, budget)?;
            Ok(sol.map(|s| {
                let cells = Pattern::from_cells(d, s.iter().enumerate().map(|(i, &v)| (region.coords(i), v)))
                    .expect("dimension matches");
                PeriodicWitness { periods: shape.clone(), cells }
            }))
        })
        .collect();
    let mut best: Option<PeriodicWitness> = None;
    for r in results {
        if let Some(w) = r? {
            if best.as_ref().is_none_or(|b| w.periods < b.periods) {
                best = Some(w);
            }
        }
    }
    Ok(best)
}

/// `log2` of a big integer, exact for powers of two.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().unwrap() as f64).log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap() as f64;
    top.log2() + shift as f64
}

#[derive(Clone, Debug, Default)]
pub struct ComplexityCurve {
    pub points: Vec<(usize, BigUint)>,
}

impl ComplexityCurve {
    /// `log2(log2 N_n) / log2 n`, defined for `n >= 2` and `N_n >= 2`.
    pub fn e(n: usize, count: &BigUint) -> Option<f64> {
        if n < 2 || *count < BigUint::from(2u32) {
            return None;
        }
        Some(log2_big(count).log2() / (n as f64).log2())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,N_n,e_n\n");
        for (n, c) in &self.points {
            let e = Self::e(*n, c).map(|v| format!("{v:.6}")).unwrap_or_default();
            s.push_str(&format!("{n},{c},{e}\n"));
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct EntropyEstimate {
    pub upper: f64,
    pub lower: f64,
    pub sequence: Vec<(usize, f64)>,
    pub skipped: Vec<usize>,
}

/// Tail maximum and minimum of `e_n` over the second half of the usable
/// points.
pub fn entropy_dim_estimate(curve: &ComplexityCurve) -> Result<EntropyEstimate, CensusError> {
    let mut sequence = Vec::new();
    let mut skipped = Vec::new();
    for (n, c) in &curve.points {
        match ComplexityCurve::e(*n, c) {
            Some(e) => sequence.push((*n, e)),
            None => skipped.push(*n),
        }
    }
    if sequence.len() < 2 {
        return Err(CensusError::TooFewPoints);
    }
    let tail = &sequence[sequence.len() / 2..];
    let upper = tail.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let lower = tail.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    Ok(EntropyEstimate { upper, lower, sequence, skipped })
}

/// Annulus and cross supports of the low-complexity construction, with
/// 1-based coordinates.
#[derive(Clone, Debug)]
pub struct AnnulusSpec {
    pub d: usize,
    pub r: i32,
    pub n: u32,
    pub r_n: i32,
    pub outside: Vec<Pos>,
    pub cross: Vec<Pos>,
}

pub fn r_k(r: i32, k: u32) -> i32 {
    (1 << (k + 2)) * r
}

fn box_cells(d: usize, lo: i32, hi: i32) -> Vec<Pos> {
    let mut cells = vec![Vec::new()];
    for _ in 0..d {
        cells = cells
            .into_iter()
            .flat_map(|c: Pos| {
                (lo..=hi).map(move |x| {
                    let mut c = c.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    cells
}

/// `O_n` is the width-`r` shell of `[1, r_n]^d`; `C_n` is the union of the
/// `2r`-wide middle slabs (for `n = 0`, the whole inside).
pub fn annulus_sets(d: usize, r: i32, n: u32) -> AnnulusSpec {
    let rn = r_k(r, n);
    let all = box_cells(d, 1, rn);
    let inside = |p: &Pos| p.iter().all(|&c| c > r && c <= rn - r);
    let outside: Vec<Pos> = all.iter().filter(|p| !inside(p)).cloned().collect();
    let cross: Vec<Pos> = if n == 0 {
        all.iter().filter(|p| inside(p)).cloned().collect()
    } else {
        let mid = r_k(r, n - 1);
        all.iter().filter(|p| p.iter().any(|&c| c > mid - r && c <= mid + r)).cloned().collect()
    };
    AnnulusSpec { d, r, n, r_n: rn, outside, cross }
}

/// Output of [`build_low_complexity`].
#[derive(Clone, Debug)]
pub struct LowComplexity {
    pub block: Block,
    pub r: i32,
    pub n: u32,
}

const COMPLETION_BUDGET: u64 = 10_000_000;

/// Lexicographically least admissible filling of the cube at `origin` of
/// side `side` keeping the cells of `fixed` (relative coordinates).
fn least_completion(sft: &SftSpec, side: usize, fixed: &[(Pos, u32)]) -> Result<Vec<u32>, CensusError> {
    let region = Region::cube(sft.dim(), side);
    let csp = Csp::new(sft, &region);
    let mut d = csp.initial().ok_or(CensusError::NotCompletable)?;
    for (p, s) in fixed {
        let mut set = SymSet::with_capacity(sft.alphabet_len());
        set.insert(*s as usize);
        let v = region.index(p).expect("fixed cell in region");
        if !csp.restrict(&mut d, v, &set) {
            return Err(CensusError::NotCompletable);
        }
    }
    csp.first_solution(d, COMPLETION_BUDGET)?.ok_or(CensusError::NotCompletable)
}

/// Builds a side-`r_n` block whose sub-boxes at every level have their
/// inside determined by their annulus. `annulus` gives the outer shell
/// (relative 0-based block); when absent the shell of the least admissible
/// block is used.
pub fn build_low_complexity(sft: &SftSpec, n: u32, annulus: Option<&Block>) -> Result<LowComplexity, CensusError> {
    let d = sft.dim();
    let r = sft.rank();
    let side = r_k(r, n) as usize;
    let seed = match annulus {
        Some(b) => b.clone(),
        None => Block::from_vec(d, side, least_completion(sft, side, &[])?),
    };
    let mut out = seed.clone();
    fill_level(sft, r, n, &vec![0; d], &mut out)?;
    Ok(LowComplexity { block: out, r, n })
}

fn shell(d: usize, r: i32, side: i32) -> Vec<Pos> {
    box_cells(d, 0, side - 1)
        .into_iter()
        .filter(|p| p.iter().any(|&c| c < r || c >= side - r))
        .collect()
}

fn fill_level(sft: &SftSpec, r: i32, k: u32, origin: &[i32], out: &mut Block) -> Result<(), CensusError> {
    let d = sft.dim();
    let side = r_k(r, k);
    let abs = |p: &Pos| -> Pos { p.iter().zip(origin).map(|(a, b)| a + b).collect() };
    let fixed: Vec<(Pos, u32)> = shell(d, r, side).into_iter().map(|p| (p.clone(), out.at(&abs(&p)).unwrap())).collect();
    let sol = least_completion(sft, side as usize, &fixed)?;
    let region = Region::cube(d, side as usize);
    let spec = annulus_sets(d, r, k);
    for p in &spec.cross {
        let rel: Pos = p.iter().map(|c| c - 1).collect();
        out.set(&abs(&rel), sol[region.index(&rel).unwrap()]);
    }
    if k == 0 {
        return Ok(());
    }
    let half = r_k(r, k - 1);
    for q in 0..(1usize << d) {
        let sub: Pos = (0..d).map(|i| origin[i] + if q >> (d - 1 - i) & 1 == 1 { half } else { 0 }).collect();
        fill_level(sft, r, k - 1, &sub, out)?;
    }
    Ok(())
}

impl LowComplexity {
    /// Sub-boxes built at level `k`, keyed by origin.
    pub fn level_boxes(&self, k: u32) -> Vec<Pos> {
        let d = self.block.dim();
        let step = r_k(self.r, k);
        let count = self.block.side() as i32 / step;
        box_cells(d, 0, count - 1).into_iter().map(|p| p.iter().map(|c| c * step).collect()).collect()
    }

    /// True when equal level-`k` annuli always enclose equal insides.
    pub fn sub_block_determination(&self, k: u32) -> bool {
        let side = r_k(self.r, k) as usize;
        let d = self.block.dim();
        let sh = shell(d, self.r, side as i32);
        let mut seen: HashMap<Vec<u32>, Vec<u32>> = HashMap::new();
        for o in self.level_boxes(k) {
            let sub = self.block.sub_block(&o, side).unwrap();
            let key: Vec<u32> = sh.iter().map(|p| sub.at(p).unwrap()).collect();
            if let Some(prev) = seen.insert(key, sub.data().to_vec()) {
                if prev != sub.data() {
                    return false;
                }
            }
        }
        true
    }

    /// Number of distinct `r_k`-blocks occurring in the block.
    pub fn distinct_blocks(&self, k: u32) -> Result<usize, CensusError> {
        if k > self.n {
            return Err(CensusError::LevelTooDeep { k, n: self.n });
        }
        let side = r_k(self.r, k) as usize;
        let span = self.block.side() - side + 1;
        let d = self.block.dim();
        let mut seen = HashSet::new();
        for o in box_cells(d, 0, span as i32 - 1) {
            seen.insert(self.block.sub_block(&o, side).unwrap().data().to_vec());
        }
        Ok(seen.len())
    }
}

/// Checks `N_{r_k} <= |A|^(2^d * 2d * r * r_k^(d-1))` and the sharper
/// `|A|^(2^d |O_k|)` on the distinct `r_k`-blocks of `lc`.
pub fn obstruction_bound_check(lc: &LowComplexity, alphabet_len: usize, k: u32) -> Result<bool, CensusError> {
    let d = lc.block.dim() as u32;
    let count = BigUint::from(lc.distinct_blocks(k)?);
    let rk = r_k(lc.r, k) as u64;
    let coarse = (1u64 << d) * 2 * d as u64 * lc.r as u64 * rk.pow(d - 1);
    let annulus = annulus_sets(d as usize, lc.r, k).outside.len() as u64;
    let a = BigUint::from(alphabet_len);
    Ok(count <= a.pow(coarse as u32) && count <= a.pow(((1u64 << d) * annulus) as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::{alphabet, golden_mean, hard_square, Forbidden};

    #[test]
    fn golden_mean_counts() {
        let g = golden_mean();
        let fib = [2u32, 3, 5, 8, 13, 21];
        for (i, &f) in fib.iter().enumerate() {
            let n = i + 1;
            assert_eq!(count_blocks(&g, n, Method::Backtracking, DEFAULT_BUDGET).unwrap().count, f.into());
            assert_eq!(count_blocks(&g, n, Method::Transfer, DEFAULT_BUDGET).unwrap().count, f.into());
        }
        assert_eq!(count_blocks_bruteforce(&g, 3, 1 << 20).unwrap().count, 5u32.into());
    }

    #[test]
    fn full_shift_counts() {
        let full = SftSpec::full_shift(2, alphabet(&["a", "b", "c"]));
        assert_eq!(count_blocks(&full, 3, Method::Backtracking, 10).unwrap().count, BigUint::from(3u32).pow(9));
        let one_d = SftSpec::full_shift(1, alphabet(&["a", "b", "c"]));
        assert_eq!(count_blocks_bruteforce(&one_d, 2, 100).unwrap().count, 9u32.into());
    }

    #[test]
    fn empty_sft_counts_zero() {
        let f = Pattern::from_cells(1, [(vec![0], 0)]).unwrap();
        let sft = SftSpec::new(1, alphabet(&["x"]), vec![Forbidden::from_pattern("x", &f, 1)]).unwrap();
        assert_eq!(count_blocks_bruteforce(&sft, 2, 100).unwrap().count, BigUint::zero());
        assert_eq!(count_blocks(&sft, 2, Method::Backtracking, 100).unwrap().count, BigUint::zero());
    }

    #[test]
    fn hard_square_small() {
        // 1, 2, 7, 63 for n = 0..3 (independent sets of the n x n grid)
        let h = hard_square();
        for (n, want) in [(1usize, 2u32), (2, 7), (3, 63)] {
            assert_eq!(count_blocks(&h, n, Method::Backtracking, DEFAULT_BUDGET).unwrap().count, want.into());
            assert_eq!(count_blocks(&h, n, Method::Transfer, DEFAULT_BUDGET).unwrap().count, want.into());
        }
    }

    #[test]
    fn budget_reports_incomplete() {
        let h = hard_square();
        assert!(matches!(count_blocks(&h, 6, Method::Backtracking, 5), Err(CensusError::Incomplete { .. })));
        assert!(matches!(count_blocks_bruteforce(&h, 6, 1000), Err(CensusError::BudgetExceeded { .. })));
    }

    #[test]
    fn enumeration_methods_agree() {
        let h = hard_square();
        let a = enumerate_blocks(&h, 3, Method::Backtracking, DEFAULT_BUDGET).unwrap();
        let b = enumerate_blocks(&h, 3, Method::Transfer, DEFAULT_BUDGET).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 63);
    }

    #[test]
    fn periodic_examples() {
        let one = SftSpec::full_shift(2, alphabet(&["a"]));
        assert_eq!(periodic_search(&one, 1, 100).unwrap().unwrap().periods, vec![1, 1]);
        let w = periodic_search(&golden_mean(), 2, 100).unwrap().unwrap();
        assert_eq!(w.periods, vec![1]);
        assert!(w.cells.iter().all(|(_, s)| s == 0));
    }

    #[test]
    fn annulus_examples() {
        let a = annulus_sets(1, 1, 0);
        assert_eq!(a.outside, vec![vec![1], vec![4]]);
        let b = annulus_sets(2, 1, 0);
        assert_eq!(b.outside.len(), 12);
        for n in 0..3 {
            for d in 1..4 {
                let s = annulus_sets(d, 1, n);
                let bound = 2 * d as i64 * (s.r_n as i64).pow(d as u32 - 1);
                assert!(s.outside.len() as i64 <= bound);
            }
        }
    }

    #[test]
    fn low_complexity_full_shift_is_least_symbol() {
        let full = SftSpec::full_shift(2, alphabet(&["a", "b"]));
        let lc = build_low_complexity(&full, 1, None).unwrap();
        assert!(lc.block.data().iter().all(|&s| s == 0));
    }

    #[test]
    fn log2_is_exact_on_powers() {
        let x = BigUint::one() << 4096u32;
        assert_eq!(log2_big(&x), 4096.0);
        assert_eq!(ComplexityCurve::e(64, &x), Some(2.0));
    }
}
