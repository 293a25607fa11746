//! Robinson tiles with the alignment layer, recursive supertiles, petals,
//! cells and block completion.
//!
//! Orientation conventions: the first coordinate grows to the east, the
//! second to the north. Arrow symbols are generated from a canonical copy
//! whose long arrow points south; `i` is the mark carried by the long line
//! and `j` the mark carried by the side arrows.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::census::{self, CensusError, Method};
use crate::sft::{check_locally_admissible, Block, Forbidden, Lattice, Pos, SftSpec, Symbol, SymSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RobinsonError {
    #[error("block is not in the language: {0}")]
    NotInLanguage(String),
    #[error("block of side {0} is not a supertile")]
    NotASupertile(usize),
    #[error("order {m} must be below the supertile order {n}")]
    OrderTooLarge { m: u32, n: u32 },
    #[error("argument must be at least 1")]
    NonPositive,
    #[error("no tile matches the required edges at {0:?}")]
    NoTile(Pos),
    #[error(transparent)]
    Census(#[from] CensusError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    pub fn vec(self) -> (i32, i32) {
        match self {
            Dir::N => (0, 1),
            Dir::E => (1, 0),
            Dir::S => (0, -1),
            Dir::W => (-1, 0),
        }
    }

    /// Quarter turn counterclockwise.
    pub fn rot(self) -> Dir {
        match self {
            Dir::N => Dir::W,
            Dir::W => Dir::S,
            Dir::S => Dir::E,
            Dir::E => Dir::N,
        }
    }

    pub fn opposite(self) -> Dir {
        self.rot().rot()
    }

    fn idx(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Dir::N => "N",
            Dir::E => "E",
            Dir::S => "S",
            Dir::W => "W",
        }
    }
}

/// Corner orientation; an `Sw` corner sits at the south-west corner of its
/// petal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orient {
    Sw,
    Se,
    Nw,
    Ne,
}

impl Orient {
    pub const ALL: [Orient; 4] = [Orient::Sw, Orient::Se, Orient::Nw, Orient::Ne];

    /// Quarter turn counterclockwise.
    pub fn rot(self) -> Orient {
        match self {
            Orient::Sw => Orient::Se,
            Orient::Se => Orient::Ne,
            Orient::Ne => Orient::Nw,
            Orient::Nw => Orient::Sw,
        }
    }

    pub fn is_north(self) -> bool {
        matches!(self, Orient::Nw | Orient::Ne)
    }

    pub fn is_east(self) -> bool {
        matches!(self, Orient::Se | Orient::Ne)
    }

    pub fn from_parts(north: bool, east: bool) -> Orient {
        match (north, east) {
            (false, false) => Orient::Sw,
            (false, true) => Orient::Se,
            (true, false) => Orient::Nw,
            (true, true) => Orient::Ne,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Orient::Sw => "sw",
            Orient::Se => "se",
            Orient::Nw => "nw",
            Orient::Ne => "ne",
        }
    }

    pub fn parse(s: &str) -> Option<Orient> {
        Orient::ALL.into_iter().find(|o| o.name() == s)
    }

    /// Quadrant offset of this orientation inside the parent supertile.
    fn quadrant(self) -> (i32, i32) {
        (self.is_east() as i32, self.is_north() as i32)
    }
}

impl fmt::Display for Orient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Blue,
    Red,
}

/// Arrow shapes named by their number of arrows. `Right`/`Left` give the
/// side of the second long line, seen facing along the long arrow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ArrowClass {
    Three,
    Five,
    FourRight,
    FourLeft,
    SixRight,
    SixLeft,
}

impl ArrowClass {
    pub const ALL: [ArrowClass; 6] = [
        ArrowClass::Three,
        ArrowClass::Five,
        ArrowClass::FourRight,
        ArrowClass::FourLeft,
        ArrowClass::SixRight,
        ArrowClass::SixLeft,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ArrowClass::Three => "3",
            ArrowClass::Five => "5",
            ArrowClass::FourRight => "4r",
            ArrowClass::FourLeft => "4l",
            ArrowClass::SixRight => "6r",
            ArrowClass::SixLeft => "6l",
        }
    }

    pub fn long_count(self) -> u8 {
        match self {
            ArrowClass::Three | ArrowClass::Five => 1,
            _ => 2,
        }
    }

    pub fn side_count(self) -> u8 {
        match self {
            ArrowClass::Three | ArrowClass::FourRight | ArrowClass::FourLeft => 1,
            _ => 2,
        }
    }

    /// Marks must differ on these shapes.
    pub fn distinct_marks(self) -> bool {
        matches!(self, ArrowClass::Five | ArrowClass::SixRight | ArrowClass::SixLeft)
    }

    pub fn carries_alignment(self) -> bool {
        self.long_count() == 1
    }

    /// Offset of the second long line in the canonical south-pointing copy.
    fn canonical_long_offset(self) -> Option<Dir> {
        match self {
            ArrowClass::FourRight | ArrowClass::SixRight => Some(Dir::W),
            ArrowClass::FourLeft | ArrowClass::SixLeft => Some(Dir::E),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RobSymbol {
    Corner { color: Color, orient: Orient, value: u8 },
    Arrow { class: ArrowClass, dir: Dir, i: u8, j: u8 },
}

impl RobSymbol {
    pub fn is_corner(&self) -> bool {
        matches!(self, RobSymbol::Corner { .. })
    }

    pub fn is_blue(&self) -> bool {
        matches!(self, RobSymbol::Corner { color: Color::Blue, .. })
    }
}

/// Product symbol of the Robinson layer and the alignment layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RobTile {
    pub layer1: RobSymbol,
    pub align: Option<Orient>,
}

impl RobTile {
    pub fn name(&self) -> String {
        let base = match self.layer1 {
            RobSymbol::Corner { color, orient, value } => {
                let c = if color == Color::Blue { "b" } else { "r" };
                format!("c{c}.{orient}.{value}")
            }
            RobSymbol::Arrow { class, dir, i, j } => format!("a{}.{}.{i}{j}", class.label(), dir.name()),
        };
        match self.align {
            Some(o) => format!("{base}.{o}"),
            None => base,
        }
    }
}

/// What crosses one edge of a tile: a single or double line, the side of
/// the second line, whether the arrow leaves the tile, and its mark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EdgeSig {
    pub count: u8,
    pub offset: Option<Dir>,
    pub out: bool,
    pub mark: u8,
}

impl EdgeSig {
    fn rot(self) -> EdgeSig {
        EdgeSig { offset: self.offset.map(Dir::rot), ..self }
    }

    /// Signatures facing each other across an edge match.
    pub fn meets(self, other: EdgeSig) -> bool {
        self.out != other.out && self.count == other.count && self.offset == other.offset && self.mark == other.mark
    }
}

fn rotate_sigs(s: [EdgeSig; 4]) -> [EdgeSig; 4] {
    let mut out = s;
    for d in Dir::ALL {
        out[d.rot().idx()] = s[d.idx()].rot();
    }
    out
}

fn rotations_to(d: Dir, from: Dir) -> usize {
    let mut x = from;
    for k in 0..4 {
        if x == d {
            return k;
        }
        x = x.rot();
    }
    unreachable!()
}

/// Edge signatures indexed by `Dir as usize`.
pub fn edge_sigs(s: &RobSymbol) -> [EdgeSig; 4] {
    let (canon, turns) = match *s {
        RobSymbol::Corner { orient, value, .. } => {
            let mut c = [EdgeSig { count: 1, offset: None, out: true, mark: value }; 4];
            c[Dir::N.idx()] = EdgeSig { count: 2, offset: Some(Dir::W), out: true, mark: value };
            c[Dir::E.idx()] = EdgeSig { count: 2, offset: Some(Dir::S), out: true, mark: value };
            let mut o = Orient::Sw;
            let mut k = 0;
            while o != orient {
                o = o.rot();
                k += 1;
            }
            (c, k)
        }
        RobSymbol::Arrow { class, dir, i, j } => {
            let long = EdgeSig { count: class.long_count(), offset: class.canonical_long_offset(), out: false, mark: i };
            let side = EdgeSig {
                count: class.side_count(),
                offset: (class.side_count() == 2).then_some(Dir::S),
                out: false,
                mark: j,
            };
            let mut c = [side; 4];
            c[Dir::N.idx()] = long;
            c[Dir::S.idx()] = EdgeSig { out: true, ..long };
            (c, rotations_to(dir, Dir::S))
        }
    };
    let mut s = canon;
    for _ in 0..turns {
        s = rotate_sigs(s);
    }
    s
}

/// Corners whose single arms point along `d`.
fn single_arm_sources(d: Dir) -> [Orient; 2] {
    match d {
        Dir::S => [Orient::Sw, Orient::Se],
        Dir::N => [Orient::Nw, Orient::Ne],
        Dir::E => [Orient::Se, Orient::Ne],
        Dir::W => [Orient::Sw, Orient::Nw],
    }
}

fn all_tiles() -> Vec<RobTile> {
    let mut out = Vec::new();
    for orient in Orient::ALL {
        out.push(RobTile { layer1: RobSymbol::Corner { color: Color::Blue, orient, value: 0 }, align: None });
    }
    for orient in Orient::ALL {
        for value in 0..2 {
            out.push(RobTile { layer1: RobSymbol::Corner { color: Color::Red, orient, value }, align: None });
        }
    }
    for class in ArrowClass::ALL {
        for dir in Dir::ALL {
            for i in 0..2u8 {
                for j in 0..2u8 {
                    if class.distinct_marks() && i == j {
                        continue;
                    }
                    let layer1 = RobSymbol::Arrow { class, dir, i, j };
                    if class.carries_alignment() {
                        for o in single_arm_sources(dir) {
                            out.push(RobTile { layer1, align: Some(o) });
                        }
                    } else {
                        out.push(RobTile { layer1, align: None });
                    }
                }
            }
        }
    }
    out
}

/// Alignment source emitted across the edge `d` of `t`: the orientation
/// of a corner's single arm or the value of a single line.
fn single_source(t: &RobTile, d: Dir) -> Option<Orient> {
    match t.layer1 {
        RobSymbol::Corner { orient, .. } => single_arm_sources(d).contains(&orient).then_some(orient),
        RobSymbol::Arrow { class, dir, .. } if class.carries_alignment() && dir == d => t.align,
        _ => None,
    }
}

fn alignment_ok(a: &RobTile, b: &RobTile, d: Dir) -> bool {
    if let (RobSymbol::Arrow { class: ca, dir: da, .. }, RobSymbol::Arrow { class: cb, dir: db, .. }) = (a.layer1, b.layer1) {
        if ca.carries_alignment() && cb.carries_alignment() && da == db && (da == d || da == d.opposite()) {
            return a.align == b.align;
        }
    }
    for (src, dst, dd) in [(a, b, d), (b, a, d.opposite())] {
        if let (RobSymbol::Corner { orient, .. }, RobSymbol::Arrow { class, dir, .. }) = (src.layer1, dst.layer1) {
            if class.carries_alignment() && dir == dd && single_arm_sources(dd).contains(&orient) {
                return dst.align == Some(orient);
            }
        }
    }
    true
}

/// The Robinson tile set with its compiled rules.
pub struct Robinson {
    tiles: Vec<RobTile>,
    index: HashMap<RobTile, u32>,
    sigs: Vec<[EdgeSig; 4]>,
    by_sigs: HashMap<[EdgeSig; 4], Vec<u32>>,
    sft: SftSpec,
}

impl Robinson {
    fn new() -> Robinson {
        let tiles = all_tiles();
        let index = tiles.iter().enumerate().map(|(i, t)| (*t, i as u32)).collect();
        let sigs: Vec<[EdgeSig; 4]> = tiles.iter().map(|t| edge_sigs(&t.layer1)).collect();
        let mut by_sigs: HashMap<[EdgeSig; 4], Vec<u32>> = HashMap::new();
        for (i, s) in sigs.iter().enumerate() {
            by_sigs.entry(*s).or_default().push(i as u32);
        }
        let n = tiles.len();
        let names: Vec<Symbol> =
            tiles.iter().enumerate().map(|(i, t)| Symbol { id: i as u32, name: t.name() }).collect();
        let set = |f: &dyn Fn(&RobTile) -> bool| -> SymSet {
            let mut s = SymSet::with_capacity(n);
            s.extend(tiles.iter().enumerate().filter(|(_, t)| f(t)).map(|(i, _)| i));
            s
        };
        let mut forbidden = Vec::new();
        for (ai, a) in tiles.iter().enumerate() {
            for d in [Dir::E, Dir::N] {
                let bad = set(&|b| {
                    let bi = index_of(&tiles, b);
                    !(sigs[ai][d.idx()].meets(sigs[bi][d.opposite().idx()]) && alignment_ok(a, b, d))
                });
                if !bad.is_clear() {
                    let mut one = SymSet::with_capacity(n);
                    one.insert(ai);
                    let (x, y) = d.vec();
                    forbidden.push(Forbidden::new(
                        format!("edge.{}.{}", a.name(), d.name()),
                        vec![(vec![0, 0], one), (vec![x, y], bad)],
                    ));
                }
            }
        }
        let blue = set(&|t| t.layer1.is_blue());
        let nonblue = set(&|t| !t.layer1.is_blue());
        forbidden.push(Forbidden::new(
            "blue.square",
            vec![
                (vec![0, 0], nonblue.clone()),
                (vec![0, 1], nonblue.clone()),
                (vec![1, 0], nonblue.clone()),
                (vec![1, 1], nonblue.clone()),
            ],
        ));
        for (label, off) in [("x", [2, 0]), ("y", [0, 2])] {
            forbidden.push(Forbidden::new(
                format!("blue.fwd.{label}"),
                vec![(vec![0, 0], blue.clone()), (off.to_vec(), nonblue.clone())],
            ));
            forbidden.push(Forbidden::new(
                format!("blue.back.{label}"),
                vec![(vec![0, 0], nonblue.clone()), (off.to_vec(), blue.clone())],
            ));
        }
        // synchronization across a line crossed by two facing single arrows
        for (axis, across) in [("h", Dir::E), ("v", Dir::N)] {
            let back = across.opposite();
            let middle = set(&|t| {
                let s = edge_sigs(&t.layer1);
                let (p, q) = (s[back.idx()], s[across.idx()]);
                p.count == 1 && !p.out && q.count == 1 && !q.out
            });
            for first_north_or_east in [false, true] {
                let component = |o: Orient| if axis == "h" { o.is_north() } else { o.is_east() };
                let left = set(&|t| single_source(t, across).is_some_and(|o| component(o) == first_north_or_east));
                let right = set(&|t| single_source(t, back).is_some_and(|o| component(o) != first_north_or_east));
                let (x, y) = across.vec();
                forbidden.push(Forbidden::new(
                    format!("sync.{axis}.{}", first_north_or_east as u8),
                    vec![(vec![0, 0], left), (vec![x, y], middle.clone()), (vec![2 * x, 2 * y], right)],
                ));
            }
        }
        let sft = SftSpec::new(2, names, forbidden).expect("robinson rules are well formed");
        Robinson { tiles, index, sigs, by_sigs, sft }
    }

    pub fn tiles(&self) -> &[RobTile] {
        &self.tiles
    }

    pub fn tile(&self, id: u32) -> &RobTile {
        &self.tiles[id as usize]
    }

    pub fn id(&self, t: &RobTile) -> Option<u32> {
        self.index.get(t).copied()
    }

    pub fn sigs(&self, id: u32) -> &[EdgeSig; 4] {
        &self.sigs[id as usize]
    }

    pub fn sft(&self) -> &SftSpec {
        &self.sft
    }

    pub fn corner(&self, color: Color, orient: Orient, value: u8) -> u32 {
        self.id(&RobTile { layer1: RobSymbol::Corner { color, orient, value }, align: None }).expect("corner exists")
    }

    /// Tiles with the given edges, filtered by alignment value.
    pub fn lookup(&self, sigs: &[EdgeSig; 4], align: Option<Orient>) -> Vec<u32> {
        self.by_sigs
            .get(sigs)
            .map(|v| v.iter().copied().filter(|&t| self.tiles[t as usize].align == align).collect())
            .unwrap_or_default()
    }

    pub fn is_blue(&self, id: u32) -> bool {
        self.tiles[id as usize].layer1.is_blue()
    }
}

fn index_of(tiles: &[RobTile], t: &RobTile) -> usize {
    // only used while compiling; tiles are few
    tiles.iter().position(|x| x == t).unwrap()
}

pub fn robinson() -> &'static Robinson {
    static CELL: OnceLock<Robinson> = OnceLock::new();
    CELL.get_or_init(Robinson::new)
}

pub fn robinson_sft() -> SftSpec {
    robinson().sft().clone()
}

/// Side of an order-`n` supertile.
pub fn supertile_side(n: u32) -> usize {
    (1usize << (n + 1)) - 1
}

/// Value of the 0,1-counter on the red corner at the centre of an
/// order-`n` supertile.
pub fn red_value(n: u32) -> u8 {
    (n % 2) as u8
}

/// The four supertiles of order `n`, indexed like [`Orient::ALL`].
pub fn supertiles(n: u32) -> Result<[Block; 4], RobinsonError> {
    let rob = robinson();
    let mut level: Vec<Block> =
        Orient::ALL.iter().map(|&o| Block::from_vec(2, 1, vec![rob.corner(Color::Blue, o, 0)])).collect();
    for k in 1..=n {
        let mut next = Vec::with_capacity(4);
        for t in Orient::ALL {
            next.push(grow(rob, &level, k, t)?);
        }
        level = next;
    }
    Ok(level.try_into().unwrap())
}

fn grow(rob: &Robinson, prev: &[Block], k: u32, t: Orient) -> Result<Block, RobinsonError> {
    let side = supertile_side(k);
    let half = 1i32 << k;
    let mut b = Block::filled(2, side, u32::MAX);
    for (qi, q) in Orient::ALL.iter().enumerate() {
        let (qx, qy) = q.quadrant();
        let src = &prev[qi];
        for (i, &s) in src.data().iter().enumerate() {
            let c = src.coords(i);
            b.set(&[c[0] + qx * half, c[1] + qy * half], s);
        }
    }
    let c = half - 1;
    let red = rob.corner(Color::Red, t, red_value(k));
    b.set(&[c, c], red);
    let red_sigs = *rob.sigs(red);
    for d in Dir::ALL {
        let (dx, dy) = d.vec();
        let line = red_sigs[d.idx()];
        let align = (line.count == 1).then_some(t);
        for step in 1..half {
            let u = [c + dx * step, c + dy * step];
            let mut want = [line; 4];
            want[d.idx()] = EdgeSig { out: true, ..line };
            want[d.opposite().idx()] = EdgeSig { out: false, ..line };
            for s in [d.rot(), d.rot().opposite()] {
                let (sx, sy) = s.vec();
                let nb = b.at(&[u[0] + sx, u[1] + sy]).ok_or_else(|| RobinsonError::NoTile(u.to_vec()))?;
                let theirs = rob.sigs(nb)[s.opposite().idx()];
                if !theirs.out {
                    return Err(RobinsonError::NoTile(u.to_vec()));
                }
                want[s.idx()] = EdgeSig { out: false, ..theirs };
            }
            let found = rob.lookup(&want, align);
            if found.len() != 1 {
                return Err(RobinsonError::NoTile(u.to_vec()));
            }
            b.set(&u, found[0]);
        }
    }
    debug_assert!(b.data().iter().all(|&s| s != u32::MAX));
    Ok(b)
}

pub fn build_supertile(n: u32, t: Orient) -> Result<Block, RobinsonError> {
    let all = supertiles(n)?;
    Ok(all[Orient::ALL.iter().position(|&o| o == t).unwrap()].clone())
}

/// Order of a block of supertile side, if it has one.
pub fn supertile_order(side: usize) -> Option<u32> {
    let s = side + 1;
    (s.is_power_of_two() && s >= 2).then(|| s.trailing_zeros() - 1)
}

/// True when every order-`m` supertile occurs in `b` exactly on a
/// sublattice of period `2^(m+2)` (restricted to the fitting positions).
pub fn verify_repetition(b: &Block, m: u32) -> Result<bool, RobinsonError> {
    let n = supertile_order(b.side()).ok_or(RobinsonError::NotASupertile(b.side()))?;
    if m > n {
        return Err(RobinsonError::OrderTooLarge { m, n });
    }
    let period = 1i32 << (m + 2);
    let occ = supertile_occurrences(b, m)?;
    let span = b.side() as i32 - supertile_side(m) as i32;
    Ok(occ.iter().all(|o| is_lattice(o, period, span)))
}

/// Occurrences of the four order-`m` supertiles in `b`, sorted.
pub fn supertile_occurrences(b: &Block, m: u32) -> Result<[Vec<(i32, i32)>; 4], RobinsonError> {
    let subs = supertiles(m)?;
    let side = supertile_side(m);
    let span = b.side() as i32 - side as i32;
    let mut occ: [Vec<(i32, i32)>; 4] = Default::default();
    let index: HashMap<&[u32], usize> = subs.iter().enumerate().map(|(i, s)| (s.data(), i)).collect();
    for x in 0..=span {
        for y in 0..=span {
            let w = b.sub_block(&[x, y], side).unwrap();
            if let Some(&i) = index.get(w.data()) {
                occ[i].push((x, y));
            }
        }
    }
    Ok(occ)
}

/// `occ` is the full lattice `u0 + period Z^2` inside `[0, span]^2`.
fn is_lattice(occ: &[(i32, i32)], period: i32, span: i32) -> bool {
    let Some(&(x0, y0)) = occ.iter().min() else { return span < 0 };
    if x0 >= period || y0 >= period || occ.iter().any(|p| p.1 < y0) {
        return false;
    }
    let mut want = Vec::new();
    for x in (x0..=span).step_by(period as usize) {
        for y in (y0..=span).step_by(period as usize) {
            want.push((x, y));
        }
    }
    let mut have = occ.to_vec();
    have.sort();
    have == want
}

/// Smallest period consistent with every occurrence lattice of the
/// order-`m` supertiles; `None` when no occurrence set has two elements
/// or the sets disagree.
pub fn repetition_period(b: &Block, m: u32) -> Result<Option<i32>, RobinsonError> {
    let occ = supertile_occurrences(b, m)?;
    let span = b.side() as i32 - supertile_side(m) as i32;
    let mut period = None;
    for o in &occ {
        if o.len() < 2 {
            continue;
        }
        let (x0, y0) = o[0];
        let p = o.iter().flat_map(|&(x, y)| [x - x0, y - y0]).filter(|&v| v > 0).min().unwrap();
        if period.is_some_and(|q| q != p) || !is_lattice(o, p, span) {
            return Ok(None);
        }
        period = Some(p);
    }
    Ok(period)
}

pub fn chi(n: u64) -> Result<u32, RobinsonError> {
    if n < 1 {
        return Err(RobinsonError::NonPositive);
    }
    Ok(ceil_log2(n) + 4)
}

pub fn chi_prime(n: u64) -> Result<u32, RobinsonError> {
    if n < 1 {
        return Err(RobinsonError::NonPositive);
    }
    Ok(ceil_log2(n).div_ceil(2) + 2)
}

fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderSource {
    /// Recursively from the petal centred on the south-west corner.
    Traced,
    /// Read off the side length.
    Side,
}

#[derive(Clone, Debug, Serialize)]
pub struct Petal {
    pub order: u32,
    pub order_source: OrderSource,
    /// South-west corner.
    pub origin: (i32, i32),
    pub side: usize,
    pub support: bool,
    pub cells: Vec<(i32, i32)>,
}

impl Petal {
    pub fn center(&self) -> (i32, i32) {
        let h = (self.side as i32 - 1) / 2;
        (self.origin.0 + h, self.origin.1 + h)
    }
}

fn corner_at(b: &Block, x: i32, y: i32) -> Option<(Color, Orient, u8)> {
    let id = b.at2(x, y)?;
    match robinson().tile(id).layer1 {
        RobSymbol::Corner { color, orient, value } => Some((color, orient, value)),
        _ => None,
    }
}

/// Walks a double line from `(x, y)` in direction `d` until a corner of
/// orientation `target`; returns the distance.
fn walk(b: &Block, x: i32, y: i32, d: Dir, target: Orient) -> Option<i32> {
    let rob = robinson();
    let (dx, dy) = d.vec();
    let mut k = 1;
    loop {
        let id = b.at2(x + dx * k, y + dy * k)?;
        let sig = rob.sigs(id)[d.opposite().idx()];
        if sig.count != 2 {
            return None;
        }
        if let Some((_, o, _)) = corner_at(b, x + dx * k, y + dy * k) {
            return (o == target).then_some(k);
        }
        k += 1;
    }
}

/// All petals lying completely inside `b`.
pub fn find_petals(b: &Block) -> Vec<Petal> {
    let mut raw = Vec::new();
    let side = b.side() as i32;
    for x in 0..side {
        for y in 0..side {
            let Some((color, Orient::Sw, value)) = corner_at(b, x, y) else { continue };
            let Some(e) = walk(b, x, y, Dir::E, Orient::Se) else { continue };
            let Some(nn) = walk(b, x, y, Dir::N, Orient::Nw) else { continue };
            if e != nn || walk(b, x, y + e, Dir::E, Orient::Ne) != Some(e) || walk(b, x + e, y, Dir::N, Orient::Ne) != Some(e)
            {
                continue;
            }
            let mut cells = Vec::new();
            for k in 0..=e {
                cells.extend([(x + k, y), (x + k, y + e), (x, y + k), (x + e, y + k)]);
            }
            cells.sort();
            cells.dedup();
            raw.push((color, value, (x, y), e as usize + 1, cells));
        }
    }
    let by_center: HashMap<(i32, i32), usize> =
        raw.iter().enumerate().map(|(i, r)| ((r.2 .0 + (r.3 as i32 - 1) / 2, r.2 .1 + (r.3 as i32 - 1) / 2), i)).collect();
    let mut memo: HashMap<usize, (u32, OrderSource)> = HashMap::new();
    fn order(
        i: usize,
        raw: &[(Color, u8, (i32, i32), usize, Vec<(i32, i32)>)],
        by_center: &HashMap<(i32, i32), usize>,
        memo: &mut HashMap<usize, (u32, OrderSource)>,
    ) -> (u32, OrderSource) {
        if let Some(&v) = memo.get(&i) {
            return v;
        }
        let r = &raw[i];
        let v = if r.0 == Color::Blue {
            (0, OrderSource::Traced)
        } else if let Some(&inner) = by_center.get(&r.2) {
            let (o, src) = order(inner, raw, by_center, memo);
            (o + 1, src)
        } else {
            ((r.3 - 1).trailing_zeros() - 1, OrderSource::Side)
        };
        memo.insert(i, v);
        v
    }
    let mut out: Vec<Petal> = (0..raw.len())
        .map(|i| {
            let (o, src) = order(i, &raw, &by_center, &mut memo);
            let r = &raw[i];
            Petal { order: o, order_source: src, origin: r.2, side: r.3, support: r.1 == 1, cells: r.4.clone() }
        })
        .collect();
    out.sort_by_key(|p| (p.order, p.origin));
    out
}

/// Square enclosed by an odd-order petal.
#[derive(Clone, Debug, Serialize)]
pub struct Cell2 {
    pub order: u32,
    pub origin: (i32, i32),
    pub side: usize,
}

pub fn find_cells(b: &Block) -> Vec<Cell2> {
    find_petals(b)
        .into_iter()
        .filter(|p| p.order % 2 == 1)
        .map(|p| Cell2 { order: (p.order - 1) / 2, origin: p.origin, side: p.side })
        .collect()
}

/// A completion of a block inside a supertile.
#[derive(Clone, Debug)]
pub struct Completion {
    pub order: u32,
    pub orient: Orient,
    pub at: (i32, i32),
    pub supertile: Block,
}

/// Index of every `k`-window of the four order-`n` supertiles.
pub struct WindowCatalog {
    pub k: usize,
    pub order: u32,
    supertiles: [Block; 4],
    first: HashMap<Vec<u32>, (usize, (i32, i32))>,
}

impl WindowCatalog {
    pub fn new(k: usize, order: u32) -> Result<WindowCatalog, RobinsonError> {
        let supertiles = supertiles(order)?;
        let mut first = HashMap::new();
        for (t, s) in supertiles.iter().enumerate() {
            let span = s.side() as i32 - k as i32;
            for x in 0..=span {
                for y in 0..=span {
                    let w = s.sub_block(&[x, y], k).unwrap();
                    first.entry(w.data().to_vec()).or_insert((t, (x, y)));
                }
            }
        }
        Ok(WindowCatalog { k, order, supertiles, first })
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn contains(&self, b: &Block) -> bool {
        self.first.contains_key(b.data())
    }

    /// Completions in each orientation that contains `b`.
    pub fn locate(&self, b: &Block) -> Vec<(Orient, (i32, i32))> {
        let mut out = Vec::new();
        for (t, s) in self.supertiles.iter().enumerate() {
            let span = s.side() as i32 - self.k as i32;
            'outer: for x in 0..=span {
                for y in 0..=span {
                    if s.sub_block(&[x, y], self.k).unwrap().data() == b.data() {
                        out.push((Orient::ALL[t], (x, y)));
                        break 'outer;
                    }
                }
            }
        }
        out
    }
}

/// Completes an admissible block into an order-`chi(side)` supertile, the
/// lexicographically least one among the orientations that contain it.
pub fn complete_block(b: &Block) -> Result<Completion, RobinsonError> {
    let rob = robinson();
    let v = check_locally_admissible(b, rob.sft()).map_err(|e| RobinsonError::NotInLanguage(e.to_string()))?;
    if let Some(first) = v.first() {
        return Err(RobinsonError::NotInLanguage(format!(
            "rule {} violated at {:?}",
            rob.sft().forbidden()[first.forbidden].label,
            first.at
        )));
    }
    let order = chi(b.side() as u64)?;
    let all = supertiles(order)?;
    let mut best: Option<Completion> = None;
    for (t, s) in all.iter().enumerate() {
        let span = s.side() as i32 - b.side() as i32;
        let mut found = None;
        'scan: for x in 0..=span {
            for y in 0..=span {
                if s.sub_block(&[x, y], b.side()).unwrap().data() == b.data() {
                    found = Some((x, y));
                    break 'scan;
                }
            }
        }
        if let Some(at) = found {
            if best.as_ref().is_none_or(|c| s.data() < c.supertile.data()) {
                best = Some(Completion { order, orient: Orient::ALL[t], at, supertile: s.clone() });
            }
        }
    }
    best.ok_or_else(|| RobinsonError::NotInLanguage(format!("no occurrence in order-{order} supertiles")))
}

/// Result of checking that every admissible `k`-block occurs in the
/// order-`chi(k)` supertiles of every orientation.
#[derive(Clone, Debug)]
pub struct CompletionReport {
    pub k: usize,
    pub order: u32,
    pub admissible: usize,
    /// Blocks found in at least one orientation.
    pub completed: usize,
    /// Blocks found in all four orientations.
    pub in_every_orientation: usize,
    pub missing: Vec<Block>,
}

pub fn completion_report(k: usize, budget: u64) -> Result<CompletionReport, RobinsonError> {
    let order = chi(k as u64)?;
    let blocks = census::enumerate_blocks(robinson().sft(), k, Method::Transfer, budget)?;
    let subs = supertiles(order)?;
    let sets: Vec<HashSet<Vec<u32>>> = subs
        .iter()
        .map(|s| {
            let span = s.side() as i32 - k as i32;
            let mut h = HashSet::new();
            for x in 0..=span {
                for y in 0..=span {
                    h.insert(s.sub_block(&[x, y], k).unwrap().data().to_vec());
                }
            }
            h
        })
        .collect();
    let mut missing = Vec::new();
    let mut every = 0;
    for b in &blocks {
        let hits = sets.iter().filter(|h| h.contains(b.data())).count();
        if hits == 0 {
            missing.push(b.clone());
        }
        every += (hits == sets.len()) as usize;
    }
    Ok(CompletionReport {
        k,
        order,
        admissible: blocks.len(),
        completed: blocks.len() - missing.len(),
        in_every_orientation: every,
        missing,
    })
}

/// Aperiodicity evidence: a periodic point on some torus with periods at
/// most `max_period`, if any.
pub fn periodic_search(
    sft: &SftSpec,
    max_period: usize,
    budget: u64,
) -> Result<Option<census::PeriodicWitness>, RobinsonError> {
    Ok(census::periodic_search(sft, max_period, budget)?)
}

/// Generated table of the tile inventory, one line per tile.
pub fn tile_table() -> String {
    let rob = robinson();
    let mut by_class: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = String::from("id\tname\tN\tE\tS\tW\n");
    for (i, t) in rob.tiles().iter().enumerate() {
        let s = rob.sigs(i as u32);
        let fmt_sig = |e: &EdgeSig| {
            format!(
                "{}{}{}{}",
                if e.out { '>' } else { '<' },
                e.count,
                e.offset.map(|d| d.name()).unwrap_or("-"),
                e.mark
            )
        };
        out.push_str(&format!(
            "{i}\t{}\t{}\t{}\t{}\t{}\n",
            t.name(),
            fmt_sig(&s[0]),
            fmt_sig(&s[1]),
            fmt_sig(&s[2]),
            fmt_sig(&s[3])
        ));
        let key = match t.layer1 {
            RobSymbol::Corner { color: Color::Blue, .. } => "blue corner".to_string(),
            RobSymbol::Corner { .. } => "red corner".to_string(),
            RobSymbol::Arrow { class, .. } => format!("{}-arrow", class.label()),
        };
        *by_class.entry(key).or_default() += 1;
    }
    for (k, v) in by_class {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out
}

/// Positions of blue corners of a block, by orientation.
pub fn blue_positions(b: &Block) -> BTreeMap<Orient, Vec<Pos>> {
    let mut out: BTreeMap<Orient, Vec<Pos>> = BTreeMap::new();
    b.for_each_cell(|p, s| {
        if let RobSymbol::Corner { color: Color::Blue, orient, .. } = robinson().tile(s).layer1 {
            out.entry(orient).or_default().push(p.to_vec());
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory_has_108_tiles() {
        let rob = robinson();
        assert_eq!(rob.tiles().len(), 108);
        let layer1: HashSet<RobSymbol> = rob.tiles().iter().map(|t| t.layer1).collect();
        assert_eq!(layer1.len(), 84);
        let names: HashSet<String> = rob.tiles().iter().map(|t| t.name()).collect();
        assert_eq!(names.len(), 108);
    }

    #[test]
    fn corner_edges() {
        let sw = edge_sigs(&RobSymbol::Corner { color: Color::Blue, orient: Orient::Sw, value: 0 });
        assert!(sw.iter().all(|s| s.out));
        assert_eq!(sw[Dir::N as usize].count, 2);
        assert_eq!(sw[Dir::E as usize].count, 2);
        assert_eq!(sw[Dir::W as usize].count, 1);
        let ne = edge_sigs(&RobSymbol::Corner { color: Color::Blue, orient: Orient::Ne, value: 0 });
        assert_eq!(ne[Dir::S as usize].count, 2);
        assert_eq!(ne[Dir::W as usize].count, 2);
        assert_eq!(ne[Dir::S as usize].offset, Some(Dir::E));
    }

    #[test]
    fn small_supertiles() {
        let s0 = build_supertile(0, Orient::Sw).unwrap();
        assert_eq!(s0.side(), 1);
        assert!(robinson().is_blue(s0.data()[0]));
        for n in 1..=3 {
            for t in Orient::ALL {
                let b = build_supertile(n, t).unwrap();
                assert_eq!(b.side(), supertile_side(n));
                let v = check_locally_admissible(&b, robinson().sft()).unwrap();
                assert!(v.is_empty(), "order {n} {t}: {:?}", &v[..v.len().min(3)]);
            }
        }
    }

    #[test]
    fn chi_values() {
        assert_eq!(chi(1).unwrap(), 4);
        assert_eq!(chi(4).unwrap(), 6);
        assert_eq!(chi_prime(8).unwrap(), 4);
        assert!(chi(0).is_err());
    }

    #[test]
    fn blue_lattice() {
        for n in 1..=4 {
            for t in Orient::ALL {
                let b = build_supertile(n, t).unwrap();
                for (o, cells) in blue_positions(&b) {
                    for p in cells {
                        assert_eq!((p[0] % 2, p[1] % 2), (0, 0));
                        assert_eq!(o, Orient::from_parts(p[1] % 4 == 2, p[0] % 4 == 2), "{p:?}");
                    }
                }
                let count: usize = blue_positions(&b).values().map(Vec::len).sum();
                assert_eq!(count, ((b.side() + 1) / 2).pow(2));
            }
        }
    }

    #[test]
    fn order_one_centre() {
        for t in Orient::ALL {
            let b = build_supertile(1, t).unwrap();
            match robinson().tile(b.at2(1, 1).unwrap()).layer1 {
                RobSymbol::Corner { color: Color::Red, orient, .. } => assert_eq!(orient, t),
                other => panic!("centre is {other:?}"),
            }
        }
    }

    #[test]
    fn square_without_blue_is_forbidden() {
        let rob = robinson();
        let red = rob.corner(Color::Red, Orient::Ne, 0);
        let b = Block::filled(2, 2, red);
        let v = check_locally_admissible(&b, rob.sft()).unwrap();
        assert!(v.iter().any(|v| rob.sft().forbidden()[v.forbidden].label == "blue.square"));
    }

    #[test]
    fn supertile_order_from_side() {
        assert_eq!(supertile_order(1), Some(0));
        assert_eq!(supertile_order(7), Some(2));
        assert_eq!(supertile_order(8), None);
    }
}
