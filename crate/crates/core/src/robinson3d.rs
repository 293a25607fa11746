//! Three-dimensional structure layer: triples of Robinson tiles, one copy
//! per coordinate plane.
//!
//! Copy `k` is constant along the axis `e_k`. Its section coordinates are
//! `(-x2, -x3)` for the first copy, `(-x3, -x1)` for the second and
//! `(-x1, -x2)` for the third, so the 2D east and north directions of a
//! copy point against the 3D axes.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::robinson2d::{
    find_cells, find_petals, robinson, supertile_order, supertile_side, supertiles, ArrowClass, Color, Dir, Orient,
    RobSymbol, RobinsonError,
};
use crate::sft::{check_locally_admissible, Block, Pattern};

pub type Orientation3 = [Orient; 3];

const N_TILES: u32 = 108;

pub fn pack(c: [u32; 3]) -> u32 {
    (c[0] * N_TILES + c[1]) * N_TILES + c[2]
}

pub fn unpack(s: u32) -> [u32; 3] {
    [s / (N_TILES * N_TILES), (s / N_TILES) % N_TILES, s % N_TILES]
}

/// Axes spanned by the section of copy `k`: (horizontal, vertical).
fn section_axes(k: usize) -> (usize, usize) {
    ((k + 1) % 3, (k + 2) % 3)
}

/// Signed 3D axis of a 2D direction in copy `k`.
fn dir3(k: usize, d: Dir) -> (usize, i32) {
    let (h, v) = section_axes(k);
    match d {
        Dir::E => (h, -1),
        Dir::W => (h, 1),
        Dir::N => (v, -1),
        Dir::S => (v, 1),
    }
}

fn blue_orient(h: bool, v: bool) -> Orient {
    Orient::from_parts(v, h)
}

/// Orientation triple seen at a blue position whose coordinates are
/// classified by `bits`.
fn triple_of_bits(bits: [bool; 3]) -> Orientation3 {
    [0, 1, 2].map(|k| {
        let (h, v) = section_axes(k);
        blue_orient(bits[h], bits[v])
    })
}

/// The admissible blue-corner triples, numbered like the cube corners.
pub fn allowed_blue_triples() -> Vec<Orientation3> {
    use Orient::*;
    vec![
        [Sw, Nw, Se],
        [Se, Nw, Ne],
        [Se, Sw, Nw],
        [Ne, Se, Nw],
        [Nw, Se, Sw],
        [Nw, Ne, Se],
        [Ne, Ne, Ne],
        [Sw, Sw, Sw],
    ]
}

/// The corner triples admissible anywhere, as generated by the sections.
fn admissible_triple(t: &Orientation3) -> bool {
    (0..8).any(|b| triple_of_bits([b & 4 != 0, b & 2 != 0, b & 1 != 0]) == *t)
}

/// Orientation of the order-`n` sub-supertile at offset `bits * 2^(n+1)`
/// inside an order-`n+1` cubic supertile.
pub fn correspondence_table() -> [([u8; 3], Orientation3); 8] {
    let mut rows = [([0u8; 3], [Orient::Sw; 3]); 8];
    for (i, row) in rows.iter_mut().enumerate() {
        let b = [(i & 1) as u8, ((i >> 1) & 1) as u8, ((i >> 2) & 1) as u8];
        let hi = b.map(|x| x == 1);
        let t = [0, 1, 2].map(|k| {
            let (h, v) = section_axes(k);
            blue_orient(!hi[h], !hi[v])
        });
        *row = (b, t);
    }
    rows
}

fn orient_index(o: Orient) -> usize {
    Orient::ALL.iter().position(|&x| x == o).unwrap()
}

/// The order-`n` cubic supertile of orientation `t`.
pub fn build_supertile3(n: u32, t: Orientation3) -> Result<Block, RobinsonError> {
    let sq = supertiles(n)?;
    let s = supertile_side(n);
    let last = s as i32 - 1;
    let mut data = vec![0u32; s * s * s];
    data.par_chunks_mut(s * s).enumerate().for_each(|(x1, slab)| {
        for x2 in 0..s {
            for x3 in 0..s {
                let x = [x1 as i32, x2 as i32, x3 as i32];
                let c = [0, 1, 2].map(|k| {
                    let (h, v) = section_axes(k);
                    sq[orient_index(t[k])].at2(last - x[h], last - x[v]).unwrap()
                });
                slab[x2 * s + x3] = pack(c);
            }
        }
    });
    Ok(Block::from_vec(3, s, data))
}

/// The 2D pattern seen by copy `k` on the slice `x_k = slice`, in section
/// coordinates.
pub fn section(b: &Block, k: usize, slice: i32) -> Block {
    let s = b.side();
    let last = s as i32 - 1;
    let (h, v) = section_axes(k);
    let mut data = Vec::with_capacity(s * s);
    let mut x = [0i32; 3];
    x[k] = slice;
    for u in 0..s as i32 {
        for w in 0..s as i32 {
            x[h] = last - u;
            x[v] = last - w;
            data.push(unpack(b.at(&x).expect("slice inside block"))[k]);
        }
    }
    Block::from_vec(2, s, data)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule3 {
    Section { copy: usize, label: String },
    Invariance { copy: usize },
    MixedCorners,
    BlueTriple,
    RedTriple,
    SingleCorner,
    OrthogonalArrows,
    BlueDensity,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation3 {
    pub at: [i32; 3],
    pub rule: Rule3,
}

fn long_axis(k: usize, s: &RobSymbol) -> Option<(usize, i32)> {
    match *s {
        RobSymbol::Arrow { dir, .. } => Some(dir3(k, dir)),
        _ => None,
    }
}

fn double_sided(c: ArrowClass) -> bool {
    c.side_count() == 2
}

fn corner_arms(k: usize, o: Orient) -> [(usize, i32); 2] {
    let up = if o.is_north() { Dir::S } else { Dir::N };
    let right = if o.is_east() { Dir::W } else { Dir::E };
    [dir3(k, up), dir3(k, right)]
}

/// Which of the four admissible shapes a position with a single corner (in
/// copy `k`) has: face centre, edge, ridge centre or internal face.
fn single_corner_type(s: &[RobSymbol; 3], k: usize) -> Option<u8> {
    let RobSymbol::Corner { orient, .. } = s[k] else { return None };
    let j = [(k + 1) % 3, (k + 2) % 3];
    let (RobSymbol::Arrow { class: ca, .. }, RobSymbol::Arrow { class: cb, .. }) = (s[j[0]], s[j[1]]) else {
        return None;
    };
    let da = long_axis(j[0], &s[j[0]])?;
    let db = long_axis(j[1], &s[j[1]])?;
    let doubles = double_sided(ca) && double_sided(cb);
    let singles = !double_sided(ca) && !double_sided(cb);
    if da.0 == k && db.0 == k && da == db {
        if doubles {
            return Some(1);
        }
        if singles {
            return Some(2);
        }
    } else if da.0 != k && db.0 != k && da.0 != db.0 {
        let against = corner_arms(k, orient).map(|(ax, sg)| (ax, -sg));
        if doubles && against.contains(&da) && against.contains(&db) {
            return Some(3);
        }
        if singles {
            return Some(4);
        }
    }
    None
}

/// Rules local to one position.
fn position_rule(c: [u32; 3]) -> Option<Rule3> {
    let rob = robinson();
    let s = c.map(|id| rob.tile(id).layer1);
    let corners: Vec<usize> = (0..3).filter(|&k| s[k].is_corner()).collect();
    match corners.len() {
        0 => {
            let a = [0, 1, 2].map(|k| long_axis(k, &s[k]).unwrap().0);
            (a[0] != a[1] && a[1] != a[2] && a[0] != a[2]).then_some(Rule3::OrthogonalArrows)
        }
        1 => single_corner_type(&s, corners[0]).is_none().then_some(Rule3::SingleCorner),
        2 => Some(Rule3::MixedCorners),
        _ => {
            let col = |x: &RobSymbol| match *x {
                RobSymbol::Corner { color, orient, .. } => (color, orient),
                _ => unreachable!(),
            };
            let t = s.map(|x| col(&x));
            if t[0].0 != t[1].0 || t[1].0 != t[2].0 {
                return Some(Rule3::MixedCorners);
            }
            let o = [t[0].1, t[1].1, t[2].1];
            if admissible_triple(&o) {
                None
            } else if t[0].0 == Color::Blue {
                Some(Rule3::BlueTriple)
            } else {
                Some(Rule3::RedTriple)
            }
        }
    }
}

fn is_good_blue(c: [u32; 3]) -> bool {
    let rob = robinson();
    let mut o = [Orient::Sw; 3];
    for k in 0..3 {
        match rob.tile(c[k]).layer1 {
            RobSymbol::Corner { color: Color::Blue, orient, .. } => o[k] = orient,
            _ => return false,
        }
    }
    admissible_triple(&o)
}

/// Every violated rule of the structure layer in `b`, sorted.
pub fn check_coincidence(b: &Block) -> Vec<Violation3> {
    let rob = robinson();
    let s = b.side() as i32;
    let last = s - 1;
    let mut out: Vec<Violation3> = (0..s)
        .into_par_iter()
        .flat_map_iter(|x1| {
            let mut v = Vec::new();
            for x2 in 0..s {
                for x3 in 0..s {
                    let x = [x1, x2, x3];
                    let c = unpack(b.at(&x).unwrap());
                    if let Some(rule) = position_rule(c) {
                        v.push(Violation3 { at: x, rule });
                    }
                    for k in 0..3 {
                        let mut y = x;
                        y[k] += 1;
                        if let Some(d) = b.at(&y) {
                            if unpack(d)[k] != c[k] {
                                v.push(Violation3 { at: x, rule: Rule3::Invariance { copy: k } });
                            }
                        }
                    }
                    if x1 < last && x2 < last && x3 < last {
                        let mut found = false;
                        'w: for d in 0..8 {
                            let y = [x1 + (d >> 2 & 1), x2 + (d >> 1 & 1), x3 + (d & 1)];
                            if is_good_blue(unpack(b.at(&y).unwrap())) {
                                found = true;
                                break 'w;
                            }
                        }
                        if !found {
                            v.push(Violation3 { at: x, rule: Rule3::BlueDensity });
                        }
                    }
                }
            }
            v
        })
        .collect();
    let sections: Vec<Violation3> = (0..3usize)
        .flat_map(|k| (0..s).map(move |sl| (k, sl)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|(k, sl)| {
            let sec = section(b, k, sl);
            let (h, v) = section_axes(k);
            check_locally_admissible(&sec, rob.sft())
                .expect("section over the tile alphabet")
                .into_iter()
                .map(move |viol| {
                    let mut at = [0i32; 3];
                    at[k] = sl;
                    at[h] = last - viol.at[0];
                    at[v] = last - viol.at[1];
                    Violation3 {
                        at,
                        rule: Rule3::Section { copy: k, label: rob.sft().forbidden()[viol.forbidden].label.clone() },
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    out.extend(sections);
    out.sort();
    out
}

/// Order of a cubic block of supertile side, and its orientation read
/// from the centre triple.
pub fn supertile3_orientation(b: &Block) -> Option<(u32, Orientation3)> {
    let n = supertile_order(b.side())?;
    let c = (b.side() / 2) as i32;
    let ids = unpack(b.at(&[c, c, c])?);
    let mut t = [Orient::Sw; 3];
    for k in 0..3 {
        match robinson().tile(ids[k]).layer1 {
            RobSymbol::Corner { orient, .. } => t[k] = orient,
            _ => return None,
        }
    }
    Some((n, t))
}

/// Occurrences of every order-`m` cubic supertile in `b`, keyed by
/// orientation.
pub fn supertile3_occurrences(b: &Block, m: u32) -> Result<HashMap<Orientation3, Vec<[i32; 3]>>, RobinsonError> {
    let side = supertile_side(m);
    let mut index: HashMap<Vec<u32>, Orientation3> = HashMap::new();
    for a in Orient::ALL {
        for c in Orient::ALL {
            for d in Orient::ALL {
                let t = [a, c, d];
                index.insert(build_supertile3(m, t)?.data().to_vec(), t);
            }
        }
    }
    let span = b.side() as i32 - side as i32;
    let mut occ: HashMap<Orientation3, Vec<[i32; 3]>> = HashMap::new();
    for x in 0..=span {
        for y in 0..=span {
            for z in 0..=span {
                let w = b.sub_block(&[x, y, z], side).unwrap();
                if let Some(&t) = index.get(w.data()) {
                    occ.entry(t).or_default().push([x, y, z]);
                }
            }
        }
    }
    Ok(occ)
}

/// Every order-`m` cubic supertile occurring in `b` occurs exactly on a
/// sublattice of period `2^(m+2)`.
pub fn verify_repetition3(b: &Block, m: u32) -> Result<bool, RobinsonError> {
    let n = supertile_order(b.side()).ok_or(RobinsonError::NotASupertile(b.side()))?;
    if m > n {
        return Err(RobinsonError::OrderTooLarge { m, n });
    }
    let period = 1i32 << (m + 2);
    let span = b.side() as i32 - supertile_side(m) as i32;
    let occ = supertile3_occurrences(b, m)?;
    Ok(!occ.is_empty()
        && occ.values().all(|o| {
            let x0 = *o.iter().min().unwrap();
            if x0.iter().any(|&c| c >= period) {
                return false;
            }
            let mut want = Vec::new();
            for x in (x0[0]..=span).step_by(period as usize) {
                for y in (x0[1]..=span).step_by(period as usize) {
                    for z in (x0[2]..=span).step_by(period as usize) {
                        want.push([x, y, z]);
                    }
                }
            }
            let mut have = o.clone();
            have.sort();
            have == want
        }))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Cell3 {
    pub order: u32,
    pub origin: [i32; 3],
    pub side: usize,
}

/// Cubes whose three face projections are 2D cells of the same order.
pub fn find_cells3(b: &Block) -> Vec<Cell3> {
    let last = b.side() as i32 - 1;
    // per copy: (order, interval on h axis, interval on v axis)
    let per_copy: Vec<Vec<(u32, i32, i32, usize)>> = (0..3)
        .map(|k| {
            find_cells(&section(b, k, 0))
                .into_iter()
                .map(|c| {
                    let s = c.side as i32;
                    (c.order, last - (c.origin.0 + s - 1), last - (c.origin.1 + s - 1), c.side)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for &(o1, a2, a3, s1) in &per_copy[0] {
        for &(o2, b3, b1, s2) in &per_copy[1] {
            if o2 != o1 || s2 != s1 || b3 != a3 {
                continue;
            }
            if per_copy[2].iter().any(|&(o3, c1, c2, s3)| o3 == o1 && s3 == s1 && c1 == b1 && c2 == a2) {
                out.push(Cell3 { order: o1, origin: [b1, a2, a3], side: s1 });
            }
        }
    }
    out.sort();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionColor {
    None,
    Light,
    Medium,
    Dark,
}

impl PositionColor {
    fn from_count(n: usize) -> PositionColor {
        match n {
            0 => PositionColor::None,
            1 => PositionColor::Light,
            2 => PositionColor::Medium,
            _ => PositionColor::Dark,
        }
    }
}

/// Dense map of position colors, last coordinate fastest.
#[derive(Clone, Debug)]
pub struct ColorMap {
    pub side: usize,
    pub data: Vec<PositionColor>,
}

impl ColorMap {
    pub fn at(&self, x: [i32; 3]) -> PositionColor {
        let s = self.side;
        self.data[(x[0] as usize * s + x[1] as usize) * s + x[2] as usize]
    }

    pub fn histogram(&self) -> [usize; 4] {
        let mut h = [0; 4];
        for c in &self.data {
            h[*c as usize] += 1;
        }
        h
    }
}

/// Colors every position by how many of its three symbols lie on a
/// support petal.
pub fn classify_colors(b: &Block) -> ColorMap {
    let s = b.side();
    let last = s as i32 - 1;
    let masks: Vec<Vec<bool>> = (0..3)
        .map(|k| {
            let mut m = vec![false; s * s];
            for p in find_petals(&section(b, k, 0)).into_iter().filter(|p| p.support) {
                for (u, v) in p.cells {
                    m[u as usize * s + v as usize] = true;
                }
            }
            m
        })
        .collect();
    let mut data = Vec::with_capacity(s * s * s);
    for x1 in 0..s as i32 {
        for x2 in 0..s as i32 {
            for x3 in 0..s as i32 {
                let x = [x1, x2, x3];
                let n = (0..3)
                    .filter(|&k| {
                        let (h, v) = section_axes(k);
                        masks[k][(last - x[h]) as usize * s + (last - x[v]) as usize]
                    })
                    .count();
                data.push(PositionColor::from_count(n));
            }
        }
    }
    ColorMap { side: s, data }
}

pub fn triple_name(s: u32) -> String {
    let rob = robinson();
    let c = unpack(s);
    format!("{}|{}|{}", rob.tile(c[0]).name(), rob.tile(c[1]).name(), rob.tile(c[2]).name())
}

/// The block as a pattern over the triples it uses, with their names.
pub fn to_named_pattern(b: &Block) -> (Pattern, Vec<String>) {
    let mut used: Vec<u32> = b.data().to_vec();
    used.sort_unstable();
    used.dedup();
    let remap: HashMap<u32, u32> = used.iter().enumerate().map(|(i, &s)| (s, i as u32)).collect();
    let data = b.data().iter().map(|s| remap[s]).collect();
    let p = Block::from_vec(3, b.side(), data).to_pattern();
    (p, used.into_iter().map(triple_name).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robinson2d::build_supertile;
    use Orient::*;

    #[test]
    fn blue_triples_are_the_section_triples() {
        let listed = allowed_blue_triples();
        assert_eq!(listed.len(), 8);
        assert_eq!(listed[6], [Ne, Ne, Ne]);
        assert_eq!(listed[7], [Sw, Sw, Sw]);
        for t in &listed {
            assert!(admissible_triple(t), "{t:?}");
        }
        let mut a = listed.clone();
        a.sort();
        a.dedup();
        assert_eq!(a.len(), 8);
    }

    #[test]
    fn table_rows() {
        let table = correspondence_table();
        let get = |b: [u8; 3]| table.iter().find(|r| r.0 == b).unwrap().1;
        assert_eq!(get([0, 0, 0]), [Ne, Ne, Ne]);
        assert_eq!(get([1, 0, 0]), [Ne, Se, Nw]);
        assert_eq!(get([1, 1, 0]), [Nw, Se, Sw]);
        assert_eq!(get([0, 0, 1]), [Se, Nw, Ne]);
        assert_eq!(get([0, 1, 1]), [Sw, Nw, Se]);
        assert_eq!(get([1, 1, 1]), [Sw, Sw, Sw]);
        assert_eq!(get([0, 1, 0]), [Nw, Ne, Se]);
        assert_eq!(get([1, 0, 1]), [Se, Sw, Nw]);
    }

    #[test]
    fn base_case_is_a_blue_triple() {
        let b = build_supertile3(0, [Ne, Ne, Ne]).unwrap();
        assert_eq!(b.side(), 1);
        assert!(is_good_blue(unpack(b.data()[0])));
        assert!(check_coincidence(&b).is_empty());
    }

    #[test]
    fn sub_cubes_follow_the_table() {
        for n in 0..3 {
            let big = build_supertile3(n + 1, [Sw, Nw, Se]).unwrap();
            let off = 1i32 << (n + 1);
            for (bits, t) in correspondence_table() {
                let at = bits.map(|b| b as i32 * off);
                let sub = big.sub_block(&at, supertile_side(n)).unwrap();
                assert_eq!(sub, build_supertile3(n, t).unwrap(), "n={n} bits={bits:?}");
            }
        }
    }

    #[test]
    fn sections_are_supertiles() {
        let t = [Se, Sw, Nw];
        let b = build_supertile3(2, t).unwrap();
        for k in 0..3 {
            for sl in [0, 3, 6] {
                assert_eq!(section(&b, k, sl), build_supertile(2, t[k]).unwrap());
            }
        }
    }

    #[test]
    fn built_cubes_pass() {
        for (_, t) in correspondence_table() {
            let b = build_supertile3(2, t).unwrap();
            let v = check_coincidence(&b);
            assert!(v.is_empty(), "{t:?}: {:?}", &v[..v.len().min(5)]);
        }
    }

    #[test]
    fn odd_centre_triple_is_reported() {
        let b = build_supertile3(1, [Sw, Sw, Ne]).unwrap();
        let v = check_coincidence(&b);
        assert_eq!(v, vec![Violation3 { at: [1, 1, 1], rule: Rule3::RedTriple }]);
    }

    #[test]
    fn local_rules() {
        let rob = robinson();
        let find = |f: &dyn Fn(&RobSymbol) -> bool| {
            rob.tiles().iter().position(|t| f(&t.layer1)).unwrap() as u32
        };
        let red_sw = rob.corner(Color::Red, Sw, 1);
        let blue_sw = rob.corner(Color::Blue, Sw, 0);
        assert_eq!(position_rule([red_sw, red_sw, blue_sw]), Some(Rule3::MixedCorners));
        let four = |d: Dir| find(&|s| matches!(*s, RobSymbol::Arrow { class: ArrowClass::FourRight, dir, .. } if dir == d));
        let c = [four(Dir::E), four(Dir::E), four(Dir::E)];
        let axes: Vec<usize> = (0..3).map(|k| dir3(k, Dir::E).0).collect();
        assert_eq!(axes, vec![1, 2, 0]);
        assert_eq!(position_rule(c), Some(Rule3::OrthogonalArrows));
    }

    #[test]
    fn repetition_in_cubes() {
        let b = build_supertile3(3, [Ne, Ne, Ne]).unwrap();
        for m in 0..3 {
            assert!(verify_repetition3(&b, m).unwrap(), "m={m}");
        }
    }

    #[test]
    fn cells_and_colors() {
        let b = build_supertile3(3, [Sw, Sw, Sw]).unwrap();
        let cells = find_cells3(&b);
        assert!(!cells.is_empty());
        for c in &cells {
            assert_eq!(c.side, 4usize.pow(c.order + 1) + 1);
        }
        let colors = classify_colors(&b);
        let c = &cells[0];
        let e = c.side as i32 - 1;
        let o = c.origin;
        let mid = e / 2;
        for t in 0..=e {
            assert_eq!(colors.at([o[0] + t, o[1], o[2]]), PositionColor::Dark);
            assert_eq!(colors.at([o[0] + e, o[1] + t, o[2] + e]), PositionColor::Dark);
        }
        for u in 1..e {
            for w in 1..e {
                assert!(colors.at([o[0], o[1] + u, o[2] + w]) >= PositionColor::Medium);
            }
        }
        assert_eq!(colors.at([o[0], o[1] + 1, o[2] + mid]), PositionColor::Medium);
        assert_eq!(colors.histogram().iter().sum::<usize>(), b.data().len());
        assert!(colors.histogram()[0] > 0);
    }
    #[test]
    fn every_single_corner_shape_occurs() {
        let b = build_supertile3(3, [Ne, Ne, Ne]).unwrap();
        let rob = robinson();
        let mut seen = [0usize; 5];
        for &x in b.data() {
            let s = unpack(x).map(|id| rob.tile(id).layer1);
            let corners: Vec<usize> = (0..3).filter(|&k| s[k].is_corner()).collect();
            if corners.len() == 1 {
                seen[single_corner_type(&s, corners[0]).unwrap() as usize] += 1;
            }
        }
        assert!(seen[1..].iter().all(|&c| c > 0), "{seen:?}");
    }
}
