//! Multi-head computing machines on a rectangular face, with the
//! empty-tape, empty-sides, first-error and error-path signals.
//!
//! The face is a dense grid: row `r` holds the tape at time `r`, one
//! machine step per row. Cells on an off row or off column only transport
//! what they receive.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing `{0}` declaration")]
    Missing(&'static str),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("face {0}")]
    Face(String),
    #[error("duplicate transition for ({state}, {letter})")]
    Duplicate { state: String, letter: String },
    #[error("special state {0} must not move or change")]
    Special(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Move {
    Left,
    Right,
    Up,
}

impl Move {
    fn parse(s: &str) -> Option<Move> {
        match s {
            "L" | "<" | "←" | "left" => Some(Move::Left),
            "R" | ">" | "→" | "right" => Some(Move::Right),
            "U" | "^" | "↑" | "up" | "S" => Some(Move::Up),
            _ => None,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Move::Left => "L",
            Move::Right => "R",
            Move::Up => "U",
        }
    }
}

/// A machine with initial, error and shadow states and a blank letter.
/// Missing transitions leave the head in place: `(a, q, Up)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineSpec {
    pub states: Vec<String>,
    pub letters: Vec<String>,
    pub q0: usize,
    pub qe: usize,
    pub qs: usize,
    pub blank: usize,
    delta: HashMap<(usize, usize), (usize, usize, Move)>,
}

impl MachineSpec {
    /// `δ(a, q)` as `(letter, state, move)`.
    pub fn step(&self, a: usize, q: usize) -> (usize, usize, Move) {
        if q == self.qe || q == self.qs {
            return (a, q, Move::Up);
        }
        self.delta.get(&(a, q)).copied().unwrap_or((a, q, Move::Up))
    }

    pub fn state(&self, name: &str) -> Result<usize, MachineError> {
        self.states.iter().position(|s| s == name).ok_or_else(|| MachineError::Unknown { kind: "state", name: name.into() })
    }

    pub fn letter(&self, name: &str) -> Result<usize, MachineError> {
        self.letters.iter().position(|s| s == name).ok_or_else(|| MachineError::Unknown { kind: "letter", name: name.into() })
    }

    /// Parses the text table:
    ///
    /// ```text
    /// initial q0
    /// error qe
    /// shadow qs
    /// blank #
    /// q0 # -> 1 q1 R
    /// ```
    pub fn parse(text: &str) -> Result<MachineSpec, MachineError> {
        let mut states: Vec<String> = Vec::new();
        let mut letters: Vec<String> = Vec::new();
        let intern = |v: &mut Vec<String>, s: &str| match v.iter().position(|x| x == s) {
            Some(i) => i,
            None => {
                v.push(s.to_string());
                v.len() - 1
            }
        };
        let (mut q0, mut qe, mut qs, mut blank) = (None, None, None, None);
        let mut delta = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split("//").next().unwrap().trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: &str| MachineError::Parse { line: i + 1, msg: msg.into() };
            match toks.as_slice() {
                ["initial", s] => q0 = Some(intern(&mut states, s)),
                ["error", s] => qe = Some(intern(&mut states, s)),
                ["shadow", s] => qs = Some(intern(&mut states, s)),
                ["blank", a] => blank = Some(intern(&mut letters, a)),
                ["states", rest @ ..] => {
                    for s in rest {
                        intern(&mut states, s);
                    }
                }
                ["letters", rest @ ..] => {
                    for a in rest {
                        intern(&mut letters, a);
                    }
                }
                [q, a, "->", b, q2, d] => {
                    let d = Move::parse(d).ok_or_else(|| err("direction must be L, R or U"))?;
                    let key = (intern(&mut letters, a), intern(&mut states, q));
                    let val = (intern(&mut letters, b), intern(&mut states, q2), d);
                    if delta.insert(key, val).is_some() {
                        return Err(MachineError::Duplicate { state: q.to_string(), letter: a.to_string() });
                    }
                }
                _ => return Err(err("expected `state letter -> letter state dir`")),
            }
        }
        let spec = MachineSpec {
            q0: q0.ok_or(MachineError::Missing("initial"))?,
            qe: qe.ok_or(MachineError::Missing("error"))?,
            qs: qs.ok_or(MachineError::Missing("shadow"))?,
            blank: blank.ok_or(MachineError::Missing("blank"))?,
            states,
            letters,
            delta,
        };
        for &q in &[spec.qe, spec.qs] {
            for (&(a, s), &(b, q2, d)) in &spec.delta {
                if s == q && (b != a || q2 != q || d != Move::Up) {
                    return Err(MachineError::Special(spec.states[q].clone()));
                }
            }
        }
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "initial {}\nerror {}\nshadow {}\nblank {}\nstates {}\nletters {}\n",
            self.states[self.q0],
            self.states[self.qe],
            self.states[self.qs],
            self.letters[self.blank],
            self.states.join(" "),
            self.letters.join(" ")
        );
        let mut rows: Vec<_> = self.delta.iter().collect();
        rows.sort();
        for (&(a, q), &(b, q2, d)) in rows {
            out += &format!("{} {} -> {} {} {}\n", self.states[q], self.letters[a], self.letters[b], self.states[q2], d.symbol());
        }
        out
    }
}

/// Letter and state at one position; the shadow state means no head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sym {
    pub letter: usize,
    pub state: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceConfig {
    pub width: usize,
    pub height: usize,
    pub columns: Vec<bool>,
    pub rows: Vec<bool>,
    pub bottom: Vec<Sym>,
    /// Head state entering on the left (right) of each row, bottom first.
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub error_dir: Move,
}

impl FaceConfig {
    /// Blank tape, a head in the initial state on the left, every line on.
    pub fn well_initialized(spec: &MachineSpec, width: usize, height: usize) -> FaceConfig {
        let mut bottom = vec![Sym { letter: spec.blank, state: spec.qs }; width];
        if width > 0 {
            bottom[0].state = spec.q0;
        }
        FaceConfig {
            width,
            height,
            columns: vec![true; width],
            rows: vec![true; height],
            bottom,
            left: vec![spec.qs; height],
            right: vec![spec.qs; height],
            error_dir: Move::Left,
        }
    }

    /// Same as [`FaceConfig::well_initialized`] with the given tape letters.
    pub fn with_tape(spec: &MachineSpec, tape: &[usize], height: usize) -> FaceConfig {
        let mut cfg = FaceConfig::well_initialized(spec, tape.len(), height);
        for (s, &a) in cfg.bottom.iter_mut().zip(tape) {
            s.letter = a;
        }
        cfg
    }

    pub fn validate(&self, spec: &MachineSpec) -> Result<(), MachineError> {
        let (w, h) = (self.width, self.height);
        if w == 0 || h == 0 {
            return Err(MachineError::Face("must have positive width and height".into()));
        }
        if self.columns.len() != w || self.bottom.len() != w {
            return Err(MachineError::Face(format!("columns and bottom must have {w} entries")));
        }
        if self.rows.len() != h || self.left.len() != h || self.right.len() != h {
            return Err(MachineError::Face(format!("rows and side entries must have {h} entries")));
        }
        if self.error_dir == Move::Up {
            return Err(MachineError::Face("error direction must be left or right".into()));
        }
        let ns = spec.states.len();
        let bad_state = self.left.iter().chain(&self.right).chain(self.bottom.iter().map(|s| &s.state)).any(|&q| q >= ns);
        if bad_state || self.bottom.iter().any(|s| s.letter >= spec.letters.len()) {
            return Err(MachineError::Face("symbol outside the machine's alphabet".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellRecord {
    /// Symbol received from below.
    pub input: Sym,
    /// Symbol superimposed on the position.
    pub here: Sym,
    /// Symbol sent up.
    pub up: Sym,
    /// Head states sent to the east and west neighbours.
    pub east: usize,
    pub west: usize,
    pub computes: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceTimeDiagram {
    pub width: usize,
    pub height: usize,
    /// Row-major, bottom row first.
    pub cells: Vec<CellRecord>,
}

impl SpaceTimeDiagram {
    pub fn at(&self, row: usize, col: usize) -> &CellRecord {
        &self.cells[row * self.width + col]
    }

    /// Symbols leaving the top row.
    pub fn top_output(&self) -> Vec<Sym> {
        (0..self.width).map(|c| self.at(self.height - 1, c).up).collect()
    }
}

/// Computes the face row by row.
///
/// A head leaving a position counts as an input of the position it moves
/// to even when the position it leaves is itself a collision, so two heads
/// moving towards each other both end in the error state.
pub fn run_face(spec: &MachineSpec, cfg: &FaceConfig) -> Result<SpaceTimeDiagram, MachineError> {
    cfg.validate(spec)?;
    let (w, h, qs) = (cfg.width, cfg.height, spec.qs);
    let mut cells = Vec::with_capacity(w * h);
    let mut below = cfg.bottom.clone();
    for r in 0..h {
        let on = |c: usize| cfg.rows[r] && cfg.columns[c];
        // moves attempted by heads coming from below
        let mut to_east = vec![qs; w];
        let mut to_west = vec![qs; w];
        for c in 0..w {
            if !on(c) || below[c].state == qs {
                continue;
            }
            let (_, q, d) = spec.step(below[c].letter, below[c].state);
            match d {
                Move::Right if c + 1 < w => to_east[c] = q,
                Move::Left if c > 0 => to_west[c] = q,
                _ => {}
            }
        }
        // arrivals travel across non-computing positions
        let mut from_west = vec![qs; w];
        let mut carry = cfg.left[r];
        for c in 0..w {
            from_west[c] = carry;
            if on(c) {
                carry = to_east[c];
            }
        }
        let mut from_east = vec![qs; w];
        let mut carry = cfg.right[r];
        for c in (0..w).rev() {
            from_east[c] = carry;
            if on(c) {
                carry = to_west[c];
            }
        }
        let mut next = Vec::with_capacity(w);
        for c in 0..w {
            let input = below[c];
            let a = input.letter;
            let rec = if !on(c) {
                CellRecord { input, here: input, up: input, east: from_west[c], west: from_east[c], computes: false }
            } else {
                let heads = [input.state, from_west[c], from_east[c]].iter().filter(|&&q| q != qs).count();
                let sym = |state| Sym { letter: a, state };
                let (here, up, east, west) = if heads >= 2 {
                    (sym(spec.qe), sym(spec.qe), qs, qs)
                } else if heads == 0 {
                    (input, input, qs, qs)
                } else if input.state == qs {
                    let q = if from_west[c] != qs { from_west[c] } else { from_east[c] };
                    (sym(q), sym(q), qs, qs)
                } else {
                    let q = input.state;
                    let (b, q2, d) = spec.step(a, q);
                    match d {
                        Move::Up => (sym(q), Sym { letter: b, state: q2 }, qs, qs),
                        Move::Right if c + 1 < w => (sym(q), Sym { letter: b, state: qs }, q2, qs),
                        Move::Left if c > 0 => (sym(q), Sym { letter: b, state: qs }, qs, q2),
                        _ => (sym(q), sym(spec.qe), qs, qs),
                    }
                };
                CellRecord { input, here, up, east, west, computes: true }
            };
            next.push(rec.up);
            cells.push(rec);
        }
        below = next;
    }
    Ok(SpaceTimeDiagram { width: w, height: h, cells })
}

/// Boundaries of the signal layers; `None` means the whole line is clean.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignalOverlay {
    /// First top-row column with an off column or a head in error.
    pub first_error: Option<usize>,
    /// First wrong bottom symbol scanning from the left and from the right.
    pub tape_left: Option<usize>,
    pub tape_right: Option<usize>,
    /// First row from the top whose side entry is not a shadow on an on row.
    pub side_left: Option<usize>,
    pub side_right: Option<usize>,
    pub error_path: Option<ErrorPath>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ErrorPath {
    pub column: usize,
    pub towards: Move,
}

impl ErrorPath {
    /// Positions `(row, column)` the signal crosses: along the top row to
    /// the flank, then down the flank column.
    pub fn cells(&self, width: usize, height: usize) -> Vec<(usize, usize)> {
        let top = height - 1;
        let (cols, flank): (Vec<usize>, usize) = match self.towards {
            Move::Right => ((self.column..width).collect(), width - 1),
            _ => ((0..=self.column).rev().collect(), 0),
        };
        let mut out: Vec<(usize, usize)> = cols.into_iter().map(|c| (top, c)).collect();
        out.extend((0..top).rev().map(|r| (r, flank)));
        out
    }
}

pub fn compute_signals(spec: &MachineSpec, diagram: &SpaceTimeDiagram, cfg: &FaceConfig) -> SignalOverlay {
    let w = cfg.width;
    let top = diagram.top_output();
    let first_error = (0..w).find(|&c| !cfg.columns[c] || top[c].state == spec.qe);
    let expected = |c: usize| Sym { letter: spec.blank, state: if c == 0 { spec.q0 } else { spec.qs } };
    let tape_left = (0..w).find(|&c| cfg.bottom[c] != expected(c));
    let tape_right = (0..w).rev().find(|&c| cfg.bottom[c] != expected(c));
    let side_left = (0..cfg.height).rev().find(|&r| cfg.left[r] != spec.qs || !cfg.rows[r]);
    let side_right = (0..cfg.height).rev().find(|&r| cfg.right[r] != spec.qs);
    let error_path = first_error.map(|column| ErrorPath { column, towards: cfg.error_dir });
    SignalOverlay { first_error, tape_left, tape_right, side_left, side_right, error_path }
}

/// An error signal on a face whose initialization is clean.
pub fn is_forbidden(o: &SignalOverlay) -> bool {
    o.error_path.is_some()
        && o.tape_left.is_none()
        && o.tape_right.is_none()
        && o.side_left.is_none()
        && o.side_right.is_none()
}

/// Configurations of an ordinary single-head run, one per step, as
/// `(tape, head position, state)`. Moving off the tape puts the head in
/// the error state without writing.
pub fn reference_run(spec: &MachineSpec, tape: &[usize], steps: usize) -> Vec<(Vec<usize>, usize, usize)> {
    let mut tape = tape.to_vec();
    let (mut pos, mut q) = (0usize, spec.q0);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        out.push((tape.clone(), pos, q));
        let (b, q2, d) = spec.step(tape[pos], q);
        let target = match d {
            Move::Up => Some(pos),
            Move::Right => (pos + 1 < tape.len()).then_some(pos + 1),
            Move::Left => pos.checked_sub(1),
        };
        match target {
            Some(t) => {
                tape[pos] = b;
                pos = t;
                q = q2;
            }
            None => q = spec.qe,
        }
    }
    out
}

/// First `(row, column)` where the face's inputs differ from the single
/// head run started on `tape`.
pub fn conservativity_mismatch(spec: &MachineSpec, tape: &[usize], height: usize) -> Result<Option<(usize, usize)>, MachineError> {
    let cfg = FaceConfig::with_tape(spec, tape, height);
    let d = run_face(spec, &cfg)?;
    for (r, (t, pos, q)) in reference_run(spec, tape, height).into_iter().enumerate() {
        for c in 0..tape.len() {
            let want = Sym { letter: t[c], state: if c == pos { q } else { spec.qs } };
            if d.at(r, c).input != want {
                return Ok(Some((r, c)));
            }
        }
    }
    Ok(None)
}

const MARKER: &str = "initial q0\nerror qe\nshadow qs\nblank #\nq0 # -> 1 q1 R\nq1 # -> 1 q1 R\n";

const INCREMENTER: &str = "\
initial q0
error qe
shadow qs
blank #
q0 # -> $ inc R
inc # -> 1 back L
inc 0 -> 1 back L
inc 1 -> 0 inc R
back 0 -> 0 back L
back 1 -> 1 back L
back $ -> $ inc R
";

const PALINDROME: &str = "\
initial q0
error qe
shadow qs
blank #
q0 a -> _ ra R
q0 b -> _ rb R
q0 _ -> _ acc U
q0 # -> # acc U
ra a -> a ra R
ra b -> b ra R
ra # -> # ca L
ra _ -> _ ca L
rb a -> a rb R
rb b -> b rb R
rb # -> # cb L
rb _ -> _ cb L
ca a -> _ back L
ca b -> b qe U
ca _ -> _ acc U
cb b -> _ back L
cb a -> a qe U
cb _ -> _ acc U
back a -> a back L
back b -> b back L
back _ -> _ q0 R
";

const FAILING: &str = "\
initial q0
error qe
shadow qs
blank #
q0 # -> x q1 R
q1 # -> x q2 R
q2 # -> ! qe U
";

pub fn marker_machine() -> MachineSpec {
    MachineSpec::parse(MARKER).expect("builtin")
}

/// Keeps a binary counter, least significant bit first, right of a `$`.
pub fn incrementer_machine() -> MachineSpec {
    MachineSpec::parse(INCREMENTER).expect("builtin")
}

/// Checks that the word over `{a, b}` at the left of the tape is a
/// palindrome, entering the error state on a mismatch.
pub fn palindrome_machine() -> MachineSpec {
    MachineSpec::parse(PALINDROME).expect("builtin")
}

/// Writes two marks and then reports an error.
pub fn failing_machine() -> MachineSpec {
    MachineSpec::parse(FAILING).expect("builtin")
}

/// Walks right and, at column `positions(k)`, writes `bits[k]` on a blank
/// or checks it against the letter already there, erring on a mismatch.
pub fn comparator_machine(bits: &[u8], positions: impl Fn(usize) -> usize) -> MachineSpec {
    let mut text = String::from("initial c0\nerror qe\nshadow qs\nblank #\nletters # 0 1\nstates acc\n");
    let targets: HashMap<usize, u8> = bits.iter().enumerate().map(|(k, &b)| (positions(k), b)).collect();
    let last = targets.keys().copied().max().unwrap_or(0);
    for c in 0..=last {
        let next = if c == last { "acc".to_string() } else { format!("c{}", c + 1) };
        let d = if c == last { "U" } else { "R" };
        match targets.get(&c) {
            Some(&b) => {
                let other = 1 - b;
                text += &format!("c{c} # -> {b} {next} {d}\nc{c} {b} -> {b} {next} {d}\nc{c} {other} -> {other} qe U\n");
            }
            None => {
                for a in ["#", "0", "1"] {
                    text += &format!("c{c} {a} -> {a} {next} {d}\n");
                }
            }
        }
    }
    MachineSpec::parse(&text).expect("generated")
}

/// The test suite: name and machine.
pub fn reference_machines() -> Vec<(&'static str, MachineSpec)> {
    vec![
        ("marker", marker_machine()),
        ("incrementer", incrementer_machine()),
        ("palindrome", palindrome_machine()),
        ("comparator", comparator_machine(&[1, 0, 1, 1], |k| 1 + 2 * k)),
        ("failing", failing_machine()),
    ]
}

#[derive(Serialize, Deserialize)]
struct FaceFile {
    width: usize,
    height: usize,
    columns: Option<String>,
    rows: Option<String>,
    bottom: Option<Vec<[String; 2]>>,
    left: Option<Vec<String>>,
    right: Option<Vec<String>>,
    error_dir: Option<Move>,
}

fn mask(s: &Option<String>, n: usize) -> Result<Vec<bool>, MachineError> {
    match s {
        None => Ok(vec![true; n]),
        Some(s) => s
            .chars()
            .map(|ch| match ch {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => Err(MachineError::Face(format!("mask character `{ch}`"))),
            })
            .collect(),
    }
}

/// Reads a face from JSON; omitted fields default to a well-initialized
/// face. Masks are strings of `0` and `1`, sides list states bottom first.
pub fn face_from_json(spec: &MachineSpec, text: &str) -> Result<FaceConfig, MachineError> {
    let f: FaceFile = serde_json::from_str(text).map_err(|e| MachineError::Face(e.to_string()))?;
    let mut cfg = FaceConfig::well_initialized(spec, f.width, f.height);
    cfg.columns = mask(&f.columns, f.width)?;
    cfg.rows = mask(&f.rows, f.height)?;
    if let Some(b) = &f.bottom {
        cfg.bottom = b.iter().map(|[a, q]| Ok(Sym { letter: spec.letter(a)?, state: spec.state(q)? })).collect::<Result<_, MachineError>>()?;
    }
    if let Some(l) = &f.left {
        cfg.left = l.iter().map(|q| spec.state(q)).collect::<Result<_, _>>()?;
    }
    if let Some(r) = &f.right {
        cfg.right = r.iter().map(|q| spec.state(q)).collect::<Result<_, _>>()?;
    }
    if let Some(d) = f.error_dir {
        cfg.error_dir = d;
    }
    cfg.validate(spec)?;
    Ok(cfg)
}

pub fn face_to_json(spec: &MachineSpec, cfg: &FaceConfig) -> String {
    let bits = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
    let f = FaceFile {
        width: cfg.width,
        height: cfg.height,
        columns: Some(bits(&cfg.columns)),
        rows: Some(bits(&cfg.rows)),
        bottom: Some(cfg.bottom.iter().map(|s| [spec.letters[s.letter].clone(), spec.states[s.state].clone()]).collect()),
        left: Some(cfg.left.iter().map(|&q| spec.states[q].clone()).collect()),
        right: Some(cfg.right.iter().map(|&q| spec.states[q].clone()).collect()),
        error_dir: Some(cfg.error_dir),
    };
    serde_json::to_string_pretty(&f).expect("serializable")
}

/// Text rendering of a diagram, top row first; heads print as `letter:state`.
pub struct DiagramText<'a>(pub &'a MachineSpec, pub &'a SpaceTimeDiagram);

impl fmt::Display for DiagramText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (spec, d) = (self.0, self.1);
        for r in (0..d.height).rev() {
            let row: Vec<String> = (0..d.width)
                .map(|c| {
                    let s = d.at(r, c).input;
                    if s.state == spec.qs {
                        spec.letters[s.letter].clone()
                    } else {
                        format!("{}:{}", spec.letters[s.letter], spec.states[s.state])
                    }
                })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}
