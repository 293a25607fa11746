//! Deterministic images: a list of shapes written as SVG or rasterized to
//! a binary PPM.

use std::fmt::Write as _;

use crate::machine::{MachineSpec, SignalOverlay, SpaceTimeDiagram};
use crate::robinson2d::{edge_sigs, robinson, Color, Dir, RobSymbol};
use crate::robinson3d::section;
use crate::sft::{Block, Lattice};

pub type Rgb = [u8; 3];

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Rect { x: f64, y: f64, w: f64, h: f64, fill: Rgb },
    Line { x1: f64, y1: f64, x2: f64, y2: f64, width: f64, color: Rgb },
    Circle { cx: f64, cy: f64, r: f64, fill: Rgb },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub background: Rgb,
    pub shapes: Vec<Shape>,
}

fn hex(c: Rgb) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

impl Scene {
    pub fn new(width: usize, height: usize) -> Scene {
        Scene { width, height, background: [255, 255, 255], shapes: Vec::new() }
    }

    pub fn to_svg(&self) -> String {
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
            self.width, self.height, self.width, self.height
        );
        let _ = writeln!(s, "<rect width=\"{}\" height=\"{}\" fill=\"{}\"/>", self.width, self.height, hex(self.background));
        for sh in &self.shapes {
            let _ = match *sh {
                Shape::Rect { x, y, w, h, fill } => {
                    writeln!(s, "<rect x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{h}\" fill=\"{}\"/>", hex(fill))
                }
                Shape::Line { x1, y1, x2, y2, width, color } => writeln!(
                    s,
                    "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"{}\" stroke-width=\"{width}\" stroke-linecap=\"square\"/>",
                    hex(color)
                ),
                Shape::Circle { cx, cy, r, fill } => {
                    writeln!(s, "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"{r}\" fill=\"{}\"/>", hex(fill))
                }
            };
        }
        s.push_str("</svg>\n");
        s
    }

    /// Pixel centers inside a shape get its color; later shapes win.
    pub fn rasterize(&self) -> Vec<Rgb> {
        let (w, h) = (self.width, self.height);
        let mut px = vec![self.background; w * h];
        let clamp = |v: f64, hi: usize| (v.max(0.0) as usize).min(hi);
        for sh in &self.shapes {
            let (x0, y0, x1, y1, color) = match *sh {
                Shape::Rect { x, y, w: rw, h: rh, fill } => (x, y, x + rw, y + rh, fill),
                Shape::Line { x1, y1, x2, y2, width, color } => {
                    let half = width / 2.0;
                    (x1.min(x2) - half, y1.min(y2) - half, x1.max(x2) + half, y1.max(y2) + half, color)
                }
                Shape::Circle { cx, cy, r, fill } => (cx - r, cy - r, cx + r, cy + r, fill),
            };
            for py in clamp(y0.floor(), h)..clamp(y1.ceil(), h) {
                for pxx in clamp(x0.floor(), w)..clamp(x1.ceil(), w) {
                    let (cx, cy) = (pxx as f64 + 0.5, py as f64 + 0.5);
                    let inside = match *sh {
                        Shape::Circle { cx: ox, cy: oy, r, .. } => (cx - ox).powi(2) + (cy - oy).powi(2) <= r * r,
                        Shape::Line { x1, y1, x2, y2, width, .. } => {
                            // distance from the segment
                            let (dx, dy) = (x2 - x1, y2 - y1);
                            let len2 = dx * dx + dy * dy;
                            let t = if len2 == 0.0 { 0.0 } else { (((cx - x1) * dx + (cy - y1) * dy) / len2).clamp(0.0, 1.0) };
                            let (qx, qy) = (x1 + t * dx, y1 + t * dy);
                            (cx - qx).abs().max((cy - qy).abs()) <= width / 2.0
                        }
                        Shape::Rect { .. } => cx >= x0 && cx < x1 && cy >= y0 && cy < y1,
                    };
                    if inside {
                        px[py * w + pxx] = color;
                    }
                }
            }
        }
        px
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for p in self.rasterize() {
            out.extend_from_slice(&p);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Svg,
    Ppm,
}

impl ImageFormat {
    pub fn parse(s: &str) -> Option<ImageFormat> {
        match s.to_ascii_lowercase().as_str() {
            "svg" => Some(ImageFormat::Svg),
            "ppm" => Some(ImageFormat::Ppm),
            _ => None,
        }
    }

    pub fn encode(self, scene: &Scene) -> Vec<u8> {
        match self {
            ImageFormat::Svg => scene.to_svg().into_bytes(),
            ImageFormat::Ppm => scene.to_ppm(),
        }
    }
}

/// A fixed color per symbol id, spread around a muted hue wheel.
pub fn palette(id: u32) -> Rgb {
    let h = (id.wrapping_mul(2_654_435_761) >> 8) % 360;
    let (s, l) = (0.45, 0.62 + 0.1 * ((id % 3) as f64 - 1.0));
    hsl(h as f64, s, l)
}

fn hsl(h: f64, s: f64, l: f64) -> Rgb {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
    let m = l - c / 2.0;
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let f = |v: f64| ((v + m) * 255.0).round() as u8;
    [f(r), f(g), f(b)]
}

/// One square per position of a 2D block, north up.
pub fn block_scene(b: &Block, cell: usize, color: impl Fn(u32) -> Rgb) -> Scene {
    assert_eq!(b.dim(), 2, "2D block");
    let s = b.side();
    let mut scene = Scene::new(s * cell, s * cell);
    let c = cell as f64;
    for x in 0..s {
        for y in 0..s {
            let id = b.at2(x as i32, y as i32).unwrap();
            let top = (s - 1 - y) as f64 * c;
            scene.shapes.push(Shape::Rect { x: x as f64 * c, y: top, w: c, h: c, fill: color(id) });
        }
    }
    scene
}

const BLUE: Rgb = [70, 110, 200];
const RED: Rgb = [205, 80, 70];
const ARROW: Rgb = [228, 228, 222];
const INK: Rgb = [30, 30, 40];

/// A Robinson block: corners in their color, arrows pale, and the lines
/// of every tile drawn from its center to each edge they cross.
pub fn robinson_scene(b: &Block, cell: usize) -> Scene {
    let rob = robinson();
    let fill = |id: u32| match rob.tile(id).layer1 {
        RobSymbol::Corner { color: Color::Blue, value, .. } => if value == 0 { BLUE } else { [110, 150, 230] },
        RobSymbol::Corner { color: Color::Red, value, .. } => if value == 0 { RED } else { [235, 130, 110] },
        RobSymbol::Arrow { .. } => ARROW,
    };
    let mut scene = block_scene(b, cell, fill);
    let s = b.side();
    let c = cell as f64;
    for x in 0..s {
        for y in 0..s {
            let id = b.at2(x as i32, y as i32).unwrap();
            let sigs = edge_sigs(&rob.tile(id).layer1);
            let (cx, cy) = ((x as f64 + 0.5) * c, ((s - 1 - y) as f64 + 0.5) * c);
            for (k, d) in Dir::ALL.iter().enumerate() {
                if sigs[k].count == 0 {
                    continue;
                }
                let (dx, dy) = d.vec();
                let width = if sigs[k].count > 1 { c / 4.0 } else { c / 8.0 };
                scene.shapes.push(Shape::Line {
                    x1: cx,
                    y1: cy,
                    x2: cx + dx as f64 * c / 2.0,
                    y2: cy - dy as f64 * c / 2.0,
                    width,
                    color: INK,
                });
            }
        }
    }
    scene
}

/// The Robinson tiling seen by copy `axis` on the slice `x_axis = index`
/// of a 3D supertile.
pub fn slice_scene(b: &Block, axis: usize, index: i32, cell: usize) -> Scene {
    robinson_scene(&section(b, axis, index), cell)
}

const GREEN: Rgb = [154, 205, 50];
const SALMON: Rgb = [250, 128, 114];
const PURPLE: Rgb = [128, 0, 128];
const ERROR: Rgb = [200, 30, 30];
const HEAD: Rgb = [20, 20, 20];
const OFF: Rgb = [200, 200, 200];

/// A space-time diagram, bottom row at the bottom, framed by the signal
/// layers: the first-error split above, the empty-tape pair below, the
/// empty-sides splits on the flanks and the error path in purple.
pub fn machine_scene(spec: &MachineSpec, d: &SpaceTimeDiagram, o: &SignalOverlay, cell: usize) -> Scene {
    let (w, h) = (d.width, d.height);
    let c = cell as f64;
    let band = (cell / 3).max(2) as f64;
    let mut scene = Scene::new(w * cell + 2 * band as usize, h * cell + 3 * band as usize);
    let (ox, oy) = (band, band);
    let top_of = |r: usize| oy + (h - 1 - r) as f64 * c;
    for r in 0..h {
        for col in 0..w {
            let rec = d.at(r, col);
            let (x, y) = (ox + col as f64 * c, top_of(r));
            let fill = if rec.computes { palette(rec.here.letter as u32) } else { OFF };
            scene.shapes.push(Shape::Rect { x, y, w: c, h: c, fill });
            if rec.here.state != spec.qs {
                let color = if rec.here.state == spec.qe { ERROR } else { HEAD };
                scene.shapes.push(Shape::Circle { cx: x + c / 2.0, cy: y + c / 2.0, r: c / 4.0, fill: color });
            }
        }
    }
    let split = |s: Option<usize>, i: usize| if s.is_none_or(|s| i < s) { GREEN } else { SALMON };
    for col in 0..w {
        let x = ox + col as f64 * c;
        scene.shapes.push(Shape::Rect { x, y: 0.0, w: c, h: band, fill: split(o.first_error, col) });
        let bottom = oy + h as f64 * c;
        let left = split(o.tape_left, col);
        let right = if o.tape_right.is_none_or(|s| col > s) { GREEN } else { SALMON };
        scene.shapes.push(Shape::Rect { x, y: bottom, w: c, h: band, fill: left });
        scene.shapes.push(Shape::Rect { x, y: bottom + band, w: c, h: band, fill: right });
    }
    for r in 0..h {
        let y = top_of(r);
        let side = |s: Option<usize>| if s.is_none_or(|s| r > s) { GREEN } else { SALMON };
        scene.shapes.push(Shape::Rect { x: 0.0, y, w: band, h: c, fill: side(o.side_left) });
        scene.shapes.push(Shape::Rect { x: ox + w as f64 * c, y, w: band, h: c, fill: side(o.side_right) });
    }
    if let Some(path) = &o.error_path {
        for (r, col) in path.cells(w, h) {
            let (x, y) = (ox + col as f64 * c, top_of(r));
            scene.shapes.push(Shape::Rect { x: x + c / 3.0, y: y + c / 3.0, w: c / 3.0, h: c / 3.0, fill: PURPLE });
        }
    }
    scene
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{compute_signals, failing_machine, run_face, FaceConfig};
    use crate::robinson2d::{build_supertile, Orient};

    #[test]
    fn ppm_header_and_size() {
        let b = build_supertile(1, Orient::Sw).unwrap();
        let scene = robinson_scene(&b, 8);
        let ppm = scene.to_ppm();
        let header = format!("P6\n{} {}\n255\n", scene.width, scene.height);
        assert!(ppm.starts_with(header.as_bytes()));
        assert_eq!(ppm.len(), header.len() + 3 * scene.width * scene.height);
    }

    #[test]
    fn images_are_stable() {
        let b = build_supertile(2, Orient::Ne).unwrap();
        assert_eq!(robinson_scene(&b, 6).to_svg(), robinson_scene(&b, 6).to_svg());
        assert_eq!(robinson_scene(&b, 6).to_ppm(), robinson_scene(&b, 6).to_ppm());
        assert!(robinson_scene(&b, 6).to_svg().starts_with("<svg"));
    }

    #[test]
    fn rasterized_rect() {
        let mut s = Scene::new(4, 4);
        s.shapes.push(Shape::Rect { x: 1.0, y: 1.0, w: 2.0, h: 2.0, fill: [1, 2, 3] });
        let px = s.rasterize();
        assert_eq!(px.iter().filter(|&&p| p == [1, 2, 3]).count(), 4);
        assert_eq!(px[5], [1, 2, 3]);
    }

    #[test]
    fn machine_image() {
        let m = failing_machine();
        let cfg = FaceConfig::well_initialized(&m, 6, 5);
        let d = run_face(&m, &cfg).unwrap();
        let o = compute_signals(&m, &d, &cfg);
        let svg = machine_scene(&m, &d, &o, 12).to_svg();
        assert!(svg.contains(&hex(PURPLE)));
    }
}
