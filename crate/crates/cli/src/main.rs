use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_rational::BigRational;
use serde_json::{json, Value};

use sftlab::census::{self, ComplexityCurve, Method};
use sftlab::counters::{self, Pi1Sequence, ProductRotation};
use sftlab::formats;
use sftlab::hierarchy::{self, BitAssignments, CellTree, HColor, Mode};
use sftlab::machine::{self, FaceConfig, MachineSpec};
use sftlab::render::{self, ImageFormat};
use sftlab::robinson2d::{self as r2, robinson, Orient};
use sftlab::robinson3d::{self as r3, Orientation3};
use sftlab::{check_locally_admissible, Block, SftSpec};

#[derive(Parser)]
#[command(name = "sftlab", version, about = "Subshifts of finite type: Robinson hierarchies, census, counters and machines")]
struct Cli {
    /// Worker threads for the census and 3D builders.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed for randomized generators; core computations ignore it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Robinson tile set inventory.
    Tileset {
        #[arg(long)]
        table: bool,
        /// Write the tile set as an `sft v1` file.
        #[arg(long)]
        emit_sft: Option<PathBuf>,
    },
    /// Build a 2D supertile.
    Supertile(SupertileArgs),
    /// Build a 3D supertile from an orientation triple.
    Supertile3(Supertile3Args),
    /// Pattern census and entropy-dimension estimates.
    Census {
        #[command(subcommand)]
        cmd: CensusCmd,
    },
    /// Complete admissible Robinson blocks into supertiles.
    Complete {
        /// Check every admissible k-block.
        #[arg(long, conflicts_with = "block")]
        k: Option<usize>,
        /// Complete one block given in pattern format.
        #[arg(long)]
        block: Option<PathBuf>,
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
    },
    /// Search for periodic points.
    Periodic {
        #[arg(long, conflicts_with = "robinson")]
        sft: Option<PathBuf>,
        #[arg(long)]
        robinson: bool,
        #[arg(long, default_value_t = 8)]
        max_period: usize,
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
    },
    /// Fermat counters, rotations and parameter selection.
    Counters {
        #[command(subcommand)]
        cmd: CountersCmd,
    },
    /// Hierarchy-bit simulation and random-bit budgets.
    Hier {
        #[command(subcommand)]
        cmd: HierCmd,
    },
    /// Run machines on faces.
    Machine {
        #[command(subcommand)]
        cmd: MachineCmd,
    },
    /// Write images.
    Render {
        #[command(subcommand)]
        cmd: RenderCmd,
    },
}

#[derive(Args)]
struct SupertileArgs {
    #[arg(long)]
    order: u32,
    #[arg(long, value_parser = parse_orient)]
    orient: Orient,
    /// Check local admissibility.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    petals: bool,
    #[arg(long)]
    cells: bool,
    /// Verify that order-m supertiles repeat with period 2^(m+2).
    #[arg(long)]
    repetition: Option<u32>,
    /// Write the block (`.json` for JSON, otherwise text).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Supertile3Args {
    #[arg(long)]
    order: u32,
    /// Three orientations, e.g. `ne,ne,ne`.
    #[arg(long, value_parser = parse_orient3)]
    orient: Orientation3,
    #[arg(long)]
    check: bool,
    #[arg(long)]
    cells: bool,
    #[arg(long)]
    colors: bool,
    #[arg(long)]
    repetition: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Bf,
    Bt,
    Transfer,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Bf => Method::Bruteforce,
            MethodArg::Bt => Method::Backtracking,
            MethodArg::Transfer => Method::Transfer,
        }
    }
}

#[derive(Subcommand)]
enum CensusCmd {
    /// Number of admissible n-blocks.
    Count {
        #[arg(long)]
        sft: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "bt")]
        method: MethodArg,
        #[arg(long, default_value_t = 100_000_000)]
        budget: u64,
    },
    /// Counts for n = 1..max-n and the estimate of the entropy dimension.
    Curve {
        #[arg(long)]
        sft: PathBuf,
        #[arg(long)]
        max_n: usize,
        #[arg(long, value_enum, default_value = "bt")]
        method: MethodArg,
        #[arg(long, default_value_t = 100_000_000)]
        budget: u64,
    },
    /// Low-complexity block whose sub-boxes are fixed by their annuli.
    LowComplexity {
        #[arg(long)]
        sft: PathBuf,
        #[arg(long)]
        n: u32,
    },
}

#[derive(Subcommand)]
enum CountersCmd {
    /// Simulated and analytic period of a counter.
    Period {
        #[arg(long)]
        size: u64,
        #[arg(long)]
        width: u32,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Fermat numbers F_0..F_upto and their pairwise gcds.
    Coprime {
        #[arg(long)]
        upto: u32,
    },
    /// Orbit of a product rotation from the zero vector.
    Orbit {
        #[arg(long, value_delimiter = ',')]
        moduli: Vec<u64>,
        /// Explicit steps; default is the hierarchical vector for `--p`.
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<u64>>,
        #[arg(long, default_value_t = 1)]
        p: u32,
        #[arg(long, default_value_t = 100_000_000)]
        budget: u64,
    },
    /// Approximation of the frequency limit of a sequence.
    Delta2 {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 64)]
        depth: u64,
        /// Periodic table of values, e.g. `1,0,1`; default all ones.
        #[arg(long, value_delimiter = ',')]
        periodic: Option<Vec<u8>>,
    },
    /// Parameters reaching a target entropy dimension.
    Select {
        #[arg(long)]
        x: String,
    },
    /// Size of the counter alphabet.
    Alphabet {
        #[arg(long)]
        l: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RootArg {
    Purple,
    Gray,
}

impl From<RootArg> for HColor {
    fn from(r: RootArg) -> HColor {
        match r {
            RootArg::Purple => HColor::Purple,
            RootArg::Gray => HColor::Gray,
        }
    }
}

#[derive(Subcommand)]
enum HierCmd {
    /// Simulate a coloring; levels follow the length of `--bits`.
    Simulate {
        #[arg(long, default_value_t = 3)]
        p: u32,
        #[arg(long, value_parser = parse_bits)]
        bits: Bits,
        #[arg(long)]
        construction: bool,
        #[arg(long, value_enum, default_value = "purple")]
        root: RootArg,
    },
    /// The count d_k, closed form against simulation.
    Dk {
        #[arg(long, default_value_t = 3)]
        p: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, value_parser = parse_bits)]
        bits: Bits,
    },
    /// Random-bit budget of an order 2qp+2 supertile.
    Budget {
        #[arg(long, default_value_t = 3)]
        p: u32,
        #[arg(long)]
        q: u64,
        #[arg(long, value_parser = parse_bits)]
        bits: Bits,
        #[arg(long)]
        construction: bool,
    },
    /// Active columns of an order-n face.
    Columns {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 3)]
        p: u64,
    },
    /// Entropy dimension 1/p + z(1 - 1/2p).
    Dimension {
        #[arg(long, default_value_t = 3)]
        p: u64,
        #[arg(long)]
        z: String,
    },
    /// Upper and lower estimates at scale n.
    Bounds {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 3)]
        p: u32,
        #[arg(long, value_parser = parse_bits)]
        bits: Bits,
        #[arg(long, default_value_t = 1)]
        l: u32,
    },
}

#[derive(Subcommand)]
enum MachineCmd {
    /// Run a machine on a face and compute its signals.
    Run {
        #[arg(long, conflicts_with = "builtin")]
        spec: Option<PathBuf>,
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long, conflicts_with_all = ["width", "height"])]
        face: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        width: usize,
        #[arg(long, default_value_t = 16)]
        height: usize,
        #[arg(long)]
        render: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        cell: usize,
        /// Print the diagram.
        #[arg(long)]
        show: bool,
    },
    /// Builtin machines.
    List,
}

#[derive(Subcommand)]
enum RenderCmd {
    Supertile {
        #[arg(long)]
        order: u32,
        #[arg(long, value_parser = parse_orient)]
        orient: Orient,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        cell: usize,
    },
    /// A slice of a 3D supertile: `--slice axis=K index=I`.
    Supertile3 {
        #[arg(long)]
        order: u32,
        #[arg(long, value_parser = parse_orient3)]
        orient: Orientation3,
        #[arg(long, num_args = 2, value_names = ["axis=K", "index=I"])]
        slice: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        cell: usize,
    },
    /// A 2D pattern file; Robinson tile names get tile glyphs.
    Pattern {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        cell: usize,
    },
}

#[derive(Clone, Debug)]
struct Bits(Vec<u8>);

fn parse_bits(s: &str) -> Result<Bits, String> {
    s.chars()
        .filter(|c| *c != ',')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(format!("bit `{c}` is not 0 or 1")),
        })
        .collect::<Result<_, _>>()
        .map(Bits)
}

fn parse_orient(s: &str) -> Result<Orient, String> {
    Orient::parse(s).ok_or_else(|| format!("orientation `{s}` is not one of sw, se, nw, ne"))
}

fn parse_orient3(s: &str) -> Result<Orientation3, String> {
    let v: Vec<Orient> = s.split(',').map(parse_orient).collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three orientations".to_string())
}

/// Failure of a computation (exit 1), as opposed to bad input (exit 2).
#[derive(Debug)]
struct DomainError {
    class: String,
    message: String,
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.class, self.message)
    }
}

impl std::error::Error for DomainError {}

/// Variant path read off the debug form, e.g. `Census::Incomplete`.
fn class_of<E: fmt::Debug>(e: &E) -> String {
    let dbg = format!("{e:?}");
    let mut parts = Vec::new();
    let mut rest = dbg.as_str();
    loop {
        let name: String = rest.chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect();
        if name.is_empty() {
            break;
        }
        rest = &rest[name.len()..];
        parts.push(name);
        match rest.strip_prefix('(') {
            Some(r) => rest = r,
            None => break,
        }
    }
    let ty = std::any::type_name::<E>().rsplit("::").next().unwrap_or("");
    let prefix = ty.strip_suffix("Error").unwrap_or(ty);
    if !prefix.is_empty() && parts.first().map(String::as_str) != Some(prefix) {
        parts.insert(0, prefix.to_string());
    }
    parts.join("::")
}

fn domain<E: fmt::Debug + fmt::Display>(e: E) -> anyhow::Error {
    anyhow::Error::new(DomainError { class: class_of(&e), message: e.to_string() })
}

trait OrDomain<T> {
    fn dom(self) -> Result<T>;
}

impl<T, E: fmt::Debug + fmt::Display> OrDomain<T> for std::result::Result<T, E> {
    fn dom(self) -> Result<T> {
        self.map_err(domain)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_sft(path: &Path) -> Result<SftSpec> {
    formats::sft_from_text(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn image_format(path: &Path) -> Result<ImageFormat> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    ImageFormat::parse(ext).ok_or_else(|| anyhow!("output must end in .svg or .ppm"))
}

fn tile_names() -> Vec<String> {
    robinson().tiles().iter().map(|t| t.name()).collect()
}

fn write_block(path: &Path, b: &Block, names: &[String]) -> Result<()> {
    let p = b.to_pattern();
    let text = if path.extension().is_some_and(|e| e == "json") {
        formats::pattern_to_json(&p, names)
    } else {
        formats::pattern_to_text(&p, names)
    };
    write(path, text.as_bytes())
}

fn big(b: &BigUint) -> Value {
    Value::String(b.to_string())
}

fn run(cli: Cli) -> Result<Value> {
    match cli.cmd {
        Cmd::Tileset { table, emit_sft } => {
            let rob = robinson();
            let sft = rob.sft();
            if table {
                print!("{}", r2::tile_table());
            }
            if let Some(p) = emit_sft {
                write(&p, formats::sft_to_text(sft).as_bytes())?;
            }
            let corners = rob.tiles().iter().filter(|t| t.layer1.is_corner()).count();
            println!("tiles: {}", rob.tiles().len());
            println!("corner tiles: {corners}");
            println!("forbidden patterns: {}", sft.forbidden().len());
            Ok(json!({"tiles": rob.tiles().len(), "corners": corners, "forbidden": sft.forbidden().len()}))
        }
        Cmd::Supertile(a) => supertile(a),
        Cmd::Supertile3(a) => supertile3(a),
        Cmd::Census { cmd } => census_cmd(cmd),
        Cmd::Complete { k, block, budget } => complete(k, block, budget),
        Cmd::Periodic { sft, robinson: rob, max_period, budget } => {
            let spec = match (&sft, rob) {
                (Some(p), _) => load_sft(p)?,
                (None, true) => r2::robinson_sft(),
                (None, false) => return Err(anyhow!("give --sft FILE or --robinson")),
            };
            let w = census::periodic_search(&spec, max_period, budget).dom()?;
            match &w {
                Some(w) => println!("periodic point with periods {:?}", w.periods),
                None => println!("no periodic point with periods <= {max_period}"),
            }
            Ok(json!({"max_period": max_period, "found": w.is_some(), "periods": w.map(|w| w.periods)}))
        }
        Cmd::Counters { cmd } => counters_cmd(cmd),
        Cmd::Hier { cmd } => hier_cmd(cmd),
        Cmd::Machine { cmd } => machine_cmd(cmd),
        Cmd::Render { cmd } => render_cmd(cmd),
    }
}

fn supertile(a: SupertileArgs) -> Result<Value> {
    let b = r2::build_supertile(a.order, a.orient).dom()?;
    println!("order {} {} supertile, side {}", a.order, a.orient.name(), b.side());
    let mut out = json!({"order": a.order, "orient": a.orient.name(), "side": b.side()});
    if a.check {
        let v = check_locally_admissible(&b, robinson().sft()).dom()?;
        println!("violations: {}", v.len());
        out["violations"] = json!(v.len());
    }
    if a.petals {
        let petals = r2::find_petals(&b);
        let mut by_order = std::collections::BTreeMap::<u32, usize>::new();
        for p in &petals {
            *by_order.entry(p.order).or_default() += 1;
        }
        for (o, n) in &by_order {
            println!("petals of order {o}: {n}");
        }
        out["petals"] = json!(by_order);
    }
    if a.cells {
        let cells = r2::find_cells(&b);
        println!("cells: {}", cells.len());
        out["cells"] = json!(cells);
    }
    if let Some(m) = a.repetition {
        let ok = r2::verify_repetition(&b, m).dom()?;
        let period = r2::repetition_period(&b, m).dom()?;
        println!("order-{m} supertiles repeat with period {period:?}: {ok}");
        out["repetition"] = json!({"m": m, "ok": ok, "period": period});
    }
    if let Some(p) = &a.out {
        write_block(p, &b, &tile_names())?;
    }
    Ok(out)
}

fn orient3_name(t: &Orientation3) -> String {
    t.iter().map(|o| o.name()).collect::<Vec<_>>().join(",")
}

fn supertile3(a: Supertile3Args) -> Result<Value> {
    let b = r3::build_supertile3(a.order, a.orient).dom()?;
    println!("order {} ({}) 3D supertile, side {}", a.order, orient3_name(&a.orient), b.side());
    let mut out = json!({"order": a.order, "orient": orient3_name(&a.orient), "side": b.side()});
    if a.check {
        let v = r3::check_coincidence(&b);
        println!("violations: {}", v.len());
        for x in v.iter().take(10) {
            eprintln!("  {:?} at {:?}", x.rule, x.at);
        }
        out["violations"] = json!(v.len());
    }
    if a.cells {
        let cells = r3::find_cells3(&b);
        println!("cells: {}", cells.len());
        out["cells"] = json!(cells);
    }
    if a.colors {
        let h = r3::classify_colors(&b).histogram();
        println!("colors none/light/medium/dark: {h:?}");
        out["colors"] = json!(h);
    }
    if let Some(m) = a.repetition {
        let ok = r3::verify_repetition3(&b, m).dom()?;
        println!("order-{m} cubes repeat: {ok}");
        out["repetition"] = json!({"m": m, "ok": ok});
    }
    if let Some(p) = &a.out {
        let (pat, names) = r3::to_named_pattern(&b);
        let text = if p.extension().is_some_and(|e| e == "json") {
            formats::pattern_to_json(&pat, &names)
        } else {
            formats::pattern_to_text(&pat, &names)
        };
        write(p, text.as_bytes())?;
    }
    Ok(out)
}

fn census_cmd(cmd: CensusCmd) -> Result<Value> {
    match cmd {
        CensusCmd::Count { sft, n, method, budget } => {
            let spec = load_sft(&sft)?;
            let r = census::count_blocks(&spec, n, method.into(), budget).dom()?;
            println!("{}", r.count);
            eprintln!("method {} in {:?}", r.method.short(), r.elapsed);
            Ok(json!({"n": n, "count": big(&r.count), "method": r.method.short()}))
        }
        CensusCmd::Curve { sft, max_n, method, budget } => {
            let spec = load_sft(&sft)?;
            let mut curve = ComplexityCurve::default();
            for n in 1..=max_n {
                let r = census::count_blocks(&spec, n, method.into(), budget).dom()?;
                curve.points.push((n, r.count));
            }
            print!("{}", curve.to_csv());
            let est = census::entropy_dim_estimate(&curve).ok();
            if let Some(e) = &est {
                println!("estimate: upper {:.6}, lower {:.6}", e.upper, e.lower);
            }
            Ok(json!({
                "points": curve.points.iter().map(|(n, c)| json!([n, big(c)])).collect::<Vec<_>>(),
                "upper": est.as_ref().map(|e| e.upper),
                "lower": est.as_ref().map(|e| e.lower),
            }))
        }
        CensusCmd::LowComplexity { sft, n } => {
            let spec = load_sft(&sft)?;
            let lc = census::build_low_complexity(&spec, n, None).dom()?;
            let mut levels = Vec::new();
            for k in 0..=n {
                let det = lc.sub_block_determination(k);
                let distinct = lc.distinct_blocks(k).dom()?;
                let bound = census::obstruction_bound_check(&lc, spec.alphabet_len(), k).dom()?;
                println!("level {k}: side {}, determined {det}, distinct {distinct}, bound {bound}", census::r_k(lc.r, k));
                levels.push(json!({"k": k, "side": census::r_k(lc.r, k), "determined": det, "distinct": distinct, "bound": bound}));
            }
            let v = check_locally_admissible(&lc.block, &spec).dom()?;
            println!("violations: {}", v.len());
            Ok(json!({"side": lc.block.side(), "violations": v.len(), "levels": levels}))
        }
    }
}

fn complete(k: Option<usize>, block: Option<PathBuf>, budget: u64) -> Result<Value> {
    if let Some(k) = k {
        let rep = r2::completion_report(k, budget).dom()?;
        println!("admissible {k}-blocks: {}", rep.admissible);
        println!("completed in order-{} supertiles: {}", rep.order, rep.completed);
        println!("completed in every orientation: {}", rep.in_every_orientation);
        println!("missing: {}", rep.missing.len());
        return Ok(json!({
            "k": k,
            "order": rep.order,
            "admissible": rep.admissible,
            "completed": rep.completed,
            "every_orientation": rep.in_every_orientation,
            "missing": rep.missing.len(),
        }));
    }
    let path = block.ok_or_else(|| anyhow!("give --k or --block"))?;
    let (pat, names) = formats::read_pattern(&read(&path)?)?;
    let all = tile_names();
    let ids: Vec<u32> = names
        .iter()
        .map(|n| all.iter().position(|t| t == n).map(|i| i as u32).ok_or_else(|| anyhow!("`{n}` is not a Robinson tile")))
        .collect::<Result<_>>()?;
    let pat = sftlab::map_symbols(&pat, &ids).dom()?;
    let b = Block::from_pattern(&pat).dom()?;
    let c = r2::complete_block(&b).dom()?;
    println!("completed in order-{} {} supertile at {:?}", c.order, c.orient.name(), c.at);
    Ok(json!({"order": c.order, "orient": c.orient.name(), "at": [c.at.0, c.at.1]}))
}

fn counters_cmd(cmd: CountersCmd) -> Result<Value> {
    match cmd {
        CountersCmd::Period { size, width, budget } => {
            let run = counters::measured_period(size, width, budget).dom()?;
            let want = counters::analytic_period(size, width);
            println!("period {} (size^width + 1 = {want}), freezes {}", run.period, run.freezes);
            Ok(json!({"size": size, "width": width, "period": run.period, "analytic": big(&want), "freezes": run.freezes}))
        }
        CountersCmd::Coprime { upto } => {
            let fs: Vec<BigUint> = (0..=upto).map(counters::fermat).collect();
            let ok = counters::pairwise_coprime(&fs);
            println!("pairwise coprime: {ok}");
            Ok(json!({"upto": upto, "coprime": ok}))
        }
        CountersCmd::Orbit { moduli, steps, p, budget } => {
            let r = match steps {
                Some(s) => ProductRotation::new(moduli, s),
                None => ProductRotation::hierarchical(moduli, p),
            }
            .dom()?;
            let start = vec![0; r.moduli.len()];
            let (full, len) = counters::orbit_is_full(&r, &start, budget).dom()?;
            println!("steps {:?}: orbit length {len}, full: {full}", r.steps);
            Ok(json!({"moduli": r.moduli, "steps": r.steps, "length": len, "full": full}))
        }
        CountersCmd::Delta2 { n, depth, periodic } => {
            let seq = match periodic {
                Some(v) => Pi1Sequence::periodic(v),
                None => Pi1Sequence::constant(1),
            };
            let v = counters::delta2_approx(&seq, n, depth).dom()?;
            println!("approximation at n = {n}: {v}");
            Ok(json!({"n": n, "value": v.to_string(), "float": counters::ratio_f64(&v)}))
        }
        CountersCmd::Select { x } => {
            let x = counters::parse_ratio(&x).ok_or_else(|| anyhow!("`{x}` is not a number"))?;
            let s = counters::select_params(&x).dom()?;
            println!("m = {}, p = {}, z = {} (~{:.12}), residual {:e}", s.m, s.p, s.z, s.z_f64, s.residual);
            Ok(serde_json::to_value(&s)?)
        }
        CountersCmd::Alphabet { l } => {
            let a = counters::CounterAlphabet::new(l).dom()?;
            println!("alphabet size {}, maximum {}", a.size(), a.c_max());
            Ok(json!({"l": l, "size": a.size(), "log2_full": counters::counter_alphabet_log2(l, counters::normalized_d_exp(l))}))
        }
    }
}

fn hier_cmd(cmd: HierCmd) -> Result<Value> {
    match cmd {
        HierCmd::Simulate { p, bits, construction, root } => {
            let (mode, assign) = if construction {
                (Mode::Construction, BitAssignments::construction(&bits.0))
            } else {
                (Mode::Pure, BitAssignments::pure(&bits.0))
            };
            let tree = CellTree { p, depth: bits.0.len() as u32, mode };
            let c = hierarchy::assign_hierarchy_bits(&tree, &assign, root.into()).dom()?;
            for l in &c.levels {
                println!("level {}: purple {}, gray {}", l.level, l.purple, l.gray);
            }
            let corners = hierarchy::purple_corner_count(&c);
            println!("purple corners: {corners}");
            Ok(json!({"tree": tree, "levels": c.levels, "purple_corners": big(&corners)}))
        }
        HierCmd::Dk { p, k, bits } => {
            let len = 1usize << k;
            if bits.0.len() < len {
                return Err(anyhow!("need {len} bits"));
            }
            let ck = bits.0[..len].iter().filter(|&&b| b == 1).count() as u64;
            let exact = hierarchy::d_k_exact(p, k, ck).dom()?;
            let sim = hierarchy::d_k_simulated(p, k, &bits.0).dom()?;
            let checked = hierarchy::d_k(p, k, ck).map_err(|e| e.to_string());
            println!("d_{k} = {exact} (c_{k} = {ck}), simulated {sim}");
            if let Err(e) = &checked {
                println!("warning: {e}");
            }
            Ok(json!({"p": p, "k": k, "c_k": ck, "formula": exact.to_string(), "simulated": big(&sim), "valid": checked.is_ok()}))
        }
        HierCmd::Budget { p, q, bits, construction } => {
            let rep = hierarchy::lambda_bounds(p, q, &bits.0, construction).dom()?;
            println!("lambda1 = {}, lambda2 = {}", rep.lambda1, rep.lambda2);
            println!("bounds: {} <= log2 r_q ~ {:.3} <= {}: {}", rep.lower, rep.log2_rq, rep.upper, rep.within_bounds);
            Ok(serde_json::to_value(&rep)?)
        }
        HierCmd::Columns { n, p } => {
            let a = hierarchy::active_columns(n, p).dom()?;
            println!("active columns: {a}");
            Ok(json!({"n": n, "p": p, "active": big(&a)}))
        }
        HierCmd::Dimension { p, z } => {
            let z: BigRational = counters::parse_ratio(&z).ok_or_else(|| anyhow!("`{z}` is not a number"))?;
            let d = hierarchy::xz_entropy_dimension(p, &z).dom()?;
            println!("dimension {d} (~{:.12})", counters::ratio_f64(&d));
            Ok(json!({"p": p, "z": z.to_string(), "dimension": d.to_string()}))
        }
        HierCmd::Bounds { n, p, bits, l } => {
            let b = hierarchy::bound_sequences(n, p, &bits.0, l).dom()?;
            println!("q_n = {}, q'_n = {}: lower {:.6}, upper {:.6}", b.q_n, b.q_prime_n, b.lower, b.upper);
            Ok(serde_json::to_value(&b)?)
        }
    }
}

fn builtin_machine(name: &str) -> Result<MachineSpec> {
    machine::reference_machines()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, m)| m)
        .ok_or_else(|| anyhow!("no builtin machine `{name}`"))
}

fn machine_cmd(cmd: MachineCmd) -> Result<Value> {
    match cmd {
        MachineCmd::List => {
            let names: Vec<&str> = machine::reference_machines().iter().map(|(n, _)| *n).collect();
            for n in &names {
                println!("{n}");
            }
            Ok(json!({"machines": names}))
        }
        MachineCmd::Run { spec, builtin, face, width, height, render: out, cell, show } => {
            let m = match (&spec, &builtin) {
                (Some(p), _) => MachineSpec::parse(&read(p)?)?,
                (None, Some(n)) => builtin_machine(n)?,
                (None, None) => return Err(anyhow!("give --spec FILE or --builtin NAME")),
            };
            let cfg = match &face {
                Some(p) => machine::face_from_json(&m, &read(p)?)?,
                None => FaceConfig::well_initialized(&m, width, height),
            };
            let d = machine::run_face(&m, &cfg).dom()?;
            let o = machine::compute_signals(&m, &d, &cfg);
            let forbidden = machine::is_forbidden(&o);
            if show {
                print!("{}", machine::DiagramText(&m, &d));
            }
            println!("first error: {:?}", o.first_error);
            println!("empty tape splits: {:?} {:?}", o.tape_left, o.tape_right);
            println!("empty sides splits: {:?} {:?}", o.side_left, o.side_right);
            println!("forbidden: {forbidden}");
            if let Some(p) = &out {
                let scene = render::machine_scene(&m, &d, &o, cell);
                write(p, &image_format(p)?.encode(&scene))?;
            }
            let top: Vec<String> = d.top_output().iter().map(|s| m.letters[s.letter].clone()).collect();
            Ok(json!({"overlay": o, "forbidden": forbidden, "top": top}))
        }
    }
}

fn parse_slice(v: &[String]) -> Result<(usize, i32)> {
    let mut axis = None;
    let mut index = None;
    for s in v {
        match s.split_once('=') {
            Some(("axis", a)) => axis = a.parse::<usize>().ok().filter(|&a| a < 3),
            Some(("index", i)) => index = i.parse::<i32>().ok(),
            _ => {}
        }
    }
    match (axis, index) {
        (Some(a), Some(i)) => Ok((a, i)),
        _ => Err(anyhow!("--slice expects axis=K (0..3) and index=I")),
    }
}

fn render_cmd(cmd: RenderCmd) -> Result<Value> {
    match cmd {
        RenderCmd::Supertile { order, orient, out, cell } => {
            let fmt = image_format(&out)?;
            let b = r2::build_supertile(order, orient).dom()?;
            let scene = render::robinson_scene(&b, cell);
            write(&out, &fmt.encode(&scene))?;
            println!("wrote {} ({}x{})", out.display(), scene.width, scene.height);
            Ok(json!({"path": out, "width": scene.width, "height": scene.height}))
        }
        RenderCmd::Supertile3 { order, orient, slice, out, cell } => {
            let fmt = image_format(&out)?;
            let (axis, index) = parse_slice(&slice)?;
            let b = r3::build_supertile3(order, orient).dom()?;
            if index < 0 || index as usize >= b.side() {
                return Err(anyhow!("index {index} outside 0..{}", b.side()));
            }
            let scene = render::slice_scene(&b, axis, index, cell);
            write(&out, &fmt.encode(&scene))?;
            println!("wrote {} ({}x{})", out.display(), scene.width, scene.height);
            Ok(json!({"path": out, "axis": axis, "index": index, "width": scene.width, "height": scene.height}))
        }
        RenderCmd::Pattern { input, out, cell } => {
            let fmt = image_format(&out)?;
            let (pat, names) = formats::read_pattern(&read(&input)?)?;
            if pat.dim() != 2 {
                return Err(anyhow!("only 2D patterns can be drawn"));
            }
            let all = tile_names();
            let ids: Option<Vec<u32>> = names.iter().map(|n| all.iter().position(|t| t == n).map(|i| i as u32)).collect();
            let scene = match ids {
                Some(ids) => render::robinson_scene(&Block::from_pattern(&sftlab::map_symbols(&pat, &ids).dom()?).dom()?, cell),
                None => render::block_scene(&Block::from_pattern(&pat).dom()?, cell, render::palette),
            };
            write(&out, &fmt.encode(&scene))?;
            println!("wrote {}", out.display());
            Ok(json!({"path": out, "width": scene.width, "height": scene.height}))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global() {
        eprintln!("warning: {e}");
    }
    let seed = cli.seed;
    match run(cli) {
        Ok(mut v) => {
            if let Value::Object(m) = &mut v {
                m.insert("seed".into(), json!(seed));
            }
            println!("RESULT {v}");
            ExitCode::SUCCESS
        }
        Err(e) => match e.downcast_ref::<DomainError>() {
            Some(d) => {
                eprintln!("error: {d}");
                println!("RESULT {}", json!({"error": d.class, "message": d.message}));
                ExitCode::from(1)
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
