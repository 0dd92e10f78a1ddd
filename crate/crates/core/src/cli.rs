//! Batch front end. `run` parses arguments, executes one verb and returns the
//! process exit code: 0 success, 1 a check failed, 2 usage or input error,
//! 3 the truncation window cannot certify the answer.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::One;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gc;
use crate::graph::{
    self as gio, canonicalize, enumerate_basis, samples, Class, Constraints, Graph,
};
use crate::hgc::{self, Twist};
use crate::homology::{self, ComplexSpec, GcSpec, HgcSpec, HomologyRow, TrtSpec};
use crate::lin::{fmt_q, parse_q, Lin, Q};
use crate::linfty::{self, GraphPair, Morphism, PreLiePair, Src, TreePair};
use crate::par;
use crate::tree::{self, Label, Tree};

#[derive(Parser, Debug)]
#[command(name = "graphcx", version, about = "Exact computations in graph complexes and pre-Lie pairs")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Hair degree parameter of HGC_{m,n}.
    #[arg(long, global = true)]
    pub m: Option<i32>,
    /// Degree parameter n of GC_n and HGC_{m,n}
    #[arg(long, global = true, default_value_t = 2)]
    pub n: i32,
    /// Valence class 1, 2 or 3.
    #[arg(long, global = true, default_value_t = 1)]
    pub class: u8,
    /// Exact fraction such as 3/7.
    #[arg(long, global = true)]
    pub lambda: Option<String>,
    /// Drop terms of weight above this bound
    #[arg(long = "truncate-weight", global = true)]
    pub truncate_weight: Option<i64>,
    /// Drop terms with more hairs than this
    #[arg(long = "truncate-hairs", global = true)]
    pub truncate_hairs: Option<usize>,
    /// Upper bound on internal vertices
    #[arg(long = "max-vertices", global = true)]
    pub max_vertices: Option<usize>,
    /// Loop order
    #[arg(long, global = true)]
    pub loops: Option<i64>,
    /// Number of random tuples for sampled checks
    #[arg(long, global = true, default_value_t = 20)]
    pub samples: usize,
    /// Seed for sampled checks
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 1 forces sequential evaluation
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Emit::Text)]
    pub emit: Emit,
    /// Write the report to this file instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Writes the boundary matrices of a homology window to this file.
    #[arg(long = "dump-matrix", global = true)]
    pub dump_matrix: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emit {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwistKind {
    None,
    Line,
    Tripod,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lists the canonical basis atoms satisfying the constraints.
    Enum {
        #[arg(long)]
        vertices: Option<usize>,
        #[arg(long)]
        hairs: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        degree: Option<i64>,
        #[arg(long = "max-edges")]
        max_edges: Option<usize>,
        /// Print only the count.
        #[arg(long)]
        count: bool,
    },
    /// Differential of a combination (GC, or twisted HGC).
    Diff {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = TwistKind::None)]
        twist: TwistKind,
    },
    /// Lie bracket (GC) or grafting bracket (HGC).
    Bracket { a: PathBuf, b: PathBuf },
    /// Pre-Lie product of two GC combinations, or `prelie eval` on trees.
    #[command(args_conflicts_with_subcommands = true)]
    Prelie {
        #[command(subcommand)]
        eval: Option<PrelieCmd>,
        files: Vec<PathBuf>,
    },
    /// Symmetric brace `host • (args…)` or `host ∘ (args…)`.
    Brace {
        host: PathBuf,
        #[arg(required = true)]
        args: Vec<PathBuf>,
    },
    /// Right action `x ∘ γ` of GC on HGC.
    Act { x: PathBuf, gamma: PathBuf },
    /// Maurer-Cartan elements: verification, push-forwards, actions, BCH.
    #[command(subcommand)]
    Mc(McCmd),
    /// Homology table of a complex window.
    Homology {
        #[arg(long, value_enum)]
        complex: ComplexKind,
        #[arg(long, value_enum, default_value_t = TwistKind::None)]
        twist: TwistKind,
        /// Lowest degree of the window.
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<i64>,
        /// Highest degree of the window.
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<i64>,
        /// For the L-case comparison: bound on V + H of target atoms.
        #[arg(long, default_value_t = 5)]
        size: i64,
        #[arg(long, default_value_t = 3)]
        arity: usize,
    },
    /// The twisted rooted-tree operad TRT(r).
    Trt {
        #[arg(long)]
        arity: usize,
        #[arg(long)]
        homology: bool,
    },
    /// Operadic composition in the rooted-tree operad.
    #[command(subcommand)]
    Rt(RtCmd),
    /// Sampled or exhaustive checks of the L-infinity relations.
    #[command(subcommand)]
    Linfty(LinftyCmd),
    /// Runs every acceptance check at its smallest window.
    Selftest {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum PrelieCmd {
    /// `x • y` or the brace `x • (y₁, …)` on trees, e.g. `prelie eval 1 2(3)`.
    Eval {
        x: String,
        #[arg(required = true)]
        ys: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum RtCmd {
    /// Operadic composition `t ∘_i s`.
    Compose { t: String, i: u8, s: String },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComplexKind {
    Gc,
    Hgc,
    Trt,
    /// `K[1] ⊕ GC_n²[1] → HGC^L_{n,n}` comparison.
    Lcase,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Element {
    M,
    Line,
    Tripod,
    File,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Along {
    W,
    U,
    V,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Algebra,
    Module,
}

#[derive(Subcommand, Debug)]
pub enum McCmd {
    /// Maurer-Cartan residual of m, m + L, m + T(λ) or m + (file).
    Verify {
        #[arg(long, value_enum)]
        element: Element,
        file: Option<PathBuf>,
    },
    /// Pushforward of a degree-0 GC element along W, U or V (L case).
    Push {
        #[arg(long, value_enum)]
        along: Along,
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// `β · exp(x)` on the algebra or `m′ · exp(x)` on the module (L case).
    Act {
        #[arg(long, value_enum, default_value_t = Side::Algebra)]
        side: Side,
        beta: PathBuf,
        x: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Gauge action on the L-twisted hairy complex.
    Gauge {
        beta: PathBuf,
        x: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// BCH(x, y) in GC with the commutator bracket.
    Bch {
        x: PathBuf,
        y: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum What {
    Nu,
    #[value(name = "W")]
    W,
    #[value(name = "U")]
    U,
    #[value(name = "UD")]
    Ud,
    Composite,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instance {
    GcL,
    GcT,
    Oracle,
}

#[derive(Subcommand, Debug)]
pub enum LinftyCmd {
    /// Evaluates L∞ relations on sampled inputs.
    Check {
        #[arg(long, value_enum)]
        what: What,
        #[arg(long, value_enum)]
        instance: Instance,
        #[arg(long, default_value_t = 2)]
        arity: usize,
        /// Tree vertex bound (oracle), hair bound (gc-t) or weight bound (gc-l).
        #[arg(long)]
        window: Option<i64>,
    },
}

/// Outcome of a verb before it is written out.
struct Outcome {
    text: String,
    ok: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, ok: true }
    }
}

/// Parses `argv` and runs one verb; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(j) = cli.common.jobs {
        par::set_jobs(j);
    }
    match execute(&cli) {
        Ok(out) => match write_out(&cli.common, &out.text) {
            Ok(()) => i32::from(!out.ok),
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Truncation(_) | Error::Unbounded(_) => 3,
        _ => 2,
    }
}

fn write_out(c: &Common, text: &str) -> Result<()> {
    match &c.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn lambda(c: &Common) -> Result<Q> {
    match &c.lambda {
        None => Ok(Q::one()),
        Some(s) => {
            if s.contains('.') || s.contains('e') || s.contains('E') {
                return Err(Error::InvalidInput(format!("λ must be an exact fraction such as 3/7, got {s}")));
            }
            parse_q(s).ok_or_else(|| Error::InvalidInput(format!("λ must be an exact fraction such as 3/7, got {s}")))
        }
    }
}

fn class(c: &Common) -> Result<Class> {
    Class::new(c.class)
}

fn read_combination(path: &Path) -> Result<Lin<Graph>> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('[') {
        gio::from_json(&text)
    } else {
        gio::parse_combination(&text)
    }
}

fn emit_graphs(c: &Common, x: &Lin<Graph>) -> String {
    match c.emit {
        Emit::Text => gio::serialize_combination(x),
        Emit::Json => gio::to_json(x) + "\n",
    }
}

fn emit_trees(c: &Common, x: &Lin<Tree>) -> String {
    match c.emit {
        Emit::Text => {
            let mut s = String::new();
            for (t, q) in x.iter() {
                let _ = writeln!(s, "{}\t{t}", fmt_q(q));
            }
            s
        }
        Emit::Json => {
            let terms: Vec<(String, String)> = x.iter().map(|(t, q)| (fmt_q(q), t.to_string())).collect();
            serde_json::to_string_pretty(&terms).expect("strings serialize") + "\n"
        }
    }
}

fn is_hairy(x: &Lin<Graph>) -> bool {
    x.atoms().next().is_some_and(Graph::is_hairy)
}

fn twist_of(c: &Common, kind: TwistKind, hair_bound: Option<usize>) -> Result<Twist> {
    Ok(match kind {
        TwistKind::None => Twist::None,
        TwistKind::Line => Twist::Line,
        TwistKind::Tripod => {
            let h = hair_bound.ok_or_else(|| Error::Truncation("the tripod twist needs --truncate-hairs".into()))?;
            Twist::Tripod { lambda: lambda(c)?, max_hairs: h + 1 }
        }
    })
}

fn hair_bound(c: &Common) -> Option<usize> {
    // weight E − V of a star is its hair count minus one
    c.truncate_hairs.or(c.truncate_weight.map(|w| (w + 1).max(0) as usize))
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    match &cli.cmd {
        Command::Enum { vertices, hairs, degree, max_edges, count } => {
            let mut k = match c.m {
                Some(m) => Constraints::hgc(m, c.n, class(c)?),
                None => Constraints::gc(c.n, class(c)?),
            };
            if let Some(v) = vertices {
                k = k.vertices(*v);
            }
            if let Some(h) = hairs {
                k = k.hairs(*h);
            }
            k.max_vertices = c.max_vertices.or(k.max_vertices);
            if c.m.is_some() && hairs.is_none() {
                k.max_hairs = c.truncate_hairs;
            }
            k.loops = c.loops;
            k.degree = *degree;
            k.max_edges = *max_edges;
            k.weight = c.truncate_weight;
            let basis = enumerate_basis(&k)?;
            if *count {
                return Ok(Outcome::ok(format!("{}\n", basis.len())));
            }
            let mut x = Lin::zero();
            for g in basis {
                x.add_term(g, Q::one());
            }
            Ok(Outcome::ok(emit_graphs(c, &x)))
        }
        Command::Diff { file, twist } => {
            let x = read_combination(file)?;
            let out = if is_hairy(&x) {
                let hb = c.truncate_hairs;
                let tw = twist_of(c, *twist, hb)?;
                hgc::twisted_differential(&x, &tw, class(c)?, hb)?
            } else {
                if *twist != TwistKind::None {
                    return Err(Error::InvalidInput("twists apply to hairy combinations only".into()));
                }
                gc::differential(&x, class(c)?)
            };
            Ok(Outcome::ok(emit_graphs(c, &out)))
        }
        Command::Bracket { a, b } => {
            let (x, y) = (read_combination(a)?, read_combination(b)?);
            let out = if is_hairy(&x) { hgc::graft_bracket(&x, &y)? } else { gc::bracket(&x, &y)? };
            Ok(Outcome::ok(emit_graphs(c, &out)))
        }
        Command::Prelie { eval: Some(PrelieCmd::Eval { x, ys }), .. } => {
            let x = Lin::atom(tree::parse_tree(x)?);
            let ys: Vec<Lin<Tree>> = ys.iter().map(|s| tree::parse_tree(s).map(Lin::atom)).collect::<Result<_>>()?;
            let out = if ys.len() == 1 { tree::prelie(&x, &ys[0]) } else { tree::brace(&x, &ys) };
            Ok(Outcome::ok(emit_trees(c, &out)))
        }
        Command::Prelie { eval: None, files } => {
            let [a, b] = files.as_slice() else {
                return Err(Error::InvalidInput("prelie takes two combination files (or `prelie eval`)".into()));
            };
            let out = gc::prelie(&read_combination(a)?, &read_combination(b)?)?;
            Ok(Outcome::ok(emit_graphs(c, &out)))
        }
        Command::Brace { host, args } => {
            let h = read_combination(host)?;
            let xs: Vec<Lin<Graph>> = args.iter().map(|p| read_combination(p)).collect::<Result<_>>()?;
            let refs: Vec<&Lin<Graph>> = xs.iter().collect();
            let out = if is_hairy(&h) { hgc::brace(&h, &refs)? } else { gc::brace(&h, &refs)? };
            Ok(Outcome::ok(emit_graphs(c, &out)))
        }
        Command::Act { x, gamma } => {
            let out = hgc::gc_action(&read_combination(x)?, &read_combination(gamma)?)?;
            Ok(Outcome::ok(emit_graphs(c, &out)))
        }
        Command::Mc(cmd) => mc(c, cmd),
        Command::Homology { complex, twist, lo, hi, size, arity } => homology_cmd(c, *complex, *twist, *lo, *hi, *size, *arity),
        Command::Trt { arity, homology } => {
            if *homology {
                let h = tree::trt_homology(*arity)?;
                let rows: Vec<HomologyRow> = h.iter().map(|(d, n)| HomologyRow { degree: *d, bucket: 0, dim: *n }).collect();
                let head = format!("TRT arity={arity}");
                return Ok(Outcome::ok(match c.emit {
                    Emit::Text => homology::to_tsv(&head, &rows),
                    Emit::Json => homology::to_json(&head, &rows),
                }));
            }
            let mut s = String::new();
            for k in 0..*arity {
                let _ = writeln!(s, "{}\t{}", k, tree::trt_basis(*arity, k).len());
            }
            Ok(Outcome::ok(format!("# TRT arity={arity}\nblack\tdim\n{s}")))
        }
        Command::Rt(RtCmd::Compose { t, i, s }) => {
            let out = tree::rt_compose(&tree::parse_tree(t)?, *i, &tree::parse_tree(s)?)?;
            Ok(Outcome::ok(emit_trees(c, &out)))
        }
        Command::Linfty(LinftyCmd::Check { what, instance, arity, window }) => {
            let report = linfty_check(*what, *instance, *arity, c.samples, c.seed, *window, c.n, &lambda(c)?)?;
            let ok = report.failures == 0;
            let text = match c.emit {
                Emit::Text => report.to_text(),
                Emit::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
            };
            Ok(Outcome { text, ok })
        }
        Command::Selftest { json } => {
            let rows = selftest();
            let ok = rows.iter().all(|r| r.pass);
            let text = if *json || c.emit == Emit::Json {
                serde_json::to_string_pretty(&rows).expect("serializable") + "\n"
            } else {
                rows.iter().map(|r| format!("{}\t{}\t{}\n", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail)).collect()
            };
            Ok(Outcome { text, ok })
        }
    }
}

// ---------------------------------------------------------------- mc

fn first_term(x: &Lin<Graph>) -> String {
    x.iter().next().map_or(String::new(), |(g, q)| format!("coef {}\n{}", fmt_q(q), gio::serialize_graph(g)))
}

fn mc(c: &Common, cmd: &McCmd) -> Result<Outcome> {
    match cmd {
        McCmd::Verify { element, file } => {
            let n = c.n;
            let m = c.m.unwrap_or(match element {
                Element::Tripod => n - 1,
                _ => n,
            });
            let (mu, bound) = match element {
                Element::M => (Lin::zero(), None),
                Element::Line => {
                    if m != n {
                        return Err(Error::InvalidInput("L lives in HGC_{n,n}".into()));
                    }
                    (hgc::line(n), None)
                }
                Element::Tripod => {
                    if m != n - 1 {
                        return Err(Error::InvalidInput("T(λ) lives in HGC_{n−1,n}".into()));
                    }
                    let h = hair_bound(c).ok_or_else(|| {
                        Error::Truncation("the tripod series needs --truncate-hairs or --truncate-weight".into())
                    })?;
                    (hgc::tripod_series(n, &lambda(c)?, h + 1), Some(h))
                }
                Element::File => {
                    let p = file.as_ref().ok_or_else(|| Error::InvalidInput("--element file needs a path".into()))?;
                    (read_combination(p)?, hair_bound(c))
                }
            };
            let r = hgc::mc_residual(m, n, &mu, bound);
            if r.is_zero() {
                let cert = match bound {
                    Some(h) => format!("OK up to {h} hairs (weight {})\n", h as i64 - 1),
                    None => "OK (exact)\n".to_string(),
                };
                Ok(Outcome::ok(cert))
            } else {
                Ok(Outcome { text: format!("nonzero residual term:\n{}", first_term(&r)), ok: false })
            }
        }
        McCmd::Push { along, file, depth } => {
            let beta = read_combination(file)?;
            let w = c.truncate_weight.ok_or_else(|| Error::Truncation("pushforwards need --truncate-weight".into()))?;
            let p = GraphPair::line(c.n).with_weight_window(w);
            let out = match along {
                Along::W => linfty::push_w(&p, &beta, *depth)?,
                Along::U => linfty::push_u(&p, &beta, *depth)?,
                Along::V => linfty::push_v(&p, &beta, *depth)?,
            };
            Ok(Outcome::ok(emit_graphs(c, &out)))
        }
        McCmd::Act { side, beta, x, depth } => {
            let w = c.truncate_weight.ok_or_else(|| Error::Truncation("actions need --truncate-weight".into()))?;
            let p = GraphPair::line(c.n).with_weight_window(w);
            let (b, x) = (read_combination(beta)?, read_combination(x)?);
            let out = match side {
                Side::Algebra => linfty::exp_action_algebra(&p, &b, &x, *depth)?,
                Side::Module => linfty::exp_action_module(&p, &b, &x, *depth)?,
            };
            Ok(Outcome::ok(emit_graphs(c, &out)))
        }
        McCmd::Gauge { beta, x, depth } => {
            let w = c.truncate_weight.ok_or_else(|| Error::Truncation("the gauge action needs --truncate-weight".into()))?;
            let p = GraphPair::line(c.n).with_weight_window(w);
            let out = linfty::gauge_action_m(&p, &read_combination(beta)?, &read_combination(x)?, *depth)?;
            Ok(Outcome::ok(emit_graphs(c, &out)))
        }
        McCmd::Bch { x, y, depth } => {
            let w = c.truncate_weight.ok_or_else(|| Error::Truncation("BCH needs --truncate-weight".into()))?;
            let (x, y) = (read_combination(x)?, read_combination(y)?);
            for v in [&x, &y] {
                if v.atoms().any(|g| g.graph_degree() != 0) {
                    return Err(Error::Parity("BCH arguments must have degree 0".into()));
                }
            }
            let br = |a: &Lin<Graph>, b: &Lin<Graph>| gc::bracket(a, b).expect("checked").truncate_weight(w);
            let out = linfty::bch(&x, &y, *depth, &br)?.truncate_weight(w);
            Ok(Outcome::ok(emit_graphs(c, &out)))
        }
    }
}

// ---------------------------------------------------------- homology

fn table<S: ComplexSpec>(c: &Common, spec: &S, lo: i64, hi: i64, buckets: &[i64]) -> Result<String> {
    let mut rows = Vec::new();
    let mut dump = String::new();
    for &b in buckets {
        let w = homology::build_window(spec, b, lo, hi)?;
        if c.dump_matrix.is_some() {
            for (d, m) in &w.boundary {
                let _ = writeln!(dump, "# bucket {b} degree {d} -> {}", d - 1);
                dump.push_str(&m.dump());
            }
        }
        rows.extend(w.homology_dims().into_iter().map(|(degree, dim)| HomologyRow { degree, bucket: b, dim }));
    }
    if let Some(p) = &c.dump_matrix {
        std::fs::write(p, dump)?;
    }
    let head = format!("{} degrees={lo}..={hi}", spec.describe());
    Ok(match c.emit {
        Emit::Text => homology::to_tsv(&head, &rows),
        Emit::Json => homology::to_json(&head, &rows),
    })
}

fn homology_cmd(
    c: &Common,
    complex: ComplexKind,
    twist: TwistKind,
    lo: Option<i64>,
    hi: Option<i64>,
    size: i64,
    arity: usize,
) -> Result<Outcome> {
    let loops = c.loops.ok_or_else(|| Error::InvalidInput("homology needs --loops".into()));
    match complex {
        ComplexKind::Trt => {
            let lo = lo.unwrap_or(1 - arity as i64);
            Ok(Outcome::ok(table(c, &TrtSpec { arity }, lo, hi.unwrap_or(0), &[0])?))
        }
        ComplexKind::Gc => {
            let g = loops?;
            let (lo, hi) = degree_range(lo, hi)?;
            let spec = GcSpec { n: c.n, class: class(c)? };
            Ok(Outcome::ok(table(c, &spec, lo, hi, &[g])?))
        }
        ComplexKind::Hgc => {
            let g = loops?;
            let (lo, hi) = degree_range(lo, hi)?;
            let m = c.m.ok_or_else(|| Error::InvalidInput("hgc needs --m".into()))?;
            let spec = HgcSpec { m, n: c.n, class: class(c)?, twist: twist_of(c, twist, c.truncate_hairs)?, max_hairs: c.truncate_hairs };
            Ok(Outcome::ok(table(c, &spec, lo, hi, &[g])?))
        }
        ComplexKind::Lcase => {
            let g = loops?;
            let res = homology::l_case_comparison(c.n, g, size)?;
            let ok = res.iter().all(homology::LCaseBucket::iso);
            let text = match c.emit {
                Emit::Json => serde_json::to_string_pretty(&res).expect("serializable") + "\n",
                Emit::Text => {
                    let mut s = format!(
                        "# K[1]+GC[1] n={} class=2 -> HGC m=n={} class=2 twist=m+L, V+H<={size}\n# graphcx {}\ndegree\tloop\tdim_src\tdim_tgt\trank\tiso\n",
                        c.n,
                        c.n,
                        env!("CARGO_PKG_VERSION")
                    );
                    for b in &res {
                        if !b.chain_map_ok {
                            let _ = writeln!(s, "# loop {}: chain map check FAILED", b.loops);
                        }
                        for r in &b.ranks {
                            let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}\t{}", r.degree, r.bucket, r.source_dim, r.target_dim, r.rank, r.iso);
                        }
                    }
                    s
                }
            };
            Ok(Outcome { text, ok })
        }
    }
}

fn degree_range(lo: Option<i64>, hi: Option<i64>) -> Result<(i64, i64)> {
    match (lo, hi) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::InvalidInput("give the degree range with --lo and --hi".into())),
    }
}

// ------------------------------------------------------------ linfty

/// Result of a sampled L∞ audit.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub what: String,
    pub instance: String,
    pub arity: usize,
    pub seed: u64,
    pub samples: usize,
    pub window: i64,
    pub failures: usize,
    /// First nonzero residual term, if any.
    pub counterexample: Option<String>,
}

impl CheckReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# linfty check what={} instance={} arity={} window={} seed={} samples={}\n",
            self.what, self.instance, self.arity, self.window, self.seed, self.samples
        );
        match &self.counterexample {
            None => s.push_str("OK\n"),
            Some(t) => {
                let _ = writeln!(s, "FAILED on {} of {} samples; first nonzero term:\n{t}", self.failures, self.samples);
            }
        }
        s
    }
}

fn random_coefficient(rng: &mut ChaCha8Rng) -> Q {
    let num: i64 = [1, -1, 2, -3][rng.gen_range(0..4)];
    let den: i64 = [1, 2][rng.gen_range(0..2)];
    Q::new(num.into(), den.into())
}

/// Small GC_n atoms (loop order ≤ 3, 2 to 5 vertices, any valence) used for
/// sampling.
pub fn graph_pool(n: i32) -> Result<Vec<Graph>> {
    let mut k = Constraints::gc(n, Class(1));
    k.max_loops = Some(3);
    k.max_vertices = Some(5);
    k.min_vertices = 2;
    enumerate_basis(&k)
}

/// Small trees on white generators (even and odd) and the black α.
pub fn tree_pool() -> Vec<Tree> {
    let palette = [Label::White(1), Label::White(2), Label::OddWhite(3), Label::Black];
    tree::trees_up_to(&palette, 2)
}

fn sample<T: Clone>(rng: &mut ChaCha8Rng, pool: &[T], r: usize) -> Vec<(T, Q)> {
    (0..r).map(|_| (pool.choose(rng).expect("pool is nonempty").clone(), random_coefficient(rng))).collect()
}

fn residual_for<P: PreLiePair>(p: &P, what: What, args: &[(P::G, Q)], d_slots: usize) -> Result<(Lin<P::G>, Lin<P::M>)> {
    let xs: Vec<Lin<P::G>> = args.iter().map(|(a, q)| Lin::single(a.clone(), q.clone())).collect();
    let refs: Vec<&Lin<P::G>> = xs.iter().collect();
    let src = |with_d: usize| -> Vec<Src<P::G>> {
        let mut v: Vec<Src<P::G>> = (0..with_d).map(|_| Src::d()).collect();
        v.extend(xs.iter().skip(with_d).cloned().map(Src::x));
        v
    };
    Ok(match what {
        What::Nu => (linfty::nu_residual(p, &refs)?, Lin::zero()),
        What::W => (linfty::w_residual(p, &refs)?, Lin::zero()),
        What::U => {
            let s = src(0);
            let r: Vec<&Src<P::G>> = s.iter().collect();
            (Lin::zero(), linfty::u_residual(p, Morphism::U, &r)?)
        }
        What::Ud => {
            let s = src(d_slots);
            let r: Vec<&Src<P::G>> = s.iter().collect();
            (Lin::zero(), linfty::u_residual(p, Morphism::UD, &r)?)
        }
        What::Composite => {
            let s = src(d_slots);
            let r: Vec<&Src<P::G>> = s.iter().collect();
            (Lin::zero(), linfty::u_residual(p, Morphism::V, &r)?)
        }
    })
}

fn audit<P: PreLiePair>(
    p: &P,
    pool: &[P::G],
    what: What,
    arity: usize,
    samples: usize,
    seed: u64,
    size: &dyn Fn(&P::G) -> usize,
    budget: usize,
) -> Result<(usize, Option<String>)>
where
    P::G: std::fmt::Display,
    P::M: std::fmt::Display,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tasks = Vec::with_capacity(samples);
    for _ in 0..samples {
        let d_slots = match what {
            What::Ud | What::Composite => rng.gen_range(0..=arity.min(2)),
            _ => 0,
        };
        let d_slots = if what == What::Ud { d_slots.max(1) } else { d_slots };
        let smallest = pool.iter().map(size).min().unwrap_or(0);
        if smallest * arity > budget {
            return Err(Error::InvalidInput(format!("no {arity}-tuple fits the size budget {budget}")));
        }
        // rejection keeps the products small enough to canonicalize quickly
        let args = loop {
            let a = sample(&mut rng, pool, arity);
            if a.iter().map(|(g, _)| size(g)).sum::<usize>() <= budget {
                break a;
            }
        };
        tasks.push((args, d_slots));
    }
    let results: Vec<Result<(Lin<P::G>, Lin<P::M>)>> = par::map(&tasks, |(args, s)| residual_for(p, what, args, *s));
    let mut failures = 0;
    let mut first = None;
    for r in results {
        let (a, b) = r?;
        if !a.is_zero() || !b.is_zero() {
            failures += 1;
            if first.is_none() {
                first = Some(match a.iter().next() {
                    Some((t, q)) => format!("{}\t{t}", fmt_q(q)),
                    None => b.iter().next().map(|(t, q)| format!("{}\t{t}", fmt_q(q))).unwrap_or_default(),
                });
            }
        }
    }
    Ok((failures, first))
}

/// Bound on the total vertex count of a sampled graph tuple. Odd n allows
/// multiple edges and the T case carries many hairs per term, so both get a
/// smaller budget.
pub fn vertex_budget(instance: Instance, n: i32) -> usize {
    match instance {
        Instance::GcL if n % 2 == 0 => 10,
        _ => 6,
    }
}

/// Sampled audit of an L∞ relation with a fixed seed.
#[allow(clippy::too_many_arguments)]
pub fn linfty_check(
    what: What,
    instance: Instance,
    arity: usize,
    samples: usize,
    seed: u64,
    window: Option<i64>,
    n: i32,
    lambda: &Q,
) -> Result<CheckReport> {
    if arity == 0 {
        return Err(Error::InvalidInput("arity must be at least 1".into()));
    }
    let (window, (failures, counterexample)) = match instance {
        Instance::Oracle => {
            let w = window.unwrap_or(6);
            let p = TreePair { max_vertices: w.max(1) as usize };
            (w, audit(&p, &tree_pool(), what, arity, samples, seed, &|_| 0, 0)?)
        }
        Instance::GcL => {
            let w = window.unwrap_or(12);
            let p = GraphPair::line(n).with_weight_window(w);
            (w, audit(&p, &graph_pool(n)?, what, arity, samples, seed, &|g| g.v, vertex_budget(instance, n))?)
        }
        Instance::GcT => {
            let w = window.unwrap_or(3);
            let p = GraphPair::tripod(n, lambda.clone(), w.max(1) as usize);
            (w, audit(&p, &graph_pool(n)?, what, arity, samples, seed, &|g| g.v, vertex_budget(instance, n))?)
        }
    };
    Ok(CheckReport {
        what: value_name(what),
        instance: value_name(instance),
        arity,
        seed,
        samples,
        window,
        failures,
        counterexample,
    })
}

fn value_name<V: ValueEnum>(v: V) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

// ------------------------------------------------------------ selftest

#[derive(Clone, Debug, Serialize)]
pub struct SelftestRow {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn row(name: &str, r: Result<bool>) -> SelftestRow {
    match r {
        Ok(pass) => SelftestRow { name: name.into(), pass, detail: String::new() },
        Err(e) => SelftestRow { name: name.into(), pass: false, detail: e.to_string() },
    }
}

fn d_squared_small() -> Result<bool> {
    let cases: [(Option<i32>, i32, u8); 5] = [(None, 2, 1), (None, 2, 2), (None, 3, 2), (Some(2), 2, 1), (Some(1), 2, 3)];
    for (m, n, cl) in cases {
        let class = Class(cl);
        let mut k = match m {
            Some(m) => Constraints::hgc(m, n, class),
            None => Constraints::gc(n, class),
        };
        k.max_edges = Some(5);
        for g in enumerate_basis(&k)? {
            let x = Lin::atom(g);
            let dd = match m {
                None => gc::differential(&gc::differential(&x, class), class),
                Some(_) => {
                    let d = hgc::twisted_differential(&x, &Twist::None, class, None)?;
                    hgc::twisted_differential(&d, &Twist::None, class, None)?
                }
            };
            if !dd.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn mc_small() -> Result<bool> {
    let mut ok = gc::prelie(&gc::alpha(2), &gc::alpha(2))?.is_zero() && gc::prelie(&gc::alpha(3), &gc::alpha(3))?.is_zero();
    ok &= hgc::mc_residual(2, 2, &Lin::zero(), None).is_zero();
    ok &= hgc::mc_residual(2, 2, &hgc::line(2), None).is_zero();
    for lam in [Q::one(), Q::new(1.into(), 2.into())] {
        for n in [2, 3] {
            ok &= hgc::mc_residual(n - 1, n, &hgc::tripod_series(n, &lam, 6), Some(5)).is_zero();
        }
    }
    Ok(ok)
}

fn prelie_small() -> Result<bool> {
    let pool = tree::trees_up_to(&[Label::White(1), Label::White(2), Label::OddWhite(3)], 2);
    let l = |t: &Tree| Lin::atom(t.clone());
    for x in &pool {
        for y in &pool {
            for z in &pool {
                let (x, y, z) = (l(x), l(y), l(z));
                let lhs = tree::prelie(&x, &tree::prelie(&y, &z)).minus(&tree::prelie(&tree::prelie(&x, &y), &z));
                let s = if y.atoms().next().is_some_and(crate::lin::Atom::parity)
                    && z.atoms().next().is_some_and(crate::lin::Atom::parity)
                {
                    -Q::one()
                } else {
                    Q::one()
                };
                let rhs = tree::prelie(&x, &tree::prelie(&z, &y)).minus(&tree::prelie(&tree::prelie(&x, &z), &y));
                if lhs != rhs.scaled(&s) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn trees_small() -> Result<bool> {
    let h = (1..=3).map(tree::trt_homology).collect::<Result<Vec<_>>>()?;
    let expect = [1usize, 1, 2];
    Ok(h.iter().zip(expect).all(|(m, d)| m.len() == 1 && m.get(&0) == Some(&d)))
}

fn linfty_small() -> Result<bool> {
    let one = Q::one();
    let mut ok = true;
    for (what, arity) in [(What::Nu, 3), (What::W, 3), (What::U, 2), (What::Ud, 2)] {
        ok &= linfty_check(what, Instance::Oracle, arity, 5, 1, Some(5), 2, &one)?.failures == 0;
    }
    ok &= linfty_check(What::Composite, Instance::GcL, 2, 3, 1, Some(6), 2, &one)?.failures == 0;
    Ok(ok)
}

fn lcase_small() -> Result<bool> {
    Ok(homology::l_case_comparison(2, 3, 4)?.iter().all(homology::LCaseBucket::iso))
}

fn actions_small() -> Result<bool> {
    let p = TreePair { max_vertices: 5 };
    let x = Lin::atom(tree::parse_tree("1(2)")?);
    let y = Lin::atom(tree::parse_tree("2")?.clone()).plus(&Lin::atom(tree::parse_tree("1(1)")?));
    let beta = Lin::atom(tree::parse_tree("2")?);
    let br = |a: &Lin<Tree>, b: &Lin<Tree>| p.window_g(tree::bracket(a, b));
    let lhs = linfty::exp_action_algebra(&p, &linfty::exp_action_algebra(&p, &beta, &x, 5)?, &y, 5)?;
    let rhs = linfty::exp_action_algebra(&p, &beta, &linfty::bch(&x, &y, 5, &br)?, 5)?;
    let g = GraphPair::line(2);
    let tet = Lin::atom(canonicalize(&samples::tetrahedron(2))?.map(|(g, _)| g).expect("nonzero"));
    let ell = |a: &[&Lin<Graph>]| if a.len() == 1 { linfty::nu(&g, a).expect("arity 1") } else { Lin::zero() };
    let gauge = linfty::gauge_action(&ell, 3, &tet, &tet, 3);
    Ok(lhs == rhs && gauge == tet.plus(&linfty::nu(&g, &[&tet])?))
}

fn determinism_small() -> Result<bool> {
    let one = Q::one();
    let a = linfty_check(What::W, Instance::GcL, 2, 4, 7, Some(8), 2, &one)?;
    let b = linfty_check(What::W, Instance::GcL, 2, 4, 7, Some(8), 2, &one)?;
    Ok(serde_json::to_string(&a).ok() == serde_json::to_string(&b).ok())
}

/// The acceptance checks at their smallest windows.
pub fn selftest() -> Vec<SelftestRow> {
    vec![
        row("d_squared", d_squared_small()),
        row("maurer_cartan", mc_small()),
        row("prelie_oracle", prelie_small()),
        row("tree_homology", trees_small()),
        row("linfty_residuals", linfty_small()),
        row("l_case_window", lcase_small()),
        row("mc_actions", actions_small()),
        row("determinism", determinism_small()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("graphcx").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_args(&["frobnicate"]), 2);
        assert_eq!(run_args(&["mc", "verify", "--element", "tripod", "--lambda", "0.5", "--truncate-hairs", "5"]), 2);
    }

    #[test]
    fn tripod_verification() {
        assert_eq!(run_args(&["mc", "verify", "--element", "tripod", "--m", "1", "--n", "2", "--lambda", "1", "--truncate-hairs", "7", "--out", "/dev/null"]), 0);
        assert_eq!(run_args(&["mc", "verify", "--element", "tripod", "--n", "2"]), 3);
    }

    #[test]
    fn trt_and_linfty_verbs() {
        let dir = std::env::temp_dir().join(format!("graphcx-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let out = dir.join("trt.tsv");
        let o = out.to_str().unwrap();
        assert_eq!(run_args(&["trt", "--arity", "4", "--homology", "--out", o]), 0);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.ends_with("0\t0\t6\n"), "{text}");
        assert_eq!(run_args(&["linfty", "check", "--what", "W", "--instance", "oracle", "--arity", "3", "--out", o]), 0);
        assert_eq!(run_args(&["rt", "compose", "1(2)", "1", "1(2)", "--out", o]), 0);
        assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 2);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn lambda_must_be_exact() {
        let cli = Cli::try_parse_from(["graphcx", "--lambda", "3/7", "selftest"]).unwrap();
        assert_eq!(lambda(&cli.common).unwrap(), Q::new(3.into(), 7.into()));
        let cli = Cli::try_parse_from(["graphcx", "--lambda", "1e3", "selftest"]).unwrap();
        assert!(lambda(&cli.common).is_err());
    }

    #[test]
    fn selftest_passes() {
        let rows = selftest();
        for r in &rows {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }
}
