//! Finite windows of graded complexes, their homology, and chain maps
//! between them.
//!
//! A window fixes one bucket value (loop order for graph complexes) and a
//! range of homological degrees. The differential lowers the degree by one.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactla::SparseMatrix;
use crate::gc;
use crate::graph::{enumerate_basis, Class, Constraints, Graph};
use crate::hgc::{self, Twist};
use crate::lin::{Atom, Lin, Q};
use crate::par;
use crate::tree::{self, Tree};

/// A complex given by its bases per (degree, bucket) and its differential.
pub trait ComplexSpec: Sync {
    type A: Atom + Hash + fmt::Display;

    /// One-line description recorded in output headers.
    fn describe(&self) -> String;
    /// Canonical basis of the bucket, in canonical order.
    fn basis(&self, degree: i64, bucket: i64) -> Result<Vec<Self::A>>;
    fn differential(&self, x: &Self::A) -> Lin<Self::A>;
}

/// `GC_n` in a valence class, bucketed by loop order.
#[derive(Clone, Debug)]
pub struct GcSpec {
    pub n: i32,
    pub class: Class,
}

impl ComplexSpec for GcSpec {
    type A = Graph;

    fn describe(&self) -> String {
        format!("GC n={} class={}", self.n, self.class.0)
    }

    fn basis(&self, degree: i64, bucket: i64) -> Result<Vec<Graph>> {
        if self.n == 1 {
            return Err(Error::Unbounded("GC_1 buckets by loop order and degree are infinite".into()));
        }
        // degree = (n − 1)·loops − V + 1
        let v = (self.n as i64 - 1) * bucket + 1 - degree;
        if v < 1 {
            return Ok(vec![]);
        }
        let mut c = Constraints::gc(self.n, self.class).vertices(v as usize);
        c.loops = Some(bucket);
        c.degree = Some(degree);
        enumerate_basis(&c)
    }

    fn differential(&self, x: &Graph) -> Lin<Graph> {
        gc::differential(&Lin::atom(x.clone()), self.class)
    }
}

/// `HGC_{m,n}` in a valence class with the differential twisted by `m` and
/// optionally by `L`, bucketed by loop order.
#[derive(Clone, Debug)]
pub struct HgcSpec {
    pub m: i32,
    pub n: i32,
    pub class: Class,
    pub twist: Twist,
    /// Required when the fixed-degree buckets are infinite (`m = n − 1`).
    pub max_hairs: Option<usize>,
}

impl ComplexSpec for HgcSpec {
    type A = Graph;

    fn describe(&self) -> String {
        let tw = match &self.twist {
            Twist::None => "m".to_string(),
            Twist::Line => "m+L".to_string(),
            Twist::Tripod { lambda, max_hairs } => format!("m+T(lambda={lambda}, hairs<={max_hairs})"),
            Twist::Custom(_) => "m+custom".to_string(),
        };
        let hb = self.max_hairs.map_or("none".to_string(), |h| h.to_string());
        format!("HGC m={} n={} class={} twist={tw} hair_bound={hb}", self.m, self.n, self.class.0)
    }

    fn basis(&self, degree: i64, bucket: i64) -> Result<Vec<Graph>> {
        // degree = (n − 1)(loops − 1) + m − V + (n − 1 − m)·H
        let (n, m) = (self.n as i64, self.m as i64);
        let s = (n - 1) * (bucket - 1) + m - degree;
        let c = n - 1 - m;
        let (vmax, hmax) = match (c, self.max_hairs) {
            (c, _) if c < 0 => (s, s.div_euclid(-c)),
            (_, Some(h)) => (s + c * h as i64, h as i64),
            (_, None) => {
                return Err(Error::Unbounded(format!(
                    "HGC_{{{},{}}} buckets of fixed degree and loop order are infinite without a hair bound",
                    self.m, self.n
                )))
            }
        };
        if vmax < 0 || hmax < 1 {
            return Ok(vec![]);
        }
        let mut k = Constraints::hgc(self.m, self.n, self.class);
        k.loops = Some(bucket);
        k.degree = Some(degree);
        k.max_vertices = Some(vmax as usize);
        k.max_hairs = Some(hmax as usize);
        enumerate_basis(&k)
    }

    fn differential(&self, x: &Graph) -> Lin<Graph> {
        let mu = self.twist.element(self.m, self.n);
        let mut out = crate::graph::project_class(&hgc::twisted_differential_full(&Lin::atom(x.clone()), &mu), self.class);
        if let Some(h) = self.max_hairs {
            out = out.filter(|g| g.h <= h);
        }
        out
    }
}

/// `TRT(r)`; the degree of a tree is minus its number of black vertices and
/// there is a single bucket, 0.
#[derive(Clone, Debug)]
pub struct TrtSpec {
    pub arity: usize,
}

impl ComplexSpec for TrtSpec {
    type A = Tree;

    fn describe(&self) -> String {
        format!("TRT arity={}", self.arity)
    }

    fn basis(&self, degree: i64, bucket: i64) -> Result<Vec<Tree>> {
        if self.arity > tree::MAX_TRT_ARITY {
            return Err(Error::Precondition(format!("TRT windows are built for arity ≤ {}", tree::MAX_TRT_ARITY)));
        }
        if bucket != 0 || degree > 0 {
            return Ok(vec![]);
        }
        Ok(tree::trt_basis(self.arity, (-degree) as usize))
    }

    fn differential(&self, x: &Tree) -> Lin<Tree> {
        tree::tw_differential_atom(x)
    }
}

/// Basis element of `K[1] ⊕ GC_n²[1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ShiftedAtom {
    /// The generator of `K[1]`, in degree −1 and loop order 0.
    D,
    G(Graph),
}

impl Atom for ShiftedAtom {
    fn degree(&self) -> i64 {
        match self {
            ShiftedAtom::D => -1,
            ShiftedAtom::G(g) => g.graph_degree() - 1,
        }
    }

    fn weight(&self) -> i64 {
        match self {
            ShiftedAtom::D => 0,
            ShiftedAtom::G(g) => g.loop_order(),
        }
    }
}

impl fmt::Display for ShiftedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShiftedAtom::D => write!(f, "D"),
            ShiftedAtom::G(g) => write!(f, "{g}"),
        }
    }
}

/// `K[1] ⊕ GC_n²[1]` with degrees shifted down by one, bucketed by loop order.
#[derive(Clone, Debug)]
pub struct ShiftedGcSpec {
    pub n: i32,
}

impl ComplexSpec for ShiftedGcSpec {
    type A = ShiftedAtom;

    fn describe(&self) -> String {
        format!("K[1]+GC[1] n={} class=2", self.n)
    }

    fn basis(&self, degree: i64, bucket: i64) -> Result<Vec<ShiftedAtom>> {
        let inner = GcSpec { n: self.n, class: Class(2) };
        let mut out: Vec<ShiftedAtom> = inner.basis(degree + 1, bucket)?.into_iter().map(ShiftedAtom::G).collect();
        if degree == -1 && bucket == 0 {
            out.insert(0, ShiftedAtom::D);
        }
        Ok(out)
    }

    fn differential(&self, x: &ShiftedAtom) -> Lin<ShiftedAtom> {
        match x {
            ShiftedAtom::D => Lin::zero(),
            ShiftedAtom::G(g) => gc::differential(&Lin::atom(g.clone()), Class(2)).map_linear(|h| Lin::atom(ShiftedAtom::G(h.clone()))),
        }
    }
}

/// The map `D ↦ L`, `γ ↦ U₁(γ) = (m + L) ∘ γ` into `HGC^L_{n,n}`.
pub fn l_case_map(n: i32) -> impl Fn(&ShiftedAtom) -> Lin<Graph> + Sync {
    let host = hgc::m_element(n, n).plus(&hgc::line(n));
    move |x| match x {
        ShiftedAtom::D => hgc::line(n),
        ShiftedAtom::G(g) => gc::brace_unchecked(&host, &[&Lin::atom(g.clone())]),
    }
}

/// One finite bucket of a complex.
#[derive(Clone, Debug)]
pub struct Bucket<A> {
    pub degree: i64,
    pub basis: Vec<A>,
    index: HashMap<A, usize>,
}

impl<A: Clone + Eq + Hash> Bucket<A> {
    fn new(degree: i64, basis: Vec<A>) -> Self {
        let index = basis.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        Bucket { degree, basis, index }
    }

    pub fn position(&self, a: &A) -> Option<usize> {
        self.index.get(a).copied()
    }
}

impl<A> Bucket<A> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Bases for degrees `lo − 1 ..= hi + 1` of one bucket and the boundary
/// matrices out of degrees `lo ..= hi + 1`.
#[derive(Clone, Debug)]
pub struct ComplexWindow<A> {
    pub provenance: String,
    pub bucket: i64,
    pub lo: i64,
    pub hi: i64,
    pub buckets: BTreeMap<i64, Bucket<A>>,
    /// `boundary[d]` maps degree `d` to degree `d − 1`.
    pub boundary: BTreeMap<i64, SparseMatrix>,
}

fn coordinates<A>(x: &Lin<A>, target: &Bucket<A>, what: &str) -> Result<Vec<(usize, Q)>>
where
    A: Ord + Clone + Eq + Hash + fmt::Display,
{
    let mut out = Vec::with_capacity(x.len());
    for (a, c) in x.iter() {
        let r = target.position(a).ok_or_else(|| {
            Error::Truncation(format!("{what}: {a} lies outside the degree {} basis", target.degree))
        })?;
        out.push((r, c.clone()));
    }
    Ok(out)
}

fn matrix_of<A, B, F>(src: &Bucket<A>, tgt: &Bucket<B>, f: F, what: &str) -> Result<SparseMatrix>
where
    A: Sync,
    B: Ord + Clone + Eq + Hash + fmt::Display + Sync,
    F: Fn(&A) -> Lin<B> + Sync,
{
    let cols: Vec<Result<Vec<(usize, Q)>>> = par::map(&src.basis, |a| coordinates(&f(a), tgt, what));
    let mut trip = Vec::new();
    for (c, col) in cols.into_iter().enumerate() {
        for (r, v) in col? {
            trip.push((r, c, v));
        }
    }
    SparseMatrix::from_triplets(tgt.dim(), src.dim(), trip)
}

/// Assembles the window of `spec` at `bucket` for degrees `lo ..= hi`.
pub fn build_window<S: ComplexSpec>(spec: &S, bucket: i64, lo: i64, hi: i64) -> Result<ComplexWindow<S::A>> {
    if lo > hi {
        return Err(Error::InvalidInput(format!("empty degree range {lo}..={hi}")));
    }
    let mut buckets = BTreeMap::new();
    for d in lo - 1..=hi + 1 {
        buckets.insert(d, Bucket::new(d, spec.basis(d, bucket)?));
    }
    let mut boundary = BTreeMap::new();
    for d in lo..=hi + 1 {
        let m = matrix_of(&buckets[&d], &buckets[&(d - 1)], |a| spec.differential(a), "boundary")?;
        boundary.insert(d, m);
    }
    Ok(ComplexWindow { provenance: spec.describe(), bucket, lo, hi, buckets, boundary })
}

impl<A> ComplexWindow<A> {
    pub fn dim(&self, d: i64) -> usize {
        self.buckets.get(&d).map_or(0, |b| b.basis.len())
    }

    /// Checks that adjacent boundaries compose to zero.
    pub fn d_squared_is_zero(&self) -> Result<bool> {
        for d in self.lo + 1..=self.hi + 1 {
            if !self.boundary[&(d - 1)].mul(&self.boundary[&d])?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Degree ↦ dim H for degrees `lo ..= hi`, zeros included.
    pub fn homology_dims(&self) -> BTreeMap<i64, usize> {
        let ranks: Vec<(i64, usize)> = self.boundary.iter().map(|(d, m)| (*d, m.rank())).collect();
        let rank: BTreeMap<i64, usize> = ranks.into_iter().collect();
        (self.lo..=self.hi).map(|d| (d, self.dim(d) - rank[&d] - rank[&(d + 1)])).collect()
    }

    /// The window with every basis reordered by `perm(degree, dim)`.
    pub fn permuted(&self, mut perm: impl FnMut(i64, usize) -> Vec<usize>) -> ComplexWindow<A>
    where
        A: Clone + Eq + Hash,
    {
        let perms: BTreeMap<i64, Vec<usize>> = self.buckets.keys().map(|d| (*d, perm(*d, self.dim(*d)))).collect();
        let inverse = |p: &Vec<usize>| {
            let mut inv = vec![0; p.len()];
            for (i, &j) in p.iter().enumerate() {
                inv[j] = i;
            }
            inv
        };
        let buckets = self
            .buckets
            .iter()
            .map(|(d, b)| (*d, Bucket::new(*d, perms[d].iter().map(|&i| b.basis[i].clone()).collect())))
            .collect();
        let boundary = self
            .boundary
            .iter()
            .map(|(d, m)| (*d, m.permuted(&inverse(&perms[&(d - 1)]), &inverse(&perms[d]))))
            .collect();
        ComplexWindow { provenance: self.provenance.clone(), bucket: self.bucket, lo: self.lo, hi: self.hi, buckets, boundary }
    }
}

/// A degree-preserving linear map between two windows on the same degree range.
#[derive(Clone, Debug)]
pub struct ChainMap {
    /// `matrix[d]` maps the source degree-`d` basis to the target one.
    pub matrix: BTreeMap<i64, SparseMatrix>,
}

/// Matrices of `f` on every degree of the windows.
pub fn chain_map<A, B, F>(f: F, src: &ComplexWindow<A>, tgt: &ComplexWindow<B>) -> Result<ChainMap>
where
    A: Sync,
    B: Ord + Clone + Eq + Hash + fmt::Display + Sync,
    F: Fn(&A) -> Lin<B> + Sync,
{
    if (src.lo, src.hi, src.bucket) != (tgt.lo, tgt.hi, tgt.bucket) {
        return Err(Error::Dimension(format!(
            "windows are not aligned: degrees {}..={} bucket {} against {}..={} bucket {}",
            src.lo, src.hi, src.bucket, tgt.lo, tgt.hi, tgt.bucket
        )));
    }
    let mut matrix = BTreeMap::new();
    for (d, b) in &src.buckets {
        matrix.insert(*d, matrix_of(b, &tgt.buckets[d], &f, "chain map")?);
    }
    Ok(ChainMap { matrix })
}

/// `d ∘ f − f ∘ d` on every degree `lo ..= hi + 1`.
pub fn chain_map_check<A, B>(f: &ChainMap, src: &ComplexWindow<A>, tgt: &ComplexWindow<B>) -> Result<BTreeMap<i64, SparseMatrix>> {
    let mut out = BTreeMap::new();
    for d in src.lo..=src.hi + 1 {
        let left = tgt.boundary[&d].mul(&f.matrix[&d])?;
        let right = f.matrix[&(d - 1)].mul(&src.boundary[&d])?;
        out.insert(d, left.sub(&right)?);
    }
    Ok(out)
}

/// Rank of the map induced on homology in one degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InducedRank {
    pub degree: i64,
    pub bucket: i64,
    pub source_dim: usize,
    pub target_dim: usize,
    pub rank: usize,
    pub iso: bool,
}

/// Rank on homology: cycles of the source are pushed forward and counted
/// modulo the target boundaries.
pub fn induced_map_rank<A, B>(f: &ChainMap, src: &ComplexWindow<A>, tgt: &ComplexWindow<B>) -> Result<Vec<InducedRank>> {
    let hs = src.homology_dims();
    let ht = tgt.homology_dims();
    let mut out = Vec::new();
    for d in src.lo..=src.hi {
        let cycles = src.boundary[&d].kernel_basis();
        let z = SparseMatrix::from_columns(src.dim(d), &cycles)?;
        let fz = f.matrix[&d].mul(&z)?;
        let b = &tgt.boundary[&(d + 1)];
        let rank = fz.hcat(b)?.rank() - b.rank();
        out.push(InducedRank {
            degree: d,
            bucket: src.bucket,
            source_dim: hs[&d],
            target_dim: ht[&d],
            rank,
            iso: rank == hs[&d] && rank == ht[&d],
        });
    }
    Ok(out)
}

/// One row of a homology table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomologyRow {
    pub degree: i64,
    pub bucket: i64,
    pub dim: usize,
}

/// Homology of `spec` on several buckets, each with its own degree range.
pub fn homology_dims<S: ComplexSpec>(spec: &S, ranges: &[(i64, i64, i64)]) -> Result<Vec<HomologyRow>> {
    let mut out = Vec::new();
    for &(bucket, lo, hi) in ranges {
        let w = build_window(spec, bucket, lo, hi)?;
        for (degree, dim) in w.homology_dims() {
            out.push(HomologyRow { degree, bucket, dim });
        }
    }
    Ok(out)
}

/// Tab-separated table with a header comment.
pub fn to_tsv(header: &str, rows: &[HomologyRow]) -> String {
    let mut s = format!("# {header}\n# graphcx {}\ndegree\tloop\tdim\n", env!("CARGO_PKG_VERSION"));
    for r in rows {
        s.push_str(&format!("{}\t{}\t{}\n", r.degree, r.bucket, r.dim));
    }
    s
}

pub fn to_json(header: &str, rows: &[HomologyRow]) -> String {
    let v = serde_json::json!({
        "complex": header,
        "version": env!("CARGO_PKG_VERSION"),
        "rows": rows,
    });
    serde_json::to_string_pretty(&v).expect("serializable") + "\n"
}

/// Outcome of the L-case comparison on one loop order.
#[derive(Clone, Debug, Serialize)]
pub struct LCaseBucket {
    pub loops: i64,
    pub lo: i64,
    pub hi: i64,
    pub chain_map_ok: bool,
    pub d_squared_ok: bool,
    pub ranks: Vec<InducedRank>,
}

impl LCaseBucket {
    pub fn iso(&self) -> bool {
        self.chain_map_ok && self.d_squared_ok && self.ranks.iter().all(|r| r.iso)
    }
}

/// Compares `K[1] ⊕ GC_n²[1] → HGC^L_{n,n}` (class 2) on loop orders
/// `0 ..= max_loops`, over all degrees whose target atoms have at most
/// `size` internal vertices plus hairs.
pub fn l_case_comparison(n: i32, max_loops: i64, size: i64) -> Result<Vec<LCaseBucket>> {
    l_case_with_map(n, max_loops, size, l_case_map(n))
}

/// As [`l_case_comparison`] with the map supplied (used for regression fixtures).
pub fn l_case_with_map<F>(n: i32, max_loops: i64, size: i64, f: F) -> Result<Vec<LCaseBucket>>
where
    F: Fn(&ShiftedAtom) -> Lin<Graph> + Sync,
{
    if n % 2 != 0 || n < 2 {
        return Err(Error::Precondition("the degree formula used for the window needs n = 2".into()));
    }
    let src_spec = ShiftedGcSpec { n };
    let tgt_spec = HgcSpec { m: n, n, class: Class(2), twist: Twist::Line, max_hairs: None };
    let mut out = Vec::new();
    for g in 0..=max_loops {
        // target degree is g + 1 − (V + H) for n = 2
        let hi = g;
        let lo = g + 1 - size;
        let src = build_window(&src_spec, g, lo, hi)?;
        let tgt = build_window(&tgt_spec, g, lo, hi)?;
        let map = chain_map(&f, &src, &tgt)?;
        let residual = chain_map_check(&map, &src, &tgt)?;
        let chain_map_ok = residual.values().all(SparseMatrix::is_zero);
        let d_squared_ok = src.d_squared_is_zero()? && tgt.d_squared_is_zero()?;
        let ranks = induced_map_rank(&map, &src, &tgt)?;
        out.push(LCaseBucket { loops: g, lo, hi, chain_map_ok, d_squared_ok, ranks });
    }
    Ok(out)
}

/// Sum of the absolute values of all entries, for quick reporting.
pub fn residual_norm(m: &BTreeMap<i64, SparseMatrix>) -> Q {
    let mut s = Q::zero();
    for x in m.values() {
        for (_, _, v) in x.entries() {
            s += if v < &Q::zero() { -v.clone() } else { v.clone() };
        }
    }
    s
}
