//! Rooted trees: the operad RT (the pre-Lie operad), its module-coloured
//! extension with a starred root, the twisted operad with black vertices and
//! its suboperad TRT, and the free pre-Lie algebra used as an identity oracle.
//!
//! Odd vertices (black vertices and odd generators) carry a Koszul order. In a
//! canonical tree that order is the preorder of the tree itself.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::One;

use crate::error::{Error, Result};
use crate::exactla::SparseMatrix;
use crate::lin::{bilinear, multilinear, sign_q, Atom, Lin, Q};
use crate::par;
use crate::sign::sort_sign_odd;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Label {
    /// The module generator; only ever the root.
    Star,
    White(u8),
    /// A generator of odd degree (free pre-Lie oracle only).
    OddWhite(u8),
    Black,
}

impl Label {
    pub fn is_odd(self) -> bool {
        matches!(self, Label::Black | Label::OddWhite(_))
    }

    fn white_id(self) -> Option<u8> {
        match self {
            Label::White(i) | Label::OddWhite(i) => Some(i),
            _ => None,
        }
    }
}

/// A rooted tree in canonical form: children sorted, odd vertices ordered by
/// preorder.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Tree {
    pub label: Label,
    pub children: Vec<Tree>,
}

pub type TreeCombination = Lin<Tree>;

impl Tree {
    pub fn leaf(label: Label) -> Tree {
        Tree { label, children: vec![] }
    }

    pub fn white(i: u8) -> Tree {
        Tree::leaf(Label::White(i))
    }

    pub fn node(label: Label, children: Vec<Tree>) -> Tree {
        Tree { label, children }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    pub fn count(&self, f: &impl Fn(Label) -> bool) -> usize {
        usize::from(f(self.label)) + self.children.iter().map(|c| c.count(f)).sum::<usize>()
    }

    pub fn blacks(&self) -> usize {
        self.count(&|l| l == Label::Black)
    }

    pub fn whites(&self) -> usize {
        self.count(&|l| l.white_id().is_some())
    }

    pub fn labels(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.walk(&mut |l| {
            if let Some(i) = l.white_id() {
                out.push(i)
            }
        });
        out
    }

    fn walk(&self, f: &mut impl FnMut(Label)) {
        f(self.label);
        for c in &self.children {
            c.walk(f);
        }
    }

    /// Every black vertex has at least two children.
    pub fn is_trt(&self) -> bool {
        (self.label != Label::Black || self.children.len() >= 2) && self.children.iter().all(Tree::is_trt)
    }

    /// Canonical form of an arbitrary tree (odd vertices ordered by the given
    /// preorder), with sign; `None` if an automorphism acts by −1.
    pub fn canonical(&self) -> Option<(Tree, bool)> {
        canonical_flat(&Flat::from_tree(self, 0))
    }
}

impl Atom for Tree {
    fn degree(&self) -> i64 {
        self.count(&|l| matches!(l, Label::OddWhite(_))) as i64 - self.blacks() as i64
    }

    fn weight(&self) -> i64 {
        self.blacks() as i64
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label {
            Label::Star => write!(f, "M")?,
            Label::Black => write!(f, "b")?,
            Label::White(i) => write!(f, "{i}")?,
            Label::OddWhite(i) => write!(f, "{i}'")?,
        }
        if !self.children.is_empty() {
            write!(f, "(")?;
            for (k, c) in self.children.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Arena form used while building trees. `rank` orders odd vertices.
#[derive(Clone, Debug, Default)]
pub(crate) struct Flat {
    label: Vec<Label>,
    rank: Vec<u32>,
    parent: Vec<Option<usize>>,
}

impl Flat {
    fn from_tree(t: &Tree, base: u32) -> Flat {
        let mut f = Flat::default();
        let mut next = base;
        f.append(t, None, &mut next);
        f
    }

    /// Appends `t` below `parent`; odd vertices get ranks from `next` on.
    fn append(&mut self, t: &Tree, parent: Option<usize>, next: &mut u32) -> usize {
        let id = self.push(t.label, parent, 0);
        if t.label.is_odd() {
            self.rank[id] = *next;
            *next += 1;
        }
        for c in &t.children {
            self.append(c, Some(id), next);
        }
        id
    }

    fn push(&mut self, label: Label, parent: Option<usize>, rank: u32) -> usize {
        self.label.push(label);
        self.rank.push(rank);
        self.parent.push(parent);
        self.label.len() - 1
    }

    fn len(&self) -> usize {
        self.label.len()
    }

    fn root(&self) -> usize {
        self.parent.iter().position(Option::is_none).expect("tree without root")
    }

    fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.len()];
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                ch[*p].push(i);
            }
        }
        ch
    }
}

pub(crate) fn canonical_flat(f: &Flat) -> Option<(Tree, bool)> {
    fn rec(f: &Flat, ch: &[Vec<usize>], v: usize) -> Option<(Tree, Vec<u32>)> {
        let mut kids = Vec::with_capacity(ch[v].len());
        for &c in &ch[v] {
            kids.push(rec(f, ch, c)?);
        }
        kids.sort_by(|a, b| a.0.cmp(&b.0));
        for w in kids.windows(2) {
            if w[0].0 == w[1].0 && w[0].1.len() % 2 == 1 {
                return None;
            }
        }
        let mut ranks = Vec::new();
        if f.label[v].is_odd() {
            ranks.push(f.rank[v]);
        }
        let mut children = Vec::with_capacity(kids.len());
        for (t, r) in kids {
            ranks.extend(r);
            children.push(t);
        }
        Some((Tree { label: f.label[v], children }, ranks))
    }
    let ch = f.children();
    let (t, ranks) = rec(f, &ch, f.root())?;
    let keyed: Vec<(u32, bool)> = ranks.into_iter().map(|r| (r, true)).collect();
    Some((t, sort_sign_odd(&keyed)))
}

fn add_flat(out: &mut Lin<Tree>, f: &Flat, c: &Q) {
    if let Some((t, neg)) = canonical_flat(f) {
        if neg {
            out.add_term(t, -c.clone());
        } else {
            out.add_term(t, c.clone());
        }
    }
}

/// Canonical combination from a (possibly non-canonical) tree.
pub fn canonical_combination(t: &Tree) -> Lin<Tree> {
    let mut out = Lin::zero();
    add_flat(&mut out, &Flat::from_tree(t, 0), &Q::one());
    out
}

// ---------------------------------------------------------------- grammar

fn syntax(col: usize, msg: &str) -> Error {
    Error::Syntax { line: 1, col: col + 1, msg: msg.into() }
}

/// Parses `1(3,4(2,5))`, `b(1,2)`, `M(1)`; `3'` is an odd generator.
pub fn parse_tree(s: &str) -> Result<Tree> {
    let b = s.as_bytes();
    let mut p = 0;
    let t = parse_node(b, &mut p)?;
    skip_ws(b, &mut p);
    if p != b.len() {
        return Err(syntax(p, "unexpected trailing input"));
    }
    Ok(t)
}

fn skip_ws(b: &[u8], p: &mut usize) {
    while *p < b.len() && b[*p].is_ascii_whitespace() {
        *p += 1;
    }
}

fn parse_node(b: &[u8], p: &mut usize) -> Result<Tree> {
    skip_ws(b, p);
    let start = *p;
    let label = match b.get(*p) {
        Some(b'b') => {
            *p += 1;
            Label::Black
        }
        Some(b'M') => {
            *p += 1;
            Label::Star
        }
        Some(c) if c.is_ascii_digit() => {
            while *p < b.len() && b[*p].is_ascii_digit() {
                *p += 1;
            }
            let n: u8 = std::str::from_utf8(&b[start..*p])
                .unwrap()
                .parse()
                .map_err(|_| syntax(start, "label out of range"))?;
            if n == 0 {
                return Err(syntax(start, "labels start at 1"));
            }
            if b.get(*p) == Some(&b'\'') {
                *p += 1;
                Label::OddWhite(n)
            } else {
                Label::White(n)
            }
        }
        _ => return Err(syntax(start, "expected a label, `b` or `M`")),
    };
    let mut children = Vec::new();
    skip_ws(b, p);
    if b.get(*p) == Some(&b'(') {
        *p += 1;
        loop {
            children.push(parse_node(b, p)?);
            skip_ws(b, p);
            match b.get(*p) {
                Some(b',') => *p += 1,
                Some(b')') => {
                    *p += 1;
                    break;
                }
                _ => return Err(syntax(*p, "expected `,` or `)`")),
            }
        }
    }
    Ok(Tree { label, children })
}

/// Checks RT well-formedness: white labels 1..r used once, a star only at the
/// root.
pub fn validate(t: &Tree) -> Result<usize> {
    let mut labels = t.labels();
    labels.sort_unstable();
    let r = labels.len();
    if labels.iter().enumerate().any(|(i, &l)| l as usize != i + 1) {
        return Err(Error::InvalidInput(format!("white labels of {t} are not exactly 1..{r}")));
    }
    if t.children.iter().any(|c| c.count(&|l| l == Label::Star) > 0) {
        return Err(Error::InvalidInput(format!("star below the root in {t}")));
    }
    Ok(r)
}

// ------------------------------------------------------------- operations

fn relabel(t: &Tree, f: &impl Fn(u8) -> u8) -> Tree {
    let label = match t.label {
        Label::White(i) => Label::White(f(i)),
        Label::OddWhite(i) => Label::OddWhite(f(i)),
        l => l,
    };
    Tree { label, children: t.children.iter().map(|c| relabel(c, f)).collect() }
}

impl Flat {
    /// Drops vertex `w`, which must have no children.
    fn without(&self, w: usize) -> Flat {
        let map = |i: usize| if i > w { i - 1 } else { i };
        let mut f = Flat::default();
        for i in 0..self.len() {
            if i != w {
                f.push(self.label[i], self.parent[i].map(map), self.rank[i]);
            }
        }
        f
    }
}

/// Calls `f` once for every function `0..k -> targets`.
fn for_each_function(k: usize, targets: &[usize], mut f: impl FnMut(&[usize])) {
    if targets.is_empty() && k > 0 {
        return;
    }
    let mut idx = vec![0usize; k];
    let mut pick = vec![0usize; k];
    loop {
        for j in 0..k {
            pick[j] = targets[idx[j]];
        }
        f(&pick);
        let mut j = 0;
        loop {
            if j == k {
                return;
            }
            idx[j] += 1;
            if idx[j] < targets.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Symmetric brace `x•(y₁,…,y_r)`: each `y_j` is grafted onto some vertex of
/// `x`, summed over all choices. With `r = 1` this is the pre-Lie product.
pub fn brace_atoms(x: &Tree, ys: &[&Tree]) -> Lin<Tree> {
    let mut f = Flat::default();
    let mut next = 0;
    f.append(x, None, &mut next);
    let hosts: Vec<usize> = (0..f.len()).collect();
    let roots: Vec<usize> = ys.iter().map(|y| f.append(y, None, &mut next)).collect();
    let mut out = Lin::zero();
    for_each_function(roots.len(), &hosts, |pick| {
        let mut g = f.clone();
        for (r, &v) in roots.iter().zip(pick) {
            g.parent[*r] = Some(v);
        }
        add_flat(&mut out, &g, &Q::one());
    });
    out
}

/// The free pre-Lie product: `x•y` grafts the root of `y` onto every vertex of
/// `x`. Generators may repeat.
pub fn prelie(x: &Lin<Tree>, y: &Lin<Tree>) -> Lin<Tree> {
    bilinear(x, y, |a, b| brace_atoms(a, &[b]))
}

/// `x•(y₁,…,y_r)` extended multilinearly.
pub fn brace(x: &Lin<Tree>, ys: &[Lin<Tree>]) -> Lin<Tree> {
    let mut args: Vec<&Lin<Tree>> = vec![x];
    args.extend(ys.iter());
    multilinear(&args, |a| brace_atoms(a[0], &a[1..]))
}

/// Module corolla `m∘(x₁,…,x_r)`; `m` must be rooted at the star.
pub fn module_brace(m: &Lin<Tree>, xs: &[Lin<Tree>]) -> Result<Lin<Tree>> {
    if m.atoms().any(|t| t.label != Label::Star) {
        return Err(Error::InvalidInput("module elements are rooted at the star `M`".into()));
    }
    Ok(brace(m, xs))
}

/// Graded commutator of the pre-Lie product.
pub fn bracket(x: &Lin<Tree>, y: &Lin<Tree>) -> Lin<Tree> {
    bilinear(x, y, |a, b| {
        let mut out = brace_atoms(a, &[b]);
        out.add_scaled(&brace_atoms(b, &[a]), &-sign_q(a.parity() && b.parity()));
        out
    })
}

/// Grafting in the operad: like the pre-Lie product but refuses shared labels.
pub fn graft(t: &Tree, s: &Tree) -> Result<Lin<Tree>> {
    let a = t.labels();
    if s.labels().iter().any(|l| a.contains(l)) {
        return Err(Error::InvalidInput(format!("label clash between {t} and {s}")));
    }
    Ok(brace_atoms(t, &[s]))
}

/// Operadic composition `t ∘ᵢ s`: `s` replaces the vertex labelled `i`, the
/// parent edge of `i` goes to the root of `s`, and each child subtree of `i`
/// is reattached to some vertex of `s` (summed). Labels of `s` become
/// `i, …, i+q−1`, labels of `t` above `i` move up by `q−1`. Odd vertices of
/// `s` precede those of `t`.
pub fn rt_compose(t: &Tree, i: u8, s: &Tree) -> Result<Lin<Tree>> {
    if !t.labels().contains(&i) {
        return Err(Error::InvalidInput(format!("label {i} does not occur in {t}")));
    }
    let q = s.whites() as u8;
    let t2 = relabel(t, &|l| if l > i { l + q - 1 } else { l });
    let s2 = relabel(s, &|l| l + i - 1);
    let mut f = Flat::default();
    let mut next = 0;
    let sroot = f.append(&s2, None, &mut next);
    let snodes: Vec<usize> = (0..f.len()).collect();
    let troot = f.append(&t2, None, &mut next);
    let w = (troot..f.len())
        .find(|&v| f.label[v].white_id() == Some(i))
        .expect("label checked above");
    f.parent[sroot] = f.parent[w];
    let kids: Vec<usize> = (0..f.len()).filter(|&v| f.parent[v] == Some(w)).collect();
    let mut out = Lin::zero();
    for_each_function(kids.len(), &snodes, |pick| {
        let mut g = f.clone();
        for (c, &v) in kids.iter().zip(pick) {
            g.parent[*c] = Some(v);
        }
        add_flat(&mut out, &g.without(w), &Q::one());
    });
    Ok(out)
}

/// Extends `rt_compose` linearly.
pub fn rt_compose_lin(t: &Lin<Tree>, i: u8, s: &Lin<Tree>) -> Result<Lin<Tree>> {
    let mut out = Lin::zero();
    for (a, ca) in t.iter() {
        for (b, cb) in s.iter() {
            out.add_scaled(&rt_compose(a, i, b)?, &(ca * cb));
        }
    }
    Ok(out)
}

// ------------------------------------------------------------- twisting

/// The differential of the twisted operad on one tree. White vertices are
/// treated as even generators and the star is not allowed.
pub fn tw_differential_atom(t: &Tree) -> Lin<Tree> {
    tw_parts(t, true, true)
}

/// The internal differential of the free pre-Lie algebra on white generators
/// and a black `α` with `dα = −α•α`: a derivation splitting each black vertex.
pub fn split_blacks(x: &Lin<Tree>) -> Lin<Tree> {
    x.map_linear(|t| tw_parts(t, false, false))
}

fn tw_parts(t: &Tree, outer: bool, whites: bool) -> Lin<Tree> {
    debug_assert!(t.count(&|l| l == Label::Star) == 0, "twisted differential on a module tree");
    // odd vertices of t get even ranks 2, 4, ...; a new black vertex placed
    // first gets 0, placed last gets u32::MAX, a split of rank R gets R, R+1
    let mut base = Flat::default();
    let mut next = 0;
    base.append(t, None, &mut next);
    for r in base.rank.iter_mut() {
        *r = 2 * (*r + 1);
    }
    let n = base.len();
    let odd_count = (0..n).filter(|&v| base.label[v].is_odd()).count();
    let mut out = Lin::zero();
    let one = Q::one();
    let minus = -Q::one();

    if outer {
        // α•T
        let mut g = base.clone();
        let b = g.push(Label::Black, None, 0);
        let root = base.root();
        g.parent[root] = Some(b);
        add_flat(&mut out, &g, &one);

        // −(−1)^{|T|} T•α
        let c = -sign_q(odd_count % 2 == 1);
        for v in 0..n {
            let mut g = base.clone();
            g.push(Label::Black, Some(v), u32::MAX);
            add_flat(&mut out, &g, &c);
        }
    }

    let kids = base.children();
    for w in 0..n {
        match base.label[w] {
            Label::White(_) | Label::OddWhite(_) if whites => {
                // −T∘_w(α→w) + T∘_w(w→α)
                for upper in [true, false] {
                    let mut g = base.clone();
                    let b = g.push(Label::Black, None, 0);
                    if upper {
                        g.parent[b] = g.parent[w];
                        g.parent[w] = Some(b);
                    } else {
                        g.parent[b] = Some(w);
                    }
                    let coef = if upper { &minus } else { &one };
                    for_each_function(kids[w].len(), &[w, b], |pick| {
                        let mut h = g.clone();
                        for (c, &v) in kids[w].iter().zip(pick) {
                            h.parent[*c] = Some(v);
                        }
                        add_flat(&mut out, &h, coef);
                    });
                }
            }
            Label::Black => {
                // dα = −α•α in slot j
                let j = (0..n).filter(|&v| base.label[v].is_odd() && base.rank[v] < base.rank[w]).count();
                let coef = -sign_q(j % 2 == 1);
                let mut g = base.clone();
                let b2 = g.push(Label::Black, Some(w), base.rank[w] + 1);
                for_each_function(kids[w].len(), &[w, b2], |pick| {
                    let mut h = g.clone();
                    for (c, &v) in kids[w].iter().zip(pick) {
                        h.parent[*c] = Some(v);
                    }
                    add_flat(&mut out, &h, &coef);
                });
            }
            _ => {}
        }
    }
    out
}

pub fn tw_differential(x: &Lin<Tree>) -> Lin<Tree> {
    x.map_linear(tw_differential_atom)
}

fn subsets<T: Clone>(items: &[T]) -> Vec<(Vec<T>, Vec<T>)> {
    let mut out = Vec::with_capacity(1 << items.len());
    for mask in 0u32..(1 << items.len()) {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, x) in items.iter().enumerate() {
            if mask >> i & 1 == 1 {
                a.push(x.clone());
            } else {
                b.push(x.clone());
            }
        }
        out.push((a, b));
    }
    out
}

/// TRT trees on the given white labels with `k` black vertices.
fn trt_trees(set: &[u8], k: usize) -> Vec<Tree> {
    let mut out = Vec::new();
    for (pos, &l) in set.iter().enumerate() {
        let mut rest = set.to_vec();
        rest.remove(pos);
        for f in trt_forests(&rest, k) {
            out.push(Tree::node(Label::White(l), f));
        }
    }
    if k >= 1 {
        for f in trt_forests(set, k - 1) {
            if f.len() >= 2 {
                out.push(Tree::node(Label::Black, f));
            }
        }
    }
    out
}

fn trt_forests(set: &[u8], k: usize) -> Vec<Vec<Tree>> {
    if set.is_empty() {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    let first = set[0];
    let mut out = Vec::new();
    for (mut block, rest) in subsets(&set[1..]) {
        block.insert(0, first);
        for k1 in 0..=k {
            let ts = trt_trees(&block, k1);
            if ts.is_empty() {
                continue;
            }
            for f in trt_forests(&rest, k - k1) {
                for t in &ts {
                    let mut g = vec![t.clone()];
                    g.extend(f.iter().cloned());
                    out.push(g);
                }
            }
        }
    }
    out
}

/// All canonical TRT trees of arity `r` with `k` black vertices.
pub fn trt_basis(r: usize, k: usize) -> Vec<Tree> {
    if r == 0 || r > 255 {
        return vec![];
    }
    let set: Vec<u8> = (1..=r as u8).collect();
    let mut out: Vec<Tree> = trt_trees(&set, k).iter().filter_map(|t| t.canonical().map(|(c, _)| c)).collect();
    out.sort();
    out.dedup();
    out
}

/// Every nonzero canonical tree with at most `max_size` vertices whose labels
/// are drawn (with repetition) from `palette`.
pub fn trees_up_to(palette: &[Label], max_size: usize) -> Vec<Tree> {
    // forests[s] = ordered lists of raw trees with s vertices in total
    let mut raw: Vec<Vec<Tree>> = vec![vec![]; max_size + 1];
    let mut forests: Vec<Vec<Vec<Tree>>> = vec![vec![]; max_size + 1];
    forests[0].push(vec![]);
    for s in 1..=max_size {
        for l in palette {
            for f in &forests[s - 1] {
                raw[s].push(Tree::node(*l, f.clone()));
            }
        }
        // forests of total size s, first tree of size k, children kept sorted
        let mut fs = Vec::new();
        for k in 1..=s {
            for t in &raw[k] {
                for rest in &forests[s - k] {
                    if rest.first().is_none_or(|r| t <= r) {
                        let mut f = vec![t.clone()];
                        f.extend(rest.iter().cloned());
                        fs.push(f);
                    }
                }
            }
        }
        forests[s] = fs;
    }
    let mut out: Vec<Tree> = raw.iter().flatten().filter_map(|t| t.canonical().map(|(c, _)| c)).collect();
    out.sort();
    out.dedup();
    out
}

pub const MAX_TRT_ARITY: usize = 6;

/// Matrix of the differential from `TRT(r)` with `k` black vertices to `k+1`.
pub fn trt_differential_matrix(r: usize, k: usize) -> Result<SparseMatrix> {
    let dom = trt_basis(r, k);
    let cod = trt_basis(r, k + 1);
    let index: BTreeMap<&Tree, usize> = cod.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let images = par::map(&dom, tw_differential_atom);
    let mut trip = Vec::new();
    for (c, img) in images.iter().enumerate() {
        for (t, v) in img.iter() {
            let r = *index
                .get(t)
                .ok_or_else(|| Error::Precondition(format!("d leaves TRT: {t} in d({})", dom[c])))?;
            trip.push((r, c, v.clone()));
        }
    }
    SparseMatrix::from_triplets(cod.len(), dom.len(), trip)
}

/// Homology of `TRT(r)` as degree ↦ dimension (nonzero entries only). The
/// degree of a tree is minus its number of black vertices.
pub fn trt_homology(r: usize) -> Result<BTreeMap<i64, usize>> {
    if r == 0 || r > MAX_TRT_ARITY {
        return Err(Error::Precondition(format!("TRT homology is computed for arity 1..={MAX_TRT_ARITY}, got {r}")));
    }
    let dims: Vec<usize> = (0..r).map(|k| trt_basis(r, k).len()).collect();
    let ranks: Vec<Result<usize>> = par::map_range(r, |k| Ok(trt_differential_matrix(r, k)?.rank()));
    let ranks: Vec<usize> = ranks.into_iter().collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for k in 0..r {
        let h = dims[k] - ranks[k] - if k > 0 { ranks[k - 1] } else { 0 };
        if h > 0 {
            out.insert(-(k as i64), h);
        }
    }
    Ok(out)
}

// ------------------------------------------------------------- Lie words

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LieWord {
    Gen(u8),
    Br(Box<LieWord>, Box<LieWord>),
}

impl LieWord {
    pub fn letters(&self) -> Vec<u8> {
        match self {
            LieWord::Gen(i) => vec![*i],
            LieWord::Br(a, b) => {
                let mut v = a.letters();
                v.extend(b.letters());
                v
            }
        }
    }
}

pub fn parse_lie_word(s: &str) -> Result<LieWord> {
    fn rec(b: &[u8], p: &mut usize) -> Result<LieWord> {
        skip_ws(b, p);
        match b.get(*p) {
            Some(b'[') => {
                *p += 1;
                let x = rec(b, p)?;
                skip_ws(b, p);
                if b.get(*p) != Some(&b',') {
                    return Err(syntax(*p, "expected `,`"));
                }
                *p += 1;
                let y = rec(b, p)?;
                skip_ws(b, p);
                if b.get(*p) != Some(&b']') {
                    return Err(syntax(*p, "expected `]`"));
                }
                *p += 1;
                Ok(LieWord::Br(Box::new(x), Box::new(y)))
            }
            Some(c) if c.is_ascii_digit() => {
                let s = *p;
                while *p < b.len() && b[*p].is_ascii_digit() {
                    *p += 1;
                }
                let n: u8 = std::str::from_utf8(&b[s..*p]).unwrap().parse().map_err(|_| syntax(s, "label out of range"))?;
                Ok(LieWord::Gen(n))
            }
            _ => Err(syntax(*p, "expected `[` or a label")),
        }
    }
    let b = s.as_bytes();
    let mut p = 0;
    let w = rec(b, &mut p)?;
    skip_ws(b, &mut p);
    if p != b.len() {
        return Err(syntax(p, "unexpected trailing input"));
    }
    let mut l = w.letters();
    l.sort_unstable();
    if l.iter().enumerate().any(|(i, &x)| x as usize != i + 1) {
        return Err(Error::InvalidInput(format!("a Lie monomial uses each label 1..{} exactly once", l.len())));
    }
    Ok(w)
}

/// Image of a Lie monomial under `[1,2] ↦ (1→2) − (2→1)`.
pub fn lie_image(w: &LieWord) -> Lin<Tree> {
    match w {
        LieWord::Gen(i) => Lin::atom(Tree::white(*i)),
        LieWord::Br(a, b) => bracket(&lie_image(a), &lie_image(b)),
    }
}

/// Generator of the free pre-Lie algebra.
pub fn generator(i: u8, odd: bool) -> Lin<Tree> {
    Lin::atom(Tree::leaf(if odd { Label::OddWhite(i) } else { Label::White(i) }))
}

/// `((x•y₁)•y₂)•…•y_n`.
pub fn left_nested(x: &Lin<Tree>, ys: &[Lin<Tree>]) -> Lin<Tree> {
    ys.iter().fold(x.clone(), |acc, y| prelie(&acc, y))
}
