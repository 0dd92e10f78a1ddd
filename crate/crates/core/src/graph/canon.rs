//! Canonical labeling by colour refinement and individualization, with
//! orientation signs.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Mutex;

use super::{End, Graph};
use crate::error::Result;
use crate::sign::{perm_parity, sort_sign_odd};

/// Automorphism data of a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutReport {
    pub order: u128,
    pub orientation_reversing: bool,
}

type Canon = Option<(Graph, bool)>;

const SHARDS: usize = 64;
const SHARD_CAP: usize = 1 << 15;

struct Cache {
    shards: Vec<Mutex<HashMap<Graph, Canon>>>,
}

fn cache() -> &'static Cache {
    static CACHE: std::sync::OnceLock<Cache> = std::sync::OnceLock::new();
    CACHE.get_or_init(|| Cache { shards: (0..SHARDS).map(|_| Mutex::new(HashMap::new())).collect() })
}

fn shard_of(g: &Graph) -> usize {
    let mut h = DefaultHasher::new();
    g.hash(&mut h);
    (h.finish() as usize) % SHARDS
}

pub fn clear_cache() {
    for s in &cache().shards {
        s.lock().unwrap().clear();
    }
}

/// Canonical representative and orientation sign (`true` = −1), or `None`
/// when an automorphism reverses the orientation.
pub fn canonicalize(g: &Graph) -> Result<Canon> {
    g.validate()?;
    Ok(canonicalize_unchecked(g))
}

/// As [`canonicalize`], for graphs already known to be valid.
pub fn canonicalize_unchecked(g: &Graph) -> Canon {
    let s = shard_of(g);
    if let Some(hit) = cache().shards[s].lock().unwrap().get(g) {
        return hit.clone();
    }
    let res = compute(g);
    let mut shard = cache().shards[s].lock().unwrap();
    if shard.len() >= SHARD_CAP {
        shard.clear();
    }
    shard.insert(g.clone(), res.clone());
    res
}

/// Canonical layout ignoring orientation; equal for isomorphic graphs.
pub fn structure_key(g: &Graph) -> Graph {
    let st = Structure::new(g);
    let mut search = Search::new(g, &st, true, false);
    search.run();
    search.best.expect("search always reaches a leaf").0
}

pub fn automorphism_report(g: &Graph) -> Result<AutReport> {
    g.validate()?;
    let st = Structure::new(g);
    if g.v == 0 {
        return Ok(AutReport { order: 2, orientation_reversing: line_is_zero(g) });
    }
    let mut search = Search::new(g, &st, false, true);
    search.run();
    let mut order = search.min_leaves as u128;
    for a in 0..g.v {
        order *= fact(st.hc[a]);
        for b in a + 1..g.v {
            order *= fact(st.mult[a * g.v + b] as usize);
        }
    }
    Ok(AutReport { order, orientation_reversing: compute(g).is_none() })
}

fn fact(k: usize) -> u128 {
    (1..=k as u128).product()
}

fn line_is_zero(g: &Graph) -> bool {
    g.m_odd() != !g.n_even()
}

fn compute(g: &Graph) -> Canon {
    if g.v == 0 {
        // the line graph: one edge between two hairs
        if line_is_zero(g) {
            return None;
        }
        let flip = !g.n_even() && g.edges[0].0 == End::H(1);
        let lg = Graph { edges: vec![(End::H(0), End::H(1))], ..g.clone() };
        return Some((lg, flip));
    }
    let st = Structure::new(g);
    for a in 0..g.v {
        if st.hc[a] >= 2 && (g.m_odd() != g.n_even()) {
            return None;
        }
        if g.n_even() {
            for b in a + 1..g.v {
                if st.mult[a * g.v + b] >= 2 {
                    return None;
                }
            }
        }
    }
    let mut search = Search::new(g, &st, true, false);
    search.run();
    if search.zero {
        return None;
    }
    let (layout, sign) = search.best.expect("search always reaches a leaf");
    Some((layout, sign))
}

struct Structure {
    v: usize,
    mult: Vec<u8>,
    hc: Vec<usize>,
    val: Vec<usize>,
}

impl Structure {
    fn new(g: &Graph) -> Structure {
        let v = g.v;
        let mut mult = vec![0u8; v * v];
        let mut hc = vec![0; v];
        let mut val = vec![0; v];
        for (a, b) in &g.edges {
            match (a, b) {
                (End::V(x), End::V(y)) => {
                    let (x, y) = (*x as usize, *y as usize);
                    mult[x * v + y] += 1;
                    mult[y * v + x] += 1;
                    val[x] += 1;
                    val[y] += 1;
                }
                (End::V(x), End::H(_)) | (End::H(_), End::V(x)) => {
                    hc[*x as usize] += 1;
                    val[*x as usize] += 1;
                }
                _ => {}
            }
        }
        Structure { v, mult, hc, val }
    }

    fn m(&self, a: usize, b: usize) -> u8 {
        self.mult[a * self.v + b]
    }

    fn twins(&self, u: usize, w: usize) -> bool {
        self.hc[u] == self.hc[w]
            && (0..self.v).all(|x| x == u || x == w || self.m(u, x) == self.m(w, x))
    }
}

/// Replaces arbitrary colour values by their dense ranks.
fn rank(keys: &[Vec<u32>]) -> Vec<u32> {
    let mut sorted: Vec<&Vec<u32>> = keys.iter().collect();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(&k).unwrap() as u32).collect()
}

fn count_colors(c: &[u32]) -> usize {
    let mut s = c.to_vec();
    s.sort_unstable();
    s.dedup();
    s.len()
}

fn refine(st: &Structure, mut colors: Vec<u32>) -> Vec<u32> {
    let mut k = count_colors(&colors);
    loop {
        let keys: Vec<Vec<u32>> = (0..st.v)
            .map(|a| {
                let mut nb: Vec<(u32, u32)> = (0..st.v)
                    .filter(|&b| st.m(a, b) > 0)
                    .map(|b| (colors[b], st.m(a, b) as u32))
                    .collect();
                nb.sort_unstable();
                let mut key = vec![colors[a]];
                for (c, mm) in nb {
                    key.push(c);
                    key.push(mm);
                }
                key
            })
            .collect();
        let next = rank(&keys);
        let k2 = count_colors(&next);
        colors = next;
        if k2 == k {
            return colors;
        }
        k = k2;
    }
}

struct Search<'a> {
    g: &'a Graph,
    st: &'a Structure,
    prune: bool,
    count: bool,
    best: Option<(Graph, bool)>,
    zero: bool,
    min_leaves: usize,
}

impl<'a> Search<'a> {
    fn new(g: &'a Graph, st: &'a Structure, prune: bool, count: bool) -> Self {
        Search { g, st, prune, count, best: None, zero: false, min_leaves: 0 }
    }

    fn run(&mut self) {
        let init: Vec<Vec<u32>> = (0..self.st.v)
            .map(|a| vec![self.st.hc[a] as u32, self.st.val[a] as u32])
            .collect();
        let colors = refine(self.st, rank(&init));
        self.descend(colors);
    }

    fn descend(&mut self, colors: Vec<u32>) {
        if self.zero {
            return;
        }
        let v = self.st.v;
        let mut size = vec![0usize; v];
        for c in &colors {
            size[*c as usize] += 1;
        }
        let Some(target) = (0..v).find(|c| size[*c] > 1) else {
            self.leaf(&colors);
            return;
        };
        let cell: Vec<usize> = (0..v).filter(|a| colors[*a] as usize == target).collect();
        let mut tried: Vec<usize> = Vec::new();
        for &u in &cell {
            if self.prune {
                if let Some(&t) = tried.iter().find(|&&t| self.st.twins(t, u)) {
                    if self.transposition_sign(t, u) {
                        self.zero = true;
                        return;
                    }
                    continue;
                }
            }
            tried.push(u);
            let keys: Vec<Vec<u32>> = (0..v)
                .map(|a| vec![colors[a], if a == u { 0 } else { 1 }])
                .collect();
            self.descend(refine(self.st, rank(&keys)));
            if self.zero {
                return;
            }
        }
    }

    /// Orientation sign of the automorphism swapping twins `a` and `b`.
    fn transposition_sign(&self, a: usize, b: usize) -> bool {
        let id: Vec<u32> = (0..self.st.v as u32).collect();
        let mut tau = id.clone();
        tau.swap(a, b);
        layout(self.g, &id).1 != layout(self.g, &tau).1
    }

    fn leaf(&mut self, labels: &[u32]) {
        let (lg, sign) = layout(self.g, labels);
        match &self.best {
            None => {
                self.best = Some((lg, sign));
                self.min_leaves = 1;
            }
            Some((bg, bs)) => match lg.edges.cmp(&bg.edges) {
                std::cmp::Ordering::Less => {
                    self.best = Some((lg, sign));
                    self.min_leaves = 1;
                }
                std::cmp::Ordering::Equal => {
                    self.min_leaves += 1;
                    if *bs != sign && !self.count {
                        self.zero = true;
                    }
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }
}

/// Layout of `g` under the vertex relabeling `labels` (old index → new index),
/// with the orientation sign relating `g` to it. Parallel edges and hairs keep
/// their relative order.
fn layout(g: &Graph, labels: &[u32]) -> (Graph, bool) {
    let ne = g.edges.len();
    let mut keys: Vec<(u8, u32, u32)> = Vec::with_capacity(ne);
    let mut flips = false;
    for (a, b) in &g.edges {
        match (a, b) {
            (End::V(x), End::V(y)) => {
                let (lx, ly) = (labels[*x as usize], labels[*y as usize]);
                if lx > ly {
                    flips = !flips;
                }
                keys.push((0, lx.min(ly), lx.max(ly)));
            }
            (End::V(x), End::H(_)) => keys.push((1, labels[*x as usize], 0)),
            (End::H(_), End::V(x)) => {
                flips = !flips;
                keys.push((1, labels[*x as usize], 0));
            }
            _ => unreachable!("hair-to-hair edges only occur in the line graph"),
        }
    }
    let mut order: Vec<usize> = (0..ne).collect();
    order.sort_by_key(|&i| (keys[i], i));
    let mut hair_map = vec![0usize; g.h];
    let mut edges = Vec::with_capacity(ne);
    let mut next_hair = 0u8;
    for &i in &order {
        let (k, x, y) = keys[i];
        if k == 0 {
            edges.push((End::V(x as u8), End::V(y as u8)));
        } else {
            let old = match g.edges[i] {
                (End::H(hh), _) | (_, End::H(hh)) => hh as usize,
                _ => unreachable!(),
            };
            hair_map[old] = next_hair as usize;
            edges.push((End::V(x as u8), End::H(next_hair)));
            next_hair += 1;
        }
    }
    let mut sign = false;
    if g.n_even() {
        let tagged: Vec<((u8, u32, u32), bool)> = keys.iter().map(|k| (*k, true)).collect();
        sign ^= sort_sign_odd(&tagged);
    } else {
        let perm: Vec<usize> = labels.iter().map(|x| *x as usize).collect();
        sign ^= perm_parity(&perm) ^ flips;
    }
    if g.m_odd() {
        sign ^= perm_parity(&hair_map);
    }
    (Graph { n: g.n, m: g.m, v: g.v, h: g.h, edges }, sign)
}
