//! Oriented hairy graphs: representation, grading, canonical forms and
//! enumeration.
//!
//! Orientation of a raw graph is read off its layout:
//! * `n` even: the order of the edge list (hair edges included);
//! * `n` odd: the order of internal vertices plus a direction per edge, each
//!   edge `(a, b)` pointing from `a` to `b`;
//! * `m` odd: additionally the order of the hairs.

mod canon;
mod enumerate;
mod io;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lin::{Atom, Lin};

pub use canon::{automorphism_report, canonicalize, canonicalize_unchecked, clear_cache, structure_key, AutReport};
pub use enumerate::{enumerate_basis, Constraints};
pub use io::{from_json, parse_combination, parse_graph, serialize_combination, serialize_graph, to_json};

/// Endpoint of an edge: internal vertex or hair slot, 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum End {
    V(u8),
    H(u8),
}

impl End {
    pub fn vertex(self) -> Option<usize> {
        match self {
            End::V(i) => Some(i as usize),
            End::H(_) => None,
        }
    }

    pub fn hair(self) -> Option<usize> {
        match self {
            End::H(i) => Some(i as usize),
            End::V(_) => None,
        }
    }
}

/// Minimal internal valence of a complex: 1, 2 or 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Class(pub u8);

impl Class {
    pub fn new(c: u8) -> Result<Class> {
        if (1..=3).contains(&c) {
            Ok(Class(c))
        } else {
            Err(Error::InvalidInput(format!("valence class must be 1, 2 or 3, got {c}")))
        }
    }
}

/// A graph with internal vertices and hairs. `m = None` marks a GC atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Graph {
    pub n: i32,
    pub m: Option<i32>,
    pub v: usize,
    pub h: usize,
    pub edges: Vec<(End, End)>,
}

pub type Combination = Lin<Graph>;

impl Graph {
    pub fn gc(n: i32, v: usize, edges: Vec<(usize, usize)>) -> Graph {
        Graph {
            n,
            m: None,
            v,
            h: 0,
            edges: edges.into_iter().map(|(a, b)| (End::V(a as u8), End::V(b as u8))).collect(),
        }
    }

    pub fn hairy(m: i32, n: i32, v: usize, h: usize, edges: Vec<(End, End)>) -> Graph {
        Graph { n, m: Some(m), v, h, edges }
    }

    pub fn is_hairy(&self) -> bool {
        self.m.is_some()
    }

    pub fn n_even(&self) -> bool {
        self.n.rem_euclid(2) == 0
    }

    pub fn m_odd(&self) -> bool {
        matches!(self.m, Some(m) if m.rem_euclid(2) == 1)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Valence of each internal vertex, hair edges included.
    pub fn valences(&self) -> Vec<usize> {
        let mut val = vec![0; self.v];
        for (a, b) in &self.edges {
            for e in [a, b] {
                if let End::V(i) = e {
                    val[*i as usize] += 1;
                }
            }
        }
        val
    }

    pub fn hair_counts(&self) -> Vec<usize> {
        let mut hc = vec![0; self.v];
        for (a, b) in &self.edges {
            match (a, b) {
                (End::V(i), End::H(_)) | (End::H(_), End::V(i)) => hc[*i as usize] += 1,
                _ => {}
            }
        }
        hc
    }

    pub fn min_valence(&self) -> usize {
        self.valences().into_iter().min().unwrap_or(usize::MAX)
    }

    pub fn in_class(&self, class: Class) -> bool {
        self.v == 0 || self.min_valence() >= class.0 as usize
    }

    pub fn loop_order(&self) -> i64 {
        self.edges.len() as i64 - self.h as i64 - self.v as i64 + 1
    }

    pub fn graph_degree(&self) -> i64 {
        let e = self.edges.len() as i64;
        let v = self.v as i64;
        let n = self.n as i64;
        match self.m {
            None => (n - 1) * e - n * (v - 1),
            Some(m) => (n - 1) * e - n * v + m as i64 * (1 - self.h as i64),
        }
    }

    /// Filtration weight: `E - V` for hairy atoms, loop order for GC atoms.
    pub fn graph_weight(&self) -> i64 {
        let e = self.edges.len() as i64;
        let v = self.v as i64;
        match self.m {
            None => e - v + 1,
            Some(_) => e - v,
        }
    }

    /// Checks structural validity: indices in range, each hair used once,
    /// no tadpoles, connected.
    pub fn validate(&self) -> Result<()> {
        if self.v > 255 || self.h > 255 {
            return Err(Error::InvalidInput("too many vertices or hairs".into()));
        }
        if self.m.is_none() && self.h > 0 {
            return Err(Error::InvalidInput("GC atoms carry no hairs".into()));
        }
        if self.v + self.h == 0 {
            return Err(Error::InvalidInput("empty graph".into()));
        }
        let mut hair_use = vec![0usize; self.h];
        for (i, (a, b)) in self.edges.iter().enumerate() {
            for e in [a, b] {
                match e {
                    End::V(x) if (*x as usize) >= self.v => {
                        return Err(Error::InvalidInput(format!("edge {} uses missing vertex v{}", i + 1, x + 1)));
                    }
                    End::H(x) if (*x as usize) >= self.h => {
                        return Err(Error::InvalidInput(format!("edge {} uses missing hair h{}", i + 1, x + 1)));
                    }
                    End::H(x) => hair_use[*x as usize] += 1,
                    _ => {}
                }
            }
            if a == b {
                return Err(Error::InvalidInput(format!("edge {} is a tadpole", i + 1)));
            }
        }
        if let Some(k) = hair_use.iter().position(|c| *c != 1) {
            return Err(Error::InvalidInput(format!("hair h{} has valence {}, expected 1", k + 1, hair_use[k])));
        }
        if !self.is_connected() {
            return Err(Error::InvalidInput("graph is not connected".into()));
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        let total = self.v + self.h;
        if total == 0 {
            return false;
        }
        let idx = |e: End| match e {
            End::V(i) => i as usize,
            End::H(i) => self.v + i as usize,
        };
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, idx(*a)), find(&mut parent, idx(*b)));
            parent[ra] = rb;
        }
        let r0 = find(&mut parent, 0);
        (1..total).all(|x| find(&mut parent, x) == r0)
    }

    fn sort_key(&self) -> (usize, usize, usize, Vec<usize>) {
        let mut val = self.valences();
        val.sort_unstable();
        (self.v, self.h, self.edges.len(), val)
    }
}

impl Ord for Graph {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, self.m)
            .cmp(&(other.n, other.m))
            .then_with(|| (self.v, self.h, self.edges.len()).cmp(&(other.v, other.h, other.edges.len())))
            .then_with(|| self.sort_key().3.cmp(&other.sort_key().3))
            .then_with(|| self.edges.cmp(&other.edges))
    }
}

impl PartialOrd for Graph {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Atom for Graph {
    fn degree(&self) -> i64 {
        self.graph_degree()
    }

    fn weight(&self) -> i64 {
        self.graph_weight()
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serialize_graph(self).trim_end().replace('\n', " / "))
    }
}

/// Canonicalizes every term of a raw combination, dropping zero atoms.
pub fn canonical_combination(raw: &Lin<Graph>) -> Lin<Graph> {
    let mut out = Lin::zero();
    for (g, c) in raw.iter() {
        if let Some((cg, neg)) = canonicalize_unchecked(g) {
            out.add_term(cg, if neg { -c.clone() } else { c.clone() });
        }
    }
    out
}

/// Adds `c * g` to `out` after canonicalizing `g`.
pub fn add_raw(out: &mut Lin<Graph>, g: &Graph, c: &crate::lin::Q) {
    if let Some((cg, neg)) = canonicalize_unchecked(g) {
        out.add_term(cg, if neg { -c.clone() } else { c.clone() });
    }
}

/// Keeps the atoms of the given valence class.
pub fn project_class(x: &Lin<Graph>, class: Class) -> Lin<Graph> {
    x.filter(|g| g.in_class(class))
}

pub fn same_parameters(x: &Lin<Graph>, n: i32, m: Option<i32>) -> Result<()> {
    for g in x.atoms() {
        if g.n != n || g.m != m {
            return Err(Error::Parity(format!(
                "atom with (m, n) = ({:?}, {}) where ({:?}, {}) expected",
                g.m, g.n, m, n
            )));
        }
    }
    Ok(())
}

/// Common small graphs.
pub mod samples {
    use super::*;

    pub fn alpha(n: i32) -> Graph {
        Graph::gc(n, 2, vec![(0, 1)])
    }

    pub fn double_edge(n: i32) -> Graph {
        Graph::gc(n, 2, vec![(0, 1), (0, 1)])
    }

    pub fn complete(n: i32, k: usize) -> Graph {
        let mut e = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                e.push((a, b));
            }
        }
        Graph::gc(n, k, e)
    }

    pub fn tetrahedron(n: i32) -> Graph {
        complete(n, 4)
    }

    /// Wheel with `spokes` spokes: hub 0, rim 1..=spokes.
    pub fn wheel(n: i32, spokes: usize) -> Graph {
        let mut e = Vec::new();
        for i in 1..=spokes {
            e.push((0, i));
            e.push((i, if i == spokes { 1 } else { i + 1 }));
        }
        Graph::gc(n, spokes + 1, e)
    }

    pub fn line(m: i32, n: i32) -> Graph {
        Graph::hairy(m, n, 0, 2, vec![(End::H(0), End::H(1))])
    }

    /// One internal vertex with `k` hairs.
    pub fn star(m: i32, n: i32, k: usize) -> Graph {
        Graph::hairy(m, n, 1, k, (0..k).map(|i| (End::V(0), End::H(i as u8))).collect())
    }

    /// GC atom with one hair on vertex `at`.
    pub fn with_hair(g: &Graph, m: i32, at: usize) -> Graph {
        let mut edges = g.edges.clone();
        edges.push((End::V(at as u8), End::H(0)));
        Graph::hairy(m, g.n, g.v, 1, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::samples::*;
    use super::*;

    #[test]
    fn degrees_of_mc_elements() {
        for n in 1..6 {
            assert_eq!(alpha(n).graph_degree(), -1);
            assert_eq!(line(n, n).graph_degree(), -1);
            assert_eq!(star(n - 1, n, 3).graph_degree(), -1);
            assert_eq!(star(n, n, 1).graph_degree(), -1);
        }
    }

    #[test]
    fn weights() {
        assert_eq!(line(2, 2).graph_weight(), 1);
        assert_eq!(star(1, 2, 5).graph_weight(), 4);
        assert_eq!(alpha(2).graph_weight(), 0);
        assert_eq!(tetrahedron(2).graph_weight(), 3);
    }

    #[test]
    fn validation_rejects_bad_graphs() {
        let tad = Graph::gc(2, 1, vec![(0, 0)]);
        assert!(tad.validate().is_err());
        let dangling = Graph::hairy(2, 2, 1, 2, vec![(End::V(0), End::H(0))]);
        assert!(dangling.validate().is_err());
        let split = Graph::gc(2, 4, vec![(0, 1), (2, 3)]);
        assert!(split.validate().is_err());
        assert!(tetrahedron(2).validate().is_ok());
    }
}
