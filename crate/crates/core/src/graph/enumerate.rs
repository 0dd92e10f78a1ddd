//! Basis enumeration by growing graphs one piece at a time.

use std::collections::HashSet;

use super::{canonicalize_unchecked, structure_key, Class, End, Graph};
use crate::error::{Error, Result};
use crate::par;

/// Constraints on enumerated atoms. Unset fields are unconstrained; the set
/// must bound vertices, loop order and (for hairy atoms) hairs.
#[derive(Clone, Debug)]
pub struct Constraints {
    pub n: i32,
    pub m: Option<i32>,
    pub class: Class,
    pub min_vertices: usize,
    pub max_vertices: Option<usize>,
    pub min_hairs: usize,
    pub max_hairs: Option<usize>,
    /// Internal loop order `E - H - V + 1`.
    pub loops: Option<i64>,
    pub max_loops: Option<i64>,
    pub max_edges: Option<usize>,
    pub degree: Option<i64>,
    pub weight: Option<i64>,
}

impl Constraints {
    pub fn gc(n: i32, class: Class) -> Self {
        Constraints {
            n,
            m: None,
            class,
            min_vertices: 1,
            max_vertices: None,
            min_hairs: 0,
            max_hairs: Some(0),
            loops: None,
            max_loops: None,
            max_edges: None,
            degree: None,
            weight: None,
        }
    }

    pub fn hgc(m: i32, n: i32, class: Class) -> Self {
        Constraints { m: Some(m), min_hairs: 1, max_hairs: None, min_vertices: 0, ..Self::gc(n, class) }
    }

    pub fn vertices(mut self, v: usize) -> Self {
        self.min_vertices = v;
        self.max_vertices = Some(v);
        self
    }

    pub fn hairs(mut self, h: usize) -> Self {
        self.min_hairs = h;
        self.max_hairs = Some(h);
        self
    }

    pub fn matches(&self, g: &Graph) -> bool {
        g.n == self.n
            && g.m == self.m
            && g.in_class(self.class)
            && g.v >= self.min_vertices
            && self.max_vertices.is_none_or(|x| g.v <= x)
            && g.h >= self.min_hairs
            && self.max_hairs.is_none_or(|x| g.h <= x)
            && self.loops.is_none_or(|x| g.loop_order() == x)
            && self.max_loops.is_none_or(|x| g.loop_order() <= x)
            && self.max_edges.is_none_or(|x| g.edges.len() <= x)
            && self.degree.is_none_or(|x| g.graph_degree() == x)
            && self.weight.is_none_or(|x| g.graph_weight() == x)
    }

    /// Derives finite bounds `(vmax, hmax, gmax)` or explains why none exist.
    pub fn bounds(&self) -> Result<(usize, usize, i64)> {
        let n = self.n as i64;
        let hairy = self.m.is_some();
        let m = self.m.unwrap_or(0) as i64;
        let mut vmax: Option<i64> = self.max_vertices.map(|x| x as i64);
        let mut hmax: Option<i64> = if hairy { self.max_hairs.map(|x| x as i64) } else { Some(0) };
        let mut gmax: Option<i64> = match (self.loops, self.max_loops) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let tighten = |slot: &mut Option<i64>, cand: Option<i64>| {
            if let Some(c) = cand {
                *slot = Some(slot.map_or(c, |s| s.min(c)));
            }
        };
        if let Some(e) = self.max_edges {
            let e = e as i64;
            tighten(&mut vmax, Some(e + 1));
            tighten(&mut hmax, Some(e));
            tighten(&mut gmax, Some(e));
        }
        for _ in 0..4 {
            if let Some(w) = self.weight {
                if hairy {
                    tighten(&mut gmax, Some(w));
                    tighten(&mut hmax, Some(w + 1));
                } else {
                    tighten(&mut gmax, Some(w));
                }
            }
            if let (Some(d), Some(vm)) = (self.degree, vmax) {
                if !hairy && n != 1 {
                    tighten(&mut gmax, Some((d + vm - 1).div_euclid(n - 1)));
                }
                if hairy && n != 1 {
                    let c = n - 1 - m;
                    if c >= 0 {
                        tighten(&mut gmax, Some((d + vm + n - 1 - m).div_euclid(n - 1)));
                    } else if let Some(hm) = hmax {
                        tighten(&mut gmax, Some((d + vm + n - 1 - m - c * hm).div_euclid(n - 1)));
                    }
                }
                if hairy && n - 1 - m > 0 {
                    tighten(&mut hmax, Some((d + vm + n - 1 - m).div_euclid(n - 1 - m)));
                }
                if hairy && n - 1 - m < 0 {
                    if let Some(g) = gmax {
                        let c = m + 1 - n;
                        tighten(&mut hmax, Some(((n - 1) * g - d - (n - 1) + m).div_euclid(c)));
                    }
                }
            }
            if self.class.0 == 3 {
                if let (Some(g), Some(hm)) = (gmax, hmax) {
                    tighten(&mut vmax, Some((2 * g - 2 + hm).max(1)));
                }
            }
        }
        if vmax == Some(0) {
            gmax = Some(0);
        }
        match (vmax, hmax, gmax) {
            (Some(v), Some(h), Some(g)) => Ok((v.max(0) as usize, h.max(0) as usize, g)),
            (None, _, _) => Err(Error::Unbounded("the constraints do not bound the number of vertices".into())),
            (_, None, _) => Err(Error::Unbounded(
                "the constraints do not bound the number of hairs (give a hair bound)".into(),
            )),
            (_, _, None) => Err(Error::Unbounded("the constraints do not bound the loop order".into())),
        }
    }
}

/// Every nonzero canonical atom satisfying the constraints, once each, in
/// canonical order.
pub fn enumerate_basis(c: &Constraints) -> Result<Vec<Graph>> {
    let (vmax, hmax, gmax) = c.bounds()?;
    let hairy = c.m.is_some();
    let even = c.n.rem_euclid(2) == 0;
    let hair_pairs_die = hairy && (c.m.unwrap().rem_euclid(2) == 1) != even;
    let emax = c.max_edges.unwrap_or(usize::MAX);

    let mut candidates: Vec<Graph> = Vec::new();
    if hairy && c.min_vertices == 0 && hmax >= 2 {
        candidates.push(Graph::hairy(c.m.unwrap(), c.n, 0, 2, vec![(End::H(0), End::H(1))]));
    }
    if vmax >= 1 {
        let seed = Graph { n: c.n, m: c.m, v: 1, h: 0, edges: vec![] };
        let mut seen: HashSet<Graph> = HashSet::new();
        seen.insert(structure_key(&seed));
        let mut frontier = vec![seed];
        while !frontier.is_empty() {
            candidates.extend(frontier.iter().cloned());
            let children: Vec<Vec<Graph>> = par::map(&frontier, |g| {
                grow(g, vmax, hmax, gmax, emax, even, hair_pairs_die)
                    .into_iter()
                    .map(|x| structure_key(&x))
                    .collect()
            });
            let mut next = Vec::new();
            for ch in children {
                for x in ch {
                    if seen.insert(x.clone()) {
                        next.push(x);
                    }
                }
            }
            frontier = next;
        }
    }
    let keep: Vec<Graph> = candidates.into_iter().filter(|g| c.matches(g)).collect();
    let canon: Vec<Option<Graph>> = par::map(&keep, |g| canonicalize_unchecked(g).map(|(cg, _)| cg));
    let mut out: Vec<Graph> = canon.into_iter().flatten().collect();
    out.sort();
    out.dedup();
    Ok(out)
}

fn grow(g: &Graph, vmax: usize, hmax: usize, gmax: i64, emax: usize, even: bool, hair_pairs_die: bool) -> Vec<Graph> {
    let mut out = Vec::new();
    if g.edges.len() >= emax {
        return out;
    }
    let hc = g.hair_counts();
    if g.v < vmax {
        for a in 0..g.v {
            let mut x = g.clone();
            x.v += 1;
            x.edges.push((End::V(a as u8), End::V(g.v as u8)));
            out.push(x);
        }
    }
    if g.loop_order() < gmax {
        for a in 0..g.v {
            for b in a + 1..g.v {
                let adjacent = g.edges.contains(&(End::V(a as u8), End::V(b as u8)))
                    || g.edges.contains(&(End::V(b as u8), End::V(a as u8)));
                if even && adjacent {
                    continue;
                }
                let mut x = g.clone();
                x.edges.push((End::V(a as u8), End::V(b as u8)));
                out.push(x);
            }
        }
    }
    if g.m.is_some() && g.h < hmax {
        for a in 0..g.v {
            if hair_pairs_die && hc[a] >= 1 {
                continue;
            }
            let mut x = g.clone();
            x.edges.push((End::V(a as u8), End::H(g.h as u8)));
            x.h += 1;
            out.push(x);
        }
    }
    out
}
