//! The pre-Lie algebra of (non-hairy) graphs GC_n: insertion, bracket,
//! differential, symmetric braces and the loop-order derivation.
//!
//! Signs come from a word of odd symbols. The word of a graph lists, in
//! order: a global symbol (GC with n odd, or hairy with m odd), the internal
//! vertices (n odd), the edges (n even) and the hairs (m odd). Inserting a
//! guest into a host vertex concatenates the host word and the guest word,
//! contracts the consumed vertex with the guest's global symbol (n odd), and
//! sorts what is left back into the standard order.

use num_traits::One;

use crate::error::{Error, Result};
use crate::graph::{add_raw, project_class, Class, End, Graph};
use crate::lin::{sign_q, Atom, Lin, Q};
use crate::par;
use crate::sign::SymbolWord;

const GLOBAL: u8 = 0;
const VERTEX: u8 = 1;
const EDGE: u8 = 2;
const HAIR: u8 = 3;

/// The Maurer-Cartan element `α`: one edge between two vertices with
/// coefficient 1/2, i.e. the edge graph divided by its symmetry factor.
pub fn alpha(n: i32) -> Lin<Graph> {
    Lin::single(crate::graph::samples::alpha(n), Q::new(1.into(), 2.into()))
}

fn has_global(g: &Graph) -> bool {
    match g.m {
        None => !g.n_even(),
        Some(_) => g.m_odd(),
    }
}

/// Inserts `guests[i].1` into host vertex `guests[i].0` (vertices pairwise
/// distinct), summing over all reconnections of the dangling edge ends.
/// Returns the common orientation sign and the raw graphs.
pub(crate) fn insert_sites(host: &Graph, guests: &[(usize, &Graph)]) -> (bool, Vec<Graph>) {
    let n_odd = !host.n_even();
    let mut consumed = vec![None; host.v];
    for (i, (v, _)) in guests.iter().enumerate() {
        consumed[*v] = Some(i);
    }
    let mut new_index = vec![0usize; host.v];
    let mut next = 0;
    for a in 0..host.v {
        if consumed[a].is_none() {
            new_index[a] = next;
            next += 1;
        }
    }
    let mut offsets = Vec::with_capacity(guests.len());
    for (_, g) in guests {
        offsets.push(next);
        next += g.v;
    }
    let total_v = next;

    let mut word = SymbolWord::new();
    if has_global(host) {
        word.push((GLOBAL, 0));
    }
    let mut host_vpos = vec![0usize; host.v];
    if n_odd {
        for a in 0..host.v {
            host_vpos[a] = word.push((VERTEX, new_index[a] as u32));
        }
    } else {
        for j in 0..host.edges.len() {
            word.push((EDGE, j as u32));
        }
    }
    if host.m_odd() {
        for k in 0..host.h {
            word.push((HAIR, k as u32));
        }
    }
    let mut edge_base = host.edges.len();
    for (gi, (v, g)) in guests.iter().enumerate() {
        if n_odd {
            let s = word.push((GLOBAL, 0));
            for i in 0..g.v {
                word.push((VERTEX, (offsets[gi] + i) as u32));
            }
            word.contract(host_vpos[*v], s);
        } else {
            for j in 0..g.edges.len() {
                word.push((EDGE, (edge_base + j) as u32));
            }
        }
        edge_base += g.edges.len();
    }
    let sign = word.finish();

    // dangling ends: (edge index, side, guest index)
    let mut dangling: Vec<(usize, usize, usize)> = Vec::new();
    let mut base_edges: Vec<(End, End)> = Vec::with_capacity(edge_base);
    for (j, (a, b)) in host.edges.iter().enumerate() {
        let mut e = [*a, *b];
        for (side, end) in e.iter_mut().enumerate() {
            if let End::V(x) = end {
                match consumed[*x as usize] {
                    Some(gi) => dangling.push((j, side, gi)),
                    None => *end = End::V(new_index[*x as usize] as u8),
                }
            }
        }
        base_edges.push((e[0], e[1]));
    }
    for (gi, (_, g)) in guests.iter().enumerate() {
        for (a, b) in &g.edges {
            let shift = |e: &End| match e {
                End::V(x) => End::V((*x as usize + offsets[gi]) as u8),
                End::H(x) => End::H(*x),
            };
            base_edges.push((shift(a), shift(b)));
        }
    }

    let mut out = Vec::new();
    let mut choice = vec![0usize; dangling.len()];
    loop {
        let mut edges = base_edges.clone();
        for (d, (j, side, gi)) in dangling.iter().enumerate() {
            let target = End::V((offsets[*gi] + choice[d]) as u8);
            if *side == 0 {
                edges[*j].0 = target;
            } else {
                edges[*j].1 = target;
            }
        }
        out.push(Graph { n: host.n, m: host.m, v: total_v, h: host.h, edges });
        let mut k = 0;
        loop {
            if k == dangling.len() {
                return (sign, out);
            }
            choice[k] += 1;
            if choice[k] < guests[dangling[k].2].1.v {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Canonical sum of all insertions of `guest` into host vertex `vertex`.
pub fn insert(host: &Graph, guest: &Graph, vertex: usize) -> Result<Lin<Graph>> {
    if vertex >= host.v {
        return Err(Error::InvalidInput(format!("vertex {} out of range 1..{}", vertex + 1, host.v)));
    }
    check_guest(host, guest)?;
    let mut out = Lin::zero();
    accumulate(&mut out, host, &[(vertex, guest)], &Q::one());
    Ok(out)
}

fn accumulate(out: &mut Lin<Graph>, host: &Graph, guests: &[(usize, &Graph)], c: &Q) {
    let (neg, raw) = insert_sites(host, guests);
    let c = if neg { -c.clone() } else { c.clone() };
    for g in &raw {
        add_raw(out, g, &c);
    }
}

fn check_guest(host: &Graph, guest: &Graph) -> Result<()> {
    if guest.m.is_some() || guest.n != host.n {
        return Err(Error::Parity(format!(
            "cannot insert a graph with (m, n) = ({:?}, {}) into one with n = {}",
            guest.m, guest.n, host.n
        )));
    }
    Ok(())
}

fn check_all(x: &Lin<Graph>, y: &Lin<Graph>) -> Result<()> {
    for a in x.atoms() {
        for b in y.atoms() {
            check_guest(a, b)?;
        }
    }
    Ok(())
}

/// Atom-level pre-Lie product: insertion summed over host vertices.
pub fn prelie_atoms(a: &Graph, b: &Graph) -> Lin<Graph> {
    let mut out = Lin::zero();
    for v in 0..a.v {
        accumulate(&mut out, a, &[(v, b)], &Q::one());
    }
    out
}

/// Bilinear extension of an atom-level operation, parallel over the atoms of `x`.
pub(crate) fn par_bilinear(
    x: &Lin<Graph>,
    y: &Lin<Graph>,
    f: impl Fn(&Graph, &Graph) -> Lin<Graph> + Sync + Send,
) -> Lin<Graph> {
    let xs: Vec<(&Graph, &Q)> = x.iter().collect();
    let parts = par::map(&xs, |(a, ca)| {
        let mut acc = Lin::zero();
        for (b, cb) in y.iter() {
            let t = f(a, b);
            acc.add_scaled(&t, &(*ca * cb));
        }
        acc
    });
    let mut out = Lin::zero();
    for p in parts {
        out.absorb(p);
    }
    out
}

/// `x • y`: sum over all ways of inserting `y` into a vertex of `x`.
pub fn prelie(x: &Lin<Graph>, y: &Lin<Graph>) -> Result<Lin<Graph>> {
    check_all(x, y)?;
    Ok(par_bilinear(x, y, prelie_atoms))
}

/// Koszul sign `(-1)^{|a||b|}` as a boolean.
pub fn kos(a: i64, b: i64) -> bool {
    a.rem_euclid(2) == 1 && b.rem_euclid(2) == 1
}

/// `[x, y] = x • y − (−1)^{|x||y|} y • x`.
pub fn bracket(x: &Lin<Graph>, y: &Lin<Graph>) -> Result<Lin<Graph>> {
    check_all(x, y)?;
    Ok(par_bilinear(x, y, |a, b| {
        let mut t = prelie_atoms(a, b);
        let s = if kos(a.degree(), b.degree()) { Q::one() } else { -Q::one() };
        t.add_scaled(&prelie_atoms(b, a), &s);
        t
    }))
}

/// `[α, x]` computed with univalent vertices allowed, before projection.
pub fn differential_full(x: &Lin<Graph>) -> Lin<Graph> {
    let Some(n) = x.atoms().next().map(|g| g.n) else {
        return Lin::zero();
    };
    let a = alpha(n);
    par_bilinear(&a, x, |al, g| {
        let mut t = prelie_atoms(al, g);
        t.add_scaled(&prelie_atoms(g, al), &sign_q(!g.parity()));
        t
    })
}

/// The differential `d = [α, −]`, projected to the valence class.
pub fn differential(x: &Lin<Graph>, class: Class) -> Lin<Graph> {
    project_class(&differential_full(x), class)
}

/// Symmetric brace `host • (args…)`: all insertions of the arguments into
/// pairwise distinct vertices of the host.
pub fn brace(host: &Lin<Graph>, args: &[&Lin<Graph>]) -> Result<Lin<Graph>> {
    if args.is_empty() {
        return Err(Error::InvalidInput("brace needs at least one argument".into()));
    }
    for a in args {
        check_all(host, a)?;
    }
    Ok(brace_unchecked(host, args))
}

pub(crate) fn brace_unchecked(host: &Lin<Graph>, args: &[&Lin<Graph>]) -> Lin<Graph> {
    let hs: Vec<(&Graph, &Q)> = host.iter().collect();
    let parts = par::map(&hs, |(h, ch)| {
        crate::lin::multilinear(args, |picked| brace_atoms(h, picked)).scaled(ch)
    });
    let mut out = Lin::zero();
    for p in parts {
        out.absorb(p);
    }
    out
}

/// Brace on atoms: sum over injections of the arguments into host vertices.
pub fn brace_atoms(host: &Graph, args: &[&Graph]) -> Lin<Graph> {
    let mut out = Lin::zero();
    let r = args.len();
    if r > host.v {
        return out;
    }
    let mut sites = vec![0usize; r];
    fn rec(
        host: &Graph,
        args: &[&Graph],
        i: usize,
        sites: &mut Vec<usize>,
        out: &mut Lin<Graph>,
    ) {
        if i == args.len() {
            let guests: Vec<(usize, &Graph)> = sites.iter().copied().zip(args.iter().copied()).collect();
            accumulate(out, host, &guests, &Q::one());
            return;
        }
        for v in 0..host.v {
            if sites[..i].contains(&v) {
                continue;
            }
            sites[i] = v;
            rec(host, args, i + 1, sites, out);
        }
    }
    rec(host, args, 0, &mut sites, &mut out);
    out
}

/// Loop-order derivation: each atom scaled by its loop order.
pub fn loop_d(x: &Lin<Graph>) -> Lin<Graph> {
    x.scale_by(|g| g.loop_order())
}
