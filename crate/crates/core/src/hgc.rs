//! Hairy graph complexes HGC_{m,n}: hair grafting bracket, the right GC
//! action, Maurer-Cartan data and twisted differentials.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::gc::{alpha, brace_unchecked, kos, par_bilinear, prelie_atoms};
use crate::graph::{add_raw, project_class, samples, Class, End, Graph};
use crate::lin::{factorial, sign_q, Atom, Lin, Q};
use crate::sign::SymbolWord;

/// `m`: one internal vertex carrying one hair.
pub fn m_element(m: i32, n: i32) -> Lin<Graph> {
    Lin::atom(samples::star(m, n, 1))
}

/// `L`: a single edge between two hairs, in HGC_{n,n}.
pub fn line(n: i32) -> Lin<Graph> {
    Lin::atom(samples::line(n, n))
}

/// `Σ_k λ^k T_k` with `T_k` the `(2k+1)`-hair star divided by its symmetry
/// factor `(2k+1)!`, for stars with at most `max_hairs` hairs, in HGC_{n−1,n}.
pub fn tripod_series(n: i32, lambda: &Q, max_hairs: usize) -> Lin<Graph> {
    let mut out = Lin::zero();
    let mut k = 1;
    let mut pow = lambda.clone();
    while 2 * k < max_hairs {
        let c = &pow / factorial(2 * k + 1);
        out.add_term(samples::star(n - 1, n, 2 * k + 1), c);
        pow *= lambda;
        k += 1;
    }
    out
}

fn has_global(g: &Graph) -> bool {
    g.m_odd()
}

/// Global sign of the graft: −1 when `m ≡ n (mod 2)`. A bracket may be
/// rescaled by −1 freely; this choice makes `m` (coefficient +1) Maurer-Cartan.
fn same_parity(x: &Graph) -> bool {
    x.m_odd() != x.n_even()
}

/// Grafts hair `k` of `x` onto internal vertex `w` of `y`.
pub(crate) fn graft_raw(x: &Graph, k: usize, y: &Graph, w: usize) -> (bool, Graph) {
    let n_odd = !x.n_even();
    let mut word = SymbolWord::new();
    if has_global(x) {
        word.push((0, 0));
    }
    if n_odd {
        for i in 0..x.v {
            word.push((1, i as u32));
        }
    } else {
        for j in 0..x.edges.len() {
            word.push((2, j as u32));
        }
    }
    let mut hair_pos = 0;
    if x.m_odd() {
        for i in 0..x.h {
            let key = if i < k { i } else { i.saturating_sub(1) };
            let p = word.push((3, key as u32));
            if i == k {
                hair_pos = p;
            }
        }
    }
    if has_global(y) {
        let t = word.push((0, 0));
        word.contract(hair_pos, t);
    }
    if n_odd {
        for i in 0..y.v {
            word.push((1, (x.v + i) as u32));
        }
    } else {
        for j in 0..y.edges.len() {
            word.push((2, (x.edges.len() + j) as u32));
        }
    }
    if y.m_odd() {
        for i in 0..y.h {
            word.push((3, (x.h - 1 + i) as u32));
        }
    }
    let sign = word.finish() ^ same_parity(x);

    let mut edges = Vec::with_capacity(x.edges.len() + y.edges.len());
    let fix_x = |e: End| match e {
        End::H(i) if i as usize == k => End::V((x.v + w) as u8),
        End::H(i) if i as usize > k => End::H(i - 1),
        other => other,
    };
    for (a, b) in &x.edges {
        edges.push((fix_x(*a), fix_x(*b)));
    }
    let fix_y = |e: End| match e {
        End::V(i) => End::V((x.v + i as usize) as u8),
        End::H(i) => End::H((x.h - 1 + i as usize) as u8),
    };
    for (a, b) in &y.edges {
        edges.push((fix_y(*a), fix_y(*b)));
    }
    (sign, Graph { n: x.n, m: x.m, v: x.v + y.v, h: x.h + y.h - 1, edges })
}

/// Atom-level graft `x • y`: every hair of `x` onto every vertex of `y`.
pub fn graft_atoms(x: &Graph, y: &Graph) -> Lin<Graph> {
    let mut out = Lin::zero();
    for k in 0..x.h {
        for w in 0..y.v {
            let (neg, g) = graft_raw(x, k, y, w);
            add_raw(&mut out, &g, &sign_q(neg));
        }
    }
    out
}

fn check_hairy(x: &Lin<Graph>, y: &Lin<Graph>) -> Result<()> {
    let mut it = x.atoms().chain(y.atoms());
    if let Some(first) = it.next() {
        if first.m.is_none() {
            return Err(Error::Parity("hairy graph expected".into()));
        }
        for g in it {
            if (g.m, g.n) != (first.m, first.n) {
                return Err(Error::Parity("mixed (m, n) parameters".into()));
            }
        }
    }
    Ok(())
}

fn check_action(x: &Lin<Graph>, gamma: &Lin<Graph>) -> Result<()> {
    check_hairy(x, &Lin::zero())?;
    for g in x.atoms() {
        for c in gamma.atoms() {
            if c.m.is_some() || c.n != g.n {
                return Err(Error::Parity("GC element with matching n expected".into()));
            }
        }
    }
    Ok(())
}

pub(crate) fn bracket_atoms(a: &Graph, b: &Graph) -> Lin<Graph> {
    let mut t = graft_atoms(a, b);
    let s = if kos(a.degree(), b.degree()) { Q::one() } else { -Q::one() };
    t.add_scaled(&graft_atoms(b, a), &s);
    t
}

/// `[x, y] = x • y − (−1)^{|x||y|} y • x` with `•` the hair graft.
pub fn graft_bracket(x: &Lin<Graph>, y: &Lin<Graph>) -> Result<Lin<Graph>> {
    check_hairy(x, y)?;
    Ok(graft_bracket_unchecked(x, y))
}

pub(crate) fn graft_bracket_unchecked(x: &Lin<Graph>, y: &Lin<Graph>) -> Lin<Graph> {
    par_bilinear(x, y, bracket_atoms)
}

/// Right action `x • γ`: insert `γ` into each internal vertex of `x`.
pub fn gc_action(x: &Lin<Graph>, gamma: &Lin<Graph>) -> Result<Lin<Graph>> {
    check_action(x, gamma)?;
    Ok(par_bilinear(x, gamma, prelie_atoms))
}

pub(crate) fn gc_action_unchecked(x: &Lin<Graph>, gamma: &Lin<Graph>) -> Lin<Graph> {
    par_bilinear(x, gamma, prelie_atoms)
}

/// Brace `host ∘ (γ₁, …, γ_r)`: insertion into pairwise distinct vertices.
pub fn brace(host: &Lin<Graph>, args: &[&Lin<Graph>]) -> Result<Lin<Graph>> {
    if args.is_empty() {
        return Err(Error::InvalidInput("brace needs at least one argument".into()));
    }
    for a in args {
        check_action(host, a)?;
    }
    Ok(brace_unchecked(host, args))
}

/// Weight grading generator: each atom scaled by `E − V`.
pub fn hair_d(x: &Lin<Graph>) -> Lin<Graph> {
    x.scale_by(|g| g.graph_weight())
}

/// `(−1)^{|x|} x • α`, atom by atom.
pub fn alpha_part(x: &Lin<Graph>) -> Lin<Graph> {
    let Some(n) = x.atoms().next().map(|g| g.n) else {
        return Lin::zero();
    };
    let a = alpha(n);
    par_bilinear(x, &a, |g, al| prelie_atoms(g, al).scaled(&sign_q(g.parity())))
}

/// The twisting Maurer-Cartan element added to `m`.
#[derive(Clone, Debug)]
pub enum Twist {
    None,
    Line,
    /// `T(λ)` with stars up to the given hair count.
    Tripod { lambda: Q, max_hairs: usize },
    Custom(Lin<Graph>),
}

impl Twist {
    pub fn element(&self, m: i32, n: i32) -> Lin<Graph> {
        match self {
            Twist::None => Lin::zero(),
            Twist::Line => line(n),
            Twist::Tripod { lambda, max_hairs } => tripod_series(n, lambda, *max_hairs),
            Twist::Custom(x) => {
                let _ = m;
                x.clone()
            }
        }
    }

    /// Hair count up to which the twisting element is complete.
    pub fn complete_up_to(&self) -> Option<usize> {
        match self {
            Twist::Tripod { max_hairs, .. } => Some(*max_hairs),
            _ => None,
        }
    }
}

/// `d x = [m, x] + (−1)^{|x|} x • α + [μ, x]` in class 1, without projection.
pub fn twisted_differential_full(x: &Lin<Graph>, mu: &Lin<Graph>) -> Lin<Graph> {
    let Some(g0) = x.atoms().next() else {
        return Lin::zero();
    };
    let (m, n) = (g0.m.unwrap_or(n_default(g0)), g0.n);
    let mut twist = m_element(m, n);
    twist.add_assign(mu);
    let mut out = graft_bracket_unchecked(&twist, x);
    out.absorb(alpha_part(x));
    out
}

fn n_default(g: &Graph) -> i32 {
    g.n
}

/// Twisted differential projected to `class`, certified on outputs with at
/// most `max_hairs` hairs when the twist is a truncated series.
pub fn twisted_differential(
    x: &Lin<Graph>,
    twist: &Twist,
    class: Class,
    max_hairs: Option<usize>,
) -> Result<Lin<Graph>> {
    check_hairy(x, &Lin::zero())?;
    let Some(g0) = x.atoms().next() else {
        return Ok(Lin::zero());
    };
    let (m, n) = (g0.m.expect("checked"), g0.n);
    let mu = twist.element(m, n);
    check_hairy(x, &mu)?;
    let mut out = project_class(&twisted_differential_full(x, &mu), class);
    if let Some(complete) = twist.complete_up_to() {
        let hmin = x.atoms().map(|g| g.h).min().unwrap_or(0);
        let certified = hmin + complete - 1;
        let want = max_hairs.ok_or_else(|| {
            Error::Truncation("a hair bound is required when twisting by a truncated series".into())
        })?;
        if want > certified {
            return Err(Error::Truncation(format!(
                "twist complete up to {complete} hairs certifies outputs with at most {certified} hairs, {want} requested"
            )));
        }
    }
    if let Some(hb) = max_hairs {
        out = out.filter(|g| g.h <= hb);
    }
    Ok(out)
}

/// Curvature `(−1)^{|β|} β • α + ½[β, β]` of `β` in the α-twisted Lie
/// algebra; `β` is Maurer-Cartan exactly when this vanishes.
pub fn curvature(beta: &Lin<Graph>) -> Lin<Graph> {
    let mut out = alpha_part(beta);
    let half = Q::new(1.into(), 2.into());
    out.add_scaled(&graft_bracket_unchecked(beta, beta), &half);
    out
}

/// Maurer-Cartan residual of `m + μ`, restricted to atoms with at most
/// `max_hairs` hairs when given.
pub fn mc_residual(m: i32, n: i32, mu: &Lin<Graph>, max_hairs: Option<usize>) -> Lin<Graph> {
    let mut beta = m_element(m, n);
    beta.add_assign(mu);
    let r = curvature(&beta);
    match max_hairs {
        Some(h) => r.filter(|g| g.h <= h),
        None => r,
    }
}

/// Adds one hair to every internal vertex of `x`, summed (the action of
/// `[L, −]`).
pub fn add_hair_sum(x: &Lin<Graph>) -> Lin<Graph> {
    let Some(g0) = x.atoms().next() else {
        return Lin::zero();
    };
    graft_bracket_unchecked(&line(g0.n), x)
}

pub fn is_zero_coeff(x: &Q) -> bool {
    x.is_zero()
}
