//! L∞ machinery attached to a pre-Lie pair `(g, M)` with Maurer-Cartan
//! elements `α ∈ g` and `m ∈ M^α`.
//!
//! Everything is written in the shifted convention: structure maps are graded
//! symmetric of degree −1, morphism components graded symmetric of degree 0,
//! and every sign in a relation is the Koszul sign of the permutation of the
//! inputs. On `g` the shifted degree is the ordinary degree; on `M` it is the
//! ordinary degree plus one, so `ℓ₂(a, b) = (−1)^{|a|+1}[a, b]`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::gc;
use crate::graph::Graph;
use crate::hgc::{self, Twist};
use crate::lin::{factorial, sign_q, Atom, Lin, Q};
use crate::sign::koszul;
use crate::tree::{self, Label, Tree};

/// A pre-Lie algebra `g` with Maurer-Cartan element `α`, acting from the
/// right on an L∞ algebra `M` with Maurer-Cartan element `m ∈ M^α`.
pub trait PreLiePair: Sync {
    type G: Atom;
    type M: Atom;

    fn alpha(&self) -> Lin<Self::G>;
    fn m(&self) -> Lin<Self::M>;
    /// Internal differential of `g` before twisting.
    fn d_g(&self, x: &Lin<Self::G>) -> Lin<Self::G>;
    fn prelie(&self, x: &Lin<Self::G>, y: &Lin<Self::G>) -> Lin<Self::G>;
    /// `x • (y₁, …, y_r)`.
    fn brace_g(&self, x: &Lin<Self::G>, ys: &[&Lin<Self::G>]) -> Lin<Self::G>;
    /// Right action `a ∘ x`.
    fn act(&self, a: &Lin<Self::M>, x: &Lin<Self::G>) -> Lin<Self::M>;
    /// `a ∘ (x₁, …, x_r)`.
    fn brace_m(&self, a: &Lin<Self::M>, xs: &[&Lin<Self::G>]) -> Lin<Self::M>;
    /// Shifted L∞ operations of `M^α` (twisted by α, not yet by `m`).
    fn ell_m(&self, args: &[&Lin<Self::M>]) -> Lin<Self::M>;
    fn max_arity_m(&self) -> usize;
    /// The degree-zero derivation `D`, if the instance has one.
    fn derivation_g(&self, _x: &Lin<Self::G>) -> Option<Lin<Self::G>> {
        None
    }
    fn derivation_m(&self, _a: &Lin<Self::M>) -> Option<Lin<Self::M>> {
        None
    }
    /// Drops algebra terms beyond the certified window.
    fn window_g(&self, x: Lin<Self::G>) -> Lin<Self::G> {
        x
    }
    fn window_m(&self, a: Lin<Self::M>) -> Lin<Self::M> {
        a
    }
    /// Whether exponentials in `x` converge (or are cut off by the window).
    fn converges(&self, x: &Lin<Self::G>) -> bool {
        x.min_weight().is_none_or(|w| w >= 1)
    }
}

/// Shifted parity of an algebra element (its ordinary parity).
pub fn spar_g<A: Atom>(x: &Lin<A>) -> bool {
    x.atoms().next().is_some_and(|a| a.parity())
}

/// Shifted parity of a module element (ordinary parity flipped).
pub fn spar_m<A: Atom>(x: &Lin<A>) -> bool {
    !x.atoms().next().is_none_or(|a| a.parity())
}

fn check_homogeneous<A: Atom>(xs: &[&Lin<A>]) -> Result<()> {
    for x in xs {
        if x.atoms().any(|a| a.parity() != spar_g(x)) {
            return Err(Error::Parity("inputs to L∞ operations must be of homogeneous parity".into()));
        }
    }
    Ok(())
}

// ------------------------------------------------------------------ ν

/// `ν₁ = d + [α, −]`, `ν_r = α • (x₁, …, x_r)` for `r ≥ 2`.
pub fn nu<P: PreLiePair>(p: &P, args: &[&Lin<P::G>]) -> Result<Lin<P::G>> {
    match args.len() {
        0 => Err(Error::InvalidInput("ν has no arity-zero component".into())),
        1 => Ok(nu1(p, args[0])),
        _ => Ok(p.window_g(p.brace_g(&p.alpha(), args))),
    }
}

fn nu1<P: PreLiePair>(p: &P, x: &Lin<P::G>) -> Lin<P::G> {
    let a = p.alpha();
    let mut out = p.d_g(x);
    out.absorb(p.prelie(&a, x));
    let (even, odd) = x.by_parity();
    out.absorb(p.prelie(&even, &a).neg());
    out.absorb(p.prelie(&odd, &a));
    p.window_g(out)
}

// ------------------------------------------------------------------ W

/// `W_r(x₁, …, x_r) = (1/r!) Σ_σ ε(σ) (⋯(x_{σ1} • x_{σ2}) • ⋯) • x_{σr}`.
pub fn w<P: PreLiePair>(p: &P, args: &[&Lin<P::G>]) -> Result<Lin<P::G>> {
    check_homogeneous(args)?;
    let r = args.len();
    if r == 0 {
        return Err(Error::InvalidInput("W has no arity-zero component".into()));
    }
    let pars: Vec<bool> = args.iter().map(|x| spar_g(x)).collect();
    let mut out = Lin::zero();
    for perm in permutations(r) {
        let mut acc = args[perm[0]].clone();
        for &i in &perm[1..] {
            acc = p.window_g(p.prelie(&acc, args[i]));
        }
        out.add_scaled(&acc, &sign_q(koszul(&perm, &pars)));
    }
    Ok(out.scaled(&(Q::one() / factorial(r))))
}

pub(crate) fn permutations(r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(r - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, r - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

// ------------------------------------------------------------- U, D

/// `U_r(x₁, …, x_r) = m ∘ (x₁, …, x_r)`.
pub fn u<P: PreLiePair>(p: &P, args: &[&Lin<P::G>]) -> Result<Lin<P::M>> {
    if args.is_empty() {
        return Err(Error::InvalidInput("U has no arity-zero component".into()));
    }
    Ok(p.window_m(p.brace_m(&p.m(), args)))
}

/// `D^s m`.
pub fn d_power_m<P: PreLiePair>(p: &P, s: usize) -> Result<Lin<P::M>> {
    let mut x = p.m();
    for _ in 0..s {
        x = p
            .derivation_m(&x)
            .ok_or_else(|| Error::Precondition("this instance has no derivation D".into()))?;
    }
    Ok(x)
}

/// `U_{s+r}(D, …, D, x₁, …, x_r) = (D^s m) ∘ (x₁, …, x_r)`; with `r = 0` this
/// is `D^s m` itself.
pub fn u_with_d<P: PreLiePair>(p: &P, s: usize, args: &[&Lin<P::G>]) -> Result<Lin<P::M>> {
    let dm = d_power_m(p, s)?;
    if args.is_empty() {
        return Ok(p.window_m(dm));
    }
    Ok(p.window_m(p.brace_m(&dm, args)))
}

/// Element of `K·D ⊕ g`: a multiple of the central element `D` plus an
/// algebra element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Src<A: Ord> {
    pub d: Q,
    pub x: Lin<A>,
}

impl<A: Atom> Src<A> {
    pub fn d() -> Self {
        Src { d: Q::one(), x: Lin::zero() }
    }

    pub fn x(x: Lin<A>) -> Self {
        Src { d: Q::zero(), x }
    }

    pub fn is_zero(&self) -> bool {
        self.d.is_zero() && self.x.is_zero()
    }

    pub fn plus(&self, o: &Self) -> Self {
        Src { d: &self.d + &o.d, x: self.x.plus(&o.x) }
    }

    pub fn scaled(&self, c: &Q) -> Self {
        Src { d: &self.d * c, x: self.x.scaled(c) }
    }

    /// `D` is even in the shifted grading.
    pub fn spar(&self) -> bool {
        spar_g(&self.x)
    }
}

/// The morphisms of the main construction, on `K·D ⊕ g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Morphism {
    /// `(g, ν₁) → (g, ν)`.
    W,
    /// `(g, ν) → M^{α,m}`.
    U,
    /// `K·D ⊕ (g, ν) → M^{α,m}`.
    UD,
    /// `K·D ⊕ (g, ν₁) → M^{α,m}`, the composite `U ∘ W`.
    V,
}

/// Evaluates `U` on arguments in `K·D ⊕ g` by expanding each into its `D`
/// part and its algebra part.
pub fn u_ext<P: PreLiePair>(p: &P, args: &[&Src<P::G>], with_d: bool) -> Result<Lin<P::M>> {
    let mut out = Lin::zero();
    let r = args.len();
    for mask in 0u32..(1 << r) {
        let s = mask.count_ones() as usize;
        if s > 0 && !with_d {
            continue;
        }
        let mut c = Q::one();
        let mut xs: Vec<&Lin<P::G>> = Vec::new();
        for (i, a) in args.iter().enumerate() {
            if mask >> i & 1 == 1 {
                c *= &a.d;
            } else {
                xs.push(&a.x);
            }
        }
        if c.is_zero() || xs.iter().any(|x| x.is_zero()) {
            continue;
        }
        let t = if s == 0 { u(p, &xs)? } else { u_with_d(p, s, &xs)? };
        out.add_scaled(&t, &c);
    }
    Ok(out)
}

/// Composite `V = U ∘ W`. Requires `U` to vanish in arity ≥ 2 on algebra
/// arguments, which is checked on the given inputs.
pub fn v_ext<P: PreLiePair>(p: &P, args: &[&Src<P::G>], with_d: bool) -> Result<Lin<P::M>> {
    let mut out = Lin::zero();
    let r = args.len();
    for mask in 0u32..(1 << r) {
        let s = mask.count_ones() as usize;
        if s > 0 && !with_d {
            continue;
        }
        let mut c = Q::one();
        let mut xs: Vec<&Lin<P::G>> = Vec::new();
        for (i, a) in args.iter().enumerate() {
            if mask >> i & 1 == 1 {
                c *= &a.d;
            } else {
                xs.push(&a.x);
            }
        }
        if c.is_zero() || xs.iter().any(|x| x.is_zero()) {
            continue;
        }
        let t = if xs.is_empty() {
            d_power_m(p, s).map(|x| p.window_m(x))?
        } else {
            if xs.len() >= 2 {
                let probe = u_with_d(p, s, &xs[..2])?;
                if !probe.is_zero() {
                    return Err(Error::Precondition(
                        "composition with W needs U to vanish in arity ≥ 2 on algebra arguments".into(),
                    ));
                }
            }
            let wr = w(p, &xs)?;
            if s == 0 {
                u(p, &[&wr])?
            } else {
                u_with_d(p, s, &[&wr])?
            }
        };
        out.add_scaled(&t, &c);
    }
    Ok(out)
}

/// Shifted L∞ operations of `M^{α,m}`: `ℓ^m_r(a) = Σ_k (1/k!) ℓ_{r+k}(m, …, m, a)`.
pub fn ell_twisted<P: PreLiePair>(p: &P, args: &[&Lin<P::M>]) -> Lin<P::M> {
    let m = p.m();
    let mut out = Lin::zero();
    let mut k = 0;
    while args.len() + k <= p.max_arity_m() {
        let mut full: Vec<&Lin<P::M>> = vec![&m; k];
        full.extend_from_slice(args);
        if !full.is_empty() {
            out.add_scaled(&p.ell_m(&full), &(Q::one() / factorial(k)));
        }
        k += 1;
    }
    p.window_m(out)
}

// ------------------------------------------------------------- residuals

fn subsets_nonempty(r: usize) -> impl Iterator<Item = (Vec<usize>, Vec<usize>)> {
    (1u32..(1 << r)).map(move |mask| {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..r {
            if mask >> i & 1 == 1 {
                a.push(i);
            } else {
                b.push(i);
            }
        }
        (a, b)
    })
}

/// Set partitions of `0..r`, blocks ordered by their least element.
pub(crate) fn set_partitions(r: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    fn rec(i: usize, r: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == r {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            rec(i + 1, r, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        rec(i + 1, r, cur, out);
        cur.pop();
    }
    rec(0, r, &mut Vec::new(), &mut out);
    out
}

/// Generalized Jacobi residual `Σ_{S≠∅} ε ℓ(ℓ(x_S), x_{S^c})` of a shifted L∞
/// structure; zero for a genuine structure.
pub fn structure_residual<A: Atom>(
    ell: &dyn Fn(&[&Lin<A>]) -> Lin<A>,
    xs: &[&Lin<A>],
    pars: &[bool],
) -> Lin<A> {
    let mut out = Lin::zero();
    for (s, rest) in subsets_nonempty(xs.len()) {
        let inner_args: Vec<&Lin<A>> = s.iter().map(|&i| xs[i]).collect();
        let inner = ell(&inner_args);
        if inner.is_zero() {
            continue;
        }
        let mut args: Vec<&Lin<A>> = vec![&inner];
        args.extend(rest.iter().map(|&i| xs[i]));
        let order: Vec<usize> = s.iter().chain(rest.iter()).copied().collect();
        out.add_scaled(&ell(&args), &sign_q(koszul(&order, pars)));
    }
    out
}

/// Morphism residual `Σ_S ε F(ℓ(x_S), x_{S^c}) − Σ_π ε ℓ'(F(x_{B₁}), …, F(x_{B_k}))`.
pub fn morphism_residual<E, T: Atom>(
    f: &dyn Fn(&[&E]) -> Result<Lin<T>>,
    ell_src: &dyn Fn(&[&E]) -> E,
    is_zero: &dyn Fn(&E) -> bool,
    ell_tgt: &dyn Fn(&[&Lin<T>]) -> Lin<T>,
    xs: &[&E],
    pars: &[bool],
) -> Result<Lin<T>> {
    let mut out = Lin::zero();
    for (s, rest) in subsets_nonempty(xs.len()) {
        let inner_args: Vec<&E> = s.iter().map(|&i| xs[i]).collect();
        let inner = ell_src(&inner_args);
        if is_zero(&inner) {
            continue;
        }
        let mut args: Vec<&E> = vec![&inner];
        args.extend(rest.iter().map(|&i| xs[i]));
        let order: Vec<usize> = s.iter().chain(rest.iter()).copied().collect();
        out.add_scaled(&f(&args)?, &sign_q(koszul(&order, pars)));
    }
    for blocks in set_partitions(xs.len()) {
        let mut vals = Vec::with_capacity(blocks.len());
        for b in &blocks {
            let a: Vec<&E> = b.iter().map(|&i| xs[i]).collect();
            vals.push(f(&a)?);
        }
        if vals.iter().any(Lin::is_zero) {
            continue;
        }
        let refs: Vec<&Lin<T>> = vals.iter().collect();
        let order: Vec<usize> = blocks.concat();
        out.add_scaled(&ell_tgt(&refs), &-sign_q(koszul(&order, pars)));
    }
    Ok(out)
}

/// Residual of the ν relations on the given inputs.
pub fn nu_residual<P: PreLiePair>(p: &P, xs: &[&Lin<P::G>]) -> Result<Lin<P::G>> {
    check_homogeneous(xs)?;
    let pars: Vec<bool> = xs.iter().map(|x| spar_g(x)).collect();
    let ell = |a: &[&Lin<P::G>]| nu(p, a).expect("arity ≥ 1");
    Ok(p.window_g(structure_residual(&ell, xs, &pars)))
}

/// Residual of the L∞ relations of `M^{α,m}` on the given inputs.
pub fn module_residual<P: PreLiePair>(p: &P, xs: &[&Lin<P::M>]) -> Lin<P::M> {
    let pars: Vec<bool> = xs.iter().map(|x| spar_m(x)).collect();
    let ell = |a: &[&Lin<P::M>]| ell_twisted(p, a);
    p.window_m(structure_residual(&ell, xs, &pars))
}

/// Residual of `W : (g, ν₁) → (g, ν)` on the given inputs.
pub fn w_residual<P: PreLiePair>(p: &P, xs: &[&Lin<P::G>]) -> Result<Lin<P::G>> {
    check_homogeneous(xs)?;
    let pars: Vec<bool> = xs.iter().map(|x| spar_g(x)).collect();
    let f = |a: &[&Lin<P::G>]| w(p, a);
    let src = |a: &[&Lin<P::G>]| if a.len() == 1 { nu1(p, a[0]) } else { Lin::zero() };
    let tgt = |a: &[&Lin<P::G>]| nu(p, a).expect("arity ≥ 1");
    Ok(p.window_g(morphism_residual(&f, &src, &|x: &Lin<P::G>| x.is_zero(), &tgt, xs, &pars)?))
}

/// Residual of `U`, `U` with `D`, or `V` on inputs in `K·D ⊕ g`.
pub fn u_residual<P: PreLiePair>(p: &P, which: Morphism, xs: &[&Src<P::G>]) -> Result<Lin<P::M>> {
    let with_d = matches!(which, Morphism::UD | Morphism::V);
    if !with_d && xs.iter().any(|x| !x.d.is_zero()) {
        return Err(Error::InvalidInput("D arguments need the U_withD or composite morphism".into()));
    }
    for x in xs {
        check_homogeneous(&[&x.x])?;
        if !x.d.is_zero() && !x.x.is_zero() && x.spar() {
            return Err(Error::Parity("D is even; mixed inputs must be even".into()));
        }
    }
    let pars: Vec<bool> = xs.iter().map(|x| x.spar()).collect();
    let tgt = |a: &[&Lin<P::M>]| ell_twisted(p, a);
    let is_zero = |x: &Src<P::G>| x.is_zero();
    let out = match which {
        Morphism::W => return Err(Error::InvalidInput("use w_residual for W".into())),
        Morphism::U | Morphism::UD => {
            let f = |a: &[&Src<P::G>]| u_ext(p, a, with_d);
            let src = |a: &[&Src<P::G>]| {
                let xs: Vec<&Lin<P::G>> = a.iter().map(|s| &s.x).collect();
                Src::x(nu(p, &xs).expect("arity ≥ 1"))
            };
            morphism_residual(&f, &src, &is_zero, &tgt, xs, &pars)?
        }
        Morphism::V => {
            let f = |a: &[&Src<P::G>]| v_ext(p, a, true);
            let src = |a: &[&Src<P::G>]| if a.len() == 1 { Src::x(nu1(p, &a[0].x)) } else { Src::x(Lin::zero()) };
            morphism_residual(&f, &src, &is_zero, &tgt, xs, &pars)?
        }
    };
    Ok(p.window_m(out))
}

// ------------------------------------------------------- Maurer-Cartan

fn power_sum<A: Atom>(f: &dyn Fn(&[&Lin<A>]) -> Lin<A>, x: &Lin<A>, depth: usize) -> Lin<A> {
    let mut out = Lin::zero();
    for r in 1..=depth {
        let args = vec![x; r];
        out.add_scaled(&f(&args), &(Q::one() / factorial(r)));
    }
    out
}

fn check_mc_input<A: Atom>(x: &Lin<A>, degree: i64, what: &str) -> Result<()> {
    if x.atoms().any(|a| a.degree() != degree) {
        return Err(Error::Parity(format!("{what} must be homogeneous of degree {degree}")));
    }
    Ok(())
}

/// `Σ_{r ≤ depth} (1/r!) ν_r(β, …, β)` for a degree-0 algebra element.
pub fn mc_residual_g<P: PreLiePair>(p: &P, beta: &Lin<P::G>, depth: usize) -> Result<Lin<P::G>> {
    check_mc_input(beta, 0, "β")?;
    let f = |a: &[&Lin<P::G>]| nu(p, a).expect("arity ≥ 1");
    Ok(p.window_g(power_sum(&f, beta, depth)))
}

/// `Σ_r (1/r!) ℓ^{α,m}_r(m′, …, m′)` for a module element of degree −1.
pub fn mc_residual_m<P: PreLiePair>(p: &P, mp: &Lin<P::M>, depth: usize) -> Result<Lin<P::M>> {
    check_mc_input(mp, -1, "m′")?;
    let f = |a: &[&Lin<P::M>]| ell_twisted(p, a);
    Ok(p.window_m(power_sum(&f, mp, depth.min(p.max_arity_m()))))
}

/// Pushforward `Σ_{r ≤ depth} (1/r!) W_r(β, …, β)`.
pub fn push_w<P: PreLiePair>(p: &P, beta: &Lin<P::G>, depth: usize) -> Result<Lin<P::G>> {
    check_mc_input(beta, 0, "β")?;
    let f = |a: &[&Lin<P::G>]| w(p, a).expect("homogeneous");
    Ok(p.window_g(power_sum(&f, beta, depth)))
}

/// Pushforward along `U`: `Σ_{r ≤ depth} (1/r!) m ∘ (β, …, β)`.
pub fn push_u<P: PreLiePair>(p: &P, beta: &Lin<P::G>, depth: usize) -> Result<Lin<P::M>> {
    check_mc_input(beta, 0, "β")?;
    let mut out = Lin::zero();
    for r in 1..=depth {
        let args = vec![beta; r];
        out.add_scaled(&u(p, &args)?, &(Q::one() / factorial(r)));
    }
    Ok(p.window_m(out))
}

/// Pushforward along `V = U ∘ W`.
pub fn push_v<P: PreLiePair>(p: &P, beta: &Lin<P::G>, depth: usize) -> Result<Lin<P::M>> {
    check_mc_input(beta, 0, "β")?;
    let s = Src::x(beta.clone());
    let mut out = Lin::zero();
    for r in 1..=depth {
        let args = vec![&s; r];
        out.add_scaled(&v_ext(p, &args, false)?, &(Q::one() / factorial(r)));
    }
    Ok(p.window_m(out))
}

// ------------------------------------------------------------ actions

fn check_gauge_parameter<P: PreLiePair>(p: &P, x: &Lin<P::G>) -> Result<()> {
    check_mc_input(x, 0, "x")?;
    if !p.converges(x) {
        return Err(Error::Precondition("the group parameter must have weight ≥ 1".into()));
    }
    Ok(())
}

/// `β · exp(x) = β + Σ_{1≤j≤depth} (1/j!)((⋯(β•x)⋯)•x + x•⋯•x)`.
pub fn exp_action_algebra<P: PreLiePair>(p: &P, beta: &Lin<P::G>, x: &Lin<P::G>, depth: usize) -> Result<Lin<P::G>> {
    check_gauge_parameter(p, x)?;
    let mut out = beta.clone();
    let mut b = beta.clone();
    let mut e = x.clone();
    for j in 1..=depth {
        b = p.window_g(p.prelie(&b, x));
        if j > 1 {
            e = p.window_g(p.prelie(&e, x));
        }
        let c = Q::one() / factorial(j);
        out.add_scaled(&b, &c);
        out.add_scaled(&e, &c);
    }
    Ok(p.window_g(out))
}

/// `m′ · exp(x) = m′ + Σ_{1≤j≤depth} (1/j!)(⋯((m′+m)∘x)⋯)∘x`.
pub fn exp_action_module<P: PreLiePair>(p: &P, mp: &Lin<P::M>, x: &Lin<P::G>, depth: usize) -> Result<Lin<P::M>> {
    check_gauge_parameter(p, x)?;
    let mut out = mp.clone();
    let mut b = mp.plus(&p.m());
    for j in 1..=depth {
        b = p.window_m(p.act(&b, x));
        out.add_scaled(&b, &(Q::one() / factorial(j)));
    }
    Ok(p.window_m(out))
}

/// `e_{λx}` as λ-coefficients `0..=order`.
pub fn e_series<P: PreLiePair>(p: &P, x: &Lin<P::G>, order: usize) -> Vec<Lin<P::G>> {
    let mut out = vec![Lin::zero(); order + 1];
    let mut acc = x.clone();
    for (j, slot) in out.iter_mut().enumerate().skip(1) {
        if j > 1 {
            acc = p.prelie(&acc, x);
        }
        *slot = acc.scaled(&(Q::one() / factorial(j)));
    }
    out
}

/// `E_{λx} m′` as λ-coefficients `0..=order`.
pub fn big_e_series<P: PreLiePair>(p: &P, x: &Lin<P::G>, mp: &Lin<P::M>, order: usize) -> Vec<Lin<P::M>> {
    let mut out = vec![Lin::zero(); order + 1];
    let mut acc = mp.clone();
    for (j, slot) in out.iter_mut().enumerate().skip(1) {
        acc = p.act(&acc, x);
        *slot = acc.scaled(&(Q::one() / factorial(j)));
    }
    out
}

/// Gauge action `β · gexp(x)` in a shifted L∞ algebra, by integrating
/// `β′(t) = Σ_r (1/r!) ℓ_{r+1}(β(t), …, β(t), x)` with Picard iteration on
/// polynomials in `t` of degree ≤ `depth`. For a dg Lie algebra this is
/// `((e^{ad_x} − 1)/ad_x) dx + e^{ad_x} β`.
pub fn gauge_action<A: Ord + Clone>(
    ell: &dyn Fn(&[&Lin<A>]) -> Lin<A>,
    max_arity: usize,
    beta: &Lin<A>,
    x: &Lin<A>,
    depth: usize,
) -> Lin<A> {
    let mut poly: Vec<Lin<A>> = vec![beta.clone()];
    for _ in 0..depth {
        // F(β(s)) as a polynomial in s
        let mut f: Vec<Lin<A>> = vec![Lin::zero(); depth];
        for r in 0..max_arity {
            for idx in compositions(r, poly.len(), depth - 1) {
                let deg: usize = idx.iter().sum();
                let mut args: Vec<&Lin<A>> = idx.iter().map(|&i| &poly[i]).collect();
                args.push(x);
                f[deg].add_scaled(&ell(&args), &(Q::one() / factorial(r)));
            }
        }
        let mut next = vec![beta.clone()];
        for (k, c) in f.into_iter().enumerate() {
            next.push(c.scaled(&Q::new(1.into(), (k as i64 + 1).into())));
        }
        poly = next;
    }
    let mut out = Lin::zero();
    for c in poly {
        out.absorb(c);
    }
    out
}

/// All `r`-tuples of indices `< n` with sum `≤ max`.
fn compositions(r: usize, n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(r: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in 0..n.min(left + 1) {
            cur.push(i);
            rec(r, n, left - i, cur, out);
            cur.pop();
        }
    }
    rec(r, n, max, &mut Vec::new(), &mut out);
    out
}

/// Gauge action on `M^{α,m}`.
pub fn gauge_action_m<P: PreLiePair>(p: &P, beta: &Lin<P::M>, x: &Lin<P::M>, depth: usize) -> Result<Lin<P::M>> {
    check_mc_input(x, 0, "x")?;
    let ell = |a: &[&Lin<P::M>]| ell_twisted(p, a);
    Ok(p.window_m(gauge_action(&ell, p.max_arity_m(), beta, x, depth)))
}

// ------------------------------------------------------------------ BCH

type Word = Vec<u8>;

fn assoc_mul(a: &Lin<Word>, b: &Lin<Word>, depth: usize) -> Lin<Word> {
    let mut out = Lin::zero();
    for (u, cu) in a.iter() {
        for (v, cv) in b.iter() {
            if u.len() + v.len() <= depth {
                let mut w = u.clone();
                w.extend(v);
                out.add_term(w, cu * cv);
            }
        }
    }
    out
}

/// `log(e^X e^Y)` in the free associative algebra on letters 0 = X, 1 = Y,
/// truncated at word length `depth`.
pub fn bch_words(depth: usize) -> Lin<Word> {
    let exp = |letter: u8| {
        let mut out = Lin::atom(vec![]);
        let mut pw = Lin::atom(vec![]);
        let gen = Lin::atom(vec![letter]);
        for k in 1..=depth {
            pw = assoc_mul(&pw, &gen, depth);
            out.add_scaled(&pw, &(Q::one() / factorial(k)));
        }
        out
    };
    let mut z = assoc_mul(&exp(0), &exp(1), depth);
    z.add_term(vec![], -Q::one());
    let mut out = Lin::zero();
    let mut zk = Lin::atom(vec![]);
    for k in 1..=depth {
        zk = assoc_mul(&zk, &z, depth);
        let c = sign_q(k % 2 == 0) / Q::from_integer((k as i64).into());
        out.add_scaled(&zk, &c);
    }
    out
}

/// `BCH(x, y)` truncated at total degree `depth`: the Lie series is read off
/// the free associative logarithm with the Dynkin map
/// `a₁⋯a_n ↦ (1/n)[⋯[a₁, a₂], ⋯, a_n]`, evaluated with `bracket`.
pub fn bch<A: Ord + Clone>(
    x: &Lin<A>,
    y: &Lin<A>,
    depth: usize,
    bracket: &dyn Fn(&Lin<A>, &Lin<A>) -> Lin<A>,
) -> Result<Lin<A>> {
    if depth < 1 {
        return Err(Error::InvalidInput("BCH depth must be at least 1".into()));
    }
    let words = bch_words(depth);
    let mut cache: BTreeMap<Word, Lin<A>> = BTreeMap::new();
    cache.insert(vec![0], x.clone());
    cache.insert(vec![1], y.clone());
    let mut out = Lin::zero();
    for (wd, c) in words.iter() {
        for l in 2..=wd.len() {
            if !cache.contains_key(&wd[..l]) {
                let v = bracket(&cache[&wd[..l - 1]], &cache[&wd[l - 1..l]]);
                cache.insert(wd[..l].to_vec(), v);
            }
        }
        let c = c / Q::from_integer((wd.len() as i64).into());
        out.add_scaled(&cache[wd.as_slice()], &c);
    }
    Ok(out)
}

// ------------------------------------------------------------ instances

/// `(GC_n, HGC_{m,n})` with `α` the single edge and `m` the one-hair vertex
/// plus a twist (`L` for `m = n`, `T(λ)` for `m = n − 1`).
#[derive(Clone, Debug)]
pub struct GraphPair {
    pub n: i32,
    pub m: i32,
    pub twist: Twist,
    /// Outputs are kept up to this many hairs (and are exact there).
    pub hair_window: Option<usize>,
    /// Outputs are kept up to this filtration weight.
    pub weight_window: Option<i64>,
}

impl GraphPair {
    /// The L case: `HGC_{n,n}` twisted by `m_hair + L`.
    pub fn line(n: i32) -> Self {
        GraphPair { n, m: n, twist: Twist::Line, hair_window: None, weight_window: None }
    }

    /// The T case: `HGC_{n−1,n}` twisted by `m_hair + T(λ)`, exact up to
    /// `hair_window` hairs.
    pub fn tripod(n: i32, lambda: Q, hair_window: usize) -> Self {
        GraphPair {
            n,
            m: n - 1,
            twist: Twist::Tripod { lambda, max_hairs: hair_window + 1 },
            hair_window: Some(hair_window),
            weight_window: None,
        }
    }

    pub fn with_weight_window(mut self, w: i64) -> Self {
        self.weight_window = Some(w);
        self
    }
}

impl PreLiePair for GraphPair {
    type G = Graph;
    type M = Graph;

    fn alpha(&self) -> Lin<Graph> {
        gc::alpha(self.n)
    }

    fn m(&self) -> Lin<Graph> {
        hgc::m_element(self.m, self.n).plus(&self.twist.element(self.m, self.n))
    }

    fn d_g(&self, _x: &Lin<Graph>) -> Lin<Graph> {
        Lin::zero()
    }

    fn prelie(&self, x: &Lin<Graph>, y: &Lin<Graph>) -> Lin<Graph> {
        gc::par_bilinear(x, y, gc::prelie_atoms)
    }

    fn brace_g(&self, x: &Lin<Graph>, ys: &[&Lin<Graph>]) -> Lin<Graph> {
        gc::brace_unchecked(x, ys)
    }

    fn act(&self, a: &Lin<Graph>, x: &Lin<Graph>) -> Lin<Graph> {
        hgc::gc_action_unchecked(a, x)
    }

    fn brace_m(&self, a: &Lin<Graph>, xs: &[&Lin<Graph>]) -> Lin<Graph> {
        gc::brace_unchecked(a, xs)
    }

    fn ell_m(&self, args: &[&Lin<Graph>]) -> Lin<Graph> {
        match args {
            [a] => hgc::alpha_part(a),
            [a, b] => {
                let (even, odd) = a.by_parity();
                hgc::graft_bracket_unchecked(&odd, b).minus(&hgc::graft_bracket_unchecked(&even, b))
            }
            _ => Lin::zero(),
        }
    }

    fn max_arity_m(&self) -> usize {
        2
    }

    fn derivation_g(&self, x: &Lin<Graph>) -> Option<Lin<Graph>> {
        Some(gc::loop_d(x))
    }

    fn derivation_m(&self, a: &Lin<Graph>) -> Option<Lin<Graph>> {
        Some(hgc::hair_d(a))
    }

    fn window_g(&self, x: Lin<Graph>) -> Lin<Graph> {
        match self.weight_window {
            Some(w) => x.filter(|g| g.graph_weight() <= w),
            None => x,
        }
    }

    fn window_m(&self, a: Lin<Graph>) -> Lin<Graph> {
        a.filter(|g| {
            self.hair_window.is_none_or(|h| g.h <= h) && self.weight_window.is_none_or(|w| g.graph_weight() <= w)
        })
    }
}

/// The free pre-Lie algebra on white generators and a black `α` with
/// `dα = −α•α`, acting on itself by grafting; the module carries the zero
/// bracket and `m = α`. `D` counts white vertices.
#[derive(Clone, Debug)]
pub struct TreePair {
    /// Outputs are kept up to this many vertices.
    pub max_vertices: usize,
}

fn black() -> Lin<Tree> {
    Lin::atom(Tree::leaf(Label::Black))
}

impl PreLiePair for TreePair {
    type G = Tree;
    type M = Tree;

    fn alpha(&self) -> Lin<Tree> {
        black()
    }

    fn m(&self) -> Lin<Tree> {
        black()
    }

    fn d_g(&self, x: &Lin<Tree>) -> Lin<Tree> {
        tree::split_blacks(x)
    }

    fn prelie(&self, x: &Lin<Tree>, y: &Lin<Tree>) -> Lin<Tree> {
        self.window_g(tree::prelie(x, y))
    }

    fn brace_g(&self, x: &Lin<Tree>, ys: &[&Lin<Tree>]) -> Lin<Tree> {
        let owned: Vec<Lin<Tree>> = ys.iter().map(|y| (*y).clone()).collect();
        self.window_g(tree::brace(x, &owned))
    }

    fn act(&self, a: &Lin<Tree>, x: &Lin<Tree>) -> Lin<Tree> {
        self.prelie(a, x)
    }

    fn brace_m(&self, a: &Lin<Tree>, xs: &[&Lin<Tree>]) -> Lin<Tree> {
        self.brace_g(a, xs)
    }

    /// `ℓ₁(a) = −da + (−1)^{|a|} a•α`.
    fn ell_m(&self, args: &[&Lin<Tree>]) -> Lin<Tree> {
        match args {
            [a] => {
                let (even, odd) = a.by_parity();
                let al = black();
                let mut out = tree::split_blacks(a).neg();
                out.absorb(tree::prelie(&even, &al));
                out.absorb(tree::prelie(&odd, &al).neg());
                self.window_m(out)
            }
            _ => Lin::zero(),
        }
    }

    fn max_arity_m(&self) -> usize {
        1
    }

    fn derivation_g(&self, x: &Lin<Tree>) -> Option<Lin<Tree>> {
        Some(x.scale_by(|t| t.whites() as i64))
    }

    fn derivation_m(&self, a: &Lin<Tree>) -> Option<Lin<Tree>> {
        Some(a.scale_by(|t| t.whites() as i64))
    }

    fn window_g(&self, x: Lin<Tree>) -> Lin<Tree> {
        x.filter(|t| t.size() <= self.max_vertices)
    }

    fn window_m(&self, a: Lin<Tree>) -> Lin<Tree> {
        self.window_g(a)
    }

    fn converges(&self, _x: &Lin<Tree>) -> bool {
        true
    }
}
