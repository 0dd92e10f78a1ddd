//! Finite formal linear combinations of canonical atoms.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qfrac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn factorial(n: usize) -> Q {
    let mut f = BigInt::one();
    for i in 2..=n {
        f *= i;
    }
    Q::from_integer(f)
}

/// Writes `num/den` (always with a denominator).
pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q` or an integer. Decimal points are rejected.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if s.contains('.') || s.contains('e') || s.contains('E') {
        return None;
    }
    match s.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().ok()?;
            let b: BigInt = b.trim().parse().ok()?;
            if b.is_zero() {
                return None;
            }
            Some(Q::new(a, b))
        }
        None => Some(Q::from_integer(s.parse().ok()?)),
    }
}

/// A basis element of some graded vector space, in canonical form.
pub trait Atom: Ord + Clone + Send + Sync + fmt::Debug {
    /// Homological degree.
    fn degree(&self) -> i64;
    /// Filtration weight.
    fn weight(&self) -> i64;
    fn parity(&self) -> bool {
        self.degree().rem_euclid(2) == 1
    }
}

/// Finite linear combination with nonzero exact coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Lin<A: Ord> {
    terms: BTreeMap<A, Q>,
}

impl<A: Ord> Default for Lin<A> {
    fn default() -> Self {
        Lin { terms: BTreeMap::new() }
    }
}

impl<A: Ord + Clone> Lin<A> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(a: A, c: Q) -> Self {
        let mut l = Self::zero();
        l.add_term(a, c);
        l
    }

    pub fn atom(a: A) -> Self {
        Self::single(a, Q::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, a: A, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(a) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Lin<A>, c: &Q) {
        if c.is_zero() {
            return;
        }
        for (a, x) in &other.terms {
            self.add_term(a.clone(), x * c);
        }
    }

    pub fn add_assign(&mut self, other: &Lin<A>) {
        for (a, x) in &other.terms {
            self.add_term(a.clone(), x.clone());
        }
    }

    pub fn absorb(&mut self, other: Lin<A>) {
        if self.terms.is_empty() {
            self.terms = other.terms;
            return;
        }
        for (a, x) in other.terms {
            self.add_term(a, x);
        }
    }

    pub fn scaled(&self, c: &Q) -> Lin<A> {
        if c.is_zero() {
            return Lin::zero();
        }
        Lin {
            terms: self.terms.iter().map(|(a, x)| (a.clone(), x * c)).collect(),
        }
    }

    pub fn neg(&self) -> Lin<A> {
        self.scaled(&-Q::one())
    }

    pub fn plus(&self, other: &Lin<A>) -> Lin<A> {
        let mut r = self.clone();
        r.add_assign(other);
        r
    }

    pub fn minus(&self, other: &Lin<A>) -> Lin<A> {
        let mut r = self.clone();
        r.add_scaled(other, &-Q::one());
        r
    }

    pub fn coeff(&self, a: &A) -> Q {
        self.terms.get(a).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&A, &Q)> {
        self.terms.iter()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &A> {
        self.terms.keys()
    }

    pub fn into_terms(self) -> BTreeMap<A, Q> {
        self.terms
    }

    pub fn filter(&self, mut keep: impl FnMut(&A) -> bool) -> Lin<A> {
        Lin {
            terms: self
                .terms
                .iter()
                .filter(|(a, _)| keep(a))
                .map(|(a, x)| (a.clone(), x.clone()))
                .collect(),
        }
    }

    /// Applies a linear map given on atoms.
    pub fn map_linear<B: Ord + Clone>(&self, mut f: impl FnMut(&A) -> Lin<B>) -> Lin<B> {
        let mut out = Lin::zero();
        for (a, x) in &self.terms {
            out.add_scaled(&f(a), x);
        }
        out
    }

    /// Largest absolute value of a numerator, handy for diagnostics.
    pub fn max_abs_coeff(&self) -> Q {
        self.terms.values().map(|x| x.abs()).max().unwrap_or_else(Q::zero)
    }
}

impl<A: Atom> Lin<A> {
    pub fn truncate_weight(&self, max_weight: i64) -> Lin<A> {
        self.filter(|a| a.weight() <= max_weight)
    }

    pub fn min_weight(&self) -> Option<i64> {
        self.terms.keys().map(|a| a.weight()).min()
    }

    /// Splits into pieces of homogeneous parity (even, odd).
    pub fn by_parity(&self) -> (Lin<A>, Lin<A>) {
        (self.filter(|a| !a.parity()), self.filter(|a| a.parity()))
    }

    /// Some common degree if all atoms share one.
    pub fn homogeneous_degree(&self) -> Option<i64> {
        let mut it = self.terms.keys().map(|a| a.degree());
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    /// Atom-wise scaling by a function of the atom (e.g. a grading generator).
    pub fn scale_by(&self, f: impl Fn(&A) -> i64) -> Lin<A> {
        let mut out = Lin::zero();
        for (a, x) in &self.terms {
            out.add_term(a.clone(), x * q(f(a)));
        }
        out
    }
}

impl<A: Ord + fmt::Debug> fmt::Debug for Lin<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (a, x) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})·{:?}", x, a)?;
        }
        Ok(())
    }
}

/// Bilinear extension of an atom-level operation.
pub fn bilinear<A, B, C>(
    x: &Lin<A>,
    y: &Lin<B>,
    mut f: impl FnMut(&A, &B) -> Lin<C>,
) -> Lin<C>
where
    A: Ord + Clone,
    B: Ord + Clone,
    C: Ord + Clone,
{
    let mut out = Lin::zero();
    for (a, ca) in x.iter() {
        for (b, cb) in y.iter() {
            let t = f(a, b);
            if !t.is_zero() {
                out.add_scaled(&t, &(ca * cb));
            }
        }
    }
    out
}

/// Multilinear extension: `f` receives one atom from each argument.
pub fn multilinear<A, C>(args: &[&Lin<A>], mut f: impl FnMut(&[&A]) -> Lin<C>) -> Lin<C>
where
    A: Ord + Clone,
    C: Ord + Clone,
{
    let mut out = Lin::zero();
    let mut pick: Vec<&A> = Vec::with_capacity(args.len());
    fn rec<'a, A: Ord + Clone, C: Ord + Clone>(
        args: &[&'a Lin<A>],
        i: usize,
        coeff: Q,
        pick: &mut Vec<&'a A>,
        out: &mut Lin<C>,
        f: &mut dyn FnMut(&[&A]) -> Lin<C>,
    ) {
        if i == args.len() {
            let t = f(pick);
            out.add_scaled(&t, &coeff);
            return;
        }
        for (a, c) in args[i].iter() {
            pick.push(a);
            rec(args, i + 1, &coeff * c, pick, out, f);
            pick.pop();
        }
    }
    rec(args, 0, Q::one(), &mut pick, &mut out, &mut f);
    out
}

pub fn sign_q(negative: bool) -> Q {
    if negative {
        -Q::one()
    } else {
        Q::one()
    }
}
