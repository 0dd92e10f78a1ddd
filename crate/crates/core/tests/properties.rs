//! Property tests over random small inputs.

use graphcx::exactla::SparseMatrix;
use graphcx::gc;
use graphcx::graph::{canonicalize, End, Graph};
use graphcx::hgc;
use graphcx::lin::{q, Atom, Lin, Q};
use graphcx::linfty;
use graphcx::tree::{self, Label, Tree};
use proptest::prelude::*;

// ------------------------------------------------------------ matrices

/// Rank by fraction-free elimination over i128; entries stay small here.
fn rank_oracle(rows: usize, cols: usize, data: &[i64]) -> usize {
    let mut a: Vec<Vec<i128>> = (0..rows).map(|r| (0..cols).map(|c| data[r * cols + c] as i128).collect()).collect();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| a[r][c] != 0) else { continue };
        a.swap(rank, p);
        for r in rank + 1..rows {
            let f = a[r][c];
            let piv = a[rank][c];
            let top = a[rank].clone();
            for (x, t) in a[r].iter_mut().zip(&top) {
                *x = *x * piv - t * f;
            }
            let g = a[r].iter().fold(0i128, |g, &x| gcd(g, x.abs()));
            if g > 1 {
                a[r].iter_mut().for_each(|x| *x /= g);
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn matrix() -> impl Strategy<Value = (usize, usize, Vec<i64>)> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(-3i64..=3, r * c)))
}

fn build(rows: usize, cols: usize, data: &[i64]) -> SparseMatrix {
    let entries = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).map(|(r, c)| (r, c, q(data[r * cols + c])));
    SparseMatrix::from_triplets(rows, cols, entries).unwrap()
}

proptest! {
    #[test]
    fn rank_matches_an_integer_oracle((rows, cols, data) in matrix()) {
        let m = build(rows, cols, &data);
        prop_assert_eq!(m.rank(), rank_oracle(rows, cols, &data));
        prop_assert_eq!(m.transpose().rank(), m.rank());
    }

    #[test]
    fn kernel_vectors_are_annihilated((rows, cols, data) in matrix()) {
        let m = build(rows, cols, &data);
        let ker = m.kernel_basis();
        prop_assert_eq!(ker.len() + m.rank(), cols);
        for v in &ker {
            prop_assert!(m.mul_vec(v).unwrap().iter().all(|x| *x == Q::default()));
        }
    }

    #[test]
    fn rank_is_permutation_invariant(
        (rows, cols, data) in matrix(),
        seed in any::<u64>(),
    ) {
        let m = build(rows, cols, &data);
        let rp = shuffled(rows, seed);
        let cp = shuffled(cols, seed.rotate_left(17));
        prop_assert_eq!(m.permuted(&rp, &cp).rank(), m.rank());
    }

    #[test]
    fn dump_round_trips((rows, cols, data) in matrix()) {
        let m = build(rows, cols, &data);
        prop_assert_eq!(SparseMatrix::parse_dump(&m.dump()).unwrap(), m);
    }
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    v
}

// --------------------------------------------------------------- trees

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::White(1)), Just(Label::White(2)), Just(Label::OddWhite(3)), Just(Label::Black)]
}

/// Random tree from a parent vector: vertex `i ≥ 1` hangs below some `j < i`.
fn tree_strategy(max: usize) -> impl Strategy<Value = Tree> {
    (1..=max).prop_flat_map(|n| {
        let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
        (prop::collection::vec(label(), n), parents)
    })
    .prop_map(|(labels, parents)| {
        fn build(v: usize, labels: &[Label], parents: &[usize]) -> Tree {
            let children = (1..labels.len()).filter(|&c| parents[c - 1] == v).map(|c| build(c, labels, parents)).collect();
            Tree::node(labels[v], children)
        }
        build(0, &labels, &parents)
    })
}

fn lin(t: &Tree) -> Lin<Tree> {
    tree::canonical_combination(t)
}

fn odd(x: &Lin<Tree>) -> bool {
    x.atoms().next().is_some_and(Atom::parity)
}

proptest! {
    #[test]
    fn tree_text_round_trips(t in tree_strategy(6)) {
        for (c, _) in lin(&t).iter() {
            prop_assert_eq!(&tree::parse_tree(&c.to_string()).unwrap(), c);
        }
    }

    #[test]
    fn canonical_form_ignores_child_order(t in tree_strategy(6)) {
        fn reversed(t: &Tree) -> Tree {
            Tree::node(t.label, t.children.iter().rev().map(reversed).collect())
        }
        let a = lin(&t);
        let b = lin(&reversed(&t));
        // reordering odd vertices can only change the sign
        prop_assert!(a == b || a == b.neg());
        prop_assert_eq!(a.is_zero(), b.is_zero());
    }

    #[test]
    fn pre_lie_identity_on_random_trees(x in tree_strategy(3), y in tree_strategy(3), z in tree_strategy(3)) {
        let (x, y, z) = (lin(&x), lin(&y), lin(&z));
        let assoc = |a: &Lin<Tree>, b: &Lin<Tree>, c: &Lin<Tree>| {
            tree::prelie(&tree::prelie(a, b), c).minus(&tree::prelie(a, &tree::prelie(b, c)))
        };
        let s = if odd(&y) && odd(&z) { q(-1) } else { q(1) };
        prop_assert_eq!(assoc(&x, &y, &z), assoc(&x, &z, &y).scaled(&s));
    }

    #[test]
    fn bracket_is_graded_antisymmetric(x in tree_strategy(4), y in tree_strategy(4)) {
        let (x, y) = (lin(&x), lin(&y));
        let s = if odd(&x) && odd(&y) { q(1) } else { q(-1) };
        prop_assert_eq!(tree::bracket(&x, &y), tree::bracket(&y, &x).scaled(&s));
    }

    #[test]
    fn product_size_is_additive(x in tree_strategy(4), y in tree_strategy(4)) {
        let p = tree::prelie(&lin(&x), &lin(&y));
        prop_assert!(p.atoms().all(|t| t.size() == x.size() + y.size()));
    }
}

// -------------------------------------------------------------- graphs

/// Connected graph: a random spanning tree plus extra edges.
fn graph_strategy() -> impl Strategy<Value = Graph> {
    (prop_oneof![Just(2i32), Just(3i32)], 2usize..=5).prop_flat_map(|(n, v)| {
        let tree: Vec<_> = (1..v).map(|i| 0..i).collect();
        (Just(n), Just(v), tree, prop::collection::vec((0..v, 0..v), 0..4))
    })
    .prop_map(|(n, v, tree, extra)| {
        let mut edges: Vec<(usize, usize)> = tree.into_iter().enumerate().map(|(i, p)| (i + 1, p)).collect();
        edges.extend(extra.into_iter().filter(|(a, b)| a != b));
        Graph::gc(n, v, edges)
    })
}

fn relabel(g: &Graph, perm: &[usize]) -> Graph {
    let map = |e: &End| match e {
        End::V(i) => End::V(perm[*i as usize] as u8),
        h => *h,
    };
    Graph { edges: g.edges.iter().map(|(a, b)| (map(a), map(b))).collect(), ..g.clone() }
}

fn parity(perm: &[usize]) -> bool {
    let mut odd = false;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            odd ^= perm[i] > perm[j];
        }
    }
    odd
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_is_label_invariant(g in graph_strategy(), seed in any::<u64>()) {
        let perm = shuffled(g.v, seed);
        let a = canonicalize(&g).unwrap();
        let b = canonicalize(&relabel(&g, &perm)).unwrap();
        match (a, b) {
            (None, None) => {}
            (Some((ca, sa)), Some((cb, sb))) => {
                prop_assert_eq!(&ca, &cb);
                // at odd n vertices are odd and relabeling contributes sgn(perm)
                let expect = sa ^ (g.n % 2 != 0 && parity(&perm));
                prop_assert_eq!(sb, expect);
            }
            _ => prop_assert!(false, "relabeling changed whether the graph vanishes"),
        }
    }

    #[test]
    fn reversing_an_edge_follows_the_parity_of_n(g in graph_strategy(), k in any::<prop::sample::Index>()) {
        let mut h = g.clone();
        let i = k.index(h.edges.len());
        let (a, b) = h.edges[i];
        h.edges[i] = (b, a);
        let (x, y) = (canonicalize(&g).unwrap(), canonicalize(&h).unwrap());
        prop_assert_eq!(x.is_some(), y.is_some());
        if let (Some((_, sx)), Some((_, sy))) = (x, y) {
            prop_assert_eq!(sx ^ sy, g.n % 2 != 0);
        }
    }

    #[test]
    fn differential_squares_to_zero(g in graph_strategy()) {
        let x = Lin::atom(g);
        let x = x.map_linear(|g| match canonicalize(g).unwrap() {
            Some((c, s)) => Lin::single(c, if s { q(-1) } else { q(1) }),
            None => Lin::zero(),
        });
        prop_assert!(gc::differential_full(&gc::differential_full(&x)).is_zero());
        // ν₁ = [α, ·] up to sign, so it also squares to zero
        let p = linfty::GraphPair::line(x.atoms().next().map_or(2, |g| g.n));
        let once = linfty::nu(&p, &[&x]).unwrap();
        prop_assert!(linfty::nu(&p, &[&once]).unwrap().is_zero());
    }

    #[test]
    fn hairy_differential_squares_to_zero(g in graph_strategy(), hairs in prop::collection::vec(0usize..5, 1..3)) {
        let m = g.n - 1;
        let mut edges = g.edges.clone();
        for (i, &v) in hairs.iter().enumerate() {
            edges.push((End::V((v % g.v) as u8), End::H(i as u8)));
        }
        let hg = Graph::hairy(m, g.n, g.v, hairs.len(), edges);
        if let Some((c, _)) = canonicalize(&hg).unwrap() {
            let x = Lin::atom(c);
            let d = hgc::twisted_differential_full(&x, &Lin::zero());
            prop_assert!(hgc::twisted_differential_full(&d, &Lin::zero()).is_zero());
        }
    }
}
