//! Koszul sign bookkeeping.

/// Parity of the permutation that sorts `keys` (stable for equal keys),
/// counting only inversions between entries flagged odd.
pub fn sort_sign_odd<K: Ord>(keys: &[(K, bool)]) -> bool {
    let mut neg = false;
    for i in 0..keys.len() {
        if !keys[i].1 {
            continue;
        }
        for j in (i + 1)..keys.len() {
            if keys[j].1 && keys[j].0 < keys[i].0 {
                neg = !neg;
            }
        }
    }
    neg
}

/// Parity of a permutation given as images `perm[i]`.
pub fn perm_parity(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut neg = false;
    for s in 0..perm.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len % 2 == 0 {
            neg = !neg;
        }
    }
    neg
}

/// Koszul sign of listing graded items in the order `order` (a permutation of
/// `0..parities.len()`), relative to their natural order.
pub fn koszul(order: &[usize], parities: &[bool]) -> bool {
    let mut neg = false;
    for i in 0..order.len() {
        if !parities[order[i]] {
            continue;
        }
        for j in (i + 1)..order.len() {
            if parities[order[j]] && order[j] < order[i] {
                neg = !neg;
            }
        }
    }
    neg
}

/// A word of odd symbols, each tagged with its target sort key. Pairs of
/// symbols can be contracted away; the remaining symbols are then sorted.
#[derive(Debug, Default, Clone)]
pub struct SymbolWord {
    keys: Vec<(u8, u32)>,
    alive: Vec<bool>,
    neg: bool,
}

impl SymbolWord {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an odd symbol and returns its position.
    pub fn push(&mut self, key: (u8, u32)) -> usize {
        self.keys.push(key);
        self.alive.push(true);
        self.keys.len() - 1
    }

    /// Removes the pair `(a, b)` with `a` left of `b`, after moving `a` next to `b`.
    pub fn contract(&mut self, a: usize, b: usize) {
        debug_assert!(a < b && self.alive[a] && self.alive[b]);
        let between = (a + 1..b).filter(|&i| self.alive[i]).count();
        if between % 2 == 1 {
            self.neg = !self.neg;
        }
        self.alive[a] = false;
        self.alive[b] = false;
    }

    pub fn set_key(&mut self, pos: usize, key: (u8, u32)) {
        self.keys[pos] = key;
    }

    /// Sign after sorting the surviving symbols by key.
    pub fn finish(&self) -> bool {
        let live: Vec<((u8, u32), bool)> = self
            .keys
            .iter()
            .zip(&self.alive)
            .filter(|(_, a)| **a)
            .map(|(k, _)| (*k, true))
            .collect();
        self.neg ^ sort_sign_odd(&live)
    }
}
