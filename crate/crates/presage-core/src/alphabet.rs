//! Concurrent alphabets: dependence relations over observed labels.
//!
//! A [`ConcurrentAlphabet`] carries one reflexive symmetric dependence
//! relation; a [`DualAlphabet`] splits dependence into a strong part (which
//! both orders events and constrains dropping) and a weak part (which only
//! orders events). For the read/write/lock alphabet, dependence relates
//! same-thread labels, same-lock labels, and conflicting accesses; weakness
//! covers exactly the cross-thread same-lock pairs and cross-thread
//! write/write conflicts.

use alloc::vec;
use alloc::vec::Vec;

use crate::label::{Letter, LetterId};

fn symmetric_matrix(n: usize, pairs: &[(LetterId, LetterId)], reflexive: bool) -> Vec<bool> {
    let mut m = vec![false; n * n];
    if reflexive {
        for a in 0..n {
            m[a * n + a] = true;
        }
    }
    for &(a, b) in pairs {
        assert!(a < n && b < n, "letter pair ({a},{b}) out of range for {n} letters");
        m[a * n + b] = true;
        m[b * n + a] = true;
    }
    m
}

/// A finite letter set with a reflexive symmetric dependence relation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConcurrentAlphabet {
    n: usize,
    dep: Vec<bool>,
}

impl ConcurrentAlphabet {
    /// Builds the relation from unordered pairs; the diagonal is always
    /// included and pairs are closed under symmetry.
    pub fn from_pairs(n: usize, pairs: &[(LetterId, LetterId)]) -> ConcurrentAlphabet {
        ConcurrentAlphabet { n, dep: symmetric_matrix(n, pairs, true) }
    }

    /// Number of letters.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dependent(&self, a: LetterId, b: LetterId) -> bool {
        self.dep[a * self.n + b]
    }

    /// The relation induced on the positions of `seq`: position pairs are
    /// dependent when their letters are. Used to run string closures at the
    /// granularity of events, where every position is a fresh letter.
    pub fn induced(&self, seq: &[LetterId]) -> ConcurrentAlphabet {
        let k = seq.len();
        let mut dep = vec![false; k * k];
        for i in 0..k {
            for j in 0..k {
                dep[i * k + j] = self.dependent(seq[i], seq[j]);
            }
        }
        ConcurrentAlphabet { n: k, dep }
    }
}

/// A letter set with a strong (reflexive) and a weak (irreflexive)
/// symmetric dependence relation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DualAlphabet {
    n: usize,
    strong: Vec<bool>,
    weak: Vec<bool>,
}

impl DualAlphabet {
    /// Builds both relations from unordered pairs. The strong relation gets
    /// the diagonal; a diagonal weak pair panics.
    pub fn from_pairs(
        n: usize,
        strong: &[(LetterId, LetterId)],
        weak: &[(LetterId, LetterId)],
    ) -> DualAlphabet {
        for &(a, b) in weak {
            assert!(a != b, "weak dependence must be irreflexive, got ({a},{a})");
        }
        DualAlphabet {
            n,
            strong: symmetric_matrix(n, strong, true),
            weak: symmetric_matrix(n, weak, false),
        }
    }

    /// Number of letters.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn strong(&self, a: LetterId, b: LetterId) -> bool {
        self.strong[a * self.n + b]
    }

    pub fn weak(&self, a: LetterId, b: LetterId) -> bool {
        self.weak[a * self.n + b]
    }

    /// Membership in the union relation: the pairs that order events.
    pub fn dependent(&self, a: LetterId, b: LetterId) -> bool {
        self.strong(a, b) || self.weak(a, b)
    }

    /// The union relation as a plain concurrent alphabet.
    pub fn union_alphabet(&self) -> ConcurrentAlphabet {
        let dep = self
            .strong
            .iter()
            .zip(&self.weak)
            .map(|(&s, &w)| s || w)
            .collect();
        ConcurrentAlphabet { n: self.n, dep }
    }

    /// Both relations induced on the positions of `seq`.
    pub fn induced(&self, seq: &[LetterId]) -> DualAlphabet {
        let k = seq.len();
        let mut strong = vec![false; k * k];
        let mut weak = vec![false; k * k];
        for i in 0..k {
            for j in 0..k {
                strong[i * k + j] = self.strong(seq[i], seq[j]);
                weak[i * k + j] = self.weak(seq[i], seq[j]);
            }
        }
        DualAlphabet { n: k, strong, weak }
    }

    /// Exact width: the size of the largest subset of `observed` with no
    /// two strongly dependent letters, by branch and bound. Letters may be
    /// listed more than once; duplicates cannot co-occur (the strong
    /// relation is reflexive) so they never inflate the result.
    pub fn width(&self, observed: &[LetterId]) -> usize {
        let mut order: Vec<LetterId> = observed.to_vec();
        order.sort_unstable();
        order.dedup();
        let mut best = 0;
        let mut chosen: Vec<LetterId> = Vec::new();
        self.width_rec(&order, 0, &mut chosen, &mut best);
        best
    }

    fn width_rec(&self, order: &[LetterId], from: usize, chosen: &mut Vec<LetterId>, best: &mut usize) {
        if chosen.len() > *best {
            *best = chosen.len();
        }
        for i in from..order.len() {
            // Even taking every remaining letter cannot beat the best.
            if chosen.len() + (order.len() - i) <= *best {
                return;
            }
            let cand = order[i];
            if chosen.iter().all(|&c| !self.strong(c, cand)) {
                chosen.push(cand);
                self.width_rec(order, i + 1, chosen, best);
                chosen.pop();
            }
        }
    }
}

/// Dependence for the read/write/lock alphabet: same-thread pairs,
/// same-lock pairs, and same-location pairs with at least one write.
pub fn build_rwl_dependence(letters: &[Letter]) -> ConcurrentAlphabet {
    let n = letters.len();
    let mut dep = vec![false; n * n];
    for a in 0..n {
        for b in 0..n {
            dep[a * n + b] = rwl_dependent(letters[a], letters[b]);
        }
    }
    ConcurrentAlphabet { n, dep }
}

fn rwl_dependent(p: Letter, q: Letter) -> bool {
    p.thread == q.thread || p.same_lock(q) || p.conflicts(q)
}

fn rwl_weak(p: Letter, q: Letter) -> bool {
    p.thread != q.thread
        && (p.same_lock(q) || (p.conflicts(q) && p.action.is_write() && q.action.is_write()))
}

/// The dual split of the read/write/lock dependence: weak pairs are the
/// cross-thread same-lock pairs and the cross-thread write/write conflicts;
/// everything else dependent (same-thread pairs, cross-thread write/read
/// conflicts) is strong.
pub fn build_rwl_dual(letters: &[Letter]) -> DualAlphabet {
    let n = letters.len();
    let mut strong = vec![false; n * n];
    let mut weak = vec![false; n * n];
    for a in 0..n {
        for b in 0..n {
            let w = rwl_weak(letters[a], letters[b]);
            weak[a * n + b] = w;
            strong[a * n + b] = rwl_dependent(letters[a], letters[b]) && !w;
        }
    }
    DualAlphabet { n, strong, weak }
}
