//! Brute-force reference closures on small inputs.
//!
//! Everything here is deliberately exponential: these sets are the ground
//! truth that the streaming monitors, the mask enumerations, and the
//! feasibility fixpoint are certified against. All operations refuse inputs
//! longer than an explicit bound instead of silently truncating.
//!
//! String closures ([`maz_equiv_class`], [`ideal_closure`],
//! [`strong_closure`]) work over letter sequences and an alphabet; the
//! event-level variants run the same fixpoints at event granularity (each
//! position its own letter) and return sequences of 1-based event ids, as
//! do the reordering enumerations.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;
use core::fmt;

use crate::alphabet::{build_rwl_dependence, ConcurrentAlphabet, DualAlphabet};
use crate::exec::{Execution, LockDiscipline};
use crate::label::{Action, EventId, LetterId};

/// Default ceiling on oracle input length.
pub const DEFAULT_ORACLE_BOUND: usize = 10;

/// Input exceeded the configured oracle bound.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct BoundExceeded {
    pub len: usize,
    pub bound: usize,
}

impl fmt::Display for BoundExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "input has {} events, oracle bound is {}", self.len, self.bound)
    }
}

fn check_bound(len: usize, bound: usize) -> Result<(), BoundExceeded> {
    if len > bound {
        Err(BoundExceeded { len, bound })
    } else {
        Ok(())
    }
}

/// Closure of `{w}` under swapping adjacent independent letters: the full
/// equivalence class of `w`.
pub fn maz_equiv_class(
    d: &ConcurrentAlphabet,
    w: &[LetterId],
    bound: usize,
) -> Result<BTreeSet<Vec<LetterId>>, BoundExceeded> {
    check_bound(w.len(), bound)?;
    Ok(saturate(w, |s, out| swaps(d, s, out)))
}

/// Closure under independent swaps plus dropping the last letter: all
/// strings reachable as prefixes of equivalent strings.
pub fn ideal_closure(
    d: &ConcurrentAlphabet,
    w: &[LetterId],
    bound: usize,
) -> Result<BTreeSet<Vec<LetterId>>, BoundExceeded> {
    check_bound(w.len(), bound)?;
    Ok(saturate(w, |s, out| {
        swaps(d, s, out);
        if !s.is_empty() {
            out.push(s[..s.len() - 1].to_vec());
        }
    }))
}

/// Closure under swaps of pairs outside the union relation plus dropping
/// any letter with no strongly dependent letter anywhere after it.
pub fn strong_closure(
    d: &DualAlphabet,
    w: &[LetterId],
    bound: usize,
) -> Result<BTreeSet<Vec<LetterId>>, BoundExceeded> {
    check_bound(w.len(), bound)?;
    Ok(saturate(w, |s, out| {
        for i in 0..s.len().saturating_sub(1) {
            if !d.dependent(s[i], s[i + 1]) {
                let mut t = s.to_vec();
                t.swap(i, i + 1);
                out.push(t);
            }
        }
        for p in 0..s.len() {
            if (p + 1..s.len()).all(|q| !d.strong(s[p], s[q])) {
                out.push(without(s, p));
            }
        }
    }))
}

/// Breadth-first fixpoint from a seed string under one successor relation.
fn saturate(
    seed: &[LetterId],
    mut successors: impl FnMut(&[LetterId], &mut Vec<Vec<LetterId>>),
) -> BTreeSet<Vec<LetterId>> {
    let mut seen: BTreeSet<Vec<LetterId>> = BTreeSet::new();
    let mut queue: VecDeque<Vec<LetterId>> = VecDeque::new();
    seen.insert(seed.to_vec());
    queue.push_back(seed.to_vec());
    let mut out = Vec::new();
    while let Some(s) = queue.pop_front() {
        out.clear();
        successors(&s, &mut out);
        for t in out.drain(..) {
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
    }
    seen
}

fn swaps(d: &ConcurrentAlphabet, s: &[LetterId], out: &mut Vec<Vec<LetterId>>) {
    for i in 0..s.len().saturating_sub(1) {
        if !d.dependent(s[i], s[i + 1]) {
            let mut t = s.to_vec();
            t.swap(i, i + 1);
            out.push(t);
        }
    }
}

fn without(s: &[LetterId], p: usize) -> Vec<LetterId> {
    let mut t = Vec::with_capacity(s.len() - 1);
    t.extend_from_slice(&s[..p]);
    t.extend_from_slice(&s[p + 1..]);
    t
}

/// A reordering represented as a sequence of original 1-based event ids.
pub type EventSeq = Vec<EventId>;

fn positions_to_events(set: BTreeSet<Vec<usize>>) -> BTreeSet<EventSeq> {
    set.into_iter()
        .map(|s| s.into_iter().map(|p| p + 1).collect())
        .collect()
}

fn identity_positions(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// [`maz_equiv_class`] at event granularity under the read/write/lock
/// dependence of `x`.
pub fn equiv_reorderings(x: &Execution, bound: usize) -> Result<BTreeSet<EventSeq>, BoundExceeded> {
    let d = build_rwl_dependence(x.letters()).induced(&x.letter_seq());
    Ok(positions_to_events(maz_equiv_class(&d, &identity_positions(x.len()), bound)?))
}

/// [`ideal_closure`] at event granularity under the read/write/lock
/// dependence of `x`.
pub fn ideal_reorderings(x: &Execution, bound: usize) -> Result<BTreeSet<EventSeq>, BoundExceeded> {
    let d = build_rwl_dependence(x.letters()).induced(&x.letter_seq());
    Ok(positions_to_events(ideal_closure(&d, &identity_positions(x.len()), bound)?))
}

/// [`strong_closure`] at event granularity under a dual alphabet over the
/// letters of `x` (normally the read/write/lock dual).
pub fn strong_reorderings(
    x: &Execution,
    dual: &DualAlphabet,
    bound: usize,
) -> Result<BTreeSet<EventSeq>, BoundExceeded> {
    let d = dual.induced(&x.letter_seq());
    Ok(positions_to_events(strong_closure(&d, &identity_positions(x.len()), bound)?))
}

/// Closure under independent swaps plus the relaxed drop rule: an event may
/// be dropped when no later event in the current string is by the same
/// thread or reads from it (reads-from taken from the original execution).
pub fn rf_closure(x: &Execution, bound: usize) -> Result<BTreeSet<EventSeq>, BoundExceeded> {
    check_bound(x.len(), bound)?;
    let d = build_rwl_dependence(x.letters());
    let seed: EventSeq = (1..=x.len()).collect();
    let mut seen: BTreeSet<EventSeq> = BTreeSet::new();
    let mut queue: VecDeque<EventSeq> = VecDeque::new();
    seen.insert(seed.clone());
    queue.push_back(seed);
    while let Some(s) = queue.pop_front() {
        let mut push = |t: EventSeq, seen: &mut BTreeSet<EventSeq>, queue: &mut VecDeque<EventSeq>| {
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        };
        for i in 0..s.len().saturating_sub(1) {
            if !d.dependent(x.letter_id(s[i]), x.letter_id(s[i + 1])) {
                let mut t = s.clone();
                t.swap(i, i + 1);
                push(t, &mut seen, &mut queue);
            }
        }
        for p in 0..s.len() {
            let e = s[p];
            let droppable = (p + 1..s.len()).all(|q| {
                let f = s[q];
                x.thread_of(f) != x.thread_of(e) && x.rf_source(f) != Some(e)
            });
            if droppable {
                push(without(&s, p), &mut seen, &mut queue);
            }
        }
    }
    Ok(seen)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Flavor {
    /// Well-formed, thread-order downward-closed, per-thread order kept,
    /// every retained read reads from the same write as in the original.
    Correct,
    /// Additionally keeps the original relative order of retained
    /// same-lock acquires.
    SyncPreserving,
    /// Additionally keeps the original relative order of retained
    /// conflicting accesses.
    ConflictPreserving,
}

/// All correct reorderings of `x`: every well-formed interleaving of
/// per-thread prefixes in which each retained read has the same
/// reads-from source as in `x` (no source means no earlier write on the
/// location is retained either).
pub fn correct_reorderings(x: &Execution, bound: usize) -> Result<BTreeSet<EventSeq>, BoundExceeded> {
    reorderings(x, Flavor::Correct, bound)
}

/// Correct reorderings that keep the original relative order of retained
/// same-lock acquires.
pub fn syncp_reorderings(x: &Execution, bound: usize) -> Result<BTreeSet<EventSeq>, BoundExceeded> {
    reorderings(x, Flavor::SyncPreserving, bound)
}

/// Correct reorderings that keep the original relative order of retained
/// same-lock acquires and of retained conflicting accesses.
pub fn confp_reorderings(x: &Execution, bound: usize) -> Result<BTreeSet<EventSeq>, BoundExceeded> {
    reorderings(x, Flavor::ConflictPreserving, bound)
}

fn reorderings(
    x: &Execution,
    flavor: Flavor,
    bound: usize,
) -> Result<BTreeSet<EventSeq>, BoundExceeded> {
    check_bound(x.len(), bound)?;
    let mut out = BTreeSet::new();
    let mut state = ReorderState {
        x,
        flavor,
        next: alloc::vec![0; x.thread_count()],
        seq: Vec::new(),
        locks: LockDiscipline::new(x.lock_count()),
        last_write: alloc::vec![0; x.location_count()],
    };
    state.explore(&mut out);
    Ok(out)
}

struct ReorderState<'a> {
    x: &'a Execution,
    flavor: Flavor,
    /// Per thread, how many of its events are already placed.
    next: Vec<usize>,
    seq: EventSeq,
    locks: LockDiscipline,
    /// Latest placed write per location, 0 = none.
    last_write: Vec<EventId>,
}

impl ReorderState<'_> {
    fn explore(&mut self, out: &mut BTreeSet<EventSeq>) {
        out.insert(self.seq.clone());
        for t in 0..self.x.thread_count() {
            let placed = self.next[t];
            if placed >= self.x.thread_events(t).len() {
                continue;
            }
            let e = self.x.thread_events(t)[placed];
            if !self.admissible(e) {
                continue;
            }
            let saved_locks = self.locks.clone();
            let ev = self.x.letter(e);
            if self.locks.step(ev).is_err() {
                continue;
            }
            let saved_write = ev.action.location().map(|l| self.last_write[l]);
            if let Action::Write(l) = ev.action {
                self.last_write[l] = e;
            }
            self.next[t] += 1;
            self.seq.push(e);

            self.explore(out);

            self.seq.pop();
            self.next[t] -= 1;
            if let (Action::Write(l), Some(w)) = (ev.action, saved_write) {
                self.last_write[l] = w;
            }
            self.locks = saved_locks;
        }
    }

    /// Flavor-specific admissibility of placing `e` next.
    fn admissible(&self, e: EventId) -> bool {
        let ev = self.x.letter(e);
        if let Action::Read(l) = ev.action {
            let want = self.x.rf_source(e).unwrap_or(0);
            if self.last_write[l] != want {
                return false;
            }
        }
        if self.flavor == Flavor::Correct {
            return true;
        }
        if ev.action.kind() == crate::label::OpKind::Acquire {
            // Same-lock acquires must be placed in original order.
            let out_of_order = self
                .seq
                .iter()
                .any(|&f| self.x.letter(f).same_lock(ev) && self.x.action_of(f).kind() == crate::label::OpKind::Acquire && f > e);
            if out_of_order {
                return false;
            }
        }
        if self.flavor == Flavor::ConflictPreserving {
            let out_of_order = self.seq.iter().any(|&f| self.x.letter(f).conflicts(ev) && f > e);
            if out_of_order {
                return false;
            }
        }
        true
    }
}

/// Keeps only the well-formed members of a set of event sequences.
pub fn filter_well_formed(x: &Execution, set: &BTreeSet<EventSeq>) -> BTreeSet<EventSeq> {
    set.iter()
        .filter(|s| {
            let mut locks = LockDiscipline::new(x.lock_count());
            s.iter().all(|&e| locks.step(x.letter(e)).is_ok())
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::parse_trace;

    const LOCKED_WRITES_RACE: &str = "t1|w|x\nt1|acq|l\nt1|rel|l\nt2|w|x\nt2|acq|l\nt2|rel|l";
    const LOCK_SEPARATED_WRITES: &str = "t1|w|x\nt1|acq|l\nt1|rel|l\nt2|acq|l\nt2|rel|l\nt2|w|x";
    const OPPOSED_LOCK_ORDERS: &str =
        "t1|acq|l1\nt1|acq|l2\nt1|rel|l2\nt1|rel|l1\nt2|acq|l2\nt2|acq|l1\nt2|rel|l1\nt2|rel|l2";
    const CROSS_THREAD_READS: &str = "t1|w|y\nt1|w|x\nt1|r|x\nt3|r|x\nt2|w|x\nt2|r|x\nt2|r|y";

    /// Letters a=0, b=1, c=2: strong pairs (b,c), weak pair (a,b), plus the
    /// reflexive diagonal in strong.
    fn abc() -> DualAlphabet {
        DualAlphabet::from_pairs(3, &[(1, 2)], &[(0, 1)])
    }

    const ABACBA: [LetterId; 6] = [0, 1, 0, 2, 1, 0];

    #[test]
    fn equiv_class_of_the_worked_string_has_two_members() {
        let d = abc().union_alphabet();
        let class = maz_equiv_class(&d, &ABACBA, 10).unwrap();
        let expect: BTreeSet<Vec<LetterId>> =
            [ABACBA.to_vec(), alloc::vec![0, 1, 2, 0, 1, 0]].into_iter().collect();
        assert_eq!(class, expect, "abacba and abcaba only");
    }

    #[test]
    fn equiv_class_of_empty_is_empty_string_only() {
        let d = abc().union_alphabet();
        let class = maz_equiv_class(&d, &[], 10).unwrap();
        assert_eq!(class.len(), 1);
        assert!(class.contains(&alloc::vec![]));
    }

    #[test]
    fn equiv_reorderings_contain_the_adjacent_write_interleaving() {
        let x = parse_trace(LOCKED_WRITES_RACE).unwrap();
        let class = equiv_reorderings(&x, 10).unwrap();
        assert!(class.contains(&alloc::vec![1, 4, 2, 3, 5, 6]));
    }

    #[test]
    fn ideal_closure_of_the_worked_string_is_the_eleven_prefixes() {
        let d = abc().union_alphabet();
        let set = ideal_closure(&d, &ABACBA, 10).unwrap();
        let expect: BTreeSet<Vec<LetterId>> = [
            alloc::vec![],
            alloc::vec![0],
            alloc::vec![0, 1],
            alloc::vec![0, 1, 0],
            alloc::vec![0, 1, 0, 2],
            alloc::vec![0, 1, 0, 2, 1],
            alloc::vec![0, 1, 0, 2, 1, 0],
            alloc::vec![0, 1, 2],
            alloc::vec![0, 1, 2, 0],
            alloc::vec![0, 1, 2, 0, 1],
            alloc::vec![0, 1, 2, 0, 1, 0],
        ]
        .into_iter()
        .collect();
        assert_eq!(set, expect);
    }

    #[test]
    fn ideal_closure_of_single_letter() {
        let d = abc().union_alphabet();
        let set = ideal_closure(&d, &[0], 10).unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.contains(&alloc::vec![]) && set.contains(&alloc::vec![0]));
    }

    #[test]
    fn strong_closure_admits_mid_string_drops_the_ideal_closure_forbids() {
        let d = abc();
        let strong = strong_closure(&d, &ABACBA, 10).unwrap();
        let ideal = ideal_closure(&d.union_alphabet(), &ABACBA, 10).unwrap();
        let abcb = alloc::vec![0, 1, 2, 1];
        let bcb = alloc::vec![1, 2, 1];
        assert!(strong.contains(&abcb));
        assert!(strong.contains(&bcb));
        assert!(!ideal.contains(&abcb));
        assert!(!ideal.contains(&bcb));
        assert!(strong.is_superset(&ideal));
    }

    #[test]
    fn strong_closure_with_identity_strong_and_no_weak_drops_and_swaps_freely() {
        let d = DualAlphabet::from_pairs(2, &[], &[]);
        let set = strong_closure(&d, &[0, 1], 10).unwrap();
        let expect: BTreeSet<Vec<LetterId>> = [
            alloc::vec![],
            alloc::vec![0],
            alloc::vec![1],
            alloc::vec![0, 1],
            alloc::vec![1, 0],
        ]
        .into_iter()
        .collect();
        assert_eq!(set, expect);
    }

    #[test]
    fn oracle_refuses_inputs_beyond_the_bound() {
        let d = abc().union_alphabet();
        let long = alloc::vec![0; 11];
        assert_eq!(
            maz_equiv_class(&d, &long, 10).unwrap_err(),
            BoundExceeded { len: 11, bound: 10 }
        );
        let x = parse_trace(&"t1|w|x\n".repeat(12)).unwrap();
        assert!(rf_closure(&x, 10).is_err());
        assert!(correct_reorderings(&x, 10).is_err());
    }

    #[test]
    fn rf_closure_contains_both_read_preserving_reorderings() {
        let x = parse_trace(CROSS_THREAD_READS).unwrap();
        let set = rf_closure(&x, 10).unwrap();
        assert!(set.contains(&alloc::vec![1, 5, 6, 7]), "drop t1's tail and t3");
        assert!(set.contains(&alloc::vec![5, 6, 1, 7]), "then commute the y-write right");
    }

    #[test]
    fn rf_closure_rejects_keeping_a_reader_of_a_dropped_write() {
        let x = parse_trace(CROSS_THREAD_READS).unwrap();
        let set = rf_closure(&x, 10).unwrap();
        assert!(!set.contains(&alloc::vec![1, 4, 5, 6, 7]));
    }

    #[test]
    fn rf_closure_extends_the_strong_closure() {
        for text in [LOCKED_WRITES_RACE, LOCK_SEPARATED_WRITES, CROSS_THREAD_READS] {
            let x = parse_trace(text).unwrap();
            let dual = crate::alphabet::build_rwl_dual(x.letters());
            let strong = strong_reorderings(&x, &dual, 10).unwrap();
            let rf = rf_closure(&x, 10).unwrap();
            assert!(rf.is_superset(&strong), "{text}");
        }
    }

    #[test]
    fn correct_reorderings_contain_the_figure_witnesses_and_identity() {
        let x = parse_trace(LOCK_SEPARATED_WRITES).unwrap();
        let set = correct_reorderings(&x, 10).unwrap();
        assert!(set.contains(&alloc::vec![4, 5, 1, 6]));
        assert!(set.contains(&alloc::vec![1, 2, 3, 4, 5, 6]), "identity reordering");

        let x = parse_trace(OPPOSED_LOCK_ORDERS).unwrap();
        let set = correct_reorderings(&x, 10).unwrap();
        assert!(set.contains(&alloc::vec![1, 5]));
    }

    #[test]
    fn syncp_contains_the_deadlock_witness_and_respects_acquire_order() {
        let x = parse_trace(OPPOSED_LOCK_ORDERS).unwrap();
        let set = syncp_reorderings(&x, 10).unwrap();
        assert!(set.contains(&alloc::vec![1, 5]));
        // Retained same-lock acquires may never reverse: acquire 5 (l2)
        // cannot precede acquire 2 (l2).
        assert!(!set.iter().any(|s| {
            let p2 = s.iter().position(|&e| e == 2);
            let p5 = s.iter().position(|&e| e == 5);
            matches!((p2, p5), (Some(a), Some(b)) if b < a)
        }));
    }

    #[test]
    fn confp_is_between_projections_and_syncp() {
        for text in [LOCKED_WRITES_RACE, LOCK_SEPARATED_WRITES, OPPOSED_LOCK_ORDERS] {
            let x = parse_trace(text).unwrap();
            let syncp = syncp_reorderings(&x, 10).unwrap();
            let confp = confp_reorderings(&x, 10).unwrap();
            assert!(syncp.is_superset(&confp), "{text}");
            assert!(confp.contains(&alloc::vec![]), "empty reordering");
        }
    }

    #[test]
    fn confp_of_the_lock_separated_writes_keeps_both_witness_forms() {
        let x = parse_trace(LOCK_SEPARATED_WRITES).unwrap();
        let set = confp_reorderings(&x, 10).unwrap();
        assert!(set.contains(&alloc::vec![1, 4, 5, 6]), "trace-order projection");
        assert!(set.contains(&alloc::vec![4, 5, 1, 6]), "commuted form");
    }

    #[test]
    fn rf_closure_of_well_formed_members_equals_confp() {
        for text in [LOCKED_WRITES_RACE, LOCK_SEPARATED_WRITES, OPPOSED_LOCK_ORDERS, CROSS_THREAD_READS] {
            let x = parse_trace(text).unwrap();
            let rf_wf = filter_well_formed(&x, &rf_closure(&x, 10).unwrap());
            let confp = confp_reorderings(&x, 10).unwrap();
            assert_eq!(rf_wf, confp, "{text}");
        }
    }

    #[test]
    fn every_closure_member_is_a_permutation_of_a_subset() {
        let x = parse_trace(LOCK_SEPARATED_WRITES).unwrap();
        for set in [
            equiv_reorderings(&x, 10).unwrap(),
            ideal_reorderings(&x, 10).unwrap(),
            rf_closure(&x, 10).unwrap(),
            correct_reorderings(&x, 10).unwrap(),
        ] {
            for s in set {
                let mut sorted = s.clone();
                sorted.sort_unstable();
                sorted.dedup();
                assert_eq!(sorted.len(), s.len(), "no event repeats");
                assert!(s.iter().all(|&e| e >= 1 && e <= x.len()));
            }
        }
    }
}
