//! Streaming base monitors: deterministic acceptors over letter sequences.
//!
//! A [`Monitor`] consumes one letter id per step and exposes an accepting
//! predicate over its state. Three concrete monitors are provided:
//!
//! - [`PatternMonitor`]: accepts when some equivalent reordering of the
//!   input contains a fixed letter sequence as a subsequence.
//! - [`AdjacencyMonitor`]: accepts when some equivalent reordering makes a
//!   fixed letter pair adjacent (the shape of a data race).
//! - [`WfMonitor`]: accepts while the input obeys the lock discipline;
//!   strictly one-pass.
//!
//! Pattern and adjacency monitors reason about all reorderings of what they
//! have seen through an [`OrderSummary`] of the dependence partial order,
//! so they answer the reordering-level question directly on the recorded
//! order. [`Conjoin`] intersects two monitors.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::alphabet::ConcurrentAlphabet;
use crate::label::{Letter, LetterId};

/// A deterministic acceptor over letter sequences.
pub trait Monitor {
    type State: Clone + PartialEq;

    fn init(&self) -> Self::State;
    fn step(&self, state: Self::State, letter: LetterId) -> Self::State;
    fn accepting(&self, state: &Self::State) -> bool;

    /// Whether the monitor is a single forward pass that never buffers the
    /// input (its state size is independent of the event count).
    fn one_pass(&self) -> bool;
}

/// Runs a monitor over a letter sequence from its initial state.
pub fn run<M: Monitor>(m: &M, letters: impl IntoIterator<Item = LetterId>) -> M::State {
    letters.into_iter().fold(m.init(), |st, a| m.step(st, a))
}

/// Whether the final state after the sequence is accepting.
pub fn accepts<M: Monitor>(m: &M, letters: impl IntoIterator<Item = LetterId>) -> bool {
    let st = run(m, letters);
    m.accepting(&st)
}

/// Per-event summary of the dependence partial order.
///
/// For the event at (1-based) position `i` with letter `a`, the recorded
/// vector `v` maps every letter `b` to the largest position `p` such that
/// the event at `p` carries `b` and is below event `i` in the partial
/// order (0 if none). An event `f` is below `e` exactly when
/// `v_e[letter(f)] >= position(f)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OrderSummary {
    /// Vector of the latest event of each letter, empty until seen.
    last: Vec<Vec<usize>>,
    count: usize,
}

impl OrderSummary {
    pub fn new(letter_count: usize) -> OrderSummary {
        OrderSummary { last: alloc::vec![Vec::new(); letter_count], count: 0 }
    }

    /// Number of events processed.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Processes the next event and returns its order vector.
    ///
    /// The vector is the pointwise maximum of the vectors of the latest
    /// event of every letter dependent with `a`, with the event's own slot
    /// set to its position. Same-letter events are totally ordered
    /// (dependence is reflexive), so the latest per letter dominates all
    /// earlier ones.
    pub fn push(&mut self, d: &ConcurrentAlphabet, a: LetterId) -> Vec<usize> {
        let k = self.last.len();
        let mut v = alloc::vec![0; k];
        for c in 0..k {
            if d.dependent(c, a) && !self.last[c].is_empty() {
                for (slot, &x) in v.iter_mut().zip(&self.last[c]) {
                    if x > *slot {
                        *slot = x;
                    }
                }
            }
        }
        self.count += 1;
        v[a] = self.count;
        self.last[a] = v.clone();
        v
    }

    /// Whether the event at `pos` with letter `letter` is below the event
    /// whose order vector is `v`.
    pub fn below(v: &[usize], pos: usize, letter: LetterId) -> bool {
        v[letter] >= pos
    }
}

/// Accepts when some reordering of the input contains the pattern letters
/// in order as a subsequence.
///
/// Equivalently: there are events `f_1..f_d` carrying the pattern letters
/// such that no `f_j` with `j > i` is below `f_i`. The monitor keeps a
/// deduplicated set of partial matches (chosen event position per filled
/// pattern slot); a new event may fill slot `k` when no event already
/// chosen for a later slot is below it.
pub struct PatternMonitor {
    dep: ConcurrentAlphabet,
    pattern: Vec<LetterId>,
}

impl PatternMonitor {
    /// Panics on an empty pattern or a pattern letter outside the alphabet.
    pub fn new(dep: ConcurrentAlphabet, pattern: Vec<LetterId>) -> PatternMonitor {
        assert!(!pattern.is_empty(), "pattern must have at least one letter");
        assert!(pattern.iter().all(|&p| p < dep.len()), "pattern letter outside alphabet");
        PatternMonitor { dep, pattern }
    }

    pub fn pattern(&self) -> &[LetterId] {
        &self.pattern
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PatternState {
    summary: OrderSummary,
    /// Partial matches: position chosen for each pattern slot, 0 = unfilled.
    /// The all-zero assignment is implicit.
    partial: BTreeSet<Vec<usize>>,
    accepted: bool,
}

impl Monitor for PatternMonitor {
    type State = PatternState;

    fn init(&self) -> PatternState {
        PatternState {
            summary: OrderSummary::new(self.dep.len()),
            partial: BTreeSet::new(),
            accepted: false,
        }
    }

    fn step(&self, mut st: PatternState, a: LetterId) -> PatternState {
        if st.accepted {
            return st;
        }
        let v = st.summary.push(&self.dep, a);
        let pos = st.summary.len();
        let d = self.pattern.len();
        let mut grown: Vec<Vec<usize>> = Vec::new();
        let empty = alloc::vec![0; d];
        for s in st.partial.iter().chain(core::iter::once(&empty)) {
            for k in 0..d {
                if self.pattern[k] != a || s[k] != 0 {
                    continue;
                }
                // Events already chosen for later slots must not be below
                // the new event, or the pair would be forced out of order.
                let ok = (k + 1..d).all(|q| {
                    s[q] == 0 || !OrderSummary::below(&v, s[q], self.pattern[q])
                });
                if ok {
                    let mut t = s.clone();
                    t[k] = pos;
                    if t.iter().all(|&f| f != 0) {
                        st.accepted = true;
                    }
                    grown.push(t);
                }
            }
        }
        st.partial.extend(grown);
        st
    }

    fn accepting(&self, st: &PatternState) -> bool {
        st.accepted
    }

    fn one_pass(&self) -> bool {
        true
    }
}

/// Accepts when some reordering of the input makes the letter `a`
/// immediately precede the letter `b`.
///
/// A pair of events (e1 carrying `a`, e2 carrying `b`) is adjacent in some
/// reordering exactly when e2 is not below e1 and no third event lies
/// strictly between them in the partial order. The monitor buffers the
/// order vectors of all events (it is not one-pass) and decides each pair
/// when its later member arrives.
pub struct AdjacencyMonitor {
    dep: ConcurrentAlphabet,
    a: LetterId,
    b: LetterId,
}

impl AdjacencyMonitor {
    /// Panics if the letters are equal or outside the alphabet.
    pub fn new(dep: ConcurrentAlphabet, a: LetterId, b: LetterId) -> AdjacencyMonitor {
        assert!(a != b, "adjacency letters must differ");
        assert!(a < dep.len() && b < dep.len(), "letter outside alphabet");
        AdjacencyMonitor { dep, a, b }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AdjacencyState {
    summary: OrderSummary,
    /// Letter and order vector of every event, in arrival order.
    events: Vec<(LetterId, Vec<usize>)>,
    accepted: bool,
}

impl Monitor for AdjacencyMonitor {
    type State = AdjacencyState;

    fn init(&self) -> AdjacencyState {
        AdjacencyState {
            summary: OrderSummary::new(self.dep.len()),
            events: Vec::new(),
            accepted: false,
        }
    }

    fn step(&self, mut st: AdjacencyState, letter: LetterId) -> AdjacencyState {
        if st.accepted {
            return st;
        }
        let v = st.summary.push(&self.dep, letter);
        let pos = st.summary.len();
        if letter == self.b {
            // The new event is the pair's right member; it can never be
            // below an earlier left member, so only the blocker scan
            // remains. Later events can never slide between the pair.
            for e1 in 1..pos {
                if st.events[e1 - 1].0 != self.a {
                    continue;
                }
                let blocked = (1..pos).any(|z| {
                    z != e1 && {
                        let (zl, zv) = &st.events[z - 1];
                        OrderSummary::below(zv, e1, self.a) && OrderSummary::below(&v, z, *zl)
                    }
                });
                if !blocked {
                    st.accepted = true;
                    break;
                }
            }
        }
        if !st.accepted && letter == self.a {
            // The new event is the pair's left member. Anything strictly
            // between it and an earlier right member would have to follow
            // the new event and precede an old one, which is impossible,
            // so adjacency only needs the right member not below it.
            let newest_b_below = v[self.b];
            let any_b_not_below =
                (newest_b_below + 1..pos).any(|e2| st.events[e2 - 1].0 == self.b);
            if any_b_not_below {
                st.accepted = true;
            }
        }
        st.events.push((letter, v));
        st
    }

    fn accepting(&self, st: &AdjacencyState) -> bool {
        st.accepted
    }

    fn one_pass(&self) -> bool {
        false
    }
}

/// One-pass lock-discipline acceptor: accepting while every processed
/// prefix respects single ownership and matched releases.
pub struct WfMonitor {
    letters: Vec<Letter>,
    lock_count: usize,
}

impl WfMonitor {
    /// `letters` decodes letter ids to labels; `lock_count` sizes the
    /// ownership table.
    pub fn new(letters: Vec<Letter>, lock_count: usize) -> WfMonitor {
        WfMonitor { letters, lock_count }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WfState {
    locks: crate::exec::LockDiscipline,
    ok: bool,
}

impl Monitor for WfMonitor {
    type State = WfState;

    fn init(&self) -> WfState {
        WfState { locks: crate::exec::LockDiscipline::new(self.lock_count), ok: true }
    }

    fn step(&self, mut st: WfState, letter: LetterId) -> WfState {
        if st.ok && st.locks.step(self.letters[letter]).is_err() {
            st.ok = false;
        }
        st
    }

    fn accepting(&self, st: &WfState) -> bool {
        st.ok
    }

    fn one_pass(&self) -> bool {
        true
    }
}

/// Product acceptor: accepts exactly when both components accept.
pub struct Conjoin<M1, M2> {
    pub left: M1,
    pub right: M2,
}

/// Intersects two monitors.
pub fn conjoin<M1: Monitor, M2: Monitor>(left: M1, right: M2) -> Conjoin<M1, M2> {
    Conjoin { left, right }
}

impl<M1: Monitor, M2: Monitor> Monitor for Conjoin<M1, M2> {
    type State = (M1::State, M2::State);

    fn init(&self) -> Self::State {
        (self.left.init(), self.right.init())
    }

    fn step(&self, state: Self::State, letter: LetterId) -> Self::State {
        (self.left.step(state.0, letter), self.right.step(state.1, letter))
    }

    fn accepting(&self, state: &Self::State) -> bool {
        self.left.accepting(&state.0) && self.right.accepting(&state.1)
    }

    fn one_pass(&self) -> bool {
        self.left.one_pass() && self.right.one_pass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::{build_rwl_dependence, build_rwl_dual};
    use crate::exec::parse_trace;
    use crate::label::OpKind;
    use crate::oracle;

    const LOCKED_WRITES_RACE: &str = "t1|w|x\nt1|acq|l\nt1|rel|l\nt2|w|x\nt2|acq|l\nt2|rel|l";
    const LOCK_SEPARATED_WRITES: &str = "t1|w|x\nt1|acq|l\nt1|rel|l\nt2|acq|l\nt2|rel|l\nt2|w|x";

    /// Always-accepting monitor with unit state, for conjunction tests.
    struct AcceptAll;
    impl Monitor for AcceptAll {
        type State = ();
        fn init(&self) {}
        fn step(&self, _: (), _: LetterId) {}
        fn accepting(&self, _: &()) -> bool {
            true
        }
        fn one_pass(&self) -> bool {
            true
        }
    }

    /// Never-accepting monitor with unit state.
    struct RejectAll;
    impl Monitor for RejectAll {
        type State = ();
        fn init(&self) {}
        fn step(&self, _: (), _: LetterId) {}
        fn accepting(&self, _: &()) -> bool {
            false
        }
        fn one_pass(&self) -> bool {
            true
        }
    }

    /// Two letters, either independent or dependent.
    fn two_letters(dependent: bool) -> ConcurrentAlphabet {
        let pairs: &[(LetterId, LetterId)] = if dependent { &[(0, 1)] } else { &[] };
        ConcurrentAlphabet::from_pairs(2, pairs)
    }

    #[test]
    fn pattern_crosses_independent_letters_but_not_dependent_ones() {
        // Input "ba": the pattern "ab" matches only if a and b commute.
        let m = PatternMonitor::new(two_letters(false), alloc::vec![0, 1]);
        assert!(accepts(&m, [1, 0]));
        let m = PatternMonitor::new(two_letters(true), alloc::vec![0, 1]);
        assert!(!accepts(&m, [1, 0]));
    }

    #[test]
    fn single_letter_pattern_is_containment() {
        let m = PatternMonitor::new(two_letters(true), alloc::vec![0]);
        assert!(accepts(&m, [1, 0]));
        assert!(!accepts(&m, [1, 1]));
    }

    #[test]
    fn adjacency_accepts_the_unlocked_write_pair() {
        let x = parse_trace(LOCKED_WRITES_RACE).unwrap();
        let dep = build_rwl_dependence(x.letters());
        let a = x.find_letter("t1", OpKind::Write, "x").unwrap();
        let b = x.find_letter("t2", OpKind::Write, "x").unwrap();
        let m = AdjacencyMonitor::new(dep, a, b);
        assert!(accepts(&m, x.letter_seq()));
    }

    #[test]
    fn adjacency_rejects_writes_chained_through_a_lock() {
        let x = parse_trace(LOCK_SEPARATED_WRITES).unwrap();
        let dep = build_rwl_dependence(x.letters());
        let a = x.find_letter("t1", OpKind::Write, "x").unwrap();
        let b = x.find_letter("t2", OpKind::Write, "x").unwrap();
        let m = AdjacencyMonitor::new(dep, a, b);
        assert!(!accepts(&m, x.letter_seq()));
    }

    #[test]
    fn adjacency_rejects_on_a_single_event() {
        let x = parse_trace("t1|w|x\nt2|w|x").unwrap();
        let dep = build_rwl_dependence(x.letters());
        let m = AdjacencyMonitor::new(dep, 0, 1);
        assert!(!accepts(&m, [0]));
    }

    #[test]
    fn wf_monitor_accepts_every_well_formed_prefix() {
        let x = parse_trace(LOCK_SEPARATED_WRITES).unwrap();
        let m = WfMonitor::new(x.letters().to_vec(), x.lock_count());
        let mut st = m.init();
        for a in x.letter_seq() {
            st = m.step(st, a);
            assert!(m.accepting(&st));
        }
    }

    #[test]
    fn wf_monitor_rejects_overlap_and_stays_rejecting() {
        let x = parse_trace("t1|acq|l\nt2|acq|l\nt1|rel|l").unwrap();
        let m = WfMonitor::new(x.letters().to_vec(), x.lock_count());
        let seq = x.letter_seq();
        let mut st = m.init();
        st = m.step(st, seq[0]);
        assert!(m.accepting(&st));
        st = m.step(st, seq[1]);
        assert!(!m.accepting(&st));
        st = m.step(st, seq[2]);
        assert!(!m.accepting(&st), "rejection is absorbing");
    }

    #[test]
    fn wf_monitor_rejects_a_second_acquire_inside_an_open_section() {
        // Well-formed up to the second event, then the reacquire overlaps.
        let x = parse_trace("t1|w|x\nt1|acq|l\nt2|acq|l\nt2|rel|l\nt2|w|x").unwrap();
        let m = WfMonitor::new(x.letters().to_vec(), x.lock_count());
        let seq = x.letter_seq();
        let states: Vec<bool> = seq
            .iter()
            .scan(m.init(), |st, &a| {
                *st = m.step(st.clone(), a);
                Some(m.accepting(st))
            })
            .collect();
        assert_eq!(states, alloc::vec![true, true, false, false, false]);
    }

    #[test]
    fn conjoin_is_intersection_with_identity_and_absorbing_elements() {
        let x = parse_trace(LOCK_SEPARATED_WRITES).unwrap();
        let dep = build_rwl_dependence(x.letters());
        let a = x.find_letter("t1", OpKind::Write, "x").unwrap();
        let b = x.find_letter("t2", OpKind::Write, "x").unwrap();

        // Both components accept on the commuted witness projection.
        let witness = [1usize, 4, 5, 6].map(|e| x.letter_id(e));
        let wf = WfMonitor::new(x.letters().to_vec(), x.lock_count());
        let adj = AdjacencyMonitor::new(dep.clone(), a, b);
        let both = conjoin(wf, adj);
        assert!(accepts(&both, witness));
        assert!(both.one_pass() == false);

        let adj = AdjacencyMonitor::new(dep.clone(), a, b);
        assert!(!accepts(&conjoin(adj, RejectAll), witness));
        let adj = AdjacencyMonitor::new(dep, a, b);
        assert_eq!(
            accepts(&conjoin(adj, AcceptAll), witness),
            true,
            "accept-all is the identity"
        );
    }

    #[test]
    fn order_summary_matches_transitive_closure_on_small_traces() {
        for text in [LOCKED_WRITES_RACE, LOCK_SEPARATED_WRITES, "t1|w|x\nt2|r|x\nt1|r|y\nt2|w|y"]
        {
            let x = parse_trace(text).unwrap();
            let dep = build_rwl_dependence(x.letters());
            let n = x.len();
            // Transitive closure of "earlier and dependent".
            let mut le = alloc::vec![alloc::vec![false; n + 1]; n + 1];
            for e in 1..=n {
                le[e][e] = true;
                for f in 1..e {
                    if dep.dependent(x.letter_id(f), x.letter_id(e)) {
                        for p in 1..=f {
                            if le[p][f] {
                                le[p][e] = true;
                            }
                        }
                    }
                }
            }
            let mut summary = OrderSummary::new(x.letters().len());
            for e in 1..=n {
                let v = summary.push(&dep, x.letter_id(e));
                for f in 1..=e {
                    assert_eq!(
                        OrderSummary::below(&v, f, x.letter_id(f)),
                        le[f][e],
                        "{text}: {f} below {e}"
                    );
                }
            }
        }
    }

    #[test]
    fn monitors_replay_deterministically_and_accept_monotonically() {
        let x = parse_trace(LOCKED_WRITES_RACE).unwrap();
        let dep = build_rwl_dependence(x.letters());
        let a = x.find_letter("t1", OpKind::Write, "x").unwrap();
        let b = x.find_letter("t2", OpKind::Write, "x").unwrap();
        let pat = PatternMonitor::new(dep.clone(), alloc::vec![a, b]);
        let adj = AdjacencyMonitor::new(dep, a, b);
        let seq = x.letter_seq();

        let states1: Vec<_> = seq
            .iter()
            .scan(pat.init(), |st, &l| {
                *st = pat.step(st.clone(), l);
                Some(st.clone())
            })
            .collect();
        let states2: Vec<_> = seq
            .iter()
            .scan(pat.init(), |st, &l| {
                *st = pat.step(st.clone(), l);
                Some(st.clone())
            })
            .collect();
        assert!(states1 == states2, "identical state sequences on replay");

        for m in [&adj] {
            let mut st = m.init();
            let mut was = false;
            for &l in &seq {
                st = m.step(st, l);
                let now = m.accepting(&st);
                assert!(!was || now, "acceptance is sticky");
                was = now;
            }
        }
    }

    #[test]
    fn pattern_and_adjacency_agree_with_direct_scans_of_the_equivalence_class() {
        // Dual route: scan every member of the brute-force class for a
        // literal subsequence / adjacent pair.
        let traces = [
            LOCKED_WRITES_RACE,
            LOCK_SEPARATED_WRITES,
            "t1|w|x\nt2|r|x\nt2|w|y\nt1|r|y",
            "t1|r|x\nt2|w|x\nt1|w|y\nt2|r|y\nt1|acq|l\nt1|rel|l",
            "t2|w|x\nt1|w|x\nt1|r|x\nt2|r|x",
        ];
        for text in traces {
            let x = parse_trace(text).unwrap();
            let dep = build_rwl_dependence(x.letters());
            let class = oracle::equiv_reorderings(&x, 10).unwrap();
            let k = x.letters().len();
            for a in 0..k {
                for b in 0..k {
                    if a == b {
                        continue;
                    }
                    let pat = PatternMonitor::new(dep.clone(), alloc::vec![a, b]);
                    let scan_sub = class.iter().any(|s| {
                        let mut want = [a, b].iter();
                        let mut next = want.next();
                        for &e in s {
                            if Some(&x.letter_id(e)) == next {
                                next = want.next();
                            }
                        }
                        next.is_none()
                    });
                    assert_eq!(accepts(&pat, x.letter_seq()), scan_sub, "{text} sub {a},{b}");

                    let adj = AdjacencyMonitor::new(dep.clone(), a, b);
                    let scan_adj = class.iter().any(|s| {
                        s.windows(2)
                            .any(|w| x.letter_id(w[0]) == a && x.letter_id(w[1]) == b)
                    });
                    assert_eq!(accepts(&adj, x.letter_seq()), scan_adj, "{text} adj {a},{b}");
                }
            }
        }
    }
}
