//! Recorded executions: event sequences with derived thread, lock, and
//! reads-from structure.
//!
//! An [`Execution`] is an immutable, indexed sequence of labeled events.
//! Construction interns thread/location/lock names to dense ids and derives
//! per-thread event lists, per-lock acquire/release matching, the reads-from
//! map (each read points at the latest earlier write on its location), and
//! the set of locks held before each event. Event positions are 1-based
//! throughout the public interface; 0 means "none".

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use smallvec::SmallVec;

use crate::label::{Action, EventId, Letter, LetterId, LockId, OpKind, ThreadId};

/// Inline capacity for held-lock sets; nesting deeper than two is rare.
type LockSet = SmallVec<[LockId; 2]>;

/// An immutable recorded execution with derived structure.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Execution {
    threads: Vec<String>,
    locations: Vec<String>,
    locks: Vec<String>,
    /// Distinct observed labels, in order of first occurrence.
    letters: Vec<Letter>,
    /// Letter of each event, 0-based storage.
    event_letter: Vec<LetterId>,
    /// Events of each thread in program order (1-based event ids).
    thread_events: Vec<Vec<EventId>>,
    /// Immediate same-thread predecessor of each event, 0 = none.
    thread_pred: Vec<EventId>,
    /// For reads: the latest earlier write on the same location, 0 = none.
    rf_source: Vec<EventId>,
    /// For writes: the reads that read from them, ascending.
    readers: Vec<Vec<EventId>>,
    /// Locks held by the event's thread immediately before it executes.
    held: Vec<LockSet>,
    /// Acquire events of each lock in trace order.
    lock_acquires: Vec<Vec<EventId>>,
    /// For acquires: the matching release, 0 = still open at end of trace.
    match_release: Vec<EventId>,
}

/// Error raised while assembling an execution from labels.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BuildError {
    /// One operand token is used both as a memory location and as a lock.
    OperandClash { operand: String },
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::OperandClash { operand } => {
                write!(f, "operand `{operand}` used as both a location and a lock")
            }
        }
    }
}

/// Incrementally interns named events into an [`Execution`].
#[derive(Default)]
pub struct ExecutionBuilder {
    threads: Vec<String>,
    thread_ids: BTreeMap<String, ThreadId>,
    locations: Vec<String>,
    location_ids: BTreeMap<String, usize>,
    locks: Vec<String>,
    lock_ids: BTreeMap<String, usize>,
    events: Vec<Letter>,
}

impl ExecutionBuilder {
    pub fn new() -> ExecutionBuilder {
        ExecutionBuilder::default()
    }

    /// Appends one event. Fails if `operand` is already interned in the
    /// other operand namespace.
    pub fn push(&mut self, thread: &str, op: OpKind, operand: &str) -> Result<(), BuildError> {
        let t = intern(&mut self.threads, &mut self.thread_ids, thread);
        let action = match op {
            OpKind::Read | OpKind::Write => {
                if self.lock_ids.contains_key(operand) {
                    return Err(BuildError::OperandClash { operand: operand.to_string() });
                }
                let x = intern(&mut self.locations, &mut self.location_ids, operand);
                if op == OpKind::Read { Action::Read(x) } else { Action::Write(x) }
            }
            OpKind::Acquire | OpKind::Release => {
                if self.location_ids.contains_key(operand) {
                    return Err(BuildError::OperandClash { operand: operand.to_string() });
                }
                let l = intern(&mut self.locks, &mut self.lock_ids, operand);
                if op == OpKind::Acquire { Action::Acquire(l) } else { Action::Release(l) }
            }
        };
        self.events.push(Letter::new(t, action));
        Ok(())
    }

    /// Derives all secondary structure and freezes the execution.
    pub fn finish(self) -> Execution {
        Execution::from_parts(self.threads, self.locations, self.locks, self.events)
    }
}

fn intern(names: &mut Vec<String>, ids: &mut BTreeMap<String, usize>, name: &str) -> usize {
    if let Some(&id) = ids.get(name) {
        return id;
    }
    let id = names.len();
    names.push(name.to_string());
    ids.insert(name.to_string(), id);
    id
}

impl Execution {
    fn from_parts(
        threads: Vec<String>,
        locations: Vec<String>,
        locks: Vec<String>,
        events: Vec<Letter>,
    ) -> Execution {
        let n = events.len();
        let mut letters: Vec<Letter> = Vec::new();
        let mut letter_ids: BTreeMap<Letter, LetterId> = BTreeMap::new();
        let mut event_letter = Vec::with_capacity(n);
        for &ev in &events {
            let id = *letter_ids.entry(ev).or_insert_with(|| {
                letters.push(ev);
                letters.len() - 1
            });
            event_letter.push(id);
        }

        let mut thread_events = vec![Vec::new(); threads.len()];
        let mut thread_pred = vec![0; n];
        let mut last_of_thread = vec![0; threads.len()];
        let mut rf_source = vec![0; n];
        let mut readers = vec![Vec::new(); n];
        let mut last_write = vec![0; locations.len()];
        let mut held = Vec::with_capacity(n);
        let mut held_by_thread: Vec<LockSet> = vec![LockSet::new(); threads.len()];
        let mut lock_acquires = vec![Vec::new(); locks.len()];
        let mut match_release = vec![0; n];
        let mut open_acquire: Vec<Vec<EventId>> = vec![Vec::new(); locks.len()];

        for (pos, &ev) in events.iter().enumerate() {
            let e = pos + 1;
            let t = ev.thread;
            thread_pred[pos] = last_of_thread[t];
            last_of_thread[t] = e;
            thread_events[t].push(e);
            held.push(held_by_thread[t].clone());
            match ev.action {
                Action::Read(x) => {
                    let w = last_write[x];
                    rf_source[pos] = w;
                    if w != 0 {
                        readers[w - 1].push(e);
                    }
                }
                Action::Write(x) => last_write[x] = e,
                Action::Acquire(l) => {
                    lock_acquires[l].push(e);
                    open_acquire[l].push(e);
                    held_by_thread[t].push(l);
                }
                Action::Release(l) => {
                    // Ill-formed traces may release without holding; the
                    // derived structures stay consistent and the
                    // well-formedness check reports the violation.
                    if let Some(a) = open_acquire[l].pop() {
                        match_release[a - 1] = e;
                    }
                    if let Some(i) = held_by_thread[t].iter().position(|&h| h == l) {
                        held_by_thread[t].remove(i);
                    }
                }
            }
        }

        Execution {
            threads,
            locations,
            locks,
            letters,
            event_letter,
            thread_events,
            thread_pred,
            rf_source,
            readers,
            held,
            lock_acquires,
            match_release,
        }
    }

    /// Number of events.
    pub fn len(&self) -> usize {
        self.event_letter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_letter.is_empty()
    }

    /// Number of distinct threads.
    pub fn thread_count(&self) -> usize {
        self.threads.len()
    }

    pub fn location_count(&self) -> usize {
        self.locations.len()
    }

    pub fn lock_count(&self) -> usize {
        self.locks.len()
    }

    pub fn thread_name(&self, t: ThreadId) -> &str {
        &self.threads[t]
    }

    pub fn location_name(&self, x: usize) -> &str {
        &self.locations[x]
    }

    pub fn lock_name(&self, l: LockId) -> &str {
        &self.locks[l]
    }

    /// Distinct observed labels in first-occurrence order; their positions
    /// are the execution's letter ids.
    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Letter id of event `e` (1-based).
    pub fn letter_id(&self, e: EventId) -> LetterId {
        self.event_letter[e - 1]
    }

    /// Label of event `e` (1-based).
    pub fn letter(&self, e: EventId) -> Letter {
        self.letters[self.event_letter[e - 1]]
    }

    /// Letter ids of all events in trace order.
    pub fn letter_seq(&self) -> Vec<LetterId> {
        self.event_letter.clone()
    }

    pub fn thread_of(&self, e: EventId) -> ThreadId {
        self.letter(e).thread
    }

    pub fn action_of(&self, e: EventId) -> Action {
        self.letter(e).action
    }

    /// Events of thread `t` in program order.
    pub fn thread_events(&self, t: ThreadId) -> &[EventId] {
        &self.thread_events[t]
    }

    /// Immediate same-thread predecessor of `e`, if any.
    pub fn thread_pred(&self, e: EventId) -> Option<EventId> {
        match self.thread_pred[e - 1] {
            0 => None,
            p => Some(p),
        }
    }

    /// All same-thread predecessors of `e` in program order.
    pub fn thread_preds(&self, e: EventId) -> &[EventId] {
        let t = self.thread_of(e);
        let evs = &self.thread_events[t];
        let pos = evs.iter().position(|&f| f == e).expect("event belongs to its thread");
        &evs[..pos]
    }

    /// The write a read `e` reads from, if any. None for non-reads and for
    /// reads with no earlier write on their location.
    pub fn rf_source(&self, e: EventId) -> Option<EventId> {
        match self.rf_source[e - 1] {
            0 => None,
            w => Some(w),
        }
    }

    /// Reads that read from write `e`, ascending.
    pub fn readers(&self, e: EventId) -> &[EventId] {
        &self.readers[e - 1]
    }

    /// The reads-from map as pairs (read, source write or None), covering
    /// every read event in order.
    pub fn reads_from(&self) -> Vec<(EventId, Option<EventId>)> {
        (1..=self.len())
            .filter(|&e| self.action_of(e).is_read())
            .map(|e| (e, self.rf_source(e)))
            .collect()
    }

    /// Locks held by `e`'s thread immediately before `e` executes.
    /// Panics if `e` is out of range.
    pub fn held_locks_at(&self, e: EventId) -> &[LockId] {
        assert!(e >= 1 && e <= self.len(), "event index {e} out of range");
        &self.held[e - 1]
    }

    /// Acquire events of lock `l` in trace order.
    pub fn lock_acquires(&self, l: LockId) -> &[EventId] {
        &self.lock_acquires[l]
    }

    /// The release matching an acquire, or None for a section still open at
    /// the end of the trace.
    pub fn matching_release(&self, acquire: EventId) -> Option<EventId> {
        match self.match_release[acquire - 1] {
            0 => None,
            r => Some(r),
        }
    }

    /// Renders event `e` in the std-text form `thread|op|operand`.
    pub fn render_event(&self, e: EventId) -> String {
        let ev = self.letter(e);
        let (op, operand) = match ev.action {
            Action::Read(x) => (OpKind::Read, self.location_name(x)),
            Action::Write(x) => (OpKind::Write, self.location_name(x)),
            Action::Acquire(l) => (OpKind::Acquire, self.lock_name(l)),
            Action::Release(l) => (OpKind::Release, self.lock_name(l)),
        };
        format!("{}|{}|{}", self.thread_name(ev.thread), op.as_str(), operand)
    }

    /// Serializes the execution in the std-text format, one event per line.
    /// Inverse of [`parse_trace`].
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in 1..=self.len() {
            out.push_str(&self.render_event(e));
            out.push('\n');
        }
        out
    }

    /// Restricts the execution to the kept events of `m`, reindexed 1..k,
    /// preserving trace order; all derived structure is recomputed.
    /// Panics if the mask length differs from the event count.
    pub fn project(&self, m: &Mask) -> Execution {
        assert_eq!(m.len(), self.len(), "mask length must match event count");
        let mut b = ExecutionBuilder::new();
        for e in 1..=self.len() {
            if m.is_kept(e) {
                let ev = self.letter(e);
                let (op, operand) = match ev.action {
                    Action::Read(x) => (OpKind::Read, self.location_name(x)),
                    Action::Write(x) => (OpKind::Write, self.location_name(x)),
                    Action::Acquire(l) => (OpKind::Acquire, self.lock_name(l)),
                    Action::Release(l) => (OpKind::Release, self.lock_name(l)),
                };
                b.push(self.thread_name(ev.thread), op, operand)
                    .expect("projection reuses namespaces of a built execution");
            }
        }
        b.finish()
    }

    /// Looks up the letter id of a named label, if observed.
    pub fn find_letter(&self, thread: &str, op: OpKind, operand: &str) -> Option<LetterId> {
        let t = self.threads.iter().position(|n| n == thread)?;
        let action = match op {
            OpKind::Read => Action::Read(self.locations.iter().position(|n| n == operand)?),
            OpKind::Write => Action::Write(self.locations.iter().position(|n| n == operand)?),
            OpKind::Acquire => Action::Acquire(self.locks.iter().position(|n| n == operand)?),
            OpKind::Release => Action::Release(self.locks.iter().position(|n| n == operand)?),
        };
        let want = Letter::new(t, action);
        self.letters.iter().position(|&l| l == want)
    }
}

/// A kept/dropped marking of an execution's events: the concrete
/// representation of a candidate prefix.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Mask {
    kept: Vec<bool>,
}

impl Mask {
    /// All events dropped.
    pub fn none(len: usize) -> Mask {
        Mask { kept: vec![false; len] }
    }

    /// All events kept.
    pub fn all(len: usize) -> Mask {
        Mask { kept: vec![true; len] }
    }

    /// Mask keeping exactly the given 1-based indices.
    /// Panics if an index is out of range.
    pub fn from_indices(len: usize, kept: &[EventId]) -> Mask {
        let mut m = Mask::none(len);
        for &e in kept {
            assert!(e >= 1 && e <= len, "event index {e} out of range for mask of length {len}");
            m.kept[e - 1] = true;
        }
        m
    }

    /// Host execution length.
    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    /// Whether event `e` (1-based) is kept.
    pub fn is_kept(&self, e: EventId) -> bool {
        self.kept[e - 1]
    }

    pub fn set(&mut self, e: EventId, kept: bool) {
        self.kept[e - 1] = kept;
    }

    /// Kept indices, ascending, 1-based.
    pub fn indices(&self) -> Vec<EventId> {
        (1..=self.len()).filter(|&e| self.is_kept(e)).collect()
    }

    /// Number of kept events.
    pub fn count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }
}

/// Why an execution fails the lock discipline.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WfReason {
    /// Acquire of a lock already held (by any thread, including the
    /// acquirer: re-entrant locking is rejected).
    AlreadyHeld(LockId),
    /// Release by a thread that does not currently own the lock.
    ReleaseWithoutAcquire(LockId),
}

/// A well-formedness violation at a specific event.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct WfViolation {
    pub index: EventId,
    pub reason: WfReason,
}

impl WfViolation {
    /// Human-readable reason, e.g. "lock l already held".
    pub fn message(&self, exec: &Execution) -> String {
        match self.reason {
            WfReason::AlreadyHeld(l) => format!("lock {} already held", exec.lock_name(l)),
            WfReason::ReleaseWithoutAcquire(_) => "release without acquire".to_string(),
        }
    }
}

/// Streaming lock-ownership state shared by the well-formedness check and
/// the one-pass well-formedness monitor.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LockDiscipline {
    owner: Vec<Option<ThreadId>>,
}

impl LockDiscipline {
    pub fn new(lock_count: usize) -> LockDiscipline {
        LockDiscipline { owner: vec![None; lock_count] }
    }

    /// Advances by one event; reports the violated rule, if any.
    pub fn step(&mut self, ev: Letter) -> Result<(), WfReason> {
        match ev.action {
            Action::Acquire(l) => {
                if self.owner[l].is_some() {
                    return Err(WfReason::AlreadyHeld(l));
                }
                self.owner[l] = Some(ev.thread);
            }
            Action::Release(l) => {
                if self.owner[l] != Some(ev.thread) {
                    return Err(WfReason::ReleaseWithoutAcquire(l));
                }
                self.owner[l] = None;
            }
            Action::Read(_) | Action::Write(_) => {}
        }
        Ok(())
    }
}

/// Single-pass lock-discipline check: every release must be issued by the
/// current owner, no lock is ever held twice, and critical sections may
/// remain open at the end of the trace (at most one per lock, enforced by
/// ownership).
pub fn check_well_formed(exec: &Execution) -> Result<(), WfViolation> {
    let mut state = LockDiscipline::new(exec.lock_count());
    for e in 1..=exec.len() {
        if let Err(reason) = state.step(exec.letter(e)) {
            return Err(WfViolation { index: e, reason });
        }
    }
    Ok(())
}

/// Lock-discipline check over a bare letter sequence.
pub fn letters_well_formed(lock_count: usize, letters: impl IntoIterator<Item = Letter>) -> bool {
    let mut state = LockDiscipline::new(lock_count);
    letters.into_iter().all(|ev| state.step(ev).is_ok())
}

/// Whether every target event (absent from the kept prefix) has all of its
/// same-thread predecessors inside the prefix.
///
/// Fails if a target is kept by the mask.
pub fn enabled_in(exec: &Execution, m: &Mask, targets: &[EventId]) -> Result<bool, TargetKept> {
    assert_eq!(m.len(), exec.len(), "mask length must match event count");
    for &e in targets {
        if m.is_kept(e) {
            return Err(TargetKept { event: e });
        }
    }
    Ok(targets.iter().all(|&e| {
        exec.thread_preds(e).iter().all(|&p| m.is_kept(p))
    }))
}

/// Precondition failure of [`enabled_in`]: a target is inside the prefix.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TargetKept {
    pub event: EventId,
}

impl fmt::Display for TargetKept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "target event {} is kept by the mask", self.event)
    }
}

/// Error from [`parse_trace`], carrying the 1-based line number.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ParseErrorKind {
    /// Line does not split into exactly `thread|op|operand`.
    MalformedLine,
    /// Unknown operation token.
    BadOp(String),
    /// Empty or whitespace-bearing identifier token.
    BadToken(String),
    /// Operand namespace clash reported by the builder.
    Build(BuildError),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.kind {
            ParseErrorKind::MalformedLine => {
                write!(f, "expected `thread|op|operand` with op in r,w,acq,rel")
            }
            ParseErrorKind::BadOp(op) => write!(f, "unknown op `{op}` (expected r, w, acq, rel)"),
            ParseErrorKind::BadToken(tok) => {
                write!(f, "bad identifier `{tok}` (must be non-empty, without `|` or whitespace)")
            }
            ParseErrorKind::Build(e) => write!(f, "{e}"),
        }
    }
}

fn check_token(line: usize, tok: &str) -> Result<(), ParseError> {
    if tok.is_empty() || tok.contains(char::is_whitespace) {
        return Err(ParseError { line, kind: ParseErrorKind::BadToken(tok.to_string()) });
    }
    Ok(())
}

/// Parses the std-text trace format: one `thread|op|operand` event per line
/// with op in {r, w, acq, rel}; `#`-prefixed comment lines and blank lines
/// are skipped.
pub fn parse_trace(text: &str) -> Result<Execution, ParseError> {
    let mut b = ExecutionBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('|');
        let (thread, op, operand) = match (parts.next(), parts.next(), parts.next(), parts.next())
        {
            (Some(t), Some(op), Some(d), None) => (t, op, d),
            _ => return Err(ParseError { line: lineno, kind: ParseErrorKind::MalformedLine }),
        };
        check_token(lineno, thread)?;
        check_token(lineno, operand)?;
        let op = OpKind::parse(op)
            .ok_or_else(|| ParseError { line: lineno, kind: ParseErrorKind::BadOp(op.to_string()) })?;
        b.push(thread, op, operand)
            .map_err(|e| ParseError { line: lineno, kind: ParseErrorKind::Build(e) })?;
    }
    Ok(b.finish())
}
