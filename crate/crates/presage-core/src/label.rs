//! Event labels over the read/write/lock alphabet.
//!
//! A label is a thread paired with an operation on an operand: a read or
//! write of a memory location, or an acquire or release of a lock. Thread,
//! location, and lock names are interned to dense ids by [`crate::exec`];
//! everything downstream works on the compact [`Letter`] form.

use core::fmt;

/// Interned thread id.
pub type ThreadId = usize;
/// Interned lock id.
pub type LockId = usize;
/// Interned memory-location id.
pub type LocId = usize;
/// Id of a distinct label within one execution's observed alphabet.
pub type LetterId = usize;
/// 1-based position of an event in its execution. 0 is reserved for "none".
pub type EventId = usize;

/// Operation kind, before the operand is resolved to a location or lock.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum OpKind {
    Read,
    Write,
    Acquire,
    Release,
}

impl OpKind {
    /// Parses the textual form used by the std-text trace format.
    pub fn parse(s: &str) -> Option<OpKind> {
        match s {
            "r" => Some(OpKind::Read),
            "w" => Some(OpKind::Write),
            "acq" => Some(OpKind::Acquire),
            "rel" => Some(OpKind::Release),
            _ => None,
        }
    }

    /// Textual form used by the std-text trace format.
    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::Read => "r",
            OpKind::Write => "w",
            OpKind::Acquire => "acq",
            OpKind::Release => "rel",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An operation with its interned operand.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Action {
    Read(LocId),
    Write(LocId),
    Acquire(LockId),
    Release(LockId),
}

impl Action {
    pub fn kind(self) -> OpKind {
        match self {
            Action::Read(_) => OpKind::Read,
            Action::Write(_) => OpKind::Write,
            Action::Acquire(_) => OpKind::Acquire,
            Action::Release(_) => OpKind::Release,
        }
    }

    pub fn is_read(self) -> bool {
        matches!(self, Action::Read(_))
    }

    pub fn is_write(self) -> bool {
        matches!(self, Action::Write(_))
    }

    /// Location touched by a read or write.
    pub fn location(self) -> Option<LocId> {
        match self {
            Action::Read(x) | Action::Write(x) => Some(x),
            _ => None,
        }
    }

    /// Lock touched by an acquire or release.
    pub fn lock(self) -> Option<LockId> {
        match self {
            Action::Acquire(l) | Action::Release(l) => Some(l),
            _ => None,
        }
    }
}

/// A compact event label: which thread performed which action.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Letter {
    pub thread: ThreadId,
    pub action: Action,
}

impl Letter {
    pub fn new(thread: ThreadId, action: Action) -> Letter {
        Letter { thread, action }
    }

    /// Two letters conflict when they touch the same location and at least
    /// one of them writes it.
    pub fn conflicts(self, other: Letter) -> bool {
        match (self.action.location(), other.action.location()) {
            (Some(x), Some(y)) => x == y && (self.action.is_write() || other.action.is_write()),
            _ => false,
        }
    }

    /// Same-lock pair: both letters acquire or release one lock.
    pub fn same_lock(self, other: Letter) -> bool {
        match (self.action.lock(), other.action.lock()) {
            (Some(l), Some(m)) => l == m,
            _ => false,
        }
    }
}
