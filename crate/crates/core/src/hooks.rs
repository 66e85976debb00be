//! Test instrumentation points.
//!
//! With the `test-hooks` feature, each thread may install a pause hook (run
//! right before every CAS the calling thread issues), an observer (told about
//! every successful CAS) and a fault. Without the feature every entry point is
//! an empty inline function.

/// Which CAS site succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CasKind {
    /// Root cell replaced by a fresh inode during insert.
    RootInstall,
    /// Null-inode root reset to absent.
    RootReset,
    Insert,
    Remove,
    Clean,
    TombCompress,
    ContractNull,
    ContractSingle,
}

/// Deliberate bugs for negative-control runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Contraction drops a tombed key instead of resurrecting it into the
    /// parent.
    DropTombedKey,
}

#[cfg(feature = "test-hooks")]
mod imp {
    use super::{CasKind, Fault};
    use std::cell::{Cell, RefCell};
    use std::sync::atomic::{AtomicUsize, Ordering};

    type Hook = Box<dyn FnMut()>;
    type Observer = Box<dyn FnMut(CasKind)>;

    thread_local! {
        static PAUSE: RefCell<Option<Hook>> = const { RefCell::new(None) };
        static OBSERVER: RefCell<Option<Observer>> = const { RefCell::new(None) };
        static FAULT: Cell<Option<Fault>> = const { Cell::new(None) };
    }

    static FINALITY_VIOLATIONS: AtomicUsize = AtomicUsize::new(0);

    /// Installs (or clears) the calling thread's pre-CAS pause hook.
    pub fn set_pause_hook(hook: Option<Box<dyn FnMut()>>) {
        PAUSE.with(|p| *p.borrow_mut() = hook);
    }

    /// Installs (or clears) the calling thread's successful-CAS observer.
    /// CASes issued from inside the observer itself are not reported.
    pub fn set_cas_observer(obs: Option<Box<dyn FnMut(CasKind)>>) {
        OBSERVER.with(|o| *o.borrow_mut() = obs);
    }

    pub fn set_fault(fault: Option<Fault>) {
        FAULT.with(|f| f.set(fault));
    }

    /// Number of CAS attempts whose expected main value was absent or a tomb,
    /// process-wide.
    pub fn finality_violations() -> usize {
        FINALITY_VIOLATIONS.load(Ordering::Relaxed)
    }

    pub(crate) fn before_cas() {
        PAUSE.with(|p| {
            if let Ok(mut hook) = p.try_borrow_mut() {
                if let Some(h) = hook.as_mut() {
                    h();
                }
            }
        });
    }

    pub(crate) fn cas_succeeded(kind: CasKind) {
        OBSERVER.with(|o| {
            if let Ok(mut obs) = o.try_borrow_mut() {
                if let Some(f) = obs.as_mut() {
                    f(kind);
                }
            }
        });
    }

    pub(crate) fn record_finality_violation() {
        FINALITY_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn fault() -> Option<Fault> {
        FAULT.with(Cell::get)
    }
}

#[cfg(feature = "test-hooks")]
pub use imp::{finality_violations, set_cas_observer, set_fault, set_pause_hook};
#[cfg(feature = "test-hooks")]
pub(crate) use imp::{before_cas, cas_succeeded, fault, record_finality_violation};

#[cfg(not(feature = "test-hooks"))]
mod noop {
    use super::{CasKind, Fault};

    #[inline(always)]
    pub(crate) fn before_cas() {}
    #[inline(always)]
    pub(crate) fn cas_succeeded(_: CasKind) {}
    #[inline(always)]
    pub(crate) fn record_finality_violation() {}
    #[inline(always)]
    pub(crate) fn fault() -> Option<Fault> {
        None
    }
}

#[cfg(not(feature = "test-hooks"))]
pub(crate) use noop::{before_cas, cas_succeeded, fault, record_finality_violation};
