//! Trie nodes.
//!
//! `INode::main` is the only mutable cell inside the trie. Everything a main
//! cell points to (`CNode`, tombed `SNode`, `CollisionNode`) is immutable once
//! built; updates allocate a new main node and CAS it in. Inodes and snodes
//! are shared between successive versions of a cnode through `Arc`, while
//! main nodes are owned by exactly one inode and retired through the epoch
//! collector once replaced.

use std::sync::atomic::Ordering;
use std::sync::Arc;

use crossbeam_epoch::{self as epoch, Atomic, Guard, Owned, Shared};

use crate::hash::{chunk, BRANCH_WIDTH, MAX_LEVEL};
use crate::hooks::{self, CasKind};

/// Key-value leaf. The hashcode is computed once at insertion.
pub(crate) struct SNode<K, V> {
    pub(crate) key: K,
    pub(crate) value: V,
    pub(crate) hash: u32,
}

impl<K, V> SNode<K, V> {
    pub(crate) fn new(key: K, value: V, hash: u32) -> Self {
        SNode { key, value, hash }
    }
}

/// An entry of a cnode array. Tombed snodes cannot be stored here: a tomb
/// only exists as [`MainNode::Tomb`].
pub(crate) enum Branch<K, V> {
    INode(Arc<INode<K, V>>),
    SNode(Arc<SNode<K, V>>),
}

impl<K, V> Clone for Branch<K, V> {
    fn clone(&self) -> Self {
        match self {
            Branch::INode(i) => Branch::INode(Arc::clone(i)),
            Branch::SNode(s) => Branch::SNode(Arc::clone(s)),
        }
    }
}

impl<K, V> Branch<K, V> {
    /// True for an inode whose main is absent.
    pub(crate) fn is_null_inode(&self, guard: &Guard) -> bool {
        match self {
            Branch::INode(i) => i.load(guard).is_null(),
            Branch::SNode(_) => false,
        }
    }

    /// The tombed snode of a tomb-inode.
    pub(crate) fn tomb<'g>(&self, guard: &'g Guard) -> Option<&'g Arc<SNode<K, V>>> {
        match self {
            Branch::INode(i) => match i.read(guard).1 {
                Some(MainNode::Tomb(sn)) => Some(sn),
                _ => None,
            },
            Branch::SNode(_) => None,
        }
    }
}

/// Bitmap-indexed branch node.
pub(crate) struct CNode<K, V> {
    pub(crate) bmp: u32,
    pub(crate) array: Box<[Branch<K, V>]>,
}

impl<K, V> CNode<K, V> {
    pub(crate) fn single(sn: Arc<SNode<K, V>>, lev: u32) -> Self {
        CNode {
            bmp: 1 << chunk(sn.hash, lev),
            array: Box::new([Branch::SNode(sn)]),
        }
    }

    /// Copy with `branch` inserted at `pos` and `flag` set.
    pub(crate) fn inserted(&self, pos: usize, flag: u32, branch: Branch<K, V>) -> Self {
        let mut array = Vec::with_capacity(self.array.len() + 1);
        array.extend_from_slice(&self.array[..pos]);
        array.push(branch);
        array.extend_from_slice(&self.array[pos..]);
        CNode {
            bmp: self.bmp | flag,
            array: array.into_boxed_slice(),
        }
    }

    pub(crate) fn updated(&self, pos: usize, branch: Branch<K, V>) -> Self {
        let mut array = self.array.to_vec();
        array[pos] = branch;
        CNode {
            bmp: self.bmp,
            array: array.into_boxed_slice(),
        }
    }

    pub(crate) fn removed(&self, pos: usize, flag: u32) -> Self {
        let mut array = self.array.to_vec();
        array.remove(pos);
        CNode {
            bmp: self.bmp ^ flag,
            array: array.into_boxed_slice(),
        }
    }

    /// Pairs each array slot with its one-hot bitmap flag, in array order.
    pub(crate) fn slots(&self) -> impl Iterator<Item = (u32, &Branch<K, V>)> {
        BitIter(self.bmp).zip(self.array.iter())
    }

    pub(crate) fn from_slots(slots: impl Iterator<Item = (u32, Branch<K, V>)>) -> Self {
        let mut bmp = 0;
        let mut array = Vec::new();
        for (flag, b) in slots {
            bmp |= flag;
            array.push(b);
        }
        CNode {
            bmp,
            array: array.into_boxed_slice(),
        }
    }
}

/// Yields the set bits of a bitmap as one-hot flags, lowest first.
struct BitIter(u32);

impl Iterator for BitIter {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            return None;
        }
        let flag = self.0 & self.0.wrapping_neg();
        self.0 ^= flag;
        Some(flag)
    }
}

/// Bucket for two or more distinct keys that share a full 32-bit hashcode.
/// Only appears below the last hash level.
pub(crate) struct CollisionNode<K, V> {
    pub(crate) entries: Box<[Arc<SNode<K, V>>]>,
}

impl<K: Eq, V> CollisionNode<K, V> {
    /// Copy with `sn` replacing the entry of an equal key, or appended.
    pub(crate) fn inserted(&self, sn: &Arc<SNode<K, V>>) -> Self {
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .filter(|e| e.key != sn.key)
            .cloned()
            .collect();
        entries.push(Arc::clone(sn));
        CollisionNode {
            entries: entries.into_boxed_slice(),
        }
    }
}

pub(crate) enum MainNode<K, V> {
    CNode(CNode<K, V>),
    /// A tombed snode. The inode holding it is final.
    Tomb(Arc<SNode<K, V>>),
    Collision(CollisionNode<K, V>),
}

impl<K, V> MainNode<K, V> {
    /// Builds the subtree holding two leaves with distinct keys, starting at
    /// level `lev`. Equal chunks push both leaves one level further down;
    /// past the last level the hashcodes are identical and the leaves share a
    /// collision node.
    pub(crate) fn dual(x: Arc<SNode<K, V>>, y: Arc<SNode<K, V>>, lev: u32) -> Self {
        if lev > MAX_LEVEL {
            debug_assert_eq!(x.hash, y.hash);
            return MainNode::Collision(CollisionNode {
                entries: Box::new([x, y]),
            });
        }
        let (xi, yi) = (chunk(x.hash, lev), chunk(y.hash, lev));
        if xi == yi {
            let below = INode::new(Some(MainNode::dual(x, y, lev + BRANCH_WIDTH)));
            MainNode::CNode(CNode {
                bmp: 1 << xi,
                array: Box::new([Branch::INode(Arc::new(below))]),
            })
        } else {
            let (lo, hi) = if xi < yi { (x, y) } else { (y, x) };
            MainNode::CNode(CNode {
                bmp: (1 << xi) | (1 << yi),
                array: Box::new([Branch::SNode(lo), Branch::SNode(hi)]),
            })
        }
    }
}

/// Indirection node.
/// A main cell read: the pointer (CAS expected value) and its target.
pub(crate) type MainRead<'g, K, V> = (Shared<'g, MainNode<K, V>>, Option<&'g MainNode<K, V>>);

pub(crate) struct INode<K, V> {
    main: Atomic<MainNode<K, V>>,
}

impl<K, V> INode<K, V> {
    pub(crate) fn new(main: Option<MainNode<K, V>>) -> Self {
        INode {
            main: main.map_or_else(Atomic::null, Atomic::new),
        }
    }

    pub(crate) fn load<'g>(&self, guard: &'g Guard) -> Shared<'g, MainNode<K, V>> {
        self.main.load(Ordering::Acquire, guard)
    }

    /// One atomic read of `main`, returning both the pointer (the CAS
    /// expected value) and the node it points to.
    pub(crate) fn read<'g>(
        &self,
        guard: &'g Guard,
    ) -> MainRead<'g, K, V> {
        let m = self.load(guard);
        // SAFETY: main nodes are only freed through `defer_destroy` after
        // being unlinked, or when their owning inode is dropped, which cannot
        // happen while `guard` pins a reader that reached this inode.
        (m, unsafe { m.as_ref() })
    }

    /// Null-inodes and tomb-inodes never change again.
    pub(crate) fn is_nonlive(&self, guard: &Guard) -> bool {
        matches!(self.read(guard).1, None | Some(MainNode::Tomb(_)))
    }

    /// CAS on `main`. On success the replaced node is retired.
    pub(crate) fn cas<'g>(
        &self,
        expected: Shared<'g, MainNode<K, V>>,
        new: Option<MainNode<K, V>>,
        kind: CasKind,
        guard: &'g Guard,
    ) -> bool {
        // SAFETY: `expected` was read under `guard`.
        if matches!(unsafe { expected.as_ref() }, None | Some(MainNode::Tomb(_))) {
            hooks::record_finality_violation();
        }
        hooks::before_cas();
        let swapped = match new {
            Some(m) => self
                .main
                .compare_exchange(
                    expected,
                    Owned::new(m),
                    Ordering::AcqRel,
                    Ordering::Acquire,
                    guard,
                )
                .is_ok(),
            None => self
                .main
                .compare_exchange(
                    expected,
                    Shared::null(),
                    Ordering::AcqRel,
                    Ordering::Acquire,
                    guard,
                )
                .is_ok(),
        };
        if swapped {
            if !expected.is_null() {
                // SAFETY: `expected` is now unreachable from this inode and
                // main nodes are owned by a single inode.
                unsafe { guard.defer_destroy(expected) };
            }
            hooks::cas_succeeded(kind);
        }
        swapped
    }
}

impl<K, V> Drop for INode<K, V> {
    fn drop(&mut self) {
        // SAFETY: the last `Arc` (or the root cell) has let go of this inode,
        // so no pinned thread can still reach it or its current main node.
        unsafe {
            let m = self.main.load(Ordering::Relaxed, epoch::unprotected());
            if !m.is_null() {
                drop(m.into_owned());
            }
        }
    }
}

/// Replaces a tomb-inode branch by an untombed leaf; other branches are
/// returned unchanged.
pub(crate) fn resurrect<K, V>(branch: &Branch<K, V>, guard: &Guard) -> Branch<K, V> {
    match branch.tomb(guard) {
        Some(sn) => Branch::SNode(Arc::clone(sn)),
        None => branch.clone(),
    }
}

/// The compression of the cnode `cn` at level `lev`: its lone tomb when `cn`
/// is 1-way over a tomb-inode, absent when nothing but null-inodes remain,
/// otherwise a copy without null-inodes and with tomb-inodes resurrected.
///
/// The root cnode (`lev == 0`) is never collapsed into a tomb; its tomb-inode
/// is resurrected instead, so the root inode never becomes a tomb-inode.
pub(crate) fn to_compressed<K, V>(
    cn: &CNode<K, V>,
    lev: u32,
    guard: &Guard,
) -> Option<MainNode<K, V>> {
    if lev > 0 && cn.bmp.count_ones() == 1 {
        if let Some(sn) = cn.array.first().and_then(|b| b.tomb(guard)) {
            return Some(MainNode::Tomb(Arc::clone(sn)));
        }
    }
    let ncn = CNode::from_slots(
        cn.slots()
            .filter(|(_, b)| !b.is_null_inode(guard))
            .map(|(flag, b)| (flag, resurrect(b, guard))),
    );
    if ncn.bmp != 0 {
        Some(MainNode::CNode(ncn))
    } else {
        None
    }
}

/// Result of weak tombing a cnode.
pub(crate) enum WeakTomb<K, V> {
    /// More than one non-null branch, or already a 1-way cnode over a live
    /// inode: nothing to do.
    Unchanged,
    Absent,
    Tomb(Arc<SNode<K, V>>),
    /// 1-way copy over a single live inode, null-inodes stripped.
    Narrowed(CNode<K, V>),
}

impl<K, V> WeakTomb<K, V> {
    pub(crate) fn into_main(self) -> Option<MainNode<K, V>> {
        match self {
            WeakTomb::Unchanged | WeakTomb::Absent => None,
            WeakTomb::Tomb(sn) => Some(MainNode::Tomb(sn)),
            WeakTomb::Narrowed(cn) => Some(MainNode::CNode(cn)),
        }
    }
}

pub(crate) fn to_weak_tombed<K, V>(cn: &CNode<K, V>, guard: &Guard) -> WeakTomb<K, V> {
    let mut live = cn.slots().filter(|(_, b)| !b.is_null_inode(guard));
    let Some((flag, only)) = live.next() else {
        return WeakTomb::Absent;
    };
    if live.next().is_some() {
        return WeakTomb::Unchanged;
    }
    match only {
        Branch::SNode(sn) => WeakTomb::Tomb(Arc::clone(sn)),
        Branch::INode(_) => match only.tomb(guard) {
            Some(sn) => WeakTomb::Tomb(Arc::clone(sn)),
            None if cn.array.len() == 1 => WeakTomb::Unchanged,
            None => WeakTomb::Narrowed(CNode {
                bmp: flag,
                array: Box::new([only.clone()]),
            }),
        },
    }
}
