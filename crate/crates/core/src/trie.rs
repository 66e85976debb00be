use std::borrow::Borrow;
use std::collections::hash_map::RandomState;
use std::fmt;
use std::hash::{BuildHasher, Hash};
use std::sync::atomic::Ordering;
use std::sync::Arc;

use crossbeam_epoch::{self as epoch, Atomic, Guard, Owned, Shared};

use crate::hash::{flagpos, fold, BRANCH_WIDTH};
use crate::hooks::{self, CasKind, Fault};
use crate::node::{
    to_compressed, to_weak_tombed, Branch, CNode, CollisionNode, INode, MainNode, SNode, WeakTomb,
};

/// Outcome of one traversal attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum OpResult<V> {
    Found(V),
    NotFound,
    /// The attempt ran into a nonlive inode or lost a CAS race and must be
    /// retried from the root.
    Restart,
}

/// A lock-free concurrent hash trie.
///
/// All operations take `&self` and may run from any number of threads. Every
/// update is a single-word CAS on the root cell or on an inode's main cell;
/// removals contract the trie back towards its shortest shape.
///
/// Values are returned by clone, so large values are best stored behind an
/// `Arc`.
pub struct Ctrie<K, V, S = RandomState> {
    root: Atomic<INode<K, V>>,
    hasher: S,
}

impl<K, V> Ctrie<K, V, RandomState> {
    pub fn new() -> Self {
        Self::with_hasher(RandomState::new())
    }
}

impl<K, V> Default for Ctrie<K, V, RandomState> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K, V, S> fmt::Debug for Ctrie<K, V, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ctrie").finish_non_exhaustive()
    }
}

impl<K, V, S> Ctrie<K, V, S> {
    pub fn with_hasher(hasher: S) -> Self {
        Ctrie {
            root: Atomic::null(),
            hasher,
        }
    }

    pub fn hasher(&self) -> &S {
        &self.hasher
    }

    pub(crate) fn root<'g>(&self, guard: &'g Guard) -> Option<&'g INode<K, V>> {
        // SAFETY: root inodes are retired through `defer_destroy`.
        unsafe { self.root.load(Ordering::Acquire, guard).as_ref() }
    }

    #[cfg(test)]
    pub(crate) fn root_cell(&self) -> &Atomic<INode<K, V>> {
        &self.root
    }

    fn cas_root<'g>(
        &self,
        expected: Shared<'g, INode<K, V>>,
        new: Option<INode<K, V>>,
        kind: CasKind,
        guard: &'g Guard,
    ) -> bool {
        hooks::before_cas();
        let swapped = match new {
            Some(i) => self
                .root
                .compare_exchange(expected, Owned::new(i), Ordering::AcqRel, Ordering::Acquire, guard)
                .is_ok(),
            None => self
                .root
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
                // SAFETY: the old root is unlinked; only null-inodes are ever
                // replaced at the root, so its main is absent.
                unsafe { guard.defer_destroy(expected) };
            }
            hooks::cas_succeeded(kind);
        }
        swapped
    }
}

impl<K, V, S> Ctrie<K, V, S>
where
    K: Hash + Eq,
    S: BuildHasher,
{
    /// The 32-bit hashcode the trie uses for `key`.
    pub fn hash_of<Q>(&self, key: &Q) -> u32
    where
        K: Borrow<Q>,
        Q: Hash + ?Sized,
    {
        fold(self.hasher.hash_one(key))
    }

    /// Binds `key` to `value`, replacing any previous binding.
    pub fn insert(&self, key: K, value: V) {
        let hash = self.hash_of(&key);
        let sn = Arc::new(SNode::new(key, value, hash));
        let guard = &epoch::pin();
        loop {
            let r = self.root.load(Ordering::Acquire, guard);
            // SAFETY: see `root`.
            match unsafe { r.as_ref() } {
                Some(ri) if !ri.load(guard).is_null() => {
                    if self.iinsert(ri, &sn, 0, None, guard) {
                        return;
                    }
                }
                _ => {
                    let fresh = INode::new(Some(MainNode::CNode(CNode::single(Arc::clone(&sn), 0))));
                    if self.cas_root(r, Some(fresh), CasKind::RootInstall, guard) {
                        return;
                    }
                }
            }
        }
    }

    /// The value bound to `key`, if any.
    pub fn lookup<Q>(&self, key: &Q) -> Option<V>
    where
        K: Borrow<Q>,
        Q: Hash + Eq + ?Sized,
        V: Clone,
    {
        let hash = self.hash_of(key);
        let guard = &epoch::pin();
        loop {
            let r = self.root.load(Ordering::Acquire, guard);
            // SAFETY: see `root`.
            let ri = (unsafe { r.as_ref() })?;
            if ri.load(guard).is_null() {
                self.cas_root(r, None, CasKind::RootReset, guard);
                continue;
            }
            match self.ilookup(ri, key, hash, 0, None, guard) {
                OpResult::Found(v) => return Some(v),
                OpResult::NotFound => return None,
                OpResult::Restart => {}
            }
        }
    }

    /// Removes the binding for `key`, returning its value.
    pub fn remove<Q>(&self, key: &Q) -> Option<V>
    where
        K: Borrow<Q>,
        Q: Hash + Eq + ?Sized,
        V: Clone,
    {
        let hash = self.hash_of(key);
        let guard = &epoch::pin();
        loop {
            let r = self.root.load(Ordering::Acquire, guard);
            // SAFETY: see `root`.
            let ri = (unsafe { r.as_ref() })?;
            if ri.load(guard).is_null() {
                self.cas_root(r, None, CasKind::RootReset, guard);
                continue;
            }
            match self.iremove(ri, key, hash, 0, None, guard) {
                OpResult::Found(v) => return Some(v),
                OpResult::NotFound => return None,
                OpResult::Restart => {}
            }
        }
    }

    fn ilookup<Q>(
        &self,
        i: &INode<K, V>,
        key: &Q,
        hash: u32,
        lev: u32,
        parent: Option<&INode<K, V>>,
        guard: &Guard,
    ) -> OpResult<V>
    where
        K: Borrow<Q>,
        Q: Eq + ?Sized,
        V: Clone,
    {
        match i.read(guard).1 {
            Some(MainNode::CNode(cn)) => {
                let (flag, pos) = flagpos(hash, lev, cn.bmp);
                if cn.bmp & flag == 0 {
                    return OpResult::NotFound;
                }
                match &cn.array[pos] {
                    Branch::INode(sin) => self.ilookup(sin, key, hash, lev + BRANCH_WIDTH, Some(i), guard),
                    Branch::SNode(sn) if sn.key.borrow() == key => OpResult::Found(sn.value.clone()),
                    Branch::SNode(_) => OpResult::NotFound,
                }
            }
            Some(MainNode::Collision(cl)) => cl
                .entries
                .iter()
                .find(|sn| sn.key.borrow() == key)
                .map_or(OpResult::NotFound, |sn| OpResult::Found(sn.value.clone())),
            Some(MainNode::Tomb(_)) | None => {
                if let Some(p) = parent {
                    clean(p, lev - BRANCH_WIDTH, guard);
                }
                OpResult::Restart
            }
        }
    }

    /// Returns false when the caller has to restart.
    fn iinsert(
        &self,
        i: &INode<K, V>,
        sn: &Arc<SNode<K, V>>,
        lev: u32,
        parent: Option<&INode<K, V>>,
        guard: &Guard,
    ) -> bool {
        let (m, main) = i.read(guard);
        match main {
            Some(MainNode::CNode(cn)) => {
                let (flag, pos) = flagpos(sn.hash, lev, cn.bmp);
                if cn.bmp & flag == 0 {
                    let ncn = cn.inserted(pos, flag, Branch::SNode(Arc::clone(sn)));
                    return i.cas(m, Some(MainNode::CNode(ncn)), CasKind::Insert, guard);
                }
                match &cn.array[pos] {
                    Branch::INode(sin) => self.iinsert(sin, sn, lev + BRANCH_WIDTH, Some(i), guard),
                    Branch::SNode(old) => {
                        let branch = if old.key == sn.key {
                            Branch::SNode(Arc::clone(sn))
                        } else {
                            let below =
                                MainNode::dual(Arc::clone(old), Arc::clone(sn), lev + BRANCH_WIDTH);
                            Branch::INode(Arc::new(INode::new(Some(below))))
                        };
                        let ncn = cn.updated(pos, branch);
                        i.cas(m, Some(MainNode::CNode(ncn)), CasKind::Insert, guard)
                    }
                }
            }
            Some(MainNode::Collision(cl)) => {
                let ncl = cl.inserted(sn);
                i.cas(m, Some(MainNode::Collision(ncl)), CasKind::Insert, guard)
            }
            Some(MainNode::Tomb(_)) | None => {
                if let Some(p) = parent {
                    clean(p, lev - BRANCH_WIDTH, guard);
                }
                false
            }
        }
    }

    fn iremove<Q>(
        &self,
        i: &INode<K, V>,
        key: &Q,
        hash: u32,
        lev: u32,
        parent: Option<&INode<K, V>>,
        guard: &Guard,
    ) -> OpResult<V>
    where
        K: Borrow<Q>,
        Q: Eq + ?Sized,
        V: Clone,
    {
        let (m, main) = i.read(guard);
        let res = match main {
            Some(MainNode::CNode(cn)) => {
                let (flag, pos) = flagpos(hash, lev, cn.bmp);
                if cn.bmp & flag == 0 {
                    return OpResult::NotFound;
                }
                match &cn.array[pos] {
                    Branch::INode(sin) => {
                        self.iremove(sin, key, hash, lev + BRANCH_WIDTH, Some(i), guard)
                    }
                    Branch::SNode(sn) if sn.key.borrow() == key => {
                        let ncn = if cn.array.len() == 1 {
                            None
                        } else {
                            Some(MainNode::CNode(cn.removed(pos, flag)))
                        };
                        if i.cas(m, ncn, CasKind::Remove, guard) {
                            OpResult::Found(sn.value.clone())
                        } else {
                            OpResult::Restart
                        }
                    }
                    Branch::SNode(_) => OpResult::NotFound,
                }
            }
            Some(MainNode::Collision(cl)) => {
                return self.iremove_collision(i, m, cl, key, hash, lev, parent, guard);
            }
            Some(MainNode::Tomb(_)) | None => {
                if let Some(p) = parent {
                    clean(p, lev - BRANCH_WIDTH, guard);
                }
                return OpResult::Restart;
            }
        };
        if matches!(res, OpResult::NotFound | OpResult::Restart) {
            return res;
        }
        if let Some(p) = parent {
            if tomb_compress(i, guard) || i.is_nonlive(guard) {
                contract_parent(p, i, hash, lev - BRANCH_WIDTH, guard);
            }
        }
        res
    }

    #[allow(clippy::too_many_arguments)]
    fn iremove_collision<'g, Q>(
        &self,
        i: &INode<K, V>,
        m: Shared<'g, MainNode<K, V>>,
        cl: &CollisionNode<K, V>,
        key: &Q,
        hash: u32,
        lev: u32,
        parent: Option<&INode<K, V>>,
        guard: &'g Guard,
    ) -> OpResult<V>
    where
        K: Borrow<Q>,
        Q: Eq + ?Sized,
        V: Clone,
    {
        let Some(found) = cl.entries.iter().find(|sn| sn.key.borrow() == key) else {
            return OpResult::NotFound;
        };
        let rest: Vec<_> = cl
            .entries
            .iter()
            .filter(|sn| !Arc::ptr_eq(sn, found))
            .cloned()
            .collect();
        // A lone survivor becomes a tomb so the regular contraction moves it
        // up into the parent.
        let (new, tombed) = match rest.as_slice() {
            [only] => (MainNode::Tomb(Arc::clone(only)), true),
            _ => (
                MainNode::Collision(CollisionNode {
                    entries: rest.into_boxed_slice(),
                }),
                false,
            ),
        };
        if !i.cas(m, Some(new), CasKind::Remove, guard) {
            return OpResult::Restart;
        }
        if let (true, Some(p)) = (tombed, parent) {
            contract_parent(p, i, hash, lev - BRANCH_WIDTH, guard);
        }
        OpResult::Found(found.value.clone())
    }
}

/// Replaces the cnode below `i` (at level `lev`) with its compression, once,
/// if it has a nonlive branch.
/// Failure is left to the caller's restart.
pub(crate) fn clean<K, V>(i: &INode<K, V>, lev: u32, guard: &Guard) {
    let (m, main) = i.read(guard);
    if let Some(MainNode::CNode(cn)) = main {
        let stale = cn.array.iter().any(|b| b.is_null_inode(guard) || b.tomb(guard).is_some());
        if stale {
            i.cas(m, to_compressed(cn, lev, guard), CasKind::Clean, guard);
        }
    }
}

/// Repeatedly tries to entomb the cnode below `i`. True when `i` was made
/// nonlive, meaning the parent has to be contracted.
pub(crate) fn tomb_compress<K, V>(i: &INode<K, V>, guard: &Guard) -> bool {
    loop {
        let (m, main) = i.read(guard);
        let Some(MainNode::CNode(cn)) = main else {
            return false;
        };
        let wt = to_weak_tombed(cn, guard);
        let nonlive = match wt {
            WeakTomb::Unchanged => return false,
            WeakTomb::Absent | WeakTomb::Tomb(_) => true,
            WeakTomb::Narrowed(_) => false,
        };
        if i.cas(m, wt.into_main(), CasKind::TombCompress, guard) {
            return nonlive;
        }
    }
}

/// Removes the null-inode `i` from its parent's cnode, or replaces the
/// tomb-inode `i` by its resurrected leaf. Gives up once `i` is no longer the
/// parent's branch for `hash`.
pub(crate) fn contract_parent<K, V>(
    parent: &INode<K, V>,
    i: &INode<K, V>,
    hash: u32,
    lev: u32,
    guard: &Guard,
) {
    loop {
        let m = i.read(guard).1;
        let (pm, pmain) = parent.read(guard);
        let Some(MainNode::CNode(cn)) = pmain else {
            return;
        };
        let (flag, pos) = flagpos(hash, lev, cn.bmp);
        if cn.bmp & flag == 0 {
            return;
        }
        match &cn.array[pos] {
            Branch::INode(sub) if std::ptr::eq(Arc::as_ptr(sub), i) => {}
            _ => return,
        }
        let (ncn, kind) = match m {
            None => (cn.removed(pos, flag), CasKind::ContractNull),
            Some(MainNode::Tomb(_)) if hooks::fault() == Some(Fault::DropTombedKey) => {
                (cn.removed(pos, flag), CasKind::ContractSingle)
            }
            Some(MainNode::Tomb(sn)) => (
                cn.updated(pos, Branch::SNode(Arc::clone(sn))),
                CasKind::ContractSingle,
            ),
            Some(_) => return,
        };
        if parent.cas(pm, Some(MainNode::CNode(ncn)), kind, guard) {
            return;
        }
    }
}

impl<K, V, S> Drop for Ctrie<K, V, S> {
    fn drop(&mut self) {
        // SAFETY: `&mut self` means no operation is in flight.
        unsafe {
            let r = self.root.load(Ordering::Relaxed, epoch::unprotected());
            if !r.is_null() {
                drop(r.into_owned());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::IdentityHash;

    fn trie() -> Ctrie<u32, u32, IdentityHash> {
        Ctrie::with_hasher(IdentityHash)
    }

    #[test]
    fn empty_trie_has_nothing() {
        let t = trie();
        assert_eq!(t.lookup(&1), None);
        assert_eq!(t.remove(&1), None);
    }

    #[test]
    fn insert_lookup_replace_remove() {
        let t = trie();
        t.insert(1, 10);
        assert_eq!(t.lookup(&1), Some(10));
        t.insert(1, 11);
        assert_eq!(t.lookup(&1), Some(11));
        assert_eq!(t.remove(&1), Some(11));
        assert_eq!(t.lookup(&1), None);
        assert_eq!(t.remove(&1), None);
    }

    #[test]
    fn lookup_misses_at_second_level() {
        let t = trie();
        t.insert(1, 1);
        t.insert(33, 33);
        assert_eq!(t.lookup(&65), None);
        assert_eq!(t.lookup(&33), Some(33));
        assert_eq!(t.lookup(&1), Some(1));
    }

    #[test]
    fn borrowed_lookup() {
        let t: Ctrie<String, u32> = Ctrie::new();
        t.insert("a".to_string(), 1);
        assert_eq!(t.lookup("a"), Some(1));
        assert_eq!(t.remove("a"), Some(1));
    }

    #[test]
    fn root_null_inode_is_reset() {
        let t = trie();
        t.insert(5, 5);
        t.remove(&5);
        let g = &epoch::pin();
        assert!(t.root(g).is_some_and(|r| r.load(g).is_null()));
        assert_eq!(t.lookup(&5), None);
        assert!(t.root(g).is_none());
        t.insert(6, 6);
        assert_eq!(t.lookup(&6), Some(6));
    }

    #[test]
    fn iinsert_on_tomb_cleans_parent_and_restarts() {
        let t = trie();
        // Root cnode slot 1 -> inode whose main is a tomb of key 1.
        let tomb = Arc::new(INode::new(Some(MainNode::Tomb(Arc::new(SNode::new(1u32, 1u32, 1))))));
        let root = INode::new(Some(MainNode::CNode(CNode {
            bmp: 0b10,
            array: Box::new([Branch::INode(Arc::clone(&tomb))]),
        })));
        let g = &epoch::pin();
        t.root.store(Owned::new(root), Ordering::Release);
        let sn = Arc::new(SNode::new(33u32, 33u32, 33));
        let ri = t.root(g).unwrap();
        assert!(!t.iinsert(&tomb, &sn, 5, Some(ri), g));
        // The root cnode had its tomb-inode resurrected, not collapsed.
        let Some(MainNode::CNode(cn)) = ri.read(g).1 else { panic!("root must stay a cnode") };
        assert!(matches!(&cn.array[..], [Branch::SNode(sn)] if sn.key == 1));
        assert!(t.iinsert(ri, &sn, 0, None, g));
        assert_eq!(t.lookup(&33), Some(33));
        assert_eq!(t.lookup(&1), Some(1));
    }

    #[test]
    fn ilookup_on_null_inode_restarts() {
        let t = trie();
        let null = Arc::new(INode::new(None));
        let parent = INode::new(Some(MainNode::CNode(CNode {
            bmp: 0b1,
            array: Box::new([Branch::INode(Arc::clone(&null))]),
        })));
        let g = &epoch::pin();
        assert_eq!(t.ilookup(&null, &0, 0, 10, Some(&parent), g), OpResult::Restart);
        assert!(parent.read(g).1.is_none(), "all-null cnode compresses to absent");
    }

    #[test]
    fn iremove_missing_flag_issues_no_cas() {
        let t = trie();
        t.insert(1, 1);
        let g = &epoch::pin();
        let ri = t.root(g).unwrap();
        let before = ri.load(g);
        assert_eq!(t.iremove(ri, &2, 2, 0, None, g), OpResult::NotFound);
        assert_eq!(ri.load(g), before);
    }

    #[test]
    fn tomb_compress_cases() {
        let g = &epoch::pin();
        let tombed = INode::new(Some(MainNode::Tomb(Arc::new(SNode::new(1u32, 1u32, 1)))));
        assert!(!tomb_compress(&tombed, g));
        let two = INode::new(Some(MainNode::dual(
            Arc::new(SNode::new(1u32, 1u32, 1)),
            Arc::new(SNode::new(2u32, 2u32, 2)),
            0,
        )));
        assert!(!tomb_compress(&two, g));
        let one = INode::new(Some(MainNode::CNode(CNode::single(Arc::new(SNode::new(3u32, 3u32, 3)), 0))));
        assert!(tomb_compress(&one, g));
        assert!(matches!(one.read(g).1, Some(MainNode::Tomb(sn)) if sn.key == 3));
    }

    #[test]
    fn contract_parent_cases() {
        let g = &epoch::pin();
        let null = Arc::new(INode::<u32, u32>::new(None));
        let other = Arc::new(INode::<u32, u32>::new(None));
        let tomb = Arc::new(INode::new(Some(MainNode::Tomb(Arc::new(SNode::new(2u32, 20u32, 2))))));
        let parent = INode::new(Some(MainNode::CNode(CNode {
            bmp: 0b111,
            array: Box::new([
                Branch::INode(Arc::clone(&null)),
                Branch::SNode(Arc::new(SNode::new(1, 10, 1))),
                Branch::INode(Arc::clone(&tomb)),
            ]),
        })));
        // Not the parent's branch any more: untouched.
        let before = parent.load(g);
        contract_parent(&parent, &other, 0, 0, g);
        assert_eq!(parent.load(g), before);

        contract_parent(&parent, &null, 0, 0, g);
        let Some(MainNode::CNode(cn)) = parent.read(g).1 else { panic!() };
        assert_eq!(cn.bmp, 0b110);

        contract_parent(&parent, &tomb, 2, 0, g);
        let Some(MainNode::CNode(cn)) = parent.read(g).1 else { panic!() };
        assert_eq!(cn.bmp, 0b110);
        assert!(matches!(&cn.array[1], Branch::SNode(sn) if sn.key == 2 && sn.value == 20));
    }

    #[test]
    fn full_hash_collisions() {
        #[derive(PartialEq, Eq, Debug, Clone, Copy)]
        struct K(u32, u32);
        impl Hash for K {
            fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
                h.write_u32(self.1);
            }
        }
        let t: Ctrie<K, u32, IdentityHash> = Ctrie::with_hasher(IdentityHash);
        let (a, b, c) = (K(1, 0xdead_beef), K(2, 0xdead_beef), K(3, 0xdead_beef));
        t.insert(a, 1);
        t.insert(b, 2);
        t.insert(c, 3);
        t.insert(b, 22);
        assert_eq!(t.lookup(&a), Some(1));
        assert_eq!(t.lookup(&b), Some(22));
        assert_eq!(t.lookup(&c), Some(3));
        assert_eq!(t.lookup(&K(4, 0xdead_beef)), None);
        assert_eq!(t.remove(&a), Some(1));
        assert_eq!(t.remove(&c), Some(3));
        assert_eq!(t.lookup(&b), Some(22));
        assert_eq!(t.remove(&b), Some(22));
        assert_eq!(t.lookup(&b), None);
    }
}
