//! Quiescent-state inspection of a [`Ctrie`].
//!
//! Everything here walks the trie with plain atomic reads and assumes no
//! concurrent writer is running; the caller is responsible for that. On a
//! trie that is being modified the results are unspecified, but never unsafe.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt::{self, Debug};
use std::hash::{BuildHasher, Hash, Hasher};
use std::sync::Arc;

use crossbeam_epoch::{self as epoch, Guard};
use serde::Serialize;

use crate::hash::{chunk, BRANCH_WIDTH, MAX_LEVEL};
use crate::node::{Branch, CNode, INode, MainNode, SNode};
use crate::Ctrie;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum InvariantId {
    /// Main cell holds a cnode, a tomb, a collision node (two or more entries
    /// with one hashcode and distinct keys) or nothing.
    #[serde(rename = "INV1")]
    Inv1,
    /// Bitmap popcount equals array length.
    #[serde(rename = "INV2")]
    Inv2,
    /// Every set bit has an array slot, and cnodes only sit at levels that
    /// still have hash bits.
    #[serde(rename = "INV3")]
    Inv3,
    /// Leaves in a cnode carry a hashcode whose prefix is the cnode's path.
    #[serde(rename = "INV4")]
    Inv4,
    /// Tombs and collision entries carry a hashcode whose prefix is the
    /// inode's path.
    #[serde(rename = "INV5")]
    Inv5,
    #[serde(rename = "ROOT-NOT-TOMB")]
    RootNotTomb,
    /// A leaf's own chunk matches the bitmap index of its slot.
    #[serde(rename = "DENSE-ORDER")]
    DenseOrder,
}

impl fmt::Display for InvariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InvariantId::Inv1 => "INV1",
            InvariantId::Inv2 => "INV2",
            InvariantId::Inv3 => "INV3",
            InvariantId::Inv4 => "INV4",
            InvariantId::Inv5 => "INV5",
            InvariantId::RootNotTomb => "ROOT-NOT-TOMB",
            InvariantId::DenseOrder => "DENSE-ORDER",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub invariant: InvariantId,
    /// Chunk indices followed from the root to the offending node.
    pub path: Vec<u8>,
    pub description: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InvariantReport {
    pub violations: Vec<Violation>,
}

impl InvariantReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, invariant: InvariantId, path: &[u8], description: String) {
        self.violations.push(Violation {
            invariant,
            path: path.to_vec(),
            description,
        });
    }
}

/// Counts describing a trie state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct StateMetrics {
    /// Reachable null-inodes.
    pub n: u64,
    /// Reachable tomb-inodes.
    pub t: u64,
    /// Live inodes (main is a cnode or a collision node).
    pub l: u64,
    /// Cnodes that are single tips of any length.
    pub r: u64,
    /// Sum over all leaves of the number of edges from the root cell.
    pub d: u64,
}

impl StateMetrics {
    pub fn is_clean(&self) -> bool {
        self.n == 0 && self.t == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PathNode {
    INode { level: u32 },
    CNode { level: u32, bmp: u32 },
    SNode { hash: u32, tombed: bool },
    Collision { entries: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Terminal {
    SNode,
    CNode,
    NullINode,
    CollisionNode,
    Empty,
}

/// The longest path of nodes a hashcode selects from the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathTrace {
    pub nodes: Vec<PathNode>,
    pub terminal: Terminal,
}

/// Checks every structural invariant over the whole trie.
pub fn validate<K, V, S>(trie: &Ctrie<K, V, S>) -> InvariantReport
where
    K: Hash + Eq,
    S: BuildHasher,
{
    let guard = &epoch::pin();
    let mut report = InvariantReport::default();
    if let Some(root) = trie.root(guard) {
        if let Some(MainNode::Tomb(_)) = root.read(guard).1 {
            report.push(InvariantId::RootNotTomb, &[], "root inode holds a tomb".into());
        }
        let mut checker = Checker {
            trie,
            report: &mut report,
            path: Vec::new(),
            guard,
        };
        checker.inode(root, 0);
    }
    report
}

struct Checker<'a, K, V, S> {
    trie: &'a Ctrie<K, V, S>,
    report: &'a mut InvariantReport,
    path: Vec<u8>,
    guard: &'a Guard,
}

impl<K, V, S> Checker<'_, K, V, S>
where
    K: Hash + Eq,
    S: BuildHasher,
{
    fn inode(&mut self, i: &INode<K, V>, lev: u32) {
        match i.read(self.guard).1 {
            None => {}
            Some(MainNode::Tomb(sn)) => self.leaf(sn, InvariantId::Inv5),
            Some(MainNode::Collision(cl)) => {
                if cl.entries.len() < 2 {
                    self.violation(InvariantId::Inv1, format!("collision node with {} entries", cl.entries.len()));
                }
                let first = cl.entries.first().map(|sn| sn.hash);
                for (x, sn) in cl.entries.iter().enumerate() {
                    if Some(sn.hash) != first {
                        self.violation(InvariantId::Inv1, "collision entries with different hashcodes".into());
                    }
                    if cl.entries[..x].iter().any(|o| o.key == sn.key) {
                        self.violation(InvariantId::Inv1, "duplicate key in collision node".into());
                    }
                    self.leaf(sn, InvariantId::Inv5);
                }
            }
            Some(MainNode::CNode(cn)) => self.cnode(cn, lev),
        }
    }

    fn cnode(&mut self, cn: &CNode<K, V>, lev: u32) {
        if lev > MAX_LEVEL {
            self.violation(InvariantId::Inv3, format!("cnode at level {lev} past the last hash level"));
            return;
        }
        let bits = cn.bmp.count_ones() as usize;
        if bits != cn.array.len() {
            self.violation(
                InvariantId::Inv2,
                format!("bitmap {:#034b} has {bits} bits but array has {} slots", cn.bmp, cn.array.len()),
            );
        }
        if bits > cn.array.len() {
            self.violation(InvariantId::Inv3, "set bitmap flag without an array slot".into());
        }
        for (flag, branch) in cn.slots() {
            let r = flag.trailing_zeros();
            match branch {
                Branch::SNode(sn) => {
                    self.leaf(sn, InvariantId::Inv4);
                    if chunk(sn.hash, lev) != r {
                        self.violation(
                            InvariantId::DenseOrder,
                            format!("leaf with chunk {} stored under bitmap index {r}", chunk(sn.hash, lev)),
                        );
                    }
                }
                Branch::INode(child) => {
                    self.path.push(r as u8);
                    self.inode(child, lev + BRANCH_WIDTH);
                    self.path.pop();
                }
            }
        }
    }

    /// Hashcode prefix check for a leaf whose enclosing path is `self.path`.
    fn leaf(&mut self, sn: &SNode<K, V>, id: InvariantId) {
        let recomputed = self.trie.hash_of(&sn.key);
        if recomputed != sn.hash {
            self.violation(id, format!("stored hashcode {:#x} but key hashes to {recomputed:#x}", sn.hash));
        }
        let mismatch = self
            .path
            .iter()
            .enumerate()
            .find(|&(j, &r)| chunk(sn.hash, j as u32 * BRANCH_WIDTH) != u32::from(r));
        if let Some((j, _)) = mismatch {
            self.violation(id, format!("hashcode {:#x} leaves the path at depth {j}", sn.hash));
        }
    }

    fn violation(&mut self, id: InvariantId, description: String) {
        self.report.push(id, &self.path, description);
    }
}

/// Computes the state counts `n`, `t`, `l`, `r`, `d`.
pub fn state_metrics<K, V, S>(trie: &Ctrie<K, V, S>) -> StateMetrics {
    let guard = &epoch::pin();
    let mut m = StateMetrics::default();
    if let Some(root) = trie.root(guard) {
        metrics_inode(root, 1, &mut m, guard);
    }
    m
}

/// `depth` is the number of edges from the root cell to `i`.
fn metrics_inode<K, V>(i: &INode<K, V>, depth: u64, m: &mut StateMetrics, guard: &Guard) {
    match i.read(guard).1 {
        None => {
            m.n += 1;
            m.d += depth;
        }
        Some(MainNode::Tomb(_)) => {
            m.t += 1;
            m.d += depth + 1;
        }
        Some(MainNode::Collision(_)) => {
            m.l += 1;
            m.d += depth + 1;
        }
        Some(MainNode::CNode(cn)) => {
            m.l += 1;
            if is_single_tip(cn, guard) {
                m.r += 1;
            }
            for b in cn.array.iter() {
                match b {
                    Branch::SNode(_) => m.d += depth + 2,
                    Branch::INode(child) => metrics_inode(child, depth + 2, m, guard),
                }
            }
        }
    }
}

/// 0-way, 1-way over a tomb-inode, or 1-way over an inode whose cnode is
/// itself a single tip.
fn is_single_tip<K, V>(cn: &CNode<K, V>, guard: &Guard) -> bool {
    match &cn.array[..] {
        [] => true,
        [only] if only.tomb(guard).is_some() => true,
        [Branch::INode(i)] => match i.read(guard).1 {
            Some(MainNode::CNode(below)) => is_single_tip(below, guard),
            _ => false,
        },
        _ => false,
    }
}

/// Counts tips: cnodes holding at most one leaf or tomb-inode, any number of
/// null-inodes, and no live inode. Tips of every length are counted,
/// including one at the root.
pub fn tip_count<K, V, S>(trie: &Ctrie<K, V, S>) -> usize {
    let guard = &epoch::pin();
    let mut count = 0;
    if let Some(root) = trie.root(guard) {
        count_tips(root, &mut count, guard);
    }
    count
}

fn count_tips<K, V>(i: &INode<K, V>, count: &mut usize, guard: &Guard) {
    let Some(MainNode::CNode(cn)) = i.read(guard).1 else {
        return;
    };
    let mut singletons = 0;
    let mut live = false;
    for b in cn.array.iter() {
        match b {
            Branch::SNode(_) => singletons += 1,
            Branch::INode(child) => match child.read(guard).1 {
                None => {}
                Some(MainNode::Tomb(_)) => singletons += 1,
                Some(_) => {
                    live = true;
                    count_tips(child, count, guard);
                }
            },
        }
    }
    if !live && singletons <= 1 {
        *count += 1;
    }
}

/// Key membership evaluated straight from the structural definition,
/// without going through the lookup code path.
pub fn has_key<K, V, S, Q>(trie: &Ctrie<K, V, S>, key: &Q) -> bool
where
    K: Hash + Eq + std::borrow::Borrow<Q>,
    Q: Hash + Eq + ?Sized,
    S: BuildHasher,
{
    let guard = &epoch::pin();
    let hc = trie.hash_of(key);
    trie.root(guard)
        .is_some_and(|root| has_key_inode(root, key, hc, 0, guard))
}

fn has_key_inode<K, V, Q>(i: &INode<K, V>, key: &Q, hc: u32, lev: u32, guard: &Guard) -> bool
where
    K: std::borrow::Borrow<Q>,
    Q: Eq + ?Sized,
{
    match i.read(guard).1 {
        None => false,
        Some(MainNode::Tomb(sn)) => sn.key.borrow() == key,
        Some(MainNode::Collision(cl)) => cl.entries.iter().any(|sn| sn.key.borrow() == key),
        Some(MainNode::CNode(cn)) => {
            if lev > MAX_LEVEL {
                return false;
            }
            let r = (hc >> lev) % 32;
            if cn.bmp & (1 << r) == 0 {
                return false;
            }
            let below = ((1u32 << r) - 1) & cn.bmp;
            match cn.array.get(below.count_ones() as usize) {
                Some(Branch::SNode(sn)) => sn.key.borrow() == key,
                Some(Branch::INode(sub)) => has_key_inode(sub, key, hc, lev + BRANCH_WIDTH, guard),
                None => false,
            }
        }
    }
}

/// Every reachable binding, tombed ones included.
pub fn to_set<K, V, S>(trie: &Ctrie<K, V, S>) -> HashMap<K, V>
where
    K: Hash + Eq + Clone,
    V: Clone,
{
    let guard = &epoch::pin();
    let mut out = HashMap::new();
    if let Some(root) = trie.root(guard) {
        for_each_leaf(root, &mut |sn| {
            out.insert(sn.key.clone(), sn.value.clone());
        }, guard);
    }
    out
}

fn for_each_leaf<K, V>(i: &INode<K, V>, f: &mut dyn FnMut(&SNode<K, V>), guard: &Guard) {
    match i.read(guard).1 {
        None => {}
        Some(MainNode::Tomb(sn)) => f(sn),
        Some(MainNode::Collision(cl)) => cl.entries.iter().for_each(|sn| f(sn)),
        Some(MainNode::CNode(cn)) => {
            for b in cn.array.iter() {
                match b {
                    Branch::SNode(sn) => f(sn),
                    Branch::INode(child) => for_each_leaf(child, f, guard),
                }
            }
        }
    }
}

/// Follows the branches `hc` selects from the root until no branch is left.
pub fn longest_path<K, V, S>(trie: &Ctrie<K, V, S>, hc: u32) -> PathTrace {
    let guard = &epoch::pin();
    let mut nodes = Vec::new();
    let Some(mut i) = trie.root(guard) else {
        return PathTrace {
            nodes,
            terminal: Terminal::Empty,
        };
    };
    let mut lev = 0;
    let terminal = loop {
        nodes.push(PathNode::INode { level: lev });
        match i.read(guard).1 {
            None => break Terminal::NullINode,
            Some(MainNode::Tomb(sn)) => {
                nodes.push(PathNode::SNode {
                    hash: sn.hash,
                    tombed: true,
                });
                break Terminal::SNode;
            }
            Some(MainNode::Collision(cl)) => {
                nodes.push(PathNode::Collision {
                    entries: cl.entries.len(),
                });
                break Terminal::CollisionNode;
            }
            Some(MainNode::CNode(cn)) => {
                nodes.push(PathNode::CNode { level: lev, bmp: cn.bmp });
                if lev > MAX_LEVEL {
                    break Terminal::CNode;
                }
                let r = chunk(hc, lev);
                if cn.bmp & (1 << r) == 0 {
                    break Terminal::CNode;
                }
                match cn.array.get((((1u32 << r) - 1) & cn.bmp).count_ones() as usize) {
                    None => break Terminal::CNode,
                    Some(Branch::SNode(sn)) => {
                        nodes.push(PathNode::SNode {
                            hash: sn.hash,
                            tombed: false,
                        });
                        break Terminal::SNode;
                    }
                    Some(Branch::INode(sub)) => {
                        i = sub;
                        lev += BRANCH_WIDTH;
                    }
                }
            }
        }
    };
    PathTrace { nodes, terminal }
}

/// Hash of the node identities and bitmaps reachable from the root. Equal
/// digests over time mean no node was replaced or mutated.
pub fn structural_digest<K, V, S>(trie: &Ctrie<K, V, S>) -> u64 {
    let guard = &epoch::pin();
    let mut h = DefaultHasher::new();
    if let Some(root) = trie.root(guard) {
        digest_inode(root, &mut h, guard);
    }
    h.finish()
}

fn digest_inode<K, V>(i: &INode<K, V>, h: &mut DefaultHasher, guard: &Guard) {
    let (ptr, main) = i.read(guard);
    (ptr.as_raw() as usize).hash(h);
    match main {
        None => 0u8.hash(h),
        Some(MainNode::Tomb(sn)) => (Arc::as_ptr(sn) as usize, sn.hash).hash(h),
        Some(MainNode::Collision(cl)) => {
            for sn in cl.entries.iter() {
                (Arc::as_ptr(sn) as usize, sn.hash).hash(h);
            }
        }
        Some(MainNode::CNode(cn)) => {
            (cn.bmp, cn.array.len()).hash(h);
            for b in cn.array.iter() {
                match b {
                    Branch::SNode(sn) => (Arc::as_ptr(sn) as usize, sn.hash).hash(h),
                    Branch::INode(child) => digest_inode(child, h, guard),
                }
            }
        }
    }
}

/// One-line summary printed by `ctriectl validate` and `ctriectl metrics`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub n: u64,
    pub t: u64,
    pub l: u64,
    pub r: u64,
    pub d: u64,
    pub tips: usize,
    pub violations: usize,
}

pub fn summarize<K, V, S>(trie: &Ctrie<K, V, S>) -> Summary
where
    K: Hash + Eq,
    S: BuildHasher,
{
    let StateMetrics { n, t, l, r, d } = state_metrics(trie);
    Summary {
        n,
        t,
        l,
        r,
        d,
        tips: tip_count(trie),
        violations: validate(trie).violations.len(),
    }
}

/// Serializable picture of the trie, for rendering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeView {
    INode {
        level: u32,
        main: Option<Box<NodeView>>,
    },
    CNode {
        bmp: u32,
        branches: Vec<ChildView>,
    },
    SNode {
        key: String,
        value: String,
        hash: u32,
        tomb: bool,
    },
    Collision {
        entries: Vec<NodeView>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChildView {
    /// Bitmap index of the slot.
    pub index: u32,
    pub node: NodeView,
}

/// Renders the trie, labeling keys and values with their `Debug` output.
/// `None` for an empty trie.
pub fn describe<K: Debug, V: Debug, S>(trie: &Ctrie<K, V, S>) -> Option<NodeView> {
    let guard = &epoch::pin();
    trie.root(guard).map(|root| describe_inode(root, 0, guard))
}

fn describe_leaf<K: Debug, V: Debug>(sn: &SNode<K, V>, tomb: bool) -> NodeView {
    NodeView::SNode {
        key: format!("{:?}", sn.key),
        value: format!("{:?}", sn.value),
        hash: sn.hash,
        tomb,
    }
}

fn describe_inode<K: Debug, V: Debug>(i: &INode<K, V>, lev: u32, guard: &Guard) -> NodeView {
    let main = i.read(guard).1.map(|m| {
        Box::new(match m {
            MainNode::Tomb(sn) => describe_leaf(sn, true),
            MainNode::Collision(cl) => NodeView::Collision {
                entries: cl.entries.iter().map(|sn| describe_leaf(sn, false)).collect(),
            },
            MainNode::CNode(cn) => NodeView::CNode {
                bmp: cn.bmp,
                branches: cn
                    .slots()
                    .map(|(flag, b)| ChildView {
                        index: flag.trailing_zeros(),
                        node: match b {
                            Branch::SNode(sn) => describe_leaf(sn, false),
                            Branch::INode(child) => describe_inode(child, lev + BRANCH_WIDTH, guard),
                        },
                    })
                    .collect(),
            },
        })
    });
    NodeView::INode { level: lev, main }
}
