//! A `Ctrie<u32, u32>` with identity hashing exposed to JavaScript, so the
//! bitmap index of each slot is just a 5-bit chunk of the key.

use ctrie::validate::{self, PathNode};
use ctrie::{Ctrie, IdentityHash};
use serde_json::json;
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct TrieDemo {
    trie: Ctrie<u32, u32, IdentityHash>,
}

impl Default for TrieDemo {
    fn default() -> Self {
        Self::new()
    }
}

#[wasm_bindgen]
impl TrieDemo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> TrieDemo {
        TrieDemo {
            trie: Ctrie::with_hasher(IdentityHash),
        }
    }

    pub fn insert(&self, key: u32, value: u32) {
        self.trie.insert(key, value);
    }

    pub fn remove(&self, key: u32) -> Option<u32> {
        self.trie.remove(&key)
    }

    pub fn lookup(&self, key: u32) -> Option<u32> {
        self.trie.lookup(&key)
    }

    /// JSON with the node tree, the state counts and the invariant report.
    pub fn snapshot(&self) -> String {
        json!({
            "root": validate::describe(&self.trie),
            "summary": validate::summarize(&self.trie),
            "violations": validate::validate(&self.trie).violations,
        })
        .to_string()
    }

    /// Bitmap indices followed by a lookup of `key`, as a JSON array.
    pub fn path(&self, key: u32) -> String {
        let trace = validate::longest_path(&self.trie, key);
        let indices: Vec<u32> = trace
            .nodes
            .iter()
            .filter_map(|n| match n {
                PathNode::CNode { level, .. } => Some((key >> level) & 31),
                _ => None,
            })
            .collect();
        json!(indices).to_string()
    }

    /// Keys currently stored, ascending.
    pub fn keys(&self) -> Vec<u32> {
        let mut keys: Vec<u32> = validate::to_set(&self.trie).into_keys().collect();
        keys.sort_unstable();
        keys
    }
}
