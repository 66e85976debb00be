use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Insert,
    Lookup,
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Insert(u64, u64),
    Lookup(u64),
    Remove(u64),
}

impl Op {
    pub fn kind(&self) -> OpKind {
        match self {
            Op::Insert(..) => OpKind::Insert,
            Op::Lookup(_) => OpKind::Lookup,
            Op::Remove(_) => OpKind::Remove,
        }
    }

    pub fn key(&self) -> u64 {
        match *self {
            Op::Insert(k, _) | Op::Lookup(k) | Op::Remove(k) => k,
        }
    }

    pub fn value(&self) -> Option<u64> {
        match *self {
            Op::Insert(_, v) => Some(v),
            _ => None,
        }
    }
}

/// Result of one operation. Inserts return nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Found(u64),
    NotFound,
    Unit,
}

impl From<Option<u64>> for Outcome {
    fn from(v: Option<u64>) -> Self {
        v.map_or(Outcome::NotFound, Outcome::Found)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Found(v) => write!(f, "found({v})"),
            Outcome::NotFound => f.write_str("notfound"),
            Outcome::Unit => f.write_str("unit"),
        }
    }
}

/// Sequential reference map.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ModelMap {
    entries: BTreeMap<u64, u64>,
}

impl ModelMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply(&mut self, op: Op) -> Outcome {
        match op {
            Op::Insert(k, v) => {
                self.entries.insert(k, v);
                Outcome::Unit
            }
            Op::Lookup(k) => self.entries.get(&k).copied().into(),
            Op::Remove(k) => self.entries.remove(&k).into(),
        }
    }

    pub fn entries(&self) -> &BTreeMap<u64, u64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abstract_set_semantics() {
        let mut m = ModelMap::new();
        assert_eq!(m.apply(Op::Lookup(1)), Outcome::NotFound);
        assert_eq!(m.apply(Op::Insert(1, 5)), Outcome::Unit);
        assert_eq!(m.apply(Op::Insert(1, 6)), Outcome::Unit);
        assert_eq!(m.apply(Op::Lookup(1)), Outcome::Found(6));
        assert_eq!(m.apply(Op::Remove(1)), Outcome::Found(6));
        assert_eq!(m.apply(Op::Remove(1)), Outcome::NotFound);
        assert!(m.is_empty());
    }
}
