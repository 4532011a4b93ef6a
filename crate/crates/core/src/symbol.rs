//! Interned symbols and logical variables.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// An interned identifier: a functor name, a constant or a range value.
///
/// Two symbols are equal iff they were interned from the same string in the
/// same [`Symbols`] table.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Sym(pub u32);

/// A logical variable. Logvars are local to a parfactor; the id carries no
/// domain, the parfactor's constraint column does.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Logvar(pub u32);

impl fmt::Display for Logvar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V{}", self.0)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Symbols {
    names: Vec<String>,
    index: BTreeMap<String, Sym>,
}

impl Symbols {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> Sym {
        if let Some(&s) = self.index.get(name) {
            return s;
        }
        let s = Sym(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), s);
        s
    }

    pub fn get(&self, name: &str) -> Option<Sym> {
        self.index.get(name).copied()
    }

    pub fn name(&self, s: Sym) -> &str {
        &self.names[s.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Returns a name derived from `base` that is not yet interned.
    pub fn fresh_name(&self, base: &str) -> String {
        if self.get(base).is_none() {
            return base.to_string();
        }
        let mut i = 1usize;
        loop {
            let cand = alloc::format!("{base}_{i}");
            if self.get(&cand).is_none() {
                return cand;
            }
            i += 1;
        }
    }
}
