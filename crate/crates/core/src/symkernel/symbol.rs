use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use super::SymError;

/// What a symbol stands for. The kind of a name never changes once interned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    /// Equilibrium coefficients and relaxation parameters.
    Parameter,
    /// Velocity and time scales.
    Scale,
    /// Cosine and sine of a symbolic rotation angle.
    Trig,
    /// Placeholders such as derivative or wave-vector components.
    Auxiliary,
}

/// An interned symbol. Ids are dense and stable for the life of the process;
/// the id order is the variable order used by monomial comparisons.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

struct Registry {
    entries: Vec<(String, SymbolKind)>,
    by_name: HashMap<String, u32>,
}

fn registry() -> &'static RwLock<Registry> {
    static REG: OnceLock<RwLock<Registry>> = OnceLock::new();
    REG.get_or_init(|| {
        RwLock::new(Registry {
            entries: Vec::new(),
            by_name: HashMap::new(),
        })
    })
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Symbol {
    /// Interns `name` with the given kind, returning the existing symbol if the
    /// name is already known with the same kind.
    pub fn new(name: &str, kind: SymbolKind) -> Result<Symbol, SymError> {
        if !valid_name(name) {
            return Err(SymError::InvalidSymbolName(name.to_string()));
        }
        {
            let reg = registry().read().expect("symbol registry poisoned");
            if let Some(&id) = reg.by_name.get(name) {
                let existing = reg.entries[id as usize].1;
                return if existing == kind {
                    Ok(Symbol(id))
                } else {
                    Err(SymError::SymbolKindMismatch {
                        name: name.to_string(),
                        existing,
                        requested: kind,
                    })
                };
            }
        }
        let mut reg = registry().write().expect("symbol registry poisoned");
        if let Some(&id) = reg.by_name.get(name) {
            let existing = reg.entries[id as usize].1;
            return if existing == kind {
                Ok(Symbol(id))
            } else {
                Err(SymError::SymbolKindMismatch {
                    name: name.to_string(),
                    existing,
                    requested: kind,
                })
            };
        }
        let id = reg.entries.len() as u32;
        reg.entries.push((name.to_string(), kind));
        reg.by_name.insert(name.to_string(), id);
        Ok(Symbol(id))
    }

    /// Panicking shorthand for names known to be valid.
    pub fn named(name: &str, kind: SymbolKind) -> Symbol {
        Symbol::new(name, kind).unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn lookup(name: &str) -> Option<Symbol> {
        let reg = registry().read().expect("symbol registry poisoned");
        reg.by_name.get(name).map(|&id| Symbol(id))
    }

    pub fn name(self) -> String {
        let reg = registry().read().expect("symbol registry poisoned");
        reg.entries[self.0 as usize].0.clone()
    }

    pub fn kind(self) -> SymbolKind {
        let reg = registry().read().expect("symbol registry poisoned");
        reg.entries[self.0 as usize].1
    }

    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(i: usize) -> Symbol {
        Symbol(i as u32)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
