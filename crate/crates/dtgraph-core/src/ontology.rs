//! Type taxonomy with alias resolution.
//!
//! A taxonomy is a tree of canonical type names rooted at the implicit top
//! type `Thing`, plus an alias table mapping vocabulary variants onto
//! canonical names. It stands in for the terminology layer of the knowledge
//! base: merging uses it to decide when two type terms denote the same kind
//! of component, and taxonomy-aware mining uses it to generalize labels.
//!
//! Only node types are taxonomized; relation labels are flat vocabulary.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use thiserror::Error;

pub const ROOT: &str = "Thing";

#[derive(Error, Debug)]
pub enum TaxonomyError {
    #[error("taxonomy document: {0}")]
    Format(String),
    #[error("type {0} is declared twice")]
    DuplicateType(String),
    #[error("the root type {ROOT} is implied and must not be declared")]
    RootDeclared,
    #[error("type {child} names unknown parent {parent}")]
    UnknownParent { child: String, parent: String },
    #[error("parent chain of {0} contains a cycle")]
    Cycle(String),
    #[error("alias {alias} is claimed by both {first} and {second}")]
    ConflictingAlias { alias: String, first: String, second: String },
    #[error("alias {alias} collides with canonical type {canonical}")]
    AliasShadowsType { alias: String, canonical: String },
    #[error("unknown type {0}")]
    UnknownType(String),
    #[error("type name must be non-empty")]
    EmptyName,
}

/// Outcome of resolving a raw type term against the taxonomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeResolution {
    Canonical(String),
    /// Term not covered by the taxonomy; kept verbatim and treated as a
    /// direct child of the root for subtype and generalization purposes.
    Unresolved(String),
}

impl TypeResolution {
    pub fn name(&self) -> &str {
        match self {
            TypeResolution::Canonical(s) | TypeResolution::Unresolved(s) => s,
        }
    }

    pub fn is_resolved(&self) -> bool {
        matches!(self, TypeResolution::Canonical(_))
    }
}

#[derive(Debug, Clone)]
struct TypeEntry {
    parent: Option<String>, // None only for the root
    children: Vec<String>,
}

/// Immutable type tree; freely shareable across threads after load.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    types: BTreeMap<String, TypeEntry>,
    /// case-folded name or alias -> canonical name
    lookup: BTreeMap<String, String>,
}

fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}

#[derive(Deserialize)]
struct TaxonomyDoc {
    types: Vec<TypeDecl>,
}

#[derive(Deserialize)]
struct TypeDecl {
    name: String,
    parent: String,
    #[serde(default)]
    aliases: Vec<String>,
}

impl Default for Taxonomy {
    fn default() -> Self {
        Taxonomy::empty()
    }
}

impl Taxonomy {
    /// Taxonomy containing only the root type.
    pub fn empty() -> Taxonomy {
        let mut types = BTreeMap::new();
        types.insert(ROOT.to_string(), TypeEntry { parent: None, children: Vec::new() });
        let mut lookup = BTreeMap::new();
        lookup.insert(fold(ROOT), ROOT.to_string());
        Taxonomy { types, lookup }
    }

    /// Loads and validates a taxonomy document:
    /// `{"types":[{"name","parent","aliases":[...]}]}` with `Thing` implied.
    pub fn load(text: &str) -> Result<Taxonomy, TaxonomyError> {
        let doc: TaxonomyDoc =
            serde_json::from_str(text).map_err(|e| TaxonomyError::Format(e.to_string()))?;
        Taxonomy::from_entries(
            doc.types
                .into_iter()
                .map(|d| (d.name, d.parent, d.aliases)),
        )
    }

    pub fn from_entries(
        entries: impl IntoIterator<Item = (String, String, Vec<String>)>,
    ) -> Result<Taxonomy, TaxonomyError> {
        let entries: Vec<(String, String, Vec<String>)> = entries.into_iter().collect();
        let mut tax = Taxonomy::empty();

        // first pass: declare canonical names
        let mut parents: BTreeMap<String, String> = BTreeMap::new();
        for (name, parent, _) in &entries {
            let name = name.trim();
            if name.is_empty() {
                return Err(TaxonomyError::EmptyName);
            }
            if name == ROOT {
                return Err(TaxonomyError::RootDeclared);
            }
            if tax.lookup.contains_key(&fold(name)) {
                return Err(TaxonomyError::DuplicateType(name.to_string()));
            }
            tax.lookup.insert(fold(name), name.to_string());
            parents.insert(name.to_string(), parent.trim().to_string());
        }

        // second pass: resolve parents and detect cycles by walking to the root
        for name in parents.keys() {
            let mut hops = 0usize;
            let mut cur = name.clone();
            while let Some(parent) = parents.get(&cur).cloned() {
                let canonical_parent = tax
                    .lookup
                    .get(&fold(&parent))
                    .cloned()
                    .ok_or_else(|| TaxonomyError::UnknownParent { child: cur.clone(), parent: parent.clone() })?;
                if canonical_parent == ROOT {
                    break;
                }
                hops += 1;
                if hops > parents.len() {
                    return Err(TaxonomyError::Cycle(name.clone()));
                }
                cur = canonical_parent;
            }
        }

        // third pass: build the tree in declaration order
        for (name, parent, _) in &entries {
            let name = name.trim().to_string();
            let parent = tax.lookup[&fold(parent)].clone();
            tax.types.insert(name.clone(), TypeEntry { parent: Some(parent.clone()), children: Vec::new() });
        }
        let names: Vec<String> = tax.types.keys().cloned().collect();
        for name in &names {
            if let Some(parent) = tax.types[name].parent.clone() {
                tax.types.get_mut(&parent).expect("parent resolved above").children.push(name.clone());
            }
        }

        // fourth pass: aliases
        for (name, _, aliases) in &entries {
            let canonical = name.trim().to_string();
            for alias in aliases {
                let key = fold(alias);
                if let Some(existing) = tax.lookup.get(&key) {
                    if tax.types.contains_key(existing) && fold(existing) == key {
                        return Err(TaxonomyError::AliasShadowsType {
                            alias: alias.clone(),
                            canonical: existing.clone(),
                        });
                    }
                    return Err(TaxonomyError::ConflictingAlias {
                        alias: alias.clone(),
                        first: existing.clone(),
                        second: canonical.clone(),
                    });
                }
                tax.lookup.insert(key, canonical.clone());
            }
        }
        Ok(tax)
    }

    /// Number of types including the implicit root.
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.len() == 1
    }

    pub fn contains(&self, name: &str) -> bool {
        self.types.contains_key(name)
    }

    /// Resolves a raw term: canonical names and aliases match after trim and
    /// case fold; anything else is returned verbatim as unresolved.
    pub fn canonical_type(&self, term: &str) -> TypeResolution {
        match self.lookup.get(&fold(term)) {
            Some(canonical) => TypeResolution::Canonical(canonical.clone()),
            None => TypeResolution::Unresolved(term.to_string()),
        }
    }

    /// True iff `a` equals `b` or is a descendant of `b`. Both must be
    /// canonical type names.
    pub fn is_subtype(&self, a: &str, b: &str) -> Result<bool, TaxonomyError> {
        if !self.types.contains_key(b) {
            return Err(TaxonomyError::UnknownType(b.to_string()));
        }
        let mut cur = a.to_string();
        if !self.types.contains_key(&cur) {
            return Err(TaxonomyError::UnknownType(cur));
        }
        loop {
            if cur == b {
                return Ok(true);
            }
            match &self.types[&cur].parent {
                Some(parent) => cur = parent.clone(),
                None => return Ok(false),
            }
        }
    }

    /// Least common ancestor of two canonical types; the join of the tree
    /// order (commutative, associative, idempotent).
    pub fn generalize(&self, a: &str, b: &str) -> Result<String, TaxonomyError> {
        let path_a = self.path_to_root(a)?;
        let path_b = self.path_to_root(b)?;
        let set: BTreeSet<&String> = path_b.iter().collect();
        for candidate in &path_a {
            if set.contains(candidate) {
                return Ok(candidate.clone());
            }
        }
        Ok(ROOT.to_string()) // unreachable: every path ends at the root
    }

    fn path_to_root(&self, name: &str) -> Result<Vec<String>, TaxonomyError> {
        if !self.types.contains_key(name) {
            return Err(TaxonomyError::UnknownType(name.to_string()));
        }
        let mut path = vec![name.to_string()];
        let mut cur = name.to_string();
        while let Some(parent) = self.types[&cur].parent.clone() {
            path.push(parent.clone());
            cur = parent;
        }
        Ok(path)
    }

    /// Like [`is_subtype`](Self::is_subtype) but treating unknown terms as
    /// direct children of the root, so ingestion vocabulary outside the
    /// taxonomy never fails a comparison.
    pub fn subtype_lenient(&self, a: &str, b: &str) -> bool {
        if a == b || b == ROOT {
            return true;
        }
        match (self.types.contains_key(a), self.types.contains_key(b)) {
            (true, true) => self.is_subtype(a, b).unwrap_or(false),
            // an unknown term has no descendants and no ancestors besides the root
            _ => false,
        }
    }

    /// Least common ancestor with unknown terms treated as root children.
    pub fn generalize_lenient(&self, a: &str, b: &str) -> String {
        if a == b {
            return a.to_string();
        }
        match (self.types.contains_key(a), self.types.contains_key(b)) {
            (true, true) => self.generalize(a, b).expect("both types known"),
            _ => ROOT.to_string(),
        }
    }

    /// Ancestor chain of a term from itself up to the root, unknown terms
    /// included as root children.
    pub fn ancestors_lenient(&self, term: &str) -> Vec<String> {
        if self.types.contains_key(term) {
            self.path_to_root(term).expect("term known")
        } else {
            vec![term.to_string(), ROOT.to_string()]
        }
    }

    /// Direct children of a canonical type, sorted. Unknown terms have none.
    pub fn children_of(&self, name: &str) -> Vec<String> {
        match self.types.get(name) {
            Some(entry) => {
                let mut children = entry.children.clone();
                children.sort();
                children
            }
            None => Vec::new(),
        }
    }

    /// All canonical names, sorted.
    pub fn type_names(&self) -> Vec<String> {
        self.types.keys().cloned().collect()
    }
}
