//! On-disk causal-graph spec format.
//!
//! A causal graph is declared as a TOML document with a `name` and a list of
//! `[[types]]` tables:
//!
//! ```toml
//! name = "pedestrian"
//!
//! [[types]]
//! name = "S"            # type label
//! parents = []          # labels of causal parents
//! physical = true       # instantiated as a simulator object
//! max_count = 1         # instance cap
//! min_count = 1         # 0 marks the type optional
//! ```
//!
//! `parents` defaults to empty, `physical` to true and both counts to 1.
//! Files are validated on load: undeclared parents and cyclic parent
//! relations are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, TypeDecl};

#[derive(Serialize, Deserialize)]
struct CgFile {
    name: String,
    types: Vec<TypeDecl>,
}

/// Loads and validates a causal graph from a TOML spec file.
pub fn load_causal_graph(path: &Path) -> Result<CausalGraph> {
    let text = std::fs::read_to_string(path)?;
    let file: CgFile = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    CausalGraph::build(&file.name, file.types)
}

/// Writes a causal graph back out as a TOML spec file.
pub fn save_causal_graph(cg: &CausalGraph, path: &Path) -> Result<()> {
    let file = CgFile {
        name: cg.name().to_string(),
        types: cg.decls().to_vec(),
    };
    let text = toml::to_string_pretty(&file)
        .map_err(|e| Error::Config(format!("serialize causal graph: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}
