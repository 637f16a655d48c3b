//! Oracles, synthetic corpora and fixture readers shared by the acceptance
//! suite.

pub mod golden;
pub mod oracle;
pub mod reference;
pub mod synthetic;

use std::path::PathBuf;

/// Root of the workspace checkout.
pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .and_then(|p| p.parent())
        .expect("crate lives two levels below the workspace root")
        .to_path_buf()
}

/// Fixture directory of the core crate.
pub fn core_fixtures() -> PathBuf {
    workspace_root().join("crates/core/tests/fixtures")
}

/// Fixture directory of the command-line crate.
pub fn cli_fixtures() -> PathBuf {
    workspace_root().join("crates/cli/tests/fixtures")
}
