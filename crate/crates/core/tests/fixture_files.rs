//! The worked examples shipped as JSON under `fixtures/` must match the
//! in-code builders. `UPDATE_FIXTURES=1` rewrites them.

use std::path::PathBuf;

use capexp::fixtures;
use capexp::io::{instance_from_json, instance_to_json};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[test]
fn fixture_files_match_builders() {
    let update = std::env::var_os("UPDATE_FIXTURES").is_some();
    for (name, inst) in fixtures::all() {
        let path = dir().join(format!("{name}.json"));
        let text = instance_to_json(&inst);
        if update {
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        let on_disk = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(instance_from_json(&on_disk).unwrap(), inst, "{name}");
    }
}
