//! Byte-level snapshot of the task document served to the elicitation UI.
//! Regenerate with `UPDATE_GOLDEN=1 cargo test -p riskpref-core --test golden`.

use std::path::PathBuf;

use riskpref_core::elicitation::tasks_json;

#[test]
fn tasks_document_matches_snapshot() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/tasks.json");
    let doc = tasks_json();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &doc).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(doc, expected);
}
