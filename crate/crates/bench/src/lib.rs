//! Shared inputs for the benchmarks.

use std::path::Path;

use alemannic::dataset::{load_manifest, Segment};

/// The 80-segment binary fixture used by the core tests.
pub fn binary_fixture() -> Vec<Segment> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/binary_test_80.jsonl");
    load_manifest(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
