//! Frozen regression values under `tests/golden/`. Set
//! `PACER_RECORD_GOLDEN=1` to write missing or changed entries.

use serde_json::Value;
use std::hash::Hasher;
use std::path::PathBuf;

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"))
}

pub fn check(name: &str, actual: Value) {
    let p = path(name);
    let record = std::env::var("PACER_RECORD_GOLDEN").is_ok_and(|v| v == "1");
    if record {
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(&p, serde_json::to_string_pretty(&actual).unwrap() + "\n").unwrap();
        return;
    }
    let text = std::fs::read_to_string(&p)
        .unwrap_or_else(|_| panic!("golden {name} missing; run with PACER_RECORD_GOLDEN=1"));
    let expected: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(actual, expected, "golden {name} changed");
}

pub fn checksum_f32(values: &[f32]) -> String {
    let mut h = fnv::FnvHasher::default();
    for v in values {
        h.write(&v.to_bits().to_le_bytes());
    }
    format!("{:016x}", h.finish())
}

pub fn checksum_bytes(bytes: &[u8]) -> String {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    format!("{:016x}", h.finish())
}
