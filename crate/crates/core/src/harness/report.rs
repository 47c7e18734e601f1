//! JSON output of reports and campaign results.

use std::fs;
use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Pretty JSON with fields in declaration order and maps sorted by key.
pub fn to_json<T: Serialize>(r: &T) -> String {
    serde_json::to_string_pretty(r).expect("reports always serialize")
}

pub fn emit_report<T: Serialize>(r: &T, path: &Path) -> io::Result<()> {
    let mut s = to_json(r);
    s.push('\n');
    fs::write(path, s)
}

pub fn parse_report<T: DeserializeOwned>(s: &str) -> serde_json::Result<T> {
    serde_json::from_str(s)
}
