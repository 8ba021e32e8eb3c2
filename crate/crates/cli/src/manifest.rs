//! Run manifests. Every command that writes files drops a `key = value`
//! manifest next to them recording what produced the outputs: command,
//! version, inputs, the effective config, and wall-clock stats. Keys under
//! `time.` vary between runs; everything else is a pure function of inputs
//! and seed, which is what the determinism tests check.

use std::fmt::Write as _;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub struct Manifest {
    entries: Vec<(String, String)>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &str) -> Manifest {
        let mut m = Manifest { entries: Vec::new(), started: Instant::now() };
        m.push("command", command);
        m.push("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Splices `key = value` lines in under `prefix.`; used to snapshot
    /// config files into the manifest.
    pub fn push_block(&mut self, prefix: &str, text: &str) {
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                self.push(&format!("{prefix}.{}", k.trim()), v.trim());
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k} = {v}").unwrap();
        }
        let finished = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        writeln!(out, "time.finished_unix_ms = {finished}").unwrap();
        writeln!(out, "time.elapsed_ms = {}", self.started.elapsed().as_millis()).unwrap();
        out
    }
}
