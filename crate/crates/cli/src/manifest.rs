//! Run manifest: enough to reproduce a run exactly, byte-stable across
//! repeated runs (no timestamps).

use std::fmt::Write as _;

pub struct Manifest {
    lines: Vec<String>,
}

impl Manifest {
    pub fn new(config_hash: &str, seed: u64, loss: &str, threads: usize) -> Self {
        let mut lines = vec!["shotlink run manifest v1".to_string()];
        lines.push(format!("config_hash {config_hash}"));
        lines.push(format!("seed {seed}"));
        lines.push(format!("loss {loss}"));
        lines.push(format!("threads {threads}"));
        Self { lines }
    }

    pub fn stage(&mut self, index: usize, name: &str, details: &[(&str, String)]) {
        let mut line = format!("stage {index} {name} ok");
        for (k, v) in details {
            let _ = write!(line, " {k}={v}");
        }
        self.lines.push(line);
    }

    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key} {value}"));
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}
