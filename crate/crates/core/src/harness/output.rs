use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::energetics::{Problem, State};
use crate::error::Result;

/// Provenance stamped into every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stamp {
    pub config_sha256: String,
    pub seed: u64,
}

impl Stamp {
    pub fn header(&self) -> String {
        format!("# config_sha256={}, seed={}\n", self.config_sha256, self.seed)
    }
}

/// Column-oriented CSV table with a provenance comment line.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, stamp: &Stamp) -> String {
        let mut s = stamp.header();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    /// Values of one column parsed back to numbers.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect())
    }
}

/// Shortest round-trip formatting.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn int(v: usize) -> String {
    v.to_string()
}

pub fn flag(v: bool) -> String {
    u8::from(v).to_string()
}

/// Node table: index, lattice position, coordinates, magnetization and
/// displacement components (`v1 v2 v` on plates, `u1 u2 u3` in the bulk).
pub fn render_state(problem: &Problem, state: &State, t: f64, stamp: &Stamp) -> String {
    let g = &problem.grid;
    let mut s = stamp.header();
    let _ = writeln!(s, "# t={}, nx={}, ny={}, nz={}", num(t), g.nx, g.ny, g.nz);
    let (a, b, c) = if problem.is_plate() { ("v1", "v2", "v") } else { ("u1", "u2", "u3") };
    let _ = writeln!(s, "node i j k x1 x2 z3 m1 m2 m3 {a} {b} {c}");
    let (u0, u1, u2) = (state.component(0), state.component(1), state.component(2));
    for (n, m) in state.m.values().iter().enumerate() {
        let (i, j, k) = g.ijk(n);
        let x = g.coords(n);
        let _ = writeln!(
            s,
            "{n} {i} {j} {k} {} {} {} {} {} {} {} {} {}",
            num(x[0]),
            num(x[1]),
            num(x[2]),
            num(m[0]),
            num(m[1]),
            num(m[2]),
            num(u0[n]),
            num(u1[n]),
            num(u2[n])
        );
    }
    s
}

/// JSON document with the provenance fields merged in at the top level.
pub fn render_json<T: Serialize>(body: &T, stamp: &Stamp) -> String {
    let mut v = serde_json::to_value(body).expect("serializable");
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("config_sha256".into(), stamp.config_sha256.clone().into());
        map.insert("seed".into(), stamp.seed.into());
    }
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

/// Files produced by one experiment, written only on request.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut out = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, contents)?;
            out.push(path);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 0.0, 12345.678] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn csv_has_stamp() {
        let mut t = CsvTable::new(vec!["a", "b"]);
        t.push(vec![num(1.0), num(2.5)]);
        let s = t.render(&Stamp { config_sha256: "ab".into(), seed: 7 });
        assert_eq!(s, "# config_sha256=ab, seed=7\na,b\n1e0,2.5e0\n");
        assert_eq!(t.column("b"), Some(vec![2.5]));
    }
}
