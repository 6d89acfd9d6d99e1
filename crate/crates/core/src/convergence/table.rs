use std::io::Write;

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "n,err_H,err_graph,g_n,h_n,bound_graph,bound_H,pass";

/// Defects of one Galerkin level for one datum `w`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    /// `‖P_n(T+A)w − (T_n+A_n)P_n w‖`
    pub consistency: f64,
    /// `‖w − J_nP_n w‖` in the graph norm
    pub projection_graph: f64,
    /// `‖w − J_nP_n w‖` in the plain norm
    pub projection_h: f64,
}

impl Defect {
    /// Unnormalised graph-type defect.
    pub fn g(&self) -> f64 {
        self.consistency.max(self.projection_graph)
    }
    /// Unnormalised plain-norm defect.
    pub fn h(&self) -> f64 {
        self.consistency.max(self.projection_h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub err_h: f64,
    pub err_graph: f64,
    pub g_n: f64,
    pub h_n: f64,
    pub bound_graph: f64,
    pub bound_h: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvent_norm: Option<f64>,
}

/// A named table-level check. `margin` is the largest `lhs − rhs` seen, so a
/// passing check has `margin ≤ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
}

impl Check {
    pub fn new(name: &str, margin: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: margin <= 0.0,
            margin,
        }
    }

    /// Check built from `(lhs, rhs)` pairs, each required to satisfy `lhs ≤ rhs`.
    pub fn all_le(name: &str, pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let margin = pairs
            .into_iter()
            .map(|(l, r)| if l.is_nan() { f64::INFINITY } else { l - r })
            .fold(f64::NEG_INFINITY, f64::max);
        Self::new(name, if margin == f64::NEG_INFINITY { 0.0 } else { margin })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Oracle,
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub kind: TableKind,
    pub seed: Option<u64>,
    pub descriptor: serde_json::Value,
    pub rows: Vec<ConvergenceRow>,
    pub checks: Vec<Check>,
}

impl ConvergenceTable {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.checks.iter().all(|c| c.pass)
    }

    pub fn failing_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.n,
                r.err_h,
                r.err_graph,
                r.g_n,
                r.h_n,
                r.bound_graph,
                r.bound_h,
                u8::from(r.pass)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_declared_header_and_flags() {
        let row = ConvergenceRow {
            n: 4,
            err_h: 0.5,
            err_graph: 1.0,
            g_n: 0.1,
            h_n: 0.05,
            bound_graph: 2.0,
            bound_h: 1.0,
            pass: true,
            tail_bound: None,
            resolvent_norm: None,
        };
        let t = ConvergenceTable {
            kind: TableKind::Sweep,
            seed: Some(3),
            descriptor: serde_json::Value::Null,
            rows: vec![row.clone(), ConvergenceRow { pass: false, ..row }],
            checks: vec![],
        };
        let csv = t.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("4,5.0000000000000000e-1,"));
        assert!(lines[1].ends_with(",1"));
        assert!(lines[2].ends_with(",0"));
        assert!(!t.pass());
    }

    #[test]
    fn check_margins() {
        let c = Check::all_le("x", [(1.0, 2.0), (0.5, 0.4)]);
        assert!(!c.pass);
        assert!((c.margin - 0.1).abs() < 1e-15);
        assert!(Check::all_le("empty", []).pass);
        assert!(!Check::all_le("nan", [(f64::NAN, 1.0)]).pass);
    }
}
