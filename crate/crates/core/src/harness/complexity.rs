use std::fmt;

use crate::code::{edge_counts, Code};

/// Per-iteration operation counts and parameter storage for one decoder family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityRow {
    pub name: &'static str,
    pub tanh: usize,
    pub mul: usize,
    pub add: usize,
    pub cmp: usize,
    pub sign: usize,
    /// Parameters stored per iteration (weight/bias pairs count as one each).
    pub storage: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityReport {
    /// Edge count of the lowest rate, which activates every edge.
    pub edges: usize,
    /// Active edges per ladder rate, highest rate first.
    pub rate_edges: Vec<usize>,
    pub base_entries: usize,
    pub lifting: usize,
    pub layers: usize,
    pub rows: Vec<ComplexityRow>,
}

impl ComplexityReport {
    pub fn row(&self, name: &str) -> Option<&ComplexityRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Scalars stored over all layers: two per stored pair.
    pub fn total_parameters(&self, name: &str) -> Option<usize> {
        self.row(name).map(|r| 2 * r.storage * self.layers)
    }
}

/// Counts the work of one iteration of each decoder family on `code`.
pub fn complexity_report(code: &Code, layers: usize) -> ComplexityReport {
    let rate_edges = edge_counts(&code.ladder);
    let e = code.tanner.edge_count();
    let separate: usize = rate_edges.iter().sum();
    let base_entries = code.base.entries.len();
    let row = |name, tanh, mul, add, cmp, sign, storage| ComplexityRow { name, tanh, mul, add, cmp, sign, storage };
    let rows = vec![
        row("bp", 2 * e, 2 * e, 2 * e, 0, 0, 0),
        row("cnms", 0, e, 2 * e, 2 * e, 2 * e, 1),
        row("nnbp", 2 * e, 3 * e, 3 * e, 0, 0, separate),
        row("rc-nnbp", 2 * e, 3 * e, 3 * e, 0, 0, e),
        row("nnms", 0, e, 3 * e, 2 * e, 2 * e, separate),
        row("rc-nnms", 0, e, 3 * e, 2 * e, 2 * e, e),
        row("pbrc-nnms", 0, e, 3 * e, 2 * e, 2 * e, base_entries),
    ];
    ComplexityReport { edges: e, rate_edges, base_entries, lifting: code.z(), layers, rows }
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "edges E = {} (per rate: {:?}), Z = {}, base entries = {}", self.edges, self.rate_edges, self.lifting, self.base_entries)?;
        writeln!(f, "{:<10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>12} {:>14}", "decoder", "tanh", "mult", "add", "comp", "sign", "storage/it", "params(L)")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>12} {:>14}",
                r.name,
                r.tanh,
                r.mul,
                r.add,
                r.cmp,
                r.sign,
                r.storage,
                if r.storage <= 1 { r.storage } else { 2 * r.storage * self.layers }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_counts() {
        let code = Code::toy(4);
        let rep = complexity_report(&code, 5);
        let e = code.tanner.edge_count();
        assert_eq!(e, code.base.entries.len() * 4);
        assert_eq!(rep.edges, e);
        assert_eq!(rep.rate_edges, edge_counts(&code.ladder));
        assert_eq!(*rep.rate_edges.last().unwrap(), e);
        assert_eq!(rep.row("bp").unwrap().tanh, 2 * e);
        assert_eq!(rep.row("cnms").unwrap().storage, 1);
        assert_eq!(rep.row("nnms").unwrap().storage, rep.rate_edges.iter().sum::<usize>());
        assert_eq!(rep.row("rc-nnms").unwrap().storage, e);
        assert_eq!(rep.row("pbrc-nnms").unwrap().storage * code.z(), e);
        assert_eq!(rep.total_parameters("rc-nnbp"), Some(2 * e * 5));
        assert!(rep.to_string().contains("rc-nnms"));
    }
}
