//! Protograph (base graph) description of a raptor-like QC-LDPC code and its text format.
//!
//! ```text
//! # comment
//! BG <rows> <cols> <info_cols> <precode_rows>
//! PUNCTURED <count>          (optional: leading information columns never transmitted)
//! RATES
//! <rows_used> <cols_used> <transmitted_count>     (one line per rate, highest rate first)
//! <row> <col> <shift>                              (one line per base entry)
//! ```
//!
//! A negative shift is the conventional "no circulant" marker and is skipped.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BaseEntry {
    pub row: usize,
    pub col: usize,
    pub shift: usize,
}

/// One nested rate: the first `rows_used` base rows and `cols_used` base columns,
/// of which `transmitted` lifted bits are sent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RateBoundary {
    pub rows_used: usize,
    pub cols_used: usize,
    pub transmitted: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseGraph {
    pub rows: usize,
    pub cols: usize,
    pub info_cols: usize,
    pub precode_rows: usize,
    /// Leading information columns that are always punctured.
    pub punctured_cols: usize,
    /// Highest rate first; the last boundary covers the whole graph.
    pub rate_boundaries: Vec<RateBoundary>,
    /// Sorted by `(row, col)`.
    pub entries: Vec<BaseEntry>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_fields<const K: usize>(line_no: usize, fields: &[&str]) -> Result<[i64; K]> {
    if fields.len() != K {
        return Err(parse_err(line_no, format!("expected {K} fields, found {}", fields.len())));
    }
    let mut out = [0i64; K];
    for (slot, f) in out.iter_mut().zip(fields) {
        *slot = f
            .parse()
            .map_err(|_| parse_err(line_no, format!("not an integer: {f:?}")))?;
    }
    Ok(out)
}

fn non_negative(line_no: usize, v: i64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| parse_err(line_no, format!("{what} must be non-negative")))
}

impl BaseGraph {
    /// Parses and validates the text format described in the module docs.
    pub fn parse(text: &str) -> Result<BaseGraph> {
        let mut header: Option<(usize, [usize; 4])> = None;
        let mut punctured = 0usize;
        let mut in_rates = false;
        let mut rates: Vec<(usize, RateBoundary)> = Vec::new();
        let mut entries: Vec<(usize, BaseEntry)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            match fields[0] {
                "BG" => {
                    if header.is_some() {
                        return Err(parse_err(line_no, "duplicate BG header"));
                    }
                    let v = parse_fields::<4>(line_no, &fields[1..])?;
                    let mut h = [0usize; 4];
                    for (dst, (val, name)) in h
                        .iter_mut()
                        .zip(v.iter().zip(["rows", "cols", "info_cols", "precode_rows"]))
                    {
                        *dst = non_negative(line_no, *val, name)?;
                    }
                    header = Some((line_no, h));
                }
                "PUNCTURED" => {
                    let [p] = parse_fields::<1>(line_no, &fields[1..])?;
                    punctured = non_negative(line_no, p, "punctured column count")?;
                }
                "RATES" => {
                    if fields.len() != 1 {
                        return Err(parse_err(line_no, "RATES takes no arguments"));
                    }
                    in_rates = true;
                }
                _ => {
                    if header.is_none() {
                        return Err(parse_err(line_no, "data before BG header"));
                    }
                    let v = parse_fields::<3>(line_no, &fields)?;
                    // Boundary lines follow RATES until one covers the whole graph.
                    if in_rates {
                        let b = RateBoundary {
                            rows_used: non_negative(line_no, v[0], "rows_used")?,
                            cols_used: non_negative(line_no, v[1], "cols_used")?,
                            transmitted: non_negative(line_no, v[2], "transmitted_count")?,
                        };
                        let [rows, cols, ..] = header.unwrap().1;
                        let continues = rates
                            .last()
                            .is_none_or(|(_, p)| p.rows_used != rows || p.cols_used != cols);
                        if continues {
                            rates.push((line_no, b));
                            continue;
                        }
                        in_rates = false;
                    }
                    if v[2] < 0 {
                        continue;
                    }
                    entries.push((
                        line_no,
                        BaseEntry {
                            row: non_negative(line_no, v[0], "row")?,
                            col: non_negative(line_no, v[1], "col")?,
                            shift: v[2] as usize,
                        },
                    ));
                }
            }
        }

        let (header_line, [rows, cols, info_cols, precode_rows]) =
            header.ok_or_else(|| parse_err(0, "missing BG header"))?;
        BaseGraph::validate(
            header_line,
            rows,
            cols,
            info_cols,
            precode_rows,
            punctured,
            rates,
            entries,
        )
    }

    /// Builds a base graph from in-memory parts, applying the same validation as
    /// [`BaseGraph::parse`]. Error line numbers refer to list positions (1-based).
    pub fn new(
        rows: usize,
        cols: usize,
        info_cols: usize,
        precode_rows: usize,
        punctured_cols: usize,
        rate_boundaries: Vec<RateBoundary>,
        entries: Vec<BaseEntry>,
    ) -> Result<BaseGraph> {
        BaseGraph::validate(
            0,
            rows,
            cols,
            info_cols,
            precode_rows,
            punctured_cols,
            rate_boundaries.into_iter().enumerate().map(|(i, b)| (i + 1, b)).collect(),
            entries.into_iter().enumerate().map(|(i, e)| (i + 1, e)).collect(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn validate(
        header_line: usize,
        rows: usize,
        cols: usize,
        info_cols: usize,
        precode_rows: usize,
        punctured_cols: usize,
        rates: Vec<(usize, RateBoundary)>,
        entries: Vec<(usize, BaseEntry)>,
    ) -> Result<BaseGraph> {
        if rows == 0 || cols == 0 {
            return Err(parse_err(header_line, "base graph must have rows and columns"));
        }
        if cols != info_cols + rows {
            return Err(parse_err(
                header_line,
                format!("raptor-like graph needs cols = info_cols + rows ({cols} != {info_cols} + {rows})"),
            ));
        }
        if precode_rows == 0 || precode_rows > rows {
            return Err(parse_err(header_line, "precode_rows must be in 1..=rows"));
        }
        if punctured_cols > info_cols {
            return Err(parse_err(header_line, "more punctured columns than information columns"));
        }

        let mut seen = HashSet::new();
        for &(line, e) in &entries {
            if e.row >= rows || e.col >= cols {
                return Err(parse_err(
                    line,
                    format!("entry ({}, {}) outside {rows}x{cols} base graph", e.row, e.col),
                ));
            }
            if !seen.insert((e.row, e.col)) {
                return Err(parse_err(line, format!("duplicate entry ({}, {})", e.row, e.col)));
            }
        }

        // Raptor-like structure: precode rows stay inside the precode columns;
        // extension row r owns the degree-1 column info_cols + r and touches
        // nothing to its right.
        let precode_cols = info_cols + precode_rows;
        let mut col_degree = vec![0usize; cols];
        for &(_, e) in &entries {
            col_degree[e.col] += 1;
        }
        for &(line, e) in &entries {
            if e.row < precode_rows {
                if e.col >= precode_cols {
                    return Err(parse_err(
                        line,
                        format!("precode row {} touches extension column {}", e.row, e.col),
                    ));
                }
            } else {
                let own = info_cols + e.row;
                if e.col > own {
                    return Err(parse_err(
                        line,
                        format!("extension row {} touches later column {}", e.row, e.col),
                    ));
                }
            }
            if e.col >= precode_cols {
                let owner_row = e.col - info_cols;
                if e.row != owner_row {
                    return Err(parse_err(
                        line,
                        format!(
                            "column {} must have degree 1 (only row {owner_row}), found in row {}",
                            e.col, e.row
                        ),
                    ));
                }
            }
        }
        for r in precode_rows..rows {
            if col_degree[info_cols + r] != 1 {
                return Err(parse_err(
                    header_line,
                    format!("extension row {r} lacks its degree-1 column {}", info_cols + r),
                ));
            }
        }

        if rates.is_empty() {
            return Err(parse_err(header_line, "no RATES entries"));
        }
        let mut prev: Option<RateBoundary> = None;
        for &(line, b) in &rates {
            if b.rows_used > rows || b.cols_used > cols {
                return Err(parse_err(line, "rate boundary exceeds base graph dimensions"));
            }
            if b.rows_used < precode_rows {
                return Err(parse_err(line, "rate boundary must include the whole precode"));
            }
            if b.cols_used != info_cols + b.rows_used {
                return Err(parse_err(line, "rate boundary must satisfy cols_used = info_cols + rows_used"));
            }
            if b.transmitted == 0 {
                return Err(parse_err(line, "transmitted_count must be positive"));
            }
            if let Some(p) = prev {
                if b.rows_used <= p.rows_used
                    || b.cols_used <= p.cols_used
                    || b.transmitted <= p.transmitted
                {
                    return Err(parse_err(line, "rate boundaries must be strictly increasing"));
                }
            }
            prev = Some(b);
        }
        let (last_line, last) = *rates.last().unwrap();
        if last.rows_used != rows || last.cols_used != cols {
            return Err(parse_err(last_line, "last rate boundary must cover the whole base graph"));
        }

        let mut entries: Vec<BaseEntry> = entries.into_iter().map(|(_, e)| e).collect();
        entries.sort();
        Ok(BaseGraph {
            rows,
            cols,
            info_cols,
            precode_rows,
            punctured_cols,
            rate_boundaries: rates.into_iter().map(|(_, b)| b).collect(),
            entries,
        })
    }

    /// Index into `entries` of base position `(row, col)`, if present.
    pub fn entry_index(&self, row: usize, col: usize) -> Option<usize> {
        self.entries
            .binary_search_by(|e| (e.row, e.col).cmp(&(row, col)))
            .ok()
    }

    /// Serializes back into the text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "BG {} {} {} {}",
            self.rows, self.cols, self.info_cols, self.precode_rows
        );
        if self.punctured_cols > 0 {
            let _ = writeln!(s, "PUNCTURED {}", self.punctured_cols);
        }
        s.push_str("RATES\n");
        for b in &self.rate_boundaries {
            let _ = writeln!(s, "{} {} {}", b.rows_used, b.cols_used, b.transmitted);
        }
        for e in &self.entries {
            let _ = writeln!(s, "{} {} {}", e.row, e.col, e.shift);
        }
        s
    }
}
