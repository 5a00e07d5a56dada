use std::fmt;
use std::str::FromStr;

use crate::code::Code;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Weighted tanh-product check update.
    Nnbp,
    /// Weighted and biased min-sum check update with a ReLU floor.
    Nnms,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tying {
    PerEdge,
    /// All lifted copies of a base-graph entry share one parameter.
    PerBaseEdge,
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nnbp" | "rc-nnbp" => Ok(Variant::Nnbp),
            "nnms" | "nnoms" | "rc-nnms" | "rc-nnoms" => Ok(Variant::Nnms),
            _ => Err(Error::Config(format!("unknown neural variant {s:?}"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Nnbp => "nnbp",
            Variant::Nnms => "nnms",
        })
    }
}

impl FromStr for Tying {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "per-edge" | "edge" | "none" => Ok(Tying::PerEdge),
            "per-base-edge" | "pb" | "base" => Ok(Tying::PerBaseEdge),
            _ => Err(Error::Config(format!("unknown tying {s:?}"))),
        }
    }
}

impl fmt::Display for Tying {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tying::PerEdge => "per-edge",
            Tying::PerBaseEdge => "per-base-edge",
        })
    }
}

/// Trainable weights and biases of the unrolled decoder.
///
/// Storage is `2 * l_max` rows by `columns`: row `2l` holds the weights of
/// layer `l` (zero-based), row `2l + 1` its biases. Without tying there is one
/// column per edge in canonical order; with base-edge tying one column per base
/// entry. Columns split into nested blocks, one per rate, so the `t`-th highest
/// rate reads columns `0..block_boundaries[t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterMatrix<T> {
    pub l_max: usize,
    pub edges: usize,
    pub columns: usize,
    pub tying: Tying,
    pub values: Vec<T>,
    pub edge_to_column: Vec<usize>,
    pub block_boundaries: Vec<usize>,
}

/// Cumulative column counts per rate, checking that every rate's active edges
/// map onto a column prefix.
fn boundaries_for(edge_to_column: &[usize], edge_counts: &[usize]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(edge_counts.len());
    for &k in edge_counts {
        let cols = edge_to_column[..k].iter().map(|&c| c + 1).max().unwrap_or(0);
        let spill = edge_to_column[k..].iter().any(|&c| c < cols);
        if spill {
            return Err(Error::Tying(format!(
                "edges beyond the first {k} share columns with them; blocks would not nest"
            )));
        }
        out.push(cols);
    }
    Ok(out)
}

impl<T: Scalar> ParameterMatrix<T> {
    /// Identity initialization (`w = 1`, `b = 0`) with one column per edge.
    pub fn identity(l_max: usize, edge_counts: &[usize]) -> ParameterMatrix<T> {
        let edges = *edge_counts.last().expect("at least one rate");
        let edge_to_column: Vec<usize> = (0..edges).collect();
        let block_boundaries = edge_counts.to_vec();
        ParameterMatrix::with_mapping(l_max, Tying::PerEdge, edge_to_column, block_boundaries)
    }

    pub fn identity_for(code: &Code, l_max: usize, tying: Tying) -> ParameterMatrix<T> {
        let counts = crate::code::edge_counts(&code.ladder);
        let untied = ParameterMatrix::identity(l_max, &counts);
        match tying {
            Tying::PerEdge => untied,
            Tying::PerBaseEdge => tie_parameters_pb(&untied, &code.base_edge_map())
                .expect("lifted code has a consistent base-edge map"),
        }
    }

    fn with_mapping(
        l_max: usize,
        tying: Tying,
        edge_to_column: Vec<usize>,
        block_boundaries: Vec<usize>,
    ) -> ParameterMatrix<T> {
        let columns = *block_boundaries.last().unwrap_or(&0);
        let mut values = vec![T::zero(); 2 * l_max * columns];
        for l in 0..l_max {
            values[2 * l * columns..(2 * l + 1) * columns].fill(T::one());
        }
        ParameterMatrix {
            l_max,
            edges: edge_to_column.len(),
            columns,
            tying,
            values,
            edge_to_column,
            block_boundaries,
        }
    }

    pub fn rows(&self) -> usize {
        2 * self.l_max
    }

    pub fn rate_count(&self) -> usize {
        self.block_boundaries.len()
    }

    pub fn free_parameter_count(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.values[r * self.columns..(r + 1) * self.columns]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let c = self.columns;
        &mut self.values[r * c..(r + 1) * c]
    }

    #[inline]
    pub fn weight(&self, layer: usize, edge: usize) -> T {
        self.values[2 * layer * self.columns + self.edge_to_column[edge]]
    }

    #[inline]
    pub fn bias(&self, layer: usize, edge: usize) -> T {
        self.values[(2 * layer + 1) * self.columns + self.edge_to_column[edge]]
    }

    /// Index into `values` of `(row, column)`.
    #[inline]
    pub fn index(&self, row: usize, column: usize) -> usize {
        row * self.columns + column
    }

    /// Same-shape zero matrix, used for gradients and optimizer moments.
    pub fn zeros_like(&self) -> ParameterMatrix<T> {
        ParameterMatrix {
            values: vec![T::zero(); self.values.len()],
            ..self.clone()
        }
    }

    /// Untied per-edge matrix holding each edge's effective parameters.
    pub fn expand(&self) -> ParameterMatrix<T> {
        let counts: Vec<usize> = self
            .block_boundaries
            .iter()
            .map(|&cols| self.edge_to_column.iter().take_while(|&&c| c < cols).count())
            .collect();
        let mut out = ParameterMatrix::identity(self.l_max, &counts);
        for r in 0..self.rows() {
            for e in 0..self.edges {
                out.values[r * self.edges + e] = self.values[r * self.columns + self.edge_to_column[e]];
            }
        }
        out
    }

    /// Sum of absolute values over one block of columns, all rows.
    pub fn block_abs_sum(&self, block: usize) -> T {
        let lo = if block == 0 { 0 } else { self.block_boundaries[block - 1] };
        let hi = self.block_boundaries[block];
        (0..self.rows())
            .flat_map(|r| self.row(r)[lo..hi].iter().copied())
            .map(T::abs)
            .sum()
    }

    pub fn convert<U: Scalar>(&self) -> ParameterMatrix<U> {
        ParameterMatrix {
            l_max: self.l_max,
            edges: self.edges,
            columns: self.columns,
            tying: self.tying,
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
            edge_to_column: self.edge_to_column.clone(),
            block_boundaries: self.block_boundaries.clone(),
        }
    }
}

/// Read-only view of the parameter blocks one rate may touch.
#[derive(Clone, Copy, Debug)]
pub struct ParamView<'a, T> {
    pub params: &'a ParameterMatrix<T>,
    pub rate_index: usize,
    pub active_columns: usize,
}

impl<'a, T: Scalar> ParamView<'a, T> {
    #[inline]
    pub fn weight(&self, layer: usize, edge: usize) -> T {
        debug_assert!(self.params.edge_to_column[edge] < self.active_columns);
        self.params.weight(layer, edge)
    }

    #[inline]
    pub fn bias(&self, layer: usize, edge: usize) -> T {
        debug_assert!(self.params.edge_to_column[edge] < self.active_columns);
        self.params.bias(layer, edge)
    }

    /// The visible slice of one storage row.
    pub fn row(&self, r: usize) -> &'a [T] {
        &self.params.row(r)[..self.active_columns]
    }
}

/// Blocks `W_1..W_t` for the `t`-th highest rate (`rate_index = t - 1`).
pub fn activate<T: Scalar>(params: &ParameterMatrix<T>, rate_index: usize) -> Result<ParamView<'_, T>> {
    let active_columns = *params.block_boundaries.get(rate_index).ok_or(Error::RateIndex {
        index: rate_index,
        len: params.block_boundaries.len(),
    })?;
    Ok(ParamView { params, rate_index, active_columns })
}

/// Ties all edges of one base entry to a single column. Each tied value is the
/// mean of the untied values it replaces.
pub fn tie_parameters_pb<T: Scalar>(params: &ParameterMatrix<T>, base_edge_map: &[usize]) -> Result<ParameterMatrix<T>> {
    if params.tying != Tying::PerEdge {
        return Err(Error::Tying("parameters are already tied".into()));
    }
    if base_edge_map.len() != params.edges {
        return Err(Error::Tying(format!(
            "base-edge map has {} entries for {} edges",
            base_edge_map.len(),
            params.edges
        )));
    }
    let columns = base_edge_map.iter().map(|&b| b + 1).max().unwrap_or(0);
    let mut members = vec![0usize; columns];
    for &b in base_edge_map {
        members[b] += 1;
    }
    if let Some(b) = members.iter().position(|&k| k == 0) {
        return Err(Error::Tying(format!("base entry {b} has no edges")));
    }
    let block_boundaries = boundaries_for(base_edge_map, &params.block_boundaries)?;
    let mut tied = ParameterMatrix::with_mapping(params.l_max, Tying::PerBaseEdge, base_edge_map.to_vec(), block_boundaries);
    for r in 0..params.rows() {
        let mut acc = vec![T::zero(); columns];
        for (e, &b) in base_edge_map.iter().enumerate() {
            acc[b] = acc[b] + params.values[r * params.columns + e];
        }
        for (b, a) in acc.into_iter().enumerate() {
            tied.values[r * columns + b] = a / T::of(members[b] as f64);
        }
    }
    Ok(tied)
}
