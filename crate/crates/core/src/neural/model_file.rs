//! Text model format.
//!
//! ```text
//! RCNN v1
//! variant nnms
//! tying per-edge
//! L_max 5
//! E 188
//! r_max 3
//! block_boundaries 88 128 188
//! base_entries 47            (tied models only)
//! code_fingerprint <sha256 hex>
//! <one line per parameter row, 17 significant digits per value>
//! ```

use std::fmt::Write as _;

use super::params::{tie_parameters_pb, ParameterMatrix, Tying, Variant};
use super::{NeuralConfig, NeuralDecoder};
use crate::code::Code;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &str = "RCNN v1";

fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_model<T: Scalar>(dec: &NeuralDecoder<T>) -> String {
    let p = &dec.params;
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "variant {}", dec.config.variant);
    let _ = writeln!(s, "tying {}", dec.config.tying);
    let _ = writeln!(s, "L_max {}", p.l_max);
    let _ = writeln!(s, "E {}", p.edges);
    let _ = writeln!(s, "r_max {}", p.rate_count());
    let bounds: Vec<String> = p.block_boundaries.iter().map(usize::to_string).collect();
    let _ = writeln!(s, "block_boundaries {}", bounds.join(" "));
    if p.tying == Tying::PerBaseEdge {
        let _ = writeln!(s, "base_entries {}", p.columns);
    }
    let _ = writeln!(s, "code_fingerprint {}", dec.code_fingerprint);
    for r in 0..p.rows() {
        let row: Vec<String> = p.row(r).iter().map(|v| fmt_value(v.as_f64())).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

fn model_err(msg: impl Into<String>) -> Error {
    Error::Model(msg.into())
}

/// Parses a model and binds it to `code`, refusing a fingerprint mismatch.
pub fn read_model<T: Scalar>(text: &str, code: &Code) -> Result<NeuralDecoder<T>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(model_err(format!("missing {MAGIC:?} header")));
    }
    let mut field = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| model_err(format!("missing {key}")))?;
        let (k, v) = line.trim().split_once(' ').unwrap_or((line.trim(), ""));
        if k != key {
            return Err(model_err(format!("expected {key}, found {k:?}")));
        }
        Ok(v.trim().to_string())
    };
    let num = |v: String, key: &str| -> Result<usize> {
        v.parse().map_err(|_| model_err(format!("{key}: not an integer: {v:?}")))
    };

    let variant: Variant = field("variant")?.parse()?;
    let tying: Tying = field("tying")?.parse()?;
    let l_max = num(field("L_max")?, "L_max")?;
    let edges = num(field("E")?, "E")?;
    let r_max = num(field("r_max")?, "r_max")?;
    let boundaries: Vec<usize> = field("block_boundaries")?
        .split_whitespace()
        .map(|t| num(t.to_string(), "block_boundaries"))
        .collect::<Result<_>>()?;
    let base_entries = if tying == Tying::PerBaseEdge {
        Some(num(field("base_entries")?, "base_entries")?)
    } else {
        None
    };
    let fingerprint = field("code_fingerprint")?;
    let code_fp = code.fingerprint();
    if fingerprint != code_fp {
        return Err(Error::Fingerprint { model: fingerprint, code: code_fp });
    }

    let mut params = ParameterMatrix::<T>::identity(l_max, &crate::code::edge_counts(&code.ladder));
    if tying == Tying::PerBaseEdge {
        params = tie_parameters_pb(&params, &code.base_edge_map())?;
        if Some(params.columns) != base_entries {
            return Err(model_err("base_entries does not match the code"));
        }
    }
    if params.edges != edges || params.rate_count() != r_max || params.block_boundaries != boundaries {
        return Err(model_err("shape does not match the code's rate ladder"));
    }

    let mut rows = 0;
    for (r, line) in lines.enumerate() {
        if r >= params.rows() {
            return Err(model_err("too many parameter rows"));
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| model_err(format!("row {r}: bad value {t:?}"))))
            .collect::<Result<_>>()?;
        if vals.len() != params.columns {
            return Err(model_err(format!("row {r}: {} values, expected {}", vals.len(), params.columns)));
        }
        for (dst, v) in params.row_mut(r).iter_mut().zip(vals) {
            *dst = T::of(v);
        }
        rows += 1;
    }
    if rows != params.rows() {
        return Err(model_err(format!("{rows} parameter rows, expected {}", params.rows())));
    }
    Ok(NeuralDecoder {
        config: NeuralConfig::new(variant, tying, l_max),
        params,
        code_fingerprint: fingerprint,
    })
}
