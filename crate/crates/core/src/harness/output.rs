use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::FerRecord;

pub const CSV_HEADER: &str = "rate,snr_db,frames,frame_errors,bit_errors,fer,ber,avg_iter,seconds";

/// Renders records as CSV. Floats use the shortest representation that parses
/// back to the same value, except the timing column.
pub fn emit_csv(records: &[FerRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3}",
            r.rate, r.snr_db, r.frames_run, r.frame_errors, r.bit_errors, r.fer, r.ber, r.avg_iterations, r.wall_time
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<FerRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: format!("expected header {CSV_HEADER}") }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 9 {
            return Err(err(format!("expected 9 fields, got {}", f.len())));
        }
        let float = |k: usize| f[k].parse::<f64>().map_err(|e| err(format!("field {k}: {e}")));
        let int = |k: usize| f[k].parse::<u64>().map_err(|e| err(format!("field {k}: {e}")));
        out.push(FerRecord {
            rate: float(0)?,
            snr_db: float(1)?,
            frames_run: int(2)?,
            frame_errors: int(3)?,
            bit_errors: int(4)?,
            fer: float(5)?,
            ber: float(6)?,
            avg_iterations: float(7)?,
            wall_time: float(8)?,
        });
    }
    Ok(out)
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Log-scale FER versus SNR, one polyline per labelled series. Points with zero
/// errors are drawn at the floor of the axis.
pub fn emit_svg(series: &[(String, Vec<FerRecord>)]) -> String {
    let all = || series.iter().flat_map(|(_, r)| r.iter());
    let (mut x_lo, mut x_hi) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.snr_db), b.max(r.snr_db)));
    if !x_lo.is_finite() {
        (x_lo, x_hi) = (0.0, 1.0);
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let min_fer = all().map(|r| r.fer).filter(|&f| f > 0.0).fold(1.0, f64::min);
    let y_lo = min_fer.log10().floor().min(-1.0);
    let px = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * MARGIN);
    let py = |fer: f64| {
        let l = if fer > 0.0 { fer.log10().max(y_lo) } else { y_lo };
        MARGIN + (0.0 - l) / (0.0 - y_lo) * (H - 2.0 * MARGIN)
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="black"/>"#, m = MARGIN, w = W - 2.0 * MARGIN, h = H - 2.0 * MARGIN);
    for d in (y_lo as i32)..=0 {
        let y = py(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/>"##, MARGIN, W - MARGIN);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"#, MARGIN - 4.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">SNR (dB)</text>"#, W / 2.0, H - 20.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{x_lo}</text>"#, px(x_lo), H - MARGIN + 14.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{x_hi}</text>"#, px(x_hi), H - MARGIN + 14.0);
    for (k, (label, recs)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = recs.iter().map(|r| format!("{:.1},{:.1}", px(r.snr_db), py(r.fer))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = MARGIN + 14.0 * (k as f64 + 1.0);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, W - MARGIN - 150.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(rate: f64, snr: f64, frames: u64, errors: u64) -> FerRecord {
        FerRecord {
            rate,
            snr_db: snr,
            frames_run: frames,
            frame_errors: errors,
            bit_errors: errors * 3,
            fer: errors as f64 / frames as f64,
            ber: errors as f64 * 3.0 / (frames as f64 * 20.0),
            avg_iterations: 7.25,
            wall_time: 1.5,
        }
    }

    #[test]
    fn header_is_exact() {
        let csv = emit_csv(&[]);
        assert_eq!(csv, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn bad_csv_names_line() {
        let text = format!("{CSV_HEADER}\n0.5,1,10,1,1,0.1,0.01,2,0.1\n0.5,1,10\n");
        match parse_csv(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let a = vec![record(0.5, 1.0, 100, 10), record(0.5, 2.0, 100, 0)];
        let b = vec![record(0.25, 1.0, 100, 50)];
        let svg = emit_svg(&[("bp".into(), a), ("ms <x>".into(), b)]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("ms &lt;x&gt;"));
    }

    proptest! {
        #[test]
        fn csv_round_trip(rate in 0.01f64..1.0, snr in -5.0f64..10.0, frames in 1u64..100_000, frac in 0.0f64..1.0) {
            let errors = (frames as f64 * frac) as u64;
            let mut r = record(rate, snr, frames, errors);
            r.wall_time = 0.25;
            let back = parse_csv(&emit_csv(std::slice::from_ref(&r))).unwrap();
            prop_assert_eq!(back, vec![r]);
        }
    }
}
