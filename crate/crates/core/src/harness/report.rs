//! Side-by-side comparison of the two schemes at matched grid points.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use super::sweep::CsvRow;
use crate::error::{Error, Result};
use crate::metrics::{Scheme, SessionReport};

/// One matched (noise level, key length) point.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub sigma2: f64,
    pub key_len: usize,
    pub kgr_tc: f64,
    pub kgr_indexing: f64,
    pub bmr_tc: f64,
    pub bmr_indexing: f64,
    /// Trial spread of the indexing KGR, when known.
    pub kgr_indexing_range: Option<(f64, f64)>,
    /// `kgr_tc / kgr_indexing`; infinite for `x / 0`, NaN for `0 / 0`.
    pub kgr_ratio: f64,
    /// `bmr_tc / bmr_indexing`, with the same conventions.
    pub bmr_ratio: f64,
}

/// Ratio with explicit conventions for a zero denominator.
pub fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 { f64::NAN } else { f64::INFINITY }
    } else {
        num / den
    }
}

/// Renders a value, spelling infinity as `inf` and NaN as `n/a`.
pub fn render(x: f64) -> String {
    if x.is_nan() {
        "n/a".into()
    } else if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:.4}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

type PointKey = (u64, usize);

fn key(sigma2: f64, key_len: usize) -> PointKey {
    (sigma2.to_bits(), key_len)
}

/// Pairs aggregate rows of both schemes at identical (sigma2, key_len).
/// Trial rows are ignored.
pub fn emit_comparison(rows: &[CsvRow]) -> Result<Comparison> {
    let mut by_point: BTreeMap<PointKey, [Option<&CsvRow>; 2]> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_aggregate()) {
        let slot = match r.scheme {
            Scheme::TurboNR => 0,
            Scheme::Indexing => 1,
        };
        by_point.entry(key(r.sigma2, r.key_len)).or_default()[slot] = Some(r);
    }
    if by_point.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = Vec::new();
    for ((s_bits, key_len), pair) in by_point {
        let sigma2 = f64::from_bits(s_bits);
        let [Some(tc), Some(ix)] = pair else {
            return Err(Error::Unmatched(format!(
                "sigma2 = {sigma2}, key_len = {key_len} lacks one of the two schemes"
            )));
        };
        out.push(ComparisonRow {
            sigma2,
            key_len,
            kgr_tc: tc.kgr_keys_per_min,
            kgr_indexing: ix.kgr_keys_per_min,
            bmr_tc: tc.bmr,
            bmr_indexing: ix.bmr,
            kgr_indexing_range: ix.kgr_min.zip(ix.kgr_max),
            kgr_ratio: ratio(tc.kgr_keys_per_min, ix.kgr_keys_per_min),
            bmr_ratio: ratio(tc.bmr, ix.bmr),
        });
    }
    out.sort_by(|a, b| a.key_len.cmp(&b.key_len).then(a.sigma2.total_cmp(&b.sigma2)));
    Ok(Comparison { rows: out })
}

/// Aggregates session reports per (scheme, sigma2, key_len) and compares.
pub fn compare_reports(reports: &[SessionReport]) -> Result<Comparison> {
    let mut groups: BTreeMap<(Scheme, PointKey), Vec<CsvRow>> = BTreeMap::new();
    for (i, r) in reports.iter().enumerate() {
        let row = CsvRow {
            point_id: 0,
            trial: Some(i as u64),
            scheme: r.scheme,
            key_len: r.key_len,
            sigma2: r.sigma2,
            f_p_hz: r.f_p_hz,
            bmr: r.bmr,
            kgr_keys_per_min: r.kgr_keys_per_min,
            entropy_mean: r.entropy_per_bit_mean,
            secret_bit_rate: r.secret_bit_rate,
            blocks_attempted: r.blocks_attempted,
            blocks_verified: r.blocks_verified,
            leaked_bits: r.leaked_bits_total,
            raw_bmr: r.raw_bmr,
            bmr_std: None,
            kgr_std: None,
            kgr_min: None,
            kgr_max: None,
        };
        groups.entry((r.scheme, key(r.sigma2, r.key_len))).or_default().push(row);
    }
    let aggregates = groups.values().map(|g| CsvRow::aggregate(g)).collect::<Result<Vec<_>>>()?;
    emit_comparison(&aggregates)
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>8} {:>10} {:>10} {:>12} {:>16} {:>9} {:>12} {:>9}",
            "key_len", "sigma2", "KGR_TC", "KGR_Index", "(range)", "KGR_x", "BMR_TC", "BMR_Index"
        );
        for r in &self.rows {
            let range = r
                .kgr_indexing_range
                .map_or_else(String::new, |(lo, hi)| format!("{lo:.1}-{hi:.1}"));
            let _ = writeln!(
                s,
                "{:>8} {:>10} {:>10.2} {:>12.2} {:>16} {:>9} {:>12.5} {:>9.4}",
                r.key_len,
                format!("{:e}", r.sigma2),
                r.kgr_tc,
                r.kgr_indexing,
                range,
                render(r.kgr_ratio),
                r.bmr_tc,
                r.bmr_indexing
            );
        }
        s
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "key_len",
            "sigma2",
            "kgr_tc",
            "kgr_indexing",
            "kgr_indexing_min",
            "kgr_indexing_max",
            "kgr_ratio",
            "bmr_tc",
            "bmr_indexing",
            "bmr_ratio",
        ])?;
        for r in &self.rows {
            let (lo, hi) = r
                .kgr_indexing_range
                .map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
            w.write_record([
                r.key_len.to_string(),
                r.sigma2.to_string(),
                r.kgr_tc.to_string(),
                r.kgr_indexing.to_string(),
                lo,
                hi,
                render(r.kgr_ratio),
                r.bmr_tc.to_string(),
                r.bmr_indexing.to_string(),
                render(r.bmr_ratio),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Two-panel SVG: BMR and KGR against log10(sigma2), one line per scheme
/// and key length, from aggregate rows.
pub fn plot_svg(rows: &[CsvRow]) -> String {
    let mut series: BTreeMap<(usize, Scheme), Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_aggregate() && r.sigma2 > 0.0) {
        series
            .entry((r.key_len, r.scheme))
            .or_default()
            .push((r.sigma2.log10(), r.bmr, r.kgr_keys_per_min));
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let xs: Vec<f64> = series.values().flatten().map(|p| p.0).collect();
    let (x0, x1) = bounds(&xs);
    let (w, h, pad) = (420.0, 300.0, 50.0);
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
        2.0 * w,
        h + 40.0
    );
    for (panel, (title, pick)) in [("BMR", 1usize), ("KGR (keys/min)", 2)].into_iter().enumerate() {
        let ys: Vec<f64> = series
            .values()
            .flatten()
            .map(|p| if pick == 1 { p.1 } else { p.2 })
            .filter(|y| y.is_finite())
            .collect();
        let (_, y1) = bounds(&ys);
        let ox = panel as f64 * w;
        let px = |x: f64| ox + pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let py = |y: f64| h - pad + 20.0 - y / y1 * (h - 2.0 * pad);
        let _ = write!(
            svg,
            r##"<text x="{}" y="16">{title} vs log10(sigma2)</text><rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
            ox + pad,
            ox + pad,
            pad - 30.0 + 20.0,
            w - 2.0 * pad,
            h - 2.0 * pad + 30.0,
        );
        let _ = write!(
            svg,
            r#"<text x="{}" y="{}">{x0:.1}</text><text x="{}" y="{}">{x1:.1}</text><text x="{}" y="{}">{y1:.3}</text>"#,
            px(x0),
            h - pad + 35.0,
            px(x1) - 20.0,
            h - pad + 35.0,
            ox + 2.0,
            py(y1) + 4.0,
        );
        for (i, ((key_len, scheme), pts)) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let path: Vec<String> = pts
                .iter()
                .filter_map(|p| {
                    let y = if pick == 1 { p.1 } else { p.2 };
                    y.is_finite().then(|| format!("{:.1},{:.1}", px(p.0), py(y)))
                })
                .collect();
            let dash = if *scheme == Scheme::Indexing { r#" stroke-dasharray="4 3""# } else { "" };
            let _ = write!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}"{dash}/><text x="{}" y="{}" fill="{color}">{scheme} {key_len}</text>"#,
                path.join(" "),
                ox + w - pad - 80.0,
                pad + 14.0 * i as f64,
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, lo + 0.5)
    } else {
        (lo.min(0.0).max(lo), hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agg(scheme: Scheme, key_len: usize, sigma2: f64, bmr: f64, kgr: f64) -> CsvRow {
        CsvRow {
            point_id: 0,
            trial: None,
            scheme,
            key_len,
            sigma2,
            f_p_hz: 1475.0,
            bmr,
            kgr_keys_per_min: kgr,
            entropy_mean: 0.99,
            secret_bit_rate: 0.0,
            blocks_attempted: 0,
            blocks_verified: 0,
            leaked_bits: 0,
            raw_bmr: bmr,
            bmr_std: Some(0.0),
            kgr_std: Some(0.0),
            kgr_min: Some(kgr),
            kgr_max: Some(kgr),
        }
    }

    #[test]
    fn rows_carry_both_schemes() {
        let rows = [
            agg(Scheme::TurboNR, 128, 0.01, 0.0, 35.0),
            agg(Scheme::Indexing, 128, 0.01, 0.2, 5.0),
        ];
        let c = emit_comparison(&rows).unwrap();
        assert_eq!(c.rows.len(), 1);
        let r = &c.rows[0];
        assert_eq!((r.kgr_tc, r.kgr_indexing, r.kgr_ratio), (35.0, 5.0, 7.0));
        assert!(c.to_text().contains("35.00"));
    }

    #[test]
    fn equal_inputs_give_unit_ratio() {
        let rows = [
            agg(Scheme::TurboNR, 256, 0.1, 0.05, 10.0),
            agg(Scheme::Indexing, 256, 0.1, 0.05, 10.0),
        ];
        let r = &emit_comparison(&rows).unwrap().rows[0];
        assert_eq!((r.kgr_ratio, r.bmr_ratio), (1.0, 1.0));
    }

    #[test]
    fn zero_denominators_render_as_sentinels() {
        assert_eq!(render(ratio(30.0, 0.0)), "inf");
        assert_eq!(render(ratio(0.0, 0.0)), "n/a");
        let rows = [
            agg(Scheme::TurboNR, 128, 0.01, 0.0, 35.0),
            agg(Scheme::Indexing, 128, 0.01, 0.2, 0.0),
        ];
        let mut buf = Vec::new();
        emit_comparison(&rows).unwrap().write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains(",inf,"));
    }

    #[test]
    fn missing_partner_is_an_error() {
        let rows = [
            agg(Scheme::TurboNR, 128, 0.01, 0.0, 35.0),
            agg(Scheme::Indexing, 256, 0.01, 0.2, 5.0),
        ];
        assert!(matches!(emit_comparison(&rows), Err(Error::Unmatched(_))));
        assert!(matches!(emit_comparison(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn plot_has_a_line_per_series() {
        let rows = [
            agg(Scheme::TurboNR, 128, 0.01, 0.0, 35.0),
            agg(Scheme::TurboNR, 128, 0.1, 0.01, 20.0),
            agg(Scheme::Indexing, 128, 0.01, 0.2, 5.0),
        ];
        let svg = plot_svg(&rows);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 4);
    }
}
