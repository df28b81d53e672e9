//! JSON and CSV renderings of run reports and comparisons.

use std::fmt::Write;

use super::{ComparisonReport, Direction, PpfReport, ResponseStatistics};
use crate::powerflow::ResponseId;

/// File-name stem for a response id.
pub fn file_stem(id: &ResponseId) -> String {
    id.to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per response: moments, standard error and quantiles.
pub fn summary_csv(report: &PpfReport) -> String {
    let mut out = String::from("response,mean,std,sample_mean,sample_std,std_error,samples");
    if let Some(first) = report.responses.first() {
        for q in &first.quantiles {
            write!(out, ",q{}", q.p).unwrap();
        }
    }
    out.push('\n');
    for s in &report.responses {
        write!(
            out,
            "{},{},{},{},{},{},{}",
            s.response, s.mean, s.std, s.sample_mean, s.sample_std, s.std_error, s.samples
        )
        .unwrap();
        for q in &s.quantiles {
            write!(out, ",{}", q.value).unwrap();
        }
        out.push('\n');
    }
    out
}

/// One row per configured limit.
pub fn violations_csv(report: &PpfReport) -> String {
    let mut out = String::from("response,direction,limit,probability,std_error\n");
    for s in &report.responses {
        for v in &s.violations {
            let dir = match v.direction {
                Direction::Above => "above",
                Direction::Below => "below",
            };
            writeln!(out, "{},{},{},{},{}", s.response, dir, v.value, v.probability, v.std_error)
                .unwrap();
        }
    }
    out
}

/// Histogram density and CDF per bin of one response.
pub fn distribution_csv(stats: &ResponseStatistics) -> String {
    let h = &stats.histogram;
    let mut out = String::from("bin,lower,upper,density,cdf\n");
    for k in 0..h.density.len() {
        writeln!(out, "{},{},{},{},{}", k, h.edges[k], h.edges[k + 1], h.density[k], h.cdf[k]).unwrap();
    }
    out
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut out = String::from(
        "response,mean_ref,mean_test,mean_error_pct,std_ref,std_test,std_error_pct,reference_zero\n",
    );
    for r in &report.responses {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.response,
            r.mean_ref,
            r.mean_test,
            opt(r.mean_error_pct),
            r.std_ref,
            r.std_test,
            opt(r.std_error_pct),
            r.reference_zero
        )
        .unwrap();
    }
    out
}

/// Minimal SVG bar chart of a response histogram.
pub fn histogram_svg(stats: &ResponseStatistics) -> String {
    let (w, h, pad) = (640.0, 360.0, 40.0);
    let hist = &stats.histogram;
    let peak = hist.density.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let bw = (w - 2.0 * pad) / hist.density.len() as f64;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    for (k, d) in hist.density.iter().enumerate() {
        let bh = d / peak * (h - 2.0 * pad);
        writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4878a8"/>"##,
            pad + k as f64 * bw,
            h - pad - bh,
            bw,
            bh
        )
        .unwrap();
    }
    let (lo, hi) = (hist.edges[0], hist.edges[hist.edges.len() - 1]);
    writeln!(
        out,
        r#"<line x1="{pad}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = h - pad,
        x2 = w - pad
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{pad}" y="{}" font-size="12">{lo:.4}</text>"#,
        h - pad / 2.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{hi:.4}</text>"#,
        w - pad,
        h - pad / 2.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        pad / 2.0,
        stats.response
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}
