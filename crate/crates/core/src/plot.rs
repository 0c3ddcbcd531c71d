//! Plot data for CD diagrams and performance-profile curves, with a
//! minimal static SVG renderer.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aggregation::PerformanceProfile;
use crate::stats::CdDiagramData;

/// One method's step curve `p(β)` on `[1, β̂]` as polyline vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmCurve {
    pub method: String,
    pub points: Vec<(f64, f64)>,
    pub normalized_area: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cd: Option<CdDiagramData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dm: Vec<DmCurve>,
}

pub fn dm_curves(profile: &PerformanceProfile) -> Vec<DmCurve> {
    let d = profile.n_datasets as f64;
    let hi = profile.beta_hat;
    profile
        .methods
        .iter()
        .enumerate()
        .map(|(i, method)| {
            let ratios = &profile.ratios[i];
            let mut count = ratios.partition_point(|&r| r <= 1.0);
            let mut points = vec![(1.0, count as f64 / d)];
            while count < ratios.len() && ratios[count] <= hi {
                let beta = ratios[count];
                let before = count as f64 / d;
                while count < ratios.len() && ratios[count] == beta {
                    count += 1;
                }
                points.push((beta, before));
                points.push((beta, count as f64 / d));
            }
            if points.last().is_some_and(|p| p.0 < hi) {
                points.push((hi, count as f64 / d));
            }
            DmCurve {
                method: method.clone(),
                points,
                normalized_area: profile.normalized_areas[i],
            }
        })
        .collect()
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Performance-profile curves as polylines.
pub fn dm_svg(curves: &[DmCurve], beta_hat: f64) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let x = |b: f64| pad + (b - 1.0) / (beta_hat - 1.0).max(1e-12) * (w - 2.0 * pad);
    let y = |p: f64| h - pad - p * (h - 2.0 * pad);
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    let _ = writeln!(
        s,
        "<line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        y(0.0),
        w - pad,
        y(0.0)
    );
    let _ = writeln!(s, "<line x1=\"{pad}\" y1=\"{}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>", y(0.0), y(1.0));
    for (n, c) in curves.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let pts: Vec<String> = c.points.iter().map(|&(b, p)| format!("{:.2},{:.2}", x(b), y(p))).collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{} ({:.3})</text>",
            w - pad + 5.0 - 120.0,
            pad + 14.0 * n as f64,
            escape(&c.method),
            c.normalized_area
        );
    }
    s.push_str("</svg>\n");
    s
}

/// CD diagram: mean-rank axis, method ticks and one bar per clique.
pub fn cd_svg(cd: &CdDiagramData) -> String {
    let m = cd.methods.len();
    let (w, pad) = (640.0, 60.0);
    let cliques = &cd.wilcoxon_cliques;
    let h = 120.0 + 14.0 * m as f64 + 10.0 * cliques.len() as f64;
    let lo = 1.0;
    let hi = (m as f64).max(2.0);
    let x = |r: f64| pad + (r - lo) / (hi - lo) * (w - 2.0 * pad);
    let axis = 40.0;
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    let _ = writeln!(
        s,
        "<line x1=\"{}\" y1=\"{axis}\" x2=\"{}\" y2=\"{axis}\" stroke=\"black\"/>",
        x(lo),
        x(hi)
    );
    for r in 1..=m.max(2) {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{r}</text>",
            x(r as f64),
            axis - 8.0
        );
    }
    for (n, (method, &rank)) in cd.methods.iter().zip(&cd.mean_ranks).enumerate() {
        let ty = axis + 60.0 + 14.0 * n as f64;
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"black\" points=\"{0:.2},{axis} {0:.2},{ty} {1:.2},{ty}\"/>",
            x(rank),
            if n < m.div_ceil(2) { x(lo) - 5.0 } else { x(hi) + 5.0 }
        );
        let anchor = if n < m.div_ceil(2) { "end" } else { "start" };
        let tx = if n < m.div_ceil(2) { x(lo) - 8.0 } else { x(hi) + 8.0 };
        let _ = writeln!(
            s,
            "<text x=\"{tx:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"{anchor}\">{} ({rank:.2})</text>",
            ty + 4.0,
            escape(method)
        );
    }
    for (n, clique) in cliques.iter().enumerate() {
        let ranks: Vec<f64> = clique
            .iter()
            .filter_map(|c| cd.methods.iter().position(|m| m == c).map(|i| cd.mean_ranks[i]))
            .collect();
        let a = ranks.iter().copied().fold(f64::INFINITY, f64::min);
        let b = ranks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let by = axis + 10.0 + 8.0 * n as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{by}\" x2=\"{:.2}\" y2=\"{by}\" stroke=\"black\" stroke-width=\"4\"/>",
            x(a) - 3.0,
            x(b) + 3.0
        );
    }
    s.push_str("</svg>\n");
    s
}
