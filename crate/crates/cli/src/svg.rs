//! Deterministic scatter-plot SVG.

use std::fmt::Write;

use crate::error::CliError;
use crate::io::Embedding;

/// Continuous ramp: linear interpolation between these evenly spaced RGB anchors.
pub const VIRIDIS_ANCHORS: [[u8; 3]; 9] = [
    [0x44, 0x01, 0x54],
    [0x47, 0x2d, 0x7b],
    [0x3b, 0x52, 0x8b],
    [0x2c, 0x72, 0x8e],
    [0x21, 0x91, 0x8c],
    [0x28, 0xae, 0x80],
    [0x5e, 0xc9, 0x62],
    [0xad, 0xdc, 0x30],
    [0xfd, 0xe7, 0x25],
];

/// Cluster colors, cycled for more than ten clusters.
pub const CATEGORICAL: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const UNIFORM: &str = "#3b528b";
const MARGIN: f64 = 0.05;

pub fn viridis(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (VIRIDIS_ANCHORS.len() - 1) as f64;
    let lo = (pos.floor() as usize).min(VIRIDIS_ANCHORS.len() - 2);
    let f = pos - lo as f64;
    let (a, b) = (VIRIDIS_ANCHORS[lo], VIRIDIS_ANCHORS[lo + 1]);
    let mix = |k: usize| (a[k] as f64 + f * (b[k] as f64 - a[k] as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(0), mix(1), mix(2))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coloring {
    Uniform,
    Clusters(Vec<usize>),
    Continuous { label: String, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub width: u32,
    pub height: u32,
    pub radius: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            width: 800,
            height: 600,
            radius: 3.0,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn axis_map(values: &[f64], size: f64, flip: bool) -> impl Fn(f64) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let margin = MARGIN * size;
    let span = size - 2.0 * margin;
    move |v| {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        let t = if flip { 1.0 - t } else { t };
        margin + t * span
    }
}

pub fn render(emb: &Embedding, coloring: &Coloring, opts: &PlotOptions) -> Result<String, CliError> {
    if emb.coords.cols() != 2 {
        return Err(CliError::NotTwoDimensional { dim: emb.coords.cols() });
    }
    let n = emb.ids.len();
    let (w, h) = (opts.width as f64, opts.height as f64);
    let fx = axis_map(&emb.coords.column(0), w, false);
    let fy = axis_map(&emb.coords.column(1), h, true);
    let fills: Vec<String> = match coloring {
        Coloring::Uniform => vec![UNIFORM.to_string(); n],
        Coloring::Clusters(labels) => labels.iter().map(|&l| CATEGORICAL[l % CATEGORICAL.len()].to_string()).collect(),
        Coloring::Continuous { values, .. } => {
            let (lo, hi) = min_max(values);
            values
                .iter()
                .map(|&v| viridis(if hi > lo { (v - lo) / (hi - lo) } else { 0.5 }))
                .collect()
        }
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">"#,
        opts.width, opts.height
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##, opts.width, opts.height);
    s.push_str("<g id=\"points\" fill-opacity=\"0.85\">\n");
    for i in 0..n {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{}"><title>{}</title></circle>"#,
            fx(emb.coords[(i, 0)]),
            fy(emb.coords[(i, 1)]),
            opts.radius,
            fills[i],
            escape(&emb.ids[i])
        );
    }
    s.push_str("</g>\n");
    legend(&mut s, coloring, w, h);
    s.push_str("</svg>\n");
    Ok(s)
}

fn min_max(values: &[f64]) -> (f64, f64) {
    (
        values.iter().copied().fold(f64::INFINITY, f64::min),
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

fn legend(s: &mut String, coloring: &Coloring, w: f64, h: f64) {
    let x0 = MARGIN * w * 0.4;
    let y0 = MARGIN * h * 0.4;
    s.push_str("<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#222222\">\n");
    match coloring {
        Coloring::Uniform => {}
        Coloring::Clusters(labels) => {
            let mut distinct: Vec<usize> = labels.clone();
            distinct.sort_unstable();
            distinct.dedup();
            for (row, &l) in distinct.iter().enumerate() {
                let y = y0 + 14.0 * row as f64;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x0:.2}" y="{y:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}">cluster {l}</text>"#,
                    CATEGORICAL[l % CATEGORICAL.len()],
                    x0 + 14.0,
                    y + 9.0
                );
            }
        }
        Coloring::Continuous { label, values } => {
            let (lo, hi) = min_max(values);
            let steps = 32;
            let bar_w = 4.0;
            let _ = writeln!(s, r#"<text x="{x0:.2}" y="{:.2}">{}</text>"#, y0 + 9.0, escape(label));
            for k in 0..steps {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{bar_w:.2}" height="10" fill="{}"/>"#,
                    x0 + bar_w * k as f64,
                    y0 + 14.0,
                    viridis(k as f64 / (steps - 1) as f64)
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{x0:.2}" y="{:.2}">{}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                y0 + 37.0,
                format_tick(lo),
                x0 + bar_w * steps as f64,
                y0 + 37.0,
                format_tick(hi)
            );
        }
    }
    s.push_str("</g>\n");
}

fn format_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use desmap::Matrix64;

    #[test]
    fn viridis_hits_anchors() {
        assert_eq!(viridis(0.0), "#440154");
        assert_eq!(viridis(1.0), "#fde725");
        assert_eq!(viridis(0.5), "#21918c");
        assert_eq!(viridis(-3.0), "#440154");
    }

    #[test]
    fn margins_bound_points() {
        let emb = Embedding {
            ids: vec!["a".into(), "b".into()],
            coords: Matrix64::from_rows(&[[0.0, 0.0], [1.0, 2.0]]).unwrap(),
        };
        let svg = render(&emb, &Coloring::Uniform, &PlotOptions::default()).unwrap();
        assert!(svg.contains(r#"cx="40.00" cy="570.00""#));
        assert!(svg.contains(r#"cx="760.00" cy="30.00""#));
    }
}
