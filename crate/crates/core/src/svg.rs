//! Self-contained SVG charts for run reports. Output is a pure function of
//! the inputs, so figures are byte-identical across identical runs.

use std::fmt::Write;

use crate::evaluate::ConfusionMatrix;
use crate::explain::GlobalImportance;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(width: u32, height: u32, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        width / 2,
        escape(title)
    );
    s
}

/// Grouped bars of class counts before and after oversampling.
pub fn class_distribution(before: (usize, usize), after: Option<(usize, usize)>) -> String {
    let (w, h) = (520u32, 360u32);
    let mut s = open(w, h, "Class distribution before and after SMOTE");
    let groups: Vec<(&str, (usize, usize))> = match after {
        Some(a) => vec![("before", before), ("after", a)],
        None => vec![("before", before)],
    };
    let max = groups
        .iter()
        .map(|(_, (a, b))| (*a).max(*b))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let (x0, y0, plot_h) = (70.0, 310.0, 250.0);
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="500" y2="{y0}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="50" stroke="black"/>"#
    );
    for (g, (label, (neg, pos))) in groups.iter().enumerate() {
        let gx = x0 + 30.0 + g as f64 * 210.0;
        for (k, (count, name)) in [(*neg, "non-bankrupt (0)"), (*pos, "bankrupt (1)")]
            .iter()
            .enumerate()
        {
            let bh = *count as f64 / max * plot_h;
            let bx = gx + k as f64 * 85.0;
            let _ = writeln!(
                s,
                r#"<rect x="{bx:.2}" y="{:.2}" width="75" height="{bh:.2}" fill="{}"><title>{}: {count}</title></rect>"#,
                y0 - bh,
                PALETTE[k],
                escape(name)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{count}</text>"#,
                bx + 37.5,
                y0 - bh - 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="13">{label}</text>"#,
            gx + 80.0,
            y0 + 20.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="380" y="40" width="12" height="12" fill="{}"/><text x="396" y="51" font-size="12">label 0</text>"#,
        PALETTE[0]
    );
    let _ = writeln!(
        s,
        r#"<rect x="440" y="40" width="12" height="12" fill="{}"/><text x="456" y="51" font-size="12">label 1</text>"#,
        PALETTE[1]
    );
    s.push_str("</svg>\n");
    s
}

/// One labelled ROC curve: name, (fpr, tpr) points, AUC.
pub type RocSeries = (String, Vec<(f64, f64)>, f64);

/// ROC curves of several models on shared axes.
pub fn roc_overlay(curves: &[RocSeries]) -> String {
    let (w, h) = (520u32, 520u32);
    let mut s = open(w, h, "ROC curves (holdout)");
    let (x0, y0, side) = (60.0, 470.0, 420.0);
    let px = |v: f64| x0 + v * side;
    let py = |v: f64| y0 - v * side;
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{}" width="{side}" height="{side}" fill="none" stroke="black"/>"#,
        y0 - side
    );
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for t in 0..=5 {
        let v = t as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="11">{v:.1}</text>"#,
            px(v),
            y0 + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{v:.1}</text>"#,
            x0 - 6.0,
            py(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">false positive rate</text>"#,
        px(0.5),
        y0 + 36.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {:.2})">true positive rate</text>"#,
        py(0.5),
        py(0.5)
    );
    for (i, (name, pts, auc)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (k, (fx, ty)) in pts.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2}",
                if k == 0 { "M" } else { " L" },
                px(*fx),
                py(*ty)
            );
        }
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.8"/>"#
        );
        let ly = py(0.0) - 12.0 - 16.0 * (curves.len() - 1 - i) as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly:.2}" x2="{}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/><text x="{}" y="{:.2}" font-size="12">{} (AUC {auc:.3})</text>"#,
            px(0.55),
            px(0.6),
            px(0.62),
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// 2x2 confusion grid, rows = actual class, columns = predicted class.
pub fn confusion_grid(cm: &ConfusionMatrix, model: &str) -> String {
    let (w, h) = (420u32, 400u32);
    let mut s = open(w, h, &format!("Confusion matrix: {model}"));
    let cells = [
        [("TN", cm.tn), ("FP", cm.fp)],
        [("FN", cm.fn_), ("TP", cm.tp)],
    ];
    let max = [cm.tn, cm.fp, cm.fn_, cm.tp]
        .into_iter()
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let (x0, y0, cell) = (120.0, 80.0, 130.0);
    for (r, row) in cells.iter().enumerate() {
        for (c, (tag, count)) in row.iter().enumerate() {
            let shade = 245.0 - 190.0 * (*count as f64 / max);
            let g = shade.round() as u8;
            let fill = format!("rgb({g},{g},255)");
            let (cx, cy) = (x0 + c as f64 * cell, y0 + r as f64 * cell);
            let _ = writeln!(
                s,
                r#"<rect x="{cx}" y="{cy}" width="{cell}" height="{cell}" fill="{fill}" stroke="black"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" font-size="18">{tag}: {count}</text>"#,
                cx + cell / 2.0,
                cy + cell / 2.0 + 6.0
            );
        }
    }
    for (i, label) in ["0", "1"].iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">predicted {label}</text>"#,
            x0 + cell / 2.0 + i as f64 * cell,
            y0 - 10.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="13">actual {label}</text>"#,
            x0 - 10.0,
            y0 + cell / 2.0 + i as f64 * cell + 5.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Horizontal bars of mean |attribution| for the top features.
pub fn shap_summary(importance: &GlobalImportance, top_n: usize) -> String {
    let rows: Vec<_> = importance.ranking.iter().take(top_n).collect();
    let bar_h = 22.0;
    let h = (80.0 + bar_h * rows.len() as f64 + 30.0) as u32;
    let w = 640u32;
    let mut s = open(w, h, "Mean |SHAP value| by feature");
    let max = rows
        .first()
        .map_or(1.0, |r| r.mean_abs_attribution)
        .max(f64::MIN_POSITIVE);
    let (x0, y0, width) = (230.0, 50.0, 340.0);
    for (i, r) in rows.iter().enumerate() {
        let y = y0 + i as f64 * bar_h;
        let bw = r.mean_abs_attribution / max * width;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="12">{}</text>"#,
            x0 - 8.0,
            y + 15.0,
            escape(&r.feature)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{:.2}" width="{bw:.2}" height="{:.2}" fill="{}"/>"#,
            y + 3.0,
            bar_h - 6.0,
            PALETTE[0]
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{:.4}</text>"#,
            x0 + bw + 4.0,
            y + 15.0,
            r.mean_abs_attribution
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed_and_escaped() {
        let svg = roc_overlay(&[("a<b".into(), vec![(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)], 0.9)]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a&lt;b"));
        let cm = ConfusionMatrix {
            tp: 3,
            fp: 1,
            tn: 10,
            fn_: 2,
        };
        assert!(confusion_grid(&cm, "m").contains("TP: 3"));
        assert!(class_distribution((100, 2), Some((100, 100))).contains(">100<"));
    }
}
