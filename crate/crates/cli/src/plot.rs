//! Static SVG figures with a fixed palette and viewport.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cftrain_core::attacks::AttackKind;
use cftrain_core::data::Dataset;
use cftrain_core::eval::Scenario;
use cftrain_core::nn::MlpModel;

use crate::error::CliError;
use crate::experiment::{ExperimentReport, RobustCurve};

pub const WIDTH: f64 = 480.0;
pub const HEIGHT: f64 = 400.0;
pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const STAR: &str = "#ffd700";
const MARGIN: f64 = 48.0;
const GRID: usize = 40;
const MAX_POINTS: usize = 800;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(svg: &mut String, title: &str) {
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = write!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = write!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

/// Linear map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, from: f64, to: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, from, to }
    }

    fn map(&self, v: f64) -> f64 {
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }

    fn inverse(&self, px: f64) -> f64 {
        self.lo + (px - self.from) / (self.to - self.from) * (self.hi - self.lo)
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = 0.05 * (hi - lo).max(1e-6);
    (lo - pad, hi + pad)
}

fn star(cx: f64, cy: f64, r: f64) -> String {
    (0..10)
        .map(|k| {
            let radius = if k % 2 == 0 { r } else { 0.45 * r };
            let angle = std::f64::consts::PI * (k as f64 / 5.0 - 0.5);
            format!("{:.2},{:.2}", cx + radius * angle.cos(), cy + radius * angle.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Marching squares on the zero level of `f` over a `(GRID+1)²` node lattice.
fn zero_contour(f: &[Vec<f64>], xs: &[f64], ys: &[f64]) -> String {
    let mut d = String::new();
    let lerp = |a: f64, b: f64, fa: f64, fb: f64| a + (b - a) * fa / (fa - fb);
    for i in 0..xs.len() - 1 {
        for j in 0..ys.len() - 1 {
            let corners = [
                (xs[i], ys[j], f[i][j]),
                (xs[i + 1], ys[j], f[i + 1][j]),
                (xs[i + 1], ys[j + 1], f[i + 1][j + 1]),
                (xs[i], ys[j + 1], f[i][j + 1]),
            ];
            let mut cuts = Vec::with_capacity(4);
            for e in 0..4 {
                let (x0, y0, f0) = corners[e];
                let (x1, y1, f1) = corners[(e + 1) % 4];
                if (f0 < 0.0) != (f1 < 0.0) {
                    cuts.push((lerp(x0, x1, f0, f1), lerp(y0, y1, f0, f1)));
                }
            }
            for pair in cuts.chunks_exact(2) {
                let _ = write!(
                    d,
                    "M{:.2} {:.2}L{:.2} {:.2}",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                );
            }
        }
    }
    d
}

/// Decision regions and boundary of a model on 2-D data, with training points
/// colored by class and counterfactuals drawn as stars.
pub fn boundary_svg(
    model: &MlpModel,
    data: &Dataset,
    counterfactuals: &[Vec<f64>],
    title: &str,
) -> Result<String, CliError> {
    if data.dim() != 2 || model.input_dim() != 2 {
        return Err(cftrain_core::Error::Input("boundary plots need two features".into()).into());
    }
    let col = |d: usize| {
        (0..data.len())
            .map(move |i| data.x.get(i, d))
            .chain(counterfactuals.iter().map(move |c| c[d]))
    };
    let (x_lo, x_hi) = padded_range(col(0));
    let (y_lo, y_hi) = padded_range(col(1));
    let sx = Scale::new(x_lo, x_hi, MARGIN, WIDTH - MARGIN);
    let sy = Scale::new(y_lo, y_hi, HEIGHT - MARGIN, MARGIN);

    let mut svg = String::new();
    open(&mut svg, title);

    // class regions on a coarse grid, plus the zero level of the logit gap
    let cell_w = (WIDTH - 2.0 * MARGIN) / GRID as f64;
    let cell_h = (HEIGHT - 2.0 * MARGIN) / GRID as f64;
    svg.push_str(r#"<g id="regions" opacity="0.15">"#);
    for i in 0..GRID {
        for j in 0..GRID {
            let px = MARGIN + (i as f64 + 0.5) * cell_w;
            let py = MARGIN + (j as f64 + 0.5) * cell_h;
            let class = model.predict(&[sx.inverse(px), sy.inverse(py)])?;
            let _ = write!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                px - 0.5 * cell_w,
                py - 0.5 * cell_h,
                cell_w,
                cell_h,
                PALETTE[class % PALETTE.len()]
            );
        }
    }
    svg.push_str("</g>");
    if model.classes() == 2 {
        let xs: Vec<f64> = (0..=GRID).map(|i| MARGIN + i as f64 * cell_w).collect();
        let ys: Vec<f64> = (0..=GRID).map(|j| MARGIN + j as f64 * cell_h).collect();
        let f = xs
            .iter()
            .map(|&px| {
                ys.iter()
                    .map(|&py| {
                        let l = model.forward(&[sx.inverse(px), sy.inverse(py)])?;
                        Ok(l[1] - l[0])
                    })
                    .collect::<Result<Vec<f64>, CliError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let d = zero_contour(&f, &xs, &ys);
        if !d.is_empty() {
            let _ = write!(svg, r#"<path id="boundary" d="{d}" fill="none" stroke="black" stroke-width="1.5"/>"#);
        }
    }

    svg.push_str(r#"<g id="points">"#);
    let stride = data.len().div_ceil(MAX_POINTS).max(1);
    for i in (0..data.len()).step_by(stride) {
        let _ = write!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.7"/>"#,
            sx.map(data.x.get(i, 0)),
            sy.map(data.x.get(i, 1)),
            PALETTE[data.y[i] % PALETTE.len()]
        );
    }
    svg.push_str("</g>");
    svg.push_str(r#"<g id="counterfactuals">"#);
    for c in counterfactuals {
        let _ = write!(
            svg,
            r#"<polygon points="{}" fill="{STAR}" stroke="black" stroke-width="0.6"/>"#,
            star(sx.map(c[0]), sy.map(c[1]), 7.0)
        );
    }
    svg.push_str("</g>");
    let _ = write!(
        svg,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Test accuracy against attack budget, one series per objective.
///
/// The horizontal axis spans exactly `[min ε, max ε]` of `epsilons`.
pub fn robust_svg(attack: AttackKind, curves: &[&RobustCurve], epsilons: &[f64]) -> String {
    let (e_lo, e_hi) = epsilons
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let (e_lo, e_hi) = if e_lo.is_finite() { (e_lo, e_hi) } else { (0.0, 0.0) };
    let sx = Scale::new(e_lo, e_hi, MARGIN, WIDTH - MARGIN);
    let sy = Scale::new(0.0, 1.0, HEIGHT - MARGIN, MARGIN);

    let mut svg = String::new();
    open(&mut svg, &format!("Robust accuracy under {}", attack.name().to_uppercase()));
    let _ = write!(
        svg,
        r#"<g id="x-axis" data-min="{e_lo}" data-max="{e_hi}"><line x1="{MARGIN}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = HEIGHT - MARGIN,
        x2 = WIDTH - MARGIN
    );
    for &e in epsilons {
        let x = sx.map(e);
        let _ = write!(
            svg,
            r#"<line x1="{x:.2}" y1="{y}" x2="{x:.2}" y2="{y2}" stroke="black"/><text x="{x:.2}" y="{ty}" text-anchor="middle">{e}</text>"#,
            y = HEIGHT - MARGIN,
            y2 = HEIGHT - MARGIN + 4.0,
            ty = HEIGHT - MARGIN + 16.0
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">ε</text></g>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0
    );
    let _ = write!(
        svg,
        r#"<g id="y-axis" data-min="0" data-max="1"><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="black"/>"#,
        HEIGHT - MARGIN
    );
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let _ = write!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{v}</text>"#,
            MARGIN - 6.0,
            sy.map(v) + 4.0
        );
    }
    svg.push_str("</g>");
    for (k, c) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points = c
            .points
            .iter()
            .map(|(e, a)| format!("{:.2},{:.2}", sx.map(*e), sy.map(*a)))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = write!(
            svg,
            r#"<polyline class="series" data-objective="{}" points="{points}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            c.objective
        );
        let ly = MARGIN + 14.0 * k as f64;
        let _ = write!(
            svg,
            r#"<line x1="{x0}" y1="{ly}" x2="{x1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{tx}" y="{ty}">{}</text>"#,
            c.objective,
            x0 = WIDTH - MARGIN - 70.0,
            x1 = WIDTH - MARGIN - 52.0,
            tx = WIDTH - MARGIN - 48.0,
            ty = ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `plots/*.svg` and returns notes about skipped figures.
pub fn emit_plots(report: &ExperimentReport, dir: &Path) -> Result<Vec<String>, CliError> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots)?;
    let mut notes = Vec::new();
    match &report.train {
        Some(train) if train.dim() == 2 => {
            for v in report.variants.iter().filter(|v| v.scenario == Scenario::Unconstrained) {
                let title = format!("{}: {}", report.dataset, v.objective);
                let svg = boundary_svg(&v.model, train, &report.counterfactuals(v.objective), &title)?;
                fs::write(plots.join(format!("boundary_{}.svg", v.objective)), svg)?;
            }
        }
        Some(train) => notes.push(format!(
            "boundary plots skipped: data has {} features, need 2",
            train.dim()
        )),
        None => notes.push("boundary plots skipped: no training data in report".into()),
    }
    for attack in [AttackKind::Fgsm, AttackKind::Pgd] {
        let curves: Vec<&RobustCurve> = report.robustness.iter().filter(|c| c.attack == attack).collect();
        fs::write(
            plots.join(format!("robust_{}.svg", attack.name())),
            robust_svg(attack, &curves, &report.epsilons),
        )?;
    }
    Ok(notes)
}
