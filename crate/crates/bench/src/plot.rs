//! Self-contained SVG plots of sweep records.
//!
//! Energy plots (one per instance) show the minimum energy over repeats for
//! each backend and threshold. Runtime plots (one per size) show the mean
//! wall time over every instance and repeat, summed in record order. Both
//! use a log₁₀ threshold axis. Every plotted point carries `data-backend`,
//! `data-threshold` and `data-value` attributes holding the exact values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qf_core::Backend;

use crate::error::{BenchError, Result};
use crate::harness::BenchRecord;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub threshold: f64,
    pub value: f64,
}

/// Points per backend, sorted by increasing threshold.
pub type SeriesSet = BTreeMap<Backend, Vec<Point>>;

pub fn color(backend: Backend) -> &'static str {
    match backend {
        Backend::Sa => "#000000",
        Backend::Adam => "#1f77b4",
        Backend::Adamw => "#ff7f0e",
        Backend::Lbfgs => "#d62728",
    }
}

pub fn label(backend: Backend) -> &'static str {
    match backend {
        Backend::Sa => "SA",
        Backend::Adam => "Adam",
        Backend::Adamw => "AdamW",
        Backend::Lbfgs => "L-BFGS",
    }
}

/// Raw values per backend and threshold, before reduction.
type RawSet = BTreeMap<Backend, Vec<(f64, Vec<f64>)>>;

fn push_value(set: &mut RawSet, r: &BenchRecord, v: f64) {
    let pts = set.entry(r.backend).or_default();
    match pts.iter_mut().find(|(t, _)| t.to_bits() == r.threshold.to_bits()) {
        Some((_, vals)) => vals.push(v),
        None => pts.push((r.threshold, vec![v])),
    }
}

fn reduce(raw: RawSet, f: impl Fn(&[f64]) -> f64) -> SeriesSet {
    raw.into_iter()
        .map(|(b, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let pts = pts
                .into_iter()
                .map(|(threshold, vals)| Point {
                    threshold,
                    value: f(&vals),
                })
                .collect();
            (b, pts)
        })
        .collect()
}

/// Minimum energy per `(n, instance_id)`, backend and threshold.
pub fn energy_groups(records: &[BenchRecord]) -> BTreeMap<(usize, String), SeriesSet> {
    let mut raw: BTreeMap<(usize, String), RawSet> = BTreeMap::new();
    for r in records {
        push_value(raw.entry((r.n, r.instance_id.clone())).or_default(), r, r.energy);
    }
    raw.into_iter()
        .map(|(k, set)| (k, reduce(set, |v| v.iter().copied().fold(f64::INFINITY, f64::min))))
        .collect()
}

/// Mean wall time per size, backend and threshold.
pub fn runtime_groups(records: &[BenchRecord]) -> BTreeMap<usize, SeriesSet> {
    let mut raw: BTreeMap<usize, RawSet> = BTreeMap::new();
    for r in records {
        push_value(raw.entry(r.n).or_default(), r, r.wall_time_s);
    }
    raw.into_iter()
        .map(|(k, set)| (k, reduce(set, |v| v.iter().sum::<f64>() / v.len() as f64)))
        .collect()
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64) -> Axis {
        if hi - lo > 0.0 {
            let pad = 0.05 * (hi - lo);
            Axis {
                lo: lo - pad,
                hi: hi + pad,
            }
        } else {
            let pad = lo.abs().max(1.0) * 0.5;
            Axis {
                lo: lo - pad,
                hi: hi + pad,
            }
        }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn px(axis: &Axis, v: f64) -> f64 {
    LEFT + axis.frac(v) * (WIDTH - LEFT - RIGHT)
}

fn py(axis: &Axis, v: f64) -> f64 {
    HEIGHT - BOTTOM - axis.frac(v) * (HEIGHT - TOP - BOTTOM)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one chart. `log_y` plots `log₁₀(value)`; non-positive values
/// are drawn at the bottom edge.
pub fn render_svg(title: &str, y_label: &str, series: &SeriesSet, log_y: bool) -> String {
    let tf = |v: f64| v.log10();
    let yf = |v: f64| if log_y { v.max(f64::MIN_POSITIVE).log10() } else { v };

    let mut thresholds: Vec<f64> = series.values().flatten().map(|p| p.threshold).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let ys: Vec<f64> = series.values().flatten().map(|p| yf(p.value)).collect();
    let x_axis = Axis::new(tf(thresholds[0]), tf(*thresholds.last().unwrap()));
    let y_axis = Axis::new(
        ys.iter().copied().fold(f64::INFINITY, f64::min),
        ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );

    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        s,
        r#"<g stroke="black" fill="none"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#
    );

    // x ticks at the thresholds
    for &t in &thresholds {
        let x = px(&x_axis, tf(t));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{t:e}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">stopping threshold (log scale)</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );

    // y ticks
    for k in 0..=4 {
        let v = y_axis.lo + (y_axis.hi - y_axis.lo) * k as f64 / 4.0;
        let y = py(&y_axis, v);
        let text = if log_y {
            format!("{:.3e}", 10f64.powf(v))
        } else {
            format!("{v:.1}")
        };
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{text}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );

    for (i, (&backend, pts)) in series.iter().enumerate() {
        let c = color(backend);
        let path: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(&x_axis, tf(p.threshold)), py(&y_axis, yf(p.value))))
            .collect();
        let _ = writeln!(s, r#"<g class="series" data-backend="{backend}">"#);
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        for p in pts {
            let _ = writeln!(
                s,
                r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="{c}" data-backend="{backend}" data-threshold="{}" data-value="{}"/>"#,
                px(&x_axis, tf(p.threshold)),
                py(&y_axis, yf(p.value)),
                p.threshold,
                p.value
            );
        }
        let _ = writeln!(s, "</g>");

        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            label(backend)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn energy_file_name(instance_id: &str) -> String {
    format!("energy_{instance_id}.svg")
}

pub fn runtime_file_name(n: usize) -> String {
    format!("runtime_n{n}.svg")
}

/// Writes one energy plot per instance and one runtime plot per size into
/// `out_dir`; returns the paths written.
pub fn emit_plots(records: &[BenchRecord], out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(BenchError::Empty("no records to plot".into()));
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for ((n, id), set) in energy_groups(records) {
        let path = out_dir.join(energy_file_name(&id));
        let title = format!("Best energy, {id} (n = {n})");
        fs::write(&path, render_svg(&title, "energy (best of repeats)", &set, false))?;
        written.push(path);
    }
    for (n, set) in runtime_groups(records) {
        let path = out_dir.join(runtime_file_name(n));
        let title = format!("Mean runtime, n = {n}");
        fs::write(&path, render_svg(&title, "wall time [s] (log scale)", &set, true))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qf_core::StopReason;

    fn rec(id: &str, backend: Backend, threshold: f64, energy: f64, wall: f64) -> BenchRecord {
        BenchRecord {
            instance_id: id.into(),
            backend,
            n: 10,
            threshold,
            seed: 0,
            energy,
            steps: 1,
            wall_time_s: wall,
            stop_reason: StopReason::Converged,
        }
    }

    #[test]
    fn groups_take_min_energy_and_mean_time() {
        let recs = vec![
            rec("a", Backend::Adam, 1e-3, -4.0, 1.0),
            rec("a", Backend::Adam, 1e-3, -6.0, 3.0),
            rec("a", Backend::Adam, 1e-1, -2.0, 0.5),
            rec("b", Backend::Adam, 1e-3, -1.0, 2.0),
        ];
        let e = energy_groups(&recs);
        assert_eq!(e.len(), 2);
        let a = &e[&(10, "a".to_string())][&Backend::Adam];
        assert_eq!(a, &vec![Point { threshold: 1e-3, value: -6.0 }, Point { threshold: 1e-1, value: -2.0 }]);
        let r = runtime_groups(&recs);
        let pts = &r[&10][&Backend::Adam];
        assert_eq!(pts[0], Point { threshold: 1e-3, value: 2.0 });
        assert_eq!(pts[1], Point { threshold: 1e-1, value: 0.5 });
    }

    #[test]
    fn single_point_series_renders() {
        let recs = vec![rec("a", Backend::Sa, 0.1, -3.0, 0.01)];
        let svg = render_svg("t", "y", &energy_groups(&recs)[&(10, "a".to_string())], false);
        assert_eq!(svg.matches("class=\"point\"").count(), 1);
        assert!(svg.contains(r##"fill="#000000" data-backend="sa" data-threshold="0.1" data-value="-3""##));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn empty_records_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plots(&[], dir.path()).is_err());
    }
}
