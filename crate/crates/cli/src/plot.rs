//! Deterministic SVG line charts of the CSV outputs.

use std::fmt::Write;

use ergotau::export::Table;

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Which columns of a known CSV layout are plotted.
struct Layout {
    x: &'static str,
    ys: &'static [&'static str],
    /// Column whose values split rows into separate series.
    group: Option<&'static str>,
    log_x: bool,
}

fn layout(header: &[String]) -> Option<Layout> {
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let l = match h.as_slice() {
        ["n", "H_n", "increment"] => Layout { x: "n", ys: &["H_n"], group: None, log_x: false },
        ["t", "C_t", "running_average"] => Layout { x: "t", ys: &["C_t", "running_average"], group: None, log_x: false },
        ["t", "value", "kind"] => Layout { x: "t", ys: &["value"], group: Some("kind"), log_x: false },
        ["hbar", "q", "tau", "lower", "upper", "gap"] => Layout { x: "hbar", ys: &["tau"], group: None, log_x: true },
        ["hbar", "q", "interior_boxes", "boundary_boxes", "interior_volume"] => {
            Layout { x: "hbar", ys: &["interior_volume"], group: None, log_x: true }
        }
        ["q", "hbar", "t_b"] => Layout { x: "q", ys: &["t_b"], group: None, log_x: true },
        _ => return None,
    };
    Some(l)
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart {
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

/// Reads `(name, csv text)` inputs into one chart; all inputs must share
/// the x column.
pub fn chart(inputs: &[(String, String)]) -> CliResult<Chart> {
    let mut chart: Option<Chart> = None;
    for (name, text) in inputs {
        let table = Table::parse(text).map_err(|e| CliError::Schema(format!("{name}: {e}")))?;
        let l = layout(&table.header)
            .ok_or_else(|| CliError::Schema(format!("{name}: unrecognised columns {}", table.header.join(","))))?;
        let c = chart.get_or_insert_with(|| Chart {
            x_label: l.x.to_string(),
            y_label: l.ys.join(", "),
            log_x: l.log_x,
            series: Vec::new(),
        });
        if c.x_label != l.x {
            return Err(CliError::Schema(format!("{name}: x column `{}` does not match `{}`", l.x, c.x_label)));
        }
        let xi = table.column(l.x).expect("layout column");
        for y in l.ys {
            let yi = table.column(y).expect("layout column");
            let gi = l.group.and_then(|g| table.column(g));
            let mut groups: Vec<Series> = Vec::new();
            for row in &table.rows {
                let (Ok(xv), Ok(yv)) = (row[xi].parse::<f64>(), row[yi].parse::<f64>()) else {
                    continue;
                };
                let label = match gi {
                    Some(g) => format!("{name} {}", row[g]),
                    None if l.ys.len() > 1 => format!("{name} {y}"),
                    None => name.clone(),
                };
                match groups.iter_mut().find(|s| s.label == label) {
                    Some(s) => s.points.push((xv, yv)),
                    None => groups.push(Series { label, points: vec![(xv, yv)] }),
                }
            }
            c.series.extend(groups);
        }
    }
    let c = chart.ok_or_else(|| CliError::Config("plot needs at least one CSV".into()))?;
    if c.series.iter().all(|s| s.points.is_empty()) {
        return Err(CliError::Schema("no numeric rows to plot".into()));
    }
    Ok(c)
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0');
        s.trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Renders the chart; `marker` draws a labelled vertical line at that x.
pub fn render(chart: &Chart, title: &str, marker: Option<f64>) -> String {
    let tx = |x: f64| if chart.log_x { x.log10() } else { x };
    let pts = || chart.series.iter().flat_map(|s| s.points.iter()).filter(|p| !chart.log_x || p.0 > 0.0);
    let (x0, x1) = range(pts().map(|p| tx(p.0)).chain(marker.map(tx)));
    let (y0, y1) = range(pts().map(|p| p.1));
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (tx(x) - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let xv = x0 + f * (x1 - x0);
        let px = LEFT + f * pw;
        let label = if chart.log_x { tick_label(10f64.powf(xv)) } else { tick_label(xv) };
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{label}</text>"#, TOP + ph + 20.0);
        let yv = y0 + f * (y1 - y0);
        let py = TOP + (1.0 - f) * ph;
        let _ = writeln!(svg, r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, py + 4.0, tick_label(yv));
    }
    let x_label = if chart.log_x { format!("{} (log scale)", chart.x_label) } else { chart.x_label.clone() };
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    );
    for (i, s) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|p| !chart.log_x || p.0 > 0.0)
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        let ly = TOP + 16.0 + 16.0 * i as f64;
        let lx = LEFT + pw - 180.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
    }
    if let Some(m) = marker {
        let px = sx(m);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{}" stroke="gray" stroke-dasharray="6,4"/>"#,
            TOP + ph
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{}" fill="gray">t_b = {}</text>"#, px + 4.0, TOP + 14.0, tick_label(m));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(name: &str, text: &str) -> (String, String) {
        (name.to_string(), text.to_string())
    }

    #[test]
    fn unknown_columns_are_rejected() {
        let err = chart(&[input("a", "x,y\n1,2\n")]).err().unwrap();
        assert_eq!(err.kind(), "SchemaMismatch");
    }

    #[test]
    fn mixed_x_columns_are_rejected() {
        let a = input("a", "n,H_n,increment\n0,0.5,0.5\n");
        let b = input("b", "t,value,kind\n0,1.0,quantum\n");
        assert_eq!(chart(&[a, b]).err().unwrap().kind(), "SchemaMismatch");
    }

    #[test]
    fn kinds_split_into_series() {
        let c = chart(&[input("c", "t,value,kind\n0,1.0,quantum\n1,2.0,quantum\n0,1.0,classical\n1,3.0,classical\n")])
            .unwrap();
        assert_eq!(c.series.len(), 2);
        let svg = render(&c, "curves", Some(1.0));
        assert!(svg.contains("t_b = 1"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn missing_break_times_are_skipped() {
        let c = chart(&[input("b", "q,hbar,t_b\n256.0,0.02,3\n512.0,0.01,none\n")]).unwrap();
        assert_eq!(c.series[0].points, vec![(256.0, 3.0)]);
    }

    #[test]
    fn tick_labels() {
        assert_eq!(tick_label(0.5), "0.5");
        assert_eq!(tick_label(2.0), "2");
        assert_eq!(tick_label(1e-5), "1.00e-5");
    }
}
