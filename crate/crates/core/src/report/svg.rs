use std::fmt::Write;

use crate::engine::SimResult;

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 150.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const GAP: f64 = 30.0;

/// Frequency, bus voltages, source active power and genset loading.
pub fn default_panels(result: &SimResult) -> Vec<String> {
    let mut panels = vec!["freq_hz".to_string()];
    panels.extend(result.columns.iter().filter(|c| c.starts_with("v_")).cloned());
    panels.extend(result.columns.iter().filter(|c| c.starts_with("p_")).cloned());
    panels.push("genset_loading_pu".to_string());
    panels.retain(|p| result.channel(p).is_some());
    panels
}

/// Reduces a series to at most two points per horizontal pixel, keeping the
/// extremes so that spikes survive.
fn decimate(t: &[f64], y: &[f64], t0: f64, t1: f64, px: f64) -> Vec<(f64, f64)> {
    let n = t.len().min(y.len());
    if n <= 2 * px as usize {
        return (0..n).map(|k| (t[k], y[k])).collect();
    }
    let mut out = Vec::new();
    let mut k = 0;
    let span = (t1 - t0).max(f64::MIN_POSITIVE);
    while k < n {
        let bucket = ((t[k] - t0) / span * px).floor();
        let mut lo = k;
        let mut hi = k;
        let mut j = k;
        while j < n && ((t[j] - t0) / span * px).floor() == bucket {
            if y[j] < y[lo] {
                lo = j;
            }
            if y[j] > y[hi] {
                hi = j;
            }
            j += 1;
        }
        let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        out.push((t[a], y[a]));
        if b != a {
            out.push((t[b], y[b]));
        }
        k = j;
    }
    out
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 4.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

/// Stacked time-series panels. The run under study is drawn in red over the
/// baseline in black when one is given.
pub fn svg_overlay(result: &SimResult, baseline: Option<&SimResult>, panels: &[String]) -> String {
    let t_end = result
        .duration_s
        .max(baseline.map_or(0.0, |b| b.duration_s))
        .max(result.time_s.last().copied().unwrap_or(0.0));
    let plot_w = WIDTH - LEFT - RIGHT;
    let height = TOP + panels.len() as f64 * (PANEL_H + GAP) + 20.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = write!(s, r#"<text x="{LEFT}" y="18" font-size="14">{}</text>"#, result.scenario);
    if baseline.is_some() {
        let _ = write!(
            s,
            r#"<line x1="{a}" y1="14" x2="{b}" y2="14" stroke="black"/><text x="{c}" y="18">baseline</text><line x1="{d}" y1="14" x2="{e}" y2="14" stroke="red"/><text x="{f}" y="18">attack</text>"#,
            a = WIDTH - 260.0,
            b = WIDTH - 235.0,
            c = WIDTH - 230.0,
            d = WIDTH - 150.0,
            e = WIDTH - 125.0,
            f = WIDTH - 120.0
        );
    }
    s.push('\n');

    for (i, name) in panels.iter().enumerate() {
        let y0 = TOP + i as f64 * (PANEL_H + GAP);
        let series: Vec<(&SimResult, &str)> = baseline
            .into_iter()
            .map(|b| (b, "black"))
            .chain([(result, "red")])
            .filter(|(r, _)| r.channel(name).is_some())
            .collect();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (r, _) in &series {
            for &v in r.channel(name).expect("filtered").iter().filter(|v| v.is_finite()) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-9 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = (hi - lo) * 0.05;
        let (lo, hi) = (lo - pad, hi + pad);
        let x = |t: f64| LEFT + t / t_end.max(f64::MIN_POSITIVE) * plot_w;
        let y = |v: f64| y0 + (hi - v) / (hi - lo) * PANEL_H;

        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{y0}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#888"/>"##
        );
        let _ = writeln!(s, r#"<text x="{LEFT}" y="{}" font-weight="bold">{name}</text>"#, y0 - 4.0);
        let step = nice_step(hi - lo);
        let mut tick = (lo / step).ceil() * step;
        while tick <= hi {
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{yy}" x2="{x2}" y2="{yy}" stroke="#eee"/><text x="{tx}" y="{ty}" text-anchor="end">{tick:.3}</text>"##,
                yy = y(tick),
                x2 = LEFT + plot_w,
                tx = LEFT - 4.0,
                ty = y(tick) + 4.0,
                tick = if tick.abs() < step * 1e-9 { 0.0 } else { tick }
            );
            tick += step;
        }
        if i + 1 == panels.len() {
            let tstep = nice_step(t_end);
            let mut t = 0.0;
            while t <= t_end + 1e-9 {
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle">{t}</text>"#,
                    x(t),
                    y0 + PANEL_H + 14.0
                );
                t += tstep;
            }
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">time (s)</text>"#,
                LEFT + plot_w / 2.0,
                y0 + PANEL_H + 28.0
            );
        }
        for (r, colour) in series {
            let pts = decimate(&r.time_s, r.channel(name).expect("filtered"), 0.0, t_end, plot_w);
            let mut path = String::new();
            for (t, v) in pts.into_iter().filter(|(_, v)| v.is_finite()) {
                let _ = write!(path, "{:.2},{:.2} ", x(t), y(v));
            }
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#,
                path.trim_end()
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Termination;
    use crate::event_log::EventLog;

    fn run(name: &str, f: Vec<f64>) -> SimResult {
        let n = f.len();
        SimResult {
            scenario: name.into(),
            dt_s: 0.01,
            duration_s: (n - 1) as f64 * 0.01,
            time_s: (0..n).map(|k| k as f64 * 0.01).collect(),
            columns: vec!["freq_hz".into(), "v_Bus-2_pu".into()],
            data: vec![f, vec![1.0; n]],
            log: EventLog::new(),
            status: Termination::Completed,
            trace: Vec::new(),
        }
    }

    #[test]
    fn overlay_draws_black_baseline_and_red_attack() {
        let a = run("attack", (0..5000).map(|k| 60.0 - (k as f64 * 1e-3).sin()).collect());
        let b = run("base", vec![60.0; 5000]);
        let svg = svg_overlay(&a, Some(&b), &default_panels(&a));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches(r#"stroke="black" stroke-width"#).count(), 2);
        assert_eq!(svg.matches(r#"stroke="red" stroke-width"#).count(), 2);
        assert!(svg.contains("v_Bus-2_pu"));
    }

    #[test]
    fn decimation_keeps_spikes() {
        let t: Vec<f64> = (0..100_000).map(|k| k as f64 * 1e-4).collect();
        let mut y = vec![0.0; t.len()];
        y[54_321] = 5.0;
        let pts = decimate(&t, &y, 0.0, 10.0, 800.0);
        assert!(pts.len() <= 1600);
        assert!(pts.iter().any(|p| p.1 == 5.0));
    }
}
