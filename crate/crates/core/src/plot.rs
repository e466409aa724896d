//! Static SVG renderings of rasters and voltage traces.

use std::fmt::Write;

use crate::engine::{SimulationRecord, VoltageTrace};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 45.0;

struct Frame {
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn plot_w(&self) -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_h(&self) -> f64 {
        HEIGHT - TOP - BOTTOM
    }

    fn x(&self, v: f64) -> f64 {
        LEFT + v / self.x_max * self.plot_w()
    }

    /// Row 0 at the bottom.
    fn y(&self, v: f64) -> f64 {
        TOP + self.plot_h() - v / self.y_max * self.plot_h()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Tick spacing giving roughly `target` ticks over `span`.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn open(out: &mut String, title: &str, desc: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, "<desc>{}</desc>", escape(desc));
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
}

fn axes(out: &mut String, f: &Frame, y_label: &str, y_ticks_at_centres: bool) {
    let (x0, y0) = (LEFT, TOP + f.plot_h());
    let _ = writeln!(out, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(
        out,
        r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}"/>"#,
        LEFT + f.plot_w()
    );
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}"/>"#);
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g class="ticks" fill="black">"#);
    let xs = tick_step(f.x_max, 10.0);
    let mut t = 0.0;
    while t <= f.x_max + 1e-9 {
        let x = f.x(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y0}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{t}</text>"#,
            y0 + 4.0,
            y0 + 16.0
        );
        t += xs;
    }
    let ys = tick_step(f.y_max, 8.0).max(1.0);
    let shift = if y_ticks_at_centres { 0.5 } else { 0.0 };
    let mut v = 0.0;
    while v < f.y_max + 1e-9 {
        let y = f.y(v + shift);
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{x0}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0
        );
        v += ys;
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">time (ms)</text>"#,
        LEFT + f.plot_w() / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{y_label}</text>"#,
        TOP + f.plot_h() / 2.0,
        TOP + f.plot_h() / 2.0
    );
}

/// Time × neuron scatter, one `<rect class="spike">` per spike.
pub fn raster_svg(record: &SimulationRecord) -> String {
    let f = Frame {
        x_max: record.duration_ms.max(f64::MIN_POSITIVE),
        y_max: record.n.max(1) as f64,
    };
    let mut out = String::new();
    open(
        &mut out,
        "spike raster",
        &format!(
            "n={} duration_ms={} spikes={} config_digest={}",
            record.n,
            record.duration_ms,
            record.raster.len(),
            record.config_digest
        ),
    );
    axes(&mut out, &f, "neuron index", true);

    let w = (f.plot_w() / f.x_max * record.dt_ms).max(1.0);
    let h = (f.plot_h() / f.y_max).max(1.0);
    let _ = writeln!(out, r##"<g class="spikes" fill="#1f3b73">"##);
    for s in &record.raster {
        let _ = writeln!(
            out,
            r#"<rect class="spike" x="{:.2}" y="{:.2}" width="{w:.2}" height="{h:.2}"/>"#,
            f.x(s.time_ms),
            f.y(s.neuron as f64 + 1.0)
        );
    }
    let _ = writeln!(out, "</g>\n</svg>");
    out
}

fn heat_colour(frac: f64) -> String {
    // dark blue (cold) to yellow (hot)
    let f = frac.clamp(0.0, 1.0);
    let r = (20.0 + 235.0 * f) as u8;
    let g = (30.0 + 200.0 * f) as u8;
    let b = (110.0 * (1.0 - f)) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Heat map with one row per probe, coloured from `v_lo` to `v_hi` mV.
pub fn voltage_svg(trace: &VoltageTrace, config_digest: &str, v_lo: f64, v_hi: f64) -> String {
    let k = trace.probes.len();
    let steps = trace.times_ms.len();
    let dt = match trace.times_ms.as_slice() {
        [a, b, ..] => b - a,
        _ => 1.0,
    };
    let t_end = trace.times_ms.last().map_or(dt, |t| t + dt);
    let f = Frame {
        x_max: t_end.max(f64::MIN_POSITIVE),
        y_max: k.max(1) as f64,
    };
    let mut out = String::new();
    open(
        &mut out,
        "membrane potential",
        &format!(
            "probes={k} samples={steps} v_range=[{v_lo},{v_hi}] config_digest={config_digest}"
        ),
    );
    axes(&mut out, &f, "probe row", true);

    let span = (v_hi - v_lo).max(f64::MIN_POSITIVE);
    let w = f.plot_w() / f.x_max * dt;
    let h = f.plot_h() / f.y_max;
    for (row, probe) in trace.probes.iter().enumerate() {
        let _ = writeln!(out, r#"<g class="probe" data-neuron="{probe}">"#);
        for (t, sample) in trace.times_ms.iter().zip(&trace.samples) {
            let _ = writeln!(
                out,
                r#"<rect class="sample" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                f.x(*t),
                f.y(row as f64 + 1.0),
                w + 0.05,
                h,
                heat_colour((sample[row] - v_lo) / span)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, "</svg>");
    out
}
