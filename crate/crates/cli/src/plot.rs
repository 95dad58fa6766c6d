//! Minimal SVG bar charts for macro-F1 tables. Values are on a fixed 0..1 axis.

use std::fmt::Write;

pub struct Bar {
    pub label: String,
    /// `None` draws an empty slot.
    pub value: Option<f64>,
    pub note: String,
}

pub struct Group {
    pub label: String,
    pub values: Vec<f64>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 90.0;
const PALETTE: [&str; 4] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52"];

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn plot_height() -> f64 {
    HEIGHT - TOP - BOTTOM
}

fn y_of(v: f64) -> f64 {
    TOP + plot_height() * (1.0 - v.clamp(0.0, 1.0))
}

fn frame(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r##"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="#333333"/>"##,
        TOP + plot_height()
    );
}

fn x_label(svg: &mut String, x: f64, label: &str, note: &str) {
    let y = TOP + plot_height() + 16.0;
    let _ = writeln!(
        svg,
        r#"<text x="{x:.1}" y="{y:.1}" text-anchor="end" transform="rotate(-30 {x:.1} {y:.1})">{}</text>"#,
        escape(label)
    );
    if !note.is_empty() {
        let _ = writeln!(
            svg,
            r##"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="10" fill="#666666">{}</text>"##,
            TOP + plot_height() - 4.0,
            escape(note)
        );
    }
}

pub fn bar_chart(title: &str, bars: &[Bar]) -> String {
    let mut svg = String::new();
    frame(&mut svg, title);
    let slot = (WIDTH - LEFT - RIGHT) / bars.len().max(1) as f64;
    for (i, bar) in bars.iter().enumerate() {
        let x = LEFT + slot * i as f64;
        let center = x + slot / 2.0;
        if let Some(v) = bar.value {
            let y = y_of(v);
            let _ = writeln!(
                svg,
                r#"<rect x="{:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                x + slot * 0.15,
                slot * 0.7,
                TOP + plot_height() - y,
                PALETTE[0]
            );
            let _ = writeln!(
                svg,
                r#"<text x="{center:.1}" y="{:.1}" text-anchor="middle">{v:.3}</text>"#,
                y - 4.0
            );
        }
        x_label(&mut svg, center, &bar.label, &bar.note);
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn grouped_chart(title: &str, series: &[&str], groups: &[Group]) -> String {
    let mut svg = String::new();
    frame(&mut svg, title);
    let slot = (WIDTH - LEFT - RIGHT) / groups.len().max(1) as f64;
    let width = slot * 0.8 / series.len().max(1) as f64;
    for (i, group) in groups.iter().enumerate() {
        let x = LEFT + slot * i as f64 + slot * 0.1;
        for (j, &v) in group.values.iter().enumerate() {
            let y = y_of(v);
            let _ = writeln!(
                svg,
                r#"<rect x="{:.1}" y="{y:.1}" width="{width:.1}" height="{:.1}" fill="{}"/>"#,
                x + width * j as f64,
                TOP + plot_height() - y,
                PALETTE[j % PALETTE.len()]
            );
        }
        x_label(&mut svg, LEFT + slot * (i as f64 + 0.5), &group.label, "");
    }
    for (j, name) in series.iter().enumerate() {
        let x = WIDTH - RIGHT - 110.0;
        let y = TOP + 14.0 * j as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{y:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            PALETTE[j % PALETTE.len()],
            x + 14.0,
            y + 9.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bars_and_escaping() {
        let svg = bar_chart(
            "a<b",
            &[
                Bar {
                    label: "x&y".into(),
                    value: Some(0.5),
                    note: "n=1".into(),
                },
                Bar {
                    label: "empty".into(),
                    value: None,
                    note: "n=0".into(),
                },
            ],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("x&amp;y"));
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
