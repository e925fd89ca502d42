use std::fmt::Write;

use super::{FrameLayout, GHOST_DASH, GHOST_FILL_OPACITY};

const SIG_DIGITS: i32 = 6;
const TITLE_BASELINE: f64 = 30.0;
const BANNER_BASELINE: f64 = 56.0;
const LABEL_GAP: f64 = 6.0;

/// Formats `x` with six significant digits, without trailing zeros or
/// exponent notation. Negative zero prints as `0`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIG_DIGITS - 1 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

pub(super) fn write_svg(layout: &FrameLayout) -> String {
    let mut out = String::new();
    // Writing into a String is infallible.
    let w = &mut out;
    let (width, height) = (layout.width, layout.height);
    let (cx, cy, cw, ch) = layout.clip;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        w,
        r#"<defs><clipPath id="chart-area"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath></defs>"#,
        fmt_num(cx),
        fmt_num(cy),
        fmt_num(cw),
        fmt_num(ch)
    );
    let _ = writeln!(
        w,
        r##"<rect class="background" x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>"##
    );
    if !layout.title.is_empty() {
        let _ = writeln!(
            w,
            r##"<text class="title" x="{}" y="{}" font-size="22" font-weight="bold" fill="#222222">{}</text>"##,
            fmt_num(cx + LABEL_GAP * 2.0),
            fmt_num(TITLE_BASELINE),
            escape(&layout.title)
        );
    }
    if let Some(banner) = &layout.banner {
        let _ = writeln!(
            w,
            r##"<text class="banner" x="{}" y="{}" font-size="16" font-style="italic" fill="#444444">{}</text>"##,
            fmt_num(cx + LABEL_GAP * 2.0),
            fmt_num(BANNER_BASELINE),
            escape(banner)
        );
    }
    let _ = writeln!(
        w,
        r##"<text class="period" x="{}" y="{}" font-size="48" font-weight="bold" text-anchor="end" fill="#000000" fill-opacity="0.2">{}</text>"##,
        fmt_num(cx + cw - LABEL_GAP * 2.0),
        fmt_num(cy + ch - LABEL_GAP * 2.0),
        escape(&layout.period_label)
    );

    let _ = writeln!(w, r#"<g clip-path="url(#chart-area)">"#);
    for bar in &layout.bars {
        let mid = bar.y + bar.height / 2.0;
        let _ = writeln!(
            w,
            r#"<g class="bar" data-item="{}" opacity="{}">"#,
            escape(&bar.item_id),
            fmt_num(bar.opacity)
        );
        let _ = writeln!(
            w,
            r#"<rect class="bar-rect" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            fmt_num(bar.x),
            fmt_num(bar.y),
            fmt_num(bar.width),
            fmt_num(bar.height),
            bar.fill
        );
        for contour in &bar.contours {
            let pad = contour.stroke_width / 2.0;
            let _ = writeln!(
                w,
                r#"<rect class="contour" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="{}" stroke-width="{}"/>"#,
                fmt_num(bar.x - pad),
                fmt_num(bar.y - pad),
                fmt_num(bar.width + 2.0 * pad),
                fmt_num(bar.height + 2.0 * pad),
                contour.color,
                fmt_num(contour.stroke_width)
            );
        }
        let _ = writeln!(
            w,
            r##"<text class="label" x="{}" y="{}" font-size="14" text-anchor="end" dominant-baseline="middle" fill="#222222">{}</text>"##,
            fmt_num(bar.x - LABEL_GAP),
            fmt_num(mid),
            escape(&bar.item_id)
        );
        let _ = writeln!(
            w,
            r##"<text class="value" x="{}" y="{}" font-size="12" dominant-baseline="middle" fill="#444444">{}</text>"##,
            fmt_num(bar.x + bar.width + LABEL_GAP),
            fmt_num(mid),
            fmt_num(bar.value)
        );
        let _ = writeln!(w, "</g>");
    }
    for ghost in &layout.ghosts {
        let _ = writeln!(
            w,
            r#"<g class="ghost" data-item="{}">"#,
            escape(&ghost.item_id)
        );
        let _ = writeln!(
            w,
            r#"<rect class="ghost-rect" x="{}" y="{}" width="{}" height="{}" fill="{}" fill-opacity="{}" stroke="{}" stroke-width="1.5" stroke-dasharray="{}"/>"#,
            fmt_num(ghost.x),
            fmt_num(ghost.y),
            fmt_num(ghost.width),
            fmt_num(ghost.height),
            ghost.fill,
            fmt_num(GHOST_FILL_OPACITY),
            ghost.fill,
            GHOST_DASH
        );
        let _ = writeln!(
            w,
            r##"<text class="ghost-value" x="{}" y="{}" font-size="12" dominant-baseline="middle" fill="#444444">{}</text>"##,
            fmt_num(ghost.x + ghost.width + LABEL_GAP),
            fmt_num(ghost.y + ghost.height / 2.0),
            fmt_num(ghost.value)
        );
        let _ = writeln!(w, "</g>");
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_num(0.2), "0.2");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(728.0), "728");
        assert_eq!(fmt_num(123.456789), "123.457");
        assert_eq!(fmt_num(0.000123456789), "0.000123457");
        assert_eq!(fmt_num(1234567.0), "1234567");
        assert_eq!(fmt_num(9.9999999), "10");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(-0.0000001), "-0.0000001");
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape(r#"a<b>&"c'"#), "a&lt;b&gt;&amp;&quot;c&apos;");
    }
}
