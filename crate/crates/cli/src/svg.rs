//! Line plots of a CSV whose first column is the abscissa.
//!
//! The SVG depends on the CSV text only, so a figure can be regenerated from
//! the data file alone.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const DASHES: [&str; 3] = ["", "6 4", "2 3"];

pub fn render(csv: &str) -> Result<String, String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().ok_or("empty CSV")?.split(',').collect();
    if header.len() < 2 {
        return Err("need at least two columns".into());
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(format!("row {} has {} fields", i + 1, fields.len()));
        }
        for (c, f) in cols.iter_mut().zip(&fields) {
            c.push(
                f.trim()
                    .parse()
                    .map_err(|e| format!("row {}: {e}", i + 1))?,
            );
        }
    }
    if cols[0].len() < 2 {
        return Err("need at least two rows".into());
    }
    let (x0, x1) = range(&cols[0]);
    let y1 = cols[1..]
        .iter()
        .map(|c| range(c).1)
        .fold(0.0, f64::max)
        .max(1e-300);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - y / y1 * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (bx, by) = (sy(0.0), sx(x0));
    let _ = writeln!(
        s,
        r#"<path d="M{by:.2},{:.2} L{by:.2},{bx:.2} L{:.2},{bx:.2}" fill="none" stroke="black"/>"#,
        MARGIN,
        WIDTH - MARGIN
    );
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="{anchor}">{}</text>"#,
            sx(v),
            bx + 16.0,
            tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#,
        by - 4.0,
        MARGIN + 4.0,
        tick(y1)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0,
        escape(header[0])
    );
    for (k, col) in cols[1..].iter().enumerate() {
        let mut d = String::new();
        for (i, (&x, &y)) in cols[0].iter().zip(col).enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2}",
                if i == 0 { "M" } else { " L" },
                sx(x),
                sy(y)
            );
        }
        let dash = DASHES[k % DASHES.len()];
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="none" stroke="black" stroke-width="1.5"{dash_attr}/>"#
        );
        let ly = MARGIN + 16.0 * k as f64;
        let lx = WIDTH - MARGIN - 120.0;
        let _ = writeln!(
            s,
            r#"<path d="M{lx:.2},{ly:.2} L{:.2},{ly:.2}" stroke="black" stroke-width="1.5"{dash_attr}/>"#,
            lx + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            lx + 36.0,
            ly + 4.0,
            escape(header[k + 1])
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn range(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

fn tick(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
