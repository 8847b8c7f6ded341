//! Minimal SVG chart emission by direct markup: bar charts (blue =
//! positive, red = negative), line overlays, and box summaries.

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 220.0;
const MARGIN: f64 = 48.0;
const POSITIVE: &str = "blue";
const NEGATIVE: &str = "red";
const LINE_COLORS: [&str; 6] = ["blue", "red", "green", "orange", "purple", "gray"];

pub struct SvgDoc {
    parts: Vec<String>,
    y: f64,
}

impl SvgDoc {
    pub fn new() -> SvgDoc {
        SvgDoc {
            parts: Vec::new(),
            y: 0.0,
        }
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        self.parts.push(format!(
            r#"<text x="{x:.1}" y="{y:.1}" font-size="{size}" font-family="sans-serif" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        ));
    }

    /// Vertical bars; positive values blue, negative red.
    pub fn bar_panel(&mut self, title: &str, labels: &[String], values: &[f64]) {
        let top = self.y;
        self.text(WIDTH / 2.0, top + 18.0, 14.0, "middle", title);
        let plot_top = top + 30.0;
        let plot_bottom = top + PANEL_HEIGHT - 30.0;
        let max_abs = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
        let zero_y = if values.iter().any(|&v| v < 0.0) {
            (plot_top + plot_bottom) / 2.0
        } else {
            plot_bottom
        };
        let scale = (zero_y - plot_top).min(plot_bottom - zero_y).max(1.0) / max_abs;
        let n = values.len().max(1);
        let slot = (WIDTH - 2.0 * MARGIN) / n as f64;
        let bar_w = (slot * 0.7).max(1.0);
        self.parts.push(format!(
            r#"<line x1="{MARGIN}" y1="{zero_y:.1}" x2="{:.1}" y2="{zero_y:.1}" stroke="black" stroke-width="1"/>"#,
            WIDTH - MARGIN
        ));
        for (i, &v) in values.iter().enumerate() {
            let x = MARGIN + i as f64 * slot + (slot - bar_w) / 2.0;
            let h = (v.abs() * scale).min(PANEL_HEIGHT);
            let (y0, color) = if v >= 0.0 {
                (zero_y - h, POSITIVE)
            } else {
                (zero_y, NEGATIVE)
            };
            self.parts.push(format!(
                r#"<rect x="{x:.1}" y="{y0:.1}" width="{bar_w:.1}" height="{h:.1}" fill="{color}"/>"#
            ));
            if let Some(label) = labels.get(i) {
                if n <= 40 {
                    self.text(x + bar_w / 2.0, plot_bottom + 16.0, 9.0, "middle", label);
                }
            }
        }
        self.y += PANEL_HEIGHT;
    }

    /// Line overlay; one polyline per named series over a shared x axis.
    pub fn line_panel(&mut self, title: &str, xs: &[f64], series: &[(String, Vec<f64>)]) {
        let top = self.y;
        self.text(WIDTH / 2.0, top + 18.0, 14.0, "middle", title);
        let plot_top = top + 30.0;
        let plot_bottom = top + PANEL_HEIGHT - 30.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (_, ys) in series {
            for &v in ys {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() || hi - lo < 1e-12 {
            lo = 0.0;
            hi = 1.0;
        }
        let x_lo = xs.first().copied().unwrap_or(0.0);
        let x_hi = xs.last().copied().unwrap_or(1.0).max(x_lo + 1e-12);
        let sx = (WIDTH - 2.0 * MARGIN) / (x_hi - x_lo);
        let sy = (plot_bottom - plot_top) / (hi - lo);
        for (si, (name, ys)) in series.iter().enumerate() {
            let color = LINE_COLORS[si % LINE_COLORS.len()];
            let points: Vec<String> = xs
                .iter()
                .zip(ys)
                .map(|(&x, &v)| {
                    format!(
                        "{:.1},{:.1}",
                        MARGIN + (x - x_lo) * sx,
                        plot_bottom - (v - lo) * sy
                    )
                })
                .collect();
            self.parts.push(format!(
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                points.join(" ")
            ));
            self.text(
                WIDTH - MARGIN + 4.0,
                plot_top + 14.0 * si as f64,
                10.0,
                "start",
                name,
            );
        }
        self.text(MARGIN, plot_bottom + 16.0, 9.0, "middle", &format!("{x_lo}"));
        self.text(
            WIDTH - MARGIN,
            plot_bottom + 16.0,
            9.0,
            "middle",
            &format!("{x_hi}"),
        );
        self.y += PANEL_HEIGHT;
    }

    /// Quartile boxes with whiskers at min/max, one box per group.
    pub fn box_panel(&mut self, title: &str, groups: &[(String, Vec<f64>)]) {
        let top = self.y;
        self.text(WIDTH / 2.0, top + 18.0, 14.0, "middle", title);
        let plot_top = top + 30.0;
        let plot_bottom = top + PANEL_HEIGHT - 30.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (_, vs) in groups {
            for &v in vs {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() || hi - lo < 1e-12 {
            lo = 0.0;
            hi = 1.0;
        }
        let sy = (plot_bottom - plot_top) / (hi - lo);
        let to_y = |v: f64| plot_bottom - (v - lo) * sy;
        let n = groups.len().max(1);
        let slot = (WIDTH - 2.0 * MARGIN) / n as f64;
        for (i, (name, vs)) in groups.iter().enumerate() {
            if vs.is_empty() {
                continue;
            }
            let mut sorted = vs.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
            let (min, q1, med, q3, max) = (sorted[0], q(0.25), q(0.5), q(0.75), sorted[sorted.len() - 1]);
            let cx = MARGIN + (i as f64 + 0.5) * slot;
            let half = (slot * 0.3).max(4.0);
            self.parts.push(format!(
                r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
                to_y(min),
                to_y(max)
            ));
            self.parts.push(format!(
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="blue"/>"#,
                cx - half,
                to_y(q3),
                2.0 * half,
                (to_y(q1) - to_y(q3)).max(0.5)
            ));
            self.parts.push(format!(
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="red"/>"#,
                cx - half,
                to_y(med),
                cx + half,
                to_y(med)
            ));
            self.text(cx, plot_bottom + 16.0, 9.0, "middle", name);
        }
        self.y += PANEL_HEIGHT;
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{}\" viewBox=\"0 0 {WIDTH} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}\n</svg>\n",
            self.y.max(PANEL_HEIGHT),
            self.y.max(PANEL_HEIGHT),
            self.parts.join("\n")
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
