//! CSV and SVG writers. Floats carry 17 significant digits so identical runs
//! give identical bytes.

use std::fmt::Write;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub const CONVERGENCE_HEADER: &str =
    "N,q,s,flux,err_energy,err_L2_u,err_L2_v,err_H2_u,rate_energy,rate_L2_u,rate_L2_v,rate_H2_u";
pub const ENERGY_HEADER: &str = "t,energy,relative_change";
pub const SOLUTION_HEADER: &str = "x,u_h,u_exact,error";

/// One row of the convergence table. Failed rows carry `NaN` errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub errors: [f64; 4],
    pub rates: [Option<f64>; 4],
}

pub fn convergence_csv(q: usize, s: usize, flux: &str, rows: &[ConvergenceRow]) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for r in rows {
        let errs: Vec<String> = r.errors.iter().map(|&e| fmt_f64(e)).collect();
        let rates: Vec<String> = r.rates.iter().map(|&e| fmt_opt(e)).collect();
        let _ = writeln!(
            out,
            "{},{q},{s},{flux},{},{}",
            r.n,
            errs.join(","),
            rates.join(",")
        );
    }
    out
}

/// `relative_change` is `(E - E₀) / E₀`, or `E - E₀` when `E₀ = 0`.
pub fn energy_csv(times: &[f64], energies: &[f64]) -> String {
    let mut out = String::from(ENERGY_HEADER);
    out.push('\n');
    let e0 = energies.first().copied().unwrap_or(0.0);
    for (&t, &e) in times.iter().zip(energies) {
        let rel = if e0 != 0.0 { (e - e0) / e0 } else { e - e0 };
        let _ = writeln!(out, "{},{},{}", fmt_f64(t), fmt_f64(e), fmt_f64(rel));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionSample {
    pub x: f64,
    pub u_h: f64,
    /// `NaN` when the problem has no exact solution.
    pub u_exact: f64,
}

pub fn solution_csv(samples: &[SolutionSample]) -> String {
    let mut out = String::from(SOLUTION_HEADER);
    out.push('\n');
    for p in samples {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(p.x),
            fmt_f64(p.u_h),
            fmt_f64(p.u_exact),
            fmt_f64(p.u_exact - p.u_h)
        );
    }
    out
}

/// Line plot of `ys` against `xs` with a frame and extreme-value labels.
pub fn line_plot_svg(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const L: f64 = 90.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match (lo.is_finite(), hi > lo) {
            (false, _) => (0.0, 1.0),
            (true, true) => (lo, hi),
            (true, false) => (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0)),
        }
    };
    let (x0, x1) = range(xs);
    let (y0, y1) = range(ys);
    let px = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
    let py = |y: f64| H - B - (y - y0) / (y1 - y0) * (H - T - B);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{L},{T} L{L},{} L{},{}" fill="none" stroke="black"/>"#,
        H - B,
        W - R,
        H - B
    );
    let label = |svg: &mut String, x: f64, y: f64, anchor: &str, text: &str| {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{}</text>"#,
            escape(text)
        );
    };
    label(&mut svg, L, H - B + 16.0, "middle", &format!("{x0:.4}"));
    label(&mut svg, W - R, H - B + 16.0, "middle", &format!("{x1:.4}"));
    label(&mut svg, L - 6.0, H - B, "end", &format!("{y0:.6e}"));
    label(&mut svg, L - 6.0, T + 4.0, "end", &format!("{y1:.6e}"));
    label(&mut svg, (L + W - R) / 2.0, H - 12.0, "middle", x_label);
    label(&mut svg, 14.0, T - 12.0, "start", y_label);

    let points: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        points.join(" ")
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 6.02e23, 5e-324, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_layouts() {
        let rows = [
            ConvergenceRow {
                n: 10,
                errors: [1.0, 2.0, 3.0, 4.0],
                rates: [None; 4],
            },
            ConvergenceRow {
                n: 20,
                errors: [0.5, 1.0, 1.5, 2.0],
                rates: [Some(1.0); 4],
            },
        ];
        let csv = convergence_csv(4, 2, "upwind", &rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CONVERGENCE_HEADER);
        assert!(lines[1].starts_with("10,4,2,upwind,1.0000000000000000e0,"));
        assert!(lines[1].ends_with(",,,,"));
        assert_eq!(lines[2].split(',').count(), 12);
        assert!(!csv.contains('\r'));

        let e = energy_csv(&[0.0, 1.0], &[2.0, 1.0]);
        assert_eq!(
            e.lines().nth(2).unwrap().split(',').last().unwrap(),
            fmt_f64(-0.5)
        );
        let z = energy_csv(&[0.0, 1.0], &[0.0, 0.0]);
        assert!(z.lines().skip(1).all(|l| l.ends_with(&fmt_f64(0.0))));
    }

    #[test]
    fn svg_is_well_formed_for_flat_data() {
        let svg = line_plot_svg("E <flat>", "t", "E", &[0.0, 1.0, 2.0], &[0.0, 0.0, 0.0]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;flat&gt;") && !svg.contains("NaN"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
