//! CSV and SVG emitters for the two standard diagnostic plots: the
//! precision/recall curvelet over the track age limit, and the top-down view
//! of track states with covariance ellipses.

use std::fmt::Write as _;

/// One sweep point of the PR curvelet.
#[derive(Debug, Clone, Copy)]
pub struct PrPoint {
    pub n_age: u32,
    pub precision: f64,
    pub recall: f64,
}

pub fn pr_curvelet_csv(points: &[PrPoint]) -> String {
    let mut out = String::from("n_age,precision,recall\n");
    for p in points {
        let _ = writeln!(out, "{},{:.6},{:.6}", p.n_age, p.precision, p.recall);
    }
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn x_px(recall: f64) -> f64 {
    MARGIN + recall.clamp(0.0, 1.0) * (SVG_W - 2.0 * MARGIN)
}

fn y_px(precision: f64) -> f64 {
    SVG_H - MARGIN - precision.clamp(0.0, 1.0) * (SVG_H - 2.0 * MARGIN)
}

fn svg_header(title: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\">\n"
    );
    let _ = writeln!(s, "  <title>{title}</title>");
    let _ = writeln!(
        s,
        "  <rect x=\"0\" y=\"0\" width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>"
    );
    s
}

/// Precision (y) against recall (x), one marker per swept age limit,
/// connected in sweep order.
pub fn pr_curvelet_svg(points: &[PrPoint]) -> String {
    let mut s = svg_header("occluded precision/recall over the track age limit");
    // axes
    let _ = writeln!(
        s,
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = SVG_H - MARGIN,
        r = SVG_W - MARGIN
    );
    let _ = writeln!(
        s,
        "  <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        t = MARGIN,
        b = SVG_H - MARGIN
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{tick}</text>",
            x_px(tick),
            SVG_H - MARGIN + 16.0
        );
        let _ = writeln!(
            s,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{tick}</text>",
            MARGIN - 6.0,
            y_px(tick) + 4.0
        );
    }
    let _ = writeln!(
        s,
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">recall (occluded)</text>",
        SVG_W / 2.0,
        SVG_H - 16.0
    );
    let _ = writeln!(
        s,
        "  <text x=\"16\" y=\"{:.1}\" font-size=\"13\" transform=\"rotate(-90 16 {:.1})\" \
         text-anchor=\"middle\">precision (occluded)</text>",
        SVG_H / 2.0,
        SVG_H / 2.0
    );
    if !points.is_empty() {
        let path: Vec<String> = points
            .iter()
            .map(|p| format!("{:.2},{:.2}", x_px(p.recall), y_px(p.precision)))
            .collect();
        let _ = writeln!(
            s,
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>",
            path.join(" ")
        );
        for p in points {
            let _ = writeln!(
                s,
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#1f77b4\"/>",
                x_px(p.recall),
                y_px(p.precision)
            );
            let _ = writeln!(
                s,
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">N={}</text>",
                x_px(p.recall) + 6.0,
                y_px(p.precision) - 6.0,
                p.n_age
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// One top-down sample: a track's (x, z) mean and covariance ellipse.
#[derive(Debug, Clone, Copy)]
pub struct TopdownPoint {
    pub track_id: u64,
    pub frame: u64,
    pub occluded: bool,
    pub x: f64,
    pub z: f64,
    /// Ellipse semi-axes (1-sigma) and orientation in radians.
    pub semi_major: f64,
    pub semi_minor: f64,
    pub angle_rad: f64,
}

/// Ellipse parameters of a 2x2 covariance: 1-sigma semi-axes and the major
/// axis angle.
pub fn covariance_ellipse(cov: [[f64; 2]; 2]) -> (f64, f64, f64) {
    let (a, b, c) = (cov[0][0], cov[0][1], cov[1][1]);
    let tr = a + c;
    let det = a * c - b * b;
    let disc = ((tr * tr / 4.0) - det).max(0.0).sqrt();
    let l1 = (tr / 2.0 + disc).max(0.0);
    let l2 = (tr / 2.0 - disc).max(0.0);
    let angle = if b.abs() < 1e-15 && a >= c {
        0.0
    } else if b.abs() < 1e-15 {
        std::f64::consts::FRAC_PI_2
    } else {
        (l1 - a).atan2(b)
    };
    (l1.sqrt(), l2.sqrt(), angle)
}

pub fn topdown_csv(points: &[TopdownPoint]) -> String {
    let mut out = String::from("track,frame,occluded,x,z,semi_major,semi_minor,angle_rad\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            p.track_id,
            p.frame,
            p.occluded as u8,
            p.x,
            p.z,
            p.semi_major,
            p.semi_minor,
            p.angle_rad
        );
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Birds-eye view: x across, depth up, one covariance ellipse per frame.
/// Occluded frames are drawn hollow.
pub fn topdown_svg(points: &[TopdownPoint]) -> String {
    let mut s = svg_header("top-down track states with covariance ellipses");
    if points.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut z0, mut z1) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let r = p.semi_major;
        x0 = x0.min(p.x - r);
        x1 = x1.max(p.x + r);
        z0 = z0.min(p.z - r);
        z1 = z1.max(p.z + r);
    }
    let pad_x = (x1 - x0).max(1e-9) * 0.05;
    let pad_z = (z1 - z0).max(1e-9) * 0.05;
    x0 -= pad_x;
    x1 += pad_x;
    z0 -= pad_z;
    z1 += pad_z;
    let sx = (SVG_W - 2.0 * MARGIN) / (x1 - x0);
    let sz = (SVG_H - 2.0 * MARGIN) / (z1 - z0);
    let px = |x: f64| MARGIN + (x - x0) * sx;
    let pz = |z: f64| SVG_H - MARGIN - (z - z0) * sz;

    let _ = writeln!(
        s,
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">image x</text>",
        SVG_W / 2.0,
        SVG_H - 16.0
    );
    let _ = writeln!(
        s,
        "  <text x=\"16\" y=\"{:.1}\" font-size=\"13\" transform=\"rotate(-90 16 {:.1})\" \
         text-anchor=\"middle\">depth z</text>",
        SVG_H / 2.0,
        SVG_H / 2.0
    );

    let mut ids: Vec<u64> = points.iter().map(|p| p.track_id).collect();
    ids.sort_unstable();
    ids.dedup();
    for p in points {
        let color = PALETTE[ids.iter().position(|&i| i == p.track_id).unwrap() % PALETTE.len()];
        let fill = if p.occluded { "none" } else { color };
        let _ = writeln!(
            s,
            "  <ellipse cx=\"{:.2}\" cy=\"{:.2}\" rx=\"{:.2}\" ry=\"{:.2}\" \
             transform=\"rotate({:.2} {:.2} {:.2})\" fill=\"{fill}\" fill-opacity=\"0.15\" \
             stroke=\"{color}\" stroke-width=\"1\"/>",
            px(p.x),
            pz(p.z),
            (p.semi_major * sx).max(1.0),
            (p.semi_minor * sz).max(1.0),
            -p.angle_rad.to_degrees(),
            px(p.x),
            pz(p.z),
        );
    }
    // the trajectory of the means
    for (i, id) in ids.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .filter(|p| p.track_id == *id)
            .map(|p| format!("{:.2},{:.2}", px(p.x), pz(p.z)))
            .collect();
        if path.len() > 1 {
            let _ = writeln!(
                s,
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                path.join(" ")
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
