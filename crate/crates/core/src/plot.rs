//! SVG pictures of two-state geometry and of posterior supports.
//!
//! All geometry is computed with exact rationals; coordinates are printed
//! at six decimals so output is byte-stable.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{int, ratio, render_decimal, RatMatrix, RatVector, Rational};
use crate::experiments::{posteriors, Experiment, Prior};

/// SVG units per unit of probability.
pub const SCALE: i64 = 600;
const MARGIN: i64 = 60;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Cone,
    Zon,
    Posteriors,
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub label: String,
    pub experiment: Experiment,
}

fn require_two_states(m: &RatMatrix) -> Result<()> {
    if m.rows() == 2 {
        Ok(())
    } else {
        Err(Error::DimensionCap(format!(
            "cone and zonotope plots need 2 states, got {}",
            m.rows()
        )))
    }
}

fn cross(a: &[Rational], b: &[Rational]) -> Rational {
    &a[0] * &b[1] - &a[1] * &b[0]
}

/// Nonzero columns merged by direction, sorted by increasing angle.
fn directions(m: &RatMatrix) -> Vec<RatVector> {
    let mut dirs: Vec<RatVector> = Vec::new();
    for col in m.columns() {
        if col.iter().all(Zero::is_zero) {
            continue;
        }
        match dirs.iter_mut().find(|d| cross(d, &col).is_zero()) {
            Some(d) => {
                d[0] += &col[0];
                d[1] += &col[1];
            }
            None => dirs.push(col),
        }
    }
    dirs.sort_by(|a, b| {
        let c = cross(a, b);
        if c.is_positive() {
            Ordering::Less
        } else if c.is_negative() {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    });
    dirs
}

/// Vertices of `Zon E` for two states, counter-clockwise from the origin.
pub fn zonotope_polygon(m: &RatMatrix) -> Result<Vec<RatVector>> {
    require_two_states(m)?;
    let dirs = directions(m);
    let mut lower = vec![vec![int(0), int(0)]];
    for d in &dirs {
        let last = lower.last().unwrap();
        lower.push(vec![&last[0] + &d[0], &last[1] + &d[1]]);
    }
    let mut upper = Vec::new();
    let mut cur = lower.last().unwrap().clone();
    for d in &dirs[..dirs.len().saturating_sub(1)] {
        cur = vec![&cur[0] - &d[0], &cur[1] - &d[1]];
        upper.push(cur.clone());
    }
    if dirs.len() > 1 {
        lower.extend(upper);
    }
    Ok(lower)
}

/// Endpoints of the extreme rays of `Cone E`, scaled to reach the edge of
/// the unit box.
pub fn cone_rays(m: &RatMatrix) -> Result<Vec<RatVector>> {
    require_two_states(m)?;
    let dirs = directions(m);
    let mut ends: Vec<RatVector> = Vec::new();
    for d in [dirs.first(), dirs.last()].into_iter().flatten() {
        let top = d[0].clone().max(d[1].clone());
        let end = vec![&d[0] / &top, &d[1] / &top];
        if !ends.contains(&end) {
            ends.push(end);
        }
    }
    Ok(ends)
}

/// `ω2/ω1` slope of each extreme ray, `None` for a vertical ray.
pub fn ray_slopes(m: &RatMatrix) -> Result<Vec<Option<Rational>>> {
    Ok(cone_rays(m)?
        .into_iter()
        .map(|p| (!p[0].is_zero()).then(|| &p[1] / &p[0]))
        .collect())
}

fn sx(x: &Rational) -> String {
    render_decimal(&(int(MARGIN) + int(SCALE) * x), 6)
}

fn sy(y: &Rational) -> String {
    render_decimal(&(int(MARGIN + SCALE) - int(SCALE) * y), 6)
}

fn point_list(points: &[RatVector]) -> String {
    points
        .iter()
        .map(|p| format!("{},{}", sx(&p[0]), sy(&p[1])))
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(title: &str) -> String {
    let size = SCALE + 2 * MARGIN;
    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">"
    )
    .unwrap();
    writeln!(s, "  <title>{}</title>", escape(title)).unwrap();
    writeln!(s, "  <rect x=\"0\" y=\"0\" width=\"{size}\" height=\"{size}\" fill=\"white\"/>").unwrap();
    s
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let (o, z, one) = (int(0), int(0), int(1));
    writeln!(
        s,
        "  <rect x=\"{}\" y=\"{}\" width=\"{SCALE}\" height=\"{SCALE}\" fill=\"none\" stroke=\"#cccccc\"/>",
        sx(&o),
        sy(&one)
    )
    .unwrap();
    writeln!(
        s,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        sx(&o),
        sy(&z),
        sx(&one),
        sy(&z)
    )
    .unwrap();
    writeln!(
        s,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        sx(&o),
        sy(&z),
        sx(&o),
        sy(&one)
    )
    .unwrap();
    let half = ratio(1, 2);
    writeln!(
        s,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
        sx(&half),
        MARGIN + SCALE + 40,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        s,
        "  <text x=\"20\" y=\"{}\" text-anchor=\"middle\" font-size=\"16\" transform=\"rotate(-90 20 {})\">{}</text>",
        sy(&half),
        sy(&half),
        escape(y_label)
    )
    .unwrap();
}

fn legend(s: &mut String, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        let y = MARGIN + 20 + 22 * i as i64;
        let color = COLORS[i % COLORS.len()];
        writeln!(
            s,
            "  <rect x=\"{}\" y=\"{}\" width=\"14\" height=\"14\" fill=\"{color}\"/>",
            MARGIN + 20,
            y - 12
        )
        .unwrap();
        writeln!(
            s,
            "  <text x=\"{}\" y=\"{y}\" font-size=\"14\">{}</text>",
            MARGIN + 42,
            escape(label)
        )
        .unwrap();
    }
}

pub fn render_zonotopes(layers: &[Layer]) -> Result<String> {
    let mut s = header("Zonotopes");
    axes(&mut s, "ω1 expected utility", "ω2 expected utility");
    for (i, layer) in layers.iter().enumerate() {
        let poly = zonotope_polygon(layer.experiment.matrix())?;
        let color = COLORS[i % COLORS.len()];
        if poly.len() == 2 {
            writeln!(
                s,
                "  <polyline class=\"zonotope\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
                point_list(&poly)
            )
            .unwrap();
        } else {
            writeln!(
                s,
                "  <polygon class=\"zonotope\" points=\"{}\" fill=\"{color}\" fill-opacity=\"0.25\" stroke=\"{color}\" stroke-width=\"2\"/>",
                point_list(&poly)
            )
            .unwrap();
        }
    }
    let labels: Vec<&str> = layers.iter().map(|l| l.label.as_str()).collect();
    legend(&mut s, &labels);
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_cones(layers: &[Layer]) -> Result<String> {
    let mut s = header("Conic spans");
    axes(&mut s, "ω1 expected utility", "ω2 expected utility");
    let origin = vec![int(0), int(0)];
    for (i, layer) in layers.iter().enumerate() {
        let ends = cone_rays(layer.experiment.matrix())?;
        let color = COLORS[i % COLORS.len()];
        if ends.len() == 2 {
            // Shade the cone inside the box: origin, first ray, corner if needed, second ray.
            let mut region = vec![origin.clone(), ends[0].clone()];
            if ends[0][0] == int(1) && ends[1][1] == int(1) {
                region.push(vec![int(1), int(1)]);
            }
            region.push(ends[1].clone());
            writeln!(
                s,
                "  <polygon class=\"cone\" points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>",
                point_list(&region)
            )
            .unwrap();
        }
        for end in &ends {
            writeln!(
                s,
                "  <line class=\"ray\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                sx(&origin[0]),
                sy(&origin[1]),
                sx(&end[0]),
                sy(&end[1])
            )
            .unwrap();
        }
    }
    let labels: Vec<&str> = layers.iter().map(|l| l.label.as_str()).collect();
    legend(&mut s, &labels);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Plot coordinates of a posterior: `μ(ω1)` on a line for two states,
/// barycentric triangle coordinates for three.
fn project(mu: &[Rational]) -> RatVector {
    match mu.len() {
        1 => vec![ratio(1, 2), ratio(1, 2)],
        2 => vec![mu[0].clone(), ratio(1, 2)],
        _ => {
            // Vertices (0,0), (1,0), (1/2, 13/15): a near-equilateral triangle with exact coordinates.
            let x = &mu[1] + &mu[2] / int(2);
            let y = &mu[2] * ratio(13, 15);
            vec![x, y]
        }
    }
}

pub fn render_posteriors(layers: &[Layer], prior: &Prior) -> Result<String> {
    let n = prior.len();
    if n > 3 {
        return Err(Error::DimensionCap(format!("posterior plots need at most 3 states, got {n}")));
    }
    let mut s = header("Posterior distributions");
    match n {
        3 => {
            let corners = vec![vec![int(0), int(0)], vec![int(1), int(0)], vec![ratio(1, 2), ratio(13, 15)]];
            writeln!(
                s,
                "  <polygon class=\"simplex\" points=\"{}\" fill=\"none\" stroke=\"black\"/>",
                point_list(&corners)
            )
            .unwrap();
        }
        _ => {
            let ends = vec![vec![int(0), ratio(1, 2)], vec![int(1), ratio(1, 2)]];
            writeln!(
                s,
                "  <polyline class=\"simplex\" points=\"{}\" fill=\"none\" stroke=\"black\"/>",
                point_list(&ends)
            )
            .unwrap();
        }
    }
    let p = project(prior.as_slice());
    writeln!(
        s,
        "  <circle class=\"prior\" cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"black\"/>",
        sx(&p[0]),
        sy(&p[1])
    )
    .unwrap();
    for (i, layer) in layers.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for atom in posteriors(&layer.experiment, prior)?.atoms {
            let q = project(&atom.posterior);
            let r = int(4) + int(20) * &atom.weight;
            writeln!(
                s,
                "  <circle class=\"posterior\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{color}\" fill-opacity=\"0.6\"/>",
                sx(&q[0]),
                sy(&q[1]),
                render_decimal(&r, 6)
            )
            .unwrap();
        }
    }
    let labels: Vec<&str> = layers.iter().map(|l| l.label.as_str()).collect();
    legend(&mut s, &labels);
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render(kind: SetKind, layers: &[Layer], prior: Option<&Prior>) -> Result<String> {
    match kind {
        SetKind::Cone => render_cones(layers),
        SetKind::Zon => render_zonotopes(layers),
        SetKind::Posteriors => {
            let n = layers.first().map(|l| l.experiment.n_states()).unwrap_or(0);
            let uniform = Prior::uniform(n);
            render_posteriors(layers, prior.unwrap_or(&uniform))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[(i64, i64)]]) -> RatMatrix {
        RatMatrix::from_ratios(rows)
    }

    #[test]
    fn polygons() {
        let e2 = m(&[&[(1, 2), (2, 5), (1, 10)], &[(1, 10), (2, 5), (1, 2)]]);
        let poly = zonotope_polygon(&e2).unwrap();
        let expect: Vec<RatVector> = [(0, 1, 0, 1), (1, 2, 1, 10), (9, 10, 1, 2), (1, 1, 1, 1), (1, 2, 9, 10), (1, 10, 1, 2)]
            .iter()
            .map(|&(a, b, c, d)| vec![ratio(a, b), ratio(c, d)])
            .collect();
        assert_eq!(poly, expect);

        let one = m(&[&[(1, 1)], &[(1, 1)]]);
        assert_eq!(zonotope_polygon(&one).unwrap(), vec![vec![int(0), int(0)], vec![int(1), int(1)]]);
        assert!(matches!(zonotope_polygon(&RatMatrix::identity(3)), Err(Error::DimensionCap(_))));
    }

    #[test]
    fn slopes() {
        let e1 = m(&[&[(3, 5), (2, 5)], &[(2, 5), (3, 5)]]);
        assert_eq!(ray_slopes(&e1).unwrap(), vec![Some(ratio(2, 3)), Some(ratio(3, 2))]);
        let e2 = m(&[&[(1, 2), (2, 5), (1, 10)], &[(1, 10), (2, 5), (1, 2)]]);
        assert_eq!(ray_slopes(&e2).unwrap(), vec![Some(ratio(1, 5)), Some(int(5))]);
        assert_eq!(cone_rays(&e2).unwrap()[1], vec![ratio(1, 5), int(1)]);
    }

    #[test]
    fn svg_is_stable() {
        let e = Experiment::from_ratios(&[&[(3, 5), (2, 5)], &[(2, 5), (3, 5)]]).unwrap();
        let layers = vec![Layer {
            label: "E1".into(),
            experiment: e,
        }];
        let a = render(SetKind::Zon, &layers, None).unwrap();
        assert_eq!(a, render(SetKind::Zon, &layers, None).unwrap());
        assert!(a.contains("60.000000,660.000000 420.000000,420.000000"));
        assert!(render(SetKind::Posteriors, &layers, None).unwrap().contains("class=\"posterior\""));
    }
}
