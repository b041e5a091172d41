//! Smooth closed boundary curves, arclength quadrature and interior lattices.
//!
//! Every curve is parameterized counter-clockwise over `t ∈ [0, 2π)`, so the
//! outward normal is the tangent rotated clockwise and the signed curvature of
//! the unit circle is `+1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};

pub type Point = [f64; 2];

/// Number of parameter samples used for distance and winding computations.
pub const DENSE_SAMPLES: usize = 1024;

const KITE_SHIFT: f64 = 0.65;
const KITE_HEIGHT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CurveKind {
    Disk,
    Ellipse { a: f64, b: f64 },
    Kite,
    Star { eps: f64, m: u32 },
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveKind::Disk => write!(f, "disk"),
            CurveKind::Ellipse { a, b } => write!(f, "ellipse:{a},{b}"),
            CurveKind::Kite => write!(f, "kite"),
            CurveKind::Star { eps, m } => write!(f, "star:{eps},{m}"),
        }
    }
}

impl FromStr for CurveKind {
    type Err = SteklovError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| SteklovError::InvalidDomain(s.to_string(), why.to_string());
        let s_trim = s.trim();
        let (head, args) = match s_trim.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s_trim, None),
        };
        let parse_pair = |args: Option<&str>| -> Result<(String, String)> {
            let args = args.ok_or_else(|| bad("missing parameters"))?;
            let (x, y) = args
                .split_once(',')
                .ok_or_else(|| bad("expected two comma-separated parameters"))?;
            Ok((x.trim().to_string(), y.trim().to_string()))
        };
        match head {
            "disk" if args.is_none() => Ok(CurveKind::Disk),
            "kite" if args.is_none() => Ok(CurveKind::Kite),
            "ellipse" => {
                let (x, y) = parse_pair(args)?;
                let a: f64 = x.parse().map_err(|_| bad("axis a is not a number"))?;
                let b: f64 = y.parse().map_err(|_| bad("axis b is not a number"))?;
                if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
                    return Err(bad("ellipse axes must be positive"));
                }
                Ok(CurveKind::Ellipse { a, b })
            }
            "star" => {
                let (x, y) = parse_pair(args)?;
                let eps: f64 = x.parse().map_err(|_| bad("amplitude is not a number"))?;
                let m: u32 = y.parse().map_err(|_| bad("lobe count must be a positive integer"))?;
                if m == 0 {
                    return Err(bad("lobe count must be a positive integer"));
                }
                let limit = 1.0 / (m as f64 * m as f64);
                if !(eps > 0.0 && eps < limit) {
                    return Err(bad(&format!(
                        "amplitude must satisfy 0 < eps < 1/m^2 = {limit}"
                    )));
                }
                Ok(CurveKind::Star { eps, m })
            }
            _ => Err(bad("expected disk | ellipse:a,b | kite | star:eps,m")),
        }
    }
}

/// Differential geometry of the curve at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub point: Point,
    /// Unit outward normal.
    pub normal: Point,
    /// Unit tangent in the direction of increasing `t`.
    pub tangent: Point,
    pub speed: f64,
    /// Signed curvature, `+1` on the unit circle.
    pub curvature: f64,
}

#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    kind: CurveKind,
    samples: Vec<Point>,
    diameter: f64,
    bbox: [f64; 4],
    max_speed: f64,
}

/// Parses a domain descriptor and builds the curve.
pub fn curve_from_spec(spec: &str) -> Result<BoundaryCurve> {
    Ok(BoundaryCurve::new(spec.parse()?))
}

impl BoundaryCurve {
    pub fn new(kind: CurveKind) -> Self {
        let mut curve = BoundaryCurve {
            kind,
            samples: Vec::new(),
            diameter: 0.0,
            bbox: [0.0; 4],
            max_speed: 0.0,
        };
        curve.samples = (0..DENSE_SAMPLES)
            .map(|j| curve.position(2.0 * PI * j as f64 / DENSE_SAMPLES as f64))
            .collect();
        let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &curve.samples {
            bbox[0] = bbox[0].min(p[0]);
            bbox[1] = bbox[1].min(p[1]);
            bbox[2] = bbox[2].max(p[0]);
            bbox[3] = bbox[3].max(p[1]);
        }
        let mut diameter: f64 = 0.0;
        for (i, p) in curve.samples.iter().enumerate() {
            for q in &curve.samples[i + 1..] {
                diameter = diameter.max(dist(*p, *q));
            }
        }
        curve.bbox = bbox;
        curve.diameter = diameter;
        curve.max_speed = (0..DENSE_SAMPLES)
            .map(|j| curve.speed(2.0 * PI * j as f64 / DENSE_SAMPLES as f64))
            .fold(0.0, f64::max);
        curve
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn descriptor(&self) -> String {
        self.kind.to_string()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `[xmin, ymin, xmax, ymax]` from dense sampling.
    pub fn bounding_box(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    /// Position, first and second parameter derivatives.
    pub fn derivatives(&self, t: f64) -> (Point, Point, Point) {
        let (s, c) = t.sin_cos();
        match self.kind {
            CurveKind::Disk => ([c, s], [-s, c], [-c, -s]),
            CurveKind::Ellipse { a, b } => ([a * c, b * s], [-a * s, b * c], [-a * c, -b * s]),
            CurveKind::Kite => {
                let (s2, c2) = (2.0 * t).sin_cos();
                (
                    [c + KITE_SHIFT * c2 - KITE_SHIFT, KITE_HEIGHT * s],
                    [-s - 2.0 * KITE_SHIFT * s2, KITE_HEIGHT * c],
                    [-c - 4.0 * KITE_SHIFT * c2, -KITE_HEIGHT * s],
                )
            }
            CurveKind::Star { eps, m } => {
                let m = m as f64;
                let (sm, cm) = (m * t).sin_cos();
                let r = 1.0 + eps * cm;
                let r1 = -eps * m * sm;
                let r2 = -eps * m * m * cm;
                (
                    [r * c, r * s],
                    [r1 * c - r * s, r1 * s + r * c],
                    [r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s],
                )
            }
        }
    }

    pub fn position(&self, t: f64) -> Point {
        self.derivatives(t).0
    }

    pub fn speed(&self, t: f64) -> f64 {
        let d = self.derivatives(t).1;
        d[0].hypot(d[1])
    }

    pub fn at(&self, t: f64) -> CurvePoint {
        let (x, d1, d2) = self.derivatives(t);
        let speed = d1[0].hypot(d1[1]);
        let tangent = [d1[0] / speed, d1[1] / speed];
        CurvePoint {
            t,
            point: x,
            normal: [tangent[1], -tangent[0]],
            tangent,
            speed,
            curvature: (d1[0] * d2[1] - d1[1] * d2[0]) / speed.powi(3),
        }
    }

    /// Distance from `p` to the curve and the parameter of the nearest point.
    pub fn nearest(&self, p: Point) -> (f64, f64) {
        let (j, _) = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, q)| (j, dist2(*q, p)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let h = 2.0 * PI / DENSE_SAMPLES as f64;
        let mut t = h * j as f64;
        let mut best = (dist2(self.samples[j], p), t);
        // Newton on g(t) = |x(t) - p|^2, kept within one sample spacing.
        for _ in 0..4 {
            let (x, d1, d2) = self.derivatives(t);
            let r = [x[0] - p[0], x[1] - p[1]];
            let g1 = d1[0] * r[0] + d1[1] * r[1];
            let g2 = d1[0] * d1[0] + d1[1] * d1[1] + d2[0] * r[0] + d2[1] * r[1];
            if g2 <= 0.0 {
                break;
            }
            let step = (g1 / g2).clamp(-h, h);
            t -= step;
            let val = dist2(self.position(t), p);
            if val < best.0 {
                best = (val, t);
            }
            if step.abs() < 1e-15 {
                break;
            }
        }
        (best.0.sqrt(), best.1.rem_euclid(2.0 * PI))
    }

    /// Winding number of the curve around `p` from the dense polygon.
    pub fn winding_number(&self, p: Point) -> i32 {
        let mut total = 0.0;
        let n = self.samples.len();
        for j in 0..n {
            let a = self.samples[j];
            let b = self.samples[(j + 1) % n];
            let ang_a = (a[1] - p[1]).atan2(a[0] - p[0]);
            let ang_b = (b[1] - p[1]).atan2(b[0] - p[0]);
            let mut d = ang_b - ang_a;
            if d > PI {
                d -= 2.0 * PI;
            } else if d < -PI {
                d += 2.0 * PI;
            }
            total += d;
        }
        (total / (2.0 * PI)).round() as i32
    }

    fn crossing_inside(&self, p: Point) -> bool {
        let n = self.samples.len();
        let mut inside = false;
        for j in 0..n {
            let a = self.samples[j];
            let b = self.samples[(j + 1) % n];
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Full classification of a point: class, distance to the curve, nearest parameter.
    pub fn locate(&self, p: Point, collar: f64) -> Location {
        let (distance, t) = self.nearest(p);
        let inside = if distance < 1e-3 * self.diameter {
            // polygon chords are unreliable this close; use the normal side
            let cp = self.at(t);
            (p[0] - cp.point[0]) * cp.normal[0] + (p[1] - cp.point[1]) * cp.normal[1] < 0.0
        } else {
            self.crossing_inside(p)
        };
        let class = if distance < collar {
            PointClass::Collar
        } else if inside {
            PointClass::Inside
        } else {
            PointClass::Outside
        };
        Location { class, distance, t, inside }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointClass {
    Inside,
    Outside,
    Collar,
}

#[derive(Debug, Clone, Copy)]
pub struct Location {
    pub class: PointClass,
    pub distance: f64,
    /// Parameter of the nearest boundary point.
    pub t: f64,
    /// Side of the curve, regardless of the collar.
    pub inside: bool,
}

pub fn geometry_at(curve: &BoundaryCurve, t: f64) -> CurvePoint {
    curve.at(t)
}

pub fn point_location(curve: &BoundaryCurve, p: Point, collar: f64) -> PointClass {
    curve.locate(p, collar.max(0.0)).class
}

/// Equispaced parameter nodes with arclength trapezoid weights, plus the
/// node geometry every assembly routine needs.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub n: usize,
    pub t: Vec<f64>,
    pub weights: Vec<f64>,
    pub nodes: Vec<CurvePoint>,
}

pub fn build_quadrature(curve: &BoundaryCurve, n: usize) -> Result<QuadratureGrid> {
    if n % 2 != 0 || n < 16 {
        return Err(SteklovError::InvalidQuadrature(format!(
            "N must be even and >= 16 (got {n})"
        )));
    }
    Ok(QuadratureGrid::sample(curve, n))
}

impl QuadratureGrid {
    pub(crate) fn sample(curve: &BoundaryCurve, n: usize) -> Self {
        let h = 2.0 * PI / n as f64;
        let t: Vec<f64> = (0..n).map(|j| h * j as f64).collect();
        let nodes: Vec<CurvePoint> = t.iter().map(|&t| curve.at(t)).collect();
        let weights = nodes.iter().map(|c| c.speed * h).collect();
        QuadratureGrid { n, t, weights, nodes }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn curvature(&self) -> Vec<f64> {
        self.nodes.iter().map(|c| c.curvature).collect()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.nodes.iter().map(|c| c.speed).collect()
    }

    /// `∫ f ds` by the trapezoid rule on nodal values.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.weights).map(|((a, b), w)| a * b * w).sum()
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    pub fn sample_fn(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.t.iter().map(|&t| f(t)).collect()
    }
}

/// Axis-aligned lattice over the bounding box with per-node classification.
#[derive(Debug, Clone)]
pub struct InteriorGrid {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub collar: f64,
    pub class: Vec<PointClass>,
    pub distance: Vec<f64>,
    /// Side of the curve for every node, collar included.
    pub inside: Vec<bool>,
}

impl InteriorGrid {
    /// `resolution` nodes span the longer side of the bounding box.
    pub fn new(curve: &BoundaryCurve, resolution: usize, collar: f64) -> Result<Self> {
        if resolution < 3 {
            return Err(SteklovError::InvalidArgument(format!(
                "grid resolution must be >= 3 (got {resolution})"
            )));
        }
        if !(collar >= 0.0) {
            return Err(SteklovError::InvalidArgument("collar width must be >= 0".into()));
        }
        let [x0, y0, x1, y1] = curve.bounding_box();
        let (wx, wy) = (x1 - x0, y1 - y0);
        let h = wx.max(wy) / (resolution - 1) as f64;
        let nx = (wx / h).ceil() as usize + 1;
        let ny = (wy / h).ceil() as usize + 1;
        let origin = [
            0.5 * (x0 + x1) - 0.5 * h * (nx - 1) as f64,
            0.5 * (y0 + y1) - 0.5 * h * (ny - 1) as f64,
        ];
        let located: Vec<Location> = (0..nx * ny)
            .into_par_iter()
            .map(|idx| {
                let p = [origin[0] + h * (idx % nx) as f64, origin[1] + h * (idx / nx) as f64];
                curve.locate(p, collar)
            })
            .collect();
        Ok(InteriorGrid {
            origin,
            h,
            nx,
            ny,
            collar,
            class: located.iter().map(|l| l.class).collect(),
            distance: located.iter().map(|l| l.distance).collect(),
            inside: located.iter().map(|l| l.inside).collect(),
        })
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        [self.origin[0] + self.h * i as f64, self.origin[1] + self.h * j as f64]
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.class[idx] == PointClass::Inside
    }

    pub fn active_count(&self) -> usize {
        self.class.iter().filter(|c| **c == PointClass::Inside).count()
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors_parse_and_reject() {
        assert_eq!("disk".parse::<CurveKind>().unwrap(), CurveKind::Disk);
        assert_eq!(
            "ellipse:2,1".parse::<CurveKind>().unwrap(),
            CurveKind::Ellipse { a: 2.0, b: 1.0 }
        );
        assert!("ellipse:0,1".parse::<CurveKind>().is_err());
        assert!("ellipse:-2,1".parse::<CurveKind>().is_err());
        assert!("star:0.3,5".parse::<CurveKind>().is_err());
        assert!("star:0.03,5".parse::<CurveKind>().is_ok());
        assert!("blob".parse::<CurveKind>().is_err());
        let k: CurveKind = "star:0.05,4".parse().unwrap();
        assert_eq!(k.to_string().parse::<CurveKind>().unwrap(), k);
    }

    #[test]
    fn disk_geometry() {
        let c = curve_from_spec("disk").unwrap();
        let g = geometry_at(&c, PI / 2.0);
        assert!(g.point[0].abs() < 1e-15 && (g.point[1] - 1.0).abs() < 1e-15);
        assert!(g.normal[0].abs() < 1e-15 && (g.normal[1] - 1.0).abs() < 1e-15);
        assert!((g.speed - 1.0).abs() < 1e-15);
        assert!((g.curvature - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ellipse_curvature_matches_closed_form() {
        let c = curve_from_spec("ellipse:2,1").unwrap();
        let g = c.at(0.0);
        assert_eq!(g.point, [2.0, 0.0]);
        assert!((g.normal[0] - 1.0).abs() < 1e-15 && g.normal[1].abs() < 1e-15);
        assert!((g.curvature - 2.0).abs() < 1e-14);
        for j in 0..16 {
            let t = 0.37 * j as f64;
            let (a, b) = (2.0_f64, 1.0_f64);
            let exact = a * b / (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5);
            assert!((c.at(t).curvature - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn kite_normals_are_unit() {
        let c = curve_from_spec("kite").unwrap();
        for j in 0..100 {
            let n = c.at(0.0628 * j as f64).normal;
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn quadrature_validation_and_disk_length() {
        let c = curve_from_spec("disk").unwrap();
        assert!(build_quadrature(&c, 17).is_err());
        assert!(build_quadrature(&c, 14).is_err());
        let q = build_quadrature(&c, 64).unwrap();
        assert!((q.total_weight() - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn disk_point_location() {
        let c = curve_from_spec("disk").unwrap();
        assert_eq!(point_location(&c, [0.0, 0.0], 0.02), PointClass::Inside);
        assert_eq!(point_location(&c, [0.99, 0.0], 0.02), PointClass::Collar);
        assert_eq!(point_location(&c, [2.0, 0.0], 0.02), PointClass::Outside);
        let (d, t) = c.nearest([0.0, 0.5]);
        assert!((d - 0.5).abs() < 1e-14 && (t - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn interior_grid_covers_disk() {
        let c = curve_from_spec("disk").unwrap();
        let g = InteriorGrid::new(&c, 41, 0.04).unwrap();
        assert_eq!((g.nx, g.ny), (41, 41));
        assert!((g.h - 0.05).abs() < 1e-15);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = g.index(i, j);
                let p = g.point(i, j);
                let r = p[0].hypot(p[1]);
                if g.is_active(idx) {
                    assert!(r < 1.0 - 0.04);
                }
                if r < 0.9 {
                    assert!(g.is_active(idx));
                }
            }
        }
    }
}
