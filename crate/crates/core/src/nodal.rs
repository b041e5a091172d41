//! Interior fields from boundary Cauchy data, level-set extraction and the
//! integration-by-parts identities along nodal sets.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::geometry::{dist, BoundaryCurve, InteriorGrid, Point, QuadratureGrid};
use crate::kernels::kernel_gradients;
use crate::layer::{BoundarySampler, UpsampledSet, DEFAULT_MAX_UPSAMPLE};
use crate::oracle::DiskMode;
use crate::quadrature::GaussRule;
use crate::steklov::{CauchyData, ProblemKind};
use crate::trig::TrigPoly;

const GRADIENT_FLOOR: f64 = 1e-12;
const BRIDGE_ORDER: usize = 12;
const PIECE_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub e: f64,
    pub grad_e: Point,
    pub lap_e: f64,
    pub grad_lap_e: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    BemReconstructed,
    DiskOracle,
}

/// Anything that can evaluate `e, ∇e, Δe, ∇Δe` inside the domain.
pub trait FieldSource: Sync {
    /// Full sample at `p`, whose distance to the boundary is `distance`.
    fn sample_at(&self, p: Point, distance: f64) -> Result<FieldSample>;

    /// `(e, Δe)` only.
    fn values_at(&self, p: Point, distance: f64) -> Result<(f64, f64)> {
        self.sample_at(p, distance).map(|s| (s.e, s.lap_e))
    }

    /// Closest admissible distance to the boundary.
    fn min_distance(&self) -> f64;

    fn provenance(&self) -> Provenance;

    fn curve(&self) -> &BoundaryCurve;

    fn sample(&self, p: Point) -> Result<FieldSample> {
        let d = self.curve().locate(p, 0.0).distance;
        self.sample_at(p, d)
    }
}

/// Green representation of a biharmonic function from its Cauchy data:
/// `u(x) = ∫ u ∂_νΔÊ − ∂_νu ΔÊ + Δu ∂_νÊ − ∂_νΔu Ê dσ`, and the harmonic
/// representation `Δu(x) = ∫ Δu ∂_νE − ∂_νΔu E dσ`.
pub struct FieldEvaluator {
    sampler: BoundarySampler,
    data: UpsampledSet,
}

impl FieldEvaluator {
    pub fn new(curve: &BoundaryCurve, grid: &QuadratureGrid, cd: &CauchyData) -> Self {
        let sampler = BoundarySampler::new(curve, grid.n, DEFAULT_MAX_UPSAMPLE);
        let data = UpsampledSet::new(&[&cd.u, &cd.dn_u, &cd.lap_u, &cd.dn_lap_u], sampler.level_count());
        FieldEvaluator { sampler, data }
    }

    fn level(&self, p: Point, distance: f64) -> Result<usize> {
        self.sampler
            .level_for(distance)
            .ok_or(SteklovError::CollarPoint(p[0], p[1], distance, self.sampler.floor()))
    }
}

impl FieldSource for FieldEvaluator {
    fn sample_at(&self, p: Point, distance: f64) -> Result<FieldSample> {
        let l = self.level(p, distance)?;
        let g = self.sampler.geom(l);
        let f = self.data.at(l);
        let mut s = FieldSample::default();
        for j in 0..g.points.len() {
            let y = g.points[j];
            let nu = g.normals[j];
            let w = g.weights[j];
            let d = [y[0] - p[0], y[1] - p[1]];
            let r2 = d[0] * d[0] + d[1] * d[1];
            let log_r = 0.5 * r2.ln();
            let proj = d[0] * nu[0] + d[1] * nu[1];
            let k_hat = r2 * log_r / (8.0 * PI);
            let k_dn_hat = (2.0 * log_r + 1.0) * proj / (8.0 * PI);
            let k_lap = (log_r + 1.0) / (2.0 * PI);
            let k_dn_lap = proj / (2.0 * PI * r2);
            let k_e = log_r / (2.0 * PI);
            let (u, du, lu, dlu) = (f[0][j] * w, f[1][j] * w, f[2][j] * w, f[3][j] * w);
            s.e += u * k_dn_lap - du * k_lap + lu * k_dn_hat - dlu * k_hat;
            s.lap_e += lu * k_dn_lap - dlu * k_e;
            let kg = kernel_gradients(p, y, nu);
            for c in 0..2 {
                s.grad_e[c] +=
                    u * kg.dn_lap_e_hat[c] - du * kg.lap_e_hat[c] + lu * kg.dn_e_hat[c] - dlu * kg.e_hat[c];
                s.grad_lap_e[c] += lu * kg.dn_lap_e_hat[c] - dlu * kg.e[c];
            }
        }
        Ok(s)
    }

    fn values_at(&self, p: Point, distance: f64) -> Result<(f64, f64)> {
        let l = self.level(p, distance)?;
        let g = self.sampler.geom(l);
        let f = self.data.at(l);
        let (mut e, mut lap) = (0.0, 0.0);
        for j in 0..g.points.len() {
            let y = g.points[j];
            let nu = g.normals[j];
            let w = g.weights[j];
            let d = [y[0] - p[0], y[1] - p[1]];
            let r2 = d[0] * d[0] + d[1] * d[1];
            let log_r = 0.5 * r2.ln();
            let proj = d[0] * nu[0] + d[1] * nu[1];
            let k_dn_lap = proj / (2.0 * PI * r2);
            e += w
                * (f[0][j] * k_dn_lap - f[1][j] * (log_r + 1.0) / (2.0 * PI)
                    + f[2][j] * (2.0 * log_r + 1.0) * proj / (8.0 * PI)
                    - f[3][j] * r2 * log_r / (8.0 * PI));
            lap += w * (f[2][j] * k_dn_lap - f[3][j] * log_r / (2.0 * PI));
        }
        Ok((e, lap))
    }

    fn min_distance(&self) -> f64 {
        self.sampler.floor()
    }

    fn provenance(&self) -> Provenance {
        Provenance::BemReconstructed
    }

    fn curve(&self) -> &BoundaryCurve {
        self.sampler.curve()
    }
}

/// A linear combination of closed-form disk modes.
pub struct OracleSource {
    curve: BoundaryCurve,
    modes: Vec<(DiskMode, f64)>,
}

impl OracleSource {
    pub fn new(modes: Vec<(DiskMode, f64)>) -> Self {
        OracleSource { curve: BoundaryCurve::new(crate::geometry::CurveKind::Disk), modes }
    }

    /// Cauchy data of the combination sampled on a disk grid.
    pub fn cauchy_data(&self, grid: &QuadratureGrid) -> CauchyData {
        let mut cd = CauchyData::zeros(grid.n);
        for (i, &t) in grid.t.iter().enumerate() {
            for (m, c) in &self.modes {
                let v = m.cauchy_at(t);
                cd.u[i] += c * v[0];
                cd.dn_u[i] += c * v[1];
                cd.lap_u[i] += c * v[2];
                cd.dn_lap_u[i] += c * v[3];
            }
        }
        cd
    }
}

impl FieldSource for OracleSource {
    fn sample_at(&self, p: Point, _distance: f64) -> Result<FieldSample> {
        let mut s = FieldSample::default();
        for (m, c) in &self.modes {
            let v = m.eval(p);
            s.e += c * v.e;
            s.lap_e += c * v.lap_e;
            for k in 0..2 {
                s.grad_e[k] += c * v.grad_e[k];
                s.grad_lap_e[k] += c * v.grad_lap_e[k];
            }
        }
        Ok(s)
    }

    fn min_distance(&self) -> f64 {
        0.0
    }

    fn provenance(&self) -> Provenance {
        Provenance::DiskOracle
    }

    fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    E,
    LapE,
    GradE,
    GradLapE,
}

/// Fields sampled on an interior grid; `NaN` where not evaluated.
#[derive(Debug, Clone)]
pub struct GridFields<'a> {
    pub grid: &'a InteriorGrid,
    pub provenance: Provenance,
    pub evaluated: Vec<bool>,
    pub e: Vec<f64>,
    pub lap_e: Vec<f64>,
    pub grad_e: Option<Vec<f64>>,
    pub grad_lap_e: Option<Vec<f64>>,
}

/// Evaluates the field at inside non-collar nodes; with `include_collar`,
/// also at inside collar nodes farther than the source's minimum distance.
pub fn field_on_grid<'a>(
    source: &dyn FieldSource,
    grid: &'a InteriorGrid,
    include_collar: bool,
    gradients: bool,
) -> Result<GridFields<'a>> {
    let floor = source.min_distance();
    let evaluated: Vec<bool> = (0..grid.class.len())
        .map(|i| {
            grid.is_active(i) || (include_collar && grid.inside[i] && grid.distance[i] >= floor)
        })
        .collect();
    let samples: Vec<Result<FieldSample>> = (0..grid.class.len())
        .into_par_iter()
        .map(|idx| {
            if !evaluated[idx] {
                let nan = f64::NAN;
                return Ok(FieldSample { e: nan, grad_e: [nan; 2], lap_e: nan, grad_lap_e: [nan; 2] });
            }
            let p = grid.point(idx % grid.nx, idx / grid.nx);
            if gradients {
                source.sample_at(p, grid.distance[idx])
            } else {
                source.values_at(p, grid.distance[idx]).map(|(e, lap_e)| FieldSample {
                    e,
                    lap_e,
                    ..Default::default()
                })
            }
        })
        .collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let norm = |g: Point| g[0].hypot(g[1]);
    Ok(GridFields {
        grid,
        provenance: source.provenance(),
        e: samples.iter().map(|s| s.e).collect(),
        lap_e: samples.iter().map(|s| s.lap_e).collect(),
        grad_e: gradients.then(|| samples.iter().map(|s| norm(s.grad_e)).collect()),
        grad_lap_e: gradients.then(|| samples.iter().map(|s| norm(s.grad_lap_e)).collect()),
        evaluated,
    })
}

impl<'a> GridFields<'a> {
    pub fn scalar(&self, kind: FieldKind) -> Option<ScalarField<'a>> {
        let src = match kind {
            FieldKind::E => &self.e,
            FieldKind::LapE => &self.lap_e,
            FieldKind::GradE => self.grad_e.as_ref()?,
            FieldKind::GradLapE => self.grad_lap_e.as_ref()?,
        };
        let values =
            (0..src.len()).map(|i| if self.grid.is_active(i) { src[i] } else { f64::NAN }).collect();
        Some(ScalarField { grid: self.grid, kind, provenance: self.provenance, values })
    }

    /// `∫_M g(e, Δe) dx` by the lattice rule over evaluated nodes.
    pub fn area_integral(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let h2 = self.grid.h * self.grid.h;
        (0..self.e.len()).filter(|&i| self.evaluated[i]).map(|i| g(self.e[i], self.lap_e[i]) * h2).sum()
    }
}

/// Values of one field at the active (inside, non-collar) nodes of a grid.
#[derive(Debug, Clone)]
pub struct ScalarField<'a> {
    pub grid: &'a InteriorGrid,
    pub kind: FieldKind,
    pub provenance: Provenance,
    pub values: Vec<f64>,
}

impl<'a> ScalarField<'a> {
    pub fn from_fn(grid: &'a InteriorGrid, kind: FieldKind, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.class.len())
            .map(|i| if grid.is_active(i) { f(grid.point(i % grid.nx, i / grid.nx)) } else { f64::NAN })
            .collect();
        ScalarField { grid, kind, provenance: Provenance::DiskOracle, values }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest five-point Laplacian over nodes whose stencil is active.
    pub fn laplacian_residual(&self) -> f64 {
        let g = self.grid;
        let mut worst: f64 = 0.0;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let c = g.index(i, j);
                let nb = [g.index(i + 1, j), g.index(i - 1, j), g.index(i, j + 1), g.index(i, j - 1)];
                if !g.is_active(c) || nb.iter().any(|&k| !g.is_active(k)) {
                    continue;
                }
                let lap = (nb.iter().map(|&k| self.values[k]).sum::<f64>() - 4.0 * self.values[c])
                    / (g.h * g.h);
                worst = worst.max(lap.abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn length(&self) -> f64 {
        dist(self.a, self.b)
    }

    pub fn midpoint(&self) -> Point {
        [0.5 * (self.a[0] + self.b[0]), 0.5 * (self.a[1] + self.b[1])]
    }
}

/// Straight join from an open polyline end across the collar to a boundary
/// crossing of the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    pub from: Point,
    pub to: Point,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub points: Vec<Point>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalGeometry {
    /// Level actually used after the regular-value perturbation.
    pub alpha: f64,
    pub requested_alpha: f64,
    pub segments: Vec<Segment>,
    pub components: Vec<Component>,
    pub bridges: Vec<Bridge>,
    /// Sum of the grid segment lengths.
    pub raw_length: f64,
    /// `raw_length` plus the collar bridges.
    pub length: f64,
    pub boundary_zeros: Vec<f64>,
    pub boundary_zero_count: usize,
    pub collar_cells: usize,
    pub ambiguous_cells: usize,
    pub unbridged_ends: usize,
}

#[derive(Serialize)]
struct NodalExport<'a> {
    alpha: f64,
    length: f64,
    raw_length: f64,
    boundary_zero_count: usize,
    segments: Vec<[f64; 4]>,
    bridges: Vec<[f64; 4]>,
    collar_cells: usize,
    ambiguous_cells: usize,
    boundary_zeros: &'a [f64],
}

impl NodalGeometry {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        let export = NodalExport {
            alpha: self.alpha,
            length: self.length,
            raw_length: self.raw_length,
            boundary_zero_count: self.boundary_zero_count,
            segments: self.segments.iter().map(|s| [s.a[0], s.a[1], s.b[0], s.b[1]]).collect(),
            bridges: self.bridges.iter().map(|b| [b.from[0], b.from[1], b.to[0], b.to[1]]).collect(),
            collar_cells: self.collar_cells,
            ambiguous_cells: self.ambiguous_cells,
            boundary_zeros: &self.boundary_zeros,
        };
        Ok(serde_json::to_string_pretty(&export)?)
    }

    /// Domain outline plus one stroked path per component.
    pub fn to_svg(&self, curve: &BoundaryCurve) -> String {
        let [x0, y0, x1, y1] = curve.bounding_box();
        let pad = 0.05 * curve.diameter();
        let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
        let scale = 600.0 / w.max(h);
        let map = |p: Point| ((p[0] - x0 + pad) * scale, (y1 + pad - p[1]) * scale);
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.1}" height="{:.1}">"#,
            w * scale,
            h * scale
        );
        let mut outline = String::new();
        for j in 0..=512 {
            let (x, y) = map(curve.position(2.0 * PI * j as f64 / 512.0));
            let _ = write!(outline, "{}{x:.2},{y:.2} ", if j == 0 { "M" } else { "L" });
        }
        let _ = writeln!(svg, r#"<path d="{}Z" fill="none" stroke="black" stroke-width="1.5"/>"#, outline.trim());
        for c in &self.components {
            let mut d = String::new();
            for (k, p) in c.points.iter().enumerate() {
                let (x, y) = map(*p);
                let _ = write!(d, "{}{x:.2},{y:.2} ", if k == 0 { "M" } else { "L" });
            }
            if c.closed {
                d.push('Z');
            }
            let _ = writeln!(svg, r#"<path d="{}" fill="none" stroke="crimson" stroke-width="1"/>"#, d.trim());
        }
        for b in &self.bridges {
            let (xa, ya) = map(b.from);
            let (xb, yb) = map(b.to);
            let _ = writeln!(
                svg,
                r#"<path d="M{xa:.2},{ya:.2} L{xb:.2},{yb:.2}" fill="none" stroke="crimson" stroke-width="1" stroke-dasharray="2,2"/>"#
            );
        }
        svg.push_str("</svg>\n");
        svg
    }

    /// Joins every open polyline end to the nearest boundary crossing within `max_gap`.
    pub fn bridge_to_boundary(&mut self, curve: &BoundaryCurve, zeros: &[f64], max_gap: f64) {
        self.boundary_zeros = zeros.to_vec();
        self.boundary_zero_count = zeros.len();
        let targets: Vec<Point> = zeros.iter().map(|&t| curve.position(t)).collect();
        let mut bridges = Vec::new();
        let mut unbridged = 0;
        for c in self.components.iter().filter(|c| !c.closed) {
            for end in [c.points[0], *c.points.last().unwrap()] {
                let best = targets
                    .iter()
                    .enumerate()
                    .map(|(k, q)| (dist(end, *q), k))
                    .min_by(|a, b| a.0.total_cmp(&b.0));
                match best {
                    Some((d, k)) if d <= max_gap => bridges.push(Bridge { from: end, to: targets[k], t: zeros[k] }),
                    _ => unbridged += 1,
                }
            }
        }
        self.length = self.raw_length + bridges.iter().map(|b| dist(b.from, b.to)).sum::<f64>();
        self.bridges = bridges;
        self.unbridged_ends = unbridged;
    }
}

/// `(horizontal?, i, j)` names the grid edge from node `(i, j)` to the right or up.
type EdgeKey = (u8, usize, usize);

/// Marching squares over cells whose four corners are active.
pub fn level_set_extract(field: &ScalarField, alpha: f64) -> NodalGeometry {
    let g = field.grid;
    let v = &field.values;
    let mut level = alpha;
    if v.iter().any(|x| x.is_finite() && *x == alpha) {
        level += 1e-12 * field.sup_norm().max(f64::MIN_POSITIVE);
    }
    let mut segs: Vec<(Segment, EdgeKey, EdgeKey)> = Vec::new();
    let mut collar_cells = 0;
    let mut ambiguous_cells = 0;
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let corners = [g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)];
            let active = corners.iter().filter(|&&c| g.is_active(c)).count();
            if active < 4 {
                if active > 0 {
                    collar_cells += 1;
                }
                continue;
            }
            let f: Vec<f64> = corners.iter().map(|&c| v[c] - level).collect();
            let pos: Vec<bool> = f.iter().map(|x| *x > 0.0).collect();
            // edges: 0 bottom (c0-c1), 1 right (c1-c2), 2 top (c3-c2), 3 left (c0-c3)
            let edge_key = |e: usize| -> EdgeKey {
                match e {
                    0 => (0, i, j),
                    1 => (1, i + 1, j),
                    2 => (0, i, j + 1),
                    _ => (1, i, j),
                }
            };
            let pts = [g.point(i, j), g.point(i + 1, j), g.point(i + 1, j + 1), g.point(i, j + 1)];
            let ends = [(0, 1), (1, 2), (3, 2), (0, 3)];
            let cross = |e: usize| -> Point {
                let (a, b) = ends[e];
                let s = f[a] / (f[a] - f[b]);
                [pts[a][0] + s * (pts[b][0] - pts[a][0]), pts[a][1] + s * (pts[b][1] - pts[a][1])]
            };
            let cut: Vec<usize> = (0..4).filter(|&e| pos[ends[e].0] != pos[ends[e].1]).collect();
            let mut add = |e1: usize, e2: usize| {
                segs.push((Segment { a: cross(e1), b: cross(e2) }, edge_key(e1), edge_key(e2)));
            };
            match cut.len() {
                2 => add(cut[0], cut[1]),
                4 => {
                    ambiguous_cells += 1;
                    let centre = f.iter().sum::<f64>() / 4.0 > 0.0;
                    if centre == pos[0] {
                        add(0, 1);
                        add(2, 3);
                    } else {
                        add(3, 0);
                        add(1, 2);
                    }
                }
                _ => {}
            }
        }
    }
    let components = chain_segments(&segs);
    let segments: Vec<Segment> = segs.iter().map(|s| s.0).collect();
    let raw_length = segments.iter().map(Segment::length).sum();
    NodalGeometry {
        alpha: level,
        requested_alpha: alpha,
        segments,
        components,
        bridges: Vec::new(),
        raw_length,
        length: raw_length,
        boundary_zeros: Vec::new(),
        boundary_zero_count: 0,
        collar_cells,
        ambiguous_cells,
        unbridged_ends: 0,
    }
}

fn chain_segments(segs: &[(Segment, EdgeKey, EdgeKey)]) -> Vec<Component> {
    let mut at: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (k, s) in segs.iter().enumerate() {
        at.entry(s.1).or_default().push(k);
        at.entry(s.2).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    let open_starts: Vec<(usize, EdgeKey)> = segs
        .iter()
        .enumerate()
        .flat_map(|(k, s)| [(k, s.1), (k, s.2)])
        .filter(|(_, key)| at[key].len() == 1)
        .collect();
    let starts = open_starts.into_iter().chain((0..segs.len()).map(|k| (k, segs[k].1)));
    for (start, key) in starts {
        if used[start] {
            continue;
        }
        let open = at[&key].len() == 1;
        let mut points = Vec::new();
        let (mut cur, mut entry) = (start, key);
        loop {
            used[cur] = true;
            let (s, k1, k2) = &segs[cur];
            let (p_in, p_out, exit) = if *k1 == entry { (s.a, s.b, *k2) } else { (s.b, s.a, *k1) };
            if points.is_empty() {
                points.push(p_in);
            }
            points.push(p_out);
            match at[&exit].iter().find(|&&n| !used[n]) {
                Some(&next) => {
                    cur = next;
                    entry = exit;
                }
                None => {
                    let closed = !open && at[&exit].len() == 2;
                    if closed {
                        points.pop();
                    }
                    out.push(Component { points, closed });
                    break;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryZeros {
    pub count: usize,
    pub params: Vec<f64>,
}

/// Crossings of `trace − α` between the `N` nodes, refined on the trigonometric interpolant.
pub fn boundary_zeros(trace: &[f64], alpha: f64) -> BoundaryZeros {
    let poly = TrigPoly::from_nodal(trace);
    let params = poly.crossings(trace, alpha);
    BoundaryZeros { count: params.len(), params }
}

/// `∫_{∂M} sign(g − level)·h ds`, split at the crossings of `g` and integrated
/// piecewise with Gauss–Legendre on the trigonometric interpolants.
fn signed_boundary_integral(curve: &BoundaryCurve, g: &[f64], level: f64, h: impl Fn(f64) -> f64) -> f64 {
    let n = g.len();
    let gp = TrigPoly::from_nodal(g);
    let mut cuts = gp.crossings(g, level);
    cuts.sort_by(f64::total_cmp);
    let rule = GaussRule::new(PIECE_ORDER);
    let panel = 8.0 * PI / n as f64;
    let piece = |a: f64, b: f64| -> f64 {
        let sign = if gp.eval(0.5 * (a + b)) - level > 0.0 { 1.0 } else { -1.0 };
        let panels = ((b - a) / panel).ceil().max(1.0) as usize;
        sign * rule.composite(a, b, panels, |t| h(t) * curve.speed(t))
    };
    if cuts.is_empty() {
        return piece(0.0, 2.0 * PI);
    }
    let mut total = 0.0;
    for k in 0..cuts.len() {
        let a = cuts[k];
        let b = if k + 1 < cuts.len() { cuts[k + 1] } else { cuts[0] + 2.0 * PI };
        total += piece(a, b);
    }
    total
}

/// Inputs shared by the interior identities.
pub struct IdentityContext<'a> {
    pub kind: ProblemKind,
    pub lambda: f64,
    pub curve: &'a BoundaryCurve,
    pub grid: &'a QuadratureGrid,
    pub cd: &'a CauchyData,
    pub source: &'a dyn FieldSource,
    pub interior: &'a InteriorGrid,
}

impl IdentityContext<'_> {
    fn max_gap(&self) -> f64 {
        2.0 * (self.interior.collar + 2.0 * self.interior.h)
    }

    /// Boundary trace whose zeros are the boundary ends of `{e = 0}`.
    pub fn nodal_trace(&self) -> &[f64] {
        match self.kind {
            ProblemKind::Theta => &self.cd.u,
            _ => &self.cd.dn_u,
        }
    }

    fn l1(&self, f: &[f64]) -> f64 {
        let p = TrigPoly::from_nodal(f);
        signed_boundary_integral(self.curve, f, 0.0, |t| p.eval(t))
    }

    /// `Σ_segments ∫ g(sample, normal)` over grid segments (midpoint rule, normal
    /// `None`) and bridges (Gauss–Legendre, normal of the bridge).
    fn along(
        &self,
        geom: &NodalGeometry,
        g: impl Fn(&FieldSample, Option<Point>) -> Option<f64>,
    ) -> Result<(f64, usize)> {
        let mids: Vec<Point> = geom.segments.iter().map(Segment::midpoint).collect();
        let vals: Vec<Result<FieldSample>> = mids.par_iter().map(|&p| self.source.sample(p)).collect();
        let mut total = 0.0;
        let mut skipped = 0;
        for (s, v) in geom.segments.iter().zip(vals) {
            match g(&v?, None) {
                Some(x) => total += x * s.length(),
                None => skipped += 1,
            }
        }
        let rule = GaussRule::new(BRIDGE_ORDER);
        let floor = 1.01 * self.source.min_distance();
        for b in &geom.bridges {
            let len = dist(b.from, b.to);
            if len == 0.0 {
                continue;
            }
            let tan = [(b.to[0] - b.from[0]) / len, (b.to[1] - b.from[1]) / len];
            let normal = [tan[1], -tan[0]];
            for (s, w) in rule.mapped(0.0, 1.0) {
                let mut p = [b.from[0] + s * (b.to[0] - b.from[0]), b.from[1] + s * (b.to[1] - b.from[1])];
                let loc = self.curve.locate(p, 0.0);
                let mut d = loc.distance;
                if d < floor || !loc.inside {
                    let c = self.curve.at(loc.t);
                    p = [c.point[0] - floor * c.normal[0], c.point[1] - floor * c.normal[1]];
                    d = floor;
                }
                let sample = self.source.sample_at(p, d)?;
                if let Some(x) = g(&sample, Some(normal)) {
                    total += x * w * len;
                }
            }
        }
        Ok((total, skipped))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorIbpReport {
    pub alpha: f64,
    /// `∫_{∂M} σ_α(Δe) ∂_νΔe ds`
    pub b: f64,
    /// `2∫_{Ẑ^α} |∇Δe| ds`
    pub s: f64,
    pub residual: f64,
    /// `S / (λ ‖Δe‖_{L¹(∂M)})`
    pub ratio: f64,
    pub raw_length: f64,
    pub length: f64,
    pub unbridged_ends: usize,
}

/// Interior integration-by-parts identity for the `α`-level set of `Δe`.
pub fn interior_ibp_residual(
    ctx: &IdentityContext,
    lap_field: &ScalarField,
    alpha: f64,
    c: f64,
) -> Result<InteriorIbpReport> {
    let bound = c * ctx.grid.l2_norm(&ctx.cd.lap_u);
    if alpha.abs() >= bound && alpha != 0.0 {
        return Err(SteklovError::InvalidArgument(format!(
            "alpha = {alpha} is not admissible (|alpha| must stay below {bound:.6e})"
        )));
    }
    let mut geom = level_set_extract(lap_field, alpha);
    let zeros = boundary_zeros(&ctx.cd.lap_u, geom.alpha);
    geom.bridge_to_boundary(ctx.curve, &zeros.params, ctx.max_gap());
    let dn_lap = TrigPoly::from_nodal(&ctx.cd.dn_lap_u);
    let b = signed_boundary_integral(ctx.curve, &ctx.cd.lap_u, geom.alpha, |t| dn_lap.eval(t));
    let scale = ctx.grid.integrate(&ctx.cd.dn_lap_u.iter().map(|x| x.abs()).collect::<Vec<_>>());
    if geom.is_empty() && b.abs() > 1e-8 * scale.max(1e-300) {
        return Err(SteklovError::Inconsistent(format!(
            "empty level set at alpha = {} but boundary side is {b:.6e}",
            geom.alpha
        )));
    }
    let (half, _) = ctx.along(&geom, |s, _| Some(s.grad_lap_e[0].hypot(s.grad_lap_e[1])))?;
    let s = 2.0 * half;
    let residual = if b.abs() > 1e-300 { (b - s).abs() / b.abs() } else { s.abs() };
    let l1 = ctx.l1(&ctx.cd.lap_u);
    Ok(InteriorIbpReport {
        alpha: geom.alpha,
        b,
        s,
        residual,
        ratio: if l1 > 0.0 { s / (ctx.lambda * l1) } else { 0.0 },
        raw_length: geom.raw_length,
        length: geom.length,
        unbridged_ends: geom.unbridged_ends,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    /// `∫_{Z} |⟨∇Δe, N⟩| ds`
    pub flux: f64,
    /// `−∫_{∂M} σ(trace)·∂_νΔe ds`
    pub boundary_side: f64,
    /// `|2F − |boundary side|| / |boundary side|`
    pub residual: f64,
    /// THETA: `F / ((λ³/2)‖e‖_{L¹(∂M)})`; XI, PI: `F / (λ²‖∂_νe‖_{L¹(∂M)})`.
    pub ratio: f64,
    pub skipped_segments: usize,
    pub raw_length: f64,
    pub length: f64,
}

/// Flux of `∇Δe` through the nodal set of `e`.
pub fn interior_flux_check(ctx: &IdentityContext, e_field: &ScalarField) -> Result<FluxReport> {
    let mut geom = level_set_extract(e_field, 0.0);
    let trace = ctx.nodal_trace();
    let zeros = boundary_zeros(trace, 0.0);
    geom.bridge_to_boundary(ctx.curve, &zeros.params, ctx.max_gap());
    let (flux, skipped) = ctx.along(&geom, |s, normal| {
        let n = match normal {
            Some(n) => n,
            None => {
                let g = s.grad_e[0].hypot(s.grad_e[1]);
                if g < GRADIENT_FLOOR {
                    return None;
                }
                [s.grad_e[0] / g, s.grad_e[1] / g]
            }
        };
        Some((s.grad_lap_e[0] * n[0] + s.grad_lap_e[1] * n[1]).abs())
    })?;
    let dn_lap = TrigPoly::from_nodal(&ctx.cd.dn_lap_u);
    let boundary_side = -signed_boundary_integral(ctx.curve, trace, 0.0, |t| dn_lap.eval(t));
    let l1 = ctx.l1(trace);
    let denom = match ctx.kind {
        ProblemKind::Theta => 0.5 * ctx.lambda.powi(3) * l1,
        _ => ctx.lambda * ctx.lambda * l1,
    };
    Ok(FluxReport {
        flux,
        boundary_side,
        residual: if boundary_side != 0.0 {
            (2.0 * flux - boundary_side.abs()).abs() / boundary_side.abs()
        } else {
            flux.abs()
        },
        ratio: if denom > 0.0 { flux / denom } else { 0.0 },
        skipped_segments: skipped,
        raw_length: geom.raw_length,
        length: geom.length,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryIbpReport {
    /// `−∫_{∂M} σ_α(φ) Δ^Tφ ds`
    pub lhs: f64,
    /// `2 Σ_{φ = α} |∂_sφ|`
    pub rhs: f64,
    pub residual: f64,
    pub zero_count: usize,
}

/// Boundary integration-by-parts identity with spectral tangential derivatives.
pub fn boundary_ibp_residual(curve: &BoundaryCurve, phi: &[f64], alpha: f64) -> BoundaryIbpReport {
    let p = TrigPoly::from_nodal(phi);
    let geom = |t: f64| {
        let (_, d1, d2) = curve.derivatives(t);
        let s = d1[0].hypot(d1[1]);
        (s, (d1[0] * d2[0] + d1[1] * d2[1]) / s)
    };
    let lap_t = |t: f64| {
        let (_, f1, f2) = p.eval_derivs(t);
        let (s, ds) = geom(t);
        (f2 - f1 * ds / s) / (s * s)
    };
    let lhs = -signed_boundary_integral(curve, phi, alpha, lap_t);
    let zeros = p.crossings(phi, alpha);
    let rhs: f64 = zeros.iter().map(|&t| 2.0 * (p.eval_derivs(t).1 / geom(t).0).abs()).sum();
    let scale = lhs.abs().max(rhs.abs());
    let residual = if scale > 1e-12 { (lhs - rhs).abs() / scale } else { 0.0 };
    BoundaryIbpReport { lhs, rhs, residual, zero_count: zeros.len() }
}

/// Exponents of the scaling laws in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponents {
    pub n: usize,
    /// Boundary nodal measure, `(4 − n)/2`.
    pub boundary: f64,
    /// Level sets of `Δe`, `(2 − n)/2`.
    pub lap_vanishing: f64,
    /// Interior nodal measure for XI and PI, `(2 − n)/2`.
    pub interior_xi_pi: f64,
    /// Interior nodal measure for THETA, `−n/2`.
    pub interior_theta: f64,
}

impl ScalingExponents {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        ScalingExponents {
            n,
            boundary: (4.0 - nf) / 2.0,
            lap_vanishing: (2.0 - nf) / 2.0,
            interior_xi_pi: (2.0 - nf) / 2.0,
            interior_theta: -nf / 2.0,
        }
    }

    pub fn sigma(&self, p: f64) -> Result<f64> {
        sigma_exponent(self.n, p)
    }
}

impl Default for ScalingExponents {
    fn default() -> Self {
        ScalingExponents::new(2)
    }
}

/// `σ(n, p)`: `((n−2)/2)(½ − 1/p)` up to the branch point `p = 2n/(n−2)`,
/// `(n−1)(½ − 1/p) − ½` beyond it. `p = ∞` is accepted.
pub fn sigma_exponent(n: usize, p: f64) -> Result<f64> {
    if n < 2 {
        return Err(SteklovError::InvalidArgument(format!("dimension must be >= 2 (got {n})")));
    }
    if !(p >= 2.0) {
        return Err(SteklovError::InvalidArgument(format!("p must be >= 2 (got {p})")));
    }
    let nf = n as f64;
    let q = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let second = n == 2 && p.is_finite() || n > 2 && p <= 2.0 * nf / (nf - 2.0);
    Ok(if second { (nf - 2.0) / 2.0 * (0.5 - q) } else { (nf - 1.0) * (0.5 - q) - 0.5 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_quadrature, CurveKind};
    use crate::oracle::Parity;

    fn disk_interior(res: usize, collar: f64) -> (BoundaryCurve, InteriorGrid) {
        let curve = BoundaryCurve::new(CurveKind::Disk);
        let grid = InteriorGrid::new(&curve, res, collar).unwrap();
        (curve, grid)
    }

    #[test]
    fn circle_level_set_length_converges() {
        let curve = BoundaryCurve::new(CurveKind::Disk);
        let mut errs = Vec::new();
        for res in [51, 101, 201] {
            let grid = InteriorGrid::new(&curve, res, 0.02).unwrap();
            let f = ScalarField::from_fn(&grid, FieldKind::E, |p| p[0].hypot(p[1]) - 0.5);
            let g = level_set_extract(&f, 0.0);
            assert_eq!(g.components.len(), 1);
            assert!(g.components[0].closed);
            errs.push((g.raw_length - PI).abs());
        }
        assert!(errs[2] < errs[0] && errs[2] < 2e-3, "{errs:?}");
    }

    #[test]
    fn constant_field_has_empty_level_set() {
        let (_, grid) = disk_interior(41, 0.04);
        let f = ScalarField::from_fn(&grid, FieldKind::LapE, |_| 2.0);
        let g = level_set_extract(&f, 0.0);
        assert!(g.is_empty() && g.length == 0.0);
    }

    #[test]
    fn disk_rays_from_oracle() {
        let (curve, grid) = disk_interior(201, 0.04);
        for k in [2usize, 3] {
            let m = DiskMode::new(ProblemKind::Xi, k, Parity::Cos);
            let f = ScalarField::from_fn(&grid, FieldKind::E, |p| m.eval(p).e);
            let mut g = level_set_extract(&f, 0.0);
            let want = 2.0 * k as f64 * (1.0 - 0.04);
            assert!((g.raw_length - want).abs() < 0.05 * want, "k={k}: {}", g.raw_length);
            let zeros: Vec<f64> = (0..2 * k).map(|j| (j as f64 + 0.5) * PI / k as f64).collect();
            g.bridge_to_boundary(&curve, &zeros, 0.1);
            assert!((g.length - 2.0 * k as f64).abs() < 0.01 * k as f64, "k={k}: {}", g.length);
            assert_eq!(g.unbridged_ends, 0);
        }
    }

    #[test]
    fn boundary_zero_examples() {
        let sample = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            (0..64).map(|j| f(2.0 * PI * j as f64 / 64.0)).collect()
        };
        for k in 1..6 {
            assert_eq!(boundary_zeros(&sample(&|t| (k as f64 * t).cos()), 0.0).count, 2 * k);
        }
        assert_eq!(boundary_zeros(&sample(&|t| (3.0 * t).cos()), 0.5).count, 6);
        assert_eq!(boundary_zeros(&vec![1.0; 64], 0.0).count, 0);
    }

    #[test]
    fn boundary_identity_on_circle_and_kite() {
        let disk = BoundaryCurve::new(CurveKind::Disk);
        let grid = build_quadrature(&disk, 128).unwrap();
        for k in 1..=16 {
            let phi = grid.sample_fn(|t| (k as f64 * t).cos());
            let r = boundary_ibp_residual(&disk, &phi, 0.0);
            let want = 4.0 * (k * k) as f64;
            assert!((r.lhs - want).abs() < 1e-9 * want && (r.rhs - want).abs() < 1e-9 * want, "{r:?}");
            assert!(r.residual < 1e-10);
        }
        let r = boundary_ibp_residual(&disk, &vec![0.7; 128], 0.0);
        assert!(r.lhs.abs() < 1e-20 && r.rhs == 0.0 && r.residual == 0.0);
        let kite = BoundaryCurve::new(CurveKind::Kite);
        let grid = build_quadrature(&kite, 128).unwrap();
        let phi = grid.sample_fn(|t| (2.0 * t).sin() + 0.3 * (5.0 * t).cos());
        assert!(boundary_ibp_residual(&kite, &phi, 0.2).residual < 1e-9);
    }

    #[test]
    fn bem_fields_match_oracle() {
        let (curve, interior) = disk_interior(41, 0.04);
        let grid = build_quadrature(&curve, 128).unwrap();
        for (kind, k) in [(ProblemKind::Theta, 1), (ProblemKind::Xi, 3), (ProblemKind::Pi, 0)] {
            let oracle = OracleSource::new(vec![(DiskMode::new(kind, k, Parity::Cos), 0.8)]);
            let cd = oracle.cauchy_data(&grid);
            let bem = FieldEvaluator::new(&curve, &grid, &cd);
            let a = field_on_grid(&bem, &interior, false, true).unwrap();
            let b = field_on_grid(&oracle, &interior, false, true).unwrap();
            for i in 0..a.e.len() {
                if a.evaluated[i] {
                    assert!((a.e[i] - b.e[i]).abs() < 1e-10, "{kind} k={k}");
                    assert!((a.lap_e[i] - b.lap_e[i]).abs() < 1e-10);
                    assert!((a.grad_e.as_ref().unwrap()[i] - b.grad_e.as_ref().unwrap()[i]).abs() < 1e-9);
                    assert!(
                        (a.grad_lap_e.as_ref().unwrap()[i] - b.grad_lap_e.as_ref().unwrap()[i]).abs() < 1e-9
                    );
                }
            }
        }
        let zero = FieldEvaluator::new(&curve, &grid, &CauchyData::zeros(128));
        assert_eq!(zero.sample([0.2, 0.1]).unwrap(), FieldSample::default());
        assert!(matches!(zero.sample([0.99999, 0.0]), Err(SteklovError::CollarPoint(..))));
    }

    #[test]
    fn lap_field_is_harmonic() {
        let (_, interior) = disk_interior(101, 0.04);
        let m = DiskMode::new(ProblemKind::Theta, 3, Parity::Sin);
        let f = ScalarField::from_fn(&interior, FieldKind::LapE, |p| m.eval(p).lap_e);
        assert!(f.laplacian_residual() < 1e-8 * f.sup_norm() / (interior.h * interior.h));
    }

    #[test]
    fn oracle_identities() {
        let (curve, interior) = disk_interior(201, 0.04);
        let grid = build_quadrature(&curve, 128).unwrap();
        // XI k = 2 with ∂_ν e = cos 2θ
        let oracle = OracleSource::new(vec![(DiskMode::new(ProblemKind::Xi, 2, Parity::Cos), 1.0)]);
        let cd = oracle.cauchy_data(&grid);
        let ctx = IdentityContext {
            kind: ProblemKind::Xi,
            lambda: 6.0,
            curve: &curve,
            grid: &grid,
            cd: &cd,
            source: &oracle,
            interior: &interior,
        };
        let fields = field_on_grid(&oracle, &interior, false, false).unwrap();
        let r = interior_ibp_residual(&ctx, &fields.scalar(FieldKind::LapE).unwrap(), 0.0, 0.1).unwrap();
        assert!((r.b - 48.0).abs() < 1e-8, "{r:?}");
        assert!(r.residual < 0.01, "{r:?}");

        // THETA k = 2 with e = cos 2θ on the boundary
        let oracle = OracleSource::new(vec![(DiskMode::new(ProblemKind::Theta, 2, Parity::Cos), 1.0)]);
        let cd = oracle.cauchy_data(&grid);
        let ctx = IdentityContext { kind: ProblemKind::Theta, lambda: 24f64.cbrt(), cd: &cd, source: &oracle, ..ctx };
        let fields = field_on_grid(&oracle, &interior, false, false).unwrap();
        let f = interior_flux_check(&ctx, &fields.scalar(FieldKind::E).unwrap()).unwrap();
        assert!((f.flux - 48.0).abs() < 0.02 * 48.0, "{f:?}");
        assert!((f.ratio - 1.0).abs() < 0.02 && f.residual < 0.02, "{f:?}");

        // XI k = 0: Δe ≡ 2, empty level set, B = 0
        let oracle = OracleSource::new(vec![(DiskMode::new(ProblemKind::Xi, 0, Parity::Cos), 1.0)]);
        let cd = oracle.cauchy_data(&grid);
        let ctx = IdentityContext { kind: ProblemKind::Xi, lambda: 2.0, cd: &cd, source: &oracle, ..ctx };
        let fields = field_on_grid(&oracle, &interior, false, false).unwrap();
        let r = interior_ibp_residual(&ctx, &fields.scalar(FieldKind::LapE).unwrap(), 0.0, 0.1).unwrap();
        assert!(r.b.abs() < 1e-10 && r.s == 0.0);
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma_exponent(2, 2.0).unwrap(), 0.0);
        assert_eq!(sigma_exponent(2, f64::INFINITY).unwrap(), 0.0);
        assert_eq!(sigma_exponent(3, f64::INFINITY).unwrap(), 0.5);
        assert_eq!(sigma_exponent(4, 4.0).unwrap(), 0.25);
        for n in 2..8 {
            assert_eq!(sigma_exponent(n, 2.0).unwrap(), 0.0);
        }
        for n in 3..=8 {
            let nf = n as f64;
            let pb = 2.0 * nf / (nf - 2.0);
            let a = (nf - 2.0) / 2.0 * (0.5 - 1.0 / pb);
            let b = (nf - 1.0) * (0.5 - 1.0 / pb) - 0.5;
            assert!((a - b).abs() < 1e-14);
        }
        assert!(sigma_exponent(2, 1.5).is_err());
        let s = ScalingExponents::default();
        assert_eq!((s.boundary, s.lap_vanishing, s.interior_theta), (1.0, 0.0, -1.0));
    }
}
