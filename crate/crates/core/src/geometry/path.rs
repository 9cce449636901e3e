use serde::{Deserialize, Serialize};

use super::{wrap_to_pi, Vec2};
use crate::error::{Error, Result};

/// Spacing of the precomputed position table on spiral segments.
const SPIRAL_TABLE_STEP: f64 = 1.0;
/// Coarse sampling step used to seed the spiral closest-point search.
const SPIRAL_SEARCH_STEP: f64 = 0.25;
const PROJECTION_TOL: f64 = 1e-9;

const DEFAULT_WINDOW_BEHIND: f64 = 5.0;
const DEFAULT_WINDOW_AHEAD: f64 = 20.0;

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Line,
    /// Constant curvature.
    Arc,
    /// Turning radius varying linearly with arc length between the start
    /// and end radius (`1 / curvature`).
    Spiral,
}

/// One path primitive as written in a scenario file. Curvatures are signed,
/// positive for left (counter-clockwise) turns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    #[serde(rename = "type")]
    pub kind: SegmentKind,
    pub length_m: f64,
    #[serde(default)]
    pub start_curvature_per_m: f64,
    #[serde(default)]
    pub end_curvature_per_m: f64,
}

impl SegmentSpec {
    pub fn line(length_m: f64) -> Self {
        Self {
            kind: SegmentKind::Line,
            length_m,
            start_curvature_per_m: 0.0,
            end_curvature_per_m: 0.0,
        }
    }

    pub fn arc(length_m: f64, curvature: f64) -> Self {
        Self {
            kind: SegmentKind::Arc,
            length_m,
            start_curvature_per_m: curvature,
            end_curvature_per_m: curvature,
        }
    }

    pub fn spiral(length_m: f64, start_curvature: f64, end_curvature: f64) -> Self {
        Self {
            kind: SegmentKind::Spiral,
            length_m,
            start_curvature_per_m: start_curvature,
            end_curvature_per_m: end_curvature,
        }
    }
}

/// Position, tangent heading and signed curvature at one arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub position: Vec2,
    pub heading: f64,
    pub curvature: f64,
}

/// Closest point on a path. `e_signed` is positive when the query point lies
/// to the left of the path tangent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathProjection {
    pub s_star: f64,
    pub e_signed: f64,
    pub phi_ref: f64,
    pub curvature: f64,
    pub point: Vec2,
}

#[derive(Debug, Clone)]
enum Shape {
    Line,
    Arc {
        curvature: f64,
    },
    Spiral {
        r0: f64,
        r1: f64,
        /// Positions relative to the segment start at multiples of
        /// `SPIRAL_TABLE_STEP`.
        table: Vec<Vec2>,
    },
}

#[derive(Debug, Clone)]
struct Segment {
    s0: f64,
    length: f64,
    start: Vec2,
    heading0: f64,
    shape: Shape,
}

impl Segment {
    fn new(s0: f64, start: Vec2, heading0: f64, spec: &SegmentSpec, idx: usize) -> Result<Self> {
        let field = |name: &str| format!("path.segments[{idx}].{name}");
        let length = spec.length_m;
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::config(field("length_m"), "must be positive and finite"));
        }
        let (k0, k1) = (spec.start_curvature_per_m, spec.end_curvature_per_m);
        if !(k0.is_finite() && k1.is_finite()) {
            return Err(Error::config(
                field("start_curvature_per_m"),
                "curvatures must be finite",
            ));
        }
        let shape = match spec.kind {
            SegmentKind::Line => {
                if k0 != 0.0 || k1 != 0.0 {
                    return Err(Error::config(field("type"), "line segments have zero curvature"));
                }
                Shape::Line
            }
            SegmentKind::Arc => {
                if k0 == 0.0 || k0 != k1 {
                    return Err(Error::config(
                        field("end_curvature_per_m"),
                        "arc segments need equal, non-zero start and end curvature",
                    ));
                }
                Shape::Arc { curvature: k0 }
            }
            SegmentKind::Spiral => {
                if k0 == 0.0 || k1 == 0.0 || k0.signum() != k1.signum() || k0 == k1 {
                    return Err(Error::config(
                        field("end_curvature_per_m"),
                        "spiral segments need distinct non-zero curvatures of equal sign",
                    ));
                }
                Shape::Spiral {
                    r0: 1.0 / k0,
                    r1: 1.0 / k1,
                    table: Vec::new(),
                }
            }
        };
        let mut seg = Segment {
            s0,
            length,
            start,
            heading0,
            shape,
        };
        seg.build_table();
        Ok(seg)
    }

    fn build_table(&mut self) {
        if !matches!(self.shape, Shape::Spiral { .. }) {
            return;
        }
        let n = (self.length / SPIRAL_TABLE_STEP).floor() as usize;
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = Vec2::ZERO;
        table.push(acc);
        for i in 0..n {
            let a = i as f64 * SPIRAL_TABLE_STEP;
            acc += self.integrate_tangent(a, a + SPIRAL_TABLE_STEP);
            table.push(acc);
        }
        if let Shape::Spiral { table: t, .. } = &mut self.shape {
            *t = table;
        }
    }

    /// ∫ (cos θ(u), sin θ(u)) du over [a, b] by Gauss-Legendre.
    fn integrate_tangent(&self, a: f64, b: f64) -> Vec2 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Vec2::ZERO;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            acc += Vec2::from_heading(self.heading_at(mid + half * x)) * *w;
        }
        acc * half
    }

    fn end(&self) -> f64 {
        self.s0 + self.length
    }

    fn heading_at(&self, u: f64) -> f64 {
        match self.shape {
            Shape::Line => self.heading0,
            Shape::Arc { curvature } => self.heading0 + curvature * u,
            Shape::Spiral { r0, r1, .. } => {
                let slope = (r1 - r0) / self.length;
                self.heading0 + (slope * u / r0).ln_1p() / slope
            }
        }
    }

    fn curvature_at(&self, u: f64) -> f64 {
        match self.shape {
            Shape::Line => 0.0,
            Shape::Arc { curvature } => curvature,
            Shape::Spiral { r0, r1, .. } => 1.0 / (r0 + (r1 - r0) * u / self.length),
        }
    }

    fn position_at(&self, u: f64) -> Vec2 {
        match &self.shape {
            Shape::Line => self.start + Vec2::from_heading(self.heading0) * u,
            Shape::Arc { curvature } => {
                let k = *curvature;
                let th = self.heading0 + k * u;
                // p0 + (1/k)·(sin θ − sin θ0, cos θ0 − cos θ)
                let (s1, c1) = th.sin_cos();
                let (s0, c0) = self.heading0.sin_cos();
                self.start + Vec2::new(s1 - s0, c0 - c1) * (1.0 / k)
            }
            Shape::Spiral { table, .. } => {
                let idx = ((u / SPIRAL_TABLE_STEP).floor() as usize).min(table.len() - 1);
                let a = idx as f64 * SPIRAL_TABLE_STEP;
                let mut p = self.start + table[idx];
                if u > a {
                    p += self.integrate_tangent(a, u);
                }
                p
            }
        }
    }

    fn point_at(&self, u: f64) -> PathPoint {
        PathPoint {
            position: self.position_at(u),
            heading: self.heading_at(u),
            curvature: self.curvature_at(u),
        }
    }

    /// Closest point on the local parameter interval `[lo, hi]`; returns the
    /// local parameter and the distance.
    fn closest(&self, p: Vec2, lo: f64, hi: f64) -> (f64, f64) {
        match self.shape {
            Shape::Line => {
                let u = (p - self.start).dot(Vec2::from_heading(self.heading0)).clamp(lo, hi);
                (u, p.distance(self.position_at(u)))
            }
            Shape::Arc { curvature } => self.closest_arc(p, lo, hi, curvature),
            Shape::Spiral { .. } => self.closest_spiral(p, lo, hi),
        }
    }

    fn closest_arc(&self, p: Vec2, lo: f64, hi: f64, k: f64) -> (f64, f64) {
        let center = self.start + Vec2::from_heading(self.heading0).perp() * (1.0 / k);
        let d = p - center;
        let mut best = (lo, p.distance(self.position_at(lo)));
        let mut consider = |u: f64| {
            let dist = p.distance(self.position_at(u));
            if dist < best.1 {
                best = (u, dist);
            }
        };
        consider(hi);
        if d.norm() > 0.0 {
            // Heading of the arc point radially aligned with d.
            let sg = k.signum();
            let th = (sg * d.x).atan2(-sg * d.y);
            let period = std::f64::consts::TAU / k.abs();
            let u0 = ((th - self.heading0) / k).rem_euclid(period);
            let mut u = u0 + ((lo - u0) / period).ceil() * period;
            while u <= hi {
                consider(u);
                u += period;
            }
        }
        best
    }

    fn closest_spiral(&self, p: Vec2, lo: f64, hi: f64) -> (f64, f64) {
        let n = ((hi - lo) / SPIRAL_SEARCH_STEP).ceil().max(1.0) as usize;
        let h = (hi - lo) / n as f64;
        let dist = |u: f64| p.distance(self.position_at(u));
        let mut best = (lo, dist(lo));
        for i in 1..=n {
            let u = if i == n { hi } else { lo + i as f64 * h };
            let d = dist(u);
            if d < best.1 {
                best = (u, d);
            }
        }
        let a = (best.0 - h).max(lo);
        let b = (best.0 + h).min(hi);

        // Newton on g(u) = (r(u) - p)·t(u); g'(u) = 1 + κ (r(u) - p)·n(u).
        let mut u = best.0;
        let mut converged = false;
        for _ in 0..30 {
            let pt = self.point_at(u);
            let t = Vec2::from_heading(pt.heading);
            let r = pt.position - p;
            let g = r.dot(t);
            let dg = 1.0 + pt.curvature * r.dot(t.perp());
            if dg <= 0.0 {
                break;
            }
            let step = g / dg;
            u -= step;
            if !(a..=b).contains(&u) {
                break;
            }
            if step.abs() < 1e-12 {
                converged = true;
                break;
            }
        }
        if !converged {
            u = golden_section(a, b, PROJECTION_TOL, &dist);
        }
        let d = dist(u);
        if d < best.1 {
            (u, d)
        } else {
            best
        }
    }
}

fn golden_section(mut a: f64, mut b: f64, tol: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Arc-length parameterized reference path built from G1-continuous
/// primitives.
#[derive(Debug, Clone)]
pub struct ReferencePath {
    segments: Vec<Segment>,
    total_length: f64,
}

impl ReferencePath {
    pub fn new(start: Vec2, heading: f64, specs: &[SegmentSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::config("path.segments", "path needs at least one segment"));
        }
        if !(start.is_finite() && heading.is_finite()) {
            return Err(Error::config("path.start", "start pose must be finite"));
        }
        let mut segments = Vec::with_capacity(specs.len());
        let (mut s0, mut pos, mut hdg) = (0.0, start, heading);
        for (i, spec) in specs.iter().enumerate() {
            let seg = Segment::new(s0, pos, hdg, spec, i)?;
            pos = seg.position_at(seg.length);
            hdg = seg.heading_at(seg.length);
            s0 = seg.end();
            segments.push(seg);
        }
        Ok(Self {
            segments,
            total_length: s0,
        })
    }

    /// Straight path from the origin along +x.
    pub fn straight(length: f64) -> Result<Self> {
        Self::new(Vec2::ZERO, 0.0, &[SegmentSpec::line(length)])
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    fn segment_index(&self, s: f64) -> usize {
        self.segments
            .partition_point(|seg| seg.end() <= s)
            .min(self.segments.len() - 1)
    }

    pub fn point_at(&self, s: f64) -> Result<PathPoint> {
        if !(0.0..=self.total_length).contains(&s) {
            return Err(Error::Range {
                s,
                total: self.total_length,
            });
        }
        Ok(self.point_at_clamped(s))
    }

    pub(crate) fn point_at_clamped(&self, s: f64) -> PathPoint {
        let s = s.clamp(0.0, self.total_length);
        let seg = &self.segments[self.segment_index(s)];
        seg.point_at((s - seg.s0).min(seg.length))
    }

    /// Closest point within the default search window around `s_hint`.
    pub fn project(&self, p: Vec2, s_hint: f64) -> Result<PathProjection> {
        self.project_within(p, s_hint - DEFAULT_WINDOW_BEHIND, s_hint + DEFAULT_WINDOW_AHEAD, s_hint)
    }

    /// Closest point over the whole path.
    pub fn project_global(&self, p: Vec2) -> Result<PathProjection> {
        self.project_within(p, 0.0, self.total_length, 0.0)
    }

    /// Closest point with `s` restricted to `[lo, hi]` (clipped to the path).
    /// Among equally distant candidates the one nearest `s_hint` wins.
    pub fn project_within(&self, p: Vec2, lo: f64, hi: f64, s_hint: f64) -> Result<PathProjection> {
        if !p.is_finite() {
            return Err(Error::domain("projection query point must be finite"));
        }
        let lo = lo.clamp(0.0, self.total_length);
        let hi = hi.clamp(lo, self.total_length);
        let mut best: Option<(f64, f64)> = None;
        for seg in &self.segments {
            if seg.end() < lo || seg.s0 > hi {
                continue;
            }
            let a = (lo - seg.s0).max(0.0);
            let b = (hi - seg.s0).min(seg.length);
            let (u, d) = seg.closest(p, a, b);
            let s = seg.s0 + u;
            let better = match best {
                None => true,
                Some((bs, bd)) => d < bd - 1e-12 || (d <= bd + 1e-12 && (s - s_hint).abs() < (bs - s_hint).abs()),
            };
            if better {
                best = Some((s, d));
            }
        }
        let (s_star, dist) = best.ok_or_else(|| Error::config("path.segments", "empty path"))?;
        let pt = self.point_at_clamped(s_star);
        let side = Vec2::from_heading(pt.heading).cross(p - pt.position);
        let e_signed = if side < 0.0 { -dist } else { dist };
        Ok(PathProjection {
            s_star,
            e_signed,
            phi_ref: pt.heading,
            curvature: pt.curvature,
            point: pt.position,
        })
    }

    /// Heading error `phi - phi_ref` wrapped to `(-π, π]`.
    pub fn heading_error(phi: f64, phi_ref: f64) -> f64 {
        wrap_to_pi(phi - phi_ref)
    }
}
