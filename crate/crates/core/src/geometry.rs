//! The unit-area equilateral triangle, its three corner bins and the
//! regions used to allocate points between them.
//!
//! The plane is identified with ℂ. The triangle has vertices
//! `B2 = λi`, `B1 = j²B2`, `B3 = jB2` with `j = e^{2iπ/3}` and
//! `λ = 2(3√3)^{-1/2}`, so its centroid is the origin.
//!
//! Boundary arcs are parametrised by the perimeter arc length `s`, counted
//! counterclockwise from `B1` (`B2` sits at `s = side`, `B3` at `2·side`).

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Tolerance used when deciding whether a point lies in the closed triangle.
pub const CONTAINMENT_TOL: f64 = 1e-12;

/// Relative width of the band around a Voronoi boundary ray inside which a
/// point is treated as lying on the ray.
const RAY_TIE_BAND: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({x}, {y}) lies outside the triangle")]
    OutsideTriangle { x: f64, y: f64 },
    #[error("parameter {value} outside [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },
    #[error("bins {0} and {1} do not span an edge")]
    NotAnEdge(Cell, Cell),
}

/// A point of the plane, read as the complex number `x + iy`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// `r·e^{iθ}`.
    pub fn polar(r: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point::new(r * c, r * s)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product; positive when `o` is
    /// counterclockwise from `self`.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(self.x * c - self.y * s, self.x * s + self.y * c)
    }

    /// Multiplication by `j = e^{2iπ/3}`.
    pub fn mul_j(self) -> Point {
        Point::new(
            -0.5 * self.x - 0.5 * SQRT3 * self.y,
            0.5 * SQRT3 * self.x - 0.5 * self.y,
        )
    }

    /// Multiplication by `j² = e^{-2iπ/3}`.
    pub fn mul_j2(self) -> Point {
        Point::new(
            -0.5 * self.x + 0.5 * SQRT3 * self.y,
            -0.5 * SQRT3 * self.x - 0.5 * self.y,
        )
    }

    /// Multiplication by `j^k`.
    pub fn mul_j_pow(self, k: usize) -> Point {
        match k % 3 {
            0 => self,
            1 => self.mul_j(),
            _ => self.mul_j2(),
        }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, p: Point) -> Point {
        p * self
    }
}

/// One of the three bins, equivalently one of the three Voronoi cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Cell {
    One,
    Two,
    Three,
}

impl Cell {
    pub const ALL: [Cell; 3] = [Cell::One, Cell::Two, Cell::Three];

    /// Zero-based index.
    pub fn index(self) -> usize {
        match self {
            Cell::One => 0,
            Cell::Two => 1,
            Cell::Three => 2,
        }
    }

    /// One-based label, as used in file formats.
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_index(i: usize) -> Cell {
        Cell::ALL[i % 3]
    }

    /// The cyclic successor `σ = (1 2 3)`.
    pub fn next(self) -> Cell {
        Cell::from_index(self.index() + 1)
    }

    pub fn prev(self) -> Cell {
        Cell::from_index(self.index() + 2)
    }
}

impl TryFrom<u8> for Cell {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Cell::One),
            2 => Ok(Cell::Two),
            3 => Ok(Cell::Three),
            other => Err(format!("bin label must be 1, 2 or 3, got {other}")),
        }
    }
}

impl From<Cell> for u8 {
    fn from(c: Cell) -> u8 {
        c.number()
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Shift of the three inter-region boundary rays.
///
/// Component `l` moves the ray between regions `l` and `σ(l)` (1–2, 2–3,
/// 3–1). Increasing a component rotates that ray counterclockwise, which
/// grows region `l` at the expense of region `σ(l)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConeShift(pub [f64; 3]);

impl ConeShift {
    pub const ZERO: ConeShift = ConeShift([0.0; 3]);

    pub fn new(t1: f64, t2: f64, t3: f64) -> Result<Self, GeometryError> {
        let s = ConeShift([t1, t2, t3]);
        s.validate(&TriangleFrame::new())?;
        Ok(s)
    }

    pub fn component(&self, l: Cell) -> f64 {
        self.0[l.index()]
    }

    pub fn with_component(mut self, l: Cell, t: f64) -> Self {
        self.0[l.index()] = t;
        self
    }

    pub fn validate(&self, frame: &TriangleFrame) -> Result<(), GeometryError> {
        for &t in &self.0 {
            frame.check_shift(t)?;
        }
        Ok(())
    }
}

/// The fixed triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleFrame {
    pub lambda: f64,
    pub side: f64,
    vertices: [Point; 3],
    /// Unit vectors along the Voronoi boundary rays `D1`, `D2`, `D3`
    /// (angles π/6, 5π/6, 3π/2).
    rays: [Point; 3],
}

impl Default for TriangleFrame {
    fn default() -> Self {
        Self::new()
    }
}

/// The frame of the unit-area triangle.
pub fn frame() -> TriangleFrame {
    TriangleFrame::new()
}

impl TriangleFrame {
    pub fn new() -> Self {
        let lambda = 2.0 / (3.0 * SQRT3).sqrt();
        let b2 = Point::new(0.0, lambda);
        TriangleFrame {
            lambda,
            side: lambda * SQRT3,
            vertices: [b2.mul_j2(), b2, b2.mul_j()],
            rays: [
                Point::new(0.5 * SQRT3, 0.5),
                Point::new(-0.5 * SQRT3, 0.5),
                Point::new(0.0, -1.0),
            ],
        }
    }

    pub fn vertex(&self, l: Cell) -> Point {
        self.vertices[l.index()]
    }

    pub fn vertices(&self) -> [Point; 3] {
        self.vertices
    }

    pub fn perimeter(&self) -> f64 {
        3.0 * self.side
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    pub fn midpoint(&self, l: Cell, m: Cell) -> Point {
        (self.vertex(l) + self.vertex(m)) * 0.5
    }

    /// Barycentric coordinates with respect to `(B1, B2, B3)`.
    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        let [a, b, c] = self.vertices;
        let total = (b - a).cross(c - a);
        [
            (b - p).cross(c - p) / total,
            (c - p).cross(a - p) / total,
            (a - p).cross(b - p) / total,
        ]
    }

    pub fn contains(&self, p: Point) -> bool {
        p.is_finite() && self.barycentric(p).iter().all(|&w| w >= -CONTAINMENT_TOL)
    }

    pub fn contains_strictly(&self, p: Point) -> bool {
        p.is_finite() && self.barycentric(p).iter().all(|&w| w > 0.0)
    }

    pub fn check_inside(&self, p: Point) -> Result<(), GeometryError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(GeometryError::OutsideTriangle { x: p.x, y: p.y })
        }
    }

    fn check_shift(&self, t: f64) -> Result<(), GeometryError> {
        if t.is_finite() && t.abs() <= self.side {
            Ok(())
        } else {
            Err(GeometryError::OutOfRange {
                value: t,
                min: -self.side,
                max: self.side,
            })
        }
    }

    /// Point of the perimeter at arc length `s` (taken modulo the perimeter).
    pub fn perimeter_point(&self, s: f64) -> Point {
        let s = s.rem_euclid(self.perimeter());
        let edge = ((s / self.side) as usize).min(2);
        let u = (s - edge as f64 * self.side) / self.side;
        let a = self.vertices[edge];
        let b = self.vertices[(edge + 1) % 3];
        a + (b - a) * u
    }

    /// Arc length of the perimeter point hit by the ray from the origin
    /// through `p` (`p ≠ 0`), in `[0, perimeter)`.
    pub fn arc_of_direction(&self, p: Point) -> f64 {
        let edge = (0..3)
            .find(|&e| {
                let a = self.vertices[e];
                let b = self.vertices[(e + 1) % 3];
                a.cross(p) >= 0.0 && p.cross(b) > 0.0
            })
            .unwrap_or(2);
        let a = self.vertices[edge];
        let b = self.vertices[(edge + 1) % 3];
        let u = (a.cross(p) / p.cross(b - a)).clamp(0.0, 1.0);
        (edge as f64 + u) * self.side
    }

    fn arc_of_vertex(&self, l: Cell) -> f64 {
        l.index() as f64 * self.side
    }

    /// `B_{l σ(l)}(t)`: the point at distance `t + side/2` from `B_l` on the
    /// edge towards `B_{σ(l)}`, continued along the neighbouring edges for
    /// `|t| > side/2`.
    pub fn boundary_point(&self, l: Cell, t: f64) -> Result<Point, GeometryError> {
        self.check_shift(t)?;
        Ok(self.perimeter_point(self.arc_of_vertex(l) + 0.5 * self.side + t))
    }

    /// `B_{lm}(t)` for either orientation of the edge.
    pub fn edge_point(&self, l: Cell, m: Cell, t: f64) -> Result<Point, GeometryError> {
        self.check_shift(t)?;
        let half = 0.5 * self.side;
        if m == l.next() {
            Ok(self.perimeter_point(self.arc_of_vertex(l) + half + t))
        } else if m == l.prev() {
            Ok(self.perimeter_point(self.arc_of_vertex(l) - half - t))
        } else {
            Err(GeometryError::NotAnEdge(l, m))
        }
    }

    /// Value of the shift component `l` at which the boundary ray between
    /// regions `l` and `σ(l)` passes through `p`, if it lies in the
    /// admissible range.
    pub fn crossing_shift(&self, l: Cell, p: Point) -> Option<f64> {
        if p == Point::ORIGIN {
            return None;
        }
        let perim = self.perimeter();
        let raw = self.arc_of_direction(p) - self.arc_of_vertex(l) - 0.5 * self.side;
        let t = (raw + 0.5 * perim).rem_euclid(perim) - 0.5 * perim;
        (t.abs() <= self.side).then_some(t)
    }

    /// The kite `(0, M_{l σ(l)}, B_l, M_{σ²(l) l})` covering `T_l`.
    pub fn cell_polygon(&self, l: Cell) -> [Point; 4] {
        [
            Point::ORIGIN,
            self.midpoint(l, l.next()),
            self.vertex(l),
            self.midpoint(l.prev(), l),
        ]
    }

    /// The Voronoi cell containing `p`.
    ///
    /// Ties follow the half-open convention: the ray at angle π/6 belongs to
    /// cell 2, the ray at 5π/6 to cell 3, the ray at 3π/2 and the origin to
    /// cell 1.
    pub fn voronoi_cell(&self, p: Point) -> Result<Cell, GeometryError> {
        self.check_inside(p)?;
        Ok(self.voronoi_cell_unchecked(p))
    }

    pub(crate) fn voronoi_cell_unchecked(&self, p: Point) -> Cell {
        if p == Point::ORIGIN {
            return Cell::One;
        }
        let band = RAY_TIE_BAND * p.norm();
        let on_ray = |d: Point| d.cross(p).abs() <= band && d.dot(p) > 0.0;
        let [d1, d2, d3] = self.rays;
        if on_ray(d1) {
            return Cell::Two;
        }
        if on_ray(d2) {
            return Cell::Three;
        }
        if on_ray(d3) {
            return Cell::One;
        }
        if d3.cross(p) > 0.0 && p.cross(d1) > 0.0 {
            Cell::One
        } else if d1.cross(p) > 0.0 && p.cross(d2) > 0.0 {
            Cell::Two
        } else {
            Cell::Three
        }
    }

    /// The swept region `Γ^l(t)` containing `p`.
    pub fn cone_region(&self, shift: &ConeShift, p: Point) -> Result<Cell, GeometryError> {
        self.check_inside(p)?;
        shift.validate(self)?;
        Ok(self.cone_region_unchecked(&self.boundary_rays(shift), p))
    }

    /// The three boundary points `B12(t¹)`, `B23(t²)`, `B31(t³)`.
    pub(crate) fn boundary_rays(&self, shift: &ConeShift) -> [Point; 3] {
        let half = 0.5 * self.side;
        [Cell::One, Cell::Two, Cell::Three]
            .map(|l| self.perimeter_point(self.arc_of_vertex(l) + half + shift.component(l)))
    }

    pub(crate) fn cone_region_unchecked(&self, rays: &[Point; 3], p: Point) -> Cell {
        if p == Point::ORIGIN {
            return Cell::One;
        }
        let [b12, b23, b31] = *rays;
        if in_sector(b31, b12, p) {
            Cell::One
        } else if in_sector(b12, b23, p) {
            Cell::Two
        } else {
            Cell::Three
        }
    }

    /// Area of `V¹(s)`, the triangle `(0, B12(0), B12(s))` added to region 1
    /// by the shift `(s, 0, 0)`.
    pub fn sliver_area(&self, s: f64) -> Result<f64, GeometryError> {
        if !(0.0..=0.5 * self.side).contains(&s) {
            return Err(GeometryError::OutOfRange {
                value: s,
                min: 0.0,
                max: 0.5 * self.side,
            });
        }
        let m = self.boundary_point(Cell::One, 0.0)?;
        let q = self.boundary_point(Cell::One, s)?;
        Ok(0.5 * m.cross(q).abs())
    }

    /// A uniform point of the triangle.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let [a, b, c] = self.vertices;
        sample_triangle(a, b, c, rng)
    }

    /// A uniform point of the Voronoi cell `T_l`.
    pub fn sample_in_cell<R: Rng + ?Sized>(&self, l: Cell, rng: &mut R) -> Point {
        let [o, m1, v, m2] = self.cell_polygon(l);
        if rng.gen::<bool>() {
            sample_triangle(o, m1, v, rng)
        } else {
            sample_triangle(o, v, m2, rng)
        }
    }
}

/// `0 < angle(p) - angle(a) <= angle(b) - angle(a)`, measured
/// counterclockwise: the cone from the ray through `a` (excluded) to the ray
/// through `b` (included).
fn in_sector(a: Point, b: Point, p: Point) -> bool {
    let ab = a.cross(b);
    if ab > 0.0 {
        a.cross(p) > 0.0 && p.cross(b) >= 0.0
    } else if ab < 0.0 {
        !(b.cross(p) > 0.0 && p.cross(a) >= 0.0)
    } else if a.dot(b) < 0.0 {
        a.cross(p) > 0.0 || (a.cross(p) == 0.0 && p.dot(b) > 0.0)
    } else {
        false
    }
}

fn sample_triangle<R: Rng + ?Sized>(a: Point, b: Point, c: Point, rng: &mut R) -> Point {
    let mut u: f64 = rng.gen();
    let mut v: f64 = rng.gen();
    if u + v > 1.0 {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    a + (b - a) * u + (c - a) * v
}

/// Unsigned shoelace area.
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let twice: f64 = (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum();
    0.5 * twice.abs()
}

/// Reflection across the line through `0` and `B1`:
/// `t·e^{iθ} ↦ t·e^{-iθ-iπ/3}`.
pub fn reflect_axis1(p: Point) -> Point {
    Point::new(
        0.5 * p.x - 0.5 * SQRT3 * p.y,
        -0.5 * SQRT3 * p.x - 0.5 * p.y,
    )
}

/// Angle of the Voronoi boundary ray `D_l`.
pub fn boundary_ray_angle(l: Cell) -> f64 {
    match l {
        Cell::One => PI / 6.0,
        Cell::Two => 5.0 * PI / 6.0,
        Cell::Three => 1.5 * PI,
    }
}
