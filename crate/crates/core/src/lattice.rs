//! Lattice points of ℤ^d (d ≤ 3) and cubic boxes with a linear indexer.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 3;

/// A point of ℤ^d, stored inline so that it is `Copy` and cheap to hash.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    dim: u8,
    coords: [i64; MAX_DIM],
}

impl Point {
    /// Builds a point from its coordinates.
    ///
    /// Panics if `coords` is empty or longer than [`MAX_DIM`].
    pub fn new(coords: &[i64]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "lattice dimension must be in 1..={MAX_DIM}, got {}",
            coords.len()
        );
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point {
            dim: coords.len() as u8,
            coords: c,
        }
    }

    pub fn origin(dim: usize) -> Self {
        Point::new(&vec![0; dim])
    }

    /// `scale · e_axis`.
    pub fn axis(dim: usize, axis: usize, scale: i64) -> Self {
        let mut c = vec![0; dim];
        c[axis] = scale;
        Point::new(&c)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim as usize]
    }

    pub fn is_origin(&self) -> bool {
        self.coords().iter().all(|&c| c == 0)
    }

    /// Sup norm `|x|_∞`.
    pub fn norm_inf(&self) -> i64 {
        self.coords().iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// Euclidean norm `|x|`.
    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn norm_sq(&self) -> i64 {
        self.coords().iter().map(|c| c * c).sum()
    }

    pub fn dot(&self, theta: &[f64]) -> f64 {
        self.coords()
            .iter()
            .zip(theta)
            .map(|(&c, &t)| c as f64 * t)
            .sum()
    }

    /// Sum of the coordinates whose axis is flagged in `axes` (bit α ↔ axis α).
    pub fn masked_sum(&self, axes: u32) -> i64 {
        self.coords()
            .iter()
            .enumerate()
            .filter(|(a, _)| axes & (1 << a) != 0)
            .map(|(_, &c)| c)
            .sum()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords().iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut out = self;
        for a in 0..self.dim as usize {
            out.coords[a] += rhs.coords[a];
        }
        out
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        self + (-rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        let mut out = self;
        for a in 0..self.dim as usize {
            out.coords[a] = -out.coords[a];
        }
        out
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<i64> = Vec::deserialize(d)?;
        if v.is_empty() || v.len() > MAX_DIM {
            return Err(serde::de::Error::custom(format!(
                "point must have 1..={MAX_DIM} coordinates"
            )));
        }
        Ok(Point::new(&v))
    }
}

/// The cube `Q(c, ℓ) = {x : |x − c|_∞ ≤ ℓ}` with a row-major linear index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    center: Point,
    radius: i64,
    side: usize,
    len: usize,
}

impl LatticeBox {
    pub fn new(center: Point, radius: i64) -> Self {
        assert!(radius >= 0, "box radius must be nonnegative");
        let side = (2 * radius + 1) as usize;
        let len = side.pow(center.dim() as u32);
        LatticeBox {
            center,
            radius,
            side,
            len,
        }
    }

    /// `Q(0, radius)` in ℤ^dim.
    pub fn centered(dim: usize, radius: i64) -> Self {
        LatticeBox::new(Point::origin(dim), radius)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, p: &Point) -> bool {
        (*p - self.center).norm_inf() <= self.radius
    }

    /// Distance (sup norm) from `p` to the complement of the box, minus one:
    /// zero on the outer layer.
    pub fn depth(&self, p: &Point) -> i64 {
        self.radius - (*p - self.center).norm_inf()
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        let rel = *p - self.center;
        let mut idx = 0usize;
        for &c in rel.coords() {
            if c.abs() > self.radius {
                return None;
            }
            idx = idx * self.side + (c + self.radius) as usize;
        }
        Some(idx)
    }

    pub fn point(&self, mut idx: usize) -> Point {
        let d = self.dim();
        let mut c = [0i64; MAX_DIM];
        for a in (0..d).rev() {
            c[a] = (idx % self.side) as i64 - self.radius + self.center.coords()[a];
            idx /= self.side;
        }
        Point::new(&c[..d])
    }

    pub fn iter(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len).map(move |i| self.point(i))
    }

    /// Whether `Q(self)` and `Q(other)` share no site.
    pub fn is_disjoint(&self, other: &LatticeBox) -> bool {
        (self.center - other.center).norm_inf() > self.radius + other.radius
    }
}
