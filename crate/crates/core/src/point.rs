//! Points in R^n for n ≤ 3.
//!
//! A [`Point`] always stores three coordinates; coordinates beyond the
//! dimension in use are kept at zero so that norms and distances computed over
//! all three components agree with the n-dimensional ones.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub const ORIGIN: Point = Point([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point([x, y, z])
    }

    pub fn new2(x: f64, y: f64) -> Self {
        Point([x, y, 0.0])
    }

    pub fn new1(x: f64) -> Self {
        Point([x, 0.0, 0.0])
    }

    /// Builds a point from 1 to 3 coordinates, padding with zeros.
    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > 3 {
            return Err(Error::InvalidParameter(format!(
                "point must have 1 to 3 coordinates, got {}",
                coords.len()
            )));
        }
        let mut p = [0.0; 3];
        p[..coords.len()].copy_from_slice(coords);
        Ok(Point(p))
    }

    /// The first `dim` coordinates.
    pub fn coords(&self, dim: usize) -> &[f64] {
        &self.0[..dim]
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    pub fn distance_squared(&self, other: &Point) -> f64 {
        (*self - *other).norm_squared()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Nonzero coordinates beyond `dim`.
    pub fn uses_axes_beyond(&self, dim: usize) -> bool {
        self.0[dim..].iter().any(|&c| c != 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Point {
        Point([f(self.0[0]), f(self.0[1]), f(self.0[2])])
    }

    pub fn zip_map(&self, other: &Point, f: impl Fn(f64, f64) -> f64) -> Point {
        Point([
            f(self.0[0], other.0[0]),
            f(self.0[1], other.0[1]),
            f(self.0[2], other.0[2]),
        ])
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        self.zip_map(&rhs, |a, b| a + b)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        self.zip_map(&rhs, |a, b| a - b)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        self.map(|a| a * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self.map(|a| -a)
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<f64> = Vec::deserialize(d)?;
        Point::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// Serializes a point with exactly `dim` coordinates.
pub fn to_vec(p: &Point, dim: usize) -> Vec<f64> {
    p.0[..dim].to_vec()
}
