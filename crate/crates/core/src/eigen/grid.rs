//! Uniform Cartesian grid over a truncated tube and the mask of nodes that
//! lie strictly inside it.
//!
//! Node coordinates are integer multiples of `h` in all three directions,
//! so windows whose ends are multiples of `h` share nodes when nested.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Interval, Real};
use crate::section::{CrossSection, Point};
use crate::twist::TwistProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec<T> {
    pub x1_range: Interval<T>,
    pub h: T,
    /// Margin between the swept annulus `|y| ≤ r_max` and the transverse box.
    pub padding: T,
}

fn grid_multiple<T: Real>(v: T, h: T) -> Option<i64> {
    let q = v / h;
    let r = q.round();
    ((q - r).abs() <= T::lit(1e-9) * r.abs().max(T::one())).then(|| r.to_i64()).flatten()
}

impl<T: Real> GridSpec<T> {
    pub fn new(x1_range: Interval<T>, h: T, padding: T) -> Result<Self> {
        let spec = GridSpec { x1_range, h, padding };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let Interval { lo, hi } = self.x1_range;
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return Err(Error::InvalidGrid(format!("h = {} must be positive", self.h)));
        }
        if !(hi > lo) {
            return Err(Error::InvalidGrid(format!("empty window [{lo}, {hi}]")));
        }
        if !(self.padding >= T::zero()) {
            return Err(Error::InvalidGrid(format!("padding {} must be >= 0", self.padding)));
        }
        let (Some(a), Some(b)) = (grid_multiple(lo, self.h), grid_multiple(hi, self.h)) else {
            return Err(Error::InvalidGrid(format!(
                "window ends [{lo}, {hi}] must be integer multiples of h = {}",
                self.h
            )));
        };
        if b - a < 4 {
            return Err(Error::InvalidGrid(format!(
                "window [{lo}, {hi}] spans {} cells; at least 4 are required",
                b - a
            )));
        }
        Ok(())
    }

    /// Same window and padding at mesh size `h / 2`.
    pub fn refined(&self) -> Self {
        GridSpec {
            h: self.h / T::lit(2.0),
            ..*self
        }
    }

    fn axial_nodes(&self) -> (i64, i64) {
        let a = grid_multiple(self.x1_range.lo, self.h).expect("validated");
        let b = grid_multiple(self.x1_range.hi, self.h).expect("validated");
        (a + 1, b - 1)
    }

    fn half_width(&self, r_max: T) -> i64 {
        let q = (r_max + self.padding) / self.h;
        (q - T::lit(1e-9)).ceil().to_i64().unwrap_or(0).max(2)
    }
}

const NONE: u32 = u32::MAX;

/// Interior nodes of the truncated tube, numbered with `x₁` slowest and
/// `x₃` fastest.
#[derive(Debug, Clone)]
pub struct GridMask<T> {
    spec: GridSpec<T>,
    first_plane: i64,
    half: i64,
    dims: [usize; 3],
    index: Vec<u32>,
    nodes: Vec<[i32; 3]>,
}

/// Self-describing header for the binary occupancy export.
#[derive(Debug, Clone, Serialize)]
pub struct MaskHeader {
    /// `(n₁, n₂, n₃)`; the occupancy bytes are laid out with `x₃` fastest.
    pub dims: [usize; 3],
    pub h: f64,
    pub window: [f64; 2],
    /// Coordinates of the node stored first.
    pub origin: [f64; 3],
    pub interior_nodes: usize,
    pub encoding: &'static str,
}

impl<T: Real> GridMask<T> {
    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integer coordinates `(i, j, k)` of an equation; the node sits at
    /// `h·(i, j, k)`.
    pub fn node(&self, eq: usize) -> [i32; 3] {
        self.nodes[eq]
    }

    pub fn nodes(&self) -> &[[i32; 3]] {
        &self.nodes
    }

    pub fn position(&self, eq: usize) -> [T; 3] {
        let [i, j, k] = self.nodes[eq];
        let h = self.spec.h;
        [h * T::lit(i as f64), h * T::lit(j as f64), h * T::lit(k as f64)]
    }

    /// Equation number of the node at integer coordinates `(i, j, k)`.
    pub fn equation_at(&self, i: i64, j: i64, k: i64) -> Option<usize> {
        let a = i - self.first_plane;
        let b = j + self.half;
        let c = k + self.half;
        let [n1, n2, n3] = self.dims;
        if a < 0 || b < 0 || c < 0 || a >= n1 as i64 || b >= n2 as i64 || c >= n3 as i64 {
            return None;
        }
        let flat = (a as usize * n2 + b as usize) * n3 + c as usize;
        match self.index[flat] {
            NONE => None,
            e => Some(e as usize),
        }
    }

    /// One byte per box node, 1 for interior.
    pub fn occupancy(&self) -> Vec<u8> {
        self.index.iter().map(|&e| u8::from(e != NONE)).collect()
    }

    pub fn header(&self) -> MaskHeader {
        let h = self.spec.h.as_f64();
        MaskHeader {
            dims: self.dims,
            h,
            window: [self.spec.x1_range.lo.as_f64(), self.spec.x1_range.hi.as_f64()],
            origin: [
                h * self.first_plane as f64,
                -h * self.half as f64,
                -h * self.half as f64,
            ],
            interior_nodes: self.len(),
            encoding: "u8, row-major (x1, x2, x3), x3 fastest",
        }
    }
}

/// Marks every node `(x₁, y)` with `x₁` strictly inside the window and
/// `y` rotated by `θ(x₁)` strictly inside the cross-section.
pub fn build_mask<T: Real>(profile: &TwistProfile<T>, cs: &CrossSection<T>, spec: GridSpec<T>) -> Result<GridMask<T>> {
    spec.validate()?;
    let h = spec.h;
    let (i_lo, i_hi) = spec.axial_nodes();
    let half = spec.half_width(cs.r_max());
    let n1 = (i_hi - i_lo + 1) as usize;
    let n2 = (2 * half + 1) as usize;
    let plane_len = n2 * n2;
    let total = n1 * plane_len;
    if total >= NONE as usize {
        return Err(Error::InvalidGrid(format!("grid with {total} box nodes is too large")));
    }
    let (r_lo2, r_hi2) = (cs.r_min() * cs.r_min(), cs.r_max() * cs.r_max());
    let planes: Vec<Vec<bool>> = (0..n1)
        .into_par_iter()
        .map(|a| -> Result<Vec<bool>> {
            let x1 = h * T::lit((i_lo + a as i64) as f64);
            let theta = profile.theta(x1)?;
            let mut inside = vec![false; plane_len];
            for b in 0..n2 {
                let x2 = h * T::lit((b as i64 - half) as f64);
                for c in 0..n2 {
                    let x3 = h * T::lit((c as i64 - half) as f64);
                    let r2 = x2 * x2 + x3 * x3;
                    if r2 < r_lo2 || r2 > r_hi2 {
                        continue;
                    }
                    inside[b * n2 + c] = cs.contains(Point::new(x2, x3).rotated(theta));
                }
            }
            Ok(inside)
        })
        .collect::<Result<_>>()?;

    let mut index = vec![NONE; total];
    let mut nodes = Vec::new();
    for (a, plane) in planes.iter().enumerate() {
        for (p, &inside) in plane.iter().enumerate() {
            if inside {
                index[a * plane_len + p] = nodes.len() as u32;
                let (b, c) = (p / n2, p % n2);
                nodes.push([
                    (i_lo + a as i64) as i32,
                    (b as i64 - half) as i32,
                    (c as i64 - half) as i32,
                ]);
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptyMask(format!(
            "no grid node of window [{}, {}] at h = {} lies inside the tube",
            spec.x1_range.lo, spec.x1_range.hi, h
        )));
    }
    Ok(GridMask {
        spec,
        first_plane: i_lo,
        half,
        dims: [n1, n2, n2],
        index,
        nodes,
    })
}
