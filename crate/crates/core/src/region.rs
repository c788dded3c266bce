//! Compact convex sets of low affine dimension: points, segments and
//! polygons sitting inside `R^d`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Convex hull of finitely many points whose affine hull has dimension at
/// most two.
#[derive(Clone, Debug, Serialize)]
pub struct Region {
    dim: usize,
    origin: Vec<f64>,
    /// Orthonormal basis of the direction space of the affine hull.
    basis: Vec<Vec<f64>>,
    /// Vertices in affine-hull coordinates; counter-clockwise for polygons,
    /// ascending for segments.
    local: Vec<[f64; 2]>,
    /// The same vertices in ambient coordinates, copied from the input points.
    vertices: Vec<Vec<f64>>,
    scale: f64,
}

impl Region {
    /// `[lo, hi]` in `R^1`.
    pub fn interval(lo: f64, hi: f64) -> Region {
        Region::hull(&[vec![lo], vec![hi]], 1).expect("one-dimensional hull")
    }

    pub fn hull(points: &[Vec<f64>], dim: usize) -> Result<Region> {
        if points.is_empty() {
            return Err(Error::InvalidModel("hull of an empty point set".into()));
        }
        let origin = points[0].clone();
        let scale = points
            .iter()
            .flat_map(|p| p.iter().zip(&origin).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        let tol = 1e-10 * scale.max(1e-300);

        // Pivoted Gram-Schmidt: repeatedly take the point farthest from the
        // current affine span.
        let mut basis: Vec<Vec<f64>> = Vec::new();
        loop {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for p in points {
                let r = residual_vec(p, &origin, &basis);
                let n = norm(&r);
                if n > tol && best.as_ref().is_none_or(|(b, _)| n > *b) {
                    best = Some((n, r));
                }
            }
            match best {
                Some((n, r)) => {
                    if basis.len() == 2 {
                        return Err(Error::Unsupported(
                            "cycle-mean hull has affine dimension 3 or more".into(),
                        ));
                    }
                    basis.push(r.iter().map(|x| x / n).collect());
                }
                None => break,
            }
        }

        if dim == 2 && basis.len() == 2 && basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0] < 0.0 {
            // Keep local orientation equal to the ambient one so that
            // counter-clockwise means the same thing in both.
            for x in basis[1].iter_mut() {
                *x = -*x;
            }
        }
        let coords: Vec<[f64; 2]> = points.iter().map(|p| local_coords(p, &origin, &basis)).collect();
        let chosen: Vec<usize> = match basis.len() {
            0 => vec![0],
            1 => {
                let lo = (0..points.len()).min_by(|&a, &b| coords[a][0].total_cmp(&coords[b][0])).unwrap();
                let hi = (0..points.len()).max_by(|&a, &b| coords[a][0].total_cmp(&coords[b][0])).unwrap();
                vec![lo, hi]
            }
            _ => monotone_chain(&coords),
        };
        let mut local: Vec<[f64; 2]> = chosen.iter().map(|&i| coords[i]).collect();
        let mut vertices: Vec<Vec<f64>> = chosen.iter().map(|&i| points[i].clone()).collect();
        if dim == 1 && vertices.len() == 2 && vertices[0][0] > vertices[1][0] {
            vertices.swap(0, 1);
            local.swap(0, 1);
        }
        Ok(Region { dim, origin, basis, local, vertices, scale })
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the affine hull.
    pub fn affine_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        self.vertices.clone()
    }

    /// Endpoints when the region lives in `R^1`.
    pub fn interval_bounds(&self) -> Option<(f64, f64)> {
        if self.dim != 1 {
            return None;
        }
        let lo = self.vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let hi = self.vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.vertices.len() as f64;
        (0..self.dim).map(|c| self.vertices.iter().map(|v| v[c]).sum::<f64>() / n).collect()
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = (0..self.dim)
            .map(|c| self.vertices.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min))
            .collect();
        let hi = (0..self.dim)
            .map(|c| self.vertices.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        (lo, hi)
    }

    /// Distance from `alpha` to the affine hull, and the signed distance to
    /// the relative boundary inside it (positive in the relative interior).
    pub fn position(&self, alpha: &[f64]) -> (f64, f64) {
        let off = norm(&residual_vec(alpha, &self.origin, &self.basis));
        let t = local_coords(alpha, &self.origin, &self.basis);
        let margin = match self.basis.len() {
            0 => f64::INFINITY,
            1 => (t[0] - self.local[0][0]).min(self.local[1][0] - t[0]),
            _ => {
                let n = self.local.len();
                (0..n)
                    .map(|i| {
                        let a = self.local[i];
                        let b = self.local[(i + 1) % n];
                        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                        ((b[0] - a[0]) * (t[1] - a[1]) - (b[1] - a[1]) * (t[0] - a[0])) / len
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        };
        (off, margin)
    }

    fn tol(&self, tol: f64) -> f64 {
        tol * (1.0 + self.scale)
    }

    pub fn contains(&self, alpha: &[f64], tol: f64) -> bool {
        let (off, margin) = self.position(alpha);
        let t = self.tol(tol);
        off <= t && margin >= -t
    }

    pub fn in_relative_interior(&self, alpha: &[f64], tol: f64) -> bool {
        let (off, margin) = self.position(alpha);
        let t = self.tol(tol);
        off <= t && margin > t
    }

    /// Orthogonal projection onto the affine hull.
    pub fn project(&self, alpha: &[f64]) -> Vec<f64> {
        let t = local_coords(alpha, &self.origin, &self.basis);
        let mut out = self.origin.clone();
        for (k, b) in self.basis.iter().enumerate() {
            for c in 0..self.dim {
                out[c] += t[k] * b[c];
            }
        }
        out
    }

    /// Returns `alpha` itself when it is comfortably inside, a point pulled
    /// toward the centroid when it lies within `near` of the relative
    /// boundary, and `None` when it is outside.
    pub fn clamp_to_relative_interior(&self, alpha: &[f64], near: f64) -> Option<Vec<f64>> {
        let t = self.tol(near);
        let (off, margin) = self.position(alpha);
        if off > t || margin < -t {
            return None;
        }
        if self.basis.is_empty() || margin > t {
            return Some(alpha.to_vec());
        }
        let c = self.centroid();
        let p = self.project(alpha);
        let mut shrink = near;
        for _ in 0..60 {
            let q: Vec<f64> = c.iter().zip(&p).map(|(ci, pi)| ci + (1.0 - shrink) * (pi - ci)).collect();
            if self.position(&q).1 > 0.0 {
                return Some(q);
            }
            shrink *= 2.0;
        }
        Some(c)
    }

    /// Uniform grid over the bounding box, `per_axis` points per coordinate,
    /// keeping only points of the region.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let (lo, hi) = self.bounding_box();
        let per_axis = per_axis.max(1);
        let axis = |c: usize| -> Vec<f64> {
            if per_axis == 1 || hi[c] == lo[c] {
                vec![0.5 * (lo[c] + hi[c])]
            } else {
                (0..per_axis).map(|i| lo[c] + (hi[c] - lo[c]) * i as f64 / (per_axis - 1) as f64).collect()
            }
        };
        let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
        for c in 0..self.dim {
            let ax = axis(c);
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    ax.iter().map(move |&x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        pts.into_iter().filter(|p| self.contains(p, 1e-12)).collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual_vec(p: &[f64], origin: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut r: Vec<f64> = p.iter().zip(origin).map(|(a, b)| a - b).collect();
    for b in basis {
        let c = dot(&r, b);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= c * bi;
        }
    }
    r
}

fn local_coords(p: &[f64], origin: &[f64], basis: &[Vec<f64>]) -> [f64; 2] {
    let r: Vec<f64> = p.iter().zip(origin).map(|(a, b)| a - b).collect();
    let mut out = [0.0; 2];
    for (k, b) in basis.iter().enumerate() {
        out[k] = dot(&r, b);
    }
    out
}

/// Indices of the hull vertices, counter-clockwise, collinear points dropped.
fn monotone_chain(pts: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]).then(pts[a][1].total_cmp(&pts[b][1])));
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let cross = |o: usize, a: usize, b: usize| {
        (pts[a][0] - pts[o][0]) * (pts[b][1] - pts[o][1]) - (pts[a][1] - pts[o][1]) * (pts[b][0] - pts[o][0])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for &p in &idx {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in idx.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_basics() {
        let r = Region::interval(0.0, 1.0);
        assert_eq!(r.affine_dim(), 1);
        assert!(r.contains(&[1.0], 0.0));
        assert!(!r.in_relative_interior(&[1.0], 1e-12));
        assert!(r.in_relative_interior(&[0.5], 1e-12));
        assert!(!r.contains(&[1.1], 1e-9));
        let c = r.clamp_to_relative_interior(&[1.0], 1e-9).unwrap();
        assert!(c[0] < 1.0 && c[0] > 1.0 - 1e-8);
    }

    #[test]
    fn square_polygon() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![0.5, 0.5],
            vec![0.5, 0.0],
        ];
        let r = Region::hull(&pts, 2).unwrap();
        assert_eq!(r.affine_dim(), 2);
        assert_eq!(r.vertices().len(), 4);
        assert!(r.in_relative_interior(&[0.3, 0.7], 1e-12));
        assert!(r.contains(&[1.0, 0.5], 1e-12));
        assert!(!r.contains(&[1.01, 0.5], 1e-9));
        assert!((r.position(&[0.25, 0.5]).1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn segment_in_the_plane() {
        let r = Region::hull(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.5, 0.5]], 2).unwrap();
        assert_eq!(r.affine_dim(), 1);
        assert!(r.in_relative_interior(&[0.2, 0.2], 1e-12));
        assert!(!r.contains(&[0.2, 0.3], 1e-9));
    }

    #[test]
    fn three_dimensional_hull_is_unsupported() {
        let pts = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!(matches!(Region::hull(&pts, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn grid_stays_inside() {
        let r = Region::hull(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let g = r.grid(5);
        assert_eq!(g.len(), 15);
        assert!(g.iter().all(|p| p[0] + p[1] <= 1.0 + 1e-12));
    }
}
