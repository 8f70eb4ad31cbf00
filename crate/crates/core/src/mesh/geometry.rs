use std::ops::{Add, Mul, Sub};

use super::CellKind;

/// A point (or vector) in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Clockwise rotation by 90 degrees. For a counter-clockwise boundary
    /// tangent this is the outward normal.
    pub fn rot_cw(self) -> Point2 {
        Point2::new(self.y, -self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        self + (other - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// 2x2 Jacobian `jac[i][j] = dF_i / dxhat_j`.
pub type Jacobian = [[f64; 2]; 2];

pub fn det(jac: &Jacobian) -> f64 {
    jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]
}

pub fn apply(jac: &Jacobian, v: Point2) -> Point2 {
    Point2::new(
        jac[0][0] * v.x + jac[0][1] * v.y,
        jac[1][0] * v.x + jac[1][1] * v.y,
    )
}

/// `DF^{-T} v`, used for gradients and covariant test functions.
pub fn apply_inv_transpose(jac: &Jacobian, v: Point2) -> Point2 {
    let d = det(jac);
    Point2::new(
        (jac[1][1] * v.x - jac[1][0] * v.y) / d,
        (-jac[0][1] * v.x + jac[0][0] * v.y) / d,
    )
}

/// Polynomial map from the reference cell to a physical cell.
///
/// Triangles are affine (three vertex nodes). Quadrilaterals use tensor
/// Lagrange interpolation of degree 1 or 2 on equispaced nodes, stored in
/// tensor order `a + (degree + 1) * b` for the node at `(a, b) / degree`.
#[derive(Clone, Debug)]
pub struct GeometryMap {
    pub kind: CellKind,
    pub degree: usize,
    pub nodes: Vec<Point2>,
}

fn lagrange_1d(degree: usize, t: f64) -> ([f64; 3], [f64; 3]) {
    match degree {
        1 => ([1.0 - t, t, 0.0], [-1.0, 1.0, 0.0]),
        2 => (
            [
                2.0 * (t - 0.5) * (t - 1.0),
                -4.0 * t * (t - 1.0),
                2.0 * t * (t - 0.5),
            ],
            [4.0 * t - 3.0, -8.0 * t + 4.0, 4.0 * t - 1.0],
        ),
        _ => unreachable!("geometry degree {degree} not supported"),
    }
}

impl GeometryMap {
    pub fn map(&self, xi: Point2) -> Point2 {
        match self.kind {
            CellKind::Triangle => {
                let [a, b, c] = [self.nodes[0], self.nodes[1], self.nodes[2]];
                a + (b - a) * xi.x + (c - a) * xi.y
            }
            CellKind::Quad => {
                let (lx, _) = lagrange_1d(self.degree, xi.x);
                let (ly, _) = lagrange_1d(self.degree, xi.y);
                let n = self.degree + 1;
                let mut p = Point2::default();
                for b in 0..n {
                    for a in 0..n {
                        p = p + self.nodes[a + n * b] * (lx[a] * ly[b]);
                    }
                }
                p
            }
        }
    }

    pub fn jacobian(&self, xi: Point2) -> Jacobian {
        match self.kind {
            CellKind::Triangle => {
                let [a, b, c] = [self.nodes[0], self.nodes[1], self.nodes[2]];
                [[b.x - a.x, c.x - a.x], [b.y - a.y, c.y - a.y]]
            }
            CellKind::Quad => {
                let (lx, dlx) = lagrange_1d(self.degree, xi.x);
                let (ly, dly) = lagrange_1d(self.degree, xi.y);
                let n = self.degree + 1;
                let mut jac = [[0.0; 2]; 2];
                for b in 0..n {
                    for a in 0..n {
                        let p = self.nodes[a + n * b];
                        let dx = dlx[a] * ly[b];
                        let dy = lx[a] * dly[b];
                        jac[0][0] += p.x * dx;
                        jac[0][1] += p.x * dy;
                        jac[1][0] += p.y * dx;
                        jac[1][1] += p.y * dy;
                    }
                }
                jac
            }
        }
    }

    /// Constant Jacobian (affine triangles, parallelograms).
    pub fn is_affine(&self) -> bool {
        match self.kind {
            CellKind::Triangle => true,
            CellKind::Quad => {
                let j0 = self.jacobian(Point2::new(0.0, 0.0));
                (0..9).all(|s| {
                    let xi = Point2::new(0.5 * (s % 3) as f64, 0.5 * (s / 3) as f64);
                    let j = self.jacobian(xi);
                    (0..2).all(|r| (0..2).all(|c| (j[r][c] - j0[r][c]).abs() < 1e-14))
                })
            }
        }
    }
}
