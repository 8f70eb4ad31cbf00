//! Small dense bivariate polynomials in reference coordinates.

use std::ops::{Add, Mul, Sub};

use crate::mesh::Point2;

/// Coefficient table size; degree per variable is at most `N - 1`.
const N: usize = 5;

/// `sum c[a][b] x^a y^b` with `a, b < 5`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Poly {
    c: [[f64; N]; N],
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(v: f64) -> Self {
        Self::monomial(0, 0) * v
    }

    pub fn monomial(a: usize, b: usize) -> Self {
        let mut p = Self::zero();
        p.c[a][b] = 1.0;
        p
    }

    pub fn coefficient(&self, a: usize, b: usize) -> f64 {
        self.c[a][b]
    }

    pub fn eval(&self, p: Point2) -> f64 {
        let mut xs = [1.0; N];
        let mut ys = [1.0; N];
        for i in 1..N {
            xs[i] = xs[i - 1] * p.x;
            ys[i] = ys[i - 1] * p.y;
        }
        let mut s = 0.0;
        for a in 0..N {
            let mut row = 0.0;
            for b in 0..N {
                row += self.c[a][b] * ys[b];
            }
            s += row * xs[a];
        }
        s
    }

    pub fn dx(&self) -> Poly {
        let mut d = Poly::zero();
        for a in 1..N {
            for b in 0..N {
                d.c[a - 1][b] = a as f64 * self.c[a][b];
            }
        }
        d
    }

    pub fn dy(&self) -> Poly {
        let mut d = Poly::zero();
        for a in 0..N {
            for b in 1..N {
                d.c[a][b - 1] = b as f64 * self.c[a][b];
            }
        }
        d
    }

    pub fn grad(&self) -> VecPoly {
        VecPoly {
            x: self.dx(),
            y: self.dy(),
        }
    }

    /// Univariate polynomial in `x` from ascending coefficients.
    pub fn in_x(coeffs: &[f64]) -> Poly {
        let mut p = Poly::zero();
        for (a, &v) in coeffs.iter().enumerate() {
            p.c[a][0] = v;
        }
        p
    }

    pub fn in_y(coeffs: &[f64]) -> Poly {
        let mut p = Poly::zero();
        for (b, &v) in coeffs.iter().enumerate() {
            p.c[0][b] = v;
        }
        p
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        for a in 0..N {
            for b in 0..N {
                self.c[a][b] += rhs.c[a][b];
            }
        }
        self
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        self + rhs * -1.0
    }
}

impl Mul<f64> for Poly {
    type Output = Poly;
    fn mul(mut self, rhs: f64) -> Poly {
        for row in &mut self.c {
            for v in row {
                *v *= rhs;
            }
        }
        self
    }
}

impl Mul for Poly {
    type Output = Poly;
    /// Panics if the product exceeds the coefficient table.
    fn mul(self, rhs: Poly) -> Poly {
        let mut out = Poly::zero();
        for a in 0..N {
            for b in 0..N {
                if self.c[a][b] == 0.0 {
                    continue;
                }
                for c in 0..N {
                    for d in 0..N {
                        if rhs.c[c][d] == 0.0 {
                            continue;
                        }
                        assert!(a + c < N && b + d < N, "polynomial degree overflow");
                        out.c[a + c][b + d] += self.c[a][b] * rhs.c[c][d];
                    }
                }
            }
        }
        out
    }
}

/// Vector-valued polynomial.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VecPoly {
    pub x: Poly,
    pub y: Poly,
}

impl VecPoly {
    pub fn new(x: Poly, y: Poly) -> Self {
        Self { x, y }
    }

    pub fn eval(&self, p: Point2) -> Point2 {
        Point2::new(self.x.eval(p), self.y.eval(p))
    }

    pub fn div(&self) -> Poly {
        self.x.dx() + self.y.dy()
    }
}

impl Add for VecPoly {
    type Output = VecPoly;
    fn add(self, rhs: VecPoly) -> VecPoly {
        VecPoly::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Mul<f64> for VecPoly {
    type Output = VecPoly;
    fn mul(self, rhs: f64) -> VecPoly {
        VecPoly::new(self.x * rhs, self.y * rhs)
    }
}

/// Legendre polynomials orthonormal on `[0, 1]`, ascending coefficients in `t`.
pub fn legendre_coefficients(j: usize) -> Vec<f64> {
    // P_0 = 1, P_1 = s, (n+1) P_{n+1} = (2n+1) s P_n - n P_{n-1}, s = 2t - 1
    let mut prev = vec![1.0];
    let mut cur = vec![-1.0, 2.0];
    if j == 0 {
        return prev;
    }
    for n in 1..j {
        let mut next = vec![0.0; n + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i] -= (2 * n + 1) as f64 * c;
            next[i + 1] += 2.0 * (2 * n + 1) as f64 * c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= n as f64 * c;
        }
        for v in &mut next {
            *v /= (n + 1) as f64;
        }
        prev = cur;
        cur = next;
    }
    let scale = ((2 * j + 1) as f64).sqrt();
    cur.iter().map(|c| c * scale).collect()
}

pub fn legendre(j: usize, t: f64) -> f64 {
    legendre_coefficients(j)
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * t + c)
}
