//! Gauss rules on `[0, 1]`, the unit square and the unit triangle.

use crate::mesh::{CellKind, Point2};
use crate::{Error, Result};

/// Highest polynomial degree [`quadrature`] and [`facet_quadrature`] accept.
pub const MAX_DEGREE: usize = 12;

/// One-dimensional rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Rule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn iter(&self) -> impl Iterator<Item = (Point2, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n`-point Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Rule1d {
    assert!(n >= 1);
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = 0.5 * (1.0 - x);
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n == 1 {
        points[0] = 0.5;
        weights[0] = 1.0;
    }
    Rule1d { points, weights }
}

fn points_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}

/// Rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn facet_quadrature(degree: usize) -> Result<Rule1d> {
    if degree > MAX_DEGREE {
        return Err(Error::invalid(format!(
            "quadrature degree {degree} exceeds {MAX_DEGREE}"
        )));
    }
    Ok(gauss_legendre(points_for_degree(degree)))
}

/// Cell rule exact to `degree`: tensor Gauss on the square (exact on
/// `Q_degree`), collapsed Gauss on the triangle, except the centroid rule at
/// degree <= 1.
pub fn quadrature(kind: CellKind, degree: usize) -> Result<QuadratureRule> {
    if degree > MAX_DEGREE {
        return Err(Error::invalid(format!(
            "quadrature degree {degree} exceeds {MAX_DEGREE}"
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match kind {
        CellKind::Quad => {
            let g = gauss_legendre(points_for_degree(degree));
            for (y, wy) in g.iter() {
                for (x, wx) in g.iter() {
                    points.push(Point2::new(x, y));
                    weights.push(wx * wy);
                }
            }
        }
        CellKind::Triangle if degree <= 1 => {
            points.push(Point2::new(1.0 / 3.0, 1.0 / 3.0));
            weights.push(0.5);
        }
        CellKind::Triangle => {
            // x = u, y = v (1 - u); jacobian (1 - u) raises the degree in u by one.
            let gu = gauss_legendre(points_for_degree(degree + 1));
            let gv = gauss_legendre(points_for_degree(degree));
            for (u, wu) in gu.iter() {
                for (v, wv) in gv.iter() {
                    points.push(Point2::new(u, v * (1.0 - u)));
                    weights.push(wu * wv * (1.0 - u));
                }
            }
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn quad_degree_three_is_two_by_two() {
        let q = quadrature(CellKind::Quad, 3).unwrap();
        assert_eq!(q.len(), 4);
        assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_degree_one_is_centroid() {
        let q = quadrature(CellKind::Triangle, 1).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.weights[0], 0.5);
        assert!((q.points[0].x - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn facet_degree_five_integrates_x5() {
        let g = facet_quadrature(5).unwrap();
        assert_eq!(g.points.len(), 3);
        let integral: f64 = g.iter().map(|(t, w)| w * t.powi(5)).sum();
        assert!((integral - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_degree_above_limit() {
        assert!(quadrature(CellKind::Quad, 13).is_err());
        assert!(facet_quadrature(13).is_err());
    }

    #[test]
    fn weights_positive() {
        for d in 0..=MAX_DEGREE {
            for kind in [CellKind::Triangle, CellKind::Quad] {
                assert!(quadrature(kind, d).unwrap().weights.iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn monomials_integrated_exactly() {
        // int_T x^a y^b = a! b! / (a + b + 2)!, int_Q x^a y^b = 1 / ((a+1)(b+1))
        for d in 0..=MAX_DEGREE {
            let tri = quadrature(CellKind::Triangle, d).unwrap();
            let quad = quadrature(CellKind::Quad, d).unwrap();
            for a in 0..=d {
                for b in 0..=d - a {
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let got: f64 = tri.iter().map(|(p, w)| w * p.x.powi(a as i32) * p.y.powi(b as i32)).sum();
                    assert!((got - exact).abs() < 1e-14, "tri d={d} a={a} b={b}");
                }
            }
            for a in 0..=d {
                for b in 0..=d {
                    let exact = 1.0 / ((a + 1) as f64 * (b + 1) as f64);
                    let got: f64 = quad.iter().map(|(p, w)| w * p.x.powi(a as i32) * p.y.powi(b as i32)).sum();
                    assert!((got - exact).abs() < 1e-14, "quad d={d} a={a} b={b}");
                }
            }
        }
    }
}
