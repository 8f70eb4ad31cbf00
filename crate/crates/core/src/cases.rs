//! Manufactured solutions with closed-form data `f = u - grad p`,
//! `g = div u`, `u_N = u . n`, `p_D = p` (unit permeability).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::{
    build_quarter_annulus_quad, build_unit_circle_tri, build_unit_square_quad,
    build_unit_square_tri, classify_facets, BoundarySpec, FacetLabel, Mesh, Point2,
};
use crate::{Error, Result};

pub type VectorFn = fn(Point2) -> Point2;
pub type ScalarFn = fn(Point2) -> f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFamily {
    UnitSquareTri,
    UnitSquareQuad,
    UnitCircleTri,
    /// Biquadratic isoparametric cells unless built with degree 1.
    QuarterAnnulus { geom_degree: usize },
}

impl MeshFamily {
    /// `level` is the number of subdivisions per side for the square and
    /// annulus families and the refinement index for the circle.
    pub fn build(self, level: usize) -> Result<Mesh> {
        match self {
            MeshFamily::UnitSquareTri => build_unit_square_tri(level),
            MeshFamily::UnitSquareQuad => build_unit_square_quad(level),
            MeshFamily::UnitCircleTri => build_unit_circle_tri(level),
            MeshFamily::QuarterAnnulus { geom_degree } => build_quarter_annulus_quad(level, geom_degree),
        }
    }

    fn sample(self, rng: &mut impl Rng) -> Point2 {
        match self {
            MeshFamily::UnitSquareTri | MeshFamily::UnitSquareQuad => {
                Point2::new(rng.random_range(0.01..0.99), rng.random_range(0.01..0.99))
            }
            MeshFamily::UnitCircleTri => {
                let r = rng.random_range(0.0..0.95f64);
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                Point2::new(r * t.cos(), r * t.sin())
            }
            MeshFamily::QuarterAnnulus { .. } => {
                let r = rng.random_range(1.01..1.99f64);
                let t = rng.random_range(0.01..std::f64::consts::FRAC_PI_2 - 0.01);
                Point2::new(r * t.cos(), r * t.sin())
            }
        }
    }
}

/// Which part of the boundary carries the (natural) pressure condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    PureNeumann,
    /// Dirichlet on `y = 0`, Neumann elsewhere.
    DirichletBottom,
    /// Dirichlet on the straight edges `y = 0` and `x = 0`.
    DirichletStraightEdges,
}

impl BoundaryKind {
    pub fn spec(self) -> BoundarySpec {
        const TOL: f64 = 1e-9;
        match self {
            BoundaryKind::PureNeumann => BoundarySpec::pure_neumann(),
            BoundaryKind::DirichletBottom => BoundarySpec::new()
                .with(FacetLabel::Dirichlet, |p| p.y.abs() < TOL)
                .with(FacetLabel::Neumann, |p| p.y.abs() >= TOL),
            BoundaryKind::DirichletStraightEdges => {
                let straight = |p: Point2| p.y.abs() < TOL || p.x.abs() < TOL;
                BoundarySpec::new()
                    .with(FacetLabel::Dirichlet, straight)
                    .with(FacetLabel::Neumann, move |p| !straight(p))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub family: MeshFamily,
    pub boundary: BoundaryKind,
    pub velocity: VectorFn,
    pub pressure: ScalarFn,
    pub pressure_grad: VectorFn,
    pub divergence: ScalarFn,
}

impl ManufacturedCase {
    pub fn u(&self, x: Point2) -> Point2 {
        (self.velocity)(x)
    }

    pub fn p(&self, x: Point2) -> f64 {
        (self.pressure)(x)
    }

    pub fn grad_p(&self, x: Point2) -> Point2 {
        (self.pressure_grad)(x)
    }

    /// Darcy source `f = u - grad p`.
    pub fn f(&self, x: Point2) -> Point2 {
        self.u(x) - self.grad_p(x)
    }

    /// Mass source `g = div u`.
    pub fn g(&self, x: Point2) -> f64 {
        (self.divergence)(x)
    }

    /// Flux datum `u_N = u . n`.
    pub fn u_n(&self, x: Point2, normal: Point2) -> f64 {
        self.u(x).dot(normal)
    }

    pub fn p_d(&self, x: Point2) -> f64 {
        self.p(x)
    }

    pub fn boundary_spec(&self) -> BoundarySpec {
        self.boundary.spec()
    }

    /// Builds and classifies the mesh at `level`.
    pub fn mesh(&self, level: usize) -> Result<Mesh> {
        classify_facets(self.family.build(level)?, &self.boundary_spec())
    }

    pub fn with_family(mut self, family: MeshFamily) -> Self {
        self.family = family;
        self
    }

    pub fn with_boundary(mut self, boundary: BoundaryKind) -> Self {
        self.boundary = boundary;
        self
    }

    /// Compares the hand-coded gradient and divergence with central finite
    /// differences (step `1e-6`) at 100 random interior points. Returns the
    /// largest relative discrepancy.
    pub fn verify(&self, seed: u64) -> Result<f64> {
        const STEP: f64 = 1e-6;
        const TOL: f64 = 1e-6;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x = self.family.sample(&mut rng);
            let ex = Point2::new(STEP, 0.0);
            let ey = Point2::new(0.0, STEP);
            let fd_grad = Point2::new(
                (self.p(x + ex) - self.p(x - ex)) / (2.0 * STEP),
                (self.p(x + ey) - self.p(x - ey)) / (2.0 * STEP),
            );
            let fd_div = (self.u(x + ex).x - self.u(x - ex).x) / (2.0 * STEP)
                + (self.u(x + ey).y - self.u(x - ey).y) / (2.0 * STEP);
            let grad = self.grad_p(x);
            let e_grad = (fd_grad - grad).norm() / (1.0 + grad.norm());
            let e_div = (fd_div - self.g(x)).abs() / (1.0 + self.g(x).abs());
            worst = worst.max(e_grad).max(e_div);
            if e_grad > TOL || e_div > TOL {
                return Err(Error::Configuration(format!(
                    "case {}: closed-form derivatives disagree with finite differences at ({:.4}, {:.4}): grad {e_grad:e}, div {e_div:e}",
                    self.name, x.x, x.y
                )));
            }
        }
        Ok(worst)
    }
}

/// Unit square, triangles, pure Neumann, divergence-free velocity.
pub fn case_unit_square_tri() -> ManufacturedCase {
    ManufacturedCase {
        name: "unit-square-tri",
        family: MeshFamily::UnitSquareTri,
        boundary: BoundaryKind::PureNeumann,
        velocity: |p| {
            let (x, y) = (p.x, p.y);
            Point2::new(
                x * x.sin() * y.sin(),
                x.sin() * y.cos() + x * x.cos() * y.cos(),
            )
        },
        pressure: |p| p.x.powi(3) * p.y - 0.125,
        pressure_grad: |p| Point2::new(3.0 * p.x * p.x * p.y, p.x.powi(3)),
        divergence: |_| 0.0,
    }
}

/// Unit disk (polygonal approximation), triangles, pure Neumann.
pub fn case_unit_circle_tri() -> ManufacturedCase {
    ManufacturedCase {
        name: "unit-circle-tri",
        family: MeshFamily::UnitCircleTri,
        boundary: BoundaryKind::PureNeumann,
        velocity: |p| {
            let (x, y) = (p.x, p.y);
            Point2::new(0.1 * x.exp() * (x * y).sin(), x.powi(4) + y * y)
        },
        pressure: |p| p.x.powi(3) * p.x.cos() + p.y * p.y * p.x.sin(),
        pressure_grad: |p| {
            let (x, y) = (p.x, p.y);
            Point2::new(
                3.0 * x * x * x.cos() - x.powi(3) * x.sin() + y * y * x.cos(),
                2.0 * y * x.sin(),
            )
        },
        divergence: |p| {
            let (x, y) = (p.x, p.y);
            2.0 * y + 0.1 * (x.exp() * (x * y).sin() + y * x.exp() * (x * y).cos())
        },
    }
}

/// Unit square, quadrilaterals, Dirichlet pressure on `y = 0`.
///
/// The velocity is the divergence-free field `(cos x cosh y, sin x sinh y)`.
pub fn case_unit_square_quad() -> ManufacturedCase {
    ManufacturedCase {
        name: "unit-square-quad",
        family: MeshFamily::UnitSquareQuad,
        boundary: BoundaryKind::DirichletBottom,
        velocity: |p| Point2::new(p.x.cos() * p.y.cosh(), p.x.sin() * p.y.sinh()),
        pressure: |p| -p.x.sin() * p.y.sinh() - (1f64.cos() - 1.0) * (1f64.cosh() - 1.0),
        pressure_grad: |p| Point2::new(-p.x.cos() * p.y.sinh(), -p.x.sin() * p.y.cosh()),
        divergence: |_| 0.0,
    }
}

/// Quarter annulus `1 <= r <= 2`, biquadratic isoparametric quadrilaterals,
/// Dirichlet pressure on the straight edges.
pub fn case_quarter_annulus() -> ManufacturedCase {
    ManufacturedCase {
        name: "quarter-annulus",
        family: MeshFamily::QuarterAnnulus { geom_degree: 2 },
        boundary: BoundaryKind::DirichletStraightEdges,
        velocity: |p| {
            let (x, y) = (p.x, p.y);
            Point2::new(-x * y * y, -x * x * y - 1.5 * y * y)
        },
        pressure: |p| 0.5 * (p.x * p.x * p.y * p.y + p.y.powi(3)),
        pressure_grad: |p| {
            let (x, y) = (p.x, p.y);
            Point2::new(x * y * y, x * x * y + 1.5 * y * y)
        },
        divergence: |p| -p.x * p.x - p.y * p.y - 3.0 * p.y,
    }
}

/// `u = (x, -y)`, `p = x - 1/2`: contained in every discrete space with
/// `k >= 1`, so the schemes reproduce it up to rounding.
pub fn case_synthetic() -> ManufacturedCase {
    ManufacturedCase {
        name: "synthetic",
        family: MeshFamily::UnitSquareQuad,
        boundary: BoundaryKind::PureNeumann,
        velocity: |p| Point2::new(p.x, -p.y),
        pressure: |p| p.x - 0.5,
        pressure_grad: |_| Point2::new(1.0, 0.0),
        divergence: |_| 0.0,
    }
}

/// Homogeneous data; the discrete solution must vanish.
pub fn case_zero(family: MeshFamily, boundary: BoundaryKind) -> ManufacturedCase {
    ManufacturedCase {
        name: "zero",
        family,
        boundary,
        velocity: |_| Point2::default(),
        pressure: |_| 0.0,
        pressure_grad: |_| Point2::default(),
        divergence: |_| 0.0,
    }
}

pub const CASE_NAMES: [&str; 5] = [
    "unit-square-tri",
    "unit-circle-tri",
    "unit-square-quad",
    "quarter-annulus",
    "synthetic",
];

/// Looks up a case and checks its closed-form derivatives.
pub fn case_by_name(name: &str) -> Result<ManufacturedCase> {
    let case = match name {
        "unit-square-tri" => case_unit_square_tri(),
        "unit-circle-tri" => case_unit_circle_tri(),
        "unit-square-quad" => case_unit_square_quad(),
        "quarter-annulus" => case_quarter_annulus(),
        "synthetic" => case_synthetic(),
        other => {
            return Err(Error::Configuration(format!(
                "unknown case '{other}' (expected one of {})",
                CASE_NAMES.join(", ")
            )))
        }
    };
    case.verify(0)?;
    Ok(case)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_cases_pass_finite_difference_check() {
        for name in CASE_NAMES {
            let case = case_by_name(name).unwrap();
            assert!(case.verify(7).unwrap() < 1e-6, "{name}");
        }
        assert!(case_by_name("nope").is_err());
    }

    #[test]
    fn darcy_and_mass_residuals_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in CASE_NAMES {
            let case = case_by_name(name).unwrap();
            for _ in 0..100 {
                let x = case.family.sample(&mut rng);
                let r = case.u(x) - case.grad_p(x) - case.f(x);
                assert!(r.norm() < 1e-12);
                assert!((case.g(x) - (case.divergence)(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_square_tri_values() {
        let c = case_unit_square_tri();
        assert_eq!(c.g(Point2::new(0.3, 0.7)), 0.0);
        for y in [0.0, 0.4, 1.0] {
            assert_eq!(c.p(Point2::new(0.0, y)), -0.125);
        }
    }

    #[test]
    fn unit_circle_values() {
        let c = case_unit_circle_tri();
        assert_eq!(c.g(Point2::new(0.0, 0.0)), 0.0);
        assert!((c.g(Point2::new(0.0, 1.0)) - 2.1).abs() < 1e-15);
        assert_eq!(c.u(Point2::new(0.0, 0.0)), Point2::new(0.0, 0.0));
    }

    #[test]
    fn unit_square_quad_values() {
        let c = case_unit_square_quad();
        assert_eq!(c.u(Point2::new(0.0, 0.0)), Point2::new(1.0, 0.0));
        let bottom = -(1f64.cos() - 1.0) * (1f64.cosh() - 1.0);
        for x in [0.0, 0.5, 1.0] {
            assert!((c.p_d(Point2::new(x, 0.0)) - bottom).abs() < 1e-15);
        }
        assert_eq!(c.g(Point2::new(0.2, 0.9)), 0.0);
    }

    #[test]
    fn quarter_annulus_values() {
        let c = case_quarter_annulus();
        let one = Point2::new(1.0, 1.0);
        assert_eq!(c.g(one), -5.0);
        assert_eq!(c.u(one), Point2::new(-1.0, -2.5));
        assert_eq!(c.f(one), Point2::new(-2.0, -5.0));
        assert!((c.p(Point2::new(0.0, 1.3)) - 0.5 * 1.3f64.powi(3)).abs() < 1e-15);
    }
}
