//! Raviart-Thomas reference elements with their dual (nodal) bases.
//!
//! The velocity basis is obtained by inverting the matrix of degrees of
//! freedom applied to a monomial spanning set of `RT_k`:
//!
//! * facet moments `int_e vhat . nhat L_j ds`, `L_j` orthonormal Legendre on
//!   the edge parameter, `j = 0..=k`;
//! * interior moments `int_K vhat . w` for `w` in `(P_{k-1})^2` (triangle)
//!   or `Q_{k-1,k} x Q_{k,k-1}` (square).
//!
//! Local numbering is facet-major: facet `i`, moment `j` is dof `i (k+1) + j`,
//! followed by the interior dofs.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use super::poly::{legendre, legendre_coefficients, Poly, VecPoly};
use super::quadrature::{gauss_legendre, quadrature};
use crate::mesh::CellKind;
use crate::{Error, Result};

pub const MAX_ORDER: usize = 2;

#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub kind: CellKind,
    pub order: usize,
    pub velocity: Vec<VecPoly>,
    pub divergence: Vec<Poly>,
    /// `L^2(Khat)`-orthonormal basis of `P_k` or `Q_k`.
    pub pressure: Vec<Poly>,
    pub pressure_grad: Vec<VecPoly>,
    /// Basis of the interior moment space.
    pub interior_test: Vec<VecPoly>,
}

impl ReferenceElement {
    pub fn velocity_dim(&self) -> usize {
        self.velocity.len()
    }

    pub fn pressure_dim(&self) -> usize {
        self.pressure.len()
    }

    pub fn dofs_per_facet(&self) -> usize {
        self.order + 1
    }

    pub fn n_facet_dofs(&self) -> usize {
        self.kind.n_facets() * self.dofs_per_facet()
    }

    pub fn n_interior_dofs(&self) -> usize {
        self.interior_test.len()
    }

    /// Applies all degrees of freedom to each function: entry `(i, j)` is
    /// dof `i` of `funcs[j]`.
    pub fn dof_matrix(&self, funcs: &[VecPoly]) -> DMatrix<f64> {
        apply_dofs(self.kind, self.order, &self.interior_test, funcs)
    }

    /// `max |dof_i(phi_j) - delta_ij|`.
    pub fn unisolvence_defect(&self) -> f64 {
        let d = self.dof_matrix(&self.velocity);
        let n = d.nrows();
        (d - DMatrix::<f64>::identity(n, n)).abs().max()
    }
}

fn monomials_total(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for deg in 0..=k {
        for b in 0..=deg {
            out.push((deg - b, b));
        }
    }
    out
}

fn interior_space(kind: CellKind, k: usize) -> Vec<VecPoly> {
    let zero = Poly::zero();
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    match kind {
        CellKind::Triangle => {
            let ms = monomials_total(k - 1);
            for &(a, b) in &ms {
                out.push(VecPoly::new(Poly::monomial(a, b), zero));
            }
            for &(a, b) in &ms {
                out.push(VecPoly::new(zero, Poly::monomial(a, b)));
            }
        }
        CellKind::Quad => {
            for b in 0..=k {
                for a in 0..k {
                    out.push(VecPoly::new(tensor_legendre(a, b), zero));
                }
            }
            for b in 0..k {
                for a in 0..=k {
                    out.push(VecPoly::new(zero, tensor_legendre(a, b)));
                }
            }
        }
    }
    out
}

/// `L_a(x) L_b(y)`; a better-conditioned spanning set than monomials.
fn tensor_legendre(a: usize, b: usize) -> Poly {
    Poly::in_x(&legendre_coefficients(a)) * Poly::in_y(&legendre_coefficients(b))
}

fn rt_spanning_set(kind: CellKind, k: usize) -> Vec<VecPoly> {
    let zero = Poly::zero();
    let mut out = Vec::new();
    match kind {
        CellKind::Triangle => {
            let ms = monomials_total(k);
            for &(a, b) in &ms {
                out.push(VecPoly::new(Poly::monomial(a, b), zero));
            }
            for &(a, b) in &ms {
                out.push(VecPoly::new(zero, Poly::monomial(a, b)));
            }
            for b in 0..=k {
                let a = k - b;
                out.push(VecPoly::new(Poly::monomial(a + 1, b), Poly::monomial(a, b + 1)));
            }
        }
        CellKind::Quad => {
            for b in 0..=k {
                for a in 0..=k + 1 {
                    out.push(VecPoly::new(tensor_legendre(a, b), zero));
                }
            }
            for b in 0..=k + 1 {
                for a in 0..=k {
                    out.push(VecPoly::new(zero, tensor_legendre(a, b)));
                }
            }
        }
    }
    out
}

fn apply_dofs(kind: CellKind, k: usize, interior: &[VecPoly], funcs: &[VecPoly]) -> DMatrix<f64> {
    let n_facet = kind.n_facets() * (k + 1);
    let mut d = DMatrix::zeros(n_facet + interior.len(), funcs.len());
    let edge_rule = gauss_legendre(k + 3);
    let cell_rule = quadrature(kind, 2 * k + 2).expect("degree within table");
    for (j, v) in funcs.iter().enumerate() {
        for e in 0..kind.n_facets() {
            let (a, b) = kind.reference_edge(e);
            let scaled_normal = (b - a).rot_cw();
            for m in 0..=k {
                d[(e * (k + 1) + m, j)] = edge_rule
                    .iter()
                    .map(|(t, w)| w * v.eval(a.lerp(b, t)).dot(scaled_normal) * legendre(m, t))
                    .sum();
            }
        }
        for (l, wt) in interior.iter().enumerate() {
            d[(n_facet + l, j)] = cell_rule
                .iter()
                .map(|(p, w)| w * v.eval(p).dot(wt.eval(p)))
                .sum();
        }
    }
    d
}

fn pressure_basis(kind: CellKind, k: usize) -> Vec<Poly> {
    match kind {
        CellKind::Quad => {
            let mut out = Vec::new();
            for b in 0..=k {
                for a in 0..=k {
                    out.push(tensor_legendre(a, b));
                }
            }
            out
        }
        CellKind::Triangle => {
            // Gram-Schmidt on monomials ordered by total degree.
            let rule = quadrature(kind, 2 * k).expect("degree within table");
            let ip = |p: &Poly, q: &Poly| -> f64 {
                rule.iter().map(|(x, w)| w * p.eval(x) * q.eval(x)).sum()
            };
            let mut out: Vec<Poly> = Vec::new();
            for (a, b) in monomials_total(k) {
                let mut p = Poly::monomial(a, b);
                for _ in 0..2 {
                    for q in &out {
                        p = p - *q * ip(&p, q);
                    }
                }
                let norm = ip(&p, &p).sqrt();
                out.push(p * (1.0 / norm));
            }
            out
        }
    }
}

fn build(kind: CellKind, k: usize) -> ReferenceElement {
    let span = rt_spanning_set(kind, k);
    let interior = interior_space(kind, k);
    let d = apply_dofs(kind, k, &interior, &span);
    let n = d.nrows();
    let mut coeffs = d
        .clone()
        .try_inverse()
        .expect("Raviart-Thomas dof matrix is invertible");
    // One step of iterative refinement on the inverse.
    let defect = DMatrix::<f64>::identity(n, n) - &d * &coeffs;
    coeffs += &coeffs * defect;
    let velocity: Vec<VecPoly> = (0..span.len())
        .map(|l| {
            span.iter()
                .enumerate()
                .fold(VecPoly::default(), |acc, (j, s)| acc + *s * coeffs[(j, l)])
        })
        .collect();
    let divergence = velocity.iter().map(VecPoly::div).collect();
    let pressure = pressure_basis(kind, k);
    let pressure_grad = pressure.iter().map(Poly::grad).collect();
    ReferenceElement {
        kind,
        order: k,
        velocity,
        divergence,
        pressure,
        pressure_grad,
        interior_test: interior,
    }
}

/// Cached reference element for `(kind, k)`, `k <= 2`.
pub fn reference_element(kind: CellKind, k: usize) -> Result<Arc<ReferenceElement>> {
    static CACHE: [OnceLock<Arc<ReferenceElement>>; 2 * (MAX_ORDER + 1)] =
        [const { OnceLock::new() }; 2 * (MAX_ORDER + 1)];
    if k > MAX_ORDER {
        return Err(Error::invalid(format!(
            "Raviart-Thomas order {k} not supported (max {MAX_ORDER})"
        )));
    }
    let slot = match kind {
        CellKind::Triangle => k,
        CellKind::Quad => MAX_ORDER + 1 + k,
    };
    Ok(CACHE[slot].get_or_init(|| Arc::new(build(kind, k))).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Point2;

    fn all() -> impl Iterator<Item = (CellKind, usize)> {
        [CellKind::Triangle, CellKind::Quad]
            .into_iter()
            .flat_map(|kind| (0..=MAX_ORDER).map(move |k| (kind, k)))
    }

    #[test]
    fn dimensions() {
        for (kind, k) in all() {
            let el = reference_element(kind, k).unwrap();
            let (vdim, pdim) = match kind {
                CellKind::Triangle => ((k + 1) * (k + 3), (k + 1) * (k + 2) / 2),
                CellKind::Quad => (2 * (k + 1) * (k + 2), (k + 1) * (k + 1)),
            };
            assert_eq!(el.velocity_dim(), vdim, "{kind:?} {k}");
            assert_eq!(el.pressure_dim(), pdim, "{kind:?} {k}");
            assert_eq!(el.n_facet_dofs() + el.n_interior_dofs(), vdim);
        }
        let t0 = reference_element(CellKind::Triangle, 0).unwrap();
        assert_eq!((t0.velocity_dim(), t0.pressure_dim()), (3, 1));
        let q1 = reference_element(CellKind::Quad, 1).unwrap();
        assert_eq!((q1.velocity_dim(), q1.pressure_dim()), (12, 4));
    }

    #[test]
    fn unisolvent() {
        for (kind, k) in all() {
            let el = reference_element(kind, k).unwrap();
            assert!(el.unisolvence_defect() < 1e-12, "{kind:?} {k}: {}", el.unisolvence_defect());
        }
    }

    #[test]
    fn radial_field_in_lowest_order_triangle() {
        // (x, y) = x * P0 term; expand in the dual basis and compare pointwise.
        let el = reference_element(CellKind::Triangle, 0).unwrap();
        let v = VecPoly::new(Poly::monomial(1, 0), Poly::monomial(0, 1));
        let dofs = el.dof_matrix(&[v]);
        let p = Point2::new(0.2, 0.3);
        let mut rebuilt = Point2::default();
        let mut div = 0.0;
        for i in 0..3 {
            rebuilt = rebuilt + el.velocity[i].eval(p) * dofs[(i, 0)];
            div += el.divergence[i].eval(p) * dofs[(i, 0)];
        }
        assert!((rebuilt - p).norm() < 1e-13);
        assert!((div - 2.0).abs() < 1e-13);
    }

    #[test]
    fn pressure_basis_orthonormal() {
        for (kind, k) in all() {
            let el = reference_element(kind, k).unwrap();
            let rule = quadrature(kind, 2 * k).unwrap();
            for (i, p) in el.pressure.iter().enumerate() {
                for (j, q) in el.pressure.iter().enumerate() {
                    let ip: f64 = rule.iter().map(|(x, w)| w * p.eval(x) * q.eval(x)).sum();
                    assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn divergence_in_pressure_space() {
        // div RT_k = P_k / Q_k: the L2 projection onto the pressure basis is exact.
        for (kind, k) in all() {
            let el = reference_element(kind, k).unwrap();
            let rule = quadrature(kind, 2 * k + 2).unwrap();
            for d in &el.divergence {
                let coeffs: Vec<f64> = el
                    .pressure
                    .iter()
                    .map(|q| rule.iter().map(|(x, w)| w * d.eval(x) * q.eval(x)).sum())
                    .collect();
                for (x, _) in rule.iter() {
                    let proj: f64 = el.pressure.iter().zip(&coeffs).map(|(q, c)| c * q.eval(x)).sum();
                    assert!((proj - d.eval(x)).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn unsupported_order() {
        assert!(reference_element(CellKind::Quad, 3).is_err());
    }
}
