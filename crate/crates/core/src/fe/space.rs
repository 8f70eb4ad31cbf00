use std::sync::Arc;

use super::dofmap::build_dofmap;
use super::piola::push_value;
use super::{reference_element, DofMap, ReferenceElement};
use crate::mesh::{apply_inv_transpose, det, GeometryMap, Jacobian, Mesh, Point2};
use crate::{Error, Result};

/// `RT_k x P_k` (triangles) or `RT_k x Q_k` (quadrilaterals) on a mesh.
#[derive(Clone, Debug)]
pub struct MixedSpace {
    pub mesh: Arc<Mesh>,
    pub order: usize,
    pub reference: Arc<ReferenceElement>,
    pub dofmap: DofMap,
}

/// Physical basis functions of one cell at one reference point, with the
/// facet signs and scales of the dof map already applied.
#[derive(Clone, Debug, Default)]
pub struct BasisValues {
    pub x: Point2,
    pub jac: Jacobian,
    pub det: f64,
    pub velocity: Vec<Point2>,
    pub divergence: Vec<f64>,
    pub pressure: Vec<f64>,
    pub pressure_grad: Vec<Point2>,
}

impl MixedSpace {
    pub fn new(mesh: Arc<Mesh>, order: usize) -> Result<Self> {
        let kind = mesh
            .cells
            .first()
            .map(|c| c.kind)
            .ok_or_else(|| Error::invalid("empty mesh"))?;
        if mesh.cells.iter().any(|c| c.kind != kind) {
            return Err(Error::invalid("mixed cell kinds are not supported"));
        }
        let reference = reference_element(kind, order)?;
        let dofmap = build_dofmap(&mesh, &reference);
        Ok(Self {
            mesh,
            order,
            reference,
            dofmap,
        })
    }

    pub fn n_velocity_dofs(&self) -> usize {
        self.dofmap.n_velocity_dofs
    }

    pub fn n_pressure_dofs(&self) -> usize {
        self.dofmap.n_pressure_dofs
    }

    pub fn geometry(&self, cell: usize) -> GeometryMap {
        self.mesh.geometry(cell)
    }

    /// Evaluates every local basis function of `cell` at reference point `xi`.
    pub fn tabulate(&self, cell: usize, geo: &GeometryMap, xi: Point2, out: &mut BasisValues) {
        let el = &self.reference;
        let jac = geo.jacobian(xi);
        let d = det(&jac);
        debug_assert!(d > 0.0, "cell {cell} has det {d}");
        let factors = self.dofmap.velocity_factors(cell);
        out.x = geo.map(xi);
        out.jac = jac;
        out.det = d;
        out.velocity.clear();
        out.divergence.clear();
        for ((v, dv), &s) in el.velocity.iter().zip(&el.divergence).zip(factors) {
            out.velocity.push(push_value(&jac, d, v.eval(xi)) * s);
            out.divergence.push(s * dv.eval(xi) / d);
        }
        out.pressure.clear();
        out.pressure_grad.clear();
        for (q, g) in el.pressure.iter().zip(&el.pressure_grad) {
            out.pressure.push(q.eval(xi));
            out.pressure_grad.push(apply_inv_transpose(&jac, g.eval(xi)));
        }
    }

    pub fn velocity_function(self: &Arc<Self>, coefficients: Vec<f64>) -> FeFunction {
        assert_eq!(coefficients.len(), self.n_velocity_dofs());
        FeFunction {
            space: self.clone(),
            field: Field::Velocity,
            coefficients,
        }
    }

    pub fn pressure_function(self: &Arc<Self>, coefficients: Vec<f64>) -> FeFunction {
        assert_eq!(coefficients.len(), self.n_pressure_dofs());
        FeFunction {
            space: self.clone(),
            field: Field::Pressure,
            coefficients,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Velocity,
    Pressure,
}

/// A discrete velocity or pressure field: space plus global coefficients.
#[derive(Clone, Debug)]
pub struct FeFunction {
    pub space: Arc<MixedSpace>,
    pub field: Field,
    pub coefficients: Vec<f64>,
}

impl FeFunction {
    pub fn mesh(&self) -> &Mesh {
        &self.space.mesh
    }

    /// Velocity value and divergence from tabulated basis values of `cell`.
    pub fn velocity_at(&self, cell: usize, basis: &BasisValues) -> (Point2, f64) {
        debug_assert_eq!(self.field, Field::Velocity);
        let dofs = self.space.dofmap.velocity_dofs(cell);
        let mut v = Point2::default();
        let mut div = 0.0;
        for ((&g, &phi), &dphi) in dofs.iter().zip(&basis.velocity).zip(&basis.divergence) {
            let c = self.coefficients[g];
            v = v + phi * c;
            div += c * dphi;
        }
        (v, div)
    }

    /// Pressure value and gradient from tabulated basis values of `cell`.
    pub fn pressure_at(&self, cell: usize, basis: &BasisValues) -> (f64, Point2) {
        debug_assert_eq!(self.field, Field::Pressure);
        let mut q = 0.0;
        let mut grad = Point2::default();
        for ((g, &psi), &dpsi) in self
            .space
            .dofmap
            .pressure_dofs(cell)
            .zip(&basis.pressure)
            .zip(&basis.pressure_grad)
        {
            let c = self.coefficients[g];
            q += c * psi;
            grad = grad + dpsi * c;
        }
        (q, grad)
    }

    /// Point evaluation at reference point `xi` of `cell`.
    pub fn eval_velocity(&self, cell: usize, xi: Point2) -> (Point2, f64) {
        let mut b = BasisValues::default();
        self.space.tabulate(cell, &self.space.geometry(cell), xi, &mut b);
        self.velocity_at(cell, &b)
    }

    pub fn eval_pressure(&self, cell: usize, xi: Point2) -> (f64, Point2) {
        let mut b = BasisValues::default();
        self.space.tabulate(cell, &self.space.geometry(cell), xi, &mut b);
        self.pressure_at(cell, &b)
    }
}
