//! Bilinear forms, right-hand sides and mesh-dependent norms of both
//! discrete formulations, flattened into one sparse saddle-point system
//! `[[A, B1^T], [Bm, 0]]` (plus a zero-mean multiplier when needed).

mod norms;
mod sparse;

use std::sync::Arc;

pub use norms::{
    norm_0h, norm_1h, pressure_error_1h, pressure_error_l2, velocity_error_0h, velocity_error_l2,
    PressureNorm,
};
pub use sparse::{CsrMatrix, TripletBuilder};

use crate::cases::ManufacturedCase;
use crate::fe::{facet_quadrature, quadrature, BasisValues, MixedSpace, MAX_ORDER};
use crate::fe::quadrature::MAX_DEGREE;
use crate::mesh::{apply, FacetLabel, FacetSide, GeometryMap, Mesh, Point2};
use crate::{Error, Result};

pub type SparseMatrix = CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Formulation {
    /// Nitsche-type scheme with `m = 1`.
    NitscheSym,
    /// Nitsche-type scheme with `m = 0`.
    NitscheNonsym,
    /// Robin-type penalty with weight `1/eps`.
    Penalty,
}

impl Formulation {
    pub const ALL: [Formulation; 3] = [
        Formulation::NitscheSym,
        Formulation::NitscheNonsym,
        Formulation::Penalty,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::NitscheSym => "nitsche-sym",
            Formulation::NitscheNonsym => "nitsche-nonsym",
            Formulation::Penalty => "penalty",
        }
    }

    /// Multiplier of the boundary term in the second equation.
    pub fn m(self) -> f64 {
        match self {
            Formulation::NitscheSym => 1.0,
            Formulation::NitscheNonsym | Formulation::Penalty => 0.0,
        }
    }

    pub fn is_symmetric(self) -> bool {
        self != Formulation::NitscheNonsym
    }

    /// Norm variant that pairs with the scheme in the stability analysis.
    pub fn pressure_norm(self) -> PressureNorm {
        match self {
            Formulation::NitscheSym => PressureNorm::NitscheSym,
            Formulation::NitscheNonsym | Formulation::Penalty => PressureNorm::Penalty,
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formulation::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| {
                Error::Configuration(format!(
                    "unknown formulation '{s}' (expected nitsche-sym, nitsche-nonsym or penalty)"
                ))
            })
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Unknowns are ordered velocity, pressure, then the optional multiplier.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub space: Arc<MixedSpace>,
    pub formulation: Formulation,
    /// `gamma` for the Nitsche schemes, `1/eps` for the penalty scheme.
    pub boundary_weight: f64,
    pub mean_constraint: bool,
    pub warnings: Vec<String>,
}

impl LinearSystem {
    pub fn n_unknowns(&self) -> usize {
        self.rhs.len()
    }

    pub fn velocity_range(&self) -> std::ops::Range<usize> {
        0..self.space.n_velocity_dofs()
    }

    pub fn pressure_range(&self) -> std::ops::Range<usize> {
        let nu = self.space.n_velocity_dofs();
        nu..nu + self.space.n_pressure_dofs()
    }
}

/// `1 / h_max`.
pub fn default_gamma(mesh: &Mesh) -> f64 {
    1.0 / mesh.h_max
}

/// `h_max^(k+1)`.
pub fn default_eps(mesh: &Mesh, order: usize) -> f64 {
    mesh.h_max.powi(order as i32 + 1)
}

/// Quadrature degree for cell integrals, raised by two on curved cells.
pub(crate) fn cell_degree(mesh: &Mesh, base: usize) -> usize {
    let bump = if mesh.geom_degree > 1 { 2 } else { 0 };
    (base + bump).min(MAX_DEGREE)
}

pub(crate) fn facet_degree(mesh: &Mesh, base: usize) -> usize {
    cell_degree(mesh, base)
}

/// Cell degree for bilinear forms and discrete norms.
pub(crate) fn form_cell_degree(space: &MixedSpace) -> usize {
    cell_degree(&space.mesh, 2 * space.order + 2)
}

pub(crate) fn form_facet_degree(space: &MixedSpace) -> usize {
    facet_degree(&space.mesh, 2 * space.order + 1)
}

/// Degree for integrals against non-polynomial data.
pub(crate) fn data_degree(space: &MixedSpace) -> usize {
    cell_degree(&space.mesh, 2 * space.order + 5)
}

/// Degree for errors against exact solutions.
pub(crate) fn error_degree(space: &MixedSpace) -> usize {
    cell_degree(&space.mesh, 2 * space.order + 6)
}

/// Degree for interpolation moments and projections of smooth data. At
/// least 10 so the cell and facet rules agree to roundoff for k = 0.
pub(crate) fn interpolation_degree(space: &MixedSpace) -> usize {
    cell_degree(&space.mesh, (2 * space.order + 6).max(10))
}

/// Outward unit normal of the tabulated side and the arc-length weight at
/// one facet quadrature point.
pub(crate) struct FacetPoint {
    pub normal: Point2,
    pub ds: f64,
}

/// Tabulates `side.cell` at global parameter `t` of facet `f`.
pub(crate) fn tabulate_facet(
    space: &MixedSpace,
    f: usize,
    side: FacetSide,
    geo: &GeometryMap,
    t: f64,
    weight: f64,
    out: &mut BasisValues,
) -> FacetPoint {
    let mesh = &space.mesh;
    let kind = mesh.cells[side.cell].kind;
    let xi = mesh.facet_reference_point(f, side, t);
    space.tabulate(side.cell, geo, xi, out);
    let (a, b) = kind.reference_edge(side.local);
    let tangent = apply(&out.jac, b - a);
    let len = tangent.norm();
    FacetPoint {
        normal: tangent.rot_cw() * (1.0 / len),
        ds: weight * len,
    }
}

/// Assembles the Nitsche-type scheme with boundary weight `gamma` and
/// `m ∈ {0, 1}`.
pub fn assemble_first_formulation(
    space: &Arc<MixedSpace>,
    m: u8,
    gamma: f64,
    case: &ManufacturedCase,
) -> Result<LinearSystem> {
    let formulation = match m {
        1 => Formulation::NitscheSym,
        0 => Formulation::NitscheNonsym,
        _ => return Err(Error::invalid(format!("m must be 0 or 1, got {m}"))),
    };
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("boundary weight gamma must be positive, got {gamma}")));
    }
    assemble(space, formulation, gamma, case)
}

/// Assembles the penalty scheme with parameter `eps`.
pub fn assemble_second_formulation(
    space: &Arc<MixedSpace>,
    eps: f64,
    case: &ManufacturedCase,
) -> Result<LinearSystem> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("penalty eps must be positive, got {eps}")));
    }
    assemble(space, Formulation::Penalty, 1.0 / eps, case)
}

/// Dispatches on the formulation; `weight` is `gamma` or `1/eps`.
pub fn assemble_system(
    space: &Arc<MixedSpace>,
    formulation: Formulation,
    weight: f64,
    case: &ManufacturedCase,
) -> Result<LinearSystem> {
    match formulation {
        Formulation::NitscheSym => assemble_first_formulation(space, 1, weight, case),
        Formulation::NitscheNonsym => assemble_first_formulation(space, 0, weight, case),
        Formulation::Penalty => assemble_second_formulation(space, 1.0 / weight, case),
    }
}

fn assemble(
    space: &Arc<MixedSpace>,
    formulation: Formulation,
    weight: f64,
    case: &ManufacturedCase,
) -> Result<LinearSystem> {
    debug_assert!(space.order <= MAX_ORDER);
    let mesh = &space.mesh;
    if mesh.facets.iter().any(|f| f.label == FacetLabel::Boundary) {
        return Err(Error::Configuration("mesh has unclassified boundary facets".into()));
    }
    let kind = mesh.cells[0].kind;
    let nu = space.n_velocity_dofs();
    let np = space.n_pressure_dofs();
    let mean_constraint = mesh.pure_neumann;
    let n = nu + np + usize::from(mean_constraint);
    let first_row_b1 = formulation != Formulation::Penalty;
    let m = formulation.m();

    let mut triplets = TripletBuilder::new(n, n);
    let mut rhs = vec![0.0; n];
    let mat_rule = quadrature(kind, form_cell_degree(space))?;
    let rhs_rule = quadrature(kind, data_degree(space))?;
    let mut bv = BasisValues::default();
    let nv = space.reference.velocity_dim();
    let nq = space.reference.pressure_dim();
    let mut a_loc = vec![0.0; nv * nv];
    let mut b_loc = vec![0.0; nq * nv];
    let mut mean_loc = vec![0.0; nq];
    let mut domain_g = 0.0;
    let mut data_scale = 0.0;

    for c in 0..mesh.n_cells() {
        let geo = space.geometry(c);
        let vd = space.dofmap.velocity_dofs(c);
        let pd: Vec<usize> = space.dofmap.pressure_dofs(c).map(|l| nu + l).collect();
        a_loc.iter_mut().for_each(|x| *x = 0.0);
        b_loc.iter_mut().for_each(|x| *x = 0.0);
        mean_loc.iter_mut().for_each(|x| *x = 0.0);
        for (xi, w) in mat_rule.iter() {
            space.tabulate(c, &geo, xi, &mut bv);
            let dx = w * bv.det;
            for i in 0..nv {
                for j in 0..nv {
                    a_loc[i * nv + j] += dx * bv.velocity[i].dot(bv.velocity[j]);
                }
            }
            for l in 0..nq {
                let psi = dx * bv.pressure[l];
                mean_loc[l] += psi;
                for j in 0..nv {
                    b_loc[l * nv + j] += psi * bv.divergence[j];
                }
            }
        }
        for (xi, w) in rhs_rule.iter() {
            space.tabulate(c, &geo, xi, &mut bv);
            let dx = w * bv.det;
            let f = case.f(bv.x);
            let g = case.g(bv.x);
            domain_g += dx * g;
            data_scale += dx * g.abs();
            for i in 0..nv {
                rhs[vd[i]] += dx * f.dot(bv.velocity[i]);
            }
            for l in 0..nq {
                rhs[pd[l]] += dx * g * bv.pressure[l];
            }
        }
        for i in 0..nv {
            for j in 0..nv {
                triplets.add(vd[i], vd[j], a_loc[i * nv + j]);
            }
        }
        for l in 0..nq {
            for j in 0..nv {
                let b = b_loc[l * nv + j];
                triplets.add(vd[j], pd[l], b);
                triplets.add(pd[l], vd[j], b);
            }
            if mean_constraint {
                triplets.add(n - 1, pd[l], mean_loc[l]);
                triplets.add(pd[l], n - 1, mean_loc[l]);
            }
        }
    }

    let mat_facet = facet_quadrature(form_facet_degree(space))?;
    let rhs_facet = facet_quadrature(facet_degree(mesh, 2 * space.order + 5))?;
    let mut boundary_flux = 0.0;
    for f in mesh.boundary_facets() {
        let facet = &mesh.facets[f];
        let side = facet.owner();
        let c = side.cell;
        let geo = space.geometry(c);
        let vd = space.dofmap.velocity_dofs(c);
        let pd: Vec<usize> = space.dofmap.pressure_dofs(c).map(|l| nu + l).collect();
        let neumann = facet.label == FacetLabel::Neumann;
        if neumann {
            for (t, w) in mat_facet.iter() {
                let fp = tabulate_facet(space, f, side, &geo, t, w, &mut bv);
                let vn: Vec<f64> = bv.velocity.iter().map(|v| v.dot(fp.normal)).collect();
                for i in 0..nv {
                    for j in 0..nv {
                        triplets.add(vd[i], vd[j], weight * fp.ds * vn[i] * vn[j]);
                    }
                }
                for l in 0..nq {
                    let psi = fp.ds * bv.pressure[l];
                    for i in 0..nv {
                        if first_row_b1 {
                            triplets.add(vd[i], pd[l], -psi * vn[i]);
                        }
                        if m != 0.0 {
                            triplets.add(pd[l], vd[i], -m * psi * vn[i]);
                        }
                    }
                }
            }
        }
        for (t, w) in rhs_facet.iter() {
            let fp = tabulate_facet(space, f, side, &geo, t, w, &mut bv);
            if neumann {
                let u_n = case.u_n(bv.x, fp.normal);
                boundary_flux += fp.ds * u_n;
                data_scale += fp.ds * u_n.abs();
                for i in 0..nv {
                    rhs[vd[i]] += weight * fp.ds * u_n * bv.velocity[i].dot(fp.normal);
                }
                if m != 0.0 {
                    for l in 0..nq {
                        rhs[pd[l]] -= m * fp.ds * u_n * bv.pressure[l];
                    }
                }
            } else {
                let p_d = case.p_d(bv.x);
                for i in 0..nv {
                    rhs[vd[i]] += fp.ds * p_d * bv.velocity[i].dot(fp.normal);
                }
            }
        }
    }

    let mut warnings = Vec::new();
    if mean_constraint && (boundary_flux - domain_g).abs() > 1e-8 * data_scale.max(f64::MIN_POSITIVE) {
        let msg = format!(
            "incompatible pure-Neumann data: boundary flux {boundary_flux:.6e} vs source {domain_g:.6e}"
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    Ok(LinearSystem {
        matrix: triplets.build(),
        rhs,
        space: space.clone(),
        formulation,
        boundary_weight: weight,
        mean_constraint,
        warnings,
    })
}

#[cfg(test)]
mod tests;
