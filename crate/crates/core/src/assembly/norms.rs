//! Mesh-dependent norms and error measures. All facet weights use the
//! global `h_max`.

use super::{error_degree, facet_degree, form_cell_degree, form_facet_degree, tabulate_facet};
use crate::fe::{facet_quadrature, quadrature, BasisValues, FeFunction, Field};
use crate::mesh::{FacetLabel, Point2};

/// Which boundary facets carry the `h^-1 ||q||^2` trace term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PressureNorm {
    /// Dirichlet facets only.
    NitscheSym,
    /// Every boundary facet.
    Penalty,
}

type VectorRef<'a> = &'a dyn Fn(Point2) -> Point2;
type ScalarRef<'a> = &'a dyn Fn(Point2) -> f64;

/// `(||v - v_h||^2, sum over Neumann facets of ||(v - v_h) . n||^2)`.
fn velocity_parts(v_h: &FeFunction, exact: Option<VectorRef>) -> (f64, f64) {
    assert_eq!(v_h.field, Field::Velocity);
    let space = &v_h.space;
    let mesh = &space.mesh;
    let (cell_deg, facet_deg) = match exact {
        Some(_) => (error_degree(space), facet_degree(mesh, 2 * space.order + 6)),
        None => (form_cell_degree(space), form_facet_degree(space)),
    };
    let rule = quadrature(mesh.cells[0].kind, cell_deg).expect("degree within range");
    let frule = facet_quadrature(facet_deg).expect("degree within range");
    let mut bv = BasisValues::default();
    let mut volume = 0.0;
    for c in 0..mesh.n_cells() {
        let geo = space.geometry(c);
        for (xi, w) in rule.iter() {
            space.tabulate(c, &geo, xi, &mut bv);
            let (v, _) = v_h.velocity_at(c, &bv);
            let e = exact.map_or(Point2::default(), |u| u(bv.x)) - v;
            volume += w * bv.det * e.dot(e);
        }
    }
    let mut boundary = 0.0;
    for f in mesh.facets_with_label(FacetLabel::Neumann) {
        let side = mesh.facets[f].owner();
        let geo = space.geometry(side.cell);
        for (t, w) in frule.iter() {
            let fp = tabulate_facet(space, f, side, &geo, t, w, &mut bv);
            let (v, _) = v_h.velocity_at(side.cell, &bv);
            let e = (exact.map_or(Point2::default(), |u| u(bv.x)) - v).dot(fp.normal);
            boundary += fp.ds * e * e;
        }
    }
    (volume, boundary)
}

/// `sqrt(||v_h||^2 + weight * sum_{Neumann} ||v_h . n||^2)`; `weight` is
/// `gamma` (or `1/eps` for the penalty norm). Uses the quadrature of the
/// assembled forms.
pub fn norm_0h(v_h: &FeFunction, weight: f64) -> f64 {
    let (vol, bnd) = velocity_parts(v_h, None);
    (vol + weight * bnd).sqrt()
}

pub fn velocity_error_l2(u_h: &FeFunction, exact: VectorRef) -> f64 {
    velocity_parts(u_h, Some(exact)).0.sqrt()
}

pub fn velocity_error_0h(u_h: &FeFunction, exact: VectorRef, weight: f64) -> f64 {
    let (vol, bnd) = velocity_parts(u_h, Some(exact));
    (vol + weight * bnd).sqrt()
}

struct PressureExact<'a> {
    value: ScalarRef<'a>,
    grad: VectorRef<'a>,
}

/// `(||p - p_h||^2, broken H1 seminorm part including facet terms)`.
fn pressure_parts(q_h: &FeFunction, exact: Option<PressureExact>, variant: PressureNorm) -> (f64, f64) {
    assert_eq!(q_h.field, Field::Pressure);
    let space = &q_h.space;
    let mesh = &space.mesh;
    let (cell_deg, facet_deg) = match exact {
        Some(_) => (error_degree(space), facet_degree(mesh, 2 * space.order + 6)),
        None => (form_cell_degree(space), form_facet_degree(space)),
    };
    let rule = quadrature(mesh.cells[0].kind, cell_deg).expect("degree within range");
    let frule = facet_quadrature(facet_deg).expect("degree within range");
    let inv_h = 1.0 / mesh.h_max;
    let mut bv = BasisValues::default();
    let (mut l2, mut grad) = (0.0, 0.0);
    for c in 0..mesh.n_cells() {
        let geo = space.geometry(c);
        for (xi, w) in rule.iter() {
            space.tabulate(c, &geo, xi, &mut bv);
            let (q, dq) = q_h.pressure_at(c, &bv);
            let (e, de) = match &exact {
                Some(p) => ((p.value)(bv.x) - q, (p.grad)(bv.x) - dq),
                None => (-q, dq * -1.0),
            };
            l2 += w * bv.det * e * e;
            grad += w * bv.det * de.dot(de);
        }
    }
    let mut facets = 0.0;
    for f in 0..mesh.n_facets() {
        let facet = &mesh.facets[f];
        let include = match facet.label {
            FacetLabel::Interior => true,
            FacetLabel::Dirichlet => true,
            FacetLabel::Neumann | FacetLabel::Boundary => variant == PressureNorm::Penalty,
        };
        if !include {
            continue;
        }
        let owner = facet.owner();
        let geo = space.geometry(owner.cell);
        let nb = facet.neighbor().map(|s| (s, space.geometry(s.cell)));
        let mut bn = BasisValues::default();
        for (t, w) in frule.iter() {
            let fp = tabulate_facet(space, f, owner, &geo, t, w, &mut bv);
            let (q, _) = q_h.pressure_at(owner.cell, &bv);
            let jump = match &nb {
                // The exact pressure is continuous, so it drops out of jumps.
                Some((side, g)) => {
                    tabulate_facet(space, f, *side, g, t, w, &mut bn);
                    q - q_h.pressure_at(side.cell, &bn).0
                }
                None => q - exact.as_ref().map_or(0.0, |p| (p.value)(bv.x)),
            };
            facets += fp.ds * jump * jump;
        }
    }
    (l2, grad + inv_h * facets)
}

/// Broken `H^1`-type norm: `sum ||grad q||^2 + h^-1 sum_interior ||[q]||^2
/// + h^-1 sum_boundary ||q||^2`, the boundary part chosen by `variant`.
pub fn norm_1h(q_h: &FeFunction, variant: PressureNorm) -> f64 {
    pressure_parts(q_h, None, variant).1.sqrt()
}

pub fn pressure_error_l2(p_h: &FeFunction, exact: ScalarRef) -> f64 {
    let grad = |_| Point2::default();
    pressure_parts(p_h, Some(PressureExact { value: exact, grad: &grad }), PressureNorm::NitscheSym)
        .0
        .sqrt()
}

pub fn pressure_error_1h(
    p_h: &FeFunction,
    exact: ScalarRef,
    exact_grad: VectorRef,
    variant: PressureNorm,
) -> f64 {
    pressure_parts(p_h, Some(PressureExact { value: exact, grad: exact_grad }), variant)
        .1
        .sqrt()
}
