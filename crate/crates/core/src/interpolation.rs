//! Canonical interpolants onto the mixed spaces, the commuting-diagram
//! defect, and the constructive inf-sup witness.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::assembly::{interpolation_degree, tabulate_facet};
use crate::fe::poly::legendre;
use crate::fe::{facet_quadrature, quadrature, BasisValues, FeFunction, MixedSpace};
use crate::mesh::{apply_inv_transpose, FacetLabel, Point2};

/// Facet moments `int_f w . n_owner L_j(t) ds` of every facet, followed by
/// the cell moments `int_K w . DF^-T v_l` for the reference interior tests.
/// The facet integrand receives `(facet, t, owner basis, owner normal)`;
/// facets with weight `None` get zero moments.
fn velocity_dofs_of(
    space: &MixedSpace,
    mut facet_integrand: impl FnMut(usize, f64, &BasisValues, Point2) -> f64,
    mut cell_integrand: impl FnMut(usize, &BasisValues) -> Point2,
    facet_weight: impl Fn(usize) -> Option<f64>,
) -> Vec<f64> {
    let mesh = &space.mesh;
    let k = space.order;
    let el = &space.reference;
    let mut coeffs = vec![0.0; space.n_velocity_dofs()];
    let frule = facet_quadrature(interpolation_degree(space)).expect("degree within range");
    let mut bv = BasisValues::default();
    for f in 0..mesh.n_facets() {
        let Some(scale) = facet_weight(f) else { continue };
        let owner = mesh.facets[f].owner();
        let geo = space.geometry(owner.cell);
        for (t, w) in frule.iter() {
            let fp = tabulate_facet(space, f, owner, &geo, t, w, &mut bv);
            let value = scale * facet_integrand(f, t, &bv, fp.normal) * fp.ds;
            for j in 0..=k {
                coeffs[space.dofmap.facet_dof(f, j)] += value * legendre(j, t);
            }
        }
    }
    if el.n_interior_dofs() > 0 {
        let rule = quadrature(mesh.cells[0].kind, interpolation_degree(space)).expect("degree within range");
        let n_facet = el.n_facet_dofs();
        for c in 0..mesh.n_cells() {
            let geo = space.geometry(c);
            let dofs = &space.dofmap.velocity_dofs(c)[n_facet..];
            for (xi, w) in rule.iter() {
                space.tabulate(c, &geo, xi, &mut bv);
                let value = cell_integrand(c, &bv) * (w * bv.det);
                for (l, test) in el.interior_test.iter().enumerate() {
                    let covariant = apply_inv_transpose(&bv.jac, test.eval(xi));
                    coeffs[dofs[l]] += value.dot(covariant);
                }
            }
        }
    }
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c /= space.dofmap.velocity_scale(i);
    }
    coeffs
}

/// Raviart-Thomas interpolant `r_h v` defined by the facet and interior
/// moments.
pub fn interpolate_rt(space: &Arc<MixedSpace>, v: impl Fn(Point2) -> Point2) -> FeFunction {
    let coeffs = velocity_dofs_of(
        space,
        |_, _, bv, n| v(bv.x).dot(n),
        |_, bv| v(bv.x),
        |_| Some(1.0),
    );
    space.velocity_function(coeffs)
}

/// Per-cell `L2` projection onto the pressure space.
pub fn project_pressure(space: &Arc<MixedSpace>, q: impl Fn(Point2) -> f64) -> FeFunction {
    let mesh = &space.mesh;
    let nq = space.reference.pressure_dim();
    let rule = quadrature(mesh.cells[0].kind, interpolation_degree(space)).expect("degree within range");
    let mut coeffs = vec![0.0; space.n_pressure_dofs()];
    let mut bv = BasisValues::default();
    for c in 0..mesh.n_cells() {
        let geo = space.geometry(c);
        let mut mass = DMatrix::<f64>::zeros(nq, nq);
        let mut rhs = DVector::<f64>::zeros(nq);
        for (xi, w) in rule.iter() {
            space.tabulate(c, &geo, xi, &mut bv);
            let dx = w * bv.det;
            let value = q(bv.x);
            for l in 0..nq {
                rhs[l] += dx * value * bv.pressure[l];
                for m in 0..nq {
                    mass[(l, m)] += dx * bv.pressure[l] * bv.pressure[m];
                }
            }
        }
        let local = mass
            .cholesky()
            .expect("pressure mass matrix is positive definite")
            .solve(&rhs);
        for (l, g) in space.dofmap.pressure_dofs(c).enumerate() {
            coeffs[g] = local[l];
        }
    }
    space.pressure_function(coeffs)
}

/// `||div(r_h v) - Pi_h(div v)||_{L2}`.
pub fn commuting_defect(
    space: &Arc<MixedSpace>,
    v: impl Fn(Point2) -> Point2,
    div_v: impl Fn(Point2) -> f64,
) -> f64 {
    let rv = interpolate_rt(space, v);
    let pd = project_pressure(space, div_v);
    let mesh = &space.mesh;
    let rule = quadrature(mesh.cells[0].kind, interpolation_degree(space)).expect("degree within range");
    let mut bv = BasisValues::default();
    let mut sum = 0.0;
    for c in 0..mesh.n_cells() {
        let geo = space.geometry(c);
        for (xi, w) in rule.iter() {
            space.tabulate(c, &geo, xi, &mut bv);
            let (_, div) = rv.velocity_at(c, &bv);
            let (p, _) = pd.pressure_at(c, &bv);
            sum += w * bv.det * (div - p).powi(2);
        }
    }
    sum.sqrt()
}

/// Largest residual of the defining moments of `v_h = r_h v`, relative to
/// the largest moment of `v`: `(facet, interior)`.
pub fn interpolation_residuals(v_h: &FeFunction, v: impl Fn(Point2) -> Point2) -> (f64, f64) {
    let space = &v_h.space;
    let exact = velocity_dofs_of(space, |_, _, bv, n| v(bv.x).dot(n), |_, bv| v(bv.x), |_| Some(1.0));
    let cell_of: Vec<usize> = space.mesh.facets.iter().map(|f| f.owner().cell).collect();
    let discrete = velocity_dofs_of(
        space,
        |f, _, bv, n| v_h.velocity_at(cell_of[f], bv).0.dot(n),
        |c, bv| v_h.velocity_at(c, bv).0,
        |_| Some(1.0),
    );
    let scale = exact.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let n_facet_total = space.mesh.n_facets() * (space.order + 1);
    let max_diff = |r: std::ops::Range<usize>| {
        r.map(|i| (exact[i] - discrete[i]).abs()).fold(0.0, f64::max) / scale
    };
    (
        max_diff(0..n_facet_total),
        max_diff(n_facet_total..exact.len()),
    )
}

/// Velocity built from the jumps, traces and gradient of `q_h` so that
/// `b_m(v_h, q_h)` equals the squared broken norm of `q_h` (Dirichlet traces
/// for `m = 1`, all boundary traces for `m = 0`). Facet weights use `1/h_max`.
pub fn infsup_witness(q_h: &FeFunction, m: u8) -> FeFunction {
    let space = &q_h.space;
    let mesh = &space.mesh;
    let inv_h = 1.0 / mesh.h_max;
    let mut neighbor_values = BasisValues::default();
    let coeffs = velocity_dofs_of(
        space,
        |f, t, bv, _| {
            let facet = &mesh.facets[f];
            let (q, _) = q_h.pressure_at(facet.owner().cell, bv);
            match facet.neighbor() {
                Some(nb) => {
                    // Neighbor values at the same physical point.
                    let xi = mesh.facet_reference_point(f, nb, t);
                    space.tabulate(nb.cell, &space.geometry(nb.cell), xi, &mut neighbor_values);
                    q - q_h.pressure_at(nb.cell, &neighbor_values).0
                }
                None => q,
            }
        },
        |c, bv| q_h.pressure_at(c, bv).1 * -1.0,
        |f| match mesh.facets[f].label {
            FacetLabel::Neumann if m == 1 => None,
            _ => Some(inv_h),
        },
    );
    space.velocity_function(coeffs)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::assembly::{
        assemble_first_formulation, norm_1h, velocity_error_l2, PressureNorm,
    };
    use crate::cases::{case_zero, BoundaryKind, MeshFamily};
    use crate::mesh::{build_unit_square_quad, build_unit_square_tri, classify_facets};

    fn space(family: MeshFamily, boundary: BoundaryKind, level: usize, k: usize) -> Arc<MixedSpace> {
        let mesh = classify_facets(family.build(level).unwrap(), &boundary.spec()).unwrap();
        Arc::new(MixedSpace::new(Arc::new(mesh), k).unwrap())
    }

    const FAMILIES: [MeshFamily; 3] = [
        MeshFamily::UnitSquareTri,
        MeshFamily::UnitSquareQuad,
        MeshFamily::QuarterAnnulus { geom_degree: 2 },
    ];

    #[test]
    fn reproduces_members() {
        let sp = space(MeshFamily::UnitSquareTri, BoundaryKind::PureNeumann, 3, 0);
        let radial = |p: Point2| p;
        let rv = interpolate_rt(&sp, radial);
        assert!(velocity_error_l2(&rv, &radial) < 1e-12);
        let again = interpolate_rt(&sp, |p| rv_eval(&rv, p));
        for (a, b) in rv.coefficients.iter().zip(&again.coefficients) {
            assert!((a - b).abs() < 1e-12);
        }
        // Constants are only members of the mapped space on affine cells.
        for family in [MeshFamily::UnitSquareTri, MeshFamily::UnitSquareQuad] {
            for k in 0..=2 {
                let sp = space(family, BoundaryKind::PureNeumann, 2, k);
                let c = |_| Point2::new(1.0, 0.0);
                assert!(velocity_error_l2(&interpolate_rt(&sp, c), &c) < 1e-12, "{family:?} {k}");
            }
        }
    }

    /// Evaluates `v_h` at a physical point of the unit square by locating the
    /// containing triangle.
    fn rv_eval(v_h: &FeFunction, p: Point2) -> Point2 {
        let mesh = v_h.mesh();
        for c in 0..mesh.n_cells() {
            let ids = &mesh.cells[c].vertex_ids;
            let (a, b, d) = (mesh.points[ids[0]], mesh.points[ids[1]], mesh.points[ids[2]]);
            let m = [[b.x - a.x, d.x - a.x], [b.y - a.y, d.y - a.y]];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let r = p - a;
            let s = (m[1][1] * r.x - m[0][1] * r.y) / det;
            let t = (-m[1][0] * r.x + m[0][0] * r.y) / det;
            if s >= -1e-12 && t >= -1e-12 && s + t <= 1.0 + 1e-12 {
                return v_h.eval_velocity(c, Point2::new(s, t)).0;
            }
        }
        panic!("point outside mesh");
    }

    #[test]
    fn first_order_interpolation_rate() {
        let v = |p: Point2| Point2::new(p.x.sin(), p.y.cos());
        let err = |n| {
            let sp = space(MeshFamily::UnitSquareTri, BoundaryKind::PureNeumann, n, 0);
            velocity_error_l2(&interpolate_rt(&sp, v), &v)
        };
        let ratio = err(8) / err(16);
        assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn moments_are_matched() {
        let v = |p: Point2| Point2::new((p.x * p.y).exp(), (2.0 * p.x).sin() - p.y);
        for family in FAMILIES {
            for k in 0..=2 {
                let sp = space(family, BoundaryKind::PureNeumann, 3, k);
                let (facet, interior) = interpolation_residuals(&interpolate_rt(&sp, v), v);
                assert!(facet < 1e-10 && interior < 1e-10, "{family:?} {k}: {facet} {interior}");
            }
        }
    }

    #[test]
    fn pressure_projection() {
        let mesh = build_unit_square_quad(1).unwrap();
        let sp = Arc::new(MixedSpace::new(Arc::new(mesh), 0).unwrap());
        let q = project_pressure(&sp, |p| p.x.powi(3) * p.y);
        let (value, _) = q.eval_pressure(0, Point2::new(0.3, 0.6));
        assert!((value - 0.125).abs() < 1e-14);

        for family in FAMILIES {
            for k in 0..=2 {
                let sp = space(family, BoundaryKind::PureNeumann, 2, k);
                let c = project_pressure(&sp, |_| 2.5);
                let (v, _) = c.eval_pressure(1, Point2::new(0.2, 0.3));
                assert!((v - 2.5).abs() < 1e-12);
            }
        }
        let mesh = build_unit_square_tri(3).unwrap();
        let sp = Arc::new(MixedSpace::new(Arc::new(mesh), 2).unwrap());
        let poly = |p: Point2| 1.0 + p.x * p.y - 3.0 * p.y * p.y;
        let q = project_pressure(&sp, poly);
        let xi = Point2::new(0.1, 0.7);
        let x = sp.geometry(4).map(xi);
        assert!((q.eval_pressure(4, xi).0 - poly(x)).abs() < 1e-12);
    }

    #[test]
    fn commuting_diagram_on_affine_meshes() {
        type Field = (fn(Point2) -> Point2, fn(Point2) -> f64);
        let fields: [Field; 2] = [
            (|p| Point2::new(p.x * p.x, p.x * p.y), |p| 3.0 * p.x),
            (|p| Point2::new(p.x.exp() * p.y.sin(), 0.0), |p| p.x.exp() * p.y.sin()),
        ];
        for family in [MeshFamily::UnitSquareTri, MeshFamily::UnitSquareQuad] {
            for k in 0..=2 {
                let sp = space(family, BoundaryKind::PureNeumann, 4, k);
                for (v, div) in fields {
                    let d = commuting_defect(&sp, v, div);
                    assert!(d < 1e-10, "{family:?} k={k}: {d}");
                }
            }
        }
        let sp = space(MeshFamily::UnitSquareQuad, BoundaryKind::PureNeumann, 4, 1);
        let u = |p: Point2| Point2::new(p.x.cos() * p.y.cosh(), p.x.sin() * p.y.sinh());
        // Divergence-free fields interpolate to divergence-free fields.
        assert!(commuting_defect(&sp, u, |_| 0.0) < 1e-10);
    }

    fn random_pressure(sp: &Arc<MixedSpace>, rng: &mut ChaCha8Rng) -> FeFunction {
        sp.pressure_function((0..sp.n_pressure_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    /// `q^T B v` with `B` the assembled second-row block.
    fn b_form(sp: &Arc<MixedSpace>, boundary: BoundaryKind, family: MeshFamily, m: u8, v: &FeFunction, q: &FeFunction) -> f64 {
        let case = case_zero(family, boundary);
        let s = assemble_first_formulation(sp, m, 1.0, &case).unwrap();
        let b = s.matrix.block(s.pressure_range(), s.velocity_range());
        b.bilinear(&q.coefficients, &v.coefficients)
    }

    #[test]
    fn witness_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for family in [MeshFamily::UnitSquareTri, MeshFamily::UnitSquareQuad] {
            for boundary in [BoundaryKind::PureNeumann, BoundaryKind::DirichletBottom] {
                for k in 0..=2 {
                    let sp = space(family, boundary, 4, k);
                    let q = random_pressure(&sp, &mut rng);
                    for (m, variant) in [(1, PressureNorm::NitscheSym), (0, PressureNorm::Penalty)] {
                        let v = infsup_witness(&q, m);
                        let lhs = b_form(&sp, boundary, family, m, &v, &q);
                        let rhs = norm_1h(&q, variant).powi(2);
                        assert!((lhs / rhs - 1.0).abs() < 1e-9, "{family:?} {boundary:?} k={k} m={m}: {lhs} vs {rhs}");
                    }
                }
            }
        }
    }

    #[test]
    fn witness_of_constant_vanishes() {
        let sp = space(MeshFamily::UnitSquareQuad, BoundaryKind::PureNeumann, 4, 1);
        let q = project_pressure(&sp, |_| 3.0);
        assert!(norm_1h(&q, PressureNorm::NitscheSym) < 1e-12);
        let v = infsup_witness(&q, 1);
        assert!(v.coefficients.iter().all(|c| c.abs() < 1e-12));
    }
}
