use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::cases::{case_unit_square_quad, case_unit_square_tri, case_zero, BoundaryKind, MeshFamily};
use crate::fe::MixedSpace;

fn space(case: &ManufacturedCase, level: usize, k: usize) -> Arc<MixedSpace> {
    Arc::new(MixedSpace::new(Arc::new(case.mesh(level).unwrap()), k).unwrap())
}

#[test]
fn symmetry_follows_formulation() {
    for case in [case_unit_square_tri(), case_unit_square_quad()] {
        for k in 0..=2 {
            let sp = space(&case, 3, k);
            let gamma = default_gamma(&sp.mesh);
            let s1 = assemble_first_formulation(&sp, 1, gamma, &case).unwrap();
            assert!(s1.matrix.asymmetry() < 1e-12 * s1.matrix.max_abs());
            let s0 = assemble_first_formulation(&sp, 0, gamma, &case).unwrap();
            assert!(s0.matrix.asymmetry() > 1e-6 * s0.matrix.max_abs());
            let sp2 = assemble_second_formulation(&sp, default_eps(&sp.mesh, k), &case).unwrap();
            assert!(sp2.matrix.asymmetry() < 1e-12 * sp2.matrix.max_abs());
        }
    }
}

#[test]
fn dimensions_and_mean_constraint() {
    let tri = case_unit_square_tri();
    let sp = space(&tri, 2, 1);
    let s = assemble_first_formulation(&sp, 1, 1.0, &tri).unwrap();
    assert!(s.mean_constraint);
    assert_eq!(s.n_unknowns(), sp.n_velocity_dofs() + sp.n_pressure_dofs() + 1);
    assert!(s.warnings.is_empty(), "{:?}", s.warnings);

    let quad = case_unit_square_quad();
    let sp = space(&quad, 2, 1);
    let s = assemble_second_formulation(&sp, 0.1, &quad).unwrap();
    assert!(!s.mean_constraint);
    assert_eq!(s.n_unknowns(), sp.n_velocity_dofs() + sp.n_pressure_dofs());
}

#[test]
fn invalid_parameters_rejected() {
    let c = case_unit_square_tri();
    let sp = space(&c, 1, 0);
    assert!(matches!(assemble_first_formulation(&sp, 1, 0.0, &c), Err(Error::InvalidParameter(_))));
    assert!(matches!(assemble_first_formulation(&sp, 1, -1.0, &c), Err(Error::InvalidParameter(_))));
    assert!(matches!(assemble_first_formulation(&sp, 2, 1.0, &c), Err(Error::InvalidParameter(_))));
    assert!(matches!(assemble_second_formulation(&sp, 0.0, &c), Err(Error::InvalidParameter(_))));
}

#[test]
fn default_eps_formula() {
    let mesh = crate::mesh::build_unit_square_tri(8).unwrap();
    let h = 2f64.sqrt() / 8.0;
    assert!((default_eps(&mesh, 1) - h * h).abs() < 1e-15);
    assert!((default_gamma(&mesh) - 1.0 / h).abs() < 1e-12);
}

#[test]
fn incompatible_data_warns() {
    // Flux u = (1, 0) has zero net boundary flux but we claim g = 1.
    let mut c = case_zero(MeshFamily::UnitSquareQuad, BoundaryKind::PureNeumann);
    c.divergence = |_| 1.0;
    let sp = space(&c, 2, 0);
    let s = assemble_first_formulation(&sp, 1, 1.0, &c).unwrap();
    assert_eq!(s.warnings.len(), 1);
}

#[test]
fn unclassified_mesh_rejected() {
    let mesh = Arc::new(crate::mesh::build_unit_square_quad(2).unwrap());
    let sp = Arc::new(MixedSpace::new(mesh, 0).unwrap());
    assert!(assemble_first_formulation(&sp, 1, 1.0, &case_unit_square_quad()).is_err());
}

#[test]
fn coercivity_identity_random_velocity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in [case_unit_square_tri(), case_unit_square_quad()] {
        for k in 0..=2 {
            let sp = space(&case, 3, k);
            let gamma = default_gamma(&sp.mesh);
            let nu = sp.n_velocity_dofs();
            let v: Vec<f64> = (0..nu).map(|_| rng.random_range(-1.0..1.0)).collect();
            for (form, weight) in [(Formulation::NitscheSym, gamma), (Formulation::Penalty, 1.0 / default_eps(&sp.mesh, k))] {
                let s = assemble_system(&sp, form, weight, &case).unwrap();
                let a = s.matrix.block(0..nu, 0..nu);
                let lhs = a.bilinear(&v, &v);
                let rhs = norm_0h(&sp.velocity_function(v.clone()), weight).powi(2);
                assert!((lhs - rhs).abs() <= 1e-12 * rhs, "{lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn constant_pressure_norms() {
    let c = 0.7;
    let tri = case_unit_square_tri();
    let sp = space(&tri, 4, 1);
    let mut coeffs = vec![0.0; sp.n_pressure_dofs()];
    // The first reference pressure function is the normalized constant.
    let psi0 = sp.reference.pressure[0].eval(crate::mesh::Point2::new(0.2, 0.2));
    for c_id in 0..sp.mesh.n_cells() {
        coeffs[sp.dofmap.pressure_dofs(c_id).start] = c / psi0;
    }
    let q = sp.pressure_function(coeffs);
    assert!(norm_1h(&q, PressureNorm::NitscheSym) < 1e-12);
    let expected = 4.0 * c * c / sp.mesh.h_max;
    let got = norm_1h(&q, PressureNorm::Penalty).powi(2);
    assert!((got - expected).abs() < 1e-12 * expected, "{got} vs {expected}");
}
