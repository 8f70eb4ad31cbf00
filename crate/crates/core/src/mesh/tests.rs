use super::*;

fn max_abs_diff(a: Point2, b: Point2) -> f64 {
    (a.x - b.x).abs().max((a.y - b.y).abs())
}

#[test]
fn unit_square_tri_counts() {
    let m = build_unit_square_tri(1).unwrap();
    assert_eq!((m.points.len(), m.n_cells(), m.n_facets()), (4, 2, 5));
    let m = build_unit_square_tri(2).unwrap();
    assert_eq!((m.points.len(), m.n_cells(), m.n_facets()), (9, 8, 16));
    assert!((m.h_max - 2f64.sqrt() / 2.0).abs() < 1e-14);
}

#[test]
fn unit_square_quad_counts() {
    let m = build_unit_square_quad(1).unwrap();
    assert_eq!(m.boundary_facets().count(), 4);
    assert_eq!(m.count_label(FacetLabel::Interior), 0);
    let m = build_unit_square_quad(2).unwrap();
    assert_eq!(m.n_facets(), 12);
    assert_eq!(m.boundary_facets().count(), 8);
    assert_eq!(m.count_label(FacetLabel::Interior), 4);
    assert!(m.geometry(0).is_affine());
}

#[test]
fn unit_circle_boundary_on_circle() {
    for level in 0..4 {
        let m = build_unit_circle_tri(level).unwrap();
        let mut on_circle = std::collections::HashSet::new();
        for f in m.boundary_facets() {
            for &v in &m.facets[f].vertex_ids {
                assert!((m.points[v].norm() - 1.0).abs() < 1e-14);
                on_circle.insert(v);
            }
        }
        assert_eq!(on_circle.len(), 8 << level);
        let euler = m.points.len() as i64 - m.n_facets() as i64 + m.n_cells() as i64;
        assert_eq!(euler, 1);
        assert!(m.shape_regularity < SHAPE_REGULARITY_BOUND);
    }
    assert!(build_unit_circle_tri(13).is_err());
}

#[test]
fn circle_h_roughly_halves() {
    let hs: Vec<f64> = (1..6).map(|l| build_unit_circle_tri(l).unwrap().h_max).collect();
    for w in hs.windows(2) {
        assert!(w[1] / w[0] <= 0.6, "{hs:?}");
    }
}

#[test]
fn quarter_annulus_geometry() {
    let m = build_quarter_annulus_quad(4, 2).unwrap();
    for c in 0..m.n_cells() {
        let geo = m.geometry(c);
        for &(a, b) in &[(0.0, 0.0), (1.0, 1.0), (0.5, 0.5), (0.2, 0.9)] {
            assert!(det(&geo.jacobian(Point2::new(a, b))) > 0.0);
        }
        // Mid-edge geometry nodes lie on the exact arc radius.
        let mid = geo.map(Point2::new(0.0, 0.5));
        let corner_a = geo.map(Point2::new(0.0, 0.0));
        assert!((mid.norm() - corner_a.norm()).abs() < 1e-14);
    }
    let corners = [Point2::new(1.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 2.0), Point2::new(0.0, 1.0)];
    for corner in corners {
        assert!(m.points.iter().any(|p| max_abs_diff(*p, corner) < 1e-14));
    }
    assert!(!m.geometry(0).is_affine());

    let m = build_quarter_annulus_quad(16, 2).unwrap();
    let perimeter: f64 = m.boundary_facets().map(|f| m.facet_length(f)).sum();
    let exact = 2.0 + 1.5 * std::f64::consts::PI;
    assert!((perimeter - exact).abs() < 1e-3, "{perimeter} vs {exact}");
    assert!(build_quarter_annulus_quad(4, 3).is_err());
}

#[test]
fn classification_examples() {
    let spec = BoundarySpec::new()
        .with(FacetLabel::Dirichlet, |p| p.y.abs() < 1e-9)
        .with(FacetLabel::Neumann, |p| p.y.abs() >= 1e-9);
    let m = classify_facets(build_unit_square_quad(4).unwrap(), &spec).unwrap();
    assert_eq!(m.count_label(FacetLabel::Dirichlet), 4);
    assert_eq!(m.count_label(FacetLabel::Neumann), 12);
    assert!(!m.pure_neumann);

    let m = classify_facets(build_unit_square_tri(3).unwrap(), &BoundarySpec::pure_neumann()).unwrap();
    assert!(m.pure_neumann);
    assert_eq!(m.count_label(FacetLabel::Neumann), 12);
    assert_eq!(m.count_label(FacetLabel::Boundary), 0);

    let gap = BoundarySpec::new().with(FacetLabel::Dirichlet, |p| p.x < 1e-9);
    assert!(classify_facets(build_unit_square_tri(2).unwrap(), &gap).is_err());
    let overlap = BoundarySpec::pure_neumann().with(FacetLabel::Dirichlet, |_| true);
    assert!(classify_facets(build_unit_square_tri(2).unwrap(), &overlap).is_err());
}

#[test]
fn normals_are_outward_and_antisymmetric() {
    let m = build_unit_circle_tri(2).unwrap();
    for f in 0..m.n_facets() {
        let facet = &m.facets[f];
        let n = m.facet_normal(f, 0.5);
        let mid = m.facet_midpoint(f);
        let centroid = |c: usize| {
            let ids = &m.cells[c].vertex_ids;
            ids.iter().fold(Point2::default(), |acc, &i| acc + m.points[i]) * (1.0 / ids.len() as f64)
        };
        assert!(n.dot(mid - centroid(facet.owner().cell)) > 0.0);
        if let Some(nb) = facet.neighbor() {
            assert!(facet.owner().cell < nb.cell);
            assert!(n.dot(mid - centroid(nb.cell)) < 0.0);
            // Both sides see the same physical points.
            for t in [0.0, 0.3, 1.0] {
                let a = m.geometry(facet.owner().cell).map(m.facet_reference_point(f, facet.owner(), t));
                let b = m.geometry(nb.cell).map(m.facet_reference_point(f, nb, t));
                assert!(max_abs_diff(a, b) < 1e-14);
            }
        } else {
            assert!(n.dot(mid) > 0.0);
        }
    }
}

#[test]
fn square_refinement_shrinks_h() {
    for build in [build_unit_square_tri, build_unit_square_quad] {
        let h: Vec<f64> = [2, 4, 8].iter().map(|&n| build(n).unwrap().h_max).collect();
        assert!((h[1] / h[0] - 0.5).abs() < 1e-12 && (h[2] / h[1] - 0.5).abs() < 1e-12);
    }
    assert!(build_unit_square_tri(0).is_err());
}

#[test]
fn text_output_lists_sections() {
    let m = build_unit_square_tri(1).unwrap();
    let mut buf = Vec::new();
    m.write_text(&mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("POINTS 4\n"));
    assert!(s.contains("CELLS 2\n") && s.contains("FACETS 5\n"));
}
