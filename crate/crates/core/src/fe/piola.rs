//! Contravariant Piola push-forward `v = DF vhat / det DF`.
//!
//! For isoparametric cells the constant affine matrix is replaced by the
//! pointwise Jacobian; normal fluxes `v . n ds` are preserved either way.

use crate::mesh::{apply, det, GeometryMap, Jacobian, Point2};
use crate::{Error, Result};

/// Pushes reference velocity values and divergences at `ref_point` to the
/// physical cell.
pub fn piola_push(
    geomap: &GeometryMap,
    ref_point: Point2,
    ref_values: &[Point2],
    ref_divergences: &[f64],
) -> Result<(Vec<Point2>, Vec<f64>)> {
    let jac = geomap.jacobian(ref_point);
    let d = det(&jac);
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::DegenerateCell { cell: usize::MAX, det: d });
    }
    let values = ref_values.iter().map(|&v| push_value(&jac, d, v)).collect();
    let divs = ref_divergences.iter().map(|&dv| dv / d).collect();
    Ok((values, divs))
}

#[inline]
pub(crate) fn push_value(jac: &Jacobian, det: f64, v: Point2) -> Point2 {
    apply(jac, v) * (1.0 / det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::CellKind;

    fn tri(nodes: [Point2; 3]) -> GeometryMap {
        GeometryMap {
            kind: CellKind::Triangle,
            degree: 1,
            nodes: nodes.to_vec(),
        }
    }

    #[test]
    fn identity_map_is_identity() {
        let g = tri([Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]);
        let v = [Point2::new(0.3, -1.2)];
        let (pv, pd) = piola_push(&g, Point2::new(0.2, 0.2), &v, &[2.5]).unwrap();
        assert_eq!(pv[0], v[0]);
        assert_eq!(pd[0], 2.5);
    }

    #[test]
    fn uniform_scaling_by_two() {
        let g = tri([Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 2.0)]);
        let v = [Point2::new(1.0, 3.0)];
        let (pv, pd) = piola_push(&g, Point2::new(0.1, 0.1), &v, &[8.0]).unwrap();
        assert!((pv[0] - Point2::new(0.5, 1.5)).norm() < 1e-15);
        assert!((pd[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn inverted_cell_rejected() {
        let g = tri([Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), Point2::new(1.0, 0.0)]);
        assert!(matches!(
            piola_push(&g, Point2::new(0.1, 0.1), &[], &[]),
            Err(Error::DegenerateCell { .. })
        ));
    }
}
