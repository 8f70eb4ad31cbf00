use crate::mesh::Mesh;

use super::ReferenceElement;

/// Global numbering of the mixed space.
///
/// Velocity: facet moments first (`f (k+1) + j`), then interior moments cell
/// by cell. Pressure dofs are cell-local and numbered separately from zero.
/// A facet moment seen from a cell carries a sign: `-1` for the outward
/// normal opposite to the global one, times `(-1)^j` when the cell traverses
/// the edge against the global parameter direction.
///
/// Global basis functions are additionally scaled by a length (facet length
/// for facet moments, `sqrt |K|` for interior moments) so that their
/// physical size does not depend on `h`. The moments of a field are divided
/// by the same scale to obtain its coefficients.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub order: usize,
    pub n_velocity_dofs: usize,
    pub n_pressure_dofs: usize,
    velocity_dim: usize,
    pressure_dim: usize,
    velocity: Vec<usize>,
    /// Local sign times global scale.
    factors: Vec<f64>,
    scale: Vec<f64>,
}

impl DofMap {
    pub fn velocity_dofs(&self, cell: usize) -> &[usize] {
        &self.velocity[cell * self.velocity_dim..(cell + 1) * self.velocity_dim]
    }

    /// Factors applied to the pushed-forward reference basis of `cell`.
    pub fn velocity_factors(&self, cell: usize) -> &[f64] {
        &self.factors[cell * self.velocity_dim..(cell + 1) * self.velocity_dim]
    }

    /// Length scale of global velocity dof `dof`.
    pub fn velocity_scale(&self, dof: usize) -> f64 {
        self.scale[dof]
    }

    pub fn pressure_dofs(&self, cell: usize) -> std::ops::Range<usize> {
        cell * self.pressure_dim..(cell + 1) * self.pressure_dim
    }

    pub fn facet_dof(&self, facet: usize, moment: usize) -> usize {
        facet * (self.order + 1) + moment
    }

    /// Negates the facet signs of one cell side. Only useful to check that
    /// conformity tests catch an orientation error.
    #[doc(hidden)]
    pub fn flip_facet_orientation(&mut self, cell: usize, local_facet: usize) {
        let per = self.order + 1;
        let start = cell * self.velocity_dim + local_facet * per;
        for s in &mut self.factors[start..start + per] {
            *s = -*s;
        }
    }
}

pub fn build_dofmap(mesh: &Mesh, reference: &ReferenceElement) -> DofMap {
    let k = reference.order;
    let per = k + 1;
    let vdim = reference.velocity_dim();
    let n_int = reference.n_interior_dofs();
    let n_facet_total = per * mesh.n_facets();
    let mut velocity = Vec::with_capacity(vdim * mesh.n_cells());
    let mut factors = Vec::with_capacity(vdim * mesh.n_cells());
    let mut scale: Vec<f64> = (0..mesh.n_facets())
        .flat_map(|f| std::iter::repeat_n(mesh.facet_length(f), per))
        .collect();
    for (c, cell) in mesh.cells.iter().enumerate() {
        let area = shoelace_area(mesh, c);
        for (local, &f) in cell.facet_ids.iter().enumerate() {
            let owner = mesh.facets[f].owner().cell == c;
            let normal_sign = if owner { 1.0 } else { -1.0 };
            for j in 0..per {
                let flip = if cell.facet_reversed[local] && j % 2 == 1 { -1.0 } else { 1.0 };
                velocity.push(f * per + j);
                factors.push(normal_sign * flip * scale[f * per + j]);
            }
        }
        for l in 0..n_int {
            velocity.push(n_facet_total + c * n_int + l);
            factors.push(area.sqrt());
            scale.push(area.sqrt());
        }
    }
    DofMap {
        order: k,
        n_velocity_dofs: n_facet_total + n_int * mesh.n_cells(),
        n_pressure_dofs: reference.pressure_dim() * mesh.n_cells(),
        velocity_dim: vdim,
        pressure_dim: reference.pressure_dim(),
        velocity,
        factors,
        scale,
    }
}

/// Area of the straight-sided polygon through the cell's corners.
fn shoelace_area(mesh: &Mesh, c: usize) -> f64 {
    let ids = &mesh.cells[c].vertex_ids;
    let n = ids.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (mesh.points[ids[i]], mesh.points[ids[(i + 1) % n]]);
            a.x * b.y - a.y * b.x
        })
        .sum::<f64>()
}
