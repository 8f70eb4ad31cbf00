//! Structured meshes of the four study domains, facet topology, boundary
//! classification and per-cell geometry maps.

mod builders;
mod geometry;
mod io;

use std::collections::HashMap;
use std::sync::Arc;

pub use builders::{
    build_quarter_annulus_quad, build_unit_circle_tri, build_unit_square_quad,
    build_unit_square_tri,
};
pub use geometry::{apply, apply_inv_transpose, det, GeometryMap, Jacobian, Point2};

use crate::fe::quadrature::gauss_legendre;
use crate::{Error, Result};

/// Default bound on `max h_K / rho_K` reported by [`Mesh::shape_regularity`].
pub const SHAPE_REGULARITY_BOUND: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellKind {
    Triangle,
    Quad,
}

impl CellKind {
    pub fn n_vertices(self) -> usize {
        match self {
            CellKind::Triangle => 3,
            CellKind::Quad => 4,
        }
    }

    pub fn n_facets(self) -> usize {
        self.n_vertices()
    }

    /// Measure of the reference cell.
    pub fn reference_measure(self) -> f64 {
        match self {
            CellKind::Triangle => 0.5,
            CellKind::Quad => 1.0,
        }
    }

    pub fn reference_vertices(self) -> &'static [Point2] {
        const TRI: [Point2; 3] = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        const QUAD: [Point2; 4] = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        match self {
            CellKind::Triangle => &TRI,
            CellKind::Quad => &QUAD,
        }
    }

    /// Endpoints of local edge `i`, traversed counter-clockwise.
    pub fn reference_edge(self, i: usize) -> (Point2, Point2) {
        let v = self.reference_vertices();
        (v[i], v[(i + 1) % v.len()])
    }

    /// Point at parameter `t` along local edge `i`.
    pub fn edge_point(self, i: usize, t: f64) -> Point2 {
        let (a, b) = self.reference_edge(i);
        a.lerp(b, t)
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub kind: CellKind,
    /// Corner vertices, counter-clockwise.
    pub vertex_ids: Vec<usize>,
    /// Geometry nodes; the vertices for triangles, tensor-ordered Lagrange
    /// nodes for quadrilaterals.
    pub geom_node_ids: Vec<usize>,
    /// Global facet of each local edge.
    pub facet_ids: Vec<usize>,
    /// Whether local edge `i` is traversed against the facet's vertex order.
    pub facet_reversed: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FacetLabel {
    Interior,
    /// Boundary facet not yet classified.
    Boundary,
    Neumann,
    Dirichlet,
}

impl FacetLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FacetLabel::Interior => "interior",
            FacetLabel::Boundary => "boundary",
            FacetLabel::Neumann => "neumann",
            FacetLabel::Dirichlet => "dirichlet",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FacetSide {
    pub cell: usize,
    pub local: usize,
}

#[derive(Clone, Debug)]
pub struct Facet {
    /// Endpoints in the owner's counter-clockwise traversal order.
    pub vertex_ids: [usize; 2],
    /// Owner first: the adjacent cell with the smaller id. Its outward
    /// normal is the global facet normal.
    pub sides: Vec<FacetSide>,
    pub label: FacetLabel,
}

impl Facet {
    pub fn owner(&self) -> FacetSide {
        self.sides[0]
    }

    pub fn neighbor(&self) -> Option<FacetSide> {
        self.sides.get(1).copied()
    }

    pub fn is_boundary(&self) -> bool {
        self.sides.len() == 1
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub points: Vec<Point2>,
    pub cells: Vec<Cell>,
    pub facets: Vec<Facet>,
    pub geom_degree: usize,
    pub h_max: f64,
    pub h_min: f64,
    /// `max_K h_K / rho_K`.
    pub shape_regularity: f64,
    /// Set by [`classify_facets`] when no facet is Dirichlet.
    pub pure_neumann: bool,
}

impl Mesh {
    /// Builds facet topology and geometric diagnostics from raw cells.
    pub(crate) fn from_cells(
        points: Vec<Point2>,
        raw: Vec<(CellKind, Vec<usize>, Vec<usize>)>,
        geom_degree: usize,
    ) -> Result<Mesh> {
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("non-finite mesh point {p:?}")));
        }
        let mut facets: Vec<Facet> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cells = Vec::with_capacity(raw.len());
        for (cell_id, (kind, vertex_ids, geom_node_ids)) in raw.into_iter().enumerate() {
            if vertex_ids.len() != kind.n_vertices() {
                return Err(Error::invalid(format!(
                    "cell {cell_id}: {} vertices for {kind:?}",
                    vertex_ids.len()
                )));
            }
            let nv = vertex_ids.len();
            let mut facet_ids = Vec::with_capacity(nv);
            let mut facet_reversed = Vec::with_capacity(nv);
            for local in 0..nv {
                let a = vertex_ids[local];
                let b = vertex_ids[(local + 1) % nv];
                let key = (a.min(b), a.max(b));
                let side = FacetSide { cell: cell_id, local };
                match lookup.get(&key) {
                    Some(&f) => {
                        let facet = &mut facets[f];
                        if facet.sides.len() != 1 {
                            return Err(Error::Configuration(format!(
                                "edge {a}-{b} shared by more than two cells"
                            )));
                        }
                        facet.sides.push(side);
                        facet.label = FacetLabel::Interior;
                        facet_ids.push(f);
                        facet_reversed.push(facet.vertex_ids != [a, b]);
                    }
                    None => {
                        lookup.insert(key, facets.len());
                        facet_ids.push(facets.len());
                        facet_reversed.push(false);
                        facets.push(Facet {
                            vertex_ids: [a, b],
                            sides: vec![side],
                            label: FacetLabel::Boundary,
                        });
                    }
                }
            }
            cells.push(Cell {
                kind,
                vertex_ids,
                geom_node_ids,
                facet_ids,
                facet_reversed,
            });
        }

        let mut mesh = Mesh {
            points,
            cells,
            facets,
            geom_degree,
            h_max: 0.0,
            h_min: f64::INFINITY,
            shape_regularity: 0.0,
            pure_neumann: false,
        };
        mesh.check_orientation()?;
        for c in 0..mesh.cells.len() {
            let (h, rho) = mesh.cell_diameters(c);
            mesh.h_max = mesh.h_max.max(h);
            mesh.h_min = mesh.h_min.min(h);
            mesh.shape_regularity = mesh.shape_regularity.max(h / rho);
        }
        if mesh.shape_regularity > SHAPE_REGULARITY_BOUND {
            log::warn!(
                "shape regularity {:.3} exceeds bound {SHAPE_REGULARITY_BOUND}",
                mesh.shape_regularity
            );
        }
        Ok(mesh)
    }

    fn check_orientation(&self) -> Result<()> {
        for c in 0..self.cells.len() {
            let geo = self.geometry(c);
            for s in 0..25 {
                let xi = Point2::new((s % 5) as f64 / 4.0, (s / 5) as f64 / 4.0);
                if self.cells[c].kind == CellKind::Triangle && xi.x + xi.y > 1.0 {
                    continue;
                }
                let d = det(&geo.jacobian(xi));
                if d <= 0.0 || !d.is_finite() {
                    return Err(Error::DegenerateCell { cell: c, det: d });
                }
            }
        }
        Ok(())
    }

    /// `(h_K, rho_K)` from the corner vertices.
    fn cell_diameters(&self, c: usize) -> (f64, f64) {
        let cell = &self.cells[c];
        let v: Vec<Point2> = cell.vertex_ids.iter().map(|&i| self.points[i]).collect();
        let mut h: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                h = h.max(v[i].dist(v[j]));
            }
        }
        let rho = match cell.kind {
            CellKind::Triangle => {
                let area = 0.5 * ((v[1] - v[0]).x * (v[2] - v[0]).y - (v[1] - v[0]).y * (v[2] - v[0]).x);
                let perimeter = v[0].dist(v[1]) + v[1].dist(v[2]) + v[2].dist(v[0]);
                4.0 * area / perimeter
            }
            CellKind::Quad => {
                let centroid = (v[0] + v[1] + v[2] + v[3]) * 0.25;
                let min_dist = (0..4)
                    .map(|i| {
                        let a = v[i];
                        let b = v[(i + 1) % 4];
                        let t = b - a;
                        ((centroid - a).x * t.y - (centroid - a).y * t.x).abs() / t.norm()
                    })
                    .fold(f64::INFINITY, f64::min);
                2.0 * min_dist
            }
        };
        (h, rho)
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn geometry(&self, c: usize) -> GeometryMap {
        let cell = &self.cells[c];
        GeometryMap {
            kind: cell.kind,
            degree: match cell.kind {
                CellKind::Triangle => 1,
                CellKind::Quad => self.geom_degree,
            },
            nodes: cell.geom_node_ids.iter().map(|&i| self.points[i]).collect(),
        }
    }

    /// Reference point on the owner cell for global facet parameter `t`.
    pub fn facet_reference_point(&self, f: usize, side: FacetSide, t: f64) -> Point2 {
        let cell = &self.cells[side.cell];
        let t_local = if cell.facet_reversed[side.local] { 1.0 - t } else { t };
        debug_assert_eq!(cell.facet_ids[side.local], f);
        cell.kind.edge_point(side.local, t_local)
    }

    /// Physical point at global facet parameter `t`.
    pub fn facet_point(&self, f: usize, t: f64) -> Point2 {
        let owner = self.facets[f].owner();
        let xi = self.facet_reference_point(f, owner, t);
        self.geometry(owner.cell).map(xi)
    }

    pub fn facet_midpoint(&self, f: usize) -> Point2 {
        self.facet_point(f, 0.5)
    }

    /// Tangent `dx/dt` along the global facet direction at parameter `t`.
    pub fn facet_tangent(&self, f: usize, t: f64) -> Point2 {
        let owner = self.facets[f].owner();
        let kind = self.cells[owner.cell].kind;
        let (a, b) = kind.reference_edge(owner.local);
        let xi = self.facet_reference_point(f, owner, t);
        apply(&self.geometry(owner.cell).jacobian(xi), b - a)
    }

    /// Unit normal, outward from the owner cell.
    pub fn facet_normal(&self, f: usize, t: f64) -> Point2 {
        let n = self.facet_tangent(f, t).rot_cw();
        n * (1.0 / n.norm())
    }

    /// Arc length (exact up to quadrature for curved isoparametric facets).
    pub fn facet_length(&self, f: usize) -> f64 {
        let rule = gauss_legendre(8);
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| w * self.facet_tangent(f, t).norm())
            .sum()
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.facets.len()).filter(|&f| self.facets[f].is_boundary())
    }

    pub fn facets_with_label(&self, label: FacetLabel) -> impl Iterator<Item = usize> + '_ {
        (0..self.facets.len()).filter(move |&f| self.facets[f].label == label)
    }

    pub fn count_label(&self, label: FacetLabel) -> usize {
        self.facets_with_label(label).count()
    }
}

type FacetPredicate = Arc<dyn Fn(Point2) -> bool + Send + Sync>;

/// Predicate-based partition of the boundary into Neumann and Dirichlet parts,
/// evaluated at facet midpoints.
#[derive(Clone, Default)]
pub struct BoundarySpec {
    rules: Vec<(FacetLabel, FacetPredicate)>,
}

impl std::fmt::Debug for BoundarySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let labels: Vec<_> = self.rules.iter().map(|(l, _)| *l).collect();
        f.debug_struct("BoundarySpec").field("rules", &labels).finish()
    }
}

impl BoundarySpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every boundary facet is Neumann.
    pub fn pure_neumann() -> Self {
        Self::new().with(FacetLabel::Neumann, |_| true)
    }

    /// Facets whose midpoint satisfies `pred` get `label`. Rules must not
    /// overlap.
    pub fn with(
        mut self,
        label: FacetLabel,
        pred: impl Fn(Point2) -> bool + Send + Sync + 'static,
    ) -> Self {
        assert!(matches!(label, FacetLabel::Neumann | FacetLabel::Dirichlet));
        self.rules.push((label, Arc::new(pred)));
        self
    }

    fn label_for(&self, p: Point2) -> Result<FacetLabel> {
        let mut hits = self.rules.iter().filter(|(_, pred)| pred(p)).map(|(l, _)| *l);
        match (hits.next(), hits.next()) {
            (Some(l), None) => Ok(l),
            (None, _) => Err(Error::Configuration(format!(
                "boundary facet at ({:.6}, {:.6}) matches no boundary rule",
                p.x, p.y
            ))),
            (Some(_), Some(_)) => Err(Error::Configuration(format!(
                "boundary facet at ({:.6}, {:.6}) matches several boundary rules",
                p.x, p.y
            ))),
        }
    }
}

/// Labels every boundary facet Neumann or Dirichlet according to `spec`.
pub fn classify_facets(mut mesh: Mesh, spec: &BoundarySpec) -> Result<Mesh> {
    let boundary: Vec<usize> = mesh.boundary_facets().collect();
    for f in boundary {
        let label = spec.label_for(mesh.facet_midpoint(f))?;
        mesh.facets[f].label = label;
    }
    mesh.pure_neumann = mesh.count_label(FacetLabel::Dirichlet) == 0;
    Ok(mesh)
}

#[cfg(test)]
mod tests;
