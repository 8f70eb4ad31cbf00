use std::io::Write;

use super::{CellKind, Mesh};

impl Mesh {
    /// Plain-text dump with `POINTS`, `CELLS` and `FACETS` sections.
    ///
    /// Cell records are `tri|quad <vertex ids>`; facet records are
    /// `<v0> <v1> <label> <cell ids>`, owner first.
    pub fn write_text(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "POINTS {}", self.points.len())?;
        for p in &self.points {
            writeln!(w, "{:.17e} {:.17e}", p.x, p.y)?;
        }
        writeln!(w, "CELLS {}", self.cells.len())?;
        for cell in &self.cells {
            let kind = match cell.kind {
                CellKind::Triangle => "tri",
                CellKind::Quad => "quad",
            };
            write!(w, "{kind}")?;
            for v in &cell.vertex_ids {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        writeln!(w, "FACETS {}", self.facets.len())?;
        for facet in &self.facets {
            write!(
                w,
                "{} {} {}",
                facet.vertex_ids[0],
                facet.vertex_ids[1],
                facet.label.as_str()
            )?;
            for side in &facet.sides {
                write!(w, " {}", side.cell)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
