use std::f64::consts::{FRAC_PI_2, PI};

use super::{CellKind, Mesh, Point2};
use crate::{Error, Result};

fn grid_index(i: usize, j: usize, n: usize) -> usize {
    i + (n + 1) * j
}

fn unit_grid_points(n: usize) -> Vec<Point2> {
    let mut points = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            points.push(Point2::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    points
}

/// Unit square split into `2 n^2` triangles, every grid square cut along
/// the same (south-west to north-east) diagonal.
pub fn build_unit_square_tri(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("unit square needs n >= 1"));
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = grid_index(i, j, n);
            let b = grid_index(i + 1, j, n);
            let c = grid_index(i + 1, j + 1, n);
            let d = grid_index(i, j + 1, n);
            cells.push((CellKind::Triangle, vec![a, b, c], vec![a, b, c]));
            cells.push((CellKind::Triangle, vec![a, c, d], vec![a, c, d]));
        }
    }
    Mesh::from_cells(unit_grid_points(n), cells, 1)
}

/// Unit square split into `n^2` axis-aligned squares.
pub fn build_unit_square_quad(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("unit square needs n >= 1"));
    }
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let a = grid_index(i, j, n);
            let b = grid_index(i + 1, j, n);
            let c = grid_index(i + 1, j + 1, n);
            let d = grid_index(i, j + 1, n);
            cells.push((CellKind::Quad, vec![a, b, c, d], vec![a, b, d, c]));
        }
    }
    Mesh::from_cells(unit_grid_points(n), cells, 1)
}

/// Triangulated polygon inscribed in the unit circle.
///
/// `R = 2^level` concentric rings; ring `i` has `8 i` vertices at radius
/// `i / R`, so the boundary carries `8 * 2^level` vertices on the circle.
/// Consecutive rings are stitched sector by sector, always advancing along
/// the ring whose next vertex has the smaller angle.
pub fn build_unit_circle_tri(level: usize) -> Result<Mesh> {
    if level > 12 {
        return Err(Error::invalid(format!("circle level {level} too large")));
    }
    let rings = 1usize << level;
    let mut points = vec![Point2::new(0.0, 0.0)];
    let mut ring_start = vec![0usize];
    for i in 1..=rings {
        ring_start.push(points.len());
        let count = 8 * i;
        let radius = i as f64 / rings as f64;
        for j in 0..count {
            let theta = 2.0 * PI * j as f64 / count as f64;
            points.push(Point2::new(radius * theta.cos(), radius * theta.sin()));
        }
    }
    let ring_point = |i: usize, j: usize| -> usize {
        if i == 0 {
            0
        } else {
            ring_start[i] + j % (8 * i)
        }
    };
    let angle = |i: usize, j: usize| -> f64 {
        if i == 0 {
            0.0
        } else {
            2.0 * PI * j as f64 / (8 * i) as f64
        }
    };

    let mut cells = Vec::with_capacity(8 * rings * rings);
    let mut push = |tri: [usize; 3]| {
        cells.push((CellKind::Triangle, tri.to_vec(), tri.to_vec()));
    };
    for i in 1..=rings {
        if i == 1 {
            for j in 0..8 {
                push([0, ring_point(1, j), ring_point(1, j + 1)]);
            }
            continue;
        }
        let inner = i - 1;
        for sector in 0..8 {
            let (mut a, a_end) = (sector * inner, (sector + 1) * inner);
            let (mut b, b_end) = (sector * i, (sector + 1) * i);
            while a < a_end || b < b_end {
                let advance_outer =
                    a == a_end || (b < b_end && angle(i, b + 1) <= angle(inner, a + 1));
                if advance_outer {
                    push([ring_point(inner, a), ring_point(i, b), ring_point(i, b + 1)]);
                    b += 1;
                } else {
                    push([ring_point(inner, a), ring_point(i, b), ring_point(inner, a + 1)]);
                    a += 1;
                }
            }
        }
    }
    Mesh::from_cells(points, cells, 1)
}

/// Quarter annulus `1 <= r <= 2`, `0 <= theta <= pi/2`, as an `n x n` polar
/// grid of quadrilaterals. Reference `x` follows the radius and `y` the
/// angle. With `geom_degree = 2` the mid-edge and centre nodes sit on the
/// exact polar image, giving biquadratic isoparametric cells.
pub fn build_quarter_annulus_quad(n: usize, geom_degree: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("quarter annulus needs n >= 1"));
    }
    if !(1..=2).contains(&geom_degree) {
        return Err(Error::invalid(format!(
            "geometry degree {geom_degree} not in {{1, 2}}"
        )));
    }
    let d = geom_degree;
    let m = d * n;
    let mut points = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        let theta = FRAC_PI_2 * j as f64 / m as f64;
        for i in 0..=m {
            let r = 1.0 + i as f64 / m as f64;
            let p = if j == 0 {
                Point2::new(r, 0.0)
            } else if j == m {
                Point2::new(0.0, r)
            } else {
                Point2::new(r * theta.cos(), r * theta.sin())
            };
            points.push(p);
        }
    }
    let node = |i: usize, j: usize| i + (m + 1) * j;
    let mut cells = Vec::with_capacity(n * n);
    for cj in 0..n {
        for ci in 0..n {
            let (i0, j0) = (d * ci, d * cj);
            let vertices = vec![
                node(i0, j0),
                node(i0 + d, j0),
                node(i0 + d, j0 + d),
                node(i0, j0 + d),
            ];
            let mut geom = Vec::with_capacity((d + 1) * (d + 1));
            for b in 0..=d {
                for a in 0..=d {
                    geom.push(node(i0 + a, j0 + b));
                }
            }
            cells.push((CellKind::Quad, vertices, geom));
        }
    }
    Mesh::from_cells(points, cells, geom_degree)
}
