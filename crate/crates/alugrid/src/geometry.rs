//! Reference elements and element geometry.
//!
//! Coordinates are carried as `[f64; 3]` throughout; 2d grids leave the third
//! component at zero. Corner orderings follow the usual reference elements:
//! cube corner `i` sits at `(i&1, i>>1&1, i>>2&1)`, the triangle has corners
//! `(0,0), (1,0), (0,1)`. Faces are numbered by normal axis, negative side
//! first, so that `faceInElement` arguments have a fixed meaning.

use crate::error::{GridError, Result};

pub type Coord = [f64; 3];

/// Shape of an element (together with the grid dimension).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElemType {
    Cube,
    Simplex,
}

/// The three supported (dimension, element type) combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridKind {
    /// 2d quadrilaterals, nonconforming midpoint refinement.
    Quad,
    /// 2d triangles, conforming newest-vertex bisection.
    Tri,
    /// 3d hexahedra, nonconforming midpoint refinement.
    Hex,
}

impl GridKind {
    pub fn dim(self) -> usize {
        match self {
            GridKind::Quad | GridKind::Tri => 2,
            GridKind::Hex => 3,
        }
    }

    pub fn elem_type(self) -> ElemType {
        match self {
            GridKind::Tri => ElemType::Simplex,
            _ => ElemType::Cube,
        }
    }

    pub fn corners(self) -> usize {
        match self {
            GridKind::Tri => 3,
            GridKind::Quad => 4,
            GridKind::Hex => 8,
        }
    }

    pub fn faces(self) -> usize {
        match self {
            GridKind::Tri => 3,
            GridKind::Quad => 4,
            GridKind::Hex => 6,
        }
    }

    /// Number of children produced by one refinement.
    pub fn children(self) -> usize {
        match self {
            GridKind::Tri => 2,
            GridKind::Quad => 4,
            GridKind::Hex => 8,
        }
    }

    /// Corners per face (2 for edges, 4 for quadrilateral faces).
    pub fn face_corners(self) -> usize {
        match self {
            GridKind::Hex => 4,
            _ => 2,
        }
    }

    pub fn from_parts(dim: usize, elem: ElemType) -> Result<GridKind> {
        match (dim, elem) {
            (2, ElemType::Cube) => Ok(GridKind::Quad),
            (2, ElemType::Simplex) => Ok(GridKind::Tri),
            (3, ElemType::Cube) => Ok(GridKind::Hex),
            (3, ElemType::Simplex) => Err(GridError::Factory(
                "3d simplex grids are not supported".into(),
            )),
            _ => Err(GridError::Factory(format!("unsupported dimension {dim}"))),
        }
    }
}

/// Local corner numbers of each face, in face-local order.
///
/// For cube faces the four corners are listed so that face coordinates
/// `(s, t)` map to corners `(0,0), (1,0), (0,1), (1,1)`; a face `2a + d` of a
/// cube is the side where axis `a` equals `d`, and `(s, t)` run along the two
/// remaining axes in ascending order. Triangle edges are listed in the
/// lexicographic subentity order `{0,1}, {0,2}, {1,2}`.
pub fn face_corner_table(kind: GridKind, face: usize) -> &'static [usize] {
    const QUAD: [[usize; 2]; 4] = [[0, 2], [1, 3], [0, 1], [2, 3]];
    const TRI: [[usize; 2]; 3] = [[0, 1], [0, 2], [1, 2]];
    const HEX: [[usize; 4]; 6] = [
        [0, 2, 4, 6],
        [1, 3, 5, 7],
        [0, 1, 4, 5],
        [2, 3, 6, 7],
        [0, 1, 2, 3],
        [4, 5, 6, 7],
    ];
    match kind {
        GridKind::Quad => &QUAD[face],
        GridKind::Tri => &TRI[face],
        GridKind::Hex => &HEX[face],
    }
}

/// Triangle edge endpoints as local vertex numbers.
pub fn tri_edge(edge: usize) -> (usize, usize) {
    [(0, 1), (0, 2), (1, 2)][edge]
}

/// The local vertex opposite a triangle edge.
pub fn tri_opposite(edge: usize) -> usize {
    [2, 1, 0][edge]
}

fn sub(a: &Coord, b: &Coord) -> Coord {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &Coord, b: &Coord) -> Coord {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot(a: &Coord, b: &Coord) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Coord) -> f64 {
    dot(a, a).sqrt()
}

pub fn midpoint(a: &Coord, b: &Coord) -> Coord {
    [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ]
}

/// Arithmetic mean of the corners. For multilinear cube geometries this
/// equals the image of the reference-element center.
pub fn barycenter(corners: &[Coord]) -> Coord {
    let mut out = [0.0; 3];
    match corners.len() {
        3 => {
            for k in 0..3 {
                out[k] = (corners[0][k] + corners[1][k] + corners[2][k]) / 3.0;
            }
        }
        4 => {
            for k in 0..3 {
                out[k] = ((corners[0][k] + corners[1][k]) + (corners[2][k] + corners[3][k])) * 0.25;
            }
        }
        8 => {
            for k in 0..3 {
                let a = (corners[0][k] + corners[1][k]) + (corners[2][k] + corners[3][k]);
                let b = (corners[4][k] + corners[5][k]) + (corners[6][k] + corners[7][k]);
                out[k] = (a + b) * 0.125;
            }
        }
        n => panic!("barycenter of {n} corners"),
    }
    out
}

/// Element measure: triangle area, quadrilateral area, hexahedron volume.
///
/// The hexahedron uses 2x2x2 Gauss quadrature of the trilinear Jacobian
/// determinant, which is exact for trilinear geometries.
pub fn volume(kind: GridKind, corners: &[Coord]) -> f64 {
    match kind {
        GridKind::Tri => {
            let u = sub(&corners[1], &corners[0]);
            let v = sub(&corners[2], &corners[0]);
            0.5 * (u[0] * v[1] - u[1] * v[0]).abs()
        }
        GridKind::Quad => {
            // Shoelace over the cyclic boundary 0, 1, 3, 2.
            let cyc = [0usize, 1, 3, 2];
            let mut twice = 0.0;
            for i in 0..4 {
                let a = &corners[cyc[i]];
                let b = &corners[cyc[(i + 1) % 4]];
                twice += a[0] * b[1] - b[0] * a[1];
            }
            0.5 * twice.abs()
        }
        GridKind::Hex => {
            let g = 0.5 / f64::sqrt(3.0);
            let pts = [0.5 - g, 0.5 + g];
            let mut vol = 0.0;
            for &x in &pts {
                for &y in &pts {
                    for &z in &pts {
                        vol += trilinear_det(corners, x, y, z);
                    }
                }
            }
            (vol * 0.125).abs()
        }
    }
}

fn trilinear_det(c: &[Coord], x: f64, y: f64, z: f64) -> f64 {
    let mut dx = [0.0; 3];
    let mut dy = [0.0; 3];
    let mut dz = [0.0; 3];
    for i in 0..8 {
        let (bx, by, bz) = ((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64);
        let wx = if bx > 0.5 { 1.0 } else { -1.0 };
        let wy = if by > 0.5 { 1.0 } else { -1.0 };
        let wz = if bz > 0.5 { 1.0 } else { -1.0 };
        let fx = if bx > 0.5 { x } else { 1.0 - x };
        let fy = if by > 0.5 { y } else { 1.0 - y };
        let fz = if bz > 0.5 { z } else { 1.0 - z };
        for k in 0..3 {
            dx[k] += wx * fy * fz * c[i][k];
            dy[k] += fx * wy * fz * c[i][k];
            dz[k] += fx * fy * wz * c[i][k];
        }
    }
    dot(&dx, &cross(&dy, &dz))
}

/// Evaluate the multilinear map of a cube element at reference point.
pub fn multilinear(kind: GridKind, corners: &[Coord], r: &[f64; 3]) -> Coord {
    let mut out = [0.0; 3];
    match kind {
        GridKind::Quad => {
            for i in 0..4 {
                let fx = if i & 1 == 1 { r[0] } else { 1.0 - r[0] };
                let fy = if i >> 1 & 1 == 1 { r[1] } else { 1.0 - r[1] };
                for k in 0..3 {
                    out[k] += fx * fy * corners[i][k];
                }
            }
        }
        GridKind::Hex => {
            for i in 0..8 {
                let fx = if i & 1 == 1 { r[0] } else { 1.0 - r[0] };
                let fy = if i >> 1 & 1 == 1 { r[1] } else { 1.0 - r[1] };
                let fz = if i >> 2 & 1 == 1 { r[2] } else { 1.0 - r[2] };
                for k in 0..3 {
                    out[k] += fx * fy * fz * corners[i][k];
                }
            }
        }
        GridKind::Tri => panic!("multilinear map on a simplex"),
    }
    out
}

/// Corner coordinates of cube child `child`, computed from the father's
/// multilinear lattice. Children are numbered lexicographically by
/// reference-coordinate octant, so child 0 keeps the father's corner 0.
pub fn cube_child_corners(kind: GridKind, father: &[Coord], child: usize) -> Vec<Coord> {
    let dim = kind.dim();
    let n = kind.corners();
    let mut out = Vec::with_capacity(n);
    let off = [
        (child & 1) as f64,
        ((child >> 1) & 1) as f64,
        if dim == 3 { ((child >> 2) & 1) as f64 } else { 0.0 },
    ];
    for i in 0..n {
        let r = [
            0.5 * (off[0] + (i & 1) as f64),
            0.5 * (off[1] + ((i >> 1) & 1) as f64),
            if dim == 3 {
                0.5 * (off[2] + ((i >> 2) & 1) as f64)
            } else {
                0.0
            },
        ];
        out.push(multilinear(kind, father, &r));
    }
    out
}

/// Geometric data of one leaf face used in flux assembly: unit outward
/// normal (seen from the inside element), the face measure, and the face
/// midpoint.
pub struct FaceGeometry {
    pub normal: Coord,
    pub area: f64,
    pub center: Coord,
}

/// Face geometry from the face corner coordinates (2 for edges, 4 for
/// quadrilateral faces, in face-local `(s,t)` order). `inside_center`
/// orients the normal outward.
pub fn face_geometry(face: &[Coord], inside_center: &Coord) -> FaceGeometry {
    let (mut normal, center) = match face.len() {
        2 => {
            let d = sub(&face[1], &face[0]);
            (
                [d[1], -d[0], 0.0],
                midpoint(&face[0], &face[1]),
            )
        }
        4 => {
            // Vector area of the (possibly non-planar) quadrilateral with
            // cyclic boundary 0, 1, 3, 2: half the cross product of its
            // diagonals. Using the vector area keeps flux telescoping exact.
            let d1 = sub(&face[3], &face[0]);
            let d2 = sub(&face[2], &face[1]);
            (cross(&d1, &d2), barycenter(face))
        }
        n => panic!("face with {n} corners"),
    };
    let mut area = norm(&normal);
    if area > 0.0 {
        for k in &mut normal {
            *k /= area;
        }
    }
    if face.len() == 4 {
        area *= 0.5;
    }
    let out = sub(&center, inside_center);
    if dot(&normal, &out) < 0.0 {
        for k in &mut normal {
            *k = -*k;
        }
    }
    FaceGeometry {
        normal,
        area,
        center,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT_QUAD: [Coord; 4] = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [1.0, 1.0, 0.0],
    ];

    fn unit_hex() -> Vec<Coord> {
        (0..8)
            .map(|i| {
                [
                    (i & 1) as f64,
                    ((i >> 1) & 1) as f64,
                    ((i >> 2) & 1) as f64,
                ]
            })
            .collect()
    }

    #[test]
    fn unit_cube_volume_and_center() {
        let hex = unit_hex();
        assert_eq!(volume(GridKind::Hex, &hex), 1.0);
        assert_eq!(barycenter(&hex), [0.5, 0.5, 0.5]);
    }

    #[test]
    fn reference_triangle() {
        let tri = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert_eq!(volume(GridKind::Tri, &tri), 0.5);
        let b = barycenter(&tri);
        assert!((b[0] - 1.0 / 3.0).abs() < 1e-15 && (b[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quad_children_tile_father() {
        let skewed = [
            [0.0, 0.0, 0.0],
            [2.0, 0.2, 0.0],
            [-0.3, 1.5, 0.0],
            [1.9, 1.8, 0.0],
        ];
        let total = volume(GridKind::Quad, &skewed);
        let sum: f64 = (0..4)
            .map(|c| volume(GridKind::Quad, &cube_child_corners(GridKind::Quad, &skewed, c)))
            .sum();
        assert!((sum - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn hex_children_tile_father() {
        let mut hex = unit_hex();
        // perturb to a non-affine trilinear shape
        hex[7] = [1.3, 1.2, 1.4];
        hex[1] = [1.1, -0.1, 0.05];
        let total = volume(GridKind::Hex, &hex);
        let sum: f64 = (0..8)
            .map(|c| volume(GridKind::Hex, &cube_child_corners(GridKind::Hex, &hex, c)))
            .sum();
        assert!((sum - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn unit_quad_child_zero() {
        let child = cube_child_corners(GridKind::Quad, &UNIT_QUAD, 0);
        assert_eq!(barycenter(&child), [0.25, 0.25, 0.0]);
        assert_eq!(volume(GridKind::Quad, &child), 0.25);
    }

    #[test]
    fn hex_child_zero_contains_origin() {
        let hex = unit_hex();
        let child = cube_child_corners(GridKind::Hex, &hex, 0);
        assert_eq!(child[0], [0.0, 0.0, 0.0]);
        assert_eq!(volume(GridKind::Hex, &child), 0.125);
    }

    #[test]
    fn edge_normal_is_outward_unit() {
        let g = face_geometry(
            &[[1.0, 0.0, 0.0], [1.0, 1.0, 0.0]],
            &[0.5, 0.5, 0.0],
        );
        assert!((g.normal[0] - 1.0).abs() < 1e-15 && g.normal[1].abs() < 1e-15);
        assert_eq!(g.area, 1.0);
    }
}
