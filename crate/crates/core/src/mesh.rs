//! Structured meshes: uniform intervals in 1D and tensor-product
//! quadrilaterals in 2D.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::{GfemError, Point, Result};

/// Relative slack used when deciding whether a point lies inside the mesh.
const LOCATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryTag {
    Left,
    Right,
    Bottom,
    Top,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [
        BoundaryTag::Left,
        BoundaryTag::Right,
        BoundaryTag::Bottom,
        BoundaryTag::Top,
    ];

    pub fn is_1d(self) -> bool {
        matches!(self, BoundaryTag::Left | BoundaryTag::Right)
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryTag::Left => "left",
            BoundaryTag::Right => "right",
            BoundaryTag::Bottom => "bottom",
            BoundaryTag::Top => "top",
        };
        f.write_str(s)
    }
}

impl FromStr for BoundaryTag {
    type Err = GfemError;

    /// `inflow`/`outflow` are accepted as aliases of `left`/`right`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "inflow" => Ok(BoundaryTag::Left),
            "right" | "outflow" => Ok(BoundaryTag::Right),
            "bottom" => Ok(BoundaryTag::Bottom),
            "top" => Ok(BoundaryTag::Top),
            other => Err(GfemError::invalid(format!(
                "unknown boundary tag `{other}` (expected left|right|bottom|top)"
            ))),
        }
    }
}

/// A boundary face: a single node in 1D, an edge in 2D.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub element: usize,
    pub nodes: Vec<usize>,
}

/// The support `omega_i` of node `i`: every element that lists it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSupport {
    pub node: usize,
    pub elements: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Grid {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    nodes: Vec<Point>,
    elements: Vec<Vec<usize>>,
    h: Vec<f64>,
    boundary_nodes: BTreeMap<BoundaryTag, Vec<usize>>,
    boundary_faces: BTreeMap<BoundaryTag, Vec<Face>>,
    grid: Grid,
}

impl Mesh {
    /// `n_elems` equal segments on `[0, length]`.
    pub fn build_interval(length: f64, n_elems: usize) -> Result<Mesh> {
        if n_elems == 0 {
            return Err(GfemError::invalid("interval mesh needs at least one element"));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(GfemError::invalid("interval length must be positive"));
        }
        let h = length / n_elems as f64;
        let nodes = (0..=n_elems)
            .map(|k| [length * k as f64 / n_elems as f64, 0.0])
            .collect();
        let elements = (0..n_elems).map(|e| vec![e, e + 1]).collect();
        let mut boundary_nodes = BTreeMap::new();
        boundary_nodes.insert(BoundaryTag::Left, vec![0]);
        boundary_nodes.insert(BoundaryTag::Right, vec![n_elems]);
        let mut boundary_faces = BTreeMap::new();
        boundary_faces.insert(
            BoundaryTag::Left,
            vec![Face {
                element: 0,
                nodes: vec![0],
            }],
        );
        boundary_faces.insert(
            BoundaryTag::Right,
            vec![Face {
                element: n_elems - 1,
                nodes: vec![n_elems],
            }],
        );
        Ok(Mesh {
            dim: 1,
            nodes,
            elements,
            h: vec![h; n_elems],
            boundary_nodes,
            boundary_faces,
            grid: Grid {
                lx: length,
                ly: 0.0,
                nx: n_elems,
                ny: 0,
            },
        })
    }

    /// `nx * ny` rectangular cells on `[0, lx] x [0, ly]`. Nodes are numbered
    /// row by row from the bottom-left corner; quads list their nodes
    /// counterclockwise.
    pub fn build_quad(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh> {
        if nx == 0 || ny == 0 {
            return Err(GfemError::invalid("quad mesh needs at least one subdivision per axis"));
        }
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(GfemError::invalid("rectangle sides must be positive"));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
            }
        }
        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let h = (lx / nx as f64).max(ly / ny as f64);

        let mut boundary_nodes = BTreeMap::new();
        boundary_nodes.insert(BoundaryTag::Bottom, (0..=nx).map(|i| id(i, 0)).collect());
        boundary_nodes.insert(BoundaryTag::Top, (0..=nx).map(|i| id(i, ny)).collect());
        boundary_nodes.insert(BoundaryTag::Left, (0..=ny).map(|j| id(0, j)).collect());
        boundary_nodes.insert(BoundaryTag::Right, (0..=ny).map(|j| id(nx, j)).collect());

        let mut boundary_faces = BTreeMap::new();
        boundary_faces.insert(
            BoundaryTag::Bottom,
            (0..nx)
                .map(|i| Face {
                    element: i,
                    nodes: vec![id(i, 0), id(i + 1, 0)],
                })
                .collect(),
        );
        boundary_faces.insert(
            BoundaryTag::Top,
            (0..nx)
                .map(|i| Face {
                    element: (ny - 1) * nx + i,
                    nodes: vec![id(i, ny), id(i + 1, ny)],
                })
                .collect(),
        );
        boundary_faces.insert(
            BoundaryTag::Left,
            (0..ny)
                .map(|j| Face {
                    element: j * nx,
                    nodes: vec![id(0, j), id(0, j + 1)],
                })
                .collect(),
        );
        boundary_faces.insert(
            BoundaryTag::Right,
            (0..ny)
                .map(|j| Face {
                    element: j * nx + nx - 1,
                    nodes: vec![id(nx, j), id(nx, j + 1)],
                })
                .collect(),
        );

        Ok(Mesh {
            dim: 2,
            nodes,
            elements,
            h: vec![h; nx * ny],
            boundary_nodes,
            boundary_faces,
            grid: Grid { lx, ly, nx, ny },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e]
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Characteristic length of element `e`.
    pub fn h(&self, e: usize) -> f64 {
        self.h[e]
    }

    pub fn h_max(&self) -> f64 {
        self.h.iter().copied().fold(0.0, f64::max)
    }

    /// Subdivisions per axis (`ny` is zero in 1D).
    pub fn divisions(&self) -> (usize, usize) {
        (self.grid.nx, self.grid.ny)
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.grid.lx, self.grid.ly)
    }

    pub fn element_vertices(&self, e: usize) -> Vec<Point> {
        self.elements[e].iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn tags(&self) -> impl Iterator<Item = BoundaryTag> + '_ {
        self.boundary_nodes.keys().copied()
    }

    pub fn boundary_nodes(&self, tag: BoundaryTag) -> Result<&[usize]> {
        self.boundary_nodes
            .get(&tag)
            .map(Vec::as_slice)
            .ok_or_else(|| GfemError::invalid(format!("mesh has no boundary tagged `{tag}`")))
    }

    pub fn boundary_faces(&self, tag: BoundaryTag) -> Result<&[Face]> {
        self.boundary_faces
            .get(&tag)
            .map(Vec::as_slice)
            .ok_or_else(|| GfemError::invalid(format!("mesh has no boundary tagged `{tag}`")))
    }

    pub fn element_measure(&self, e: usize) -> f64 {
        let v = self.element_vertices(e);
        match self.dim {
            1 => (v[1][0] - v[0][0]).abs(),
            _ => {
                // shoelace
                let n = v.len();
                let twice: f64 = (0..n)
                    .map(|k| {
                        let (a, b) = (v[k], v[(k + 1) % n]);
                        a[0] * b[1] - b[0] * a[1]
                    })
                    .sum();
                0.5 * twice.abs()
            }
        }
    }

    pub fn domain_measure(&self) -> f64 {
        match self.dim {
            1 => self.grid.lx,
            _ => self.grid.lx * self.grid.ly,
        }
    }

    pub fn node_supports(&self) -> Vec<NodeSupport> {
        let mut supports: Vec<NodeSupport> = (0..self.n_nodes())
            .map(|node| NodeSupport {
                node,
                elements: Vec::new(),
            })
            .collect();
        for (e, conn) in self.elements.iter().enumerate() {
            for &n in conn {
                supports[n].elements.push(e);
            }
        }
        supports
    }

    /// Nodes whose support touches one of the tagged boundaries: every node of
    /// every element that owns a face on those boundaries.
    pub fn select_enriched_nodes(&self, tags: &[BoundaryTag]) -> Result<BTreeSet<usize>> {
        let mut set = BTreeSet::new();
        for &tag in tags {
            for face in self.boundary_faces(tag)? {
                set.extend(self.elements[face.element].iter().copied());
            }
        }
        Ok(set)
    }

    /// Element containing `x`. Points on shared edges resolve to the element
    /// with the larger index.
    pub fn locate(&self, x: Point) -> Option<usize> {
        let g = self.grid;
        let cell = |v: f64, len: f64, n: usize| -> Option<usize> {
            let tol = LOCATE_TOL * len;
            if v < -tol || v > len + tol || !v.is_finite() {
                return None;
            }
            let k = (v / len * n as f64).floor();
            Some((k.max(0.0) as usize).min(n - 1))
        };
        match self.dim {
            1 => cell(x[0], g.lx, g.nx),
            _ => {
                let i = cell(x[0], g.lx, g.nx)?;
                let j = cell(x[1], g.ly, g.ny)?;
                Some(j * g.nx + i)
            }
        }
    }

    /// Nodes of a 2D mesh lying on the horizontal grid line closest to `y`,
    /// ordered by increasing `x`. In 1D, all nodes.
    pub fn nodes_on_row(&self, y: f64) -> Vec<usize> {
        match self.dim {
            1 => (0..self.n_nodes()).collect(),
            _ => {
                let g = self.grid;
                let j = ((y / g.ly) * g.ny as f64).round().clamp(0.0, g.ny as f64) as usize;
                (0..=g.nx).map(|i| j * (g.nx + 1) + i).collect()
            }
        }
    }
}
