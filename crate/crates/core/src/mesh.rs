//! Polyhedral meshes: topology, recomputed geometry, the unit-cube hexahedral
//! generator, validation and the JSON exchange format.
//!
//! Each face stores one unit normal, oriented outward from its owner cell.
//! A cell sees the outward normal of a face as `sign * normal`, where the sign
//! is `+1` for the owner and `-1` for the neighbor.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MwgError, Result};
use crate::geometry::{self, Point3};

/// Faces whose vertices deviate from the best-fit plane by more than this
/// fraction of the face diameter are rejected.
pub const PLANARITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Face {
    pub id: usize,
    pub vertices: Vec<usize>,
    pub owner: usize,
    pub neighbor: Option<usize>,
    pub area: f64,
    /// Unit normal, outward from `owner`.
    pub normal: Point3,
    pub centroid: Point3,
    pub diameter: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

/// A face as seen from one of its cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceRef {
    pub face: usize,
    /// `+1` when the stored normal points out of this cell, `-1` otherwise.
    pub orientation: i8,
}

impl FaceRef {
    pub fn sign(&self) -> f64 {
        f64::from(self.orientation)
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub id: usize,
    pub faces: Vec<FaceRef>,
    pub volume: f64,
    pub centroid: Point3,
    /// Maximum pairwise vertex distance.
    pub diameter: f64,
}

#[derive(Clone, Debug)]
pub struct PolyMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<Face>,
    pub cells: Vec<Cell>,
    pub boundary_faces: Vec<usize>,
    /// Global mesh size, the largest cell diameter.
    pub h: f64,
}

/// Connectivity of one face, before geometry is computed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceTopology {
    pub vertices: Vec<usize>,
    pub owner: usize,
    pub neighbor: Option<usize>,
}

struct FaceGeometry {
    area: f64,
    /// Unit normal following the right-hand rule of the vertex loop.
    loop_normal: Point3,
    centroid: Point3,
    diameter: f64,
    planarity: f64,
}

fn face_geometry(pts: &[Point3]) -> FaceGeometry {
    let n = pts.len();
    let anchor = pts.iter().fold(Point3::ZERO, |acc, p| acc + *p) * (1.0 / n as f64);
    let mut area_vec = Point3::ZERO;
    for i in 0..n {
        area_vec += (pts[i] - anchor).cross(pts[(i + 1) % n] - anchor) * 0.5;
    }
    let area = area_vec.norm();
    let loop_normal = if area > 0.0 {
        area_vec * (1.0 / area)
    } else {
        Point3::ZERO
    };
    let mut centroid = Point3::ZERO;
    let mut wsum = 0.0;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let w = (a - anchor).cross(b - anchor).dot(loop_normal) * 0.5;
        centroid += (anchor + a + b) * (w / 3.0);
        wsum += w;
    }
    let centroid = if wsum != 0.0 {
        centroid * (1.0 / wsum)
    } else {
        anchor
    };
    let planarity = pts
        .iter()
        .map(|p| (*p - centroid).dot(loop_normal).abs())
        .fold(0.0, f64::max);
    FaceGeometry {
        area,
        loop_normal,
        centroid,
        diameter: geometry::diameter(pts),
        planarity,
    }
}

impl PolyMesh {
    /// Builds a mesh from connectivity, recomputing every geometric quantity.
    pub fn from_topology(
        vertices: Vec<Point3>,
        faces: Vec<FaceTopology>,
        cells: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(MwgError::EmptyMesh);
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(MwgError::MalformedMesh(format!(
                "vertex {i} has non-finite coordinates"
            )));
        }
        let nv = vertices.len();
        let nc = cells.len();
        for (fid, f) in faces.iter().enumerate() {
            if f.vertices.len() < 3 {
                return Err(MwgError::MalformedMesh(format!(
                    "face {fid} has fewer than 3 vertices"
                )));
            }
            if let Some(&v) = f.vertices.iter().find(|&&v| v >= nv) {
                return Err(MwgError::DanglingId(format!(
                    "face {fid} references vertex {v}"
                )));
            }
            if f.owner >= nc {
                return Err(MwgError::DanglingId(format!(
                    "face {fid} references owner cell {}",
                    f.owner
                )));
            }
            if let Some(nb) = f.neighbor {
                if nb >= nc {
                    return Err(MwgError::DanglingId(format!(
                        "face {fid} references neighbor cell {nb}"
                    )));
                }
                if nb == f.owner {
                    return Err(MwgError::MalformedMesh(format!(
                        "face {fid} has identical owner and neighbor"
                    )));
                }
            }
        }
        let mut cell_refs = Vec::with_capacity(nc);
        for (cid, list) in cells.iter().enumerate() {
            if list.len() < 4 {
                return Err(MwgError::MalformedMesh(format!(
                    "cell {cid} has fewer than 4 faces"
                )));
            }
            let mut refs = Vec::with_capacity(list.len());
            for &fid in list {
                let f = faces.get(fid).ok_or_else(|| {
                    MwgError::DanglingId(format!("cell {cid} references face {fid}"))
                })?;
                let orientation = if f.owner == cid {
                    1
                } else if f.neighbor == Some(cid) {
                    -1
                } else {
                    return Err(MwgError::MalformedMesh(format!(
                        "cell {cid} lists face {fid} but is neither its owner nor its neighbor"
                    )));
                };
                refs.push(FaceRef {
                    face: fid,
                    orientation,
                });
            }
            cell_refs.push(refs);
        }
        let mut listed = vec![0usize; faces.len()];
        for refs in &cell_refs {
            for r in refs {
                listed[r.face] += 1;
            }
        }
        for (fid, f) in faces.iter().enumerate() {
            let expected = if f.neighbor.is_some() { 2 } else { 1 };
            if listed[fid] != expected {
                return Err(MwgError::MalformedMesh(format!(
                    "face {fid} is listed by {} cells, expected {expected}",
                    listed[fid]
                )));
            }
        }

        // Vertex average of each cell, used to orient owner normals.
        let cell_vertex_sets: Vec<Vec<usize>> = cells
            .iter()
            .map(|list| {
                let mut vs: Vec<usize> = list
                    .iter()
                    .flat_map(|&f| faces[f].vertices.iter().copied())
                    .collect();
                vs.sort_unstable();
                vs.dedup();
                vs
            })
            .collect();
        let cell_centers: Vec<Point3> = cell_vertex_sets
            .iter()
            .map(|vs| {
                vs.iter().fold(Point3::ZERO, |a, &v| a + vertices[v]) * (1.0 / vs.len() as f64)
            })
            .collect();

        let mut out_faces = Vec::with_capacity(faces.len());
        let mut loop_normals = Vec::with_capacity(faces.len());
        for (fid, f) in faces.into_iter().enumerate() {
            let pts: Vec<Point3> = f.vertices.iter().map(|&v| vertices[v]).collect();
            let g = face_geometry(&pts);
            if g.area <= 0.0 {
                return Err(MwgError::MalformedMesh(format!("face {fid} has zero area")));
            }
            let tol = PLANARITY_TOL * g.diameter;
            if g.planarity > tol {
                return Err(MwgError::NonPlanarFace {
                    face: fid,
                    deviation: g.planarity,
                    tolerance: tol,
                });
            }
            let outward = (g.centroid - cell_centers[f.owner]).dot(g.loop_normal) >= 0.0;
            let normal = if outward { g.loop_normal } else { -g.loop_normal };
            loop_normals.push(g.loop_normal);
            out_faces.push(Face {
                id: fid,
                vertices: f.vertices,
                owner: f.owner,
                neighbor: f.neighbor,
                area: g.area,
                normal,
                centroid: g.centroid,
                diameter: g.diameter,
            });
        }

        let mut out_cells = Vec::with_capacity(nc);
        for (cid, refs) in cell_refs.into_iter().enumerate() {
            let x0 = cell_centers[cid];
            let mut volume = 0.0;
            let mut moment = Point3::ZERO;
            for r in &refs {
                let f = &out_faces[r.face];
                let outward_normal = f.normal * r.sign();
                let flip = if loop_normals[r.face].dot(outward_normal) >= 0.0 {
                    1.0
                } else {
                    -1.0
                };
                let nfv = f.vertices.len();
                for i in 0..nfv {
                    let a = vertices[f.vertices[i]];
                    let b = vertices[f.vertices[(i + 1) % nfv]];
                    let v = flip * (a - f.centroid).cross(b - f.centroid).dot(f.centroid - x0) / 6.0;
                    volume += v;
                    moment += (x0 + f.centroid + a + b) * (v / 4.0);
                }
            }
            if volume <= 0.0 {
                return Err(MwgError::MalformedMesh(format!(
                    "cell {cid} has non-positive volume {volume:e}"
                )));
            }
            let pts: Vec<Point3> = cell_vertex_sets[cid].iter().map(|&v| vertices[v]).collect();
            out_cells.push(Cell {
                id: cid,
                faces: refs,
                volume,
                centroid: moment * (1.0 / volume),
                diameter: geometry::diameter(&pts),
            });
        }

        let boundary_faces = out_faces
            .iter()
            .filter(|f| f.is_boundary())
            .map(|f| f.id)
            .collect();
        let h = out_cells.iter().map(|c| c.diameter).fold(0.0, f64::max);
        Ok(Self {
            vertices,
            faces: out_faces,
            cells: out_cells,
            boundary_faces,
            h,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_interior_faces(&self) -> usize {
        self.faces.len() - self.boundary_faces.len()
    }

    /// Outward unit normal of face `r` as seen from the cell that holds `r`.
    pub fn outward_normal(&self, r: &FaceRef) -> Point3 {
        self.faces[r.face].normal * r.sign()
    }

    /// The cell on the other side of face `r`, if any.
    pub fn across(&self, r: &FaceRef) -> Option<usize> {
        let f = &self.faces[r.face];
        if r.orientation > 0 {
            f.neighbor
        } else {
            Some(f.owner)
        }
    }

    /// Distinct vertex ids of a cell, sorted.
    pub fn cell_vertices(&self, cell: usize) -> Vec<usize> {
        let mut vs: Vec<usize> = self.cells[cell]
            .faces
            .iter()
            .flat_map(|r| self.faces[r.face].vertices.iter().copied())
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Face neighbors of a cell, in face order.
    pub fn face_neighbors(&self, cell: usize) -> Vec<usize> {
        self.cells[cell]
            .faces
            .iter()
            .filter_map(|r| self.across(r))
            .collect()
    }

    pub fn topology(&self) -> (Vec<FaceTopology>, Vec<Vec<usize>>) {
        let faces = self
            .faces
            .iter()
            .map(|f| FaceTopology {
                vertices: f.vertices.clone(),
                owner: f.owner,
                neighbor: f.neighbor,
            })
            .collect();
        let cells = self
            .cells
            .iter()
            .map(|c| c.faces.iter().map(|r| r.face).collect())
            .collect();
        (faces, cells)
    }
}

/// Uniform `n x n x n` partition of the unit cube into axis-aligned cubes.
pub fn build_uniform_hex_mesh(n: usize) -> Result<PolyMesh> {
    if n == 0 {
        return Err(MwgError::InvalidArgument(
            "uniform mesh needs at least one cell per direction".into(),
        ));
    }
    let np = n + 1;
    let vid = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    let cid = |i: usize, j: usize, k: usize| i + n * (j + n * k);
    let step = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push(Point3::new(i as f64 * step, j as f64 * step, k as f64 * step));
            }
        }
    }

    let mut faces = Vec::with_capacity(3 * n * n * np);
    let mut cells: Vec<Vec<usize>> = vec![Vec::with_capacity(6); n * n * n];
    // Loops below are counter-clockwise around the positive axis direction.
    for axis in 0..3 {
        for plane in 0..np {
            for b in 0..n {
                for a in 0..n {
                    let (lo, hi, mut lp) = match axis {
                        0 => (
                            (plane > 0).then(|| cid(plane - 1, a, b)),
                            (plane < n).then(|| cid(plane, a, b)),
                            vec![
                                vid(plane, a, b),
                                vid(plane, a + 1, b),
                                vid(plane, a + 1, b + 1),
                                vid(plane, a, b + 1),
                            ],
                        ),
                        1 => (
                            (plane > 0).then(|| cid(a, plane - 1, b)),
                            (plane < n).then(|| cid(a, plane, b)),
                            vec![
                                vid(a, plane, b),
                                vid(a, plane, b + 1),
                                vid(a + 1, plane, b + 1),
                                vid(a + 1, plane, b),
                            ],
                        ),
                        _ => (
                            (plane > 0).then(|| cid(a, b, plane - 1)),
                            (plane < n).then(|| cid(a, b, plane)),
                            vec![
                                vid(a, b, plane),
                                vid(a + 1, b, plane),
                                vid(a + 1, b + 1, plane),
                                vid(a, b + 1, plane),
                            ],
                        ),
                    };
                    let (owner, neighbor) = match (lo, hi) {
                        (Some(l), h) => (l, h),
                        (None, Some(h)) => {
                            lp.reverse();
                            (h, None)
                        }
                        (None, None) => unreachable!(),
                    };
                    let fid = faces.len();
                    cells[owner].push(fid);
                    if let Some(nb) = neighbor {
                        cells[nb].push(fid);
                    }
                    faces.push(FaceTopology {
                        vertices: lp,
                        owner,
                        neighbor,
                    });
                }
            }
        }
    }
    PolyMesh::from_topology(vertices, faces, cells)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    NormalLength,
    FaceArea,
    Connectivity,
    Closure,
    Volume,
    DomainVolume,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entity {
    Face(usize),
    Cell(usize),
    Mesh,
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub kind: ViolationKind,
    pub entity: Entity,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.entity {
            Entity::Face(i) => write!(f, "face {i}: {}", self.message),
            Entity::Cell(i) => write!(f, "cell {i}: {}", self.message),
            Entity::Mesh => write!(f, "mesh: {}", self.message),
        }
    }
}

/// Checks every geometric and topological invariant of a mesh. An empty
/// result means the mesh is valid.
pub fn validate_mesh(mesh: &PolyMesh) -> Vec<Violation> {
    let mut out = Vec::new();
    let nc = mesh.cells.len();
    let nv = mesh.vertices.len();

    let mut refs: Vec<Vec<(usize, i8)>> = vec![Vec::new(); mesh.faces.len()];
    for c in &mesh.cells {
        for r in &c.faces {
            if r.face < refs.len() {
                refs[r.face].push((c.id, r.orientation));
            } else {
                out.push(Violation {
                    kind: ViolationKind::Connectivity,
                    entity: Entity::Cell(c.id),
                    message: format!("references missing face {}", r.face),
                });
            }
        }
    }

    for f in &mesh.faces {
        if (f.normal.norm() - 1.0).abs() > 1e-12 {
            out.push(Violation {
                kind: ViolationKind::NormalLength,
                entity: Entity::Face(f.id),
                message: format!("normal length {:.15}", f.normal.norm()),
            });
        }
        if f.vertices.iter().all(|&v| v < nv) {
            let pts: Vec<Point3> = f.vertices.iter().map(|&v| mesh.vertices[v]).collect();
            let area = face_geometry(&pts).area;
            if !(f.area > 0.0) || (f.area - area).abs() > 1e-12 * area {
                out.push(Violation {
                    kind: ViolationKind::FaceArea,
                    entity: Entity::Face(f.id),
                    message: format!("stored area {:e} differs from polygon area {area:e}", f.area),
                });
            }
        }

        let mut problems = Vec::new();
        if f.vertices.iter().any(|&v| v >= nv) {
            problems.push("references a missing vertex".to_string());
        }
        let in_boundary_list = mesh.boundary_faces.contains(&f.id);
        let expected: Vec<(usize, i8)> = match f.neighbor {
            Some(nb) => {
                if nb >= nc {
                    problems.push(format!("neighbor cell {nb} does not exist"));
                }
                if in_boundary_list {
                    problems.push("interior face listed as boundary".into());
                }
                vec![(f.owner, 1), (nb, -1)]
            }
            None => {
                if !in_boundary_list {
                    problems.push("boundary face missing from boundary list".into());
                }
                vec![(f.owner, 1)]
            }
        };
        let mut seen = refs[f.id].clone();
        seen.sort_unstable();
        let mut want = expected.clone();
        want.sort_unstable();
        if seen != want {
            problems.push(format!(
                "referenced by cells {seen:?}, expected {want:?} (cell, orientation)"
            ));
        }
        if !problems.is_empty() {
            out.push(Violation {
                kind: ViolationKind::Connectivity,
                entity: Entity::Face(f.id),
                message: problems.join("; "),
            });
        }
    }

    let mut total_volume = 0.0;
    for c in &mesh.cells {
        if !(c.volume > 0.0) {
            out.push(Violation {
                kind: ViolationKind::Volume,
                entity: Entity::Cell(c.id),
                message: format!("volume {:e} is not positive", c.volume),
            });
        }
        total_volume += c.volume;
        let mut closure = Point3::ZERO;
        let mut area = 0.0;
        for r in c.faces.iter().filter(|r| r.face < mesh.faces.len()) {
            let f = &mesh.faces[r.face];
            closure += f.normal * (r.sign() * f.area);
            area += f.area;
        }
        if closure.norm() > 1e-10 * area {
            out.push(Violation {
                kind: ViolationKind::Closure,
                entity: Entity::Cell(c.id),
                message: format!("surface closure defect {:e}", closure.norm()),
            });
        }
    }

    // Domain volume from the boundary surface via the divergence theorem.
    let domain: f64 = mesh
        .boundary_faces
        .iter()
        .filter_map(|&b| mesh.faces.get(b))
        .map(|f| f.centroid.dot(f.normal) * f.area / 3.0)
        .sum();
    if (total_volume - domain).abs() > 1e-10 * domain.abs().max(total_volume) {
        out.push(Violation {
            kind: ViolationKind::DomainVolume,
            entity: Entity::Mesh,
            message: format!("cell volumes sum to {total_volume:e}, boundary encloses {domain:e}"),
        });
    }
    out
}

#[derive(Serialize, Deserialize)]
struct MeshDocument {
    vertices: Vec<[f64; 3]>,
    faces: Vec<FaceTopology>,
    cells: Vec<Vec<usize>>,
}

/// Parses the JSON exchange format. Geometry is always recomputed.
pub fn read_mesh_json(text: &str) -> Result<PolyMesh> {
    let doc: MeshDocument =
        serde_json::from_str(text).map_err(|e| MwgError::MalformedMesh(e.to_string()))?;
    let vertices = doc.vertices.into_iter().map(Point3::from_array).collect();
    PolyMesh::from_topology(vertices, doc.faces, doc.cells)
}

pub fn write_mesh_json(mesh: &PolyMesh) -> String {
    let (faces, cells) = mesh.topology();
    let doc = MeshDocument {
        vertices: mesh.vertices.iter().map(|p| p.to_array()).collect(),
        faces,
        cells,
    };
    serde_json::to_string_pretty(&doc).expect("mesh document serializes")
}
