//! Tetrahedral meshes: topology, boundary classification and vertex stars.
//!
//! Edges are stored once, as sorted vertex pairs `(i, j)` with `i < j`, and
//! listed in lexicographic order. The tangent of an edge always points from
//! the lower to the higher vertex index; because edge degrees of freedom are
//! quadratic in the tangent the per-tet orientation sign is kept for
//! bookkeeping only.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

pub type Point = Point3<f64>;

/// Relative degeneracy floor: a tet is rejected when its volume is below
/// `DEFAULT_DEGENERACY_FACTOR * (longest edge)^3`.
pub const DEFAULT_DEGENERACY_FACTOR: f64 = 1e-12;

/// Local edge ordering inside a tet, as pairs of local vertex slots.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Faces of a positively oriented tet, ordered so that the right-hand normal
/// points outward. Face `k` is opposite local vertex `k`.
const OUTWARD_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityClass {
    Interior,
    Boundary,
}

impl EntityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityClass::Interior => "interior",
            EntityClass::Boundary => "boundary",
        }
    }
}

/// A global edge as seen from one tet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalEdge {
    pub edge: usize,
    /// `+1` when the local pair runs from the lower to the higher global index.
    pub sign: i8,
}

#[derive(Debug, Clone)]
pub struct TetMesh {
    vertices: Vec<Point>,
    tets: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    tet_edges: Vec<[LocalEdge; 6]>,
    boundary_faces: Vec<[usize; 3]>,
    vertex_class: Vec<EntityClass>,
    edge_class: Vec<EntityClass>,
    vertex_tets: Vec<Vec<usize>>,
    edge_tets: Vec<Vec<usize>>,
    edge_lookup: HashMap<[usize; 2], usize>,
}

fn signed_volume(p: &[Point; 4]) -> f64 {
    let a = p[1] - p[0];
    let b = p[2] - p[0];
    let c = p[3] - p[0];
    a.dot(&b.cross(&c)) / 6.0
}

fn sorted3(mut f: [usize; 3]) -> ([usize; 3], bool) {
    // returns the sorted triple and whether the permutation was odd
    let mut odd = false;
    for i in 0..3 {
        for j in 0..2 - i {
            if f[j] > f[j + 1] {
                f.swap(j, j + 1);
                odd = !odd;
            }
        }
    }
    (f, odd)
}

/// Builds a mesh from raw coordinates and tet connectivity, with the default
/// degeneracy floor.
pub fn build_topology(vertices: Vec<Point>, tets: Vec<[usize; 4]>) -> Result<TetMesh> {
    TetMesh::build(vertices, tets, DEFAULT_DEGENERACY_FACTOR)
}

impl TetMesh {
    /// Validates connectivity and geometry, orients every tet positively and
    /// derives edges, boundary faces and classifications.
    pub fn build(
        vertices: Vec<Point>,
        mut tets: Vec<[usize; 4]>,
        degeneracy_factor: f64,
    ) -> Result<TetMesh> {
        if tets.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let nv = vertices.len();
        let mut referenced = vec![false; nv];
        for (t, tet) in tets.iter_mut().enumerate() {
            for &v in tet.iter() {
                if v >= nv {
                    return Err(Error::InconsistentConnectivity(format!(
                        "tet {t} references vertex {v}, but there are only {nv} vertices"
                    )));
                }
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    if tet[i] == tet[j] {
                        return Err(Error::DegenerateTet {
                            tet: t,
                            reason: format!("repeated vertex index {}", tet[i]),
                        });
                    }
                }
            }
            let p = tet.map(|v| vertices[v]);
            let longest = LOCAL_EDGES
                .iter()
                .map(|&[a, b]| (p[b] - p[a]).norm())
                .fold(0.0, f64::max);
            let vol = signed_volume(&p);
            let floor = degeneracy_factor * longest.powi(3);
            if !(vol.abs() >= floor) || longest == 0.0 {
                return Err(Error::DegenerateTet {
                    tet: t,
                    reason: format!("volume {:e} below floor {:e}", vol.abs(), floor),
                });
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
            for &v in tet.iter() {
                referenced[v] = true;
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(Error::InconsistentConnectivity(format!(
                "vertex {v} is not used by any tet"
            )));
        }

        // faces: sorted key -> (tet, local face, parity)
        let mut faces: HashMap<[usize; 3], Vec<(usize, usize, bool)>> = HashMap::new();
        for (t, tet) in tets.iter().enumerate() {
            for (k, lf) in OUTWARD_FACES.iter().enumerate() {
                let (key, odd) = sorted3(lf.map(|l| tet[l]));
                faces.entry(key).or_default().push((t, k, odd));
            }
        }
        let mut face_keys: Vec<_> = faces.keys().copied().collect();
        face_keys.sort_unstable();

        let mut boundary_faces = Vec::new();
        let mut tet_neighbors: Vec<Vec<usize>> = vec![Vec::new(); tets.len()];
        for key in &face_keys {
            let owners = &faces[key];
            match owners.as_slice() {
                [(t, k, _)] => {
                    boundary_faces.push(OUTWARD_FACES[*k].map(|l| tets[*t][l]));
                }
                [(t0, _, p0), (t1, _, p1)] => {
                    if p0 == p1 {
                        return Err(Error::InconsistentConnectivity(format!(
                            "face {key:?} has the same orientation in tets {t0} and {t1} (overlapping tets)"
                        )));
                    }
                    tet_neighbors[*t0].push(*t1);
                    tet_neighbors[*t1].push(*t0);
                }
                _ => {
                    return Err(Error::NonManifoldFace {
                        face: *key,
                        count: owners.len(),
                    })
                }
            }
        }

        // face-connectedness
        let mut seen = vec![false; tets.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        while let Some(t) = stack.pop() {
            for &s in &tet_neighbors[t] {
                if !seen[s] {
                    seen[s] = true;
                    reached += 1;
                    stack.push(s);
                }
            }
        }
        if reached != tets.len() {
            return Err(Error::InconsistentConnectivity(format!(
                "mesh is not face-connected ({reached} of {} tets reachable from tet 0)",
                tets.len()
            )));
        }

        let mut edges: Vec<[usize; 2]> = tets
            .iter()
            .flat_map(|tet| {
                LOCAL_EDGES.iter().map(move |&[a, b]| {
                    let (i, j) = (tet[a], tet[b]);
                    [i.min(j), i.max(j)]
                })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let edge_lookup: HashMap<[usize; 2], usize> =
            edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();

        let mut edge_tets = vec![Vec::new(); edges.len()];
        let tet_edges: Vec<[LocalEdge; 6]> = tets
            .iter()
            .enumerate()
            .map(|(t, tet)| {
                LOCAL_EDGES.map(|[a, b]| {
                    let (i, j) = (tet[a], tet[b]);
                    let edge = edge_lookup[&[i.min(j), i.max(j)]];
                    edge_tets[edge].push(t);
                    LocalEdge {
                        edge,
                        sign: if i < j { 1 } else { -1 },
                    }
                })
            })
            .collect();

        let mut vertex_class = vec![EntityClass::Interior; nv];
        let mut edge_class = vec![EntityClass::Interior; edges.len()];
        for f in &boundary_faces {
            for k in 0..3 {
                vertex_class[f[k]] = EntityClass::Boundary;
                let (i, j) = (f[k], f[(k + 1) % 3]);
                edge_class[edge_lookup[&[i.min(j), i.max(j)]]] = EntityClass::Boundary;
            }
        }

        let mut vertex_tets = vec![Vec::new(); nv];
        for (t, tet) in tets.iter().enumerate() {
            for &v in tet {
                vertex_tets[v].push(t);
            }
        }

        Ok(TetMesh {
            vertices,
            tets,
            edges,
            tet_edges,
            boundary_faces,
            vertex_class,
            edge_class,
            vertex_tets,
            edge_tets,
            edge_lookup,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn tet_edges(&self, tet: usize) -> &[LocalEdge; 6] {
        &self.tet_edges[tet]
    }

    /// Boundary triangles, each ordered so that `(b - a) x (c - a)` points out
    /// of the domain.
    pub fn boundary_faces(&self) -> &[[usize; 3]] {
        &self.boundary_faces
    }

    pub fn vertex_class(&self, v: usize) -> EntityClass {
        self.vertex_class[v]
    }

    pub fn edge_class(&self, e: usize) -> EntityClass {
        self.edge_class[e]
    }

    /// Tets having `v` as a vertex, in increasing order.
    pub fn vertex_tets(&self, v: usize) -> &[usize] {
        &self.vertex_tets[v]
    }

    /// Tets containing edge `e`, in increasing order.
    pub fn edge_tets(&self, e: usize) -> &[usize] {
        &self.edge_tets[e]
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edge_lookup.get(&[i.min(j), i.max(j)]).copied()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn count_vertices(&self, class: EntityClass) -> usize {
        self.vertex_class.iter().filter(|&&c| c == class).count()
    }

    pub fn count_edges(&self, class: EntityClass) -> usize {
        self.edge_class.iter().filter(|&&c| c == class).count()
    }

    pub fn tet_points(&self, tet: usize) -> [Point; 4] {
        self.tets[tet].map(|v| self.vertices[v])
    }

    /// Volume of a tet (positive: tets are stored positively oriented).
    pub fn tet_volume(&self, tet: usize) -> f64 {
        signed_volume(&self.tet_points(tet))
    }

    pub fn tet_diameter(&self, tet: usize) -> f64 {
        let p = self.tet_points(tet);
        LOCAL_EDGES
            .iter()
            .map(|&[a, b]| (p[b] - p[a]).norm())
            .fold(0.0, f64::max)
    }

    /// Mesh size: the largest tet diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.n_tets())
            .map(|t| self.tet_diameter(t))
            .fold(0.0, f64::max)
    }

    pub fn volume(&self) -> f64 {
        (0..self.n_tets()).map(|t| self.tet_volume(t)).sum()
    }

    /// Volume-weighted centroid of the domain.
    pub fn centroid(&self) -> Point {
        let mut acc = Vector3::zeros();
        let mut vol = 0.0;
        for t in 0..self.n_tets() {
            let p = self.tet_points(t);
            let v = self.tet_volume(t);
            acc += v * (p[0].coords + p[1].coords + p[2].coords + p[3].coords) / 4.0;
            vol += v;
        }
        Point::from(acc / vol)
    }

    /// Endpoints of edge `e`, lower index first.
    pub fn edge_points(&self, e: usize) -> (Point, Point) {
        let [i, j] = self.edges[e];
        (self.vertices[i], self.vertices[j])
    }

    /// Outward unit normal and area of a boundary face.
    pub fn face_normal_area(&self, face: &[usize; 3]) -> (Vector3<f64>, f64) {
        let [a, b, c] = face.map(|v| self.vertices[v]);
        let n = (b - a).cross(&(c - a));
        let norm = n.norm();
        (n / norm, 0.5 * norm)
    }

    /// Rebuilds the mesh after mapping every vertex through `f`, keeping the
    /// connectivity.
    pub fn map_vertices(&self, f: impl Fn(&Point) -> Point) -> Result<TetMesh> {
        TetMesh::build(
            self.vertices.iter().map(f).collect(),
            self.tets.clone(),
            DEFAULT_DEGENERACY_FACTOR,
        )
    }

    /// Moves a vertex without re-validating the mesh. Only meant for fault
    /// injection in tests; the resulting mesh may violate every invariant.
    #[doc(hidden)]
    pub fn move_vertex_unchecked(&mut self, v: usize, p: Point) {
        self.vertices[v] = p;
    }

    /// Serializes to the plain-text mesh format: `nv nt`, then `nv` lines
    /// `x y z`, then `nt` lines `i j k l` (0-based).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n_vertices(), self.n_tets());
        for p in &self.vertices {
            let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
        }
        for t in &self.tets {
            let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], t[3]);
        }
        s
    }

    pub fn parse(text: &str) -> Result<TetMesh> {
        let (vertices, tets) = parse_raw(text)?;
        build_topology(vertices, tets)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<TetMesh> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Parses the text mesh format into raw coordinates and connectivity.
pub fn parse_raw(text: &str) -> Result<(Vec<Point>, Vec<[usize; 4]>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let (line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header 'nv nt'".into()))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(line, format!("bad header: {e}")))?;
    let [nv, nt] = counts[..] else {
        return Err(parse_err(line, "header must be 'nv nt'".into()));
    };

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(line, format!("expected {nv} vertex lines")))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line, format!("bad coordinate: {e}")))?;
        let [x, y, z] = c[..] else {
            return Err(parse_err(line, "vertex line must have 3 coordinates".into()));
        };
        vertices.push(Point::new(x, y, z));
    }

    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(line, format!("expected {nt} tet lines")))?;
        let c: Vec<usize> = l
            .split_whitespace()
            .map(str::parse::<usize>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line, format!("bad vertex index: {e}")))?;
        let [a, b, cc, d] = c[..] else {
            return Err(parse_err(line, "tet line must have 4 indices".into()));
        };
        tets.push([a, b, cc, d]);
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "trailing content after the tet list".into()));
    }
    Ok((vertices, tets))
}

/// Unit cube `[0,1]^3` split into `n^3` cells, each cut into 6 tets around
/// its main diagonal (Kuhn/Freudenthal pattern). Panics if `n == 0`.
pub fn generate_cube_mesh(n: usize) -> TetMesh {
    assert!(n >= 1, "cube mesh needs at least one subdivision");
    let m = n + 1;
    let idx = |i: usize, j: usize, k: usize| i + m * (j + m * k);
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                vertices.push(Point::new(i as f64 * h, j as f64 * h, k as f64 * h));
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = [idx(c[0], c[1], c[2]); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[s + 1] = idx(c[0], c[1], c[2]);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    build_topology(vertices, tets).expect("Kuhn cube mesh is valid by construction")
}

/// The closed star of a vertex together with the counts used by the Euler
/// identities.
#[derive(Debug, Clone)]
pub struct VertexPatch {
    pub center: usize,
    pub class: EntityClass,
    /// Tets sharing the center vertex.
    pub tets: Vec<usize>,
    /// Global indices of the patch vertices, sorted; position = local index.
    pub vertices: Vec<usize>,
    /// Global indices of the patch edges, sorted; position = local index.
    pub edges: Vec<usize>,
    /// `N`: vertices in the closed patch.
    pub n_vertices: usize,
    /// `A`: edges in the closed patch.
    pub n_edges: usize,
    /// `N_b`: vertices on the boundary of the patch.
    pub n_boundary: usize,
    /// `N_ib`: for a boundary center, vertices of the patch boundary that lie
    /// in the interior of the link disk (i.e. off the domain boundary within
    /// the patch surface). `None` for interior centers.
    pub n_interior_boundary: Option<usize>,
}

impl VertexPatch {
    pub fn local_vertex(&self, global: usize) -> Option<usize> {
        self.vertices.binary_search(&global).ok()
    }

    pub fn local_edge(&self, global: usize) -> Option<usize> {
        self.edges.binary_search(&global).ok()
    }

    /// Number of compatibility conditions carried by this patch.
    pub fn constraint_count(&self) -> usize {
        match (self.class, self.n_interior_boundary) {
            (EntityClass::Boundary, Some(nib)) => nib,
            _ => self.n_boundary.saturating_sub(3),
        }
    }
}

/// Extracts the star of vertex `a` and verifies it is a topological ball.
///
/// The link of `a` (faces opposite `a`) must be a connected closed surface
/// of Euler characteristic 2 for an interior vertex, or a connected surface
/// with boundary of Euler characteristic 1 (a disk) for a boundary vertex.
pub fn vertex_patch(mesh: &TetMesh, a: usize) -> Result<VertexPatch> {
    let not_ball = |reason: String| Error::NotABall { vertex: a, reason };
    let tets = mesh.vertex_tets(a).to_vec();
    let class = mesh.vertex_class(a);

    let mut vertices: Vec<usize> = tets.iter().flat_map(|&t| mesh.tets()[t]).collect();
    vertices.sort_unstable();
    vertices.dedup();
    let mut edges: Vec<usize> = tets
        .iter()
        .flat_map(|&t| mesh.tet_edges(t).map(|le| le.edge))
        .collect();
    edges.sort_unstable();
    edges.dedup();

    // link triangles and their edges
    let link: Vec<[usize; 3]> = tets
        .iter()
        .map(|&t| {
            let mut f = [0; 3];
            let mut k = 0;
            for &v in &mesh.tets()[t] {
                if v != a {
                    f[k] = v;
                    k += 1;
                }
            }
            f.sort_unstable();
            f
        })
        .collect();
    let mut link_edges: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
    for (f, tri) in link.iter().enumerate() {
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            link_edges.entry([tri[p], tri[q]]).or_default().push(f);
        }
    }
    if let Some((e, _)) = link_edges.iter().find(|(_, fs)| fs.len() > 2) {
        return Err(not_ball(format!("link edge {e:?} bounds more than two link faces")));
    }

    let mut seen = vec![false; link.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut reached = 1;
    while let Some(f) = stack.pop() {
        let tri = link[f];
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            for &g in &link_edges[&[tri[p], tri[q]]] {
                if !seen[g] {
                    seen[g] = true;
                    reached += 1;
                    stack.push(g);
                }
            }
        }
    }
    if reached != link.len() {
        return Err(not_ball("link is not connected".into()));
    }

    let link_vertices = vertices.len() - 1;
    let euler_char = link_vertices as i64 - link_edges.len() as i64 + link.len() as i64;
    let mut rim: Vec<usize> = link_edges
        .iter()
        .filter(|(_, fs)| fs.len() == 1)
        .flat_map(|(e, _)| *e)
        .collect();
    rim.sort_unstable();
    rim.dedup();

    let n = vertices.len();
    let (n_boundary, n_interior_boundary) = match class {
        EntityClass::Interior => {
            if !rim.is_empty() || euler_char != 2 {
                return Err(not_ball(format!(
                    "interior vertex link is not a sphere (Euler characteristic {euler_char}, {} open link edges)",
                    rim.len()
                )));
            }
            (n - 1, None)
        }
        EntityClass::Boundary => {
            if rim.is_empty() || euler_char != 1 {
                return Err(not_ball(format!(
                    "boundary vertex link is not a disk (Euler characteristic {euler_char})"
                )));
            }
            (n, Some(link_vertices - rim.len()))
        }
    };

    Ok(VertexPatch {
        center: a,
        class,
        tets,
        n_vertices: n,
        n_edges: edges.len(),
        vertices,
        edges,
        n_boundary,
        n_interior_boundary,
    })
}

/// Outcome of checking a patch against the Euler edge-count identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EulerCheck {
    pub residual: i64,
    pub passed: bool,
}

/// Residual of `A = (3N - 6) + (N_b - 3)` for an interior center or
/// `A = (3N - 6) + N_ib` for a boundary center.
pub fn euler_check(patch: &VertexPatch) -> EulerCheck {
    let a = patch.n_edges as i64;
    let n = patch.n_vertices as i64;
    let excess = match patch.n_interior_boundary {
        Some(nib) => nib as i64,
        None => patch.n_boundary as i64 - 3,
    };
    let residual = a - (3 * n - 6) - excess;
    EulerCheck {
        residual,
        passed: residual == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_tet() -> TetMesh {
        build_topology(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap()
    }

    fn two_tets() -> TetMesh {
        build_topology(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
                Point::new(1.0, 1.0, 1.0),
            ],
            vec![[0, 1, 2, 3], [1, 2, 3, 4]],
        )
        .unwrap()
    }

    #[test]
    fn single_tet_topology() {
        let m = reference_tet();
        assert_eq!(m.n_edges(), 6);
        assert_eq!(m.count_edges(EntityClass::Boundary), 6);
        assert_eq!(m.count_vertices(EntityClass::Boundary), 4);
        assert_eq!(m.count_vertices(EntityClass::Interior), 0);
        assert_eq!(m.boundary_faces().len(), 4);
        assert_eq!(
            m.edges(),
            &[[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]
        );
    }

    #[test]
    fn boundary_faces_point_outward() {
        let m = generate_cube_mesh(2);
        let c = m.centroid();
        let mut area = 0.0;
        for f in m.boundary_faces() {
            let (n, a) = m.face_normal_area(f);
            let mid = (m.vertices()[f[0]].coords + m.vertices()[f[1]].coords + m.vertices()[f[2]].coords) / 3.0;
            assert!(n.dot(&(mid - c.coords)) > 0.0);
            area += a;
        }
        assert!((area - 6.0).abs() < 1e-12);
    }

    #[test]
    fn two_tets_sharing_a_face() {
        let m = two_tets();
        // enumeration: 6 edges per tet, 3 shared
        assert_eq!(m.n_edges(), 9);
        assert_eq!(m.boundary_faces().len(), 6);
        for e in [m.edge_index(1, 2), m.edge_index(1, 3), m.edge_index(2, 3)] {
            assert_eq!(m.edge_class(e.unwrap()), EntityClass::Boundary);
        }
        assert_eq!(m.count_edges(EntityClass::Interior), 0);
    }

    #[test]
    fn negatively_oriented_input_is_reoriented() {
        let m = build_topology(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1, 3]],
        )
        .unwrap();
        assert!((m.tet_volume(0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn repeated_vertex_is_degenerate() {
        let err = build_topology(
            vec![Point::origin(), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2, 2]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("degenerate tet"), "{err}");
    }

    #[test]
    fn flat_tet_is_degenerate() {
        let err = build_topology(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateTet { tet: 0, .. }));
    }

    #[test]
    fn non_manifold_face_rejected() {
        let err = build_topology(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
                Point::new(0.0, 0.0, -1.0),
                Point::new(0.3, 0.3, 2.0),
            ],
            vec![[0, 1, 2, 3], [0, 1, 2, 4], [0, 1, 2, 5]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonManifoldFace { count: 3, .. }), "{err}");
    }

    #[test]
    fn out_of_range_and_unused_vertices_rejected() {
        let pts = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
            Point::new(5.0, 5.0, 5.0),
        ];
        assert!(matches!(
            build_topology(pts[..4].to_vec(), vec![[0, 1, 2, 7]]),
            Err(Error::InconsistentConnectivity(_))
        ));
        assert!(matches!(
            build_topology(pts, vec![[0, 1, 2, 3]]),
            Err(Error::InconsistentConnectivity(_))
        ));
        assert!(matches!(build_topology(vec![], vec![]), Err(Error::EmptyMesh)));
    }

    #[test]
    fn overlapping_tets_rejected() {
        let err = build_topology(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
                Point::new(0.1, 0.1, 0.5),
            ],
            vec![[0, 1, 2, 3], [0, 1, 2, 4]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InconsistentConnectivity(_)), "{err}");
    }

    #[test]
    fn cube_mesh_counts() {
        let m = generate_cube_mesh(1);
        assert_eq!(m.n_vertices(), 8);
        assert_eq!(m.n_tets(), 6);
        assert_eq!(m.n_edges(), 19);
        for t in 0..6 {
            assert!((m.tet_volume(t) - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((m.mesh_size() - 3f64.sqrt()).abs() < 1e-15);

        let m2 = generate_cube_mesh(2);
        assert_eq!(m2.count_vertices(EntityClass::Interior), 1);
        assert_eq!(m2.count_vertices(EntityClass::Boundary), 26);
        assert_eq!(m2.vertex_class(13), EntityClass::Interior);
        assert!((m2.mesh_size() - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_tet_patch_counts() {
        let m = reference_tet();
        for a in 0..4 {
            let p = vertex_patch(&m, a).unwrap();
            assert_eq!((p.n_vertices, p.n_edges, p.n_interior_boundary), (4, 6, Some(0)));
            let chk = euler_check(&p);
            assert_eq!(chk.residual, 0);
            assert!(chk.passed);
        }
    }

    #[test]
    fn interior_patch_of_cube() {
        let m = generate_cube_mesh(2);
        let p = vertex_patch(&m, 13).unwrap();
        assert_eq!(p.class, EntityClass::Interior);
        assert_eq!(p.n_boundary, p.n_vertices - 1);
        // Kuhn interior vertex: 14 neighbours, 24 tets
        assert_eq!(p.tets.len(), 24);
        assert_eq!(p.n_vertices, 15);
        assert_eq!(p.n_edges, (3 * 15 - 6) + (14 - 3));
        assert_eq!(euler_check(&p).residual, 0);
    }

    #[test]
    fn corner_patch_of_unit_cube() {
        let m = generate_cube_mesh(1);
        let p = vertex_patch(&m, 0).unwrap();
        assert_eq!(p.class, EntityClass::Boundary);
        assert_eq!(p.n_vertices, 8);
        assert_eq!(p.n_edges, 19);
        // the far corner sits inside the link disk: spoke (0,7) is the body diagonal
        assert_eq!(p.n_interior_boundary, Some(1));
        assert!(euler_check(&p).passed);
    }

    #[test]
    fn corrupted_patch_fails_euler() {
        let m = generate_cube_mesh(2);
        let mut p = vertex_patch(&m, 13).unwrap();
        p.n_edges -= 1;
        let chk = euler_check(&p);
        assert_eq!(chk.residual, -1);
        assert!(!chk.passed);
    }

    #[test]
    fn vertex_contact_only_is_rejected() {
        // two tets touching only at vertex 0
        let m = build_topology(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
                Point::new(-1.0, 0.0, 0.0),
                Point::new(0.0, -1.0, 0.0),
                Point::new(0.0, 0.0, -1.0),
            ],
            vec![[0, 1, 2, 3], [0, 4, 5, 6]],
        );
        assert!(matches!(m, Err(Error::InconsistentConnectivity(_))));
    }

    #[test]
    fn text_round_trip() {
        let m = generate_cube_mesh(2);
        let back = TetMesh::parse(&m.to_text()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.tets(), m.tets());
        assert_eq!(back.edges(), m.edges());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = TetMesh::parse("2 1\n0 0 0\n1 x 0\n0 1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = TetMesh::parse("4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }
}
