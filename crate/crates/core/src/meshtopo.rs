//! Topology validation of triangle meshes via the Euler characteristic
//! χ = V − E + F.
//!
//! For a closed orientable surface χ = 2 − 2g, where g counts handles; every
//! extra connected component raises χ by 2. On a closed triangulated surface
//! each edge borders two faces, so 2E = 3F, and genus 0 is equivalent to
//! F = 2V − 4.

use std::collections::HashMap;

use thiserror::Error;

use crate::mesh::TriMesh;

#[derive(Debug, Error)]
pub enum TopoError {
    #[error("closed mesh has odd Euler characteristic {0}: corrupt connectivity")]
    OddChiForClosed(i64),
}

/// Undirected edge, smaller vertex index first.
pub type Edge = (u32, u32);

fn edge(a: u32, b: u32) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Every distinct undirected edge with its number of incident faces, sorted
/// by edge.
pub fn enumerate_edges(mesh: &TriMesh) -> Vec<(Edge, usize)> {
    let mut counts: HashMap<Edge, usize> = HashMap::with_capacity(mesh.faces.len() * 3 / 2);
    for f in &mesh.faces {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            *counts.entry(edge(a, b)).or_insert(0) += 1;
        }
    }
    let mut out: Vec<_> = counts.into_iter().collect();
    out.sort_unstable();
    out
}

pub fn euler_characteristic(mesh: &TriMesh) -> i64 {
    let e = enumerate_edges(mesh).len();
    mesh.vertices.len() as i64 - e as i64 + mesh.faces.len() as i64
}

/// χ of a closed triangulated surface from its vertex and face counts,
/// using E = 3F/2. `None` when F is odd (no closed triangulation exists).
pub fn closed_surface_chi(vertices: usize, faces: usize) -> Option<i64> {
    if faces % 2 != 0 {
        return None;
    }
    let edges = 3 * faces / 2;
    Some(vertices as i64 - edges as i64 + faces as i64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyReport {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub chi: i64,
    /// Edges with exactly one incident face.
    pub boundary_edges: usize,
    /// Edges with three or more incident faces.
    pub nonmanifold_edges: usize,
    /// Connected components of the vertex-face incidence graph; unreferenced
    /// vertices count as their own components.
    pub components: usize,
    /// Present only for closed, manifold, single-component meshes.
    pub genus: Option<i64>,
    pub is_sphere: bool,
}

impl TopologyReport {
    pub fn is_closed(&self) -> bool {
        self.boundary_edges == 0 && self.nonmanifold_edges == 0
    }

    /// Sum of component genera, from χ = 2·components − 2·Σg, when closed.
    pub fn total_genus(&self) -> Option<i64> {
        if self.is_closed() {
            Some((2 * self.components as i64 - self.chi) / 2)
        } else {
            None
        }
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

fn count_components(mesh: &TriMesh) -> usize {
    let n = mesh.vertices.len();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    for f in &mesh.faces {
        for &v in &f[1..] {
            let (a, b) = (find(&mut parent, f[0]), find(&mut parent, v));
            if a != b {
                parent[a.max(b) as usize] = a.min(b);
            }
        }
    }
    (0..n as u32).filter(|&v| find(&mut parent, v) == v).count()
}

/// Counts, defect tallies, and genus of `mesh`.
pub fn validate(mesh: &TriMesh) -> Result<TopologyReport, TopoError> {
    let edges = enumerate_edges(mesh);
    let boundary_edges = edges.iter().filter(|(_, c)| *c == 1).count();
    let nonmanifold_edges = edges.iter().filter(|(_, c)| *c >= 3).count();
    let v = mesh.vertices.len();
    let f = mesh.faces.len();
    let e = edges.len();
    let chi = v as i64 - e as i64 + f as i64;
    let components = count_components(mesh);

    let closed = boundary_edges == 0 && nonmanifold_edges == 0;
    if closed && chi.rem_euclid(2) != 0 {
        return Err(TopoError::OddChiForClosed(chi));
    }
    let genus = if closed && components == 1 {
        debug_assert_eq!(2 * e, 3 * f);
        Some((2 - chi) / 2)
    } else {
        None
    };
    Ok(TopologyReport {
        vertices: v,
        edges: e,
        faces: f,
        chi,
        boundary_edges,
        nonmanifold_edges,
        components,
        genus,
        is_sphere: closed && components == 1 && chi == 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tetrahedron() -> TriMesh {
        TriMesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
            vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
        )
    }

    #[test]
    fn single_triangle_edges() {
        let m = TriMesh::new(vec![[0.0; 3]; 3], vec![[0, 1, 2]]);
        let e = enumerate_edges(&m);
        assert_eq!(e.len(), 3);
        assert!(e.iter().all(|(_, c)| *c == 1));
        let r = validate(&m).unwrap();
        assert_eq!(r.boundary_edges, 3);
        assert_eq!(r.genus, None);
        assert!(!r.is_sphere);
    }

    #[test]
    fn tetrahedron_edges_and_chi() {
        let t = tetrahedron();
        let e = enumerate_edges(&t);
        assert_eq!(e.len(), 6);
        assert!(e.iter().all(|(_, c)| *c == 2));
        assert_eq!(euler_characteristic(&t), 2);
        let r = validate(&t).unwrap();
        assert_eq!(r.genus, Some(0));
        assert!(r.is_sphere);
        assert!(t.signed_volume() > 0.0);
    }

    #[test]
    fn two_triangles_share_edge() {
        let m = TriMesh::new(vec![[0.0; 3]; 4], vec![[0, 1, 2], [2, 1, 3]]);
        let e = enumerate_edges(&m);
        assert_eq!(e.len(), 5);
        assert_eq!(e.iter().find(|(k, _)| *k == (1, 2)).unwrap().1, 2);
    }

    #[test]
    fn sphere_scale_counts() {
        assert_eq!(closed_surface_chi(40_962, 81_920), Some(2));
        assert_eq!(closed_surface_chi(2562, 5120), Some(2));
        assert_eq!(closed_surface_chi(1270, 2536), Some(2));
        assert_eq!(closed_surface_chi(4, 3), None);
    }

    #[test]
    fn duplicate_face_is_nonmanifold() {
        let mut t = tetrahedron();
        t.faces.push(t.faces[0]);
        let r = validate(&t).unwrap();
        assert_eq!(r.nonmanifold_edges, 3);
        assert_eq!(r.faces, 5);
        assert_eq!(r.genus, None);
        assert!(!r.is_sphere);
    }

    #[test]
    fn isolated_vertex_breaks_closed_parity() {
        let mut t = tetrahedron();
        t.vertices.push([5.0, 5.0, 5.0]);
        assert!(matches!(validate(&t), Err(TopoError::OddChiForClosed(3))));
    }
}
