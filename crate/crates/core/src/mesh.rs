//! Indexed triangle mesh shared by the surface modules.

/// Triangle mesh with vertex coordinates in millimeters.
///
/// Faces are counterclockwise when viewed from outside.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[u32; 3]>) -> Self {
        Self { vertices, faces }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Checks face indices are in range and no face repeats a vertex.
    pub fn check_indices(&self) -> Result<(), String> {
        let n = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v as usize >= n) {
                return Err(format!("face {fi} references a vertex outside 0..{n}"));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(format!("face {fi} repeats a vertex"));
            }
        }
        Ok(())
    }

    /// Reverses the orientation of every face.
    pub fn flip_winding(&mut self) {
        for f in &mut self.faces {
            f.swap(1, 2);
        }
    }

    /// Sum of signed tetrahedron volumes against the origin.
    ///
    /// Equals the enclosed volume for a closed, outward-oriented mesh.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let a = self.vertices[f[0] as usize];
                let b = self.vertices[f[1] as usize];
                let c = self.vertices[f[2] as usize];
                (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0]))
                    / 6.0
            })
            .sum()
    }
}
