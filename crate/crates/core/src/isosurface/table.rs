//! Marching-cubes case table, generated once from a per-face rule.
//!
//! Corner `c` of a cell sits at offset `CORNERS[c]`; bit `c` of a case index is
//! set when that corner is inside (value above the isovalue). On every cube
//! face the boundary is walked counterclockwise as seen from outside the cube,
//! and each crossing where the walk enters the inside is joined to the next
//! crossing where it leaves. The rule depends only on the four corners of the
//! face, so two cells sharing a face always produce the same segments with
//! opposite directions: the surface is closed and consistently oriented.
//! Diagonally opposite inside corners on a face stay separated.
//!
//! Segments chain into closed loops that are triangulated without any diagonal
//! joining two vertices of one cube face; such a diagonal could coincide with
//! an edge produced by the neighbouring cell.

use std::sync::OnceLock;

pub const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

pub const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Face corners in counterclockwise order seen from outside the cube.
const FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1], // z = 0
    [4, 5, 6, 7], // z = 1
    [0, 1, 5, 4], // y = 0
    [3, 7, 6, 2], // y = 1
    [0, 4, 7, 3], // x = 0
    [1, 2, 6, 5], // x = 1
];

/// Triangles of one case, as cube edge ids, plus the loops they came from.
#[derive(Debug, Clone, Default)]
pub struct Case {
    pub triangles: Vec<[u8; 3]>,
    pub loops: Vec<Vec<u8>>,
}

fn edge_between(a: usize, b: usize) -> usize {
    EDGES
        .iter()
        .position(|e| (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a))
        .expect("adjacent corners")
}

fn edges_share_face(a: u8, b: u8) -> bool {
    FACES.iter().any(|f| {
        let on = |e: u8| {
            let [p, q] = EDGES[e as usize];
            f.contains(&p) && f.contains(&q)
        };
        on(a) && on(b)
    })
}

/// Directed segments (from-edge, to-edge) of one face for a case.
fn face_segments(face: &[usize; 4], case: u8) -> Vec<(u8, u8)> {
    let inside = |c: usize| case & (1 << c) != 0;
    // (edge, entering?)
    let mut crossings = Vec::new();
    for i in 0..4 {
        let (a, b) = (face[i], face[(i + 1) % 4]);
        if inside(a) != inside(b) {
            crossings.push((edge_between(a, b) as u8, inside(b)));
        }
    }
    let mut segs = Vec::new();
    let n = crossings.len();
    for i in 0..n {
        if crossings[i].1 {
            let leave = (1..n)
                .map(|s| crossings[(i + s) % n])
                .find(|c| !c.1)
                .expect("crossings alternate");
            segs.push((crossings[i].0, leave.0));
        }
    }
    segs
}

/// Triangulates a polygon given as loop-ordered cube edges, avoiding
/// diagonals between edges on a common face. Returns index triples into the
/// loop, or `None` if no such triangulation exists (never the case for the
/// loops this rule produces; checked by the tests).
fn triangulate_loop(poly: &[u8]) -> Option<Vec<[usize; 3]>> {
    let n = poly.len();
    let side_ok = |a: usize, b: usize| {
        b == a + 1 || (a == 0 && b == n - 1) || !edges_share_face(poly[a], poly[b])
    };
    // split[i][j]: chosen apex for the sub-polygon i..=j
    let mut split = vec![vec![None; n]; n];
    let mut ok = vec![vec![false; n]; n];
    for i in 0..n - 1 {
        ok[i][i + 1] = true;
    }
    for len in 2..n {
        for i in 0..n - len {
            let j = i + len;
            for m in i + 1..j {
                if ok[i][m] && ok[m][j] && side_ok(i, m) && side_ok(m, j) {
                    ok[i][j] = true;
                    split[i][j] = Some(m);
                    break;
                }
            }
        }
    }
    if !ok[0][n - 1] {
        return None;
    }
    let mut tris = Vec::new();
    let mut stack = vec![(0, n - 1)];
    while let Some((i, j)) = stack.pop() {
        if j == i + 1 {
            continue;
        }
        let m = split[i][j].expect("solved interval");
        tris.push([i, m, j]);
        stack.push((i, m));
        stack.push((m, j));
    }
    tris.sort();
    Some(tris)
}

fn build_case(case: u8) -> Case {
    let mut next = [None::<u8>; 12];
    for face in &FACES {
        for (from, to) in face_segments(face, case) {
            debug_assert!(next[from as usize].is_none());
            next[from as usize] = Some(to);
        }
    }
    let mut visited = [false; 12];
    let mut out = Case::default();
    for start in 0..12u8 {
        if next[start as usize].is_none() || visited[start as usize] {
            continue;
        }
        let mut poly = Vec::new();
        let mut e = start;
        loop {
            visited[e as usize] = true;
            poly.push(e);
            e = next[e as usize].expect("closed loop");
            if e == start {
                break;
            }
        }
        let tris = triangulate_loop(&poly)
            .unwrap_or_else(|| panic!("case {case}: loop {poly:?} has no valid triangulation"));
        out.triangles.extend(tris.into_iter().map(|t| t.map(|i| poly[i])));
        out.loops.push(poly);
    }
    out
}

pub fn cases() -> &'static [Case; 256] {
    static TABLE: OnceLock<Box<[Case; 256]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let v: Vec<Case> = (0..=255u8).map(build_case).collect();
        Box::new(v.try_into().expect("256 cases"))
    })
}
