//! Edge topology, interior-edge flaps and closed-surface validation.

use serde::Serialize;

use super::TriangleMesh;

/// Undirected edge with the apexes of its (up to two) incident triangles.
/// `m` is the apex of the face containing the directed half `i -> j`,
/// `k` the apex of the face containing `j -> i`; `i < j` always. `face_m`
/// and `face_k` are the face indices the apexes came from.
#[derive(Debug, Clone, Copy)]
pub struct UndirectedEdge {
    pub i: u32,
    pub j: u32,
    pub m: Option<u32>,
    pub k: Option<u32>,
    pub face_m: Option<u32>,
    pub face_k: Option<u32>,
    pub forward_halves: u32,
    pub backward_halves: u32,
}

impl UndirectedEdge {
    pub fn half_count(&self) -> u32 {
        self.forward_halves + self.backward_halves
    }
}

/// Interior manifold edge (i, j) with the two opposite apexes m and k.
/// The orientation convention fixes which apex is which, so the flap is a
/// deterministic function of the connectivity alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeFlap {
    pub i: u32,
    pub j: u32,
    pub m: u32,
    pub k: u32,
}

#[derive(Debug, Clone)]
pub struct MeshTopology {
    pub vertex_count: usize,
    /// Sorted by (i, j); deterministic for a given face list.
    pub edges: Vec<UndirectedEdge>,
}

impl MeshTopology {
    pub fn from_faces(faces: &[[u32; 3]], vertex_count: usize) -> Self {
        // halves: (lo, hi, is_forward, apex, face)
        let mut halves: Vec<(u32, u32, bool, u32, u32)> = Vec::with_capacity(faces.len() * 3);
        for (fi, &[a, b, c]) in faces.iter().enumerate() {
            for (from, to, apex) in [(a, b, c), (b, c, a), (c, a, b)] {
                let (lo, hi) = if from < to { (from, to) } else { (to, from) };
                halves.push((lo, hi, from == lo, apex, fi as u32));
            }
        }
        halves.sort_by_key(|&(lo, hi, _, _, _)| (lo, hi));
        let mut edges = Vec::new();
        let mut idx = 0;
        while idx < halves.len() {
            let (lo, hi, _, _, _) = halves[idx];
            let mut edge = UndirectedEdge {
                i: lo,
                j: hi,
                m: None,
                k: None,
                face_m: None,
                face_k: None,
                forward_halves: 0,
                backward_halves: 0,
            };
            while idx < halves.len() && halves[idx].0 == lo && halves[idx].1 == hi {
                let (_, _, forward, apex, face) = halves[idx];
                if forward {
                    edge.forward_halves += 1;
                    edge.m.get_or_insert(apex);
                    edge.face_m.get_or_insert(face);
                } else {
                    edge.backward_halves += 1;
                    edge.k.get_or_insert(apex);
                    edge.face_k.get_or_insert(face);
                }
                idx += 1;
            }
            edges.push(edge);
        }
        Self { vertex_count, edges }
    }

    pub fn from_mesh(mesh: &TriangleMesh) -> Self {
        Self::from_faces(mesh.faces(), mesh.vertex_count())
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Flaps of all interior edges with exactly one face per side.
    pub fn flaps(&self) -> impl Iterator<Item = EdgeFlap> + '_ {
        self.edges.iter().filter_map(|e| match (e.forward_halves, e.backward_halves, e.m, e.k) {
            (1, 1, Some(m), Some(k)) => Some(EdgeFlap { i: e.i, j: e.j, m, k }),
            _ => None,
        })
    }
}

/// Relative area below which an input face counts as degenerate.
pub const DEGENERATE_AREA_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub boundary_edge_count: usize,
    pub nonmanifold_edge_count: usize,
    pub misoriented_edge_count: usize,
    pub unreferenced_vertex_count: usize,
    pub degenerate_faces: Vec<u32>,
    pub closed: bool,
    pub edge_manifold: bool,
    pub oriented: bool,
    pub connected: bool,
    /// Computed only when the edge structure is sound; `None` means skipped.
    pub vertex_links_ok: Option<bool>,
    pub euler_characteristic: i64,
    pub genus: Option<i64>,
}

impl ValidationReport {
    /// Closed oriented connected 2-manifold, any genus.
    pub fn is_closed_manifold(&self) -> bool {
        self.closed
            && self.edge_manifold
            && self.oriented
            && self.connected
            && self.vertex_links_ok == Some(true)
            && self.unreferenced_vertex_count == 0
    }

    /// Eligible input for the spherical flow: genus-zero closed manifold
    /// with no degenerate faces.
    pub fn is_genus_zero_sphere(&self) -> bool {
        self.is_closed_manifold() && self.genus == Some(0) && self.degenerate_faces.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "vertices: {}  edges: {}  faces: {}", self.vertices, self.edges, self.faces)?;
        writeln!(
            f,
            "closed: {}  edge-manifold: {}  oriented: {}  connected: {}",
            self.closed, self.edge_manifold, self.oriented, self.connected
        )?;
        writeln!(
            f,
            "vertex links: {}",
            match self.vertex_links_ok {
                Some(true) => "ok",
                Some(false) => "broken",
                None => "not checked",
            }
        )?;
        if self.boundary_edge_count > 0 {
            writeln!(f, "boundary edges: {}", self.boundary_edge_count)?;
        }
        if self.nonmanifold_edge_count > 0 {
            writeln!(f, "non-manifold edges: {}", self.nonmanifold_edge_count)?;
        }
        if self.misoriented_edge_count > 0 {
            writeln!(f, "inconsistently oriented edges: {}", self.misoriented_edge_count)?;
        }
        if self.unreferenced_vertex_count > 0 {
            writeln!(f, "unreferenced vertices: {}", self.unreferenced_vertex_count)?;
        }
        if !self.degenerate_faces.is_empty() {
            writeln!(f, "degenerate faces: {} (first: {:?})", self.degenerate_faces.len(), {
                let n = self.degenerate_faces.len().min(8);
                &self.degenerate_faces[..n]
            })?;
        }
        writeln!(f, "euler characteristic: {}", self.euler_characteristic)?;
        match self.genus {
            Some(g) => writeln!(f, "genus: {g}")?,
            None => writeln!(f, "genus: undefined")?,
        }
        write!(
            f,
            "eligible for spherical flow: {}",
            if self.is_genus_zero_sphere() { "yes" } else { "no" }
        )
    }
}

/// Full topological and geometric screening of a candidate flow input.
pub fn validate_closed_genus_zero(mesh: &TriangleMesh) -> ValidationReport {
    let topo = MeshTopology::from_mesh(mesh);
    let nv = mesh.vertex_count();
    let nf = mesh.face_count();

    let mut boundary = 0usize;
    let mut nonmanifold = 0usize;
    let mut misoriented = 0usize;
    for e in &topo.edges {
        match e.half_count() {
            1 => boundary += 1,
            2 => {
                if e.forward_halves != 1 {
                    misoriented += 1;
                }
            }
            _ => nonmanifold += 1,
        }
    }
    let closed = nf > 0 && boundary == 0 && nonmanifold == 0;
    let edge_manifold = nonmanifold == 0;
    let oriented = misoriented == 0;

    let mut referenced = vec![false; nv];
    for f in mesh.faces() {
        for &v in f {
            referenced[v as usize] = true;
        }
    }
    let unreferenced = referenced.iter().filter(|r| !**r).count();

    let mean_area = mesh.mean_face_area();
    let degenerate_faces: Vec<u32> = (0..nf)
        .filter(|&fi| mesh.face_area(fi) < DEGENERATE_AREA_RATIO * mean_area)
        .map(|fi| fi as u32)
        .collect();

    let connected = faces_connected(mesh.faces(), nv, &referenced);

    let vertex_links_ok = if closed && edge_manifold && oriented {
        Some(links_are_single_cycles(mesh.faces(), nv))
    } else {
        None
    };

    let euler = nv as i64 - topo.edge_count() as i64 + nf as i64;
    let genus = if closed
        && edge_manifold
        && oriented
        && connected
        && vertex_links_ok == Some(true)
        && unreferenced == 0
        && (2 - euler) % 2 == 0
        && euler <= 2
    {
        Some((2 - euler) / 2)
    } else {
        None
    };

    ValidationReport {
        vertices: nv,
        edges: topo.edge_count(),
        faces: nf,
        boundary_edge_count: boundary,
        nonmanifold_edge_count: nonmanifold,
        misoriented_edge_count: misoriented,
        unreferenced_vertex_count: unreferenced,
        degenerate_faces,
        closed,
        edge_manifold,
        oriented,
        connected,
        vertex_links_ok,
        euler_characteristic: euler,
        genus,
    }
}

fn faces_connected(faces: &[[u32; 3]], nv: usize, referenced: &[bool]) -> bool {
    if faces.is_empty() {
        return false;
    }
    let mut parent: Vec<u32> = (0..nv as u32).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    for &[a, b, c] in faces {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        parent[rb as usize] = ra;
        let rc = find(&mut parent, c);
        let ra = find(&mut parent, a);
        parent[rc as usize] = ra;
    }
    let mut root = None;
    for v in 0..nv {
        if referenced[v] {
            let r = find(&mut parent, v as u32);
            match root {
                None => root = Some(r),
                Some(r0) if r0 != r => return false,
                _ => {}
            }
        }
    }
    root.is_some()
}

/// Checks that each referenced vertex's incident triangles close into a
/// single fan. The map neighbor -> next-neighbor taken from each incident
/// face must form exactly one cycle.
fn links_are_single_cycles(faces: &[[u32; 3]], nv: usize) -> bool {
    let mut pairs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); nv];
    for &[a, b, c] in faces {
        pairs[a as usize].push((b, c));
        pairs[b as usize].push((c, a));
        pairs[c as usize].push((a, b));
    }
    for around in &mut pairs {
        if around.is_empty() {
            continue;
        }
        around.sort_unstable();
        // duplicate outgoing neighbor would mean a repeated directed edge
        if around.windows(2).any(|w| w[0].0 == w[1].0) {
            return false;
        }
        let start = around[0].0;
        let mut cur = start;
        let mut seen = 0usize;
        loop {
            let next = match around.binary_search_by_key(&cur, |&(from, _)| from) {
                Ok(pos) => around[pos].1,
                Err(_) => return false,
            };
            seen += 1;
            cur = next;
            if cur == start {
                break;
            }
            if seen > around.len() {
                return false;
            }
        }
        if seen != around.len() {
            return false;
        }
    }
    true
}
