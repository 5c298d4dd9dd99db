//! P1 triangulations of planar domains.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use crate::conformal::{map_mesh, ConformalMap};
use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Shortest round-trip decimal, switching to exponent notation for very
/// small or very large magnitudes.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Conforming triangulation with counterclockwise triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_vertices: Vec<usize>,
    /// Boundary edges as closed loops, each edge oriented so the domain lies
    /// on its left.
    boundary_edges: Vec<[usize; 2]>,
    /// Triangle owning each boundary edge.
    boundary_owner: Vec<usize>,
    h: f64,
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

impl TriMesh {
    /// Builds a mesh and derives its boundary, rejecting inverted or
    /// degenerate triangles and non-manifold edges.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Mesh("no triangles".into()));
        }
        let nv = vertices.len();
        let mut h: f64 = 0.0;
        // directed edge -> owning triangle
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|i| vertices[i]);
            if !(signed_area(a, b, c) > 0.0) {
                return Err(Error::Mesh(format!("triangle {t} has nonpositive signed area")));
            }
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                if directed.insert((i, j), t).is_some() {
                    return Err(Error::Mesh(format!("edge ({i}, {j}) used twice with the same orientation")));
                }
                let (p, q) = (vertices[i], vertices[j]);
                h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        // boundary edges have no twin
        let mut next: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut starts: Vec<(usize, usize)> = Vec::new();
        for (&(i, j), &t) in &directed {
            if !directed.contains_key(&(j, i)) {
                if next.insert(i, (j, t)).is_some() {
                    return Err(Error::Mesh(format!("boundary is pinched at vertex {i}")));
                }
                starts.push((i, j));
            }
        }
        starts.sort_unstable();
        let mut boundary_edges = Vec::with_capacity(starts.len());
        let mut boundary_owner = Vec::with_capacity(starts.len());
        let mut visited: HashMap<usize, bool> = HashMap::new();
        for &(start, _) in &starts {
            if visited.contains_key(&start) {
                continue;
            }
            let mut cur = start;
            loop {
                visited.insert(cur, true);
                let (nxt, t) = *next
                    .get(&cur)
                    .ok_or_else(|| Error::Mesh(format!("open boundary at vertex {cur}")))?;
                boundary_edges.push([cur, nxt]);
                boundary_owner.push(t);
                cur = nxt;
                if cur == start {
                    break;
                }
                if visited.contains_key(&cur) {
                    return Err(Error::Mesh("boundary loops intersect".into()));
                }
            }
        }
        let mut boundary_vertices: Vec<usize> = next.keys().copied().collect();
        boundary_vertices.sort_unstable();
        Ok(Self { vertices, triangles, boundary_vertices, boundary_edges, boundary_owner, h })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Sorted indices of vertices on the boundary.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    /// Triangle adjacent to boundary edge `e`.
    pub fn boundary_owner(&self, e: usize) -> usize {
        self.boundary_owner[e]
    }

    /// Maximum edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Length of the boundary polygon.
    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges
            .iter()
            .map(|&[i, j]| {
                let (p, q) = (self.vertices[i], self.vertices[j]);
                (q[0] - p[0]).hypot(q[1] - p[1])
            })
            .sum()
    }

    /// `is_boundary[i]` for every vertex.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for &i in &self.boundary_vertices {
            mask[i] = true;
        }
        mask
    }

    /// Same combinatorics, new vertex positions. Fails if a triangle inverts.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Mesh("vertex count changed".into()));
        }
        let mut h: f64 = 0.0;
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| vertices[i]);
            if !(signed_area(a, b, c) > 0.0) {
                return Err(Error::Mesh(format!("triangle {t} inverted")));
            }
            for (p, q) in [(a, b), (b, c), (c, a)] {
                h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        Ok(Self { vertices, h, ..self.clone() })
    }

    /// Applies `map` to every vertex.
    pub fn map_vertices(&self, map: impl Fn(Point) -> Point) -> Result<Self> {
        self.with_vertices(self.vertices.iter().map(|&p| map(p)).collect())
    }

    /// Plain text: `v x y` per vertex, then `t i j k` (0-based) per triangle.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.vertices {
            let _ = writeln!(out, "v {} {}", format_number(p[0]), format_number(p[1]));
        }
        for t in &self.triangles {
            let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let mut tok = line.split_whitespace();
            let bad = |what: &str| Error::Parse(format!("mesh line {}: {what}", n + 1));
            match tok.next() {
                None => continue,
                Some(c) if c.starts_with('#') => continue,
                Some("v") => {
                    let mut xy = [0.0; 2];
                    for v in &mut xy {
                        *v = tok.next().ok_or_else(|| bad("missing coordinate"))?.parse().map_err(|_| bad("bad coordinate"))?;
                    }
                    vertices.push(xy);
                }
                Some("t") => {
                    let mut ijk = [0usize; 3];
                    for v in &mut ijk {
                        *v = tok.next().ok_or_else(|| bad("missing index"))?.parse().map_err(|_| bad("bad index"))?;
                    }
                    triangles.push(ijk);
                }
                Some(other) => return Err(bad(&format!("unknown record `{other}`"))),
            }
        }
        Self::new(vertices, triangles)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Concentric-ring triangulation of the disk of radius `radius` about the
/// origin: ring `k` carries `6k` equally spaced vertices at radius
/// `k·radius/n_rings`.
pub fn build_disk_mesh(radius: f64, n_rings: usize) -> Result<TriMesh> {
    if !(radius > 0.0) || n_rings < 2 {
        return Err(Error::Argument(format!(
            "disk mesh needs radius > 0 and n_rings >= 2 (got {radius}, {n_rings})"
        )));
    }
    let n = n_rings;
    let mut vertices = Vec::with_capacity(1 + 3 * n * (n + 1));
    let mut triangles = Vec::with_capacity(6 * n * n);
    vertices.push([0.0, 0.0]);
    let mut inner_start = 0;
    let mut inner_count = 1;
    for k in 1..=n {
        let rho = if k == n { radius } else { radius * k as f64 / n as f64 };
        let m = 6 * k;
        let outer_start = vertices.len();
        for j in 0..m {
            let th = 2.0 * PI * j as f64 / m as f64;
            vertices.push([rho * th.cos(), rho * th.sin()]);
        }
        if k == 1 {
            for j in 0..m {
                triangles.push([0, outer_start + j, outer_start + (j + 1) % m]);
            }
        } else {
            // merge the two angularly sorted rings; (i, j) index the current
            // inner and outer vertex
            let mi = inner_count;
            let (mut i, mut j) = (0usize, 0usize);
            while i < mi || j < m {
                let next_inner = (i + 1) as f64 / mi as f64;
                let next_outer = (j + 1) as f64 / m as f64;
                let inner_v = inner_start + i % mi;
                let outer_v = outer_start + j % m;
                if j < m && (i >= mi || next_outer <= next_inner) {
                    triangles.push([inner_v, outer_v, outer_start + (j + 1) % m]);
                    j += 1;
                } else {
                    triangles.push([inner_v, outer_v, inner_start + (i + 1) % mi]);
                    i += 1;
                }
            }
        }
        inner_start = outer_start;
        inner_count = m;
    }
    TriMesh::new(vertices, triangles)
}

/// Disk mesh with the axes scaled by `a` and `b`.
pub fn build_ellipse_mesh(a: f64, b: f64, n_rings: usize) -> Result<TriMesh> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Argument(format!("ellipse semi-axes must be positive (got {a}, {b})")));
    }
    build_disk_mesh(1.0, n_rings)?.map_vertices(|p| [a * p[0], b * p[1]])
}

/// Structured `nx × ny` grid on `[0, w] × [0, h]`, each cell split along its
/// main diagonal.
pub fn build_rectangle_mesh(w: f64, h: f64, nx: usize, ny: usize) -> Result<TriMesh> {
    if !(w > 0.0 && h > 0.0) || nx == 0 || ny == 0 {
        return Err(Error::Argument("rectangle mesh needs positive sizes and cell counts".into()));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([w * i as f64 / nx as f64, h * j as f64 / ny as f64]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, triangles)
}

/// Textual mesh description:
/// `disk:R:n`, `ellipse:a:b:n`, `rect:w:h:nx:ny`, `file:<path>` or
/// `image:<map>:R:n` (the image of `disk:R:n` under a conformal map).
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Disk { radius: f64, n_rings: usize },
    Ellipse { a: f64, b: f64, n_rings: usize },
    Rectangle { w: f64, h: f64, nx: usize, ny: usize },
    File(PathBuf),
    Image { map: ConformalMap, radius: f64, n_rings: usize },
}

impl MeshSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("mesh spec `{spec}`: {why}"));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
        let count = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("`{s}` is not a count")));
        // a bare path names a mesh file
        let Some((kind, rest)) = spec.split_once(':') else {
            return if Path::new(spec).is_file() { Ok(Self::File(PathBuf::from(spec))) } else { Err(bad("missing parameters")) };
        };
        let args: Vec<&str> = rest.split(':').collect();
        match (kind, args.as_slice()) {
            ("disk", [r, n]) => Ok(Self::Disk { radius: num(r)?, n_rings: count(n)? }),
            ("ellipse", [a, b, n]) => Ok(Self::Ellipse { a: num(a)?, b: num(b)?, n_rings: count(n)? }),
            ("rect", [w, h, nx, ny]) => Ok(Self::Rectangle { w: num(w)?, h: num(h)?, nx: count(nx)?, ny: count(ny)? }),
            ("file", _) if !rest.is_empty() => Ok(Self::File(PathBuf::from(rest))),
            // the map name may itself contain colons, so split from the end
            ("image", _) => {
                let mut it = rest.rsplitn(3, ':');
                let (n, r, map) = (it.next(), it.next(), it.next());
                match (map, r, n) {
                    (Some(map), Some(r), Some(n)) => {
                        Ok(Self::Image { map: map.parse()?, radius: num(r)?, n_rings: count(n)? })
                    }
                    _ => Err(bad("expected image:<map>:R:n")),
                }
            }
            _ => Err(bad("unknown kind or wrong number of fields")),
        }
    }

    pub fn build(&self) -> Result<TriMesh> {
        match self {
            Self::Disk { radius, n_rings } => build_disk_mesh(*radius, *n_rings),
            Self::Ellipse { a, b, n_rings } => build_ellipse_mesh(*a, *b, *n_rings),
            Self::Rectangle { w, h, nx, ny } => build_rectangle_mesh(*w, *h, *nx, *ny),
            Self::File(path) => TriMesh::read_file(path),
            Self::Image { map, radius, n_rings } => map_mesh(&build_disk_mesh(*radius, *n_rings)?, map),
        }
    }
}

impl fmt::Display for MeshSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Disk { radius, n_rings } => write!(f, "disk:{radius}:{n_rings}"),
            Self::Ellipse { a, b, n_rings } => write!(f, "ellipse:{a}:{b}:{n_rings}"),
            Self::Rectangle { w, h, nx, ny } => write!(f, "rect:{w}:{h}:{nx}:{ny}"),
            Self::File(path) => write!(f, "file:{}", path.display()),
            Self::Image { map, radius, n_rings } => write!(f, "image:{map}:{radius}:{n_rings}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_counts() {
        let m = build_disk_mesh(1.0, 2).unwrap();
        assert_eq!(m.n_vertices(), 19);
        assert_eq!(m.triangles().len(), 24);
        assert_eq!(m.boundary_vertices().len(), 12);
        for n in [3, 7, 20] {
            let m = build_disk_mesh(1.0, n).unwrap();
            assert_eq!(m.n_vertices(), 1 + 3 * n * (n + 1));
            assert_eq!(m.triangles().len(), 6 * n * n);
            assert_eq!(m.boundary_edges().len(), 6 * n);
        }
    }

    #[test]
    fn disk_boundary_on_circle_and_h() {
        let m = build_disk_mesh(2.0, 10).unwrap();
        for &i in m.boundary_vertices() {
            let p = m.vertices()[i];
            assert!((p[0].hypot(p[1]) - 2.0).abs() < 1e-14);
        }
        assert!(m.h() <= 2.0 * 2.0 / 10.0);
    }

    #[test]
    fn disk_area_converges() {
        let m = build_disk_mesh(1.0, 40).unwrap();
        assert!((m.area() - PI).abs() / PI < 1e-3);
        let mut prev = 0.0;
        for n in [2, 4, 8, 16, 32] {
            let a = build_disk_mesh(1.0, n).unwrap().area();
            assert!(a > prev && a < PI);
            prev = a;
        }
    }

    #[test]
    fn dilation_keeps_combinatorics() {
        let a = build_disk_mesh(1.0, 2).unwrap();
        let b = build_disk_mesh(2.0, 2).unwrap();
        assert_eq!(a.triangles(), b.triangles());
        for (p, q) in a.vertices().iter().zip(b.vertices()) {
            assert!((2.0 * p[0] - q[0]).abs() < 1e-15 && (2.0 * p[1] - q[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn ellipse_and_rectangle() {
        assert_eq!(build_ellipse_mesh(1.0, 1.0, 5).unwrap(), build_disk_mesh(1.0, 5).unwrap());
        let e = build_ellipse_mesh(2.0, 1.0, 40).unwrap();
        assert!((e.area() - 2.0 * PI).abs() / (2.0 * PI) < 1e-3);
        let r = build_rectangle_mesh(1.0, 1.0, 20, 20).unwrap();
        assert_eq!(r.n_vertices(), 441);
        assert_eq!(r.triangles().len(), 800);
        assert!((r.area() - 1.0).abs() < 1e-12, "area {}", r.area());
        assert_eq!(r.boundary_edges().len(), 80);
    }

    #[test]
    fn boundary_loop_is_closed_and_ccw() {
        let m = build_rectangle_mesh(2.0, 1.0, 4, 3).unwrap();
        let edges = m.boundary_edges();
        for w in edges.windows(2) {
            assert_eq!(w[0][1], w[1][0]);
        }
        assert_eq!(edges.last().unwrap()[1], edges[0][0]);
        // shoelace on the loop gives the enclosed area
        let v = m.vertices();
        let loop_area: f64 = edges.iter().map(|&[i, j]| 0.5 * (v[i][0] * v[j][1] - v[j][0] * v[i][1])).sum();
        assert!((loop_area - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_meshes() {
        assert!(TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 2, 1]]).is_err());
        assert!(build_disk_mesh(1.0, 1).is_err());
        assert!(build_disk_mesh(-1.0, 4).is_err());
    }

    #[test]
    fn text_format() {
        let m = build_disk_mesh(1.0, 3).unwrap();
        let back = TriMesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.triangles(), m.triangles());
        for (p, q) in back.vertices().iter().zip(m.vertices()) {
            assert!((p[0] - q[0]).abs() < 1e-15 && (p[1] - q[1]).abs() < 1e-15);
        }
        assert!(TriMesh::from_text("v 0 0\nq 1 2 3\n").is_err());
    }

    #[test]
    fn mesh_specs() {
        for spec in ["disk:1:4", "ellipse:2:1:5", "rect:1:0.5:4:2", "image:quad:0.2:0.9:6", "image:linear:2:1:1:3"] {
            let parsed = MeshSpec::parse(spec).unwrap();
            assert_eq!(parsed.to_string(), spec);
            assert!(parsed.build().unwrap().area() > 0.0);
        }
        assert_eq!(MeshSpec::parse("disk:2:3").unwrap().build().unwrap(), build_disk_mesh(2.0, 3).unwrap());
        for bad in ["disk:1", "disk:x:3", "blob:1:2", "image:quad:0.2:1", "file:", "rect:1:1:2"] {
            assert!(MeshSpec::parse(bad).is_err(), "{bad}");
        }
    }
}
