//! Adaptive quadrature over Euclidean triangles and tetrahedra.
//!
//! Per-cell rule: Duffy-collapsed tensor Gauss-Legendre (4 nodes per axis),
//! exact for polynomials of total degree 5 on the cell. Adaptivity: midpoint
//! subdivision (4 sub-triangles / 8 sub-tetrahedra, octahedron split along
//! its shortest diagonal) accepting a cell once the refined estimate agrees
//! with the parent estimate within the local error budget, Richardson style.

/// 4-point Gauss-Legendre nodes and weights on [0, 1].
const GL_NODES: [f64; 4] = [
    0.5 - 0.430_568_155_797_026_3,
    0.5 - 0.169_990_521_792_428_13,
    0.5 + 0.169_990_521_792_428_13,
    0.5 + 0.430_568_155_797_026_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];

pub type Point2 = [f64; 2];
pub type Point3 = [f64; 3];

#[derive(Debug, Clone, Copy)]
pub struct AdaptResult {
    pub value: f64,
    pub converged: bool,
    /// Worst relative parent/child disagreement among cells that hit the
    /// depth limit (0 when fully converged).
    pub last_change: f64,
}

fn det2(a: Point2, b: Point2, c: Point2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn det3(a: Point3, b: Point3, c: Point3, d: Point3) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
    u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
}

/// Duffy-collapsed GL4 x GL4 rule over the triangle (a, b, c):
/// x(u,v) = a + u (b-a) + v (1-u) (c-a), Jacobian |det| (1-u).
fn triangle_rule(t: &[Point2; 3], f: &dyn Fn(f64, f64) -> f64) -> f64 {
    let [a, b, c] = *t;
    let jac = det2(a, b, c).abs();
    if jac == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for (iu, &u) in GL_NODES.iter().enumerate() {
        let ru = 1.0 - u;
        for (iv, &v) in GL_NODES.iter().enumerate() {
            let x = a[0] + u * (b[0] - a[0]) + v * ru * (c[0] - a[0]);
            let y = a[1] + u * (b[1] - a[1]) + v * ru * (c[1] - a[1]);
            sum += GL_WEIGHTS[iu] * GL_WEIGHTS[iv] * ru * f(x, y);
        }
    }
    sum * jac
}

/// Duffy-collapsed GL4^3 rule over the tetrahedron (a, b, c, d):
/// x(u,v,w) = a + u (b-a) + v (1-u) (c-a) + w (1-u)(1-v) (d-a),
/// Jacobian |det| (1-u)^2 (1-v).
fn tetra_rule(t: &[Point3; 4], f: &dyn Fn(f64, f64, f64) -> f64) -> f64 {
    let [a, b, c, d] = *t;
    let jac = det3(a, b, c, d).abs();
    if jac == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for (iu, &u) in GL_NODES.iter().enumerate() {
        let ru = 1.0 - u;
        for (iv, &v) in GL_NODES.iter().enumerate() {
            let rv = 1.0 - v;
            let jw = ru * ru * rv;
            for (iw, &w) in GL_NODES.iter().enumerate() {
                let mut x = [0.0; 3];
                for k in 0..3 {
                    x[k] = a[k] + u * (b[k] - a[k]) + v * ru * (c[k] - a[k]) + w * ru * rv * (d[k] - a[k]);
                }
                sum += GL_WEIGHTS[iu] * GL_WEIGHTS[iv] * GL_WEIGHTS[iw] * jw * f(x[0], x[1], x[2]);
            }
        }
    }
    sum * jac
}

fn mid2(a: Point2, b: Point2) -> Point2 {
    [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5]
}

fn mid3(a: Point3, b: Point3) -> Point3 {
    [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5, (a[2] + b[2]) * 0.5]
}

fn split_triangle(t: &[Point2; 3]) -> [[Point2; 3]; 4] {
    let [a, b, c] = *t;
    let ab = mid2(a, b);
    let bc = mid2(b, c);
    let ca = mid2(c, a);
    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
}

fn dist2_3(a: Point3, b: Point3) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Midpoint subdivision: 4 corner tetrahedra plus the central octahedron cut
/// into 4 along its shortest diagonal.
fn split_tetra(t: &[Point3; 4]) -> [[Point3; 4]; 8] {
    let [a, b, c, d] = *t;
    let m01 = mid3(a, b);
    let m02 = mid3(a, c);
    let m03 = mid3(a, d);
    let m12 = mid3(b, c);
    let m13 = mid3(b, d);
    let m23 = mid3(c, d);
    // Octahedron diagonals pair midpoints of opposite edges.
    let diags = [
        (m01, m23, [m02, m03, m13, m12]),
        (m02, m13, [m01, m03, m23, m12]),
        (m03, m12, [m01, m02, m23, m13]),
    ];
    let mut pick = 0;
    let mut best = f64::INFINITY;
    for (i, (p, q, _)) in diags.iter().enumerate() {
        let l = dist2_3(*p, *q);
        if l < best {
            best = l;
            pick = i;
        }
    }
    let (p, q, ring) = diags[pick];
    [
        [a, m01, m02, m03],
        [b, m01, m12, m13],
        [c, m02, m12, m23],
        [d, m03, m13, m23],
        [p, q, ring[0], ring[1]],
        [p, q, ring[1], ring[2]],
        [p, q, ring[2], ring[3]],
        [p, q, ring[3], ring[0]],
    ]
}

struct AdaptState {
    worst_unconverged: f64,
    scale: f64,
    rel_tol: f64,
    max_depth: usize,
}

fn refine_triangle(
    t: &[Point2; 3],
    est: f64,
    budget: f64,
    depth: usize,
    f: &dyn Fn(f64, f64) -> f64,
    st: &mut AdaptState,
) -> f64 {
    let kids = split_triangle(t);
    let vals: Vec<f64> = kids.iter().map(|k| triangle_rule(k, f)).collect();
    let sum: f64 = vals.iter().sum();
    if (sum - est).abs() <= budget {
        return sum;
    }
    if depth >= st.max_depth {
        let rel = (sum - est).abs() / st.scale;
        st.worst_unconverged = st.worst_unconverged.max(rel);
        return sum;
    }
    kids.iter()
        .zip(vals)
        .map(|(k, v)| refine_triangle(k, v, budget / 4.0, depth + 1, f, st))
        .sum()
}

fn refine_tetra(
    t: &[Point3; 4],
    est: f64,
    budget: f64,
    depth: usize,
    f: &dyn Fn(f64, f64, f64) -> f64,
    st: &mut AdaptState,
) -> f64 {
    let kids = split_tetra(t);
    let vals: Vec<f64> = kids.iter().map(|k| tetra_rule(k, f)).collect();
    let sum: f64 = vals.iter().sum();
    if (sum - est).abs() <= budget {
        return sum;
    }
    if depth >= st.max_depth {
        let rel = (sum - est).abs() / st.scale;
        st.worst_unconverged = st.worst_unconverged.max(rel);
        return sum;
    }
    kids.iter()
        .zip(vals)
        .map(|(k, v)| refine_tetra(k, v, budget / 8.0, depth + 1, f, st))
        .sum()
}

pub fn adaptive_triangle(
    t: [Point2; 3],
    f: &dyn Fn(f64, f64) -> f64,
    rel_tol: f64,
    max_depth: usize,
) -> AdaptResult {
    let first = triangle_rule(&t, f);
    let scale = first.abs().max(1e-300);
    let mut st = AdaptState { worst_unconverged: 0.0, scale, rel_tol, max_depth };
    let value = refine_triangle(&t, first, rel_tol * scale, 0, f, &mut st);
    AdaptResult {
        value,
        converged: st.worst_unconverged <= st.rel_tol * 8.0,
        last_change: st.worst_unconverged,
    }
}

pub fn adaptive_tetrahedron(
    t: [Point3; 4],
    f: &dyn Fn(f64, f64, f64) -> f64,
    rel_tol: f64,
    max_depth: usize,
) -> AdaptResult {
    let first = tetra_rule(&t, f);
    let scale = first.abs().max(1e-300);
    let mut st = AdaptState { worst_unconverged: 0.0, scale, rel_tol, max_depth };
    let value = refine_tetra(&t, first, rel_tol * scale, 0, f, &mut st);
    AdaptResult {
        value,
        converged: st.worst_unconverged <= st.rel_tol * 8.0,
        last_change: st.worst_unconverged,
    }
}
