//! Procedural "capsule quadruped" asset.
//!
//! Nine joints, roughly four hundred vertices, built from tubes and a
//! sphere, mirror-symmetric about the `z = 0` plane. Coordinates are y-up
//! with the head towards `+x` and the feet on `y = 0`. Every test that needs
//! a body model runs against this asset; real assets load through
//! [`super::container`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, Vector3};

use super::asset::{AssetParts, BodyModelAsset, JointTags};

pub const JOINT_NAMES: [&str; 9] = [
    "root",
    "neck",
    "head",
    "tail_base",
    "tail_mid",
    "front_left_leg",
    "front_right_leg",
    "back_left_leg",
    "back_right_leg",
];
const PARENTS: [Option<usize>; 9] = [
    None,
    Some(0),
    Some(1),
    Some(0),
    Some(3),
    Some(0),
    Some(0),
    Some(0),
    Some(0),
];
pub const N_BETAS: usize = 8;

const ROOT: usize = 0;
const NECK: usize = 1;
const HEAD: usize = 2;
const TAIL_BASE: usize = 3;
const TAIL_MID: usize = 4;

/// A closed tube: rings of vertices around a polyline plus two pole caps.
struct Tube {
    /// Index of the first ring vertex in the mesh.
    first: usize,
    rings: usize,
    segments: usize,
    /// Vertex indices of the start and end poles.
    poles: [usize; 2],
}

impl Tube {
    fn ring(&self, k: usize) -> std::ops::Range<usize> {
        let s = self.first + k * self.segments;
        s..s + self.segments
    }
}

#[derive(Default)]
struct Builder {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[u32; 3]>,
    /// Per-vertex sparse skinning weights.
    weights: Vec<Vec<(usize, f64)>>,
    /// Per-vertex displacement for each shape basis column.
    basis: Vec<[Vector3<f64>; N_BETAS]>,
}

impl Builder {
    /// Tube through `centers` with per-ring `radii`. Ring frames use `+z` as
    /// one axis so every part is symmetric under `z -> -z`.
    fn tube(
        &mut self,
        centers: &[Vector3<f64>],
        radii: &[f64],
        segments: usize,
        start_cap: Vector3<f64>,
        end_cap: Vector3<f64>,
    ) -> Tube {
        let first = self.vertices.len();
        let n = centers.len();
        for k in 0..n {
            let dir = if k + 1 < n {
                centers[k + 1] - centers[k]
            } else {
                centers[k] - centers[k - 1]
            };
            let w = Vector3::z();
            let u = w.cross(&dir).normalize();
            for s in 0..segments {
                let phi = 2.0 * PI * s as f64 / segments as f64;
                self.vertices
                    .push(centers[k] + (u * phi.cos() + w * phi.sin()) * radii[k]);
            }
        }
        let p0 = self.vertices.len();
        self.vertices.push(start_cap);
        self.vertices.push(end_cap);
        let tube = Tube {
            first,
            rings: n,
            segments,
            poles: [p0, p0 + 1],
        };
        let idx = |k: usize, s: usize| (first + k * segments + s % segments) as u32;
        for k in 0..n - 1 {
            for s in 0..segments {
                let (a, b, c, d) = (idx(k, s), idx(k, s + 1), idx(k + 1, s), idx(k + 1, s + 1));
                self.faces.push([a, c, b]);
                self.faces.push([b, c, d]);
            }
        }
        for s in 0..segments {
            self.faces.push([p0 as u32, idx(0, s), idx(0, s + 1)]);
            self.faces
                .push([(p0 + 1) as u32, idx(n - 1, s + 1), idx(n - 1, s)]);
        }
        let added = self.vertices.len() - self.weights.len();
        self.weights.extend(std::iter::repeat_n(Vec::new(), added));
        self.basis
            .extend(std::iter::repeat_n([Vector3::zeros(); N_BETAS], added));
        tube
    }

    fn tube_vertices(t: &Tube) -> impl Iterator<Item = usize> {
        (t.first..t.first + t.rings * t.segments).chain(t.poles)
    }
}

fn centroid(vertices: &[Vector3<f64>], idx: impl Iterator<Item = usize>) -> Vector3<f64> {
    let (sum, n) = idx.fold((Vector3::zeros(), 0usize), |(s, n), i| (s + vertices[i], n + 1));
    sum / n as f64
}

/// Build the capsule quadruped asset.
pub fn capsule_quadruped() -> BodyModelAsset {
    let mut b = Builder::default();
    let v3 = Vector3::new;

    // Torso along x.
    let body_x: Vec<f64> = (0..9).map(|k| -1.0 + 0.25 * k as f64).collect();
    let body_centers: Vec<_> = body_x.iter().map(|&x| v3(x, 1.0, 0.0)).collect();
    let body_radii: Vec<_> = body_x
        .iter()
        .map(|&x| 0.32 * (1.0 - (x / 1.15).powi(2)).sqrt())
        .collect();
    let body = b.tube(&body_centers, &body_radii, 12, v3(-1.15, 1.0, 0.0), v3(1.15, 1.0, 0.0));

    let neck_c = [v3(0.9, 1.1, 0.0), v3(1.08, 1.2, 0.0), v3(1.25, 1.3, 0.0)];
    let neck = b.tube(&neck_c, &[0.13, 0.12, 0.11], 8, neck_c[0], neck_c[2]);

    let head_center = v3(1.4, 1.35, 0.0);
    let head_r = 0.22;
    let head_rings = 5;
    let (head_c, head_radii): (Vec<_>, Vec<_>) = (0..head_rings)
        .map(|k| {
            let theta = PI * (k + 1) as f64 / (head_rings + 1) as f64;
            (
                head_center - Vector3::x() * head_r * theta.cos(),
                head_r * theta.sin(),
            )
        })
        .unzip();
    let head = b.tube(
        &head_c,
        &head_radii,
        10,
        head_center - Vector3::x() * head_r,
        head_center + Vector3::x() * head_r,
    );

    let tail_c: Vec<_> = (0..5)
        .map(|k| {
            let t = k as f64 / 4.0;
            v3(-0.95 - 0.85 * t, 1.1 + 0.25 * t, 0.0)
        })
        .collect();
    let tail_radii: Vec<_> = (0..5).map(|k| 0.07 - 0.0075 * k as f64).collect();
    let tail = b.tube(&tail_c, &tail_radii, 6, tail_c[0], tail_c[4] + v3(-0.04, 0.01, 0.0));

    let leg_roots = [
        v3(0.6, 0.9, 0.2),
        v3(0.6, 0.9, -0.2),
        v3(-0.6, 0.9, 0.2),
        v3(-0.6, 0.9, -0.2),
    ];
    let legs: Vec<Tube> = leg_roots
        .iter()
        .map(|&top| {
            let c: Vec<_> = (0..5).map(|k| top - Vector3::y() * (0.225 * k as f64)).collect();
            let r: Vec<_> = (0..5).map(|k| 0.1 - 0.01 * k as f64).collect();
            b.tube(&c, &r, 8, top + Vector3::y() * 0.05, c[4] - Vector3::y() * 0.03)
        })
        .collect();

    // Skinning weights.
    for i in Builder::tube_vertices(&body) {
        let x = b.vertices[i].x;
        let mut w = vec![];
        if x > 0.7 {
            let a = ((x - 0.7) / 0.45).min(1.0) * 0.5;
            w.push((NECK, a));
            w.push((ROOT, 1.0 - a));
        } else if x < -0.7 {
            let a = ((-0.7 - x) / 0.45).min(1.0) * 0.5;
            w.push((TAIL_BASE, a));
            w.push((ROOT, 1.0 - a));
        } else {
            w.push((ROOT, 1.0));
        }
        b.weights[i] = w;
    }
    for k in 0..neck.rings {
        let w = if k + 1 == neck.rings {
            vec![(NECK, 0.5), (HEAD, 0.5)]
        } else {
            vec![(NECK, 1.0)]
        };
        for i in neck.ring(k) {
            b.weights[i] = w.clone();
        }
    }
    b.weights[neck.poles[0]] = vec![(NECK, 1.0)];
    b.weights[neck.poles[1]] = vec![(NECK, 0.5), (HEAD, 0.5)];
    for i in Builder::tube_vertices(&head) {
        b.weights[i] = vec![(HEAD, 1.0)];
    }
    for k in 0..tail.rings {
        let w = match k {
            0 | 1 => vec![(TAIL_BASE, 1.0)],
            2 => vec![(TAIL_BASE, 0.5), (TAIL_MID, 0.5)],
            _ => vec![(TAIL_MID, 1.0)],
        };
        for i in tail.ring(k) {
            b.weights[i] = w.clone();
        }
    }
    b.weights[tail.poles[0]] = vec![(TAIL_BASE, 1.0)];
    b.weights[tail.poles[1]] = vec![(TAIL_MID, 1.0)];
    for (l, leg) in legs.iter().enumerate() {
        let joint = 5 + l;
        for k in 0..leg.rings {
            let w = if k == 0 {
                vec![(joint, 0.5), (ROOT, 0.5)]
            } else {
                vec![(joint, 1.0)]
            };
            for i in leg.ring(k) {
                b.weights[i] = w.clone();
            }
        }
        b.weights[leg.poles[0]] = vec![(joint, 0.5), (ROOT, 0.5)];
        b.weights[leg.poles[1]] = vec![(joint, 1.0)];
    }

    // Shape basis: linear displacement fields.
    let n_v = b.vertices.len();
    for i in 0..n_v {
        let p = b.vertices[i];
        b.basis[i][0] = v3(0.15 * p.x, 0.0, 0.0);
        b.basis[i][1] = v3(0.0, 0.15 * p.y, 0.0);
        b.basis[i][5] = v3(0.0, 0.0, 0.15 * p.z);
    }
    for i in Builder::tube_vertices(&body) {
        let p = b.vertices[i];
        b.basis[i][2] = v3(0.0, 0.3 * (p.y - 1.0), 0.3 * p.z);
    }
    for i in Builder::tube_vertices(&head) {
        b.basis[i][3] = (b.vertices[i] - head_center) * 0.4;
        b.basis[i][6] = v3(0.1, 0.06, 0.0);
    }
    for k in 0..neck.rings {
        let s = k as f64 / (neck.rings - 1) as f64;
        for i in neck.ring(k) {
            b.basis[i][6] = v3(0.1, 0.06, 0.0) * s;
        }
    }
    b.basis[neck.poles[1]][6] = v3(0.1, 0.06, 0.0);
    for i in Builder::tube_vertices(&tail) {
        b.basis[i][4] = v3(0.3 * (b.vertices[i].x + 0.95), 0.0, 0.0);
    }
    for (leg, top) in legs.iter().zip(leg_roots) {
        for i in Builder::tube_vertices(leg) {
            let p = b.vertices[i];
            b.basis[i][7] = v3(0.4 * (p.x - top.x), 0.0, 0.4 * (p.z - top.z));
        }
    }

    // Joint regressor: uniform weights over the ring sitting at each joint.
    let mut regressor = DMatrix::zeros(9, n_v);
    let mut set_row = |j: usize, idx: Vec<usize>| {
        let w = 1.0 / idx.len() as f64;
        for i in idx {
            regressor[(j, i)] = w;
        }
    };
    set_row(ROOT, body.ring(4).collect());
    set_row(NECK, neck.ring(0).collect());
    set_row(HEAD, (head.first..head.first + head.rings * head.segments).collect());
    set_row(TAIL_BASE, tail.ring(0).collect());
    set_row(TAIL_MID, tail.ring(2).collect());
    for (l, leg) in legs.iter().enumerate() {
        set_row(5 + l, leg.ring(0).collect());
    }
    debug_assert!((centroid(&b.vertices, body.ring(4)) - v3(0.0, 1.0, 0.0)).norm() < 1e-12);

    let mut skinning = DMatrix::zeros(n_v, 9);
    for (i, w) in b.weights.iter().enumerate() {
        for &(j, x) in w {
            skinning[(i, j)] += x;
        }
    }
    let mut shape_basis = DMatrix::zeros(3 * n_v, N_BETAS);
    for (i, cols) in b.basis.iter().enumerate() {
        for (k, d) in cols.iter().enumerate() {
            for c in 0..3 {
                shape_basis[(3 * i + c, k)] = d[c];
            }
        }
    }

    BodyModelAsset::new(AssetParts {
        template_vertices: b.vertices,
        faces: b.faces,
        shape_basis,
        skinning_weights: skinning,
        joint_regressor: regressor,
        parents: PARENTS.to_vec(),
        joint_names: JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
        tags: JointTags {
            head: "head".into(),
            tail_base: "tail_base".into(),
        },
    })
    .expect("capsule quadruped satisfies asset invariants")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let a = capsule_quadruped();
        assert_eq!(a.n_joints(), 9);
        assert_eq!(a.n_betas(), N_BETAS);
        assert!((350..=450).contains(&a.n_vertices()), "{}", a.n_vertices());
    }

    #[test]
    fn mirror_symmetric_about_z() {
        let a = capsule_quadruped();
        let vs = a.template_vertices();
        for v in vs {
            let mirrored = Vector3::new(v.x, v.y, -v.z);
            assert!(vs.iter().any(|w| (w - mirrored).norm() < 1e-9));
        }
    }
}
