//! Random instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use action_maps::rwnmf::{ActionMatrixBundle, SolverParams};
use action_maps::side_info::GramMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric non-negative matrix with unit diagonal.
pub fn random_gram(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in 0..i {
            let v: f64 = if rng.random_bool(0.3) { rng.random() } else { 0.0 };
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

/// Half the entries observed with random weights.
pub fn random_bundle(m: usize, a: usize, rng: &mut ChaCha8Rng) -> ActionMatrixBundle {
    let r = Array2::from_shape_fn((m, a), |_| rng.random::<f64>());
    let w = Array2::from_shape_fn((m, a), |_| if rng.random_bool(0.5) { rng.random_range(0.01..1.0) } else { 0.0 });
    ActionMatrixBundle::new(r, w).unwrap()
}

pub struct Instance {
    pub bundle: ActionMatrixBundle,
    pub k_u: Array2<f64>,
    pub k_v: Array2<f64>,
    pub params: SolverParams,
}

impl Instance {
    pub fn gram_u(&self) -> GramMatrix {
        GramMatrix::from_dense(self.k_u.clone()).unwrap()
    }

    pub fn gram_v(&self) -> GramMatrix {
        GramMatrix::from_dense(self.k_v.clone()).unwrap()
    }
}

pub fn random_instance(seed: u64, m: usize, a: usize, rank: usize) -> Instance {
    let mut r = rng(seed);
    let bundle = random_bundle(m, a, &mut r);
    let k_u = random_gram(m, &mut r);
    let k_v = random_gram(a, &mut r);
    let params = SolverParams {
        rank,
        lambda: 10f64.powf(r.random_range(-4.0..0.0)),
        mu: 10f64.powf(r.random_range(-4.0..0.0)),
        max_iters: 500,
        // never stop early
        rel_tol: f64::MIN_POSITIVE,
        seed,
        ..SolverParams::default()
    };
    Instance { bundle, k_u, k_v, params }
}

/// `1/2 sum_ij K_ij |x_i - x_j|^2`, straight from the definition.
pub fn pairwise_regularizer(x: &Array2<f64>, k: &Array2<f64>) -> f64 {
    let n = x.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d2: f64 = x.row(i).iter().zip(x.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            acc += k[[i, j]] * d2;
        }
    }
    0.5 * acc
}

/// `sum_ij (W_ij (R_ij - (U V^T)_ij))^2 + lambda * reg(U) + mu * reg(V)`.
pub fn brute_objective(u: &Array2<f64>, v: &Array2<f64>, inst: &Instance) -> f64 {
    let (m, a) = inst.bundle.r().dim();
    let mut j = 0.0;
    for i in 0..m {
        for c in 0..a {
            let p: f64 = (0..u.ncols()).map(|k| u[[i, k]] * v[[c, k]]).sum();
            let e = inst.bundle.w()[[i, c]] * (inst.bundle.r()[[i, c]] - p);
            j += e * e;
        }
    }
    j + inst.params.lambda * pairwise_regularizer(u, &inst.k_u) + inst.params.mu * pairwise_regularizer(v, &inst.k_v)
}

/// Largest relative step-to-step increase of a trace.
pub fn worst_increase(trace: &[f64]) -> f64 {
    trace
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Like [`worst_increase`], but increases below `1e-15 * trace[0]` count as
/// rounding noise (the objective can reach the underflow range).
pub fn worst_increase_above_noise(trace: &[f64]) -> f64 {
    let floor = 1e-15 * trace[0].abs();
    trace
        .windows(2)
        .map(|w| if w[1] - w[0] <= floor { 0.0 } else { (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE) })
        .fold(0.0, f64::max)
}

pub mod fixture {
    use action_maps::evaluation::ImagePose;
    use action_maps::rwnmf::ActionMap;
    use action_maps::scene::{ActivityVocabulary, Cell, SceneGrid};
    use ndarray::Array2;

    pub const WIDTH: usize = 8;
    pub const HEIGHT: usize = 6;
    pub const RANGE: f64 = 3.0;
    pub const FOV: f64 = 60.0;

    /// Hand-placed labels: chairs in the middle and a corner, one sink.
    pub fn scene() -> SceneGrid {
        let vocab = ActivityVocabulary::new(["sit", "wash"]).unwrap();
        let labels = [
            (Cell::new(2, 2), 0),
            (Cell::new(3, 2), 0),
            (Cell::new(6, 4), 0),
            (Cell::new(5, 1), 1),
            (Cell::new(6, 4), 1),
        ];
        let mut g = SceneGrid::new("fixture", WIDTH, HEIGHT, 0.25, vocab).unwrap();
        for (c, a) in labels {
            g.add_label(c, a).unwrap();
        }
        g
    }

    pub fn poses() -> Vec<ImagePose> {
        [
            ([0.5, 2.5], [1.0, 0.0]),
            ([7.5, 4.5], [-1.0, 0.0]),
            ([4.0, 0.2], [0.0, 1.0]),
            ([1.0, 5.5], [0.6, -0.8]),
            ([7.9, 0.1], [-1.0, 1.0]),
        ]
        .into_iter()
        .map(|(p, h)| ImagePose::new(p, h).unwrap())
        .collect()
    }

    /// Scores in sixteenths, fixed by a simple formula so ties occur.
    pub fn action_map() -> ActionMap {
        ActionMap::new(Array2::from_shape_fn((WIDTH * HEIGHT, 2), |(i, a)| ((i * 37 + a * 11) % 17) as f64 / 16.0)).unwrap()
    }
}

pub mod oracle {
    /// Triangle membership via barycentric coordinates, inclusive.
    pub fn in_triangle(p: [f64; 2], t: [[f64; 2]; 3]) -> bool {
        let [a, b, c] = t;
        let det = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
        let l1 = ((b[1] - c[1]) * (p[0] - c[0]) + (c[0] - b[0]) * (p[1] - c[1])) / det;
        let l2 = ((c[1] - a[1]) * (p[0] - c[0]) + (a[0] - c[0]) * (p[1] - c[1])) / det;
        let l3 = 1.0 - l1 - l2;
        let tol = 1e-9;
        l1 >= -tol && l2 >= -tol && l3 >= -tol
    }

    /// Apex, then the far corners at `±fov/2` from the heading.
    pub fn triangle(apex: [f64; 2], heading: [f64; 2], fov_deg: f64, range: f64) -> [[f64; 2]; 3] {
        let base = heading[1].atan2(heading[0]);
        let half = fov_deg.to_radians() / 2.0;
        let corner = |ang: f64| [apex[0] + range * ang.cos(), apex[1] + range * ang.sin()];
        [apex, corner(base + half), corner(base - half)]
    }

    /// Confusion counts at threshold `k / (n + 1)`, comparing `s * (n + 1) >= k`
    /// only when that is exact; otherwise by direct division.
    pub fn confusion(scores: &[f64], gt: &[bool], k: usize, n: usize) -> (usize, usize, usize) {
        let t = k as f64 / (n + 1) as f64;
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for (&s, &g) in scores.iter().zip(gt) {
            match (s >= t, g) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        (tp, fp, fn_)
    }

    pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
        if tp == 0 {
            0.0
        } else {
            (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
        }
    }
}

pub mod geometry {
    use action_maps::geometry::{fit_plane_least_squares, Plane, Point3};
    use nalgebra::{Rotation3, Vector3};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    /// A reconstruction in arbitrary units and orientation: cameras at eye
    /// height above a floor, floor points with 30% outliers.
    pub struct Scenario {
        pub cameras: Vec<Point3>,
        pub points: Vec<Point3>,
        pub true_ground: Plane,
        /// Eye height in reconstruction units.
        pub eye_units: f64,
        pub units_per_m: f64,
    }

    pub fn scenario(seed: u64, outlier_fraction: f64) -> Scenario {
        let mut rng = super::rng(seed);
        let rot = Rotation3::from_euler_angles(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), rng.random_range(0.0..6.28));
        let shift = Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let units_per_m = rng.random_range(0.3..3.0);
        let eye_m = 1.6;
        let place = |p: Vector3<f64>| rot * (p * units_per_m) + shift;
        let floor = |rng: &mut ChaCha8Rng| Vector3::new(rng.random_range(0.0..15.0), rng.random_range(0.0..10.0), 0.0);

        let cameras: Vec<Point3> = (0..60)
            .map(|_| {
                let f = floor(&mut rng);
                place(Vector3::new(f.x, f.y, eye_m + rng.random_range(-0.01..0.01)))
            })
            .collect();
        let n = 1000;
        let outliers = (outlier_fraction * n as f64).round() as usize;
        let mut points: Vec<Point3> = (0..n - outliers)
            .map(|_| {
                let f = floor(&mut rng);
                place(Vector3::new(f.x, f.y, rng.random_range(-0.005..0.005)))
            })
            .collect();
        points.extend((0..outliers).map(|_| {
            let f = floor(&mut rng);
            place(Vector3::new(f.x, f.y, rng.random_range(0.15..3.0)))
        }));
        let normal = rot * Vector3::z();
        let true_ground = Plane::new(normal, normal.dot(&shift)).unwrap();
        let _ = fit_plane_least_squares;
        Scenario { cameras, points, true_ground, eye_units: eye_m * units_per_m, units_per_m }
    }

    /// Eigenvalues and eigenvectors of a symmetric 3x3 matrix by cyclic
    /// Jacobi rotations; eigenvectors are the columns of the result.
    pub fn jacobi_eigen(mut a: [[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
        let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for _ in 0..100 {
            let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
            if off < 1e-30 {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut b = a;
                for k in 0..3 {
                    b[k][p] = c * a[k][p] - s * a[k][q];
                    b[k][q] = s * a[k][p] + c * a[k][q];
                }
                let mut d = b;
                for k in 0..3 {
                    d[p][k] = c * b[p][k] - s * b[q][k];
                    d[q][k] = s * b[p][k] + c * b[q][k];
                }
                a = d;
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
        ([a[0][0], a[1][1], a[2][2]], v)
    }

    /// Total-least-squares plane through `points`: unit normal and offset.
    pub fn tls_plane(points: &[Point3]) -> (Vector3<f64>, f64) {
        let n = points.len() as f64;
        let mean = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
        let mut cov = [[0.0; 3]; 3];
        for p in points {
            let d = p - mean;
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += d[i] * d[j];
                }
            }
        }
        let (vals, vecs) = jacobi_eigen(cov);
        let k = (0..3).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
        let normal = Vector3::new(vecs[0][k], vecs[1][k], vecs[2][k]).normalize();
        (normal, normal.dot(&mean))
    }
}

pub mod cli {
    use std::collections::BTreeMap;
    use std::path::{Path, PathBuf};
    use std::process::{Command, Output};

    pub fn bin() -> PathBuf {
        PathBuf::from(env!("CARGO_BIN_EXE_action-maps"))
    }

    pub fn run(args: &[&str]) -> Output {
        Command::new(bin()).args(args).output().expect("binary runs")
    }

    pub fn run_ok(args: &[&str]) -> Output {
        let out = run(args);
        assert!(
            out.status.success(),
            "action-maps {} failed:\n{}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        );
        out
    }

    /// The nine commands the binary offers, run in `dir` with small
    /// iteration counts.
    pub fn all_commands(dir: &Path) {
        let p = |s: &str| dir.join(s).display().to_string();
        std::fs::write(dir.join("queries.txt"), "sit 3 4\nsit 3 4 type 10 5\n").unwrap();
        let iters = ["--max-iters", "120"];
        let runs: Vec<Vec<String>> = vec![
            vec!["generate", "--out", &p("ds"), "--scenes", "2", "--seed", "5"].into_iter().map(String::from).collect(),
            [vec!["fit", "--dataset", &p("ds"), "--scenes", "scene0", "--out", &p("fit")], iters.to_vec()].concat().into_iter().map(String::from).collect(),
            vec!["predict", "--dataset", &p("ds"), "--factors", &p("fit/factors.txt"), "--out", &p("am.tsv")].into_iter().map(String::from).collect(),
            vec!["evaluate", "--dataset", &p("ds"), "--action-map", &p("am.tsv"), "--out", &p("eval")].into_iter().map(String::from).collect(),
            [
                vec!["grid", "--dataset", &p("ds"), "--scenes", "scene0", "--out", &p("grid")],
                vec!["--alphas", "0.3,0.7", "--lambdas", "1e-6", "--gammas", "100", "--variants", "so,sop"],
                iters.to_vec(),
            ]
            .concat()
            .into_iter()
            .map(String::from)
            .collect(),
            [vec!["transfer", "--dataset", &p("ds"), "--sources", "scene0", "--targets", "scene1", "--out", &p("transfer")], iters.to_vec()]
                .concat()
                .into_iter()
                .map(String::from)
                .collect(),
            [vec!["elapse", "--dataset", &p("ds"), "--scenes", "scene0", "--fractions", "0.5,1", "--out", &p("elapse")], iters.to_vec()]
                .concat()
                .into_iter()
                .map(String::from)
                .collect(),
            vec!["localize", "--dataset", &p("ds"), "--action-map", &p("am.tsv"), "--scene", "scene0", "--queries", &p("queries.txt"), "--k-max", "20", "--out", &p("loc.tsv")]
                .into_iter()
                .map(String::from)
                .collect(),
            vec!["export-heatmap", "--dataset", &p("ds"), "--action-map", &p("am.tsv"), "--out", &p("heat")].into_iter().map(String::from).collect(),
        ];
        for args in runs {
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            run_ok(&refs);
        }
    }

    /// Every file under `dir`, keyed by relative path.
    pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
        let mut out = BTreeMap::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in std::fs::read_dir(&d).unwrap() {
                let path = e.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    let rel = path.strip_prefix(dir).unwrap().display().to_string();
                    out.insert(rel, std::fs::read(&path).unwrap());
                }
            }
        }
        out
    }
}
