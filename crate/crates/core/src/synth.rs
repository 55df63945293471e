//! Synthetic point sets with known structure, used for validation.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::linalg::Matrix;

/// Points with a ground-truth grouping.
#[derive(Debug, Clone)]
pub struct Labeled {
    pub points: Matrix<f64>,
    pub labels: Vec<usize>,
}

/// Isotropic Gaussian blobs: `per_blob` points around each center.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_blob: usize, sigma: f64, seed: u64) -> Labeled {
    let dim = centers.first().map_or(0, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    let mut data = Vec::with_capacity(centers.len() * per_blob * dim);
    let mut labels = Vec::with_capacity(centers.len() * per_blob);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            data.extend(center.iter().map(|&m| m + noise.sample(&mut rng)));
            labels.push(c);
        }
    }
    Labeled {
        points: Matrix::from_vec(labels.len(), dim, data),
        labels,
    }
}

/// `count` centers in `dim` dimensions, pairwise at least `min_sep` apart.
///
/// Center `c` sits at `scale · e_c` along distinct axes (needs `count ≤ dim`),
/// giving pairwise separation `scale·√2`.
pub fn axis_centers(count: usize, dim: usize, min_sep: f64) -> Vec<Vec<f64>> {
    assert!(count <= dim, "need one axis per center");
    let scale = min_sep / 2f64.sqrt();
    (0..count)
        .map(|c| (0..dim).map(|j| if j == c { scale } else { 0.0 }).collect())
        .collect()
}

/// Swiss roll sample together with its flat chart coordinates.
#[derive(Debug, Clone)]
pub struct SwissRoll {
    /// `N×3` ambient coordinates.
    pub points: Matrix<f64>,
    /// `N×2` chart `(arc length, height)`; chart distances are the intrinsic ones.
    pub chart: Matrix<f64>,
}

fn spiral_arc_length(t: f64) -> f64 {
    0.5 * (t * (1.0 + t * t).sqrt() + t.asinh())
}

/// Newton inversion of [`spiral_arc_length`].
fn spiral_parameter(s: f64) -> f64 {
    let mut t = (2.0 * s).sqrt();
    for _ in 0..50 {
        let step = (spiral_arc_length(t) - s) / (1.0 + t * t).sqrt();
        t -= step;
        if step.abs() < 1e-13 * t {
            break;
        }
    }
    t
}

/// Roll parameter `t ∈ [1.5π, 4.5π]`, height in `[0, height)`;
/// `(x, y, z) = (t cos t, h, t sin t)`.
///
/// Points are uniform in arc length (uniform area density on the sheet), not in `t`.
pub fn swiss_roll(n: usize, height: f64, seed: u64) -> SwissRoll {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s0, s1) = (spiral_arc_length(1.5 * PI), spiral_arc_length(4.5 * PI));
    let mut pts = Vec::with_capacity(n * 3);
    let mut chart = Vec::with_capacity(n * 2);
    for _ in 0..n {
        let s = s0 + (s1 - s0) * rng.random::<f64>();
        let t = spiral_parameter(s);
        let h = height * rng.random::<f64>();
        pts.extend([t * t.cos(), h, t * t.sin()]);
        chart.extend([s, h]);
    }
    SwissRoll {
        points: Matrix::from_vec(n, 3, pts),
        chart: Matrix::from_vec(n, 2, chart),
    }
}

/// Swiss roll (label 0) plus three unit-variance blobs (labels 1..=3) in `dim`
/// dimensions (`dim ≥ 6`).
///
/// The roll occupies the first three coordinates and dominates the variance.
/// The blobs sit in the roll's hollow axis and are told apart only by an offset
/// of 8 along coordinates 3, 4 and 5, so their separation lies off the
/// principal directions.
pub fn roll_and_blobs(roll_n: usize, per_blob: usize, dim: usize, seed: u64) -> Labeled {
    assert!(dim >= 6, "composite needs at least 6 dimensions");
    let height = 21.0;
    let roll = swiss_roll(roll_n, height, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = roll_n + 3 * per_blob;
    let mut points = Matrix::zeros(n, dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..roll_n {
        for k in 0..3 {
            points[(i, k)] = roll.points[(i, k)];
        }
        labels.push(0);
    }
    for b in 0..3 {
        for s in 0..per_blob {
            let i = roll_n + b * per_blob + s;
            for k in 0..dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                let center = match k {
                    1 => 0.5 * height,
                    _ if k == 3 + b => 8.0,
                    _ => 0.0,
                };
                points[(i, k)] = center + z;
            }
            labels.push(b + 1);
        }
    }
    Labeled { points, labels }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_shapes_and_labels() {
        let c = axis_centers(3, 13, 2.0);
        let d01: f64 = c[0].iter().zip(&c[1]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((d01 - 2.0).abs() < 1e-12);
        let b = gaussian_blobs(&c, 4, 0.05, 1);
        assert_eq!(b.points.shape(), (12, 13));
        assert_eq!(b.labels, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    }

    #[test]
    fn roll_chart_matches_spiral_length() {
        let r = swiss_roll(50, 21.0, 3);
        for i in 0..50 {
            let [x, y, z] = [r.points[(i, 0)], r.points[(i, 1)], r.points[(i, 2)]];
            let t = (x * x + z * z).sqrt();
            assert!((spiral_arc_length(t) - r.chart[(i, 0)]).abs() < 1e-9);
            assert_eq!(y, r.chart[(i, 1)]);
        }
        assert!((spiral_parameter(spiral_arc_length(9.0)) - 9.0).abs() < 1e-12);
        // numeric check of the closed-form arc length
        let (a, b) = (1.5 * PI, 2.0 * PI);
        let steps = 100_000;
        let h = (b - a) / steps as f64;
        let quad: f64 = (0..steps)
            .map(|k| {
                let t = a + (k as f64 + 0.5) * h;
                (1.0 + t * t).sqrt() * h
            })
            .sum();
        assert!((quad - (spiral_arc_length(b) - spiral_arc_length(a))).abs() < 1e-6);
    }
}
