use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{BufRead, Write};

pub const TORUS_MAJOR_RADIUS: f64 = 1.0;
pub const TORUS_MINOR_RADIUS: f64 = 0.5;

/// Spherical coordinates with `θ ∈ [0, π]` (polar) and `φ ∈ [−π, π)` (azimuth).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spherical {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Spherical {
    pub fn from_cartesian([x, y, z]: [f64; 3]) -> Self {
        let r = (x * x + y * y + z * z).sqrt();
        let theta = if r == 0.0 { 0.0 } else { (z / r).clamp(-1.0, 1.0).acos() };
        let mut phi = y.atan2(x);
        if phi >= PI {
            phi -= 2.0 * PI;
        }
        Spherical { r, theta, phi }
    }

    pub fn to_cartesian(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [self.r * st * cp, self.r * st * sp, self.r * ct]
    }
}

/// A set of 3D points with cached spherical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    spherical: Vec<Spherical>,
    label: Option<i32>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>, label: Option<i32>) -> Self {
        let spherical = points.iter().map(|&p| Spherical::from_cartesian(p)).collect();
        PointCloud { points, spherical, label }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn spherical(&self) -> &[Spherical] {
        &self.spherical
    }

    pub fn label(&self) -> Option<i32> {
        self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_label(mut self, label: Option<i32>) -> Self {
        self.label = label;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Sphere,
    Torus,
}

impl Shape {
    /// Binary class label: sphere −1, torus +1.
    pub fn label(self) -> i32 {
        match self {
            Shape::Sphere => -1,
            Shape::Torus => 1,
        }
    }
}

/// Mean of `|p|` over a torus with uniformly distributed angles (trapezoid
/// rule, exact to rounding for this periodic integrand).
fn torus_mean_radius() -> f64 {
    const STEPS: usize = 1024;
    let (big, small) = (TORUS_MAJOR_RADIUS, TORUS_MINOR_RADIUS);
    (0..STEPS)
        .map(|i| {
            let v = 2.0 * PI * i as f64 / STEPS as f64;
            (big * big + small * small + 2.0 * big * small * v.cos()).sqrt()
        })
        .sum::<f64>()
        / STEPS as f64
}

/// Samples `n_points` from the surface of `shape`. The sphere is the unit
/// sphere; the torus has uniform angles and is rescaled so its expected point
/// magnitude is 1.
pub fn sample_shape_cloud(shape: Shape, n_points: usize, seed: u64) -> Result<PointCloud> {
    sample_shape_cloud_with(shape, n_points, &mut seeded(seed))
}

pub fn sample_shape_cloud_with(shape: Shape, n_points: usize, rng: &mut Rng) -> Result<PointCloud> {
    if n_points == 0 {
        return Err(Error::Domain("a point cloud needs at least one point".into()));
    }
    let points = match shape {
        Shape::Sphere => (0..n_points).map(|_| UnitSphere.sample(rng)).collect(),
        Shape::Torus => {
            let scale = 1.0 / torus_mean_radius();
            (0..n_points)
                .map(|_| {
                    let u = rng.gen_range(0.0..2.0 * PI);
                    let v = rng.gen_range(0.0..2.0 * PI);
                    let ring = TORUS_MAJOR_RADIUS + TORUS_MINOR_RADIUS * v.cos();
                    [scale * ring * u.cos(), scale * ring * u.sin(), scale * TORUS_MINOR_RADIUS * v.sin()]
                })
                .collect()
        }
    };
    Ok(PointCloud::new(points, Some(shape.label())))
}

/// Rodrigues rotation of `p` by `angle` about the unit vector `axis`.
pub fn rotate_point(p: [f64; 3], axis: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let [kx, ky, kz] = axis;
    let [x, y, z] = p;
    let dot = kx * x + ky * y + kz * z;
    let cross = [ky * z - kz * y, kz * x - kx * z, kx * y - ky * x];
    [
        x * c + cross[0] * s + kx * dot * (1.0 - c),
        y * c + cross[1] * s + ky * dot * (1.0 - c),
        z * c + cross[2] * s + kz * dot * (1.0 - c),
    ]
}

/// Rotates every point of `cloud`; `axis` is normalized first.
pub fn rotate_cloud(cloud: &PointCloud, axis: [f64; 3], angle: f64) -> Result<PointCloud> {
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::Domain("rotation axis is zero".into()));
    }
    let k = axis.map(|a| a / norm);
    let points = cloud.points.iter().map(|&p| rotate_point(p, k, angle)).collect();
    Ok(PointCloud::new(points, cloud.label))
}

/// Labelled clouds with a shuffled 80/20 train/test split.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub clouds: Vec<PointCloud>,
    pub labels: Vec<i32>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Dataset {
    pub fn new(clouds: Vec<PointCloud>, labels: Vec<i32>, split_seed: u64) -> Result<Self> {
        if clouds.len() != labels.len() {
            return Err(Error::Domain(format!("{} clouds but {} labels", clouds.len(), labels.len())));
        }
        let mut idx: Vec<usize> = (0..clouds.len()).collect();
        idx.shuffle(&mut seeded(split_seed));
        let n_train = (clouds.len() as f64 * 0.8).round() as usize;
        let test = idx.split_off(n_train);
        Ok(Dataset { clouds, labels, train: idx, test })
    }

    /// Balanced sphere/torus dataset: the first half spheres, the rest tori.
    pub fn shapes(n_samples: usize, n_points: usize, seed: u64) -> Result<Self> {
        let mut rng = seeded(seed);
        let clouds = (0..n_samples)
            .map(|i| {
                let shape = if i < n_samples / 2 { Shape::Sphere } else { Shape::Torus };
                sample_shape_cloud_with(shape, n_points, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = clouds.iter().map(|c| c.label.unwrap_or(0)).collect();
        Self::new(clouds, labels, rng.gen())
    }

    pub fn len(&self) -> usize {
        self.clouds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clouds.is_empty()
    }

    /// One row per point: `cloud_id,label,x,y,z`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cloud_id,label,x,y,z")?;
        for (id, (cloud, label)) in self.clouds.iter().zip(&self.labels).enumerate() {
            for [x, y, z] in cloud.points() {
                writeln!(w, "{id},{label},{x:e},{y:e},{z:e}")?;
            }
        }
        Ok(())
    }

    /// Reads the format written by [`Dataset::write_csv`]; cloud ids must be
    /// contiguous from 0.
    pub fn read_csv<R: BufRead>(r: R, split_seed: u64) -> Result<Self> {
        let mut points: Vec<Vec<[f64; 3]>> = Vec::new();
        let mut labels: Vec<i32> = Vec::new();
        for (line_no, line) in r.lines().enumerate().skip(1) {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Format(format!("line {}: expected cloud_id,label,x,y,z", line_no + 1));
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(bad());
            }
            let id: usize = f[0].parse().map_err(|_| bad())?;
            let label: i32 = f[1].parse().map_err(|_| bad())?;
            let mut p = [0.0; 3];
            for (k, v) in f[2..].iter().enumerate() {
                p[k] = v.parse().map_err(|_| bad())?;
            }
            if id == points.len() {
                points.push(Vec::new());
                labels.push(label);
            } else if id + 1 != points.len() {
                return Err(Error::Format(format!("line {}: cloud id {id} out of order", line_no + 1)));
            }
            points[id].push(p);
        }
        let clouds = points.into_iter().zip(&labels).map(|(p, &l)| PointCloud::new(p, Some(l))).collect();
        Self::new(clouds, labels, split_seed)
    }
}

/// Maps every coordinate affinely onto `[−π/2, π/2]` using its minimum and
/// maximum over the whole dataset. Constant coordinates map to 0.
pub fn normalize_to_angle_range(dataset: &Dataset) -> Result<Dataset> {
    let all = dataset.clouds.iter().flat_map(|c| c.points().iter());
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut any = false;
    for p in all {
        any = true;
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !any {
        return Err(Error::Domain("cannot normalize an empty dataset".into()));
    }
    let map = |p: &[f64; 3]| -> [f64; 3] {
        std::array::from_fn(|k| {
            let span = hi[k] - lo[k];
            if span == 0.0 {
                0.0
            } else {
                -FRAC_PI_2 + PI * (p[k] - lo[k]) / span
            }
        })
    };
    let clouds = dataset
        .clouds
        .iter()
        .map(|c| PointCloud::new(c.points().iter().map(map).collect(), c.label()))
        .collect();
    Ok(Dataset { clouds, ..dataset.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_coordinate(values: &[f64]) -> Dataset {
        let clouds = vec![PointCloud::new(values.iter().map(|&v| [v, 3.0, -v]).collect(), Some(1))];
        Dataset::new(clouds, vec![1], 0).unwrap()
    }

    #[test]
    fn normalization_examples() {
        let d = normalize_to_angle_range(&one_coordinate(&[-1.0, 1.0])).unwrap();
        let p = d.clouds[0].points();
        assert_eq!(p[0], [-FRAC_PI_2, 0.0, FRAC_PI_2]);
        assert_eq!(p[1], [FRAC_PI_2, 0.0, -FRAC_PI_2]);
        let d = normalize_to_angle_range(&one_coordinate(&[0.0, 0.5, 1.0])).unwrap();
        let xs: Vec<f64> = d.clouds[0].points().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-FRAC_PI_2, 0.0, FRAC_PI_2]);
    }

    #[test]
    fn sphere_points_are_unit() {
        let c = sample_shape_cloud(Shape::Sphere, 500, 4).unwrap();
        assert!(c.points().iter().all(|p| (p.iter().map(|a| a * a).sum::<f64>().sqrt() - 1.0).abs() < 1e-12));
        assert_eq!(c, sample_shape_cloud(Shape::Sphere, 500, 4).unwrap());
    }

    #[test]
    fn torus_mean_magnitude() {
        let c = sample_shape_cloud(Shape::Torus, 10_000, 9).unwrap();
        let mean = c.points().iter().map(|p| p.iter().map(|a| a * a).sum::<f64>().sqrt()).sum::<f64>() / 1e4;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn torus_mean_radius_quadrature() {
        // midpoint rule with 10^6 nodes, independent of the library's node count
        let n = 1_000_000;
        let m = (0..n)
            .map(|i| {
                let v = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                (1.25 + v.cos()).sqrt()
            })
            .sum::<f64>()
            / n as f64;
        assert!((torus_mean_radius() - m).abs() < 1e-9);
    }

    #[test]
    fn rotation_examples() {
        let c = PointCloud::new(vec![[1.0, 0.0, 0.0], [0.3, -0.4, 0.5]], None);
        let r = rotate_cloud(&c, [0.0, 0.0, 1.0], FRAC_PI_2).unwrap();
        let p = r.points()[0];
        assert!((p[0]).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15 && p[2].abs() < 1e-15);
        for angle in [0.0, 2.0 * PI] {
            let r = rotate_cloud(&c, [1.0, 2.0, 3.0], angle).unwrap();
            for (a, b) in r.points().iter().zip(c.points()) {
                assert!((0..3).all(|k| (a[k] - b[k]).abs() < 1e-12));
            }
        }
        assert!(rotate_cloud(&c, [0.0; 3], 1.0).is_err());
    }

    #[test]
    fn split_is_eighty_twenty() {
        let d = Dataset::shapes(100, 3, 5).unwrap();
        assert_eq!(d.train.len(), 80);
        assert_eq!(d.test.len(), 20);
        let mut all: Vec<usize> = d.train.iter().chain(&d.test).copied().collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(d.labels.iter().filter(|&&l| l == 1).count(), 50);
    }

    #[test]
    fn csv_round_trip() {
        let d = Dataset::shapes(6, 3, 2).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice(), 0).unwrap();
        assert_eq!(back.labels, d.labels);
        for (a, b) in back.clouds.iter().zip(&d.clouds) {
            assert_eq!(a.points(), b.points());
        }
    }

    proptest! {
        #[test]
        fn spherical_round_trip(seed in any::<u64>(), torus in any::<bool>()) {
            let shape = if torus { Shape::Torus } else { Shape::Sphere };
            let c = sample_shape_cloud(shape, 8, seed).unwrap();
            for (p, s) in c.points().iter().zip(c.spherical()) {
                prop_assert!((0.0..=PI).contains(&s.theta));
                prop_assert!((-PI..PI).contains(&s.phi));
                let q = s.to_cartesian();
                prop_assert!((0..3).all(|k| (p[k] - q[k]).abs() < 1e-10));
            }
        }

        #[test]
        fn rotation_preserves_norms(seed in any::<u64>(), angle in -10.0..10.0f64) {
            let c = sample_shape_cloud(Shape::Torus, 5, seed).unwrap();
            let r = rotate_cloud(&c, [0.2, -0.5, 0.7], angle).unwrap();
            for (a, b) in r.spherical().iter().zip(c.spherical()) {
                prop_assert!((a.r - b.r).abs() < 1e-12);
            }
        }
    }
}
