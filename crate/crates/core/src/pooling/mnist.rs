use super::{pool_success_probability, BoundaryMode, ImageGrid, PoolingSpec};
use crate::error::{Error, Result};
use crate::stats::{mean, std_dev};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format("truncated IDX header".into()))
}

/// Parses an IDX3 image file; pixel bytes are scaled to `[0, 1]`.
pub fn read_idx_images(path: &Path) -> Result<Vec<ImageGrid>> {
    let bytes = fs::read(path)?;
    parse_idx_images(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub(crate) fn parse_idx_images(bytes: &[u8]) -> Result<Vec<ImageGrid>> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!("image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    if rows != cols || rows == 0 {
        return Err(Error::Format(format!("non-square {rows}x{cols} images")));
    }
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() != count * size {
        return Err(Error::Format(format!("{} pixel bytes for {count} images of {size}", body.len())));
    }
    body.chunks_exact(size)
        .map(|c| ImageGrid::new(rows, c.iter().map(|&b| b as f64 / 255.0).collect()))
        .collect()
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path)?;
    let magic = be_u32(&bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!("label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}")));
    }
    let count = be_u32(&bytes, 4)? as usize;
    if bytes.len() - 8 != count {
        return Err(Error::Format(format!("{} label bytes, header says {count}", bytes.len() - 8)));
    }
    Ok(bytes[8..].to_vec())
}

/// Finds an uncompressed IDX3 image file in `dir`, preferring the standard
/// training-set name.
pub fn find_image_file(dir: &Path) -> Result<PathBuf> {
    for name in ["train-images-idx3-ubyte", "train-images.idx3-ubyte", "t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"] {
        let p = dir.join(name);
        if p.is_file() {
            return Ok(p);
        }
    }
    let mut found: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let n = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            n.contains("images") && n.contains("idx3") && !n.ends_with(".gz")
        })
        .collect();
    found.sort();
    found
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config(format!("no uncompressed IDX3 image file in {}", dir.display())))
}

/// First `limit` images from the IDX3 file in `dir`.
pub fn load_mnist_dir(dir: &Path, limit: usize) -> Result<Vec<ImageGrid>> {
    let mut images = read_idx_images(&find_image_file(dir)?)?;
    if images.len() < limit {
        return Err(Error::Config(format!("requested {limit} images, {} available", images.len())));
    }
    images.truncate(limit);
    Ok(images)
}

/// Which quantity is swept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum SweepAxis {
    /// Window sizes at the native resolution.
    D { d_values: Vec<usize> },
    /// Resolutions (by area-weighted downsampling) at a fixed window.
    N { n_values: Vec<usize>, d: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub axis: SweepAxis,
    #[serde(default = "default_images")]
    pub images: usize,
    #[serde(default = "default_mode")]
    pub mode: BoundaryMode,
}

fn default_images() -> usize {
    100
}
fn default_mode() -> BoundaryMode {
    BoundaryMode::Periodic
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: usize,
    pub mean: f64,
    pub std: f64,
    pub n_images: usize,
}

/// Mean and standard deviation of the direct-formula `π_S` over `images`.
pub fn mnist_probability_sweep(images: &[ImageGrid], axis: &SweepAxis, mode: BoundaryMode) -> Result<Vec<SweepRow>> {
    if images.is_empty() {
        return Err(Error::Domain("sweep needs at least one image".into()));
    }
    let points: Vec<(usize, usize, Option<usize>)> = match axis {
        SweepAxis::D { d_values } => d_values.iter().map(|&d| (d, d, None)).collect(),
        SweepAxis::N { n_values, d } => n_values.iter().map(|&n| (n, *d, Some(n))).collect(),
    };
    points
        .into_iter()
        .map(|(parameter, d, n)| {
            let spec = PoolingSpec { d, mode };
            let pis = images
                .par_iter()
                .map(|img| {
                    let img = match n {
                        Some(n) => img.downsample(n)?,
                        None => img.clone(),
                    };
                    pool_success_probability(&img, &spec)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(SweepRow {
                parameter,
                mean: mean(&pis),
                std: if pis.len() > 1 { std_dev(&pis) } else { 0.0 },
                n_images: pis.len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pooling::{amplitude_encode_image, apply_pooling};

    fn fixture_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata")
    }

    #[test]
    fn fixture_parses() {
        let imgs = load_mnist_dir(&fixture_dir(), 100).unwrap();
        assert_eq!(imgs.len(), 100);
        assert_eq!(imgs[0].n_side(), 28);
        assert!(imgs.iter().all(|i| i.pixels().iter().all(|&p| (0.0..=1.0).contains(&p))));
        let labels = read_idx_labels(&fixture_dir().join("mnist100-labels-idx1-ubyte")).unwrap();
        assert_eq!(labels.len(), 100);
        assert!(labels.iter().all(|&l| l < 10));
    }

    #[test]
    fn rejects_bad_headers() {
        let mut b = vec![0, 0, 8, 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3, 4];
        assert!(matches!(parse_idx_images(&b), Err(Error::Format(_))));
        b[3] = 3;
        assert_eq!(parse_idx_images(&b).unwrap().len(), 1);
        b.pop();
        assert!(parse_idx_images(&b).is_err());
    }

    #[test]
    fn uniform_images_sweep() {
        let imgs = vec![ImageGrid::uniform(8, 0.5).unwrap(); 100];
        let rows = mnist_probability_sweep(&imgs, &SweepAxis::D { d_values: vec![2, 3, 4] }, BoundaryMode::Periodic).unwrap();
        for r in rows {
            assert!((r.mean - 1.0).abs() < 1e-12);
            assert!(r.std < 1e-12);
        }
    }

    #[test]
    fn direct_formula_matches_simulation_on_checkerboard() {
        let cb = ImageGrid::new(4, (0..16).map(|i| ((i / 4 + i % 4) % 2) as f64).collect()).unwrap();
        let rows = mnist_probability_sweep(std::slice::from_ref(&cb), &SweepAxis::D { d_values: vec![2] }, BoundaryMode::Periodic).unwrap();
        let sim = apply_pooling(&amplitude_encode_image(&cb).unwrap(), &PoolingSpec::periodic(2)).unwrap();
        assert!((rows[0].mean - sim.pi_success).abs() < 1e-10);
    }

    #[test]
    fn config_parses() {
        let c: SweepConfig = serde_json::from_str(r#"{"axis": "n", "n_values": [8, 16], "d": 3}"#).unwrap();
        assert_eq!(c.axis, SweepAxis::N { n_values: vec![8, 16], d: 3 });
        assert_eq!(c.images, 100);
    }
}
