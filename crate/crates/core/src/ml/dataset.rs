use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, LinkLengths, Position3, JOINTS};

/// Joint angles and the end-effector position they produce.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub joints: JointVector,
    pub position: Position3,
}

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub noise_amplitude: f64,
    pub rows: usize,
    /// Grid points per joint; empty when the rows were drawn at random.
    pub grid_resolution: Vec<usize>,
    /// Set when `rows` was too small for a 2-per-axis grid.
    pub random_fallback: bool,
    pub links: LinkLengths,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
    pub meta: DatasetMeta,
}

/// Grid points per axis: the smallest `n` with `n⁷ ≥ count`.
pub fn grid_resolution(count: usize) -> Vec<usize> {
    let mut n = 1usize;
    while n.checked_pow(JOINTS as u32).is_some_and(|p| p < count) {
        n += 1;
    }
    vec![n; JOINTS]
}

fn linspace(lower: f64, upper: f64, n: usize, k: usize) -> f64 {
    if n == 1 {
        0.5 * (lower + upper)
    } else {
        lower + (upper - lower) * k as f64 / (n - 1) as f64
    }
}

/// Sweeps a regular grid over the joint ranges, jitters every angle by a
/// uniform draw in `±noise_amplitude` and stores the forward kinematics of
/// the jittered angles. When the grid holds more points than `count`, an
/// evenly strided subset is kept.
pub fn generate_dataset(model: &KinematicModel, count: usize, noise_amplitude: f64, seed: u64) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::Empty("dataset"));
    }
    if !(noise_amplitude >= 0.0 && noise_amplitude.is_finite()) {
        return Err(Error::config("noise amplitude must be finite and non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits = model.joint_limits();
    let random_fallback = count < 1 << JOINTS;
    let grid = if random_fallback { Vec::new() } else { grid_resolution(count) };
    let total: usize = grid.iter().product();

    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let mut q = if random_fallback {
            model.random_joints(&mut rng)
        } else {
            let mut flat = (i as u128 * total as u128 / count as u128) as usize;
            let mut q = JointVector::ZERO;
            for j in (0..JOINTS).rev() {
                let k = flat % grid[j];
                flat /= grid[j];
                q[j] = linspace(limits[j].lower, limits[j].upper, grid[j], k);
            }
            q
        };
        if noise_amplitude > 0.0 {
            for j in 0..JOINTS {
                q[j] += rng.random_range(-noise_amplitude..=noise_amplitude);
            }
        }
        rows.push(DatasetRow {
            joints: q,
            position: model.end_effector_position(&q),
        });
    }
    Ok(Dataset {
        meta: DatasetMeta {
            seed,
            noise_amplitude,
            rows: count,
            grid_resolution: grid,
            random_fallback,
            links: model.links(),
        },
        rows,
    })
}

/// Random disjoint partition into `(train, test)`; the test part holds
/// `round(test_fraction · n)` rows.
pub fn split_dataset<R: Rng + ?Sized>(
    rows: &[DatasetRow],
    test_fraction: f64,
    rng: &mut R,
) -> Result<(Vec<DatasetRow>, Vec<DatasetRow>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config("test fraction must lie strictly between 0 and 1"));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(rng);
    let n_test = (test_fraction * rows.len() as f64).round() as usize;
    let test = order[..n_test].iter().map(|&i| rows[i]).collect();
    let train = order[n_test..].iter().map(|&i| rows[i]).collect();
    Ok((train, test))
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    theta1: f64,
    theta2: f64,
    theta3: f64,
    theta4: f64,
    theta5: f64,
    theta6: f64,
    theta7: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// Sidecar path holding the metadata of `csv_path`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

impl Dataset {
    /// Writes ten columns `theta1..theta7,x,y,z` plus a JSON sidecar.
    pub fn save(&self, csv_path: &Path) -> Result<()> {
        let file = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
        let mut writer = csv::Writer::from_writer(BufWriter::new(file));
        for row in &self.rows {
            let [t1, t2, t3, t4, t5, t6, t7] = row.joints.0;
            writer.serialize(CsvRow {
                theta1: t1,
                theta2: t2,
                theta3: t3,
                theta4: t4,
                theta5: t5,
                theta6: t6,
                theta7: t7,
                x: row.position.x,
                y: row.position.y,
                z: row.position.z,
            })?;
        }
        writer.flush().map_err(|e| Error::io(csv_path, e))?;
        let meta = meta_path(csv_path);
        let text = serde_json::to_string_pretty(&self.meta)?;
        std::fs::write(&meta, text).map_err(|e| Error::io(meta, e))
    }

    pub fn load(csv_path: &Path) -> Result<Dataset> {
        let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
        let mut reader = csv::Reader::from_reader(BufReader::new(file));
        let mut rows = Vec::new();
        for record in reader.deserialize() {
            let r: CsvRow = record?;
            rows.push(DatasetRow {
                joints: JointVector::new([r.theta1, r.theta2, r.theta3, r.theta4, r.theta5, r.theta6, r.theta7]),
                position: Position3::new(r.x, r.y, r.z),
            });
        }
        let meta_file = meta_path(csv_path);
        let meta: DatasetMeta = match std::fs::read_to_string(&meta_file) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: meta_file.clone(),
                message: e.to_string(),
            })?,
            Err(e) => return Err(Error::io(meta_file, e)),
        };
        if rows.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        Ok(Dataset { rows, meta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn resolution_covers_count() {
        assert_eq!(grid_resolution(128), vec![2; 7]);
        let r = grid_resolution(100_000);
        assert_eq!(r, vec![6; 7]);
        assert!(r.iter().product::<usize>() >= 100_000);
    }

    #[test]
    fn corners_without_noise() {
        let model = KinematicModel::unit();
        let ds = generate_dataset(&model, 128, 0.0, 1).unwrap();
        assert!(!ds.meta.random_fallback);
        for (i, row) in ds.rows.iter().enumerate() {
            for j in 0..JOINTS {
                let bit = (i >> (JOINTS - 1 - j)) & 1;
                let expected = if bit == 0 { -PI } else { PI };
                assert_eq!(row.joints[j], expected);
            }
            assert_eq!(row.position, model.end_effector_position(&row.joints));
        }
    }

    #[test]
    fn noise_stays_within_amplitude() {
        let model = KinematicModel::unit();
        let clean = generate_dataset(&model, 3000, 0.0, 4).unwrap();
        let noisy = generate_dataset(&model, 3000, 0.1, 4).unwrap();
        for (a, b) in clean.rows.iter().zip(&noisy.rows) {
            assert!(a.joints.iter().zip(b.joints.iter()).all(|(x, y)| (x - y).abs() <= 0.1));
        }
    }

    #[test]
    fn small_counts_fall_back_to_random() {
        let ds = generate_dataset(&KinematicModel::unit(), 10, 0.0, 0).unwrap();
        assert!(ds.meta.random_fallback);
        assert_eq!(ds.rows.len(), 10);
    }

    #[test]
    fn split_sizes_and_union() {
        let ds = generate_dataset(&KinematicModel::unit(), 100, 0.05, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (train, test) = split_dataset(&ds.rows, 0.25, &mut rng).unwrap();
        assert_eq!((train.len(), test.len()), (75, 25));
        let mut all: Vec<_> = train.iter().chain(&test).map(|r| r.joints.0.map(f64::to_bits)).collect();
        let mut orig: Vec<_> = ds.rows.iter().map(|r| r.joints.0.map(f64::to_bits)).collect();
        all.sort();
        orig.sort();
        assert_eq!(all, orig);
    }

    #[test]
    fn csv_round_trip() {
        let ds = generate_dataset(&KinematicModel::unit(), 50, 0.1, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        ds.save(&path).unwrap();
        assert_eq!(Dataset::load(&path).unwrap(), ds);
    }
}
