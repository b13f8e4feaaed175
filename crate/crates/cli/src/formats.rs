//! File formats: sequence, tree and partition JSON, cloud CSV, and atomic
//! writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use microset_core::cubes::{InnerPartition, PartitionCube, PointCloud};
use microset_core::measures::DiscreteMeasure;
use microset_core::moran::{CubeLevel, CubeTree};
use microset_core::seqgen::BranchingSeq;
use microset_core::symtree::SymbolTree;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::rational::{format_real, parse_ratio, parse_real};

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Pretty-printed JSON, for reports.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Json {
        path: path.into(),
        source: e,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Single-line JSON, for data files that can hold long code lists.
pub fn write_data<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec(value).map_err(|e| CliError::Json {
        path: path.into(),
        source: e,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.into(),
        source: e,
    })
}

/// `{"gamma": "p/q", "bits": [...], "schedule": [N_1, N_2, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    pub bits: Vec<u8>,
    #[serde(default)]
    pub schedule: Vec<u64>,
}

impl SeqFile {
    pub fn from_seq(seq: &BranchingSeq) -> Self {
        Self {
            gamma: seq.gamma().map(|g| g.to_string()),
            bits: seq.bits().to_vec(),
            schedule: seq.schedule().to_vec(),
        }
    }

    pub fn into_seq(self) -> Result<BranchingSeq> {
        let gamma = self.gamma.as_deref().map(parse_ratio).transpose()?;
        Ok(BranchingSeq::from_parts(self.bits, gamma, self.schedule)?)
    }
}

pub fn read_seq(path: &Path) -> Result<BranchingSeq> {
    read_json::<SeqFile>(path)?.into_seq()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryLevel {
    pub side: f64,
    pub origins: Vec<Vec<f64>>,
}

/// `{"M": alphabet, "rho": "p/q", "levels": [[codes]...], "geometry": ...}`.
/// A symbol tree is a cube tree without geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(rename = "M")]
    pub alphabet: u32,
    pub rho: String,
    pub levels: Vec<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Vec<GeometryLevel>>,
}

impl TreeFile {
    pub fn from_symbol_tree(tree: &SymbolTree) -> Self {
        Self {
            d: None,
            alphabet: tree.alphabet(),
            rho: format_real(tree.rho()),
            levels: (0..=tree.depth()).map(|n| tree.codes(n)).collect(),
            labels: tree.labels().map(<[_]>::to_vec),
            geometry: None,
        }
    }

    pub fn from_cube_tree(tree: &CubeTree) -> Self {
        let mut file = Self::from_symbol_tree(&tree.tree);
        file.d = Some(tree.d);
        file.geometry = tree.geometry.as_ref().map(|levels| {
            levels
                .iter()
                .map(|l| GeometryLevel {
                    side: l.side,
                    origins: l.origins.chunks(tree.d).map(<[f64]>::to_vec).collect(),
                })
                .collect()
        });
        file
    }

    pub fn to_symbol_tree(&self) -> Result<SymbolTree> {
        let rho = parse_real(&self.rho)?;
        let tree = SymbolTree::from_codes(self.alphabet, rho, &self.levels)?;
        Ok(match &self.labels {
            Some(l) => tree.with_labels(l.clone())?,
            None => tree,
        })
    }

    pub fn to_cube_tree(&self) -> Result<CubeTree> {
        let tree = self.to_symbol_tree()?;
        let d = self.d.unwrap_or(1);
        let geometry = self.geometry.as_ref().map(|levels| {
            levels
                .iter()
                .map(|l| CubeLevel {
                    side: l.side,
                    origins: l.origins.iter().flatten().copied().collect(),
                })
                .collect()
        });
        Ok(CubeTree::new(d, tree, geometry)?)
    }
}

pub fn read_tree(path: &Path) -> Result<SymbolTree> {
    read_json::<TreeFile>(path)?.to_symbol_tree()
}

const RESOLUTION_TAG: &str = "# resolution:";

/// Reads a CSV cloud: one point per row, `d` numeric columns, an optional
/// header row. The resolution is `delta` when given, else the value of a
/// leading `# resolution: x` line, else zero.
pub fn read_cloud(path: &Path, delta: Option<f64>) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let tagged = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix(RESOLUTION_TAG))
        .map(|v| parse_real(v.trim()))
        .transpose()?;
    let delta = delta.or(tagged).unwrap_or(0.0);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut coords = Vec::new();
    let mut d = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Csv {
            path: path.into(),
            source: e,
        })?;
        let values: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match values {
            Ok(v) => v,
            Err(_) if row == 0 => continue,
            Err(_) => return Err(CliError::format(path, format!("row {} is not numeric", row + 1))),
        };
        match d {
            None => d = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(CliError::format(
                    path,
                    format!("row {} has {} columns, expected {d}", row + 1, values.len()),
                ))
            }
            _ => {}
        }
        coords.extend(values);
    }
    let d = d.ok_or_else(|| CliError::format(path, "no points"))?;
    Ok(PointCloud::new(d, coords, delta)?)
}

/// Writes a cloud with its resolution on the first line.
pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut w = csv::Writer::from_writer(format!("{RESOLUTION_TAG} {}\n", cloud.delta()).into_bytes());
    for p in cloud.points() {
        w.write_record(p.iter().map(|x| format!("{x}")))
            .map_err(|e| CliError::Csv {
                path: path.into(),
                source: e,
            })?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::format(path, e.to_string()))?;
    write_atomic(path, &bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeEntry {
    pub center: u32,
    pub members: Vec<u32>,
    pub parent: Option<u32>,
}

/// A partition with its cloud, so it can be validated on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub rho: String,
    pub d: usize,
    pub delta: f64,
    pub points: Vec<Vec<f64>>,
    pub levels: Vec<Vec<CubeEntry>>,
    pub c_target: f64,
    #[serde(rename = "C_target")]
    pub big_c_target: f64,
    pub c_meas: f64,
    #[serde(rename = "C_meas")]
    pub big_c_meas: f64,
    #[serde(rename = "M_meas")]
    pub m_meas: usize,
}

impl PartitionFile {
    pub fn from_partition(p: &InnerPartition) -> Self {
        Self {
            rho: format_real(p.rho),
            d: p.cloud.d(),
            delta: p.cloud.delta(),
            points: p.cloud.points().map(<[f64]>::to_vec).collect(),
            levels: p
                .levels
                .iter()
                .map(|level| {
                    level
                        .iter()
                        .map(|c| CubeEntry {
                            center: c.center,
                            members: c.members.clone(),
                            parent: c.parent,
                        })
                        .collect()
                })
                .collect(),
            c_target: p.c_target,
            big_c_target: p.big_c_target,
            c_meas: p.c_meas,
            big_c_meas: p.big_c_meas,
            m_meas: p.m_meas,
        }
    }

    pub fn to_partition(&self, path: &Path) -> Result<InnerPartition> {
        if self.points.iter().any(|p| p.len() != self.d) {
            return Err(CliError::format(path, "point with the wrong number of coordinates"));
        }
        let cloud = PointCloud::new(self.d, self.points.iter().flatten().copied().collect(), self.delta)?;
        if cloud.len() != self.points.len() {
            return Err(CliError::format(path, "partition cloud has duplicate points"));
        }
        Ok(InnerPartition {
            rho: parse_real(&self.rho)?,
            cloud,
            levels: self
                .levels
                .iter()
                .map(|level| {
                    level
                        .iter()
                        .map(|c| PartitionCube {
                            center: c.center,
                            members: c.members.clone(),
                            parent: c.parent,
                        })
                        .collect()
                })
                .collect(),
            c_target: self.c_target,
            big_c_target: self.big_c_target,
            c_meas: self.c_meas,
            big_c_meas: self.big_c_meas,
            m_meas: self.m_meas,
        })
    }
}

pub fn read_partition(path: &Path) -> Result<InnerPartition> {
    read_json::<PartitionFile>(path)?.to_partition(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Vec<f64>,
    /// Exact weight `p/q`.
    pub weight: String,
}

/// `{"d": d, "atoms": [{"point": [...], "weight": "p/q"}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub d: usize,
    pub atoms: Vec<Atom>,
}

impl MeasureFile {
    pub fn from_measure(m: &DiscreteMeasure) -> Self {
        Self {
            d: m.d(),
            atoms: m
                .atoms()
                .enumerate()
                .map(|(i, p)| Atom {
                    point: p.to_vec(),
                    weight: m.weight(i).to_string(),
                })
                .collect(),
        }
    }

    /// Weights are brought to a common denominator; they must sum to one.
    pub fn to_measure(&self, path: &Path) -> Result<DiscreteMeasure> {
        let weights = self
            .atoms
            .iter()
            .map(|a| parse_ratio(&a.weight))
            .collect::<Result<Vec<_>>>()?;
        let denom = weights.iter().fold(1u64, |l, w| {
            let g = gcd(l, *w.denom());
            l / g * *w.denom()
        });
        let raw: Vec<u64> = weights.iter().map(|w| *w.numer() * (denom / *w.denom())).collect();
        if raw.iter().sum::<u64>() != denom {
            return Err(CliError::format(path, "atom weights do not sum to one"));
        }
        if self.atoms.iter().any(|a| a.point.len() != self.d) {
            return Err(CliError::format(path, "atom with the wrong number of coordinates"));
        }
        let points = self.atoms.iter().flat_map(|a| a.point.iter().copied()).collect();
        Ok(DiscreteMeasure::new(self.d, points, raw)?)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use microset_core::Rational;

    #[test]
    fn measure_round_trip() {
        let m = DiscreteMeasure::new(1, vec![0.0, 0.5, 1.0], vec![1, 2, 1]).unwrap();
        let file = MeasureFile::from_measure(&m);
        assert_eq!(file.atoms[1].weight, "1/2");
        let back = file.to_measure(Path::new("m.json")).unwrap();
        assert_eq!(back.weight(1), Rational::new(1, 2));
        assert_eq!(back.total(), Rational::from_integer(1));
    }

    #[test]
    fn unnormalized_measure_is_rejected() {
        let file = MeasureFile {
            d: 1,
            atoms: vec![Atom {
                point: vec![0.0],
                weight: "1/2".into(),
            }],
        };
        assert!(file.to_measure(Path::new("m.json")).is_err());
    }

    #[test]
    fn cloud_round_trip_keeps_resolution() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let cloud = PointCloud::cantor(3).unwrap();
        write_cloud(&path, &cloud).unwrap();
        assert_eq!(read_cloud(&path, None).unwrap(), cloud);
        assert_eq!(read_cloud(&path, Some(0.5)).unwrap().delta(), 0.5);
    }

    #[test]
    fn cloud_with_header_and_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        fs::write(&path, "x,y\n0,0\n1, 0.5\n").unwrap();
        let cloud = read_cloud(&path, None).unwrap();
        assert_eq!((cloud.d(), cloud.len(), cloud.delta()), (2, 2, 0.0));
        fs::write(&path, "0,0\n1\n").unwrap();
        assert!(read_cloud(&path, None).is_err());
    }

    #[test]
    fn tree_round_trip() {
        let t = SymbolTree::full(3, 0.25, 3).unwrap();
        let file = TreeFile::from_symbol_tree(&t);
        assert_eq!(file.rho, "1/4");
        assert_eq!(file.to_symbol_tree().unwrap(), t);
    }
}
