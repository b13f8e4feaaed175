use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::PointCloud;
use crate::error::{invalid, Error, Result};
use crate::grid::{dist, GridIndex};
use crate::symtree::SymbolTree;

/// One cube `Q_(i,k)` with its distinguished centre `x_(i,k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionCube {
    /// Index of the centre in the cloud.
    pub center: u32,
    /// Cloud indices of the members, ascending.
    pub members: Vec<u32>,
    /// Cube index at the level above (`None` on level 0).
    pub parent: Option<u32>,
}

/// A levelled family of cubes over a point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerPartition {
    pub rho: f64,
    pub cloud: PointCloud,
    pub levels: Vec<Vec<PartitionCube>>,
    /// Inner constant the construction guarantees with margin.
    pub c_target: f64,
    /// Outer constant the construction guarantees with margin.
    pub big_c_target: f64,
    pub c_meas: f64,
    pub big_c_meas: f64,
    pub m_meas: usize,
}

/// Inner ball constant the greedy construction provably attains, `1/2 - rho/(1-rho)`.
pub fn provable_inner_constant(rho: f64) -> f64 {
    0.5 - rho / (1.0 - rho)
}

/// Cap applied to the measured inner constant: no ball of radius above
/// `rho^k / 2` can be guaranteed in general.
pub const INNER_CAP: f64 = 0.5;

/// Targets checked on every build: three quarters of the provable inner
/// constant and nine eighths of the provable outer constant `1/(1-rho)`.
/// At `rho = 1/4` these are `1/8` and `3/2`.
pub fn target_constants(rho: f64) -> (f64, f64) {
    (0.75 * provable_inner_constant(rho), 1.125 / (1.0 - rho))
}

/// Deepest level whose scale `rho^k` is still at least `2 delta`.
pub fn max_resolved_level(rho: f64, delta: f64) -> usize {
    if delta <= 0.0 {
        return usize::MAX;
    }
    let mut k = 0;
    let mut scale = 1.0;
    while scale * rho >= 2.0 * delta {
        scale *= rho;
        k += 1;
    }
    k
}

/// Builds the inner regular partition from nested greedy `rho^k`-nets.
///
/// Level `k` centres are all level `k-1` centres followed by every cloud
/// point (in index order) farther than `rho^k` from the centres chosen so
/// far. A centre's parent is its nearest centre one level up; a point joins
/// the cube of its nearest finest-level centre and inherits that centre's
/// ancestors. Ties go to the lowest index.
pub fn build_partition(cloud: &PointCloud, rho: f64, k_max: usize) -> Result<InnerPartition> {
    if !(rho > 0.0 && rho < 1.0 / 3.0) {
        return Err(invalid(format!(
            "rho must lie in (0, 1/3) for a positive inner constant, got {rho}"
        )));
    }
    if cloud.diameter() > 1.0 {
        return Err(invalid(format!(
            "cloud diameter {} exceeds 1; normalize it first",
            cloud.diameter()
        )));
    }
    let max_level = max_resolved_level(rho, cloud.delta());
    if k_max > max_level {
        return Err(Error::Resolution {
            k_max,
            delta: cloud.delta(),
            max_level,
        });
    }
    let d = cloud.d();
    let n = cloud.len();

    // nested nets
    let mut centers: Vec<Vec<u32>> = Vec::with_capacity(k_max + 1);
    let mut parents: Vec<Vec<u32>> = Vec::with_capacity(k_max + 1);
    let mut scale = 1.0;
    for k in 0..=k_max {
        let mut net: Vec<u32> = centers.last().cloned().unwrap_or_default();
        let mut grid = GridIndex::new(d, scale);
        for &c in &net {
            grid.insert(c, cloud.point(c as usize));
        }
        for i in 0..n as u32 {
            let p = cloud.point(i as usize);
            let mut covered = false;
            grid.for_each_candidate(p, scale, |c| {
                covered |= dist(cloud.point(c as usize), p) <= scale;
            });
            if !covered {
                grid.insert(i, p);
                net.push(i);
            }
        }
        if k > 0 {
            let above = &centers[k - 1];
            let coarse = scale / rho;
            let mut agrid = GridIndex::new(d, coarse);
            for (j, &c) in above.iter().enumerate() {
                agrid.insert(j as u32, cloud.point(c as usize));
            }
            let par = net
                .iter()
                .map(|&c| nearest(cloud, &agrid, above, cloud.point(c as usize), coarse))
                .collect::<Result<Vec<u32>>>()?;
            parents.push(par);
        } else {
            parents.push(Vec::new());
        }
        centers.push(net);
        scale *= rho;
    }

    // chain assignment from the finest level
    let finest = &centers[k_max];
    let fine_scale = libm::pow(rho, k_max as f64);
    let mut fgrid = GridIndex::new(d, fine_scale);
    for (j, &c) in finest.iter().enumerate() {
        fgrid.insert(j as u32, cloud.point(c as usize));
    }
    let mut owner = vec![vec![0u32; n]; k_max + 1];
    for i in 0..n {
        let mut cube = nearest(cloud, &fgrid, finest, cloud.point(i), fine_scale)?;
        owner[k_max][i] = cube;
        for k in (1..=k_max).rev() {
            cube = parents[k][cube as usize];
            owner[k - 1][i] = cube;
        }
    }

    let mut levels = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut cubes: Vec<PartitionCube> = centers[k]
            .iter()
            .enumerate()
            .map(|(j, &c)| PartitionCube {
                center: c,
                members: Vec::new(),
                parent: (k > 0).then(|| parents[k][j]),
            })
            .collect();
        for (i, &o) in owner[k].iter().enumerate() {
            cubes[o as usize].members.push(i as u32);
        }
        levels.push(cubes);
    }

    let (c_target, big_c_target) = target_constants(rho);
    let mut partition = InnerPartition {
        rho,
        cloud: cloud.clone(),
        levels,
        c_target,
        big_c_target,
        c_meas: 0.0,
        big_c_meas: 0.0,
        m_meas: 0,
    };
    let report = validate_partition(&partition);
    if let Some(v) = report.first_violation {
        return Err(Error::ConstructionFailure {
            level: v.level,
            cube: v.cube,
            property: v.property,
        });
    }
    partition.c_meas = report.c_meas;
    partition.big_c_meas = report.big_c_meas;
    partition.m_meas = report.m_meas;
    Ok(partition)
}

/// Index into `centers` of the centre nearest to `p` among those within
/// `radius`; ties go to the lowest index.
fn nearest(cloud: &PointCloud, grid: &GridIndex, centers: &[u32], p: &[f64], radius: f64) -> Result<u32> {
    let mut best: Option<(f64, u32)> = None;
    grid.for_each_candidate(p, radius, |j| {
        let dj = dist(cloud.point(centers[j as usize] as usize), p);
        if best.is_none_or(|(bd, bj)| dj < bd || (dj == bd && j < bj)) {
            best = Some((dj, j));
        }
    });
    match best {
        Some((dj, j)) if dj <= radius => Ok(j),
        _ => Err(Error::InternalConsistency(format!(
            "no centre within {radius} of a cloud point; the net is not maximal"
        ))),
    }
}

/// Pass/fail for one of the five defining properties.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub holds: bool,
}

/// First property violation found, with its location.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub level: usize,
    pub cube: usize,
    pub property: String,
}

/// Outcome of [`validate_partition`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub properties: Vec<PropertyCheck>,
    pub first_violation: Option<Violation>,
    /// Largest `c` with every open ball `B(x, c rho^k)` inside its cube, capped at 1/2.
    pub c_meas: f64,
    /// Smallest `C` with every cube inside `B(x, C rho^k)`.
    pub big_c_meas: f64,
    /// Largest number of children of a cube.
    pub m_meas: usize,
    /// Volume-packing bound `(1 + 4 C_meas / (c_target rho))^d` on the branching.
    pub branching_bound: f64,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.properties.iter().all(|p| p.holds)
    }
}

pub const PROPERTY_NAMES: [&str; 5] = [
    "single root cube",
    "levels partition the cloud",
    "cubes nest",
    "ball sandwich",
    "centres nest",
];

/// Checks the five properties exhaustively and measures the constants.
pub fn validate_partition(p: &InnerPartition) -> ValidationReport {
    let cloud = &p.cloud;
    let n = cloud.len();
    let d = cloud.d();
    let mut ok = [true; 5];
    let mut first: Option<Violation> = None;
    let mut fail = |prop: usize, level: usize, cube: usize, what: String, ok: &mut [bool; 5]| {
        ok[prop] = false;
        if first.is_none() {
            first = Some(Violation {
                level,
                cube,
                property: format!("{}: {what}", PROPERTY_NAMES[prop]),
            });
        }
    };

    // (i)
    match p.levels.first() {
        Some(l0) if l0.len() == 1 && l0[0].members.len() == n => {}
        _ => fail(
            0,
            0,
            0,
            "level 0 is not a single cube holding every point".into(),
            &mut ok,
        ),
    }

    // (ii) and owner tables
    let mut owners: Vec<Vec<u32>> = Vec::with_capacity(p.levels.len());
    for (k, level) in p.levels.iter().enumerate() {
        let mut owner = vec![u32::MAX; n];
        for (j, cube) in level.iter().enumerate() {
            for &i in &cube.members {
                match owner.get(i as usize) {
                    None => fail(1, k, j, format!("member {i} is not a cloud point"), &mut ok),
                    Some(&u32::MAX) => owner[i as usize] = j as u32,
                    Some(_) => fail(1, k, j, format!("point {i} lies in two cubes"), &mut ok),
                }
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == u32::MAX) {
            fail(1, k, 0, format!("point {i} lies in no cube"), &mut ok);
        }
        owners.push(owner);
    }

    // (iii)
    for k in 1..p.levels.len() {
        for (j, cube) in p.levels[k].iter().enumerate() {
            let Some(par) = cube.parent.filter(|&q| (q as usize) < p.levels[k - 1].len()) else {
                fail(2, k, j, "missing or invalid parent".into(), &mut ok);
                continue;
            };
            if let Some(&i) = cube
                .members
                .iter()
                .find(|&&i| owners[k - 1].get(i as usize) != Some(&par))
            {
                fail(2, k, j, format!("member {i} is outside the parent cube {par}"), &mut ok);
            }
        }
    }

    // (iv) and constants
    let mut big_c_meas = 0.0f64;
    let mut c_meas = INNER_CAP;
    let mut scale = 1.0;
    for (k, level) in p.levels.iter().enumerate() {
        let mut grid = GridIndex::new(d, scale);
        for i in 0..n {
            grid.insert(i as u32, cloud.point(i));
        }
        for (j, cube) in level.iter().enumerate() {
            let Some(x) = (cube.center as usize).lt(&n).then(|| cloud.point(cube.center as usize)) else {
                fail(3, k, j, "centre is not a cloud point".into(), &mut ok);
                continue;
            };
            if owners[k].get(cube.center as usize) != Some(&(j as u32)) {
                fail(3, k, j, "centre lies outside its cube".into(), &mut ok);
            }
            for &i in &cube.members {
                let r = dist(cloud.point(i as usize), x) / scale;
                big_c_meas = big_c_meas.max(r);
                if r > p.big_c_target {
                    fail(3, k, j, format!("member {i} at {r} rho^k from the centre"), &mut ok);
                }
            }
            let mut inner = INNER_CAP;
            grid.for_each_candidate(x, INNER_CAP * scale, |i| {
                if owners[k][i as usize] != j as u32 {
                    inner = inner.min(dist(cloud.point(i as usize), x) / scale);
                }
            });
            c_meas = c_meas.min(inner);
            if inner <= p.c_target {
                fail(
                    3,
                    k,
                    j,
                    format!("a foreign point sits {inner} rho^k from the centre"),
                    &mut ok,
                );
            }
        }
        scale *= p.rho;
    }

    // (v)
    for k in 1..p.levels.len() {
        let here: hashbrown::HashSet<u32> = p.levels[k].iter().map(|c| c.center).collect();
        if let Some(j) = p.levels[k - 1].iter().position(|c| !here.contains(&c.center)) {
            fail(4, k - 1, j, "centre missing from the next level".into(), &mut ok);
        }
    }

    let mut children = Vec::new();
    let mut m_meas = 0;
    for k in 1..p.levels.len() {
        children.clear();
        children.resize(p.levels[k - 1].len(), 0usize);
        for cube in &p.levels[k] {
            if let Some(c) = cube.parent.and_then(|q| children.get_mut(q as usize)) {
                *c += 1;
            }
        }
        m_meas = m_meas.max(children.iter().copied().max().unwrap_or(0));
    }
    let branching_bound = libm::pow(1.0 + 4.0 * big_c_meas / (p.c_target * p.rho), d as f64);

    ValidationReport {
        properties: PROPERTY_NAMES
            .iter()
            .zip(ok)
            .map(|(&name, holds)| PropertyCheck { name, holds })
            .collect(),
        first_violation: first,
        c_meas,
        big_c_meas,
        m_meas,
        branching_bound,
    }
}

/// The `(rho, M)`-tree of a partition. Children of a cube are numbered
/// `1..=j` in increasing cube index; node labels are cube indices.
pub fn partition_to_tree(p: &InnerPartition) -> Result<SymbolTree> {
    let alphabet = p.m_meas.max(1) as u32;
    let mut links = Vec::with_capacity(p.levels.len().saturating_sub(1));
    let mut labels = vec![vec![0u32]];
    for k in 1..p.levels.len() {
        let above = labels.last().unwrap();
        let mut pos = vec![u32::MAX; p.levels[k - 1].len()];
        for (t, &cube) in above.iter().enumerate() {
            pos[cube as usize] = t as u32;
        }
        let mut order: Vec<(u32, u32)> = p.levels[k]
            .iter()
            .enumerate()
            .map(|(j, c)| (pos[c.parent.unwrap_or(0) as usize], j as u32))
            .collect();
        order.sort_unstable();
        let mut level = Vec::with_capacity(order.len());
        let mut here = Vec::with_capacity(order.len());
        let mut sym = 0;
        for (i, &(tp, j)) in order.iter().enumerate() {
            sym = if i > 0 && order[i - 1].0 == tp { sym + 1 } else { 1 };
            level.push((tp, sym));
            here.push(j);
        }
        links.push(level);
        labels.push(here);
    }
    SymbolTree::from_parent_links(alphabet, p.rho, links)?.with_labels(labels)
}
