//! Euclidean vertex p-center instances.
//!
//! Every vertex is simultaneously a demand point and a candidate facility.
//! Coordinates are integers in `[0, 100]`, so squared distances are exact
//! integers; the real-valued distance matrix is derived from them and never
//! serialized.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible coordinate value (inclusive).
pub const COORD_MAX: i32 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRecord", into = "InstanceRecord")]
pub struct Instance {
    id: u64,
    p: usize,
    coords: Vec<[i32; 2]>,
    sq_dist: Vec<i64>,
    dist: Vec<f64>,
}

/// On-disk shape of an instance: `{"id", "n", "p", "coords"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: u64,
    pub n: usize,
    pub p: usize,
    pub coords: Vec<[i32; 2]>,
}

impl TryFrom<InstanceRecord> for Instance {
    type Error = Error;

    fn try_from(rec: InstanceRecord) -> Result<Self> {
        if rec.n != rec.coords.len() {
            return Err(Error::InvalidInstance(format!(
                "n = {} but {} coordinate pairs given",
                rec.n,
                rec.coords.len()
            )));
        }
        Instance::new(rec.id, rec.p, rec.coords)
    }
}

impl From<Instance> for InstanceRecord {
    fn from(inst: Instance) -> Self {
        InstanceRecord {
            id: inst.id,
            n: inst.n(),
            p: inst.p,
            coords: inst.coords,
        }
    }
}

impl Instance {
    pub fn new(id: u64, p: usize, coords: Vec<[i32; 2]>) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::InvalidInstance("instance has no vertices".into()));
        }
        if p < 1 || p > n {
            return Err(Error::InvalidP { n, p });
        }
        if let Some((i, c)) = coords
            .iter()
            .enumerate()
            .find(|(_, c)| c.iter().any(|&v| !(0..=COORD_MAX).contains(&v)))
        {
            return Err(Error::InvalidInstance(format!(
                "coordinate {:?} of vertex {i} outside [0, {COORD_MAX}]",
                c
            )));
        }

        let mut sq_dist = vec![0i64; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = i64::from(coords[i][0] - coords[j][0]);
                let dy = i64::from(coords[i][1] - coords[j][1]);
                let d = dx * dx + dy * dy;
                sq_dist[i * n + j] = d;
                sq_dist[j * n + i] = d;
            }
        }
        let dist = sq_dist.iter().map(|&d| (d as f64).sqrt()).collect();

        Ok(Instance {
            id,
            p,
            coords,
            sq_dist,
            dist,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn coords(&self) -> &[[i32; 2]] {
        &self.coords
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n() + j]
    }

    /// Exact squared distance between two vertices.
    #[inline]
    pub fn sq_dist(&self, i: usize, j: usize) -> i64 {
        self.sq_dist[i * self.n() + j]
    }

    /// Row `i` of the distance matrix.
    pub fn dist_row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.dist[i * n..(i + 1) * n]
    }

    pub fn sq_dist_row(&self, i: usize) -> &[i64] {
        let n = self.n();
        &self.sq_dist[i * n..(i + 1) * n]
    }

    /// Min-max objective: the largest distance from any vertex to its
    /// closest open facility.
    pub fn objective(&self, sol: &Solution) -> Result<f64> {
        let open = sol.vertices();
        if open.is_empty() {
            return Err(Error::EmptySolution);
        }
        self.check_vertices(open)?;
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            let row = self.dist_row(i);
            let nearest = open.iter().map(|&j| row[j]).fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
        Ok(worst)
    }

    pub(crate) fn check_vertices(&self, vertices: &[usize]) -> Result<()> {
        let n = self.n();
        match vertices.iter().find(|&&v| v >= n) {
            Some(&vertex) => Err(Error::VertexOutOfRange { vertex, n }),
            None => Ok(()),
        }
    }

    pub fn to_record(&self) -> InstanceRecord {
        self.clone().into()
    }
}

/// Samples `n` points uniformly (with replacement) from `{0..=100}²`.
///
/// The instance id is set to `seed`.
pub fn generate_instance(n: usize, p: usize, seed: u64) -> Result<Instance> {
    if n == 0 || p < 1 || p > n {
        return Err(Error::InvalidP { n, p });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n)
        .map(|_| {
            [
                rng.random_range(0..=COORD_MAX),
                rng.random_range(0..=COORD_MAX),
            ]
        })
        .collect();
    Instance::new(seed, p, coords)
}

/// A set of open facilities, stored sorted and without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Solution {
    open: Vec<usize>,
}

impl Solution {
    pub fn new(vertices: impl IntoIterator<Item = usize>) -> Self {
        let mut open: Vec<usize> = vertices.into_iter().collect();
        open.sort_unstable();
        open.dedup();
        Solution { open }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.open
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.open.binary_search(&v).is_ok()
    }

    pub fn insert(&mut self, v: usize) -> bool {
        match self.open.binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.open.insert(pos, v);
                true
            }
        }
    }

    /// 0/1 indicator vector over `n` vertices.
    pub fn labels(&self, n: usize) -> Vec<u8> {
        let mut labels = vec![0u8; n];
        for &v in &self.open {
            labels[v] = 1;
        }
        labels
    }
}

/// Directed k-nearest-neighbour lists. Self is excluded and ties are broken
/// by the smaller vertex index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnnGraph {
    k: usize,
    nbrs: Vec<Vec<usize>>,
}

impl KnnGraph {
    /// The requested neighbourhood size (before capping at `n - 1`).
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.nbrs[i]
    }

    pub fn len(&self) -> usize {
        self.nbrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nbrs.is_empty()
    }
}

pub fn build_knn(inst: &Instance, k: usize) -> Result<KnnGraph> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let n = inst.n();
    let take = k.min(n - 1);
    let nbrs = (0..n)
        .map(|i| {
            let row = inst.sq_dist_row(i);
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            // squared distances are exact, so ties are exact too
            others.sort_unstable_by_key(|&j| (row[j], j));
            others.truncate(take);
            others
        })
        .collect();
    Ok(KnnGraph { k, nbrs })
}
