//! Exact p-center solver.
//!
//! The optimum radius is always one of the pairwise distances. We binary
//! search over those candidates and decide each one with a set-cover
//! branch-and-bound: can `p` balls of radius `r` centred at vertices cover
//! every vertex?
//!
//! Radii are handled as exact squared integer distances internally so that
//! coverage tests never depend on floating-point rounding.

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::instance::{Instance, Solution};

/// Coverage sets of every candidate centre at a fixed radius.
#[derive(Debug, Clone)]
pub struct CoverageSystem {
    radius: f64,
    cover: Vec<BitSet>,
}

impl CoverageSystem {
    /// Centre `j` covers `i` iff `dist(i, j) <= r`.
    pub fn at_radius(inst: &Instance, r: f64) -> Self {
        let n = inst.n();
        let cover = (0..n)
            .map(|j| BitSet::from_predicate(n, |i| inst.dist(i, j) <= r))
            .collect();
        CoverageSystem { radius: r, cover }
    }

    /// Same as [`CoverageSystem::at_radius`] with the radius given as an
    /// exact squared distance.
    pub fn at_sq_radius(inst: &Instance, r_sq: i64) -> Self {
        let n = inst.n();
        let cover = (0..n)
            .map(|j| {
                let row = inst.sq_dist_row(j);
                BitSet::from_predicate(n, |i| row[i] <= r_sq)
            })
            .collect();
        CoverageSystem {
            radius: (r_sq as f64).sqrt(),
            cover,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cover(&self, j: usize) -> &BitSet {
        &self.cover[j]
    }

    pub fn len(&self) -> usize {
        self.cover.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cover.is_empty()
    }

    /// Centres whose cover set is not contained in another centre's cover
    /// set. Among identical cover sets the smallest index survives.
    fn undominated(&self) -> Vec<usize> {
        let n = self.cover.len();
        (0..n)
            .filter(|&j| {
                !(0..n).any(|o| {
                    o != j
                        && self.cover[j].is_subset(&self.cover[o])
                        && (o < j || self.cover[j] != self.cover[o])
                })
            })
            .collect()
    }

    /// Finds at most `p` centres covering every vertex, if possible.
    pub fn solve(&self, p: usize) -> Option<Solution> {
        let n = self.cover.len();
        let centres = self.undominated();
        // for each vertex, the (undominated) centres that reach it
        let reach: Vec<BitSet> = (0..n)
            .map(|i| {
                let mut b = BitSet::new(n);
                for &j in &centres {
                    if self.cover[j].contains(i) {
                        b.insert(j);
                    }
                }
                b
            })
            .collect();

        let mut search = Search {
            cover: &self.cover,
            reach: &reach,
            p,
            chosen: Vec::with_capacity(p),
        };
        if search.run(BitSet::full(n)) {
            Some(Solution::new(search.chosen))
        } else {
            None
        }
    }
}

struct Search<'a> {
    cover: &'a [BitSet],
    reach: &'a [BitSet],
    p: usize,
    chosen: Vec<usize>,
}

impl Search<'_> {
    fn run(&mut self, uncovered: BitSet) -> bool {
        if uncovered.is_empty() {
            return true;
        }
        let remaining = self.p - self.chosen.len();
        if remaining == 0 {
            return false;
        }
        if self.disjoint_lower_bound(&uncovered, remaining) > remaining {
            return false;
        }

        // branch on the uncovered vertex with the fewest candidate centres
        let Some(pivot) = uncovered.iter().min_by_key(|&i| (self.reach[i].count(), i)) else {
            return true;
        };

        let mut options: Vec<(usize, usize)> = self.reach[pivot]
            .iter()
            .map(|j| (self.cover[j].intersection_count(&uncovered), j))
            .collect();
        options.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

        for (_, j) in options {
            self.chosen.push(j);
            let mut rest = uncovered.clone();
            rest.difference_with(&self.cover[j]);
            if self.run(rest) {
                return true;
            }
            self.chosen.pop();
        }
        false
    }

    /// Uncovered vertices with pairwise disjoint centre sets each need their
    /// own centre. Stops counting once the budget is exceeded.
    fn disjoint_lower_bound(&self, uncovered: &BitSet, remaining: usize) -> usize {
        let mut used = BitSet::new(uncovered.capacity());
        let mut count = 0;
        for i in uncovered.iter() {
            if !self.reach[i].intersects(&used) {
                used.union_with(&self.reach[i]);
                count += 1;
                if count > remaining {
                    break;
                }
            }
        }
        count
    }
}

/// Distinct squared pairwise distances, ascending, including 0.
pub fn candidate_sq_radii(inst: &Instance) -> Vec<i64> {
    let n = inst.n();
    let mut out: Vec<i64> = Vec::with_capacity(n * (n - 1) / 2 + 1);
    out.push(0);
    for i in 0..n {
        out.extend_from_slice(&inst.sq_dist_row(i)[i + 1..]);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Distinct pairwise distances, strictly increasing, including 0.
pub fn candidate_radii(inst: &Instance) -> Vec<f64> {
    candidate_sq_radii(inst)
        .into_iter()
        .map(|s| (s as f64).sqrt())
        .collect()
}

/// Decision form: a solution with at most `p` centres and objective `<= r`.
pub fn feasible_at(inst: &Instance, r: f64, p: usize) -> Option<Solution> {
    CoverageSystem::at_radius(inst, r).solve(p)
}

pub fn feasible_at_sq(inst: &Instance, r_sq: i64, p: usize) -> Option<Solution> {
    CoverageSystem::at_sq_radius(inst, r_sq).solve(p)
}

/// An optimal solution together with its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimumCertificate {
    pub z_star: f64,
    pub solution: Solution,
    pub labels: Vec<u8>,
}

pub fn solve_exact(inst: &Instance) -> Result<OptimumCertificate> {
    let n = inst.n();
    let p = inst.p();
    if p < 1 || p > n {
        return Err(Error::InvalidP { n, p });
    }
    let radii = candidate_sq_radii(inst);

    // the largest candidate is feasible with any single centre
    let (mut lo, mut hi) = (0usize, radii.len() - 1);
    let mut best = feasible_at_sq(inst, radii[hi], p)
        .expect("a single centre covers everything at the diameter");
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match feasible_at_sq(inst, radii[mid], p) {
            Some(sol) => {
                hi = mid;
                best = sol;
            }
            None => lo = mid + 1,
        }
    }

    let mut solution = best;
    let mut filler = 0..n;
    while solution.len() < p {
        let v = filler.next().expect("p <= n leaves enough unused vertices");
        solution.insert(v);
    }
    let labels = solution.labels(n);
    Ok(OptimumCertificate {
        z_star: (radii[hi] as f64).sqrt(),
        solution,
        labels,
    })
}
