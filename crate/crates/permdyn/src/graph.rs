//! The associated graph process as a union-find forest with largest /
//! second-largest component tracking, plus the coupled cycle-free
//! Erdős–Rényi process with its effective-time clock.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::perm::{sample_uniform_transposition, CyclePermutation};
use crate::walks::MassProfile;

#[derive(Debug, Clone)]
pub struct ComponentForest {
    parent: Vec<u32>,
    rank: Vec<u8>,
    size: Vec<u32>,
    n: usize,
    edges_added: u64,
    largest_root: u32,
    largest_size: u32,
    /// Histogram of component sizes; yields largest/second in O(log n).
    size_counts: BTreeMap<u32, u32>,
    /// Sum over components of |C|(|C|-1).
    same_component_pairs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AddEdgeOutcome {
    pub merged: bool,
    pub new_largest: (usize, usize),
}

impl ComponentForest {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize { min: 1, got: 0 });
        }
        let mut size_counts = BTreeMap::new();
        size_counts.insert(1u32, n as u32);
        Ok(Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            size: vec![1; n],
            n,
            edges_added: 0,
            largest_root: 0,
            largest_size: 1,
            size_counts,
            same_component_pairs: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges_added(&self) -> u64 {
        self.edges_added
    }

    pub fn find(&mut self, v: usize) -> usize {
        let mut root = v;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut cur = v;
        while self.parent[cur] as usize != root {
            let next = self.parent[cur] as usize;
            self.parent[cur] = root as u32;
            cur = next;
        }
        root
    }

    pub fn component_size(&mut self, v: usize) -> usize {
        let r = self.find(v);
        self.size[r] as usize
    }

    /// (root, size) of the largest component; ties broken by lowest root.
    pub fn largest(&self) -> (usize, usize) {
        (self.largest_root as usize, self.largest_size as usize)
    }

    pub fn second_size(&self) -> usize {
        let mut it = self.size_counts.iter().rev();
        let (&top, &count) = it.next().expect("histogram never empty");
        if count >= 2 {
            return top as usize;
        }
        it.next().map(|(&s, _)| s as usize).unwrap_or(0)
    }

    /// Probability that a uniform ordered pair of distinct vertices lies in
    /// one component (the rejection probability of the cycle-free process).
    pub fn p_rejection(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.same_component_pairs as f64 / (self.n as f64 * (self.n - 1) as f64)
    }

    fn decrement_size_count(&mut self, s: u32) {
        let c = self.size_counts.get_mut(&s).expect("size present");
        *c -= 1;
        if *c == 0 {
            self.size_counts.remove(&s);
        }
    }

    /// Add the edge {a, b}; multi-edges are counted as time steps but do not
    /// change the partition. Self-loops are rejected.
    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<AddEdgeOutcome> {
        if a >= self.n {
            return Err(Error::OutOfRange { element: a, n: self.n });
        }
        if b >= self.n {
            return Err(Error::OutOfRange { element: b, n: self.n });
        }
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        self.edges_added += 1;
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return Ok(AddEdgeOutcome { merged: false, new_largest: self.largest() });
        }
        let sa = self.size[ra];
        let sb = self.size[rb];
        let new_root = if self.rank[ra] < self.rank[rb] {
            self.parent[ra] = rb as u32;
            rb
        } else if self.rank[ra] > self.rank[rb] {
            self.parent[rb] = ra as u32;
            ra
        } else {
            self.parent[rb] = ra as u32;
            self.rank[ra] += 1;
            ra
        };
        let new_size = sa + sb;
        self.size[new_root] = new_size;
        self.decrement_size_count(sa);
        self.decrement_size_count(sb);
        *self.size_counts.entry(new_size).or_insert(0) += 1;
        self.same_component_pairs += 2 * (sa as u64) * (sb as u64);
        let absorbed_largest =
            self.largest_root as usize == ra || self.largest_root as usize == rb;
        if new_size > self.largest_size
            || (new_size == self.largest_size && (new_root as u32) < self.largest_root)
            || absorbed_largest
        {
            self.largest_root = new_root as u32;
            self.largest_size = new_size;
        }
        Ok(AddEdgeOutcome { merged: true, new_largest: self.largest() })
    }
}

/// True iff the time gate t > n(1+eps_n)/2 has passed and some positive-mass
/// cycle's representative lies in the largest component. The representative
/// check is valid because all elements of a permutation cycle share one
/// component of the associated graph.
pub fn dropdown_check(
    mass: &MassProfile,
    perm: &CyclePermutation,
    forest: &mut ComponentForest,
    eps_n: f64,
) -> bool {
    let n = forest.n() as f64;
    if (forest.edges_added() as f64) <= n * (1.0 + eps_n) / 2.0 {
        return false;
    }
    let largest_root = forest.largest().0;
    mass.labels().any(|label| {
        let rep = perm.cycle_info(label).expect("mass keys are live cycles").rep;
        forest.find(rep) == largest_root
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledStep {
    pub t: u64,
    pub tau: u64,
    pub largest: usize,
    pub second: usize,
    pub p_reject: f64,
}

#[derive(Debug, Clone)]
pub struct CoupledCycleFreeState {
    pub forest: ComponentForest,
    pub accepted: u64,
    pub proposed: u64,
}

impl CoupledCycleFreeState {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self { forest: ComponentForest::new(n)?, accepted: 0, proposed: 0 })
    }

    /// Propose one uniform non-self-loop edge; accept iff it joins two
    /// distinct components. Returns whether the edge was accepted.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool> {
        let (a, b) = sample_uniform_transposition(rng, self.forest.n())?;
        self.proposed += 1;
        let outcome = self.forest.add_edge(a, b)?;
        if outcome.merged {
            self.accepted += 1;
        }
        Ok(outcome.merged)
    }
}

/// Run the coupled process for t_max proposals, emitting per-step stats.
pub fn run_coupled_cycle_free<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    t_max: u64,
) -> Result<Vec<CoupledStep>> {
    let mut state = CoupledCycleFreeState::new(n)?;
    let mut out = Vec::with_capacity(t_max as usize);
    for t in 1..=t_max {
        state.step(rng)?;
        let (_, largest) = state.forest.largest();
        out.push(CoupledStep {
            t,
            tau: state.accepted,
            largest,
            second: state.forest.second_size(),
            p_reject: state.forest.p_rejection(),
        });
    }
    Ok(out)
}

/// Run the cycle-free process (accepted edges only advance the clock) and
/// record the giant fraction at each grid point s (accepted edges = round(sn)).
pub fn cycle_free_largest_trajectory<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    for &s in grid {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::Domain(format!(
                "cycle-free grid point {s} outside [0,1)"
            )));
        }
    }
    let mut targets: Vec<(u64, f64)> = grid
        .iter()
        .map(|&s| ((s * n as f64).round() as u64, s))
        .collect();
    targets.sort_by(|x, y| x.0.cmp(&y.0));
    let mut state = CoupledCycleFreeState::new(n)?;
    let mut out = Vec::with_capacity(grid.len());
    for &(target, s) in &targets {
        while state.accepted < target {
            state.step(rng)?;
        }
        out.push((s, state.forest.largest().1 as f64 / n as f64));
    }
    Ok(out)
}
