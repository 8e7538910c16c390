//! Permutation of [n] maintained as labeled cycles with O(min fragment)
//! transposition updates, plus the two transposition samplers.
//!
//! Elements are 0-indexed internally; CLI/file output shifts to 1-indexed.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleInfo {
    pub size: usize,
    /// An arbitrary but deterministic element of the cycle.
    pub rep: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectKind {
    Merged {
        left_cycle: usize,
        right_cycle: usize,
        new_cycle: usize,
        new_size: usize,
    },
    Split {
        old_cycle: usize,
        /// (label, size) of the fragment containing `a`.
        frag_a: (usize, usize),
        /// (label, size) of the fragment containing `b`.
        frag_b: (usize, usize),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranspositionEffect {
    pub kind: EffectKind,
    pub applied_pair: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct CyclePermutation {
    n: usize,
    succ: Vec<usize>,
    cycle_id: Vec<usize>,
    cycles: BTreeMap<usize, CycleInfo>,
    next_label: usize,
    /// Sum over cycles of |C|(|C|-1): the number of ordered same-cycle pairs.
    same_cycle_pairs: u64,
}

impl CyclePermutation {
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize { min: 1, got: 0 });
        }
        let cycles = (0..n).map(|v| (v, CycleInfo { size: 1, rep: v })).collect();
        Ok(Self {
            n,
            succ: (0..n).collect(),
            cycle_id: (0..n).collect(),
            cycles,
            next_label: n,
            same_cycle_pairs: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn succ(&self, v: usize) -> usize {
        self.succ[v]
    }

    pub fn cycle_of(&self, v: usize) -> usize {
        self.cycle_id[v]
    }

    pub fn cycle_info(&self, label: usize) -> Option<&CycleInfo> {
        self.cycles.get(&label)
    }

    pub fn num_cycles(&self) -> usize {
        self.cycles.len()
    }

    /// Iterate over (label, info) in deterministic (label) order.
    pub fn cycles(&self) -> impl Iterator<Item = (usize, &CycleInfo)> {
        self.cycles.iter().map(|(&l, info)| (l, info))
    }

    /// Probability that a uniform ordered pair of distinct elements falls
    /// inside a single cycle.
    pub fn same_cycle_pair_fraction(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.same_cycle_pairs as f64 / (self.n as f64 * (self.n - 1) as f64)
    }

    /// Elements of a cycle in successor order starting from its rep.
    pub fn cycle_elements(&self, label: usize) -> Option<Vec<usize>> {
        let info = self.cycles.get(&label)?;
        let mut out = Vec::with_capacity(info.size);
        let mut cur = info.rep;
        loop {
            out.push(cur);
            cur = self.succ[cur];
            if cur == info.rep {
                break;
            }
        }
        Some(out)
    }

    /// Largest cycle as (label, size); ties broken by lowest rep element.
    pub fn largest_cycle(&self) -> (usize, usize) {
        let mut best: Option<(usize, &CycleInfo)> = None;
        for (&label, info) in &self.cycles {
            let better = match best {
                None => true,
                Some((_, b)) => {
                    info.size > b.size || (info.size == b.size && info.rep < b.rep)
                }
            };
            if better {
                best = Some((label, info));
            }
        }
        let (label, info) = best.expect("registry is never empty");
        (label, info.size)
    }

    fn check_element(&self, v: usize) -> Result<()> {
        if v >= self.n {
            Err(Error::OutOfRange { element: v, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Apply the transposition (a, b) on the right: Pi' = Pi o (a b), i.e.
    /// the successors of a and b are swapped.
    pub fn apply_transposition(&mut self, a: usize, b: usize) -> Result<TranspositionEffect> {
        self.check_element(a)?;
        self.check_element(b)?;
        if a == b {
            return Err(Error::DegenerateTransposition(a));
        }
        let la = self.cycle_id[a];
        let lb = self.cycle_id[b];
        let kind = if la != lb {
            self.merge(a, b, la, lb)
        } else {
            self.split(a, b, la)
        };
        Ok(TranspositionEffect { kind, applied_pair: (a, b) })
    }

    fn merge(&mut self, a: usize, b: usize, la: usize, lb: usize) -> EffectKind {
        let sa = self.cycles[&la].size;
        let sb = self.cycles[&lb].size;
        // The larger cycle's label survives; ties go to the smaller label.
        let (survivor, absorbed, absorbed_start) =
            if sa > sb || (sa == sb && la < lb) { (la, lb, b) } else { (lb, la, a) };
        let mut cur = absorbed_start;
        loop {
            self.cycle_id[cur] = survivor;
            cur = self.succ[cur];
            if cur == absorbed_start {
                break;
            }
        }
        self.succ.swap(a, b);
        self.cycles.remove(&absorbed);
        let info = self.cycles.get_mut(&survivor).expect("survivor registered");
        info.size = sa + sb;
        self.same_cycle_pairs += 2 * (sa as u64) * (sb as u64);
        EffectKind::Merged {
            left_cycle: la,
            right_cycle: lb,
            new_cycle: survivor,
            new_size: sa + sb,
        }
    }

    fn split(&mut self, a: usize, b: usize, label: usize) -> EffectKind {
        let old_size = self.cycles[&label].size;
        self.succ.swap(a, b);
        // Dual walk: advance both fragments in lockstep; the one that closes
        // first is the smaller (within one step) and gets relabeled.
        let mut cur_a = self.succ[a];
        let mut size_a = 1usize;
        let mut cur_b = self.succ[b];
        let mut size_b = 1usize;
        let (start, closed_size) = loop {
            if cur_a == a {
                break (a, size_a);
            }
            size_a += 1;
            cur_a = self.succ[cur_a];
            if cur_b == b {
                break (b, size_b);
            }
            size_b += 1;
            cur_b = self.succ[cur_b];
        };
        let new_label = self.next_label;
        self.next_label += 1;
        let mut cur = start;
        loop {
            self.cycle_id[cur] = new_label;
            cur = self.succ[cur];
            if cur == start {
                break;
            }
        }
        let other_start = if start == a { b } else { a };
        let other_size = old_size - closed_size;
        self.cycles.insert(new_label, CycleInfo { size: closed_size, rep: start });
        let kept = self.cycles.get_mut(&label).expect("old label registered");
        kept.size = other_size;
        kept.rep = other_start;
        self.same_cycle_pairs -= 2 * (closed_size as u64) * (other_size as u64);
        let (frag_a, frag_b) = if start == a {
            ((new_label, closed_size), (label, other_size))
        } else {
            ((label, other_size), (new_label, closed_size))
        };
        EffectKind::Split { old_cycle: label, frag_a, frag_b }
    }

    /// Full-traversal consistency audit (used by tests at small n).
    pub fn check_consistency(&self) -> Result<()> {
        let mut seen_image = vec![false; self.n];
        for &s in &self.succ {
            if s >= self.n || seen_image[s] {
                return Err(Error::Domain("succ is not a bijection".into()));
            }
            seen_image[s] = true;
        }
        let mut total = 0usize;
        let mut pair_sum = 0u64;
        for (&label, info) in &self.cycles {
            if self.cycle_id[info.rep] != label {
                return Err(Error::Domain(format!("rep of cycle {label} has wrong id")));
            }
            let mut cur = info.rep;
            let mut count = 0usize;
            loop {
                if self.cycle_id[cur] != label {
                    return Err(Error::Domain(format!("element {cur} has wrong cycle id")));
                }
                count += 1;
                cur = self.succ[cur];
                if cur == info.rep {
                    break;
                }
                if count > self.n {
                    return Err(Error::Domain("cycle traversal does not close".into()));
                }
            }
            if count != info.size {
                return Err(Error::Domain(format!(
                    "cycle {label} registered size {} but traversal found {count}",
                    info.size
                )));
            }
            total += count;
            pair_sum += (count as u64) * (count as u64 - 1);
        }
        if total != self.n {
            return Err(Error::Domain("registry sizes do not sum to n".into()));
        }
        if pair_sum != self.same_cycle_pairs {
            return Err(Error::Domain("same-cycle pair count out of sync".into()));
        }
        Ok(())
    }
}

/// Uniform unordered pair of distinct elements of [n].
pub fn sample_uniform_transposition<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
) -> Result<(usize, usize)> {
    if n < 2 {
        return Err(Error::InvalidSize { min: 2, got: n });
    }
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    Ok((a, b))
}

/// Uniform unordered pair with endpoints in distinct cycles.
///
/// Rejection sampling while the same-cycle probability is moderate; once it
/// exceeds 0.9 (the coagulative endgame) switch to exact two-stage sampling:
/// draw `a` with weight n - |cycle(a)|, then `b` uniform outside cycle(a).
pub fn sample_cross_cycle_transposition<R: Rng + ?Sized>(
    rng: &mut R,
    perm: &CyclePermutation,
) -> Result<(usize, usize)> {
    let n = perm.n();
    if perm.num_cycles() < 2 {
        return Err(Error::ExhaustedDynamics);
    }
    if perm.same_cycle_pair_fraction() <= 0.9 {
        loop {
            let (a, b) = sample_uniform_transposition(rng, n)?;
            if perm.cycle_of(a) != perm.cycle_of(b) {
                return Ok((a, b));
            }
        }
    }
    // Exact mode. Total weight: sum over cycles of |C|(n - |C|).
    let total: u64 = perm
        .cycles()
        .map(|(_, info)| (info.size as u64) * ((n - info.size) as u64))
        .sum();
    let mut x = rng.random_range(0..total);
    let mut chosen = None;
    for (_, info) in perm.cycles() {
        let w = (info.size as u64) * ((n - info.size) as u64);
        if x < w {
            chosen = Some((info, x / (n - info.size) as u64));
            break;
        }
        x -= w;
    }
    let (info, offset) = chosen.expect("weights sum to total");
    let mut a = info.rep;
    for _ in 0..offset {
        a = perm.succ(a);
    }
    loop {
        let b = rng.random_range(0..n);
        if perm.cycle_of(b) != perm.cycle_of(a) {
            return Ok((a, b));
        }
    }
}
