//! Interval partitions: Poisson–Dirichlet sampling, the split-merge chain,
//! the abstract two-partition coupling with shared markers, and recurrence
//! statistics of the large-block set.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::perm::CyclePermutation;

pub const LENGTH_TOL: f64 = 1e-10;

/// Partition of [0, L] into positive blocks; the Vec order is the current
/// arrangement of the blocks on the interval.
#[derive(Debug, Clone)]
pub struct IntervalPartition {
    blocks: Vec<f64>,
    total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitMergeEvent {
    Merge { result: f64 },
    Split { old: f64, parts: (f64, f64) },
    Noop,
}

impl IntervalPartition {
    pub fn new(blocks: Vec<f64>, total: f64) -> Result<Self> {
        if blocks.is_empty() || blocks.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::Domain("blocks must be positive".into()));
        }
        let sum: f64 = blocks.iter().sum();
        if (sum - total).abs() > LENGTH_TOL {
            return Err(Error::Domain(format!(
                "blocks sum to {sum}, expected total {total}"
            )));
        }
        Ok(Self { blocks, total })
    }

    pub fn blocks(&self) -> &[f64] {
        &self.blocks
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn largest(&self) -> f64 {
        self.blocks.iter().copied().fold(0.0, f64::max)
    }

    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut v = self.blocks.clone();
        v.sort_by(|a, b| b.partial_cmp(a).expect("finite lengths"));
        v
    }

    /// Index and in-block offset of the block containing position x.
    fn locate(&self, x: f64) -> (usize, f64) {
        let mut acc = 0.0;
        for (i, &b) in self.blocks.iter().enumerate() {
            if x < acc + b {
                return (i, x - acc);
            }
            acc += b;
        }
        (self.blocks.len() - 1, *self.blocks.last().expect("non-empty"))
    }

    /// Apply the two-marker dynamics at given marker positions: both markers
    /// in one block split it at the second marker; markers in two distinct
    /// blocks merge them.
    pub fn apply_markers(&mut self, u: f64, u_prime: f64) -> SplitMergeEvent {
        let (i, _) = self.locate(u);
        let (j, off_j) = self.locate(u_prime);
        if i == j {
            let old = self.blocks[i];
            let (left, right) = (off_j, old - off_j);
            if left <= 0.0 || right <= 0.0 {
                return SplitMergeEvent::Noop;
            }
            self.blocks[i] = left;
            self.blocks.insert(i + 1, right);
            SplitMergeEvent::Split { old, parts: (left, right) }
        } else {
            let result = self.blocks[i] + self.blocks[j];
            self.blocks[i] = result;
            self.blocks.remove(j);
            SplitMergeEvent::Merge { result }
        }
    }

    /// One split-merge step with uniform markers on [0, L].
    pub fn split_merge_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SplitMergeEvent {
        let u = rng.random_range(0.0..self.total);
        let u_prime = rng.random_range(0.0..self.total);
        self.apply_markers(u, u_prime)
    }
}

/// Stick-breaking PoiDir(theta) sample on [0, 1] (Beta(1, theta) fractions,
/// truncated when the residual stick is below 1e-12), sorted descending.
pub fn sample_poidir<R: Rng + ?Sized>(rng: &mut R, theta: f64) -> Result<IntervalPartition> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta {theta} must be positive")));
    }
    let beta = Beta::new(1.0, theta)
        .map_err(|e| Error::Domain(format!("invalid Beta parameters: {e}")))?;
    let mut blocks = Vec::new();
    let mut remaining = 1.0f64;
    while remaining >= 1e-12 {
        let frac: f64 = beta.sample(rng);
        let piece = remaining * frac;
        if piece > 0.0 {
            blocks.push(piece);
        }
        remaining *= 1.0 - frac;
    }
    blocks.sort_by(|a, b| b.partial_cmp(a).expect("finite lengths"));
    let total: f64 = blocks.iter().sum();
    Ok(IntervalPartition { blocks, total })
}

/// All cycle sizes of the permutation divided by cmax_size, descending;
/// the partitioned interval has length n/cmax_size.
pub fn extract_cycle_partition(
    perm: &CyclePermutation,
    cmax_size: usize,
) -> Result<IntervalPartition> {
    if cmax_size == 0 {
        return Err(Error::Domain("cmax_size must be at least 1".into()));
    }
    let scale = cmax_size as f64;
    let mut blocks: Vec<f64> =
        perm.cycles().map(|(_, info)| info.size as f64 / scale).collect();
    blocks.sort_by(|a, b| b.partial_cmp(a).expect("finite lengths"));
    Ok(IntervalPartition { blocks, total: perm.n() as f64 / scale })
}

/// Coupled pair of partitions: left on [0, L] with L >= 1, right on [0, 1].
#[derive(Debug, Clone)]
pub struct CouplingState {
    pub left: IntervalPartition,
    pub right: IntervalPartition,
    pub matched_mass: f64,
    pub matched_pairs: usize,
}

impl CouplingState {
    pub fn new(left: IntervalPartition, right: IntervalPartition) -> Result<Self> {
        if left.total() + LENGTH_TOL < right.total() {
            return Err(Error::Domain(
                "left partition must cover at least the right interval".into(),
            ));
        }
        Ok(Self { left, right, matched_mass: 0.0, matched_pairs: 0 })
    }
}

/// Greedy first-fit matching of near-equal blocks by descending size.
/// Returns per-side matched flags (indices into the descending order).
fn greedy_match(left_desc: &[f64], right_desc: &[f64], tol: f64) -> (Vec<bool>, Vec<bool>) {
    let mut lm = vec![false; left_desc.len()];
    let mut rm = vec![false; right_desc.len()];
    let mut j = 0usize;
    for (i, &l) in left_desc.iter().enumerate() {
        while j < right_desc.len() && right_desc[j] > l + tol {
            j += 1;
        }
        if j < right_desc.len() && (l - right_desc[j]).abs() <= tol {
            lm[i] = true;
            rm[j] = true;
            j += 1;
        }
    }
    (lm, rm)
}

/// Reorder so unmatched blocks sit left-aligned descending and matched
/// blocks right-aligned descending; returns the matched mass.
fn arrange(partition: &mut IntervalPartition, matched: &[bool], desc: Vec<f64>) -> (f64, usize) {
    let mut unmatched = Vec::with_capacity(desc.len());
    let mut matched_blocks = Vec::new();
    for (i, b) in desc.into_iter().enumerate() {
        if matched[i] {
            matched_blocks.push(b);
        } else {
            unmatched.push(b);
        }
    }
    let q: f64 = matched_blocks.iter().sum();
    let pairs = matched_blocks.len();
    unmatched.extend(matched_blocks);
    partition.blocks = unmatched;
    (q, pairs)
}

/// One step of the shared-marker coupling: match, reorder both sides, draw
/// U, U' on [0, left.L], apply to the left always and to the right only when
/// both markers land inside [0, right.L].
pub fn coupling_step<R: Rng + ?Sized>(
    state: &mut CouplingState,
    rng: &mut R,
    match_tol: f64,
) {
    let left_desc = state.left.sorted_desc();
    let right_desc = state.right.sorted_desc();
    let (lm, rm) = greedy_match(&left_desc, &right_desc, match_tol);
    arrange(&mut state.left, &lm, left_desc);
    arrange(&mut state.right, &rm, right_desc);

    let u = rng.random_range(0.0..state.left.total());
    let u_prime = rng.random_range(0.0..state.left.total());
    state.left.apply_markers(u, u_prime);
    if u < state.right.total() && u_prime < state.right.total() {
        state.right.apply_markers(u, u_prime);
    }

    // Recompute matches on the evolved pair for reporting.
    let left_desc = state.left.sorted_desc();
    let right_desc = state.right.sorted_desc();
    let (lm, _) = greedy_match(&left_desc, &right_desc, match_tol);
    state.matched_mass = left_desc
        .iter()
        .zip(&lm)
        .filter(|(_, &m)| m)
        .map(|(&b, _)| b)
        .sum();
    state.matched_pairs = lm.iter().filter(|&&m| m).count();
}

/// Max over ranks of |left[i] - right[i]| on the size-sorted partitions,
/// missing entries treated as 0.
pub fn sup_norm_discrepancy(state: &CouplingState) -> f64 {
    let l = state.left.sorted_desc();
    let r = state.right.sorted_desc();
    let mut sup = 0.0f64;
    for i in 0..l.len().max(r.len()) {
        let a = l.get(i).copied().unwrap_or(0.0);
        let b = r.get(i).copied().unwrap_or(0.0);
        sup = sup.max((a - b).abs());
    }
    sup
}

/// Number of strict upward crossings of the level 1 - eps.
pub fn count_upcrossings(series: &[f64], eps: f64) -> usize {
    let level = 1.0 - eps;
    series
        .windows(2)
        .filter(|w| w[0] < level && w[1] >= level)
        .count()
}

#[derive(Debug, Clone, Copy)]
pub struct ReturnStats {
    pub mean_gap: f64,
    pub occupation_fraction: f64,
    pub visits: u64,
}

/// Run the split-merge chain from a PoiDir(1) start and measure returns to
/// the set {largest block > 1 - eps}.
pub fn mean_return_time<R: Rng + ?Sized>(
    rng: &mut R,
    eps: f64,
    steps: u64,
) -> Result<ReturnStats> {
    if !(0.0..0.5).contains(&eps) || eps == 0.0 {
        return Err(Error::Domain(format!("eps {eps} outside (0, 1/2)")));
    }
    let level = 1.0 - eps;
    let mut chain = sample_poidir(rng, 1.0)?;
    let mut largest = chain.largest();
    let mut visits = 0u64;
    let mut last_visit: Option<u64> = None;
    let mut gap_sum = 0u64;
    let mut gap_count = 0u64;
    for t in 1..=steps {
        match chain.split_merge_step(rng) {
            SplitMergeEvent::Merge { result } => largest = largest.max(result),
            SplitMergeEvent::Split { old, .. } => {
                if old >= largest {
                    largest = chain.largest();
                }
            }
            SplitMergeEvent::Noop => {}
        }
        if largest > level {
            visits += 1;
            if let Some(prev) = last_visit {
                gap_sum += t - prev;
                gap_count += 1;
            }
            last_visit = Some(t);
        }
    }
    if gap_count == 0 {
        return Err(Error::InsufficientData(format!(
            "fewer than two visits to the large-block set in {steps} steps"
        )));
    }
    Ok(ReturnStats {
        mean_gap: gap_sum as f64 / gap_count as f64,
        occupation_fraction: visits as f64 / steps as f64,
        visits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn partition_validation() {
        assert!(IntervalPartition::new(vec![0.5, 0.5], 1.0).is_ok());
        assert!(IntervalPartition::new(vec![0.5, -0.1], 0.4).is_err());
        assert!(IntervalPartition::new(vec![0.5, 0.4], 1.0).is_err());
        assert!(IntervalPartition::new(vec![], 0.0).is_err());
    }

    #[test]
    fn poidir_sums_and_validation() {
        let mut r = rng(1);
        for _ in 0..100 {
            let p = sample_poidir(&mut r, 1.0).unwrap();
            let sum: f64 = p.blocks().iter().sum();
            assert!((sum - 1.0).abs() < 1e-10);
            // Sorted descending.
            assert!(p.blocks().windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(sample_poidir(&mut r, 0.0).is_err());
        assert!(sample_poidir(&mut r, -1.0).is_err());
    }

    #[test]
    fn poidir_largest_block_statistics() {
        let mut r = rng(2);
        let samples = 20_000;
        let mut hits = 0u32;
        let mut mean = 0.0;
        for _ in 0..samples {
            let p = sample_poidir(&mut r, 1.0).unwrap();
            let l = p.largest();
            mean += l;
            if l > 0.7 {
                hits += 1;
            }
        }
        mean /= samples as f64;
        let frac = hits as f64 / samples as f64;
        // P(largest > 1-eps) = -log(1-eps) for eps=0.3.
        assert!((frac + 0.7f64.ln()).abs() < 0.02, "frac {frac}");
        // Golomb–Dickman constant (mean longest-cycle fraction).
        assert!((mean - 0.62433).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn split_merge_events() {
        let mut r = rng(3);
        // Two equal blocks, markers in distinct blocks -> single block of L.
        let mut p = IntervalPartition::new(vec![0.5, 0.5], 1.0).unwrap();
        let e = p.apply_markers(0.25, 0.75);
        assert!(matches!(e, SplitMergeEvent::Merge { result } if (result - 1.0).abs() < 1e-12));
        assert_eq!(p.blocks().len(), 1);
        // Single block: always splits.
        let e = p.split_merge_step(&mut r);
        assert!(matches!(e, SplitMergeEvent::Split { .. }));
        assert_eq!(p.blocks().len(), 2);
        let sum: f64 = p.blocks().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn length_conservation_under_chain() {
        let mut r = rng(4);
        let mut p = sample_poidir(&mut r, 1.0).unwrap();
        let total = p.total();
        for _ in 0..20_000 {
            p.split_merge_step(&mut r);
        }
        let sum: f64 = p.blocks().iter().sum();
        assert!((sum - total).abs() < 1e-10);
        assert!(p.blocks().iter().all(|&b| b > 0.0));
    }

    #[test]
    fn extract_cycle_partition_examples() {
        let mut p = CyclePermutation::identity(7).unwrap();
        for v in 0..6 {
            p.apply_transposition(v, v + 1).unwrap();
        }
        let part = extract_cycle_partition(&p, 7).unwrap();
        assert_eq!(part.blocks(), &[1.0]);
        assert!((part.total() - 1.0).abs() < 1e-12);

        let mut p = CyclePermutation::identity(7).unwrap();
        for v in 0..3 {
            p.apply_transposition(v, v + 1).unwrap();
        }
        p.apply_transposition(4, 5).unwrap();
        p.apply_transposition(5, 6).unwrap();
        let part = extract_cycle_partition(&p, 7).unwrap();
        assert_eq!(part.blocks(), &[4.0 / 7.0, 3.0 / 7.0]);

        let p = CyclePermutation::identity(5).unwrap();
        let part = extract_cycle_partition(&p, 1).unwrap();
        assert_eq!(part.blocks(), &[1.0; 5]);
        assert!((part.total() - 5.0).abs() < 1e-12);
        assert!(extract_cycle_partition(&p, 0).is_err());
    }

    #[test]
    fn identity_coupling_stays_identical() {
        let mut r = rng(5);
        let start = sample_poidir(&mut r, 1.0).unwrap();
        let mut state = CouplingState::new(start.clone(), start).unwrap();
        for _ in 0..2000 {
            coupling_step(&mut state, &mut r, 0.0);
            assert!(sup_norm_discrepancy(&state) == 0.0);
        }
        let sl: f64 = state.left.blocks().iter().sum();
        let sr: f64 = state.right.blocks().iter().sum();
        assert!((sl - sr).abs() < 1e-10);
    }

    #[test]
    fn disjoint_sizes_have_zero_matched_mass() {
        let left = IntervalPartition::new(vec![0.9, 0.1], 1.0).unwrap();
        let right = IntervalPartition::new(vec![0.6, 0.4], 1.0).unwrap();
        let (lm, rm) = greedy_match(&left.sorted_desc(), &right.sorted_desc(), 0.0);
        assert!(lm.iter().all(|&m| !m));
        assert!(rm.iter().all(|&m| !m));
        // And a full step conserves both totals.
        let mut state = CouplingState::new(left, right).unwrap();
        let mut r = rng(6);
        for _ in 0..200 {
            coupling_step(&mut state, &mut r, 0.0);
        }
        let sl: f64 = state.left.blocks().iter().sum();
        let sr: f64 = state.right.blocks().iter().sum();
        assert!((sl - 1.0).abs() < 1e-10);
        assert!((sr - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coupling_contracts_discrepancy() {
        // Independent starts under the shared-marker coupling: splits at a
        // shared marker produce nearly equal pieces once block boundaries
        // roughly align, so with a moderate tolerance most of the mass ends
        // up matched.
        let mut r = rng(7);
        let mut matched_avg = 0.0;
        let reps = 20;
        for _ in 0..reps {
            let left = sample_poidir(&mut r, 1.0).unwrap();
            let right = sample_poidir(&mut r, 1.0).unwrap();
            let mut state = CouplingState::new(left, right).unwrap();
            for _ in 0..500 {
                coupling_step(&mut state, &mut r, 0.02);
            }
            matched_avg += state.matched_mass;
        }
        matched_avg /= reps as f64;
        assert!(matched_avg > 0.5, "mean matched mass {matched_avg}");
    }

    #[test]
    fn sup_norm_hand_cases() {
        let mk = |l: Vec<f64>, r: Vec<f64>| {
            let tl: f64 = l.iter().sum();
            let tr: f64 = r.iter().sum();
            CouplingState::new(
                IntervalPartition::new(l, tl).unwrap(),
                IntervalPartition::new(r, tr).unwrap(),
            )
            .unwrap()
        };
        assert_eq!(sup_norm_discrepancy(&mk(vec![1.0], vec![0.6, 0.4])), 0.4);
        let s = sup_norm_discrepancy(&mk(vec![0.5, 0.5], vec![0.5, 0.3, 0.2]));
        assert!((s - 0.2).abs() < 1e-12);
        assert_eq!(sup_norm_discrepancy(&mk(vec![0.3, 0.7], vec![0.7, 0.3])), 0.0);
    }

    #[test]
    fn upcrossing_examples() {
        assert_eq!(count_upcrossings(&[0.9, 0.8, 0.95], 0.5), 0);
        assert_eq!(count_upcrossings(&[0.3, 0.8, 0.3, 0.9], 0.5), 2);
        assert_eq!(count_upcrossings(&[0.1, 0.2, 0.6, 0.9], 0.5), 1);
        // Brute-force comparison on a random series.
        let mut r = rng(8);
        let series: Vec<f64> = (0..500).map(|_| r.random_range(0.0..1.0)).collect();
        let eps = 0.4;
        let mut brute = 0;
        for i in 1..series.len() {
            if series[i - 1] < 1.0 - eps && series[i] >= 1.0 - eps {
                brute += 1;
            }
        }
        assert_eq!(count_upcrossings(&series, eps), brute);
    }

    #[test]
    fn kac_return_time_sanity() {
        let mut r = rng(9);
        let stats = mean_return_time(&mut r, 0.3, 200_000).unwrap();
        let nu = -(0.7f64.ln());
        assert!(
            (stats.occupation_fraction - nu).abs() < 0.03,
            "occupation {}",
            stats.occupation_fraction
        );
        assert!(
            (stats.mean_gap - 1.0 / nu).abs() / (1.0 / nu) < 0.1,
            "mean gap {}",
            stats.mean_gap
        );
        assert!(mean_return_time(&mut r, 0.6, 10).is_err());
    }

    #[test]
    fn split_merge_preserves_poidir_smoke() {
        // Small-scale invariance check; the full-scale version lives in the
        // acceptance suite.
        let mut r = rng(10);
        let replicas = 2000;
        let mut evolved = Vec::with_capacity(replicas);
        let mut fresh = Vec::with_capacity(replicas);
        for _ in 0..replicas {
            let mut p = sample_poidir(&mut r, 1.0).unwrap();
            for _ in 0..2000 {
                p.split_merge_step(&mut r);
            }
            evolved.push(p.largest());
            fresh.push(sample_poidir(&mut r, 1.0).unwrap().largest());
        }
        let d = crate::stats::ks_two_sample(&evolved, &fresh).unwrap();
        assert!(d < 0.06, "two-sample KS {d}");
    }
}
