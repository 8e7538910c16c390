//! Exact per-cycle representation of the infinite-speed random walk (ISRW)
//! distribution, total-variation computations, the finite-speed comparison
//! walk, and the worst-case local mixing bound.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::perm::{CyclePermutation, EffectKind, TranspositionEffect};

/// ISRW distribution stored as mass per cycle label. Within each cycle the
/// distribution is uniform, which is preserved exactly by merges and splits,
/// so this per-cycle form is exact.
#[derive(Debug, Clone)]
pub struct MassProfile {
    mass: BTreeMap<usize, f64>,
    origin: usize,
}

impl MassProfile {
    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.mass.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.mass.iter().map(|(&l, &m)| (l, m))
    }

    pub fn mass_on(&self, label: usize) -> f64 {
        self.mass.get(&label).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    /// Number of elements carrying positive mass.
    pub fn support_size(&self, perm: &CyclePermutation) -> usize {
        self.mass
            .keys()
            .map(|l| perm.cycle_info(*l).map_or(0, |i| i.size))
            .sum()
    }

    /// Apply the mass flow induced by one transposition effect.
    pub fn update_on_effect(
        &mut self,
        effect: &TranspositionEffect,
        perm_after: &CyclePermutation,
    ) -> Result<()> {
        match effect.kind {
            EffectKind::Merged { left_cycle, right_cycle, new_cycle, new_size } => {
                match perm_after.cycle_info(new_cycle) {
                    Some(info) if info.size == new_size => {}
                    _ => return Err(Error::StaleEffect(new_cycle)),
                }
                let m = self.mass.remove(&left_cycle).unwrap_or(0.0)
                    + self.mass.remove(&right_cycle).unwrap_or(0.0);
                if m > 0.0 {
                    self.mass.insert(new_cycle, m);
                }
            }
            EffectKind::Split { old_cycle, frag_a, frag_b } => {
                for (label, size) in [frag_a, frag_b] {
                    match perm_after.cycle_info(label) {
                        Some(info) if info.size == size => {}
                        _ => return Err(Error::StaleEffect(label)),
                    }
                }
                if let Some(m) = self.mass.remove(&old_cycle) {
                    let old_size = (frag_a.1 + frag_b.1) as f64;
                    self.mass.insert(frag_a.0, m * frag_a.1 as f64 / old_size);
                    self.mass.insert(frag_b.0, m * frag_b.1 as f64 / old_size);
                }
            }
        }
        Ok(())
    }

    /// Expand to an element-level probability vector (test/diagnostic use).
    pub fn to_element_vector(&self, perm: &CyclePermutation) -> Vec<f64> {
        let mut out = vec![0.0; perm.n()];
        for (&label, &m) in &self.mass {
            let info = perm.cycle_info(label).expect("live label");
            let per = m / info.size as f64;
            let mut cur = info.rep;
            loop {
                out[cur] = per;
                cur = perm.succ(cur);
                if cur == info.rep {
                    break;
                }
            }
        }
        out
    }
}

/// Mass 1 on the cycle containing v0.
pub fn init_mass(perm: &CyclePermutation, v0: usize) -> Result<MassProfile> {
    if v0 >= perm.n() {
        return Err(Error::OutOfRange { element: v0, n: perm.n() });
    }
    let mut mass = BTreeMap::new();
    mass.insert(perm.cycle_of(v0), 1.0);
    Ok(MassProfile { mass, origin: v0 })
}

/// Total variation distance to Unif([n]), computed cycle-wise:
/// sum over mass-bearing cycles of max(0, m_c - |c|/n).
pub fn tv_to_uniform(mass: &MassProfile, perm: &CyclePermutation) -> f64 {
    let n = perm.n() as f64;
    mass.iter()
        .map(|(label, m)| {
            let size = perm.cycle_info(label).expect("live label").size as f64;
            (m - size / n).max(0.0)
        })
        .sum()
}

/// Total variation distance to the uniform distribution on the component
/// whose cycles are selected by `in_component` (a predicate on cycle reps;
/// valid because all elements of a cycle share one component).
pub fn tv_to_uniform_on_component<F: FnMut(usize) -> bool>(
    mass: &MassProfile,
    perm: &CyclePermutation,
    mut in_component: F,
    component_size: usize,
) -> Result<f64> {
    if component_size == 0 {
        return Err(Error::Domain("component size must be positive".into()));
    }
    let m_big = component_size as f64;
    Ok(mass
        .iter()
        .map(|(label, m)| {
            let info = perm.cycle_info(label).expect("live label");
            if in_component(info.rep) {
                (m - info.size as f64 / m_big).max(0.0)
            } else {
                m
            }
        })
        .sum())
}

/// Worst-case local TV bound for a distribution that is eps-close to mixed on
/// an (M + Delta)-element component whose largest cycle covers (1-eps^2)M
/// elements: eps + Delta/(eps M) - eps^2 M/(M+Delta) - Delta/(M+Delta).
pub fn worst_case_local_tv(m: u64, delta: u64, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) || eps == 0.0 {
        return Err(Error::Domain(format!("eps {eps} outside (0,1)")));
    }
    if m == 0 {
        return Err(Error::Domain("M must be at least 1".into()));
    }
    let (m, delta) = (m as f64, delta as f64);
    if eps * eps * m + delta > eps * m {
        return Err(Error::Domain(
            "precondition eps^2 M + Delta <= eps M violated".into(),
        ));
    }
    Ok(eps + delta / (eps * m) - eps * eps * m / (m + delta) - delta / (m + delta))
}

fn check_trajectory(trajectory: &[CyclePermutation], v0: usize) -> Result<usize> {
    let first = trajectory
        .first()
        .ok_or_else(|| Error::Domain("empty trajectory".into()))?;
    let n = first.n();
    if trajectory.iter().any(|p| p.n() != n) {
        return Err(Error::Domain("trajectory mixes element counts".into()));
    }
    if v0 >= n {
        return Err(Error::OutOfRange { element: v0, n });
    }
    Ok(n)
}

/// One permutation snapshot prepared for walker stepping.
struct WalkTables {
    succ: Vec<usize>,
    inv: Vec<usize>,
    /// True on 1- and 2-cycles, where the walker's move is deterministic.
    short_cycle: Vec<bool>,
}

impl WalkTables {
    fn new(perm: &CyclePermutation) -> Self {
        let n = perm.n();
        let succ: Vec<usize> = (0..n).map(|v| perm.succ(v)).collect();
        let mut inv = vec![0usize; n];
        for v in 0..n {
            inv[succ[v]] = v;
        }
        let short_cycle = (0..n).map(|v| succ[succ[v]] == v).collect();
        Self { succ, inv, short_cycle }
    }

    fn step(&self, w: &[f64], next: &mut [f64]) {
        next.fill(0.0);
        for v in 0..w.len() {
            let p = w[v];
            if p == 0.0 {
                continue;
            }
            if self.short_cycle[v] {
                next[self.succ[v]] += p;
            } else {
                next[self.succ[v]] += 0.5 * p;
                next[self.inv[v]] += 0.5 * p;
            }
        }
    }

    fn run(&self, w: &mut Vec<f64>, scratch: &mut Vec<f64>, steps: usize) {
        for _ in 0..steps {
            self.step(w, scratch);
            std::mem::swap(w, scratch);
        }
    }
}

/// Distribution of the finite-speed walk started at v0 after holding each
/// permutation of the trajectory fixed for rho steps. The full probability
/// vector is propagated (no Monte-Carlo noise): O(n) per walk step.
pub fn finite_speed_run(
    trajectory: &[CyclePermutation],
    v0: usize,
    rho: usize,
) -> Result<Vec<f64>> {
    let n = check_trajectory(trajectory, v0)?;
    if rho == 0 {
        return Err(Error::Domain("speed ratio rho must be at least 1".into()));
    }
    let mut w = vec![0.0; n];
    w[v0] = 1.0;
    let mut scratch = vec![0.0; n];
    for perm in trajectory {
        WalkTables::new(perm).run(&mut w, &mut scratch, rho);
    }
    Ok(w)
}

/// Per-step TV distances between the ISRW distribution and the finite-speed
/// walk driven by the same trajectory. trajectory[0] is the initial state
/// (the ISRW starts uniform on v0's cycle there, the walker at v0); each
/// later entry is applied to both walks, the walker taking rho steps.
pub fn compare_finite_vs_infinite(
    trajectory: &[CyclePermutation],
    v0: usize,
    rho: usize,
) -> Result<Vec<f64>> {
    let n = check_trajectory(trajectory, v0)?;
    if rho == 0 {
        return Err(Error::Domain("speed ratio rho must be at least 1".into()));
    }
    // Element-level vector of the instantly-uniformizing walk (exact
    // cycle averages).
    let mut mu = vec![0.0; n];
    {
        let first = &trajectory[0];
        let label = first.cycle_of(v0);
        let info = first.cycle_info(label).expect("live label");
        let per = 1.0 / info.size as f64;
        let mut cur = info.rep;
        loop {
            mu[cur] = per;
            cur = first.succ(cur);
            if cur == info.rep {
                break;
            }
        }
    }
    let mut w = vec![0.0; n];
    w[v0] = 1.0;
    let mut scratch = vec![0.0; n];
    let mut out = Vec::with_capacity(trajectory.len() - 1);
    for perm in &trajectory[1..] {
        // ISRW update: average mu within each cycle of the new permutation.
        for (label, info) in perm.cycles() {
            let _ = label;
            let mut sum = 0.0;
            let mut cur = info.rep;
            loop {
                sum += mu[cur];
                cur = perm.succ(cur);
                if cur == info.rep {
                    break;
                }
            }
            let per = sum / info.size as f64;
            let mut cur = info.rep;
            loop {
                mu[cur] = per;
                cur = perm.succ(cur);
                if cur == info.rep {
                    break;
                }
            }
        }
        WalkTables::new(perm).run(&mut w, &mut scratch, rho);
        let tv = 0.5 * mu.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum::<f64>();
        out.push(tv);
    }
    Ok(out)
}
