//! Dynamic degree-two multigraph with uniform edge rewiring, plus the
//! instantly-uniformizing walk profile on its components.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::ComponentForest;

const NO_EDGE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompInfo {
    pub size: u32,
    pub rep: u32,
}

/// How a rewire changed the component registry. In `Split`, `frag_a` keeps
/// the old label and `frag_b` carries the new one; pairs are (label, size).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewireEffect {
    Merge { absorbed: u32, into: u32, new_size: u32 },
    Split { frag_a: (u32, u32), frag_b: (u32, u32) },
    Preserve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewireOutcome {
    pub effect: RewireEffect,
    /// Endpoints of the two chosen edges before the surgery, for feeding the
    /// associated graph process.
    pub endpoints: ((u32, u32), (u32, u32)),
}

/// 2-regular multigraph on n vertices: a disjoint union of cycles, where a
/// self-loop is a 1-cycle and a double edge a 2-cycle.
#[derive(Debug, Clone)]
pub struct Deg2Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    /// Two incident edge ids per vertex (a self-loop occupies both slots).
    incident: Vec<[u32; 2]>,
    comp_id: Vec<u32>,
    comps: BTreeMap<u32, CompInfo>,
    next_label: u32,
}

impl Deg2Graph {
    /// One self-loop per vertex.
    pub fn init_self_loops(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize { min: 2, got: n });
        }
        let edges = (0..n as u32).map(|v| (v, v)).collect();
        let incident = (0..n as u32).map(|v| [v, v]).collect();
        let comp_id = (0..n as u32).collect();
        let comps = (0..n as u32)
            .map(|v| (v, CompInfo { size: 1, rep: v }))
            .collect();
        Ok(Self { n, edges, incident, comp_id, comps, next_label: n as u32 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn comp_of(&self, v: usize) -> u32 {
        self.comp_id[v]
    }

    pub fn comp_info(&self, label: u32) -> Option<&CompInfo> {
        self.comps.get(&label)
    }

    pub fn comps(&self) -> impl Iterator<Item = (u32, &CompInfo)> {
        self.comps.iter().map(|(&l, info)| (l, info))
    }

    pub fn num_comps(&self) -> usize {
        self.comps.len()
    }

    /// Largest component as (label, size); ties broken by lowest label.
    pub fn largest_component(&self) -> (u32, u32) {
        let mut best = (0u32, 0u32);
        for (&label, info) in &self.comps {
            if info.size > best.1 {
                best = (label, info.size);
            }
        }
        best
    }

    fn other_incident(&self, v: u32, edge: u32) -> u32 {
        let [p, q] = self.incident[v as usize];
        if p == edge { q } else { p }
    }

    fn other_endpoint(&self, edge: u32, v: u32) -> u32 {
        let (x, y) = self.edges[edge as usize];
        if x == v { y } else { x }
    }

    /// Vertices of the cycle through `start`, in traversal order.
    fn traverse_component(&self, start: u32) -> Vec<u32> {
        let mut verts = vec![start];
        let mut via = self.incident[start as usize][0];
        let mut cur = self.other_endpoint(via, start);
        while cur != start {
            verts.push(cur);
            via = self.other_incident(cur, via);
            cur = self.other_endpoint(via, cur);
        }
        verts
    }

    /// Replace edges e1, e2 by the re-paired edges (same ids: e1 takes the
    /// pair containing e1's first endpoint).
    fn surgery(&mut self, e1: u32, e2: u32, pairs: ((u32, u32), (u32, u32))) {
        let (a, b) = self.edges[e1 as usize];
        let (c, d) = self.edges[e2 as usize];
        for (v, e) in [(a, e1), (b, e1), (c, e2), (d, e2)] {
            let slots = &mut self.incident[v as usize];
            let slot = if slots[0] == e { 0 } else { 1 };
            slots[slot] = NO_EDGE;
        }
        self.edges[e1 as usize] = pairs.0;
        self.edges[e2 as usize] = pairs.1;
        for (v, e) in [
            (pairs.0 .0, e1),
            (pairs.0 .1, e1),
            (pairs.1 .0, e2),
            (pairs.1 .1, e2),
        ] {
            let slots = &mut self.incident[v as usize];
            let slot = if slots[0] == NO_EDGE { 0 } else { 1 };
            debug_assert_eq!(slots[slot], NO_EDGE);
            slots[slot] = e;
        }
    }

    /// Merge bookkeeping: relabel the smaller component (ties keep the
    /// smaller label) before the edge surgery.
    fn merge_registry(&mut self, l1: u32, l2: u32) -> RewireEffect {
        let i1 = self.comps[&l1];
        let i2 = self.comps[&l2];
        let (keep, absorb) =
            if i1.size > i2.size || (i1.size == i2.size && l1 < l2) {
                (l1, l2)
            } else {
                (l2, l1)
            };
        let absorb_info = self.comps.remove(&absorb).expect("live label");
        for v in self.traverse_component(absorb_info.rep) {
            self.comp_id[v as usize] = keep;
        }
        let info = self.comps.get_mut(&keep).expect("live label");
        info.size += absorb_info.size;
        let new_size = info.size;
        RewireEffect::Merge { absorbed: absorb, into: keep, new_size }
    }

    /// Split bookkeeping: `frag` (the arc found by the shorter walk) gets a
    /// fresh label with `frag_start` as representative.
    fn split_registry(&mut self, old: u32, frag: &[u32], frag_start: u32) -> RewireEffect {
        let new_label = self.next_label;
        self.next_label += 1;
        for &v in frag {
            self.comp_id[v as usize] = new_label;
        }
        let k = frag.len() as u32;
        let info = self.comps.get_mut(&old).expect("live label");
        info.size -= k;
        let old_size = info.size;
        if self.comp_id[info.rep as usize] != old {
            // The old representative fell into the new fragment; any vertex
            // still labeled `old` works, and none were relabeled besides the
            // fragment, so pick one adjacent to the surgery site later via
            // the caller-provided survivor.
            info.rep = u32::MAX; // fixed by caller
        }
        self.comps.insert(
            new_label,
            CompInfo { size: k, rep: frag_start },
        );
        RewireEffect::Split { frag_a: (old, old_size), frag_b: (new_label, k) }
    }

    /// One rewiring move: two distinct uniform edges are broken into
    /// half-edges and re-paired by a fair bit between the two cross pairings.
    pub fn rewire_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> RewireOutcome {
        let e1 = rng.random_range(0..self.n as u32);
        let mut e2 = rng.random_range(0..self.n as u32 - 1);
        if e2 >= e1 {
            e2 += 1;
        }
        let (a, b) = self.edges[e1 as usize];
        let (c, d) = self.edges[e2 as usize];
        let cross = rng.random_bool(0.5);
        let pairs = if cross { ((a, d), (b, c)) } else { ((a, c), (b, d)) };
        let endpoints = ((a, b), (c, d));

        let l1 = self.comp_id[a as usize];
        let l2 = self.comp_id[c as usize];
        if l1 != l2 {
            let effect = self.merge_registry(l1, l2);
            self.surgery(e1, e2, pairs);
            return RewireOutcome { effect, endpoints };
        }

        // Same component. Parallel pair of a double edge: one pairing makes
        // two self-loops, the other re-closes the 2-cycle.
        if a != b && (c, d) == (a, b) || (c, d) == (b, a) {
            let splits = if c == a { !cross } else { cross };
            let effect = if splits {
                let eff = self.split_registry(l1, &[b], b);
                if let Some(info) = self.comps.get_mut(&l1) {
                    if info.rep == u32::MAX {
                        info.rep = a;
                    }
                }
                eff
            } else {
                RewireEffect::Preserve
            };
            self.surgery(e1, e2, pairs);
            return RewireOutcome { effect, endpoints };
        }

        // General same-component case: walk from both ends of e1 (with e1
        // removed) toward e2, alternating, to find which endpoint of e2 the
        // b-side arc meets — that decides which pairing fragments — and to
        // collect the smaller arc for relabeling.
        let mut walk_b = (b, e1);
        let mut walk_a = (a, e1);
        let mut arc_b = vec![b];
        let mut arc_a = vec![a];
        let (b_side_hits_d, winner_is_b) = loop {
            let out = self.other_incident(walk_b.0, walk_b.1);
            if out == e2 {
                break (walk_b.0 == d, true);
            }
            walk_b = (self.other_endpoint(out, walk_b.0), out);
            arc_b.push(walk_b.0);

            let out = self.other_incident(walk_a.0, walk_a.1);
            if out == e2 {
                // The b-side arc would meet the other endpoint of e2.
                break (walk_a.0 == c, false);
            }
            walk_a = (self.other_endpoint(out, walk_a.0), out);
            arc_a.push(walk_a.0);
        };
        // The pairing {(a,c),(b,d)} closes arcs b..d and c..a separately.
        let split_pairing_is_cross = !b_side_hits_d;
        let effect = if cross == split_pairing_is_cross {
            let (frag, start, survivor) = if winner_is_b {
                (&arc_b, b, a)
            } else {
                (&arc_a, a, b)
            };
            let eff = self.split_registry(l1, frag, start);
            if let Some(info) = self.comps.get_mut(&l1) {
                if info.rep == u32::MAX {
                    info.rep = survivor;
                }
            }
            eff
        } else {
            RewireEffect::Preserve
        };
        self.surgery(e1, e2, pairs);
        RewireOutcome { effect, endpoints }
    }

    /// Full audit: edge/degree invariants and registry vs a fresh BFS
    /// component decomposition. Intended for n <= 200.
    pub fn check_consistency(&self) -> Result<()> {
        if self.edges.len() != self.n {
            return Err(Error::Domain("edge count drifted from n".into()));
        }
        let mut degree = vec![0u32; self.n];
        for &(x, y) in &self.edges {
            degree[x as usize] += 1;
            degree[y as usize] += 1;
        }
        for (v, &d) in degree.iter().enumerate() {
            if d != 2 {
                return Err(Error::Domain(format!("vertex {v} has degree {d}")));
            }
        }
        for v in 0..self.n as u32 {
            for &e in &self.incident[v as usize] {
                if e == NO_EDGE {
                    return Err(Error::Domain(format!("vertex {v} has an empty slot")));
                }
                let (x, y) = self.edges[e as usize];
                if x != v && y != v {
                    return Err(Error::Domain(format!(
                        "vertex {v} lists edge {e} it is not an endpoint of"
                    )));
                }
            }
            let [p, q] = self.incident[v as usize];
            if p == q && self.edges[p as usize] != (v, v) {
                return Err(Error::Domain(format!(
                    "vertex {v} repeats a non-loop edge in its slots"
                )));
            }
        }
        // BFS decomposition along the cyclic adjacency.
        let mut seen = vec![false; self.n];
        let mut total = 0u32;
        for v in 0..self.n as u32 {
            if seen[v as usize] {
                continue;
            }
            let verts = self.traverse_component(v);
            let label = self.comp_id[v as usize];
            let info = self.comps.get(&label).ok_or_else(|| {
                Error::Domain(format!("label {label} missing from registry"))
            })?;
            if info.size as usize != verts.len() {
                return Err(Error::Domain(format!(
                    "label {label} records size {} but traversal found {}",
                    info.size,
                    verts.len()
                )));
            }
            if self.comp_id[info.rep as usize] != label {
                return Err(Error::Domain(format!(
                    "label {label} representative {} is outside it",
                    info.rep
                )));
            }
            for &w in &verts {
                if seen[w as usize] {
                    return Err(Error::Domain(format!("vertex {w} visited twice")));
                }
                seen[w as usize] = true;
                if self.comp_id[w as usize] != label {
                    return Err(Error::Domain(format!(
                        "vertex {w} labeled {}, expected {label}",
                        self.comp_id[w as usize]
                    )));
                }
            }
            total += verts.len() as u32;
        }
        if total as usize != self.n || self.comps.len() != {
            let mut labels: Vec<u32> = self.comp_id.clone();
            labels.sort_unstable();
            labels.dedup();
            labels.len()
        } {
            return Err(Error::Domain("registry does not partition the vertices".into()));
        }
        Ok(())
    }
}

/// Per-component walk mass, updated through rewire effects.
#[derive(Debug, Clone)]
pub struct Deg2Mass {
    mass: BTreeMap<u32, f64>,
}

impl Deg2Mass {
    pub fn point_mass(graph: &Deg2Graph, v0: usize) -> Result<Self> {
        if v0 >= graph.n() {
            return Err(Error::OutOfRange { element: v0, n: graph.n() });
        }
        let mut mass = BTreeMap::new();
        mass.insert(graph.comp_of(v0), 1.0);
        Ok(Self { mass })
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.mass.iter().map(|(&l, &m)| (l, m))
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    pub fn update_on_effect(&mut self, effect: &RewireEffect) {
        match *effect {
            RewireEffect::Merge { absorbed, into, .. } => {
                if let Some(m) = self.mass.remove(&absorbed) {
                    *self.mass.entry(into).or_insert(0.0) += m;
                }
            }
            RewireEffect::Split { frag_a: (la, sa), frag_b: (lb, sb) } => {
                if let Some(m) = self.mass.remove(&la) {
                    let total = (sa + sb) as f64;
                    self.mass.insert(la, m * sa as f64 / total);
                    self.mass.insert(lb, m * sb as f64 / total);
                }
            }
            RewireEffect::Preserve => {}
        }
    }

    /// Total-variation distance of the component-uniformized law to the
    /// uniform law on all n vertices.
    pub fn tv_to_uniform(&self, graph: &Deg2Graph) -> f64 {
        let n = graph.n() as f64;
        self.mass
            .iter()
            .map(|(l, &m)| {
                let size = graph.comp_info(*l).expect("mass keys are live").size;
                (m - size as f64 / n).max(0.0)
            })
            .sum()
    }

    /// Number of vertices carrying positive mass.
    pub fn support_size(&self, graph: &Deg2Graph) -> usize {
        self.mass
            .iter()
            .filter(|&(_, &m)| m > 0.0)
            .map(|(l, _)| graph.comp_info(*l).expect("mass keys are live").size as usize)
            .sum()
    }
}

/// First endpoint pair with distinct vertices among the four combinations of
/// the two rewired edges; this is the edge fed to the associated graph.
pub fn associated_edge(endpoints: ((u32, u32), (u32, u32))) -> (usize, usize) {
    let ((a, b), (c, d)) = endpoints;
    for (x, y) in [(a, c), (a, d), (b, c), (b, d)] {
        if x != y {
            return (x as usize, y as usize);
        }
    }
    unreachable!("distinct edges always yield a non-loop endpoint pair");
}

/// Drop-down test for the rewiring model: past the time gate, does any
/// positive-mass component sit inside the largest associated-graph
/// component?
pub fn deg2_dropdown_check(
    mass: &Deg2Mass,
    graph: &Deg2Graph,
    forest: &mut ComponentForest,
    eps_n: f64,
) -> bool {
    let n = forest.n() as f64;
    if (forest.edges_added() as f64) <= n * (1.0 + eps_n) / 2.0 {
        return false;
    }
    let largest_root = forest.largest().0;
    mass.iter().any(|(label, _)| {
        let rep = graph.comp_info(label).expect("mass keys are live").rep;
        forest.find(rep as usize) == largest_root
    })
}

#[derive(Debug, Clone, Copy)]
pub struct Deg2Sample {
    pub t: u64,
    pub tv: f64,
    pub cmax_frac: f64,
    pub dropped: bool,
}

/// Run the rewiring dynamics with an instantly-uniformizing walk started at
/// v0, recording distance to uniform, largest-component fraction and the
/// drop-down flag each step (t = 0 included).
pub fn isrw_profile_deg2<R: Rng + ?Sized>(
    n: usize,
    t_max: u64,
    v0: usize,
    rng: &mut R,
) -> Result<Vec<Deg2Sample>> {
    let mut graph = Deg2Graph::init_self_loops(n)?;
    let mut mass = Deg2Mass::point_mass(&graph, v0)?;
    let mut forest = ComponentForest::new(n)?;
    let eps_n = (n as f64).powf(-0.25);
    let mut dropped = false;
    let mut out = Vec::with_capacity(t_max as usize + 1);
    out.push(Deg2Sample {
        t: 0,
        tv: 1.0 - 1.0 / n as f64,
        cmax_frac: 1.0 / n as f64,
        dropped: false,
    });
    for t in 1..=t_max {
        let outcome = graph.rewire_step(rng);
        mass.update_on_effect(&outcome.effect);
        let (x, y) = associated_edge(outcome.endpoints);
        forest.add_edge(x, y)?;
        if !dropped {
            dropped = deg2_dropdown_check(&mass, &graph, &mut forest, eps_n);
        }
        out.push(Deg2Sample {
            t,
            tv: mass.tv_to_uniform(&graph),
            cmax_frac: graph.largest_component().1 as f64 / n as f64,
            dropped,
        });
    }
    Ok(out)
}
