//! Truncated balls of Cayley graphs, regular trees and Schreier coset graphs.
//!
//! A [`RootedGraph`] stores a fixed number of slots per vertex. For graphs
//! generated from a group family slot `i` always carries letter `i` of the
//! family, so labels cost nothing; arbitrary graphs carry a label per slot.
//! Vertex ids follow BFS order from the root (id 0) with slots visited in
//! order, which makes every ball `{dist ≤ r}` an id prefix.

mod build;
pub mod family;
pub mod io;
pub mod subgroup;
pub mod word;

use std::collections::VecDeque;

pub use family::GroupFamily;
pub use subgroup::{CosetId, CosetTable, SubgroupOracle};
pub use word::{Letter, PackedWord};

use build::{assemble, bfs_ball, check_cap, CosetSpace, LatticeSpace, StateSpace, WordSpace};

use crate::error::{Error, Result};

pub(crate) const NONE: u32 = u32::MAX;

pub(crate) fn check_snapshot_cap(requested: u128, cap: u128) -> Result<()> {
    check_cap("stored probabilities", requested, cap)
}

/// Default cap on generated vertex counts.
pub const DEFAULT_VERTEX_CAP: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SlotLabels {
    /// Slot `i` of every vertex carries `letters[i]`.
    Uniform(Vec<Letter>),
    /// Row-major, `width` labels per vertex.
    PerSlot { width: usize, labels: Vec<Letter> },
}

impl SlotLabels {
    fn width(&self) -> usize {
        match self {
            SlotLabels::Uniform(l) => l.len(),
            SlotLabels::PerSlot { width, .. } => *width,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphOrigin {
    Ball(GroupFamily),
    Schreier(GroupFamily, SubgroupOracle),
    /// Induced subgraph; keys are stored explicitly.
    Restricted,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub to: u32,
    pub letter: Letter,
    pub slot: usize,
}

/// Truncated ball around a root, with labelled symmetric adjacency.
#[derive(Debug, Clone)]
pub struct RootedGraph {
    family_tag: String,
    origin: GraphOrigin,
    radius: u32,
    degree_bound: u32,
    width: usize,
    targets: Vec<u32>,
    labels: SlotLabels,
    dist: Vec<u16>,
    boundary: Vec<bool>,
    layer_ends: Vec<u32>,
    parent: Vec<u32>,
    parent_slot: Vec<u8>,
    explicit_keys: Option<Vec<u128>>,
}

impl PartialEq for RootedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertex_count() == other.vertex_count()
            && self.dist == other.dist
            && (0..self.vertex_count() as u32).all(|v| {
                self.edges(v).map(|e| (e.to, e.letter)).eq(other.edges(v).map(|e| (e.to, e.letter)))
            })
    }
}

/// Ball of radius `radius` around the identity, with the default vertex cap.
pub fn build_ball(family: GroupFamily, radius: usize) -> Result<RootedGraph> {
    build_ball_capped(family, radius, DEFAULT_VERTEX_CAP)
}

pub fn build_ball_capped(family: GroupFamily, radius: usize, cap: u128) -> Result<RootedGraph> {
    family.validate()?;
    check_cap("ball vertices", family.ball_volume(radius), cap)?;
    let out = match family {
        GroupFamily::FreeAbelian { dim } => {
            if radius > 127 {
                return Err(Error::Parameter("lattice radius above 127".into()));
            }
            bfs_ball(&LatticeSpace { dim }, radius)
        }
        _ => {
            if radius > PackedWord::MAX_LEN {
                return Err(Error::Parameter(format!(
                    "word radius above {}",
                    PackedWord::MAX_LEN
                )));
            }
            bfs_ball(&WordSpace { family }, radius)
        }
    };
    Ok(assemble(
        out,
        family.to_string(),
        GraphOrigin::Ball(family),
        SlotLabels::Uniform(family.letters()),
        radius,
        family.degree(),
    ))
}

/// Ball of radius `radius` around the coset `H` in the Schreier graph of right
/// cosets of `subgroup` in the free group `family`.
pub fn build_schreier(
    family: GroupFamily,
    subgroup: &SubgroupOracle,
    radius: usize,
) -> Result<RootedGraph> {
    build_schreier_capped(family, subgroup, radius, DEFAULT_VERTEX_CAP)
}

pub fn build_schreier_capped(
    family: GroupFamily,
    subgroup: &SubgroupOracle,
    radius: usize,
    cap: u128,
) -> Result<RootedGraph> {
    subgroup.validate(&family)?;
    let GroupFamily::Free { rank } = family else {
        unreachable!("validated above")
    };
    let predicted = schreier_volume(rank, subgroup, radius);
    check_cap("schreier vertices", predicted, cap)?;
    if radius > PackedWord::MAX_LEN - 2 {
        return Err(Error::Parameter("schreier radius above 28".into()));
    }
    let out = match subgroup {
        SubgroupOracle::Trivial => bfs_ball(&WordSpace { family }, radius),
        _ => bfs_ball(&CosetSpace::new(rank, subgroup), radius),
    };
    Ok(assemble(
        out,
        format!("schreier({family},{subgroup})"),
        GraphOrigin::Schreier(family, subgroup.clone()),
        SlotLabels::Uniform(family.letters()),
        radius,
        family.degree(),
    ))
}

fn schreier_volume(rank: usize, subgroup: &SubgroupOracle, radius: usize) -> u128 {
    let family = GroupFamily::Free { rank };
    match subgroup {
        SubgroupOracle::Trivial => family.ball_volume(radius),
        SubgroupOracle::Whole => 1,
        SubgroupOracle::CosetTable(t) => t.index() as u128,
        SubgroupOracle::Cyclic(w) => {
            // cycle of length |w| with 2k - 2 hanging (2k-1)-ary trees per cycle vertex
            let n = w.len();
            let branch = (2 * rank - 1) as u128;
            (0..n)
                .map(|c| c.min(n - c))
                .filter(|&d| d <= radius)
                .map(|d| {
                    let mut total: u128 = 1;
                    let mut sphere: u128 = (2 * rank - 2) as u128;
                    for _ in d..radius {
                        total = total.saturating_add(sphere);
                        sphere = sphere.saturating_mul(branch);
                    }
                    total
                })
                .sum()
        }
    }
}

impl RootedGraph {
    /// Finite graph from an undirected edge list. Each entry lists one
    /// orientation; the reverse orientation gets the inverse letter. Vertices
    /// are relabelled in BFS order from `root`.
    pub fn from_edges(
        vertex_count: usize,
        root: u32,
        edges: &[(u32, u32, Letter)],
        family_tag: &str,
    ) -> Result<RootedGraph> {
        let mut lists: Vec<Vec<(u32, Letter)>> = vec![Vec::new(); vertex_count];
        for &(u, v, letter) in edges {
            if u as usize >= vertex_count || v as usize >= vertex_count {
                return Err(Error::Parameter(format!("edge ({u}, {v}) out of range")));
            }
            lists[u as usize].push((v, letter));
            if u != v || letter.sign != 0 {
                lists[v as usize].push((u, letter.inverse()));
            }
        }
        Self::from_lists(lists, root, family_tag, None, None)
    }

    fn from_lists(
        lists: Vec<Vec<(u32, Letter)>>,
        root: u32,
        family_tag: &str,
        declared: Option<(u32, u32)>,
        boundary_of: Option<&dyn Fn(usize, usize) -> bool>,
    ) -> Result<RootedGraph> {
        let n = lists.len();
        if root as usize >= n {
            return Err(Error::Parameter("root out of range".into()));
        }
        let order = bfs_relabelling(&lists, root)?;
        let mut new_id = vec![NONE; n];
        for (new, &old) in order.iter().enumerate() {
            new_id[old as usize] = new as u32;
        }
        // canonical slot order: by neighbour id, then by the letter the edge is
        // written with in the text format
        let lists: Vec<Vec<(u32, Letter)>> = order
            .iter()
            .enumerate()
            .map(|(new, &old)| {
                let mut l: Vec<(u32, Letter)> = lists[old as usize]
                    .iter()
                    .map(|&(v, letter)| (new_id[v as usize], letter))
                    .collect();
                l.sort_by_key(|&(t, letter)| {
                    let written = if (t as usize) < new || (t as usize == new && letter.sign < 0) {
                        letter.inverse()
                    } else {
                        letter
                    };
                    (t, written.gen, written.sign, letter.sign < 0)
                });
                l
            })
            .collect();
        let width = lists.iter().map(Vec::len).max().unwrap_or(0);
        let mut targets = vec![NONE; n * width];
        let mut labels = vec![Letter::UNLABELED; n * width];
        for (u, list) in lists.iter().enumerate() {
            for (i, &(v, letter)) in list.iter().enumerate() {
                targets[u * width + i] = v;
                labels[u * width + i] = letter;
            }
        }
        let labels = SlotLabels::PerSlot { width, labels };
        let (dist, parent, parent_slot) = bfs_tree(n, width, &targets);
        let max_dist = dist.iter().copied().max().unwrap_or(0) as u32;
        let (radius, degree_bound) = declared.unwrap_or((max_dist, width as u32));
        let boundary = (0..n)
            .map(|v| {
                let degree = (0..width).filter(|&i| targets[v * width + i] != NONE).count();
                boundary_of.is_some_and(|f| f(v, degree))
            })
            .collect();
        let layer_ends = layer_ends_from(&dist, radius.max(max_dist) as usize);
        Ok(RootedGraph {
            family_tag: family_tag.to_string(),
            origin: GraphOrigin::Custom,
            radius,
            degree_bound,
            width,
            targets,
            labels,
            dist,
            boundary,
            layer_ends,
            parent,
            parent_slot,
            explicit_keys: None,
        })
    }

    pub fn family_tag(&self) -> &str {
        &self.family_tag
    }

    pub fn origin(&self) -> &GraphOrigin {
        &self.origin
    }

    pub fn vertex_count(&self) -> usize {
        self.dist.len()
    }

    pub fn root(&self) -> u32 {
        0
    }

    pub fn radius(&self) -> usize {
        self.radius as usize
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound as usize
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dist(&self, v: u32) -> usize {
        self.dist[v as usize] as usize
    }

    pub fn is_boundary(&self, v: u32) -> bool {
        self.boundary[v as usize]
    }

    /// One past the last vertex id at distance `≤ r` from the root.
    pub fn layer_end(&self, r: usize) -> usize {
        match self.layer_ends.get(r) {
            Some(&e) => e as usize,
            None => self.vertex_count(),
        }
    }

    #[inline]
    pub fn slot(&self, v: u32, slot: usize) -> Option<u32> {
        let t = self.targets[v as usize * self.width + slot];
        (t != NONE).then_some(t)
    }

    #[inline]
    pub fn slot_letter(&self, v: u32, slot: usize) -> Letter {
        match &self.labels {
            SlotLabels::Uniform(letters) => letters[slot],
            SlotLabels::PerSlot { width, labels } => labels[v as usize * width + slot],
        }
    }

    /// Uniform letter table when every vertex uses the same slot labels.
    pub fn uniform_letters(&self) -> Option<&[Letter]> {
        match &self.labels {
            SlotLabels::Uniform(l) => Some(l),
            SlotLabels::PerSlot { .. } => None,
        }
    }

    #[inline]
    pub fn raw_slots(&self, v: u32) -> &[u32] {
        let s = v as usize * self.width;
        &self.targets[s..s + self.width]
    }

    pub fn edges(&self, v: u32) -> impl Iterator<Item = Edge> + '_ {
        (0..self.width).filter_map(move |slot| {
            self.slot(v, slot).map(|to| Edge {
                to,
                letter: self.slot_letter(v, slot),
                slot,
            })
        })
    }

    pub fn degree(&self, v: u32) -> usize {
        self.raw_slots(v).iter().filter(|&&t| t != NONE).count()
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary.iter().any(|&b| b)
    }

    /// Distance from each vertex to the nearest boundary vertex (`usize::MAX`
    /// when the graph has no boundary).
    pub fn boundary_distances(&self) -> Vec<usize> {
        let n = self.vertex_count();
        let mut d = vec![usize::MAX; n];
        let mut queue: VecDeque<u32> = VecDeque::new();
        for v in 0..n {
            if self.boundary[v] {
                d[v] = 0;
                queue.push_back(v as u32);
            }
        }
        while let Some(u) = queue.pop_front() {
            for e in self.edges(u) {
                if d[e.to as usize] == usize::MAX {
                    d[e.to as usize] = d[u as usize] + 1;
                    queue.push_back(e.to);
                }
            }
        }
        d
    }

    /// Number of steps a walk from `v` can take without ever trying to leave
    /// the ball.
    pub fn safe_horizon(&self, v: u32) -> usize {
        if self.boundary.iter().all(|&b| !b) {
            return usize::MAX;
        }
        // for balls the nearest boundary vertex lies radially outward
        if matches!(self.origin, GraphOrigin::Ball(_) | GraphOrigin::Schreier(..))
            && v == self.root()
        {
            return self.radius();
        }
        self.boundary_distances()[v as usize]
    }

    /// Letters of the BFS-tree path from the root to `v`; for free groups,
    /// trees and Schreier graphs this is the canonical (reduced) word.
    pub fn word(&self, v: u32) -> Vec<usize> {
        let mut letters = Vec::with_capacity(self.dist(v));
        let mut u = v;
        while u != 0 {
            letters.push(self.parent_slot[u as usize] as usize);
            u = self.parent[u as usize];
        }
        letters.reverse();
        letters
    }

    /// Canonical key per vertex (reduced word, exponent vector, coset id, or
    /// the vertex id for custom graphs), independent of the radius.
    pub fn vertex_keys(&self) -> Vec<u128> {
        if let Some(k) = &self.explicit_keys {
            return k.clone();
        }
        match &self.origin {
            GraphOrigin::Ball(family @ GroupFamily::FreeAbelian { dim }) => {
                let _ = family;
                self.keys_via(&LatticeSpace { dim: *dim })
            }
            GraphOrigin::Ball(family) => self.keys_via(&WordSpace { family: *family }),
            GraphOrigin::Schreier(family, SubgroupOracle::Trivial) => {
                self.keys_via(&WordSpace { family: *family })
            }
            GraphOrigin::Schreier(GroupFamily::Free { rank }, oracle) => {
                self.keys_via(&CosetSpace::new(*rank, oracle))
            }
            _ => (0..self.vertex_count() as u128).collect(),
        }
    }

    fn keys_via<S: StateSpace>(&self, space: &S) -> Vec<u128> {
        let n = self.vertex_count();
        let mut states = Vec::with_capacity(n);
        states.push(space.root());
        for v in 1..n {
            let p = states[self.parent[v] as usize];
            states.push(space.step(p, self.parent_slot[v] as usize));
        }
        states.into_iter().map(|s| space.key(s)).collect()
    }

    /// Membership of each vertex of a free-group ball in the subgroup `h`,
    /// tracked along the BFS tree with the coset automaton.
    pub fn membership_mask(&self, h: &SubgroupOracle) -> Result<Vec<bool>> {
        let GraphOrigin::Ball(family @ GroupFamily::Free { rank }) = self.origin else {
            return Err(Error::Parameter(
                "subgroup membership needs a free-group Cayley ball".into(),
            ));
        };
        h.validate(&family)?;
        let space = CosetSpace::new(rank, h);
        let home = space.root();
        let n = self.vertex_count();
        let mut states = Vec::with_capacity(n);
        states.push(home);
        for v in 1..n {
            let p = states[self.parent[v] as usize];
            states.push(space.step(p, self.parent_slot[v] as usize));
        }
        Ok(states.into_iter().map(|s| s == home).collect())
    }

    /// Lattice coordinates of each vertex of a free-abelian ball.
    pub fn lattice_coords(&self, v: u32) -> Option<Vec<i64>> {
        match self.origin {
            GraphOrigin::Ball(GroupFamily::FreeAbelian { dim }) => {
                let space = LatticeSpace { dim };
                let mut s = space.root();
                for l in self.word(v) {
                    s = space.step(s, l);
                }
                Some(space.coords(s))
            }
            _ => None,
        }
    }

    /// Follows `letters` from `start` along slots; `None` if a slot is empty.
    pub fn follow(&self, start: u32, letters: &[usize]) -> Option<u32> {
        letters.iter().try_fold(start, |v, &l| self.slot(v, l))
    }

    /// Induced subgraph on the kept vertices that stay connected to the
    /// root, re-rooted and relabelled in BFS order. Vertices losing an edge
    /// become boundary vertices.
    pub fn cluster_restricted_subgraph(&self, keep: impl Fn(u32) -> bool) -> Result<RootedGraph> {
        if !keep(self.root()) {
            return Err(Error::EmptyResult);
        }
        let n = self.vertex_count();
        let mut new_id = vec![NONE; n];
        let mut order: Vec<u32> = vec![0];
        new_id[0] = 0;
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for e in self.edges(u) {
                if new_id[e.to as usize] == NONE && keep(e.to) {
                    new_id[e.to as usize] = order.len() as u32;
                    order.push(e.to);
                }
            }
        }
        let m = order.len();
        let w = self.width;
        let mut targets = vec![NONE; m * w];
        let mut boundary = vec![false; m];
        for (new, &old) in order.iter().enumerate() {
            for (slot, &t) in self.raw_slots(old).iter().enumerate() {
                if t == NONE {
                    continue;
                }
                let mapped = new_id[t as usize];
                if mapped == NONE {
                    boundary[new] = true;
                } else {
                    targets[new * w + slot] = mapped;
                }
            }
            boundary[new] |= self.boundary[old as usize];
        }
        let labels = match &self.labels {
            SlotLabels::Uniform(l) => SlotLabels::Uniform(l.clone()),
            SlotLabels::PerSlot { width, labels } => SlotLabels::PerSlot {
                width: *width,
                labels: order
                    .iter()
                    .flat_map(|&old| labels[old as usize * width..(old as usize + 1) * width].iter().copied())
                    .collect(),
            },
        };
        let keys = self.vertex_keys();
        let explicit_keys = Some(order.iter().map(|&old| keys[old as usize]).collect());
        let (dist, parent, parent_slot) = bfs_tree(m, w, &targets);
        let max_dist = dist.iter().copied().max().unwrap_or(0) as usize;
        Ok(RootedGraph {
            family_tag: self.family_tag.clone(),
            origin: GraphOrigin::Restricted,
            radius: self.radius,
            degree_bound: self.degree_bound,
            width: w,
            targets,
            labels,
            layer_ends: layer_ends_from(&dist, max_dist.max(self.radius())),
            dist,
            boundary,
            parent,
            parent_slot,
            explicit_keys,
        })
    }

    /// Checks edge symmetry, the BFS distance recurrence and the degree bound.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.vertex_count() as u32;
        if self.dist[0] != 0 {
            return Err("root distance is not 0".into());
        }
        for u in 0..n {
            if self.degree(u) > self.degree_bound() {
                return Err(format!("vertex {u} exceeds the degree bound"));
            }
            for e in self.edges(u) {
                // the reverse edge must appear at least as often
                let forward = self
                    .edges(u)
                    .filter(|f| f.to == e.to && f.letter == e.letter)
                    .count();
                let backward = self
                    .edges(e.to)
                    .filter(|f| f.to == u && f.letter == e.letter.inverse())
                    .count();
                if forward != backward {
                    return Err(format!("edge {u} -> {} ({}) is not symmetric", e.to, e.letter));
                }
                let (du, dv) = (self.dist(u) as i64, self.dist(e.to) as i64);
                if (du - dv).abs() > 1 {
                    return Err(format!("edge {u} -> {} breaks the distance recurrence", e.to));
                }
            }
            if u != 0 && !self.edges(u).any(|e| self.dist(e.to) + 1 == self.dist(u)) {
                return Err(format!("vertex {u} has no neighbour one layer closer"));
            }
            if u > 0 && self.dist(u) < self.dist(u - 1) {
                return Err("vertex ids are not in BFS order".into());
            }
        }
        if matches!(self.origin, GraphOrigin::Ball(_) | GraphOrigin::Schreier(..)) {
            for u in 0..n {
                if self.dist(u) < self.radius() && self.degree(u) != self.degree_bound() {
                    return Err(format!("interior vertex {u} does not have full degree"));
                }
            }
        }
        Ok(())
    }
}

/// BFS order from `root`; the identity when ids already have nondecreasing
/// distance from a root at id 0.
fn bfs_relabelling(lists: &[Vec<(u32, Letter)>], root: u32) -> Result<Vec<u32>> {
    let n = lists.len();
    let mut seen = vec![false; n];
    let mut order = vec![root];
    seen[root as usize] = true;
    let mut head = 0;
    while head < order.len() {
        let u = order[head] as usize;
        head += 1;
        for &(v, _) in &lists[u] {
            if !seen[v as usize] {
                seen[v as usize] = true;
                order.push(v);
            }
        }
    }
    if order.len() != n {
        return Err(Error::Parameter(format!(
            "graph is not connected from the root ({} of {n} reachable)",
            order.len()
        )));
    }
    if root == 0 {
        let mut dist = vec![0usize; n];
        for &u in &order {
            for &(v, _) in &lists[u as usize] {
                if v != root && dist[v as usize] == 0 {
                    dist[v as usize] = dist[u as usize] + 1;
                }
            }
        }
        if dist.windows(2).all(|w| w[0] <= w[1]) {
            return Ok((0..n as u32).collect());
        }
    }
    Ok(order)
}

fn bfs_tree(n: usize, width: usize, targets: &[u32]) -> (Vec<u16>, Vec<u32>, Vec<u8>) {
    let mut dist = vec![u16::MAX; n];
    let mut parent = vec![0u32; n];
    let mut parent_slot = vec![0u8; n];
    if n == 0 {
        return (dist, parent, parent_slot);
    }
    dist[0] = 0;
    let mut queue = VecDeque::from([0u32]);
    while let Some(u) = queue.pop_front() {
        for slot in 0..width {
            let t = targets[u as usize * width + slot];
            if t != NONE && dist[t as usize] == u16::MAX {
                dist[t as usize] = dist[u as usize] + 1;
                parent[t as usize] = u;
                parent_slot[t as usize] = slot as u8;
                queue.push_back(t);
            }
        }
    }
    (dist, parent, parent_slot)
}

fn layer_ends_from(dist: &[u16], radius: usize) -> Vec<u32> {
    (0..=radius)
        .map(|r| dist.partition_point(|&d| (d as usize) <= r) as u32)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::subgroup::parse_word;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ball_examples() {
        let t3 = build_ball(GroupFamily::RegularTree { degree: 3 }, 2).unwrap();
        assert_eq!(t3.vertex_count(), 10);
        let f2 = build_ball(GroupFamily::Free { rank: 2 }, 1).unwrap();
        assert_eq!(f2.vertex_count(), 5);
        let z2 = build_ball(GroupFamily::FreeAbelian { dim: 2 }, 1).unwrap();
        assert_eq!(z2.vertex_count(), 5);
        assert_eq!(t3.root(), 0);
        // BFS, generator order: identity, then a, A, b, B
        assert_eq!(f2.word(1), vec![0]);
        assert_eq!(f2.word(4), vec![3]);
    }

    #[test]
    fn volumes_match_closed_forms() {
        let families = [
            GroupFamily::Free { rank: 1 },
            GroupFamily::Free { rank: 2 },
            GroupFamily::FreeAbelian { dim: 2 },
            GroupFamily::FreeAbelian { dim: 3 },
            GroupFamily::RegularTree { degree: 3 },
            GroupFamily::RegularTree { degree: 4 },
        ];
        for family in families {
            for r in 0..=6 {
                let g = build_ball(family, r).unwrap();
                assert_eq!(g.vertex_count() as u128, family.ball_volume(r), "{family} R={r}");
                g.check_invariants().unwrap();
                for s in 0..=r {
                    let expected = family.ball_volume(s) as usize;
                    assert_eq!(g.layer_end(s), expected);
                }
            }
        }
    }

    #[test]
    fn resource_cap() {
        let err = build_ball_capped(GroupFamily::Free { rank: 2 }, 20, 1_000_000).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
    }

    #[test]
    fn schreier_whole_group_is_single_vertex_with_loops() {
        let g = build_schreier(GroupFamily::Free { rank: 2 }, &SubgroupOracle::Whole, 3).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.degree(0), 4);
        assert!(g.edges(0).all(|e| e.to == 0));
        g.check_invariants().unwrap();
    }

    #[test]
    fn schreier_trivial_equals_ball() {
        for r in 0..=5 {
            let f = GroupFamily::Free { rank: 2 };
            let a = build_schreier(f, &SubgroupOracle::Trivial, r).unwrap();
            let b = build_ball(f, r).unwrap();
            assert!(a == b, "R={r}");
        }
    }

    /// Brute-force oracle: right cosets of H among reduced words of length ≤ R,
    /// identified pairwise by the membership test u v⁻¹ ∈ H.
    fn brute_force_coset_count(h: &SubgroupOracle, radius: usize) -> usize {
        let mut words: Vec<Vec<usize>> = vec![vec![]];
        let mut frontier: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..radius {
            let mut next = Vec::new();
            for w in &frontier {
                for l in 0..4 {
                    if w.last() == Some(&(l ^ 1)) {
                        continue;
                    }
                    let mut x = w.clone();
                    x.push(l);
                    next.push(x);
                }
            }
            words.extend(next.iter().cloned());
            frontier = next;
        }
        let mut reps: Vec<Vec<usize>> = Vec::new();
        for w in &words {
            let known = reps.iter().any(|r| {
                let mut x = w.clone();
                x.extend(subgroup::invert(r));
                h.contains(&x)
            });
            if !known {
                reps.push(w.clone());
            }
        }
        reps.len()
    }

    #[test]
    fn schreier_cyclic_a() {
        let f = GroupFamily::Free { rank: 2 };
        let h = SubgroupOracle::Cyclic(parse_word("a").unwrap());
        let g = build_schreier(f, &h, 2).unwrap();
        // root: a-loop (both orientations) and two b-edges
        let root_edges: Vec<Edge> = g.edges(0).collect();
        assert_eq!(root_edges[0].to, 0);
        assert_eq!(root_edges[1].to, 0);
        assert_ne!(root_edges[2].to, 0);
        assert_ne!(root_edges[3].to, 0);
        assert_ne!(root_edges[2].to, root_edges[3].to);
        // every coset H u with |u| ≤ 2 lies within distance 2 of the root coset
        assert_eq!(g.vertex_count(), brute_force_coset_count(&h, 2));
        assert_eq!(g.vertex_count(), 9);
        g.check_invariants().unwrap();
    }

    #[test]
    fn schreier_volumes_match_brute_force() {
        let f = GroupFamily::Free { rank: 2 };
        for w in ["a", "ab", "aab", "abAB"] {
            let h = SubgroupOracle::Cyclic(parse_word(w).unwrap());
            for r in 0..=4 {
                let g = build_schreier(f, &h, r).unwrap();
                g.check_invariants().unwrap();
                assert_eq!(g.vertex_count() as u128, schreier_volume(2, &h, r), "{w} R={r}");
                assert_eq!(g.vertex_count(), brute_force_coset_count(&h, r), "{w} R={r}");
            }
        }
        let table: SubgroupOracle = "table(1 2 0;1 0 2)".parse().unwrap();
        let g = build_schreier(f, &table, 5).unwrap();
        assert_eq!(g.vertex_count(), 3);
        g.check_invariants().unwrap();
    }

    #[test]
    fn schreier_keys_are_coset_ids() {
        let f = GroupFamily::Free { rank: 2 };
        let h = SubgroupOracle::Cyclic(parse_word("ab").unwrap());
        let g = build_schreier(f, &h, 4).unwrap();
        for v in 0..g.vertex_count() as u32 {
            let word = g.word(v);
            assert_eq!(word.len(), g.dist(v));
            // walking the word from the root reaches v
            assert_eq!(g.follow(0, &word), Some(v));
        }
        let keys = g.vertex_keys();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), keys.len());
    }

    #[test]
    fn restricted_subgraph_examples() {
        let g = build_ball(GroupFamily::RegularTree { degree: 3 }, 3).unwrap();
        let all = g.cluster_restricted_subgraph(|_| true).unwrap();
        assert!(all == g);
        let single = g.cluster_restricted_subgraph(|v| v == 0).unwrap();
        assert_eq!(single.vertex_count(), 1);
        assert_eq!(single.degree(0), 0);
        assert!(matches!(
            g.cluster_restricted_subgraph(|v| v != 0),
            Err(Error::EmptyResult)
        ));
        // keys survive restriction
        let sub = g.cluster_restricted_subgraph(|v| g.word(v).first() != Some(&1)).unwrap();
        let full_keys = g.vertex_keys();
        let sub_keys = sub.vertex_keys();
        for k in &sub_keys {
            assert!(full_keys.contains(k));
        }
        sub.check_invariants().unwrap();
    }

    #[test]
    fn lattice_coordinates() {
        let g = build_ball(GroupFamily::FreeAbelian { dim: 2 }, 2).unwrap();
        for v in 0..g.vertex_count() as u32 {
            let c = g.lattice_coords(v).unwrap();
            assert_eq!(c.iter().map(|x| x.unsigned_abs() as usize).sum::<usize>(), g.dist(v));
        }
    }

    fn family_strategy() -> impl Strategy<Value = (GroupFamily, usize)> {
        prop_oneof![
            (1usize..4, 0usize..5).prop_map(|(k, r)| (GroupFamily::Free { rank: k }, r)),
            (1usize..4, 0usize..5).prop_map(|(d, r)| (GroupFamily::FreeAbelian { dim: d }, r)),
            (2usize..6, 0usize..5).prop_map(|(d, r)| (GroupFamily::RegularTree { degree: d }, r)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn generated_graphs_are_symmetric_and_bounded((family, r) in family_strategy()) {
            let g = build_ball(family, r).unwrap();
            prop_assert!(g.check_invariants().is_ok(), "{:?}", g.check_invariants());
        }

        #[test]
        fn random_cyclic_schreier_is_symmetric(w in proptest::collection::vec(0usize..4, 1..5), r in 0usize..5) {
            let h = SubgroupOracle::Cyclic(w);
            let f = GroupFamily::Free { rank: 2 };
            if h.validate(&f).is_ok() {
                let g = build_schreier(f, &h, r).unwrap();
                prop_assert!(g.check_invariants().is_ok(), "{:?}", g.check_invariants());
            }
        }
    }
}
