//! Layer-by-layer BFS over an implicit state space.
//!
//! Vertices with a unique parent one layer closer to the root ("tree
//! vertices") are created without any lookup table and found again through
//! their parent's slot; only vertices with several parents ("hubs") go through
//! a hash map. Free groups and trees therefore build with no hashing at all.

use std::collections::HashMap;

use super::family::GroupFamily;
use super::subgroup::{CosetId, SubgroupOracle};
use super::word::PackedWord;
use super::{GraphOrigin, RootedGraph, SlotLabels, NONE};
use crate::error::{Error, Result};

pub(crate) trait StateSpace {
    type State: Copy;

    fn width(&self) -> usize;
    fn root(&self) -> Self::State;
    fn step(&self, s: Self::State, letter: usize) -> Self::State;
    fn depth(&self, s: Self::State) -> usize;
    fn inverse(&self, letter: usize) -> usize;
    /// `Some(l)` when `s = parent · l` for the only neighbour of `s` one layer
    /// closer to the root; `None` for the root and for hubs.
    fn unique_parent(&self, s: Self::State) -> Option<usize>;
    fn key(&self, s: Self::State) -> u128;
}

pub(crate) struct WordSpace {
    pub family: GroupFamily,
}

impl StateSpace for WordSpace {
    type State = PackedWord;

    fn width(&self) -> usize {
        self.family.degree()
    }
    fn root(&self) -> PackedWord {
        PackedWord::EMPTY
    }
    fn step(&self, s: PackedWord, letter: usize) -> PackedWord {
        if s.last() == Some(self.family.inverse_index(letter)) {
            s.pop()
        } else {
            s.push(letter)
        }
    }
    fn depth(&self, s: PackedWord) -> usize {
        s.len()
    }
    fn inverse(&self, letter: usize) -> usize {
        self.family.inverse_index(letter)
    }
    fn unique_parent(&self, s: PackedWord) -> Option<usize> {
        s.last()
    }
    fn key(&self, s: PackedWord) -> u128 {
        s.raw()
    }
}

/// `ℤ^dim` exponent vectors packed as 16 signed bytes.
pub(crate) struct LatticeSpace {
    pub dim: usize,
}

impl LatticeSpace {
    fn coord(s: u128, i: usize) -> i8 {
        (s >> (8 * i)) as u8 as i8
    }
    fn with_coord(s: u128, i: usize, v: i8) -> u128 {
        (s & !(0xffu128 << (8 * i))) | (u128::from(v as u8) << (8 * i))
    }
    pub(crate) fn coords(&self, s: u128) -> Vec<i64> {
        (0..self.dim).map(|i| i64::from(Self::coord(s, i))).collect()
    }
}

impl StateSpace for LatticeSpace {
    type State = u128;

    fn width(&self) -> usize {
        2 * self.dim
    }
    fn root(&self) -> u128 {
        0
    }
    fn step(&self, s: u128, letter: usize) -> u128 {
        let i = letter / 2;
        let delta: i8 = if letter.is_multiple_of(2) { 1 } else { -1 };
        Self::with_coord(s, i, Self::coord(s, i) + delta)
    }
    fn depth(&self, s: u128) -> usize {
        (0..self.dim)
            .map(|i| Self::coord(s, i).unsigned_abs() as usize)
            .sum()
    }
    fn inverse(&self, letter: usize) -> usize {
        letter ^ 1
    }
    fn unique_parent(&self, s: u128) -> Option<usize> {
        let nonzero: Vec<usize> = (0..self.dim).filter(|&i| Self::coord(s, i) != 0).collect();
        match nonzero.as_slice() {
            [i] => Some(2 * i + usize::from(Self::coord(s, *i) < 0)),
            _ => None,
        }
    }
    fn key(&self, s: u128) -> u128 {
        s
    }
}

/// Right cosets of a subgroup of a free group.
pub(crate) struct CosetSpace<'a> {
    pub rank: usize,
    pub oracle: &'a SubgroupOracle,
    /// BFS distance of each coset, for finite-index tables.
    pub table_depth: Vec<usize>,
}

impl<'a> CosetSpace<'a> {
    pub fn new(rank: usize, oracle: &'a SubgroupOracle) -> Self {
        let table_depth = match oracle {
            SubgroupOracle::CosetTable(t) => {
                let mut depth = vec![usize::MAX; t.index()];
                depth[0] = 0;
                let mut queue = std::collections::VecDeque::from([0u32]);
                while let Some(c) = queue.pop_front() {
                    for l in 0..2 * rank {
                        let next = t.act(c, l) as usize;
                        if depth[next] == usize::MAX {
                            depth[next] = depth[c as usize] + 1;
                            queue.push_back(next as u32);
                        }
                    }
                }
                depth
            }
            _ => Vec::new(),
        };
        CosetSpace {
            rank,
            oracle,
            table_depth,
        }
    }

    fn cycle_len(&self) -> usize {
        match self.oracle {
            SubgroupOracle::Cyclic(w) => w.len(),
            _ => 0,
        }
    }
}

impl StateSpace for CosetSpace<'_> {
    type State = CosetId;

    fn width(&self) -> usize {
        2 * self.rank
    }
    fn root(&self) -> CosetId {
        self.oracle.coset_of_identity()
    }
    fn step(&self, s: CosetId, letter: usize) -> CosetId {
        self.oracle.coset_step(s, letter)
    }
    fn depth(&self, s: CosetId) -> usize {
        match s {
            CosetId::Word(w) => w.len(),
            CosetId::Whole => 0,
            CosetId::Cycle { pos, tail } => {
                let n = self.cycle_len();
                let p = pos as usize;
                p.min(n - p) + tail.len()
            }
            CosetId::Table(c) => self.table_depth[c as usize],
        }
    }
    fn inverse(&self, letter: usize) -> usize {
        letter ^ 1
    }
    fn unique_parent(&self, s: CosetId) -> Option<usize> {
        match (s, self.oracle) {
            (CosetId::Word(w), _) => w.last(),
            (CosetId::Cycle { pos, tail }, SubgroupOracle::Cyclic(w)) => {
                if let Some(l) = tail.last() {
                    return Some(l);
                }
                let n = w.len();
                let p = pos as usize;
                if p == 0 || 2 * p == n {
                    None
                } else if 2 * p < n {
                    // reached forwards from p - 1
                    Some(w[p - 1])
                } else {
                    // reached backwards from p + 1
                    Some(w[p] ^ 1)
                }
            }
            _ => None,
        }
    }
    fn key(&self, s: CosetId) -> u128 {
        match s {
            CosetId::Word(w) => w.raw(),
            CosetId::Whole => 0,
            CosetId::Cycle { pos, tail } => tail.raw() ^ (u128::from(pos) << 112),
            CosetId::Table(c) => u128::from(c),
        }
    }
}

pub(crate) struct BuildOutput {
    pub targets: Vec<u32>,
    pub dist: Vec<u16>,
    pub layer_ends: Vec<u32>,
    pub parent: Vec<u32>,
    pub parent_slot: Vec<u8>,
}

/// BFS ball of radius `radius` in deterministic (BFS, letter) order.
pub(crate) fn bfs_ball<S: StateSpace>(space: &S, radius: usize) -> BuildOutput {
    let width = space.width();
    let mut targets: Vec<u32> = vec![NONE; width];
    let mut dist: Vec<u16> = vec![0];
    let mut parent: Vec<u32> = vec![0];
    let mut parent_slot: Vec<u8> = vec![0];
    let mut layer_ends: Vec<u32> = Vec::with_capacity(radius + 1);
    let mut hubs: HashMap<u128, u32> = HashMap::new();

    let root = space.root();
    hubs.insert(space.key(root), 0);
    let mut layer: Vec<S::State> = vec![root];
    let mut layer_start: u32 = 0;

    for r in 0..=radius {
        let next_start = layer_start + layer.len() as u32;
        let mut next: Vec<S::State> = Vec::new();
        // pass 1: discover layer r + 1
        if r < radius {
            for (i, &u) in layer.iter().enumerate() {
                let uid = layer_start + i as u32;
                for l in 0..width {
                    let t = space.step(u, l);
                    if space.depth(t) != r + 1 {
                        continue;
                    }
                    let id = match space.unique_parent(t) {
                        Some(pl) => {
                            debug_assert_eq!(pl, l);
                            Some(next_start + next.len() as u32)
                        }
                        None => {
                            let fresh = next_start + next.len() as u32;
                            let entry = *hubs.entry(space.key(t)).or_insert(fresh);
                            (entry == fresh).then_some(fresh)
                        }
                    };
                    if let Some(id) = id {
                        next.push(t);
                        targets.extend(std::iter::repeat_n(NONE, width));
                        dist.push((r + 1) as u16);
                        parent.push(uid);
                        parent_slot.push(l as u8);
                        if space.unique_parent(t).is_some() {
                            targets[uid as usize * width + l] = id;
                            targets[id as usize * width + space.inverse(l)] = uid;
                        }
                    }
                }
            }
        }
        // pass 2: every remaining slot of layer r
        for (i, &u) in layer.iter().enumerate() {
            let uid = (layer_start + i as u32) as usize;
            for l in 0..width {
                if targets[uid * width + l] != NONE {
                    continue;
                }
                let t = space.step(u, l);
                if space.depth(t) <= radius {
                    targets[uid * width + l] = locate(space, &targets, &hubs, t);
                }
            }
        }
        layer_ends.push(next_start);
        layer_start = next_start;
        layer = next;
        if layer.is_empty() {
            // finite graph exhausted before the radius
            for _ in r + 1..=radius {
                layer_ends.push(next_start);
            }
            break;
        }
    }

    BuildOutput {
        targets,
        dist,
        layer_ends,
        parent,
        parent_slot,
    }
}

fn locate<S: StateSpace>(
    space: &S,
    targets: &[u32],
    hubs: &HashMap<u128, u32>,
    s: S::State,
) -> u32 {
    match space.unique_parent(s) {
        None => *hubs
            .get(&space.key(s))
            .expect("hub vertex inside the ball was not created"),
        Some(l) => {
            let p = space.step(s, space.inverse(l));
            let pid = locate(space, targets, hubs, p);
            let id = targets[pid as usize * space.width() + l];
            debug_assert_ne!(id, NONE);
            id
        }
    }
}

pub(crate) fn check_cap(what: &'static str, requested: u128, cap: u128) -> Result<()> {
    if requested > cap {
        Err(Error::ResourceLimit {
            what,
            requested,
            cap,
        })
    } else {
        Ok(())
    }
}

pub(crate) fn assemble(
    out: BuildOutput,
    family_tag: String,
    origin: GraphOrigin,
    labels: SlotLabels,
    radius: usize,
    degree_bound: usize,
) -> RootedGraph {
    let width = labels.width();
    // a vertex is on the boundary when the truncation removed one of its edges
    let boundary = out
        .targets
        .chunks(width.max(1))
        .take(out.dist.len())
        .map(|slots| slots.iter().filter(|&&t| t != NONE).count() < degree_bound)
        .collect();
    RootedGraph {
        family_tag,
        origin,
        radius: radius as u32,
        degree_bound: degree_bound as u32,
        width,
        targets: out.targets,
        labels,
        dist: out.dist,
        boundary,
        layer_ends: out.layer_ends,
        parent: out.parent,
        parent_slot: out.parent_slot,
        explicit_keys: None,
    }
}
