//! Line-oriented text format.
//!
//! ```text
//! family free(2)
//! radius 2
//! degree 4
//! vertices 17
//! root 0
//! 0 1 0 1
//! ...
//! ```
//!
//! Each undirected edge is written once as `u v gen sign` with `u < v`; loops
//! are written once with a non-negative sign. Graphs of a known family put
//! every edge back in the slot of its letter, so writing a parsed graph
//! reproduces the input byte for byte.

use std::fmt::Write as _;

use super::{
    bfs_tree, layer_ends_from, GraphOrigin, GroupFamily, Letter, RootedGraph, SlotLabels,
    SubgroupOracle, NONE,
};
use crate::error::{Error, Result};

pub fn write_graph(g: &RootedGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "family {}", g.family_tag());
    let _ = writeln!(out, "radius {}", g.radius());
    let _ = writeln!(out, "degree {}", g.degree_bound());
    let _ = writeln!(out, "vertices {}", g.vertex_count());
    let _ = writeln!(out, "root {}", g.root());
    for u in 0..g.vertex_count() as u32 {
        for e in g.edges(u) {
            if e.to > u || (e.to == u && e.letter.sign >= 0) {
                let _ = writeln!(out, "{} {} {} {}", u, e.to, e.letter.gen, e.letter.sign);
            }
        }
    }
    out
}

fn parse_origin(tag: &str) -> Option<(GroupFamily, GraphOrigin)> {
    if let Some(inner) = tag.strip_prefix("schreier(").and_then(|t| t.strip_suffix(')')) {
        let (fam, sub) = inner.split_once(',')?;
        let family: GroupFamily = fam.parse().ok()?;
        let oracle: SubgroupOracle = sub.parse().ok()?;
        return Some((family, GraphOrigin::Schreier(family, oracle)));
    }
    let family: GroupFamily = tag.parse().ok()?;
    Some((family, GraphOrigin::Ball(family)))
}

pub fn parse_graph(text: &str) -> Result<RootedGraph> {
    let mut header: [Option<String>; 5] = Default::default();
    let names = ["family", "radius", "degree", "vertices", "root"];
    let mut edges: Vec<(u32, u32, Letter)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        if let Some(pos) = names.iter().position(|n| {
            line.strip_prefix(n)
                .is_some_and(|rest| rest.starts_with(' '))
        }) {
            header[pos] = Some(line[names[pos].len()..].trim().to_string());
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(err(format!("expected `u v gen sign`, got `{line}`")));
        }
        let num = |s: &str| s.parse::<i64>().map_err(|e| err(format!("`{s}`: {e}")));
        let (u, v, gen, sign) = (num(fields[0])?, num(fields[1])?, num(fields[2])?, num(fields[3])?);
        if u < 0 || v < 0 || !(0..=u16::MAX as i64).contains(&gen) || !(-1..=1).contains(&sign) {
            return Err(err(format!("field out of range in `{line}`")));
        }
        edges.push((u as u32, v as u32, Letter::new(gen as u16, sign as i8)));
    }
    let get = |i: usize| {
        header[i].clone().ok_or(Error::Parse {
            line: 0,
            message: format!("missing header `{}`", names[i]),
        })
    };
    let tag = get(0)?;
    let int = |i: usize| -> Result<u32> {
        get(i)?.parse().map_err(|e| Error::Parse {
            line: 0,
            message: format!("header `{}`: {e}", names[i]),
        })
    };
    let (radius, degree, n, root) = (int(1)?, int(2)?, int(3)? as usize, int(4)?);
    match parse_origin(&tag) {
        Some((family, origin)) if root == 0 => from_family_edges(family, origin, &tag, radius, n, &edges),
        _ => {
            let mut lists: Vec<Vec<(u32, Letter)>> = vec![Vec::new(); n];
            for &(u, v, letter) in &edges {
                if u as usize >= n || v as usize >= n {
                    return Err(Error::Parse {
                        line: 0,
                        message: format!("edge ({u}, {v}) out of range"),
                    });
                }
                lists[u as usize].push((v, letter));
                if u != v || letter.sign != 0 {
                    lists[v as usize].push((u, letter.inverse()));
                }
            }
            RootedGraph::from_lists(lists, root, &tag, Some((radius, degree)), None)
        }
    }
}

fn from_family_edges(
    family: GroupFamily,
    origin: GraphOrigin,
    tag: &str,
    radius: u32,
    n: usize,
    edges: &[(u32, u32, Letter)],
) -> Result<RootedGraph> {
    let letters = family.letters();
    let width = letters.len();
    let slot_of = |l: Letter| {
        letters.iter().position(|&x| x == l).ok_or(Error::Parse {
            line: 0,
            message: format!("letter {l} not in {family}"),
        })
    };
    let mut targets = vec![NONE; n * width];
    let mut place = |u: u32, v: u32, l: Letter| -> Result<()> {
        let slot = slot_of(l)?;
        let cell = targets
            .get_mut(u as usize * width + slot)
            .ok_or(Error::Parse {
                line: 0,
                message: format!("vertex {u} out of range"),
            })?;
        if *cell != NONE {
            return Err(Error::Parse {
                line: 0,
                message: format!("slot {slot} of vertex {u} listed twice"),
            });
        }
        *cell = v;
        Ok(())
    };
    for &(u, v, l) in edges {
        place(u, v, l)?;
        if u != v || l.sign != 0 {
            place(v, u, l.inverse())?;
        }
    }
    let (dist, parent, parent_slot) = bfs_tree(n, width, &targets);
    if dist.contains(&u16::MAX) {
        return Err(Error::Parse {
            line: 0,
            message: "graph is not connected from the root".into(),
        });
    }
    let boundary = targets
        .chunks(width)
        .map(|s| s.iter().filter(|&&t| t != NONE).count() < width)
        .collect();
    let max_dist = dist.iter().copied().max().unwrap_or(0) as usize;
    Ok(RootedGraph {
        family_tag: tag.to_string(),
        origin,
        radius,
        degree_bound: family.degree() as u32,
        width,
        targets,
        labels: SlotLabels::Uniform(letters),
        layer_ends: layer_ends_from(&dist, max_dist.max(radius as usize)),
        dist,
        boundary,
        parent,
        parent_slot,
        explicit_keys: None,
    })
}
