//! Loopless k-shortest paths (Yen) over link lengths.
//!
//! Paths are totally ordered by (length, node sequence), so equal-length
//! alternatives come out in a fixed order.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use crate::netmodel::Topology;

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub nodes: Vec<usize>,
    /// Link indices, `links[i]` joins `nodes[i]` and `nodes[i + 1]`.
    pub links: Vec<usize>,
    pub length_km: f64,
}

impl Path {
    fn key(&self) -> (OrdF64, Vec<usize>) {
        (OrdF64(self.length_km), self.nodes.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(PartialEq, Eq)]
struct Label {
    dist: OrdF64,
    nodes: Vec<usize>,
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    // reversed: BinaryHeap pops the smallest label
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .cmp(&self.dist)
            .then_with(|| other.nodes.cmp(&self.nodes))
    }
}

/// Smallest (length, node sequence) path avoiding banned nodes and links.
fn restricted_shortest(
    topo: &Topology,
    src: usize,
    dst: usize,
    banned_nodes: &[bool],
    banned_links: &[bool],
) -> Option<Path> {
    let n = topo.n_nodes();
    let mut best: Vec<Option<(OrdF64, Vec<usize>)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    best[src] = Some((OrdF64(0.0), vec![src]));
    heap.push(Label {
        dist: OrdF64(0.0),
        nodes: vec![src],
    });
    let mut done = vec![false; n];
    while let Some(Label { dist, nodes }) = heap.pop() {
        let u = *nodes.last().unwrap();
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == dst {
            let links = nodes
                .windows(2)
                .map(|w| topo.link_between(w[0], w[1]).unwrap())
                .collect();
            return Some(Path {
                nodes,
                links,
                length_km: dist.0,
            });
        }
        for &(v, l) in topo.neighbors(u) {
            if done[v] || banned_nodes[v] || banned_links[l] {
                continue;
            }
            let d = OrdF64(dist.0 + topo.links[l].length_km);
            let mut path = nodes.clone();
            path.push(v);
            let better = match &best[v] {
                None => true,
                Some((bd, bp)) => (d, &path) < (*bd, bp),
            };
            if better {
                best[v] = Some((d, path.clone()));
                heap.push(Label { dist: d, nodes: path });
            }
        }
    }
    None
}

/// Up to `k` loopless paths from `src` to `dst`, shortest first.
pub fn k_shortest_paths(topo: &Topology, src: usize, dst: usize, k: usize) -> Vec<Path> {
    if src == dst || k == 0 {
        return Vec::new();
    }
    let n = topo.n_nodes();
    let no_nodes = vec![false; n];
    let no_links = vec![false; topo.n_links()];
    let Some(first) = restricted_shortest(topo, src, dst, &no_nodes, &no_links) else {
        return Vec::new();
    };
    let mut found = vec![first];
    let mut candidates: BTreeSet<(OrdF64, Vec<usize>)> = BTreeSet::new();
    while found.len() < k {
        let last = found.last().unwrap().clone();
        for i in 0..last.nodes.len() - 1 {
            let spur = last.nodes[i];
            let root = &last.nodes[..=i];
            let mut banned_links = no_links.clone();
            for p in &found {
                if p.nodes.len() > i + 1 && p.nodes[..=i] == *root {
                    banned_links[p.links[i]] = true;
                }
            }
            let mut banned_nodes = no_nodes.clone();
            for &r in &root[..i] {
                banned_nodes[r] = true;
            }
            if let Some(tail) = restricted_shortest(topo, spur, dst, &banned_nodes, &banned_links) {
                let root_len: f64 = last.links[..i].iter().map(|&l| topo.links[l].length_km).sum();
                let mut nodes = root.to_vec();
                nodes.extend_from_slice(&tail.nodes[1..]);
                let cand = (OrdF64(root_len + tail.length_km), nodes);
                if !found.iter().any(|p| p.nodes == cand.1) {
                    candidates.insert(cand);
                }
            }
        }
        let Some((len, nodes)) = candidates.pop_first() else { break };
        let links = nodes
            .windows(2)
            .map(|w| topo.link_between(w[0], w[1]).unwrap())
            .collect();
        found.push(Path {
            nodes,
            links,
            length_km: len.0,
        });
    }
    found.sort_by_key(Path::key);
    found
}
