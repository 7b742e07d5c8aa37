//! Topologies, demand matrices and traffic growth.
//!
//! Topology JSON:
//!
//! ```json
//! {
//!   "name": "triangle",
//!   "nodes": ["A", "B", "C"],
//!   "links": [
//!     { "a": "A", "b": "B", "length_km": 120.0 },
//!     { "a": "B", "b": "C", "length_km": 95.5 }
//!   ]
//! }
//! ```
//!
//! Demand CSV: header `src,dst,rate_gbps`, one row per node pair, rates for
//! period zero.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phys::FiberLink;

/// One undirected fibre link between two nodes (indices into `Topology::nodes`).
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub length_km: f64,
}

impl Link {
    pub fn other(&self, node: usize) -> usize {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub name: String,
    pub nodes: Vec<String>,
    pub links: Vec<Link>,
    /// Per node: (neighbor, link index), sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    name: String,
    nodes: Vec<String>,
    links: Vec<LinkFile>,
}

#[derive(Serialize, Deserialize)]
struct LinkFile {
    a: String,
    b: String,
    length_km: f64,
}

impl Topology {
    /// Builds and validates a topology from node names and `(a, b, km)` triples.
    pub fn new(name: &str, nodes: Vec<String>, links: Vec<Link>) -> Result<Self> {
        let loc = |i: usize| format!("{name}: links[{i}]");
        let mut names = HashSet::new();
        for n in &nodes {
            if !names.insert(n.as_str()) {
                return Err(Error::parse(name, format!("duplicate node {n:?}")));
            }
        }
        let mut seen = HashSet::new();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (i, l) in links.iter().enumerate() {
            if l.a >= nodes.len() || l.b >= nodes.len() {
                return Err(Error::parse(loc(i), "endpoint out of range"));
            }
            if l.a == l.b {
                return Err(Error::parse(loc(i), "self loop"));
            }
            if !(l.length_km > 0.0) || !l.length_km.is_finite() {
                return Err(Error::parse(
                    loc(i),
                    format!("link length must be positive, got {}", l.length_km),
                ));
            }
            if !seen.insert((l.a.min(l.b), l.a.max(l.b))) {
                return Err(Error::parse(
                    loc(i),
                    format!("duplicate edge {}-{}", nodes[l.a], nodes[l.b]),
                ));
            }
            adjacency[l.a].push((l.b, i));
            adjacency[l.b].push((l.a, i));
        }
        for adj in &mut adjacency {
            adj.sort();
        }
        let topo = Topology {
            name: name.to_string(),
            nodes,
            links,
            adjacency,
        };
        if !topo.is_connected() {
            return Err(Error::parse(name, "graph is disconnected"));
        }
        Ok(topo)
    }

    pub fn from_json_str(text: &str, location: &str) -> Result<Self> {
        let file: TopologyFile =
            serde_json::from_str(text).map_err(|e| Error::parse(location, e.to_string()))?;
        let index: HashMap<&str, usize> = file
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut links = Vec::with_capacity(file.links.len());
        for (i, l) in file.links.iter().enumerate() {
            let end = |n: &str| {
                index.get(n).copied().ok_or_else(|| {
                    Error::parse(format!("{location}: links[{i}]"), format!("unknown node {n:?}"))
                })
            };
            links.push(Link {
                a: end(&l.a)?,
                b: end(&l.b)?,
                length_km: l.length_km,
            });
        }
        Topology::new(&file.name, file.nodes, links)
            .map_err(|e| match e {
                Error::Parse { location: l, message } => {
                    Error::parse(format!("{location} ({l})"), message)
                }
                other => other,
            })
    }

    pub fn to_json_string(&self) -> String {
        let file = TopologyFile {
            name: self.name.clone(),
            nodes: self.nodes.clone(),
            links: self
                .links
                .iter()
                .map(|l| LinkFile {
                    a: self.nodes[l.a].clone(),
                    b: self.nodes[l.b].clone(),
                    length_km: l.length_km,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("topology serializes")
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    /// `(neighbor, link index)` pairs of `node`, sorted by neighbor.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn link_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, l)| l)
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.links.len() as f64 / self.nodes.len() as f64
    }

    fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &(m, _) in &self.adjacency[n] {
                if !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Dijkstra distances (km) from `src` to every node.
    pub fn distances_from(&self, src: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapItem(0.0, src));
        while let Some(HeapItem(d, n)) = heap.pop() {
            if d > dist[n] {
                continue;
            }
            for &(m, l) in &self.adjacency[n] {
                let nd = d + self.links[l].length_km;
                if nd < dist[m] {
                    dist[m] = nd;
                    heap.push(HeapItem(nd, m));
                }
            }
        }
        dist
    }

    /// Mean shortest-path length over all unordered node pairs, km.
    pub fn average_shortest_path_km(&self) -> f64 {
        let n = self.nodes.len();
        let mut sum = 0.0;
        let mut count = 0usize;
        for s in 0..n {
            let d = self.distances_from(s);
            for &x in &d[s + 1..] {
                sum += x;
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Topology::from_json_str(&text, &path.display().to_string())
}

/// Homogeneous span split of a link: `round(length/target)` spans (halves up, at least one).
pub fn expand_spans(length_km: f64, target_span_km: f64) -> FiberLink {
    expand_spans_with(&FiberLink::default(), length_km, target_span_km)
}

/// As [`expand_spans`] but with the fibre coefficients of `base`.
pub fn expand_spans_with(base: &FiberLink, length_km: f64, target_span_km: f64) -> FiberLink {
    let n = ((length_km / target_span_km) + 0.5).floor().max(1.0) as u32;
    FiberLink {
        span_length_km: length_km / n as f64,
        n_spans: n,
        ..*base
    }
}

/// Aggregated traffic between two nodes, period-zero rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub id: usize,
    pub src: usize,
    pub dst: usize,
    pub rate_gbps: f64,
}

#[derive(Serialize, Deserialize)]
struct DemandRow {
    src: String,
    dst: String,
    rate_gbps: f64,
}

pub fn load_demands(path: impl AsRef<Path>, topology: &Topology) -> Result<Vec<Demand>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_demands(file, topology, &path.display().to_string())
}

pub fn read_demands<R: std::io::Read>(
    reader: R,
    topology: &Topology,
    location: &str,
) -> Result<Vec<Demand>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<DemandRow>().enumerate() {
        let loc = format!("{location}: row {}", i + 2);
        let row = row.map_err(|e| Error::parse(&loc, e.to_string()))?;
        let node = |n: &str| {
            topology
                .node_index(n)
                .ok_or_else(|| Error::parse(&loc, format!("unknown node {n:?}")))
        };
        let (src, dst) = (node(&row.src)?, node(&row.dst)?);
        if src == dst {
            return Err(Error::parse(&loc, "source equals destination"));
        }
        if !(row.rate_gbps > 0.0) || !row.rate_gbps.is_finite() {
            return Err(Error::parse(&loc, format!("rate must be positive, got {}", row.rate_gbps)));
        }
        out.push(Demand {
            id: out.len(),
            src,
            dst,
            rate_gbps: row.rate_gbps,
        });
    }
    Ok(out)
}

pub fn write_demands<W: std::io::Write>(writer: W, demands: &[Demand], topology: &Topology) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for d in demands {
        w.serialize(DemandRow {
            src: topology.nodes[d.src].clone(),
            dst: topology.nodes[d.dst].clone(),
            rate_gbps: d.rate_gbps,
        })?;
    }
    w.flush().map_err(|e| Error::io("<demand writer>", e))?;
    Ok(())
}

/// Planning period length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Yearly,
    Monthly,
}

impl Granularity {
    /// Growth factor applied per period for a given annual rate.
    pub fn period_factor(self, annual_rate: f64) -> f64 {
        match self {
            Granularity::Yearly => 1.0 + annual_rate,
            Granularity::Monthly => (1.0 + annual_rate).powf(1.0 / 12.0),
        }
    }
}

/// Requested rate of every demand in every period: `out[t][d] = rate_d · factor^t`.
pub fn grow_demands(
    demands: &[Demand],
    annual_rate: f64,
    periods: usize,
    granularity: Granularity,
) -> Vec<Vec<f64>> {
    let f = granularity.period_factor(annual_rate);
    (0..periods)
        .map(|t| {
            let g = f.powi(t as i32);
            demands.iter().map(|d| d.rate_gbps * g).collect()
        })
        .collect()
}
