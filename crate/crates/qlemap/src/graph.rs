//! Undirected graphs, their Laplacians, and the random-graph generators used
//! throughout the experiments.
//!
//! Nodes are `0..num_nodes`. Edges are stored normalized as `(min, max)`
//! pairs, so parallel edges collapse and iteration order is deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Undirected simple graph with optional binary node labels and community
/// assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    edges: BTreeSet<(usize, usize)>,
    labels: BTreeMap<usize, u8>,
    communities: BTreeMap<usize, usize>,
}

/// Train/test partition of a graph's labeled nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl Graph {
    /// Builds a graph from an edge list. Edges are normalized to `(min, max)`
    /// and deduplicated; self-loops and out-of-range endpoints are rejected.
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            for node in [u, v] {
                if node >= num_nodes {
                    return Err(Error::NodeOutOfRange { node, num_nodes });
                }
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Graph {
            num_nodes,
            edges: set,
            labels: BTreeMap::new(),
            communities: BTreeMap::new(),
        })
    }

    /// Attaches binary labels to a subset of nodes.
    pub fn with_labels(mut self, labels: impl IntoIterator<Item = (usize, u8)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (node, label) in labels {
            if node >= self.num_nodes {
                return Err(Error::NodeOutOfRange {
                    node,
                    num_nodes: self.num_nodes,
                });
            }
            if label > 1 {
                return Err(Error::NonBinaryLabel {
                    node,
                    label: label as i64,
                });
            }
            map.insert(node, label);
        }
        self.labels = map;
        Ok(self)
    }

    /// Attaches community ids to a subset of nodes.
    pub fn with_communities(
        mut self,
        communities: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (node, c) in communities {
            if node >= self.num_nodes {
                return Err(Error::NodeOutOfRange {
                    node,
                    num_nodes: self.num_nodes,
                });
            }
            map.insert(node, c);
        }
        self.communities = map;
        Ok(self)
    }

    /// Samples a stochastic block model graph with equal-sized communities of
    /// consecutive nodes. Node pairs inside a community are connected with
    /// probability `p_in`, pairs across communities with `p_out`.
    ///
    /// Labels are set to the community id when there are exactly two
    /// communities; community assignments are always recorded.
    pub fn sbm(
        num_nodes: usize,
        n_communities: usize,
        p_in: f64,
        p_out: f64,
        seed: u64,
    ) -> Result<Self> {
        for (name, value) in [("p_in", p_in), ("p_out", p_out)] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        if n_communities == 0 || num_nodes == 0 || num_nodes % n_communities != 0 {
            return Err(Error::InvalidParameter {
                name: "n_communities",
                value: format!("{n_communities} (num_nodes = {num_nodes})"),
                reason: "num_nodes must be a positive multiple of n_communities",
            });
        }
        let block = num_nodes / n_communities;
        let community = |node: usize| node / block;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = BTreeSet::new();
        for u in 0..num_nodes {
            for v in (u + 1)..num_nodes {
                let p = if community(u) == community(v) {
                    p_in
                } else {
                    p_out
                };
                if rng.gen::<f64>() < p {
                    edges.insert((u, v));
                }
            }
        }
        let communities: BTreeMap<usize, usize> =
            (0..num_nodes).map(|v| (v, community(v))).collect();
        let labels = if n_communities == 2 {
            communities.iter().map(|(&v, &c)| (v, c as u8)).collect()
        } else {
            BTreeMap::new()
        };
        Ok(Graph {
            num_nodes,
            edges,
            labels,
            communities,
        })
    }

    /// Samples a random graph whose expected density `2|E| / (|V|(|V|+1))`
    /// matches `density`. Each pair is connected independently with
    /// probability `density * (n+1) / (n-1)`, clamped to `[0, 1]`.
    pub fn random(num_nodes: usize, density: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) || !density.is_finite() {
            return Err(Error::InvalidProbability {
                name: "density",
                value: density,
            });
        }
        if num_nodes < 2 {
            return Err(Error::InvalidParameter {
                name: "num_nodes",
                value: num_nodes.to_string(),
                reason: "need at least two nodes",
            });
        }
        let p = (density * (num_nodes + 1) as f64 / (num_nodes - 1) as f64).clamp(0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = BTreeSet::new();
        for u in 0..num_nodes {
            for v in (u + 1)..num_nodes {
                if rng.gen::<f64>() < p {
                    edges.insert((u, v));
                }
            }
        }
        Ok(Graph {
            num_nodes,
            edges,
            labels: BTreeMap::new(),
            communities: BTreeMap::new(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as normalized `(min, max)` pairs in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(u, v)| u == node || v == node)
            .count()
    }

    pub fn labels(&self) -> &BTreeMap<usize, u8> {
        &self.labels
    }

    pub fn communities(&self) -> &BTreeMap<usize, usize> {
        &self.communities
    }

    /// Labeled nodes in ascending order.
    pub fn labeled_nodes(&self) -> Vec<usize> {
        self.labels.keys().copied().collect()
    }

    /// Dense graph Laplacian `L = D - A`: degrees on the diagonal, `-1` at
    /// every edge, symmetric with zero row sums.
    pub fn laplacian(&self) -> Array2<f64> {
        let n = self.num_nodes;
        let mut l = Array2::zeros((n, n));
        for &(u, v) in &self.edges {
            l[[u, v]] = -1.0;
            l[[v, u]] = -1.0;
            l[[u, u]] += 1.0;
            l[[v, v]] += 1.0;
        }
        l
    }

    /// Appends isolated, unlabeled nodes until the node count is a power of
    /// two. Returns the graph unchanged if it already is one.
    pub fn pad_to_power_of_two(&self) -> Graph {
        let mut g = self.clone();
        g.num_nodes = self.num_nodes.next_power_of_two();
        g
    }

    /// Splits the labeled nodes into train and test sets uniformly at random.
    /// The test set gets `round(test_fraction * labeled)` nodes, clamped so
    /// that both sides stay nonempty.
    pub fn train_test_split(&self, test_fraction: f64, seed: u64) -> Result<DataSplit> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::InvalidParameter {
                name: "test_fraction",
                value: test_fraction.to_string(),
                reason: "must lie strictly between 0 and 1",
            });
        }
        let mut nodes = self.labeled_nodes();
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "labeled nodes",
                value: nodes.len().to_string(),
                reason: "need at least two labeled nodes to split",
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..nodes.len()).rev() {
            let j = rng.gen_range(0..=i);
            nodes.swap(i, j);
        }
        let count = ((test_fraction * nodes.len() as f64).round() as usize)
            .clamp(1, nodes.len() - 1);
        let (test, train) = nodes.split_at(count);
        let mut train = train.to_vec();
        let mut test = test.to_vec();
        train.sort_unstable();
        test.sort_unstable();
        Ok(DataSplit { train, test, seed })
    }

    /// Serializes the graph as an edge list: a `N M` header line followed by
    /// one `u v` line per edge in sorted order.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("{} {}\n", self.num_nodes, self.edges.len());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Parses the edge-list format produced by [`Graph::to_edge_list_string`].
    pub fn from_edge_list_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Malformed {
            what: "edge list",
            line: 1,
            detail: "empty file".into(),
        })?;
        let (n, m) = parse_pair(header, 1, "edge list header")?;
        let mut edges = Vec::with_capacity(m);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (u, v) = parse_pair(line, idx + 1, "edge")?;
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::Malformed {
                what: "edge list",
                line: 1,
                detail: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::new(n, edges)
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(Error::io(path))?;
        file.write_all(self.to_edge_list_string().as_bytes())
            .map_err(Error::io(path))
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::from_edge_list_str(&text)
    }

    /// Writes node labels as a `node,label` CSV.
    pub fn write_labels(&self, path: impl AsRef<Path>) -> Result<()> {
        write_node_csv(path, "node,label", self.labels.iter())
    }

    /// Writes community assignments as a `node,community` CSV.
    pub fn write_communities(&self, path: impl AsRef<Path>) -> Result<()> {
        write_node_csv(path, "node,community", self.communities.iter())
    }
}

fn parse_pair(line: &str, lineno: usize, what: &'static str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let parse = |tok: Option<&str>| -> Result<usize> {
        tok.ok_or(Error::Malformed {
            what,
            line: lineno,
            detail: "expected two integers".into(),
        })?
        .parse()
        .map_err(|e| Error::Malformed {
            what,
            line: lineno,
            detail: format!("{e}"),
        })
    };
    let u = parse(it.next())?;
    let v = parse(it.next())?;
    if it.next().is_some() {
        return Err(Error::Malformed {
            what,
            line: lineno,
            detail: "trailing tokens".into(),
        });
    }
    Ok((u, v))
}

fn write_node_csv<V: std::fmt::Display>(
    path: impl AsRef<Path>,
    header: &str,
    rows: impl Iterator<Item = (impl std::fmt::Display, V)>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(header);
    out.push('\n');
    for (node, value) in rows {
        out.push_str(&format!("{node},{value}\n"));
    }
    std::fs::write(path, out).map_err(Error::io(path))
}

/// Reads a `node,label` CSV into a label map.
pub fn read_labels(path: impl AsRef<Path>) -> Result<BTreeMap<usize, u8>> {
    let map = read_node_csv(path.as_ref(), "label file")?;
    let mut labels = BTreeMap::new();
    for (node, value) in map {
        if value > 1 {
            return Err(Error::NonBinaryLabel {
                node,
                label: value as i64,
            });
        }
        labels.insert(node, value as u8);
    }
    Ok(labels)
}

/// Reads a `node,community` CSV into a community map.
pub fn read_communities(path: impl AsRef<Path>) -> Result<BTreeMap<usize, usize>> {
    read_node_csv(path.as_ref(), "community file")
}

fn read_node_csv(path: &Path, what: &'static str) -> Result<BTreeMap<usize, usize>> {
    let file = std::fs::File::open(path).map_err(Error::io(path))?;
    let mut map = BTreeMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut field = |name: &str| -> Result<usize> {
            parts
                .next()
                .ok_or_else(|| Error::Malformed {
                    what,
                    line: idx + 1,
                    detail: format!("missing {name} column"),
                })?
                .trim()
                .parse()
                .map_err(|e| Error::Malformed {
                    what,
                    line: idx + 1,
                    detail: format!("{name}: {e}"),
                })
        };
        let node = field("node")?;
        let value = field("value")?;
        map.insert(node, value);
    }
    Ok(map)
}
