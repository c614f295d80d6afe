//! Fixed undirected communication topologies.
//!
//! A [`Graph`] is immutable once built and is always connected: every
//! constructor runs a connectivity check and rejects disconnected input.
//! Adjacency is held twice, as compressed neighbor lists for the simulation
//! hot loop and as a dense 0/1 matrix for the Laplacian.

use std::collections::VecDeque;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Sorted, each pair stored once with `u < v`.
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    degrees: Vec<usize>,
    /// Row-major `n * n`.
    adjacency: Vec<u8>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges)
            .finish()
    }
}

impl Graph {
    /// Star with hub `0` and leaves `1..n`.
    pub fn star(n: usize) -> Result<Self> {
        check_size(n, 2)?;
        Self::build(n, (1..n).map(|i| (0, i)).collect())
    }

    pub fn complete(n: usize) -> Result<Self> {
        check_size(n, 2)?;
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self::build(n, edges)
    }

    /// Circulant `k`-regular graph: node `i` is joined to `i ± 1, ..., i ± k/2 (mod n)`.
    pub fn circulant_regular(n: usize, k: usize) -> Result<Self> {
        check_size(n, 3)?;
        if k == 0 || !k.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "circulant degree k must be a positive even integer, got {k}"
            )));
        }
        if k >= n {
            return Err(Error::InvalidParameter(format!(
                "circulant degree k = {k} must be smaller than n = {n}"
            )));
        }
        let mut edges = Vec::with_capacity(n * k / 2);
        for i in 0..n {
            for offset in 1..=k / 2 {
                let j = (i + offset) % n;
                edges.push((i.min(j), i.max(j)));
            }
        }
        Self::build(n, edges)
    }

    /// Line `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        check_size(n, 2)?;
        Self::build(n, (1..n).map(|i| (i - 1, i)).collect())
    }

    /// Builds a graph from an explicit edge list. Rejects out-of-range
    /// endpoints, self-loops, duplicate edges (in either orientation) and
    /// disconnected results.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        check_size(n, 2)?;
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidEdge {
                    u,
                    v,
                    reason: format!("endpoint out of range for n = {n}"),
                });
            }
            if u == v {
                return Err(Error::InvalidEdge {
                    u,
                    v,
                    reason: "self-loop".into(),
                });
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidEdge {
                u: w[0].0,
                v: w[0].1,
                reason: "duplicate edge".into(),
            });
        }
        Self::build(n, normalized)
    }

    /// Parses the edge-list text format: a header line `n m` followed by
    /// `m` lines `u v` with 0-based endpoints. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(no, l)| (no + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (no, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("edge list is empty".into()))?;
        let (n, m) = parse_pair(header, no)?;
        let mut edges = Vec::with_capacity(m);
        for (no, line) in lines {
            edges.push(parse_pair(line, no)?);
        }
        if edges.len() != m {
            return Err(Error::Parse(format!(
                "header declares {m} edges but {} were listed",
                edges.len()
            )));
        }
        Self::from_edge_list(n, &edges)
    }

    pub fn read_edge_list(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_edge_list(&text)
    }

    /// Renders the graph in the format read by [`Graph::parse_edge_list`].
    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    fn build(n: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();

        let mut degrees = vec![0usize; n];
        let mut adjacency = vec![0u8; n * n];
        for &(u, v) in &edges {
            degrees[u] += 1;
            degrees[v] += 1;
            adjacency[u * n + v] = 1;
            adjacency[v * n + u] = 1;
        }

        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degrees {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0u32; offsets[n]];
        for &(u, v) in &edges {
            targets[fill[u]] = v as u32;
            fill[u] += 1;
            targets[fill[v]] = u as u32;
            fill[v] += 1;
        }
        for i in 0..n {
            targets[offsets[i]..offsets[i + 1]].sort_unstable();
        }

        let graph = Graph {
            n,
            edges,
            offsets,
            targets,
            degrees,
            adjacency,
        };
        let components = graph.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(graph)
    }

    fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::new();
        let mut components = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    let v = v as usize;
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        components
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// `d = min_i d_i`, the degree that sets the common step size.
    pub fn min_degree(&self) -> usize {
        *self.degrees.iter().min().unwrap()
    }

    pub fn max_degree(&self) -> usize {
        *self.degrees.iter().max().unwrap()
    }

    pub fn total_degree(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn is_regular(&self) -> bool {
        self.min_degree() == self.max_degree()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u * self.n + v] == 1
    }

    /// Dense row-major adjacency matrix.
    pub fn adjacency(&self) -> &[u8] {
        &self.adjacency
    }

    /// `L = D - A`.
    pub fn laplacian(&self) -> Vec<Vec<i64>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let a = i64::from(self.adjacency[i * self.n + j]);
                        if i == j {
                            self.degrees[i] as i64 - a
                        } else {
                            -a
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn check_size(n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(Error::InvalidSize(format!(
            "graph needs at least {min} agents, got {n}"
        )))
    } else {
        Ok(())
    }
}

fn parse_pair(line: &str, no: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::Parse(format!("line {no}: expected two integers")))?
            .parse()
            .map_err(|e| Error::Parse(format!("line {no}: {e}")))
    };
    let pair = (next()?, next()?);
    if it.next().is_some() {
        return Err(Error::Parse(format!("line {no}: trailing tokens")));
    }
    Ok(pair)
}

/// Compact graph description used on the command line and in sweep
/// configs: `star:N`, `complete:N`, `kreg:N:K`, `path:N` or `file:PATH`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GraphSpec {
    Star(usize),
    Complete(usize),
    KRegular(usize, usize),
    Path(usize),
    File(PathBuf),
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Star(n) => Graph::star(*n),
            GraphSpec::Complete(n) => Graph::complete(*n),
            GraphSpec::KRegular(n, k) => Graph::circulant_regular(*n, *k),
            GraphSpec::Path(n) => Graph::path(*n),
            GraphSpec::File(p) => Graph::read_edge_list(p),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("graph spec `{s}` is not of the form kind:params")))?;
        let int = |v: &str| -> Result<usize> {
            v.parse()
                .map_err(|_| Error::Parse(format!("graph spec `{s}`: `{v}` is not an integer")))
        };
        match kind {
            "star" => Ok(GraphSpec::Star(int(rest)?)),
            "complete" => Ok(GraphSpec::Complete(int(rest)?)),
            "path" => Ok(GraphSpec::Path(int(rest)?)),
            "kreg" => {
                let (n, k) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("graph spec `{s}`: expected kreg:N:K")))?;
                Ok(GraphSpec::KRegular(int(n)?, int(k)?))
            }
            "file" if !rest.is_empty() => Ok(GraphSpec::File(PathBuf::from(rest))),
            _ => Err(Error::Parse(format!("unknown graph spec `{s}`"))),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Star(n) => write!(f, "star:{n}"),
            GraphSpec::Complete(n) => write!(f, "complete:{n}"),
            GraphSpec::KRegular(n, k) => write!(f, "kreg:{n}:{k}"),
            GraphSpec::Path(n) => write!(f, "path:{n}"),
            GraphSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl TryFrom<String> for GraphSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GraphSpec> for String {
    fn from(g: GraphSpec) -> String {
        g.to_string()
    }
}
