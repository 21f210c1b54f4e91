//! Weighted graph storage, graph distance and Dirichlet domain partitions.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One entry of a vertex's adjacency list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub vertex: usize,
    pub weight: f64,
}

/// Undirected edge stored once with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// A finite weighted graph with vertex measure `mu` and two potentials.
///
/// Vertex ids are opaque strings; the insertion order fixes the layout of every
/// vertex-indexed vector in the crate. Graphs are immutable once built.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    mu: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    adj: Vec<Vec<Neighbor>>,
    edges: Vec<Edge>,
}

/// Which potential channel a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    H1,
    H2,
}

#[derive(Debug, Default)]
pub struct GraphBuilder {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    mu: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    seen: HashSet<(usize, usize)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(mut self, id: &str, mu: f64, h1: f64, h2: f64) -> Result<Self> {
        self.add_vertex(id, mu, h1, h2)?;
        Ok(self)
    }

    pub fn edge(mut self, a: &str, b: &str, w: f64) -> Result<Self> {
        self.add_edge(a, b, w)?;
        Ok(self)
    }

    pub fn add_vertex(&mut self, id: &str, mu: f64, h1: f64, h2: f64) -> Result<usize> {
        if self.index.contains_key(id) {
            return Err(Error::InvalidGraph(format!("duplicate vertex id `{id}`")));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidGraph(format!("vertex `{id}`: measure must be positive and finite, got {mu}")));
        }
        if !h1.is_finite() || !h2.is_finite() {
            return Err(Error::InvalidGraph(format!("vertex `{id}`: non-finite potential")));
        }
        let k = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), k);
        self.mu.push(mu);
        self.h1.push(h1);
        self.h2.push(h2);
        Ok(k)
    }

    pub fn add_edge(&mut self, a: &str, b: &str, w: f64) -> Result<()> {
        let ia = *self.index.get(a).ok_or_else(|| Error::UnknownVertex(a.to_string()))?;
        let ib = *self.index.get(b).ok_or_else(|| Error::UnknownVertex(b.to_string()))?;
        if ia == ib {
            return Err(Error::InvalidGraph(format!("self-loop at `{a}`")));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidGraph(format!("edge `{a}`-`{b}`: weight must be positive and finite, got {w}")));
        }
        let key = (ia.min(ib), ia.max(ib));
        if !self.seen.insert(key) {
            return Err(Error::InvalidGraph(format!("duplicate edge `{a}`-`{b}`")));
        }
        self.edges.push((key.0, key.1, w));
        Ok(())
    }

    pub fn build(self) -> Result<WeightedGraph> {
        if self.ids.is_empty() {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let n = self.ids.len();
        let mut adj = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(a, b, w) in &self.edges {
            adj[a].push(Neighbor { vertex: b, weight: w });
            adj[b].push(Neighbor { vertex: a, weight: w });
            edges.push(Edge { a, b, weight: w });
        }
        Ok(WeightedGraph { ids: self.ids, index: self.index, mu: self.mu, h1: self.h1, h2: self.h2, adj, edges })
    }
}

impl WeightedGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::new()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, x: usize) -> &str {
        &self.ids[x]
    }

    pub fn vertex(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn h1(&self) -> &[f64] {
        &self.h1
    }

    pub fn h2(&self) -> &[f64] {
        &self.h2
    }

    pub fn potential(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::H1 => &self.h1,
            Channel::H2 => &self.h2,
        }
    }

    pub fn neighbors(&self, x: usize) -> &[Neighbor] {
        &self.adj[x]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Weight of the edge `xy`, if present.
    pub fn weight(&self, x: usize, y: usize) -> Option<f64> {
        self.adj[x].iter().find(|n| n.vertex == y).map(|n| n.weight)
    }

    /// `deg(x) = sum_{y~x} w_xy`.
    pub fn degree(&self, x: usize) -> f64 {
        self.adj[x].iter().map(|n| n.weight).sum()
    }

    pub fn degree_of(&self, id: &str) -> Result<f64> {
        Ok(self.degree(self.vertex(id)?))
    }

    pub fn total_measure(&self) -> f64 {
        crate::numeric::csum(self.mu.iter().copied())
    }

    pub fn mu_min(&self) -> f64 {
        self.mu.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn potential_min(&self, channel: Channel) -> f64 {
        self.potential(channel).iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Unweighted hop distance; `None` when `y` is unreachable from `x`.
    pub fn distance(&self, x: usize, y: usize) -> Option<usize> {
        self.hops_from(&[x])[y]
    }

    pub fn distance_between(&self, x: &str, y: &str) -> Result<Option<usize>> {
        Ok(self.distance(self.vertex(x)?, self.vertex(y)?))
    }

    /// Multi-source breadth-first hop counts.
    pub fn hops_from(&self, sources: &[usize]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap();
            for n in &self.adj[x] {
                if dist[n.vertex].is_none() {
                    dist[n.vertex] = Some(d + 1);
                    queue.push_back(n.vertex);
                }
            }
        }
        dist
    }

    /// Connected components as sorted vertex lists, restricted to `within`.
    pub fn components_within(&self, within: &[bool]) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut comps = Vec::new();
        for start in 0..self.len() {
            if !within[start] || seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let x = comp[i];
                i += 1;
                for n in &self.adj[x] {
                    if within[n.vertex] && !seen[n.vertex] {
                        seen[n.vertex] = true;
                        comp.push(n.vertex);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.hops_from(&[0]).iter().all(Option::is_some)
    }

    /// Resolve a list of ids to sorted, deduplicated indices.
    pub fn resolve(&self, ids: &[String]) -> Result<Vec<usize>> {
        let mut out = ids.iter().map(|id| self.vertex(id)).collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Check that both potentials are strictly positive on `vertices`.
    pub fn require_positive_potentials(&self, vertices: impl IntoIterator<Item = usize>) -> Result<()> {
        for x in vertices {
            for (name, h) in [("h1", self.h1[x]), ("h2", self.h2[x])] {
                if h <= 0.0 {
                    return Err(Error::Hypothesis(format!(
                        "potential {name} must be positive, got {h} at `{}`",
                        self.ids[x]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `Omega`, its exterior boundary and the Dirichlet collar structure.
///
/// The boundary is the set of vertices outside `Omega` adjacent to it, so the
/// interior `Omega \ boundary` always equals `Omega`. `Omega` together with
/// its boundary is the integration support of Dirichlet energies.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPartition {
    omega: Vec<usize>,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    /// Hop distance from the boundary, per vertex (None when the boundary is
    /// empty or unreachable).
    boundary_hops: Vec<Option<usize>>,
    in_omega: Vec<bool>,
    in_support: Vec<bool>,
    components_touch_boundary: bool,
}

impl DomainPartition {
    /// Partition `omega` (vertex indices) inside `g`.
    pub fn new(g: &WeightedGraph, omega: &[usize]) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::DegenerateDomain("Omega is empty".into()));
        }
        let mut in_omega = vec![false; g.len()];
        for &x in omega {
            if x >= g.len() {
                return Err(Error::UnknownVertex(format!("#{x}")));
            }
            in_omega[x] = true;
        }
        let omega: Vec<usize> = (0..g.len()).filter(|&x| in_omega[x]).collect();
        let mut in_boundary = vec![false; g.len()];
        for &x in &omega {
            for n in g.neighbors(x) {
                if !in_omega[n.vertex] {
                    in_boundary[n.vertex] = true;
                }
            }
        }
        let boundary: Vec<usize> = (0..g.len()).filter(|&y| in_boundary[y]).collect();
        let interior: Vec<usize> = omega.iter().copied().filter(|&x| !in_boundary[x]).collect();
        if interior.is_empty() {
            return Err(Error::DegenerateDomain("interior of Omega is empty".into()));
        }
        let boundary_hops = if boundary.is_empty() { vec![None; g.len()] } else { g.hops_from(&boundary) };
        let in_support: Vec<bool> = (0..g.len()).map(|x| in_omega[x] || in_boundary[x]).collect();
        let components_touch_boundary = g
            .components_within(&in_omega)
            .iter()
            .all(|comp| comp.iter().any(|&x| g.neighbors(x).iter().any(|n| in_boundary[n.vertex])));
        Ok(Self { omega, boundary, interior, boundary_hops, in_omega, in_support, components_touch_boundary })
    }

    pub fn from_ids(g: &WeightedGraph, ids: &[String]) -> Result<Self> {
        Self::new(g, &g.resolve(ids)?)
    }

    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn contains(&self, x: usize) -> bool {
        self.in_omega[x]
    }

    /// Membership in `Omega ∪ ∂Omega`.
    pub fn in_support(&self, x: usize) -> bool {
        self.in_support[x]
    }

    /// Sorted `Omega ∪ ∂Omega`.
    pub fn support(&self) -> Vec<usize> {
        (0..self.in_support.len()).filter(|&x| self.in_support[x]).collect()
    }

    /// Interior vertices within hop distance `m - 1` of the boundary.
    pub fn collar(&self, m: usize) -> Vec<usize> {
        self.interior.iter().copied().filter(|&x| self.in_collar(x, m)).collect()
    }

    /// Interior vertices carrying free values for an order-`m` Dirichlet problem.
    pub fn free(&self, m: usize) -> Vec<usize> {
        self.interior.iter().copied().filter(|&x| !self.in_collar(x, m)).collect()
    }

    fn in_collar(&self, x: usize, m: usize) -> bool {
        match self.boundary_hops[x] {
            Some(d) => m >= 1 && d < m,
            None => false,
        }
    }

    /// Preconditions of an order-`m` Dirichlet problem: at least one free
    /// vertex, and every component of `Omega` adjacent to the boundary (without
    /// that, constants on a closed component have zero Dirichlet norm).
    pub fn require_solvable(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::InvalidParameter("Dirichlet order must be >= 1".into()));
        }
        if self.free(m).is_empty() {
            return Err(Error::DegenerateDomain(format!(
                "no free vertices remain after removing the order-{m} collar"
            )));
        }
        if !self.components_touch_boundary {
            return Err(Error::DegenerateDomain(
                "a component of Omega has no boundary vertex; the Dirichlet norm degenerates".into(),
            ));
        }
        Ok(())
    }
}

/// On-disk graph description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<VertexRecord>,
    #[serde(default)]
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: String,
    pub mu: f64,
    pub h1: f64,
    pub h2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub a: String,
    pub b: String,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainRecord {
    pub omega: Vec<String>,
}

impl GraphFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidGraph(e.to_string()))
    }

    pub fn build(&self) -> Result<WeightedGraph> {
        let mut b = GraphBuilder::new();
        for v in &self.vertices {
            b.add_vertex(&v.id, v.mu, v.h1, v.h2)?;
        }
        for e in &self.edges {
            b.add_edge(&e.a, &e.b, e.w)?;
        }
        b.build()
    }

    pub fn from_graph(g: &WeightedGraph, omega: Option<&[usize]>) -> Self {
        GraphFile {
            vertices: (0..g.len())
                .map(|x| VertexRecord { id: g.id(x).to_string(), mu: g.mu[x], h1: g.h1[x], h2: g.h2[x] })
                .collect(),
            edges: g
                .edges
                .iter()
                .map(|e| EdgeRecord { a: g.id(e.a).to_string(), b: g.id(e.b).to_string(), w: e.weight })
                .collect(),
            domain: omega.map(|o| DomainRecord { omega: o.iter().map(|&x| g.id(x).to_string()).collect() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(ids: &[&str]) -> WeightedGraph {
        let mut b = GraphBuilder::new();
        for id in ids {
            b.add_vertex(id, 1.0, 1.0, 1.0).unwrap();
        }
        for w in ids.windows(2) {
            b.add_edge(w[0], w[1], 1.0).unwrap();
        }
        b.build().unwrap()
    }

    fn ids(g: &WeightedGraph, xs: &[usize]) -> Vec<String> {
        xs.iter().map(|&x| g.id(x).to_string()).collect()
    }

    #[test]
    fn degree_examples() {
        let g = path(&["a", "b"]);
        assert_eq!(g.degree_of("a").unwrap(), 1.0);

        let g = GraphBuilder::new().vertex("z", 1.0, 1.0, 1.0).unwrap().build().unwrap();
        assert_eq!(g.degree_of("z").unwrap(), 0.0);

        let mut b = GraphBuilder::new();
        for id in ["c", "x", "y", "z"] {
            b.add_vertex(id, 1.0, 1.0, 1.0).unwrap();
        }
        for leaf in ["x", "y", "z"] {
            b.add_edge("c", leaf, 2.0).unwrap();
        }
        let star = b.build().unwrap();
        assert_eq!(star.degree_of("c").unwrap(), 6.0);
        assert!(matches!(star.degree_of("nope"), Err(Error::UnknownVertex(_))));
    }

    #[test]
    fn distance_examples() {
        let g = path(&["a", "b", "c"]);
        assert_eq!(g.distance_between("a", "a").unwrap(), Some(0));
        assert_eq!(g.distance_between("a", "c").unwrap(), Some(2));

        let two = GraphBuilder::new()
            .vertex("a", 1.0, 1.0, 1.0)
            .unwrap()
            .vertex("b", 1.0, 1.0, 1.0)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(two.distance_between("a", "b").unwrap(), None);
        assert!(two.distance_between("a", "q").is_err());
    }

    #[test]
    fn partition_single_vertex_domain() {
        let g = path(&["a", "b", "c"]);
        let d = DomainPartition::from_ids(&g, &["b".to_string()]).unwrap();
        assert_eq!(ids(&g, d.boundary()), vec!["a", "c"]);
        assert_eq!(ids(&g, d.interior()), vec!["b"]);
    }

    #[test]
    fn partition_whole_graph() {
        let g = path(&["a", "b", "c"]);
        let all: Vec<String> = g.ids().to_vec();
        let d = DomainPartition::from_ids(&g, &all).unwrap();
        assert!(d.boundary().is_empty());
        assert_eq!(d.interior(), d.omega());
        assert!(d.require_solvable(1).is_err());
    }

    #[test]
    fn partition_collar_width_two() {
        let g = path(&["a", "b", "c", "d", "e"]);
        let omega: Vec<String> = ["b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let d = DomainPartition::from_ids(&g, &omega).unwrap();
        assert_eq!(ids(&g, d.boundary()), vec!["a", "e"]);
        assert_eq!(ids(&g, &d.collar(2)), vec!["b", "d"]);
        assert_eq!(ids(&g, &d.free(2)), vec!["c"]);
        assert!(d.collar(1).is_empty());
        assert!(d.free(3).is_empty());
        assert!(matches!(d.require_solvable(3), Err(Error::DegenerateDomain(_))));
    }

    #[test]
    fn loader_rejects_bad_input() {
        let bad_w = r#"{"vertices":[{"id":"a","mu":1,"h1":1,"h2":1},{"id":"b","mu":1,"h1":1,"h2":1}],
                        "edges":[{"a":"a","b":"b","w":-1}]}"#;
        assert!(GraphFile::from_json(bad_w).unwrap().build().is_err());
        let dup = r#"{"vertices":[{"id":"a","mu":1,"h1":1,"h2":1},{"id":"b","mu":1,"h1":1,"h2":1}],
                      "edges":[{"a":"a","b":"b","w":1},{"a":"b","b":"a","w":1}]}"#;
        assert!(GraphFile::from_json(dup).unwrap().build().is_err());
        let bad_mu = r#"{"vertices":[{"id":"a","mu":0,"h1":1,"h2":1}]}"#;
        assert!(GraphFile::from_json(bad_mu).unwrap().build().is_err());
        let empty = r#"{"vertices":[]}"#;
        assert!(GraphFile::from_json(empty).unwrap().build().is_err());
    }

    #[test]
    fn file_roundtrip() {
        let g = path(&["a", "b", "c"]);
        let f = GraphFile::from_graph(&g, Some(&[1]));
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(GraphFile::from_json(&text).unwrap(), f);
    }
}
