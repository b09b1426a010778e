//! Undirected simple graphs, the signed incidence matrix and the topological
//! structures built on it: spanning trees, fundamental cycle and cut-set bases,
//! and the block (biconnected component) decomposition.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph on nodes `0..n`.
///
/// Edges are stored canonically as `(min, max)`; the position of an edge in
/// [`Graph::edges`] is its edge index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    /// `(neighbor, edge index)` per node.
    adjacency: Vec<Vec<(usize, usize)>>,
    components: usize,
}

/// Wire format: `{"n": int, "edges": [[i, j], ...]}` with 0-based indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = Error;

    fn try_from(value: GraphJson) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = value.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(value.n, &pairs)
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> Self {
        GraphJson {
            n: g.n,
            edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl Graph {
    /// Builds a graph from an edge list. Pairs may be given in either order.
    pub fn new(n: usize, edge_pairs: &[(usize, usize)]) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edge_pairs.len());
        let mut edges = Vec::with_capacity(edge_pairs.len());
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in edge_pairs {
            for v in [i, j] {
                if v >= n {
                    return Err(Error::IndexOutOfRange { index: v, n });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            let e = (i.min(j), i.max(j));
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
            let idx = edges.len();
            adjacency[e.0].push((e.1, idx));
            adjacency[e.1].push((e.0, idx));
            edges.push(e);
        }
        let components = count_components(n, &adjacency);
        Ok(Graph {
            n,
            edges,
            adjacency,
            components,
        })
    }

    pub fn path(n: usize) -> Self {
        let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new(n, &pairs).expect("path graph is valid")
    }

    /// Cycle `0–1–…–(n−1)–0`. Requires `n ≥ 3`.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least 3 nodes");
        let mut pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        pairs.push((0, n - 1));
        Graph::new(n, &pairs).expect("cycle graph is valid")
    }

    /// Complete graph with edges in lexicographic order.
    pub fn complete(n: usize) -> Self {
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i, j));
            }
        }
        Graph::new(n, &pairs).expect("complete graph is valid")
    }

    /// Star with `leaves` leaves around center node 0.
    pub fn star(leaves: usize) -> Self {
        let pairs: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::new(leaves + 1, &pairs).expect("star graph is valid")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> (usize, usize) {
        self.edges[idx]
    }

    /// `(neighbor, edge index)` pairs incident to `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (i.min(j), i.max(j));
        self.adjacency.get(a)?.iter().find(|&&(w, _)| w == b).map(|&(_, e)| e)
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    pub fn is_connected(&self) -> bool {
        self.components == 1
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(Error::Disconnected {
                components: self.components,
            })
        }
    }

    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.edges.len() + 1 == self.n
    }

    /// Connected and 2-regular.
    pub fn is_cycle(&self) -> bool {
        self.n >= 3 && self.is_connected() && self.edges.len() == self.n && (0..self.n).all(|v| self.degree(v) == 2)
    }

    pub fn is_complete(&self) -> bool {
        self.n >= 2 && self.edges.len() == self.n * (self.n - 1) / 2
    }

    /// Node order around a cycle starting at node 0 and heading to its smaller neighbor.
    pub fn cycle_order(&self) -> Result<Vec<usize>> {
        if !self.is_cycle() {
            return Err(Error::NotACycle);
        }
        let mut order = Vec::with_capacity(self.n);
        let mut prev = usize::MAX;
        let mut cur = 0;
        for _ in 0..self.n {
            order.push(cur);
            let next = self.adjacency[cur]
                .iter()
                .map(|&(w, _)| w)
                .filter(|&w| w != prev)
                .min()
                .expect("cycle nodes have degree 2");
            prev = cur;
            cur = next;
        }
        Ok(order)
    }

    /// Signed incidence (boundary) matrix.
    pub fn incidence_matrix(&self) -> SignedIncidence {
        SignedIncidence::new(self)
    }

    /// Subgraph on a subset of edges, with nodes relabelled `0..k` in increasing
    /// order of their original labels. Returns the subgraph and the map from
    /// local to original node labels. Relabelling is monotone, so edge
    /// orientation (and therefore edge coordinates) is preserved.
    pub fn edge_subgraph(&self, edge_indices: &[usize]) -> (Graph, Vec<usize>) {
        let nodes: BTreeSet<usize> = edge_indices
            .iter()
            .flat_map(|&e| [self.edges[e].0, self.edges[e].1])
            .collect();
        let nodes: Vec<usize> = nodes.into_iter().collect();
        let local = |v: usize| nodes.binary_search(&v).expect("node is in subset");
        let pairs: Vec<_> = edge_indices
            .iter()
            .map(|&e| (local(self.edges[e].0), local(self.edges[e].1)))
            .collect();
        let g = Graph::new(nodes.len(), &pairs).expect("subgraph of a simple graph is simple");
        (g, nodes)
    }

    /// BFS spanning tree rooted at node 0, as a sorted list of edge indices.
    pub fn spanning_tree(&self) -> Result<Vec<usize>> {
        let tree = RootedTree::bfs(self)?;
        let mut edges: Vec<usize> = tree.parent_edge.iter().flatten().copied().collect();
        edges.sort_unstable();
        Ok(edges)
    }

    /// Fundamental cycles of the BFS spanning tree, one per non-tree edge.
    ///
    /// Each vector has entries in {−1, 0, +1}: +1 where the cycle traverses an
    /// edge `(a, b)` from `a` to `b` (`a < b`), −1 for the opposite direction.
    /// Every vector is annihilated by `d`.
    pub fn cycle_space_basis(&self) -> Result<Vec<Vec<f64>>> {
        let tree = RootedTree::bfs(self)?;
        let in_tree = tree.edge_mask(self.edge_count());
        let mut basis = Vec::new();
        for (e, &(j, k)) in self.edges.iter().enumerate() {
            if in_tree[e] {
                continue;
            }
            let mut v = vec![0.0; self.edge_count()];
            // j → k along the chord, then back k → j through the tree.
            v[e] = 1.0;
            for (from, to, te) in tree.path(k, j) {
                v[te] = if from < to { 1.0 } else { -1.0 };
            }
            basis.push(v);
        }
        Ok(basis)
    }

    /// Fundamental cut-sets of the BFS spanning tree, one per tree edge.
    ///
    /// The vector for tree edge `t` is `dᵀ·1_S` where `S` is the side of the
    /// tree below `t`, so it lies in `im dᵀ` and is orthogonal to every cycle.
    pub fn cut_space_basis(&self) -> Result<Vec<Vec<f64>>> {
        let tree = RootedTree::bfs(self)?;
        let mut basis = Vec::with_capacity(self.n.saturating_sub(1));
        let mut tree_edges: Vec<(usize, usize)> = tree
            .parent_edge
            .iter()
            .enumerate()
            .filter_map(|(v, pe)| pe.map(|e| (e, v)))
            .collect();
        tree_edges.sort_unstable();
        for (_, child) in tree_edges {
            let side = tree.subtree_mask(child);
            let v = self
                .edges
                .iter()
                .map(|&(a, b)| f64::from(u8::from(side[b])) - f64::from(u8::from(side[a])))
                .collect();
            basis.push(v);
        }
        Ok(basis)
    }

    /// Blocks (maximal 2-connected subgraphs and bridges) and cut-nodes, found
    /// with a single low-link DFS.
    pub fn block_decomposition(&self) -> Result<BlockDecomposition> {
        self.require_connected()?;
        BlockDecomposition::compute(self)
    }

    /// Graphviz DOT. When a decomposition is supplied each edge is coloured by block.
    pub fn to_dot(&self, blocks: Option<&BlockDecomposition>) -> String {
        const PALETTE: [&str; 8] = [
            "red",
            "blue",
            "darkgreen",
            "orange",
            "purple",
            "brown",
            "magenta",
            "cyan",
        ];
        let mut color = vec![None; self.edge_count()];
        if let Some(bd) = blocks {
            for (bi, block) in bd.blocks.iter().enumerate() {
                for &e in &block.edges {
                    color[e] = Some(PALETTE[bi % PALETTE.len()]);
                }
            }
        }
        let mut out = String::from("graph G {\n");
        for v in 0..self.n {
            let _ = writeln!(out, "  {} [label=\"{}\"];", v + 1, v + 1);
        }
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            match color[e] {
                Some(c) => {
                    let _ = writeln!(out, "  {} -- {} [color={}];", a + 1, b + 1, c);
                }
                None => {
                    let _ = writeln!(out, "  {} -- {};", a + 1, b + 1);
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn count_components(n: usize, adjacency: &[Vec<(usize, usize)>]) -> usize {
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        components += 1;
        seen[s] = true;
        stack.push(s);
        while let Some(v) = stack.pop() {
            for &(w, _) in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    components
}

/// BFS tree with parent pointers and depths.
#[derive(Debug, Clone)]
pub(crate) struct RootedTree {
    pub parent: Vec<Option<usize>>,
    pub parent_edge: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    /// Nodes in BFS order (root first).
    pub order: Vec<usize>,
}

impl RootedTree {
    pub fn bfs(g: &Graph) -> Result<Self> {
        g.require_connected()?;
        let n = g.node_count();
        let mut parent = vec![None; n];
        let mut parent_edge = vec![None; n];
        let mut depth = vec![0; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        if n > 0 {
            seen[0] = true;
            queue.push_back(0);
        }
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &(w, e) in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    parent_edge[w] = Some(e);
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        Ok(RootedTree {
            parent,
            parent_edge,
            depth,
            order,
        })
    }

    pub fn edge_mask(&self, m: usize) -> Vec<bool> {
        let mut mask = vec![false; m];
        for e in self.parent_edge.iter().flatten() {
            mask[*e] = true;
        }
        mask
    }

    /// Tree path from `from` to `to` as `(u, w, edge)` steps.
    pub fn path(&self, from: usize, to: usize) -> Vec<(usize, usize, usize)> {
        let mut up_from = Vec::new();
        let mut up_to = Vec::new();
        let (mut a, mut b) = (from, to);
        while self.depth[a] > self.depth[b] {
            let p = self.parent[a].expect("non-root has a parent");
            up_from.push((a, p, self.parent_edge[a].expect("non-root has a parent edge")));
            a = p;
        }
        while self.depth[b] > self.depth[a] {
            let p = self.parent[b].expect("non-root has a parent");
            up_to.push((p, b, self.parent_edge[b].expect("non-root has a parent edge")));
            b = p;
        }
        while a != b {
            let pa = self.parent[a].expect("non-root has a parent");
            up_from.push((a, pa, self.parent_edge[a].expect("non-root has a parent edge")));
            a = pa;
            let pb = self.parent[b].expect("non-root has a parent");
            up_to.push((pb, b, self.parent_edge[b].expect("non-root has a parent edge")));
            b = pb;
        }
        up_from.extend(up_to.into_iter().rev());
        up_from
    }

    /// Indicator of the subtree rooted at `v`.
    pub fn subtree_mask(&self, v: usize) -> Vec<bool> {
        let n = self.parent.len();
        let mut mask = vec![false; n];
        mask[v] = true;
        // BFS order lists parents before children.
        for &w in &self.order {
            if let Some(p) = self.parent[w] {
                if mask[p] {
                    mask[w] = true;
                }
            }
        }
        mask
    }
}

/// Signed node-edge incidence matrix `d` (n × m). The column of edge `{j, k}`,
/// `j < k`, is `e_k − e_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedIncidence(DMatrix<f64>);

impl SignedIncidence {
    pub fn new(g: &Graph) -> Self {
        let mut d = DMatrix::zeros(g.node_count(), g.edge_count());
        for (e, &(j, k)) in g.edges().iter().enumerate() {
            d[(k, e)] = 1.0;
            d[(j, e)] = -1.0;
        }
        SignedIncidence(d)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `dᵀ x`: edge differences `x_k − x_j`.
    pub fn transpose_mul(&self, x: &[f64]) -> Vec<f64> {
        self.0
            .tr_mul(&nalgebra::DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }

    /// `d y`.
    pub fn mul(&self, y: &[f64]) -> Vec<f64> {
        (&self.0 * nalgebra::DVector::from_column_slice(y)).as_slice().to_vec()
    }

    /// Combinatorial Laplacian `d dᵀ`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        &self.0 * self.0.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    /// A bridge.
    TreeEdge,
    /// A 2-regular block.
    Cycle,
    /// All pairs of block nodes adjacent (four or more nodes).
    Complete,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    /// Sorted original node labels.
    pub nodes: Vec<usize>,
    /// Sorted original edge indices.
    pub edges: Vec<usize>,
    pub kind: BlockKind,
}

impl Block {
    /// Motif tag such as `Cycle(3)` or `TreeEdge`.
    pub fn label(&self) -> String {
        match self.kind {
            BlockKind::TreeEdge => "TreeEdge".to_string(),
            BlockKind::Cycle => format!("Cycle({})", self.nodes.len()),
            BlockKind::Complete => format!("Complete({})", self.nodes.len()),
            BlockKind::General => format!("General({},{})", self.nodes.len(), self.edges.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    /// Ordered by smallest edge index.
    pub blocks: Vec<Block>,
    /// Sorted.
    pub cut_nodes: Vec<usize>,
}

impl BlockDecomposition {
    fn compute(g: &Graph) -> Result<Self> {
        let n = g.node_count();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut is_cut = vec![false; n];
        let mut edge_stack: Vec<usize> = Vec::new();
        let mut raw_blocks: Vec<Vec<usize>> = Vec::new();
        let mut time = 0;

        // Iterative DFS: frames of (node, parent edge, next adjacency position).
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = time;
            low[root] = time;
            time += 1;
            let mut root_children = 0;
            let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
            while let Some(frame) = stack.last_mut() {
                let (v, pe, pos) = *frame;
                if pos < g.neighbors(v).len() {
                    frame.2 += 1;
                    let (w, e) = g.neighbors(v)[pos];
                    if Some(e) == pe {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        edge_stack.push(e);
                        disc[w] = time;
                        low[w] = time;
                        time += 1;
                        if v == root {
                            root_children += 1;
                        }
                        stack.push((w, Some(e), 0));
                    } else if disc[w] < disc[v] {
                        edge_stack.push(e);
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[v]);
                        if low[v] >= disc[p] {
                            if p != root {
                                is_cut[p] = true;
                            }
                            let tree_edge = pe.expect("child frame has a parent edge");
                            let mut block = Vec::new();
                            while let Some(e) = edge_stack.pop() {
                                block.push(e);
                                if e == tree_edge {
                                    break;
                                }
                            }
                            raw_blocks.push(block);
                        }
                    }
                }
            }
            if root_children > 1 {
                is_cut[root] = true;
            }
        }

        let mut blocks: Vec<Block> = raw_blocks
            .into_iter()
            .map(|mut edges| {
                edges.sort_unstable();
                let nodes: BTreeSet<usize> = edges.iter().flat_map(|&e| [g.edge(e).0, g.edge(e).1]).collect();
                let nodes: Vec<usize> = nodes.into_iter().collect();
                let kind = classify_block(nodes.len(), edges.len());
                Block { nodes, edges, kind }
            })
            .collect();
        blocks.sort_by_key(|b| b.edges[0]);
        let cut_nodes = (0..n).filter(|&v| is_cut[v]).collect();
        Ok(BlockDecomposition { blocks, cut_nodes })
    }

    /// Number of motifs when adjacent bridges are grouped into tree motifs.
    pub fn motif_count(&self, g: &Graph) -> usize {
        let bridges: Vec<&Block> = self.blocks.iter().filter(|b| b.kind == BlockKind::TreeEdge).collect();
        let others = self.blocks.len() - bridges.len();
        if bridges.is_empty() {
            return others;
        }
        // Union-find over bridge edges sharing a node.
        let mut parent: Vec<usize> = (0..bridges.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let next = p[c];
                p[c] = r;
                c = next;
            }
            r
        }
        for i in 0..bridges.len() {
            for j in (i + 1)..bridges.len() {
                let (a, b) = g.edge(bridges[i].edges[0]);
                let (c, d) = g.edge(bridges[j].edges[0]);
                if a == c || a == d || b == c || b == d {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri] = rj;
                }
            }
        }
        let trees: HashSet<usize> = (0..bridges.len()).map(|i| find(&mut parent, i)).collect();
        others + trees.len()
    }

    /// One-line summary with 1-based cut-node labels, e.g.
    /// `5 blocks (3 motifs): Cycle(3), 3×TreeEdge, Complete(4); cut-nodes 3,4,6`.
    pub fn summary(&self, g: &Graph) -> String {
        let mut parts: Vec<(String, usize)> = Vec::new();
        for b in &self.blocks {
            let label = b.label();
            match parts.iter_mut().find(|(l, _)| *l == label) {
                Some((_, c)) => *c += 1,
                None => parts.push((label, 1)),
            }
        }
        let body = parts
            .iter()
            .map(|(l, c)| if *c > 1 { format!("{c}×{l}") } else { l.clone() })
            .collect::<Vec<_>>()
            .join(", ");
        let noun = if self.blocks.len() == 1 { "block" } else { "blocks" };
        let motifs = self.motif_count(g);
        let mut s = if motifs != self.blocks.len() {
            let m = if motifs == 1 { "motif" } else { "motifs" };
            format!("{} {noun} ({motifs} {m}): {body}", self.blocks.len())
        } else {
            format!("{} {noun}: {body}", self.blocks.len())
        };
        if !self.cut_nodes.is_empty() {
            let labels: Vec<String> = self.cut_nodes.iter().map(|v| (v + 1).to_string()).collect();
            let _ = write!(s, "; cut-nodes {}", labels.join(","));
        }
        s
    }
}

fn classify_block(k: usize, m: usize) -> BlockKind {
    if m == 1 {
        return BlockKind::TreeEdge;
    }
    // A 2-connected block with as many edges as nodes is 2-regular, hence a
    // cycle. Triangles land here, before the clique check.
    if m == k {
        return BlockKind::Cycle;
    }
    if m == k * (k - 1) / 2 {
        return BlockKind::Complete;
    }
    BlockKind::General
}
