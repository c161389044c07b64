//! Kruskal minimum spanning tree over small dense graphs.

/// Weighted undirected edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Minimum spanning forest; ties broken by edge order. Returns the chosen
/// edges, which span the graph iff there are `n - 1` of them.
pub fn kruskal(n: usize, edges: &[Edge]) -> Vec<Edge> {
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&i, &j| edges[i].weight.total_cmp(&edges[j].weight).then(i.cmp(&j)));
    let mut dsu = DisjointSet::new(n);
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    for i in order {
        let e = edges[i];
        if e.weight.is_finite() && dsu.union(e.a, e.b) {
            tree.push(e);
            if tree.len() + 1 == n {
                break;
            }
        }
    }
    tree
}

/// Vertex order of a depth-first walk around the tree from `root`,
/// listing each vertex on first visit. Consecutive pairs form the
/// shortcut tour of the doubled tree.
pub fn preorder(n: usize, tree: &[Edge], root: usize) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for e in tree {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
    }
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(n);
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        out.push(v);
        for &u in adj[v].iter().rev() {
            if !seen[u] {
                stack.push(u);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_drops_heaviest() {
        let edges = [Edge { a: 0, b: 1, weight: 1.0 }, Edge { a: 1, b: 2, weight: 2.0 }, Edge { a: 0, b: 2, weight: 3.0 }];
        let t = kruskal(3, &edges);
        assert_eq!(t.len(), 2);
        assert_eq!(t.iter().map(|e| e.weight).sum::<f64>(), 3.0);
    }

    #[test]
    fn disconnected_graph_yields_forest() {
        let edges = [Edge { a: 0, b: 1, weight: 1.0 }, Edge { a: 2, b: 3, weight: f64::INFINITY }];
        assert_eq!(kruskal(4, &edges).len(), 1);
    }

    #[test]
    fn preorder_visits_all() {
        let tree = [Edge { a: 0, b: 1, weight: 1.0 }, Edge { a: 0, b: 2, weight: 1.0 }, Edge { a: 2, b: 3, weight: 1.0 }];
        assert_eq!(preorder(4, &tree, 0), vec![0, 1, 2, 3]);
    }
}
