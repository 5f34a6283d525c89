//! Maximum cardinality matching in general graphs (Edmonds' blossom algorithm).

use std::collections::VecDeque;

use crate::objset::ObjSet;
use crate::scene::ObjectId;

const NONE: usize = usize::MAX;

struct Blossom<'g> {
    adj: &'g [Vec<usize>],
    mate: Vec<usize>,
    parent: Vec<usize>,
    base: Vec<usize>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
    queue: VecDeque<usize>,
}

impl<'g> Blossom<'g> {
    fn new(adj: &'g [Vec<usize>]) -> Self {
        let n = adj.len();
        Self {
            adj,
            mate: vec![NONE; n],
            parent: vec![NONE; n],
            base: (0..n).collect(),
            used: vec![false; n],
            in_blossom: vec![false; n],
            queue: VecDeque::new(),
        }
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        let mut seen = vec![false; self.adj.len()];
        loop {
            a = self.base[a];
            seen[a] = true;
            if self.mate[a] == NONE {
                break;
            }
            a = self.parent[self.mate[a]];
        }
        loop {
            b = self.base[b];
            if seen[b] {
                return b;
            }
            b = self.parent[self.mate[b]];
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[self.mate[v]]] = true;
            self.parent[v] = child;
            child = self.mate[v];
            v = self.parent[self.mate[v]];
        }
    }

    fn find_path(&mut self, root: usize) -> usize {
        let n = self.adj.len();
        self.used.fill(false);
        self.parent.fill(NONE);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.used[root] = true;
        self.queue.clear();
        self.queue.push_back(root);
        while let Some(v) = self.queue.pop_front() {
            for k in 0..self.adj[v].len() {
                let to = self.adj[v][k];
                if self.base[v] == self.base[to] || self.mate[v] == to {
                    continue;
                }
                if to == root || (self.mate[to] != NONE && self.parent[self.mate[to]] != NONE) {
                    let cur = self.lca(v, to);
                    self.in_blossom.fill(false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for i in 0..n {
                        if self.in_blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                self.queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to] == NONE {
                    self.parent[to] = v;
                    if self.mate[to] == NONE {
                        return to;
                    }
                    let next = self.mate[to];
                    self.used[next] = true;
                    self.queue.push_back(next);
                }
            }
        }
        NONE
    }

    fn solve(mut self) -> usize {
        let n = self.adj.len();
        for v in 0..n {
            if self.mate[v] == NONE {
                if let Some(&u) = self.adj[v].iter().find(|&&u| self.mate[u] == NONE) {
                    self.mate[u] = v;
                    self.mate[v] = u;
                }
            }
        }
        for v in 0..n {
            if self.mate[v] != NONE {
                continue;
            }
            let mut u = self.find_path(v);
            while u != NONE {
                let pv = self.parent[u];
                let ppv = self.mate[pv];
                self.mate[u] = pv;
                self.mate[pv] = u;
                u = ppv;
            }
        }
        self.mate.iter().filter(|&&m| m != NONE).count() / 2
    }
}

/// Size of a maximum matching of the graph induced on `vertices`, where
/// `neighbours(v)` lists the neighbours of `v` (symmetric).
pub fn max_matching(vertices: ObjSet, neighbours: impl Fn(ObjectId) -> ObjSet) -> usize {
    let active: Vec<ObjectId> =
        vertices.iter().filter(|&v| !neighbours(v).intersection(vertices).is_empty()).collect();
    if active.len() < 2 {
        return 0;
    }
    let mut local = [usize::MAX; 129];
    for (k, &v) in active.iter().enumerate() {
        local[v as usize] = k;
    }
    let adj: Vec<Vec<usize>> = active
        .iter()
        .map(|&v| neighbours(v).intersection(vertices).iter().map(|u| local[u as usize]).collect())
        .collect();
    Blossom::new(&adj).solve()
}
