//! Maximum flow on the bipartite "ε-close pairs" graph.

use std::collections::VecDeque;

/// Compressed adjacency: `targets[offsets[i]..offsets[i + 1]]` are the
/// right-side neighbours of left vertex `i`.
#[derive(Debug, Clone, Default)]
pub struct Bipartite {
    pub offsets: Vec<usize>,
    pub targets: Vec<u32>,
    pub right: usize,
}

impl Bipartite {
    pub fn left(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn neighbours(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// Hopcroft–Karp maximum matching size.
pub fn max_matching(g: &Bipartite) -> usize {
    const FREE: u32 = u32::MAX;
    let nl = g.left();
    let mut match_l = vec![FREE; nl];
    let mut match_r = vec![FREE; g.right];
    let mut dist = vec![u32::MAX; nl];
    let mut queue = VecDeque::with_capacity(nl);
    let mut size = 0;

    // greedy warm start
    for i in 0..nl {
        if let Some(&j) = g.neighbours(i).iter().find(|&&j| match_r[j as usize] == FREE) {
            match_l[i] = j;
            match_r[j as usize] = i as u32;
            size += 1;
        }
    }

    loop {
        queue.clear();
        for i in 0..nl {
            if match_l[i] == FREE {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(i) = queue.pop_front() {
            for &j in g.neighbours(i) {
                let mate = match_r[j as usize];
                if mate == FREE {
                    found = true;
                } else if dist[mate as usize] == u32::MAX {
                    dist[mate as usize] = dist[i] + 1;
                    queue.push_back(mate as usize);
                }
            }
        }
        if !found {
            break;
        }
        let mut cursor: Vec<usize> = (0..nl).map(|i| g.offsets[i]).collect();
        for i in 0..nl {
            if match_l[i] == FREE && augment(g, i, &mut match_l, &mut match_r, &mut dist, &mut cursor) {
                size += 1;
            }
        }
    }
    size
}

fn augment(
    g: &Bipartite,
    i: usize,
    match_l: &mut [u32],
    match_r: &mut [u32],
    dist: &mut [u32],
    cursor: &mut [usize],
) -> bool {
    const FREE: u32 = u32::MAX;
    while cursor[i] < g.offsets[i + 1] {
        let j = g.targets[cursor[i]] as usize;
        cursor[i] += 1;
        let mate = match_r[j];
        let ok = if mate == FREE {
            true
        } else {
            let m = mate as usize;
            dist[m] == dist[i] + 1 && augment(g, m, match_l, match_r, dist, cursor)
        };
        if ok {
            match_l[i] = j as u32;
            match_r[j] = i as u32;
            return true;
        }
    }
    dist[i] = u32::MAX;
    false
}

/// Dinic max-flow for source → left (capacity `left_cap`), left → right along
/// `g` (unbounded), right → sink (capacity `right_cap`).
pub fn max_transport(g: &Bipartite, left_cap: &[f64], right_cap: &[f64]) -> f64 {
    let nl = g.left();
    let nr = g.right;
    debug_assert_eq!(left_cap.len(), nl);
    debug_assert_eq!(right_cap.len(), nr);
    let source = nl + nr;
    let sink = source + 1;
    let mut net = Network::new(nl + nr + 2);
    for (i, &c) in left_cap.iter().enumerate() {
        net.add_edge(source, i, c);
    }
    for (j, &c) in right_cap.iter().enumerate() {
        net.add_edge(nl + j, sink, c);
    }
    for i in 0..nl {
        for &j in g.neighbours(i) {
            net.add_edge(i, nl + j as usize, f64::INFINITY);
        }
    }
    net.max_flow(source, sink)
}

const EPS: f64 = 1e-15;

struct Network {
    head: Vec<usize>,
    next: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<f64>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

const NIL: usize = usize::MAX;

impl Network {
    fn new(n: usize) -> Self {
        Network {
            head: vec![NIL; n],
            next: Vec::new(),
            to: Vec::new(),
            cap: Vec::new(),
            level: vec![0; n],
            iter: vec![0; n],
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: f64) {
        for (a, b, cap) in [(u, v, c), (v, u, 0.0)] {
            self.to.push(b);
            self.cap.push(cap);
            self.next.push(self.head[a]);
            self.head[a] = self.to.len() - 1;
        }
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut q = VecDeque::new();
        self.level[s] = 0;
        q.push_back(s);
        while let Some(u) = q.pop_front() {
            let mut e = self.head[u];
            while e != NIL {
                let v = self.to[e];
                if self.cap[e] > EPS && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
                e = self.next[e];
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, f: f64) -> f64 {
        if u == t {
            return f;
        }
        while self.iter[u] != NIL {
            let e = self.iter[u];
            let v = self.to[e];
            if self.cap[e] > EPS && self.level[v] == self.level[u] + 1 {
                let d = self.dfs(v, t, f.min(self.cap[e]));
                if d > EPS {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            self.iter[u] = self.next[e];
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.iter.copy_from_slice(&self.head);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= EPS {
                    break;
                }
                flow += f;
            }
        }
        flow
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(adj: &[&[u32]], right: usize) -> Bipartite {
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        for row in adj {
            targets.extend_from_slice(row);
            offsets.push(targets.len());
        }
        Bipartite {
            offsets,
            targets,
            right,
        }
    }

    #[test]
    fn matching_needs_augmentation() {
        // greedy picks 0-0 and blocks vertex 1; optimum is 3
        let g = graph(&[&[0, 1], &[0], &[1, 2]], 3);
        assert_eq!(max_matching(&g), 3);
        let g = graph(&[&[0], &[0], &[0]], 1);
        assert_eq!(max_matching(&g), 1);
    }

    #[test]
    fn transport_respects_capacities() {
        let g = graph(&[&[0, 1], &[1]], 2);
        let f = max_transport(&g, &[0.5, 0.5], &[0.2, 0.8]);
        assert!((f - 1.0).abs() < 1e-15);
        let g = graph(&[&[0], &[0]], 2);
        let f = max_transport(&g, &[0.5, 0.5], &[0.3, 0.7]);
        assert!((f - 0.3).abs() < 1e-15);
    }
}
