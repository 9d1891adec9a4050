//! Maximum bipartite matching (Hopcroft–Karp) with Hall-violator extraction.

use std::collections::VecDeque;

const NIL: usize = usize::MAX;

/// A matching between `left` vertices `0..adj.len()` and right vertices `0..n_right`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub left_to_right: Vec<Option<usize>>,
    pub right_to_left: Vec<Option<usize>>,
    pub size: usize,
}

impl Matching {
    pub fn is_left_perfect(&self) -> bool {
        self.size == self.left_to_right.len()
    }
}

pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Matching {
    let nl = adj.len();
    let mut ml = vec![NIL; nl];
    let mut mr = vec![NIL; n_right];
    let mut dist = vec![0usize; nl];
    let mut size = 0;
    loop {
        // BFS layering from free left vertices.
        let mut q = VecDeque::new();
        for u in 0..nl {
            if ml[u] == NIL {
                dist[u] = 0;
                q.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                let w = mr[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; nl];
        for u in 0..nl {
            if ml[u] == NIL && augment(u, adj, &mut ml, &mut mr, &mut dist, &mut it) {
                size += 1;
            }
        }
    }
    Matching {
        left_to_right: ml.iter().map(|&v| (v != NIL).then_some(v)).collect(),
        right_to_left: mr.iter().map(|&u| (u != NIL).then_some(u)).collect(),
        size,
    }
}

// Iterative DFS along the BFS layers.
fn augment(root: usize, adj: &[Vec<usize>], ml: &mut [usize], mr: &mut [usize], dist: &mut [usize], it: &mut [usize]) -> bool {
    let mut stack = vec![root];
    while let Some(&u) = stack.last() {
        if it[u] < adj[u].len() {
            let v = adj[u][it[u]];
            it[u] += 1;
            let w = mr[v];
            if w == NIL {
                // Flip the path recorded on the stack.
                let mut v = v;
                while let Some(x) = stack.pop() {
                    let prev = ml[x];
                    ml[x] = v;
                    mr[v] = x;
                    v = prev;
                }
                return true;
            }
            if dist[w] == dist[u] + 1 {
                stack.push(w);
            }
        } else {
            dist[u] = usize::MAX;
            stack.pop();
        }
    }
    false
}

/// For a maximum matching that is not left-perfect, a set `S` of left vertices
/// with `|N(S)| < |S|`, together with `N(S)`.
pub fn hall_violator(adj: &[Vec<usize>], m: &Matching) -> Option<(Vec<usize>, Vec<usize>)> {
    if m.is_left_perfect() {
        return None;
    }
    let nl = adj.len();
    let nr = m.right_to_left.len();
    let mut seen_l = vec![false; nl];
    let mut seen_r = vec![false; nr];
    let mut q = VecDeque::new();
    for u in 0..nl {
        if m.left_to_right[u].is_none() {
            seen_l[u] = true;
            q.push_back(u);
        }
    }
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if !seen_r[v] {
                seen_r[v] = true;
                if let Some(w) = m.right_to_left[v] {
                    if !seen_l[w] {
                        seen_l[w] = true;
                        q.push_back(w);
                    }
                }
            }
        }
    }
    let s: Vec<usize> = (0..nl).filter(|&u| seen_l[u]).collect();
    let ns: Vec<usize> = (0..nr).filter(|&v| seen_r[v]).collect();
    debug_assert!(ns.len() < s.len());
    Some((s, ns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_max(adj: &[Vec<usize>], nr: usize) -> usize {
        fn go(i: usize, adj: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
            if i == adj.len() {
                return 0;
            }
            let mut best = go(i + 1, adj, used);
            for &v in &adj[i] {
                if !used[v] {
                    used[v] = true;
                    best = best.max(1 + go(i + 1, adj, used));
                    used[v] = false;
                }
            }
            best
        }
        go(0, adj, &mut vec![false; nr])
    }

    #[test]
    fn unique_perfect_matching_is_found() {
        // Permutation edges plus edges only to later right vertices: upper triangular.
        let n = 8;
        let perm = [3, 0, 6, 1, 7, 2, 5, 4];
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut row: Vec<usize> = (i + 1..n).map(|j| perm[j]).collect();
                row.push(perm[i]);
                row
            })
            .collect();
        let m = hopcroft_karp(&adj, n);
        assert!(m.is_left_perfect());
        for i in 0..n {
            assert_eq!(m.left_to_right[i], Some(perm[i]));
        }
    }

    #[test]
    fn violator_on_deficient_graph() {
        let adj = vec![vec![0], vec![0], vec![1, 2]];
        let m = hopcroft_karp(&adj, 3);
        assert_eq!(m.size, 2);
        let (s, ns) = hall_violator(&adj, &m).unwrap();
        assert_eq!(s, vec![0, 1]);
        assert_eq!(ns, vec![0]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(nl in 1usize..8, nr in 1usize..8, bits in proptest::collection::vec(any::<bool>(), 64)) {
            let adj: Vec<Vec<usize>> = (0..nl).map(|u| (0..nr).filter(|&v| bits[u * 8 + v]).collect()).collect();
            let m = hopcroft_karp(&adj, nr);
            prop_assert_eq!(m.size, brute_max(&adj, nr));
            for (u, v) in m.left_to_right.iter().enumerate() {
                if let Some(v) = v {
                    prop_assert!(adj[u].contains(v));
                    prop_assert_eq!(m.right_to_left[*v], Some(u));
                }
            }
            if let Some((s, ns)) = hall_violator(&adj, &m) {
                prop_assert!(ns.len() < s.len());
                for &u in &s { for &v in &adj[u] { prop_assert!(ns.contains(&v)); } }
            }
        }
    }
}
