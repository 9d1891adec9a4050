//! Joining pieces into one cycle: the piece digraph, the matching of
//! consecutive piece pairs to `A`-vertices, and the final sequence.

use crate::graph::{DiGraph, DiGraphBuilder, Graph, VertexSet};
use crate::matching::{hall_violator, hopcroft_karp};
use crate::powers::SquarePathPiece;
use crate::report::StageReport;

const STAGE: &str = "hall_match";

/// Arc `F -> F'` iff the last vertex of `F` is adjacent to the first of `F'`.
pub fn build_aux_digraph(pieces: &[SquarePathPiece], arcs: &Graph) -> DiGraph {
    let n = pieces.len();
    let mut d = DiGraphBuilder::new(n);
    for (i, f) in pieces.iter().enumerate() {
        let (_, w) = f.right_tuple();
        for (j, h) in pieces.iter().enumerate() {
            let (_, x) = h.left_tuple();
            if i != j && arcs.has_edge(w, x) {
                d.add_arc(i, j);
            }
        }
    }
    d.build()
}

/// For each consecutive pair `(cycle[i], cycle[i+1])` a distinct vertex of `a2`
/// adjacent to both end pairs involved.
pub fn hall_match(cycle: &[usize], pieces: &[SquarePathPiece], a2: &VertexSet, g: &Graph) -> Result<Vec<usize>, StageReport> {
    let t = cycle.len();
    if t != a2.len() {
        return Err(StageReport::failed(STAGE, "precondition: cycle length differs from the number of A-vertices")
            .stat("cycle_edges", t as f64)
            .stat("a_vertices", a2.len() as f64));
    }
    let right: Vec<usize> = a2.to_vec();
    let adj: Vec<Vec<usize>> = (0..t)
        .map(|i| {
            let (u, w) = pieces[cycle[i]].right_tuple();
            let (y, x) = pieces[cycle[(i + 1) % t]].left_tuple();
            let need = [u, w, x, y];
            right.iter().enumerate().filter(|&(_, &v)| need.iter().all(|&z| g.has_edge(v, z))).map(|(r, _)| r).collect()
        })
        .collect();
    let m = hopcroft_karp(&adj, right.len());
    if let Some((s, ns)) = hall_violator(&adj, &m) {
        return Err(StageReport::failed(STAGE, "Hall condition fails")
            .stat("matched", m.size as f64)
            .stat("violator", s.len() as f64)
            .stat("violator_neighbourhood", ns.len() as f64));
    }
    Ok(m.left_to_right.iter().map(|r| right[r.expect("perfect")]).collect())
}

/// Pieces in cycle order, each followed by its matched vertex.
pub fn assemble(cycle: &[usize], pieces: &[SquarePathPiece], matched: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, &f) in cycle.iter().enumerate() {
        out.extend_from_slice(&pieces[f].vertices);
        out.push(matched[i]);
    }
    out
}
