pub mod bipartite;
pub mod hypergraph;
pub mod linked;
pub mod multipartite;
pub mod sublinear;
