//! Lexicographic multi-objective motion planning over probabilistic roadmaps.

pub mod baselines;
pub mod bench;
pub mod costfield;
pub mod geometry;
pub mod lexsearch;
pub mod roadmap;
