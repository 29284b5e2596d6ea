//! Diagonal objectives, instance generators, QAOA circuit builders and exact
//! enumeration.

mod brute;
mod filter;
mod graph;
mod heavy_hex;
mod ising;
mod qaoa;

pub use brute::{
    approximation_ratio, brute_force, qaoa_guarantee, ApproximationRatio, BruteForce,
    HEAVY_HEX_127_REFERENCE_OPTIMUM, MAXCUT40_REFERENCE_OPTIMUM,
};
pub use filter::{FeasibilityFilter, FilterPredicate};
pub use graph::{maxcut_3regular, Graph};
pub use heavy_hex::{
    bipartite_edge_coloring, heavy_hex_instance, HeavyHexInstance, HeavyHexLattice, HeavyHexShape,
};
pub use ising::{IsingPolynomial, Sense, MAX_ENUMERATION_QUBITS};
pub use qaoa::{
    build_qaoa, grid_search_p1, maxcut40_reference_params, phase_separator, GridSearch, QaoaLayout,
    QaoaParams,
};
