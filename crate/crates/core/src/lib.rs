//! Four-point curvature conditions on finite metric spaces.
//!
//! The crate checks the Ptolemy inequality, the quadrilateral inequality and
//! the cosq condition over every quadruple of a finite metric space, decides
//! Euclidean embeddability, computes shortest-path metrics of weighted graphs
//! and runs a battery of numerical diagnostics on sampled flat strips.
//!
//! ```
//! use ptolemaic_core::{classify, spaces::e1};
//!
//! let m = classify(&e1()).unwrap();
//! assert_eq!(m.signature(), (true, false, false));
//! assert_eq!(m.qi.worst_margin, -0.25);
//! ```

pub mod embedding;
pub mod graph;
pub mod io;
pub mod metric;
pub mod search;
pub mod spaces;
pub mod strip;

pub use embedding::{embed, embed_at, gram, EmbeddingError, EmbeddingResult, TOL_EIG, TOL_RES};
pub use graph::{grid_graph, GraphError, GraphSpace, MidpointSet, Projection, ShortestPaths};
pub use io::{read_metric, write_metric, FormatError};
pub use metric::{
    check_cosq, check_pt, check_qi, classify, scan, validate_metric, ClassVerdict, Condition, ConditionReport,
    FiniteMetricSpace, Membership, MetricError, Quadruple, QuadrupleReport, TOL_CLASS, TOL_TRIANGLE,
};
pub use search::{canonicalize, hunt, CatalogError, Witness, WitnessStore};
pub use spaces::{strip_sample, Family, RandomGenerator, SpaceError, StripChart, StripSpec};
pub use strip::{strip_verify, StripError, StripReport};
