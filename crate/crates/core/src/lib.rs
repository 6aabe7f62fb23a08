//! Minimum-cost repairs of inconsistent metric databases.
//!
//! A metric database is a set of attribute-labelled cells, each sitting on a
//! point of a metric space. A coincidence constraint says, point by point,
//! which per-attribute cell counts may coincide there. A repair moves cells so
//! that every point becomes legal, and pays the weighted distance moved.
//!
//! The crate provides:
//!
//! * [`tree_solver`]: an exact dynamic program for tree metrics, which also
//!   covers line and discrete metrics through [`tree::line_to_tree`] and
//!   [`tree::discrete_to_star`];
//! * [`approx`]: a randomized best-of-k solver for general finite metrics on
//!   top of sampled dominating trees ([`embed`]), and the non-inventive
//!   reduction for infinite metrics;
//! * [`bounded`]: exact repairs on the line when each cell may move at most
//!   `weight * tau`;
//! * [`oracle`]: an exhaustive solver used as ground truth in tests;
//! * [`gen`]: random and adversarial instance generators;
//! * [`instance`]: the JSON instance format shared by the command-line tool.

pub mod approx;
pub mod bounded;
pub mod embed;
pub mod error;
pub mod gen;
pub mod grid;
pub mod instance;
pub mod metric;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod tree;
pub mod tree_solver;
pub mod validate;

pub use error::{RepairError, Result};
pub use metric::{build_metric, Distance, MetricKind, MetricSpec, MetricView};
pub use model::{
    check_consistency, eval_membership, profile_of, repair_cost, AttributeWeights, Cell,
    Constraint, Database, Profile, ProfileExpr, Repair, Signature, Weight, COST_TOLERANCE,
};
pub use tree::TreeMetric;
