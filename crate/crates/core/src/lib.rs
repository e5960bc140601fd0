//! An in-memory multi-join engine for integer-keyed relations.
//!
//! Multi-join queries are binary plan trees ([`plan::PlanTree`]) whose leaves
//! name catalog relations. A tree is flattened without recursion into a
//! postfix program ([`plan::RpnProgram`]) and that program is run on an
//! explicit operand stack ([`eval::eval_rpn`]). Every internal node is an
//! equi-join on the tuple key, executed by one of the algorithms in [`join`]:
//! sort-merge (the default, sorting with [`sort::quicksort_by_key`]) or one of
//! the nested-loop, block, rocking and hash baselines.
//!
//! [`bench`] sweeps a tuples × relations grid for linear and bushy shapes and
//! writes the measurements as CSV.

pub mod bench;
pub mod error;
pub mod eval;
pub mod join;
pub mod plan;
pub mod relation;
pub mod sort;

pub use error::{Error, Result};
pub use eval::{eval_plan, eval_rpn, max_stack_depth, EvalContext, EvalMode};
pub use join::{CostCounters, JoinAlgorithm, JoinResultPolicy};
pub use plan::{make_bushy_plan, make_linear_plan, parse_plan, PlanTree, RpnProgram, RpnToken};
pub use relation::{Catalog, Relation, Tuple};
