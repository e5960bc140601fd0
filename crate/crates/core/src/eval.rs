//! Postfix program evaluation on an explicit operand stack.
//!
//! Operands push their catalog relation; `JOIN` pops the right operand, then
//! the left, and pushes their join. Intermediate results are fully
//! materialized. A well-formed program leaves exactly one relation behind.
//!
//! [`EvalMode::Concurrent`] evaluates the same joins in waves: every join
//! whose children are ready (all joins of equal height) runs in parallel on
//! the rayon pool. Subtrees with no ancestor relation may overlap in time; the
//! join order along any root path is unchanged. Without the `parallel` feature
//! the waves run one join at a time.

use std::str::FromStr;
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::join::{CostCounters, JoinAlgorithm, JoinResultPolicy};
use crate::plan::{PlanTree, RpnProgram, RpnToken};
use crate::relation::{Catalog, Relation};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EvalMode {
    #[default]
    Sequential,
    Concurrent,
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(EvalMode::Sequential),
            "concurrent" => Ok(EvalMode::Concurrent),
            _ => Err(format!("unknown evaluation mode '{s}'")),
        }
    }
}

/// Everything an evaluation needs. `counters` accumulates over every join
/// the evaluation performs.
#[derive(Debug, Clone)]
pub struct EvalContext<'a> {
    pub catalog: &'a Catalog,
    pub algorithm: JoinAlgorithm,
    pub policy: JoinResultPolicy,
    pub counters: CostCounters,
    pub mode: EvalMode,
}

impl<'a> EvalContext<'a> {
    pub fn new(catalog: &'a Catalog, algorithm: JoinAlgorithm) -> Self {
        Self {
            catalog,
            algorithm,
            policy: JoinResultPolicy::default(),
            counters: CostCounters::default(),
            mode: EvalMode::Sequential,
        }
    }

    pub fn with_mode(mut self, mode: EvalMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_policy(mut self, policy: JoinResultPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_counters(mut self, counters: CostCounters) -> Self {
        self.counters = counters;
        self
    }
}

pub fn eval_rpn(program: &RpnProgram, ctx: &mut EvalContext<'_>) -> Result<Relation> {
    program.check()?;
    let result = match ctx.mode {
        EvalMode::Sequential => eval_sequential(program, ctx)?,
        EvalMode::Concurrent => eval_waves(program, ctx)?,
    };
    Ok(Arc::try_unwrap(result).unwrap_or_else(|shared| (*shared).clone()))
}

pub fn eval_plan(plan: &PlanTree, ctx: &mut EvalContext<'_>) -> Result<Relation> {
    eval_rpn(&plan.to_rpn(), ctx)
}

/// Peak operand-stack depth [`eval_rpn`] reaches on `program`.
pub fn max_stack_depth(program: &RpnProgram) -> Result<usize> {
    program.check()
}

fn eval_sequential(program: &RpnProgram, ctx: &mut EvalContext<'_>) -> Result<Arc<Relation>> {
    let mut stack: Vec<Arc<Relation>> = Vec::new();
    for (position, token) in program.tokens().iter().enumerate() {
        match token {
            RpnToken::Operand(name) => stack.push(Arc::clone(ctx.catalog.get(name)?)),
            RpnToken::Join => {
                let (Some(right), Some(left)) = (stack.pop(), stack.pop()) else {
                    return Err(Error::StackUnderflow { position });
                };
                let joined = ctx
                    .algorithm
                    .join(&left, &right, &ctx.policy, &mut ctx.counters)?;
                stack.push(Arc::new(joined));
            }
        }
    }
    match stack.len() {
        1 => Ok(stack.pop().expect("one operand")),
        0 => Err(Error::EmptyProgram),
        count => Err(Error::LeftoverOperands { count }),
    }
}

/// A JOIN token and the tokens of its two children.
struct JoinNode {
    token: usize,
    left: usize,
    right: usize,
}

/// Groups a checked program's joins by height; wave `h` holds the joins whose
/// deeper child has height `h`.
fn join_waves(program: &RpnProgram) -> Vec<Vec<JoinNode>> {
    let tokens = program.tokens();
    let mut height = vec![0usize; tokens.len()];
    let mut stack: Vec<usize> = Vec::new();
    let mut waves: Vec<Vec<JoinNode>> = Vec::new();
    for (token, t) in tokens.iter().enumerate() {
        if let RpnToken::Join = t {
            let right = stack.pop().expect("checked program");
            let left = stack.pop().expect("checked program");
            let h = height[left].max(height[right]);
            height[token] = h + 1;
            if waves.len() <= h {
                waves.resize_with(h + 1, Vec::new);
            }
            waves[h].push(JoinNode { token, left, right });
        }
        stack.push(token);
    }
    waves
}

fn eval_waves(program: &RpnProgram, ctx: &mut EvalContext<'_>) -> Result<Arc<Relation>> {
    let tokens = program.tokens();
    let mut slots: Vec<Option<Arc<Relation>>> = Vec::with_capacity(tokens.len());
    for token in tokens {
        slots.push(match token {
            RpnToken::Operand(name) => Some(Arc::clone(ctx.catalog.get(name)?)),
            RpnToken::Join => None,
        });
    }

    for wave in join_waves(program) {
        let tasks: Vec<(usize, Arc<Relation>, Arc<Relation>)> = wave
            .iter()
            .map(|node| {
                let left = slots[node.left].take().expect("child evaluated");
                let right = slots[node.right].take().expect("child evaluated");
                (node.token, left, right)
            })
            .collect();

        let algorithm = ctx.algorithm;
        let policy = ctx.policy;
        let template = ctx.counters.fresh();
        let run = |(token, left, right): (usize, Arc<Relation>, Arc<Relation>)| {
            let mut counters = template;
            algorithm
                .join(&left, &right, &policy, &mut counters)
                .map(|joined| (token, joined, counters))
        };

        #[cfg(feature = "parallel")]
        let results: Vec<Result<_>> = tasks.into_par_iter().map(run).collect();
        #[cfg(not(feature = "parallel"))]
        let results: Vec<Result<_>> = tasks.into_iter().map(run).collect();

        for result in results {
            let (token, joined, counters) = result?;
            ctx.counters.absorb(&counters);
            slots[token] = Some(Arc::new(joined));
        }
    }

    Ok(slots
        .pop()
        .flatten()
        .expect("a checked program's last token is its root"))
}
