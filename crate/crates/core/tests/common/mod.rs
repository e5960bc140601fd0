//! Brute-force oracles and random instance builders shared by the integration
//! tests. Nothing here calls the library's join, sort or traversal code.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpnjoin::relation::generate_relation;
use rpnjoin::{Catalog, PlanTree, Relation, Tuple};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("R{i}")).collect()
}

/// Every pair with equal keys, payloads concatenated outer then inner.
pub fn brute_force_join(outer: &[Tuple], inner: &[Tuple]) -> Vec<Tuple> {
    let mut out = Vec::new();
    for r in outer {
        for s in inner {
            if r.key == s.key {
                let mut payload = r.payload.clone();
                payload.extend_from_slice(&s.payload);
                out.push(Tuple::new(r.key, payload));
            }
        }
    }
    out
}

/// `((R1 ⋈ R2) ⋈ R3) ⋈ …` by brute force.
pub fn left_fold_oracle(relations: &[&Relation]) -> Vec<Tuple> {
    let mut acc = relations[0].to_tuples();
    for r in &relations[1..] {
        acc = brute_force_join(&acc, &r.to_tuples());
    }
    acc
}

pub fn sorted(mut rows: Vec<Tuple>) -> Vec<Tuple> {
    rows.sort();
    rows
}

pub fn histogram(keys: &[i64]) -> HashMap<i64, u128> {
    let mut h = HashMap::new();
    for &k in keys {
        *h.entry(k).or_insert(0u128) += 1;
    }
    h
}

/// `Σ_v Π_i c_i(v)`: the size of the equi-join of all the given relations.
pub fn k_way_cardinality(relations: &[&Relation]) -> u128 {
    let histograms: Vec<_> = relations.iter().map(|r| histogram(r.keys())).collect();
    histograms[0]
        .iter()
        .map(|(key, &count)| {
            histograms[1..]
                .iter()
                .map(|h| h.get(key).copied().unwrap_or(0))
                .fold(count, |acc, c| acc * c)
        })
        .sum()
}

/// Random catalog `R1..Rk`, each with `0..=max_tuples` tuples and keys in
/// `[0, key_hi)`.
pub fn random_catalog(rng: &mut impl Rng, k: usize, max_tuples: usize, key_hi: i64) -> Catalog {
    let relations = names(k).into_iter().map(|name| {
        let count = rng.random_range(0..=max_tuples);
        generate_relation(name, count, 0, key_hi, rng.random()).unwrap()
    });
    Catalog::from_relations(relations).unwrap()
}

/// Random binary tree over `R1..Rk` (leaf order preserved) built by joining
/// randomly chosen adjacent subtrees.
pub fn random_tree(rng: &mut impl Rng, k: usize) -> PlanTree {
    let mut forest: Vec<PlanTree> = names(k).into_iter().map(PlanTree::leaf).collect();
    while forest.len() > 1 {
        let i = rng.random_range(0..forest.len() - 1);
        let right = forest.remove(i + 1);
        let left = forest.remove(i);
        forest.insert(i, PlanTree::join(left, right));
    }
    forest.pop().unwrap()
}

/// Every internal node's result size for a postfix program, computed from key
/// histograms with an explicit stack of histogram maps.
pub fn subtree_cardinalities(rpn: &str, catalog: &Catalog) -> Vec<u128> {
    let mut stack: Vec<HashMap<i64, u128>> = Vec::new();
    let mut sizes = Vec::new();
    for token in rpn.split_whitespace() {
        if token == "JOIN" {
            let right = stack.pop().unwrap();
            let left = stack.pop().unwrap();
            let joined: HashMap<i64, u128> = left
                .iter()
                .filter_map(|(k, &a)| right.get(k).map(|&b| (*k, a * b)))
                .collect();
            sizes.push(joined.values().sum());
            stack.push(joined);
        } else {
            stack.push(histogram(catalog.get(token).unwrap().keys()));
        }
    }
    sizes
}
