use rand::Rng;

use crate::classical::ClassicalTuple;
use crate::error::Result;
use crate::states::{
    random_density_with, random_probability_vector, random_sparse_probability_vector, SeededRng, StateTuple,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TupleShape {
    /// Each state gets a uniformly random rank in `1..=d`.
    MixedRank,
    FullRank,
    Pure,
}

pub fn random_tuple(rng: &mut SeededRng, r: usize, d: usize, shape: TupleShape) -> Result<StateTuple> {
    let states = (0..r)
        .map(|_| {
            let rank = match shape {
                TupleShape::MixedRank => rng.random_range(1..=d),
                TupleShape::FullRank => d,
                TupleShape::Pure => 1,
            };
            random_density_with(d, rank, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    StateTuple::new(states)
}

/// Distributions over `n` letters; about a third of them get zero entries.
pub fn random_classical(rng: &mut SeededRng, r: usize, n: usize) -> Result<ClassicalTuple> {
    let dists = (0..r)
        .map(|_| {
            if rng.random::<f64>() < 0.3 {
                random_sparse_probability_vector(n, 0.3, rng)
            } else {
                random_probability_vector(n, rng)
            }
        })
        .collect();
    ClassicalTuple::new(dists)
}

/// Column-stochastic `w[y][x]` with `m` outputs and `n` inputs.
pub fn random_stochastic(rng: &mut SeededRng, m: usize, n: usize) -> Vec<Vec<f64>> {
    let cols: Vec<Vec<f64>> = (0..n).map(|_| random_probability_vector(m, rng).probs().to_vec()).collect();
    (0..m).map(|y| (0..n).map(|x| cols[x][y]).collect()).collect()
}
