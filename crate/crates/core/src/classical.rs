//! Fidelities of probability distributions (equivalently, commuting states).

use crate::error::{Error, Result};
use crate::states::ProbabilityVector;

/// `r ≥ 2` probability vectors over a common alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTuple {
    dists: Vec<ProbabilityVector>,
}

impl ClassicalTuple {
    pub fn new(dists: Vec<ProbabilityVector>) -> Result<Self> {
        if dists.len() < 2 {
            return Err(Error::InvalidArgument(format!("a tuple needs at least 2 distributions, got {}", dists.len())));
        }
        let n = dists[0].len();
        if dists.iter().any(|p| p.len() != n) {
            return Err(Error::dims("distributions over alphabets of different size"));
        }
        Ok(Self { dists })
    }

    pub fn from_vecs(vs: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(vs.into_iter().map(ProbabilityVector::new).collect::<Result<_>>()?)
    }

    pub fn r(&self) -> usize {
        self.dists.len()
    }

    pub fn alphabet(&self) -> usize {
        self.dists[0].len()
    }

    pub fn dists(&self) -> &[ProbabilityVector] {
        &self.dists
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&i| self.dists[i].clone()).collect())
    }

    /// Pushes every distribution through a column-stochastic `w[y][x] = W(y|x)`.
    pub fn apply_stochastic(&self, w: &[Vec<f64>]) -> Result<Self> {
        Self::new(self.dists.iter().map(|p| apply_stochastic(w, p)).collect::<Result<_>>()?)
    }
}

fn check_len(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::dims(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    Ok(())
}

/// `Σ_x √(p(x) q(x))`
pub fn bhattacharyya(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    check_len(p, q)?;
    Ok(p.probs().iter().zip(q.probs()).map(|(a, b)| (a * b).sqrt()).sum::<f64>().min(1.0))
}

/// `‖√p − √q‖_2`
pub fn hellinger_distance(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    check_len(p, q)?;
    Ok(p.probs().iter().zip(q.probs()).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum::<f64>().sqrt())
}

/// Sum in ascending order, so the result does not depend on input order.
fn sorted_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// `Σ_x (Π_i p_i(x))^{1/r}`; any zero factor kills the term. Factors are
/// multiplied in sorted order, so the value is exactly permutation invariant.
pub fn matusita(t: &ClassicalTuple) -> f64 {
    let inv_r = 1.0 / t.r() as f64;
    let mut total = 0.0;
    let mut factors = Vec::with_capacity(t.r());
    for x in 0..t.alphabet() {
        factors.clear();
        factors.extend(t.dists().iter().map(|p| p.probs()[x]));
        if factors.contains(&0.0) {
            continue;
        }
        factors.sort_by(f64::total_cmp);
        total += factors.iter().map(|px| px.powf(inv_r)).product::<f64>();
    }
    total.min(1.0)
}

/// Mean Bhattacharyya overlap over unordered pairs.
pub fn avg_pairwise_classical(t: &ClassicalTuple) -> f64 {
    let r = t.r();
    let mut pairs = Vec::with_capacity(r * (r - 1) / 2);
    for i in 0..r {
        for j in i + 1..r {
            pairs.push(bhattacharyya(&t.dists[i], &t.dists[j]).expect("tuple has uniform length"));
        }
    }
    2.0 * sorted_sum(pairs) / (r * (r - 1)) as f64
}

/// Mean Matusita fidelity over all `k`-subsets.
pub fn avg_kwise_classical(t: &ClassicalTuple, k: usize) -> Result<f64> {
    if k < 2 || k > t.r() {
        return Err(Error::InvalidArgument(format!("k = {k} outside 2..={}", t.r())));
    }
    let subsets = combinations(t.r(), k);
    let total = sorted_sum(subsets.iter().map(|s| matusita(&t.subset(s).expect("valid subset"))).collect());
    Ok(total / subsets.len() as f64)
}

/// `Σ_x Π_i p_i(x)^{s_i}` with `0^0 = 1`.
pub fn hellinger_transform(t: &ClassicalTuple, s: &ProbabilityVector) -> Result<f64> {
    if s.len() != t.r() {
        return Err(Error::dims(format!("{} weights for {} distributions", s.len(), t.r())));
    }
    let mut total = 0.0;
    for x in 0..t.alphabet() {
        let mut term = 1.0;
        for (p, &si) in t.dists().iter().zip(s.probs()) {
            if si == 0.0 {
                continue;
            }
            let px = p.probs()[x];
            if px == 0.0 {
                term = 0.0;
                break;
            }
            term *= px.powf(si);
        }
        total += term;
    }
    Ok(total)
}

/// `q(y) = Σ_x W(y|x) p(x)` for a column-stochastic `w[y][x]`.
pub fn apply_stochastic(w: &[Vec<f64>], p: &ProbabilityVector) -> Result<ProbabilityVector> {
    if w.iter().any(|row| row.len() != p.len()) {
        return Err(Error::dims("stochastic matrix columns must match the input alphabet"));
    }
    ProbabilityVector::normalized(w.iter().map(|row| row.iter().zip(p.probs()).map(|(a, b)| a * b).sum()).collect())
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{random_probability_vector, rng_from_seed};

    fn pv(v: Vec<f64>) -> ProbabilityVector {
        ProbabilityVector::new(v).unwrap()
    }

    fn zero_overlap_triple() -> ClassicalTuple {
        ClassicalTuple::from_vecs(vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]]).unwrap()
    }

    #[test]
    fn bhattacharyya_examples() {
        let u = ProbabilityVector::uniform(4);
        assert!((bhattacharyya(&u, &u).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(bhattacharyya(&pv(vec![1.0, 0.0]), &pv(vec![0.0, 1.0])).unwrap(), 0.0);
        let f = bhattacharyya(&pv(vec![0.5, 0.5]), &pv(vec![0.25, 0.75])).unwrap();
        assert!((f - (0.125f64.sqrt() + 0.375f64.sqrt())).abs() < 1e-15);
        assert!((f - 0.965926).abs() < 1e-6);
    }

    #[test]
    fn matusita_examples() {
        let p = pv(vec![0.2, 0.3, 0.5]);
        let t = ClassicalTuple::new(vec![p.clone(), p.clone(), p]).unwrap();
        assert!((matusita(&t) - 1.0).abs() < 1e-15);
        assert_eq!(matusita(&zero_overlap_triple()), 0.0);

        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let t = ClassicalTuple::new((0..3).map(|_| random_probability_vector(5, &mut rng)).collect()).unwrap();
            // product first, one root afterwards
            let oracle: f64 = (0..5).map(|x| t.dists().iter().map(|p| p.probs()[x]).product::<f64>().cbrt()).sum();
            assert!((matusita(&t) - oracle).abs() < 1e-14);
            let pair = t.subset(&[0, 1]).unwrap();
            assert!((matusita(&pair) - bhattacharyya(&t.dists()[0], &t.dists()[1]).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn avg_pairwise_examples() {
        let t = zero_overlap_triple();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((bhattacharyya(&t.dists()[i], &t.dists()[j]).unwrap() - 0.5).abs() < 1e-15);
        }
        assert!((avg_pairwise_classical(&t) - 0.5).abs() < 1e-15);
        let p = pv(vec![0.1, 0.9]);
        let q = pv(vec![0.6, 0.4]);
        let t = ClassicalTuple::new(vec![p.clone(), q.clone()]).unwrap();
        assert_eq!(avg_pairwise_classical(&t), bhattacharyya(&p, &q).unwrap());
    }

    #[test]
    fn kwise_examples() {
        let mut rng = rng_from_seed(9);
        let t = ClassicalTuple::new((0..4).map(|_| random_probability_vector(3, &mut rng)).collect()).unwrap();
        assert!((avg_kwise_classical(&t, 2).unwrap() - avg_pairwise_classical(&t)).abs() < 1e-15);
        assert!((avg_kwise_classical(&t, 4).unwrap() - matusita(&t)).abs() < 1e-15);
        let subsets = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
        let oracle: f64 = subsets.iter().map(|s| matusita(&t.subset(s).unwrap())).sum::<f64>() / 4.0;
        assert!((avg_kwise_classical(&t, 3).unwrap() - oracle).abs() < 1e-15);
        assert!(avg_kwise_classical(&t, 1).is_err());
        assert!(avg_kwise_classical(&t, 5).is_err());
    }

    #[test]
    fn hellinger_transform_examples() {
        let mut rng = rng_from_seed(13);
        let t = ClassicalTuple::new((0..3).map(|_| random_probability_vector(4, &mut rng)).collect()).unwrap();
        let h = hellinger_transform(&t, &ProbabilityVector::uniform(3)).unwrap();
        assert!((h - matusita(&t)).abs() < 1e-14);

        let full = ClassicalTuple::from_vecs(vec![vec![0.3, 0.7], vec![1.0, 0.0]]).unwrap();
        assert_eq!(hellinger_transform(&full, &ProbabilityVector::point_mass(2, 0)).unwrap(), 1.0);

        // s = (2/3, 1/3) is Matusita of (p1, p1, p2)
        let s = pv(vec![2.0 / 3.0, 1.0 / 3.0]);
        let pair = t.subset(&[0, 1]).unwrap();
        let rep = t.subset(&[0, 0, 1]).unwrap();
        assert!((hellinger_transform(&pair, &s).unwrap() - matusita(&rep)).abs() < 1e-14);
    }

    #[test]
    fn hellinger_distance_examples() {
        let p = pv(vec![0.2, 0.8]);
        assert_eq!(hellinger_distance(&p, &p).unwrap(), 0.0);
        let d = hellinger_distance(&pv(vec![1.0, 0.0]), &pv(vec![0.0, 1.0])).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            let a = random_probability_vector(5, &mut rng);
            let b = random_probability_vector(5, &mut rng);
            let lhs = hellinger_distance(&a, &b).unwrap().powi(2);
            let rhs = 2.0 * (1.0 - bhattacharyya(&a, &b).unwrap());
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(5, 5), vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(combinations(4, 3)[0], vec![0, 1, 2]);
    }
}
