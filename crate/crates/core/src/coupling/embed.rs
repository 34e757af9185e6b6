//! Dubins-style embedding of a finitely supported centered law: repeated
//! two-point exits, each splitting the current atom set at its weighted
//! median.

use super::brownian::BrownianGrid;
use crate::error::{invalid, Error, Result};
use crate::martingale::DiscreteLaw;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Embedded {
    /// Brownian time spent.
    pub stop_time: f64,
    /// Realized increment, exactly one of the law's atom values.
    pub value: f64,
}

/// Sorted, merged support with prefix sums for O(1) conditional means.
struct Tree {
    values: Vec<f64>,
    cum_w: Vec<f64>,
    cum_wv: Vec<f64>,
}

impl Tree {
    /// Builds the tree and maps `target` (an index into the law) to its
    /// sorted position.
    fn new(law: &DiscreteLaw, target: Option<usize>) -> Result<(Tree, Option<usize>)> {
        let total = law.total_weight();
        if !(total > 0.0) {
            return Err(invalid("law has no mass"));
        }
        if let Some(a) = law.atoms.iter().find(|a| a.weight < 0.0) {
            return Err(Error::NegativeWeight(a.weight));
        }
        let mean = law.mean();
        if mean.abs() > 1e-10 * law.spread().max(1.0) {
            return Err(Error::Uncentered(mean));
        }
        let target_value = match target {
            Some(t) => {
                let a = law.atoms.get(t).ok_or_else(|| invalid("target atom out of range"))?;
                if a.weight <= 0.0 {
                    return Err(invalid("target atom has zero weight"));
                }
                Some(a.value)
            }
            None => None,
        };
        let mut atoms: Vec<(f64, f64)> = law.atoms.iter().filter(|a| a.weight > 0.0).map(|a| (a.value, a.weight / total)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, w) in atoms {
            match values.last() {
                Some(last) if *last == v => *weights.last_mut().unwrap() += w,
                _ => {
                    values.push(v);
                    weights.push(w);
                }
            }
        }
        let mut cum_w = vec![0.0];
        let mut cum_wv = vec![0.0];
        for (v, w) in values.iter().zip(&weights) {
            cum_w.push(cum_w.last().unwrap() + w);
            cum_wv.push(cum_wv.last().unwrap() + w * v);
        }
        let pos = target_value.map(|tv| values.iter().position(|v| *v == tv).expect("target value is in the support"));
        Ok((Tree { values, cum_w, cum_wv }, pos))
    }

    fn weight(&self, i: usize, j: usize) -> f64 {
        self.cum_w[j] - self.cum_w[i]
    }

    fn mean(&self, i: usize, j: usize) -> f64 {
        if j == i + 1 {
            return self.values[i];
        }
        (self.cum_wv[j] - self.cum_wv[i]) / self.weight(i, j)
    }

    /// First s in (i, j) with weight(i, s) ≥ weight(i, j)/2.
    fn split(&self, i: usize, j: usize) -> usize {
        let half = self.cum_w[i] + 0.5 * self.weight(i, j);
        let s = self.cum_w[i + 1..j].partition_point(|c| *c < half) + i + 1;
        s.clamp(i + 1, j - 1)
    }
}

fn run(bg: &mut BrownianGrid, law: &DiscreteLaw, target: Option<usize>) -> Result<Embedded> {
    let (tree, pos) = Tree::new(law, target)?;
    let base = bg.value();
    let t0 = bg.time();
    let (mut i, mut j) = (0, tree.values.len());
    // the path sits at base + mean(i, j), which is base + 0 at the start
    while j - i > 1 {
        let s = tree.split(i, j);
        let (a, b) = (tree.mean(i, s), tree.mean(s, j));
        if !(a < b) {
            break;
        }
        let up = match pos {
            Some(p) => {
                let want = p >= s;
                bg.run_to_exit_at(base + a, base + b, want);
                want
            }
            None => bg.run_to_exit(base + a, base + b),
        };
        if up {
            i = s;
        } else {
            j = s;
        }
    }
    let value = tree.values[i];
    bg.reset_value(base + value);
    Ok(Embedded { stop_time: bg.time() - t0, value })
}

/// Embed one draw of a centered law into the path; the realized value is
/// random with the law's distribution.
pub fn embed_increment(bg: &mut BrownianGrid, law: &DiscreteLaw) -> Result<Embedded> {
    run(bg, law, None)
}

/// Embed the law conditioned on realizing atom `target`: the path is drawn
/// from its conditional law given that outcome.
pub fn embed_conditioned(bg: &mut BrownianGrid, law: &DiscreteLaw, target: usize) -> Result<Embedded> {
    run(bg, law, Some(target))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_law_takes_no_time() {
        let mut bg = BrownianGrid::new(1, 1e-4);
        let law = DiscreteLaw::from_pairs(&[(0.0, 1.0)]).unwrap();
        let e = embed_increment(&mut bg, &law).unwrap();
        assert_eq!(e, Embedded { stop_time: 0.0, value: 0.0 });
    }

    #[test]
    fn rejects_bad_laws() {
        let mut bg = BrownianGrid::new(1, 1e-4);
        assert!(matches!(DiscreteLaw::from_pairs(&[(1.0, -0.5), (-1.0, 1.5)]), Err(Error::NegativeWeight(_))));
        let off = DiscreteLaw::from_pairs(&[(1.0, 0.5), (0.0, 0.5)]).unwrap();
        assert!(matches!(embed_increment(&mut bg, &off), Err(Error::Uncentered(_))));
    }

    #[test]
    fn conditioned_embedding_hits_the_target() {
        let mut bg = BrownianGrid::new(5, 1e-3);
        let law = DiscreteLaw::from_pairs(&[(-1.0, 0.5), (0.0, 0.25), (2.0, 0.25)]).unwrap();
        for t in 0..3 {
            let start = bg.value();
            let e = embed_conditioned(&mut bg, &law, t).unwrap();
            assert_eq!(e.value, law.atoms[t].value);
            assert_eq!(bg.value(), start + e.value);
        }
    }
}
