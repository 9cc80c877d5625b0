//! Lower bound for the semimartingale-topology distance
//! `sup_{|theta| <= 1} E[|(theta . (X - Y))_T| ^ 1]` over a finite family of
//! predictable integrands.

use rayon::prelude::*;

use super::PathArray;
use crate::error::{Error, Result};
use crate::stats::Estimate;

/// Predictable `+-1` integrand rules. Each sees only increments of
/// `D = X - Y` strictly before the current step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryRule {
    Long,
    Short,
    /// Sign of the previous increment of `D`.
    PreviousIncrement,
    /// Sign of the running integral `(theta . D)` so far.
    RunningValue,
}

pub const DEFAULT_ADVERSARIES: [AdversaryRule; 4] = [
    AdversaryRule::Long,
    AdversaryRule::Short,
    AdversaryRule::PreviousIncrement,
    AdversaryRule::RunningValue,
];

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn integrate(rule: AdversaryRule, d: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut prev = 0.0;
    for k in 0..d.len() - 1 {
        let inc = d[k + 1] - d[k];
        let theta = match rule {
            AdversaryRule::Long => 1.0,
            AdversaryRule::Short => -1.0,
            AdversaryRule::PreviousIncrement => sign(prev),
            AdversaryRule::RunningValue => sign(acc),
        };
        acc += theta * inc;
        prev = inc;
    }
    acc
}

/// Best estimate over the family. Every rule is run on both `X - Y` and
/// `Y - X`, which makes the result exactly symmetric.
pub fn semimartingale_distance(x: &PathArray, y: &PathArray, rules: &[AdversaryRule]) -> Result<Estimate> {
    if rules.is_empty() {
        return Err(Error::Empty("adversary family"));
    }
    if x.nodes() != y.nodes() || x.paths() != y.paths() {
        return Err(Error::LengthMismatch {
            expected: x.as_slice().len(),
            found: y.as_slice().len(),
        });
    }
    let mut best: Option<Estimate> = None;
    for &rule in rules {
        for flip in [1.0, -1.0] {
            let samples: Vec<f64> = (0..x.paths())
                .into_par_iter()
                .map(|i| {
                    let d: Vec<f64> = x.row(i).iter().zip(y.row(i)).map(|(a, b)| flip * (a - b)).collect();
                    integrate(rule, &d).abs().min(1.0)
                })
                .collect();
            let e = Estimate::from_samples(&samples);
            if best.map_or(true, |b| e.mean > b.mean) {
                best = Some(e);
            }
        }
    }
    Ok(best.expect("nonempty family"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(rows: &[&[f64]]) -> PathArray {
        PathArray::from_vec(rows[0].len(), rows.concat()).unwrap()
    }

    #[test]
    fn identical_inputs_give_zero() {
        let x = arr(&[&[0.0, 0.3, -0.2], &[0.0, 1.0, 2.0]]);
        let e = semimartingale_distance(&x, &x, &DEFAULT_ADVERSARIES).unwrap();
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn symmetric_and_capped() {
        let x = arr(&[&[0.0, 3.0, -2.0, 0.5], &[0.0, 0.1, 0.05, 0.2]]);
        let y = arr(&[&[0.0, 0.0, 0.0, 0.0], &[0.0, -0.1, 0.1, 0.0]]);
        let a = semimartingale_distance(&x, &y, &DEFAULT_ADVERSARIES).unwrap();
        let b = semimartingale_distance(&y, &x, &DEFAULT_ADVERSARIES).unwrap();
        assert_eq!(a.mean, b.mean);
        assert!(a.mean <= 1.0);
    }

    #[test]
    fn empty_family_rejected() {
        let x = arr(&[&[0.0, 1.0]]);
        assert!(semimartingale_distance(&x, &x, &[]).is_err());
    }
}
