//! Deterministic Nelder–Mead over a coordinate box.
//!
//! Trial points are scored at their projection onto the box plus the squared
//! distance to it, so the simplex can leave the box without stalling on a
//! face while the optimum stays inside. Coordinates whose
//! lower and upper bounds coincide are held fixed and the simplex lives in
//! the remaining free dimensions. Ties in objective value are broken
//! lexicographically on the coefficient vector, so the incumbent is a pure
//! function of the objective and the budget.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CoefficientBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::LengthMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !l.is_finite() || !u.is_finite() {
                return Err(invalid("box", "bounds must be finite"));
            }
            if l > u {
                return Err(invalid("box", format!("lower bound {l} exceeds upper bound {u}")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The single point `{value}` in every coordinate.
    pub fn singleton(point: Vec<f64>) -> Self {
        Self {
            lower: point.clone(),
            upper: point,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    fn free(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.lower[i] < self.upper[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimumReport {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

fn key(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

#[derive(Clone)]
struct Vertex {
    x: Vec<f64>,
    /// ranking score: value at the projection plus squared distance to the box
    score: f64,
    value: f64,
}

fn cmp_vertex(a: &Vertex, b: &Vertex) -> Ordering {
    a.score.total_cmp(&b.score).then_with(|| {
        for (x, y) in a.x.iter().zip(&b.x) {
            match x.total_cmp(y) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    })
}

/// Minimizes `f` starting from `start` (clamped into the box). `budget`
/// caps the number of objective evaluations. NaN values count as `+inf`.
pub fn nelder_mead<F>(f: F, start: &[f64], bounds: &CoefficientBox, budget: usize) -> Result<OptimumReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    if start.len() != bounds.dim() {
        return Err(Error::LengthMismatch {
            expected: bounds.dim(),
            found: start.len(),
        });
    }
    let mut x0 = start.to_vec();
    bounds.clamp(&mut x0);
    let free = bounds.free();
    let full = |sub: &[f64]| {
        let mut x = x0.clone();
        for (j, &i) in free.iter().enumerate() {
            x[i] = sub[j];
        }
        bounds.clamp(&mut x);
        x
    };
    let score = |sub: &[f64]| -> Vertex {
        let value = f(&full(sub));
        let dist2: f64 = free
            .iter()
            .zip(sub)
            .map(|(&i, v)| (v - v.clamp(bounds.lower[i], bounds.upper[i])).powi(2))
            .sum();
        Vertex {
            x: sub.to_vec(),
            score: key(value) + dist2,
            value,
        }
    };
    if free.is_empty() || budget == 1 {
        let v = f(&x0);
        return Ok(OptimumReport {
            point: x0,
            value: v,
            evaluations: 1,
        });
    }

    let m = free.len();
    let width: Vec<f64> = free.iter().map(|&i| bounds.upper[i] - bounds.lower[i]).collect();
    let build = |center: &[f64], scale: f64| -> Vec<Vec<f64>> {
        let mut simplex = vec![center.to_vec()];
        for (j, &i) in free.iter().enumerate() {
            let c = center[j].clamp(bounds.lower[i], bounds.upper[i]);
            let step = scale * width[j];
            let mut v = center.to_vec();
            // step toward the side with more room
            v[j] = if bounds.upper[i] - c >= c - bounds.lower[i] { c + step } else { c - step };
            simplex.push(v);
        }
        simplex
    };
    let mut center: Vec<f64> = free.iter().map(|&i| x0[i]).collect();
    let simplex = build(&center, 0.25);
    let take = simplex.len().min(budget);
    let mut verts: Vec<Vertex> = simplex[..take].par_iter().map(|s| score(s)).collect();
    let mut evals = take;
    if take < simplex.len() {
        verts.sort_by(cmp_vertex);
        let best = verts.swap_remove(0);
        return Ok(OptimumReport {
            point: full(&best.x),
            value: best.value,
            evaluations: evals,
        });
    }

    let eval = |p: &[f64], evals: &mut usize| -> Vertex {
        *evals += 1;
        score(p)
    };

    let mut last_restart = f64::INFINITY;
    let mut best_score = f64::INFINITY;
    let mut stalled = 0usize;
    while evals < budget {
        verts.sort_by(cmp_vertex);
        let worst = verts[m].clone();
        let mut centroid = vec![0.0; m];
        for v in &verts[..m] {
            for j in 0..m {
                centroid[j] += v.x[j] / m as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { (0..m).map(|j| centroid[j] + t * (worst.x[j] - centroid[j])).collect() };
        let refl = eval(&along(-1.0), &mut evals);
        if refl.score < verts[0].score {
            if evals >= budget {
                verts[m] = refl;
                break;
            }
            let exp = eval(&along(-2.0), &mut evals);
            verts[m] = if exp.score < refl.score { exp } else { refl };
        } else if refl.score < verts[m - 1].score {
            verts[m] = refl;
        } else {
            if evals >= budget {
                if cmp_vertex(&refl, &worst) == Ordering::Less {
                    verts[m] = refl;
                }
                break;
            }
            let outside = refl.score < worst.score;
            let con = eval(&along(if outside { -0.5 } else { 0.5 }), &mut evals);
            let target = if outside { refl.score } else { worst.score };
            if con.score <= target {
                verts[m] = con;
            } else {
                // shrink toward the best vertex
                let best = verts[0].x.clone();
                for v in verts.iter_mut().skip(1) {
                    if evals >= budget {
                        break;
                    }
                    let p: Vec<f64> = (0..m).map(|j| best[j] + 0.5 * (v.x[j] - best[j])).collect();
                    *v = eval(&p, &mut evals);
                }
            }
        }
        // a collapsed or stalled simplex is rebuilt around the best vertex as
        // long as the previous restart paid off
        verts.sort_by(cmp_vertex);
        if verts[0].score < best_score {
            best_score = verts[0].score;
            stalled = 0;
        } else {
            stalled += 1;
        }
        let diameter = verts[1..]
            .iter()
            .flat_map(|v| (0..m).map(|j| (v.x[j] - verts[0].x[j]).abs() / width[j]))
            .fold(0.0, f64::max);
        let collapsed = diameter < 1e-9;
        if collapsed || stalled > 5 * (m + 1) {
            stalled = 0;
            if verts[0].score >= last_restart {
                if collapsed {
                    break;
                }
                continue;
            }
            last_restart = verts[0].score;
            // the restart simplex is sized by how far the last run travelled
            let moved = (0..m).map(|j| (verts[0].x[j] - center[j]).abs() / width[j]).fold(0.0, f64::max);
            center = verts[0].x.clone();
            let fresh = build(&center, (2.0 * moved).clamp(1e-6, 0.25));
            for (slot, p) in verts.iter_mut().skip(1).zip(&fresh[1..]) {
                if evals >= budget {
                    break;
                }
                *slot = eval(p, &mut evals);
            }
        }
    }
    verts.sort_by(cmp_vertex);
    let best = verts.swap_remove(0);
    Ok(OptimumReport {
        point: full(&best.x),
        value: best.value,
        evaluations: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum_inside_box() {
        let b = CoefficientBox::new(vec![-5.0, -5.0], vec![5.0, 5.0]).unwrap();
        let r = nelder_mead(|x| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2), &[0.0, 0.0], &b, 400).unwrap();
        assert!((r.point[0] - 1.0).abs() < 1e-3);
        assert!((r.point[1] + 0.5).abs() < 1e-3);
        assert!(r.evaluations <= 400);
    }

    #[test]
    fn minimum_on_boundary_is_clamped() {
        let b = CoefficientBox::new(vec![0.0], vec![1.0]).unwrap();
        let r = nelder_mead(|x| x[0], &[0.7], &b, 100).unwrap();
        assert_eq!(r.point, vec![0.0]);
    }

    #[test]
    fn fixed_coordinates_stay_fixed() {
        let b = CoefficientBox::new(vec![2.0, -1.0], vec![2.0, 1.0]).unwrap();
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2) + x[1].powi(2), &[0.0, 0.5], &b, 200).unwrap();
        assert_eq!(r.point[0], 2.0);
        assert!(r.point[1].abs() < 1e-3);
    }

    #[test]
    fn singleton_box_evaluates_once() {
        let r = nelder_mead(|x| x[0] + x[1], &[9.0, 9.0], &CoefficientBox::singleton(vec![0.0, 0.0]), 50).unwrap();
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn deterministic_and_budget_checked() {
        let b = CoefficientBox::new(vec![-3.0; 3], vec![3.0; 3]).unwrap();
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.2).powi(2)).sum::<f64>() + (x[0] * x[1]).sin();
        let a = nelder_mead(f, &[1.0, 1.0, 1.0], &b, 60).unwrap();
        let c = nelder_mead(f, &[1.0, 1.0, 1.0], &b, 60).unwrap();
        assert_eq!(a, c);
        assert!(matches!(nelder_mead(f, &[0.0; 3], &b, 0), Err(Error::ZeroBudget)));
    }
}
