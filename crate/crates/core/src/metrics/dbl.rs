//! Bounded-Lipschitz distance between probability vectors on a finite metric space.
//!
//! d_BL(p, q) = max Σ_x f(x)(p(x) − q(x)) over |f| ≤ 1 and f(x) − f(y) ≤ d(x, y),
//! solved exactly as a linear program.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

const METRIC_TOL: f64 = 1e-12;

/// Row-major |a − b| on integer states.
pub fn abs_metric(states: &[i64]) -> Vec<f64> {
    states.iter().flat_map(|&a| states.iter().map(move |&b| (a - b).abs() as f64)).collect()
}

/// Row-major Euclidean distance on integer pairs.
pub fn euclid_metric(points: &[(i64, i64)]) -> Vec<f64> {
    points
        .iter()
        .flat_map(|&(a1, a2)| {
            points.iter().map(move |&(b1, b2)| (((a1 - b1).pow(2) + (a2 - b2).pow(2)) as f64).sqrt())
        })
        .collect()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn check_metric(d: &[f64], k: usize) -> Result<()> {
    if d.len() != k * k {
        return Err(Error::InvalidArgument(format!("ground metric must be {k}x{k}")));
    }
    for a in 0..k {
        if d[a * k + a] != 0.0 {
            return Err(Error::InvalidArgument(format!("d({a},{a}) != 0")));
        }
        for b in 0..k {
            let dab = d[a * k + b];
            if !(dab >= 0.0 && dab.is_finite()) || (dab - d[b * k + a]).abs() > METRIC_TOL {
                return Err(Error::InvalidArgument(format!("d({a},{b}) is negative or asymmetric")));
            }
            if a != b && dab == 0.0 {
                return Err(Error::InvalidArgument(format!("d({a},{b}) = 0 for distinct points")));
            }
            for c in 0..k {
                if d[a * k + c] > dab + d[b * k + c] + METRIC_TOL {
                    return Err(Error::InvalidArgument(format!("triangle inequality fails for ({a},{b},{c})")));
                }
            }
        }
    }
    Ok(())
}

/// Exact d_BL; `d` is the row-major ground metric. Result lies in [0, 2].
pub fn dbl_distance(p: &[f64], q: &[f64], d: &[f64]) -> Result<f64> {
    let k = p.len();
    if q.len() != k {
        return Err(Error::InvalidArgument("p and q have different supports".into()));
    }
    check_metric(d, k)?;
    // A feasible f on the charged atoms extends to the whole space, so the
    // other atoms can be dropped.
    let atoms: Vec<usize> = (0..k).filter(|&x| p[x] != q[x]).collect();
    if atoms.is_empty() {
        return Ok(0.0);
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = atoms.iter().map(|&x| lp.add_var(p[x] - q[x], (-1.0, 1.0))).collect();
    for (a, &x) in atoms.iter().enumerate() {
        for (b, &y) in atoms.iter().enumerate() {
            let dxy = d[x * k + y];
            // |f| ≤ 1 already caps differences at 2
            if a != b && dxy < 2.0 {
                lp.add_constraint([(vars[a], 1.0), (vars[b], -1.0)], ComparisonOp::Le, dxy);
            }
        }
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Numerical(format!("d_BL linear program: {e}")))?
        .into_solution()
        .map_err(|_| Error::Numerical("d_BL linear program interrupted".into()))?;
    Ok(sol.objective().clamp(0.0, 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_point_masses() {
        let d = abs_metric(&[0, 1, 2, 5]);
        let p = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(dbl_distance(&p, &p, &d).unwrap(), 0.0);
        let e = |k: usize| {
            let mut v = [0.0; 4];
            v[k] = 1.0;
            v
        };
        assert!((dbl_distance(&e(0), &e(1), &d).unwrap() - 1.0).abs() < 1e-12);
        assert!((dbl_distance(&e(0), &e(3), &d).unwrap() - 2.0).abs() < 1e-12);
        assert!((dbl_distance(&e(1), &e(2), &d).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_metric() {
        let d = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        assert!(dbl_distance(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &d).is_err());
    }
}
