//! Stationary laws Q(x, x̃, ·) of the edge chain with frozen endpoints.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Unique stationary distribution of the edge chain R(ξ, ξ+y) = ρ(y)Γ̃(y, ξ, x, x̃).
///
/// Transient states get mass 0; more than one closed class is an error.
pub fn invariant_measure(spec: &ModelSpec, x: usize, xt: usize) -> Result<Vec<f64>> {
    let ne = spec.spaces().edge.len();
    let r = spec.edge_generator(x, xt);
    let closed = closed_classes(&r, ne);
    if closed.len() != 1 {
        let edge = &spec.spaces().edge;
        return Err(Error::Reducible {
            x: spec.spaces().node.value(x),
            x_tilde: spec.spaces().node.value(xt),
            classes: closed.iter().map(|c| c.iter().map(|&k| edge.value(k)).collect()).collect(),
        });
    }
    let class = &closed[0];
    let m = class.len();
    let mut pi = vec![0.0; ne];
    if m == 1 {
        pi[class[0]] = 1.0;
        return Ok(pi);
    }
    // Rᵀπ = 0 on the class, with the last equation replaced by Σπ = 1.
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (row, &to) in class.iter().enumerate() {
        for (col, &from) in class.iter().enumerate() {
            a[(row, col)] = r[from * ne + to];
        }
    }
    for col in 0..m {
        a[(m - 1, col)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(m);
    b[m - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical(format!("singular stationary system at x={x}, x~={xt}")))?;
    for (k, &state) in class.iter().enumerate() {
        pi[state] = sol[k].max(0.0);
    }
    let mass: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= mass);
    Ok(pi)
}

/// Closed communicating classes of the support graph of a rate matrix.
fn closed_classes(r: &[f64], ne: usize) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<usize, ()>::with_capacity(ne, ne * ne);
    let nodes: Vec<_> = (0..ne).map(|k| g.add_node(k)).collect();
    for a in 0..ne {
        for b in 0..ne {
            if a != b && r[a * ne + b] > 0.0 {
                g.add_edge(nodes[a], nodes[b], ());
            }
        }
    }
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0; ne];
    for (c, scc) in sccs.iter().enumerate() {
        for v in scc {
            comp[g[*v]] = c;
        }
    }
    let mut out: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, scc)| {
            scc.iter().all(|v| {
                let a = g[*v];
                (0..ne).all(|b| a == b || r[a * ne + b] <= 0.0 || comp[b] == *c)
            })
        })
        .map(|(_, scc)| {
            let mut states: Vec<usize> = scc.iter().map(|v| g[*v]).collect();
            states.sort_unstable();
            states
        })
        .collect();
    out.sort();
    out
}

/// max_ξ |Σ_ξ' π(ξ') R(ξ', ξ)|.
pub fn stationarity_residual(pi: &[f64], r: &[f64]) -> f64 {
    let ne = pi.len();
    (0..ne)
        .map(|to| (0..ne).map(|from| pi[from] * r[from * ne + to]).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// Q(x, x̃, ·) for every ordered pair of node states.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantMeasureMap {
    nx: usize,
    ne: usize,
    q: Vec<f64>,
}

impl InvariantMeasureMap {
    pub fn compute(spec: &ModelSpec) -> Result<Self> {
        let (_, nx, ne) = spec.dims();
        let mut q = Vec::with_capacity(nx * nx * ne);
        for x in 0..nx {
            for xt in 0..nx {
                q.extend(invariant_measure(spec, x, xt)?);
            }
        }
        Ok(InvariantMeasureMap { nx, ne, q })
    }

    /// Q independent of its node arguments.
    pub fn constant(nx: usize, pi: Vec<f64>) -> Self {
        let ne = pi.len();
        InvariantMeasureMap { nx, ne, q: (0..nx * nx).flat_map(|_| pi.iter().copied()).collect() }
    }

    pub fn get(&self, x: usize, xt: usize) -> &[f64] {
        let base = (x * self.nx + xt) * self.ne;
        &self.q[base..base + self.ne]
    }

    /// Rows (x, x~, xi, q) over state values.
    pub fn to_csv(&self, spec: &ModelSpec) -> String {
        let s = spec.spaces();
        let mut out = String::from("x,x_tilde,xi,q\n");
        for x in 0..self.nx {
            for xt in 0..self.nx {
                for (xi, p) in self.get(x, xt).iter().enumerate() {
                    let _ = writeln!(out, "{},{},{},{p}", s.node.value(x), s.node.value(xt), s.edge.value(xi));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelBuilder, StateSpace, StateSpaces};

    fn flip(a: f64, b: f64) -> ModelSpec {
        ModelBuilder::new(
            StateSpaces::new(StateSpace::range(0, 1), StateSpace::range(0, 1), StateSpace::new(vec![-1, 1])),
            vec![1.0, 1.0],
        )
        .edge_rates(move |y, _, _, _| if y == 1 { a } else { b })
        .build()
        .unwrap()
    }

    #[test]
    fn flip_chain() {
        let pi = invariant_measure(&flip(0.3, 0.9), 0, 1).unwrap();
        assert!((pi[0] - 0.9 / 1.2).abs() < 1e-14);
        assert!((pi[1] - 0.3 / 1.2).abs() < 1e-14);
    }

    #[test]
    fn absorbing_state_is_the_unique_class() {
        let pi = invariant_measure(&flip(0.5, 0.0), 0, 0).unwrap();
        assert_eq!(pi, vec![0.0, 1.0]);
    }

    #[test]
    fn frozen_chain_is_reducible() {
        let err = invariant_measure(&flip(0.0, 0.0), 1, 0).unwrap_err();
        match err {
            Error::Reducible { classes, .. } => assert_eq!(classes, vec![vec![0], vec![1]]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn symmetric_chain_gives_symmetric_law() {
        let spec = ModelBuilder::new(
            StateSpaces::new(StateSpace::range(0, 0), StateSpace::range(-2, 2), StateSpace::new(vec![-1, 1])),
            vec![0.8, 0.8],
        )
        .edge_rates(|y, xi, _, _| 0.2 + 0.1 * (xi * y + 2) as f64)
        .build()
        .unwrap();
        let pi = invariant_measure(&spec, 0, 0).unwrap();
        for k in 0..5 {
            assert!((pi[k] - pi[4 - k]).abs() < 1e-13);
        }
        assert!(stationarity_residual(&pi, &spec.edge_generator(0, 0)) < 1e-12);
    }
}
