//! Forward equations for one-particle marginals, integrated by classical RK4
//! on a user grid (one step per grid interval).

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::limits::invariant::InvariantMeasureMap;
use crate::model::{CltExampleSpec, ModelSpec};

/// Default number of RK4 steps over [0, T].
pub const DEFAULT_STEPS: usize = 2000;

/// Entries below this are a step-size failure; entries in (NEG_TOL, 0) are clipped.
const NEG_TOL: f64 = -1e-8;

/// Probability vectors on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalLaw {
    pub grid: Vec<f64>,
    pub p: Vec<Vec<f64>>,
}

impl MarginalLaw {
    /// Law at time t, linearly interpolated between grid points (clamped outside).
    pub fn at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.p[0].len()];
        self.at_into(t, &mut out);
        out
    }

    pub fn at_into(&self, t: f64, out: &mut [f64]) {
        let g = &self.grid;
        let k = g.partition_point(|&s| s <= t);
        if k == 0 {
            out.copy_from_slice(&self.p[0]);
        } else if k >= g.len() {
            out.copy_from_slice(&self.p[g.len() - 1]);
        } else {
            let w = (t - g[k - 1]) / (g[k] - g[k - 1]);
            for (o, (a, b)) in out.iter_mut().zip(self.p[k - 1].iter().zip(&self.p[k])) {
                *o = a + w * (b - a);
            }
        }
    }

    pub fn terminal(&self) -> &[f64] {
        self.p.last().expect("nonempty law")
    }

    pub fn to_csv(&self, states: &[i64]) -> String {
        let mut s = String::from("time");
        for x in states {
            let _ = write!(s, ",p_{x}");
        }
        s.push('\n');
        for (t, p) in self.grid.iter().zip(&self.p) {
            let _ = write!(s, "{t}");
            for v in p {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

pub fn uniform_grid(horizon: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect()
}

/// Inserts every midpoint, halving each step.
pub fn refine(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.extend(grid.last());
    out
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must start at 0 and increase strictly".into()));
    }
    Ok(())
}

/// RK4 for dp/dt = f(t, p) with simplex guarding.
fn rk4(p0: &[f64], grid: &[f64], mut f: impl FnMut(f64, &[f64], &mut [f64])) -> Result<MarginalLaw> {
    check_grid(grid)?;
    let d = p0.len();
    let mut p = p0.to_vec();
    let mut out = Vec::with_capacity(grid.len());
    out.push(p.clone());
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for w in grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        f(t, &p, &mut k1);
        for i in 0..d {
            tmp[i] = p[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..d {
            tmp[i] = p[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..d {
            tmp[i] = p[i] + h * k3[i];
        }
        f(t + h, &tmp, &mut k4);
        for i in 0..d {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let min = p.iter().copied().fold(f64::INFINITY, f64::min);
        if min < NEG_TOL {
            return Err(Error::StepSize { time: w[1], min_entry: min, suggested_step: h / 2.0 });
        }
        p.iter_mut().for_each(|v| *v = v.max(0.0));
        out.push(p.clone());
    }
    Ok(MarginalLaw { grid: grid.to_vec(), p: out })
}

/// Kolmogorov forward equation dp/dt = pR for a row-major generator R.
pub fn linear_forward(generator: &[f64], p0: &[f64], grid: &[f64]) -> Result<MarginalLaw> {
    let d = p0.len();
    if generator.len() != d * d {
        return Err(Error::InvalidArgument("generator shape mismatch".into()));
    }
    rk4(p0, grid, |_, p, dp| {
        dp.fill(0.0);
        for (from, &pf) in p.iter().enumerate() {
            if pf != 0.0 {
                let row = &generator[from * d..(from + 1) * d];
                for (v, g) in dp.iter_mut().zip(row) {
                    *v += pf * g;
                }
            }
        }
    })
}

/// Adds the jump flows of rates `rate(y, k)` out of each state k.
#[inline]
fn jump_field(spec: &ModelSpec, p: &[f64], dp: &mut [f64], mut rate: impl FnMut(usize, usize) -> f64) {
    let (m, nx, _) = spec.dims();
    dp.fill(0.0);
    for k in 0..nx {
        if p[k] == 0.0 {
            continue;
        }
        for y in 0..m {
            if let Some(to) = spec.node_target(y, k) {
                let flow = p[k] * spec.rho()[y] * rate(y, k);
                dp[k] -= flow;
                dp[to] += flow;
            }
        }
    }
}

/// Averaged-limit (Riccati) equation: state k jumps by y at rate
/// ρ(y) Σ_{x̃,ξ̃} γ(y, k, x̃, ξ̃) p(x̃) Q(k, x̃, ξ̃).
pub fn forward_equation_accel(spec: &ModelSpec, q: &InvariantMeasureMap, grid: &[f64]) -> Result<MarginalLaw> {
    let g = averaged_kernel(spec, q);
    let (_, nx, _) = spec.dims();
    rk4(spec.mu0(), grid, |_, p, dp| {
        jump_field(spec, p, dp, |y, k| {
            let row = &g[(y * nx + k) * nx..(y * nx + k + 1) * nx];
            row.iter().zip(p).map(|(a, b)| a * b).sum()
        })
    })
}

/// ḡ(y, k, x̃) = Σ_ξ̃ γ(y, k, x̃, ξ̃) Q(k, x̃, ξ̃), flattened as (y·nx + k)·nx + x̃.
pub fn averaged_kernel(spec: &ModelSpec, q: &InvariantMeasureMap) -> Vec<f64> {
    let (m, nx, ne) = spec.dims();
    let mut g = vec![0.0; m * nx * nx];
    for y in 0..m {
        for k in 0..nx {
            for xt in 0..nx {
                let qk = q.get(k, xt);
                g[(y * nx + k) * nx + xt] = (0..ne).map(|e| spec.gamma(y, k, xt, e) * qk[e]).sum();
            }
        }
    }
    g
}

/// i.i.d.-edge limit: state k jumps by y at rate Γ(y, k, μ(t) ⊗ θ(t)).
pub fn forward_equation_iid(spec: &ModelSpec, theta: impl Fn(f64) -> Vec<f64>, grid: &[f64]) -> Result<MarginalLaw> {
    let (_, nx, ne) = spec.dims();
    let mut nu = vec![0.0; nx * ne];
    rk4(spec.mu0(), grid, |t, p, dp| {
        let th = theta(t);
        for xt in 0..nx {
            for e in 0..ne {
                nu[xt * ne + e] = p[xt] * th[e];
            }
        }
        jump_field(spec, p, dp, |y, k| {
            let base = spec.gamma_index(y, k, 0, 0);
            spec.gamma_table()[base..base + nx * ne].iter().zip(&nu).map(|(a, b)| a * b).sum()
        })
    })
}

/// θ(t) = θ(0) exp(t β R̃) for edges whose rates ignore the endpoint nodes.
pub fn markov_edge_law(spec: &ModelSpec, beta: f64) -> Result<impl Fn(f64) -> Vec<f64>> {
    let (_, nx, ne) = spec.dims();
    let r = spec.edge_generator(0, 0);
    for x in 0..nx {
        for xt in 0..nx {
            if spec.edge_generator(x, xt) != r {
                return Err(Error::InvalidModel("edge rates depend on the endpoint nodes; edges are not i.i.d.".into()));
            }
        }
    }
    let gen = DMatrix::from_row_slice(ne, ne, &r) * beta;
    let theta0 = spec.theta0().to_vec();
    Ok(move |t: f64| {
        let e = (&gen * t).exp();
        (0..ne).map(|to| (0..ne).map(|from| theta0[from] * e[(from, to)]).sum::<f64>().max(0.0)).collect()
    })
}

/// Generator of the node chain jumping by y at rate c0(y)b0(x) + c3(y).
pub fn autonomous_generator(spec: &ModelSpec, clt: &CltExampleSpec) -> Vec<f64> {
    let (m, nx, _) = spec.dims();
    let mut r = vec![0.0; nx * nx];
    for y in 0..m {
        for k in 0..nx {
            if let Some(to) = spec.node_target(y, k) {
                let rate = spec.rho()[y] * clt.autonomous_rate(y, k);
                r[k * nx + to] += rate;
                r[k * nx + k] -= rate;
            }
        }
    }
    r
}

/// E[X(T)²] for the autonomous chain started from μ(0).
pub fn autonomous_second_moment(spec: &ModelSpec, clt: &CltExampleSpec, grid: &[f64]) -> Result<f64> {
    let law = linear_forward(&autonomous_generator(spec, clt), spec.mu0(), grid)?;
    Ok(spec.spaces().node.values().iter().zip(law.terminal()).map(|(&k, p)| (k * k) as f64 * p).sum())
}

/// max |p_h − p_{h/2}| over the coarse grid points.
pub fn richardson_discrepancy(coarse: &MarginalLaw, fine: &MarginalLaw) -> f64 {
    coarse
        .p
        .iter()
        .enumerate()
        .map(|(k, p)| p.iter().zip(&fine.p[2 * k]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}
