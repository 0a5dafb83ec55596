//! Limit processes sampled by thinning the node streams N_i, so that limit
//! particle i and particle i of any n-system share their randomness.

use crate::error::{Error, Result};
use crate::limits::forward::{averaged_kernel, MarginalLaw};
use crate::limits::invariant::InvariantMeasureMap;
use crate::model::{CltExampleSpec, ModelSpec};
use crate::path::Path;
use crate::prm::{thin, Cursor, PrmEvent, PrmStream};

/// Generic thinning sampler: a candidate (s, y, z) moves the state x to x + y
/// iff z ≤ rate(s, y, x), with x the state index just before s.
pub fn sample_thinned(
    spec: &ModelSpec,
    stream: &PrmStream,
    x0: usize,
    mut rate: impl FnMut(f64, usize, usize) -> f64,
) -> Result<Path> {
    let nodes = &spec.spaces().node;
    let mut x = x0;
    let mut path = Path::constant(nodes.value(x0));
    let mut cur = Cursor::default();
    let horizon = stream.horizon();
    while let Some((s, mark, z)) = cur.advance(stream.shape(), stream.key()) {
        if s > horizon {
            break;
        }
        let r = rate(s, mark, x);
        if thin(stream.shape(), &PrmEvent { s, mark, z }, r)? {
            let Some(to) = spec.node_target(mark, x) else {
                return Err(Error::Closure {
                    entity: "limit particle".into(),
                    from: nodes.value(x),
                    mark: spec.spaces().marks.value(mark),
                    time: s,
                });
            };
            x = to;
            path.push(s, nodes.value(x));
        }
    }
    Ok(path)
}

/// Averaged limit: rate Σ_{x̃,ξ̃} γ(y, X(s−), x̃, ξ̃) μ_s(x̃) Q(X(s−), x̃, ξ̃).
pub fn sample_accel_limit(
    spec: &ModelSpec,
    q: &InvariantMeasureMap,
    mu: &MarginalLaw,
    stream: &PrmStream,
    x0: usize,
) -> Result<Path> {
    let g = averaged_kernel(spec, q);
    let nx = spec.spaces().node.len();
    let mut m = vec![0.0; nx];
    sample_thinned(spec, stream, x0, |s, y, x| {
        mu.at_into(s, &mut m);
        g[(y * nx + x) * nx..(y * nx + x + 1) * nx].iter().zip(&m).map(|(a, b)| a * b).sum()
    })
}

/// i.i.d.-edge limit: rate Γ(y, X(s−), μ_s ⊗ θ_s).
pub fn sample_iid_limit(
    spec: &ModelSpec,
    mu: &MarginalLaw,
    theta: &MarginalLaw,
    stream: &PrmStream,
    x0: usize,
) -> Result<Path> {
    let (_, nx, ne) = spec.dims();
    let mut m = vec![0.0; nx];
    let mut th = vec![0.0; ne];
    sample_thinned(spec, stream, x0, |s, y, x| {
        mu.at_into(s, &mut m);
        theta.at_into(s, &mut th);
        let base = spec.gamma_index(y, x, 0, 0);
        let row = &spec.gamma_table()[base..base + nx * ne];
        let mut acc = 0.0;
        for xt in 0..nx {
            for e in 0..ne {
                acc += row[xt * ne + e] * m[xt] * th[e];
            }
        }
        acc
    })
}

/// Autonomous chain with rate c0(y)b0(x) + c3(y) (zero where the jump leaves S_x).
pub fn sample_autonomous(spec: &ModelSpec, clt: &CltExampleSpec, stream: &PrmStream, x0: usize) -> Result<Path> {
    sample_thinned(spec, stream, x0, |_, y, x| {
        if spec.node_target(y, x).is_some() {
            clt.autonomous_rate(y, x)
        } else {
            0.0
        }
    })
}
