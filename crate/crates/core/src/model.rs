//! Finite-state model instances and the standing-condition checks.
//!
//! A [`ModelSpec`] holds the node kernel γ(y, x, x̃, ξ̃), the edge kernel
//! Γ̃(y, ξ̃, x, x̃), the mark measure ρ, the edge speed-up schedule β(n), the
//! horizon and the initial laws. Kernels are dense tables addressed by state
//! *indices*; the integer state values only matter for jump arithmetic
//! (x → x + y) and for distances.
//!
//! Jumps that would leave a finite state space are inadmissible. Their kernel
//! entries must be zero, which [`validate`] enforces and [`ModelBuilder`]
//! applies automatically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass tolerance for initial laws.
pub const LAW_TOLERANCE: f64 = 1e-12;

/// An ordered finite set of integer states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    values: Vec<i64>,
}

impl StateSpace {
    pub fn new(values: Vec<i64>) -> Self {
        StateSpace { values }
    }

    pub fn range(lo: i64, hi: i64) -> Self {
        StateSpace::new((lo..=hi).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> i64 {
        self.values[idx]
    }

    pub fn index_of(&self, value: i64) -> Option<usize> {
        self.values.iter().position(|&v| v == value)
    }

    fn duplicates(&self) -> Vec<i64> {
        let mut sorted = self.values.clone();
        sorted.sort_unstable();
        let mut dups: Vec<i64> = sorted.windows(2).filter(|w| w[0] == w[1]).map(|w| w[0]).collect();
        dups.dedup();
        dups
    }

    /// True when the set is closed under negation.
    pub fn is_symmetric(&self) -> bool {
        self.values.iter().all(|&v| self.index_of(-v).is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpaces {
    pub node: StateSpace,
    pub edge: StateSpace,
    pub marks: StateSpace,
}

impl StateSpaces {
    pub fn new(node: StateSpace, edge: StateSpace, marks: StateSpace) -> Self {
        StateSpaces { node, edge, marks }
    }
}

/// Edge speed-up schedule n ↦ β(n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSchedule {
    Constant(f64),
    /// β(n) = coef · n^exponent.
    Power { coef: f64, exponent: f64 },
}

impl BetaSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            BetaSchedule::Constant(b) => b,
            BetaSchedule::Power { coef, exponent } => coef * (n as f64).powf(exponent),
        }
    }
}

/// Parameters of the explicit-variance fluctuation example:
/// γ(y,x,x̃,ξ̃) = c0(y)b0(x) + c1(y)b1(x̃) + c2(y)b2(ξ̃) + c3(y).
///
/// `c*` are indexed like the jump marks, `b0`/`b1` like the node states and
/// `b2` like the edge states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltExampleSpec {
    pub c0: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
    pub b0: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub epsilon: f64,
}

impl CltExampleSpec {
    /// Untruncated c-form value at state indices.
    pub fn form(&self, y: usize, x: usize, xt: usize, xi: usize) -> f64 {
        self.c0[y] * self.b0[x] + self.c1[y] * self.b1[xt] + self.c2[y] * self.b2[xi] + self.c3[y]
    }

    /// Autonomous limit rate c0(y)b0(x) + c3(y).
    pub fn autonomous_rate(&self, y: usize, x: usize) -> f64 {
        self.c0[y] * self.b0[x] + self.c3[y]
    }

    /// Σ_y y·c1(y)·ρ(y), the drift coefficient of the compensated functional.
    pub fn drift_coefficient(&self, marks: &StateSpace, rho: &[f64]) -> f64 {
        marks
            .values()
            .iter()
            .enumerate()
            .map(|(k, &y)| y as f64 * self.c1[k] * rho[k])
            .sum()
    }

    fn check_shapes(&self, spaces: &StateSpaces) -> Result<()> {
        let m = spaces.marks.len();
        let ok = [&self.c0, &self.c1, &self.c2, &self.c3].iter().all(|c| c.len() == m)
            && self.b0.len() == spaces.node.len()
            && self.b1.len() == spaces.node.len()
            && self.b2.len() == spaces.edge.len();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel("clt_example coefficient lengths do not match the state spaces".into()))
        }
    }
}

/// JSON document form of a model.
///
/// `gamma` is nested `[y][x][x̃][ξ̃]`, `gamma_tilde` is nested `[y][ξ̃][x][x̃]`,
/// and every per-mark/per-state vector follows the order of `spaces`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub spaces: SpacesDoc,
    pub rho: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Vec<f64>>,
    pub gamma: Vec<Vec<Vec<Vec<f64>>>>,
    pub gamma_tilde: Vec<Vec<Vec<Vec<f64>>>>,
    pub beta: BetaSchedule,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub mu0: Vec<f64>,
    pub theta0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clt_example: Option<CltExampleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacesDoc {
    pub node_states: Vec<i64>,
    pub edge_states: Vec<i64>,
    pub jump_marks: Vec<i64>,
}

/// A validated-shape model. Semantic conditions are checked by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    spaces: StateSpaces,
    rho: Vec<f64>,
    envelope: Vec<f64>,
    gamma: Vec<f64>,
    gamma_tilde: Vec<f64>,
    beta: BetaSchedule,
    horizon: f64,
    mu0: Vec<f64>,
    theta0: Vec<f64>,
    clt_example: Option<CltExampleSpec>,
    node_target: Vec<Option<usize>>,
    edge_target: Vec<Option<usize>>,
}

impl ModelSpec {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        spaces: StateSpaces,
        rho: Vec<f64>,
        envelope: Option<Vec<f64>>,
        gamma: Vec<f64>,
        gamma_tilde: Vec<f64>,
        beta: BetaSchedule,
        horizon: f64,
        mu0: Vec<f64>,
        theta0: Vec<f64>,
        clt_example: Option<CltExampleSpec>,
    ) -> Result<Self> {
        let (m, nx, ne) = (spaces.marks.len(), spaces.node.len(), spaces.edge.len());
        if rho.len() != m {
            return Err(Error::InvalidModel(format!("rho has {} entries, expected {m}", rho.len())));
        }
        if mu0.len() != nx || theta0.len() != ne {
            return Err(Error::InvalidModel("initial law length does not match its state space".into()));
        }
        if gamma.len() != m * nx * nx * ne || gamma_tilde.len() != m * ne * nx * nx {
            return Err(Error::InvalidModel("kernel table shape mismatch".into()));
        }
        if let Some(c) = &clt_example {
            c.check_shapes(&spaces)?;
        }
        let envelope = match envelope {
            Some(e) if e.len() != m => {
                return Err(Error::InvalidModel(format!("envelope has {} entries, expected {m}", e.len())))
            }
            Some(e) => e,
            None => (0..m)
                .map(|y| {
                    let g = gamma[y * nx * nx * ne..(y + 1) * nx * nx * ne].iter();
                    let gt = gamma_tilde[y * ne * nx * nx..(y + 1) * ne * nx * nx].iter();
                    g.chain(gt).fold(0.0f64, |a, &b| a.max(b))
                })
                .collect(),
        };
        let mut node_target = Vec::with_capacity(m * nx);
        let mut edge_target = Vec::with_capacity(m * ne);
        for &y in spaces.marks.values() {
            for &x in spaces.node.values() {
                node_target.push(spaces.node.index_of(x + y));
            }
            for &xi in spaces.edge.values() {
                edge_target.push(spaces.edge.index_of(xi + y));
            }
        }
        Ok(ModelSpec {
            spaces,
            rho,
            envelope,
            gamma,
            gamma_tilde,
            beta,
            horizon,
            mu0,
            theta0,
            clt_example,
            node_target,
            edge_target,
        })
    }

    pub fn from_doc(doc: ModelDoc) -> Result<Self> {
        let spaces = StateSpaces::new(
            StateSpace::new(doc.spaces.node_states),
            StateSpace::new(doc.spaces.edge_states),
            StateSpace::new(doc.spaces.jump_marks),
        );
        let (m, nx, ne) = (spaces.marks.len(), spaces.node.len(), spaces.edge.len());
        let gamma = flatten4(&doc.gamma, [m, nx, nx, ne], "gamma")?;
        let gamma_tilde = flatten4(&doc.gamma_tilde, [m, ne, nx, nx], "gamma_tilde")?;
        ModelSpec::assemble(
            spaces,
            doc.rho,
            doc.envelope,
            gamma,
            gamma_tilde,
            doc.beta,
            doc.horizon,
            doc.mu0,
            doc.theta0,
            doc.clt_example,
        )
    }

    pub fn to_doc(&self) -> ModelDoc {
        let (m, nx, ne) = self.dims();
        ModelDoc {
            spaces: SpacesDoc {
                node_states: self.spaces.node.values().to_vec(),
                edge_states: self.spaces.edge.values().to_vec(),
                jump_marks: self.spaces.marks.values().to_vec(),
            },
            rho: self.rho.clone(),
            envelope: Some(self.envelope.clone()),
            gamma: unflatten4(&self.gamma, [m, nx, nx, ne]),
            gamma_tilde: unflatten4(&self.gamma_tilde, [m, ne, nx, nx]),
            beta: self.beta,
            horizon: self.horizon,
            mu0: self.mu0.clone(),
            theta0: self.theta0.clone(),
            clt_example: self.clt_example.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        ModelSpec::from_doc(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        ModelSpec::from_json(&std::fs::read_to_string(path)?)
    }

    /// Pretty JSON with keys in sorted order.
    pub fn to_json(&self) -> String {
        crate::json::to_sorted_string(&self.to_doc())
    }

    /// (|Y|, |S_x|, |S_ξ|)
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.spaces.marks.len(), self.spaces.node.len(), self.spaces.edge.len())
    }

    pub fn spaces(&self) -> &StateSpaces {
        &self.spaces
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn envelope(&self) -> &[f64] {
        &self.envelope
    }

    pub fn beta(&self) -> BetaSchedule {
        self.beta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn mu0(&self) -> &[f64] {
        &self.mu0
    }

    pub fn theta0(&self) -> &[f64] {
        &self.theta0
    }

    pub fn clt_example(&self) -> Option<&CltExampleSpec> {
        self.clt_example.as_ref()
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_beta(mut self, beta: BetaSchedule) -> Self {
        self.beta = beta;
        self
    }

    #[inline]
    pub fn gamma_index(&self, y: usize, x: usize, xt: usize, xi: usize) -> usize {
        let (_, nx, ne) = self.dims();
        ((y * nx + x) * nx + xt) * ne + xi
    }

    #[inline]
    pub fn gamma(&self, y: usize, x: usize, xt: usize, xi: usize) -> f64 {
        self.gamma[self.gamma_index(y, x, xt, xi)]
    }

    /// Flat node table in `[y][x][x̃][ξ̃]` order.
    pub fn gamma_table(&self) -> &[f64] {
        &self.gamma
    }

    #[inline]
    pub fn gamma_tilde_index(&self, y: usize, xi: usize, x: usize, xt: usize) -> usize {
        let (_, nx, ne) = self.dims();
        ((y * ne + xi) * nx + x) * nx + xt
    }

    #[inline]
    pub fn gamma_tilde(&self, y: usize, xi: usize, x: usize, xt: usize) -> f64 {
        self.gamma_tilde[self.gamma_tilde_index(y, xi, x, xt)]
    }

    /// Flat edge table in `[y][ξ̃][x][x̃]` order.
    pub fn gamma_tilde_table(&self) -> &[f64] {
        &self.gamma_tilde
    }

    /// Index of x + y, if it lies in the node space.
    #[inline]
    pub fn node_target(&self, y: usize, x: usize) -> Option<usize> {
        self.node_target[y * self.spaces.node.len() + x]
    }

    /// Index of ξ + y, if it lies in the edge space.
    #[inline]
    pub fn edge_target(&self, y: usize, xi: usize) -> Option<usize> {
        self.edge_target[y * self.spaces.edge.len() + xi]
    }

    /// Largest node rate per mark, the node-stream thinning ceiling.
    pub fn node_ceiling(&self) -> Vec<f64> {
        let (m, nx, ne) = self.dims();
        let block = nx * nx * ne;
        (0..m).map(|y| self.gamma[y * block..(y + 1) * block].iter().fold(0.0, |a: f64, &b| a.max(b))).collect()
    }

    /// Largest edge rate per mark before the β factor.
    pub fn edge_ceiling_unit(&self) -> Vec<f64> {
        let (m, nx, ne) = self.dims();
        let block = ne * nx * nx;
        (0..m)
            .map(|y| self.gamma_tilde[y * block..(y + 1) * block].iter().fold(0.0, |a: f64, &b| a.max(b)))
            .collect()
    }

    /// C_γ = Σ_y |y| γ_y ρ(y).
    pub fn c_gamma(&self) -> f64 {
        self.spaces
            .marks
            .values()
            .iter()
            .zip(&self.envelope)
            .zip(&self.rho)
            .map(|((&y, &g), &r)| y.unsigned_abs() as f64 * g * r)
            .sum()
    }

    /// Γ(y, x, ν) = Σ_{x̃,ξ̃} γ(y, x, x̃, ξ̃) ν(x̃, ξ̃), with ν flattened as
    /// `x̃ * |S_ξ| + ξ̃`.
    pub fn aggregate_rate(&self, y: usize, x: usize, nu: &[f64]) -> Result<f64> {
        let (_, nx, ne) = self.dims();
        if nu.len() != nx * ne {
            return Err(Error::InvalidArgument(format!("joint law has {} entries, expected {}", nu.len(), nx * ne)));
        }
        if let Some(p) = nu.iter().find(|&&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("joint law has invalid entry {p}")));
        }
        let mass: f64 = nu.iter().sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("joint law has mass {mass}")));
        }
        let base = self.gamma_index(y, x, 0, 0);
        Ok(self.gamma[base..base + nx * ne].iter().zip(nu).map(|(g, p)| g * p).sum())
    }

    /// Edge-chain generator for frozen endpoints (x, x̃), without β:
    /// R(ξ, ξ+y) = ρ(y) Γ̃(y, ξ, x, x̃). Row-major `|S_ξ| × |S_ξ|`.
    pub fn edge_generator(&self, x: usize, xt: usize) -> Vec<f64> {
        let (m, _, ne) = self.dims();
        let mut r = vec![0.0; ne * ne];
        for y in 0..m {
            for xi in 0..ne {
                if let Some(to) = self.edge_target(y, xi) {
                    let rate = self.rho[y] * self.gamma_tilde(y, xi, x, xt);
                    r[xi * ne + to] += rate;
                    r[xi * ne + xi] -= rate;
                }
            }
        }
        r
    }
}

fn flatten4(t: &[Vec<Vec<Vec<f64>>>], dims: [usize; 4], name: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidModel(format!("{name} must have shape {dims:?}"));
    if t.len() != dims[0] {
        return Err(bad());
    }
    let mut out = Vec::with_capacity(dims.iter().product());
    for a in t {
        if a.len() != dims[1] {
            return Err(bad());
        }
        for b in a {
            if b.len() != dims[2] {
                return Err(bad());
            }
            for c in b {
                if c.len() != dims[3] {
                    return Err(bad());
                }
                out.extend_from_slice(c);
            }
        }
    }
    Ok(out)
}

fn unflatten4(flat: &[f64], dims: [usize; 4]) -> Vec<Vec<Vec<Vec<f64>>>> {
    let mut it = flat.iter().copied();
    (0..dims[0])
        .map(|_| {
            (0..dims[1])
                .map(|_| (0..dims[2]).map(|_| it.by_ref().take(dims[3]).collect()).collect())
                .collect()
        })
        .collect()
}

/// Programmatic model construction from rate functions of state *values*.
///
/// Entries whose jump would leave the state space are set to zero.
pub struct ModelBuilder {
    spaces: StateSpaces,
    rho: Vec<f64>,
    gamma: Vec<f64>,
    gamma_tilde: Vec<f64>,
    beta: BetaSchedule,
    horizon: f64,
    mu0: Vec<f64>,
    theta0: Vec<f64>,
    envelope: Option<Vec<f64>>,
    clt_example: Option<CltExampleSpec>,
}

impl ModelBuilder {
    pub fn new(spaces: StateSpaces, rho: Vec<f64>) -> Self {
        let (m, nx, ne) = (spaces.marks.len(), spaces.node.len(), spaces.edge.len());
        let mut mu0 = vec![0.0; nx];
        let mut theta0 = vec![0.0; ne];
        if nx > 0 {
            mu0[0] = 1.0;
        }
        if ne > 0 {
            theta0[0] = 1.0;
        }
        ModelBuilder {
            rho,
            gamma: vec![0.0; m * nx * nx * ne],
            gamma_tilde: vec![0.0; m * ne * nx * nx],
            beta: BetaSchedule::Constant(1.0),
            horizon: 1.0,
            mu0,
            theta0,
            envelope: None,
            clt_example: None,
            spaces,
        }
    }

    /// Node kernel γ(y, x, x̃, ξ̃) over state values.
    pub fn node_rates(mut self, f: impl Fn(i64, i64, i64, i64) -> f64) -> Self {
        let s = &self.spaces;
        let mut k = 0;
        for &y in s.marks.values() {
            for &x in s.node.values() {
                let admissible = s.node.index_of(x + y).is_some();
                for &xt in s.node.values() {
                    for &xi in s.edge.values() {
                        self.gamma[k] = if admissible { f(y, x, xt, xi) } else { 0.0 };
                        k += 1;
                    }
                }
            }
        }
        self
    }

    /// Edge kernel Γ̃(y, ξ̃, x, x̃) over state values.
    pub fn edge_rates(mut self, f: impl Fn(i64, i64, i64, i64) -> f64) -> Self {
        let s = &self.spaces;
        let mut k = 0;
        for &y in s.marks.values() {
            for &xi in s.edge.values() {
                let admissible = s.edge.index_of(xi + y).is_some();
                for &x in s.node.values() {
                    for &xt in s.node.values() {
                        self.gamma_tilde[k] = if admissible { f(y, xi, x, xt) } else { 0.0 };
                        k += 1;
                    }
                }
            }
        }
        self
    }

    /// Node kernel from the explicit-variance c/b form (truncated at the boundary).
    pub fn clt_example(mut self, clt: CltExampleSpec) -> Self {
        let s = self.spaces.clone();
        let mut k = 0;
        for (yi, &y) in s.marks.values().iter().enumerate() {
            for (xi_, &x) in s.node.values().iter().enumerate() {
                let admissible = s.node.index_of(x + y).is_some();
                for xt in 0..s.node.len() {
                    for e in 0..s.edge.len() {
                        self.gamma[k] = if admissible { clt.form(yi, xi_, xt, e) } else { 0.0 };
                        k += 1;
                    }
                }
            }
        }
        self.clt_example = Some(clt);
        self
    }

    pub fn beta(mut self, beta: BetaSchedule) -> Self {
        self.beta = beta;
        self
    }

    pub fn horizon(mut self, t: f64) -> Self {
        self.horizon = t;
        self
    }

    pub fn mu0(mut self, mu0: Vec<f64>) -> Self {
        self.mu0 = mu0;
        self
    }

    pub fn theta0(mut self, theta0: Vec<f64>) -> Self {
        self.theta0 = theta0;
        self
    }

    pub fn envelope(mut self, envelope: Vec<f64>) -> Self {
        self.envelope = Some(envelope);
        self
    }

    pub fn build(self) -> Result<ModelSpec> {
        ModelSpec::assemble(
            self.spaces,
            self.rho,
            self.envelope,
            self.gamma,
            self.gamma_tilde,
            self.beta,
            self.horizon,
            self.mu0,
            self.theta0,
            self.clt_example,
        )
    }
}

/// Which invariant a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    EmptySpace,
    DuplicateState,
    ZeroMark,
    NonPositiveRho,
    NegativeRate,
    NodeEnvelope,
    EdgeEnvelope,
    NodeClosure,
    EdgeClosure,
    InitialLaw,
    Horizon,
    Beta,
    CltBounds,
    CltForm,
    CltParity,
    CltSymmetry,
    CltInitial,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, rule: Rule, detail: String) {
        self.violations.push(Violation { rule, detail });
    }
}

/// Checks the standing conditions; the fluctuation-example conditions are
/// checked as well when the model carries a `clt_example`.
pub fn validate(spec: &ModelSpec) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let s = &spec.spaces;
    for (name, space) in [("node_states", &s.node), ("edge_states", &s.edge), ("jump_marks", &s.marks)] {
        if space.is_empty() {
            rep.push(Rule::EmptySpace, format!("{name} is empty"));
        }
        for d in space.duplicates() {
            rep.push(Rule::DuplicateState, format!("{name} repeats {d}"));
        }
    }
    if s.marks.values().contains(&0) {
        rep.push(Rule::ZeroMark, "jump mark 0 is not allowed".into());
    }
    for (k, &r) in spec.rho.iter().enumerate() {
        if !(r > 0.0 && r.is_finite()) {
            rep.push(Rule::NonPositiveRho, format!("rho({}) = {r}", s.marks.value(k)));
        }
    }
    let (m, nx, ne) = spec.dims();
    for y in 0..m {
        let yv = s.marks.value(y);
        let env = spec.envelope[y];
        for x in 0..nx {
            let target = spec.node_target(y, x);
            for xt in 0..nx {
                for xi in 0..ne {
                    let g = spec.gamma(y, x, xt, xi);
                    let at = format!("(y={yv}, x={}, x~={}, xi~={})", s.node.value(x), s.node.value(xt), s.edge.value(xi));
                    if g < 0.0 || !g.is_finite() {
                        rep.push(Rule::NegativeRate, format!("gamma{at} = {g}"));
                    } else if g > env {
                        rep.push(Rule::NodeEnvelope, format!("gamma{at} = {g} exceeds gamma_y = {env}"));
                    }
                    if g > 0.0 && target.is_none() {
                        rep.push(Rule::NodeClosure, format!("gamma{at} = {g} > 0 but x + y leaves S_x"));
                    }
                }
            }
        }
        for xi in 0..ne {
            let target = spec.edge_target(y, xi);
            for x in 0..nx {
                for xt in 0..nx {
                    let g = spec.gamma_tilde(y, xi, x, xt);
                    let at = format!("(y={yv}, xi~={}, x={}, x~={})", s.edge.value(xi), s.node.value(x), s.node.value(xt));
                    if g < 0.0 || !g.is_finite() {
                        rep.push(Rule::NegativeRate, format!("gamma_tilde{at} = {g}"));
                    } else if g > env {
                        rep.push(Rule::EdgeEnvelope, format!("gamma_tilde{at} = {g} exceeds gamma_y = {env}"));
                    }
                    if g > 0.0 && target.is_none() {
                        rep.push(Rule::EdgeClosure, format!("gamma_tilde{at} = {g} > 0 but xi + y leaves S_xi"));
                    }
                }
            }
        }
    }
    for (name, law) in [("mu0", &spec.mu0), ("theta0", &spec.theta0)] {
        let mass: f64 = law.iter().sum();
        if law.iter().any(|&p| p < 0.0 || !p.is_finite()) || (mass - 1.0).abs() > LAW_TOLERANCE {
            rep.push(Rule::InitialLaw, format!("{name} is not a probability vector (mass {mass})"));
        }
    }
    if !(spec.horizon > 0.0 && spec.horizon.is_finite()) {
        rep.push(Rule::Horizon, format!("T = {}", spec.horizon));
    }
    let beta_ok = match spec.beta {
        BetaSchedule::Constant(b) => b >= 0.0 && b.is_finite(),
        BetaSchedule::Power { coef, exponent } => coef >= 0.0 && coef.is_finite() && exponent.is_finite(),
    };
    if !beta_ok {
        rep.push(Rule::Beta, format!("invalid beta schedule {:?}", spec.beta));
    }
    if let Some(clt) = &spec.clt_example {
        validate_clt(spec, clt, &mut rep);
    }
    rep
}

fn validate_clt(spec: &ModelSpec, clt: &CltExampleSpec, rep: &mut ValidationReport) {
    let s = &spec.spaces;
    let (m, nx, ne) = spec.dims();
    let eps = clt.epsilon;
    if !(eps > 0.0 && eps <= 1.0) {
        rep.push(Rule::CltBounds, format!("epsilon = {eps} outside (0, 1]"));
    }
    for (name, space) in [("node_states", &s.node), ("edge_states", &s.edge), ("jump_marks", &s.marks)] {
        if !space.is_symmetric() {
            rep.push(Rule::CltSymmetry, format!("{name} is not symmetric about 0"));
        }
    }
    let mirror = |space: &StateSpace, k: usize| space.index_of(-space.value(k));
    let check_parity = |rep: &mut ValidationReport, name: &str, f: &[f64], space: &StateSpace, odd: bool| {
        for k in 0..space.len() {
            if let Some(j) = mirror(space, k) {
                let expect = if odd { -f[k] } else { f[k] };
                if (f[j] - expect).abs() > 1e-12 {
                    let kind = if odd { "odd" } else { "even" };
                    rep.push(Rule::CltParity, format!("{name} is not {kind} at {}", space.value(k)));
                    return;
                }
            }
        }
    };
    check_parity(rep, "rho", &spec.rho, &s.marks, false);
    check_parity(rep, "c0", &clt.c0, &s.marks, false);
    check_parity(rep, "c3", &clt.c3, &s.marks, false);
    check_parity(rep, "b0", &clt.b0, &s.node, false);
    check_parity(rep, "b1", &clt.b1, &s.node, true);
    check_parity(rep, "b2", &clt.b2, &s.edge, true);

    'form: for y in 0..m {
        for x in 0..nx {
            let admissible = spec.node_target(y, x).is_some();
            for xt in 0..nx {
                for xi in 0..ne {
                    let g = spec.gamma(y, x, xt, xi);
                    let at = format!("(y={}, x={}, x~={}, xi~={})", s.marks.value(y), s.node.value(x), s.node.value(xt), s.edge.value(xi));
                    if admissible {
                        let f = clt.form(y, x, xt, xi);
                        if (g - f).abs() > 1e-12 {
                            rep.push(Rule::CltForm, format!("gamma{at} = {g} differs from the c/b form {f}"));
                            break 'form;
                        }
                        if g < eps || g > 1.0 / eps {
                            rep.push(Rule::CltBounds, format!("gamma{at} = {g} outside [{eps}, {}]", 1.0 / eps));
                        }
                    } else if g != 0.0 {
                        rep.push(Rule::CltForm, format!("gamma{at} must vanish on the boundary"));
                        break 'form;
                    }
                }
            }
        }
    }
    // Reflection symmetry of the edge kernel: Γ̃(y, ξ̃, x, x̃) = Γ̃(−y, −ξ̃, x, x̃).
    'refl: for y in 0..m {
        let Some(my) = mirror(&s.marks, y) else { continue };
        for xi in 0..ne {
            let Some(mxi) = mirror(&s.edge, xi) else { continue };
            for x in 0..nx {
                for xt in 0..nx {
                    if (spec.gamma_tilde(y, xi, x, xt) - spec.gamma_tilde(my, mxi, x, xt)).abs() > 1e-12 {
                        rep.push(
                            Rule::CltSymmetry,
                            format!(
                                "gamma_tilde is not reflection symmetric at (y={}, xi~={})",
                                s.marks.value(y),
                                s.edge.value(xi)
                            ),
                        );
                        break 'refl;
                    }
                }
            }
        }
    }
    let point_mass_at_zero = |law: &[f64], space: &StateSpace| {
        space.index_of(0).is_some_and(|z| (law[z] - 1.0).abs() <= LAW_TOLERANCE)
    };
    if !point_mass_at_zero(&spec.mu0, &s.node) || !point_mass_at_zero(&spec.theta0, &s.edge) {
        rep.push(Rule::CltInitial, "initial node and edge states must be identically 0".into());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> ModelBuilder {
        ModelBuilder::new(
            StateSpaces::new(StateSpace::range(0, 1), StateSpace::range(0, 1), StateSpace::new(vec![-1, 1])),
            vec![1.0, 1.0],
        )
    }

    #[test]
    fn envelope_attained_is_valid() {
        let spec = two_state()
            .node_rates(|_, _, _, _| 0.7)
            .edge_rates(|_, _, _, _| 0.7)
            .envelope(vec![0.7, 0.7])
            .build()
            .unwrap();
        assert!(validate(&spec).is_ok(), "{:?}", validate(&spec));
    }

    #[test]
    fn envelope_violation_names_tuple() {
        let spec = two_state().node_rates(|_, _, _, _| 0.7).envelope(vec![0.7, 0.7]).build().unwrap();
        let mut doc = spec.to_doc();
        // y = +1 (index 1), x = 0, x~ = 1, xi~ = 0
        doc.gamma[1][0][1][0] = 1.7;
        let rep = validate(&ModelSpec::from_doc(doc).unwrap());
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].rule, Rule::NodeEnvelope);
        assert!(rep.violations[0].detail.contains("(y=1, x=0, x~=1, xi~=0)"));
    }

    #[test]
    fn closure_violation_reported() {
        let spec = two_state().node_rates(|_, _, _, _| 0.5).build().unwrap();
        let mut doc = spec.to_doc();
        doc.gamma[1][1][0][0] = 0.5; // 1 + 1 leaves {0, 1}
        doc.gamma_tilde[0][0][0][0] = 0.5; // 0 - 1 leaves {0, 1}
        let rep = validate(&ModelSpec::from_doc(doc).unwrap());
        assert!(rep.has(Rule::NodeClosure));
        assert!(rep.has(Rule::EdgeClosure));
    }

    #[test]
    fn bad_initial_law_and_rho() {
        let spec = two_state().mu0(vec![0.5, 0.6]).build().unwrap();
        let mut doc = spec.to_doc();
        doc.rho[0] = 0.0;
        let rep = validate(&ModelSpec::from_doc(doc).unwrap());
        assert!(rep.has(Rule::InitialLaw));
        assert!(rep.has(Rule::NonPositiveRho));
    }

    #[test]
    fn shape_mismatch_is_hard_error() {
        let mut doc = two_state().build().unwrap().to_doc();
        doc.gamma[0].pop();
        assert!(ModelSpec::from_doc(doc).is_err());
    }

    #[test]
    fn json_round_trip_is_stable() {
        let spec = two_state().node_rates(|y, x, xt, xi| 0.1 * (y + 2 + x + xt + xi) as f64).build().unwrap();
        let text = spec.to_json();
        let back = ModelSpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.to_json(), text);
        let pos = |k: &str| text.find(k).unwrap();
        assert!(pos("\"T\"") < pos("\"beta\"") && pos("\"beta\"") < pos("\"gamma\"") && pos("\"mu0\"") < pos("\"rho\""));
    }

    #[test]
    fn aggregate_rate_examples() {
        let spec = two_state().node_rates(|_, _, _, _| 0.3).build().unwrap();
        let nu = [0.1, 0.2, 0.3, 0.4];
        assert!((spec.aggregate_rate(0, 1, &nu).unwrap() - 0.3).abs() < 1e-15);

        // table {1,2,3,4} over (x~, xi~) with uniform nu -> 2.5
        let spec = two_state()
            .node_rates(|_, _, xt, xi| (1 + 2 * xt + xi) as f64)
            .build()
            .unwrap();
        assert!((spec.aggregate_rate(0, 1, &[0.25; 4]).unwrap() - 2.5).abs() < 1e-15);
        // point mass picks the entry
        assert_eq!(spec.aggregate_rate(0, 1, &[0.0, 0.0, 1.0, 0.0]).unwrap(), 3.0);
        assert!(spec.aggregate_rate(0, 1, &[-0.5, 0.5, 0.5, 0.5]).is_err());
        assert!(spec.aggregate_rate(0, 1, &[0.5, 0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn beta_schedules() {
        assert_eq!(BetaSchedule::Constant(3.0).at(100), 3.0);
        assert_eq!(BetaSchedule::Power { coef: 1.0, exponent: 1.0 }.at(800), 800.0);
        assert!((BetaSchedule::Power { coef: 1.0, exponent: 0.5 }.at(400) - 20.0).abs() < 1e-12);
    }
}
