//! Hilbert–Schmidt verification: truncated basis sums `S_K = Σ_{|J|≤K} ‖T e_J‖²`,
//! the closed-form characterization integral, rigorous tail bounds, and the
//! comparability constants for the differentiation operators.
//!
//! Ball sources are summed through the multinomial collapse
//! `Σ_{|J|=k} x^J/J! = |x|_1^k/k!`, so only one-variable moments
//! `∫|ψ|²|φ|^{2k} dA_β` are integrated. Polydisk sources have no collapse; at
//! every node the degree-`k` part of `Π_i Σ_j γ_j^{-2} |φ_i|^{2j}` is formed by
//! truncated convolution. [`hs_sum_uncollapsed`] is the definitional route
//! over all multi-indices and serves as the independent check on both.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::multiindex::{enumerate_degree, MultiIndex};
use crate::quadrature::{PolydiskRule, TensorNodes, DEFAULT_ANGULAR, DEFAULT_RADIAL, MAX_ANGULAR, MAX_RADIAL};
use crate::series::{
    component_sup_bounds, sup_modulus_bound, sup_modulus_estimate, PolynomialMap, TargetDomain, VectorSymbol,
};
use crate::spaces::{Exponent, OperatorKind, SourceSpace};
use crate::sum::{pairwise_sum, CompensatedSum};

/// Largest supported dimension of the domain `𝔻^m` of `φ`.
pub const MAX_DOMAIN_DIM: usize = 3;

/// Nodes per reduction chunk; chunk boundaries are fixed so reductions are
/// independent of the thread count.
const CHUNK: usize = 2048;

/// Auto-refinement stops before a rule would exceed this many nodes.
const NODE_BUDGET: usize = 1 << 21;

/// Relative change between a rule and its refinement that is accepted.
const REFINEMENT_TOL: f64 = 1e-9;

/// Relative slack on the comparability bounds.
pub const COMPARABILITY_SLACK: f64 = 1e-6;

/// `φ` is taken to reach the boundary when its grid maximum is this close to 1.
const BOUNDARY_TOUCH: f64 = 1e-12;

/// Relative tolerance at which `Σ c_k x^k` is considered summed.
const SERIES_TOL: f64 = 1e-14;

const SERIES_MAX_TERMS: u64 = 50_000_000;

/// Per-axis default resolution for a domain of dimension `m`.
pub fn default_resolution(m: usize) -> (usize, usize) {
    match m {
        1 => (DEFAULT_RADIAL, DEFAULT_ANGULAR),
        2 => (12, 24),
        _ => (6, 12),
    }
}

/// Boundary grid density used to certify `sup|φ|`.
fn sup_grid_density(m: usize) -> usize {
    match m {
        1 => 1024,
        2 => 96,
        _ => 24,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative agreement required for an exact match.
    pub rel: f64,
    /// Partial sums beyond this are treated as unbounded.
    pub divergence_cap: f64,
    /// `δ`: symbols with `sup|φ| ≥ 1 - δ` are treated as touching the boundary.
    #[serde(default = "default_boundary_margin")]
    pub boundary_margin: f64,
}

fn default_boundary_margin() -> f64 {
    1e-3
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 1e-8,
            divergence_cap: 1e12,
            boundary_margin: default_boundary_margin(),
        }
    }
}

/// A fully validated verification problem.
#[derive(Debug, Clone, PartialEq)]
pub struct HsJob {
    source: SourceSpace,
    operator: OperatorKind,
    phi: VectorSymbol,
    psi: PolynomialMap,
    truncation: u32,
    rule: PolydiskRule,
    tolerances: Tolerances,
}

impl HsJob {
    pub fn new(
        source: SourceSpace,
        operator: OperatorKind,
        phi: VectorSymbol,
        psi: PolynomialMap,
        truncation: u32,
        rule: PolydiskRule,
        tolerances: Tolerances,
    ) -> Result<Self> {
        source.check_pairing(operator)?;
        let beta = source.target_beta()?;
        if phi.len() != source.n() {
            return Err(Error::Validation(format!(
                "phi has {} components but the source space has n = {}",
                phi.len(),
                source.n()
            )));
        }
        let m = phi.num_vars();
        if psi.num_vars() != m || rule.m() != m {
            return Err(Error::Validation(format!(
                "phi, psi and the quadrature rule must share m (got {m}, {}, {})",
                psi.num_vars(),
                rule.m()
            )));
        }
        if m > MAX_DOMAIN_DIM {
            return Err(Error::Validation(format!(
                "domain dimension m = {m} exceeds the supported maximum {MAX_DOMAIN_DIM}"
            )));
        }
        if m > 1 && !matches!(operator, OperatorKind::Composition) {
            return Err(Error::Validation(format!(
                "{operator} is only characterized for m = 1"
            )));
        }
        if rule.beta() != beta {
            return Err(Error::Validation(format!(
                "rule weight {} does not match target beta {beta}",
                rule.beta()
            )));
        }
        if truncation == 0 {
            return Err(Error::Validation("truncation must be at least 1".into()));
        }
        if !(tolerances.rel > 0.0 && tolerances.divergence_cap > 0.0 && tolerances.boundary_margin > 0.0) {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        Ok(Self {
            source,
            operator,
            phi,
            psi,
            truncation,
            rule,
            tolerances,
        })
    }

    /// Builds the job with the default rule for its domain dimension.
    pub fn with_default_rule(
        source: SourceSpace,
        operator: OperatorKind,
        phi: VectorSymbol,
        psi: PolynomialMap,
        truncation: u32,
    ) -> Result<Self> {
        let beta = source.target_beta()?;
        let (r, a) = default_resolution(phi.num_vars());
        let rule = PolydiskRule::build(phi.num_vars(), beta, r, a)?;
        Self::new(source, operator, phi, psi, truncation, rule, Tolerances::default())
    }

    pub fn source(&self) -> SourceSpace {
        self.source
    }
    pub fn operator(&self) -> OperatorKind {
        self.operator
    }
    pub fn phi(&self) -> &VectorSymbol {
        &self.phi
    }
    pub fn psi(&self) -> &PolynomialMap {
        &self.psi
    }
    pub fn truncation(&self) -> u32 {
        self.truncation
    }
    pub fn rule(&self) -> &PolydiskRule {
        &self.rule
    }
    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn with_truncation(&self, truncation: u32) -> Result<Self> {
        Self::new(
            self.source,
            self.operator,
            self.phi.clone(),
            self.psi.clone(),
            truncation,
            self.rule.clone(),
            self.tolerances,
        )
    }

    pub fn with_rule(&self, rule: PolydiskRule) -> Result<Self> {
        Self::new(
            self.source,
            self.operator,
            self.phi.clone(),
            self.psi.clone(),
            self.truncation,
            rule,
            self.tolerances,
        )
    }

    pub fn with_psi(&self, psi: PolynomialMap) -> Result<Self> {
        Self::new(
            self.source,
            self.operator,
            self.phi.clone(),
            psi,
            self.truncation,
            self.rule.clone(),
            self.tolerances,
        )
    }

    fn target_domain(&self) -> TargetDomain {
        if self.source.is_ball() {
            TargetDomain::Ball
        } else {
            TargetDomain::Polydisk
        }
    }

    /// Grid value of `sup|φ|` in the target norm (a lower bound).
    pub fn sup_phi_estimate(&self) -> f64 {
        sup_modulus_estimate(&self.phi, self.target_domain(), sup_grid_density(self.phi.num_vars()))
    }

    /// Certified upper bound for `sup|φ|` in the target norm.
    pub fn sup_phi(&self) -> f64 {
        sup_modulus_bound(&self.phi, self.target_domain(), sup_grid_density(self.phi.num_vars()))
    }

    fn component_sups(&self) -> Vec<f64> {
        component_sup_bounds(&self.phi, sup_grid_density(self.phi.num_vars()))
    }
}

/// `|ψ|²` and `|φ_i|²` at every node of a rule.
struct NodeCache {
    nodes: TensorNodes,
    psi_sq: Vec<f64>,
    /// Row-major, `n` entries per node.
    comp_sq: Vec<f64>,
    n: usize,
}

impl NodeCache {
    fn build(job: &HsJob, rule: &PolydiskRule) -> Self {
        let nodes = rule.nodes();
        let n = job.phi.len();
        let per_node: Vec<(f64, Vec<f64>)> = (0..nodes.len())
            .into_par_iter()
            .map(|i| {
                let z = nodes.point(i);
                let psi = job.psi.eval_unchecked(z).norm_sqr();
                let comps = job
                    .phi
                    .components()
                    .iter()
                    .map(|c| c.eval_unchecked(z).norm_sqr())
                    .collect();
                (psi, comps)
            })
            .collect();
        let mut psi_sq = Vec::with_capacity(nodes.len());
        let mut comp_sq = Vec::with_capacity(nodes.len() * n);
        for (p, c) in per_node {
            psi_sq.push(p);
            comp_sq.extend(c);
        }
        Self {
            nodes,
            psi_sq,
            comp_sq,
            n,
        }
    }

    fn len(&self) -> usize {
        self.psi_sq.len()
    }

    fn comps(&self, i: usize) -> &[f64] {
        &self.comp_sq[i * self.n..(i + 1) * self.n]
    }

    /// `∫|ψ|² dV_β`.
    fn psi_mass(&self) -> Result<f64> {
        Ok(self.degree_integrals(1, |_, buf| buf[0] = 1.0)?[0])
    }

    /// `∫ |ψ|² · F_k dV_β` for `k = 0..len`, where `fill(i, buf)` writes the
    /// node-`i` values `F_0..F_{len-1}` into `buf`.
    fn degree_integrals<F>(&self, len: usize, fill: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        let weights = self.nodes.weights();
        let chunks: Vec<Vec<f64>> = (0..self.len().div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![CompensatedSum::new(); len];
                let mut buf = vec![0.0; len];
                let range = c * CHUNK..((c + 1) * CHUNK).min(self.len());
                for (i, (&w, &p)) in range.clone().zip(weights[range.clone()].iter().zip(&self.psi_sq[range])) {
                    fill(self.comps(i), &mut buf);
                    let w = w * p;
                    for (a, &b) in acc.iter_mut().zip(&buf) {
                        a.add(w * b);
                    }
                }
                acc.iter().map(CompensatedSum::value).collect()
            })
            .collect();
        let out: Vec<f64> = (0..len)
            .map(|k| pairwise_sum(&chunks.iter().map(|c| c[k]).collect::<Vec<_>>()))
            .collect();
        if let Some(k) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                point: vec![],
                value: num_complex::Complex64::new(out[k], 0.0),
            });
        }
        Ok(out)
    }
}

/// Coefficients `Σ_{|J|=k} Π_i γ_{j_i}^{-2} y_i^{j_i}` for `k ≤ max_degree`,
/// by truncated convolution of the per-coordinate series.
fn polydisk_degree_series(factor_consts: &[f64], ys: &[f64], out: &mut [f64]) {
    let len = out.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    out[0] = 1.0;
    let mut series = vec![0.0; len];
    let mut next = vec![0.0; len];
    for &y in ys {
        let mut p = 1.0;
        for (j, s) in series.iter_mut().enumerate() {
            *s = factor_consts[j] * p;
            p *= y;
        }
        for k in 0..len {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += out[j] * series[k - j];
            }
            next[k] = acc;
        }
        out.copy_from_slice(&next);
    }
}

fn factor_constants(src: &SourceSpace, len: usize) -> Vec<f64> {
    (0..len as u32).map(|j| src.factor_constant_sq(j)).collect()
}

/// Collapsed coefficients `c_0..c_{len-1}`.
fn collapsed_table(src: &SourceSpace, op: OperatorKind, len: usize) -> Result<Vec<f64>> {
    (0..len as u64).map(|k| src.collapsed_coefficient(op, k)).collect()
}

/// Basis degree contributed by collapsed index `k`.
fn basis_degree_shift(op: OperatorKind) -> usize {
    match op {
        OperatorKind::OneVarDerivative => 1,
        _ => 0,
    }
}

/// Per-basis-degree contributions `Σ_{|J|=k} ‖T e_J‖²` for `k = 0..=K`, via the
/// collapse (ball) or the convolution (polydisk).
fn degree_contributions(job: &HsJob, cache: &NodeCache) -> Result<Vec<f64>> {
    let k_max = job.truncation as usize;
    let src = job.source;
    if src.is_ball() {
        let shift = basis_degree_shift(job.operator);
        let moments_len = k_max + 1 - shift;
        let coeffs = collapsed_table(&src, job.operator, moments_len)?;
        let moments = cache.degree_integrals(moments_len, |ys, buf| {
            let x: f64 = ys.iter().sum();
            let mut p = 1.0;
            for b in buf.iter_mut() {
                *b = p;
                p *= x;
            }
        })?;
        let mut out = vec![0.0; shift];
        out.extend(coeffs.iter().zip(&moments).map(|(c, m)| c * m));
        Ok(out)
    } else {
        let consts = factor_constants(&src, k_max + 1);
        cache.degree_integrals(k_max + 1, |ys, buf| {
            polydisk_degree_series(&consts, ys, buf)
        })
    }
}

fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    increments
        .iter()
        .map(|&d| {
            acc.add(d);
            acc.value()
        })
        .collect()
}

/// Partial sums `S_0..S_K` of `Σ ‖T e_J‖²` ordered by basis degree `|J|`.
pub fn hs_sum_truncated(job: &HsJob) -> Result<Vec<f64>> {
    let cache = NodeCache::build(job, &job.rule);
    Ok(cumulative(&degree_contributions(job, &cache)?))
}

/// Weight of `|φ_1|^{2j_1}⋯|φ_n|^{2j_n}` in `‖T e_J‖²`, and the power shift
/// applied to `J` (the one-variable derivative lowers the degree by one).
fn basis_term_weight(src: &SourceSpace, op: OperatorKind, j: &MultiIndex) -> f64 {
    let c = src.basis_constant_sq(j);
    let k = j.degree() as f64;
    match op {
        OperatorKind::Composition => c,
        OperatorKind::RadialCompDiff { t } => {
            if j.is_zero() {
                0.0
            } else {
                c * k.powf(2.0 * t)
            }
        }
        OperatorKind::OneVarDerivative => c * k * k,
    }
}

/// `Σ_{|J|=k} ‖T e_J‖²`-integrand at a point with `ys[i] = |φ_i|²`, for every
/// `k ≤ out.len()-1`, by enumerating all multi-indices (no collapse).
pub fn uncollapsed_degree_terms(src: &SourceSpace, op: OperatorKind, ys: &[f64], out: &mut [f64]) {
    let n = src.n();
    assert_eq!(ys.len(), n);
    let lower = basis_degree_shift(op) as u32;
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = enumerate_degree(n, k as u32)
            .iter()
            .map(|j| {
                let w = basis_term_weight(src, op, j);
                if w == 0.0 {
                    return 0.0;
                }
                let mono: f64 = j
                    .parts()
                    .iter()
                    .zip(ys)
                    .map(|(&e, &y)| y.powi(e.saturating_sub(lower) as i32))
                    .product();
                w * mono
            })
            .sum();
    }
}

/// `S_0..S_K` by summing `‖T e_J‖²` over every multi-index separately.
pub fn hs_sum_uncollapsed(job: &HsJob) -> Result<Vec<f64>> {
    let cache = NodeCache::build(job, &job.rule);
    let src = job.source;
    let op = job.operator;
    let len = job.truncation as usize + 1;
    let terms = cache.degree_integrals(len, |ys, buf| uncollapsed_degree_terms(&src, op, ys, buf))?;
    Ok(cumulative(&terms))
}

/// A nonnegative quantity that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Magnitude {
    Finite(f64),
    Infinite,
}

impl Magnitude {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            Magnitude::Finite(v) => Some(v),
            Magnitude::Infinite => None,
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Magnitude::Finite(v) => write!(f, "{}", fmt17(*v)),
            Magnitude::Infinite => write!(f, "+inf"),
        }
    }
}

impl Serialize for Magnitude {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Magnitude::Finite(v) => s.serialize_f64(*v),
            Magnitude::Infinite => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Magnitude {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NumberOrTag::deserialize(d)? {
            NumberOrTag::Number(v) => Ok(Magnitude::Finite(v)),
            NumberOrTag::Tag(t) if t == "+inf" => Ok(Magnitude::Infinite),
            NumberOrTag::Tag(t) => Err(serde::de::Error::custom(format!("expected a number or \"+inf\", got {t:?}"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrTag {
    Number(f64),
    Tag(String),
}

/// Upper bound on `Σ_{|J|>K} ‖T e_J‖²`, when one can be certified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailBound {
    Bound(f64),
    Unavailable,
}

impl TailBound {
    pub fn value(&self) -> Option<f64> {
        match *self {
            TailBound::Bound(v) => Some(v),
            TailBound::Unavailable => None,
        }
    }
}

impl fmt::Display for TailBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailBound::Bound(v) => write!(f, "{}", fmt17(*v)),
            TailBound::Unavailable => write!(f, "unavailable"),
        }
    }
}

impl Serialize for TailBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TailBound::Bound(v) => s.serialize_f64(*v),
            TailBound::Unavailable => s.serialize_str("unavailable"),
        }
    }
}

impl<'de> Deserialize<'de> for TailBound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NumberOrTag::deserialize(d)? {
            NumberOrTag::Number(v) => Ok(TailBound::Bound(v)),
            NumberOrTag::Tag(t) if t == "unavailable" => Ok(TailBound::Unavailable),
            NumberOrTag::Tag(t) => Err(serde::de::Error::custom(format!("expected a number or \"unavailable\", got {t:?}"))),
        }
    }
}

/// 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn characterization_on(job: &HsJob, cache: &NodeCache) -> Result<f64> {
    let exponent = job.source.closed_form_exponent(job.operator)?;
    let v = cache.degree_integrals(1, |ys, buf| {
        buf[0] = match exponent {
            Exponent::Total(p) => (1.0 - ys.iter().sum::<f64>()).powf(-p),
            Exponent::PerFactor { q, .. } => ys.iter().map(|y| (1.0 - y).powf(-q)).product(),
        };
    })?;
    Ok(v[0])
}

/// `∫ |ψ|² (1-|φ|²)^{-p} dA_β` (ball) or `∫ |ψ|² Π(1-|φ_i|²)^{-q} dV_β`
/// (polydisk). Returns [`Magnitude::Infinite`] when `sup|φ| ≥ 1 - δ`.
pub fn hs_characterization(job: &HsJob) -> Result<Magnitude> {
    if job.sup_phi() >= 1.0 - job.tolerances.boundary_margin {
        return Ok(Magnitude::Infinite);
    }
    let cache = NodeCache::build(job, &job.rule);
    characterization_on(job, &cache).map(Magnitude::Finite)
}

fn tail_bound_with(job: &HsJob, k: u32, psi_mass: f64) -> Result<TailBound> {
    let src = job.source;
    if src.is_ball() {
        let m = job.sup_phi();
        if m >= 1.0 {
            return Ok(TailBound::Unavailable);
        }
        if m == 0.0 || psi_mass == 0.0 {
            return Ok(TailBound::Bound(0.0));
        }
        // first collapsed index not yet summed
        let next = (k as u64 + 1) - basis_degree_shift(job.operator) as u64;
        let m2 = m * m;
        let r = m2 * src.coefficient_ratio(job.operator)?.sup_from(next);
        if r >= 1.0 {
            return Ok(TailBound::Unavailable);
        }
        let Some(ln_c) = src.ln_collapsed_coefficient(job.operator, next)? else {
            return Ok(TailBound::Bound(0.0));
        };
        let ln_b = ln_c + next as f64 * m2.ln() + psi_mass.ln() - (1.0 - r).ln();
        Ok(TailBound::Bound(ln_b.exp()))
    } else {
        let sups = job.component_sups();
        if sups.iter().any(|&s| s >= 1.0) {
            return Ok(TailBound::Unavailable);
        }
        let Exponent::PerFactor { q, .. } = src.closed_form_exponent(job.operator)? else {
            unreachable!("polydisk sources have per-factor exponents");
        };
        let ys: Vec<f64> = sups.iter().map(|s| s * s).collect();
        let full: f64 = ys.iter().map(|y| (1.0 - y).powf(-q)).product();
        let mut partial = vec![0.0; k as usize + 1];
        polydisk_degree_series(&factor_constants(&src, k as usize + 1), &ys, &mut partial);
        let mut acc = CompensatedSum::new();
        partial.iter().for_each(|&v| acc.add(v));
        Ok(TailBound::Bound(psi_mass * (full - acc.value()).max(0.0)))
    }
}

/// Bound on `Σ_{|J|>K} ‖T e_J‖²` from `M = sup|φ|`.
///
/// Ball sources use the ratio bound `c_{k+1}/c_k · M² ≤ r < 1` for `k > K`;
/// polydisk sources bound the remainder of `Π_i (1 - M_i²)^{-q}`.
pub fn tail_bound(job: &HsJob, k: u32) -> Result<TailBound> {
    let cache = NodeCache::build(job, &job.rule);
    tail_bound_with(job, k, cache.psi_mass()?)
}

/// `g(x) = Σ_k c_k x^k`, summed until the ratio-test remainder is below
/// `1e-14` of the running sum.
pub fn series_generating(src: &SourceSpace, op: OperatorKind, x: f64) -> Result<f64> {
    assert!((0.0..1.0).contains(&x), "x must lie in [0, 1)");
    let ratio = src.coefficient_ratio(op)?;
    let first = match src.ln_collapsed_coefficient(op, 0)? {
        Some(_) => 0u64,
        None => 1u64,
    };
    if x == 0.0 {
        return src.collapsed_coefficient(op, 0);
    }
    let ln_c = src
        .ln_collapsed_coefficient(op, first)?
        .expect("c_1 > 0 for every operator");
    let mut term = (ln_c + first as f64 * x.ln()).exp();
    let mut sum = CompensatedSum::new();
    let mut k = first;
    loop {
        sum.add(term);
        let next = term * ratio.at(k) * x;
        k += 1;
        let r = x * ratio.sup_from(k);
        if r < 1.0 && next / (1.0 - r) <= SERIES_TOL * sum.value() {
            sum.add(next);
            return Ok(sum.value());
        }
        if k > SERIES_MAX_TERMS {
            return Err(Error::Validation(format!("series at x = {x} did not converge")));
        }
        term = next;
    }
}

/// Grid for [`comparability_constants`]: 64 uniform and 64 log-spaced
/// (in `1 - x`) points on `[0.1, 0.999]`.
pub fn default_comparability_grid() -> Vec<f64> {
    let (lo, hi) = (0.1f64, 0.999f64);
    let mut grid: Vec<f64> = (0..64)
        .map(|i| lo + (hi - lo) * i as f64 / 63.0)
        .chain((0..64).map(|i| 1.0 - (1.0 - lo) * ((1.0 - hi) / (1.0 - lo)).powf(i as f64 / 63.0)))
        .collect();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    grid
}

/// `(min, max)` of `g(x)(1-x)^p` over `samples`.
///
/// For the differentiation operators `c_0 = 0` (or `g` is otherwise not
/// comparable near 0), so the default grid starts at `x = 0.1`.
pub fn comparability_constants(src: &SourceSpace, op: OperatorKind, samples: &[f64]) -> Result<(f64, f64)> {
    let Exponent::Total(p) = src.closed_form_exponent(op)? else {
        return Err(Error::UnsupportedSpace(format!("{} has no one-variable series", src.kind())));
    };
    let values: Vec<f64> = samples
        .par_iter()
        .map(|&x| series_generating(src, op, x).map(|g| g * (1.0 - x).powf(p)))
        .collect::<Result<_>>()?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ExactMatch,
    ComparableBounded,
    Diverged,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::ExactMatch | Verdict::ComparableBounded => 0,
            Verdict::Diverged => 2,
            Verdict::Inconclusive => 3,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparability {
    Exact,
    Bounds { c_lo: f64, c_hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleInfo {
    pub m: usize,
    pub beta: f64,
    pub radial: usize,
    pub angular: usize,
    pub nodes: usize,
    /// Relative change of the characterization under one doubling of the rule.
    pub refinement_delta: Option<f64>,
}

impl RuleInfo {
    fn of(rule: &PolydiskRule, delta: Option<f64>) -> Self {
        Self {
            m: rule.m(),
            beta: rule.beta(),
            radial: rule.axis().radial_count(),
            angular: rule.axis().angular_count(),
            nodes: rule.len(),
            refinement_delta: delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsReport {
    pub sup_phi: f64,
    pub partial_sums: Vec<f64>,
    pub characterization: Magnitude,
    pub tail_bound: TailBound,
    pub comparability: Comparability,
    pub verdict: Verdict,
    pub rule: RuleInfo,
    pub notes: Vec<String>,
}

/// Picks the rule to use: the job's rule, doubled while one further doubling
/// moves the characterization by more than `1e-9` relative and the node
/// budget allows. The returned delta is that of the last doubling.
fn settle_rule(job: &HsJob) -> Result<(PolydiskRule, NodeCache, f64, Option<f64>)> {
    let mut rule = job.rule.clone();
    let mut cache = NodeCache::build(job, &rule);
    let mut value = characterization_on(job, &cache)?;
    loop {
        let axis = rule.axis();
        let can_refine = 2 * axis.radial_count() <= MAX_RADIAL
            && 2 * axis.angular_count() <= MAX_ANGULAR
            && rule.len() << (2 * rule.m()) <= NODE_BUDGET;
        if !can_refine {
            return Ok((rule, cache, value, None));
        }
        let finer = rule.refined()?;
        let finer_cache = NodeCache::build(job, &finer);
        let finer_value = characterization_on(job, &finer_cache)?;
        let delta = (finer_value - value).abs() / finer_value.abs().max(f64::MIN_POSITIVE);
        if delta <= REFINEMENT_TOL {
            return Ok((rule, cache, value, Some(delta)));
        }
        rule = finer;
        cache = finer_cache;
        value = finer_value;
    }
}

fn increments_not_shrinking(sums: &[f64]) -> bool {
    let k = sums.len() - 1;
    if k < 2 {
        return true;
    }
    let inc = |i: usize| sums[i] - sums[i - 1];
    let mid = k.div_ceil(2).max(1);
    inc(k) > 0.0 && inc(k) >= 0.5 * inc(mid)
}

/// Runs the full verification and classifies the outcome. Numerical failures
/// become [`Verdict::Inconclusive`] with a note.
pub fn verify(job: &HsJob) -> HsReport {
    match verify_inner(job) {
        Ok(r) => r,
        Err(e) => HsReport {
            sup_phi: job.sup_phi(),
            partial_sums: vec![],
            characterization: Magnitude::Infinite,
            tail_bound: TailBound::Unavailable,
            comparability: Comparability::Exact,
            verdict: Verdict::Inconclusive,
            rule: RuleInfo::of(&job.rule, None),
            notes: vec![format!("numerical failure: {e}")],
        },
    }
}

fn verify_inner(job: &HsJob) -> Result<HsReport> {
    let tol = job.tolerances;
    let sup_phi = job.sup_phi();
    let exact = job.source.is_exact_theorem(job.operator);
    let mut notes = Vec::new();

    let comparability = if exact {
        Comparability::Exact
    } else {
        let (c_lo, c_hi) = comparability_constants(&job.source, job.operator, &default_comparability_grid())?;
        notes.push(
            "comparability constants are taken over |phi|^2 in [0.1, 0.999]; near 0 the ratio g(x)(1-x)^p is not bounded below"
                .to_string(),
        );
        Comparability::Bounds { c_lo, c_hi }
    };

    if sup_phi >= 1.0 - tol.boundary_margin {
        let cache = NodeCache::build(job, &job.rule);
        let sums = cumulative(&degree_contributions(job, &cache)?);
        let last = *sums.last().expect("K >= 1");
        let touches = job.sup_phi_estimate() >= 1.0 - BOUNDARY_TOUCH;
        let verdict = if last > tol.divergence_cap || (touches && increments_not_shrinking(&sums)) {
            Verdict::Diverged
        } else {
            Verdict::Inconclusive
        };
        notes.push(format!(
            "sup|phi| = {} is within {} of the boundary; characterization integral treated as infinite",
            fmt17(sup_phi),
            tol.boundary_margin
        ));
        return Ok(HsReport {
            sup_phi,
            partial_sums: sums,
            characterization: Magnitude::Infinite,
            tail_bound: TailBound::Unavailable,
            comparability,
            verdict,
            rule: RuleInfo::of(&job.rule, None),
            notes,
        });
    }

    let (rule, cache, integral, delta) = settle_rule(job)?;
    let settled = job.with_rule(rule.clone())?;
    let sums = cumulative(&degree_contributions(&settled, &cache)?);
    let tail = tail_bound_with(&settled, job.truncation, cache.psi_mass()?)?;
    let s_k = *sums.last().expect("K >= 1");

    let verdict = match (tail, comparability) {
        (TailBound::Unavailable, _) => {
            notes.push("no tail bound could be certified at this truncation".into());
            Verdict::Inconclusive
        }
        (TailBound::Bound(b), Comparability::Exact) => {
            let estimate = s_k + 0.5 * b;
            if (estimate - integral).abs() <= (tol.rel * integral).max(b) {
                Verdict::ExactMatch
            } else {
                Verdict::Inconclusive
            }
        }
        (TailBound::Bound(b), Comparability::Bounds { c_lo, c_hi }) => {
            let lower_ok = s_k >= c_lo * integral * (1.0 - COMPARABILITY_SLACK);
            let upper_ok = s_k + b <= c_hi * integral * (1.0 + COMPARABILITY_SLACK);
            if lower_ok && upper_ok {
                Verdict::ComparableBounded
            } else {
                Verdict::Inconclusive
            }
        }
    };

    Ok(HsReport {
        sup_phi,
        partial_sums: sums,
        characterization: Magnitude::Finite(integral),
        tail_bound: tail,
        comparability,
        verdict,
        rule: RuleInfo::of(&rule, delta),
        notes,
    })
}

/// Theorem and corollary forms of the characterization integral for `m = 1`
/// composition jobs.
pub fn corollary_forms(job: &HsJob) -> Result<(f64, f64)> {
    if job.rule.m() != 1 {
        return Err(Error::Validation("corollary forms are stated for m = 1".into()));
    }
    let exponent = job.source.closed_form_exponent(job.operator)?;
    crate::quadrature::mobius_consistency(exponent, &job.phi, &job.psi, job.rule.axis())
}
