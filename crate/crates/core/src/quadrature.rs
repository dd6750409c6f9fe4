//! Integration against `dA_β` on the disk and its tensor powers `dV_β` on
//! `𝔻^m`.
//!
//! With `z = √x e^{iθ}` the probability measure
//! `dA_β = (β+1)(1-|z|²)^β dA` becomes `(β+1)(1-x)^β dx × dθ/2π`. The radial
//! factor is handled by a Gauss–Jacobi rule on `[0,1]` carrying the weight
//! `(1-x)^β`, the angular factor by the uniform rule on the circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::{PolynomialMap, VectorSymbol};
use crate::spaces::Exponent;
use crate::sum::{pairwise_sum, pairwise_sum_complex};

pub const DEFAULT_RADIAL: usize = 64;
pub const DEFAULT_ANGULAR: usize = 128;
pub const MAX_RADIAL: usize = 512;
pub const MAX_ANGULAR: usize = 1024;

/// Maximum QL sweeps per eigenvalue before giving up.
const QL_MAX_ITER: usize = 60;

/// Gauss–Jacobi nodes and weights on `[-1, 1]` for `(1-u)^a (1+u)^b`.
///
/// Nodes are eigenvalues of the Jacobi matrix (Golub–Welsch), polished by a
/// Newton step on the three-term recurrence. Weights are returned normalized
/// to sum to 1 and computed as `1 / Σ_k p_k(u_i)²` with `p_k` orthonormal for
/// the normalized weight, which equals the squared first eigenvector
/// component but keeps full relative accuracy for tiny weights.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::InvalidRuleSize("need at least one node".into()));
    }
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::InvalidWeight(format!(
            "Jacobi parameters ({a}, {b}) must exceed -1"
        )));
    }
    let (diag, off_sq) = jacobi_recurrence(n + 1, a, b);
    let off: Vec<f64> = off_sq.iter().map(|v| v.sqrt()).collect();

    let mut eig = diag[..n].to_vec();
    let mut sub = off[..n - 1].to_vec();
    tridiagonal_eigenvalues(&mut eig, &mut sub)?;
    eig.sort_by(|x, y| x.total_cmp(y));

    let mut rule = Vec::with_capacity(n);
    for &u0 in &eig {
        let mut u = u0;
        let (pn, dpn, _) = orthonormal_eval(u, n, &diag, &off);
        if dpn != 0.0 {
            let step = pn / dpn;
            if step.abs() < 1e-8 {
                u -= step;
            }
        }
        let (_, _, christoffel) = orthonormal_eval(u, n, &diag, &off);
        rule.push((u, 1.0 / christoffel));
    }
    let total = pairwise_sum(&rule.iter().map(|&(_, w)| w).collect::<Vec<_>>());
    for node in &mut rule {
        node.1 /= total;
    }
    Ok(rule)
}

/// Recurrence coefficients for the monic Jacobi polynomials: diagonal
/// `a_0..a_{len-1}` and squared off-diagonal `b_1..b_{len-1}`.
fn jacobi_recurrence(len: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = a + b;
    let diag = (0..len)
        .map(|k| {
            if k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                let s = 2.0 * k as f64 + ab;
                (b * b - a * a) / (s * (s + 2.0))
            }
        })
        .collect();
    let off_sq = (1..len)
        .map(|k| {
            let k = k as f64;
            let s = 2.0 * k + ab;
            4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))
        })
        .collect();
    (diag, off_sq)
}

/// Returns `(q_n(u), q_n'(u), Σ_{k<n} p_k(u)²)` where `p_k` are orthonormal
/// (`p_0 = 1`) and `q_n = √b_n p_n` shares its zeros with `p_n`.
fn orthonormal_eval(u: f64, n: usize, diag: &[f64], off: &[f64]) -> (f64, f64, f64) {
    let (mut p_prev, mut p) = (0.0f64, 1.0f64);
    let (mut d_prev, mut d) = (0.0f64, 0.0f64);
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += p * p;
        let back = if k == 0 { 0.0 } else { off[k - 1] };
        let q = (u - diag[k]) * p - back * p_prev;
        let dq = p + (u - diag[k]) * d - back * d_prev;
        if k + 1 == n {
            return (q, dq, sum_sq);
        }
        let scale = off[k];
        p_prev = p;
        d_prev = d;
        p = q / scale;
        d = dq / scale;
    }
    unreachable!("n >= 1")
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// sub-diagonal `e` by implicit QL with Wilkinson shifts. `d` is overwritten.
fn tridiagonal_eigenvalues(d: &mut [f64], e_in: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(e_in);
    for l in 0..n {
        let mut iter = 0;
        'sweep: loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::QuadratureValidation(
                    "QL iteration did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    continue 'sweep;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// `∫_0^1 x^j dμ_β` for the probability measure `(β+1)(1-x)^β dx`, which is
/// `j! Γ(β+2) / Γ(j+β+2)`.
pub fn radial_moment(beta: f64, j: u32) -> f64 {
    (1..=j).fold(1.0, |acc, i| acc * i as f64 / (i as f64 + beta + 1.0))
}

/// Quadrature for `∫_𝔻 f dA_β`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskRule {
    beta: f64,
    /// `(x, w)` with `x = |z|²` and `w` the weight of the probability measure
    /// `(β+1)(1-x)^β dx`; the `w` sum to 1.
    radial: Vec<(f64, f64)>,
    angular_count: usize,
}

impl DiskRule {
    pub fn new(beta: f64, n_rad: usize, n_ang: usize) -> Result<Self> {
        if !(beta.is_finite() && beta > -1.0) {
            return Err(Error::InvalidWeight(format!("beta = {beta} must exceed -1")));
        }
        if n_rad < 2 || n_ang < 4 {
            return Err(Error::InvalidRuleSize(format!(
                "need radial >= 2 and angular >= 4, got ({n_rad}, {n_ang})"
            )));
        }
        let radial: Vec<(f64, f64)> = gauss_jacobi(n_rad, beta, 0.0)?
            .into_iter()
            .map(|(u, w)| ((1.0 + u) / 2.0, w))
            .collect();
        let rule = Self {
            beta,
            radial,
            angular_count: n_ang,
        };
        rule.validate_moments()?;
        Ok(rule)
    }

    fn validate_moments(&self) -> Result<()> {
        let top = (2 * self.radial.len() - 1).min(12) as u32;
        for j in 0..=top {
            let terms: Vec<f64> = self.radial.iter().map(|&(x, w)| w * x.powi(j as i32)).collect();
            let got = pairwise_sum(&terms);
            let want = radial_moment(self.beta, j);
            if (got - want).abs() > 1e-11 * want {
                return Err(Error::QuadratureValidation(format!(
                    "moment {j} is {got}, expected {want}"
                )));
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn radial_count(&self) -> usize {
        self.radial.len()
    }

    pub fn angular_count(&self) -> usize {
        self.angular_count
    }

    /// `(x, w)` pairs, `w` normalized to sum to 1.
    pub fn radial_nodes(&self) -> &[(f64, f64)] {
        &self.radial
    }

    /// Weights of the unnormalized Gauss–Jacobi rule for `(1-x)^β dx` on
    /// `[0, 1]`; they sum to `1/(β+1)`.
    pub fn jacobi_weights(&self) -> Vec<f64> {
        self.radial.iter().map(|&(_, w)| w / (self.beta + 1.0)).collect()
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.angular_count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nodes in radial-major order with weights summing to 1.
    pub fn nodes(&self) -> Vec<(Complex64, f64)> {
        let inv = 1.0 / self.angular_count as f64;
        let angles: Vec<Complex64> = (0..self.angular_count)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 * inv))
            .collect();
        self.radial
            .iter()
            .flat_map(|&(x, w)| {
                let r = x.sqrt();
                angles.iter().map(move |a| (a * r, w * inv))
            })
            .collect()
    }

    pub fn integrate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(&[Complex64]) -> Complex64 + Sync,
    {
        PolydiskRule::new(1, self.clone()).integrate(f)
    }

    /// Same resolution with both counts doubled.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.beta, 2 * self.radial.len(), 2 * self.angular_count)
    }
}

/// Tensor product of `m` copies of a [`DiskRule`], integrating against
/// `dV_β = dA_β(z_1) ⋯ dA_β(z_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolydiskRule {
    m: usize,
    axis: DiskRule,
}

impl PolydiskRule {
    pub fn new(m: usize, axis: DiskRule) -> Self {
        assert!(m >= 1, "polydisk rule needs m >= 1");
        Self { m, axis }
    }

    pub fn build(m: usize, beta: f64, n_rad: usize, n_ang: usize) -> Result<Self> {
        Ok(Self::new(m, DiskRule::new(beta, n_rad, n_ang)?))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn axis(&self) -> &DiskRule {
        &self.axis
    }

    pub fn beta(&self) -> f64 {
        self.axis.beta
    }

    pub fn len(&self) -> usize {
        self.axis.len().pow(self.m as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn refined(&self) -> Result<Self> {
        Ok(Self::new(self.m, self.axis.refined()?))
    }

    /// Materializes all tensor nodes, first coordinate varying slowest.
    pub fn nodes(&self) -> TensorNodes {
        let axis = self.axis.nodes();
        let total = self.len();
        let mut points = Vec::with_capacity(total * self.m);
        let mut weights = Vec::with_capacity(total);
        let mut counter = vec![0usize; self.m];
        for _ in 0..total {
            let mut w = 1.0;
            for &c in &counter {
                points.push(axis[c].0);
                w *= axis[c].1;
            }
            weights.push(w);
            for slot in counter.iter_mut().rev() {
                *slot += 1;
                if *slot < axis.len() {
                    break;
                }
                *slot = 0;
            }
        }
        TensorNodes {
            m: self.m,
            points,
            weights,
        }
    }

    pub fn integrate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(&[Complex64]) -> Complex64 + Sync,
    {
        self.nodes().integrate(f)
    }
}

/// Flattened nodes of a [`PolydiskRule`].
#[derive(Debug, Clone)]
pub struct TensorNodes {
    m: usize,
    points: Vec<Complex64>,
    weights: Vec<f64>,
}

impl TensorNodes {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[Complex64] {
        &self.points[i * self.m..(i + 1) * self.m]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Evaluates `f` at every node (in parallel) and reduces pairwise in node
    /// order, so the result is bit-stable for a given rule.
    pub fn integrate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(&[Complex64]) -> Complex64 + Sync,
    {
        let values: Vec<Complex64> = (0..self.len())
            .into_par_iter()
            .map(|i| f(self.point(i)))
            .collect();
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFiniteSample {
                point: self.point(i).to_vec(),
                value: values[i],
            });
        }
        let weighted: Vec<Complex64> = values
            .iter()
            .zip(&self.weights)
            .map(|(v, &w)| v * w)
            .collect();
        Ok(pairwise_sum_complex(&weighted))
    }

    /// Real-valued integrand; values are supplied per node.
    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        assert_eq!(values.len(), self.len());
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                point: self.point(i).to_vec(),
                value: Complex64::new(values[i], 0.0),
            });
        }
        let weighted: Vec<f64> = values
            .iter()
            .zip(&self.weights)
            .map(|(v, &w)| v * w)
            .collect();
        Ok(pairwise_sum(&weighted))
    }
}

/// Evaluates the characterization integral in its theorem form
/// `∫ |ψ|² (1-|φ|²)^{-p} dA_β` and in its corollary form, where
/// `dA_β = (β+1)(1-|z|²)^{β+2} dλ` is inserted and the integrand
/// `(β+1)|ψ|² ((1-|z|²)/(1-|φ|²))^p (1-|z|²)^{β+2-p}` is integrated against
/// the Möbius measure `dλ = dA/(1-|z|²)²`. Both use the nodes of `rule`.
pub fn mobius_consistency(
    exponent: Exponent,
    phi: &VectorSymbol,
    psi: &PolynomialMap,
    rule: &DiskRule,
) -> Result<(f64, f64)> {
    if phi.num_vars() != 1 || psi.num_vars() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: phi.num_vars().max(psi.num_vars()),
        });
    }
    if let Exponent::PerFactor { factors, .. } = exponent {
        if factors != phi.len() {
            return Err(Error::DimensionMismatch {
                expected: factors,
                got: phi.len(),
            });
        }
    }
    let beta = rule.beta();
    let total = exponent.total();
    let nodes = PolydiskRule::new(1, rule.clone()).nodes();

    // (1 - |φ|²) factors as (base, power) pairs
    let deficits = |z: &[Complex64]| -> Vec<(f64, f64)> {
        let vals = phi.components().iter().map(|c| c.eval_unchecked(z).norm_sqr());
        match exponent {
            Exponent::Total(p) => vec![(1.0 - vals.sum::<f64>(), p)],
            Exponent::PerFactor { q, .. } => vals.map(|v| (1.0 - v, q)).collect(),
        }
    };

    let lhs = nodes.integrate(|z| {
        let w = psi.eval_unchecked(z).norm_sqr();
        let v: f64 = deficits(z).iter().map(|&(d, p)| d.powf(-p)).product();
        Complex64::new(w * v, 0.0)
    })?;

    let rhs = nodes.integrate(|z| {
        let s = 1.0 - z[0].norm_sqr();
        let w = psi.eval_unchecked(z).norm_sqr();
        let invariant: f64 = deficits(z).iter().map(|&(d, p)| (s / d).powf(p)).product();
        let corollary = (beta + 1.0) * w * invariant * s.powf(beta + 2.0 - total);
        // dλ expressed through the rule's measure
        let dlambda_per_dabeta = 1.0 / ((beta + 1.0) * s.powf(beta + 2.0));
        Complex64::new(corollary * dlambda_per_dabeta, 0.0)
    })?;

    Ok((lhs.re, rhs.re))
}

/// Errors of the default disk rule against exact moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelftestOutcome {
    pub beta: f64,
    /// `|∫ dA_β - 1|`.
    pub mass_error: f64,
    /// Largest relative error of `∫|z|^{2j} dA_β`, `j ≤ 127`.
    pub moment_error: f64,
    /// Largest `|∫ z^a z̄^b dA_β|` with `a ≠ b`, `a, b < 64`.
    pub angular_error: f64,
}

impl SelftestOutcome {
    pub fn passed(&self) -> bool {
        self.mass_error <= 1e-14 && self.moment_error <= 1e-12 && self.angular_error <= 1e-14
    }
}

/// Checks the default rule for `dA_β`.
pub fn selftest(beta: f64) -> Result<SelftestOutcome> {
    let rule = DiskRule::new(beta, DEFAULT_RADIAL, DEFAULT_ANGULAR)?;
    let moment = |j: i32| pairwise_sum(&rule.radial.iter().map(|&(x, w)| w * x.powi(j)).collect::<Vec<_>>());
    let mass_error = (moment(0) - 1.0).abs();
    let moment_error = (0..128)
        .map(|j| {
            let want = radial_moment(beta, j as u32);
            (moment(j) - want).abs() / want
        })
        .fold(0.0, f64::max);
    let nodes = rule.nodes();
    let mut angular_error = 0.0f64;
    for a in (0..64).step_by(7) {
        for b in (0..64).step_by(5) {
            if a == b {
                continue;
            }
            let terms: Vec<Complex64> = nodes
                .iter()
                .map(|&(z, w)| z.powu(a) * z.conj().powu(b) * w)
                .collect();
            angular_error = angular_error.max(pairwise_sum_complex(&terms).norm());
        }
    }
    Ok(SelftestOutcome {
        beta,
        mass_error,
        moment_error,
        angular_error,
    })
}
