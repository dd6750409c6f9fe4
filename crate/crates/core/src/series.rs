//! Polynomial symbols `ψ`, `φ = (φ_1, ..., φ_n)` in `m` complex variables,
//! their evaluation, homogeneous expansion and the radial operator `R^t`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::sum::pairwise_sum_complex;

/// A finite power series `Σ_J c_J z^J` over complex coefficients.
///
/// Keys are kept in the canonical graded order of [`MultiIndex`]; zero
/// coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialMap {
    num_vars: usize,
    coeffs: BTreeMap<MultiIndex, Complex64>,
}

impl PolynomialMap {
    pub fn zero(num_vars: usize) -> Self {
        assert!(num_vars >= 1, "polynomial needs at least one variable");
        Self {
            num_vars,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: impl Into<Complex64>) -> Self {
        Self::from_terms(num_vars, [(MultiIndex::zero(num_vars), c.into())])
    }

    pub fn monomial(exponents: impl Into<MultiIndex>, c: impl Into<Complex64>) -> Self {
        let j = exponents.into();
        Self::from_terms(j.len(), [(j, c.into())])
    }

    /// `z_i` (zero-based `i`) in `num_vars` variables.
    pub fn variable(num_vars: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(num_vars, i), 1.0)
    }

    /// Builds a polynomial, accumulating repeated exponents and dropping zeros.
    pub fn from_terms(
        num_vars: usize,
        terms: impl IntoIterator<Item = (MultiIndex, Complex64)>,
    ) -> Self {
        let mut p = Self::zero(num_vars);
        for (j, c) in terms {
            p.add_term(j, c);
        }
        p
    }

    pub fn add_term(&mut self, j: MultiIndex, c: Complex64) {
        assert_eq!(j.len(), self.num_vars, "exponent length must equal num_vars");
        let entry = self.coeffs.entry(j.clone()).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&j);
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, j: &MultiIndex) -> Complex64 {
        self.coeffs
            .get(j)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn total_degree(&self) -> u32 {
        self.coeffs.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// `Σ_J |c_J|`, an upper bound for `|p|` on the closed polydisk.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// `Σ_J |J|·|c_J|`, a bound for every angular derivative on the torus.
    pub fn angular_lipschitz(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(j, c)| j.degree() as f64 * c.norm())
            .sum()
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: z.len(),
            });
        }
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: &[Complex64]) -> Complex64 {
        let terms: Vec<Complex64> = self
            .coeffs
            .iter()
            .map(|(j, c)| {
                j.parts()
                    .iter()
                    .zip(z)
                    .fold(*c, |acc, (&e, zi)| acc * zi.powu(e))
            })
            .collect();
        pairwise_sum_complex(&terms)
    }

    /// Splits `p = Σ_k p_k` into homogeneous parts keyed by degree.
    pub fn homogeneous_parts(&self) -> BTreeMap<u32, PolynomialMap> {
        let mut parts: BTreeMap<u32, PolynomialMap> = BTreeMap::new();
        for (j, c) in &self.coeffs {
            parts
                .entry(j.degree())
                .or_insert_with(|| PolynomialMap::zero(self.num_vars))
                .coeffs
                .insert(j.clone(), *c);
        }
        parts
    }

    /// `R^t p = Σ_{k≥1} k^t p_k`. The constant term is removed for every `t`.
    pub fn radial_derivative(&self, t: f64) -> PolynomialMap {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(j, _)| !j.is_zero())
            .map(|(j, c)| (j.clone(), c * (j.degree() as f64).powf(t)))
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect();
        PolynomialMap {
            num_vars: self.num_vars,
            coeffs,
        }
    }

    /// Formal partial derivative `∂p/∂z_i` (zero-based `i`).
    pub fn derivative(&self, i: usize) -> PolynomialMap {
        let mut out = PolynomialMap::zero(self.num_vars);
        for (j, c) in &self.coeffs {
            let e = j.parts()[i];
            if e == 0 {
                continue;
            }
            let mut parts = j.parts().to_vec();
            parts[i] -= 1;
            out.add_term(MultiIndex::new(parts), c * e as f64);
        }
        out
    }

    /// `z_i · p` (zero-based `i`).
    pub fn mul_variable(&self, i: usize) -> PolynomialMap {
        let shift = MultiIndex::unit(self.num_vars, i);
        PolynomialMap {
            num_vars: self.num_vars,
            coeffs: self
                .coeffs
                .iter()
                .map(|(j, c)| (j.add(&shift), *c))
                .collect(),
        }
    }

    pub fn scale(&self, lambda: Complex64) -> PolynomialMap {
        PolynomialMap::from_terms(
            self.num_vars,
            self.coeffs.iter().map(|(j, c)| (j.clone(), c * lambda)),
        )
    }

    pub fn sum(&self, other: &PolynomialMap) -> PolynomialMap {
        assert_eq!(self.num_vars, other.num_vars);
        let mut out = self.clone();
        for (j, c) in &other.coeffs {
            out.add_term(j.clone(), *c);
        }
        out
    }
}

fn fmt_real(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    // `{}` on f64 is the shortest representation that round-trips
    write!(f, "{x}")
}

impl fmt::Display for PolynomialMap {
    /// Renders in the job-file expression grammar; the output reparses to the
    /// identical coefficient map.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (idx, (j, c)) in self.coeffs.iter().enumerate() {
            let real_only = c.im == 0.0;
            let negative = real_only && c.re.is_sign_negative();
            if idx == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mono = format_monomial(j, self.num_vars);
            if real_only {
                let mag = c.re.abs();
                match (&mono, mag == 1.0) {
                    (Some(m), true) => write!(f, "{m}")?,
                    (Some(m), false) => {
                        fmt_real(f, mag)?;
                        write!(f, "*{m}")?;
                    }
                    (None, _) => fmt_real(f, mag)?,
                }
            } else {
                write!(f, "(")?;
                fmt_real(f, c.re)?;
                write!(f, "{}", if c.im.is_sign_negative() { "-" } else { "+" })?;
                fmt_real(f, c.im.abs())?;
                write!(f, "i)")?;
                if let Some(m) = mono {
                    write!(f, "*{m}")?;
                }
            }
        }
        Ok(())
    }
}

fn format_monomial(j: &MultiIndex, num_vars: usize) -> Option<String> {
    let factors: Vec<String> = j
        .parts()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| {
            let var = if num_vars == 1 {
                "z".to_string()
            } else {
                format!("z{}", i + 1)
            };
            if e == 1 {
                var
            } else {
                format!("{var}^{e}")
            }
        })
        .collect();
    if factors.is_empty() {
        None
    } else {
        Some(factors.join("*"))
    }
}

/// Which norm the image of `φ` is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetDomain {
    /// Euclidean norm of `(φ_1, ..., φ_n)`; `φ` maps into `𝔹_n`.
    Ball,
    /// Max of component moduli; `φ` maps into `𝔻^n`.
    Polydisk,
}

/// `φ = (φ_1, ..., φ_n)`, every component in the same `m` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSymbol {
    components: Vec<PolynomialMap>,
}

impl VectorSymbol {
    pub fn new(components: Vec<PolynomialMap>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Validation(
                "symbol needs at least one component".into(),
            ));
        };
        let m = first.num_vars();
        if let Some(bad) = components.iter().find(|c| c.num_vars() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: bad.num_vars(),
            });
        }
        Ok(Self { components })
    }

    pub fn num_vars(&self) -> usize {
        self.components[0].num_vars()
    }

    /// Number of components `n`.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[PolynomialMap] {
        &self.components
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        self.components.iter().map(|c| c.eval(z)).collect()
    }
}

/// Calls `visit` at every point of the `density^m` grid on the torus `𝕋^m`.
fn for_each_torus_point(m: usize, density: usize, mut visit: impl FnMut(&[Complex64])) {
    let roots: Vec<Complex64> = (0..density)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / density as f64))
        .collect();
    let mut counter = vec![0usize; m];
    let mut point = vec![roots[0]; m];
    loop {
        for (p, &c) in point.iter_mut().zip(&counter) {
            *p = roots[c];
        }
        visit(&point);
        let mut axis = 0;
        loop {
            if axis == m {
                return;
            }
            counter[axis] += 1;
            if counter[axis] < density {
                break;
            }
            counter[axis] = 0;
            axis += 1;
        }
    }
}

/// Per-component maxima of `|φ_i|` over the boundary grid.
fn component_grid_maxima(phi: &VectorSymbol, density: usize) -> Vec<f64> {
    let mut maxima = vec![0.0f64; phi.len()];
    for_each_torus_point(phi.num_vars(), density, |z| {
        for (mx, c) in maxima.iter_mut().zip(phi.components()) {
            *mx = mx.max(c.eval_unchecked(z).norm());
        }
    });
    maxima
}

/// Grid estimate of `sup_{𝔻^m} |φ|`, taken on the distinguished boundary
/// where the maximum principle puts it.
pub fn sup_modulus_estimate(phi: &VectorSymbol, target: TargetDomain, grid_density: usize) -> f64 {
    assert!(grid_density >= 8, "grid_density must be at least 8");
    let mut best = 0.0f64;
    for_each_torus_point(phi.num_vars(), grid_density, |z| {
        let v = match target {
            TargetDomain::Ball => phi
                .components()
                .iter()
                .map(|c| c.eval_unchecked(z).norm_sqr())
                .sum::<f64>()
                .sqrt(),
            TargetDomain::Polydisk => phi
                .components()
                .iter()
                .map(|c| c.eval_unchecked(z).norm())
                .fold(0.0, f64::max),
        };
        best = best.max(v);
    });
    best
}

/// Rigorous upper bounds for `sup |φ_i|`, one per component.
///
/// Each is the smaller of the coefficient ℓ¹ norm and the grid maximum plus
/// the Lipschitz slack `(π/N)·Σ|J||c_J|` to the nearest grid point.
pub fn component_sup_bounds(phi: &VectorSymbol, grid_density: usize) -> Vec<f64> {
    assert!(grid_density >= 8, "grid_density must be at least 8");
    let slack = PI / grid_density as f64;
    component_grid_maxima(phi, grid_density)
        .into_iter()
        .zip(phi.components())
        .map(|(g, c)| inflate(c.l1_norm().min(g + slack * c.angular_lipschitz())))
        .collect()
}

/// Covers the rounding in the grid evaluation and the norm sums.
fn inflate(bound: f64) -> f64 {
    bound * (1.0 + 16.0 * f64::EPSILON)
}

/// Rigorous upper bound for `sup |φ|` in the given target norm.
pub fn sup_modulus_bound(phi: &VectorSymbol, target: TargetDomain, grid_density: usize) -> f64 {
    let grid = sup_modulus_estimate(phi, target, grid_density);
    let slack = PI / grid_density as f64;
    let per_component = component_sup_bounds(phi, grid_density);
    match target {
        TargetDomain::Ball => {
            let l1 = phi
                .components()
                .iter()
                .map(|c| c.l1_norm().powi(2))
                .sum::<f64>()
                .sqrt();
            let lip = phi
                .components()
                .iter()
                .map(|c| (slack * c.angular_lipschitz()).powi(2))
                .sum::<f64>()
                .sqrt();
            inflate(l1.min(grid + lip))
        }
        TargetDomain::Polydisk => per_component.into_iter().fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let z = PolynomialMap::variable(1, 0);
        assert_eq!(z.eval(&[c(0.3, 0.4)]).unwrap(), c(0.3, 0.4));

        let p = PolynomialMap::monomial([1, 2], 0.5);
        assert_eq!(p.eval(&[c(1.0, 0.0), c(2.0, 0.0)]).unwrap(), c(2.0, 0.0));

        let q = PolynomialMap::from_terms(
            1,
            [([2].into(), c(1.0, 0.0)), ([0].into(), c(-0.25, 0.0))],
        );
        assert_eq!(q.eval(&[c(0.5, 0.0)]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn eval_dimension_mismatch() {
        let p = PolynomialMap::monomial([1, 2], 0.5);
        assert!(matches!(
            p.eval(&[c(1.0, 0.0)]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn homogeneous_examples() {
        let p = PolynomialMap::from_terms(
            2,
            [
                ([0, 0].into(), c(1.0, 0.0)),
                ([1, 0].into(), c(1.0, 0.0)),
                ([1, 1].into(), c(1.0, 0.0)),
            ],
        );
        let parts = p.homogeneous_parts();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[&0], PolynomialMap::constant(2, 1.0));
        assert_eq!(parts[&1], PolynomialMap::monomial([1, 0], 1.0));
        assert_eq!(parts[&2], PolynomialMap::monomial([1, 1], 1.0));

        assert!(PolynomialMap::zero(1).homogeneous_parts().is_empty());
        let z3 = PolynomialMap::monomial([3], 1.0);
        assert_eq!(z3.homogeneous_parts().into_iter().collect::<Vec<_>>(), vec![(3, z3.clone())]);
    }

    #[test]
    fn radial_examples() {
        let p = PolynomialMap::monomial([1, 2], 1.0);
        assert_eq!(p.radial_derivative(1.0), PolynomialMap::monomial([1, 2], 3.0));

        let q = PolynomialMap::from_terms(1, [([0].into(), c(2.5, 1.0)), ([1].into(), c(1.0, 0.0))]);
        assert_eq!(q.radial_derivative(0.0), PolynomialMap::variable(1, 0));

        let z3 = PolynomialMap::monomial([3], 1.0);
        assert_eq!(z3.radial_derivative(2.0), PolynomialMap::monomial([3], 9.0));
    }

    #[test]
    fn sup_examples() {
        let half = PolynomialMap::monomial([1], 0.5);
        let phi = VectorSymbol::new(vec![half.clone(), half]).unwrap();
        let s = sup_modulus_estimate(&phi, TargetDomain::Ball, 64);
        assert!((s - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((sup_modulus_bound(&phi, TargetDomain::Ball, 64) - 0.5f64.sqrt()).abs() < 1e-14);

        let zero = VectorSymbol::new(vec![PolynomialMap::zero(2); 3]).unwrap();
        assert_eq!(sup_modulus_estimate(&zero, TargetDomain::Polydisk, 8), 0.0);
        assert_eq!(sup_modulus_estimate(&zero, TargetDomain::Ball, 8), 0.0);

        let phi = VectorSymbol::new(vec![PolynomialMap::monomial([1], 0.9)]).unwrap();
        assert!((sup_modulus_estimate(&phi, TargetDomain::Polydisk, 16) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn sup_bound_dominates_fine_grid() {
        // z/2 + z^2/3 attains its max at z = 1; (0.3i)z1 z2 - 0.2 z2^3 on 𝔻^2
        let p1 = PolynomialMap::from_terms(
            1,
            [([1].into(), c(0.5, 0.0)), ([2].into(), c(0.0, 1.0 / 3.0))],
        );
        let p2 = PolynomialMap::from_terms(
            2,
            [([1, 1].into(), c(0.0, 0.3)), ([0, 3].into(), c(-0.2, 0.0))],
        );
        for p in [p1, p2] {
            let phi = VectorSymbol::new(vec![p]).unwrap();
            let coarse = sup_modulus_bound(&phi, TargetDomain::Polydisk, 8);
            let fine = sup_modulus_estimate(&phi, TargetDomain::Polydisk, 512);
            assert!(coarse >= fine);
        }
    }

    fn euler(p: &PolynomialMap) -> PolynomialMap {
        (0..p.num_vars())
            .map(|i| p.derivative(i).mul_variable(i))
            .fold(PolynomialMap::zero(p.num_vars()), |acc, q| acc.sum(&q))
    }

    /// Dyadic coefficients, so integer multiples are exact.
    fn arb_poly(max_vars: usize, max_deg: u32) -> impl Strategy<Value = PolynomialMap> {
        (1..=max_vars).prop_flat_map(move |m| {
            prop::collection::vec(
                (
                    prop::collection::vec(0..=max_deg, m),
                    -2048i32..2048,
                    -2048i32..2048,
                ),
                0..8,
            )
            .prop_map(move |terms| {
                let terms = terms.into_iter().filter_map(|(e, re, im)| {
                    // keep total degree within max_deg
                    let d: u32 = e.iter().sum();
                    (d <= max_deg).then(|| (MultiIndex::new(e), c(re as f64 / 1024.0, im as f64 / 1024.0)))
                });
                PolynomialMap::from_terms(m, terms)
            })
        })
    }

    fn close_coefficientwise(a: &PolynomialMap, b: &PolynomialMap, rel: f64) -> bool {
        let keys: std::collections::BTreeSet<_> =
            a.terms().map(|(j, _)| j.clone()).chain(b.terms().map(|(j, _)| j.clone())).collect();
        keys.iter().all(|j| {
            let (x, y) = (a.coeff(j), b.coeff(j));
            (x - y).norm() <= rel * x.norm().max(y.norm())
        })
    }

    proptest! {
        #[test]
        fn radial_semigroup(p in arb_poly(3, 10)) {
            for &s in &[0.0, 0.5, 1.0, 2.0] {
                for &t in &[0.0, 0.5, 1.0, 2.0] {
                    let lhs = p.radial_derivative(s).radial_derivative(t);
                    let rhs = p.radial_derivative(s + t);
                    prop_assert!(close_coefficientwise(&lhs, &rhs, 1e-13));
                }
            }
        }

        #[test]
        fn radial_one_is_euler(p in arb_poly(3, 10)) {
            prop_assert_eq!(p.radial_derivative(1.0), euler(&p));
        }

        #[test]
        fn homogeneous_parts_reassemble(p in arb_poly(3, 10), pts in prop::collection::vec((0.0f64..0.9, 0.0f64..6.3), 3)) {
            let z: Vec<Complex64> = pts[..p.num_vars()].iter().map(|&(r, th)| Complex64::from_polar(r, th)).collect();
            let parts = p.homogeneous_parts();
            let rebuilt = parts.values().fold(PolynomialMap::zero(p.num_vars()), |acc, q| acc.sum(q));
            prop_assert_eq!(&rebuilt, &p);
            let direct = p.eval(&z).unwrap();
            let by_parts: Complex64 = parts.values().map(|q| q.eval(&z).unwrap()).sum();
            prop_assert!((direct - by_parts).norm() <= 1e-12 * direct.norm().max(1.0));
        }

        #[test]
        fn monomial_law(e in prop::collection::vec(0u32..6, 1..4), t in 0.0f64..3.0, pts in prop::collection::vec((0.0f64..1.0, 0.0f64..6.3), 3)) {
            let j = MultiIndex::new(e);
            let m = j.len();
            let w: Vec<Complex64> = pts[..m].iter().map(|&(r, th)| Complex64::from_polar(r, th)).collect();
            let p = PolynomialMap::monomial(j.clone(), 1.0);
            let lhs = p.radial_derivative(t).eval(&w).unwrap();
            let wj: Complex64 = j.parts().iter().zip(&w).map(|(&e, wi)| wi.powu(e)).product();
            let rhs = if j.is_zero() { Complex64::new(0.0, 0.0) } else { wj * (j.degree() as f64).powf(t) };
            prop_assert!((lhs - rhs).norm() <= 1e-13 * rhs.norm().max(1e-300));
        }

        #[test]
        fn radial_kills_constants(re in -5.0f64..5.0, t in 0.0f64..4.0) {
            let p = PolynomialMap::constant(2, re);
            prop_assert!(p.radial_derivative(t).is_zero());
        }
    }
}
