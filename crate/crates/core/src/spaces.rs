//! The four source spaces, their orthonormal monomial bases, the target
//! Bergman weight `β` each theorem pairs them with, and the one-variable
//! coefficient sequences the ball sums collapse to.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::special::{ln_factorial, ln_rising};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    BergmanBall,
    HardyBall,
    BergmanPolydisk,
    HardyPolydisk,
}

impl SpaceKind {
    pub fn is_ball(self) -> bool {
        matches!(self, SpaceKind::BergmanBall | SpaceKind::HardyBall)
    }

    pub fn is_bergman(self) -> bool {
        matches!(self, SpaceKind::BergmanBall | SpaceKind::BergmanPolydisk)
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::BergmanBall => "bergman_ball",
            SpaceKind::HardyBall => "hardy_ball",
            SpaceKind::BergmanPolydisk => "bergman_polydisk",
            SpaceKind::HardyPolydisk => "hardy_polydisk",
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The space an operator acts from: `A²_α(𝔹_n)`, `H²(𝔹_n)`, `A²_α(𝔻^n)` or
/// `H²(𝔻^n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpace {
    kind: SpaceKind,
    n: usize,
    alpha: Option<f64>,
}

impl SourceSpace {
    pub fn new(kind: SpaceKind, n: usize, alpha: Option<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("dimension n must be at least 1".into()));
        }
        match (kind.is_bergman(), alpha) {
            (true, Some(a)) if a.is_finite() && a > -1.0 => {}
            (true, Some(a)) => {
                return Err(Error::InvalidWeight(format!("alpha = {a} must exceed -1")))
            }
            (true, None) => {
                return Err(Error::Validation(format!("{kind} requires alpha")));
            }
            (false, Some(_)) => {
                return Err(Error::Validation(format!("{kind} takes no alpha")));
            }
            (false, None) => {}
        }
        Ok(Self { kind, n, alpha })
    }

    pub fn bergman_ball(n: usize, alpha: f64) -> Result<Self> {
        Self::new(SpaceKind::BergmanBall, n, Some(alpha))
    }

    pub fn hardy_ball(n: usize) -> Result<Self> {
        Self::new(SpaceKind::HardyBall, n, None)
    }

    pub fn bergman_polydisk(n: usize, alpha: f64) -> Result<Self> {
        Self::new(SpaceKind::BergmanPolydisk, n, Some(alpha))
    }

    pub fn hardy_polydisk(n: usize) -> Result<Self> {
        Self::new(SpaceKind::HardyPolydisk, n, None)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn is_ball(&self) -> bool {
        self.kind.is_ball()
    }

    /// The weight of the target space `A²_β(𝔻^m)` that makes the
    /// characterization exact.
    pub fn target_beta(&self) -> Result<f64> {
        let n = self.n as f64;
        let beta = match self.kind {
            SpaceKind::BergmanPolydisk => n * (self.alpha_or_zero() + 2.0) - 2.0,
            SpaceKind::HardyPolydisk | SpaceKind::HardyBall => n - 2.0,
            SpaceKind::BergmanBall => n - 1.0 + self.alpha_or_zero(),
        };
        if beta > -1.0 {
            Ok(beta)
        } else {
            Err(Error::InvalidWeight(format!(
                "{} with n = {} gives target weight beta = {beta}, which must exceed -1",
                self.kind, self.n
            )))
        }
    }

    fn alpha_or_zero(&self) -> f64 {
        self.alpha.unwrap_or(0.0)
    }

    /// Shift `a` with `‖z^J‖^{-2} = (a)_{|J|} / J!` for ball sources:
    /// `n + α + 1` for the Bergman ball, `n` for the Hardy ball.
    fn ball_shift(&self) -> f64 {
        match self.kind {
            SpaceKind::BergmanBall => self.n as f64 + self.alpha_or_zero() + 1.0,
            SpaceKind::HardyBall => self.n as f64,
            _ => unreachable!("ball_shift on polydisk source"),
        }
    }

    /// `ln c_J²` where `c_J z^J` is the unit-norm basis vector.
    pub fn ln_basis_constant_sq(&self, j: &MultiIndex) -> f64 {
        assert_eq!(j.len(), self.n, "multi-index length must equal n");
        match self.kind {
            SpaceKind::BergmanBall | SpaceKind::HardyBall => {
                ln_rising(self.ball_shift(), j.degree() as u64) - j.log_factorial()
            }
            SpaceKind::BergmanPolydisk | SpaceKind::HardyPolydisk => j
                .parts()
                .iter()
                .map(|&ji| self.ln_factor_constant_sq(ji))
                .sum(),
        }
    }

    pub fn basis_constant_sq(&self, j: &MultiIndex) -> f64 {
        self.ln_basis_constant_sq(j).exp()
    }

    /// Per-coordinate `1/γ_j²` for polydisk sources:
    /// `Γ(j+α+2)/(j!Γ(α+2))` (Bergman) or `1` (Hardy).
    pub fn ln_factor_constant_sq(&self, j: u32) -> f64 {
        match self.kind {
            SpaceKind::BergmanPolydisk => {
                ln_rising(self.alpha_or_zero() + 2.0, j as u64) - ln_factorial(j as u64)
            }
            SpaceKind::HardyPolydisk => 0.0,
            _ => panic!("per-factor constants exist only for polydisk sources"),
        }
    }

    pub fn factor_constant_sq(&self, j: u32) -> f64 {
        self.ln_factor_constant_sq(j).exp()
    }

    /// Rejects operator/space pairings outside the characterized theorems.
    pub fn check_pairing(&self, op: OperatorKind) -> Result<()> {
        match op {
            OperatorKind::Composition => Ok(()),
            OperatorKind::RadialCompDiff { t } => {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(Error::Validation(format!("order t = {t} must be >= 0")));
                }
                if !self.is_ball() {
                    return Err(Error::UnsupportedPairing(format!(
                        "radial composition-differentiation from {}: no such theorem in scope",
                        self.kind
                    )));
                }
                Ok(())
            }
            OperatorKind::OneVarDerivative => {
                if self.kind == SpaceKind::BergmanBall && self.n == 1 {
                    Ok(())
                } else {
                    Err(Error::UnsupportedPairing(format!(
                        "one-variable derivative needs bergman_ball with n = 1, got {} with n = {}",
                        self.kind, self.n
                    )))
                }
            }
        }
    }

    /// `ln c_k`, or `None` when `c_k = 0`.
    pub fn ln_collapsed_coefficient(&self, op: OperatorKind, k: u64) -> Result<Option<f64>> {
        if !self.is_ball() {
            return Err(Error::UnsupportedSpace(format!(
                "{} sums do not collapse to one variable",
                self.kind
            )));
        }
        self.check_pairing(op)?;
        let a = self.ball_shift();
        let base = ln_rising(a, k) - ln_factorial(k);
        Ok(match op {
            OperatorKind::Composition => Some(base),
            OperatorKind::RadialCompDiff { t } => {
                (k > 0).then(|| base + 2.0 * t * (k as f64).ln())
            }
            OperatorKind::OneVarDerivative => {
                let alpha = self.alpha_or_zero();
                Some(((k + 1) as f64).ln() + ln_rising(alpha + 2.0, k + 1) - ln_factorial(k))
            }
        })
    }

    /// `c_k` with `Σ_{|J|=k} ‖Op(e_J)‖²-integrand = c_k |φ|^{2k}`.
    ///
    /// For [`OperatorKind::OneVarDerivative`] the index is the power of `|φ|²`,
    /// which comes from the basis vector of degree `k + 1`.
    pub fn collapsed_coefficient(&self, op: OperatorKind, k: u64) -> Result<f64> {
        let ln = self.ln_collapsed_coefficient(op, k)?;
        if k > DIRECT_PRODUCT_MAX {
            return Ok(ln.map_or(0.0, f64::exp));
        }
        let rising_over_factorial = |a: f64, k: u64| (0..k).fold(1.0, |acc, i| acc * (a + i as f64) / (i + 1) as f64);
        Ok(match op {
            OperatorKind::Composition => rising_over_factorial(self.ball_shift(), k),
            OperatorKind::RadialCompDiff { t } if k > 0 => {
                rising_over_factorial(self.ball_shift(), k) * (k as f64).powf(2.0 * t)
            }
            OperatorKind::RadialCompDiff { .. } => 0.0,
            OperatorKind::OneVarDerivative => {
                let alpha = self.alpha_or_zero();
                (k + 1) as f64 * (alpha + 2.0) * rising_over_factorial(alpha + 3.0, k)
            }
        })
    }

    /// Factors of `c_{k+1}/c_k`, valid for every `k` with `c_k > 0`.
    pub fn coefficient_ratio(&self, op: OperatorKind) -> Result<CoefficientRatio> {
        if !self.is_ball() {
            return Err(Error::UnsupportedSpace(format!(
                "{} has no collapsed coefficients",
                self.kind
            )));
        }
        self.check_pairing(op)?;
        let a = self.ball_shift();
        let factors = match op {
            OperatorKind::Composition => vec![RatioFactor::new(a, 1.0, 1.0)],
            OperatorKind::RadialCompDiff { t } => vec![
                RatioFactor::new(a, 1.0, 1.0),
                RatioFactor::new(1.0, 0.0, 2.0 * t),
            ],
            OperatorKind::OneVarDerivative => {
                let alpha = self.alpha_or_zero();
                vec![
                    RatioFactor::new(2.0, 1.0, 1.0),
                    RatioFactor::new(alpha + 3.0, 1.0, 1.0),
                ]
            }
        };
        Ok(CoefficientRatio { factors })
    }

    pub fn closed_form_exponent(&self, op: OperatorKind) -> Result<Exponent> {
        self.check_pairing(op)?;
        let n = self.n as f64;
        let alpha = self.alpha_or_zero();
        Ok(match (self.kind, op) {
            (SpaceKind::BergmanPolydisk, OperatorKind::Composition) => Exponent::PerFactor {
                q: alpha + 2.0,
                factors: self.n,
            },
            (SpaceKind::HardyPolydisk, OperatorKind::Composition) => Exponent::PerFactor {
                q: 1.0,
                factors: self.n,
            },
            (SpaceKind::BergmanBall, OperatorKind::OneVarDerivative) => {
                Exponent::Total(alpha + 4.0)
            }
            (SpaceKind::BergmanBall | SpaceKind::HardyBall, OperatorKind::Composition) => {
                Exponent::Total(self.ball_shift())
            }
            (SpaceKind::BergmanBall, OperatorKind::RadialCompDiff { t }) => {
                Exponent::Total(n + alpha + 2.0 * t + 1.0)
            }
            (SpaceKind::HardyBall, OperatorKind::RadialCompDiff { t }) => {
                Exponent::Total(n + 2.0 * t)
            }
            _ => unreachable!("pairing already checked"),
        })
    }

    /// Whether the basis sum equals the characterization integral exactly, as
    /// opposed to being comparable to it.
    pub fn is_exact_theorem(&self, op: OperatorKind) -> bool {
        matches!(op, OperatorKind::Composition)
    }
}

impl fmt::Display for SourceSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alpha {
            Some(a) => write!(f, "{}(n={}, alpha={a})", self.kind, self.n),
            None => write!(f, "{}(n={})", self.kind, self.n),
        }
    }
}

/// Below this index collapsed coefficients are formed as direct products.
const DIRECT_PRODUCT_MAX: u64 = 4096;

/// The operator whose Hilbert–Schmidt norm is being computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// `C_{ψ,φ} f = ψ · (f ∘ φ)`.
    Composition,
    /// `E^t_{ψ,φ} f = ψ · ((R^t f) ∘ φ)`; `t = 1` is `E_{ψ,φ}`.
    RadialCompDiff { t: f64 },
    /// `D_{ψ,φ} f = ψ · (f' ∘ φ)` on `A²_α(𝔻)`.
    OneVarDerivative,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Composition => write!(f, "composition"),
            OperatorKind::RadialCompDiff { t } => write!(f, "radial_comp_diff(t={t})"),
            OperatorKind::OneVarDerivative => write!(f, "one_var_derivative"),
        }
    }
}

/// Exponent of the characterization integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    /// `(1 - |φ|²)^{-p}` with `|φ|` the Euclidean norm.
    Total(f64),
    /// `Π_{i=1}^{factors} (1 - |φ_i|²)^{-q}`.
    PerFactor { q: f64, factors: usize },
}

impl Exponent {
    /// `p`, or `n·q` for the per-factor form.
    pub fn total(&self) -> f64 {
        match *self {
            Exponent::Total(p) => p,
            Exponent::PerFactor { q, factors } => q * factors as f64,
        }
    }
}

/// `((k + num) / (k + den))^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioFactor {
    pub num: f64,
    pub den: f64,
    pub power: f64,
}

impl RatioFactor {
    fn new(num: f64, den: f64, power: f64) -> Self {
        Self { num, den, power }
    }

    fn at(&self, k: f64) -> f64 {
        ((k + self.num) / (k + self.den)).powf(self.power)
    }
}

/// `c_{k+1}/c_k` as a product of monotone factors tending to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRatio {
    factors: Vec<RatioFactor>,
}

impl CoefficientRatio {
    pub fn at(&self, k: u64) -> f64 {
        self.factors.iter().map(|f| f.at(k as f64)).product()
    }

    /// An upper bound for `sup_{k ≥ k0} c_{k+1}/c_k`.
    ///
    /// Each factor is monotone in `k` with limit 1, so its supremum over
    /// `k ≥ k0` is `max(factor(k0), 1)`.
    pub fn sup_from(&self, k0: u64) -> f64 {
        self.factors
            .iter()
            .map(|f| f.at(k0 as f64).max(1.0))
            .product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::enumerate_degree;

    fn fact(k: u64) -> f64 {
        (1..=k).map(|i| i as f64).product()
    }

    #[test]
    fn target_beta_examples() {
        assert_eq!(SourceSpace::bergman_polydisk(2, 0.0).unwrap().target_beta().unwrap(), 2.0);
        assert_eq!(SourceSpace::hardy_ball(2).unwrap().target_beta().unwrap(), 0.0);
        assert_eq!(SourceSpace::bergman_ball(1, 0.0).unwrap().target_beta().unwrap(), 0.0);
        assert_eq!(SourceSpace::bergman_ball(1, 0.7).unwrap().target_beta().unwrap(), 0.7);
        for src in [SourceSpace::hardy_ball(1), SourceSpace::hardy_polydisk(1)] {
            assert!(matches!(src.unwrap().target_beta(), Err(Error::InvalidWeight(_))));
        }
    }

    #[test]
    fn construction_rules() {
        assert!(SourceSpace::bergman_ball(2, -1.0).is_err());
        assert!(SourceSpace::new(SpaceKind::HardyBall, 2, Some(0.0)).is_err());
        assert!(SourceSpace::new(SpaceKind::BergmanBall, 2, None).is_err());
        assert!(SourceSpace::hardy_polydisk(0).is_err());
    }

    #[test]
    fn basis_constant_examples() {
        let hb = SourceSpace::hardy_ball(2).unwrap();
        assert!((hb.basis_constant_sq(&[1, 1].into()) - 6.0).abs() < 1e-14);
        let bp = SourceSpace::bergman_polydisk(1, 0.0).unwrap();
        assert!((bp.basis_constant_sq(&[2].into()) - 3.0).abs() < 1e-14);
        for src in [
            SourceSpace::bergman_ball(3, 1.5).unwrap(),
            SourceSpace::hardy_ball(3).unwrap(),
            SourceSpace::bergman_polydisk(3, 1.5).unwrap(),
            SourceSpace::hardy_polydisk(3).unwrap(),
        ] {
            assert_eq!(src.basis_constant_sq(&MultiIndex::zero(3)), 1.0);
        }
    }

    #[test]
    fn collapsed_examples() {
        let b = SourceSpace::bergman_ball(1, 0.0).unwrap();
        for k in 0..30u64 {
            let c = b.collapsed_coefficient(OperatorKind::Composition, k).unwrap();
            assert!((c - (k + 1) as f64).abs() <= 1e-13 * (k + 1) as f64);
        }
        for src in [SourceSpace::bergman_ball(2, 0.5).unwrap(), SourceSpace::hardy_ball(3).unwrap()] {
            assert_eq!(
                src.collapsed_coefficient(OperatorKind::RadialCompDiff { t: 1.0 }, 0).unwrap(),
                0.0
            );
        }
        let h = SourceSpace::hardy_ball(2).unwrap();
        assert!((h.collapsed_coefficient(OperatorKind::Composition, 3).unwrap() - 4.0).abs() < 1e-14);
        assert!(matches!(
            SourceSpace::hardy_polydisk(2).unwrap().collapsed_coefficient(OperatorKind::Composition, 1),
            Err(Error::UnsupportedSpace(_))
        ));
    }

    #[test]
    fn one_var_derivative_coefficients() {
        // α = 0: c_k = (k+1)·(k+2)!/k!/Γ(2) = (k+1)²(k+2)
        let b = SourceSpace::bergman_ball(1, 0.0).unwrap();
        for k in 0..20u64 {
            let c = b.collapsed_coefficient(OperatorKind::OneVarDerivative, k).unwrap();
            let want = ((k + 1) * (k + 1) * (k + 2)) as f64;
            assert!((c - want).abs() <= 1e-13 * want);
        }
        assert!(SourceSpace::bergman_ball(2, 0.0)
            .unwrap()
            .check_pairing(OperatorKind::OneVarDerivative)
            .is_err());
    }

    #[test]
    fn exponents() {
        let (n, alpha, t) = (3usize, 1.5, 0.75);
        let bb = SourceSpace::bergman_ball(n, alpha).unwrap();
        assert_eq!(
            bb.closed_form_exponent(OperatorKind::RadialCompDiff { t }).unwrap(),
            Exponent::Total(n as f64 + alpha + 2.0 * t + 1.0)
        );
        assert_eq!(
            bb.closed_form_exponent(OperatorKind::RadialCompDiff { t: 1.0 }).unwrap(),
            Exponent::Total(n as f64 + alpha + 3.0)
        );
        let hp = SourceSpace::hardy_polydisk(2).unwrap();
        assert_eq!(
            hp.closed_form_exponent(OperatorKind::Composition).unwrap(),
            Exponent::PerFactor { q: 1.0, factors: 2 }
        );
        assert!(matches!(
            hp.closed_form_exponent(OperatorKind::RadialCompDiff { t: 1.0 }),
            Err(Error::UnsupportedPairing(_))
        ));
        assert!(bb.closed_form_exponent(OperatorKind::RadialCompDiff { t: -1.0 }).is_err());
    }

    #[test]
    fn exactness_flags() {
        let hb = SourceSpace::hardy_ball(2).unwrap();
        assert!(hb.is_exact_theorem(OperatorKind::Composition));
        let bb = SourceSpace::bergman_ball(1, 0.0).unwrap();
        assert!(!bb.is_exact_theorem(OperatorKind::RadialCompDiff { t: 1.0 }));
        assert!(!bb.is_exact_theorem(OperatorKind::OneVarDerivative));
    }

    #[test]
    fn ratio_matches_coefficients() {
        let ops = [
            OperatorKind::Composition,
            OperatorKind::RadialCompDiff { t: 0.5 },
            OperatorKind::RadialCompDiff { t: 2.0 },
        ];
        for src in [SourceSpace::bergman_ball(2, -0.5).unwrap(), SourceSpace::hardy_ball(2).unwrap()] {
            for op in ops {
                let ratio = src.coefficient_ratio(op).unwrap();
                for k in 1..60u64 {
                    let c0 = src.collapsed_coefficient(op, k).unwrap();
                    let c1 = src.collapsed_coefficient(op, k + 1).unwrap();
                    assert!((c1 / c0 - ratio.at(k)).abs() <= 1e-12 * ratio.at(k));
                    assert!(ratio.sup_from(k) >= (k..k + 200).map(|j| ratio.at(j)).fold(0.0, f64::max) * (1.0 - 1e-15));
                }
            }
        }
        let d = SourceSpace::bergman_ball(1, 0.3).unwrap();
        let ratio = d.coefficient_ratio(OperatorKind::OneVarDerivative).unwrap();
        for k in 0..40u64 {
            let c0 = d.collapsed_coefficient(OperatorKind::OneVarDerivative, k).unwrap();
            let c1 = d.collapsed_coefficient(OperatorKind::OneVarDerivative, k + 1).unwrap();
            assert!((c1 / c0 - ratio.at(k)).abs() <= 1e-12 * ratio.at(k));
        }
    }

    #[test]
    fn ball_constants_match_monomial_norm_closed_forms() {
        // Hardy ball: ‖z^J‖² = (n-1)! J! / (n-1+|J|)!, exact factorials
        for n in 2..=3usize {
            let src = SourceSpace::hardy_ball(n).unwrap();
            for k in 0..=8u32 {
                for j in enumerate_degree(n, k) {
                    let jf: f64 = j.parts().iter().map(|&e| fact(e as u64)).product();
                    let norm = fact(n as u64 - 1) * jf / fact(n as u64 - 1 + k as u64);
                    assert!((src.basis_constant_sq(&j) * norm - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
