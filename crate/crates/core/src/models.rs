//! Diffusion coefficients `μ` for the quasilinear operator
//! `F(u) = -div(μ(|∇u|²)∇u) - g`, their derivatives and the potential
//! density `ψ(s) = ½∫₀ˢ μ(t) dt`, together with the structural constants
//! of the resulting operator.

use std::f64::consts::PI;

/// Functional form of the diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    /// `μ(t) = 1/(t+1) + 1/2`
    Rational,
    /// Bercovier-Engelman regularised Bingham viscosity `μ(t) = γ/√(t+k⁻²) + 2ζ`.
    BercovierEngelman { gamma: f64, zeta: f64, k: f64 },
    /// `μ ≡ c`, which makes the operator linear.
    Constant(f64),
}

/// A diffusion coefficient together with the band constants
/// `m_μ (t−s) ≤ μ(t²)t − μ(s²)s ≤ M_μ (t−s)` for `t ≥ s ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionModel {
    pub coefficient: Coefficient,
    pub m_mu: f64,
    pub big_m_mu: f64,
}

impl DiffusionModel {
    pub fn mu(&self, t: f64) -> f64 {
        match self.coefficient {
            Coefficient::Rational => 1.0 / (t + 1.0) + 0.5,
            Coefficient::BercovierEngelman { gamma, zeta, k } => gamma / (t + 1.0 / (k * k)).sqrt() + 2.0 * zeta,
            Coefficient::Constant(c) => c,
        }
    }

    pub fn mu_prime(&self, t: f64) -> f64 {
        match self.coefficient {
            Coefficient::Rational => -1.0 / ((t + 1.0) * (t + 1.0)),
            Coefficient::BercovierEngelman { gamma, k, .. } => -0.5 * gamma * (t + 1.0 / (k * k)).powf(-1.5),
            Coefficient::Constant(_) => 0.0,
        }
    }

    /// `ψ(s) = ½∫₀ˢ μ(t) dt` in closed form.
    pub fn psi(&self, s: f64) -> f64 {
        match self.coefficient {
            Coefficient::Rational => 0.5 * s.ln_1p() + 0.25 * s,
            Coefficient::BercovierEngelman { gamma, zeta, k } => {
                gamma * ((s + 1.0 / (k * k)).sqrt() - 1.0 / k) + zeta * s
            }
            Coefficient::Constant(c) => 0.5 * c * s,
        }
    }

    /// `ψ(q + dq) − ψ(q)` without the cancellation of subtracting two
    /// nearly equal values.
    pub fn psi_increment(&self, q: f64, dq: f64) -> f64 {
        match self.coefficient {
            Coefficient::Rational => 0.5 * (dq / (1.0 + q)).ln_1p() + 0.25 * dq,
            Coefficient::BercovierEngelman { gamma, zeta, k } => {
                let eps = 1.0 / (k * k);
                gamma * dq / ((q + dq + eps).sqrt() + (q + eps).sqrt()) + zeta * dq
            }
            Coefficient::Constant(c) => 0.5 * c * dq,
        }
    }

    pub fn constants(&self) -> StructuralConstants {
        StructuralConstants::from_band(self.m_mu, self.big_m_mu)
    }
}

/// Operator constants derived from the `μ` band:
/// coercivity `α_F′ = m_μ`, boundedness `β_F′ = 2M_μ − m_μ`,
/// Lipschitz `L = 3M_μ`, strong monotonicity `ν = m_μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralConstants {
    pub m_mu: f64,
    pub big_m_mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lipschitz: f64,
    pub nu: f64,
    /// Smallest damping parameter the adaptive scheme tries, `α_F′/L`.
    pub damping_floor: f64,
}

impl StructuralConstants {
    pub fn from_band(m_mu: f64, big_m_mu: f64) -> Self {
        let alpha = m_mu;
        let lipschitz = 3.0 * big_m_mu;
        Self {
            m_mu,
            big_m_mu,
            alpha,
            beta: 2.0 * big_m_mu - m_mu,
            lipschitz,
            nu: m_mu,
            damping_floor: alpha / lipschitz,
        }
    }

    /// Decay constant `θ·min{α_F′, L}` of the sufficient-decrease test.
    pub fn decay_constant(&self, theta: f64) -> f64 {
        theta * self.alpha.min(self.lipschitz)
    }
}

/// `μ(t) = 1/(t+1) + 1/2` with `m_μ = 3/8`, `M_μ = 3/2`.
pub fn model_experiment1() -> (DiffusionModel, StructuralConstants) {
    let model = DiffusionModel {
        coefficient: Coefficient::Rational,
        m_mu: 3.0 / 8.0,
        big_m_mu: 1.5,
    };
    (model, model.constants())
}

/// Bercovier-Engelman coefficient with `m_μ = 2ζ`, `M_μ = 2ζ + kγ`.
pub fn bercovier_engelman(gamma: f64, zeta: f64, k: f64) -> DiffusionModel {
    DiffusionModel {
        coefficient: Coefficient::BercovierEngelman { gamma, zeta, k },
        m_mu: 2.0 * zeta,
        big_m_mu: 2.0 * zeta + k * gamma,
    }
}

/// Bercovier-Engelman coefficient with `γ = 0.3`, `ζ = 1`, `k = 100`.
pub fn model_experiment2() -> (DiffusionModel, StructuralConstants) {
    let model = bercovier_engelman(0.3, 1.0, 100.0);
    (model, model.constants())
}

/// `μ ≡ c`; the band degenerates to `m_μ = M_μ = c`.
pub fn model_constant(c: f64) -> (DiffusionModel, StructuralConstants) {
    let model = DiffusionModel {
        coefficient: Coefficient::Constant(c),
        m_mu: c,
        big_m_mu: c,
    };
    (model, model.constants())
}

/// A smooth exact solution used to manufacture the source term weakly.
pub trait ExactSolution {
    fn value(&self, x: f64, y: f64) -> f64;
    fn grad(&self, x: f64, y: f64) -> [f64; 2];
}

/// `u⋆(x, y) = sin(πx) sin(πy)`, vanishing on the boundary of both the unit
/// square and the L-shape.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SineProduct;

impl ExactSolution for SineProduct {
    fn value(&self, x: f64, y: f64) -> f64 {
        (PI * x).sin() * (PI * y).sin()
    }

    fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        [
            PI * (PI * x).cos() * (PI * y).sin(),
            PI * (PI * x).sin() * (PI * y).cos(),
        ]
    }
}

/// Model data plus exact solution defining a manufactured problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedProblem<E> {
    pub model: DiffusionModel,
    pub exact: E,
}

pub fn exact_solution() -> SineProduct {
    SineProduct
}
