//! State space, rates, vector field and linearisation of the feedback-SIRS
//! system
//!
//! ```text
//! dS/dt = -beta S I + xi (1 - S - I)
//! dI/dt =  beta S I - Gamma I
//! dGamma/dt = Gamma (alpha I - delta S)
//! ```
//!
//! The recovered fraction is never stored: `R = 1 - S - I`.
//! With `alpha = delta = 0` the recovery rate is frozen at its initial value
//! and the system is the textbook SIRS model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Max-norm of the flow accepted at a constructed fixed point.
pub const FIXED_POINT_RESIDUAL_TOL: f64 = 1e-10;

/// Slack on the nonnegativity / simplex checks for a [`State`].
pub const STATE_SLACK: f64 = 1e-12;

/// The four rates of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct Params {
    /// Transmission rate.
    pub beta: f64,
    /// Rate at which recovered individuals become susceptible again.
    pub xi: f64,
    /// Interest saturation.
    pub alpha: f64,
    /// Influencing enthusiasm.
    pub delta: f64,
}

#[derive(Deserialize)]
struct RawParams {
    beta: f64,
    xi: f64,
    alpha: f64,
    delta: f64,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.beta, raw.xi, raw.alpha, raw.delta)
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        });
    }
    Ok(())
}

fn check_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        });
    }
    Ok(())
}

impl Params {
    pub fn new(beta: f64, xi: f64, alpha: f64, delta: f64) -> Result<Self> {
        let params = Params {
            beta,
            xi,
            alpha,
            delta,
        };
        params.validate()?;
        Ok(params)
    }

    /// Restricted model: `alpha = delta`.
    pub fn restricted(beta: f64, xi: f64, alpha: f64) -> Result<Self> {
        Self::new(beta, xi, alpha, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("beta", self.beta)?;
        check_positive("xi", self.xi)?;
        check_nonnegative("alpha", self.alpha)?;
        check_nonnegative("delta", self.delta)
    }

    /// True when the recovery rate does not evolve (standard SIRS).
    pub fn is_frozen(&self) -> bool {
        self.alpha == 0.0 && self.delta == 0.0
    }

    fn require_feedback(&self) -> Result<()> {
        self.validate()?;
        check_positive("alpha", self.alpha)?;
        check_positive("delta", self.delta)
    }
}

/// A point `(S, I, Gamma)` of the reduced system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub s: f64,
    pub i: f64,
    #[serde(rename = "gamma")]
    pub gamma_var: f64,
}

impl State {
    pub fn new(s: f64, i: f64, gamma_var: f64) -> Result<Self> {
        let state = State { s, i, gamma_var };
        state.validate(STATE_SLACK)?;
        Ok(state)
    }

    /// `(0.9, 0.1, 0.1)`, the initial condition used throughout.
    pub fn default_initial() -> Self {
        State {
            s: 0.9,
            i: 0.1,
            gamma_var: 0.1,
        }
    }

    pub fn r(&self) -> f64 {
        1.0 - self.s - self.i
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.s, self.i, self.gamma_var]
    }

    pub fn from_array(x: [f64; 3]) -> Self {
        State {
            s: x[0],
            i: x[1],
            gamma_var: x[2],
        }
    }

    pub fn validate(&self, slack: f64) -> Result<()> {
        let [s, i, g] = self.as_array();
        if !(s.is_finite() && i.is_finite() && g.is_finite()) {
            return Err(Error::Domain(format!("non-finite state {self:?}")));
        }
        if s < -slack || i < -slack || s + i > 1.0 + slack {
            return Err(Error::Domain(format!(
                "need s, i >= 0 and s + i <= 1, got s = {s}, i = {i}"
            )));
        }
        if g <= 0.0 {
            return Err(Error::Domain(format!("need gamma > 0, got {g}")));
        }
        Ok(())
    }

    /// Max-norm distance.
    pub fn distance(&self, other: &State) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Parameters and state in one flat JSON object
/// (`beta, xi, alpha, delta, s, i, gamma`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(flatten)]
    pub params: Params,
    #[serde(flatten)]
    pub state: State,
}

/// Interior fixed point together with the flow residual measured there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub state: State,
    pub residual_norm: f64,
}

impl FixedPoint {
    fn checked(state: State, params: &Params) -> Result<Self> {
        let residual_norm = max_norm(flow(&state, params));
        if !(state.s > 0.0 && state.i > 0.0 && state.gamma_var > 0.0 && state.s + state.i < 1.0) {
            return Err(Error::Domain(format!(
                "fixed point {state:?} not interior for {params:?}"
            )));
        }
        if residual_norm >= FIXED_POINT_RESIDUAL_TOL {
            return Err(Error::Domain(format!(
                "fixed point residual {residual_norm:e} for {params:?}"
            )));
        }
        Ok(FixedPoint {
            state,
            residual_norm,
        })
    }
}

/// Coefficients of `p(lambda) = a3 lambda^3 + a2 lambda^2 + a1 lambda + a0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicCoeffs {
    pub a3: f64,
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl CubicCoeffs {
    pub fn eval(&self, x: f64) -> f64 {
        ((self.a3 * x + self.a2) * x + self.a1) * x + self.a0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (3.0 * self.a3 * x + 2.0 * self.a2) * x + self.a1
    }
}

pub type Matrix3 = [[f64; 3]; 3];

pub(crate) fn max_norm(v: [f64; 3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Vector field `(dS/dt, dI/dt, dGamma/dt)`.
pub fn flow(state: &State, params: &Params) -> [f64; 3] {
    let State { s, i, gamma_var: g } = *state;
    let Params {
        beta,
        xi,
        alpha,
        delta,
    } = *params;
    [
        -beta * s * i + xi * (1.0 - s - i),
        beta * s * i - g * i,
        g * (alpha * i - delta * s),
    ]
}

/// Unique interior fixed point. Requires all four rates strictly positive.
pub fn fixed_point(params: &Params) -> Result<FixedPoint> {
    params.require_feedback()?;
    let Params {
        beta,
        xi,
        alpha,
        delta,
    } = *params;
    let ratio = beta / xi;
    // "+" root of delta (beta/xi) S^2 + (alpha + delta) S - alpha = 0; the
    // other root is negative.
    let sum = alpha + delta;
    let disc = sum * sum + 4.0 * alpha * delta * ratio;
    let s = (-sum + disc.sqrt()) / (2.0 * delta * ratio);
    let state = State {
        s,
        i: delta / alpha * s,
        gamma_var: beta * s,
    };
    FixedPoint::checked(state, params)
}

/// Fixed point of the restricted model `alpha = delta` (independent of alpha).
pub fn fixed_point_restricted(beta: f64, xi: f64) -> Result<FixedPoint> {
    check_positive("beta", beta)?;
    check_positive("xi", xi)?;
    let s = 1.0 / (1.0 + ((beta + xi) / xi).sqrt());
    let state = State {
        s,
        i: s,
        gamma_var: beta * s,
    };
    // Any alpha gives the same point; alpha = 1 is only used for the residual.
    FixedPoint::checked(state, &Params::restricted(beta, xi, 1.0)?)
}

/// Endemic equilibrium of the frozen-recovery model at rate `gamma`;
/// the disease-free point `(1, 0, gamma)` when `gamma >= beta`.
pub fn endemic_equilibrium(beta: f64, xi: f64, gamma: f64) -> Result<State> {
    check_positive("beta", beta)?;
    check_positive("xi", xi)?;
    check_positive("gamma", gamma)?;
    if gamma >= beta {
        return Ok(State {
            s: 1.0,
            i: 0.0,
            gamma_var: gamma,
        });
    }
    let s = gamma / beta;
    Ok(State {
        s,
        i: xi * (1.0 - s) / (xi + gamma),
        gamma_var: gamma,
    })
}

/// The attracting candidate the dynamics should settle on, if any:
/// the interior fixed point with feedback, the endemic equilibrium when
/// the recovery rate is frozen, `None` for half-frozen parameter sets.
pub fn reference_equilibrium(params: &Params, gamma: f64) -> Option<State> {
    if params.is_frozen() {
        endemic_equilibrium(params.beta, params.xi, gamma).ok()
    } else {
        fixed_point(params).ok().map(|fp| fp.state)
    }
}

pub fn jacobian(state: &State, params: &Params) -> Matrix3 {
    let State { s, i, gamma_var: g } = *state;
    let Params {
        beta,
        xi,
        alpha,
        delta,
    } = *params;
    [
        [-(beta * i + xi), -(beta * s + xi), 0.0],
        [beta * i, beta * s - g, -i],
        [-delta * g, alpha * g, alpha * i - delta * s],
    ]
}

/// `det(J - lambda I)` at an arbitrary state, expanded from the Jacobian:
/// `-lambda^3 + tr(J) lambda^2 - M2 lambda + det(J)` with `M2` the sum of
/// the principal 2x2 minors.
pub fn char_poly_at(state: &State, params: &Params) -> CubicCoeffs {
    let j = jacobian(state, params);
    let trace = j[0][0] + j[1][1] + j[2][2];
    let minors = j[0][0] * j[1][1] - j[0][1] * j[1][0] + j[0][0] * j[2][2] - j[0][2] * j[2][0]
        + j[1][1] * j[2][2]
        - j[1][2] * j[2][1];
    let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
        - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
    CubicCoeffs {
        a3: -1.0,
        a2: trace,
        a1: -minors,
        a0: det,
    }
}

/// Characteristic polynomial at the interior fixed point, written with the
/// fixed-point relations substituted. Every coefficient is strictly negative.
pub fn char_poly_at_fixed_point(params: &Params) -> Result<CubicCoeffs> {
    let fp = fixed_point(params)?;
    let State { s, i, gamma_var: g } = fp.state;
    let Params {
        beta,
        xi,
        alpha,
        delta,
    } = *params;
    Ok(CubicCoeffs {
        a3: -1.0,
        a2: -(beta * i + xi),
        a1: -(alpha * g + beta * beta * s + beta * xi) * i,
        a0: -(beta * delta * s + delta * xi + alpha * beta * i + alpha * xi) * g * i,
    })
}
