//! Diffusion coefficients.
//!
//! The noisy term of the equation carries a coefficient `sigma` on `[0,1]`
//! that vanishes at both endpoints and is Hölder continuous of some order
//! `alpha` in `[1/2, 1)` — the non-Lipschitz class that makes the problem
//! interesting. Two canonical members are built in:
//!
//! * `sqrt(x(1-x))`, the stepping-stone coefficient, `alpha = 1/2`;
//! * `-x^gamma log(x)` for `gamma` in `(1/2, 1]`, Hölder of any order below
//!   `gamma`.
//!
//! [`holder_estimate`] and [`envelope_check`] probe the Hölder constant and
//! the endpoint envelope `sigma(x) <= c min(x, 1-x)^alpha` empirically on
//! sample grids.

use std::sync::Arc;

use crate::exec;
use crate::{Error, Result};

type SigmaFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Diffusion coefficient on `[0,1]` with its declared Hölder order.
#[derive(Clone)]
pub struct SigmaCoefficient {
    eval: Arc<SigmaFn>,
    alpha: f64,
    name: String,
    identically_zero: bool,
}

impl std::fmt::Debug for SigmaCoefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SigmaCoefficient")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .finish()
    }
}

/// Largest value the endpoint checks tolerate for custom coefficients.
const ENDPOINT_TOL: f64 = 1e-12;

impl SigmaCoefficient {
    /// `sigma(x) = sqrt(x(1-x))`, the stepping-stone coefficient.
    pub fn stepping_stone() -> Self {
        SigmaCoefficient {
            eval: Arc::new(|x: f64| (x * (1.0 - x)).sqrt()),
            alpha: 0.5,
            name: "stepping-stone".into(),
            identically_zero: false,
        }
    }

    /// `sigma(0) = 0`, `sigma(x) = -x^gamma log(x)` for `gamma` in `(1/2, 1]`.
    ///
    /// The declared Hölder order is `gamma - eps` with
    /// `eps = min(0.01, (gamma - 1/2)/2)`.
    pub fn log_power(gamma: f64) -> Result<Self> {
        if !(gamma > 0.5 && gamma <= 1.0) {
            return Err(Error::Parameter(format!(
                "log-power exponent must lie in (1/2, 1], got {gamma}"
            )));
        }
        let eps = (0.01f64).min((gamma - 0.5) / 2.0);
        Ok(SigmaCoefficient {
            eval: Arc::new(move |x: f64| {
                if x == 0.0 {
                    0.0
                } else {
                    -x.powf(gamma) * x.ln()
                }
            }),
            alpha: gamma - eps,
            name: format!("log-power:{gamma}"),
            identically_zero: false,
        })
    }

    /// The zero coefficient; turns the scheme deterministic. Outside the
    /// Hölder hypothesis (which requires sigma not identically zero) but
    /// accepted for oracle runs.
    pub fn zero() -> Self {
        SigmaCoefficient {
            eval: Arc::new(|_| 0.0),
            alpha: 0.5,
            name: "zero".into(),
            identically_zero: true,
        }
    }

    /// Caller-supplied coefficient; must vanish at both endpoints.
    pub fn custom(
        name: &str,
        alpha: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "Hölder order must lie in (0, 1], got {alpha}"
            )));
        }
        if f(0.0).abs() > ENDPOINT_TOL || f(1.0).abs() > ENDPOINT_TOL {
            return Err(Error::Parameter(format!(
                "coefficient `{name}` must vanish at 0 and 1 (got {}, {})",
                f(0.0),
                f(1.0)
            )));
        }
        Ok(SigmaCoefficient {
            eval: Arc::new(f),
            alpha,
            name: name.to_string(),
            identically_zero: false,
        })
    }

    /// Parses a registry spec: `stepping-stone`, `log-power:<gamma>` or `zero`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "stepping-stone" => Ok(Self::stepping_stone()),
            "zero" => Ok(Self::zero()),
            _ => {
                if let Some(arg) = spec.strip_prefix("log-power:") {
                    let gamma = arg.parse::<f64>().map_err(|_| {
                        Error::Parameter(format!("cannot parse exponent from `{spec}`"))
                    })?;
                    Self::log_power(gamma)
                } else {
                    Err(Error::Parameter(format!(
                        "unknown coefficient `{spec}`; expected stepping-stone, log-power:<gamma> or zero"
                    )))
                }
            }
        }
    }

    /// Same evaluator with a different declared Hölder order (for probing
    /// orders the coefficient does not satisfy).
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "Hölder order must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(SigmaCoefficient {
            eval: self.eval.clone(),
            alpha,
            name: self.name.clone(),
            identically_zero: self.identically_zero,
        })
    }

    /// Evaluates the coefficient; arguments must already lie in `[0,1]`
    /// (the integrator's clamp guarantees this on simulation paths).
    pub fn evaluate(&self, x: f64) -> f64 {
        debug_assert!(
            (-1e-12..=1.0 + 1e-12).contains(&x),
            "sigma evaluated outside [0,1]: {x}"
        );
        (self.eval)(x)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether the coefficient sits inside the Hölder hypothesis: order in
    /// `[1/2, 1)`, endpoint zeros, not identically zero.
    pub fn satisfies_hypothesis(&self) -> bool {
        !self.identically_zero && (0.5..1.0).contains(&self.alpha)
    }

    pub fn is_zero(&self) -> bool {
        self.identically_zero
    }
}

/// Empirical Hölder constant at the declared order: the largest ratio
/// `|sigma(x) - sigma(y)| / |x - y|^alpha` over an `m`-point uniform grid of
/// `[0,1]` (endpoints included). Finite values certify the hypothesis at this
/// resolution; divergence under refinement exposes an order that fails.
pub fn holder_estimate(sigma: &SigmaCoefficient, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::Parameter(
            "Hölder estimate needs at least 2 grid points".into(),
        ));
    }
    let h = 1.0 / (m - 1) as f64;
    let values: Vec<f64> = (0..m)
        .map(|i| sigma.evaluate((i as f64 * h).min(1.0)))
        .collect();
    // |x_i - x_j| only takes m-1 distinct values on a uniform grid
    let inv_pow: Vec<f64> = (0..m)
        .map(|sep| {
            if sep == 0 {
                0.0
            } else {
                1.0 / (sep as f64 * h).powf(sigma.alpha())
            }
        })
        .collect();
    let worst_per_row = exec::map_indexed(m, |i| {
        let mut worst = 0.0f64;
        for j in (i + 1)..m {
            let ratio = (values[i] - values[j]).abs() * inv_pow[j - i];
            worst = worst.max(ratio);
        }
        worst
    });
    Ok(worst_per_row.into_iter().fold(0.0, f64::max))
}

/// Largest ratio `sigma(x) / min(x, 1-x)^alpha` over the interior sample
/// `x = i/m`, `i = 1..m-1`; the endpoint-envelope constant at this resolution.
pub fn envelope_check(sigma: &SigmaCoefficient, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::Parameter(
            "envelope check needs at least 2 sample intervals".into(),
        ));
    }
    let alpha = sigma.alpha();
    let mut worst = 0.0f64;
    for i in 1..m {
        let x = i as f64 / m as f64;
        let envelope = x.min(1.0 - x).powf(alpha);
        worst = worst.max(sigma.evaluate(x) / envelope);
    }
    Ok(worst)
}
