//! Model parameters, unit conversion and shared domain types.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("path-loss exponent must exceed 2, got {0}")]
    Alpha(f64),
    #[error("arrival rate must lie in (0, 1], got {0}")]
    Xi(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("invalid meta curve: {0}")]
    Curve(String),
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Parameters as written in configuration files, with dB / dBm units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawParams {
    /// transmitters per m²
    pub lambda: f64,
    /// link distance in m
    pub r: f64,
    pub alpha: f64,
    pub theta_db: f64,
    pub xi: f64,
    pub p_tx_dbm: f64,
    pub sigma2_dbm: f64,
}

impl RawParams {
    /// The reference operating point: α=3.8, θ=0 dB, ξ=0.1, 17 dBm transmit
    /// power, −90 dBm noise, 25 m links and 1e−4 links per m².
    pub const DEFAULT: RawParams = RawParams {
        lambda: 1e-4,
        r: 25.0,
        alpha: 3.8,
        theta_db: 0.0,
        xi: 0.1,
        p_tx_dbm: 17.0,
        sigma2_dbm: -90.0,
    };
}

impl Default for RawParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Convert a dB-unit parameter set into validated linear parameters.
pub fn build_params(raw: &RawParams) -> Result<SystemParams, ParamError> {
    let fields = [
        ("theta_db", raw.theta_db),
        ("p_tx_dbm", raw.p_tx_dbm),
        ("sigma2_dbm", raw.sigma2_dbm),
    ];
    for (name, value) in fields {
        if !value.is_finite() {
            return Err(ParamError::NotFinite { name, value });
        }
    }
    // dBm to mW is the same conversion as dB to linear
    SystemParams::new(
        raw.lambda,
        raw.r,
        raw.alpha,
        db_to_linear(raw.theta_db),
        raw.xi,
        db_to_linear(raw.p_tx_dbm),
        db_to_linear(raw.sigma2_dbm),
    )
}

/// Linear-unit model parameters. Derived quantities are computed on
/// construction, so every instance satisfies `delta == 2/alpha` and
/// `rho == p_tx/sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    lambda: f64,
    r: f64,
    alpha: f64,
    theta: f64,
    xi: f64,
    p_tx: f64,
    sigma2: f64,
    delta: f64,
    rho: f64,
}

fn positive(name: &'static str, value: f64) -> Result<(), ParamError> {
    if !value.is_finite() {
        Err(ParamError::NotFinite { name, value })
    } else if value <= 0.0 {
        Err(ParamError::NonPositive { name, value })
    } else {
        Ok(())
    }
}

impl SystemParams {
    pub fn new(
        lambda: f64,
        r: f64,
        alpha: f64,
        theta: f64,
        xi: f64,
        p_tx: f64,
        sigma2: f64,
    ) -> Result<Self, ParamError> {
        positive("lambda", lambda)?;
        positive("r", r)?;
        positive("theta", theta)?;
        positive("p_tx", p_tx)?;
        positive("sigma2", sigma2)?;
        if !alpha.is_finite() {
            return Err(ParamError::NotFinite { name: "alpha", value: alpha });
        }
        if alpha <= 2.0 {
            return Err(ParamError::Alpha(alpha));
        }
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(ParamError::Xi(xi));
        }
        let rho = p_tx / sigma2;
        positive("rho", rho)?;
        Ok(Self {
            lambda,
            r,
            alpha,
            theta,
            xi,
            p_tx,
            sigma2,
            delta: 2.0 / alpha,
            rho,
        })
    }

    pub fn defaults() -> Self {
        build_params(&RawParams::DEFAULT).expect("default preset is valid")
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn p_tx(&self) -> f64 {
        self.p_tx
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn theta_db(&self) -> f64 {
        linear_to_db(self.theta)
    }

    /// θ r^α / ρ, the noise contribution to the success exponent.
    pub fn noise_term(&self) -> f64 {
        self.theta * self.r.powf(self.alpha) / self.rho
    }

    /// e^{−θr^α/ρ}: success probability of an isolated link.
    pub fn noise_only_success(&self) -> f64 {
        (-self.noise_term()).exp()
    }

    /// λπr²θ^δ, the area scale of the interference field.
    pub fn interference_scale(&self) -> f64 {
        self.lambda * PI * self.r * self.r * self.theta.powf(self.delta)
    }

    /// λπ²δθ^δr²/sin(πδ): interference exponent with every transmitter on.
    pub fn saturated_exponent(&self) -> f64 {
        let d = self.delta;
        self.interference_scale() * PI * d / (PI * d).sin()
    }

    fn rebuild(self) -> Result<Self, ParamError> {
        Self::new(
            self.lambda,
            self.r,
            self.alpha,
            self.theta,
            self.xi,
            self.p_tx,
            self.sigma2,
        )
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self, ParamError> {
        self.lambda = lambda;
        self.rebuild()
    }
    pub fn with_r(mut self, r: f64) -> Result<Self, ParamError> {
        self.r = r;
        self.rebuild()
    }
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, ParamError> {
        self.alpha = alpha;
        self.rebuild()
    }
    pub fn with_theta(mut self, theta: f64) -> Result<Self, ParamError> {
        self.theta = theta;
        self.rebuild()
    }
    pub fn with_theta_db(self, theta_db: f64) -> Result<Self, ParamError> {
        if !theta_db.is_finite() {
            return Err(ParamError::NotFinite { name: "theta_db", value: theta_db });
        }
        self.with_theta(db_to_linear(theta_db))
    }
    pub fn with_xi(mut self, xi: f64) -> Result<Self, ParamError> {
        self.xi = xi;
        self.rebuild()
    }
    pub fn with_powers(mut self, p_tx: f64, sigma2: f64) -> Result<Self, ParamError> {
        self.p_tx = p_tx;
        self.sigma2 = sigma2;
        self.rebuild()
    }
}

/// Square simulation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    side: f64,
    wrap: bool,
}

impl Region {
    pub fn new(side: f64, wrap: bool) -> Result<Self, ParamError> {
        positive("side", side)?;
        Ok(Self { side, wrap })
    }

    /// 1 km torus.
    pub fn default_torus() -> Self {
        Self { side: 1000.0, wrap: true }
    }

    pub fn side(&self) -> f64 {
        self.side
    }
    pub fn wrap(&self) -> bool {
        self.wrap
    }
    pub fn area(&self) -> f64 {
        self.side * self.side
    }
}

/// Piecewise-linear CDF on [0, 1].
///
/// Grid points may repeat, which encodes a jump of the CDF at that point.
/// Mass not reached by the last grid value, `1 − cdf[last]`, sits at u = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaCurve {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl MetaCurve {
    pub fn new(grid: Vec<f64>, cdf: Vec<f64>) -> Result<Self, ParamError> {
        let bad = |m: &str| Err(ParamError::Curve(m.to_string()));
        if grid.len() != cdf.len() {
            return bad("grid and cdf lengths differ");
        }
        if grid.len() < 2 {
            return bad("need at least two points");
        }
        if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
            return bad("grid must start at 0 and end at 1");
        }
        if grid.windows(2).any(|w| !(w[1] >= w[0])) {
            return bad("grid must be non-decreasing");
        }
        if cdf.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return bad("cdf values must lie in [0, 1]");
        }
        if cdf.windows(2).any(|w| w[1] < w[0]) {
            return bad("cdf must be non-decreasing");
        }
        Ok(Self { grid, cdf })
    }

    /// Build from arbitrary samples: clamps to [0,1] and enforces
    /// monotonicity with a running maximum.
    pub fn from_raw(grid: Vec<f64>, mut cdf: Vec<f64>) -> Result<Self, ParamError> {
        let mut run = 0.0f64;
        for c in cdf.iter_mut() {
            let v = if c.is_nan() { run } else { c.clamp(0.0, 1.0) };
            run = run.max(v);
            *c = run;
        }
        Self::new(grid, cdf)
    }

    pub fn uniform_grid(n: usize) -> Vec<f64> {
        assert!(n >= 2);
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    /// Degenerate law with all mass at `at`.
    pub fn step(at: f64) -> Result<Self, ParamError> {
        if !(0.0..=1.0).contains(&at) {
            return Err(ParamError::Curve(format!("step location {at} outside [0,1]")));
        }
        if at == 1.0 {
            return Self::new(vec![0.0, 1.0], vec![0.0, 0.0]);
        }
        Self::new(vec![0.0, at, at, 1.0], vec![0.0, 0.0, 1.0, 1.0])
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// F(u) by linear interpolation; right-continuous at repeated points.
    pub fn eval(&self, u: f64) -> f64 {
        let g = &self.grid;
        if u <= 0.0 {
            return if u < 0.0 { 0.0 } else { self.cdf[0] };
        }
        if u >= 1.0 {
            return *self.cdf.last().unwrap();
        }
        // last index with g[i] <= u
        let i = g.partition_point(|&x| x <= u) - 1;
        let (a, b) = (g[i], g[i + 1]);
        if b <= a {
            return self.cdf[i + 1];
        }
        let t = (u - a) / (b - a);
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }

    /// E[X^m] for the law described by the curve.
    pub fn moment(&self, m: u32) -> f64 {
        let mut acc = 0.0;
        let p = m as i32 + 1;
        for i in 0..self.grid.len() - 1 {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            let df = self.cdf[i + 1] - self.cdf[i];
            if df == 0.0 {
                continue;
            }
            if b > a {
                acc += df * (b.powi(p) - a.powi(p)) / (p as f64 * (b - a));
            } else {
                acc += df * a.powi(m as i32);
            }
        }
        if m == 0 {
            acc += self.cdf[0];
        }
        acc + (1.0 - self.cdf.last().unwrap())
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m1 = self.moment(1);
        (self.moment(2) - m1 * m1).max(0.0)
    }

    /// sup |F − G| over the union of both grids.
    pub fn kolmogorov_distance(&self, other: &MetaCurve) -> f64 {
        let mut d = 0.0f64;
        for &u in self.grid.iter().chain(other.grid.iter()) {
            d = d.max((self.eval(u) - other.eval(u)).abs());
        }
        d
    }

    /// sup |F − G| against a reference CDF, probed on this grid.
    pub fn distance_to(&self, reference: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .iter()
            .map(|&u| (self.eval(u) - reference(u)).abs())
            .fold(0.0, f64::max)
    }
}
