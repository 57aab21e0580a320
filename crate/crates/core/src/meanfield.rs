//! Moment equations for the number of infected nodes under a coarse
//! homogeneous approximation: the graph enters only through its mean degree
//! `kbar`, and every infected node sees a fraction `n / N` of infected
//! neighbors. Resources act as a constant removal rate `rho * b`.
//!
//! The third moment is closed by one of three rules:
//!
//! * normal: `m3 = 3 m2 m1 - 2 m1^3`
//! * lognormal: `m3 = (m2 / m1)^3`
//! * deterministic: no variance, `m2 = m1^2`

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeanfieldError {
    #[error("invalid moment parameters: {0}")]
    InvalidParams(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("output times must be nondecreasing and start at or after 0")]
    BadGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    Normal,
    Lognormal,
    Deterministic,
}

impl Closure {
    pub fn name(self) -> &'static str {
        match self {
            Closure::Normal => "normal",
            Closure::Lognormal => "lognormal",
            Closure::Deterministic => "deterministic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentParams {
    pub beta: f64,
    pub delta: f64,
    pub rho: f64,
    pub budget: f64,
    pub kbar: f64,
    pub n: f64,
}

impl MomentParams {
    pub fn validate(&self) -> Result<(), MeanfieldError> {
        let vals = [self.beta, self.delta, self.rho, self.budget, self.kbar, self.n];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) || self.n <= 0.0 {
            return Err(MeanfieldError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }
}

/// First and second raw moments of `N^I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    pub m1: f64,
    pub m2: f64,
}

impl MomentState {
    /// Point mass at `n` infected nodes.
    pub fn point(n: f64) -> Self {
        MomentState { m1: n, m2: n * n }
    }
}

/// Below `LOGNORMAL_GUARD * N` the lognormal closure falls back to normal.
pub const LOGNORMAL_GUARD: f64 = 1e-6;

pub fn third_moment(closure: Closure, s: MomentState, n: f64) -> f64 {
    match closure {
        Closure::Normal => 3.0 * s.m2 * s.m1 - 2.0 * s.m1.powi(3),
        Closure::Lognormal if s.m1 < LOGNORMAL_GUARD * n => {
            third_moment(Closure::Normal, s, n)
        }
        Closure::Lognormal => (s.m2 / s.m1).powi(3),
        Closure::Deterministic => s.m1.powi(3),
    }
}

/// `(dm1/dt, dm2/dt)`.
pub fn moment_rhs(p: &MomentParams, closure: Closure, s: MomentState) -> (f64, f64) {
    let bk = p.beta * p.kbar;
    let rb = p.rho * p.budget;
    let s = match closure {
        Closure::Deterministic => MomentState::point(s.m1),
        _ => s,
    };
    let m3 = third_moment(closure, s, p.n);
    let dm1 = (bk - p.delta) * s.m1 - bk / p.n * s.m2 - rb;
    let dm2 = match closure {
        Closure::Deterministic => 2.0 * s.m1 * dm1,
        _ => {
            (bk + p.delta - 2.0 * rb) * s.m1 - 2.0 * bk / p.n * m3
                + (2.0 * (bk - p.delta) - bk / p.n) * s.m2
                + rb
        }
    };
    (dm1, dm2)
}

/// Right-hand side restricted to `0 <= m1 <= N`: the flow stops at the
/// boundary instead of crossing it.
fn projected_rhs(p: &MomentParams, closure: Closure, s: MomentState) -> (f64, f64) {
    let (dm1, dm2) = moment_rhs(p, closure, s);
    if (s.m1 <= 0.0 && dm1 < 0.0) || (s.m1 >= p.n && dm1 > 0.0) {
        (0.0, 0.0)
    } else {
        (dm1, dm2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    /// Upper bound on the step, also the first trial step.
    pub h_max: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-8,
            atol: 1e-8,
            h_min: 1e-12,
            h_max: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub closure: Closure,
    pub t: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One embedded step; returns the 5th-order solution and the error norm.
fn dp_step(p: &MomentParams, closure: Closure, y: [f64; 2], h: f64, opts: &IntegratorOptions) -> ([f64; 2], f64) {
    let mut k = [[0.0f64; 2]; 7];
    for stage in 0..7 {
        let mut yi = y;
        for (j, kj) in k.iter().enumerate().take(stage) {
            for d in 0..2 {
                yi[d] += h * A[stage][j] * kj[d];
            }
        }
        let (a, b) = projected_rhs(p, closure, MomentState { m1: yi[0], m2: yi[1] });
        k[stage] = [a, b];
    }
    let mut y5 = y;
    let mut y4 = y;
    for s in 0..7 {
        for d in 0..2 {
            y5[d] += h * B5[s] * k[s][d];
            y4[d] += h * B4[s] * k[s][d];
        }
    }
    let err = (0..2)
        .map(|d| {
            let scale = opts.atol * p.n + opts.rtol * y[d].abs().max(y5[d].abs());
            ((y5[d] - y4[d]) / scale).powi(2)
        })
        .sum::<f64>();
    (y5, (err / 2.0).sqrt())
}

fn clamp_state(p: &MomentParams, y: [f64; 2]) -> [f64; 2] {
    let m1 = y[0].clamp(0.0, p.n);
    [m1, y[1].clamp(0.0, p.n * p.n)]
}

/// Integrates from `s0` at `t = 0` and reports the moments at every time in
/// `grid` (nondecreasing, nonnegative).
pub fn integrate(
    p: &MomentParams,
    closure: Closure,
    s0: MomentState,
    grid: &[f64],
    opts: IntegratorOptions,
) -> Result<Trajectory, MeanfieldError> {
    p.validate()?;
    if grid.first().is_some_and(|&t| t < 0.0) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(MeanfieldError::BadGrid);
    }
    let mut out = Trajectory {
        closure,
        t: Vec::with_capacity(grid.len()),
        m1: Vec::with_capacity(grid.len()),
        m2: Vec::with_capacity(grid.len()),
    };
    let mut y = clamp_state(p, [s0.m1, s0.m2]);
    if closure == Closure::Deterministic {
        y[1] = y[0] * y[0];
    }
    let mut t = 0.0;
    let mut h = opts.h_max;
    for &target in grid {
        while t < target {
            let step = h.min(target - t);
            let (y_new, err) = dp_step(p, closure, y, step, &opts);
            if err <= 1.0 {
                t = if step == target - t { target } else { t + step };
                y = clamp_state(p, y_new);
                if closure == Closure::Deterministic {
                    y[1] = y[0] * y[0];
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err > 1.0 || step == h {
                h = (step * factor).min(opts.h_max);
            }
            if h < opts.h_min && t < target {
                return Err(MeanfieldError::StepUnderflow { t });
            }
        }
        out.t.push(target);
        out.m1.push(y[0]);
        out.m2.push(y[1]);
    }
    Ok(out)
}

/// `n` equally spaced times on `[0, t_end]`, both ends included.
pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect(),
    }
}
