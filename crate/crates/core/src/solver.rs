//! Time integration of `u_t + d/dx(H u_x + u^2) = 0` on the periodic grid.
//!
//! The linear part has symbol `-i xi |xi|` and is integrated exactly; the
//! quadratic flux is advanced with the classical four-stage Runge-Kutta
//! scheme in the interaction picture (integrating-factor RK4).

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{self, dealiased_product, deriv, half_deriv, hilbert, inner, Field, Grid};
use crate::virial::DiagRecord;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t0: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub record_every: usize,
    /// Switch for the quadratic flux; off gives the free dispersive flow.
    pub nonlinear: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            t0: 10.0,
            t_end: 20.0,
            dealias: true,
            record_every: 10,
            nonlinear: true,
        }
    }
}

impl SolverConfig {
    /// Checks the ranges and the step bound `dt <= 1 / max|xi|`.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t0.is_finite() && self.t0 >= 0.0) {
            return Err(Error::InvalidParameter(format!("t0 = {} must be >= 0", self.t0)));
        }
        if !(self.t_end.is_finite() && self.t_end > self.t0) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} must exceed t0 = {}",
                self.t_end, self.t0
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        let bound = 1.0 / grid.max_wavenumber();
        if self.dt > bound {
            return Err(Error::InvalidParameter(format!(
                "dt = {} exceeds the stability bound 1/max|xi| = {bound}",
                self.dt
            )));
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_end` from `t0`.
    pub fn step_count(&self) -> u64 {
        ((self.t_end - self.t0) / self.dt).round() as u64
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryState {
    pub u: Field,
    pub t: f64,
    pub step: u64,
}

impl TrajectoryState {
    pub fn new(u: Field, t: f64) -> TrajectoryState {
        TrajectoryState { u, t, step: 0 }
    }
}

/// `-d/dx(H u_x + u^2)`, with `u^2` under the 2/3 rule when `dealias` is set.
pub fn bo_rhs(u: &Field, dealias: bool) -> Field {
    let lin = linear_rhs(u);
    let sq = if dealias {
        dealiased_product(u, u).expect("same grid")
    } else {
        u.map(|v| v * v)
    };
    let flux = deriv(&sq);
    lin.sub(&flux).expect("same grid")
}

/// The dispersive part alone, `-H u_xx`, symbol `-i xi |xi|`.
pub fn linear_rhs(u: &Field) -> Field {
    deriv(&hilbert(&deriv(u))).scale(-1.0)
}

/// Integrating-factor RK4 stepper with precomputed propagators.
///
/// Owned by one integration loop; `dt` may be negative, which integrates
/// the time-reversed equation.
pub struct Stepper {
    grid: Arc<Grid>,
    dt: f64,
    dealias: bool,
    nonlinear: bool,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    flux: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl Stepper {
    pub fn new(grid: &Arc<Grid>, cfg: &SolverConfig) -> Result<Stepper> {
        cfg.validate(grid)?;
        Ok(Stepper::with_dt(grid, cfg.dt, cfg.dealias, cfg.nonlinear))
    }

    /// Unchecked constructor; a negative `dt` runs time backwards.
    pub fn with_dt(grid: &Arc<Grid>, dt: f64, dealias: bool, nonlinear: bool) -> Stepper {
        // the Nyquist slot has a zero symbol, as in `linear_rhs`, which keeps
        // its coefficient real
        let nyq = grid.nyquist_slot();
        let half: Vec<Complex64> = grid
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(j, &xi)| {
                let xi = if j == nyq { 0.0 } else { xi };
                Complex64::from_polar(1.0, -xi * xi.abs() * 0.5 * dt)
            })
            .collect();
        let full = half.iter().map(|e| e * e).collect();
        // -i xi applied to the transformed u^2
        let flux = (0..grid.n())
            .map(|j| -spectral::deriv_symbol(grid, j, grid.wavenumbers()[j]))
            .collect();
        Stepper {
            grid: Arc::clone(grid),
            dt,
            dealias,
            nonlinear,
            half,
            full,
            flux,
            work: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn reversed(&self) -> Stepper {
        Stepper::with_dt(&self.grid, -self.dt, self.dealias, self.nonlinear)
    }

    /// Nonlinear term `-i xi (u^2)^` of a spectrum, written into `out`.
    fn nonlinear_term(&mut self, spec: &[Complex64], out: &mut [Complex64]) {
        if !self.nonlinear {
            out.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            return;
        }
        let grid = &self.grid;
        self.work.copy_from_slice(spec);
        if self.dealias {
            grid.truncate(&mut self.work);
        }
        grid.inverse_in_place(&mut self.work);
        for c in self.work.iter_mut() {
            *c = Complex64::new(c.re * c.re, 0.0);
        }
        grid.forward_in_place(&mut self.work);
        if self.dealias {
            grid.truncate(&mut self.work);
        }
        for ((o, w), m) in out.iter_mut().zip(&self.work).zip(&self.flux) {
            *o = w * m;
        }
    }

    /// One step in spectral space.
    pub fn step_spectrum(&mut self, spec: &mut [Complex64]) {
        let n = spec.len();
        let h = self.dt;
        let zero = Complex64::new(0.0, 0.0);
        let mut k1 = vec![zero; n];
        let mut k2 = vec![zero; n];
        let mut k3 = vec![zero; n];
        let mut k4 = vec![zero; n];
        let mut stage = vec![zero; n];

        self.nonlinear_term(spec, &mut k1);
        for j in 0..n {
            stage[j] = self.half[j] * (spec[j] + 0.5 * h * k1[j]);
        }
        self.nonlinear_term(&stage, &mut k2);
        for j in 0..n {
            stage[j] = self.half[j] * spec[j] + 0.5 * h * k2[j];
        }
        self.nonlinear_term(&stage, &mut k3);
        for j in 0..n {
            stage[j] = self.full[j] * spec[j] + h * self.half[j] * k3[j];
        }
        self.nonlinear_term(&stage, &mut k4);
        for j in 0..n {
            spec[j] = self.full[j] * spec[j]
                + h / 6.0 * (self.full[j] * k1[j] + 2.0 * self.half[j] * (k2[j] + k3[j]) + k4[j]);
        }
    }

    pub fn step(&mut self, state: &TrajectoryState) -> Result<TrajectoryState> {
        self.advance(state, 1)
    }

    /// Advances `steps` steps without leaving spectral space in between.
    pub fn advance(&mut self, state: &TrajectoryState, steps: u64) -> Result<TrajectoryState> {
        let mut spec = state.u.spectrum();
        for i in 1..=steps {
            self.step_spectrum(&mut spec);
            if !spec.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::NonFinite {
                    t: state.t + i as f64 * self.dt,
                    step: state.step + i,
                });
            }
        }
        let t = state.t + steps as f64 * self.dt;
        let u = Field::new(&self.grid, self.grid.inverse_real(spec)).map_err(|_| Error::NonFinite {
            t,
            step: state.step + steps,
        })?;
        Ok(TrajectoryState {
            u,
            t,
            step: state.step + steps,
        })
    }
}

/// Single step with a freshly built stepper.
pub fn step(state: &TrajectoryState, cfg: &SolverConfig) -> Result<TrajectoryState> {
    Stepper::new(state.u.grid(), cfg)?.step(state)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Invariants {
    pub i1: f64,
    pub i2: f64,
    pub energy: f64,
    pub l1: f64,
}

/// Mass, L2 norm squared, energy `integral (D^{1/2}u)^2 - u^3/3`, and the L1
/// norm.
pub fn invariants(u: &Field) -> Invariants {
    let grid = u.grid();
    let dx = grid.spacing();
    let s = u.samples();
    let hu = half_deriv(u);
    let i1 = dx * s.iter().sum::<f64>();
    let i2 = dx * spectral::dot(s, s);
    let cubic = dx * s.iter().map(|v| v * v * v).sum::<f64>();
    let energy = inner(&hu, &hu).expect("same grid") - cubic / 3.0;
    let l1 = dx * s.iter().map(|v| v.abs()).sum::<f64>();
    Invariants { i1, i2, energy, l1 }
}

/// `integral (D^{1/2}u)^2 / 2 + u^3 / 3`, the Hamiltonian of the flow as
/// integrated here. Unlike `Invariants::energy` it is conserved for every
/// initial datum.
pub fn hamiltonian(u: &Field) -> f64 {
    let hu = half_deriv(u);
    let dx = u.grid().spacing();
    0.5 * inner(&hu, &hu).expect("same grid") + dx * u.samples().iter().map(|v| v * v * v).sum::<f64>() / 3.0
}

/// `<t> = (1 + t^2)^{1/2}`.
pub fn japanese_bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

/// Least-squares slope of `log L1` against `log <t>`.
pub fn l1_growth_fit(records: &[DiagRecord]) -> Result<f64> {
    if records.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} records, need at least 10",
            records.len()
        )));
    }
    let xs: Vec<f64> = records.iter().map(|r| japanese_bracket(r.t).ln()).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
        (a.min(x), b.max(x))
    });
    if hi - lo < std::f64::consts::LN_10 {
        return Err(Error::InsufficientData(
            "records span less than one decade in <t>".into(),
        ));
    }
    if records.iter().any(|r| !(r.l1 > 0.0)) {
        return Err(Error::InsufficientData("non-positive L1 norm".into()));
    }
    let ys: Vec<f64> = records.iter().map(|r| r.l1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
