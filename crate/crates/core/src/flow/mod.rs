//! Normalised Ricci flow on the radial class, in DeTurck or entropy gauge.

pub mod config;
pub mod fits;
pub mod gauge;
pub mod heat;
pub mod stepper;
pub mod velocity;

use std::io::Write;

use serde::Serialize;

pub use config::FlowConfig;
pub use fits::{
    check_growth_bound, fit_lojasiewicz, fit_rate, growth_lower_bound, GrowthCheck, LojasiewiczFit, RateBranch, RateFit,
};
pub use gauge::{gauge_distance, RadialDiffeo};
pub use heat::{linearization_defect, LinearizationDefect};
pub use stepper::ros2_step;
pub use velocity::{deturck_velocity, entropy_gauge_velocity, Gauge};

use crate::error::{Error, Result};
use crate::functionals::{entropy_from, entropy_gradient_with};
use crate::geometry::operators::tensor_inner;
use crate::geometry::{RadialScalarField, WarpedMetric};
use gauge::{advance_diffeo, gauge_field, GaugeField};

/// Internal integration state: the DeTurck solution and, in the entropy
/// gauge, the diffeomorphism relating it to the reported metric.
#[derive(Debug, Clone)]
struct Carrier {
    deturck: WarpedMetric,
    diffeo: Option<RadialDiffeo>,
}

impl Carrier {
    fn metric(&self) -> Result<WarpedMetric> {
        match &self.diffeo {
            Some(d) => d.pull_back(&self.deturck),
            None => Ok(self.deturck.clone()),
        }
    }
}

/// Recorded state of a flow with its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct FlowState {
    pub t: f64,
    #[serde(skip)]
    pub g: WarpedMetric,
    #[serde(skip)]
    pub f: RadialScalarField,
    pub mu: f64,
    /// ‖∇μ‖ in L²(dV_g).
    pub grad_norm: f64,
    /// sup |u|, |v|.
    pub hnorm_inf: f64,
    /// ‖g − ĝ‖ in L²(dV_ĝ).
    pub hnorm_l2: f64,
    /// Distance to ĝ modulo radial diffeomorphisms.
    pub gauge_distance: f64,
    /// ⟨∇μ, ∂_t g⟩ predicted from the current velocity.
    pub dmu_dt: f64,
    #[serde(skip)]
    carrier: Carrier,
}

impl FlowState {
    /// Distance used for the convergence and escape verdicts.
    pub fn distance(&self, gauge: Gauge) -> f64 {
        match gauge {
            Gauge::Deturck => self.hnorm_inf,
            Gauge::EntropyGradient => self.gauge_distance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Converged { t: f64 },
    Escaped { t: f64 },
    HorizonReached,
    StepFailure { t: f64, halvings: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowTrajectory {
    pub config: FlowConfig,
    pub states: Vec<FlowState>,
    pub verdict: Verdict,
    pub steps: usize,
    pub rejected_steps: usize,
}

fn diagnose(carrier: Carrier, t: f64, gauge: Gauge, f_guess: Option<&RadialScalarField>, config: &FlowConfig) -> Result<FlowState> {
    let g = carrier.metric()?;
    let gref = WarpedMetric::hyperbolic(g.grid.clone());
    let (mu, f) = entropy_from(&g, &gref, f_guess, &config.solver)?;
    let grad = entropy_gradient_with(&g, &f)?;
    let grad_norm = tensor_inner(&g, &grad, &grad)?.max(0.0).sqrt();
    let velocity = match gauge {
        Gauge::Deturck => deturck_velocity(&g),
        Gauge::EntropyGradient => entropy_gauge_velocity(&g, &f)?,
    };
    let dmu_dt = tensor_inner(&g, &grad, &velocity)?;
    let h = g.difference_from_reference();
    let hnorm_l2 = tensor_inner(&gref, &h, &h)?.max(0.0).sqrt();
    Ok(FlowState {
        t,
        hnorm_inf: g.sup_distance_to_reference(),
        hnorm_l2,
        gauge_distance: gauge_distance(&g),
        mu,
        grad_norm,
        dmu_dt,
        f,
        g,
        carrier,
    })
}

/// Flow state at t = 0.
pub fn initial_state(g0: &WarpedMetric, config: &FlowConfig) -> Result<FlowState> {
    config.validate()?;
    g0.check_decay(config.solver.decay_tol)?;
    let diffeo = (config.gauge == Gauge::EntropyGradient).then(|| RadialDiffeo::identity(g0));
    diagnose(Carrier { deturck: g0.clone(), diffeo }, 0.0, config.gauge, None, config)
}

fn change(a: &WarpedMetric, b: &WarpedMetric) -> f64 {
    a.u.iter().zip(&b.u).chain(a.v.iter().zip(&b.v)).fold(0.0, |m, (x, y)| {
        let d = (x - y).abs();
        if d.is_nan() { f64::INFINITY } else { m.max(d) }
    })
}

/// Integrator carrying the entropy-gauge generator between steps.
struct Integrator<'a> {
    config: &'a FlowConfig,
    carrier: Carrier,
    field: Option<GaugeField>,
}

impl<'a> Integrator<'a> {
    fn new(carrier: Carrier, config: &'a FlowConfig) -> Result<Self> {
        let field = match carrier.diffeo {
            Some(_) => Some(gauge_field(&carrier.deturck, None, &config.solver)?),
            None => None,
        };
        Ok(Self { config, carrier, field })
    }

    fn try_step(&self, dt: f64) -> Result<(Carrier, Option<GaugeField>)> {
        let next = ros2_step(&self.carrier.deturck, dt)?;
        if !(change(&next, &self.carrier.deturck) <= self.config.cfl) {
            return Err(Error::StepRejected { t: f64::NAN, halvings: 0 });
        }
        match (&self.carrier.diffeo, &self.field) {
            (Some(d), Some(x0)) => {
                let x1 = gauge_field(&next, Some(&x0.f), &self.config.solver)?;
                let diffeo = advance_diffeo(&next, d, x0, &x1, dt);
                Ok((Carrier { deturck: next, diffeo: Some(diffeo) }, Some(x1)))
            }
            _ => Ok((Carrier { deturck: next, diffeo: None }, None)),
        }
    }

    /// Advances by `dt`, halving on rejection; returns the halvings used.
    fn step(&mut self, t: f64, dt: f64) -> Result<usize> {
        let mut sub = dt;
        for halvings in 0..=self.config.max_halvings {
            let pieces = 1usize << halvings;
            let mut ok = true;
            let mut trial = Integrator { config: self.config, carrier: self.carrier.clone(), field: self.field.clone() };
            for _ in 0..pieces {
                match trial.try_step(sub) {
                    Ok((c, f)) => {
                        trial.carrier = c;
                        trial.field = f;
                    }
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                self.carrier = trial.carrier;
                self.field = trial.field;
                return Ok(halvings);
            }
            sub *= 0.5;
        }
        Err(Error::StepRejected { t, halvings: self.config.max_halvings })
    }
}

/// Advances a recorded state by `dt` (with step halving) and re-evaluates
/// its diagnostics.
pub fn step(state: &FlowState, dt: f64, config: &FlowConfig) -> Result<FlowState> {
    config.validate()?;
    let mut integ = Integrator::new(state.carrier.clone(), config)?;
    integ.step(state.t, dt)?;
    diagnose(integ.carrier, state.t + dt, config.gauge, Some(&state.f), config)
}

/// Runs the flow from `g0` until convergence, escape, the horizon or a
/// step failure. A decrease of μ between recorded states beyond the
/// tolerance aborts the run.
pub fn run_flow(g0: &WarpedMetric, config: &FlowConfig) -> Result<FlowTrajectory> {
    let first = initial_state(g0, config)?;
    let gauge = config.gauge;
    let mut integ = Integrator::new(first.carrier.clone(), config)?;
    let mut states = vec![first];
    let mut t = 0.0;
    let mut steps = 0;
    let mut rejected = 0;
    let converged = |s: &FlowState| s.distance(gauge) <= config.conv_tol && s.grad_norm <= config.conv_tol;
    let verdict = loop {
        let last = states.last().expect("states is never empty");
        if converged(last) {
            break Verdict::Converged { t: last.t };
        }
        if last.distance(gauge) > config.escape_radius {
            break Verdict::Escaped { t: last.t };
        }
        if t >= config.t_max * (1.0 - 1e-12) {
            break Verdict::HorizonReached;
        }
        for _ in 0..config.diag_every {
            let dt = config.dt_init.min(config.t_max - t);
            match integ.step(t, dt) {
                Ok(h) => rejected += h,
                Err(Error::StepRejected { t, halvings }) => {
                    return Ok(FlowTrajectory {
                        config: *config,
                        states,
                        verdict: Verdict::StepFailure { t, halvings },
                        steps,
                        rejected_steps: rejected,
                    })
                }
                Err(e) => return Err(e),
            }
            t += dt;
            steps += 1;
            if t >= config.t_max * (1.0 - 1e-12) {
                break;
            }
        }
        let prev = states.last().expect("states is never empty");
        let next = diagnose(integ.carrier.clone(), t, gauge, Some(&prev.f), config)?;
        if next.mu < prev.mu - config.monotonicity_tol {
            return Err(Error::MonotonicityViolated { t0: prev.t, t1: next.t, drop: prev.mu - next.mu });
        }
        states.push(next);
    };
    Ok(FlowTrajectory { config: *config, states, verdict, steps, rejected_steps: rejected })
}

impl FlowTrajectory {
    pub fn final_state(&self) -> &FlowState {
        self.states.last().expect("trajectories hold at least the initial state")
    }

    /// Łojasiewicz fit over recorded states whose |μ| is resolved above the
    /// solver tolerance.
    pub fn lojasiewicz_fit(&self) -> Result<LojasiewiczFit> {
        let mu: Vec<f64> = self.states.iter().map(|s| s.mu).collect();
        let g2: Vec<f64> = self.states.iter().map(|s| s.grad_norm * s.grad_norm).collect();
        fit_lojasiewicz(&mu, &g2, 100.0 * self.config.solver.tol)
    }

    /// Decay fit of the distance to the limit over the second half of a
    /// converged run.
    pub fn rate_fit(&self) -> Result<RateFit> {
        if !matches!(self.verdict, Verdict::Converged { .. }) {
            return Err(Error::InsufficientData("the run did not converge".into()));
        }
        let tail = &self.states[self.states.len() / 2..];
        let times: Vec<f64> = tail.iter().map(|s| s.t).collect();
        let dist: Vec<f64> = tail.iter().map(|s| s.distance(self.config.gauge)).collect();
        fit_rate(&times, &dist)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "mu", "grad_norm", "hnorm_inf", "hnorm_l2", "gauge_distance", "dmu_dt"])?;
        for s in &self.states {
            wr.serialize((s.t, s.mu, s.grad_norm, s.hnorm_inf, s.hnorm_l2, s.gauge_distance, s.dmu_dt))?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Estimates θ and C from a trajectory.
pub fn estimate_lojasiewicz(traj: &FlowTrajectory) -> Result<LojasiewiczFit> {
    traj.lojasiewicz_fit()
}

/// Decay law of the distance to the limit along a converged trajectory.
pub fn fit_convergence_rate(traj: &FlowTrajectory) -> Result<RateFit> {
    traj.rate_fit()
}

/// Report of an instability probe started at a metric of positive entropy.
#[derive(Debug, Clone, Serialize)]
pub struct InstabilityReport {
    pub mu0: f64,
    pub trajectory: FlowTrajectory,
    pub growth: Option<GrowthCheck>,
}

/// Runs the entropy-gradient flow from a metric with μ > 0 and checks the
/// Łojasiewicz growth bound on the recorded μ(t) when θ < 1 is available.
pub fn instability_probe(g0: &WarpedMetric, config: &FlowConfig, theta: f64, c: f64) -> Result<InstabilityReport> {
    let first = initial_state(g0, config)?;
    if !(first.mu > 0.0) {
        return Err(Error::PreconditionFailed(format!("μ(g₀) = {} is not positive", first.mu)));
    }
    let trajectory = run_flow(g0, config)?;
    let times: Vec<f64> = trajectory.states.iter().map(|s| s.t).collect();
    let mu: Vec<f64> = trajectory.states.iter().map(|s| s.mu).collect();
    let growth = if theta < 1.0 { Some(check_growth_bound(&times, &mu, theta, c, 1e-6)?) } else { None };
    Ok(InstabilityReport { mu0: first.mu, trajectory, growth })
}
