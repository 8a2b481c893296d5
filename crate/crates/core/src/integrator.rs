//! Fixed-step RK4 integration and classification of long-run behaviour.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::model::{flow, reference_equilibrium, Params, State};

/// Tolerated excursion outside the state domain before a step is an error.
pub const DOMAIN_SLACK: f64 = 1e-9;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_T_END: f64 = 1000.0;

/// Minimum trajectory length accepted by [`detect_asymptotics`].
pub const MIN_SAMPLES: usize = 1000;
/// Max-norm distance to the equilibrium below which a run has converged.
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Peaks inspected at the end of a run (five full periods).
pub const CYCLE_PEAKS: usize = 6;
/// Relative spread allowed between successive periods and peak heights.
pub const CYCLE_SPREAD_TOL: f64 = 0.01;
pub const CYCLE_MIN_AMPLITUDE: f64 = 1e-4;
/// Leading fraction of a run discarded before peak detection.
pub const TRANSIENT_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, State)> {
        Some((*self.times.last()?, *self.states.last()?))
    }

    pub fn infected(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.i)
    }

    /// CSV `t,s,i,r,gamma`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "s", "i", "r", "gamma"])?;
        for (t, st) in self.times.iter().zip(&self.states) {
            w.write_record([*t, st.s, st.i, st.r(), st.gamma_var].map(|v| format!("{v:.16e}")))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Inverse of [`Trajectory::write_csv`]; the `r` column is ignored.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut traj = Trajectory::default();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let field = |k: usize| -> Result<f64> {
                record
                    .get(k)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::Parse {
                        path: "<trajectory>".into(),
                        line: row as u64 + 2,
                        message: format!("bad or missing column {k}"),
                    })
            };
            traj.times.push(field(0)?);
            traj.states.push(State {
                s: field(1)?,
                i: field(2)?,
                gamma_var: field(4)?,
            });
        }
        Ok(traj)
    }
}

fn rk4_raw(x: [f64; 3], params: &Params, dt: f64) -> [f64; 3] {
    let f = |y: [f64; 3]| flow(&State::from_array(y), params);
    let axpy =
        |y: [f64; 3], k: [f64; 3], h: f64| [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]];
    let k1 = f(x);
    let k2 = f(axpy(x, k1, dt / 2.0));
    let k3 = f(axpy(x, k2, dt / 2.0));
    let k4 = f(axpy(x, k3, dt));
    std::array::from_fn(|n| x[n] + dt / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]))
}

/// Accept a raw RK4 result if it is within [`DOMAIN_SLACK`] of the domain,
/// clamping the small excursions back in.
fn settle(x: [f64; 3], t: f64) -> Result<State> {
    let [s, i, g] = x;
    let ok = s.is_finite()
        && i.is_finite()
        && g.is_finite()
        && s >= -DOMAIN_SLACK
        && i >= -DOMAIN_SLACK
        && s + i <= 1.0 + DOMAIN_SLACK
        && g > 0.0;
    if !ok {
        return Err(Error::IntegrationBlowup { t, s, i, gamma: g });
    }
    let s = s.clamp(0.0, 1.0);
    let i = i.clamp(0.0, 1.0 - s);
    Ok(State { s, i, gamma_var: g })
}

fn check_step(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "must be finite and > 0",
        });
    }
    Ok(())
}

/// One classical Runge-Kutta step.
pub fn step_rk4(state: &State, params: &Params, dt: f64) -> Result<State> {
    check_step(dt)?;
    settle(rk4_raw(state.as_array(), params, dt), dt)
}

/// Integrate from `initial` to `t_end`, keeping every `sample_stride`-th
/// step (the initial state is always kept). Times are `k * dt`.
pub fn simulate(
    params: &Params,
    initial: &State,
    t_end: f64,
    dt: f64,
    sample_stride: usize,
) -> Result<Trajectory> {
    params.validate()?;
    initial.validate(DOMAIN_SLACK)?;
    check_step(dt)?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            value: t_end,
            reason: "must be finite and > 0",
        });
    }
    if sample_stride == 0 {
        return Err(Error::Config("sample stride must be >= 1".into()));
    }
    let steps = ((t_end / dt).round() as usize).max(1);
    let capacity = steps / sample_stride + 1;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
    };
    let mut x = *initial;
    traj.times.push(0.0);
    traj.states.push(x);
    for k in 1..=steps {
        let t = k as f64 * dt;
        x = settle(rk4_raw(x.as_array(), params, dt), t)?;
        if k % sample_stride == 0 {
            traj.times.push(t);
            traj.states.push(x);
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleInfo {
    /// Mean of the last successive peak-to-peak intervals of I(t).
    pub period: f64,
    /// Peak-to-trough range of I over the last period.
    pub amplitude_i: f64,
    /// (max - min) / mean of the successive periods.
    pub period_spread: f64,
    /// (max - min) of the inspected peak heights relative to the amplitude.
    pub height_spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Asymptotics {
    Converged { distance: f64 },
    Cycle(CycleInfo),
    Undecided,
}

impl Asymptotics {
    pub fn label(&self) -> &'static str {
        match self {
            Asymptotics::Converged { .. } => "converged",
            Asymptotics::Cycle(_) => "cycle",
            Asymptotics::Undecided => "undecided",
        }
    }

    pub fn cycle(&self) -> Option<&CycleInfo> {
        match self {
            Asymptotics::Cycle(c) => Some(c),
            _ => None,
        }
    }
}

/// Times (parabolically refined) and heights of the strict-left local
/// maxima of `y`.
fn local_maxima(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let mut peaks = Vec::new();
    for k in 1..y.len().saturating_sub(1) {
        if y[k] > y[k - 1] && y[k] >= y[k + 1] {
            let curv = y[k - 1] - 2.0 * y[k] + y[k + 1];
            let h = t[k + 1] - t[k];
            let offset = if curv < 0.0 {
                0.5 * (y[k - 1] - y[k + 1]) / curv * h
            } else {
                0.0
            };
            peaks.push((t[k] + offset, y[k]));
        }
    }
    peaks
}

fn relative_spread(values: impl Iterator<Item = f64> + Clone, scale: f64) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    (hi - lo) / scale
}

/// Classify the end of a run as convergence to the equilibrium, a limit
/// cycle in I(t), or neither.
pub fn detect_asymptotics(traj: &Trajectory, params: &Params) -> Result<Asymptotics> {
    if traj.len() < MIN_SAMPLES {
        return Err(Error::TooShort {
            what: "trajectory",
            needed: MIN_SAMPLES,
            got: traj.len(),
        });
    }
    let (_, last) = traj.last().expect("non-empty");
    if let Some(eq) = reference_equilibrium(params, last.gamma_var) {
        let distance = last.distance(&eq);
        if distance < CONVERGENCE_TOL {
            return Ok(Asymptotics::Converged { distance });
        }
    }

    let start = (traj.len() as f64 * TRANSIENT_FRACTION) as usize;
    let times = &traj.times[start..];
    let infected: Vec<f64> = traj.states[start..].iter().map(|s| s.i).collect();
    let peaks = local_maxima(times, &infected);
    if peaks.len() < CYCLE_PEAKS {
        return Ok(Asymptotics::Undecided);
    }
    let tail = &peaks[peaks.len() - CYCLE_PEAKS..];
    let periods: Vec<f64> = tail.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let period = periods.iter().sum::<f64>() / periods.len() as f64;
    let period_spread = relative_spread(periods.iter().copied(), period);

    let t_from = tail[CYCLE_PEAKS - 2].0;
    let (lo, hi) = times
        .iter()
        .zip(&infected)
        .filter(|(t, _)| **t >= t_from)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &v)| {
            (lo.min(v), hi.max(v))
        });
    let amplitude_i = hi - lo;
    if amplitude_i.is_nan() || amplitude_i <= CYCLE_MIN_AMPLITUDE {
        return Ok(Asymptotics::Undecided);
    }
    let height_spread = relative_spread(tail.iter().map(|p| p.1), amplitude_i);
    if period > 0.0 && period_spread < CYCLE_SPREAD_TOL && height_spread < CYCLE_SPREAD_TOL {
        Ok(Asymptotics::Cycle(CycleInfo {
            period,
            amplitude_i,
            period_spread,
            height_spread,
        }))
    } else {
        Ok(Asymptotics::Undecided)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepEntry {
    pub alpha: f64,
    pub asymptotics: Asymptotics,
}

/// Simulate the restricted model (`alpha = delta`) for each alpha and
/// classify the outcome.
#[allow(clippy::too_many_arguments)]
pub fn hopf_sweep(
    beta: f64,
    xi: f64,
    alphas: &[f64],
    initial: &State,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Vec<SweepEntry>> {
    hopf_sweep_with(
        beta,
        xi,
        alphas,
        initial,
        t_end,
        dt,
        stride,
        Strategy::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn hopf_sweep_with(
    beta: f64,
    xi: f64,
    alphas: &[f64],
    initial: &State,
    t_end: f64,
    dt: f64,
    stride: usize,
    strategy: Strategy,
) -> Result<Vec<SweepEntry>> {
    exec::try_map_indexed(alphas.len(), strategy, |k| {
        let alpha = alphas[k];
        let params = Params::restricted(beta, xi, alpha)?;
        let traj = simulate(&params, initial, t_end, dt, stride)?;
        Ok(SweepEntry {
            alpha,
            asymptotics: detect_asymptotics(&traj, &params)?,
        })
    })
}
