//! Embedded Dormand–Prince 5(4) stepping on flat slices.
//!
//! The driver loop lives with the caller: geodesic and Jacobi propagators
//! handle chart switches and event bracketing between accepted steps, and a
//! `Stepper` can be cloned together with its state to re-integrate a
//! sub-interval during bisection.

use crate::error::{Error, Result};

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

#[derive(Debug, Clone)]
pub struct Stepper {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    dt: f64,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
}

impl Stepper {
    pub fn new(dim: usize, rtol: f64, atol: f64, max_step: f64) -> Self {
        Self {
            rtol,
            atol,
            max_step,
            dt: max_step.min(1e-2),
            k: std::array::from_fn(|_| vec![0.0; dim]),
            y_stage: vec![0.0; dim],
            y_new: vec![0.0; dim],
        }
    }

    pub fn reset_dt(&mut self) {
        self.dt = self.max_step.min(1e-2);
    }

    /// Advances (t, y) by one accepted step, never past `t_limit`.
    pub fn step<F>(&mut self, f: &mut F, t: &mut f64, y: &mut [f64], t_limit: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let dim = y.len();
        loop {
            let span = t_limit - *t;
            let dt = self.dt.min(self.max_step).min(span.abs()).copysign(span);
            if dt.abs() < 1e-12 * t.abs().max(1.0) {
                return Err(Error::Stiffness { t: *t });
            }
            f(*t, y, &mut self.k[0])?;
            for stage in 0..6 {
                for i in 0..dim {
                    let mut acc = 0.0;
                    for (j, row) in A[stage].iter().enumerate().take(stage + 1) {
                        acc += row * self.k[j][i];
                    }
                    self.y_stage[i] = y[i] + dt * acc;
                }
                let ts = *t + C[stage] * dt;
                let (head, tail) = self.k.split_at_mut(stage + 1);
                let _ = head;
                f(ts, &self.y_stage, &mut tail[0])?;
            }
            let mut err_sq = 0.0;
            for i in 0..dim {
                let mut y5 = 0.0;
                let mut y4 = 0.0;
                for j in 0..7 {
                    y5 += B5[j] * self.k[j][i];
                    y4 += B4[j] * self.k[j][i];
                }
                self.y_new[i] = y[i] + dt * y5;
                let scale = self.atol + self.rtol * y[i].abs().max(self.y_new[i].abs());
                let e = dt * (y5 - y4) / scale;
                err_sq += e * e;
            }
            let err = (err_sq / dim as f64).sqrt();
            let factor = if err > 1e-30 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            if err <= 1.0 {
                *t += dt;
                y.copy_from_slice(&self.y_new);
                self.dt = (self.dt * factor).min(self.max_step);
                return Ok(());
            }
            self.dt *= factor.min(0.9);
        }
    }
}
