use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_TIME_STEPS: usize = 2000;

/// Data of `u_t − u_xx = r u + f(x, t)` on `[0, L]` with Dirichlet at 0 and Neumann at L.
pub trait HeatData {
    fn reaction(&self) -> f64;
    fn forcing(&self, x: f64, t: f64) -> f64;
    fn dirichlet(&self, t: f64) -> f64;
    fn neumann(&self, t: f64) -> f64;
    fn initial(&self, x: f64) -> f64;
}

/// The parametrized problem: forcing `10 cos(x) sin(2πt)`, boundary data from `mu`.
#[derive(Clone, Copy, Debug)]
pub struct ParametricHeat {
    pub mu: f64,
}

impl ParametricHeat {
    pub fn dirichlet_value(mu: f64) -> f64 {
        10.0 * (2.0 * mu.powi(3) - 3.0 * mu * mu + mu)
    }

    pub fn neumann_value(mu: f64) -> f64 {
        2.0 * (1.0 - 2.0 * mu).abs() - 1.0
    }
}

impl HeatData for ParametricHeat {
    fn reaction(&self) -> f64 {
        1.0
    }
    fn forcing(&self, x: f64, t: f64) -> f64 {
        10.0 * x.cos() * (2.0 * PI * t).sin()
    }
    fn dirichlet(&self, _t: f64) -> f64 {
        Self::dirichlet_value(self.mu)
    }
    fn neumann(&self, _t: f64) -> f64 {
        Self::neumann_value(self.mu)
    }
    fn initial(&self, x: f64) -> f64 {
        Self::dirichlet_value(self.mu) * x.cos() + Self::neumann_value(self.mu) * x.sin()
    }
}

/// Problem with exact solution `e^{−t} cos x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Manufactured;

impl Manufactured {
    pub fn exact(x: f64, t: f64) -> f64 {
        (-t).exp() * x.cos()
    }
}

impl HeatData for Manufactured {
    fn reaction(&self) -> f64 {
        1.0
    }
    fn forcing(&self, x: f64, t: f64) -> f64 {
        -(-t).exp() * x.cos()
    }
    fn dirichlet(&self, t: f64) -> f64 {
        (-t).exp()
    }
    fn neumann(&self, t: f64) -> f64 {
        -(-t).exp() * PI.sin()
    }
    fn initial(&self, x: f64) -> f64 {
        x.cos()
    }
}

/// Uniform grid of `n` nodes on `[a, b]`, endpoints included.
pub fn uniform_grid(n: usize, a: f64, b: f64) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * h }).collect()
}

/// Crank–Nicolson in time, central differences in space, ghost node for the Neumann end.
pub struct CrankNicolson {
    pub grid: Vec<f64>,
    pub final_time: f64,
    pub steps: usize,
}

impl CrankNicolson {
    pub fn new(n_nodes: usize, length: f64, final_time: f64, steps: usize) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::InvalidArgument(format!("need at least 3 nodes, got {n_nodes}")));
        }
        if steps == 0 || !(final_time > 0.0) {
            return Err(Error::InvalidArgument("time stepping needs steps >= 1 and T > 0".into()));
        }
        Ok(Self {
            grid: uniform_grid(n_nodes, 0.0, length),
            final_time,
            steps,
        })
    }

    fn h(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Right-hand side `A u + c(t)` of the semi-discrete system on the unknown nodes 1..n.
    fn apply(&self, data: &impl HeatData, u: &[f64], t: f64, out: &mut [f64]) {
        let n = self.grid.len();
        let h2 = self.h() * self.h();
        let r = data.reaction();
        let u0 = data.dirichlet(t);
        for i in 1..n {
            let left = if i == 1 { u0 } else { u[i - 1] };
            let right = if i == n - 1 {
                // ghost node u_n = u_{n-2} + 2h g
                u[n - 2] + 2.0 * self.h() * data.neumann(t)
            } else {
                u[i + 1]
            };
            out[i] = (left - 2.0 * u[i] + right) / h2 + r * u[i] + data.forcing(self.grid[i], t);
        }
    }

    /// One CN step of size `dt` from time `t`.
    fn step(&self, data: &impl HeatData, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
        let n = self.grid.len();
        let r = data.reaction();
        if dt * r / 2.0 >= 1.0 {
            return Err(Error::StepSize(format!(
                "dt = {dt} with reaction {r} makes the implicit operator lose diagonal dominance"
            )));
        }
        let h2 = self.h() * self.h();
        let t1 = t + dt;
        let mut explicit = vec![0.0; n];
        self.apply(data, u, t, &mut explicit);
        // rhs = u + dt/2 (A u^k + c^k) + dt/2 c^{k+1}; the A u^{k+1} part stays on the left
        let m = n - 1;
        let mut rhs = vec![0.0; m];
        for i in 1..n {
            let mut c1 = data.forcing(self.grid[i], t1);
            if i == 1 {
                c1 += data.dirichlet(t1) / h2;
            }
            if i == n - 1 {
                c1 += 2.0 * data.neumann(t1) / self.h();
            }
            rhs[i - 1] = u[i] + 0.5 * dt * explicit[i] + 0.5 * dt * c1;
        }
        let off = -0.5 * dt / h2;
        let diag = 1.0 + dt / h2 - 0.5 * dt * r;
        let lower: Vec<f64> = (0..m)
            .map(|k| if k == m - 1 { 2.0 * off } else { off })
            .collect();
        let upper = vec![off; m];
        let x = thomas(&lower, &vec![diag; m], &upper, &rhs);
        let mut next = vec![0.0; n];
        next[0] = data.dirichlet(t1);
        next[1..].copy_from_slice(&x);
        Ok(next)
    }

    /// Solution at each requested instant (sorted, within `(0, T]`).
    pub fn solve(&self, data: &impl HeatData, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("output times must be sorted".into()));
        }
        if let Some(bad) = times.iter().find(|&&t| !(t > 0.0 && t <= self.final_time * (1.0 + 1e-12))) {
            return Err(Error::InvalidArgument(format!(
                "output time {bad} outside (0, {}]",
                self.final_time
            )));
        }
        let dt = self.final_time / self.steps as f64;
        let mut u: Vec<f64> = self.grid.iter().map(|&x| data.initial(x)).collect();
        u[0] = data.dirichlet(0.0);
        let mut k = 0usize;
        let mut out = Vec::with_capacity(times.len());
        for &target in times {
            // advance on the uniform grid while the next node does not overshoot
            while k < self.steps && (k + 1) as f64 * dt <= target * (1.0 + 1e-12) {
                u = self.step(data, &u, k as f64 * dt, dt)?;
                k += 1;
            }
            let reached = k as f64 * dt;
            let gap = target - reached;
            if gap.abs() <= 1e-12 * self.final_time {
                out.push(u.clone());
            } else {
                out.push(self.step(data, &u, reached, gap)?);
            }
        }
        Ok(out)
    }
}

/// Tridiagonal solve; `lower[0]` and `upper[m-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..m {
        let denom = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < m { upper[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// The parametrized problem on `n_nodes` nodes over `[0, π]`, `T = 1`.
pub fn solve_heat_1d(mu: f64, n_nodes: usize, steps: usize, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    if !(0.0..=1.0).contains(&mu) {
        log::warn!("heat parameter {mu} outside [0, 1]");
    }
    CrankNicolson::new(n_nodes, PI, 1.0, steps)?.solve(&ParametricHeat { mu }, times)
}
