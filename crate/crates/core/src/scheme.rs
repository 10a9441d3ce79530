//! The time stepper.
//!
//! One step from level `n` to `n + 1`:
//!
//! 1. a coupled linear solve for the magnetic field `H^{n+1}` and the
//!    intermediate velocity `û^{n+1}`, with modified Crank–Nicolson weights
//!    (`¾` new, `¼` two levels back) on the curl–div term and explicit
//!    extrapolations `Ȟ = 3/2 Hⁿ − 1/2 Hⁿ⁻¹`, `ǔ = 3/2 uⁿ − 1/2 uⁿ⁻¹` as the
//!    coefficients of the nonlinear terms;
//! 2. a Darcy projection of `û^{n+1}` onto discretely divergence-free
//!    fields, which also updates the pressure by its increment.
//!
//! All linear algebra happens on free DOFs; [`FieldVec`]s carry zeros in
//! constrained slots.

use std::sync::Arc;

use crate::assembly::{assemble_load, AssembledForms, PhysParams};
use crate::error::{MhdError, Result};
use crate::fem::{interpolate_scalar, interpolate_vector, DofMap, FieldVec};
use crate::linsolve::{
    BlockBuilder, CholeskyFactor, LuFactor, LuPattern, SaddleSolver, SolveReport, SparseMatrix, DEFAULT_TOL,
};
use crate::mesh::Mesh;

/// Field norms above this abort the run.
pub const BLOWUP_LIMIT: f64 = 1e12;

/// Uniform partition of `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub tau: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, steps: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(MhdError::Config(format!("tau must be positive, got {tau}")));
        }
        if steps < 2 {
            return Err(MhdError::Config(format!(
                "need at least 2 time steps (two starting levels), got {steps}"
            )));
        }
        Ok(TimeGrid { tau, steps })
    }

    /// Grid with `N = T / τ` steps; `T` must be a whole multiple of `τ`.
    pub fn with_final_time(tau: f64, t_final: f64) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(MhdError::Config(format!("T must be positive, got {t_final}")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(MhdError::Config(format!("tau must be positive, got {tau}")));
        }
        let n = (t_final / tau).round();
        if (n * tau - t_final).abs() > 1e-9 * t_final {
            return Err(MhdError::Config(format!("T = {t_final} is not a multiple of tau = {tau}")));
        }
        Self::new(tau, n as usize)
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.steps)
    }
}

/// Right-hand sides `g` (induction) and `f` (momentum).
pub trait Forcing: Sync {
    fn magnetic(&self, t: f64, x: f64, y: f64) -> [f64; 2];
    fn momentum(&self, t: f64, x: f64, y: f64) -> [f64; 2];

    /// Lets the stepper skip load assembly.
    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoForcing;

impl Forcing for NoForcing {
    fn magnetic(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn momentum(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// Pointwise fields used for initial data and exact starting values.
pub trait Fields: Sync {
    fn velocity(&self, t: f64, x: f64, y: f64) -> [f64; 2];
    fn magnetic(&self, t: f64, x: f64, y: f64) -> [f64; 2];
    fn pressure(&self, t: f64, x: f64, y: f64) -> f64;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroFields;

impl Fields for ZeroFields {
    fn velocity(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn magnetic(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn pressure(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// How level 1 is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Startup {
    /// Interpolate the given fields at `t₀` and `t₁`.
    ExactFields,
    /// One coupled backward-Euler step with a full Stokes solve.
    Bootstrap,
}

/// Rolling window of the stepper.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub n: usize,
    pub h: FieldVec,
    pub h_prev: FieldVec,
    pub u: FieldVec,
    pub u_prev: FieldVec,
    pub p: FieldVec,
    /// Intermediate velocity of the step that produced level `n`.
    pub u_hat: FieldVec,
}

impl State {
    pub fn zeros(forms: &AssembledForms) -> Self {
        let h = FieldVec::zeros(&forms.magnetic);
        let u = FieldVec::zeros(&forms.velocity);
        State {
            n: 0,
            h_prev: h.clone(),
            h,
            u_prev: u.clone(),
            u_hat: u.clone(),
            u,
            p: FieldVec::zeros(&forms.pressure),
        }
    }

    /// `Ȟ = 3/2 Hⁿ − 1/2 Hⁿ⁻¹`.
    pub fn h_check(&self) -> FieldVec {
        self.h.combine(1.5, &self.h_prev, -0.5)
    }

    /// `ǔ = 3/2 uⁿ − 1/2 uⁿ⁻¹`.
    pub fn u_check(&self) -> FieldVec {
        self.u.combine(1.5, &self.u_prev, -0.5)
    }

    /// `H̃ = ¾ H^{n+1} + ¼ Hⁿ⁻¹` for a candidate new level.
    pub fn h_tilde(&self, h_next: &FieldVec) -> FieldVec {
        h_next.combine(0.75, &self.h_prev, 0.25)
    }

    /// `ū = ½ (û^{n+1} + uⁿ)`.
    pub fn u_bar(&self, u_hat_next: &FieldVec) -> FieldVec {
        u_hat_next.combine(0.5, &self.u, 0.5)
    }

    pub fn is_zero(&self) -> bool {
        [&self.h, &self.h_prev, &self.u, &self.u_prev, &self.p, &self.u_hat]
            .iter()
            .all(|f| f.values().iter().all(|&v| v == 0.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    /// Level reached by the step.
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    /// `‖B u^{n+1}‖_∞`.
    pub div_residual: f64,
    /// `‖u^{n+1} − û^{n+1} + (τ/2) ∇_h (p^{n+1} − pⁿ)‖_∞`; `None` for the
    /// bootstrap step, which has no projection.
    pub equiv_residual: Option<f64>,
    pub coupled: SolveReport,
    pub projection: SolveReport,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    pub tol: f64,
    /// Keep the Lorentz and induction coupling. Switching it off is only
    /// meant for diagnostics.
    pub coupling: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            tol: DEFAULT_TOL,
            coupling: true,
        }
    }
}

fn restrict_square(m: &SparseMatrix, map: &DofMap) -> SparseMatrix {
    let n = map.num_free();
    m.submatrix(|i| map.free_index(i), n, |j| map.free_index(j), n)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Assembled operators and factorizations for one mesh, `τ` and parameter set.
pub struct Stepper {
    forms: AssembledForms,
    tau: f64,
    opts: StepOptions,
    nh: usize,
    nu: usize,
    mass_u: SparseMatrix,
    mass_h: SparseMatrix,
    curl_div: SparseMatrix,
    grad: SparseMatrix,
    /// `B` with velocity columns restricted to free DOFs.
    div: SparseMatrix,
    coupled_base: SparseMatrix,
    coupled_pattern: LuPattern,
    darcy: SaddleSolver,
    mass_u_factor: CholeskyFactor,
}

impl Stepper {
    pub fn new(mesh: Arc<Mesh>, params: PhysParams, tau: f64, opts: StepOptions) -> Result<Self> {
        for (name, v) in [("mu", params.mu), ("sigma", params.sigma), ("nu", params.nu), ("tau", tau)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(MhdError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Self::from_forms(AssembledForms::new(mesh, params), tau, opts)
    }

    pub fn from_forms(forms: AssembledForms, tau: f64, opts: StepOptions) -> Result<Self> {
        let (vel, mag) = (&forms.velocity, &forms.magnetic);
        let (nh, nu, np) = (mag.num_free(), vel.num_free(), forms.pressure.num_dofs());
        let mass_u = restrict_square(&forms.mass_u, vel);
        let mass_h = restrict_square(&forms.mass_h, mag);
        let curl_div = restrict_square(&forms.curl_div, mag);
        let grad = restrict_square(&forms.grad, vel);
        let div = forms.div.submatrix(Some, np, |j| vel.free_index(j), nu);

        // Explicit zeros reserve the pattern of the per-step N and G blocks.
        let zero_n = restrict_square(&forms.convection(&FieldVec::zeros(vel)), vel);
        let zero_g = forms
            .coupling(&FieldVec::zeros(mag))
            .submatrix(|i| mag.free_index(i), nh, |j| vel.free_index(j), nu);
        let mu = forms.params.mu;
        let coupled_base = BlockBuilder::new(nh + nu, nh + nu)
            .block(0, 0, &mass_h, mu / tau)
            .block(0, 0, &curl_div, 0.75)
            .block(0, nh, &zero_g, 0.0)
            .block(nh, 0, &zero_g.transpose(), 0.0)
            .block(nh, nh, &mass_u, 1.0 / tau)
            .block(nh, nh, &grad, 0.5)
            .block(nh, nh, &zero_n, 0.0)
            .build();
        let coupled_pattern = LuPattern::analyze(&coupled_base)?;
        let darcy = SaddleSolver::new(&mass_u, &div, Some(&forms.pressure_mean), opts.tol)?;
        let mass_u_factor = CholeskyFactor::new(&mass_u)?;
        Ok(Stepper {
            forms,
            tau,
            opts,
            nh,
            nu,
            mass_u,
            mass_h,
            curl_div,
            grad,
            div,
            coupled_base,
            coupled_pattern,
            darcy,
            mass_u_factor,
        })
    }

    pub fn forms(&self) -> &AssembledForms {
        &self.forms
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn options(&self) -> StepOptions {
        self.opts
    }

    /// Sizes `(free H, free u, pressure)`.
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.nh, self.nu, self.forms.pressure.num_dofs())
    }

    /// Free-DOF mass matrix of the magnetic space.
    pub fn mass_h(&self) -> &SparseMatrix {
        &self.mass_h
    }

    /// Free-DOF mass matrix of the velocity space.
    pub fn mass_u(&self) -> &SparseMatrix {
        &self.mass_u
    }

    /// Free-DOF divergence matrix (pressure rows, velocity columns).
    pub fn div(&self) -> &SparseMatrix {
        &self.div
    }

    /// Coupling blocks for the coefficient `b` on free DOFs:
    /// `(−G(b), +G(b)ᵀ)` for the induction and momentum equations.
    pub fn coupling_blocks(&self, b: &FieldVec) -> (SparseMatrix, SparseMatrix) {
        let (vel, mag) = (&self.forms.velocity, &self.forms.magnetic);
        let g = self
            .forms
            .coupling(b)
            .submatrix(|i| mag.free_index(i), self.nh, |j| vel.free_index(j), self.nu);
        (g.scaled(-1.0), g.transpose())
    }

    /// The step-(a) matrix for the explicit coefficients of `state`.
    pub fn coupled_matrix(&self, state: &State) -> SparseMatrix {
        let (vel, mag) = (&self.forms.velocity, &self.forms.magnetic);
        let nh = self.nh;
        let mut a = self.coupled_base.clone();
        for (i, j, v) in self.forms.convection(&state.u_check()).triplets() {
            if let (Some(fi), Some(fj)) = (vel.free_index(i), vel.free_index(j)) {
                a.add_at(nh + fi, nh + fj, 0.5 * v);
            }
        }
        if self.opts.coupling {
            for (i, j, v) in self.forms.coupling(&state.h_check()).triplets() {
                if let (Some(fi), Some(fj)) = (mag.free_index(i), vel.free_index(j)) {
                    a.add_at(fi, nh + fj, -0.5 * v);
                    a.add_at(nh + fj, fi, 0.75 * v);
                }
            }
        }
        a
    }

    fn loads(&self, forcing: &dyn Forcing, t: f64) -> (Vec<f64>, Vec<f64>) {
        let (vel, mag) = (&self.forms.velocity, &self.forms.magnetic);
        if forcing.is_zero() {
            return (vec![0.0; mag.num_dofs()], vec![0.0; vel.num_dofs()]);
        }
        (
            assemble_load(mag, |x, y| forcing.magnetic(t, x, y)),
            assemble_load(vel, |x, y| forcing.momentum(t, x, y)),
        )
    }

    /// Advances `state` by one step with sources evaluated at `t_{n+½}`.
    pub fn step(&self, state: &State, forcing: &dyn Forcing) -> Result<(State, StepReport)> {
        if state.n < 1 {
            return Err(MhdError::Config("step needs levels n and n-1 with n >= 1".into()));
        }
        let (vel, mag) = (&self.forms.velocity, &self.forms.magnetic);
        let tau = self.tau;
        let mu = self.forms.params.mu;
        let (load_g, load_f) = self.loads(forcing, (state.n as f64 + 0.5) * tau);

        // (a) coupled solve for (H^{n+1}, û^{n+1})
        let fm = &self.forms;
        let mut rh = fm.mass_h.mul_vec(state.h.values());
        rh.iter_mut().for_each(|v| *v *= mu / tau);
        axpy(&mut rh, -0.25, &fm.curl_div.mul_vec(state.h_prev.values()));
        axpy(&mut rh, 1.0, &load_g);

        let mut ru = fm.mass_u.mul_vec(state.u.values());
        ru.iter_mut().for_each(|v| *v /= tau);
        axpy(&mut ru, -0.5, &fm.grad.mul_vec(state.u.values()));
        let n_mat = fm.convection(&state.u_check());
        axpy(&mut ru, -0.5, &n_mat.mul_vec(state.u.values()));
        axpy(&mut ru, 1.0, &fm.div.mul_vec_transpose(state.p.values()));
        axpy(&mut ru, 1.0, &load_f);

        if self.opts.coupling {
            let g = fm.coupling(&state.h_check());
            axpy(&mut rh, 0.5, &g.mul_vec(state.u.values()));
            axpy(&mut ru, -0.25, &g.mul_vec_transpose(state.h_prev.values()));
        }

        let mut rhs = mag.restrict(&rh);
        rhs.extend(vel.restrict(&ru));
        let a = self.coupled_matrix(state);
        let (x, coupled) = LuFactor::with_pattern(&self.coupled_pattern, &a)?.solve_checked(&a, &rhs, self.opts.tol)?;
        let h_next = FieldVec::from_free(mag, &x[..self.nh]);
        let u_hat_free = &x[self.nh..];

        // (b) Darcy projection; the multiplier is y = −(τ/2) p^{n+1}
        let mut f = self.mass_u.mul_vec(u_hat_free);
        axpy(&mut f, -0.5 * tau, &self.div.mul_vec_transpose(state.p.values()));
        let zero = vec![0.0; self.div.nrows()];
        let (u_free, y, projection) = self.darcy.solve(&f, &zero)?;
        let p_next: Vec<f64> = y.iter().map(|v| -2.0 * v / tau).collect();

        let div_residual = max_abs(&self.div.mul_vec(&u_free));
        let dp: Vec<f64> = p_next.iter().zip(state.p.values()).map(|(a, b)| a - b).collect();
        let grad_dp = self.gradient_free(&dp)?;
        let equiv: Vec<f64> = (0..self.nu)
            .map(|i| u_free[i] - u_hat_free[i] + 0.5 * tau * grad_dp[i])
            .collect();

        let next = State {
            n: state.n + 1,
            h_prev: state.h.clone(),
            h: h_next,
            u_prev: state.u.clone(),
            u: FieldVec::from_free(vel, &u_free),
            p: FieldVec::from_values(&self.forms.pressure, p_next)?,
            u_hat: FieldVec::from_free(vel, u_hat_free),
        };
        self.watchdog(&next)?;
        let report = StepReport {
            step: next.n,
            t: next.n as f64 * tau,
            energy: self.energy(&next)?,
            div_residual,
            equiv_residual: Some(max_abs(&equiv)),
            coupled,
            projection,
        };
        Ok((next, report))
    }

    fn watchdog(&self, s: &State) -> Result<()> {
        for (name, f) in [("H", &s.h), ("u", &s.u), ("p", &s.p), ("u_hat", &s.u_hat)] {
            let m = f.max_abs();
            if !f.is_finite() || m > BLOWUP_LIMIT {
                return Err(MhdError::BlowUp {
                    step: s.n,
                    what: format!("max |{name}| = {m:e}"),
                });
            }
        }
        Ok(())
    }

    /// Level-0 state from `fields` at `t = 0`: `H⁻¹ = H⁰`, `u⁻¹ = u⁰`, and the
    /// pressure interpolant shifted to zero mean.
    pub fn initial_state(&self, fields: &dyn Fields) -> State {
        let (u, h, p) = self.interpolate(fields, 0.0);
        State {
            n: 0,
            h_prev: h.clone(),
            h,
            u_prev: u.clone(),
            u_hat: u.clone(),
            u,
            p,
        }
    }

    fn interpolate(&self, fields: &dyn Fields, t: f64) -> (FieldVec, FieldVec, FieldVec) {
        let u = interpolate_vector(&self.forms.velocity, |x, y| fields.velocity(t, x, y));
        let h = interpolate_vector(&self.forms.magnetic, |x, y| fields.magnetic(t, x, y));
        let mut p = interpolate_scalar(&self.forms.pressure, |x, y| fields.pressure(t, x, y));
        self.center_pressure(&mut p);
        (u, h, p)
    }

    /// Subtracts the mean so that `∫ p = 0`.
    pub fn center_pressure(&self, p: &mut FieldVec) {
        let m = &self.forms.pressure_mean;
        let area: f64 = m.iter().sum();
        let mean = self.pressure_integral(p) / area;
        p.values_mut().iter_mut().for_each(|v| *v -= mean);
    }

    /// `∫ p`.
    pub fn pressure_integral(&self, p: &FieldVec) -> f64 {
        self.forms
            .pressure_mean
            .iter()
            .zip(p.values())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Produces the state at level 1 together with the report of step 1.
    pub fn startup(&self, fields: &dyn Fields, forcing: &dyn Forcing, mode: Startup) -> Result<(State, StepReport)> {
        let level0 = self.initial_state(fields);
        match mode {
            Startup::ExactFields => {
                let (u, h, p) = self.interpolate(fields, self.tau);
                let state = State {
                    n: 1,
                    h_prev: level0.h,
                    h,
                    u_prev: level0.u,
                    u_hat: u.clone(),
                    u,
                    p,
                };
                let report = StepReport {
                    step: 1,
                    t: self.tau,
                    energy: self.energy(&state)?,
                    div_residual: max_abs(&self.div.mul_vec(&self.forms.velocity.restrict(state.u.values()))),
                    equiv_residual: None,
                    coupled: SolveReport::default(),
                    projection: SolveReport::default(),
                };
                Ok((state, report))
            }
            Startup::Bootstrap => self.bootstrap(&level0, forcing),
        }
    }

    /// One semi-implicit backward-Euler step from level 0 with a coupled
    /// Stokes solve for `(H¹, u¹, p¹)`; coefficients of the nonlinear terms
    /// are taken from level 0 and the sources at `t₁`.
    pub fn bootstrap(&self, level0: &State, forcing: &dyn Forcing) -> Result<(State, StepReport)> {
        let (vel, mag) = (&self.forms.velocity, &self.forms.magnetic);
        let (nh, nu, np) = self.sizes();
        let tau = self.tau;
        let mu = self.forms.params.mu;
        let fm = &self.forms;

        let n_mat = restrict_square(&fm.convection(&level0.u), vel);
        let g = fm
            .coupling(&level0.h)
            .submatrix(|i| mag.free_index(i), nh, |j| vel.free_index(j), nu);
        let g_scale = if self.opts.coupling { 1.0 } else { 0.0 };
        let n = nh + nu + np + 1;
        let mut builder = BlockBuilder::new(n, n);
        builder
            .block(0, 0, &self.mass_h, mu / tau)
            .block(0, 0, &self.curl_div, 1.0)
            .block(0, nh, &g, -g_scale)
            .block(nh, 0, &g.transpose(), g_scale)
            .block(nh, nh, &self.mass_u, 1.0 / tau)
            .block(nh, nh, &self.grad, 1.0)
            .block(nh, nh, &n_mat, 1.0)
            .block(nh, nh + nu, &self.div.transpose(), -1.0)
            .block(nh + nu, nh, &self.div, -1.0);
        for (q, &w) in fm.pressure_mean.iter().enumerate() {
            builder.entry(nh + nu + q, n - 1, w);
            builder.entry(n - 1, nh + nu + q, w);
        }
        for i in nh + nu..n {
            builder.entry(i, i, 0.0);
        }
        let a = builder.build();

        let (load_g, load_f) = self.loads(forcing, tau);
        let mut rhs = vec![0.0; n];
        let hm = self.mass_h.mul_vec(&mag.restrict(level0.h.values()));
        let um = self.mass_u.mul_vec(&vel.restrict(level0.u.values()));
        let lg = mag.restrict(&load_g);
        let lf = vel.restrict(&load_f);
        for i in 0..nh {
            rhs[i] = mu / tau * hm[i] + lg[i];
        }
        for i in 0..nu {
            rhs[nh + i] = um[i] / tau + lf[i];
        }
        let (x, coupled) = LuFactor::new(&a)?.solve_checked(&a, &rhs, self.opts.tol)?;
        let u_free = &x[nh..nh + nu];
        let state = State {
            n: 1,
            h_prev: level0.h.clone(),
            h: FieldVec::from_free(mag, &x[..nh]),
            u_prev: level0.u.clone(),
            u: FieldVec::from_free(vel, u_free),
            p: FieldVec::from_values(&fm.pressure, x[nh + nu..n - 1].to_vec())?,
            u_hat: FieldVec::from_free(vel, u_free),
        };
        self.watchdog(&state)?;
        let report = StepReport {
            step: 1,
            t: tau,
            energy: self.energy(&state)?,
            div_residual: max_abs(&self.div.mul_vec(u_free)),
            equiv_residual: None,
            coupled,
            projection: SolveReport::default(),
        };
        Ok((state, report))
    }

    fn gradient_free(&self, q: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = self.div.mul_vec_transpose(q);
        rhs.iter_mut().for_each(|v| *v = -*v);
        Ok(self.mass_u_factor.solve_checked(&self.mass_u, &rhs, self.opts.tol)?.0)
    }

    /// `∇_h q`: the velocity-space field with `(v, ∇_h q) = −(∇·v, q)` for all `v ∈ X_h`.
    pub fn discrete_gradient(&self, q: &FieldVec) -> Result<FieldVec> {
        if q.len() != self.forms.pressure.num_dofs() {
            return Err(MhdError::Dimension(format!(
                "pressure field of length {} on a space with {} DOFs",
                q.len(),
                self.forms.pressure.num_dofs()
            )));
        }
        if q.values().iter().all(|&v| v == 0.0) {
            return Ok(FieldVec::zeros(&self.forms.velocity));
        }
        Ok(FieldVec::from_free(&self.forms.velocity, &self.gradient_free(q.values())?))
    }

    /// `‖uⁿ‖² + μ‖Hⁿ‖² + μ/4 ‖Hⁿ − Hⁿ⁻¹‖² + τ²/4 ‖∇_h pⁿ‖²`.
    pub fn energy(&self, s: &State) -> Result<f64> {
        let fm = &self.forms;
        let mu = fm.params.mu;
        let dh = s.h.combine(1.0, &s.h_prev, -1.0);
        let g = self.discrete_gradient(&s.p)?;
        Ok(fm.mass_u.bilinear(s.u.values(), s.u.values())
            + mu * fm.mass_h.bilinear(s.h.values(), s.h.values())
            + 0.25 * mu * fm.mass_h.bilinear(dh.values(), dh.values())
            + 0.25 * self.tau * self.tau * fm.mass_u.bilinear(g.values(), g.values()))
    }

    /// Runs `steps` further steps, handing each report to `observe`.
    pub fn run(
        &self,
        mut state: State,
        forcing: &dyn Forcing,
        steps: usize,
        mut observe: impl FnMut(&State, &StepReport),
    ) -> Result<State> {
        for _ in 0..steps {
            let (next, report) = self.step(&state, forcing)?;
            observe(&next, &report);
            state = next;
        }
        Ok(state)
    }
}

/// Relative residual of the three-level identity
///
/// `(a⁺ − a, ¾a⁺ + ¼a⁻)_W = ½(‖a⁺‖² − ‖a‖²) + ⅛(‖a⁺ − a‖² − ‖a − a⁻‖²) + ⅛‖a⁺ − 2a + a⁻‖²`
///
/// with all norms in `W` (the identity when `None`). The difference of the
/// two sides is divided by `‖a⁺‖² + ‖a‖² + ‖a⁻‖²`.
pub fn cn_identity_check(a_next: &[f64], a: &[f64], a_prev: &[f64], w: Option<&SparseMatrix>) -> f64 {
    assert!(a_next.len() == a.len() && a.len() == a_prev.len());
    let ip = |x: &[f64], y: &[f64]| match w {
        Some(m) => m.bilinear(x, y),
        None => x.iter().zip(y).map(|(p, q)| p * q).sum(),
    };
    let lin = |c: &[(f64, &[f64])]| -> Vec<f64> {
        (0..a.len()).map(|i| c.iter().map(|(s, v)| s * v[i]).sum()).collect()
    };
    let diff = lin(&[(1.0, a_next), (-1.0, a)]);
    let avg = lin(&[(0.75, a_next), (0.25, a_prev)]);
    let back = lin(&[(1.0, a), (-1.0, a_prev)]);
    let second = lin(&[(1.0, a_next), (-2.0, a), (1.0, a_prev)]);
    let (nn, n0, np) = (ip(a_next, a_next), ip(a, a), ip(a_prev, a_prev));
    let lhs = ip(&diff, &avg);
    let rhs = 0.5 * (nn - n0) + 0.125 * (ip(&diff, &diff) - ip(&back, &back)) + 0.125 * ip(&second, &second);
    let scale = nn + n0 + np;
    if scale == 0.0 {
        (lhs - rhs).abs()
    } else {
        (lhs - rhs).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn stepper(m: usize, tau: f64) -> Stepper {
        Stepper::new(Arc::new(Mesh::uniform(m).unwrap()), PhysParams::default(), tau, StepOptions::default()).unwrap()
    }

    fn random_field(map: &DofMap, rng: &mut ChaCha8Rng) -> FieldVec {
        let free: Vec<f64> = (0..map.num_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FieldVec::from_free(map, &free)
    }

    fn random_state(s: &Stepper, rng: &mut ChaCha8Rng) -> State {
        let f = s.forms();
        let mut p = FieldVec::from_values(
            &f.pressure,
            (0..f.pressure.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        s.center_pressure(&mut p);
        State {
            n: 1,
            h: random_field(&f.magnetic, rng),
            h_prev: random_field(&f.magnetic, rng),
            u: random_field(&f.velocity, rng),
            u_prev: random_field(&f.velocity, rng),
            u_hat: FieldVec::zeros(&f.velocity),
            p,
        }
    }

    struct Vortex;

    impl Fields for Vortex {
        fn velocity(&self, _: f64, x: f64, y: f64) -> [f64; 2] {
            let (sx, sy) = ((PI * x).sin(), (PI * y).sin());
            [sx * sx * (2.0 * PI * y).sin(), -(2.0 * PI * x).sin() * sy * sy]
        }

        fn magnetic(&self, _: f64, x: f64, y: f64) -> [f64; 2] {
            [
                -(2.0 * PI * y).sin() * (2.0 * PI * x).cos(),
                (2.0 * PI * x).sin() * (2.0 * PI * y).cos(),
            ]
        }

        fn pressure(&self, _: f64, x: f64, y: f64) -> f64 {
            (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
        }
    }

    #[test]
    fn time_grid() {
        let g = TimeGrid::with_final_time(0.1, 1.0).unwrap();
        assert_eq!(g.steps, 10);
        assert!(TimeGrid::new(-1.0, 10).is_err());
        assert!(TimeGrid::new(0.1, 1).is_err());
        assert!(TimeGrid::with_final_time(0.3, 1.0).is_err());
        assert_eq!(TimeGrid::with_final_time(10.0, 1000.0).unwrap().steps, 100);
    }

    #[test]
    fn zero_state_stays_zero() {
        let s = stepper(4, 1.0);
        let (mut state, _) = s.startup(&ZeroFields, &NoForcing, Startup::Bootstrap).unwrap();
        assert!(state.is_zero());
        for _ in 0..3 {
            let (next, r) = s.step(&state, &NoForcing).unwrap();
            assert!(next.is_zero());
            assert_eq!(r.energy, 0.0);
            state = next;
        }
    }

    #[test]
    fn energy_of_simple_states() {
        let s = stepper(4, 1.0);
        assert_eq!(s.energy(&State::zeros(s.forms())).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut st = random_state(&s, &mut rng);
        st.h_prev = st.h.clone();
        st.p = FieldVec::zeros(&s.forms().pressure);
        let f = s.forms();
        let expect = f.mass_u.bilinear(st.u.values(), st.u.values()) + f.mass_h.bilinear(st.h.values(), st.h.values());
        assert_eq!(s.energy(&st).unwrap(), expect);
    }

    #[test]
    fn initial_energy_close_to_analytic() {
        // ∫|u₀|² = 3/8, ∫|H₀|² = 1/2; p₀ does not enter with τ → 0
        let s = stepper(16, 1e-8);
        let e = s.energy(&s.initial_state(&Vortex)).unwrap();
        assert!((e - 0.875).abs() < 1e-3, "{e}");
    }

    #[test]
    fn gradient_adjointness() {
        let s = stepper(4, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let v = random_field(&s.forms().velocity, &mut rng);
            let q = random_state(&s, &mut rng).p;
            let g = s.discrete_gradient(&q).unwrap();
            let lhs = s.forms().mass_u.bilinear(v.values(), g.values());
            let rhs = s.forms().div.bilinear(q.values(), v.values());
            assert!((lhs + rhs).abs() < 1e-11, "{}", lhs + rhs);
        }
    }

    #[test]
    fn gradient_of_linear_pressure() {
        // ∇_h (x − ½) is the L²(X_h) projection of (1, 0) minus boundary terms:
        // (v, ∇_h q) = −(∇·v, q) = (v, ∇q) for v vanishing on ∂Ω.
        let s = stepper(4, 1.0);
        let q = interpolate_scalar(&s.forms().pressure, |x, _| x - 0.5);
        let g = s.discrete_gradient(&q).unwrap();
        let vel = &s.forms().velocity;
        let load = vel.restrict(&assemble_load(vel, |_, _| [1.0, 0.0]));
        let proj = crate::linsolve::solve(s.mass_u(), &load, &Default::default()).unwrap().0;
        let got = vel.restrict(g.values());
        for (a, b) in got.iter().zip(&proj) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn coupling_blocks_cancel() {
        let s = stepper(4, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random_field(&s.forms().magnetic, &mut rng);
        let (mag, mom) = s.coupling_blocks(&b);
        let sum = mom.lin_comb(1.0, &mag.transpose(), 1.0);
        assert_eq!(sum.max_abs(), 0.0);
        assert!(mag.max_abs() > 0.0);
    }

    #[test]
    fn cn_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        for _ in 0..10 {
            let (a, b, c) = (v(&mut rng), v(&mut rng), v(&mut rng));
            assert!(cn_identity_check(&a, &b, &c, None) < 1e-13);
        }
        let a = vec![0.5; 7];
        assert_eq!(cn_identity_check(&a, &a, &a, None), 0.0);
    }

    #[test]
    fn step_residuals_and_energy_decay() {
        let s = stepper(6, 1.0);
        let (mut state, r1) = s.startup(&Vortex, &NoForcing, Startup::Bootstrap).unwrap();
        let e0 = s.energy(&s.initial_state(&Vortex)).unwrap();
        assert!(r1.div_residual < 1e-9);
        let mut e = r1.energy;
        assert!(e <= e0, "{e} > {e0}");
        for _ in 0..5 {
            let (next, r) = s.step(&state, &NoForcing).unwrap();
            assert!(r.div_residual < 1e-9, "{}", r.div_residual);
            assert!(r.equiv_residual.unwrap() < 1e-9);
            assert!(r.energy <= e + 1e-10, "{} > {e}", r.energy);
            assert!(s.pressure_integral(&next.p).abs() < 1e-12);
            e = r.energy;
            state = next;
        }
    }

    #[test]
    fn coupled_matrix_factors_for_random_states() {
        for m in [4, 8] {
            let s = stepper(m, 0.1);
            let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
            for _ in 0..3 {
                let a = s.coupled_matrix(&random_state(&s, &mut rng));
                let rhs: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let f = LuFactor::with_pattern(&s.coupled_pattern, &a).unwrap();
                let (_, rep) = f.solve_checked(&a, &rhs, 1e-11).unwrap();
                assert!(rep.residual < 1e-11);
            }
        }
    }

    #[test]
    fn step_is_deterministic() {
        let s = stepper(4, 0.5);
        let (st, _) = s.startup(&Vortex, &NoForcing, Startup::ExactFields).unwrap();
        let (a, ra) = s.step(&st, &NoForcing).unwrap();
        let (b, rb) = s.step(&st, &NoForcing).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.energy.to_bits(), rb.energy.to_bits());
    }
}
