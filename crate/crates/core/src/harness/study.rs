//! Convergence studies and the energy experiment.

use std::sync::Arc;

use rayon::prelude::*;

use super::mms::{InitialVortex, ManufacturedSolution};
use crate::assembly::{Integrator, PhysParams};
use crate::error::{MhdError, Result};
use crate::fem::{DofMap, FieldVec};
use crate::mesh::Mesh;
use crate::scheme::{NoForcing, StepOptions, StepReport, Startup, Stepper, TimeGrid};

/// `‖v_h − v‖_{L²}` for a vector field, by degree-6 quadrature.
pub fn l2_error(map: &DofMap, field: &FieldVec, exact: impl Fn(f64, f64) -> [f64; 2]) -> f64 {
    let mesh = map.mesh();
    let integrator = Integrator::default();
    let mut sum = 0.0;
    for t in 0..mesh.num_triangles() {
        let el = integrator.element(mesh.triangle_coords(t), t);
        for q in 0..el.num_points() {
            let (v, _) = el.eval_vector(map, field, q);
            let [x, y] = el.points[q];
            let e = exact(x, y);
            sum += el.jw[q] * ((v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2));
        }
    }
    sum.sqrt()
}

/// `log₂(coarse / fine)`.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyKind {
    Temporal,
    Spatial,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableRow {
    /// Step count `N` (temporal) or cells per side `M` (spatial).
    pub resolution: usize,
    pub err_u: f64,
    pub order_u: Option<f64>,
    pub err_h: f64,
    pub order_h: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub kind: StudyKind,
    pub rows: Vec<TableRow>,
    /// Largest divergence and projection-equivalence residuals over all steps of all cases.
    pub max_div_residual: f64,
    pub max_equiv_residual: f64,
}

impl ConvergenceTable {
    /// Builds rows from `(resolution, err_u, err_H)`, in the given order.
    pub fn from_errors(kind: StudyKind, errors: &[(usize, f64, f64)]) -> Self {
        let rows = errors
            .iter()
            .enumerate()
            .map(|(i, &(resolution, err_u, err_h))| {
                let prev = i.checked_sub(1).map(|j| errors[j]);
                TableRow {
                    resolution,
                    err_u,
                    order_u: prev.map(|p| observed_order(p.1, err_u)),
                    err_h,
                    order_h: prev.map(|p| observed_order(p.2, err_h)),
                }
            })
            .collect();
        ConvergenceTable {
            kind,
            rows,
            max_div_residual: 0.0,
            max_equiv_residual: 0.0,
        }
    }

    pub fn orders(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rows
            .iter()
            .filter_map(|r| Some((r.order_u?, r.order_h?)))
    }
}

/// One manufactured-solution run.
#[derive(Clone, Debug, PartialEq)]
pub struct MmsCase {
    pub resolution: usize,
    pub tau: f64,
    pub steps: usize,
    pub options: StepOptions,
    pub params: PhysParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmsResult {
    pub err_u: f64,
    pub err_h: f64,
    pub max_div_residual: f64,
    pub max_equiv_residual: f64,
}

/// Runs the manufactured solution from exact starting values to `t = steps·τ`.
pub fn run_mms(case: &MmsCase) -> Result<MmsResult> {
    let grid = TimeGrid::new(case.tau, case.steps)?;
    let mesh = Arc::new(Mesh::uniform(case.resolution)?);
    let stepper = Stepper::new(mesh, case.params, grid.tau, case.options)?;
    let exact = ManufacturedSolution::new(case.params);
    let (state, _) = stepper.startup(&exact, &exact, Startup::ExactFields)?;
    let (mut div, mut equiv) = (0.0f64, 0.0f64);
    let state = stepper.run(state, &exact, grid.steps - 1, |_, r| {
        div = div.max(r.div_residual);
        equiv = equiv.max(r.equiv_residual.unwrap_or(0.0));
    })?;
    let t = grid.final_time();
    let f = stepper.forms();
    use crate::scheme::Fields;
    Ok(MmsResult {
        err_u: l2_error(&f.velocity, &state.u, |x, y| exact.velocity(t, x, y)),
        err_h: l2_error(&f.magnetic, &state.h, |x, y| exact.magnetic(t, x, y)),
        max_div_residual: div,
        max_equiv_residual: equiv,
    })
}

/// Worker pool capped by `MHD_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("MHD_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| MhdError::Config(format!("MHD_THREADS must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| MhdError::Config(format!("thread pool: {e}")))
}

fn run_cases(kind: StudyKind, cases: Vec<MmsCase>) -> Result<ConvergenceTable> {
    let pool = thread_pool()?;
    let results: Vec<Result<MmsResult>> = pool.install(|| cases.par_iter().map(run_mms).collect());
    let mut errors = Vec::new();
    let (mut div, mut equiv) = (0.0f64, 0.0f64);
    for (case, r) in cases.iter().zip(results) {
        let r = r?;
        let res = match kind {
            StudyKind::Temporal => case.steps,
            StudyKind::Spatial => case.resolution,
        };
        log::info!("{kind:?} {res}: err_u {:.3e} err_H {:.3e}", r.err_u, r.err_h);
        errors.push((res, r.err_u, r.err_h));
        div = div.max(r.max_div_residual);
        equiv = equiv.max(r.max_equiv_residual);
    }
    let mut table = ConvergenceTable::from_errors(kind, &errors);
    table.max_div_residual = div;
    table.max_equiv_residual = equiv;
    Ok(table)
}

/// Errors at `T` on a fixed mesh for each step count in `steps`.
pub fn run_temporal_study(
    resolution: usize,
    t_final: f64,
    steps: &[usize],
    params: PhysParams,
    options: StepOptions,
) -> Result<ConvergenceTable> {
    let cases = steps
        .iter()
        .map(|&n| MmsCase {
            resolution,
            tau: t_final / n as f64,
            steps: n,
            options,
            params,
        })
        .collect();
    run_cases(StudyKind::Temporal, cases)
}

/// Errors at `T` with a fixed step for each mesh in `resolutions`.
pub fn run_spatial_study(
    tau: f64,
    t_final: f64,
    resolutions: &[usize],
    params: PhysParams,
    options: StepOptions,
) -> Result<ConvergenceTable> {
    let grid = TimeGrid::with_final_time(tau, t_final)?;
    let cases = resolutions
        .iter()
        .map(|&m| MmsCase {
            resolution: m,
            tau: grid.tau,
            steps: grid.steps,
            options,
            params,
        })
        .collect();
    run_cases(StudyKind::Spatial, cases)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRow {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    /// Absent at level 0.
    pub div_residual: Option<f64>,
    /// Absent at levels 0 and 1.
    pub equiv_residual: Option<f64>,
}

impl EnergyRow {
    fn from_report(r: &StepReport) -> Self {
        EnergyRow {
            step: r.step,
            t: r.t,
            energy: r.energy,
            div_residual: Some(r.div_residual),
            equiv_residual: r.equiv_residual,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergySeries {
    pub rows: Vec<EnergyRow>,
}

impl EnergySeries {
    /// First step whose energy exceeds its predecessor by more than `tol`.
    pub fn first_increase(&self, tol: f64) -> Option<(usize, f64, f64)> {
        self.rows
            .windows(2)
            .find(|w| w[1].energy > w[0].energy + tol)
            .map(|w| (w[1].step, w[0].energy, w[1].energy))
    }

    pub fn check_monotone(&self, tol: f64) -> Result<()> {
        match self.first_increase(tol) {
            Some((step, before, after)) => Err(MhdError::EnergyIncrease { step, before, after }),
            None => Ok(()),
        }
    }
}

/// Unforced run from the vortex initial data with a bootstrap first step.
/// Row 0 holds the energy of the interpolated data (pressure included).
pub fn run_energy_study(
    resolution: usize,
    tau: f64,
    steps: usize,
    params: PhysParams,
    options: StepOptions,
) -> Result<EnergySeries> {
    let grid = TimeGrid::new(tau, steps)?;
    let mesh = Arc::new(Mesh::uniform(resolution)?);
    let stepper = Stepper::new(mesh, params, grid.tau, options)?;
    let level0 = stepper.initial_state(&InitialVortex);
    let mut rows = vec![EnergyRow {
        step: 0,
        t: 0.0,
        energy: stepper.energy(&level0)?,
        div_residual: None,
        equiv_residual: None,
    }];
    let (state, first) = stepper.bootstrap(&level0, &NoForcing)?;
    rows.push(EnergyRow::from_report(&first));
    stepper.run(state, &NoForcing, grid.steps - 1, |_, r| rows.push(EnergyRow::from_report(r)))?;
    Ok(EnergySeries { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{interpolate_vector, SpaceKind};
    use crate::harness::mms::velocity_profile;
    use crate::scheme::Fields;

    #[test]
    fn orders_of_synthetic_errors() {
        let t = ConvergenceTable::from_errors(StudyKind::Temporal, &[(10, 1.0, 1.0), (20, 0.25, 0.25), (40, 1.0 / 16.0, 1.0 / 16.0)]);
        let o: Vec<_> = t.orders().collect();
        assert_eq!(o, vec![(2.0, 2.0), (2.0, 2.0)]);
        let s = ConvergenceTable::from_errors(StudyKind::Spatial, &[(8, 1.0, 1.0), (16, 0.125, 0.125), (32, 1.0 / 64.0, 1.0 / 64.0)]);
        assert!(s.orders().all(|(a, b)| a == 3.0 && b == 3.0));
        assert!(t.rows[0].order_u.is_none());
    }

    #[test]
    fn error_of_zero_field_is_the_exact_norm() {
        let mesh = Arc::new(Mesh::uniform(8).unwrap());
        let map = DofMap::new(mesh, SpaceKind::VELOCITY);
        let e = l2_error(&map, &FieldVec::zeros(&map), |x, y| ManufacturedSolution::default().velocity(1.0, x, y));
        // ∫|U|² = 3/8; degree-6 quadrature is not exact for this integrand
        assert!((e - (0.375f64).sqrt()).abs() < 1e-6, "{e}");
    }

    #[test]
    fn interpolation_error_of_quadratics_vanishes() {
        let mesh = Arc::new(Mesh::uniform(3).unwrap());
        let map = DofMap::new(mesh, SpaceKind::VectorP2(crate::fem::Constraint::None));
        let f = |x: f64, y: f64| [x * x - y, 2.0 * x * y + 1.0];
        let field = interpolate_vector(&map, f);
        assert!(l2_error(&map, &field, f) < 1e-13);
    }

    #[test]
    fn interpolation_error_converges() {
        let err = |m: usize| {
            let map = DofMap::new(Arc::new(Mesh::uniform(m).unwrap()), SpaceKind::VELOCITY);
            l2_error(&map, &interpolate_vector(&map, velocity_profile), velocity_profile)
        };
        let order = observed_order(err(8), err(16));
        assert!((order - 3.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn energy_series_checks() {
        let row = |step, energy| EnergyRow { step, t: step as f64, energy, div_residual: None, equiv_residual: None };
        let s = EnergySeries { rows: vec![row(0, 2.0), row(1, 1.0), row(2, 1.0 + 1e-11), row(3, 1.5)] };
        assert_eq!(s.first_increase(1e-10), Some((3, 1.0 + 1e-11, 1.5)));
        assert!(s.check_monotone(1e-10).is_err());
        assert!(s.check_monotone(1.0).is_ok());
    }

    #[test]
    fn short_energy_run_decays() {
        let s = run_energy_study(6, 1.0, 5, PhysParams::default(), StepOptions::default()).unwrap();
        assert_eq!(s.rows.len(), 6);
        s.check_monotone(1e-10).unwrap();
        assert!(s.rows[2..].iter().all(|r| r.div_residual.unwrap() < 1e-9 && r.equiv_residual.unwrap() < 1e-9));
    }
}
