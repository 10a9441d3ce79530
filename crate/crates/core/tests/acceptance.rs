//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! `ACCEPTANCE_ONLY=3,5` restricts the run to the listed criteria;
//! criterion 4 then only sees the runs that were executed.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use mhd_core::assembly::{AssembledForms, PhysParams};
use mhd_core::harness::{
    magnetic_jacobian, run_energy_study, run_spatial_study, run_temporal_study, velocity_jacobian, ConvergenceTable,
    EnergySeries, ManufacturedSolution,
};
use mhd_core::linsolve::{norm2, LuFactor};
use mhd_core::mesh::Mesh;
use mhd_core::scheme::{cn_identity_check, StepOptions, Startup, Stepper, ZeroFields};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

const ORDER_TIME: (f64, f64) = (1.7, 2.3);
const ORDER_SPACE: (f64, f64) = (2.6, 3.3);
const ENERGY_TOL: f64 = 1e-10;
const DIV_TOL: f64 = 1e-9;
const EQUIV_TOL: f64 = 1e-9;
const SKEW_TOL: f64 = 1e-12;
const TRANSPOSE_TOL: f64 = 1e-12;
const CN_TOL: f64 = 1e-12;
const ADJOINT_TOL: f64 = 1e-11;
const SOURCE_TOL: f64 = 1e-6;
const DIVERGENCE_FREE_TOL: f64 = 1e-13;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn orders_within(table: &ConvergenceTable, (lo, hi): (f64, f64)) -> Outcome {
    let orders: Vec<(f64, f64)> = table.orders().collect();
    let pass = !orders.is_empty() && orders.iter().all(|&(a, b)| (lo..=hi).contains(&a) && (lo..=hi).contains(&b));
    let mut detail = String::new();
    for r in &table.rows {
        detail += &format!(
            "{}: u {:.3e}{} H {:.3e}{}; ",
            r.resolution,
            r.err_u,
            r.order_u.map(|o| format!(" ({o:.2})")).unwrap_or_default(),
            r.err_h,
            r.order_h.map(|o| format!(" ({o:.2})")).unwrap_or_default()
        );
    }
    outcome(pass, format!("{detail}band [{lo}, {hi}]"))
}

#[derive(Default)]
struct Residuals {
    div: f64,
    equiv: f64,
    runs: Vec<&'static str>,
}

impl Residuals {
    fn table(&mut self, name: &'static str, t: &ConvergenceTable) {
        self.div = self.div.max(t.max_div_residual);
        self.equiv = self.equiv.max(t.max_equiv_residual);
        self.runs.push(name);
    }

    fn series(&mut self, name: &'static str, s: &EnergySeries) {
        for r in &s.rows {
            self.div = self.div.max(r.div_residual.unwrap_or(0.0));
            self.equiv = self.equiv.max(r.equiv_residual.unwrap_or(0.0));
        }
        self.runs.push(name);
    }
}

fn criterion_1(res: &mut Residuals) -> Outcome {
    match run_temporal_study(64, 1.0, &[10, 20, 40, 80], PhysParams::default(), StepOptions::default()) {
        Ok(t) => {
            res.table("temporal", &t);
            orders_within(&t, ORDER_TIME)
        }
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn criterion_2(res: &mut Residuals) -> Outcome {
    match run_spatial_study(1.0 / 500.0, 1.0, &[8, 16, 32], PhysParams::default(), StepOptions::default()) {
        Ok(t) => {
            res.table("spatial", &t);
            orders_within(&t, ORDER_SPACE)
        }
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn criterion_3(res: &mut Residuals) -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for (tau, steps, name) in [(10.0, 100, "energy tau=10"), (1.0, 20, "energy tau=1"), (0.1, 20, "energy tau=0.1")] {
        match run_energy_study(32, tau, steps, PhysParams::default(), StepOptions::default()) {
            Ok(s) => {
                res.series(name, &s);
                let first = s.rows[0].energy;
                let last = s.rows.last().unwrap().energy;
                match s.first_increase(ENERGY_TOL) {
                    None => detail += &format!("tau={tau}: {steps} steps, E {first:.4e} -> {last:.4e}; "),
                    Some((step, a, b)) => {
                        pass = false;
                        detail += &format!("tau={tau}: increase at step {step} ({a:.6e} -> {b:.6e}); ");
                    }
                }
            }
            Err(e) => {
                pass = false;
                detail += &format!("tau={tau}: run failed: {e}; ");
            }
        }
    }
    outcome(pass, detail)
}

fn criterion_4(res: &Residuals) -> Outcome {
    if res.runs.is_empty() {
        return outcome(false, "no runs executed".into());
    }
    outcome(
        res.div <= DIV_TOL && res.equiv <= EQUIV_TOL,
        format!(
            "max |Bu| {:.2e}, max equivalence residual {:.2e} over {}",
            res.div,
            res.equiv,
            res.runs.join(", ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let stepper = Stepper::new(Arc::new(Mesh::uniform(4).unwrap()), PhysParams::default(), 0.1, StepOptions::default())
        .unwrap();
    let forms: &AssembledForms = stepper.forms();

    // (i) skewness of the convection form
    let mut skew = 0.0f64;
    for _ in 0..100 {
        let a = random_full(&forms.velocity, &mut rng);
        let v = random_full(&forms.velocity, &mut rng);
        let n = forms.convection(&a);
        let q = n.bilinear(v.values(), v.values()).abs();
        skew = skew.max(q / (norm2(a.values()) * norm2(v.values()).powi(2)));
    }

    // (ii) coupling blocks: momentum block = −(induction block)ᵀ
    let mut transpose = 0.0f64;
    for _ in 0..20 {
        let b = random_free(&forms.magnetic, &mut rng);
        let (mag, mom) = stepper.coupling_blocks(&b);
        let sum = mom.lin_comb(1.0, &mag.transpose(), 1.0);
        transpose = transpose.max(sum.max_abs() / mag.max_abs());
    }

    // (iii) three-level identity
    let mut cn = 0.0f64;
    for _ in 0..100 {
        let v = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let (a, b, c) = (v(&mut rng, 100), v(&mut rng, 100), v(&mut rng, 100));
        cn = cn.max(cn_identity_check(&a, &b, &c, None));
        let n = stepper.mass_h().nrows();
        let (a, b, c) = (v(&mut rng, n), v(&mut rng, n), v(&mut rng, n));
        cn = cn.max(cn_identity_check(&a, &b, &c, Some(stepper.mass_h())));
    }

    // (iv) (v, ∇_h q) + (∇·v, q) = 0
    let mut adjoint = 0.0f64;
    for _ in 0..20 {
        let v = random_free(&forms.velocity, &mut rng);
        let q = random_pressure(&stepper, &mut rng);
        let g = stepper.discrete_gradient(&q).unwrap();
        let r = forms.mass_u.bilinear(v.values(), g.values()) + forms.div.bilinear(q.values(), v.values());
        adjoint = adjoint.max(r.abs());
    }

    outcome(
        skew <= SKEW_TOL && transpose <= TRANSPOSE_TOL && cn <= CN_TOL && adjoint <= ADJOINT_TOL,
        format!("skew {skew:.2e}, transpose {transpose:.2e}, three-level identity {cn:.2e}, adjointness {adjoint:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for m in [4, 8] {
        let stepper =
            Stepper::new(Arc::new(Mesh::uniform(m).unwrap()), PhysParams::default(), 0.1, StepOptions::default())
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + m as u64);
        for k in 0..10 {
            let a = stepper.coupled_matrix(&random_state(&stepper, &mut rng));
            let rhs: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            match LuFactor::new(&a).and_then(|f| f.solve_checked(&a, &rhs, 1e-11)) {
                Ok((_, r)) => worst = worst.max(r.residual),
                Err(e) => failures.push(format!("M={m} state {k}: {e}")),
            }
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("20 factorizations, worst residual {worst:.2e}")
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mms = ManufacturedSolution::default();
    let (mut g_err, mut f_err, mut div) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let t = rng.gen_range(0.1..1.0);
        let x = rng.gen_range(0.0..1.0);
        let y = rng.gen_range(0.0..1.0);
        g_err = g_err.max(rel_err(fd_magnetic_source(&mms, 1.0, 1.0, t, x, y), mms.g(t, x, y)));
        f_err = f_err.max(rel_err(fd_momentum_source(&mms, 1.0, 1.0, t, x, y), mms.f(t, x, y)));
        let t4 = t.powi(4);
        let (ju, jk) = (velocity_jacobian(x, y), magnetic_jacobian(x, y));
        div = div.max((t4 * (ju[0][0] + ju[1][1])).abs()).max((t4 * (jk[0][0] + jk[1][1])).abs());
    }
    outcome(
        g_err <= SOURCE_TOL && f_err <= SOURCE_TOL && div <= DIVERGENCE_FREE_TOL,
        format!("g rel {g_err:.2e}, f rel {f_err:.2e}, max divergence {div:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    let stepper =
        Stepper::new(Arc::new(Mesh::uniform(8).unwrap()), PhysParams::default(), 1.0, StepOptions::default()).unwrap();
    let run = || -> mhd_core::Result<bool> {
        let (mut state, _) = stepper.startup(&ZeroFields, &ExplicitZero, Startup::Bootstrap)?;
        let mut zero = state.is_zero();
        for _ in 1..10 {
            let (next, r) = stepper.step(&state, &ExplicitZero)?;
            zero &= next.is_zero() && r.energy == 0.0;
            state = next;
        }
        Ok(zero && state.n == 10)
    };
    match run() {
        Ok(z) => outcome(z, format!("10 steps, all fields identically zero: {z}")),
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let wanted = |n: u32| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut res = Residuals::default();
    let mut all = true;
    let mut report = |n: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        if !wanted(n) {
            return;
        }
        let start = Instant::now();
        let o = f();
        all &= o.pass;
        println!(
            "criterion {n} {}: {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    };
    report(1, "temporal convergence", &mut || criterion_1(&mut res));
    report(2, "spatial convergence", &mut || criterion_2(&mut res));
    report(3, "unconditional energy decay", &mut || criterion_3(&mut res));
    let snapshot = std::mem::take(&mut res);
    report(4, "incompressibility and projection equivalence", &mut || criterion_4(&snapshot));
    report(5, "algebraic identities", &mut criterion_5);
    report(6, "solvability of the coupled step", &mut criterion_6);
    report(7, "manufactured-solution oracle", &mut criterion_7);
    report(8, "zero preservation", &mut criterion_8);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
