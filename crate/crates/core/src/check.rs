//! Built-in invariant checks and the trajectory CSV validator used by
//! `mmsim check`.

use nalgebra::{SymmetricEigen, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coriolis::{coriolis_force, energy_gradients, kinetic_energy, kirchhoff_force};
use crate::dynamics::{Model, RailSpec, SimState};
use crate::hydrostatics::HydrostaticsMode;
use crate::kinematics::{rotation, EulerAngles, Mat3, Pose, Vec3};
use crate::mass::{assemble_m_total, AddedMass, Vec9, VehicleParams};
use crate::scenario::CHANNELS;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, worst: f64, bound: f64) -> CheckResult {
    CheckResult { name, passed: worst < bound, detail: format!("worst {worst:.3e} (bound {bound:.0e})") }
}

fn vec3<R: Rng>(rng: &mut R, lim: f64) -> Vec3 {
    Vec3::from_fn(|_, _| rng.random_range(-lim..lim))
}

/// Random neutrally buoyant vehicle with diagonal added mass.
pub fn random_vehicle<R: Rng>(rng: &mut R) -> VehicleParams {
    let m_s = rng.random_range(10.0..60.0);
    let m_p = m_s * rng.random_range(0.05..0.15);
    let (a, b) = (rng.random_range(0.4..1.5), rng.random_range(0.05..0.3));
    let rho = 1026.0;
    VehicleParams {
        m_s,
        m_p,
        r_s: vec3(rng, 0.05),
        inertia: crate::mass::ellipsoid_inertia(m_s, a, b),
        added_mass: AddedMass::diagonal(
            Vec3::from_fn(|_, _| rng.random_range(0.0..40.0)),
            Vec3::from_fn(|_, _| rng.random_range(0.0..5.0)),
        ),
        rho,
        displaced_volume: (m_s + m_p) / rho,
        gravity: 9.81,
        semi_axes: Some((a, b)),
    }
}

fn random_nu<R: Rng>(rng: &mut R) -> Vec9 {
    Vec9::from_fn(|_, _| rng.random_range(-2.0..2.0))
}

/// Run the invariant suite; each check is cheap enough for interactive use.
pub fn run_builtin(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let e = EulerAngles::from_vector(&vec3(&mut rng, 3.0));
        let r = rotation(&e);
        worst = worst.max((r.transpose() * r - Mat3::identity()).amax());
    }
    out.push(result("rotation orthonormal", worst, 1e-13));

    let (mut kirchhoff, mut nullity, mut symmetry) = (0.0f64, 0.0f64, 0.0f64);
    let mut min_eig = f64::INFINITY;
    for _ in 0..1000 {
        let p = random_vehicle(&mut rng);
        let r_p = vec3(&mut rng, 0.1);
        let nu = random_nu(&mut rng);
        let f = coriolis_force(&p, &r_p, &nu);
        let k = kirchhoff_force(&nu, &energy_gradients(&p, &r_p, &nu));
        kirchhoff = kirchhoff.max((f - k).amax() / k.amax().max(1e-300));
        let m = assemble_m_total(&p, &r_p);
        nullity = nullity.max(nu.dot(&f).abs() / (nu.norm_squared() * m.norm()));
        symmetry = symmetry.max((m - m.transpose()).amax());
        min_eig = min_eig.min(SymmetricEigen::new(m).eigenvalues.min());
    }
    out.push(result("Coriolis matrices match Kirchhoff assembly", kirchhoff, 1e-10));
    out.push(result("Coriolis energy-rate nullity", nullity, 1e-12));
    out.push(result("mass matrix symmetric", symmetry, 1e-13));
    out.push(CheckResult {
        name: "mass matrix positive definite",
        passed: min_eig > 0.0,
        detail: format!("smallest eigenvalue {min_eig:.3e}"),
    });

    let mut grad = 0.0f64;
    for _ in 0..200 {
        let p = random_vehicle(&mut rng);
        let r_p = vec3(&mut rng, 0.1);
        let nu = random_nu(&mut rng);
        let m = assemble_m_total(&p, &r_p);
        let g = energy_gradients(&p, &r_p, &nu).as_vector();
        let h = 1e-6 * (1.0 + nu.norm());
        for i in 0..9 {
            let mut up = nu;
            let mut dn = nu;
            up[i] += h;
            dn[i] -= h;
            let fd = (kinetic_energy(&m, &up) - kinetic_energy(&m, &dn)) / (2.0 * h);
            grad = grad.max((fd - g[i]).abs() / g.amax().max(1e-12));
        }
    }
    out.push(result("energy gradients match finite differences", grad, 1e-6));

    out.push(frozen_energy());
    out.push(rail_invariant());
    out
}

fn frozen_energy() -> CheckResult {
    let model = Model::new(crate::scenario::remus_params(&demo_source()).expect("valid"))
        .expect("valid")
        .with_hydrostatics(HydrostaticsMode::Off)
        .with_frozen_moving_mass(true);
    let r_p = Vec3::new(0.03, 0.0, 0.05);
    let nu = Vector6::new(1.0, 0.1, -0.2, 0.1, -0.15, 0.1);
    let v = nu.fixed_rows::<3>(0).into_owned();
    let w = nu.fixed_rows::<3>(3).into_owned();
    let mut s = SimState { eta: Pose::default(), r_p, nu, v_p: v + w.cross(&r_p) };
    let t0 = kinetic_energy(&assemble_m_total(&model.params, &r_p), &s.nu_prime());
    let mut drift = 0.0f64;
    for k in 0..1000 {
        match model.rk4_step(&s, |_, _| Vec9::zeros(), k as f64 * 0.01, 0.01) {
            Ok(next) => s = next,
            Err(e) => {
                return CheckResult { name: "frozen-mass energy conservation", passed: false, detail: e.to_string() }
            }
        }
        let t = kinetic_energy(&assemble_m_total(&model.params, &r_p), &s.nu_prime());
        drift = drift.max((t - t0).abs() / t0);
    }
    result("frozen-mass energy conservation", drift, 1e-6)
}

fn rail_invariant() -> CheckResult {
    let rail = RailSpec::remus_centreline();
    let model = Model::new(crate::scenario::remus_params(&demo_source()).expect("valid"))
        .expect("valid")
        .with_hydrostatics(HydrostaticsMode::Compensated)
        .with_rail(Some(rail));
    let mut s = SimState::at_rest(rail.point(0.0));
    let mut tau = Vec9::zeros();
    tau[0] = 1.0;
    tau[6] = 0.5;
    let mut ok = true;
    for k in 0..300 {
        if k == 150 {
            tau[6] = -0.5;
        }
        match model.rk4_step(&s, |_, _| tau, k as f64 * 0.01, 0.01) {
            Ok(next) => s = next,
            Err(e) => return CheckResult { name: "rail invariant", passed: false, detail: e.to_string() },
        }
        ok &= s.r_p.y == 0.0 && s.r_p.z == 0.05 && (-0.05..=0.05).contains(&s.r_p.x);
    }
    CheckResult { name: "rail invariant", passed: ok, detail: "300 steps across a force reversal".into() }
}

fn demo_source() -> crate::scenario::RemusSource {
    crate::scenario::RemusSource {
        total_mass: 31.0,
        a: 0.8,
        b: 0.095,
        added_linear: Vec3::new(0.84, 29.4, 29.4),
        added_angular: Vec3::new(0.034, 3.43, 3.43),
        rho: 1026.0,
        gravity: 9.81,
        displaced_volume: None,
    }
}

/// Rail and input-schedule checks on a trajectory CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvLimits {
    pub stroke: (f64, f64),
    pub surge_force: f64,
    pub mass_force: f64,
}

impl Default for CsvLimits {
    fn default() -> Self {
        Self { stroke: (-0.05, 0.05), surge_force: 1.0, mass_force: 0.5 }
    }
}

/// Check every row of a parsed trajectory; returns one result per rule.
pub fn validate_rows(rows: &[[f64; 20]], limits: &CsvLimits) -> Vec<CheckResult> {
    let col = |name: &str| CHANNELS.iter().position(|c| *c == name).expect("known column");
    let (t, x_p, tau_x, tau_xp) = (col("t"), col("x_p"), col("tau_X"), col("tau_Xp"));
    let first_bad = |pred: &dyn Fn(usize, &[f64; 20]) -> bool| rows.iter().enumerate().position(|(i, r)| !pred(i, r));
    let report = |name: &'static str, bad: Option<usize>| CheckResult {
        name,
        passed: bad.is_none(),
        detail: match bad {
            None => format!("{} rows", rows.len()),
            Some(i) => format!("first violation at data row {}", i + 1),
        },
    };
    let (lo, hi) = limits.stroke;
    vec![
        report("time strictly increasing", first_bad(&|i, r| i == 0 || r[t] > rows[i - 1][t])),
        report("x_p within rail stroke", first_bad(&|_, r| (lo..=hi).contains(&r[x_p]))),
        report("surge force constant", first_bad(&|_, r| r[tau_x] == limits.surge_force)),
        report(
            "mass force is +-magnitude",
            first_bad(&|_, r| r[tau_xp].abs() == limits.mass_force),
        ),
        report("all values finite", first_bad(&|_, r| r.iter().all(|x| x.is_finite()))),
    ]
}
