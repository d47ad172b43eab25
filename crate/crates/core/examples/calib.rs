// Scratch calibration harness (deleted before shipping).
use std::ops::ControlFlow;
use std::time::Instant;

use annealab_core::diagnostics::*;
use annealab_core::dynamics::*;
use annealab_core::landscapes::*;
use annealab_core::schedules::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(|s| s.as_str()).unwrap_or("speed");
    match what {
        "speed" => speed(),
        "a4" => a4(),
        "a5" => a5(),
        "a6" => a6(),
        "a7" => a7(),
        _ => eprintln!("unknown: {what}"),
    }
}

fn speed() {
    let spec = LandscapeSpec::symmetric_double_well();
    let sys = CircleSystem::new(&spec);
    let sched = Schedule::constant(4.0).unwrap();
    let icfg = IntegratorConfig::new(EtaLaw::constant(1e-2).unwrap(), 50_000_000, 1);
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
    let t0 = Instant::now();
    let (th, n) = drive_chain(&sys, 1.5707963, &sched, &icfg, &mut rng, |_, _| {
        ControlFlow::Continue(())
    })
    .unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "constant-beta: {n} steps in {dt:.2}s = {:.1} ns/step (theta={th:.3})",
        dt / n as f64 * 1e9
    );
    let sched_log = Schedule::logarithmic(0.3, 2.0).unwrap();
    let icfg2 = IntegratorConfig::new(EtaLaw::constant(5e-3).unwrap(), 20_000_000, 1);
    let mut rng2 = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
    let t0 = Instant::now();
    let (_, n) = drive_chain(&sys, 1.5707963, &sched_log, &icfg2, &mut rng2, |_, _| {
        ControlFlow::Continue(())
    })
    .unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!("log-beta: {n} steps in {dt:.2}s = {:.1} ns/step", dt / n as f64 * 1e9);
}

fn a4() {
    let spec = LandscapeSpec::symmetric_double_well();
    for seed in [42u64, 1, 2, 3, 4, 5, 6, 7] {
        let icfg = IntegratorConfig::new(EtaLaw::constant(1e-3).unwrap(), 1_000_000, seed);
        let t0 = Instant::now();
        let rep = equilibrium_occupation(&spec, 2.0, &icfg, 128, 0.1, 64).unwrap();
        println!("seed {seed}: tv = {:.4}  ({:.1}s)", rep.tv, t0.elapsed().as_secs_f64());
    }
    // single chain for comparison
    let icfg = IntegratorConfig::new(EtaLaw::constant(1e-3).unwrap(), 1_000_000, 42);
    let rep = equilibrium_occupation(&spec, 2.0, &icfg, 1, 0.1, 64).unwrap();
    println!("single chain: tv = {:.4}", rep.tv);
}

fn a5() {
    let spec = LandscapeSpec::symmetric_double_well();
    let icfg = IntegratorConfig::new(EtaLaw::constant(1e-2).unwrap(), 0, 42);
    let mut pts = Vec::new();
    let t_all = Instant::now();
    for beta in [2.0_f64, 3.0, 4.0, 5.0, 6.0] {
        let t0 = Instant::now();
        let horizon = (50.0 * (2.0 * beta).exp() / 0.01) as u64;
        let s = estimate_exit_times(&spec, beta, 1, 200, horizon, &icfg).unwrap();
        println!(
            "beta {beta}: mean_steps {:.0} mean_time {:.2} censored {} ({:.1}s)",
            s.mean_steps,
            s.mean_time,
            s.censored,
            t0.elapsed().as_secs_f64()
        );
        pts.push((beta, s.mean_time));
    }
    let fit = arrhenius_fit(&pts).unwrap();
    println!(
        "slope {:.4} (want 2 +- 0.3), intercept {:.4} (want within ln3 of {:.4}), total {:.1}s",
        fit.slope,
        fit.intercept,
        -(2.0 / std::f64::consts::PI).ln(),
        t_all.elapsed().as_secs_f64()
    );
}

fn ensemble_fracs(c: f64, steps: u64, seed: u64, m: u32, checkpoints: &[u64]) -> Vec<(u64, f64)> {
    let spec = LandscapeSpec::tilted_double_well(0.2).unwrap();
    let sys = CircleSystem::new(&spec);
    let sched = Schedule::logarithmic(c, 2.0).unwrap();
    let icfg = IntegratorConfig::new(EtaLaw::constant(5e-3).unwrap(), steps, seed);
    let shallow = spec.minimum_angle(1);
    let global = spec.global_basin() as i64;
    let ens = run_ensemble(
        &sys,
        m,
        |_, _| shallow,
        &sched,
        &icfg,
        |th| match spec.basin_of(*th) {
            BasinLabel::Basin(b) => b as i64,
            BasinLabel::Saddle => -1,
        },
        checkpoints,
    );
    let mut marks: Vec<u64> = checkpoints.iter().copied().filter(|&c| c <= steps).collect();
    marks.push(steps);
    marks.sort_unstable();
    marks.dedup();
    marks
        .iter()
        .enumerate()
        .map(|(idx, &mk)| {
            let succ = ens
                .outcomes
                .iter()
                .filter(|o| o.checkpoint_labels.get(idx) == Some(&global))
                .count();
            (mk, succ as f64 / m as f64)
        })
        .collect()
}

fn a6() {
    let spec = LandscapeSpec::tilted_double_well(0.2).unwrap();
    let c_star = spec.barrier_heights().c_star.unwrap();
    for seed in [42u64, 7, 99] {
        let t0 = Instant::now();
        let sub = ensemble_fracs(0.5 * c_star, 1_000_000, seed, 200, &[]);
        let sup = ensemble_fracs(3.0 * c_star, 1_000_000, seed, 200, &[]);
        println!(
            "seed {seed}: sub {:.3} sup {:.3} diff {:.3} ({:.1}s)",
            sub[0].1,
            sup[0].1,
            sub[0].1 - sup[0].1,
            t0.elapsed().as_secs_f64()
        );
    }
}

fn a7() {
    let spec = LandscapeSpec::tilted_double_well(0.2).unwrap();
    let c_star = spec.barrier_heights().c_star.unwrap();
    for seed in [42u64, 7] {
        let t0 = Instant::now();
        let fr = ensemble_fracs(0.5 * c_star, 1_000_000, seed, 400, &[10_000, 100_000]);
        let line: Vec<String> = fr
            .iter()
            .map(|(t, f)| format!("t={t}: fail={:.3}", 1.0 - f))
            .collect();
        println!("seed {seed}: {} ({:.1}s)", line.join("  "), t0.elapsed().as_secs_f64());
    }
}
