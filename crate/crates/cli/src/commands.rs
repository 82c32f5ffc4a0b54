use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hawkes_mm::hjb::{solve as solve_hjb, ConstantPolicy, FeedbackTable, Policy};
use hawkes_mm::kernels::{approximate_power_law, report, ApproxReport, KernelSpec};
use hawkes_mm::marketsim::{compare_strategies, episode_seed, mean_stderr, run_convergence, run_episode, PolicyController};
use hawkes_mm::scalar::fmt17;
use hawkes_mm::{Error, Result};
use rayon::prelude::*;

use crate::config::{ControlSection, ExperimentConfig};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

pub fn write_resolved(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let mut w = create(out, "resolved_config.json")?;
    serde_json::to_writer_pretty(&mut w, cfg)?;
    writeln!(w)?;
    finish(w)
}

pub fn kernel_approx(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let s = cfg.kernel_section()?;
    let mut reports: Vec<ApproxReport<f64>> = Vec::new();
    match &s.target {
        KernelSpec::ExpSum(k) => reports.push(report(k, k.clone(), s.horizon, 0)?),
        KernelSpec::PowerLaw(target) => {
            if s.ns.is_empty() {
                return Err(Error::Config("kernel.ns is empty".into()));
            }
            for &n in &s.ns {
                let approx = approximate_power_law(target, n, s.inversion)?;
                let mut r = report(target, approx.kernel, s.horizon, approx.clamped)?;
                r.n = n;
                reports.push(r);
            }
        }
    }
    let mut csv = create(out, "approx_report.csv")?;
    writeln!(csv, "{}", ApproxReport::<f64>::CSV_HEADER)?;
    for r in &reports {
        writeln!(csv, "{}", r.csv_row())?;
        let mut w = create(out, &format!("kernel_n{}.json", r.n))?;
        serde_json::to_writer_pretty(&mut w, &KernelSpec::ExpSum(r.kernel.clone()))?;
        writeln!(w)?;
        finish(w)?;
        println!("n = {}: sup_err = {:.3e}, l1_err = {:.3e}, clamped = {}", r.n, r.sup_err, r.l1_err, r.clamped);
    }
    finish(csv)
}

pub fn solve(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let grid = cfg.grid_spec()?;
    let (values, feedback) = solve_hjb(&grid)?;
    let mut w = create(out, "value.csv")?;
    values.write_csv(&mut w)?;
    finish(w)?;
    let mut w = create(out, "feedback.csv")?;
    feedback.write_csv(&mut w)?;
    finish(w)?;
    let mut w = create(out, "value_grid.bin")?;
    values.write_snapshot(&mut w)?;
    finish(w)?;
    let zero = vec![0.0; grid.dim()];
    println!(
        "{} steps of {:.4e}; U(0, i=0, c=0) = {}",
        values.steps,
        values.dt,
        fmt17(values.value_at_start(0, &zero, &zero)?)
    );
    Ok(())
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let s = cfg.simulation_section()?;
    let spec = cfg.intensity_spec()?;
    let initial = cfg.initial_state(spec.kernel.len())?;
    if s.n_episodes == 0 {
        return Err(Error::Config("simulation.n_episodes must be positive".into()));
    }
    let constant;
    let table: FeedbackTable<f64>;
    let policy: &dyn Policy<f64> = match s.control {
        ControlSection::Constant { ask, bid } => {
            constant = ConstantPolicy { ask, bid };
            &constant
        }
        ControlSection::Optimal => {
            let grid = cfg.grid_spec()?;
            if grid.kernel != spec.kernel {
                return Err(Error::Config("the grid and the market must share the kernel".into()));
            }
            table = solve_hjb(&grid)?.1;
            &table
        }
    };
    let episodes = (0..s.n_episodes as u64)
        .into_par_iter()
        .map(|k| {
            let mut ctl = PolicyController { policy };
            run_episode(&spec, s.mu_penalty, &mut ctl, s.horizon, &initial, episode_seed(cfg.seed, k))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut w = create(out, "events.csv")?;
    episodes[0].log.write_csv(&mut w)?;
    finish(w)?;
    let mut w = create(out, "episodes.csv")?;
    writeln!(w, "episode,seed,events,spread_revenue,penalty,total")?;
    for (k, e) in episodes.iter().enumerate() {
        writeln!(
            w,
            "{k},{},{},{},{},{}",
            e.seed,
            e.log.len(),
            fmt17(e.spread_revenue),
            fmt17(e.penalty),
            fmt17(e.total)
        )?;
    }
    finish(w)?;
    let totals: Vec<f64> = episodes.iter().map(|e| e.total).collect();
    if totals.len() >= 2 {
        let (mean, se) = mean_stderr(&totals);
        println!("value over {} episodes: {mean:.6} ± {se:.6}", totals.len());
    } else {
        println!("episode total: {:.6}", totals[0]);
    }
    Ok(())
}

pub fn compare(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let c = cfg.comparison_section()?;
    let rep = compare_strategies(c)?;
    let mut w = create(out, "fig1_values.csv")?;
    rep.write_fig1(&mut w)?;
    finish(w)?;
    let last = rep.names.len() - 1;
    for k in 0..last {
        let mut w = create(out, &format!("diff_{}.csv", rep.names[k]))?;
        rep.write_diff(k, &mut w)?;
        finish(w)?;
    }
    if last >= 2 {
        // truth against the next-best and against the first belief
        for (name, k) in [("fig2_diff.csv", last - 1), ("fig3_diff.csv", 0)] {
            let mut w = create(out, name)?;
            rep.write_diff(k, &mut w)?;
            finish(w)?;
        }
    }
    let mut w = create(out, "mc_probes.csv")?;
    rep.write_probes(&mut w)?;
    finish(w)?;
    let p = &c.probe;
    let v: Vec<f64> = rep.fig1[0].1.clone();
    for (name, x) in rep.names.iter().zip(&v) {
        println!("{name}: V(0, i={}) = {x:.6}", p.inventory);
    }
    Ok(())
}

pub fn branching(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let c = cfg.particle_section()?;
    let rep = run_convergence(c)?;
    let mut w = create(out, "fig4_convergence.csv")?;
    rep.write_fig4(&mut w)?;
    finish(w)?;
    let mut w = create(out, "branching_estimates.csv")?;
    rep.write_estimates(&mut w)?;
    finish(w)?;
    for (k, s) in rep.slopes().iter().enumerate() {
        println!("x{k}: regression slope {s:.6e} per unit n");
    }
    Ok(())
}
