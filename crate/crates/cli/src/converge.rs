//! `convergence`: run the configured refinement ladder and report the
//! fitted order. Rungs are independent, so they parallelize under --jobs.

use arrival_core::convergence::{assemble_report, run_rung, Scenario};
use arrival_core::oracle::GaussianParams;
use arrival_core::{Constants, EngineError};
use rayon::prelude::*;

use crate::config::{Config, Initial};
use crate::emit::{self, ConvergenceOut, Manifest};
use crate::run::write_named;
use crate::{Failure, JobArgs};

pub fn cmd_convergence(cfg: &Config, args: &JobArgs) -> Result<(), Failure> {
    let Some(settings) = &cfg.convergence else {
        return Err(Failure::Config(
            "convergence needs a `convergence.rungs` ladder".into(),
        ));
    };
    let Initial::Gaussian { x0, s, k0, t0, .. } = &cfg.initial else {
        return Err(Failure::Config("convergence scenarios take gaussian initial data".into()));
    };
    let cs = Constants::new(cfg.hbar, cfg.mass);
    let p = GaussianParams::new(*x0, *s, *k0, *t0)?;
    let scenario = match settings.scenario.as_str() {
        "reference-density" => Scenario::ReferenceDensity {
            p,
            length: cfg.grid.length,
            horizon: settings.horizon,
        },
        _ => Scenario::IdealArrival {
            p,
            length: cfg.grid.length,
            extension: cfg.grid.extension,
            horizon: settings.horizon,
        },
    };

    let results: Vec<Result<f64, EngineError>> = if args.jobs == 1 {
        settings.rungs.iter().map(|&(n, dt)| run_rung(&scenario, n, dt, &cs)).collect()
    } else {
        settings.rungs.par_iter().map(|&(n, dt)| run_rung(&scenario, n, dt, &cs)).collect()
    };
    let report = assemble_report(&scenario, &settings.rungs, results)?;

    let hash = cfg.hash();
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::Io(format!("{}: {e}", args.out.display())))?;
    let mut manifest = Manifest::new("convergence", hash.clone(), cfg.resolved_map());
    write_named(
        &args.out,
        "convergence.csv",
        &emit::convergence_csv(&report.rungs, &hash),
        &mut manifest,
    )?;
    write_named(&args.out, "plot.gnuplot", &emit::convergence_plot(&hash), &mut manifest)?;
    manifest.convergence = Some(ConvergenceOut {
        scenario: report.scenario.clone(),
        expected_order: report.expected_order,
        fitted_order: report.fitted_order,
        pair_orders: report.pair_orders.clone(),
        monotone_decay: report.monotone_decay,
        any_rejected: report.any_rejected,
        pass: report.pass,
    });
    emit::atomic_write(&args.out.join("manifest.json"), &manifest.to_json())?;

    if !args.quiet {
        println!(
            "convergence {} | fitted order {:.2} (expect >= {}) | {}",
            report.scenario,
            report.fitted_order,
            report.expected_order,
            if report.pass { "pass" } else { "FAIL" }
        );
        for r in &report.rungs {
            match r.error {
                Some(e) => println!("  {:>6} nodes, dt {:<9} error {e:.3e}", r.nodes, r.dt),
                None => println!("  {:>6} nodes, dt {:<9} rejected (under-resolved)", r.nodes, r.dt),
            }
        }
        println!("  wrote {}", args.out.join("manifest.json").display());
    }

    if args.strict && !report.pass {
        return Err(Failure::Validity("convergence study did not meet its expected order".into()));
    }
    Ok(())
}
