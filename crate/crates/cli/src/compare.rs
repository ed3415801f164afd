//! `compare`: several engines on the same scenario, cumulative curves
//! aligned on shared probe times, sup gaps and monotonicity verdicts.
//!
//! Curve meaning per engine: the one-way detectors report accumulated
//! surface probability, the robin face reports interior loss, and the
//! reference engine reports the signed time-integrated face flux (which
//! is what makes a backflow window visible).

use std::collections::BTreeMap;

use arrival_core::accounting::flux_integral;
use arrival_core::oracle::integrate_adaptive;
use arrival_core::{Constants, EngineKind};
use rayon::prelude::*;

use crate::config::Config;
use crate::emit::{self, BackflowReport, CompareReport, Manifest, WitnessOut};
use crate::legs::{self, Leg};
use crate::run::write_named;
use crate::{flag_list, Failure, JobArgs};

fn curve_value(leg: &Leg, t: f64) -> Result<f64, Failure> {
    let v = match leg.kind {
        EngineKind::IdealPsi | EngineKind::IdealHydro => leg.record.surface_at(t)?,
        EngineKind::Robin => 1.0 - leg.record.interior_at(t)?,
        EngineKind::Reference => flux_integral(&leg.record, t)?,
    };
    Ok(v)
}

pub fn cmd_compare(cfg: &Config, args: &JobArgs) -> Result<(), Failure> {
    let Some(settings) = &cfg.compare else {
        return Err(Failure::Config(
            "compare needs a `compare.engines` list with at least two engines".into(),
        ));
    };
    let cs = Constants::new(cfg.hbar, cfg.mass);

    let outcomes: Vec<Result<Leg, Failure>> = if args.jobs == 1 {
        settings.engines.iter().map(|&k| legs::run_leg(cfg, k, &cs)).collect()
    } else {
        settings.engines.par_iter().map(|&k| legs::run_leg(cfg, k, &cs)).collect()
    };
    let mut all: Vec<Leg> = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        all.push(o?);
    }

    let horizon = all.iter().map(|l| l.record.horizon()).fold(f64::INFINITY, f64::min);
    let slack = 1e-12 * (1.0 + horizon.abs());
    let mut probes: Vec<f64> = all[0]
        .record
        .snapshots
        .iter()
        .map(|s| s.t)
        .filter(|&t| t <= horizon + slack)
        .map(|t| t.min(horizon))
        .collect();
    if probes.last().is_none_or(|&t| (t - horizon).abs() > slack) {
        probes.push(horizon);
    }

    let mut curves: Vec<Vec<f64>> = Vec::with_capacity(all.len());
    for leg in &all {
        let c: Result<Vec<f64>, Failure> = probes.iter().map(|&t| curve_value(leg, t)).collect();
        curves.push(c?);
    }

    let names: Vec<&str> = all.iter().map(|l| l.kind.as_str()).collect();
    let mut sup_gaps = BTreeMap::new();
    for a in 0..all.len() {
        for b in a + 1..all.len() {
            let gap = curves[a]
                .iter()
                .zip(&curves[b])
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            sup_gaps.insert(format!("{} vs {}", names[a], names[b]), gap);
        }
    }
    let mut monotone = BTreeMap::new();
    for (leg, curve) in all.iter().zip(&curves) {
        monotone.insert(
            leg.kind.as_str().to_string(),
            curve.windows(2).all(|w| w[1] >= w[0]),
        );
    }

    let backflow = backflow_report(&all, &cs, horizon)?;

    let hash = cfg.hash();
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::Io(format!("{}: {e}", args.out.display())))?;
    let mut manifest = Manifest::new("compare", hash.clone(), cfg.resolved_map());
    write_named(
        &args.out,
        "compare.csv",
        &emit::compare_csv(&names, &probes, &curves, &hash),
        &mut manifest,
    )?;
    write_named(&args.out, "plot.gnuplot", &emit::compare_plot(&hash), &mut manifest)?;

    manifest.compare = Some(CompareReport {
        engines: names.iter().map(|s| s.to_string()).collect(),
        horizon,
        probe_count: probes.len(),
        sup_gaps: sup_gaps.clone(),
        monotone: monotone.clone(),
        backflow,
    });
    manifest.legs = Some(all.iter().map(|l| emit::LegReport::from_record(&l.record)).collect());
    emit::atomic_write(&args.out.join("manifest.json"), &manifest.to_json())?;

    if !args.quiet {
        println!("compare {} | horizon {}", names.join(" "), horizon);
        for (pair, gap) in &sup_gaps {
            println!("  sup gap {pair}: {gap:.3e}");
        }
        for (name, mono) in &monotone {
            println!("  {name}: {}", if *mono { "monotone" } else { "not monotone" });
        }
        println!("  wrote {}", args.out.join("manifest.json").display());
    }

    if args.strict {
        for leg in &all {
            if leg.record.flags.any() {
                return Err(Failure::Validity(format!(
                    "{}: {}",
                    leg.kind.as_str(),
                    flag_list(&leg.record.flags)
                )));
            }
        }
    }
    Ok(())
}

/// When the initial state carries a certified negative-flux witness,
/// report the whole negative window around it and the gap between the
/// one-way curve and the signed curve after the window closes.
fn backflow_report(
    all: &[Leg],
    cs: &Constants<f64>,
    horizon: f64,
) -> Result<Option<BackflowReport>, Failure> {
    let Some(leg) = all.iter().find(|l| l.witness.is_some()) else {
        return Ok(None);
    };
    let info = leg.witness.as_ref().expect("just matched");
    let flux = |t: f64| info.terms.flux(cs, 0.0, t);

    let h = horizon.max(info.witness.t) / 20_000.0;
    let mut lo = info.witness.t;
    while lo - h > 0.0 && flux(lo - h) < 0.0 {
        lo -= h;
    }
    let mut hi = info.witness.t;
    while flux(hi + h) < 0.0 {
        hi += h;
    }
    let window_mass = -integrate_adaptive(&flux, lo, hi, 1e-14);

    let gated = all
        .iter()
        .find(|l| matches!(l.kind, EngineKind::IdealPsi | EngineKind::IdealHydro));
    let signed = all.iter().find(|l| l.kind == EngineKind::Reference);
    let gap_at = |t: f64| -> Result<Option<f64>, Failure> {
        match (gated, signed) {
            (Some(g), Some(s)) if t <= horizon => {
                Ok(Some(g.record.surface_at(t)? - flux_integral(&s.record, t)?))
            }
            _ => Ok(None),
        }
    };

    Ok(Some(BackflowReport {
        witness: WitnessOut {
            x: info.witness.x,
            t: info.witness.t,
            flux: info.witness.flux,
            verified: info.verified,
        },
        window_t_lo: lo,
        window_t_hi: hi,
        window_mass,
        gated_minus_signed_at_window_end: gap_at(hi)?,
        gated_minus_signed_at_horizon: gap_at(horizon)?,
    }))
}
