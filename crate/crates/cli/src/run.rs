//! `run`: one engine, one record, artifacts on disk.

use std::path::Path;

use arrival_core::accounting::{arrival_distribution, detector_distribution};
use arrival_core::Constants;

use crate::config::Config;
use crate::emit::{self, Manifest, WitnessOut};
use crate::{flag_list, legs, Failure, JobArgs};

pub fn cmd_run(cfg: &Config, args: &JobArgs) -> Result<(), Failure> {
    let cs = Constants::new(cfg.hbar, cfg.mass);
    let leg = legs::run_leg(cfg, cfg.engine.kind, &cs)?;
    let hash = cfg.hash();

    std::fs::create_dir_all(&args.out).map_err(|e| Failure::Io(format!("{}: {e}", args.out.display())))?;
    let mut manifest = Manifest::new("run", hash.clone(), cfg.resolved_map());

    write_named(&args.out, "record.csv", &emit::record_csv(&leg.record, &hash), &mut manifest)?;

    let has_arrival = leg.record.is_arrival_record();
    if has_arrival {
        let d = arrival_distribution(&leg.record, cfg.bin_width)?;
        write_named(&args.out, "arrival.csv", &emit::arrival_csv(&d, &hash), &mut manifest)?;
        if cfg.grid.dim == 2 {
            let dd = detector_distribution(&leg.record, cfg.surface_bins, cfg.bin_width)?;
            write_named(&args.out, "screen.csv", &emit::screen_csv(&dd, &hash), &mut manifest)?;
        }
    }
    write_named(
        &args.out,
        "plot.gnuplot",
        &emit::run_plot(has_arrival, has_arrival && cfg.grid.dim == 2, &hash),
        &mut manifest,
    )?;

    manifest.run = Some(emit::LegReport::from_record(&leg.record));
    manifest.witness = leg.witness.as_ref().map(|w| WitnessOut {
        x: w.witness.x,
        t: w.witness.t,
        flux: w.witness.flux,
        verified: w.verified,
    });
    emit::atomic_write(&args.out.join("manifest.json"), &manifest.to_json())?;

    if !args.quiet {
        println!(
            "run {} | horizon {} | steps {} | surface {}",
            leg.record.kind.as_str(),
            leg.record.horizon(),
            leg.record.steps_taken,
            leg.record.final_snapshot().surface_prob
        );
        for f in &manifest.outputs {
            println!("  wrote {}", args.out.join(f).display());
        }
        println!("  wrote {}", args.out.join("manifest.json").display());
    }

    if args.strict && leg.record.flags.any() {
        return Err(Failure::Validity(flag_list(&leg.record.flags)));
    }
    Ok(())
}

pub fn write_named(
    dir: &Path,
    name: &str,
    data: &str,
    manifest: &mut Manifest,
) -> Result<(), Failure> {
    emit::atomic_write(&dir.join(name), data)?;
    manifest.outputs.push(name.to_string());
    Ok(())
}
