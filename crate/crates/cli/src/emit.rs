//! Artifact files. Everything goes through an atomic temp-file rename and
//! every file opens with the config hash, so a directory of outputs can
//! always be traced back to the exact configuration that made it.
//!
//! Float columns use the shortest round-trip decimal form, which keeps
//! repeated runs byte-identical.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use arrival_core::accounting::{ArrivalDistribution, DetectorDistribution};
use arrival_core::record::RunFlags;
use arrival_core::DetectorRecord;
use serde::Serialize;

use crate::Failure;

pub fn atomic_write(path: &Path, data: &str) -> Result<(), Failure> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(data.as_bytes())
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn header(hash: &str) -> String {
    format!("# config {hash}\n")
}

/// One row per recorded snapshot; the flux column is the mean transfer
/// rate since the previous row, so it integrates back to the surface
/// column exactly.
pub fn record_csv(record: &DetectorRecord<f64>, hash: &str) -> String {
    let mut out = header(hash);
    out.push_str("t,flux,interior_prob,surface_prob\n");
    let mut prev_t = 0.0f64;
    for (i, snap) in record.snapshots.iter().enumerate() {
        let flux = if i == 0 || snap.t <= prev_t {
            0.0
        } else {
            let moved: f64 = snap.flux_trace.iter().map(|s| s.flux * record.dt).sum();
            moved / (snap.t - prev_t)
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            snap.t, flux, snap.interior_prob, snap.surface_prob
        ));
        prev_t = snap.t;
    }
    out
}

pub fn arrival_csv(d: &ArrivalDistribution<f64>, hash: &str) -> String {
    let mut out = header(hash);
    out.push_str("bin_left,bin_right,mass\n");
    for (i, m) in d.mass.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", d.time_edges[i], d.time_edges[i + 1], m));
    }
    out.push_str(&format!("never,,{}\n", d.never));
    out
}

pub fn screen_csv(d: &DetectorDistribution<f64>, hash: &str) -> String {
    let mut out = header(hash);
    out.push_str("y_left,y_right,t_left,t_right,mass\n");
    for (b, row) in d.mass.iter().enumerate() {
        for (k, m) in row.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                d.surface_edges[b],
                d.surface_edges[b + 1],
                d.time_edges[k],
                d.time_edges[k + 1],
                m
            ));
        }
    }
    out.push_str(&format!("never,,,,{}\n", d.never));
    out
}

pub fn compare_csv(names: &[&str], probes: &[f64], curves: &[Vec<f64>], hash: &str) -> String {
    let mut out = header(hash);
    out.push_str("t,");
    out.push_str(&names.join(","));
    out.push('\n');
    for (i, t) in probes.iter().enumerate() {
        out.push_str(&t.to_string());
        for c in curves {
            out.push(',');
            out.push_str(&c[i].to_string());
        }
        out.push('\n');
    }
    out
}

pub fn convergence_csv(
    rungs: &[arrival_core::convergence::RungResult<f64>],
    hash: &str,
) -> String {
    let mut out = header(hash);
    out.push_str("nodes,dt,dx,error,rejected\n");
    for r in rungs {
        let err = r.error.map(|e| e.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.nodes, r.dt, r.dx, err, r.resolution_rejected
        ));
    }
    out
}

#[derive(Serialize)]
pub struct FlagsOut {
    pub far_wall_contaminated: bool,
    pub budget_exceeded: bool,
    pub truncated: bool,
    pub resolution_warning: bool,
}

impl FlagsOut {
    pub fn from_flags(f: &RunFlags) -> Self {
        FlagsOut {
            far_wall_contaminated: f.far_wall_contaminated,
            budget_exceeded: f.budget_exceeded,
            truncated: f.truncated,
            resolution_warning: f.resolution_warning,
        }
    }
}

#[derive(Serialize)]
pub struct CountersOut {
    pub steps_taken: usize,
    pub shut_steps: usize,
    pub clamp_events: usize,
    pub mask_events: usize,
    pub monotonicity_violations: usize,
}

#[derive(Serialize)]
pub struct LegReport {
    pub engine: String,
    pub horizon: f64,
    pub budget_worst: f64,
    pub far_wall_peak: f64,
    pub extension_end_peak: f64,
    pub counters: CountersOut,
    pub flags: FlagsOut,
}

impl LegReport {
    pub fn from_record(r: &DetectorRecord<f64>) -> Self {
        LegReport {
            engine: r.kind.as_str().to_string(),
            horizon: r.horizon(),
            budget_worst: r.budget_worst,
            far_wall_peak: r.far_wall_peak,
            extension_end_peak: r.extension_end_peak,
            counters: CountersOut {
                steps_taken: r.steps_taken,
                shut_steps: r.shut_steps,
                clamp_events: r.clamp_events,
                mask_events: r.mask_events,
                monotonicity_violations: r.monotonicity_violations,
            },
            flags: FlagsOut::from_flags(&r.flags),
        }
    }
}

#[derive(Serialize)]
pub struct WitnessOut {
    pub x: f64,
    pub t: f64,
    pub flux: f64,
    pub verified: bool,
}

#[derive(Serialize)]
pub struct BackflowReport {
    pub witness: WitnessOut,
    pub window_t_lo: f64,
    pub window_t_hi: f64,
    /// Probability that flows back in over the window, from the closed
    /// form of the face flux.
    pub window_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gated_minus_signed_at_window_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gated_minus_signed_at_horizon: Option<f64>,
}

#[derive(Serialize)]
pub struct CompareReport {
    pub engines: Vec<String>,
    pub horizon: f64,
    pub probe_count: usize,
    pub sup_gaps: BTreeMap<String, f64>,
    pub monotone: BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backflow: Option<BackflowReport>,
}

#[derive(Serialize)]
pub struct ConvergenceOut {
    pub scenario: String,
    pub expected_order: f64,
    pub fitted_order: f64,
    pub pair_orders: Vec<f64>,
    pub monotone_decay: bool,
    pub any_rejected: bool,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub outputs: Vec<String>,
    pub config: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<LegReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub legs: Option<Vec<LegReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceOut>,
}

impl Manifest {
    pub fn new(command: &'static str, hash: String, config: BTreeMap<String, String>) -> Self {
        Manifest {
            config_hash: hash,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            outputs: Vec::new(),
            config,
            run: None,
            witness: None,
            compare: None,
            legs: None,
            convergence: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn run_plot(has_arrival: bool, has_screen: bool, hash: &str) -> String {
    let mut s = format!(
        "# config {hash}\n\
         # renders the run artifacts in this directory; needs gnuplot\n\
         set datafile separator ','\n\
         set term pngcairo size 900,600\n\
         set key left center\n\
         set xlabel 't'\n\
         set output 'record.png'\n\
         plot 'record.csv' using 1:3 with lines title 'interior', \\\n\
         \x20    'record.csv' using 1:4 with lines title 'surface', \\\n\
         \x20    'record.csv' using 1:2 with lines title 'flux'\n"
    );
    if has_arrival {
        s.push_str(
            "set output 'arrival.png'\n\
             set style fill solid 0.4\n\
             plot \"< grep -v '^never' arrival.csv\" using (($1+$2)/2):3:($2-$1) with boxes title 'arrival mass'\n",
        );
    }
    if has_screen {
        s.push_str(
            "set output 'screen.png'\n\
             set xlabel 'y'\n\
             set ylabel 't'\n\
             plot \"< grep -v '^never' screen.csv\" using (($1+$2)/2):(($3+$4)/2):5 with points pt 5 ps 2 palette title 'landing mass'\n",
        );
    }
    s
}

pub fn compare_plot(hash: &str) -> String {
    format!(
        "# config {hash}\n\
         # cumulative arrival-style curves, one per engine; needs gnuplot\n\
         set datafile separator ','\n\
         set term pngcairo size 900,600\n\
         set key left top\n\
         set xlabel 't'\n\
         set ylabel 'cumulative probability'\n\
         set output 'compare.png'\n\
         plot for [i=2:*] 'compare.csv' using 1:i with lines title columnheader(i)\n"
    )
}

pub fn convergence_plot(hash: &str) -> String {
    format!(
        "# config {hash}\n\
         # error against grid spacing on log axes; needs gnuplot\n\
         set datafile separator ','\n\
         set term pngcairo size 700,500\n\
         set logscale xy\n\
         set xlabel 'dx'\n\
         set ylabel 'error'\n\
         set output 'convergence.png'\n\
         plot 'convergence.csv' using 3:4 with linespoints title 'measured'\n"
    )
}
