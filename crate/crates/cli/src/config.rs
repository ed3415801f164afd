//! Line-oriented run configuration: `section.key = value`, `#` starts a
//! comment, keys nest exactly one level. Parsing fills defaults, checks
//! every physical precondition it can before an engine spins up, and can
//! echo itself in a canonical form whose SHA-256 names the run.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use arrival_core::EngineKind;
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Clone)]
pub struct EngineSettings {
    pub kind: EngineKind,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    pub cfl_safety: f64,
    pub conservation_tol: f64,
    pub window_cells: usize,
    pub stop_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct GridSettings {
    pub dim: usize,
    pub length: f64,
    pub nodes: usize,
    pub extension: f64,
    /// (length_y, nodes_y, periodic_y), present only for dim = 2.
    pub y: Option<(f64, usize, bool)>,
}

#[derive(Debug, Clone)]
pub enum Initial {
    Gaussian {
        x0: f64,
        s: f64,
        k0: f64,
        t0: f64,
        /// (s_y, k0_y), present only for dim = 2.
        y: Option<(f64, f64)>,
    },
    Backflow {
        x0: f64,
        s: f64,
        k1: f64,
        k2: f64,
        ratio: f64,
        phase: f64,
    },
}

#[derive(Debug, Clone)]
pub struct ConvergenceSettings {
    pub scenario: String,
    pub rungs: Vec<(usize, f64)>,
    pub horizon: f64,
}

#[derive(Debug, Clone)]
pub struct CompareSettings {
    pub engines: Vec<EngineKind>,
    pub bin_width: f64,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub engine: EngineSettings,
    /// (re, im) of the Robin coefficient; kept only when some leg is robin.
    pub beta: Option<(f64, f64)>,
    pub grid: GridSettings,
    pub initial: Initial,
    pub hbar: f64,
    pub mass: f64,
    pub bin_width: f64,
    pub surface_bins: usize,
    pub convergence: Option<ConvergenceSettings>,
    pub compare: Option<CompareSettings>,
}

pub fn kind_from_str(s: &str) -> Option<EngineKind> {
    match s {
        "reference" => Some(EngineKind::Reference),
        "robin" => Some(EngineKind::Robin),
        "ideal-psi" => Some(EngineKind::IdealPsi),
        "ideal-hydro" => Some(EngineKind::IdealHydro),
        _ => None,
    }
}

struct Raw {
    map: BTreeMap<String, (String, usize)>,
}

fn cfg_err(msg: String) -> Failure {
    Failure::Config(msg)
}

impl Raw {
    fn parse(text: &str) -> Result<Self, Failure> {
        let mut map: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line_no = i + 1;
            let body = raw_line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(cfg_err(format!(
                    "line {line_no}: expected `section.key = value`, got `{body}`"
                )));
            };
            let key = k.trim();
            let value = v.trim();
            let shape_ok = {
                let parts: Vec<&str> = key.split('.').collect();
                parts.len() == 2
                    && parts.iter().all(|p| {
                        !p.is_empty()
                            && p.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
                    })
            };
            if !shape_ok {
                return Err(cfg_err(format!(
                    "line {line_no}: malformed key `{key}` (want lowercase `section.key`)"
                )));
            }
            if value.is_empty() {
                return Err(cfg_err(format!("line {line_no}: empty value for `{key}`")));
            }
            if let Some((_, first)) = map.get(key) {
                return Err(cfg_err(format!(
                    "duplicate key `{key}` (lines {first} and {line_no})"
                )));
            }
            map.insert(key.to_string(), (value.to_string(), line_no));
        }
        Ok(Raw { map })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>, Failure> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => {
                let x: f64 = v.parse().map_err(|_| {
                    cfg_err(format!("line {line}: `{key}` expects a number, got `{v}`"))
                })?;
                if !x.is_finite() {
                    return Err(cfg_err(format!("line {line}: `{key}` must be finite")));
                }
                Ok(Some(x))
            }
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, Failure> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn req_f64(&mut self, key: &str) -> Result<f64, Failure> {
        self.f64(key)?
            .ok_or_else(|| cfg_err(format!("missing required key `{key}`")))
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>, Failure> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| cfg_err(format!("line {line}: `{key}` expects a whole number, got `{v}`"))),
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, Failure> {
        Ok(self.usize(key)?.unwrap_or(default))
    }

    fn req_usize(&mut self, key: &str) -> Result<usize, Failure> {
        self.usize(key)?
            .ok_or_else(|| cfg_err(format!("missing required key `{key}`")))
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, Failure> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => match v.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(cfg_err(format!(
                    "line {line}: `{key}` expects `true` or `false`, got `{v}`"
                ))),
            },
        }
    }

    fn string(&mut self, key: &str) -> Option<(String, usize)> {
        self.take(key)
    }

    fn finish(self) -> Result<(), Failure> {
        if let Some((key, (_, line))) = self.map.into_iter().next() {
            return Err(cfg_err(format!("line {line}: unknown key `{key}`")));
        }
        Ok(())
    }
}

fn parse_rungs(v: &str, line: usize) -> Result<Vec<(usize, f64)>, Failure> {
    let mut out = Vec::new();
    for piece in v.split(',') {
        let piece = piece.trim();
        let bad = || {
            cfg_err(format!(
                "line {line}: `convergence.rungs` wants `nodes:dt` pairs separated by commas, got `{piece}`"
            ))
        };
        let (n, dt) = piece.split_once(':').ok_or_else(bad)?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        let dt: f64 = dt.trim().parse().map_err(|_| bad())?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(bad());
        }
        out.push((n, dt));
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<Config, Failure> {
    let mut raw = Raw::parse(text)?;

    let (kind_str, kind_line) = raw
        .string("engine.kind")
        .ok_or_else(|| cfg_err("missing required key `engine.kind`".into()))?;
    let kind = kind_from_str(&kind_str).ok_or_else(|| {
        cfg_err(format!(
            "line {kind_line}: unknown engine `{kind_str}` (reference, robin, ideal-psi, ideal-hydro)"
        ))
    })?;
    let engine = EngineSettings {
        kind,
        dt: raw.f64_or("engine.dt", 1e-3)?,
        steps: raw.usize_or("engine.steps", 0)?,
        record_every: raw.usize_or("engine.record_every", 1)?,
        cfl_safety: raw.f64_or("engine.cfl_safety", 0.9)?,
        conservation_tol: raw.f64_or("engine.conservation_tol", 1e-10)?,
        window_cells: raw.usize_or("engine.window_cells", 8)?,
        stop_threshold: raw.f64_or("engine.stop_threshold", 0.0)?,
    };

    let dim = raw.usize_or("grid.dim", 1)?;
    if dim != 1 && dim != 2 {
        return Err(cfg_err(format!("`grid.dim` must be 1 or 2, got {dim}")));
    }
    let length = raw.req_f64("grid.length")?;
    let nodes = raw.req_usize("grid.nodes")?;
    let extension = raw.f64_or("grid.extension", 0.0)?;
    let y = if dim == 2 {
        Some((
            raw.req_f64("grid.length_y")?,
            raw.req_usize("grid.nodes_y")?,
            raw.bool_or("grid.periodic_y", false)?,
        ))
    } else {
        None
    };
    let grid = GridSettings { dim, length, nodes, extension, y };

    let (init_str, init_line) = raw
        .string("initial.kind")
        .ok_or_else(|| cfg_err("missing required key `initial.kind`".into()))?;
    let initial = match init_str.as_str() {
        "gaussian" => {
            let x0 = raw.req_f64("initial.x0")?;
            let s = raw.req_f64("initial.s")?;
            let k0 = raw.req_f64("initial.k0")?;
            let t0 = raw.f64_or("initial.t0", 0.0)?;
            let y = if dim == 2 {
                Some((raw.f64_or("initial.s_y", s)?, raw.f64_or("initial.k0_y", 0.0)?))
            } else {
                None
            };
            Initial::Gaussian { x0, s, k0, t0, y }
        }
        "backflow" => Initial::Backflow {
            x0: raw.req_f64("initial.x0")?,
            s: raw.req_f64("initial.s")?,
            k1: raw.req_f64("initial.k1")?,
            k2: raw.req_f64("initial.k2")?,
            ratio: raw.f64_or("initial.ratio", 0.7)?,
            phase: raw.f64_or("initial.phase", PI)?,
        },
        other => {
            return Err(cfg_err(format!(
                "line {init_line}: unknown initial state `{other}` (gaussian, backflow)"
            )))
        }
    };

    let hbar = raw.f64_or("constants.hbar", 1.0)?;
    let mass = raw.f64_or("constants.mass", 1.0)?;
    let bin_width = raw.f64_or("output.bin_width", 0.25)?;
    let surface_bins = raw.usize_or("output.surface_bins", 16)?;

    let compare = match raw.string("compare.engines") {
        None => {
            // reject a dangling bin_width so it cannot silently vanish
            if let Some((_, line)) = raw.take("compare.bin_width") {
                return Err(cfg_err(format!(
                    "line {line}: `compare.bin_width` needs a `compare.engines` list"
                )));
            }
            None
        }
        Some((v, line)) => {
            let mut engines = Vec::new();
            for piece in v.split(',') {
                let piece = piece.trim();
                let k = kind_from_str(piece).ok_or_else(|| {
                    cfg_err(format!("line {line}: unknown engine `{piece}` in `compare.engines`"))
                })?;
                if engines.contains(&k) {
                    return Err(cfg_err(format!(
                        "line {line}: engine `{piece}` listed twice in `compare.engines`"
                    )));
                }
                engines.push(k);
            }
            if engines.len() < 2 {
                return Err(cfg_err(format!(
                    "line {line}: `compare.engines` needs at least two engines"
                )));
            }
            Some(CompareSettings {
                engines,
                bin_width: raw.f64_or("compare.bin_width", bin_width)?,
            })
        }
    };

    let convergence = match raw.string("convergence.rungs") {
        None => {
            for k in ["convergence.scenario", "convergence.horizon"] {
                if let Some((_, line)) = raw.take(k) {
                    return Err(cfg_err(format!("line {line}: `{k}` needs `convergence.rungs`")));
                }
            }
            None
        }
        Some((v, line)) => {
            let rungs = parse_rungs(&v, line)?;
            let scenario = match raw.string("convergence.scenario") {
                None => "ideal-arrival".to_string(),
                Some((s, sline)) => {
                    if s != "reference-density" && s != "ideal-arrival" {
                        return Err(cfg_err(format!(
                            "line {sline}: unknown scenario `{s}` (reference-density, ideal-arrival)"
                        )));
                    }
                    s
                }
            };
            let horizon =
                raw.f64_or("convergence.horizon", engine.dt * engine.steps as f64)?;
            Some(ConvergenceSettings { scenario, rungs, horizon })
        }
    };

    let robin_used =
        kind == EngineKind::Robin || compare.as_ref().is_some_and(|c| c.engines.contains(&EngineKind::Robin));
    let beta_re = raw.f64("robin.beta_re")?;
    let beta_im_entry = raw.take("robin.beta_im");
    let beta = if robin_used {
        let im = match &beta_im_entry {
            None => 0.0,
            Some((v, line)) => {
                let x: f64 = v.parse().map_err(|_| {
                    cfg_err(format!("line {line}: `robin.beta_im` expects a number, got `{v}`"))
                })?;
                if x < 0.0 {
                    return Err(cfg_err(format!(
                        "line {line}: `robin.beta_im` must be >= 0; Im(beta) < 0 would pump probability in through the face"
                    )));
                }
                x
            }
        };
        Some((beta_re.unwrap_or(0.0), im))
    } else {
        if beta_re.is_some() || beta_im_entry.is_some() {
            return Err(cfg_err(
                "robin.* keys are set but no robin engine runs in this configuration".into(),
            ));
        }
        None
    };

    raw.finish()?;

    let cfg = Config {
        engine,
        beta,
        grid,
        initial,
        hbar,
        mass,
        bin_width,
        surface_bins,
        convergence,
        compare,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl Config {
    pub fn uses(&self, kind: EngineKind) -> bool {
        self.engine.kind == kind
            || self.compare.as_ref().is_some_and(|c| c.engines.contains(&kind))
    }

    fn validate(&self) -> Result<(), Failure> {
        let e = &self.engine;
        if !(e.dt > 0.0) {
            return Err(cfg_err(format!("`engine.dt` must be positive, got {}", e.dt)));
        }
        if e.record_every == 0 {
            return Err(cfg_err("`engine.record_every` must be at least 1".into()));
        }
        if !(e.cfl_safety > 0.0 && e.cfl_safety <= 1.0) {
            return Err(cfg_err(format!(
                "`engine.cfl_safety` must lie in (0, 1], got {}",
                e.cfl_safety
            )));
        }
        if !(e.conservation_tol > 0.0) {
            return Err(cfg_err("`engine.conservation_tol` must be positive".into()));
        }
        if e.window_cells == 0 {
            return Err(cfg_err("`engine.window_cells` must be at least 1".into()));
        }
        if e.stop_threshold < 0.0 {
            return Err(cfg_err("`engine.stop_threshold` must be >= 0".into()));
        }

        let g = &self.grid;
        if !(g.length > 0.0) {
            return Err(cfg_err(format!("`grid.length` must be positive, got {}", g.length)));
        }
        if g.nodes < 8 {
            return Err(cfg_err(format!("`grid.nodes` must be at least 8, got {}", g.nodes)));
        }
        if g.extension < 0.0 {
            return Err(cfg_err("`grid.extension` must be >= 0".into()));
        }
        if let Some((ly, ny, _)) = g.y {
            if !(ly > 0.0) {
                return Err(cfg_err(format!("`grid.length_y` must be positive, got {ly}")));
            }
            if ny < 8 {
                return Err(cfg_err(format!("`grid.nodes_y` must be at least 8, got {ny}")));
            }
        }

        if !(self.hbar > 0.0) || !(self.mass > 0.0) {
            return Err(cfg_err("`constants.hbar` and `constants.mass` must be positive".into()));
        }
        if !(self.bin_width > 0.0) {
            return Err(cfg_err("`output.bin_width` must be positive".into()));
        }
        if self.surface_bins == 0 {
            return Err(cfg_err("`output.surface_bins` must be at least 1".into()));
        }

        match &self.initial {
            Initial::Gaussian { s, y, .. } => {
                if !(*s > 0.0) {
                    return Err(cfg_err(format!("`initial.s` must be positive, got {s}")));
                }
                if let Some((sy, _)) = y {
                    if !(*sy > 0.0) {
                        return Err(cfg_err(format!("`initial.s_y` must be positive, got {sy}")));
                    }
                }
            }
            Initial::Backflow { s, k1, k2, .. } => {
                if !(*s > 0.0) {
                    return Err(cfg_err(format!("`initial.s` must be positive, got {s}")));
                }
                if !(*k1 > 0.0 && *k2 > 0.0) {
                    return Err(cfg_err(
                        "`initial.k1` and `initial.k2` must be positive for a two-momentum state".into(),
                    ));
                }
                if g.dim != 1 {
                    return Err(cfg_err("the two-momentum initial state is one-dimensional".into()));
                }
                if self.uses(EngineKind::IdealHydro) {
                    return Err(cfg_err(
                        "the hydrodynamic engine takes gaussian initial data only".into(),
                    ));
                }
            }
        }

        if self.uses(EngineKind::IdealHydro) {
            if g.dim != 1 {
                return Err(cfg_err("the hydrodynamic engine is one-dimensional".into()));
            }
            if g.nodes > 2048 {
                return Err(cfg_err(format!(
                    "the hydrodynamic engine is desk-scale only (<= 2048 nodes, got {})",
                    g.nodes
                )));
            }
        }
        if e.kind == EngineKind::Robin && g.extension > 0.0 {
            return Err(cfg_err(
                "the robin face replaces the continuation; set `grid.extension = 0`".into(),
            ));
        }
        if e.kind == EngineKind::IdealHydro && g.extension > 0.0 {
            return Err(cfg_err(
                "the hydrodynamic engine gates at the face itself; set `grid.extension = 0`".into(),
            ));
        }

        self.check_resolution()?;

        if let Some(c) = &self.convergence {
            if !(c.horizon > 0.0) {
                return Err(cfg_err(
                    "`convergence.horizon` must be positive (set it, or give the engine steps)".into(),
                ));
            }
            if matches!(self.initial, Initial::Backflow { .. }) {
                return Err(cfg_err("convergence scenarios take gaussian initial data".into()));
            }
            if g.dim != 1 {
                return Err(cfg_err("convergence scenarios are one-dimensional".into()));
            }
            if c.scenario == "ideal-arrival" && !(g.extension > 0.0) {
                return Err(cfg_err(
                    "the ideal-arrival scenario needs a detector-side continuation (`grid.extension > 0`)".into(),
                ));
            }
            arrival_core::convergence::validate_ladder(&c.rungs)
                .map_err(|err| cfg_err(format!("`convergence.rungs`: {err}")))?;
        }
        Ok(())
    }

    /// Crude carrier-plus-bandwidth estimate against the sampling limit.
    /// The density cutoff used by the engines puts the useful support at
    /// about 2.63 inverse widths beyond the carrier.
    fn check_resolution(&self) -> Result<(), Failure> {
        let g = &self.grid;
        let dx = g.length / (g.nodes - 1) as f64;
        let (kx, label) = match &self.initial {
            Initial::Gaussian { k0, s, .. } => (k0.abs() + 2.63 / s, "initial.k0"),
            Initial::Backflow { k1, k2, s, .. } => (k1.max(*k2) + 2.63 / s, "initial.k2"),
        };
        let bound = PI / (4.0 * dx);
        if kx >= bound {
            let need = (4.0 * kx * g.length / PI).ceil() as usize + 2;
            return Err(cfg_err(format!(
                "`grid.nodes` = {} cannot resolve the packet ({label} plus bandwidth ~{kx:.2} vs limit {bound:.2}); try at least {need} nodes",
                g.nodes
            )));
        }
        if let (Some((ly, ny, periodic)), Initial::Gaussian { y: Some((sy, ky)), .. }) =
            (g.y, &self.initial)
        {
            let dy = if periodic { ly / ny as f64 } else { ly / (ny - 1) as f64 };
            let k = ky.abs() + 2.63 / sy;
            let bound = PI / (4.0 * dy);
            if k >= bound {
                let need = (4.0 * k * ly / PI).ceil() as usize + 2;
                return Err(cfg_err(format!(
                    "`grid.nodes_y` = {ny} cannot resolve the packet (transverse content ~{k:.2} vs limit {bound:.2}); try at least {need} nodes"
                )));
            }
        }
        Ok(())
    }

    /// Sorted `key = value` lines with every default filled in. Parsing
    /// the echo reproduces this configuration bit for bit.
    pub fn canonical(&self) -> String {
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| kv.push((k.to_string(), v));

        let e = &self.engine;
        put("engine.kind", e.kind.as_str().to_string());
        put("engine.dt", e.dt.to_string());
        put("engine.steps", e.steps.to_string());
        put("engine.record_every", e.record_every.to_string());
        put("engine.cfl_safety", e.cfl_safety.to_string());
        put("engine.conservation_tol", e.conservation_tol.to_string());
        put("engine.window_cells", e.window_cells.to_string());
        put("engine.stop_threshold", e.stop_threshold.to_string());

        if let Some((re, im)) = self.beta {
            put("robin.beta_re", re.to_string());
            put("robin.beta_im", im.to_string());
        }

        let g = &self.grid;
        put("grid.dim", g.dim.to_string());
        put("grid.length", g.length.to_string());
        put("grid.nodes", g.nodes.to_string());
        put("grid.extension", g.extension.to_string());
        if let Some((ly, ny, per)) = g.y {
            put("grid.length_y", ly.to_string());
            put("grid.nodes_y", ny.to_string());
            put("grid.periodic_y", per.to_string());
        }

        match &self.initial {
            Initial::Gaussian { x0, s, k0, t0, y } => {
                put("initial.kind", "gaussian".to_string());
                put("initial.x0", x0.to_string());
                put("initial.s", s.to_string());
                put("initial.k0", k0.to_string());
                put("initial.t0", t0.to_string());
                if let Some((sy, ky)) = y {
                    put("initial.s_y", sy.to_string());
                    put("initial.k0_y", ky.to_string());
                }
            }
            Initial::Backflow { x0, s, k1, k2, ratio, phase } => {
                put("initial.kind", "backflow".to_string());
                put("initial.x0", x0.to_string());
                put("initial.s", s.to_string());
                put("initial.k1", k1.to_string());
                put("initial.k2", k2.to_string());
                put("initial.ratio", ratio.to_string());
                put("initial.phase", phase.to_string());
            }
        }

        put("constants.hbar", self.hbar.to_string());
        put("constants.mass", self.mass.to_string());
        put("output.bin_width", self.bin_width.to_string());
        put("output.surface_bins", self.surface_bins.to_string());

        if let Some(c) = &self.convergence {
            put("convergence.scenario", c.scenario.clone());
            let rungs: Vec<String> =
                c.rungs.iter().map(|(n, dt)| format!("{n}:{dt}")).collect();
            put("convergence.rungs", rungs.join(","));
            put("convergence.horizon", c.horizon.to_string());
        }
        if let Some(c) = &self.compare {
            let names: Vec<&str> = c.engines.iter().map(|k| k.as_str()).collect();
            put("compare.engines", names.join(","));
            put("compare.bin_width", c.bin_width.to_string());
        }

        kv.sort();
        let mut out = String::new();
        for (k, v) in kv {
            out.push_str(&k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 of the canonical echo; the identity of a run.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    /// Resolved key/value pairs, for mirroring into a manifest.
    pub fn resolved_map(&self) -> BTreeMap<String, String> {
        self.canonical()
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
engine.kind = ideal-psi
grid.length = 20
grid.nodes = 256
grid.extension = 10
initial.kind = gaussian
initial.x0 = -10
initial.s = 1
initial.k0 = 2
";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.engine.dt, 1e-3);
        assert_eq!(c.engine.steps, 0);
        assert_eq!(c.hbar, 1.0);
        assert_eq!(c.bin_width, 0.25);
        assert!(c.beta.is_none());
        assert!(c.compare.is_none());
    }

    #[test]
    fn canonical_echo_round_trips() {
        let c = parse_config(MINIMAL).unwrap();
        let echo = c.canonical();
        let again = parse_config(&echo).unwrap();
        assert_eq!(echo, again.canonical());
        assert_eq!(c.hash(), again.hash());
    }

    #[test]
    fn hash_ignores_comments_and_ordering() {
        let reordered = "\
# a comment
initial.k0 = 2
initial.s = 1   # trailing note
initial.x0 = -10
initial.kind = gaussian
grid.extension = 10
grid.nodes = 256
grid.length = 20
engine.kind = ideal-psi
";
        let a = parse_config(MINIMAL).unwrap();
        let b = parse_config(reordered).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config(&MINIMAL.replace("initial.k0 = 2", "initial.k0 = 2.5")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn errors_carry_key_and_line() {
        let bad = MINIMAL.replace("initial.s = 1", "initial.s = fast");
        let err = parse_config(&bad).unwrap_err().to_string();
        assert!(err.contains("initial.s") && err.contains("line 7"), "{err}");

        let dup = format!("{MINIMAL}grid.nodes = 512\n");
        let err = parse_config(&dup).unwrap_err().to_string();
        assert!(err.contains("duplicate") && err.contains("grid.nodes"), "{err}");

        let unknown = format!("{MINIMAL}grid.stride = 3\n");
        let err = parse_config(&unknown).unwrap_err().to_string();
        assert!(err.contains("unknown key `grid.stride`") && err.contains("line 9"), "{err}");

        let err = parse_config("engine.kind ideal-psi\n").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn gain_through_the_face_is_rejected() {
        let robin = MINIMAL
            .replace("engine.kind = ideal-psi", "engine.kind = robin")
            .replace("grid.extension = 10", "grid.extension = 0");
        let ok = format!("{robin}robin.beta_im = 1\n");
        assert!(parse_config(&ok).is_ok());
        let bad = format!("{robin}robin.beta_im = -1\n");
        let err = parse_config(&bad).unwrap_err().to_string();
        assert!(err.contains("robin.beta_im") && err.contains(">= 0"), "{err}");
        // robin.* without any robin leg is a stray
        let stray = format!("{MINIMAL}robin.beta_im = 1\n");
        assert!(parse_config(&stray).is_err());
    }

    #[test]
    fn coarse_grids_are_rejected_with_a_suggestion() {
        let bad = MINIMAL.replace("grid.nodes = 256", "grid.nodes = 16");
        let err = parse_config(&bad).unwrap_err().to_string();
        assert!(err.contains("cannot resolve") && err.contains("try at least"), "{err}");
    }

    #[test]
    fn compare_and_convergence_sections_validate() {
        let cmp = format!("{MINIMAL}compare.engines = ideal-psi,reference\n");
        let c = parse_config(&cmp).unwrap();
        assert_eq!(c.compare.unwrap().engines.len(), 2);

        let single = format!("{MINIMAL}compare.engines = ideal-psi\n");
        assert!(parse_config(&single).unwrap_err().to_string().contains("two engines"));

        let conv = format!(
            "{MINIMAL}convergence.rungs = 256:0.008,512:0.004\nconvergence.horizon = 4\n"
        );
        let c = parse_config(&conv).unwrap();
        assert_eq!(c.convergence.unwrap().rungs, vec![(256, 8e-3), (512, 4e-3)]);

        let lazy = format!("{MINIMAL}convergence.rungs = 512:0.008,256:0.004\nconvergence.horizon = 4\n");
        assert!(parse_config(&lazy).is_err());
    }
}
