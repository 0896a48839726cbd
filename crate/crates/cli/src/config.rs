//! Run configuration: built-in defaults, then an optional TOML file, then flags.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lapswim_core::ingest::ColumnMap;
use lapswim_core::{AnalysisConfig, AnimalParams, LapScenario};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Artifact groups written by `analyze`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Laps,
    /// `tracks.csv` and `tracks.geojson`.
    Tracks,
    Energetics,
    Normalized,
    Fits,
}

impl Emit {
    pub const ALL: [Emit; 5] = [Emit::Laps, Emit::Tracks, Emit::Energetics, Emit::Normalized, Emit::Fits];

    pub fn files(self) -> &'static [&'static str] {
        match self {
            Emit::Laps => &["laps.csv"],
            Emit::Tracks => &["tracks.csv", "tracks.geojson"],
            Emit::Energetics => &["energetics.csv"],
            Emit::Normalized => &["normalized.csv"],
            Emit::Fits => &["fits.json"],
        }
    }
}

impl fmt::Display for Emit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Emit::Laps => "laps",
            Emit::Tracks => "tracks",
            Emit::Energetics => "energetics",
            Emit::Normalized => "normalized",
            Emit::Fits => "fits",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Tag CSV files, one trial each.
    pub inputs: Vec<PathBuf>,
    /// Lagoon outline (GeoJSON polygon).
    pub boundary: Option<PathBuf>,
    /// Projection origin `[lat, lon]` for GeoJSON output when no boundary is given.
    pub origin: [f64; 2],
    /// Boundary vertex used as the station when no station is configured.
    pub station_vertex: usize,
    pub output: PathBuf,
    pub emit: Vec<Emit>,
    /// Parallel trials; 0 uses every core.
    pub jobs: usize,
    pub columns: ColumnMap,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            boundary: None,
            origin: [0.0, 0.0],
            station_vertex: 0,
            output: PathBuf::from("lapswim-out"),
            emit: Emit::ALL.to_vec(),
            jobs: 0,
            columns: ColumnMap::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub inputs: Vec<PathBuf>,
    pub preset: Option<String>,
    pub boundary: Option<PathBuf>,
    pub station: Option<[f64; 2]>,
    pub output: Option<PathBuf>,
    pub emit: Option<Vec<Emit>>,
    pub jobs: Option<usize>,
    pub fit_space: Option<lapswim_core::energetics::FitSpace>,
}

/// A resolved configuration and whether the station was set explicitly.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub run: RunConfig,
    pub station_explicit: bool,
}

fn animal_preset(name: &str) -> anyhow::Result<AnimalParams> {
    AnimalParams::preset(name).with_context(|| format!("unknown animal preset `{name}` (expected TT01, TT02 or TT03)"))
}

/// Recursively overlays `top` onto `base`; tables merge, everything else replaces.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn read_toml(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let doc: toml::Value = toml::from_str(&text).with_context(|| format!("cannot parse config {}", path.display()))?;
    Ok(serde_json::to_value(doc)?)
}

fn resolve_relative(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    /// Defaults, then `preset` (from the file or the flag), then the file, then flags.
    pub fn resolve(file: Option<&Path>, ov: Overrides) -> anyhow::Result<Resolved> {
        let mut value = serde_json::to_value(RunConfig::default())?;
        let mut file_doc = match file {
            Some(p) => read_toml(p)?,
            None => Value::Object(Default::default()),
        };
        let file_preset = match file_doc.as_object_mut().and_then(|m| m.remove("preset")) {
            Some(Value::String(s)) => Some(s),
            Some(other) => bail!("`preset` must be a string, got {other}"),
            None => None,
        };
        if let Some(name) = ov.preset.as_deref().or(file_preset.as_deref()) {
            value["analysis"]["animal"] = serde_json::to_value(animal_preset(name)?)?;
        }
        let station_in_file = file_doc.pointer("/analysis/station").is_some();
        let output_in_file = file_doc.get("output").is_some();
        merge(&mut value, file_doc);
        if let Some(name) = &ov.preset {
            // the flag beats any animal table in the file
            value["analysis"]["animal"] = serde_json::to_value(animal_preset(name)?)?;
        }
        let mut run: RunConfig = serde_json::from_value(value).context("invalid configuration")?;

        if let Some(p) = file {
            let dir = p.parent().unwrap_or(Path::new("."));
            run.inputs.iter_mut().for_each(|i| resolve_relative(dir, i));
            if let Some(b) = run.boundary.as_mut() {
                resolve_relative(dir, b);
            }
            if output_in_file {
                resolve_relative(dir, &mut run.output);
            }
        }
        if !ov.inputs.is_empty() {
            run.inputs = ov.inputs;
        }
        if ov.boundary.is_some() {
            run.boundary = ov.boundary;
        }
        if let Some(s) = ov.station {
            run.analysis.station = s;
        }
        if let Some(o) = ov.output {
            run.output = o;
        }
        if let Some(e) = ov.emit {
            run.emit = e;
        }
        run.emit.sort();
        run.emit.dedup();
        if let Some(j) = ov.jobs {
            run.jobs = j;
        }
        if let Some(f) = ov.fit_space {
            run.analysis.fit_space = f;
        }
        run.analysis.validate()?;
        Ok(Resolved { run, station_explicit: station_in_file || ov.station.is_some() })
    }

    /// Hash over everything that changes numeric results.
    pub fn config_hash(&self) -> String {
        let payload = serde_json::json!({
            "analysis": self.analysis,
            "columns": self.columns,
            "origin": self.origin,
            "station_vertex": self.station_vertex,
        });
        hex_digest(serde_json::to_string(&payload).expect("config serialises").as_bytes())
    }

    pub fn emits(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Simulation scenario: default or preset, then the file, then flags.
pub fn resolve_scenario(
    file: Option<&Path>,
    preset: Option<&str>,
    seed: Option<u64>,
    laps: Option<usize>,
    noise_free: bool,
) -> anyhow::Result<LapScenario> {
    let mut file_doc = match file {
        Some(p) => read_toml(p)?,
        None => Value::Object(Default::default()),
    };
    let file_preset = match file_doc.as_object_mut().and_then(|m| m.remove("preset")) {
        Some(Value::String(s)) => Some(s),
        Some(other) => bail!("`preset` must be a string, got {other}"),
        None => None,
    };
    let base = match preset.or(file_preset.as_deref()) {
        Some(name) => LapScenario::preset(name)
            .with_context(|| format!("unknown scenario preset `{name}` (expected TT01, TT02 or TT03)"))?,
        None => LapScenario::default(),
    };
    let mut value = serde_json::to_value(base)?;
    merge(&mut value, file_doc);
    let mut sc: LapScenario = serde_json::from_value(value).context("invalid scenario")?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(n) = laps {
        sc.laps = n;
    }
    if noise_free {
        sc.noise = lapswim_core::simulator::NoiseConfig::zero();
    }
    sc.validate()?;
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn toml_file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn defaults_without_file() {
        let r = RunConfig::resolve(None, Overrides::default()).unwrap();
        assert_eq!(r.run, RunConfig::default());
        assert!(!r.station_explicit);
    }

    #[test]
    fn file_overrides_defaults_and_flags_override_file() {
        let f = toml_file(
            "preset = \"TT01\"\njobs = 3\n[analysis]\nstation = [1.0, 2.0]\ngrid_n = 101\n[analysis.segmentation]\nv_start = 0.7\n",
        );
        let r = RunConfig::resolve(Some(f.path()), Overrides::default()).unwrap();
        assert_eq!(r.run.analysis.animal, AnimalParams::tt01());
        assert_eq!(r.run.analysis.grid_n, 101);
        assert_eq!(r.run.analysis.segmentation.v_start, 0.7);
        assert_eq!(r.run.jobs, 3);
        assert!(r.station_explicit);

        let ov = Overrides { preset: Some("tt03".into()), jobs: Some(1), station: Some([5.0, 6.0]), ..Default::default() };
        let r = RunConfig::resolve(Some(f.path()), ov).unwrap();
        assert_eq!(r.run.analysis.animal, AnimalParams::tt03());
        assert_eq!(r.run.jobs, 1);
        assert_eq!(r.run.analysis.station, [5.0, 6.0]);
        // untouched file values survive
        assert_eq!(r.run.analysis.grid_n, 101);
    }

    #[test]
    fn partial_animal_table_merges_with_preset() {
        let f = toml_file("preset = \"TT02\"\n[analysis.animal]\nmass = 250.0\n");
        let r = RunConfig::resolve(Some(f.path()), Overrides::default()).unwrap();
        assert_eq!(r.run.analysis.animal.mass, 250.0);
        assert_eq!(r.run.analysis.animal.length, AnimalParams::tt02().length);
    }

    #[test]
    fn rejects_unknown_keys_and_presets() {
        let f = toml_file("bogus = 1\n");
        assert!(RunConfig::resolve(Some(f.path()), Overrides::default()).is_err());
        let ov = Overrides { preset: Some("TT09".into()), ..Default::default() };
        assert!(RunConfig::resolve(None, ov).is_err());
        let f = toml_file("[analysis]\ngrid_n = 1\n");
        assert!(RunConfig::resolve(Some(f.path()), Overrides::default()).is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let f = toml_file("inputs = [\"a.csv\"]\nboundary = \"lagoon.geojson\"\noutput = \"out\"\n");
        let r = RunConfig::resolve(Some(f.path()), Overrides::default()).unwrap();
        let dir = f.path().parent().unwrap();
        assert_eq!(r.run.inputs, vec![dir.join("a.csv")]);
        assert_eq!(r.run.boundary, Some(dir.join("lagoon.geojson")));
        assert_eq!(r.run.output, dir.join("out"));
        let r = RunConfig::resolve(None, Overrides::default()).unwrap();
        assert_eq!(r.run.output, PathBuf::from("lapswim-out"));
    }

    #[test]
    fn config_hash_tracks_thresholds_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output = PathBuf::from("elsewhere");
        b.jobs = 7;
        b.inputs.push(PathBuf::from("x.csv"));
        assert_eq!(a.config_hash(), b.config_hash());
        b.analysis.segmentation.a_thresh += 0.01;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn scenario_layers() {
        let f = toml_file("preset = \"TT03\"\nlaps = 3\n[speed]\ncruise = 3.9\n");
        let sc = resolve_scenario(Some(f.path()), None, Some(9), None, true).unwrap();
        assert_eq!(sc.animal, AnimalParams::tt03());
        assert_eq!((sc.laps, sc.seed, sc.speed.cruise), (3, 9, 3.9));
        assert_eq!(sc.noise, lapswim_core::simulator::NoiseConfig::zero());
        let sc = resolve_scenario(Some(f.path()), None, None, Some(2), false).unwrap();
        assert_eq!(sc.laps, 2);
        assert!(resolve_scenario(None, Some("nope"), None, None, false).is_err());
    }
}
