//! Scenario files: parsing, defaults, validation and the resolved echo that
//! reproduces a run.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rydpol::master::{DecayRates, DEFAULT_INTERMEDIATE_DECAY};
use rydpol::spectra::{Doppler, SolverKind, SweepConfig, VaporConfig};
use rydpol::{Polarization, Preset, C64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::units::{AngleGrid, DetuningGrid, Freq, GridSpec};

const MHZ: f64 = 2.0 * PI * 1e6;
const KHZ: f64 = 2.0 * PI * 1e3;

pub const DEFAULT_THETA: &str = "0:355:5";
pub const DEFAULT_DETUNING: &str = "-60MHz:60MHz:201";
pub const DEFAULT_OUTPUT_DIR: &str = "rydpol-out";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverKind>,
    #[serde(default)]
    pub fields: FieldsSection,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub vapor: VaporSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doppler: Option<Doppler>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_rabi: Option<Freq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_detuning: Option<Freq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_polarization: Option<PolarizationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_rabi: Option<Freq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_polarization: Option<PolarizationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf_rabi: Option<Freq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf_detuning: Option<Freq>,
}

/// Decay rates take frequency tags: `"6.07MHz"` is 2π × 6.07e6 per second.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediate: Option<Freq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transit: Option<Freq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision: Option<Freq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1_radiative: Option<Freq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2_radiative: Option<Freq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dummy: Option<Freq>,
}

/// SI units throughout; see [`VaporConfig`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaporSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_wavelength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_wavelength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atomic_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_dipole: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<GridSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
}

/// A polarization as a real triple, a complex triple of `[re, im]` pairs, or
/// a linear polarization at `theta_deg` from z in the z-y plane. Triples are
/// normalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PolarizationSpec {
    Real([f64; 3]),
    Complex([[f64; 2]; 3]),
    Angle { theta_deg: f64 },
}

impl PolarizationSpec {
    pub fn resolve(&self) -> Result<Polarization, String> {
        let v = match *self {
            PolarizationSpec::Real(r) => r.map(|x| C64::new(x, 0.0)),
            PolarizationSpec::Complex(c) => c.map(|[re, im]| C64::new(re, im)),
            PolarizationSpec::Angle { theta_deg } => {
                if !theta_deg.is_finite() {
                    return Err("polarization angle must be finite".into());
                }
                return Ok(Polarization::rf_linear(theta_deg.to_radians()));
            }
        };
        let [x, y, z] = v;
        if let Ok(p) = Polarization::new(x, y, z) {
            return Ok(p);
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err("polarization vector must be finite and non-zero".into());
        }
        let [x, y, z] = v.map(|c| c / norm);
        Polarization::new(x, y, z).map_err(|e| e.to_string())
    }

    pub fn echo(p: &Polarization) -> PolarizationSpec {
        PolarizationSpec::Complex([p.ex, p.ey, p.ez].map(|c| [c.re, c.im]))
    }
}

/// A fully resolved scenario: every default applied and every grid expanded.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub preset: Preset,
    pub sweep: SweepConfig,
    pub theta: AngleGrid,
    pub detuning: DetuningGrid,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}

/// Reads a scenario from TOML, or from the `config` echo inside a JSON
/// manifest.
pub fn load(path: &Path) -> Result<ScenarioFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let toml_text = if path.extension().is_some_and(|e| e == "json") {
        let manifest: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: not valid JSON: {e}", path.display())))?;
        manifest
            .get("config")
            .and_then(|c| c.as_str())
            .ok_or_else(|| CliError::Config(format!("{}: manifest has no `config` echo", path.display())))?
            .to_owned()
    } else {
        text
    };
    parse(&toml_text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse(text: &str) -> Result<ScenarioFile, String> {
    serde_path_to_error::deserialize(toml::Deserializer::new(text)).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().to_owned();
        if path == "." {
            inner.to_string().trim_end().to_owned()
        } else {
            format!("`{path}`: {message}")
        }
    })
}

fn key_error(key: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{key}`: {message}"))
}

fn freq_or(value: Option<Freq>, default: f64) -> f64 {
    value.map_or(default, |f| f.0)
}

impl ScenarioFile {
    pub fn resolve(&self) -> Result<Scenario, CliError> {
        let preset: Preset = self
            .preset
            .as_deref()
            .unwrap_or("type1")
            .parse()
            .map_err(|e: rydpol::Error| CliError::Config(e.to_string()))?;

        let f = &self.fields;
        let polarization = |key: &str, spec: &Option<PolarizationSpec>| {
            spec.as_ref()
                .map_or(Ok(Polarization::z()), |s| s.resolve())
                .map_err(|e| key_error(key, e))
        };
        let probe_polarization = polarization("fields.probe_polarization", &f.probe_polarization)?;
        let coupling_polarization = polarization("fields.coupling_polarization", &f.coupling_polarization)?;
        let probe_rabi = freq_or(f.probe_rabi, DEFAULT_INTERMEDIATE_DECAY / 20.0);
        let coupling_rabi = freq_or(f.coupling_rabi, MHZ);
        let rf_rabi = freq_or(f.rf_rabi, 10.0 * MHZ);
        for (key, v) in [
            ("fields.probe_rabi", probe_rabi),
            ("fields.coupling_rabi", coupling_rabi),
            ("fields.rf_rabi", rf_rabi),
        ] {
            if v < 0.0 {
                return Err(key_error(key, format!("must be >= 0, got {v} rad/s")));
            }
        }

        let r = &self.rates;
        let rates = DecayRates {
            intermediate: freq_or(r.intermediate, DEFAULT_INTERMEDIATE_DECAY),
            transit: freq_or(r.transit, 50.0 * KHZ),
            collision: freq_or(r.collision, 0.0),
            r1_radiative: freq_or(r.r1_radiative, 10.0 * KHZ),
            r2_radiative: freq_or(r.r2_radiative, 10.0 * KHZ),
            dummy: r.dummy.map(|d| d.0),
        };
        for (key, v) in [
            ("rates.intermediate", rates.intermediate),
            ("rates.transit", rates.transit),
            ("rates.collision", rates.collision),
            ("rates.r1_radiative", rates.r1_radiative),
            ("rates.r2_radiative", rates.r2_radiative),
            ("rates.dummy", rates.dummy.unwrap_or(1.0)),
        ] {
            if v < 0.0 {
                return Err(key_error(key, format!("must be >= 0, got {v} rad/s")));
            }
        }
        if rates.dummy == Some(0.0) {
            return Err(key_error("rates.dummy", "must be > 0"));
        }

        let d = VaporConfig::default();
        let v = &self.vapor;
        let vapor = VaporConfig {
            density: v.density.unwrap_or(d.density),
            length: v.length.unwrap_or(d.length),
            temperature: v.temperature.unwrap_or(d.temperature),
            probe_wavelength: v.probe_wavelength.unwrap_or(d.probe_wavelength),
            coupling_wavelength: v.coupling_wavelength.unwrap_or(d.coupling_wavelength),
            atomic_mass: v.atomic_mass.unwrap_or(d.atomic_mass),
            probe_dipole: v.probe_dipole.unwrap_or(d.probe_dipole),
            intensity: v.intensity.unwrap_or(d.intensity),
        };
        vapor.validate().map_err(|e| key_error("vapor", e))?;

        let theta = match &self.grid.theta {
            None => AngleGrid::parse(DEFAULT_THETA),
            Some(GridSpec::Text(t)) => AngleGrid::parse(t),
            Some(GridSpec::Angles(a)) => AngleGrid::from_list(a.clone()),
            Some(GridSpec::Frequencies(_)) => Err("angles are plain numbers in degrees".into()),
        }
        .map_err(|e| key_error("grid.theta", e))?;
        let detuning = match &self.grid.detuning {
            None => DetuningGrid::parse(DEFAULT_DETUNING),
            Some(GridSpec::Text(t)) => DetuningGrid::parse(t),
            Some(GridSpec::Frequencies(l)) => DetuningGrid::from_list(l.clone()),
            Some(GridSpec::Angles(a)) if a.is_empty() => Err("detuning list is empty".into()),
            Some(GridSpec::Angles(_)) => Err("detunings need unit tags, e.g. \"1MHz\"".into()),
        }
        .map_err(|e| key_error("grid.detuning", e))?;

        let doppler = self.doppler.unwrap_or_default();
        let solver = self.solver.unwrap_or_default();
        if solver == SolverKind::Full && doppler == Doppler::Exact {
            return Err(key_error(
                "solver",
                "the full solver needs `doppler.method` = \"quadrature\" or \"off\"",
            ));
        }
        let sweep = SweepConfig {
            ladder: preset.ladder(),
            probe_rabi,
            probe_detuning: freq_or(f.probe_detuning, 0.0),
            probe_polarization,
            coupling_rabi,
            coupling_polarization,
            rf_rabi,
            rf_detuning: freq_or(f.rf_detuning, 0.0),
            rates,
            vapor,
            doppler,
            solver,
            theta_deg: theta.values().map_err(|e| key_error("grid.theta", e))?,
            detuning: detuning.values().map_err(|e| key_error("grid.detuning", e))?,
        };
        sweep.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let formats = self
            .output
            .formats
            .clone()
            .unwrap_or_else(|| vec![Format::Tsv, Format::Json]);
        if formats.is_empty() {
            return Err(key_error("output.formats", "needs at least one of \"tsv\", \"json\""));
        }
        Ok(Scenario {
            preset,
            sweep,
            theta,
            detuning,
            output_dir: self.output.dir.clone().unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into()),
            formats,
        })
    }
}

impl Scenario {
    /// The scenario with every value explicit; resolving it again gives the
    /// same scenario bit for bit.
    pub fn echo(&self) -> ScenarioFile {
        let s = &self.sweep;
        let r = &s.rates;
        let v = &s.vapor;
        ScenarioFile {
            preset: Some(self.preset.name().into()),
            solver: Some(s.solver),
            fields: FieldsSection {
                probe_rabi: Some(Freq(s.probe_rabi)),
                probe_detuning: Some(Freq(s.probe_detuning)),
                probe_polarization: Some(PolarizationSpec::echo(&s.probe_polarization)),
                coupling_rabi: Some(Freq(s.coupling_rabi)),
                coupling_polarization: Some(PolarizationSpec::echo(&s.coupling_polarization)),
                rf_rabi: Some(Freq(s.rf_rabi)),
                rf_detuning: Some(Freq(s.rf_detuning)),
            },
            rates: RatesSection {
                intermediate: Some(Freq(r.intermediate)),
                transit: Some(Freq(r.transit)),
                collision: Some(Freq(r.collision)),
                r1_radiative: Some(Freq(r.r1_radiative)),
                r2_radiative: Some(Freq(r.r2_radiative)),
                dummy: r.dummy.map(Freq),
            },
            vapor: VaporSection {
                density: Some(v.density),
                length: Some(v.length),
                temperature: Some(v.temperature),
                probe_wavelength: Some(v.probe_wavelength),
                coupling_wavelength: Some(v.coupling_wavelength),
                atomic_mass: Some(v.atomic_mass),
                probe_dipole: Some(v.probe_dipole),
                intensity: Some(v.intensity),
            },
            doppler: Some(s.doppler),
            grid: GridSection {
                theta: Some(self.theta.to_spec()),
                detuning: Some(self.detuning.to_spec()),
            },
            output: OutputSection {
                dir: Some(self.output_dir.clone()),
                formats: Some(self.formats.clone()),
            },
        }
    }

    pub fn echo_toml(&self) -> String {
        toml::to_string(&self.echo()).expect("scenario echo is always representable in TOML")
    }
}

/// Annotated scenario printed by `rydpol schema`. Every key is optional.
pub const SCHEMA: &str = r#"# rydpol scenario file (TOML). Every key is optional; the values shown
# are the defaults. Unknown keys are rejected.
#
# Frequencies are strings with a unit tag. Hz, kHz, MHz and GHz are cyclic
# and are multiplied by 2π; "rad/s" (or "/s") is angular. A "2π×" or "2pi*"
# prefix on a cyclic value is accepted and changes nothing.
# Angles are in degrees.

# type1 | type2 | model_atom
preset = "type1"
# weak_probe | full (full needs doppler.method = "quadrature" or "off")
solver = "weak_probe"

[fields]
probe_rabi = "0.3035MHz"
probe_detuning = "0MHz"
# [x, y, z], [[re, im], [re, im], [re, im]] or { theta_deg = ... } (z-y plane)
probe_polarization = [0.0, 0.0, 1.0]
coupling_rabi = "1MHz"
coupling_polarization = [0.0, 0.0, 1.0]
# Rabi frequency of the most strongly coupled Rydberg pair
rf_rabi = "10MHz"
rf_detuning = "0MHz"

# Decay rates, with frequency tags ("1MHz" means 2π × 1e6 per second).
[rates]
intermediate = "6.07MHz"
transit = "50kHz"
collision = "0Hz"
r1_radiative = "10kHz"
r2_radiative = "10kHz"
# dummy = "6.07GHz"   # default: 1000 × the fastest other rate

# SI units.
[vapor]
density = 1e16            # m^-3
length = 0.01             # m
temperature = 300.0       # K
probe_wavelength = 780.241e-9
coupling_wavelength = 480e-9
atomic_mass = 86.909      # u
probe_dipole = 3.584e-29  # C m
intensity = 1.0

# method = "exact" | "off" | "quadrature" (with n_points, cutoff_sigmas)
[doppler]
method = "exact"

# theta: "start:stop:step" in degrees (inclusive) or a list of numbers
# detuning: "start:stop:count" with unit tags, or a list of tagged strings
[grid]
theta = "0:355:5"
detuning = "-60MHz:60MHz:201"

[output]
dir = "rydpol-out"
formats = ["tsv", "json"]
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let s = parse("").unwrap().resolve().unwrap();
        assert_eq!(s.preset, Preset::Type1);
        assert_eq!(s.sweep.theta_deg.len(), 72);
        assert_eq!(s.sweep.detuning.len(), 201);
        assert_eq!(s.sweep.doppler, Doppler::Exact);
        assert_eq!(s.sweep.rf_rabi, 10.0 * MHZ);
    }

    #[test]
    fn schema_template_is_a_valid_default_config() {
        let from_schema = parse(SCHEMA).unwrap().resolve().unwrap();
        let defaults = parse("").unwrap().resolve().unwrap();
        assert_eq!(from_schema.sweep.rates, defaults.sweep.rates);
        assert_eq!(from_schema.sweep.vapor, defaults.sweep.vapor);
        assert_eq!(from_schema.sweep.theta_deg, defaults.sweep.theta_deg);
        assert_eq!(from_schema.sweep.detuning, defaults.sweep.detuning);
        assert!((from_schema.sweep.probe_rabi - defaults.sweep.probe_rabi).abs() < 1e-3 * defaults.sweep.probe_rabi);
    }

    #[test]
    fn echo_resolves_to_the_same_scenario() {
        let text = r#"
            preset = "type2"
            solver = "full"
            [fields]
            rf_rabi = "2π×7.5MHz"
            probe_polarization = { theta_deg = 30 }
            coupling_polarization = [[1, 0], [0, 1], [0, 0]]
            [rates]
            dummy = "1GHz"
            [doppler]
            method = "quadrature"
            n_points = 11
            cutoff_sigmas = 3.0
            [grid]
            theta = [0, 12.5, 90]
            detuning = ["-1MHz", "0Hz", "2.5e6rad/s"]
        "#;
        let s = parse(text).unwrap().resolve().unwrap();
        let again = parse(&s.echo_toml()).unwrap().resolve().unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        let e = parse("[fields]\nrf_rabbi = \"1MHz\"\n").unwrap_err();
        assert!(e.contains("rf_rabbi"), "{e}");
        let e = parse("[fields]\nrf_rabi = \"10\"\n").unwrap_err();
        assert!(e.starts_with("`fields.rf_rabi`"), "{e}");
        assert!(e.contains("unit tag"), "{e}");
        let e =
            parse("[doppler]\nmethod = \"quadrature\"\nn_points = 5\ncutoff_sigmas = 4.0\nextra = 1\n").unwrap_err();
        assert!(e.contains("extra"), "{e}");
    }

    #[test]
    fn invalid_values_name_their_key() {
        let msg = |text: &str| match parse(text).unwrap().resolve() {
            Err(CliError::Config(m)) => m,
            other => panic!("{other:?}"),
        };
        assert!(msg("preset = \"type3\"").contains("type1, type2, model_atom"));
        assert!(msg("[fields]\ncoupling_rabi = \"-1MHz\"").contains("fields.coupling_rabi"));
        assert!(msg("[rates]\ntransit = \"-1kHz\"").contains("rates.transit"));
        assert!(msg("[vapor]\nlength = 0.0").contains("length"));
        assert!(msg("[grid]\ntheta = \"0:90:0\"").contains("grid.theta"));
        assert!(msg("[grid]\ndetuning = [1, 2]").contains("unit tags"));
        assert!(msg("solver = \"full\"").contains("doppler.method"));
        assert!(msg("[fields]\nprobe_polarization = [0, 0, 0]").contains("fields.probe_polarization"));
        assert!(msg("[output]\nformats = []").contains("output.formats"));
    }

    #[test]
    fn polarization_forms() {
        let p = PolarizationSpec::Real([0.0, 3.0, 4.0]).resolve().unwrap();
        assert!((p.ey.re - 0.6).abs() < 1e-15 && (p.ez.re - 0.8).abs() < 1e-15);
        let a = PolarizationSpec::Angle { theta_deg: 90.0 }.resolve().unwrap();
        assert!((a.ey.re - 1.0).abs() < 1e-15 && a.ez.re.abs() < 1e-15);
    }
}
