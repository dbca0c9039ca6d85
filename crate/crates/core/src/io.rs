//! JSON and CSV input/output: map and process files, report envelopes and
//! fixed-precision number formatting.

use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::maps::{invariant_state, DensityMatrix, KrausMap, MapFile};
use crate::models::{
    dephasing_map, lindblad_step, multi_reservoir_step, projective_measurement, thermal_qubit_map, unitary_map,
    Reservoir,
};
use crate::numerics::{basis_vector, ComplexMatrix, C64};
use crate::potential::SymmetryOp;
use crate::process::{HistogramBin, ProcessSpec, ProcessStep};
use crate::tolerance::Tolerances;

pub const SCHEMA_VERSION: u32 = 1;

/// Pretty JSON with every float written as `{:.16e}` (17 significant digits).
/// Non-finite floats become `null`.
pub struct FixedPrecision {
    inner: PrettyFormatter<'static>,
}

impl Default for FixedPrecision {
    fn default() -> Self {
        Self {
            inner: PrettyFormatter::with_indent(b"  "),
        }
    }
}

impl Formatter for FixedPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedPrecision::default());
    value.serialize(&mut ser).expect("report serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("utf-8 json")
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    tolerances: &'a Tolerances,
    #[serde(flatten)]
    body: &'a T,
}

/// A report object carrying the schema version, the command name and the
/// full tolerance configuration.
pub fn report_json<T: Serialize>(command: &str, tol: &Tolerances, body: &T) -> String {
    to_json(&Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        tolerances: tol,
        body,
    })
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_left,bin_right,probability\n");
    for b in bins {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            b.bin_left, b.bin_right, b.probability
        ));
    }
    out
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_json(&text).map_err(|e| match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

pub fn read_map(path: &Path) -> Result<KrausMap> {
    read_json::<MapFile>(path)?.into_map()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryFile {
    Entropic {
        initial_state: ComplexMatrix,
    },
    Equilibrium {
        beta: f64,
        h_initial: ComplexMatrix,
        h_final: ComplexMatrix,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryFile {
    pub matrix: ComplexMatrix,
    pub antiunitary: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirFile {
    pub lindblads: Vec<ComplexMatrix>,
    pub pi: ComplexMatrix,
    #[serde(default)]
    pub beta: Option<f64>,
}

/// One entry of a process file's `steps` list: an explicit map (`map` or
/// `map_file`) or a named `model` with its parameters.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepFile {
    pub map_file: Option<PathBuf>,
    pub map: Option<MapFile>,
    pub model: Option<String>,
    pub beta_omega: Option<f64>,
    pub gamma: Option<f64>,
    pub matrix: Option<ComplexMatrix>,
    pub basis: Option<Vec<Vec<[f64; 2]>>>,
    pub dim: Option<usize>,
    pub strength: Option<f64>,
    pub hamiltonian: Option<ComplexMatrix>,
    pub lindblads: Option<Vec<ComplexMatrix>>,
    pub dt: Option<f64>,
    pub reservoirs: Option<Vec<ReservoirFile>>,
    /// Invariant state to classify against.
    pub pi: Option<ComplexMatrix>,
    /// Classify against `1/N`.
    pub unital: Option<bool>,
    pub reservoir_beta: Option<f64>,
    pub repeat: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessFile {
    pub boundary: BoundaryFile,
    #[serde(default)]
    pub symmetry: Option<SymmetryFile>,
    pub steps: Vec<StepFile>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub bin_width: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ResolvedProcess {
    pub spec: ProcessSpec,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub bin_width: Option<f64>,
}

fn require<T: Clone>(value: &Option<T>, field: &str, model: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::InvalidParameter(format!("model {model} needs `{field}`")))
}

fn basis_of(step: &StepFile, model: &str) -> Result<Vec<Vec<C64>>> {
    match (&step.basis, step.dim) {
        (Some(b), _) => Ok(b
            .iter()
            .map(|v| v.iter().map(|&[re, im]| C64::new(re, im)).collect())
            .collect()),
        (None, Some(n)) => Ok((0..n).map(|i| basis_vector(n, i)).collect()),
        (None, None) => Err(Error::InvalidParameter(format!("model {model} needs `basis` or `dim`"))),
    }
}

fn classify(map: KrausMap, step: &StepFile, default_unital: bool, tol: &Tolerances) -> Result<ProcessStep> {
    let n = map.dim();
    let pi = match (&step.pi, step.unital.unwrap_or(default_unital)) {
        (Some(m), _) => DensityMatrix::new(m.clone(), tol)?,
        (None, true) => DensityMatrix::maximally_mixed(n),
        (None, false) => invariant_state(&map, tol)?,
    };
    ProcessStep::new(map, &pi, tol)
}

fn resolve_step(step: &StepFile, base: &Path, tol: &Tolerances) -> Result<Vec<ProcessStep>> {
    let sources = [step.map_file.is_some(), step.map.is_some(), step.model.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(Error::InvalidParameter(
            "each step needs exactly one of `map_file`, `map` or `model`".into(),
        ));
    }
    let mut steps = if let Some(path) = &step.map_file {
        let map = read_map(&base.join(path))?;
        vec![classify(checked(map, tol)?, step, false, tol)?]
    } else if let Some(file) = &step.map {
        vec![classify(checked(file.clone().into_map()?, tol)?, step, false, tol)?]
    } else {
        let model = step.model.as_deref().unwrap();
        match model {
            "thermal_qubit" => {
                let bw = require(&step.beta_omega, "beta_omega", model)?;
                let map = thermal_qubit_map(bw, require(&step.gamma, "gamma", model)?, tol)?;
                let p = 1.0 / (1.0 + (-bw).exp());
                let pi = match &step.pi {
                    Some(m) => DensityMatrix::new(m.clone(), tol)?,
                    None => DensityMatrix::diagonal(&[p, 1.0 - p], tol)?,
                };
                vec![ProcessStep::new(map, &pi, tol)?]
            }
            "unitary" => vec![classify(
                unitary_map(require(&step.matrix, "matrix", model)?, tol)?,
                step,
                true,
                tol,
            )?],
            "projective_measurement" => {
                vec![classify(
                    projective_measurement(&basis_of(step, model)?, tol)?,
                    step,
                    true,
                    tol,
                )?]
            }
            "dephasing" => {
                let s = require(&step.strength, "strength", model)?;
                vec![classify(
                    dephasing_map(&basis_of(step, model)?, s, tol)?,
                    step,
                    true,
                    tol,
                )?]
            }
            "lindblad" => {
                let h = require(&step.hamiltonian, "hamiltonian", model)?;
                let ls = step.lindblads.clone().unwrap_or_default();
                let d = lindblad_step(&h, &ls, require(&step.dt, "dt", model)?, tol)?;
                vec![classify(d.map, step, false, tol)?]
            }
            "multi_reservoir" => {
                let h = require(&step.hamiltonian, "hamiltonian", model)?;
                let reservoirs = require(&step.reservoirs, "reservoirs", model)?
                    .into_iter()
                    .map(|r| {
                        Ok(Reservoir {
                            lindblads: r.lindblads,
                            pi: DensityMatrix::new(r.pi, tol)?,
                            beta: r.beta,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                multi_reservoir_step(&h, &reservoirs, require(&step.dt, "dt", model)?, tol)?
            }
            other => return Err(Error::InvalidParameter(format!("unknown model `{other}`"))),
        }
    };
    if let Some(beta) = step.reservoir_beta {
        for s in &mut steps {
            s.reservoir_beta = Some(beta);
        }
    }
    let repeat = step.repeat.unwrap_or(1);
    Ok((0..repeat).flat_map(|_| steps.clone()).collect())
}

fn checked(map: KrausMap, tol: &Tolerances) -> Result<KrausMap> {
    let report = crate::maps::validate_cptp(&map, tol);
    if !report.passed {
        return Err(Error::NotTracePreserving {
            deviation: report.tp_deviation,
            tolerance: report.tolerance,
        });
    }
    Ok(map)
}

/// Builds the process spec; `map_file` paths are relative to `base`.
pub fn resolve_process(file: &ProcessFile, base: &Path, tol: &Tolerances) -> Result<ResolvedProcess> {
    let mut steps = Vec::new();
    for s in &file.steps {
        steps.extend(resolve_step(s, base, tol)?);
    }
    let n = match &file.boundary {
        BoundaryFile::Entropic { initial_state } => initial_state.rows(),
        BoundaryFile::Equilibrium { h_initial, .. } => h_initial.rows(),
    };
    let symmetry = match &file.symmetry {
        Some(s) => SymmetryOp::new(s.matrix.clone(), s.antiunitary)?,
        None => SymmetryOp::time_reversal(n),
    };
    let spec = match &file.boundary {
        BoundaryFile::Entropic { initial_state } => {
            ProcessSpec::entropic(steps, DensityMatrix::new(initial_state.clone(), tol)?, symmetry, tol)?
        }
        BoundaryFile::Equilibrium {
            beta,
            h_initial,
            h_final,
        } => ProcessSpec::equilibrium(steps, *beta, h_initial.clone(), h_final.clone(), symmetry, tol)?,
    };
    Ok(ResolvedProcess {
        spec,
        seed: file.seed,
        samples: file.samples,
        bin_width: file.bin_width,
    })
}

pub fn read_process(path: &Path, tol: &Tolerances) -> Result<ResolvedProcess> {
    let file: ProcessFile = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve_process(&file, base, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::enumerate_trajectories;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json(&[2.0f64 / 3.0, 0.0, f64::NAN]);
        assert!(s.contains("6.6666666666666663e-1"), "{s}");
        assert!(s.contains("0.0000000000000000e0"), "{s}");
        assert!(s.contains("null"));
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], Some(2.0 / 3.0));
    }

    #[test]
    fn report_carries_schema_and_tolerances() {
        #[derive(Serialize)]
        struct Body {
            value: f64,
        }
        let s = report_json("validate", &Tolerances::default(), &Body { value: 1.5 });
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], "validate");
        assert_eq!(v["tolerances"]["tp"], 1e-10);
        assert_eq!(v["value"], 1.5);
    }

    #[test]
    fn parse_errors_keep_position() {
        let err = parse_json::<ProcessFile>("{\n  \"steps\": [\n    {\"model\": 3}\n  ]\n}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn process_file_with_models() {
        let t = Tolerances::default();
        let text = r#"{
            "boundary": {"mode": "entropic", "initial_state": [[[0.9, 0], [0, 0]], [[0, 0], [0.1, 0]]]},
            "steps": [
                {"model": "thermal_qubit", "beta_omega": 0.6931471805599453, "gamma": 0.5, "repeat": 2},
                {"model": "dephasing", "dim": 2, "strength": 0.3},
                {"model": "unitary", "matrix": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]}
            ],
            "seed": 9
        }"#;
        let file: ProcessFile = parse_json(text).unwrap();
        let r = resolve_process(&file, Path::new("."), &t).unwrap();
        assert_eq!(r.spec.steps.len(), 4);
        assert_eq!(r.seed, Some(9));
        let ens = enumerate_trajectories(&r.spec, &t).unwrap();
        assert!((ens.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_fields_and_models_are_rejected() {
        let t = Tolerances::default();
        assert!(parse_json::<ProcessFile>(
            r#"{"boundary": {"mode": "entropic", "initial_state": [[[1,0]]]}, "steps": [], "extra": 1}"#
        )
        .is_err());
        let file: ProcessFile = parse_json(
            r#"{"boundary": {"mode": "entropic", "initial_state": [[[1,0]]]}, "steps": [{"model": "nope"}]}"#,
        )
        .unwrap();
        assert!(resolve_process(&file, Path::new("."), &t).is_err());
        let both: ProcessFile = parse_json(
            r#"{"boundary": {"mode": "entropic", "initial_state": [[[1,0]]]}, "steps": [{"model": "unitary", "map_file": "x.json"}]}"#,
        )
        .unwrap();
        assert!(resolve_process(&both, Path::new("."), &t).is_err());
    }

    #[test]
    fn csv_layout() {
        let csv = histogram_csv(&[HistogramBin {
            bin_left: -0.05,
            bin_right: 0.05,
            probability: 1.0,
        }]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("bin_left,bin_right,probability"));
        assert_eq!(
            lines.next(),
            Some("-5.0000000000000003e-2,5.0000000000000003e-2,1.0000000000000000e0")
        );
    }
}
