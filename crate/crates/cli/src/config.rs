//! Run configuration: a TOML file merged under command-line flags.
//!
//! ```toml
//! moduli = "1..4"               # or [1, 2, 3, 4]
//! shifts = ["0.1,-0.05,-0.02"]  # complex triples
//! s = ["0.5", "0.5+2i"]
//! phi = "exp"                   # exp | texp | t2exp | pow:a | bump | bump:lo,hi
//! threads = 4
//! output = "reports.jsonl"
//! dual_cap = 5000
//!
//! [tolerances]                  # any subset
//! voronoi = 1e-3
//!
//! [contour]                     # dual-sum kernel contour
//! sigma = 3.5
//! height = 10.0
//! step = 0.05
//! ```

use std::path::{Path, PathBuf};

use estermann::suites::{SuiteConfig, Tolerances};
use estermann::{ContourSpec, ShiftTriple, TestFunction, C64};
use serde::Deserialize;

use crate::parse;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ModuliSpec {
    List(Vec<u64>),
    Text(String),
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourFile {
    pub sigma: Option<f64>,
    pub height: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub moduli: Option<ModuliSpec>,
    pub shifts: Option<Vec<String>>,
    pub s: Option<Vec<String>>,
    pub phi: Option<String>,
    pub tolerances: Option<Tolerances>,
    pub contour: Option<ContourFile>,
    pub dual_cap: Option<usize>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Verify-time settings after merging; flags win over the file.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub suite: SuiteConfig,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

/// Flag values as given on the command line (all optional).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub moduli: Option<String>,
    pub shifts: Vec<String>,
    pub s: Option<String>,
    pub phi: Option<String>,
    pub tolerances: Vec<(String, f64)>,
    pub contour: ContourFile,
    pub dual_cap: Option<usize>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

pub fn merge(file: FileConfig, flags: Overrides) -> Result<RunConfig, String> {
    let moduli = match (flags.moduli, file.moduli) {
        (Some(text), _) | (None, Some(ModuliSpec::Text(text))) => Some(parse::moduli(&text)?),
        (None, Some(ModuliSpec::List(list))) => {
            if list.contains(&0) {
                return Err("moduli must be at least 1".into());
            }
            Some(list)
        }
        (None, None) => None,
    };
    let shift_texts = if flags.shifts.is_empty() { file.shifts } else { Some(flags.shifts) };
    let shifts: Option<Vec<ShiftTriple>> =
        shift_texts.map(|v| v.iter().map(|t| parse::shifts(t)).collect()).transpose()?;
    let s_values: Option<Vec<C64>> = match (flags.s, file.s) {
        (Some(text), _) => Some(parse::complex_list(&text)?),
        (None, Some(list)) => Some(list.iter().map(|t| parse::complex(t)).collect::<Result<_, _>>()?),
        (None, None) => None,
    };
    let phi: Option<TestFunction> =
        flags.phi.or(file.phi).map(|t| t.parse().map_err(|e: estermann::Error| e.to_string())).transpose()?;

    let mut tolerances = file.tolerances.unwrap_or_default();
    for (name, value) in flags.tolerances {
        set_tolerance(&mut tolerances, &name, value)?;
    }
    tolerances.validate().map_err(|e| e.to_string())?;

    let file_contour = file.contour.unwrap_or_default();
    let sigma = flags.contour.sigma.or(file_contour.sigma);
    let height = flags.contour.height.or(file_contour.height);
    let step = flags.contour.step.or(file_contour.step);
    let contour = match (sigma, height, step) {
        (None, None, None) => None,
        (Some(sigma), height, step) => Some(
            ContourSpec::new(
                sigma,
                height.unwrap_or(ContourSpec::DEFAULT_HEIGHT),
                step.unwrap_or(ContourSpec::DEFAULT_STEP),
            )
            .map_err(|e| e.to_string())?,
        ),
        (None, ..) => return Err("contour height/step overrides need a sigma".into()),
    };

    let threads = flags.threads.or(file.threads);
    if threads == Some(0) {
        return Err("threads must be at least 1".into());
    }
    let dual_cap = flags.dual_cap.or(file.dual_cap);
    if dual_cap == Some(0) {
        return Err("dual_cap must be at least 1".into());
    }
    Ok(RunConfig {
        suite: SuiteConfig { moduli, shifts, s_values, phi, tolerances, contour, dual_cap },
        threads,
        output: flags.output.or(file.output),
    })
}

/// Tolerance keys, as used by `--tol-<key>` and the `[tolerances]` table.
pub const TOLERANCE_KEYS: [&str; 11] = [
    "identities",
    "hurwitz-fe",
    "continuation",
    "polar",
    "polar-h-independence",
    "estermann-fe",
    "voronoi",
    "perron",
    "corollary",
    "even-tau3",
    "kernels",
];

fn set_tolerance(t: &mut Tolerances, name: &str, value: f64) -> Result<(), String> {
    let slot = match name {
        "identities" => &mut t.identities,
        "hurwitz-fe" => &mut t.hurwitz_fe,
        "continuation" => &mut t.continuation,
        "polar" => &mut t.polar,
        "polar-h-independence" => &mut t.polar_h_independence,
        "estermann-fe" => &mut t.estermann_fe,
        "voronoi" => &mut t.voronoi,
        "perron" => &mut t.perron,
        "corollary" => &mut t.corollary,
        "even-tau3" => &mut t.even_tau3,
        "kernels" => &mut t.kernels,
        _ => return Err(format!("unknown tolerance `{name}` (known: {})", TOLERANCE_KEYS.join(", "))),
    };
    *slot = value;
    Ok(())
}
