//! Command-line front end.
//!
//! Settings come from flags, then from an optional `--config` file of
//! `key = value` lines (keys are the long flag names), then from defaults.
//! Exit codes: 0 success, 1 numerical failure, 2 input or I/O error. Errors
//! are also reported on stderr as a JSON object with a `kind` field.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::circuit::{build_upccd, export_openqasm, terms_from_amplitudes, upccd_state, GateCounts, UpccdTerm};
use crate::error::{Error, Result};
use crate::exactref::{rotate_determinant, singlet_sector_ground_state, CiVector, GroundState, SlaterDeterminant};
use crate::integrals::{core_hamiltonian_basis, hubbard_integrals, parse_fcidump, Boundary, HubbardSpec, IntegralSet};
use crate::linalg::dot;
use crate::orbital_opt::{optimize_orbitals, trace_csv, OoConfig, OoPccdResult};
use crate::pairspace::{
    overlap_with_ci, parse_amplitudes, pccd_expand, solve_pccd, threshold_amplitudes, write_amplitudes,
    AmplitudeMatrix, PairStateVector, PccdSolution,
};
use crate::qpe::{
    canonical_qpe, histogram_csv, iterative_qpe, qpe_distribution, EvolutionSpec, QpeResult, Representation,
    RunMetadata, DEFAULT_SEED,
};
use crate::report::{field, round10};

#[derive(Parser, Debug)]
#[command(name = "upccd", version, about = "Paired coupled cluster state preparation and phase estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve pCCD (optionally with orbital optimization) and write amplitudes.
    Pccd(Common),
    /// Prepare the UpCCD state and compare it with the exact ground state.
    Prepare(Common),
    /// Run canonical (and optionally iterative) phase estimation.
    Qpe(Common),
    /// Sweep U for a Hubbard chain, or a list of FCIDUMP files.
    Scan(Common),
    /// Write the decomposed UpCCD circuit as OpenQASM 2.0.
    ExportQasm(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Integrals in FCIDUMP format.
    #[arg(long)]
    fcidump: Option<String>,
    /// Hubbard chain, e.g. `L=6,t=1,U=8` or `L=6,t=1,U=8,pbc`.
    #[arg(long)]
    hubbard: Option<String>,
    /// Orbital basis for Hubbard input: `mo` (default) or `site`.
    #[arg(long)]
    basis: Option<String>,
    /// `key = value` settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Drop amplitudes with |t| below this before building circuits.
    #[arg(long)]
    threshold: Option<String>,
    /// Optimize orbitals before building circuits.
    #[arg(long)]
    oo: bool,
    /// Extra seeded starting rotations for orbital optimization.
    #[arg(long = "oo-restarts")]
    oo_restarts: Option<String>,
    /// Orbitals allowed to rotate, e.g. `2,3,4,5`.
    #[arg(long)]
    active: Option<String>,
    #[arg(long)]
    ancillas: Option<String>,
    #[arg(long = "iqpe-bits")]
    iqpe_bits: Option<String>,
    #[arg(long)]
    shots: Option<String>,
    /// Product-formula steps per unit of tau.
    #[arg(long)]
    trotter: Option<String>,
    /// Exact time evolution instead of the product formula.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Amplitude file (`i a value` lines) used instead of solving pCCD.
    #[arg(long)]
    amplitudes: Option<PathBuf>,
    #[arg(long)]
    norb: Option<String>,
    #[arg(long)]
    npairs: Option<String>,
    /// QPE initial state: `upccd` (default) or `hf`.
    #[arg(long)]
    initial: Option<String>,
    /// QPE working space: `sector` (default) or `pair`.
    #[arg(long)]
    space: Option<String>,
    /// Scan values of U, e.g. `0.5,1,2`.
    #[arg(long = "u-values")]
    u_values: Option<String>,
    /// Scan over FCIDUMP files, comma separated.
    #[arg(long)]
    fcidumps: Option<String>,
}

/// Extra orbital-optimization starts used by the command line. Half-filled
/// Hubbard chains have several oo-pCCD minima and the one reached from the
/// canonical orbitals is not the lowest beyond moderate U.
const DEFAULT_OO_RESTARTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Initial {
    Upccd,
    Hf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Space {
    Sector,
    Pair,
}

#[derive(Debug, Clone)]
enum Input {
    Fcidump(PathBuf),
    Hubbard(HubbardSpec),
    None,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    input: Input,
    site_basis: bool,
    threshold: f64,
    oo: bool,
    oo_config: OoConfig,
    ancillas: usize,
    iqpe_bits: Option<usize>,
    shots: u64,
    trotter: usize,
    exact: bool,
    seed: u64,
    out: PathBuf,
    amplitudes: Option<PathBuf>,
    norb: Option<usize>,
    npairs: Option<usize>,
    initial: Initial,
    space: Space,
    u_values: Vec<f64>,
    fcidumps: Vec<PathBuf>,
}

const KEYS: &[&str] = &[
    "fcidump",
    "hubbard",
    "basis",
    "threshold",
    "oo",
    "active",
    "ancillas",
    "iqpe-bits",
    "shots",
    "trotter",
    "exact",
    "seed",
    "out",
    "amplitudes",
    "norb",
    "npairs",
    "initial",
    "space",
    "u-values",
    "fcidumps",
    "oo-learning-rate",
    "oo-trust-radius",
    "oo-max-iterations",
    "oo-gradient-tolerance",
    "oo-restarts",
];

fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::Parse { line: n + 1, msg: "expected 'key = value'".into() })?;
        let k = k.trim().replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::Parse { line: n + 1, msg: format!("unknown setting '{k}'") });
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::InvalidInput(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidInput(format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(key, s)).collect()
}

/// `L=6,t=1,U=8[,pbc][,N=6]`.
pub fn parse_hubbard(text: &str) -> Result<HubbardSpec> {
    let (mut sites, mut t, mut u, mut n) = (None, 1.0, None, None);
    let mut boundary = Boundary::Open;
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once('=') {
            Some(("L", v)) => sites = Some(parse_num::<usize>("hubbard L", v)?),
            Some(("t", v)) => t = parse_num("hubbard t", v)?,
            Some(("U", v)) => u = Some(parse_num("hubbard U", v)?),
            Some(("N", v)) => n = Some(parse_num::<usize>("hubbard N", v)?),
            None if part == "pbc" => boundary = Boundary::Periodic,
            None if part == "obc" => boundary = Boundary::Open,
            _ => return Err(Error::InvalidInput(format!("hubbard: unrecognized field '{part}'"))),
        }
    }
    let sites = sites.ok_or_else(|| Error::InvalidInput("hubbard: missing L".into()))?;
    let interaction = u.ok_or_else(|| Error::InvalidInput("hubbard: missing U".into()))?;
    let spec = HubbardSpec { sites, hopping: t, interaction, boundary, filling: n.unwrap_or(sites) };
    spec.validate()?;
    Ok(spec)
}

impl RunConfig {
    fn resolve(args: &Common) -> Result<Self> {
        let mut map = match &args.config {
            Some(p) => parse_config_file(&fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        let mut set = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        };
        set("fcidump", &args.fcidump);
        set("hubbard", &args.hubbard);
        set("basis", &args.basis);
        set("threshold", &args.threshold);
        set("active", &args.active);
        set("oo-restarts", &args.oo_restarts);
        set("ancillas", &args.ancillas);
        set("iqpe-bits", &args.iqpe_bits);
        set("shots", &args.shots);
        set("trotter", &args.trotter);
        set("seed", &args.seed);
        set("out", &args.out.as_ref().map(|p| p.display().to_string()));
        set("amplitudes", &args.amplitudes.as_ref().map(|p| p.display().to_string()));
        set("norb", &args.norb);
        set("npairs", &args.npairs);
        set("initial", &args.initial);
        set("space", &args.space);
        set("u-values", &args.u_values);
        set("fcidumps", &args.fcidumps);
        if args.oo {
            map.insert("oo".into(), "true".into());
        }
        if args.exact {
            map.insert("exact".into(), "true".into());
        }
        let get = |k: &str| map.get(k).map(String::as_str);

        let input = match (get("fcidump"), get("hubbard")) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInput("give either --fcidump or --hubbard, not both".into()))
            }
            (Some(p), None) => Input::Fcidump(PathBuf::from(p)),
            (None, Some(h)) => Input::Hubbard(parse_hubbard(h)?),
            (None, None) => Input::None,
        };
        let site_basis = match get("basis").unwrap_or("mo") {
            "mo" => false,
            "site" => true,
            other => return Err(Error::InvalidInput(format!("basis: expected mo or site, got '{other}'"))),
        };
        let threshold: f64 = get("threshold").map_or(Ok(0.0), |v| parse_num("threshold", v))?;
        if !(threshold >= 0.0) {
            return Err(Error::InvalidInput(format!("threshold must be non-negative, got {threshold}")));
        }
        let mut oo_config = OoConfig::default();
        if let Some(v) = get("active") {
            oo_config.active = Some(parse_list("active", v)?);
        }
        if let Some(v) = get("oo-learning-rate") {
            oo_config.learning_rate = parse_num("oo-learning-rate", v)?;
        }
        if let Some(v) = get("oo-trust-radius") {
            oo_config.trust_radius = parse_num("oo-trust-radius", v)?;
        }
        if let Some(v) = get("oo-max-iterations") {
            oo_config.max_iterations = parse_num("oo-max-iterations", v)?;
        }
        if let Some(v) = get("oo-gradient-tolerance") {
            oo_config.gradient_tolerance = parse_num("oo-gradient-tolerance", v)?;
        }
        oo_config.restarts = get("oo-restarts").map_or(Ok(DEFAULT_OO_RESTARTS), |v| parse_num("oo-restarts", v))?;
        let initial = match get("initial").unwrap_or("upccd") {
            "upccd" => Initial::Upccd,
            "hf" => Initial::Hf,
            other => return Err(Error::InvalidInput(format!("initial: expected upccd or hf, got '{other}'"))),
        };
        let space = match get("space").unwrap_or("sector") {
            "sector" => Space::Sector,
            "pair" => Space::Pair,
            other => return Err(Error::InvalidInput(format!("space: expected sector or pair, got '{other}'"))),
        };
        let trotter = get("trotter").map_or(Ok(1), |v| parse_num("trotter", v))?;
        if trotter == 0 {
            return Err(Error::InvalidInput("trotter must be at least 1".into()));
        }
        let mut cfg = Self {
            input,
            site_basis,
            threshold,
            oo: get("oo").map_or(Ok(false), |v| parse_bool("oo", v))?,
            oo_config,
            ancillas: get("ancillas").map_or(Ok(10), |v| parse_num("ancillas", v))?,
            iqpe_bits: get("iqpe-bits").map(|v| parse_num("iqpe-bits", v)).transpose()?,
            shots: get("shots").map_or(Ok(1000), |v| parse_num("shots", v))?,
            trotter,
            exact: get("exact").map_or(Ok(false), |v| parse_bool("exact", v))?,
            seed: get("seed").map_or(Ok(DEFAULT_SEED), |v| parse_num("seed", v))?,
            out: PathBuf::from(get("out").unwrap_or(".")),
            amplitudes: get("amplitudes").map(PathBuf::from),
            norb: get("norb").map(|v| parse_num("norb", v)).transpose()?,
            npairs: get("npairs").map(|v| parse_num("npairs", v)).transpose()?,
            initial,
            space,
            u_values: get("u-values").map_or(Ok(Vec::new()), |v| parse_list("u-values", v))?,
            fcidumps: get("fcidumps").map_or(Vec::new(), |v| {
                v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from).collect()
            }),
        };
        cfg.oo_config.restart_seed = cfg.seed;
        Ok(cfg)
    }

    fn integrals(&self) -> Result<IntegralSet> {
        match &self.input {
            Input::Fcidump(p) => load_fcidump(p),
            Input::Hubbard(spec) => self.hubbard(spec),
            Input::None => Err(Error::InvalidInput("no Hamiltonian given; use --fcidump or --hubbard".into())),
        }
    }

    fn hubbard(&self, spec: &HubbardSpec) -> Result<IntegralSet> {
        let site = hubbard_integrals(spec)?;
        Ok(if self.site_basis { site } else { core_hamiltonian_basis(&site) })
    }
}

fn load_fcidump(p: &Path) -> Result<IntegralSet> {
    parse_fcidump(&fs::read_to_string(p)?)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<()> {
    write(dir, name, &(serde_json::to_string_pretty(value).expect("json serializes") + "\n"))
}

/// pCCD (and orbital optimization when requested) on the configured system.
struct Solved {
    ints: IntegralSet,
    solution: PccdSolution,
    oo: Option<OoPccdResult>,
}

impl Solved {
    /// Orbital rotation from the input orbitals, if any.
    fn rotation(&self) -> Option<DMatrix<f64>> {
        self.oo.as_ref().map(|o| o.rotation.matrix())
    }
}

/// Reference determinant of the input orbitals expressed over `basis`, which
/// lives in the orbitals after `rotation`. Without a rotation this is the
/// reference determinant itself.
fn hartree_fock(norb: usize, npairs: usize, rotation: Option<&DMatrix<f64>>, basis: &[SlaterDeterminant]) -> CiVector {
    let reference = SlaterDeterminant::reference(npairs);
    match rotation {
        Some(c) => rotate_determinant(&reference, c, basis),
        None => {
            let coefficients = basis.iter().map(|d| if *d == reference { 1.0 } else { 0.0 }).collect();
            CiVector { norb, basis: basis.to_vec(), coefficients }
        }
    }
}

fn solve(cfg: &RunConfig, ints: IntegralSet) -> Result<Solved> {
    if cfg.oo {
        let res = optimize_orbitals(&ints, &cfg.oo_config)?;
        Ok(Solved { ints: res.integrals.clone(), solution: res.solution.clone(), oo: Some(res) })
    } else {
        let solution = solve_pccd(&ints)?;
        Ok(Solved { ints, solution, oo: None })
    }
}

fn terms_after_threshold(t: &AmplitudeMatrix, threshold: f64) -> Result<(Vec<UpccdTerm>, usize)> {
    let (kept, survivors) = threshold_amplitudes(t, threshold)?;
    Ok((terms_from_amplitudes(&kept), survivors))
}

fn counts_json(c: &GateCounts) -> Value {
    serde_json::to_value(c).expect("counts serialize")
}

fn cmd_pccd(cfg: &RunConfig) -> Result<String> {
    let solved = solve(cfg, cfg.integrals()?)?;
    let t = &solved.solution.amplitudes;
    let (terms, survivors) = terms_after_threshold(t, cfg.threshold)?;
    let counts = build_upccd(&terms, t.norb, t.npairs)?.counts();
    write(&cfg.out, "amplitudes.txt", &write_amplitudes(t))?;
    let mut report = json!({
        "energy": round10(solved.solution.energy),
        "residual": round10(solved.solution.residual_norm),
        "iterations": solved.solution.iterations,
        "norb": solved.ints.norb,
        "npairs": solved.ints.npairs(),
        "threshold": round10(cfg.threshold),
        "survivors": survivors,
        "gate_counts": counts_json(&counts),
    });
    if let Some(oo) = &solved.oo {
        write(&cfg.out, "oo_trace.csv", &trace_csv(&oo.trace))?;
        report["orbital_optimization"] = json!({
            "converged": oo.converged,
            "iterations": oo.iterations,
            "gradient_norm": round10(oo.gradient_norm),
            "initial_energy": round10(oo.energy_trace[0]),
        });
    }
    write_json(&cfg.out, "pccd.json", &report)?;
    Ok(format!(
        "pccd energy {} after {} iterations; {survivors} amplitudes at threshold {}\n",
        field(solved.solution.energy),
        solved.solution.iterations,
        field(cfg.threshold)
    ))
}

fn state_map(state: &PairStateVector) -> Value {
    let mut m = serde_json::Map::new();
    for (det, c) in state.iter() {
        if c != 0.0 {
            m.insert(det.ket(state.norb), json!(round10(c)));
        }
    }
    Value::Object(m)
}

/// Amplitudes from `--amplitudes`, with sizes from the file header or flags.
fn amplitudes_from_file(cfg: &RunConfig, path: &Path) -> Result<AmplitudeMatrix> {
    let file = parse_amplitudes(&fs::read_to_string(path)?)?;
    let norb = cfg.norb.or(file.norb).ok_or_else(|| Error::InvalidInput("amplitude file needs --norb".into()))?;
    let npairs =
        cfg.npairs.or(file.npairs).ok_or_else(|| Error::InvalidInput("amplitude file needs --npairs".into()))?;
    AmplitudeMatrix::from_entries(norb, npairs, &file.entries)
}

struct Prepared {
    pccd_energy: Option<f64>,
    exact: Option<GroundState>,
    pccd_state: PairStateVector,
    upccd: PairStateVector,
    upccd_fidelity: Option<f64>,
    hf_fidelity: Option<f64>,
    pccd_upccd_overlap: f64,
    survivors: usize,
    counts: GateCounts,
    terms: Vec<UpccdTerm>,
}

fn prepare(cfg: &RunConfig, ints: Option<IntegralSet>) -> Result<Prepared> {
    let (amps, pccd_energy, ints, rotation) = match (&cfg.amplitudes, ints) {
        (Some(p), ints) => (amplitudes_from_file(cfg, p)?, None, ints, None),
        (None, Some(ints)) => {
            let s = solve(cfg, ints)?;
            let rotation = s.rotation();
            (s.solution.amplitudes, Some(s.solution.energy), Some(s.ints), rotation)
        }
        (None, None) => return Err(Error::InvalidInput("give a Hamiltonian or --amplitudes".into())),
    };
    let (terms, survivors) = terms_after_threshold(&amps, cfg.threshold)?;
    let circuit = build_upccd(&terms, amps.norb, amps.npairs)?;
    let upccd = upccd_state(&terms, amps.norb, amps.npairs)?;
    let pccd_state = pccd_expand(&amps).normalized();
    let pccd_upccd_overlap = pccd_state.overlap(&upccd);
    let mut prepared = Prepared {
        pccd_energy,
        exact: None,
        pccd_state,
        upccd,
        upccd_fidelity: None,
        hf_fidelity: None,
        pccd_upccd_overlap,
        survivors,
        counts: circuit.counts(),
        terms,
    };
    if let Some(ints) = ints {
        if (ints.norb, ints.npairs()) != (amps.norb, amps.npairs) {
            return Err(Error::InvalidInput("amplitudes do not match the Hamiltonian size".into()));
        }
        let (ham, gs) = singlet_sector_ground_state(&ints)?;
        let hf = hartree_fock(amps.norb, amps.npairs, rotation.as_ref(), &ham.basis);
        prepared.upccd_fidelity = Some(overlap_with_ci(&prepared.upccd, &gs.state));
        prepared.hf_fidelity = Some((dot(&hf.coefficients, &gs.state.coefficients) / gs.state.norm()).abs().min(1.0));
        prepared.exact = Some(gs);
    }
    Ok(prepared)
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, |v| json!(round10(v)))
}

fn cmd_prepare(cfg: &RunConfig) -> Result<String> {
    let ints = match cfg.input {
        Input::None => None,
        _ => Some(cfg.integrals()?),
    };
    let p = prepare(cfg, ints)?;
    let circuit = build_upccd(&p.terms, p.upccd.norb, p.upccd.npairs)?;
    write(&cfg.out, "circuit.qasm", &export_openqasm(&circuit.decompose())?)?;
    write_json(
        &cfg.out,
        "fidelity.json",
        &json!({
            "upccd_vs_exact": opt(p.upccd_fidelity),
            "hf_vs_exact": opt(p.hf_fidelity),
            "pccd_vs_upccd": round10(p.pccd_upccd_overlap),
            "exact_energy": opt(p.exact.as_ref().map(|g| g.energy)),
            "exact_degenerate": p.exact.as_ref().map(|g| g.degenerate),
            "pccd_energy": opt(p.pccd_energy),
            "survivors": p.survivors,
            "gate_counts": counts_json(&p.counts),
        }),
    )?;
    write_json(
        &cfg.out,
        "state.json",
        &json!({
            "norb": p.upccd.norb,
            "npairs": p.upccd.npairs,
            "upccd": state_map(&p.upccd),
            "pccd": state_map(&p.pccd_state),
        }),
    )?;
    let mut msg = format!("pccd/upccd overlap {}\n", field(p.pccd_upccd_overlap));
    if let (Some(u), Some(h)) = (p.upccd_fidelity, p.hf_fidelity) {
        let _ = writeln!(msg, "fidelity with exact ground state: upccd {} hf {}", field(u), field(h));
    }
    Ok(msg)
}

fn cmd_export_qasm(cfg: &RunConfig) -> Result<String> {
    let amps = match &cfg.amplitudes {
        Some(p) => amplitudes_from_file(cfg, p)?,
        None => solve(cfg, cfg.integrals()?)?.solution.amplitudes,
    };
    let (terms, _) = terms_after_threshold(&amps, cfg.threshold)?;
    let circuit = build_upccd(&terms, amps.norb, amps.npairs)?;
    write(&cfg.out, "circuit.qasm", &export_openqasm(&circuit.decompose())?)?;
    Ok(format!("wrote {} gates on {} qubits\n", circuit.gates().len(), circuit.n_qubits))
}

fn cmd_qpe(cfg: &RunConfig) -> Result<String> {
    let ints = cfg.integrals()?;
    let solved = solve(cfg, ints)?;
    let amps = &solved.solution.amplitudes;
    let (terms, survivors) = terms_after_threshold(amps, cfg.threshold)?;
    let upccd = upccd_state(&terms, amps.norb, amps.npairs)?;

    let mut spec = match cfg.space {
        Space::Sector => EvolutionSpec::sector(&solved.ints, cfg.trotter)?,
        Space::Pair => EvolutionSpec::pair_space(&solved.ints, cfg.trotter)?,
    };
    if cfg.exact {
        spec = spec.exact();
    }
    let psi_upccd = spec.prepare_pair(&upccd)?;
    // the reference of the input orbitals; after orbital optimization it has
    // singly occupied components, so only the sector space can hold it
    let psi_hf = match (solved.rotation(), &spec.representation) {
        (None, _) => Some(spec.prepare_pair(&PairStateVector::reference(amps.norb, amps.npairs))?),
        (Some(c), Representation::Sector(sector)) => {
            Some(spec.prepare_ci(&hartree_fock(amps.norb, amps.npairs, Some(&c), &sector.basis))?)
        }
        (Some(_), _) => None,
    };
    let psi = match cfg.initial {
        Initial::Upccd => &psi_upccd,
        Initial::Hf => psi_hf.as_ref().ok_or_else(|| {
            Error::InvalidInput("the input-orbital reference needs --space sector after orbital optimization".into())
        })?,
    };

    let ground = spec.spectrum()?[0];
    let ground_bin = spec.energy_bin(ground, cfg.ancillas);
    let res = canonical_qpe(psi, &spec, cfg.ancillas, cfg.shots, cfg.seed)?;
    write(&cfg.out, "histogram.csv", &histogram_csv(&res, &spec))?;

    let mass_upccd = qpe_distribution(&psi_upccd, &spec, cfg.ancillas)?[ground_bin];
    let mass_hf = match &psi_hf {
        Some(v) => Some(qpe_distribution(v, &spec, cfg.ancillas)?[ground_bin]),
        None => None,
    };

    let mut conv = String::from("method,bits,energy_estimate,abs_error,ground_bin_mass\n");
    for n in 1..=cfg.ancillas {
        let r = canonical_qpe(psi, &spec, n, cfg.shots, cfg.seed)?;
        let gb = spec.energy_bin(ground, n);
        convergence_row(&mut conv, "canonical", &r, ground, r.mass(gb));
    }
    let mut iqpe_json = Value::Null;
    if let Some(k) = cfg.iqpe_bits {
        for bits in 1..=k {
            let r = iterative_qpe(psi, &spec, bits, cfg.shots, cfg.seed)?;
            convergence_row(&mut conv, "iterative", &r, ground, f64::NAN);
        }
        let r = iterative_qpe(psi, &spec, k, cfg.shots, cfg.seed)?;
        iqpe_json = json!({
            "bits": k,
            "modal_bin": r.modal_bin,
            "phase": round10(r.modal_phase),
            "energy_estimate": round10(r.energy_estimate),
            "bit_votes": r.bit_votes,
        });
    }
    write(&cfg.out, "convergence.csv", &conv)?;

    let meta = RunMetadata::new("canonical", cfg.seed, &spec, &res);
    write_json(
        &cfg.out,
        "qpe.json",
        &json!({
            "metadata": meta,
            "initial": match cfg.initial { Initial::Upccd => "upccd", Initial::Hf => "hf" },
            "space": match cfg.space { Space::Sector => "sector", Space::Pair => "pair" },
            "ground_energy": round10(ground),
            "ground_bin": ground_bin,
            "ground_bin_mass": { "upccd": round10(mass_upccd), "hf": opt(mass_hf) },
            "ground_bin_mass_ratio": opt(mass_hf.map(|h| mass_upccd / h)),
            "survivors": survivors,
            "iterative": iqpe_json,
        }),
    )?;
    Ok(format!(
        "modal bin {} energy {} (lowest eigenvalue {}); ground-bin mass upccd {} hf {}\n",
        res.modal_bin,
        field(res.energy_estimate),
        field(ground),
        field(mass_upccd),
        mass_hf.map_or("n/a".to_string(), field)
    ))
}

fn convergence_row(out: &mut String, method: &str, r: &QpeResult, ground: f64, mass: f64) {
    let mass = if mass.is_nan() { String::new() } else { field(mass) };
    let _ = writeln!(
        out,
        "{method},{},{},{},{mass}",
        r.n_bits,
        field(r.energy_estimate),
        field((r.energy_estimate - ground).abs())
    );
}

const SCAN_HEADER: &str =
    "parameter,pccd_energy,exact_energy,upccd_fidelity,hf_fidelity,survivors,native_gates,two_qubit_gates,depth,error";

fn scan_row(cfg: &RunConfig, label: &str, ints: Result<IntegralSet>) -> String {
    let label = label.replace(',', ";");
    let row = ints.and_then(|ints| prepare(cfg, Some(ints)));
    match row {
        Ok(p) => {
            let f = |x: Option<f64>| x.map_or(String::new(), field);
            format!(
                "{label},{},{},{},{},{},{},{},{},",
                f(p.pccd_energy),
                f(p.exact.as_ref().map(|g| g.energy)),
                f(p.upccd_fidelity),
                f(p.hf_fidelity),
                p.survivors,
                p.counts.native,
                p.counts.two_qubit,
                p.counts.depth
            )
        }
        Err(e) => format!("{label},,,,,,,,,{}", e.to_string().replace([',', '\n'], ";")),
    }
}

fn cmd_scan(cfg: &RunConfig) -> Result<String> {
    let rows: Vec<String> = if !cfg.u_values.is_empty() {
        let Input::Hubbard(base) = &cfg.input else {
            return Err(Error::InvalidInput("--u-values needs --hubbard".into()));
        };
        cfg.u_values
            .par_iter()
            .map(|&u| {
                let spec = HubbardSpec { interaction: u, ..*base };
                scan_row(cfg, &field(u), cfg.hubbard(&spec))
            })
            .collect()
    } else if !cfg.fcidumps.is_empty() {
        cfg.fcidumps.par_iter().map(|p| scan_row(cfg, &p.display().to_string(), load_fcidump(p))).collect()
    } else {
        let label = match &cfg.input {
            Input::Hubbard(h) => field(h.interaction),
            Input::Fcidump(p) => p.display().to_string(),
            Input::None => {
                return Err(Error::InvalidInput("scan needs --u-values, --fcidumps or a Hamiltonian".into()))
            }
        };
        vec![scan_row(cfg, &label, cfg.integrals())]
    };
    let failed = rows.iter().filter(|r| !r.ends_with(',')).count();
    let mut csv = format!("{SCAN_HEADER}\n");
    for r in &rows {
        csv.push_str(r);
        csv.push('\n');
    }
    write(&cfg.out, "scan.csv", &csv)?;
    Ok(format!("{} points, {failed} failed\n", rows.len()))
}

fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        "numerical" => 1,
        _ => 2,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (common, f): (&Common, fn(&RunConfig) -> Result<String>) = match &cli.command {
        Command::Pccd(c) => (c, cmd_pccd),
        Command::Prepare(c) => (c, cmd_prepare),
        Command::Qpe(c) => (c, cmd_qpe),
        Command::Scan(c) => (c, cmd_scan),
        Command::ExportQasm(c) => (c, cmd_export_qasm),
    };
    match RunConfig::resolve(common).and_then(|cfg| f(&cfg)) {
        Ok(msg) => {
            print!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("{}", json!({ "kind": e.kind(), "message": e.to_string() }));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hubbard_flag() {
        let h = parse_hubbard("L=6,t=1,U=8").unwrap();
        assert_eq!((h.sites, h.hopping, h.interaction, h.boundary, h.filling), (6, 1.0, 8.0, Boundary::Open, 6));
        assert_eq!(parse_hubbard("L=4,U=2,pbc").unwrap().boundary, Boundary::Periodic);
        assert!(parse_hubbard("L=4").is_err());
        assert!(parse_hubbard("L=4,U=1,x=2").is_err());
        assert!(parse_hubbard("L=3,U=1").is_err());
    }

    #[test]
    fn config_file_and_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# comment\nhubbard = L=4,t=1,U=2\nthreshold = 0.1\nshots=50\n").unwrap();
        let args = Common { config: Some(path.clone()), shots: Some("70".into()), ..Default::default() };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.threshold, 0.1);
        assert_eq!(cfg.shots, 70);
        assert!(matches!(cfg.input, Input::Hubbard(h) if h.sites == 4));
        assert_eq!(cfg.ancillas, 10);

        fs::write(&path, "bogus = 1\n").unwrap();
        let err = RunConfig::resolve(&Common { config: Some(path), ..Default::default() }).unwrap_err();
        assert_eq!(err.kind(), "parse");
    }

    #[test]
    fn bad_values_are_input_errors() {
        let args = Common { threshold: Some("-1".into()), ..Default::default() };
        assert_eq!(RunConfig::resolve(&args).unwrap_err().kind(), "input");
        let args = Common { fcidump: Some("a".into()), hubbard: Some("L=2,U=1".into()), ..Default::default() };
        assert!(RunConfig::resolve(&args).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NoConvergence { iterations: 1, residual: 1.0 }), 1);
        assert_eq!(exit_code(&Error::InvalidInput("x".into())), 2);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 2);
    }
}
