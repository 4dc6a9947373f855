//! Random two-body ensembles: sampling, the primed transformation,
//! multi-N realization runs and their JSON-Lines persistence.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::{Arc, Mutex, OnceLock};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::combinatorics::SystemShape;
use crate::error::{domain, Error, Result};
use crate::fock::enumerate_sector;
use crate::operators::{HamiltonianTemplate, InteractionParams};
use crate::solver::{j_subspace_basis_in, project_onto_j, solve_ground, GroundSolution, JBasis, SolverOptions};
use crate::sparse::SparseSymMatrix;

/// Uniform deviate in the open interval (0, 1) from 64 random bits.
#[inline]
fn open_uniform(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal quantile, algorithm AS 241 (PPND16), relative accuracy ~1e-16.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_5,
        1.331_416_678_917_843_8e2,
        1.971_590_950_306_551_3e3,
        1.373_169_376_550_946e4,
        4.592_195_393_154_987e4,
        6.726_577_092_700_87e4,
        3.343_057_558_358_813e4,
        2.509_080_928_730_122_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091e1,
        6.871_870_074_920_579e2,
        5.394_196_021_424_751e3,
        2.121_379_430_158_66e4,
        3.930_789_580_009_271e4,
        2.872_908_573_572_194_3e4,
        5.226_495_278_852_545e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_5,
        4.630_337_846_156_546,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        2.417_807_251_774_506e-1,
        2.272_384_498_926_918_4e-2,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_759,
        1.676_384_830_183_803_8,
        6.897_673_349_851e-1,
        1.481_039_764_274_800_8e-1,
        1.519_866_656_361_645_7e-2,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_9e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        2.965_605_718_285_048_7e-1,
        2.653_218_952_657_612_4e-2,
        1.242_660_947_388_078_4e-3,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_88e-1,
        1.369_298_809_227_358e-1,
        1.487_536_129_085_061_5e-2,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.044_263_103_389_939_8e-15,
    ];
    fn poly(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }
    assert!(p > 0.0 && p < 1.0, "quantile argument must lie in (0, 1)");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let z = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

/// Counter-based stream of the realization `id`.
pub fn realization_rng(master_seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(id);
    rng
}

/// Standard normal deviates from a generator, by inversion.
pub fn normal_deviate(rng: &mut impl RngCore) -> f64 {
    normal_quantile(open_uniform(rng.next_u64()))
}

/// ℓ+1 independent standard-normal `V_L` for realization `id`.
pub fn sample_interaction(master_seed: u64, id: u64, ell: u32) -> InteractionParams {
    let mut rng = realization_rng(master_seed, id);
    let v = (0..=ell).map(|_| normal_deviate(&mut rng)).collect();
    InteractionParams::new(ell, v).expect("normal deviates are finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimedCoefficients {
    pub m_term: f64,
    pub f_term: f64,
    pub alpha: f64,
    pub gamma: f64,
}

/// Removes the monopole and J² components by the weighted least-squares
/// fit `V'_L = V_L - α - γ(L(L+1) - 2ℓ(ℓ+1))` with weights `2L+1`.
pub fn primed_transform(v: &InteractionParams) -> (InteractionParams, PrimedCoefficients) {
    let ell = v.ell() as f64;
    let x = |l: f64| l * (l + 1.0) - 2.0 * ell * (ell + 1.0);
    let (mut w, mut wv, mut wx, mut wxv) = (0.0, 0.0, 0.0, 0.0);
    for (l, vl) in v.iter() {
        let l = l as f64;
        let weight = 2.0 * l + 1.0;
        w += weight;
        wv += weight * vl;
        wx += weight * x(l);
        wxv += weight * x(l) * vl;
    }
    let m_term = wv / w;
    let f_term = wxv / wx;
    let gamma = 3.0 * (f_term - m_term) / ((2.0 * ell + 3.0) * (ell + 2.0) * (2.0 * ell - 1.0));
    let alpha = m_term - gamma * ell;
    let primed = v
        .values()
        .iter()
        .zip(v.iter())
        .map(|(&vl, (l, _))| vl - alpha - gamma * x(l as f64))
        .collect();
    (
        InteractionParams::new(v.ell(), primed).expect("finite input gives finite output"),
        PrimedCoefficients {
            m_term,
            f_term,
            alpha,
            gamma,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub ell: u32,
    pub n_list: Vec<u32>,
    pub realizations: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub start_id: u64,
    #[serde(default)]
    pub primed: bool,
    #[serde(default)]
    pub store_vectors: bool,
    pub dense_threshold: usize,
    /// Worker threads; 0 lets the pool decide. Output never depends on
    /// it, so it is not persisted.
    #[serde(skip)]
    pub threads: usize,
}

impl EnsembleConfig {
    pub fn new(ell: u32, n_list: Vec<u32>, realizations: u64, master_seed: u64) -> Self {
        Self {
            ell,
            n_list,
            realizations,
            master_seed,
            start_id: 0,
            primed: false,
            store_vectors: false,
            dense_threshold: SolverOptions::default().dense_threshold,
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return domain("at least one realization is required");
        }
        if self.n_list.is_empty() {
            return domain("the particle-number list is empty");
        }
        for &n in &self.n_list {
            if n < 2 {
                return domain(format!("N={n}: at least two bosons are required"));
            }
            SystemShape::new(self.ell, n)?;
        }
        Ok(())
    }

    /// Applies `key=value` settings on top of the current values.
    pub fn apply(&mut self, settings: &BTreeMap<String, String>) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad value for {key}: {value:?}")))
        }
        fn flag(key: &str, value: &str) -> Result<bool> {
            match value.trim() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::Format(format!("bad value for {key}: {value:?}"))),
            }
        }
        for (key, value) in settings {
            match key.as_str() {
                "ell" => self.ell = num(key, value)?,
                "n" | "n_list" => {
                    self.n_list = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| num(key, s))
                        .collect::<Result<_>>()?
                }
                "realizations" => self.realizations = num(key, value)?,
                "seed" | "master_seed" => self.master_seed = num(key, value)?,
                "start_id" => self.start_id = num(key, value)?,
                "primed" => self.primed = flag(key, value)?,
                "store_vectors" => self.store_vectors = flag(key, value)?,
                "dense_threshold" => self.dense_threshold = num(key, value)?,
                "threads" => self.threads = num(key, value)?,
                _ => return Err(Error::Format(format!("unknown config key {key:?}"))),
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(canonical))
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            dense_threshold: self.dense_threshold,
            ..Default::default()
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses flat `key = value` text; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected key=value", lineno + 1)))?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

/// Ground-state result for one particle number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NResult {
    #[serde(deserialize_with = "nullable_f64")]
    pub e0: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub j: Option<u32>,
    pub gap: f64,
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub components: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

impl NResult {
    /// Non-degenerate ground state with a clean spin label.
    pub fn clean_spin(&self) -> Option<u32> {
        if self.degenerate || self.failure.is_some() {
            None
        } else {
            self.j
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub id: u64,
    pub seed: u64,
    pub v: Vec<f64>,
    pub v_primed: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub results: BTreeMap<u32, NResult>,
}

impl RealizationRecord {
    pub fn result(&self, n: u32) -> Option<&NResult> {
        self.results.get(&n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: EnsembleConfig,
    pub code_version: String,
    pub master_seed: u64,
    pub start_id: u64,
    pub end_id: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub output: Option<String>,
    pub config_hash: String,
}

impl RunManifest {
    pub fn new(config: &EnsembleConfig, output: Option<String>) -> Self {
        Self {
            config: config.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.master_seed,
            start_id: config.start_id,
            end_id: config.start_id + config.realizations,
            output,
            config_hash: config.hash(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub records: u64,
    /// Per N: realizations flagged degenerate.
    pub degenerate: BTreeMap<u32, u64>,
    /// Per N: realizations whose solve or spin assignment failed.
    pub failures: BTreeMap<u32, u64>,
    /// Per N: number of ground states with each spin.
    pub spins: BTreeMap<u32, BTreeMap<u32, u64>>,
}

impl RunSummary {
    fn add(&mut self, rec: &RealizationRecord) {
        self.records += 1;
        for (&n, r) in &rec.results {
            if r.degenerate {
                *self.degenerate.entry(n).or_default() += 1;
            }
            if r.failure.is_some() {
                *self.failures.entry(n).or_default() += 1;
            }
            if let Some(j) = r.j {
                *self.spins.entry(n).or_default().entry(j).or_default() += 1;
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestLine {
    manifest: RunManifest,
}

#[derive(Serialize, Deserialize)]
struct SummaryLine {
    summary: RunSummary,
}

/// Non-finite floats are written as `null`; read them back as NaN.
fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Serializes floats with 17 significant digits.
struct PreciseFormatter;

impl serde_json::ser::Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

/// One JSON line with 17-significant-digit floats (no trailing newline).
pub fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

/// Per-N machinery shared by every realization of a run.
struct SectorSetup {
    n: u32,
    template: HamiltonianTemplate,
    j_squared: SparseSymMatrix,
    j_bases: Mutex<BTreeMap<u32, Arc<OnceLock<Option<Arc<JBasis>>>>>>,
}

/// Solves realizations of one ensemble; reusable across ids.
pub struct RealizationSolver {
    ell: u32,
    master_seed: u64,
    primed: bool,
    store_vectors: bool,
    options: SolverOptions,
    sectors: Vec<SectorSetup>,
}

impl RealizationSolver {
    pub fn new(config: &EnsembleConfig) -> Result<Self> {
        config.validate()?;
        let mut sectors = Vec::new();
        for &n in &config.n_list {
            if sectors.iter().any(|s: &SectorSetup| s.n == n) {
                continue;
            }
            let shape = SystemShape::new(config.ell, n)?;
            let basis = Arc::new(enumerate_sector(shape, 0)?);
            let template = HamiltonianTemplate::new(basis)?;
            let j_squared = template.j_squared();
            sectors.push(SectorSetup {
                n,
                template,
                j_squared,
                j_bases: Mutex::new(BTreeMap::new()),
            });
        }
        Ok(Self {
            ell: config.ell,
            master_seed: config.master_seed,
            primed: config.primed,
            store_vectors: config.store_vectors,
            options: config.solver_options(),
            sectors,
        })
    }

    fn sector(&self, n: u32) -> Result<&SectorSetup> {
        self.sectors
            .iter()
            .find(|s| s.n == n)
            .ok_or_else(|| Error::Domain(format!("N={n} is not part of this ensemble")))
    }

    /// Interaction actually diagonalized for `id`, with the drawn values
    /// and the primed coefficients.
    pub fn interaction(&self, id: u64) -> (InteractionParams, InteractionParams, PrimedCoefficients) {
        let v = sample_interaction(self.master_seed, id, self.ell);
        let (vp, coeffs) = primed_transform(&v);
        (v, vp, coeffs)
    }

    /// Ground state for `(id, N)` in the M = 0 sector.
    pub fn ground_state(&self, id: u64, n: u32) -> Result<GroundSolution> {
        let (v, vp, _) = self.interaction(id);
        let setup = self.sector(n)?;
        let h = setup.template.assemble(if self.primed { &vp } else { &v });
        solve_ground(&h, &setup.j_squared, &self.options)
    }

    /// Spin-J basis of the M = 0 sector for `N`, built once and shared.
    pub fn j_basis(&self, n: u32, j: u32) -> Result<Arc<JBasis>> {
        let setup = self.sector(n)?;
        let cell = setup.j_bases.lock().unwrap().entry(j).or_default().clone();
        let built = cell.get_or_init(|| {
            j_subspace_basis_in(
                setup.template.basis().clone(),
                &setup.j_squared,
                j,
                &self.options,
            )
            .ok()
            .map(Arc::new)
        });
        built
            .clone()
            .ok_or_else(|| Error::Domain(format!("no J={j} basis for N={n}")))
    }

    pub fn template(&self, n: u32) -> Result<&HamiltonianTemplate> {
        Ok(&self.sector(n)?.template)
    }

    pub fn j_squared(&self, n: u32) -> Result<&SparseSymMatrix> {
        Ok(&self.sector(n)?.j_squared)
    }

    pub fn solve(&self, id: u64) -> RealizationRecord {
        let (v, vp, coeffs) = self.interaction(id);
        let mut results = BTreeMap::new();
        for setup in &self.sectors {
            let h = setup.template.assemble(if self.primed { &vp } else { &v });
            let res = match solve_ground(&h, &setup.j_squared, &self.options) {
                Ok(g) => self.summarize(setup.n, g),
                Err(err) => failed(&h, &err),
            };
            results.insert(setup.n, res);
        }
        RealizationRecord {
            id,
            seed: self.master_seed,
            v: v.values().to_vec(),
            v_primed: vp.values().to_vec(),
            alpha: coeffs.alpha,
            gamma: coeffs.gamma,
            results,
        }
    }

    fn summarize(&self, n: u32, g: GroundSolution) -> NResult {
        let mut components = None;
        let mut failure = None;
        if self.store_vectors && !g.degenerate {
            match self.j_basis(n, g.spin).and_then(|jb| project_onto_j(&g.vector, &jb)) {
                Ok(c) => components = Some(c),
                Err(err) => failure = Some(format!("projection: {err}")),
            }
        }
        NResult {
            e0: g.energy,
            j: Some(g.spin),
            gap: g.gap,
            degenerate: g.degenerate,
            components,
            failure,
        }
    }
}

fn failed(h: &SparseSymMatrix, err: &Error) -> NResult {
    let tag = match err {
        Error::SpinImpurity { .. } => "spin-impurity",
        Error::NonConvergence { .. } => "non-convergence",
        _ => "solver",
    };
    NResult {
        e0: f64::NAN,
        j: None,
        gap: 0.0,
        degenerate: matches!(err, Error::SpinImpurity { .. }) && h.dim() > 1,
        components: None,
        failure: Some(tag.to_string()),
    }
}

/// Runs the ensemble and writes manifest, records (in id order) and a
/// summary footer as JSON lines.
pub fn run_ensemble<W: Write>(
    config: &EnsembleConfig,
    output: Option<String>,
    out: &mut W,
) -> Result<RunSummary> {
    let solver = RealizationSolver::new(config)?;
    let manifest = RunManifest::new(config, output);
    writeln!(out, "{}", to_json_line(&ManifestLine { manifest })?)?;
    let mut summary = RunSummary {
        config_hash: config.hash(),
        ..Default::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    const CHUNK: u64 = 64;
    let end = config.start_id + config.realizations;
    let mut lo = config.start_id;
    while lo < end {
        let hi = (lo + CHUNK).min(end);
        let records: Vec<RealizationRecord> =
            pool.install(|| (lo..hi).into_par_iter().map(|id| solver.solve(id)).collect());
        for rec in &records {
            summary.add(rec);
            writeln!(out, "{}", to_json_line(rec)?)?;
        }
        lo = hi;
    }
    writeln!(
        out,
        "{}",
        to_json_line(&SummaryLine {
            summary: summary.clone()
        })?
    )?;
    out.flush()?;
    Ok(summary)
}

/// Contents of a JSON-Lines run file.
#[derive(Debug, Clone)]
pub struct RunFile {
    pub manifest: RunManifest,
    pub records: Vec<RealizationRecord>,
    pub summary: Option<RunSummary>,
}

impl RunFile {
    pub fn ell(&self) -> u32 {
        self.manifest.config.ell
    }
}

pub fn read_run<R: Read>(input: R) -> Result<RunFile> {
    let mut manifest = None;
    let mut records = Vec::new();
    let mut summary = None;
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |e: serde_json::Error| Error::Format(format!("line {}: {e}", lineno + 1));
        if line.starts_with("{\"manifest\"") {
            if lineno != 0 {
                return Err(Error::Format(format!("line {}: stray manifest", lineno + 1)));
            }
            manifest = Some(serde_json::from_str::<ManifestLine>(&line).map_err(at)?.manifest);
        } else if line.starts_with("{\"summary\"") {
            summary = Some(serde_json::from_str::<SummaryLine>(&line).map_err(at)?.summary);
        } else {
            records.push(serde_json::from_str(&line).map_err(at)?);
        }
    }
    let manifest = manifest.ok_or_else(|| Error::Format("missing manifest line".into()))?;
    Ok(RunFile {
        manifest,
        records,
        summary,
    })
}
