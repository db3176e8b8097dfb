//! The `odolab` command line, as a library so that tests can drive it
//! without spawning processes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use odolab::groups::{distinguish, f_sequence, inclusion_jk, max_finite_subgroup_order, sd_inv, sd_mul, AutStage};
use odolab::odometer::component_count;
use odolab::oracle;
use odolab::scales::{
    classify, decompose, is_prime_scale, multiplicity_profile, precedes, prime_refine, torsion_subgroup,
    MultiplicityProfile, Scale,
};
use odolab::toeplitz::{self, FillRule, DEFAULT_MIN_TRANSLATES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "odolab/1";

/// Exit status for a usage error (bad flags, malformed input).
pub const EXIT_USAGE: i32 = 2;
/// Exit status for a failed computation or an oracle mismatch.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "odolab",
    version,
    about = "Odometers and Toeplitz subshifts at finite truncation"
)]
pub struct Cli {
    /// Emit JSON instead of the text table.
    #[arg(long, global = true)]
    pub json: bool,
    /// Truncation depth K.
    #[arg(long, global = true, default_value_t = 12)]
    pub depth: usize,
    /// Window length for Toeplitz analyses.
    #[arg(long, global = true, default_value_t = 4096)]
    pub window: usize,
    /// Maximum number of oracle checks per suite.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Read the command from a JSON file instead of the arguments.
    #[arg(long, global = true, value_name = "FILE")]
    pub spec: Option<String>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Multiplicity profile, decomposition and torsion class of a scale.
    Classify(ClassifyArgs),
    /// Equivalence, factor order and distinguishing verdict for two scales.
    Compare(CompareArgs),
    /// Minimal components of +m and the automorphism group of the tower stage.
    Components(ComponentsArgs),
    /// Finite-subgroup growth along a divisibility chain.
    Fgrowth(FgrowthArgs),
    /// Generate a Toeplitz window and analyse its periods.
    Toeplitz(ToeplitzArgs),
    /// Run the brute-force cross-checks.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify(_) => "classify",
            Command::Compare(_) => "compare",
            Command::Components(_) => "components",
            Command::Fgrowth(_) => "fgrowth",
            Command::Toeplitz(_) => "toeplitz",
            Command::Verify(_) => "verify",
        }
    }
}

/// A scale given as JSON (`{"head":[..],"cycle":[..]}` or a profile such as
/// `{"2":"inf","3":1}`) or as `head:cycle` with comma-separated ratios.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleArg {
    pub scale: Scale,
    /// Set when the input was a profile.
    pub profile: Option<MultiplicityProfile>,
}

impl ScaleArg {
    fn from_value(v: &Value) -> Result<Self, String> {
        match v {
            Value::String(s) => s.parse(),
            Value::Object(o) if o.contains_key("cycle") => {
                let scale: Scale = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
                Ok(ScaleArg { scale, profile: None })
            }
            Value::Object(_) => {
                let profile: MultiplicityProfile = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
                let scale = profile.to_scale().map_err(|e| e.to_string())?;
                Ok(ScaleArg {
                    scale,
                    profile: Some(profile),
                })
            }
            other => Err(format!("expected a scale, got {other}")),
        }
    }
}

impl FromStr for ScaleArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        if t.starts_with('{') {
            let v: Value = serde_json::from_str(t).map_err(|e| e.to_string())?;
            return ScaleArg::from_value(&v);
        }
        let list = |part: &str| -> Result<Vec<u64>, String> {
            part.split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| x.parse::<u64>().map_err(|_| format!("bad ratio {x:?}")))
                .collect()
        };
        let (head, cycle) = match t.split_once(':') {
            Some((h, c)) => (list(h)?, list(c)?),
            None => (Vec::new(), list(t)?),
        };
        let scale = Scale::new(head, cycle).map_err(|e| e.to_string())?;
        Ok(ScaleArg { scale, profile: None })
    }
}

impl<'de> Deserialize<'de> for ScaleArg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        ScaleArg::from_value(&v).map_err(serde::de::Error::custom)
    }
}

/// A divisibility chain written `1|2|4` or `1,2,4`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain(pub Vec<u64>);

impl FromStr for Chain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(['|', ','])
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(|x| x.parse::<u64>().map_err(|_| format!("bad level {x:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Chain)
    }
}

impl<'de> Deserialize<'de> for Chain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            Value::Array(items) => items
                .iter()
                .map(|x| {
                    x.as_u64()
                        .ok_or_else(|| serde::de::Error::custom(format!("bad level {x}")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Chain),
            other => Err(serde::de::Error::custom(format!("bad chain {other}"))),
        }
    }
}

#[derive(Args, Debug, Clone, Deserialize)]
pub struct ClassifyArgs {
    pub scale: ScaleArg,
}

#[derive(Args, Debug, Clone, Deserialize)]
pub struct CompareArgs {
    pub a: ScaleArg,
    pub b: ScaleArg,
}

#[derive(Args, Debug, Clone, Deserialize)]
pub struct ComponentsArgs {
    pub scale: ScaleArg,
    pub m: u64,
}

#[derive(Args, Debug, Clone, Deserialize)]
pub struct FgrowthArgs {
    pub scale: ScaleArg,
    pub chain: Chain,
}

#[derive(Args, Debug, Clone, Deserialize)]
pub struct ToeplitzArgs {
    /// `constants`, `words` or a JSON object `{"stages":[...]}`.
    pub rule: FillRule,
    /// Number of filling stages.
    #[arg(long, default_value_t = 10)]
    #[serde(default = "default_stages")]
    pub stages: usize,
    /// Candidate periods for the essential-period test (default: the first
    /// four stage periods).
    #[arg(long)]
    #[serde(default)]
    pub candidates: Option<Chain>,
    /// Report the components of σ^m.
    #[arg(long)]
    #[serde(default)]
    pub m: Option<u64>,
    /// Levels at which to report the lower bound for F.
    #[arg(long)]
    #[serde(default)]
    pub lower_bounds: Option<Chain>,
    /// Words to look for in the window.
    #[arg(long = "contains")]
    #[serde(default)]
    pub contains: Vec<String>,
    /// Minimal number of translates for a residue class to count.
    #[arg(long, default_value_t = DEFAULT_MIN_TRANSLATES)]
    #[serde(default = "default_min_translates")]
    pub min_translates: usize,
    /// Include the window itself in the output.
    #[arg(long)]
    #[serde(default)]
    pub show: bool,
}

fn default_stages() -> usize {
    10
}

fn default_min_translates() -> usize {
    DEFAULT_MIN_TRANSLATES
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Centralizers,
    Orbits,
    Components,
    Groups,
    Tower,
    Subgroups,
    Charts,
    Blockcodes,
    All,
}

#[derive(Args, Debug, Clone, Deserialize)]
pub struct VerifyArgs {
    #[arg(value_enum, default_value_t = Suite::All)]
    #[serde(default = "default_suite")]
    pub suite: Suite,
    /// Largest modulus for the centralizer suite.
    #[arg(long, default_value_t = 16)]
    #[serde(default = "default_max_n")]
    pub max_n: u64,
    /// Random samples for the group suites.
    #[arg(long, default_value_t = 1000)]
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
}

fn default_suite() -> Suite {
    Suite::All
}

fn default_max_n() -> u64 {
    16
}

fn default_samples() -> u64 {
    1000
}

#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub depth: usize,
    pub window: usize,
    pub budget: Option<u64>,
}

/// Outcome of one invocation.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Value,
    pub exit_code: i32,
}

/// The scales used by the corpus suites.
pub fn corpus() -> Vec<Scale> {
    let s = |h: &[u64], c: &[u64]| Scale::new(h.to_vec(), c.to_vec()).expect("corpus scale");
    vec![
        s(&[], &[2]),
        s(&[], &[3]),
        s(&[], &[6]),
        s(&[12], &[5]),
        s(&[9], &[2]),
        s(&[], &[4]),
        s(&[], &[10]),
        s(&[], &[5]),
        s(&[2, 3], &[6]),
        s(&[1, 4], &[3, 2]),
    ]
}

fn big(x: &BigUint) -> Value {
    Value::String(x.to_string())
}

fn scale_json(s: &Scale) -> Value {
    json!({ "head": s.head(), "cycle": s.cycle(), "text": s.to_string() })
}

fn scale_input(a: &ScaleArg) -> Value {
    match &a.profile {
        Some(p) => json!({ "profile": p }),
        None => scale_json(&a.scale),
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

/// Parses the arguments and runs the command. Returns the rendered output
/// and the exit code.
pub fn run<I, T>(args: I) -> (String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            return (e.to_string(), code);
        }
    };
    let settings = Settings {
        depth: cli.depth,
        window: cli.window,
        budget: cli.budget,
    };
    let command = match (&cli.spec, &cli.command) {
        (Some(path), None) => match load_spec(path) {
            Ok(c) => c,
            Err(msg) => return usage_error(cli.json, None, &msg),
        },
        (None, Some(c)) => c.clone(),
        (Some(_), Some(_)) => return usage_error(cli.json, None, "give either a subcommand or --spec, not both"),
        (None, None) => return usage_error(cli.json, None, "missing subcommand"),
    };
    let outcome = execute(&command, settings);
    (render(&outcome.report, cli.json), outcome.exit_code)
}

fn usage_error(as_json: bool, command: Option<&str>, msg: &str) -> (String, i32) {
    let report = json!({
        "schema": SCHEMA,
        "command": command,
        "status": "error",
        "error": msg,
    });
    (render(&report, as_json), EXIT_USAGE)
}

/// Reads `{"command": "...", ...arguments}` from a file.
pub fn load_spec(path: &str) -> Result<Command, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    parse_spec(&text)
}

pub fn parse_spec(text: &str) -> Result<Command, String> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| format!("malformed spec: {e}"))?;
    let obj = v.as_object_mut().ok_or("spec must be a JSON object")?;
    let name = obj
        .remove("command")
        .and_then(|c| c.as_str().map(str::to_string))
        .ok_or("spec needs a \"command\" string")?;
    let rest = Value::Object(std::mem::take(obj));
    let err = |e: serde_json::Error| format!("bad arguments for {name}: {e}");
    Ok(match name.as_str() {
        "classify" => Command::Classify(serde_json::from_value(rest).map_err(err)?),
        "compare" => Command::Compare(serde_json::from_value(rest).map_err(err)?),
        "components" => Command::Components(serde_json::from_value(rest).map_err(err)?),
        "fgrowth" => Command::Fgrowth(serde_json::from_value(rest).map_err(err)?),
        "toeplitz" => Command::Toeplitz(serde_json::from_value(rest).map_err(err)?),
        "verify" => Command::Verify(serde_json::from_value(rest).map_err(err)?),
        other => return Err(format!("unknown command {other:?}")),
    })
}

/// Runs a parsed command.
pub fn execute(command: &Command, settings: Settings) -> Outcome {
    let result = match command {
        Command::Classify(a) => cmd_classify(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Components(a) => cmd_components(a),
        Command::Fgrowth(a) => cmd_fgrowth(a),
        Command::Toeplitz(a) => cmd_toeplitz(a, settings),
        Command::Verify(a) => cmd_verify(a, settings),
    };
    let mut report = Map::new();
    report.insert("schema".into(), json!(SCHEMA));
    report.insert("command".into(), json!(command.name()));
    let exit_code = match result {
        Ok(body) => {
            let ok = body.ok;
            report.insert("inputs".into(), body.inputs);
            report.insert("results".into(), body.results);
            let mut cert = Map::new();
            cert.insert("depth".into(), json!(settings.depth));
            cert.insert("window".into(), json!(settings.window));
            cert.insert("budget".into(), json!(settings.budget));
            if let Value::Object(extra) = body.certification {
                cert.extend(extra);
            }
            report.insert("certification".into(), Value::Object(cert));
            if !body.warnings.is_empty() {
                report.insert("warnings".into(), json!(body.warnings));
            }
            report.insert("status".into(), json!(if ok { "ok" } else { "mismatch" }));
            if ok {
                0
            } else {
                EXIT_FAILURE
            }
        }
        Err(msg) => {
            report.insert("status".into(), json!("error"));
            report.insert("error".into(), json!(msg));
            EXIT_FAILURE
        }
    };
    Outcome {
        report: Value::Object(report),
        exit_code,
    }
}

struct Body {
    inputs: Value,
    results: Value,
    certification: Value,
    warnings: Vec<String>,
    ok: bool,
}

impl Body {
    fn new(inputs: Value, results: Value) -> Self {
        Body {
            inputs,
            results,
            certification: Value::Null,
            warnings: Vec::new(),
            ok: true,
        }
    }
}

type CmdResult = Result<Body, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn cmd_classify(a: &ClassifyArgs) -> CmdResult {
    let s = &a.scale.scale;
    let profile = multiplicity_profile(s);
    let dec = decompose(s);
    let results = json!({
        "scale": scale_json(&s.normalized()),
        "profile": profile,
        "decomposition": {
            "infinite": dec.infinite,
            "finite": dec.finite.iter().map(|(p, e)| (p.to_string(), *e)).collect::<BTreeMap<_, _>>(),
        },
        "torsion_class": classify(s),
        "torsion_subgroup": torsion_subgroup(s).iter().map(big).collect::<Vec<_>>(),
        "torsion_order": big(&profile.torsion_order()),
        "prime_scale": is_prime_scale(s),
        "prime_refinement": scale_json(&prime_refine(s)),
    });
    Ok(Body::new(json!({ "scale": scale_input(&a.scale) }), results))
}

fn cmd_compare(a: &CompareArgs) -> CmdResult {
    let (x, y) = (&a.a.scale, &a.b.scale);
    let verdict = distinguish(x, y).map_err(err)?;
    let results = json!({
        "equivalent": odolab::scales::equivalent(x, y),
        "a_precedes_b": precedes(x, y),
        "b_precedes_a": precedes(y, x),
        "profile_a": multiplicity_profile(x),
        "profile_b": multiplicity_profile(y),
        "verdict": verdict,
    });
    Ok(Body::new(
        json!({ "a": scale_input(&a.a), "b": scale_input(&a.b) }),
        results,
    ))
}

fn cmd_components(a: &ComponentsArgs) -> CmdResult {
    let s = &a.scale.scale;
    let dec = component_count(s, a.m).map_err(err)?;
    let desc = odolab::odometer::aut_structure(s, a.m).map_err(err)?;
    let results = json!({
        "s": dec.s,
        "t": dec.t,
        "w": dec.component_profile,
        "stabilization_index": dec.stabilization_index,
        "base_level": dec.base_level,
        "component_scale": scale_json(&dec.component_scale),
        "group": format!("Z_w^{} ⋊ Sym({})", dec.s, dec.s),
        "f_value": big(&max_finite_subgroup_order(&desc).map_err(err)?),
    });
    Ok(Body::new(json!({ "scale": scale_input(&a.scale), "m": a.m }), results))
}

fn cmd_fgrowth(a: &FgrowthArgs) -> CmdResult {
    let seq = f_sequence(&a.scale.scale, &a.chain.0).map_err(err)?;
    let results = json!({
        "sequence": seq,
        "values": seq.iter().map(|r| big(&r.f_value)).collect::<Vec<_>>(),
    });
    Ok(Body::new(
        json!({ "scale": scale_input(&a.scale), "chain": a.chain.0 }),
        results,
    ))
}

fn cmd_toeplitz(a: &ToeplitzArgs, settings: Settings) -> CmdResult {
    if settings.window == 0 {
        return Err("window must be positive".into());
    }
    let (lo, hi) = toeplitz::centered(settings.window);
    let w = toeplitz::generate(&a.rule, a.stages, lo, hi).map_err(err)?;
    let candidates = match &a.candidates {
        Some(c) => c.0.clone(),
        None => {
            let mut c = a.rule.stage_periods(4);
            c.dedup();
            c
        }
    };
    let ps = toeplitz::essential_periods(&w, &candidates, a.min_translates).map_err(err)?;
    let text = w.to_symbol_string();
    let mut results = Map::new();
    results.insert("stage_periods".into(), json!(a.rule.stage_periods(a.stages)));
    results.insert("generating_scale".into(), scale_json(&a.rule.generating_scale()));
    results.insert("holes".into(), json!(w.holes().len()));
    results.insert("period_structure".into(), json!(ps.periods));
    results.insert(
        "complexity".into(),
        json!((1..=8.min(w.len()))
            .map(|n| toeplitz::complexity(&w, n).unwrap_or(0))
            .collect::<Vec<_>>()),
    );
    if !a.contains.is_empty() {
        let found: BTreeMap<&str, bool> = a
            .contains
            .iter()
            .map(|c| (c.as_str(), text.contains(c.as_str())))
            .collect();
        results.insert("contains".into(), json!(found));
    }
    if let Some(m) = a.m {
        let comps = toeplitz::sigma_m_components(&a.rule, &w, &ps, m).map_err(err)?;
        results.insert(
            "sigma_components".into(),
            json!({
                "m": m,
                "count": comps.big_m,
                "t": comps.t,
                "minimal": comps.is_minimal(),
                "component_structure": comps.component_structure,
            }),
        );
    }
    if let Some(chain) = &a.lower_bounds {
        let bounds: Vec<Value> = chain
            .0
            .iter()
            .map(|&m| json!({ "m": m, "f_lower_bound": big(&toeplitz::f_lower_bound(&ps, m)) }))
            .collect();
        results.insert("lower_bounds".into(), Value::Array(bounds));
    }
    if a.show {
        results.insert("window".into(), to_value(&w));
    }
    let mut body = Body::new(
        json!({
            "rule": to_value(&a.rule),
            "stages": a.stages,
            "candidates": candidates,
            "min_translates": a.min_translates,
        }),
        Value::Object(results),
    );
    body.certification = json!({ "window_offset": lo, "window_end": hi, "window_len": ps.window_len });
    Ok(body)
}

/// Counts checks against a budget and keeps the first few mismatches.
struct Ledger {
    budget: Option<u64>,
    checks: u64,
    mismatches: Vec<String>,
    exhausted: bool,
}

impl Ledger {
    fn new(budget: Option<u64>) -> Self {
        Ledger {
            budget,
            checks: 0,
            mismatches: Vec::new(),
            exhausted: false,
        }
    }

    /// Whether another check may run.
    fn room(&mut self) -> bool {
        match self.budget {
            Some(b) if self.checks >= b => {
                self.exhausted = true;
                false
            }
            _ => true,
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.mismatches.push(what());
        }
    }
}

fn centralizer_formula(n: u64, m: u64) -> BigUint {
    let d = num_integer::gcd(n, m);
    BigUint::from(n / d).pow(d as u32) * (1..=d).map(BigUint::from).product::<BigUint>()
}

fn suite_centralizers(l: &mut Ledger, max_n: u64) -> Result<(), String> {
    for n in 1..=max_n.min(oracle::CENTRALIZER_LIMIT) {
        for m in 0..=n {
            if !l.room() {
                return Ok(());
            }
            let got = oracle::commuting_bijections_count(n, m).map_err(err)?;
            let want = centralizer_formula(n, m);
            l.check(got == want, || format!("centralizer N={n} m={m}: {got} != {want}"));
        }
    }
    Ok(())
}

fn suite_orbits(l: &mut Ledger) -> Result<(), String> {
    for n in 1..=512u64 {
        for m in 0..=n {
            if !l.room() {
                return Ok(());
            }
            let got = oracle::orbit_count(n, m).map_err(err)?;
            l.check(got == num_integer::gcd(n, m), || format!("orbits N={n} m={m}: {got}"));
        }
    }
    Ok(())
}

fn suite_components(l: &mut Ledger) -> Result<(), String> {
    for s in corpus() {
        for m in 1..=100u64 {
            let dec = component_count(&s, m).map_err(err)?;
            for k in dec.stabilization_index..dec.stabilization_index + 3 {
                let Ok(n) = s.term_u64(k) else { break };
                if n > 1 << 18 {
                    break;
                }
                if !l.room() {
                    return Ok(());
                }
                let got = oracle::orbit_count(n, m).map_err(err)?;
                l.check(got == dec.s, || {
                    format!("components {s} m={m} k={k}: {} != {got}", dec.s)
                });
            }
        }
    }
    Ok(())
}

fn group_stages(depth: usize) -> Result<Vec<AutStage>, String> {
    let g = |r| Scale::geometric(r).expect("geometric");
    // keep p_K small enough for bijection tables
    let d = depth.clamp(2, 5);
    [(g(2), 2u64, d), (g(3), 3, d), (g(2), 4, d), (g(6), 6, d.min(3))]
        .iter()
        .map(|(s, m, k)| AutStage::new(s, *m, *k).map_err(err))
        .collect()
}

fn suite_groups(l: &mut Ledger, samples: u64, seed: u64, depth: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for st in group_stages(depth)? {
        for _ in 0..samples {
            if !l.room() {
                return Ok(());
            }
            let a = st.random_element(&mut rng);
            let b = st.random_element(&mut rng);
            let c = st.random_element(&mut rng);
            let ab_c = sd_mul(&sd_mul(&a, &b).map_err(err)?, &c).map_err(err)?;
            let a_bc = sd_mul(&a, &sd_mul(&b, &c).map_err(err)?).map_err(err)?;
            let inv = sd_mul(&a, &sd_inv(&a)).map_err(err)?.is_identity();
            let unit = sd_mul(&a, &st.identity()).map_err(err)? == a;
            let fa = st.bijection(&a).map_err(err)?;
            let fb = st.bijection(&b).map_err(err)?;
            let fab = st.bijection(&sd_mul(&a, &b).map_err(err)?).map_err(err)?;
            let composed: Vec<u64> = fb.iter().map(|&y| fa[y as usize]).collect();
            let faithful = st.factor_bijection(&fa).map_err(err)? == a;
            l.check(ab_c == a_bc && inv && unit && fab == composed && faithful, || {
                format!("group law at level {}", st.level())
            });
        }
    }
    Ok(())
}

fn suite_tower(l: &mut Ledger, samples: u64, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (r, depth) in [(2u64, 6usize), (6, 3)] {
        let s = Scale::geometric(r).expect("geometric");
        for (j, k) in [(0usize, 1usize), (1, 2), (0, 2)] {
            let from = AutStage::tower(&s, j, depth).map_err(err)?;
            let to = AutStage::tower(&s, k, depth).map_err(err)?;
            for _ in 0..samples {
                if !l.room() {
                    return Ok(());
                }
                let a = from.random_element(&mut rng);
                let b = from.random_element(&mut rng);
                let ia = inclusion_jk(&from, &to, &a).map_err(err)?;
                let ib = inclusion_jk(&from, &to, &b).map_err(err)?;
                let iab = inclusion_jk(&from, &to, &sd_mul(&a, &b).map_err(err)?).map_err(err)?;
                let hom = iab == sd_mul(&ia, &ib).map_err(err)?;
                let same = from.bijection(&a).map_err(err)? == to.bijection(&ia).map_err(err)?;
                l.check(hom && same, || format!("tower map ({r}^n) {j} -> {k}"));
            }
        }
    }
    Ok(())
}

fn suite_subgroups(l: &mut Ledger) -> Result<(), String> {
    for (n, d, tau) in [
        (1u64, 3usize, 1u64),
        (2, 2, 2),
        (3, 2, 3),
        (2, 3, 1),
        (6, 2, 3),
        (4, 2, 2),
    ] {
        if !l.room() {
            return Ok(());
        }
        let brute = oracle::max_subgroup_bruteforce(n, d, tau).map_err(err)?;
        let want = tau.pow(d as u32) * (1..=d as u64).product::<u64>();
        l.check(brute == want, || {
            format!("subgroups N={n} d={d} τ={tau}: {brute} != {want}")
        });
    }
    Ok(())
}

/// The final rows of the two example charts.
pub const CHART_CONSTANTS: &str = "100010101000100010001010100";
pub const CHART_WORDS: &str = "000110010011100100011011001";

fn suite_charts(l: &mut Ledger, window: usize) -> Result<(), String> {
    let (lo, hi) = toeplitz::centered(window.max(64));
    for (rule, chart) in [
        (FillRule::AlternatingConstants, CHART_CONSTANTS),
        (FillRule::AlternatingWords, CHART_WORDS),
    ] {
        if !l.room() {
            return Ok(());
        }
        let w = toeplitz::generate(&rule, 10, lo, hi).map_err(err)?;
        l.check(w.to_symbol_string().contains(chart), || {
            format!("{} chart missing", rule.name())
        });
    }
    Ok(())
}

fn suite_blockcodes(l: &mut Ledger, window: usize) -> Result<(), String> {
    if !l.room() {
        return Ok(());
    }
    let (lo, hi) = toeplitz::centered(window.max(64));
    let w = toeplitz::generate(&FillRule::AlternatingConstants, 10, lo, hi).map_err(err)?;
    let one = oracle::block_code_autos(&w, 1, 1, oracle::DEFAULT_RULE_BUDGET).map_err(err)?;
    let three = oracle::block_code_autos(&w, 1, 3, oracle::DEFAULT_RULE_BUDGET).map_err(err)?;
    l.check(one.rules == three.rules, || "block codes for m=1 and m=3 differ".into());
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, settings: Settings) -> CmdResult {
    let suites: Vec<Suite> = match a.suite {
        Suite::All => vec![
            Suite::Centralizers,
            Suite::Orbits,
            Suite::Components,
            Suite::Groups,
            Suite::Tower,
            Suite::Subgroups,
            Suite::Charts,
            Suite::Blockcodes,
        ],
        s => vec![s],
    };
    let mut per_suite = Map::new();
    let mut ok = true;
    let mut total = 0;
    let mut exhausted = false;
    for suite in suites {
        let mut l = Ledger::new(settings.budget);
        match suite {
            Suite::Centralizers => suite_centralizers(&mut l, a.max_n)?,
            Suite::Orbits => suite_orbits(&mut l)?,
            Suite::Components => suite_components(&mut l)?,
            Suite::Groups => suite_groups(&mut l, a.samples, a.seed, settings.depth)?,
            Suite::Tower => suite_tower(&mut l, a.samples, a.seed)?,
            Suite::Subgroups => suite_subgroups(&mut l)?,
            Suite::Charts => suite_charts(&mut l, settings.window)?,
            Suite::Blockcodes => suite_blockcodes(&mut l, settings.window)?,
            Suite::All => unreachable!(),
        }
        ok &= l.mismatches.is_empty();
        total += l.checks;
        exhausted |= l.exhausted;
        let name = to_value(&suite_name(suite));
        per_suite.insert(
            name.as_str().expect("name").to_string(),
            json!({
                "checks": l.checks,
                "mismatches": l.mismatches.len(),
                "examples": l.mismatches.iter().take(5).collect::<Vec<_>>(),
                "complete": !l.exhausted,
            }),
        );
    }
    let mut body = Body::new(
        json!({ "suite": suite_name(a.suite), "max_n": a.max_n, "samples": a.samples, "seed": a.seed }),
        json!({ "suites": per_suite, "checks": total, "passed": ok }),
    );
    if total == 0 {
        body.warnings
            .push("nothing verified: the budget allowed no checks".into());
    } else if exhausted {
        body.warnings.push("budget exhausted before every check ran".into());
    }
    body.ok = ok;
    Ok(body)
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Centralizers => "centralizers",
        Suite::Orbits => "orbits",
        Suite::Components => "components",
        Suite::Groups => "groups",
        Suite::Tower => "tower",
        Suite::Subgroups => "subgroups",
        Suite::Charts => "charts",
        Suite::Blockcodes => "blockcodes",
        Suite::All => "all",
    }
}

/// JSON, or one `path: value` line per leaf.
pub fn render(report: &Value, as_json: bool) -> String {
    if as_json {
        let mut s = serde_json::to_string_pretty(report).expect("serializable");
        s.push('\n');
        return s;
    }
    let mut out = String::new();
    flatten(report, "", &mut out);
    out
}

fn flatten(v: &Value, path: &str, out: &mut String) {
    let key = |k: &str| {
        if path.is_empty() {
            k.to_string()
        } else {
            format!("{path}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(x, &key(k), out);
            }
        }
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            let _ = writeln!(out, "{path}: [{}]", parts.join(", "));
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(x, &key(&i.to_string()), out);
            }
        }
        other => {
            let _ = writeln!(out, "{path}: {}", scalar(other));
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}
