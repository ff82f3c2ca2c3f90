//! Command-line workflow: validate and inspect models, derive and merge
//! variants, check conservativity, simulate, and compare variants.
//!
//! [`run_cli`] is the whole interface; the binary wraps it in one line. It
//! never exits the process itself and reports through the injected writers,
//! so every path is testable in-process.
//!
//! Exit codes: 0 success (`check-conservative`: conservative; `compare`:
//! not-relevant), 1 not conservative, 2 relevant, 64 argument or model parse
//! error, 65 model consistency error, 66 invalid feature configuration,
//! 70 runtime error (I/O and similar).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::compose::{check_extension, is_conservative, merge, ComposeError};
use crate::dsl::{self, DslError, ModelDocument};
use crate::feature::{
    check_feature_model, derive_variant, is_valid, valid_configurations, Configuration,
    FeatureDiagram, FeatureModel, Variability,
};
use crate::graph::{AttrDomain, AttrValue, InstanceGraph};
use crate::init::{generate_init, InitSpec, NetworkGen};
use crate::rewrite::Gts;
use crate::sim::{compare_variants, simulate, Predicate, SimConfig, SimError, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONSERVATIVE: i32 = 1;
pub const EXIT_RELEVANT: i32 = 2;
pub const EXIT_USAGE_OR_PARSE: i32 = 64;
pub const EXIT_CONSISTENCY: i32 = 65;
pub const EXIT_BAD_CONFIG: i32 = 66;
pub const EXIT_RUNTIME: i32 = 70;

/// Name of the environment variable that overrides `--seed` when set.
pub const SEED_ENV_VAR: &str = "FEATGTS_SEED";

const USAGE: &str = "usage: featgts <command> [options]

commands:
  validate <model>                      parse and check a model file
  configs <model>                       list the valid feature configurations
  derive <model> --features C [--out F] write the variant for configuration C
  merge <model> --left C --right C [--out F]
                                        merge two variants over their shared base
  check-conservative <model> --base C --ext C
                                        report whether the extension is conservative
  simulate <model> --features C --init N,k[,p|ring-d] --out DIR
           [--grid G] [--rates r=v,..] [--horizon T] [--max-events M]
           [--runs R] [--seed S] [--observe Type.attr]
                                        run simulations, write event and observable CSVs
  compare <model> --features-a C --features-b C --base C --predicate T.a=v
          [--init N,k[,..]] [--init-a ..] [--init-b ..] [--grid G]
          [--rates r=v,..] [--horizon T] [--max-events M] [--runs R]
          [--seed S] [--alpha A] [--out F]
                                        assess feature relevance by simulation

configurations C are comma-separated feature lists, e.g. SIR,network.
`--out -` writes to standard output. FEATGTS_SEED overrides --seed.
";

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_USAGE_OR_PARSE,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_BAD_CONFIG,
            message: message.into(),
        }
    }

    fn consistency(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_CONSISTENCY,
            message: message.into(),
        }
    }
}

impl From<DslError> for CliError {
    fn from(err: DslError) -> CliError {
        let code = match err {
            DslError::Parse(_) => EXIT_USAGE_OR_PARSE,
            _ => EXIT_CONSISTENCY,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

impl From<ComposeError> for CliError {
    fn from(err: ComposeError) -> CliError {
        CliError::consistency(err.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> CliError {
        let code = match err {
            SimError::InvalidConfig(_) | SimError::TooFewRuns { .. } | SimError::InvalidAlpha => {
                EXIT_USAGE_OR_PARSE
            }
            SimError::IllTypedInit(_) | SimError::NotConservative(_) => EXIT_CONSISTENCY,
            _ => EXIT_RUNTIME,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

/// Run the command line against the given writers and return the exit code.
pub fn run_cli(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = dispatch(args, stdout);
    match result {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(stderr, "featgts: {}", err.message);
            err.code
        }
    }
}

fn dispatch(args: &[String], stdout: &mut dyn Write) -> Result<i32, CliError> {
    let command = match args.first() {
        None => return Err(CliError::usage(format!("missing command\n{USAGE}"))),
        Some(c) => c.as_str(),
    };
    if command == "help" || command == "--help" || command == "-h" {
        write_out(stdout, USAGE)?;
        return Ok(EXIT_OK);
    }
    let parsed = ParsedArgs::parse(&args[1..])?;
    match command {
        "validate" => cmd_validate(&parsed, stdout),
        "configs" => cmd_configs(&parsed, stdout),
        "derive" => cmd_derive(&parsed, stdout),
        "merge" => cmd_merge(&parsed, stdout),
        "check-conservative" => cmd_check_conservative(&parsed, stdout),
        "simulate" => cmd_simulate(&parsed, stdout),
        "compare" => cmd_compare(&parsed, stdout),
        other => Err(CliError::usage(format!(
            "unknown command `{other}`\n{USAGE}"
        ))),
    }
}

#[derive(Debug)]
struct ParsedArgs {
    positional: Vec<String>,
    options: BTreeMap<String, String>,
}

impl ParsedArgs {
    fn parse(args: &[String]) -> Result<ParsedArgs, CliError> {
        let mut positional = Vec::new();
        let mut options = BTreeMap::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            if let Some(name) = arg.strip_prefix("--") {
                let value = args
                    .get(i + 1)
                    .ok_or_else(|| CliError::usage(format!("option --{name} needs a value")))?;
                options.insert(name.to_string(), value.clone());
                i += 2;
            } else {
                positional.push(arg.clone());
                i += 1;
            }
        }
        Ok(ParsedArgs {
            positional,
            options,
        })
    }

    fn model_path(&self) -> Result<&str, CliError> {
        self.positional
            .first()
            .map(String::as_str)
            .ok_or_else(|| CliError::usage("missing model file argument"))
    }

    fn option(&self, name: &str) -> Option<&str> {
        self.options.get(name).map(String::as_str)
    }

    fn required(&self, name: &str) -> Result<&str, CliError> {
        self.option(name)
            .ok_or_else(|| CliError::usage(format!("missing required option --{name}")))
    }

    fn numeric<T: std::str::FromStr>(&self, name: &str, default: T) -> Result<T, CliError> {
        match self.option(name) {
            None => Ok(default),
            Some(text) => text
                .parse()
                .map_err(|_| CliError::usage(format!("cannot parse --{name} value `{text}`"))),
        }
    }
}

fn read_model_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|err| CliError::runtime(format!("cannot read `{path}`: {err}")))
}

fn load_document(parsed: &ParsedArgs) -> Result<ModelDocument, CliError> {
    let path = parsed.model_path()?;
    let text = read_model_file(path)?;
    let mut doc = dsl::parse_model(&text).map_err(|d| CliError {
        code: EXIT_USAGE_OR_PARSE,
        message: format!("{path}: {d}"),
    })?;
    if let Some(grid) = parsed.option("grid") {
        let grid: u32 = grid
            .parse()
            .map_err(|_| CliError::usage(format!("cannot parse --grid value `{grid}`")))?;
        doc.defaults.grid = Some(grid);
    }
    Ok(doc)
}

fn load_feature_model(parsed: &ParsedArgs) -> Result<FeatureModel, CliError> {
    let doc = load_document(parsed)?;
    let fm = doc.to_feature_model()?;
    let report = check_feature_model(&fm);
    if !report.is_ok() {
        return Err(CliError::consistency(format!(
            "feature model is inconsistent: {report}"
        )));
    }
    Ok(fm)
}

fn parse_configuration(fd: &FeatureDiagram, text: &str) -> Result<Configuration, CliError> {
    let config = Configuration::new(text.split(',').map(str::trim).filter(|s| !s.is_empty()));
    for feature in config.features() {
        if !fd.contains(feature) {
            return Err(CliError::config(format!("unknown feature `{feature}`")));
        }
    }
    if !is_valid(fd, &config) {
        return Err(CliError::config(format!("invalid configuration `{config}`")));
    }
    Ok(config)
}

/// Smallest valid configuration containing the given features: root paths
/// plus mandatory children, with alternative groups required to be resolved
/// by the request itself.
fn closure_configuration(fd: &FeatureDiagram, text: &str) -> Result<Configuration, CliError> {
    let mut chosen: Vec<String> = Vec::new();
    for feature in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if !fd.contains(feature) {
            return Err(CliError::config(format!("unknown feature `{feature}`")));
        }
        chosen.extend(fd.root_path(feature).iter().map(|f| f.to_string()));
    }
    chosen.push(fd.root().to_string());
    let mut config = Configuration::new(chosen);
    loop {
        let mut additions: Vec<String> = Vec::new();
        for feature in fd.features() {
            if matches!(fd.variability(feature), Some(Variability::Mandatory)) {
                let parent = fd.parent(feature).expect("non-root");
                if config.contains(parent) && !config.contains(feature) {
                    additions.push(feature.to_string());
                }
            }
        }
        if additions.is_empty() {
            break;
        }
        config = config.union(&Configuration::new(additions));
    }
    if !is_valid(fd, &config) {
        return Err(CliError::config(format!(
            "features `{text}` do not close into a valid configuration (got `{config}`); \
             alternative choices must be listed explicitly"
        )));
    }
    Ok(config)
}

fn write_out(stdout: &mut dyn Write, content: &str) -> Result<(), CliError> {
    stdout
        .write_all(content.as_bytes())
        .map_err(|err| CliError::runtime(format!("cannot write output: {err}")))
}

/// Write `content` to the file named by `--out`, or to standard output when
/// the value is `-`.
fn write_artifact(out: &str, content: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    if out == "-" {
        write_out(stdout, content)
    } else {
        std::fs::write(out, content)
            .map_err(|err| CliError::runtime(format!("cannot write `{out}`: {err}")))
    }
}

fn cmd_validate(parsed: &ParsedArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let fm = load_feature_model(parsed)?;
    write_out(
        stdout,
        &format!(
            "ok: {} features, {} rules\n",
            fm.diagram().feature_count(),
            fm.m150().rule_count()
        ),
    )?;
    Ok(EXIT_OK)
}

fn cmd_configs(parsed: &ParsedArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let fm = load_feature_model(parsed)?;
    let configs = valid_configurations(fm.diagram())
        .map_err(|err| CliError::runtime(err.to_string()))?;
    let mut out = String::new();
    for config in configs {
        let _ = writeln!(out, "{config}");
    }
    write_out(stdout, &out)?;
    Ok(EXIT_OK)
}

fn derive_for(fm: &FeatureModel, config: &Configuration) -> Result<Gts, CliError> {
    derive_variant(fm, config).map_err(|err| match err {
        crate::feature::FeatureError::InvalidConfiguration(c) => {
            CliError::config(format!("invalid configuration `{c}`"))
        }
        other => CliError::consistency(other.to_string()),
    })
}

fn sanitise(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

fn cmd_derive(parsed: &ParsedArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let fm = load_feature_model(parsed)?;
    let config = parse_configuration(fm.diagram(), parsed.required("features")?)?;
    let variant = derive_for(&fm, &config)?;
    let doc = dsl::document_from_gts(&sanitise(&config.to_string()), &variant, fm.diagram().root());
    let text = dsl::print_model(&doc);
    write_artifact(parsed.option("out").unwrap_or("-"), &text, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_merge(parsed: &ParsedArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let fm = load_feature_model(parsed)?;
    let left = closure_configuration(fm.diagram(), parsed.required("left")?)?;
    let right = closure_configuration(fm.diagram(), parsed.required("right")?)?;
    let base = left.intersection(&right);
    if !is_valid(fm.diagram(), &base) {
        return Err(CliError::config(format!(
            "shared base `{base}` is not a valid configuration"
        )));
    }
    let base_gts = derive_for(&fm, &base)?;
    let left_gts = derive_for(&fm, &left)?;
    let right_gts = derive_for(&fm, &right)?;
    let merged = merge(&base_gts, &left_gts, &right_gts)?;
    let name = sanitise(&format!("{left}__{right}"));
    let doc = dsl::document_from_gts(&name, &merged, fm.diagram().root());
    write_artifact(parsed.option("out").unwrap_or("-"), &dsl::print_model(&doc), stdout)?;
    Ok(EXIT_OK)
}

fn cmd_check_conservative(parsed: &ParsedArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let fm = load_feature_model(parsed)?;
    let base_config = parse_configuration(fm.diagram(), parsed.required("base")?)?;
    let ext_config = parse_configuration(fm.diagram(), parsed.required("ext")?)?;
    let base = derive_for(&fm, &base_config)?;
    let ext = derive_for(&fm, &ext_config)?;
    let witness = check_extension(&base, &ext)
        .map_err(|err| CliError::consistency(format!("not an extension: {err}")))?;
    let report = is_conservative(&witness);
    write_out(stdout, &format!("{report}\n"))?;
    Ok(if report.conservative {
        EXIT_OK
    } else {
        EXIT_NOT_CONSERVATIVE
    })
}

fn parse_init(parsed: &ParsedArgs, option: &str, seed: u64) -> Result<Option<InitSpec>, CliError> {
    let text = match parsed.option(option) {
        None => return Ok(None),
        Some(t) => t,
    };
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(CliError::usage(format!(
            "--{option} expects N,k or N,k,p or N,k,ring-d, got `{text}`"
        )));
    }
    let population: usize = parts[0]
        .parse()
        .map_err(|_| CliError::usage(format!("cannot parse population `{}`", parts[0])))?;
    let infected: usize = parts[1]
        .parse()
        .map_err(|_| CliError::usage(format!("cannot parse infected count `{}`", parts[1])))?;
    let network = match parts.get(2) {
        None => NetworkGen::None,
        Some(third) => {
            if let Some(d) = third.strip_prefix("ring-") {
                let d: u32 = d
                    .parse()
                    .map_err(|_| CliError::usage(format!("cannot parse ring degree `{third}`")))?;
                NetworkGen::Ring { d }
            } else {
                let p: f64 = third
                    .parse()
                    .map_err(|_| CliError::usage(format!("cannot parse link probability `{third}`")))?;
                NetworkGen::UniformRandom { p }
            }
        }
    };
    Ok(Some(InitSpec {
        population,
        infected,
        grid: None,
        network,
        seed,
    }))
}

fn apply_rates(parsed: &ParsedArgs, gts: &Gts) -> Result<Gts, CliError> {
    let text = match parsed.option("rates") {
        None => return Ok(gts.clone()),
        Some(t) => t,
    };
    let mut overrides: BTreeMap<String, f64> = BTreeMap::new();
    for item in text.split(',').filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--rates entries look like name=value, got `{item}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::usage(format!("cannot parse rate `{value}`")))?;
        overrides.insert(name.to_string(), value);
    }
    for name in overrides.keys() {
        if gts.rule(name).is_none() {
            return Err(CliError::usage(format!(
                "--rates names unknown rule `{name}`"
            )));
        }
    }
    let rules = gts
        .rules()
        .map(|rule| match overrides.get(rule.name()) {
            Some(&rate) => rule.with_rate(rate),
            None => Ok(rule.clone()),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|err| CliError::usage(err.to_string()))?;
    Gts::new(gts.name(), gts.type_graph().clone(), rules)
        .map_err(|err| CliError::consistency(err.to_string()))
}

fn effective_seed(parsed: &ParsedArgs) -> Result<u64, CliError> {
    if let Ok(text) = std::env::var(SEED_ENV_VAR) {
        return text.parse().map_err(|_| {
            CliError::usage(format!("cannot parse {SEED_ENV_VAR} value `{text}`"))
        });
    }
    parsed.numeric("seed", 0u64)
}

fn sim_config(parsed: &ParsedArgs, seed: u64, runs: usize) -> Result<SimConfig, CliError> {
    let horizon: f64 = parsed.numeric("horizon", 1e4)?;
    let max_events: usize = parsed.numeric("max-events", 1_000_000)?;
    SimConfig::new(horizon, max_events, seed, runs).map_err(CliError::from)
}

/// The observable attribute for the observables CSV: `--observe Type.attr`,
/// defaulting to the first symbol-domain attribute declaration.
fn observed_attr(parsed: &ParsedArgs, gts: &Gts) -> Result<(String, String), CliError> {
    if let Some(text) = parsed.option("observe") {
        let (node_type, attr) = text
            .split_once('.')
            .ok_or_else(|| CliError::usage(format!("--observe looks like Type.attr, got `{text}`")))?;
        if gts.type_graph().domain(node_type, attr).is_none() {
            return Err(CliError::usage(format!(
                "--observe names undeclared attribute `{text}`"
            )));
        }
        return Ok((node_type.to_string(), attr.to_string()));
    }
    gts.type_graph()
        .attr_decls()
        .find(|(_, _, domain)| matches!(domain, AttrDomain::Symbols(_)))
        .map(|(nt, a, _)| (nt.to_string(), a.to_string()))
        .ok_or_else(|| {
            CliError::usage("no symbol-valued attribute to observe; pass --observe Type.attr")
        })
}

/// Event CSV: `run,time,rule,nodes` with CRLF line endings, times to six
/// fractional digits, and matched host node ids semicolon-joined in pattern
/// node order.
pub fn events_csv(trajectories: &[Trajectory]) -> String {
    let mut out = String::new();
    out.push_str("run,time,rule,nodes\r\n");
    for (run, trajectory) in trajectories.iter().enumerate() {
        for event in &trajectory.events {
            let nodes: Vec<&str> = event
                .matched
                .morphism
                .node_map
                .values()
                .map(|id| id.as_str())
                .collect();
            let _ = write!(
                out,
                "{run},{time:.6},{rule},{nodes}\r\n",
                time = event.time,
                rule = event.rule,
                nodes = nodes.join(";")
            );
        }
    }
    out
}

fn observables_csv(
    gts: &Gts,
    trajectories: &[Trajectory],
    node_type: &str,
    attr: &str,
) -> Result<String, CliError> {
    let values: Vec<AttrValue> = match gts.type_graph().domain(node_type, attr) {
        Some(AttrDomain::Symbols(symbols)) => symbols
            .iter()
            .map(|s| AttrValue::Symbol(s.clone()))
            .collect(),
        Some(AttrDomain::IntRange { min, max }) => (*min..=*max).map(AttrValue::Int).collect(),
        Some(AttrDomain::Grid { .. }) => {
            return Err(CliError::usage(
                "grid attributes have no per-value observable columns",
            ))
        }
        None => {
            return Err(CliError::usage(format!(
                "undeclared observable `{node_type}.{attr}`"
            )))
        }
    };
    let mut out = String::new();
    out.push_str("run,time");
    for value in &values {
        let _ = write!(out, ",{value}");
    }
    out.push_str("\r\n");
    for (run, trajectory) in trajectories.iter().enumerate() {
        let mut state = trajectory.initial.clone();
        let emit = |time: f64, state: &InstanceGraph, out: &mut String| {
            let _ = write!(out, "{run},{time:.6}");
            for value in &values {
                let _ = write!(out, ",{}", state.count_where(node_type, attr, value));
            }
            out.push_str("\r\n");
        };
        emit(0.0, &state, &mut out);
        for event in &trajectory.events {
            let rule = gts
                .rule(&event.rule)
                .ok_or_else(|| CliError::runtime(format!("unknown rule `{}`", event.rule)))?;
            crate::rewrite::apply_mut(gts.type_graph(), rule, &mut state, &event.matched)
                .map_err(|err| CliError::runtime(err.to_string()))?;
            emit(event.time, &state, &mut out);
        }
    }
    Ok(out)
}

fn cmd_simulate(parsed: &ParsedArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let fm = load_feature_model(parsed)?;
    let config = parse_configuration(fm.diagram(), parsed.required("features")?)?;
    let variant = apply_rates(parsed, &derive_for(&fm, &config)?)?;

    let seed = effective_seed(parsed)?;
    let runs: usize = parsed.numeric("runs", 1)?;
    let spec = parse_init(parsed, "init", seed)?
        .ok_or_else(|| CliError::usage("missing required option --init"))?;
    let initial = generate_init(&spec, variant.type_graph())
        .map_err(|err| CliError::config(err.to_string()))?;

    let cfg = sim_config(parsed, seed, runs)?;
    let trajectories = simulate(&variant, &initial, &cfg)?;

    let (node_type, attr) = observed_attr(parsed, &variant)?;
    let events = events_csv(&trajectories);
    let observables = observables_csv(&variant, &trajectories, &node_type, &attr)?;

    let out = parsed.required("out")?;
    if out == "-" {
        write_out(stdout, &events)?;
        write_out(stdout, &observables)?;
    } else {
        let dir = Path::new(out);
        std::fs::create_dir_all(dir)
            .map_err(|err| CliError::runtime(format!("cannot create `{out}`: {err}")))?;
        std::fs::write(dir.join("events.csv"), &events)
            .map_err(|err| CliError::runtime(format!("cannot write events.csv: {err}")))?;
        std::fs::write(dir.join("observables.csv"), &observables)
            .map_err(|err| CliError::runtime(format!("cannot write observables.csv: {err}")))?;
    }
    Ok(EXIT_OK)
}

fn parse_predicate(text: &str) -> Result<Predicate, CliError> {
    let usage = || {
        CliError::usage(format!(
            "--predicate looks like Type.attr=value, got `{text}`"
        ))
    };
    let (lhs, value) = text.split_once('=').ok_or_else(usage)?;
    let (node_type, attr) = lhs.split_once('.').ok_or_else(usage)?;
    let value = value.trim();
    let value = if let Some(rest) = value.strip_prefix('(') {
        let inner = rest.strip_suffix(')').ok_or_else(usage)?;
        let (x, y) = inner.split_once(',').ok_or_else(usage)?;
        AttrValue::Coord {
            x: x.trim().parse().map_err(|_| usage())?,
            y: y.trim().parse().map_err(|_| usage())?,
        }
    } else if let Ok(i) = value.parse::<i64>() {
        AttrValue::Int(i)
    } else {
        AttrValue::Symbol(value.to_string())
    };
    Ok(Predicate::new(node_type, attr, value))
}

fn cmd_compare(parsed: &ParsedArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let fm = load_feature_model(parsed)?;
    let config_a = parse_configuration(fm.diagram(), parsed.required("features-a")?)?;
    let config_b = parse_configuration(fm.diagram(), parsed.required("features-b")?)?;
    let base_config = parse_configuration(fm.diagram(), parsed.required("base")?)?;
    let predicate = parse_predicate(parsed.required("predicate")?)?;
    let alpha: f64 = parsed.numeric("alpha", 0.05)?;

    let base = apply_rates(parsed, &derive_for(&fm, &base_config)?)?;
    let variant_a = apply_rates(parsed, &derive_for(&fm, &config_a)?)?;
    let variant_b = apply_rates(parsed, &derive_for(&fm, &config_b)?)?;
    let w_a = check_extension(&base, &variant_a)
        .map_err(|err| CliError::config(format!("variant a does not extend the base: {err}")))?;
    let w_b = check_extension(&base, &variant_b)
        .map_err(|err| CliError::config(format!("variant b does not extend the base: {err}")))?;

    let seed = effective_seed(parsed)?;
    let runs: usize = parsed.numeric("runs", 20)?;
    let seed_b = seed.wrapping_add(runs as u64);
    let spec_a = match parse_init(parsed, "init-a", seed)? {
        Some(spec) => spec,
        None => parse_init(parsed, "init", seed)?
            .ok_or_else(|| CliError::usage("missing --init (or --init-a/--init-b)"))?,
    };
    let spec_b = match parse_init(parsed, "init-b", seed_b)? {
        Some(spec) => spec,
        None => parse_init(parsed, "init", seed_b)?
            .ok_or_else(|| CliError::usage("missing --init (or --init-a/--init-b)"))?,
    };

    let initial_a = generate_init(&spec_a, variant_a.type_graph())
        .map_err(|err| CliError::config(format!("variant a init: {err}")))?;
    let initial_b = generate_init(&spec_b, variant_b.type_graph())
        .map_err(|err| CliError::config(format!("variant b init: {err}")))?;

    let cfg_a = sim_config(parsed, seed, runs)?;
    let cfg_b = sim_config(parsed, seed.wrapping_add(runs as u64), runs)?;
    let trajectories_a = simulate(&variant_a, &initial_a, &cfg_a)?;
    let trajectories_b = simulate(&variant_b, &initial_b, &cfg_b)?;

    let report = compare_variants(
        &trajectories_a,
        &trajectories_b,
        &w_a,
        &w_b,
        &predicate,
        alpha,
    )?;
    let text = format!("{report}\n{}\n", report.summary_line());
    write_out(stdout, &text)?;
    if let Some(out) = parsed.option("out") {
        if out != "-" {
            std::fs::write(out, &text)
                .map_err(|err| CliError::runtime(format!("cannot write `{out}`: {err}")))?;
        }
    }
    Ok(if report.relevant {
        EXIT_RELEVANT
    } else {
        EXIT_OK
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn option_parsing_pairs_flags_with_values() {
        let args: Vec<String> = ["m.fgts", "--features", "SIR,network", "--seed", "7"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let parsed = ParsedArgs::parse(&args).unwrap();
        assert_eq!(parsed.model_path().unwrap(), "m.fgts");
        assert_eq!(parsed.option("features"), Some("SIR,network"));
        assert_eq!(parsed.numeric::<u64>("seed", 0).unwrap(), 7);
        assert_eq!(parsed.numeric::<u64>("runs", 4).unwrap(), 4);
    }

    #[test]
    fn dangling_option_is_a_usage_error() {
        let args = vec!["m.fgts".to_string(), "--seed".to_string()];
        let err = ParsedArgs::parse(&args).unwrap_err();
        assert_eq!(err.code, EXIT_USAGE_OR_PARSE);
    }

    #[test]
    fn predicates_parse_symbols_ints_and_coords() {
        let p = parse_predicate("Agent.s=R").unwrap();
        assert_eq!(p.value, AttrValue::Symbol("R".into()));
        let p = parse_predicate("Cell.count=12").unwrap();
        assert_eq!(p.value, AttrValue::Int(12));
        let p = parse_predicate("Agent.l=(2, 3)").unwrap();
        assert_eq!(p.value, AttrValue::Coord { x: 2, y: 3 });
        assert!(parse_predicate("nonsense").is_err());
    }

    #[test]
    fn init_spec_parsing_covers_all_generators() {
        let args: Vec<String> = ["m", "--init", "100,5,ring-2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let parsed = ParsedArgs::parse(&args).unwrap();
        let spec = parse_init(&parsed, "init", 1).unwrap().unwrap();
        assert_eq!(spec.population, 100);
        assert_eq!(spec.infected, 5);
        assert_eq!(spec.network, NetworkGen::Ring { d: 2 });

        let args: Vec<String> = ["m", "--init", "50,1,0.25"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let parsed = ParsedArgs::parse(&args).unwrap();
        let spec = parse_init(&parsed, "init", 1).unwrap().unwrap();
        assert_eq!(spec.network, NetworkGen::UniformRandom { p: 0.25 });

        let args: Vec<String> = ["m", "--init", "50"].iter().map(|s| s.to_string()).collect();
        let parsed = ParsedArgs::parse(&args).unwrap();
        assert!(parse_init(&parsed, "init", 1).is_err());
    }
}
