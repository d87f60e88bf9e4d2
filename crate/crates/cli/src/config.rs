//! Settings shared by the planning subcommands, merged from flags, the
//! environment, an optional TOML file and built-in defaults, in that order.

use std::path::{Path, PathBuf};

use clap::Args;
use mmorf::agents::{AgentConfig, BackendSpec, HttpConfig};
use mmorf::evalbench::ReportOptions;
use mmorf::planner::{SearchConfig, SelectionPolicy, System};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub system: Option<System>,
    pub llm: Option<String>,
    pub restriction_db: Option<PathBuf>,
    pub smp_per_occurrence: Option<bool>,
    pub search: FileSearch,
    pub agents: FileAgents,
    pub http: FileHttp,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileSearch {
    pub i_max: Option<usize>,
    pub i_init: Option<usize>,
    pub k_candidates: Option<usize>,
    pub branching: Option<usize>,
    pub time_limit_seconds: Option<u64>,
    pub selection_policy: Option<SelectionPolicy>,
    pub max_delegations_per_iteration: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileAgents {
    pub turn_limit: Option<usize>,
    pub parse_retries_per_turn: Option<usize>,
}

/// Connection settings for the http backend. The endpoint, key and model can
/// also come from `MMORF_LLM_BASE_URL`, `MMORF_LLM_API_KEY` and
/// `MMORF_LLM_MODEL`, which win over the file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileHttp {
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub timeout_seconds: Option<u64>,
    pub retries: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub temperature: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }

    fn http(&self) -> HttpConfig {
        let d = HttpConfig::default();
        let h = &self.http;
        HttpConfig {
            base_url: h.base_url.clone().unwrap_or(d.base_url),
            api_key: h.api_key.clone().or(d.api_key),
            model: h.model.clone().unwrap_or(d.model),
            timeout_seconds: h.timeout_seconds.unwrap_or(d.timeout_seconds),
            retries: h.retries.unwrap_or(d.retries),
            backoff_ms: h.backoff_ms.unwrap_or(d.backoff_ms),
            temperature: h.temperature.unwrap_or(d.temperature),
        }
        .with_env()
    }
}

/// Flags every planning subcommand accepts. Each may also be set through
/// the environment variable shown in `--help`.
#[derive(Debug, Args)]
pub struct PlanArgs {
    /// plain, masil, rfas or staticreg [default: masil]
    #[arg(long, env = "MMORF_SYSTEM")]
    pub system: Option<System>,
    /// Agent backend: scripted:<path>, rule or http [default: rule]
    #[arg(long, env = "MMORF_LLM")]
    pub llm: Option<String>,
    /// Restriction database, required by staticreg
    #[arg(long, env = "MMORF_RESTRICTION_DB")]
    pub restriction_db: Option<PathBuf>,
    /// Iteration budget [default: 500]
    #[arg(long, env = "MMORF_I_MAX", value_parser = clap::value_parser!(u64).range(1..))]
    pub i_max: Option<u64>,
    /// Wall-clock budget in seconds [default: 7200]
    #[arg(long, env = "MMORF_TIME_LIMIT", value_parser = clap::value_parser!(u64).range(1..))]
    pub time_limit: Option<u64>,
    /// Candidates simulated per iteration (K) [default: 5]
    #[arg(long = "k", env = "MMORF_K", value_parser = clap::value_parser!(u64).range(1..))]
    pub k_candidates: Option<u64>,
    /// Reactions kept per expansion (B) [default: 10]
    #[arg(long = "b", env = "MMORF_B", value_parser = clap::value_parser!(u64).range(1..))]
    pub branching: Option<u64>,
    /// Price each starting material once per consuming reaction
    #[arg(long, env = "MMORF_SMP_PER_OCCURRENCE", num_args = 0..=1, default_missing_value = "true")]
    pub smp_per_occurrence: Option<bool>,
}

/// Everything a run needs once all sources are merged.
#[derive(Debug)]
pub struct Resolved {
    pub search: SearchConfig,
    pub agents: AgentConfig,
    pub backend: BackendSpec,
    pub restriction_db: Option<PathBuf>,
    pub report: ReportOptions,
}

pub fn resolve(args: &PlanArgs, file: &FileConfig) -> Result<Resolved, Failure> {
    let system = args.system.or(file.system).unwrap_or(System::Masil);
    let mut search = SearchConfig::for_system(system);
    let fs = &file.search;
    let flag = |v: Option<u64>| v.map(|n| n as usize);
    search.i_max = flag(args.i_max).or(fs.i_max).unwrap_or(search.i_max);
    search.i_init = fs.i_init.unwrap_or(search.i_init);
    search.k_candidates = flag(args.k_candidates).or(fs.k_candidates).unwrap_or(search.k_candidates);
    search.branching = flag(args.branching).or(fs.branching).unwrap_or(search.branching);
    search.time_limit_seconds = args.time_limit.or(fs.time_limit_seconds).unwrap_or(search.time_limit_seconds);
    search.selection_policy = fs.selection_policy.unwrap_or(search.selection_policy);
    search.max_delegations_per_iteration =
        fs.max_delegations_per_iteration.unwrap_or(search.max_delegations_per_iteration);
    for (name, v) in [("i_max", search.i_max), ("k_candidates", search.k_candidates), ("branching", search.branching)] {
        if v == 0 {
            return Err(Failure::usage(format!("{name} must be positive")));
        }
    }
    if search.time_limit_seconds == 0 {
        return Err(Failure::usage("time_limit_seconds must be positive"));
    }

    let d = AgentConfig::default();
    let agents = AgentConfig {
        turn_limit: file.agents.turn_limit.unwrap_or(d.turn_limit),
        parse_retries_per_turn: file.agents.parse_retries_per_turn.unwrap_or(d.parse_retries_per_turn),
    };

    let spec = args.llm.clone().or_else(|| file.llm.clone()).unwrap_or_else(|| "rule".into());
    let backend = match spec.parse::<BackendSpec>().map_err(|e| Failure::usage(e.to_string()))? {
        BackendSpec::Http(_) => BackendSpec::Http(file.http()),
        other => other,
    };

    let restriction_db = args.restriction_db.clone().or_else(|| file.restriction_db.clone());
    if system == System::Staticreg && restriction_db.is_none() {
        return Err(Failure::usage("staticreg needs --restriction-db"));
    }
    let report =
        ReportOptions { smp_per_occurrence: args.smp_per_occurrence.or(file.smp_per_occurrence).unwrap_or(false) };
    Ok(Resolved { search, agents, backend, restriction_db, report })
}
