use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mmorf::agents::BackendSpec;
use mmorf::chemworld::{load_world, Molecule, Reaction, World};
use mmorf::evalbench::{
    brute_force_routes, build_report, bundled_scmo_manifest, compute_summary, filter_routes, load_benchmark,
    load_restriction_db, pareto_front_reports, run_benchmark, write_jsonl, BenchOptions, ReportOptions,
    RestrictionEntry,
};
use mmorf::par::{with_threads, Execution};
use mmorf::planner::{run, PlanResult, RestrictionSet, RestrictionSpec, RunEnv, Task};
use mmorf::vfdsl::{breakdown, parse_vf, render_vf, RouteState};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::Resolved;
use crate::Failure;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn world(path: &Path) -> Result<World, Failure> {
    load_world(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn restriction_db(path: Option<&Path>) -> Result<Option<Vec<RestrictionEntry>>, Failure> {
    path.map(|p| load_restriction_db(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))).transpose()
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn io(e: impl std::fmt::Display) -> Failure {
    Failure::usage(format!("write failed: {e}"))
}

/// Writes to stdout, or stderr when `err`. A closed pipe ends output quietly.
fn emit(text: &str, err: bool) -> Result<(), Failure> {
    let res = if err {
        std::io::stderr().lock().write_all(text.as_bytes())
    } else {
        std::io::stdout().lock().write_all(text.as_bytes())
    };
    match res {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(io(e)),
        _ => Ok(()),
    }
}

fn pretty(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

pub struct TaskSource {
    pub file: Option<PathBuf>,
    pub id: Option<String>,
    pub product: Option<String>,
}

fn load_task(src: TaskSource) -> Result<Task, Failure> {
    let Some(path) = src.file else {
        let product = src.product.unwrap_or_default();
        return Ok(Task::new("cli", &product));
    };
    let text = read(&path)?;
    let bad = |e: String| Failure::usage(format!("{}: {e}", path.display()));
    if text.trim_start().starts_with('[') {
        let tasks = mmorf::evalbench::load_benchmark_str(&text).map_err(|e| bad(e.to_string()))?;
        match (src.id, tasks.len()) {
            (Some(id), _) => {
                tasks.into_iter().find(|t| t.id == id).ok_or_else(|| bad(format!("no task with id {id:?}")))
            }
            (None, 1) => Ok(tasks.into_iter().next().unwrap()),
            (None, n) => Err(bad(format!("{n} tasks in file; choose one with --id"))),
        }
    } else {
        let task: Task = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let checked = mmorf::evalbench::load_benchmark_str(&serde_json::to_string(&[&task]).unwrap());
        checked.map_err(|e| bad(e.to_string()))?;
        Ok(task)
    }
}

fn route_text(r: &PlanResult) -> String {
    let mut out = format!("task {}  product {}  system {}\n", r.task_id, r.product, r.system);
    out += &format!("status {:?} after {} iterations\n", r.status, r.iterations_used);
    out += &format!("value function {}\n", r.value_function);
    if let (Some(route), Some(rep)) = (&r.route, &r.report) {
        out += &format!("route ({} reactions):\n", route.reactions.len());
        for x in &route.reactions {
            let reactants: Vec<&str> = x.reactants().iter().map(Molecule::as_str).collect();
            out += &format!("  {} <= {}\n", x.product(), reactants.join(" + "));
        }
        let codes: Vec<&str> = rep.ghs_codes.iter().map(String::as_str).collect();
        out += &format!(
            "carc {}  pyro {}  ghs {} [{}]  smp {}  rl {}\n",
            rep.carc,
            rep.pyro,
            rep.ghs_count,
            codes.join(" "),
            rep.smp,
            rep.rl
        );
    }
    if !r.rejected_routes.is_empty() {
        out += &format!("{} route(s) rejected on the way\n", r.rejected_routes.len());
    }
    out
}

pub fn plan(src: TaskSource, world_path: &Path, out: Option<&Path>, mut cfg: Resolved) -> Result<(), Failure> {
    let task = load_task(src)?;
    let w = world(world_path)?;
    let db = restriction_db(cfg.restriction_db.as_deref())?;
    cfg.search.execution = Execution::Sequential;
    let client = cfg.backend.client().map_err(|e| Failure::usage(e.to_string()))?;
    let env = RunEnv {
        world: &w,
        config: cfg.search,
        agents: cfg.agents,
        llm: client.as_ref(),
        restriction_db: db.as_deref(),
        report_options: cfg.report,
    };
    let result = run(&task, &env);
    let text = route_text(&result);
    match out {
        Some(path) => {
            let mut f = create(path)?;
            write_jsonl(std::slice::from_ref(&result), &mut f).map_err(io)?;
            f.flush().map_err(io)?;
            emit(&text, false)?;
        }
        None => {
            let mut line = Vec::new();
            write_jsonl(std::slice::from_ref(&result), &mut line).map_err(io)?;
            emit(&String::from_utf8_lossy(&line), false)?;
            emit(&text, true)?;
        }
    }
    if result.is_solved() {
        Ok(())
    } else {
        Err(Failure::no_route(format!("no route for {} ({:?})", task.product, result.status)))
    }
}

pub fn bench(
    manifest: Option<&Path>,
    world_path: &Path,
    out: &Path,
    summary_path: Option<&Path>,
    jobs: usize,
    mut cfg: Resolved,
) -> Result<(), Failure> {
    let tasks = match manifest {
        Some(p) => load_benchmark(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => bundled_scmo_manifest(),
    };
    let w = world(world_path)?;
    let db = restriction_db(cfg.restriction_db.as_deref())?;
    cfg.search.execution = Execution::Sequential;
    if let BackendSpec::Scripted(_) = &cfg.backend {
        // fail before any task runs rather than once per task
        cfg.backend.client().map_err(|e| Failure::usage(e.to_string()))?;
    }
    let execution = if jobs > 1 { Execution::Parallel } else { Execution::Sequential };
    let opts = BenchOptions {
        world: &w,
        config: cfg.search,
        agents: cfg.agents,
        backend: &cfg.backend,
        restriction_db: db.as_deref(),
        report_options: cfg.report,
        execution,
    };
    let results = with_threads(jobs, || run_benchmark(&tasks, &opts)).map_err(|e| Failure::usage(e.to_string()))?;
    let mut f = create(out)?;
    write_jsonl(&results, &mut f).map_err(io)?;
    f.flush().map_err(io)?;
    let summary = pretty(&compute_summary(&results, &w, &cfg.report));
    if let Some(p) = summary_path {
        std::fs::write(p, format!("{summary}\n")).map_err(io)?;
    }
    emit(&format!("{summary}\n"), false)?;
    Ok(())
}

fn read_results(path: &Path) -> Result<Vec<PlanResult>, Failure> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Failure::usage(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

pub fn eval(paths: &[PathBuf], world_path: &Path, smp_per_occurrence: bool) -> Result<(), Failure> {
    let w = world(world_path)?;
    let opts = ReportOptions { smp_per_occurrence };
    let runs: Vec<Vec<PlanResult>> = paths.iter().map(|p| read_results(p)).collect::<Result<_, _>>()?;
    if let [only] = runs.as_slice() {
        emit(&format!("{}\n", pretty(&compute_summary(only, &w, &opts))), false)?;
        return Ok(());
    }
    // per task, which files produced a route on the Pareto front of all routes found
    let mut by_task: BTreeMap<&str, Vec<(usize, mmorf::evalbench::RouteReport)>> = BTreeMap::new();
    for (i, rs) in runs.iter().enumerate() {
        for r in rs {
            if let Some(route) = r.route.as_ref().filter(|_| r.is_solved()) {
                let rep = build_report(route, &w, &opts).map_err(|e| Failure::usage(e.to_string()))?;
                by_task.entry(r.task_id.as_str()).or_default().push((i, rep));
            }
        }
    }
    let mut on_front = vec![0usize; runs.len()];
    let mut tasks = serde_json::Map::new();
    for (id, entries) in &by_task {
        let reports: Vec<_> = entries.iter().map(|(_, r)| r.clone()).collect();
        let front: Vec<usize> = pareto_front_reports(&reports).into_iter().map(|k| entries[k].0).collect();
        for &i in &front {
            on_front[i] += 1;
        }
        let names: Vec<String> = front.iter().map(|&i| paths[i].display().to_string()).collect();
        tasks.insert(id.to_string(), json!(names));
    }
    let files: Vec<_> = paths
        .iter()
        .zip(&runs)
        .zip(&on_front)
        .map(|((p, rs), n)| json!({"file": p.display().to_string(), "summary": compute_summary(rs, &w, &opts), "on_front": n}))
        .collect();
    emit(&format!("{}\n", pretty(&json!({"files": files, "front_by_task": tasks}))), false)?;
    Ok(())
}

pub fn oracle(
    world_path: &Path,
    product: &str,
    depth: usize,
    restrictions: Option<&Path>,
    smp: bool,
) -> Result<(), Failure> {
    let w = world(world_path)?;
    let target = Molecule::parse(product).map_err(|e| Failure::usage(e.to_string()))?;
    let all = brute_force_routes(&w, &target, depth).map_err(|e| Failure::usage(e.to_string()))?;
    let set = match restrictions {
        Some(p) => {
            let spec: RestrictionSpec =
                serde_json::from_str(&read(p)?).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            RestrictionSet::from_spec(&spec).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
        }
        None => RestrictionSet::default(),
    };
    let opts = ReportOptions { smp_per_occurrence: smp };
    let mut listed = Vec::new();
    for route in filter_routes(&all, &set) {
        let report = build_report(route, &w, &opts).map_err(|e| Failure::usage(e.to_string()))?;
        listed.push(json!({"reactions": route.reactions, "report": report}));
    }
    emit(&format!("{}\n", pretty(&listed)), false)?;
    if listed.is_empty() {
        return Err(Failure::no_route(format!("no route to {product} within depth {depth}")));
    }
    Ok(())
}

pub fn vf_parse(expr: &str) -> Result<(), Failure> {
    let ast = parse_vf(expr).map_err(|e| Failure::usage(e.to_string()))?;
    emit(&format!("{}\n", render_vf(&ast)), false)?;
    Ok(())
}

#[derive(Deserialize)]
struct RouteFile {
    reactions: Vec<Reaction>,
    #[serde(default)]
    frontier: Vec<Molecule>,
}

pub fn vf_eval(expr: &str, route: &Path, world_path: &Path) -> Result<(), Failure> {
    let ast = parse_vf(expr).map_err(|e| Failure::usage(e.to_string()))?;
    let w = world(world_path)?;
    let r: RouteFile =
        serde_json::from_str(&read(route)?).map_err(|e| Failure::usage(format!("{}: {e}", route.display())))?;
    let state = RouteState { reactions: r.reactions, frontier: r.frontier };
    let b = breakdown(&ast, &state, &w).map_err(|e| Failure::usage(e.to_string()))?;
    emit(&format!("{}\n", pretty(&b)), false)?;
    Ok(())
}
