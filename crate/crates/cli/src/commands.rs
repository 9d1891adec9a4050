use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use perturb_lab::certificates::{packing_obstruction, small_gap_obstruction, CountMode};
use perturb_lab::extremal::{run_extremal_pipeline, ExtremalConfig};
use perturb_lab::gadget::bipartite::{gen_bipartite_instance, run_bipartite_pipeline, BipartiteConfig};
use perturb_lab::gadget::hypergraph::gen_super_regular_instance;
use perturb_lab::gadget::multipartite::{run_multipartite_pipeline, GadgetConfig};
use perturb_lab::generators::{extremal_bipartite, gnp, gnp_directed, gnp_multipartite, stable_instance, PerturbedModel};
use perturb_lab::graph::{read_graph, to_digraph_list, to_edge_list};
use perturb_lab::oracle::find_square_ham_cycle;
use perturb_lab::powers::verify_square_cycle;
use perturb_lab::report::Search;
use perturb_lab::threshold::{
    bisect_critical_p, estimate_success_prob, fit_exponent, predicted_threshold, BisectOptions, Decider, SweepPoint, SweepResult,
    SWEEP_CSV_HEADER,
};
use perturb_lab::{Budget, Graph, Seed, StabilityWitness, VertexSet};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::{CertifyArgs, Command, DeciderArg, EmbedArgs, Family, FitArgs, GadgetArgs, GadgetMode, GenArgs, SolveArgs, SweepArgs};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Certify(a) => certify(a),
        Command::Embed(a) => embed(a),
        Command::Gadget(a) => gadget(a),
        Command::Sweep(a) => sweep(a),
        Command::Fit(a) => fit(a),
    }
}

/// `version, command, seed, params`, then `status` and `result`, then timings.
fn emit(command: &str, seed: Option<u64>, params: &impl Serialize, status: &str, result: Value, started: Instant) -> Result<()> {
    let mut out = Map::new();
    out.insert("version".into(), json!(VERSION));
    out.insert("command".into(), json!(command));
    out.insert("seed".into(), json!(seed));
    out.insert("params".into(), serde_json::to_value(params)?);
    out.insert("status".into(), json!(status));
    out.insert("result".into(), result);
    out.insert("timings_ms".into(), json!({ "total": started.elapsed().as_secs_f64() * 1e3 }));
    print_out(&serde_json::to_string_pretty(&Value::Object(out))?)
}

/// A closed pipe downstream is not an error.
fn print_out(text: &str) -> Result<()> {
    let mut w = std::io::stdout().lock();
    match writeln!(w, "{text}").and_then(|()| w.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r.context("writing to stdout"),
    }
}

/// Witness file written next to stable instances.
#[derive(Debug, Serialize, Deserialize)]
pub struct WitnessFile {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub a: Vec<usize>,
}

impl WitnessFile {
    fn from_witness(w: &StabilityWitness) -> Self {
        WitnessFile { n: w.a.universe(), alpha: w.alpha, beta: w.beta, a: w.a.to_vec() }
    }

    fn into_witness(self) -> Result<StabilityWitness> {
        ensure!(self.a.iter().all(|&v| v < self.n), "witness vertex out of range for n = {}", self.n);
        Ok(StabilityWitness::from_a(VertexSet::from_iter(self.n, self.a), self.alpha, self.beta))
    }
}

fn witness_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".witness.json");
    PathBuf::from(s)
}

fn load_graph(path: &Path) -> Result<Graph> {
    read_graph(path).with_context(|| format!("reading {}", path.display()))
}

fn gen(a: GenArgs) -> Result<()> {
    let started = Instant::now();
    let seed = Seed(a.seed);
    let mut files = vec![a.out.display().to_string()];
    let (text, n, edges) = match a.family {
        Family::Gnp => {
            let g = gnp(a.n, a.p, seed)?;
            (to_edge_list(&g), g.n(), g.edge_count())
        }
        Family::GnpMulti => {
            ensure!(a.parts >= 1 && a.parts <= a.n, "--parts must lie in 1..=n");
            let sizes: Vec<usize> = (0..a.parts).map(|i| a.n / a.parts + usize::from(i < a.n % a.parts)).collect();
            let g = gnp_multipartite(&sizes, a.p, seed)?;
            (to_edge_list(&g), g.n(), g.edge_count())
        }
        Family::GnpDigraph => {
            let d = gnp_directed(a.n, a.p, seed)?;
            (to_digraph_list(&d), d.n(), d.arc_count())
        }
        Family::Extremal => {
            let (g, _, _) = extremal_bipartite(a.alpha, a.n)?;
            (to_edge_list(&g), g.n(), g.edge_count())
        }
        Family::Stable => {
            let (g, w) = stable_instance(a.alpha, a.beta, a.n, a.noise, seed)?;
            let wp = witness_path(&a.out);
            fs::write(&wp, serde_json::to_string_pretty(&WitnessFile::from_witness(&w))?)
                .with_context(|| format!("writing {}", wp.display()))?;
            files.push(wp.display().to_string());
            (to_edge_list(&g), g.n(), g.edge_count())
        }
    };
    fs::write(&a.out, text).with_context(|| format!("writing {}", a.out.display()))?;
    emit("gen", Some(a.seed), &a, "written", json!({ "n": n, "edges": edges, "files": files }), started)
}

fn solve(a: SolveArgs) -> Result<()> {
    let started = Instant::now();
    let g = load_graph(&a.input)?;
    let mut budget = Budget::new(a.budget);
    let found = find_square_ham_cycle(&g, &mut budget);
    let status = found.status();
    let result = match &found {
        Search::Found(order) => json!({ "ordering": order, "verified": verify_square_cycle(&g, order)? }),
        _ => json!({}),
    };
    emit("solve", None, &a, status, result, started)
}

fn certify(a: CertifyArgs) -> Result<()> {
    let started = Instant::now();
    let g = load_graph(&a.input)?;
    ensure!(a.a.iter().all(|&v| v < g.n()), "vertex of A out of range for n = {}", g.n());
    let aset = VertexSet::from_iter(g.n(), a.a.iter().copied());
    let bset = aset.complement();
    let mode = a.packing_budget.map_or(CountMode::Copies, CountMode::Packing);
    let packing = packing_obstruction(&g, &aset, &bset, a.k, mode)?;
    let gap = small_gap_obstruction(&g, &aset, &bset, a.k)?;
    let fired: Vec<_> = [&packing, &gap].into_iter().filter_map(|o| o.fired()).collect();
    let status = if fired.is_empty() { "not_applicable" } else { "fired" };
    let result = json!({ "certificates": fired, "packing_obstruction": packing, "small_gap_obstruction": gap });
    emit("certify", None, &a, status, result, started)
}

fn embed(a: EmbedArgs) -> Result<()> {
    let started = Instant::now();
    ensure!(a.k >= 2, "--k must be at least 2");
    let alpha = 1.0 / (a.k as f64 + 1.0);
    let (g, witness) = match &a.input {
        Some(path) => {
            let g = load_graph(path)?;
            let w = match &a.witness {
                Some(wp) => {
                    let text = fs::read_to_string(wp).with_context(|| format!("reading {}", wp.display()))?;
                    let wf: WitnessFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", wp.display()))?;
                    ensure!(wf.n == g.n(), "witness is for n = {}, graph has {}", wf.n, g.n());
                    Some(wf.into_witness()?)
                }
                None => None,
            };
            (g, w)
        }
        None => {
            let (g, w) = stable_instance(alpha, a.beta, a.n, a.noise, Seed(a.seed).derive("instance", 0))?;
            (g, Some(w))
        }
    };
    let n = g.n() as f64;
    let p = a.p.unwrap_or(a.c * n.ln() / n).min(1.0);
    let cfg = ExtremalConfig { beta: a.beta, ..ExtremalConfig::default() };
    let run = run_extremal_pipeline(&g, a.k, p, Seed(a.seed), witness, &cfg);
    let status = if run.success { "success" } else { "failed" };
    let mut result = serde_json::to_value(&run)?;
    result["p"] = json!(p);
    emit("embed", Some(a.seed), &a, status, result, started)
}

fn gadget(a: GadgetArgs) -> Result<()> {
    let started = Instant::now();
    let p = a.p.unwrap_or(a.c / a.n as f64).min(1.0);
    let seed = Seed(a.seed);
    let (success, mut result) = match a.mode {
        GadgetMode::Multipartite => {
            let d0 = a.delta0.unwrap_or(0.35);
            let d1 = a.delta1.unwrap_or(0.15);
            let inst = gen_super_regular_instance(a.k, a.n, a.d, d0, d1, seed.derive("instance", 0))?;
            let run = run_multipartite_pipeline(&inst, p, seed, &GadgetConfig::default());
            let mut v = serde_json::to_value(&run)?;
            v["part_size"] = json!(inst.m);
            v["ends"] = json!({ "x": inst.x, "y": inst.y });
            (run.success, v)
        }
        GadgetMode::Bipartite => {
            ensure!(a.k == 2, "bipartite mode always uses k = 2");
            let mut cfg = BipartiteConfig::default();
            cfg.delta0 = a.delta0.unwrap_or(cfg.delta0);
            cfg.delta1 = a.delta1.unwrap_or(cfg.delta1);
            let inst = gen_bipartite_instance(a.n, a.m.unwrap_or(a.n), a.d, seed.derive("instance", 0))?;
            let run = run_bipartite_pipeline(&inst, p, seed, &cfg);
            let mut v = serde_json::to_value(&run)?;
            v["ends"] = json!({ "x": inst.x, "y": inst.y });
            (run.success, v)
        }
    };
    result["p"] = json!(p);
    emit("gadget", Some(a.seed), &a, if success { "success" } else { "failed" }, result, started)
}

fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(j) = jobs {
        ensure!(j >= 1, "--jobs must be at least 1");
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("configuring the worker pool")?;
    }
    Ok(())
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    ensure!(parts.len() == 3, "--p-grid must look like lo:hi:count");
    let lo: f64 = parts[0].parse().context("grid lower end")?;
    let hi: f64 = parts[1].parse().context("grid upper end")?;
    let count: usize = parts[2].parse().context("grid count")?;
    ensure!(count >= 1 && (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi, "bad grid {s}");
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
}

#[derive(Serialize)]
struct SweepRow<'a> {
    alpha: f64,
    n: usize,
    p: f64,
    trials: usize,
    successes: usize,
    decider: &'a str,
    seed: u64,
}

fn sweep(a: SweepArgs) -> Result<()> {
    set_jobs(a.jobs)?;
    let grid = parse_grid(&a.p_grid)?;
    let k = predicted_threshold(a.alpha)?.k.unwrap_or(2);
    let (dense, decider, model) = match a.decider {
        DeciderArg::Exact => (extremal_bipartite(a.alpha, a.n)?.0, Decider::Exact { budget: a.budget }, "extremal"),
        DeciderArg::Certificate => {
            let (g, aset, _) = extremal_bipartite(a.alpha, a.n)?;
            (g, Decider::Certificate { k, a: aset }, "extremal")
        }
        DeciderArg::Pipeline => {
            let alpha = 1.0 / (k as f64 + 1.0);
            let (g, w) = stable_instance(alpha, a.beta, a.n, a.noise, Seed(a.seed).derive("instance", 0))?;
            let cfg = ExtremalConfig { beta: a.beta, ..ExtremalConfig::default() };
            (g, Decider::Pipeline { k, witness: Some(w), config: cfg }, "stable")
        }
    };
    let mut points: Vec<SweepPoint> = Vec::new();
    for &p in &grid {
        let m = PerturbedModel::new(dense.clone(), p, a.alpha)?;
        points.push(estimate_success_prob(&m, &decider, a.trials, Seed(a.seed))?);
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(std::io::stdout());
    w.write_record(SWEEP_CSV_HEADER.split(','))?;
    for pt in &points {
        w.serialize(SweepRow {
            alpha: a.alpha,
            n: a.n,
            p: pt.p,
            trials: pt.trials,
            successes: pt.successes,
            decider: pt.decider.label(),
            seed: a.seed,
        })?;
    }
    w.flush()?;
    if let Some(path) = &a.json {
        let res = SweepResult { n: a.n, alpha: a.alpha, model: model.into(), seed: a.seed, points };
        let v = json!({ "version": VERSION, "command": "sweep", "seed": a.seed, "params": &a, "result": res });
        fs::write(path, serde_json::to_string_pretty(&v)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct FitRow {
    n: f64,
    p_hat: f64,
}

fn fit(a: FitArgs) -> Result<()> {
    let started = Instant::now();
    set_jobs(a.jobs)?;
    let mut extra = Map::new();
    let points: Vec<(f64, f64)> = if let Some(path) = &a.input {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        r.deserialize::<FitRow>().map(|row| row.map(|x| (x.n, x.p_hat))).collect::<Result<_, _>>().context("parsing n,p_hat rows")?
    } else if !a.points.is_empty() {
        a.points
            .iter()
            .map(|s| {
                let (n, p) = s.split_once(':').with_context(|| format!("point {s} is not n:p_hat"))?;
                Ok((n.parse().context("n")?, p.parse().context("p_hat")?))
            })
            .collect::<Result<_>>()?
    } else if !a.bisect.is_empty() {
        let k = predicted_threshold(a.alpha)?.k.unwrap_or(2);
        let alpha = 1.0 / (k as f64 + 1.0);
        let mut pts = Vec::new();
        let mut runs = BTreeMap::new();
        for &n in &a.bisect {
            let nf = n as f64;
            let (g, w) = stable_instance(alpha, 0.01, n, 1.0 / nf, Seed(a.seed).derive("instance", n as u64))?;
            let model = PerturbedModel::new(g, 0.0, alpha)?;
            let decider = Decider::Pipeline { k, witness: Some(w), config: ExtremalConfig::default() };
            let opts = BisectOptions {
                lo: 0.5 / nf,
                hi: (30.0 * nf.ln() / nf).min(1.0),
                tol: a.tol,
                rel_width: 0.02,
                max_probes: 20,
                target: 0.5,
            };
            let b = bisect_critical_p(&model, &decider, a.trials, &opts, Seed(a.seed))?;
            pts.push((nf, b.p_hat));
            runs.insert(n.to_string(), b);
        }
        let logless: Vec<(f64, f64)> = pts.iter().map(|&(n, p)| (n, p / n.ln())).collect();
        extra.insert("measurement".into(), json!("algorithmic threshold of the extremal pipeline"));
        extra.insert("bisections".into(), serde_json::to_value(runs)?);
        extra.insert("log_corrected".into(), serde_json::to_value(fit_exponent(&logless)?)?);
        pts
    } else {
        bail!("give one of --in, --points or --bisect");
    };
    let f = fit_exponent(&points)?;
    let mut result = serde_json::to_value(&f)?;
    if let Ok(pred) = predicted_threshold(a.alpha) {
        result["predicted"] = serde_json::to_value(pred)?;
    }
    for (key, v) in extra {
        result[key] = v;
    }
    emit("fit", Some(a.seed), &a, "fitted", result, started)
}
