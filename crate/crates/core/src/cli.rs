//! Command-line interface.
//!
//! Subcommands map one-to-one onto the library surface: `eval`, `saddle`,
//! `certify`, `critical`, `window`, `theorem2`, `simulate fixed`,
//! `simulate retrieval`, `sweep`, `regions`. Output is a single JSON
//! document (or CSV for `sweep`) with floats printed at 17 significant
//! digits, a `schema_version` field, and an echo of the resolved inputs,
//! so identical invocations produce byte-identical output regardless of
//! the thread cap.
//!
//! Exit codes: 0 success (and certificate `Holds`), 1 certified `Fails`,
//! 2 for errors, validation failures, or `Indeterminate`.
//!
//! A config file of `key=value` lines can pre-set any parameter; explicit
//! flags win. `--threads` (or `HOPCAP_THREADS`) caps the worker pool
//! without affecting any output byte.

use crate::capacity::{
    certify_theorem3, critical_pair, delta_c_asym, delta_window, pstar_exponent,
    theorem2_exponent, verify_paper_regions, Verdict,
};
use crate::functional::{a_star, big_d, c_star, f0, f0_d, f1_d, Branch, ModelParams};
use crate::hopfield::{mc_fixed_probability, retrieval_error};
use crate::saddle::{maximize_u, phi0, rate_exponent};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::io::Write;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "hopcap",
    about = "Certified storage-capacity bounds and simulation for the zero-temperature Hopfield model",
    version
)]
pub struct Cli {
    /// Config file with key=value lines; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Cap the worker-thread count (default: HOPCAP_THREADS or all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Evaluate the rate functionals at a point (U, V).
    Eval(EvalArgs),
    /// Solve the max-min saddle at fixed parameters.
    Saddle(SaddleArgs),
    /// Certify the energy-barrier condition over a threshold grid.
    Certify(CertifyArgs),
    /// Locate the critical pair (alpha_c, delta_c).
    Critical(CriticalArgs),
    /// Sign-change points of the negativity window in delta.
    Window(WindowArgs),
    /// Small-load closed forms and the delta_c asymptote.
    Theorem2(Theorem2Args),
    /// Monte Carlo simulation of the bit-packed network.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// CSV sweep of the barrier objective over parameter grids.
    Sweep(SweepArgs),
    /// Verify the three published certification regions.
    Regions(RegionsArgs),
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub v: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub qprime: Option<f64>,
    #[arg(long)]
    pub delta1: Option<f64>,
}

#[derive(Args)]
pub struct SaddleArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub qprime: Option<f64>,
}

#[derive(Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub q_max: Option<f64>,
    #[arg(long)]
    pub q_step: Option<f64>,
}

#[derive(Args)]
pub struct CriticalArgs {
    #[arg(long)]
    pub seed_alpha: Option<f64>,
    #[arg(long)]
    pub seed_delta: Option<f64>,
}

#[derive(Args)]
pub struct WindowArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Args)]
pub struct Theorem2Args {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Subcommand)]
pub enum SimulateCmd {
    /// Probability that the flip configuration is a strict fixed point.
    Fixed(SimFixedArgs),
    /// Relaxation from a stored pattern: final error statistics.
    Retrieval(SimRetrievalArgs),
}

#[derive(Args)]
pub struct SimFixedArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct SimRetrievalArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Grid spec `start:stop:step` or a single value.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
}

#[derive(Args)]
pub struct RegionsArgs {
    /// Additionally sample each load interval at step 5e-4.
    #[arg(long)]
    pub dense: bool,
}

/// Parsed `key=value` config lines; `#` starts a comment.
fn load_config(path: &str) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read config {path}: {e}")))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Invalid(format!(
                "config {path}:{}: expected key=value, got `{line}`",
                lineno + 1
            )));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

struct Resolver {
    config: BTreeMap<String, String>,
}

impl Resolver {
    fn get<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.config.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Invalid(format!("config key {key}: cannot parse `{raw}`"))),
        }
    }

    fn require<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.get(flag, key)?
            .ok_or_else(|| Error::Invalid(format!("missing required parameter --{key}")))
    }

    fn or_default<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T> {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }
}

/// Floats at 17 significant digits: round-trips exactly through parsing.
fn jf(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn jb(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Plain => "plain",
        Branch::Modified => "modified",
    }
}

/// Ordered-key JSON object writer (insertion order; keys and string values
/// are fixed identifiers, so no escaping is needed).
struct Obj {
    parts: Vec<String>,
}

impl Obj {
    fn new() -> Obj {
        let mut o = Obj { parts: Vec::new() };
        o.raw("schema_version", &SCHEMA_VERSION.to_string());
        o
    }
    fn nested() -> Obj {
        Obj { parts: Vec::new() }
    }
    fn raw(&mut self, k: &str, v: &str) -> &mut Self {
        self.parts.push(format!("\"{k}\":{v}"));
        self
    }
    fn num(&mut self, k: &str, x: f64) -> &mut Self {
        self.raw(k, &jf(x))
    }
    fn int(&mut self, k: &str, x: u64) -> &mut Self {
        self.raw(k, &x.to_string())
    }
    fn s(&mut self, k: &str, v: &str) -> &mut Self {
        self.parts.push(format!("\"{k}\":\"{v}\""));
        self
    }
    fn boolean(&mut self, k: &str, b: bool) -> &mut Self {
        self.raw(k, jb(b))
    }
    fn obj(&mut self, k: &str, o: Obj) -> &mut Self {
        let body = o.finish();
        self.raw(k, &body)
    }
    fn finish(self) -> String {
        format!("{{{}}}", self.parts.join(","))
    }
}

fn emit(out: &Option<String>, body: &str) -> Result<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(|e| Error::Invalid(format!("write failed: {e}")))
        }
        Some(path) => std::fs::write(path, format!("{body}\n"))
            .map_err(|e| Error::Invalid(format!("cannot write {path}: {e}"))),
    }
}

/// Runs the parsed CLI and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.threads.or_else(|| {
        std::env::var("HOPCAP_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    }) {
        // results are independent of the pool size; ignore re-init errors
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    let resolver = match &cli.config {
        None => Resolver {
            config: BTreeMap::new(),
        },
        Some(path) => match load_config(path) {
            Ok(config) => Resolver { config },
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        },
    };
    match dispatch(&cli, &resolver) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: &Cli, r: &Resolver) -> Result<i32> {
    match &cli.command {
        Command::Eval(a) => cmd_eval(cli, r, a),
        Command::Saddle(a) => cmd_saddle(cli, r, a),
        Command::Certify(a) => cmd_certify(cli, r, a),
        Command::Critical(a) => cmd_critical(cli, r, a),
        Command::Window(a) => cmd_window(cli, r, a),
        Command::Theorem2(a) => cmd_theorem2(cli, r, a),
        Command::Simulate(SimulateCmd::Fixed(a)) => cmd_simulate_fixed(cli, r, a),
        Command::Simulate(SimulateCmd::Retrieval(a)) => cmd_simulate_retrieval(cli, r, a),
        Command::Sweep(a) => cmd_sweep(cli, r, a),
        Command::Regions(a) => cmd_regions(cli, a),
    }
}

fn params_from(
    r: &Resolver,
    alpha: Option<f64>,
    delta: Option<f64>,
    q: Option<f64>,
    qprime: Option<f64>,
    delta1: Option<f64>,
) -> Result<ModelParams> {
    let alpha = r.require(alpha, "alpha")?;
    let delta = r.require(delta, "delta")?;
    let q = r.or_default(q, "q", 0.0)?;
    let q_prime = r.or_default(qprime, "qprime", -q)?;
    let delta1 = r.or_default(delta1, "delta1", 0.0)?;
    ModelParams::with_delta1(alpha, delta, q, q_prime, delta1)
}

fn echo_params(p: &ModelParams) -> Obj {
    let mut o = Obj::nested();
    o.num("alpha", p.alpha)
        .num("delta", p.delta)
        .num("q", p.q)
        .num("qprime", p.q_prime)
        .num("delta1", p.delta1);
    o
}

fn cmd_eval(cli: &Cli, r: &Resolver, a: &EvalArgs) -> Result<i32> {
    let params = params_from(r, a.alpha, a.delta, a.q, a.qprime, a.delta1)?;
    let u = r.require(a.u, "u")?;
    let v = r.require(a.v, "v")?;
    let (a1, a2) = a_star(&params);
    let plain = f0(u, v, &params)?;
    let d = big_d(u, v, &params)?;
    let fv = f0_d(u, v, &params)?;
    let f1 = f1_d(u, v, &params)?;
    let mut o = Obj::new();
    o.s("command", "eval").obj("input", {
        let mut i = echo_params(&params);
        i.num("u", u).num("v", v);
        i
    });
    o.num("a1_star", a1).num("a2_star", a2);
    o.num("f0", plain).num("big_d", d);
    o.obj("f0_d", {
        let mut x = Obj::nested();
        x.num("value", fv.value)
            .num("d_value", fv.d_value)
            .s("branch", branch_name(fv.branch));
        x
    });
    o.obj("f1_d", {
        let mut x = Obj::nested();
        x.num("value", f1.value)
            .num("d_value", f1.d_value)
            .s("branch", branch_name(f1.branch));
        x
    });
    o.num("c_star", c_star(params.delta)?);
    emit(&cli.out, &o.finish())?;
    Ok(0)
}

fn cmd_saddle(cli: &Cli, r: &Resolver, a: &SaddleArgs) -> Result<i32> {
    let params = params_from(r, a.alpha, a.delta, a.q, a.qprime, None)?;
    let s = maximize_u(&params)?;
    let rate = s.value + crate::saddle::rate_offset(params.alpha);
    let mut o = Obj::new();
    o.s("command", "saddle").obj("input", echo_params(&params));
    o.num("u_star", s.u_star)
        .num("v_star", s.v_star)
        .num("value", s.value)
        .num("d_at_saddle", s.d_at_saddle)
        .s("branch", branch_name(s.branch))
        .num("v_residual", s.v_residual)
        .num("u_bracket_lo", s.u_bracket.0)
        .num("u_bracket_hi", s.u_bracket.1)
        .num("rate_exponent", rate);
    emit(&cli.out, &o.finish())?;
    Ok(0)
}

fn cmd_certify(cli: &Cli, r: &Resolver, a: &CertifyArgs) -> Result<i32> {
    let alpha = r.require(a.alpha, "alpha")?;
    let delta = r.require(a.delta, "delta")?;
    let q_max = r.or_default(a.q_max, "q_max", 0.131)?;
    let q_step = r.or_default(a.q_step, "q_step", 1e-3)?;
    let c = certify_theorem3(alpha, delta, q_max, q_step)?;
    let mut o = Obj::new();
    o.s("command", "certify").obj("input", {
        let mut i = Obj::nested();
        i.num("alpha", alpha)
            .num("delta", delta)
            .num("q_max", q_max)
            .num("q_step", q_step);
        i
    });
    o.num("worst_margin", c.worst_margin)
        .num("worst_q", c.worst_q)
        .boolean("cond_t317", c.cond_t317)
        .boolean("cond_t318_phi0", c.cond_t318.0)
        .boolean("cond_t318_dq", c.cond_t318.1)
        .boolean("cond_t318_dalpha", c.cond_t318.2)
        .boolean("prop3_q0_ok", c.prop3_q0_ok)
        .s(
            "verdict",
            match c.verdict {
                Verdict::Holds => "holds",
                Verdict::Fails => "fails",
                Verdict::Indeterminate => "indeterminate",
            },
        );
    emit(&cli.out, &o.finish())?;
    Ok(match c.verdict {
        Verdict::Holds => 0,
        Verdict::Fails => 1,
        Verdict::Indeterminate => 2,
    })
}

fn cmd_critical(cli: &Cli, r: &Resolver, a: &CriticalArgs) -> Result<i32> {
    let sa = r.or_default(a.seed_alpha, "seed_alpha", 0.11)?;
    let sd = r.or_default(a.seed_delta, "seed_delta", 0.008)?;
    let cp = critical_pair(sa, sd)?;
    let mut o = Obj::new();
    o.s("command", "critical").obj("input", {
        let mut i = Obj::nested();
        i.num("seed_alpha", sa).num("seed_delta", sd);
        i
    });
    o.num("alpha_c", cp.alpha_c)
        .num("delta_c", cp.delta_c)
        .num("residual_phi", cp.residual_phi)
        .num("residual_dphi", cp.residual_dphi);
    emit(&cli.out, &o.finish())?;
    Ok(0)
}

fn cmd_window(cli: &Cli, r: &Resolver, a: &WindowArgs) -> Result<i32> {
    let alpha = r.require(a.alpha, "alpha")?;
    let mut o = Obj::new();
    o.s("command", "window").obj("input", {
        let mut i = Obj::nested();
        i.num("alpha", alpha);
        i
    });
    match delta_window(alpha) {
        Ok((d1, d2, d3)) => {
            o.boolean("collapsed", false)
                .num("delta1", d1)
                .num("delta2", d2)
                .num("delta3", d3);
            emit(&cli.out, &o.finish())?;
            Ok(0)
        }
        Err(Error::WindowCollapsed { delta_min, phi_min }) => {
            o.boolean("collapsed", true)
                .num("delta_min", delta_min)
                .num("phi_min", phi_min);
            emit(&cli.out, &o.finish())?;
            Ok(2)
        }
        Err(e) => Err(e),
    }
}

fn cmd_theorem2(cli: &Cli, r: &Resolver, a: &Theorem2Args) -> Result<i32> {
    let alpha = r.require(a.alpha, "alpha")?;
    let delta = r.require(a.delta, "delta")?;
    let (t2, in_hyp) = theorem2_exponent(alpha, delta)?;
    let mut o = Obj::new();
    o.s("command", "theorem2").obj("input", {
        let mut i = Obj::nested();
        i.num("alpha", alpha).num("delta", delta);
        i
    });
    o.num("theorem2_exponent", t2)
        .boolean("in_hypothesis", in_hyp)
        .num("pstar_exponent", pstar_exponent(alpha, delta)?)
        .num("delta_c_asym", delta_c_asym(alpha)?);
    emit(&cli.out, &o.finish())?;
    Ok(0)
}

fn cmd_simulate_fixed(cli: &Cli, r: &Resolver, a: &SimFixedArgs) -> Result<i32> {
    let n = r.require(a.n, "n")?;
    let alpha = r.require(a.alpha, "alpha")?;
    let delta = r.or_default(a.delta, "delta", 0.0)?;
    let trials = r.require(a.trials, "trials")?;
    let seed = r.require(a.seed, "seed")?;
    let run = mc_fixed_probability(n, alpha, delta, trials, seed)?;
    let rate = rate_exponent(&ModelParams::barrier(alpha, delta, 0.0)?)?;
    let e = run.estimate;
    let lhs = (e.p_hat.max(1.0 / trials as f64)).ln() / n as f64;
    let mut o = Obj::new();
    o.s("command", "simulate_fixed").obj("input", {
        let mut i = Obj::nested();
        i.int("n", n as u64)
            .num("alpha", alpha)
            .num("delta", delta)
            .int("trials", trials)
            .int("seed", seed);
        i
    });
    o.obj("estimate", {
        let mut x = Obj::nested();
        x.int("successes", e.successes)
            .int("trials", e.trials)
            .num("p_hat", e.p_hat)
            .num("ci_low", e.ci_low)
            .num("ci_high", e.ci_high)
            .int("seed", e.seed);
        x
    });
    o.int("marginal_trials", run.marginal_trials)
        .int("p", run.p as u64)
        .num("alpha_emp", run.alpha_emp);
    o.obj("theory", {
        let mut x = Obj::nested();
        // one-sided check: (1/n) log max(p_hat, 1/trials) against the rate
        // bound plus finite-size slack
        x.num("rate_exponent", rate)
            .num("log_phat_over_n", lhs)
            .num("delta_c_asym", delta_c_asym(alpha)?)
            .boolean("bound_respected", lhs <= rate + 0.05);
        x
    });
    emit(&cli.out, &o.finish())?;
    Ok(0)
}

fn cmd_simulate_retrieval(cli: &Cli, r: &Resolver, a: &SimRetrievalArgs) -> Result<i32> {
    let n = r.require(a.n, "n")?;
    let alpha = r.require(a.alpha, "alpha")?;
    let trials = r.require(a.trials, "trials")?;
    let seed = r.require(a.seed, "seed")?;
    let st = retrieval_error(n, alpha, trials, seed)?;
    let onestep_theory = crate::specfun::gauss_tail((n as f64 / st.p as f64).sqrt())?;
    let mut o = Obj::new();
    o.s("command", "simulate_retrieval").obj("input", {
        let mut i = Obj::nested();
        i.int("n", n as u64)
            .num("alpha", alpha)
            .int("trials", trials)
            .int("seed", seed);
        i
    });
    o.obj("stats", {
        let mut x = Obj::nested();
        x.int("trials", st.trials)
            .num("mean_error", st.mean_error)
            .num("se_error", st.se_error)
            .num("mean_onestep", st.mean_onestep)
            .num("se_onestep", st.se_onestep)
            .int("nonconverged", st.nonconverged)
            .int("p", st.p as u64)
            .num("alpha_emp", st.alpha_emp)
            .int("seed", st.seed);
        x
    });
    o.obj("theory", {
        let mut x = Obj::nested();
        x.num("onestep_rate", onestep_theory)
            .num("delta_c_asym", delta_c_asym(alpha)?);
        x
    });
    emit(&cli.out, &o.finish())?;
    Ok(0)
}

/// Parses `start:stop:step` (inclusive endpoints) or a single value.
fn parse_axis(spec: &str, name: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Invalid(format!("axis {name}: cannot parse `{s}`")))
    };
    match parts.as_slice() {
        [one] => Ok(vec![parse(one)?]),
        [start, stop, step] => {
            let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
            if !(step > 0.0) {
                return Err(Error::Invalid(format!("axis {name}: step must be > 0")));
            }
            let mut vals = Vec::new();
            let count = ((stop - start) / step + 1e-9).floor();
            if count >= 0.0 {
                for i in 0..=(count as usize) {
                    vals.push(start + step * i as f64);
                }
            }
            Ok(vals)
        }
        _ => Err(Error::Invalid(format!(
            "axis {name}: expected `value` or `start:stop:step`, got `{spec}`"
        ))),
    }
}

fn cmd_sweep(cli: &Cli, r: &Resolver, a: &SweepArgs) -> Result<i32> {
    let axis = |flag: &Option<String>, key: &str, default: f64| -> Result<Vec<f64>> {
        let spec = match flag {
            Some(s) => Some(s.clone()),
            None => r.config.get(key).cloned(),
        };
        match spec {
            None => Ok(vec![default]),
            Some(s) => parse_axis(&s, key),
        }
    };
    let alphas = axis(&a.alpha, "alpha", 0.1)?;
    let deltas = axis(&a.delta, "delta", 0.0)?;
    let qs = axis(&a.q, "q", 0.0)?;
    let mut grid: Vec<(f64, f64, f64)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut dups = 0usize;
    for &al in &alphas {
        for &de in &deltas {
            for &q in &qs {
                if seen.insert((al.to_bits(), de.to_bits(), q.to_bits())) {
                    grid.push((al, de, q));
                } else {
                    dups += 1;
                }
            }
        }
    }
    if dups > 0 {
        eprintln!("warning: {dups} duplicate grid points removed");
    }
    let mut csv =
        String::from("alpha,delta,q,phi0,phi0_u,rate_exponent,u_star,branch,delta_c_asym\n");
    for (al, de, q) in grid {
        let params = ModelParams::barrier(al, de, q)?;
        let (p0, p0u) = phi0(q, al, de)?;
        let s = maximize_u(&params)?;
        let rate = s.value + crate::saddle::rate_offset(al);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            jf(al),
            jf(de),
            jf(q),
            jf(p0),
            jf(p0u),
            jf(rate),
            jf(s.u_star),
            branch_name(s.branch),
            jf(delta_c_asym(al)?)
        ));
    }
    match &cli.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(csv.as_bytes())
                .map_err(|e| Error::Invalid(format!("write failed: {e}")))?;
        }
        Some(path) => std::fs::write(path, &csv)
            .map_err(|e| Error::Invalid(format!("cannot write {path}: {e}")))?,
    }
    Ok(0)
}

fn cmd_regions(cli: &Cli, a: &RegionsArgs) -> Result<i32> {
    let report = verify_paper_regions(a.dense)?;
    let mut o = Obj::new();
    o.s("command", "regions").obj("input", {
        let mut i = Obj::nested();
        i.boolean("dense", a.dense);
        i
    });
    let mut rows = Vec::new();
    for reg in &report.regions {
        let mut x = Obj::nested();
        x.num("alpha_lo", reg.alpha_lo)
            .num("alpha_hi", reg.alpha_hi)
            .num("delta", reg.delta)
            .num("phi0_at_hi", reg.phi0_at_hi)
            .num("u1", reg.u1)
            .num("u2", reg.u2)
            .num("dphi_dq_at_u2", reg.dphi_dq_at_u2)
            .num("dphi_dalpha_at_u1", reg.dphi_dalpha_at_u1)
            .num("t317_lo", reg.t317_lo)
            .num("t317_hi", reg.t317_hi)
            .boolean("kc_ok", reg.kc_ok)
            .num("d_guard_min", reg.d_guard_min)
            .boolean("u_band_ok", reg.u_band_ok)
            .boolean("pass", reg.pass);
        rows.push(x.finish());
    }
    o.raw("regions", &format!("[{}]", rows.join(",")));
    o.boolean("all_pass", report.all_pass);
    emit(&cli.out, &o.finish())?;
    Ok(if report.all_pass { 0 } else { 1 })
}
