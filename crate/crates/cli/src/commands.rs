use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use cvarbound::cvar::{
    bootstrap_variance, calibrate_alpha, cdf_csv, cvar_empirical, cvar_filtered, Side, ValueSamples,
};
use cvarbound::pec::{pec_expectation, sample_pec};
use cvarbound::problems::{
    brute_force, build_qaoa, grid_search_p1, heavy_hex_instance, maxcut_3regular,
    FeasibilityFilter, FilterPredicate, HeavyHexInstance, HeavyHexShape, IsingPolynomial,
    QaoaLayout, QaoaParams, Sense,
};
use cvarbound::report::{
    bound_report, derive_overheads, min_cnot_fidelity, min_layer_fidelity, render_table,
    twirl_compare,
};
use cvarbound::rng::stream;
use cvarbound::sim::SampleSet;
use cvarbound::{LayeredCircuit, PauliLindbladModel, PerCnotNoise, Simulator};
use rand::Rng;
use serde::Serialize;

use crate::args::*;
use crate::output::{config_hash, resolve_out, Manifest, Output};

pub fn run(cli: Cli, args: Vec<String>) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads: must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("--threads")?;
    }
    match (cli.replay, cli.command) {
        (Some(_), Some(command)) => bail!(
            "--replay: cannot be combined with the {} subcommand",
            command.name()
        ),
        (Some(path), None) => replay(&path, cli.out),
        (None, Some(command)) => execute(command, &resolve_out(cli.out), args).map(|_| ()),
        (None, None) => bail!("no subcommand given; see --help"),
    }
}

fn execute(command: Command, out_dir: &Path, args: Vec<String>) -> Result<Manifest> {
    let mut out = Output::create(out_dir)?;
    match &command {
        Command::GenProblem(a) => gen_problem(a, &mut out)?,
        Command::RunQaoa(a) => run_qaoa(a, &mut out)?,
        Command::Cvar(a) => cvar(a, &mut out)?,
        Command::Pec(a) => pec(a, &mut out)?,
        Command::BoundsReport(a) => bounds(a, &mut out)?,
        Command::BootstrapVar(a) => bootstrap(a, &mut out)?,
        Command::Overhead(a) => overhead(a, &mut out)?,
        Command::MinLf(a) => min_lf(a, &mut out)?,
        Command::TwirlCompare(a) => twirl(a, &mut out)?,
    }
    out.finish(&command, args)
}

/// Re-runs a recorded command and fails unless every output hashes the same.
fn replay(path: &Path, out: Option<std::path::PathBuf>) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("--replay: cannot read {}", path.display()))?;
    let recorded: Manifest = serde_json::from_str(&text)
        .with_context(|| format!("--replay: {} is not a manifest", path.display()))?;
    let mut argv = vec![recorded.tool.clone()];
    argv.extend(recorded.args.iter().cloned());
    if let Some(dir) = &out {
        argv.push("--out".into());
        argv.push(dir.display().to_string());
    }
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| anyhow!("--replay: recorded arguments do not parse: {e}"))?;
    let command = cli
        .command
        .ok_or_else(|| anyhow!("--replay: manifest records no subcommand"))?;
    if config_hash(&command)? != recorded.config_hash {
        bail!("--replay: configuration hash differs from the manifest");
    }
    let fresh = execute(command, &resolve_out(cli.out), recorded.args.clone())?;
    let differing: Vec<&String> = recorded
        .outputs
        .iter()
        .filter(|(name, hash)| fresh.outputs.get(*name) != Some(*hash))
        .map(|(name, _)| name)
        .collect();
    if !differing.is_empty() || fresh.outputs.len() != recorded.outputs.len() {
        bail!("--replay: outputs differ from the manifest: {differing:?}");
    }
    println!(
        "replayed {}: {} outputs identical",
        recorded.command,
        fresh.outputs.len()
    );
    Ok(())
}

fn read(path: &Path, flag: &str) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("{flag}: cannot read {}", path.display()))
}

fn load_problem(path: &Path) -> Result<IsingPolynomial> {
    IsingPolynomial::from_json(&read(path, "--problem")?)
        .with_context(|| format!("--problem: {}", path.display()))
}

fn load_samples(path: &Path, poly: &IsingPolynomial) -> Result<SampleSet> {
    let s = SampleSet::from_csv(&read(path, "--samples")?)
        .with_context(|| format!("--samples: {}", path.display()))?;
    if s.n != poly.n() {
        bail!(
            "--samples: {} qubits, but the problem has {}",
            s.n,
            poly.n()
        );
    }
    Ok(s)
}

fn rows(items: &[(&str, String)]) -> String {
    render_table(
        &items
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect::<Vec<_>>(),
    )
}

fn gen_problem(a: &GenProblem, out: &mut Output) -> Result<()> {
    let poly = match a.kind {
        ProblemKind::Maxcut3Reg => {
            let nodes = a
                .nodes
                .ok_or_else(|| anyhow!("--nodes: required for maxcut-3reg"))?;
            let (graph, poly) = maxcut_3regular(nodes, a.seed).context("--nodes")?;
            out.write_json("graph.json", &graph)?;
            poly
        }
        ProblemKind::HeavyHex => {
            let shape: HeavyHexShape = a.shape.parse().context("--shape")?;
            let inst = heavy_hex_instance(shape, a.seed)?;
            out.write_json("instance.json", &inst)?;
            inst.polynomial
        }
    };
    out.write("problem.json", &(poly.to_json()? + "\n"))?;
    print!(
        "{}",
        rows(&[
            ("qubits", poly.n().to_string()),
            ("linear terms", poly.linear().len().to_string()),
            ("quadratic terms", poly.quadratic().len().to_string()),
            ("cubic terms", poly.cubic().len().to_string()),
        ])
    );
    Ok(())
}

struct Resolved {
    circuit: LayeredCircuit,
    objective: Option<IsingPolynomial>,
    params: Option<QaoaParams>,
    grid_expectation: Option<f64>,
}

impl Resolved {
    fn objective(&self) -> Result<&IsingPolynomial> {
        self.objective
            .as_ref()
            .ok_or_else(|| anyhow!("--problem: an objective is required for this command"))
    }

    /// Noise-free mean of the objective when the register fits the statevector.
    fn ideal_mean(&self, sim: &Simulator) -> Result<Option<f64>> {
        match &self.objective {
            Some(p) if self.circuit.n() <= sim.statevector_limit => Ok(Some(
                sim.ideal_distribution(&self.circuit)?
                    .expectation(|x| p.evaluate_bits(x)),
            )),
            _ => Ok(None),
        }
    }
}

fn angles(
    src: &CircuitSource,
    poly: &IsingPolynomial,
    sim: &Simulator,
) -> Result<(QaoaParams, Option<f64>)> {
    if let Some(path) = &src.params {
        let params: QaoaParams = serde_json::from_str(&read(path, "--params")?)
            .with_context(|| format!("--params: {}", path.display()))?;
        let params = QaoaParams::new(params.gammas, params.betas).context("--params")?;
        return Ok((params, None));
    }
    if let Some(steps) = src.grid {
        let g = grid_search_p1(poly, steps, sim).context("--grid")?;
        return Ok((g.params, Some(g.expectation)));
    }
    if src.gamma.is_empty() && src.beta.is_empty() {
        bail!("--gamma/--beta: angles required, or use --params or --grid");
    }
    Ok((
        QaoaParams::new(src.gamma.clone(), src.beta.clone()).context("--gamma/--beta")?,
        None,
    ))
}

fn resolve(src: &CircuitSource, sim: &Simulator) -> Result<Resolved> {
    let problem = src.problem.as_deref().map(load_problem).transpose()?;
    let mut r = if let Some(path) = &src.circuit {
        let circuit =
            LayeredCircuit::load(path).with_context(|| format!("--circuit: {}", path.display()))?;
        if let Some(p) = &problem {
            if p.n() != circuit.n() {
                bail!(
                    "--problem: {} qubits, but the circuit has {}",
                    p.n(),
                    circuit.n()
                );
            }
        }
        Resolved {
            circuit,
            objective: problem,
            params: None,
            grid_expectation: None,
        }
    } else if let Some(path) = &src.instance {
        let inst: HeavyHexInstance = serde_json::from_str(&read(path, "--instance")?)
            .with_context(|| format!("--instance: {}", path.display()))?;
        let (params, grid) = angles(src, &inst.polynomial, sim)?;
        let circuit = build_qaoa(
            &inst.polynomial,
            &params,
            QaoaLayout::HeavyHexParity(&inst.lattice),
        )?;
        Resolved {
            circuit,
            objective: Some(inst.polynomial),
            params: Some(params),
            grid_expectation: grid,
        }
    } else if let Some(poly) = problem {
        let (params, grid) = angles(src, &poly, sim)?;
        let circuit = build_qaoa(&poly, &params, QaoaLayout::Generic)?;
        Resolved {
            circuit,
            objective: Some(poly),
            params: Some(params),
            grid_expectation: grid,
        }
    } else {
        bail!("--circuit, --problem or --instance: one is required");
    };
    if let Some(lambda) = src.lambda_per_cnot {
        let noise = PerCnotNoise::new(lambda).context("--lambda-per-cnot")?;
        r.circuit = r.circuit.with_cnot_noise(&noise)?;
    }
    if let Some(path) = &src.noise {
        let model = PauliLindbladModel::from_json(&read(path, "--noise")?)
            .with_context(|| format!("--noise: {}", path.display()))?;
        r.circuit = r.circuit.with_layer_noise(&model).context("--noise")?;
    }
    Ok(r)
}

#[derive(Serialize)]
struct RunSummary {
    n: usize,
    cnots: usize,
    cnot_depth: usize,
    gamma: f64,
    sqrt_gamma: f64,
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<QaoaParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_expectation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ideal_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noisy_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_sample: Option<f64>,
    mode: &'static str,
    shots: u64,
    seed: u64,
}

fn run_qaoa(a: &RunQaoa, out: &mut Output) -> Result<()> {
    if a.shots == 0 {
        bail!("--shots: must be at least 1");
    }
    let sim = Simulator {
        dense_limit: a.dense_limit,
        ..Simulator::default()
    };
    let r = resolve(&a.source, &sim)?;
    let c = &r.circuit;
    let (samples, mode) = if a.exact {
        (
            sim.noisy_distribution_exact(c)?.sample(a.shots, a.seed),
            "exact",
        )
    } else if let Some(t) = a.twirls {
        if t == 0 || !a.shots.is_multiple_of(t) {
            bail!(
                "--twirls: must be positive and divide --shots ({})",
                a.shots
            );
        }
        (sim.sample_twirled(c, t, a.shots / t, a.seed)?, "twirled")
    } else {
        (sim.sample_noisy(c, a.shots, a.seed)?, "trajectories")
    };
    let values = r
        .objective
        .as_ref()
        .map(|p| ValueSamples::from_sample_set(&samples, |x| p.evaluate_bits(x)))
        .transpose()?;
    let best = values
        .as_ref()
        .zip(r.objective.as_ref())
        .map(|(v, p)| match p.sense() {
            Sense::Maximize => v.max(),
            Sense::Minimize => v.min(),
        });
    let stats = c.stats();
    let gamma = c.total_gamma();
    let summary = RunSummary {
        n: c.n(),
        cnots: stats.cnot_count,
        cnot_depth: stats.cnot_depth,
        gamma,
        sqrt_gamma: gamma.sqrt(),
        alpha: 1.0 / gamma.sqrt(),
        params: r.params.clone(),
        grid_expectation: r.grid_expectation,
        ideal_mean: r.ideal_mean(&sim)?,
        noisy_mean: values.as_ref().map(|v| v.mean()),
        best_sample: best,
        mode,
        shots: a.shots,
        seed: a.seed,
    };
    out.write("circuit.json", &(c.to_json()? + "\n"))?;
    out.write("samples.csv", &samples.to_csv())?;
    out.write_json("run.json", &summary)?;
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
    print!(
        "{}",
        rows(&[
            ("qubits", summary.n.to_string()),
            (
                "CNOTs (depth)",
                format!("{} ({})", summary.cnots, summary.cnot_depth)
            ),
            ("sqrt(gamma)", format!("{:.6e}", summary.sqrt_gamma)),
            ("alpha = 1/sqrt(gamma)", format!("{:.6e}", summary.alpha)),
            ("noise-free mean", opt(summary.ideal_mean)),
            ("noisy sample mean", opt(summary.noisy_mean)),
            ("best sample", opt(summary.best_sample)),
            ("shots", format!("{} ({mode})", a.shots)),
        ])
    );
    Ok(())
}

fn sides(side: SideArg) -> &'static [Side] {
    match side {
        SideArg::Lower => &[Side::Lower],
        SideArg::Upper => &[Side::Upper],
        SideArg::Both => &[Side::Lower, Side::Upper],
    }
}

fn sense_side(poly: &IsingPolynomial) -> Side {
    match poly.sense() {
        Sense::Maximize => Side::Upper,
        Sense::Minimize => Side::Lower,
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Lower => "lower",
        Side::Upper => "upper",
    }
}

fn cvar(a: &CvarArgs, out: &mut Output) -> Result<()> {
    let poly = load_problem(&a.problem)?;
    let samples = load_samples(&a.samples, &poly)?;
    let h = |x: u128| poly.evaluate_bits(x);
    let values = ValueSamples::from_sample_set(&samples, h)?;
    let mut reports = Vec::new();
    let mut table = Vec::new();
    for &side in sides(a.side) {
        let boot = match (a.bootstrap, a.seed) {
            (Some(b), Some(seed)) => Some(
                bootstrap_variance(&values, &a.alphas, side, b, None, seed)
                    .context("--bootstrap")?,
            ),
            _ => None,
        };
        for (i, &alpha) in a.alphas.iter().enumerate() {
            let mut r = cvar_empirical(&values, alpha, side).context("--alpha")?;
            r.bootstrap_variance = boot.as_ref().map(|b| b.variances[i]);
            table.push((
                format!("{} CVaR @ {alpha}", side_name(side)),
                format!("{:.6}", r.estimate),
            ));
            reports.push(r);
        }
    }
    let calibration = a
        .reference
        .map(|target| calibrate_alpha(&values, target, sense_side(&poly), a.cnots))
        .transpose()
        .context("--reference")?;
    let mut filtered = Vec::new();
    if let (Some(k), Some(lo), Some(hi)) = (a.hamming_weight, a.m_lower, a.m_upper) {
        let filter = FeasibilityFilter::new(FilterPredicate::HammingWeight(k), lo, hi)
            .context("--m-lower/--m-upper")?;
        filter.validate(&poly).context("--m-lower/--m-upper")?;
        for &side in sides(a.side) {
            for &alpha in &a.alphas {
                filtered.push(cvar_filtered(&samples, h, &filter, alpha, side).context("--alpha")?);
            }
        }
    }
    #[derive(Serialize)]
    struct CvarOutput<'a> {
        mean: f64,
        reports: &'a [cvarbound::cvar::CvarReport],
        #[serde(skip_serializing_if = "Option::is_none")]
        calibration: Option<cvarbound::cvar::Calibration>,
        #[serde(skip_serializing_if = "<[_]>::is_empty")]
        filtered: &'a [cvarbound::cvar::FilteredCvar],
    }
    out.write_json(
        "cvar.json",
        &CvarOutput {
            mean: values.mean(),
            reports: &reports,
            calibration,
            filtered: &filtered,
        },
    )?;
    out.write("cdf.csv", &cdf_csv(&values))?;
    table.insert(0, ("mean".into(), format!("{:.6}", values.mean())));
    if let Some(c) = calibration {
        table.push(("calibrated alpha".into(), format!("{:.6e}", c.alpha)));
    }
    print!("{}", render_table(&table));
    Ok(())
}

#[derive(Serialize)]
struct PecOutput {
    #[serde(flatten)]
    estimate: cvarbound::pec::PecEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    ideal_mean: Option<f64>,
}

fn pec(a: &PecArgs, out: &mut Output) -> Result<()> {
    if a.shots < 2 {
        bail!("--shots: need at least 2");
    }
    let sim = Simulator::default();
    let r = resolve(&a.source, &sim)?;
    let poly = r.objective()?;
    // separate streams for the estimate and the exported mixture samples
    let mut seeds = stream(a.seed, 0);
    let estimate = pec_expectation(
        &sim,
        &r.circuit,
        |x| poly.evaluate_bits(x),
        a.shots,
        seeds.random(),
    )?;
    let sample_seed: u64 = seeds.random();
    if a.write_samples {
        out.write(
            "pec_samples.csv",
            &sample_pec(&sim, &r.circuit, a.shots, sample_seed)?.to_csv(),
        )?;
    }
    let ideal_mean = r.ideal_mean(&sim)?;
    out.write_json(
        "pec.json",
        &PecOutput {
            estimate,
            ideal_mean,
        },
    )?;
    print!(
        "{}",
        rows(&[
            (
                "PEC estimate",
                format!("{:.6} ± {:.6}", estimate.estimate, estimate.stderr)
            ),
            (
                "noise-free mean",
                ideal_mean.map_or("-".into(), |v| format!("{v:.6}"))
            ),
            ("gamma", format!("{:.6e}", estimate.gamma)),
            (
                "negative-sign fraction",
                format!("{:.4}", estimate.negative_fraction)
            ),
        ])
    );
    Ok(())
}

fn bounds(a: &BoundsReport, out: &mut Output) -> Result<()> {
    let poly = load_problem(&a.problem)?;
    let samples = load_samples(&a.samples, &poly)?;
    let alpha = if let Some(alpha) = a.alpha {
        alpha
    } else if let Some(sg) = a.sqrt_gamma {
        if !(sg >= 1.0 && sg.is_finite()) {
            bail!("--sqrt-gamma: must be finite and at least 1, got {sg}");
        }
        1.0 / sg
    } else if let (false, Some(cnots)) = (a.lf.is_empty(), a.cnots) {
        derive_overheads(&a.lf, cnots).context("--lf")?.alpha
    } else {
        bail!("--alpha: required unless --sqrt-gamma or --lf with --cnots is given");
    };
    let optimum = match (a.optimum, a.brute_force) {
        (Some(o), _) => Some(o),
        (None, true) => Some(brute_force(&poly)?.best_value),
        (None, false) => None,
    };
    let (report, cdf) = bound_report(&samples, &poly, alpha, a.reference, optimum, a.cnots)?;
    out.write_json("report.json", &report)?;
    out.write("report.txt", &report.to_table())?;
    out.write("cdf.csv", &cdf)?;
    print!("{}", report.to_table());
    Ok(())
}

fn bootstrap(a: &BootstrapVar, out: &mut Output) -> Result<()> {
    let poly = load_problem(&a.problem)?;
    let samples = load_samples(&a.samples, &poly)?;
    let values = ValueSamples::from_sample_set(&samples, |x| poly.evaluate_bits(x))?;
    let side = match a.side {
        None => sense_side(&poly),
        Some(SideArg::Lower) => Side::Lower,
        Some(SideArg::Upper) => Side::Upper,
        Some(SideArg::Both) => bail!("--side: bootstrap takes one tail, lower or upper"),
    };
    let b = bootstrap_variance(&values, &a.alphas, side, a.resamples, a.size, a.seed)
        .context("--alpha/--resamples")?;
    out.write_json("bootstrap.json", &b)?;
    let mut table: Vec<(String, String)> = b
        .alphas
        .iter()
        .zip(&b.variances)
        .map(|(al, v)| {
            (
                format!("Var[{} CVaR] @ {al}", side_name(side)),
                format!("{v:.6e}"),
            )
        })
        .collect();
    table.push((
        "log-log slope".into(),
        b.slope.map_or("-".into(), |s| format!("{s:.4}")),
    ));
    print!("{}", render_table(&table));
    Ok(())
}

fn overhead(a: &OverheadArgs, out: &mut Output) -> Result<()> {
    if !a.alpha_prime.is_empty() && a.alpha_prime.len() != a.cnots.len() {
        bail!(
            "--alpha-prime: need one value per --cnots, got {} for {}",
            a.alpha_prime.len(),
            a.cnots.len()
        );
    }
    let mut rows = Vec::with_capacity(a.cnots.len());
    for (i, &cnots) in a.cnots.iter().enumerate() {
        let mut o = derive_overheads(&a.lf, cnots).context("--lf/--cnots")?;
        if let Some(&ap) = a.alpha_prime.get(i) {
            o = o.with_calibration(ap).context("--alpha-prime")?;
        }
        rows.push(o);
    }
    out.write_json("overhead.json", &rows)?;
    let tables: Vec<String> = rows.iter().map(|o| o.to_table()).collect();
    print!("{}", tables.join("\n"));
    Ok(())
}

fn min_lf(a: &MinLf, out: &mut Output) -> Result<()> {
    #[derive(Serialize)]
    struct Thresholds {
        p: u32,
        min_layer_fidelity: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        n: Option<u32>,
        #[serde(skip_serializing_if = "Option::is_none")]
        min_cnot_fidelity: Option<f64>,
    }
    let t = Thresholds {
        p: a.p,
        min_layer_fidelity: min_layer_fidelity(a.p).context("--p")?,
        n: a.n,
        min_cnot_fidelity: a
            .n
            .map(|n| min_cnot_fidelity(a.p, n))
            .transpose()
            .context("--n")?,
    };
    out.write_json("min-lf.json", &t)?;
    let mut table = vec![(
        format!("min layer fidelity (p = {})", a.p),
        format!("{:.4}", t.min_layer_fidelity),
    )];
    if let (Some(n), Some(f)) = (t.n, t.min_cnot_fidelity) {
        table.push((format!("min CNOT fidelity (n = {n})"), format!("{f:.6}")));
    }
    print!("{}", render_table(&table));
    Ok(())
}

fn twirl(a: &TwirlCompare, out: &mut Output) -> Result<()> {
    let sim = Simulator::default();
    let r = resolve(&a.source, &sim)?;
    let poly = r.objective()?;
    let (cmp, plain, twirled) = twirl_compare(
        &sim,
        &r.circuit,
        |x| poly.evaluate_bits(x),
        a.twirls,
        a.shots_per_twirl,
        a.seed,
    )
    .context("--twirls/--shots-per-twirl")?;
    out.write_json("twirl.json", &cmp)?;
    out.write("untwirled_cdf.csv", &cdf_csv(&plain))?;
    out.write("twirled_cdf.csv", &cdf_csv(&twirled))?;
    print!(
        "{}",
        rows(&[
            ("untwirled mean", format!("{:.6}", cmp.untwirled_mean)),
            ("twirled mean", format!("{:.6}", cmp.twirled_mean)),
            ("total variation", format!("{:.6}", cmp.total_variation)),
            ("max CDF gap", format!("{:.6}", cmp.max_cdf_gap)),
            ("shots", format!("{} ({} twirls)", cmp.shots, cmp.twirls)),
        ])
    );
    Ok(())
}
