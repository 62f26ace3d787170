use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use kronred_core::io::{matrix_to_tsv, rows, to_json, CutsetFile, GraphFile};
use kronred_core::kron::{kron_reduce, reduced_self_loops, KronReduction, Partition};
use kronred_core::power::{
    coupling_weights, cutset, effective_power_inputs, sync_reduced, sync_resistive_nonreduced,
    sync_spectral_nonreduced, uniformity_deviation, DcNetwork, SyncAssessment,
};
use kronred_core::resistance::{effective_resistance, perturbed_resistance};
use kronred_core::spectral::{
    connectivity_pair, eigenvalues, verify_augmented_interlacing, verify_interlacing, verify_loop_shift_bounds,
};
use kronred_core::{augment, laplacian_from_graph, tol, verify, Error, LoopyLaplacian, VerifyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Reduce,
    Resistance,
    Augment,
    Spectrum,
    Perturb,
    Cutset,
    Sync,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

/// Kron reduction of weighted graphs with self-loops.
///
/// Graph files are JSON: {"n", "edges": [{"i","j","w"}], "loops": [{"i","w"}],
/// "p"?} with 1-based nodes and i < j.
#[derive(Debug, Parser)]
#[command(name = "kronred", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Boundary nodes to keep, 1-based.
    #[arg(long, value_delimiter = ',', value_name = "i,j,...")]
    boundary: Option<Vec<usize>>,

    /// Interior edge change `i,j,delta`, 1-based nodes.
    #[arg(long, allow_hyphen_values = true, value_name = "i,j,delta")]
    perturb: Option<String>,

    /// Cut indicator over the sorted boundary, or a JSON file {"sigma": [...]}.
    #[arg(long, value_name = "0,1,...|FILE")]
    sigma: Option<String>,

    /// Effective power inputs over the sorted boundary. Defaults to the DC
    /// analog computed from "p" in the input.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_name = "w1,w2,...")]
    omega: Option<Vec<f64>>,

    /// Lower bound on the voltage magnitudes.
    #[arg(long, default_value_t = 1.0)]
    v_lower: f64,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Enumerate every boundary set when n is at most this.
    #[arg(long, default_value_t = 20)]
    cap: usize,

    /// Most boundary sets visited by verify.
    #[arg(long, default_value_t = 1024)]
    max_sets: usize,

    /// Tolerance for algebraic identity checks.
    #[arg(long, env = "KRONRED_TOL", default_value_t = tol::QUOT)]
    tol_quot: f64,

    #[arg(long)]
    output: Option<PathBuf>,

    #[arg(long, hide = true)]
    corrupt_q_red: bool,
}

enum Failure {
    Usage(String),
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 1,
            Failure::Core(e) => match e {
                Error::Validation(_)
                | Error::Dimension(_)
                | Error::Class(_)
                | Error::PerturbationInvalid(_)
                | Error::Compatibility { .. }
                | Error::CutsetDegenerate(_)
                | Error::Uniformity { .. } => 2,
                Error::Connectivity(_) => 3,
                Error::IllConditioned { .. } => 4,
                _ => 1,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Io(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

type Run<T> = std::result::Result<T, Failure>;

/// Command output plus whether the command succeeded (verify may report
/// failures while still producing its report).
struct Outcome {
    text: String,
    ok: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, ok: true }
    }
}

struct Input {
    file: GraphFile,
    q: LoopyLaplacian,
}

fn load(cli: &Cli) -> Run<Input> {
    let text = fs::read_to_string(&cli.input)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", cli.input.display())))?;
    let file = GraphFile::parse(&text)?;
    let q = laplacian_from_graph(&file.to_graph()?);
    Ok(Input { file, q })
}

fn partition(cli: &Cli, n: usize) -> Run<Partition> {
    let labels = cli
        .boundary
        .as_ref()
        .ok_or_else(|| Failure::Usage("--boundary is required".into()))?;
    let nodes = labels
        .iter()
        .map(|&i| {
            if i == 0 || i > n {
                Err(Failure::Usage(format!("boundary node {i} outside 1..={n}")))
            } else {
                Ok(i - 1)
            }
        })
        .collect::<Run<Vec<_>>>()?;
    Ok(Partition::new(n, &nodes)?)
}

fn one_based(nodes: &[usize]) -> Vec<usize> {
    nodes.iter().map(|v| v + 1).collect()
}

fn require_json(cli: &Cli, what: &str) -> Run<()> {
    match cli.format {
        Format::Json => Ok(()),
        Format::Tsv => Err(Failure::Usage(format!("{what} output is JSON only; tsv is for matrices"))),
    }
}

fn render(v: &Value) -> String {
    to_json(v)
}

fn tsv_blocks(blocks: &[(&str, &kronred_core::DMatrix<f64>)]) -> String {
    blocks
        .iter()
        .map(|(name, m)| format!("# {name}\n{}", matrix_to_tsv(m)))
        .collect::<Vec<_>>()
        .join("\n")
}

fn cmd_reduce(cli: &Cli) -> Run<Outcome> {
    let input = load(cli)?;
    let p = partition(cli, input.q.n())?;
    let kr = kron_reduce(&input.q, &p)?;
    let text = match cli.format {
        Format::Json => render(&reduction_json(&kr)),
        Format::Tsv => {
            let mut t = tsv_blocks(&[
                ("q_red", kr.q_red.entries()),
                ("q_ac", &kr.q_ac),
                ("a_red", kr.a_red.weights()),
            ]);
            let perm: Vec<String> = one_based(&kr.permutation).iter().map(|v| v.to_string()).collect();
            t.push_str(&format!("\n# permutation\t{}\n", perm.join("\t")));
            t
        }
    };
    Ok(Outcome::ok(text))
}

fn reduction_json(kr: &KronReduction) -> Value {
    json!({
        "boundary": one_based(kr.partition.boundary()),
        "interior": one_based(kr.partition.interior()),
        "class": kr.q_red.class(),
        "q_red": rows(kr.q_red.entries()),
        "q_ac": rows(&kr.q_ac),
        "a_red": rows(kr.a_red.weights()),
        "permutation": one_based(&kr.permutation),
    })
}

fn cmd_resistance(cli: &Cli) -> Run<Outcome> {
    let input = load(cli)?;
    let mut r = effective_resistance(&input.q)?;
    let mut nodes: Vec<usize> = (0..input.q.n()).collect();
    if cli.boundary.is_some() {
        let p = partition(cli, input.q.n())?;
        r = effective_resistance(&kron_reduce(&input.q, &p)?.q_red)?;
        nodes = p.boundary().to_vec();
    }
    let text = match cli.format {
        Format::Json => render(&json!({ "nodes": one_based(&nodes), "resistance": rows(r.entries()) })),
        Format::Tsv => matrix_to_tsv(r.entries()),
    };
    Ok(Outcome::ok(text))
}

fn cmd_augment(cli: &Cli) -> Run<Outcome> {
    let input = load(cli)?;
    let aug = augment(&input.q);
    let text = match cli.format {
        Format::Json => render(&json!({
            "n": input.q.n() + 1,
            "ground": input.q.n() + 1,
            "ground_isolated": aug.ground_isolated,
            "q_hat": rows(aug.laplacian.entries()),
        })),
        Format::Tsv => matrix_to_tsv(aug.laplacian.entries()),
    };
    Ok(Outcome::ok(text))
}

fn cmd_spectrum(cli: &Cli) -> Run<Outcome> {
    require_json(cli, "spectrum")?;
    let input = load(cli)?;
    let q = &input.q;
    let mut out = json!({ "class": q.class(), "eigenvalues": eigenvalues(q) });
    if q.is_strictly_loopy() {
        let aug = verify_augmented_interlacing(q)?;
        out["augmented_interlacing"] = serde_json::to_value(&aug).expect("serializable");
    }
    if cli.boundary.is_some() {
        let p = partition(cli, q.n())?;
        let (l2, l2_red) = connectivity_pair(q, &p)?;
        out["boundary"] = json!(one_based(p.boundary()));
        out["interlacing"] = serde_json::to_value(verify_interlacing(q, &p)?).expect("serializable");
        out["loop_shift_bounds"] = serde_json::to_value(verify_loop_shift_bounds(q, &p)?).expect("serializable");
        out["lambda2"] = json!(l2);
        out["lambda2_reduced"] = json!(l2_red);
    }
    Ok(Outcome::ok(render(&out)))
}

fn parse_perturbation(text: &str, n: usize) -> Run<(usize, usize, f64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || Failure::Usage(format!("--perturb expects i,j,delta, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let i: usize = parts[0].parse().map_err(|_| bad())?;
    let j: usize = parts[1].parse().map_err(|_| bad())?;
    let delta: f64 = parts[2].parse().map_err(|_| bad())?;
    for v in [i, j] {
        if v == 0 || v > n {
            return Err(Failure::Usage(format!("perturbed node {v} outside 1..={n}")));
        }
    }
    if !delta.is_finite() {
        return Err(bad());
    }
    Ok((i - 1, j - 1, delta))
}

fn cmd_perturb(cli: &Cli) -> Run<Outcome> {
    let input = load(cli)?;
    let q = &input.q;
    let p = partition(cli, q.n())?;
    let given = cli
        .perturb
        .as_deref()
        .ok_or_else(|| Failure::Usage("--perturb is required".into()))?;
    let (i, j, delta) = parse_perturbation(given, q.n())?;
    let kr = kron_reduce(q, &p)?;
    let (q_red, info) = kr.perturb_interior_edge(q, i, j, delta)?;
    let r = perturbed_resistance(q, &p, i, j, delta)?;
    let text = match cli.format {
        Format::Json => render(&json!({
            "boundary": one_based(p.boundary()),
            "edge": [i + 1, j + 1],
            "delta": delta,
            "r_int": info.r_int,
            "denominator": info.denominator(),
            "q_red": rows(q_red.entries()),
            "resistance": rows(r.entries()),
        })),
        Format::Tsv => tsv_blocks(&[("q_red", q_red.entries()), ("resistance", r.entries())]),
    };
    Ok(Outcome::ok(text))
}

fn parse_sigma(text: &str) -> Run<Vec<bool>> {
    let given = if text.contains(',') || text == "0" || text == "1" {
        let sigma = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u8>()
                    .map_err(|_| Failure::Usage(format!("--sigma entries must be 0 or 1, got {s:?}")))
            })
            .collect::<Run<Vec<_>>>()?;
        CutsetFile { sigma }
    } else {
        let body = fs::read_to_string(text).map_err(|e| Failure::Usage(format!("cannot read {text}: {e}")))?;
        CutsetFile::parse(&body)?
    };
    Ok(given.indicator()?)
}

fn dc_network(input: &Input) -> Run<DcNetwork> {
    let p = input
        .file
        .p
        .clone()
        .ok_or_else(|| Failure::Usage("input has no power injections \"p\"".into()))?;
    Ok(DcNetwork::new(input.q.clone(), p)?)
}

fn cmd_cutset(cli: &Cli) -> Run<Outcome> {
    require_json(cli, "cutset")?;
    let input = load(cli)?;
    let p = partition(cli, input.q.n())?;
    let sigma = parse_sigma(
        cli.sigma
            .as_deref()
            .ok_or_else(|| Failure::Usage("--sigma is required".into()))?,
    )?;
    let net = dc_network(&input)?;
    let c = cutset(&net, &p, &sigma)?;
    let sigma: Vec<u8> = c.sigma.iter().map(|&s| s as u8).collect();
    Ok(Outcome::ok(render(&json!({
        "boundary": one_based(p.boundary()),
        "sigma": sigma,
        "p_cut": c.p_cut,
        "b_cut": c.b_cut,
        "theta_cut": c.theta_cut,
    }))))
}

fn assessment_json(a: &SyncAssessment) -> Value {
    serde_json::to_value(a).expect("serializable")
}

fn cmd_sync(cli: &Cli) -> Run<Outcome> {
    require_json(cli, "sync")?;
    let input = load(cli)?;
    let q = &input.q;
    let p = partition(cli, q.n())?;
    let m = p.boundary().len();
    let omega = match &cli.omega {
        Some(w) => w.clone(),
        None => effective_power_inputs(&dc_network(&input)?, &p)?,
    };
    if omega.len() != m {
        return Err(Failure::Usage(format!("--omega has {} entries for {m} boundary nodes", omega.len())));
    }
    let kr = kron_reduce(q, &p)?;
    let pij = coupling_weights(&kr.q_red, &vec![cli.v_lower; m])?;
    let reduced = sync_reduced(&pij, &omega)?;
    let loops: Vec<f64> = reduced_self_loops(q, &p)?.iter().copied().collect();
    let spectral = sync_spectral_nonreduced(&kronred_core::graph::loopless_part(q), &omega, cli.v_lower, &loops)?;

    let r = effective_resistance(q)?.restrict(p.boundary());
    let pairs = (m * (m - 1)) as f64;
    let r_mean = r.entries().sum() / pairs;
    let resistive = match sync_resistive_nonreduced(r_mean, &omega, cli.v_lower, &loops, Some(&r)) {
        Ok(a) => assessment_json(&a),
        Err(Error::Uniformity { .. }) => json!({
            "skipped": "boundary resistances are not uniform",
            "worst_deviation": uniformity_deviation(&r, r_mean),
        }),
        Err(e) => return Err(e.into()),
    };
    let satisfied = reduced.iter().any(|a| a.satisfied);
    Ok(Outcome::ok(render(&json!({
        "boundary": one_based(p.boundary()),
        "satisfied": satisfied,
        "reduced_elementwise": assessment_json(&reduced[0]),
        "reduced_spectral": assessment_json(&reduced[1]),
        "nonreduced_spectral": assessment_json(&spectral),
        "nonreduced_resistive": resistive,
    }))))
}

fn cmd_verify(cli: &Cli) -> Run<Outcome> {
    require_json(cli, "verify")?;
    let input = load(cli)?;
    let mut opts = VerifyOptions {
        cap: cli.cap,
        max_sets: cli.max_sets,
        seed: cli.seed,
        corrupt_q_red: cli.corrupt_q_red,
        ..VerifyOptions::default()
    };
    opts.tolerances.quot = cli.tol_quot;
    let report = verify(&input.q, &opts)?;
    Ok(Outcome {
        text: render(&serde_json::to_value(&report).expect("serializable")),
        ok: report.passed,
    })
}

fn run(cli: &Cli) -> Run<Outcome> {
    if !(cli.tol_quot > 0.0 && cli.tol_quot.is_finite()) {
        return Err(Failure::Usage(format!("tolerance must be positive, got {}", cli.tol_quot)));
    }
    if cli.max_sets == 0 {
        return Err(Failure::Usage("--max-sets must be positive".into()));
    }
    match cli.command {
        Command::Reduce => cmd_reduce(cli),
        Command::Resistance => cmd_resistance(cli),
        Command::Augment => cmd_augment(cli),
        Command::Spectrum => cmd_spectrum(cli),
        Command::Perturb => cmd_perturb(cli),
        Command::Cutset => cmd_cutset(cli),
        Command::Sync => cmd_sync(cli),
        Command::Verify => cmd_verify(cli),
    }
}

fn emit(cli: &Cli, text: &str) -> Run<()> {
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| emit(&cli, &out.text).map(|_| out.ok));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
