//! `biorder`: command-line access to the free-group order, subgroup graphs,
//! cone validators, `H(F,P)` arithmetic and the subgroup-to-marked-group map.

use std::error::Error;
use std::process::ExitCode;
use std::sync::Arc;

use biorder::cones::{
    check_bicone, check_relative_cone, klein_cone, magnus_cone, BallReport, Class, ConeOracle,
};
use biorder::hgp::{as_mod, hq_sign, theta, Coset, HElement, SIndex};
use biorder::json::to_spaced_string;
use biorder::magnus::{compare, positive_ball, sign_with_cap, try_sign};
use biorder::reduction::{
    convergence_demo, injectivity_witness, iso_witness, perturb, preimage_query, reduce_map,
};
use biorder::sample;
use biorder::stallings::StallingsGraph;
use biorder::suites::run_all;
use biorder::words::{ball, Word};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

type CliResult = Result<(), Box<dyn Error>>;

macro_rules! say {
    ($($arg:tt)*) => {
        write_stdout(format_args!("{}\n", format_args!($($arg)*)))
    };
}

/// Writes to stdout; a closed pipe ends the process quietly.
fn write_stdout(args: std::fmt::Arguments<'_>) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().lock().write_fmt(args) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: Io: {e}");
        std::process::exit(1);
    }
}

#[derive(Parser)]
#[command(
    name = "biorder",
    version,
    about = "Bi-ordered free groups and the groups built from them"
)]
struct Cli {
    #[command(flatten)]
    config: Config,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Config {
    /// Rank k of the free group F_k.
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=4))]
    rank: u32,
    /// Ball radius for enumerations and searches.
    #[arg(long, global = true, default_value_t = 3, value_parser = clap::value_parser!(u64).range(0..=8))]
    radius: u64,
    /// Seed for every sampled suite and sample set.
    #[arg(long, global = true, default_value = "0xC0C0", value_parser = parse_seed)]
    seed: u64,
    /// Fixed truncation degree for Magnus signs instead of the adaptive search.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    truncation_cap: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{s}`: {e}"))
}

#[derive(Subcommand)]
enum Command {
    /// The Magnus bi-order on F_k.
    #[command(subcommand)]
    Order(OrderCmd),
    /// List the ball of the given radius in shortlex order.
    Ball {
        /// Keep only positive words.
        #[arg(long)]
        positive: bool,
    },
    /// Finitely generated subgroups as folded graphs.
    #[command(subcommand)]
    Subgroup(SubgroupCmd),
    /// Check cone axioms on a ball or a seeded sample.
    #[command(subcommand)]
    Cone(ConeCmd),
    /// Arithmetic in H(F,P); elements are given as JSON.
    #[command(subcommand)]
    Hgp(HgpCmd),
    /// The quotient H/A_S with S = P ∩ G.
    #[command(subcommand)]
    Quotient(QuotientCmd),
    /// The map G ↦ N_G.
    #[command(subcommand)]
    Reduce(ReduceCmd),
    /// Convergence and perturbation demos.
    #[command(subcommand)]
    Demo(DemoCmd),
    /// Run every property suite.
    Selftest,
}

#[derive(Subcommand)]
enum OrderCmd {
    Sign { word: String },
    Compare { u: String, v: String },
}

#[derive(Args)]
struct Gens {
    /// Comma-separated generators, e.g. "x1 x2, x2^-1 x1".
    #[arg(long, default_value = "")]
    gens: String,
}

#[derive(Subcommand)]
enum SubgroupCmd {
    Fold(Gens),
    Contains {
        #[command(flatten)]
        gens: Gens,
        word: String,
    },
    Equal {
        #[command(flatten)]
        gens: Gens,
        #[arg(long, default_value = "")]
        other: String,
    },
    Conjugate {
        #[command(flatten)]
        gens: Gens,
        #[arg(long)]
        by: String,
    },
    /// Shortlex-least h in the ball with h G h^-1 = G'.
    Witness {
        #[command(flatten)]
        gens: Gens,
        #[arg(long, default_value = "")]
        other: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ConeKind {
    /// The Magnus cone on F_k.
    Magnus,
    /// A left-only cone on F_2.
    Klein,
    /// hq_sign on seeded cosets of H/A_S, S = P ∩ <gens>.
    Hq,
}

#[derive(Args)]
struct ConeArgs {
    #[arg(long, value_enum, default_value_t = ConeKind::Magnus)]
    cone: ConeKind,
    #[command(flatten)]
    gens: Gens,
}

#[derive(Subcommand)]
enum ConeCmd {
    CheckRel(ConeArgs),
    CheckBi {
        #[command(flatten)]
        args: ConeArgs,
        /// Radius of the conjugator ball.
        #[arg(long, default_value_t = 2)]
        conj_radius: usize,
    },
}

#[derive(Subcommand)]
enum HgpCmd {
    Mul {
        x: String,
        y: String,
    },
    Inv {
        x: String,
    },
    /// θ(w) with window x1..x_{k+1}.
    Theta {
        word: String,
        #[arg(long)]
        k: Option<u32>,
    },
    Comm {
        x: String,
        y: String,
    },
}

#[derive(Subcommand)]
enum QuotientCmd {
    NormalForm {
        #[command(flatten)]
        gens: Gens,
        x: String,
    },
    Sign {
        #[command(flatten)]
        gens: Gens,
        x: String,
    },
}

#[derive(Subcommand)]
enum ReduceCmd {
    Member {
        #[command(flatten)]
        gens: Gens,
        #[arg(long)]
        g: String,
    },
    Preimage {
        #[arg(long)]
        g: String,
        #[arg(long)]
        k: Option<u32>,
    },
    IsoWitness {
        #[command(flatten)]
        gens: Gens,
        #[arg(long)]
        by: String,
    },
    InjectWitness {
        #[command(flatten)]
        gens: Gens,
        #[arg(long, default_value = "")]
        other: String,
    },
}

#[derive(Subcommand)]
enum DemoCmd {
    Convergence {
        #[arg(long, default_value_t = 4)]
        k_max: u32,
    },
    Perturb {
        #[command(flatten)]
        gens: Gens,
        /// Comma-separated words of N_G that the perturbation must keep.
        #[arg(long, default_value = "")]
        constraints: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn emit(cfg: &Config, text: impl Into<String>, json: serde_json::Value) {
    match cfg.output {
        Output::Text => say!("{}", text.into()),
        Output::Json => say!("{}", to_spaced_string(&json)),
    }
}

fn word(cfg: &Config, s: &str) -> Result<Word, Box<dyn Error>> {
    Ok(Word::parse(s, cfg.rank)?)
}

fn word_list(cfg: &Config, s: &str) -> Result<Vec<Word>, Box<dyn Error>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| word(cfg, p))
        .collect()
}

fn graph(cfg: &Config, gens: &str) -> Result<StallingsGraph, Box<dyn Error>> {
    Ok(StallingsGraph::fold(cfg.rank, &word_list(cfg, gens)?)?)
}

fn radius(cfg: &Config) -> usize {
    cfg.radius as usize
}

fn run(cli: &Cli) -> Result<ExitCode, Box<dyn Error>> {
    let cfg = &cli.config;
    match &cli.command {
        Command::Order(cmd) => order(cfg, cmd)?,
        Command::Ball { positive } => {
            let words = if *positive {
                positive_ball(cfg.rank, radius(cfg))?
            } else {
                ball(cfg.rank, radius(cfg))?
            };
            let strings: Vec<String> = words.iter().map(|w| w.to_string()).collect();
            emit(cfg, strings.join("\n"), json!(strings));
        }
        Command::Subgroup(cmd) => subgroup(cfg, cmd)?,
        Command::Cone(cmd) => return cone(cfg, cmd),
        Command::Hgp(cmd) => hgp(cfg, cmd)?,
        Command::Quotient(cmd) => quotient(cfg, cmd)?,
        Command::Reduce(cmd) => reduce(cfg, cmd)?,
        Command::Demo(cmd) => demo(cfg, cmd)?,
        Command::Selftest => {
            let outcomes = run_all(cfg.seed);
            let passed = outcomes.iter().filter(|o| o.passed).count();
            for o in &outcomes {
                say!("{o}");
            }
            say!("{passed}/{} suites passed", outcomes.len());
            if passed != outcomes.len() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn order(cfg: &Config, cmd: &OrderCmd) -> CliResult {
    let signed = |w: &Word| match cfg.truncation_cap {
        Some(cap) => sign_with_cap(w, cap as usize),
        None => try_sign(w),
    };
    match cmd {
        OrderCmd::Sign { word: s } => {
            let s = signed(&word(cfg, s)?)?;
            emit(cfg, s.to_string(), json!({ "sign": s.to_string() }));
        }
        OrderCmd::Compare { u, v } => {
            let (u, v) = (word(cfg, u)?, word(cfg, v)?);
            let ord = match cfg.truncation_cap {
                Some(_) => signed(&(&u.inverse() * &v))?.negate().to_ordering(),
                None => compare(&u, &v)?,
            };
            let name = format!("{ord:?}");
            emit(cfg, name.clone(), json!({ "order": name }));
        }
    }
    Ok(())
}

trait SignExt {
    fn to_ordering(self) -> std::cmp::Ordering;
}

impl SignExt for biorder::Sign {
    fn to_ordering(self) -> std::cmp::Ordering {
        match self {
            biorder::Sign::Negative => std::cmp::Ordering::Less,
            biorder::Sign::Zero => std::cmp::Ordering::Equal,
            biorder::Sign::Positive => std::cmp::Ordering::Greater,
        }
    }
}

fn boolean(cfg: &Config, key: &str, value: bool) {
    emit(cfg, value.to_string(), json!({ key: value }));
}

fn subgroup(cfg: &Config, cmd: &SubgroupCmd) -> CliResult {
    match cmd {
        SubgroupCmd::Fold(g) => say!("{}", graph(cfg, &g.gens)?.to_json()),
        SubgroupCmd::Contains { gens, word: w } => boolean(
            cfg,
            "contains",
            graph(cfg, &gens.gens)?.contains(&word(cfg, w)?)?,
        ),
        SubgroupCmd::Equal { gens, other } => boolean(
            cfg,
            "equal",
            graph(cfg, &gens.gens)?.equal(&graph(cfg, other)?)?,
        ),
        SubgroupCmd::Conjugate { gens, by } => {
            say!(
                "{}",
                graph(cfg, &gens.gens)?
                    .conjugate(&word(cfg, by)?)?
                    .to_json()
            )
        }
        SubgroupCmd::Witness { gens, other } => {
            let found =
                graph(cfg, &gens.gens)?.conjugacy_witness(&graph(cfg, other)?, radius(cfg))?;
            let text = found.as_ref().map_or("none".to_string(), |h| h.to_string());
            emit(
                cfg,
                text,
                json!({ "witness": found.map(|h| h.to_string()) }),
            );
        }
    }
    Ok(())
}

fn print_report(cfg: &Config, report: &BallReport) {
    match cfg.output {
        Output::Json => say!("{}", report.to_json()),
        Output::Text => {
            say!("{}", if report.ok { "ok" } else { "violations" });
            for v in &report.violations {
                say!("{}: {}", v.condition, v.witness.join(" | "));
            }
        }
    }
}

fn cone(cfg: &Config, cmd: &ConeCmd) -> Result<ExitCode, Box<dyn Error>> {
    let (args, conj_radius) = match cmd {
        ConeCmd::CheckRel(a) => (a, None),
        ConeCmd::CheckBi { args, conj_radius } => (args, Some(*conj_radius)),
    };
    let report = match args.cone {
        ConeKind::Magnus | ConeKind::Klein => {
            let oracle = if matches!(args.cone, ConeKind::Klein) {
                if cfg.rank != 2 {
                    return Err("RankMismatch: the Klein cone lives on F_2".into());
                }
                klein_cone()
            } else {
                magnus_cone()
            };
            let elems = ball(cfg.rank, radius(cfg))?;
            match conj_radius {
                None => check_relative_cone(&oracle, &elems)?,
                Some(r) => check_bicone(&oracle, &elems, &ball(cfg.rank, r)?)?,
            }
        }
        ConeKind::Hq => {
            let s = Arc::new(SIndex::ConeIntersection(graph(cfg, &args.gens.gens)?));
            let mut rng = sample::rng(cfg.seed);
            let coset = |x: &HElement| Coset::new(x, Arc::clone(&s));
            let base = (0..30)
                .map(|_| coset(&sample::h_element(&mut rng, cfg.rank)))
                .collect::<Result<Vec<_>, _>>()?;
            let elems = sample::inverse_closed(coset(&HElement::identity(cfg.rank))?, base);
            let oracle = ConeOracle::new("H/A_S", |c: &Coset| Class::from(c.sign()));
            match conj_radius {
                None => check_relative_cone(&oracle, &elems)?,
                Some(_) => {
                    let conj = (0..20)
                        .map(|_| coset(&sample::h_element(&mut rng, cfg.rank)))
                        .collect::<Result<Vec<_>, _>>()?;
                    check_bicone(&oracle, &elems, &conj)?
                }
            }
        }
    };
    print_report(cfg, &report);
    Ok(ExitCode::SUCCESS)
}

fn h_element(cfg: &Config, s: &str) -> Result<HElement, Box<dyn Error>> {
    Ok(HElement::from_json(s, cfg.rank)?)
}

fn print_h(x: &HElement) {
    say!("{}", x.to_json());
}

fn hgp(cfg: &Config, cmd: &HgpCmd) -> CliResult {
    match cmd {
        HgpCmd::Mul { x, y } => print_h(&h_element(cfg, x)?.try_mul(&h_element(cfg, y)?)?),
        HgpCmd::Inv { x } => print_h(&h_element(cfg, x)?.inverse()),
        HgpCmd::Theta { word: w, k } => {
            let k = k.unwrap_or(cfg.rank);
            print_h(&theta(&Word::parse_unbounded(w, k + 1)?, k))
        }
        HgpCmd::Comm { x, y } => print_h(&h_element(cfg, x)?.commutator(&h_element(cfg, y)?)),
    }
    Ok(())
}

fn quotient(cfg: &Config, cmd: &QuotientCmd) -> CliResult {
    match cmd {
        QuotientCmd::NormalForm { gens, x } => {
            let s = SIndex::ConeIntersection(graph(cfg, &gens.gens)?);
            print_h(&as_mod(&h_element(cfg, x)?, &s)?)
        }
        QuotientCmd::Sign { gens, x } => {
            let s = SIndex::ConeIntersection(graph(cfg, &gens.gens)?);
            let sign = hq_sign(&h_element(cfg, x)?, &s)?;
            emit(cfg, sign.to_string(), json!({ "sign": sign.to_string() }));
        }
    }
    Ok(())
}

fn reduce(cfg: &Config, cmd: &ReduceCmd) -> CliResult {
    match cmd {
        ReduceCmd::Member { gens, g } => {
            let n = reduce_map(&graph(cfg, &gens.gens)?, cfg.rank)?;
            let w = Word::parse_unbounded(g, cfg.rank + 1)?;
            boolean(cfg, "member", n.member(&w));
        }
        ReduceCmd::Preimage { g, k } => {
            let k = k.unwrap_or(cfg.rank);
            let result = preimage_query(&Word::parse_unbounded(g, k + 1)?, k);
            match cfg.output {
                Output::Text => say!("{result}"),
                Output::Json => say!("{}", result.to_json()),
            }
        }
        ReduceCmd::IsoWitness { gens, by } => {
            let g1 = graph(cfg, &gens.gens)?;
            let h = word(cfg, by)?;
            let g2 = g1.conjugate(&h)?;
            let report = iso_witness(&g1, &g2, &h, cfg.seed)?;
            let text = if report.ok {
                format!("ok ({} elements checked)", report.checked)
            } else {
                format!("failed\n{}", report.failures.join("\n"))
            };
            emit(cfg, text, serde_json::to_value(&report)?);
        }
        ReduceCmd::InjectWitness { gens, other } => {
            let found =
                injectivity_witness(&graph(cfg, &gens.gens)?, &graph(cfg, other)?, radius(cfg))?;
            match found {
                Some((w, wit)) => emit(
                    cfg,
                    format!(
                        "{w}  (separator {}, in first: {}, in second: {})",
                        wit.separator, wit.in_first, wit.in_second
                    ),
                    serde_json::to_value(&wit)?,
                ),
                None => emit(cfg, "none", json!(null)),
            }
        }
    }
    Ok(())
}

fn demo(cfg: &Config, cmd: &DemoCmd) -> CliResult {
    match cmd {
        DemoCmd::Convergence { k_max } => {
            let table = convergence_demo(*k_max, radius(cfg))?;
            write_stdout(format_args!("{}", table.to_csv()));
            if cfg.output == Output::Text {
                match table.stabilizes_at {
                    Some(k) => eprintln!("agrees with the commutator subgroup from k = {k}"),
                    None => eprintln!("does not stabilize by k = {k_max}"),
                }
            }
        }
        DemoCmd::Perturb { gens, constraints } => {
            let n = reduce_map(&graph(cfg, &gens.gens)?, cfg.rank)?;
            let cs = constraints
                .split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| Word::parse_unbounded(p, cfg.rank + 1))
                .collect::<Result<Vec<_>, _>>()?;
            let p = perturb(&n, &cs)?;
            let x = p.x_ell();
            let kept = cs
                .iter()
                .map(|c| Ok(p.k.member(&c.with_rank(p.ell.max(c.rank()))?)))
                .collect::<Result<Vec<bool>, biorder::WordError>>()?;
            let all_kept = kept.iter().all(|&b| b);
            let (in_n, in_k) = (n.member(&x), p.k.member(&x));
            emit(
                cfg,
                format!(
                    "ell = {}\nconstraints kept: {all_kept}\nx{} in N: {in_n}, in K: {in_k}",
                    p.ell, p.ell
                ),
                json!({ "ell": p.ell, "constraints_kept": all_kept, "x_ell_in_n": in_n, "x_ell_in_k": in_k }),
            );
        }
    }
    Ok(())
}
