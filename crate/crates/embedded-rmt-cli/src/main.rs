//! `ermt`: moment tables, Monte Carlo runs, exact verification suites,
//! diagram reports and density exports for embedded random matrix ensembles.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use embedded_rmt::combinatorics::{catalan, hahn_lhs, hahn_rhs};
use embedded_rmt::diagram::{
    analyze_class, assemble_moment, build_loop_system, canonical_classes, certify_argument,
    maximize_argument, reduce_pattern,
};
use embedded_rmt::ensemble::{Beta, EnsembleParams};
use embedded_rmt::fock::{basis_size, Statistics};
use embedded_rmt::formulas::{
    self, eighth_moment_limit_with, moment_table, nth_moment_limit, HahnVariant,
};
use embedded_rmt::spectral::{empirical_density, estimate_moments};
use embedded_rmt::wick::{
    cycle_to_dyck, dyck_words, enumerate_pairings, exact_even_trace, km_trace_polynomial,
    pairing_to_cycles, OracleConfig,
};

const DEFAULT_SEED: u64 = 0x00C0FFEE;
const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "ermt",
    about = "Embedded random matrix ensembles: moments, oracles, diagrams",
    version
)]
struct Cli {
    /// Cap on the operation estimate of exact oracle work.
    #[arg(long, global = true, default_value_t = embedded_rmt::wick::DEFAULT_BUDGET)]
    budget: u128,

    /// Write primary output to this path instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatisticsArg {
    Fermionic,
    Bosonic,
}

impl From<StatisticsArg> for Statistics {
    fn from(s: StatisticsArg) -> Self {
        match s {
            StatisticsArg::Fermionic => Statistics::Fermionic,
            StatisticsArg::Bosonic => Statistics::Bosonic,
        }
    }
}

#[derive(Args)]
struct EnsembleArgs {
    /// Dyson index of the symmetry class (1 or 2; 4 is kernel-only).
    #[arg(long, default_value_t = 2)]
    beta: u8,
    /// Single-particle level count.
    #[arg(long)]
    l: u16,
    /// Particle count.
    #[arg(long)]
    m: u16,
    /// Interaction order.
    #[arg(long)]
    k: u16,
    /// Particle statistics.
    #[arg(long, value_enum, default_value = "fermionic")]
    statistics: StatisticsArg,
    /// Coupling scale.
    #[arg(long, default_value_t = 1.0)]
    v0: f64,
}

impl EnsembleArgs {
    fn params(&self) -> embedded_rmt::Result<EnsembleParams> {
        Ok(EnsembleParams::new(
            Beta::from_dyson_index(self.beta)?,
            self.k,
            self.m,
            self.l,
            self.statistics.into(),
        )?
        .with_scale(self.v0))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form limit moment table at (m, k).
    Moments {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        k: u64,
        /// Even orders to tabulate.
        #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
        orders: Vec<u32>,
    },
    /// Monte Carlo moment estimation on a sampled ensemble.
    Simulate {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "4")]
        orders: Vec<u32>,
    },
    /// Exact oracle-vs-formula identity suite; exit 0 iff all pass.
    Verify {
        /// Cap on the basis dimension C(l, m) scanned by the trace identities.
        #[arg(long, default_value_t = 70)]
        max_dim: u64,
        /// Also report the two readings of the eighth-moment Hahn prefactor.
        #[arg(long, default_value_t = false)]
        hahn_compare: bool,
    },
    /// Particle-diagram report for one trace order.
    Diagrams {
        /// Trace order (4, 6 or 8).
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = 6)]
        m: u16,
        #[arg(long, default_value_t = 2)]
        k: u16,
        /// Evaluation point for the leading terms (defaults to 3m + 1).
        #[arg(long)]
        l: Option<u64>,
        /// Emit the human-readable report instead of JSON.
        #[arg(long, default_value_t = false)]
        human: bool,
    },
    /// Pooled eigenvalue density with a semicircle overlay, as CSV.
    Density {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Dyck words, Catalan counts and non-crossing matchings.
    Dyck {
        #[arg(long)]
        n: usize,
    },
}

fn rational_json(r: &BigRational) -> Value {
    json!({
        "num": r.numer().to_string(),
        "den": r.denom().to_string(),
        "approx": r.to_f64(),
    })
}

fn emit(out: &Option<PathBuf>, payload: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, payload),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            writeln!(lock, "{payload}")
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> embedded_rmt::Result<ExitCode> {
    match cli.command {
        Command::Moments { m, k, orders } => {
            if k > m {
                return Err(embedded_rmt::Error::InvalidParams(format!(
                    "k = {k} exceeds m = {m}"
                )));
            }
            let table = moment_table(m, k, &orders)?;
            let rows: Vec<Value> = table
                .iter()
                .map(|row| {
                    json!({
                        "order": row.order,
                        "value": rational_json(&row.value),
                        "regime": serde_json::to_value(row.regime).unwrap(),
                    })
                })
                .collect();
            let payload = json!({
                "schema_version": SCHEMA_VERSION,
                "m": m,
                "k": k,
                "moments": rows,
            });
            emit(&cli.out, &serde_json::to_string_pretty(&payload)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { ensemble, samples, seed, orders } => {
            let params = ensemble.params()?;
            let report = estimate_moments(&params, &orders, samples, seed)?;
            let mut payload = serde_json::to_value(&report)?;
            payload["params"] = serde_json::to_value(&params)?;
            emit(&cli.out, &serde_json::to_string_pretty(&payload)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { max_dim, hahn_compare } => {
            let report = run_verify(max_dim, cli.budget, hahn_compare)?;
            let all_pass = report["checks"]
                .as_array()
                .map(|arr| arr.iter().all(|c| c["pass"].as_bool() == Some(true)))
                .unwrap_or(false);
            emit(&cli.out, &serde_json::to_string_pretty(&report)?)?;
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Diagrams { order, m, k, l, human } => {
            if !(matches!(order, 4 | 6 | 8)) {
                return Err(embedded_rmt::Error::UnsupportedOrder(order as u32));
            }
            if k > m {
                return Err(embedded_rmt::Error::InvalidParams(format!(
                    "k = {k} exceeds m = {m}"
                )));
            }
            let n = (order / 2) as u32;
            let l = l.unwrap_or(3 * m as u64 + 1);
            let payload = diagram_report(order, n, m, k, l)?;
            if human {
                emit(&cli.out, &human_diagram_report(&payload))?;
            } else {
                emit(&cli.out, &serde_json::to_string_pretty(&payload)?)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Density { ensemble, samples, bins, seed } => {
            let params = ensemble.params()?;
            let hist = empirical_density(&params, samples, bins, seed)?;
            emit(&cli.out, &hist.to_csv())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Dyck { n } => {
            let words = dyck_words(n)?;
            let pairings = if 2 * n <= 12 {
                Some(enumerate_pairings(2 * n)?)
            } else {
                None
            };
            let non_crossing =
                pairings.as_ref().map(|ps| ps.iter().filter(|p| !p.is_crossing()).count());
            let payload = json!({
                "schema_version": SCHEMA_VERSION,
                "n": n,
                "catalan": catalan(n as u64).to_string(),
                "word_count": words.len(),
                "words": if n <= 6 {
                    Value::Array(words.iter().map(|w| Value::String(w.0.clone())).collect())
                } else {
                    Value::Null
                },
                "non_crossing_pairings": non_crossing,
            });
            emit(&cli.out, &serde_json::to_string_pretty(&payload)?)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn check(name: &str, pass: bool, details: Value) -> Value {
    json!({ "name": name, "pass": pass, "details": details })
}

/// The oracle-vs-formula identity suite behind `ermt verify`.
fn run_verify(max_dim: u64, budget: u128, hahn_compare: bool) -> embedded_rmt::Result<Value> {
    let mut checks = Vec::new();
    let config = OracleConfig { budget, ..Default::default() };

    // 1. exact second trace vs C(l,m) C(m,k) C(l-m+k,k)
    {
        let mut tested = 0usize;
        let mut failures = Vec::new();
        for l in 1..=16u16 {
            for m in 0..=l {
                let dim = basis_size(l, m, Statistics::Fermionic);
                if dim > max_dim.into() {
                    continue;
                }
                for k in 0..=m {
                    let got = exact_even_trace(l, m, k, 2, &config)?;
                    let want = embedded_rmt::combinatorics::binomial(l as u64, m as i64)
                        * embedded_rmt::combinatorics::binomial(m as u64, k as i64)
                        * embedded_rmt::combinatorics::binomial((l - m + k) as u64, k as i64);
                    tested += 1;
                    if got != want {
                        failures.push(format!("l={l} m={m} k={k}"));
                    }
                }
            }
        }
        checks.push(check(
            "second_trace_identity",
            failures.is_empty() && tested > 0,
            json!({ "cases": tested, "failures": failures }),
        ));
    }

    // 2. k = m trace polynomials at orders 4 and 6
    {
        let mut tested = 0usize;
        let mut failures = Vec::new();
        for (l, m) in [(2u16, 1u16), (3, 1), (4, 2), (5, 2), (6, 3), (6, 1)] {
            let n = embedded_rmt::combinatorics::binomial(l as u64, m as i64);
            if n > max_dim.into() {
                continue;
            }
            let want4 = num_bigint::BigUint::from(2u32) * n.pow(3) + n.clone();
            let want6 =
                num_bigint::BigUint::from(5u32) * n.pow(4) + num_bigint::BigUint::from(10u32) * n.pow(2);
            tested += 1;
            if exact_even_trace(l, m, m, 4, &config)? != want4
                || exact_even_trace(l, m, m, 6, &config)? != want6
            {
                failures.push(format!("l={l} m={m}"));
            }
        }
        let p8 = km_trace_polynomial(8)?;
        let leading_ok = p8.get(&5).map(|c| c.to_string()) == Some("14".into());
        checks.push(check(
            "km_trace_polynomials",
            failures.is_empty() && tested > 0 && leading_ok,
            json!({ "cases": tested, "failures": failures, "order8_leading": p8.get(&5).map(|c| c.to_string()) }),
        ));
    }

    // 3. Hahn lemma on 0 <= 2k <= m <= 30
    {
        let mut bad = Vec::new();
        for m in 0..=30u64 {
            for k in 0..=m / 2 {
                if hahn_lhs(m, k)? != hahn_rhs(m, k)? {
                    bad.push(format!("m={m} k={k}"));
                }
            }
        }
        checks.push(check("hahn_lemma", bad.is_empty(), json!({ "failures": bad })));
    }

    // 4. Dyck counts and the order-four translations
    {
        let mut ok = true;
        for n in 1..=6usize {
            ok &= dyck_words(n)?.len().to_string() == catalan(n as u64).to_string();
        }
        let pairings = enumerate_pairings(4)?;
        let mut translations = Vec::new();
        for p in &pairings {
            let c = pairing_to_cycles(p);
            if let Ok(w) = cycle_to_dyck(&c) {
                translations.push(w.0);
            }
        }
        translations.sort();
        ok &= translations == vec!["XXYYXY".to_string(), "XYXXYY".to_string()];
        checks.push(check("dyck_catalan", ok, json!({ "order4_words": translations })));
    }

    // 5. diagram engine vs closed forms on a small grid
    {
        let mut bad = Vec::new();
        for n in [2u32, 3, 4] {
            for m in 1..=8u16 {
                for k in 0..=m {
                    if assemble_moment(n, m, k)? != nth_moment_limit(n, m as u64, k as u64)? {
                        bad.push(format!("n={n} m={m} k={k}"));
                    }
                }
            }
        }
        checks.push(check("diagram_engine_vs_formulas", bad.is_empty(), json!({ "failures": bad })));
    }

    // 6. closed-form endpoints
    {
        let mut ok = true;
        ok &= formulas::fourth_moment_limit(12, 0) == BigRational::from_integer(3.into());
        ok &= formulas::sixth_moment_limit(12, 0) == BigRational::from_integer(15.into());
        ok &= formulas::eighth_moment_limit(12, 0) == BigRational::from_integer(105.into());
        for m in 1..=40u64 {
            for k in m / 2 + 1..=m {
                ok &= formulas::fourth_moment_limit(m, k) == BigRational::from_integer(2.into());
                ok &= formulas::sixth_moment_limit(m, k) == BigRational::from_integer(5.into());
                ok &= formulas::eighth_moment_limit(m, k)
                    == BigRational::from_integer(14.into());
            }
        }
        checks.push(check("closed_form_endpoints", ok, json!({})));
    }

    // optional: the two readings of the printed Hahn prefactor
    if hahn_compare {
        let mut rows = Vec::new();
        for (m, k) in [(8u64, 2u64), (10, 3), (12, 4)] {
            let closed = eighth_moment_limit_with(m, k, HahnVariant::Closed);
            let printed = eighth_moment_limit_with(m, k, HahnVariant::PrefactorInsideSum);
            rows.push(json!({
                "m": m,
                "k": k,
                "closed": rational_json(&closed),
                "prefactor_inside_sum": rational_json(&printed),
            }));
        }
        checks.push(check("hahn_prefactor_comparison", true, Value::Array(rows)));
    }

    Ok(json!({ "schema_version": SCHEMA_VERSION, "checks": checks }))
}

/// Per-class diagram report: structure, loops, conservation system, optimal
/// family and the evaluated leading term.
fn diagram_report(order: usize, n: u32, m: u16, k: u16, l: u64) -> embedded_rmt::Result<Value> {
    let classes = canonical_classes(order)?;
    let mut rows = Vec::new();
    for (ix, class) in classes.iter().enumerate() {
        let reduced = reduce_pattern(&class.pattern)?;
        let analysis = analyze_class(class, n, m, k)?;
        let mut row = json!({
            "class": ix,
            "multiplicity": class.multiplicity,
            "representative_pairing": class.pattern.pairing.to_string(),
            "tails": reduced.tail_count,
            "contribution": rational_json(&analysis.contribution),
        });
        if let Some(core) = &reduced.core {
            let system = build_loop_system(core)?;
            let term = maximize_argument(&system, m, k)?;
            let symbolic = certify_argument(core, 12)?;
            let bonds: Vec<Value> = core
                .bonds
                .iter()
                .map(|b| {
                    json!({
                        "nodes": [b.a, b.b],
                        "size": match b.class {
                            embedded_rmt::diagram::BondClass::K => "k",
                            embedded_rmt::diagram::BondClass::MK => "m-k",
                        },
                        "factor": b.factor,
                    })
                })
                .collect();
            let loops: Vec<Value> =
                system.loops.iter().map(|lp| json!(lp.nodes.clone())).collect();
            let equations: Vec<Value> = system
                .bond_loops
                .iter()
                .enumerate()
                .map(|(bx, ls)| {
                    json!({
                        "bond": bx,
                        "loops": ls,
                        "size": match system.bond_class[bx] {
                            embedded_rmt::diagram::BondClass::K => "k",
                            embedded_rmt::diagram::BondClass::MK => "m-k",
                        },
                    })
                })
                .collect();
            row["core"] = json!({
                "nodes": core.node_count,
                "bonds": bonds,
                "loops": loops,
                "conservation": equations,
                "max_argument": term.max_argument,
                "symbolic_argument": symbolic.map(|f| f.to_string()),
                "optimal_solutions": term.solutions,
                "leading_term_at_l": embedded_rmt::diagram::leading_term_value(&term, l)?.to_string(),
            });
        }
        rows.push(row);
    }
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "order": order,
        "m": m,
        "k": k,
        "l": l,
        "classes": rows,
        "assembled_moment": rational_json(&assemble_moment(n, m, k)?),
    }))
}

fn human_diagram_report(payload: &Value) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "trace order {} at m = {}, k = {}, evaluated at l = {}\n",
        payload["order"], payload["m"], payload["k"], payload["l"]
    ));
    for class in payload["classes"].as_array().unwrap() {
        out.push_str(&format!(
            "\nclass {} (multiplicity {}, representative {}):\n",
            class["class"], class["multiplicity"], class["representative_pairing"]
        ));
        out.push_str(&format!("  tails: {}\n", class["tails"]));
        if let Some(core) = class.get("core").filter(|c| !c.is_null()) {
            out.push_str(&format!(
                "  core: {} nodes, {} bonds, {} loops\n",
                core["nodes"],
                core["bonds"].as_array().map(|b| b.len()).unwrap_or(0),
                core["loops"].as_array().map(|b| b.len()).unwrap_or(0)
            ));
            out.push_str(&format!(
                "  max argument: {} ({})\n",
                core["max_argument"],
                core["symbolic_argument"].as_str().unwrap_or("numeric only")
            ));
            out.push_str(&format!(
                "  optimal family size: {}\n  leading term at l: {}\n",
                core["optimal_solutions"].as_array().map(|s| s.len()).unwrap_or(0),
                core["leading_term_at_l"]
            ));
        } else {
            out.push_str("  fully collapsing (exact scalar contribution)\n");
        }
        out.push_str(&format!(
            "  contribution to the limit moment: {}\n",
            class["contribution"]["approx"]
        ));
    }
    out.push_str(&format!(
        "\nassembled limit moment: {} / {} = {}\n",
        payload["assembled_moment"]["num"],
        payload["assembled_moment"]["den"],
        payload["assembled_moment"]["approx"]
    ));
    out
}
