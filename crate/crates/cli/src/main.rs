use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use hquiver_core::flagvar::{bundle_ratio_check, counting_polynomial, tabulate_counts};
use hquiver_core::gendecomp::{canonical_decomposition, k_independence_check, krull_schmidt};
use hquiver_core::hmod::from_structure_matrices;
use hquiver_core::homext::{find_rigid, is_rigid};
use hquiver_core::io::{CartanConfig, ModuleFile, FORMAT_VERSION};
use hquiver_core::reduce::reduce_to;
use hquiver_core::sampling::SamplingConfig;
use hquiver_core::{CartanDatum, Error, HModule, RankVector};

const DEFAULT_PRIMES: &str = "2,3,5,7,11,13";

#[derive(Parser, Debug)]
#[command(name = "hquiver", version, about = "Locally free modules over H(C, kD, Ω) over prime fields")]
struct Cli {
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// master seed for all sampling
    #[arg(long, global = true, default_value_t = SamplingConfig::default().seed)]
    seed: u64,
    /// write output here instead of stdout
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Validate a Cartan config and print the quiver, g/f tables and Euler form.
    AlgebraCheck { config: PathBuf },
    /// Canonical decomposition of a rank vector, optionally for every k up to --kmax.
    Decomp {
        config: PathBuf,
        /// rank vector, e.g. "1,2"
        #[arg(long, short)]
        r: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Search for the rigid module of a rank vector; prints a module file.
    Rigid {
        config: PathBuf,
        #[arg(long, short)]
        r: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Point counts of a flag variety over several primes, with the interpolating polynomial.
    FlagCount {
        config: PathBuf,
        module: PathBuf,
        /// parts separated by ';', e.g. "1,0;0,1"
        #[arg(long, short)]
        brseq: String,
        #[arg(long, default_value = DEFAULT_PRIMES)]
        primes: String,
        /// re-read a structure-form module at this k
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        degree_bound: Option<usize>,
        /// emit the count table as CSV
        #[arg(long)]
        csv: bool,
    },
    /// Reduce a module to a smaller k and compare rank and rigidity.
    Reduce {
        config: PathBuf,
        module: PathBuf,
        /// target k (default: one less)
        #[arg(long)]
        to_k: Option<usize>,
        /// also write the reduced module file here
        #[arg(long)]
        module_out: Option<PathBuf>,
    },
    /// Check count_k = q^d · count_{k-1} for the rigid module of r at each k up to --kmax.
    BundleCheck {
        config: PathBuf,
        #[arg(long, short)]
        r: String,
        #[arg(long, short)]
        brseq: String,
        #[arg(long, default_value_t = 3)]
        kmax: usize,
        #[arg(long, default_value = "2,3")]
        primes: String,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

enum Output {
    Json(Value),
    Text(String),
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|_| anyhow!(Error::InvalidInput(format!("bad {what} entry {x:?}")))))
        .collect()
}

fn parse_rank(s: &str, datum: &CartanDatum) -> Result<RankVector> {
    let v: Vec<usize> = parse_list(s, "rank")?;
    if v.len() != datum.n() {
        return Err(Error::LengthMismatch { expected: datum.n(), got: v.len() }.into());
    }
    Ok(RankVector(v))
}

fn parse_brseq(s: &str, datum: &CartanDatum) -> Result<Vec<RankVector>> {
    s.split(';').filter(|x| !x.trim().is_empty()).map(|part| parse_rank(part, datum)).collect()
}

fn load_config(path: &Path) -> Result<(CartanConfig, Arc<CartanDatum>)> {
    let cfg = CartanConfig::from_path(path)?;
    let datum = cfg.datum()?;
    Ok((cfg, Arc::new(datum)))
}

fn load_module(path: &Path, datum: &Arc<CartanDatum>, k: Option<usize>) -> Result<(ModuleFile, HModule)> {
    let f = ModuleFile::from_path(path)?;
    let m = match k {
        Some(k) if k != f.k => {
            let s = f.structure_matrices(datum)?.ok_or_else(|| {
                anyhow!(Error::InvalidInput(format!("module has k={} and is not in structure form; cannot re-read at k={k}", f.k)))
            })?;
            from_structure_matrices(datum.clone(), &s.with_k(datum, k), f.p)?
        }
        _ => f.to_module(datum.clone())?,
    };
    Ok((f, m))
}

fn sampling(seed: u64, samples: Option<usize>) -> SamplingConfig {
    let cfg = SamplingConfig::default().with_seed(seed);
    match samples {
        Some(s) => cfg.with_samples(s),
        None => cfg,
    }
}

fn envelope(command: &str, config: &CartanConfig, args: Value, result: Value) -> Value {
    json!({
        "format_version": FORMAT_VERSION,
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "args": args,
        "result": result,
    })
}

fn algebra_check(config: &Path) -> Result<Value> {
    let (cfg, d) = load_config(config)?;
    let n = d.n();
    let k = cfg.k;
    let q = d.build_quiver(k);
    let table = |f: &dyn Fn(usize, usize) -> Value| -> Vec<Vec<Value>> {
        (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
    };
    let unit = |i: usize| -> Vec<i64> { (0..n).map(|x| (x == i) as i64).collect() };
    let euler = table(&|i, j| json!(d.euler_form(k, &unit(i), &unit(j)).unwrap()));
    let sym = table(&|i, j| json!(d.symmetrizer_form(k, &unit(i), &unit(j)).unwrap()));
    let g = table(&|i, j| if i != j && d.c(i, j) != 0 { json!(d.g(i, j)) } else { Value::Null });
    let f = table(&|i, j| if i != j && d.c(i, j) != 0 { json!(d.f(i, j)) } else { Value::Null });
    let vertices: Vec<Value> = (0..n)
        .map(|i| json!({"vertex": i + 1, "c": d.sym(i), "loop_length": q.loop_orders[i]}))
        .collect();
    let arrows: Vec<Value> = q
        .arrows
        .iter()
        .map(|a| json!({"source": a.source + 1, "target": a.target + 1, "copy": a.copy + 1}))
        .collect();
    let order: Vec<usize> = d.topological_order().iter().map(|i| i + 1).collect();
    let result = json!({
        "valid": true,
        "k": k,
        "vertices": vertices,
        "arrows": arrows,
        "topological_order": order,
        "g": g,
        "f": f,
        "euler_form": euler,
        "symmetric_form": sym,
    });
    Ok(envelope("algebra-check", &cfg, json!({}), result))
}

fn run(cli: &Cli) -> Result<Output> {
    let seed = cli.seed;
    match &cli.cmd {
        Cmd::AlgebraCheck { config } => Ok(Output::Json(algebra_check(config)?)),
        Cmd::Decomp { config, r, k, p, samples, kmax } => {
            let (cfg, d) = load_config(config)?;
            let r = parse_rank(r, &d)?;
            let (k, p) = (k.unwrap_or(cfg.k), p.unwrap_or(cfg.p));
            let sc = sampling(seed, *samples);
            let report = canonical_decomposition(d.clone(), k, p, &r, &sc)?;
            let sweep = match kmax {
                Some(km) => Some(serde_json::to_value(k_independence_check(d, p, &r, *km, &sc)?)?),
                None => None,
            };
            let args = json!({"r": r, "k": k, "p": p, "seed": seed, "samples": sc.samples, "kmax": kmax});
            let result = json!({"decomposition": report, "k_independence": sweep});
            Ok(Output::Json(envelope("decomp", &cfg, args, result)))
        }
        Cmd::Rigid { config, r, k, p, trials } => {
            let (cfg, d) = load_config(config)?;
            let r = parse_rank(r, &d)?;
            let (k, p) = (k.unwrap_or(cfg.k), p.unwrap_or(cfg.p));
            let search = find_rigid(d, k, p, &r, *trials, &sampling(seed, None))?;
            eprintln!("{}", search.summary());
            match &search.module {
                Some(m) => Ok(Output::Text(ModuleFile::from_module(m).to_json())),
                None => Ok(Output::Text(search.summary())),
            }
        }
        Cmd::FlagCount { config, module, brseq, primes, k, degree_bound, csv } => {
            let (cfg, d) = load_config(config)?;
            let (_, m) = load_module(module, &d, *k)?;
            let brseq = parse_brseq(brseq, &d)?;
            let primes: Vec<u32> = parse_list(primes, "prime")?;
            let (table, poly_error) = match counting_polynomial(&m, &brseq, &primes, *degree_bound) {
                Ok(t) => (t, None),
                Err(e @ (Error::NotEnoughPrimes { .. }
                | Error::NonIntegerCoefficient { .. }
                | Error::InconsistentPoint { .. }
                | Error::NoIntegerLift)) => (tabulate_counts(&m, &brseq, &primes)?, Some(e.to_string())),
                Err(e) => return Err(e.into()),
            };
            if *csv {
                return Ok(Output::Text(table.to_csv()));
            }
            let args = json!({"brseq": brseq, "primes": primes, "k": m.k(), "degree_bound": degree_bound, "module": module});
            let result = json!({"table": table, "polynomial_error": poly_error});
            Ok(Output::Json(envelope("flag-count", &cfg, args, result)))
        }
        Cmd::Reduce { config, module, to_k, module_out } => {
            let (cfg, d) = load_config(config)?;
            let (_, m) = load_module(module, &d, None)?;
            let j = to_k.unwrap_or(m.k().saturating_sub(1));
            let red = reduce_to(&m, j)?;
            let sc = sampling(seed, None);
            let ks = krull_schmidt(&red.module, &sc)?;
            let reduced_file = ModuleFile::from_module(&red.module);
            if let Some(path) = module_out {
                std::fs::write(path, reduced_file.to_json()).with_context(|| format!("writing {}", path.display()))?;
            }
            let result = json!({
                "rank_before": m.rank_vector()?,
                "rank_after": red.module.rank_vector()?,
                "k_before": m.k(),
                "k_after": j,
                "rigid_before": is_rigid(&m)?,
                "rigid_after": is_rigid(&red.module)?,
                "summands_after": ks.rank_type()?,
                "summands_certain": ks.certain,
                "module": reduced_file,
            });
            let args = json!({"module": module, "to_k": j});
            Ok(Output::Json(envelope("reduce", &cfg, args, result)))
        }
        Cmd::BundleCheck { config, r, brseq, kmax, primes, p, trials } => {
            let (cfg, d) = load_config(config)?;
            let r = parse_rank(r, &d)?;
            let brseq = parse_brseq(brseq, &d)?;
            let primes: Vec<u32> = parse_list(primes, "prime")?;
            let p = p.unwrap_or(cfg.p);
            if *kmax < 2 {
                return Err(Error::KTooSmall { k: *kmax, min: 2 }.into());
            }
            let sc = sampling(seed, None);
            let mut rows = Vec::new();
            let mut checked = 0;
            let mut all_hold = true;
            for k in 2..=*kmax {
                let search = find_rigid(d.clone(), k, p, &r, *trials, &sc)?;
                let report = match &search.module {
                    Some(m) => {
                        let rep = bundle_ratio_check(m, &brseq, &primes)?;
                        checked += 1;
                        all_hold &= rep.all_hold;
                        Some(rep)
                    }
                    None => None,
                };
                rows.push(json!({"k": k, "rigid": search.summary(), "report": report}));
            }
            let args = json!({"r": r, "brseq": brseq, "kmax": kmax, "primes": primes, "p": p, "trials": trials, "seed": seed});
            let result = json!({"rows": rows, "checked": checked, "all_hold": all_hold && checked > 0});
            Ok(Output::Json(envelope("bundle-check", &cfg, args, result)))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded(_)) => 3,
        Some(Error::Internal(_)) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    let out = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let mut text = match out {
        Output::Json(v) => serde_json::to_string_pretty(&v).expect("reports serialize"),
        Output::Text(s) => s,
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| anyhow!("writing {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsing() {
        let d = CartanDatum::b2();
        assert_eq!(parse_rank("1, 2", &d).unwrap(), RankVector(vec![1, 2]));
        assert!(parse_rank("1", &d).is_err());
        assert!(parse_rank("1,x", &d).is_err());
        assert_eq!(parse_brseq("1,0;0,1", &d).unwrap().len(), 2);
        assert!(parse_brseq("", &d).unwrap().is_empty());
        let e = parse_rank("1", &d).unwrap_err();
        assert_eq!(exit_code(&e), 2);
        assert_eq!(exit_code(&anyhow!(Error::BudgetExceeded("x".into()))), 3);
        assert_eq!(exit_code(&anyhow!(Error::Internal("x".into()))), 4);
    }
}
