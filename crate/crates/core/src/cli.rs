//! Command-line surface. `run` does the work and returns the rendered report;
//! the binary only maps errors to exit codes.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use serde::Serialize;

use crate::cache::CacheStore;
use crate::curve::prime_rng;
use crate::distinguish::{self, ApComparison, MismatchReport, ValuationGrid};
use crate::error::{Error, Result};
use crate::galois::{self, Coupling, GroupModel, ModelKind};
use crate::ingest::{self, Catalog};
use crate::lfunc;
use crate::par::{self, Exec};
use crate::radical::{self, Fingerprint};
use crate::sweep::Engine;

pub const TOOL: &str = concat!("isoradix ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "isoradix", version, about = "Radical fingerprints of elliptic curves over Q")]
pub struct Cli {
    /// Directory for the persistent trace cache (in-memory when unset).
    #[arg(long, global = true, env = "ISORADIX_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Group order, trace and reduction type of one curve at one prime.
    Count {
        #[arg(long)]
        curve: String,
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        source: CurveSource,
    },
    /// Valuation fingerprints for every curve in a file.
    Fingerprint {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long)]
        bound: u64,
        #[arg(long, value_delimiter = ',')]
        ells: Option<Vec<u64>>,
        #[arg(long, default_value_t = 1)]
        degree: u32,
    },
    /// Radical mismatch scan of two curves.
    Compare {
        #[arg(long)]
        curve1: String,
        #[arg(long)]
        curve2: String,
        #[arg(long)]
        bound: u64,
        #[arg(long, value_delimiter = ',')]
        ells: Option<Vec<u64>>,
        #[command(flatten)]
        source: CurveSource,
    },
    /// Joint ℓ-adic valuation grid of two curves.
    Density {
        #[arg(long)]
        curve1: String,
        #[arg(long)]
        curve2: String,
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        bound: u64,
        #[command(flatten)]
        source: CurveSource,
    },
    /// Exact eigenvalue-one fractions of mod-ℓ image models.
    Galois {
        #[arg(long)]
        model: String,
        #[arg(long)]
        ell: u64,
        /// Also report the mismatch fraction of the equal-determinant fiber product.
        #[arg(long)]
        coupled: bool,
    },
}

#[derive(Debug, Args)]
pub struct CurveSource {
    /// Extra JSON-lines curve file; its labels shadow the bundled ones.
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

impl CurveSource {
    fn catalog(&self) -> Result<Catalog> {
        let cat = Catalog::bundled();
        Ok(match &self.curves {
            Some(path) => cat.with_user_curves(ingest::ingest_curves(path)?),
            None => cat,
        })
    }
}

/// argv without execution-only flags, so reports do not depend on them.
pub fn canonical_invocation<I, S>(argv: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = vec!["isoradix".to_string()];
    let mut skip_value = false;
    for (i, arg) in argv.into_iter().enumerate() {
        let arg = arg.as_ref();
        if i == 0 {
            continue;
        }
        if skip_value {
            skip_value = false;
            continue;
        }
        if arg == "--threads" || arg == "--cache-dir" {
            skip_value = true;
            continue;
        }
        if arg.starts_with("--threads=") || arg.starts_with("--cache-dir=") {
            continue;
        }
        out.push(arg.to_string());
    }
    out.join(" ")
}

#[derive(Debug, Serialize)]
struct Provenance {
    tool: &'static str,
    invocation: String,
}

#[derive(Debug, Serialize)]
pub struct CountReport {
    pub curve: String,
    pub p: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub a: i64,
    pub class: String,
}

#[derive(Debug, Serialize)]
pub struct LabeledFingerprint {
    pub label: String,
    #[serde(flatten)]
    pub fingerprint: Fingerprint,
}

#[derive(Debug, Serialize)]
pub struct FingerprintReport {
    pub bound: u64,
    pub fingerprints: Vec<LabeledFingerprint>,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub curve1: String,
    pub curve2: String,
    #[serde(flatten)]
    pub report: MismatchReport,
    pub ap_oracle: ApComparison,
}

#[derive(Debug, Serialize)]
pub struct DensityReport {
    pub curve1: String,
    pub curve2: String,
    #[serde(flatten)]
    pub grid: ValuationGrid,
}

#[derive(Debug, Serialize)]
pub struct GaloisReport {
    pub model: String,
    pub ell: u64,
    pub order: u64,
    pub eigen_one: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupled_mismatch: Option<String>,
}

fn float(x: f64) -> String {
    serde_json::to_string(&x).expect("finite float")
}

fn ratio_string(r: &Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Report {
    Count(CountReport),
    Fingerprint(FingerprintReport),
    Compare(CompareReport),
    Density(DensityReport),
    Galois(GaloisReport),
}

#[derive(Serialize)]
struct WithProvenance<'a> {
    #[serde(flatten)]
    provenance: &'a Provenance,
    #[serde(flatten)]
    report: &'a Report,
}

fn csv_table(out: &mut String, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
    let _ = writeln!(out, "# table: {name}");
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
}

impl Report {
    pub fn to_json(&self, invocation: &str) -> String {
        let provenance = Provenance {
            tool: TOOL,
            invocation: invocation.to_string(),
        };
        let mut s = serde_json::to_string_pretty(&WithProvenance {
            provenance: &provenance,
            report: self,
        })
        .expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_csv(&self, invocation: &str) -> String {
        let mut out = format!("# tool: {TOOL}\n# invocation: {invocation}\n");
        match self {
            Report::Count(r) => csv_table(
                &mut out,
                "count",
                &["curve", "p", "N", "a", "class"],
                [vec![
                    r.curve.clone(),
                    r.p.to_string(),
                    r.n.to_string(),
                    r.a.to_string(),
                    r.class.clone(),
                ]],
            ),
            Report::Fingerprint(r) => {
                let rows = r.fingerprints.iter().flat_map(|lf| {
                    let fp = &lf.fingerprint;
                    fp.primes.iter().enumerate().flat_map(move |(i, p)| {
                        fp.ells.iter().enumerate().map(move |(j, ell)| {
                            vec![
                                lf.label.clone(),
                                fp.curve_key.hex(),
                                fp.degree.to_string(),
                                p.to_string(),
                                ell.to_string(),
                                fp.vals[i][j].to_string(),
                            ]
                        })
                    })
                });
                csv_table(
                    &mut out,
                    "fingerprint",
                    &["label", "curve_key", "degree", "p", "ell", "v"],
                    rows,
                );
            }
            Report::Compare(r) => {
                let m = &r.report;
                csv_table(
                    &mut out,
                    "mismatches",
                    &["p", "ell", "v", "v_prime"],
                    m.mismatches.iter().map(|x| {
                        vec![
                            x.p.to_string(),
                            x.ell.to_string(),
                            x.v.to_string(),
                            x.v_prime.to_string(),
                        ]
                    }),
                );
                csv_table(
                    &mut out,
                    "per_ell_density",
                    &["ell", "mismatch_primes", "primes", "density"],
                    m.per_ell_density.iter().map(|d| {
                        vec![
                            d.ell.to_string(),
                            d.mismatch_primes.to_string(),
                            d.primes.to_string(),
                            float(d.density),
                        ]
                    }),
                );
                let verdict = match &m.verdict {
                    Some(distinguish::Verdict::Distinguished { p, ell }) => {
                        vec!["distinguished".into(), p.to_string(), ell.to_string()]
                    }
                    Some(distinguish::Verdict::ConsistentWithIsogeny { primes_tested, .. }) => {
                        vec![
                            "consistent_with_isogeny".into(),
                            primes_tested.to_string(),
                            String::new(),
                        ]
                    }
                    None => vec!["empty_sample".into(), String::new(), String::new()],
                };
                csv_table(&mut out, "verdict", &["kind", "p_or_primes_tested", "ell"], [verdict]);
                let oracle = match &r.ap_oracle {
                    ApComparison::Equal { primes_tested } => {
                        vec!["equal".into(), primes_tested.to_string(), String::new(), String::new()]
                    }
                    ApComparison::FirstDivergence { p, a, a_prime } => {
                        vec![
                            "first_divergence".into(),
                            p.to_string(),
                            a.to_string(),
                            a_prime.to_string(),
                        ]
                    }
                };
                csv_table(
                    &mut out,
                    "ap_oracle",
                    &["kind", "p_or_primes_tested", "a", "a_prime"],
                    [oracle],
                );
            }
            Report::Density(r) => {
                let g = &r.grid;
                let mut rows = Vec::new();
                for (m, row) in g.counts.iter().enumerate() {
                    for (m2, &c) in row.iter().enumerate() {
                        rows.push(vec![
                            m.to_string(),
                            m2.to_string(),
                            c.to_string(),
                            float(g.densities[m][m2]),
                        ]);
                    }
                }
                rows.push(vec![
                    "overflow".into(),
                    "overflow".into(),
                    g.overflow.to_string(),
                    float(g.overflow_density),
                ]);
                csv_table(&mut out, "valuation_grid", &["m", "m_prime", "count", "density"], rows);
            }
            Report::Galois(r) => csv_table(
                &mut out,
                "galois",
                &["model", "ell", "order", "eigen_one", "coupled_mismatch"],
                [vec![
                    r.model.clone(),
                    r.ell.to_string(),
                    r.order.to_string(),
                    r.eigen_one.clone(),
                    r.coupled_mismatch.clone().unwrap_or_default(),
                ]],
            ),
        }
        out
    }
}

fn ells_or_default(ells: &Option<Vec<u64>>) -> Vec<u64> {
    ells.clone().unwrap_or_else(radical::default_ells)
}

fn execute(cli: &Cli, engine: &Engine) -> Result<Report> {
    match &cli.command {
        Command::Count { curve, p, source } => {
            let cat = source.catalog()?;
            let e = cat.get(curve)?;
            let reduced = e.reduce(*p)?;
            let n = reduced.group_order(&mut prime_rng(engine.seed(), *p))?;
            let a = *p as i64 + 1 - n as i64;
            let class = lfunc::classify(&lfunc::count_extension(a, *p, 1)?)?;
            Ok(Report::Count(CountReport {
                curve: curve.clone(),
                p: *p,
                n,
                a,
                class: class.name().to_string(),
            }))
        }
        Command::Fingerprint {
            curves,
            bound,
            ells,
            degree,
        } => {
            let curves = ingest::ingest_curves(curves)?;
            let ells = ells_or_default(ells);
            let fingerprints = curves
                .iter()
                .map(|c| {
                    Ok(LabeledFingerprint {
                        label: c.label().to_string(),
                        fingerprint: radical::fingerprint(engine, c, *bound, &ells, *degree)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Report::Fingerprint(FingerprintReport {
                bound: *bound,
                fingerprints,
            }))
        }
        Command::Compare {
            curve1,
            curve2,
            bound,
            ells,
            source,
        } => {
            let cat = source.catalog()?;
            let (e1, e2) = (cat.get(curve1)?, cat.get(curve2)?);
            let report = distinguish::mismatch_scan(engine, e1, e2, *bound, &ells_or_default(ells))?;
            let ap_oracle = distinguish::ap_equal_oracle(engine, e1, e2, *bound)?;
            Ok(Report::Compare(CompareReport {
                curve1: curve1.clone(),
                curve2: curve2.clone(),
                report,
                ap_oracle,
            }))
        }
        Command::Density {
            curve1,
            curve2,
            ell,
            bound,
            source,
        } => {
            let cat = source.catalog()?;
            let grid = distinguish::joint_valuation_density(engine, cat.get(curve1)?, cat.get(curve2)?, *ell, *bound)?;
            Ok(Report::Density(DensityReport {
                curve1: curve1.clone(),
                curve2: curve2.clone(),
                grid,
            }))
        }
        Command::Galois { model, ell, coupled } => {
            let kind: ModelKind = model.parse()?;
            let m = GroupModel::new(kind, *ell)?;
            let eigen = galois::eigen_one_fraction_with(&m, engine.exec());
            let coupled_mismatch = if *coupled {
                Some(ratio_string(
                    &galois::coupled_mismatch_fraction(&m, &m, Coupling::FiberProduct)?.mismatch,
                ))
            } else {
                None
            };
            Ok(Report::Galois(GaloisReport {
                model: kind.name().to_string(),
                ell: *ell,
                order: m.order(),
                eigen_one: ratio_string(&eigen),
                coupled_mismatch,
            }))
        }
    }
}

/// Parse-free entry point: run an already parsed command line and render it.
pub fn run(cli: &Cli, invocation: &str) -> Result<String> {
    let store = match &cli.cache_dir {
        Some(dir) => CacheStore::open(dir)?,
        None => CacheStore::in_memory(),
    };
    let exec = if cli.threads == 1 {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    let engine = Engine::new(store, cli.seed).with_exec(exec);
    let report = par::with_threads(cli.threads, || execute(cli, &engine))?;
    Ok(match cli.format {
        Format::Json => report.to_json(invocation),
        Format::Csv => report.to_csv(invocation),
    })
}

/// Parse argv and run. Argument errors are reported as `InvalidArgument`.
pub fn run_args<I, S>(argv: I) -> Result<String>
where
    I: IntoIterator<Item = S> + Clone,
    S: AsRef<str>,
{
    let args: Vec<String> = argv.clone().into_iter().map(|s| s.as_ref().to_string()).collect();
    let cli = Cli::try_parse_from(&args).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    run(&cli, &canonical_invocation(&args))
}

/// Remediation text for user-facing errors.
pub fn hint(err: &Error) -> Option<&'static str> {
    Some(match err {
        Error::UnknownCurve(_) => "pass --curves FILE with the curve, or use a bundled label such as cm_i, cm_j, 11a1",
        Error::NotPrime(_) => "every ℓ and every p must be prime",
        Error::Io { .. } => "check that --cache-dir (or ISORADIX_CACHE_DIR) names a readable, writable directory",
        Error::BadReduction(_) => "choose a prime not dividing the discriminant of the model",
        Error::SmallPrime(_) => "primes 2 and 3 are not supported; use p >= 5",
        Error::MalformedLine { .. } => "each line must look like {\"label\":\"E\",\"a\":\"1\",\"b\":\"0\"}",
        Error::EllOutOfRange { .. } => "gl2 supports ℓ <= 31; split and nonsplit support odd ℓ <= 499",
        Error::EmptySample => "raise --bound to at least 5",
        Error::Overflow(_) => "lower --bound or --degree so that p^k stays below 2^62",
        _ => return None,
    })
}
