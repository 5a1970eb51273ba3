use clap::{Args, Parser, Subcommand, ValueEnum};
use qtwist::config::{parse_complex, ComplexInput, Layer, OutputFormat, RunConfig};
use qtwist::fps::VarTag;
use qtwist::qkz::{self, BranchJson, Flavor, TwistMode};
use qtwist::rmatrix::{self, closed_form_r};
use qtwist::suite;
use qtwist::twistor::{self, EllipticPoint};
use qtwist::{CMat, C64};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qtwist", version, about = "q-deformed R-matrices, twistors and q-KZ solutions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML config file (default: $QTWIST_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = complex)]
    q: Option<C64>,
    #[arg(long, global = true, value_parser = complex)]
    eps: Option<C64>,
    #[arg(long, global = true, value_parser = complex)]
    u: Option<C64>,
    #[arg(long, global = true, value_parser = complex)]
    k: Option<C64>,
    #[arg(long, global = true)]
    g: Option<f64>,
    #[arg(long, global = true, visible_alias = "order")]
    order_x: Option<usize>,
    #[arg(long, global = true)]
    order_eps: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    m_source: Option<f64>,
    #[arg(long, global = true)]
    m_sink: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Compare output byte-for-byte against this file.
    #[arg(long, global = true)]
    golden: Option<PathBuf>,
}

impl Common {
    fn layer(&self) -> Layer {
        let cx = |v: Option<C64>| v.map(|z| ComplexInput::Pair([z.re, z.im]));
        Layer {
            q: cx(self.q),
            eps: cx(self.eps),
            u: cx(self.u),
            k: cx(self.k),
            g: self.g,
            order_x: self.order_x,
            order_eps: self.order_eps,
            tol: self.tol,
            seed: self.seed,
            m_source: self.m_source,
            m_sink: self.m_sink,
            format: self.format,
            output: self.output.clone(),
            golden: self.golden.clone(),
        }
    }
}

fn complex(s: &str) -> Result<C64, String> {
    parse_complex(s)
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalized R-matrix as a series in z2/z1.
    Rmat,
    /// Yang-Baxter residual of the R-matrix series.
    YbeCheck {
        #[arg(long, value_parser = complex, default_value = "0.5")]
        y23: C64,
    },
    /// Twistor product, or a single factor with --factor.
    Twistor {
        #[arg(long, value_parser = complex, default_value = "0.3+0.1i")]
        z1: C64,
        #[arg(long, value_parser = complex, default_value = "1")]
        z2: C64,
        #[arg(long)]
        factor: Option<usize>,
    },
    /// Twisted R-matrix against theta-function ratios.
    EllipticCompare {
        #[arg(long, value_parser = complex, default_value = "0.13+0.02i")]
        spectral_u: C64,
    },
    /// q-KZ difference equations.
    Qkz {
        #[command(subcommand)]
        cmd: QkzCmd,
    },
    /// Classical KZ connection.
    Kz {
        #[command(subcommand)]
        cmd: KzCmd,
    },
    /// Every acceptance criterion.
    VerifyAll,
}

#[derive(Subcommand)]
enum QkzCmd {
    /// Series solutions of the two-point system.
    Solve2 {
        #[arg(long, value_enum, default_value = "f")]
        flavor: FlavorArg,
    },
    /// Three-point consistency.
    Check3 {
        #[arg(long, value_parser = complex, default_value = "0.3+0.1i")]
        c23: C64,
    },
    /// Twisted two-point equation.
    Twist2 {
        #[arg(long, value_enum, default_value = "hopf")]
        mode: ModeArg,
        #[arg(long, value_parser = complex, default_value = "0.1")]
        x: C64,
    },
}

#[derive(Subcommand)]
enum KzCmd {
    /// Flatness on a grid and Frobenius series.
    Flat {
        /// Twice the spin of the third module.
        #[arg(long, default_value_t = 2)]
        two_j: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    F,
    G,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Hopf,
    Quasi,
}

enum Failure {
    Usage(String),
    Validation(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Rendered output plus the identities that failed validation.
struct Outcome {
    text: String,
    failed: Vec<String>,
}

fn json<T: Serialize>(v: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn csv_rows<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.to_string())?)?)
}

fn check(failed: &mut Vec<String>, identity: &str, value: f64, tol: f64) {
    if !(value < tol) {
        failed.push(format!("{identity} ({value:.3e} >= {tol:.0e})"));
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn matrix(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect()).collect()
}

#[derive(Serialize)]
struct EntryRow {
    i: usize,
    j: usize,
    n: usize,
    re: f64,
    im: f64,
}

fn series_matrix_rows(s: &qtwist::fps::SeriesMatrix) -> Vec<EntryRow> {
    let mut rows = Vec::new();
    for (n, m) in s.coeffs().iter().enumerate() {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                rows.push(EntryRow { i, j, n, re: m[(i, j)].re, im: m[(i, j)].im });
            }
        }
    }
    rows
}

#[derive(Serialize)]
struct Metric<'a> {
    identity: &'a str,
    name: &'a str,
    value: f64,
    tol: f64,
}

fn metrics(cfg: &RunConfig, rows: &[Metric], extra: impl Serialize) -> Result<String, Failure> {
    match cfg.format {
        OutputFormat::Csv => csv_rows(rows),
        OutputFormat::Json => json(&extra),
    }
}

fn run(cmd: &Cmd, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let p = &cfg.model;
    let tol = p.tol;
    let mut failed = Vec::new();
    let text = match cmd {
        Cmd::Rmat => {
            let r = closed_form_r(p.q, VarTag::Z2OverZ1, p.order_x, true)?.assembled;
            match cfg.format {
                OutputFormat::Json => json(&r.to_json())?,
                OutputFormat::Csv => csv_rows(series_matrix_rows(&r))?,
            }
        }
        Cmd::YbeCheck { y23 } => {
            let r = rmatrix::verify_ybe(p.q, *y23, p.order_x, true)?;
            check(&mut failed, "yang-baxter", r.residual, tol);
            let rows = [Metric { identity: "yang-baxter", name: "weighted residual", value: r.residual, tol }];
            #[derive(Serialize)]
            struct Out {
                y23: [f64; 2],
                residual: f64,
                unnormalized_residual: f64,
                rho: f64,
                tol: f64,
            }
            let out = Out { y23: pair(*y23), residual: r.residual, unnormalized_residual: r.plain_residual, rho: r.rho, tol };
            metrics(cfg, &rows, out)?
        }
        Cmd::Twistor { z1, z2, factor: Some(m) } => {
            let m = *m;
            if m == 0 {
                return Err(Failure::Usage("--factor counts from 1".into()));
            }
            let order = (p.order_eps / m).max(1);
            let cf = twistor::closed_form_factor(p, m, *z1, *z2, order)?;
            let rec = twistor::solve_twistor_recursion(p, m, order * m, *z1, *z2)?;
            let d = (0..=order)
                .map(|n| qtwist::linalg::max_abs(&(rec.lambda_series.coeff(n) - cf.lambda_series.coeff(n))))
                .fold(0.0, f64::max);
            check(&mut failed, "twistor-factors", d, tol);
            match cfg.format {
                OutputFormat::Csv => csv_rows(series_matrix_rows(&cf.lambda_series))?,
                OutputFormat::Json => {
                    #[derive(Serialize)]
                    struct Out {
                        m: usize,
                        cartan_q: [[f64; 2]; 2],
                        recursion_residual: f64,
                        lambda_series: qtwist::fps::SeriesMatrixJson,
                    }
                    json(&Out {
                        m,
                        cartan_q: [pair(cf.cartan_q[0]), pair(cf.cartan_q[1])],
                        recursion_residual: d,
                        lambda_series: cf.lambda_series.to_json(),
                    })?
                }
            }
        }
        Cmd::Twistor { z1, z2, factor: None } => {
            let r = twistor::assemble_product(p, *z1, *z2)?;
            check(&mut failed, "twistor-product", r.residual, tol);
            let rows = [Metric { identity: "twistor-product", name: "product vs closed", value: r.residual, tol }];
            #[derive(Serialize)]
            struct Out {
                factors: usize,
                residual: f64,
                closed: [[f64; 2]; 5],
                product: Vec<Vec<[f64; 2]>>,
            }
            let c = &r.closed;
            let out = Out {
                factors: r.factors,
                residual: r.residual,
                closed: [pair(c.a), pair(c.d), pair(c.b), pair(c.c), pair(c.normalizer)],
                product: matrix(&r.assembled),
            };
            metrics(cfg, &rows, out)?
        }
        Cmd::EllipticCompare { spectral_u } => {
            let pt = EllipticPoint::from_q_eps(p.q, p.eps, *spectral_u);
            let r = twistor::compare_elliptic(p, &pt, tol)?;
            check(&mut failed, "elliptic-match", r.theta_deviation, tol);
            check(&mut failed, "elliptic-match", r.jacobi_deviation, tol);
            let rows = [
                Metric { identity: "elliptic-match", name: "theta ratios", value: r.theta_deviation, tol },
                Metric { identity: "elliptic-match", name: "jacobi ratios", value: r.jacobi_deviation, tol },
                Metric { identity: "elliptic-match", name: "scalar", value: r.scalar_deviation, tol },
            ];
            metrics(cfg, &rows, r)?
        }
        Cmd::Qkz { cmd: QkzCmd::Solve2 { flavor } } => {
            let fl = match flavor {
                FlavorArg::F => Flavor::F,
                FlavorArg::G => Flavor::G,
            };
            let sys = qkz::build_two_point_system(p, cfg.weights, fl)?;
            let cons = qkz::consistency(&sys)?;
            check(&mut failed, "qkz-consistency", cons.forward.max(cons.reversed), tol);
            let branches = qkz::solve_two_point(&sys)?;
            for b in &branches {
                check(&mut failed, "qkz-consistency", b.residual_t1.max(b.residual_t2), tol);
            }
            match cfg.format {
                OutputFormat::Json => {
                    #[derive(Serialize)]
                    struct Out {
                        branches: Vec<BranchJson>,
                    }
                    json(&Out { branches: branches.iter().map(BranchJson::from).collect() })?
                }
                OutputFormat::Csv => {
                    #[derive(Serialize)]
                    struct Row {
                        branch: usize,
                        s_re: f64,
                        s_im: f64,
                        component: usize,
                        n: usize,
                        re: f64,
                        im: f64,
                    }
                    let mut rows = Vec::new();
                    for (bi, b) in branches.iter().enumerate() {
                        for (n, v) in b.coeffs.iter().enumerate() {
                            for (component, z) in v.iter().enumerate() {
                                rows.push(Row { branch: bi, s_re: b.s.re, s_im: b.s.im, component, n, re: z.re, im: z.im });
                            }
                        }
                    }
                    csv_rows(rows)?
                }
            }
        }
        Cmd::Qkz { cmd: QkzCmd::Check3 { c23 } } => {
            let r = qkz::check_three_point(p, cfg.weights, *c23, 2)?;
            check(&mut failed, "qkz-consistency", r.f_composite, tol);
            check(&mut failed, "qkz-consistency", r.g_composite, tol);
            check(&mut failed, "qkz-consistency", r.quasi_triangularity, tol);
            let rows = [
                Metric { identity: "qkz-consistency", name: "f composite", value: r.f_composite, tol },
                Metric { identity: "qkz-consistency", name: "g composite", value: r.g_composite, tol },
                Metric { identity: "qkz-consistency", name: "g composite (universal)", value: r.g_composite_universal, tol },
                Metric { identity: "qkz-consistency", name: "quasi-triangularity", value: r.quasi_triangularity, tol },
            ];
            metrics(cfg, &rows, r)?
        }
        Cmd::Qkz { cmd: QkzCmd::Twist2 { mode, x } } => {
            let mode = match mode {
                ModeArg::Hopf => TwistMode::Hopf,
                ModeArg::Quasi => TwistMode::QuasiHopf,
            };
            let r = qkz::twist_two_point(p, cfg.weights, mode, *x)?;
            check(&mut failed, "twist-covariance", r.correct_residual, tol);
            let rows = [
                Metric { identity: "twist-covariance", name: "conjugated equation", value: r.correct_residual, tol },
                Metric { identity: "twist-covariance", name: "naive equation", value: r.naive_residual, tol },
            ];
            metrics(cfg, &rows, r)?
        }
        Cmd::Kz { cmd: KzCmd::Flat { two_j } } => {
            let kz = qkz::classical_kz_system(p.k + p.g, *two_j);
            let mut worst: f64 = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    let z1 = C64::from_polar(0.5 + 0.3 * i as f64, 0.9 * i as f64 + 0.2);
                    let z2 = C64::from_polar(0.6 + 0.2 * j as f64, 2.0 - 1.3 * j as f64);
                    let (a, b) = kz.flatness(z1, z2);
                    worst = worst.max(a).max(b);
                }
            }
            let fr = qkz::frobenius(&kz, p.order_x)?;
            let fres = fr.iter().map(|b| b.residual).fold(0.0, f64::max);
            check(&mut failed, "kz-flatness", worst, tol);
            check(&mut failed, "kz-flatness", fres, tol);
            let rows = [
                Metric { identity: "kz-flatness", name: "flatness", value: worst, tol },
                Metric { identity: "kz-flatness", name: "frobenius", value: fres, tol },
            ];
            #[derive(Serialize)]
            struct Exp {
                sigma: [f64; 2],
                s: [f64; 2],
                residual: f64,
            }
            #[derive(Serialize)]
            struct Out {
                flatness: f64,
                branches: Vec<Exp>,
            }
            let out = Out {
                flatness: worst,
                branches: fr.iter().map(|b| Exp { sigma: pair(b.sigma), s: pair(b.s), residual: b.residual }).collect(),
            };
            metrics(cfg, &rows, out)?
        }
        Cmd::VerifyAll => {
            let all = suite::run_all(cfg);
            for c in &all {
                eprintln!("{}", c.line());
                if !c.pass {
                    failed.push(c.identity.to_string());
                }
            }
            match cfg.format {
                OutputFormat::Json => json(&all)?,
                OutputFormat::Csv => {
                    #[derive(Serialize)]
                    struct Row<'a> {
                        id: usize,
                        identity: &'a str,
                        check: &'a str,
                        value: f64,
                        bound: f64,
                        kind: suite::Bound,
                        pass: bool,
                    }
                    let rows = all.iter().flat_map(|c| {
                        c.checks.iter().map(move |k| Row {
                            id: c.id,
                            identity: c.identity,
                            check: &k.name,
                            value: k.value,
                            bound: k.bound,
                            kind: k.kind,
                            pass: k.pass,
                        })
                    });
                    csv_rows(rows)?
                }
            }
        }
    };
    Ok(Outcome { text, failed })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(cli.common.layer(), cli.common.config.as_deref())?;
    let out = run(&cli.cmd, &cfg)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, &out.text)?,
        None => print!("{}", out.text),
    }
    let mut failed = out.failed;
    if let Some(g) = &cfg.golden {
        let want = std::fs::read_to_string(g).map_err(|e| format!("{}: {e}", g.display()))?;
        if want != out.text {
            failed.push(format!("golden output {}", g.display()));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(failed.join(", ")))
    }
}
