//! `pkattract` command-line tool.
//!
//! Exit status: 0 on success, 1 when a check fails (or a run errors), 2 on
//! usage errors including parameters outside the validated range.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use pkattract::ergodic::*;
use pkattract::green::{green_function, sample_histories, sample_mu0, sample_mu_lambda, MU0_DEPTH};
use pkattract::io::{histogram, load_cloud, write_counts_csv, write_pgm, Axis, HistogramSpec, Part};
use pkattract::maps::{default_rho, preimages_f_base, preimages_f_lambda};
use pkattract::rng::{substream, with_workers};
use pkattract::trap::{in_trap, random_trap_point};
use pkattract::verify::*;
use pkattract::{Cloud, Error, HomogeneousMap, MapKind, Params, ProjPoint, C64};

#[derive(Parser)]
#[command(name = "pkattract", version, about = "Dynamics of f_λ on P^k: attractor, measure and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Projective dimension k >= 2.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    lambda_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lambda_im: f64,
    /// Trap radius; defaults to sqrt(2)|λ|^(3/4).
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Primary output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run manifest path; defaults to `<out>.manifest.json` when `--out` is set.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Which {
    /// f on Π ≅ P^(k-1).
    Base,
    /// f_λ on P^k.
    Flambda,
    /// The lifted map on prehistories of f.
    Hat,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EntropyMethod {
    Periodic,
    Spanning,
    BrinKatok,
}

#[derive(Subcommand)]
enum Command {
    /// Forward orbit of f_λ written as a point cloud.
    Iterate {
        #[command(flatten)]
        common: Common,
        /// Start point as comma-separated re,im pairs; a random point of U_ρ by default.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        start: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// Sample of μ_λ on the attractor K_λ.
    Attractor {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Backward depth of the prehistories fed to the semiconjugacy.
        #[arg(long, default_value_t = 40)]
        depth: usize,
    },
    /// Green function of the lift of f_λ at a point.
    Green {
        #[command(flatten)]
        common: Common,
        /// Lift as comma-separated re,im pairs; a random point of U_ρ by default.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        point: Option<Vec<f64>>,
        #[arg(long, default_value_t = 60)]
        iters: usize,
    },
    /// All preimages of a target point.
    Preimages {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        target: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "flambda")]
        map: Which,
    },
    /// Points of period dividing n.
    Periodic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "base")]
        map: Which,
    },
    /// Lyapunov exponents along typical orbits.
    Lyapunov {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "flambda")]
        map: Which,
        #[arg(long, default_value_t = 100)]
        orbits: usize,
        #[arg(long, default_value_t = 10_000)]
        length: usize,
    },
    /// Entropy estimates.
    Entropy {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "periodic")]
        method: EntropyMethod,
        #[arg(long, value_enum, default_value = "flambda")]
        map: Which,
        /// Largest period or orbit length.
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Correlation decay of chart bumps and sensitive dependence.
    Mixing {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        /// Largest lag.
        #[arg(long, default_value_t = 12)]
        n: usize,
    },
    /// Lemma checkers; exits 1 if any fails.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Density image of a cloud in a chart window (plain PGM + counts CSV).
    Render {
        #[command(flatten)]
        common: Common,
        /// Cloud CSV; a fresh μ_λ sample when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Counts CSV; defaults to `<out>.counts.csv`.
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        chart: usize,
        #[arg(long, default_value_t = 0)]
        x_coord: usize,
        #[arg(long, default_value_t = 2)]
        y_coord: usize,
        #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
        x_min: f64,
        #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
        x_max: f64,
        #[arg(long, default_value_t = -0.02, allow_negative_numbers = true)]
        y_min: f64,
        #[arg(long, default_value_t = 0.04, allow_negative_numbers = true)]
        y_max: f64,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
    },
}

enum Failure {
    Usage(String),
    Check(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.into())
    }
}

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct Artifact {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    params: Value,
    seed: u64,
    worker_count: usize,
    sizes: Value,
    artifacts: Vec<Artifact>,
    version: String,
}

struct Run {
    command: &'static str,
    common: Common,
    params: Option<Params>,
    sizes: Value,
    artifacts: Vec<PathBuf>,
}

impl Run {
    fn new(command: &'static str, common: &Common) -> Self {
        Run { command, common: common.clone(), params: None, sizes: json!({}), artifacts: Vec::new() }
    }

    fn params(&mut self) -> Result<Params, Failure> {
        let c = &self.common;
        let lambda = C64::new(c.lambda_re, c.lambda_im);
        let p = (|| {
            let rho = match c.rho {
                Some(r) => r,
                None => default_rho(lambda)?,
            };
            Params::new(c.k, lambda, rho)
        })()
        .map_err(|e| Failure::Usage(e.to_string()))?;
        self.params = Some(p);
        Ok(p)
    }

    fn size(&mut self, key: &str, v: impl Serialize) {
        self.sizes[key] = json!(v);
    }

    /// Writes the primary output to `--out` (recorded as an artifact) or stdout.
    fn emit(&mut self, write: impl FnOnce(&mut dyn Write) -> pkattract::Result<()>) -> Outcome {
        match self.common.out.clone() {
            Some(path) => {
                let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
                write(&mut f)?;
                f.flush()?;
                self.artifacts.push(path);
            }
            None => {
                let stdout = std::io::stdout();
                write(&mut stdout.lock())?;
            }
        }
        Ok(())
    }

    fn emit_json(&mut self, v: &Value) -> Outcome {
        let text = serde_json::to_string_pretty(v).expect("serializable");
        self.emit(|w| Ok(writeln!(w, "{text}")?))
    }

    fn emit_cloud(&mut self, cloud: &Cloud) -> Outcome {
        self.emit(|w| pkattract::io::write_cloud_csv(cloud, w))
    }

    fn finish(self) -> Outcome {
        let path = match (&self.common.manifest, &self.common.out) {
            (Some(m), _) => m.clone(),
            (None, Some(out)) => PathBuf::from(format!("{}.manifest.json", out.display())),
            (None, None) => return Ok(()),
        };
        let mut artifacts = Vec::new();
        for a in &self.artifacts {
            artifacts
                .push(Artifact { path: a.display().to_string(), sha256: hex::encode(Sha256::digest(fs::read(a)?)) });
        }
        let params = match self.params {
            Some(p) => json!({ "k": p.k, "lambda_re": p.lambda.re, "lambda_im": p.lambda.im, "rho": p.rho }),
            None => Value::Null,
        };
        let manifest = RunManifest {
            command: self.command.to_string(),
            params,
            seed: self.common.seed,
            worker_count: self.common.workers,
            sizes: self.sizes,
            artifacts,
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        fs::write(path, serde_json::to_string_pretty(&manifest).expect("serializable") + "\n")?;
        Ok(())
    }
}

fn parse_point(values: &[f64], dim: usize) -> Result<ProjPoint, Failure> {
    if values.len() != 2 * (dim + 1) {
        return Err(Failure::Usage(format!("expected {} numbers (re,im pairs), got {}", 2 * (dim + 1), values.len())));
    }
    ProjPoint::new(values.chunks(2).map(|c| C64::new(c[0], c[1]))).map_err(|e| Failure::Usage(e.to_string()))
}

fn precision_from_env() -> Result<Option<Precision>, Failure> {
    match std::env::var("PKATTRACT_PRECISION") {
        Ok(s) => Precision::parse(&s)
            .map(Some)
            .ok_or_else(|| Failure::Usage(format!("PKATTRACT_PRECISION must be double or extended, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

fn map_for(which: Which, p: &Params) -> MapKind {
    match which {
        Which::Base | Which::Hat => MapKind::Base { k: p.k },
        Which::Flambda => MapKind::FLambda(*p),
    }
}

fn cloud_for(which: Which, p: &Params, n: usize, seed: u64) -> Cloud {
    match which {
        Which::Flambda => sample_mu_lambda(p, 40, n, seed),
        _ => sample_mu0(p.k, MU0_DEPTH, n, seed),
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Iterate { common, start, steps } => {
            let mut r = Run::new("iterate", &common);
            let p = r.params()?;
            let x0 = match start {
                Some(v) => parse_point(&v, p.k)?,
                None => random_trap_point(&p, &mut substream(common.seed, 0)),
            };
            let map = MapKind::FLambda(p);
            let mut orbit = vec![x0];
            for i in 0..steps {
                orbit.push(map.apply(&orbit[i])?);
            }
            r.size("steps", steps);
            r.emit_cloud(&Cloud::uniform(orbit)?)?;
            r.finish()
        }
        Command::Attractor { common, samples, depth } => {
            let mut r = Run::new("attractor", &common);
            let p = r.params()?;
            let cloud = sample_mu_lambda(&p, depth, samples, common.seed);
            let outside = cloud.points().iter().filter(|x| !in_trap(&p, x).0).count();
            r.size("samples", samples);
            r.size("depth", depth);
            r.emit_cloud(&cloud)?;
            r.finish()?;
            if outside > 0 {
                return Err(Failure::Check(format!("{outside} samples outside U_rho")));
            }
            Ok(())
        }
        Command::Green { common, point, iters } => {
            let mut r = Run::new("green", &common);
            let p = r.params()?;
            let map = MapKind::FLambda(p);
            let lift: Vec<C64> = match point {
                Some(v) => parse_point(&v, p.k)?.coords().to_vec(),
                None => random_trap_point(&p, &mut substream(common.seed, 0)).coords().to_vec(),
            };
            let g = green_function(&map, &lift, iters)?;
            let mut image = vec![C64::new(0.0, 0.0); lift.len()];
            map.lift(&lift, &mut image);
            let gf = green_function(&map, &image, iters)?;
            r.size("iters", iters);
            r.emit_json(&json!({ "green": g, "green_of_image": gf, "functional_residual": (gf - 2.0 * g).abs() }))?;
            r.finish()
        }
        Command::Preimages { common, target, map } => {
            let mut r = Run::new("preimages", &common);
            let p = r.params()?;
            let (dim, expected) = match map {
                Which::Base => (p.k - 1, 1usize << (p.k - 1)),
                Which::Flambda => (p.k, 1usize << p.k),
                Which::Hat => return Err(Failure::Usage("preimages are defined for base and flambda".into())),
            };
            let y = match target {
                Some(v) => parse_point(&v, dim)?,
                None => {
                    let x = random_trap_point(&p, &mut substream(common.seed, 0));
                    if dim == p.k {
                        x
                    } else {
                        pkattract::projective::project_pi(&x)?
                    }
                }
            };
            let set = match map {
                Which::Base => preimages_f_base(p.k, &y)?,
                _ => preimages_f_lambda(&p, &y)?,
            };
            r.size("preimages", set.total());
            r.emit_cloud(&Cloud::weighted(
                set.points.clone(),
                set.multiplicities.iter().map(|&m| m as f64).collect(),
            )?)?;
            r.finish()?;
            if set.total() != expected {
                return Err(Failure::Check(format!(
                    "{} preimages with multiplicity, expected {expected}",
                    set.total()
                )));
            }
            Ok(())
        }
        Command::Periodic { common, n, map } => {
            let mut r = Run::new("periodic", &common);
            let p = r.params()?;
            let f = map_for(map, &p);
            let set = match (map, p.k) {
                (Which::Base, 2) => periodic_points_p1_oracle(&f, n)?,
                (Which::Hat, _) => return Err(Failure::Usage("use base or flambda".into())),
                _ => periodic_points(&f, n, &PeriodicOptions { seed: common.seed, ..Default::default() })?,
            };
            r.size("n", n);
            r.size("count", set.len());
            r.size("expected", set.expected);
            r.size("max_residual", set.max_residual());
            eprintln!("{} points, expected {:?}, max residual {:.3e}", set.len(), set.expected, set.max_residual());
            r.emit_cloud(&set.to_cloud()?)?;
            r.finish()?;
            if !set.is_complete() {
                return Err(Failure::Check(format!("found {} of {:?} periodic points", set.len(), set.expected)));
            }
            Ok(())
        }
        Command::Lyapunov { common, map, orbits, length } => {
            let mut r = Run::new("lyapunov", &common);
            let p = r.params()?;
            let rep = match map {
                Which::Hat => lyapunov_hat(&sample_histories(p.k, 10, orbits, common.seed), length)?,
                _ => {
                    let starts = cloud_for(map, &p, orbits, common.seed);
                    lyapunov_exponents(&map_for(map, &p), starts.points(), length, &LyapunovOptions::default())?
                }
            };
            r.size("orbits", orbits);
            r.size("length", length);
            r.emit_json(&json!({
                "map": map,
                "exponents": rep.exponents,
                "standard_errors": rep.standard_errors,
            }))?;
            r.finish()
        }
        Command::Entropy { common, method, map, n, eps, samples } => {
            let mut r = Run::new("entropy", &common);
            let p = r.params()?;
            r.size("n", n);
            let out = match method {
                EntropyMethod::Periodic => {
                    if p.k != 2 {
                        return Err(Failure::Usage(
                            "periodic growth uses the exact count oracle on P^1 (k = 2)".into(),
                        ));
                    }
                    let base = MapKind::Base { k: 2 };
                    let counts: Vec<(usize, usize)> = (1..=n)
                        .map(|m| periodic_points_p1_oracle(&base, m).map(|s| (m, s.len())))
                        .collect::<pkattract::Result<_>>()?;
                    json!({ "method": method, "counts": counts, "estimate": entropy_from_periodic_growth(&counts)? })
                }
                EntropyMethod::Spanning => {
                    r.size("samples", samples);
                    let ns: Vec<usize> = (1..=n).collect();
                    let rep = match map {
                        Which::Hat => topological_entropy_estimate(
                            &HatSpace,
                            &sample_histories(p.k, n + 4, samples, common.seed),
                            &ns,
                            &[eps],
                        )?,
                        _ => {
                            let cloud = cloud_for(map, &p, samples, common.seed);
                            topological_entropy_estimate(&map_for(map, &p), cloud.points(), &ns, &[eps])?
                        }
                    };
                    json!({ "method": method, "map": map, "counts": rep.counts[0], "estimate": rep.estimate() })
                }
                EntropyMethod::BrinKatok => {
                    r.size("samples", samples);
                    let centers = (samples / 100).clamp(1, 1000);
                    let rep = match map {
                        Which::Hat => {
                            brin_katok_hat(&sample_histories(p.k, 16, samples, common.seed), n, eps, centers)?
                        }
                        _ => brin_katok_entropy(
                            &cloud_for(map, &p, samples, common.seed),
                            &map_for(map, &p),
                            n,
                            eps,
                            centers,
                        )?,
                    };
                    json!({
                        "method": method,
                        "map": map,
                        "estimate": rep.differenced,
                        "raw": rep.raw,
                        "log_mass_profile": rep.log_mass_profile,
                        "centers_used": rep.centers_used,
                    })
                }
            };
            r.emit_json(&out)?;
            r.finish()
        }
        Command::Mixing { common, samples, n } => {
            let mut r = Run::new("mixing", &common);
            let p = r.params()?;
            let f = MapKind::FLambda(p);
            let cloud = sample_mu_lambda(&p, 40, samples, common.seed);
            let zero = C64::new(0.0, 0.0);
            let mut c0 = vec![zero; p.k];
            c0[0] = C64::new(0.6, 0.2);
            let mut c1 = vec![zero; p.k];
            c1[0] = C64::new(0.5, -0.3);
            let (phi, psi) = (Observable::bump(0, c0), Observable::bump(1, c1));
            let mut rows = Vec::new();
            for lag in 0..=n {
                let c = correlation(&cloud, &f, &phi, &psi, lag)?;
                rows.push(json!({ "n": lag, "value": c.value, "standard_error": c.standard_error }));
            }
            let probe = sensitivity_probe(&f, &cloud.points()[..cloud.len().min(2000)], 0.1, 50, common.seed)?;
            r.size("samples", samples);
            r.emit_json(&json!({ "correlations": rows, "separation_fraction": probe.fraction }))?;
            r.finish()
        }
        Command::Verify { common, trials } => {
            let mut r = Run::new("verify", &common);
            let p = r.params()?;
            let precision = precision_from_env()?;
            let mut reports = vec![
                check_fixed_line(p.lambda, p.rho, p.k, precision)?,
                check_preimage_escape(p.lambda, p.rho, p.k)?,
                check_hyperbolic_eigenvalues(p.lambda, p.k)?,
            ];
            for set in [InvariantSet::Pi, InvariantSet::Line, InvariantSet::Whole] {
                reports.push(topological_degree_check(&p, set, trials, common.seed)?);
            }
            let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.lemma_id.clone()).collect();
            r.size("trials", trials);
            r.emit_json(&serde_json::to_value(&reports).expect("serializable"))?;
            r.finish()?;
            if !failed.is_empty() {
                return Err(Failure::Check(format!("failed: {}", failed.join(", "))));
            }
            Ok(())
        }
        Command::Render {
            common,
            input,
            samples,
            counts,
            chart,
            x_coord,
            y_coord,
            x_min,
            x_max,
            y_min,
            y_max,
            width,
            height,
        } => {
            let mut r = Run::new("render", &common);
            let cloud = match &input {
                Some(path) => load_cloud(path)?,
                None => {
                    let p = r.params()?;
                    r.size("samples", samples);
                    sample_mu_lambda(&p, 40, samples, common.seed)
                }
            };
            let spec = HistogramSpec {
                chart,
                x: Axis { coord: x_coord, part: Part::Re, min: x_min, max: x_max },
                y: Axis { coord: y_coord, part: Part::Re, min: y_min, max: y_max },
                width,
                height,
            };
            let hist = histogram(&cloud, &spec).map_err(|e| Failure::Usage(e.to_string()))?;
            eprintln!("{} in window, {} outside", hist.inside(), hist.outside);
            if hist.empty_window {
                eprintln!("warning: more than 99% of the samples are outside the window");
            }
            r.size("inside", hist.inside());
            r.size("outside", hist.outside);
            r.emit(|w| write_pgm(&hist, w))?;
            let counts_path =
                counts.or_else(|| common.out.as_ref().map(|o| PathBuf::from(format!("{}.counts.csv", o.display()))));
            if let Some(path) = counts_path {
                let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
                write_counts_csv(&hist, &mut f)?;
                f.flush()?;
                r.artifacts.push(path);
            }
            r.finish()
        }
    }
}

fn workers(cmd: &Command) -> usize {
    match cmd {
        Command::Iterate { common, .. }
        | Command::Attractor { common, .. }
        | Command::Green { common, .. }
        | Command::Preimages { common, .. }
        | Command::Periodic { common, .. }
        | Command::Lyapunov { common, .. }
        | Command::Entropy { common, .. }
        | Command::Mixing { common, .. }
        | Command::Verify { common, .. }
        | Command::Render { common, .. } => common.workers,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let n = workers(&cli.command);
    match with_workers(n, move || run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            eprintln!("parameters must satisfy k >= 2 and 0 < 2|lambda| < rho < sqrt|lambda| with |lambda| < 1/4");
            ExitCode::from(2)
        }
    }
}
