use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use spectra_core::atomic::{
    c_function_checks, is_spectral_pair, recover_spectrum_from_group, search_spectrum, verify_group_axioms, FiniteSet,
    LocalTranslationGroup, SearchOptions, RECOVERY_SEED,
};
use spectra_core::bernoulli::{
    certify_zero, completeness_probe, gamma_integers, gamma_orthogonality, mu_hat_bernoulli, zero_inclusion_witness,
    BernoulliParams, RationalZeroCertificate,
};
use spectra_core::bohr::{bohr_mean_t, intertwining_check, isometry_defect, TrigPolynomial};
use spectra_core::criteria::{classify, default_grid, Classification, HProfile};
use spectra_core::numeric::parse_rational;
use spectra_core::overlap::{default_depth, non_spectrality_certificate, pieces_geometry};
use spectra_core::{io, AffineIfs, MeasureModel, Scalar};

use crate::report::{fmt, sha256_hex, ReportEnvelope, Sink};
use crate::{BernoulliCommand, BohrCommand, Cli, CliError, Command, GridSpec, MeasureAndLambda};

const GRID_PER_AXIS: usize = 512;
const CACHE_ENV: &str = "SPECTRA_CACHE_DIR";
/// Certificates listed in a Γ report; the rest are only counted.
const LISTED_CERTIFICATES: usize = 16;

/// Runs one subcommand. `Ok(true)` means the checked property was falsified.
pub fn run(cli: Cli) -> Result<bool, CliError> {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", cli.tol)));
    }
    match cli.threads {
        Some(0) => spectra_core::par::sequential(|| dispatch(&cli)),
        Some(n) => {
            configure_threads(n)?;
            dispatch(&cli)
        }
        None => dispatch(&cli),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(n: usize) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("--threads: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_: usize) -> Result<(), CliError> {
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<bool, CliError> {
    let start = Instant::now();
    let sink = Sink::new(cli.out.clone())?;
    let mut env = match &cli.command {
        Command::MuHat { measure, t, grid } => mu_hat(cli, &sink, measure, t, grid.as_ref())?,
        Command::Check(args) => classify_cmd(cli, &sink, "check", args, true)?,
        Command::Classify(args) => classify_cmd(cli, &sink, "classify", args, false)?,
        Command::SearchSpectrum {
            points,
            max_denominator,
            lo,
            hi,
            max_nodes,
            time_limit,
        } => {
            let mut env = ReportEnvelope::new("search-spectrum");
            let a = io::parse_finite_set(&env.read_input(points)?)?;
            let mut opts = SearchOptions::new(*max_denominator, parse_rational(lo)?, parse_rational(hi)?);
            if let Some(n) = max_nodes {
                opts.max_nodes = *n;
            }
            opts.time_limit = Some(Duration::from_secs(*time_limit));
            env.param("max_denominator", max_denominator);
            env.param("lo", lo);
            env.param("hi", hi);
            env.param("max_nodes", opts.max_nodes);
            env.param("time_limit_s", time_limit);
            let result = search_spectrum(&a, &opts)?;
            env.verdict = if result.spectrum.is_some() {
                "spectrum_found"
            } else {
                "no_spectrum_in_range"
            }
            .into();
            env.evidence(&result)?;
            env
        }
        Command::CheckPair(pair) => {
            let mut env = ReportEnvelope::new("check-pair");
            let (a, lambda) = read_pair(&mut env, &pair.points, &pair.lambda)?;
            env.param("tol", cli.tol);
            let cert = is_spectral_pair(&a, &lambda, cli.tol)?;
            env.verdict = if cert.is_pair {
                "spectral_pair"
            } else {
                "not_a_spectral_pair"
            }
            .into();
            env.falsified = !cert.is_pair;
            env.evidence(&cert)?;
            env
        }
        Command::GroupVerify { pair, samples, epsilon } => {
            group_verify(cli, &pair.points, &pair.lambda, *samples, *epsilon)?
        }
        Command::Overlap {
            measure,
            samples,
            depth,
        } => {
            let mut env = ReportEnvelope::new("overlap");
            let ifs = io::parse_ifs(&env.read_input(measure)?)?;
            env.param("samples", samples);
            env.param("depth", depth);
            env.seeds.insert("monte_carlo".into(), cli.seed);
            let report = non_spectrality_certificate(&ifs, *samples, cli.seed, *depth)?;
            env.verdict = report.statement.clone();
            env.evidence(&report)?;
            env
        }
        Command::Pieces { measure, depth } => {
            let mut env = ReportEnvelope::new("pieces");
            let ifs = io::parse_ifs(&env.read_input(measure)?)?;
            let depth = depth.unwrap_or_else(|| default_depth(ifs.dim()));
            env.param("depth", depth);
            let geometry = pieces_geometry(&ifs, depth)?;
            env.verdict = if geometry.all_disjoint() {
                "pieces_disjoint"
            } else {
                "pieces_intersect"
            }
            .into();
            env.evidence(&geometry)?;
            env
        }
        Command::Bernoulli(cmd) => bernoulli(cli, &sink, cmd)?,
        Command::Bohr(cmd) => bohr(cli, &sink, cmd)?,
        Command::Sweep {
            lambdas,
            samples,
            depth,
        } => sweep(cli, &sink, lambdas, *samples, *depth)?,
    };
    if cli.timing {
        env.wall_clock_ms = Some(start.elapsed().as_millis());
    }
    sink.finish(&env)?;
    Ok(env.falsified)
}

fn read_measure(env: &mut ReportEnvelope, path: &Path) -> Result<MeasureModel, CliError> {
    Ok(io::parse_measure(&env.read_input(path)?)?)
}

fn read_frequencies(env: &mut ReportEnvelope, path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    Ok(io::parse_frequencies(&env.read_input(path)?)?.expand()?)
}

fn read_pair(env: &mut ReportEnvelope, points: &Path, lambda: &Path) -> Result<(FiniteSet, FiniteSet), CliError> {
    let a = io::parse_finite_set(&env.read_input(points)?)?;
    let l = io::parse_finite_set(&env.read_input(lambda)?)?;
    Ok((a, l))
}

fn parse_point(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|x| x.trim().parse::<Scalar>().map(|s| s.value()))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("frequency `{text}`: {e}")))
}

fn axis_headers(dim: usize) -> Vec<String> {
    if dim == 1 {
        vec!["t".into()]
    } else {
        (1..=dim).map(|i| format!("t{i}")).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
struct TransformRow {
    t: Vec<f64>,
    re: f64,
    im: f64,
    abs: f64,
    err: f64,
}

fn encode_rows(rows: &[TransformRow]) -> Vec<Vec<u64>> {
    rows.iter()
        .map(|r| {
            r.t.iter()
                .chain([&r.re, &r.im, &r.abs, &r.err])
                .map(|x| x.to_bits())
                .collect()
        })
        .collect()
}

fn decode_rows(bits: &[Vec<u64>], dim: usize, len: usize) -> Option<Vec<TransformRow>> {
    if bits.len() != len || bits.iter().any(|b| b.len() != dim + 4) {
        return None;
    }
    let rows = bits.iter().map(|b| {
        let x: Vec<f64> = b.iter().map(|&u| f64::from_bits(u)).collect();
        TransformRow {
            t: x[..dim].to_vec(),
            re: x[dim],
            im: x[dim + 1],
            abs: x[dim + 2],
            err: x[dim + 3],
        }
    });
    Some(rows.collect())
}

fn mu_hat(
    cli: &Cli,
    sink: &Sink,
    measure: &Path,
    t: &[String],
    grid: Option<&GridSpec>,
) -> Result<ReportEnvelope, CliError> {
    let mut env = ReportEnvelope::new("mu-hat");
    let text = env.read_input(measure)?;
    let m = io::parse_measure(&text)?;
    let mut points: Vec<Vec<f64>> = t.iter().map(|s| parse_point(s)).collect::<Result<_, _>>()?;
    if let Some(g) = grid {
        if m.dim() != 1 {
            return Err(CliError::Usage("--grid needs a one-dimensional measure".into()));
        }
        points.extend(g.points().into_iter().map(|x| vec![x]));
        env.param("grid", format!("{}:{}:{}", g.start, g.stop, g.count));
    }
    if points.is_empty() {
        return Err(CliError::Usage("give --t or --grid".into()));
    }
    env.param("tol", cli.tol);

    let cache = std::env::var_os(CACHE_ENV).map(PathBuf::from).map(|dir| {
        let mut key = text.clone().into_bytes();
        key.extend(cli.tol.to_le_bytes());
        for p in &points {
            key.extend(p.iter().flat_map(|x| x.to_le_bytes()));
            key.push(b';');
        }
        dir.join(format!("mu_hat-{}.json", sha256_hex(&key)))
    });
    // cached as bit patterns so values come back exactly
    let cached: Option<Vec<Vec<u64>>> = cache
        .as_ref()
        .and_then(|p| fs::read(p).ok())
        .and_then(|b| serde_json::from_slice(&b).ok());
    let rows = match cached.and_then(|c| decode_rows(&c, m.dim(), points.len())) {
        Some(rows) => rows,
        None => {
            let rows = points
                .iter()
                .map(|p| {
                    let z = m.mu_hat(p, cli.tol)?;
                    Ok(TransformRow {
                        t: p.clone(),
                        re: z.value.re,
                        im: z.value.im,
                        abs: z.norm(),
                        err: z.err,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            if let Some(p) = &cache {
                if let Some(dir) = p.parent() {
                    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
                }
                fs::write(p, serde_json::to_vec(&encode_rows(&rows))?).map_err(|e| CliError::Io(p.clone(), e))?;
            }
            rows
        }
    };

    let mut header = axis_headers(m.dim());
    header.extend(["re", "im", "abs", "err"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.t.iter().copied().chain([r.re, r.im, r.abs, r.err]).map(fmt).collect())
        .collect();
    let comments = vec![
        format!("Fourier transform of a {} measure", m.kind()),
        "t: frequency, re/im: transform value, abs: modulus, err: absolute error bound".into(),
    ];
    sink.csv(&mut env, "mu_hat.csv", &comments, &header, &csv_rows)?;
    env.verdict = "evaluated".into();
    env.evidence(json!({ "dim": m.dim(), "values": rows }))?;
    Ok(env)
}

fn profile_csv(sink: &Sink, env: &mut ReportEnvelope, profile: Option<&HProfile>, dim: usize) -> Result<(), CliError> {
    let mut header = axis_headers(dim);
    header.extend(["h", "err"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = profile
        .map(|p| {
            p.grid
                .iter()
                .zip(p.values.iter().zip(&p.errors))
                .map(|(t, (h, e))| t.iter().copied().chain([*h, *e]).map(fmt).collect())
                .collect()
        })
        .unwrap_or_default();
    let comments = vec![
        "h(t) = sum over the frequency set of |mu_hat(t + lambda)|^2".into(),
        "t: grid point, h: value, err: absolute error bound on h".into(),
    ];
    sink.csv(env, "h_profile.csv", &comments, &header, &rows)
}

fn classify_cmd(
    cli: &Cli,
    sink: &Sink,
    name: &str,
    args: &MeasureAndLambda,
    assert_orthogonal: bool,
) -> Result<ReportEnvelope, CliError> {
    let mut env = ReportEnvelope::new(name);
    let m = read_measure(&mut env, &args.measure)?;
    let freqs = read_frequencies(&mut env, &args.lambda)?;
    let grid = match &args.grid {
        Some(g) if m.dim() == 1 => {
            env.param("grid", format!("{}:{}:{}", g.start, g.stop, g.count));
            g.points().into_iter().map(|x| vec![x]).collect()
        }
        Some(_) => return Err(CliError::Usage("--grid needs a one-dimensional measure".into())),
        None => {
            env.param("grid", format!("default, {GRID_PER_AXIS} per axis"));
            default_grid(&freqs, GRID_PER_AXIS)
        }
    };
    env.param("tol", cli.tol);
    env.param("frequencies", freqs.len());
    let report = classify(&m, &freqs, &grid, cli.tol)?;
    profile_csv(sink, &mut env, report.profile.as_ref(), m.dim())?;
    env.verdict = serde_json::to_value(report.verdict)?
        .as_str()
        .unwrap_or_default()
        .to_string();
    env.falsified = assert_orthogonal && report.verdict == Classification::NotOrthogonal;
    env.evidence(&report)?;
    Ok(env)
}

fn group_verify(
    cli: &Cli,
    points: &Path,
    lambda: &Path,
    samples: usize,
    epsilon: f64,
) -> Result<ReportEnvelope, CliError> {
    let mut env = ReportEnvelope::new("group-verify");
    let (a, l) = read_pair(&mut env, points, lambda)?;
    env.param("samples", samples);
    env.param("epsilon", epsilon);
    env.param("tol", cli.tol);
    env.seeds.insert("samples".into(), cli.seed);
    env.seeds.insert("recovery".into(), RECOVERY_SEED);
    let cert = is_spectral_pair(&a, &l, cli.tol)?;
    if !cert.is_pair {
        env.verdict = "not_a_spectral_pair".into();
        env.falsified = true;
        env.evidence(json!({ "pair": cert }))?;
        return Ok(env);
    }
    let group = LocalTranslationGroup::new(&a, &l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let dim = group.dim();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..samples)
        .map(|_| {
            let s = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            let t = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            (s, t)
        })
        .collect();
    let axioms = verify_group_axioms(&group, &pairs, cli.tol)?;
    let c = c_function_checks(&group, &pairs, cli.tol)?;
    let recovered = recover_spectrum_from_group(&group, epsilon, None)?;
    let ok = axioms.passed && c.passed && recovered.certificate.is_pair;
    env.verdict = if ok { "group_verified" } else { "group_check_failed" }.into();
    env.falsified = !ok;
    env.evidence(json!({ "pair": cert, "axioms": axioms, "c_function": c, "recovered": recovered }))?;
    Ok(env)
}

fn parse_params(text: &str) -> Result<BernoulliParams, CliError> {
    Ok(text.parse::<BernoulliParams>()?)
}

#[derive(Serialize)]
struct ZeroEvidence {
    transform: spectra_core::BoundedComplex,
    certificate: Option<RationalZeroCertificate>,
    inclusion: Option<RationalZeroCertificate>,
    inclusion_error: Option<String>,
}

fn bernoulli(cli: &Cli, sink: &Sink, cmd: &BernoulliCommand) -> Result<ReportEnvelope, CliError> {
    match cmd {
        BernoulliCommand::Zeros { lambda, t, inclusion } => {
            let mut env = ReportEnvelope::new("bernoulli zeros");
            let params = parse_params(lambda)?;
            let t = parse_rational(t)?;
            env.param("lambda", &params);
            env.param("t", spectra_core::numeric::format_rational(&t));
            env.param("inclusion", inclusion);
            env.param("tol", cli.tol);
            let transform = mu_hat_bernoulli(&params, &Scalar::exact(t.clone()), cli.tol)?;
            let certificate = certify_zero(&params, &t);
            let (inc, inclusion_error) = if *inclusion {
                match zero_inclusion_witness(&t) {
                    Ok(w) => (Some(w), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            } else {
                (None, None)
            };
            let ok = certificate.is_some() && (!inclusion || inc.is_some());
            env.verdict = if ok { "zero_certified" } else { "no_certificate" }.into();
            env.falsified = !ok;
            env.evidence(ZeroEvidence {
                transform,
                certificate,
                inclusion: inc,
                inclusion_error,
            })?;
            Ok(env)
        }
        BernoulliCommand::Gamma {
            lambda,
            level,
            check_orthogonality,
        } => {
            let mut env = ReportEnvelope::new("bernoulli gamma");
            let params = parse_params(lambda)?;
            env.param("lambda", &params);
            env.param("level", level);
            let gamma = gamma_integers(*level)?;
            if !check_orthogonality {
                env.verdict = "listed".into();
                env.evidence(json!({ "size": gamma.len(), "gamma": gamma }))?;
                return Ok(env);
            }
            let mut report = gamma_orthogonality(&params, *level)?;
            let total = report.certificates.len();
            report.certificates.truncate(LISTED_CERTIFICATES);
            env.verdict = if report.all_certified {
                "orthogonal_certified"
            } else {
                "orthogonality_fails"
            }
            .into();
            env.falsified = !report.all_certified;
            env.evidence(json!({ "gamma": gamma, "certificates_total": total, "report": report }))?;
            Ok(env)
        }
        BernoulliCommand::Probe { lambda, level, grid } => {
            let mut env = ReportEnvelope::new("bernoulli probe");
            let params = parse_params(lambda)?;
            env.param("lambda", &params);
            env.param("level", level);
            env.param("grid", format!("{}:{}:{}", grid.start, grid.stop, grid.count));
            env.param("tol", cli.tol);
            let profile = completeness_probe(&params, *level, &grid.points(), cli.tol)?;
            profile_csv(sink, &mut env, Some(&profile), 1)?;
            let (_, min) = profile.min().unwrap_or((0, f64::NAN));
            let (_, max) = profile.max().unwrap_or((0, f64::NAN));
            env.verdict = "probed".into();
            env.evidence(json!({
                "points": profile.len(),
                "frequencies": profile.frequencies,
                "min_h": min,
                "max_h": max,
                "max_err": profile.max_err(),
            }))?;
            Ok(env)
        }
    }
}

fn read_polynomial(env: &mut ReportEnvelope, path: &Path) -> Result<TrigPolynomial, CliError> {
    Ok(io::parse_polynomial(&env.read_input(path)?)?)
}

fn bohr(cli: &Cli, sink: &Sink, cmd: &BohrCommand) -> Result<ReportEnvelope, CliError> {
    match cmd {
        BohrCommand::Mean { poly, horizons } => {
            let mut env = ReportEnvelope::new("bohr mean");
            let f = read_polynomial(&mut env, poly)?;
            env.param("T", horizons);
            env.param("tol", cli.tol);
            let results = horizons
                .iter()
                .map(|&t| bohr_mean_t(&f, t))
                .collect::<Result<Vec<_>, _>>()?;
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|r| {
                    let gap = (r.value - r.limit).norm();
                    [r.t, r.value.re, r.value.im, r.limit.re, r.limit.im, gap, r.bound]
                        .map(fmt)
                        .to_vec()
                })
                .collect();
            let comments = vec![
                "cube mean of f over [-T, T]^n against the Bohr mean".into(),
                "gap: |mean - limit|, bound: decay bound on the gap".into(),
            ];
            let header = ["T", "re", "im", "limit_re", "limit_im", "gap", "bound"];
            sink.csv(&mut env, "bohr_mean.csv", &comments, &header, &rows)?;
            let ok = results.iter().all(|r| (r.value - r.limit).norm() <= r.bound + cli.tol);
            env.verdict = if ok { "within_bound" } else { "bound_exceeded" }.into();
            env.falsified = !ok;
            env.evidence(&results)?;
            Ok(env)
        }
        BohrCommand::Isometry { measure, lambda, poly } => {
            let mut env = ReportEnvelope::new("bohr isometry");
            let m = read_measure(&mut env, measure)?;
            let freqs = read_frequencies(&mut env, lambda)?;
            let f = read_polynomial(&mut env, poly)?;
            env.param("tol", cli.tol);
            let report = isometry_defect(&m, &freqs, &f, cli.tol)?;
            let ok = report.defect <= report.err + cli.tol;
            env.verdict = if ok { "isometric" } else { "not_isometric" }.into();
            env.falsified = !ok;
            env.evidence(&report)?;
            Ok(env)
        }
        BohrCommand::Intertwine { poly, a } => {
            let mut env = ReportEnvelope::new("bohr intertwine");
            let f = read_polynomial(&mut env, poly)?;
            let a = if a.is_empty() { vec![0.0; f.dim()] } else { a.clone() };
            env.param("a", &a);
            env.param("tol", cli.tol);
            let lambda: Vec<Vec<f64>> = f.terms().map(|(l, _)| l.to_vec()).collect();
            let residual = intertwining_check(&lambda, &f, &a)?;
            let ok = residual <= cli.tol;
            env.verdict = if ok { "intertwines" } else { "does_not_intertwine" }.into();
            env.falsified = !ok;
            env.evidence(json!({ "terms": f.len(), "residual": residual }))?;
            Ok(env)
        }
    }
}

fn sweep(
    cli: &Cli,
    sink: &Sink,
    lambdas: &GridSpec,
    samples: usize,
    depth: Option<u32>,
) -> Result<ReportEnvelope, CliError> {
    let mut env = ReportEnvelope::new("sweep");
    env.param(
        "lambdas",
        format!("{}:{}:{}", lambdas.start, lambdas.stop, lambdas.count),
    );
    env.param("samples", samples);
    env.param("depth", depth);
    env.seeds.insert("monte_carlo".into(), cli.seed);
    let mut rows = Vec::new();
    let mut evidence = Vec::new();
    for lambda in lambdas.points() {
        let ifs = AffineIfs::bernoulli_maps(lambda)?;
        let report = non_spectrality_certificate(&ifs, samples, cli.seed, depth)?;
        let pair = report
            .pairs
            .first()
            .ok_or_else(|| CliError::Usage("no digit pairs".into()))?;
        let certified = report.certifies_non_spectral();
        rows.push(vec![
            fmt(lambda),
            fmt(pair.estimate),
            fmt(pair.ci),
            fmt(pair.slack),
            fmt(pair.lower_bound()),
            certified.to_string(),
        ]);
        evidence.push(json!({
            "lambda": lambda,
            "estimate": pair.estimate,
            "ci": pair.ci,
            "slack": pair.slack,
            "depth": pair.depth,
            "certified": certified,
        }));
    }
    let comments = vec![
        "overlap of the two pieces of the Bernoulli maps x -> lambda x +- 1".into(),
        "estimate: Monte Carlo mass of the overlap, ci: 3 sigma radius, slack: cover truncation".into(),
        "lower_bound: estimate - ci - slack, certified: lower_bound > 0".into(),
    ];
    let header = ["lambda", "estimate", "ci", "slack", "lower_bound", "certified"];
    sink.csv(&mut env, "sweep.csv", &comments, &header, &rows)?;
    env.verdict = "swept".into();
    env.evidence(evidence)?;
    Ok(env)
}
