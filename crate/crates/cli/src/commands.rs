use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use zeno_tomo::decision::{
    binomial_error, binomial_threshold, required_particles, trinomial_line, Hypothesis,
    MlClassifier,
};
use zeno_tomo::estimation::CrlbReport;
use zeno_tomo::interferometer::{
    effective_transmission, zeno_probabilities, zeno_probabilities_asymptotic, ApparatusConfig,
};
use zeno_tomo::pgm::{read_pgm, write_pgm, Graymap};
use zeno_tomo::simulator::{
    irradiation_ratio_curve, particles_for_absorbed, reconstruct, Setup, ZenoLaw,
};

use crate::format::{number, optional, CsvWriter};
use crate::model::{
    build_model, classify_pixels, default_levels, default_sample, parse_levels, render, to_toml,
};
use crate::{CrlbArgs, ProbsArgs, RatioArgs, RulesArgs, SampleArgs, SetupKind, SimulateArgs};

/// Lattice enumeration of the two-port error is quadratic in `N`.
const MAX_PARTICLES_FOR_LATTICE_ERROR: u64 = 2000;

const DEFAULT_ABSORBED: [f64; 4] = [1.7, 2.3, 4.0, 13.0];

pub fn probs(args: &ProbsArgs, out: &mut dyn Write, _diag: &mut dyn Write) -> Result<usize> {
    let mut configs = Vec::new();
    for &loops in &args.loops {
        for &tau in &args.tau {
            configs.push(
                ApparatusConfig::new(loops, tau)
                    .with_context(|| format!("L={loops}, tau={tau}"))?,
            );
        }
    }
    let mut csv = CsvWriter::new(
        out,
        &[
            "L", "tau", "p_z", "p_o", "p_a", "tau_eff", "regime", "p_z_asym", "p_o_asym",
            "p_a_asym",
        ],
    )?;
    for cfg in configs {
        let exact = zeno_probabilities(&cfg)?;
        let asym = zeno_probabilities_asymptotic(&cfg).ok();
        csv.row(&[
            cfg.loops().to_string(),
            number(cfg.tau()),
            number(exact.p_z),
            number(exact.p_o),
            number(exact.p_a),
            number(effective_transmission(&cfg)?),
            if cfg.in_zeno_regime() {
                "zeno"
            } else {
                "above_threshold"
            }
            .to_string(),
            optional(asym.map(|p| p.p_z)),
            optional(asym.map(|p| p.p_o)),
            optional(asym.map(|p| p.p_a)),
        ])?;
    }
    Ok(0)
}

fn default_alpha_grid() -> Vec<f64> {
    (1..=97).map(|i| f64::from(i) / 100.0).collect()
}

pub fn ratio(args: &RatioArgs, out: &mut dyn Write, diag: &mut dyn Write) -> Result<usize> {
    let grid = if args.alpha.is_empty() {
        default_alpha_grid()
    } else {
        args.alpha.clone()
    };
    let law = if args.asymptotic {
        ZenoLaw::Asymptotic
    } else {
        ZenoLaw::Exact
    };
    let mut csv = CsvWriter::new(
        out,
        &[
            "tau",
            "alpha",
            "ratio",
            "N_zeno",
            "N_standard",
            "Na_zeno",
            "Na_standard",
        ],
    )?;
    let mut failures = 0;
    for &tau in &args.tau {
        let curve =
            match irradiation_ratio_curve(tau, args.dtau, args.loops, args.target_pe, &grid, law) {
                Ok(curve) => curve,
                Err(e) => {
                    writeln!(diag, "tau={tau}: {e}")?;
                    failures += grid.len();
                    continue;
                }
            };
        for (&alpha, point) in grid.iter().zip(curve) {
            match point {
                Ok(p) => csv.row(&[
                    number(tau),
                    number(alpha),
                    number(p.ratio),
                    p.particles_zeno.to_string(),
                    p.particles_standard.to_string(),
                    number(p.absorbed_zeno),
                    number(p.absorbed_standard),
                ])?,
                Err(e) => {
                    writeln!(diag, "tau={tau}, alpha={alpha}: {e}")?;
                    failures += 1;
                }
            }
        }
    }
    Ok(failures)
}

pub fn crlb(args: &CrlbArgs, out: &mut dyn Write, diag: &mut dyn Write) -> Result<usize> {
    for &tau in &args.tau {
        ensure!(
            tau > 0.0 && tau < 1.0,
            "tau = {tau} must lie strictly between 0 and 1"
        );
    }
    ensure!(args.particles > 0, "particle count must be positive");
    let mut csv = CsvWriter::new(
        out,
        &[
            "tau",
            "N",
            "L",
            "var_standard",
            "var_zeno",
            "Na_standard",
            "Na_zeno_asym",
            "Na_zeno_exact",
            "bound_per_absorbed",
            "residual_standard",
            "residual_zeno_asym",
            "residual_zeno_exact",
        ],
    )?;
    let mut failures = 0;
    for &loops in &args.loops {
        for &tau in &args.tau {
            match CrlbReport::new(tau, args.particles, loops) {
                Ok(r) => csv.row(&[
                    number(tau),
                    r.n_particles.to_string(),
                    r.loops.to_string(),
                    number(r.variance_bound_standard),
                    number(r.variance_bound_zeno),
                    number(r.n_absorbed_standard),
                    number(r.n_absorbed_zeno),
                    number(r.n_absorbed_zeno_exact),
                    number(r.bound_per_absorbed),
                    number(r.residual_standard()),
                    number(r.residual_zeno(false)),
                    number(r.residual_zeno(true)),
                ])?,
                Err(e) => {
                    writeln!(diag, "tau={tau}, L={loops}: {e}")?;
                    failures += 1;
                }
            }
        }
    }
    Ok(failures)
}

pub fn rules(args: &RulesArgs, out: &mut dyn Write, diag: &mut dyn Write) -> Result<usize> {
    let [tau1, tau2] = args.tau[..] else {
        bail!("--tau takes exactly two values, got {}", args.tau.len());
    };
    ensure!(tau1 < tau2, "--tau values must be increasing");
    let alpha = args.alpha;
    let mut setups = vec![Setup::Standard];
    setups.extend(args.loops.iter().map(|&loops| Setup::Zeno { loops }));

    let mut csv = CsvWriter::new(
        out,
        &[
            "setup",
            "L",
            "N",
            "tau1",
            "tau2",
            "alpha",
            "p_a1",
            "p_a2",
            "level_raw",
            "level",
            "low_absorption_tau",
            "pe_binomial",
            "slope_a",
            "intercept_b",
            "tau1_side",
            "pe_trinomial",
        ],
    )?;
    let mut failures = 0;
    for setup in setups {
        let row = (|| -> Result<Vec<String>> {
            let p1 = setup.channel_probabilities(tau1)?;
            let p2 = setup.channel_probabilities(tau2)?;
            let n = match (args.particles, args.target_pe) {
                (Some(n), _) => n,
                (None, Some(target)) => required_particles(p1.p_a, p2.p_a, alpha, target)?,
                (None, None) => 100,
            };
            // The binomial rule puts the less absorbing level first.
            let swap = p1.p_a > p2.p_a;
            let (lo, hi, a) = if swap {
                (p2.p_a, p1.p_a, 1.0 - alpha)
            } else {
                (p1.p_a, p2.p_a, alpha)
            };
            let rule = binomial_threshold(lo, hi, a, n)?;
            let pe_binomial = binomial_error(lo, hi, a, n, &rule)?;

            let mut line_fields = vec![String::new(); 3];
            let mut pe_trinomial = None;
            if let Setup::Zeno { .. } = setup {
                if let Ok(line) = trinomial_line(&p1, &p2, alpha, n) {
                    let (wz, wo) = line.witness;
                    let above = line.offset(wz as f64, wo as f64) > 0.0;
                    let tau1_above = above == (line.witness_decision == Hypothesis::H1);
                    line_fields = vec![
                        number(line.slope_a),
                        number(line.intercept_b),
                        if tau1_above { "above" } else { "below" }.to_string(),
                    ];
                }
                if n <= MAX_PARTICLES_FOR_LATTICE_ERROR {
                    let clf = MlClassifier::new(&[alpha, 1.0 - alpha], &[p1, p2], n)?;
                    pe_trinomial = Some(clf.expected_error(&[p1, p2]));
                }
            }
            let mut fields = vec![
                setup.label(),
                setup.loops().map(|l| l.to_string()).unwrap_or_default(),
                n.to_string(),
                number(tau1),
                number(tau2),
                number(alpha),
                number(p1.p_a),
                number(p2.p_a),
                number(rule.threshold_raw),
                rule.threshold.to_string(),
                number(if swap { tau2 } else { tau1 }),
                number(pe_binomial),
            ];
            fields.extend(line_fields);
            fields.push(optional(pe_trinomial));
            Ok(fields)
        })();
        match row {
            Ok(fields) => csv.row(&fields)?,
            Err(e) => {
                writeln!(diag, "{}: {e:#}", setup.label())?;
                failures += 1;
            }
        }
    }
    Ok(failures)
}

enum Budget {
    Particles(u64),
    Absorbed(f64),
}

impl Budget {
    fn tag(&self) -> String {
        match self {
            Budget::Particles(n) => format!("N{n}"),
            Budget::Absorbed(a) => format!("Na{a}"),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write, diag: &mut dyn Write) -> Result<usize> {
    let (levels, truth) = match &args.input {
        Some(input) => {
            let model_path = args.model.as_ref().context("--input needs --model")?;
            let text = fs::read_to_string(model_path)
                .with_context(|| format!("cannot read {}", model_path.display()))?;
            let levels = parse_levels(&text)?;
            let bytes =
                fs::read(input).with_context(|| format!("cannot read {}", input.display()))?;
            let image =
                read_pgm(&bytes).with_context(|| format!("cannot decode {}", input.display()))?;
            let truth = classify_pixels(&levels, &image)?;
            (levels, truth)
        }
        None => {
            let levels = match &args.model {
                Some(path) => parse_levels(
                    &fs::read_to_string(path)
                        .with_context(|| format!("cannot read {}", path.display()))?,
                )?,
                None => default_levels(),
            };
            let truth = default_sample(&levels, 100, 100)?;
            (levels, truth)
        }
    };
    let sample = build_model(levels, &truth, args.measured_alpha)?;

    let budgets: Vec<Budget> = if !args.particles.is_empty() {
        args.particles
            .iter()
            .map(|&n| Budget::Particles(n))
            .collect()
    } else if !args.absorbed.is_empty() {
        args.absorbed.iter().map(|&a| Budget::Absorbed(a)).collect()
    } else {
        DEFAULT_ABSORBED
            .iter()
            .map(|&a| Budget::Absorbed(a))
            .collect()
    };
    let mut setups = Vec::new();
    for kind in &args.setup {
        match kind {
            SetupKind::Standard => setups.push(Setup::Standard),
            SetupKind::Zeno => setups.extend(args.loops.iter().map(|&loops| Setup::Zeno { loops })),
        }
    }
    fs::create_dir_all(&args.outdir)
        .with_context(|| format!("cannot create {}", args.outdir.display()))?;

    let mut report = Vec::new();
    let mut failures = 0;
    {
        let mut csv = CsvWriter::new(
            &mut report,
            &[
                "setup",
                "L",
                "budget",
                "Na_target",
                "N",
                "pixels",
                "error_count",
                "mean_absorbed_per_pixel",
                "expected_absorbed_per_pixel",
                "total_particles",
                "particles_per_absorbed",
                "seed",
                "reconstruction",
                "mask",
            ],
        )?;
        for &setup in &setups {
            for budget in &budgets {
                let n = match *budget {
                    Budget::Particles(n) => Ok(n),
                    Budget::Absorbed(a) => particles_for_absorbed(&sample.model, setup, a),
                };
                let result =
                    n.and_then(|n| reconstruct(&truth, &sample.model, setup, n, args.seed));
                let r = match result {
                    Ok(r) => r,
                    Err(e) => {
                        writeln!(diag, "{} {}: {e}", setup.label(), budget.tag())?;
                        failures += 1;
                        continue;
                    }
                };
                let stem = format!("{}_{}", setup.label(), budget.tag());
                let recon_name = format!("{stem}_recon.pgm");
                let mask_name = format!("{stem}_mask.pgm");
                write_file(
                    &args.outdir.join(&recon_name),
                    &write_pgm(&render(&sample.levels, &r.reconstructed)?),
                )?;
                let mask = Graymap::new(
                    truth.width,
                    truth.height,
                    255,
                    r.misinterpreted
                        .iter()
                        .map(|&m| if m { 0 } else { 255 })
                        .collect(),
                )?;
                write_file(&args.outdir.join(&mask_name), &write_pgm(&mask))?;
                let (budget_kind, na_target) = match *budget {
                    Budget::Particles(_) => ("particles", None),
                    Budget::Absorbed(a) => ("absorbed", Some(a)),
                };
                csv.row(&[
                    setup.label(),
                    setup.loops().map(|l| l.to_string()).unwrap_or_default(),
                    budget_kind.to_string(),
                    optional(na_target),
                    r.n_particles.to_string(),
                    truth.len().to_string(),
                    r.error_count.to_string(),
                    number(r.mean_absorbed_per_pixel),
                    number(r.expected_absorbed_per_pixel),
                    r.total_particles.to_string(),
                    number(r.n_particles as f64 / r.expected_absorbed_per_pixel),
                    args.seed.to_string(),
                    recon_name,
                    mask_name,
                ])?;
            }
        }
    }
    write_file(&args.outdir.join("report.csv"), &report)?;
    out.write_all(&report)?;
    Ok(failures)
}

pub fn sample(args: &SampleArgs, out: &mut dyn Write) -> Result<usize> {
    let levels = default_levels();
    let truth = default_sample(&levels, args.width, args.height)?;
    fs::create_dir_all(&args.outdir)
        .with_context(|| format!("cannot create {}", args.outdir.display()))?;
    let image_path = args.outdir.join("sample.pgm");
    let model_path = args.outdir.join("model.toml");
    write_file(&image_path, &write_pgm(&render(&levels, &truth)?))?;
    write_file(&model_path, to_toml(&levels)?.as_bytes())?;
    writeln!(out, "{}", image_path.display())?;
    writeln!(out, "{}", model_path.display())?;
    Ok(0)
}
