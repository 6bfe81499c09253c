//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use rabi_core::asymptotics::{predict, residual_fit, log_log_slope, r_of_n, GnMethod, PredictionRow, Source};
use rabi_core::eigensolve::{spectrum_of_j, SpectrumSlice, TruncationPolicy, MAX_DOUBLINGS, TRUNCATION_TARGET};
use rabi_core::inverse::recover_parameters;
use rabi_core::model::{ModelDescriptor, ModelSpec, RabiReduction};
use rabi_core::oscillatory::{sweep, SymbolFamily, ADAPTIVE_TOL, PERIODIC_TOL};
use rabi_core::phase::{
    decay_quantities, omega_star, psi1_recursion_check, random_state, z_bounds_check, CheckRecord, FD_STEP,
};
use rabi_core::transform::{
    build_auxiliary_default, default_half_width, gn_diagonal, read_fixture, trace_functional, write_fixture,
    AuxiliaryOperators, TestFunction, LEAKAGE_TOL,
};
use rabi_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::io::{self, f, Result};

pub struct Model {
    pub spec: ModelSpec,
    pub reduction: Option<RabiReduction>,
    pub descriptor: Value,
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path)?;
    let desc = ModelDescriptor::from_json(&text)?;
    let descriptor: Value = serde_json::from_str(&text).map_err(|e| Error::Domain(e.to_string()))?;
    let reduction = match &desc {
        ModelDescriptor::Rabi { rabi, sign } => Some(rabi_core::model::rabi_to_jacobi(rabi, *sign)?),
        ModelDescriptor::Explicit { .. } => None,
    };
    Ok(Model { spec: desc.to_spec()?, reduction, descriptor })
}

fn units(m: &Model) -> &'static str {
    if m.reduction.is_some() {
        "physical"
    } else {
        "jacobi"
    }
}

pub fn spectrum(model: &Path, n_lo: u64, n_hi: u64, policy: TruncationPolicy, tol: f64, out: &Path) -> Result<()> {
    let m = load_model(model)?;
    let s = spectrum_of_j(&m.spec, n_lo, n_hi, policy, tol)?;
    let (offset, scale) = m.reduction.as_ref().map(|r| (r.offset, r.scale)).unwrap_or((0.0, 1.0));
    let rows = s.iter().map(|(n, l)| {
        vec![
            n.to_string(),
            f(offset + scale * l),
            s.truncation_size.to_string(),
            f(scale * s.est_truncation_error),
        ]
    });
    io::write_csv(out, &["n", "lambda", "trunc_size", "trunc_err"], rows)?;
    io::write_manifest(
        out,
        "spectrum",
        json!({"model": m.descriptor, "n_lo": n_lo, "n_hi": n_hi, "trunc_policy": format!("{policy:?}")}),
        json!({"bisection": tol, "truncation_target": TRUNCATION_TARGET, "max_doublings": MAX_DOUBLINGS}),
        json!({"truncation_size": s.truncation_size, "est_truncation_error": s.est_truncation_error, "units": units(&m)}),
    )
}

pub fn compare(model: &Path, spectrum: &Path, source: Source, gn_method: GnMethod, out: &Path) -> Result<()> {
    let m = load_model(model)?;
    let raw = io::slice_from_rows(io::read_spectrum_rows(spectrum)?)?;
    // Predictions live in Jacobi units; physical input is mapped back.
    let s = match &m.reduction {
        Some(r) => SpectrumSlice::from_values(raw.n_lo, raw.lambda.iter().map(|l| r.to_jacobi(*l)).collect(), raw.labeling)?,
        None => raw,
    };
    let ns: Vec<u64> = s.iter().map(|(n, _)| n).collect();
    let three = if m.spec.period() == 2 && m.spec.gamma() == 0.5 && m.spec.offdiag().a1prime() == 0.0 {
        Source::E0
    } else {
        Source::E2
    };
    let rows: Vec<(PredictionRow, PredictionRow, Option<PredictionRow>, PredictionRow)> = ns
        .par_iter()
        .map(|&n| {
            let e = predict(&m.spec, n, three, None)?;
            let y = predict(&m.spec, n, Source::Y0, None)?;
            let g = if source == Source::Grwa {
                Some(predict(&m.spec, n, Source::Grwa, Some(gn_method))?)
            } else {
                None
            };
            let chosen = match (source, g) {
                (Source::Grwa, Some(g)) => g,
                _ => predict(&m.spec, n, source, None)?,
            };
            Ok((e, y, g, chosen))
        })
        .collect::<Result<_>>()?;
    let chosen: Vec<PredictionRow> = rows.iter().map(|r| r.3).collect();
    let fit = residual_fit(&m.spec, &s, &chosen)?;
    let csv_rows = rows.iter().map(|(e, y, g, _)| {
        let l = s.get(e.n).unwrap();
        vec![
            e.n.to_string(),
            f(l),
            f(e.prediction),
            f(y.prediction),
            g.map(|g| f(g.prediction)).unwrap_or_default(),
            f(l - e.prediction),
            f(l - y.prediction),
            f(r_of_n(&m.spec, e.n)),
        ]
    });
    io::write_csv(
        out,
        &["n", "lambda", "pred_E", "pred_Y", "pred_GRWA", "resid_E", "resid_Y", "r_n"],
        csv_rows,
    )?;
    println!("{}", serde_json::to_string(&fit)?);
    io::write_manifest(
        out,
        "compare",
        json!({"model": m.descriptor, "spectrum": spectrum.display().to_string(), "source": source, "three_term": three, "gn_method": gn_method}),
        json!({"exact": rabi_core::asymptotics::EXACT_TOL}),
        json!({"fit": fit, "units": "jacobi", "asymptotics_asserted": m.spec.asymptotics_asserted()}),
    )
}

/// Window data for `g_n`, through the fixture cache when `RABI_CACHE_DIR` is set.
struct GnWindow {
    first: i64,
    gn: Vec<f64>,
    ln: Vec<f64>,
}

impl GnWindow {
    fn from_aux(aux: &AuxiliaryOperators) -> Self {
        GnWindow { first: aux.first_index(), gn: aux.gn().to_vec(), ln: aux.ln().to_vec() }
    }

    fn at(&self, k: i64) -> Result<(f64, f64)> {
        let i = k - self.first;
        if i < 5 || i + 5 >= self.gn.len() as i64 {
            return Err(Error::Window(format!("index {k} is within 5 of the window edge")));
        }
        Ok((self.gn[i as usize], self.ln[i as usize]))
    }
}

fn cache_key(m: &Model, n: u64) -> String {
    let desc = ModelDescriptor::from_spec(&m.spec);
    let w = default_half_width(n, m.spec.gamma());
    let text = format!("{}|n={n}|w={w}", serde_json::to_string(&desc).unwrap_or_default());
    format!("gn-{:016x}", io::fnv1a(&text))
}

fn gn_window(m: &Model, n: u64, cache: Option<&PathBuf>) -> Result<GnWindow> {
    if let Some(dir) = cache {
        let key = cache_key(m, n);
        let gp = dir.join(format!("{key}.gn.bin"));
        let lp = dir.join(format!("{key}.ln.bin"));
        if gp.exists() && lp.exists() {
            let (gn, meta) = read_fixture(&gp)?;
            let (ln, _) = read_fixture(&lp)?;
            let first = meta.get("first_index").and_then(Value::as_i64).unwrap_or(0);
            if gn.len() == ln.len() && !gn.is_empty() {
                return Ok(GnWindow { first, gn, ln });
            }
        }
        let aux = build_auxiliary_default(&m.spec, n)?;
        let w = GnWindow::from_aux(&aux);
        let meta = json!({"n": n, "first_index": w.first, "half_width": aux.half_width()});
        write_fixture(&gp, &w.gn, &meta)?;
        write_fixture(&lp, &w.ln, &meta)?;
        return Ok(w);
    }
    Ok(GnWindow::from_aux(&build_auxiliary_default(&m.spec, n)?))
}

pub fn gn(model: &Path, ns: &[u64], method: GnMethod, k_radius: u64, out: &Path) -> Result<()> {
    let m = load_model(model)?;
    let cache = io::cache_dir()?;
    let per_n: Vec<Vec<Vec<String>>> = ns
        .par_iter()
        .map(|&n| {
            let w = gn_window(&m, n, cache.as_ref())?;
            let lo = (n as i64 - k_radius as i64).max(1);
            (lo..=n as i64 + k_radius as i64)
                .map(|k| {
                    let (g_exp, l) = w.at(k)?;
                    let g = match method {
                        GnMethod::Exp => g_exp,
                        GnMethod::Oscillatory if k == n as i64 => {
                            rabi_core::asymptotics::gn_at_anchor(&m.spec, n, GnMethod::Oscillatory)?
                        }
                        GnMethod::Oscillatory => rabi_core::oscillatory::g_frak(&m.spec, n, k)?,
                    };
                    Ok(vec![n.to_string(), k.to_string(), f(g), f(l), f(l + g)])
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    io::write_csv(out, &["n", "k", "g_n_k", "l_n_k", "ltilde_n_k"], per_n.into_iter().flatten())?;
    io::write_manifest(
        out,
        "gn",
        json!({"model": m.descriptor, "n_list": ns, "method": method, "k_radius": k_radius}),
        json!({"periodic_quadrature": PERIODIC_TOL}),
        json!({"cache": cache.map(|c| c.display().to_string()), "units": "jacobi"}),
    )
}

pub fn trace_check(model: &Path, ns: &[u64], chi: TestFunction, out: &Path) -> Result<()> {
    let m = load_model(model)?;
    let reports = ns
        .par_iter()
        .map(|&n| {
            let aux = build_auxiliary_default(&m.spec, n)?;
            // Anchor sanity: the window must contain n away from its edges.
            gn_diagonal(&aux, n as i64)?;
            trace_functional(&aux, &chi, &aux.ln_eigenvalues())
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = ns.iter().zip(&reports).map(|(n, r)| {
        vec![
            n.to_string(),
            f(r.value),
            f(r.leakage),
            serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        ]
    });
    io::write_csv(out, &["n", "value", "leakage", "status"], rows)?;
    let slope = if ns.len() >= 2 && reports.iter().all(|r| r.value != 0.0) {
        let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let vs: Vec<f64> = reports.iter().map(|r| r.value).collect();
        Some(log_log_slope(&nf, &vs))
    } else {
        None
    };
    io::write_manifest(
        out,
        "trace-check",
        json!({"model": m.descriptor, "n_list": ns, "chi": format!("{chi:?}")}),
        json!({"leakage": LEAKAGE_TOL}),
        json!({"slope": slope}),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Modulus identity, lower bound and argument derivative of `z`.
    #[value(name = "lemma63")]
    Bounds,
    /// Decay of the second-order phase corrections in `n`.
    #[value(name = "lemma82")]
    Decay,
    /// Shift recursion of `psi1`.
    Psi1,
}

/// Anchor used for `a(n)` in the recursion suite.
const PSI1_ANCHOR: u64 = 1000;

fn random_vectors(rng: &mut ChaCha8Rng, period: usize, nu_lo: usize) -> (Vec<f64>, Vec<f64>) {
    let nu = rng.gen_range(nu_lo..=6);
    let s = random_state(rng, period, nu);
    (s.omegas, s.times)
}

pub fn phase_check(model: &Path, suite: Suite, samples: usize, seed: u64, out: &Path) -> Result<()> {
    let m = load_model(model)?;
    let period = m.spec.period();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    match suite {
        Suite::Bounds => {
            for _ in 0..samples {
                let (ws, ts) = random_vectors(&mut rng, period, 2);
                let s = rabi_core::phase::z_state(&ws, &ts, period)?;
                let r = z_bounds_check(&s)?;
                let mut push = |check: &str, margin: f64| {
                    records.push(CheckRecord {
                        check: check.into(),
                        n: None,
                        omegas: ws.clone(),
                        times: ts.clone(),
                        margin,
                        pass: margin >= 0.0,
                    })
                };
                push("modulus_identity", 1e-12 - r.modulus_identity_error);
                push("lower_bound", r.lower_bound_margin + 1e-12);
                if let Some(d) = r.derivative_margin {
                    push("arg_derivative", d);
                }
            }
        }
        Suite::Psi1 => {
            for _ in 0..samples {
                let (ws, ts) = random_vectors(&mut rng, period, 1);
                let (dev, pass) = psi1_recursion_check(&ws, &ts, &m.spec, PSI1_ANCHOR, 256)?;
                let a = m.spec.a(PSI1_ANCHOR as i64);
                records.push(CheckRecord {
                    check: "psi1_recursion".into(),
                    n: Some(PSI1_ANCHOR),
                    omegas: ws,
                    times: ts,
                    margin: 1e-10 * a - dev,
                    pass,
                });
            }
        }
        Suite::Decay => {
            let count = samples.clamp(2, 16);
            let ns: Vec<u64> = (0..count).map(|j| 64u64 << j).collect();
            let lim = -m.spec.gamma() + 0.15;
            for w in omega_star(period) {
                let q = ns
                    .iter()
                    .map(|&n| decay_quantities(&m.spec, n, w))
                    .collect::<rabi_core::Result<Vec<_>>>()?;
                let series: [(&str, Vec<f64>); 3] = [
                    ("r_sup", q.iter().map(|x| x.0).collect()),
                    ("psi_ii_plus", q.iter().map(|x| x.1).collect()),
                    ("psi_ii_minus", q.iter().map(|x| x.2).collect()),
                ];
                for (name, ys) in series {
                    for (n, y) in ns.iter().zip(&ys) {
                        records.push(CheckRecord {
                            check: name.into(),
                            n: Some(*n),
                            omegas: vec![w],
                            times: vec![0.0],
                            margin: *y,
                            pass: true,
                        });
                    }
                    let vanishing = ys.iter().all(|y| *y < 1e-12);
                    let slope = if vanishing {
                        f64::NEG_INFINITY
                    } else {
                        let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
                        log_log_slope(&nf, &ys)
                    };
                    records.push(CheckRecord {
                        check: format!("{name}_slope"),
                        n: None,
                        omegas: vec![w],
                        times: vec![0.0],
                        margin: if vanishing { f64::INFINITY } else { lim - slope },
                        pass: vanishing || slope <= lim,
                    });
                }
            }
        }
    }
    let join = |v: &[f64]| v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(";");
    let failures = records.iter().filter(|r| !r.pass).count();
    let rows = records.iter().map(|r| {
        vec![
            r.check.clone(),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            join(&r.omegas),
            join(&r.times),
            f(r.margin),
            r.pass.to_string(),
        ]
    });
    io::write_csv(out, &["check", "n", "omega_vec", "t_vec", "margin", "pass"], rows)?;
    io::write_manifest(
        out,
        "phase-check",
        json!({"model": m.descriptor, "suite": clap::ValueEnum::to_possible_value(&suite).map(|v| v.get_name().to_string()), "samples": samples, "seed": seed}),
        json!({"identity": 1e-12, "finite_difference_step": FD_STEP}),
        json!({"records": records.len(), "failures": failures}),
    )
}

pub fn oscillatory_sweep(family: &Path, mus: &[f64], out: &Path) -> Result<()> {
    let text = fs::read_to_string(family)?;
    let fam: SymbolFamily = serde_json::from_str(&text).map_err(|e| Error::Domain(format!("family: {e}")))?;
    let rows = sweep(&fam, mus)?;
    let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    io::write_csv(
        out,
        &["mu", "zeta", "value_re", "value_im", "bound", "ratio"],
        rows.iter().map(|r| vec![f(r.mu), f(r.zeta), f(r.value.re), f(r.value.im), f(r.bound), f(r.ratio)]),
    )?;
    io::write_manifest(
        out,
        "oscillatory-sweep",
        json!({"family": serde_json::from_str::<Value>(&text).unwrap_or(Value::Null), "mu_grid": mus}),
        json!({"periodic": PERIODIC_TOL, "adaptive": ADAPTIVE_TOL,
               "stationary_phase_c0": rabi_core::oscillatory::STATIONARY_PHASE_C0,
               "corput_c": rabi_core::oscillatory::CORPUT_C}),
        json!({"max_ratio": worst, "violations": rows.iter().filter(|r| r.ratio > 1.0).count()}),
    )
}

pub fn recover(plus: &Path, minus: Option<&Path>, hbar: f64, out: &Path) -> Result<()> {
    let mut p_rows = Vec::new();
    let mut m_rows = Vec::new();
    for r in io::read_spectrum_rows(plus)? {
        if r.branch == Some('-') {
            m_rows.push(r);
        } else {
            p_rows.push(r);
        }
    }
    if let Some(path) = minus {
        for r in io::read_spectrum_rows(path)? {
            if r.branch == Some('+') {
                return Err(Error::Domain(format!("{}: '+' row in the minus spectrum", path.display())));
            }
            m_rows.push(r);
        }
    }
    let ps = io::slice_from_rows(p_rows)?;
    let ms = io::slice_from_rows(m_rows)?;
    let rec = recover_parameters(&ps, &ms, hbar)?;
    let body = json!({
        "omega": rec.params.omega,
        "E": rec.params.energy,
        "g": rec.params.coupling,
        "rms": rec.rms,
    });
    fs::write(out, serde_json::to_string_pretty(&body)? + "\n")?;
    io::write_manifest(
        out,
        "recover",
        json!({"spectrum": plus.display().to_string(), "spectrum_minus": minus.map(|p| p.display().to_string()), "hbar": hbar}),
        json!({"trend": rabi_core::inverse::TREND_TOL, "noise_floor_sigmas": rabi_core::inverse::NOISE_FLOOR_SIGMAS}),
        serde_json::to_value(&rec)?,
    )
}
