use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hankelred::balance::{self, Truncation};
use hankelred::bench::{self, MsdParams};
use hankelred::hna::{self, Approx, GhnaOptions, Policy, UChoice};
use hankelred::{specfact, verify, DescriptorSystem, FrequencyGrid};

use crate::manifest::{load_system, save_system};
use crate::{CliError, ErrorArgs, Family, GenerateArgs, HsvArgs, Method, ReduceArgs, UChoiceArg, VerifyArgs};

/// Fixed CSV/report number format: scientific, 16 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.15e}")
}

/// Effective configuration, one `# key = value` line each.
fn print_config(cmd: &str, threads: usize, items: &[(&str, String)]) {
    println!("# hankelred {} {cmd}", env!("CARGO_PKG_VERSION"));
    println!("# threads = {threads}");
    for (k, v) in items {
        println!("# {k} = {v}");
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn generate(a: &GenerateArgs, threads: usize) -> Result<(), CliError> {
    let (sys, name, index, items) = match a.family {
        Family::Msd => {
            let params = MsdParams { mass: a.mass, stiffness: a.stiffness, damping: a.damping };
            let items = vec![
                ("g", a.g.to_string()),
                ("mass", num(a.mass)),
                ("stiffness", num(a.stiffness)),
                ("damping", num(a.damping)),
            ];
            (bench::gen_msd::<f64>(a.g, &params)?, format!("msd-g{}", a.g), Some(3), items)
        }
        Family::Stokes => {
            let items = vec![("n_v", a.n_v.to_string()), ("n_p", a.n_p.to_string()), ("seed", a.seed.to_string())];
            let (sys, _) = bench::gen_stokes_like::<f64>(a.n_v, a.n_p, a.seed)?;
            (sys, format!("stokes-{}-{}", a.n_v, a.n_p), Some(2), items)
        }
        Family::Random => {
            let items = vec![
                ("n", a.n.to_string()),
                ("m", a.m.to_string()),
                ("p", a.p.to_string()),
                ("seed", a.seed.to_string()),
            ];
            (bench::gen_random_stable::<f64>(a.n, a.m, a.p, a.seed)?, format!("random-{}", a.n), None, items)
        }
    };
    let mut items = items;
    items.insert(0, ("family", format!("{:?}", a.family).to_lowercase()));
    items.push(("out", a.out.display().to_string()));
    print_config("generate", threads, &items);
    let path = save_system(&a.out, &sys, Some(name), index)?;
    println!("wrote {} (n = {}, m = {}, p = {})", path.display(), sys.n(), sys.m(), sys.p());
    Ok(())
}

pub fn hsv(a: &HsvArgs, threads: usize) -> Result<(), CliError> {
    print_config("hsv", threads, &[("manifest", a.manifest.display().to_string()), ("out", a.out.display().to_string())]);
    let (_, sys) = load_system(&a.manifest)?;
    let s = balance::hankel_singular_values(&sys)?;
    let mut csv = String::from("index,type,value\n");
    for (i, v) in s.proper.iter().enumerate() {
        writeln!(csv, "{},proper,{}", i + 1, num(*v)).unwrap();
    }
    // improper HSVs below the cutoff are reported as zero
    for i in 0..s.n_inf {
        writeln!(csv, "{},improper,{}", i + 1, num(s.improper.get(i).copied().unwrap_or(0.0))).unwrap();
    }
    write_file(&a.out, &csv)?;
    println!("n_f = {}, n_inf = {}, nonzero improper = {}, index = {}", s.n_f, s.n_inf, s.improper.len(), s.index);
    Ok(())
}

fn ghna_options(a: &ReduceArgs) -> Result<GhnaOptions<f64>, CliError> {
    let approx = match a.approx.as_deref() {
        None => Approx::Off,
        Some("auto") => Approx::Auto,
        Some(t) => match t.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Approx::Tol(v),
            _ => return Err(CliError::Usage(format!("--approx expects a nonnegative number or 'auto', got '{t}'"))),
        },
    };
    let u_choice = match a.u_choice {
        UChoiceArg::Unitary => UChoice::Unitary,
        UChoiceArg::Pinv => UChoice::PseudoInverse,
    };
    Ok(GhnaOptions { approx, cluster_tol: a.cluster_tol, u_choice, fold_static_fast: a.fold_static_fast })
}

pub fn reduce(a: &ReduceArgs, threads: usize) -> Result<(), CliError> {
    let opts = ghna_options(a)?;
    let mut items = vec![
        ("manifest", a.manifest.display().to_string()),
        ("method", format!("{:?}", a.method).to_lowercase()),
    ];
    match (a.order, a.tol) {
        (Some(r), _) => items.push(("order", r.to_string())),
        (None, Some(t)) => items.push(("tol", num(t))),
        (None, None) => return Err(CliError::Usage("one of --order or --tol is required".into())),
    }
    if a.method == Method::Ghna {
        items.push(("approx", a.approx.clone().unwrap_or_else(|| "off".into())));
        items.push(("cluster_tol", num(opts.cluster_tol)));
        items.push(("u_choice", format!("{:?}", a.u_choice).to_lowercase()));
        items.push(("fold_static_fast", opts.fold_static_fast.to_string()));
    }
    items.push(("out", a.out.display().to_string()));
    print_config("reduce", threads, &items);

    let (man, sys) = load_system(&a.manifest)?;
    let (reduced, report) = match a.method {
        Method::Ghna => {
            let policy = match a.order {
                Some(r) => Policy::Order(r),
                None => Policy::HankelTol(a.tol.unwrap()),
            };
            let res = hna::ghna_with(&sys, policy, &opts)?;
            let text = ghna_report(&res.report);
            (res.reduced, text)
        }
        Method::Gbt => {
            let policy = match a.order {
                Some(r) => Truncation::Order(r),
                None => Truncation::Tolerance(a.tol.unwrap()),
            };
            let bal = balance::gbt_sr(&sys, policy)?;
            let mut text = String::from("method = \"gbt\"\n");
            writeln!(text, "r = {}", bal.slow.n()).unwrap();
            writeln!(text, "ell_inf = {}", bal.fast.n()).unwrap();
            writeln!(text, "hinf_bound = {}", num(bal.truncation_tail)).unwrap();
            writeln!(text, "improper_cutoff = {}", num(bal.improper_cutoff)).unwrap();
            writeln!(text, "noise_dropped = {}", bal.noise_dropped).unwrap();
            (bal.system()?, text)
        }
    };
    let name = man.name.map(|n| format!("{n}-reduced"));
    let path = save_system(&a.out, &reduced, name, None)?;
    write_file(&a.out.join("report.txt"), &report)?;
    print!("{report}");
    println!("wrote {}", path.display());
    Ok(())
}

fn ghna_report(r: &hna::ReductionReport<f64>) -> String {
    let mut t = String::from("method = \"ghna\"\n");
    let ints = [("r", r.r), ("ell_inf", r.ell_inf), ("k", r.k), ("n_b", r.n_b), ("antistable_order", r.antistable_order)];
    let reals = [
        ("sigma_r1", r.sigma_r1),
        ("hankel_error_exact", r.hankel_error_exact),
        ("hinf_bound", r.hinf_bound),
        ("approx_extra", r.approx_extra),
        ("gamma_condition", r.gamma_condition),
        ("balance_tol", r.balance_tol),
        ("improper_cutoff", r.improper_cutoff),
    ];
    for (k, v) in ints {
        writeln!(t, "{k} = {v}").unwrap();
    }
    for (k, v) in reals {
        writeln!(t, "{k} = {}", num(v)).unwrap();
    }
    let w: Vec<String> = r.warnings.iter().map(|w| format!("{w:?}")).collect();
    writeln!(t, "warnings = [{}]", w.join(", ")).unwrap();
    t
}

/// Proper order of `sys`, i.e. the dimension of its slow part.
fn slow_order(sys: &DescriptorSystem<f64>) -> Result<usize, CliError> {
    Ok(specfact::block_diagonalize(sys)?.slow.n())
}

pub fn error(a: &ErrorArgs, threads: usize) -> Result<(), CliError> {
    print_config(
        "error",
        threads,
        &[
            ("full", a.full.display().to_string()),
            ("reduced", a.reduced.display().to_string()),
            ("wmin", num(a.wmin)),
            ("wmax", num(a.wmax)),
            ("points", a.points.to_string()),
            ("out", a.out.display().to_string()),
        ],
    );
    let grid = FrequencyGrid::logspace(a.wmin, a.wmax, a.points).map_err(|e| CliError::Usage(e.to_string()))?;
    let (_, g) = load_system(&a.full)?;
    let (_, h) = load_system(&a.reduced)?;
    if (g.m(), g.p()) != (h.m(), h.p()) {
        return Err(CliError::Format("full and reduced systems differ in input/output dimensions".into()));
    }
    let spectrum = balance::hankel_singular_values(&g)?;
    let r = slow_order(&h)?;
    let bound = 2.0 * spectrum.tail_sum(r);
    let samples = verify::sampled_error(&g, &h, &grid)?;
    let mut csv = String::from("omega,error,bound\n");
    let mut sup: f64 = 0.0;
    for (w, v) in samples {
        let v = v.unwrap_or(f64::NAN);
        sup = sup.max(v);
        writeln!(csv, "{},{},{}", num(w), num(v), num(bound)).unwrap();
    }
    write_file(&a.out, &csv)?;
    println!("reduced proper order = {r}, sampled sup = {}, bound = {}", num(sup), num(bound));
    Ok(())
}

pub fn verify(a: &VerifyArgs, threads: usize) -> Result<(), CliError> {
    print_config(
        "verify",
        threads,
        &[("manifest", a.manifest.display().to_string()), ("sigma", num(a.sigma)), ("tol", num(a.tol))],
    );
    let (_, sys) = load_system(&a.manifest)?;
    let cert = verify::allpass_certificate(&sys, a.sigma, a.tol)?;
    for (k, v) in cert.residuals() {
        let mark = if v <= a.tol { "ok" } else { "FAIL" };
        println!("{k} = {} {mark}", num(v));
    }
    println!("pass = {}", cert.pass);
    Ok(())
}
