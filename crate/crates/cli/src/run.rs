//! The five commands.

use qcascade_core::cascade::{
    compare_on_grid, default_grid, factorize_network, CascadeResult, CascadeTerm, FactorizeOptions, GridComparison,
    LadderKind,
};
use qcascade_core::delay::{AssumptionReport, CheckStatus, DelayNetwork, DelaySpec, Which};
use qcascade_core::example::ExampleParams;
use qcascade_core::factor::{factor_to_slh, FactorVariant, SlhParams};
use qcascade_core::io::NetworkDoc;
use qcascade_core::linalg::{c, C64};
use qcascade_core::roots::{scan, Kind, Scan};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::checks::{all_pass, print_table, structural_checks, CheckRow};
use crate::config::{Command, RunConfig};
use crate::output::{num, OutputDir};
use crate::CliError;

/// One physical component of `∏ P'(z) · B`, listed left to right.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub index: usize,
    pub term: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub variant: Option<FactorVariant>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ladder: Option<LadderKind>,
    pub zeros: Vec<C64>,
    /// Single-mode realization, when the term is one component.
    pub slh: Option<SlhParams>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

/// Contents of `cascade.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CascadeDoc {
    pub phase_shifted: bool,
    pub result: CascadeResult,
    pub comparison: GridComparison,
    pub components: Vec<ComponentDoc>,
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.command {
        Command::Validate => {
            let doc = load_network(cfg.input_path.as_deref().expect("checked in config"))?;
            let mut out = OutputDir::create(&cfg.out)?;
            out.write_json("config.json", cfg)?;
            let net = build_network(&doc)?;
            let report = net.validate_assumptions();
            out.write_json("assumptions.json", &report)?;
            print_assumptions(&report);
            out.finish("validate", cfg.seed)?;
            hard_failure(&report)
        }
        Command::Poles => {
            let doc = load_network(cfg.input_path.as_deref().expect("checked in config"))?;
            let mut out = OutputDir::create(&cfg.out)?;
            out.write_json("config.json", cfg)?;
            let net = build_network(&doc)?;
            let report = net.validate_assumptions();
            out.write_json("assumptions.json", &report)?;
            hard_failure(&report)?;
            let sc = scan(&net, window(cfg, &net), Which::Exact)?;
            write_records(&mut out, &sc)?;
            print_scan(&sc);
            out.finish("poles", cfg.seed)?;
            Ok(())
        }
        Command::Factorize => {
            let doc = load_network(cfg.input_path.as_deref().expect("checked in config"))?;
            let mut out = OutputDir::create(&cfg.out)?;
            out.write_json("config.json", cfg)?;
            let rows = factorize_into(&mut out, cfg, &doc)?;
            out.finish("factorize", cfg.seed)?;
            checks_outcome(&rows)
        }
        Command::Example => {
            let p = ExampleParams::default();
            let doc = NetworkDoc::from_slh(&p.open_model()?, 1, &DelaySpec::checked(vec![p.delay], p.delay)?);
            let mut out = OutputDir::create(&cfg.out)?;
            out.write_json("config.json", cfg)?;
            out.write_json("example_params.json", &p)?;
            println!("preset: T = {}, eta = {}, kappa = {}, epsilon = {}", p.delay, p.eta, p.kappa, p.epsilon);
            let rows = factorize_into(&mut out, cfg, &doc)?;
            out.finish("example", cfg.seed)?;
            checks_outcome(&rows)
        }
        Command::Verify => verify(cfg),
    }
}

pub fn load_network(path: &Path) -> Result<NetworkDoc, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// A description that does not form a network is an input error.
fn build_network(doc: &NetworkDoc) -> Result<DelayNetwork, CliError> {
    doc.to_network().map_err(|e| CliError::Input(format!("network description: {e}")))
}

fn window(cfg: &RunConfig, net: &DelayNetwork) -> f64 {
    cfg.window_im.unwrap_or(1.5 * net.period())
}

fn print_assumptions(report: &AssumptionReport) {
    for chk in &report.checks {
        let status = match chk.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Warn => "warn",
            CheckStatus::Fail => "FAIL",
        };
        println!("{:<60}  {status}  {}", chk.assumption.to_string(), chk.note);
    }
}

fn hard_failure(report: &AssumptionReport) -> Result<(), CliError> {
    match report.hard_failure() {
        Some(chk) => Err(CliError::Assumption(format!("{} violated: {}", chk.assumption, chk.note))),
        None => Ok(()),
    }
}

fn checks_outcome(rows: &[CheckRow]) -> Result<(), CliError> {
    if all_pass(rows) {
        Ok(())
    } else {
        let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
        Err(CliError::ChecksFailed(failed.join(", ")))
    }
}

fn print_scan(sc: &Scan) {
    println!(
        "window |Im z| <= {:.4}: {} zeros (winding {}), {} poles (winding {})",
        sc.window_im,
        sc.zeros().map(|r| r.multiplicity).sum::<usize>(),
        sc.zero_count.winding,
        sc.poles().map(|r| r.multiplicity).sum::<usize>(),
        sc.pole_count.winding
    );
}

fn record_rows(sc: &Scan, kind: Kind) -> Vec<Vec<String>> {
    sc.records
        .iter()
        .filter(|r| r.kind == kind)
        .map(|r| {
            vec![
                num(r.position.re),
                num(r.position.im),
                r.multiplicity.to_string(),
                r.degenerate.to_string(),
                num(r.residual),
            ]
        })
        .collect()
}

fn write_records(out: &mut OutputDir, sc: &Scan) -> Result<(), CliError> {
    const HEADER: [&str; 5] = ["re", "im", "multiplicity", "degenerate", "residual"];
    out.write_json("records.json", sc)?;
    out.write_csv("poles.csv", &HEADER, &record_rows(sc, Kind::Pole))?;
    out.write_csv("zeros.csv", &HEADER, &record_rows(sc, Kind::Zero))
}

fn components(result: &CascadeResult) -> Vec<ComponentDoc> {
    result
        .product_form()
        .into_iter()
        .enumerate()
        .map(|(index, t)| match t {
            CascadeTerm::Factor(f) => {
                let (slh, note) = match factor_to_slh(&f) {
                    Ok(p) => (Some(p), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                ComponentDoc {
                    index,
                    term: "factor".into(),
                    variant: Some(f.variant),
                    ladder: None,
                    zeros: f.roots.to_vec(),
                    slh,
                    note,
                }
            }
            CascadeTerm::Ladder(l) => ComponentDoc {
                index,
                term: "ladder".into(),
                variant: None,
                ladder: Some(l.kind),
                zeros: l.base_zeros(),
                slh: None,
                note: Some(format!("closed-form product over the ladder with period {}", l.period)),
            },
        })
        .collect()
}

/// Scan, factorization, comparison and checks, written into `out`.
fn factorize_into(out: &mut OutputDir, cfg: &RunConfig, doc: &NetworkDoc) -> Result<Vec<CheckRow>, CliError> {
    out.write_json("network.json", doc)?;
    let net = build_network(doc)?;
    let report = net.validate_assumptions();
    out.write_json("assumptions.json", &report)?;
    print_assumptions(&report);
    hard_failure(&report)?;

    let opts = FactorizeOptions {
        truncation: cfg.truncation,
        degeneracy: cfg.degeneracy,
        which: Which::Exact,
        grid: default_grid(net.delays().base_period, cfg.grid_points),
        ..Default::default()
    };
    let nf = factorize_network(&net, window(cfg, &net), &opts)?;
    write_records(out, &nf.scan)?;
    print_scan(&nf.scan);
    out.write_json("plan.json", &nf.plan)?;
    for w in &nf.result.warnings {
        log::warn!("{w}");
    }

    let cascade = CascadeDoc {
        phase_shifted: nf.phase_shifted,
        components: components(&nf.result),
        result: nf.result,
        comparison: nf.comparison,
    };
    out.write_json("cascade.json", &cascade)?;
    write_profile(out, &cascade.result)?;
    write_tf_samples(out, &net, &cascade)?;
    println!(
        "{} terms, max relative error {:.3e} on {} grid points",
        cascade.result.terms.len(),
        cascade.comparison.max_rel_error,
        cascade.comparison.omegas.len()
    );

    let rows = structural_checks(&cascade.result, &net, &cascade.comparison, cfg.tol_structural, cfg.seed);
    out.write_json("checks.json", &rows)?;
    print_table(&rows);
    Ok(rows)
}

fn write_profile(out: &mut OutputDir, r: &CascadeResult) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = r
        .residual_profile
        .iter()
        .map(|p| {
            vec![
                p.per_group.map(|k| k.to_string()).unwrap_or_else(|| "closed".into()),
                p.factors.to_string(),
                num(p.max_rel_error),
                num(p.b_dispersion),
            ]
        })
        .collect();
    out.write_csv("residual_profile.csv", &["per_group", "factors", "max_rel_error", "b_dispersion"], &rows)
}

/// Entries `(0,0)` and `(0,1)` of the exact and reconstructed functions along `iω`,
/// with the pointwise error and the prefactor applied to the reconstruction.
fn write_tf_samples(out: &mut OutputDir, net: &DelayNetwork, doc: &CascadeDoc) -> Result<(), CliError> {
    let cmp = &doc.comparison;
    let pf = &cmp.prefactor;
    let mut rows = Vec::with_capacity(cmp.omegas.len());
    for (&w, &err) in cmp.omegas.iter().zip(&cmp.errors) {
        let z = c(0.0, w);
        let t = net.eval(z, Which::Exact)?;
        let r = pf * doc.result.eval(z);
        let mut row = vec![num(w)];
        for m in [&t, &r, pf] {
            for (i, j) in [(0, 0), (0, 1)] {
                row.push(num(m[(i, j)].re));
                row.push(num(m[(i, j)].im));
            }
        }
        row.push(num(err));
        rows.push(row);
    }
    let header = [
        "omega", "exact_00_re", "exact_00_im", "exact_01_re", "exact_01_im", "recon_00_re", "recon_00_im",
        "recon_01_re", "recon_01_im", "prefactor_00_re", "prefactor_00_im", "prefactor_01_re", "prefactor_01_im",
        "rel_error",
    ];
    out.write_csv("tf_samples.csv", &header, &rows)
}

fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = cfg.input_path.as_deref().expect("checked in config");
    let doc = load_network(&dir.join("network.json"))?;
    let cascade_path = dir.join("cascade.json");
    let text = std::fs::read_to_string(&cascade_path).map_err(|e| CliError::io(&cascade_path, e))?;
    let cascade: CascadeDoc =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", cascade_path.display())))?;
    let net = build_network(&doc)?;
    hard_failure(&net.validate_assumptions())?;

    let result = &cascade.result;
    let fresh = compare_on_grid(&|z| net.eval(z, Which::Exact), &|z| result.eval(z), &cascade.comparison.omegas)?;
    let stored = cascade.comparison.max_rel_error;
    let drift = (fresh.max_rel_error - stored).abs() / stored.max(f64::MIN_POSITIVE);
    let mut rows = structural_checks(result, &net, &fresh, cfg.tol_structural, cfg.seed);
    rows.push(CheckRow::new("stored grid error reproduced (relative)", drift, 1e-9));

    let mut out = OutputDir::create(&cfg.out)?;
    out.write_json("config.json", cfg)?;
    out.write_json("verify.json", &rows)?;
    print_table(&rows);
    out.finish("verify", cfg.seed)?;
    checks_outcome(&rows)
}
