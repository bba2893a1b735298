use std::fmt::Write;
use std::path::Path;

use mushroom_core::density::{self, DensityInstance};
use mushroom_core::dynamics::{self, PhasePoint, TrajectoryClass};
use mushroom_core::eigenflow::{self, FlowReport, FlowSettings};
use mushroom_core::eigensolver::{self, DiscretizationSpec, Domain, EigenCache, EigenCacheKey, Target};
use mushroom_core::geometry::{MushroomGeometry, RegionTag, SegmentShape, Vec2};
use mushroom_core::quadrature::Composite;
use mushroom_core::quasimodes::{self, QuasiIndex, Quasimode};
use mushroom_core::spectral_approx::{self, ApproxInput};
use mushroom_core::specfun::ZeroCache;
use serde::Serialize;

use crate::artifact::Artifact;
use crate::config::RunConfig;
use crate::plot::{self, PlotSpec};
use crate::{
    ApproxCommand, CliError, Command, DensityCommand, DynCommand, EigCommand, FlowCommand, Geo, Outcome,
    QuasiCommand, ReportCommand, Shape, SpecfunCommand, Sweep,
};

type Res<T> = Result<T, CliError>;

pub fn name(c: &Command) -> String {
    let s = match c {
        Command::Geom { .. } => "geom",
        Command::Dyn(DynCommand::Classify { .. }) => "dyn classify",
        Command::Dyn(DynCommand::Mc { .. }) => "dyn mc",
        Command::Dyn(DynCommand::Trace { .. }) => "dyn trace",
        Command::Specfun(SpecfunCommand::Zeros { .. }) => "specfun zeros",
        Command::Quasi(QuasiCommand::Count { .. }) => "quasi count",
        Command::Quasi(QuasiCommand::Residual { .. }) => "quasi residual",
        Command::Quasi(QuasiCommand::Overlap { .. }) => "quasi overlap",
        Command::Eig(EigCommand::Solve { .. }) => "eig solve",
        Command::Eig(EigCommand::Weyl { .. }) => "eig weyl",
        Command::Approx(ApproxCommand::Run { .. }) => "approx run",
        Command::Flow(FlowCommand::Hadamard { .. }) => "flow hadamard",
        Command::Flow(FlowCommand::Sweep { .. }) => "flow sweep",
        Command::Flow(FlowCommand::Occupancy { .. }) => "flow occupancy",
        Command::Density(DensityCommand::Assemble { .. }) => "density assemble",
        Command::Report(ReportCommand::Percival { .. }) => "report percival",
        Command::Plot { .. } => "plot",
    };
    s.to_string()
}

/// Commands that draw random numbers (Monte Carlo or Lanczos start vectors).
pub fn uses_seed(c: &Command) -> bool {
    matches!(
        c,
        Command::Dyn(DynCommand::Mc { .. }) | Command::Eig(_) | Command::Flow(_) | Command::Report(_)
    )
}

fn set<T: Copy>(dst: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *dst = v;
    }
}

fn shape(cfg: &mut RunConfig, s: &Shape) {
    set(&mut cfg.geometry.r1, s.r1);
    set(&mut cfg.geometry.r2, s.r2);
}

fn geo(cfg: &mut RunConfig, g: &Geo) {
    shape(cfg, &g.shape);
    set(&mut cfg.geometry.t, g.t);
}

fn sweep(cfg: &mut RunConfig, s: &Sweep) {
    shape(cfg, &s.shape);
    set(&mut cfg.flow.t0, s.t0);
    set(&mut cfg.flow.t1, s.t1);
    set(&mut cfg.flow.samples, s.samples);
    set(&mut cfg.solver.h, s.h);
    set(&mut cfg.seed, s.seed);
    if s.delta.is_some() {
        cfg.flow.delta = s.delta;
    }
}

/// Folds command-line values into the configuration so that a single
/// validation pass covers both.
pub fn apply_overrides(c: &Command, cfg: &mut RunConfig) {
    match c {
        Command::Geom { geo: g } | Command::Dyn(DynCommand::Classify { geo: g, .. }) => geo(cfg, g),
        Command::Dyn(DynCommand::Trace { geo: g, .. }) => geo(cfg, g),
        Command::Dyn(DynCommand::Mc { geo: g, seed, .. }) => {
            geo(cfg, g);
            set(&mut cfg.seed, *seed);
        }
        Command::Specfun(_) | Command::Density(_) | Command::Plot { .. } => {}
        Command::Quasi(QuasiCommand::Count { geo: g, eps, lambda_max, .. }) => {
            geo(cfg, g);
            set(&mut cfg.quasimode.eps, *eps);
            set(&mut cfg.quasimode.lambda_max, *lambda_max);
        }
        Command::Quasi(QuasiCommand::Residual { geo: g, eps, .. })
        | Command::Quasi(QuasiCommand::Overlap { geo: g, eps, .. }) => {
            geo(cfg, g);
            set(&mut cfg.quasimode.eps, *eps);
        }
        Command::Eig(EigCommand::Solve { geo: g, h, count, seed }) => {
            geo(cfg, g);
            set(&mut cfg.solver.h, *h);
            set(&mut cfg.solver.count, *count);
            set(&mut cfg.seed, *seed);
        }
        Command::Eig(EigCommand::Weyl { geo: g, h, seed, .. }) => {
            geo(cfg, g);
            set(&mut cfg.solver.h, *h);
            set(&mut cfg.seed, *seed);
        }
        Command::Approx(ApproxCommand::Run { c, .. }) => set(&mut cfg.quasimode.c, *c),
        Command::Flow(FlowCommand::Hadamard { geo: g, h, delta, seed, .. }) => {
            geo(cfg, g);
            set(&mut cfg.solver.h, *h);
            set(&mut cfg.seed, *seed);
            if delta.is_some() {
                cfg.flow.delta = *delta;
            }
        }
        Command::Flow(FlowCommand::Sweep { sweep: s }) => sweep(cfg, s),
        Command::Flow(FlowCommand::Occupancy { sweep: s, c, eps }) => {
            sweep(cfg, s);
            set(&mut cfg.quasimode.c, *c);
            set(&mut cfg.quasimode.eps, *eps);
        }
        Command::Report(ReportCommand::Percival { geo: g, h, count, eps, c, seed }) => {
            geo(cfg, g);
            set(&mut cfg.solver.h, *h);
            set(&mut cfg.solver.count, *count);
            set(&mut cfg.quasimode.eps, *eps);
            set(&mut cfg.quasimode.c, *c);
            set(&mut cfg.seed, *seed);
        }
    }
}

fn read_input(path: &Path) -> Res<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::validation(format!("input: cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Res<String> {
    String::from_utf8(read_input(path)?)
        .map_err(|_| CliError::validation(format!("input: {} is not UTF-8", path.display())))
}

/// Contents of the input files a command reads, for the manifest hash.
pub fn input_bytes(c: &Command) -> Res<Vec<u8>> {
    match c {
        Command::Approx(ApproxCommand::Run { input, .. })
        | Command::Density(DensityCommand::Assemble { input })
        | Command::Plot { input, .. } => read_input(input),
        _ => Ok(Vec::new()),
    }
}

fn done(artifacts: Vec<Artifact>) -> Res<Outcome> {
    Ok(Outcome { artifacts, warnings: vec![] })
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s.into_bytes()
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn zero_cache(cfg: &RunConfig) -> Res<ZeroCache> {
    Ok(ZeroCache::open(cfg.cache_dir.join("bessel_zeros.csv"))?)
}

fn spec(cfg: &RunConfig) -> DiscretizationSpec {
    DiscretizationSpec { seed: cfg.seed, ..DiscretizationSpec::new(cfg.solver.h) }
}

fn flow_settings(cfg: &RunConfig) -> FlowSettings {
    FlowSettings { delta: cfg.flow.delta, ..FlowSettings::new(spec(cfg)) }
}

fn phase_point(g: &MushroomGeometry, x: f64, y: f64, dx: f64, dy: f64) -> Res<PhasePoint> {
    if g.classify_point(Vec2::new(x, y)) == RegionTag::Outside {
        return Err(CliError::validation(format!("dynamics: ({x}, {y}) lies outside the mushroom")));
    }
    Ok(PhasePoint::from_direction(Vec2::new(x, y), Vec2::new(dx, dy))?)
}

fn class_name(c: TrajectoryClass) -> String {
    match c {
        TrajectoryClass::Ergodic => "ergodic".into(),
        TrajectoryClass::Integrable => "integrable".into(),
        TrajectoryClass::Exceptional(r) => format!("exceptional:{}", format!("{r:?}").to_lowercase()),
    }
}

pub fn dispatch(c: &Command, cfg: &RunConfig) -> Res<Outcome> {
    match c {
        Command::Geom { .. } => geom(cfg),
        Command::Dyn(d) => dyn_cmd(d, cfg),
        Command::Specfun(SpecfunCommand::Zeros { n, kmax }) => zeros(cfg, *n, *kmax),
        Command::Quasi(q) => quasi(q, cfg),
        Command::Eig(e) => eig(e, cfg),
        Command::Approx(ApproxCommand::Run { input, eps, delta, .. }) => {
            let parsed = ApproxInput::parse(&read_text(input)?)?;
            let report = spectral_approx::approx_eigenvectors(&parsed, cfg.quasimode.c, *eps, *delta)?;
            done(vec![Artifact::new("approx.json", json(&report))])
        }
        Command::Flow(f) => flow(f, cfg),
        Command::Density(DensityCommand::Assemble { input }) => density_assemble(&read_text(input)?),
        Command::Report(ReportCommand::Percival { .. }) => percival(cfg),
        Command::Plot { input, kind, x, y, group, title } => {
            let mut spec = PlotSpec::for_kind(*kind, x.clone(), y.clone(), group.clone())?;
            if let Some(t) = title {
                spec.title = t.clone();
            }
            let svg = plot::plot(&read_text(input)?, &spec)?;
            let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
            done(vec![Artifact::new(format!("{stem}.svg"), svg)])
        }
    }
}

fn geom(cfg: &RunConfig) -> Res<Outcome> {
    let g = cfg.mushroom()?;
    let mut summary = String::from("quantity,value\n");
    let _ = writeln!(summary, "area,{}", g.area());
    let _ = writeln!(summary, "perimeter,{}", g.perimeter());
    let _ = writeln!(summary, "area_rate,{}", g.area_rate());
    let _ = writeln!(summary, "integrable_fraction,{}", dynamics::integrable_fraction(&g));
    let mut segs = String::from("segment,shape,start_x,start_y,end_x,end_y,length\n");
    for s in g.boundary_segments() {
        let shape = match s.shape {
            SegmentShape::Line { .. } => "line",
            SegmentShape::Arc { .. } => "arc",
        };
        let (a, b) = (s.start(), s.end());
        let _ = writeln!(segs, "{},{shape},{},{},{},{},{}", s.kind, a.x, a.y, b.x, b.y, s.length());
    }
    done(vec![Artifact::new("geometry.csv", summary), Artifact::new("segments.csv", segs)])
}

fn dyn_cmd(d: &DynCommand, cfg: &RunConfig) -> Res<Outcome> {
    let g = cfg.mushroom()?;
    match d {
        DynCommand::Classify { start: s, .. } => {
            let z = phase_point(&g, s.x, s.y, s.dx, s.dy)?;
            let class = dynamics::classify(&g, z);
            let text = format!(
                "x,y,dx,dy,impact_parameter,class\n{},{},{},{},{},{}\n",
                z.x.x,
                z.x.y,
                z.xi.x,
                z.xi.y,
                z.impact_parameter(),
                class_name(class)
            );
            done(vec![Artifact::new("classify.csv", text)])
        }
        DynCommand::Mc { samples, .. } => {
            let est = dynamics::integrable_fraction_mc(&g, *samples, cfg.seed)?;
            let exact = dynamics::integrable_fraction(&g);
            let z = (est.estimate - exact) / est.std_error.max(f64::MIN_POSITIVE);
            let text = format!(
                "samples,integrable,estimate,std_error,closed_form,z_score,seed\n{},{},{},{},{},{},{}\n",
                est.samples, est.integrable, est.estimate, est.std_error, exact, z, cfg.seed
            );
            done(vec![Artifact::new("mc.csv", text)])
        }
        DynCommand::Trace { x, y, dx, dy, bounces, max_time, .. } => {
            if !(*max_time > 0.0) {
                return Err(CliError::validation("dynamics: max_time must be positive"));
            }
            let z = phase_point(&g, *x, *y, *dx, *dy)?;
            let tr = dynamics::evolve(&g, z, *bounces, *max_time)?;
            let warnings = vec![format!("trace ended by {:?} after {} bounces", tr.termination, tr.bounces.len())];
            Ok(Outcome { artifacts: vec![Artifact::new("trace.csv", tr.to_csv())], warnings })
        }
    }
}

fn zeros(cfg: &RunConfig, n: u32, kmax: u32) -> Res<Outcome> {
    if kmax == 0 {
        return Err(CliError::validation("specfun: kmax must be >= 1"));
    }
    let mut cache = zero_cache(cfg)?;
    let mut text = String::from("n,k,alpha,residual\n");
    for k in 1..=kmax {
        let z = cache.zero(n, k)?;
        let _ = writeln!(text, "{},{},{},{:e}", z.n, z.k, z.alpha, z.residual);
    }
    cache.save()?;
    done(vec![Artifact::new("zeros.csv", text)])
}

fn quasimode(g: &MushroomGeometry, eps: f64, n: u32, k: u32, cache: &mut ZeroCache) -> Res<Quasimode> {
    let z = cache.zero(n, k)?;
    Ok(Quasimode::new(g, eps, QuasiIndex { n, k, alpha: z.alpha })?)
}

fn quasi(q: &QuasiCommand, cfg: &RunConfig) -> Res<Outcome> {
    let g = cfg.mushroom()?;
    let eps = cfg.quasimode.eps;
    let mut cache = zero_cache(cfg)?;
    let out = match q {
        QuasiCommand::Count { points, .. } => {
            if *points == 0 {
                return Err(CliError::validation("quasimodes: points must be >= 1"));
            }
            let top = cfg.quasimode.lambda_max;
            let lambdas: Vec<f64> = (1..=*points).map(|i| top * i as f64 / *points as f64).collect();
            let r = quasimodes::count_report(&g, eps, &lambdas, &mut cache)?;
            let mut text = String::from("lambda,count,ratio,constant\n");
            for ((l, c), ratio) in r.lambdas.iter().zip(&r.counts).zip(&r.ratios) {
                let _ = writeln!(text, "{l},{c},{ratio},{}", r.constant);
            }
            Artifact::new("quasi_count.csv", text)
        }
        QuasiCommand::Residual { n, k, .. } => {
            let v = quasimode(&g, eps, *n, *k, &mut cache)?;
            let res = v.residual_norm(Composite::default())?;
            let text = format!(
                "n,k,alpha,eps,quasi_eigenvalue,norm,residual_norm\n{},{},{},{},{},{},{:e}\n",
                v.n,
                v.k,
                v.alpha,
                v.eps,
                v.quasi_eigenvalue(),
                v.norm,
                res
            );
            Artifact::new("quasi_residual.csv", text)
        }
        QuasiCommand::Overlap { n1, k1, n2, k2, .. } => {
            let a = quasimode(&g, eps, *n1, *k1, &mut cache)?;
            let b = quasimode(&g, eps, *n2, *k2, &mut cache)?;
            let o = quasimodes::overlap(&a, &b, Composite::default())?;
            Artifact::new("quasi_overlap.csv", format!("n1,k1,n2,k2,eps,overlap\n{n1},{k1},{n2},{k2},{eps},{o:e}\n"))
        }
    };
    cache.save()?;
    done(vec![out])
}

fn eig(e: &EigCommand, cfg: &RunConfig) -> Res<Outcome> {
    let g = cfg.mushroom()?;
    match e {
        EigCommand::Solve { .. } => {
            let key = EigenCacheKey { r1: g.r1(), r2: g.r2(), t: g.t(), h: cfg.solver.h, count: cfg.solver.count };
            let cache = EigenCache::new(&cfg.cache_dir);
            let values = match cache.load(&key)? {
                Some(v) => v,
                None => {
                    let basis = eigensolver::solve(Domain::Mushroom(g), &spec(cfg), Target::Count(key.count))?;
                    let v = basis.cache_records();
                    cache.store(&key, &v)?;
                    v
                }
            };
            let mut text = String::from("j,E,residual,parity\n");
            for v in values {
                let parity = v.parity.map_or("none".to_string(), |p| format!("{p:?}").to_lowercase());
                let _ = writeln!(text, "{},{},{:e},{parity}", v.j, v.e, v.residual);
            }
            done(vec![Artifact::new("eigenvalues.csv", text)])
        }
        EigCommand::Weyl { lambda_grid, .. } => {
            if lambda_grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                return Err(CliError::validation("eigensolver: lambda grid values must be positive"));
            }
            let top = lambda_grid.iter().copied().fold(0.0, f64::max);
            let basis = eigensolver::solve(Domain::Mushroom(g), &spec(cfg), Target::Below(top * (1.0 + 1e-9)))?;
            let r = basis.weyl_report(lambda_grid)?;
            let mut text = String::from("lambda,count,ratio\n");
            for ((l, c), ratio) in r.lambdas.iter().zip(&r.counts).zip(&r.ratios) {
                let _ = writeln!(text, "{l},{c},{ratio}");
            }
            done(vec![Artifact::new("weyl.csv", text)])
        }
    }
}

fn sweep_report(cfg: &RunConfig, jmax: usize) -> Res<(MushroomGeometry, FlowReport)> {
    let g = cfg.mushroom()?;
    let ts = eigenflow::t_grid(cfg.flow.t0, cfg.flow.t1, cfg.flow.samples)?;
    let report = eigenflow::flow_sweep(&g, &flow_settings(cfg), &ts, jmax)?;
    Ok((g, report))
}

fn flow_table(records: &[eigenflow::FlowRecord]) -> String {
    let mut text = String::from("t,j,E,dE_numeric,dE_boundary,dE_interior,bound\n");
    for r in records {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            r.t,
            r.j,
            r.e,
            opt(r.de_numeric),
            r.de_boundary,
            opt(r.de_interior),
            r.bound
        );
    }
    text
}

fn flow(f: &FlowCommand, cfg: &RunConfig) -> Res<Outcome> {
    match f {
        FlowCommand::Hadamard { j, dt, .. } => {
            let g = cfg.mushroom()?;
            let dt = dt.unwrap_or(4.0 * cfg.solver.h);
            let r = eigenflow::hadamard_report(&g, &flow_settings(cfg), *j, dt)?;
            let mut text =
                String::from("t,j,E,dE_numeric,dE_boundary,dE_interior,dE_interior_printed,branch_overlap,bound\n");
            for x in &r.records {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{},{},{},{}",
                    r.t, x.j, x.e, x.de_numeric, x.de_boundary, x.de_interior, x.de_interior_printed, x.branch_overlap, r.bound
                );
            }
            let warnings = vec![format!(
                "normalisation: half-form error {:e}, scaled-form error {:e}; favoured {}",
                r.normalisation.half_form_error,
                r.normalisation.scaled_form_error,
                r.normalisation.favoured()
            )];
            Ok(Outcome { artifacts: vec![Artifact::new("hadamard.csv", text)], warnings })
        }
        FlowCommand::Sweep { sweep } => {
            let (_, r) = sweep_report(cfg, sweep.jmax)?;
            let mut warnings = r.warnings.clone();
            warnings.extend(r.crossings.iter().map(|c| format!("suspected crossing: {c:?}")));
            Ok(Outcome { artifacts: vec![Artifact::new("flow_sweep.csv", flow_table(&r.records))], warnings })
        }
        FlowCommand::Occupancy { sweep, .. } => {
            let (g, r) = sweep_report(cfg, sweep.jmax)?;
            let c = cfg.quasimode.c;
            let top = r.spectra.iter().flatten().copied().fold(0.0, f64::max) + c;
            let mut cache = zero_cache(cfg)?;
            let fam = quasimodes::family(&g, cfg.quasimode.eps, top.sqrt(), &mut cache)?;
            cache.save()?;
            let quasi: Vec<f64> = fam.iter().map(|q| q.quasi_eigenvalue(g.r2())).collect();
            let mut text = String::from("j,q_j\n");
            for j in 1..=sweep.jmax {
                let q = eigenflow::occupancy(j, &r.ts, &r.spectra, &quasi, c)?;
                let _ = writeln!(text, "{j},{q}");
            }
            Ok(Outcome { artifacts: vec![Artifact::new("occupancy.csv", text)], warnings: r.warnings })
        }
    }
}

#[derive(Serialize)]
struct SegmentAudit {
    j: usize,
    n_from: usize,
    n_to: usize,
    /// `min d_n(S) − (d − 2ε_j)` over the segment.
    density_margin: f64,
    /// `max g` over `S` on the segment, against `2ε′_j`.
    max_g: Option<f64>,
    g_bound: f64,
}

#[derive(Serialize)]
struct DensityAudit {
    check_from: usize,
    hypotheses_checked: usize,
    segments: Vec<SegmentAudit>,
}

#[derive(Serialize)]
struct DensityOutput {
    n_max: usize,
    #[serde(rename = "S")]
    s: Vec<(usize, usize)>,
    #[serde(rename = "N_j")]
    n_j: Vec<density::Threshold>,
    beyond_horizon: Vec<usize>,
    audit: DensityAudit,
}

fn density_assemble(text: &str) -> Res<Outcome> {
    let inst: DensityInstance = serde_json::from_str(text)
        .map_err(|e| CliError::validation(format!("density: malformed instance: {e}")))?;
    let asm = density::assemble(&inst)?;
    let mut segments = Vec::new();
    for (i, th) in asm.thresholds.iter().enumerate() {
        let n_to = asm.thresholds.get(i + 1).map_or(asm.n_max, |n| n.n_j - 1);
        let floor = inst.d - 2.0 * inst.eps[th.j - 1];
        let mut margin = f64::INFINITY;
        for n in th.n_j..=n_to {
            margin = margin.min(density::d_n(&asm.set, n)?.value() - floor);
        }
        let lo = asm.set.partition_point(|&k| k < th.n_j);
        let hi = asm.set.partition_point(|&k| k <= n_to);
        let max_g = asm.set[lo..hi].iter().map(|&k| inst.g[k - 1]).fold(None, |m: Option<f64>, v| {
            Some(m.map_or(v, |m| m.max(v)))
        });
        segments.push(SegmentAudit {
            j: th.j,
            n_from: th.n_j,
            n_to,
            density_margin: margin,
            max_g,
            g_bound: 2.0 * inst.eps_prime[th.j - 1],
        });
    }
    let out = DensityOutput {
        n_max: asm.n_max,
        s: asm.runs(),
        n_j: asm.thresholds.clone(),
        beyond_horizon: asm.beyond_horizon.clone(),
        audit: DensityAudit {
            check_from: inst.check_from(),
            hypotheses_checked: inst.sets.len() * (inst.n_max() - inst.check_from() + 1),
            segments,
        },
    };
    done(vec![Artifact::new("density.json", json(&out))])
}

#[derive(Serialize)]
struct QuasiSummary {
    eps: f64,
    lambda: f64,
    count: usize,
    ratio: f64,
    constant: f64,
}

#[derive(Serialize)]
struct WeylSummary {
    h: f64,
    count: usize,
    lambda: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct GoodTime {
    c: f64,
    n: usize,
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct Percival {
    r1: f64,
    r2: f64,
    t: f64,
    integrable_fraction: f64,
    quasi_count: QuasiSummary,
    weyl: WeylSummary,
    good_time: GoodTime,
    flow: eigenflow::HadamardReport,
}

fn percival(cfg: &RunConfig) -> Res<Outcome> {
    let g = cfg.mushroom()?;
    let q = &cfg.quasimode;
    let mut cache = zero_cache(cfg)?;
    let counts = quasimodes::count_report(&g, q.eps, &[q.lambda_max], &mut cache)?;

    let basis = eigensolver::solve(Domain::Mushroom(g), &spec(cfg), Target::Count(cfg.solver.count))?;
    let eigs = basis.eigenvalues();
    let n = eigs.len();
    if n < 2 {
        return Err(CliError::validation("report: solver count must be >= 2"));
    }
    let lambda = 0.5 * (eigs[n - 2] + eigs[n - 1]);
    let weyl = WeylSummary { h: cfg.solver.h, count: n, lambda, ratio: basis.weyl_ratio(lambda)? };

    let fam = quasimodes::family(&g, q.eps, eigs[n - 1].sqrt(), &mut cache)?;
    cache.save()?;
    let quasi: Vec<f64> = fam.iter().map(|v| v.quasi_eigenvalue(g.r2())).collect();
    let windows = quasi.partition_point(|&e| e + q.c < eigs[n - 1]);
    let ratio = match windows {
        0 => None,
        w => Some(spectral_approx::good_time_ratio(&eigs, &quasi, q.c, w)?),
    };

    let jmax = cfg.solver.count.min(5);
    let flow = eigenflow::hadamard_report(&g, &flow_settings(cfg), jmax, 4.0 * cfg.solver.h)?;
    let report = Percival {
        r1: g.r1(),
        r2: g.r2(),
        t: g.t(),
        integrable_fraction: dynamics::integrable_fraction(&g),
        quasi_count: QuasiSummary {
            eps: q.eps,
            lambda: q.lambda_max,
            count: counts.counts[0],
            ratio: counts.ratios[0],
            constant: counts.constant,
        },
        weyl,
        good_time: GoodTime { c: q.c, n: windows, ratio },
        flow,
    };
    done(vec![Artifact::new("percival.json", json(&report))])
}
