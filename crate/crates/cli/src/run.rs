use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lonestar::channel::{rayleigh_mixture, spherical_wave_channel, ArrayPlacement};
use lonestar::codebook::{beam_pattern_cut, cbf_codebook, taylor_codebook, Cut};
use lonestar::design::{design_lonestar, DesignMode, DesignProblem, LonestarConfig};
use lonestar::geometry::{grid_from_ranges, AngleRange, Direction, UpaGeometry};
use lonestar::io;
use lonestar::montecarlo::{self, ChannelKind, CodebookKind, Scenario, ScenarioConfig, SweepPoint};
use lonestar::quant::Quantizer;
use lonestar::simodel::{Preset, SpatialSiModel};
use lonestar::solverkit::SolverOptions;
use lonestar::CMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{config_err, io_err, CliError};
use crate::{ArrayArgs, CodebookArgs, DesignArgs, DesignOpts, PatternArgs, ScenarioArgs, SimodelArgs};

type Res<T> = Result<T, CliError>;

fn output(path: &Option<PathBuf>) -> Res<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn create(path: &Path) -> Res<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?))
}

fn read_matrix(path: &Path, codebook: bool) -> Res<CMatrix> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let m = if codebook { io::read_codebook_csv(f) } else { io::read_matrix_csv(f) };
    m.map_err(|e| io_err(path, e))
}

fn parse_f64(key: &str, s: &str) -> Res<f64> {
    s.trim().parse().map_err(|_| config_err(format!("--{key}: '{s}' is not a number")))
}

/// `start:step:stop` or a comma-separated list.
fn parse_values(key: &str, s: &str) -> Res<Vec<f64>> {
    if s.contains(':') {
        let r: AngleRange = s.parse().map_err(|e| config_err(format!("--{key}: {e}")))?;
        return Ok(r.values());
    }
    s.split(',').map(|t| parse_f64(key, t)).collect()
}

fn parse_single(key: &str, s: &str) -> Res<f64> {
    match parse_values(key, s)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(config_err(format!("--{key} takes a single value here, got '{s}'"))),
    }
}

fn parse_pair(key: &str, s: &str) -> Res<(f64, f64)> {
    match s.split(',').collect::<Vec<_>>().as_slice() {
        [a, b] => Ok((parse_f64(key, a)?, parse_f64(key, b)?)),
        _ => Err(config_err(format!("--{key}: expected 'a,b', got '{s}'"))),
    }
}

fn parse_direction(key: &str, s: &str) -> Res<Direction> {
    let (az, el) = parse_pair(key, s)?;
    Direction::new(az, el).map_err(|e| config_err(format!("--{key}: {e}")))
}

struct ArraySetup {
    geom: UpaGeometry,
    grid: (AngleRange, AngleRange),
    dirs: Vec<Direction>,
    quant: Quantizer,
}

fn array_setup(a: &ArrayArgs) -> Res<ArraySetup> {
    let geom = UpaGeometry::new(a.rows, a.cols)?;
    let parts: Vec<&str> = a.grid.split(',').collect();
    let [az, el] = parts.as_slice() else {
        return Err(config_err(format!("--grid: expected 'az_range,el_range', got '{}'", a.grid)));
    };
    let az: AngleRange = az.parse().map_err(|e| config_err(format!("--grid: {e}")))?;
    let el: AngleRange = el.parse().map_err(|e| config_err(format!("--grid: {e}")))?;
    let dirs = grid_from_ranges(&az, &el)?;
    let (pb, ab) = parse_pair("bits", &a.bits)?;
    if pb.fract() != 0.0 || ab.fract() != 0.0 || pb < 0.0 || ab < 0.0 {
        return Err(config_err(format!("--bits: expected two non-negative integers, got '{}'", a.bits)));
    }
    let quant = Quantizer::new(pb as u32, ab as u32, a.atten_step)?;
    Ok(ArraySetup { geom, grid: (az, el), dirs, quant })
}

fn lonestar_config(d: &DesignOpts) -> Res<LonestarConfig> {
    let mode = match d.mode.as_str() {
        "full" => DesignMode::Full,
        "beamwise" => DesignMode::Beamwise,
        m => return Err(config_err(format!("--mode: expected 'full' or 'beamwise', got '{m}'"))),
    };
    Ok(LonestarConfig {
        sigma_sq_tx: d.sigma_sq_tx.unwrap_or(d.sigma_sq),
        sigma_sq_rx: d.sigma_sq_rx.unwrap_or(d.sigma_sq),
        eps_sq: d.eps_sq,
        outer_iters: d.outer_iters,
        mode,
        solver: SolverOptions { tol: d.tol, ..SolverOptions::default() },
        ..LonestarConfig::default()
    })
}

fn channel_kind(d: &DesignOpts) -> Res<ChannelKind> {
    if let Some(p) = &d.channel_file {
        return Ok(ChannelKind::Given { h: read_matrix(p, false)? });
    }
    match d.channel.as_str() {
        "spherical" => Ok(ChannelKind::Spherical),
        "mixture" => Ok(ChannelKind::Mixture { zeta_sq: d.zeta_sq }),
        c => Err(config_err(format!("--channel: expected 'spherical' or 'mixture', got '{c}'"))),
    }
}

pub fn codebook(a: CodebookArgs) -> Res<()> {
    let s = array_setup(&a.array)?;
    let f = match a.kind.as_str() {
        "cbf" => cbf_codebook(&s.geom, &s.dirs, &s.quant),
        "taylor" => taylor_codebook(&s.geom, &s.dirs, &s.quant, a.sll, a.nbar)?,
        k => return Err(config_err(format!("--kind: expected 'cbf' or 'taylor', got '{k}'"))),
    };
    let mut out = output(&a.out)?;
    io::write_codebook_csv(&mut out, &f).map_err(|e| CliError::Io(e.to_string()))?;
    out.flush().map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(p) = &a.out {
        let mut meta = toml::Table::new();
        meta.insert("kind".into(), a.kind.clone().into());
        meta.insert("rows".into(), (a.array.rows as i64).into());
        meta.insert("cols".into(), (a.array.cols as i64).into());
        meta.insert("grid".into(), a.array.grid.clone().into());
        meta.insert("bits".into(), a.array.bits.clone().into());
        meta.insert("atten-step".into(), a.array.atten_step.into());
        if a.kind == "taylor" {
            meta.insert("sll".into(), a.sll.into());
            meta.insert("nbar".into(), (a.nbar as i64).into());
        }
        meta.insert("beams".into(), (f.ncols() as i64).into());
        let mp = meta_path(p);
        std::fs::write(&mp, meta.to_string()).map_err(|e| io_err(&mp, e))?;
    }
    Ok(())
}

fn meta_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn design(a: DesignArgs) -> Res<()> {
    let s = array_setup(&a.array)?;
    let cfg = lonestar_config(&a.design)?;
    let h = match channel_kind(&a.design)? {
        ChannelKind::Given { h } => h,
        ChannelKind::Spherical => spherical_wave_channel(&s.geom, &s.geom, &ArrayPlacement::stacked(&s.geom))?,
        ChannelKind::Mixture { zeta_sq } => {
            let h_sw = spherical_wave_channel(&s.geom, &s.geom, &ArrayPlacement::stacked(&s.geom))?;
            rayleigh_mixture(&h_sw, zeta_sq, &mut ChaCha8Rng::seed_from_u64(a.design.seed))?
        }
    };
    let problem = DesignProblem::new(&s.geom, &s.geom, &s.dirs, &s.dirs, &h, &s.quant)?;
    let out = design_lonestar(&problem, &cfg)?;
    let first = out.objective_trace[0];
    let last = *out.objective_trace.last().expect("non-empty trace");
    if !last.is_finite() {
        return Err(CliError::Runtime(format!("design diverged: final objective {last}")));
    }
    std::fs::create_dir_all(&a.out_dir).map_err(|e| io_err(&a.out_dir, e))?;
    let write = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> lonestar::Result<()>| -> Res<()> {
        let p = a.out_dir.join(name);
        let mut w = create(&p)?;
        f(&mut w).map_err(|e| io_err(&p, e))?;
        w.flush().map_err(|e| io_err(&p, e))
    };
    write("f.csv", &|w| io::write_codebook_csv(w, &out.f))?;
    write("w.csv", &|w| io::write_codebook_csv(w, &out.w))?;
    write("report.csv", &|w| io::write_design_report_csv(w, &out.objective_trace, &out.coverage_trace))?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "objective {:.2} dB -> {:.2} dB over {} updates",
        lonestar::metrics::db(first),
        lonestar::metrics::db(last),
        out.objective_trace.len() - 1
    );
    Ok(())
}

fn scenario_config(a: &ScenarioArgs, sigma_sq: Option<f64>) -> Res<ScenarioConfig> {
    let s = array_setup(&a.array)?;
    let mut lc = lonestar_config(&a.design)?;
    if let Some(v) = sigma_sq {
        lc.sigma_sq_tx = v;
        lc.sigma_sq_rx = v;
    }
    let codebook = match a.codebook.as_str() {
        "cbf" => CodebookKind::Cbf,
        "taylor" => CodebookKind::Taylor { sll_db: a.sll, nbar: a.nbar },
        "lonestar" => CodebookKind::Lonestar(lc),
        "file" => {
            let (Some(fp), Some(wp)) = (&a.f_file, &a.w_file) else {
                return Err(config_err("--codebook file needs both --f-file and --w-file"));
            };
            CodebookKind::Given { f: read_matrix(fp, true)?, w: read_matrix(wp, true)? }
        }
        k => return Err(config_err(format!("--codebook: expected cbf, taylor, lonestar or file, got '{k}'"))),
    };
    Ok(ScenarioConfig {
        seed: a.design.seed,
        n_trials: a.trials,
        rows: a.array.rows,
        cols: a.array.cols,
        grid_az: s.grid.0,
        grid_el: s.grid.1,
        user_az_max: a.user_az,
        user_el_max: a.user_el,
        snrbar_tx_db: 0.0,
        snrbar_rx_db: 0.0,
        inrbar_db: 0.0,
        inr_tx_db: a.inr_tx,
        phase_bits: s.quant.phase_bits(),
        amp_bits: s.quant.amp_bits(),
        atten_step_db: s.quant.atten_step_db(),
        channel: channel_kind(&a.design)?,
        eps_sq: a.design.eps_sq,
        codebook,
    })
}

pub fn eval(a: ScenarioArgs) -> Res<()> {
    let sigma = a.sigma_sq_list.as_deref().map(|s| parse_single("sigma-sq-list", s)).transpose()?;
    let mut cfg = scenario_config(&a, sigma)?;
    cfg.snrbar_tx_db = parse_single("snrbar-tx", &a.snrbar_tx)?;
    cfg.snrbar_rx_db = parse_single("snrbar-rx", &a.snrbar_rx)?;
    cfg.inrbar_db = parse_single("inrbar", &a.inrbar)?;
    let scenario = Scenario::build(&cfg)?;
    if let Some(d) = &scenario.design {
        for w in &d.warnings {
            eprintln!("warning: {w}");
        }
    }
    let trials = scenario.run()?;
    let mut out = output(&a.out)?;
    io::write_trials_csv(&mut out, &trials).map_err(|e| CliError::Io(e.to_string()))?;
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn sweep(a: ScenarioArgs) -> Res<()> {
    let sigmas: Vec<Option<f64>> = match &a.sigma_sq_list {
        Some(s) => parse_values("sigma-sq-list", s)?.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let tx = parse_values("snrbar-tx", &a.snrbar_tx)?;
    let rx = parse_values("snrbar-rx", &a.snrbar_rx)?;
    let inr = parse_values("inrbar", &a.inrbar)?;
    let axes = [
        ("sigma_sq", sigmas.len() > 1),
        ("snrbar_tx_db", tx.len() > 1),
        ("snrbar_rx_db", rx.len() > 1),
        ("inrbar_db", inr.len() > 1 || (sigmas.len() == 1 && tx.len() == 1 && rx.len() == 1)),
    ];
    let mut points = Vec::new();
    for sg in &sigmas {
        let base = scenario_config(&a, *sg)?;
        for &t in &tx {
            for &r in &rx {
                for &i in &inr {
                    let cfg = ScenarioConfig { snrbar_tx_db: t, snrbar_rx_db: r, inrbar_db: i, ..base.clone() };
                    let values = [sg.unwrap_or(a.design.sigma_sq), t, r, i];
                    let params = axes
                        .iter()
                        .zip(values)
                        .filter(|((_, on), _)| *on)
                        .map(|((name, _), v)| (name.to_string(), v))
                        .collect();
                    points.push(SweepPoint { params, config: cfg });
                }
            }
        }
    }
    let rows = montecarlo::sweep(&points)?;
    let mut out = output(&a.out)?;
    io::write_sweep_csv(&mut out, &rows).map_err(|e| CliError::Io(e.to_string()))?;
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn simodel(a: SimodelArgs) -> Res<()> {
    let preset: Preset = a.preset.parse().map_err(|e: lonestar::Error| config_err(format!("--preset: {e}")))?;
    let mut out = output(&a.out)?;
    let werr = |e: std::io::Error| CliError::Io(e.to_string());
    if a.dump {
        let p = preset.params();
        let mut t = toml::Table::new();
        t.insert("preset".into(), preset.name().into());
        for (k, v) in [
            ("eirp_dbm", p.eirp_dbm),
            ("p_noise_dbm", p.p_noise_dbm),
            ("g_bar_sq_db", p.g_bar_sq_db),
            ("xi", p.xi),
            ("alpha", p.alpha),
            ("beta", p.beta),
            ("nu_sq", p.nu_sq),
            ("inr_min_db", p.inr_min_db),
            ("inr_max_db", p.inr_max_db),
        ] {
            t.insert(k.into(), v.into());
        }
        write!(out, "{t}").map_err(werr)?;
        return out.flush().map_err(werr);
    }
    let model = SpatialSiModel::new(preset, a.seed)?;
    if a.matrix {
        if a.beams == 0 {
            return Err(config_err("--beams must be positive"));
        }
        let dirs: Vec<Direction> = (0..a.beams)
            .map(|k| {
                let az = if a.beams == 1 { 0.0 } else { -60.0 + 120.0 * k as f64 / (a.beams - 1) as f64 };
                Direction { az_deg: az, el_deg: 0.0 }
            })
            .collect();
        let m = model.inr_matrix_db(&dirs, &dirs);
        let rows = m.iter().enumerate().flat_map(|(j, row)| {
            row.iter().enumerate().map(move |(i, v)| vec![i.to_string(), j.to_string(), v.to_string()])
        });
        io::write_rows(&mut out, &["i".into(), "j".into(), "inr_db".into()], rows).map_err(|e| CliError::Io(e.to_string()))?;
    } else {
        let tx = parse_direction("tx", &a.tx)?;
        let rx = parse_direction("rx", &a.rx)?;
        let gamma = model.coupling(&tx, &rx);
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let rows: Vec<Vec<String>> = (0..a.draws)
            .map(|n| vec![n.to_string(), model.params.draw_inr_db(gamma, &mut rng).to_string()])
            .collect();
        io::write_rows(&mut out, &["n".into(), "inr_db".into()], rows).map_err(|e| CliError::Io(e.to_string()))?;
    }
    out.flush().map_err(werr)
}

pub fn pattern(a: PatternArgs) -> Res<()> {
    let s = array_setup(&a.array)?;
    let beam = match &a.codebook_file {
        Some(p) => {
            let cb = read_matrix(p, true)?;
            if a.beam >= cb.ncols() {
                return Err(config_err(format!("--beam {} out of range for a {}-beam codebook", a.beam, cb.ncols())));
            }
            cb.column(a.beam).into_owned()
        }
        None => {
            let dir = [parse_direction("steer", &a.steer)?];
            let cb = match a.kind.as_str() {
                "cbf" => cbf_codebook(&s.geom, &dir, &s.quant),
                "taylor" => taylor_codebook(&s.geom, &dir, &s.quant, a.sll, a.nbar)?,
                k => return Err(config_err(format!("--kind: expected 'cbf' or 'taylor', got '{k}'"))),
            };
            cb.column(0).into_owned()
        }
    };
    let cut = match a.cut.as_str() {
        "az" => Cut::Azimuth,
        "el" => Cut::Elevation,
        c => return Err(config_err(format!("--cut: expected 'az' or 'el', got '{c}'"))),
    };
    let pat = beam_pattern_cut(&s.geom, &beam, cut, a.fixed, a.step)?;
    let mut out = output(&a.out)?;
    io::write_pattern_csv(&mut out, &pat).map_err(|e| CliError::Io(e.to_string()))?;
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}
