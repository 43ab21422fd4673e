use crate::config::{Config, Section};
use crate::output::{fmt9, Cell, Provenance, Table};
use crate::{CavityAction, Cli, CliError, Command, MaterialArg, Outcome, RayArg};
use cascade_core::cavity::{
    brewster_sh_reflectance, calibrate_buildup, impedance_match_t1, optimize_layout, output_correction,
    solve_eigenmode, stability_scan, BowtieLayout, BuildupObservations, MirrorSubstrate, OptimizeOptions,
    ScanParameter,
};
use cascade_core::constants::Constants;
use cascade_core::dispersion::{refractive_index, Material, Polarization, RaySpec};
use cascade_core::focusing::{
    elliptical_optimize_sigma, linbo3_d33_miller, sfg_predict, shg_gamma_predict, NonlinearConstants,
};
use cascade_core::locksim::{
    phase_margin, simulate_lock, tune_gains, CavityLockPlant, Disturbance, LockAutomaton, PztResonance,
};
use cascade_core::phasematch::{
    be_d1_reference, brewster_angle, qpm_period, qpm_phasematch_temperature, second_harmonic, sum_wavelength,
    temperature_acceptance, type1_phasematch_angle, uv_detuning, walkoff_angle, walkoff_parameter_b, Cut, SpectralLine,
};
use std::fmt::Write as _;

pub struct Context<'a> {
    pub cli: &'a Cli,
    pub constants: Constants,
    pub constants_text: String,
}

impl Context<'_> {
    fn config(&self, command: &str) -> Result<Config, CliError> {
        match &self.cli.config {
            Some(p) => Config::load(p),
            None => Err(CliError::Usage(format!("`{command}` needs --config"))),
        }
    }

    fn provenance(&self, command: &str, seed: Option<u64>) -> Provenance {
        Provenance::new(command, &self.constants_text, seed, self.cli.timestamp)
    }
}

pub fn dispatch(ctx: &Context) -> Result<Outcome, CliError> {
    match &ctx.cli.command {
        Command::Index { material, ray, theta_deg, wavelength_nm, temperature_c } => {
            index(ctx, *material, *ray, *theta_deg, *wavelength_nm, *temperature_c)
        }
        Command::Phasematch => phasematch(ctx),
        Command::SfgCurve => sfg_curve(ctx),
        Command::Cavity { action } => cavity(ctx, *action),
        Command::ShgCurve => shg_curve(ctx),
        Command::Tune { pump_nm, signal_nm, sfg_nm } => tune(ctx, *pump_nm, *signal_nm, sfg_nm),
        Command::Locksim => locksim(ctx),
    }
}

fn text_only(report: String) -> Outcome {
    Outcome { report, files: Vec::new(), csv_primary: false }
}

fn index(
    ctx: &Context,
    material: MaterialArg,
    ray: RayArg,
    theta_deg: f64,
    nm: f64,
    t: f64,
) -> Result<Outcome, CliError> {
    let m = match material {
        MaterialArg::Bbo => Material::bbo(&ctx.constants),
        MaterialArg::Linbo3 => Material::congruent_linbo3(&ctx.constants),
    };
    let spec = match ray {
        RayArg::O => RaySpec::ordinary(),
        RayArg::E => RaySpec::extraordinary(theta_deg.to_radians()),
    };
    let n = refractive_index(&m, spec, nm * 1e-9, t)?;
    Ok(text_only(format!("n = {}\n", fmt9(n))))
}

fn phasematch(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.config("phasematch")?;
    let c = &ctx.constants;
    let mut report = String::new();
    let mut files = Vec::new();
    let bbo = cfg.optional_section("bbo_shg", &["fundamental_nm", "crystal_length_mm"])?;
    let ppln =
        cfg.optional_section("ppln_sfg", &["pump_nm", "signal_nm", "length_mm", "period_um", "temperature_c"])?;
    if bbo.is_none() && ppln.is_none() {
        return Err(CliError::Usage("phasematch needs a [bbo_shg] or [ppln_sfg] section".into()));
    }
    if let Some(s) = bbo {
        let fund = SpectralLine::from_nm(s.f64("fundamental_nm")?)?;
        let length = s.f64("crystal_length_mm")? * 1e-3;
        let m = Material::bbo(c);
        let theta = type1_phasematch_angle(&m, fund)?;
        let n = m.principal_index(Polarization::Ordinary, fund.wavelength(), 20.0)?;
        let rho = walkoff_angle(&m, theta, second_harmonic(fund))?;
        let b = walkoff_parameter_b(rho, n * fund.k0(), length);
        let _ = writeln!(report, "[bbo_shg]");
        let _ = writeln!(report, "theta_pm_deg = {}", fmt9(theta.to_degrees()));
        let _ = writeln!(report, "brewster_deg = {}", fmt9(brewster_angle(n).to_degrees()));
        let _ = writeln!(report, "walkoff_mrad = {}", fmt9(rho * 1e3));
        let _ = writeln!(report, "walkoff_b = {}", fmt9(b));
    }
    if let Some(s) = ppln {
        let pump = SpectralLine::from_nm(s.f64("pump_nm")?)?;
        let signal = SpectralLine::from_nm(s.f64("signal_nm")?)?;
        let length = s.f64("length_mm")? * 1e-3;
        let m = Material::congruent_linbo3(c);
        let (period, temperature) = match (s.opt_f64("period_um")?, s.opt_f64("temperature_c")?) {
            (Some(p), _) => (p * 1e-6, qpm_phasematch_temperature(&m, pump, signal, p * 1e-6)?),
            (None, Some(t)) => (qpm_period(&m, pump, signal, t)?, t),
            (None, None) => return Err(CliError::Usage("[ppln_sfg] needs `period_um` or `temperature_c`".into())),
        };
        let curve = temperature_acceptance(&m, pump, signal, period, length, 201)?;
        let _ = writeln!(report, "[ppln_sfg]");
        let _ = writeln!(report, "sfg_nm = {}", fmt9(sum_wavelength(pump, signal).nm()));
        let _ = writeln!(report, "period_um = {}", fmt9(period * 1e6));
        let _ = writeln!(report, "temperature_c = {}", fmt9(temperature));
        let _ = writeln!(report, "fwhm_c = {}", fmt9(curve.fwhm));
        let mut t = Table::new(&["temperature_c", "relative_efficiency"]);
        for (temp, eff) in &curve.samples {
            t.push(vec![(*temp).into(), (*eff).into()]);
        }
        files.push(("ppln_acceptance.csv".into(), t.render(&ctx.provenance("phasematch", None))));
    }
    files.push(("phasematch.txt".into(), format!("{}{report}", ctx.provenance("phasematch", None).header())));
    Ok(Outcome { report, files, csv_primary: false })
}

fn grid(max: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect()
}

fn sfg_curve(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.config("sfg-curve")?;
    let s = cfg.section(
        "sfg",
        &[
            "pump_nm",
            "signal_nm",
            "length_mm",
            "mode",
            "eta_pct_per_w_cm",
            "pump_waist_um",
            "signal_waist_um",
            "period_um",
            "temperature_c",
            "product_max_w2",
            "points",
        ],
    )?;
    let length = s.f64("length_mm")? * 1e-3;
    let mode = s.opt_str("mode")?.unwrap_or("measured");
    let eta = match mode {
        // %·W⁻¹·cm⁻¹ and W⁻¹·m⁻¹ coincide numerically.
        "measured" => s.f64("eta_pct_per_w_cm")?,
        "predicted" => predicted_eta(ctx, &s, length)?,
        other => return Err(CliError::Usage(format!("[sfg] mode must be `measured` or `predicted`, got `{other}`"))),
    };
    let slope = eta * length;
    let mut t = Table::new(&["product_w2", "p626_w"]);
    for x in grid(s.f64_or("product_max_w2", 25.0)?, s.usize_or("points", 26)?) {
        t.push(vec![x.into(), (slope * x).into()]);
    }
    let report = format!("mode = {mode}\neta_pct_per_w_cm = {}\nslope_per_w = {}\n", fmt9(eta), fmt9(slope));
    Ok(Outcome {
        report,
        files: vec![("sfg_curve.csv".into(), t.render(&ctx.provenance("sfg-curve", None)))],
        csv_primary: true,
    })
}

fn predicted_eta(ctx: &Context, s: &Section, length: f64) -> Result<f64, CliError> {
    let c = &ctx.constants;
    let m = Material::congruent_linbo3(c);
    let pump = SpectralLine::from_nm(s.f64("pump_nm")?)?;
    let signal = SpectralLine::from_nm(s.f64("signal_nm")?)?;
    let temperature = match (s.opt_f64("temperature_c")?, s.opt_f64("period_um")?) {
        (Some(t), _) => t,
        (None, Some(p)) => qpm_phasematch_temperature(&m, pump, signal, p * 1e-6)?,
        (None, None) => {
            return Err(CliError::Usage("[sfg] predicted mode needs `temperature_c` or `period_um`".into()))
        }
    };
    let d33 = linbo3_d33_miller(
        &m,
        c.nonlinear.linbo3_d33_pm_per_v,
        SpectralLine::from_nm(c.nonlinear.linbo3_d33_fundamental_nm)?,
        c.nonlinear.linbo3_d33_temperature_c,
        pump,
        signal,
        temperature,
    )?;
    let waists = (s.f64("pump_waist_um")? * 1e-6, s.f64("signal_waist_um")? * 1e-6);
    let p = sfg_predict(
        &m,
        pump,
        1.0,
        signal,
        1.0,
        length,
        temperature,
        waists,
        &NonlinearConstants::ppln_first_order(d33),
    )?;
    Ok(p.eta)
}

const LAYOUT_KEYS: &[&str] =
    &["d_mc_mm", "l_long_mm", "alpha_full_deg", "r_mirror_mm", "crystal_length_mm", "fundamental_nm"];

fn layout_from(ctx: &Context, s: &Section) -> Result<BowtieLayout, CliError> {
    Ok(BowtieLayout::bbo(
        &ctx.constants,
        s.f64("d_mc_mm")? * 1e-3,
        s.f64("l_long_mm")? * 1e-3,
        s.f64("alpha_full_deg")?.to_radians(),
        s.f64("r_mirror_mm")? * 1e-3,
        s.f64("crystal_length_mm")? * 1e-3,
        SpectralLine::from_nm(s.f64_or("fundamental_nm", 626.342)?)?,
    )?)
}

fn eigen_report(ctx: &Context, layout: &BowtieLayout) -> Result<String, CliError> {
    let e = solve_eigenmode(layout)?;
    let focus = elliptical_optimize_sigma(e.zeta_x, e.zeta_y, e.b)?;
    let theta = match layout.crystal.cut {
        Cut::Angle { theta, .. } => theta,
        Cut::Poled { .. } => 0.0,
    };
    let k = NonlinearConstants::bbo_type1(ctx.constants.nonlinear.bbo_d22_pm_per_v, theta);
    let g = shg_gamma_predict(
        &layout.crystal.material,
        layout.wavelength,
        layout.crystal.length,
        e.b,
        (e.crystal_waists.w0_x, e.crystal_waists.w0_y),
        &k,
    )?;
    let mut r = String::new();
    let _ = writeln!(r, "d_mc_mm = {}", fmt9(layout.d_mc * 1e3));
    let _ = writeln!(r, "l_long_mm = {}", fmt9(layout.l_long * 1e3));
    let _ = writeln!(r, "alpha_full_deg = {}", fmt9(layout.alpha_full.to_degrees()));
    let _ = writeln!(r, "half_trace_t = {}", fmt9(e.stability_x));
    let _ = writeln!(r, "half_trace_s = {}", fmt9(e.stability_y));
    let _ = writeln!(r, "crystal_waist_t_um = {}", fmt9(e.crystal_waists.w0_x * 1e6));
    let _ = writeln!(r, "crystal_waist_s_um = {}", fmt9(e.crystal_waists.w0_y * 1e6));
    let _ = writeln!(r, "crystal_ellipticity = {}", fmt9(e.crystal_waists.ellipticity));
    let _ = writeln!(r, "secondary_waist_t_um = {}", fmt9(e.secondary_waists.w0_x * 1e6));
    let _ = writeln!(r, "secondary_waist_s_um = {}", fmt9(e.secondary_waists.w0_y * 1e6));
    let _ = writeln!(r, "secondary_ellipticity = {}", fmt9(e.secondary_waists.ellipticity));
    let _ = writeln!(r, "zeta_t = {}", fmt9(e.zeta_x));
    let _ = writeln!(r, "zeta_s = {}", fmt9(e.zeta_y));
    let _ = writeln!(r, "walkoff_b = {}", fmt9(e.b));
    let _ = writeln!(r, "sigma = {}", fmt9(focus.config.sigma));
    let _ = writeln!(r, "h = {}", fmt9(focus.h));
    let _ = writeln!(r, "gamma_per_w = {}", fmt9(g.conversion_coefficient.unwrap_or(f64::NAN)));
    Ok(r)
}

fn cavity(ctx: &Context, action: CavityAction) -> Result<Outcome, CliError> {
    let cfg = ctx.config("cavity")?;
    let layout = layout_from(ctx, &cfg.section("layout", LAYOUT_KEYS)?)?;
    let prov = ctx.provenance("cavity", None);
    match action {
        CavityAction::Solve => {
            let report = eigen_report(ctx, &layout)?;
            Ok(Outcome {
                files: vec![("cavity_solve.txt".into(), format!("{}{report}", prov.header()))],
                report,
                csv_primary: false,
            })
        }
        CavityAction::Design => {
            let mut opts = OptimizeOptions::default();
            if let Some(s) = cfg.optional_section("optimize", &["overlap_tolerance", "max_secondary_ellipticity"])? {
                opts.overlap_tolerance = s.f64_or("overlap_tolerance", opts.overlap_tolerance)?;
                opts.max_secondary_ellipticity =
                    s.f64_or("max_secondary_ellipticity", opts.max_secondary_ellipticity)?;
            }
            let o = optimize_layout(&layout, opts)?;
            let mut report = format!(
                "stability_center_d_mc_mm = {}\nstability_center_alpha_deg = {}\n",
                fmt9(o.stability_center.0 * 1e3),
                fmt9(o.stability_center.1.to_degrees())
            );
            report.push_str(&eigen_report(ctx, &o.layout)?);
            if let Some(s) =
                cfg.optional_section("output", &["substrate_index", "thickness_mm", "r_front_mm", "r_back_mm"])?
            {
                let d = MirrorSubstrate::default();
                let sub = MirrorSubstrate {
                    index: s.f64_or("substrate_index", d.index)?,
                    thickness: s.f64_or("thickness_mm", d.thickness * 1e3)? * 1e-3,
                    r_front: s.f64_or("r_front_mm", d.r_front * 1e3)? * 1e-3,
                    r_back: s.f64_or("r_back_mm", d.r_back * 1e3)? * 1e-3,
                };
                let corr = output_correction(&o.layout, &o.eigenmode, sub)?;
                let _ = writeln!(report, "cylinder_focal_length_mm = {}", fmt9(corr.focal_length * 1e3));
                let _ = writeln!(report, "cylinder_distance_from_m1_mm = {}", fmt9(corr.distance_from_m1 * 1e3));
            }
            Ok(Outcome {
                files: vec![("cavity_design.txt".into(), format!("{}{report}", prov.header()))],
                report,
                csv_primary: false,
            })
        }
        CavityAction::Sweep => {
            let s = cfg.section("sweep", &["parameter", "from_mm", "to_mm", "from_deg", "to_deg", "points"])?;
            let param = s
                .opt_str("parameter")?
                .ok_or_else(|| CliError::Usage("missing required key `parameter` in [sweep]".into()))?;
            let (p, column, lo, hi) = match param {
                "d_mc" => (ScanParameter::DMc, "d_mc_mm", s.f64("from_mm")? * 1e-3, s.f64("to_mm")? * 1e-3),
                "l_long" => (ScanParameter::LLong, "l_long_mm", s.f64("from_mm")? * 1e-3, s.f64("to_mm")? * 1e-3),
                "alpha_full" => (
                    ScanParameter::AlphaFull,
                    "alpha_full_deg",
                    s.f64("from_deg")?.to_radians(),
                    s.f64("to_deg")?.to_radians(),
                ),
                other => {
                    return Err(CliError::Usage(format!(
                        "[sweep] parameter `{other}` is not d_mc, l_long or alpha_full"
                    )))
                }
            };
            let scale = |v: f64| if p == ScanParameter::AlphaFull { v.to_degrees() } else { v * 1e3 };
            let scan = stability_scan(&layout, p, lo, hi, s.usize_or("points", 401)?)?;
            let mut t = Table::new(&[column, "half_trace_t", "half_trace_s", "stable"]);
            for r in &scan.rows {
                let stable = if r.stable_x() && r.stable_y() { 1.0 } else { 0.0 };
                t.push(vec![scale(r.value).into(), r.m_x.into(), r.m_y.into(), Cell::Num(stable)]);
            }
            let mut report = String::new();
            for (a, b) in &scan.overlap_windows {
                let _ = writeln!(report, "stable_window = {} .. {}", fmt9(scale(*a)), fmt9(scale(*b)));
            }
            if scan.overlap_windows.is_empty() {
                report.push_str("stable_window = none\n");
            }
            Ok(Outcome { report, files: vec![("cavity_sweep.csv".into(), t.render(&prov))], csv_primary: true })
        }
    }
}

fn shg_curve(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.config("shg-curve")?;
    let s = cfg.section(
        "shg",
        &[
            "t1_pct",
            "conversion_main_pct",
            "p_design_w",
            "linear_lo_w",
            "linear_hi_w",
            "r_brewster_pct",
            "fundamental_nm",
            "p_max_w",
            "points",
        ],
    )?;
    let r_brewster = match s.opt_f64("r_brewster_pct")? {
        Some(r) => r * 1e-2,
        None => {
            let fund = SpectralLine::from_nm(s.f64_or("fundamental_nm", 626.342)?)?;
            let m = Material::bbo(&ctx.constants);
            let n_sh = m.principal_index(Polarization::Extraordinary, second_harmonic(fund).wavelength(), 20.0)?;
            let n_f = m.principal_index(Polarization::Ordinary, fund.wavelength(), 20.0)?;
            brewster_sh_reflectance(n_sh, n_f)?
        }
    };
    let p_design = s.f64_or("p_design_w", 1.0)?;
    let obs = BuildupObservations {
        t1: s.f64("t1_pct")? * 1e-2,
        conversion_main: s.f64("conversion_main_pct")? * 1e-2,
        r_brewster,
        p_design,
        linear_region: (s.f64_or("linear_lo_w", p_design)?, s.f64("linear_hi_w")?),
    };
    let model = calibrate_buildup(obs)?;
    let p_max = s.f64_or("p_max_w", obs.linear_region.1)?;
    let mut t = Table::new(&["p_in_w", "p_circ_w", "p_sh_main_w", "conversion_main"]);
    for p in grid(p_max, s.usize_or("points", 41)?) {
        let sol = model.solve(p)?;
        t.push(vec![p.into(), sol.p_circ.into(), sol.p_sh_main.into(), sol.conversion_main.into()]);
    }
    let top = model.solve(p_max)?;
    let mut report = String::new();
    let _ = writeln!(report, "r_brewster = {}", fmt9(r_brewster));
    let _ = writeln!(report, "passive_loss = {}", fmt9(model.l_passive));
    let _ = writeln!(report, "gamma_per_w = {}", fmt9(model.gamma));
    let _ =
        writeln!(report, "t1_impedance_match = {}", fmt9(impedance_match_t1(model.l_passive, model.gamma, p_design)?));
    let _ = writeln!(report, "low_power_slope = {}", fmt9(model.log_slope(1e-4 * p_design)?));
    let _ = writeln!(report, "slope_at_p_max = {}", fmt9(model.log_slope(p_max)?));
    let _ = writeln!(report, "p_sh_main_at_p_max_w = {}", fmt9(top.p_sh_main));
    Ok(Outcome {
        report,
        files: vec![("shg_curve.csv".into(), t.render(&ctx.provenance("shg-curve", None)))],
        csv_primary: true,
    })
}

fn tune(ctx: &Context, pump: Option<f64>, signal: Option<f64>, sfg_nm: &[f64]) -> Result<Outcome, CliError> {
    let mut lines = Vec::new();
    if let (Some(p), Some(s)) = (pump, signal) {
        lines.push(sum_wavelength(SpectralLine::from_nm(p)?, SpectralLine::from_nm(s)?));
    }
    for &nm in sfg_nm {
        lines.push(SpectralLine::from_nm(nm)?);
    }
    if lines.is_empty() {
        return Err(CliError::Usage("tune needs --pump-nm with --signal-nm, or --sfg-nm".into()));
    }
    let reference = be_d1_reference();
    let mut t = Table::new(&["sfg_nm", "uv_nm", "detuning_ghz"]);
    let mut report = String::new();
    for l in &lines {
        let uv = second_harmonic(*l);
        let d = uv_detuning(uv, reference);
        t.push(vec![l.nm().into(), uv.nm().into(), d.into()]);
        let _ = writeln!(report, "{} nm -> {} nm, {} GHz", fmt9(l.nm()), fmt9(uv.nm()), fmt9(d));
    }
    if lines.len() > 1 {
        let f: Vec<f64> = lines.iter().map(|l| second_harmonic(*l).frequency()).collect();
        let span =
            f.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - f.iter().cloned().fold(f64::INFINITY, f64::min);
        let _ = writeln!(report, "uv_span_ghz = {}", fmt9(span * 1e-9));
    }
    Ok(Outcome { report, files: vec![("tune.csv".into(), t.render(&ctx.provenance("tune", None)))], csv_primary: true })
}

fn locksim(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.config("locksim")?;
    let s = cfg.section(
        "locksim",
        &[
            "t1_pct",
            "l_passive_pct",
            "round_trip_mm",
            "pzt_gain_mhz_per_v",
            "pzt_f0_khz",
            "pzt_q",
            "bandwidth_khz",
            "sample_rate_mhz",
            "duration_ms",
            "initial_offset_fwhm",
            "sine_amplitude_fwhm",
            "sine_frequency_khz",
            "step_time_ms",
            "step_rad",
            "walk_rms_rad_per_sqrt_s",
            "scan_ms",
            "decimate",
        ],
    )?;
    let mut plant = CavityLockPlant::from_cavity(
        s.f64("t1_pct")? * 1e-2,
        s.f64("l_passive_pct")? * 1e-2,
        s.f64("round_trip_mm")? * 1e-3,
    )?;
    if let Some(g) = s.opt_f64("pzt_gain_mhz_per_v")? {
        plant.pzt_gain = g * 1e6;
    }
    if let Some(f0) = s.opt_f64("pzt_f0_khz")? {
        plant.pzt_resonance = Some(PztResonance { f0: f0 * 1e3, q: s.f64_or("pzt_q", 10.0)? });
    }
    let fs = s.f64_or("sample_rate_mhz", 1.0)? * 1e6;
    let servo = tune_gains(&plant, s.f64_or("bandwidth_khz", 50.0)? * 1e3, fs)?;
    let mut automaton = LockAutomaton::default();
    if let Some(ms) = s.opt_f64("scan_ms")? {
        automaton.scan_duration = ms * 1e-3;
    }
    let fwhm = plant.fwhm_phase();
    let seed = ctx.cli.seed.unwrap_or(0);
    let mut dist = Disturbance { offset: s.f64_or("initial_offset_fwhm", 0.0)? * fwhm, ..Default::default() };
    if let Some(a) = s.opt_f64("sine_amplitude_fwhm")? {
        dist.sine = Some((a * fwhm, s.f64("sine_frequency_khz")? * 1e3));
    }
    if let Some(a) = s.opt_f64("step_rad")? {
        dist.step = Some((s.f64("step_time_ms")? * 1e-3, a));
    }
    if let Some(rms) = s.opt_f64("walk_rms_rad_per_sqrt_s")? {
        dist.random_walk = Some((rms, seed));
    }
    let trace = simulate_lock(&plant, &servo, automaton, &dist, s.f64("duration_ms")? * 1e-3)?;
    let every = s.usize_or("decimate", 1)?.max(1);
    let prov = ctx.provenance("locksim", Some(seed));
    let mut t = Table::new(&["t_s", "delta_rad", "error", "control_v", "state"]);
    for i in (0..trace.time.len()).step_by(every) {
        t.push(vec![
            trace.time[i].into(),
            trace.delta[i].into(),
            trace.error[i].into(),
            trace.control[i].into(),
            trace.state[i].label().into(),
        ]);
    }
    let mut events = prov.header();
    for e in &trace.events {
        events.push_str(&e.line());
        events.push('\n');
    }
    let mut report = String::new();
    let _ = writeln!(report, "kp = {}", fmt9(servo.kp));
    let _ = writeln!(report, "ki = {}", fmt9(servo.ki));
    if let Some((pm, fc)) = phase_margin(&plant, servo.kp, servo.ki, fs) {
        let _ = writeln!(report, "crossover_hz = {}", fmt9(fc));
        let _ = writeln!(report, "phase_margin_deg = {}", fmt9(pm));
    }
    let _ = writeln!(report, "events = {}", trace.events.len());
    if let Some(last) = trace.state.last() {
        let _ = writeln!(report, "final_state = {}", last.label());
    }
    Ok(Outcome {
        report,
        files: vec![("locksim.csv".into(), t.render(&prov)), ("locksim_events.txt".into(), events)],
        csv_primary: true,
    })
}
