//! Command dispatch and report assembly.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thermoshift_core::dimension::solve_dimension;
use thermoshift_core::equilibrium::{check_finiteness, equilibrium_defect, FinitenessReport};
use thermoshift_core::gibbs::{
    check_density_ratio, check_gibbs_property, check_kolmogorov_consistency, check_pushforward, check_shift_invariance,
    mixing_diagnostic, sample_word_with, DefectReport, MixingReport, RatioReport, TableLedger,
};
use thermoshift_core::ifs::{verify_contraction, verify_separation, ContractionCheck};
use thermoshift_core::potential::{sample_distortion, DistortionSample};
use thermoshift_core::pressure::{
    affordable_depth, certify_recurrence, check_pressure_defs, pressure_estimate, DefsReport, RecurrenceInputs,
};
use thermoshift_core::transfer::{check_bounds_q, convergence_profile, BoundsReport, ConvergenceProfile};
use thermoshift_core::{
    AlphabetCutoff, DimensionParams, DimensionResult, DistortionData, EquilibriumReport, ErrorLedger, GibbsTable,
    GridFunction, HolderData, Model, PressureEstimate, RecurrenceCertificate, Spectrum, Verdict,
};

use crate::config::{ConfigError, SystemConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Pressure,
    Eigen,
    Gibbs,
    Recurrence,
    Equilibrium,
    Dimension,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Eigen => "eigen",
            Command::Gibbs => "gibbs",
            Command::Recurrence => "recurrence",
            Command::Equilibrium => "equilibrium",
            Command::Dimension => "dimension",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// JSON-lines destination for the cylinder table
    pub tables: Option<PathBuf>,
    /// record wall time (makes reports non-reproducible)
    pub timing: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] thermoshift_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    /// 2 for usage and configuration problems, 3 for the word cap, 1 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        use thermoshift_core::Error as E;
        match self {
            RunError::Config(_) | RunError::Io { .. } => 2,
            RunError::Core(E::ResourceLimit { .. }) => 3,
            RunError::Core(
                E::InvalidSymbol(_)
                | E::SymbolOutOfRange { .. }
                | E::InvalidCutoff(_)
                | E::InvalidSystem(_)
                | E::NotContracting { .. }
                | E::BracketInvalid { .. }
                | E::Precondition(_)
                | E::InvalidParameter(_),
            ) => 2,
            RunError::Core(_) => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub command: &'static str,
    pub config: SystemConfig,
    pub results: Results,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        !self.verdict.is_fail()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Results {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pressure: Option<PressureSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen: Option<EigenSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gibbs: Option<GibbsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recurrence: Option<Vec<RecurrenceCertificate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<DimensionResult>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometrySection {
    pub alphabet: u32,
    pub contraction: ContractionCheck,
    pub separated: bool,
    pub holder: HolderData,
    pub distortion: DistortionData,
    pub distortion_sample: DistortionSample,
}

#[derive(Clone, Debug, Serialize)]
pub struct PressureSection {
    pub estimate: PressureEstimate,
    pub definitions: Vec<DefsReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenSection {
    pub lambda: f64,
    pub lambda_dual: f64,
    pub log_lambda: f64,
    /// |log λ_primal − log λ_dual|
    pub dual_gap: f64,
    pub primal_iterations: usize,
    pub primal_residual: f64,
    pub dual_iterations: usize,
    pub atoms: usize,
    pub h_range: (f64, f64),
    pub q: f64,
    pub ledger: ErrorLedger,
    pub bounds: BoundsReport,
    pub profile: ConvergenceProfile,
    pub pressure_point: f64,
    /// |log λ − P point estimate|
    pub point_gap: f64,
    /// 2·log Q/n + pressure ledger + eigenvalue ledger
    pub point_allowance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GibbsSection {
    pub depth: usize,
    /// requested depth when the cap or the work budget forced a smaller one
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requested_depth: Option<usize>,
    pub pressure: f64,
    pub q: f64,
    pub ledger: TableLedger,
    pub kolmogorov: DefectReport,
    pub shift_invariance: DefectReport,
    pub density_ratio: RatioReport,
    pub gibbs_property: RatioReport,
    /// absent when the first-level images overlap
    pub pushforward: Option<DefectReport>,
    pub mixing: MixingReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumSection {
    pub report: EquilibriumReport,
    pub finiteness: FinitenessReport,
    /// mean of −log μ̂[ω]/n over sampled words, a pathwise cross-check
    pub pathwise_entropy: f64,
}

/// Lazily shared intermediate results.
struct Session<'a> {
    config: &'a SystemConfig,
    model: Model,
    cut: AlphabetCutoff,
    spectrum: Option<Spectrum>,
    pressure: Option<PressureEstimate>,
    table: Option<(GibbsTable, Option<usize>)>,
    checks: Vec<Check>,
}

impl<'a> Session<'a> {
    fn check(&mut self, name: impl Into<String>, status: Verdict) {
        self.checks.push(Check {
            name: name.into(),
            status,
        });
    }

    fn pass(&mut self, name: impl Into<String>, ok: bool) {
        self.check(name, if ok { Verdict::Pass } else { Verdict::Fail });
    }

    fn spectrum(&mut self) -> Result<&Spectrum, RunError> {
        if self.spectrum.is_none() {
            let params = self.config.numerics.spectral();
            self.spectrum = Some(Spectrum::compute(&self.model, &self.cut, &params)?);
        }
        Ok(self.spectrum.as_ref().unwrap())
    }

    fn pressure(&mut self) -> Result<&PressureEstimate, RunError> {
        if self.pressure.is_none() {
            let probes = self.symbols(&self.config.pressure.probes);
            self.pressure = Some(pressure_estimate(
                &self.model,
                &self.cut,
                self.config.numerics.n_max,
                &probes,
            )?);
        }
        Ok(self.pressure.as_ref().unwrap())
    }

    /// Requested symbols that exist in the truncated alphabet.
    fn symbols(&self, wanted: &[u32]) -> Vec<u32> {
        let n = self.model.alphabet(&self.cut);
        wanted.iter().copied().filter(|&i| i >= 1 && i <= n).collect()
    }

    /// Deepest table within the requested depth, the word cap and the
    /// work budget.
    fn table_depth(&self) -> usize {
        let ecut = self.model.effective_cutoff(&self.cut);
        let budget = self.config.gibbs.work_budget.min(ecut.word_cap()) as u128;
        let mut depth = self.config.gibbs.depth;
        while depth > 1 && ecut.count_up_to(depth) > budget {
            depth -= 1;
        }
        depth
    }

    fn table(&mut self) -> Result<&(GibbsTable, Option<usize>), RunError> {
        if self.table.is_none() {
            let depth = self.table_depth();
            let requested = self.config.gibbs.depth;
            self.spectrum()?;
            let t = GibbsTable::build(&self.model, &self.cut, depth, self.spectrum.as_ref().unwrap())?;
            self.table = Some((t, (depth < requested).then_some(requested)));
        }
        Ok(self.table.as_ref().unwrap())
    }

    fn geometry(&mut self) -> GeometrySection {
        let sys = self.model.system();
        let ecut = self.model.effective_cutoff(&self.cut);
        let contraction = verify_contraction(sys, &ecut, 4096);
        let separated = verify_separation(sys, &ecut);
        let opts = self.config.verify;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let sample = sample_distortion(&self.model, &self.cut, opts.distortion_samples, opts.max_word, &mut rng);
        self.pass("geometry.contraction", contraction.contracting);
        self.pass("geometry.distortion", sample.violations == 0);
        GeometrySection {
            alphabet: ecut.symbols(),
            contraction,
            separated,
            holder: self.model.holder(),
            distortion: self.model.distortion(),
            distortion_sample: sample,
        }
    }

    fn pressure_section(&mut self) -> Result<PressureSection, RunError> {
        let estimate = self.pressure()?.clone();
        self.pass(
            "pressure.interval",
            estimate.lower <= estimate.upper && estimate.contains(estimate.point),
        );
        let mut definitions = Vec::new();
        for i in self.symbols(&self.config.pressure.probes) {
            let n = affordable_depth(&self.model, &self.cut, self.config.numerics.n_max).max(1);
            let r = check_pressure_defs(&self.model, &self.cut, i, n)?;
            self.check(format!("pressure.definitions[{i}]"), r.verdict);
            definitions.push(r);
        }
        Ok(PressureSection { estimate, definitions })
    }

    fn eigen_section(&mut self) -> Result<EigenSection, RunError> {
        let opts = self.config.eigen;
        let q = self.model.distortion().q;
        let p = self.pressure()?.clone();
        let sp = self.spectrum()?;
        let log_lambda = sp.lambda().ln();
        let uncertainty = sp.log_lambda_uncertainty();
        let bounds = check_bounds_q(sp.operator(), q, opts.bounds_n, log_lambda, uncertainty);
        let x = GridFunction::from_fn(*sp.h().grid(), |x| x);
        let profile = convergence_profile(sp.operator(), &sp.eigen, sp.measure(), &x, opts.profile_n);
        let dual_gap = (log_lambda - sp.lambda_dual().ln()).abs();
        let point_gap = (log_lambda - p.point).abs();
        let point_allowance = 2.0 * q.ln() / p.n_used as f64 + p.ledger.total() + uncertainty;
        let section = EigenSection {
            lambda: sp.lambda(),
            lambda_dual: sp.lambda_dual(),
            log_lambda,
            dual_gap,
            primal_iterations: sp.eigen.iterations,
            primal_residual: sp.eigen.residual,
            dual_iterations: sp.dual.iterations,
            atoms: sp.measure().len(),
            h_range: (sp.h().inf(), sp.h().sup()),
            q,
            ledger: sp.ledger.clone(),
            bounds,
            profile,
            pressure_point: p.point,
            point_gap,
            point_allowance,
        };
        self.pass("eigen.bounds", section.bounds.pass);
        self.pass("eigen.dual_agreement", dual_gap <= 1e-6);
        self.pass("eigen.pressure_agreement", point_gap <= point_allowance);
        Ok(section)
    }

    fn gibbs_section(&mut self, tables: Option<&PathBuf>) -> Result<GibbsSection, RunError> {
        self.table()?;
        let (t, requested) = self.table.as_ref().unwrap();
        let sp = self.spectrum.as_ref().unwrap();
        let depth = t.depth;
        let kolmogorov = check_kolmogorov_consistency(t);
        let shift_invariance = check_shift_invariance(t, depth.saturating_sub(1));
        let density_ratio = check_density_ratio(t);
        let gibbs_property = check_gibbs_property(t);
        let pushforward = if verify_separation(self.model.system(), &self.model.effective_cutoff(&self.cut)) {
            let cell = sp.h().grid().step();
            Some(check_pushforward(t, &self.model, &self.cut, sp.measure(), cell, depth)?)
        } else {
            None
        };
        let mixing = mixing_diagnostic(t, depth, depth.saturating_sub(1));
        if let Some(path) = tables {
            let io = |source| RunError::Io {
                path: path.display().to_string(),
                source,
            };
            let file = File::create(path).map_err(io)?;
            t.write_jsonl(BufWriter::new(file)).map_err(io)?;
        }
        let section = GibbsSection {
            depth,
            requested_depth: *requested,
            pressure: t.pressure,
            q: t.q,
            ledger: t.ledger.clone(),
            kolmogorov,
            shift_invariance,
            density_ratio,
            gibbs_property,
            pushforward,
            mixing,
        };
        self.pass("gibbs.kolmogorov", section.kolmogorov.pass);
        self.pass("gibbs.shift_invariance", section.shift_invariance.pass);
        self.check("gibbs.density_ratio", section.density_ratio.verdict);
        self.check("gibbs.gibbs_property", section.gibbs_property.verdict);
        if let Some(r) = &section.pushforward {
            self.pass("gibbs.pushforward", r.pass);
        }
        self.pass("gibbs.mixing", section.mixing.pass);
        Ok(section)
    }

    fn recurrence_section(&mut self) -> Result<Vec<RecurrenceCertificate>, RunError> {
        let opts = self.config.recurrence.clone();
        let symbols = self.symbols(&opts.symbols);
        let n_max = affordable_depth(&self.model, &self.cut, opts.n_max).max(1);
        let sp = self.spectrum()?;
        let (lambda, uncertainty) = (sp.lambda_dual(), sp.log_lambda_uncertainty());
        let mut out = Vec::new();
        for i in symbols {
            let m_hat = {
                let (t, _) = self.table()?;
                t.level_m(1)[i as usize - 1]
            };
            let inputs = RecurrenceInputs {
                lambda,
                log_lambda_uncertainty: uncertainty,
                m_hat,
            };
            let c = certify_recurrence(&self.model, &self.cut, i, n_max, &inputs)?;
            self.pass(format!("recurrence[{i}]"), c.pass);
            out.push(c);
        }
        Ok(out)
    }

    fn equilibrium_section(&mut self) -> Result<EquilibriumSection, RunError> {
        let p_upper = self.pressure()?.upper;
        let uncertainty = self.spectrum()?.log_lambda_uncertainty();
        self.table()?;
        let (t, _) = self.table.as_ref().unwrap();
        let report = equilibrium_defect(&self.model, t, &self.cut, p_upper, uncertainty);
        let finiteness = check_finiteness(&self.model, t, &self.cut);

        let samples = self.config.gibbs.pathwise_samples;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut total = 0.0;
        for _ in 0..samples {
            let w = sample_word_with(t, t.depth, &mut rng)?;
            total += -t.mu_hat(&w).unwrap_or(f64::NAN).ln() / t.depth as f64;
        }
        let pathwise_entropy = if samples > 0 { total / samples as f64 } else { f64::NAN };

        self.pass("equilibrium.defect", report.pass);
        self.pass("equilibrium.variational", report.variational_ok);
        self.check(
            "equilibrium.rate_monotone",
            if report.rate_monotone {
                Verdict::Pass
            } else {
                Verdict::Flag
            },
        );
        self.pass("equilibrium.finiteness_coherent", finiteness.coherent);
        Ok(EquilibriumSection {
            report,
            finiteness,
            pathwise_entropy,
        })
    }

    fn dimension_section(&mut self) -> Result<DimensionResult, RunError> {
        if self.config.s_param().is_none() {
            return Err(ConfigError::Invalid(
                "dimension needs a family with an s parameter (cf, or affine without weights)".into(),
            )
            .into());
        }
        let opts = self.config.dimension;
        let params = DimensionParams {
            depth: opts.depth,
            tol_s: opts.tol_s,
            max_steps: 60,
            spectral: self.config.numerics.spectral(),
        };
        let config = self.config;
        let family = |s: f64| {
            config
                .model_at(Some(s))
                .map_err(|e| thermoshift_core::Error::InvalidParameter(e.to_string()))
        };
        let r = solve_dimension(family, &self.cut, opts.s_lo, opts.s_hi, &params)?;
        self.pass("dimension.overlap", r.overlap);
        self.pass("dimension.monotone", r.monotone);
        Ok(r)
    }
}

/// Runs one command on a validated configuration.
pub fn run_command(cmd: Command, config: &SystemConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let mut s = Session {
        config,
        model: config.model()?,
        cut: config.cutoff()?,
        spectrum: None,
        pressure: None,
        table: None,
        checks: Vec::new(),
    };
    let mut results = Results::default();
    match cmd {
        Command::Pressure => results.pressure = Some(s.pressure_section()?),
        Command::Eigen => results.eigen = Some(s.eigen_section()?),
        Command::Gibbs => results.gibbs = Some(s.gibbs_section(opts.tables.as_ref())?),
        Command::Recurrence => results.recurrence = Some(s.recurrence_section()?),
        Command::Equilibrium => results.equilibrium = Some(s.equilibrium_section()?),
        Command::Dimension => results.dimension = Some(s.dimension_section()?),
        Command::VerifyAll => {
            results.geometry = Some(s.geometry());
            results.pressure = Some(s.pressure_section()?);
            results.eigen = Some(s.eigen_section()?);
            results.gibbs = Some(s.gibbs_section(opts.tables.as_ref())?);
            results.recurrence = Some(s.recurrence_section()?);
            results.equilibrium = Some(s.equilibrium_section()?);
        }
    }
    let verdict = s
        .checks
        .iter()
        .fold(Verdict::Pass, |acc, c| thermoshift_core::pressure::worst(acc, c.status));
    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name(),
        config: config.clone(),
        results,
        checks: s.checks,
        verdict,
        wall_time_s: opts.timing.then(|| start.elapsed().as_secs_f64()),
    })
}
