use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use serde::Deserialize;

use qlti::apps::{
    cavity_f, hidden_squeezing_metrics, lossy_squeezer_sdm, oscillator_bound, oscillator_transfer, r_lim,
    two_mode_sigma_delta, CavityLossModel, FeedbackOscillator,
};
use qlti::decompose::{optical_decomposition, OpticalCircuit};
use qlti::detect::{
    multimode_reconstruct, photocurrent_spectrum, reconstruct_sdm, synodyne_q, DeltaLine, LocalOscillator, SampledLo,
};
use qlti::group::residual_matrix;
use qlti::io::{self, CircuitDocument, CsvTable, MatfnDocument, NoiseDocument};
use qlti::linalg::{c, select, CMat, CVec};
use qlti::quantize::{dilate, minimal_noise_with};
use qlti::sdm::{open_system_bound, uncertainty_margin, williamson_regularized, SpectralDensityMatrix};
use qlti::transfer::{sample_transfer_function, TransferSpec};
use qlti::{Error, FrequencyGrid, MatrixFunction, Result};

use crate::cli::{Command, Demo, DetectArgs, DetectMode};

pub const LO_SCHEMA: &str = "qlti.lo/1";

#[derive(Deserialize)]
struct SchemaProbe {
    schema: String,
}

fn emit_table(table: &CsvTable, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => table.write(p),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write_to(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn emit_json<T: serde::Serialize>(doc: &T, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => io::write_json(p, doc),
        None => {
            println!("{}", io::to_json(doc)?);
            Ok(())
        }
    }
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |j| format!("{prefix}_{j}"))
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Check { input, against, tol, rec_tol, output } => check(&input, against.as_deref(), tol, rec_tol, output.as_deref()),
        Command::Sample { spec, grid, output } => {
            let spec: TransferSpec = io::read_json(&spec)?;
            let m = sample_transfer_function(&spec, &grid.require()?)?;
            emit_json(&MatfnDocument::new(&m, None), output.as_deref())
        }
        Command::Quantize { input, rank_tol, output } => {
            let g = io::read_matfn(&input)?;
            let model = minimal_noise_with(&g, rank_tol)?;
            info!("{} noise mode(s) at most, {} near-threshold warning(s)", model.ell_max(), model.warnings.len());
            emit_json(&NoiseDocument::new(&model), output.as_deref())
        }
        Command::Dilate { input, output } => {
            let model = io::read_json::<NoiseDocument>(&input)?.to_model()?;
            let d = dilate(&model)?;
            info!(
                "dilation layout: {} inputs, {} noise modes, {} outputs, max residual {:.3e}",
                d.layout.inputs,
                d.layout.noises,
                d.layout.outputs,
                d.max_residual()?
            );
            emit_json(&MatfnDocument::new(&d.m_ext, None), output.as_deref())
        }
        Command::Decompose { input, meshes, output } => {
            let m = io::read_matfn(&input)?;
            let circuit = optical_decomposition(&m)?;
            emit_json(&CircuitDocument::new(&circuit, meshes)?, output.as_deref())?;
            let failures: Vec<Error> = circuit
                .samples
                .into_iter()
                .filter_map(|s| s.err())
                .collect();
            match failures.len() {
                0 => Ok(()),
                1 => Err(failures.into_iter().next().unwrap()),
                _ => Err(Error::Frequencies(failures)),
            }
        }
        Command::Williamson { input, epsilon, output } => williamson_table(&input, epsilon, output.as_deref()),
        Command::Bound { input, input_sdm, noise_sdm, output } => {
            bound_table(&input, input_sdm.as_deref(), noise_sdm.as_deref(), output.as_deref())
        }
        Command::Detect(args) => detect(args),
        Command::Demo(demo) => run_demo(demo),
    }
}

fn relative_group_residual(m: &CMat) -> Result<(f64, f64)> {
    let r = residual_matrix(m)?;
    Ok((r, r / m.norm_squared().max(1.0)))
}

fn circuit_matrices(circuit: &OpticalCircuit) -> Result<Vec<CMat>> {
    circuit
        .samples
        .iter()
        .zip(circuit.grid.iter())
        .enumerate()
        .map(|(k, (s, w))| {
            s.as_ref()
                .map(|f| f.matrix())
                .map_err(|e| Error::AtFrequency { index: k, omega: w, source: Box::new(Error::Numeric(e.to_string())) })
        })
        .collect()
}

fn check(input: &Path, against: Option<&Path>, tol: f64, rec_tol: f64, output: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(input)?;
    let probe: SchemaProbe = io::from_json(&text)?;
    let (grid, mats) = match probe.schema.as_str() {
        io::MATFN_SCHEMA => {
            let m = io::from_json::<MatfnDocument>(&text)?.to_matfn()?;
            (m.grid().clone(), m.into_samples())
        }
        io::CIRCUIT_SCHEMA => {
            let circuit = io::from_json::<CircuitDocument>(&text)?.to_circuit()?;
            (circuit.grid.clone(), circuit_matrices(&circuit)?)
        }
        io::NOISE_SCHEMA => {
            let model = io::from_json::<NoiseDocument>(&text)?.to_model()?;
            let mut table = CsvTable::new("qlti.check.noise/1", ["omega", "constraint_residual"]);
            for (k, w) in model.grid().iter().enumerate() {
                table.push(vec![w, model.constraint_residual(k)?])?;
            }
            return emit_table(&table, output);
        }
        other => return Err(Error::Schema(format!("cannot check a {other:?} document"))),
    };
    let target = against.map(io::read_matfn).transpose()?;
    if let Some(t) = &target {
        if t.grid() != &grid || t.shape() != mats[0].shape() {
            return Err(Error::Shape("--against document has a different grid or shape".into()));
        }
    }

    let mut cols = vec!["omega", "residual", "relative_residual"];
    if target.is_some() {
        cols.push("reconstruction");
    }
    let mut table = CsvTable::new("qlti.check/1", cols);
    let mut failures = Vec::new();
    for (k, (w, m)) in grid.iter().zip(&mats).enumerate() {
        let (res, rel) = relative_group_residual(m)?;
        let mut row = vec![w, res, rel];
        if rel > tol {
            failures.push(Error::AtFrequency {
                index: k,
                omega: w,
                source: Box::new(Error::NotInGroup { residual: rel, tolerance: tol }),
            });
        }
        if let Some(t) = &target {
            let reference = t.sample(k);
            let rec = (m - reference).norm() / reference.norm().max(f64::MIN_POSITIVE);
            row.push(rec);
            if rec > rec_tol {
                failures.push(Error::AtFrequency {
                    index: k,
                    omega: w,
                    source: Box::new(Error::Numeric(format!("reconstruction residual {rec:.3e} exceeds {rec_tol:.3e}"))),
                });
            }
        }
        table.push(row)?;
    }
    emit_table(&table, output)?;
    match failures.len() {
        0 => Ok(()),
        1 => Err(failures.pop().unwrap()),
        _ => Err(Error::Frequencies(failures)),
    }
}

fn williamson_table(input: &Path, epsilon: f64, output: Option<&Path>) -> Result<()> {
    let s = io::read_sdm(input)?;
    let form = williamson_regularized(&s, epsilon)?;
    let n = s.n();
    let cols: Vec<String> = std::iter::once("omega".to_owned())
        .chain(numbered("sigma", n))
        .chain(numbered("delta", n))
        .chain(std::iter::once("margin".to_owned()))
        .collect();
    let mut table = CsvTable::new("qlti.williamson/1", cols);
    for (k, w) in s.grid().iter().enumerate() {
        let mut row = vec![w];
        row.extend(&form.sigma[k]);
        row.extend(&form.delta[k]);
        row.push(uncertainty_margin(&s, w)?);
        table.push(row)?;
    }
    emit_table(&table, output)
}

fn bound_table(input: &Path, input_sdm: Option<&Path>, noise_sdm: Option<&Path>, output: Option<&Path>) -> Result<()> {
    let model = io::read_json::<NoiseDocument>(input)?.to_model()?;
    let s_in = input_sdm.map(io::read_sdm).transpose()?;
    let s_noise = noise_sdm.map(io::read_sdm).transpose()?;
    let m = model.outputs();
    let cols: Vec<String> = std::iter::once("omega".to_owned())
        .chain(numbered("lhs", m))
        .chain(numbered("rhs", m))
        .chain(std::iter::once("margin".to_owned()))
        .collect();
    let mut table = CsvTable::new("qlti.bound/1", cols);
    for w in model.grid().iter() {
        let b = open_system_bound(&model.g, &model.n, s_in.as_ref(), s_noise.as_ref(), w)?;
        let mut row = vec![w];
        row.extend(b.iter().map(|x| x.lhs));
        row.extend(b.iter().map(|x| x.rhs));
        row.push(b.iter().map(|x| x.lhs - x.rhs).fold(f64::INFINITY, f64::min));
        table.push(row)?;
    }
    emit_table(&table, output)
}

#[derive(Deserialize)]
struct LoLine {
    offset: f64,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Deserialize)]
struct LoSampled {
    offsets: Vec<f64>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// `qlti.lo/1`: delta lines and an optional sampled part, weights in qq..pp order.
#[derive(Deserialize)]
struct LoDocument {
    schema: String,
    #[serde(default)]
    lines: Vec<LoLine>,
    #[serde(default)]
    sampled: Option<LoSampled>,
}

fn complex_vec(re: &[f64], im: &[f64]) -> Result<CVec> {
    if re.len() != im.len() || re.len() % 2 != 0 {
        return Err(Error::Schema("LO weights need matching, even-length re and im".into()));
    }
    Ok(CVec::from_iterator(re.len(), re.iter().zip(im).map(|(&a, &b)| c(a, b))))
}

fn read_lo(path: &Path) -> Result<LocalOscillator> {
    let doc: LoDocument = io::read_json(path)?;
    if doc.schema != LO_SCHEMA {
        return Err(Error::Schema(format!("schema is {:?}, expected {LO_SCHEMA:?}", doc.schema)));
    }
    let lines = doc
        .lines
        .iter()
        .map(|l| Ok(DeltaLine { offset: l.offset, weight: complex_vec(&l.re, &l.im)? }))
        .collect::<Result<Vec<_>>>()?;
    let sampled = doc
        .sampled
        .map(|s| {
            if s.re.len() != s.offsets.len() || s.im.len() != s.offsets.len() {
                return Err(Error::Schema("sampled LO needs one weight per offset".into()));
            }
            let alpha = s.re.iter().zip(&s.im).map(|(r, i)| complex_vec(r, i)).collect::<Result<Vec<_>>>()?;
            Ok(SampledLo { offsets: s.offsets, alpha })
        })
        .transpose()?;
    Ok(LocalOscillator::General { lines, sampled })
}

fn tomography(s: &SpectralDensityMatrix) -> Result<SpectralDensityMatrix> {
    let data = MatrixFunction::try_from_fn(s.grid(), |w| {
        if s.n() == 1 {
            reconstruct_sdm(|x, y| synodyne_q(s, w, x, y), 1.0)
        } else {
            multimode_reconstruct(s, w)
        }
    })?;
    SpectralDensityMatrix::new(data)
}

fn detect(args: DetectArgs) -> Result<()> {
    let s = io::read_sdm(&args.input)?;
    if args.tomography {
        let rec = tomography(&s)?;
        let worst = (0..s.grid().len())
            .map(|k| (rec.sample(k) - s.sample(k)).norm())
            .fold(0.0, f64::max);
        info!("tomography reconstruction residual {worst:.3e}");
        let out = args.sdm_out.as_deref().or(args.output.as_deref());
        return match out {
            Some(p) => io::write_sdm(p, &rec),
            None => emit_json(&MatfnDocument::new(rec.data(), Some(io::SDM_KIND)), None),
        };
    }
    let lo = match args.mode {
        DetectMode::Homodyne => LocalOscillator::Homodyne { theta: args.theta, amp: args.amp },
        DetectMode::Heterodyne => LocalOscillator::Heterodyne { omega0: args.omega0, alpha0: args.alpha },
        DetectMode::Synodyne => {
            LocalOscillator::Synodyne { omega0: args.omega0, alpha_plus: args.alpha_plus, alpha_minus: args.alpha_minus }
        }
        DetectMode::General => {
            read_lo(args.lo.as_deref().ok_or_else(|| Error::Schema("--mode general needs --lo FILE".into()))?)?
        }
    };
    let grid: FrequencyGrid = args.grid.grid()?.unwrap_or_else(|| s.grid().clone());
    let spec = photocurrent_spectrum(&s, &lo, grid.as_slice())?;
    let mut table = CsvTable::new("qlti.detect/1", ["omega", "spectrum"]);
    for (w, v) in spec.omega.iter().zip(&spec.values) {
        table.push(vec![*w, *v])?;
    }
    emit_table(&table, args.output.as_deref())
}

fn run_demo(demo: Demo) -> Result<()> {
    match demo {
        Demo::Cavity { reflectivity, phi0, r, tau, sweep, sdm_out, output } => {
            let model = CavityLossModel::new(reflectivity, phi0, tau)?;
            let grid = sweep.grid()?;
            let mut table = CsvTable::new(
                "qlti.demo.cavity/1",
                ["omega", "F_plus_sq", "F_minus_sq", "theta_D", "lambda_C", "lambda_R", "hidden", "r_lim"],
            );
            let mut sdms = Vec::with_capacity(grid.len());
            for w in grid.iter() {
                let (fp, fm) = (cavity_f(&model, w), cavity_f(&model, -w));
                let sm = lossy_squeezer_sdm(fp, fm, r)?;
                let h = hidden_squeezing_metrics(&sm)?;
                let rl = if fp.norm() > 0.0 && fm.norm() > 0.0 { r_lim(fp.norm(), fm.norm())? } else { 0.0 };
                table.push(vec![
                    w,
                    fp.norm_sqr(),
                    fm.norm_sqr(),
                    (fp * fm).arg() / 2.0,
                    h.lambda_c,
                    h.lambda_r,
                    f64::from(u8::from(h.hidden())),
                    rl,
                ])?;
                sdms.push(sm);
            }
            write_sdm_opt(sdm_out.as_ref(), grid, sdms)?;
            emit_table(&table, output.as_deref())
        }
        Demo::Oscillator { eta, tau, sweep, sdm_out, output } => {
            let osc = FeedbackOscillator::new(eta, tau)?;
            let grid = sweep.grid()?;
            let mut table = CsvTable::new(
                "qlti.demo.oscillator/1",
                ["omega", "H0_abs2", "HG_abs2", "group_residual", "achieved", "bound", "ratio"],
            );
            let mut sdms = Vec::with_capacity(grid.len());
            for (k, w) in grid.iter().enumerate() {
                let at = |e| Error::AtFrequency { index: k, omega: w, source: Box::new(e) };
                let resp = osc.responses(w).map_err(at)?;
                let m = oscillator_transfer(&osc, w).map_err(at)?;
                let b = oscillator_bound(&osc, w).map_err(at)?;
                table.push(vec![
                    w,
                    resp.h0.norm_sqr(),
                    resp.hg.norm_sqr(),
                    residual_matrix(&m)?,
                    b.achieved,
                    b.bound,
                    b.achieved / b.bound,
                ])?;
                let out = select(&m, &[0, 2], &[0, 1, 2, 3]);
                sdms.push((&out * out.adjoint()).scale(0.5));
            }
            write_sdm_opt(sdm_out.as_ref(), grid, sdms)?;
            emit_table(&table, output.as_deref())
        }
        Demo::TwoMode { r1, r2, omega, sdm_out, output } => {
            let s = two_mode_sigma_delta(r1, r2);
            let grid = FrequencyGrid::single(omega)?;
            let sdm = SpectralDensityMatrix::new(MatrixFunction::new(grid, vec![s.clone()])?)?;
            let mut table = CsvTable::new("qlti.demo.two_mode/1", ["r1", "r2", "sigma", "delta", "margin"]);
            table.push(vec![r1, r2, s[(0, 0)].re, s[(0, 1)].im, uncertainty_margin(&sdm, omega)?])?;
            if let Some(p) = sdm_out {
                io::write_sdm(&p, &sdm)?;
            }
            emit_table(&table, output.as_deref())
        }
    }
}

fn write_sdm_opt(path: Option<&PathBuf>, grid: FrequencyGrid, samples: Vec<CMat>) -> Result<()> {
    if let Some(p) = path {
        let sdm = SpectralDensityMatrix::new(MatrixFunction::new(grid, samples)?)?;
        io::write_sdm(p, &sdm)?;
    }
    Ok(())
}
