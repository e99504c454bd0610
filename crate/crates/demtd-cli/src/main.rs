//! `demtd`: file-driven pipeline driver. Every command is a pure function
//! of its input files, flags, and seed; reruns write byte-identical
//! artifacts. Exit codes: 0 success, 2 usage/input error, 3 numeric or
//! runtime failure.

mod manifest;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use demtd_core::classify::{
    cross_validate, grid_search, train_rf, ttest_scores, CvConfig, Dataset, ForestParams,
    FsfsConfig, LesionSample,
};
use demtd_core::error::Error;
use demtd_core::glcm::{demtd_features, FeatureVector};
use demtd_core::invariants::{invariant_map, MapParams};
use demtd_core::phantom::{invariance_report, random_conditioned_affine, AnalyticField, Interp};
use demtd_core::rng::Rng;
use demtd_core::suppression::{histogram, quantize, suppress_map, LABEL_EXCLUDED};
use demtd_core::volume::{
    crop_to_roi, load_mask, load_volume, save_mask, save_volume_with_meta, Volume3D,
};

use manifest::{load_lesion, Manifest};
use output::{
    read_feature_csv, read_scores, write_feature_csv, write_histogram_csv, write_json,
    write_meta_sidecar, write_scores, Echo,
};

#[derive(Parser)]
#[command(
    name = "demtd",
    version,
    about = "Elasticity feature maps, DEMTD descriptors, and the classification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MapFlags {
    /// Deriche alpha.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Deriche window taps per axis (odd).
    #[arg(long, default_value_t = 7)]
    window: usize,
    /// Mirror-padding border for the Hessian filter.
    #[arg(long, default_value_t = 3)]
    border: usize,
    /// ROI crop margin in voxels.
    #[arg(long, default_value_t = 3)]
    margin: usize,
}

impl MapFlags {
    fn params(&self) -> MapParams {
        MapParams {
            alpha: self.alpha,
            window: self.window,
            border: self.border,
        }
    }
}

#[derive(Args, Clone)]
struct ForestFlags {
    /// Trees in the forest.
    #[arg(long, default_value_t = 5000)]
    trees: usize,
    /// Candidate features per node; default floor(sqrt(p)).
    #[arg(long)]
    mtry: Option<usize>,
    /// Minimum node size before splitting stops.
    #[arg(long, default_value_t = 1)]
    min_node_size: usize,
    /// Weight classes inversely to frequency.
    #[arg(long, default_value_t = false)]
    balance: bool,
    /// Master seed for every stochastic step; falls back to the manifest
    /// default, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

impl ForestFlags {
    /// Resolve the seed against a manifest default.
    fn seed_or(&self, manifest_default: Option<u64>) -> u64 {
        self.seed.or(manifest_default).unwrap_or(0)
    }

    fn params(&self, seed: u64) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            mtry: self.mtry,
            min_node_size: self.min_node_size,
            bootstrap: true,
            balance_classes: self.balance,
            seed,
        }
    }
}

#[derive(Args, Clone)]
struct CvFlags {
    /// Two-fold repeats.
    #[arg(long, default_value_t = 50)]
    repeats: usize,
    /// Score threshold for ACC/SN/SP.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Forward-step feature selection inside each training fold.
    #[arg(long, default_value_t = false)]
    fsfs: bool,
    /// FSFS feature budget.
    #[arg(long, default_value_t = 30)]
    fsfs_budget: usize,
    /// FSFS minimum AUC improvement.
    #[arg(long, default_value_t = 1e-4)]
    fsfs_epsilon: f64,
    /// KL-decorrelate measures across directions per training fold.
    #[arg(long, default_value_t = false)]
    kl: bool,
}

impl CvFlags {
    fn config(&self, seed: u64) -> CvConfig {
        CvConfig {
            repeats: self.repeats,
            threshold: self.threshold,
            seed,
            fsfs: self.fsfs.then_some(FsfsConfig {
                epsilon: self.fsfs_epsilon,
                budget: self.fsfs_budget,
                inner_folds: 5,
            }),
            kl: self.kl,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write E/F1/F2 maps, the quantized label map, its histogram, and a
    /// stats sidecar for one volume/mask pair.
    Maps {
        #[arg(long)]
        volume: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Suppression root power (1..=9).
        #[arg(long, visible_alias = "suppress", default_value_t = 1)]
        n: u32,
        /// Gray levels for quantization.
        #[arg(long, default_value_t = 16)]
        levels: u32,
        #[command(flatten)]
        map_flags: MapFlags,
    },
    /// Extract the 364-value descriptor for every manifest lesion into a CSV.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        levels: Option<u32>,
        /// Report per-lesion failures and continue instead of aborting.
        #[arg(long, default_value_t = false)]
        skip_bad: bool,
        #[command(flatten)]
        map_flags: MapFlags,
    },
    /// Train a random forest on a feature CSV and persist the model.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
        /// Optional JSON training summary (params echo + importance).
        #[arg(long)]
        summary_out: Option<PathBuf>,
        /// Fit the across-direction KL basis on the (364-wide) training
        /// features and persist it as JSON.
        #[arg(long)]
        kl_basis_out: Option<PathBuf>,
        #[command(flatten)]
        forest: ForestFlags,
    },
    /// Repeated stratified two-fold cross-validation.
    Cv {
        /// Feature CSV input (mutually exclusive with --manifest).
        #[arg(long, conflicts_with = "manifest")]
        features: Option<PathBuf>,
        /// Manifest input; descriptors are computed first.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Pooled per-sample scores of the last repeat, one per line.
        #[arg(long)]
        scores_out: Option<PathBuf>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        levels: Option<u32>,
        #[command(flatten)]
        map_flags: MapFlags,
        #[command(flatten)]
        forest: ForestFlags,
        #[command(flatten)]
        cv: CvFlags,
    },
    /// Brute-force grid search over root power and gray levels.
    Grid {
        #[arg(long)]
        manifest: PathBuf,
        /// Grid table CSV.
        #[arg(long)]
        out: PathBuf,
        /// Best-cell JSON.
        #[arg(long)]
        best_out: Option<PathBuf>,
        /// Root powers to scan.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 2, 3, 4, 5, 6, 7, 8, 9])]
        n_values: Vec<u32>,
        /// Gray-level counts to scan.
        #[arg(
            long,
            value_delimiter = ',',
            default_values_t = vec![16u32, 24, 32, 40, 48, 56, 64, 72, 80, 88, 96, 104, 112, 120, 128]
        )]
        levels_values: Vec<u32>,
        #[command(flatten)]
        map_flags: MapFlags,
        #[command(flatten)]
        forest: ForestFlags,
        #[command(flatten)]
        cv: CvFlags,
    },
    /// Welch t-test between two prediction score files.
    Ttest {
        #[arg(long)]
        scores_a: PathBuf,
        #[arg(long)]
        scores_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical invariance check of the E map under random affine
    /// deformations, on the analytic and the discrete filter paths.
    ValidateInvariance {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = PhantomKind::Quadratic)]
        phantom: PhantomKind,
        #[arg(long, default_value_t = 100)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cubic lattice size.
        #[arg(long, default_value_t = 32)]
        dims: usize,
        #[arg(long, value_enum, default_value_t = InterpKind::Tricubic)]
        interp: InterpKind,
        /// Singular-value range of the random deformations.
        #[arg(long, default_value_t = 0.8)]
        smin: f64,
        #[arg(long, default_value_t = 1.25)]
        smax: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PhantomKind {
    /// Radial quadratic field.
    Quadratic,
    /// Radial quadratic plus low-frequency sinusoids.
    Smooth,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterpKind {
    Trilinear,
    Tricubic,
}

impl From<InterpKind> for Interp {
    fn from(k: InterpKind) -> Interp {
        match k {
            InterpKind::Trilinear => Interp::Trilinear,
            InterpKind::Tricubic => Interp::Tricubic,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::MissingFile(..)
        | Error::HeaderParse(..)
        | Error::SizeMismatch { .. }
        | Error::NonFinite(..)
        | Error::NonBinary { .. }
        | Error::EmptyMask
        | Error::TooSmall { .. }
        | Error::BadParam(..)
        | Error::DimMismatch { .. }
        | Error::FeatureDimMismatch { .. }
        | Error::BasisMismatch(..)
        | Error::DuplicateId(..) => 2,
        Error::SingularH
        | Error::SingularP
        | Error::NoValidPairs { .. }
        | Error::SingleClass
        | Error::EmptyTrainSet
        | Error::TooFewSamples { .. }
        | Error::ZeroVariance
        | Error::Io(..) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("demtd: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Clamp to the f32 range for map export; E is unbounded in principle.
fn to_f32_saturating(v: f64) -> f32 {
    v.clamp(f32::MIN as f64, f32::MAX as f64) as f32
}

fn save_scalar_map(
    path: &Path,
    dims: (usize, usize, usize),
    spacing: (f64, f64, f64),
    values: &[f64],
    meta: &std::collections::BTreeMap<String, String>,
) -> Result<(), Error> {
    let data: Vec<f32> = values.iter().map(|&v| to_f32_saturating(v)).collect();
    save_volume_with_meta(path, &Volume3D::new(dims, spacing, data)?, meta)
}

/// Header metadata for exported maps: the parameter echo in key/value form.
fn map_meta(n: u32, levels: u32) -> std::collections::BTreeMap<String, String> {
    let mut meta = std::collections::BTreeMap::new();
    meta.insert("tool".into(), "demtd".into());
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("n".into(), n.to_string());
    meta.insert("levels".into(), levels.to_string());
    meta
}

#[derive(Serialize)]
struct MapsReport {
    echo: Echo,
    masked_voxels: usize,
    singular_voxels: usize,
    e_min: f64,
    e_max: f64,
    e_mean: f64,
}

fn cmd_maps(
    volume: &Path,
    mask: &Path,
    out_dir: &Path,
    n: u32,
    levels: u32,
    flags: &MapFlags,
) -> Result<(), Error> {
    if !(1..=9).contains(&n) {
        return Err(Error::BadParam(format!("root power {n} outside 1..=9")));
    }
    // 255 is the excluded-voxel sentinel in the exported u8 label map.
    if !(2..=255).contains(&levels) {
        return Err(Error::BadParam(format!("levels {levels} outside 2..=255")));
    }
    let vol = load_volume(volume)?;
    let roi = load_mask(mask)?;
    let (vol, roi) = crop_to_roi(&vol, &roi, flags.margin)?;
    let inv = invariant_map(&vol, &roi, &flags.params())?;
    let sup = suppress_map(&inv, n)?;
    let labels = quantize(&sup, &roi, levels)?;
    let hist = histogram(&labels, levels as usize)?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(out_dir.to_path_buf(), e))?;
    let dims = vol.dims();
    let spacing = vol.spacing();
    let meta = map_meta(n, levels);
    save_scalar_map(&out_dir.join("e_map.json"), dims, spacing, inv.e(), &meta)?;
    save_scalar_map(&out_dir.join("f1_map.json"), dims, spacing, inv.f1(), &meta)?;
    save_scalar_map(&out_dir.join("f2_map.json"), dims, spacing, inv.f2(), &meta)?;
    save_mask(&out_dir.join("roi.json"), &roi)?;

    // Label map as u8 payload; 255 marks voxels outside the ROI.
    let label_bytes: Vec<u8> = labels
        .labels()
        .iter()
        .map(|&l| if l == LABEL_EXCLUDED { 255 } else { l as u8 })
        .collect();
    let label_path = out_dir.join("labels.raw");
    std::fs::write(&label_path, &label_bytes).map_err(|e| Error::Io(label_path, e))?;
    let mut label_meta = meta.clone();
    label_meta.insert("excluded".into(), "255".into());
    let header = serde_json::json!({
        "dims": [dims.0, dims.1, dims.2],
        "spacing": [spacing.0, spacing.1, spacing.2],
        "dtype": "u8",
        "meta": label_meta
    });
    let lp = out_dir.join("labels.json");
    std::fs::write(
        &lp,
        serde_json::to_string_pretty(&header).expect("json") + "\n",
    )
    .map_err(|e| Error::Io(lp, e))?;

    write_histogram_csv(&out_dir.join("histogram.csv"), &hist)?;

    let stats = inv.stats();
    let mut echo = Echo::new("maps");
    echo.n = Some(n);
    echo.levels = Some(levels);
    write_json(
        &out_dir.join("stats.json"),
        &MapsReport {
            echo,
            masked_voxels: stats.masked_voxels,
            singular_voxels: stats.singular_voxels,
            e_min: stats.e_min,
            e_max: stats.e_max,
            e_mean: stats.e_mean,
        },
    )
}

fn cmd_features(
    manifest_path: &Path,
    out: &Path,
    n: Option<u32>,
    levels: Option<u32>,
    skip_bad: bool,
    flags: &MapFlags,
) -> Result<(), Error> {
    let manifest = Manifest::load(manifest_path)?;
    let defaults = manifest.defaults.as_ref();
    let n = n.or(defaults.and_then(|d| d.n)).unwrap_or(1);
    let levels = levels.or(defaults.and_then(|d| d.levels)).unwrap_or(16);

    let mut rows = Vec::new();
    for record in &manifest.lesions {
        let result = load_lesion(manifest_path, record, flags.margin).and_then(|lesion| {
            let values = demtd_features(&lesion.volume, &lesion.mask, n, levels, &flags.params())?;
            FeatureVector::new(lesion.id, lesion.label, values)
        });
        match result {
            Ok(row) => rows.push(row),
            Err(e) if skip_bad => eprintln!("demtd: skipping '{}': {e}", record.id),
            Err(e) => return Err(e),
        }
    }
    write_feature_csv(out, &rows)?;
    let mut echo = Echo::new("features");
    echo.n = Some(n);
    echo.levels = Some(levels);
    write_meta_sidecar(out, &echo)
}

#[derive(Serialize)]
struct TrainSummary {
    echo: Echo,
    samples: usize,
    dim: usize,
    importance: Vec<f64>,
}

fn cmd_train(
    features: &Path,
    model_out: &Path,
    summary_out: Option<&Path>,
    kl_basis_out: Option<&Path>,
    forest: &ForestFlags,
) -> Result<(), Error> {
    let (_, labels, rows) = read_feature_csv(features)?;
    if let Some(path) = kl_basis_out {
        let basis = demtd_core::glcm::kl_transform_fit(&rows)?;
        write_json(path, &basis)?;
    }
    let data = Dataset::new(rows, labels)?;
    let seed = forest.seed_or(None);
    let model = train_rf(&data, &forest.params(seed))?;
    let mut file =
        std::fs::File::create(model_out).map_err(|e| Error::Io(model_out.to_path_buf(), e))?;
    model
        .write_to(&mut file)
        .map_err(|e| Error::Io(model_out.to_path_buf(), e))?;
    if let Some(path) = summary_out {
        let mut echo = Echo::new("train");
        echo.seed = Some(seed);
        echo.trees = Some(forest.trees);
        echo.mtry = Some(model.params.resolved_mtry(data.dim()));
        write_json(
            path,
            &TrainSummary {
                echo,
                samples: data.len(),
                dim: data.dim(),
                importance: model.importance().to_vec(),
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CvReport {
    auc_mean: f64,
    auc_std: f64,
    acc: f64,
    sn: f64,
    sp: f64,
    selected_features: Vec<usize>,
    seed: u64,
    echo: Echo,
}

#[allow(clippy::too_many_arguments)]
fn cmd_cv(
    features: Option<&Path>,
    manifest_path: Option<&Path>,
    out: &Path,
    scores_out: Option<&Path>,
    n: Option<u32>,
    levels: Option<u32>,
    map_flags: &MapFlags,
    forest: &ForestFlags,
    cv: &CvFlags,
) -> Result<(), Error> {
    let (data, n_used, levels_used, seed) = match (features, manifest_path) {
        (Some(path), None) => {
            let (_, labels, rows) = read_feature_csv(path)?;
            (
                Dataset::new(rows, labels)?,
                None,
                None,
                forest.seed_or(None),
            )
        }
        (None, Some(path)) => {
            let manifest = Manifest::load(path)?;
            let defaults = manifest.defaults.as_ref();
            let n = n.or(defaults.and_then(|d| d.n)).unwrap_or(1);
            let levels = levels.or(defaults.and_then(|d| d.levels)).unwrap_or(16);
            let seed = forest.seed_or(defaults.and_then(|d| d.seed));
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for record in &manifest.lesions {
                let lesion = load_lesion(path, record, map_flags.margin)?;
                rows.push(demtd_features(
                    &lesion.volume,
                    &lesion.mask,
                    n,
                    levels,
                    &map_flags.params(),
                )?);
                labels.push(lesion.label);
            }
            (Dataset::new(rows, labels)?, Some(n), Some(levels), seed)
        }
        _ => {
            return Err(Error::BadParam(
                "exactly one of --features or --manifest is required".into(),
            ))
        }
    };

    let result = cross_validate(&data, &forest.params(seed), &cv.config(seed))?;
    if let Some(path) = scores_out {
        write_scores(path, &result.last_repeat_scores)?;
    }
    let mut echo = Echo::new("cv");
    echo.n = n_used;
    echo.levels = levels_used;
    echo.seed = Some(seed);
    echo.trees = Some(forest.trees);
    echo.mtry = Some(forest.params(seed).resolved_mtry(data.dim()));
    echo.repeats = Some(cv.repeats);
    echo.fsfs = Some(cv.fsfs);
    echo.kl = Some(cv.kl);
    write_json(
        out,
        &CvReport {
            auc_mean: result.auc_mean,
            auc_std: result.auc_std,
            acc: result.acc_mean,
            sn: result.sn_mean,
            sp: result.sp_mean,
            selected_features: result.selected_features.clone(),
            seed,
            echo,
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_grid(
    manifest_path: &Path,
    out: &Path,
    best_out: Option<&Path>,
    n_values: &[u32],
    levels_values: &[u32],
    map_flags: &MapFlags,
    forest: &ForestFlags,
    cv: &CvFlags,
) -> Result<(), Error> {
    let manifest = Manifest::load(manifest_path)?;
    let seed = forest.seed_or(manifest.defaults.as_ref().and_then(|d| d.seed));
    let mut lesions: Vec<LesionSample> = Vec::with_capacity(manifest.lesions.len());
    for record in &manifest.lesions {
        lesions.push(load_lesion(manifest_path, record, map_flags.margin)?);
    }
    let result = grid_search(
        &lesions,
        n_values,
        levels_values,
        &map_flags.params(),
        &forest.params(seed),
        &cv.config(seed),
    )?;

    let mut csv = String::from("n,levels,auc_mean,auc_std,acc,sn,sp\n");
    for cell in &result.cells {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            cell.root_power,
            cell.levels,
            cell.auc_mean,
            cell.auc_std,
            cell.acc_mean,
            cell.sn_mean,
            cell.sp_mean
        ));
    }
    std::fs::write(out, csv).map_err(|e| Error::Io(out.to_path_buf(), e))?;

    let mut echo = Echo::new("grid");
    echo.seed = Some(seed);
    echo.trees = Some(forest.trees);
    echo.repeats = Some(cv.repeats);
    echo.fsfs = Some(cv.fsfs);
    echo.kl = Some(cv.kl);
    write_meta_sidecar(out, &echo)?;
    if let Some(path) = best_out {
        #[derive(Serialize)]
        struct Best<'a> {
            best: &'a demtd_core::classify::GridCell,
            echo: &'a Echo,
        }
        write_json(
            path,
            &Best {
                best: &result.cells[result.best],
                echo: &echo,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TtestReport {
    t: f64,
    df: f64,
    p: f64,
    mean_a: f64,
    mean_b: f64,
    echo: Echo,
}

fn cmd_ttest(a: &Path, b: &Path, out: &Path) -> Result<(), Error> {
    let sa = read_scores(a)?;
    let sb = read_scores(b)?;
    let r = ttest_scores(&sa, &sb)?;
    write_json(
        out,
        &TtestReport {
            t: r.t,
            df: r.df,
            p: r.p,
            mean_a: r.mean_a,
            mean_b: r.mean_b,
            echo: Echo::new("ttest"),
        },
    )
}

#[derive(Serialize)]
struct ValidateReport {
    echo: Echo,
    phantom: String,
    draws: usize,
    smin: f64,
    smax: f64,
    analytic_rms_max: f64,
    discrete_rms_max: f64,
    report: demtd_core::phantom::InvarianceReport,
}

#[allow(clippy::too_many_arguments)]
fn cmd_validate(
    out: &Path,
    phantom: PhantomKind,
    draws: usize,
    seed: u64,
    dims: usize,
    interp: InterpKind,
    smin: f64,
    smax: f64,
) -> Result<(), Error> {
    if !(smin > 0.0 && smax >= smin) {
        return Err(Error::BadParam(
            "singular-value range must satisfy 0 < smin <= smax".into(),
        ));
    }
    let field = match phantom {
        PhantomKind::Quadratic => AnalyticField::radial_quadratic(),
        PhantomKind::Smooth => AnalyticField::smooth_deformable(seed, 3),
    };
    let mut rng = Rng::new(seed);
    let maps: Vec<_> = (0..draws)
        .map(|_| random_conditioned_affine(&mut rng, smin, smax))
        .collect();
    let report = invariance_report(&field, (dims, dims, dims), &maps, interp.into())?;
    let mut echo = Echo::new("validate-invariance");
    echo.seed = Some(seed);
    write_json(
        out,
        &ValidateReport {
            echo,
            phantom: match phantom {
                PhantomKind::Quadratic => "quadratic".into(),
                PhantomKind::Smooth => "smooth".into(),
            },
            draws,
            smin,
            smax,
            analytic_rms_max: report.analytic_rms_max,
            discrete_rms_max: report.discrete_rms_max,
            report,
        },
    )
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Maps {
            volume,
            mask,
            out_dir,
            n,
            levels,
            map_flags,
        } => cmd_maps(&volume, &mask, &out_dir, n, levels, &map_flags),
        Command::Features {
            manifest,
            out,
            n,
            levels,
            skip_bad,
            map_flags,
        } => cmd_features(&manifest, &out, n, levels, skip_bad, &map_flags),
        Command::Train {
            features,
            model_out,
            summary_out,
            kl_basis_out,
            forest,
        } => cmd_train(
            &features,
            &model_out,
            summary_out.as_deref(),
            kl_basis_out.as_deref(),
            &forest,
        ),
        Command::Cv {
            features,
            manifest,
            out,
            scores_out,
            n,
            levels,
            map_flags,
            forest,
            cv,
        } => cmd_cv(
            features.as_deref(),
            manifest.as_deref(),
            &out,
            scores_out.as_deref(),
            n,
            levels,
            &map_flags,
            &forest,
            &cv,
        ),
        Command::Grid {
            manifest,
            out,
            best_out,
            n_values,
            levels_values,
            map_flags,
            forest,
            cv,
        } => cmd_grid(
            &manifest,
            &out,
            best_out.as_deref(),
            &n_values,
            &levels_values,
            &map_flags,
            &forest,
            &cv,
        ),
        Command::Ttest {
            scores_a,
            scores_b,
            out,
        } => cmd_ttest(&scores_a, &scores_b, &out),
        Command::ValidateInvariance {
            out,
            phantom,
            draws,
            seed,
            dims,
            interp,
            smin,
            smax,
        } => cmd_validate(&out, phantom, draws, seed, dims, interp, smin, smax),
    }
}
