//! Command-line entry points: batch pipeline stages over a store directory,
//! evaluation, and the HTTP service.

pub mod config;
pub mod http;
pub mod stages;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use circuitproof::eval::render_csv;
use circuitproof::eval::{render_report, ReportRow};
use circuitproof::pipeline::PipelineParams;
use circuitproof::{Error, Result, SegmentId};
use config::Config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "circuitproof", version, about = "Connectomics proofreading: detection, synapse clustering, edits and serving")]
pub struct Cli {
    /// key = value settings file; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a seeded synthetic store with ground truth
    Synth {
        #[arg(long)]
        spec: PathBuf,
        /// [default: 0]
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Skeletonize the cells listed in somas.csv
    Skeletonize {
        #[command(flatten)]
        store: StoreArg,
        /// Only this cell
        #[arg(long)]
        cell: Option<SegmentId>,
        /// Invalidation radius per nm of boundary distance [default: 3]
        #[arg(long)]
        invalidation_scale: Option<f64>,
        /// Constant added to the invalidation radius, nm [default: 200]
        #[arg(long)]
        invalidation_const: Option<f64>,
        /// Leaf branches shorter than this are pruned, nm [default: 300]
        #[arg(long)]
        min_branch_len: Option<f64>,
    },
    /// Anchor synaptic elements to skeleton nodes
    Associate {
        #[command(flatten)]
        store: StoreArg,
        /// Synapse table [default: <store>/synapses.csv]
        #[arg(long)]
        synapses: Option<PathBuf>,
        /// Nearest-skeleton search radius for unlabeled elements, nm [default: 750]
        #[arg(long)]
        assoc_radius: Option<f64>,
    },
    /// Form and order synapse clusters per cell
    Cluster {
        #[command(flatten)]
        store: StoreArg,
        /// Traversal step and capture radius, nm [default: 2000]
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Run the error detectors and write rois.txt
    Detect {
        #[command(flatten)]
        store: StoreArg,
        /// Slices per broken-neurite window [default: 10]
        #[arg(long)]
        window: Option<usize>,
        /// Endpoint synapse search radius, nm [default: 750]
        #[arg(long)]
        rho: Option<f64>,
        /// Junction forward-vector cosine threshold [default: -0.5]
        #[arg(long, allow_hyphen_values = true)]
        cos_thresh: Option<f64>,
        /// Mask overhang past an endpoint that counts as broken, nm [default: 100]
        #[arg(long)]
        overhang: Option<f64>,
    },
    /// Evaluation
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
    /// Serve the store over HTTP
    Serve {
        #[command(flatten)]
        store: StoreArg,
        /// [default: 8080]
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Adapted Rand error of a segmentation against ground truth
    Ari {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Synthetic detect-and-correct loop
    Loop {
        #[arg(long)]
        spec: PathBuf,
        /// [default: 0]
        #[arg(long)]
        seed: Option<u64>,
        /// Print the machine-readable table
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Args, Debug)]
pub struct StoreArg {
    /// Store directory [default: $VICE_STORE]
    #[arg(long)]
    pub store: Option<PathBuf>,
}

/// Parses and runs a command line; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if matches!(e, Error::Io(_)) {
        EXIT_IO
    } else {
        EXIT_VALIDATION
    }
}

fn params(cfg: &Config) -> Result<PipelineParams> {
    let mut p = PipelineParams::default();
    p.skeleton.invalidation_scale = cfg.value(None, "invalidation_scale", p.skeleton.invalidation_scale)?;
    p.skeleton.invalidation_const_nm = cfg.value(None, "invalidation_const", p.skeleton.invalidation_const_nm)?;
    p.skeleton.min_branch_len_nm = cfg.value(None, "min_branch_len", p.skeleton.min_branch_len_nm)?;
    p.assoc_radius_nm = cfg.value(None, "assoc_radius", p.assoc_radius_nm)?;
    p.cluster_radius_nm = cfg.value(None, "radius", p.cluster_radius_nm)?;
    p.broken.window_slices = cfg.value(None, "window", p.broken.window_slices)?;
    p.broken.overhang_nm = cfg.value(None, "overhang", p.broken.overhang_nm)?;
    p.rho_nm = cfg.value(None, "rho", p.rho_nm)?;
    p.invalid.cos_threshold = cfg.value(None, "cos_thresh", p.invalid.cos_threshold)?;
    Ok(p)
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let cfg = Config::from_env(cli.config.as_deref())?;
    let mut p = params(&cfg)?;
    match cli.command {
        Command::Synth { spec, seed, out } => stages::synth(&spec, cfg.value(seed, "seed", 0)?, &out),
        Command::Skeletonize { store, cell, invalidation_scale, invalidation_const, min_branch_len } => {
            set(&mut p.skeleton.invalidation_scale, invalidation_scale);
            set(&mut p.skeleton.invalidation_const_nm, invalidation_const);
            set(&mut p.skeleton.min_branch_len_nm, min_branch_len);
            p.skeleton.validate()?;
            let n = stages::skeletonize_store(&cfg.store(store.store)?, cell, &p)?;
            println!("{n} skeletons");
            Ok(())
        }
        Command::Associate { store, synapses, assoc_radius } => {
            set(&mut p.assoc_radius_nm, assoc_radius);
            let dir = cfg.store(store.store)?;
            let table = synapses.unwrap_or_else(|| dir.join(stages::SYNAPSES));
            let n = stages::associate_store(&dir, &table, p.assoc_radius_nm)?;
            println!("{n} elements anchored");
            Ok(())
        }
        Command::Cluster { store, radius } => {
            set(&mut p.cluster_radius_nm, radius);
            let n = stages::cluster_store(&cfg.store(store.store)?, &p)?;
            println!("{n} clusters");
            Ok(())
        }
        Command::Detect { store, window, rho, cos_thresh, overhang } => {
            set(&mut p.broken.window_slices, window);
            set(&mut p.rho_nm, rho);
            set(&mut p.invalid.cos_threshold, cos_thresh);
            set(&mut p.broken.overhang_nm, overhang);
            let n = stages::detect_store(&cfg.store(store.store)?, &p)?;
            println!("{n} rois");
            Ok(())
        }
        Command::Eval { command: EvalCommand::Ari { pred, gt } } => {
            println!("{:.6}", stages::eval_ari(&pred, &gt)?);
            Ok(())
        }
        Command::Eval { command: EvalCommand::Loop { spec, seed, csv } } => {
            let seed = cfg.value(seed, "seed", 0)?;
            let r = stages::eval_loop(&spec, seed, &p)?;
            let name = spec.file_stem().map_or("synthetic".into(), |s| s.to_string_lossy().into_owned());
            let rows = [ReportRow { dataset: name, pre_are: r.pre_are, post_are: r.post_are }];
            print!("{}", if csv { render_csv(&rows) } else { render_report(&rows) });
            eprintln!("{} rois, {} broken, {} merges applied", r.roi_count, r.broken_count, r.corrected_count);
            Ok(())
        }
        Command::Serve { store, port } => {
            let port = cfg.value(port, "port", 8080)?;
            let svc = stages::open_service(&cfg.store(store.store)?, p)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(http::serve(svc, port)).map_err(Error::Io)
        }
    }
}
