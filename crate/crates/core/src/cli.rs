//! Command-line front end. Results go to standard output, progress to
//! standard error.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or file-format error,
//! 3 numeric failure (divergence, non-finite gradient, failed gradient check).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::data::{generate, load_sequence, normalize, save_sequence, SequenceKind, SequenceSpec};
use crate::error::{Error, Result};
use crate::eval::{evaluate, export_dictionary, FeatureNorm};
use crate::loss::{grad_check, random_instance, Hyperparams};
use crate::train::{load_checkpoint, save_checkpoint, train_with, Objective, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "slowpool",
    version,
    about = "Slow, sparse pooled auto-encoders on frame pairs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic frame sequence.
    GenData(GenDataArgs),
    /// Train a model on a sequence file.
    Train(TrainArgs),
    /// Score a trained model as a temporal metric.
    Eval(EvalArgs),
    /// Compare analytic and finite-difference gradients on a random instance.
    GradCheck(GradCheckArgs),
    /// Write the decoder dictionary of a checkpoint as a PGM image.
    ExportDict(ExportDictArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// translating_blob, drifting_texture or constant
    #[arg(long, default_value_t = SequenceKind::DriftingTexture)]
    pub kind: SequenceKind,
    #[arg(long, default_value_t = 64)]
    pub frames: usize,
    /// Frame side in pixels.
    #[arg(long, default_value_t = 16)]
    pub size: usize,
    /// Per-frame displacement as `dy,dx`.
    #[arg(long, default_value = "0,1", value_parser = parse_velocity)]
    pub vel: (f64, f64),
    /// Blob radius or texture smoothing radius.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "seq.sfv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// L1 weight on hidden units.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Slowness weight on pooled features.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Contrastive margin.
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    /// Floor on pooled norms in gradients.
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value = "seq.sfv")]
    pub data: PathBuf,
    /// full or drlim
    #[arg(long, default_value_t = Objective::Full)]
    pub objective: Objective,
    #[command(flatten)]
    pub loss: LossArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub pairs_per_epoch: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    /// Probability that a training pair is a temporal neighbour.
    #[arg(long, default_value_t = 0.5)]
    pub neighbor_prob: f64,
    /// Number of hidden units.
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    /// Units per pooling group.
    #[arg(long, default_value_t = 4)]
    pub group: usize,
    /// Offset between consecutive pooling groups.
    #[arg(long, default_value_t = 2)]
    pub stride: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "model.ckpt")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, default_value = "seq.sfv")]
    pub data: PathBuf,
    #[arg(long, default_value = "model.ckpt")]
    pub model: PathBuf,
    /// Largest temporal gap in the distance profile.
    #[arg(long, default_value_t = 5)]
    pub max_gap: usize,
    /// Norm over pooled features: l1 or l2.
    #[arg(long, default_value_t = FeatureNorm::L1)]
    pub norm: FeatureNorm,
}

#[derive(Debug, Args)]
pub struct GradCheckArgs {
    #[arg(long, default_value_t = 3)]
    pub seed: u64,
    /// Input dimension.
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 24)]
    pub hidden: usize,
    #[arg(long, default_value_t = 4)]
    pub group: usize,
    #[arg(long, default_value_t = 2)]
    pub stride: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    #[command(flatten)]
    pub loss: LossArgs,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct ExportDictArgs {
    #[arg(long, default_value = "model.ckpt")]
    pub model: PathBuf,
    #[arg(long, default_value = "dictionary.pgm")]
    pub out: PathBuf,
}

fn parse_velocity(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `dy,dx`, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(a)?, num(b)?))
}

impl LossArgs {
    fn hyper(&self) -> Hyperparams {
        Hyperparams {
            alpha: self.alpha,
            beta: self.beta,
            margin: self.margin,
            eps: self.eps,
            ..Hyperparams::default()
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Unsupported(_) => EXIT_USAGE,
        Error::NonFiniteGradient { .. } | Error::Diverged { .. } => EXIT_NUMERIC,
        Error::Shape { .. } | Error::Format { .. } | Error::Version { .. } | Error::Io(_) => {
            EXIT_DATA
        }
    }
}

/// Parses `argv` (program name first) and runs the command against the
/// process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{rendered}");
                EXIT_OK
            };
        }
    };
    let outcome = match cli.command {
        Command::GenData(a) => gen_data(a, out),
        Command::Train(a) => train_cmd(a, out, err),
        Command::Eval(a) => eval_cmd(a, out),
        Command::GradCheck(a) => grad_check_cmd(a, out),
        Command::ExportDict(a) => export_cmd(a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn gen_data(a: GenDataArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = SequenceSpec {
        kind: a.kind,
        frames: a.frames,
        height: a.size,
        width: a.size,
        velocity: a.vel,
        blob_sigma: a.sigma,
        seed: a.seed,
    };
    let seq = generate(&spec)?;
    save_sequence(&seq, &a.out)?;
    writeln!(out, "wrote: {}", a.out.display())?;
    writeln!(out, "frames: {}", seq.len())?;
    writeln!(out, "height: {}", seq.height())?;
    writeln!(out, "width: {}", seq.width())?;
    Ok(EXIT_OK)
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let seq = normalize(&load_sequence(&a.data)?);
    let config = TrainConfig {
        epochs: a.epochs,
        pairs_per_epoch: a.pairs_per_epoch,
        batch_size: a.batch_size,
        hyper: Hyperparams {
            lr: a.lr,
            momentum: a.momentum,
            ..a.loss.hyper()
        },
        objective: a.objective,
        neighbor_prob: a.neighbor_prob,
        seed: a.seed,
        hidden: a.hidden,
        group_size: a.group,
        stride: a.stride,
        checkpoint_path: Some(a.out.clone()),
    };
    config.validate()?;
    let params = crate::model::init_params(seq.frame_len(), a.hidden, a.group, a.stride, a.seed)?;
    let (params, report) = train_with(params, &seq, &config, |epoch, s| {
        let _ = writeln!(
            err,
            "epoch {}/{}: loss {:.6} recon {:.6} sparsity {:.3} ({:.2}s)",
            epoch + 1,
            config.epochs,
            s.loss.total,
            s.loss.recon,
            s.sparsity,
            s.seconds
        );
    })?;
    save_checkpoint(&params, &config.hyper, &a.out)?;
    let last = report.last().expect("at least one epoch");
    writeln!(out, "wrote: {}", a.out.display())?;
    writeln!(out, "objective: {}", config.objective)?;
    writeln!(out, "epochs: {}", report.epochs.len())?;
    writeln!(out, "final_loss: {:.6}", last.loss.total)?;
    writeln!(out, "final_recon: {:.6}", last.loss.recon)?;
    writeln!(out, "final_slowness: {:.6}", last.loss.slowness)?;
    writeln!(out, "final_contrastive: {:.6}", last.loss.contrastive)?;
    writeln!(out, "final_sparsity: {:.6}", last.sparsity)?;
    Ok(EXIT_OK)
}

fn eval_cmd(a: EvalArgs, out: &mut dyn Write) -> Result<i32> {
    let seq = normalize(&load_sequence(&a.data)?);
    let ckpt = load_checkpoint(&a.model)?;
    let report = evaluate(&seq, &ckpt.params, a.max_gap, a.norm)?;
    write!(out, "{report}")?;
    Ok(EXIT_OK)
}

fn grad_check_cmd(a: GradCheckArgs, out: &mut dyn Write) -> Result<i32> {
    let hyper = a.loss.hyper();
    hyper.validate()?;
    if !(a.step > 0.0 && a.step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {}",
            a.step
        )));
    }
    let (params, pair) = random_instance(a.dim, a.hidden, a.group, a.stride, a.seed)?;
    let r = grad_check(&params, &pair, &hyper, a.step)?;
    let pass = r.max_rel_error <= a.threshold;
    writeln!(out, "max_relative_error: {:.3e}", r.max_rel_error)?;
    if let Some((buf, idx)) = r.worst {
        writeln!(out, "worst: {buf}[{idx}]")?;
    }
    writeln!(out, "checked: {}", r.checked)?;
    writeln!(out, "excluded: {}", r.excluded)?;
    writeln!(out, "threshold: {:e}", a.threshold)?;
    writeln!(out, "result: {}", if pass { "pass" } else { "fail" })?;
    Ok(if pass { EXIT_OK } else { EXIT_NUMERIC })
}

fn export_cmd(a: ExportDictArgs, out: &mut dyn Write) -> Result<i32> {
    let ckpt = load_checkpoint(&a.model)?;
    export_dictionary(&ckpt.params, &a.out)?;
    writeln!(out, "wrote: {}", a.out.display())?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = std::iter::once("slowpool").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn help_goes_to_stdout_with_defaults() {
        for sub in ["gen-data", "train", "eval", "grad-check", "export-dict"] {
            let (code, out, _) = run_capture(&[sub, "--help"]);
            assert_eq!(code, 0, "{sub}");
            let flags = out
                .lines()
                .filter(|l| l.trim_start().starts_with("--") && !l.contains("--help"))
                .count();
            let with_default = out.matches("[default: ").count();
            assert!(flags > 0);
            assert_eq!(flags, with_default, "{sub}:\n{out}");
        }
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, out, err) = run_capture(&["train", "--bogus"]);
        assert_eq!(code, 1);
        assert!(out.is_empty());
        assert!(err.contains("Usage"), "{err}");
        assert_eq!(run_capture(&[]).0, 1);
        assert_eq!(run_capture(&["gen-data", "--vel", "1"]).0, 1);
        assert_eq!(run_capture(&["grad-check", "--alpha", "-1"]).0, 1);
    }

    #[test]
    fn velocity_parsing() {
        assert_eq!(parse_velocity("0,1").unwrap(), (0.0, 1.0));
        assert_eq!(parse_velocity(" -0.5 , 2").unwrap(), (-0.5, 2.0));
        assert!(parse_velocity("x,1").is_err());
    }

    #[test]
    fn exit_code_mapping() {
        assert_eq!(exit_code(&Error::Diverged { epoch: 0, step: 0 }), 3);
        assert_eq!(exit_code(&Error::Version { found: 2 }), 2);
        assert_eq!(exit_code(&Error::InvalidArgument(String::new())), 1);
    }
}
