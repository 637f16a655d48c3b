use anyhow::Context as _;
use satd_core::classifier::{Classifier, TrainConfig};
use satd_core::corpus::{ChatParaphraser, ParaphraseProvider, RotationParaphraser, SplitSpec};
use satd_core::evaluation::{
    run_cross_project, run_intra_project, run_intra_project_augmented, Backend, CrossProjectResult,
    HyperparameterGrid, IntraProjectResult, MetricsReport, TrainAugmentation,
};
use satd_core::Label;

use crate::backend::{self, BackendSpec};
use crate::config::Hyper;
use crate::output::{emit, json};
use crate::{dataset, Context, EvaluateArgs, Format, Io, Mode, Outcome, TrainArgs};

/// Folds used by `evaluate --mode cross` when `--k` is not given.
pub const DEFAULT_FOLDS: usize = 5;

fn train_config(hyper: &Hyper, seed: u64) -> TrainConfig {
    let d = TrainConfig::default();
    TrainConfig {
        learning_rate: hyper.learning_rate.unwrap_or(d.learning_rate),
        weight_decay: hyper.weight_decay.unwrap_or(d.weight_decay),
        max_epochs: hyper.max_epochs.unwrap_or(d.max_epochs),
        batch_size: hyper.batch_size.unwrap_or(d.batch_size),
        patience: hyper.patience.unwrap_or(d.patience),
        min_freq: hyper.min_freq.unwrap_or(d.min_freq),
        seed,
        ..d
    }
}

fn parse_label(name: &str) -> anyhow::Result<Label> {
    Label::from_wire(name)
        .or_else(|| Label::ALL.into_iter().find(|l| l.short_name().eq_ignore_ascii_case(name)))
        .with_context(|| format!("unknown label `{name}`; expected one of {}", Label::wire_names().join(", ")))
}

fn paraphraser(spec: &str, model: Option<&str>) -> anyhow::Result<Box<dyn ParaphraseProvider>> {
    match spec.split_once(':') {
        None if spec == "rotation" => Ok(Box::new(RotationParaphraser)),
        Some(("chat", url)) => {
            let model = model.context("a chat paraphraser needs --paraphrase-model")?;
            Ok(Box::new(ChatParaphraser::new(url, model)?))
        }
        _ => anyhow::bail!("invalid paraphraser `{spec}`; expected `rotation` or `chat:URL`"),
    }
}

fn intra_report(result: &IntraProjectResult, format: Format) -> anyhow::Result<String> {
    Ok(match format {
        Format::Json => json(result)?,
        Format::Csv => result.report.to_csv(),
        Format::Md => result.report.to_markdown(&result.backend),
    })
}

fn cross_report(result: &CrossProjectResult, format: Format) -> anyhow::Result<String> {
    Ok(match format {
        Format::Json => json(result)?,
        Format::Csv => {
            let mut out = String::from("fold,label,precision,recall,f1,support\n");
            for fold in &result.per_fold {
                for line in fold.report.to_csv().lines().skip(1) {
                    out += &format!("{},{line}\n", fold.fold);
                }
            }
            for line in result.averaged.to_csv().lines().skip(1) {
                out += &format!("mean,{line}\n");
            }
            out
        }
        Format::Md => {
            let mut out = MetricsReport::markdown_header();
            for fold in &result.per_fold {
                out += &fold.report.markdown_row(&format!("{} fold {}", result.backend, fold.fold));
            }
            out += &result.averaged.markdown_row(&format!("{} mean", result.backend));
            out
        }
    })
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Md => "md",
    }
}

fn outcome(dropped: usize) -> Outcome {
    if dropped == 0 {
        Outcome::Clean
    } else {
        Outcome::Diagnostics
    }
}

pub(crate) fn train(ctx: &Context, args: TrainArgs, io: &mut Io) -> anyhow::Result<Outcome> {
    let section = &ctx.file.train;
    if let Some(spec) = &ctx.backend {
        anyhow::ensure!(
            matches!(spec, BackendSpec::Ngram(None)),
            "train fits an n-gram model; drop --backend or use `ngram`"
        );
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| section.out.clone())
        .context("train needs --out DIR for the model and report")?;
    let data = dataset::load(ctx, &args.data.dataset, io)?;
    let config = train_config(&section.hyper(&args.hyper), ctx.seed);
    let grid = (args.grid || section.grid).then(HyperparameterGrid::native);
    let backend = Backend::Ngram { config, grid };

    let augment_label = args.augment_label.as_ref().or(section.augment_label.as_ref());
    let provider = match augment_label {
        Some(_) => {
            let spec = args
                .paraphraser
                .as_ref()
                .or(section.paraphraser.as_ref())
                .context("--augment-label needs --paraphraser (rotation or chat:URL)")?;
            let model = args.paraphrase_model.as_ref().or(section.paraphrase_model.as_ref());
            Some(paraphraser(spec, model.map(String::as_str))?)
        }
        None => None,
    };
    let augmentation = match (augment_label, &provider) {
        (Some(label), Some(provider)) => Some(TrainAugmentation {
            label: parse_label(label)?,
            provider: provider.as_ref(),
        }),
        _ => None,
    };

    let run = run_intra_project_augmented(&data.examples, &SplitSpec::standard(ctx.seed), &backend, augmentation.as_ref())?;
    let model = run.model.context("training produced no model")?;
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    model.save(&out_dir.join("model.json"))?;
    let report = intra_report(&run.result, ctx.format)?;
    let report_path = out_dir.join(format!("report.{}", extension(ctx.format)));
    emit(io, Some(&report_path), &report)?;
    emit(io, None, &report)?;
    log::info!("model written to {}", out_dir.join("model.json").display());
    Ok(outcome(data.dropped))
}

pub(crate) fn evaluate(ctx: &Context, args: EvaluateArgs, io: &mut Io) -> anyhow::Result<Outcome> {
    let section = &ctx.file.evaluate;
    let data = dataset::load(ctx, &args.data.dataset, io)?;
    let config = train_config(&section.hyper(&args.hyper), ctx.seed);
    let mode = args.mode.or(section.mode).unwrap_or(Mode::Intra);
    let grid = args.grid || section.grid;
    let spec = ctx.backend.clone().unwrap_or(BackendSpec::Ngram(None));
    let fixed: Option<Box<dyn Classifier>> = match spec {
        BackendSpec::Ngram(None) => None,
        other => Some(backend::load(&other, ctx)?),
    };
    let backend = match &fixed {
        Some(classifier) => Backend::Fixed(classifier.as_ref()),
        None => Backend::Ngram {
            config,
            grid: grid.then(HyperparameterGrid::native),
        },
    };
    let out = args.out.as_deref().or(section.out.as_deref());
    match mode {
        Mode::Intra => {
            let run = run_intra_project(&data.examples, &SplitSpec::standard(ctx.seed), &backend)?;
            emit(io, out, &intra_report(&run.result, ctx.format)?)?;
        }
        Mode::Cross => {
            if grid {
                io.warn("--grid applies to intra-project evaluation only; cross-project folds use the base hyperparameters");
            }
            let k = args.k.or(section.k).unwrap_or(DEFAULT_FOLDS);
            let result = run_cross_project(&data.examples, k, ctx.seed, &backend)?;
            emit(io, out, &cross_report(&result, ctx.format)?)?;
        }
    }
    Ok(outcome(data.dropped))
}
