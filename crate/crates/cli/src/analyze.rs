use std::path::{Path, PathBuf};

use anyhow::Context as _;
use satd_core::analyzer::{
    analyze_repo, check_selection, cohort_report, compare_cohorts, render_csv, render_instances,
    render_markdown, AnalyzeConfig, CohortComparison, CohortReport, GitHubMetadata, LocalMetadata,
    MetadataSource, RepoReport, ReportStatus, SelectionCriteria,
};
use satd_core::classifier::Classifier;
use satd_core::extract::ScanConfig;
use serde::Serialize;

use crate::backend::{self, BackendSpec};
use crate::output::{emit, json, json_lines};
use crate::{AnalyzeArgs, Context, Format, Io, Outcome, Render};

/// Names used for the two sides of `--compare`.
const FIRST: &str = "first";
const SECOND: &str = "second";

/// One repository to analyze.
#[derive(Debug, Clone, PartialEq)]
struct Target {
    path: PathBuf,
    domain: String,
    /// Key for metadata lookup; the directory name unless given.
    slug: Option<String>,
}

impl Target {
    fn name(&self) -> String {
        self.path
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| self.path.display().to_string())
    }
}

/// Reads `PATH[,DOMAIN[,SLUG]]` lines; blank lines and `#` comments are
/// skipped, relative paths resolve against the list's directory.
fn read_repo_list(path: &Path, default_domain: &str) -> anyhow::Result<Vec<Target>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let mut fields = line.split(',').map(str::trim);
            let repo = fields.next().unwrap_or_default();
            let domain = fields.next().filter(|d| !d.is_empty()).unwrap_or(default_domain);
            let slug = fields.next().filter(|s| !s.is_empty()).map(str::to_string);
            Target {
                path: base.join(repo),
                domain: domain.to_string(),
                slug,
            }
        })
        .collect())
}

struct Selection {
    criteria: SelectionCriteria,
    source: Box<dyn MetadataSource>,
    enforce: bool,
}

fn selection(ctx: &Context, args: &AnalyzeArgs) -> anyhow::Result<Option<Selection>> {
    let section = &ctx.file.analyze;
    let Some(criteria_path) = args.criteria.as_ref().or(section.criteria.as_ref()) else {
        return Ok(None);
    };
    let criteria = SelectionCriteria::load(criteria_path)
        .with_context(|| format!("loading criteria {}", criteria_path.display()))?;
    let metadata = args.metadata.as_ref().or(section.metadata.as_ref());
    let github = args.github_api.as_ref().or(section.github_api.as_ref());
    let source: Box<dyn MetadataSource> = match (metadata, github) {
        (Some(path), _) => Box::new(
            LocalMetadata::load(path).with_context(|| format!("loading metadata {}", path.display()))?,
        ),
        (None, Some(api)) => Box::new(GitHubMetadata::new(api.clone(), std::env::var("GITHUB_TOKEN").ok())?),
        (None, None) => anyhow::bail!("--criteria needs --metadata FILE or --github-api URL"),
    };
    Ok(Some(Selection {
        criteria,
        source,
        enforce: args.enforce_criteria || section.enforce_criteria,
    }))
}

/// Checks the selection criteria; returns false when the repo must be skipped.
fn admitted(target: &Target, selection: &Selection, io: &mut Io, diagnostics: &mut bool) -> bool {
    let key = target.slug.clone().unwrap_or_else(|| target.name());
    let outcome = selection
        .source
        .metadata(&key)
        .map_err(|e| e.to_string())
        .and_then(|meta| check_selection(&meta, &selection.criteria).map_err(|e| e.to_string()));
    match outcome {
        Ok(o) if o.passed => true,
        Ok(o) => {
            let reasons: Vec<String> = o.failures.iter().map(ToString::to_string).collect();
            let action = if selection.enforce { "skipped" } else { "analyzed anyway" };
            io.warn(format!("{key} fails the selection criteria ({}); {action}", reasons.join("; ")));
            !selection.enforce
        }
        Err(message) => {
            *diagnostics = true;
            let action = if selection.enforce { "skipped" } else { "analyzed anyway" };
            io.warn(format!("{key}: cannot check selection criteria: {message}; {action}"));
            !selection.enforce
        }
    }
}

fn analyze_all(
    targets: &[Target],
    classifier: &dyn Classifier,
    ctx: &Context,
    selection: Option<&Selection>,
    io: &mut Io,
    diagnostics: &mut bool,
) -> anyhow::Result<Vec<RepoReport>> {
    let mut reports = Vec::with_capacity(targets.len());
    for target in targets {
        if let Some(sel) = selection {
            if !admitted(target, sel, io, diagnostics) {
                continue;
            }
        }
        let config = AnalyzeConfig {
            scan: ScanConfig {
                jobs: ctx.jobs,
                ..ScanConfig::default()
            },
            domain_tag: target.domain.clone(),
            stop_words: ctx.stop_words.clone(),
        };
        let analysis = analyze_repo(&target.path, classifier, &config)
            .with_context(|| format!("analyzing {}", target.path.display()))?;
        for d in &analysis.diagnostics {
            io.warn(format!("{}: {d}", analysis.report.repo_name));
        }
        *diagnostics |= !analysis.diagnostics.is_empty();
        if analysis.report.status == ReportStatus::Incomplete {
            io.warn(format!(
                "{}: report incomplete, {} unreadable files",
                analysis.report.repo_name,
                analysis.report.unreadable_files.len()
            ));
        }
        reports.push(analysis.report);
    }
    Ok(reports)
}

#[derive(Serialize)]
struct Comparison<'a> {
    first: &'a CohortReport,
    second: &'a CohortReport,
    comparison: &'a CohortComparison,
}

fn comparison_markdown(c: &CohortComparison) -> String {
    let mut out = format!(
        "| Ratio ({} / {}) | Value |\n|---|---|\n| %SCI | {:.2} |\n| %SATD | {:.2} |\n",
        c.first, c.second, c.ratio_sci, c.ratio_satd
    );
    for (label, ratio) in c.label_rate_ratios.iter() {
        let cell = ratio.map_or_else(|| "n/a".to_string(), |r| format!("{r:.2}"));
        out += &format!("| {} rate | {cell} |\n", label.short_name());
    }
    out
}

fn cohort(reports: Vec<RepoReport>, name: &str) -> anyhow::Result<CohortReport> {
    cohort_report(reports).with_context(|| format!("cannot aggregate the {name} cohort"))
}

pub(crate) fn run(ctx: &Context, args: AnalyzeArgs, io: &mut Io) -> anyhow::Result<Outcome> {
    let section = &ctx.file.analyze;
    let domain = args.domain.clone().or_else(|| section.domain.clone()).unwrap_or_default();
    let target = |path: &PathBuf| Target {
        path: path.clone(),
        domain: domain.clone(),
        slug: None,
    };
    let mut first: Vec<Target> = args.repos.iter().map(target).collect();
    if let Some(list) = &args.repo_list {
        first.extend(read_repo_list(list, &domain)?);
    }
    anyhow::ensure!(!first.is_empty(), "no repositories given");
    let second: Vec<Target> = args.compare.iter().map(target).collect();

    let spec = ctx.backend.clone().unwrap_or(BackendSpec::Patterns(None));
    let classifier = backend::load(&spec, ctx)?;
    let selection = selection(ctx, &args)?;
    let render = args.render.or(section.render).unwrap_or(match ctx.format {
        Format::Json => Render::Json,
        Format::Csv => Render::Csv,
        Format::Md => Render::Md,
    });

    let mut diagnostics = false;
    let first = analyze_all(&first, classifier.as_ref(), ctx, selection.as_ref(), io, &mut diagnostics)?;
    anyhow::ensure!(!first.is_empty(), "every repository was excluded by the selection criteria");
    let second = analyze_all(&second, classifier.as_ref(), ctx, selection.as_ref(), io, &mut diagnostics)?;
    let incomplete = first.iter().chain(&second).any(|r| r.status == ReportStatus::Incomplete);

    let all: Vec<RepoReport> = first.iter().chain(&second).cloned().collect();
    let text = match render {
        Render::Csv => render_csv(&all),
        Render::Instances => json_lines(&render_instances(&all))?,
        Render::Json | Render::Md if !args.compare.is_empty() => {
            anyhow::ensure!(!second.is_empty(), "every comparison repository was excluded");
            let a = cohort(first, FIRST)?;
            let b = cohort(second, SECOND)?;
            let c = compare_cohorts(FIRST, &a, SECOND, &b)?;
            if render == Render::Json {
                json(&Comparison {
                    first: &a,
                    second: &b,
                    comparison: &c,
                })?
            } else {
                format!(
                    "## {FIRST}\n\n{}\n## {SECOND}\n\n{}\n{}",
                    render_markdown(&a.repos, Some(&a)),
                    render_markdown(&b.repos, Some(&b)),
                    comparison_markdown(&c)
                )
            }
        }
        Render::Json if first.len() == 1 => json(&first[0])?,
        Render::Md if first.len() == 1 => render_markdown(&first, None),
        Render::Json => json(&cohort(first, FIRST)?)?,
        Render::Md => {
            let c = cohort(first, FIRST)?;
            render_markdown(&c.repos, Some(&c))
        }
    };
    emit(io, args.out.as_deref().or(section.out.as_deref()), &text)?;
    Ok(if diagnostics || incomplete {
        Outcome::Diagnostics
    } else {
        Outcome::Clean
    })
}
