use satd_core::extract::{scan_repository, ScanConfig};

use crate::output::{emit, json_lines};
use crate::{Context, ExtractArgs, Format, Io, Outcome};

pub(crate) fn run(ctx: &Context, args: ExtractArgs, io: &mut Io) -> anyhow::Result<Outcome> {
    let config = ScanConfig {
        languages: (!args.langs.is_empty()).then_some(args.langs),
        jobs: ctx.jobs,
        ..ScanConfig::default()
    };
    let scan = scan_repository(&args.path, &config)?;
    let text = match ctx.format {
        Format::Json => json_lines(&scan.comments)?,
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for comment in &scan.comments {
                writer.serialize(comment)?;
            }
            String::from_utf8(writer.into_inner()?)?
        }
        Format::Md => anyhow::bail!("extract writes json or csv, not md"),
    };
    emit(io, args.out.as_deref(), &text)?;
    log::info!("{} comments from {} files", scan.comments.len(), scan.files_scanned);
    for diagnostic in &scan.diagnostics {
        io.warn(diagnostic);
    }
    Ok(if scan.diagnostics.is_empty() {
        Outcome::Clean
    } else {
        Outcome::Diagnostics
    })
}
