use satd_core::inference::{InferenceClient, InferenceEndpoint};

use crate::backend::{endpoint_url, BackendSpec};
use crate::output::{emit, json};
use crate::{Context, Io, Outcome, ServeCheckArgs};

/// Fetches `/health` and `/info` and checks the label contract.
pub(crate) fn run(ctx: &Context, args: ServeCheckArgs, io: &mut Io) -> anyhow::Result<Outcome> {
    let from_backend = match &ctx.backend {
        Some(BackendSpec::Remote(url)) => url.clone(),
        _ => None,
    };
    let url = endpoint_url(args.url.or(from_backend).as_deref(), ctx)?;
    let client = InferenceClient::new(InferenceEndpoint::new(url))?;
    let info = client.handshake()?;
    emit(io, None, &json(&info)?)?;
    Ok(Outcome::Clean)
}
