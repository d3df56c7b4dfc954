use std::net::SocketAddr;
use std::time::Duration;

use clap::Parser;
use qrscript_service::{serve, ServiceConfig};

/// HTTP session service for decision-tree QR programs.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Address to listen on.
    #[arg(long, env = "QRSCRIPT_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Seconds a session lives after creation.
    #[arg(long, env = "QRSCRIPT_SESSION_TTL", default_value_t = 1800)]
    ttl: u64,
    /// Largest accepted payload, in bytes.
    #[arg(long, env = "QRSCRIPT_MAX_PAYLOAD", default_value_t = qrscript::qrio::MAX_PAYLOAD_BYTES)]
    max_payload: usize,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let config = ServiceConfig {
        session_ttl: Duration::from_secs(args.ttl),
        max_payload: args.max_payload,
    };
    let listener = tokio::net::TcpListener::bind(args.listen).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    serve(listener, config).await
}
