use std::io::Write;
use std::net::SocketAddr;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use footprint_server::service::system_clock;
use footprint_server::{router, Config, Service};

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let config = Config::parse();

    let service = match Service::open(config.reference_paths(), &config.data_dir, system_clock()) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };

    let listener =
        match tokio::net::TcpListener::bind(SocketAddr::new(config.bind, config.port)).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot bind {}:{}: {e}", config.bind, config.port);
                return ExitCode::FAILURE;
            }
        };
    let addr = listener.local_addr().expect("bound socket has an address");
    println!("listening on http://{addr}");
    let _ = std::io::stdout().flush();

    tokio::spawn(reload_on_hangup(service.clone()));

    if let Err(e) = axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown())
        .await
    {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

#[cfg(unix)]
async fn reload_on_hangup(service: Arc<Service>) {
    use tokio::signal::unix::{signal, SignalKind};
    let Ok(mut hup) = signal(SignalKind::hangup()) else {
        return;
    };
    while hup.recv().await.is_some() {
        let s = service.clone();
        match tokio::task::spawn_blocking(move || s.reload()).await {
            Ok(Ok(())) => tracing::info!("reference data reloaded"),
            Ok(Err(e)) => tracing::error!(error = %e, "reload failed; keeping previous data"),
            Err(e) => tracing::error!(error = %e, "reload task failed"),
        }
    }
}

#[cfg(not(unix))]
async fn reload_on_hangup(_service: Arc<Service>) {}

async fn shutdown() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
