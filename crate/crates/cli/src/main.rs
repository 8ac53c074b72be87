//! `geoatlas`: validate KML data, convert coordinates, query a dataset, emit
//! view-sync fixtures and run the HTTP server.
//!
//! Exit codes: 0 success, 1 data or request errors, 2 unreadable input,
//! usage errors and startup failures.

use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geoatlas_core::fixtures::{fixtures_json, generate_fixtures};
use geoatlas_core::geo::{decimal_to_dms, dms_to_decimal, Axis, DmsAngle, GeoPoint};
use geoatlas_core::kml::{parse_document, AxisOrder, KmlError, ParseMode, ParseOptions, Severity};
use geoatlas_server::api::{list_placemarks, search_nearest};
use geoatlas_server::{load_state, AppState, StateHandle};

#[derive(Debug, Parser)]
#[command(
    name = "geoatlas",
    version,
    about = "Web GIS tooling for KML landmark datasets"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// KML dataset.
    #[arg(long, global = true, env = "GEOATLAS_DATA")]
    data: Option<PathBuf>,
    /// Tuple order inside `<coordinates>`.
    #[arg(long, global = true, default_value = "lon-lat")]
    axis_order: AxisOrder,
    /// Abort on the first structural error instead of repairing it.
    #[arg(long, global = true)]
    strict: bool,
    #[arg(long, global = true, default_value_t = 8080, value_parser = clap::value_parser!(u16).range(1..))]
    port: u16,
    /// Directory served at `/` by `serve`.
    #[arg(long, global = true)]
    static_dir: Option<PathBuf>,
}

impl GlobalArgs {
    fn parse_options(&self) -> ParseOptions {
        let mode = if self.strict {
            ParseMode::Strict
        } else {
            ParseMode::Lenient
        };
        ParseOptions::new(self.axis_order, mode)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report structural issues in a KML file.
    Validate {
        /// File to check; defaults to --data.
        file: Option<PathBuf>,
    },
    /// Convert between DMS text and decimal degrees.
    #[command(subcommand)]
    Convert(ConvertCommand),
    /// Run a spatial query against --data.
    #[command(subcommand)]
    Query(QueryCommand),
    /// Write the view-sync fixture vectors.
    Fixtures {
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the REST API over --data.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

#[derive(Debug, Subcommand)]
enum ConvertCommand {
    /// DMS text such as 7°44'12.75"N to decimal degrees.
    Dms { text: String },
    /// Decimal degrees to DMS text.
    Decimal {
        #[arg(allow_negative_numbers = true)]
        value: f64,
        #[arg(long, value_enum, default_value = "lat")]
        axis: AxisArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Lat,
    Lng,
}

#[derive(Debug, Subcommand)]
enum QueryCommand {
    /// The k closest placemarks: `id<TAB>distance_m` per line.
    Nearest {
        #[arg(long, allow_negative_numbers = true)]
        lat: f64,
        #[arg(long, allow_negative_numbers = true)]
        lng: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Placemarks inside `minLng,minLat,maxLng,maxLat`: one id per line.
    Bbox {
        #[arg(allow_hyphen_values = true)]
        bbox: String,
    },
}

/// Exit code plus a message for standard error.
struct Failure(u8, String);

type Outcome = Result<u8, Failure>;

fn data_path(global: &GlobalArgs) -> Result<&Path, Failure> {
    global
        .data
        .as_deref()
        .ok_or_else(|| Failure(2, "no dataset: pass --data or set GEOATLAS_DATA".into()))
}

fn load(global: &GlobalArgs) -> Result<AppState, Failure> {
    load_state(data_path(global)?, global.parse_options()).map_err(|e| Failure(2, e.to_string()))
}

fn run_validate(global: &GlobalArgs, file: Option<&Path>, out: &mut impl Write) -> Outcome {
    let path = match file {
        Some(p) => p,
        None => data_path(global)?,
    };
    let bytes = std::fs::read(path).map_err(|e| Failure(2, format!("{}: {e}", path.display())))?;
    match parse_document(&bytes, &global.parse_options()) {
        Ok((_, issues)) => {
            for issue in &issues {
                writeln!(out, "{issue}").map_err(io_failure)?;
            }
            Ok(u8::from(
                issues.iter().any(|i| i.severity == Severity::Error),
            ))
        }
        Err(KmlError::Strict(issue)) => {
            writeln!(out, "{issue}").map_err(io_failure)?;
            Ok(1)
        }
        Err(e) => Err(Failure(2, format!("{}: {e}", path.display()))),
    }
}

fn run_convert(cmd: &ConvertCommand, out: &mut impl Write) -> Outcome {
    let line = match cmd {
        ConvertCommand::Dms { text } => {
            let angle: DmsAngle = text
                .parse()
                .map_err(|e| Failure(2, format!("{text}: {e}")))?;
            let value = dms_to_decimal(&angle).map_err(|e| Failure(2, e.to_string()))?;
            format!("{value:.7}")
        }
        ConvertCommand::Decimal { value, axis } => {
            let axis = match axis {
                AxisArg::Lat => Axis::Lat,
                AxisArg::Lng => Axis::Lng,
            };
            decimal_to_dms(*value, axis)
                .map_err(|e| Failure(2, e.to_string()))?
                .to_string()
        }
    };
    writeln!(out, "{line}").map_err(io_failure)?;
    Ok(0)
}

fn run_query(global: &GlobalArgs, cmd: &QueryCommand, out: &mut impl Write) -> Outcome {
    let state = load(global)?;
    match cmd {
        QueryCommand::Nearest { lat, lng, k } => {
            let p = GeoPoint {
                lat_deg: *lat,
                lng_deg: *lng,
                alt_m: None,
            };
            let hits = search_nearest(&state, &p, *k).map_err(|e| Failure(1, e.message))?;
            for hit in hits {
                writeln!(out, "{}\t{:?}", hit.id, hit.distance_m).map_err(io_failure)?;
            }
        }
        QueryCommand::Bbox { bbox } => {
            let hits = list_placemarks(&state, Some(bbox)).map_err(|e| Failure(1, e.message))?;
            for hit in hits {
                writeln!(out, "{}", hit.id).map_err(io_failure)?;
            }
        }
    }
    Ok(0)
}

fn run_fixtures(out_path: Option<&Path>, out: &mut impl Write) -> Outcome {
    let text = fixtures_json(&generate_fixtures());
    match out_path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure(2, format!("{}: {e}", path.display())))?,
        None => out.write_all(text.as_bytes()).map_err(io_failure)?,
    }
    Ok(0)
}

fn run_serve(global: &GlobalArgs, host: std::net::IpAddr) -> Outcome {
    let state = load(global)?;
    for issue in &state.issues {
        log::warn!("{issue}");
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure(2, e.to_string()))?;
    runtime.block_on(async {
        let addr = SocketAddr::new(host, global.port);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure(2, format!("bind {addr}: {e}")))?;
        let handle = Arc::new(StateHandle::new(state));
        #[cfg(unix)]
        geoatlas_server::spawn_reload_on_sighup(handle.clone())
            .map_err(|e| Failure(2, e.to_string()))?;
        log::info!(
            "serving {} placemarks on http://{}",
            handle.snapshot().index.len(),
            listener
                .local_addr()
                .map_err(|e| Failure(2, e.to_string()))?
        );
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        geoatlas_server::serve(listener, handle, global.static_dir.clone(), shutdown)
            .await
            .map_err(|e| Failure(2, e.to_string()))?;
        Ok(0)
    })
}

fn io_failure(e: io::Error) -> Failure {
    Failure(2, format!("write failed: {e}"))
}

fn run(cli: &Cli, out: &mut impl Write) -> Outcome {
    match &cli.command {
        Command::Validate { file } => run_validate(&cli.global, file.as_deref(), out),
        Command::Convert(cmd) => run_convert(cmd, out),
        Command::Query(cmd) => run_query(&cli.global, cmd, out),
        Command::Fixtures { out: path } => run_fixtures(path.as_deref(), out),
        Command::Serve { host } => run_serve(&cli.global, *host),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match run(&cli, &mut out) {
        Ok(code) => code,
        Err(Failure(code, message)) => {
            eprintln!("geoatlas: {message}");
            code
        }
    };
    let _ = out.flush();
    ExitCode::from(code)
}
