//! Command-line flags. Each flag can also come from a `FOOTPRINT_*`
//! environment variable; the flag wins when both are set.

use std::net::IpAddr;
use std::path::PathBuf;

use clap::Parser;

use crate::service::ReferencePaths;

#[derive(Clone, Debug, Parser)]
#[command(
    name = "footprint",
    version,
    about = "Personal carbon footprint tracking service"
)]
pub struct Config {
    /// Port to listen on; 0 picks a free one.
    #[arg(long, env = "FOOTPRINT_PORT", default_value_t = 8080)]
    pub port: u16,

    #[arg(long, env = "FOOTPRINT_BIND", default_value = "127.0.0.1")]
    pub bind: IpAddr,

    /// Directory holding events.jsonl, journal.jsonl and users.jsonl.
    #[arg(long, env = "FOOTPRINT_DATA_DIR")]
    pub data_dir: PathBuf,

    /// Emission factor CSV.
    #[arg(long, env = "FOOTPRINT_FACTORS")]
    pub factors: PathBuf,

    /// Product catalog CSV.
    #[arg(long, env = "FOOTPRINT_CATALOG")]
    pub catalog: PathBuf,

    /// Electricity tariff CSV.
    #[arg(long, env = "FOOTPRINT_TARIFFS")]
    pub tariffs: PathBuf,

    /// Restaurant menus JSON.
    #[arg(long, env = "FOOTPRINT_MENUS")]
    pub menus: PathBuf,

    /// Tip rules JSON; built-in rules when omitted.
    #[arg(long, env = "FOOTPRINT_TIPS_CONFIG")]
    pub tips_config: Option<PathBuf>,
}

impl Config {
    pub fn reference_paths(&self) -> ReferencePaths {
        ReferencePaths {
            factors: self.factors.clone(),
            catalog: self.catalog.clone(),
            tariffs: self.tariffs.clone(),
            menus: self.menus.clone(),
            tips: self.tips_config.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse() {
        let c = Config::try_parse_from([
            "footprint",
            "--port",
            "0",
            "--data-dir",
            "d",
            "--factors",
            "f.csv",
            "--catalog",
            "c.csv",
            "--tariffs",
            "t.csv",
            "--menus",
            "m.json",
        ])
        .unwrap();
        assert_eq!(c.port, 0);
        assert!(c.tips_config.is_none());
        assert!(Config::try_parse_from(["footprint", "--port", "1"]).is_err());
    }
}
