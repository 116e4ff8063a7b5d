//! Optional download of the public FRED series used by the nowcast experiment.

use std::path::Path;

use crate::error::{CliError, Result};

pub fn fred_url(series: &str) -> String {
    format!("https://fred.stlouisfed.org/graph/fredgraph.csv?id={series}")
}

/// Downloads `series` as CSV (columns `observation_date`, `<series>`) to `dest`.
#[cfg(feature = "fetch")]
pub fn fetch_fred(series: &str, dest: &Path) -> Result<()> {
    let url = fred_url(series);
    log::info!("downloading {url}");
    let mut resp = ureq::get(&url).call().map_err(|e| CliError::Data(format!("{url}: {e}")))?;
    let body = resp.body_mut().read_to_string().map_err(|e| CliError::Data(format!("{url}: {e}")))?;
    if !body.starts_with("observation_date") && !body.starts_with("DATE") {
        return Err(CliError::Data(format!("{url}: unexpected response")));
    }
    if let Some(dir) = dest.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(dest, body)?;
    Ok(())
}

#[cfg(not(feature = "fetch"))]
pub fn fetch_fred(series: &str, _dest: &Path) -> Result<()> {
    Err(CliError::Validation(format!("cannot fetch {series}: built without the `fetch` feature")))
}
