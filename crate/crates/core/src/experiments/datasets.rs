use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{load_tickers, parse_returns, ReturnsMatrix};

use super::sha256_hex;

/// Overrides the directory searched for dataset files.
pub const DATA_DIR_ENV: &str = "RELUTIL_DATA_DIR";

/// The two NYSE daily-return datasets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    /// 5651 days, 36 stocks, ending 1984.
    Nyse1,
    /// 11178 days, 19 stocks, ending 2006.
    #[default]
    Nyse2,
}

impl Dataset {
    pub fn file_stem(self) -> &'static str {
        match self {
            Dataset::Nyse1 => "nyse_o",
            Dataset::Nyse2 => "nyse_n",
        }
    }

    /// `(rows, cols)` of the published file.
    pub fn shape(self) -> (usize, usize) {
        match self {
            Dataset::Nyse1 => (5651, 36),
            Dataset::Nyse2 => (11178, 19),
        }
    }

    pub fn default_path(self) -> PathBuf {
        data_dir().join(format!("{}.txt", self.file_stem()))
    }
}

/// `$RELUTIL_DATA_DIR`, or `data` under the working directory.
pub fn data_dir() -> PathBuf {
    env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("data"), PathBuf::from)
}

/// Ticker sidecar: the explicit path, else `<data stem>.tickers` beside the
/// data file, else the dataset's default sidecar in the data directory.
pub fn resolve_tickers(dataset: Dataset, data: &Path, explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(t) = explicit {
        return Some(t.to_path_buf());
    }
    [
        data.with_extension("tickers"),
        data_dir().join(format!("{}.tickers", dataset.file_stem())),
    ]
    .into_iter()
    .find(|p| p.is_file())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedDataset {
    pub returns: ReturnsMatrix<f64>,
    pub path: PathBuf,
    pub sha256: String,
}

/// Loads `data` (or the dataset's default file) with tickers attached.
/// A missing data file is [`Error::DataMissing`].
pub fn load_named_dataset(dataset: Dataset, data: Option<&Path>, tickers: Option<&Path>) -> Result<LoadedDataset> {
    let path = data.map_or_else(|| dataset.default_path(), Path::to_path_buf);
    if !path.is_file() {
        return Err(Error::DataMissing(path));
    }
    let bytes = fs::read(&path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse {
        line: 0,
        column: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    let mut returns: ReturnsMatrix<f64> = parse_returns(text)?;
    if let Some(t) = resolve_tickers(dataset, &path, tickers) {
        if !t.is_file() {
            return Err(Error::DataMissing(t));
        }
        returns = returns.with_labels(load_tickers(&t)?)?;
    }
    Ok(LoadedDataset {
        returns,
        sha256: sha256_hex(&bytes),
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_file_is_reported_as_missing() {
        let err = load_named_dataset(Dataset::Nyse2, Some(Path::new("/nonexistent/nyse_n.txt")), None).unwrap_err();
        assert!(matches!(err, Error::DataMissing(_)));
    }

    #[test]
    fn sidecar_beside_the_data_file_is_used() {
        let dir = std::env::temp_dir().join(format!("relutil-ds-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let data = dir.join("toy.txt");
        fs::write(&data, "1.0 2.0\n0.5 1.0\n").unwrap();
        fs::write(dir.join("toy.tickers"), "aa bb\n").unwrap();
        let loaded = load_named_dataset(Dataset::Nyse2, Some(&data), None).unwrap();
        assert_eq!(loaded.returns.labels().unwrap(), &["aa".to_owned(), "bb".to_owned()]);
        assert_eq!(loaded.returns.rows(), 2);
        assert_eq!(loaded.sha256.len(), 64);
        fs::remove_dir_all(&dir).unwrap();
    }
}
