use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub type CsvWriter = csv::Writer<BufWriter<File>>;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Opens `dir/name`, writes the digest line and the column names.
pub fn create_csv(dir: &Path, name: &str, digest: &str, columns: &[&str]) -> Result<(PathBuf, CsvWriter)> {
    let path = dir.join(name);
    let mut file = BufWriter::new(File::create(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?);
    writeln!(file, "# config_digest={digest}").map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(columns)?;
    Ok((path, w))
}

pub fn finish(path: &Path, mut w: CsvWriter) -> Result<()> {
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Shortest round-trip representation; empty for missing values.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// File-name friendly form of a strategy label.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '.' | '-' => c,
            '*' => 's',
            _ => '_',
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_line_precedes_columns() {
        let dir = tempfile::tempdir().unwrap();
        let (path, mut w) = create_csv(dir.path(), "x.csv", "abc", &["a", "b"]).unwrap();
        w.write_record([num(0.5), opt(None)]).unwrap();
        finish(&path, w).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "# config_digest=abc\na,b\n0.5,\n");
    }

    #[test]
    fn slugs_are_path_safe() {
        assert_eq!(slug("SDRA-CCM*"), "SDRA-CCMs");
        assert_eq!(slug("SDRA-CCM-n/e"), "SDRA-CCM-n_e");
    }
}
