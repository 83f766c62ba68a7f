//! Data set catalogs: one `name train-path [test-path]` entry per line.
//!
//! Relative paths resolve against the catalog's directory, `-` stands for "no
//! test file" and `#` starts a comment.

use std::path::{Path, PathBuf};

use crate::error::{read_to_string, BenchError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: String,
    pub train: PathBuf,
    pub test: Option<PathBuf>,
}

pub fn parse_catalog(text: &str, base: &Path) -> Result<Vec<CatalogEntry>> {
    let resolve = |p: &str| {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let mut entries: Vec<CatalogEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let entry = match fields.as_slice() {
            [name, train] | [name, train, "-"] => CatalogEntry {
                name: name.to_string(),
                train: resolve(train),
                test: None,
            },
            [name, train, test] => CatalogEntry {
                name: name.to_string(),
                train: resolve(train),
                test: Some(resolve(test)),
            },
            _ => return Err(BenchError::format(i + 1, "expected `name train-path [test-path]`")),
        };
        if entries.iter().any(|e| e.name == entry.name) {
            return Err(BenchError::format(
                i + 1,
                format!("duplicate data set {:?}", entry.name),
            ));
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn read_catalog(path: &Path) -> Result<Vec<CatalogEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    parse_catalog(&read_to_string(path)?, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_and_comments() {
        let text = "# bundled\niris0 iris0.dat\nglass0 glass0-tra.dat glass0-tst.dat # keel split\nx /abs/x.dat -\n\n";
        let e = parse_catalog(text, Path::new("/data")).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e[0].train, PathBuf::from("/data/iris0.dat"));
        assert_eq!(e[0].test, None);
        assert_eq!(e[1].test, Some(PathBuf::from("/data/glass0-tst.dat")));
        assert_eq!(e[2].train, PathBuf::from("/abs/x.dat"));
        assert_eq!(e[2].test, None);
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            parse_catalog("only-name\n", Path::new(".")),
            Err(BenchError::Format { line: 1, .. })
        ));
        assert!(parse_catalog("a x\na y\n", Path::new(".")).is_err());
    }
}
