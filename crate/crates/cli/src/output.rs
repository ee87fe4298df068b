//! Deterministic file output: 17-significant-digit CSV, stable JSON, and
//! removal of partial outputs when a command fails.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Formats a float with 17 significant digits, enough to round-trip any
/// binary64 value exactly through text.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A run output directory that tracks everything it writes so a failing
/// command can remove its partial results.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
    made_dirs: Vec<PathBuf>,
}

impl OutputDir {
    /// Opens (creating if needed) the output directory.
    pub fn create(root: &Path) -> std::io::Result<Self> {
        let mut made_dirs = Vec::new();
        if !root.exists() {
            fs::create_dir_all(root)?;
            made_dirs.push(root.to_path_buf());
        }
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
            made_dirs,
        })
    }

    /// The directory path.
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes raw bytes to `rel`, creating parent directories as needed.
    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            if !parent.exists() {
                fs::create_dir_all(parent)?;
                self.made_dirs.push(parent.to_path_buf());
            }
        }
        let mut f = fs::File::create(&path)?;
        f.write_all(bytes)?;
        self.written.push(path);
        Ok(())
    }

    /// Writes a CSV file with a header row; every row must match the header
    /// width. Lines end with a bare `\n`.
    pub fn write_csv(
        &mut self,
        rel: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> std::io::Result<()> {
        let mut text = String::new();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len(), "csv row width mismatch in {rel}");
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_bytes(rel, text.as_bytes())
    }

    /// Writes pretty-printed JSON with a trailing newline. Field order
    /// follows the struct definition, so identical values give identical
    /// bytes.
    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        text.push('\n');
        self.write_bytes(rel, text.as_bytes())
    }

    /// Removes everything this handle wrote, then any directories it
    /// created that are now empty. Used when a command fails after having
    /// produced some files.
    pub fn discard(self) {
        for path in self.written.iter().rev() {
            let _ = fs::remove_file(path);
        }
        for dir in self.made_dirs.iter().rev() {
            let _ = fs::remove_dir(dir);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips_and_has_17_digits() {
        for v in [
            0.0,
            1.0,
            -2.2872223758490517e-1,
            4.5,
            6.3,
            f64::MIN_POSITIVE,
            1.0 + f64::EPSILON,
        ] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "round trip failed for {s}");
        }
        assert_eq!(fmt_f64(4.5), "4.5000000000000000e0");
    }

    #[test]
    fn csv_uses_lf_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_csv(
            "t.csv",
            &["a", "b"],
            &[vec!["1".into(), "2".into()], vec!["3".into(), "4".into()]],
        )
        .unwrap();
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "a,b\n1,2\n3,4\n");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn discard_removes_files_and_created_subdirectories() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("run");
        let mut out = OutputDir::create(&root).unwrap();
        out.write_bytes("a.txt", b"x").unwrap();
        out.write_bytes("sub/b.txt", b"y").unwrap();
        assert!(root.join("sub/b.txt").exists());
        out.discard();
        assert!(!root.join("a.txt").exists());
        assert!(!root.join("sub").exists());
        assert!(!root.exists());
    }

    #[test]
    fn discard_keeps_preexisting_directories() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_bytes("a.txt", b"x").unwrap();
        out.discard();
        assert!(dir.path().exists());
    }
}
