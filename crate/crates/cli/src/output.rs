use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Significant digits written for every floating-point value.
pub const SIG_DIGITS: usize = 13;

/// Rounds to [`SIG_DIGITS`] significant digits and prints the shortest form
/// that reads back to the rounded value.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{:.*e}", SIG_DIGITS - 1, x).parse().expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-4..1e15).contains(&mag) {
        rounded.to_string()
    } else {
        format!("{rounded:e}")
    }
}

/// A CSV table built row by row.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// `table.csv` -> `table.curves.csv`.
pub fn curves_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.curves.{}", ext.to_string_lossy()),
        None => format!("{stem}.curves"),
    };
    path.with_file_name(name)
}

/// Writes `text` to `path`, or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(1499.9999833123456), "1499.999983312");
        assert_eq!(num(40.40905), "40.40905");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-2.5e-12), "-2.5e-12");
        assert_eq!(num(1.0 / 3.0), "0.3333333333333");
    }

    #[test]
    fn derived_curve_path() {
        assert_eq!(curves_path(Path::new("out/t.csv")), PathBuf::from("out/t.curves.csv"));
        assert_eq!(curves_path(Path::new("t")), PathBuf::from("t.curves"));
    }
}
