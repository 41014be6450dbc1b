//! Number rendering and CSV/JSON writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Significant digits of every floating value written.
pub const SIG_DIGITS: i32 = 12;

/// Renders `x` in positional decimal with 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-30..=30).contains(&exponent) {
        return format!("{:.*e}", (SIG_DIGITS - 1) as usize, x);
    }
    let decimals = (SIG_DIGITS - 1 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// `x` rounded to 12 significant digits, for JSON output.
pub fn round_sig(x: f64) -> f64 {
    fmt_sig(x).parse().unwrap_or(x)
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

/// Output sink: a file or stdout.
pub fn open_sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes a header and rows with LF line endings.
pub fn write_csv(out: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| quote(c)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

pub fn write_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    out.flush()
}

/// `dir/stem_{tag}.ext` next to `base`.
pub fn tagged_path(base: &Path, tag: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{tag}"),
    };
    base.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(0.41339745962155614), "0.413397459622");
        assert_eq!(fmt_sig(17.0 / 70.0), "0.242857142857");
        assert_eq!(fmt_sig(1234.5), "1234.50000000");
        assert_eq!(fmt_sig(-2.5e-5), "-0.0000250000000000");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(3e-40), "3.00000000000e-40");
        assert_eq!(round_sig(0.41339745962155614), 0.413397459622);
    }

    #[test]
    fn csv_quoting_and_paths() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["a", "b"], &[vec!["1".into(), "x,y".into()]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,\"x,y\"\n");
        assert_eq!(tagged_path(Path::new("out/sim.csv"), "p0.01"), PathBuf::from("out/sim_p0.01.csv"));
    }
}
