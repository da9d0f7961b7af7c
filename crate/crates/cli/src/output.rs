use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cumulant::analysis::ObservableTable;

use crate::CliError;

fn header(table: &ObservableTable, with_method: bool) -> String {
    let mut h = String::new();
    if with_method {
        h.push_str("method,");
    }
    h.push('t');
    for name in table.names() {
        write!(h, ",{name}_re,{name}_im,{name}_abs").unwrap();
    }
    h.push('\n');
    h
}

fn rows(table: &ObservableTable, method: Option<&str>, out: &mut String) {
    for (t, row) in table.times.iter().zip(&table.values) {
        if let Some(m) = method {
            out.push_str(m);
            out.push(',');
        }
        write!(out, "{t:.16e}").unwrap();
        for z in row {
            write!(out, ",{:.16e},{:.16e},{:.16e}", z.re, z.im, z.norm()).unwrap();
        }
        out.push('\n');
    }
}

/// CSV with one row per time and `_re`, `_im`, `_abs` columns per selector.
pub fn table_csv(table: &ObservableTable) -> String {
    let mut out = header(table, false);
    rows(table, None, &mut out);
    out
}

/// Stacked CSV of several labelled tables sharing their columns.
pub fn combined_csv(tables: &[(String, &ObservableTable)]) -> String {
    let Some((_, first)) = tables.first() else {
        return String::new();
    };
    let mut out = header(first, true);
    for (label, table) in tables {
        rows(table, Some(label), &mut out);
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn csv_path(dir: &Path, prefix: &str, picture: &str) -> PathBuf {
    dir.join(format!("{prefix}_{picture}.csv"))
}
