use std::ffi::OsString;
use std::path::Path;

use anyhow::{Context, Result};

/// Expands `--args-from <file>` in place. The file holds one flag per line,
/// optionally followed by its value; blank lines and `#` comments are skipped.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut out = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        let path = if let Some(p) = s.strip_prefix("--args-from=") {
            Some(p.to_string())
        } else if s == "--args-from" {
            let p = iter.next().context("--args-from needs a file path")?;
            Some(p.to_string_lossy().into_owned())
        } else {
            None
        };
        match path {
            Some(p) => out.extend(read_flags(Path::new(&p))?),
            None => out.push(a),
        }
    }
    Ok(out)
}

fn read_flags(path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once(char::is_whitespace) {
            Some((flag, value)) => {
                out.push(flag.into());
                out.push(value.trim().into());
            }
            None => out.push(line.into()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expands_in_place() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("flags");
        std::fs::write(&p, "# run\n--model logistic:2\n\n--x -3,-4\n").unwrap();
        let args: Vec<OsString> = ["recmax", "norm", "--args-from", p.to_str().unwrap()]
            .iter()
            .map(OsString::from)
            .collect();
        let got = expand(args).unwrap();
        let want: Vec<OsString> = ["recmax", "norm", "--model", "logistic:2", "--x", "-3,-4"]
            .iter()
            .map(OsString::from)
            .collect();
        assert_eq!(got, want);
    }
}
