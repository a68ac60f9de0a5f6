use std::path::Path;

use schrolab_experiments::{ExperimentConfig, Kind};

use crate::error::{CliError, Result};

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "SCHROLAB_OUT";

/// `(line, key, value)` triples of a `key = value` file; blank lines and
/// `#` comments are skipped.
pub fn parse_settings(path: &Path, text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Syntax {
                path: path.to_path_buf(),
                line: i + 1,
                text: line.to_string(),
            });
        };
        out.push((i + 1, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn reject_kind(key: &str) -> Result<()> {
    if key == "kind" {
        return Err(CliError::Usage("`kind` is chosen by the subcommand".into()));
    }
    Ok(())
}

/// The kind's preset, then the file, then `SCHROLAB_OUT`, then the flag
/// overrides; the result is validated.
pub fn load_config(
    kind: Kind,
    path: Option<&Path>,
    overrides: &[(&str, String)],
) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::preset(kind);
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        for (line, key, value) in parse_settings(path, &text)? {
            reject_kind(&key)?;
            cfg.set(&key, &value).map_err(|source| CliError::Setting {
                path: path.to_path_buf(),
                line,
                source,
            })?;
        }
    }
    if let Some(dir) = std::env::var_os(OUT_ENV) {
        cfg.out_dir = dir.into();
    }
    for (key, value) in overrides {
        reject_kind(key)?;
        cfg.set(key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(text: &str) -> (tempfile::NamedTempFile, std::path::PathBuf) {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        let p = f.path().to_path_buf();
        (f, p)
    }

    #[test]
    fn empty_file_gives_defaults() {
        let (_f, p) = file("# nothing here\n\n");
        let cfg = load_config(Kind::ResolventDecay, Some(&p), &[]).unwrap();
        let mut want = ExperimentConfig::defaults(Kind::ResolventDecay);
        want.out_dir = cfg.out_dir.clone();
        assert_eq!(cfg, want);
        assert_eq!(
            (cfg.n, cfg.points, cfg.box_length, cfg.m, cfg.c1, cfg.seed),
            (1, 4096, 256.0, 2, 2.0, 7)
        );
    }

    #[test]
    fn flags_win_over_the_file() {
        let (_f, p) = file("N = 4096\nt = 1, 2 # trailing comment\n");
        let cfg = load_config(Kind::LpBound, Some(&p), &[("N", "8192".into())]).unwrap();
        assert_eq!(cfg.points, 8192);
        assert_eq!(cfg.t, vec![1.0, 2.0]);
    }

    #[test]
    fn bad_settings_name_the_key() {
        let (_f, p) = file("c1 = 0.5\n");
        let err = load_config(Kind::TailIntegral, Some(&p), &[]).unwrap_err();
        assert!(err.to_string().contains("c1 > 1"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let (_g, q) = file("\nwidth = 3\n");
        let err = load_config(Kind::TailIntegral, Some(&q), &[]).unwrap_err();
        assert!(
            err.to_string().contains(":2:") && err.to_string().contains("width"),
            "{err}"
        );
        let (_h, r) = file("N 4096\n");
        assert!(matches!(
            load_config(Kind::TailIntegral, Some(&r), &[]),
            Err(CliError::Syntax { line: 1, .. })
        ));
        let err = load_config(Kind::TailIntegral, None, &[("seed", "x".into())]).unwrap_err();
        assert!(err.to_string().contains("`seed`"));
        assert!(load_config(Kind::TailIntegral, None, &[("kind", "sharpness".into())]).is_err());
    }
}
