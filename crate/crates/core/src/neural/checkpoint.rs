use std::fs;
use std::io::Write;
use std::path::Path;

use super::network::Network;
use crate::error::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "csnn-ckpt v1";

/// Text checkpoint: header, layer list, then one parameter per line.
/// `{}` formatting of `f64` is the shortest round-trip representation.
pub fn write_checkpoint(net: &Network, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{CHECKPOINT_HEADER}")?;
    writeln!(out, "{}", net.describe())?;
    for p in net.params() {
        writeln!(out, "{p}")?;
    }
    Ok(())
}

pub fn save_checkpoint(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_checkpoint(net, &mut buf).expect("writing to memory");
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn parse_checkpoint(text: &str) -> Result<Network> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != CHECKPOINT_HEADER {
        if header.starts_with("csnn-ckpt") {
            return Err(Error::Version {
                expected: CHECKPOINT_HEADER.into(),
                found: header.into(),
            });
        }
        return Err(Error::Format {
            line: 1,
            message: format!("expected `{CHECKPOINT_HEADER}` header"),
        });
    }
    let (_, desc) = lines.next().ok_or(Error::Format {
        line: 2,
        message: "missing layer list".into(),
    })?;
    let mut net = Network::from_description(desc).map_err(|e| Error::Format {
        line: 2,
        message: e.to_string(),
    })?;
    let expected = net.count_params();
    let mut params = Vec::with_capacity(expected);
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Format {
            line: i + 1,
            message: format!("`{line}` is not a number"),
        })?;
        if params.len() == expected {
            return Err(Error::Format {
                line: i + 1,
                message: format!("more than {expected} parameters"),
            });
        }
        params.push(v);
    }
    if params.len() != expected {
        return Err(Error::Format {
            line: text.lines().count() + 1,
            message: format!("expected {expected} parameters, found {}", params.len()),
        });
    }
    net.set_params(params)?;
    Ok(net)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text_of(net: &Network) -> String {
        let mut buf = Vec::new();
        write_checkpoint(net, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut net = Network::fl_cnn(12, &[8, 14, 8], 8).unwrap();
        net.xavier_init(9);
        for (i, p) in net.params_mut().iter_mut().enumerate() {
            *p += 1e-17 * i as f64 + 1.0 / 3.0;
        }
        let back = parse_checkpoint(&text_of(&net)).unwrap();
        assert_eq!(back, net);
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(back.forward(&x).unwrap(), net.forward(&x).unwrap());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let mut net = Network::mlp(6, &[4], 4).unwrap();
        net.xavier_init(2);
        save_checkpoint(&net, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), net);
        assert!(matches!(load_checkpoint(dir.path().join("nope")), Err(Error::Io { .. })));
    }

    #[test]
    fn malformed_files() {
        let mut net = Network::mlp(6, &[4], 4).unwrap();
        net.xavier_init(2);
        let text = text_of(&net);
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_checkpoint(&truncated), Err(Error::Format { .. })));
        let extra = format!("{text}0.5\n");
        assert!(matches!(parse_checkpoint(&extra), Err(Error::Format { .. })));
        let mut lines: Vec<&str> = text.lines().collect();
        lines[5] = "zero";
        let garbage = lines.join("\n");
        assert!(matches!(parse_checkpoint(&garbage), Err(Error::Format { line: 6, .. })));
        let v2 = text.replacen("v1", "v2", 1);
        assert!(matches!(parse_checkpoint(&v2), Err(Error::Version { .. })));
        assert!(matches!(parse_checkpoint(""), Err(Error::Format { line: 1, .. })));
        let bad_layers = text.replacen("dense(6,4)", "dense(5,4)", 1);
        assert!(matches!(parse_checkpoint(&bad_layers), Err(Error::Format { line: 2, .. })));
    }
}
