//! Subprocess hook for external entropy-assessment tools.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{bail, Context};
use minent_core::generator::write_bits;
use minent_core::BitSequence;

use crate::spec::{ExternalFormat, ExternalHook};

/// Writes `stream` to `<dir>/<stem>.bin`, runs the hook on it and stores the
/// program's stdout, unmodified, in `<dir>/<stem>.external.txt`. Returns the
/// path of that file.
pub fn run_hook(hook: &ExternalHook, stream: &BitSequence, dir: &Path, stem: &str) -> anyhow::Result<PathBuf> {
    let input = dir.join(format!("{stem}.bin"));
    match hook.format {
        ExternalFormat::Packed => write_bits(&input, stream, None)?,
        ExternalFormat::Unpacked => fs::write(&input, stream.iter().collect::<Vec<u8>>())?,
    }
    let file = input.to_string_lossy();
    let args: Vec<String> = hook.command.iter().map(|a| a.replace("{file}", &file)).collect();
    let output = Command::new(&args[0])
        .args(&args[1..])
        .output()
        .with_context(|| format!("spawning {:?}", args[0]))?;
    let out_path = dir.join(format!("{stem}.external.txt"));
    fs::write(&out_path, &output.stdout)?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        bail!("{} exited with {}: {}", args[0], output.status, stderr.trim());
    }
    Ok(out_path)
}
