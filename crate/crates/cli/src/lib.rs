//! Batch front end: problem files in, reports and CSV grids out.

pub mod report;
pub mod run;
pub mod spec;

pub use report::{Report, VerdictLabel};
pub use run::{run_decide, run_extend, run_finiteness, run_refine, selfcheck, CliError, ExtendOptions, Overrides};
pub use spec::{ProblemSpecFile, SpecError};

use std::path::Path;

/// Reads and validates a spec file.
pub fn load_spec(path: &Path) -> Result<ProblemSpecFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    spec::parse(&text).map_err(|e| {
        CliError::Spec(SpecError {
            line: e.line,
            message: format!("{}: {}", path.display(), e.message),
        })
    })
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}
