pub mod bench;
pub mod gendata;
pub mod lipschitz;
pub mod solve;

use std::path::Path;

use coder::metrics::{write_trace_csv, TraceRecord};

use crate::CliError;

pub(crate) fn write_trace_file(
    path: &Path,
    records: &[TraceRecord],
    comments: &[(String, String)],
    timing: bool,
) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    write_trace_csv(&mut file, records, comments, timing)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
