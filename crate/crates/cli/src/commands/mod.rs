pub mod birkhoff;
pub mod flow;
pub mod index;
pub mod minmax;
pub mod validate;

use finsler_sphere::error::Result;
use serde::Serialize;
use std::path::Path;

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let file = std::fs::File::create(dir.join(name))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value)
        .map_err(|e| finsler_sphere::error::Error::Io(e.to_string()))?;
    Ok(())
}
