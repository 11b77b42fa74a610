//! Prints the Promela model for a size-8 abstract kernel with T=44.

use mctune::{export_promela, ExportOptions, PlatformConfig, ProblemSpec};

fn main() -> mctune::Result<()> {
    let text = export_promela(
        &PlatformConfig::default(),
        &ProblemSpec::abstract_kernel(8)?,
        ExportOptions {
            full_hierarchy: false,
            bound: Some(44),
        },
    )?;
    print!("{text}");
    Ok(())
}
