//! Regenerate the shipped default config files from the in-code defaults.
//!
//! Usage: cargo run --example gen_configs [out_dir]

use pushwork::harness::{default_friction_config, default_mass_config};

fn main() -> std::io::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "configs".into());
    let out = std::path::PathBuf::from(out);
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("friction.toml"), default_friction_config().to_toml())?;
    std::fs::write(out.join("mass.toml"), default_mass_config().to_toml())?;
    println!("wrote {}", out.display());
    Ok(())
}
