//! Configurations shipped with the crate.

use crate::error::{Error, Result};
use crate::harness::config::RunConfig;

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        /// Names accepted by [`preset`].
        pub const PRESET_NAMES: &[&str] = &[$($name),*];

        /// TOML source of a shipped preset.
        pub fn preset_source(name: &str) -> Result<&'static str> {
            match name {
                $($name => Ok(include_str!(concat!("../../presets/", $name, ".toml"))),)*
                other => Err(Error::UnknownPreset(other.to_string())),
            }
        }
    };
}

presets!(
    "fig2a-linear",
    "fig2a-exp",
    "fig2b",
    "fig2c",
    "fig2-fixed",
    "figS2-varratio",
    "fig3-depol",
    "fig3-phase",
    "fig4-transportable",
    "figS4-atoms",
    "figS5-fountain",
    "figS6-bragg",
);

pub fn preset(name: &str) -> Result<RunConfig> {
    RunConfig::from_toml_str(preset_source(name)?)
}
