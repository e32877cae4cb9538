mod crb;
mod montecarlo;
mod mre_map;
mod multisensor;
mod quantized;

use crate::config::LoadedConfig;
use crate::output::Meta;

pub use crb::run as crb;
pub use montecarlo::run as montecarlo;
pub use mre_map::run as mre_map;
pub use multisensor::run as multisensor;
pub use quantized::run as quantized;

/// Everything a command needs besides its own config keys.
pub struct Context {
    pub loaded: LoadedConfig,
    pub seed: u64,
}

impl Context {
    pub fn meta(&self, command: &'static str) -> Meta {
        Meta::new(command, &self.loaded.sha256, self.seed)
    }
}

/// Rendered result file plus any approximation-validity warnings.
pub struct Report {
    pub bytes: Vec<u8>,
    pub warnings: Vec<String>,
}
