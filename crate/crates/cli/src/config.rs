//! Run configuration: one JSON document, strictly validated, with every
//! default written back out so each output is self-describing.

use std::path::Path;

use qlm_core::{
    CouplingStrength, DecayTolerance, DipoleContext, DriveConfig, LatticeGeometry, LevelScheme,
    OperatingPointSearch, ProbeConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Prefix of the header line carrying the embedded configuration.
pub const CONFIG_MARKER: &str = "# config: ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetuningScan {
    /// Probe-detuning window; defaults to ±0.005 around two-photon resonance.
    pub window: Option<(f64, f64)>,
    pub points: usize,
}

impl Default for DetuningScan {
    fn default() -> Self {
        Self {
            window: None,
            points: 801,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PumpMode {
    /// Pump of the lossless operating point of the configured drive.
    #[default]
    OperatingPoint,
    /// `drive.pump_rate` as given.
    Configured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FomScan {
    pub window: Option<(f64, f64)>,
    pub points: usize,
    pub omega_d_values: Vec<f64>,
    pub pump: PumpMode,
}

impl Default for FomScan {
    fn default() -> Self {
        Self {
            window: None,
            points: 1001,
            omega_d_values: vec![0.020, 0.022, 0.024],
            pump: PumpMode::OperatingPoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourScan {
    pub ky_points: usize,
    /// Evanescence threshold on Im k_z (k0 units); defaults to 1e-3·π/a.
    pub threshold: Option<f64>,
    /// (Ω_a, Ω_d) pairs evaluated at the same probe frequency.
    pub drives: Vec<(f64, f64)>,
    /// Re-null Im ε for every drive after the first.
    pub rebisect_pump: bool,
}

impl Default for ContourScan {
    fn default() -> Self {
        Self {
            ky_points: 256,
            threshold: None,
            drives: vec![(1.3, 0.024), (1.15, 0.0189)],
            rebisect_pump: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayScan {
    pub omega_a_start: f64,
    pub omega_a_stop: f64,
    pub points: usize,
}

impl Default for DecayScan {
    fn default() -> Self {
        Self {
            omega_a_start: 0.0,
            omega_a_stop: 1.3,
            points: 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSuite {
    pub samples: usize,
    pub tolerance: f64,
    /// Flip the sign of Im Γ_cb in the closed form (must make the suite fail).
    pub negative_control: bool,
}

impl Default for OracleSuite {
    fn default() -> Self {
        Self {
            samples: 100,
            tolerance: 1e-6,
            negative_control: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub levels: LevelScheme,
    pub drive: DriveConfig,
    pub probe: ProbeConfig,
    pub zeta: CouplingStrength,
    pub geometry: LatticeGeometry,
    pub dipole: DipoleContext,
    pub decay_tolerance: DecayTolerance,
    pub search: Option<OperatingPointSearch>,
    pub susceptibility_scan: DetuningScan,
    pub fom_scan: FomScan,
    pub contour: ContourScan,
    pub decay_scan: DecayScan,
    pub oracle: OracleSuite,
}

fn check_window(name: &str, w: (f64, f64)) -> CliResult<()> {
    if w.0.is_finite() && w.1.is_finite() && w.1 > w.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} window [{}, {}] is empty", w.0, w.1)))
    }
}

impl RunConfig {
    /// Parses either a JSON document or a CSV file with an embedded config.
    pub fn parse(text: &str) -> CliResult<Self> {
        let json = if text.trim_start().starts_with('#') {
            text.lines()
                .find_map(|l| l.strip_prefix(CONFIG_MARKER))
                .ok_or_else(|| CliError::Config("no embedded config line in header".into()))?
        } else {
            text
        };
        serde_json::from_str(json).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fills derived defaults and validates every section.
    pub fn resolve(mut self) -> CliResult<Self> {
        self.levels.validate()?;
        self.drive.validate()?;
        self.geometry.validate()?;
        self.dipole.validate()?;
        CouplingStrength::new(self.zeta.value())?;
        let center = self.drive.two_photon_resonance();
        let search = self.search.get_or_insert_with(|| {
            OperatingPointSearch::around_two_photon(&self.drive, OperatingPointSearch::DEFAULT_HALF_WIDTH)
        });
        check_window("search", search.window)?;
        let sus = self.susceptibility_scan.window.get_or_insert((center - 0.005, center + 0.005));
        check_window("susceptibility_scan", *sus)?;
        let fom = self.fom_scan.window.get_or_insert((center - 0.0025, center + 0.0025));
        check_window("fom_scan", *fom)?;
        if self.susceptibility_scan.points < 2 || self.fom_scan.points < 3 {
            return Err(CliError::Usage("scan grids need at least 2 (3 for FOM) points".into()));
        }
        if self.fom_scan.omega_d_values.is_empty() {
            return Err(CliError::Usage("fom_scan.omega_d_values is empty".into()));
        }
        let threshold = *self
            .contour
            .threshold
            .get_or_insert(qlm_core::bloch::default_threshold(self.geometry.period_a));
        if !(threshold > 0.0) {
            return Err(CliError::Usage("contour threshold must be > 0".into()));
        }
        if self.contour.drives.is_empty() || self.contour.ky_points < 2 {
            return Err(CliError::Usage("contour needs at least one drive and two k_y points".into()));
        }
        if self.decay_scan.points == 0 {
            return Err(CliError::Usage("decay_scan grid is empty".into()));
        }
        if self.oracle.samples == 0 {
            return Err(CliError::Usage("oracle.samples must be > 0".into()));
        }
        Ok(self)
    }

    pub fn search(&self) -> OperatingPointSearch {
        self.search
            .unwrap_or_else(|| OperatingPointSearch::around_two_photon(&self.drive, OperatingPointSearch::DEFAULT_HALF_WIDTH))
    }

    /// Single-line JSON used in output headers.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
