//! Raw circuit parameters and the canonical-mode quantities derived from them.
//!
//! The resonator is an LC oscillator with bare frequency w+ = 1/sqrt(LC); the
//! transmon is a Duffing oscillator with w- = sqrt(8 E_C E_J) (energies stored
//! as angular frequencies). Diagonalizing the capacitively coupled quadratic
//! form yields the canonical ladders (up, down) with frequencies
//!
//!   w_sigma^2 = [w+^2 + w-^2 + sigma * sqrt((w+^2 - w-^2)^2 + gt^2 w+ w-)]/2,
//!
//! where gt = g sqrt(w-/E_C) and sigma = +1 (up), -1 (down). The mixing
//! coefficients xi(sigma, mu) and the drive couplings v(sigma) follow.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Result, SimError};

/// 1 ueV as an angular frequency in rad/ns: (e * 1e-6 / hbar) * 1e-9.
pub const UEV_TO_RAD_NS: f64 = 1.602176634e-25 / 1.054571817e-34 * 1e-9;
/// 1 kHz of rate in rad/ns under the loose frequency labels used throughout.
pub const KHZ_TO_RAD_NS: f64 = 1e-6;
/// 1 MHz in rad/ns.
pub const MHZ_TO_RAD_NS: f64 = 1e-3;
/// 1 GHz in rad/ns.
pub const GHZ_TO_RAD_NS: f64 = 1.0;

const HBAR_SI: f64 = 1.054571817e-34;

/// Canonical ladder index; numeric value +1 for up, -1 for down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Canonical {
    Up,
    Down,
}

impl Canonical {
    pub const BOTH: [Canonical; 2] = [Canonical::Up, Canonical::Down];

    pub fn numeric(self) -> f64 {
        match self {
            Canonical::Up => 1.0,
            Canonical::Down => -1.0,
        }
    }

    pub(crate) fn idx(self) -> usize {
        match self {
            Canonical::Up => 0,
            Canonical::Down => 1,
        }
    }
}

impl fmt::Display for Canonical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Canonical::Up => write!(f, "up"),
            Canonical::Down => write!(f, "down"),
        }
    }
}

/// Bare (pre-transformation) mode index; numeric value +1 for the resonator,
/// -1 for the transmon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bare {
    Plus,
    Minus,
}

impl Bare {
    pub const BOTH: [Bare; 2] = [Bare::Plus, Bare::Minus];

    pub fn numeric(self) -> f64 {
        match self {
            Bare::Plus => 1.0,
            Bare::Minus => -1.0,
        }
    }

    pub(crate) fn idx(self) -> usize {
        match self {
            Bare::Plus => 0,
            Bare::Minus => 1,
        }
    }
}

/// Diffusion (primed) and dissipation rates between each bare mode and the
/// surrounding environment, stored in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladRates {
    pub gamma_plus_prime: f64,
    pub gamma_plus: f64,
    pub gamma_minus_prime: f64,
    pub gamma_minus: f64,
}

impl LindbladRates {
    pub fn from_khz(gpp: f64, gp: f64, gmp: f64, gm: f64) -> Result<Self> {
        let r = LindbladRates {
            gamma_plus_prime: gpp * KHZ_TO_RAD_NS,
            gamma_plus: gp * KHZ_TO_RAD_NS,
            gamma_minus_prime: gmp * KHZ_TO_RAD_NS,
            gamma_minus: gm * KHZ_TO_RAD_NS,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gamma_plus_prime,
            self.gamma_plus,
            self.gamma_minus_prime,
            self.gamma_minus,
        ];
        if all.iter().any(|&g| !(g >= 0.0)) {
            return Err(SimError::Config("rates must be >= 0".into()));
        }
        // gamma(mu, -) = gamma' - gamma must be non-negative for each mode
        if self.gamma_plus_prime < self.gamma_plus || self.gamma_minus_prime < self.gamma_minus {
            return Err(SimError::Config(
                "diffusion rate gamma' must be >= dissipation rate gamma for each mode".into(),
            ));
        }
        Ok(())
    }

    /// gamma_{mu,m}: (gamma' + gamma) for m = +, (gamma' - gamma) for m = -.
    pub fn gamma_mu_m(&self, mu: Bare, m_plus: bool) -> f64 {
        let (gp, g) = match mu {
            Bare::Plus => (self.gamma_plus_prime, self.gamma_plus),
            Bare::Minus => (self.gamma_minus_prime, self.gamma_minus),
        };
        if m_plus {
            gp + g
        } else {
            gp - g
        }
    }
}

/// Raw circuit constants. Energies are held as angular frequencies (rad/ns);
/// the config layer converts from the tabulated ueV / MHz / kHz inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Resonator self inductance (pH).
    pub l_ph: f64,
    /// Resonator capacitance (nF).
    pub c_nf: f64,
    /// Transmon charging energy E_C / hbar (rad/ns).
    pub e_c: f64,
    /// Transmon Josephson energy E_J / hbar (rad/ns).
    pub e_j: f64,
    /// Capacitive coupling g (rad/ns).
    pub g: f64,
    pub rates: LindbladRates,
}

impl Default for DeviceParams {
    /// Reference operating point: L = 10 pH, C = 1 nF, E_C = 0.165 ueV,
    /// E_J = 8.24 ueV, g = 5 MHz, rates (100, 10, 10, 1) kHz.
    fn default() -> Self {
        DeviceParams {
            l_ph: 10.0,
            c_nf: 1.0,
            e_c: 0.165 * UEV_TO_RAD_NS,
            e_j: 8.24 * UEV_TO_RAD_NS,
            g: 5.0 * MHZ_TO_RAD_NS,
            rates: LindbladRates {
                gamma_plus_prime: 100.0 * KHZ_TO_RAD_NS,
                gamma_plus: 10.0 * KHZ_TO_RAD_NS,
                gamma_minus_prime: 10.0 * KHZ_TO_RAD_NS,
                gamma_minus: 1.0 * KHZ_TO_RAD_NS,
            },
        }
    }
}

impl DeviceParams {
    /// Hard validation plus soft warnings. Errors on non-positive circuit
    /// constants or g at/above the critical coupling; warns (does not reject)
    /// when the anharmonicity is no longer weak, E_C > 0.1 * 12 * w_down.
    pub fn check(&self) -> Result<Vec<String>> {
        if !(self.l_ph > 0.0) || !(self.c_nf > 0.0) {
            return Err(SimError::Config("L and C must be > 0".into()));
        }
        if !(self.e_c > 0.0) || !(self.e_j > 0.0) {
            return Err(SimError::Config("E_C and E_J must be > 0".into()));
        }
        if !(self.g >= 0.0) {
            return Err(SimError::Config("g must be >= 0".into()));
        }
        self.rates.validate()?;
        let modes = derive_modes(self)?; // rejects g >= g_c
        let mut warnings = Vec::new();
        if self.e_c > 0.1 * 12.0 * modes.omega_down {
            warnings.push(format!(
                "weak-anharmonicity condition strained: E_C = {:.4} GHz vs 12*w_down = {:.4} GHz",
                self.e_c,
                12.0 * modes.omega_down
            ));
        }
        Ok(warnings)
    }
}

/// All derived mode quantities of the canonical transformation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalModes {
    /// Bare resonator frequency 1/sqrt(LC) (rad/ns).
    pub omega_plus: f64,
    /// Bare transmon frequency sqrt(8 E_C E_J) (rad/ns).
    pub omega_minus: f64,
    /// Scaled coupling gt = g sqrt(w-/E_C) (rad/ns).
    pub g_tilde: f64,
    pub omega_up: f64,
    pub omega_down: f64,
    /// Mixing coefficients xi[(up,down)][(plus,minus)].
    pub xi: [[f64; 2]; 2],
    /// Drive couplings v[(up,down)] in (rad/ns)/nV.
    pub v: [f64; 2],
    /// Resonator impedance sqrt(L/C) (ohm).
    pub z_ohm: f64,
}

impl CanonicalModes {
    pub fn xi(&self, sigma: Canonical, mu: Bare) -> f64 {
        self.xi[sigma.idx()][mu.idx()]
    }

    pub fn v(&self, sigma: Canonical) -> f64 {
        self.v[sigma.idx()]
    }

    pub fn omega(&self, sigma: Canonical) -> f64 {
        match sigma {
            Canonical::Up => self.omega_up,
            Canonical::Down => self.omega_down,
        }
    }

    pub fn omega_bare(&self, mu: Bare) -> f64 {
        match mu {
            Bare::Plus => self.omega_plus,
            Bare::Minus => self.omega_minus,
        }
    }
}

fn bare_frequencies(params: &DeviceParams) -> (f64, f64) {
    // L [pH] * C [nF] = 1e-3 ns^2
    let omega_plus = 1.0 / (params.l_ph * 1e-3 * params.c_nf).sqrt();
    let omega_minus = (8.0 * params.e_c * params.e_j).sqrt();
    (omega_plus, omega_minus)
}

/// Compute every derived quantity of the canonical transformation.
///
/// Errors with `CriticalCouplingExceeded` when the radicand for w_down^2 is
/// <= 0, i.e. g >= g_c.
pub fn derive_modes(params: &DeviceParams) -> Result<CanonicalModes> {
    let (omega_plus, omega_minus) = bare_frequencies(params);
    let g_tilde = params.g * (omega_minus / params.e_c).sqrt();
    let t = omega_plus * omega_plus + omega_minus * omega_minus;
    let d = omega_plus * omega_plus - omega_minus * omega_minus;
    let r = (d * d + g_tilde * g_tilde * omega_plus * omega_minus).sqrt();
    let down_sq = 0.5 * (t - r);
    if down_sq <= 0.0 {
        return Err(SimError::CriticalCouplingExceeded {
            g: params.g,
            g_c: critical_coupling(params),
        });
    }
    let omega_up = (0.5 * (t + r)).sqrt();
    let omega_down = down_sq.sqrt();

    // xi(sigma, mu) = sqrt((w_sigma/w_mu)(w_mubar^2 - w_sigma^2)/(w_sigmabar^2 - w_sigma^2))
    let xi = |ws: f64, wmu: f64, wmubar: f64, wsbar: f64| -> f64 {
        ((ws / wmu) * (wmubar * wmubar - ws * ws) / (wsbar * wsbar - ws * ws)).sqrt()
    };
    let xi_up_p = xi(omega_up, omega_plus, omega_minus, omega_down);
    let xi_up_m = xi(omega_up, omega_minus, omega_plus, omega_down);
    let xi_dn_p = xi(omega_down, omega_plus, omega_minus, omega_up);
    let xi_dn_m = xi(omega_down, omega_minus, omega_plus, omega_up);

    let z_ohm = (params.l_ph / params.c_nf * 1e-3).sqrt();
    // v_sigma = (1/sqrt(2 hbar Z)) (w+/w_sigma) xi(sigma,+), expressed per nV
    // and per ns. The SI prefactor 1/sqrt(2 hbar Z) is rad/(s V); the 1e-18
    // moves it to (rad/ns)/nV.
    let v_base = 1.0 / (2.0 * HBAR_SI * z_ohm).sqrt() * 1e-18;
    let v_up = v_base * (omega_plus / omega_up) * xi_up_p;
    let v_dn = v_base * (omega_plus / omega_down) * xi_dn_p;

    Ok(CanonicalModes {
        omega_plus,
        omega_minus,
        g_tilde,
        omega_up,
        omega_down,
        xi: [[xi_up_p, xi_up_m], [xi_dn_p, xi_dn_m]],
        v: [v_up, v_dn],
        z_ohm,
    })
}

/// Coupling at which w_down reaches zero. Analytically gt_c = 2 sqrt(w+ w-),
/// which converts back through gt = g sqrt(w-/E_C) to g_c = 2 sqrt(w+ E_C).
pub fn critical_coupling(params: &DeviceParams) -> f64 {
    let (omega_plus, _) = bare_frequencies(params);
    2.0 * (omega_plus * params.e_c).sqrt()
}

/// Residuals of the weak-coupling expansions
/// w_up ~ w+ + gt^2 w- / [8 (w+^2 - w-^2)] and
/// w_down ~ w- - gt^2 w+ / [8 (w+^2 - w-^2)].
pub fn weak_coupling_check(modes: &CanonicalModes) -> (f64, f64) {
    let denom = 8.0 * (modes.omega_plus * modes.omega_plus - modes.omega_minus * modes.omega_minus);
    let gt2 = modes.g_tilde * modes.g_tilde;
    let asym_up = modes.omega_plus + gt2 * modes.omega_minus / denom;
    let asym_dn = modes.omega_minus - gt2 * modes.omega_plus / denom;
    (
        (modes.omega_up - asym_up).abs(),
        (modes.omega_down - asym_dn).abs(),
    )
}

// ---------------------------------------------------------------------------
// Config ingestion: flat `key = value` lines, `#` comments.
// ---------------------------------------------------------------------------

const CONFIG_KEYS: &[&str] = &[
    "L_pH",
    "C_nF",
    "EC_ueV",
    "EJ_ueV",
    "g_MHz",
    "g_GHz",
    "gamma_plus_prime_kHz",
    "gamma_plus_kHz",
    "gamma_minus_prime_kHz",
    "gamma_minus_kHz",
];

/// Parse a flat key-value config into a map. Later duplicates win.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            SimError::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(SimError::Config(format!(
                "line {}: unknown key `{}`",
                lineno + 1,
                key
            )));
        }
        let value: f64 = value.trim().parse().map_err(|_| {
            SimError::Config(format!("line {}: bad number `{}`", lineno + 1, value.trim()))
        })?;
        map.insert(key.to_string(), value);
    }
    Ok(map)
}

/// Build parameters from a parsed config map; missing keys take the default
/// operating-point values. `g` may come in as MHz or GHz but not both.
pub fn device_from_map(map: &BTreeMap<String, f64>) -> Result<DeviceParams> {
    if map.contains_key("g_MHz") && map.contains_key("g_GHz") {
        return Err(SimError::Config(
            "give either g_MHz or g_GHz, not both".into(),
        ));
    }
    let defaults = DeviceParams::default();
    let get = |k: &str, d: f64| map.get(k).copied().unwrap_or(d);
    let g = if let Some(&ghz) = map.get("g_GHz") {
        ghz * GHZ_TO_RAD_NS
    } else {
        get("g_MHz", defaults.g / MHZ_TO_RAD_NS) * MHZ_TO_RAD_NS
    };
    let params = DeviceParams {
        l_ph: get("L_pH", defaults.l_ph),
        c_nf: get("C_nF", defaults.c_nf),
        e_c: get("EC_ueV", defaults.e_c / UEV_TO_RAD_NS) * UEV_TO_RAD_NS,
        e_j: get("EJ_ueV", defaults.e_j / UEV_TO_RAD_NS) * UEV_TO_RAD_NS,
        g,
        rates: LindbladRates::from_khz(
            get(
                "gamma_plus_prime_kHz",
                defaults.rates.gamma_plus_prime / KHZ_TO_RAD_NS,
            ),
            get("gamma_plus_kHz", defaults.rates.gamma_plus / KHZ_TO_RAD_NS),
            get(
                "gamma_minus_prime_kHz",
                defaults.rates.gamma_minus_prime / KHZ_TO_RAD_NS,
            ),
            get("gamma_minus_kHz", defaults.rates.gamma_minus / KHZ_TO_RAD_NS),
        )?,
    };
    Ok(params)
}

pub fn device_from_str(text: &str) -> Result<DeviceParams> {
    device_from_map(&parse_config(text)?)
}

pub fn device_from_file(path: &Path) -> Result<DeviceParams> {
    let text = std::fs::read_to_string(path)?;
    device_from_str(&text)
}
