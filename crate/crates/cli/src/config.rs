//! Flat `section.key = value` configuration with flag overrides.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use hmhd_core::experiments::{DataFamily, DecayOptions, ExperimentConfig, StabilityOptions};
use hmhd_core::integrate::{Formulation, IntegratorConfig, Scheme};
use hmhd_core::lp::Profile;
use hmhd_core::random::Spectrum;
use sha2::{Digest, Sha256};

/// Every recognised key with its default, in echo order.
const DEFAULTS: &[(&str, &str)] = &[
    ("data.alpha", "2"),
    ("data.amplitude", "0.1"),
    ("data.family", "random"),
    ("data.k_max", "4"),
    ("data.k_min", "0"),
    ("data.mode", "1"),
    ("data.seed", "1"),
    ("data.shell", "1"),
    ("data.spectrum", "band"),
    ("decay.min_decades", "0.5"),
    ("decay.orders", "1,2"),
    ("decay.segment_steps", "32"),
    ("decay.slope_tolerance", "0.25"),
    ("decay.w_ratio_limit", "2"),
    ("grid.length", "2pi"),
    ("grid.n", "32"),
    ("integrator.dealias", "true"),
    ("integrator.dt", "0.02"),
    ("integrator.formulation", "extended"),
    ("integrator.nonlinear", "true"),
    ("integrator.scheme", "if_rk4"),
    ("integrator.stride", "1"),
    ("integrator.t_end", "1"),
    ("lp.profile", "quintic"),
    ("norms.p", "2"),
    ("norms.q", "2"),
    ("output.dir", "hmhd-out"),
    ("params.epsilon", "0.5"),
    ("params.mu", "1"),
    ("params.nu", "1"),
    ("picard.bisect", "6"),
    ("picard.n_max", "80"),
    ("picard.tol", "1e-10"),
    ("scaling.epsilons", "0.1,0.2,0.4"),
    ("stability.eta", "1e-3"),
    ("stability.held_out", "5"),
    ("stability.safety", "2"),
];

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

type Res<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Res<T> {
    Err(ConfigError(msg.into()))
}

/// Fully resolved configuration: defaults, then the file, then flags.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { values: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }
}

fn parse_line(line: &str, origin: &str) -> Res<Option<(String, String)>> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    match line.split_once('=') {
        Some((k, v)) => Ok(Some((k.trim().to_string(), v.trim().to_string()))),
        None => err(format!("{origin}: expected key = value, got '{line}'")),
    }
}

impl RunConfig {
    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Res<()> {
        for (i, line) in text.lines().enumerate() {
            if let Some((k, v)) = parse_line(line, &format!("{origin}:{}", i + 1))? {
                self.set(&k, &v)?;
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Res<()> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => err(format!("unknown config key '{key}'")),
        }
    }

    pub fn apply_override(&mut self, kv: &str) -> Res<()> {
        match parse_line(kv, "--set")? {
            Some((k, v)) => self.set(&k, &v),
            None => err("empty --set"),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("known key")
    }

    pub fn f64(&self, key: &str) -> Res<f64> {
        parse_f64(self.get(key)).ok_or_else(|| ConfigError(format!("{key}: not a number: '{}'", self.get(key))))
    }

    pub fn usize(&self, key: &str) -> Res<usize> {
        self.get(key).parse().map_err(|_| ConfigError(format!("{key}: not a nonnegative integer: '{}'", self.get(key))))
    }

    pub fn bool(&self, key: &str) -> Res<bool> {
        match self.get(key) {
            "true" | "on" | "yes" | "1" => Ok(true),
            "false" | "off" | "no" | "0" => Ok(false),
            v => err(format!("{key}: not a boolean: '{v}'")),
        }
    }

    pub fn f64_list(&self, key: &str) -> Res<Vec<f64>> {
        self.get(key)
            .split(',')
            .map(|s| parse_f64(s.trim()).ok_or_else(|| ConfigError(format!("{key}: bad list entry '{s}'"))))
            .collect()
    }

    /// Canonical `key=value` lines in key order.
    pub fn canonical(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("output.dir"))
    }

    fn spectrum(&self) -> Res<Spectrum> {
        let (k_min, k_max) = (self.f64("data.k_min")?, self.f64("data.k_max")?);
        match self.get("data.spectrum") {
            "band" => Ok(Spectrum::Band { k_min, k_max }),
            "power_law" => Ok(Spectrum::PowerLaw { k_min, k_max, alpha: self.f64("data.alpha")? }),
            v => err(format!("data.spectrum: expected band or power_law, got '{v}'")),
        }
    }

    pub fn experiment(&self) -> Res<ExperimentConfig> {
        let family = match self.get("data.family") {
            "random" => DataFamily::Random { spectrum: self.spectrum()? },
            "taylor_green" => DataFamily::TaylorGreen { mode: self.usize("data.mode")? },
            "single_shell" => DataFamily::SingleShell {
                j: self.get("data.shell").parse().map_err(|_| ConfigError("data.shell: not an integer".into()))?,
            },
            "zero" => DataFamily::Zero,
            v => err(format!("data.family: unknown family '{v}'"))?,
        };
        let scheme = match self.get("integrator.scheme") {
            "if_rk4" => Scheme::IfRk4,
            "if_rk2" => Scheme::IfRk2,
            v => err(format!("integrator.scheme: expected if_rk2 or if_rk4, got '{v}'"))?,
        };
        let profile = match self.get("lp.profile") {
            "cubic" => Profile::Cubic,
            "quintic" => Profile::Quintic,
            "septic" => Profile::Septic,
            v => err(format!("lp.profile: unknown profile '{v}'"))?,
        };
        let cfg = ExperimentConfig {
            n: self.usize("grid.n")?,
            length: self.f64("grid.length")?,
            mu: self.f64("params.mu")?,
            nu: self.f64("params.nu")?,
            epsilon: self.f64("params.epsilon")?,
            family,
            amplitude: self.f64("data.amplitude")?,
            p: self.f64("norms.p")?,
            q: self.f64("norms.q")?,
            seed: self.get("data.seed").parse().map_err(|_| ConfigError("data.seed: not an integer".into()))?,
            dt: self.f64("integrator.dt")?,
            t_end: self.f64("integrator.t_end")?,
            scheme,
            profile,
            nonlinear: self.bool("integrator.nonlinear")?,
        };
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn integrator(&self) -> Res<IntegratorConfig> {
        let mut ic = self.experiment()?.integrator().map_err(|e| ConfigError(e.to_string()))?;
        ic.snapshot_stride = self.usize("integrator.stride")?;
        ic.dealias = self.bool("integrator.dealias")?;
        ic.formulation = match self.get("integrator.formulation") {
            "extended" => Formulation::Extended,
            "original" => Formulation::Original,
            v => err(format!("integrator.formulation: expected extended or original, got '{v}'"))?,
        };
        ic.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(ic)
    }

    pub fn decay(&self) -> Res<DecayOptions> {
        let orders = self
            .get("decay.orders")
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| ConfigError(format!("decay.orders: bad entry '{s}'"))))
            .collect::<Res<Vec<u32>>>()?;
        Ok(DecayOptions {
            orders,
            segment_steps: self.usize("decay.segment_steps")?,
            slope_tolerance: self.f64("decay.slope_tolerance")?,
            w_ratio_limit: self.f64("decay.w_ratio_limit")?,
            min_decades: self.f64("decay.min_decades")?,
        })
    }

    pub fn stability(&self) -> Res<StabilityOptions> {
        Ok(StabilityOptions { eta: self.f64("stability.eta")?, safety: self.f64("stability.safety")?, ..Default::default() })
    }
}

/// Numbers, optionally with a `pi` factor: `8pi`, `2*pi`, `pi`.
fn parse_f64(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some(head) = s.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        return if head.is_empty() { Some(PI) } else { head.parse::<f64>().ok().map(|x| x * PI) };
    }
    s.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_suffix() {
        assert_eq!(parse_f64("2pi"), Some(2.0 * PI));
        assert_eq!(parse_f64("8 * pi"), Some(8.0 * PI));
        assert_eq!(parse_f64("pi"), Some(PI));
        assert_eq!(parse_f64("1e-3"), Some(1e-3));
        assert_eq!(parse_f64("x"), None);
    }

    #[test]
    fn file_then_flags() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\ngrid.n = 16\nparams.mu=0.5 # trailing\n\n", "test").unwrap();
        c.apply_override("grid.n=64").unwrap();
        assert_eq!(c.usize("grid.n").unwrap(), 64);
        assert_eq!(c.f64("params.mu").unwrap(), 0.5);
        assert!(c.apply_text("bogus.key = 1", "test").is_err());
        assert!(c.apply_text("no equals sign", "test").is_err());
    }

    #[test]
    fn defaults_resolve_and_hash_is_stable() {
        let c = RunConfig::default();
        let e = c.experiment().unwrap();
        assert_eq!(e.n, 32);
        assert!((e.length - 2.0 * PI).abs() < 1e-15);
        c.integrator().unwrap();
        c.decay().unwrap();
        assert_eq!(c.hash(), RunConfig::default().hash());
        let mut d = c.clone();
        d.set("data.seed", "2").unwrap();
        assert_ne!(c.hash(), d.hash());
    }
}
