//! Pipeline configuration: optional keys from a JSON or TOML file, merged
//! with command-line flags (flags win), then resolved to concrete values
//! that are embedded verbatim in every artifact.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use singdetect::{
    Bandwidth, Basis, CurveKind, CurveSpec, GenParams, KdeParams, KnnParams, RectDomain,
    WeightScheme,
};

use crate::CliError;

/// Raw configuration as read from a file or assembled from flags. Every
/// field is optional; keys mirror the flag names.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub curve: Option<String>,
    /// `xmin,xmax,ymin,ymax`
    pub domain: Option<String>,
    pub batches: Option<usize>,
    pub grid_side: Option<usize>,
    pub batch_size: Option<usize>,
    pub tube_width: Option<f64>,
    pub decay: Option<f64>,
    pub outlier_fraction: Option<f64>,
    pub seed: Option<u64>,
    /// `none`, `kde`, or `knn`
    pub filter: Option<String>,
    pub gamma: Option<f64>,
    pub k: Option<usize>,
    /// `silverman` or a fixed width
    pub bandwidth: Option<String>,
    pub basis: Option<String>,
    pub weights: Option<String>,
    pub resolution: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub strict: Option<bool>,
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "json" => serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display()))),
            "toml" => toml::from_str(&text)
                .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display()))),
            other => Err(CliError::Validation(format!(
                "config {}: unsupported extension `{other}` (expected .json or .toml)",
                path.display()
            ))),
        }
    }

    /// Overlays `other` on top of `self`: any key set in `other` wins.
    pub fn overlay(mut self, other: PipelineConfig) -> Self {
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            input, curve, domain, batches, grid_side, batch_size, tube_width, decay,
            outlier_fraction, seed, filter, gamma, k, bandwidth, basis, weights, resolution,
            out_dir, strict,
        );
        self
    }
}

/// Filter selection after resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterChoice {
    None,
    Kde,
    Knn,
}

impl fmt::Display for FilterChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterChoice::None => write!(f, "none"),
            FilterChoice::Kde => write!(f, "kde"),
            FilterChoice::Knn => write!(f, "knn"),
        }
    }
}

/// Fully resolved configuration with every default applied. This struct is
/// embedded in each JSON artifact so a run can be reproduced from any of
/// its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ResolvedConfig {
    pub input: Option<PathBuf>,
    pub curve: String,
    pub domain: [f64; 4],
    pub batches: usize,
    pub grid_side: usize,
    pub batch_size: usize,
    pub tube_width: f64,
    pub decay: f64,
    pub outlier_fraction: f64,
    pub seed: u64,
    pub filter: FilterChoice,
    pub gamma: f64,
    pub k: usize,
    pub bandwidth: String,
    pub basis: String,
    pub weights: String,
    pub resolution: usize,
    pub out_dir: PathBuf,
    pub strict: bool,
}

impl ResolvedConfig {
    pub fn resolve(raw: &PipelineConfig) -> Result<Self, CliError> {
        let defaults = GenParams::default();
        let domain = match &raw.domain {
            None => [-1.0, 1.0, -1.0, 1.0],
            Some(text) => parse_domain(text)?,
        };
        let filter = match raw.filter.as_deref() {
            None | Some("none") => FilterChoice::None,
            Some("kde") => FilterChoice::Kde,
            Some("knn") => FilterChoice::Knn,
            Some(other) => {
                return Err(CliError::Validation(format!(
                    "unknown filter `{other}` (expected none, kde, or knn)"
                )))
            }
        };
        let config = ResolvedConfig {
            input: raw.input.clone(),
            curve: raw.curve.clone().unwrap_or_else(|| "circle".into()),
            domain,
            batches: raw.batches.unwrap_or(defaults.n_batches),
            grid_side: raw.grid_side.unwrap_or(defaults.grid_side),
            batch_size: raw.batch_size.unwrap_or(defaults.batch_size),
            tube_width: raw.tube_width.unwrap_or(defaults.tube_width),
            decay: raw.decay.unwrap_or(defaults.decay),
            outlier_fraction: raw.outlier_fraction.unwrap_or(defaults.outlier_fraction),
            seed: raw.seed.unwrap_or(defaults.seed),
            filter,
            gamma: raw.gamma.unwrap_or(0.6),
            k: raw.k.unwrap_or(5),
            bandwidth: raw.bandwidth.clone().unwrap_or_else(|| "silverman".into()),
            basis: raw.basis.clone().unwrap_or_else(|| "poly:2".into()),
            weights: raw.weights.clone().unwrap_or_else(|| "uniform".into()),
            resolution: raw.resolution.unwrap_or(256),
            out_dir: raw.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
            strict: raw.strict.unwrap_or(false),
        };
        config.parsed_basis()?;
        config.parsed_weights()?;
        config.parsed_bandwidth()?;
        config.rect_domain()?;
        Ok(config)
    }

    pub fn rect_domain(&self) -> Result<RectDomain, CliError> {
        let [xmin, xmax, ymin, ymax] = self.domain;
        RectDomain::new(xmin, xmax, ymin, ymax)
            .map_err(|e| CliError::Validation(format!("bad domain: {e}")))
    }

    pub fn parsed_basis(&self) -> Result<Basis, CliError> {
        Basis::from_str(&self.basis).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn parsed_weights(&self) -> Result<WeightScheme, CliError> {
        WeightScheme::from_str(&self.weights).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn parsed_bandwidth(&self) -> Result<Bandwidth, CliError> {
        if self.bandwidth == "silverman" {
            return Ok(Bandwidth::Silverman);
        }
        match self.bandwidth.parse::<f64>() {
            Ok(h) if h.is_finite() && h > 0.0 => Ok(Bandwidth::Fixed(h)),
            _ => Err(CliError::Validation(format!(
                "bad bandwidth `{}` (expected `silverman` or a positive number)",
                self.bandwidth
            ))),
        }
    }

    pub fn kde_params(&self) -> Result<KdeParams, CliError> {
        Ok(KdeParams { bandwidth: self.parsed_bandwidth()?, gamma: self.gamma })
    }

    pub fn knn_params(&self) -> KnnParams {
        KnnParams { k: self.k, gamma: self.gamma }
    }

    pub fn gen_params(&self) -> GenParams {
        GenParams {
            n_batches: self.batches,
            grid_side: self.grid_side,
            batch_size: self.batch_size,
            tube_width: self.tube_width,
            decay: self.decay,
            outlier_fraction: self.outlier_fraction,
            seed: self.seed,
        }
    }

    pub fn curve_spec(&self) -> Result<CurveSpec, CliError> {
        let kind = parse_curve(&self.curve)?;
        Ok(CurveSpec::new(kind, self.rect_domain()?))
    }
}

/// Parses `circle`, `lshape`, `xshape`, `semicircles`, or `poly:<file>`
/// where the file holds `{"degree": n, "coefficients": [...]}`.
pub fn parse_curve(text: &str) -> Result<CurveKind, CliError> {
    match text {
        "circle" => return Ok(CurveKind::circle()),
        "lshape" => return Ok(CurveKind::lshape()),
        "xshape" => return Ok(CurveKind::XShape),
        "semicircles" => return Ok(CurveKind::semicircles()),
        _ => {}
    }
    if let Some(path) = text.strip_prefix("poly:") {
        #[derive(Deserialize)]
        struct PolyFile {
            degree: usize,
            coefficients: Vec<f64>,
        }
        let body = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read polynomial file {path}: {e}")))?;
        let poly: PolyFile = serde_json::from_str(&body)
            .map_err(|e| CliError::Validation(format!("polynomial file {path}: {e}")))?;
        return Ok(CurveKind::CustomPoly { degree: poly.degree, coefficients: poly.coefficients });
    }
    Err(CliError::Validation(format!(
        "unknown curve `{text}` (expected circle, lshape, xshape, semicircles, or poly:<file>)"
    )))
}

pub fn parse_domain(text: &str) -> Result<[f64; 4], CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(CliError::Validation(format!(
            "bad domain `{text}` (expected xmin,xmax,ymin,ymax)"
        )));
    }
    let mut values = [0.0; 4];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part.trim().parse::<f64>().map_err(|_| {
            CliError::Validation(format!("bad domain coordinate `{part}` in `{text}`"))
        })?;
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_prefers_the_later_source() {
        let file = PipelineConfig { gamma: Some(0.4), k: Some(7), ..Default::default() };
        let flags = PipelineConfig { gamma: Some(0.9), ..Default::default() };
        let merged = file.overlay(flags);
        assert_eq!(merged.gamma, Some(0.9));
        assert_eq!(merged.k, Some(7));
    }

    #[test]
    fn resolve_fills_documented_defaults() {
        let config = ResolvedConfig::resolve(&PipelineConfig::default()).unwrap();
        assert_eq!(config.basis, "poly:2");
        assert_eq!(config.weights, "uniform");
        assert_eq!(config.filter, FilterChoice::None);
        assert_eq!(config.gamma, 0.6);
        assert_eq!(config.k, 5);
        assert_eq!(config.resolution, 256);
        assert_eq!(config.batches, 17);
        assert_eq!(config.domain, [-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn bad_filter_name_is_a_validation_error() {
        let raw = PipelineConfig { filter: Some("fourier".into()), ..Default::default() };
        assert!(matches!(ResolvedConfig::resolve(&raw), Err(CliError::Validation(_))));
    }

    #[test]
    fn domain_string_round_trips() {
        let raw = PipelineConfig { domain: Some("-1.5, 1, -2, 3".into()), ..Default::default() };
        let config = ResolvedConfig::resolve(&raw).unwrap();
        assert_eq!(config.domain, [-1.5, 1.0, -2.0, 3.0]);
    }
}
