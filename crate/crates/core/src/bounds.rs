//! Target-dimension formulas `m ≥ C·α²·(error)^{-2}·max{complexity, tail}`.
//!
//! Logarithms are natural; `log_+ = max(log, 0)`. The universal constant `C`
//! is unknown and exposed as an input; [`calibrate_c`] fits it empirically.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::complexity::{dudley_integral, CoveringProfile};
use crate::distortion::FailureRate;
use crate::error::{invalid, Error, Result};

/// Which bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundModel {
    JlFinite,
    Master,
    RipGamma2,
    EpsGamma2,
    ZetaGamma2,
    CovDim,
    SubspaceUnionFinite,
    Sparse,
    Cosparse,
    Matrix,
    Tensor,
    UosRip,
    UosEmbed,
    ManifoldCurves,
    ManifoldAdditive,
    ManifoldLinearization,
    ManifoldIota,
    ManifoldReach,
    ManifoldVolume,
}

/// The precision parameter a model controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Kappa,
    Delta,
    Eps,
    Zeta,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Kappa => "kappa",
            ErrorKind::Delta => "delta",
            ErrorKind::Eps => "eps",
            ErrorKind::Zeta => "zeta",
        }
    }
}

impl BoundModel {
    pub const ALL: [BoundModel; 19] = [
        BoundModel::JlFinite,
        BoundModel::Master,
        BoundModel::RipGamma2,
        BoundModel::EpsGamma2,
        BoundModel::ZetaGamma2,
        BoundModel::CovDim,
        BoundModel::SubspaceUnionFinite,
        BoundModel::Sparse,
        BoundModel::Cosparse,
        BoundModel::Matrix,
        BoundModel::Tensor,
        BoundModel::UosRip,
        BoundModel::UosEmbed,
        BoundModel::ManifoldCurves,
        BoundModel::ManifoldAdditive,
        BoundModel::ManifoldLinearization,
        BoundModel::ManifoldIota,
        BoundModel::ManifoldReach,
        BoundModel::ManifoldVolume,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundModel::JlFinite => "jl_finite",
            BoundModel::Master => "master",
            BoundModel::RipGamma2 => "rip_gamma2",
            BoundModel::EpsGamma2 => "eps_gamma2",
            BoundModel::ZetaGamma2 => "zeta_gamma2",
            BoundModel::CovDim => "cov_dim",
            BoundModel::SubspaceUnionFinite => "subspace_union_finite",
            BoundModel::Sparse => "sparse",
            BoundModel::Cosparse => "cosparse",
            BoundModel::Matrix => "matrix",
            BoundModel::Tensor => "tensor",
            BoundModel::UosRip => "uos_rip",
            BoundModel::UosEmbed => "uos_embed",
            BoundModel::ManifoldCurves => "manifold_curves",
            BoundModel::ManifoldAdditive => "manifold_additive",
            BoundModel::ManifoldLinearization => "manifold_linearization",
            BoundModel::ManifoldIota => "manifold_iota",
            BoundModel::ManifoldReach => "manifold_reach",
            BoundModel::ManifoldVolume => "manifold_volume",
        }
    }

    pub fn error_kind(self) -> ErrorKind {
        use BoundModel::*;
        match self {
            Master => ErrorKind::Kappa,
            RipGamma2 | CovDim | SubspaceUnionFinite | Sparse | Cosparse | Matrix | Tensor | UosRip => ErrorKind::Delta,
            ZetaGamma2 | ManifoldAdditive => ErrorKind::Zeta,
            JlFinite | EpsGamma2 | UosEmbed | ManifoldCurves | ManifoldLinearization | ManifoldIota | ManifoldReach
            | ManifoldVolume => ErrorKind::Eps,
        }
    }

    /// Parameters besides the error level and `η`.
    pub fn required(self) -> &'static [&'static str] {
        use BoundModel::*;
        match self {
            JlFinite => &["points"],
            Master => &["gamma2", "radius"],
            RipGamma2 | EpsGamma2 => &["gamma2"],
            ZetaGamma2 => &["gamma2", "diameter"],
            CovDim => &["pieces", "n0", "c", "dim"],
            SubspaceUnionFinite | ManifoldLinearization => &["pieces", "dim"],
            Sparse => &["n", "s"],
            Cosparse => &["n", "l", "p"],
            Matrix => &["n1", "n2", "r"],
            Tensor => &["dims", "ranks"],
            UosRip | UosEmbed | ManifoldCurves => &["dim", "gamma2"],
            ManifoldAdditive => &["diameter", "doubling"],
            ManifoldIota => &["k2", "iota", "diameter", "k_fin", "dim"],
            ManifoldReach => &["k2", "tau", "diameter", "dim"],
            ManifoldVolume => &["dim", "tau", "volume"],
        }
    }

    fn needs_gamma2(self) -> bool {
        self.required().contains(&"gamma2")
    }
}

impl fmt::Display for BoundModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        BoundModel::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| invalid(format!("unknown bound model `{s}`")))
    }
}

/// Inputs of a bound. Unused fields are ignored by a given model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundParams {
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub zeta: Option<f64>,
    pub kappa: Option<f64>,
    pub eta: Option<f64>,
    /// Number of points `|P|`.
    pub points: Option<f64>,
    /// γ2 of the relevant parameter set; computed from `profile` if absent.
    pub gamma2: Option<f64>,
    /// Covering profile used for a Dudley bound on γ2.
    pub profile: Option<CoveringProfile>,
    /// Radius `sup ‖y‖` of the set.
    pub radius: Option<f64>,
    /// Diameter of the set; also the scale of `profile`.
    pub diameter: Option<f64>,
    /// Number of pieces `k` in a finite union.
    pub pieces: Option<f64>,
    pub n0: Option<f64>,
    pub c: Option<f64>,
    /// Dimension `K`.
    pub dim: Option<f64>,
    pub n: Option<f64>,
    pub s: Option<f64>,
    pub l: Option<f64>,
    pub p: Option<f64>,
    pub n1: Option<f64>,
    pub n2: Option<f64>,
    pub r: Option<f64>,
    pub dims: Option<Vec<f64>>,
    pub ranks: Option<Vec<f64>>,
    pub k2: Option<f64>,
    pub k_fin: Option<f64>,
    pub tau: Option<f64>,
    pub iota: Option<f64>,
    pub volume: Option<f64>,
    /// Doubling dimension in the geodesic distance.
    pub doubling: Option<f64>,
}

impl BoundParams {
    /// Field names accepted by [`BoundParams::set`].
    pub const KEYS: [&'static str; 28] = [
        "eps", "delta", "zeta", "kappa", "eta", "points", "gamma2", "radius", "diameter", "pieces", "n0", "c", "dim", "n",
        "s", "l", "p", "n1", "n2", "r", "dims", "ranks", "k2", "k_fin", "tau", "iota", "volume", "doubling",
    ];

    /// Set a field from text. Lists (`dims`, `ranks`) are separated by
    /// `;`, `x` or whitespace.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = || -> Result<f64> {
            value.trim().parse::<f64>().map_err(|_| Error::Parse(format!("`{key}`: bad number `{value}`")))
        };
        let list = || -> Result<Vec<f64>> {
            value
                .split(|c: char| c == ';' || c == 'x' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("`{key}`: bad number `{t}`"))))
                .collect()
        };
        let slot = match key {
            "dims" => {
                self.dims = Some(list()?);
                return Ok(());
            }
            "ranks" => {
                self.ranks = Some(list()?);
                return Ok(());
            }
            "eps" => &mut self.eps,
            "delta" => &mut self.delta,
            "zeta" => &mut self.zeta,
            "kappa" => &mut self.kappa,
            "eta" => &mut self.eta,
            "points" => &mut self.points,
            "gamma2" => &mut self.gamma2,
            "radius" => &mut self.radius,
            "diameter" => &mut self.diameter,
            "pieces" => &mut self.pieces,
            "n0" => &mut self.n0,
            "c" => &mut self.c,
            "dim" => &mut self.dim,
            "n" => &mut self.n,
            "s" => &mut self.s,
            "l" => &mut self.l,
            "p" => &mut self.p,
            "n1" => &mut self.n1,
            "n2" => &mut self.n2,
            "r" => &mut self.r,
            "k2" => &mut self.k2,
            "k_fin" => &mut self.k_fin,
            "tau" => &mut self.tau,
            "iota" => &mut self.iota,
            "volume" => &mut self.volume,
            "doubling" => &mut self.doubling,
            _ => return Err(invalid(format!("unknown bound parameter `{key}`"))),
        };
        *slot = Some(num()?);
        Ok(())
    }

    pub fn error_level(&self, kind: ErrorKind) -> Option<f64> {
        match kind {
            ErrorKind::Kappa => self.kappa,
            ErrorKind::Delta => self.delta,
            ErrorKind::Eps => self.eps,
            ErrorKind::Zeta => self.zeta,
        }
    }
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    let v = v.ok_or_else(|| Error::MissingParameter(name.to_string()))?;
    if !v.is_finite() {
        return Err(invalid(format!("`{name}` must be finite")));
    }
    Ok(v)
}

fn positive(v: Option<f64>, name: &str) -> Result<f64> {
    let v = need(v, name)?;
    if v <= 0.0 {
        return Err(invalid(format!("`{name}` must be positive, got {v}")));
    }
    Ok(v)
}

fn nonnegative(v: Option<f64>, name: &str) -> Result<f64> {
    let v = need(v, name)?;
    if v < 0.0 {
        return Err(invalid(format!("`{name}` must be nonnegative, got {v}")));
    }
    Ok(v)
}

fn at_least_one(v: Option<f64>, name: &str) -> Result<f64> {
    let v = need(v, name)?;
    if v < 1.0 {
        return Err(invalid(format!("`{name}` must be at least 1, got {v}")));
    }
    Ok(v)
}

fn probability(v: Option<f64>, name: &str) -> Result<f64> {
    let v = need(v, name)?;
    if !(v > 0.0 && v < 1.0) {
        return Err(invalid(format!("`{name}` must lie in (0, 1), got {v}")));
    }
    Ok(v)
}

fn log_plus(x: f64) -> f64 {
    x.ln().max(0.0)
}

/// Which argument of the max was active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominatedTerm {
    Complexity,
    Tail,
}

impl fmt::Display for DominatedTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DominatedTerm::Complexity => "complexity",
            DominatedTerm::Tail => "tail",
        })
    }
}

/// Where the γ2 input came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gamma2Source {
    Supplied,
    Dudley,
}

impl fmt::Display for Gamma2Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gamma2Source::Supplied => "supplied",
            Gamma2Source::Dudley => "dudley",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub model: BoundModel,
    pub m: u64,
    /// The formula before rounding up.
    pub raw: f64,
    pub dominated: DominatedTerm,
    pub complexity: f64,
    pub tail: f64,
    /// `C·α²` times the error factor in front of the max.
    pub prefactor: f64,
    pub c_const: f64,
    pub alpha: f64,
    pub gamma2: Option<(f64, Gamma2Source)>,
}

/// Relative slack absorbed before rounding up, so that values like
/// `100·(1 + 1e-15)` are not pushed to the next integer.
const CEIL_SLACK: f64 = 1e-9;

/// Evaluate the bound of `model` with constant `c_const` and subgaussian
/// parameter `alpha`.
pub fn target_dimension(model: BoundModel, params: &BoundParams, c_const: f64, alpha: f64) -> Result<BoundResult> {
    use BoundModel::*;
    if !(c_const > 0.0 && c_const.is_finite()) {
        return Err(invalid(format!("C must be positive, got {c_const}")));
    }
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must be at least 1, got {alpha}")));
    }
    let kind = model.error_kind();
    let err = probability(params.error_level(kind), kind.name())?;
    let eta = probability(params.eta, "eta")?;
    let log_eta = (1.0 / eta).ln();

    let gamma2 = if model.needs_gamma2() {
        Some(match (params.gamma2, &params.profile) {
            (Some(g), _) => (nonnegative(Some(g), "gamma2")?, Gamma2Source::Supplied),
            (None, Some(profile)) => {
                let scale = params.diameter.unwrap_or(1.0);
                (dudley_integral(profile, scale)?, Gamma2Source::Dudley)
            }
            (None, None) => return Err(Error::MissingParameter("gamma2".into())),
        })
    } else {
        None
    };
    let g2 = || gamma2.map(|(g, _)| g * g).unwrap_or(0.0);

    let mut err_factor = err.powi(-2);
    let mut tail = log_eta;
    let complexity = match model {
        JlFinite => at_least_one(params.points, "points")?.ln(),
        Master => {
            let r2 = nonnegative(params.radius, "radius")?.powi(2);
            err_factor *= r2;
            tail *= r2;
            g2()
        }
        RipGamma2 | EpsGamma2 => g2(),
        ZetaGamma2 => {
            let d2 = nonnegative(params.diameter, "diameter")?.powi(2);
            err_factor *= d2;
            tail *= d2;
            g2()
        }
        CovDim => {
            let k = at_least_one(params.pieces, "pieces")?;
            let n0 = positive(params.n0, "n0")?;
            let c = positive(params.c, "c")?;
            k.ln() + n0.ln() + nonnegative(params.dim, "dim")? * c.ln()
        }
        SubspaceUnionFinite | ManifoldLinearization => {
            at_least_one(params.pieces, "pieces")?.ln() + nonnegative(params.dim, "dim")?
        }
        Sparse => {
            let n = at_least_one(params.n, "n")?;
            let s = at_least_one(params.s, "s")?;
            if s > n {
                return Err(invalid(format!("sparsity {s} exceeds dimension {n}")));
            }
            s * (std::f64::consts::E * n / s).ln()
        }
        Cosparse => {
            let n = at_least_one(params.n, "n")?;
            let l = nonnegative(params.l, "l")?;
            let p = at_least_one(params.p, "p")?;
            if l > p || l > n {
                return Err(invalid(format!("cosparsity {l} must not exceed p = {p} or n = {n}")));
            }
            let cover = if l == 0.0 { 0.0 } else { l * (std::f64::consts::E * p / l).ln() };
            cover + (n - l)
        }
        Matrix => {
            let n1 = at_least_one(params.n1, "n1")?;
            let n2 = at_least_one(params.n2, "n2")?;
            let r = at_least_one(params.r, "r")?;
            if r > n1.min(n2) {
                return Err(invalid(format!("rank {r} exceeds min(n1, n2)")));
            }
            r * (n1 + n2 + 1.0)
        }
        Tensor => {
            let dims = params.dims.as_ref().ok_or_else(|| Error::MissingParameter("dims".into()))?;
            let ranks = params.ranks.as_ref().ok_or_else(|| Error::MissingParameter("ranks".into()))?;
            if dims.len() < 2 || dims.len() != ranks.len() {
                return Err(invalid("tensor bound needs order >= 2 and one rank per mode"));
            }
            if dims.iter().zip(ranks).any(|(n, r)| !(*r >= 1.0 && r <= n)) {
                return Err(invalid("tensor ranks must satisfy 1 <= r_i <= n_i"));
            }
            let core: f64 = ranks.iter().product();
            let factors: f64 = dims.iter().zip(ranks).map(|(n, r)| n * r).sum();
            (core + factors) * (dims.len() as f64).ln()
        }
        UosRip | UosEmbed => nonnegative(params.dim, "dim")? + g2(),
        ManifoldCurves => {
            err_factor = (2.0 * err - err * err).powi(-2);
            nonnegative(params.dim, "dim")? + g2()
        }
        ManifoldAdditive => {
            err_factor *= nonnegative(params.diameter, "diameter")?.powi(4);
            nonnegative(params.doubling, "doubling")?
        }
        ManifoldIota => {
            let k2 = nonnegative(params.k2, "k2")?;
            let iota = positive(params.iota, "iota")?;
            let diam = positive(params.diameter, "diameter")?;
            k2 * log_plus(iota * diam) + nonnegative(params.k_fin, "k_fin")? + nonnegative(params.dim, "dim")?
        }
        ManifoldReach => {
            let k2 = nonnegative(params.k2, "k2")?;
            let tau = positive(params.tau, "tau")?;
            let diam = positive(params.diameter, "diameter")?;
            k2 * log_plus(diam / tau) + nonnegative(params.dim, "dim")?
        }
        ManifoldVolume => {
            let k = positive(params.dim, "dim")?;
            let tau = positive(params.tau, "tau")?;
            let vol = positive(params.volume, "volume")?;
            k * log_plus(k / tau) + k + log_plus(vol)
        }
    };

    let prefactor = c_const * alpha * alpha * err_factor;
    let (dominated, active) =
        if complexity >= tail { (DominatedTerm::Complexity, complexity) } else { (DominatedTerm::Tail, tail) };
    let raw = prefactor * active;
    if !raw.is_finite() {
        return Err(Error::NonFinite);
    }
    let m = ((raw * (1.0 - CEIL_SLACK)).ceil() as u64).max(1);
    Ok(BoundResult { model, m, raw, dominated, complexity, tail, prefactor, c_const, alpha, gamma2 })
}

/// Volume of the unit ball of `R^K`: `π^{K/2} / Γ(K/2 + 1)`.
pub fn ball_volume(k: f64) -> Result<f64> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(invalid(format!("ball dimension must be at least 1, got {k}")));
    }
    Ok(std::f64::consts::PI.powf(k / 2.0) / statrs::function::gamma::gamma(k / 2.0 + 1.0))
}

/// The calibration grid `{2^k / 4 : k = 0, …, steps − 1}`.
pub fn calibration_grid(steps: usize) -> Vec<f64> {
    (0..steps).map(|k| 2f64.powi(k as i32) / 4.0).collect()
}

/// Default number of grid points: `C ∈ {0.25, 0.5, …, 64}`.
pub const CALIBRATION_STEPS: usize = 9;

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPoint {
    pub c_const: f64,
    pub m: u64,
    pub outcome: FailureRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Smallest grid value whose failure rate was at most `η`, if any.
    pub c_const: Option<f64>,
    pub eta: f64,
    pub max_m: u64,
    pub points: Vec<CalibrationPoint>,
}

/// Smallest `C` on `grid` whose bound `m(C)` yields an empirical failure
/// rate at most `eta`. Grid values whose `m` exceeds `max_m` are not run;
/// when none succeeds the calibration carries `c_const = None`.
pub fn calibrate_c<M, R>(grid: &[f64], eta: f64, max_m: u64, mut m_of_c: M, mut run: R) -> Result<Calibration>
where
    M: FnMut(f64) -> Result<u64>,
    R: FnMut(u64) -> Result<FailureRate>,
{
    probability(Some(eta), "eta")?;
    let mut points = Vec::new();
    for &c in grid {
        let m = m_of_c(c)?;
        if m > max_m {
            break;
        }
        let outcome = run(m)?;
        let ok = outcome.rate <= eta;
        points.push(CalibrationPoint { c_const: c, m, outcome });
        if ok {
            return Ok(Calibration { c_const: Some(c), eta, max_m, points });
        }
    }
    Ok(Calibration { c_const: None, eta, max_m, points })
}
