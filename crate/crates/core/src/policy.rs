//! Controllers that map observations to normalised actions.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::atmosphere::AtmosphereModel;
use crate::env::{encode_altitude, Action, EnvConfig, Observation, OBS_LEN, WIND_LEVELS};

pub trait Controller: Sync {
    fn act(&self, observation: &Observation, cfg: &EnvConfig) -> Action;
}

/// Float action value emitted when holding, and when moving.
const FLOAT: f64 = 0.5;
const MOVE: f64 = -0.5;

/// Heads for the wind level that points at the target, or for the calmest
/// level once inside the region.
#[derive(Debug, Clone)]
pub struct Greedy {
    pub speed_weight: f64,
    /// Hold (float) when the current level is within this many levels of
    /// the best one.
    pub float_threshold: f64,
    /// Floating coasts at the current ascent rate, so it is only chosen once
    /// the balloon has settled to within this rate (m/s).
    pub settle_rate: f64,
    /// Largest commanded ascent rate magnitude (m/s). Far targets are
    /// approached through intermediate altitudes so venting never outruns
    /// what the ballast can undo.
    pub max_rate: f64,
    atmosphere: AtmosphereModel<f64>,
}

impl Default for Greedy {
    fn default() -> Self {
        Self::new(1.0, 1.0)
    }
}

impl Greedy {
    pub fn new(speed_weight: f64, float_threshold: f64) -> Self {
        Self { speed_weight, float_threshold, settle_rate: 0.5, max_rate: 1.5, atmosphere: AtmosphereModel::standard() }
    }

    /// Index of the lowest-cost level; ties go to the lowest index.
    pub fn best_level(&self, observation: &Observation, cfg: &EnvConfig) -> usize {
        let inside = observation.distance_km() < cfg.region_radius();
        let cost = |i: usize| {
            if inside {
                self.speed_weight * observation.level_speed(i)
            } else {
                observation.level_bearing_error(i).abs()
            }
        };
        let mut best = 0;
        for i in 1..WIND_LEVELS {
            if cost(i) < cost(best) {
                best = i;
            }
        }
        best
    }

    /// Fractional level index of the balloon's current pressure.
    fn current_level(&self, observation: &Observation, cfg: &EnvConfig) -> f64 {
        let h = observation.altitude().clamp(0.0, crate::atmosphere::MAX_ALTITUDE);
        let p = self.atmosphere.pressure_at(h).unwrap_or(cfg.obs_pressure_lo);
        (p - cfg.obs_pressure_lo) / (cfg.obs_pressure_hi - cfg.obs_pressure_lo) * (WIND_LEVELS - 1) as f64
    }
}

impl Controller for Greedy {
    fn act(&self, observation: &Observation, cfg: &EnvConfig) -> Action {
        let best = self.best_level(observation, cfg);
        let pressure = cfg.observation_pressures()[best];
        let target = self.atmosphere.altitude_at_pressure(pressure).unwrap_or(cfg.actions.altitude.0);
        let u0 = waypoint(observation.altitude(), target, self.max_rate, cfg);
        let hold = (self.current_level(observation, cfg) - best as f64).abs() <= self.float_threshold
            && observation.ascent_rate().abs() <= self.settle_rate;
        Action::new(u0, 0.0, if hold { FLOAT } else { MOVE })
    }
}

/// Encoded altitude no further from `h` than `max_rate` covers at the
/// mid-range time factor, so the decoded ascent rate stays within it.
fn waypoint(h: f64, target: f64, max_rate: f64, cfg: &EnvConfig) -> f64 {
    let (f_lo, f_hi) = cfg.actions.time_factor;
    let reach = max_rate * 0.5 * (f_lo + f_hi) * cfg.decision_period_s;
    encode_altitude(h + (target - h).clamp(-reach, reach), &cfg.actions)
}

/// Steers towards a fixed altitude at a bounded ascent rate.
#[derive(Debug, Clone, Copy)]
pub struct HoldAltitude {
    pub altitude: f64,
    pub max_rate: f64,
}

impl HoldAltitude {
    pub fn new(altitude: f64) -> Self {
        Self { altitude, max_rate: 1.5 }
    }
}

impl Controller for HoldAltitude {
    fn act(&self, observation: &Observation, cfg: &EnvConfig) -> Action {
        Action::new(waypoint(observation.altitude(), self.altitude, self.max_rate, cfg), 0.0, MOVE)
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("weights file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid network: {0}")]
    Shape(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, weights: vec![0.0; rows * cols], bias: vec![0.0; rows] }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.cols).zip(&self.bias).map(|(row, b)| {
            row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b
        }));
    }
}

/// Mean path of a squashed-Gaussian actor: relu hidden layers, tanh output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    layers: Vec<Layer>,
}

pub const MLP_MAGIC: &str = "MLPACTOR 1";
pub const MLP_DIMS: [usize; 4] = [OBS_LEN, 256, 256, 3];

/// Largest magnitude below 1; keeps saturated tanh outputs inside (-1, 1).
const TANH_LIMIT: f64 = 1.0 - f64::EPSILON / 2.0;

impl MlpWeights {
    pub fn new(layers: Vec<Layer>) -> Result<Self, PolicyError> {
        if layers.is_empty() {
            return Err(PolicyError::Shape("no layers".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.weights.len() != l.rows * l.cols || l.bias.len() != l.rows || l.rows == 0 || l.cols == 0 {
                return Err(PolicyError::Shape(format!("layer {} storage does not match {}x{}", k + 1, l.rows, l.cols)));
            }
            if k > 0 && layers[k - 1].rows != l.cols {
                return Err(PolicyError::Shape(format!(
                    "layer {} expects {} inputs but layer {} has {} outputs",
                    k + 1,
                    l.cols,
                    k,
                    layers[k - 1].rows
                )));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(PolicyError::Shape(format!("layer {}: non-finite weight", k + 1)));
            }
        }
        let dims = Self::dims_of(&layers);
        if dims[0] != OBS_LEN || *dims.last().unwrap() != 3 {
            return Err(PolicyError::Shape(format!("dims {dims:?} must start at {OBS_LEN} and end at 3")));
        }
        Ok(Self { layers })
    }

    /// Uniform Glorot-style initialisation, for tests and demos.
    pub fn random(dims: &[usize], seed: u64) -> Result<Self, PolicyError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (cols, rows) = (w[0], w[1]);
                let a = (6.0 / (rows + cols) as f64).sqrt();
                let mut l = Layer::zeros(rows, cols);
                l.weights.iter_mut().for_each(|v| *v = rng.gen_range(-a..a));
                l.bias.iter_mut().for_each(|v| *v = rng.gen_range(-0.1..0.1));
                l
            })
            .collect();
        Self::new(layers)
    }

    fn dims_of(layers: &[Layer]) -> Vec<usize> {
        std::iter::once(layers[0].cols).chain(layers.iter().map(|l| l.rows)).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        Self::dims_of(&self.layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn forward(&self, x: &[f64; OBS_LEN]) -> [f64; 3] {
        let mut a = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.apply(&a, &mut next);
            if k < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut a, &mut next);
        }
        std::array::from_fn(|i| a[i].tanh().clamp(-TANH_LIMIT, TANH_LIMIT))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PolicyError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PolicyError> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "{MLP_MAGIC}")?;
        let dims: Vec<String> = self.dims().iter().map(ToString::to_string).collect();
        writeln!(out, "dims {}", dims.join(" "))?;
        let join = |vals: &[f64]| vals.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(" ");
        for l in &self.layers {
            writeln!(out, "W {} {}", l.rows, l.cols)?;
            for row in l.weights.chunks_exact(l.cols) {
                writeln!(out, "{}", join(row))?;
            }
            writeln!(out, "b {}", l.rows)?;
            writeln!(out, "{}", join(&l.bias))?;
        }
        Ok(())
    }

    /// Parses the text format. Values may be split over lines arbitrarily
    /// after each `W`/`b` header; errors carry the line number.
    pub fn read_from(reader: impl BufRead) -> Result<Self, PolicyError> {
        let mut tokens = Tokens::new(reader)?;
        let err = |line: usize, message: String| PolicyError::Parse { line, message };

        match tokens.header_line()? {
            Some((_, text)) if text == MLP_MAGIC => {}
            Some((line, _)) => return Err(err(line, format!("bad magic, expected `{MLP_MAGIC}`"))),
            None => return Err(err(1, "empty file".into())),
        }
        let (line, dims_text) = tokens.header_line()?.ok_or_else(|| err(2, "missing dims line".into()))?;
        let mut parts = dims_text.split_whitespace();
        if parts.next() != Some("dims") {
            return Err(err(line, "expected `dims ...`".into()));
        }
        let dims: Vec<usize> = parts
            .map(|p| p.parse().map_err(|_| err(line, format!("bad dimension `{p}`"))))
            .collect::<Result<_, _>>()?;
        if dims.len() < 2 || dims[0] != OBS_LEN || *dims.last().unwrap() != 3 {
            return Err(err(line, format!("dims {dims:?} must start at {OBS_LEN} and end at 3")));
        }

        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (k, w) in dims.windows(2).enumerate() {
            let name = k + 1;
            let (rows, cols) = (w[1], w[0]);
            let (line, header) = tokens.word()?.ok_or_else(|| err(tokens.line, format!("layer {name}: missing W header")))?;
            let r = tokens.usize_value(name)?;
            let c = tokens.usize_value(name)?;
            if header != "W" || r != rows || c != cols {
                return Err(err(line, format!("layer {name}: expected `W {rows} {cols}`, found `{header} {r} {c}`")));
            }
            let mut layer = Layer::zeros(rows, cols);
            for v in layer.weights.iter_mut() {
                *v = tokens.float_value(name)?;
            }
            let (line, header) = tokens.word()?.ok_or_else(|| err(tokens.line, format!("layer {name}: missing b header")))?;
            if header != "b" {
                return Err(err(
                    line,
                    format!("layer {name}: expected `b {rows}` (wrong number of weight rows?), found `{header}`"),
                ));
            }
            let r = tokens.usize_value(name)?;
            if r != rows {
                return Err(err(line, format!("layer {name}: bias length {r}, expected {rows}")));
            }
            for v in layer.bias.iter_mut() {
                *v = tokens.float_value(name)?;
            }
            layers.push(layer);
        }
        if let Some((line, extra)) = tokens.word()? {
            return Err(err(line, format!("trailing content `{extra}`")));
        }
        Self::new(layers)
    }
}

struct Tokens<R> {
    reader: R,
    line: usize,
    pending: std::vec::IntoIter<String>,
}

impl<R: BufRead> Tokens<R> {
    fn new(reader: R) -> Result<Self, PolicyError> {
        Ok(Self { reader, line: 0, pending: Vec::new().into_iter() })
    }

    fn next_line(&mut self) -> Result<Option<String>, PolicyError> {
        let mut buf = String::new();
        if self.reader.read_line(&mut buf)? == 0 {
            return Ok(None);
        }
        self.line += 1;
        Ok(Some(buf))
    }

    fn header_line(&mut self) -> Result<Option<(usize, String)>, PolicyError> {
        Ok(self.next_line()?.map(|l| (self.line, l.trim().to_string())))
    }

    fn word(&mut self) -> Result<Option<(usize, String)>, PolicyError> {
        loop {
            if let Some(t) = self.pending.next() {
                return Ok(Some((self.line, t)));
            }
            match self.next_line()? {
                Some(l) => {
                    self.pending = l.split_whitespace().map(str::to_string).collect::<Vec<_>>().into_iter();
                }
                None => return Ok(None),
            }
        }
    }

    fn value(&mut self, layer: usize) -> Result<(usize, String), PolicyError> {
        self.word()?.ok_or_else(|| PolicyError::Parse {
            line: self.line,
            message: format!("layer {layer}: unexpected end of file"),
        })
    }

    fn usize_value(&mut self, layer: usize) -> Result<usize, PolicyError> {
        let (line, t) = self.value(layer)?;
        t.parse().map_err(|_| PolicyError::Parse { line, message: format!("layer {layer}: bad size `{t}`") })
    }

    fn float_value(&mut self, layer: usize) -> Result<f64, PolicyError> {
        let (line, t) = self.value(layer)?;
        let v: f64 = t.parse().map_err(|_| PolicyError::Parse {
            line,
            message: format!("layer {layer}: bad number `{t}` (wrong row count?)"),
        })?;
        if !v.is_finite() {
            return Err(PolicyError::Parse { line, message: format!("layer {layer}: non-finite weight") });
        }
        Ok(v)
    }
}

impl Controller for MlpWeights {
    fn act(&self, observation: &Observation, _cfg: &EnvConfig) -> Action {
        let [u0, u1, u2] = self.forward(observation.values());
        Action::new(u0, u1, u2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    Greedy { speed_weight: f64, float_threshold: f64 },
    HoldAltitude { altitude: f64 },
    Mlp(PathBuf),
}

impl Default for ControllerSpec {
    fn default() -> Self {
        ControllerSpec::Greedy { speed_weight: 1.0, float_threshold: 1.0 }
    }
}

impl ControllerSpec {
    /// Builds the controller, loading network weights if needed.
    pub fn build(&self) -> Result<Box<dyn Controller + Send>, PolicyError> {
        Ok(match self {
            ControllerSpec::Greedy { speed_weight, float_threshold } => {
                Box::new(Greedy::new(*speed_weight, *float_threshold))
            }
            ControllerSpec::HoldAltitude { altitude } => Box::new(HoldAltitude::new(*altitude)),
            ControllerSpec::Mlp(path) => Box::new(MlpWeights::load(path)?),
        })
    }
}
