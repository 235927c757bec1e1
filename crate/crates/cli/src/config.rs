//! Run configuration: TOML file, then flags, then resolution to concrete values.
//!
//! Every command writes the resolved tree back as `config.resolved`; feeding
//! that file to `--config` reproduces the run.

use std::path::{Path, PathBuf};

use ritzkit::solve::{LadderConfig, Rung};
use serde::{Deserialize, Serialize};

use crate::args::{GradcheckArgs, InterpArgs, McCheckArgs, PwlArgs, SolveArgs};
use crate::Failure;

/// Bumped whenever a CSV or JSONL layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment fallback for the global seed.
pub const SEED_ENV: &str = "RITZKIT_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: Option<u64>,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    pub out: PathBuf,
    pub solve: SolveSection,
    pub gradcheck: GradcheckSection,
    pub mc_check: McCheckSection,
    pub pwl: PwlSection,
    pub interp: InterpSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: None,
            jobs: 1,
            out: PathBuf::from("ritzkit-out"),
            solve: SolveSection::default(),
            gradcheck: GradcheckSection::default(),
            mc_check: McCheckSection::default(),
            pwl: PwlSection::default(),
            interp: InterpSection::default(),
        }
    }
}

/// Ladder run. The shorthand keys build a schedule from the case preset;
/// an explicit `[solve.ladder]` table is used as is (missing keys take the
/// library defaults, not the case preset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub case: String,
    pub rungs: Option<usize>,
    pub widths: Option<Vec<usize>>,
    pub lambdas: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
    pub steps: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    /// Record wall time in the outputs (breaks byte-identical reruns).
    pub timing: bool,
    pub ladder: Option<LadderConfig>,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            case: "poisson_1d_sine".into(),
            rungs: None,
            widths: None,
            lambdas: None,
            deltas: None,
            steps: None,
            n: None,
            m: None,
            timing: false,
            ladder: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckSection {
    pub nets: usize,
    pub max_width: usize,
    /// Interior and boundary points of the checked loss.
    pub n: usize,
    pub m: usize,
    pub penalty: f64,
    /// Relative step of the fourth-order central difference.
    pub step: f64,
    pub tolerance: f64,
}

impl Default for GradcheckSection {
    fn default() -> Self {
        Self {
            nets: 20,
            max_width: 32,
            n: 48,
            m: 16,
            penalty: 3.0,
            step: 1e-3,
            tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McCheckSection {
    pub case: String,
    pub n: Vec<usize>,
    pub seeds: usize,
}

impl Default for McCheckSection {
    fn default() -> Self {
        Self {
            case: "hat_energy".into(),
            n: vec![1024, 4096, 16384],
            seeds: 50,
        }
    }
}

/// Exact-representation fixtures. With nothing selected, the hat and a
/// three-plane maximum in two dimensions run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PwlSection {
    pub hat: Option<bool>,
    pub knots: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
    pub left_slope: f64,
    pub right_slope: f64,
    /// Number of random affine maps combined by `relu_max`/`relu_min`.
    pub affines: Option<usize>,
    pub dim: usize,
    pub points: usize,
}

impl Default for PwlSection {
    fn default() -> Self {
        Self {
            hat: None,
            knots: None,
            values: None,
            left_slope: 0.0,
            right_slope: 0.0,
            affines: None,
            dim: 2,
            points: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterpSection {
    pub fixture: String,
    pub deltas: Vec<f64>,
    pub p: Vec<f64>,
    pub dims: Vec<usize>,
    /// Quadrature nodes per axis; `None` picks a default per dimension.
    pub resolution: Option<usize>,
    pub exterior_points: usize,
    /// Largest accepted `w1p(δ_{k+1}) / w1p(δ_k)`.
    pub max_ratio: f64,
}

impl Default for InterpSection {
    fn default() -> Self {
        Self {
            fixture: "bump".into(),
            deltas: vec![0.4, 0.2, 0.1, 0.05],
            p: vec![2.0],
            dims: vec![1],
            resolution: None,
            exterior_points: 10_000,
            max_ratio: 0.75,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let config: Self =
            toml::from_str(text).map_err(|e| Failure::Usage(format!("config: {e}")))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(Failure::Usage(format!(
                "config schema_version {} (this build reads {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Seed precedence: flag, config file, `RITZKIT_SEED`, 0.
    pub fn resolve_seed(&mut self, flag: Option<u64>) -> Result<u64, Failure> {
        let seed = match (flag, self.seed) {
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) => match std::env::var(SEED_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v:?} is not a u64")))?,
                Err(_) => 0,
            },
        };
        self.seed = Some(seed);
        Ok(seed)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

impl SolveSection {
    pub fn apply(&mut self, args: &SolveArgs) {
        set(&mut self.case, args.case.clone());
        set_opt(&mut self.rungs, args.rungs);
        set_opt(&mut self.widths, args.widths.clone());
        set_opt(&mut self.lambdas, args.lambdas.clone());
        set_opt(&mut self.deltas, args.deltas.clone());
        set_opt(&mut self.steps, args.steps);
        if args.timing {
            self.timing = true;
        }
    }

    /// Folds the shorthand keys into a full ladder. `preset` is the case
    /// default used when no explicit ladder is configured.
    pub fn resolve(&mut self, preset: LadderConfig, seed: u64) -> Result<(), Failure> {
        let mut ladder = self.ladder.take().unwrap_or(preset);
        let lengths: Vec<(&str, usize)> = [
            ("widths", self.widths.as_ref().map(Vec::len)),
            ("lambdas", self.lambdas.as_ref().map(Vec::len)),
            ("deltas", self.deltas.as_ref().map(Vec::len)),
        ]
        .into_iter()
        .filter_map(|(k, l)| l.map(|l| (k, l)))
        .collect();
        let count = match (self.rungs, lengths.first()) {
            (Some(r), _) => Some(r),
            (None, Some(&(_, l))) => Some(l),
            (None, None) => None,
        };
        if let Some(count) = count {
            if count == 0 {
                return Err(Failure::Usage("--rungs must be at least 1".into()));
            }
            if let Some((key, l)) = lengths.iter().find(|(_, l)| *l != count) {
                return Err(Failure::Usage(format!("{key} has {l} entries for {count} rungs")));
            }
            if count != ladder.rungs.len() {
                let template = ladder.rungs.first().copied();
                let mut rungs = LadderConfig::schedule(count, 5000, 1024, 256);
                if let Some(t) = template {
                    for r in &mut rungs {
                        (r.max_steps, r.n, r.m) = (t.max_steps, t.n, t.m);
                    }
                }
                ladder.rungs = rungs;
            }
        }
        let rungs: &mut [Rung] = &mut ladder.rungs;
        for (i, r) in rungs.iter_mut().enumerate() {
            if let Some(w) = &self.widths {
                r.width = w[i];
            }
            if let Some(l) = &self.lambdas {
                r.lambda = l[i];
            }
            if let Some(d) = &self.deltas {
                r.delta = d[i];
            }
            set(&mut r.max_steps, self.steps);
            set(&mut r.n, self.n);
            set(&mut r.m, self.m);
        }
        ladder.seed = seed;
        ladder
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        (self.rungs, self.widths, self.lambdas, self.deltas) = (None, None, None, None);
        (self.steps, self.n, self.m) = (None, None, None);
        self.ladder = Some(ladder);
        Ok(())
    }
}

impl GradcheckSection {
    pub fn apply(&mut self, args: &GradcheckArgs) {
        set(&mut self.nets, args.nets);
    }
}

impl McCheckSection {
    pub fn apply(&mut self, args: &McCheckArgs) {
        set(&mut self.case, args.case.clone());
        set(&mut self.n, args.n.clone());
        set(&mut self.seeds, args.seeds);
    }
}

impl PwlSection {
    pub fn apply(&mut self, args: &PwlArgs) {
        let chosen = args.hat || args.knots.is_some() || args.affines.is_some();
        if chosen {
            // flags pick the fixtures; config selections are dropped
            self.hat = Some(args.hat);
            self.knots = None;
            self.values = None;
            self.affines = None;
        }
        set_opt(&mut self.knots, args.knots.clone());
        set_opt(&mut self.values, args.values.clone());
        set_opt(&mut self.affines, args.affines);
        set(&mut self.dim, args.dim);
        set(&mut self.points, args.points);
    }

    pub fn resolve(&mut self) {
        if self.hat.is_none() && self.knots.is_none() && self.affines.is_none() {
            self.hat = Some(true);
            self.affines = Some(3);
        }
        if self.hat.is_none() {
            self.hat = Some(false);
        }
    }
}

impl InterpSection {
    pub fn apply(&mut self, args: &InterpArgs) {
        if args.bump {
            self.fixture = "bump".into();
        }
        set(&mut self.deltas, args.deltas.clone());
        set(&mut self.p, args.p.clone());
        set(&mut self.dims, args.dim.clone());
        set_opt(&mut self.resolution, args.resolution);
    }
}
