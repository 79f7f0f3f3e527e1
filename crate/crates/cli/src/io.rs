//! JSON loading with revalidation, the free-set registry shorthand, and
//! result emission shared by all subcommands.
//!
//! Every object read from disk is passed back through its checked
//! constructor: serde only establishes shape, while the constructors
//! enforce the mathematical invariants (PSD, trace preservation,
//! completeness), so hand-edited files fail loudly with a usage error.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use serde_json::{json, Value};

use resmon_core::cones::{cone_from_json, ConeSpec, ObjectKind};
use resmon_core::games::GameInstance;
use resmon_core::linalg::CMatrix;
use resmon_core::monotones::ProjReport;
use resmon_core::objects::{ChannelChoi, DensityOperator, PovmSet};
use resmon_core::Error;

/// A failed command: exit code plus the message printed to standard error.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

/// The exit-code contract: usage problems (bad input, shape and mode
/// mismatches) are 1, ill-posed optimisation problems are 2, numerical
/// failures are 3.
fn code_for(e: &Error) -> u8 {
    match e {
        Error::Domain(_)
        | Error::Dimension(_)
        | Error::Size(_)
        | Error::Mode(_)
        | Error::Config(_) => 1,
        Error::IllPosed(_) => 2,
        Error::Numerical(_) => 3,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: code_for(&e),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum KindArg {
    State,
    Channel,
    /// A single POVM (one setting).
    Povm,
    /// A collection of POVMs (several settings).
    PovmSet,
}

pub enum LoadedObject {
    State(DensityOperator),
    Channel(ChannelChoi),
    Povm(PovmSet),
}

impl LoadedObject {
    pub fn slots(&self) -> Vec<CMatrix> {
        match self {
            LoadedObject::State(rho) => vec![rho.mat().clone()],
            LoadedObject::Channel(ch) => vec![ch.choi().clone()],
            LoadedObject::Povm(ms) => ms.slots(),
        }
    }

    pub fn kind(&self) -> ObjectKind {
        match self {
            LoadedObject::State(rho) => ObjectKind::State { d: rho.dim() },
            LoadedObject::Channel(ch) => ObjectKind::Channel {
                d_in: ch.dim_in,
                d_out: ch.dim_out,
            },
            LoadedObject::Povm(ms) => ObjectKind::PovmSet {
                d: ms.dim,
                m: ms.m,
                n: ms.n,
            },
        }
    }
}

fn usage(message: String) -> Failure {
    Failure { code: 1, message }
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("invalid JSON in {}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(v: Value, what: &str, path: &Path) -> Result<T, Failure> {
    serde_json::from_value(v)
        .map_err(|e| usage(format!("{} does not parse as a {what}: {e}", path.display())))
}

/// Loads and revalidates one object file.
pub fn load_object(path: &Path, kind: KindArg) -> Result<LoadedObject, Failure> {
    let v = read_json(path)?;
    match kind {
        KindArg::State => {
            // DensityOperator validates inside its Deserialize impl
            let rho: DensityOperator = parse(v, "density operator", path)?;
            Ok(LoadedObject::State(rho))
        }
        KindArg::Channel => {
            let raw: ChannelChoi = parse(v, "channel Choi matrix", path)?;
            let ch = ChannelChoi::new(raw.dim_in, raw.dim_out, raw.choi().clone())?;
            Ok(LoadedObject::Channel(ch))
        }
        KindArg::Povm | KindArg::PovmSet => {
            let raw: PovmSet = parse(v, "POVM set", path)?;
            let ms = PovmSet::new(raw.dim, raw.effects().clone())?;
            if ms.m != raw.m || ms.n != raw.n {
                return Err(usage(format!(
                    "POVM set claims m={}, n={} but its effects grid is m={}, n={}",
                    raw.m, raw.n, ms.m, ms.n
                )));
            }
            if matches!(kind, KindArg::Povm) && ms.m != 1 {
                return Err(usage(format!(
                    "--kind povm expects a single setting, found m={}",
                    ms.m
                )));
            }
            Ok(LoadedObject::Povm(ms))
        }
    }
}

pub fn load_game_instance(path: &Path) -> Result<GameInstance, Failure> {
    let v = read_json(path)?;
    let gi: GameInstance = parse(v, "game instance", path)?;
    gi.validate()?;
    Ok(gi)
}

/// The object whose shape fixes the free cone of a game: the channel for
/// channel games, the played POVM for measurement games.
pub fn game_object(gi: &GameInstance) -> Result<LoadedObject, Failure> {
    match (&gi.channel, gi.povms.len()) {
        (Some(ch), _) => Ok(LoadedObject::Channel(ChannelChoi::new(
            ch.dim_in,
            ch.dim_out,
            ch.choi().clone(),
        )?)),
        (None, 1) => Ok(LoadedObject::Povm(PovmSet::new(
            gi.povms[0].dim,
            gi.povms[0].effects().clone(),
        )?)),
        _ => Err(usage(
            "game instance has neither a channel nor a single POVM".into(),
        )),
    }
}

/// Resolves the --freeset argument: inline JSON when it starts with `{`, a
/// file path when one exists, otherwise a registry keyword whose dimensions
/// are inferred from the object.
pub fn resolve_freeset(arg: &str, obj: &LoadedObject) -> Result<ConeSpec, Failure> {
    let v: Value = if arg.trim_start().starts_with('{') {
        serde_json::from_str(arg).map_err(|e| usage(format!("invalid inline cone JSON: {e}")))?
    } else if Path::new(arg).is_file() {
        read_json(Path::new(arg))?
    } else {
        keyword_cone(arg, &obj.kind())?
    };
    Ok(cone_from_json(&v)?)
}

fn keyword_cone(word: &str, kind: &ObjectKind) -> Result<Value, Failure> {
    let normalized = word.replace('-', "_");
    match (normalized.as_str(), kind) {
        ("incoherent", ObjectKind::State { d }) => Ok(json!({"kind": "incoherent", "d": d})),
        ("replacement", ObjectKind::Channel { d_in, d_out }) => Ok(json!({
            "kind": "replacement",
            "d_in": d_in,
            "inner": {"kind": "incoherent", "d": d_out},
        })),
        ("trivial_povm", ObjectKind::PovmSet { d, n, .. }) => {
            Ok(json!({"kind": "trivial_povm", "d": d, "n": n}))
        }
        ("jointly_measurable", ObjectKind::PovmSet { d, m, n }) => {
            Ok(json!({"kind": "jointly_measurable", "d": d, "m": m, "n": n}))
        }
        ("incoherent" | "replacement" | "trivial_povm" | "jointly_measurable", _) => Err(usage(
            format!("free set {word:?} does not apply to an object of kind {kind:?}"),
        )),
        _ => Err(usage(format!(
            "unknown free set {word:?}: expected a keyword (incoherent, replacement, \
             trivial_povm, jointly_measurable), inline JSON, or a file path"
        ))),
    }
}

/// Drops `null` members so reports only carry the fields that apply.
fn strip_nulls(v: &mut Value) {
    if let Value::Object(map) = v {
        map.retain(|_, x| !x.is_null());
    }
}

/// Renders a projective-robustness report in the CLI result shape: the
/// dual pair grouped under `"dual"`, absent fields dropped, and the
/// monotone named.
pub fn proj_report_json(monotone: &str, rep: &ProjReport) -> Value {
    let mut v = serde_json::to_value(rep).expect("serializable");
    let (a, b) = (v["dual_a"].take(), v["dual_b"].take());
    if let Value::Object(map) = &mut v {
        map.remove("dual_a");
        map.remove("dual_b");
        // echoed through the top-level tolerances object instead
        map.remove("feas_tol");
        map.remove("gap_tol");
    }
    strip_nulls(&mut v);
    if !a.is_null() && !b.is_null() {
        v["dual"] = json!({"A": a, "B": b});
    }
    v["monotone"] = json!(monotone);
    v
}

/// Names a plain serialized report and drops its `null` members.
pub fn tag_report(monotone: &str, mut v: Value) -> Value {
    strip_nulls(&mut v);
    v["monotone"] = json!(monotone);
    v
}

/// Pretty-prints a JSON result to standard output or a file.
pub fn emit(v: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).expect("serializable");
    text.push('\n');
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
    }
}
