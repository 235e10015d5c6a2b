//! Flat key-value form of [`PotentialSpec`].
//!
//! Keys: `family`, `lambda`, `omega`, `x`, `y`, and the family parameters
//! `order`, `beta`, `matrix` (`"a,b,c,d"` row-major), `c`, `lo`, `hi`, `seed`.
//! `omega` accepts a decimal string or `golden`.

use std::collections::BTreeMap;

use super::{Family, Frequency, PhasePoint, PotentialSpec};
use crate::error::{Error, Result};

pub const POTENTIAL_KEYS: &[&str] = &[
    "family", "lambda", "omega", "x", "y", "order", "beta", "matrix", "c", "lo", "hi", "seed",
];

pub const FAMILY_NAMES: &[&str] = &[
    "harper",
    "skew-shift",
    "skew-shift-order",
    "power-beta",
    "doubling-map",
    "cat-map",
    "constant",
    "iid-random",
];

fn parse_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Parse {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn real(map: &BTreeMap<&str, &str>, key: &str) -> Result<Option<f64>> {
    map.get(key)
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| parse_err(key, format!("`{v}` is not a real number ({e})")))
        })
        .transpose()
}

fn required(map: &BTreeMap<&str, &str>, key: &str, family: &str) -> Result<f64> {
    real(map, key)?.ok_or_else(|| parse_err(key, format!("required for family `{family}`")))
}

pub(super) fn from_kv<'a, I>(pairs: I) -> Result<PotentialSpec>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut map = BTreeMap::new();
    for (k, v) in pairs {
        if !POTENTIAL_KEYS.contains(&k) {
            return Err(parse_err(k, "unknown potential key"));
        }
        if map.insert(k, v).is_some() {
            return Err(parse_err(k, "duplicate key"));
        }
    }
    let family_name = *map
        .get("family")
        .ok_or_else(|| parse_err("family", "missing"))?;
    let family = match family_name.trim() {
        "harper" => Family::Harper,
        "skew-shift" => Family::SkewShift,
        "skew-shift-order" => {
            let k = required(&map, "order", family_name)?;
            if k.fract() != 0.0 || !(2.0..=16.0).contains(&k) {
                return Err(parse_err(
                    "order",
                    format!("expected an integer in 2..=16, got {k}"),
                ));
            }
            Family::SkewShiftOrder(k as u32)
        }
        "power-beta" => Family::PowerBeta(required(&map, "beta", family_name)?),
        "doubling-map" => Family::DoublingMap,
        "cat-map" => {
            let raw = map
                .get("matrix")
                .ok_or_else(|| parse_err("matrix", "required for family `cat-map`"))?;
            let entries: Vec<i64> = raw
                .split(',')
                .map(|s| s.trim().parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err("matrix", format!("`{raw}`: {e}")))?;
            if entries.len() != 4 {
                return Err(parse_err(
                    "matrix",
                    "expected four comma-separated integers",
                ));
            }
            Family::CatMap([[entries[0], entries[1]], [entries[2], entries[3]]])
        }
        "constant" => Family::Constant(required(&map, "c", family_name)?),
        "iid-random" => {
            let seed = map
                .get("seed")
                .ok_or_else(|| parse_err("seed", "required for family `iid-random`"))?;
            let seed = seed
                .trim()
                .parse::<u64>()
                .map_err(|e| parse_err("seed", e.to_string()))?;
            Family::IidRandom {
                lo: required(&map, "lo", family_name)?,
                hi: required(&map, "hi", family_name)?,
                seed,
            }
        }
        other => {
            return Err(parse_err(
                "family",
                format!("unknown family `{other}` (expected one of {FAMILY_NAMES:?})"),
            ))
        }
    };
    let omega = match map.get("omega").map(|s| s.trim()) {
        None | Some("golden") => Frequency::golden(),
        Some(_) => Frequency::new(real(&map, "omega")?.expect("present"))?,
    };
    let lambda = real(&map, "lambda")?.unwrap_or(match family {
        Family::Constant(_) => 0.0,
        _ => 1.0,
    });
    let x = real(&map, "x")?.unwrap_or(0.0);
    let y = real(&map, "y")?.unwrap_or(0.0);
    PotentialSpec::new(family, lambda, omega, PhasePoint::new(x, y))
}

pub(super) fn to_kv(spec: &PotentialSpec) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        out.insert(k.to_string(), v);
    };
    put("family", spec.family.name().to_string());
    put("lambda", spec.lambda.to_string());
    put("omega", spec.omega.value().to_string());
    put("x", spec.phase.x().to_string());
    put("y", spec.phase.y().to_string());
    match &spec.family {
        Family::SkewShiftOrder(k) => put("order", k.to_string()),
        Family::PowerBeta(b) => put("beta", b.to_string()),
        Family::CatMap(a) => put(
            "matrix",
            format!("{},{},{},{}", a[0][0], a[0][1], a[1][0], a[1][1]),
        ),
        Family::Constant(c) => put("c", c.to_string()),
        Family::IidRandom { lo, hi, seed } => {
            put("lo", lo.to_string());
            put("hi", hi.to_string());
            put("seed", seed.to_string());
        }
        _ => {}
    }
    out
}
