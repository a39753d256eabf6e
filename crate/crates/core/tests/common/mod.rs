#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sarkisov_core::lattice::{PointSpec, ProximityForest};
use sarkisov_core::rational::{fmt_q, parse_q};
use serde_json::Value;

/// Every valid forest with exactly `n` points, as sequences of point placements.
pub fn all_forests(n: usize) -> Vec<ProximityForest> {
    let mut level = vec![ProximityForest::default()];
    for _ in 0..n {
        let mut next = Vec::new();
        for f in &level {
            let i = f.len();
            let mut specs = vec![PointSpec::proper()];
            for p in 0..i {
                specs.push(PointSpec::near(p));
                for s in f.proximate_to(p) {
                    specs.push(PointSpec::satellite(p, s));
                }
            }
            next.extend(specs.into_iter().filter_map(|s| f.extend(s).ok()));
        }
        level = next;
    }
    level
}

/// Discrepancies over the plane by composing single blowups.
pub fn chain_discrepancies(f: &ProximityForest) -> Vec<i64> {
    let mut a: Vec<i64> = Vec::new();
    for i in 0..f.len() {
        a.push(1 + f.proximate_to(i).iter().map(|&j| a[j]).sum::<i64>());
    }
    a
}

/// Vanishing orders of the pullback of a system with multiplicities `m` along each
/// exceptional curve.
pub fn chain_orders(f: &ProximityForest, m: &[i64]) -> Vec<i64> {
    let mut b: Vec<i64> = Vec::new();
    for (i, mi) in m.iter().enumerate().take(f.len()) {
        b.push(mi + f.proximate_to(i).iter().map(|&j| b[j]).sum::<i64>());
    }
    b
}

/// Paths to every scalar leaf of a JSON document.
pub fn leaves(v: &Value, path: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                path.push(k.clone());
                leaves(x, path, out);
                path.pop();
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                path.push(i.to_string());
                leaves(x, path, out);
                path.pop();
            }
        }
        _ => out.push(path.clone()),
    }
}

pub fn get_mut<'a>(v: &'a mut Value, path: &[String]) -> &'a mut Value {
    path.iter().fold(v, |v, k| match v {
        Value::Object(m) => m.get_mut(k).unwrap(),
        Value::Array(a) => &mut a[k.parse::<usize>().unwrap()],
        _ => unreachable!(),
    })
}

/// Replaces a leaf by a different value of the same shape.
pub fn mutate(leaf: &mut Value, rng: &mut ChaCha8Rng, filler: &Value) {
    let alternatives: &[&[&str]] = &[
        &["point", "curve"],
        &["I", "II", "III", "IV"],
        &["lambda_gt_mu", "lambda_le_mu"],
        &["genuine", "klt", "wklt"],
    ];
    *leaf = match leaf.take() {
        Value::Bool(b) => Value::Bool(!b),
        Value::Number(n) => Value::from(n.as_u64().unwrap_or(0) + rng.gen_range(1..3)),
        Value::Null => filler.clone(),
        Value::String(s) => {
            if let Ok(x) = parse_q(&s) {
                Value::String(fmt_q(&(x + parse_q(["1", "-1", "1/2"][rng.gen_range(0..3)]).unwrap())))
            } else if let Some(alts) = alternatives.iter().find(|a| a.contains(&s.as_str())) {
                let others: Vec<&&str> = alts.iter().filter(|a| **a != s).collect();
                Value::String(others[rng.gen_range(0..others.len())].to_string())
            } else {
                let mut c: Vec<char> = s.chars().collect();
                let i = rng.gen_range(0..c.len());
                c[i] = if c[i] == '0' { '1' } else { '0' };
                Value::String(c.into_iter().collect())
            }
        }
        other => other,
    };
}
