use std::fmt;
use std::str::FromStr;

/// A list of reals given as `a,b,c`, a linear range `start:stop:count`, or a
/// logarithmic range `log:start:stop:count`. Ranges include both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Values(pub Vec<f64>);

impl fmt::Display for Values {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

fn real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn range(start: &str, stop: &str, count: &str, log: bool) -> Result<Vec<f64>, String> {
    let (a, b) = (real(start)?, real(stop)?);
    let n: usize = count
        .trim()
        .parse()
        .map_err(|_| format!("`{count}` is not a point count"))?;
    if n == 0 {
        return Err("a range needs at least one point".into());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    if log && !(a > 0.0 && b > 0.0) {
        return Err("logarithmic ranges need positive ends".into());
    }
    let step = |i: usize| i as f64 / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else if log {
                (a.ln() + (b.ln() - a.ln()) * step(i)).exp()
            } else {
                a + (b - a) * step(i)
            }
        })
        .collect())
}

impl FromStr for Values {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            ["log", a, b, n] => range(a, b, n, true)?,
            [a, b, n] => range(a, b, n, false)?,
            [list] => list.split(',').map(real).collect::<Result<_, _>>()?,
            _ => return Err(format!("cannot read `{s}` as a list or a range")),
        };
        if values.is_empty() {
            return Err("empty list".into());
        }
        Ok(Values(values))
    }
}
