//! Sweep grid parsing.
//!
//! A grid is written `start:stop:third`. When `third` fits inside the span
//! it is a step size and the grid walks from `start` to `stop` in that
//! increment; when it exceeds the span it is an integer point count and the
//! grid places that many evenly spaced points. Both ends are included and
//! the final point is snapped onto `stop` so accumulated rounding never
//! pushes a value past a validated range.

use anyhow::{bail, Context, Result};

/// Relative slack for deciding whether a stepped value still lands on the
/// grid's endpoint.
const ENDPOINT_SLACK: f64 = 1e-9;

/// Parses a `start:stop:step-or-count` specification into grid values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let fields: Vec<&str> = spec.split(':').collect();
    if fields.len() != 3 {
        bail!("grid {spec:?} must have the form start:stop:step-or-count");
    }
    let parse = |name: &str, text: &str| -> Result<f64> {
        let value: f64 = text
            .trim()
            .parse()
            .with_context(|| format!("grid {name} {text:?} is not a number"))?;
        if !value.is_finite() {
            bail!("grid {name} must be finite, got {value}");
        }
        Ok(value)
    };
    let start = parse("start", fields[0])?;
    let stop = parse("stop", fields[1])?;
    let third = parse("step-or-count", fields[2])?;
    if stop <= start {
        bail!("grid start {start} must lie below stop {stop}");
    }
    if third <= 0.0 {
        bail!("grid step-or-count must be positive, got {third}");
    }
    let span = stop - start;
    if third > span * (1.0 + ENDPOINT_SLACK) {
        let count = third.round();
        if (third - count).abs() > 1e-9 || count < 2.0 {
            bail!(
                "grid third field {third} exceeds the span {span}, so it must \
                 be an integer point count of at least 2"
            );
        }
        let n = count as usize;
        return Ok((0..n)
            .map(|k| if k == n - 1 { stop } else { start + span * k as f64 / (n - 1) as f64 })
            .collect());
    }
    let step = third;
    let n = ((span + step * ENDPOINT_SLACK) / step).floor() as usize + 1;
    Ok((0..n)
        .map(|k| {
            let value = start + step * k as f64;
            if (value - stop).abs() <= step * ENDPOINT_SLACK {
                stop
            } else {
                value
            }
        })
        .collect())
}
