use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::types::EditCategory;

pub const HUGE_PRESERVATION_BELOW: f64 = 0.5;
pub const BAD_DELTA_BELOW: f64 = -0.1;
pub const UNNECESSARY_BEFORE_ABOVE: f64 = 0.9;
pub const GOOD_DELTA_ABOVE: f64 = 0.3;
pub const GOOD_PRESERVATION_ABOVE: f64 = 0.7;

// Differences within this distance of a threshold count as equal to it, so
// float noise in `after - before` cannot flip a strict comparison.
const EPS: f64 = 1e-9;

fn below(value: f64, threshold: f64) -> bool {
    value < threshold - EPS
}

fn above(value: f64, threshold: f64) -> bool {
    value > threshold + EPS
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {v} is outside [0, 1]")))
    }
}

/// Harmonic mean of post-edit attribution and preservation; 0 when both are 0.
pub fn f1_ap(attr_after: f64, preservation: f64) -> Result<f64> {
    check_unit("attribution", attr_after)?;
    check_unit("preservation", preservation)?;
    let sum = attr_after + preservation;
    if sum == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * attr_after * preservation / sum)
}

/// Edit categories for one (before, after, preservation) triple.
pub fn categorize_edit(attr_before: f64, attr_after: f64, preservation: f64) -> BTreeSet<EditCategory> {
    let delta = attr_after - attr_before;
    let mut set = BTreeSet::new();
    if below(preservation, HUGE_PRESERVATION_BELOW) {
        set.insert(EditCategory::Huge);
    }
    if below(delta, BAD_DELTA_BELOW) {
        set.insert(EditCategory::Bad);
        if above(attr_before, UNNECESSARY_BEFORE_ABOVE) {
            set.insert(EditCategory::Unnecessary);
        }
    }
    if above(delta, GOOD_DELTA_ABOVE) && above(preservation, GOOD_PRESERVATION_ABOVE) {
        set.insert(EditCategory::Good);
    }
    if set.is_empty() {
        set.insert(EditCategory::Other);
    }
    set
}
