use crate::fragility::FailureProfile;
use crate::network::{BranchStatus, SystemState};

use super::{Action, MdpError};

/// Successor distribution of closing the breakers of `a` in `s`.
///
/// Each branch of `a` independently ends damaged with probability `P_F`
/// and energized otherwise; all other branches keep their status.
/// Outcomes are listed with the first branch of `a` varying slowest and
/// energized before damaged. Zero-probability outcomes are dropped.
pub fn transition_distribution(
    s: &SystemState,
    a: &Action,
    p_f: &FailureProfile,
) -> Result<Vec<(SystemState, f64)>, MdpError> {
    if p_f.len() != s.len() {
        return Err(MdpError::ProfileLength {
            expected: s.len(),
            got: p_f.len(),
        });
    }
    let applicable = a
        .branches()
        .iter()
        .all(|&j| j < s.len() && s.get(j) == BranchStatus::Unknown);
    if !applicable {
        return Err(MdpError::NotApplicable {
            action: a.clone(),
            state: s.to_string(),
        });
    }

    let k = a.len();
    let mut out = Vec::with_capacity(1 << k);
    for outcome in 0u64..(1u64 << k) {
        let mut next = s.clone();
        let mut p = 1.0;
        for (pos, &j) in a.branches().iter().enumerate() {
            let damaged = outcome & (1 << (k - 1 - pos)) != 0;
            if damaged {
                next.set(j, BranchStatus::Damaged);
                p *= p_f.get(j);
            } else {
                next.set(j, BranchStatus::Energized);
                p *= 1.0 - p_f.get(j);
            }
        }
        if p > 0.0 {
            out.push((next, p));
        }
    }
    Ok(out)
}
