use serde::{Deserialize, Serialize};

use super::StateSpace;
use crate::error::{Error, Result};

/// Largest state space for which up-sets are enumerated.
pub const MAX_UPSET_STATES: usize = 512;
/// Largest number of up-sets returned before giving up.
pub const MAX_UPSETS: usize = 1 << 20;

/// An upward-closed set of states, as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UpSet {
    pub members: Vec<bool>,
}

impl UpSet {
    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn size(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_upward_closed(&self, space: &StateSpace) -> bool {
        space
            .ordered_pairs()
            .into_iter()
            .all(|(lo, hi)| !self.members[lo] || self.members[hi])
    }
}

/// All up-sets of `(S^Lambda, <=)`.
///
/// States are visited from the top down; a state may join the set only when
/// every state covering it already has.
pub fn enumerate_upsets(space: &StateSpace) -> Result<Vec<UpSet>> {
    let k = space.len();
    if k > MAX_UPSET_STATES {
        return Err(Error::Capacity {
            what: "up-set state count",
            got: k as u128,
            limit: MAX_UPSET_STATES as u128,
        });
    }
    let mut order: Vec<usize> = (0..k).collect();
    let height = |i: usize| -> usize { space.state(i).values().iter().map(|&v| v as usize).sum() };
    order.sort_by_key(|&i| std::cmp::Reverse(height(i)));
    let covers: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let s = space.state(i);
            (0..space.sites())
                .filter(|&x| s.get(x) < space.n())
                .map(|x| {
                    let mut up = s.clone();
                    up.values_mut()[x] += 1;
                    space.encode(&up)
                })
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    let mut members = vec![false; k];
    fn walk(
        pos: usize,
        order: &[usize],
        covers: &[Vec<usize>],
        members: &mut Vec<bool>,
        out: &mut Vec<UpSet>,
    ) -> Result<()> {
        if pos == order.len() {
            if out.len() >= MAX_UPSETS {
                return Err(Error::Capacity {
                    what: "up-set count",
                    got: out.len() as u128 + 1,
                    limit: MAX_UPSETS as u128,
                });
            }
            out.push(UpSet {
                members: members.clone(),
            });
            return Ok(());
        }
        let s = order[pos];
        walk(pos + 1, order, covers, members, out)?;
        if covers[s].iter().all(|&c| members[c]) {
            members[s] = true;
            walk(pos + 1, order, covers, members, out)?;
            members[s] = false;
        }
        Ok(())
    }
    walk(0, &order, &covers, &mut members, &mut out)?;
    Ok(out)
}
