//! The indistinguishable ABox built from what an instance SC-entails.

use crate::censor::censor_universe;
use crate::entail::{sc_entails, Mode};
use crate::error::Result;
use crate::model::{freeze, ABox, ConjunctiveQuery as Cq, CqeInstance, UnionQuery};
use crate::Limits;

/// The BCQs of the `max(k, MaxLenCQ(P))`-universe that the instance SC-entails.
pub fn entailed_bcqs(e: &CqeInstance, k: usize, limits: &Limits) -> Result<Vec<Cq>> {
    let h = k.max(e.policy.max_len()).max(1);
    let universe = censor_universe(e, h, &[], limits)?;
    let mut out = Vec::new();
    for q in universe.members {
        if sc_entails(e, &UnionQuery::single(q.clone()), limits)? {
            out.push(q);
        }
    }
    Ok(out)
}

/// An ABox isomorphic to the entailed BCQs, each with its own fresh nulls.
///
/// Both modes use the same set: on BCQs the two semantics coincide.
pub fn indistinguishable_abox(e: &CqeInstance, k: usize, _mode: Mode, limits: &Limits) -> Result<ABox> {
    freeze(&entailed_bcqs(e, k, limits)?)
}
