use crate::model::{Policy, TBox, Tgd};
use crate::reasoner::tbox_tgds;

/// `TGD(P) ∪ TGD(T)`: each ED with a CQ head becomes `body ∧ Ind(universals) → head`;
/// each positive inclusion becomes its single-atom rule. ⊥-headed EDs and
/// disjointness axioms produce nothing.
pub fn tgd_translate(t: &TBox, p: &Policy) -> Vec<Tgd> {
    let mut out: Vec<Tgd> = p
        .eds
        .iter()
        .filter_map(|ed| {
            let head = ed.head.as_ref()?;
            Some(Tgd::new(ed.body.atoms.clone(), ed.universals(), head.atoms.clone()))
        })
        .collect();
    out.extend(tbox_tgds(t));
    out
}
