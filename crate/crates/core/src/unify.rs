//! Union-find unification over terms.

use crate::model::Term;

#[derive(Clone, Default, Debug)]
pub(crate) struct Unifier {
    parent: Vec<(Term, Term)>,
}

impl Unifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn find(&self, mut t: Term) -> Term {
        while let Some(&(_, p)) = self.parent.iter().find(|(c, _)| *c == t) {
            t = p;
        }
        t
    }

    /// Merges the classes of `a` and `b`. Non-variables always represent their
    /// class; among variables the higher `rank` wins, then the smaller term.
    pub fn union(&mut self, a: Term, b: Term, rank: &dyn Fn(Term) -> u8) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        let (rep, other) = match (ra.is_var(), rb.is_var()) {
            (false, false) => return false,
            (false, true) => (ra, rb),
            (true, false) => (rb, ra),
            (true, true) => {
                if (rank(ra), std::cmp::Reverse(ra)) >= (rank(rb), std::cmp::Reverse(rb)) {
                    (ra, rb)
                } else {
                    (rb, ra)
                }
            }
        };
        self.parent.push((other, rep));
        true
    }

}
