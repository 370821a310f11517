use super::verdict::{CriterionKind, CriterionVerdict, Evidence};
use crate::semigroups::DiagonalSemigroup;

/// A diagonal family on a finite-dimensional space is recurrent iff all its
/// eigenvalues are unimodular (simultaneous Dirichlet approximation).
pub fn discrete_spectrum_criterion(d: &DiagonalSemigroup, tol: f64) -> CriterionVerdict {
    let evidence: Vec<Evidence> =
        (0..d.dimension()).map(|j| Evidence::new("|lambda_j(1)| - 1", j as f64, d.eigenvalue(j, 1.0).norm() - 1.0)).collect();
    CriterionVerdict {
        criterion: CriterionKind::DiscreteSpectrum,
        holds: evidence.iter().all(|e| e.value.abs() < tol),
        evidence,
        horizon: 1.0,
        tol,
        direction: None,
        notes: vec!["unimodular point spectrum".into()],
    }
}
