//! Recurrence detectors: residual scans, the pullback oracle, nested-ball
//! constructions, G-delta membership and rigidity scans.

pub mod gdelta;
pub mod nested_ball;
pub mod oracle;
pub mod report;
pub mod rigidity;
pub mod scan;

pub use gdelta::{gdelta_membership, DyadicSampler, GDeltaLevel, GDeltaReport, MAX_DYADIC_LEVEL};
pub use nested_ball::{nested_ball_construct, next_ln_eps, Construction, Direction, NestedBallConfig, Stage, StageCheck};
pub use oracle::{pullback_probe, pullback_witness_oracle, ProbeKind, ProbeOutcome, TransitivityWitness};
pub use report::{dyadic_scales, spans_required_scales, Method, RecurrenceReport, Verdict, MIN_WITNESS_TIME, REQUIRED_SCALES};
pub use rigidity::{rigidity_scan, uniform_rigidity_scan, RigidityKind, RigidityReport};
pub use scan::{direct_scan, lattice_times, residual_curve, ScanOutcome, ScanPoint};
