pub mod connection;
pub mod ellipse;
pub mod flag;
pub mod frame;
pub mod isotropy;
pub mod polar;
pub mod recursive;

pub use connection::{connection_forms, ConnectionForms, ConnectionReport, DEFAULT_FD_STEP};
pub use ellipse::{curvature_ellipse, EllipseData, CIRCULARITY_EQUIVALENCE_C, DEFAULT_PHI_SAMPLES};
pub use flag::{flag_from_jets, higher_form_apply, osculating_flag, OsculatingFlag, DEFAULT_RANK_TOL};
pub use frame::{chart_frame, jet_frame, JetFrame};
pub use isotropy::{adapted_frame, isotropy_report, AdaptedFrame, IsotropyOptions, IsotropyReport, DEFAULT_CIRC_TOL};
pub use polar::{conformal_field, polar_surface, ConformalPoint, PolarChart, PolarSurface};
pub use recursive::{cross_definition_defect, recursive_forms, RecursiveForms, DEFAULT_RECURSION_STEP};
