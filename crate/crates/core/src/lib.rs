pub mod ad;
pub mod config;
pub mod corridor;
pub mod dynamics;
pub mod epigraph;
pub mod error;
pub mod nlp;
pub mod oracle;
pub mod pareto;
pub mod spatial;
pub mod transcription;

pub use config::RunConfig;
pub use corridor::{parse_profile, CorridorBounds, Stack, StackProfile};
pub use dynamics::{
    actuator_power, mechanical_energy, regen_power_flow, time_derivatives, trolley_kinematics, Control, CraneParams,
    PowerPair, TimeState,
};
pub use epigraph::{aux_value, epigraph_constraints, tightness_report, AuxCoeffs, EpigraphPoints, TightnessReport};
pub use error::{Error, Result};
pub use nlp::{SolveStatus, SolverOptions};
pub use oracle::{
    integrate, reconstruct_controls, validate, ControlInput, ControlSchedule, TimeTrajectory, ValidationReport,
    ValidationTolerances,
};
pub use pareto::{alpha_grid, pareto_points, sweep, ParetoPoint};
pub use spatial::{implicit_residual, mayer_objective, spatial_rhs, SpatialGrid, SpatialState};
pub use transcription::{
    solve_ocp, transcribe, Boundary, BoxBounds, CraneOcp, DiscretizedSolution, OcpSpec, SolverStatus,
};
