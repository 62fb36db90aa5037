//! The recursive subspace-finding pipeline: statement checks, the endgame,
//! local-to-global assembly, the inductive step and its corollaries.

pub mod corollaries;
pub mod endgame;
pub mod induction;
pub mod local_global;
pub mod statements;

pub use corollaries::{analyze_set, many_sums, rich_cosets, ManySums, RichCosets, SetAnalysis};
pub use endgame::{endgame, EndgameQuantities, EndgameTranscript, FiberOracle};
pub use induction::{solve_b, BSolution, Mode, PipelineConfig, PipelineTrace, StepKind, TraceStep};
pub use local_global::{
    local_to_global, y_size_lower_bound_check, LocalToGlobalConfig, LocalToGlobalReport,
    YSizeReport,
};
pub use statements::{check_statement_a, check_statement_b, Verdict};
