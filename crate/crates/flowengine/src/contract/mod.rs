//! The standardized I/O contract: parameter resolution (controller layer),
//! envelope construction (initializer layer), output checks and whole-control
//! validation (validator layer). The wrapper layer that strings these
//! together per engine call lives in the executor.

pub mod envelope;
pub mod output;
pub mod params;
pub mod validate;

pub use envelope::{make_envelope, materialize_partitions, StageEnvelope, Upstream};
pub use output::{is_submap, validate_engine_output, EngineOutput, EnginePayload};
pub use params::{resolve_params, try_resolve_params, Domain, ParamKind, ParamSchema, ParamSpec};
pub use validate::{
    controller_defaults, detect_complementary_pair, executed_selections, validate_control,
};
