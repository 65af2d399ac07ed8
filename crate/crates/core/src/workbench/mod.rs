//! Instance generators, brute-force oracles and report pipelines behind the
//! `lcp` command-line tool.

pub mod generators;
pub mod oracles;
pub mod report;

pub use generators::{
    defect_map, generate, load_map, planted_pair, random_dilated_map, DefectKind, DefectSpec, Dilated, GeneratorKind,
    InstanceFile, InstanceSpec, PlantedPair, Role,
};
pub use oracles::{brute_force_gram, choi_stinespring_oracle_k1, ChoiOracle};
pub use report::{format_text, instance_pipeline, map_pipeline, report_dir, CheckLine, InstanceReport, PipelineOptions};
