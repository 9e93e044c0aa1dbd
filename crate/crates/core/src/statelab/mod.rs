//! State-level features and the comparative statistics built on them.

pub mod correlate;
pub mod factor;
pub mod features;
pub mod kmeans;
pub mod mds;
pub mod mixed;
pub mod stepwise;
pub mod triads;

pub use correlate::{pearson_table, CorrelationCell};
pub use factor::{correlation_matrix, factor_analysis, FactorError, FactorLoadings};
pub use features::{
    build_features, compute_state_reports, feature_index, feature_name, read_features_csv, summarize_network,
    write_features_csv, AverageDegree, CpNetwork, FeatureConfig, StateFeatureVector, StateReports,
    FEATURE_DESCRIPTIONS, N_FEATURES,
};
pub use kmeans::{kmeans, KMeansError, KMeansResult};
pub use mds::{classical_mds, euclidean_distances, MdsError, MdsResult};
pub use mixed::{
    fit_mixed_model, lr_test, panel_from_features, panel_from_features_with, Coefficient, ExtraColumn, MixedError,
    MixedModelFit, ModelSpec, Panel, PanelReport,
};
pub use stepwise::{stepwise_select, EntryCorrection, StepwiseConfig, StepwiseResult};
pub use triads::{
    factor_class_names, reciprocity_column, state_triad_profile, triad_factor_groups, triad_group_columns,
    StateTriadProfile, TriadFactorGroups, FACTOR_CLASSES,
};

/// Year dropped from state-level analyses by default (partial-year data).
pub const DEFAULT_EXCLUDED_YEARS: [u16; 1] = [2015];
