//! Dataset ingestion, labelling, splitting, balancing and synthesis.

mod balance;
mod dataset;
mod io;
mod labels;
mod preprocess;
mod split;
mod synth;

pub use balance::{
    balance, interpolate, minority_factors, smote, smote_with_origins, undersample, BalanceConfig, SmoteOrigin,
    SmoteOutput,
};
pub use dataset::{Dataset, LABELS_FILE, META_FILE, WINDOWS_FILE};
pub use io::{
    encode_samples, load_annotations, load_record, parse_annotations, parse_key_values, read_header, record_paths,
    write_annotations, write_record, Annotation, RecordHeader, SampleFormat,
};
pub use labels::{aami_symbol, is_non_beat_symbol, map_beat_label, AAMI_CLASSES, PTBXL_CLASSES};
pub use preprocess::{
    list_headers, preprocess_dir, preprocess_record, PreprocessConfig, RecordSummary, ANNOTATIONS_DIR, RECORDS_DIR,
};
pub use split::{largest_remainder_sizes, split};
pub use synth::{synth_beat_dataset, synth_class_record, synth_ecg, BeatMorphology, SynthConfig, Wave};
