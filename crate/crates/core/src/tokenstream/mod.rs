//! Token streams for masked-prediction training.
//!
//! Each five-slot sequence becomes a fixed-length list of tokens: scalars are
//! z-scored with training-split statistics and Fourier-encoded, covariance
//! matrices are rescaled by their mean diagonal magnitude over the sequence,
//! every matrix is zero-padded to the schema maximum and cut into square
//! patches, and the channel type is one-hot encoded. Mask plans hide target
//! features for pretraining, interpolation or forecasting.

mod export;
mod fourier;
mod mask;
mod normalize;
mod patch;
mod schema;
mod sequence;

pub use export::{
    count_kind, read_export, write_export, ExportMeta, SequenceColumns, TokenColumns, TokenIndex, EXPORT_FORMAT,
    EXPORT_VERSION, INDEX_FILE, MASKS_FILE, TOKENS_FILE,
};
pub use fourier::{fourier_decode, fourier_encode};
pub use mask::{apply_mask_plan, MaskMode};
pub use normalize::{check_stats, denormalize_record, normalize_record, normalize_sequence, NormalizedRecord, SequenceScales};
pub use patch::{depatchify, pad_matrix, patchify, Patch};
pub use schema::{
    choose_patch_size, FeatureId, FeatureKind, FeatureSchema, FeatureSpec, FourierGrid, PadTargets,
    MAX_TOKENS_PER_MATRIX, MIN_PATCH,
};
pub use sequence::{
    build_token_sequence, build_token_sequences, decode_feature, slot_tokens, FeatureValue, Token, TokenSequence,
};
