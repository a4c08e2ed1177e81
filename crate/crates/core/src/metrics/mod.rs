//! Attribution, preservation, their harmonic mean, and the edit taxonomy.

mod attribution;
mod edit_distance;
mod sentences;
mod taxonomy;

pub use attribution::{sentence_attribution, statement_attribution, text_attribution, AttributionScore};
pub use edit_distance::{levenshtein, preservation};
pub(crate) use sentences::is_sentence_end;
pub use sentences::{split_sentences, SentenceSplit};
pub use taxonomy::{
    categorize_edit, f1_ap, BAD_DELTA_BELOW, GOOD_DELTA_ABOVE, GOOD_PRESERVATION_ABOVE, HUGE_PRESERVATION_BELOW,
    UNNECESSARY_BEFORE_ABOVE,
};
