//! Vocabulary construction, sparse TF-IDF matrices and BPE subwords.

mod bpe;
mod tfidf;
mod vocab;

pub use bpe::{learn_bpe, BpeModel, BpeOutput, END_OF_WORD, UNK};
pub use tfidf::{build_tfidf, group_sentences, DocTermMatrix, TfidfConfig};
pub use vocab::{build_vocab, Vocabulary};
