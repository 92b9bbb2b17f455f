//! Tokenization, stop words, vocabulary and SQuAD ingestion.

mod squad;
mod stopwords;
mod tokenize;
mod vocab;

pub use squad::{
    align_answer, load_squad, parse_squad, Dataset, QAExample, SquadAnswer, SquadArticle, SquadFile,
    SquadParagraph, SquadQa,
};
pub use stopwords::{is_stop_word, stop_words, STOP_WORDS_TXT};
pub use tokenize::{char_slice, detokenize, tokenize, TokenizedText};
pub use vocab::{Vocabulary, BOS, BOS_ID, PAD, PAD_ID, UNK, UNK_ID};
