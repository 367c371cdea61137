//! Knowledge-based word sense disambiguation by personalized PageRank over
//! a lexical knowledge-base graph.
//!
//! The pipeline: load a relation graph ([`kbgraph`]) and a sense dictionary
//! ([`lexicon`]), read a pre-lemmatized corpus ([`corpus`], or convert one
//! with [`ingest`]), rank candidate senses with one of the random-walk
//! strategies in [`wsd`], and score predictions against gold keys
//! ([`scorer`]). [`pipeline`] ties these together for batch runs.

pub mod corpus;
pub mod ingest;
pub mod kbgraph;
pub mod lexicon;
pub mod pagerank;
pub mod pipeline;
pub mod scorer;
pub mod subgraph;
pub mod wsd;

pub use kbgraph::{load_relations, Graph, GraphStats};
pub use lexicon::{load_dictionary, Dictionary};
pub use pagerank::{personalized_pagerank, standard_pagerank, Personalization, PowerParams, RankVector};
pub use wsd::{Algorithm, Prediction, WsdConfig};
