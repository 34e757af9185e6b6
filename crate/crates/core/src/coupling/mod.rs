//! Brownian embedding of reverse martingale differences and Gaussian
//! partner sequences.

mod brownian;
mod couple;
mod embed;
mod hanson_russo;

pub use brownian::BrownianGrid;
pub use couple::{couple, tail_series_couple, CouplingTrace, EmbeddingSchedule, IncrementSource, Scaled, SignedIncrements, TailTrace, STEPS_PER_VARIANCE};
pub use embed::{embed_conditioned, embed_increment, Embedded};
pub use hanson_russo::{hanson_russo_check, HansonRussoReport};
