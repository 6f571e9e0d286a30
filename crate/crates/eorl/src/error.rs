use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("action {action} out of range for {n_actions} actions")]
    ActionOutOfRange { action: usize, n_actions: usize },

    #[error("episode already finished")]
    EpisodeDone,

    #[error("cannot sample from an empty buffer")]
    EmptyBuffer,

    #[error("non-finite {what}")]
    NonFinite { what: String },

    #[error("episode {episode}: {source}")]
    InEpisode { episode: usize, source: Box<Error> },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach the episode index in which a failure occurred.
    pub fn in_episode(self, episode: usize) -> Error {
        Error::InEpisode {
            episode,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
