//! Independent random streams derived from one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Keeping purposes apart means turning one
/// consumer on or off never shifts the draws of another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Initial drone headings.
    Placement,
    /// Random-waypoint motion of one user.
    Motion(u32),
    /// Reading gaps of one user.
    Traffic(u32),
    /// Starting profiles of the best-response game.
    GameInit,
}

impl Stream {
    fn id(self) -> u64 {
        let (purpose, index) = match self {
            Stream::Placement => (1u64, 0u32),
            Stream::Motion(i) => (2, i),
            Stream::Traffic(i) => (3, i),
            Stream::GameInit => (4, 0),
        };
        purpose << 32 | index as u64
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
