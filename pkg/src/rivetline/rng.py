"""SplitMix64 helpers.

Every random draw in the package goes through these functions so that a
color sequence or an episode seed can be reproduced from an integer seed
by any implementation of the same 64-bit mix.
"""

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """Finalizing mix of SplitMix64 (Stafford variant 13)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(seed: int, index: int) -> int:
    """Return the ``index``-th output (0-based) of the SplitMix64 stream seeded with ``seed``."""
    return mix64(seed + (index + 1) * GOLDEN_GAMMA)


def derive_seed(seed: int, index: int) -> int:
    """Child seed for sub-run ``index`` (episode, worker, ...) of a master seed."""
    return mix64(seed + index)


def coin(seed: int, index: int) -> int:
    """Uniform bit taken from the top bit of the ``index``-th stream output."""
    return splitmix64(seed, index) >> 63
