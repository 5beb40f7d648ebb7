"""Counter-based per-trial random streams.

Trial ``t`` of a run seeded with ``seed`` owns the Philox-4x64-10 stream with
key ``(seed mod 2^64, seed >> 64)`` and counter ``(position, t, 0, 0)``.
That makes every trial's randomness a pure function of ``(seed, t)``:
trials can be generated in any order, in any chunking, on any number of
workers, and the bits never change.

Two interchangeable code paths produce those bits:

* a per-trial path that points an ``np.random.Philox`` bit generator at the
  trial's counter block (fast when one trial needs many numbers), and
* a vectorised reimplementation of the Philox round function that evaluates
  many trials' counters in one shot (fast when each trial needs only a few
  numbers).

The two paths are bit-identical; ``tests/test_montecarlo.py`` cross-checks
them against each other and against numpy's own generator output.
"""

from __future__ import annotations

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_MULT_HI = np.uint64(0xD2E7470EE14C6C93)
_MULT_LO = np.uint64(0xCA5A826395121157)
_WEYL_HI = np.uint64(0x9E3779B97F4A7C15)
_WEYL_LO = np.uint64(0xBB67AE8584CAA73B)
_SHIFT32 = np.uint64(32)
_INV_2_53 = 1.0 / 9007199254740992.0

# Below this many numbers per trial the per-trial bit-generator setup cost
# dominates, so the vectorised path wins.
_VECTORISED_COUNT_LIMIT = 32


def _split_seed(seed: int) -> tuple[int, int]:
    seed %= 1 << 128
    return seed & 0xFFFFFFFFFFFFFFFF, seed >> 64


def _mul_hi_lo(a: np.uint64, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full 64x64 -> 128 bit product via 32-bit limbs (numpy wraps the low word)."""
    lo = a * b
    a0 = a & _MASK32
    a1 = a >> _SHIFT32
    b0 = b & _MASK32
    b1 = b >> _SHIFT32
    p01 = a0 * b1
    p10 = a1 * b0
    mid = ((a0 * b0) >> _SHIFT32) + (p01 & _MASK32) + (p10 & _MASK32)
    hi = a1 * b1 + (p01 >> _SHIFT32) + (p10 >> _SHIFT32) + (mid >> _SHIFT32)
    return hi, lo


def _philox_block(c0, c1, c2, c3, k0, k1):
    """Ten Philox-4x64 rounds; all arguments are equal-shape uint64 arrays."""
    for _ in range(10):
        hi0, lo0 = _mul_hi_lo(_MULT_HI, c0)
        hi1, lo1 = _mul_hi_lo(_MULT_LO, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = k0 + _WEYL_HI
        k1 = k1 + _WEYL_LO
    return c0, c1, c2, c3


def _uniforms_vectorised(seed: int, start_trial: int, num_trials: int, count: int) -> np.ndarray:
    blocks = -(-count // 4)
    key_lo, key_hi = _split_seed(seed)
    trials = np.repeat(
        np.arange(start_trial, start_trial + num_trials, dtype=np.uint64), blocks
    )
    # numpy's Philox advances its counter before producing a block, so the
    # first block of a stream sits at position 1.
    positions = np.tile(np.arange(1, blocks + 1, dtype=np.uint64), num_trials)
    zeros = np.zeros_like(trials)
    with np.errstate(over="ignore"):
        o0, o1, o2, o3 = _philox_block(
            positions,
            trials,
            zeros,
            zeros,
            np.full_like(trials, np.uint64(key_lo)),
            np.full_like(trials, np.uint64(key_hi)),
        )
    words = np.empty((num_trials * blocks, 4), dtype=np.uint64)
    words[:, 0] = o0
    words[:, 1] = o1
    words[:, 2] = o2
    words[:, 3] = o3
    words = words.reshape(num_trials, blocks * 4)[:, :count]
    return (words >> np.uint64(11)) * _INV_2_53


def _uniforms_per_trial(seed: int, start_trial: int, num_trials: int, count: int) -> np.ndarray:
    key_lo, key_hi = _split_seed(seed)
    philox = np.random.Philox(key=np.array([key_lo, key_hi], dtype=np.uint64))
    gen = np.random.Generator(philox)
    out = np.empty((num_trials, count), dtype=np.float64)
    for row in range(num_trials):
        state = philox.state
        state["state"]["counter"][:] = 0
        state["state"]["counter"][1] = start_trial + row
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        state["uinteger"] = 0
        philox.state = state
        out[row] = gen.random(count)
    return out


def trial_uniforms(seed: int, start_trial: int, num_trials: int, count: int) -> np.ndarray:
    """Uniform(0, 1) draws: row ``i`` holds trial ``start_trial + i``'s stream."""
    if num_trials == 0:
        return np.empty((0, count), dtype=np.float64)
    if count <= _VECTORISED_COUNT_LIMIT:
        return _uniforms_vectorised(seed, start_trial, num_trials, count)
    return _uniforms_per_trial(seed, start_trial, num_trials, count)
