"""Keyed, counter-based random streams.

Every random draw in the sampler comes from a stream addressed by
(seed, purpose, *indices) — e.g. (seed, STEP_NOISE, t, level).  Streams are
backed by Philox, seeded through numpy's SeedSequence so the mapping from
key to stream is stable across platforms and numpy versions.  Because a
stream's output depends only on its key, evaluating levels in parallel or in
any order cannot perturb the result.
"""

from __future__ import annotations

import numpy as np

# Purpose tags.  Values are part of the determinism contract: changing them
# changes every seeded output.
INIT_Z = 1          # z_{i,T} initialisation, indexed by level
STEP_NOISE = 2      # per-step noise stack layers, indexed by (t, layer)
INDEP_NOISE = 3     # unshared-noise ablation, indexed by (t, level)
LEVEL_SEED = 4      # per-level seed derivation for independent sampling
TARGET_SYNTH = 5    # built-in backend target synthesis


def stream(seed: int, purpose: int, *indices: int) -> np.random.Generator:
    """Return the generator for the (seed, purpose, *indices) stream."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(purpose, *indices))
    return np.random.Generator(np.random.Philox(seq))


def derive_level_seed(seed: int, level: int) -> int:
    """Stable per-level seed used by independent (per-chain) sampling."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(LEVEL_SEED, level))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
