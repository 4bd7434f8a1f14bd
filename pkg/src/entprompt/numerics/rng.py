"""Seeded random streams.

All randomness goes through ``numpy.random.Generator`` backed by Philox, a
64-bit counter-based generator. Generators are passed explicitly; nothing in
the package touches numpy's global RNG.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary printable parts, e.g. (corpus_seed, sample_id)."""
    digest = hashlib.sha256("/".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def rng_state_dumps(rng: np.random.Generator) -> str:
    return json.dumps(rng.bit_generator.state, sort_keys=True, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [int(v) for v in obj]
    return int(obj)


def rng_state_loads(text: str) -> np.random.Generator:
    state = json.loads(text)
    bitgen = np.random.Philox()
    bitgen.state = _restore_arrays(state)
    return np.random.Generator(bitgen)


def _restore_arrays(state: dict) -> dict:
    # Philox keeps counter/key as uint64 arrays; JSON turns them into lists.
    out = dict(state)
    inner = dict(out["state"])
    inner["counter"] = np.asarray(inner["counter"], dtype=np.uint64)
    inner["key"] = np.asarray(inner["key"], dtype=np.uint64)
    out["state"] = inner
    out["buffer"] = np.asarray(out["buffer"], dtype=np.uint64)
    return out
