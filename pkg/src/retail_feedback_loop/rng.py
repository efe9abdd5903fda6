"""Deterministic random streams derived from one run seed."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

ADOPTION, RECOMMENDED, ORGANIC = 0, 1, 2


def hash_to_u64(text: str) -> int:
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big", signed=False)


def derive_run_seed(base_seed: int, eta: float, run: int) -> int:
    """Stable per-repetition seed for one (eta, run) sweep cell.

    The model is not part of the key: runs that differ only in
    the recommender share their random streams.
    """
    if run < 0:
        raise ValueError("run must be non-negative")
    eta_key = int(round(float(eta) * 1_000_000))
    return hash_to_u64(f"{base_seed}:eta:{eta_key}:run:{run}")


@dataclass(frozen=True)
class UserStepStreams:
    """Independent generators for one user's purchases at one step."""

    adoption: np.random.Generator
    recommended: np.random.Generator
    organic: np.random.Generator


@dataclass(frozen=True)
class RunStreams:
    """Named child streams of a simulation run."""

    seed: int

    def child_seed(self, name: str) -> int:
        if not name:
            raise ValueError("stream name must be non-empty")
        return hash_to_u64(f"{self.seed}:{name}")

    def training_seed(self, epoch: int) -> int:
        """Seed for the model trained at the end of ``epoch``."""
        return self.child_seed(f"train:{epoch}") % (2**32)

    def user_step(self, step: int, user: str) -> UserStepStreams:
        """Streams keyed by (run seed, step, user), independent of processing order."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(step, hash_to_u64(user)))
        adoption, recommended, organic = (np.random.default_rng(c) for c in ss.spawn(3))
        return UserStepStreams(adoption=adoption, recommended=recommended, organic=organic)
