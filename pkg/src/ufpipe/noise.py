"""Phenomenological noise sampling and the logical-error-rate heuristic.

Every edge of the decoding graph fails independently with probability p.
Sampling is counter based: trial t of a run draws from a Philox stream
keyed by the 64-bit seed with counter block t, so (seed, trial_index)
fully determines the pattern and trials can be farmed out to workers in
any order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .lattice import DecodingGraph, num_edges, syndrome_indices_of_edges


@dataclass(frozen=True)
class NoiseParams:
    p: float
    seed: int = 0
    trial_index: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p < 0.5:
            raise ValueError(f"edge error probability must be in [0, 0.5), got {self.p}")
        if self.trial_index < 0:
            raise ValueError("trial_index must be non-negative")


@dataclass
class ErrorPattern:
    """Set of failed edges, stored as an ascending id array."""

    edge_ids: np.ndarray
    n_edges: int

    @property
    def weight(self) -> int:
        return int(self.edge_ids.size)

    def dense(self) -> np.ndarray:
        bits = np.zeros(self.n_edges, dtype=np.uint8)
        bits[self.edge_ids] = 1
        return bits


@dataclass
class Syndrome:
    """Defect vertices (ascending ids) over the internal vertex range."""

    defects: np.ndarray
    length: int

    @property
    def weight(self) -> int:
        return int(self.defects.size)

    def dense(self) -> np.ndarray:
        bits = np.zeros(self.length, dtype=np.uint8)
        bits[self.defects] = 1
        return bits


def trial_generator(seed: int, trial_index: int) -> Generator:
    """Independent generator for one trial; streams are 2^192 apart."""
    return Generator(Philox(key=seed, counter=[0, 0, 0, trial_index]))


def sample_error(graph: DecodingGraph, noise: NoiseParams) -> ErrorPattern:
    ids = sample_edge_ids(graph.n_edges, noise.p, noise.seed, noise.trial_index)
    return ErrorPattern(edge_ids=ids, n_edges=graph.n_edges)


def sample_edge_ids(n_edges: int, p: float, seed: int, trial_index: int) -> np.ndarray:
    if p == 0.0:
        return np.empty(0, dtype=np.int64)
    rng = trial_generator(seed, trial_index)
    return np.flatnonzero(rng.random(n_edges) < p)


class TrialSampler:
    """Fast path for trial loops: one Philox instance, counter reset per trial.

    Produces exactly the same stream as `sample_error` for the same
    (seed, trial_index); kept separate so the pure function stays simple.
    """

    def __init__(self, n_edges: int, p: float, seed: int):
        if not 0.0 <= p < 0.5:
            raise ValueError(f"edge error probability must be in [0, 0.5), got {p}")
        self.n_edges = n_edges
        self.p = p
        self.seed = seed
        self._bg = Philox(key=seed)
        self._gen = Generator(self._bg)

    def sample(self, trial_index: int) -> np.ndarray:
        if self.p == 0.0:
            return np.empty(0, dtype=np.int64)
        st = self._bg.state
        counter = st["state"]["counter"]
        counter[:] = 0
        counter[3] = trial_index
        st["buffer_pos"] = 4  # discard buffered words from the previous block
        self._bg.state = st
        return np.flatnonzero(self._gen.random(self.n_edges) < self.p)


def syndrome_of(graph: DecodingGraph, err: ErrorPattern) -> Syndrome:
    defects = syndrome_indices_of_edges(graph, err.edge_ids)
    return Syndrome(defects=defects, length=graph.n_internal)


def logical_error_rate(d: int, p: float) -> float:
    """Heuristic logical error rate 0.15 * (40 p)^((d+1)/2).

    Valid well below p = 1/40; a warning is emitted outside that regime.
    """
    if p > 1.0 / 40.0:
        warnings.warn(
            f"logical_error_rate called with p={p} outside its validity regime (p <= 1/40)",
            stacklevel=2,
        )
    return 0.15 * (40.0 * p) ** ((d + 1) / 2)


def expected_fault_count(d: int, p: float) -> float:
    """Approximate expected faults per decode, 3 d^3 p."""
    return 3.0 * d**3 * p


def expected_fault_count_exact(d: int, p: float) -> float:
    """Exact expected faults |E| p using the constructed edge count."""
    return num_edges(d) * p
