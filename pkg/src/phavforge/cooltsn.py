"""Mixed real/synthetic training math: segmental consensus, two-head loss and mini-batch plans."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from phavforge.stochastic import ParameterDomainError, Stream

SOURCES = ("real", "virtual")
BLOCKS = 8
BLOCK_SIZE = 32
REAL_PER_BLOCK = 22
SYNTHETIC_PER_BLOCK = 10
DEFAULT_WEIGHTS = {"real": REAL_PER_BLOCK / BLOCK_SIZE, "virtual": SYNTHETIC_PER_BLOCK / BLOCK_SIZE}


class LabelError(ValueError):
    """The label lies outside both heads' class sets."""


class InsufficientPoolError(ValueError):
    """A sample pool is too small to fill the mini-batch."""


def segmental_consensus(scores) -> np.ndarray:
    """Average of the K snippet score vectors (rows of ``scores``)."""
    s = np.asarray(scores, dtype=float)
    if s.ndim != 2 or s.shape[0] < 1:
        raise ValueError("scores must be a (K, classes) array with K >= 1")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    return s.mean(axis=0)


@dataclass(frozen=True)
class HeadLayout:
    """Real classes occupy ``[0, n_real)``, virtual classes ``[n_real, n_real + n_virtual)``."""

    n_real: int
    n_virtual: int

    @property
    def size(self) -> int:
        return self.n_real + self.n_virtual

    def head(self, source: str) -> slice:
        if source == "real":
            return slice(0, self.n_real)
        if source == "virtual":
            return slice(self.n_real, self.size)
        raise ValueError(f"unknown source {source!r}")


@dataclass(frozen=True)
class LossInput:
    G: np.ndarray
    label: int  # index into the concatenated score vector
    source: str
    layout: HeadLayout
    weights: dict | None = None

    def weight(self) -> float:
        return (self.weights or DEFAULT_WEIGHTS)[self.source]

    def check(self) -> slice:
        if len(self.G) != self.layout.size:
            raise ValueError(f"G has {len(self.G)} entries, layout expects {self.layout.size}")
        head = self.layout.head(self.source)
        if not head.start <= self.label < head.stop:
            raise LabelError(f"label {self.label} lies outside the {self.source} classes "
                             f"[{head.start}, {head.stop})")
        w = self.weights or DEFAULT_WEIGHTS
        if not math.isclose(w["real"] + w["virtual"], 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError("source weights must sum to 1")
        return head


def _log_softmax(x: np.ndarray) -> np.ndarray:
    m = x.max()
    return x - (m + math.log(np.exp(x - m).sum()))


def multitask_loss(inp: LossInput) -> float:
    """Weighted cross-entropy on the label's own head; the other head contributes nothing."""
    head = inp.check()
    g = np.asarray(inp.G, dtype=float)[head]
    return -inp.weight() * float(_log_softmax(g)[inp.label - head.start])


def multitask_loss_gradient(inp: LossInput) -> np.ndarray:
    head = inp.check()
    g = np.asarray(inp.G, dtype=float)
    grad = np.zeros_like(g)
    p = np.exp(_log_softmax(g[head]))
    p[inp.label - head.start] -= 1.0
    grad[head] = inp.weight() * p
    return grad


# -- mini-batches -------------------------------------------------------------------


@dataclass(frozen=True)
class MiniBatchPlan:
    blocks: tuple  # each block: (real refs, synthetic refs)

    def composition(self) -> list[tuple[int, int]]:
        return [(len(r), len(s)) for r, s in self.blocks]

    def all_refs(self) -> list:
        return [x for r, s in self.blocks for x in (*r, *s)]


def build_minibatch_plan(rng: Stream, real_pool, synthetic_pool, blocks: int = BLOCKS,
                         real_per_block: int = REAL_PER_BLOCK,
                         synthetic_per_block: int = SYNTHETIC_PER_BLOCK) -> MiniBatchPlan:
    """Blocks of ``real_per_block`` real and ``synthetic_per_block`` synthetic refs, no repeats in the batch."""
    need_r, need_s = blocks * real_per_block, blocks * synthetic_per_block
    if len(real_pool) < need_r:
        raise InsufficientPoolError(f"real pool has {len(real_pool)} samples, the batch needs {need_r}")
    if len(synthetic_pool) < need_s:
        raise InsufficientPoolError(f"synthetic pool has {len(synthetic_pool)} samples, the batch needs {need_s}")
    try:
        real = rng.sample_without_replacement(real_pool, need_r)
        synth = rng.sample_without_replacement(synthetic_pool, need_s)
    except ParameterDomainError as exc:
        raise InsufficientPoolError(str(exc)) from None
    out = tuple(
        (tuple(real[i * real_per_block:(i + 1) * real_per_block]),
         tuple(synth[i * synthetic_per_block:(i + 1) * synthetic_per_block]))
        for i in range(blocks)
    )
    return MiniBatchPlan(out)


# -- CSV exchange -----------------------------------------------------------------


def read_scores_csv(path) -> np.ndarray:
    """Snippet scores, one row per snippet, no header."""
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_loss_csv(rows, path) -> None:
    """``rows`` of (loss, gradient vector); one line per input."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for loss, grad in rows:
            w.writerow([repr(float(loss))] + [repr(float(x)) for x in grad])
