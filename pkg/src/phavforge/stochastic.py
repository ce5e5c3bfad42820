"""Seedable random substreams and the four distribution families of the generator.

Every random quantity in a recipe is drawn from a :class:`Stream` obtained from a
:class:`SeedPath`. A path is a master seed plus an ordered list of
``(label, index)`` pairs; the pair list is hashed into a 128-bit Philox key, so
each path addresses its own counter-based stream and the values drawn for one
recipe never depend on how many other recipes were sampled before it, or on
which worker sampled them.
"""

from __future__ import annotations

import bisect
import hashlib
import math
import struct
import threading
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from phavforge import _core

__all__ = [
    "ParameterDomainError",
    "SeedPath",
    "Stream",
    "TriangularParams",
    "CategoricalParams",
    "BernoulliParam",
    "triangular_pdf",
    "triangular_cdf",
    "triangular_icdf",
    "triangular_sample",
    "triangular_sample_many",
    "triangular_sample_wrapped",
    "categorical_sample",
    "bernoulli_sample",
    "uniform_sample",
]

_BUFFER = 64
# Philox emits four 64-bit words per counter step; one double consumes one word
_BLOCK_COUNTER = _BUFFER // 4
_MASK64 = (1 << 64) - 1
_local = threading.local()


def _shared_generator() -> np.random.Generator:
    gen = getattr(_local, "gen", None)
    if gen is None:
        gen = _local.gen = np.random.Generator(np.random.Philox(key=0))
    return gen


class ParameterDomainError(ValueError):
    """A distribution was given parameters outside its domain."""


@dataclass(frozen=True)
class SeedPath:
    master_seed: int
    path: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError(f"master_seed must fit in 64 bits, got {self.master_seed}")
        object.__setattr__(self, "path", tuple((str(l), int(i)) for l, i in self.path))

    def child(self, label: str, index: int = 0) -> SeedPath:
        return SeedPath(self.master_seed, self.path + ((label, index),))

    def key(self) -> int:
        h = hashlib.blake2b(digest_size=16, person=b"phavforge-path")
        h.update(struct.pack("<Q", self.master_seed))
        for label, index in self.path:
            raw = label.encode("utf-8")
            h.update(struct.pack("<I", len(raw)))
            h.update(raw)
            h.update(struct.pack("<q", index))
        return int.from_bytes(h.digest(), "little")

    def stream(self) -> Stream:
        return Stream(self)

    def to_list(self) -> list:
        return [self.master_seed, [[l, i] for l, i in self.path]]

    @classmethod
    def from_list(cls, data) -> SeedPath:
        seed, path = data
        return cls(int(seed), tuple((str(l), int(i)) for l, i in path))

    def __str__(self):
        parts = "/".join(f"{l}:{i}" for l, i in self.path)
        return f"{self.master_seed}/{parts}" if parts else str(self.master_seed)


class Stream:
    """Buffered uniform source over a Philox counter-based generator.

    The stream's values are those of a fresh ``Philox(key)`` generator. They are
    fetched in 64-value blocks by re-keying one shared per-thread generator at
    the block's counter, which is much cheaper than building a generator per
    stream. Values are consumed strictly in order, so the sequence returned by
    any mix of :meth:`uniform` and :meth:`uniforms` calls is the same.
    """

    __slots__ = ("seed_path", "_key", "_block", "_buf", "_pos")

    def __init__(self, seed_path: SeedPath):
        self.seed_path = seed_path
        k = seed_path.key()
        self._key = np.array([k & _MASK64, k >> 64], dtype=np.uint64)
        self._block = 0
        self._buf: list[float] = []
        self._pos = 0

    def _draw(self, n_blocks: int) -> np.ndarray:
        gen = _shared_generator()
        gen.bit_generator.state = {
            "bit_generator": "Philox",
            "state": {"counter": np.array([self._block * _BLOCK_COUNTER, 0, 0, 0], dtype=np.uint64),
                      "key": self._key},
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        self._block += n_blocks
        return gen.random(n_blocks * _BUFFER)

    def child(self, label: str, index: int = 0) -> Stream:
        return Stream(self.seed_path.child(label, index))

    def uniform(self) -> float:
        """One draw from U[0, 1)."""
        if self._pos == len(self._buf):
            self._buf = self._draw(1).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def uniforms(self, n: int) -> np.ndarray:
        out = np.empty(n)
        head = min(n, len(self._buf) - self._pos)
        if head:
            out[:head] = self._buf[self._pos:self._pos + head]
            self._pos += head
        rest = n - head
        if rest:
            fresh = self._draw(-(-rest // _BUFFER))
            out[head:] = fresh[:rest]
            # the unused tail of the last block stays buffered
            self._buf = fresh[rest:].tolist()
            self._pos = 0
        return out

    def between(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def integer(self, n: int) -> int:
        """Uniform integer in ``range(n)``."""
        if n <= 0:
            raise ParameterDomainError("integer() needs a non-empty range")
        return min(int(self.uniform() * n), n - 1)

    def choice(self, items: Sequence):
        if not items:
            raise ParameterDomainError("choice() from an empty sequence")
        return items[self.integer(len(items))]

    def coin(self, p: float = 0.5) -> bool:
        return self.uniform() < p

    def sample_without_replacement(self, items: Sequence, k: int) -> list:
        """Partial Fisher-Yates; order of the result is the draw order."""
        if k > len(items):
            raise ParameterDomainError(f"cannot draw {k} items from {len(items)}")
        pool = list(items)
        n = len(pool)
        for i in range(k):
            j = i + self.integer(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def unit_vector(self) -> tuple[float, float, float]:
        z = 2.0 * self.uniform() - 1.0
        phi = 2.0 * math.pi * self.uniform()
        r = math.sqrt(max(0.0, 1.0 - z * z))
        return (r * math.cos(phi), r * math.sin(phi), z)


# -- parameter types ---------------------------------------------------------


@dataclass(frozen=True)
class TriangularParams:
    a: float
    b: float
    c: float

    def check(self) -> TriangularParams:
        if not (math.isfinite(self.a) and math.isfinite(self.b) and math.isfinite(self.c)):
            raise ParameterDomainError(f"non-finite triangular parameters {self}")
        if self.a > self.c or self.c > self.b:
            raise ParameterDomainError(
                f"triangular parameters need a <= c <= b, got a={self.a}, b={self.b}, c={self.c}"
            )
        return self

    @property
    def mean(self) -> float:
        return (self.a + self.b + self.c) / 3.0


@dataclass(frozen=True)
class CategoricalParams:
    labels: tuple
    weights: tuple
    _cumulative: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        weights = tuple(float(w) for w in self.weights)
        if len(labels) != len(weights):
            raise ParameterDomainError("labels and weights differ in length")
        if len(set(labels)) != len(labels):
            raise ParameterDomainError(f"duplicate labels in {labels}")
        if any(not math.isfinite(w) or w < 0 for w in weights):
            raise ParameterDomainError(f"weights must be finite and non-negative: {weights}")
        if not any(w > 0 for w in weights):
            raise ParameterDomainError(f"all weights are zero for labels {labels}")
        cum, acc = [], 0.0
        for w in weights:
            acc += w
            cum.append(acc)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_cumulative", tuple(cum))

    @classmethod
    def from_mapping(cls, mapping: dict) -> CategoricalParams:
        return cls(tuple(mapping), tuple(mapping.values()))

    @classmethod
    def uniform(cls, labels: Sequence[Hashable]) -> CategoricalParams:
        return cls(tuple(labels), (1.0,) * len(labels))

    @property
    def total(self) -> float:
        return self._cumulative[-1]

    def probability(self, label) -> float:
        try:
            return self.weights[self.labels.index(label)] / self.total
        except ValueError:
            return 0.0

    def probabilities(self) -> dict:
        return {l: w / self.total for l, w in zip(self.labels, self.weights)}

    def support(self) -> tuple:
        return tuple(l for l, w in zip(self.labels, self.weights) if w > 0)

    def to_mapping(self) -> dict:
        return dict(zip(self.labels, self.weights))


@dataclass(frozen=True)
class BernoulliParam:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ParameterDomainError(f"Bernoulli p must lie in [0, 1], got {self.p}")


# -- triangular ----------------------------------------------------------------


def triangular_pdf(x: float, params: TriangularParams) -> float:
    a, b, c = params.check().a, params.b, params.c
    if x < a or x > b:
        return 0.0
    if a == b:
        return math.inf
    if x == c:
        return 2.0 / (b - a)
    if x < c:
        return 2.0 * (x - a) / ((b - a) * (c - a))
    return 2.0 * (b - x) / ((b - a) * (b - c))


def triangular_cdf(x: float, params: TriangularParams) -> float:
    a, b, c = params.check().a, params.b, params.c
    if x < a:
        return 0.0
    if x >= b:
        return 1.0
    if x < c:
        return (x - a) ** 2 / ((b - a) * (c - a))
    if x == c:
        return (c - a) / (b - a)
    return 1.0 - (b - x) ** 2 / ((b - a) * (b - c))


def triangular_icdf(u: float, params: TriangularParams) -> float:
    """Inverse CDF for ``u`` in [0, 1]; the compiled kernel uses the same expression."""
    a, b, c = params.a, params.b, params.c
    if b == a:
        return a
    if u * (b - a) < c - a:
        return a + math.sqrt(u * (b - a) * (c - a))
    return b - math.sqrt((1.0 - u) * (b - a) * (b - c))


def triangular_sample(rng: Stream, params: TriangularParams) -> float:
    params.check()
    return triangular_icdf(rng.uniform(), params)


def triangular_sample_many(rng: Stream, params: TriangularParams, n: int) -> np.ndarray:
    params.check()
    u = rng.uniforms(n)
    return _core.triangular_icdf(u, params.a, params.b, params.c)


def _unwrap(params: TriangularParams, modulus: float) -> TriangularParams:
    if params.a <= params.b:
        return params
    c = params.c + modulus if params.c < params.a else params.c
    return TriangularParams(params.a, params.b + modulus, c)


def triangular_sample_wrapped(rng: Stream, params: TriangularParams, modulus: float) -> float:
    """Triangular draw on a circular domain such as clock hours.

    ``a > b`` means the support crosses ``modulus`` (e.g. 20h to 7h). The draw is
    made on ``[a, b + modulus]`` and reduced back into ``[0, modulus)``.
    """
    if modulus <= 0:
        raise ParameterDomainError(f"modulus must be positive, got {modulus}")
    shifted = _unwrap(params, modulus).check()
    if params.a <= params.b:
        return triangular_icdf(rng.uniform(), shifted)
    return math.fmod(triangular_icdf(rng.uniform(), shifted), modulus)


def in_wrapped_support(x: float, params: TriangularParams, modulus: float) -> bool:
    if params.a <= params.b:
        return params.a <= x <= params.b
    return params.a <= x < modulus or 0.0 <= x <= params.b


# -- categorical / Bernoulli / uniform -------------------------------------------


def categorical_sample(rng: Stream, params: CategoricalParams):
    r = rng.uniform() * params.total
    i = bisect.bisect_right(params._cumulative, r)
    # guards r rounding onto the final edge; zero-weight tails are skipped
    while i >= len(params.labels) or params.weights[i] == 0.0:
        i -= 1
    return params.labels[i]


def bernoulli_sample(rng: Stream, param: BernoulliParam) -> bool:
    return rng.uniform() < param.p


def uniform_sample(rng: Stream, lo: float, hi: float) -> float:
    if not lo <= hi:
        raise ParameterDomainError(f"uniform needs lo <= hi, got [{lo}, {hi}]")
    return rng.between(lo, hi)
