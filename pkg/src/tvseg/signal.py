"""Grid signals on (0, 1): ingestion, generation and normalization.

A signal holds one value per cell of a uniform ``n``-cell grid over (0, 1),
so the cell width is ``1/n``.  Boundary ``k`` (``1 <= k <= n-1``) separates
cell ``k-1`` from cell ``k``.

Generators draw from :class:`SplitMix64`, a fixed 64-bit generator, so a
(spec, n) pair yields the same values on every platform:

    state <- state + 0x9E3779B97F4A7C15                 (mod 2**64)
    z <- state
    z <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9           (mod 2**64)
    z <- (z ^ (z >> 27)) * 0x94D049BB133111EB           (mod 2**64)
    output z ^ (z >> 31)

Uniform floats are ``(output >> 11) * 2**-53``.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GridSignal",
    "GeneratorSpec",
    "SignalError",
    "SplitMix64",
    "from_csv",
    "to_csv",
    "from_json",
    "to_json",
    "normalize_to_unit",
    "generate",
    "parse_generator",
]

_MASK64 = (1 << 64) - 1


class SignalError(ValueError):
    """Raised for malformed signal input or invalid generator parameters."""


@dataclass(frozen=True, eq=False)
class GridSignal:
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).reshape(-1)
        if arr.size == 0:
            raise SignalError("empty signal")
        if not np.all(np.isfinite(arr)):
            raise SignalError("signal values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, GridSignal):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash(self.values.tobytes())

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) / self.n

    def is_unit(self) -> bool:
        return bool(self.values.min() >= 0.0 and self.values.max() <= 1.0)


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood 2014)."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, bound: int) -> int:
        """Integer in [0, bound) by rejection, free of modulo bias."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % bound


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of a synthetic signal.

    ``kind`` is ``"piecewise-constant"`` (uses ``segments``, ``low``,
    ``high``) or ``"weierstrass-type"`` (uses ``a``, ``b``, ``terms``).
    """

    kind: str = "piecewise-constant"
    seed: int = 0
    segments: int = 2
    low: float = 0.0
    high: float = 1.0
    a: float = 0.5
    b: int = 3
    terms: int = 8

    def validate(self):
        if self.seed < 0:
            raise SignalError("invalid generator spec: seed must be unsigned")
        if self.kind == "piecewise-constant":
            if self.segments < 1:
                raise SignalError("invalid generator spec: zero segments")
            if not (0.0 <= self.low < self.high <= 1.0):
                raise SignalError("invalid generator spec: value range must satisfy 0 <= low < high <= 1")
        elif self.kind == "weierstrass-type":
            if not (0.0 < self.a < 1.0):
                raise SignalError("invalid generator spec: a must lie in (0, 1)")
            if self.b < 1 or int(self.b) != self.b:
                raise SignalError("invalid generator spec: b must be a positive integer")
            if self.terms < 0:
                raise SignalError("invalid generator spec: negative term count")
        else:
            raise SignalError(f"invalid generator spec: unknown kind {self.kind!r}")


def _parse_value(token: str, lineno: int) -> float:
    try:
        x = float(token)
    except ValueError:
        raise SignalError(f"parse error at line {lineno}") from None
    if not math.isfinite(x):
        raise SignalError(f"parse error at line {lineno}")
    return x


def from_csv(text) -> GridSignal:
    """Read one value per line; a leading non-numeric line is a header.

    ``text`` is a string or a text stream.  Blank lines are skipped.
    """
    if not isinstance(text, str):
        text = text.read()
    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        token = raw.strip()
        if not token:
            continue
        if not values and lineno == _first_nonblank(text) and not _looks_numeric(token):
            continue
        values.append(_parse_value(token, lineno))
    if not values:
        raise SignalError("empty signal")
    return GridSignal(np.array(values))


def _first_nonblank(text: str) -> int:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.strip():
            return lineno
    return 0


def _looks_numeric(token: str) -> bool:
    head = token[:1]
    return head.isdigit() or head in "+-." or token.lower() in ("nan", "inf")


def to_csv(f: GridSignal) -> str:
    # repr() gives the shortest string that round-trips exactly
    return "".join(f"{float(x)!r}\n" for x in f.values)


def from_json(text) -> GridSignal:
    if not isinstance(text, str):
        text = text.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SignalError(f"parse error at line {exc.lineno}") from None
    if not isinstance(obj, dict) or "values" not in obj:
        raise SignalError("parse error: expected an object with 'values'")
    values = obj["values"]
    if not isinstance(values, list) or not values:
        raise SignalError("empty signal")
    if "n" in obj and obj["n"] != len(values):
        raise SignalError("parse error: 'n' does not match number of values")
    try:
        arr = np.array([float(v) for v in values])
    except (TypeError, ValueError):
        raise SignalError("parse error: non-numeric value") from None
    return GridSignal(arr)


def to_json(f: GridSignal) -> str:
    return json.dumps({"n": f.n, "values": [float(x) for x in f.values]})


def normalize_to_unit(f: GridSignal) -> GridSignal:
    """Affinely rescale values onto [0, 1]; a constant signal maps to 0.5."""
    lo = float(f.values.min())
    hi = float(f.values.max())
    if hi == lo:
        return GridSignal(np.full(f.n, 0.5))
    if lo == 0.0 and hi == 1.0:
        return f
    out = (f.values - lo) / (hi - lo)
    return GridSignal(np.clip(out, 0.0, 1.0))


def _distinct_cuts(rng: SplitMix64, n: int, count: int) -> list[int]:
    # partial Fisher-Yates over boundaries 1..n-1
    pool = list(range(1, n))
    for i in range(count):
        j = i + rng.below(len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    return sorted(pool[:count])


def _piecewise_constant(spec: GeneratorSpec, n: int) -> np.ndarray:
    if spec.segments > n:
        raise SignalError("invalid generator spec: more segments than cells")
    rng = SplitMix64(spec.seed)
    cuts = _distinct_cuts(rng, n, spec.segments - 1)
    span = spec.high - spec.low
    levels = []
    for _ in range(spec.segments):
        v = spec.low + span * rng.uniform()
        while levels and v == levels[-1]:
            v = spec.low + span * rng.uniform()
        levels.append(v)
    out = np.empty(n)
    edges = [0, *cuts, n]
    for v, lo, hi in zip(levels, edges[:-1], edges[1:]):
        out[lo:hi] = v
    return out


def _weierstrass(spec: GeneratorSpec, n: int) -> np.ndarray:
    x = (np.arange(n) + 0.5) / n
    w = np.zeros(n)
    for k in range(spec.terms):
        w += spec.a ** k * np.cos(float(spec.b) ** k * np.pi * x)
    return normalize_to_unit(GridSignal(w)).values


def generate(spec: GeneratorSpec, n: int) -> GridSignal:
    """Deterministic synthetic signal with values in [0, 1].

    Piecewise-constant signals have exactly ``spec.segments`` runs with
    distinct adjacent values.  Weierstrass-type signals are partial sums of
    ``sum_k a**k cos(b**k pi x)`` at cell centers, rescaled into [0, 1].
    """
    if n < 1:
        raise SignalError("invalid generator spec: n must be positive")
    spec.validate()
    if spec.kind == "piecewise-constant":
        return GridSignal(_piecewise_constant(spec, n))
    return GridSignal(_weierstrass(spec, n))


_KIND_ALIASES = {
    "pwc": "piecewise-constant",
    "piecewise-constant": "piecewise-constant",
    "step": "piecewise-constant",
    "weierstrass": "weierstrass-type",
    "weierstrass-type": "weierstrass-type",
}


def parse_generator(text: str) -> GeneratorSpec:
    """Parse ``pwc:5:seed=7`` or ``weierstrass:a=0.5:b=3:terms=8``.

    For piecewise-constant signals a bare integer is the segment count.
    """
    parts = [p.strip() for p in text.split(":") if p.strip()]
    if not parts or parts[0] not in _KIND_ALIASES:
        raise SignalError(f"invalid generator spec: {text!r}")
    kind = _KIND_ALIASES[parts[0]]
    fields: dict = {"kind": kind}
    casts = {"seed": int, "segments": int, "low": float, "high": float,
             "a": float, "b": int, "terms": int}
    for token in parts[1:]:
        key, sep, value = token.partition("=")
        if not sep:
            key, value = "segments", token
        key = key.strip()
        if key not in casts:
            raise SignalError(f"invalid generator spec: unknown field {key!r}")
        try:
            fields[key] = casts[key](value)
        except ValueError:
            raise SignalError(f"invalid generator spec: bad value for {key!r}") from None
    spec = GeneratorSpec(**fields)
    spec.validate()
    return spec


def as_signal(values: Iterable[float] | Sequence[float] | GridSignal) -> GridSignal:
    if isinstance(values, GridSignal):
        return values
    return GridSignal(np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float))


def read_signal(path: str) -> GridSignal:
    with io.open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.lower().endswith(".json") or text.lstrip().startswith("{"):
        return from_json(text)
    return from_csv(text)
