"""Model zoo: per-model profiles, synthetic zoo generation, JSON persistence.

A zoo is an ordered list of model profiles; the order defines the index
space that binary selectors refer to.  Profiles are synthetic stand-ins for
trained networks: compute cost scales with width*depth*input_len and the
standalone validation AUC is a seeded, noisy, monotone map of model size.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ZooFormatError

MACS_PER_UNIT = 1.0          # multiply-accumulates per (width * depth * input sample)
DEFAULT_INPUT_LEN = 7500     # 30 s segment at 250 Hz
_BASE_MEMORY_MB = 40.0
_MEMORY_PER_UNIT_MB = 0.25

_PROFILE_FIELDS = ("id", "depth", "width", "macs", "memory_mb", "modality",
                   "input_len", "target_auc")


@dataclass(frozen=True)
class ModelProfile:
    """Descriptor of one deployable model."""

    id: str
    depth: int
    width: int
    macs: float
    memory_mb: float
    modality: str
    input_len: int
    target_auc: float

    def __post_init__(self):
        if self.depth < 1 or self.width < 1 or self.input_len < 1:
            raise ValueError(f"profile {self.id!r}: depth/width/input_len must be positive")
        if self.macs <= 0 or self.memory_mb <= 0:
            raise ValueError(f"profile {self.id!r}: macs and memory_mb must be positive")
        if not 0.5 < self.target_auc < 1.0:
            raise ValueError(f"profile {self.id!r}: target_auc must lie in (0.5, 1.0), "
                             f"got {self.target_auc}")


@dataclass(frozen=True)
class ModelZoo:
    """Ordered, immutable collection of model profiles."""

    profiles: tuple[ModelProfile, ...]

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        ids = [p.id for p in self.profiles]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})[0]
            raise ZooFormatError(f"duplicate profile id {dup!r}")

    @property
    def n(self) -> int:
        return len(self.profiles)

    @property
    def macs(self) -> np.ndarray:
        return np.array([p.macs for p in self.profiles])

    @property
    def target_aucs(self) -> np.ndarray:
        return np.array([p.target_auc for p in self.profiles])

    def modalities(self) -> tuple[str, ...]:
        seen = dict.fromkeys(p.modality for p in self.profiles)
        return tuple(seen)


@dataclass(frozen=True)
class Selector:
    """Binary vector marking which zoo models form an ensemble."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("selector bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def popcount(self) -> int:
        return sum(self.bits)

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    def as_array(self, dtype=np.float64) -> np.ndarray:
        return np.array(self.bits, dtype=dtype)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from_string(cls, text: str) -> "Selector":
        return cls(tuple(int(c) for c in text))

    @classmethod
    def zeros(cls, n: int) -> "Selector":
        return cls((0,) * n)

    @classmethod
    def ones(cls, n: int) -> "Selector":
        return cls((1,) * n)

    @classmethod
    def single(cls, n: int, index: int) -> "Selector":
        bits = [0] * n
        bits[index] = 1
        return cls(tuple(bits))

    @classmethod
    def from_indices(cls, n: int, indices) -> "Selector":
        bits = [0] * n
        for i in indices:
            bits[i] = 1
        return cls(tuple(bits))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Selector":
        return cls(tuple(int(b) for b in rng.integers(0, 2, n)))


def check_selector(b: Selector, zoo: ModelZoo) -> None:
    """Reject selectors whose length does not match the zoo."""
    if b.n != zoo.n:
        raise ValueError(f"selector length {b.n} does not match zoo size {zoo.n}")


def _lead_modality(lead: int) -> str:
    # Conventional Roman-numeral lead names for the first three ECG leads.
    return "ECG-" + ("I" * lead if lead <= 3 else str(lead))


def generate_zoo(leads: int, filter_grid: list[int], block_grid: list[int],
                 seed: int, input_len: int = DEFAULT_INPUT_LEN) -> ModelZoo:
    """Build a synthetic zoo over a (lead, width, depth) grid.

    Accuracy is sampled from a noisy monotone map of width*depth so larger
    models tend to be more accurate but overlap; deterministic per seed.
    """
    if leads < 1:
        raise ValueError("leads must be >= 1")
    if not filter_grid or not block_grid:
        raise ValueError("filter_grid and block_grid must be non-empty")

    cells = [(lead, w, d) for lead in range(1, leads + 1)
             for w in filter_grid for d in block_grid]
    products = np.array([w * d for _, w, d in cells], dtype=float)

    if len(cells) > 1:
        # Average ranks of width*depth, normalized to [0, 1]; ties share a rank.
        order = np.argsort(products, kind="stable")
        ranks = np.empty(len(cells))
        ranks[order] = np.arange(len(cells), dtype=float)
        for value in np.unique(products):
            mask = products == value
            ranks[mask] = ranks[mask].mean()
        rank01 = ranks / (len(cells) - 1)
    else:
        rank01 = np.full(1, 0.5)

    rng = np.random.default_rng(seed)
    noise = rng.uniform(-0.03, 0.03, len(cells))
    target = np.clip(0.70 + 0.25 * rank01 + noise, 0.51, 0.99)

    profiles = []
    for (lead, w, d), auc in zip(cells, target):
        modality = _lead_modality(lead)
        profiles.append(ModelProfile(
            id=f"{modality.lower()}-w{w}-d{d}",
            depth=d,
            width=w,
            macs=MACS_PER_UNIT * w * d * input_len,
            memory_mb=_BASE_MEMORY_MB + _MEMORY_PER_UNIT_MB * w * d,
            modality=modality,
            input_len=input_len,
            target_auc=float(auc),
        ))
    return ModelZoo(tuple(profiles))


def save_zoo(zoo: ModelZoo, path) -> None:
    """Write the zoo as a JSON array of profile objects."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([asdict(p) for p in zoo.profiles], fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_zoo(path) -> ModelZoo:
    """Read a zoo back; rejects unknown/missing fields and invariant violations."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ZooFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ZooFormatError("top level must be a JSON array of profiles")

    profiles = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ZooFormatError(f"profile {i}: expected an object")
        unknown = set(entry) - set(_PROFILE_FIELDS)
        if unknown:
            raise ZooFormatError(f"profile {i}: unknown field {sorted(unknown)[0]!r}")
        missing = set(_PROFILE_FIELDS) - set(entry)
        if missing:
            raise ZooFormatError(f"profile {i}: missing field {sorted(missing)[0]!r}")
        try:
            profiles.append(ModelProfile(**entry))
        except (TypeError, ValueError) as exc:
            raise ZooFormatError(f"profile {i}: {exc}") from exc
    return ModelZoo(tuple(profiles))
