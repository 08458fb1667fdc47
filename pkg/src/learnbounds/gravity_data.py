"""Synthetic k-body gravity dataset with exact Newtonian force labels.

Each example places one target body and k source bodies uniformly in the
unit cube, rejecting source positions closer than ``min_dist`` to the target,
draws masses uniformly from [0, mass_max], and records the first component
of the exact force (G = 1)

    F_i = sum_{j != i} m_i m_j / ||x_i - x_j||**3 * (x_j - x_i)

on the target.  Generation is a pure function of (base_seed, index, k,
params): every example gets its own generator seeded through a documented
64-bit mix, so any subset of a dataset can be reproduced independently and
parallel generation order never changes content.

File format: plain CSV, one instance per row, columns
``m_target, x_t, y_t, z_t`` then ``m_j, x_j, y_j, z_j`` per source and a
final ``label_Fx``; floats carry 17 significant digits so a round trip is
bit-exact.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SingularityError",
    "GeometryError",
    "DatasetFormatError",
    "GravityParams",
    "GravityInstance",
    "RescaleResult",
    "splitmix64",
    "mix_seed",
    "force",
    "sample_instance",
    "sample_dataset",
    "instances_to_arrays",
    "write_dataset",
    "read_dataset",
    "write_metadata",
    "rescale_instance",
    "MAX_MIN_DIST",
    "REJECTION_CAP",
]

# Rejection sampling is only guaranteed to terminate for separations well
# below the cube size; anything larger is refused up front.
MAX_MIN_DIST = 0.5
REJECTION_CAP = 10_000

_MASK64 = (1 << 64) - 1


class SingularityError(ValueError):
    """Two bodies coincide; the force law is singular there."""


class GeometryError(ValueError):
    """The requested separation cannot be realized inside the unit cube."""


class DatasetFormatError(ValueError):
    """A dataset file does not conform to the documented CSV layout."""


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit mixing function."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix_seed(base_seed: int, index: int) -> int:
    """Per-example seed: splitmix64(base XOR splitmix64(index))."""
    return splitmix64((base_seed & _MASK64) ^ splitmix64(index & _MASK64))


@dataclass(frozen=True)
class GravityParams:
    """Sampling parameters: target-source separation and mass ceiling."""

    min_dist: float = 0.1
    mass_max: float = 10.0

    def __post_init__(self) -> None:
        if self.min_dist < 0:
            raise ValueError("min_dist must be >= 0")
        if self.mass_max <= 0:
            raise ValueError("mass_max must be positive")


@dataclass(frozen=True)
class GravityInstance:
    """One k-body configuration; row 0 of ``positions`` is the target body."""

    masses: np.ndarray    # (k+1,)
    positions: np.ndarray  # (k+1, 3)
    label: float           # force on the target along the first axis
    min_dist: float

    def __post_init__(self) -> None:
        masses = np.asarray(self.masses, dtype=float)
        positions = np.asarray(self.positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ValueError("positions must have shape (k+1, 3)")
        if len(masses) != len(positions):
            raise ValueError("masses and positions disagree on the body count")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "positions", positions)

    @property
    def k(self) -> int:
        return len(self.masses) - 1

    def distances_to_target(self) -> np.ndarray:
        return np.linalg.norm(self.positions[1:] - self.positions[0], axis=1)

    @property
    def distance_ratio(self) -> float:
        """Empirical R = r_max / r_min over target-to-source distances."""
        d = self.distances_to_target()
        return float(d.max() / d.min())

    def features(self) -> np.ndarray:
        """Flat feature vector m, x, y, z per body (target first), length 4(k+1)."""
        return np.column_stack([self.masses, self.positions]).ravel()


def force(positions, masses, i: int) -> np.ndarray:
    """Exact Newtonian force on body ``i`` (G = 1)."""
    positions = np.asarray(positions, dtype=float)
    masses = np.asarray(masses, dtype=float)
    diff = np.delete(positions, i, axis=0) - positions[i]
    m_other = np.delete(masses, i)
    dist = np.linalg.norm(diff, axis=1)
    if np.any(dist == 0.0):
        j = int(np.flatnonzero(dist == 0.0)[0])
        j_orig = j if j < i else j + 1
        raise SingularityError(f"bodies {i} and {j_orig} coincide")
    return masses[i] * np.sum(m_other[:, None] * diff / dist[:, None] ** 3, axis=0)


def sample_instance(k: int, seed: int, params: GravityParams = GravityParams()) -> GravityInstance:
    """Draw one instance; deterministic given (k, seed, params).

    Draw order is fixed for reproducibility: target position, then source
    positions (each rejection-resampled until it clears ``min_dist`` from the
    target), then all k+1 masses.
    """
    if k < 1:
        raise ValueError("source count k must be >= 1")
    if params.min_dist > MAX_MIN_DIST:
        raise GeometryError(
            f"min_dist = {params.min_dist} exceeds {MAX_MIN_DIST}; rejection "
            "sampling inside the unit cube is not guaranteed to terminate"
        )
    rng = np.random.default_rng(seed)
    target = rng.uniform(0.0, 1.0, 3)
    sources = np.empty((k, 3))
    filled = 0
    rejections = 0
    while filled < k:
        cand = rng.uniform(0.0, 1.0, 3)
        if np.linalg.norm(cand - target) >= params.min_dist:
            sources[filled] = cand
            filled += 1
            rejections = 0
        else:
            rejections += 1
            if rejections >= REJECTION_CAP:
                raise GeometryError(
                    f"{REJECTION_CAP} consecutive rejections at min_dist = {params.min_dist}"
                )
    masses = rng.uniform(0.0, params.mass_max, k + 1)
    positions = np.vstack([target[None, :], sources])
    label = float(force(positions, masses, 0)[0])
    return GravityInstance(masses=masses, positions=positions, label=label, min_dist=params.min_dist)


def sample_dataset(
    k: int,
    n: int,
    base_seed: int,
    params: GravityParams = GravityParams(),
) -> list[GravityInstance]:
    """n instances, example i seeded by mix_seed(base_seed, i)."""
    return [sample_instance(k, mix_seed(base_seed, i), params) for i in range(n)]


def instances_to_arrays(instances: Sequence[GravityInstance]) -> tuple[np.ndarray, np.ndarray]:
    """Stack instances into a feature matrix (n, 4(k+1)) and label vector."""
    X = np.vstack([inst.features() for inst in instances])
    y = np.array([inst.label for inst in instances])
    return X, y


# ---------------------------------------------------------------------------
# CSV format
# ---------------------------------------------------------------------------


def _header(k: int) -> list[str]:
    cols = ["m_target", "x_t", "y_t", "z_t"]
    for j in range(1, k + 1):
        cols += [f"m_{j}", f"x_{j}", f"y_{j}", f"z_{j}"]
    cols.append("label_Fx")
    return cols


def _atomic_write(path: str, text: str) -> None:
    """Write via a sibling temp file and rename, so failures leave no partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=".csv")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_dataset(instances: Sequence[GravityInstance], path: str) -> None:
    """Write instances as CSV; all rows must share one k."""
    if instances:
        k = instances[0].k
        for idx, inst in enumerate(instances):
            if inst.k != k:
                raise ValueError(f"instance {idx} has k = {inst.k}, expected {k}")
        lines = [",".join(_header(k))]
        for inst in instances:
            row = np.append(inst.features(), inst.label)
            lines.append(",".join(f"{v:.17g}" for v in row))
        text = "\n".join(lines) + "\n"
    else:
        text = ""
    _atomic_write(path, text)


def read_dataset(path: str, min_dist: float = 0.1) -> list[GravityInstance]:
    """Read a dataset written by ``write_dataset``; an empty file is an empty list."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        return []
    n_cols = len(lines[0].split(","))
    if n_cols % 4 != 1 or n_cols < 9:
        raise DatasetFormatError(
            f"line 1: header has {n_cols} columns, expected 4(k+1)+1 for some k >= 1"
        )
    k = (n_cols - 1) // 4 - 1
    instances = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != n_cols:
            raise DatasetFormatError(
                f"line {lineno}: expected {n_cols} columns, found {len(parts)}"
            )
        try:
            vals = np.array([float(p) for p in parts])
        except ValueError as exc:
            raise DatasetFormatError(f"line {lineno}: {exc}") from None
        body = vals[:-1].reshape(k + 1, 4)
        instances.append(
            GravityInstance(
                masses=body[:, 0].copy(),
                positions=body[:, 1:].copy(),
                label=float(vals[-1]),
                min_dist=min_dist,
            )
        )
    return instances


def write_metadata(
    instances: Sequence[GravityInstance],
    path: str,
    base_seed: int,
    params: GravityParams,
) -> None:
    """JSON sidecar: counts, seed, params, and target-distance quantiles."""
    if instances:
        d = np.concatenate([inst.distances_to_target() for inst in instances])
        quantiles = {
            f"q{int(q * 100):02d}": float(np.quantile(d, q)) for q in (0.0, 0.25, 0.5, 0.75, 1.0)
        }
        k = instances[0].k
    else:
        quantiles = {}
        k = None
    doc = {
        "k": k,
        "count": len(instances),
        "seed": base_seed,
        "params": dataclasses.asdict(params),
        "target_distance_quantiles": quantiles,
    }
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Rescaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RescaleResult:
    """Rescaled instance plus the scale factor and the theory's r_max claim."""

    instance: GravityInstance
    scale: float
    r_max_sq: float
    within_theory_bound: bool  # r_max**2 <= 2/k after rescaling


def rescale_instance(instance: GravityInstance) -> RescaleResult:
    """Shrink positions so the stacked coordinate vector has norm <= 1.

    Positions are multiplied by c = min(1, 1/||stacked positions||); the
    force label transforms as label / c**2.  The result reports the
    post-rescale maximum target-to-source squared distance and whether it
    satisfies the heuristic bound 2/k used by the degree selection (checked,
    not asserted: the bound can fail for unusually spread configurations).
    """
    stacked_norm = float(np.linalg.norm(instance.positions))
    c = min(1.0, 1.0 / stacked_norm) if stacked_norm > 0 else 1.0
    if c == 1.0:
        rescaled = instance
    else:
        rescaled = GravityInstance(
            masses=instance.masses.copy(),
            positions=instance.positions * c,
            label=instance.label / c**2,
            min_dist=instance.min_dist * c,
        )
    r_max_sq = float(np.max(rescaled.distances_to_target()) ** 2)
    k = instance.k
    return RescaleResult(
        instance=rescaled,
        scale=c,
        r_max_sq=r_max_sq,
        within_theory_bound=bool(r_max_sq <= 2.0 / k),
    )
