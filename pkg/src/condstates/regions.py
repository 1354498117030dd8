"""Labeled Hilbert-space factors and operators that know which factors they act on."""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable, Sequence
from typing import Literal

import numpy as np
import numpy.typing as npt

from condstates import linalg
from condstates.errors import RegionMismatchError, ShapeError
from condstates.tolerances import get_tolerances

Kind = Literal["quantum", "classical"]


@dataclasses.dataclass(frozen=True)
class RegionSpec:
    """One tensor factor: a label, a dimension and a kind.

    Classical regions carry one distinct basis label per dimension; operators
    touching them must be diagonal in that preferred basis.
    """

    label: str
    dim: int
    kind: Kind = "quantum"
    basis_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.label:
            raise ShapeError("region label must be non-empty")
        if int(self.dim) < 1:
            raise ShapeError(f"region {self.label!r}: dimension must be positive")
        if self.kind not in ("quantum", "classical"):
            raise ShapeError(f"region {self.label!r}: unknown kind {self.kind!r}")
        if self.basis_labels is not None:
            object.__setattr__(self, "basis_labels", tuple(self.basis_labels))
            if len(self.basis_labels) != self.dim or len(set(self.basis_labels)) != self.dim:
                raise ShapeError(f"region {self.label!r}: need {self.dim} distinct basis labels")
        elif self.kind == "classical":
            raise ShapeError(f"classical region {self.label!r} requires basis labels")

    @property
    def is_classical(self) -> bool:
        return self.kind == "classical"

    def basis_index(self, name: str) -> int:
        if self.basis_labels is None or name not in self.basis_labels:
            raise RegionMismatchError(f"region {self.label!r} has no basis label {name!r}")
        return self.basis_labels.index(name)


@dataclasses.dataclass(frozen=True)
class CompositeRegion:
    """An ordered tensor product of distinct regions."""

    factors: tuple[RegionSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ShapeError("a composite region needs at least one factor")
        labels = [f.label for f in self.factors]
        if len(set(labels)) != len(labels):
            raise RegionMismatchError(f"duplicate labels in composite region: {labels}")

    @classmethod
    def canonical(cls, regions: Iterable[RegionSpec]) -> CompositeRegion:
        """Composite in ascending label order."""
        return cls(tuple(sorted(regions, key=lambda r: r.label)))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise RegionMismatchError(f"region {label!r} not in {self.labels}") from None

    def region(self, label: str) -> RegionSpec:
        return self.factors[self.index(label)]

    def sub(self, labels: Iterable[str]) -> CompositeRegion:
        """Sub-composite keeping this composite's relative order."""
        wanted = set(labels)
        missing = wanted - set(self.labels)
        if missing:
            raise RegionMismatchError(f"regions {sorted(missing)} not in {self.labels}")
        return CompositeRegion(tuple(f for f in self.factors if f.label in wanted))

    def without(self, labels: Iterable[str]) -> CompositeRegion:
        drop = set(labels)
        return self.sub(lab for lab in self.labels if lab not in drop)

    def union(self, other: CompositeRegion) -> CompositeRegion:
        """Canonical composite of both factor sets (shared labels must agree)."""
        merged: dict[str, RegionSpec] = {f.label: f for f in self.factors}
        for f in other.factors:
            if f.label in merged and merged[f.label] != f:
                raise RegionMismatchError(f"conflicting declarations for region {f.label!r}")
            merged[f.label] = f
        return CompositeRegion.canonical(merged.values())

    def __str__(self) -> str:
        return "".join(self.labels) if all(len(lab) == 1 for lab in self.labels) else ",".join(self.labels)


def composite(*regions: RegionSpec) -> CompositeRegion:
    return CompositeRegion.canonical(regions)


def _check_classical_blocks(region: CompositeRegion, m: linalg.Matrix) -> None:
    tol = get_tolerances().herm
    scale = max(1.0, float(np.max(np.abs(m))))
    t = m.reshape(region.dims + region.dims)
    n = len(region.dims)
    for k, f in enumerate(region.factors):
        if not f.is_classical:
            continue
        # entries with differing row/column index on a classical factor must vanish
        moved = np.moveaxis(t, (k, n + k), (0, 1)).reshape(f.dim, f.dim, -1)
        off = moved[~np.eye(f.dim, dtype=bool)]
        if off.size and float(np.max(np.abs(off))) > tol * scale:
            raise RegionMismatchError(
                f"operator is not diagonal on classical region {f.label!r} "
                f"(off-diagonal magnitude {float(np.max(np.abs(off))):.3e})"
            )


@dataclasses.dataclass(frozen=True, eq=False)
class LabeledOperator:
    """A matrix together with the composite region it acts on. Read-only."""

    region: CompositeRegion
    matrix: linalg.Matrix

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix).copy()
        if m.shape[0] != self.region.dim:
            raise ShapeError(
                f"matrix dim {m.shape[0]} does not match region {self.region} of dim {self.region.dim}"
            )
        _check_classical_blocks(self.region, m)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.region.labels

    @property
    def dims(self) -> tuple[int, ...]:
        return self.region.dims

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def with_matrix(self, m: npt.ArrayLike) -> LabeledOperator:
        return LabeledOperator(self.region, m)

    def partial_trace(self, labels: Iterable[str]) -> LabeledOperator:
        labels = set(labels)
        idx = [self.region.index(lab) for lab in labels]
        if len(idx) == len(self.labels):
            raise RegionMismatchError("cannot trace out every factor of a labeled operator")
        return LabeledOperator(self.region.without(labels), linalg.partial_trace(self.matrix, self.dims, idx))

    def partial_transpose(self, labels: str | Iterable[str]) -> LabeledOperator:
        labels = [labels] if isinstance(labels, str) else list(labels)
        idx = [self.region.index(lab) for lab in labels]
        return LabeledOperator(self.region, linalg.partial_transpose(self.matrix, self.dims, idx))

    def __matmul__(self, other: LabeledOperator) -> LabeledOperator:
        if other.region != self.region:
            raise RegionMismatchError(f"operators act on {self.region} and {other.region}")
        return LabeledOperator(self.region, self.matrix @ other.matrix)

    def __repr__(self) -> str:
        return f"LabeledOperator(region={self.region}, dim={self.region.dim})"


def identity(region: CompositeRegion | RegionSpec) -> LabeledOperator:
    if isinstance(region, RegionSpec):
        region = CompositeRegion((region,))
    return LabeledOperator(region, np.eye(region.dim))


def permute_factors(op: LabeledOperator, order: Sequence[str] | Sequence[int]) -> LabeledOperator:
    """Reorder the factors of ``op``; ``order`` lists labels (or indices) in the new order."""
    idx = [op.region.index(o) if isinstance(o, str) else int(o) for o in order]
    if sorted(idx) != list(range(len(op.labels))):
        raise RegionMismatchError(f"{list(order)} is not a permutation of {op.labels}")
    region = CompositeRegion(tuple(op.region.factors[i] for i in idx))
    return LabeledOperator(region, linalg.permute(op.matrix, op.dims, idx))


def tensor(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """``a (x) b`` on disjoint regions, returned in canonical factor order."""
    shared = set(a.labels) & set(b.labels)
    if shared:
        raise RegionMismatchError(f"tensor factors overlap on {sorted(shared)}")
    region = CompositeRegion(a.region.factors + b.region.factors)
    raw = LabeledOperator(region, linalg.kron(a.matrix, b.matrix))
    return permute_factors(raw, sorted(region.labels))


def lift(op: LabeledOperator, target: CompositeRegion) -> LabeledOperator:
    """Tensor identities onto the factors of ``target`` missing from ``op``.

    The result is laid out in ``target``'s factor order.
    """
    for f in op.region.factors:
        if f.label not in target.labels:
            raise RegionMismatchError(f"region {f.label!r} of operator not in target {target}")
        if target.region(f.label) != f:
            raise RegionMismatchError(f"region {f.label!r} declared differently in target")
    missing = [f for f in target.factors if f.label not in op.labels]
    m = op.matrix
    factors = op.region.factors
    if missing:
        extra = CompositeRegion(tuple(missing))
        m = linalg.kron(m, np.eye(extra.dim))
        factors = factors + extra.factors
    full = LabeledOperator(CompositeRegion(factors), m)
    return permute_factors(full, target.labels)


def reorder_to(op: LabeledOperator, region: CompositeRegion) -> LabeledOperator:
    if set(op.labels) != set(region.labels):
        raise RegionMismatchError(f"operator on {op.region} cannot be laid out as {region}")
    return permute_factors(op, region.labels)
