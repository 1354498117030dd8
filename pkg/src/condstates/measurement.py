"""POVMs, hybrid classical-quantum conditional states and outcome updates."""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from condstates import linalg
from condstates.channels import KrausChannel
from condstates.errors import InvalidStateError, RegionMismatchError, ZeroProbabilityError
from condstates.regions import CompositeRegion, LabeledOperator, RegionSpec, composite, lift
from condstates.states import ConditionalState, DensityOperator, propagate
from condstates.tolerances import get_tolerances


@dataclasses.dataclass(frozen=True, eq=False)
class Povm:
    """Labeled effects on a quantum region; PSD and summing to the identity."""

    region: RegionSpec
    elements: tuple[tuple[str, linalg.Matrix], ...]

    def __post_init__(self):
        tols = get_tolerances()
        if self.region.is_classical:
            raise RegionMismatchError(f"POVM region {self.region.label!r} must be quantum")
        elems = []
        for label, effect in self.elements:
            e = linalg.as_matrix(effect).copy()
            if e.shape[0] != self.region.dim:
                raise InvalidStateError(f"effect {label!r} has dim {e.shape[0]}, region has {self.region.dim}")
            w, _ = linalg.herm_eig(e)
            if w[0] < -tols.psd_threshold(max(float(np.max(np.abs(w))), 1.0)):
                raise InvalidStateError(f"effect {label!r} is not PSD (eigenvalue {w[0]:.3e})")
            e.flags.writeable = False
            elems.append((str(label), e))
        if not elems:
            raise InvalidStateError("a POVM needs at least one effect")
        labels = [lab for lab, _ in elems]
        if len(set(labels)) != len(labels):
            raise InvalidStateError(f"POVM outcome labels are not distinct: {labels}")
        total = sum(e for _, e in elems)
        dev = float(np.max(np.abs(total - np.eye(self.region.dim))))
        if dev > tols.recon:
            raise InvalidStateError(f"POVM effects do not sum to the identity (deviation {dev:.3e})")
        object.__setattr__(self, "elements", tuple(elems))

    @classmethod
    def from_effects(cls, region: RegionSpec, effects: Iterable[tuple[str, npt.ArrayLike]]) -> Povm:
        return cls(region, tuple((lab, linalg.as_matrix(e)) for lab, e in effects))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.elements)

    def outcome_region(self, label: str) -> RegionSpec:
        """A classical region whose preferred basis is this POVM's outcomes."""
        return RegionSpec(label, len(self.elements), "classical", self.labels)


@dataclasses.dataclass(frozen=True, eq=False)
class HybridState(ConditionalState):
    """Conditional state of a classical record given a quantum region."""

    def __post_init__(self):
        super().__post_init__()
        kinds = [self.op.region.region(lab).kind for lab in self.op.labels]
        if kinds.count("classical") != 1:
            raise RegionMismatchError("a hybrid state has exactly one classical factor")

    @property
    def classical(self) -> RegionSpec:
        return next(f for f in self.op.region.factors if f.is_classical)

    @property
    def quantum(self) -> RegionSpec:
        return next(f for f in self.op.region.factors if not f.is_classical)


def hybrid_state(p: Povm, classical: RegionSpec) -> HybridState:
    """``sum_x |x><x| (x) E_x`` in canonical factor order, conditioned on the quantum side."""
    if not classical.is_classical:
        raise RegionMismatchError(f"region {classical.label!r} must be classical")
    if classical.dim != len(p.elements) or classical.basis_labels != p.labels:
        raise RegionMismatchError(
            f"classical region {classical.label!r} basis {classical.basis_labels} "
            f"does not match POVM outcomes {p.labels}"
        )
    pair = CompositeRegion((classical, p.region))
    m = np.zeros((pair.dim, pair.dim), dtype=np.complex128)
    for x, (_, effect) in enumerate(p.elements):
        proj = np.zeros((classical.dim, classical.dim))
        proj[x, x] = 1.0
        m += np.kron(proj, effect)
    op = lift(LabeledOperator(pair, m), composite(classical, p.region))
    return HybridState(
        op,
        conditioned=frozenset({p.region.label}),
        target=frozenset({classical.label}),
        causal_tag="causal",
    )


def measurement_channel(p: Povm, classical: RegionSpec) -> KrausChannel:
    """Measure-and-record channel ``s -> sum_x Tr(E_x s) |x><x|``.

    Kraus operators are ``|x><b| sqrt(E_x)`` over outcomes ``x`` and basis
    vectors ``b``.
    """
    if classical.dim != len(p.elements):
        raise RegionMismatchError("classical region dimension must equal the number of outcomes")
    d = p.region.dim
    kraus = []
    for x, (_, effect) in enumerate(p.elements):
        root = linalg.psd_sqrt(effect)
        for b in range(d):
            k = np.zeros((classical.dim, d), dtype=np.complex128)
            k[x, :] = root[b, :]
            kraus.append(k)
    return KrausChannel(p.region, classical, tuple(kraus))


def outcome_distribution(h: ConditionalState, state: DensityOperator) -> DensityOperator:
    """Classical state ``sum_y P_y |y><y|`` with ``P_y = Tr(E_y rho)``."""
    dist = propagate(h, state)
    tol = get_tolerances().trace
    p = np.real(np.diag(dist.matrix))
    if np.any(p < -tol) or np.any(p > 1 + tol):
        raise InvalidStateError(f"outcome probabilities out of range: {p}")
    # off-diagonal entries are forced to zero by the classical factor check
    return dist


def probabilities(dist: DensityOperator) -> dict[str, float]:
    (region,) = dist.region.factors
    labels = region.basis_labels or tuple(str(i) for i in range(region.dim))
    return {lab: float(np.real(dist.matrix[i, i])) for i, lab in enumerate(labels)}


class Conditioning(NamedTuple):
    raw_block: LabeledOperator
    """``(|y><y| (x) 1) rho_{A|Y} (|y><y| (x) 1)``, classical projector retained."""
    posterior: DensityOperator
    """The quantum block normalized to unit trace."""


def condition_on_outcome(
    cond: ConditionalState,
    outcome: str,
    dist: DensityOperator,
    *,
    cutoff: float | None = None,
) -> Conditioning:
    """Select the block of ``rho_{A|Y}`` belonging to an observed outcome ``y``."""
    classical = [f for f in cond.region.factors if f.is_classical and f.label in cond.conditioned]
    if len(classical) != 1:
        raise RegionMismatchError("condition_on_outcome needs exactly one classical conditioned factor")
    (y_region,) = classical
    if dist.labels != (y_region.label,):
        raise RegionMismatchError(f"distribution is on {dist.region}, expected {y_region.label!r}")
    y = y_region.basis_index(outcome)
    cutoff = get_tolerances().support if cutoff is None else cutoff
    prob = float(np.real(dist.matrix[y, y]))
    if prob <= cutoff:
        raise ZeroProbabilityError(f"outcome {outcome!r} has probability {prob:.3e}; conditioning undefined")
    proj = np.zeros((y_region.dim, y_region.dim))
    proj[y, y] = 1.0
    p = lift(LabeledOperator(CompositeRegion((y_region,)), proj), cond.region).matrix
    raw = cond.op.with_matrix(p @ cond.matrix @ p)
    block = raw.partial_trace([y_region.label])
    tr = block.trace().real
    if tr <= cutoff:
        raise ZeroProbabilityError(f"block of outcome {outcome!r} has vanishing trace {tr:.3e}")
    m = block.matrix / tr
    return Conditioning(raw, DensityOperator(block.with_matrix(0.5 * (m + m.conj().T))))
