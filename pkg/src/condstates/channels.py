"""Kraus channels and their conditional-state (Jamiolkowski) images.

Two conventions for the operator of a channel ``N: L(H_in) -> L(H_out)`` on
``H_in (x) H_out`` are supported:

``"jamiolkowski"`` (canonical, stored form)
    ``rho = sum_ij |i><j| (x) N(|j><i|)``. The channel acts as
    ``N(s) = Tr_in[rho (s (x) 1_out)]`` and belief propagation reproduces it.

``"choi"``
    ``varrho = rho^{T_in} = sum_ij |i><j| (x) N(|i><j|)``, positive
    semidefinite iff ``N`` is completely positive.
"""

from __future__ import annotations

import dataclasses
from typing import Literal

import numpy as np
import numpy.typing as npt

from condstates import linalg
from condstates.errors import (
    ConventionError,
    InvalidStateError,
    NotCPTPError,
    RegionMismatchError,
    ShapeError,
)
from condstates.regions import CompositeRegion, LabeledOperator, RegionSpec, lift, reorder_to
from condstates.states import CausalTag, ConditionalState, DensityOperator
from condstates.tolerances import get_tolerances

Convention = Literal["jamiolkowski", "choi"]


@dataclasses.dataclass(frozen=True, eq=False)
class KrausChannel:
    """``N(s) = sum_k K_k s K_k^dagger`` with each ``K_k`` of shape (out_dim, in_dim)."""

    in_region: RegionSpec
    out_region: RegionSpec
    kraus: tuple[linalg.Matrix, ...]

    def __post_init__(self):
        if self.in_region.label == self.out_region.label:
            raise RegionMismatchError("input and output regions of a channel need distinct labels")
        ops = []
        for k in self.kraus:
            k = linalg.as_matrix(k, square=False).copy()
            if k.shape != (self.out_region.dim, self.in_region.dim):
                raise ShapeError(
                    f"Kraus operator has shape {k.shape}, expected "
                    f"({self.out_region.dim}, {self.in_region.dim})"
                )
            k.flags.writeable = False
            ops.append(k)
        if not ops:
            raise ShapeError("a channel needs at least one Kraus operator")
        object.__setattr__(self, "kraus", tuple(ops))
        dev = self.tp_deviation()
        if dev > get_tolerances().recon:
            raise InvalidStateError(f"Kraus operators are not trace preserving: max|sum K^dag K - 1| = {dev:.3e}")

    def tp_deviation(self) -> float:
        s = sum(k.conj().T @ k for k in self.kraus)
        return float(np.max(np.abs(s - np.eye(self.in_region.dim))))

    @property
    def region(self) -> CompositeRegion:
        """The ``(in, out)`` composite on which the channel's state lives."""
        return CompositeRegion((self.in_region, self.out_region))

    def act(self, m: npt.ArrayLike) -> linalg.Matrix:
        m = linalg.as_matrix(m)
        return sum(k @ m @ k.conj().T for k in self.kraus)

    def then(self, other: KrausChannel) -> KrausChannel:
        """``other o self`` (apply ``self`` first)."""
        if other.in_region != self.out_region:
            raise RegionMismatchError(
                f"cannot follow a channel into {self.out_region.label!r} "
                f"with one from {other.in_region.label!r}"
            )
        return KrausChannel(self.in_region, other.out_region, tuple(b @ a for b in other.kraus for a in self.kraus))


@dataclasses.dataclass(frozen=True, eq=False)
class ChoiState:
    """Operator of a channel on the composite ``(in, out)``, tagged with its convention.

    Structural checks only; physical validity is what :func:`verify_cptp`
    reports (a non-CP operator is still a legal ``ChoiState``).
    """

    op: LabeledOperator
    in_label: str
    out_label: str
    convention: Convention = "jamiolkowski"

    def __post_init__(self):
        if self.convention not in ("jamiolkowski", "choi"):
            raise ConventionError(f"unknown convention {self.convention!r}")
        if set(self.op.labels) != {self.in_label, self.out_label} or self.in_label == self.out_label:
            raise RegionMismatchError(
                f"state on {self.op.region} does not match in={self.in_label!r}, out={self.out_label!r}"
            )
        # fixed layout: input factor first
        object.__setattr__(self, "op", reorder_to(self.op, self.region))

    @property
    def region(self) -> CompositeRegion:
        r = self.op.region
        return CompositeRegion((r.region(self.in_label), r.region(self.out_label)))

    @property
    def in_region(self) -> RegionSpec:
        return self.op.region.region(self.in_label)

    @property
    def out_region(self) -> RegionSpec:
        return self.op.region.region(self.out_label)

    @property
    def matrix(self) -> linalg.Matrix:
        return self.op.matrix

    def to(self, convention: Convention) -> ChoiState:
        if convention == self.convention:
            return self
        if convention not in ("jamiolkowski", "choi"):
            raise ConventionError(f"unknown convention {convention!r}")
        # the two conventions differ by a partial transpose on the input factor
        return ChoiState(self.op.partial_transpose(self.in_label), self.in_label, self.out_label, convention)

    def jamiolkowski_matrix(self) -> linalg.Matrix:
        return self.to("jamiolkowski").matrix

    def choi_matrix(self) -> linalg.Matrix:
        return self.to("choi").matrix

    def as_conditional(self, causal_tag: CausalTag = "causal") -> ConditionalState:
        """The conditional state ``rho_{out|in}`` (jamiolkowski form)."""
        return ConditionalState(
            self.to("jamiolkowski").op,
            conditioned=frozenset({self.in_label}),
            target=frozenset({self.out_label}),
            causal_tag=causal_tag,
        )

    @classmethod
    def from_conditional(cls, cond: ConditionalState) -> ChoiState:
        if len(cond.conditioned) != 1 or len(cond.target) != 1:
            raise RegionMismatchError("only single-factor conditionals correspond to channels")
        (a,), (b,) = tuple(cond.conditioned), tuple(cond.target)
        return cls(cond.op, in_label=a, out_label=b, convention="jamiolkowski")


@dataclasses.dataclass(frozen=True)
class CptpReport:
    is_cp: bool
    is_tp: bool
    min_eigenvalue: float
    """Smallest eigenvalue of the choi-convention matrix (CP witness)."""
    tp_deviation: float
    """``max|Tr_out - 1_in|`` (TP witness)."""
    hermiticity_residual: float

    @property
    def is_cptp(self) -> bool:
        return self.is_cp and self.is_tp

    def to_dict(self) -> dict:
        return {
            "is_cp": self.is_cp,
            "is_tp": self.is_tp,
            "is_cptp": self.is_cptp,
            "min_eigenvalue": self.min_eigenvalue,
            "tp_deviation": self.tp_deviation,
            "hermiticity_residual": self.hermiticity_residual,
        }


def _operand(state: DensityOperator | LabeledOperator) -> LabeledOperator:
    return state if isinstance(state, LabeledOperator) else state.op


def _wrap(like, op: LabeledOperator):
    if isinstance(like, DensityOperator):
        m = op.matrix
        return DensityOperator(op.with_matrix(0.5 * (m + m.conj().T)))
    return op


def apply(ch: KrausChannel, state: DensityOperator | LabeledOperator):
    """``sum_k K_k s K_k^dagger``; density operators in, density operators out."""
    op = _operand(state)
    if op.labels != (ch.in_region.label,) or op.region.factors[0] != ch.in_region:
        raise RegionMismatchError(f"channel input is {ch.in_region.label!r}, state is on {op.region}")
    out = LabeledOperator(CompositeRegion((ch.out_region,)), ch.act(op.matrix))
    return _wrap(state, out)


def jamiolkowski(ch: KrausChannel) -> ChoiState:
    """``sum_ij |i><j| (x) N(|j><i|)`` on ``(in, out)``."""
    d_in = ch.in_region.dim
    blocks = np.zeros((d_in, d_in, ch.out_region.dim, ch.out_region.dim), dtype=np.complex128)
    for i in range(d_in):
        for j in range(d_in):
            unit = np.zeros((d_in, d_in), dtype=np.complex128)
            unit[j, i] = 1.0
            blocks[i, j] = ch.act(unit)
    m = blocks.transpose(0, 2, 1, 3).reshape(ch.region.dim, ch.region.dim)
    return ChoiState(LabeledOperator(ch.region, m), ch.in_region.label, ch.out_region.label, "jamiolkowski")


def channel_action_from_state(s: ChoiState, state: DensityOperator | LabeledOperator):
    """``N(s) = Tr_in[rho (s (x) 1_out)]`` for a jamiolkowski-convention state."""
    if s.convention != "jamiolkowski":
        raise ConventionError(
            "channel_action_from_state needs the jamiolkowski convention; "
            "convert explicitly with .to('jamiolkowski')"
        )
    op = _operand(state)
    if op.labels != (s.in_label,):
        raise RegionMismatchError(f"state is on {op.region}, channel input is {s.in_label!r}")
    lifted = lift(op, s.region)
    out = s.op.with_matrix(s.matrix @ lifted.matrix).partial_trace([s.in_label])
    return _wrap(state, out)


def verify_cptp(s: ChoiState, *, tol: float | None = None) -> CptpReport:
    """Complete positivity and trace preservation of the channel encoded by ``s``.

    CP: the choi-convention matrix is PSD (relative tolerance). TP:
    ``Tr_out = 1_in`` within ``tol`` (default: reconstruction tolerance).
    """
    tols = get_tolerances()
    tol = tols.recon if tol is None else tol
    choi = s.choi_matrix()
    herm = linalg.hermiticity_residual(choi)
    w = np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))
    min_eig = float(w[0])
    threshold = tols.psd_threshold(float(np.max(np.abs(w))))
    is_cp = herm <= tols.herm and min_eig >= -threshold
    out = linalg.partial_trace(s.matrix, s.region.dims, [1])
    tp_dev = float(np.max(np.abs(out - np.eye(s.in_region.dim))))
    return CptpReport(is_cp=bool(is_cp), is_tp=tp_dev <= tol, min_eigenvalue=min_eig,
                      tp_deviation=tp_dev, hermiticity_residual=herm)


def kraus_from_choi(s: ChoiState) -> KrausChannel:
    """Spectral Kraus decomposition of the choi-convention matrix.

    Each eigenpair ``(lam, v)`` with ``lam`` above the support cutoff gives
    ``K = sqrt(lam) * reshape(v)``, where ``v[i * d_out + o] = K[o, i]``.
    """
    report = verify_cptp(s)
    if not report.is_cptp:
        raise NotCPTPError(report)
    d_in, d_out = s.in_region.dim, s.out_region.dim
    w, v = linalg.herm_eig(s.choi_matrix())
    cutoff = get_tolerances().support * max(float(w[-1]), 0.0)
    kraus = []
    for lam, vec in zip(w[::-1], v.T[::-1]):
        if lam <= cutoff:
            break
        kraus.append(np.sqrt(lam) * vec.reshape(d_in, d_out).T)
    return KrausChannel(s.in_region, s.out_region, tuple(kraus))


def compose_states(s_cb: ChoiState, s_ba: ChoiState) -> ChoiState:
    """State of ``N_{C|B} o N_{B|A}`` from the states of the two factors.

    In jamiolkowski form ``rho_{C|A} = Tr_B[(1_A (x) rho_{C|B})(rho_{B|A} (x) 1_C)]``;
    the result is returned in that convention.
    """
    if s_ba.out_region != s_cb.in_region:
        raise RegionMismatchError(
            f"cannot compose: first map outputs {s_ba.out_label!r}, second takes {s_cb.in_label!r}"
        )
    if s_ba.in_label == s_cb.out_label:
        raise RegionMismatchError(f"composite would reuse label {s_ba.in_label!r} for input and output")
    a, b, c = s_ba.in_region, s_ba.out_region, s_cb.out_region
    full = CompositeRegion((a, b, c))
    left = lift(s_cb.to("jamiolkowski").op, full)
    right = lift(s_ba.to("jamiolkowski").op, full)
    out = left.with_matrix(left.matrix @ right.matrix).partial_trace([b.label])
    return ChoiState(out, a.label, c.label, "jamiolkowski")


def random_cptp(
    in_dim: int,
    out_dim: int,
    seed: int | np.random.Generator,
    *,
    rank: int | None = None,
    in_label: str = "A",
    out_label: str = "B",
) -> KrausChannel:
    """Seeded random channel built from a Haar-like isometry.

    A complex Gaussian ``(out_dim * rank) x in_dim`` matrix is orthonormalized
    (QR); its row blocks are the Kraus operators. ``rank`` defaults to
    ``in_dim * out_dim``.
    """
    if not (2 <= in_dim <= 8 and 2 <= out_dim <= 8):
        raise ShapeError("random_cptp supports dimensions 2..8")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rank = in_dim * out_dim if rank is None else rank
    g = rng.standard_normal((out_dim * rank, in_dim)) + 1j * rng.standard_normal((out_dim * rank, in_dim))
    q, r = np.linalg.qr(g)
    # fix column phases so the isometry is a deterministic function of g
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    kraus = tuple(q[k * out_dim:(k + 1) * out_dim] for k in range(rank))
    return KrausChannel(RegionSpec(in_label, in_dim), RegionSpec(out_label, out_dim), kraus)


def scaled(s: ChoiState, factor: float) -> ChoiState:
    return ChoiState(s.op.with_matrix(factor * s.matrix), s.in_label, s.out_label, s.convention)

