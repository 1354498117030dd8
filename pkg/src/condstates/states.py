"""Density operators, conditional states and the rules that connect them.

The star product ``M * N = sqrt(N) M sqrt(N)`` (with ``N`` lifted by identity
onto the factors of ``M``) plays the role of pointwise multiplication of
probabilities. All inverses are taken on the support of the operator being
inverted.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable
from typing import Literal, Union

import numpy as np

from condstates import linalg
from condstates.errors import InvalidStateError, NotHermitianError, RegionMismatchError
from condstates.regions import CompositeRegion, LabeledOperator, identity, lift, tensor
from condstates.tolerances import get_tolerances

CausalTag = Literal["causal", "acausal"]


@dataclasses.dataclass(frozen=True, eq=False)
class DensityOperator:
    """A Hermitian, PSD, unit-trace operator on a labeled region."""

    op: LabeledOperator

    def __post_init__(self):
        tol = get_tolerances()
        m = self.op.matrix
        res = linalg.hermiticity_residual(m)
        if res > tol.herm:
            raise InvalidStateError(f"density operator on {self.op.region} is not Hermitian ({res:.3e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > tol.trace:
            raise InvalidStateError(f"density operator on {self.op.region} has trace {tr.real:.12g}")
        w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        threshold = tol.psd_threshold(float(np.max(np.abs(w))))
        if w[0] < -threshold:
            raise InvalidStateError(
                f"density operator on {self.op.region} has negative eigenvalue {w[0]:.6e}"
            )

    @classmethod
    def from_matrix(cls, region: CompositeRegion, m) -> DensityOperator:
        return cls(LabeledOperator(region, m))

    @classmethod
    def pure(cls, region: CompositeRegion, ket) -> DensityOperator:
        """``|psi><psi|`` for a normalized ket."""
        psi = np.asarray(ket, dtype=np.complex128).reshape(-1)
        return cls(LabeledOperator(region, np.outer(psi, psi.conj())))

    @property
    def matrix(self) -> linalg.Matrix:
        return self.op.matrix

    @property
    def region(self) -> CompositeRegion:
        return self.op.region

    @property
    def labels(self) -> tuple[str, ...]:
        return self.op.labels


@dataclasses.dataclass(frozen=True, eq=False)
class JointState(DensityOperator):
    """A density operator on two or more factors."""

    def __post_init__(self):
        super().__post_init__()
        if len(self.op.labels) < 2:
            raise InvalidStateError("a joint state needs at least two factors")


@dataclasses.dataclass(frozen=True, eq=False)
class ConditionalState:
    """Operator ``rho_{target|conditioned}`` on the union of both factor sets.

    Normalization (``Tr_target = 1`` on ``conditioned``, or the support
    projector ``support`` when the generating marginal was rank deficient) is
    checked by :meth:`normalization_residual`, not at construction, so that
    intermediate objects can be inspected before validation.
    """

    op: LabeledOperator
    conditioned: frozenset[str]
    target: frozenset[str]
    causal_tag: CausalTag = "acausal"
    support: LabeledOperator | None = None

    def __post_init__(self):
        object.__setattr__(self, "conditioned", frozenset(self.conditioned))
        object.__setattr__(self, "target", frozenset(self.target))
        if not self.conditioned or not self.target:
            raise RegionMismatchError("conditioned and target factor sets must be non-empty")
        if self.conditioned & self.target:
            raise RegionMismatchError("conditioned and target factor sets overlap")
        if self.conditioned | self.target != set(self.op.labels):
            raise RegionMismatchError(
                f"conditional on {sorted(self.target)}|{sorted(self.conditioned)} "
                f"does not match operator region {self.op.region}"
            )
        if self.causal_tag not in ("causal", "acausal"):
            raise InvalidStateError(f"unknown causal tag {self.causal_tag!r}")
        tol = get_tolerances().herm
        res = linalg.hermiticity_residual(self.op.matrix)
        if res > tol:
            raise NotHermitianError(res, tol)

    @property
    def matrix(self) -> linalg.Matrix:
        return self.op.matrix

    @property
    def region(self) -> CompositeRegion:
        return self.op.region

    @property
    def labels(self) -> tuple[str, ...]:
        return self.op.labels

    def expected_normalization(self) -> LabeledOperator:
        if self.support is not None:
            return self.support
        return identity(self.op.region.sub(self.conditioned))

    def normalization_residual(self) -> float:
        """``max|Tr_target(rho) - 1_conditioned|`` (support projector if set)."""
        got = self.op.partial_trace(self.target)
        want = self.expected_normalization()
        want = lift(want, got.region)
        return float(np.max(np.abs(got.matrix - want.matrix)))

    def is_normalized(self, tol: float | None = None) -> bool:
        tol = get_tolerances().recon if tol is None else tol
        return self.normalization_residual() <= tol


Operand = Union[LabeledOperator, DensityOperator, ConditionalState]


def _op(x: Operand) -> LabeledOperator:
    return x if isinstance(x, LabeledOperator) else x.op


def _sandwich(m: LabeledOperator, root: LabeledOperator) -> LabeledOperator:
    r = lift(root, m.region).matrix
    out = r @ m.matrix @ r
    # the sandwich of a Hermitian operator is Hermitian; remove rounding asymmetry
    if linalg.hermiticity_residual(m.matrix) <= get_tolerances().herm:
        out = 0.5 * (out + out.conj().T)
    return m.with_matrix(out)


def star(m: Operand, n: Operand) -> LabeledOperator:
    """Star product ``sqrt(n) m sqrt(n)``; ``n`` must be PSD and act on a subset of ``m``'s factors."""
    m, n = _op(m), _op(n)
    root = n.with_matrix(linalg.psd_sqrt(n.matrix))
    return _sandwich(m, root)


def labelset(labels: str | Iterable[str]) -> frozenset[str]:
    """A single label or an iterable of labels as a frozen set."""
    return frozenset([labels]) if isinstance(labels, str) else frozenset(labels)


def _labels_equal(a: Iterable[str], b: Iterable[str], what: str) -> None:
    if set(a) != set(b):
        raise RegionMismatchError(f"{what}: expected factors {sorted(b)}, got {sorted(a)}")


def joint_from_conditional(cond: ConditionalState, marginal: DensityOperator) -> JointState:
    """``rho_{AB} = rho_{B|A} * rho_A``."""
    _labels_equal(marginal.labels, cond.conditioned, "marginal of joint_from_conditional")
    return JointState(star(cond, marginal))


def marginalize(joint: DensityOperator | LabeledOperator, keep: str | Iterable[str]) -> DensityOperator:
    """Partial trace over every factor not in ``keep``."""
    op = _op(joint)
    keep = labelset(keep)
    if not keep:
        raise RegionMismatchError("marginalize needs a non-empty set of factors to keep")
    op.region.sub(keep)
    drop = [lab for lab in op.labels if lab not in keep]
    out = op.partial_trace(drop) if drop else op
    return DensityOperator(out)


def conditional_from_joint(
    joint: DensityOperator | LabeledOperator,
    given: str | Iterable[str],
    *,
    causal_tag: CausalTag = "acausal",
    cutoff: float | None = None,
) -> ConditionalState:
    """``rho_{B|A} = rho_{AB} * rho_A^{-1}`` with the inverse taken on ``supp(rho_A)``."""
    op = _op(joint)
    given = labelset(given)
    marginal = marginalize(op, given)
    root = marginal.op.with_matrix(linalg.psd_inv_sqrt_on_support(marginal.matrix, cutoff))
    supp = marginal.op.with_matrix(linalg.support_projector(marginal.matrix, cutoff))
    return ConditionalState(
        _sandwich(op, root),
        conditioned=given,
        target=frozenset(op.labels) - given,
        causal_tag=causal_tag,
        support=supp,
    )


def bayes_invert(
    cond: ConditionalState,
    prior: DensityOperator,
    evidence_marginal: DensityOperator,
    *,
    cutoff: float | None = None,
) -> ConditionalState:
    """``rho_{A|B} = rho_{B|A} * (rho_A (x) rho_B^{-1})``.

    ``prior`` lives on the conditioned factors of ``cond``, ``evidence_marginal``
    on its target factors. The roles are swapped in the result.
    """
    _labels_equal(prior.labels, cond.conditioned, "prior of bayes_invert")
    _labels_equal(evidence_marginal.labels, cond.target, "evidence of bayes_invert")
    prior_root = prior.op.with_matrix(linalg.psd_sqrt(prior.matrix))
    evidence_root = evidence_marginal.op.with_matrix(
        linalg.psd_inv_sqrt_on_support(evidence_marginal.matrix, cutoff)
    )
    root = tensor(prior_root, evidence_root)
    supp = evidence_marginal.op.with_matrix(linalg.support_projector(evidence_marginal.matrix, cutoff))
    return ConditionalState(
        _sandwich(cond.op, root),
        conditioned=cond.target,
        target=cond.conditioned,
        causal_tag=cond.causal_tag,
        support=supp,
    )


def propagate(cond: ConditionalState, state: DensityOperator | LabeledOperator) -> DensityOperator:
    """Belief propagation ``rho_B = Tr_A[rho_{B|A} (rho_A (x) 1_B)]``."""
    op = _op(state)
    _labels_equal(op.labels, cond.conditioned, "input of propagate")
    lifted = lift(op, cond.region)
    out = cond.op.with_matrix(cond.matrix @ lifted.matrix).partial_trace(cond.conditioned)
    m = out.matrix
    return DensityOperator(out.with_matrix(0.5 * (m + m.conj().T)))
