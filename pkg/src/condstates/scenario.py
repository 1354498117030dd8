"""Declarative scenarios: declared regions and values plus an ordered pipeline.

A scenario document is JSON with top-level keys ``regions``, ``states``,
``povms``, ``channels`` and ``pipeline``. Each pipeline step names an
operation, its arguments (references to earlier names, or literals) and the
name its result is bound to::

    {"op": "marginalize", "args": {"joint": "rho_AB", "keep": ["A"]}, "bind": "rho_A"}

A step may add ``"expect": "<name>"`` to require that its result equals an
earlier value within the reconstruction tolerance.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Callable
from typing import Any

import numpy as np

from condstates import channels, formats, linalg, measurement, states
from condstates.channels import ChoiState, CptpReport, KrausChannel
from condstates.errors import CondStatesError, InvalidStateError, MalformedInputError, ScenarioError
from condstates.measurement import Conditioning, Povm
from condstates.regions import CompositeRegion, LabeledOperator, RegionSpec
from condstates.states import ConditionalState, DensityOperator
from condstates.tolerances import Tolerances, get_tolerances, use_tolerances

REF, LABELS, LABEL, TEXT = "ref", "labels", "label", "text"

# op -> (required args, optional args)
OPS: dict[str, tuple[dict[str, str], dict[str, str]]] = {
    "joint_from_conditional": ({"cond": REF, "marginal": REF}, {}),
    "conditional_from_joint": ({"joint": REF, "given": LABELS}, {"causal_tag": TEXT}),
    "marginalize": ({"joint": REF, "keep": LABELS}, {}),
    "bayes_invert": ({"cond": REF, "prior": REF, "evidence": REF}, {}),
    "propagate": ({"cond": REF, "input": REF}, {}),
    "compose_states": ({"outer": REF, "inner": REF}, {}),
    "hybrid_state": ({"povm": REF, "classical": LABEL}, {}),
    "outcome_distribution": ({"hybrid": REF, "state": REF}, {}),
    "condition_on_outcome": ({"cond": REF, "outcome": TEXT, "dist": REF}, {}),
    "verify_cptp": ({"state": REF}, {}),
    "jamiolkowski": ({"channel": REF}, {}),
    "apply": ({"channel": REF, "state": REF}, {}),
}


@dataclasses.dataclass(frozen=True)
class Step:
    op: str
    args: dict[str, Any]
    bind: str
    expect: str | None = None

    def to_dict(self) -> dict:
        d = {"op": self.op, "args": dict(self.args), "bind": self.bind}
        if self.expect is not None:
            d["expect"] = self.expect
        return d


@dataclasses.dataclass(frozen=True, eq=False)
class StateDecl:
    regions: tuple[str, ...]
    matrix: linalg.Matrix
    kind: str = "density"
    conditioned: tuple[str, ...] = ()
    target: tuple[str, ...] = ()
    causal_tag: str = "acausal"


@dataclasses.dataclass(frozen=True, eq=False)
class PovmDecl:
    region: str
    elements: tuple[tuple[str, linalg.Matrix], ...]


@dataclasses.dataclass(frozen=True, eq=False)
class ChannelDecl:
    in_label: str
    out_label: str
    kraus: tuple[linalg.Matrix, ...] | None = None
    seed: int | None = None


@dataclasses.dataclass(frozen=True, eq=False)
class Scenario:
    regions: dict[str, RegionSpec]
    states: dict[str, StateDecl]
    povms: dict[str, PovmDecl]
    channels: dict[str, ChannelDecl]
    pipeline: tuple[Step, ...]

    @classmethod
    def from_dict(cls, doc: Any) -> Scenario:
        return _parse(doc)

    @classmethod
    def load(cls, path) -> Scenario:
        return _parse(formats.read_json(path))

    def to_dict(self) -> dict:
        return {
            "regions": [_region_to_dict(r) for r in self.regions.values()],
            "states": {
                name: {
                    "regions": list(d.regions),
                    "kind": d.kind,
                    **({"conditioned": list(d.conditioned), "target": list(d.target),
                        "causal_tag": d.causal_tag} if d.kind == "conditional" else {}),
                    "matrix": linalg.matrix_to_json(d.matrix),
                }
                for name, d in self.states.items()
            },
            "povms": {
                name: {"region": p.region, "elements": [[lab, linalg.matrix_to_json(e)] for lab, e in p.elements]}
                for name, p in self.povms.items()
            },
            "channels": {
                name: {"in": c.in_label, "out": c.out_label,
                       **({"seed": c.seed} if c.kraus is None else
                          {"kraus": [linalg.matrix_to_json(k) for k in c.kraus]})}
                for name, c in self.channels.items()
            },
            "pipeline": [s.to_dict() for s in self.pipeline],
        }


def _region_to_dict(r: RegionSpec) -> dict:
    d: dict[str, Any] = {"label": r.label, "dim": r.dim, "kind": r.kind}
    if r.basis_labels is not None:
        d["basis_labels"] = list(r.basis_labels)
    return d


def _str_list(value: Any, where: str) -> tuple[str, ...]:
    if isinstance(value, str):
        return (value,)
    if not isinstance(value, list) or not value or not all(isinstance(v, str) for v in value):
        raise MalformedInputError(f"{where} must be a label or a non-empty list of labels")
    return tuple(value)


def _section(doc: dict, key: str) -> dict:
    value = doc.get(key)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise MalformedInputError(f"{key!r} must be an object mapping names to declarations")
    return value


def _parse(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise MalformedInputError("scenario must be a JSON object")
    unknown = set(doc) - {"regions", "states", "povms", "channels", "pipeline"}
    if unknown:
        raise MalformedInputError(f"unknown top-level keys {sorted(unknown)}")

    regions: dict[str, RegionSpec] = {}
    for i, r in enumerate(formats.require(doc, "regions", list, "scenario")):
        where = f"regions[{i}]"
        label = formats.require(r, "label", str, where)
        if label in regions:
            raise MalformedInputError(f"region {label!r} declared twice")
        basis = r.get("basis_labels")
        if basis is not None:
            basis = _str_list(basis, f"{where}.basis_labels")
        try:
            regions[label] = RegionSpec(label, formats.require(r, "dim", int, where), r.get("kind", "quantum"), basis)
        except CondStatesError as exc:
            raise MalformedInputError(f"{where}: {exc}") from exc

    def known_regions(labels: tuple[str, ...], where: str) -> tuple[str, ...]:
        for lab in labels:
            if lab not in regions:
                raise MalformedInputError(f"{where}: undeclared region {lab!r}")
        return labels

    declared: dict[str, str] = {}

    def declare(name: str, kind: str) -> None:
        if not isinstance(name, str) or not name:
            raise MalformedInputError(f"invalid name {name!r}")
        if name in declared:
            raise MalformedInputError(f"name {name!r} declared twice")
        declared[name] = kind

    state_decls: dict[str, StateDecl] = {}
    for name, s in _section(doc, "states").items():
        where = f"state {name!r}"
        declare(name, "state")
        labels = known_regions(_str_list(formats.require(s, "regions", (list, str), where), where), where)
        dim = math.prod(regions[lab].dim for lab in labels)
        if "ket" in s:
            psi = linalg.vector_from_json(s["ket"])
            m = np.outer(psi, psi.conj())
        else:
            m = linalg.matrix_from_json(formats.require(s, "matrix", list, where))
        if m.shape[0] != dim:
            raise MalformedInputError(f"{where}: dimension {m.shape[0]} does not match regions {labels}")
        kind = s.get("kind", "density")
        if kind not in ("density", "conditional", "operator"):
            raise MalformedInputError(f"{where}: unknown kind {kind!r}")
        cond = targ = ()
        if kind == "conditional":
            cond = known_regions(_str_list(formats.require(s, "conditioned", (list, str), where), where), where)
            targ = known_regions(_str_list(formats.require(s, "target", (list, str), where), where), where)
        state_decls[name] = StateDecl(labels, m, kind, cond, targ, s.get("causal_tag", "acausal"))

    povm_decls: dict[str, PovmDecl] = {}
    for name, p in _section(doc, "povms").items():
        where = f"povm {name!r}"
        declare(name, "povm")
        (region,) = known_regions(_str_list(formats.require(p, "region", str, where), where), where)
        elements = formats.povm_elements_from_json(formats.require(p, "elements", list, where))
        povm_decls[name] = PovmDecl(region, tuple(elements))

    channel_decls: dict[str, ChannelDecl] = {}
    for name, c in _section(doc, "channels").items():
        where = f"channel {name!r}"
        declare(name, "channel")
        a = known_regions((formats.require(c, "in", str, where),), where)[0]
        b = known_regions((formats.require(c, "out", str, where),), where)[0]
        if "kraus" in c:
            kraus = tuple(linalg.matrix_from_json(k, square=False) for k in formats.require(c, "kraus", list, where))
            channel_decls[name] = ChannelDecl(a, b, kraus=kraus)
        else:
            channel_decls[name] = ChannelDecl(a, b, seed=formats.require(c, "seed", int, where))

    steps = []
    for i, st in enumerate(formats.require(doc, "pipeline", list, "scenario")):
        where = f"pipeline[{i}]"
        op = formats.require(st, "op", str, where)
        if op not in OPS:
            raise MalformedInputError(f"{where}: unknown op {op!r}")
        args = formats.require(st, "args", dict, where)
        required, optional = OPS[op]
        missing = set(required) - set(args)
        extra = set(args) - set(required) - set(optional)
        if missing or extra:
            raise MalformedInputError(
                f"{where}: {op} takes {sorted(required)} (+ optional {sorted(optional)}), got {sorted(args)}"
            )
        for key, value in args.items():
            kind = {**required, **optional}[key]
            if kind == REF:
                if not isinstance(value, str) or value not in declared:
                    raise MalformedInputError(f"{where}: {key!r} refers to undeclared name {value!r}")
            elif kind == LABELS:
                known_regions(_str_list(value, f"{where}.{key}"), where)
            elif kind == LABEL:
                if not isinstance(value, str):
                    raise MalformedInputError(f"{where}: {key!r} must be a region label")
                known_regions((value,), where)
            elif not isinstance(value, str):
                raise MalformedInputError(f"{where}: {key!r} must be a string")
        expect = st.get("expect")
        if expect is not None and expect not in declared:
            raise MalformedInputError(f"{where}: expect refers to undeclared name {expect!r}")
        bind = formats.require(st, "bind", str, where)
        declare(bind, "result")
        steps.append(Step(op, dict(args), bind, expect))

    return Scenario(regions, state_decls, povm_decls, channel_decls, tuple(steps))


# ---------------------------------------------------------------- execution


def _as_density(value: Any) -> DensityOperator:
    if isinstance(value, DensityOperator):
        return value
    if isinstance(value, LabeledOperator):
        return DensityOperator(value)
    if isinstance(value, Conditioning):
        return value.posterior
    raise InvalidStateError(f"expected a density operator, got {type(value).__name__}")


def _as_conditional(value: Any) -> ConditionalState:
    if isinstance(value, ConditionalState):
        return value
    if isinstance(value, ChoiState):
        return value.as_conditional()
    raise InvalidStateError(f"expected a conditional state, got {type(value).__name__}")


def _as_choi(value: Any) -> ChoiState:
    if isinstance(value, ChoiState):
        return value
    if isinstance(value, ConditionalState):
        return ChoiState.from_conditional(value)
    raise InvalidStateError(f"expected a channel state, got {type(value).__name__}")


def _expect_type(value: Any, cls: type) -> Any:
    if not isinstance(value, cls):
        raise InvalidStateError(f"expected {cls.__name__}, got {type(value).__name__}")
    return value


def _labels(value: Any) -> tuple[str, ...]:
    return (value,) if isinstance(value, str) else tuple(value)


def _execute(step: Step, env: dict[str, Any], regions: dict[str, RegionSpec]) -> Any:
    a = step.args
    ref: Callable[[str], Any] = lambda key: env[a[key]]
    op = step.op
    if op == "joint_from_conditional":
        return states.joint_from_conditional(_as_conditional(ref("cond")), _as_density(ref("marginal")))
    if op == "conditional_from_joint":
        return states.conditional_from_joint(
            _as_density(ref("joint")), _labels(a["given"]), causal_tag=a.get("causal_tag", "acausal")
        )
    if op == "marginalize":
        return states.marginalize(_as_density(ref("joint")), _labels(a["keep"]))
    if op == "bayes_invert":
        return states.bayes_invert(_as_conditional(ref("cond")), _as_density(ref("prior")),
                                   _as_density(ref("evidence")))
    if op == "propagate":
        return states.propagate(_as_conditional(ref("cond")), _as_density(ref("input")))
    if op == "compose_states":
        return channels.compose_states(_as_choi(ref("outer")), _as_choi(ref("inner")))
    if op == "hybrid_state":
        return measurement.hybrid_state(_expect_type(ref("povm"), Povm), regions[a["classical"]])
    if op == "outcome_distribution":
        return measurement.outcome_distribution(_as_conditional(ref("hybrid")), _as_density(ref("state")))
    if op == "condition_on_outcome":
        return measurement.condition_on_outcome(_as_conditional(ref("cond")), a["outcome"],
                                                 _as_density(ref("dist")))
    if op == "verify_cptp":
        return channels.verify_cptp(_as_choi(ref("state")))
    if op == "jamiolkowski":
        return channels.jamiolkowski(_expect_type(ref("channel"), KrausChannel))
    if op == "apply":
        return channels.apply(_expect_type(ref("channel"), KrausChannel), _as_density(ref("state")))
    raise AssertionError(op)  # unreachable: ops validated at parse time


def _materialize(sc: Scenario) -> dict[str, Any]:
    env: dict[str, Any] = {}
    for name, d in sc.states.items():
        try:
            region = CompositeRegion(tuple(sc.regions[lab] for lab in d.regions))
            op = LabeledOperator(region, d.matrix)
            if d.kind == "density":
                env[name] = states.JointState(op) if len(d.regions) > 1 else DensityOperator(op)
            elif d.kind == "conditional":
                env[name] = ConditionalState(op, frozenset(d.conditioned), frozenset(d.target), d.causal_tag)
            else:
                env[name] = op
        except CondStatesError as exc:
            raise ScenarioError(f"state {name}", exc) from exc
    for name, p in sc.povms.items():
        try:
            env[name] = Povm.from_effects(sc.regions[p.region], p.elements)
        except CondStatesError as exc:
            raise ScenarioError(f"povm {name}", exc) from exc
    for name, c in sc.channels.items():
        try:
            a, b = sc.regions[c.in_label], sc.regions[c.out_label]
            if c.kraus is None:
                env[name] = channels.random_cptp(a.dim, b.dim, c.seed, in_label=a.label, out_label=b.label)
            else:
                env[name] = KrausChannel(a, b, c.kraus)
        except CondStatesError as exc:
            raise ScenarioError(f"channel {name}", exc) from exc
    return env


def _matrix_of(value: Any) -> linalg.Matrix | None:
    if isinstance(value, (DensityOperator, ConditionalState, ChoiState)):
        return value.matrix
    if isinstance(value, LabeledOperator):
        return value.matrix
    if isinstance(value, Conditioning):
        return value.posterior.matrix
    return None


def _operator_summary(m: linalg.Matrix) -> dict:
    tr = complex(np.trace(m))
    return {
        "trace": [tr.real, tr.imag],
        "min_eigenvalue": linalg.min_eigenvalue(m),
        "hermiticity_residual": linalg.hermiticity_residual(m),
    }


def _describe(name: str, step: Step | None, value: Any) -> dict:
    entry: dict[str, Any] = {"name": name, "op": step.op if step is not None else "declare"}
    if isinstance(value, states.JointState):
        entry["type"] = "joint"
    elif isinstance(value, DensityOperator):
        entry["type"] = "density"
    elif isinstance(value, measurement.HybridState):
        entry["type"] = "hybrid"
    elif isinstance(value, ConditionalState):
        entry["type"] = "conditional"
    elif isinstance(value, ChoiState):
        entry["type"] = "channel_state"
    elif isinstance(value, LabeledOperator):
        entry["type"] = "operator"
    elif isinstance(value, Conditioning):
        entry["type"] = "conditioning"
    elif isinstance(value, CptpReport):
        entry["type"] = "cptp_report"
    elif isinstance(value, KrausChannel):
        entry["type"] = "channel"
    elif isinstance(value, Povm):
        entry["type"] = "povm"

    if isinstance(value, (DensityOperator, ConditionalState, LabeledOperator)):
        entry["regions"] = list(value.labels)
    if isinstance(value, ConditionalState):
        entry["conditioned"] = sorted(value.conditioned)
        entry["target"] = sorted(value.target)
        entry["causal_tag"] = value.causal_tag
        entry["normalization_residual"] = value.normalization_residual()
    if isinstance(value, ChoiState):
        entry["regions"] = [value.in_label, value.out_label]
        entry["convention"] = value.convention
        entry["cptp"] = channels.verify_cptp(value).to_dict()
    if isinstance(value, Conditioning):
        entry["regions"] = list(value.posterior.labels)
        entry["raw_block"] = {
            "regions": list(value.raw_block.labels),
            "matrix": linalg.matrix_to_json(value.raw_block.matrix),
        }
    if isinstance(value, CptpReport):
        entry.update(value.to_dict())
    if isinstance(value, KrausChannel):
        entry["regions"] = [value.in_region.label, value.out_region.label]
        entry["kraus_count"] = len(value.kraus)
        entry["tp_deviation"] = value.tp_deviation()
    if isinstance(value, Povm):
        entry["regions"] = [value.region.label]
        entry["outcomes"] = list(value.labels)
    m = _matrix_of(value)
    if m is not None:
        entry.update(_operator_summary(m))
        entry["matrix"] = linalg.matrix_to_json(m)
    return entry


@dataclasses.dataclass
class Report:
    results: list[dict]
    checks: list[dict]
    values: dict[str, Any] = dataclasses.field(repr=False)

    @property
    def ok(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "results": self.results, "checks": self.checks}


def run(sc: Scenario, tol: Tolerances | None = None) -> Report:
    """Execute the pipeline in order, validating every produced value.

    Raises :class:`ScenarioError` naming the first failing step or declaration.
    """
    with use_tolerances(tol):
        tols = get_tolerances()
        env = _materialize(sc)
        results = [_describe(name, None, env[name]) for name in sc.states]
        checks: list[dict] = []
        for step in sc.pipeline:
            try:
                value = _execute(step, env, sc.regions)
                if isinstance(value, ConditionalState):
                    res = value.normalization_residual()
                    checks.append({"name": step.bind, "check": "normalization", "value": res,
                                   "passed": res <= tols.recon})
                    if res > tols.recon:
                        raise InvalidStateError(
                            f"conditional state is not normalized (residual {res:.3e} > {tols.recon:.1e})"
                        )
                if step.expect is not None:
                    got, want = _matrix_of(value), _matrix_of(env[step.expect])
                    if got is None or want is None or got.shape != want.shape:
                        raise InvalidStateError(f"result cannot be compared with {step.expect!r}")
                    dev = float(np.max(np.abs(got - want)))
                    checks.append({"name": step.bind, "check": f"equals {step.expect}", "value": dev,
                                   "passed": dev <= tols.recon})
                    if dev > tols.recon:
                        raise InvalidStateError(f"result differs from {step.expect!r} by {dev:.3e}")
            except CondStatesError as exc:
                raise ScenarioError(step.bind, exc) from exc
            env[step.bind] = value
            results.append(_describe(step.bind, step, value))
        return Report(results, checks, env)


# ---------------------------------------------------------------- the cat

CAT_OUTCOMES = ("decayed", "not-decayed")


def _ket_to_json(v) -> list:
    return [[float(np.real(z)), float(np.imag(z))] for z in v]


def build_cat_scenario(povm: Povm | None = None) -> Scenario:
    """Remote measurement of a cat entangled with a Geiger counter.

    Region ``A`` (cat) has basis ``(D, A)`` for dead/alive, region ``B``
    (counter) has basis ``(up, down)`` for not-decayed/decayed, and the
    shared state ``(|D>|down> + |A>|up>)/sqrt(2)`` is laid out A-first. Bob
    measures ``B`` with a two-outcome POVM (default: projective
    ``{|down><down|, |up><up|}`` labelled decayed / not-decayed) and records
    the outcome in the classical region ``Y``.
    """
    if povm is None:
        down = np.array([[0, 0], [0, 1]], dtype=complex)
        up = np.array([[1, 0], [0, 0]], dtype=complex)
        povm = Povm.from_effects(RegionSpec("B", 2), [("decayed", down), ("not-decayed", up)])
    if povm.region.dim != 2 or len(povm.elements) != 2:
        raise InvalidStateError("the cat scenario needs a two-outcome qubit POVM")
    psi = np.zeros(4, dtype=complex)
    psi[0 * 2 + 1] = psi[1 * 2 + 0] = 1 / np.sqrt(2)  # |D,down> + |A,up>
    doc = {
        "regions": [
            {"label": "A", "dim": 2, "kind": "quantum", "basis_labels": ["D", "A"]},
            {"label": "B", "dim": 2, "kind": "quantum", "basis_labels": ["up", "down"]},
            {"label": "Y", "dim": 2, "kind": "classical", "basis_labels": list(povm.labels)},
        ],
        "states": {"rho_AB": {"regions": ["A", "B"], "kind": "density", "ket": _ket_to_json(psi)}},
        "povms": {"bob": {"region": "B",
                          "elements": [[lab, linalg.matrix_to_json(e)] for lab, e in povm.elements]}},
        "channels": {},
        "pipeline": [
            {"op": "marginalize", "args": {"joint": "rho_AB", "keep": ["A"]}, "bind": "rho_A"},
            {"op": "marginalize", "args": {"joint": "rho_AB", "keep": ["B"]}, "bind": "rho_B"},
            {"op": "conditional_from_joint", "args": {"joint": "rho_AB", "given": ["A"], "causal_tag": "acausal"},
             "bind": "rho_B_given_A"},
            {"op": "hybrid_state", "args": {"povm": "bob", "classical": "Y"}, "bind": "varrho_Y_given_B"},
            {"op": "compose_states", "args": {"outer": "varrho_Y_given_B", "inner": "rho_B_given_A"},
             "bind": "rho_Y_given_A"},
            {"op": "outcome_distribution", "args": {"hybrid": "varrho_Y_given_B", "state": "rho_B"},
             "bind": "rho_Y"},
            {"op": "bayes_invert", "args": {"cond": "rho_Y_given_A", "prior": "rho_A", "evidence": "rho_Y"},
             "bind": "rho_A_given_Y"},
            {"op": "propagate", "args": {"cond": "rho_A_given_Y", "input": "rho_Y"},
             "bind": "rho_A_recovered", "expect": "rho_A"},
        ]
        + [
            {"op": "condition_on_outcome", "args": {"cond": "rho_A_given_Y", "outcome": lab, "dist": "rho_Y"},
             "bind": f"posterior_{lab.replace('-', '_')}"}
            for lab in povm.labels
        ],
    }
    return Scenario.from_dict(doc)
