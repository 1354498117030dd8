import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condstates.channels import (
    ChoiState,
    KrausChannel,
    apply,
    channel_action_from_state,
    compose_states,
    jamiolkowski,
    kraus_from_choi,
    random_cptp,
    scaled,
    verify_cptp,
)
from condstates.errors import ConventionError, InvalidStateError, NotCPTPError, RegionMismatchError, ShapeError
from condstates.measurement import Povm, hybrid_state, measurement_channel
from condstates.regions import LabeledOperator, RegionSpec, composite
from condstates.states import DensityOperator, propagate
from oracles import jamiolkowski_loops, kraus_act, matrix_unit, maxdev, random_density, swap

seeds = st.integers(0, 2**32 - 1)
PAULIS = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]


def _identity_channel(A, B):
    return KrausChannel(A, B, (np.eye(2),))


def _depolarizing(A, B):
    return KrausChannel(A, B, tuple(p / 2 for p in PAULIS))


def test_identity_channel_gives_swap(A, B):
    assert maxdev(jamiolkowski(_identity_channel(A, B)).matrix, swap()) < 1e-15


def test_identity_channel_choi_is_unnormalized_bell(A, B):
    phi = np.array([1, 0, 0, 1])
    assert maxdev(jamiolkowski(_identity_channel(A, B)).choi_matrix(), np.outer(phi, phi)) < 1e-15


def test_completely_depolarizing(A, B):
    s = jamiolkowski(_depolarizing(A, B))
    assert maxdev(s.matrix, np.eye(4) / 2) < 1e-15
    assert verify_cptp(s).is_cptp


def test_kraus_channel_rejects_non_tp(A, B):
    with pytest.raises(InvalidStateError):
        KrausChannel(A, B, (0.9 * np.eye(2),))
    with pytest.raises(ShapeError):
        KrausChannel(A, B, (np.eye(3),))


def test_jamiolkowski_matches_loop_oracle():
    ch = random_cptp(3, 2, 4)
    assert maxdev(jamiolkowski(ch).matrix, jamiolkowski_loops(ch.kraus, 3, 2)) < 1e-13


def test_random_cptp_is_deterministic():
    a, b = random_cptp(3, 2, 99), random_cptp(3, 2, 99)
    assert len(a.kraus) == 6
    assert all(k.shape == (2, 3) for k in a.kraus)
    assert all(np.array_equal(x, y) for x, y in zip(a.kraus, b.kraus))
    assert a.tp_deviation() < 1e-12
    assert not np.array_equal(a.kraus[0], random_cptp(3, 2, 100).kraus[0])


def test_random_cptp_dimension_range():
    with pytest.raises(ShapeError):
        random_cptp(1, 2, 0)
    with pytest.raises(ShapeError):
        random_cptp(2, 9, 0)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, din=st.integers(2, 4), dout=st.integers(2, 4))
def test_state_reproduces_channel_action(seed, din, dout):
    ch = random_cptp(din, dout, seed)
    s = jamiolkowski(ch)
    rng = np.random.default_rng(seed)
    rho = DensityOperator.from_matrix(composite(ch.in_region), random_density(din, rng))
    got = channel_action_from_state(s, rho)
    assert maxdev(got.matrix, kraus_act(ch.kraus, rho.matrix)) < 1e-10
    # belief propagation through the conditional state is the same map
    assert maxdev(propagate(s.as_conditional(), rho).matrix, got.matrix) < 1e-10


def test_channel_action_requires_canonical_convention():
    s = jamiolkowski(random_cptp(2, 2, 1)).to("choi")
    rho = DensityOperator.from_matrix(composite(s.in_region), np.eye(2) / 2)
    with pytest.raises(ConventionError):
        channel_action_from_state(s, rho)


def test_convention_round_trip():
    s = jamiolkowski(random_cptp(2, 3, 5))
    c = s.to("choi")
    assert c.convention == "choi"
    assert np.linalg.eigvalsh(c.matrix)[0] > -1e-12
    assert maxdev(c.to("jamiolkowski").matrix, s.matrix) == 0
    with pytest.raises(ConventionError):
        s.to("transposed")


def test_choi_state_layout_is_input_first(A, B):
    m = np.kron(np.diag([0.25, 0.75]), np.eye(2))
    s = ChoiState(LabeledOperator(composite(A, B), m), in_label="B", out_label="A")
    assert s.region.labels == ("B", "A")
    assert maxdev(s.matrix, np.kron(np.eye(2), np.diag([0.25, 0.75]))) == 0


def test_verify_examples(A, B):
    ok = verify_cptp(jamiolkowski(_identity_channel(A, B)))
    assert ok.is_cp and ok.is_tp
    transpose_map = ChoiState(LabeledOperator(composite(A, B), swap()), "A", "B", "choi")
    r = verify_cptp(transpose_map)
    assert not r.is_cp and r.is_tp
    assert abs(r.min_eigenvalue + 1) < 1e-12
    r = verify_cptp(scaled(jamiolkowski(_depolarizing(A, B)), 0.9))
    assert r.is_cp and not r.is_tp
    assert abs(r.tp_deviation - 0.1) < 1e-12


def test_kraus_extraction_of_depolarizing(A, B):
    ch = kraus_from_choi(jamiolkowski(_depolarizing(A, B)))
    assert len(ch.kraus) == 4
    assert all(abs(np.linalg.norm(k) - 1 / np.sqrt(2)) < 1e-12 for k in ch.kraus)


def test_kraus_extraction_of_unitary(A, B):
    u = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
    ch = kraus_from_choi(jamiolkowski(KrausChannel(A, B, (u,))))
    (k,) = ch.kraus
    # unique up to a global phase
    phase = np.vdot(k.reshape(-1), u.reshape(-1))
    assert abs(abs(phase) - 2) < 1e-12
    assert maxdev(k * phase / abs(phase), u) < 1e-12


def test_kraus_extraction_rejects_invalid(A, B):
    with pytest.raises(NotCPTPError):
        kraus_from_choi(ChoiState(LabeledOperator(composite(A, B), swap()), "A", "B", "choi"))


def test_compose_identity_is_neutral():
    ch = random_cptp(2, 3, 8, in_label="B", out_label="C")
    ident = KrausChannel(RegionSpec("A", 2), RegionSpec("B", 2), (np.eye(2),))
    got = compose_states(jamiolkowski(ch), jamiolkowski(ident))
    assert got.region.labels == ("A", "C")
    assert maxdev(got.matrix, jamiolkowski(ch).matrix) < 1e-12


def test_compose_matches_kraus_composition():
    ba = random_cptp(2, 3, 1, in_label="A", out_label="B")
    cb = random_cptp(3, 2, 2, in_label="B", out_label="C")
    got = compose_states(jamiolkowski(cb), jamiolkowski(ba))
    assert maxdev(got.matrix, jamiolkowski(ba.then(cb)).matrix) < 1e-10


def test_compose_is_associative():
    ba = random_cptp(2, 2, 3, in_label="A", out_label="B")
    cb = random_cptp(2, 3, 4, in_label="B", out_label="C")
    dc = random_cptp(3, 2, 5, in_label="C", out_label="D")
    left = compose_states(jamiolkowski(dc), compose_states(jamiolkowski(cb), jamiolkowski(ba)))
    right = compose_states(compose_states(jamiolkowski(dc), jamiolkowski(cb)), jamiolkowski(ba))
    assert maxdev(left.matrix, right.matrix) < 1e-10


def test_compose_region_mismatch():
    ba = random_cptp(2, 2, 3, in_label="A", out_label="B")
    dc = random_cptp(2, 2, 5, in_label="C", out_label="D")
    with pytest.raises(RegionMismatchError):
        compose_states(jamiolkowski(dc), jamiolkowski(ba))


def test_apply_checks_region(A):
    ch = random_cptp(2, 2, 0, in_label="X", out_label="Z")
    with pytest.raises(RegionMismatchError):
        apply(ch, DensityOperator.from_matrix(composite(A), np.eye(2) / 2))


def test_apply_on_matrix_units():
    ch = random_cptp(3, 2, 6)
    s = jamiolkowski(ch)
    for i in range(3):
        for j in range(3):
            e = LabeledOperator(composite(ch.in_region), matrix_unit(3, i, j))
            assert maxdev(apply(ch, e).matrix, channel_action_from_state(s, e).matrix) < 1e-12


def _hybrid_matches_channel(effects):
    B = RegionSpec("B", 2)
    p = Povm.from_effects(B, effects)
    Y = p.outcome_region("Y")
    h = hybrid_state(p, Y)
    s = jamiolkowski(measurement_channel(p, Y))
    assert s.region.labels == h.region.labels == ("B", "Y")
    return maxdev(s.matrix, h.matrix)


def test_measurement_channel_state_is_hybrid_state():
    assert _hybrid_matches_channel([("0", np.diag([1.0, 0])), ("1", np.diag([0, 1.0]))]) < 1e-14


def test_measurement_channel_state_is_hybrid_state_complex_effects():
    e0 = 0.5 * (PAULIS[0] + 0.8 * PAULIS[2])
    assert _hybrid_matches_channel([("+", e0), ("-", np.eye(2) - e0)]) < 1e-14
