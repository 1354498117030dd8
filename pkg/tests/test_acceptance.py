"""End-to-end acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from condstates.channels import (
    ChoiState,
    apply,
    channel_action_from_state,
    compose_states,
    jamiolkowski,
    kraus_from_choi,
    random_cptp,
    scaled,
    verify_cptp,
)
from condstates.linalg import matrix_from_json, psd_inv_sqrt_on_support
from condstates.regions import LabeledOperator, RegionSpec, composite, permute_factors, reorder_to
from condstates.scenario import build_cat_scenario, run
from condstates.states import (
    JointState,
    bayes_invert,
    conditional_from_joint,
    joint_from_conditional,
    marginalize,
    propagate,
)
from oracles import matrix_unit, maxdev, random_density, swap

FIXTURES = Path(__file__).parent / "fixtures"
DIMS = (2, 3, 4)


def _units(region):
    d = region.dim
    return [LabeledOperator(composite(region), matrix_unit(d, i, j)) for i in range(d) for j in range(d)]


def test_criterion_1_cat_golden_pipeline(acceptance_log):
    v = run(build_cat_scenario()).values
    psi = np.array([0, 1, 1, 0]) / np.sqrt(2)
    half = np.eye(2) / 2
    ya = np.diag([1.0, 0.0, 0.0, 1.0])  # |y1><y1|(x)|D><D| + |y2><y2|(x)|A><A|
    devs = {
        "rho_A": maxdev(v["rho_A"].matrix, half),
        "rho_A^-1/2": maxdev(psd_inv_sqrt_on_support(v["rho_A"].matrix), np.sqrt(2) * np.eye(2)),
        "rho_B|A": maxdev(v["rho_B_given_A"].matrix, 2 * np.outer(psi, psi)),
        "rho_Y|A": maxdev(permute_factors(v["rho_Y_given_A"].op, ["Y", "A"]).matrix, ya),
        "rho_A|Y": maxdev(permute_factors(v["rho_A_given_Y"].op, ["Y", "A"]).matrix, ya),
        "rho_Y": maxdev(v["rho_Y"].matrix, half),
        "Tr_Y(rho_A|Y rho_Y)": maxdev(v["rho_A_recovered"].matrix, half),
        "posterior decayed": maxdev(v["posterior_decayed"].posterior.matrix, np.diag([1, 0])),
        "posterior not-decayed": maxdev(v["posterior_not_decayed"].posterior.matrix, np.diag([0, 1])),
    }
    worst = max(devs, key=devs.get)
    ok = devs[worst] < 1e-12
    acceptance_log(1, "cat golden pipeline", ok, f"worst {worst} deviation {devs[worst]:.2e} (tol 1e-12)")
    assert ok, devs


def test_criterion_2_isomorphism_oracle(acceptance_log):
    rng = np.random.default_rng(2)
    worst = 0.0
    for seed in range(200):
        din, dout = rng.choice(DIMS, size=2)
        ch = random_cptp(int(din), int(dout), seed)
        s = jamiolkowski(ch)
        # matrix units span the operator space; a random state adds a dense probe
        probes = _units(ch.in_region) + [LabeledOperator(composite(ch.in_region), random_density(int(din), rng))]
        for e in probes:
            worst = max(worst, maxdev(channel_action_from_state(s, e).matrix, apply(ch, e).matrix))
    ok = worst < 1e-10
    acceptance_log(2, "isomorphism oracle (200 channels)", ok, f"max deviation {worst:.2e} (tol 1e-10)")
    assert ok


def test_criterion_3_composition_oracle(acceptance_log):
    rng = np.random.default_rng(3)
    worst = 0.0
    for seed in range(100):
        da, db, dc = (int(d) for d in rng.choice(DIMS, size=3))
        ba = random_cptp(da, db, 2 * seed, in_label="A", out_label="B")
        cb = random_cptp(db, dc, 2 * seed + 1, in_label="B", out_label="C")
        got = compose_states(jamiolkowski(cb), jamiolkowski(ba))
        worst = max(worst, maxdev(got.matrix, jamiolkowski(ba.then(cb)).matrix))
    ok = worst < 1e-10
    acceptance_log(3, "composition oracle (100 pairs)", ok, f"max deviation {worst:.2e} (tol 1e-10)")
    assert ok


def test_criterion_4_cptp_verification(acceptance_log):
    rng = np.random.default_rng(4)
    all_pass = True
    for seed in range(100):
        din, dout = (int(d) for d in rng.choice(DIMS, size=2))
        all_pass &= verify_cptp(jamiolkowski(random_cptp(din, dout, seed))).is_cptp
    a, b = RegionSpec("A", 2), RegionSpec("B", 2)
    transpose_map = verify_cptp(ChoiState(LabeledOperator(composite(a, b), swap()), "A", "B", "choi"))
    rescaled = verify_cptp(scaled(jamiolkowski(random_cptp(3, 2, 404)), 0.9))
    ok = (
        all_pass
        and not transpose_map.is_cp
        and abs(transpose_map.min_eigenvalue + 1) < 1e-10
        and not rescaled.is_tp
        and abs(rescaled.tp_deviation - 0.1) < 1e-10
    )
    acceptance_log(
        4, "CPTP verification", ok,
        f"random all pass={all_pass}; transpose witness {transpose_map.min_eigenvalue:.12f}; "
        f"0.9-scaled tp deviation {rescaled.tp_deviation:.12f}",
    )
    assert ok


def test_criterion_5_bayes_consistency(acceptance_log):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        da, db = (int(d) for d in rng.choice((2, 3), size=2))
        j = JointState(LabeledOperator(composite(RegionSpec("A", da), RegionSpec("B", db)),
                                       random_density(da * db, rng)))
        ra, rb = marginalize(j, "A"), marginalize(j, "B")
        inv = bayes_invert(conditional_from_joint(j, "A"), ra, rb)
        back = joint_from_conditional(inv, rb)
        worst = max(worst, maxdev(reorder_to(back.op, j.region).matrix, j.matrix))
    ok = worst < 1e-10
    acceptance_log(5, "Bayes consistency (100 joints)", ok, f"max deviation {worst:.2e} (tol 1e-10)")
    assert ok


def test_criterion_6_classical_embedding(acceptance_log):
    rng = np.random.default_rng(6)
    R = RegionSpec("R", 3, "classical", ("r0", "r1", "r2"))
    S = RegionSpec("S", 4, "classical", ("s0", "s1", "s2", "s3"))
    worst = 0.0
    for _ in range(100):
        p = rng.random((3, 4)) + 0.01
        p /= p.sum()
        pr, ps = p.sum(axis=1), p.sum(axis=0)
        j = JointState(LabeledOperator(composite(R, S), np.diag(p.reshape(-1))))
        rho_r, rho_s = marginalize(j, "R"), marginalize(j, "S")
        s_given_r = conditional_from_joint(j, "R")
        r_given_s = bayes_invert(s_given_r, rho_r, rho_s)
        checks = [
            (rho_r.matrix, np.diag(pr)),
            (rho_s.matrix, np.diag(ps)),
            (s_given_r.matrix, np.diag((p / pr[:, None]).reshape(-1))),
            (r_given_s.matrix, np.diag((p / ps[None, :]).reshape(-1))),
            (joint_from_conditional(s_given_r, rho_r).matrix, j.matrix),
            (propagate(s_given_r, rho_r).matrix, np.diag(ps)),
        ]
        worst = max([worst] + [maxdev(a, b) for a, b in checks])
    ok = worst < 1e-12
    acceptance_log(6, "classical embedding (100 3x4 tables)", ok, f"max deviation {worst:.2e} (tol 1e-12)")
    assert ok


def test_criterion_7_kraus_round_trip(acceptance_log):
    rng = np.random.default_rng(7)
    worst_action = worst_tp = 0.0
    for seed in range(100):
        din, dout = (int(d) for d in rng.choice(DIMS, size=2))
        s = jamiolkowski(random_cptp(din, dout, 7000 + seed))
        ch = kraus_from_choi(s)
        worst_tp = max(worst_tp, ch.tp_deviation())
        for e in _units(s.in_region):
            worst_action = max(worst_action, maxdev(apply(ch, e).matrix, channel_action_from_state(s, e).matrix))
    ok = worst_action < 1e-10 and worst_tp < 1e-10
    acceptance_log(7, "Kraus extraction round trip (100 states)", ok,
                   f"action deviation {worst_action:.2e}, sum K^dag K deviation {worst_tp:.2e} (tol 1e-10)")
    assert ok


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "condstates", *args], capture_output=True, text=True)


def test_criterion_8_cli_contract(acceptance_log):
    res = _cli("cat", "--outcome", "decayed", "--json")
    posterior = matrix_from_json(json.loads(res.stdout)["posterior"]["matrix"])
    dev = maxdev(posterior, np.diag([1, 0]))
    codes = {name: _cli("verify-choi", str(FIXTURES / f"choi_{name}.json")).returncode
             for name in ("valid", "non_cp", "non_tp")}
    ok = res.returncode == 0 and dev < 1e-12 and codes == {"valid": 0, "non_cp": 1, "non_tp": 1}
    acceptance_log(8, "CLI contract", ok, f"posterior deviation {dev:.2e}; verify-choi exit codes {codes}")
    assert ok
