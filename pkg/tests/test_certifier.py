import random
from dataclasses import replace
from fractions import Fraction as F

import pytest

from slflab.assignment import EMPTY_GRAPH, graph, prefix_expansion
from slflab.certifier import (
    Certificate,
    CounterexampleError,
    check_t_equivalence,
    compute_work_split,
    create_valid_assignment,
    move_jobs,
    update_valid_assignment,
    verify_certificate,
    _sched,
)
from slflab.core import Instance, Job, ReleaseTag
from .helpers import random_instance, staggered_instance, toy_instance


def test_move_jobs():
    inst = Instance(
        F(1, 2),
        (
            Job(1, ReleaseTag(F(1)), F(2)),
            Job(2, ReleaseTag(F(2)), F(2)),
            Job(3, ReleaseTag(F(3)), F(2)),
        ),
    )
    assert move_jobs(inst, F(4), F(5)) == inst
    out = move_jobs(inst, F(0), F(2))
    tags = {j.id: j.release for j in out.jobs}
    assert tags[1] == ReleaseTag(F(0), 1)
    assert tags[2] == ReleaseTag(F(0), 2)
    assert tags[3] == ReleaseTag(F(3), 0)
    # jobs already at the target's plus-epochs are not re-moved
    again = move_jobs(out, F(0), F(2))
    assert again == out
    with pytest.raises(ValueError):
        move_jobs(inst, F(3), F(2))


def test_toy_work_split():
    inst = toy_instance()
    ws = compute_work_split(inst, F(0), F(9), {1, 2, 3, 4, 5, 6})
    assert ws.gamma == F(3, 2)
    assert [ws.delta[i] for i in range(1, 7)] == [
        F(0), F(0), F(3, 2), F(3, 2), F(2), F(1)
    ]
    assert [ws.tau[i] for i in range(1, 7)] == [
        F(3, 2), F(3, 2), F(0), F(0), F(0), F(0)
    ]
    assert [ws.tau_star[i] for i in range(1, 7)] == [
        F(0), F(0), F(3, 2), F(3, 2), F(0), F(0)
    ]
    assert ws.nu == 0 and ws.nu_star == 0
    assert ws.O_plus == {1, 2} and ws.A_plus == {3, 4} and ws.D_ell == {5, 6}
    assert ws.last_opt_touched == 4


def test_work_split_degenerate_window():
    inst = toy_instance()
    ws = compute_work_split(inst, F(0), F(0), {1, 2, 3, 4, 5, 6})
    assert all(v == 0 for v in ws.delta.values())
    assert ws.nu == 0 and ws.nu_star == 0


def test_work_split_fact_identity_random():
    rng = random.Random(40)
    done = 0
    for _ in range(200):
        eps = F(rng.randint(1, 9), 10)
        inst = random_instance(rng, eps, rng.randint(2, 8))
        first = min(j.release.time for j in inst.jobs)
        batch = {j.id for j in inst.jobs if j.release.time == first}
        sched = _sched(inst, "slf")
        leader = min(batch, key=lambda i: (-inst.job(i).size, i))
        ell = None
        for seg in sched.segments:
            if leader in seg.rates:
                ell = seg.end
                break
        if ell is None or any(first < j.release.time < ell for j in inst.jobs):
            continue
        try:
            ws = compute_work_split(inst, first, ell, batch)
        except CounterexampleError:
            continue
        window = ell - first
        assert window == ws.delta_total + ws.tau_total + ws.nu
        assert window == ws.delta_total + ws.tau_star_total + ws.nu_star
        done += 1
    assert done > 50


def test_update_reproduces_worked_figure():
    inst = toy_instance()
    out = update_valid_assignment(inst, {1, 2, 3, 4, 5, 6}, F(0), F(9), EMPTY_GRAPH)
    assert dict(out.weights) == {
        (1, 1): F(7, 2),
        (2, 2): F(5, 2),
        (3, 1): F(3, 2),
        (4, 2): F(3, 2),
    }
    assert prefix_expansion(out) == 2


def test_update_degenerate_batch():
    # the batch is completed by both schedulers before ell
    inst = Instance(
        F(1, 2),
        (Job(1, ReleaseTag(F(0)), F(1)), Job(2, ReleaseTag(F(2)), F(4))),
    )
    out = update_valid_assignment(inst, {1}, F(0), F(1), EMPTY_GRAPH)
    assert out.is_empty()


def test_create_toy_certificate():
    inst = toy_instance()
    cert = create_valid_assignment(inst, F(9))
    assert cert.assignment.valid and cert.assignment.phi == 2
    rep = verify_certificate(cert)
    assert rep.passed, rep.checks


def test_create_trivial_cases():
    one = Instance(F(1, 2), (Job(1, ReleaseTag(F(0)), F(4)),))
    cert = create_valid_assignment(one, F(2))
    assert cert.assignment.phi == 1
    assert verify_certificate(cert).passed
    # before anything is released
    cert0 = create_valid_assignment(one, F(0))
    assert verify_certificate(cert0).passed
    # eps = 1 short-circuits to the identity assignment
    clair = Instance(F(1), (Job(1, ReleaseTag(F(0)), F(4)), Job(2, ReleaseTag(F(1)), F(1))))
    cert1 = create_valid_assignment(clair, F(2))
    assert cert1.transcript[0].case == "identity"
    assert cert1.assignment.phi <= 1
    assert verify_certificate(cert1).passed


def test_create_staggered_instance_moves_batch():
    inst = staggered_instance()
    cert = create_valid_assignment(inst, F(23))
    assert verify_certificate(cert).passed
    moves = [r for r in cert.transcript if r.case == "move"]
    assert moves and moves[0].details["jobs"] == [3, 4]
    tags = {j.id: j.release for j in cert.transformed.jobs}
    assert tags[3].time == F(0) and tags[3].epoch > 0
    assert tags[4].time == F(0) and tags[4].epoch > 0


def test_equivalence_checks():
    inst = staggered_instance()
    assert check_t_equivalence(inst, inst, F(7))
    # the early-arriving move at the leader-touch time keeps equivalence
    moved = move_jobs(inst, F(0), F(5))
    assert check_t_equivalence(inst, moved, F(11)) # leader still unknown there
    # moving a release past a time where the batch was already absorbed into
    # a known run generally breaks equivalence: negative control
    bad = move_jobs(
        Instance(
            F(1, 2),
            (
                Job(1, ReleaseTag(F(0)), F(2)),
                Job(2, ReleaseTag(F(3)), F(4)),
            ),
        ),
        F(0),
        F(3),
    )
    orig = Instance(
        F(1, 2),
        (Job(1, ReleaseTag(F(0)), F(2)), Job(2, ReleaseTag(F(3)), F(4))),
    )
    assert not check_t_equivalence(orig, bad, F(3))


def test_tampered_certificate_fails():
    inst = toy_instance()
    cert = create_valid_assignment(inst, F(9))
    h = cert.assignment.graph
    (edge, w), *_ = sorted(h.weights.items())
    tampered = graph(h.left, h.right, {**h.weights, edge: w + F(1, 7)})
    bad = Certificate(
        cert.original,
        cert.transformed,
        cert.target_time,
        replace(cert.assignment, graph=tampered),
        cert.transcript,
    )
    rep = verify_certificate(bad)
    assert not rep.passed and not rep.checks["marginals"]


def test_certificates_random_quick():
    rng = random.Random(41)
    for _ in range(25):
        eps = rng.choice([F(1, 4), F(1, 3), F(1, 2), F(2, 3), F(1)])
        inst = random_instance(rng, eps, rng.randint(1, 7))
        times = sorted(
            set(_sched(inst, "slf").boundaries())
            | set(_sched(inst, "srpt").boundaries())
        )
        for t in times:
            cert = create_valid_assignment(inst, t)
            assert verify_certificate(cert).passed
            # every move happens at most once per job
            moved = [
                i for r in cert.transcript if r.case == "move" for i in r.details["jobs"]
            ]
            assert len(moved) == len(set(moved))


def test_certificate_json_roundtrip():
    import json

    cert = create_valid_assignment(toy_instance(), F(9))
    doc = json.loads(cert.to_json_str())
    assert doc["phi"] == "2"
    assert doc["valid"] is True
    assert {e["l"] for e in doc["assignment"]["edges"]} == {1, 2, 3, 4}
