"""Shared fixtures: the worked six-job example and random instance factories."""

from __future__ import annotations

import random
from fractions import Fraction as F

from slflab.core import Instance, Job, ReleaseTag


def toy_instance() -> Instance:
    """Six simultaneous jobs, sizes 5,4,3,3,2,1, eps = 1/2."""
    jobs = tuple(
        Job(i + 1, ReleaseTag(F(0)), F(p)) for i, p in enumerate([5, 4, 3, 3, 2, 1])
    )
    return Instance(F(1, 2), jobs)


def staggered_instance() -> Instance:
    """Two batches: sizes 5,4 at t=0 and 6,8 at t=5, eps = 1/2."""
    return Instance(
        F(1, 2),
        (
            Job(1, ReleaseTag(F(0)), F(5)),
            Job(2, ReleaseTag(F(0)), F(4)),
            Job(3, ReleaseTag(F(5)), F(6)),
            Job(4, ReleaseTag(F(5)), F(8)),
        ),
    )


def random_instance(rng: random.Random, eps, n: int) -> Instance:
    jobs = tuple(
        Job(
            i + 1,
            ReleaseTag(F(rng.randint(0, 10), rng.randint(1, 3))),
            F(rng.randint(1, 12), rng.randint(1, 4)),
        )
        for i in range(n)
    )
    return Instance(eps, jobs)


def segment_tuples(sched):
    return [(seg.start, seg.end, seg.rates) for seg in sched.segments]
