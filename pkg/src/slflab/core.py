"""Job/instance data model and exact-rational serialization.

All continuous quantities (times, sizes, rates) are `fractions.Fraction`
values; nothing in the package ever rounds. Decimal strings in input files
are parsed exactly (never through binary floats).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable

Rat = Fraction

_RAT_RE = re.compile(r"-?[0-9]+(/[1-9][0-9]*)?$|-?[0-9]+\.[0-9]+$")


class InstanceError(ValueError):
    """Raised for malformed instances or rational literals."""


def parse_rat(text: str | int) -> Rat:
    """Parse "a/b", an integer string, or a finite decimal, exactly."""
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str) or not _RAT_RE.match(text.strip()):
        raise InstanceError(f"not a rational literal: {text!r}")
    return Fraction(text.strip())


def rat_str(x: Rat) -> str:
    """Canonical rat-string: "a" for integers, "a/b" otherwise."""
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def ceil_inv(epsilon: Rat) -> int:
    """The integer ceiling of 1/epsilon for epsilon in (0, 1]."""
    if epsilon <= 0:
        raise InstanceError("ceil(1/epsilon) needs epsilon > 0")
    return -((-epsilon.denominator) // epsilon.numerator)


@dataclass(frozen=True, order=True)
class ReleaseTag:
    """A release time with an epoch for "immediately after" semantics.

    Tags order lexicographically by (time, epoch); a positive epoch marks a
    job re-released at x-plus by a move operation. Epochs have zero duration,
    so simulation dynamics see only the time component.
    """

    time: Rat
    epoch: int = 0

    def __post_init__(self) -> None:
        if self.time < 0:
            raise InstanceError(f"negative release time {self.time}")
        if self.epoch < 0:
            raise InstanceError("negative release epoch")


@dataclass(frozen=True)
class Job:
    id: int
    release: ReleaseTag
    size: Rat | None  # None: adversary-controlled, size not yet fixed

    def __post_init__(self) -> None:
        if self.id <= 0:
            raise InstanceError(f"job id must be positive, got {self.id}")
        if self.size is not None and self.size <= 0:
            raise InstanceError(f"job {self.id}: size must be > 0")

    @property
    def declared(self) -> bool:
        return self.size is not None


@dataclass(frozen=True)
class Instance:
    epsilon: Rat
    jobs: tuple[Job, ...]

    def __post_init__(self) -> None:
        if not (0 <= self.epsilon <= 1):
            raise InstanceError(f"epsilon {self.epsilon} outside [0,1]")
        ids = [j.id for j in self.jobs]
        if len(ids) != len(set(ids)):
            raise InstanceError("duplicate job ids")

    def job(self, job_id: int) -> Job:
        for j in self.jobs:
            if j.id == job_id:
                return j
        raise KeyError(job_id)

    @property
    def all_declared(self) -> bool:
        return all(j.declared for j in self.jobs)

    def with_jobs(self, jobs: Iterable[Job]) -> "Instance":
        return Instance(self.epsilon, tuple(jobs))


def parse_instance(text: str) -> Instance:
    """Parse the instance JSON document (see README for the schema)."""
    try:
        doc = json.loads(text, parse_float=Fraction, parse_int=int)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict) or "epsilon" not in doc or "jobs" not in doc:
        raise InstanceError("instance document needs 'epsilon' and 'jobs'")
    eps = _as_rat(doc["epsilon"], "epsilon")
    jobs = []
    for entry in doc["jobs"]:
        if not isinstance(entry, dict):
            raise InstanceError("job entries must be objects")
        unknown = set(entry) - {"id", "release", "size", "epoch"}
        if unknown:
            raise InstanceError(f"unknown job fields: {sorted(unknown)}")
        jid = entry.get("id")
        if not isinstance(jid, int):
            raise InstanceError("job id must be an integer")
        release = _as_rat(entry.get("release", 0), f"job {jid} release")
        epoch = entry.get("epoch", 0)
        if not isinstance(epoch, int):
            raise InstanceError(f"job {jid}: epoch must be an integer")
        raw_size = entry.get("size")
        size = None if raw_size is None else _as_rat(raw_size, f"job {jid} size")
        jobs.append(Job(jid, ReleaseTag(release, epoch), size))
    return Instance(eps, tuple(jobs))


def _as_rat(value, what: str) -> Rat:
    if isinstance(value, Fraction):  # exact decimal via parse_float
        return value
    if isinstance(value, bool):
        raise InstanceError(f"{what}: not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return parse_rat(value)
        except InstanceError as exc:
            raise InstanceError(f"{what}: {exc}") from exc
    raise InstanceError(f"{what}: not a rational: {value!r}")


def serialize_instance(inst: Instance, meta: dict | None = None) -> str:
    doc: dict = {
        "epsilon": rat_str(inst.epsilon),
        "jobs": [
            {
                "id": j.id,
                "release": rat_str(j.release.time),
                "size": None if j.size is None else rat_str(j.size),
                **({"epoch": j.release.epoch} if j.release.epoch else {}),
            }
            for j in inst.jobs
        ],
    }
    if meta:
        doc["meta"] = meta
    return json.dumps(doc, indent=2)


def scale_instance(inst: Instance, factor: Rat) -> Instance:
    """Multiply every size by `factor`; releases and epsilon unchanged."""
    if factor <= 0:
        raise InstanceError("scale factor must be > 0")
    return inst.with_jobs(
        replace(j, size=None if j.size is None else j.size * factor) for j in inst.jobs
    )


@dataclass(frozen=True)
class BusyPeriod:
    start: Rat
    end: Rat
    sub: Instance = field(compare=False)


def busy_periods(inst: Instance) -> list[BusyPeriod]:
    """Maximal intervals in which a non-idling unit-speed machine has work.

    The jobs of each period form an independent sub-instance for every
    non-idling policy in this package.
    """
    if not inst.all_declared:
        raise InstanceError("busy_periods requires declared sizes")
    jobs = sorted(inst.jobs, key=lambda j: (j.release, j.id))
    periods: list[BusyPeriod] = []
    i = 0
    while i < len(jobs):
        start = jobs[i].release.time
        end = start
        members: list[Job] = []
        while i < len(jobs) and jobs[i].release.time <= end:
            members.append(jobs[i])
            end += jobs[i].size
            i += 1
        periods.append(BusyPeriod(start, end, inst.with_jobs(members)))
    return periods
