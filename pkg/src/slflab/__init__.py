"""Exact-arithmetic laboratory for adaptive-clairvoyance scheduling:
fluid policy simulation, competitiveness certificates, and lower-bound
constructions, all over arbitrary-precision rationals."""

from .core import Instance, Job, Rat, ReleaseTag, parse_instance, serialize_instance
from .sim import IntervalSet, JobState, Schedule, simulate, state_at

__all__ = [
    "Instance",
    "IntervalSet",
    "Job",
    "JobState",
    "Rat",
    "ReleaseTag",
    "Schedule",
    "parse_instance",
    "serialize_instance",
    "simulate",
    "state_at",
]
