"""Three-valued mixability verdicts."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any


class Status(enum.Enum):
    MIXABLE = "mixable"
    NOT_MIXABLE = "not_mixable"
    UNKNOWN = "unknown"

    @property
    def exit_code(self) -> int:
        return {Status.MIXABLE: 0, Status.NOT_MIXABLE: 1, Status.UNKNOWN: 2}[self]


@dataclass(frozen=True)
class Verdict:
    """Outcome of a mixability test.

    ``MIXABLE`` must come from a sufficient condition or a constructive
    certificate, ``NOT_MIXABLE`` from a violated necessary condition or a dual
    certificate. Everything else is ``UNKNOWN``.
    """

    status: Status
    reason: str
    certificate: Any = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def mixable(self) -> bool:
        return self.status is Status.MIXABLE

    @property
    def not_mixable(self) -> bool:
        return self.status is Status.NOT_MIXABLE

    @property
    def decisive(self) -> bool:
        return self.status is not Status.UNKNOWN


def mixable(reason, certificate=None, **diagnostics) -> Verdict:
    return Verdict(Status.MIXABLE, reason, certificate, diagnostics)


def not_mixable(reason, certificate=None, **diagnostics) -> Verdict:
    return Verdict(Status.NOT_MIXABLE, reason, certificate, diagnostics)


def unknown(reason, **diagnostics) -> Verdict:
    return Verdict(Status.UNKNOWN, reason, None, diagnostics)
