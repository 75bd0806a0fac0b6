from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class Verdict(Enum):
    TRUE = "true"
    FALSE = "false"
    UNSUPPORTED = "unsupported"

    @classmethod
    def of(cls, flag):
        return cls.TRUE if flag else cls.FALSE


@dataclass
class DecisionReport:
    """A verdict plus the data needed to check it independently.

    ``witness`` is mandatory for FALSE verdicts.  ``data`` carries the
    supporting objects of TRUE verdicts (nests, decompositions) and any
    diagnostics.
    """
    verdict: Verdict
    witness: Any = None
    notes: str = ""
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict is Verdict.FALSE and self.witness is None:
            raise ValueError("a false verdict needs a witness")

    @property
    def is_true(self):
        return self.verdict is Verdict.TRUE

    @property
    def is_false(self):
        return self.verdict is Verdict.FALSE
