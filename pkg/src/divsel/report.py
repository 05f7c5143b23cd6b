"""Run reports: a JSON record of one selection run."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .estimators import SelectionResult

__all__ = ["RunReport"]


@dataclass
class RunReport:
    dataset: dict
    selection: SelectionResult
    config: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "selection": self.selection.to_dict(),
            "config": self.config,
            "timing": self.timing,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        return cls(
            dataset=d["dataset"],
            selection=SelectionResult.from_dict(d["selection"]),
            config=d.get("config", {}),
            timing=d.get("timing", {}),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, RunReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()
