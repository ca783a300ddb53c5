"""Python access to the multicast mechanism library.

Every call returns plain dicts and lists decoded from the core's JSON output.
"""

import json as _json

from ._core import Scenario as _Scenario
from ._core import ScenarioError, SolverError

__all__ = ["Scenario", "ScenarioError", "SolverError"]


class Scenario:
    """A validated-on-demand instance loaded from a file, a JSON string or a dict."""

    def __init__(self, core):
        self._core = core

    @classmethod
    def load(cls, path):
        return cls(_Scenario.load(str(path)))

    @classmethod
    def from_dict(cls, data, name="<input>"):
        return cls(_Scenario.parse(_json.dumps(data), name))

    @classmethod
    def from_json(cls, text, name="<input>"):
        return cls(_Scenario.parse(text, name))

    @property
    def name(self):
        return self._core.name

    def validate(self):
        """List of violated invariants; empty when the scenario is usable."""
        return list(self._core.validate())

    def solve(self):
        return _json.loads(self._core.solve())

    def construct(self, eps=1e-6):
        """Equilibrium profile plus every check run against it."""
        return _json.loads(self._core.construct(eps))

    def check(self, profile, eps=1e-6):
        return _json.loads(self._core.check(_json.dumps(profile), eps))

    def dims(self):
        return _json.loads(self._core.dims())

    def dynamics(self, perturb=0.01, seed=0, max_sweeps=500, schedule="round_robin"):
        return _json.loads(self._core.dynamics(perturb, seed, max_sweeps, schedule))
