"""Scripted runs of the whole protocol.

A script is JSON::

    {
      "seed": 7,
      "universe": {"attributes": [{"name": "role", "values": ["doctor", "nurse"]}, ...]},
      "actors": {"aa": "AA", "csp": "CSP", "owner": "DO", "ecg": "Dev", "alice": "DU"},
      "actions": [
        {"actor": "aa", "op": "setup"},
        {"actor": "aa", "op": "keygen", "args": {"user": "alice", "attrs": {"role": "doctor"}}},
        {"actor": "alice", "op": "access", "args": {"object": "rec1"}, "expect": "granted"},
        ...
      ]
    }

The cloud actor must be called ``csp``. ``expect`` on an access action
makes the run fail if the outcome differs.
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Any, Dict, Optional, Union

from ..lifecycle import MemoryStore
from ..policy import Universe
from .actors import ROLES, AttributeAuthority, CloudProvider, Device, HarnessError
from .bus import Bus, Transcript
from .store import DirectoryStore, check_id


class ScenarioError(HarnessError):
    pass


class _Clock:
    """Logical clock: advanced by sweeps so the audit log is reproducible."""

    def __init__(self):
        self.now = 0.0

    def __call__(self) -> float:
        return self.now


class Scenario:
    def __init__(self, script: Dict[str, Any], store_dir: Optional[Union[str, Path]] = None):
        self.script = script
        self.seed = script.get("seed", 0)
        try:
            self.universe = Universe.from_dict(script["universe"])
            actors = script["actors"]
            self.actions = list(script["actions"])
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"malformed script: missing {exc}") from None
        self.clock = _Clock()
        self.bus = Bus()
        if store_dir is None:
            memory = MemoryStore()
            store_factory = lambda: memory  # noqa: E731 - survives "restart" like a disk would
        else:
            root = Path(store_dir)
            store_factory = lambda: DirectoryStore(root)  # noqa: E731
        if actors.get("csp") != "CSP" or list(actors.values()).count("CSP") != 1:
            raise ScenarioError("scripts need exactly one cloud actor, named 'csp'")
        if list(actors.values()).count("AA") != 1:
            raise ScenarioError("scripts need exactly one AA actor")
        for name, role in actors.items():
            check_id(name)
            rng = random.Random(f"{self.seed}/{name}")
            if role == "AA":
                actor = AttributeAuthority(name, rng, self.universe)
            elif role == "CSP":
                actor = CloudProvider(name, rng, store_factory, self.seed, self.clock)
            elif role == "Dev":
                actor = Device(name, rng)
            elif role in ("DO", "DU"):
                actor = ROLES[role](name, rng, self.universe)
            else:
                raise ScenarioError(f"unknown role {role!r} for {name!r}")
            self.bus.attach(actor)
        self.position = 0

    @property
    def transcript(self) -> Transcript:
        return self.bus.transcript

    def actor(self, name: str):
        try:
            return self.bus.actors[name]
        except KeyError:
            raise ScenarioError(f"no actor {name!r}") from None

    def step(self) -> None:
        action = self.actions[self.position]
        try:
            name, op = action["actor"], action["op"]
        except (KeyError, TypeError):
            raise ScenarioError(f"action {self.position}: needs 'actor' and 'op'") from None
        args = dict(action.get("args", {}))
        actor = self.actor(name)
        if op == "sweep" and "now" in args:
            self.clock.now = max(self.clock.now, float(args["now"]))
        self.bus.event(name, "action", index=self.position, op=op)
        before = len(getattr(actor, "outcomes", []))
        actor.perform(op, **args)
        expect = action.get("expect")
        if expect is not None:
            outcomes = getattr(actor, "outcomes", [])[before:]
            got = outcomes[-1]["outcome"] if outcomes else None
            if got != expect:
                raise ScenarioError(f"action {self.position} ({name} {op}): expected {expect!r}, got {got!r}")
        self.position += 1

    def run(self) -> Transcript:
        while self.position < len(self.actions):
            self.step()
        return self.transcript


def load_script(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        return json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from None


def run_scenario(script: Union[Dict[str, Any], str, Path],
                 store_dir: Optional[Union[str, Path]] = None) -> Transcript:
    """Run a script to completion; ``store_dir`` gives the cloud a directory-backed store."""
    if not isinstance(script, dict):
        script = load_script(script)
    return Scenario(script, store_dir).run()
