"""Attribute universes, attribute lists and multi-AND-gate access policies.

A policy is a disjunction of AND-gates. Every gate carries one clause per
attribute of the universe: either a nonempty set of allowed value indices
or the wildcard ``*`` (any value). An attribute list picks exactly one
value per attribute. Value indices are 0-based throughout the library;
the hash encoding shifts attribute positions to 1-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple, Union


class PolicyError(ValueError):
    """Malformed universe, attribute list, gate or policy."""


class UniverseMismatch(PolicyError):
    """Objects built over different universes were combined."""


class _Wildcard:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "*"

    def __reduce__(self):
        return (_Wildcard, ())


WILDCARD = _Wildcard()

Clause = Union[FrozenSet[int], _Wildcard]


@dataclass(frozen=True)
class Attribute:
    name: str
    values: Tuple[str, ...]


@dataclass(frozen=True)
class Universe:
    attributes: Tuple[Attribute, ...]

    @property
    def n(self) -> int:
        return len(self.attributes)

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(a.values) for a in self.attributes)

    @property
    def total_values(self) -> int:
        """``N``, the number of (attribute, value) pairs."""
        return sum(self.sizes)

    def index_of(self, name: str) -> int:
        for i, attr in enumerate(self.attributes):
            if attr.name == name:
                return i
        raise PolicyError(f"unknown attribute {name!r}")

    def value_index(self, i: int, value: str) -> int:
        try:
            return self.attributes[i].values.index(value)
        except ValueError:
            raise PolicyError(
                f"unknown value {value!r} for attribute {self.attributes[i].name!r}"
            ) from None

    def value(self, i: int, t: int) -> str:
        return self.attributes[i].values[t]

    @classmethod
    def from_sizes(cls, sizes: Sequence[int], prefix: str = "a") -> "Universe":
        """Synthetic universe ``a1 = {v1_1, ...}``; handy for tests and benchmarks."""
        return cls(tuple(
            Attribute(f"{prefix}{i + 1}", tuple(f"v{i + 1}_{t + 1}" for t in range(k)))
            for i, k in enumerate(sizes)
        ))

    @classmethod
    def from_dict(cls, data: Mapping) -> "Universe":
        try:
            attrs = tuple(
                Attribute(str(a["name"]), tuple(str(v) for v in a["values"]))
                for a in data["attributes"]
            )
        except (KeyError, TypeError) as exc:
            raise PolicyError(f"malformed universe description: {exc}") from None
        universe = cls(attrs)
        _raise_on(validate(universe, universe))
        return universe

    def to_dict(self) -> dict:
        return {"attributes": [{"name": a.name, "values": list(a.values)} for a in self.attributes]}

    def attribute_lists(self) -> Iterator["AttributeList"]:
        """Every attribute list over this universe (exponential; small universes only)."""
        for combo in itertools.product(*(range(k) for k in self.sizes)):
            yield AttributeList(self, combo)


@dataclass(frozen=True)
class AttributeList:
    universe: Universe
    selections: Tuple[int, ...]

    def value(self, i: int) -> str:
        return self.universe.value(i, self.selections[i])

    @classmethod
    def from_mapping(cls, universe: Universe, data: Mapping[str, str]) -> "AttributeList":
        names = {a.name for a in universe.attributes}
        extra = set(data) - names
        if extra:
            raise PolicyError(f"unknown attributes: {sorted(extra)}")
        missing = [a.name for a in universe.attributes if a.name not in data]
        if missing:
            raise PolicyError(f"attribute list must cover every attribute; missing {missing}")
        return cls(universe, tuple(
            universe.value_index(i, str(data[a.name])) for i, a in enumerate(universe.attributes)
        ))

    def to_mapping(self) -> dict:
        return {a.name: self.value(i) for i, a in enumerate(self.universe.attributes)}


@dataclass(frozen=True)
class AndGate:
    universe: Universe
    clauses: Tuple[Clause, ...]

    def allows(self, i: int, t: int) -> bool:
        clause = self.clauses[i]
        return clause is WILDCARD or t in clause

    def clause_size(self, i: int) -> int:
        clause = self.clauses[i]
        return self.universe.sizes[i] if clause is WILDCARD else len(clause)

    @classmethod
    def build(cls, universe: Universe, clauses: Sequence) -> "AndGate":
        """Accepts ``"*"``/``WILDCARD`` or any iterable of value indices per attribute."""
        out = []
        for clause in clauses:
            if clause is WILDCARD or clause == "*":
                out.append(WILDCARD)
            else:
                out.append(frozenset(int(t) for t in clause))
        return cls(universe, tuple(out))

    @classmethod
    def from_mapping(cls, universe: Universe, data: Mapping) -> "AndGate":
        names = {a.name for a in universe.attributes}
        extra = set(data) - names
        if extra:
            raise PolicyError(f"unknown attributes: {sorted(extra)}")
        clauses: List[Clause] = []
        for i, attr in enumerate(universe.attributes):
            if attr.name not in data:
                raise PolicyError(f"gate must give a clause for every attribute; missing {attr.name!r}")
            wanted = data[attr.name]
            if wanted == "*":
                clauses.append(WILDCARD)
            else:
                values = [wanted] if isinstance(wanted, str) else list(wanted)
                clauses.append(frozenset(universe.value_index(i, str(v)) for v in values))
        return cls(universe, tuple(clauses))

    def to_mapping(self) -> dict:
        out = {}
        for i, attr in enumerate(self.universe.attributes):
            clause = self.clauses[i]
            out[attr.name] = "*" if clause is WILDCARD else [attr.values[t] for t in sorted(clause)]
        return out


@dataclass(frozen=True)
class Policy:
    universe: Universe
    gates: Tuple[AndGate, ...]

    @property
    def m(self) -> int:
        return len(self.gates)

    @classmethod
    def from_dict(cls, universe: Universe, data: Mapping) -> "Policy":
        """``{"gates": [{"clauses": {...}}, ...]}``; extra gate keys are ignored."""
        try:
            gates = tuple(AndGate.from_mapping(universe, g["clauses"]) for g in data["gates"])
        except (KeyError, TypeError) as exc:
            raise PolicyError(f"malformed policy description: {exc}") from None
        policy = cls(universe, gates)
        _raise_on(validate(universe, policy))
        return policy


@dataclass(frozen=True)
class Violation:
    index: Optional[int]
    message: str

    def __str__(self) -> str:
        where = "" if self.index is None else f"attribute {self.index}: "
        return where + self.message


Validatable = Union[Universe, AttributeList, AndGate, Policy]


def validate(universe: Universe, obj: Validatable) -> List[Violation]:
    """Every invariant violation of ``obj`` relative to ``universe``; empty means valid."""
    if isinstance(obj, Universe):
        return _validate_universe(obj)
    if obj.universe != universe:
        return [Violation(None, "object belongs to a different universe")]
    if isinstance(obj, AttributeList):
        return _validate_list(universe, obj)
    if isinstance(obj, AndGate):
        return _validate_gate(universe, obj)
    if isinstance(obj, Policy):
        if not obj.gates:
            return [Violation(None, "policy needs at least one gate")]
        found = []
        for j, gate in enumerate(obj.gates):
            found += [Violation(v.index, f"gate {j}: {v.message}") for v in validate(universe, gate)]
        return found
    raise TypeError(f"cannot validate {type(obj).__name__}")


def _validate_universe(universe: Universe) -> List[Violation]:
    found = []
    if universe.n < 1:
        found.append(Violation(None, "universe needs at least one attribute"))
    names = [a.name for a in universe.attributes]
    for i, attr in enumerate(universe.attributes):
        if names.index(attr.name) != i:
            found.append(Violation(i, f"duplicate attribute name {attr.name!r}"))
        if not attr.values:
            found.append(Violation(i, "attribute needs at least one value"))
        if len(set(attr.values)) != len(attr.values):
            found.append(Violation(i, "duplicate values"))
    return found


def _validate_list(universe: Universe, attrs: AttributeList) -> List[Violation]:
    if len(attrs.selections) != universe.n:
        return [Violation(None, f"expected {universe.n} selections, got {len(attrs.selections)}")]
    return [
        Violation(i, f"value index {k} out of range [0, {size})")
        for i, (k, size) in enumerate(zip(attrs.selections, universe.sizes))
        if not 0 <= k < size
    ]


def _validate_gate(universe: Universe, gate: AndGate) -> List[Violation]:
    if len(gate.clauses) != universe.n:
        return [Violation(None, f"expected {universe.n} clauses, got {len(gate.clauses)}")]
    found = []
    for i, (clause, size) in enumerate(zip(gate.clauses, universe.sizes)):
        if clause is WILDCARD:
            continue
        if not clause:
            found.append(Violation(i, "empty clause"))
        bad = sorted(t for t in clause if not 0 <= t < size)
        if bad:
            found.append(Violation(i, f"value indices {bad} out of range [0, {size})"))
    return found


def _raise_on(violations: List[Violation]) -> None:
    if violations:
        raise PolicyError("; ".join(str(v) for v in violations))


def check(universe: Universe, obj: Validatable) -> None:
    """Raise :class:`PolicyError` unless ``obj`` is valid for ``universe``."""
    _raise_on(validate(universe, obj))


def satisfies_gate(attrs: AttributeList, gate: AndGate) -> bool:
    if attrs.universe != gate.universe:
        raise UniverseMismatch("attribute list and gate use different universes")
    return all(gate.allows(i, k) for i, k in enumerate(attrs.selections))


def satisfies_policy(attrs: AttributeList, policy: Policy) -> Optional[int]:
    """0-based index of the first gate ``attrs`` satisfies, or None."""
    if attrs.universe != policy.universe:
        raise UniverseMismatch("attribute list and policy use different universes")
    for j, gate in enumerate(policy.gates):
        if satisfies_gate(attrs, gate):
            return j
    return None
