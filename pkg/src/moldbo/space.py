"""Mixed discrete/continuous search spaces and per-variable feature encodings.

A space is an ordered tuple of variables.  Discrete variables are unordered
categoricals with a finite level count; continuous variables carry real
bounds.  Every variable becomes one node when the space is molded into a
graph, and its node feature is a one-hot row (discrete) or a unit-scaled
scalar (continuous).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

DISCRETE = "discrete"
CONTINUOUS = "continuous"


class SpaceError(ValueError):
    """Base class for search-space construction and encoding failures."""


class EmptySpaceError(SpaceError):
    """Raised for a space with no variables."""


class BadBoundsError(SpaceError):
    """Raised when a continuous variable has lo >= hi or non-finite bounds."""


class BadCardinalityError(SpaceError):
    """Raised when a discrete variable has fewer than two levels."""


class DuplicateNameError(SpaceError):
    """Raised when two variables share a name."""


class InvalidConfigurationError(SpaceError):
    """Raised when a configuration does not lie in its space."""


@dataclass(frozen=True)
class Variable:
    """One dimension of a mixed search space.

    Parameters
    ----------
    name : str
        Unique identifier within the space.
    kind : str
        Either ``"discrete"`` or ``"continuous"``.
    cardinality : int, optional
        Number of levels; required for discrete variables, must be >= 2.
    bounds : (float, float), optional
        Inclusive (lo, hi) range; required for continuous variables.
    """

    name: str
    kind: str
    cardinality: int | None = None
    bounds: tuple[float, float] | None = None

    @staticmethod
    def discrete(name: str, cardinality: int) -> "Variable":
        return Variable(name, DISCRETE, cardinality=int(cardinality))

    @staticmethod
    def continuous(name: str, lo: float, hi: float) -> "Variable":
        return Variable(name, CONTINUOUS, bounds=(float(lo), float(hi)))

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE

    @property
    def feature_width(self) -> int:
        """Length of this variable's node-feature row."""
        return self.cardinality if self.is_discrete else 1

    def to_unit(self, value: float) -> float:
        """Map a raw value onto [0, 1]."""
        if self.is_discrete:
            return float(value) / (self.cardinality - 1)
        lo, hi = self.bounds
        return (float(value) - lo) / (hi - lo)

    def from_unit(self, u: float) -> float:
        """Map a unit-scaled value back to the raw range."""
        lo, hi = self.bounds
        return lo + float(u) * (hi - lo)

    def contains(self, value) -> bool:
        if self.is_discrete:
            return (
                not isinstance(value, (bool, np.bool_))
                and float(value) == int(value)
                and 0 <= int(value) < self.cardinality
            )
        lo, hi = self.bounds
        return np.isfinite(value) and lo <= float(value) <= hi


@dataclass(frozen=True)
class MixedSpace:
    """An ordered collection of variables defining the search domain."""

    variables: tuple[Variable, ...]

    def __init__(self, variables) -> None:
        object.__setattr__(self, "variables", tuple(variables))

    @property
    def dim(self) -> int:
        return len(self.variables)

    @property
    def n_discrete(self) -> int:
        return sum(1 for v in self.variables if v.is_discrete)

    @property
    def n_continuous(self) -> int:
        return self.dim - self.n_discrete

    @property
    def feature_length(self) -> int:
        """Total flat feature length: sum of cardinalities plus one per continuous."""
        return sum(v.feature_width for v in self.variables)

    def validate(self) -> None:
        validate_space(self)


def validate_space(space: MixedSpace) -> None:
    """Check structural well-formedness, raising a specific ``SpaceError``."""
    if space.dim == 0:
        raise EmptySpaceError("space has no variables")
    if space.dim < 2:
        raise SpaceError("a moldable space needs at least two variables")
    seen: set[str] = set()
    for v in space.variables:
        if v.name in seen:
            raise DuplicateNameError(f"duplicate variable name {v.name!r}")
        seen.add(v.name)
        if v.kind not in (DISCRETE, CONTINUOUS):
            raise SpaceError(f"unknown variable kind {v.kind!r}")
        if v.is_discrete:
            if v.cardinality is None or v.cardinality < 2:
                raise BadCardinalityError(
                    f"variable {v.name!r}: cardinality must be >= 2"
                )
        else:
            if v.bounds is None:
                raise BadBoundsError(f"variable {v.name!r}: missing bounds")
            lo, hi = v.bounds
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
                raise BadBoundsError(
                    f"variable {v.name!r}: bounds must satisfy lo < hi"
                )


def check_configuration(space: MixedSpace, values) -> tuple:
    """Validate one configuration against the space and return it as a tuple."""
    values = tuple(values)
    if len(values) != space.dim:
        raise InvalidConfigurationError(
            f"expected {space.dim} values, got {len(values)}"
        )
    out = []
    for var, value in zip(space.variables, values):
        if not var.contains(value):
            raise InvalidConfigurationError(
                f"value {value!r} outside variable {var.name!r}"
            )
        out.append(int(value) if var.is_discrete else float(value))
    return tuple(out)


def encode_features(space: MixedSpace, values) -> list[np.ndarray]:
    """Encode a configuration as per-node feature rows.

    Discrete variables become exact one-hot rows of length ``cardinality``;
    continuous variables become a single unit-scaled entry.
    """
    values = check_configuration(space, values)
    rows = []
    for var, value in zip(space.variables, values):
        if var.is_discrete:
            row = np.zeros(var.cardinality)
            row[int(value)] = 1.0
        else:
            row = np.array([var.to_unit(value)])
        rows.append(row)
    return rows


def flat_features(space: MixedSpace, values) -> np.ndarray:
    """Concatenate per-node feature rows into one flat vector."""
    return np.concatenate(encode_features(space, values))


def sample_uniform(space: MixedSpace, rng: np.random.Generator) -> tuple:
    """Draw one configuration uniformly over the space."""
    out = []
    for var in space.variables:
        if var.is_discrete:
            out.append(int(rng.integers(var.cardinality)))
        else:
            lo, hi = var.bounds
            out.append(float(rng.uniform(lo, hi)))
    return tuple(out)


def space_to_dict(space: MixedSpace) -> dict:
    """Serialize a space to a plain JSON-compatible dict."""
    out = []
    for v in space.variables:
        if v.is_discrete:
            out.append({"name": v.name, "kind": v.kind, "cardinality": v.cardinality})
        else:
            out.append({"name": v.name, "kind": v.kind, "bounds": list(v.bounds)})
    return {"variables": out}


def space_from_dict(payload: dict) -> MixedSpace:
    """Inverse of :func:`space_to_dict`."""
    variables = []
    for entry in payload["variables"]:
        if entry["kind"] == DISCRETE:
            variables.append(Variable.discrete(entry["name"], entry["cardinality"]))
        elif entry["kind"] == CONTINUOUS:
            lo, hi = entry["bounds"]
            variables.append(Variable.continuous(entry["name"], lo, hi))
        else:
            raise SpaceError(f"unknown variable kind {entry['kind']!r}")
    return MixedSpace(variables)


def space_to_json(space: MixedSpace) -> str:
    return json.dumps(space_to_dict(space))


def space_from_json(text: str) -> MixedSpace:
    return space_from_dict(json.loads(text))


def configuration_to_dict(values) -> dict:
    return {"values": [v if isinstance(v, int) else float(v) for v in values]}


def configuration_from_dict(space: MixedSpace, payload: dict) -> tuple:
    return check_configuration(space, payload["values"])
