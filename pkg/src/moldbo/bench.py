"""Benchmark objectives over mixed spaces, all maximization oriented.

Closed-form test functions, two classic engineering design problems, a
pollutant-dispersion calibration problem, and a synthetic hub-structure
task used to validate structure learning.  Minimization problems are
negated at this boundary so every task maximizes.

Engineering constants follow the standard literature formulations: the
cylindrical pressure vessel of Sandgren's nonlinear integer programming
benchmark and Golinski's speed reducer from the NASA MDO test suite.
Constraint violations enter as additive penalties of 1e4 per unit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .external import ExternalObjective, ExternalProcess, ProcessDiedError
from .space import MixedSpace, Variable, check_configuration

PENALTY = 1e4


@dataclass(frozen=True)
class Task:
    """A named objective with its search space.

    ``known_best`` upper-bounds the objective when the optimum is known.
    ``metadata`` carries free-form description entries.
    """

    name: str
    space: MixedSpace
    objective: object
    known_best: float | None = None
    metadata: dict = field(default_factory=dict)

    def __call__(self, values) -> float:
        return float(self.objective(check_configuration(self.space, values)))


# ---------------------------------------------------------------- func2c

_BEALE_SCALE = 4.5
_CAMEL_SCALE = (3.0, 2.0)
_ROSEN_SCALE = 2.048
# six-hump camel global minimum, used for the optimum annotation
_CAMEL_MIN = -1.0316284534898774


def _beale(x: float, y: float) -> float:
    return (
        (1.5 - x + x * y) ** 2
        + (2.25 - x + x * y * y) ** 2
        + (2.625 - x + x * y**3) ** 2
    )


def _camel(x: float, y: float) -> float:
    return (
        (4.0 - 2.1 * x * x + x**4 / 3.0) * x * x
        + x * y
        + (-4.0 + 4.0 * y * y) * y * y
    )


def _rosenbrock(x: float, y: float) -> float:
    return 100.0 * (y - x * x) ** 2 + (1.0 - x) ** 2


def _func2c_term(selector: int, u: float, v: float) -> float:
    if selector == 0:
        return _beale(_BEALE_SCALE * u, _BEALE_SCALE * v)
    if selector == 1:
        return _camel(_CAMEL_SCALE[0] * u, _CAMEL_SCALE[1] * v)
    return _rosenbrock(_ROSEN_SCALE * u, _ROSEN_SCALE * v)


def func2c() -> Task:
    """Two selector variables each choosing one of three classic surfaces.

    The shared continuous pair in [-1, 1]^2 is affinely mapped onto each
    selected function's canonical domain; the value is the negated sum of
    the two selected functions.  Selector 0 is the Beale surface, 1 the
    six-hump camel, 2 the Rosenbrock banana.
    """
    space = MixedSpace(
        [
            Variable.discrete("f_first", 3),
            Variable.discrete("f_second", 3),
            Variable.continuous("u", -1.0, 1.0),
            Variable.continuous("v", -1.0, 1.0),
        ]
    )

    def objective(values):
        d0, d1, u, v = values
        return -(_func2c_term(d0, u, v) + _func2c_term(d1, u, v))

    return Task(
        name="func2c",
        space=space,
        objective=objective,
        known_best=-2.0 * _CAMEL_MIN,
        metadata={"description": "two-selector blend of beale/camel/rosenbrock"},
    )


# ---------------------------------------------------------------- ackley

def _ackley(v: np.ndarray, a: float = 20.0, b: float = 0.2) -> float:
    d = v.size
    root = math.sqrt(float(np.square(v).sum()) / d)
    cosine = float(np.cos(2.0 * math.pi * v).sum()) / d
    return -a * math.exp(-b * root) - math.exp(cosine) + a + math.e


def ackley_mixed(n_bin: int = 50, n_cont: int = 3) -> Task:
    """Negated Ackley over binary variables in {0,1} and continuous in [-1,1]."""
    variables = [Variable.discrete(f"b{i}", 2) for i in range(n_bin)]
    variables += [Variable.continuous(f"x{i}", -1.0, 1.0) for i in range(n_cont)]
    space = MixedSpace(variables)

    def objective(values):
        vec = np.array(values, dtype=float)
        return -_ackley(vec)

    return Task(
        name=f"ackley{n_bin + n_cont}c",
        space=space,
        objective=objective,
        known_best=0.0,
        metadata={"n_bin": n_bin, "n_cont": n_cont},
    )


# ------------------------------------------------------- pressure vessel

_THICKNESS_STEP = 0.0625
# best known feasible cost (thicknesses 0.8125/0.4375, r 42.0984, l 176.6366)
_VESSEL_BEST_COST = 6059.714335048436


def pressure_vessel() -> Task:
    """Cylindrical vessel cost with the four standard feasibility constraints.

    Both thicknesses range over the 100 multiples of 0.0625 starting at
    0.0625 (encoded as level indices); radius and length are continuous in
    [10, 200].  Constraint violations add 1e4 per unit to the cost before
    negation.
    """
    space = MixedSpace(
        [
            Variable.discrete("shell_thickness", 100),
            Variable.discrete("head_thickness", 100),
            Variable.continuous("radius", 10.0, 200.0),
            Variable.continuous("length", 10.0, 200.0),
        ]
    )

    def objective(values):
        i1, i2, r, l = values
        x1 = _THICKNESS_STEP * (i1 + 1)
        x2 = _THICKNESS_STEP * (i2 + 1)
        cost = vessel_cost(x1, x2, r, l)
        violation = sum(max(0.0, g) for g in vessel_constraints(x1, x2, r, l))
        return -(cost + PENALTY * violation)

    return Task(
        name="pressure_vessel",
        space=space,
        objective=objective,
        known_best=-_VESSEL_BEST_COST,
        metadata={"thickness_step": _THICKNESS_STEP},
    )


def vessel_cost(x1: float, x2: float, x3: float, x4: float) -> float:
    """Material, forming, and welding cost of the vessel."""
    return (
        0.6224 * x1 * x3 * x4
        + 1.7781 * x2 * x3 * x3
        + 3.1661 * x1 * x1 * x4
        + 19.84 * x1 * x1 * x3
    )


def vessel_constraints(x1: float, x2: float, x3: float, x4: float) -> list[float]:
    """g_i <= 0 feasibility: shell/head thickness, volume, length."""
    return [
        -x1 + 0.0193 * x3,
        -x2 + 0.00954 * x3,
        -math.pi * x3 * x3 * x4 - (4.0 / 3.0) * math.pi * x3**3 + 1_296_000.0,
        x4 - 240.0,
    ]


# --------------------------------------------------------- speed reducer

_TEETH_MIN = 17
# best known design: (3.5, 0.7, 17, 7.3, 7.7153, 3.3502, 5.2867)
_REDUCER_BEST_WEIGHT = 2994.471066


def speed_reducer() -> Task:
    """Golinski gear-train weight with its eleven design constraints.

    The pinion tooth count is the discrete variable (17 to 28); the six
    continuous variables use the standard bounds.  Violations add 1e4 per
    unit before negation.
    """
    space = MixedSpace(
        [
            Variable.continuous("face_width", 2.6, 3.6),
            Variable.continuous("tooth_module", 0.7, 0.8),
            Variable.discrete("pinion_teeth", 12),
            Variable.continuous("shaft1_length", 7.3, 8.3),
            Variable.continuous("shaft2_length", 7.3, 8.3),
            Variable.continuous("shaft1_diameter", 2.9, 3.9),
            Variable.continuous("shaft2_diameter", 5.0, 5.5),
        ]
    )

    def objective(values):
        x1, x2, teeth_idx, x4, x5, x6, x7 = values
        x3 = float(_TEETH_MIN + teeth_idx)
        weight = reducer_weight(x1, x2, x3, x4, x5, x6, x7)
        violation = sum(
            max(0.0, g) for g in reducer_constraints(x1, x2, x3, x4, x5, x6, x7)
        )
        return -(weight + PENALTY * violation)

    return Task(
        name="speed_reducer",
        space=space,
        objective=objective,
        known_best=-_REDUCER_BEST_WEIGHT,
        metadata={"teeth_min": _TEETH_MIN},
    )


def reducer_weight(x1, x2, x3, x4, x5, x6, x7) -> float:
    return (
        0.7854 * x1 * x2 * x2 * (3.3333 * x3 * x3 + 14.9334 * x3 - 43.0934)
        - 1.508 * x1 * (x6 * x6 + x7 * x7)
        + 7.4777 * (x6**3 + x7**3)
        + 0.7854 * (x4 * x6 * x6 + x5 * x7 * x7)
    )


def reducer_constraints(x1, x2, x3, x4, x5, x6, x7) -> list[float]:
    """g_i <= 0: bending, stress, deflection, and geometry limits."""
    return [
        27.0 / (x1 * x2 * x2 * x3) - 1.0,
        397.5 / (x1 * x2 * x2 * x3 * x3) - 1.0,
        1.93 * x4**3 / (x2 * x3 * x6**4) - 1.0,
        1.93 * x5**3 / (x2 * x3 * x7**4) - 1.0,
        math.sqrt((745.0 * x4 / (x2 * x3)) ** 2 + 16.9e6) / (110.0 * x6**3) - 1.0,
        math.sqrt((745.0 * x5 / (x2 * x3)) ** 2 + 157.5e6) / (85.0 * x7**3) - 1.0,
        x2 * x3 / 40.0 - 1.0,
        5.0 * x2 / x1 - 1.0,
        x1 / (12.0 * x2) - 1.0,
        (1.5 * x6 + 1.9) / x4 - 1.0,
        (1.1 * x7 + 1.9) / x5 - 1.0,
    ]


# -------------------------------------------------- environment calibration

_ENV_TRUE = {"mass": 10.0, "diffusion": 0.07, "location": 1.505}
_ENV_OFFSET_RANGE = (30.01, 30.295)
_ENV_OFFSET_LEVELS = 285
_ENV_TRUE_LEVEL = 142  # nominal offset 30.1525, the exact mid-grid level
_ENV_S_GRID = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5)
_ENV_T_GRID = (15.0, 30.0, 45.0, 60.0)


def env_offset_grid() -> np.ndarray:
    """The 285 release-offset levels; the true offset sits exactly mid-grid."""
    return np.linspace(*_ENV_OFFSET_RANGE, _ENV_OFFSET_LEVELS)


def pollutant_concentration(
    s: float, t: float, mass: float, diffusion: float, location: float, offset: float
) -> float:
    """Two-release advection-free dispersion at position s and time t.

    First release of size ``mass`` at the origin at time zero; an identical
    second release at ``location`` after ``offset`` time units.
    """
    c = mass / math.sqrt(4.0 * math.pi * diffusion * t) * math.exp(
        -s * s / (4.0 * diffusion * t)
    )
    dt = t - offset
    if dt > 0:
        c += mass / math.sqrt(4.0 * math.pi * diffusion * dt) * math.exp(
            -((s - location) ** 2) / (4.0 * diffusion * dt)
        )
    return c


def env_calibration() -> Task:
    """Recover dispersion parameters from a fixed observation grid.

    The second-release time offset is discretized to 285 levels on
    [30.01, 30.295] (the true value lies on the grid); release mass,
    diffusion rate, and second-release location are continuous.  The value
    is the negated sum of squared concentration differences from the true
    parameters over all (s, t) grid points.
    """
    space = MixedSpace(
        [
            Variable.discrete("offset_level", _ENV_OFFSET_LEVELS),
            Variable.continuous("mass", 7.0, 13.0),
            Variable.continuous("diffusion", 0.02, 0.12),
            Variable.continuous("location", 0.01, 3.0),
        ]
    )
    grid = env_offset_grid()
    # truth offset taken from the grid itself so the self-match is exact
    true_offset = float(grid[_ENV_TRUE_LEVEL])
    truth = [
        pollutant_concentration(s, t, offset=true_offset, **_ENV_TRUE)
        for s in _ENV_S_GRID
        for t in _ENV_T_GRID
    ]

    def objective(values):
        offset_idx, mass, diffusion, location = values
        offset = float(grid[offset_idx])
        total = 0.0
        for (s, t), target in zip(
            ((s, t) for s in _ENV_S_GRID for t in _ENV_T_GRID), truth
        ):
            c = pollutant_concentration(s, t, mass, diffusion, location, offset)
            total += (c - target) ** 2
        return -total

    return Task(
        name="env_calibration",
        space=space,
        objective=objective,
        known_best=0.0,
        metadata={
            "true_parameters": {**_ENV_TRUE, "offset": true_offset},
            "true_offset_level": _ENV_TRUE_LEVEL,
            "offset_range": list(_ENV_OFFSET_RANGE),
            "offset_levels": _ENV_OFFSET_LEVELS,
        },
    )


# ------------------------------------------------------------ planted hub

def planted_hub(n_vars: int = 10, hubs: tuple[int, ...] = (2, 7)) -> Task:
    """Synthetic task whose objective couples every variable to a hub.

    Odd indices are three-level discrete variables, even indices continuous
    in [0, 1].  The value sums, over non-hub variables, the product of the
    variable's unit-scaled value with that of its nearest hub (ties to the
    first listed hub), so hub variables participate in many terms and all
    variables at zero give 0.
    """
    hubs = tuple(int(h) for h in hubs)
    if n_vars < 3:
        raise ValueError("need at least three variables")
    if not hubs or any(not 0 <= h < n_vars for h in hubs) or len(set(hubs)) != len(hubs):
        raise ValueError("hubs must be distinct indices inside the space")
    if len(hubs) >= n_vars:
        raise ValueError("need at least one non-hub variable")
    variables = [
        Variable.discrete(f"v{i}", 3) if i % 2 else Variable.continuous(f"v{i}", 0.0, 1.0)
        for i in range(n_vars)
    ]
    space = MixedSpace(variables)
    nearest = {
        i: min(hubs, key=lambda h: (abs(i - h), hubs.index(h)))
        for i in range(n_vars)
        if i not in hubs
    }

    def objective(values):
        units = [
            space.variables[i].to_unit(values[i]) for i in range(n_vars)
        ]
        return sum(units[i] * units[h] for i, h in nearest.items())

    return Task(
        name=f"planted_hub{n_vars}",
        space=space,
        objective=objective,
        known_best=float(n_vars - len(hubs)),
        metadata={"hubs": list(hubs), "nearest": {str(k): v for k, v in nearest.items()}},
    )


# ---------------------------------------------------------------- registry

def external_task(
    ext: ExternalObjective, space: MixedSpace, name: str = "external"
) -> Task:
    """Wrap a child-process objective; the child stays up across evaluations."""
    proc_holder: dict = {}

    def objective(values):
        proc = proc_holder.get("proc")
        if proc is None or not proc.alive():
            proc = ExternalProcess(ext)
            proc_holder["proc"] = proc
        try:
            return proc.evaluate(values)
        except ProcessDiedError:
            # the child can exit between the liveness check and the write;
            # one fresh child gets a second chance before giving up
            proc = ExternalProcess(ext)
            proc_holder["proc"] = proc
            return proc.evaluate(values)

    return Task(
        name=name,
        space=space,
        objective=objective,
        metadata={"command": list(ext.command), "timeout": ext.timeout},
    )


_REGISTRY = {
    "func2c": func2c,
    "ackley53c": lambda: ackley_mixed(50, 3),
    "ackley20c": lambda: ackley_mixed(17, 3),
    "pressure_vessel": pressure_vessel,
    "speed_reducer": speed_reducer,
    "env_calibration": env_calibration,
    "planted_hub": planted_hub,
    "planted_hub4": lambda: planted_hub(4, (0, 2)),
}


def task_ids() -> list[str]:
    return sorted(_REGISTRY)


def get_task(spec) -> Task:
    """Resolve a task id (or pass a Task through unchanged)."""
    if isinstance(spec, Task):
        return spec
    key = str(spec).replace("-", "_")
    if key not in _REGISTRY:
        raise KeyError(
            f"unknown task {spec!r}; known ids: {', '.join(task_ids())}"
        )
    return _REGISTRY[key]()
