"""JSON market configuration: parsing, validation and serialization.

Schema::

    {
      "n": 2,
      "distribution": {"family": "uniform", "params": {"low": 0, "high": 1}},
      "contests": [
        {"budget": 1, "prizes": [1, 0], "objective": {"type": "effort", "alpha": [1, 1]}},
        {"budget": 2, "simple": {"k": 1}, "objective": {"type": "participation", "theta": 0.6}}
      ],
      "solver": {"bisect_tol": 1e-12, "quad_tol": 1e-9, "grid": 101, "sc_tol": 1e-9,
                 "activity_eps": 1e-7},
      "simulation": {"replications": 10000, "seed": 0, "probe_quantiles": [...],
                     "effort_grid": null, "samples": 100000, "gap_tol": 0.01, "workers": 1}
    }

``solver`` and ``simulation`` are optional; missing keys take the defaults
above. A contest without ``objective`` values total effort (all weights 1).
"""

import json
import re
from dataclasses import dataclass, field, fields, replace

from .distributions import SkillDistribution
from .exceptions import ConfigError, ContestError
from .objectives import EffortObjective, ParticipationObjective
from .prizes import PrizeStructure


@dataclass(frozen=True)
class SolverSettings:
    bisect_tol: float = 1e-12
    quad_tol: float = 1e-9
    grid: int = 101
    sc_tol: float = 1e-9
    activity_eps: float = 1e-7


@dataclass(frozen=True)
class SimulationSettings:
    replications: int = 10_000
    seed: int = 0
    probe_quantiles: tuple = (0.1, 0.3, 0.5, 0.7, 0.9)
    effort_grid: tuple = None
    samples: int = 100_000
    gap_tol: float = 0.01
    workers: int = 1


@dataclass(frozen=True)
class ContestSpec:
    budget: float
    prizes: tuple = None
    simple_k: int = None
    objective: object = None

    def structure(self, n):
        if self.simple_k is not None:
            return PrizeStructure.simple(self.simple_k, self.budget, n)
        return PrizeStructure(self.prizes, self.budget)

    def to_dict(self):
        out = {"budget": self.budget}
        if self.simple_k is not None:
            out["simple"] = {"k": self.simple_k}
        else:
            out["prizes"] = list(self.prizes)
        out["objective"] = self.objective.to_dict()
        return out


@dataclass(frozen=True)
class MarketConfig:
    n: int
    distribution: SkillDistribution
    contests: tuple
    solver: SolverSettings = field(default_factory=SolverSettings)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)

    @property
    def m(self):
        return len(self.contests)

    def structures(self):
        return [c.structure(self.n) for c in self.contests]

    def objectives(self):
        return [c.objective for c in self.contests]

    def with_simulation(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, simulation=replace(self.simulation, **changes))

    def to_dict(self):
        sim = {f.name: getattr(self.simulation, f.name) for f in fields(SimulationSettings)}
        for key in ("probe_quantiles", "effort_grid"):
            if sim[key] is not None:
                sim[key] = list(sim[key])
        return {
            "n": self.n,
            "distribution": self.distribution.to_dict(),
            "contests": [c.to_dict() for c in self.contests],
            "solver": {f.name: getattr(self.solver, f.name) for f in fields(SolverSettings)},
            "simulation": sim,
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _locate(text, path):
    """Best-effort source line of the last key in ``path`` (dotted, list indices numeric)."""
    if text is None:
        return None
    keys = [p for p in path.split(".") if p and not p.isdigit()]
    if not keys:
        return 1
    hits = [m.start() for m in re.finditer(r'"%s"\s*:' % re.escape(keys[-1]), text)]
    if not hits:
        return None
    index = 0
    parts = path.split(".")
    if len(parts) >= 2 and parts[-2].isdigit():
        index = int(parts[-2])
    pos = hits[min(index, len(hits) - 1)]
    return text.count("\n", 0, pos) + 1


class _Reader:
    def __init__(self, text):
        self.text = text

    def fail(self, path, message):
        raise ConfigError(message, field=path, line=_locate(self.text, path))

    def number(self, obj, key, path, default=None, integer=False, lo=None, hi=None):
        if key not in obj:
            if default is None:
                self.fail(path, "missing required field")
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path, f"expected a number, got {type(v).__name__}")
        if integer and not float(v).is_integer():
            self.fail(path, f"expected an integer, got {v!r}")
        v = int(v) if integer else float(v)
        if v != v or v in (float("inf"), float("-inf")):
            self.fail(path, "must be finite")
        if lo is not None and v < lo:
            self.fail(path, f"must be at least {lo}, got {v}")
        if hi is not None and v > hi:
            self.fail(path, f"must be at most {hi}, got {v}")
        return v

    def numbers(self, obj, key, path, length=None):
        v = obj.get(key)
        if not isinstance(v, list):
            self.fail(path, "expected a list of numbers")
        out = []
        for i, x in enumerate(v):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                self.fail(f"{path}.{i}", "expected a number")
            out.append(float(x))
        if length is not None and len(out) != length:
            self.fail(path, f"expected {length} entries, got {len(out)}")
        return tuple(out)

    def mapping(self, obj, key, path, required=True):
        if key not in obj:
            if required:
                self.fail(path, "missing required field")
            return {}
        v = obj[key]
        if not isinstance(v, dict):
            self.fail(path, "expected an object")
        return v

    def known(self, obj, allowed, path):
        extra = sorted(set(obj) - set(allowed))
        if extra:
            where = f"{path}.{extra[0]}" if path else extra[0]
            self.fail(where, f"unknown field {extra[0]!r}")


def _objective(rd, spec, path, n):
    if not spec:
        return EffortObjective(tuple([1.0] * n))
    rd.known(spec, ("type", "alpha", "theta"), path)
    kind = spec.get("type")
    if kind == "effort":
        rd.known(spec, ("type", "alpha"), path)
        return EffortObjective(rd.numbers(spec, "alpha", f"{path}.alpha", length=n))
    if kind == "participation":
        rd.known(spec, ("type", "theta"), path)
        return ParticipationObjective(rd.number(spec, "theta", f"{path}.theta", lo=0.0, hi=1.0))
    rd.fail(f"{path}.type", f"objective type must be 'effort' or 'participation', got {kind!r}")


def _contest(rd, spec, path, n):
    if not isinstance(spec, dict):
        rd.fail(path, "expected an object")
    rd.known(spec, ("budget", "prizes", "simple", "objective"), path)
    budget = rd.number(spec, "budget", f"{path}.budget", lo=0.0)
    has_prizes, has_simple = "prizes" in spec, "simple" in spec
    if has_prizes == has_simple:
        rd.fail(path, "give exactly one of 'prizes' or 'simple'")
    prizes = k = None
    if has_simple:
        simple = rd.mapping(spec, "simple", f"{path}.simple")
        rd.known(simple, ("k",), f"{path}.simple")
        k = rd.number(simple, "k", f"{path}.simple.k", integer=True, lo=1, hi=n)
    else:
        prizes = rd.numbers(spec, "prizes", f"{path}.prizes", length=n)
    objective = _objective(rd, rd.mapping(spec, "objective", f"{path}.objective", False),
                           f"{path}.objective", n)
    c = ContestSpec(budget=budget, prizes=prizes, simple_k=k, objective=objective)
    try:
        c.structure(n)
    except ContestError as e:
        rd.fail(f"{path}.prizes", str(e))
    return c


def from_dict(doc, text=None):
    """Validate a decoded JSON document into a :class:`MarketConfig`."""
    rd = _Reader(text)
    if not isinstance(doc, dict):
        rd.fail("", "top level must be an object")
    rd.known(doc, ("n", "distribution", "contests", "solver", "simulation"), "")
    n = rd.number(doc, "n", "n", integer=True, lo=1)
    dspec = rd.mapping(doc, "distribution", "distribution")
    rd.known(dspec, ("family", "params"), "distribution")
    try:
        dist = SkillDistribution.from_dict(dspec)
    except (ContestError, KeyError, TypeError, ValueError) as e:
        rd.fail("distribution", f"invalid distribution: {e}")
    contests = doc.get("contests")
    if not isinstance(contests, list) or not contests:
        rd.fail("contests", "expected a non-empty list of contests")
    specs = tuple(_contest(rd, c, f"contests.{i}", n) for i, c in enumerate(contests))

    s = rd.mapping(doc, "solver", "solver", required=False)
    rd.known(s, [f.name for f in fields(SolverSettings)], "solver")
    d = SolverSettings()
    solver = SolverSettings(
        bisect_tol=rd.number(s, "bisect_tol", "solver.bisect_tol", d.bisect_tol, lo=0.0),
        quad_tol=rd.number(s, "quad_tol", "solver.quad_tol", d.quad_tol, lo=0.0),
        grid=rd.number(s, "grid", "solver.grid", d.grid, integer=True, lo=2),
        sc_tol=rd.number(s, "sc_tol", "solver.sc_tol", d.sc_tol, lo=0.0),
        activity_eps=rd.number(s, "activity_eps", "solver.activity_eps", d.activity_eps, lo=0.0),
    )
    s = rd.mapping(doc, "simulation", "simulation", required=False)
    rd.known(s, [f.name for f in fields(SimulationSettings)], "simulation")
    d = SimulationSettings()
    probes = d.probe_quantiles
    if "probe_quantiles" in s:
        probes = rd.numbers(s, "probe_quantiles", "simulation.probe_quantiles")
        if any(not 0.0 <= p <= 1.0 for p in probes):
            rd.fail("simulation.probe_quantiles", "probe quantiles must lie in [0, 1]")
    grid = None
    if s.get("effort_grid") is not None:
        grid = rd.numbers(s, "effort_grid", "simulation.effort_grid")
        if any(e < 0 for e in grid):
            rd.fail("simulation.effort_grid", "efforts must be nonnegative")
    simulation = SimulationSettings(
        replications=rd.number(s, "replications", "simulation.replications", d.replications,
                               integer=True, lo=1),
        seed=rd.number(s, "seed", "simulation.seed", d.seed, integer=True, lo=0),
        probe_quantiles=probes,
        effort_grid=grid,
        samples=rd.number(s, "samples", "simulation.samples", d.samples, integer=True, lo=1),
        gap_tol=rd.number(s, "gap_tol", "simulation.gap_tol", d.gap_tol, lo=0.0),
        workers=rd.number(s, "workers", "simulation.workers", d.workers, integer=True, lo=1),
    )
    return MarketConfig(n=n, distribution=dist, contests=specs, solver=solver, simulation=simulation)


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", line=e.lineno) from None
    return from_dict(doc, text)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}") from None
    return loads(text)
