"""Monte-Carlo play of the contest game, used as an independent oracle.

Each replication samples ``n`` contestants, lets each choose a contest with
the probabilities implied by the cumulative choice strategies, ranks every
contest by effort (ties to the higher skill, then the lower index) and pays
the top ``|I_j|`` prizes. Replications are processed in fixed-size blocks
whose random streams depend only on the master seed and the block index, so
reports are bit-identical for any number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import SkillDistribution
from .equilibrium import EquilibriumProfile, disclosed_effort
from .exceptions import DomainError
from .objectives import EffortObjective, ParticipationObjective
from .prizes import PrizeStructure

BLOCK_SIZE = 8192
CHOICE_STEP = 1e-5
SCHEDULE_GRID = 8193
GAP_GRID = 64
Z95 = 1.959963984540054


@dataclass(frozen=True)
class GameConfig:
    """Everything needed to play the game: field size, skills, prizes, objectives."""

    n: int
    dist: SkillDistribution
    structures: tuple
    objectives: tuple
    replications: int = 10_000
    seed: int = 0
    interim_bins: int = 10

    def __post_init__(self):
        structures = tuple(
            s if isinstance(s, PrizeStructure) else PrizeStructure(s) for s in self.structures
        )
        if not structures:
            raise DomainError("at least one contest is required")
        for j, s in enumerate(structures):
            if s.n != self.n:
                raise DomainError(f"contest {j} has {s.n} prizes but n={self.n}")
        if len(self.objectives) != len(structures):
            raise DomainError("need one objective per contest")
        for o in self.objectives:
            if isinstance(o, EffortObjective) and len(o.alpha) != self.n:
                raise DomainError(f"effort weights must have length n={self.n}")
        if int(self.replications) < 1:
            raise DomainError("replications must be at least 1")
        if int(self.seed) < 0:
            raise DomainError("seed must be a nonnegative integer")
        object.__setattr__(self, "structures", structures)
        object.__setattr__(self, "objectives", tuple(self.objectives))
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def m(self):
        return len(self.structures)


def _interp_rows(grid, table, q):
    """Linear interpolation of every column of ``table`` (shape ``(G, ...)``) at ``q``."""
    i = np.clip(np.searchsorted(grid, q, side="right") - 1, 0, grid.size - 2)
    f = (q - grid[i]) / (grid[i + 1] - grid[i])
    f = f.reshape(f.shape + (1,) * (table.ndim - 1))
    return table[i] * (1.0 - f) + table[i + 1] * f


class EffortSchedule:
    """Choice probabilities and efforts tabulated on a quantile grid.

    ``pi[:, j]`` is the central difference of ``Phi_j`` (floored at 0 and
    renormalized), ``beta[:, j]`` the effort in contest ``j`` and, when
    ``disclosed``, ``beta_k[:, j, k-1]`` the effort after learning that ``k``
    contestants entered ``j``.
    """

    def __init__(self, profile, dist, grid_size=SCHEDULE_GRID, disclosed=False):
        self.profile = profile
        self.dist = dist
        self.m, self.n = profile.m, profile.n
        q = np.linspace(0.0, 1.0, grid_size)
        self.q = q
        ahead = np.minimum(q + CHOICE_STEP, 1.0)
        behind = np.maximum(q - CHOICE_STEP, 0.0)
        diff = (profile.shares(ahead) - profile.shares(behind)) / (ahead - behind)[:, None]
        pi = np.maximum(diff, 0.0)
        total = pi.sum(axis=1, keepdims=True)
        # rows without any growth (cannot happen for a valid profile) fall back to uniform
        self.pi = np.where(total > 0, pi / np.where(total > 0, total, 1.0), 1.0 / self.m)
        self.beta = np.stack([profile.effort(dist, j, q) for j in range(self.m)], axis=1)
        self.beta_k = None
        if disclosed:
            if not isinstance(profile, EquilibriumProfile):
                raise DomainError("disclosed efforts need an equilibrium profile")
            totals = profile.total_shares()
            table = np.zeros((q.size, self.m, self.n))
            for j in range(self.m):
                if totals[j] <= 0:
                    continue
                for k in range(1, self.n + 1):
                    table[:, j, k - 1] = disclosed_effort(profile, dist, j, k, q)
            self.beta_k = table

    def choice_probs(self, q):
        return _interp_rows(self.q, self.pi, q)

    def effort(self, j, q):
        """Effort at quantiles ``q`` in contests ``j`` (broadcasting arrays)."""
        table = _interp_rows(self.q, self.beta, q.reshape(-1))
        return np.take_along_axis(table, np.reshape(j, (-1, 1)), axis=1).reshape(q.shape)

    def disclosed(self, j, k, q):
        if self.beta_k is None:
            raise DomainError("schedule was built without disclosed efforts")
        flat = q.reshape(-1)
        table = _interp_rows(self.q, self.beta_k, flat)
        rows = np.arange(flat.size)
        return table[rows, np.reshape(j, -1), np.reshape(k, -1) - 1].reshape(q.shape)

    def max_effort(self):
        return float(np.nanmax(self.beta)) if self.beta.size else 0.0


def _choose(rng, probs):
    """One categorical draw per row of ``probs`` (last axis)."""
    cum = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[:-1]) * cum[..., -1]
    choice = np.sum(cum <= u[..., None], axis=-1)
    return np.minimum(choice, probs.shape[-1] - 1)


def _ranks(contest, effort, q):
    """1-based rank of each contestant inside its own contest.

    ``b`` beats ``a`` when both chose the same contest and ``b`` exerted more
    effort, or equal effort with a lower quantile (higher skill), or equal
    both with a lower index.
    """
    n = contest.shape[-1]
    same = contest[..., :, None] == contest[..., None, :]
    ea, eb = effort[..., :, None], effort[..., None, :]
    qa, qb = q[..., :, None], q[..., None, :]
    idx = np.arange(n)
    lower_index = (idx[None, :] < idx[:, None])
    beats = (eb > ea) | ((eb == ea) & ((qb < qa) | ((qb == qa) & lower_index)))
    return 1 + np.sum(same & beats, axis=-1)


def play_block(config, schedule, rng, size, disclosed=False):
    """Play ``size`` replications and return the per-contestant log.

    Keys: ``q``, ``skill``, ``contest``, ``count`` (entrants in own contest),
    ``effort``, ``rank``, ``prize``, ``utility``; each of shape ``(size, n)``.
    """
    n, m = config.n, config.m
    q = rng.random((size, n))
    probs = schedule.choice_probs(q.reshape(-1)).reshape(size, n, m)
    contest = _choose(rng, probs)
    onehot = contest[..., None] == np.arange(m)
    counts = onehot.sum(axis=1)
    count = np.take_along_axis(counts, contest, axis=1)
    if disclosed:
        effort = schedule.disclosed(contest, count, q)
    else:
        effort = schedule.effort(contest, q)
    rank = _ranks(contest, effort, q)
    prizes = np.stack([s.weights for s in config.structures])
    prize = prizes[contest, rank - 1]
    skill = config.dist.quantile(q)
    with np.errstate(invalid="ignore"):
        utility = skill * prize - effort
    return {
        "q": q, "skill": skill, "contest": contest, "count": count, "counts": counts,
        "effort": effort, "rank": rank, "prize": prize, "utility": utility,
    }


def _block_stats(config, log, bins):
    """Replication-level sums used to build estimates and confidence intervals."""
    n, m = config.n, config.m
    contest, rank, effort, q = log["contest"], log["rank"], log["effort"], log["q"]
    size = q.shape[0]
    designer = np.zeros((size, m))
    by_rank = np.zeros((m, n))
    for j, obj in enumerate(config.objectives):
        inside = contest == j
        if isinstance(obj, ParticipationObjective):
            designer[:, j] = np.sum(inside & (q <= obj.theta), axis=1)
        else:
            alpha = np.asarray(obj.alpha)
            designer[:, j] = np.sum(np.where(inside, alpha[rank - 1] * effort, 0.0), axis=1)
        for k in range(1, n + 1):
            by_rank[j, k - 1] = np.sum(np.where(inside & (rank == k), effort, 0.0))
    b = np.minimum((q * bins).astype(int), bins - 1)
    onehot = b[..., None] == np.arange(bins)
    u_sum = np.sum(np.where(onehot, log["utility"][..., None], 0.0), axis=1)
    u_cnt = onehot.sum(axis=1).astype(float)
    return {
        "designer_sum": designer.sum(axis=0),
        "designer_sq": (designer ** 2).sum(axis=0),
        "counts_sum": log["counts"].sum(axis=0).astype(float),
        "counts_sq": (log["counts"].astype(float) ** 2).sum(axis=0),
        "by_rank": by_rank,
        "u_sum": u_sum.sum(axis=0),
        "u_cnt": u_cnt.sum(axis=0),
        "u_ss": (u_sum ** 2).sum(axis=0),
        "u_cc": (u_cnt ** 2).sum(axis=0),
        "u_sc": (u_sum * u_cnt).sum(axis=0),
        "size": size,
        "count_check": bool(np.all(log["counts"].sum(axis=1) == n)),
    }


@dataclass
class SimulationReport:
    replications: int
    seed: int
    designer_utility: np.ndarray
    designer_ci: np.ndarray
    participation: np.ndarray
    participation_ci: np.ndarray
    effort_by_rank: np.ndarray
    interim_q: np.ndarray
    interim_utility: np.ndarray
    interim_ci: np.ndarray
    epsilon: float = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "replications": self.replications,
            "seed": self.seed,
            "designers": [
                {
                    "utility": float(self.designer_utility[j]),
                    "ci95": float(self.designer_ci[j]),
                    "participants": float(self.participation[j]),
                    "participants_ci95": float(self.participation_ci[j]),
                    "effort_by_rank": self.effort_by_rank[j].tolist(),
                }
                for j in range(self.designer_utility.size)
            ],
            "interim": {
                "q": self.interim_q.tolist(),
                "utility": self.interim_utility.tolist(),
                "ci95": self.interim_ci.tolist(),
            },
        }
        if self.epsilon is not None:
            out["epsilon"] = self.epsilon
        out.update(self.extra)
        return out


def _mean_ci(total, sq, count):
    mean = total / count
    if count < 2:
        return mean, np.full(np.shape(mean), np.inf)
    var = np.maximum(sq / count - mean ** 2, 0.0) * count / (count - 1)
    return mean, Z95 * np.sqrt(var / count)


def _simulate(config, schedule, disclosed, workers):
    R = config.replications
    sizes = [min(BLOCK_SIZE, R - s) for s in range(0, R, BLOCK_SIZE)]
    bins = config.interim_bins

    def run(b):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, b]))
        log = play_block(config, schedule, rng, sizes[b], disclosed=disclosed)
        return _block_stats(config, log, bins)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(run, range(len(sizes))))
    else:
        stats = [run(b) for b in range(len(sizes))]
    agg = {k: sum(s[k] for s in stats) for k in stats[0] if k not in ("size", "count_check")}
    if not all(s["count_check"] for s in stats):
        raise AssertionError("participant counts do not add up to n")

    util, util_ci = _mean_ci(agg["designer_sum"], agg["designer_sq"], R)
    part, part_ci = _mean_ci(agg["counts_sum"], agg["counts_sq"], R)
    # ratio estimator per bin with a delta-method interval over replications
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = agg["u_sum"] / agg["u_cnt"]
        resid_sq = agg["u_ss"] - 2 * ratio * agg["u_sc"] + ratio ** 2 * agg["u_cc"]
        mean_cnt = agg["u_cnt"] / R
        ratio_ci = Z95 * np.sqrt(np.maximum(resid_sq, 0.0) / (R - 1 if R > 1 else 1) / R) / mean_cnt
    edges = np.linspace(0.0, 1.0, bins + 1)
    return SimulationReport(
        replications=R,
        seed=config.seed,
        designer_utility=util,
        designer_ci=util_ci,
        participation=part,
        participation_ci=part_ci,
        effort_by_rank=agg["by_rank"] / R,
        interim_q=0.5 * (edges[1:] + edges[:-1]),
        interim_utility=ratio,
        interim_ci=ratio_ci,
    )


def run_game(config, profile, efforts=None, workers=1):
    """Estimate designer and contestant utilities by playing the game."""
    _check_consistent(config, profile)
    if efforts is None:
        efforts = EffortSchedule(profile, config.dist)
    return _simulate(config, efforts, disclosed=False, workers=workers)


def run_disclosed_variant(config, profile, efforts=None, workers=1):
    """As :func:`run_game`, but entrants see their contest's head count before exerting effort."""
    _check_consistent(config, profile)
    if efforts is None or efforts.beta_k is None:
        efforts = EffortSchedule(profile, config.dist, disclosed=True)
    return _simulate(config, efforts, disclosed=True, workers=workers)


def _check_consistent(config, profile):
    if profile.n != config.n or profile.m != config.m:
        raise DomainError(
            f"profile has m={profile.m}, n={profile.n} but config has m={config.m}, n={config.n}"
        )


def analytic_interim_utility(profile, dist, q):
    """Expected equilibrium utility at ``q``, averaging contests by choice probability."""
    q = np.asarray(q, dtype=float)
    ahead = np.minimum(q + CHOICE_STEP, 1.0)
    behind = np.maximum(q - CHOICE_STEP, 0.0)
    pi = np.maximum(profile.shares(ahead) - profile.shares(behind), 0.0)
    pi = pi / pi.sum(axis=-1, keepdims=True)
    u = np.stack([profile.interim_utility(dist, j, q) for j in range(profile.m)], axis=-1)
    return np.sum(np.where(pi > 0, pi * u, 0.0), axis=-1)


def analytic_interim_bins(profile, dist, bins, points=64):
    """Bin averages of :func:`analytic_interim_utility`, matching the simulator's bins."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    u = (np.arange(points) + 0.5) / points
    q = edges[:-1, None] + u[None, :] * (edges[1:] - edges[:-1])[:, None]
    return analytic_interim_utility(profile, dist, q).mean(axis=1)


def default_effort_grid(max_effort, extra=()):
    """Zero, ``GAP_GRID`` geometric points up to ``max_effort`` and the given efforts."""
    pts = [0.0]
    if max_effort > 0:
        pts += list(np.geomspace(max_effort * 1e-4, max_effort, GAP_GRID))
    pts += [float(e) for e in extra]
    return np.unique(np.asarray(pts, dtype=float))


@dataclass
class GapReport:
    epsilon: float
    probes: np.ndarray
    equilibrium: np.ndarray
    best: np.ndarray
    best_move: list


def best_response_gap(config, profile, efforts=None, probes=(0.1, 0.3, 0.5, 0.7, 0.9),
                      effort_grid=None, samples=100_000, seed=None):
    """Largest Monte-Carlo gain from a unilateral (contest, effort) deviation.

    For every probe quantile the same ``samples`` draws of the ``n - 1``
    opponents are used for all deviations and for the equilibrium play, so the
    differences are low-variance. Returns a :class:`GapReport`.
    """
    _check_consistent(config, profile)
    if efforts is None:
        efforts = EffortSchedule(profile, config.dist)
    probes = np.asarray(probes, dtype=float)
    if np.any((probes < 0) | (probes > 1)):
        raise DomainError("probe quantiles must lie in [0, 1]")
    seed = config.seed if seed is None else int(seed)
    n, m = config.n, config.m
    prizes = np.stack([s.weights for s in config.structures])
    eq_u = np.zeros(probes.size)
    best_u = np.zeros(probes.size)
    moves = []
    for p, qp in enumerate(probes):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1 << 20, p]))
        skill = float(config.dist.quantile(qp))
        qo = rng.random((samples, n - 1))
        probs = efforts.choice_probs(qo.reshape(-1)).reshape(samples, n - 1, m)
        co = _choose(rng, probs)
        eo = efforts.effort(co, qo)
        own_pi = efforts.choice_probs(np.array([qp]))[0]
        own_beta = np.array([efforts.effort(np.array([j]), np.array([qp]))[0] for j in range(m)])
        grid = effort_grid
        if grid is None:
            grid = default_effort_grid(efforts.max_effort(), own_beta)
        grid = np.unique(np.concatenate([np.asarray(grid, dtype=float), own_beta]))

        def value(j, e):
            inside = co == j
            beats = inside & ((eo > e) | ((eo == e) & (qo < qp)))
            rank = 1 + beats.sum(axis=1)
            return skill * prizes[j, rank - 1].mean() - e

        eq = sum(own_pi[j] * value(j, own_beta[j]) for j in range(m) if own_pi[j] > 0)
        best, move = -np.inf, None
        for j in range(m):
            for e in grid:
                u = value(j, e)
                if u > best:
                    best, move = u, (j, float(e))
        eq_u[p], best_u[p] = eq, best
        moves.append(move)
    gaps = np.maximum(best_u - eq_u, 0.0)
    return GapReport(float(gaps.max()) if gaps.size else 0.0, probes, eq_u, best_u, moves)
