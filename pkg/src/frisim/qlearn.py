"""Tabular Q-learning for fluid-element position selection.

The configuration state is factored per element: the state is
``(subarea m, current local position p)`` and an action is the new local
position ``a`` of that element, so the table has shape ``(M, K, K)`` with
``K = N / M``. Elements are moved round-robin and every step is rewarded
with the global SNR at Bob of the resulting configuration.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numba
import numpy as np

from .channel import RngStream
from .errors import DomainError, FeasibilityError
from .geometry import Configuration, Grid

__all__ = [
    "LearnParams",
    "QTable",
    "RewardOracle",
    "SumPowerReward",
    "q_update",
    "epsilon_greedy",
    "feasible_actions",
    "train",
    "extract_greedy",
    "train_batch",
    "trace_to_csv",
]


@dataclass(frozen=True)
class LearnParams:
    alpha: float = 0.1
    delta: float = 0.9
    epsilon: float = 0.1
    episodes: int = 400
    steps_per_episode: int | None = None  # default: 4 rounds of M moves
    convergence_window: int | None = None  # default: no early exit
    min_spacing: float | None = None  # default: grid pitch

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise DomainError("alpha must lie in (0, 1]")
        if not 0 <= self.delta <= 1:
            raise DomainError("delta must lie in [0, 1]")
        if not 0 <= self.epsilon <= 1:
            raise DomainError("epsilon must lie in [0, 1]")
        if self.episodes < 1 or (self.convergence_window is not None and self.convergence_window < 1):
            raise DomainError("episodes and convergence_window must be positive")
        if self.steps_per_episode is not None and self.steps_per_episode < 1:
            raise DomainError("steps_per_episode must be positive")

    @property
    def window(self) -> int:
        return self.convergence_window if self.convergence_window is not None else self.episodes

    def steps(self, m: int) -> int:
        return self.steps_per_episode if self.steps_per_episode is not None else 4 * m


class RewardOracle:
    """Maps a vector of local positions (one per subarea) to a reward.

    Subclasses must be deterministic for the duration of a training run.
    :meth:`upper_bound` should return a constant no smaller than any reward.
    :meth:`share` optionally returns the normalized marginal contribution of
    one element; training then rewards a move by that share instead of the
    scaled global amplitude.
    """

    def __call__(self, local_positions: Sequence[int]) -> float:  # pragma: no cover - interface
        raise NotImplementedError

    def upper_bound(self) -> float | None:
        return None

    def share(self, local_positions: Sequence[int], m: int) -> float | None:
        return None


class SumPowerReward(RewardOracle):
    """``mean_b || sum_m V[b, m, p_m] ||^2`` over a frozen batch of realizations.

    ``contrib`` has shape ``(B, M, K, L)`` (or ``(M, K, L)`` for one
    realization): the per-element, per-candidate contribution to the
    effective channel row seen by Bob. Real non-negative ``(B, M, K)``
    amplitudes with a trailing unit axis give the phase-aligned SNR.
    """

    def __init__(self, contrib: np.ndarray):
        c = np.asarray(contrib)
        if c.ndim == 3:
            c = c[None]
        if c.ndim != 4:
            raise DomainError("contrib must have shape (B, M, K, L)")
        self.contrib = c
        self._m = np.arange(c.shape[1])
        # largest possible marginal amplitude of each element
        cmax = np.sqrt((np.abs(c) ** 2).sum(axis=-1).mean(axis=0)).max(axis=1)
        self._cmax = np.where(cmax > 0, cmax, 1.0)

    def __call__(self, local_positions) -> float:
        p = np.asarray(local_positions, dtype=int)
        s = self.contrib[:, self._m, p, :].sum(axis=1)
        return float((np.abs(s) ** 2).sum(axis=-1).mean())

    def share(self, local_positions, m: int) -> float:
        """``(sqrt(r) - sqrt(r without element m)) / max_k ||c[:, m, k]||``, in ``[-1, 1]``."""
        p = np.asarray(local_positions, dtype=int)
        s = self.contrib[:, self._m, p, :].sum(axis=1)
        rest = s - self.contrib[:, m, p[m], :]
        full = math.sqrt(float((np.abs(s) ** 2).sum(axis=-1).mean()))
        without = math.sqrt(float((np.abs(rest) ** 2).sum(axis=-1).mean()))
        return (full - without) / float(self._cmax[m])

    def upper_bound(self) -> float:
        # triangle inequality per realization
        peak = np.linalg.norm(self.contrib, axis=-1).max(axis=2).sum(axis=1)
        return float((peak**2).mean())


@dataclass
class QTable:
    """Action values ``values[m, p, a]`` plus visit counts, both ``(M, K, K)``."""

    values: np.ndarray
    visits: np.ndarray

    @classmethod
    def zeros(cls, m: int, k: int) -> "QTable":
        return cls(np.zeros((m, k, k)), np.zeros((m, k, k), dtype=np.int64))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape


def q_update(q, s, a: int, r: float, s_next, params: LearnParams):
    """In-place temporal-difference update of ``Q[s, a]``; returns ``q``.

    ``q`` is a :class:`QTable` (visit count incremented) or a bare array.
    """
    vals = q.values if isinstance(q, QTable) else q
    try:
        target = r + params.delta * np.max(vals[s_next])
        vals[s + (a,)] += params.alpha * (target - vals[s + (a,)])
        if isinstance(q, QTable):
            q.visits[s + (a,)] += 1
    except IndexError as exc:
        raise DomainError(f"invalid Q-table index: {exc}") from exc
    return q


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def epsilon_greedy(q, s, epsilon: float, rng, feasible: np.ndarray | None = None) -> int:
    """Explore uniformly over feasible actions with probability ``epsilon``, else act greedily.

    Infeasible actions are excluded from both branches; greedy ties go to
    the lowest index.
    """
    if not 0 <= epsilon <= 1:
        raise DomainError("epsilon must lie in [0, 1]")
    vals = q.values if isinstance(q, QTable) else q
    row = np.asarray(vals[s], dtype=float)
    mask = np.ones(row.shape, dtype=bool) if feasible is None else np.asarray(feasible, dtype=bool)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise FeasibilityError("no feasible action")
    gen = _generator(rng)
    if epsilon > 0 and gen.random() < epsilon:
        return int(idx[gen.integers(idx.size)])
    return int(idx[np.argmax(row[idx])])


def feasible_actions(grid: Grid, m: int, placed: dict[int, int], min_spacing: float) -> np.ndarray:
    """Mask over subarea ``m``'s candidates respecting ``min_spacing`` to ``placed``.

    ``placed`` maps other subareas to their current global candidate index.
    """
    cand = grid.points[grid.members[m]]
    others = [g for s, g in placed.items() if s != m]
    if not others or min_spacing <= 0:
        return np.ones(cand.shape[0], dtype=bool)
    pts = grid.points[others]
    d = np.sqrt(((cand[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    return (d >= min_spacing * (1 - 1e-12)).all(axis=1)


def _spacing(grid: Grid, params: LearnParams) -> float:
    if params.min_spacing is not None:
        return params.min_spacing
    p = grid.points
    if p.shape[0] < 2:
        return 0.0
    # grid pitch = smallest nonzero coordinate step
    steps = [np.diff(np.unique(p[:, k])) for k in (0, 1)]
    steps = [s[s > 0].min() for s in steps if s.size and (s > 0).any()]
    return float(min(steps)) if steps else 0.0


def _random_configuration(grid: Grid, gen, d_min: float) -> np.ndarray:
    m_count, k = grid.members.shape
    for _ in range(100):
        placed: dict[int, int] = {}
        local = np.empty(m_count, dtype=int)
        for m in range(m_count):
            mask = feasible_actions(grid, m, placed, d_min)
            idx = np.flatnonzero(mask)
            if idx.size == 0:
                break
            local[m] = idx[gen.integers(idx.size)]
            placed[m] = int(grid.members[m, local[m]])
        else:
            return local
    raise FeasibilityError("could not draw a feasible initial configuration")


def _reward_scale(reward, grid: Grid, gen, d_min: float) -> float:
    ub = reward.upper_bound() if isinstance(reward, RewardOracle) else None
    if ub is None:
        # no bound available: probe random configurations
        ub = max(reward(_random_configuration(grid, gen, d_min)) for _ in range(8 * grid.members.shape[0]))
    ub = float(ub)
    return ub if ub > 0 and math.isfinite(ub) else 1.0


def train(grid: Grid, reward: Callable[[Sequence[int]], float], params: LearnParams, rng):
    """Train a Q-table against ``reward``.

    Each episode starts from a random feasible configuration and runs
    ``params.steps(M)`` round-robin moves. A move of element ``m`` is
    rewarded by ``share(m) - 1``, the element's marginal amplitude
    ``sqrt(r) - sqrt(r without m)`` over its largest possible value. For a
    coherent sum the amplitude is additive, so the share is exactly the
    element's own term and does not depend on the other elements. Oracles
    without :meth:`RewardOracle.share` use ``sqrt(r / r_max) - 1``. Either
    signal is non-positive, so unvisited zero entries are optimistic and
    every action gets tried. Training stops when the best
    reward has not improved for ``convergence_window`` episodes.

    Returns ``(q, trace)`` with ``trace`` a list of ``(episode, best_reward)``
    in raw reward units.
    """
    gen = _generator(rng)
    m_count, k = grid.members.shape
    d_min = _spacing(grid, params)
    q = QTable.zeros(m_count, k)
    share = reward.share if isinstance(reward, RewardOracle) and type(reward).share is not RewardOracle.share else None
    scale = 1.0 if share is not None else math.sqrt(_reward_scale(reward, grid, gen, d_min))
    best = -np.inf
    trace: list[tuple[int, float]] = []
    stale = 0
    steps = params.steps(m_count)
    # conflict[m][a, s]: candidate a of subarea m is too close to candidate j of subarea s
    conflict = None
    if d_min > 0 and m_count > 1:
        pts = grid.points[grid.members]  # (M, K, 2)
        d = np.sqrt(((pts[:, :, None, None, :] - pts[None, None, :, :, :]) ** 2).sum(-1))
        conflict = d < d_min * (1 - 1e-12)  # (M, K, M, K)
    others = [np.array([s for s in range(m_count) if s != m], dtype=int) for m in range(m_count)]
    for ep in range(params.episodes):
        local = _random_configuration(grid, gen, d_min)
        improved = False
        r0 = reward(local)
        if r0 > best:
            best, improved = r0, True
        for t in range(steps):
            m = t % m_count
            if conflict is None:
                mask = None
            else:
                mask = ~conflict[m, :, others[m], local[others[m]]].any(axis=0)
                mask[local[m]] = True  # staying put is always allowed
            s = (m, int(local[m]))
            a = epsilon_greedy(q, s, params.epsilon, gen, mask)
            local[m] = a
            r = reward(local)
            nxt = (m + 1) % m_count
            sig = share(local, m) if share is not None else _amp(r) / scale
            q_update(q, s, a, sig - 1.0, (nxt, int(local[nxt])), params)
            if r > best:
                best, improved = r, True
        trace.append((ep, float(best)))
        stale = 0 if improved else stale + 1
        if stale >= params.window:
            break
    return q, trace


def _amp(r: float) -> float:
    return math.sqrt(r) if r > 0 else 0.0


def _action_scores(values: np.ndarray, visits: np.ndarray | None, alpha: float = 0.1) -> np.ndarray:
    """Score of action ``a``: mean of ``Q[..., p, a]`` over the states ``p`` where it was tried.

    Each entry is first corrected for its zero start: after ``n`` updates it
    holds about ``1 - (1 - alpha)^n`` of its target. Actions never tried
    score ``-inf``. Without visit counts the plain ``max_p Q`` is used.
    """
    if visits is None:
        return values.max(axis=-2)
    seen = visits > 0
    weight = np.where(seen, 1.0 - (1.0 - alpha) ** visits, 1.0)
    total = np.where(seen, values / weight, 0.0).sum(axis=-2)
    count = seen.sum(axis=-2)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(count > 0, total / np.maximum(count, 1), -np.inf)


def extract_greedy(q, grid: Grid, min_spacing: float | None = None, alpha: float = 0.1) -> Configuration:
    """Sequential greedy read-out of a trained table.

    Subarea ``m`` scores action ``a`` by its bias-corrected value averaged
    over the states where it was tried (``max_p Q[m, p, a]`` for a bare
    array; ``alpha`` must match training) and takes the best action that keeps ``min_spacing`` to the
    elements already placed.
    """
    values = q.values if isinstance(q, QTable) else np.asarray(q)
    visits = q.visits if isinstance(q, QTable) else None
    m_count, k = grid.members.shape
    if values.shape != (m_count, k, k):
        raise DomainError(f"Q-table shape {values.shape} does not match grid ({m_count}, {k}, {k})")
    d_min = _spacing(grid, LearnParams(min_spacing=min_spacing))
    scores = _action_scores(values, visits, alpha)
    placed: dict[int, int] = {}
    chosen = []
    for m in range(m_count):
        mask = feasible_actions(grid, m, placed, d_min)
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            raise FeasibilityError(f"no feasible position left for subarea {m}")
        a = int(idx[np.argmax(scores[m, idx])])
        placed[m] = int(grid.members[m, a])
        chosen.append(placed[m])
    return Configuration.from_indices(grid, chosen)


@numba.njit(cache=True)
def _episode_kernel(c, cmax, q, n, best, init, u, ra, eps, alpha, delta):  # pragma: no cover - compiled
    b_count, m_count, k, n_ant = c.shape
    steps = u.shape[1]
    s = np.empty(n_ant, dtype=np.complex128)
    local = np.empty(m_count, dtype=np.int64)
    for b in range(b_count):
        for m in range(m_count):
            local[m] = init[b, m]
        r = 0.0
        for j in range(n_ant):
            s[j] = c[b, 0, local[0], j]
            for m in range(1, m_count):
                s[j] += c[b, m, local[m], j]
            r += s[j].real ** 2 + s[j].imag ** 2
        if r > best[b]:
            best[b] = r
        for t in range(steps):
            m = t % m_count
            cur = local[m]
            if u[b, t] < eps:
                a = ra[b, t]
            else:
                a = 0
                for j in range(1, k):
                    if q[b, m, cur, j] > q[b, m, cur, a]:
                        a = j
            r = 0.0
            rest = 0.0
            for j in range(n_ant):
                s[j] += c[b, m, a, j] - c[b, m, cur, j]
                r += s[j].real ** 2 + s[j].imag ** 2
                d = s[j] - c[b, m, a, j]
                rest += d.real ** 2 + d.imag ** 2
            local[m] = a
            nxt = (m + 1) % m_count
            qn = q[b, nxt, local[nxt], 0]
            for j in range(1, k):
                if q[b, nxt, local[nxt], j] > qn:
                    qn = q[b, nxt, local[nxt], j]
            sig = (math.sqrt(r) - math.sqrt(rest)) / cmax[b, m] - 1.0
            q[b, m, cur, a] += alpha * (sig + delta * qn - q[b, m, cur, a])
            n[b, m, cur, a] += 1
            if r > best[b]:
                best[b] = r


def _episode_numpy(c, cmax, q, n, best, init, u, ra, eps, alpha, delta):
    b_count, m_count, k, n_ant = c.shape
    rows = np.arange(b_count)
    local = init.copy()
    s_vec = c[rows, 0, local[:, 0]].copy()
    for m in range(1, m_count):
        s_vec += c[rows, m, local[:, m]]
    r = (s_vec.real**2 + s_vec.imag**2).sum(-1)
    np.maximum(best, r, out=best)
    for t in range(u.shape[0]):
        m = t % m_count
        cur = local[:, m].copy()
        greedy = q[rows, m, cur].argmax(axis=1)
        act = np.where(u[t] < eps, ra[t], greedy)
        s_vec += c[rows, m, act] - c[rows, m, cur]
        r = (s_vec.real**2 + s_vec.imag**2).sum(-1)
        rest = s_vec - c[rows, m, act]
        share = (np.sqrt(r) - np.sqrt((rest.real**2 + rest.imag**2).sum(-1))) / cmax[:, m]
        local[:, m] = act
        nxt = (m + 1) % m_count
        target = share - 1.0 + delta * q[rows, nxt, local[:, nxt]].max(axis=1)
        q[rows, m, cur, act] += alpha * (target - q[rows, m, cur, act])
        n[rows, m, cur, act] += 1
        np.maximum(best, r, out=best)


def train_batch(contrib: np.ndarray, params: LearnParams, rng, engine: str = "numba") -> tuple[np.ndarray, np.ndarray]:
    """Independent Q-learning runs on many realizations.

    ``contrib`` has shape ``(B, M, K, L)``; run ``b`` maximizes
    ``|| sum_m contrib[b, m, p_m] ||^2`` with the same update, reward shift
    and read-out as :func:`train`. Candidate spacing is assumed to be at
    least the minimum spacing (true whenever ``D`` does not exceed the grid
    pitch), so no masking is applied, and every run uses the full episode
    budget. ``engine`` is ``'numba'`` (compiled loop) or ``'numpy'``
    (vectorized across runs); both consume the same random draws.

    Returns ``(local_positions (B, M), best_reward (B,))``.
    """
    if engine not in ("numba", "numpy"):
        raise DomainError(f"unknown engine {engine!r}")
    gen = _generator(rng)
    contrib = np.asarray(contrib)
    if contrib.ndim != 4:
        raise DomainError("contrib must have shape (B, M, K, L)")
    b, m_count, k, n_ant = contrib.shape
    q = np.zeros((b, m_count, k, k))
    n = np.zeros((b, m_count, k, k), dtype=np.int32)
    best = np.full(b, -np.inf)
    steps = params.steps(m_count)
    peak = np.linalg.norm(contrib, axis=-1).max(axis=2).sum(axis=1)
    scale = np.where(peak > 0, peak, 1.0)
    c = np.ascontiguousarray(contrib / scale[:, None, None, None], dtype=np.complex128)
    cmax = np.linalg.norm(c, axis=-1).max(axis=2)
    cmax = np.where(cmax > 0, cmax, 1.0)
    for _ in range(params.episodes):
        init = gen.integers(k, size=(b, m_count))
        u = gen.random((steps, b))
        ra = gen.integers(k, size=(steps, b))
        if engine == "numba":
            # per-run rows contiguous for the compiled loop
            _episode_kernel(c, cmax, q, n, best, init, np.ascontiguousarray(u.T), np.ascontiguousarray(ra.T),
                            params.epsilon, params.alpha, params.delta)
        else:
            _episode_numpy(c, cmax, q, n, best, init, u, ra, params.epsilon, params.alpha, params.delta)
    chosen = _action_scores(q, n, params.alpha).argmax(axis=2)
    return chosen, best * scale**2


def trace_to_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["episode", "best_reward"])
    for ep, r in trace:
        w.writerow([ep, repr(float(r))])
    return buf.getvalue()
