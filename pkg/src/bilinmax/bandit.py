"""Linear bandit simulation with an optimistic agent that solves the bilinear program each round.

Also the one-dimensional epsilon-LinUCB construction, where an agent that
is only (1 - eps)-optimal on every round's bilinear program suffers linear
regret.
"""

from __future__ import annotations

import dataclasses
import math
import time
from collections.abc import Callable, Iterable

import numpy as np

from .core import BilinearInstance, Solution
from .generators import STREAM_BANDIT, make_rng
from .maxnorm import solve_maxnorm
from .newton import solve_newton
from .special import solve_centered_diagonal

NORM_PRESETS = (1.0, 10.0, 50.0)
STREAM_ZETA = STREAM_BANDIT + 1

SolverFn = Callable[[BilinearInstance, float], Solution]

SOLVERS: dict[str, SolverFn] = {
    "maxnorm": lambda inst, eps: solve_maxnorm(inst, eps),
    "newton": lambda inst, eps: solve_newton(inst, eps),
}


@dataclasses.dataclass
class BanditEnv:
    """Gaussian linear rewards ``y = x^T zeta + sigma z`` over the unit ball."""

    zeta: np.ndarray
    horizon: int
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.zeta = np.asarray(self.zeta, dtype=float).reshape(-1)
        self._noise = make_rng(self.seed, STREAM_BANDIT)

    @classmethod
    def random(cls, d: int, norm: float, horizon: int, seed: int = 0, sigma: float = 1.0) -> "BanditEnv":
        """Uniformly random direction scaled to ``norm``."""
        g = make_rng(seed, STREAM_ZETA).standard_normal(d)
        return cls(norm * g / np.linalg.norm(g), horizon, sigma, seed)

    @property
    def dim(self) -> int:
        return self.zeta.shape[0]

    @property
    def best_reward(self) -> float:
        return float(np.linalg.norm(self.zeta))

    def pull(self, x: np.ndarray) -> float:
        return float(x @ self.zeta + self.sigma * self._noise.standard_normal())


@dataclasses.dataclass
class RegretTrace:
    actions: np.ndarray
    rewards: np.ndarray
    regret: np.ndarray  # instantaneous, expected
    solver_time: np.ndarray
    contained: np.ndarray | None = None
    snapshots: dict = dataclasses.field(default_factory=dict)
    meta: dict = dataclasses.field(default_factory=dict)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.regret)

    @property
    def horizon(self) -> int:
        return self.regret.shape[0]

    def regret_at(self, t: int) -> float:
        """Cumulative regret after ``t`` rounds."""
        return float(np.sum(self.regret[:t]))

    def rows(self):
        """(t, x . zeta, instantaneous regret, cumulative regret, solver time) per round."""
        cum = self.cumulative
        played = self.meta.get("played_value")
        for k in range(self.horizon):
            yield (k + 1, float(played[k]), float(self.regret[k]), float(cum[k]),
                   float(self.solver_time[k]))


def oful_radius(V: np.ndarray, regularizer: float, norm_bound: float, delta: float,
                sigma: float = 1.0) -> float:
    """``sqrt(beta) = sigma sqrt(2 log(1/delta) + log det(V / reg)) + sqrt(reg) S``."""
    _, logdet = np.linalg.slogdet(V / regularizer)
    return sigma * math.sqrt(2.0 * math.log(1.0 / delta) + logdet) + math.sqrt(regularizer) * norm_bound


def run_optimistic(env: BanditEnv, solver: str | SolverFn = "maxnorm", regularizer: float = 1.0,
                   norm_bound: float | None = None, delta: float | None = None,
                   epsilon: float = 1e-8, snapshot_times: Iterable[int] = ()) -> RegretTrace:
    """Optimism in the face of uncertainty with the OFUL ellipsoid.

    Round t solves the bilinear program with ``A = I``, ``c = zeta_hat`` and
    ``W = V / beta``. The first round has no data, so c = 0 and the
    centered closed form is used.
    """
    solve = SOLVERS[solver] if isinstance(solver, str) else solver
    d, T = env.dim, env.horizon
    S = env.best_reward if norm_bound is None else norm_bound
    delta = 1.0 / T if delta is None else delta
    snapshot_times = set(snapshot_times)

    V = regularizer * np.eye(d)
    xy = np.zeros(d)
    actions = np.zeros((T, d))
    rewards = np.zeros(T)
    regret = np.zeros(T)
    played = np.zeros(T)
    solver_time = np.zeros(T)
    contained = np.zeros(T, dtype=bool)
    snapshots = {}
    for k in range(T):
        zeta_hat = np.linalg.solve(V, xy)
        sqrt_beta = oful_radius(V, regularizer, S, delta, env.sigma)
        W = V / sqrt_beta**2
        err = env.zeta - zeta_hat
        contained[k] = float(err @ W @ err) <= 1.0
        if k + 1 in snapshot_times:
            snapshots[k + 1] = (zeta_hat.copy(), W.copy())
        inst = BilinearInstance.from_arrays(np.eye(d), W, zeta_hat)
        t0 = time.perf_counter()
        if np.any(zeta_hat):
            sol = solve(inst, epsilon)
        else:
            from .core import diagonalize

            sol = solve_centered_diagonal(diagonalize(inst))
        solver_time[k] = time.perf_counter() - t0
        x = sol.x
        y = env.pull(x)
        actions[k] = x
        rewards[k] = y
        played[k] = float(x @ env.zeta)
        regret[k] = env.best_reward - played[k]
        V += np.outer(x, x)
        xy += y * x
    name = solver if isinstance(solver, str) else getattr(solver, "__name__", "custom")
    return RegretTrace(actions, rewards, regret, solver_time, contained, snapshots,
                       {"solver": name, "played_value": played, "sqrt_beta_final": sqrt_beta})


@dataclasses.dataclass(frozen=True)
class OneDimConfidence:
    """``C_t = [zeta_hat - f(t)/sqrt(V_t), zeta_hat + f(t)/sqrt(V_t)]``."""

    V: float
    zeta_hat: float
    horizon: int
    t: int

    @property
    def f(self) -> float:
        return 1.0 + math.sqrt(math.log(self.horizon + self.t * self.horizon))

    @property
    def radius(self) -> float:
        return self.f / math.sqrt(self.V)

    @property
    def low(self) -> float:
        return self.zeta_hat - self.radius

    @property
    def high(self) -> float:
        return self.zeta_hat + self.radius


def switch_time_bound(eps: float, T: int) -> float:
    """``t_eps = 4 (1 + sqrt(log(T + T^2))) / (1 - eps)^2``."""
    return 4.0 * (1.0 + math.sqrt(math.log(T + T * T))) / (1.0 - eps) ** 2


def _optimistic_value(x: float, conf: OneDimConfidence) -> float:
    return x * (conf.high if x >= 0 else conf.low)


def _run_one_dim(actions_fn, eps: float, T: int, zeta: float, noise: np.ndarray, opt_reward: float,
                 action_set_max: Callable[[OneDimConfidence], float]):
    V, sxy = 1.0, 0.0
    xs = np.zeros(T)
    regret = np.zeros(T)
    certificate_ok = np.ones(T, dtype=bool)
    for k in range(T):
        conf = OneDimConfidence(V, sxy / V, T, k + 1)
        x = actions_fn(conf)
        best = action_set_max(conf)
        # played pair must reach (1 - eps) of the optimistic optimum
        certificate_ok[k] = _optimistic_value(x, conf) >= (1.0 - eps) * best - 1e-12 * abs(best)
        y = x * zeta + noise[k]
        xs[k] = x
        regret[k] = opt_reward - x * zeta
        V += x * x
        sxy += y * x
    return xs, regret, certificate_ok


def _trace_1d(xs, regret, cert, zeta, meta) -> RegretTrace:
    T = xs.shape[0]
    return RegretTrace(xs.reshape(T, 1), xs * zeta, regret, np.zeros(T), None, {},
                       dict(meta, played_value=xs * zeta, certificate_ok=cert))


def run_eps_linucb_demo(eps: float, T: int, seed: int = 0, zeta: float = 1.0,
                        sigma: float = 1.0) -> tuple[RegretTrace, RegretTrace]:
    """Discrete actions ``{1 - eps, 1}``: approximate vs exact optimist on identical noise.

    The approximate agent plays ``1 - eps`` whenever ``C_t`` lies in the
    positive half-line, which keeps it (1 - eps)-optimal on every round.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must be in [0, 1)")
    noise = sigma * make_rng(seed, STREAM_BANDIT).standard_normal(T)
    X = (1.0 - eps, 1.0)
    opt = max(x * zeta for x in X)

    def best(conf):
        return max(_optimistic_value(x, conf) for x in X)

    def exact(conf):
        # first maximizer in X on ties
        vals = [_optimistic_value(x, conf) for x in X]
        return X[int(np.argmax(vals))]

    def approx(conf):
        return X[0] if conf.low > 0.0 else exact(conf)

    meta = {"eps": eps, "seed": seed, "t_eps": switch_time_bound(eps, T)}
    a = _run_one_dim(approx, eps, T, zeta, noise, opt, best)
    e = _run_one_dim(exact, eps, T, zeta, noise, opt, best)
    switch = np.flatnonzero(a[0] == X[0])
    first = int(switch[0]) + 1 if switch.size and eps > 0 else None
    return (_trace_1d(*a, zeta, dict(meta, agent="approx", switch_round=first)),
            _trace_1d(*e, zeta, dict(meta, agent="exact")))


def run_eps_linucb_interval(eps: float, T: int, a: float = -1.0, b: float = 1.0, seed: int = 0,
                            zeta: float = 1.0, sigma: float = 1.0) -> tuple[RegretTrace, RegretTrace]:
    """Interval actions ``[a, b]`` with ``a < 0 < b``; the approximate agent scales by ``1 - eps``."""
    if not a < 0.0 < b:
        raise ValueError("need a < 0 < b")
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must be in [0, 1)")
    noise = sigma * make_rng(seed, STREAM_BANDIT).standard_normal(T)
    opt = max(a * zeta, b * zeta)

    def best(conf):
        return max(b * conf.high, a * conf.low)

    def exact(conf):
        return b if b * conf.high >= a * conf.low else a

    def approx(conf):
        return (1.0 - eps) * exact(conf)

    meta = {"eps": eps, "seed": seed, "interval": (a, b)}
    ra = _run_one_dim(approx, eps, T, zeta, noise, opt, best)
    re_ = _run_one_dim(exact, eps, T, zeta, noise, opt, best)
    return (_trace_1d(*ra, zeta, dict(meta, agent="approx")),
            _trace_1d(*re_, zeta, dict(meta, agent="exact")))
