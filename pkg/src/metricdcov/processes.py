"""
Seeded generators of strictly stationary paired sequences.

Every generator starts in its stationary law, so ``simulate`` returns a
stretch of a strictly stationary process.  Finite-state Markov specs also
expose their exact beta-mixing profile and the exact stationary joint law of
``(X_1, Y_1)``, which is what population targets are computed from.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from .core import CostCapExceeded, DiscreteJointDistribution, PairedSample, _take
from .metric import Space, euclidean
from .seeding import seed_sequence

STOCHASTIC_TOL = 1e-12

EMISSIONS = {
    "identity": lambda v: v,
    "square": np.square,
    "abs": np.abs,
    "sign": np.sign,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "cube": lambda v: v**3,
}


def check_stochastic(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ValueError("transition matrix must be square and non-empty")
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > STOCHASTIC_TOL):
        raise ValueError("transition matrix must be row-stochastic")
    return P


def stationary_distribution(P) -> np.ndarray:
    """Stationary vector of a row-stochastic matrix (unique solution assumed).

    Solved as a least-squares system ``pi (P - I) = 0`` with ``sum(pi) = 1``.
    For reducible chains this returns one of the stationary laws; pass ``pi``
    explicitly when a specific one is intended.
    """
    P = check_stochastic(P)
    s = P.shape[0]
    lhs = np.vstack([(P - np.eye(s)).T, np.ones((1, s))])
    rhs = np.zeros(s + 1)
    rhs[-1] = 1.0
    pi = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _check_pi(P, pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (P.shape[0],) or np.any(pi < 0) or abs(pi.sum() - 1) > STOCHASTIC_TOL:
        raise ValueError("pi must be a probability vector matching P")
    if np.max(np.abs(pi @ P - pi)) > STOCHASTIC_TOL:
        raise ValueError("pi is not stationary for P")
    return pi


def _markov_path(P, pi, n: int, rng) -> np.ndarray:
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(n)
    states = np.empty(n, dtype=np.int64)
    s = int(np.searchsorted(np.cumsum(pi), u[0], side="right"))
    s = min(s, len(pi) - 1)
    states[0] = s
    for t in range(1, n):
        s = int(np.searchsorted(cum[s], u[t], side="right"))
        states[t] = s
    return states


@dataclass(frozen=True, eq=False)
class MarkovPair:
    """Stationary Markov chain on states ``0..S-1`` emitting ``(x(s), y(s))``."""

    P: Any
    emit_x: Any
    emit_y: Any
    space_x: Space
    space_y: Space
    pi: Any = None
    kind: str = field(default="markov_pair", init=False)

    def __post_init__(self):
        P = check_stochastic(self.P)
        pi = stationary_distribution(P) if self.pi is None else _check_pi(P, self.pi)
        ex = self.space_x.as_points(self.emit_x)
        ey = self.space_y.as_points(self.emit_y)
        if len(ex) != P.shape[0] or len(ey) != P.shape[0]:
            raise ValueError("need one x and one y emission per state")
        for name, value in (("P", P), ("pi", pi), ("emit_x", ex), ("emit_y", ey)):
            object.__setattr__(self, name, value)

    def simulate(self, n: int, seed) -> PairedSample:
        rng = np.random.default_rng(seed_sequence(seed))
        states = _markov_path(self.P, self.pi, n, rng)
        return PairedSample(_take(self.emit_x, states), _take(self.emit_y, states),
                            self.space_x, self.space_y)

    def joint(self) -> DiscreteJointDistribution:
        return DiscreteJointDistribution(self.emit_x, self.emit_y, self.pi,
                                         self.space_x, self.space_y)

    def mixing_profile(self, lags) -> "MixingProfile":
        return markov_beta_mixing(self.P, self.pi, lags)

    @property
    def is_iid(self) -> bool:
        return bool(np.allclose(self.P, self.pi[None, :], atol=STOCHASTIC_TOL))


@dataclass(frozen=True, eq=False)
class IIDDiscrete:
    """IID draws from a finite joint law."""

    joint_law: DiscreteJointDistribution
    kind: str = field(default="iid", init=False)

    @property
    def space_x(self):
        return self.joint_law.space_x

    @property
    def space_y(self):
        return self.joint_law.space_y

    def simulate(self, n: int, seed) -> PairedSample:
        rng = np.random.default_rng(seed_sequence(seed))
        return self.joint_law.sample(n, rng)

    def joint(self) -> DiscreteJointDistribution:
        return self.joint_law

    is_iid = True


@dataclass(frozen=True, eq=False)
class GaussianCopula:
    """IID pairs ``(Phi(G1), Phi(G2))`` with ``corr(G1, G2) = rho``, on the real line."""

    rho: float
    space_x: Space = field(default_factory=euclidean)
    space_y: Space = field(default_factory=euclidean)
    kind: str = field(default="iid_copula", init=False)

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("copula correlation must lie in [-1, 1]")

    def simulate(self, n: int, seed) -> PairedSample:
        rng = np.random.default_rng(seed_sequence(seed))
        g1 = rng.standard_normal(n)
        g2 = self.rho * g1 + np.sqrt(1.0 - self.rho**2) * rng.standard_normal(n)
        return PairedSample(stats.norm.cdf(g1), stats.norm.cdf(g2), self.space_x, self.space_y)

    def joint(self):
        raise TypeError("the Gaussian copula has no finite support")

    is_iid = True


@dataclass(frozen=True, eq=False)
class AR1Latent:
    """Stationary Gaussian AR(1) latent ``L_t`` with emissions ``x(L_t)``, ``y(L_t)``.

    ``L_t = rho L_{t-1} + sqrt(1 - rho**2) eps_t`` with ``L_1 ~ N(0, 1)``.
    Such chains are geometrically beta-mixing; no exact coefficients are
    provided.
    """

    rho: float
    x_map: str = "identity"
    y_map: str = "identity"
    space_x: Space = field(default_factory=euclidean)
    space_y: Space = field(default_factory=euclidean)
    kind: str = field(default="ar1_latent", init=False)

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ValueError("AR(1) coefficient must satisfy |rho| < 1")
        for name in (self.x_map, self.y_map):
            if name not in EMISSIONS:
                raise ValueError(f"unknown emission {name!r}; choose from {sorted(EMISSIONS)}")

    def latent(self, n: int, seed) -> np.ndarray:
        rng = np.random.default_rng(seed_sequence(seed))
        eps = rng.standard_normal(n)
        out = np.empty(n)
        out[0] = eps[0]
        scale = np.sqrt(1.0 - self.rho**2)
        for t in range(1, n):
            out[t] = self.rho * out[t - 1] + scale * eps[t]
        return out

    def simulate(self, n: int, seed) -> PairedSample:
        lat = self.latent(n, seed)
        return PairedSample(EMISSIONS[self.x_map](lat), EMISSIONS[self.y_map](lat),
                            self.space_x, self.space_y)

    def joint(self):
        raise TypeError("the AR(1) latent process has no finite support")

    is_iid = False


@dataclass(frozen=True, eq=False)
class IndependentProduct:
    """X taken from ``spec_x`` and Y from ``spec_y``, driven by independent streams."""

    spec_x: Any
    spec_y: Any
    kind: str = field(default="independent_product", init=False)

    @property
    def space_x(self):
        return self.spec_x.space_x

    @property
    def space_y(self):
        return self.spec_y.space_y

    def simulate(self, n: int, seed) -> PairedSample:
        sx, sy = seed_sequence(seed).spawn(2)
        a = self.spec_x.simulate(n, sx)
        b = self.spec_y.simulate(n, sy)
        return PairedSample(a.xs, b.ys, self.space_x, self.space_y)

    def joint(self) -> DiscreteJointDistribution:
        jx, jy = self.spec_x.joint(), self.spec_y.joint()
        i, j = np.meshgrid(np.arange(jx.size), np.arange(jy.size), indexing="ij")
        i, j = i.ravel(), j.ravel()
        probs = (jx.probs[:, None] * jy.probs[None, :]).ravel()
        return DiscreteJointDistribution(_take(jx.xs, i), _take(jy.ys, j), probs,
                                         self.space_x, self.space_y)

    @property
    def is_iid(self) -> bool:
        return bool(getattr(self.spec_x, "is_iid", False) and getattr(self.spec_y, "is_iid", False))

    independent = True


def simulate(spec, n: int, seed) -> PairedSample:
    """Draw ``n`` consecutive observations of ``spec``; deterministic given ``seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return spec.simulate(int(n), seed)


def is_independent(spec) -> bool:
    """Whether X and Y are independent under ``spec`` (decided exactly where possible)."""
    if isinstance(spec, IndependentProduct):
        return True
    if isinstance(spec, GaussianCopula):
        return spec.rho == 0.0
    try:
        return population_dcov(spec.joint()) <= 1e-15
    except (TypeError, CostCapExceeded):
        return False


@dataclass(frozen=True, eq=False)
class MixingProfile:
    lags: np.ndarray
    beta_values: np.ndarray
    alpha_upper: np.ndarray

    def rows(self):
        return list(zip(self.lags.tolist(), self.beta_values.tolist(), self.alpha_upper.tolist()))


def markov_beta_mixing(P, pi=None, lags=range(1, 11)) -> MixingProfile:
    """Exact beta-mixing coefficients of a stationary finite-state chain.

    ``beta(n) = sum_i pi_i TV(P^n(i, .), pi)`` with TV half the L1 distance.
    ``alpha_upper = beta / 2`` uses ``2 alpha(n) <= beta(n)``.
    """
    P = check_stochastic(P)
    pi = stationary_distribution(P) if pi is None else _check_pi(P, pi)
    lags = np.asarray(list(lags), dtype=np.int64)
    if lags.size and lags.min() < 0:
        raise ValueError("lags must be non-negative")
    betas = np.empty(len(lags))
    cache = {}
    for k, lag in enumerate(lags):
        lag = int(lag)
        if lag not in cache:
            cache[lag] = np.linalg.matrix_power(P, lag)
        tv = 0.5 * np.abs(cache[lag] - pi[None, :]).sum(axis=1)
        betas[k] = float(pi @ tv)
    return MixingProfile(lags, betas, betas / 2.0)


def second_eigenvalue_modulus(P) -> float:
    w = np.sort(np.abs(np.linalg.eigvals(check_stochastic(P))))[::-1]
    return float(w[1]) if len(w) > 1 else 0.0


def population_dcov(theta: DiscreteJointDistribution, max_atoms: int = 5000) -> float:
    """Exact distance covariance of a finitely supported law.

    Computes ``a``, ``D`` and the centred distances on the atoms and returns
    ``sum_{k,l} p_k p_l delta(z_k, z_l)``.
    """
    if theta.size > max_atoms:
        raise CostCapExceeded(f"support of {theta.size} atoms exceeds cap {max_atoms}")
    return float(theta.probs @ theta.delta() @ theta.probs)


def symmetric_two_state(p: float) -> np.ndarray:
    """Two-state chain that switches with probability ``p``."""
    return np.array([[1 - p, p], [p, 1 - p]])


def lazy_cycle(states: int, stay: float) -> np.ndarray:
    """Chain that stays with probability ``stay`` and otherwise jumps uniformly elsewhere."""
    P = np.full((states, states), (1 - stay) / (states - 1))
    np.fill_diagonal(P, stay)
    return P


def spec_from_config(cfg: dict):
    """Build a process spec from a kind-tagged config block."""
    from .metric import space_from_config

    kind = cfg["kind"]
    if kind == "markov_pair":
        sx = space_from_config(cfg.get("space_x", {"kind": "euclidean", "dim": 1}))
        sy = space_from_config(cfg.get("space_y", {"kind": "euclidean", "dim": 1}))
        return MarkovPair(cfg["P"], _emissions(cfg["emit_x"], sx), _emissions(cfg["emit_y"], sy),
                          sx, sy, cfg.get("pi"))
    if kind == "iid":
        if "rho" in cfg:
            return GaussianCopula(float(cfg["rho"]))
        sx = space_from_config(cfg.get("space_x", {"kind": "euclidean", "dim": 1}))
        sy = space_from_config(cfg.get("space_y", {"kind": "euclidean", "dim": 1}))
        atoms = cfg["atoms"]
        law = DiscreteJointDistribution(_emissions([a[0] for a in atoms], sx),
                                        _emissions([a[1] for a in atoms], sy),
                                        cfg["probs"], sx, sy)
        return IIDDiscrete(law)
    if kind == "ar1_latent":
        return AR1Latent(float(cfg["rho"]), cfg.get("x_map", "identity"), cfg.get("y_map", "identity"))
    if kind == "independent_product":
        return IndependentProduct(spec_from_config(cfg["x"]), spec_from_config(cfg["y"]))
    raise ValueError(f"unknown process kind {kind!r}")


def _emissions(values, space: Space):
    if space.kind == "discrete":
        if all(isinstance(v, (int, np.integer)) for v in values):
            return np.asarray(values, dtype=np.int64)
        return space.encode(values)
    return values
