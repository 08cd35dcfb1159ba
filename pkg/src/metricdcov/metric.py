"""
Metric and beta-pseudometric spaces.

A :class:`Space` bundles a base metric with an exponent ``beta`` in (0, 2];
its distance is the base metric raised to ``beta``.  Points are plain
payloads: real vectors for ``euclidean`` and ``hilbert_l2`` spaces, integer
symbol indices for ``discrete`` spaces and arbitrary objects for
``user_defined`` spaces.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

KINDS = ("euclidean", "discrete", "hilbert_l2", "user_defined")

# slack used when counting weak-triangle violations
TRIANGLE_SLACK = 1e-12


class IncompatiblePointError(TypeError):
    """A point payload does not match the kind of its space."""


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not (0.0 < beta <= 2.0):
        raise ValueError(f"beta must lie in (0, 2], got {beta}")
    return beta


@dataclass(frozen=True)
class Space:
    """A separable (pseudo)metric space with distance ``d(p, q) ** beta``.

    Use the constructors :func:`euclidean`, :func:`discrete`,
    :func:`hilbert_l2` and :func:`user_defined` rather than building
    instances by hand.
    """

    kind: str
    dim: int | None = None
    alphabet: tuple | None = None
    beta: float = 1.0
    metric: Callable[[Any, Any], float] | None = field(default=None, compare=False)
    id: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        _check_beta(self.beta)
        if self.kind in ("euclidean", "hilbert_l2") and (self.dim is None or self.dim < 1):
            raise ValueError(f"{self.kind} space needs dim >= 1")
        if self.kind == "discrete" and not self.alphabet:
            raise ValueError("discrete space needs a non-empty alphabet")
        if self.kind == "user_defined" and self.metric is None:
            raise ValueError("user_defined space needs a distance callback")

    @property
    def negative_type(self) -> bool:
        """Whether the space is known to be of negative type.

        Built-in spaces embed isometrically into a Hilbert space, so their
        ``beta`` powers are of negative type for every beta in (0, 2].
        Nothing is claimed for user-defined metrics.
        """
        return self.kind != "user_defined"

    @property
    def alphabet_size(self) -> int:
        return len(self.alphabet) if self.alphabet else 0

    def as_points(self, points) -> Any:
        """Coerce a collection of points into the canonical payload layout.

        Returns an ``(n, dim)`` float array for vector spaces, an ``(n,)``
        integer array of symbol indices for discrete spaces and a list for
        user-defined spaces.
        """
        if self.kind in ("euclidean", "hilbert_l2"):
            arr = np.asarray(points, dtype=float)
            if arr.ndim == 1 and self.dim == 1:
                arr = arr[:, None]
            if arr.ndim != 2 or arr.shape[1] != self.dim:
                raise IncompatiblePointError(
                    f"expected points of dimension {self.dim}, got array of shape {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise IncompatiblePointError("points must be finite")
            return arr
        if self.kind == "discrete":
            arr = np.asarray(points)
            if arr.ndim != 1 or not np.issubdtype(arr.dtype, np.integer):
                raise IncompatiblePointError("discrete points must be a 1-d array of symbol indices")
            if arr.size and (arr.min() < 0 or arr.max() >= self.alphabet_size):
                raise IncompatiblePointError("symbol index outside the alphabet")
            return arr.astype(np.int64)
        return list(points)

    def encode(self, symbols: Sequence) -> np.ndarray:
        """Map discrete symbols to their alphabet indices."""
        if self.kind != "discrete":
            raise TypeError("encode is only defined for discrete spaces")
        lookup = {s: i for i, s in enumerate(self.alphabet)}
        try:
            return np.array([lookup[s] for s in symbols], dtype=np.int64)
        except KeyError as exc:
            raise IncompatiblePointError(f"symbol {exc.args[0]!r} not in alphabet") from None

    def _as_point(self, p):
        if self.kind in ("euclidean", "hilbert_l2"):
            arr = np.atleast_1d(np.asarray(p, dtype=float))
            if arr.shape != (self.dim,):
                raise IncompatiblePointError(
                    f"expected a point of dimension {self.dim}, got shape {arr.shape}"
                )
            return arr
        if self.kind == "discrete":
            if isinstance(p, (bool, np.bool_)) or not isinstance(p, (int, np.integer)):
                raise IncompatiblePointError(f"discrete point must be a symbol index, got {p!r}")
            if not 0 <= p < self.alphabet_size:
                raise IncompatiblePointError("symbol index outside the alphabet")
            return int(p)
        return p

    def base_distance(self, p, q) -> float:
        p, q = self._as_point(p), self._as_point(q)
        if self.kind == "euclidean":
            return float(np.linalg.norm(p - q))
        if self.kind == "hilbert_l2":
            return float(np.linalg.norm(p - q) / np.sqrt(self.dim))
        if self.kind == "discrete":
            return 0.0 if p == q else 1.0
        return float(self.metric(p, q))

    def distance(self, p, q) -> float:
        return self.base_distance(p, q) ** self.beta

    def pairwise(self, points) -> np.ndarray:
        """Symmetric matrix of ``d(p_i, p_j) ** beta``.

        Each unordered pair is evaluated once and mirrored, so the result is
        exactly symmetric with a zero diagonal for metric-derived spaces.
        """
        pts = self.as_points(points)
        n = len(pts)
        if n == 0:
            raise ValueError("need at least one point")
        if self.kind == "euclidean":
            base = squareform(pdist(pts)) if n > 1 else np.zeros((1, 1))
        elif self.kind == "hilbert_l2":
            base = squareform(pdist(pts)) / np.sqrt(self.dim) if n > 1 else np.zeros((1, 1))
        elif self.kind == "discrete":
            base = (pts[:, None] != pts[None, :]).astype(float)
        else:
            base = np.zeros((n, n))
            for i in range(n):
                for j in range(i + 1, n):
                    base[i, j] = base[j, i] = float(self.metric(pts[i], pts[j]))
        if self.beta == 1.0:
            return base
        return base**self.beta

    def cross(self, points_a, points_b) -> np.ndarray:
        """Rectangular matrix of distances between two point collections."""
        a, b = self.as_points(points_a), self.as_points(points_b)
        if self.kind in ("euclidean", "hilbert_l2"):
            base = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))
            if self.kind == "hilbert_l2":
                base = base / np.sqrt(self.dim)
        elif self.kind == "discrete":
            base = (a[:, None] != b[None, :]).astype(float)
        else:
            base = np.array([[float(self.metric(p, q)) for q in b] for p in a])
        return base if self.beta == 1.0 else base**self.beta

    def rowwise(self, a, b) -> np.ndarray:
        """Base (un-powered) distances between matching rows of two canonical arrays."""
        if self.kind == "discrete":
            return (np.asarray(a) != np.asarray(b)).astype(float)
        if self.kind == "user_defined":
            return np.array([float(self.metric(p, q)) for p, q in zip(a, b)])
        base = np.linalg.norm(np.asarray(a) - np.asarray(b), axis=1)
        return base / np.sqrt(self.dim) if self.kind == "hilbert_l2" else base

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "beta": self.beta}
        if self.dim is not None:
            cfg["dim"] = self.dim
        if self.alphabet is not None:
            cfg["alphabet"] = list(self.alphabet)
        return cfg


def euclidean(dim: int = 1, beta: float = 1.0, id: str = "") -> Space:
    return Space("euclidean", dim=int(dim), beta=beta, id=id)


def hilbert_l2(dim: int, beta: float = 1.0, id: str = "") -> Space:
    """Discretised L2[0, 1]: vectors of function values on ``dim`` grid points.

    The norm is ``sqrt(mean(v ** 2))``, the Riemann approximation of the
    L2 norm on the unit interval.
    """
    return Space("hilbert_l2", dim=int(dim), beta=beta, id=id)


def discrete(alphabet, beta: float = 1.0, id: str = "") -> Space:
    """Discrete metric space; ``alphabet`` is a size or a sequence of symbols."""
    if isinstance(alphabet, (int, np.integer)):
        alphabet = tuple(range(int(alphabet)))
    return Space("discrete", alphabet=tuple(alphabet), beta=beta, id=id)


def user_defined(metric: Callable[[Any, Any], float], beta: float = 1.0, id: str = "") -> Space:
    """Space backed by a distance callback.

    The callback must be pure and is trusted to be a metric; use
    :func:`validate` to spot-check the axioms on sample points.
    """
    return Space("user_defined", metric=metric, beta=beta, id=id)


def space_from_config(cfg: dict, metrics: dict | None = None) -> Space:
    """Build a space from a config block (``kind``, ``dim``/``alphabet``, ``beta``)."""
    kind = cfg.get("kind", "euclidean")
    beta = cfg.get("beta", 1.0)
    if kind == "euclidean":
        return euclidean(cfg.get("dim", 1), beta)
    if kind == "hilbert_l2":
        return hilbert_l2(cfg["dim"], beta)
    if kind == "discrete":
        return discrete(cfg["alphabet"], beta)
    if kind == "user_defined":
        name = cfg.get("metric")
        if not metrics or name not in metrics:
            raise ValueError(f"no registered metric named {name!r}")
        return user_defined(metrics[name], beta, id=name)
    raise ValueError(f"unknown space kind {kind!r}")


def distance(space: Space, p, q) -> float:
    """``d(p, q) ** beta`` for two points of ``space``."""
    return space.distance(p, q)


def with_beta(space: Space, beta: float) -> Space:
    """Raise the distance of ``space`` to the power ``beta``.

    Powers compose: ``with_beta(with_beta(s, a), b)`` has exponent ``a * b``
    relative to the base metric, which must stay within (0, 2].
    """
    beta = _check_beta(beta)
    return replace(space, beta=_check_beta(space.beta * beta))


@dataclass(frozen=True)
class WeakTriangleReport:
    violations: int
    worst_slack: float
    n_triples: int


def check_weak_triangle(space: Space, triples) -> WeakTriangleReport:
    """Check ``d(x, x') <= 2**(beta-1) * (d(x, x0) + d(x0, x'))`` on triples.

    ``triples`` is a sequence of ``(x, x', x0)``.  Only defined for beta in
    [1, 2]; for smaller exponents the plain triangle inequality applies.
    """
    if not (1.0 <= space.beta <= 2.0):
        raise ValueError("weak triangle inequality is only asserted for beta in [1, 2]")
    factor = 2.0 ** (space.beta - 1.0)
    lhs, rhs = _triangle_sides(space, triples)
    rhs = factor * rhs
    slack = rhs - lhs
    bad = slack < -TRIANGLE_SLACK * np.maximum(1.0, rhs)
    worst = float(slack.min()) if slack.size else float("inf")
    return WeakTriangleReport(int(bad.sum()), worst, int(slack.size))


def _triangle_sides(space: Space, triples):
    """Return ``d(x, x')`` and ``d(x, x0) + d(x0, x')`` for each triple."""
    if len(triples) == 0:
        return np.zeros(0), np.zeros(0)
    if space.kind == "user_defined":
        lhs = np.array([space.distance(x, y) for x, y, _ in triples])
        rhs = np.array([space.distance(x, z) + space.distance(z, y) for x, y, z in triples])
        return lhs, rhs
    if isinstance(triples, np.ndarray):
        cols = [triples[:, k] for k in range(3)]
    else:
        cols = [[t[k] for t in triples] for k in range(3)]
    a, b, c = (space.as_points(col) for col in cols)
    be = space.beta
    return (space.rowwise(a, b) ** be,
            space.rowwise(a, c) ** be + space.rowwise(c, b) ** be)


@dataclass(frozen=True)
class ValidationReport:
    pairs: int
    triples: int
    asymmetric: int
    negative: int
    nonzero_self: int
    triangle_violations: int
    worst_triangle_slack: float

    @property
    def ok(self) -> bool:
        return not (self.asymmetric or self.negative or self.nonzero_self
                    or self.triangle_violations)


def validate(space: Space, points, n_pairs: int = 1000, n_triples: int = 1000,
             seed=0, tol: float = 1e-12) -> ValidationReport:
    """Spot-check the (pseudo)metric axioms on random pairs and triples of ``points``.

    For beta <= 1 the ordinary triangle inequality is checked, otherwise the
    weak triangle inequality.
    """
    pts = space.as_points(points)
    n = len(pts)
    if n == 0:
        raise ValueError("need at least one point")
    rng = np.random.default_rng(seed)
    i, j = rng.integers(n, size=(2, n_pairs))
    asym = neg = self_bad = 0
    for a, b in zip(i, j):
        dab, dba = space.distance(pts[a], pts[b]), space.distance(pts[b], pts[a])
        asym += abs(dab - dba) > tol * max(1.0, abs(dab))
        neg += dab < 0
        self_bad += abs(space.distance(pts[a], pts[a])) > tol
    idx = rng.integers(n, size=(n_triples, 3))
    triples = [(pts[a], pts[b], pts[c]) for a, b, c in idx]
    factor = 2.0 ** (space.beta - 1.0) if space.beta > 1 else 1.0
    lhs, rhs = _triangle_sides(space, triples)
    slack = factor * rhs - lhs
    bad = int((slack < -tol * np.maximum(1.0, rhs)).sum())
    return ValidationReport(n_pairs, n_triples, int(asym), int(neg), int(self_bad), bad,
                            float(slack.min()) if slack.size else float("inf"))


@dataclass(frozen=True)
class Embedding:
    """Finite-dimensional map with ``||map(p) - map(q)||**2 == distance(p, q)``.

    ``center`` is the Bochner mean of the map under an empirical measure; it
    is zero until :meth:`centered` is called with a sample.
    """

    space: Space
    map: Callable[[Any], np.ndarray]
    center: np.ndarray

    def transform(self, points) -> np.ndarray:
        pts = self.space.as_points(points)
        return np.array([self.map(p) for p in pts]) - self.center

    def centered(self, points) -> "Embedding":
        pts = self.space.as_points(points)
        mean = np.array([self.map(p) for p in pts]).mean(axis=0)
        return replace(self, center=mean)


def discrete_embedding(space: Space) -> Embedding:
    """Embed a discrete space into R^m via ``x_i -> e_i / sqrt(2)``.

    Distinct symbols end up at squared distance 1, which realises the
    discrete metric as a squared Hilbert norm.
    """
    if space.kind != "discrete":
        raise TypeError("explicit embeddings are only available for discrete spaces")
    if space.beta != 1.0:
        # the discrete metric is invariant under powers, but the contract is stated for beta = 1
        raise ValueError("discrete_embedding expects beta = 1")
    m = space.alphabet_size
    basis = np.eye(m) / np.sqrt(2.0)

    def _map(p):
        return basis[int(p)]

    return Embedding(space, _map, np.zeros(m))
