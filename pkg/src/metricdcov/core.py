"""
Empirical distance covariance as a V-statistic.

The estimator is ``dcov(theta_n) = n**-2 * sum_ij A_ij * B_ij`` where ``A``
and ``B`` are the double-centred distance matrices of the two marginals.
All reductions in this module go through :func:`math.fsum`, which is
correctly rounded and therefore independent of summation order: jointly
permuting a sample leaves every quantity bit-for-bit unchanged.

Brute-force oracles (the order-6 kernel and exact Hoeffding projections on
finite distributions) live next to the fast path so they can be compared.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Sequence

import numpy as np

from .metric import Space


class CostCapExceeded(RuntimeError):
    """Raised by exhaustive oracles whose cost would exceed the configured cap."""


def _fsum(values) -> float:
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


@dataclass(frozen=True, eq=False)
class PairedSample:
    """Observations ``Z_t = (X_t, Y_t)``, t = 1..n, with their two spaces."""

    xs: Any
    ys: Any
    space_x: Space
    space_y: Space

    def __post_init__(self):
        if len(self.xs) == 0:
            raise ValueError("a paired sample needs n >= 1")
        xs = self.space_x.as_points(self.xs)
        ys = self.space_y.as_points(self.ys)
        if len(xs) != len(ys):
            raise ValueError(f"xs and ys differ in length ({len(xs)} vs {len(ys)})")
        if len(xs) < 1:
            raise ValueError("a paired sample needs n >= 1")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return len(self.xs)

    def __len__(self) -> int:
        return self.n

    def take(self, idx_x, idx_y=None) -> "PairedSample":
        """Re-index the sample; ``idx_y`` defaults to ``idx_x`` (pairs kept)."""
        idx_y = idx_x if idx_y is None else idx_y
        return PairedSample(_take(self.xs, idx_x), _take(self.ys, idx_y),
                            self.space_x, self.space_y)

    def point(self, i: int):
        return self.xs[i], self.ys[i]


def _take(points, idx):
    if isinstance(points, np.ndarray):
        return points[np.asarray(idx)]
    return [points[i] for i in idx]


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    values: np.ndarray
    space: Space | None = None


@dataclass(frozen=True, eq=False)
class CenteredMatrix:
    """Double-centred distances ``d_mu(x_i, x_j)`` under the empirical measure.

    ``row_means`` holds ``a_mu(x_i)`` and ``grand_mean`` holds ``D(mu)``.
    """

    values: np.ndarray
    row_means: np.ndarray
    grand_mean: float

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class DeltaMatrix:
    """Entrywise product ``delta(z_i, z_j) = d_mu(x_i, x_j) * d_nu(y_i, y_j)``."""

    values: np.ndarray
    x: CenteredMatrix | None = None
    y: CenteredMatrix | None = None

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class DcovEstimate:
    n: int
    dcov: float
    d_mu_grand: float
    d_nu_grand: float
    beta_x: float = 1.0
    beta_y: float = 1.0

    @property
    def normalized_defined(self) -> bool:
        return self.d_mu_grand > 0 and self.d_nu_grand > 0

    @property
    def normalized(self) -> float | None:
        """``dcov / (D(mu_n) D(nu_n))``, or ``None`` when a marginal is a single atom."""
        if not self.normalized_defined:
            return None
        return self.dcov / (self.d_mu_grand * self.d_nu_grand)

    @property
    def statistic(self) -> float:
        return self.n * self.dcov

    @property
    def q_statistic(self) -> float | None:
        norm = self.normalized
        return None if norm is None else self.n * norm

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "dcov": self.dcov,
            "D_mu": self.d_mu_grand,
            "D_nu": self.d_nu_grand,
            "normalized": self.normalized,
            "beta_x": self.beta_x,
            "beta_y": self.beta_y,
        }


def distance_matrix(points, space: Space) -> DistanceMatrix:
    pts = space.as_points(points)
    if len(pts) == 0:
        raise ValueError("distance_matrix needs at least one point")
    return DistanceMatrix(space.pairwise(pts), space)


def double_center(dist) -> CenteredMatrix:
    """Centre a distance matrix with its own empirical row and grand means."""
    d = np.asarray(getattr(dist, "values", dist), dtype=float)
    n = d.shape[0]
    if d.shape != (n, n):
        raise ValueError("distance matrix must be square")
    rows = d.tolist()
    row_sums = [math.fsum(r) for r in rows]
    row_means = np.array(row_sums) / n
    grand = math.fsum(row_sums) / (n * n)
    values = d - (row_means[:, None] + row_means[None, :]) + grand  # exactly symmetric
    return CenteredMatrix(values, row_means, grand)


def delta_matrix(a: CenteredMatrix, b: CenteredMatrix) -> DeltaMatrix:
    if a.values.shape != b.values.shape:
        raise ValueError(f"size mismatch: {a.values.shape} vs {b.values.shape}")
    return DeltaMatrix(a.values * b.values, a, b)


def centered_matrices(sample: PairedSample) -> tuple[CenteredMatrix, CenteredMatrix]:
    a = double_center(distance_matrix(sample.xs, sample.space_x))
    b = double_center(distance_matrix(sample.ys, sample.space_y))
    return a, b


def dcov_from_delta(delta: DeltaMatrix) -> float:
    """``n**-2 * sum(delta)``, summed with :func:`math.fsum`."""
    n = delta.n
    return _fsum(delta.values) / (n * n)


# above this size, discrete-by-discrete samples are reduced to their distinct atoms
ATOM_THRESHOLD = 2000


def dcov(sample: PairedSample, method: str = "auto") -> DcovEstimate:
    """Distance covariance of the empirical measure of ``sample``.

    ``method="matrix"`` builds the n x n centred matrices.  ``"atoms"``
    (discrete spaces only) evaluates the same quantity on the empirical law of
    the distinct pairs, which needs memory in the alphabet sizes rather than
    in n; ``"auto"`` picks it for discrete samples larger than
    ``ATOM_THRESHOLD``.
    """
    both_discrete = sample.space_x.kind == sample.space_y.kind == "discrete"
    if method == "auto":
        method = "atoms" if both_discrete and sample.n > ATOM_THRESHOLD else "matrix"
    if method == "atoms":
        if not both_discrete:
            raise ValueError("the atoms method needs two discrete spaces")
        return _dcov_atoms(sample)
    if method != "matrix":
        raise ValueError(f"unknown method {method!r}")
    a, b = centered_matrices(sample)
    value = dcov_from_delta(delta_matrix(a, b))
    return DcovEstimate(sample.n, value, a.grand_mean, b.grand_mean,
                        sample.space_x.beta, sample.space_y.beta)


def _dcov_atoms(sample: PairedSample) -> DcovEstimate:
    my = sample.space_y.alphabet_size
    codes, counts = np.unique(sample.xs * my + sample.ys, return_counts=True)
    theta = DiscreteJointDistribution(codes // my, codes % my, counts / sample.n,
                                      sample.space_x, sample.space_y)
    (cx, _, dx), (cy, _, dy) = theta.centered()
    value = float(theta.probs @ (cx * cy) @ theta.probs)
    return DcovEstimate(sample.n, value, dx, dy, sample.space_x.beta, sample.space_y.beta)


def kernel_f(dist: np.ndarray) -> np.ndarray:
    """Tensor ``f[i1,i2,i3,i4] = d12 - d13 - d24 + d34`` over a point set."""
    d = np.asarray(dist, dtype=float)
    return (d[:, :, None, None]
            - d[:, None, :, None]
            - d[None, :, None, :]
            + d[None, None, :, :])


def kernel_h(zs, space_x: Space, space_y: Space) -> float:
    """The order-6 kernel ``h(z1..z6) = f(x1,x2,x3,x4) * f(y1,y2,y5,y6)``."""
    if len(zs) != 6:
        raise ValueError("kernel_h takes exactly six points")
    x = [z[0] for z in zs]
    y = [z[1] for z in zs]
    dx, dy = space_x.distance, space_y.distance
    fx = dx(x[0], x[1]) - dx(x[0], x[2]) - dx(x[1], x[3]) + dx(x[2], x[3])
    fy = dy(y[0], y[1]) - dy(y[0], y[4]) - dy(y[1], y[5]) + dy(y[4], y[5])
    return fx * fy


def brute_force_dcov(sample: PairedSample, max_n: int = 8) -> float:
    """Exhaustive V-statistic of the order-6 kernel ``h`` (cost ``n**6``).

    Summing ``h`` over all index 6-tuples equals summing its symmetrisation,
    so no explicit symmetrisation is performed.
    """
    n = sample.n
    if n > max_n:
        raise CostCapExceeded(
            f"brute_force_dcov with n={n} needs {n**6:,} kernel terms; cap is n <= {max_n}")
    fx = kernel_f(sample.space_x.pairwise(sample.xs))
    fy = kernel_f(sample.space_y.pairwise(sample.ys))
    h = fx[:, :, :, :, None, None] * fy[:, :, None, None, :, :]
    return _fsum(h) / n**6


def vstat(kernel: Callable, sample: PairedSample, order: int, *,
          on_indices: bool = False, max_terms: int = 10**8) -> float:
    """V-statistic ``n**-c * sum`` of ``kernel`` over all index c-tuples.

    By default ``kernel`` is called once per tuple with ``order`` points, each
    an ``(x, y)`` pair.  With ``on_indices=True`` it is called once with
    ``order`` broadcastable integer index arrays and must return an array;
    this is the vectorised route for kernels given as lookup tables.
    """
    n = sample.n
    if order < 1:
        raise ValueError("order must be >= 1")
    if order * math.log(n) > math.log(max_terms):
        raise CostCapExceeded(f"vstat of order {order} on n={n} exceeds {max_terms:,} terms")
    if on_indices:
        grids = np.indices((n,) * order, sparse=True)
        values = np.broadcast_to(np.asarray(kernel(*grids), dtype=float), (n,) * order)
        return _fsum(values) / n**order
    points = [sample.point(i) for i in range(n)]
    total = math.fsum(kernel(*(points[i] for i in idx))
                      for idx in itertools.product(range(n), repeat=order))
    return total / n**order


@dataclass(frozen=True, eq=False)
class DiscreteJointDistribution:
    """Finitely supported law on X x Y: atoms ``(xs[k], ys[k])`` with weights ``probs[k]``."""

    xs: Any
    ys: Any
    probs: np.ndarray
    space_x: Space
    space_y: Space

    def __post_init__(self):
        xs = self.space_x.as_points(self.xs)
        ys = self.space_y.as_points(self.ys)
        p = np.asarray(self.probs, dtype=float)
        if not (len(xs) == len(ys) == len(p)) or len(p) == 0:
            raise ValueError("atoms and weights must have the same non-zero length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "probs", p)

    @classmethod
    def product(cls, xs, px, ys, py, space_x: Space, space_y: Space):
        """Product measure of two finite marginals."""
        xs = space_x.as_points(xs)
        ys = space_y.as_points(ys)
        i, j = np.meshgrid(np.arange(len(xs)), np.arange(len(ys)), indexing="ij")
        i, j = i.ravel(), j.ravel()
        probs = (np.asarray(px, dtype=float)[:, None] * np.asarray(py, dtype=float)[None, :]).ravel()
        return cls(_take(xs, i), _take(ys, j), probs, space_x, space_y)

    @property
    def size(self) -> int:
        return len(self.probs)

    @cached_property
    def distance_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        return self.space_x.pairwise(self.xs), self.space_y.pairwise(self.ys)

    def marginal_sizes(self) -> tuple[int, int]:
        """Number of distinct x- and y-atoms (by distance zero)."""
        dx, dy = self.distance_matrices
        return _distinct(dx), _distinct(dy)

    def centered(self):
        """Exact ``d_mu`` and ``d_nu`` on the atoms, with ``a`` and ``D``."""
        out = []
        for d in self.distance_matrices:
            a = d @ self.probs
            big_d = float(self.probs @ a)
            out.append((d - (a[:, None] + a[None, :]) + big_d, a, big_d))
        return out

    def delta(self) -> np.ndarray:
        (cx, _, _), (cy, _, _) = self.centered()
        return cx * cy

    def sample(self, n: int, rng) -> PairedSample:
        idx = rng.choice(self.size, size=n, p=self.probs)
        return PairedSample(_take(self.xs, idx), _take(self.ys, idx), self.space_x, self.space_y)


def _distinct(d: np.ndarray) -> int:
    seen = []
    for i in range(d.shape[0]):
        if not any(d[i, j] == 0 for j in seen):
            seen.append(i)
    return len(seen)


def hoeffding_component(c: int, theta: DiscreteJointDistribution, args: Sequence = (),
                        max_atoms: int = 36) -> float:
    """Exact c-th Hoeffding projection of the symmetrised order-6 kernel.

    ``h_c(z_1..z_c) = sum_{A subset of {1..c}} (-1)**(c-|A|) g_|A|(z_A)`` where
    ``g_j`` integrates the symmetrised kernel over its last ``6-j`` arguments
    against ``theta``.  Integration is exhaustive weighted summation over the
    support; arguments are ``(x, y)`` pairs and need not be atoms.
    """
    if not 0 <= c <= 6:
        raise ValueError("c must lie in 0..6")
    if len(args) != c:
        raise ValueError(f"component {c} takes {c} arguments, got {len(args)}")
    if theta.size > max_atoms:
        raise CostCapExceeded(
            f"support of {theta.size} atoms exceeds the Hoeffding cap of {max_atoms}")
    g = _ProjectionIntegrator(theta, args)
    total = 0.0
    for size in range(c + 1):
        sign = -1.0 if (c - size) % 2 else 1.0
        for subset in itertools.combinations(range(c), size):
            total += sign * g(subset)
    return total


class _ProjectionIntegrator:
    """Evaluates ``g_j`` for subsets of the fixed arguments.

    Points are the support atoms followed by the arguments; free kernel slots
    are integrated against the atom weights, fixed slots are pinned by a
    one-hot vector.  The symmetrisation is the average over injective
    placements of the fixed arguments into the six kernel slots.
    """

    def __init__(self, theta: DiscreteJointDistribution, args):
        m = theta.size
        if args:
            ax = theta.space_x.as_points([a[0] for a in args])
            ay = theta.space_y.as_points([a[1] for a in args])
            xs = _concat(theta.xs, ax)
            ys = _concat(theta.ys, ay)
        else:
            xs, ys = theta.xs, theta.ys
        self.fx = kernel_f(theta.space_x.pairwise(xs))
        self.fy = kernel_f(theta.space_y.pairwise(ys))
        total = m + len(args)
        self.weights = np.zeros(total)
        self.weights[:m] = theta.probs
        self.onehot = np.eye(total)[m:]

    def contract(self, va, vb, vc, vd, ve, vf) -> float:
        """``sum fx[a,b,c,d] fy[a,b,e,f] va vb vc vd ve vf``, factorised over (a, b)."""
        left = np.einsum("abcd,c,d->ab", self.fx, vc, vd)
        right = np.einsum("abef,e,f->ab", self.fy, ve, vf)
        return float(va @ (left * right) @ vb)

    def __call__(self, subset) -> float:
        j = len(subset)
        values = []
        for slots in itertools.permutations(range(6), j):
            vecs = [self.weights] * 6
            for arg, slot in zip(subset, slots):
                vecs[slot] = self.onehot[arg]
            values.append(self.contract(*vecs))
        return math.fsum(values) / len(values)


def _concat(points, extra):
    if isinstance(points, np.ndarray):
        return np.concatenate([points, extra])
    return list(points) + list(extra)
