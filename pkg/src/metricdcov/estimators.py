"""
scikit-learn style estimators wrapping the functional API.

``X`` and ``Y`` are array-likes: ``(n,)`` or ``(n, d)`` real arrays for vector
spaces, ``(n,)`` label arrays for discrete spaces, or any sequence for a
callable metric.  Spaces are given by name, as :class:`Space` instances, or
as a distance callable.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted

from .core import PairedSample, centered_matrices, dcov, delta_matrix
from .inference import run_test
from .metric import Space, discrete, euclidean, hilbert_l2, user_defined, with_beta
from .seeding import check_seed
from .spectrum import empirical_spectrum, long_run_covariance, simulate_null


def check_points(values, space="euclidean", beta: float = 1.0):
    """Validate one marginal and return ``(points, Space)``."""
    if callable(space) and not isinstance(space, Space):
        pts = list(values)
        if not pts:
            raise ValueError("empty input")
        return pts, user_defined(space, beta)
    if isinstance(space, Space):
        sp = space if beta == 1.0 else with_beta(space, beta)
        if sp.kind == "discrete":
            labels = np.asarray(values)
            return (sp.encode(labels.tolist()) if not np.issubdtype(labels.dtype, np.integer)
                    else labels), sp
        if sp.kind == "user_defined":
            return list(values), sp
        arr = check_array(values, ensure_2d=False, dtype=float)
        return arr, sp
    if space == "discrete":
        labels = np.asarray(values)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("discrete input must be a non-empty 1-d array of labels")
        alphabet, codes = np.unique(labels, return_inverse=True)
        return codes.astype(np.int64), discrete(alphabet.tolist(), beta)
    if space in ("euclidean", "hilbert_l2"):
        arr = check_array(values, ensure_2d=False, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        make = euclidean if space == "euclidean" else hilbert_l2
        return arr, make(arr.shape[1], beta)
    raise ValueError(f"unknown space {space!r}")


def check_paired_sample(X, Y, x_space="euclidean", y_space="euclidean",
                        beta_x: float = 1.0, beta_y: float = 1.0) -> PairedSample:
    """Validate ``(X, Y)`` and build a :class:`PairedSample`."""
    xs, sx = check_points(X, x_space, beta_x)
    ys, sy = check_points(Y, y_space, beta_y)
    check_consistent_length(xs, ys)
    return PairedSample(xs, ys, sx, sy)


class DistanceCovariance(BaseEstimator):
    """Empirical distance covariance of paired observations.

    Parameters
    ----------
    x_space, y_space : str, Space or callable
        ``"euclidean"``, ``"hilbert_l2"``, ``"discrete"``, a :class:`Space`,
        or a distance callable.
    beta_x, beta_y : float
        Exponents in (0, 2] applied to the respective metrics.

    Attributes
    ----------
    dcov_ : float
    D_mu_, D_nu_ : float
        Mean pairwise distances of the two marginals.
    normalized_ : float or None
        ``dcov_ / (D_mu_ * D_nu_)``; ``None`` when a marginal is constant.
    statistic_ : float
        ``n * dcov_``.
    """

    def __init__(self, x_space="euclidean", y_space="euclidean", beta_x=1.0, beta_y=1.0):
        self.x_space = x_space
        self.y_space = y_space
        self.beta_x = beta_x
        self.beta_y = beta_y

    def _sample(self, X, Y):
        return check_paired_sample(X, Y, self.x_space, self.y_space, self.beta_x, self.beta_y)

    def fit(self, X, Y):
        sample = self._sample(X, Y)
        est = dcov(sample)
        self.estimate_ = est
        self.n_samples_ = sample.n
        self.dcov_ = est.dcov
        self.D_mu_ = est.d_mu_grand
        self.D_nu_ = est.d_nu_grand
        self.normalized_ = est.normalized
        self.statistic_ = est.statistic
        return self

    def score(self, X, Y):
        """Distance covariance of a (new) paired sample."""
        return dcov(self._sample(X, Y)).dcov


class SpectralNull(BaseEstimator):
    """Spectral model of ``n * dcov`` under independence for dependent data.

    ``fit`` estimates the eigenvalues of the empirical delta operator and the
    Bartlett long-run covariance of its eigenfunction scores; ``sample``
    draws from the resulting quadratic form.
    """

    def __init__(self, x_space="euclidean", y_space="euclidean", beta_x=1.0, beta_y=1.0,
                 truncation=0.999, max_components=100, bandwidth="auto"):
        self.x_space = x_space
        self.y_space = y_space
        self.beta_x = beta_x
        self.beta_y = beta_y
        self.truncation = truncation
        self.max_components = max_components
        self.bandwidth = bandwidth

    def fit(self, X, Y):
        sample = check_paired_sample(X, Y, self.x_space, self.y_space, self.beta_x, self.beta_y)
        a, b = centered_matrices(sample)
        model = empirical_spectrum(delta_matrix(a, b), self.truncation, self.max_components)
        self.model_ = model
        self.eigenvalues_ = model.eigenvalues
        self.trace_ = model.trace_full
        self.n_components_ = model.kept
        if model.kept:
            self.long_run_ = long_run_covariance(model, self.bandwidth)
            self.sigma_ = self.long_run_.sigma
        else:
            self.long_run_ = None
            self.sigma_ = np.zeros((0, 0))
        return self

    def sample(self, reps=10_000, random_state=0):
        check_is_fitted(self, "model_")
        return simulate_null(self.model_, self.long_run_, reps, check_seed(random_state)).draws


class IndependenceTest(BaseEstimator):
    """Test of independence between X and Y based on ``n * dcov``.

    ``method`` is ``"spectral"`` (default; valid under absolute regularity),
    ``"block_bootstrap"`` or ``"permutation"`` (iid data only).
    """

    def __init__(self, method="spectral", reps=999, random_state=0, x_space="euclidean",
                 y_space="euclidean", beta_x=1.0, beta_y=1.0, bandwidth="auto",
                 block_length="auto", truncation=0.999):
        self.method = method
        self.reps = reps
        self.random_state = random_state
        self.x_space = x_space
        self.y_space = y_space
        self.beta_x = beta_x
        self.beta_y = beta_y
        self.bandwidth = bandwidth
        self.block_length = block_length
        self.truncation = truncation

    def fit(self, X, Y):
        sample = check_paired_sample(X, Y, self.x_space, self.y_space, self.beta_x, self.beta_y)
        method = self.method.replace("-", "_")
        options = {}
        if method == "spectral":
            options = {"bandwidth": self.bandwidth, "truncation": self.truncation}
        elif method == "block_bootstrap":
            options = {"block_length": self.block_length}
        result = run_test(sample, method, self.reps, check_seed(self.random_state), **options)
        self.result_ = result
        self.statistic_ = result.statistic
        self.p_value_ = result.p_value
        self.null_distribution_ = result.null_draws
        return self

    def rejects(self, level=0.05) -> bool:
        check_is_fitted(self, "result_")
        return self.result_.rejects(level)
