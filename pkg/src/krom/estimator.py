"""scikit-learn style wrappers around the moment calculations and the simulator."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_sample
from .moments import inverse_sqrt, kollo_skewness, rotate_skewness, sample_mean_cov
from .orthobasis import empirical_scaled_L, rotation_matrix
from .simulation import SolveConfig, TargetMoments, krom_simulate, moment_errors
from .skewsolver import DEFAULT_MAX_ATTEMPTS
from .valuegen import make_value_source


class KolloSkewness(BaseEstimator, TransformerMixin):
    """Estimate mean, covariance and (rotated) Kollo skewness; transform standardizes.

    Attributes
    ----------
    mean_, covariance_ : ndarray
        Population moments of the training sample.
    kollo_skewness_ : ndarray of shape (n_features,)
    rotated_skewness_ : ndarray of shape (n_features,)
        ``n^{-1} Omega' tau``.
    """

    def fit(self, X, y=None):
        X = check_sample(X, min_rows=2)
        self.mean_, self.covariance_ = sample_mean_cov(X)
        self._whiten = inverse_sqrt(self.covariance_)
        self.kollo_skewness_ = kollo_skewness(X)
        self.rotated_skewness_ = rotate_skewness(self.kollo_skewness_, rotation_matrix(X.shape[1]))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "kollo_skewness_")
        X = check_sample(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return (X - self.mean_) @ self._whiten


class KROMSimulator(BaseEstimator):
    """Draw samples that reproduce a target mean, covariance and Kollo skewness exactly.

    ``fit`` takes the targets from a data matrix; :meth:`set_targets` sets
    them directly. Every call to :meth:`sample` returns ``n_samples`` rows
    whose sample moments equal the targets.

    Parameters
    ----------
    n_samples : int
        Rows per simulated sample.
    n_blocks : int
        Number of concatenated sub-samples.
    source : {"zero", "bootstrap", "normal", "sn", "nig", "beta", "t"}
        Generator for the arbitrary values; ``bootstrap`` resamples the fitted data.
    sigma2 : float
        Variance of the adjusted arbitrary values.
    max_attempts : int
        Draws per column before giving up.
    random_state : int or None
    threads : int
        Worker threads for block solving; output does not depend on it.
    """

    def __init__(self, n_samples=100, n_blocks=1, source="normal", sigma2=0.5,
                 max_attempts=DEFAULT_MAX_ATTEMPTS, random_state=None, threads=1):
        self.n_samples = n_samples
        self.n_blocks = n_blocks
        self.source = source
        self.sigma2 = sigma2
        self.max_attempts = max_attempts
        self.random_state = random_state
        self.threads = threads

    def fit(self, X, y=None):
        X = check_sample(X, min_rows=2)
        self.target_ = TargetMoments.from_sample(X)
        self._data = empirical_scaled_L(X) if self.source == "bootstrap" else None
        self.n_features_in_ = X.shape[1]
        self._calls = 0
        return self

    def set_targets(self, mu, V, tau):
        self.target_ = TargetMoments(mu=np.asarray(mu, float), V=np.asarray(V, float),
                                     tau=np.asarray(tau, float))
        self._data = None
        self.n_features_in_ = self.target_.n
        self._calls = 0
        return self

    def _value_source(self):
        p = rotate_skewness(self.target_.tau, rotation_matrix(self.target_.n))
        return make_value_source(self.source, self.sigma2, p=p, data=self._data)

    def sample(self, n_samples=None, random_state=None):
        """Simulate one exact-moment sample.

        Without an explicit ``random_state`` successive calls advance a stream
        seeded by ``self.random_state``.
        """
        check_is_fitted(self, "target_")
        if random_state is None:
            if self.random_state is not None:
                seq = np.random.SeedSequence([int(self.random_state), self._calls])
                random_state = int(seq.generate_state(1)[0])
            self._calls += 1
        config = SolveConfig(
            m=int(n_samples or self.n_samples), n_blocks=self.n_blocks,
            value_source=self._value_source(), max_attempts=self.max_attempts,
            seed=random_state, threads=self.threads,
        )
        result = krom_simulate(self.target_, config)
        self.provenance_ = result.provenance
        return result.X

    def score(self, X, y=None):
        """Negative largest relative moment error of ``X`` against the targets."""
        check_is_fitted(self, "target_")
        err = moment_errors(X, self.target_)
        return -max(err.values())
