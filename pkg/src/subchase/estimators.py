"""Estimator-style wrappers over the functional API.

``fit`` takes a set function (or a chase instance) instead of a data matrix,
so these follow the get_params/set_params and trailing-underscore conventions
without claiming full scikit-learn input validation.
"""

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_rng
from .aos import maximize_static, maximize_with_curvature
from .chasing import TALG_MULT, Chaser, fast_trials, talg
from .rounding import partition_init, partition_step, pivotal_sample


class StaticMaximizer(BaseEstimator):
    """Fractional maximizer under a partition constraint; ``sample`` rounds it."""

    def __init__(self, eps=0.1, delta=0.1, trials=None, random_state=None):
        self.eps = eps
        self.delta = delta
        self.trials = trials
        self.random_state = random_state

    def fit(self, f, constraint):
        self._rng = check_rng(self.random_state)
        self.constraint_ = constraint
        self.x_, self.value_lb_ = maximize_static(f, constraint, self.eps, self.delta, self._rng, self.trials)
        return self

    def sample(self, size=None):
        check_is_fitted(self, "x_")
        if size is None:
            return pivotal_sample(self.x_, self.constraint_, self._rng)
        return [pivotal_sample(self.x_, self.constraint_, self._rng) for _ in range(size)]


class CurvatureMaximizer(BaseEstimator):
    def __init__(self, eps=0.1, delta=0.1, trials=None, random_state=None):
        self.eps = eps
        self.delta = delta
        self.trials = trials
        self.random_state = random_state

    def fit(self, f, constraint):
        self._rng = check_rng(self.random_state)
        self.constraint_ = constraint
        res = maximize_with_curvature(f, constraint, self.eps, self.delta, self._rng,
                                      self.trials, return_details=True)
        self.x_, self.curvature_ = res.x, res.c
        self.gamma_, self.lambda_ = res.gamma, res.lam
        self.certificate_, self.solution_ = res.certificate, res.S
        return self

    def sample(self):
        check_is_fitted(self, "x_")
        return pivotal_sample(self.x_, self.constraint_, self._rng)


class FractionalChaser(BaseEstimator):
    """Online fractional chaser; ``fit`` runs a whole instance, ``partial_fit`` one step."""

    def __init__(self, method="fast", eps=0.1, talg_mult=TALG_MULT, witness_const=4.0,
                 trials=None, certify=True, random_state=None):
        self.method = method
        self.eps = eps
        self.talg_mult = talg_mult
        self.witness_const = witness_const
        self.trials = trials
        self.certify = certify
        self.random_state = random_state

    def _start(self, n, constraint, d, trials):
        loop_cap = None if self._budget is None else math.ceil(10 * self._budget)
        self.chaser_ = Chaser(n, constraint, self.eps, d, self.method, trials=trials, loop_cap=loop_cap,
                              rng=check_rng(self.random_state), certify=self.certify)

    def fit(self, instance):
        self._budget = talg(instance, self.eps, self.talg_mult)
        trials = self.trials
        if self.method == "fast" and trials is None:
            trials = fast_trials(instance, self.eps, self.talg_mult, self.witness_const)
        self._start(instance.n, instance.constraint, instance.d, trials)
        for s in instance.steps:
            self.chaser_.step(s.available, s.f, s.target)
        self.trajectory_ = self.chaser_.trajectory()
        return self

    def partial_fit(self, available, f, target, constraint=None, d=None):
        if not hasattr(self, "chaser_"):
            if constraint is None:
                raise ValueError("the first partial_fit call needs the constraint")
            self._budget = None
            if self.method == "fast" and self.trials is None:
                raise ValueError("online fast chasing needs an explicit trials count")
            self._start(f.n, constraint, d or f.n, self.trials)
        self.chaser_.step(available, f, target)
        self.trajectory_ = self.chaser_.trajectory()
        return self

    @property
    def x_(self):
        check_is_fitted(self, "trajectory_")
        return self.trajectory_.points[-1]


class RecourseRounder(TransformerMixin, BaseEstimator):
    """Rounds a stream of fractional points (rows) to sets, one step at a time."""

    def __init__(self, constraint=None, scheme="interval", random_state=None):
        self.constraint = constraint
        self.scheme = scheme
        self.random_state = random_state

    def fit(self, X=None, y=None):
        self._rng = check_rng(self.random_state)
        self.state_ = partition_init(self.constraint, self._rng, self.scheme)
        return self

    def transform(self, X):
        check_is_fitted(self, "state_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return [partition_step(self.state_, row, self._rng) for row in X]
