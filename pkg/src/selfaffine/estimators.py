"""scikit-learn style front ends.

The "data" an estimator is fit on is an IFS: an :class:`IfsModel`, a dict in
the JSON layout, JSON text, or a path to a JSON file. Fitted quantities get
the usual trailing underscore.
"""
import json
import os
from collections.abc import Mapping

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import chaos_game, moments
from .exceptions import InvalidModel
from .model import IfsModel, load_ifs, parse_ifs, validate


def check_ifs(X, validated=True):
    """Coerce ``X`` to an IfsModel; optionally require it to pass validation."""
    if isinstance(X, IfsModel):
        model = X
    elif isinstance(X, Mapping):
        model = parse_ifs(json.dumps(X))
    elif isinstance(X, os.PathLike) or (isinstance(X, str) and not X.lstrip().startswith("{")):
        model = load_ifs(X)
    elif isinstance(X, str):
        model = parse_ifs(X)
    else:
        raise TypeError(f"cannot interpret {type(X).__name__} as an IFS")
    if validated:
        report = validate(model)
        if not report.passed:
            raise InvalidModel(report)
    return model


class SelfAffineMoments(BaseEstimator):
    """Exact moments of the invariant measure of an IFS.

    Parameters
    ----------
    path : {"auto", "fast", "general", "iterate"}
        Solver route. "auto" takes the shared-linear-part shortcut when it
        applies; "iterate" uses the fixed-point iteration instead of a solve.
    tol, max_iter :
        Stopping rule for ``path="iterate"``.
    """

    def __init__(self, path="auto", tol=moments.DEFAULT_TOL, max_iter=moments.DEFAULT_MAX_ITER):
        self.path = path
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        model = check_ifs(X)
        if self.path == "iterate":
            report = moments.covariance_by_iteration(model, tol=self.tol, max_iter=self.max_iter)
        else:
            report = moments.covariance(model, path=self.path)
        self.report_ = report
        self.mean_ = report.mean
        self.second_moment_ = report.second_moment
        self.covariance_ = report.cov
        self.path_ = report.path
        self.residual_ = report.residual
        self.n_iter_ = report.iterations
        self.n_features_in_ = model.dim
        return self


class ChaosGameSampler(BaseEstimator):
    """Monte Carlo moments from a seeded chaos-game orbit."""

    def __init__(self, n_samples=1_000_000, burn_in=chaos_game.DEFAULT_BURN_IN, random_state=42, n_shards=1):
        self.n_samples = n_samples
        self.burn_in = burn_in
        self.random_state = random_state
        self.n_shards = n_shards

    def fit(self, X, y=None):
        model = check_ifs(X)
        stats = chaos_game.sample(
            model, self.n_samples, burn_in=self.burn_in, seed=self.random_state, shards=self.n_shards
        )
        self.stats_ = stats
        self.mean_ = stats.mean
        self.covariance_ = stats.cov
        self.mean_stderr_ = stats.mean_stderr
        self.n_features_in_ = model.dim
        return self

    def zscores(self, exact_mean):
        check_is_fitted(self, "stats_")
        return chaos_game.zscores(exact_mean, self.stats_)
