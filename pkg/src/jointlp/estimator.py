"""scikit-learn style wrapper around the joint decoder.

``fit`` binds a code (there is nothing to learn), ``predict`` maps rows of
received samples to hard decisions. Hyperparameters go through
``get_params``/``set_params`` so the decoder can sit in a parameter grid.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .channels import branch_metrics, build_trellis, channel_by_name, sigma_from_snr_db
from .codes import TannerGraph, load_alist
from .decoder import DecodeReport, DecoderConfig, decode


class JointLPDecoder(BaseEstimator):
    """Joint LP decoder for one code and one channel.

    Exactly one of ``sigma`` and ``snr_db`` must be given; ``snr_db`` is
    converted with the channel's output power.
    """

    def __init__(self, channel="dic", sigma=None, snr_db=None, k1=1000.0, k2=100.0,
                 inner_rounds=5, outer_limit=200, schedule="flooding",
                 inner_order="check_first", message_clamp=1e4, stop_on_codeword=True, tol=0.0,
                 damping=1.0):
        self.channel = channel
        self.sigma = sigma
        self.snr_db = snr_db
        self.k1 = k1
        self.k2 = k2
        self.inner_rounds = inner_rounds
        self.outer_limit = outer_limit
        self.schedule = schedule
        self.inner_order = inner_order
        self.message_clamp = message_clamp
        self.stop_on_codeword = stop_on_codeword
        self.tol = tol
        self.damping = damping

    def fit(self, X, y=None):
        """Bind the code. ``X`` is a TannerGraph, a dense parity-check
        matrix or a path to an alist file; ``y`` is ignored."""
        if isinstance(X, TannerGraph):
            graph = X
        elif isinstance(X, (str, Path)):
            graph = load_alist(X)
        else:
            H = check_array(X, dtype=np.uint8)
            if not np.isin(H, (0, 1)).all():
                raise ValueError("parity-check matrix must be binary")
            graph = TannerGraph.from_dense(H)
        if (self.sigma is None) == (self.snr_db is None):
            raise ValueError("give exactly one of sigma and snr_db")
        spec = channel_by_name(self.channel)
        self.code_ = graph
        self.channel_spec_ = spec
        self.trellis_ = build_trellis(spec, graph.n)
        self.sigma_ = float(self.sigma) if self.sigma is not None \
            else sigma_from_snr_db(spec, float(self.snr_db))
        if not self.sigma_ > 0:
            raise ValueError("sigma must be positive")
        self.config_ = DecoderConfig(
            k1=self.k1, k2=self.k2, inner_rounds=self.inner_rounds,
            outer_limit=self.outer_limit, schedule=self.schedule, inner_order=self.inner_order,
            message_clamp=self.message_clamp, stop_on_codeword=self.stop_on_codeword,
            tol=self.tol, damping=self.damping)
        self.n_features_in_ = graph.n
        return self

    def decode(self, y) -> DecodeReport:
        """Full report for one received word."""
        check_is_fitted(self, "config_")
        y = check_array(np.asarray(y, dtype=float).reshape(1, -1))[0]
        if y.shape[0] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} samples, got {y.shape[0]}")
        b = branch_metrics(self.trellis_, y, self.sigma_)
        return decode(self.code_, self.trellis_, b, self.config_, block_trace=False)

    def _rows(self, Y):
        check_is_fitted(self, "config_")
        Y = check_array(Y, dtype=float)
        if Y.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {Y.shape[1]}")
        return [self.decode(row) for row in Y]

    def predict(self, Y) -> np.ndarray:
        """Hard decisions, one row per received word."""
        return np.array([r.hard_bits for r in self._rows(Y)], dtype=np.uint8)

    def pseudo_marginals(self, Y) -> np.ndarray:
        return np.array([r.pseudo_marginals for r in self._rows(Y)])

    def score(self, Y, C) -> float:
        """Fraction of words decoded to the given codewords (1 - WER)."""
        C = check_array(C, dtype=np.uint8)
        return float(np.mean(np.all(self.predict(Y) == C, axis=1)))
