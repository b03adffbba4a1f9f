"""Causal residual evaluation, windowed energy, and threshold detection.

The designed filter ``r = a(q)^{-1} N(q) L(q) y`` is proper (numerator and
denominator share one degree), so it runs online as a difference equation:

    a_dn r[k] = sum_i (N_i L) y[k - dn + i] - sum_{i<dn} a_i r[k - dn + i]

with all buffers starting at zero.  The first ``dn`` residual samples mix in
those synthetic zeros and are flagged as warm-up; detectors ignore them.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .design import FilterDesign, worst_case_value


class ResidualFilter:
    """Streaming evaluator of a designed residual generator.

    Keeps ring buffers of the last ``dn`` projected inputs and residual
    values; one :meth:`step` per output sample.  :meth:`run` evaluates a
    whole trajectory at once and matches the streaming path bit for bit.
    """

    def __init__(self, design: FilterDesign, l_matrix: np.ndarray):
        l_matrix = np.asarray(l_matrix, dtype=float)
        n_y = l_matrix.shape[1]
        self.design = design
        self.d_n = design.d_n
        # row i: the output weights N_i L applied at lag dn - i
        self.weights = np.stack(
            [design.coeff(i) @ l_matrix for i in range(self.d_n + 1)]
        )
        self.a_coeffs = np.asarray(design.a_coeffs, dtype=float)
        self.n_y = n_y
        self.reset()

    def reset(self):
        self._proj: deque[np.ndarray] = deque(
            [np.zeros(self.d_n + 1) for _ in range(self.d_n)], maxlen=self.d_n
        )
        self._res: deque[float] = deque([0.0] * self.d_n, maxlen=self.d_n)
        self._count = 0

    @property
    def warmup(self) -> int:
        return self.d_n

    def step(self, y: np.ndarray) -> float:
        """Consume one output sample and emit the residual at that instant."""
        y = np.asarray(y, dtype=float).ravel()
        if y.size != self.n_y:
            raise ValueError(f"expected {self.n_y} outputs, got {y.size}")
        proj = self.weights @ y
        acc = proj[self.d_n]
        for i in range(self.d_n):
            acc += self._proj[i][i] - self.a_coeffs[i] * self._res[i]
        r = acc / self.a_coeffs[self.d_n]
        self._proj.append(proj)
        self._res.append(r)
        self._count += 1
        return float(r)

    def run(self, Y: np.ndarray) -> np.ndarray:
        """Residuals for a full (n_y, T) trajectory from a fresh zero state.

        Replays the exact operation order of :meth:`step` (including the
        per-sample projection product) so the two paths agree bit for bit.
        """
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        d_n = self.d_n
        a = self.a_coeffs
        n = Y.shape[1]
        proj = np.empty((d_n + 1, n))
        for c in range(n):
            proj[:, c] = self.weights @ Y[:, c]
        r = np.zeros(n)
        for c in range(n):
            acc = proj[d_n, c]
            for i in range(d_n):
                src = c - d_n + i
                p = proj[i, src] if src >= 0 else 0.0
                prev = r[src] if src >= 0 else 0.0
                acc += p - a[i] * prev
            r[c] = acc / a[d_n]
        return r


def residual_energy(residuals: np.ndarray, window: int) -> np.ndarray:
    """Sliding root-sum-square of the residual over the trailing window.

    Sample c reports ``sqrt(sum of r[j]^2 for j in (c-window, c])`` with the
    pre-horizon part treated as zero, so early samples see a shorter
    effective window.
    """
    if window < 1:
        raise ValueError("window must be positive")
    r = np.asarray(residuals, dtype=float).ravel()
    sq = np.concatenate([[0.0], np.cumsum(r * r)])
    lo = np.maximum(np.arange(r.size) + 1 - window, 0)
    return np.sqrt(np.maximum(sq[1:] - sq[lo], 0.0))


@dataclass
class DetectionReport:
    """Latched alarm decision over one residual stream."""

    energies: np.ndarray
    alarm: bool
    first_index: int | None
    max_energy: float


@dataclass
class Detector:
    """Threshold test on the windowed residual energy.

    The alarm threshold is ``tau_star + margin`` where ``tau_star`` is the
    calibrated worst training energy.  Warm-up samples never raise alarms.
    """

    tau_star: float
    margin: float
    window: int
    warmup: int = 0

    @property
    def threshold(self) -> float:
        return self.tau_star + self.margin

    def evaluate(self, residuals: np.ndarray) -> DetectionReport:
        energies = residual_energy(residuals, self.window)
        above = energies > self.threshold
        if self.warmup > 0:
            above[: self.warmup] = False
        idx = np.nonzero(above)[0]
        first = int(idx[0]) if idx.size else None
        return DetectionReport(
            energies=energies,
            alarm=first is not None,
            first_index=first,
            max_energy=float(energies.max()) if energies.size else 0.0,
        )


def calibrate_threshold(
    design: FilterDesign,
    q_list: list[np.ndarray],
    margin: float,
    window: int,
) -> Detector:
    """Detector calibrated on the training quadratic forms.

    ``tau_star`` is the square root of the largest training-instance energy
    of this particular filter; an empty or all-zero training set (the pure
    model-based mode) calibrates to ``tau_star = 0`` and the detector runs
    on the margin alone.
    """
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    tau = 0.0
    if q_list:
        tau = float(np.sqrt(max(worst_case_value(design.nbar, q_list), 0.0)))
    return Detector(tau_star=tau, margin=margin, window=window, warmup=design.d_n)
