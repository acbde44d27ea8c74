"""X-quadrature homodyne discrimination of coherent-state phases.

A probe |αe^{iθ}⟩ produces a Gaussian X distribution centered at 2αcosθ with
unit variance.  Phases are classified by nearest peak center; the pairwise
error probability is ½·erfc(X_d/(2√2)) with X_d the peak distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc


@dataclass(frozen=True)
class ProbeState:
    """Coherent probe amplitude and accumulated phase."""

    alpha: float
    theta: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")

    @property
    def peak_center(self) -> float:
        return 2.0 * self.alpha * math.cos(self.theta)


def quadrature_pdf(x, probe: ProbeState):
    """|⟨X|αe^{iθ}⟩|²: unit-variance Gaussian centered at 2αcosθ."""
    mu = probe.peak_center
    return np.exp(-0.5 * (np.asarray(x, dtype=float) - mu) ** 2) / math.sqrt(2.0 * math.pi)


def peak_separation(alpha: float, theta_a: float, theta_b: float) -> tuple[float, float]:
    """Midpoint X_m = α(cosθ_a + cosθ_b) and distance X_d = 2α(cosθ_a − cosθ_b)."""
    ca, cb = math.cos(theta_a), math.cos(theta_b)
    return alpha * (ca + cb), 2.0 * alpha * (ca - cb)


def error_probability(x_d: float) -> float:
    """Pairwise misclassification probability ½·erfc(|X_d|/(2√2))."""
    return 0.5 * float(erfc(abs(x_d) / (2.0 * math.sqrt(2.0))))


@dataclass(frozen=True)
class PhaseBinSet:
    """Ordered phase hypotheses with classification thresholds on the X axis."""

    alpha: float
    bins: tuple[tuple[str, float], ...]

    def __post_init__(self):
        centers = [2.0 * self.alpha * math.cos(th) for _, th in self.bins]
        if self.alpha > 0 and len(set(centers)) != len(centers):
            raise ValueError("bin peak centers are not distinct")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.bins)

    @property
    def thetas(self) -> tuple[float, ...]:
        return tuple(th for _, th in self.bins)

    def centers(self) -> np.ndarray:
        return np.array([2.0 * self.alpha * math.cos(th) for _, th in self.bins])

    def classify(self, x: float) -> int:
        """Index of the bin with the nearest peak center; ties to lower index."""
        d = np.abs(self.centers() - x)
        return int(np.argmin(d))

    def classify_many(self, xs: np.ndarray) -> np.ndarray:
        d = np.abs(self.centers()[None, :] - np.asarray(xs, dtype=float)[:, None])
        return np.argmin(d, axis=1)

    def index_for_theta(self, theta: float, tol: float = 1e-12) -> int:
        for i, (_, th) in enumerate(self.bins):
            if abs(th - theta) <= tol:
                return i
        raise ValueError(f"theta {theta} matches no bin")


def sample_and_classify(probe: ProbeState, bins: PhaseBinSet,
                        rng: np.random.Generator) -> tuple[float, str, bool]:
    """Draw one X sample and classify it; returns (X, assigned label, correct)."""
    true_idx = bins.index_for_theta(probe.theta)
    x = float(rng.normal(loc=probe.peak_center, scale=1.0))
    assigned = bins.classify(x)
    return x, bins.labels[assigned], assigned == true_idx


def confusion_matrix(bins: PhaseBinSet) -> np.ndarray:
    """M[i, j] = P(assigned bin j | true bin i) under Gaussian X statistics.

    Decision regions are intervals between midpoints of adjacent sorted
    peak centers, which is exactly the nearest-center rule.
    """
    from scipy.stats import norm

    centers = bins.centers()
    order = np.argsort(centers)
    sorted_centers = centers[order]
    # region boundaries between consecutive sorted centers
    edges = (sorted_centers[:-1] + sorted_centers[1:]) / 2.0
    k = len(centers)
    m = np.zeros((k, k))
    for i in range(k):
        cdf = norm.cdf(edges, loc=centers[i], scale=1.0)
        probs = np.diff(np.concatenate(([0.0], cdf, [1.0])))
        for rank, j in enumerate(order):
            m[i, j] = probs[rank]
    return m


def _worst_gap(thetas) -> float:
    cosines = sorted({math.cos(th) for th in thetas})
    if len(cosines) < 2:
        raise ValueError("need at least two distinct cos(theta) values")
    return min(b - a for a, b in zip(cosines, cosines[1:]))


def min_alpha(thetas, p_target: float = 0.01, xd_threshold: float | None = None,
              rel_tol: float = 1e-6) -> float:
    """Smallest α whose worst adjacent phase pair meets the error target.

    With ``xd_threshold`` set, the criterion is the fixed peak-distance gate
    X_d > xd_threshold; otherwise the exact error-probability inversion
    error_probability(X_d) ≤ p_target is used.  Bisection to ``rel_tol``.
    """
    if xd_threshold is None and not (0.0 < p_target < 0.5):
        raise ValueError("p_target must be in (0, 0.5)")
    gap = _worst_gap(thetas)

    def ok(alpha: float) -> bool:
        x_d = 2.0 * alpha * gap
        if xd_threshold is not None:
            return x_d >= xd_threshold
        return error_probability(x_d) <= p_target

    lo, hi = 0.0, 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("no finite alpha satisfies the target")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
