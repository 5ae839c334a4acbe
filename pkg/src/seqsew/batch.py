"""Online-to-batch conversion and risk evaluation.

A batch estimator is built by running the adaptive forecaster once through
an i.i.d. (or fixed-design) sample and retaining, for every round, a
snapshot of the posterior together with the clip threshold in force at
that round.  Each snapshot defines a per-round regressor (the posterior
mean of the clipped linear predictor); the batch estimator averages them:

* random design: the plain uniform average over rounds,
* fixed design: the average restricted, at each seen design point, to the
  rounds that visited it (and 0 at unseen points),
* offset variant: the first observation is sacrificed as a clip anchor and
  rounds 2..T are run with predictions clipped to [Y_1 - B', Y_1 + B'];
  this removes the mean-of-Y bias terms and makes the whole scheme
  translation equivariant.

Snapshots are retained explicitly (not re-simulated) so that predictions
at new points are deterministic; for T <= 1000 rounds and <= 10^4 support
points per snapshot this costs at most a few hundred MB, the documented
memory budget.

The noise families used in the risk corollaries are also defined here,
with generators that certify the parameters they satisfy, plus the
maximal-inequality caps ``psi_bound`` on E[max_t Z_t^2] / T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import ArgumentError
from .forecasters import SeqSEWAdaptive
from .posterior import BackendConfig, FrozenCloud

__all__ = [
    "NoiseFamily",
    "psi_bound",
    "empirical_max_sq",
    "BatchEstimator",
    "fit_random_design",
    "fit_fixed_design",
    "fit_remark15",
    "risk",
    "per_round_risks",
    "risk_bound_rhs",
]


@dataclass(frozen=True)
class NoiseFamily:
    """A centred noise assumption: bd (bounded), sg (subgaussian),
    bem (bounded exponential moment), or bm (bounded alpha-th moment).

    Construct through the classmethods, which validate parameters and
    yield generators certified to satisfy exactly the advertised
    condition."""

    kind: str
    B: float = 0.0
    sigma_sq: float = 0.0
    alpha: float = 0.0
    M: float = 0.0

    @classmethod
    def bounded(cls, B: float) -> "NoiseFamily":
        if not B > 0.0:
            raise ArgumentError("bd needs B > 0")
        return cls(kind="bd", B=float(B))

    @classmethod
    def subgaussian(cls, sigma_sq: float) -> "NoiseFamily":
        if not sigma_sq > 0.0:
            raise ArgumentError("sg needs sigma_sq > 0")
        return cls(kind="sg", sigma_sq=float(sigma_sq))

    @classmethod
    def bounded_exp_moment(cls, alpha: float, M: float = 2.0) -> "NoiseFamily":
        if not (alpha > 0.0 and M > 1.0):
            raise ArgumentError("bem needs alpha > 0 and M > 1")
        return cls(kind="bem", alpha=float(alpha), M=float(M))

    @classmethod
    def bounded_moment(cls, alpha: float, M: float) -> "NoiseFamily":
        if not alpha > 2.0:
            raise ArgumentError("bm needs alpha > 2")
        if not M > 0.0:
            raise ArgumentError("bm needs M > 0")
        return cls(kind="bm", alpha=float(alpha), M=float(M))

    def draw(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        """Centred draws certified to satisfy this family's condition.

        bd: uniform on [-B, B]. sg: Gaussian with variance sigma_sq (the
        subgaussian bound holds with equality).  bem: Laplace with scale
        (1 - 1/M) / alpha, so E exp(alpha |Z|) = M exactly.  bm: Student t
        with alpha + 2 degrees of freedom, scaled so E |Z|^alpha = M.
        """
        if self.kind == "bd":
            return rng.uniform(-self.B, self.B, size=size)
        if self.kind == "sg":
            return math.sqrt(self.sigma_sq) * rng.standard_normal(size)
        if self.kind == "bem":
            scale = (1.0 - 1.0 / self.M) / self.alpha
            return rng.laplace(0.0, scale, size=size)
        nu = self.alpha + 2.0
        scale = (self.M / _student_abs_moment(nu, self.alpha)) ** (1.0 / self.alpha)
        return scale * rng.standard_t(nu, size=size)


def _student_abs_moment(nu: float, alpha: float) -> float:
    """E |T_nu|^alpha for Student t with nu > alpha degrees of freedom."""
    log_m = (
        0.5 * alpha * math.log(nu)
        + gammaln((alpha + 1.0) / 2.0)
        + gammaln((nu - alpha) / 2.0)
        - 0.5 * math.log(math.pi)
        - gammaln(nu / 2.0)
    )
    return math.exp(log_m)


def psi_bound(family: NoiseFamily, T: int) -> float:
    """Analytic cap on E[max_{t<=T} Z_t^2] / T for the family.

    bd: B^2/T.  sg: 2 sigma^2 ln(2eT)/T.  bem: ln^2((M+e)T)/(alpha^2 T).
    bm: M^(2/alpha) / T^((alpha-2)/alpha).
    """
    if T < 1:
        raise ArgumentError("T must be >= 1")
    if family.kind == "bd":
        return family.B**2 / T
    if family.kind == "sg":
        return 2.0 * family.sigma_sq * math.log(2.0 * math.e * T) / T
    if family.kind == "bem":
        return math.log((family.M + math.e) * T) ** 2 / (family.alpha**2 * T)
    if family.alpha <= 2.0:
        raise ArgumentError("bm bound needs alpha > 2")
    return family.M ** (2.0 / family.alpha) / T ** ((family.alpha - 2.0) / family.alpha)


def empirical_max_sq(draws: np.ndarray) -> float:
    """Average of max_t Z_t^2 over replications.

    ``draws`` is a (replications, T) matrix, one replication per row;
    at least 100 replications are required for the estimate to mean much.
    """
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    if draws.shape[0] < 100:
        raise ArgumentError("need at least 100 replications")
    return float(np.mean(np.max(draws**2, axis=1)))


# ---------------------------------------------------------------------------
# Estimators.
# ---------------------------------------------------------------------------


def _design_key(x: Any) -> bytes:
    return np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float))).tobytes()


@dataclass
class BatchEstimator:
    """Average of per-round clipped posterior-mean regressors."""

    mode: str
    snapshots: list[tuple[FrozenCloud, float]]
    dictionary: Any
    anchor: float = 0.0
    design_points: list[Any] | None = None

    def _features(self, x: Any) -> np.ndarray:
        if self.dictionary is None:
            return np.asarray(x, dtype=float)
        return np.asarray(self.dictionary.features(x), dtype=float)

    def predict_components(self, x: Any) -> tuple[float, float]:
        """(anchor, averaged clipped deviation); the prediction is their sum.

        Exposed separately so translation equivariance of the offset
        variant can be checked exactly: shifting all outcomes by c shifts
        the anchor by c and leaves the deviations bit-identical."""
        phi = self._features(x)
        if self.mode == "fixed_design_grouped":
            key = _design_key(x)
            vals = [
                cloud.predict_clipped_mean(phi, b)
                for (cloud, b), point in zip(self.snapshots, self.design_points)
                if _design_key(point) == key
            ]
            if not vals:
                return 0.0, 0.0
            return self.anchor, float(np.mean(vals))
        deltas = [cloud.predict_clipped_mean(phi, b) for cloud, b in self.snapshots]
        return self.anchor, float(np.mean(deltas))

    def predict(self, x: Any) -> float:
        anchor, delta = self.predict_components(x)
        return anchor + delta

    def predict_many(self, xs: Sequence[Any]) -> np.ndarray:
        """Vectorised predictions at many points (random-design modes)."""
        if self.mode == "fixed_design_grouped":
            return np.asarray([self.predict(x) for x in xs], dtype=float)
        phi = np.vstack([self._features(x) for x in xs])  # (m, d)
        total = np.zeros(phi.shape[0])
        for cloud, b in self.snapshots:
            margins = cloud.samples @ phi.T  # (n, m)
            clipped = np.clip(margins, -b, b)
            total += cloud.weights() @ clipped
        return self.anchor + total / len(self.snapshots)

    @property
    def max_threshold(self) -> float:
        return max((b for _, b in self.snapshots), default=0.0)


def _online_pass(
    samples: Sequence[tuple[Any, float]],
    dictionary: Any,
    backend: BackendConfig,
    seed: int | np.random.Generator | None,
    tau: float,
    clip_center: float = 0.0,
    skip_first: bool = False,
) -> tuple[list[tuple[FrozenCloud, float]], SeqSEWAdaptive]:
    dim = dictionary.d if dictionary is not None else len(np.atleast_1d(samples[0][0]))
    forecaster = SeqSEWAdaptive(dim, tau, backend, seed=seed, clip_center=clip_center)
    snapshots: list[tuple[FrozenCloud, float]] = []
    for x, y in samples[1:] if skip_first else samples:
        phi = dictionary.features(x) if dictionary is not None else np.asarray(x, dtype=float)
        forecaster.predict(np.asarray(phi, dtype=float))
        snapshots.append((forecaster.cloud.snapshot(), forecaster.state.B))
        forecaster.observe(float(y))
    return snapshots, forecaster


def fit_random_design(
    samples: Sequence[tuple[Any, float]],
    dictionary: Any,
    backend: BackendConfig | None = None,
    seed: int | np.random.Generator | None = None,
) -> BatchEstimator:
    """One online pass at tau = 1/sqrt(d T); uniform average of the
    per-round regressors."""
    if len(samples) < 1:
        raise ArgumentError("need at least one sample")
    backend = backend or BackendConfig()
    T = len(samples)
    d = dictionary.d if dictionary is not None else len(np.atleast_1d(samples[0][0]))
    snapshots, _ = _online_pass(samples, dictionary, backend, seed, tau=1.0 / math.sqrt(d * T))
    return BatchEstimator(mode="random_design_average", snapshots=snapshots, dictionary=dictionary)


def fit_fixed_design(
    samples: Sequence[tuple[Any, float]],
    dictionary: Any,
    backend: BackendConfig | None = None,
    seed: int | np.random.Generator | None = None,
) -> BatchEstimator:
    """Same online pass; predictions group rounds by exact design point
    (design points are generated values, so equality is exact, with no
    tolerance matching) and vanish off the design."""
    if len(samples) < 1:
        raise ArgumentError("need at least one sample")
    backend = backend or BackendConfig()
    T = len(samples)
    d = dictionary.d if dictionary is not None else len(np.atleast_1d(samples[0][0]))
    snapshots, _ = _online_pass(samples, dictionary, backend, seed, tau=1.0 / math.sqrt(d * T))
    return BatchEstimator(
        mode="fixed_design_grouped",
        snapshots=snapshots,
        dictionary=dictionary,
        design_points=[x for x, _ in samples],
    )


def fit_remark15(
    samples: Sequence[tuple[Any, float]],
    dictionary: Any,
    backend: BackendConfig | None = None,
    seed: int | np.random.Generator | None = None,
) -> BatchEstimator:
    """Offset-clipped variant: round 1 only provides the anchor Y_1;
    rounds 2..T run at tau = 1/sqrt(d (T-1)) with predictions clipped to
    [Y_1 - B', Y_1 + B'], the threshold tracking max |Y_s - Y_1|^2."""
    if len(samples) < 2:
        raise ArgumentError("the offset variant needs T >= 2 samples")
    backend = backend or BackendConfig()
    T = len(samples)
    d = dictionary.d if dictionary is not None else len(np.atleast_1d(samples[0][0]))
    anchor = float(samples[0][1])
    snapshots, _ = _online_pass(
        samples,
        dictionary,
        backend,
        seed,
        tau=1.0 / math.sqrt(d * (T - 1)),
        clip_center=anchor,
        skip_first=True,
    )
    return BatchEstimator(
        mode="remark15_offset",
        snapshots=snapshots,
        dictionary=dictionary,
        anchor=anchor,
    )


def risk(
    estimator: BatchEstimator,
    truth_f: Callable[[Any], float],
    design_sampler: Callable[[np.random.Generator, int], Sequence[Any]] | None = None,
    n_eval: int = 0,
    rng: np.random.Generator | None = None,
) -> float:
    """Squared risk of the estimator against a known truth.

    Fixed design: exact design-averaged squared error over the training
    points.  Random design: Monte-Carlo average over ``n_eval`` fresh
    draws from ``design_sampler``.
    """
    if estimator.mode == "fixed_design_grouped":
        points = estimator.design_points
        errs = [(float(truth_f(x)) - estimator.predict(x)) ** 2 for x in points]
        return float(np.mean(errs))
    if n_eval < 1:
        raise ArgumentError("random-design risk needs n_eval >= 1")
    if design_sampler is None or rng is None:
        raise ArgumentError("random-design risk needs a design sampler and rng")
    xs = design_sampler(rng, n_eval)
    preds = estimator.predict_many(xs)
    truths = np.asarray([float(truth_f(x)) for x in xs])
    return float(np.mean((truths - preds) ** 2))


def per_round_risks(
    estimator: BatchEstimator,
    truth_f: Callable[[Any], float],
    xs: Sequence[Any],
) -> np.ndarray:
    """Squared risk of each per-round regressor on the given points
    (used to check the averaging direction: risk of the average never
    exceeds the average of these)."""
    phi = np.vstack([estimator._features(x) for x in xs])
    truths = np.asarray([float(truth_f(x)) for x in xs])
    out = []
    for cloud, b in estimator.snapshots:
        margins = cloud.samples @ phi.T
        clipped = np.clip(margins, -b, b)
        preds = estimator.anchor + cloud.weights() @ clipped
        out.append(float(np.mean((truths - preds) ** 2)))
    return np.asarray(out)


# ---------------------------------------------------------------------------
# Risk-bound right-hand sides.
# ---------------------------------------------------------------------------


def _ln_term(l0: int, l1: float, d: int, T: int) -> float:
    if l0 == 0:
        return 0.0
    return l0 * math.log1p(math.sqrt(d * T) * l1 / l0)


def risk_bound_rhs(variant: str, **kw: Any) -> float:
    """Right-hand side of a named risk guarantee, at a supplied comparator.

    Common keyword arguments: ``approx_error`` (the comparator's own risk),
    ``T``, ``d``, ``l0``, ``l1``.  Variant-specific:

    - ``thm10``: ``e_max_y_sq`` (measured or analytic E[max Y^2]),
      ``sum_feature_l2`` (sum over features of the squared L2 norm).
    - ``cor11``: ``mean_y``, ``psi_t``, ``sum_feature_l2``.
    - ``cor12``: ``f_inf``, ``sigma_sq``, ``sum_feature_l2``.
    - ``thm13``: ``e_max_y_sq``, ``design_gram_trace``.
    - ``cor14``: ``max_f_sq``, ``psi_t``, ``design_gram_trace``.
    """
    try:
        T = int(kw["T"])
        d = int(kw["d"])
        l0 = int(kw["l0"])
        l1 = float(kw["l1"])
        approx = float(kw["approx_error"])
    except KeyError as missing:
        raise ArgumentError(f"risk_bound_rhs missing input {missing}") from None
    ln_term = _ln_term(l0, l1, d, T)

    if variant == "thm10":
        e_max = float(kw["e_max_y_sq"])
        feat = float(kw["sum_feature_l2"])
        return approx + 64.0 * (e_max / T) * ln_term + feat / (d * T) + 32.0 * e_max / T
    if variant == "cor11":
        amp = float(kw["mean_y"]) ** 2 / T + float(kw["psi_t"])
        feat = float(kw["sum_feature_l2"])
        return approx + 128.0 * amp * ln_term + feat / (d * T) + 64.0 * amp
    if variant == "cor12":
        amp = float(kw["f_inf"]) ** 2 + 2.0 * float(kw["sigma_sq"]) * math.log(2.0 * math.e * T)
        feat = float(kw["sum_feature_l2"])
        return approx + 128.0 * (amp / T) * ln_term + feat / (d * T) + 64.0 * amp / T
    if variant == "thm13":
        e_max = float(kw["e_max_y_sq"])
        gram = float(kw["design_gram_trace"])
        return approx + 64.0 * (e_max / T) * ln_term + gram / (d * T**2) + 32.0 * e_max / T
    if variant == "cor14":
        amp = float(kw["max_f_sq"]) / T + float(kw["psi_t"])
        gram = float(kw["design_gram_trace"])
        return approx + 128.0 * amp * ln_term + gram / (d * T**2) + 64.0 * amp
    raise ArgumentError(f"unknown risk bound variant {variant!r}")
