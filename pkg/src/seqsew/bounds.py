"""Closed-form regret bounds, comparator oracles, and verification reports.

Every bound evaluator returns the full right-hand side of its guarantee,
including the comparator's own cumulative loss, so that a report's check is
simply ``measured cumulative loss <= rhs``.  Evaluation follows the
conventions ``0 * ln(1 + U / 0) = 0`` and the continuous extension of
``s -> s ln(1 + U / s)`` at s = 0.

Bound identifiers (also the names accepted by the CLI ``verify`` command):

========  ==================================================================
prop2     fixed forecaster, any valid (B, eta, tau)
cor3      fixed forecaster at the oracle tuning driven by (B_y, B_Phi)
prop5     adaptive-threshold forecaster, any tau
cor6      adaptive forecaster at tau = 1 / sqrt(B_Phi)
cor7      adaptive forecaster at tau = 1 / sqrt(d T)
thm8      fully automatic forecaster
cor9      fully automatic forecaster, uniform over an (l0 <= s, l1 <= U) ball
========  ==================================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Sequence

import numpy as np

from .errors import ArgumentError, ContractViolationError
from .forecasters import ProtocolResult, dyadic_ceil_pow2

__all__ = [
    "SequenceStats",
    "Comparator",
    "BoundReport",
    "prop2_rhs",
    "cor3_rhs",
    "prop5_rhs",
    "cor6_rhs",
    "cor7_rhs",
    "thm8_rhs",
    "cor9_rhs",
    "s_ln_term",
    "best_sparse_comparator",
    "verify",
    "mc_allowance_from_replays",
    "BOUND_NAMES",
]

BOUND_NAMES = ("prop2", "cor3", "prop5", "cor6", "cor7", "thm8", "cor9")

_MAX_ENUMERATED_SUPPORTS = 200_000
_REL_TOL = 1e-9


@dataclass(frozen=True)
class SequenceStats:
    """Scale statistics of a played sequence that the bounds depend on."""

    T: int
    max_y_sq: float
    gram_trace: float

    @classmethod
    def from_arrays(cls, features: np.ndarray, y: np.ndarray) -> "SequenceStats":
        features = np.atleast_2d(np.asarray(features, dtype=float))
        y = np.asarray(y, dtype=float)
        return cls(
            T=int(y.shape[0]),
            max_y_sq=float(np.max(y**2)) if y.size else 0.0,
            gram_trace=float(np.sum(features**2)),
        )

    @property
    def B_T1_sq(self) -> float:
        """Dyadic envelope of max y^2: the final squared threshold."""
        return dyadic_ceil_pow2(self.max_y_sq)

    @property
    def A_T(self) -> float:
        """2 + log2 ln(e + sqrt(gram trace)): the regime-count factor."""
        return 2.0 + math.log2(math.log(math.e + math.sqrt(self.gram_trace)))


@dataclass(frozen=True)
class Comparator:
    """A reference weight vector with its norms and cumulative loss cached."""

    u: np.ndarray
    l0: int
    l1: float
    cumulative_loss: float
    exact: bool = True

    @classmethod
    def from_vector(cls, u: np.ndarray, features: np.ndarray, y: np.ndarray, exact: bool = True) -> "Comparator":
        u = np.asarray(u, dtype=float)
        features = np.atleast_2d(np.asarray(features, dtype=float))
        y = np.asarray(y, dtype=float)
        loss = float(np.sum((y - features @ u) ** 2))
        return cls(
            u=u,
            l0=int(np.count_nonzero(u)),
            l1=float(np.sum(np.abs(u))),
            cumulative_loss=loss,
            exact=exact,
        )


def s_ln_term(s: float, U: float) -> float:
    """The map s -> s ln(1 + U / s), continuously extended by 0 at s = 0."""
    if s < 0.0 or U < 0.0:
        raise ArgumentError("s and U must be nonnegative")
    if s == 0.0:
        return 0.0
    ratio = U / s
    if math.isinf(ratio):
        # s is subnormal: use s ln(1 + U/s) ~ s (ln U - ln s), which still
        # vanishes as s -> 0 instead of overflowing.
        return s * (math.log(U) - math.log(s))
    return s * math.log1p(ratio)


def _sparsity_term(l0: int, l1: float, inner_scale: float) -> float:
    """l0 * ln(1 + inner_scale * l1 / l0) with the zero convention."""
    if l0 == 0:
        return 0.0
    return l0 * math.log1p(inner_scale * l1 / l0)


def prop2_rhs(comparator: Comparator, eta: float, tau: float, stats: SequenceStats) -> float:
    """Guarantee for the fixed forecaster: loss(u) + (4/eta) * sparsity term
    + tau^2 * Gram trace."""
    if not (eta > 0.0 and tau > 0.0):
        raise ArgumentError("eta and tau must be positive")
    return (
        comparator.cumulative_loss
        + (4.0 / eta) * _sparsity_term(comparator.l0, comparator.l1, 1.0 / tau)
        + tau**2 * stats.gram_trace
    )


def cor3_rhs(comparator: Comparator, B_y: float, B_Phi: float) -> float:
    """Fixed forecaster at the oracle tuning B = B_y, eta = 1/(8 B_y^2),
    tau = sqrt(16 B_y^2 / B_Phi)."""
    if not (B_y > 0.0 and B_Phi > 0.0):
        raise ArgumentError("B_y and B_Phi must be positive")
    return (
        comparator.cumulative_loss
        + 32.0
        * B_y**2
        * _sparsity_term(comparator.l0, comparator.l1, math.sqrt(B_Phi) / (4.0 * B_y))
        + 16.0 * B_y**2
    )


def prop5_rhs(comparator: Comparator, tau: float, stats: SequenceStats) -> float:
    """Guarantee for the adaptive-threshold forecaster at prior scale tau."""
    if not tau > 0.0:
        raise ArgumentError("tau must be positive")
    b_sq = stats.B_T1_sq
    return (
        comparator.cumulative_loss
        + 32.0 * b_sq * _sparsity_term(comparator.l0, comparator.l1, 1.0 / tau)
        + tau**2 * stats.gram_trace
        + 16.0 * b_sq
    )


def cor6_rhs(comparator: Comparator, B_Phi: float, stats: SequenceStats) -> float:
    """Adaptive forecaster at tau = 1 / sqrt(B_Phi)."""
    if not B_Phi > 0.0:
        raise ArgumentError("B_Phi must be positive")
    b_sq = stats.B_T1_sq
    return (
        comparator.cumulative_loss
        + 32.0 * b_sq * _sparsity_term(comparator.l0, comparator.l1, math.sqrt(B_Phi))
        + 16.0 * b_sq
        + 1.0
    )


def cor7_rhs(comparator: Comparator, d: int, stats: SequenceStats) -> float:
    """Adaptive forecaster at tau = 1 / sqrt(d T)."""
    if d < 1:
        raise ArgumentError("d must be a positive integer")
    b_sq = stats.B_T1_sq
    return (
        comparator.cumulative_loss
        + 32.0 * b_sq * _sparsity_term(comparator.l0, comparator.l1, math.sqrt(d * stats.T))
        + stats.gram_trace / (d * stats.T)
        + 16.0 * b_sq
    )


def thm8_rhs(comparator: Comparator, stats: SequenceStats) -> float:
    """Guarantee for the fully automatic forecaster."""
    log_gram = math.log(math.e + math.sqrt(stats.gram_trace))
    a_t = stats.A_T
    return (
        comparator.cumulative_loss
        + 256.0 * stats.max_y_sq * comparator.l0 * log_gram
        + 64.0 * stats.max_y_sq * a_t * _sparsity_term(comparator.l0, comparator.l1, 1.0)
        + (1.0 + 38.0 * stats.max_y_sq) * a_t
    )


def cor9_rhs(s: float, U: float, stats: SequenceStats) -> float:
    """Regret cap of the automatic forecaster, uniform over the ball
    {l0 <= s, l1 <= U}.  Add the ball's best cumulative loss to compare
    against a measured run."""
    if s < 0.0 or U < 0.0:
        raise ArgumentError("s and U must be nonnegative")
    log_gram = math.log(math.e + math.sqrt(stats.gram_trace))
    a_t = stats.A_T
    return (
        256.0 * stats.max_y_sq * s * log_gram
        + 64.0 * stats.max_y_sq * a_t * s_ln_term(s, U)
        + (1.0 + 38.0 * stats.max_y_sq) * a_t
    )


# ---------------------------------------------------------------------------
# Comparator oracle.
# ---------------------------------------------------------------------------


def _support_count(d: int, s: int) -> int:
    return sum(math.comb(d, k) for k in range(s + 1))


def best_sparse_comparator(
    features: np.ndarray,
    y: np.ndarray,
    s: int,
    allow_greedy: bool = False,
) -> Comparator:
    """Exact minimiser of the cumulative square loss over ||u||_0 <= s.

    Enumerates every support of size at most s and solves least squares on
    each (minimum-norm solution on rank deficiency).  Ties broken by
    smaller l1 norm, then lexicographic support.  Refuses d > 20 unless
    ``allow_greedy`` is set, in which case forward selection provides a
    clearly-labelled approximate answer (``exact=False``).
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(y, dtype=float)
    T, d = features.shape
    if s < 0 or s > d:
        raise ArgumentError(f"s must lie in [0, d]; got s={s}, d={d}")

    if d > 20 or _support_count(d, s) > _MAX_ENUMERATED_SUPPORTS:
        if not allow_greedy:
            raise ArgumentError(
                f"support enumeration refused for d={d}, s={s}; pass allow_greedy=True "
                "for approximate forward selection"
            )
        return _greedy_sparse_comparator(features, y, s)

    best: tuple[float, float, tuple[int, ...], np.ndarray] | None = None
    loss_scale = max(float(np.sum(y**2)), 1.0)
    tol = 1e-12 * loss_scale
    for k in range(s + 1):
        for support in combinations(range(d), k):
            u = np.zeros(d)
            if k > 0:
                cols = features[:, list(support)]
                coef = np.linalg.lstsq(cols, y, rcond=None)[0]
                u[list(support)] = coef
            loss = float(np.sum((y - features @ u) ** 2))
            l1 = float(np.sum(np.abs(u)))
            if best is None:
                best = (loss, l1, support, u)
                continue
            b_loss, b_l1, b_support, _ = best
            if loss < b_loss - tol:
                best = (loss, l1, support, u)
            elif abs(loss - b_loss) <= tol:
                if l1 < b_l1 - tol or (abs(l1 - b_l1) <= tol and support < b_support):
                    best = (loss, l1, support, u)
    assert best is not None
    return Comparator.from_vector(best[3], features, y, exact=True)


def _greedy_sparse_comparator(features: np.ndarray, y: np.ndarray, s: int) -> Comparator:
    T, d = features.shape
    support: list[int] = []
    for _ in range(min(s, d)):
        best_j, best_loss = None, None
        for j in range(d):
            if j in support:
                continue
            cols = features[:, support + [j]]
            coef = np.linalg.lstsq(cols, y, rcond=None)[0]
            loss = float(np.sum((y - cols @ coef) ** 2))
            if best_loss is None or loss < best_loss:
                best_j, best_loss = j, loss
        if best_j is None:
            break
        support.append(best_j)
    u = np.zeros(d)
    if support:
        cols = features[:, support]
        u[support] = np.linalg.lstsq(cols, y, rcond=None)[0]
    return Comparator.from_vector(u, features, y, exact=False)


# ---------------------------------------------------------------------------
# Verification reports.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """Outcome of checking one bound against one run."""

    bound: str
    lhs: float
    rhs: float
    slack: float
    mc_allowance: float
    witness_u: np.ndarray
    passed: bool
    witness_exact: bool = True

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "bound": self.bound,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "mc_allowance": self.mc_allowance,
            "witness_u": [float(v) for v in np.asarray(self.witness_u).ravel()],
            "witness_exact": self.witness_exact,
            "pass": bool(self.passed),
        }


def mc_allowance_from_replays(replay_losses: Sequence[float]) -> float:
    """Three sample standard deviations of the cumulative loss across
    reseeded replays: the slack granted to stochastic backends, whose
    integrals the guarantees assume exact."""
    losses = np.asarray(list(replay_losses), dtype=float)
    if losses.size < 2:
        raise ArgumentError("need at least two replays to size an allowance")
    return 3.0 * float(np.std(losses, ddof=1))


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ContractViolationError(message)


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=_REL_TOL, abs_tol=1e-300)


def verify(
    result: ProtocolResult,
    bound_name: str,
    comparator: Comparator,
    *,
    B_y: float | None = None,
    B_Phi: float | None = None,
    s: float | None = None,
    U: float | None = None,
    mc_allowance: float = 0.0,
) -> BoundReport:
    """Check one named bound against a finished run at a comparator.

    Raises :class:`ContractViolationError` when the requested bound does not
    apply to the run's forecaster or tuning (every bound is a statement
    about a specific algorithm; checking it elsewhere would be vacuous).
    Any comparator gives a valid right-hand side, so passing at the supplied
    witness is sound; the report records the witness used.
    """
    if bound_name not in BOUND_NAMES:
        raise ArgumentError(f"unknown bound {bound_name!r}; expected one of {BOUND_NAMES}")
    if comparator is None:
        raise ArgumentError("a comparator witness is required")

    info = result.forecaster_info
    kind = info.get("kind")
    stats = SequenceStats.from_arrays(result.features, result.y)
    lhs = float(np.sum((result.y - result.predictions) ** 2))
    max_abs_y = math.sqrt(stats.max_y_sq)

    if bound_name == "prop2":
        _require(kind == "fixed", f"prop2 applies to the fixed forecaster, run used {kind!r}")
        B, eta, tau = info["B"], info["eta"], info["tau"]
        _require(max_abs_y <= B * (1.0 + _REL_TOL), "prop2 requires B >= max |y_t| on the run")
        _require(eta <= 1.0 / (8.0 * B**2) * (1.0 + _REL_TOL), "prop2 requires eta <= 1/(8 B^2)")
        rhs = prop2_rhs(comparator, eta, tau, stats)
    elif bound_name == "cor3":
        _require(kind == "fixed", f"cor3 applies to the fixed forecaster, run used {kind!r}")
        if B_y is None or B_Phi is None:
            raise ArgumentError("cor3 needs B_y and B_Phi")
        _require(_close(info["B"], B_y), "cor3 requires the run tuning B = B_y")
        _require(_close(info["eta"], 1.0 / (8.0 * B_y**2)), "cor3 requires eta = 1/(8 B_y^2)")
        _require(
            _close(info["tau"], math.sqrt(16.0 * B_y**2 / B_Phi)),
            "cor3 requires tau = sqrt(16 B_y^2 / B_Phi)",
        )
        _require(max_abs_y <= B_y * (1.0 + _REL_TOL), "cor3 requires max |y_t| <= B_y")
        _require(stats.gram_trace <= B_Phi * (1.0 + _REL_TOL), "cor3 requires Gram trace <= B_Phi")
        rhs = cor3_rhs(comparator, B_y, B_Phi)
    elif bound_name in ("prop5", "cor6", "cor7"):
        _require(kind == "adaptive", f"{bound_name} applies to the adaptive forecaster, run used {kind!r}")
        _require(
            float(info.get("clip_center", 0.0)) == 0.0,
            f"{bound_name} applies to the plain (uncentred) clipping scheme",
        )
        tau = info["tau"]
        if bound_name == "prop5":
            rhs = prop5_rhs(comparator, tau, stats)
        elif bound_name == "cor6":
            if B_Phi is None:
                raise ArgumentError("cor6 needs B_Phi")
            _require(_close(tau, 1.0 / math.sqrt(B_Phi)), "cor6 requires tau = 1/sqrt(B_Phi)")
            _require(stats.gram_trace <= B_Phi * (1.0 + _REL_TOL), "cor6 requires Gram trace <= B_Phi")
            rhs = cor6_rhs(comparator, B_Phi, stats)
        else:
            d = int(info["dim"])
            _require(
                _close(tau, 1.0 / math.sqrt(d * stats.T)),
                "cor7 requires tau = 1/sqrt(d T)",
            )
            rhs = cor7_rhs(comparator, d, stats)
    elif bound_name == "thm8":
        _require(kind == "auto", f"thm8 applies to the automatic forecaster, run used {kind!r}")
        rhs = thm8_rhs(comparator, stats)
    else:  # cor9
        _require(kind == "auto", f"cor9 applies to the automatic forecaster, run used {kind!r}")
        if s is None or U is None:
            raise ArgumentError("cor9 needs the ball parameters s and U")
        _require(comparator.l0 <= s, "cor9 witness must satisfy ||u||_0 <= s")
        _require(comparator.l1 <= U * (1.0 + _REL_TOL), "cor9 witness must satisfy ||u||_1 <= U")
        rhs = comparator.cumulative_loss + cor9_rhs(s, U, stats)

    slack = rhs - lhs
    return BoundReport(
        bound=bound_name,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        mc_allowance=float(mc_allowance),
        witness_u=np.asarray(comparator.u, dtype=float),
        passed=bool(slack + mc_allowance >= 0.0),
        witness_exact=comparator.exact,
    )
