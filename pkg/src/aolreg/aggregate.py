"""Model-selection aggregation of fixed predictors on a held-out sample."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Dataset, Member, Mixture, Predictor
from .empirical import _table, _values, emp_risk, emp_risks

STAR = "star"
EXP_WEIGHTS = "exp-weights"


@dataclass(frozen=True)
class AggregatorSpec:
    kind: str = STAR
    beta: float = 4.0

    def __post_init__(self):
        if self.kind not in (STAR, EXP_WEIGHTS):
            raise ValueError(f"unknown aggregator {self.kind!r}")
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def segment_ls(g_a, g_b, d: Dataset) -> float:
    """Best ``lam`` in [0, 1] for ``(1 - lam) g_a + lam g_b`` on ``d``."""
    st = d.stats
    a = _values(g_a)
    diff = _values(g_b) - a
    den = float(st.counts @ (diff * diff))
    if den <= 0.0:
        return 0.0
    num = float((st.sums - st.counts * a) @ diff)
    return min(max(num / den, 0.0), 1.0)


def _pair(f_hat: Predictor, g: Predictor, lam: float) -> Mixture:
    if lam <= 0.0:
        return Mixture([f_hat], [1.0])
    return Mixture([f_hat, g], [1.0 - lam, lam])


class ExplicitFamily:
    """A finite list of candidates held as a value table."""

    def __init__(self, candidates):
        if len(candidates) == 0:
            raise ValueError("no candidates to aggregate")
        self.candidates = candidates
        self.table = _table(candidates)

    @property
    def size(self) -> int:
        return self.table.shape[0]

    def member(self, i: int) -> Predictor:
        if isinstance(self.candidates, np.ndarray):
            return Member(self.table[i], index=i)
        return self.candidates[i]

    def erm(self, d: Dataset) -> Predictor:
        return self.member(int(np.argmin(emp_risks(self.table, d))))

    def star(self, d: Dataset) -> Predictor:
        st = d.stats
        T = self.table
        i0 = int(np.argmin(emp_risks(T, d)))
        f_hat = self.member(i0)
        D = T - T[i0]
        den = (D * D) @ st.counts
        num = D @ (st.sums - st.counts * T[i0])
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = np.where(den > 0.0, num / den, 0.0)
        lam = np.clip(lam, 0.0, 1.0)
        # risk change along each segment relative to f_hat
        delta = (lam * lam * den - 2.0 * lam * num) / st.n
        j = int(np.argmin(delta))
        if not delta[j] < 0.0:
            return _pair(f_hat, f_hat, 0.0)
        out = _pair(f_hat, self.member(j), float(lam[j]))
        if emp_risk(out, d) > emp_risk(f_hat, d):
            return _pair(f_hat, f_hat, 0.0)
        return out

    def ew(self, d: Dataset, beta: float) -> Predictor:
        return Mixture([self.member(i) for i in range(self.size)], ew_weights(emp_risks(self.table, d), d.n, beta))


def ew_weights(risks: np.ndarray, n: int, beta: float) -> np.ndarray:
    """``theta_j`` proportional to ``exp(-beta n risk_j)``."""
    logits = -beta * n * np.asarray(risks, dtype=float)
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def _family(candidates):
    if hasattr(candidates, "star") and hasattr(candidates, "ew"):
        return candidates
    return ExplicitFamily(candidates)


def star_aggregate(candidates, d: Dataset) -> Predictor:
    """Best point on the star joining the ERM to every other candidate.

    The result never has larger empirical risk on ``d`` than any candidate.
    """
    return _family(candidates).star(d)


def ew_aggregate(candidates, d: Dataset, beta: float = 4.0) -> Predictor:
    if not beta > 0:
        raise ValueError("beta must be positive")
    return _family(candidates).ew(d, beta)


def ms_aggregate(spec: AggregatorSpec, candidates, d: Dataset) -> Predictor:
    fam = _family(candidates)
    if spec.kind == STAR:
        return fam.star(d)
    return fam.ew(d, spec.beta)
