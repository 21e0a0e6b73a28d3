"""Discrete-design regression worlds with exact risk oracles.

Labels are Bernoulli(eta(x)), so the risk of a predictor ``f`` is
``sum_x mu(x) [(f(x) - eta(x))^2 + eta(x)(1 - eta(x))]`` and can be computed
without sampling.  The best risk inside the reference class is computed by a
class-specific oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .bounds import exact_power, strict_ceil
from .domain import BoxSequence, Dataset, DictionaryHull, FiniteList, FunctionSpec, Predictor, VcIndicator

ORACLE_TOL = 1e-8
SAMPLE_LIMIT = 10 ** 6


@dataclass(frozen=True, eq=False)
class World:
    """A data-generating distribution over atoms ``0 .. support_size - 1``."""

    mu: np.ndarray
    eta: np.ndarray
    reference: FunctionSpec
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    omega: np.ndarray | None = None

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        eta = np.array(self.eta, dtype=float)
        if mu.ndim != 1 or mu.shape != eta.shape:
            raise ValueError("mu and eta must be vectors over the same support")
        if mu.min() < 0 or abs(mu.sum() - 1.0) > 1e-12:
            raise ValueError("mu must be a probability vector")
        if eta.min() < 0.0 or eta.max() > 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.reference.support_size != mu.size:
            raise ValueError("reference class and world disagree on the support")
        mu.setflags(write=False)
        eta.setflags(write=False)
        if self.omega is not None:
            omega = np.array(self.omega, dtype=np.int64)
            omega.setflags(write=False)
            object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "eta", eta)

    @property
    def support_size(self) -> int:
        return self.mu.size

    @property
    def noise(self) -> float:
        return float(self.mu @ (self.eta * (1.0 - self.eta)))

    @property
    def world_id(self) -> str:
        bits = [self.kind] + [f"{k}={v}" for k, v in sorted(self.params.items()) if k != "base"]
        return ":".join(bits)

    def risk_of_values(self, values: np.ndarray) -> float:
        diff = np.asarray(values, dtype=float) - self.eta
        return float(self.mu @ (diff * diff)) + self.noise

    def best_in_class(self) -> np.ndarray:
        return _cached_oracle(self)[0]

    def best_risk(self) -> float:
        """``inf_{f in F} L(f)``."""
        return _cached_oracle(self)[1]

    def approximation_error(self) -> float:
        """``inf_{f in F} ||f - eta||^2``."""
        return max(self.best_risk() - self.noise, 0.0)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "params": dict(self.params)}
        if self.omega is not None:
            out["omega"] = self.omega.tolist()
        return out


_ORACLE_CACHE: dict[int, tuple] = {}


def _cached_oracle(w: World):
    key = id(w)
    hit = _ORACLE_CACHE.get(key)
    if hit is None or hit[0] is not w:
        best = class_oracle(w.reference, w.mu, w.eta)
        risk = w.risk_of_values(best)
        hit = (w, best, risk)
        if len(_ORACLE_CACHE) > 256:
            _ORACLE_CACHE.clear()
        _ORACLE_CACHE[key] = hit
    return hit[1], hit[2]


def class_oracle(spec: FunctionSpec, mu: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Values of a risk minimizer over the class (population version)."""
    if isinstance(spec, FiniteList):
        diff = spec.members - eta
        return spec.members[int(np.argmin((diff * diff) @ mu))]
    if isinstance(spec, BoxSequence):
        lo, hi = spec.bounds()
        return np.clip(eta, lo, hi)
    if isinstance(spec, VcIndicator):
        a, b = spec.amplitude, spec.base
        gain = mu * ((b - eta) ** 2 - (b + a - eta) ** 2)
        atoms = np.flatnonzero(gain > 0)
        order = atoms[np.lexsort((atoms, -gain[atoms]))]
        return spec.indicator(order[: spec.d])
    if isinstance(spec, DictionaryHull):
        D = spec.dictionary
        best, best_val = None, np.inf
        for nu in spec.patterns():
            A = np.ascontiguousarray(D[list(nu)])
            Q = (A * mu) @ A.T
            bvec = A @ (mu * eta)
            c = float(mu @ (eta * eta))
            theta0 = np.zeros(len(nu))
            theta0[int(np.argmin(np.diag(Q) - 2.0 * bvec))] = 1.0
            theta, _, _, trace = kernels.frank_wolfe(Q, bvec, c, theta0, ORACLE_TOL, 100_000)
            val = float(trace[-1])
            if val < best_val:
                best_val, best = val, np.asarray(theta) @ A
        return np.clip(best, 0.0, 1.0)
    raise TypeError(f"no oracle for {type(spec).__name__}")


def sample_world(w: World, n: int, rng: np.random.Generator) -> Dataset:
    """``n`` i.i.d. pairs; ``x`` by inverse CDF, ``y ~ Bernoulli(eta(x))``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    cdf = np.cumsum(w.mu)
    last = int(np.flatnonzero(w.mu > 0)[-1])
    cdf[last:] = 1.0
    x = np.searchsorted(cdf, rng.random(n), side="right")
    y = (rng.random(n) < w.eta[x]).astype(float)
    return Dataset(x, y, w.support_size)


def _values(pred) -> np.ndarray:
    return pred.values if isinstance(pred, Predictor) else np.asarray(pred, dtype=float)


def exact_risk(w: World, pred) -> float:
    return w.risk_of_values(_values(pred))


def excess_risk(w: World, pred) -> float:
    return exact_risk(w, pred) - w.best_risk()


# ---------------------------------------------------------------------------
# sparse binary codes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HammingCode:
    """Supports of binary vectors of length ``k`` with pairwise Hamming distance >= ``d``."""

    k: int
    d: int
    supports: tuple
    exhaustive: bool

    def __len__(self) -> int:
        return len(self.supports)

    @property
    def cardinality_target(self) -> float:
        """Lower bound ``(d/4) log(k/(6d))`` on ``log |code|`` that the packing aims for."""
        return self.d / 4.0 * math.log(self.k / (6.0 * self.d))

    @property
    def meets_cardinality_bound(self) -> bool:
        return math.log(len(self)) >= self.cardinality_target

    def vectors(self) -> np.ndarray:
        B = np.zeros((len(self), self.k), dtype=np.uint8)
        for i, s in enumerate(self.supports):
            B[i, list(s)] = 1
        return B

    def vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.k, dtype=np.int64)
        v[list(self.supports[i])] = 1
        return v


def _pack_by_index(candidates, d: int, max_size: int | None = None) -> list[tuple]:
    """Greedy packing of weight-``d`` supports: two of them are >= d apart iff
    they share at most ``d // 2`` atoms, so a shared ``(d//2 + 1)``-subset is
    the only possible conflict."""
    t = d // 2 + 1
    used: set = set()
    kept = []
    for s in candidates:
        keys = list(itertools.combinations(s, t))
        if any(key in used for key in keys):
            continue
        used.update(keys)
        kept.append(tuple(s))
        if max_size is not None and len(kept) >= max_size:
            break
    return kept


@lru_cache(maxsize=32)
def d_selection_pack(k: int, d: int, max_size: int = 4096, draws: int = 100_000) -> HammingCode:
    """Greedy packing of vectors with at most ``d`` ones, in (weight, lex) order.

    When there are more than 10^6 candidate vectors, weight-``d`` supports are
    drawn at random (seeded by ``(k, d)``) instead of listed, and the packing
    stops after ``max_size`` codewords or ``draws`` candidates.
    """
    if not 1 <= d <= k:
        raise ValueError("need 1 <= d <= k")
    count = sum(math.comb(k, w) for w in range(d + 1))
    if count * k <= 4 * 10 ** 6:
        rows = [c for w in range(d + 1) for c in itertools.combinations(range(k), w)]
        B = np.zeros((len(rows), k), dtype=np.uint8)
        for i, c in enumerate(rows):
            B[i, list(c)] = 1
        kept = np.asarray(kernels.hamming_pack(B, d))
        return HammingCode(k, d, tuple(rows[i] for i in kept), True)
    # the empty support comes first and rules out every weight below d
    if count <= SAMPLE_LIMIT:
        cands = itertools.combinations(range(k), d)
        return HammingCode(k, d, ((),) + tuple(_pack_by_index(cands, d)), True)
    rng = np.random.default_rng([k, d])
    seen: set = set()

    def stream():
        for _ in range(draws):
            s = tuple(sorted(rng.choice(k, size=d, replace=False).tolist()))
            if s not in seen:
                seen.add(s)
                yield s

    return HammingCode(k, d, ((),) + tuple(_pack_by_index(stream(), d, max_size - 1)), False)


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def _uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def vc_support_size(n: int, d: int) -> tuple[float, int]:
    """``alpha = (1/16)(d/n) log((4/3) n/d)`` and ``k = ceil(d/alpha)`` (strict ceiling)."""
    alpha = d / (16.0 * n) * math.log(4.0 * n / (3.0 * d))
    return alpha, strict_ceil(d / alpha)


def vc_reference(d: int, k: int, family: str = "raw") -> VcIndicator:
    if family == "raw":
        return VcIndicator(0.75, d, k)
    if family == "shifted":
        return VcIndicator(0.25, d, k, base=0.5)
    raise ValueError(f"unknown indicator family {family!r}")


def make_vc_world(n: int, d: int, omega=None, rng: np.random.Generator | None = None, family: str = "raw") -> World:
    """Uniform design on ``k`` atoms, ``eta = 1/2 + omega/4`` for a codeword ``omega``.

    ``family="raw"`` compares against ``{(3/4) 1_W}``; ``"shifted"`` against
    ``{1/2 + (1/4) 1_W}``, which contains every ``eta`` of this form.
    """
    if not n >= d >= 1:
        raise ValueError("need n >= d >= 1")
    alpha, k = vc_support_size(n, d)
    if omega is None:
        if rng is None:
            raise ValueError("pass omega or rng")
        code = d_selection_pack(k, d)
        omega = code.vector(int(rng.integers(len(code))))
    omega = np.asarray(omega, dtype=np.int64)
    if omega.shape != (k,) or not np.isin(omega, (0, 1)).all() or omega.sum() > d:
        raise ValueError(f"omega must be a 0/1 vector of length {k} with at most {d} ones")
    eta = 0.5 + omega / 4.0
    return World(_uniform(k), eta, vc_reference(d, k, family), "vc",
                 {"n": n, "d": d, "family": family}, np.flatnonzero(omega))


def hypercube_size(n: int, p: float, variant: str) -> int:
    if variant == "risk":
        if not p > 0:
            raise ValueError("p must be positive")
        return strict_ceil(exact_power(n, p / (2.0 + p)))
    if variant == "regret":
        if not p >= 2:
            raise ValueError("the regret construction needs p >= 2")
        return 2 * strict_ceil(exact_power(n, p / (p - 1.0)))
    raise ValueError(f"unknown variant {variant!r}")


def make_hypercube_world(n: int, p: float, variant: str = "risk", omega=None,
                         rng: np.random.Generator | None = None) -> World:
    """Uniform design on ``d`` unit vectors with a box reference class.

    ``risk``: ``eta_i = 1/2 + omega_i / (4 d^(1/p))``, ``omega`` in {0,1}^d.
    ``regret``: ``eta_j = 1/2 + omega_j / 4``, ``omega`` in {-1,1}^d.
    """
    d = hypercube_size(n, p, variant)
    if omega is None:
        if rng is None:
            raise ValueError("pass omega or rng")
        bits = rng.integers(0, 2, size=d)
        omega = bits if variant == "risk" else 2 * bits - 1
    omega = np.asarray(omega, dtype=np.int64)
    allowed = (0, 1) if variant == "risk" else (-1, 1)
    if omega.shape != (d,) or not np.isin(omega, allowed).all():
        raise ValueError(f"omega must be a vector of length {d} with entries in {allowed}")
    if variant == "risk":
        eta = 0.5 + omega / (4.0 * d ** (1.0 / p))
    else:
        eta = 0.5 + omega / 4.0
    ref = BoxSequence(p, d, None, d)
    return World(_uniform(d), eta, ref, f"hypercube-{variant}", {"n": n, "p": p},
                 omega)


def make_delta_world(p: float, delta: float, base: World, tol: float = 1e-9) -> World:
    """Push ``eta`` away from the class until ``inf_f ||f - eta|| = delta``.

    ``eta`` moves by ``t`` on every atom, away from 1/2, clipped to [0, 1];
    ``t`` is found by bisection against the class oracle.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    if isinstance(base.reference, BoxSequence) and base.reference.p != p:
        raise ValueError("p does not match the base world's class")
    params = {"p": p, "delta": delta, "base": base.to_json()}
    if delta == 0.0:
        return World(base.mu, base.eta, base.reference, "delta", params, base.omega)
    direction = np.where(base.eta >= 0.5, 1.0, -1.0)

    def dist(t):
        eta = np.clip(base.eta + direction * t, 0.0, 1.0)
        best = class_oracle(base.reference, base.mu, eta)
        return math.sqrt(float(base.mu @ (best - eta) ** 2)), eta

    top, _ = dist(1.0)
    if delta > top + tol:
        raise ValueError(f"delta {delta} is unreachable; the largest achievable value is {top}")
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val, _ = dist(mid)
        if val < delta:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    val, eta = dist(hi)
    if abs(val - delta) > 1e-6:
        raise ValueError(f"bisection reached {val}, not {delta}")
    return World(base.mu, eta, base.reference, "delta", params, base.omega)


def make_finite_world(M: int = 16, k: int = 32, seed: int = 0, spread: float = 0.2) -> World:
    """``M`` random constants in [0, 1] on a uniform design of ``k`` atoms.

    ``eta = c0 + v`` where ``c0`` is the constant closest to 1/2 and ``v`` has
    mean zero, so ``eta`` is outside the class but no mixture of constants
    beats ``c0``.
    """
    rng = np.random.default_rng(seed)
    consts = rng.uniform(0.0, 1.0, size=M)
    c0 = consts[int(np.argmin(np.abs(consts - 0.5)))]
    v = rng.standard_normal(k)
    v -= v.mean()
    room = min(c0 - 0.05, 0.95 - c0, spread)
    v *= room / np.abs(v).max()
    members = np.repeat(consts[:, None], k, axis=1)
    return World(_uniform(k), c0 + v, FiniteList(members), "finite", {"M": M, "k": k, "seed": seed})


def make_two_point_world(n: int, kappa: float = 0.1) -> World:
    """One atom, ``eta = 1/2``, class ``{1/4, 1/2 + sqrt(1/16 + kappa/sqrt(n))}``.

    The two members' risks differ by ``kappa / sqrt(n)``.
    """
    gap = kappa / math.sqrt(n)
    hi = 0.5 + math.sqrt(1.0 / 16.0 + gap)
    if hi > 1.0:
        raise ValueError("kappa / sqrt(n) must not exceed 3/16")
    members = np.array([[0.25], [hi]])
    return World(np.ones(1), np.full(1, 0.5), FiniteList(members), "two-point", {"n": n, "kappa": kappa})


def _orthogonal_noise(rng, dirs: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """A random vector orthogonal (in the mu inner product) to the rows of ``dirs``."""
    k = mu.size
    v = rng.standard_normal(k)
    W = np.sqrt(mu)
    Q, _ = np.linalg.qr((dirs * W).T)
    u = v * W
    u -= Q @ (Q.T @ u)
    return u / W


def make_dictionary_world(M: int = 20, k: int = 64, s: int = 2, seed: int = 0) -> World:
    """Random dictionary in [0.1, 0.9]; ``eta`` is the midpoint of two atoms plus
    a component orthogonal to the affine hull, so the best sparse mixture is
    that midpoint and ``eta`` itself is outside the hull."""
    rng = np.random.default_rng(seed)
    D = rng.uniform(0.1, 0.9, size=(M, k))
    mu = _uniform(k)
    center = 0.5 * (D[0] + D[1])
    v = _orthogonal_noise(rng, D - center, mu)
    room = min(float((center - 0.02).min()), float((0.98 - center).min()), 0.2)
    v *= room / np.abs(v).max()
    return World(mu, center + v, DictionaryHull(D, s), "dictionary", {"M": M, "k": k, "s": s, "seed": seed})


def make_box_world(p: float, J: int, k: int | None = None, seed: int = 0, reach: float = 1.5) -> World:
    """Uniform design; ``eta_j = 1/2 + u_j j^(-1/p) / 2`` with ``u_j ~ U[-reach, reach]`` (clipped)."""
    k = J if k is None else k
    rng = np.random.default_rng(seed)
    j = np.arange(1, k + 1, dtype=float)
    eta = np.clip(0.5 + rng.uniform(-reach, reach, size=k) * j ** (-1.0 / p) / 2.0, 0.0, 1.0)
    return World(_uniform(k), eta, BoxSequence(p, J, None, k), "box-sequence",
                 {"p": p, "J": J, "k": k, "seed": seed, "reach": reach})


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

WORLD_KINDS = ("finite", "two-point", "vc", "hypercube-risk", "hypercube-regret", "delta",
               "box-sequence", "dictionary")


def world_from_json(obj: dict, n: int | None = None, rng: np.random.Generator | None = None) -> World:
    """Rebuild a world from :meth:`World.to_json` output or a config entry.

    Worlds whose construction depends on the sample size take ``n`` from the
    arguments when it is not stored; a missing ``omega`` is drawn from ``rng``.
    """
    kind = obj.get("kind")
    params = dict(obj.get("params", {}))
    params.update({k: v for k, v in obj.items() if k not in ("kind", "params", "omega")})
    omega = obj.get("omega")
    nn = params.get("n", n)
    if kind == "finite":
        return make_finite_world(int(params.get("M", 16)), int(params.get("k", 32)), int(params.get("seed", 0)))
    if kind == "two-point":
        return make_two_point_world(int(nn), float(params.get("kappa", 0.1)))
    if kind == "vc":
        d, family = int(params.get("d", 3)), params.get("family", "raw")
        om = None
        if omega is not None:
            _, k = vc_support_size(int(nn), d)
            om = np.zeros(k, dtype=np.int64)
            om[list(omega)] = 1
        return make_vc_world(int(nn), d, om, rng, family)
    if kind in ("hypercube-risk", "hypercube-regret"):
        return make_hypercube_world(int(nn), float(params.get("p", 2.0)), kind.split("-")[1], omega, rng)
    if kind == "box-sequence":
        return make_box_world(float(params["p"]), int(params["J"]), params.get("k"), int(params.get("seed", 0)),
                              float(params.get("reach", 1.5)))
    if kind == "dictionary":
        return make_dictionary_world(int(params.get("M", 20)), int(params.get("k", 64)), int(params.get("s", 2)),
                                     int(params.get("seed", 0)))
    if kind == "delta":
        base = world_from_json(params["base"], n, rng)
        return make_delta_world(float(params["p"]), float(params["delta"]), base)
    raise ValueError(f"unknown world kind {kind!r}")

