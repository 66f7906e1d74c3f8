"""A Euclidean plane with one cone point of total angle theta >= 2 pi.

Points are polar pairs (r, phi) with phi in [0, theta).  Two points whose
angular gap is below pi are joined by a straight segment in the unfolded
sector; otherwise the geodesic runs through the apex.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

TOL = 1e-9
CHART_TOL = 1e-12
MAX_PAIRS = 4_000_000


@dataclass(frozen=True)
class ConeConfig:
    theta: float
    spec: str = ""

    def __post_init__(self):
        if not self.theta >= 2 * math.pi - 1e-15:
            raise ValueError(f"cone angle {self.theta} is below 2*pi")


_THETA_RE = re.compile(r"^\s*(\d+)\s*(?:/\s*(\d+))?\s*(?:[·*]\s*)?(?:π|pi)\s*$", re.IGNORECASE)


def parse_theta(text: str) -> Fraction:
    """``"5/2·π"`` or ``"5/2*pi"`` or ``"3π"`` -> the rational multiple of pi."""
    m = _THETA_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse cone angle {text!r}; expected e.g. '5/2*pi'")
    return Fraction(int(m.group(1)), int(m.group(2) or 1))


def cone_config(theta: str | Fraction | float) -> ConeConfig:
    """Config from a ``"p/q*pi"`` string or a rational multiple of pi."""
    if isinstance(theta, str):
        q = parse_theta(theta)
        return ConeConfig(float(q) * math.pi, f"{q}*pi")
    if isinstance(theta, Fraction):
        return ConeConfig(float(theta) * math.pi, f"{theta}*pi")
    return ConeConfig(float(theta), "")


@dataclass(frozen=True)
class ConePoint:
    r: float
    phi: float = 0.0

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("radius must be nonnegative")
        if self.r == 0:
            object.__setattr__(self, "phi", 0.0)

    @property
    def is_apex(self) -> bool:
        return self.r == 0

    def to_json(self) -> dict:
        return {"r": self.r, "phi": self.phi}

    @classmethod
    def from_json(cls, obj: dict, cfg: ConeConfig | None = None) -> "ConePoint":
        return cone_point(float(obj["r"]), float(obj.get("phi", 0.0)), cfg)


APEX = ConePoint(0.0, 0.0)


def cone_point(r: float, phi: float, cfg: ConeConfig | None = None) -> ConePoint:
    if cfg is not None:
        phi = phi % cfg.theta
    return ConePoint(float(r), float(phi))


# --- closed-form geometry (compiled, shared with the closure engine) --------


@njit(cache=True)
def _gap(f1, f2, theta):
    d = abs(f1 - f2)
    if theta - d < d:
        d = theta - d
    return d


@njit(cache=True)
def _dist(r1, f1, r2, f2, theta):
    if r1 == 0.0 or r2 == 0.0:
        return r1 + r2
    d = _gap(f1, f2, theta)
    if d >= math.pi:
        return r1 + r2
    # unfolded planar coordinates with the first point on the x axis
    return math.hypot(r1 - r2 * math.cos(d), r2 * math.sin(d))


@njit(cache=True)
def _eval(r1, f1, r2, f2, s, theta):
    if s <= 0.0:
        return r1, f1
    if s >= 1.0:
        return r2, f2
    if r1 == 0.0 or r2 == 0.0 or _gap(f1, f2, theta) >= math.pi:
        a = s * (r1 + r2)
        if a < r1:
            return r1 - a, f1
        if a == r1:
            return 0.0, 0.0
        return a - r1, f2
    diff = (f2 - f1) % theta
    if diff <= theta - diff:
        d = diff
        sign = 1.0
    else:
        d = theta - diff
        sign = -1.0
    x = (1.0 - s) * r1 + s * r2 * math.cos(d)
    y = s * r2 * math.sin(d)
    r = math.hypot(x, y)
    if r == 0.0:
        return 0.0, 0.0
    f = (f1 + sign * math.atan2(y, x)) % theta
    return r, f


def cone_distance(p: ConePoint, q: ConePoint, cfg: ConeConfig) -> float:
    return float(_dist(p.r, p.phi, q.r, q.phi, cfg.theta))


def cone_geodesic_eval(p: ConePoint, q: ConePoint, s, cfg: ConeConfig) -> ConePoint:
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"parameter {s} not in [0, 1]")
    if s == 0.0:
        return p
    if s == 1.0:
        return q
    r, f = _eval(p.r, p.phi, q.r, q.phi, s, cfg.theta)
    return ConePoint(float(r), float(f))


def through_apex(p: ConePoint, q: ConePoint, cfg: ConeConfig) -> bool:
    return p.is_apex or q.is_apex or _gap(p.phi, q.phi, cfg.theta) >= math.pi


def chart(p: ConePoint) -> tuple[float, float]:
    """(r cos phi, r sin phi); an isometry onto the plane when theta = 2 pi."""
    return (p.r * math.cos(p.phi), p.r * math.sin(p.phi))


# --- geodesic broom -----------------------------------------------------------


@dataclass
class BroomReport:
    ok: bool
    samples: int
    max_error: float
    param_error: float
    theta: float

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "samples": self.samples,
            "max_error": self.max_error,
            "param_error": self.param_error,
            "theta": self.theta,
        }


def broom_check(a1: ConePoint, a2: ConePoint, b: ConePoint, samples: int, cfg: ConeConfig, tol: float = TOL) -> BroomReport:
    """For c on [a1, a2], check that [c, apex] followed by [apex, b] is a
    geodesic, i.e. d(c, b) = d(c, apex) + d(apex, b)."""
    for name, a in (("a1", a1), ("a2", a2)):
        if not through_apex(a, b, cfg):
            raise ValueError(f"geodesic from {name} to b does not pass through the apex")
    if samples < 1:
        raise ValueError("samples must be positive")
    count = 1 if a1 == a2 else samples
    worst = 0.0
    param = 0.0
    d12 = cone_distance(a1, a2, cfg)
    for k in range(count):
        s = k / (count - 1) if count > 1 else 0.0
        c = cone_geodesic_eval(a1, a2, s, cfg)
        err = abs(cone_distance(c, b, cfg) - (cone_distance(c, APEX, cfg) + cone_distance(APEX, b, cfg)))
        worst = max(worst, err)
        param = max(param, abs(cone_distance(a1, c, cfg) - s * d12))
    return BroomReport(worst <= tol and param <= tol, count, worst, param, cfg.theta)


# --- sampled closure -----------------------------------------------------------


@njit(cache=True)
def _cell(r, f, h, theta, ring_off, ring_k):
    i = int(r / h)
    if i >= ring_k.shape[0]:
        i = ring_k.shape[0] - 1
    j = int(f / theta * ring_k[i])
    if j >= ring_k[i]:
        j = ring_k[i] - 1
    return ring_off[i] + j


@njit(cache=True)
def _conv_step(R, F, pr, pf, eps, h, theta, ring_off, ring_k, n_cells):
    """Union of (R, F) with the samples of all pairs of (pr, pf); samples are
    kept only if their polar cell is still empty."""
    owner = np.zeros(n_cells, np.uint8)
    cap = R.shape[0] + 1024
    outR = np.empty(cap)
    outF = np.empty(cap)
    n = 0
    for a in range(R.shape[0]):
        outR[n] = R[a]
        outF[n] = F[a]
        n += 1
        owner[_cell(R[a], F[a], h, theta, ring_off, ring_k)] = 1
    K = pr.shape[0]
    for a in range(K):
        for b in range(a + 1, K):
            d = _dist(pr[a], pf[a], pr[b], pf[b], theta)
            N = int(math.ceil(d / eps - 1e-12))
            for k in range(1, N):
                r, f = _eval(pr[a], pf[a], pr[b], pf[b], k / N, theta)
                c = _cell(r, f, h, theta, ring_off, ring_k)
                if owner[c] == 0:
                    owner[c] = 1
                    if n == cap:
                        cap *= 2
                        nr = np.empty(cap)
                        nf = np.empty(cap)
                        nr[:n] = outR[:n]
                        nf[:n] = outF[:n]
                        outR, outF = nr, nf
                    outR[n] = r
                    outF[n] = f
                    n += 1
    return outR[:n].copy(), outF[:n].copy()


@njit(cache=True)
def _thin(R, F, h, theta, ring_off, ring_k, n_cells):
    owner = np.zeros(n_cells, np.uint8)
    keep = np.zeros(R.shape[0], np.bool_)
    for a in range(R.shape[0]):
        c = _cell(R[a], F[a], h, theta, ring_off, ring_k)
        if owner[c] == 0:
            owner[c] = 1
            keep[a] = True
    return keep


@njit(cache=True)
def _directed(AR, AF, BR, BF, theta):
    """max over A of the distance to B; B must be sorted by radius."""
    best = 0.0
    for a in range(AR.shape[0]):
        r, f = AR[a], AF[a]
        # distances are at least the radial gap, so scan outward from r
        hi = np.searchsorted(BR, r)
        lo = hi - 1
        m = np.inf
        while True:
            moved = False
            if hi < BR.shape[0] and BR[hi] - r < m:
                d = _dist(r, f, BR[hi], BF[hi], theta)
                if d < m:
                    m = d
                hi += 1
                moved = True
            if lo >= 0 and r - BR[lo] < m:
                d = _dist(r, f, BR[lo], BF[lo], theta)
                if d < m:
                    m = d
                lo -= 1
                moved = True
            if not moved or m <= best:
                break
        if m > best:
            best = m
    return best


def _rings(rmax: float, h: float, theta: float):
    n = max(1, int(rmax / h) + 2)
    k = np.array([max(1, math.ceil(theta * (i + 1))) for i in range(n)], np.int64)
    off = np.zeros(n, np.int64)
    off[1:] = np.cumsum(k)[:-1]
    return off, k, int(k.sum())


@dataclass
class ConeCloud:
    r: np.ndarray
    phi: np.ndarray
    generation: int = 0
    error_budget: float = 0.0

    def __len__(self) -> int:
        return len(self.r)

    def points(self) -> list[ConePoint]:
        return [ConePoint(float(a), float(b)) for a, b in zip(self.r, self.phi)]


def cone_cloud(points: list[ConePoint]) -> ConeCloud:
    return ConeCloud(np.array([p.r for p in points], float), np.array([p.phi for p in points], float))


def cone_conv_step(c: ConeCloud, eps: float, cfg: ConeConfig, max_pairs: int = MAX_PAIRS) -> ConeCloud:
    """conv^1 sample; one sample is kept per polar cell of size eps/4."""
    h = eps / 4
    rmax = float(c.r.max()) if len(c) else 0.0
    off, k, total = _rings(rmax, h, cfg.theta)
    pr, pf = c.r, c.phi
    thin_err = 0.0
    g = 1
    while len(pr) * (len(pr) - 1) // 2 > max_pairs:
        g += 1
        hg = g * h
        goff, gk, gtotal = _rings(rmax, hg, cfg.theta)
        keep = _thin(c.r, c.phi, hg, cfg.theta, goff, gk, gtotal)
        pr, pf = c.r[keep], c.phi[keep]
        thin_err = 2 * hg
    R, F = _conv_step(c.r, c.phi, pr, pf, eps, h, cfg.theta, off, k, total)
    return ConeCloud(R, F, c.generation + 1, c.error_budget + 2 * h + thin_err)


def cone_hausdorff(A: ConeCloud, B: ConeCloud, cfg: ConeConfig) -> float:
    ia, ib = np.argsort(A.r, kind="stable"), np.argsort(B.r, kind="stable")
    ar, af, br, bf = A.r[ia], A.phi[ia], B.r[ib], B.phi[ib]
    return max(float(_directed(ar, af, br, bf, cfg.theta)), float(_directed(br, bf, ar, af, cfg.theta)))


@dataclass
class Brunn2Report:
    ok: bool
    epsilon: float
    theta: float
    h32: float
    h21: float
    bound: float
    sizes: list[int]
    error_budget: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "epsilon": self.epsilon,
            "theta": self.theta,
            "hausdorff_conv3_conv2": self.h32,
            "hausdorff_conv2_conv1": self.h21,
            "bound": self.bound,
            "sizes": self.sizes,
            "error_budget": self.error_budget,
            **self.extra,
        }


def brunn2_verify(points: list[ConePoint], eps: float, cfg: ConeConfig, max_pairs: int = MAX_PAIRS) -> Brunn2Report:
    """Sampled conv^1..conv^3 of the points; conv^3 should add nothing
    beyond 3 eps to conv^2."""
    eps = float(eps)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    c0 = cone_cloud(points)
    c1 = cone_conv_step(c0, eps, cfg, max_pairs)
    c2 = cone_conv_step(c1, eps, cfg, max_pairs)
    c3 = cone_conv_step(c2, eps, cfg, max_pairs)
    h32 = cone_hausdorff(c3, c2, cfg)
    h21 = cone_hausdorff(c2, c1, cfg)
    return Brunn2Report(
        ok=h32 <= 3 * eps,
        epsilon=eps,
        theta=cfg.theta,
        h32=h32,
        h21=h21,
        bound=3 * eps,
        sizes=[len(c0), len(c1), len(c2), len(c3)],
        error_budget=c3.error_budget,
    )
