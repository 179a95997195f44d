"""Distances to the Maxwellian, convergence-rate bounds and rate studies."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, special

from .coefficients import alpha_p
from .errors import ArgumentError, DomainError
from .laws import parse_law
from .trees import depth_moment_exact

#: Esseen smoothing constant 24 / (pi sqrt(2 pi)) for a target with density bounded by 1/sqrt(2 pi).
ESSEEN_CONSTANT = 24.0 / math.sqrt(2.0 * math.pi ** 3)
#: Berry-Esseen constant used when the caller gives none (third-moment case).
BERRY_ESSEEN_C1 = 0.56


def gaussian_cdf(x, sigma=1.0):
    """G_sigma via scipy's ndtr (double precision erfc-based, |error| ~ 1e-16)."""
    return special.ndtr(np.asarray(x, dtype=np.float64) / sigma)


def dkw_half_width(size: int, beta: float = 0.01) -> float:
    """sqrt(ln(2 / beta) / (2 size)): the (1 - beta) DKW band."""
    return math.sqrt(math.log(2.0 / beta) / (2.0 * size))


@dataclass(frozen=True)
class EmpiricalCDF:
    sorted_values: np.ndarray

    @classmethod
    def from_samples(cls, values) -> "EmpiricalCDF":
        v = np.sort(np.asarray(values, dtype=np.float64).ravel())
        if v.size == 0:
            raise ArgumentError("empirical CDF needs at least one sample")
        return cls(v)

    @property
    def size(self) -> int:
        return self.sorted_values.size

    def __call__(self, x):
        return np.searchsorted(self.sorted_values, x, side="right") / self.size


def kolmogorov_distance(ecdf: EmpiricalCDF, sigma: float = 1.0) -> float:
    """sup_x |F_N(x) - G_sigma(x)|, exact over the jump points."""
    if sigma <= 0:
        raise ArgumentError("sigma must be positive")
    g = gaussian_cdf(ecdf.sorted_values, sigma)
    n = ecdf.size
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(i / n - g)), np.max(np.abs((i - 1) / n - g))))


def min_distance_over_sigma(ecdf: EmpiricalCDF) -> tuple[float, float]:
    """min over sigma of the Kolmogorov distance to G_sigma; returns (distance, sigma)."""
    v = np.abs(ecdf.sorted_values)
    scale = float(np.median(v)) / 0.6744897501960817 or 1.0
    grid = scale * np.exp(np.linspace(-4.0, 4.0, 81))
    d = [kolmogorov_distance(ecdf, s) for s in grid]
    k = int(np.argmin(d))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda ls: kolmogorov_distance(ecdf, math.exp(ls)),
                                   bounds=(math.log(lo), math.log(hi)), method="bounded",
                                   options={"xatol": 1e-6})
    if res.fun < d[k]:
        return float(res.fun), float(math.exp(res.x))
    return float(d[k]), float(grid[k])


@dataclass(frozen=True)
class Theorem2Params:
    """Free parameters a in (0, 1), p > 2, c in (0, (1 - 2 alpha_p) / p)."""

    a: float = 0.5
    p: float = 3.0
    c: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if not 0 < self.a < 1:
            raise DomainError("a must lie in (0, 1)", a=self.a)
        if self.p <= 2:
            raise DomainError("p must exceed 2", p=self.p)
        c_max = (1.0 - 2.0 * alpha_p(self.p)) / self.p
        if self.c is None:
            object.__setattr__(self, "c", 0.9 * c_max)
        if not 0 < self.c < c_max:
            raise DomainError(f"c must lie in (0, {c_max:.6g})", c=self.c)
        if self.delta is not None and not 0 < self.delta <= 1:
            raise DomainError("delta must lie in (0, 1]", delta=self.delta)

    @property
    def B1(self) -> float:
        return self.a * self.c * self.p

    @property
    def B2(self) -> float:
        return 1.0 - 2.0 * alpha_p(self.p) - self.c * self.p

    def x_t(self, t) -> float:
        return math.exp(-t * self.c * self.p)


def _tail_at(t, law, params):
    radius = law.sigma * params.x_t(t) ** (params.a - 1.0)
    return law.tail_energy(radius)


def threshold_t0(law, params: Theorem2Params) -> float:
    """inf{t : tail energy beyond sigma x_t^(a-1) <= 1}."""
    law = parse_law(law)
    if not law.finite_variance:
        raise DomainError(f"{law.spec} has infinite variance", law=law.spec)
    if _tail_at(0.0, law, params) <= 1.0:
        return 0.0
    hi = 1.0
    while _tail_at(hi, law, params) > 1.0:
        hi *= 2.0
        if hi > 1e6:
            raise DomainError("tail-energy threshold not reached", law=law.spec)
    return optimize.brentq(lambda t: _tail_at(t, law, params) - 1.0, 0.0, hi, xtol=1e-12)


def m_of_t(t: float, law, params: Theorem2Params | None = None) -> float:
    """M(t) = tail energy beyond sigma x_t^(a-1), maxed with e^-B1 t and e^-B2 t."""
    law = parse_law(law)
    params = params or Theorem2Params()
    t0 = threshold_t0(law, params)
    if t < t0:
        raise DomainError(f"t = {t} is below the threshold t0 = {t0:.6g}", t=t, t0=t0)
    return max(_tail_at(t, law, params), math.exp(-params.B1 * t), math.exp(-params.B2 * t))


def constant_A(sigma: float) -> float:
    """Constant in front of M(t)^(1/5) in the finite-energy bound.

    For xi >= 0 the characteristic-function error of V_t / sigma is at most
    (xi / sigma)^2 T + (xi^2 + 2 xi^3 + 2 xi^4) e^{-Bt}, where T is the tail
    energy and e^{-Bt} = max(e^{-B1 t}, e^{-B2 t}); both are <= M.  Esseen's
    inequality with horizon T_E = M^(-1/5) >= 1 integrates this against
    (2/pi) dxi / xi:

        (2/pi) [T_E^2 T / (2 sigma^2) + (T_E^2 / 2 + 2 T_E^3 / 3 + T_E^4 / 2) e^{-Bt}]
        <= (2/pi) (1 / (2 sigma^2) + 5/3) M^(1 - 4/5)

    since M <= 1 makes every M^(1 - k/5) <= M^(1/5) for k <= 4.  The
    smoothing term adds 24 / sqrt(2 pi^3) * M^(1/5).
    """
    return (2.0 / math.pi) * (1.0 / (2.0 * sigma ** 2) + 5.0 / 3.0) + ESSEEN_CONSTANT


def esseen_chain(t: float, law, params: Theorem2Params | None = None, horizon=None) -> float:
    """Numerical value of the Esseen-inequality right-hand side before simplification."""
    from scipy import integrate

    law = parse_law(law)
    params = params or Theorem2Params()
    tail = _tail_at(t, law, params)
    e_bt = max(math.exp(-params.B1 * t), math.exp(-params.B2 * t))
    M = m_of_t(t, law, params)
    T = M ** -0.2 if horizon is None else horizon
    sig = law.sigma

    def integrand(xi):
        return ((xi / sig) ** 2 * tail + (xi ** 2 + 2 * xi ** 3 + 2 * xi ** 4) * e_bt) / xi

    val, _ = integrate.quad(integrand, 0.0, T, epsabs=1e-14, epsrel=1e-12)
    return 2.0 / math.pi * val + ESSEEN_CONSTANT / T


def theorem2_bound_general(t: float, law, params: Theorem2Params | None = None) -> float:
    """A M(t)^(1/5) + (1/2) sup|F_0 - F_0d| e^-t."""
    law = parse_law(law)
    params = params or Theorem2Params()
    M = m_of_t(t, law, params)
    if M > 1.0:
        raise DomainError(f"M(t) = {M:.6g} > 1 at t = {t}", t=t, M=M)
    return constant_A(law.sigma) * M ** 0.2 + 0.5 * law.asymmetry() * math.exp(-t)


def theorem2_bound_berry_esseen(t: float, law, delta: float = 1.0, C_delta: float | None = None) -> float:
    """C_delta m_{2+delta} / sigma^(2+delta) e^{-t (1 - 2 alpha_{2+delta})} + (1/2) sup|F_0 - F_0d| e^-t."""
    law = parse_law(law)
    if not 0 < delta <= 1:
        raise DomainError("delta must lie in (0, 1]", delta=delta)
    if C_delta is None:
        if delta != 1.0:
            raise DomainError("no default Berry-Esseen constant for delta != 1; pass C_delta", delta=delta)
        C_delta = BERRY_ESSEEN_C1
    m = law.abs_moment(2.0 + delta)
    if not math.isfinite(m):
        raise DomainError(f"{law.spec} has no finite moment of order {2 + delta}", law=law.spec)
    ratio = m / law.sigma ** (2.0 + delta)
    return C_delta * ratio * math.exp(-t * (1.0 - 2.0 * alpha_p(2.0 + delta))) \
        + 0.5 * law.asymmetry() * math.exp(-t)


def depth_moment_time(x: float, t: float) -> float:
    """E sum_j x^depth_j over nu_t and the tree: exp(-t (1 - 2x))."""
    if x <= 0:
        raise ArgumentError("x must be positive")
    return math.exp(-t * (1.0 - 2.0 * x))


def depth_moment_time_series(x: float, t: float, rtol: float = 1e-14) -> float:
    """Same quantity as the nu_t-average of depth_moment_exact, summed term by term."""
    if t == 0:
        return 1.0
    q = -math.expm1(-t)
    total, n = 0.0, 1
    while True:
        term = math.exp(-t + (n - 1) * math.log(q)) * depth_moment_exact(x, n) if q > 0 else 0.0
        total += term
        if n > 10 and term < rtol * total:
            return total
        n += 1


@dataclass
class RateReport:
    law: str
    t_grid: list
    distances: list
    dkw_half_width: float
    fitted_log_slope: float | None
    theoretical_exponent: float | None
    bound_curve: list
    bound_general: list = field(default_factory=list)
    sigma_used: list = field(default_factory=list)
    status: str = "ok"
    size: int = 0
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_jsonable)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# kacwild rate report v1\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "distance", "dkw", "bound_general", "bound_be"])
        gen = self.bound_general or [math.nan] * len(self.t_grid)
        for row in zip(self.t_grid, self.distances, gen, self.bound_curve):
            t, d, g, b = row
            w.writerow([repr(t), repr(d), repr(self.dkw_half_width), repr(g), repr(b)])
        return buf.getvalue()


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(type(x))


def fit_log_slope(t_grid, distances, floor):
    """Least-squares slope of log(distance) vs t over points above `floor`."""
    t = np.asarray(t_grid, dtype=np.float64)
    d = np.asarray(distances, dtype=np.float64)
    keep = d > floor
    if keep.sum() < 2:
        return None, int(keep.sum())
    slope = np.polyfit(t[keep], np.log(d[keep]), 1)[0]
    return float(slope), int(keep.sum())


def rate_study(law, t_grid, size, seed, sigma=None, beta=0.01, threads=1,
               params: Theorem2Params | None = None) -> RateReport:
    """Kolmogorov distance to the Maxwellian along t_grid, with the bounds alongside.

    For laws without finite variance, and when sigma is None for them, the
    distance is minimised over the Gaussian scale.
    """
    from .simulator import simulate_batch

    law = parse_law(law)
    t_grid = [float(t) for t in t_grid]
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ArgumentError("t_grid must be increasing")
    params = params or Theorem2Params()
    if sigma is None and law.finite_variance:
        sigma = law.sigma
    dkw = dkw_half_width(size, beta)
    seeds = np.random.SeedSequence(seed).generate_state(len(t_grid), dtype=np.uint64)
    distances, sigmas, bound_be, bound_gen = [], [], [], []
    for t, s in zip(t_grid, seeds):
        batch = simulate_batch(t, law, size, int(s), chunks=threads, threads=threads)
        ecdf = EmpiricalCDF.from_samples(batch.values)
        if sigma is None:
            d, s_hat = min_distance_over_sigma(ecdf)
        else:
            d, s_hat = kolmogorov_distance(ecdf, sigma), sigma
        distances.append(d)
        sigmas.append(s_hat)
        bound_be.append(_safe(lambda: theorem2_bound_berry_esseen(t, law)))
        bound_gen.append(_safe(lambda: theorem2_bound_general(t, law, params)))
    slope, used = fit_log_slope(t_grid, distances, 2 * dkw)
    if used == 0:
        status = "converged below resolution"
    elif slope is None:
        status = "slope not estimable"
    else:
        status = "ok"
    exponent = None
    if math.isfinite(law.abs_moment(3.0)):
        exponent = 1.0 - 2.0 * alpha_p(3.0)
    return RateReport(law.spec, t_grid, distances, dkw, slope, exponent, bound_be, bound_gen,
                      sigmas, status, size, seed)


def _safe(fn):
    try:
        return fn()
    except DomainError:
        return math.nan
