"""Initial laws mu_0: samplers, moments, tail energy, the CDF pair and transforms.

Laws are named by short strings, ``name:arg1,arg2``:

    gaussian:sigma        N(0, sigma^2)
    rademacher:v          +v or -v with probability 1/2
    uniform:a             uniform on (-a, a)
    twopoint:a,b,p        mass p at a, 1 - p at b
    laplace:b             density exp(-|x|/b) / 2b
    student:nu            Student t with nu degrees of freedom, unit scale
    cauchy:s              Cauchy with scale s
    empirical:path        the empirical measure of the numbers in a text file
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy import integrate, special, stats

from .errors import LawError

INF = math.inf


class InitialLaw:
    """Base class.  Subclasses fill in the closed forms they have."""

    name = "law"
    symmetric = True

    def __init__(self, *params):
        self.params = params

    @property
    def spec(self) -> str:
        return f"{self.name}:" + ",".join(_fmt(p) for p in self.params)

    def __repr__(self):
        return f"<InitialLaw {self.spec}>"

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def mean(self):
        """First moment, or None when it does not exist."""
        return 0.0

    @property
    def second_moment(self) -> float:
        return self.abs_moment(2.0)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.second_moment)

    @property
    def finite_variance(self) -> bool:
        return math.isfinite(self.second_moment)

    def abs_moment(self, r: float) -> float:
        raise NotImplementedError

    def tail_energy(self, r: float) -> float:
        """Integral of u^2 over |u| > r."""
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def cdf_left(self, x):
        """mu_0((-inf, x)); equals cdf for laws without atoms."""
        return self.cdf(x)

    def dual_cdf(self, x):
        """mu_0([-x, +inf))."""
        return 1.0 - self.cdf_left(-np.asarray(x, dtype=np.float64))

    def asymmetry(self) -> float:
        """sup_x |F_0(x) - F_{0,d}(x)|."""
        return 0.0 if self.symmetric else self._asymmetry()

    def _asymmetry(self):
        raise NotImplementedError

    def char_fn(self, xi):
        raise NotImplementedError(f"{self.name} has no closed-form characteristic function")


def _fmt(p):
    if isinstance(p, float) and p.is_integer():
        return str(int(p))
    return str(p)


class Gaussian(InitialLaw):
    name = "gaussian"

    def __init__(self, sigma=1.0):
        if sigma <= 0:
            raise LawError("gaussian needs sigma > 0")
        super().__init__(float(sigma))
        self.s = float(sigma)

    def sample(self, rng, size):
        return rng.normal(0.0, self.s, size)

    def abs_moment(self, r):
        return self.s ** r * 2 ** (r / 2) * math.gamma((r + 1) / 2) / math.sqrt(math.pi)

    def tail_energy(self, r):
        # sigma^2 (2 (1 - Phi(z)) + 2 z phi(z)),  z = r / sigma
        z = max(r, 0.0) / self.s
        return self.s ** 2 * (2 * special.ndtr(-z) + 2 * z * math.exp(-z * z / 2) / math.sqrt(2 * math.pi))

    def cdf(self, x):
        return special.ndtr(np.asarray(x, dtype=np.float64) / self.s)

    def char_fn(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return np.exp(-0.5 * (self.s * xi) ** 2) + 0j


class Rademacher(InitialLaw):
    name = "rademacher"

    def __init__(self, v=1.0):
        if v <= 0:
            raise LawError("rademacher needs v > 0")
        super().__init__(float(v))
        self.v = float(v)

    def sample(self, rng, size):
        return np.where(rng.random(size) < 0.5, -self.v, self.v)

    def abs_moment(self, r):
        return self.v ** r

    def tail_energy(self, r):
        return self.v ** 2 if r < self.v else 0.0

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return 0.5 * (x >= -self.v) + 0.5 * (x >= self.v)

    def cdf_left(self, x):
        x = np.asarray(x, dtype=np.float64)
        return 0.5 * (x > -self.v) + 0.5 * (x > self.v)

    def char_fn(self, xi):
        return np.cos(self.v * np.asarray(xi, dtype=np.float64)) + 0j


class Uniform(InitialLaw):
    name = "uniform"

    def __init__(self, a=1.0):
        if a <= 0:
            raise LawError("uniform needs a > 0")
        super().__init__(float(a))
        self.a = float(a)

    def sample(self, rng, size):
        return rng.uniform(-self.a, self.a, size)

    def abs_moment(self, r):
        return self.a ** r / (r + 1)

    def tail_energy(self, r):
        r = max(r, 0.0)
        return (self.a ** 3 - r ** 3) / (3 * self.a) if r < self.a else 0.0

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=np.float64) + self.a) / (2 * self.a), 0.0, 1.0)

    def char_fn(self, xi):
        return np.sinc(self.a * np.asarray(xi, dtype=np.float64) / math.pi) + 0j


class Laplace(InitialLaw):
    name = "laplace"

    def __init__(self, b=1.0):
        if b <= 0:
            raise LawError("laplace needs b > 0")
        super().__init__(float(b))
        self.b = float(b)

    def sample(self, rng, size):
        return rng.laplace(0.0, self.b, size)

    def abs_moment(self, r):
        return self.b ** r * math.gamma(r + 1)

    def tail_energy(self, r):
        r = max(r, 0.0)
        return math.exp(-r / self.b) * (r * r + 2 * self.b * r + 2 * self.b ** 2)

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        e = 0.5 * np.exp(-np.abs(x) / self.b)
        return np.where(x < 0, e, 1.0 - e)

    def char_fn(self, xi):
        return 1.0 / (1.0 + (self.b * np.asarray(xi, dtype=np.float64)) ** 2) + 0j


class StudentT(InitialLaw):
    name = "student"

    def __init__(self, nu=3.0):
        if nu <= 0:
            raise LawError("student needs nu > 0")
        super().__init__(float(nu))
        self.nu = float(nu)
        self._dist = stats.t(self.nu)

    def sample(self, rng, size):
        return rng.standard_t(self.nu, size)

    @property
    def mean(self):
        return 0.0 if self.nu > 1 else None

    def abs_moment(self, r):
        nu = self.nu
        if r >= nu:
            return INF
        return math.exp(
            (r / 2) * math.log(nu) + math.lgamma((r + 1) / 2) + math.lgamma((nu - r) / 2)
            - math.lgamma(nu / 2)
        ) / math.sqrt(math.pi)

    def tail_energy(self, r):
        if self.nu <= 2:
            return INF
        r = max(r, 0.0)
        val, _ = integrate.quad(lambda u: u * u * self._dist.pdf(u), r, np.inf,
                                epsabs=1e-13, epsrel=1e-11, limit=200)
        return 2 * val

    def cdf(self, x):
        return self._dist.cdf(np.asarray(x, dtype=np.float64))

    def char_fn(self, xi):
        nu = self.nu
        z = math.sqrt(nu) * np.abs(np.asarray(xi, dtype=np.float64))
        with np.errstate(invalid="ignore", divide="ignore"):
            val = special.kv(nu / 2, z) * z ** (nu / 2) / (math.gamma(nu / 2) * 2 ** (nu / 2 - 1))
        return np.where(z == 0, 1.0, np.nan_to_num(val)) + 0j


class Cauchy(InitialLaw):
    name = "cauchy"

    def __init__(self, s=1.0):
        if s <= 0:
            raise LawError("cauchy needs s > 0")
        super().__init__(float(s))
        self.s = float(s)

    def sample(self, rng, size):
        return self.s * rng.standard_cauchy(size)

    @property
    def mean(self):
        return None

    def abs_moment(self, r):
        if r >= 1:
            return INF
        return self.s ** r / math.cos(math.pi * r / 2)

    def tail_energy(self, r):
        return INF

    def cdf(self, x):
        return 0.5 + np.arctan(np.asarray(x, dtype=np.float64) / self.s) / math.pi

    def char_fn(self, xi):
        return np.exp(-self.s * np.abs(np.asarray(xi, dtype=np.float64))) + 0j


class _Discrete(InitialLaw):
    """Finitely many atoms with weights."""

    atoms: np.ndarray
    weights: np.ndarray

    def _set_atoms(self, atoms, weights):
        order = np.argsort(atoms, kind="stable")
        self.atoms = np.asarray(atoms, dtype=np.float64)[order]
        self.weights = np.asarray(weights, dtype=np.float64)[order]
        self._cum = np.cumsum(self.weights)
        self.symmetric = self._is_symmetric()

    def _is_symmetric(self):
        return bool(np.array_equal(self.atoms, -self.atoms[::-1])
                    and np.allclose(self.weights, self.weights[::-1], rtol=0, atol=1e-15))

    @property
    def mean(self):
        return float(np.dot(self.weights, self.atoms))

    def abs_moment(self, r):
        return float(np.dot(self.weights, np.abs(self.atoms) ** r))

    def tail_energy(self, r):
        mask = np.abs(self.atoms) > r
        return float(np.dot(self.weights[mask], self.atoms[mask] ** 2))

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.searchsorted(self.atoms, x, side="right")
        return np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)

    def cdf_left(self, x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.searchsorted(self.atoms, x, side="left")
        return np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)

    def _asymmetry(self):
        # both functions are right-continuous steps jumping only at +-atoms
        pts = np.union1d(self.atoms, -self.atoms)
        pts = np.concatenate([[pts[0] - 1.0], pts])
        return float(np.max(np.abs(self.cdf(pts) - self.dual_cdf(pts))))

    def char_fn(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return np.exp(1j * np.multiply.outer(xi, self.atoms)) @ self.weights


class TwoPoint(_Discrete):
    name = "twopoint"

    def __init__(self, a=0.0, b=2.0, p=0.5):
        if not 0 < p < 1 or a == b:
            raise LawError("twopoint needs 0 < p < 1 and a != b")
        super().__init__(float(a), float(b), float(p))
        self._set_atoms([a, b], [p, 1 - p])
        self.a, self.b, self.p = float(a), float(b), float(p)

    def sample(self, rng, size):
        return np.where(rng.random(size) < self.p, self.a, self.b)


class Empirical(_Discrete):
    name = "empirical"

    def __init__(self, source):
        if isinstance(source, (str, Path)):
            self.path = str(source)
            try:
                values = np.loadtxt(source, dtype=np.float64, ndmin=1, comments="#", delimiter=None)
            except (OSError, ValueError) as exc:
                raise LawError(f"cannot read empirical data from {source}: {exc}") from exc
        else:
            self.path = "<array>"
            values = np.asarray(source, dtype=np.float64)
        values = values.ravel()
        if values.size < 2 or not np.isfinite(values).all():
            raise LawError("empirical law needs at least two finite values")
        super().__init__(self.path)
        self.values = np.sort(values)
        atoms, counts = np.unique(self.values, return_counts=True)
        self._set_atoms(atoms, counts / values.size)

    def sample(self, rng, size):
        return self.values[rng.integers(0, self.values.size, size)]


LAWS = {
    cls.name: cls
    for cls in (Gaussian, Rademacher, Uniform, TwoPoint, Laplace, StudentT, Cauchy, Empirical)
}


def parse_law(spec) -> InitialLaw:
    """Build a law from ``"name:args"`` or ``{"name": ..., "params": [...]}``."""
    if isinstance(spec, InitialLaw):
        return spec
    if isinstance(spec, dict):
        name = spec.get("name")
        args = spec.get("params", [])
        if not isinstance(args, (list, tuple)):
            args = [args]
    else:
        name, _, rest = str(spec).partition(":")
        args = [a for a in rest.split(",") if a.strip()] if rest else []
    name = (name or "").strip().lower()
    if name not in LAWS:
        raise LawError(f"unknown law {name!r}; known: {', '.join(sorted(LAWS))}")
    if name == "empirical":
        if len(args) != 1:
            raise LawError("empirical needs exactly one argument, the data file")
        return Empirical(str(args[0]).strip())
    try:
        values = [float(a) for a in args]
    except ValueError as exc:
        raise LawError(f"bad parameters for {name}: {args}") from exc
    try:
        return LAWS[name](*values)
    except TypeError as exc:
        raise LawError(f"wrong number of parameters for {name}: {args}") from exc
