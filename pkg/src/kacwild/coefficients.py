"""Leaf coefficients pi_j, the angular moments alpha_p and the max-coefficient bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import ArgumentError, DomainError
from .trees import McKeanTree


@dataclass(frozen=True)
class CoefficientVector:
    coefficients: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coefficients)))

    @property
    def energy(self) -> float:
        return float(np.dot(self.coefficients, self.coefficients))

    def __len__(self):
        return self.coefficients.size


def coefficients(tree: McKeanTree, angles, order: str = "preorder") -> CoefficientVector:
    """pi_j for every leaf: product of cos (left step) or sin (right step) up to the root.

    ``angles[k - 1]`` belongs to the internal node labelled k under `order`.
    """
    angles = np.asarray(angles, dtype=np.float64)
    if angles.ndim != 1 or angles.size != tree.n_internal:
        raise ArgumentError(
            f"tree has {tree.n_internal} internal nodes but {angles.size} angles were given"
        )
    if order != "preorder":
        angles = angles[tree.internal_order(order) - 1]
    return CoefficientVector(_kernels.coefficients_from_flags(tree.flags, angles))


def sample_angles(n_internal: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 2.0 * math.pi, n_internal)


@lru_cache(maxsize=None)
def _graded_gauss_legendre(panels=32, nodes=16):
    # panels on [0, pi/2] in u = pi/2 - theta, halving toward u = 0 where
    # sin(u)**p behaves like u**p
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = [0.0] + [0.5 * math.pi * 2.0 ** -k for k in range(panels - 1, -1, -1)]
    us, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        us.append(0.5 * (b - a) * x + 0.5 * (b + a))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(us), np.concatenate(ws)


def alpha_p(p: float) -> float:
    """(1/2pi) * integral over [0, 2pi) of |cos theta|**p.

    512-node composite Gauss-Legendre on a quarter period (symmetry factor
    4 / 2pi), with panels graded toward theta = pi/2.
    """
    if p <= 0:
        raise DomainError("alpha_p needs p > 0", p=p)
    u, w = _graded_gauss_legendre()
    return float(2.0 / math.pi * np.dot(w, np.sin(u) ** p))


def alpha_p_closed_form(p: float) -> float:
    """Gamma((p + 1) / 2) / (sqrt(pi) Gamma(p / 2 + 1))."""
    if p <= 0:
        raise DomainError("alpha_p needs p > 0", p=p)
    return math.exp(math.lgamma((p + 1) / 2) - math.lgamma(p / 2 + 1)) / math.sqrt(math.pi)


def lemma1_bound(x: float, p: float, t: float) -> float:
    """Upper bound x**-p * exp(-t (1 - 2 alpha_p)) on P{max_j |pi_j| > x}."""
    if not 0 < x < 1:
        raise DomainError("lemma1_bound needs 0 < x < 1", x=x)
    if p <= 2:
        raise DomainError("lemma1_bound needs p > 2 (alpha_2 = 1/2 makes the bound vacuous)", p=p)
    if t < 0:
        raise DomainError("lemma1_bound needs t >= 0", t=t)
    return x ** -p * math.exp(-t * (1.0 - 2.0 * alpha_p(p)))
