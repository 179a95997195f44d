"""McKean trees: the ordered full binary trees indexing the Wild sum.

A tree with n leaves is held as its pre-order sequence of node flags
(1 = internal node, 0 = leaf), 2n - 1 entries.  The text form replaces the
flags by "I" and "L", so the cherry is "ILL".  Internal nodes are numbered
1..n-1 in pre-order unless level order is asked for explicitly; leaves are
numbered 1..n left to right.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import ArgumentError, RangeError

#: Largest n accepted by :func:`catalan`.  Python integers are exact at any
#: size; the cap only keeps a typo from allocating a number with millions of
#: digits.
CATALAN_MAX_N = 20_000

#: Default cap for exhaustive enumeration (C_10 = 4862 trees).
ENUMERATION_CAP = 10


@dataclass(frozen=True, eq=False)
class McKeanTree:
    flags: np.ndarray

    def __post_init__(self):
        flags = np.ascontiguousarray(self.flags, dtype=np.uint8)
        if flags.ndim != 1 or flags.size % 2 == 0:
            raise ArgumentError("a tree needs an odd number of pre-order nodes")
        need = 1 + np.cumsum(np.where(flags == 1, 1, -1))
        if need[-1] != 0 or (need[:-1] <= 0).any():
            raise ArgumentError("flags do not describe a full binary tree")
        flags.setflags(write=False)
        object.__setattr__(self, "flags", flags)

    @classmethod
    def from_code(cls, code: str) -> "McKeanTree":
        code = code.strip()
        if set(code) - {"I", "L"}:
            raise ArgumentError(f"tree code may only contain I and L: {code!r}")
        return cls(np.frombuffer(code.encode(), dtype=np.uint8) == ord("I"))

    @property
    def code(self) -> str:
        return np.where(self.flags == 1, ord("I"), ord("L")).astype(np.uint8).tobytes().decode()

    @property
    def n_leaves(self) -> int:
        return (self.flags.size + 1) // 2

    @property
    def n_internal(self) -> int:
        return self.n_leaves - 1

    @cached_property
    def _arrays(self):
        return _kernels.tree_arrays(self.flags)

    @property
    def parent(self) -> np.ndarray:
        return self._arrays[0]

    @property
    def side(self) -> np.ndarray:
        return self._arrays[1]

    @property
    def node_depth(self) -> np.ndarray:
        return self._arrays[2]

    @property
    def leaf_counts(self) -> np.ndarray:
        """Number of leaves under each node, pre-order."""
        return self._arrays[3]

    def internal_order(self, order: str = "preorder") -> np.ndarray:
        """Label (1..n-1) of each internal node, listed in pre-order.

        ``"level"`` numbers internal nodes breadth first, left to right
        within a level.
        """
        internal = np.flatnonzero(self.flags == 1)
        if order == "preorder":
            return np.arange(1, internal.size + 1)
        if order == "level":
            depth = self.node_depth[internal]
            # pre-order position already orders nodes left to right within a level
            rank = np.lexsort((internal, depth))
            labels = np.empty(internal.size, dtype=np.int64)
            labels[rank] = np.arange(1, internal.size + 1)
            return labels
        raise ArgumentError(f"unknown node order {order!r}")

    def __eq__(self, other):
        return isinstance(other, McKeanTree) and np.array_equal(self.flags, other.flags)

    def __hash__(self):
        return hash(self.flags.tobytes())

    def __repr__(self):
        code = self.code if self.flags.size <= 41 else self.code[:38] + "..."
        return f"McKeanTree({code!r})"


@dataclass(frozen=True)
class DepthProfile:
    depths: np.ndarray

    @property
    def tree_depth(self) -> int:
        return int(self.depths.min())

    def kraft_holds(self) -> bool:
        """Exact check of sum_j 2**-depth_j == 1 in integer arithmetic."""
        top = int(self.depths.max())
        counts = Counter(self.depths.tolist())
        return sum(c << (top - d) for d, c in counts.items()) == 1 << top

    def power_sum(self, x: float) -> float:
        return float(np.sum(np.power(float(x), self.depths)))


def catalan(n: int) -> int:
    """|G(n)| = binom(2n - 2, n - 1) / n."""
    if n < 1:
        raise ArgumentError("catalan needs n >= 1")
    if n > CATALAN_MAX_N:
        raise RangeError(f"catalan({n}) beyond the supported limit n <= {CATALAN_MAX_N}")
    return math.comb(2 * n - 2, n - 1) // n


def _codes(n):
    if n == 1:
        return ["L"]
    out = []
    for j in range(1, n):  # right subtree takes j leaves
        for left in _codes(n - j):
            for right in _codes(j):
                out.append("I" + left + right)
    return out


def enumerate_trees(n: int, cap: int = ENUMERATION_CAP) -> list[McKeanTree]:
    if n < 1:
        raise ArgumentError("enumerate_trees needs n >= 1")
    if n > cap:
        raise RangeError(f"enumeration of G({n}) exceeds the cap n <= {cap}")
    return [McKeanTree.from_code(c) for c in _codes(n)]


def tree_probability(tree: McKeanTree) -> float:
    """p_n(tree): product over internal nodes of 1 / (leaves under node - 1)."""
    counts = tree.leaf_counts[tree.flags == 1] - 1
    if counts.size == 0:
        return 1.0
    denom = math.prod(counts.tolist())
    if denom < 1e300:
        return 1.0 / denom
    return float(np.exp(-np.sum(np.log(counts.astype(np.float64)))))


def sample_tree(n: int, rng: np.random.Generator) -> McKeanTree:
    """Draw a tree from p_n by recursive uniform splitting."""
    if n < 1:
        raise ArgumentError("sample_tree needs n >= 1")
    usplit = rng.random(n - 1)
    return McKeanTree(_kernels.flags_from_splits(n, usplit))


def leaf_depths(tree: McKeanTree) -> DepthProfile:
    return DepthProfile(tree.node_depth[tree.flags == 0].copy())


def depth_moment_exact(x: float, n: int) -> float:
    """E[sum_j x**depth_j | nu = n] = Gamma(2x + n - 1) / (Gamma(2x) Gamma(n))."""
    if x <= 0 or n < 1:
        raise ArgumentError("depth_moment_exact needs x > 0 and n >= 1")
    return math.exp(math.lgamma(2 * x + n - 1) - math.lgamma(2 * x) - math.lgamma(n))


def sample_depth_power_sums(n, xs, size, rng) -> np.ndarray:
    """sum_j x**depth_j for `size` trees drawn from p_n, one column per x."""
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    nus = np.full(size, n, dtype=np.int64)
    usplit = rng.random(size * (n - 1))
    out = np.empty((size, xs.size))
    _kernels.walk_depth_powers(nus, usplit, xs, out)
    return out


def enumeration_csv(n: int, cap: int = ENUMERATION_CAP) -> str:
    """CSV with columns tree_id, code, probability, depths (sorted, space separated)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tree_id", "code", "probability", "depths"])
    for i, tree in enumerate(enumerate_trees(n, cap)):
        depths = sorted(leaf_depths(tree).depths.tolist())
        w.writerow([i, tree.code, repr(tree_probability(tree)), " ".join(map(str, depths))])
    return buf.getvalue()
