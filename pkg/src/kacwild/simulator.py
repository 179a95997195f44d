"""Exact sampling of V_t = sum_j pi_j x_j, the velocity law solving the Kac equation.

Randomness layout
-----------------
A batch of `size` draws is cut into fixed blocks of BLOCK_SIZE draws.  Block
b owns the stream ``default_rng(SeedSequence(seed, spawn_key=(b,)))`` and
draws, in this order: the collision counts nu (inverse CDF), the split
uniforms and the angles for all internal nodes of the block, then the
initial-law values for all leaves.  Chunks handed to worker threads are
contiguous runs of blocks, so the output does not depend on the number of
chunks or threads.

Binary format (little-endian)
-----------------------------
    offset  type     field
    0       4 bytes  magic b"KACV"
    4       uint32   version (1)
    8       float64  t
    16      uint64   seed
    24      uint64   size
    32      uint32   byte length L of the law spec
    36      L bytes  law spec, UTF-8
    36+L    float64  values[size]
"""

from __future__ import annotations

import io
import math
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ArgumentError, DomainError, NuCapExceeded
from .laws import InitialLaw, parse_law

NU_CAP = 10_000_000
BLOCK_SIZE = 256
BINARY_MAGIC = b"KACV"
BINARY_VERSION = 1
CSV_VERSION = 1


def sample_nu(t: float, rng: np.random.Generator, size=None):
    """Collision count with P{nu = n} = e^-t (1 - e^-t)^(n - 1).

    n = 1 + floor(log U / log(1 - e^-t)), U uniform on (0, 1].
    """
    if t < 0:
        raise DomainError("t must be nonnegative", t=t)
    u = 1.0 - rng.random(size)
    if t == 0:
        return 1 if size is None else np.ones(size, dtype=np.int64)
    q = -math.expm1(-t)  # 1 - e^-t
    if q >= 1.0:  # e^-t below double resolution
        raise NuCapExceeded(t, math.inf, NU_CAP)
    with np.errstate(divide="ignore"):
        n = 1.0 + np.floor(np.log(u) / math.log(q))
    if size is None:
        return int(n)
    return n.astype(np.int64)


@dataclass
class BlockDraw:
    values: np.ndarray
    nu: np.ndarray
    pimax: np.ndarray
    energy: np.ndarray


def draw_block(t, law: InitialLaw, m, rng, nu_cap=NU_CAP) -> BlockDraw:
    """m independent draws of V_t from one stream."""
    nus = sample_nu(t, rng, m)
    big = int(nus.max())
    if big > nu_cap:
        raise NuCapExceeded(t, big, nu_cap)
    n_internal = int(nus.sum()) - m
    usplit = rng.random(n_internal)
    angles = rng.uniform(0.0, 2.0 * math.pi, n_internal)
    x = np.asarray(law.sample(rng, n_internal + m), dtype=np.float64)
    v = np.empty(m)
    pimax = np.empty(m)
    energy = np.empty(m)
    _kernels.walk_block(nus, usplit, angles, x, v, pimax, energy)
    return BlockDraw(v, nus, pimax, energy)


def simulate_v(t: float, law: InitialLaw, rng: np.random.Generator, nu_cap=NU_CAP) -> float:
    return float(draw_block(t, law, 1, rng, nu_cap).values[0])


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


@dataclass
class SampleBatch:
    t: float
    seed: int
    law: str
    values: np.ndarray
    meta: dict = field(default_factory=dict)
    #: per-draw nu, max |pi_j| and sum pi_j^2 when requested from simulate_batch
    diagnostics: dict | None = None

    @property
    def size(self) -> int:
        return self.values.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# kacwild samples v{CSV_VERSION}\n")
        buf.write(f"# t={self.t!r} seed={self.seed} size={self.size} law={self.law}\n")
        buf.write("value\n")
        for v in self.values.tolist():
            buf.write(f"{v!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampleBatch":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# kacwild samples"):
            raise ArgumentError("not a kacwild sample CSV")
        header = dict(kv.split("=", 1) for kv in lines[1][1:].split())
        values = np.array([float(s) for s in lines[3:] if s.strip()])
        return cls(float(header["t"]), int(header["seed"]), header["law"], values)

    def to_bytes(self) -> bytes:
        law = self.law.encode()
        head = BINARY_MAGIC + struct.pack("<IdQQI", BINARY_VERSION, self.t, self.seed, self.size, len(law))
        return head + law + self.values.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SampleBatch":
        if data[:4] != BINARY_MAGIC:
            raise ArgumentError("bad magic in sample file")
        version, t, seed, size, nlaw = struct.unpack_from("<IdQQI", data, 4)
        if version != BINARY_VERSION:
            raise ArgumentError(f"unsupported sample file version {version}")
        off = 4 + struct.calcsize("<IdQQI")
        law = data[off:off + nlaw].decode()
        values = np.frombuffer(data, dtype="<f8", count=size, offset=off + nlaw).astype(np.float64)
        return cls(t, seed, law, values)


def _run_blocks(t, law, size, seed, blocks, nu_cap, chunk):
    out = []
    for b in blocks:
        m = min(BLOCK_SIZE, size - b * BLOCK_SIZE)
        try:
            out.append(draw_block(t, law, m, block_rng(seed, b), nu_cap))
        except NuCapExceeded as exc:
            raise NuCapExceeded(t, exc.nu, nu_cap, chunk=chunk) from None
    return out


def simulate_batch(t: float, law, size: int, seed: int, chunks: int = 1,
                   threads: int = 1, nu_cap: int = NU_CAP, diagnostics: bool = False) -> SampleBatch:
    """`size` i.i.d. draws of V_t, reproducible from (seed, t, law, size).

    With `diagnostics`, the batch also carries nu, max_j |pi_j| and
    sum_j pi_j^2 for every draw.
    """
    law = parse_law(law)
    if size < 1:
        raise ArgumentError("size must be >= 1")
    if t < 0:
        raise DomainError("t must be nonnegative", t=t)
    start = time.perf_counter()
    n_blocks = -(-size // BLOCK_SIZE)
    chunks = max(1, min(chunks, n_blocks))
    groups = [g.tolist() for g in np.array_split(np.arange(n_blocks), chunks)]
    if threads > 1 and chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ig: _run_blocks(t, law, size, seed, ig[1], nu_cap, ig[0]),
                                  enumerate(groups)))
    else:
        parts = [_run_blocks(t, law, size, seed, g, nu_cap, i) for i, g in enumerate(groups)]
    draws = [d for part in parts for d in part]
    values = np.concatenate([d.values for d in draws])
    meta = {"law": law.spec, "size": size, "chunks": chunks, "block_size": BLOCK_SIZE,
            "wall_clock_s": time.perf_counter() - start}
    diag = None
    if diagnostics:
        diag = {"nu": np.concatenate([d.nu for d in draws]),
                "pimax": np.concatenate([d.pimax for d in draws]),
                "energy": np.concatenate([d.energy for d in draws])}
    return SampleBatch(float(t), int(seed), law.spec, values, meta, diag)


def moment_diagnostics(batch: SampleBatch, law) -> dict:
    """Empirical mean and second moment against m1 e^-t and the conserved energy."""
    law = parse_law(law)
    if not law.finite_variance:
        return {"applicable": False, "reason": f"{law.spec} has infinite variance"}
    v = batch.values
    n = v.size
    mean = float(v.mean())
    m2 = float(np.mean(v * v))
    mean_se = float(v.std(ddof=1) / math.sqrt(n))
    m2_se = float((v * v).std(ddof=1) / math.sqrt(n))
    mean_exp = law.mean * math.exp(-batch.t)
    m2_exp = law.second_moment
    return {
        "applicable": True,
        "t": batch.t,
        "size": n,
        "mean": mean, "mean_expected": mean_exp, "mean_se": mean_se,
        "mean_z": (mean - mean_exp) / mean_se if mean_se > 0 else 0.0,
        "second_moment": m2, "second_moment_expected": m2_exp, "second_moment_se": m2_se,
        "second_moment_z": (m2 - m2_exp) / m2_se if m2_se > 0 else 0.0,
    }
