"""Monte Carlo verification of the limit laws.

Replicates are split into fixed blocks with one random stream per block,
so the samples depend only on (seed, count) and not on the number of
worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cutting, fragmentation
from .errors import InvalidParameterError, UnsupportedLawError
from .rng import RngStream, blocks
from .samplers import _KIND_CODE, OffspringLaw, nearest_attainable
from .stats import ReferenceLaw, ks_distance, ks_two_sample, moment_check

KS_THRESHOLD = 0.05
GW_KS_THRESHOLD = 0.06
MOMENT_THRESHOLD = 0.05


def run_blocks(kernel, count: int, seed: int, stream: int = 0, threads: int = 1) -> np.ndarray:
    """Concatenate ``kernel(block_count, generator)`` over all blocks in order."""
    if count < 1:
        raise InvalidParameterError("count must be positive")
    root = RngStream(seed, stream)
    jobs = [(b, stop - start) for b, start, stop in blocks(count)]

    def one(job):
        b, size = job
        return kernel(size, root.child(b).generator())

    if threads <= 1 or len(jobs) == 1:
        parts = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, jobs))
    return np.concatenate(parts)


@dataclass
class ClaimResult:
    claim: str
    checks: list = field(default_factory=list)  # (label, value, threshold)
    detail: str = ""
    samples: dict = field(default_factory=dict)

    def add(self, label: str, value: float, threshold: float) -> None:
        self.checks.append((label, float(value), float(threshold)))

    @property
    def passed(self) -> bool:
        return all(v < th for _, v, th in self.checks)

    def lines(self) -> list[str]:
        out = []
        for label, v, th in self.checks:
            status = "PASS" if v < th else "FAIL"
            out.append(f"{status} {self.claim} {label}={v:.4f} threshold={th:g}")
        return out


def cut_samples(n: int, k: int, count: int, seed: int, threads: int = 1) -> np.ndarray:
    """M(T_n, S_k) over uniform trees and uniform targets (records fast path)."""
    return run_blocks(lambda c, g: cutting.cayley_cut_batch(n, k, c, g), count, seed, 1, threads)


def verify_chik(n: int, k: int, count: int, seed: int, threads: int = 1) -> ClaimResult:
    x = cut_samples(n, k, count, seed, threads) / math.sqrt(n)
    law = ReferenceLaw(k)
    res = ClaimResult(f"chik n={n} k={k}", detail=f"replicates={count}", samples={"M/sqrt(n)": x})
    res.add("ks", ks_distance(x, law), KS_THRESHOLD)
    res.add("moment1_relerr", moment_check(x, law, 1), MOMENT_THRESHOLD)
    res.add("moment2_relerr", moment_check(x, law, 2), MOMENT_THRESHOLD)
    return res


def verify_kcoup(n: int, k: int, count: int, seed: int, threads: int = 1) -> ClaimResult:
    """M - k from ordered cutting against independent spanned-edge counts."""
    m = cut_samples(n, k, count, seed, threads) - k
    span = run_blocks(lambda c, g: cutting.spanned_edges_batch(n, k, c, g), count, seed, 2, threads)
    res = ClaimResult(f"kcoup n={n} k={k}", detail=f"replicates={count}",
                      samples={"M-k": m, "spanned": span})
    res.add("ks2", ks_two_sample(m / math.sqrt(n), span / math.sqrt(n)), KS_THRESHOLD)
    return res


def fragmentation_samples(n: int, count: int, seed: int, threads: int = 1,
                          law: OffspringLaw | None = None, sigma: float = 1.0) -> np.ndarray:
    """Rows (kappa, Lambda(inf), integral of mu, sup local-time gap)."""
    def kernel(c, g):
        return fragmentation.summary_batch(n, c, g, sigma, law)

    return run_blocks(kernel, count, seed, 3, threads)


def verify_rayleigh(n: int, count: int, seed: int, threads: int = 1) -> ClaimResult:
    rows = fragmentation_samples(n, count, seed, threads)
    lam = rows[:, 1]
    kap = rows[:, 0] / math.sqrt(n)
    law = ReferenceLaw.rayleigh()
    res = ClaimResult(f"rayleigh n={n}", detail=f"replicates={count}",
                      samples={"Lambda": lam, "kappa/sqrt(n)": kap})
    res.add("ks_Lambda", ks_distance(lam, law), KS_THRESHOLD)
    res.add("ks_kappa", ks_distance(kap, law), KS_THRESHOLD)
    return res


def verify_gw(law: OffspringLaw, n: int, count: int, seed: int, threads: int = 1) -> ClaimResult:
    if law.kind not in _KIND_CODE:
        raise UnsupportedLawError("the batch GW path supports poisson1, geometric and binary")
    m = nearest_attainable(law, n)
    code = _KIND_CODE[law.kind]
    kap = run_blocks(lambda c, g: cutting.gw_records_batch(code, m, c, g), count, seed, 4, threads)
    x = kap / (law.sigma * math.sqrt(m))
    res = ClaimResult(f"gw law={law.describe()} n={m}", detail=f"replicates={count}",
                      samples={"kappa/(sigma sqrt n)": x})
    res.add("ks", ks_distance(x, ReferenceLaw.rayleigh()), GW_KS_THRESHOLD)
    return res


def localtime_medians(ns, count: int, seed: int, threads: int = 1) -> list[float]:
    return [float(np.median(fragmentation_samples(n, count, seed + i, threads)[:, 3]))
            for i, n in enumerate(ns)]


def verify_localtime(ns=(100, 1000, 10000), count: int = 100, seed: int = 0, threads: int = 1) -> ClaimResult:
    """Median sup |L/(sigma sqrt n) - Lambda| must strictly decrease along ``ns``."""
    med = localtime_medians(ns, count, seed, threads)
    res = ClaimResult("localtime", detail="medians " + " ".join(f"n={n}:{m:.4f}" for n, m in zip(ns, med)))
    for (n0, a), (n1, b) in zip(zip(ns, med), zip(ns[1:], med[1:])):
        # passes when the later median is strictly smaller
        res.add(f"median_ratio_{n1}/{n0}", b / a, 1.0)
    return res
