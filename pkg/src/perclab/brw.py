"""Critical branching random walk: exact generating-function recursion and
Monte Carlo, the fully verifiable analogue model for the percolation
exponents.

Offspring laws are restricted to three critical (mean exactly one)
families with closed-form probability generating functions, so survival
probabilities can be iterated exactly in extended precision.  Runs are
independent work units seeded as

    run_key = mix64((seed ^ BRW_SALT) ^ mix64(run_index))

feeding numpy's PCG64 (BRW_MIXER_ID below).  Population-capped runs are
counted as survived (a deliberate, flagged upper bias).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from mpmath import mp

from .environment import BRW_SALT, MASK64, mix64
from .estimators import EstimateRecord, bernoulli_stderr, mean_stderr
from .geometry import Adjacency, Point

BRW_MIXER_ID = "pcg64-splitmix-runkey-v1"


@dataclass(frozen=True)
class OffspringLaw:
    """Critical offspring distribution (mean exactly 1, variance > 0)."""

    kind: str        # "poisson" | "geometric" | "binomial"
    k: int = 0       # binomial trials

    def __post_init__(self):
        if self.kind not in ("poisson", "geometric", "binomial"):
            raise ValueError(f"unknown offspring law {self.kind!r}")
        if self.kind == "binomial":
            if self.k < 2:
                raise ValueError(
                    "binomial(k, 1/k) needs k >= 2: k = 1 has zero variance "
                    "and is not a critical branching law in the required sense")

    @staticmethod
    def poisson() -> "OffspringLaw":
        return OffspringLaw("poisson")

    @staticmethod
    def geometric() -> "OffspringLaw":
        return OffspringLaw("geometric")

    @staticmethod
    def binomial(k: int) -> "OffspringLaw":
        return OffspringLaw("binomial", k)

    @property
    def mean(self) -> float:
        return 1.0

    @property
    def variance(self) -> float:
        if self.kind == "poisson":
            return 1.0
        if self.kind == "geometric":
            return 2.0
        return 1.0 - 1.0 / self.k

    def pgf(self, s):
        """Probability generating function, usable with mpmath values."""
        if self.kind == "poisson":
            return mp.exp(s - 1)
        if self.kind == "geometric":
            return 1 / (2 - s)
        k = self.k
        return ((k - 1 + s) / k) ** k

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "poisson":
            return rng.poisson(1.0, size)
        if self.kind == "geometric":
            return rng.geometric(0.5, size) - 1
        return rng.binomial(self.k, 1.0 / self.k, size)

    def sample_total(self, rng: np.random.Generator, z: int) -> int:
        """Total offspring of z particles in one draw (sums are closed-form)."""
        if self.kind == "poisson":
            return int(rng.poisson(float(z)))
        if self.kind == "geometric":
            return int(rng.negative_binomial(z, 0.5))
        return int(rng.binomial(self.k * z, 1.0 / self.k))

    def label(self) -> str:
        return self.kind if self.kind != "binomial" else f"binomial({self.k})"


@dataclass(frozen=True)
class BRWConfig:
    offspring: OffspringLaw
    d: int
    adjacency: Adjacency = Adjacency("nn")
    killing: str = "none"          # "none" | "half_space"
    seed: int = 0
    population_cap: int = 1_000_000
    max_generations: int = 100_000

    def __post_init__(self):
        if self.killing not in ("none", "half_space"):
            raise ValueError(f"unknown killing mode {self.killing!r}")

    def fingerprint(self) -> dict:
        return {"d": self.d, "adjacency": self.adjacency.label(), "p": 1.0,
                "seed": self.seed, "mixer": BRW_MIXER_ID}


# ---------------------------------------------------------------------
# Exact recursion
# ---------------------------------------------------------------------

def gw_survival_exact(law: OffspringLaw, n: int, dps: int = 60) -> float:
    """P(generation n is nonempty), by iterating q <- pgf(q) from q = 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    with mp.workdps(dps):
        q = mp.mpf(0)
        for _ in range(n):
            q = law.pgf(q)
        return float(1 - q)


def gw_survival_series(law: OffspringLaw, ns, dps: int = 60) -> dict[int, float]:
    """Survival probabilities at several generation counts, one sweep."""
    want = sorted(set(int(n) for n in ns))
    if want and want[0] < 0:
        raise ValueError("generations must be >= 0")
    out = {}
    with mp.workdps(dps):
        q = mp.mpf(0)
        gen = 0
        for n in want:
            while gen < n:
                q = law.pgf(q)
                gen += 1
            out[n] = float(1 - q)
    return out


# ---------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------

def _run_rng(seed: int, run: int) -> np.random.Generator:
    return np.random.default_rng(mix64((seed & MASK64) ^ BRW_SALT ^ mix64(run & MASK64)))


def sample_generation_size(cfg: BRWConfig, run: int, n: int) -> tuple[int, bool]:
    """Z_n for one run (positions ignored; killing must be 'none')."""
    if cfg.killing != "none":
        raise ValueError("generation-size sampling is for the unkilled process")
    rng = _run_rng(cfg.seed, run)
    z = 1
    for _ in range(n):
        if z == 0:
            return 0, False
        z = cfg.offspring.sample_total(rng, z)
        if z > cfg.population_cap:
            return z, True
    return z, False


def sample_survival(cfg: BRWConfig, run: int, n: int, mode: str = "generations") -> tuple[int, bool]:
    """Survival indicator for one run; capped runs count as survived."""
    if mode not in ("generations", "distance"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = _run_rng(cfg.seed, run)
    law = cfg.offspring
    killing = cfg.killing == "half_space"
    if not killing and mode == "generations":
        z = 1
        for _ in range(n):
            if z == 0:
                return 0, False
            z = law.sample_total(rng, z)
            if z > cfg.population_cap:
                return 1, True
        return (1 if z > 0 else 0), False

    offsets = np.asarray(cfg.adjacency.offsets(cfg.d), dtype=np.int64)
    pos = np.zeros((1, cfg.d), dtype=np.int64)
    if mode == "distance" and n <= 0:
        return 1, False
    gens = range(n) if mode == "generations" else range(cfg.max_generations)
    for _ in gens:
        if len(pos) == 0:
            return 0, False
        counts = law.sample(rng, len(pos))
        total = int(counts.sum())
        if total > cfg.population_cap:
            return 1, True
        if total == 0:
            pos = pos[:0]
            continue
        parents = np.repeat(np.arange(len(pos)), counts)
        child = pos[parents] + offsets[rng.integers(0, len(offsets), total)]
        if killing:
            child = child[child[:, 0] >= 0]
        pos = child
        if mode == "distance" and len(pos) and int(np.abs(pos).max()) >= n:
            return 1, False
    if mode == "generations":
        return (1 if len(pos) else 0), False
    return (1 if len(pos) else 0), len(pos) > 0


def sample_survival_coupled(cfg: BRWConfig, run: int, n: int,
                            mode: str = "generations") -> tuple[int, int, bool]:
    """(unkilled, killed) survival indicators computed on one shared tree.

    A particle is alive-under-killing iff it and its whole ancestry have
    first coordinate >= 0; the unkilled process keeps every particle.
    """
    if mode not in ("generations", "distance"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = _run_rng(cfg.seed, run)
    law = cfg.offspring
    offsets = np.asarray(cfg.adjacency.offsets(cfg.d), dtype=np.int64)
    pos = np.zeros((1, cfg.d), dtype=np.int64)
    alive = np.ones(1, dtype=bool)
    if mode == "distance" and n <= 0:
        return 1, 1, False
    hit_unkilled = False
    hit_killed = False
    gens = range(n) if mode == "generations" else range(cfg.max_generations)
    for _ in gens:
        if len(pos) == 0:
            break
        counts = law.sample(rng, len(pos))
        total = int(counts.sum())
        if total > cfg.population_cap:
            return 1, 1, True
        if total == 0:
            pos, alive = pos[:0], alive[:0]
            continue
        parents = np.repeat(np.arange(len(pos)), counts)
        pos = pos[parents] + offsets[rng.integers(0, len(offsets), total)]
        alive = alive[parents] & (pos[:, 0] >= 0)
        if mode == "distance" and len(pos):
            dist = np.abs(pos).max(axis=1)
            if not hit_unkilled and bool((dist >= n).any()):
                hit_unkilled = True
            if not hit_killed and bool((dist[alive] >= n).any() if alive.any() else False):
                hit_killed = True
            if hit_unkilled and (hit_killed or not alive.any()):
                break
    if mode == "generations":
        return (1 if len(pos) else 0), (1 if alive.any() else 0), False
    return (1 if hit_unkilled else 0), (1 if hit_killed else 0), False


def _green_run(cfg: BRWConfig, run: int, targets: list[Point],
               paired: bool) -> tuple[np.ndarray, np.ndarray, bool]:
    """Visit counts per target over one run's lifetime (generation 0 included)."""
    rng = _run_rng(cfg.seed, run)
    law = cfg.offspring
    offsets = np.asarray(cfg.adjacency.offsets(cfg.d), dtype=np.int64)
    tarr = np.asarray(targets, dtype=np.int64)
    killing = cfg.killing == "half_space"
    visits_all = np.zeros(len(targets))
    visits_killed = np.zeros(len(targets))
    pos = np.zeros((1, cfg.d), dtype=np.int64)
    alive = np.ones(1, dtype=bool)
    capped = False

    def tally(pos, alive):
        for i in range(len(targets)):
            at = (pos == tarr[i]).all(axis=1)
            visits_all[i] += int(at.sum())
            visits_killed[i] += int((at & alive).sum())

    tally(pos, alive)
    for _ in range(cfg.max_generations):
        if len(pos) == 0:
            return visits_all, visits_killed, capped
        counts = law.sample(rng, len(pos))
        total = int(counts.sum())
        if total > cfg.population_cap:
            return visits_all, visits_killed, True
        if total == 0:
            return visits_all, visits_killed, capped
        parents = np.repeat(np.arange(len(pos)), counts)
        pos = pos[parents] + offsets[rng.integers(0, len(offsets), total)]
        alive = alive[parents] & (pos[:, 0] >= 0)
        if killing and not paired:
            pos, alive = pos[alive], alive[alive]
        tally(pos, alive)
    return visits_all, visits_killed, True


# ---------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------

def brw_survival_mc(cfg: BRWConfig, n: int, n_samples: int,
                    mode: str = "generations", run_base: int = 0) -> EstimateRecord:
    succ = trunc = 0
    for r in range(run_base, run_base + n_samples):
        s, capped = sample_survival(cfg, r, n, mode)
        succ += s
        trunc += capped
    est = succ / n_samples
    return EstimateRecord(
        quantity="brw_survival",
        params={"n": n, "mode": mode, "offspring": cfg.offspring.label(),
                "killing": cfg.killing},
        kind="bernoulli", n_samples=n_samples, total=succ, estimate=est,
        stderr=bernoulli_stderr(est, n_samples),
        truncation_rate=trunc / n_samples, fingerprint=cfg.fingerprint())


def brw_green_profile(cfg: BRWConfig, targets: list[Point], n_samples: int,
                      run_base: int = 0) -> dict[Point, EstimateRecord]:
    """Mean total visits to each target over the process lifetime."""
    targets = [tuple(t) for t in targets]
    sums = np.zeros(len(targets))
    sumsq = np.zeros(len(targets))
    trunc = 0
    killing = cfg.killing == "half_space"
    for r in range(run_base, run_base + n_samples):
        va, vk, capped = _green_run(cfg, r, targets, paired=False)
        v = vk if killing else va
        sums += v
        sumsq += v * v
        trunc += capped
    out = {}
    for i, t in enumerate(targets):
        est = sums[i] / n_samples
        out[t] = EstimateRecord(
            quantity="brw_green",
            params={"target": list(t), "offspring": cfg.offspring.label(),
                    "killing": cfg.killing},
            kind="mean", n_samples=n_samples, total=float(sums[i]), estimate=est,
            stderr=mean_stderr(float(sums[i]), float(sumsq[i]), n_samples),
            truncation_rate=trunc / n_samples, fingerprint=cfg.fingerprint())
    return out


def brw_green_profile_paired(cfg: BRWConfig, targets: list[Point], n_samples: int,
                             run_base: int = 0) -> tuple[dict, dict]:
    """(unkilled, killed) mean visit profiles from shared trees."""
    targets = [tuple(t) for t in targets]
    sums_a = np.zeros(len(targets))
    sums_k = np.zeros(len(targets))
    for r in range(run_base, run_base + n_samples):
        va, vk, _ = _green_run(cfg, r, targets, paired=True)
        sums_a += va
        sums_k += vk
    mean_a = {t: sums_a[i] / n_samples for i, t in enumerate(targets)}
    mean_k = {t: sums_k[i] / n_samples for i, t in enumerate(targets)}
    return mean_a, mean_k
