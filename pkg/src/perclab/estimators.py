"""Monte Carlo estimators for arm, two-point, cluster-size and transport
quantities, with standard errors and reproducibility metadata.

Every estimator is a reduction of a pure per-replicate sampler
`fn(replicate) -> (value, truncated)`, so results are independent of how
replicate ranges are chunked across workers.  All probabilities are plain
means of indicators; no variance reduction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

from . import geometry as geo
from .census import census, regular_spanning_count, spanning_cluster_stats
from .environment import (LatticeConfig, MIXER_ID, OverlayEnvironment,
                          as_environment, inner_environment)
from .explore import (ExplorationCaps, UNLIMITED, _grow, boundary_count,
                      cluster_measurable_edges, explore_cluster,
                      regularity_diagnostic)
from .geometry import Boundary, Point, Region, norm_inf


# ---------------------------------------------------------------------
# Records and accumulation
# ---------------------------------------------------------------------

CSV_COLUMNS = ["quantity", "params", "kind", "n_samples", "total", "estimate",
               "stderr", "truncation_rate", "d", "adjacency", "p", "seed", "mixer"]


@dataclass
class EstimateRecord:
    quantity: str
    params: dict
    kind: str                  # "bernoulli" | "mean"
    n_samples: int
    total: float               # successes (bernoulli) or sum of values (mean)
    estimate: float
    stderr: float
    truncation_rate: float
    fingerprint: dict
    extra: dict = field(default_factory=dict)

    @property
    def biased_possible(self) -> bool:
        return self.truncation_rate > 0

    def to_dict(self) -> dict:
        out = {
            "quantity": self.quantity,
            "params": self.params,
            "kind": self.kind,
            "n_samples": self.n_samples,
            "total": self.total,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "truncation_rate": self.truncation_rate,
        }
        out.update(self.fingerprint)
        if self.extra:
            out["extra"] = self.extra
        return out

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv_row(self) -> list[str]:
        d = self.to_dict()
        d["params"] = json.dumps(self.params, sort_keys=True)
        return [repr(d[c]) if isinstance(d[c], float) else str(d[c]) for c in CSV_COLUMNS]

    @staticmethod
    def from_dict(d: dict) -> "EstimateRecord":
        fp = {k: d[k] for k in ("d", "adjacency", "p", "seed", "mixer")}
        return EstimateRecord(
            quantity=d["quantity"], params=d["params"], kind=d["kind"],
            n_samples=d["n_samples"], total=d["total"], estimate=d["estimate"],
            stderr=d["stderr"], truncation_rate=d["truncation_rate"],
            fingerprint=fp, extra=d.get("extra", {}))

    @staticmethod
    def from_json_line(line: str) -> "EstimateRecord":
        return EstimateRecord.from_dict(json.loads(line))


@dataclass
class Partial:
    """Merge-able accumulation over a replicate range."""

    count: int = 0
    total: float = 0.0
    total_sq: float = 0.0
    truncated: int = 0
    hist: dict = field(default_factory=dict)
    total2: float = 0.0        # second stream (mass received, for paired audits)
    diff_sq: float = 0.0

    def merge(self, other: "Partial") -> "Partial":
        h = dict(self.hist)
        for k, v in other.hist.items():
            h[k] = h.get(k, 0) + v
        return Partial(self.count + other.count, self.total + other.total,
                       self.total_sq + other.total_sq,
                       self.truncated + other.truncated, h,
                       self.total2 + other.total2, self.diff_sq + other.diff_sq)

    def to_dict(self) -> dict:
        return {"count": self.count, "total": self.total, "total_sq": self.total_sq,
                "truncated": self.truncated,
                "hist": {str(k): v for k, v in self.hist.items()},
                "total2": self.total2, "diff_sq": self.diff_sq}

    @staticmethod
    def from_dict(d: dict) -> "Partial":
        return Partial(d["count"], d["total"], d["total_sq"], d["truncated"],
                       {int(k): v for k, v in d["hist"].items()},
                       d["total2"], d["diff_sq"])


def accumulate(fn: Callable[[int], tuple], lo: int, hi: int,
               keep_hist: bool = False, paired: bool = False) -> Partial:
    """Run the sampler over replicates [lo, hi) and fold the results."""
    part = Partial()
    for r in range(lo, hi):
        out = fn(r)
        if paired:
            send, get, trunc = out
            diff = send - get
            part.total += send
            part.total2 += get
            part.total_sq += diff
            part.diff_sq += diff * diff
        else:
            v, trunc = out
            part.total += v
            part.total_sq += v * v
            if keep_hist:
                part.hist[v] = part.hist.get(v, 0) + 1
        part.truncated += bool(trunc)
        part.count += 1
    return part


def bernoulli_stderr(est: float, n: int) -> float:
    return math.sqrt(est * (1.0 - est) / n)


def mean_stderr(total: float, total_sq: float, n: int) -> float:
    """Delete-one jackknife standard error of a sample mean."""
    if n < 2:
        return 0.0
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return math.sqrt(var / n)


def finalize(tag: str, params: dict, kind: str, cfg: LatticeConfig,
             part: Partial, extra: dict | None = None) -> EstimateRecord:
    n = part.count
    est = part.total / n if n else float("nan")
    if kind == "bernoulli":
        se = bernoulli_stderr(est, n) if n else float("nan")
    else:
        se = mean_stderr(part.total, part.total_sq, n)
    return EstimateRecord(quantity=tag, params=params, kind=kind,
                          n_samples=n, total=part.total, estimate=est,
                          stderr=se, truncation_rate=part.truncated / n if n else 0.0,
                          fingerprint=cfg.fingerprint(), extra=extra or {})


def _run(tag, params, kind, cfg, fn, n_samples, keep_hist=False) -> tuple[EstimateRecord, Partial]:
    part = accumulate(fn, cfg.replicate, cfg.replicate + n_samples, keep_hist=keep_hist)
    return finalize(tag, params, kind, cfg, part), part


# ---------------------------------------------------------------------
# Per-replicate samplers
# ---------------------------------------------------------------------

def _default_caps(caps: ExplorationCaps | None) -> ExplorationCaps:
    return caps if caps is not None else ExplorationCaps()


def sample_one_arm(cfg: LatticeConfig, replicate: int, n: int,
                   caps: ExplorationCaps | None = None) -> tuple[int, bool]:
    """Indicator of {0 <-> shell of B(n)}; a first passage to the shell
    stays inside B(n), so the restriction loses nothing."""
    env = cfg.environment(replicate)
    d = cfg.d
    target = (lambda x: max(max(x), -min(x)) == n)
    inside = geo.box(d, n).predicate()
    _, trunc, hit = _grow(env, inside, (0,) * d, _default_caps(caps), stop=target)
    return (1 if hit is not None else 0), (trunc and hit is None)


def sample_half_space_arm(cfg: LatticeConfig, replicate: int, n: int,
                          variant: str = "undirected", c: float = 0.0,
                          caps: ExplorationCaps | None = None) -> tuple[int, bool]:
    env = cfg.environment(replicate)
    d = cfg.d
    zero = (0,) * d
    eff = _default_caps(caps)
    if variant == "undirected":
        inside = geo.half_box(d, n).predicate()
        target = (lambda x: max(max(x), -min(x)) == n)
        _, trunc, hit = _grow(env, inside, zero, eff, stop=target)
        return (1 if hit is not None else 0), (trunc and hit is None)
    if variant == "directed":
        inside = geo.rect(d, n).predicate()
        target = (lambda x: x[0] == n)
        _, trunc, hit = _grow(env, inside, zero, eff, stop=target)
        return (1 if hit is not None else 0), (trunc and hit is None)
    if variant == "directed_top":
        inside = geo.rect(d, n).predicate()
        visited, trunc, _ = _grow(env, inside, zero, eff)
        top = sum(1 for v in visited if v[0] == n)
        return (1 if top > c * n * n else 0), trunc
    raise ValueError(f"unknown half-space arm variant {variant!r}")


def _two_point_window(x: Point, y: Point, d: int, half_space: bool, factor: int):
    """Bounded stand-in for an unbounded region, plus its artificial faces."""
    w = factor * max(norm_inf(tuple(a - b for a, b in zip(x, y))), 1)
    bounds = []
    synthetic = []
    for i in range(d):
        lo, hi = x[i] - w, x[i] + w
        if half_space and i == 0 and lo < 0:
            lo = 0
        else:
            synthetic.append((i, lo))
        synthetic.append((i, hi))
        bounds.append((lo, hi))
    return geo.rectangle(d, bounds), synthetic


def sample_two_point(cfg: LatticeConfig, replicate: int, x: Point, y: Point,
                     region, window_factor: int = 4,
                     caps: ExplorationCaps | None = None) -> tuple[int, bool]:
    """Indicator of {x <-> y in region}.

    Unbounded regions ("full"/"half_space") are windowed at
    window_factor * ||x - y|| around x; a failure whose cluster touches
    the window edge is flagged truncated (the unwindowed event could
    still hold).
    """
    if x == y:
        return 1, False
    env = cfg.environment(replicate)
    d = cfg.d
    synthetic: list[tuple[int, int]] = []
    if isinstance(region, str):
        if region == "full":
            reg, synthetic = _two_point_window(x, y, d, False, window_factor)
        elif region == "half_space":
            reg, synthetic = _two_point_window(x, y, d, True, window_factor)
        else:
            raise ValueError(f"unknown region keyword {region!r}")
    else:
        reg = region
    inside = reg.predicate()
    if not inside(x) or not inside(y):
        raise ValueError(f"{x} or {y} lies outside {reg}")
    visited, trunc, hit = _grow(env, inside, x, _default_caps(caps), stop=lambda v: v == y)
    if hit is not None:
        return 1, False
    if synthetic and not trunc:
        trunc = any(v[i] == face for v in visited for i, face in synthetic)
    return 0, trunc


def sample_corner_arm(cfg: LatticeConfig, replicate: int, n: int,
                      caps: ExplorationCaps | None = None) -> tuple[int, bool]:
    env = cfg.environment(replicate)
    d = cfg.d
    corner = (n,) * d
    inside = geo.box(d, n).predicate()
    _, trunc, hit = _grow(env, inside, (0,) * d, _default_caps(caps),
                          stop=lambda v: v == corner)
    return (1 if hit is not None else 0), (trunc and hit is None)


def sample_cluster_tail(cfg: LatticeConfig, replicate: int, t: int,
                        region: str = "half") -> tuple[int, bool]:
    """Indicator of {#C(0) > t}; exploration stops at t+1 vertices, which
    decides the event, so the early exit is lossless."""
    env = cfg.environment(replicate)
    d = cfg.d
    if region == "half":
        inside = geo.half_space(d).predicate()
    elif region == "full":
        inside = geo.lattice(d).predicate()
    else:
        inside = region.predicate()
    visited, _, _ = _grow(env, inside, (0,) * d,
                          ExplorationCaps(max_vertices=t + 1, max_radius=None))
    return (1 if len(visited) > t else 0), False


def sample_restricted_moment(cfg: LatticeConfig, replicate: int, n: int, order: int,
                             region: Region, caps: ExplorationCaps | None = None) -> tuple[float, bool]:
    env = cfg.environment(replicate)
    d = cfg.d
    rec_caps = _default_caps(caps)
    inside = region.predicate()
    visited, trunc, _ = _grow(env, inside, (0,) * d, rec_caps)
    ball = geo.box(d, n).predicate()
    size = sum(1 for v in visited if ball(v))
    return float(size ** order), trunc


def sample_xq(cfg: LatticeConfig, replicate: int, D: Region, Q: Boundary, z: Point,
              caps: ExplorationCaps | None = None) -> tuple[int, bool]:
    bc = boundary_count(cfg.environment(replicate), D, Q, z, _default_caps(caps))
    return bc.count, bc.truncated


def sample_transport(cfg: LatticeConfig, replicate: int, n: int,
                     caps: ExplorationCaps | None = None) -> tuple[float, float, bool]:
    """One paired (send, get) observation of the fixed scale-n transport rule.

    Mass from the origin goes to each vertex of its Ann'(n/2, 4n)-cluster
    lying in Ann_H(n, 3n); mass received is counted from the shifted
    rule, confined to the shifted windows, so both terms are exact per
    sample.
    """
    env = cfg.environment(replicate)
    d = cfg.d
    zero = (0,) * d
    eff = _default_caps(caps)
    send_region = geo.shifted_annulus(d, n / 2, 4 * n)
    hits = geo.half_annulus(d, n, 3 * n).predicate()
    visited, trunc1, _ = _grow(env, send_region.predicate(), zero, eff)
    send = sum(1 for v in visited if hits(v))

    wide = geo.box(d, 7 * n).predicate()
    cluster0, trunc2, _ = _grow(env, wide, zero, eff)
    get = 0
    for v in cluster0:
        if v == zero or not hits(tuple(-c for c in v)):
            continue
        reg = send_region.shifted(v).predicate()
        _, _, hit = _grow(env, reg, zero, eff, stop=lambda u: u == v)
        if hit is not None:
            get += 1
    return float(send), float(get), (trunc1 or trunc2)


def sample_regular_census(cfg: LatticeConfig, replicate: int, n: int, eta: float,
                          buffer: int = 0, memory_budget: int = 2_000_000) -> tuple[int, bool]:
    env = cfg.environment(replicate)
    cen = census(env, geo.box(cfg.d, 5 * n + buffer), n, 3 * n, memory_budget)
    stats = spanning_cluster_stats(cen, env, n)
    return regular_spanning_count(stats, n, eta), False


def sbad_threshold(s: int) -> float:
    return 1.0 - math.exp(-math.log(s) ** 2)


def sample_sbad(cfg: LatticeConfig, replicate: int, D: Region, z: Point, s: int,
                inner_n: int, inner_caps: ExplorationCaps | None = None) -> tuple[int, bool]:
    """Nested draw: realize C_D(z), then resample every edge not
    determined by it and test the size event at scale s.

    Frozen edges are exactly those with both endpoints in the cluster
    plus the cluster-to-(D minus cluster) edges; the inner stream is an
    independent substream derived from the master seed.
    """
    env = cfg.environment(replicate)
    rec = explore_cluster(env, z, D, UNLIMITED)
    frozen = cluster_measurable_edges(env, rec.vertices, D)
    holds = 0
    indeterminate = False
    for i in range(inner_n):
        hybrid = OverlayEnvironment(frozen, inner_environment(cfg, replicate, i))
        res = regularity_diagnostic(hybrid, z, s, caps=inner_caps)
        holds += res.ts_holds
        indeterminate = indeterminate or res.indeterminate
    p_hat = holds / inner_n
    return (1 if p_hat <= sbad_threshold(s) else 0), indeterminate


# ---------------------------------------------------------------------
# Public estimators
# ---------------------------------------------------------------------

def est_one_arm(cfg: LatticeConfig, n: int, n_samples: int,
                caps: ExplorationCaps | None = None) -> EstimateRecord:
    if n < 0:
        raise ValueError("n must be >= 0")
    rec, _ = _run("pi", {"n": n}, "bernoulli", cfg,
                  lambda r: sample_one_arm(cfg, r, n, caps), n_samples)
    return rec


def est_half_space_arm(cfg: LatticeConfig, n: int, n_samples: int,
                       variant: str = "undirected", c: float = 0.0,
                       caps: ExplorationCaps | None = None) -> EstimateRecord:
    if n < 1:
        raise ValueError("n must be >= 1")
    params = {"n": n, "variant": variant}
    if variant == "directed_top":
        params["c"] = c
    rec, _ = _run("pi_H", params, "bernoulli", cfg,
                  lambda r: sample_half_space_arm(cfg, r, n, variant, c, caps), n_samples)
    return rec


def est_two_point(cfg: LatticeConfig, x: Point, y: Point, region, n_samples: int,
                  window_factor: int = 4, caps: ExplorationCaps | None = None) -> EstimateRecord:
    params = {"x": list(x), "y": list(y),
              "region": region if isinstance(region, str) else region.to_text(),
              "window_factor": window_factor}
    rec, _ = _run("tau", params, "bernoulli", cfg,
                  lambda r: sample_two_point(cfg, r, x, y, region, window_factor, caps),
                  n_samples)
    return rec


def est_corner_arm(cfg: LatticeConfig, n: int, n_samples: int,
                   caps: ExplorationCaps | None = None) -> EstimateRecord:
    if n < 0:
        raise ValueError("n must be >= 0")
    rec, _ = _run("corner", {"n": n}, "bernoulli", cfg,
                  lambda r: sample_corner_arm(cfg, r, n, caps), n_samples)
    return rec


def est_cluster_tail(cfg: LatticeConfig, t: int, n_samples: int,
                     region: str = "half") -> EstimateRecord:
    if t < 0:
        raise ValueError("t must be >= 0")
    rec, _ = _run("tail", {"t": t, "region": region}, "bernoulli", cfg,
                  lambda r: sample_cluster_tail(cfg, r, t, region), n_samples)
    return rec


def est_restricted_moments(cfg: LatticeConfig, n: int, order: int, region: Region,
                           n_samples: int, caps: ExplorationCaps | None = None) -> EstimateRecord:
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    params = {"n": n, "order": order, "region": region.to_text()}
    rec, _ = _run("moments", params, "mean", cfg,
                  lambda r: sample_restricted_moment(cfg, r, n, order, region, caps),
                  n_samples)
    return rec


@dataclass
class XQDistribution:
    mean_record: EstimateRecord
    histogram: dict[int, int]
    bin_records: dict[int, EstimateRecord]


def est_XQ_distribution(cfg: LatticeConfig, D: Region, Q: Boundary, z: Point,
                        n_samples: int, caps: ExplorationCaps | None = None) -> XQDistribution:
    params = {"D": D.to_text(), "Q": Q.to_text(), "z": list(z)}
    fn = lambda r: sample_xq(cfg, r, D, Q, z, caps)
    part = accumulate(fn, cfg.replicate, cfg.replicate + n_samples, keep_hist=True)
    mean_rec = finalize("xq", params, "mean", cfg, part)
    bins = {}
    for v, cnt in sorted(part.hist.items()):
        est = cnt / part.count
        bins[v] = EstimateRecord(
            quantity="xq_bin", params={**params, "value": v}, kind="bernoulli",
            n_samples=part.count, total=cnt, estimate=est,
            stderr=bernoulli_stderr(est, part.count),
            truncation_rate=part.truncated / part.count,
            fingerprint=cfg.fingerprint())
    return XQDistribution(mean_rec, dict(sorted(part.hist.items())), bins)


@dataclass
class RegularCensusResult:
    mean_record: EstimateRecord
    tail_record: EstimateRecord


def est_regular_census(cfg: LatticeConfig, n: int, eta: float, n_samples: int,
                       threshold: int = 1, buffer: int = 0,
                       memory_budget: int = 2_000_000) -> RegularCensusResult:
    params = {"n": n, "eta": eta, "buffer": buffer}
    fn = lambda r: sample_regular_census(cfg, r, n, eta, buffer, memory_budget)
    part = accumulate(fn, cfg.replicate, cfg.replicate + n_samples, keep_hist=True)
    mean_rec = finalize("regular_census", params, "mean", cfg, part)
    tail_total = sum(cnt for v, cnt in part.hist.items() if v >= threshold)
    est = tail_total / part.count
    tail_rec = EstimateRecord(
        quantity="regular_census_tail", params={**params, "threshold": threshold},
        kind="bernoulli", n_samples=part.count, total=tail_total, estimate=est,
        stderr=bernoulli_stderr(est, part.count), truncation_rate=0.0,
        fingerprint=cfg.fingerprint())
    return RegularCensusResult(mean_rec, tail_rec)


@dataclass
class TransportAudit:
    n: int
    n_samples: int
    mean_send: float
    mean_get: float
    mean_diff: float
    diff_stderr: float
    z_score: float
    truncation_rate: float
    fingerprint: dict

    def record(self) -> EstimateRecord:
        return EstimateRecord(
            quantity="transport", params={"n": self.n}, kind="mean",
            n_samples=self.n_samples, total=self.mean_diff * self.n_samples,
            estimate=self.mean_diff, stderr=self.diff_stderr,
            truncation_rate=self.truncation_rate, fingerprint=self.fingerprint,
            extra={"mean_send": self.mean_send, "mean_get": self.mean_get,
                   "z_score": self.z_score})


def mass_transport_audit(cfg: LatticeConfig, n: int, n_samples: int,
                         caps: ExplorationCaps | None = None) -> TransportAudit:
    """Paired audit of the exact identity E[mass sent] = E[mass received]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    fn = lambda r: sample_transport(cfg, r, n, caps)
    part = accumulate(fn, cfg.replicate, cfg.replicate + n_samples, paired=True)
    N = part.count
    mean_send = part.total / N
    mean_get = part.total2 / N
    mean_diff = part.total_sq / N
    se = mean_stderr(part.total_sq, part.diff_sq, N)
    z = mean_diff / se if se > 0 else 0.0
    return TransportAudit(n=n, n_samples=N, mean_send=mean_send, mean_get=mean_get,
                          mean_diff=mean_diff, diff_stderr=se, z_score=z,
                          truncation_rate=part.truncated / N,
                          fingerprint=cfg.fingerprint())


def est_sbad_rate(cfg: LatticeConfig, D: Region, z: Point, s: int,
                  inner_n: int, outer_n: int,
                  inner_caps: ExplorationCaps | None = None) -> EstimateRecord:
    """Fraction of cluster realizations whose conditional size-event
    probability falls below the badness threshold."""
    if s < 2:
        raise ValueError("s must be >= 2")
    params = {"D": D.to_text(), "z": list(z), "s": s, "inner_n": inner_n}
    rec, _ = _run("sbad", params, "bernoulli", cfg,
                  lambda r: sample_sbad(cfg, r, D, z, s, inner_n, inner_caps), outer_n)
    return rec


# ---------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------

def write_jsonl(records: Iterable[EstimateRecord], path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(r.to_json_line() + "\n")


def read_jsonl(path) -> list[EstimateRecord]:
    with open(path) as fh:
        return [EstimateRecord.from_json_line(line) for line in fh if line.strip()]


def write_csv(records: Iterable[EstimateRecord], path) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.to_csv_row())


def read_csv(path) -> list[EstimateRecord]:
    import csv
    out = []
    with open(path) as fh:
        rd = csv.reader(fh)
        header = next(rd)
        for row in rd:
            d = dict(zip(header, row))
            d["params"] = json.loads(d["params"])
            for k in ("n_samples", "d", "seed"):
                d[k] = int(d[k])
            for k in ("total", "estimate", "stderr", "truncation_rate", "p"):
                d[k] = float(d[k])
            out.append(EstimateRecord.from_dict(d))
    return out
