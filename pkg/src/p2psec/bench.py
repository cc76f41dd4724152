"""Scaling measurements for policy compilation.

Rule projection unions per-kind permission sets, so compile time should
grow linearly with the number of domains.  This module generates
synthetic policies of increasing size, times the full compile-and-emit
pipeline, and fits a line through the measurements.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

from .mac import compile_policy, emit_rules
from .policy import (
    PeerPolicy,
    PropertyKind,
    SecurityProperty,
)

#: Non-conflicting property mixes cycled across generated domains.
_DOMAIN_MIXES: tuple[tuple[SecurityProperty, ...], ...] = (
    (SecurityProperty(PropertyKind.CONFIDENTIALITY),),
    (SecurityProperty(PropertyKind.INTEGRITY),),
    (SecurityProperty(PropertyKind.NOSHARE),),
    (SecurityProperty(PropertyKind.NOPUBLICATION),),
    (SecurityProperty(PropertyKind.COOPERATION),
     SecurityProperty(PropertyKind.INTEGRITY)),
    (SecurityProperty(PropertyKind.SPREAD),
     SecurityProperty(PropertyKind.NOPUBLICATION)),
    (SecurityProperty(PropertyKind.CONFIDENTIALITY),
     SecurityProperty(PropertyKind.INTEGRITY),
     SecurityProperty(PropertyKind.NOSHARE)),
    (),
)


def synthetic_policy(domains: int, resources_per_domain: int = 2) -> PeerPolicy:
    """Deterministic policy with the requested number of domains.

    Property mixes cycle through every non-conflicting combination so
    the compiled output exercises each rule set shape.
    """
    if domains < 0:
        raise ValueError("domains must be non-negative")
    policy = PeerPolicy(peer_id="bench")
    for index in range(domains):
        name = f"dom{index:05d}"
        policy = policy.create_domain(name)
        for prop in _DOMAIN_MIXES[index % len(_DOMAIN_MIXES)]:
            policy = policy.add_property(name, prop)
        for res in range(resources_per_domain):
            policy = policy.add_resource(f"/srv/{name}/file{res}", name)
    return policy


@dataclass(frozen=True)
class BenchPoint:
    domains: int
    resources: int
    time_ms: float
    repeats: int


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


@dataclass(frozen=True)
class BenchReport:
    points: tuple[BenchPoint, ...]
    fit_all: LinearFit
    fit_large: Optional[LinearFit]
    large_threshold: int


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    """Ordinary least squares in one variable.

    R-squared is 1.0 for a degenerate flat response, since a flat line
    then explains everything there is to explain.
    """
    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("need at least two points to fit")
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    if sxx == 0:
        raise ValueError("fit needs at least two distinct x values")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return LinearFit(slope=slope, intercept=intercept, r2=r2)


def time_compile(policy: PeerPolicy, repeats: int = 3,
                 warmup: int = 1) -> float:
    """Best wall-clock milliseconds for compile plus rule emission.

    Scheduler and GC noise is strictly additive, so the minimum over
    the repeats is the least-contaminated estimate of the true cost.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    for _ in range(warmup):
        emit_rules(compile_policy(policy))
    best = None
    for _ in range(repeats):
        start = time.perf_counter()
        emit_rules(compile_policy(policy))
        elapsed = time.perf_counter() - start
        if best is None or elapsed < best:
            best = elapsed
    return best * 1000.0


DEFAULT_COUNTS = (10, 20, 40, 80, 160, 320, 640)


def run_benchmark(counts: Sequence[int] = DEFAULT_COUNTS, repeats: int = 3,
                  warmup: int = 1, resources_per_domain: int = 2,
                  large_threshold: int = 100) -> BenchReport:
    """Time compiles across policy sizes and fit time against size.

    Small policies are dominated by constant overhead, so a second fit
    restricted to counts above ``large_threshold`` is reported when at
    least two such sizes were measured.
    """
    if not counts:
        raise ValueError("counts must not be empty")
    points = []
    for count in counts:
        policy = synthetic_policy(count, resources_per_domain)
        time_ms = time_compile(policy, repeats=repeats, warmup=warmup)
        points.append(BenchPoint(domains=count,
                                 resources=count * resources_per_domain,
                                 time_ms=time_ms, repeats=repeats))
    xs = [float(p.domains) for p in points]
    ys = [p.time_ms for p in points]
    fit_all = linear_fit(xs, ys)
    large = [(x, y) for x, y in zip(xs, ys) if x > large_threshold]
    fit_large = None
    if len(large) >= 2:
        fit_large = linear_fit([x for x, _ in large], [y for _, y in large])
    return BenchReport(points=tuple(points), fit_all=fit_all,
                       fit_large=fit_large, large_threshold=large_threshold)


def render_benchmark(report: BenchReport) -> str:
    lines = []
    for point in report.points:
        lines.append(f"domains={point.domains} resources={point.resources} "
                     f"time_ms={point.time_ms:.3f}")
    lines.append(f"fit_slope_ms={report.fit_all.slope:.6f}")
    lines.append(f"fit_intercept_ms={report.fit_all.intercept:.6f}")
    lines.append(f"fit_r2={report.fit_all.r2:.6f}")
    if report.fit_large is not None:
        lines.append(f"fit_r2_above_{report.large_threshold}="
                     f"{report.fit_large.r2:.6f}")
    return "\n".join(lines) + "\n"
