"""Empirical side: enumerate rational points of bounded height, evaluate
the insoluble-place count pointwise, and measure tail statistics against
the probabilistic model.

Points stream in lexicographic blocks; each block is reduced to additive
tallies so memory stays flat.  Blocks can run on a thread pool (the hot
work is numpy / nogil kernels); tallies merge by commutative addition, so
scheduling cannot change any result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .arith import PrimeWindow, primes_up_to, truncation_window
from .errors import BudgetError, ConfigError
from .fibration import (
    KIND_CONIC,
    AlwaysNonsplit,
    FibrationModel,
    ProjectivePoint,
    QuadraticResidue,
    ResidueClasses,
    hilbert_symbol,
    model_from_dict,
)
from . import kernels

try:
    from gmpy2 import jacobi as _jacobi
except ImportError:  # pragma: no cover - gmpy2 is a soft dependency
    _jacobi = None

__all__ = [
    "point_blocks",
    "enumerate_points",
    "count_points",
    "WindowSpec",
    "ExperimentConfig",
    "TailRow",
    "TailReport",
    "tail_count",
    "TruncationGap",
    "truncation_gap",
    "SetAlgebraAudit",
    "set_inclusion_audit",
    "ExponentReport",
    "exponent_regression",
]

_ENUM_BUDGET = 100_000_000
_VALUE_BUDGET = 50_000_000
_CHUNK = 1 << 18


# ---------------------------------------------------------------------------
# point enumeration


def _decode_block(n: int, B: int, lo: int, hi: int) -> np.ndarray:
    """Canonical points among lex indices [lo, hi) of [-B, B]^(n+1)."""
    side = 2 * B + 1
    idx = np.arange(lo, hi, dtype=np.int64)
    coords = np.empty((hi - lo, n + 1), dtype=np.int64)
    rem = idx
    for j in range(n, -1, -1):
        rem, dig = np.divmod(rem, side)
        coords[:, j] = dig - B
    g = np.gcd.reduce(np.abs(coords), axis=1)
    last = np.zeros(hi - lo, dtype=np.int64)
    for j in range(n, -1, -1):
        pick = (last == 0) & (coords[:, j] != 0)
        last[pick] = coords[pick, j]
    return coords[(g == 1) & (last > 0)]


def point_blocks(
    n: int, B: int, chunk: int = _CHUNK, budget: int = _ENUM_BUDGET
) -> Iterator[np.ndarray]:
    """Yield canonical representatives of P^n(Q) with H <= B, in lex order,
    as (npts, n+1) int64 blocks."""
    if n < 1 or B < 1:
        raise ConfigError("need n >= 1 and B >= 1")
    total = (2 * B + 1) ** (n + 1)
    if total > budget:
        raise BudgetError("enumeration over %d tuples" % total, required=total, budget=budget)
    for lo in range(0, total, chunk):
        block = _decode_block(n, B, lo, min(lo + chunk, total))
        if block.shape[0]:
            yield block


def enumerate_points(n: int, B: int, budget: int = _ENUM_BUDGET) -> Iterator[ProjectivePoint]:
    """Each point exactly once, canonical coords, deterministic lex order."""
    for block in point_blocks(n, B, budget=budget):
        for row in block:
            yield ProjectivePoint(tuple(int(v) for v in row))


def count_points(n: int, B: int, threads: int = 1, budget: int = 3 * 10**8) -> int:
    """#P^n(Q) with H <= B via closed-form primitive counting kernels."""
    if n < 1 or B < 1:
        raise ConfigError("need n >= 1 and B >= 1")
    if n == 1:
        if B * B > budget:
            raise BudgetError("coprime-pair count too large", required=B * B, budget=budget)
        return 2 * int(kernels.coprime_pair_count(B, threads)) + 2
    total = (2 * B + 1) ** (n + 1)
    if total > budget:
        raise BudgetError("primitive box count too large", required=total, budget=budget)
    return int(kernels.primitive_box_count(n + 1, B, threads)) // 2


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class WindowSpec:
    """Prime-window strategy: full (default), fixed(t0, t1), or the
    doubly-logarithmic schedule paper(M) documented to be empty at desk
    sizes; it exists so that emptiness can be demonstrated, not used."""

    kind: str = "full"
    m: float | None = None
    t0: float | None = None
    t1: float | None = None

    def __post_init__(self):
        if self.kind not in ("full", "paper", "fixed"):
            raise ConfigError("unknown window strategy %r" % self.kind)
        if self.kind == "paper" and (self.m is None or self.m <= 0):
            raise ConfigError("paper window needs a positive exponent M")
        if self.kind == "fixed":
            if self.t0 is None or self.t1 is None or self.t0 > self.t1:
                raise ConfigError("fixed window needs t0 <= t1")

    def resolve(self, B: int, bad_bound: int) -> PrimeWindow:
        if self.kind == "full":
            return PrimeWindow(bad_bound, None)
        if self.kind == "paper":
            w = truncation_window(B, self.m)
            return PrimeWindow(max(w.lo, bad_bound), w.hi)
        return PrimeWindow(max(int(self.t0), bad_bound), int(self.t1))

    def to_dict(self) -> dict:
        d = {"strategy": self.kind}
        if self.kind == "paper":
            d["M"] = self.m
        if self.kind == "fixed":
            d["t0"], d["t1"] = self.t0, self.t1
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WindowSpec":
        kind = d.get("strategy", "full")
        return cls(
            kind=kind,
            m=float(d["M"]) if kind == "paper" else None,
            t0=float(d["t0"]) if kind == "fixed" else None,
            t1=float(d["t1"]) if kind == "fixed" else None,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    model: FibrationModel
    b_grid: tuple
    epsilons: tuple
    window: WindowSpec = WindowSpec()
    loglog_floor: float = 1e-6
    seed: int = 0
    threads: int = 1
    enum_budget: int = _ENUM_BUDGET
    value_budget: int = _VALUE_BUDGET

    def __post_init__(self):
        if not self.b_grid or list(self.b_grid) != sorted(set(self.b_grid)):
            raise ConfigError("B grid must be strictly increasing")
        if any(b <= math.exp(math.e) for b in self.b_grid):
            raise ConfigError("B values must exceed e^e")
        if not self.epsilons or any(e <= 0 for e in self.epsilons):
            raise ConfigError("epsilon values must be positive")
        if self.loglog_floor <= 0:
            raise ConfigError("loglog floor must be positive")

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "B": list(self.b_grid),
            "epsilons": list(self.epsilons),
            "window": self.window.to_dict(),
            "loglog_floor": self.loglog_floor,
            "seed": self.seed,
            "threads": self.threads,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            model = model_from_dict(d["model"])
            b_grid = tuple(int(b) for b in d["B"])
            eps = tuple(float(e) for e in d["epsilons"])
        except KeyError as exc:
            raise ConfigError("experiment config needs 'model', 'B', 'epsilons'") from exc
        return cls(
            model=model,
            b_grid=b_grid,
            epsilons=eps,
            window=WindowSpec.from_dict(d.get("window", {})),
            loglog_floor=float(d.get("loglog_floor", 1e-6)),
            seed=int(d.get("seed", 0)),
            threads=int(d.get("threads", 1)),
            enum_budget=int(d.get("enum_budget", _ENUM_BUDGET)),
            value_budget=int(d.get("value_budget", _VALUE_BUDGET)),
        )


# ---------------------------------------------------------------------------
# pointwise omega over blocks


def _value_bound(form, B: int) -> int:
    return sum(abs(c) * B ** sum(e) for c, e in form.terms)


def _fires_tables(model: FibrationModel, maxp: int) -> np.ndarray:
    """uint8 table[i][p] = rule i fires at p, for primes bad_bound < p <= maxp."""
    ps = primes_up_to(maxp) if maxp >= 2 else np.empty(0, dtype=np.int64)
    ps = ps[ps > model.bad_bound]
    tab = np.zeros((len(model.components), maxp + 1), dtype=np.uint8)
    for i, comp in enumerate(model.components):
        rule = comp.rule
        if isinstance(rule, AlwaysNonsplit):
            tab[i, ps] = 1
        elif isinstance(rule, ResidueClasses):
            sel = np.isin(ps % rule.modulus, np.array(rule.classes, dtype=np.int64))
            tab[i, ps[sel]] = 1
        elif isinstance(rule, QuadraticResidue) and _jacobi is not None:
            a = rule.a
            hit = [int(p) for p in ps.tolist() if _jacobi(a, int(p)) == -1]
            tab[i, hit] = 1
        else:
            hit = [int(p) for p in ps.tolist() if rule.fires(int(p))]
            tab[i, hit] = 1
    return tab


class _OmegaMachine:
    """Per-model precomputation (spf sieve, firing tables) for block scans."""

    def __init__(self, model: FibrationModel, B: int, value_budget: int = _VALUE_BUDGET):
        self.model = model
        self.B = B
        forms = (
            [model.conic_a, model.conic_b]
            if model.kind == KIND_CONIC
            else [c.form for c in model.components]
        )
        self.forms = forms
        bound = max(_value_bound(f, B) for f in forms)
        if bound > value_budget:
            raise BudgetError(
                "form values reach %d, beyond the factor-sieve budget" % bound,
                required=bound,
                budget=value_budget,
            )
        self.spf = kernels.spf_sieve(bound + 1)
        self.maxval = bound
        if model.kind != KIND_CONIC:
            self.fires = _fires_tables(model, bound)

    def degenerate_mask(self, coords: np.ndarray) -> np.ndarray:
        """True where some relevant form vanishes; such points are skipped."""
        bad = np.zeros(coords.shape[0], dtype=bool)
        for f in self.model.degenerate_forms():
            bad |= f.evaluate_block(coords) == 0
        return bad

    def omega(self, coords: np.ndarray, window: PrimeWindow) -> np.ndarray:
        """Insoluble-place counts for non-degenerate canonical rows."""
        npts = coords.shape[0]
        lo = max(window.lo, self.model.bad_bound)
        hi = -1 if window.hi is None else window.hi
        if window.hi is not None and window.hi <= lo:
            return np.zeros(npts, dtype=np.int64)
        if self.model.kind == KIND_CONIC:
            return self._omega_conic(coords, lo, window.hi)
        vals = np.empty((len(self.forms), npts), dtype=np.int64)
        for i, f in enumerate(self.forms):
            vals[i] = np.abs(f.evaluate_block(coords))
        return kernels.marked_omega(vals, self.spf, self.fires, lo, hi)

    def _omega_conic(self, coords: np.ndarray, lo: int, hi) -> np.ndarray:
        a_vals = self.model.conic_a.evaluate_block(coords)
        b_vals = self.model.conic_b.evaluate_block(coords)
        spf = self.spf
        out = np.zeros(coords.shape[0], dtype=np.int64)
        for i in range(coords.shape[0]):
            a, b = int(a_vals[i]), int(b_vals[i])
            seen = set()
            for v in (abs(a), abs(b)):
                while v > 1:
                    p = int(spf[v])
                    seen.add(p)
                    while v % p == 0:
                        v //= p
            cnt = 0
            for p in seen:
                if p > lo and (hi is None or p <= hi) and hilbert_symbol(a, b, p) == -1:
                    cnt += 1
            out[i] = cnt
        return out


def _clamped_loglog(H: np.ndarray, floor: float) -> tuple:
    """(loglog H with the documented floor clamp, #points clamped)."""
    logH = np.log(H.astype(np.float64))
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = np.where(logH > 0.0, np.log(np.where(logH > 0.0, logH, 1.0)), -np.inf)
    clamped = int((ll <= floor).sum())
    return np.maximum(ll, floor), clamped


# ---------------------------------------------------------------------------
# tail counting


@dataclass(frozen=True)
class TailRow:
    B: int
    epsilon: float
    mode: str  # "global" or "pointwise"
    total: int
    tail: int
    fraction: float
    log_fraction_norm: float  # log(fraction) / (Delta loglog B); -inf when 0
    threshold: float  # global: eps*Delta*loglogB; pointwise: eps*loglogB cap
    low_height: int  # points with H <= sqrt(B) (audit column)
    clamped: int  # pointwise loglog-floor applications for this B


@dataclass(frozen=True)
class TailReport:
    config: dict
    rows: tuple
    per_b: dict  # B -> {"total", "degenerate", "low_height", "clamped", "window"}

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "rows": [vars(r) for r in self.rows],
            "per_B": {str(b): v for b, v in sorted(self.per_b.items())},
        }


def _scan_tallies(model, machine, B, window, eps, floor, enum_budget, threads):
    """Additive tallies over all canonical points of height <= B."""
    n = model.n
    side = 2 * B + 1
    total_idx = side ** (n + 1)
    if total_idx > enum_budget:
        raise BudgetError("enumeration over %d tuples" % total_idx, required=total_idx, budget=enum_budget)
    sqrtB = math.sqrt(B)

    def work(bounds):
        lo_idx, hi_idx = bounds
        coords = _decode_block(n, B, lo_idx, hi_idx)
        if coords.shape[0] == 0:
            return None
        bad = machine.degenerate_mask(coords)
        degenerate = int(bad.sum())
        coords = coords[~bad]
        t = {
            "total": coords.shape[0],
            "degenerate": degenerate,
            "tail_g": np.zeros(len(eps), dtype=np.int64),
            "tail_pw": np.zeros(len(eps), dtype=np.int64),
        }
        if coords.shape[0] == 0:
            t["low_height"] = 0
            t["clamped"] = 0
            return t
        om = machine.omega(coords, window)
        H = np.abs(coords).max(axis=1)
        t["low_height"] = int((H <= sqrtB).sum())
        llb = math.log(math.log(B))
        delta = float(model.delta_invariant)
        llh, nclamp = _clamped_loglog(H, floor)
        t["clamped"] = nclamp
        for j, e in enumerate(eps):
            t["tail_g"][j] = int((om < e * delta * llb).sum())
            t["tail_pw"][j] = int((om < e * llh).sum())
        return t

    bounds = [(lo, min(lo + _CHUNK, total_idx)) for lo in range(0, total_idx, _CHUNK)]
    agg = {
        "total": 0,
        "degenerate": 0,
        "low_height": 0,
        "clamped": 0,
        "tail_g": np.zeros(len(eps), dtype=np.int64),
        "tail_pw": np.zeros(len(eps), dtype=np.int64),
    }

    def fold(t):
        if t is None:
            return
        for k in ("total", "degenerate"):
            agg[k] += t[k]
        if "low_height" in t:
            agg["low_height"] += t["low_height"]
            agg["clamped"] += t["clamped"]
        agg["tail_g"] += t["tail_g"]
        agg["tail_pw"] += t["tail_pw"]

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for t in pool.map(work, bounds):
                fold(t)
    else:
        for bd in bounds:
            fold(work(bd))
    return agg


def tail_count(config: ExperimentConfig) -> TailReport:
    """Tail statistics in both threshold conventions at every (B, eps).

    global mode: count omega(x) < eps * Delta * loglog B.
    pointwise mode: count omega(x) < eps * loglog H(x), with the documented
    floor clamp on points of tiny height.  Strict inequality throughout.
    """
    model = config.model
    delta = float(model.delta_invariant)
    rows = []
    per_b = {}
    for B in config.b_grid:
        window = config.window.resolve(B, model.bad_bound)
        machine = _OmegaMachine(model, B, config.value_budget)
        agg = _scan_tallies(
            model, machine, B, window, config.epsilons,
            config.loglog_floor, config.enum_budget, config.threads,
        )
        llb = math.log(math.log(B))
        per_b[B] = {
            "total": agg["total"],
            "degenerate": agg["degenerate"],
            "low_height": agg["low_height"],
            "clamped": agg["clamped"],
            "window": [window.lo, window.hi],
        }
        for j, e in enumerate(config.epsilons):
            for mode, tail in (("global", int(agg["tail_g"][j])), ("pointwise", int(agg["tail_pw"][j]))):
                frac = tail / agg["total"] if agg["total"] else 0.0
                norm = math.log(frac) / (delta * llb) if frac > 0.0 else -math.inf
                rows.append(
                    TailRow(
                        B=B,
                        epsilon=e,
                        mode=mode,
                        total=agg["total"],
                        tail=tail,
                        fraction=frac,
                        log_fraction_norm=norm,
                        threshold=e * delta * llb if mode == "global" else e * llb,
                        low_height=agg["low_height"],
                        clamped=agg["clamped"] if mode == "pointwise" else 0,
                    )
                )
    return TailReport(config=config.to_dict(), rows=tuple(rows), per_b=per_b)


# ---------------------------------------------------------------------------
# truncation error


@dataclass(frozen=True)
class TruncationGap:
    total: int
    count: int  # points with omega_full - omega_window >= gap threshold
    max_gap: int
    threshold: float


def truncation_gap(
    model: FibrationModel,
    B: int,
    window: PrimeWindow,
    delta_gap: float,
    value_budget: int = _VALUE_BUDGET,
    enum_budget: int = _ENUM_BUDGET,
) -> TruncationGap:
    """Distribution of the truncation error omega - omega_window at height B."""
    if delta_gap <= 0:
        raise ConfigError("gap threshold must be positive")
    if isinstance(window, WindowSpec):
        window = window.resolve(B, model.bad_bound)
    machine = _OmegaMachine(model, B, value_budget)
    full = PrimeWindow(model.bad_bound, None)
    thr = delta_gap * math.log(math.log(B))
    total = count = max_gap = 0
    for coords in point_blocks(model.n, B, budget=enum_budget):
        coords = coords[~machine.degenerate_mask(coords)]
        if coords.shape[0] == 0:
            continue
        gap = machine.omega(coords, full) - machine.omega(coords, window)
        total += coords.shape[0]
        count += int((gap >= thr).sum())
        if coords.shape[0]:
            max_gap = max(max_gap, int(gap.max()))
    return TruncationGap(total=total, count=count, max_gap=max_gap, threshold=thr)


# ---------------------------------------------------------------------------
# set algebra


@dataclass(frozen=True)
class SetAlgebraAudit:
    """Literal set inclusions behind the truncation argument.

    small_tail_shrinks: {omega < t(eps)} contained in {omega_w < t(eps)}.
    amplification: {omega_w < t(eps - gap)} contained in
        {omega < t(eps)} union {omega - omega_w >= gap * Delta * loglog B},
    with t(e) = e * Delta * loglog B.  The gap threshold carries the same
    Delta factor so the inclusion is forced by arithmetic alone.
    """

    B: int
    epsilon: float
    gap: float
    small_tail_shrinks: bool
    amplification: bool
    sizes: dict


def set_inclusion_audit(
    model: FibrationModel,
    B: int,
    epsilon: float,
    gap: float,
    window: PrimeWindow,
    value_budget: int = _VALUE_BUDGET,
    enum_budget: int = _ENUM_BUDGET,
) -> SetAlgebraAudit:
    if not (0 < gap < epsilon):
        raise ConfigError("need 0 < gap < epsilon")
    if isinstance(window, WindowSpec):
        window = window.resolve(B, model.bad_bound)
    machine = _OmegaMachine(model, B, value_budget)
    full = PrimeWindow(model.bad_bound, None)
    llb = math.log(math.log(B))
    delta = float(model.delta_invariant)
    t_eps = epsilon * delta * llb
    t_shifted = (epsilon - gap) * delta * llb
    t_gap = gap * delta * llb
    a_eps, a_flat, a_flat_shifted, excess = set(), set(), set(), set()
    for coords in point_blocks(model.n, B, budget=enum_budget):
        coords = coords[~machine.degenerate_mask(coords)]
        if coords.shape[0] == 0:
            continue
        om = machine.omega(coords, full)
        om_w = machine.omega(coords, window)
        keys = [tuple(int(v) for v in row) for row in coords]
        for key, o, ow in zip(keys, om.tolist(), om_w.tolist()):
            if o < t_eps:
                a_eps.add(key)
            if ow < t_eps:
                a_flat.add(key)
            if ow < t_shifted:
                a_flat_shifted.add(key)
            if o - ow >= t_gap:
                excess.add(key)
    return SetAlgebraAudit(
        B=B,
        epsilon=epsilon,
        gap=gap,
        small_tail_shrinks=a_eps <= a_flat,
        amplification=a_flat_shifted <= (a_eps | excess),
        sizes={
            "small_tail": len(a_eps),
            "windowed_tail": len(a_flat),
            "windowed_tail_shifted": len(a_flat_shifted),
            "excess": len(excess),
        },
    )


# ---------------------------------------------------------------------------
# exponents


@dataclass(frozen=True)
class ExponentReport:
    """Measured tail exponents next to both analytic candidates.

    The two closed forms disagree in sign; both are emitted, never
    adjudicated.  model_side carries the exact-pmf normalized log-tails of
    the matching synthetic model, with the Gaertner-Ellis bracket."""

    slopes: dict       # (mode, eps) label -> slope or None
    candidates: dict   # eps label -> {"direct": ..., "proof_assembled": ...}
    model_side: dict   # eps label -> {"values": [(B, v)], "lower": ..., "upper": ...}
    notes: tuple


def exponent_regression(
    report: TailReport,
    model_side_sizes: Sequence[int] | None = None,
) -> ExponentReport:
    from .model import BernoulliModel, Interval, ldp_bracket

    model = model_from_dict(report.config["model"])
    delta = model.delta_invariant
    dlt = float(delta)
    slopes = {}
    notes = []
    by_key = {}
    for row in report.rows:
        by_key.setdefault((row.mode, row.epsilon), []).append(row)
    for (mode, e), rows in sorted(by_key.items()):
        rows = sorted(rows, key=lambda r: r.B)
        xs, ys = [], []
        for r in rows:
            if r.tail > 0:
                xs.append(dlt * math.log(math.log(r.B)))
                ys.append(math.log(r.tail / r.total))
        label = "%s eps=%r" % (mode, e)
        if not xs:
            slopes[label] = None
            notes.append("no events for %s" % label)
        elif len(xs) < 3:
            slopes[label] = None
            notes.append("fewer than 3 sizes with events for %s" % label)
        else:
            slopes[label] = float(np.polyfit(np.array(xs), np.array(ys), 1)[0])
    candidates = {}
    model_side = {}
    sizes = list(model_side_sizes) if model_side_sizes is not None else list(report.config["B"])
    for e in sorted(set(r.epsilon for r in report.rows)):
        label = "eps=%r" % e
        candidates[label] = {
            "direct": e * (math.log(e) - 1.0 - math.log(dlt)),
            "proof_assembled": e * (1.0 + math.log(dlt) - math.log(e)),
        }
        pairs = [(b, BernoulliModel.synthetic_delta(delta, b)) for b in sizes]
        br = ldp_bracket(pairs, Interval(0.0, e), delta)
        model_side[label] = {
            "values": [(b, v) for b, v in br.values],
            "lower": br.lower,
            "upper": br.upper,
        }
    return ExponentReport(
        slopes=slopes, candidates=candidates, model_side=model_side, notes=tuple(notes)
    )
