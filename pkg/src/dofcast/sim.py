"""Monte-Carlo rates over a power grid and least-squares DoF slopes.

Channel and data draws depend only on ``(seed, segment, trial)``, never on
``P``, so every grid point sees the same realizations (common random
numbers) and trials can be evaluated in any order or in parallel.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .analysis import (SystemConfig, channel_aggregation_sum_dof, lower_bound_sum_dof,
                       upper_bound_sum_dof)
from .channel import (DEFAULT_SEED, MulticastPipe, complex_normal, csit_at, gen_block,
                      gen_noise, stream)
from .errors import DomainError
from .schemes import mat as mat_mod
from .schemes.overload import (COND_LIMIT, compute_side_info, condition_numbers,
                               overload_encode, overload_rates, side_info_from_h,
                               stacked_decode)
from .schemes.plans import Plan
from .schemes.quantizer import dequantize, levels_for_budget, quantize
from .schemes.zf import common_rate, single_user_rate, zf_precoders, zf_rates, zf_transmit

MAX_RESAMPLE = 50
DEFAULT_GRID_DB = (30, 40, 50, 60)
DEFAULT_TRIALS = 200


def db_to_power(db) -> float:
    return 10.0 ** (float(db) / 10.0)


@dataclass
class TrialResult:
    P: float
    per_user_rate: np.ndarray
    stderr: np.ndarray
    sum_stderr: float
    n_trials: int
    seed: int
    outage: dict = field(default_factory=dict)
    quant_var: float | None = None

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.per_user_rate))


@dataclass
class SlopeEstimate:
    sum_slope: float
    per_user_slope: np.ndarray
    intercepts: np.ndarray
    sum_intercept: float
    residuals: np.ndarray  # sum-rate residual per grid point, bits
    P_grid: tuple
    points: list

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))


@dataclass
class Verdict:
    scheme: str
    predicted: Fraction
    measured: float
    tol: float
    passed: bool
    residual_ok: bool
    lower: Fraction
    upper: Fraction
    aggregation: Fraction
    lines: list

    @property
    def status(self) -> str:
        if not self.passed:
            return "fail"
        return "pass" if self.residual_ok else "pass (non-asymptotic residual)"


# -- draws ------------------------------------------------------------------

def _cn(seed, label, seg, trial, attempt, shape):
    return complex_normal(stream(seed, label, seg, trial, attempt), shape)


class _MatCache:
    def __init__(self):
        self.structures = {}

    def structure(self, K, N, L):
        key = (K, N, L)
        if key not in self.structures:
            self.structures[key] = mat_mod.build_structure(K, N, L)
        return self.structures[key]


_CACHE = _MatCache()


def experiment_betas(cfg: SystemConfig, seed: int) -> dict:
    """Combining constants shared by every order-j segment of one experiment."""
    return mat_mod.draw_betas(seed, cfg.K, cfg.N, cfg.K)


def _draw_segment(plan: Plan, i: int, trials, seed: int, betas: dict) -> dict:
    cfg = plan.cfg
    seg = plan.segments[i]
    K, N, M = cfg.K, cfg.N, cfg.M
    counts = plan.use_counts()
    out = {"resampled": 0}
    if seg.kind == "overload":
        n_o = counts[i]
        hs, data = [], []
        for t in trials:
            for attempt in range(MAX_RESAMPLE):
                h = _cn(seed, "channel", i, t, attempt, (K, N, M))
                if condition_numbers(h) <= COND_LIMIT:
                    break
                out["resampled"] += 1
            hs.append(h)
            data.append(_cn(seed, "data", i, t, 0, (n_o, K, K * N)))
        out["h"] = np.stack(hs)
        out["data"] = np.stack(data)
    elif seg.kind == "mat":
        st = _CACHE.structure(K, N, seg.L)
        h = np.stack([_cn(seed, "channel", i, t, 0, (st.n_uses, K, N, M)) for t in trials])
        out["structure"] = st
        out["forms"] = mat_mod.build_forms(st, h, betas)
        out["mc"] = mat_mod.normalized_multicast(out["forms"])
        out["data"] = np.stack([_cn(seed, "data", i, t, 0, (st.n_data,)) for t in trials])
    elif seg.kind == "single":
        out["h"] = np.stack([_cn(seed, "channel", i, t, 0, (N, M)) for t in trials])
    else:
        out["h"] = np.stack([_cn(seed, "channel", i, t, 0, (K, N, M)) for t in trials])
    return out


def _draw_all(plan: Plan, trials, seed: int, betas: dict) -> list:
    return [_draw_segment(plan, i, trials, seed, betas) for i in range(len(plan.segments))]


# -- per-segment rates -------------------------------------------------------

def side_info_power(K: int, P: float) -> float:
    """Per-scalar power of a cross term ``H_i u_j``: ``K N`` symbols at ``P/(K^2 N)``."""
    return P / K


def _quantize_rows(values: np.ndarray, bits: np.ndarray, P: float):
    """Quantize each trial's values within its bit budget; returns (qv, clipped).

    ``P`` is the per-scalar power of ``values``; it sets the clip range.
    """
    n = values.shape[0]
    flat = values.reshape(n, -1)
    n_digits = 2 * flat.shape[1]
    levels = np.array([levels_for_budget(float(b), n_digits, amortized=True) for b in bits])
    qv = np.empty(n)
    clipped = np.zeros(n, dtype=np.int64)
    for lv in np.unique(levels):
        rows = levels == lv
        q = quantize(flat[rows], 0, P, levels=int(lv), encode=False)
        err = np.abs(q.reconstruction - flat[rows]) ** 2
        qv[rows] = err.mean(axis=1)
        clip_rows = np.abs(flat[rows].real) > q.clip_range
        clip_rows |= np.abs(flat[rows].imag) > q.clip_range
        clipped[rows] = clip_rows.sum(axis=1)
    return qv, clipped


def _segment_rates(plan: Plan, i: int, draws: list, P: float):
    """Per-use per-user rates of segment ``i``, shape (n, K), plus clip counts."""
    cfg = plan.cfg
    seg = plan.segments[i]
    K, N = cfg.K, cfg.N
    d = draws[i]
    lp = math.log2(P)
    counts = plan.use_counts()
    if seg.kind == "zf":
        return zf_rates(d["h"], P), None, None
    if seg.kind == "single":
        r = np.zeros((d["h"].shape[0], K))
        r[:, seg.target] = single_user_rate(d["h"], P)
        return r, None, None
    if seg.kind == "common":
        return np.zeros((d["h"].shape[0], K)), None, None
    if seg.kind == "overload":
        h = d["h"]
        n = h.shape[0]
        bits = np.full(n, float(seg.pipe) * plan.T_c * lp)
        for j, other in enumerate(plan.segments):
            if other.kind == "common":
                bits = bits + counts[j] * common_rate(draws[j]["h"], P)
        side = side_info_from_h(h[:, None], d["data"], P).values
        qv, clipped = _quantize_rows(side, bits, side_info_power(K, P))
        qv_full = np.broadcast_to(qv[:, None, None, None], (n, K, K, N))
        return overload_rates(h, P / (K * K * N), qv_full), qv, clipped
    # order-j transmission
    st = d["structure"]
    forms = d["forms"]
    n = d["data"].shape[0]
    n_q = d["mc"].shape[-2]
    qv = clipped = None
    if n_q:
        bits = np.full(n, float(seg.pipe / seg.weight) * st.n_uses * lp)
        values = math.sqrt(P) * np.einsum("tqd,td->tq", d["mc"], d["data"])
        qv, clipped = _quantize_rows(values, bits, P)
    return mat_mod.mat_rates(forms, P, qv) / st.n_uses, qv, clipped


def _evaluate(plan: Plan, draws: list, P: float):
    cfg = plan.cfg
    n = None
    total = None
    qvs, clipped = [], 0
    for i, seg in enumerate(plan.segments):
        r, qv, cl = _segment_rates(plan, i, draws, P)
        n = r.shape[0]
        total = float(seg.weight) * r if total is None else total + float(seg.weight) * r
        if qv is not None:
            qvs.append(qv)
        if cl is not None:
            clipped += int(cl.sum())
    if total is None:
        n = 1
        total = np.zeros((1, cfg.K))
    total = total.copy()
    total[:, plan.stream_to] += float(plan.pipe_left) * math.log2(P)
    return total, qvs, clipped


def _chunks(n_trials: int, workers: int):
    size = max(1, math.ceil(n_trials / max(1, workers)))
    return [np.arange(s, min(n_trials, s + size)) for s in range(0, n_trials, size)]


class Experiment:
    """Draws for ``n_trials`` trials, reusable across every power level."""

    def __init__(self, plan: Plan, n_trials: int, seed: int = DEFAULT_SEED,
                 workers: int | None = None):
        if int(n_trials) != n_trials or n_trials < 1:
            raise DomainError("n_trials must be a positive integer")
        if plan.cfg.M < plan.cfg.K * plan.cfg.N:
            raise DomainError("simulated schemes need M >= K*N")
        self.plan = plan
        self.n_trials = int(n_trials)
        self.seed = int(seed)
        self.workers = workers or 1
        self.betas = experiment_betas(plan.cfg, self.seed)
        chunks = _chunks(self.n_trials, self.workers)
        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as ex:
                parts = list(ex.map(lambda c: _draw_all(plan, c, self.seed, self.betas), chunks))
        else:
            parts = [_draw_all(plan, c, self.seed, self.betas) for c in chunks]
        self.parts = parts
        self.resampled = sum(seg["resampled"] for part in parts for seg in part)

    def run(self, P: float) -> TrialResult:
        if P <= 1:
            raise DomainError("P must exceed 1")
        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as ex:
                results = list(ex.map(lambda part: _evaluate(self.plan, part, P), self.parts))
        else:
            results = [_evaluate(self.plan, part, P) for part in self.parts]
        rates = np.concatenate([r[0] for r in results], axis=0)
        qvs = [q for r in results for q in r[1]]
        clipped = sum(r[2] for r in results)
        if not np.all(np.isfinite(rates)) or np.any(rates < -1e-9):
            raise ArithmeticError("non-finite or negative rate")
        n = rates.shape[0]
        se = rates.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(rates.shape[1])
        sum_se = float(rates.sum(axis=1).std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        qv = float(np.mean(np.concatenate(qvs))) if qvs else None
        return TrialResult(float(P), rates.mean(axis=0), se, sum_se, n, self.seed,
                           {"clipped": int(clipped), "resampled": int(self.resampled)}, qv)


def run_trials(cfg: SystemConfig, plan: Plan, P: float, n_trials: int,
               seed: int = DEFAULT_SEED, workers: int | None = None) -> TrialResult:
    if plan.cfg != cfg:
        raise DomainError("plan was built for a different configuration")
    return Experiment(plan, n_trials, seed, workers).run(P)


def fit_slope(P_grid, rates) -> tuple:
    """OLS of ``rates`` (grid x users) against log2 P: (slopes, intercepts, residuals)."""
    x = np.log2(np.asarray(P_grid, dtype=float))
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, np.asarray(rates), rcond=None)
    resid = np.asarray(rates) - X @ coef
    return coef[0], coef[1], resid


def check_grid(P_grid) -> tuple:
    grid = tuple(float(p) for p in P_grid)
    if len(grid) < 3:
        raise DomainError("slope estimation needs at least 3 grid points")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("P grid must be strictly increasing")
    if grid[0] <= 1:
        raise DomainError("grid powers must exceed 1")
    return grid


def estimate_dof(cfg: SystemConfig, plan: Plan, P_grid, n_trials: int = DEFAULT_TRIALS,
                 seed: int = DEFAULT_SEED, workers: int | None = None) -> SlopeEstimate:
    grid = check_grid(P_grid)
    if plan.cfg != cfg:
        raise DomainError("plan was built for a different configuration")
    exp = Experiment(plan, n_trials, seed, workers)
    points = [exp.run(P) for P in grid]
    per_user = np.stack([p.per_user_rate for p in points])
    slopes, icpt, _ = fit_slope(grid, per_user)
    s_slope, s_icpt, s_res = fit_slope(grid, per_user.sum(axis=1))
    return SlopeEstimate(float(s_slope), slopes, icpt, float(s_icpt), s_res, grid, points)


def compare_to_analysis(cfg: SystemConfig, plan: Plan, estimate: SlopeEstimate,
                        tol: float = 0.15, residual_gate: float = 0.5) -> Verdict:
    predicted = plan.predicted_sum
    lower = lower_bound_sum_dof(cfg).value
    upper = upper_bound_sum_dof(cfg).value
    agg = channel_aggregation_sum_dof(cfg)
    measured = estimate.sum_slope
    within = abs(measured - float(predicted)) <= tol
    sound = measured <= float(upper) + tol
    lines = [
        f"scheme {plan.name}: measured sum slope {measured:.4f}, predicted {predicted} "
        f"({float(predicted):.4f}), tolerance {tol}",
        f"upper bound {upper} ({float(upper):.4f}); measured <= upper + tol: {sound}",
        f"lower bound {lower} ({float(lower):.4f})",
        f"aggregation baseline {agg} ({float(agg):.4f})",
        f"max |residual| {estimate.residual:.3f} bits (gate {residual_gate})",
    ]
    if predicted < lower:
        lines.append(f"strictly suboptimal: {predicted} < {lower}")
    residual_ok = estimate.residual < residual_gate
    if not residual_ok:
        lines.append("residual above gate: rates not yet affine in log2 P on this grid")
    return Verdict(plan.name, predicted, measured, tol, within and sound, residual_ok,
                   lower, upper, agg, lines)


# -- one explicit sample path ------------------------------------------------

def verify_sample_path(plan: Plan, P: float, seed: int = DEFAULT_SEED) -> dict:
    """Run one block of each segment through encode, CSI, pipe and decode.

    Checks causality on the real CSI views and that the receivers recover
    their symbols from the delivered bits. Returns per-segment reports.
    """
    cfg = plan.cfg
    K, N = cfg.K, cfg.N
    T_c = plan.T_c
    plan.check_causality(T_c)
    counts = plan.use_counts(T_c)
    layout = plan.layout(T_c)
    reports = {}
    block = gen_block(seed, 0, cfg)
    for i, seg in enumerate(plan.segments):
        first_use = layout.index(i)
        if seg.kind == "overload":
            n_o = counts[i]
            rng = stream(seed, "data", 99, i)
            symbols = complex_normal(rng, (n_o, K, K * N))
            # the encoder runs blind: nothing of block 0 is visible yet
            assert not csit_at(first_use, cfg.gamma, T_c).sees(0)
            ys = []
            for u in range(n_o):
                x = overload_encode(symbols[u], cfg.M, P)
                z = gen_noise(seed, first_use + u, cfg).z
                ys.append(np.stack([block.h[k] @ x + z[k] for k in range(K)]))
            # side info is rebuilt at the start of the next block
            view = csit_at(T_c, cfg.gamma, T_c)
            side = [compute_side_info(view, block, symbols[u], P) for u in range(n_o)]
            values = np.stack([s.values for s in side])
            pipe_bits = float(seg.pipe) * T_c * math.log2(P)
            bc_bits = sum(counts[j] * float(common_rate(block.h, P))
                          for j, s in enumerate(plan.segments) if s.kind == "common")
            levels = levels_for_budget(pipe_bits + bc_bits, 2 * values.size)
            q = quantize(values, 0, side_info_power(K, P), levels=levels)
            pipe = MulticastPipe(float(seg.pipe) * math.log2(P), K)
            n_pipe = min(len(q.bits), int(math.floor(pipe_bits + 1e-9)))
            delivered = pipe.send(q.bits[:n_pipe], T_c).at(0) if n_pipe else ""
            bits = delivered + q.bits[n_pipe:]
            recon = dequantize(bits, values.shape, levels, q.clip_range)
            err = []
            for u in range(n_o):
                rec_side = type(side[u])(side[u].pairs, recon[u])
                for k in range(K):
                    est, _ = stacked_decode(ys[u][k], k, rec_side, block.h, P)
                    err.append(np.mean(np.abs(est - symbols[u, k]) ** 2))
            reports[i] = {"kind": "overload", "bits": len(q.bits),
                          "budget": pipe_bits + bc_bits, "mse": float(np.mean(err))}
        elif seg.kind == "zf":
            t = first_use
            view = csit_at(t, cfg.gamma, T_c)
            rng = stream(seed, "data", 98, i)
            s = complex_normal(rng, (K, N))
            x = zf_transmit(s, view, block, P)
            V = zf_precoders(block.h)
            scale = math.sqrt(P / (K * N))
            # what each user sees beyond its own streams
            cross = max(float(np.max(np.abs(block.h[k] @ (x - scale * V[k] @ s[k]))))
                        for k in range(K))
            reports[i] = {"kind": "zf", "cross_talk": cross / scale}
        elif seg.kind == "mat":
            st = _CACHE.structure(K, N, seg.L)
            betas = experiment_betas(cfg, seed)
            h = np.stack([gen_block(seed, 1000 + u, cfg).h for u in range(st.n_uses)])
            forms = mat_mod.build_forms(st, h, betas)
            d = complex_normal(stream(seed, "data", 97, i), (st.n_data,))
            worst = 0.0
            for k in range(K):
                est = mat_mod.mat_decode(forms, k, forms.rx[:, k] @ d, forms.mc @ d, betas)
                worst = max(worst, float(np.max(np.abs(est - d[st.data_of[k]]))))
            reports[i] = {"kind": "mat", "L": seg.L, "noiseless_error": worst}
    return reports
