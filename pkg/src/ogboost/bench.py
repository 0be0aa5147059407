"""Experiment harness: streams, oracles and progressive validation.

A ``Stream`` is a replayable sequence of labeled sparse examples bound to
a loss family; iterating it yields (example, loss instance) pairs in
adversary order.  Sources are files (svmlight-style text or headered CSV,
labels affinely rescaled into a declared range) or seeded synthetic
generators:

* planted span / convex-hull streams over a small region pool, used to
  check the boosters' regret bounds against a comparator with known
  coefficients;
* the adversarial lower-bound stream: near-coin-flip labels with a large
  pool of label-coin functions, where any budgeted booster must pay
  regret proportional to T over the stage count;
* an additive stream whose target is a sum of per-feature components,
  used to measure the boosting gain over a single stump.

Offline comparators are computed by a simplex Frank-Wolfe solver with a
projected-gradient cross-check.  ``progressive_validate`` scores strictly
test-then-train and can account per-stage realized linear regret against
a committee of functions, which the regret-bound evaluators consume.

Stream iteration is single-consumer; independent (seed, config) runs can
execute in parallel workers, each owning its booster and metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Example, feature_id, seeded_rng
from .losses import LossClass
from .learners import FunctionPool, LowerBoundPool, make_lower_bound_pool


class StreamFormatError(ValueError):
    pass


@dataclass
class Stream:
    """Replayable ordered sequence of labeled examples with a loss family."""

    examples: list[Example]
    loss_class: LossClass
    source: str = "synthetic"
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        make = self.loss_class.make
        for ex in self.examples:
            yield ex, make(ex.label)

    @property
    def labels(self) -> np.ndarray:
        return np.array([ex.label for ex in self.examples])


@dataclass(frozen=True)
class ComparatorSpec:
    """A reference predictor with its per-round values on a stream.

    ``kind`` is one of planted_span, planted_hull, best_convex_hull,
    best_single, uniform_pool_mean, zero.  ``norm1`` is the comparator's
    declared 1-norm (max(1, sum |w|)) where meaningful.
    """

    kind: str
    values: np.ndarray
    coefficients: np.ndarray | None = None
    norm1: float = 1.0

    def total_loss(self, stream: Stream) -> float:
        make = stream.loss_class.make
        return float(sum(make(ex.label).evaluate(v)
                         for ex, v in zip(stream.examples, self.values)))


def zero_comparator(length: int) -> ComparatorSpec:
    return ComparatorSpec("zero", np.zeros(length), None, 1.0)


# ---------------------------------------------------------------------------
# file ingestion


def _rescale(labels: list[float], label_range: tuple[float, float]) -> list[float]:
    lo, hi = label_range
    lmin, lmax = min(labels), max(labels)
    if lmin == lmax:
        raise StreamFormatError("degenerate label column: all labels equal")
    if lmin == lo and lmax == hi:
        return labels  # already spans the range; keep parse/serialize exact
    scale = (hi - lo) / (lmax - lmin)
    # endpoints map exactly so the rescale is idempotent across round-trips
    return [lo if l == lmin else hi if l == lmax else lo + (l - lmin) * scale
            for l in labels]


def parse_stream(path: str | Path, fmt: str, label_range: tuple[float, float] = (-1.0, 1.0),
                 loss_class: LossClass | None = None) -> Stream:
    """Parse a dataset file into a stream.

    Labels are affinely rescaled so the observed [min, max] maps onto
    ``label_range`` (idempotent when the data already fills the range).
    Malformed lines are rejected with their line number.  Explicit zero
    feature values are dropped.
    """
    path = Path(path)
    if fmt not in ("libsvm", "csv"):
        raise StreamFormatError(f"unknown format {fmt!r} (choose libsvm or csv)")
    text = path.read_text()
    if not text.strip():
        raise StreamFormatError(f"{path}: empty file")
    if loss_class is None:
        loss_class = LossClass("squared", label_range=label_range)

    labels: list[float] = []
    feats: list[dict[int, float]] = []
    names: list[str] = []

    lines = text.splitlines()
    if fmt == "csv":
        header = lines[0].split(",")
        if len(header) < 2 or header[0].strip().lower() != "label":
            raise StreamFormatError(f"{path}:1: csv header must start with 'label'")
        names = [h.strip() for h in header[1:]]
        ids = [feature_id(n) for n in names]
        for ln, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise StreamFormatError(
                    f"{path}:{ln}: expected {len(header)} fields, got {len(parts)}")
            try:
                labels.append(float(parts[0]))
            except ValueError:
                raise StreamFormatError(f"{path}:{ln}: non-numeric label {parts[0]!r}") from None
            row: dict[int, float] = {}
            for fid, tok in zip(ids, parts[1:]):
                try:
                    v = float(tok)
                except ValueError:
                    raise StreamFormatError(
                        f"{path}:{ln}: non-numeric feature value {tok!r}") from None
                if v != 0.0:
                    row[fid] = v
            feats.append(row)
    else:
        for ln, line in enumerate(lines, start=1):
            line = line.strip()
            if not line:
                continue
            toks = line.split()
            try:
                labels.append(float(toks[0]))
            except ValueError:
                raise StreamFormatError(f"{path}:{ln}: non-numeric label {toks[0]!r}") from None
            row = {}
            for tok in toks[1:]:
                idx, _, val = tok.partition(":")
                if not val:
                    raise StreamFormatError(f"{path}:{ln}: malformed pair {tok!r}")
                try:
                    k = int(idx)
                    v = float(val)
                except ValueError:
                    raise StreamFormatError(f"{path}:{ln}: malformed pair {tok!r}") from None
                if v != 0.0:
                    row[k] = v
            feats.append(row)

    labels = _rescale(labels, label_range)
    examples = [Example(f, l, eid=i).validate() for i, (f, l) in enumerate(zip(feats, labels))]
    return Stream(examples, loss_class, source=str(path),
                  meta={"format": fmt, "label_range": label_range, "names": names})


def write_stream(stream: Stream, path: str | Path, fmt: str = "libsvm") -> None:
    """Serialize a stream back to disk (full float precision)."""
    path = Path(path)
    out: list[str] = []
    if fmt == "libsvm":
        for ex in stream.examples:
            pairs = " ".join(f"{k}:{v!r}" for k, v in sorted(ex.features.items()))
            out.append(f"{ex.label!r} {pairs}".strip())
    elif fmt == "csv":
        names = stream.meta.get("names")
        if not names:
            raise StreamFormatError("csv serialization needs column names in stream meta")
        ids = [feature_id(n) for n in names]
        out.append("label," + ",".join(names))
        for ex in stream.examples:
            row = [repr(ex.label)] + [repr(ex.features.get(fid, 0.0)) for fid in ids]
            out.append(",".join(row))
    else:
        raise StreamFormatError(f"unknown format {fmt!r}")
    path.write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# synthetic pools and streams

_REGION_FID = 0
_VALUE_FID = 1


class RegionPool(FunctionPool):
    """Pool of functions with disjoint supports.

    Member k responds with the example's value feature on region k and 0
    elsewhere, so any weighting of members keeps labels within the largest
    single weight.
    """

    def __init__(self, n_members: int = 8):
        members = [self._member(k) for k in range(n_members)]
        super().__init__(members, output_bound=1.0,
                         names=[f"region{k}" for k in range(n_members)])
        self.n_members = n_members

    @staticmethod
    def _member(k: int):
        def g(x: Example, _k=k) -> float:
            if x.features.get(_REGION_FID) == _k + 1:
                return x.features.get(_VALUE_FID, 0.0)
            return 0.0

        return g

    def sample_example(self, rng: np.random.Generator, eid: int) -> Example:
        region = int(rng.integers(1, self.n_members + 1))
        v = float(rng.uniform(-1.0, 1.0))
        if v == 0.0:
            v = 0.5
        return Example({_REGION_FID: float(region), _VALUE_FID: v}, label=None, eid=eid)


def make_region_pool(n_members: int = 8) -> RegionPool:
    return RegionPool(n_members)


def _planted_stream(pool: RegionPool, weights: np.ndarray, noise_sigma: float, rounds: int,
                    seed: int, loss_class: LossClass, kind: str) -> tuple[Stream, ComparatorSpec]:
    weights = np.asarray(weights, dtype=float)
    if len(weights) != len(pool):
        raise ValueError("one weight per pool member required")
    if not np.all(np.isfinite(weights)):
        raise ValueError("planted coefficients must be finite")
    rng = seeded_rng(seed, "planted", kind)
    lo, hi = loss_class.label_range
    examples = []
    comp_values = np.empty(rounds)
    for t in range(rounds):
        ex = pool.sample_example(rng, t)
        vals = pool.values(ex)
        f_val = float(weights @ vals)
        comp_values[t] = f_val
        label = f_val
        if noise_sigma > 0:
            label += noise_sigma * float(rng.standard_normal())
        label = min(max(label, lo), hi)
        examples.append(Example(ex.features, label, eid=t))
    norm1 = max(1.0, float(np.abs(weights).sum()))
    comp = ComparatorSpec(kind, comp_values, weights, norm1)
    stream = Stream(examples, loss_class, source=f"synthetic:{kind}",
                    meta={"seed": seed, "noise_sigma": noise_sigma})
    return stream, comp


def planted_span_stream(pool: RegionPool, weights, noise_sigma: float, rounds: int, seed: int,
                        loss_class: LossClass | None = None) -> tuple[Stream, ComparatorSpec]:
    """Stream whose labels are a known linear combination of pool members."""
    lc = loss_class or LossClass("squared")
    return _planted_stream(pool, weights, noise_sigma, rounds, seed, lc, "planted_span")


def planted_hull_stream(pool: RegionPool, weights, noise_sigma: float, rounds: int, seed: int,
                        loss_class: LossClass | None = None) -> tuple[Stream, ComparatorSpec]:
    """Planted stream with simplex coefficients (a convex-hull comparator)."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("hull coefficients must be a probability vector")
    lc = loss_class or LossClass("squared")
    stream, comp = _planted_stream(pool, weights, noise_sigma, rounds, seed, lc, "planted_hull")
    return stream, comp


def make_additive_stream(rounds: int, seed: int, n_signal: int = 5, n_noise: int = 5,
                         coeffs=(0.3, 0.25, 0.2, 0.15, 0.1), present_p: float = 0.6,
                         noise_sigma: float = 0.05) -> Stream:
    """Sparse stream whose target is a sum of per-feature components.

    Signal feature j contributes coeffs[j] * value when present; noise
    features carry no signal.  Labels are clipped to [-1, 1].
    """
    if len(coeffs) != n_signal:
        raise ValueError("one coefficient per signal feature required")
    rng = seeded_rng(seed, "additive")
    n_feat = n_signal + n_noise
    present = rng.random((rounds, n_feat)) < present_p
    signs = (rng.integers(0, 2, (rounds, n_feat)) * 2 - 1).astype(float)
    noise = noise_sigma * rng.standard_normal(rounds)
    values = np.where(present, signs, 0.0)
    labels = np.clip(values[:, :n_signal] @ np.asarray(coeffs) + noise, -1.0, 1.0)
    examples = []
    for t in range(rounds):
        feats = {j + 1: values[t, j] for j in range(n_feat) if present[t, j]}
        examples.append(Example(feats, float(labels[t]), eid=t))
    return Stream(examples, LossClass("squared"), source="synthetic:additive",
                  meta={"seed": seed, "n_signal": n_signal, "n_noise": n_noise})


def make_lower_bound_stream(stages: int, rounds: int | None, seed: int,
                            pool_scale: float = 1.0 / 4000.0
                            ) -> tuple[Stream, LowerBoundPool]:
    """Adversarial stream for the budgeted-booster regret floor.

    Labels are drawn uniformly from {1/2 + eps, 1/2 - eps} with
    eps = 1/(10 sqrt(stages)); the paired pool holds M = stages/pool_scale
    label-coin functions.  The uniform pool average concentrates near the
    label, so it is a strong comparator, while any booster limited to one
    pool query per stage cannot resolve the label.  Requires at least 12*M
    rounds for the comparator concentration to hold.
    """
    pool = make_lower_bound_pool(stages, seed, pool_scale)
    m = pool.size
    min_rounds = 12 * m
    if rounds is None:
        rounds = min_rounds
    if rounds < min_rounds:
        raise ValueError(
            f"need at least 12*M = {min_rounds} rounds for pool size M = {m}, got {rounds}")
    eps = 1.0 / (10.0 * math.sqrt(stages))
    p1, p2 = 0.5 + eps, 0.5 - eps
    rng = seeded_rng(seed, "lbstream")
    labels = np.where(rng.random(rounds) < 0.5, p1, p2)
    examples = [Example({0: float(t + 1)}, float(labels[t]), eid=t) for t in range(rounds)]
    stream = Stream(examples, LossClass("squared", label_range=(0.0, 1.0)),
                    source="synthetic:lower_bound",
                    meta={"seed": seed, "eps": eps, "p1": p1, "p2": p2,
                          "pool_size": m, "pool_scale": pool_scale})
    return stream, pool


def uniform_pool_comparator(stream: Stream, pool: LowerBoundPool) -> ComparatorSpec:
    """The uniform average of all pool members, evaluated along the stream."""
    values = np.array([pool.mean_value(ex) for ex in stream.examples])
    return ComparatorSpec("uniform_pool_mean", values, None, 1.0)


# ---------------------------------------------------------------------------
# offline comparator oracles


def _pool_matrix(stream: Stream, pool: FunctionPool) -> np.ndarray:
    return np.array([pool.values(ex) for ex in stream.examples])


def _project_simplex(w: np.ndarray) -> np.ndarray:
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(w) + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(w - theta, 0.0)


def _total_loss(stream: Stream, preds: np.ndarray) -> float:
    make = stream.loss_class.make
    return float(sum(make(ex.label).evaluate(float(p))
                     for ex, p in zip(stream.examples, preds)))


def _loss_derivs(stream: Stream, preds: np.ndarray) -> np.ndarray:
    make = stream.loss_class.make
    return np.array([make(ex.label).gradient(float(p))
                     for ex, p in zip(stream.examples, preds)])


def best_convex_hull_oracle(stream: Stream, pool: FunctionPool, uniform: bool = False,
                            gap_tol_scale: float = 1e-6, max_iter: int = 4000
                            ) -> tuple[np.ndarray, float]:
    """Best fixed convex combination of pool members, in hindsight.

    Solves min over the simplex of the stream's total loss by Frank-Wolfe
    (exact line search for the squared family) until the duality gap falls
    below gap_tol_scale * T, and cross-checks against projected gradient
    descent.  With ``uniform=True`` the uniform average is returned
    directly, which is the intended comparator for the lower-bound stream.
    """
    m = len(pool)
    if uniform:
        values = np.array([float(np.mean(pool.values(ex))) for ex in stream.examples])
        total = _total_loss(stream, values)
        return np.full(m, 1.0 / m), total
    if m > 64:
        raise ValueError(f"pool too large for the offline oracle ({m} > 64); "
                         "request the uniform comparator instead")
    if stream.loss_class.family not in ("linear", "p_norm", "modified_least_squares",
                                        "logistic", "squared"):
        raise ValueError("offline oracle requires a convex loss family")

    V = _pool_matrix(stream, pool)
    T = len(stream)
    squared = stream.loss_class.family == "squared"
    y = stream.labels if squared else None

    def fw() -> np.ndarray:
        w = np.full(m, 1.0 / m)
        for k in range(max_iter):
            preds = V @ w
            d = (preds - y) if squared else _loss_derivs(stream, preds)
            grad_w = V.T @ d
            j = int(np.argmin(grad_w))
            gap = float(grad_w @ w - grad_w[j])
            if gap <= gap_tol_scale * T:
                break
            direction = V[:, j] - preds
            if squared:
                denom = float(direction @ direction)
                gamma = 0.0 if denom == 0 else float(-(preds - y) @ direction) / denom
                gamma = min(max(gamma, 0.0), 1.0)
            else:
                gamma = 2.0 / (k + 2.0)
            w = (1.0 - gamma) * w
            w[j] += gamma
        return w

    def pgd() -> np.ndarray:
        w = np.full(m, 1.0 / m)
        # curvature of the total loss over the simplex: spectral norm of V
        # squared, times the pointwise smoothness on the reachable value ball
        sigma = float(np.linalg.svd(V, compute_uv=False)[0])
        reach = max(float(np.abs(V).max()), 1e-12)
        curvature = stream.loss_class.ball_params(reach).smoothness
        lip = sigma * sigma * max(curvature, 1e-12) + 1e-12
        step = 1.0 / lip
        for _ in range(max_iter):
            preds = V @ w
            d = (preds - y) if squared else _loss_derivs(stream, preds)
            w_new = _project_simplex(w - step * (V.T @ d))
            if float(np.abs(w_new - w).max()) < 1e-12:
                w = w_new
                break
            w = w_new
        return w

    w_fw = fw()
    total_fw = _total_loss(stream, V @ w_fw)
    w_pg = pgd()
    total_pg = _total_loss(stream, V @ w_pg)
    if abs(total_fw - total_pg) > 1e-5 * max(T, 1):
        raise RuntimeError(
            f"oracle cross-check failed: frank-wolfe {total_fw:.6f} vs "
            f"projected gradient {total_pg:.6f}")
    if total_pg < total_fw:
        return w_pg, total_pg
    return w_fw, total_fw


def best_single_oracle(stream: Stream, pool: FunctionPool) -> tuple[int, float]:
    """Best single pool member in hindsight."""
    V = _pool_matrix(stream, pool)
    make = stream.loss_class.make
    totals = np.zeros(V.shape[1])
    for ex, row in zip(stream.examples, V):
        inst = make(ex.label)
        totals += np.array([inst.evaluate(float(v)) for v in row])
    j = int(np.argmin(totals))
    return j, float(totals[j])


def hull_comparator(stream: Stream, pool: FunctionPool, **kw) -> ComparatorSpec:
    """Convex-hull oracle packaged as a comparator spec."""
    w, _ = best_convex_hull_oracle(stream, pool, **kw)
    V = _pool_matrix(stream, pool)
    return ComparatorSpec("best_convex_hull", V @ w, w, 1.0)


# ---------------------------------------------------------------------------
# progressive validation


@dataclass
class RunMetrics:
    """Per-round losses and regret accounting from one validated run."""

    test_losses: np.ndarray
    split: float
    comparator_losses: np.ndarray | None = None
    stage_cum_pred: np.ndarray | None = None   # per stage: sum_t fb . prediction
    stage_cum_member: np.ndarray | None = None  # per (stage, member): sum_t fb . member value

    @property
    def rounds(self) -> int:
        return len(self.test_losses)

    @property
    def tune_rounds(self) -> int:
        return int(self.split * self.rounds)

    @property
    def cum_losses(self) -> np.ndarray:
        return np.cumsum(self.test_losses)

    @property
    def total_loss(self) -> float:
        return float(self.test_losses.sum())

    @property
    def tune_loss(self) -> float:
        k = self.tune_rounds
        return float(self.test_losses[:k].mean()) if k else math.nan

    @property
    def report_loss(self) -> float:
        k = self.tune_rounds
        return float(self.test_losses[k:].mean()) if k < self.rounds else math.nan

    def cum_regret(self) -> np.ndarray:
        if self.comparator_losses is None:
            raise ValueError("no comparator recorded for this run")
        return np.cumsum(self.test_losses - self.comparator_losses)

    def measured_regret(self) -> float:
        return float(self.cum_regret()[-1])

    def stage_regrets(self) -> np.ndarray:
        """Realized linear regret of each stage against the committee."""
        if self.stage_cum_pred is None:
            raise ValueError("stage accounting was not enabled for this run")
        return self.stage_cum_pred - self.stage_cum_member.min(axis=1)

    def max_stage_regret(self) -> float:
        return float(self.stage_regrets().max())


def progressive_validate(stream: Stream, booster, split: float = 0.5,
                         comparator: ComparatorSpec | None = None,
                         committee: FunctionPool | None = None) -> RunMetrics:
    """Run strictly test-then-train over the stream.

    Every example is scored before the booster updates on it.  Losses are
    bucketed into the first ``split`` fraction (tuning) and the remainder
    (reporting).  With a ``committee`` pool, per-stage feedback is paired
    against every committee member so realized stage regrets are available
    afterwards.
    """
    if not (0.0 <= split <= 1.0):
        raise ValueError(f"split fraction must lie in [0, 1], got {split}")
    T = len(stream)
    test_losses = np.empty(T)
    cum_pred = None
    cum_member = None
    for t, (ex, loss) in enumerate(stream):
        y, trace = booster.predict(ex)
        test_losses[t] = loss.evaluate(y)
        fbs = booster.update(ex, trace, loss)
        if committee is not None:
            fb_arr = np.asarray(fbs)
            if cum_pred is None:
                cum_pred = np.zeros(len(fb_arr))
                cum_member = np.zeros((len(fb_arr), len(committee)))
            cum_pred += fb_arr * np.asarray(trace.arms)
            cum_member += np.outer(fb_arr, committee.values(ex))

    comp_losses = None
    if comparator is not None:
        make = stream.loss_class.make
        comp_losses = np.array([make(ex.label).evaluate(float(v))
                                for ex, v in zip(stream.examples, comparator.values)])
    return RunMetrics(test_losses, split, comp_losses, cum_pred, cum_member)


# ---------------------------------------------------------------------------
# regret bounds and reports


def span_regret_bound(delta0: float, eta: float, stages: int, norm1: float, radius: float,
                      lipschitz: float, smoothness: float, horizon: int,
                      base_regret: float) -> dict:
    """Evaluate the span booster's regret bound from measured quantities.

    Terms: geometric residual of the initial gap, the smoothness/ball
    excess, the base learners' (normalized) regret scaled back up, and the
    shrinkage tuner's worst-case regret.  ``base_regret`` is clamped at 0
    because the collapsed geometric sum is only an upper bound for
    nonnegative per-stage regret.
    """
    r = max(base_regret, 0.0)
    lead = (1.0 - eta / norm1) ** stages * delta0
    smooth_term = 3.0 * eta * smoothness * radius**2 * norm1 * horizon
    base_term = lipschitz * norm1 * r
    shrink_term = 2.0 * lipschitz * radius * norm1 * math.sqrt(horizon)
    return {
        "lead": lead,
        "smooth_term": smooth_term,
        "base_term": base_term,
        "shrink_term": shrink_term,
        "total": lead + smooth_term + base_term + shrink_term,
    }


def hull_regret_bound(stages: int, output_bound: float, smoothness: float, lipschitz: float,
                      horizon: int, base_regret: float) -> dict:
    """Evaluate the hull booster's regret bound from measured quantities."""
    r = max(base_regret, 0.0)
    mixing_term = 8.0 * smoothness * output_bound**2 * horizon / stages
    base_term = lipschitz * r
    return {"mixing_term": mixing_term, "base_term": base_term,
            "total": mixing_term + base_term}


@dataclass(frozen=True)
class RegretReport:
    measured: float
    bound: float
    terms: dict
    passed: bool

    @property
    def ratio(self) -> float:
        return self.measured / self.bound if self.bound != 0 else math.inf

    def as_dict(self) -> dict:
        return {"measured_regret": self.measured, "bound": self.bound,
                "ratio": self.ratio, "passed": self.passed, "terms": self.terms}


def regret_report(metrics: RunMetrics, bound_terms: dict) -> RegretReport:
    """Compare a run's measured regret against an evaluated bound."""
    measured = metrics.measured_regret()
    bound = bound_terms["total"]
    return RegretReport(measured, bound, bound_terms, measured <= bound)
