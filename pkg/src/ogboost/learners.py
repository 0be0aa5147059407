"""Online linear base learners.

A base learner is a stateful predict/update pair.  Its predictions are
bounded in norm by ``output_bound`` and it accepts only linear feedback:
an update with gradient vector g (norm at most 1) means the round's loss
was y -> g . y.  Implementations:

* ``OnlineGradientLearner`` -- projected online gradient descent over
  sparse linear regressors.
* ``StumpLearner`` -- per-feature scalar gradient descent, predicting with
  the best-performing feature present in the current example.
* ``HedgeLearner`` -- multiplicative weights over a finite function pool,
  either as a deterministic weighted average or sampling one pool member
  per round.
* ``symmetrize`` -- Hedge mixture of a learner, its negation-trained twin
  and the zero arm, extending the comparator class with negations.
* ``GreedyFitLearner`` / ``greedy_adapter`` -- a follow-the-leader fitter
  that consumes the true loss at an offset instead of linear feedback.

Learner instances are single-threaded mutable state; independent boosters
own disjoint copies.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .core import Example, Vector, seeded_rng, vnorm
from .losses import BallParams, LossInstance

FEEDBACK_TOL = 1e-9


class LinearFeedback(NamedTuple):
    """Gradient of a round's linear loss y -> g . y, with ||g|| <= 1."""

    g: Vector


def _unwrap_feedback(fb) -> Vector:
    g = fb.g if type(fb) is LinearFeedback else fb
    if type(g) is float:
        if -1.0 - FEEDBACK_TOL <= g <= 1.0 + FEEDBACK_TOL:
            return g
        raise ValueError(f"linear feedback norm {abs(g):.6g} exceeds 1")
    if vnorm(g) > 1.0 + FEEDBACK_TOL:
        raise ValueError(f"linear feedback norm {vnorm(g):.6g} exceeds 1")
    return g


class BaseLearner:
    """Contract shared by all base learners."""

    output_bound: float = 1.0
    deterministic: bool = True

    def __init__(self):
        self.updates = 0

    def predict(self, x: Example) -> Vector:
        raise NotImplementedError

    def update(self, x: Example, fb) -> None:
        raise NotImplementedError

    def clone(self, tag: int = 0) -> "BaseLearner":
        """Fresh copy with the same configuration (distinct RNG stream)."""
        raise NotImplementedError


# ---------------------------------------------------------------------------
# function pools


class FunctionPool:
    """A finite list of bounded functions Example -> R.

    Values are memoized per example id so that repeated queries within a
    round (one per boosting stage) cost a single evaluation sweep.
    """

    def __init__(self, members: list[Callable[[Example], float]], output_bound: float = 1.0,
                 names: list[str] | None = None):
        if not members:
            raise ValueError("function pool must contain at least one member")
        self.members = members
        self.output_bound = output_bound
        self.names = names or [f"g{i}" for i in range(len(members))]

        self._cache_eid = -2
        self._cache_vals: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.members)

    def values(self, x: Example) -> np.ndarray:
        if x.eid >= 0 and x.eid == self._cache_eid:
            return self._cache_vals
        vals = np.array([m(x) for m in self.members], dtype=float)
        if x.eid >= 0:
            self._cache_eid = x.eid
            self._cache_vals = vals
        return vals

    def symmetrized(self) -> "FunctionPool":
        """Pool closed under negation and containing the zero function."""
        return _SymmetrizedPool(self)


class _SymmetrizedPool(FunctionPool):
    """Negation closure of a base pool: [zero, members..., -members...]."""

    def __init__(self, base: FunctionPool):
        members = ([lambda x: 0.0]
                   + list(base.members)
                   + [(lambda m: (lambda x: -m(x)))(m) for m in base.members])
        names = ["zero"] + base.names + [f"-{n}" for n in base.names]
        super().__init__(members, base.output_bound, names)
        self._base = base

    def values(self, x: Example) -> np.ndarray:
        if x.eid >= 0 and x.eid == self._cache_eid:
            return self._cache_vals
        v = self._base.values(x)
        out = np.concatenate(([0.0], v, -v))
        if x.eid >= 0:
            self._cache_eid = x.eid
            self._cache_vals = out
        return out


class LowerBoundPool(FunctionPool):
    """Pool of stochastic indicator functions used by the adversarial stream.

    Member i at example t takes value 1 with probability equal to the
    example's label and 0 otherwise.  Draws are memoized per (member,
    example id, seed): the whole row of M draws for an example is generated
    once from an RNG keyed by (seed, eid) and cached, so the same "function"
    is consistent across booster stages and repeated queries.
    """

    def __init__(self, size: int, seed: int):
        if size < 1:
            raise ValueError("pool size must be >= 1")
        self.size = size
        self.seed = seed
        self.output_bound = 1.0
        self.names = [f"b{i}" for i in range(size)]
        self._rows: dict[int, np.ndarray] = {}
        self.members = [self._member(i) for i in range(size)]
        self._cache_eid = -2
        self._cache_vals = None

    def _member(self, i: int):
        def f(x: Example, _i=i) -> float:
            return float(self.row(x)[_i])

        return f

    def row(self, x: Example) -> np.ndarray:
        if x.eid < 0:
            raise ValueError("lower-bound pool requires examples with an id")
        cached = self._rows.get(x.eid)
        if cached is not None:
            return cached
        if x.label is None:
            raise ValueError("lower-bound pool requires labeled examples")
        rng = seeded_rng(self.seed, "lbpool", x.eid)
        row = (rng.random(self.size) < x.label).astype(np.float64)
        self._rows[x.eid] = row
        return row

    def values(self, x: Example) -> np.ndarray:
        return self.row(x)

    def mean_value(self, x: Example) -> float:
        """Value of the uniform average of all pool members at ``x``."""
        return float(self.row(x).mean())


def make_lower_bound_pool(stages: int, seed: int, pool_scale: float = 1.0 / 4000.0) -> LowerBoundPool:
    """Pool of M = stages / pool_scale label-coin functions."""
    if stages < 1:
        raise ValueError("stages must be >= 1")
    if not (0 < pool_scale <= 1):
        raise ValueError(f"pool_scale must lie in (0, 1], got {pool_scale}")
    size = int(round(stages / pool_scale))
    return LowerBoundPool(size, seed)


# ---------------------------------------------------------------------------
# concrete learners


class OnlineGradientLearner(BaseLearner):
    """Projected online gradient descent over sparse linear regressors.

    Weights live in the ball ||w|| <= output_bound; the step size is
    lr_scale * D / (G sqrt(t)) with G the largest feature norm observed.
    Predictions are clipped to the output ball, which is a no-op whenever
    feature vectors have norm at most 1.
    """

    def __init__(self, output_bound: float = 1.0, lr_scale: float = 1.0):
        super().__init__()
        self.output_bound = output_bound
        self.lr_scale = lr_scale
        self.w: dict[int, float] = {}
        self._norm2 = 0.0
        self._gmax = 1e-12
        self._t = 0

    def clone(self, tag: int = 0) -> "OnlineGradientLearner":
        return OnlineGradientLearner(self.output_bound, self.lr_scale)

    def predict(self, x: Example) -> float:
        w = self.w
        s = 0.0
        for k, v in x.features.items():
            wk = w.get(k)
            if wk is not None:
                s += wk * v
        D = self.output_bound
        if s > D:
            return D
        if s < -D:
            return -D
        return s

    def update(self, x: Example, fb) -> None:
        g = _unwrap_feedback(fb)
        self.updates += 1
        self._t += 1
        xnorm2 = 0.0
        for v in x.features.values():
            xnorm2 += v * v
        xnorm = math.sqrt(xnorm2)
        if xnorm > self._gmax:
            self._gmax = xnorm
        if g == 0.0 or xnorm == 0.0:
            return
        step = self.lr_scale * self.output_bound / (self._gmax * math.sqrt(self._t))
        w = self.w
        norm2 = self._norm2
        gg = step * g
        for k, v in x.features.items():
            old = w.get(k, 0.0)
            new = old - gg * v
            w[k] = new
            norm2 += new * new - old * old
        D = self.output_bound
        if norm2 > D * D:
            scale = D / math.sqrt(norm2)
            for k in w:
                w[k] *= scale
            norm2 = D * D
        self._norm2 = norm2


class StumpLearner(BaseLearner):
    """Regression stumps: scalar gradient descent on each feature.

    Prediction uses the present feature with the lowest cumulative linear
    loss so far (ties to the lowest feature id); with no features present
    the prediction is 0.  Each present feature takes its own projected
    gradient step on every update.

    Per-feature state lives in one slot list [weight, cum_loss, steps,
    max_abs_value] to keep the per-round work to a single dict hit per
    feature; ``w`` and ``cum_loss`` are diagnostic views.
    """

    _W, _CUM, _T, _G = 0, 1, 2, 3

    def __init__(self, output_bound: float = 1.0, lr_scale: float = 1.0):
        super().__init__()
        self.output_bound = output_bound
        self.lr_scale = lr_scale
        self._state: dict[int, list] = {}

    def clone(self, tag: int = 0) -> "StumpLearner":
        return StumpLearner(self.output_bound, self.lr_scale)

    @property
    def w(self) -> dict[int, float]:
        return {k: st[self._W] for k, st in self._state.items()}

    @w.setter
    def w(self, values: dict[int, float]) -> None:
        for k, v in values.items():
            self._slot(k)[self._W] = v

    @property
    def cum_loss(self) -> dict[int, float]:
        return {k: st[self._CUM] for k, st in self._state.items()}

    @cum_loss.setter
    def cum_loss(self, values: dict[int, float]) -> None:
        for k, v in values.items():
            self._slot(k)[self._CUM] = v

    def _slot(self, k: int) -> list:
        st = self._state.get(k)
        if st is None:
            st = self._state[k] = [0.0, 0.0, 0, 1e-12]
        return st

    def predict(self, x: Example) -> float:
        feats = x.features
        if not feats:
            return 0.0
        state = self._state
        best_k = None
        best_loss = math.inf
        for k in feats:
            st = state.get(k)
            c = st[1] if st is not None else 0.0
            if c < best_loss or (c == best_loss and (best_k is None or k < best_k)):
                best_loss = c
                best_k = k
        st = state.get(best_k)
        s = st[0] * feats[best_k] if st is not None else 0.0
        D = self.output_bound
        if s > D:
            return D
        if s < -D:
            return -D
        return s

    def update(self, x: Example, fb) -> None:
        g = _unwrap_feedback(fb)
        self.updates += 1
        D = self.output_bound
        step_scale = self.lr_scale * D
        state = self._state
        sqrt = math.sqrt
        for k, v in x.features.items():
            st = state.get(k)
            if st is None:
                st = state[k] = [0.0, 0.0, 0, 1e-12]
            w = st[0]
            pred = w * v
            if pred > D:
                pred = D
            elif pred < -D:
                pred = -D
            st[1] += g * pred
            t = st[2] + 1
            st[2] = t
            gm = st[3]
            a = v if v >= 0.0 else -v
            if a > gm:
                gm = a
                st[3] = a
            new = w - (step_scale / (gm * sqrt(t))) * g * v
            # per-feature weight ball keeps |w_k * v| <= D for |v| <= G_k
            cap = D / gm
            if new > cap:
                new = cap
            elif new < -cap:
                new = -cap
            st[0] = new


class _StumpBank:
    """Vectorized state for a committee of stump copies.

    Stage copies see the same example stream, so per-feature step counts
    and value ranges are shared; weights and cumulative losses are
    per-(feature, stage) arrays.  Updates are buffered per round and
    flushed when the next example arrives (streaming protocol, advancing
    example ids), mirroring ``_HedgeBank``.
    """

    def __init__(self, n: int, output_bound: float, lr_scale: float):
        self.n = n
        self.output_bound = output_bound
        self.lr_scale = lr_scale
        self.w: dict[int, np.ndarray] = {}
        self.cum: dict[int, np.ndarray] = {}
        self.steps: dict[int, int] = {}
        self.vmax: dict[int, float] = {}
        self._pred_eid = -2
        self._preds: list | None = None
        self._pending_ex: Example | None = None
        self._pending_g = np.zeros(n)

    def _flush(self) -> None:
        ex = self._pending_ex
        if ex is None:
            return
        g = self._pending_g
        D = self.output_bound
        scale = self.lr_scale * D
        minimum, maximum = np.minimum, np.maximum
        for k, v in ex.features.items():
            wk = self.w.get(k)
            if wk is None:
                wk = self.w[k] = np.zeros(self.n)
                self.cum[k] = np.zeros(self.n)
                self.steps[k] = 0
                self.vmax[k] = 1e-12
            pred = minimum(maximum(wk * v, -D), D)
            self.cum[k] += g * pred
            t = self.steps[k] + 1
            self.steps[k] = t
            gm = self.vmax[k]
            a = abs(v)
            if a > gm:
                gm = a
                self.vmax[k] = a
            wk -= ((scale / (gm * math.sqrt(t))) * g) * v
            cap = D / gm
            maximum(wk, -cap, out=wk)
            minimum(wk, cap, out=wk)
        self._pending_ex = None
        self._pending_g = np.zeros(self.n)

    def predict(self, row: int, x: Example) -> float:
        if x.eid != self._pred_eid:
            self._flush()
            feats = x.features
            n = self.n
            if not feats:
                self._preds = [0.0] * n
            else:
                items = sorted(feats.items())  # tie-break: lowest feature id
                m = len(items)
                cums = np.zeros((m, n))
                wmat = np.zeros((m, n))
                for i, (k, _) in enumerate(items):
                    c = self.cum.get(k)
                    if c is not None:
                        cums[i] = c
                        wmat[i] = self.w[k]
                choice = np.argmin(cums, axis=0)
                vvec = np.array([v for _, v in items])
                raw = wmat[choice, np.arange(n)] * vvec[choice]
                D = self.output_bound
                self._preds = np.minimum(np.maximum(raw, -D), D).tolist()
            self._pred_eid = x.eid
        return self._preds[row]

    def update(self, row: int, x: Example, g: float) -> None:
        if self._pending_ex is not None and x.eid != self._pending_ex.eid:
            self._flush()
        self._pending_ex = x
        self._pending_g[row] += g


class BankedStumpLearner(BaseLearner):
    """One row of a shared stump bank; behaves like ``StumpLearner``."""

    def __init__(self, bank: _StumpBank, row: int):
        super().__init__()
        self.bank = bank
        self.row = row
        self.output_bound = bank.output_bound

    def predict(self, x: Example) -> float:
        return self.bank.predict(self.row, x)

    def update(self, x: Example, fb) -> None:
        g = _unwrap_feedback(fb)
        self.updates += 1
        self.bank.update(self.row, x, g)


def stump_committee(n: int, output_bound: float = 1.0,
                    lr_scale: float = 1.0) -> list[BankedStumpLearner]:
    """Build n stump copies backed by a shared vectorized bank."""
    bank = _StumpBank(n, output_bound, lr_scale)
    return [BankedStumpLearner(bank, i) for i in range(n)]


def _hedge_rate(pool_size: int, horizon: int) -> float:
    return math.sqrt(8.0 * math.log(max(pool_size, 2)) / max(horizon, 1))


class HedgeLearner(BaseLearner):
    """Multiplicative weights over a finite function pool.

    mode="average" (default) emits the deterministic weighted average of
    the pool values; mode="sample" draws one pool member per round, which
    is the behavior the adversarial lower-bound stream is built against.
    Weights are updated after the round's loss is observed, multiplying
    member j by exp(-rate * g . f_j(x)) and renormalizing.  With a known
    horizon the rate is sqrt(8 ln M / T); otherwise a doubling schedule
    restarts the weights with a halved rate as the horizon estimate grows.
    """

    def __init__(self, pool: FunctionPool, horizon: int | None = None,
                 mode: str = "average", seed: int = 0, rate: float | None = None):
        super().__init__()
        if mode not in ("average", "sample"):
            raise ValueError(f"unknown hedge mode {mode!r}")
        self.pool = pool
        self.output_bound = pool.output_bound
        self.mode = mode
        self.deterministic = mode == "average"
        self.horizon = horizon
        self.seed = seed
        self._rng = seeded_rng(seed, "hedge") if mode == "sample" else None
        self._rate_arg = rate
        m = len(pool)
        self.weights = np.full(m, 1.0 / m)
        if rate is not None:
            self.rate = rate
            self._doubling = False
        elif horizon is not None:
            self.rate = _hedge_rate(m, horizon)
            self._doubling = False
        else:
            self._epoch_len = 16
            self._epoch_t = 0
            self.rate = _hedge_rate(m, self._epoch_len)
            self._doubling = True

    def clone(self, tag: int = 0) -> "HedgeLearner":
        return HedgeLearner(self.pool, self.horizon, self.mode,
                            seed=self.seed + 7919 * (tag + 1), rate=self._rate_arg)

    def predict(self, x: Example) -> float:
        vals = self.pool.values(x)
        if self.mode == "average":
            return float(self.weights @ vals)
        cdf = np.cumsum(self.weights)
        j = int(np.searchsorted(cdf, self._rng.random() * cdf[-1], side="right"))
        if j >= len(vals):
            j = len(vals) - 1
        return float(vals[j])

    def update(self, x: Example, fb) -> None:
        g = _unwrap_feedback(fb)
        self.updates += 1
        vals = self.pool.values(x)
        w = self.weights
        w *= np.exp((-self.rate * g) * vals)
        total = w.sum()
        if total <= 0 or not np.isfinite(total):
            w[:] = 1.0 / len(w)
        else:
            w /= total
        if self._doubling:
            self._epoch_t += 1
            if self._epoch_t >= self._epoch_len:
                self._epoch_len *= 2
                self._epoch_t = 0
                self.rate = _hedge_rate(len(w), self._epoch_len)
                w[:] = 1.0 / len(w)


class _HedgeBank:
    """Vectorized weight state shared by a committee of hedge copies.

    All copies see the same pool values each round, so their weight rows
    can live in one (n, M) matrix.  Stage updates are buffered and flushed
    in a single vectorized pass when a new example arrives; this requires
    the streaming predict-then-update protocol with advancing example ids,
    which is exactly how the boosters drive their stage copies.
    """

    def __init__(self, pool: FunctionPool, n: int, horizon: int, mode: str, seed: int):
        if mode not in ("average", "sample"):
            raise ValueError(f"unknown hedge mode {mode!r}")
        self.pool = pool
        self.mode = mode
        self.rate = _hedge_rate(len(pool), horizon)
        self.weights = np.full((n, len(pool)), 1.0 / len(pool))
        self._rng = seeded_rng(seed, "hedgebank") if mode == "sample" else None
        self._pred_eid = -2
        self._preds: list | None = None
        self._pending_eid = -2
        self._pending_vals: np.ndarray | None = None
        self._pending_g = np.zeros(n)
        self._pending_any = False

    def _flush(self) -> None:
        if not self._pending_any:
            return
        w = self.weights
        w *= np.exp(np.outer(-self.rate * self._pending_g, self._pending_vals))
        w /= w.sum(axis=1, keepdims=True)
        self._pending_g[:] = 0.0
        self._pending_any = False

    def predict(self, row: int, x: Example) -> float:
        if x.eid != self._pred_eid:
            self._flush()
            vals = self.pool.values(x)
            w = self.weights
            if self.mode == "average":
                self._preds = (w @ vals).tolist()
            else:
                cdf = np.cumsum(w, axis=1)
                r = self._rng.random(len(w)) * cdf[:, -1]
                idx = np.minimum((cdf < r[:, None]).sum(axis=1), len(vals) - 1)
                self._preds = vals[idx].tolist()
            self._pred_eid = x.eid
        return self._preds[row]

    def update(self, row: int, x: Example, g: float) -> None:
        if x.eid != self._pending_eid:
            self._flush()
            self._pending_eid = x.eid
            self._pending_vals = self.pool.values(x)
        self._pending_g[row] += g
        self._pending_any = True


class BankedHedgeLearner(BaseLearner):
    """One row of a shared hedge bank; behaves like ``HedgeLearner``."""

    def __init__(self, bank: _HedgeBank, row: int):
        super().__init__()
        self.bank = bank
        self.row = row
        self.pool = bank.pool
        self.output_bound = bank.pool.output_bound
        self.deterministic = bank.mode == "average"

    def predict(self, x: Example) -> float:
        return self.bank.predict(self.row, x)

    def update(self, x: Example, fb) -> None:
        g = _unwrap_feedback(fb)
        self.updates += 1
        self.bank.update(self.row, x, g)

    @property
    def weights(self) -> np.ndarray:
        self.bank._flush()
        return self.bank.weights[self.row]


def hedge_committee(pool: FunctionPool, n: int, horizon: int, mode: str = "average",
                    seed: int = 0) -> list[BankedHedgeLearner]:
    """Build n hedge copies over one pool, backed by a shared bank.

    Functionally equivalent to n independent ``HedgeLearner`` copies with
    a known horizon, but the per-round weight work is vectorized across
    copies.  Use for booster stage committees on long streams.
    """
    bank = _HedgeBank(pool, n, horizon, mode, seed)
    return [BankedHedgeLearner(bank, i) for i in range(n)]


class SymmetrizedLearner(BaseLearner):
    """Hedge mixture of a learner, its negation-trained twin and zero.

    The positive copy receives the round's feedback, the twin receives the
    negated feedback and its prediction enters the mixture negated, and a
    constant-zero arm is included, so the composite competes with the
    original comparators, their negations and the zero function.  The
    mixture is a deterministic convex combination; mixing weights update
    after the round's loss is observed.
    """

    def __init__(self, inner: BaseLearner, horizon: int | None = None):
        super().__init__()
        if inner.updates > 0:
            raise ValueError("symmetrize requires a fresh learner (no prior updates)")
        self.pos = inner
        self.neg = inner.clone(tag=1)
        self.output_bound = inner.output_bound
        self.deterministic = inner.deterministic
        self.horizon = horizon
        self.mix = np.full(3, 1.0 / 3.0)
        if horizon is not None:
            self.rate = _hedge_rate(3, horizon)
            self._doubling = False
        else:
            self._epoch_len = 16
            self._epoch_t = 0
            self.rate = _hedge_rate(3, self._epoch_len)
            self._doubling = True
        self._last: tuple[int, float, float] | None = None

    def clone(self, tag: int = 0) -> "SymmetrizedLearner":
        return SymmetrizedLearner(self.pos.clone(tag=2 * tag + 2), self.horizon)

    def arm_outputs(self, x: Example) -> tuple[float, float, float]:
        return (self.pos.predict(x), -self.neg.predict(x), 0.0)

    def predict(self, x: Example) -> float:
        a = self.arm_outputs(x)
        self._last = (x.eid, a[0], a[1])
        m = self.mix
        return m[0] * a[0] + m[1] * a[1] + m[2] * a[2]

    def update(self, x: Example, fb) -> None:
        g = _unwrap_feedback(fb)
        self.updates += 1
        if self._last is not None and self._last[0] == x.eid:
            a_pos, a_neg = self._last[1], self._last[2]
        else:
            a_pos, a_neg, _ = self.arm_outputs(x)
        # arm losses normalized to [-1, 1] by the output bound
        D = self.output_bound
        losses = np.array([g * a_pos / D, g * a_neg / D, 0.0])
        self.mix *= np.exp(-self.rate * losses)
        self.mix /= self.mix.sum()
        if self._doubling:
            self._epoch_t += 1
            if self._epoch_t >= self._epoch_len:
                self._epoch_len *= 2
                self._epoch_t = 0
                self.rate = _hedge_rate(3, self._epoch_len)
                self.mix[:] = 1.0 / 3.0
        self.pos.update(x, g)
        self.neg.update(x, -g)
        self._last = None


def symmetrize(learner: BaseLearner, horizon: int | None = None) -> SymmetrizedLearner:
    """Wrap a fresh learner so it also competes with negated comparators."""
    return SymmetrizedLearner(learner, horizon)


# ---------------------------------------------------------------------------
# greedy fitting (offset interface)


class GreedyFitLearner:
    """Follow-the-leader greedy fitter over a finite function pool.

    Instead of linear feedback it receives, each round, an offset y' and
    the round's true loss, suffering loss(y' + alpha * prediction).  The
    prediction is the pool member with the lowest cumulative offset loss so
    far (ties to the lowest index).
    """

    deterministic = True

    def __init__(self, pool: FunctionPool, alpha: float = 0.0):
        if alpha < 0:
            raise ValueError(f"step size alpha must be >= 0, got {alpha}")
        self.pool = pool
        self.alpha = alpha
        self.output_bound = pool.output_bound
        self.cum = np.zeros(len(pool))
        self.updates = 0

    def clone(self, tag: int = 0) -> "GreedyFitLearner":
        return GreedyFitLearner(self.pool, self.alpha)

    def predict(self, x: Example, offset: Vector = 0.0) -> float:
        vals = self.pool.values(x)
        return float(vals[int(np.argmin(self.cum))])

    def update(self, x: Example, offset: Vector, loss: LossInstance) -> None:
        self.updates += 1
        vals = self.pool.values(x)
        a = self.alpha
        self.cum += np.array([loss.evaluate(offset + a * v) for v in vals])


class GreedyStepAdapter:
    """Adapts a greedy fitter to the booster's offset-passing wiring.

    The step size alpha is computed from a regret model R(T) for the inner
    fitter:

      regret_model="sqrt":         alpha = sqrt(2 R(T) / (beta' D^2 T))
      regret_model="alpha-linear": alpha = 2 R(T) / (beta' D^2 T)

    where beta' is the loss smoothness on the enlarged ball reached by
    offset + alpha * prediction.  Offsets beyond ``offset_bound`` are a
    contract violation and raise.
    """

    deterministic = True

    def __init__(self, inner: GreedyFitLearner, horizon: int, smooth_params: BallParams,
                 offset_bound: float, regret_model: str = "sqrt",
                 regret_fn: Callable[[int], float] = math.sqrt):
        if regret_model not in ("sqrt", "alpha-linear"):
            raise ValueError(f"unknown regret model {regret_model!r}")
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.inner = inner
        self.horizon = horizon
        self.offset_bound = offset_bound
        self.regret_model = regret_model
        self.output_bound = inner.output_bound
        self.updates = 0
        D = inner.output_bound
        beta = smooth_params.smoothness
        r = regret_fn(horizon)
        denom = beta * D * D * horizon
        if denom <= 0:
            raise ValueError("smoothness, output bound and horizon must be positive")
        if regret_model == "sqrt":
            self.alpha = math.sqrt(2.0 * r / denom)
        else:
            self.alpha = 2.0 * r / denom
        inner.alpha = self.alpha

    def clone(self, tag: int = 0) -> "GreedyStepAdapter":
        fresh = GreedyStepAdapter.__new__(GreedyStepAdapter)
        fresh.__dict__.update(self.__dict__)
        fresh.inner = self.inner.clone(tag)
        fresh.inner.alpha = self.alpha
        fresh.updates = 0
        return fresh

    def _check_offset(self, offset: Vector) -> None:
        if vnorm(offset) > self.offset_bound + FEEDBACK_TOL:
            raise ValueError(
                f"offset norm {vnorm(offset):.6g} exceeds declared bound {self.offset_bound}"
            )

    def predict(self, x: Example, offset: Vector = 0.0) -> float:
        self._check_offset(offset)
        return self.inner.predict(x, offset)

    def update(self, x: Example, offset: Vector, loss: LossInstance) -> None:
        self._check_offset(offset)
        self.updates += 1
        self.inner.update(x, offset, loss)


def greedy_adapter(inner: GreedyFitLearner, horizon: int, smooth_params: BallParams,
                   offset_bound: float, regret_model: str = "sqrt",
                   regret_fn: Callable[[int], float] = math.sqrt) -> GreedyStepAdapter:
    """Build the offset adapter with its step size fixed in advance."""
    return GreedyStepAdapter(inner, horizon, smooth_params, offset_bound,
                             regret_model, regret_fn)
