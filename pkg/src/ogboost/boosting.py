"""Streaming boosters over online linear base learners.

``SpanBooster`` competes with linear combinations of the base class: stage
partial sums are shrunk by per-stage factors tuned online, stepped toward
each stage's prediction and projected onto a working ball whose radius is
solved from the loss family.  ``HullBooster`` competes with convex
combinations: partial sums are convex averages with the classic
conditional-gradient schedule 2/(i+1) and need no shrinkage or projection.

Both boosters split each round into predict (returning the prediction and
a trace of partial sums) and update (consuming the trace), so a harness
can score test-then-train.  Stage feedback is the loss gradient at the
previous partial sum, normalized by the ball Lipschitz constant so every
base learner sees unit-Lipschitz linear losses.

A booster instance owns its learners and is single-threaded; independent
instances may run in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Example, Vector, clip_unit_interval, project_to_ball, vdot
from .losses import LossClass, LossInstance


def auto_eta(stages: int) -> float:
    """Default span-booster step size ln(N)/N, floored into [1/N, 1]."""
    if stages < 1:
        raise ValueError("stages must be >= 1")
    if stages == 1:
        return 1.0
    return min(1.0, max(1.0 / stages, math.log(stages) / stages))


@dataclass(slots=True)
class RoundTrace:
    """Partial sums and stage predictions of one predict call."""

    round_id: int
    partial_sums: list  # y^0 .. y^N
    arms: list          # stage predictions A^i(x)


class _BoosterBase:
    def __init__(self, learners: list):
        if not learners:
            raise ValueError("need at least one base learner")
        self.learners = list(learners)
        self.stages = len(learners)
        self.round = 0
        self._pending: int | None = None

    def _open_round(self) -> int:
        if self._pending is not None:
            raise RuntimeError("predict called with a pending update (round protocol)")
        self._pending = self.round
        return self.round

    def _consume_trace(self, trace: RoundTrace) -> None:
        if self._pending is None:
            raise RuntimeError("update called without a pending prediction")
        if trace is None or trace.round_id != self._pending:
            raise RuntimeError("update called with a stale or missing round trace")
        self._pending = None
        self.round += 1


class SpanBooster(_BoosterBase):
    """Boosting for the linear span of the base class.

    Per round, with stage shrinkage s_i in [0, 1] and step size eta:

        y^0 = 0
        y^i = project( (1 - s_i * eta) * y^{i-1} + eta * A^i(x) )

    Updates pass each stage the normalized gradient at its input partial
    sum and move s_i by online gradient descent on the alignment
    gradient . y^{i-1}, clipped back to [0, 1].

    ``deterministic_mode`` (the CLI's --corollary-mode) sets the working
    radius to eta*N*D, which makes the projection vacuous on reachable
    states and is valid for deterministic base learners with any convex
    loss family.
    """

    def __init__(self, loss_class: LossClass, learners: list, eta: float | None = None,
                 output_bound: float = 1.0, deterministic_mode: bool = False,
                 greedy_offsets: bool = False):
        super().__init__(learners)
        n = self.stages
        self.eta = auto_eta(n) if eta is None else float(eta)
        if not (1.0 / n - 1e-12 <= self.eta <= 1.0 + 1e-12):
            raise ValueError(f"eta must lie in [1/N, 1] = [{1.0 / n:.6g}, 1], got {self.eta}")
        self.loss_class = loss_class
        self.output_bound = output_bound
        self.deterministic_mode = deterministic_mode
        self.greedy_offsets = greedy_offsets
        if deterministic_mode:
            for lrn in learners:
                if not getattr(lrn, "deterministic", False):
                    raise ValueError("deterministic_mode requires deterministic base learners")
            self.radius = self.eta * n * output_bound
        else:
            self.radius = loss_class.solve_ball_radius(self.eta, n, output_bound)
        params = loss_class.ball_params(self.radius)
        if params.lipschitz <= 0:
            raise ValueError("loss family has zero Lipschitz constant on the working ball")
        self.lipschitz = params.lipschitz
        self.smoothness = params.smoothness
        self.shrink = [0.0] * n

    def predict(self, x: Example) -> tuple[Vector, RoundTrace]:
        rid = self._open_round()
        eta = self.eta
        radius = self.radius
        y: Vector = 0.0
        sums = [y]
        arms = []
        if self.greedy_offsets:
            for s, lrn in zip(self.shrink, self.learners):
                a = lrn.predict(x, y)
                arms.append(a)
                y = project_to_ball((1.0 - s * eta) * y + eta * a, radius)
                sums.append(y)
        else:
            for s, lrn in zip(self.shrink, self.learners):
                a = lrn.predict(x)
                arms.append(a)
                y = (1.0 - s * eta) * y + eta * a
                # scalar fast path of project_to_ball
                if type(y) is float:
                    if y > radius:
                        y = radius
                    elif y < -radius:
                        y = -radius
                else:
                    y = project_to_ball(y, radius)
                sums.append(y)
        return y, RoundTrace(rid, sums, arms)

    def update(self, x: Example, trace: RoundTrace, loss: LossInstance) -> list[float]:
        """Advance all stages; returns the per-stage normalized feedback."""
        self._consume_trace(trace)
        lip = self.lipschitz
        alpha = 1.0 / (lip * self.radius * math.sqrt(self.round))  # round already advanced
        sums = trace.partial_sums
        shrink = self.shrink
        gradient = loss.gradient
        greedy = self.greedy_offsets
        feedbacks = []
        for i, lrn in enumerate(self.learners):
            y_prev = sums[i]
            grad = gradient(y_prev)
            fb = grad / lip
            feedbacks.append(fb)
            if greedy:
                lrn.update(x, y_prev, loss)
            else:
                lrn.update(x, fb)
            if type(grad) is float:
                s = shrink[i] + alpha * (grad * y_prev)
                shrink[i] = 0.0 if s < 0.0 else 1.0 if s > 1.0 else s
            else:
                # a scalar y_prev here can only be the stage-1 zero seed
                align = 0.0 if type(y_prev) is float else vdot(grad, y_prev)
                shrink[i] = clip_unit_interval(shrink[i] + alpha * align)
        return feedbacks


class HullBooster(_BoosterBase):
    """Boosting for the convex hull of the base class.

    Per round:  y^0 = 0,  y^i = (1 - 2/(i+1)) * y^{i-1} + 2/(i+1) * A^i(x).
    The first stage weight is 1, so with a single stage the booster is the
    bare base learner fed the normalized gradient at zero.
    """

    def __init__(self, loss_class: LossClass, learners: list, output_bound: float = 1.0,
                 greedy_offsets: bool = False):
        super().__init__(learners)
        self.loss_class = loss_class
        self.output_bound = output_bound
        self.greedy_offsets = greedy_offsets
        params = loss_class.ball_params(output_bound)
        if params.lipschitz <= 0:
            raise ValueError("loss family has zero Lipschitz constant on the output ball")
        self.lipschitz = params.lipschitz
        self.smoothness = params.smoothness
        self.stage_weights = [2.0 / (i + 2) for i in range(self.stages)]  # stage i+1 -> 2/(i+2)

    def predict(self, x: Example) -> tuple[Vector, RoundTrace]:
        rid = self._open_round()
        y: Vector = 0.0
        sums = [y]
        arms = []
        if self.greedy_offsets:
            for w, lrn in zip(self.stage_weights, self.learners):
                a = lrn.predict(x, y)
                arms.append(a)
                y = (1.0 - w) * y + w * a
                sums.append(y)
        else:
            for w, lrn in zip(self.stage_weights, self.learners):
                a = lrn.predict(x)
                arms.append(a)
                y = (1.0 - w) * y + w * a
                sums.append(y)
        return y, RoundTrace(rid, sums, arms)

    def update(self, x: Example, trace: RoundTrace, loss: LossInstance) -> list[float]:
        self._consume_trace(trace)
        lip = self.lipschitz
        sums = trace.partial_sums
        gradient = loss.gradient
        greedy = self.greedy_offsets
        feedbacks = []
        for i, lrn in enumerate(self.learners):
            grad = gradient(sums[i])
            fb = grad / lip
            feedbacks.append(fb)
            if greedy:
                lrn.update(x, sums[i], loss)
            else:
                lrn.update(x, fb)
        return feedbacks


class ScaledLearner:
    """Multiplies a base learner's predictions by a factor lambda >= 1.

    The scaled learner competes with the lambda-scaled base class; its
    output bound becomes lambda * D and feedback is forwarded unchanged.
    The owning booster must be constructed with the enlarged output bound
    (its radius solver then works on the scaled ball).
    """

    def __init__(self, inner, scale: float):
        if scale < 1.0:
            raise ValueError(f"scaling factor must be >= 1, got {scale}")
        self.inner = inner
        self.scale = scale
        self.output_bound = scale * inner.output_bound
        self.deterministic = getattr(inner, "deterministic", False)
        self.updates = 0

    def clone(self, tag: int = 0) -> "ScaledLearner":
        return ScaledLearner(self.inner.clone(tag), self.scale)

    def predict(self, x: Example):
        p = self.inner.predict(x)
        return self.scale * p

    def update(self, x: Example, fb) -> None:
        self.updates += 1
        self.inner.update(x, fb)


def scale_wrap(learner, scale: float) -> ScaledLearner:
    """Scale a base learner's predictions by a factor >= 1."""
    return ScaledLearner(learner, scale)


@dataclass(frozen=True, slots=True)
class ScalingConfig:
    """Derived quantities for running the span booster over a scaled class."""

    scale: float
    radius: float  # working radius solved on the scaled ball

    @staticmethod
    def solve(loss_class: LossClass, scale: float, eta: float, stages: int,
              output_bound: float = 1.0) -> "ScalingConfig":
        if scale < 1.0:
            raise ValueError(f"scaling factor must be >= 1, got {scale}")
        radius = loss_class.solve_ball_radius(eta, stages, scale * output_bound)
        return ScalingConfig(scale, radius)

    def scaled_norm1(self, norm1: float) -> float:
        """Comparator 1-norm measured against the scaled class."""
        return max(1.0, norm1 / self.scale)
