"""Batch greedy stagewise fitting over a finite dictionary.

Minimizes a convex batch functional ell(f) = (1/m) sum_j ell_j(f(x_j))
over the span of a finite, symmetric dictionary (closed under negation,
containing zero).  Two step rules are compared:

* ungated:  f_i = f_{i-1} + eta_i * g_i
* gated:    f_i = (1 - sigma_i * eta_i) * f_{i-1} + eta_i * g_i,
            sigma_i = 1 iff grad(f_{i-1}) . f_{i-1} >= 0

where g_i is the exact dictionary argmin of ell(f_{i-1} + eta_i * g).
The gate shrinks the iterate multiplicatively whenever it is anti-aligned
with the descent direction, which turns the ungated rule's harmonic
error decay into a geometric one.  ``run_batch`` traces the optimization
error against a planted comparator together with both theoretical bound
curves.

Functions are represented by their value vectors on the batch points; the
function-space norm is the RMS over the batch, under which the squared
pointwise loss is exactly 1-smooth.

Everything here is pure batch computation and reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .losses import LossClass


class FunctionDictionary:
    """Finite symmetric dictionary of batch-value vectors.

    ``atoms`` has one row per base function; rows are their values on the
    m batch points.  The stored dictionary is the closure {0} u {+-atom},
    with every row's RMS norm at most 1 (validated).
    """

    def __init__(self, atoms: np.ndarray):
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim != 2 or atoms.shape[0] < 1:
            raise ValueError("atoms must be a nonempty 2-d array [n_atoms, m]")
        m = atoms.shape[1]
        rms = np.sqrt((atoms**2).mean(axis=1))
        if np.any(rms > 1.0 + 1e-9):
            raise ValueError(f"atom RMS norms must be <= 1, max is {rms.max():.6g}")
        self.atoms = atoms
        self.rows = np.vstack([np.zeros((1, m)), atoms, -atoms])

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def n_points(self) -> int:
        return self.rows.shape[1]


@dataclass
class BatchObjective:
    """Convex functional defined by a fixed batch and a pointwise loss."""

    labels: np.ndarray
    loss_class: LossClass
    smoothness: float = 1.0

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=float)
        if self.loss_class.family != "squared":
            raise ValueError("batch fitting currently supports the squared family")

    def value(self, f_values: np.ndarray) -> float:
        d = f_values - self.labels
        return 0.5 * float(d @ d) / len(self.labels)

    def value_rows(self, rows: np.ndarray) -> np.ndarray:
        """Functional value for each row of candidate value vectors."""
        d = rows - self.labels
        return 0.5 * np.einsum("ij,ij->i", d, d) / len(self.labels)

    def gradient(self, f_values: np.ndarray) -> np.ndarray:
        """Pointwise loss derivatives at the batch points."""
        return f_values - self.labels

    def grad_pairing(self, f_values: np.ndarray, g_values: np.ndarray) -> float:
        """Functional inner product grad(f) . g = (1/m) sum_j ell_j'(f_j) g_j."""
        return float(self.gradient(f_values) @ g_values) / len(self.labels)


@dataclass
class BatchIterate:
    """Stagewise iterate: dictionary coefficients plus cached values."""

    coeffs: np.ndarray
    values: np.ndarray
    s: float = 1.0  # cumulative step sum, s_0 = 1

    @staticmethod
    def zero(dictionary: FunctionDictionary) -> "BatchIterate":
        return BatchIterate(np.zeros(len(dictionary)), np.zeros(dictionary.n_points), 1.0)


def base_argmin(objective: BatchObjective, dictionary: FunctionDictionary,
                f_values: np.ndarray, eta: float) -> int:
    """Exact dictionary argmin of ell(f + eta * g), ties to the lowest index."""
    if len(dictionary) == 0:
        raise ValueError("empty dictionary")
    candidates = f_values[None, :] + eta * dictionary.rows
    vals = objective.value_rows(candidates)
    return int(np.argmin(vals))


def ungated_step(objective: BatchObjective, dictionary: FunctionDictionary,
                 it: BatchIterate, eta: float) -> BatchIterate:
    """One greedy step without shrinkage."""
    if eta < 0:
        raise ValueError("step size must be >= 0")
    j = base_argmin(objective, dictionary, it.values, eta)
    coeffs = it.coeffs.copy()
    coeffs[j] += eta
    return BatchIterate(coeffs, it.values + eta * dictionary.rows[j], it.s + eta)


def gated_step(objective: BatchObjective, dictionary: FunctionDictionary,
               it: BatchIterate, eta: float) -> BatchIterate:
    """One greedy step with the alignment-gated shrinkage."""
    if not (0.0 <= eta <= 1.0):
        raise ValueError("gated step size must lie in [0, 1]")
    j = base_argmin(objective, dictionary, it.values, eta)
    sigma = 1.0 if objective.grad_pairing(it.values, it.values) >= 0.0 else 0.0
    keep = 1.0 - sigma * eta
    return BatchIterate(keep * it.coeffs + eta * _unit_coeff(len(dictionary), j),
                        keep * it.values + eta * dictionary.rows[j],
                        it.s + eta)


def _unit_coeff(n: int, j: int) -> np.ndarray:
    e = np.zeros(n)
    e[j] = 1.0
    return e


def bound_ungated(delta0: float, s: np.ndarray, etas: np.ndarray, norm1: float,
                  smoothness: float) -> np.ndarray:
    """Error-bound curve for the ungated rule, evaluated at every stage.

    bound_N = (s_0 + W)/(s_N + W) * delta0
              + sum_i (s_i + W)/(s_N + W) * (beta/2) * eta_i^2
    """
    out = np.empty(len(etas))
    w = norm1
    for n in range(1, len(etas) + 1):
        lead = (s[0] + w) / (s[n] + w) * delta0
        tail = float(np.sum((s[1 : n + 1] + w) / (s[n] + w) * 0.5 * smoothness * etas[:n] ** 2))
        out[n - 1] = lead + tail
    return out


def bound_gated(delta0: float, s: np.ndarray, etas: np.ndarray, norm1: float,
                smoothness: float) -> np.ndarray:
    """Error-bound curve for the gated rule, evaluated at every stage.

    bound_N = exp(-(s_N - s_0)/W) * delta0
              + sum_i exp(-(s_N - s_i)/W) * (beta/2) * eta_i^2 * (s_i^2 + 1)
    """
    out = np.empty(len(etas))
    w = norm1
    for n in range(1, len(etas) + 1):
        lead = math.exp(-(s[n] - s[0]) / w) * delta0
        si = s[1 : n + 1]
        tail = float(
            np.sum(np.exp(-(s[n] - si) / w) * 0.5 * smoothness * etas[:n] ** 2 * (si**2 + 1.0))
        )
        out[n - 1] = lead + tail
    return out


def make_planted_batch_problem(n_atoms: int = 8, norm1: float = 2.0, n_points: int = 288,
                               seed: int = 0, magnet_junk: float = 1.2):
    """Planted least-squares dictionary problem with a known comparator.

    The first n_atoms - 1 atoms are orthonormal block indicators carrying
    the target; the last is a "magnet" atom correlated with all of them
    but polluted with an off-target component of relative weight
    ``magnet_junk``.  Greedy fitting loads the magnet early and the
    ungated rule can only unwind the pollution one discrete step at a
    time, while the gate removes it multiplicatively; this separates the
    two variants' convergence without changing the comparator, whose
    coefficients live on the clean atoms only and sum to ``norm1``.

    Returns (objective, dictionary, comparator_values, norm1).
    """
    if n_atoms < 3:
        raise ValueError("need at least 3 atoms")
    n_signal = n_atoms - 1
    blocks = n_signal + 1  # one extra block hosts the off-target direction
    if n_points % blocks:
        n_points += blocks - n_points % blocks
    width = n_points // blocks
    scale = math.sqrt(blocks)  # unit RMS for a one-block indicator

    basis = np.zeros((blocks, n_points))
    for k in range(blocks):
        basis[k, k * width:(k + 1) * width] = scale

    magnet = basis[:n_signal].sum(axis=0) + magnet_junk * basis[n_signal]
    magnet /= math.sqrt(n_signal + magnet_junk**2)

    atoms = np.vstack([basis[:n_signal], magnet[None, :]])
    dictionary = FunctionDictionary(atoms)

    rng = np.random.default_rng(seed)
    raw = 0.5 + rng.random(n_signal)
    weights = raw / raw.sum() * norm1
    comparator_values = weights @ basis[:n_signal]

    objective = BatchObjective(comparator_values.copy(), LossClass("squared"))
    return objective, dictionary, comparator_values, norm1


@dataclass
class BatchTrace:
    """Per-stage record of one run: errors, step sums and bound curves."""

    variant: str
    delta0: float
    deltas: np.ndarray = field(default_factory=lambda: np.array([]))
    s: np.ndarray = field(default_factory=lambda: np.array([]))
    sigmas: np.ndarray = field(default_factory=lambda: np.array([]))
    bound: np.ndarray = field(default_factory=lambda: np.array([]))

    def first_crossing(self, threshold: float) -> int | None:
        """1-based stage at which the error first drops below threshold."""
        idx = np.nonzero(self.deltas < threshold)[0]
        return int(idx[0]) + 1 if len(idx) else None


def run_batch(objective: BatchObjective, dictionary: FunctionDictionary,
              comparator_values: np.ndarray, norm1: float,
              schedule, variant: str = "gated") -> BatchTrace:
    """Run one variant over a step schedule, tracing errors and bounds.

    ``comparator_values`` are the planted comparator's values on the batch
    points and ``norm1`` its declared 1-norm; the optimization error at
    stage i is ell(f_i) - ell(comparator).  ``variant`` is "ungated"
    (alias "zy") or "gated".
    """
    if variant == "zy":
        variant = "ungated"
    if variant not in ("ungated", "gated"):
        raise ValueError(f"unknown variant {variant!r} (choose ungated or gated)")
    etas = np.asarray(list(schedule), dtype=float)
    n = len(etas)
    comp_loss = objective.value(np.asarray(comparator_values, dtype=float))

    it = BatchIterate.zero(dictionary)
    delta0 = objective.value(it.values) - comp_loss
    deltas = np.empty(n)
    sigmas = np.empty(n)
    svals = np.empty(n + 1)
    svals[0] = it.s
    for i, eta in enumerate(etas):
        if variant == "gated":
            sigmas[i] = 1.0 if objective.grad_pairing(it.values, it.values) >= 0.0 else 0.0
            it = gated_step(objective, dictionary, it, float(eta))
        else:
            sigmas[i] = 0.0
            it = ungated_step(objective, dictionary, it, float(eta))
        svals[i + 1] = it.s
        deltas[i] = objective.value(it.values) - comp_loss

    if variant == "gated":
        bound = bound_gated(delta0, svals, etas, norm1, objective.smoothness)
    else:
        bound = bound_ungated(delta0, svals, etas, norm1, objective.smoothness)
    return BatchTrace(variant, delta0, deltas, svals, sigmas, bound)
