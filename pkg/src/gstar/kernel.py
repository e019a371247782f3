"""Product kernel families s_t(x, y_1..y_k) and sampled checks of their
size and Hölder bounds.

Both built-in families factor over the slots,
``s_t(x, y) = amplitude * prod_i phi_t(|x - y_i|)``, with

* ``product_poisson``:  ``phi_t(d) = t^a / (t + d)^(m + a)``
* ``product_gaussian``: ``phi_t(d) = c * t^-m * exp(-(d/t)^2)``

where ``c`` is the largest constant keeping the Gaussian factor under the
Poisson one for every ``d``. The factorisation is what the fast operator path
exploits; the checks below never rely on it.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import GAUSSIAN, POISSON

FAMILIES = {"product_poisson": POISSON, "product_gaussian": GAUSSIAN}


@dataclass(frozen=True)
class KernelSpec:
    m: float = 1.0
    alpha: float = 1.0
    kappa: int = 2
    family: str = "product_poisson"
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("m must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if int(self.kappa) != self.kappa or self.kappa < 2:
            raise ValueError("kappa must be an integer >= 2")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        object.__setattr__(self, "kappa", int(self.kappa))

    @property
    def family_code(self):
        return FAMILIES[self.family]

    @property
    def gauss_c(self):
        p = self.m + self.alpha
        u = (math.sqrt(1.0 + 2.0 * p) - 1.0) / 2.0
        return math.exp(u * u) / (1.0 + u) ** p

    def factor(self, d, t):
        """One slot factor phi_t(d) (vectorised over d)."""
        d = np.asarray(d, dtype=float)
        if self.family_code == POISSON:
            return t ** self.alpha / (t + d) ** (self.m + self.alpha)
        return self.gauss_c * t ** (-self.m) * np.exp(-(d / t) ** 2)

    def theorem_hypotheses(self, lam):
        """True when lambda > 2 kappa and 0 < alpha <= m (lambda - 2 kappa)."""
        return lam > 2 * self.kappa and 0 < self.alpha <= self.m * (lam - 2 * self.kappa)

    def to_json(self):
        return {"m": self.m, "alpha": self.alpha, "kappa": self.kappa,
                "family": self.family, "amplitude": self.amplitude}

    @classmethod
    def from_json(cls, d):
        return cls(m=float(d["m"]), alpha=float(d["alpha"]), kappa=int(d.get("kappa", 2)),
                   family=str(d.get("family", "product_poisson")),
                   amplitude=float(d.get("amplitude", 1.0)))


def eval_kernel(spec, x, ys, t):
    """s_t(x, y_1, ..., y_kappa) for one point and kappa points ``ys``."""
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ys = np.asarray(ys, dtype=float).reshape(spec.kappa, -1)
    d = np.sqrt(((ys - x) ** 2).sum(axis=1))
    return float(spec.amplitude * np.prod(spec.factor(d, t)))


def size_bound(spec, x, ys, t):
    """t^(kappa a) / prod (t + |x - y_i|)^(m + a)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ys = np.asarray(ys, dtype=float).reshape(spec.kappa, -1)
    d = np.sqrt(((ys - x) ** 2).sum(axis=1))
    return float(np.prod(t ** spec.alpha / (t + d) ** (spec.m + spec.alpha)))


@dataclass
class ConditionReport:
    max_ratio: float
    witness: dict
    samples_used: int
    slot_max: list = field(default_factory=list)

    def to_json(self):
        return {"max_ratio": self.max_ratio, "samples": self.samples_used,
                "slot_max": list(self.slot_max), "witness": self.witness}


def _random_direction(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _draw_configuration(rng, spec, n):
    t = math.exp(rng.uniform(math.log(1e-3), math.log(1e3)))
    x = rng.uniform(-1.0, 1.0, size=n)
    ys = np.empty((spec.kappa, n))
    for i in range(spec.kappa):
        rho = math.exp(rng.uniform(math.log(1e-3), math.log(1e3)))
        ys[i] = x + t * rho * _random_direction(rng, n)
    return x, ys, t


def check_size(spec, sample_count, seed=0, n=1):
    """Sup over random samples of |s_t| / (size bound)."""
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    best, wit = -1.0, {}
    for _ in range(int(sample_count)):
        x, ys, t = _draw_configuration(rng, spec, n)
        d = np.sqrt(((ys - x) ** 2).sum(axis=1))
        # slot by slot so the poisson ratio cancels factor against bound
        per = spec.factor(d, t) * (t + d) ** (spec.m + spec.alpha) / t ** spec.alpha
        r = float(spec.amplitude * np.prod(per))
        if r > best:
            best, wit = r, {"x": x.tolist(), "y": ys.tolist(), "t": t}
    return ConditionReport(best, wit, int(sample_count), [best])


def holder_ratio(spec, x, ys, t, slot, step):
    """|s_t - s_t(perturbed)| over the Hölder bound; slot 0 moves x, slot i moves y_i."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ys = np.asarray(ys, dtype=float).reshape(spec.kappa, -1)
    step = np.atleast_1d(np.asarray(step, dtype=float))
    h = float(np.linalg.norm(step))
    if h == 0.0:
        raise ValueError("zero perturbation")
    base = eval_kernel(spec, x, ys, t)
    if slot == 0:
        moved = eval_kernel(spec, x + step, ys, t)
    else:
        ys2 = ys.copy()
        ys2[slot - 1] = ys2[slot - 1] + step
        moved = eval_kernel(spec, x, ys2, t)
    bound = size_bound(spec, x, ys, t) / t ** spec.alpha * h ** spec.alpha
    return abs(base - moved) / bound


def check_holder(spec, sample_count, seed=0, n=1):
    """Sampled Hölder ratios for the x-slot and each y_i-slot.

    Perturbation lengths are log-uniform in [t 2^-20, t/2). ``slot_max[0]``
    is the x-slot, ``slot_max[i]`` the y_i-slot.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    k = spec.kappa
    slot_max = [0.0] * (k + 1)
    witness = [None] * (k + 1)
    lo, hi = math.log(2.0 ** -20), math.log(0.5)
    for _ in range(int(sample_count)):
        x, ys, t = _draw_configuration(rng, spec, n)
        for slot in range(k + 1):
            h = t * math.exp(rng.uniform(lo, hi))
            step = h * _random_direction(rng, n)
            r = holder_ratio(spec, x, ys, t, slot, step)
            if r > slot_max[slot]:
                slot_max[slot] = r
                witness[slot] = {"x": x.tolist(), "y": ys.tolist(), "t": t, "slot": slot,
                                 "step": step.tolist()}
    top = int(np.argmax(slot_max))
    return ConditionReport(float(slot_max[top]), witness[top] or {}, int(sample_count),
                           [float(v) for v in slot_max])
