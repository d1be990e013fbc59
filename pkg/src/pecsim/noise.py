"""SPAM and CNOT noise channels plus drifting parameter trajectories.

The readout (SPAM) channel with fidelity f is the symmetric bit-flip map
rho -> f rho + (1-f) X rho X, expressed here with Kraus operators
{sqrt(f) I, sqrt(1-f) X}. On a diagonal state diag(a, 1-a) it yields
outcome-0 probability f*a + (1-f)*(1-a), i.e. the measured bit matches the
pre-measurement bit with probability f.

CNOT noise is a two-qubit depolarizing mixture with independent control
and target error rates x_C and x_T; it factors exactly into a product of
single-qubit depolarizing channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qsim import PAULI, KrausChannel

DEFAULT_X_MAX = 1.0 / 3.0

PAULI_LABELS = ("I", "X", "Y", "Z")


@dataclass(frozen=True)
class NoiseParams:
    """Noise parameters of one time period.

    spam: per-qubit readout fidelity, each strictly above 0.5 (0.5 makes
    the mitigation coefficients singular).
    xc, xt: CNOT depolarizing rates for control and target, in [0, x_max].
    """

    spam: tuple[float, ...]
    xc: float
    xt: float
    x_max: float = DEFAULT_X_MAX

    def __post_init__(self):
        object.__setattr__(self, "spam", tuple(float(f) for f in self.spam))
        for q, f in enumerate(self.spam):
            if not 0.5 < f <= 1.0:
                raise ValueError(f"spam fidelity f_{q}={f} outside (0.5, 1]")
        for name, x in (("xc", self.xc), ("xt", self.xt)):
            if not 0.0 <= x <= self.x_max:
                raise ValueError(f"{name}={x} outside [0, {self.x_max}]")

    @property
    def n_qubits(self) -> int:
        return len(self.spam)


def spam_channel(f: float, qubit: int = 0) -> KrausChannel:
    """Symmetric readout-noise channel with fidelity f on one qubit."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"spam fidelity {f} outside [0, 1]")
    ops = []
    if f > 0.0:
        ops.append(np.sqrt(f) * PAULI["I"])
    if f < 1.0:
        ops.append(np.sqrt(1.0 - f) * PAULI["X"])
    return KrausChannel(tuple(ops), (qubit,))


def cnot_depol_weights(xc: float, xt: float) -> np.ndarray:
    """Pauli-pair mixture weights of the CNOT depolarizing channel.

    Index 4*a + b corresponds to P_a on the control and P_b on the target,
    a, b running over (I, X, Y, Z). Weights sum to 1 exactly.
    """
    for name, x in (("xc", xc), ("xt", xt)):
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"{name}={x} outside [0, 1]")
    wc = np.array([1.0 - xc, xc / 3.0, xc / 3.0, xc / 3.0])
    wt = np.array([1.0 - xt, xt / 3.0, xt / 3.0, xt / 3.0])
    return np.outer(wc, wt).ravel()


def cnot_depol_channel(xc: float, xt: float, control: int = 0, target: int = 1) -> KrausChannel:
    """Two-qubit depolarizing channel applied after a CNOT (zero-weight terms dropped)."""
    weights = cnot_depol_weights(xc, xt)
    ops = []
    for k, w in enumerate(weights):
        if w == 0.0:
            continue
        pc, pt = PAULI_LABELS[k // 4], PAULI_LABELS[k % 4]
        ops.append(np.sqrt(w) * np.kron(PAULI[pc], PAULI[pt]))
    return KrausChannel(tuple(ops), (control, target))


@dataclass(frozen=True)
class ParamDrift:
    """Linear drift of one parameter's distribution mean.

    The realized value at period t is Beta-distributed with mean
    initial_mean + t*per_period_delta and the given variance
    (variance 0 degenerates to the mean itself).
    """

    initial_mean: float
    per_period_delta: float
    variance: float

    def mean(self, t: int) -> float:
        return self.initial_mean + t * self.per_period_delta


@dataclass(frozen=True)
class DriftSpec:
    """Drift schedule for every noise parameter over n_periods periods.

    Period 0 is the calibration point; realized noise exists for
    t in 1..n_periods.
    """

    spam: tuple[ParamDrift, ...]
    xc: ParamDrift
    xt: ParamDrift
    n_periods: int
    x_max: float = DEFAULT_X_MAX

    def __post_init__(self):
        object.__setattr__(self, "spam", tuple(self.spam))
        if self.n_periods < 1:
            raise ValueError("n_periods must be >= 1")
        for name, drift, lo, hi in self._entries():
            if drift.variance < 0:
                raise ValueError(f"{name}: variance must be >= 0")
            strict_lo = name.startswith("f")  # fidelities exclude 0.5 itself
            for t in range(self.n_periods + 1):
                mu = drift.mean(t)
                in_range = (lo < mu <= hi) if strict_lo else (lo <= mu <= hi)
                if not in_range:
                    raise ValueError(f"{name}: mean {mu} at period {t} outside range")
                if drift.variance > 0 and drift.variance >= mu * (1.0 - mu):
                    raise ValueError(
                        f"{name}: variance {drift.variance} not Beta-representable "
                        f"at period {t} (mean {mu})"
                    )

    def _entries(self):
        for q, drift in enumerate(self.spam):
            yield f"f{q}", drift, 0.5, 1.0
        yield "xc", self.xc, 0.0, self.x_max
        yield "xt", self.xt, 0.0, self.x_max

    def entry(self, param: str) -> ParamDrift:
        if param == "xc":
            return self.xc
        if param == "xt":
            return self.xt
        if param.startswith("f"):
            q = int(param[1:])
            if 0 <= q < len(self.spam):
                return self.spam[q]
        raise ValueError(f"unknown parameter {param!r}")


def drift_mean(spec: DriftSpec, param: str, t: int) -> float:
    """Scheduled mean of one parameter ("f0".."fN", "xc", "xt") at period t."""
    if not 0 <= t <= spec.n_periods:
        raise ValueError(f"period {t} outside 0..{spec.n_periods}")
    return spec.entry(param).mean(t)


@dataclass(frozen=True)
class NoiseTrajectory:
    """Realized NoiseParams for each period t in 1..n_periods plus the seed."""

    params_by_period: tuple[NoiseParams, ...]
    seed: int


def _draw(drift: ParamDrift, t: int, rng: np.random.Generator) -> float:
    mu = drift.mean(t)
    if drift.variance == 0.0:
        return mu
    # Beta parameters from mean/variance; same closed form as
    # bayes.beta_from_mean_var (imported lazily there to avoid a cycle).
    from .bayes import beta_from_mean_var

    post = beta_from_mean_var(mu, drift.variance)
    return float(rng.beta(post.alpha, post.beta))


def sample_period_params(spec: DriftSpec, t: int, rng: np.random.Generator) -> NoiseParams:
    """Draw one period's NoiseParams; draw order is f_0..f_{n-1}, xc, xt."""
    if not 0 <= t <= spec.n_periods:
        raise ValueError(f"period {t} outside 0..{spec.n_periods}")
    spam = tuple(
        float(np.clip(_draw(d, t, rng), 0.5 + 1e-9, 1.0)) for d in spec.spam
    )
    xc = float(np.clip(_draw(spec.xc, t, rng), 0.0, spec.x_max))
    xt = float(np.clip(_draw(spec.xt, t, rng), 0.0, spec.x_max))
    return NoiseParams(spam, xc, xt, x_max=spec.x_max)


def period_rng(seed: int, t: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for (seed, period, stream); periods can be
    generated out of order with identical results."""
    return np.random.default_rng(np.random.SeedSequence((seed, t, stream)))


def realize_trajectory(spec: DriftSpec, seed: int) -> NoiseTrajectory:
    params = tuple(
        sample_period_params(spec, t, period_rng(seed, t))
        for t in range(1, spec.n_periods + 1)
    )
    return NoiseTrajectory(params, seed)
