"""Conjugate tracking of drifting noise parameters from measured counts.

Qubits without CNOT involvement follow a Beta-binomial chain: the observed
bit matches its noiseless value exactly with probability f_q, so counting
matches of the ideal bit gives a conjugate update whose posterior mean is
the refreshed fidelity. The update direction follows the likelihood
f^successes (1-f)^(L-successes) with successes = matches of the ideal bit.

The CNOT-coupled block (control qubits + ancilla) is tracked through the
joint outcome distribution on those qubits: a Dirichlet posterior over the
outcome probabilities, whose marginal means feed a grid least-squares
inversion of a multilinear forward map fitted from the exact simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .circuit import (
    CircuitSpec,
    correlated_qubits,
    exact_distribution_raw,
    ideal_bits,
    uncorrelated_qubits,
)
from .errors import ModelMismatchError, UnrepresentableMomentsError
from .noise import NoiseParams
from .pec import QuasiProbabilityDistribution, composite_qpd
from .qsim import CountsTable, marginal_vector, outcome_bits


@dataclass(frozen=True)
class BetaPosterior:
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self) -> float:
        s = self.alpha + self.beta
        return self.alpha * self.beta / (s * s * (s + 1.0))


def beta_from_mean_var(mu: float, v: float) -> BetaPosterior:
    """Beta distribution with the requested mean and variance.

    alpha = mu * (mu(1-mu)/v - 1), beta = (1-mu) * (mu(1-mu)/v - 1).
    """
    if not 0.0 < mu < 1.0:
        raise UnrepresentableMomentsError(f"mean {mu} outside (0, 1)")
    if not 0.0 < v < mu * (1.0 - mu):
        raise UnrepresentableMomentsError(
            f"variance {v} outside (0, mu(1-mu)={mu * (1 - mu)})"
        )
    scale = mu * (1.0 - mu) / v - 1.0
    return BetaPosterior(mu * scale, (1.0 - mu) * scale)


def beta_update(prior: BetaPosterior, successes: int, total: int) -> BetaPosterior:
    """Conjugate binomial update: alpha += successes, beta += failures."""
    if successes < 0 or total < 0 or successes > total:
        raise ValueError(f"need 0 <= successes <= total, got {successes}/{total}")
    return BetaPosterior(prior.alpha + successes, prior.beta + (total - successes))


@dataclass(frozen=True)
class DirichletPosterior:
    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 1 or a.size < 2:
            raise ValueError("Dirichlet needs a 1-d parameter vector of size >= 2")
        if np.any(a <= 0):
            raise ValueError("Dirichlet parameters must all be positive")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def means(self) -> np.ndarray:
        return self.a / self.a.sum()


def dirichlet_update(prior: DirichletPosterior, counts: np.ndarray) -> DirichletPosterior:
    """Conjugate multinomial update: a_i += counts_i."""
    counts = np.asarray(counts)
    if counts.shape != prior.a.shape:
        raise ValueError(f"counts shape {counts.shape} does not match {prior.a.shape}")
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")
    return DirichletPosterior(prior.a + counts)


def dirichlet_marginal_moments(post: DirichletPosterior, i: int) -> tuple[float, float, BetaPosterior]:
    """Mean, variance, and Beta marginal of component i."""
    if not 0 <= i < post.a.size:
        raise ValueError(f"component {i} out of range")
    total = post.a.sum()
    ai = post.a[i]
    mean = ai / total
    var = ai * (total - ai) / (total**2 * (1.0 + total))
    return float(mean), float(var), BetaPosterior(float(ai), float(total - ai))


@dataclass(frozen=True)
class ForwardMap:
    """Multilinear map from (f_control, f_target, x_control, x_target) to
    the joint outcome distribution on the correlated qubit pair.

    coeffs[i, a, b, c, d] is the monomial coefficient of
    f_control^a f_target^b x_control^c x_target^d for outcome i, outcomes
    ordered 00, 01, 10, 11 (control bit first).
    """

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (4, 2, 2, 2, 2):
            raise ValueError(f"coefficient tensor shape {coeffs.shape}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    def evaluate(self, theta) -> np.ndarray:
        """Outcome probabilities at one parameter point."""
        axes = [np.asarray([v], dtype=float) for v in theta]
        return np.array(
            [_eval_outcome_grid(self.coeffs[i], axes)[0, 0, 0, 0] for i in range(4)]
        )

    def evaluate_grid(self, f_c, f_t, x_c, x_t) -> np.ndarray:
        """Probabilities over a parameter product grid, shape (4, |f_c|, |f_t|, |x_c|, |x_t|)."""
        axes = [np.asarray(a, dtype=float) for a in (f_c, f_t, x_c, x_t)]
        return np.stack([_eval_outcome_grid(self.coeffs[i], axes) for i in range(4)])


def _eval_outcome_grid(coeffs: np.ndarray, axes: list[np.ndarray]) -> np.ndarray:
    # Shared by point and grid evaluation so both round identically.
    out = coeffs
    for vals in axes:
        stacked = np.stack([np.ones_like(vals), vals])
        out = np.tensordot(out, stacked, axes=([0], [0]))
    return out


def fit_forward_map(simulator, probes: int = 8, tol: float = 1e-8) -> ForwardMap:
    """Fit the multilinear coefficients from the 2^4 unit-box corners.

    `simulator` maps (f_control, f_target, x_control, x_target) to the
    4-outcome distribution on the correlated pair. Each parameter enters
    its channel affinely, so corner evaluations determine the map exactly;
    deterministic random probes verify multilinearity and raise
    ModelMismatchError beyond `tol`.
    """
    values = np.empty((4, 2, 2, 2, 2))
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                for d in (0, 1):
                    dist = np.asarray(simulator(float(a), float(b), float(c), float(d)))
                    if dist.shape != (4,):
                        raise ValueError("simulator must return 4 outcome probabilities")
                    values[:, a, b, c, d] = dist
    # Moebius inversion: difference along each parameter axis turns corner
    # values into monomial coefficients.
    coeffs = values.copy()
    for axis in range(1, 5):
        hi = [slice(None)] * 5
        lo = [slice(None)] * 5
        hi[axis], lo[axis] = 1, 0
        coeffs[tuple(hi)] -= coeffs[tuple(lo)]
    fmap = ForwardMap(coeffs)

    rng = np.random.default_rng(714025)
    for _ in range(probes):
        theta = rng.uniform(0.0, 1.0, size=4)
        predicted = fmap.evaluate(theta)
        actual = np.asarray(simulator(*theta))
        residual = float(np.max(np.abs(predicted - actual)))
        if residual > tol:
            raise ModelMismatchError(
                f"multilinear model violated: residual {residual:.3g} at theta={theta}"
            )
    return fmap


def pair_marginal_simulator(circuit: CircuitSpec):
    """Simulator closure for fit_forward_map: exact distribution of the
    undecorated circuit with every uncorrelated qubit noiseless,
    marginalized onto the correlated pair."""
    corr = correlated_qubits(circuit)
    if len(corr) != 2:
        raise ValueError(
            f"forward map needs exactly one CNOT control plus ancilla, got {corr}"
        )

    def simulate(f_control, f_target, x_control, x_target):
        spam = [1.0] * circuit.n_qubits
        spam[corr[0]] = float(f_control)
        spam[corr[1]] = float(f_target)
        dist = exact_distribution_raw(circuit, tuple(spam), float(x_control), float(x_target))
        return marginal_vector(dist, circuit.n_qubits, corr)

    return simulate


@dataclass(frozen=True)
class GridSpec:
    """Search grid for the forward-map inversion.

    Fidelity bounds start at 0.5 to cut the f <-> 1-f symmetry of the
    readout channel. Each refinement level re-grids a one-step box around
    the incumbent at a tenth of the spacing.
    """

    f_lo: float = 0.5
    f_hi: float = 1.0
    f_step: float = 0.01
    x_lo: float = 0.0
    x_hi: float = 0.25
    x_step: float = 0.005
    refine_levels: int = 0

    def __post_init__(self):
        if self.f_step <= 0 or self.x_step <= 0:
            raise ValueError("grid spacing must be positive")
        if not 0.0 <= self.f_lo < self.f_hi <= 1.0:
            raise ValueError("fidelity bounds must satisfy 0 <= lo < hi <= 1")
        if not 0.0 <= self.x_lo < self.x_hi <= 1.0:
            raise ValueError("depolarizing bounds must satisfy 0 <= lo < hi <= 1")
        if self.refine_levels < 0:
            raise ValueError("refine_levels must be >= 0")

    def f_axis(self) -> np.ndarray:
        return _axis(self.f_lo, self.f_hi, self.f_step)

    def x_axis(self) -> np.ndarray:
        return _axis(self.x_lo, self.x_hi, self.x_step)


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    if n < 1:
        raise ValueError(f"grid [{lo}, {hi}] has no step of size {step}")
    return lo + step * np.arange(n + 1)


@dataclass(frozen=True)
class InversionResult:
    f_control: float
    f_target: float
    x_control: float
    x_target: float
    mse: float

    @property
    def theta(self) -> tuple[float, float, float, float]:
        return (self.f_control, self.f_target, self.x_control, self.x_target)


_GRID_PROB_CACHE: dict = {}


def _grid_outcome_probs(fmap: ForwardMap, axes: list[np.ndarray], cache_key=None):
    if cache_key is not None and cache_key in _GRID_PROB_CACHE:
        return _GRID_PROB_CACHE[cache_key]
    probs = [_eval_outcome_grid(fmap.coeffs[i], axes) for i in range(4)]
    if cache_key is not None:
        _GRID_PROB_CACHE.clear()  # grids are large; hold one at a time
        _GRID_PROB_CACHE[cache_key] = probs
    return probs


def _argmin_on_axes(
    targets: np.ndarray, fmap: ForwardMap, axes: list[np.ndarray], cache_key=None
):
    probs = _grid_outcome_probs(fmap, axes, cache_key)
    mse = None
    for i in range(4):
        term = (probs[i] - targets[i]) ** 2
        mse = term if mse is None else mse + term
    flat = int(np.argmin(mse))  # first occurrence = lexicographically smallest theta
    idx = np.unravel_index(flat, mse.shape)
    theta = tuple(float(axes[d][idx[d]]) for d in range(4))
    return theta, float(mse[idx])


def invert_forward_map(
    targets: np.ndarray, fmap: ForwardMap, grid: GridSpec
) -> InversionResult:
    """Grid point minimizing the squared distance to the target outcome
    probabilities; exact ties resolve to the lexicographically smallest
    point. Optional refinement re-grids around the incumbent."""
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (4,):
        raise ValueError(f"need 4 target probabilities, got shape {targets.shape}")
    if abs(targets.sum() - 1.0) > 1e-6:
        raise ValueError(f"targets sum to {targets.sum()}, not 1 within 1e-6")
    if targets.min() < -1e-9:
        raise ValueError(f"negative target probability {targets.min():.3g}")

    axes = [grid.f_axis(), grid.f_axis(), grid.x_axis(), grid.x_axis()]
    steps = [grid.f_step, grid.f_step, grid.x_step, grid.x_step]
    bounds = [
        (grid.f_lo, grid.f_hi),
        (grid.f_lo, grid.f_hi),
        (grid.x_lo, grid.x_hi),
        (grid.x_lo, grid.x_hi),
    ]
    # Repeated inversions on the same map and grid (one per period) reuse
    # the grid's probability tensors.
    cache_key = (fmap.coeffs.tobytes(), grid)
    theta, mse = _argmin_on_axes(targets, fmap, axes, cache_key)
    for _ in range(grid.refine_levels):
        new_axes = []
        for d in range(4):
            lo = max(bounds[d][0], theta[d] - steps[d])
            hi = min(bounds[d][1], theta[d] + steps[d])
            steps[d] = steps[d] / 10.0
            new_axes.append(_axis(lo, hi, steps[d]))
        axes = new_axes
        theta, mse = _argmin_on_axes(targets, fmap, axes)
    return InversionResult(*theta, mse)


@dataclass(frozen=True)
class EstimatorState:
    """Posterior state of the noise tracker after some number of periods."""

    betas: tuple[BetaPosterior, ...]
    dirichlet: DirichletPosterior
    ideal: np.ndarray
    uncorrelated: tuple[int, ...]
    correlated: tuple[int, ...]
    params: NoiseParams


def init_estimator_state(
    circuit: CircuitSpec,
    spam_means,
    spam_variances,
    xc_mean: float,
    xt_mean: float,
    dirichlet_pseudocount: float = 10.0,
    dirichlet_floor: float = 1e-6,
) -> EstimatorState:
    """Priors from calibration moments.

    Beta priors cover the uncorrelated qubits; the Dirichlet prior centers
    on the noiseless pair outcome scaled by a pseudo-count, floored at a
    small positive value so every component stays legal.
    """
    spam_means = tuple(float(v) for v in spam_means)
    spam_variances = tuple(float(v) for v in spam_variances)
    if len(spam_means) != circuit.n_qubits or len(spam_variances) != circuit.n_qubits:
        raise ValueError("need one prior mean and variance per qubit")
    uncorr = uncorrelated_qubits(circuit)
    corr = correlated_qubits(circuit)
    betas = tuple(beta_from_mean_var(spam_means[q], spam_variances[q]) for q in uncorr)

    if corr:
        bits = ideal_bits(circuit.secret)
        m = len(corr)
        noiseless = np.zeros(2**m)
        pair_outcome = sum(int(bits[q]) << (m - 1 - pos) for pos, q in enumerate(corr))
        noiseless[pair_outcome] = 1.0
        a = np.maximum(dirichlet_pseudocount * noiseless, dirichlet_floor)
        dirichlet = DirichletPosterior(a)
    else:
        dirichlet = DirichletPosterior(np.ones(2))  # placeholder, never updated

    params = NoiseParams(spam_means, float(xc_mean), float(xt_mean))
    return EstimatorState(betas, dirichlet, ideal_bits(circuit.secret), uncorr, corr, params)


def adaptive_update(
    state: EstimatorState,
    counts: CountsTable,
    fmap: ForwardMap | None,
    grid: GridSpec,
    circuit: CircuitSpec,
) -> tuple[EstimatorState, NoiseParams, QuasiProbabilityDistribution]:
    """One period's refresh from the undecorated circuit's counts.

    Beta chains absorb per-qubit ideal-bit matches; the Dirichlet chain
    absorbs the correlated pair's outcome counts, its marginal means are
    inverted through the forward map, and the decomposition is rebuilt
    from the refreshed point estimates.
    """
    if counts.n_qubits != circuit.n_qubits:
        raise ValueError("counts/circuit qubit count mismatch")
    vec = counts.to_vector()
    total = counts.total_shots
    bits = outcome_bits(circuit.n_qubits)

    new_betas = []
    spam = list(state.params.spam)
    for pos, q in enumerate(state.uncorrelated):
        successes = int(vec[bits[:, q] == state.ideal[q]].sum())
        post = beta_update(state.betas[pos], successes, total)
        new_betas.append(post)
        spam[q] = post.mean

    dirichlet = state.dirichlet
    xc, xt = state.params.xc, state.params.xt
    if state.correlated:
        if fmap is None:
            raise ValueError("forward map required when the circuit has CNOTs")
        if len(state.correlated) != 2:
            raise ValueError(
                "adaptive correlated-block update supports a single CNOT "
                f"(control + ancilla), got qubits {state.correlated}"
            )
        pair_counts = marginal_vector(vec, circuit.n_qubits, state.correlated)
        dirichlet = dirichlet_update(dirichlet, pair_counts)
        inversion = invert_forward_map(dirichlet.means, fmap, grid)
        control, ancilla = state.correlated
        spam[control] = inversion.f_control
        spam[ancilla] = inversion.f_target
        xc, xt = inversion.x_control, inversion.x_target

    params = NoiseParams(tuple(spam), xc, xt, x_max=state.params.x_max)
    qpd = composite_qpd(params, circuit)
    new_state = replace(state, betas=tuple(new_betas), dirichlet=dirichlet, params=params)
    return new_state, params, qpd
