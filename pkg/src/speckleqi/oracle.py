"""Truncated-Fock-space brute-force engine for quantum state discrimination.

Everything here is desk scale by design: states live in an explicitly
truncated Fock space, minimum error probabilities come from dense Hermitian
eigendecomposition, and the Chernoff quantity is minimized by golden-section
search. The point is to cross-validate the closed-form receiver analysis, not
to scale; background brightness around 1 is the practical ceiling (the
closed forms under test are generic in N_B, so surrogate noise levels are
representative).

Conventions:
- Single-mode operators are dim x dim in the photon-number basis.
- Two-mode states order the return (or signal) mode first and the idler mode
  second; the joint index is n_return * dim_idler + n_idler.
- Quadratures are q = (a + a^dag)/2, p = (a - a^dag)/(2i), so a vacuum mode
  has variance 1/4 per quadrature and a thermal mode (2*nbar + 1)/4.
- Thermal and displaced-thermal constructors do NOT renormalize: the missing
  tail weight is recorded as a trace deficit. The two-mode squeezed vacuum is
  a normalized ket (so it is exactly pure); its pre-normalization tail weight
  is recorded the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from ._golden import golden_section_min
from .params import FadingModel, FadingKind, SystemParams, fading_pdf

_HERM_TOL = 1e-12
_EIG_FLOOR = -1e-10


class TruncationTooSmall(ValueError):
    """The requested truncation drops more weight than the tolerance allows."""

    def __init__(self, message: str, suggested_dim: int = None):
        self.suggested_dim = suggested_dim
        if suggested_dim is not None:
            message = f"{message} (suggested dim: {suggested_dim})"
        super().__init__(message)


class ResourceGuard(RuntimeError):
    """A brute-force computation would exceed the configured memory budget."""


@dataclass
class DensityMatrix:
    """Hermitian PSD operator on a truncated Fock space, trace close to 1.

    dims gives the per-mode truncation dimensions; data is the
    prod(dims) x prod(dims) complex matrix. trace_deficit records the weight
    lost to truncation (states are not silently renormalized; see module
    docstring).
    """

    data: np.ndarray
    dims: tuple
    trace_deficit: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        self.dims = tuple(int(d) for d in self.dims)
        n = int(np.prod(self.dims))
        if self.data.shape != (n, n):
            raise ValueError(f"data shape {self.data.shape} does not match dims {self.dims}")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def renormalized(self) -> "DensityMatrix":
        return DensityMatrix(self.data / self.trace(), self.dims, self.trace_deficit)

    def psd_clamped(self) -> "DensityMatrix":
        """Zero out tiny negative eigenvalues; error on genuinely negative ones."""
        w, v = np.linalg.eigh(self.data)
        if w.min() < _EIG_FLOOR:
            raise ValueError(f"state is not positive semidefinite (min eigenvalue {w.min():g})")
        if w.min() >= 0.0:
            return self
        w = np.clip(w, 0.0, None)
        return DensityMatrix((v * w) @ v.conj().T, self.dims, self.trace_deficit)

    def validate(self, trace_deficit_tol: float = 1e-6) -> None:
        herm = np.abs(self.data - self.data.conj().T).max()
        if herm > _HERM_TOL:
            raise ValueError(f"not Hermitian: max asymmetry {herm:g}")
        w = np.linalg.eigvalsh(self.data)
        if w.min() < _EIG_FLOOR:
            raise ValueError(f"negative eigenvalue {w.min():g} below clamp floor")
        if abs(1.0 - self.trace()) > trace_deficit_tol + 1e-12:
            raise ValueError(f"trace {self.trace():.12g} misses 1 by more than {trace_deficit_tol:g}")


@dataclass(frozen=True)
class DiscriminationReport:
    """Single-copy discrimination summary: exact error and Chernoff quantities."""

    helstrom_error: float
    qcb_exponent: float
    optimal_s: float


@dataclass(frozen=True)
class CovarianceMatrix:
    """4x4 Wigner covariance of the (return, idler) mode pair, plus the
    phase-sensitive cross-correlation scalar c_p = sqrt(kappa*N_S*(N_S+1))."""

    matrix: np.ndarray
    c_p: float


# =============================================================================
# Truncation sizing
# =============================================================================

def dim_for_tail(nbar: float, tail_tol: float) -> int:
    """Smallest dim whose thermal tail weight (nbar/(nbar+1))^dim is <= tail_tol."""
    if nbar <= 0.0:
        return 2
    q = nbar / (nbar + 1.0)
    return max(2, math.ceil(math.log(tail_tol) / math.log(q)))


def default_dim(nbar: float) -> int:
    """Moment-safe default truncation: mean + 8 standard deviations + margin."""
    return math.ceil(nbar + 8.0 * math.sqrt(nbar * (nbar + 1.0)) + 6.0)


# =============================================================================
# State constructors
# =============================================================================

def _destroy(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


def _thermal_weights(nbar: float, dim: int) -> np.ndarray:
    n = np.arange(dim, dtype=float)
    if nbar == 0.0:
        w = np.zeros(dim)
        w[0] = 1.0
        return w
    log_w = n * math.log(nbar) - (n + 1.0) * math.log(nbar + 1.0)
    return np.exp(log_w)


def _thermal_tail(nbar: float, dim: int) -> float:
    if nbar == 0.0:
        return 0.0
    return math.exp(dim * (math.log(nbar) - math.log(nbar + 1.0)))


def thermal_state(nbar: float, dim: int, trace_deficit_tol: float = 1e-6) -> DensityMatrix:
    """Thermal (Bose-Einstein) state, diagonal weights nbar^n/(nbar+1)^(n+1)."""
    if nbar < 0.0:
        raise ValueError("nbar must be >= 0")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    deficit = _thermal_tail(nbar, dim)
    if deficit > trace_deficit_tol:
        raise TruncationTooSmall(
            f"thermal({nbar:g}) at dim {dim} drops {deficit:.3g} > {trace_deficit_tol:g}",
            suggested_dim=dim_for_tail(nbar, trace_deficit_tol),
        )
    return DensityMatrix(np.diag(_thermal_weights(nbar, dim)).astype(complex), (dim,), deficit)


def displacement_operator(alpha: complex, dim: int) -> np.ndarray:
    """exp(alpha*a^dag - conj(alpha)*a) on the truncated space (exactly unitary)."""
    a = _destroy(dim)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def coherent_thermal_state(alpha: complex, nbar: float, dim: int,
                           trace_deficit_tol: float = 1e-6) -> DensityMatrix:
    """Displaced thermal state D(alpha) rho_th(nbar) D(alpha)^dag.

    nbar = 0 gives the pure coherent state |alpha>. The truncation must hold
    the displaced content with margin: photon-number mean |alpha|^2 + nbar
    and variance |alpha|^2*(2*nbar+1) + nbar*(nbar+1) must sit 8 sigma inside
    dim, since the (unitary) truncated displacement wraps rather than clips.
    """
    amp2 = abs(alpha) ** 2
    mean = amp2 + nbar
    var = amp2 * (2.0 * nbar + 1.0) + nbar * (nbar + 1.0)
    required = math.ceil(mean + 8.0 * math.sqrt(var) + 6.0)
    if dim < required:
        raise TruncationTooSmall(
            f"coherent_thermal(|alpha|^2={amp2:g}, nbar={nbar:g}) needs headroom at dim {dim}",
            suggested_dim=required,
        )
    th = thermal_state(nbar, dim, trace_deficit_tol)
    d_op = displacement_operator(alpha, dim)
    return DensityMatrix(d_op @ th.data @ d_op.conj().T, (dim,), th.trace_deficit)


def tmsv_state(n_s: float, dim: int, trace_deficit_tol: float = 1e-6) -> DensityMatrix:
    """Two-mode squeezed vacuum with per-mode brightness n_s, as a normalized ket.

    Schmidt amplitudes sqrt(n_s^n/(n_s+1)^(n+1)) on |n, n>; the truncated ket
    is renormalized so the state is exactly pure, with the discarded tail
    weight recorded as the trace deficit.
    """
    if n_s < 0.0:
        raise ValueError("n_s must be >= 0")
    deficit = _thermal_tail(n_s, dim)
    if deficit > trace_deficit_tol:
        raise TruncationTooSmall(
            f"tmsv({n_s:g}) at dim {dim} drops {deficit:.3g} > {trace_deficit_tol:g}",
            suggested_dim=dim_for_tail(n_s, trace_deficit_tol),
        )
    amps = np.sqrt(_thermal_weights(n_s, dim))
    psi = np.zeros(dim * dim, dtype=complex)
    psi[np.arange(dim) * dim + np.arange(dim)] = amps
    psi /= np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi.conj()), (dim, dim), deficit)


def partial_trace(dm: DensityMatrix, keep: int) -> DensityMatrix:
    """Marginal of a two-mode state on the kept mode (0 or 1)."""
    d0, d1 = dm.dims
    rho = dm.data.reshape(d0, d1, d0, d1)
    if keep == 0:
        out = np.einsum("ikjk->ij", rho)
        return DensityMatrix(out, (d0,), dm.trace_deficit)
    out = np.einsum("kikj->ij", rho)
    return DensityMatrix(out, (d1,), dm.trace_deficit)


def tensor_power(dm: DensityMatrix, m: int) -> DensityMatrix:
    """m-fold tensor power (copies share no correlations)."""
    out = dm.data
    for _ in range(m - 1):
        out = np.kron(out, dm.data)
    return DensityMatrix(out, dm.dims * m, 1.0 - (1.0 - dm.trace_deficit) ** m)


def rotate_return_phase(dm: DensityMatrix, angle: float) -> DensityMatrix:
    """Apply exp(i*angle*n) to the first (return) mode of a two-mode state."""
    d0, d1 = dm.dims
    phases = np.exp(1j * angle * np.repeat(np.arange(d0), d1))
    data = dm.data * phases[:, None] * phases.conj()[None, :]
    return DensityMatrix(data, dm.dims, dm.trace_deficit)


# =============================================================================
# Beam-splitter return channel
# =============================================================================
#
# a_R = sqrt(kappa) e^{i phi} a_S + sqrt(1-kappa) a_B, with a_B thermal. The
# unitary is applied sector by sector (total photon number is conserved), with
# each matrix element evaluated in log space, so a hot environment mode needs
# only a long loop, never a big matrix.

def _bs_amplitude_matrix(k: int, d_sig: int, r_max: int, kappa: float) -> np.ndarray:
    """Real part of <r, n+k-r| U |n, k> for the zero-phase beam splitter.

    Rows r in [0, r_max), columns n in [0, d_sig). The phase-phi unitary
    differs only by a factor e^{i*phi*(r-k)} per row, applied by the caller.
    """
    if kappa == 0.0:
        out = np.zeros((r_max, d_sig))
        if k < r_max:
            out[k, :] = (-1.0) ** np.arange(d_sig)
        return out
    if kappa == 1.0:
        out = np.zeros((r_max, d_sig))
        rng = np.arange(min(d_sig, r_max))
        out[rng, rng] = 1.0
        return out
    lk = 0.5 * math.log(kappa)
    l1k = 0.5 * math.log1p(-kappa)
    r = np.arange(r_max)[:, None, None]
    n = np.arange(d_sig)[None, :, None]
    p = np.arange(min(d_sig, r_max))[None, None, :]
    s = n + k - r
    valid = (s >= 0) & (p <= np.minimum(n, r)) & (p >= np.maximum(0, r - k))
    pc = np.where(valid, p, 0)
    log_mag = (
        gammaln(n + 1) - gammaln(pc + 1) - gammaln(n - pc + 1)
        + gammaln(k + 1) - gammaln(r - pc + 1) - gammaln(np.maximum(k - r + pc, 0) + 1)
        + (2 * pc + k - r) * lk + (n + r - 2 * pc) * l1k
        + 0.5 * (gammaln(r + 1) + gammaln(np.maximum(s, 0) + 1) - gammaln(n + 1) - gammaln(k + 1))
    )
    sign = np.where((n - pc) % 2 == 0, 1.0, -1.0)
    terms = np.where(valid, sign * np.exp(log_mag), 0.0)
    return terms.sum(axis=2)


def apply_return_channel(state: DensityMatrix, kappa: float, phi: float, n_b_eff: float,
                         out_dim: int = None, trace_deficit_tol: float = 1e-6,
                         env_tail_tol: float = 1e-12, max_env_dim: int = 4096,
                         max_out_dim: int = 256) -> DensityMatrix:
    """Mix the signal mode of a two-mode state with a thermal environment.

    The signal mode passes a transmissivity-kappa beam splitter with phase phi
    against a thermal mode of brightness n_b_eff (the caller picks n_b_eff per
    hypothesis: N_B for target absent, N_B/(1-kappa) for target present); the
    environment is traced out and the idler is untouched. out_dim truncates
    the returned mode; by default it is sized to hold the full output
    exactly. kappa = 0 returns thermal(n_b_eff) (x) idler-marginal.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    if state.n_modes != 2:
        raise ValueError("expected a two-mode (signal, idler) state")
    d_sig, d_idl = state.dims

    if kappa == 1.0:
        out = rotate_return_phase(state, phi)
        if out_dim is not None and out_dim < d_sig:
            raise TruncationTooSmall("lossless return cannot be truncated below the signal dim",
                                     suggested_dim=d_sig)
        return out

    if not n_b_eff >= 0.0 or not math.isfinite(n_b_eff):
        raise ValueError("n_b_eff must be finite and >= 0")
    d_env = dim_for_tail(n_b_eff, env_tail_tol)
    if d_env > max_env_dim:
        raise TruncationTooSmall(
            f"environment at n_b_eff={n_b_eff:g} needs dim {d_env} on the enlarged space",
            suggested_dim=d_env,
        )
    full_out = d_sig + d_env - 1
    d_out = full_out if out_dim is None else int(out_dim)
    if d_out > max_out_dim:
        raise TruncationTooSmall(
            f"output mode dim {d_out} exceeds the cap {max_out_dim}; pass out_dim explicitly",
            suggested_dim=max_out_dim,
        )

    env_w = _thermal_weights(n_b_eff, d_env)
    rho_in = state.data.reshape(d_sig, d_idl, d_sig, d_idl)
    out = np.zeros((d_out, d_idl, d_out, d_idl), dtype=complex)
    row_phase = np.exp(1j * phi * np.arange(d_out))
    for k in range(d_env):
        amp = _bs_amplitude_matrix(k, d_sig, d_out, kappa) * (row_phase * np.exp(-1j * phi * k))[:, None]
        # environment output level e fixes the (signal -> return) index shift
        for e in range(max(0, k - d_out + 1), k + d_sig):
            n_lo = max(0, e - k)
            n_hi = min(d_sig - 1, e - k + d_out - 1)
            if n_hi < n_lo:
                continue
            ns = np.arange(n_lo, n_hi + 1)
            rs = ns + k - e
            v = env_w[k] ** 0.5 * amp[rs, ns]
            block = rho_in[n_lo:n_hi + 1, :, n_lo:n_hi + 1, :]
            out[rs[0]:rs[-1] + 1, :, rs[0]:rs[-1] + 1, :] += (
                v[:, None, None, None] * v.conj()[None, None, :, None] * block
            )
    out = out.reshape(d_out * d_idl, d_out * d_idl)
    out = 0.5 * (out + out.conj().T)
    result = DensityMatrix(out, (d_out, d_idl))
    deficit = 1.0 - result.trace()
    result.trace_deficit = deficit
    if deficit > trace_deficit_tol:
        raise TruncationTooSmall(
            f"return channel output drops {deficit:.3g} > {trace_deficit_tol:g} "
            f"(out_dim {d_out})",
            suggested_dim=full_out,
        )
    return result


def hypothesis_state(params: SystemParams, kappa: float, phi: float, dim: int,
                     present: bool, out_dim: int = None,
                     trace_deficit_tol: float = 1e-6) -> DensityMatrix:
    """Conditional (return, idler) state of one mode pair given the fading draw.

    Target absent ignores (kappa, phi); target present uses the convention
    that the background reaching the receiver carries brightness N_B
    regardless of kappa, i.e. the environment mode is thermal(N_B/(1-kappa)).
    """
    tmsv = tmsv_state(params.N_S, dim, trace_deficit_tol)
    if not present:
        return apply_return_channel(tmsv, 0.0, 0.0, params.N_B, out_dim=out_dim,
                                    trace_deficit_tol=trace_deficit_tol)
    n_b_eff = params.N_B if kappa == 1.0 else params.N_B / (1.0 - kappa)
    return apply_return_channel(tmsv, kappa, phi, n_b_eff, out_dim=out_dim,
                                trace_deficit_tol=trace_deficit_tol)


# =============================================================================
# Fading average (the unconditional states)
# =============================================================================

class _PairwiseAccumulator:
    """Binary-counter pairwise summation: order-stable to ~1e-16 per level,
    O(log n) extra memory."""

    def __init__(self):
        self._levels = []

    def add(self, arr: np.ndarray) -> None:
        carry = arr
        for i, slot in enumerate(self._levels):
            if slot is None:
                self._levels[i] = carry
                return
            carry = slot + carry
            self._levels[i] = None
        self._levels.append(carry)

    def total(self) -> np.ndarray:
        acc = None
        for slot in self._levels:
            if slot is None:
                continue
            acc = slot if acc is None else acc + slot
        return acc


def quadrature_grid(model: FadingModel, nodes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(amplitudes, phases, weights[i, j]) for averaging over a random fading model.

    Gauss-Legendre in amplitude on [0, 1] with the fading pdf folded into the
    weights; uniform (trapezoid on a periodic domain) in phase. Weights sum to
    the pdf mass captured on [0, 1] (all of it for the truncated kind).
    """
    if not model.is_random:
        raise ValueError("quadrature over a deterministic fading model")
    if isinstance(nodes, int):
        n_amp = n_phase = nodes
    else:
        n_amp, n_phase = nodes
    if n_amp < 8 or n_phase < 8:
        raise ValueError("need at least 8 quadrature nodes per dimension")
    xs, ws = np.polynomial.legendre.leggauss(n_amp)
    amps = 0.5 * (xs + 1.0)
    amp_w = 0.5 * ws * np.array([fading_pdf(model, a) for a in amps])
    phases = 2.0 * np.pi * np.arange(n_phase) / n_phase
    weights = amp_w[:, None] * np.full(n_phase, 1.0 / n_phase)[None, :]
    return amps, phases, weights


def fading_average(state_builder, model: FadingModel, quadrature_nodes) -> DensityMatrix:
    """Average state_builder(amplitude, phase) over the fading distribution.

    Returns the renormalized (trace-1) unconditional state; the
    pre-renormalization trace shortfall (quadrature mass outside [0, 1] plus
    per-node truncation deficits) is recorded as the trace deficit.
    """
    amps, phases, weights = quadrature_grid(model, quadrature_nodes)
    acc = _PairwiseAccumulator()
    dims = None
    for i, amp in enumerate(amps):
        for j, ph in enumerate(phases):
            dm = state_builder(amp, ph)
            if dims is None:
                dims = dm.dims
            elif dm.dims != dims:
                raise ValueError("state_builder returned inconsistent dimensions")
            acc.add(weights[i, j] * dm.data)
    data = acc.total()
    raw_trace = float(np.trace(data).real)
    out = DensityMatrix(data / raw_trace, dims, abs(1.0 - raw_trace))
    return out


# =============================================================================
# Discrimination
# =============================================================================

def helstrom(rho0: DensityMatrix, rho1: DensityMatrix, pi0: float) -> float:
    """Minimum error probability (1 - ||pi1*rho1 - pi0*rho0||_1)/2."""
    if rho0.data.shape != rho1.data.shape:
        raise ValueError("states must share a dimension")
    if not 0.0 <= pi0 <= 1.0:
        raise ValueError("pi0 must lie in [0, 1]")
    pi1 = 1.0 - pi0
    w = np.linalg.eigvalsh(pi1 * rho1.data - pi0 * rho0.data)
    pr_e = 0.5 * (1.0 - np.abs(w).sum())
    return float(min(max(pr_e, 0.0), min(pi0, pi1)))


def _chernoff_objective(rho0: DensityMatrix, rho1: DensityMatrix):
    w0, v0 = np.linalg.eigh(rho0.data)
    w1, v1 = np.linalg.eigh(rho1.data)
    for w in (w0, w1):
        if w.min() < _EIG_FLOOR:
            raise ValueError(f"state not PSD after clamping (min eigenvalue {w.min():g})")
        # numerical-rank cutoff: roundoff-scale eigenvalues are exact zeros,
        # otherwise w^s injects ~sqrt(eps) garbage at small s
        w[w < w.max() * w.size * np.finfo(float).eps] = 0.0
    w0 = np.clip(w0, 0.0, None)
    w1 = np.clip(w1, 0.0, None)
    overlap = np.abs(v0.conj().T @ v1) ** 2

    def powers(w: np.ndarray, s: float) -> np.ndarray:
        # 0^s := 0 on [0, 1] (support convention)
        out = np.zeros_like(w)
        pos = w > 0.0
        out[pos] = np.exp(s * np.log(w[pos]))
        return out

    def q_s(s: float) -> float:
        return float(powers(w0, s) @ overlap @ powers(w1, 1.0 - s))

    return q_s


def qcb(rho0: DensityMatrix, rho1: DensityMatrix, pi0: float = 0.5,
        s_tol: float = 1e-6) -> DiscriminationReport:
    """Quantum Chernoff bound report: Q = min_s tr(rho0^s rho1^(1-s)).

    Both states should be (re)normalized. The minimization uses golden-section
    search on s in [0, 1]; tr(rho0^s rho1^(1-s)) is log-convex in s, so the
    search is valid. helstrom_error is evaluated at the given priors.
    """
    if rho0.data.shape != rho1.data.shape:
        raise ValueError("states must share a dimension")
    q_s = _chernoff_objective(rho0, rho1)
    s_opt, q_min = golden_section_min(q_s, 0.0, 1.0, tol=s_tol)
    for s_end in (0.0, 1.0):
        q_end = q_s(s_end)
        if q_end < q_min:
            s_opt, q_min = s_end, q_end
    exponent = math.inf if q_min <= 0.0 else max(0.0, -math.log(q_min))
    return DiscriminationReport(
        helstrom_error=helstrom(rho0, rho1, pi0),
        qcb_exponent=exponent,
        optimal_s=float(s_opt),
    )


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int = None) -> DensityMatrix:
    """Haar-generic (Ginibre) random state of the given dimension."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho).real, (dim,))


# =============================================================================
# Structural property checks
# =============================================================================

@dataclass(frozen=True)
class ConcavityReport:
    """Outcome of randomized trials of mixing-never-helps for the Helstrom error:
    helstrom(sum_i f_i*rho0_i, sum_i f_i*rho1_i) >= sum_i f_i*helstrom(rho0_i, rho1_i)."""

    trials: int
    dim: int
    mixture_size: int
    min_slack: float
    violations: int
    slack_tol: float = 1e-9


def check_helstrom_concavity(trials: int, dim: int, mixture_size: int, seed: int,
                             pi0: float = 0.5, slack_tol: float = 1e-9) -> ConcavityReport:
    """Randomized numeric check that averaging states cannot decrease the
    minimum discrimination error. Reports the worst slack seen."""
    rng = np.random.default_rng(seed)
    min_slack = math.inf
    violations = 0
    for _ in range(trials):
        f = rng.dirichlet(np.ones(mixture_size))
        pairs = [(random_density_matrix(dim, rng), random_density_matrix(dim, rng))
                 for _ in range(mixture_size)]
        mix0 = DensityMatrix(sum(fi * p[0].data for fi, p in zip(f, pairs)), (dim,))
        mix1 = DensityMatrix(sum(fi * p[1].data for fi, p in zip(f, pairs)), (dim,))
        mixed = helstrom(mix0, mix1, pi0)
        averaged = sum(fi * helstrom(p0, p1, pi0) for fi, (p0, p1) in zip(f, pairs))
        slack = mixed - averaged
        min_slack = min(min_slack, slack)
        if slack < -slack_tol:
            violations += 1
    return ConcavityReport(trials=trials, dim=dim, mixture_size=mixture_size,
                           min_slack=min_slack, violations=violations, slack_tol=slack_tol)


def _copy_space_bytes(dim: int, m: int) -> int:
    return 16 * (dim ** (2 * m)) ** 2


@dataclass(frozen=True)
class TrendPoint:
    """Per-copy exponent estimates for M-copy discrimination.

    helstrom_exponent = -ln(Pr_e)/M carries a 1/M prefactor transient on top
    of the asymptotic rate, so it overshoots at small M for any state pair;
    chernoff_exponent = -ln(min_s tr(rho0^s rho1^(1-s)))/M is the clean rate
    diagnostic (exactly M-independent for product states).
    """

    copies: int
    helstrom_exponent: float
    chernoff_exponent: float


def _total_return_photons(d_ret: int, d_idl: int, m: int) -> np.ndarray:
    per_copy = np.repeat(np.arange(d_ret), d_idl)
    total = per_copy
    for _ in range(m - 1):
        total = (total[:, None] + per_copy[None, :]).reshape(-1)
    return total


def fading_exponent_trend(params: SystemParams, m_list, dim: int, nodes,
                          model: FadingModel = None, pi0: float = 0.5,
                          per_copy_deficit_tol: float = 0.05,
                          memory_cap_bytes: int = 2 << 30) -> list:
    """Per-copy error-probability exponent estimates for M-copy discrimination
    of the unconditional (fading-averaged) hypothesis states.

    The fading draw is shared across all M copies, so the M-copy average is
    taken of the tensor powers (not the tensor power of the average). Under a
    random fading model the estimates decrease with M, the desk-scale
    signature of the subexponential regime; a deterministic model is the
    constant-rate contrast case (see TrendPoint).

    The phase average uses the identity that a uniform P-node phase grid acts
    on the same-draw tensor power as a dephasing mask keeping only matrix
    elements whose total return photon numbers agree mod P; this is exactly
    the trapezoid rule, evaluated without materializing per-phase states.
    Amplitude nodes are Gauss-Legendre on [0, 1] against the fading pdf.

    Runs at surrogate (small N_S, N_B, dim) scale only; the copy space must
    fit the memory cap. Per-copy truncated states are renormalized before
    tensor powers are taken.
    """
    m_list = sorted(int(m) for m in m_list)
    if m_list[0] < 1:
        raise ValueError("copy counts must be >= 1")
    worst = _copy_space_bytes(dim, m_list[-1])
    if worst > memory_cap_bytes:
        raise ResourceGuard(
            f"M={m_list[-1]} copies of a two-mode dim-{dim} state need {worst/2**30:.1f} GiB"
        )
    if model is None:
        model = FadingModel.truncated_rayleigh(params.kappa_bar)
    if isinstance(nodes, int):
        n_amp = n_phase = nodes
    else:
        n_amp, n_phase = nodes

    rho0 = hypothesis_state(params, 0.0, 0.0, dim, present=False, out_dim=dim,
                            trace_deficit_tol=per_copy_deficit_tol).renormalized()

    if model.kind is FadingKind.DETERMINISTIC:
        conditionals = [rotate_return_phase(
            hypothesis_state(params, model.kappa, 0.0, dim, present=True, out_dim=dim,
                             trace_deficit_tol=per_copy_deficit_tol).renormalized(),
            model.phi)]
        amp_weights = np.array([1.0])
    else:
        if n_amp < 8 or n_phase < 8:
            raise ValueError("need at least 8 quadrature nodes per dimension")
        xs, ws = np.polynomial.legendre.leggauss(n_amp)
        amps = 0.5 * (xs + 1.0)
        amp_weights = 0.5 * ws * np.array([fading_pdf(model, a) for a in amps])
        conditionals = [
            hypothesis_state(params, a * a, 0.0, dim, present=True, out_dim=dim,
                             trace_deficit_tol=per_copy_deficit_tol).renormalized()
            for a in amps
        ]

    results = []
    for m in m_list:
        rho0_m = tensor_power(rho0, m)
        acc = amp_weights[0] * tensor_power(conditionals[0], m).data
        for w, cond in zip(amp_weights[1:], conditionals[1:]):
            acc += w * tensor_power(cond, m).data
        if model.is_random:
            totals = _total_return_photons(dim, dim, m)
            acc *= (totals[:, None] - totals[None, :]) % n_phase == 0
        rho1_m = DensityMatrix(acc / np.trace(acc).real, rho0_m.dims)
        pr_e = helstrom(rho0_m, rho1_m, pi0)
        report = qcb(rho0_m, rho1_m, pi0)
        results.append(TrendPoint(copies=m,
                                  helstrom_exponent=-math.log(pr_e) / m,
                                  chernoff_exponent=report.qcb_exponent / m))
    return results


def qcb_exponent_at_zero_return(params: SystemParams, dim: int) -> float:
    """Chernoff exponent of the conditional hypothesis pair at vanishing return
    amplitude; the two states coincide there, so the exponent is ~0."""
    rho0 = hypothesis_state(params, 0.0, 0.0, dim, present=False, out_dim=dim,
                            trace_deficit_tol=0.05).renormalized()
    rho1 = hypothesis_state(params, 0.0, 0.0, dim, present=True, out_dim=dim,
                            trace_deficit_tol=0.05).renormalized()
    return qcb(rho0, rho1).qcb_exponent


# =============================================================================
# Wigner covariance
# =============================================================================

def return_idler_covariance(n_s: float, n_b: float, kappa: float, phi: float,
                            present: bool, exact_return_noise: bool = True) -> CovarianceMatrix:
    """Wigner covariance of the (return, idler) pair for one hypothesis.

    Quadrature order (q_R, p_R, q_I, p_I). Diagonal blocks are multiples of
    the identity; target presence adds the off-diagonal block
    (c_p/2) * [[cos phi, sin phi], [sin phi, -cos phi]] with
    c_p = sqrt(kappa*N_S*(N_S+1)). With exact_return_noise the return block
    carries brightness kappa*N_S + N_B (the background-brightness convention
    keeps the noise floor at N_B for every kappa); without it the kappa*N_S
    leak-through is dropped, the N_S << 1 << N_B limiting form.
    """
    cov = np.zeros((4, 4))
    c_p = math.sqrt(kappa * n_s * (n_s + 1.0))
    if present:
        n_ret = kappa * n_s + n_b if exact_return_noise else n_b
    else:
        n_ret = n_b
    cov[0, 0] = cov[1, 1] = (2.0 * n_ret + 1.0) / 4.0
    cov[2, 2] = cov[3, 3] = (2.0 * n_s + 1.0) / 4.0
    if present:
        r_h = np.array([[math.cos(phi), math.sin(phi)],
                        [math.sin(phi), -math.cos(phi)]])
        cov[0:2, 2:4] = 0.5 * c_p * r_h
        cov[2:4, 0:2] = cov[0:2, 2:4].T
    return CovarianceMatrix(matrix=cov, c_p=c_p if present else 0.0)


def wigner_covariance(dm: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """First moments and symmetrized quadrature covariance of a two-mode state.

    Returns (means, cov) over (q_0, p_0, q_1, p_1) with q = (a + a^dag)/2.
    """
    d0, d1 = dm.dims
    a0 = np.kron(_destroy(d0), np.eye(d1))
    a1 = np.kron(np.eye(d0), _destroy(d1))
    quads = []
    for a in (a0, a1):
        quads.append(0.5 * (a + a.conj().T))
        quads.append((a - a.conj().T) / 2j)
    rho = dm.data
    means = np.array([np.trace(q @ rho).real for q in quads])
    cov = np.zeros((4, 4))
    for i in range(4):
        for j in range(i, 4):
            sym = 0.5 * (quads[i] @ quads[j] + quads[j] @ quads[i])
            cov[i, j] = cov[j, i] = np.trace(sym @ rho).real - means[i] * means[j]
    return means, cov
