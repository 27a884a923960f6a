"""Unitary evolution for ``i d/dt psi = (H0 + sum u_j Q_j) psi`` on circles and graphs.

The free flow is exact in a precomputed eigenbasis (dense transform); pulses
use Strang splitting with exact pointwise phases, or an exact
diagonalization of ``H0 + W/delta`` in the same basis as a reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Circle
from .errors import StepTooLarge, TruncationLoss, ValidationError
from .funcspace import TrigExpression, WaveFunction
from .spectral import fd_spectrum, sample_potential

TRUNC_TOL = 1e-6
SPLIT_TOL = 1e-4


def _dft_basis(n, length):
    """Real orthonormal Fourier basis on ``n`` periodic nodes (weights L/n)."""
    x = np.arange(n) * (length / n)
    w0 = 2 * math.pi / length
    cols, lam = [np.ones(n)], [0.0]
    for k in range(1, n // 2 + 1):
        cols.append(np.cos(k * w0 * x)); lam.append((k * w0) ** 2)
        if 2 * k < n:
            cols.append(np.sin(k * w0 * x)); lam.append((k * w0) ** 2)
    B = np.stack(cols, axis=1)
    B /= np.sqrt((length / n) * np.sum(B**2, axis=0))
    return B, np.array(lam)


def _eight_basis(grid):
    """Symmetric loops (g, g) by DFT, antisymmetric (g, -g) by DST-I."""
    n = grid.counts[0]
    if grid.counts != (n, n):
        raise ValidationError("eight-graph basis needs equal node counts")
    L = grid.domain.edges[0].length
    N = n - 1
    x = grid.blocks[0]
    w0 = 2 * math.pi / L
    cols, lam = [], []
    sym = [(np.ones(n), 0.0)]
    for k in range(1, N // 2 + 1):
        sym.append((np.cos(k * w0 * x), (k * w0) ** 2))
        if 2 * k < N:
            sym.append((np.sin(k * w0 * x), (k * w0) ** 2))
    for g, lm in sym:
        cols.append(np.concatenate([g, g])); lam.append(lm)
    for j in range(1, N):
        g = np.sin(0.5 * j * w0 * x)
        g[0] = g[-1] = 0.0
        cols.append(np.concatenate([g, -g])); lam.append((0.5 * j * w0) ** 2)
    B = np.stack(cols, axis=1)
    B /= np.sqrt(grid.weights @ B**2)
    order = np.argsort(lam, kind="stable")
    return B[:, order], np.array(lam)[order]


def _is_zero_potential(V):
    if V is None:
        return True
    if isinstance(V, (int, float)):
        return V == 0
    if isinstance(V, TrigExpression):
        return V.is_zero()
    return False


def _is_canonical_eight(domain):
    return (domain.describe() == "eight" and domain.n_edges == 2
            and abs(domain.edges[0].length - domain.edges[1].length) == 0)


@dataclass(eq=False)
class PropagatorContext:
    """Eigenbasis of ``H0`` on a grid; read-only after construction."""

    grid: object
    basis: np.ndarray  # samples x modes, orthonormal under grid weights
    lam: np.ndarray
    V: object = None
    kind: str = "fd"

    @classmethod
    def build(cls, grid, V=None, n_modes=None, basis="auto"):
        dom = grid.domain
        if basis == "auto":
            zero = _is_zero_potential(V)
            if zero and isinstance(dom, Circle):
                basis = "fourier"
            elif zero and _is_canonical_eight(dom):
                basis = "eight"
            else:
                basis = "fd"
        if basis == "fourier":
            B, lam = _dft_basis(grid.counts[0], dom.edges[0].length)
        elif basis == "eight":
            B, lam = _eight_basis(grid)
        elif basis == "fd":
            n = grid.dofs().n
            pairs = fd_spectrum(grid, V, n_modes=n, method="dense")
            B = np.stack([p.function.values.real for p in pairs], axis=1)
            lam = np.array([p.value for p in pairs])
        else:
            raise ValidationError(f"unknown basis {basis!r}")
        if not _is_zero_potential(V) and basis != "fd":
            raise ValidationError("analytic bases need V = 0")
        if n_modes is not None:
            B, lam = B[:, :n_modes], lam[:n_modes]
        return cls(grid, B, lam, V, basis)

    @property
    def n_modes(self):
        return len(self.lam)

    @property
    def weights(self):
        return self.grid.weights

    def coefficients(self, psi, check=True):
        vals = psi.values if isinstance(psi, WaveFunction) else psi
        a = self.basis.T @ (self.weights * vals)
        if check:
            n2 = float(np.sum(self.weights * np.abs(vals) ** 2))
            kept = float(np.sum(np.abs(a) ** 2))
            if n2 > 0 and n2 - kept > TRUNC_TOL * n2:
                raise TruncationLoss(f"basis keeps only {kept / n2:.8f} of the norm")
        return a

    def synthesize(self, a):
        return WaveFunction(self.grid, self.basis @ a)

    def orthonormality_error(self):
        g = self.basis.T @ (self.weights[:, None] * self.basis)
        return float(np.max(np.abs(g - np.eye(self.n_modes))))

    def potential_samples(self, Q):
        """Samples of a RealFunction, TrigExpression, array or number."""
        return sample_potential(Q, self.grid)


def norm(psi):
    return psi.norm()


def evolve_free(ctx, psi, t):
    a = ctx.coefficients(psi)
    return ctx.synthesize(np.exp(-1j * ctx.lam * t) * a)


def apply_phase_samples(psi, phase):
    """``e^{i phase} psi`` (exact pointwise)."""
    return WaveFunction(psi.grid, np.exp(1j * phase) * psi.values)


def _field(ctx, u, Q):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if isinstance(Q, np.ndarray) and Q.ndim == 2:
        mats = Q
    else:
        mats = np.stack([ctx.potential_samples(q) for q in Q], axis=1)
    if mats.shape[1] != len(u):
        raise ValidationError("control vector and generator list differ in length")
    return mats @ u


def _field_slope(ctx, W):
    out = 0.0
    for j, vals in enumerate(ctx.grid.split(W)):
        h = ctx.grid.spacing(j)
        d = np.diff(np.concatenate([vals, vals[:1]]) if ctx.grid.periodic else vals) / h
        if d.size:
            out = max(out, float(np.max(np.abs(d))))
    return out


def substeps(ctx, W, delta, rule="accuracy", tol=SPLIT_TOL, u_norm=None, q_norm=None):
    """Number of Strang substeps for a pulse with field ``W`` (applied as W/delta).

    ``accuracy`` balances the leading splitting error
    ``delta |W'|^2 / (12 n^2)`` against ``tol``;
    ``conservative`` uses ``dt <= min(delta/16, 1e-3/(1 + |u| |Q| / delta))``.
    """
    if rule == "conservative":
        u_norm = float(np.max(np.abs(W))) if u_norm is None else u_norm
        q_norm = 1.0 if q_norm is None else q_norm
        dt = min(delta / 16, 1e-3 / (1 + u_norm * q_norm / delta))
        return max(1, int(math.ceil(delta / dt - 1e-9)))
    slope = _field_slope(ctx, W)
    n = math.ceil(math.sqrt(slope**2 / (12 * delta * tol)) * delta) if slope else 1
    return max(4, int(n))


def split_error_estimate(ctx, W, delta, n):
    """Leading Strang error estimate ``|W'|^2 delta / (12 n^2)`` for W applied over delta."""
    slope = _field_slope(ctx, W)
    return delta * slope**2 / (12 * n * n)


def evolve_pulse(ctx, psi, u, Q, delta, n_sub=None, method="strang", rule="accuracy", max_error=1e-2):
    """``exp(-i delta (H0 + sum (u_j/delta) Q_j)) psi``."""
    if delta <= 0:
        raise ValidationError("pulse duration must be positive")
    W = _field(ctx, u, Q)
    if not np.any(W):
        return evolve_free(ctx, psi, delta)
    if method == "exact":
        return _pulse_exact(ctx, psi, W, delta)
    if n_sub is None:
        n_sub = substeps(ctx, W, delta, rule)
    est = split_error_estimate(ctx, W, delta, n_sub)
    if est > max_error:
        raise StepTooLarge(f"splitting error estimate {est:.2e} with {n_sub} substeps")
    dt = delta / n_sub
    half = np.exp(-0.5j * dt * W / delta)
    full = half * half
    decay = np.exp(-1j * ctx.lam * dt)
    vals = half * psi.values
    a = ctx.coefficients(vals)
    for i in range(n_sub):
        a = decay * a
        vals = ctx.basis @ a
        if i < n_sub - 1:
            a = ctx.basis.T @ (ctx.weights * (full * vals))
    return WaveFunction(ctx.grid, half * vals)


def _pulse_exact(ctx, psi, W, delta):
    B = ctx.basis
    M = np.diag(ctx.lam) + B.T @ ((ctx.weights * W / delta)[:, None] * B)
    M = 0.5 * (M + M.T)
    e, v = np.linalg.eigh(M)
    a = ctx.coefficients(psi)
    a = v @ (np.exp(-1j * delta * e) * (v.T @ a))
    return ctx.synthesize(a)


def conjugated_step(ctx, psi, phi1, alpha, gamma, delta=None, **pulse_kw):
    """``e^{i c phi1} e^{-i gamma H0} e^{-i c phi1} psi`` with ``c = sqrt(alpha/gamma)``.

    Phases are exact unless ``delta`` is given, in which case each is
    realized by a pulse of that duration.
    """
    if alpha < 0:
        raise ValidationError("alpha must be non-negative")
    if alpha == 0:
        return evolve_free(ctx, psi, gamma)
    p = ctx.potential_samples(phi1)
    c = math.sqrt(alpha / gamma)
    if delta is None:
        out = apply_phase_samples(psi, -c * p)
        out = evolve_free(ctx, out, gamma)
        return apply_phase_samples(out, c * p)
    out = evolve_pulse(ctx, psi, [c], p[:, None], delta, **pulse_kw)
    out = evolve_free(ctx, out, gamma)
    return evolve_pulse(ctx, out, [-c], p[:, None], delta, **pulse_kw)


def conjugated_limit_target(ctx, psi, phi1, alpha):
    """``e^{-i alpha |phi1'|^2} psi`` (exact for TrigExpression input)."""
    if isinstance(phi1, TrigExpression):
        g = phi1.grad_squared().evaluate(ctx.grid).values.real
    else:
        g = _grad_squared_samples(ctx, ctx.potential_samples(phi1))
    return apply_phase_samples(psi, -alpha * g)


def _grad_squared_samples(ctx, p):
    out = []
    for j, vals in enumerate(ctx.grid.split(p)):
        h = ctx.grid.spacing(j)
        if ctx.grid.periodic:
            d = (np.roll(vals, -1) - np.roll(vals, 1)) / (2 * h)
        else:
            d = np.gradient(vals, h, edge_order=2)
        out.append(d * d)
    return np.concatenate(out)


def abstract_conjugation(ctx, psi, S, u, Q, delta, **pulse_kw):
    """``e^{-i S/sqrt(delta)} e^{-i delta (H0 + sum u_j Q_j/delta)} e^{i S/sqrt(delta)} psi``."""
    p = ctx.potential_samples(S)
    c = 1.0 / math.sqrt(delta)
    out = apply_phase_samples(psi, c * p)
    out = evolve_pulse(ctx, out, u, Q, delta, **pulse_kw)
    return apply_phase_samples(out, -c * p)


def abstract_limit_target(ctx, psi, S, u, Q):
    """``exp(i/2 ad_S^2(H0) - i sum u_j Q_j) psi = exp(-i |S'|^2 - i sum u_j Q_j) psi``."""
    W = _field(ctx, u, Q)
    if isinstance(S, TrigExpression):
        g = S.grad_squared().evaluate(ctx.grid).values.real
    else:
        g = _grad_squared_samples(ctx, ctx.potential_samples(S))
    return apply_phase_samples(psi, -(g + W))


def distance(a, b):
    return (a - b).norm()
