"""
Alternating-optimization beamforming for a fixed activation topology and
fold configuration.

Signal model (single stream, unit-power symbol)::

    r = v^H g^H T(L,1) w s + v^H n,   T(p,q) = prod_{l=p..q} alpha Z_l Theta_l h_l

Each AO sweep updates, in order, the receive combiner v, the phase vector
of every layer from the user side outwards, and the transmit precoder w.
Each update is the exact conditional maximizer of the SNR, so the SNR is
non-decreasing along the sweep.

Layer indices in the public functions are 1-based to match the cascade
notation; arrays are stored 0-based with shape (L, N).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .errors import DegenerateChannelError


@dataclass
class CascadeContext:
    channels: ChannelSet
    z: np.ndarray
    alpha: float
    theta: np.ndarray | None = None

    def __post_init__(self):
        L, N = self.channels.layers, self.channels.n
        self.z = np.asarray(self.z, dtype=float).reshape(L, N)
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.theta is None:
            self.theta = np.ones((L, N), dtype=complex)
        else:
            self.theta = np.asarray(self.theta, dtype=complex).reshape(L, N)

    @property
    def layers(self) -> int:
        return self.channels.layers

    def with_theta(self, theta) -> "CascadeContext":
        return CascadeContext(self.channels, self.z, self.alpha, np.array(theta, dtype=complex))


@dataclass
class BeamformingSolution:
    w: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    snr: float
    rate: float
    iterations: int = 0
    converged: bool = False
    degenerate: bool = False
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        def pairs(x):
            return [[float(c.real), float(c.imag)] for c in np.ravel(x)]

        return {
            "w": pairs(self.w),
            "v": pairs(self.v),
            "theta": [pairs(t) for t in self.theta],
            "snr": float(self.snr),
            "rate": float(self.rate),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "degenerate": bool(self.degenerate),
        }

    def dump(self, path) -> None:
        # json float repr is shortest round-trip, so the dump is exact
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "BeamformingSolution":
        with open(path) as fh:
            d = json.load(fh)

        def cplx(p):
            p = np.asarray(p, float).reshape(-1, 2)
            return p[:, 0] + 1j * p[:, 1]

        return cls(cplx(d["w"]), np.array([cplx(t) for t in d["theta"]]), cplx(d["v"]),
                   d["snr"], d["rate"], d["iterations"], d["converged"], d["degenerate"])


def achievable_rate(snr: float) -> float:
    if snr < 0:
        raise ValueError("snr must be non-negative")
    return float(np.log2(1.0 + snr))


def _layer_gain(ctx: CascadeContext, i: int) -> np.ndarray:
    return ctx.alpha * ctx.z[i] * ctx.theta[i]


def cascade(ctx: CascadeContext, p: int, q: int) -> np.ndarray:
    """Cascade T(p,q) from layer q up to layer p (1-based, p >= q)."""
    L = ctx.layers
    if (p, q) == (L, L + 1):
        return np.eye(ctx.channels.n, dtype=complex)
    if (p, q) == (0, 1):
        return np.eye(ctx.channels.k, dtype=complex)
    if not 1 <= q <= p <= L:
        raise ValueError(f"invalid cascade index pair ({p}, {q})")
    out = None
    for i in range(q - 1, p):
        factor = _layer_gain(ctx, i)[:, None] * ctx.channels.h[i]
        out = factor if out is None else factor @ out
    return out


def effective_channel(ctx: CascadeContext) -> np.ndarray:
    """M x K end-to-end matrix g^H T(L,1)."""
    return ctx.channels.g.conj().T @ cascade(ctx, ctx.layers, 1)


def _forward(ctx: CascadeContext, w) -> np.ndarray:
    x = np.asarray(w, dtype=complex)
    for i in range(ctx.layers):
        x = _layer_gain(ctx, i) * (ctx.channels.h[i] @ x)
    return x


def _backward(ctx: CascadeContext, v) -> list:
    """r[i] such that v^H g^H T(L,1) w == r[i]^H x_i for the output x_i of layer i+1.

    Entry L-1 is g v; entry -1 (appended last) is T(L,1)^H g v.
    """
    L = ctx.layers
    r = [None] * (L + 1)
    r[L - 1] = ctx.channels.g @ v
    for i in range(L - 1, -1, -1):
        r[i - 1] = ctx.channels.h[i].conj().T @ (np.conj(_layer_gain(ctx, i)) * r[i])
    return r


def snr(ctx: CascadeContext, w, v, noise_power: float) -> float:
    v = np.asarray(v, dtype=complex)
    vv = float(np.vdot(v, v).real)
    if vv == 0.0:
        raise ValueError("combiner must be nonzero")
    if not noise_power > 0:
        raise ValueError("noise power must be positive")
    a = ctx.channels.g.conj().T @ _forward(ctx, w)
    return float(abs(np.vdot(v, a)) ** 2 / (vv * noise_power))


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    out = v * (abs(v[k]) / v[k])
    out[k] = abs(v[k])
    return out


def optimal_combiner(ctx: CascadeContext, w) -> np.ndarray:
    """Unit-norm principal eigenvector of the rank-one matrix a a^H, a = g^H T(L,1) w."""
    a = ctx.channels.g.conj().T @ _forward(ctx, w)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        raise DegenerateChannelError("effective channel g^H T w is zero")
    return _canonical_phase(a / norm)


def principal_eigenvector(A, tol: float = 1e-12, max_iter: int = 10_000, seed: int = 0) -> np.ndarray:
    """Power iteration for a Hermitian PSD matrix; returns a unit vector.

    Generic fallback used to cross-check the closed-form combiner.
    """
    A = np.asarray(A, dtype=complex)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[0]) + 1j * rng.standard_normal(A.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = A @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            raise DegenerateChannelError("matrix annihilates the iterate")
        y /= ny
        lam_new = float(np.vdot(y, A @ y).real)
        done = abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300)
        x, lam = y, lam_new
        if done:
            break
    return _canonical_phase(x)


def phase_coefficients(ctx: CascadeContext, w, v, layer: int) -> np.ndarray:
    """Per-element coefficients c with numerator = alpha * sum(c * theta_layer)."""
    if not 1 <= layer <= ctx.layers:
        raise ValueError(f"layer {layer} out of range")
    i = layer - 1
    x = np.asarray(w, dtype=complex)
    for j in range(i):
        x = _layer_gain(ctx, j) * (ctx.channels.h[j] @ x)
    u = ctx.channels.h[i] @ x
    r = _backward(ctx, np.asarray(v, dtype=complex))
    return np.conj(r[i]) * ctx.z[i] * u


def _aligned(coef: np.ndarray) -> np.ndarray:
    theta = np.ones(coef.shape, dtype=complex)
    nz = coef != 0
    theta[nz] = np.conj(coef[nz]) / np.abs(coef[nz])
    return theta


def optimal_phases(ctx: CascadeContext, w, v, layer: int) -> np.ndarray:
    """Phases that co-phase every element's contribution; inactive/zero entries stay at 1."""
    return _aligned(phase_coefficients(ctx, w, v, layer))


def optimal_precoder(ctx: CascadeContext, v, p_max: float) -> np.ndarray:
    a = _backward(ctx, np.asarray(v, dtype=complex))[-1]
    norm = np.linalg.norm(a)
    if norm == 0.0:
        raise DegenerateChannelError("T^H g v is zero")
    return np.sqrt(p_max) * a / norm


def _degenerate(ctx, p_max, noise_power):
    K, M = ctx.channels.k, ctx.channels.m
    w = np.zeros(K, complex)
    w[0] = np.sqrt(p_max)
    v = np.zeros(M, complex)
    v[0] = 1.0
    return BeamformingSolution(w, ctx.theta.copy(), v, 0.0, 0.0, 0, False, True)


def _initial_state(ctx, p_max, init):
    K = ctx.channels.k
    theta = np.ones_like(ctx.theta)
    w = np.zeros(K, complex)
    w[0] = np.sqrt(p_max)
    if isinstance(init, BeamformingSolution):
        theta = np.array(init.theta, dtype=complex)
        w = np.array(init.w, dtype=complex)
    elif init is not None:
        rng = np.random.default_rng(init)
        theta = np.exp(2j * np.pi * rng.random(theta.shape))
        w = rng.standard_normal(K) + 1j * rng.standard_normal(K)
        w *= np.sqrt(p_max) / np.linalg.norm(w)
    theta[ctx.z == 0] = 1.0
    return theta, w


def ao_solve(ctx: CascadeContext, noise_power: float, p_max: float, init=None,
             tol: float = 1e-8, max_iters: int = 200, track: bool = False) -> BeamformingSolution:
    """Alternating optimization of (v, theta_1..theta_L, w).

    ``init`` is None (theta = 1, w along the first antenna), an integer seed
    for a random start, or a BeamformingSolution to warm-start from. Sweeps
    stop once the relative SNR gain of a full sweep drops below ``tol``.
    With ``track`` the SNR after every sub-step is stored in ``history`` as
    (sweep, step, snr) tuples.
    """
    if not tol > 0 or max_iters < 1:
        raise ValueError("tol must be positive and max_iters >= 1")
    if not p_max > 0 or not noise_power > 0:
        raise ValueError("p_max and noise_power must be positive")
    L = ctx.layers
    if np.any(ctx.z.sum(axis=1) == 0):
        return _degenerate(ctx, p_max, noise_power)

    theta, w = _initial_state(ctx, p_max, init)
    work = ctx.with_theta(theta)
    history = []
    h, g = work.channels.h, work.channels.g
    gh = g.conj().T

    a = gh @ _forward(work, w)
    if np.linalg.norm(a) == 0.0:
        # starting precoder sits in the null space; restart along the dominant right singular vector
        eff = effective_channel(work)
        if not np.any(eff):
            return _degenerate(ctx, p_max, noise_power)
        w = np.sqrt(p_max) * np.linalg.svd(eff)[2][0].conj()

    prev = 0.0
    current = 0.0
    converged = False
    sweeps = 0
    v = None
    for sweeps in range(1, max_iters + 1):
        # combiner
        a = gh @ _forward(work, w)
        na = np.linalg.norm(a)
        if na == 0.0:
            return _degenerate(ctx, p_max, noise_power)
        v = _canonical_phase(a / na)
        if track:
            history.append((sweeps, "combiner", float(na**2 / noise_power)))

        # phases, user side outwards; r[i] only depends on layers above i
        r = _backward(work, v)
        x = w
        for i in range(L):
            u = h[i] @ x
            work.theta[i] = _aligned(np.conj(r[i]) * work.z[i] * u)
            x = _layer_gain(work, i) * u
            if track:
                history.append((sweeps, f"phase{i + 1}", float(abs(np.vdot(r[i], x)) ** 2 / noise_power)))

        # precoder
        b = _backward(work, v)[-1]
        nb = np.linalg.norm(b)
        if nb == 0.0:
            return _degenerate(ctx, p_max, noise_power)
        w = np.sqrt(p_max) * b / nb
        current = float(p_max * nb**2 / noise_power)
        if track:
            history.append((sweeps, "precoder", current))

        if prev > 0 and (current - prev) <= tol * prev:
            converged = True
            break
        prev = current

    final = snr(work, w, v, noise_power)
    return BeamformingSolution(w, work.theta.copy(), v, final, achievable_rate(final),
                               sweeps, converged, False, history)
