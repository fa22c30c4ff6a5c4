"""
Incident-power maps, the element activation ratio (EAR) and rate-curve helpers.

The incident power on element n of layer l is |[h_l T(l-1,1) w]_n|^2, the
power arriving at that location before its own phase shift and selection.
EAR is the fraction of active elements whose incident power reaches at
least ``tau`` times the peak active power.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .beamforming import CascadeContext

DB_FLOOR = -300.0


@dataclass(frozen=True)
class PowerMap:
    power: np.ndarray  # (L, N) linear
    active: np.ndarray  # (L, N) bool

    @property
    def layers(self) -> int:
        return self.power.shape[0]

    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            out = 10.0 * np.log10(self.power)
        return np.maximum(out, DB_FLOOR)


@dataclass(frozen=True)
class EarReport:
    tau: float
    per_layer: tuple
    global_ear: float
    reference: tuple  # per-layer peak active power

    def as_text(self) -> str:
        lines = [f"tau = {self.tau!r}", f"global_ear = {self.global_ear!r}"]
        for l, (e, ref) in enumerate(zip(self.per_layer, self.reference), start=1):
            lines.append(f"layer{l}_ear = {e!r}")
            lines.append(f"layer{l}_peak_power = {ref!r}")
        return "\n".join(lines) + "\n"


def power_map(ctx: CascadeContext, w) -> PowerMap:
    x = np.asarray(w, dtype=complex)
    power = np.empty((ctx.layers, ctx.channels.n))
    for i in range(ctx.layers):
        u = ctx.channels.h[i] @ x
        power[i] = np.abs(u) ** 2
        x = ctx.alpha * ctx.z[i] * ctx.theta[i] * u
    return PowerMap(power, ctx.z.astype(bool))


def ear(pmap: PowerMap, z=None, tau: float = 0.1) -> EarReport:
    """EAR over active elements; ``z`` overrides the activation stored in the map."""
    if not 0 < tau <= 1:
        raise ValueError("tau must lie in (0, 1]")
    active = pmap.active if z is None else np.asarray(getattr(z, "z", z)).reshape(pmap.power.shape).astype(bool)
    n_active = int(active.sum())
    if n_active == 0:
        raise ValueError("EAR is undefined without active elements")
    p = pmap.power
    peak = p[active].max()
    global_ear = float(np.count_nonzero(active & (p >= tau * peak)) / n_active)
    per_layer, refs = [], []
    for l in range(p.shape[0]):
        a = active[l]
        if not a.any():
            per_layer.append(float("nan"))
            refs.append(0.0)
            continue
        ref = p[l][a].max()
        per_layer.append(float(np.count_nonzero(a & (p[l] >= tau * ref)) / a.sum()))
        refs.append(float(ref))
    return EarReport(tau, tuple(per_layer), global_ear, tuple(refs))


def write_heatmap_csv(pmap: PowerMap, layer: int, cols: int, path) -> None:
    """One layer (1-based) as rows of row,col,active,power_linear,power_db."""
    p, db, act = pmap.power[layer - 1], pmap.db()[layer - 1], pmap.active[layer - 1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "col", "active", "power_linear", "power_db"])
        for n in range(p.size):
            row, col = divmod(n, cols)
            writer.writerow([row, col, int(act[n]), repr(float(p[n])), repr(float(db[n]))])


def rate_curve(points, check_monotone: bool = True, rtol: float = 1e-9) -> list:
    """Sort (p_max, rate) pairs by power; optionally assert rates never drop."""
    series = sorted((float(p), float(r)) for p, r in points)
    if not series:
        raise ValueError("rate curve needs at least one point")
    if check_monotone:
        for (p0, r0), (p1, r1) in zip(series, series[1:]):
            if r1 < r0 - rtol * max(abs(r0), 1.0):
                raise AssertionError(f"rate drops from {r0} at {p0} W to {r1} at {p1} W")
    return series
