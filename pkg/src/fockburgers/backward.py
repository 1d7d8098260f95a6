"""Time integration of the backward equation d/dt phi = (dissipation + drift) phi
on the truncated chaos space, with growth diagnostics, remainder dynamics,
spectral-gap decay fits and heat-semigroup smoothing probes.

The dissipation is integrated exactly through its diagonal exponential; the
drift enters through a first-order (exponential Euler) or second-order
(exponential midpoint) stage.  Per-step norms and per-degree energies are
recorded at every step, full states at a configurable stride.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

_trapz = getattr(np, "trapezoid", None) or np.trapz

from .fock import FockVector, dyadic_weights, poly_weight, weighted_norm
from .operators import (
    FockBasis,
    GeneratorParams,
    apply_laplacian_power,
    drift_coefficient_matrix,
)

SCHEMES = ("exponential-euler", "exponential-midpoint")


class StepSizeError(RuntimeError):
    """A step grew the norm beyond the stability guard."""


@dataclass
class BackwardTrajectory:
    """Stored states plus per-step diagnostic tracks."""

    times: np.ndarray
    states: list
    params: GeneratorParams
    scheme: str
    diagnostics: dict = field(default_factory=dict)

    def norm_track(self):
        return self.diagnostics["t"], self.diagnostics["norm"]


def _drift_matrix(basis, params):
    mat, _ = drift_coefficient_matrix(basis, params=params, part="both")
    return mat


def _estimate_drift_norm(basis, mat, iters=30, seed=7):
    """Power-iteration estimate of the drift norm in the chaos inner product."""
    if mat.nnz == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    s = np.sqrt(basis.ip_weight)
    a = sp.diags(s) @ mat @ sp.diags(1.0 / s)
    x = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
    x /= np.linalg.norm(x)
    for _ in range(iters):
        z = a.conj().T @ (a @ x)
        nz = np.linalg.norm(z)
        if nz == 0:
            return 0.0
        x = z / nz
    return float(np.linalg.norm(a @ x))


def default_step(params, drift_norm_est):
    """Step heuristic: resolve the drift while the stiff part is exact."""
    if drift_norm_est <= 0:
        return 1e-3
    return min(1e-3, 0.1 / drift_norm_est)


def _advance(x, dt, heat_full, heat_half, mat, scheme):
    if scheme == "exponential-euler":
        return heat_full * (x + dt * (mat @ x))
    # midpoint quadrature of the Duhamel integral with a half-step predictor
    half = heat_half * (x + 0.5 * dt * (mat @ x))
    return heat_full * x + dt * heat_half * (mat @ half)


def step_backward(phi, dt, params, scheme="exponential-euler"):
    """Single step: exact diagonal heat factor around a drift stage."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    basis = FockBasis(phi.trunc, phi.n_max, phi.species)
    mat = _drift_matrix(basis, params)
    heat_full = np.exp(-dt * basis.lap)
    heat_half = np.exp(-0.5 * dt * basis.lap)
    x = basis.to_coefficients(phi)
    y = _advance(x, dt, heat_full, heat_half, mat, scheme)
    guard = 1.0 + 10.0 * dt * _estimate_drift_norm(basis, mat)
    if basis.norm_of(y) > basis.norm_of(x) * guard:
        raise StepSizeError("norm grew beyond the stability guard; shrink dt")
    return basis.from_coefficients(y)


def solve_backward(phi0, T, dt, params, scheme="exponential-euler",
                   store_stride=None, basis=None, guard=True):
    """Integrate to time T, recording diagnostics every step and states at the
    store stride.  The final time lands within one step of T."""
    if dt <= 0 or T <= 0:
        raise ValueError("dt and T must be positive")
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    basis = basis or FockBasis(phi0.trunc, phi0.n_max, phi0.species)
    mat = _drift_matrix(basis, params)
    heat_full = np.exp(-dt * basis.lap)
    heat_half = np.exp(-0.5 * dt * basis.lap)
    nsteps = max(1, int(round(T / dt)))
    stride = store_stride or max(1, nsteps // 256)
    guard_factor = 1.0 + 10.0 * dt * (_estimate_drift_norm(basis, mat) if guard else 0.0)

    deg = basis.degrees
    n_deg = basis.n_max + 1
    w_ip = basis.ip_weight
    w_dir = w_ip * basis.lap

    x = basis.to_coefficients(phi0)
    ts = np.empty(nsteps + 1)
    norms = np.empty(nsteps + 1)
    deg_norm2 = np.empty((nsteps + 1, n_deg))
    deg_dirichlet2 = np.empty((nsteps + 1, n_deg))
    states, stored_idx = [], []

    def record(i, t, vec):
        ts[i] = t
        a2 = np.abs(vec) ** 2
        norms[i] = math.sqrt(float(np.sum(w_ip * a2)))
        for n in range(n_deg):
            sl = basis.degree_slice(n)
            deg_norm2[i, n] = float(np.sum(w_ip[sl] * a2[sl]))
            deg_dirichlet2[i, n] = float(np.sum(w_dir[sl] * a2[sl]))
        if i % stride == 0 or i == nsteps:
            states.append(basis.from_coefficients(vec.copy()))
            stored_idx.append(i)

    record(0, 0.0, x)
    for i in range(1, nsteps + 1):
        if guard:
            prev = norms[i - 1]
        x = _advance(x, dt, heat_full, heat_half, mat, scheme)
        record(i, i * dt, x)
        if guard and norms[i] > prev * guard_factor:
            raise StepSizeError(f"stability guard tripped at step {i}")

    diag = {
        "t": ts,
        "norm": norms,
        "degree_norm2": deg_norm2,
        "degree_dirichlet2": deg_dirichlet2,
        "stored_idx": np.array(stored_idx),
        "dt": dt,
    }
    return BackwardTrajectory(times=ts[stored_idx], states=states,
                              params=params, scheme=scheme, diagnostics=diag)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def ergodic_decay(traj, skip=0):
    """Least-squares decay rate of log norm versus time.

    Requires a mean-zero start (empty degree-0 component) and at least five
    usable points; returns the fitted rate (positive for decay).
    """
    if traj.states and traj.states[0].coeffs(0):
        raise ValueError("decay fit requires a mean-zero start")
    t = traj.diagnostics["t"][skip:]
    norm = traj.diagnostics["norm"][skip:]
    keep = norm > 1e-290
    t, norm = t[keep], norm[keep]
    if len(t) < 5:
        raise ValueError("trajectory too short to fit a rate")
    slope = np.polyfit(t, np.log(norm), 1)[0]
    return float(-slope)


def _dyadic_profiles(n_max, alpha):
    blocks = dyadic_weights(n_max)
    profiles = []
    for i, b in zip(range(-1, len(blocks) - 1), blocks):
        profiles.append((4.0 ** (i * alpha),
                         np.array(b.values[:n_max + 1]) ** 2))
    return profiles


def apriori_report(traj, alpha):
    """Dyadic-weighted growth diagnostics along the trajectory.

    Fits the smallest nonnegative constants making the per-time bound
    lhs1(t) <= exp(C t) lhs1(0) and the integrated Dirichlet bound
    int exp(-C t) lhs2'(t) dt <= lhs1(0) hold; returns per-time rows and the
    fitted constants.
    """
    d = traj.diagnostics
    t = d["t"]
    profiles = _dyadic_profiles(d["degree_norm2"].shape[1] - 1, alpha)
    lhs1 = np.zeros(len(t))
    dir_blocks = np.zeros(len(t))
    for wgt, prof in profiles:
        lhs1 += wgt * d["degree_norm2"] @ prof
        dir_blocks += wgt * d["degree_dirichlet2"] @ prof
    base = lhs1[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = np.where((t > 0) & (lhs1 > 0), np.log(lhs1 / base) / np.where(t > 0, t, 1.0), 0.0)
    c1 = float(max(0.0, growth.max()))

    def integrated(c):
        return float(_trapz(np.exp(-c * t) * dir_blocks, t))

    if integrated(0.0) <= base:
        c2 = 0.0
    else:
        lo, hi = 0.0, 1.0
        while integrated(hi) > base and hi < 1e8:
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if integrated(mid) > base:
                lo = mid
            else:
                hi = mid
        c2 = hi
    fitted = max(c1, c2)
    rows = [{"t": float(tt), "alpha": alpha, "lhs1": float(l1),
             "rhs1": float(math.exp(fitted * tt) * base),
             "lhs2": float(_trapz(np.exp(-fitted * t[:i + 1]) * dir_blocks[:i + 1],
                                    t[:i + 1])),
             "rhs2": float(base), "fitted_C": fitted}
            for i, (tt, l1) in enumerate(zip(t, lhs1))]
    return {"alpha": alpha, "C1": c1, "C2": c2, "fitted_C": fitted, "rows": rows}


def remainder_dynamics(traj, cutoff, alpha=0.0, probe_gamma=0.5):
    """Remainder evolution along a stored trajectory.

    Checks the time-derivative identity for the remainder by central
    differences against dissipation(remainder) + low drift
    - inv_dissipation(high drift(generator image)), and fits the growth
    constant in the a priori envelope for the remainder's Dirichlet norm.
    """
    from .controlled import _inv_dissipation_high, estimate_contraction, remainder

    params = traj.params
    st = traj.states
    if len(st) < 3:
        raise ValueError("need at least three stored states")
    w_probe = poly_weight(0.0, st[0].n_max + 1)
    factor = estimate_contraction(params, cutoff, w_probe, probe_gamma,
                                  st[0].trunc, min(st[0].n_max, 3))
    if factor >= 1.0:
        raise RuntimeError(f"cutoff not certified: contraction factor {factor:.3g}")

    times = traj.times
    sharps = [remainder(phi, params, cutoff) for phi in st]
    w_alpha = poly_weight(alpha, st[0].n_max)
    sup_norm = max(weighted_norm(s, w_alpha, 0.5) for s in sharps)

    defects = []
    from .operators import apply_generator_full, split_drift

    for i in range(1, len(st) - 1):
        h = times[i + 1] - times[i - 1]
        fd = (sharps[i + 1] - sharps[i - 1]) * (1.0 / h)
        gen = apply_generator_full(st[i], params)
        lin = apply_laplacian_power(sharps[i], 1.0, signed=True)
        _, low = split_drift(st[i], params, cutoff)
        rhs = lin + low - _inv_dissipation_high(gen, params, cutoff)
        scale = rhs.norm() + fd.norm() + 1e-300
        defects.append((fd - rhs).norm() / scale)

    # envelope fit: sup_t <= sqrt(t e^{Ct} + 1) * initial data norms
    b0 = (weighted_norm(sharps[0], w_alpha, 1.0)
          + weighted_norm(sharps[0],
                          poly_weight(alpha + 4.5, st[0].n_max), 0.5))
    norms = np.array([weighted_norm(s, w_alpha, 0.5) for s in sharps])

    def envelope_ok(c):
        env = np.sqrt(times * np.exp(c * times) + 1.0) * b0
        return bool(np.all(norms <= env * (1 + 1e-12)))

    if envelope_ok(0.0):
        fitted = 0.0
    else:
        lo, hi = 0.0, 1.0
        while not envelope_ok(hi) and hi < 1e8:
            hi *= 2
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if envelope_ok(mid):
                hi = mid
            else:
                lo = mid
        fitted = hi
    return {
        "max_defect": max(defects),
        "defects": defects,
        "sup_remainder_norm": sup_norm,
        "envelope_C": fitted,
        "contraction_factor": factor,
    }


def smoothing_probe(psi, t, alpha, beta):
    """Heat-kernel smoothing ratio; bounded by the scalar envelope (beta/e)^beta."""
    if t <= 0:
        raise ValueError("t must be positive")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    w = poly_weight(alpha, psi.n_max)
    denom = weighted_norm(psi, w, 0.0)
    if denom == 0.0:
        return 0.0
    from .fock import ChaosKernel

    kers = []
    for n in range(psi.n_max + 1):
        out = {}
        for tup, v in psi.coeffs(n).items():
            lam = sum((2 * math.pi * (kk if isinstance(kk, int) else kk[1])) ** 2
                      for kk in tup)
            out[tup] = v * math.exp(-t * lam)
        kers.append(ChaosKernel(n, psi.trunc, out, psi.species))
    flowed = FockVector(tuple(kers), psi.trunc, psi.n_max, psi.species)
    num = weighted_norm(flowed, w, beta) * t ** beta
    return num / denom


# ---------------------------------------------------------------------------
# CSV artifacts
# ---------------------------------------------------------------------------

def write_decay_csv(traj, path):
    """decay.csv: t, norm, bound = norm(0) exp(-4 pi^2 t)."""
    t = traj.diagnostics["t"]
    norm = traj.diagnostics["norm"]
    rate = 4.0 * math.pi ** 2
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "norm", "bound"])
        for tt, nn in zip(t, norm):
            wr.writerow([repr(float(tt)), repr(float(nn)),
                         repr(float(norm[0] * math.exp(-rate * tt)))])


def write_apriori_csv(reports, path):
    """apriori.csv: t, alpha, lhs1, rhs1, lhs2, rhs2, fitted_C."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "alpha", "lhs1", "rhs1", "lhs2", "rhs2", "fitted_C"])
        for rep in reports:
            for row in rep["rows"]:
                wr.writerow([repr(float(row[c])) if c != "alpha" else repr(float(row[c]))
                             for c in ("t", "alpha", "lhs1", "rhs1", "lhs2",
                                       "rhs2", "fitted_C")])
