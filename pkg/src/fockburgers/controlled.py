"""Controlled functions: fixed-point construction, remainder extraction,
generator on the controlled domain, quantitative density probes.

A controlled function solves  phi = inv_dissipation(high_drift(phi)) + sharp
for a given smooth remainder `sharp`, where high_drift keeps only output
Fourier tuples whose infinity norm clears the per-degree threshold of a
CutoffLaw.  On the stored truncation the split is exact, so the generator
acting on a controlled pair,  dissipation(sharp) + low_drift(phi),  equals
dissipation(phi) + drift(phi) identically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fock import FockVector, NumberWeight, poly_weight, weighted_norm
from .operators import (
    CutoffLaw,
    FockBasis,
    GeneratorParams,
    apply_fractional_dissipation,
    apply_laplacian_power,
    drift_coefficient_matrix,
    split_drift,
    _cutoff_mask,
)


class NonContractionError(RuntimeError):
    """The fixed-point map failed to contract; carries the observed factor."""

    def __init__(self, factor, message=None):
        self.factor = factor
        super().__init__(message or
                         f"fixed-point map is not a contraction (factor {factor:.3g});"
                         " raise the cutoff level")


@dataclass(frozen=True)
class ControlledPair:
    """phi = inv_dissipation(high_drift(phi)) + sharp, with the achieved defect."""

    phi: FockVector
    sharp: FockVector
    cutoff: CutoffLaw
    residual: float

    def rough_part(self):
        """phi minus its smooth remainder."""
        return self.phi - self.sharp


def _inv_dissipation_high(phi, params, cutoff):
    high, _ = split_drift(phi, params, cutoff)
    if params.theta == 1.0:
        return apply_laplacian_power(high, -1.0)
    return apply_fractional_dissipation(high, params, power=-1.0, signed=False)


def choose_cutoff_level(params, w, gamma, trunc, n_max, start=1.0,
                        target=0.5, max_doublings=40):
    """Smallest power-of-two multiple of `start` whose contraction factor is
    at or below `target` on the given truncation (the level selector)."""
    level = float(start)
    for _ in range(max_doublings):
        factor = estimate_contraction(params, CutoffLaw(level=level,
                                                        theta=params.theta),
                                      w, gamma, trunc, n_max)
        if factor <= target:
            return CutoffLaw(level=level, theta=params.theta), factor
        level *= 2.0
    raise NonContractionError(factor, "no admissible cutoff level found")


def solve_controlled(sharp, params, cutoff, w, gamma=0.5, tol=1e-12, max_iter=200,
                     certify=True):
    """Picard iteration for the controlled function with remainder `sharp`.

    gamma must lie in (1/4, 1/2]; the defect is measured relative to the
    weighted norm of `sharp`.  Raises NonContractionError when the empirical
    contraction factor reaches one, RuntimeError at the iteration cap.
    """
    if not 0.25 < gamma <= 0.5:
        raise ValueError(f"gamma = {gamma} outside (1/4, 1/2]")
    base = weighted_norm(sharp, w, gamma)
    if not math.isfinite(base):
        raise ValueError("sharp has infinite construction norm")
    if base == 0.0:
        return ControlledPair(sharp, sharp, cutoff, 0.0)
    psi = sharp
    prev_defect = None
    grew = 0
    for _ in range(max_iter):
        nxt = _inv_dissipation_high(psi, params, cutoff) + sharp
        defect = weighted_norm(nxt - psi, w, gamma)
        psi = nxt
        if defect <= tol * base:
            residual = weighted_norm(
                _inv_dissipation_high(psi, params, cutoff) + sharp - psi, w, gamma)
            if certify:
                lhs = weighted_norm(psi, w, gamma)
                if lhs > 2.0 * base * (1.0 + 1e-9):
                    raise NonContractionError(
                        lhs / base, "controlled norm exceeds twice the remainder norm")
            return ControlledPair(psi, sharp, cutoff, residual)
        if prev_defect is not None:
            ratio = defect / prev_defect
            grew = grew + 1 if ratio >= 1.0 else 0
            if grew >= 2:
                raise NonContractionError(ratio)
        prev_defect = defect
    raise RuntimeError(f"no convergence within {max_iter} iterations")


def remainder(phi, params, cutoff):
    """Smooth remainder phi - inv_dissipation(high_drift(phi))."""
    return phi - _inv_dissipation_high(phi, params, cutoff)


def apply_generator(pair, params, tol=1e-8):
    """Generator on a controlled pair: dissipation(sharp) + low_drift(phi).

    Exact on the stored truncation; requires the pair's residual below tol
    (relative residuals from solve_controlled are already absolute-scaled).
    """
    if pair.residual > tol:
        raise ValueError(f"pair residual {pair.residual:.3g} exceeds {tol:.3g}")
    if params.theta == 1.0:
        lin = apply_laplacian_power(pair.sharp, 1.0, signed=True)
    else:
        lin = apply_fractional_dissipation(pair.sharp, params)
    _, low = split_drift(pair.phi, params, pair.cutoff)
    return lin + low


def domain_bound_report(pair, params, w=None, gamma=0.0, delta=0.125):
    """Constant in the domain bound: the low drift part of the controlled
    function against the polynomially weighted quarter-plus-delta norm of the
    remainder, with chaos weight exponent 9/2 + 7*gamma."""
    n_top = pair.phi.n_max + 1
    w = w if w is not None else poly_weight(0.0, n_top)
    _, low = split_drift(pair.phi, params, pair.cutoff)
    lhs = weighted_norm(low, w, gamma)
    alpha = 4.5 + 7.0 * gamma
    shifted = NumberWeight(tuple(w(n) * (1.0 + n) ** alpha for n in range(len(w))))
    rhs = weighted_norm(pair.sharp, shifted, 0.25 + delta)
    return {"lhs": lhs, "rhs": rhs,
            "constant": lhs / rhs if rhs > 0 else math.inf,
            "alpha": alpha}


# ---------------------------------------------------------------------------
# contraction and gain probes (largest singular value oracles)
# ---------------------------------------------------------------------------

def _sigma_of_scaled(mat):
    if mat.nnz == 0:
        return 0.0
    if min(mat.shape) <= 500:
        return float(np.linalg.svd(mat.toarray(), compute_uv=False)[0])
    return float(spla.svds(mat, k=1, return_singular_vectors=False,
                           maxiter=10_000, tol=1e-10)[0])


def _weight_diag(basis, w, gamma):
    deg = basis.degrees
    lam = basis.lap
    vals = np.array([w(n) for n in deg], dtype=float)
    with np.errstate(divide="ignore"):
        out = vals * np.where(lam > 0, lam ** gamma, 1.0 if gamma == 0 else np.inf)
    return out


def _contraction_depth2(params, cutoff, w, gamma, trunc):
    """Exact largest singular value at chaos depth 2.

    The two high-part blocks (degree 1 -> 2 and 2 -> 1) have mutually
    orthogonal rows resp. columns, so the norm is a maximum of row and column
    norms, computable by direct summation; no basis enumeration is needed.
    """
    if params.species != 1:
        raise ValueError("depth-2 fast path is single species")
    m = params.galerkin
    amax = trunc if m is None else min(m, trunc)
    lam = lambda s: (2.0 * math.pi) ** 2 * s
    inv_theta = (lambda s: lam(s) ** (-1.0)) if params.theta == 1.0 else None

    sig2 = 0.0
    # block degree 2 -> 1: rows indexed by output mode k with |k| >= thr(1)
    thr1 = cutoff.threshold(1)
    p = np.arange(-amax, amax + 1)
    for k in range(-trunc, trunc + 1):
        if k == 0 or abs(k) < thr1 or (m is not None and abs(k) > m):
            continue
        q = k - p
        ok = (p != 0) & (q != 0) & (np.abs(q) <= amax) & (np.abs(p) <= amax)
        pp, qq = p[ok], q[ok]
        if params.theta == 1.0:
            inv_out = 1.0 / lam(float(k * k))
        else:
            inv_out = 1.0 / (2 * math.pi * abs(k)) ** (2 * params.theta)
        # |entry|^2 summed over ordered input pairs, ONB and weight scaled
        amp = (w(1) * lam(float(k * k)) ** gamma * inv_out * 4 * math.pi * abs(k)) ** 2
        row = amp * 0.5 * np.sum((w(2) * lam((pp * pp + qq * qq).astype(float)) ** gamma) ** (-2.0))
        sig2 = max(sig2, row)
    # block degree 1 -> 2: columns indexed by input mode ell
    thr2 = cutoff.threshold(2)
    a = np.arange(-trunc, trunc + 1)
    for ell in range(-trunc, trunc + 1):
        if ell == 0 or (m is not None and abs(ell) > m):
            continue
        b = ell - a
        ok = (a != 0) & (b != 0) & (np.abs(b) <= trunc) & (np.abs(a) <= trunc)
        ok &= np.maximum(np.abs(a), np.abs(b)) >= thr2
        if m is not None:
            ok &= (np.abs(a) <= m) & (np.abs(b) <= m)
        aa, bb = a[ok], b[ok]
        if aa.size == 0:
            continue
        s2 = (aa * aa + bb * bb).astype(float)
        if params.theta == 1.0:
            inv_out = lam(s2) ** (-1.0)
        else:
            inv_out = ((2 * math.pi * np.abs(aa)) ** (2 * params.theta)
                       + (2 * math.pi * np.abs(bb)) ** (2 * params.theta)) ** (-1.0)
        col = 2.0 * np.sum(
            (w(2) * lam(s2) ** gamma * inv_out * 2 * math.pi * abs(ell)) ** 2
            * (w(1) * lam(float(ell * ell)) ** gamma) ** (-2.0))
        sig2 = max(sig2, col)
    return math.sqrt(sig2)


def estimate_contraction(params, cutoff, w, gamma, trunc, n_max):
    """Largest singular value of the weighted fixed-point map
    inv_dissipation . high_drift on the given truncation."""
    if not math.isfinite(w.const):
        raise ValueError("contraction probe needs a strictly positive weight")
    if n_max <= 2 and params.species == 1:
        return _contraction_depth2(params, cutoff, w, gamma, trunc)
    basis = FockBasis(trunc, n_max, params.species)
    mat, _ = drift_coefficient_matrix(basis, params=params, part="both",
                                      cutoff=cutoff, high=True)
    onb = np.sqrt(basis.ip_weight)
    lam = basis.lap
    if params.theta == 1.0:
        inv = np.where(lam > 0, 1.0 / np.where(lam > 0, lam, 1.0), 0.0)
    else:
        frac = np.array([sum(abs(2 * math.pi * (kk if isinstance(kk, int) else kk[1]))
                             ** (2 * params.theta) for kk in t) or 1.0
                         for n in range(n_max + 1) for t in basis.tuples[n]])
        inv = np.where(lam > 0, 1.0 / frac, 0.0)
    d = _weight_diag(basis, w, gamma)
    d_out = np.zeros_like(d)  # high drift has no constant output
    pos = lam > 0
    d_out[pos] = d[pos] * inv[pos]
    scaled = sp.diags(onb * d_out) @ mat @ sp.diags(1.0 / (onb * d))
    return _sigma_of_scaled(scaled.tocsr())


def adapted_gain_probe(params, cutoff, w, gamma, trunc, n_max):
    """Weighted norm of inv_dissipation . high_drift measured against the
    (1+N)^(3/2), quarter-weaker smoothness norm; gamma in (1/2, 3/4)."""
    if not 0.5 < gamma < 0.75:
        raise ValueError(f"gamma = {gamma} outside (1/2, 3/4)")
    if not math.isfinite(w.const):
        raise ValueError("gain probe needs a strictly positive weight")
    basis = FockBasis(trunc, n_max, params.species)
    mat, _ = drift_coefficient_matrix(basis, params=params, part="both",
                                      cutoff=cutoff, high=True)
    onb = np.sqrt(basis.ip_weight)
    lam = basis.lap
    inv = np.where(lam > 0, 1.0 / np.where(lam > 0, lam, 1.0), 0.0)
    d_w = _weight_diag(basis, w, gamma)
    d_out = np.zeros_like(d_w)
    pos = lam > 0
    d_out[pos] = d_w[pos] * inv[pos]
    win = NumberWeight(tuple(w(n) * (1.0 + n) ** 1.5 for n in range(len(w))))
    d_in = _weight_diag(basis, win, gamma - 0.25)
    d_in[lam == 0] = np.inf
    scaled = sp.diags(onb * d_out) @ mat @ sp.diags(1.0 / (onb * d_in))
    return _sigma_of_scaled(scaled.tocsr())


def approx_in_domain(psi, level_multiplier, params, cutoff, w, gamma=0.5,
                     tol=1e-12, max_iter=200):
    """Quantitative density construction.

    Solves the modified fixed point whose high part starts at
    level_multiplier times the base thresholds, returning the controlled pair
    (with the remainder taken at the base cutoff) and the three diagnostic
    norms: approximation error and controlled norm at half smoothness, and
    the weighted norm of the generator image.
    """
    if level_multiplier < 1:
        raise ValueError("level multiplier must be >= 1")
    scaled_cutoff = CutoffLaw(level=cutoff.level * level_multiplier,
                              theta=cutoff.theta)
    try:
        pair_scaled = solve_controlled(psi, params, scaled_cutoff, w, gamma,
                                       tol=tol, max_iter=max_iter, certify=False)
    except NonContractionError as err:
        raise NonContractionError(err.factor,
                                  "density construction did not contract; "
                                  "raise the level multiplier") from err
    phi_m = pair_scaled.phi
    sharp_base = remainder(phi_m, params, cutoff)
    residual = weighted_norm(
        _inv_dissipation_high(phi_m, params, scaled_cutoff) + psi - phi_m, w, gamma)
    pair = ControlledPair(phi_m, sharp_base, cutoff, residual)
    # generator through the controlled structure: at the exact fixed point
    # dissipation(psi) + low-split drift equals dissipation + full drift
    if params.theta == 1.0:
        lin = apply_laplacian_power(psi, 1.0, signed=True)
    else:
        lin = apply_fractional_dissipation(psi, params)
    _, low = split_drift(phi_m, params, scaled_cutoff)
    gen = lin + low
    report = {
        "err_half": weighted_norm(phi_m - psi, w, 0.5),
        "phi_half": weighted_norm(phi_m, w, 0.5),
        "generator_norm": weighted_norm(gen, w, 0.0),
    }
    return pair, report
