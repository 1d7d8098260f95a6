"""Generator pieces in Fourier variables.

The dissipative part acts diagonally with multiplier -(2 pi)^2 sum k_i^2 (or
its fractional power).  The quadratic drift splits into a chaos-raising part,

    out_n(k_1..k_n) = -(n-1) 1{|k1|,|k2|,|k1+k2|<=m} 2 pi i (k1+k2)
                      in_{n-1}(k1+k2, k_3..k_n),

and a chaos-lowering part,

    out_n(k_1..k_n) = -2 pi i k1 n(n+1) sum_{p+q=k1} 1{|k1|,|p|,|q|<=m}
                      in_{n+1}(p, q, k_2..k_n),

both followed by symmetrization; they are mutually anti-adjoint.  Outputs
beyond the stored truncation are dropped (orthogonal projection), which keeps
the anti-adjointness exact on the stored space.  Multi-component systems
insert a fully symmetric coupling tensor; the fractional variant replaces the
dissipation exponent.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .fock import (
    TWO_PI,
    ChaosKernel,
    FockVector,
    ModeRangeError,
    SpectralField,
    canonical,
    empty_kernel,
    mode_species,
    mode_wavenumber,
    multiplicity,
)


class TrilinearityError(ValueError):
    """Coupling tensor is not symmetric in all three indices."""


def validate_trilinear(gamma):
    """Check full symmetry of a (d, d, d) coupling tensor; returns it as array."""
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 3 or len(set(g.shape)) != 1:
        raise TrilinearityError("coupling tensor must be d x d x d")
    for perm in itertools.permutations((0, 1, 2)):
        if not np.array_equal(g, np.transpose(g, perm)):
            raise TrilinearityError("coupling tensor violates the trilinear condition")
    return g


@dataclass(frozen=True)
class GeneratorParams:
    """Galerkin cutoff m, fractional exponent theta, species count and coupling.

    galerkin = 0 switches the drift off, None removes the Galerkin indicator
    (the limit drift, still projected to the stored truncation).
    """

    galerkin: int | None
    theta: float = 1.0
    species: int = 1
    coupling: tuple | None = None

    def __post_init__(self):
        if self.galerkin is not None and self.galerkin < 0:
            raise ValueError("galerkin cutoff must be >= 0 (or None for no cutoff)")
        if not 0.75 < self.theta <= 1.0:
            raise ValueError(f"theta = {self.theta} outside (3/4, 1]")
        if self.species < 1:
            raise ValueError("species count must be >= 1")
        if self.species > 1 or self.coupling is not None:
            g = validate_trilinear(self.coupling if self.coupling is not None
                                   else np.ones((1, 1, 1)))
            if g.shape[0] != self.species:
                raise ValueError("coupling tensor size does not match species count")
            object.__setattr__(self, "coupling",
                               tuple(tuple(tuple(row) for row in mat) for mat in g))

    def coupling_array(self):
        if self.coupling is None:
            return np.ones((1, 1, 1))
        return np.asarray(self.coupling, dtype=float)


@dataclass(frozen=True)
class CutoffLaw:
    """High/low split rule: threshold L (1 + n)^(3 / (4 theta - 3)) per degree n."""

    level: float
    theta: float = 1.0

    def __post_init__(self):
        if self.level < 1.0:
            raise ValueError("cutoff level L must be >= 1")
        if not 0.75 < self.theta <= 1.0:
            raise ValueError(f"theta = {self.theta} outside (3/4, 1]")

    @property
    def exponent(self):
        return 3.0 / (4.0 * self.theta - 3.0)

    def threshold(self, n):
        return self.level * (1.0 + n) ** self.exponent


def _tuple_infnorm(tup):
    return max((abs(mode_wavenumber(m)) for m in tup), default=0)


def _lap_multiplier(tup):
    return TWO_PI * TWO_PI * sum(mode_wavenumber(m) ** 2 for m in tup)


def _frac_multiplier(tup, theta):
    if theta == 1.0:
        return _lap_multiplier(tup)
    return sum(abs(TWO_PI * mode_wavenumber(m)) ** (2.0 * theta) for m in tup)


# ---------------------------------------------------------------------------
# diagonal operators
# ---------------------------------------------------------------------------

def apply_laplacian_power(phi, gamma, signed=False):
    """Multiply degree-n coefficients by ((2 pi)^2 sum k_i^2)^gamma.

    signed=True applies the dissipative sign (used for gamma = 1 to realize
    the generator's symmetric part).  gamma < 0 demands a zero constant.
    """
    sign = -1.0 if signed else 1.0
    kers = []
    for n in range(phi.n_max + 1):
        out = {}
        for t, v in phi.coeffs(n).items():
            lam = _lap_multiplier(t)
            if lam == 0.0:
                if gamma == 0.0:
                    out[t] = sign * v
                elif gamma < 0.0:
                    raise ValueError("inverse dissipation undefined on constants")
                continue
            out[t] = sign * lam ** gamma * v
        kers.append(ChaosKernel(n, phi.trunc, out, phi.species))
    return FockVector(tuple(kers), phi.trunc, phi.n_max, phi.species)


def apply_fractional_dissipation(phi, params, power=1.0, signed=True):
    """Multiply by (sum |2 pi k_i|^(2 theta))^power, with the dissipative sign."""
    theta = params.theta
    sign = -1.0 if signed else 1.0
    kers = []
    for n in range(phi.n_max + 1):
        out = {}
        for t, v in phi.coeffs(n).items():
            lam = _frac_multiplier(t, theta)
            if lam == 0.0:
                if power == 0.0:
                    out[t] = sign * v
                elif power < 0.0:
                    raise ValueError("inverse dissipation undefined on constants")
                continue
            out[t] = sign * lam ** power * v
        kers.append(ChaosKernel(n, phi.trunc, out, phi.species))
    return FockVector(tuple(kers), phi.trunc, phi.n_max, phi.species)


# ---------------------------------------------------------------------------
# drift parts, scatter implementation on canonical dictionaries
# ---------------------------------------------------------------------------

def _remove_index(tup, i):
    return tup[:i] + tup[i + 1:]


def _remove_two(tup, i, j):
    return tup[:i] + tup[i + 1:j] + tup[j + 1:]


def _distinct_pairs(tup):
    """Index pairs (i < j), one per distinct value pair (tup[i], tup[j])."""
    seen = set()
    for i in range(len(tup)):
        for j in range(i + 1, len(tup)):
            key = (tup[i], tup[j])
            if key not in seen:
                seen.add(key)
                yield i, j


def apply_drift_raise(phi, params, out_trunc=None, out_n_max=None):
    """Chaos-raising drift part; raises each degree by exactly one."""
    out_trunc = phi.trunc if out_trunc is None else out_trunc
    out_n_max = phi.n_max if out_n_max is None else out_n_max
    m = params.galerkin
    d = params.species
    gam = params.coupling_array() if d > 1 else None
    if phi.species != d:
        raise ValueError("species mismatch between vector and params")
    if m == 0:
        return FockVector(tuple(empty_kernel(n, out_trunc, d) for n in range(out_n_max + 1)),
                          out_trunc, out_n_max, d)
    amax = min(m, out_trunc) if m is not None else out_trunc
    acc = [dict() for _ in range(out_n_max + 2)]
    for j in range(1, phi.n_max + 1):
        n = j + 1  # output degree
        if n > out_n_max:
            continue
        pref = -float(j) * TWO_PI * 1j
        for s, v in phi.coeffs(j).items():
            for pos in range(j):
                if pos and s[pos] == s[pos - 1]:
                    continue
                lmode = s[pos]
                lk = mode_wavenumber(lmode)
                if m is not None and abs(lk) > m:
                    continue
                rest = _remove_index(s, pos)
                if any(abs(mode_wavenumber(mm)) > out_trunc for mm in rest):
                    continue
                mult_rest = multiplicity(rest)
                base = pref * lk * mult_rest * v
                for a in range(-amax, amax + 1):
                    if a == 0:
                        continue
                    b = lk - a
                    if b == 0 or abs(b) > amax or a > b:
                        continue
                    delta = 2.0 if a != b else 1.0
                    if d == 1:
                        t = canonical(rest + (a, b))
                        acc[n][t] = acc[n].get(t, 0.0) + delta * base
                    else:
                        li = mode_species(lmode)
                        for ia in range(d):
                            for ib in range(d):
                                # unordered mode pairs: a < b already dedupes
                                # wavenumbers, equal ones dedupe by species
                                if a == b and ia > ib:
                                    continue
                                w = gam[li, ia, ib]
                                if w == 0.0:
                                    continue
                                ma, mb = (ia, a), (ib, b)
                                dd = 1.0 if ma == mb else 2.0
                                t = canonical(rest + (ma, mb))
                                acc[n][t] = acc[n].get(t, 0.0) + dd * base * w
    return _finish_scatter(acc, out_trunc, out_n_max, d)


def apply_drift_lower(phi, params, out_trunc=None, out_n_max=None):
    """Chaos-lowering drift part; lowers each degree by exactly one."""
    out_trunc = phi.trunc if out_trunc is None else out_trunc
    out_n_max = phi.n_max if out_n_max is None else out_n_max
    m = params.galerkin
    d = params.species
    gam = params.coupling_array() if d > 1 else None
    if phi.species != d:
        raise ValueError("species mismatch between vector and params")
    acc = [dict() for _ in range(out_n_max + 2)]
    if m == 0:
        return _finish_scatter(acc, out_trunc, out_n_max, d)
    for j in range(2, phi.n_max + 1):
        n = j - 1  # output degree
        if n > out_n_max:
            continue
        pref = -TWO_PI * 1j * float(n) * float(j)
        for s, v in phi.coeffs(j).items():
            for i1, i2 in _distinct_pairs(s):
                mp, mq = s[i1], s[i2]
                kp, kq = mode_wavenumber(mp), mode_wavenumber(mq)
                a = kp + kq
                if a == 0 or abs(a) > out_trunc:
                    continue
                if m is not None and (abs(kp) > m or abs(kq) > m or abs(a) > m):
                    continue
                rest = _remove_two(s, i1, i2)
                if any(abs(mode_wavenumber(mm)) > out_trunc for mm in rest):
                    continue
                delta = 1.0 if mp == mq else 2.0
                base = pref * a * multiplicity(rest) * delta * v
                if d == 1:
                    t = canonical(rest + (a,))
                    acc[n][t] = acc[n].get(t, 0.0) + base
                else:
                    jp, jq = mode_species(mp), mode_species(mq)
                    for ia in range(d):
                        w = gam[ia, jp, jq]
                        if w == 0.0:
                            continue
                        t = canonical(rest + ((ia, a),))
                        acc[n][t] = acc[n].get(t, 0.0) + base * w
    return _finish_scatter(acc, out_trunc, out_n_max, d)


def _finish_scatter(acc, out_trunc, out_n_max, species):
    kers = []
    for n in range(out_n_max + 1):
        out = {}
        for t, v in acc[n].items():
            val = v / multiplicity(t)
            if val != 0:
                out[t] = val
        kers.append(ChaosKernel(n, out_trunc, out, species))
    return FockVector(tuple(kers), out_trunc, out_n_max, species)


def apply_drift(phi, params, out_trunc=None, out_n_max=None):
    """Full drift operator (raising plus lowering part)."""
    return (apply_drift_raise(phi, params, out_trunc, out_n_max)
            + apply_drift_lower(phi, params, out_trunc, out_n_max))


def apply_generator_full(phi, params, out_trunc=None, out_n_max=None):
    """Dissipation plus drift, with the truncation optionally enlarged so the
    drift output is exact (needed when testing against the process)."""
    out_trunc = phi.trunc if out_trunc is None else out_trunc
    out_n_max = phi.n_max if out_n_max is None else out_n_max
    lin = apply_laplacian_power(phi, 1.0, signed=True) if params.theta == 1.0 \
        else apply_fractional_dissipation(phi, params)
    return lin.with_truncation(out_trunc, out_n_max) + apply_drift(phi, params, out_trunc, out_n_max)


def split_drift(phi, params, cutoff, out_trunc=None, out_n_max=None):
    """Split the drift output into (high, low) by the per-degree threshold.

    The indicator tests the infinity norm of the output tuple against the
    output degree's threshold, high part taking >=.  high + low equals the
    full drift exactly.
    """
    full = apply_drift(phi, params, out_trunc, out_n_max)
    high_k, low_k = [], []
    for n in range(full.n_max + 1):
        thr = cutoff.threshold(n)
        hi, lo = {}, {}
        for t, v in full.coeffs(n).items():
            (hi if _tuple_infnorm(t) >= thr else lo)[t] = v
        high_k.append(ChaosKernel(n, full.trunc, hi, full.species))
        low_k.append(ChaosKernel(n, full.trunc, lo, full.species))
    high = FockVector(tuple(high_k), full.trunc, full.n_max, full.species)
    low = FockVector(tuple(low_k), full.trunc, full.n_max, full.species)
    return high, low


# ---------------------------------------------------------------------------
# Galerkin drift on spectral fields
# ---------------------------------------------------------------------------

def burgers_drift(u, params):
    """Projected quadratic drift of one realization, by direct convolution.

    B(k) = 2 pi i k 1{|k|<=m} sum_{p+q=k, p,q != 0, |p|,|q|<=m} u(p) u(q),
    with the coupling tensor inserted for multi-component systems.
    """
    m = params.galerkin
    d = params.species
    if d != u.species:
        raise ValueError("species mismatch")
    if m is None:
        m = u.trunc
    if m > u.trunc:
        raise ModeRangeError("field truncation radius below the Galerkin cutoff")
    out = {}
    if m > 0:
        gam = params.coupling_array()
        for i in range(d):
            for k in range(-m, m + 1):
                if k == 0:
                    continue
                acc = 0.0 + 0.0j
                for p in range(-m, m + 1):
                    q = k - p
                    if p == 0 or q == 0 or abs(q) > m:
                        continue
                    if d == 1:
                        acc += u.get(p) * u.get(q)
                    else:
                        for jp in range(d):
                            for jq in range(d):
                                w = gam[i, jp, jq]
                                if w != 0.0:
                                    acc += w * u.get((jp, p)) * u.get((jq, q))
                if acc != 0:
                    mode = k if d == 1 else (i, k)
                    out[mode] = TWO_PI * 1j * k * acc
            if d == 1:
                break
    return SpectralField(out, u.trunc, u.species, real=u.real)


# ---------------------------------------------------------------------------
# canonical basis enumeration and matrix oracles
# ---------------------------------------------------------------------------

class FockBasis:
    """Canonical tuple enumeration of the truncated space, degree by degree."""

    def __init__(self, trunc, n_max, species=1):
        self.trunc = trunc
        self.n_max = n_max
        self.species = species
        if species == 1:
            modes = [k for k in range(-trunc, trunc + 1) if k != 0]
        else:
            modes = [(i, k) for i in range(species)
                     for k in range(-trunc, trunc + 1) if k != 0]
        self.modes = sorted(modes)
        self.tuples = []
        self.index = []
        for n in range(n_max + 1):
            tups = list(itertools.combinations_with_replacement(self.modes, n))
            self.tuples.append(tups)
            self.index.append({t: i for i, t in enumerate(tups)})
        self.dims = [len(t) for t in self.tuples]
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)]).astype(int)
        self.size = int(self.offsets[-1])

    def degree_slice(self, n):
        return slice(int(self.offsets[n]), int(self.offsets[n + 1]))

    @cached_property
    def mult(self):
        return np.array([multiplicity(t) for n in range(self.n_max + 1)
                         for t in self.tuples[n]], dtype=float)

    @cached_property
    def factorials(self):
        return np.array([math.factorial(n) for n in range(self.n_max + 1)
                         for _ in self.tuples[n]], dtype=float)

    @cached_property
    def lap(self):
        """(2 pi)^2 sum k_i^2 per basis tuple."""
        return np.array([_lap_multiplier(t) for n in range(self.n_max + 1)
                         for t in self.tuples[n]], dtype=float)

    @cached_property
    def infnorm(self):
        return np.array([_tuple_infnorm(t) for n in range(self.n_max + 1)
                         for t in self.tuples[n]], dtype=float)

    @cached_property
    def degrees(self):
        return np.array([n for n in range(self.n_max + 1)
                         for _ in self.tuples[n]], dtype=int)

    @cached_property
    def ip_weight(self):
        """n! times multiplicity: diagonal of the inner product in coefficients."""
        return self.factorials * self.mult

    def to_coefficients(self, phi):
        if phi.trunc != self.trunc or phi.species != self.species:
            raise ValueError("vector truncation does not match basis")
        x = np.zeros(self.size, dtype=complex)
        for n in range(min(phi.n_max, self.n_max) + 1):
            idx = self.index[n]
            off = self.offsets[n]
            for t, v in phi.coeffs(n).items():
                x[off + idx[t]] = v
        return x

    def from_coefficients(self, x, prune=0.0):
        kers = []
        for n in range(self.n_max + 1):
            off = self.offsets[n]
            coeffs = {}
            for i, t in enumerate(self.tuples[n]):
                v = x[off + i]
                if v != 0 and abs(v) > prune:
                    coeffs[t] = complex(v)
            kers.append(ChaosKernel(n, self.trunc, coeffs, self.species))
        return FockVector(tuple(kers), self.trunc, self.n_max, self.species)

    def norm_of(self, x):
        return math.sqrt(float(np.sum(self.ip_weight * np.abs(x) ** 2)))


def _raise_blocks(basis, params, rows_mask=None):
    """COO triplets of the chaos-raising drift in coefficient space (gather)."""
    m = params.galerkin
    d = params.species
    gam = params.coupling_array() if d > 1 else None
    rows, cols, vals = [], [], []
    if m == 0:
        return rows, cols, vals
    for n in range(2, basis.n_max + 1):
        in_index = basis.index[n - 1]
        off_out, off_in = basis.offsets[n], basis.offsets[n - 1]
        pref = -float(n - 1) * TWO_PI * 1j
        for r, t in enumerate(basis.tuples[n]):
            row = off_out + r
            if rows_mask is not None and not rows_mask[row]:
                continue
            inv_mult = 1.0 / multiplicity(t)
            for i1, i2 in _distinct_pairs(t):
                ma, mb = t[i1], t[i2]
                ka, kb = mode_wavenumber(ma), mode_wavenumber(mb)
                lk = ka + kb
                if lk == 0 or abs(lk) > basis.trunc:
                    continue
                if m is not None and (abs(ka) > m or abs(kb) > m or abs(lk) > m):
                    continue
                rest = _remove_two(t, i1, i2)
                delta = 1.0 if ma == mb else 2.0
                w0 = delta * multiplicity(rest) * inv_mult * pref * lk
                if d == 1:
                    c = in_index.get(canonical(rest + (lk,)))
                    if c is not None:
                        rows.append(row); cols.append(off_in + c); vals.append(w0)
                else:
                    ia, ib = mode_species(ma), mode_species(mb)
                    for i in range(d):
                        g = gam[i, ia, ib]
                        if g == 0.0:
                            continue
                        c = in_index.get(canonical(rest + ((i, lk),)))
                        if c is not None:
                            rows.append(row); cols.append(off_in + c); vals.append(w0 * g)
    return rows, cols, vals


def _lower_blocks(basis, params, rows_mask=None):
    """COO triplets of the chaos-lowering drift in coefficient space (gather)."""
    m = params.galerkin
    d = params.species
    gam = params.coupling_array() if d > 1 else None
    rows, cols, vals = [], [], []
    if m == 0:
        return rows, cols, vals
    pmax = min(m, basis.trunc) if m is not None else basis.trunc
    for n in range(1, basis.n_max):
        in_index = basis.index[n + 1]
        off_out, off_in = basis.offsets[n], basis.offsets[n + 1]
        pref = -TWO_PI * 1j * float(n) * float(n + 1)
        for r, t in enumerate(basis.tuples[n]):
            row = off_out + r
            if rows_mask is not None and not rows_mask[row]:
                continue
            inv_mult = 1.0 / multiplicity(t)
            for pos in range(n):
                if pos and t[pos] == t[pos - 1]:
                    continue
                ma = t[pos]
                ka = mode_wavenumber(ma)
                if m is not None and abs(ka) > m:
                    continue
                rest = _remove_index(t, pos)
                w0 = multiplicity(rest) * inv_mult * pref * ka
                for p in range(-pmax, pmax + 1):
                    q = ka - p
                    if p == 0 or q == 0 or abs(q) > pmax:
                        continue
                    if d == 1:
                        c = in_index.get(canonical(rest + (p, q)))
                        if c is not None:
                            rows.append(row); cols.append(off_in + c); vals.append(w0)
                    else:
                        ia = mode_species(ma)
                        for jp in range(d):
                            for jq in range(d):
                                g = gam[ia, jp, jq]
                                if g == 0.0:
                                    continue
                                c = in_index.get(canonical(rest + ((jp, p), (jq, q))))
                                if c is not None:
                                    rows.append(row); cols.append(off_in + c)
                                    vals.append(w0 * g)
    return rows, cols, vals


def _cutoff_mask(basis, cutoff, high=True):
    thr = np.array([cutoff.threshold(n) for n in basis.degrees])
    return basis.infnorm >= thr if high else basis.infnorm < thr


DENSE_GUARD = 4500


def drift_coefficient_matrix(trunc_or_basis, n_max=None, params=None, part="both",
                             cutoff=None, high=True):
    """Sparse coefficient-space matrix of the drift (optionally split).

    part in {"raise", "lower", "both"}; with a cutoff, rows are restricted to
    the high (>= threshold) or low (< threshold) side.
    """
    basis = (trunc_or_basis if isinstance(trunc_or_basis, FockBasis)
             else FockBasis(trunc_or_basis, n_max, params.species))
    mask = None if cutoff is None else _cutoff_mask(basis, cutoff, high)
    rows, cols, vals = [], [], []
    if part in ("raise", "both"):
        r, c, v = _raise_blocks(basis, params, mask)
        rows += r; cols += c; vals += v
    if part in ("lower", "both"):
        r, c, v = _lower_blocks(basis, params, mask)
        rows += r; cols += c; vals += v
    return sp.coo_matrix((np.array(vals, dtype=complex), (rows, cols)),
                         shape=(basis.size, basis.size)).tocsr(), basis


def operator_matrix(which, trunc, n_max, params=None, cutoff=None,
                    gamma=0.0, dense=True, guard=DENSE_GUARD):
    """Dense (default) matrix of an operator in the multiplicity-weighted
    orthonormal basis, so that the matrix adjoint is the operator adjoint.

    which: "dissipation" (signed), "dissipation_power" (uses gamma),
    "fractional", "number", "drift_raise", "drift_lower", "drift",
    "drift_high", "drift_low".
    """
    params = params if params is not None else GeneratorParams(galerkin=None)
    basis = FockBasis(trunc, n_max, params.species)
    if dense and basis.size > guard:
        raise ValueError(f"basis size {basis.size} exceeds dense guard {guard}")
    onb = np.sqrt(basis.ip_weight)

    if which in ("dissipation", "dissipation_power", "fractional", "number"):
        if which == "dissipation":
            diag = -basis.lap
        elif which == "dissipation_power":
            with np.errstate(divide="ignore"):
                diag = np.where(basis.lap > 0, basis.lap ** gamma,
                                1.0 if gamma == 0 else 0.0)
            if gamma < 0 and np.any(basis.lap == 0):
                diag = np.where(basis.lap > 0, diag, 0.0)
        elif which == "fractional":
            diag = -np.array([_frac_multiplier(t, params.theta)
                              for n in range(n_max + 1) for t in basis.tuples[n]])
        else:
            diag = basis.degrees.astype(float)
        # diagonal operators commute with the orthonormal scaling
        mat = sp.diags(diag.astype(complex)).tocsr()
        return mat.toarray() if dense else mat
    else:
        part = {"drift_raise": "raise", "drift_lower": "lower", "drift": "both",
                "drift_high": "both", "drift_low": "both"}[which]
        use_cut = cutoff if which in ("drift_high", "drift_low") else None
        mat, basis = drift_coefficient_matrix(basis, params=params, part=part,
                                              cutoff=use_cut,
                                              high=(which != "drift_low"))
    # conjugate by the ONB scaling so adjointness is plain matrix adjointness
    mat = sp.diags(onb) @ mat @ sp.diags(1.0 / onb)
    return mat.toarray() if dense else mat.tocsr()


def export_matrix_csv(mat, path):
    """Write a dense complex matrix as CSV rows re,im pairs for inspection."""
    mat = np.asarray(mat)
    with open(path, "w") as fh:
        for row in mat:
            fh.write(",".join(f"{z.real!r};{z.imag!r}" for z in row) + "\n")


# ---------------------------------------------------------------------------
# tail-sum probe for the convolution estimate
# ---------------------------------------------------------------------------

def sum_estimate_probe(a, C, k_values, radius):
    """Ratios sum_{p+q=k,|p|<=radius} (p^2+q^2+C)^-a over (k^2+C)^-(a-1/2).

    Returns {k: ratio}; the maximum should stabilize as the radius grows when
    a > 1/2.
    """
    if a <= 0.5:
        raise ValueError("exponent must be > 1/2")
    out = {}
    p = np.arange(-radius, radius + 1, dtype=float)
    for k in k_values:
        if k * k + C <= 0:
            raise ValueError("k^2 + C must be positive")
        q = k - p
        s = np.sum((p * p + q * q + C) ** (-a))
        out[int(k)] = float(s / (k * k + C) ** (-(a - 0.5)))
    return out
