"""Truncated chaos expansions on the torus.

Symmetric Fourier-coefficient tensors are stored once per canonical (sorted)
mode tuple together with the tuple's permutation multiplicity.  A vector of
such kernels carries the norm  sum_n n! ||phi_n||^2, matching the isometry
between square-integrable functionals of white noise and the symmetric tensor
algebra.  Modes are nonzero integers `k` (single species) or pairs
`(species, k)`; the mean mode k = 0 is excluded throughout.

Pointwise evaluation of a kernel vector at a white-noise realization goes
through the real sine/cosine basis and products of probabilists' Hermite
polynomials.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)


class ZeroModeError(ValueError):
    """A Fourier mode k = 0 was supplied; kernels live on mean-zero space."""


class ModeRangeError(ValueError):
    """A Fourier mode lies outside the truncation radius."""


# ---------------------------------------------------------------------------
# modes and canonical tuples
# ---------------------------------------------------------------------------

def mode_wavenumber(mode):
    """Integer Fourier index of a mode (species stripped if present)."""
    return mode if isinstance(mode, int) else int(mode[1])


def mode_species(mode):
    return 0 if isinstance(mode, int) else int(mode[0])


def negate_mode(mode):
    if isinstance(mode, int):
        return -mode
    return (mode[0], -mode[1])


def _normalize_mode(mode, trunc, species):
    if species == 1:
        if isinstance(mode, tuple):
            if len(mode) != 2 or mode[0] != 0:
                raise ValueError(f"scalar kernels take integer modes, got {mode!r}")
            mode = mode[1]
        k = int(mode)
        out = k
    else:
        i, k = int(mode[0]), int(mode[1])
        if not 0 <= i < species:
            raise ValueError(f"species index {i} outside 0..{species - 1}")
        out = (i, k)
    if k == 0:
        raise ZeroModeError("mode k = 0 is not allowed on mean-zero space")
    if abs(k) > trunc:
        raise ModeRangeError(f"mode {k} outside truncation radius {trunc}")
    return out


def canonical(modes):
    """Sorted representative of a mode tuple."""
    return tuple(sorted(modes))


@lru_cache(maxsize=1 << 18)
def multiplicity(tup):
    """Number of distinct orderings of a canonical tuple."""
    n = len(tup)
    denom = 1
    for c in Counter(tup).values():
        denom *= math.factorial(c)
    return math.factorial(n) // denom


def negate_tuple(tup):
    return canonical(tuple(negate_mode(m) for m in tup))


def _distinct_positions(tup):
    """Indices i such that tup[i] is the first occurrence of its value."""
    return [i for i in range(len(tup)) if i == 0 or tup[i] != tup[i - 1]]


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChaosKernel:
    """Symmetric degree-n Fourier tensor in canonical storage.

    coeffs maps canonical mode tuples to the tensor value there; the value at
    any permutation of a stored tuple equals the stored value.
    """

    degree: int
    trunc: int
    coeffs: dict
    species: int = 1

    def get(self, modes):
        """Tensor value at an arbitrarily ordered tuple."""
        return self.coeffs.get(canonical(modes), 0.0 + 0.0j)

    def norm_sq(self):
        """Squared L2 norm over ordered tuples (multiplicity weighted)."""
        return sum(multiplicity(t) * abs(v) ** 2 for t, v in self.coeffs.items())

    def is_real(self, tol=1e-9):
        """True when coeffs(-k) = conj(coeffs(k)) within tol."""
        scale = max((abs(v) for v in self.coeffs.values()), default=0.0) or 1.0
        for t, v in self.coeffs.items():
            w = self.coeffs.get(negate_tuple(t), 0.0)
            if abs(w - np.conj(v)) > tol * scale:
                return False
        return True


def make_kernel(degree, entries, trunc, species=1):
    """Symmetrize raw tensor entries into canonical storage.

    entries is an iterable of (mode-tuple, value) pairs describing a raw,
    possibly unsymmetric tensor; unspecified slots are zero.  Values at
    permutation-equivalent tuples are averaged into the canonical slot.
    Raises ZeroModeError / ModeRangeError for illegal modes.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if isinstance(entries, dict):
        entries = entries.items()
    acc = {}
    for modes, value in entries:
        modes = tuple(modes)
        if len(modes) != degree:
            raise ValueError(f"expected {degree} modes, got {len(modes)}")
        norm = tuple(_normalize_mode(m, trunc, species) for m in modes)
        key = canonical(norm)
        acc[key] = acc.get(key, 0.0 + 0.0j) + complex(value)
    out = {}
    for key, total in acc.items():
        val = total / multiplicity(key)
        if val != 0:
            out[key] = val
    return ChaosKernel(degree=degree, trunc=trunc, coeffs=out, species=species)


def symmetric_kernel(degree, entries, trunc, species=1):
    """Build a kernel from values that are already symmetric.

    Each (tuple, value) pair assigns the tensor value at the canonical slot
    directly (every permutation of the tuple takes the same value); duplicate
    canonical tuples are an error.
    """
    if isinstance(entries, dict):
        entries = entries.items()
    out = {}
    for modes, value in entries:
        norm = tuple(_normalize_mode(m, trunc, species) for m in tuple(modes))
        if len(norm) != degree:
            raise ValueError(f"expected {degree} modes, got {len(norm)}")
        key = canonical(norm)
        if key in out:
            raise ValueError(f"duplicate canonical tuple {key}")
        if value != 0:
            out[key] = complex(value)
    return ChaosKernel(degree=degree, trunc=trunc, coeffs=out, species=species)


def empty_kernel(degree, trunc, species=1):
    return ChaosKernel(degree=degree, trunc=trunc, coeffs={}, species=species)


def kernel_from_json(doc, trunc, species=1):
    """Read a kernel literal {"degree": n, "entries": [[[k...], [re, im]], ...]}.

    Entries are symmetric-tensor values: each tuple stands for its whole
    permutation class, so listing two permutations of one tuple is an error.
    """
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    entries = []
    for modes, (re, im) in doc["entries"]:
        modes = tuple(tuple(m) if isinstance(m, list) else m for m in modes)
        entries.append((modes, complex(re, im)))
    return symmetric_kernel(int(doc["degree"]), entries, trunc, species=species)


def kernel_to_json(kernel):
    entries = [[list(t) if kernel.species > 1 else list(t), [v.real, v.imag]]
               for t, v in sorted(kernel.coeffs.items())]
    return json.dumps({"degree": kernel.degree, "entries": entries})


# ---------------------------------------------------------------------------
# vectors of kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FockVector:
    """Truncated chaos expansion: one ChaosKernel per degree 0..n_max."""

    kernels: tuple
    trunc: int
    n_max: int
    species: int = 1

    def __post_init__(self):
        if len(self.kernels) != self.n_max + 1:
            raise ValueError("need one kernel per degree 0..n_max")
        for n, ker in enumerate(self.kernels):
            if ker.degree != n or ker.trunc != self.trunc or ker.species != self.species:
                raise ValueError("kernel metadata inconsistent with vector")

    def kernel(self, n):
        return self.kernels[n]

    def coeffs(self, n):
        return self.kernels[n].coeffs

    def __add__(self, other):
        _check_compatible(self, other)
        n_max = max(self.n_max, other.n_max)
        kers = []
        for n in range(n_max + 1):
            a = self.coeffs(n) if n <= self.n_max else {}
            b = other.coeffs(n) if n <= other.n_max else {}
            merged = dict(a)
            for t, v in b.items():
                s = merged.get(t, 0.0) + v
                if s == 0 and t in merged:
                    del merged[t]
                else:
                    merged[t] = s
            kers.append(ChaosKernel(n, self.trunc, merged, self.species))
        return FockVector(tuple(kers), self.trunc, n_max, self.species)

    def __sub__(self, other):
        return self + (other * (-1.0))

    def __mul__(self, scalar):
        scalar = complex(scalar)
        kers = tuple(
            ChaosKernel(n, self.trunc,
                        {t: v * scalar for t, v in self.coeffs(n).items() if v * scalar != 0},
                        self.species)
            for n in range(self.n_max + 1))
        return FockVector(kers, self.trunc, self.n_max, self.species)

    __rmul__ = __mul__

    def norm(self):
        return math.sqrt(max(inner_product(self, self).real, 0.0))

    def is_real(self, tol=1e-9):
        return all(k.is_real(tol) for k in self.kernels)

    def is_zero(self):
        return all(not k.coeffs for k in self.kernels)

    def max_degree_present(self):
        for n in range(self.n_max, -1, -1):
            if self.coeffs(n):
                return n
        return -1

    def with_truncation(self, trunc=None, n_max=None):
        """Embed into a (weakly) larger truncation."""
        trunc = self.trunc if trunc is None else trunc
        n_max = self.n_max if n_max is None else n_max
        if trunc < self.trunc or n_max < self.n_max:
            raise ValueError("with_truncation only enlarges; use project() to shrink")
        kers = [ChaosKernel(n, trunc, dict(self.coeffs(n)) if n <= self.n_max else {},
                            self.species)
                for n in range(n_max + 1)]
        return FockVector(tuple(kers), trunc, n_max, self.species)

    def project(self, trunc=None, n_max=None):
        """Orthogonal projection onto a smaller truncation."""
        trunc = self.trunc if trunc is None else trunc
        n_max = min(self.n_max if n_max is None else n_max, self.n_max)
        kers = []
        for n in range(n_max + 1):
            kept = {t: v for t, v in self.coeffs(n).items()
                    if all(abs(mode_wavenumber(m)) <= trunc for m in t)}
            kers.append(ChaosKernel(n, trunc, kept, self.species))
        return FockVector(tuple(kers), trunc, n_max, self.species)


def _check_compatible(a, b):
    if a.trunc != b.trunc or a.species != b.species:
        raise ValueError("incompatible truncations")


def fock_vector(kernels, trunc, n_max=None, species=1):
    """Assemble a FockVector from kernels (any degrees, missing ones zero)."""
    by_degree = {}
    for ker in kernels:
        if ker.degree in by_degree:
            raise ValueError(f"two kernels of degree {ker.degree}")
        by_degree[ker.degree] = ker
    if n_max is None:
        n_max = max(by_degree) if by_degree else 0
    kers = tuple(by_degree.get(n, empty_kernel(n, trunc, species))
                 for n in range(n_max + 1))
    return FockVector(kers, trunc, n_max, species)


def zero_vector(trunc, n_max, species=1):
    return fock_vector([], trunc, n_max, species)


def conj_reflect(phi):
    """phi with coefficients k -> conj(coeff(-k)); fixed points are real."""
    kers = [ChaosKernel(n, phi.trunc,
                        {negate_tuple(t): np.conj(v) for t, v in phi.coeffs(n).items()},
                        phi.species)
            for n in range(phi.n_max + 1)]
    return FockVector(tuple(kers), phi.trunc, phi.n_max, phi.species)


def realify(phi):
    """Project onto the real (conjugate-symmetric) part."""
    return (phi + conj_reflect(phi)) * 0.5


def inner_product(phi, psi):
    """Fock inner product sum_n n! <phi_n, psi_n>, second slot conjugated."""
    _check_compatible(phi, psi)
    total = 0.0 + 0.0j
    for n in range(min(phi.n_max, psi.n_max) + 1):
        a, b = phi.coeffs(n), psi.coeffs(n)
        if len(b) < len(a):
            small, other, flip = b, a, True
        else:
            small, other, flip = a, b, False
        acc = 0.0 + 0.0j
        for t, v in small.items():
            w = other.get(t)
            if w is not None:
                acc += multiplicity(t) * (np.conj(v) * w if flip else v * np.conj(w))
        total += math.factorial(n) * acc
    return complex(total)


# ---------------------------------------------------------------------------
# weights in the chaos index
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NumberWeight:
    """Table w(0..n_top) of nonnegative weights on the chaos index."""

    values: tuple
    const: float = field(init=False)

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(v < 0 for v in vals) or not vals:
            raise ValueError("weights must be nonnegative")
        c = 1.0
        for i in range(len(vals) - 1):
            a, b = vals[i], vals[i + 1]
            if (a == 0) != (b == 0):
                c = math.inf
                break
            if a > 0:
                c = max(c, a / b, b / a)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "const", c)

    def __call__(self, n):
        return self.values[n]

    def __len__(self):
        return len(self.values)

    def scaled(self, factor):
        return NumberWeight(tuple(v * factor for v in self.values))


def unit_weight(n_top):
    return NumberWeight((1.0,) * (n_top + 1))


def poly_weight(alpha, n_top):
    """w(n) = (1 + n)^alpha."""
    return NumberWeight(tuple((1.0 + n) ** alpha for n in range(n_top + 1)))


def geometric_weight(c, n_top):
    """w(n) = c^n."""
    return NumberWeight(tuple(c ** n for n in range(n_top + 1)))


def _lap_multiplier(tup):
    """(2 pi)^2 sum_i k_i^2 for a mode tuple."""
    return TWO_PI * TWO_PI * sum(mode_wavenumber(m) ** 2 for m in tup)


def weighted_norm(phi, w, gamma):
    """|| w(N) (-L_0)^gamma phi ||.

    gamma < 0 requires a vanishing constant component (the inverse of the
    dissipation is undefined on constants).
    """
    if len(w) < phi.n_max + 1:
        raise ValueError("weight table shorter than chaos truncation")
    total = 0.0
    for n in range(phi.n_max + 1):
        wn = w(n)
        fact = math.factorial(n)
        for t, v in phi.coeffs(n).items():
            lam = _lap_multiplier(t)
            if lam == 0.0:
                if gamma == 0.0:
                    total += fact * wn * wn * multiplicity(t) * abs(v) ** 2
                elif gamma < 0.0 and v != 0:
                    raise ValueError("nonzero constant component with gamma < 0")
                continue
            total += fact * wn * wn * multiplicity(t) * lam ** (2 * gamma) * abs(v) ** 2
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# dyadic partition of unity on the chaos index
# ---------------------------------------------------------------------------

def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def _dyadic_bump(s):
    """Quintic bump on (-1, 1) with sum_i bump(t - i) = 1 (telescoping)."""
    return _smoothstep(s + 1.0) - _smoothstep(s)


def dyadic_weights(n_max):
    """Dyadic blocks rho_{-1}, rho_0, ... sampled on n = 0..n_max+1.

    supp rho_i is within [2^(i-1), 2^(i+1)] for i >= 0, neighbouring blocks
    overlap one octave, and the blocks sum to one exactly.
    """
    if n_max < 1:
        raise ValueError("n_max >= 1 required")
    n_top = n_max + 1
    i_top = int(math.floor(math.log2(n_top))) + 1
    ns = np.arange(n_top + 1)
    tables = []
    cover = np.zeros(n_top + 1)
    for i in range(i_top + 1):
        vals = np.zeros(n_top + 1)
        pos = ns >= 1
        vals[pos] = _dyadic_bump(np.log2(ns[pos]) - i)
        cover += vals
        tables.append(vals)
    low = 1.0 - cover  # rho_{-1}: everything below the first octave
    out = [NumberWeight(tuple(np.maximum(low, 0.0)))]
    out.extend(NumberWeight(tuple(v)) for v in tables)
    return out


# ---------------------------------------------------------------------------
# spectral fields and white noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of one realization; mean mode absent."""

    coeffs: dict
    trunc: int
    species: int = 1
    real: bool = True

    def get(self, mode):
        return self.coeffs.get(mode, 0.0 + 0.0j)

    def check_real(self, tol=1e-12):
        scale = max((abs(v) for v in self.coeffs.values()), default=0.0) or 1.0
        for m, v in self.coeffs.items():
            if abs(self.coeffs.get(negate_mode(m), 0.0) - np.conj(v)) > tol * scale:
                return False
        return True


def spectral_field(entries, trunc, species=1, real=True):
    coeffs = {}
    for mode, value in (entries.items() if isinstance(entries, dict) else entries):
        m = _normalize_mode(mode, trunc, species)
        coeffs[m] = coeffs.get(m, 0.0 + 0.0j) + complex(value)
    return SpectralField(coeffs, trunc, species, real)


def sample_white_noise(trunc, rng, species=1):
    """Draw one white-noise realization: u(k) = (g1 + i g2)/sqrt(2), E|u(k)|^2 = 1."""
    if trunc < 1:
        raise ValueError("truncation radius must be >= 1")
    g = rng.standard_normal((species, 2, trunc))
    coeffs = {}
    for i in range(species):
        for j in range(trunc):
            z = complex(g[i, 0, j], g[i, 1, j]) / SQRT2
            kp = j + 1 if species == 1 else (i, j + 1)
            km = -(j + 1) if species == 1 else (i, -(j + 1))
            coeffs[kp] = z
            coeffs[km] = np.conj(z)
    return SpectralField(coeffs, trunc, species, real=True)


# ---------------------------------------------------------------------------
# evaluation through the real basis and Hermite products
# ---------------------------------------------------------------------------

def _coord_count(trunc, species):
    return 2 * trunc * species


def _coord_index(mode, trunc):
    """Flat index of the cos (s=0) / sin (s=1) coordinates for |k|."""
    i = mode_species(mode)
    j = abs(mode_wavenumber(mode))
    return 2 * (i * trunc + (j - 1))


def real_expansion(phi):
    """Expand a kernel vector over the real orthonormal basis.

    Returns a dict mapping a sorted tuple of (coordinate, order) pairs to a
    real coefficient; the represented functional is the sum over keys of
    coeff * prod He_order(xi_coordinate).
    """
    if not phi.is_real():
        raise ValueError("evaluation requires a real-flagged kernel vector")
    acc = {}
    for n in range(phi.n_max + 1):
        for t, v in phi.coeffs(n).items():
            weight = v * multiplicity(t)
            options = []
            for m in t:
                k = mode_wavenumber(m)
                base = _coord_index(m, phi.trunc)
                options.append(((base, 1.0 / SQRT2),
                                (base + 1, 1j * math.copysign(1.0, k) / SQRT2)))
            for choice in itertools.product(*options):
                coeff = weight
                coords = []
                for idx, fac in choice:
                    coeff *= fac
                    coords.append(idx)
                key = tuple(sorted(coords))
                acc[key] = acc.get(key, 0.0 + 0.0j) + coeff
    out = {}
    for key, coeff in acc.items():
        if abs(coeff) < 1e-15:
            continue
        ms = tuple(sorted(Counter(key).items()))
        out[ms] = out.get(ms, 0.0) + coeff.real
    return out


def _hermite_table(xi, max_order):
    """He_r(xi) for r = 0..max_order; xi has shape (paths, coords)."""
    paths, coords = xi.shape
    tab = np.empty((max_order + 1, paths, coords))
    tab[0] = 1.0
    if max_order >= 1:
        tab[1] = xi
    for r in range(1, max_order):
        tab[r + 1] = xi * tab[r] - r * tab[r - 1]
    return tab


def coordinates_from_field(u):
    """Standard-normal coordinates of a realization in the real basis."""
    xi = np.zeros(_coord_count(u.trunc, u.species))
    for i in range(u.species):
        for j in range(1, u.trunc + 1):
            mode = j if u.species == 1 else (i, j)
            z = u.get(mode)
            base = 2 * (i * u.trunc + (j - 1))
            xi[base] = SQRT2 * z.real
            xi[base + 1] = -SQRT2 * z.imag
    return xi


def coordinates_from_modes(U, trunc):
    """Vectorized coordinates from positive-mode arrays U (paths, species, R+1)."""
    paths, species, _ = U.shape
    xi = np.empty((paths, 2 * trunc * species))
    xi[:, 0::2] = SQRT2 * U[:, :, 1:trunc + 1].real.reshape(paths, -1)
    xi[:, 1::2] = -SQRT2 * U[:, :, 1:trunc + 1].imag.reshape(paths, -1)
    return xi


def evaluate_coordinates(phi, xi, expansion=None):
    """Evaluate on coordinate arrays of shape (paths, 2*trunc*species)."""
    if expansion is None:
        expansion = real_expansion(phi)
    if not expansion:
        return np.zeros(xi.shape[0])
    max_order = max((o for ms in expansion for _, o in ms), default=0)
    tab = _hermite_table(xi, max_order)
    out = np.zeros(xi.shape[0])
    for ms, coeff in expansion.items():
        term = np.full(xi.shape[0], coeff)
        for coord, order in ms:
            term = term * tab[order, :, coord]
        out += term
    return out


def evaluate(phi, u):
    """Wiener-Ito evaluation of a real kernel vector at one realization."""
    xi = coordinates_from_field(u)[None, :]
    return float(evaluate_coordinates(phi, xi)[0])
