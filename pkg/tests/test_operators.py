"""Operator algebra: diagonal multipliers, drift parts vs brute-force oracles,
anti-adjointness, split, Galerkin drift on fields, matrix oracles, tail sums."""
import math

import numpy as np
import pytest

from fockburgers import (
    CutoffLaw,
    GeneratorParams,
    TrilinearityError,
    apply_drift,
    apply_drift_lower,
    apply_drift_raise,
    apply_fractional_dissipation,
    apply_laplacian_power,
    burgers_drift,
    fock_vector,
    inner_product,
    make_kernel,
    operator_matrix,
    realify,
    spectral_field,
    split_drift,
    stream,
    sum_estimate_probe,
    symmetric_kernel,
    unit_weight,
    validate_trilinear,
    weighted_norm,
    zero_vector,
)
from fockburgers.fock import sample_white_noise
from fockburgers.operators import FockBasis, drift_coefficient_matrix

from _oracles import dense_tensor, lower_dense, raise_dense, random_vector

TWO_PI = 2.0 * math.pi
PARAMS_FREE = GeneratorParams(galerkin=None)


# ---------------------------------------------------------------------------
# diagonal operators
# ---------------------------------------------------------------------------

def test_laplacian_single_mode():
    phi = fock_vector([symmetric_kernel(1, [((2,), 1.0)], 4)], 4)
    out = apply_laplacian_power(phi, 1.0, signed=True)
    assert out.coeffs(1)[(2,)] == pytest.approx(-16 * math.pi ** 2)


def test_laplacian_half_power_pair():
    phi = fock_vector([symmetric_kernel(2, [((1, 1), 1.0)], 4)], 4)
    out = apply_laplacian_power(phi, 0.5)
    assert out.coeffs(2)[(1, 1)] == pytest.approx(math.sqrt(8.0) * math.pi)


def test_laplacian_power_inverse_roundtrip():
    rng = stream(21, "lap")
    phi = random_vector(rng, 4, 3)
    back = apply_laplacian_power(apply_laplacian_power(phi, 0.7), -0.7)
    diff = back - phi
    assert diff.norm() <= 1e-12 * phi.norm()


def test_fractional_reduces_to_laplacian():
    rng = stream(22, "frac")
    phi = random_vector(rng, 4, 3)
    a = apply_fractional_dissipation(phi, GeneratorParams(galerkin=None, theta=1.0))
    b = apply_laplacian_power(phi, 1.0, signed=True)
    assert (a - b).norm() == 0.0


def test_fractional_single_mode():
    phi = fock_vector([symmetric_kernel(1, [((2,), 1.0)], 4)], 4)
    out = apply_fractional_dissipation(phi, GeneratorParams(galerkin=None, theta=0.8))
    assert out.coeffs(1)[(2,)] == pytest.approx(-(4 * math.pi) ** 1.6)


def test_fractional_inverse_comparison():
    # sum |2 pi k|^(2 theta) >= ((2 pi)^2 sum k^2)^theta, so the inverse of the
    # fractional dissipation is dominated by the theta power of the inverse
    # dissipation (direct multiplier comparison)
    rng = stream(23, "comp")
    params = GeneratorParams(galerkin=None, theta=0.8)
    for _ in range(5):
        phi = random_vector(rng, 4, 3)
        inv_frac = apply_fractional_dissipation(phi, params, power=-1.0, signed=False)
        inv_lap = apply_laplacian_power(phi, -0.8)
        assert inv_frac.norm() <= inv_lap.norm() * (1 + 1e-12)


# ---------------------------------------------------------------------------
# drift parts against worked examples and the dense oracle
# ---------------------------------------------------------------------------

def test_raise_degree_one_example():
    phi = fock_vector([symmetric_kernel(1, [((2,), 1.0)], 6)], 6, n_max=2)
    out = apply_drift_raise(phi, GeneratorParams(galerkin=4))
    ker = out.coeffs(2)
    for (a, b), v in ker.items():
        assert a + b == 2 and abs(a) <= 4 and abs(b) <= 4
        assert v == pytest.approx(-4j * math.pi)
    # admissible unordered pairs with a+b=2, |.|<=4: (1,1), (-1,3), (-2,4)
    assert len(ker) == 3


def test_raise_kills_constants():
    phi = fock_vector([make_kernel(0, [((), 3.0)], 4)], 4, n_max=2)
    out = apply_drift_raise(phi, GeneratorParams(galerkin=4))
    assert out.is_zero()


def test_lower_pair_example():
    phi = fock_vector([symmetric_kernel(2, [((1, 1), 1.0)], 4)], 4)
    out = apply_drift_lower(phi, GeneratorParams(galerkin=2))
    assert set(out.coeffs(1)) == {(2,)}
    assert out.coeffs(1)[(2,)] == pytest.approx(-8j * math.pi)


def test_lower_degree_one_vanishes():
    phi = fock_vector([symmetric_kernel(1, [((1,), 1.0), ((-1,), 1.0)], 4)], 4)
    out = apply_drift_lower(phi, GeneratorParams(galerkin=4))
    assert out.is_zero()


@pytest.mark.parametrize("m", [2, 3, None])
def test_raise_matches_dense_oracle(m):
    rng = stream(31, f"raise-{m}")
    trunc = 4
    for deg in (1, 2):
        phi = random_vector(rng, trunc, deg, density=0.3, real=False)
        out = apply_drift_raise(phi, GeneratorParams(galerkin=m),
                                out_n_max=deg + 1)
        want = raise_dense(dense_tensor(phi.kernel(deg), trunc), trunc, m)
        got = dense_tensor(out.kernel(deg + 1), trunc)
        assert np.allclose(got, want, atol=1e-10)


@pytest.mark.parametrize("m", [2, 3, None])
def test_lower_matches_dense_oracle(m):
    rng = stream(32, f"lower-{m}")
    trunc = 4
    for deg in (2, 3):
        phi = random_vector(rng, trunc, deg, density=0.3, real=False)
        out = apply_drift_lower(phi, GeneratorParams(galerkin=m))
        want = lower_dense(dense_tensor(phi.kernel(deg), trunc), trunc, m)
        got = dense_tensor(out.kernel(deg - 1), trunc)
        assert np.allclose(got, want, atol=1e-10)


def test_drift_linear_and_degree_bookkeeping():
    rng = stream(33, "lin")
    params = GeneratorParams(galerkin=3)
    a = random_vector(rng, 4, 2, real=False)
    b = random_vector(rng, 4, 2, real=False)
    lin = apply_drift(a, params, out_n_max=3) * 2.0 + apply_drift(b, params, out_n_max=3) * (
        -1.5 + 0.5j)
    direct = apply_drift(a * 2.0 + b * (-1.5 + 0.5j), params, out_n_max=3)
    assert (lin - direct).norm() <= 1e-12 * (lin.norm() + 1)
    only2 = fock_vector([a.kernel(2)], 4, 3)
    up = apply_drift_raise(only2, params, out_n_max=3)
    down = apply_drift_lower(only2, params, out_n_max=3)
    assert up.max_degree_present() in (-1, 3) and down.max_degree_present() in (-1, 1)
    assert not up.coeffs(1) and not up.coeffs(2)
    assert not down.coeffs(2) and not down.coeffs(3)


def test_adjointness_random_pairs():
    rng = stream(34, "adjoint")
    trunc = 8
    for m in (2, 4, 8):
        params = GeneratorParams(galerkin=m)
        for _ in range(10):
            n = int(rng.integers(1, 3))
            phi = random_vector(rng, trunc, n, density=0.1, real=False)
            psi = random_vector(rng, trunc, n + 1, density=0.1, real=False)
            psi = fock_vector([psi.kernel(n + 1)], trunc, n + 1)
            lhs = inner_product(psi, apply_drift_raise(phi, params, out_n_max=n + 1))
            rhs = -inner_product(apply_drift_lower(psi, params), phi)
            scale = abs(lhs) + abs(rhs) + 1e-30
            assert abs(lhs - rhs) / scale <= 1e-10


def test_drift_zero_when_galerkin_zero():
    rng = stream(35, "mzero")
    phi = random_vector(rng, 4, 3)
    assert apply_drift(phi, GeneratorParams(galerkin=0)).is_zero()


# ---------------------------------------------------------------------------
# high/low split
# ---------------------------------------------------------------------------

def test_split_empty_when_level_huge():
    rng = stream(41, "split")
    phi = random_vector(rng, 6, 3)
    params = GeneratorParams(galerkin=6)
    high, low = split_drift(phi, params, CutoffLaw(level=1e6))
    assert high.is_zero()
    assert (low - apply_drift(phi, params)).norm() == 0.0


def test_split_threshold_degree_one():
    # level 1: degree-1 threshold is 8, split exactly at |k| >= 8
    phi = fock_vector([symmetric_kernel(2, [((3, 5), 1.0), ((3, 4), 1.0)], 8)], 8)
    params = GeneratorParams(galerkin=8)
    high, low = split_drift(phi, params, CutoffLaw(level=1.0))
    assert set(high.coeffs(1)) == {(8,)}
    assert (7,) in low.coeffs(1)


def test_split_is_partition():
    rng = stream(42, "split2")
    phi = random_vector(rng, 8, 3, density=0.1)
    params = GeneratorParams(galerkin=8)
    high, low = split_drift(phi, params, CutoffLaw(level=1.0))
    resid = (high + low) - apply_drift(phi, params)
    assert resid.norm() <= 1e-14 * (high.norm() + low.norm() + 1)


def test_cutoff_law_invariants():
    law = CutoffLaw(level=1.0)
    assert law.exponent == pytest.approx(3.0)
    assert law.threshold(1) == pytest.approx(8.0)
    thr = [law.threshold(n) for n in range(6)]
    assert all(a <= b for a, b in zip(thr, thr[1:]))
    law2 = CutoffLaw(level=2.0, theta=0.9)
    assert law2.exponent == pytest.approx(3.0 / (4 * 0.9 - 3.0))
    with pytest.raises(ValueError):
        CutoffLaw(level=0.0)
    with pytest.raises(ValueError):
        CutoffLaw(level=1.0, theta=0.7)


# ---------------------------------------------------------------------------
# Galerkin drift on spectral fields
# ---------------------------------------------------------------------------

def test_burgers_drift_cosine():
    u = spectral_field({1: 0.5, -1: 0.5}, trunc=4)
    b = burgers_drift(u, GeneratorParams(galerkin=2))
    assert b.get(2) == pytest.approx(1j * math.pi)
    assert b.get(-2) == pytest.approx(-1j * math.pi)
    assert b.get(1) == 0.0


def test_burgers_drift_orthogonal():
    rng = stream(51, "drift")
    for _ in range(10):
        u = sample_white_noise(8, rng)
        b = burgers_drift(u, GeneratorParams(galerkin=8))
        ip = sum(np.conj(v) * b.get(k) for k, v in u.coeffs.items())
        scale = math.sqrt(sum(abs(v) ** 2 for v in u.coeffs.values())) * \
            math.sqrt(sum(abs(v) ** 2 for v in b.coeffs.values()) + 1e-300)
        assert abs(ip.real) <= 1e-13 * max(scale, 1.0)


def test_burgers_drift_projection_active():
    m = 4
    u = spectral_field({m: 1.0, -m: 1.0}, trunc=2 * m)
    b = burgers_drift(u, GeneratorParams(galerkin=m))
    assert all(abs(k) <= m for k in b.coeffs)


# ---------------------------------------------------------------------------
# matrix oracles
# ---------------------------------------------------------------------------

def test_matrix_dissipation_diagonal():
    mat = operator_matrix("dissipation", trunc=3, n_max=2)
    assert np.allclose(mat, np.diag(np.diag(mat)))
    assert np.all(np.diag(mat).real <= 0)
    assert np.allclose(np.diag(mat).imag, 0)


def test_matrix_adjointness():
    params = GeneratorParams(galerkin=3)
    up = operator_matrix("drift_raise", 4, 3, params)
    down = operator_matrix("drift_lower", 4, 3, params)
    assert np.allclose(up.conj().T + down, 0.0, atol=1e-12)


def test_matrix_drift_skew():
    params = GeneratorParams(galerkin=4)
    g = operator_matrix("drift", 4, 3, params)
    herm = (g + g.conj().T) / 2
    eig = np.linalg.eigvalsh(herm)
    assert np.max(np.abs(eig)) <= 1e-10


def test_matrix_matches_apply():
    rng = stream(61, "matvec")
    params = GeneratorParams(galerkin=3)
    basis = FockBasis(4, 3)
    mat, _ = drift_coefficient_matrix(basis, params=params)
    phi = random_vector(rng, 4, 3, density=0.2, real=False)
    x = basis.to_coefficients(phi)
    direct = basis.to_coefficients(apply_drift(phi, params))
    assert np.allclose(mat @ x, direct, atol=1e-12)


def test_matrix_high_low_split_consistent():
    params = GeneratorParams(galerkin=8)
    law = CutoffLaw(level=1.0)
    g = operator_matrix("drift", 8, 2, params)
    hi = operator_matrix("drift_high", 8, 2, params, cutoff=law)
    lo = operator_matrix("drift_low", 8, 2, params, cutoff=law)
    assert np.allclose(hi + lo, g, atol=1e-12)


def test_matrix_guard():
    with pytest.raises(ValueError):
        operator_matrix("drift", 16, 3, GeneratorParams(galerkin=4), guard=100)


# ---------------------------------------------------------------------------
# a priori bound shapes (operator norms over the Galerkin sweep)
# ---------------------------------------------------------------------------

def _sparse_sigma(scaled):
    import scipy.sparse.linalg as spla

    if scaled.nnz == 0:
        return 0.0
    if min(scaled.shape) <= 400:
        return float(np.linalg.svd(scaled.toarray(), compute_uv=False)[0])
    return float(spla.svds(scaled, k=1, return_singular_vectors=False,
                           maxiter=5000, tol=1e-9)[0])


def _block_sigma(kind, trunc, n_max, m, gamma, w_vals, shift, extra):
    """Operator norm of weight_out . drift_part . weight_in^-1 blocks."""
    import scipy.sparse as sp

    params = GeneratorParams(galerkin=m)
    basis = FockBasis(trunc, n_max)
    mat, _ = drift_coefficient_matrix(basis, params=params, part=kind)
    onb = np.sqrt(basis.ip_weight)
    lam = basis.lap
    deg = basis.degrees
    w = np.array([w_vals(n) for n in deg], dtype=float)
    with np.errstate(divide="ignore"):
        d_out = w * np.where(lam > 0, lam ** (-gamma), 1.0)
    win = np.array([w_vals(n + shift) for n in deg], dtype=float)
    d_in = win * extra(deg) * np.where(lam > 0, lam ** (0.75 - gamma), 1.0)
    d_in[lam == 0] = np.inf  # constants are annihilated anyway
    scaled = sp.diags(onb * d_out) @ mat @ sp.diags(1.0 / (onb * d_in))
    return _sparse_sigma(scaled.tocsr())


def _assert_saturating(sig):
    # uniformly bounded in m: doubling ratios decrease and end well below the
    # sqrt(2)-per-doubling signature of sqrt(m) growth
    ratios = [b / a for a, b in zip(sig, sig[1:])]
    assert all(r2 < r1 for r1, r2 in zip(ratios, ratios[1:]))
    assert ratios[-1] <= 1.25


@pytest.mark.parametrize("gamma", [0.0, 0.25])
@pytest.mark.parametrize("wname", ["unit", "quad"])
def test_lower_apriori_uniform_in_galerkin(gamma, wname):
    wf = (lambda n: 1.0) if wname == "unit" else (lambda n: (1 + max(n, 0)) ** 2)
    sig = [_block_sigma("lower", 16, 3, m, gamma, wf, shift=-1,
                        extra=lambda d: np.maximum(d, 1))
           for m in (2, 4, 8, 16)]
    _assert_saturating(sig)


@pytest.mark.parametrize("gamma", [0.3, 0.5])
def test_raise_apriori_uniform_in_galerkin(gamma):
    wf = lambda n: 1.0
    sig = [_block_sigma("raise", 16, 3, m, gamma, wf, shift=1,
                        extra=lambda d: 1.0 + d)
           for m in (2, 4, 8, 16)]
    _assert_saturating(sig)


def test_drift_m_growth_at_most_sqrt():
    # || w G^m phi || <= C sqrt(m) || (w shifts)(1+N)(-L0)^(1/2) phi ||
    def sigma(m):
        import scipy.sparse as sp

        params = GeneratorParams(galerkin=m)
        basis = FockBasis(16, 3)
        mat, _ = drift_coefficient_matrix(basis, params=params, part="both")
        onb = np.sqrt(basis.ip_weight)
        lam = basis.lap
        deg = basis.degrees
        with np.errstate(divide="ignore"):
            d_in = (1.0 + deg) * np.where(lam > 0, lam ** 0.5, np.inf)
        scaled = sp.diags(onb) @ mat @ sp.diags(1.0 / (onb * d_in))
        return _sparse_sigma(scaled.tocsr())

    ms = (2, 4, 8, 16)
    sig = [sigma(m) for m in ms]
    ratios = [s / math.sqrt(m) for s, m in zip(sig, ms)]
    assert max(ratios) <= 1.5 * ratios[0]


# ---------------------------------------------------------------------------
# multi-component
# ---------------------------------------------------------------------------

def test_trilinear_validation():
    good = np.zeros((2, 2, 2))
    good[0, 0, 0] = 1.0
    good[1, 1, 1] = 0.5
    good[0, 1, 1] = good[1, 0, 1] = good[1, 1, 0] = 0.25
    good[1, 0, 0] = good[0, 1, 0] = good[0, 0, 1] = -0.3
    validate_trilinear(good)
    bad = good.copy()
    bad[0, 1, 0] = 9.0
    with pytest.raises(TrilinearityError):
        validate_trilinear(bad)
    with pytest.raises(TrilinearityError):
        GeneratorParams(galerkin=2, species=2, coupling=tuple(map(tuple, bad)))


def _random_trilinear(rng, d):
    # exactly symmetric: one draw per index multiset
    import itertools as it
    g = np.zeros((d, d, d))
    for idx in it.combinations_with_replacement(range(d), 3):
        v = rng.standard_normal()
        for perm in set(it.permutations(idx)):
            g[perm] = v
    return g


def test_multicomponent_scalar_reduction():
    rng = stream(71, "mc1")
    params1 = GeneratorParams(galerkin=3)
    paramsg = GeneratorParams(galerkin=3, species=1, coupling=((((1.0,),),)))
    phi = random_vector(rng, 4, 2, real=False)
    a = apply_drift(phi, params1, out_n_max=3)
    b = apply_drift(phi, paramsg, out_n_max=3)
    assert (a - b).norm() == 0.0


def test_multicomponent_adjointness():
    rng = stream(72, "mc2")
    d = 2
    gam = _random_trilinear(rng, d)
    params = GeneratorParams(galerkin=3, species=d,
                             coupling=tuple(tuple(tuple(r) for r in m) for m in gam))
    for _ in range(5):
        phi = random_vector(rng, 3, 1, density=0.3, real=False, species=d)
        psi = random_vector(rng, 3, 2, density=0.15, real=False, species=d)
        psi = fock_vector([psi.kernel(2)], 3, 2, species=d)
        lhs = inner_product(psi, apply_drift_raise(phi, params, out_n_max=2))
        rhs = -inner_product(apply_drift_lower(psi, params), phi)
        assert abs(lhs - rhs) <= 1e-10 * (abs(lhs) + abs(rhs) + 1)


# ---------------------------------------------------------------------------
# tail-sum probe
# ---------------------------------------------------------------------------

def test_sum_estimate_basic():
    r1 = sum_estimate_probe(1.0, 0.0, [10], 10_000)[10]
    r2 = sum_estimate_probe(1.0, 0.0, [10], 40_000)[10]
    assert r1 < 4.0
    assert abs(r1 - r2) <= 1e-3 * r1


def test_sum_estimate_k_uniform():
    out = sum_estimate_probe(1.0, 0.0, [10, 100], 10_000)
    assert 0.5 <= out[10] / out[100] <= 2.0


def test_sum_estimate_boundary_exponent():
    out = sum_estimate_probe(0.6, 0.0, [10], 100_000)
    assert math.isfinite(out[10])
    with pytest.raises(ValueError):
        sum_estimate_probe(0.5, 0.0, [10], 100)


def test_matrix_csv_export(tmp_path):
    from fockburgers.operators import export_matrix_csv

    mat = operator_matrix("drift", 3, 2, GeneratorParams(galerkin=3))
    path = tmp_path / "drift.csv"
    export_matrix_csv(mat, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == mat.shape[0]
    assert ";" in lines[0]


def test_matrix_number_and_fractional_tags():
    num = operator_matrix("number", 2, 3)
    deg = np.diag(num).real
    assert deg.min() == 0 and deg.max() == 3
    params = GeneratorParams(galerkin=None, theta=0.8)
    frac = operator_matrix("fractional", 2, 2, params)
    phi = fock_vector([symmetric_kernel(1, [((2,), 1.0)], 2)], 2, n_max=2)
    want = apply_fractional_dissipation(phi, params)
    from fockburgers.operators import FockBasis

    basis = FockBasis(2, 2)
    onb = np.sqrt(basis.ip_weight)
    got = (frac @ (onb * basis.to_coefficients(phi))) / onb
    assert np.allclose(got, basis.to_coefficients(want), atol=1e-12)


def test_matrix_matches_apply_multicomponent():
    rng = stream(62, "matvec-mc")
    gam = _random_trilinear(rng, 2)
    params = GeneratorParams(galerkin=2, species=2,
                             coupling=tuple(tuple(tuple(r) for r in m) for m in gam))
    basis = FockBasis(3, 3, species=2)
    mat, _ = drift_coefficient_matrix(basis, params=params)
    phi = random_vector(rng, 3, 3, density=0.05, real=False, species=2)
    x = basis.to_coefficients(phi)
    direct = basis.to_coefficients(apply_drift(phi, params))
    assert np.allclose(mat @ x, direct, atol=1e-12)
