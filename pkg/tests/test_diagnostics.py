import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matrixhydro.diagnostics import (
    SpectrumReport,
    angular_momentum,
    casimir,
    casimirs,
    diagnostics_record,
    ell_coefficients,
    energy,
    enstrophy_spectrum,
    lemma_bracket_trace,
    levelset_reconstruct,
    noise_level,
    tail_enstrophy,
)
from matrixhydro.integrators import StepperConfig, isomp_step
from matrixhydro.quantization import elm2ind, ind2elm, inner, mat2shr, shr2mat

from conftest import lap_and_basis, random_coeffs, random_su, random_vorticity


def commutator(a, b):
    return a @ b - b @ a


def test_energy_examples():
    lap, basis = lap_and_basis(10)
    assert energy(np.zeros((10, 10), dtype=complex), lap) == 0.0
    c = 1.7
    assert energy(c * basis.element(1, 0), lap) == pytest.approx(c * c / 4, rel=1e-13)


def test_energy_coefficient_oracle():
    lap, basis = lap_and_basis(16)
    om = random_coeffs(16, 15, seed=1)
    ell = np.floor(np.sqrt(np.arange(1, om.size)))
    expect = 0.5 * np.sum(om[1:] ** 2 / (ell * (ell + 1)))
    assert energy(shr2mat(om, basis), lap) == pytest.approx(expect, rel=1e-12)


def test_casimir_examples():
    _, basis = lap_and_basis(12)
    om = random_coeffs(12, 11, seed=2)
    w = shr2mat(om, basis)
    assert casimir(w, 2) == pytest.approx(np.sum(om**2), rel=1e-12)
    assert abs(casimir(w, 1)) < 1e-12 * np.sum(np.abs(om))
    w2 = -1j * np.diag([1.0, -1.0])
    f = lambda x: np.exp(x) + x**3
    assert casimir(w2, f) == pytest.approx(2 * np.pi * (f(1.0) + f(-1.0)))
    # polynomial coefficients in increasing order: 1 + 2x + 3x^2
    assert casimir(w2, [1.0, 2.0, 3.0]) == pytest.approx(2 * np.pi * (6.0 + 2.0))
    assert casimirs(w, (2, 3)) == pytest.approx((casimir(w, 2), casimir(w, 3)))


def test_spectrum_single_mode():
    _, basis = lap_and_basis(8)
    rep = enstrophy_spectrum(2.0 * basis.element(3, -2), basis)
    expect = np.zeros(8)
    expect[3] = 4.0
    np.testing.assert_allclose(rep.per_ell, expect, atol=1e-13)


def test_spectrum_parseval_and_projection():
    _, basis = lap_and_basis(9)
    w = random_su(9, 3)
    rep = enstrophy_spectrum(w, basis)
    assert rep.per_ell.sum() == pytest.approx(casimir(w, 2), rel=1e-12)
    brute = np.zeros(9)
    for k in range(81):
        ell, m = ind2elm(k)
        brute[ell] += inner(basis.element(ell, m), w) ** 2
    np.testing.assert_allclose(rep.per_ell, brute, rtol=1e-11, atol=1e-14)
    assert np.all(rep.per_ell >= 0)


def test_noise_level_examples():
    per_ell = np.zeros(512)
    per_ell[20] = 1.0
    rep = SpectrumReport(per_ell)
    assert noise_level(rep, 20, 512) == pytest.approx(1 / 261744)
    assert noise_level(SpectrumReport(np.zeros(512)), 20, 512) == 0.0
    split = rep.split(20)
    assert split.tail_enstrophy == 1.0 and split.ell_star == 20
    assert split.noise_level == pytest.approx(3.820e-6, rel=1e-3)
    for bad in (0, 512):
        with pytest.raises(ValueError):
            tail_enstrophy(rep, bad)


def test_noise_level_scaling():
    a = 1.0
    ratios = []
    for n in (256, 4096):
        per_ell = np.zeros(2 * n)
        per_ell[10] = a
        ratios.append(noise_level(SpectrumReport(per_ell[: 2 * n]), 10, 2 * n)
                      / noise_level(SpectrumReport(per_ell[:n]), 10, n))
    assert abs(ratios[1] - 0.25) < abs(ratios[0] - 0.25) < 1e-3


def test_angular_momentum():
    _, basis = lap_and_basis(10)
    np.testing.assert_allclose(angular_momentum(1.3 * basis.element(1, 0), basis), [0, 1.3, 0], atol=1e-14)
    w = random_vorticity(10, 4)
    np.testing.assert_allclose(angular_momentum(w, basis), mat2shr(w, basis)[1:4], atol=1e-14)
    for ell in (0, 3, 9):
        np.testing.assert_allclose(
            ell_coefficients(w, basis, ell), mat2shr(w, basis)[elm2ind(ell, -ell): elm2ind(ell, ell) + 1],
            atol=1e-13,
        )


def test_momentum_conserved_along_flow():
    lap, basis = lap_and_basis(16)
    w = random_vorticity(16, 5)
    m0 = angular_momentum(w, basis)
    cfg = StepperConfig(0.2)
    for _ in range(200):
        w = isomp_step(w, cfg, lap)
    np.testing.assert_allclose(angular_momentum(w, basis), m0, atol=1e-10)


def test_record_row():
    lap, basis = lap_and_basis(8)
    w = random_vorticity(8, 6)
    rec = diagnostics_record(w, lap, basis, 0.5, 7)
    row = rec.as_row()
    assert len(row) == 9 and row[0] == 0.5 and row[-1] == 7
    assert rec.energy >= 0 and rec.enstrophy >= 0


# level sets


def test_levelset_extremes():
    w = random_vorticity(8, 7)
    lam = np.linalg.eigvalsh(1j * w)
    assert np.array_equal(levelset_reconstruct(w, -1e300), w)
    assert np.array_equal(levelset_reconstruct(w, lam.min() - 1e-9), w)
    assert np.all(levelset_reconstruct(w, lam.max() + 1.0) == 0)


def test_levelset_brute_force():
    for n in (4, 8):
        w = random_vorticity(n, n)
        lam, vecs = np.linalg.eigh(1j * w)
        sigma = np.median(lam)
        brute = sum(-1j * lam[k] * np.outer(vecs[:, k], vecs[:, k].conj()) for k in range(n) if lam[k] >= sigma)
        np.testing.assert_allclose(levelset_reconstruct(w, sigma), brute, atol=1e-13)


def test_levelset_window_rank():
    w = random_vorticity(8, 9)
    lam = np.linalg.eigvalsh(1j * w)
    s1, s2 = lam[2] - 1e-9, lam[6] - 1e-9
    diff = levelset_reconstruct(w, s1) - levelset_reconstruct(w, s2)
    assert np.linalg.matrix_rank(diff, tol=1e-10) == 4


# bracket lemma


def _commuting_pair(n, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    a = 1j * q @ np.diag(rng.standard_normal(n)) @ q.conj().T
    b = 1j * q @ np.diag(rng.standard_normal(n)) @ q.conj().T
    return a, b


@pytest.mark.parametrize("seed", range(5))
def test_lemma_random_commuting(seed):
    w, w2 = _commuting_pair(5, seed)
    x = random_su(5, 100 + seed)
    direct = np.trace(commutator(x, w).conj().T @ commutator(x, w2)).real
    assert lemma_bracket_trace(x, w, w2) == pytest.approx(direct, abs=1e-12 * max(1.0, abs(direct)))


def test_lemma_same_matrix_and_convex():
    w, _ = _commuting_pair(5, 9)
    x = random_su(5, 10)
    val = lemma_bracket_trace(x, w, w)
    assert val == pytest.approx(np.linalg.norm(commutator(x, w)) ** 2, rel=1e-12)
    # W' = f'(iW) with f(x) = x^4 / 4, expressed as a skew matrix
    lam, f = np.linalg.eigh(1j * w)
    w2 = -1j * (f * lam**3) @ f.conj().T
    assert lemma_bracket_trace(x, w, -w2) >= 0 or lemma_bracket_trace(x, w, w2) >= 0


def test_lemma_rejects_noncommuting():
    with pytest.raises(ValueError):
        lemma_bracket_trace(random_su(4, 1), random_su(4, 2), random_su(4, 3))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_lemma_property(n, seed):
    w, w2 = _commuting_pair(n, seed)
    x = random_su(n, seed + 1)
    direct = np.trace(commutator(x, w).conj().T @ commutator(x, w2)).real
    scale = np.linalg.norm(x) ** 2 * np.linalg.norm(w) * np.linalg.norm(w2)
    assert abs(lemma_bracket_trace(x, w, w2) - direct) <= 1e-12 * scale
