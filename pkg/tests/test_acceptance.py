"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

All runs are single-threaded so that results and timings are reproducible.
Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
are produced; they are also collected in the terminal summary.
"""

import timeit

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from matrixhydro.diagnostics import (
    casimirs,
    energy,
    lemma_bracket_trace,
    levelset_reconstruct,
)
from matrixhydro.integrators import StepperConfig, hyperviscous_step, isomp_step
from matrixhydro.quantization import build_spin_operators, laplacian_solve, mat2shr, shr2mat
from matrixhydro.simulation import (
    SimulationConfig,
    run,
    single_threaded,
    spectrum_from_coeffs,
)
from matrixhydro.storage import RunStore, read_checkpoint, read_snapshot, write_checkpoint, write_snapshot

from conftest import ACCEPTANCE, lap_and_basis, random_coeffs, random_su, random_vorticity


@pytest.fixture(autouse=True)
def _one_thread():
    with single_threaded():
        yield


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line, flush=True)
    assert ok, line


def dense_laplacian(n, sparse=False):
    """Double commutator as an operator on row-major ``vec(P)``: ad_S = S x I - I x S^T."""
    eye = sp.identity(n, format="csr")
    total = None
    for s in build_spin_operators(n).generators:
        s = sp.csr_matrix(s)
        ad = sp.kron(s, eye) - sp.kron(eye, s.T)
        term = ad @ ad
        total = term if total is None else total + term
    return total.tocsc() if sparse else total.toarray()


def oracle_solve(n, w):
    """Solve ``-Lap P = W`` with ``tr P = 0`` through a bordered sparse LU."""
    lap = -dense_laplacian(n, sparse=True)
    t = sp.csr_matrix(np.eye(n).reshape(1, -1) / np.sqrt(n))
    system = sp.bmat([[lap, t.T], [t, None]]).tocsc()
    rhs = np.concatenate([w.ravel(), [0.0]])
    sol = splu(system).solve(rhs)
    return sol[:-1].reshape(n, n)


def test_criterion_1_laplacian_spectrum():
    worst = 0.0
    for n in (2, 8, 16, 32):
        mat = dense_laplacian(n)
        assert np.abs(mat - mat.conj().T).max() < 1e-12
        ev = np.linalg.eigvalsh(mat)
        expect = np.sort(np.concatenate([np.full(2 * l + 1, -l * (l + 1.0)) for l in range(n)]))
        worst = max(worst, np.abs(ev - expect).max())
    report(1, worst <= 1e-10, f"max eigenvalue error {worst:.2e} for N in (2, 8, 16, 32) (tol 1e-10)")


def test_criterion_2_fast_solve():
    worst = 0.0
    for n in (2, 8, 16, 32, 64):
        lap, _ = lap_and_basis(n)
        w = random_su(n, n)
        p = laplacian_solve(lap, w)
        ref = oracle_solve(n, w)
        worst = max(worst, np.abs(p - ref).max() / np.abs(ref).max())
    times = {}
    for n in (128, 256):
        lap, _ = lap_and_basis(n)
        w = random_su(n, 1)
        laplacian_solve(lap, w)
        times[n] = min(timeit.repeat(lambda: laplacian_solve(lap, w), number=20, repeat=25)) / 20
    ratio = times[256] / times[128]
    ok = worst <= 1e-10 and 3.0 <= ratio <= 6.0
    report(2, ok, f"max rel deviation from sparse-LU oracle {worst:.2e} (tol 1e-10); "
                  f"time ratio N=256/128 = {ratio:.2f} (band [3, 6])")


def test_criterion_3_isospectrality():
    n = 32
    lap, basis = lap_and_basis(n)
    w0 = shr2mat(random_coeffs(n, 10, seed=3), basis)
    cfg = StepperConfig(0.2)
    w = w0
    for _ in range(10_000):
        w = isomp_step(w, cfg, lap)
    lam0, lam = np.linalg.eigvalsh(1j * w0), np.linalg.eigvalsh(1j * w)
    drift = np.abs(lam - lam0).max() / np.abs(lam0).max()
    c0, c1 = np.array(casimirs(w0)), np.array(casimirs(w))
    cdrift = np.abs(c1 / c0 - 1).max()
    report(3, drift <= 1e-10 and cdrift <= 1e-10,
           f"eigenvalue drift {drift:.2e}, Casimir C2..C4 drift {cdrift:.2e} after 1e4 steps (tol 1e-10)")


def _integrate(w, eps, k, lap):
    cfg = StepperConfig(eps)
    for _ in range(k):
        w = isomp_step(w, cfg, lap)
    return w


def test_criterion_4_second_order():
    n = 16
    lap, _ = lap_and_basis(n)
    w0 = random_vorticity(n, 4, elmax=5)
    t_end = 1.0
    # step counts chosen so that eps = T / (k hbar) is close to 0.2, 0.1, 0.05
    ks = [40, 80, 160]
    ref = _integrate(w0, t_end / (64 * ks[-1] * lap.hbar), 64 * ks[-1], lap)
    errs = [np.linalg.norm(_integrate(w0, t_end / (k * lap.hbar), k, lap) - ref) for k in ks]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = all(3.2 <= r <= 4.8 for r in ratios)
    report(4, ok, f"error ratios per halving {ratios[0]:.3f}, {ratios[1]:.3f} (band 4 +- 20%)")


def test_criterion_5_reversibility():
    n = 16
    lap, _ = lap_and_basis(n)
    w0 = random_vorticity(n, 5)
    back = _integrate(_integrate(w0, 0.2, 100, lap), -0.2, 100, lap)
    err = np.abs(back - w0).max()
    report(5, err <= 1e-9, f"max deviation after 100 steps forward and back {err:.2e} (tol 1e-9)")


def test_criterion_6_energy(tmp_path):
    # "no monotone drift" is read as: the error sequence is not monotone, i.e.
    # its increments change sign; crossings of zero itself are reported too
    details, ok = [], True
    for n in (32, 64):
        cfg = SimulationConfig(n=n, elmax=10, seed=1, simtime=50.0, dt_out=0.5, output_dir=str(tmp_path / f"n{n}"))
        rows = run(cfg, deterministic=True).read_csv()
        e = np.array([r["energy"] for r in rows])
        rel = e / e[0] - 1.0
        steps = np.sign(np.diff(rel))
        steps = steps[steps != 0]
        turns = int(np.count_nonzero(steps[1:] != steps[:-1]))
        signs = np.sign(rel[1:][rel[1:] != 0])
        crossings = int(np.count_nonzero(signs[1:] != signs[:-1]))
        worst = np.abs(rel).max()
        ok &= worst <= 1e-3 and turns >= 2
        details.append(f"N={n}: max rel error {worst:.2e}, {turns} sign changes of the increments, "
                       f"{crossings} zero crossings")
    report(6, ok, "; ".join(details) + " (tol 1e-3, non-monotone required)")


def test_criterion_7_hyperviscosity():
    n = 32
    lap, _ = lap_and_basis(n)
    worst_trace = 0.0
    for seed in range(5):
        w = random_vorticity(n, 70 + seed)
        p = laplacian_solve(lap, w)
        w, p = w / np.linalg.norm(w), p / np.linalg.norm(p)
        pw = p @ w - w @ p
        worst_trace = max(worst_trace, abs(np.trace(p @ (p @ pw - pw @ p))))
    w = shr2mat(random_coeffs(n, 10, seed=7, zero_momentum=True), lap_and_basis(n)[1])
    cfg = StepperConfig(0.2, nu=1e-3)
    c2 = [casimirs(w, (2,))[0]]
    for _ in range(1000):
        w = hyperviscous_step(w, cfg, lap)
        c2.append(casimirs(w, (2,))[0])
    increases = int(np.count_nonzero(np.diff(c2) > 0))
    worst_lemma = 0.0
    rng = np.random.default_rng(77)
    for _ in range(20):
        q, _ = np.linalg.qr(rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)))
        a = 1j * q @ np.diag(rng.standard_normal(5)) @ q.conj().T
        b = 1j * q @ np.diag(rng.standard_normal(5)) @ q.conj().T
        x = random_su(5, int(rng.integers(1 << 30)))
        xa, xb = x @ a - a @ x, x @ b - b @ x
        direct = np.trace(xa.conj().T @ xb).real
        worst_lemma = max(worst_lemma, abs(lemma_bracket_trace(x, a, b) - direct))
    ok = worst_trace <= 1e-13 and increases == 0 and worst_lemma <= 1e-12
    report(7, ok, f"(a) |tr(P[P,[P,W]])| {worst_trace:.2e} (tol 1e-13); "
                  f"(b) C2 increases in 1000 steps: {increases}, total decay {1 - c2[-1] / c2[0]:.2e}; "
                  f"(c) lemma deviation {worst_lemma:.2e} (tol 1e-12)")


def _late_spectrum(store, n, t_from):
    spectra = []
    for idx in store.snapshot_indices():
        snap = store.read_snapshot(idx)
        if snap.time >= t_from:
            spectra.append(spectrum_from_coeffs(snap.coeffs, n).per_ell)
    return np.mean(spectra, axis=0)


def test_criterion_8_noise_scaling(tmp_path):
    ell_star = 10
    stats = {}
    for n in (64, 128):
        cfg = SimulationConfig(n=n, elmax=10, seed=2024, simtime=100.0, dt_out=1.0,
                               output_dir=str(tmp_path / f"n{n}"))
        store = run(cfg, deterministic=True)
        per_ell = _late_spectrum(store, n, 50.0)
        a = per_ell[ell_star:].sum()
        stats[n] = (a, a / (n * n - ell_star * ell_star))
    eps_ratio = stats[64][1] / stats[128][1]
    a_ratio = stats[64][0] / stats[128][0]
    ok = 2.0 <= eps_ratio <= 8.0 and 0.5 <= a_ratio <= 2.0
    report(8, ok, f"noise ratio eps2(64)/eps2(128) = {eps_ratio:.2f} (band [2, 8]); "
                  f"tail enstrophy ratio a(64)/a(128) = {a_ratio:.2f} (band [0.5, 2]); "
                  f"late-time average over t >= 50, l* = {ell_star}")


def test_criterion_9_roundtrips(tmp_path):
    worst = 0.0
    for n in (8, 16, 64):
        _, basis = lap_and_basis(n)
        om = random_coeffs(n, n - 1, seed=n)
        worst = max(worst, np.abs(mat2shr(shr2mat(om, basis), basis) - om).max())
    om = np.random.default_rng(0).standard_normal(256)
    write_snapshot(tmp_path / "s.dat", 16, 2, 0.5, om)
    snap = read_snapshot(tmp_path / "s.dat")
    write_snapshot(tmp_path / "s2.dat", snap.n, snap.index, snap.time, snap.coeffs)
    snap_ok = (tmp_path / "s.dat").read_bytes() == (tmp_path / "s2.dat").read_bytes() and np.array_equal(snap.coeffs, om)
    w = random_vorticity(16, 9)
    write_checkpoint(tmp_path / "c.dat", 1.25, 17, w)
    ck = read_checkpoint(tmp_path / "c.dat")
    write_checkpoint(tmp_path / "c2.dat", ck.time, ck.step, ck.w)
    ckpt_ok = (tmp_path / "c.dat").read_bytes() == (tmp_path / "c2.dat").read_bytes() and np.array_equal(ck.w, w)
    base = dict(n=16, elmax=6, seed=9, dt_out=0.25)
    run(SimulationConfig(simtime=3.0, output_dir=str(tmp_path / "full"), **base), deterministic=True)
    run(SimulationConfig(simtime=1.5, output_dir=str(tmp_path / "part"), **base), deterministic=True)
    run(SimulationConfig(simtime=3.0, output_dir=str(tmp_path / "part"), **base), resume=True, deterministic=True)
    full, part = RunStore(tmp_path / "full"), RunStore(tmp_path / "part")
    resume_ok = full.checkpoint_path.read_bytes() == part.checkpoint_path.read_bytes() and all(
        full.snapshot_path(i).read_bytes() == part.snapshot_path(i).read_bytes() for i in full.snapshot_indices()
    ) and full.snapshot_indices() == part.snapshot_indices()
    ok = worst <= 1e-12 and snap_ok and ckpt_ok and resume_ok
    report(9, ok, f"coefficient roundtrip {worst:.2e} (tol 1e-12); snapshot bytes {snap_ok}; "
                  f"checkpoint bytes {ckpt_ok}; resume bit-exact {resume_ok}")


def test_criterion_10_levelsets():
    n = 8
    w = random_vorticity(n, 10)
    lam = np.linalg.eigvalsh(1j * w)
    w = w * (0.99 / np.abs(lam).max())
    lam, vecs = np.linalg.eigh(1j * w)
    full = np.array_equal(levelset_reconstruct(w, -1.0), w)
    empty = not np.any(levelset_reconstruct(w, lam.max() + 1e-6))
    worst = 0.0
    for sigma in (-0.5, lam[3], 0.0, 0.5):
        brute = np.zeros((n, n), dtype=complex)
        for k in range(n):
            if lam[k] >= sigma:
                brute += -1j * lam[k] * np.outer(vecs[:, k], vecs[:, k].conj())
        worst = max(worst, np.abs(levelset_reconstruct(w, sigma) - brute).max())
    ok = full and empty and worst <= 1e-13
    report(10, ok, f"sigma=-1 returns W exactly: {full}; sigma>max returns 0: {empty}; "
                   f"intermediate deviation {worst:.2e} (tol 1e-13)")


def test_criterion_11_condensation(tmp_path):
    n = 128
    cfg = SimulationConfig(n=n, elmax=20, seed=7, simtime=100.0, dt_out=5.0, output_dir=str(tmp_path / "run"))
    store = run(cfg, deterministic=True)
    ell = np.arange(n, dtype=float)
    weight = np.zeros(n)
    weight[1:] = 1.0 / (ell[1:] * (ell[1:] + 1))

    def low_fraction(coeffs):
        e = spectrum_from_coeffs(coeffs, n).per_ell * weight
        return e[:6].sum() / e.sum()

    start = low_fraction(store.read_snapshot(0).coeffs)
    end = low_fraction(store.read_snapshot(-1).coeffs)
    report(11, end >= 0.5, f"energy fraction in l <= 5: {start:.1%} at t=0, {end:.1%} at t=100 (need >= 50%)")
