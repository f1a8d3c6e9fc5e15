"""Seeded simulations persisted to a run directory, plus plot and spectrum export.

Random initial data come from the Philox-4x64-10 counter-based generator
with 128-bit key ``(seed, 0)``.  Blocks are generated for the 256-bit
counter values 1, 2, 3, ... and each block yields four 64-bit words in
order.  Each raw 64-bit output ``r`` is
mapped to ``u = ((r >> 11) + 0.5) / 2**53`` and then to a standard normal by
the inverse normal CDF, so one coefficient consumes exactly one draw.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from contextlib import contextmanager, nullcontext
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import ndtri

from matrixhydro import spheregrid
from matrixhydro.diagnostics import diagnostics_record, noise_level, SpectrumReport
from matrixhydro.integrators import StageSolverError, StepperConfig, step_with_info
from matrixhydro.quantization import (
    build_basis,
    build_quantized_laplacian,
    hbar,
    mat2shr,
    shr2mat,
)
from matrixhydro.storage import RunStore, read_checkpoint, write_checkpoint, write_snapshot

__all__ = [
    "SimulationConfig",
    "ConfigMismatchError",
    "load_config",
    "save_config",
    "philox_normals",
    "make_initial_coeffs",
    "steps_per_output",
    "total_steps",
    "init_run",
    "run",
    "plot_snapshot",
    "spectrum_from_coeffs",
    "export_spectrum",
    "single_threaded",
]

log = logging.getLogger(__name__)


class ConfigMismatchError(ValueError):
    """A resume was requested with parameters that differ from the stored run."""


@dataclass(frozen=True)
class SimulationConfig:
    n: int
    elmax: int
    seed: int
    simtime: float
    dt_out: float
    output_dir: str
    dt_over_hbar: float = 0.2
    nu: float = 0.0
    zero_momentum: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not 1 <= self.elmax <= self.n - 1:
            raise ValueError(f"elmax must lie in [1, n-1] = [1, {self.n - 1}], got {self.elmax}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.simtime > 0:
            raise ValueError(f"simtime must be positive, got {self.simtime}")
        if not 0 < self.dt_out <= self.simtime:
            raise ValueError(f"dt_out must lie in (0, simtime], got {self.dt_out}")
        if not self.dt_over_hbar > 0:
            raise ValueError(f"dt_over_hbar must be positive, got {self.dt_over_hbar}")
        if not self.nu >= 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")

    @property
    def dt(self) -> float:
        return self.dt_over_hbar * hbar(self.n)

    def stepper(self) -> StepperConfig:
        return StepperConfig(eps=self.dt_over_hbar, nu=self.nu)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(SimulationConfig)}


def config_from_dict(data: dict) -> SimulationConfig:
    unknown = set(data) - set(_FIELDS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(data)
    for key in ("n", "elmax", "seed"):
        if key in kwargs and not isinstance(kwargs[key], int):
            raise ValueError(f"{key} must be an integer")
    for key in ("simtime", "dt_out", "dt_over_hbar", "nu"):
        if key in kwargs:
            kwargs[key] = float(kwargs[key])
    if "zero_momentum" in kwargs and not isinstance(kwargs["zero_momentum"], bool):
        raise ValueError("zero_momentum must be true or false")
    if "output_dir" in kwargs:
        kwargs["output_dir"] = str(kwargs["output_dir"])
    try:
        return SimulationConfig(**kwargs)
    except TypeError as err:
        raise ValueError(f"incomplete config: {err}") from None


def load_config(path) -> SimulationConfig:
    """Read a config file; a relative ``output_dir`` is taken relative to the file."""
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    cfg = config_from_dict(data)
    out = Path(cfg.output_dir)
    if not out.is_absolute():
        cfg = dataclasses.replace(cfg, output_dir=str(path.parent / out))
    return cfg


def save_config(path, cfg: SimulationConfig) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")


def philox_normals(seed: int, count: int) -> np.ndarray:
    """First ``count`` standard normals of the documented Philox stream for ``seed``."""
    bitgen = np.random.Philox(key=int(seed))
    raw = bitgen.random_raw(count)
    u = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53
    return ndtri(u)


def make_initial_coeffs(cfg: SimulationConfig) -> np.ndarray:
    """Random coefficients up to ``elmax`` with zero mean (and zero momentum), padded to ``N**2``."""
    if cfg.elmax >= cfg.n:
        raise ValueError(f"elmax = {cfg.elmax} must be below n = {cfg.n}")
    k = (cfg.elmax + 1) ** 2
    omega = np.zeros(cfg.n * cfg.n)
    omega[:k] = philox_normals(cfg.seed, k)
    omega[0] = 0.0
    if cfg.zero_momentum:
        omega[1:4] = 0.0
    return omega


def steps_per_output(cfg: SimulationConfig) -> int:
    ratio = cfg.dt_out / cfg.dt
    spo = max(1, int(round(ratio)))
    if abs(spo - ratio) > 1e-9 * ratio:
        log.warning(
            "dt_out = %g is not a multiple of dt = %g; outputs every %d steps (%g)",
            cfg.dt_out, cfg.dt, spo, spo * cfg.dt,
        )
    return spo


def total_steps(cfg: SimulationConfig, spo: int) -> int:
    """Steps to reach ``simtime``: whole output intervals plus a rounded remainder."""
    n_out = int(math.floor(cfg.simtime / cfg.dt_out + 1e-9))
    extra = int(round((cfg.simtime - n_out * spo * cfg.dt) / cfg.dt))
    return n_out * spo + min(max(extra, 0), spo - 1)


@contextmanager
def single_threaded():
    """Pin BLAS/LAPACK to one thread so results do not depend on thread count."""
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=1):
        yield


class _Writer:
    def __init__(self, store: RunStore, cfg: SimulationConfig, basis):
        self.store = store
        self.cfg = cfg
        self.basis = basis

    def output(self, index, step, w, lap, fp_iters):
        time = step * self.cfg.dt
        write_snapshot(
            self.store.snapshot_path(index), self.cfg.n, index, time, mat2shr(w, self.basis)
        )
        rec = diagnostics_record(w, lap, self.basis, time, fp_iters)
        self.store.append_csv(rec.as_row())
        write_checkpoint(self.store.checkpoint_path, time, step, w)


def _check_compatible(stored: SimulationConfig, cfg: SimulationConfig):
    for key in ("n", "nu", "dt_over_hbar", "dt_out"):
        if getattr(stored, key) != getattr(cfg, key):
            raise ConfigMismatchError(
                f"{key} differs from the stored run: {getattr(stored, key)} != {getattr(cfg, key)}"
            )


def _fresh(store: RunStore, cfg: SimulationConfig, lap, basis):
    store.prepare()
    for idx in store.snapshot_indices():
        store.snapshot_path(idx).unlink()
    save_config(store.config_path, cfg)
    w0 = shr2mat(make_initial_coeffs(cfg), basis)
    store.start_csv()
    _Writer(store, cfg, basis).output(0, 0, w0, lap, 0)
    return w0


def init_run(cfg: SimulationConfig, lap=None, basis=None) -> RunStore:
    """Create the run directory with config, snapshot 0, first CSV row and checkpoint."""
    store = RunStore(cfg.output_dir)
    with store.lock():
        if store.checkpoint_path.exists() and read_checkpoint(store.checkpoint_path).step > 0:
            raise FileExistsError(f"{store.root} already holds a run in progress; use resume")
        lap = build_quantized_laplacian(cfg.n) if lap is None else lap
        basis = build_basis(lap) if basis is None else basis
        _fresh(store, cfg, lap, basis)
    return store


def run(
    cfg: SimulationConfig,
    resume: bool = False,
    deterministic: bool = False,
    lap=None,
    basis=None,
) -> RunStore:
    """Integrate to ``cfg.simtime``, writing snapshots, CSV rows and checkpoints.

    Without ``resume`` the run starts from the seeded initial data; an
    existing run directory is only reused if it has not advanced past step
    0.  With ``resume`` the stored checkpoint is continued, which may extend
    ``simtime``; ``n``, ``nu``, ``dt_over_hbar`` and ``dt_out`` must match.
    """
    store = RunStore(cfg.output_dir)
    guard = single_threaded() if deterministic else nullcontext()
    with guard, store.lock():
        lap = build_quantized_laplacian(cfg.n) if lap is None else lap
        basis = build_basis(lap) if basis is None else basis
        spo = steps_per_output(cfg)
        if resume:
            if not store.checkpoint_path.exists():
                raise FileNotFoundError(f"no checkpoint to resume in {store.root}")
            stored = load_config(store.config_path)
            _check_compatible(stored, cfg)
            ckpt = read_checkpoint(store.checkpoint_path)
            if ckpt.n != cfg.n:
                raise ConfigMismatchError(f"checkpoint has n = {ckpt.n}, config has {cfg.n}")
            w, step = ckpt.w, ckpt.step
            store.truncate_after(step // spo)
            cfg = dataclasses.replace(stored, simtime=cfg.simtime)
        else:
            if store.checkpoint_path.exists() and read_checkpoint(store.checkpoint_path).step > 0:
                raise FileExistsError(f"{store.root} already holds a run in progress; use resume")
            w, step = _fresh(store, cfg, lap, basis), 0
        writer = _Writer(store, cfg, basis)
        stepper = cfg.stepper()
        end = total_steps(cfg, spo)
        log.info("n=%d dt=%g steps %d..%d, output every %d", cfg.n, cfg.dt, step, end, spo)
        while step < end:
            try:
                w_next, stage = step_with_info(w, stepper, lap)
            except StageSolverError as err:
                write_checkpoint(store.checkpoint_path, step * cfg.dt, step, w)
                raise StageSolverError(err.iters, err.residual, step + 1) from err
            w, step = w_next, step + 1
            if step % spo == 0:
                writer.output(step // spo, step, w, lap, stage.iters)
        write_checkpoint(store.checkpoint_path, step * cfg.dt, step, w)
    return store


def plot_snapshot(
    run_dir,
    index: int = -1,
    out_path=None,
    width: int = 800,
    global_scale: bool = False,
) -> Path:
    """Render snapshot ``index`` as a Hammer-projection PPM and return its path."""
    store = RunStore(run_dir)
    index = store.resolve_index(index)
    snap = store.read_snapshot(index)
    n_lat, n_lon = snap.n, 2 * snap.n
    grid = spheregrid.synthesize(snap.coeffs, n_lat, n_lon)
    vmax = None
    if global_scale:
        vmax = max(
            float(np.abs(spheregrid.synthesize(store.read_snapshot(i).coeffs, n_lat, n_lon).values).max())
            for i in store.snapshot_indices()
        )
    image = spheregrid.render_hammer(grid, width, vmax=vmax)
    out_path = Path(out_path) if out_path else store.root / f"snap_{index}.ppm"
    spheregrid.write_ppm(out_path, image)
    return out_path


def spectrum_from_coeffs(coeffs: np.ndarray, n: int) -> SpectrumReport:
    coeffs = np.asarray(coeffs, dtype=float)
    ells = np.floor(np.sqrt(np.arange(coeffs.size))).astype(int)
    return SpectrumReport(np.bincount(ells, weights=coeffs * coeffs, minlength=n)[:n])


def export_spectrum(run_dir, index: int = -1, ell_star: Optional[int] = None, out_csv=None) -> Path:
    """Write ``ell,enstrophy_ell`` rows for ``l = 1..N-1`` and a summary comment.

    The trailing line ``# a=..,eps2=..,ell_star=..,n=..,time=..`` holds the
    tail enstrophy ``a`` above ``ell_star`` and the noise level
    ``eps2 = a / (N**2 - ell_star**2)``.
    """
    store = RunStore(run_dir)
    index = store.resolve_index(index)
    snap = store.read_snapshot(index)
    if ell_star is None:
        ell_star = load_config(store.config_path).elmax
    report = spectrum_from_coeffs(snap.coeffs, snap.n).split(ell_star)
    out_csv = Path(out_csv) if out_csv else store.root / f"spectrum_{index}.csv"
    lines = ["ell,enstrophy_ell"]
    lines += [f"{ell},{float(report.per_ell[ell])!r}" for ell in range(1, snap.n)]
    lines.append(
        f"# a={report.tail_enstrophy!r},eps2={report.noise_level!r},"
        f"ell_star={ell_star},n={snap.n},time={snap.time!r}"
    )
    out_csv.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out_csv
