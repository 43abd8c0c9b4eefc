"""Parameter sweeps behind the ARE-vs-mixing figures, plus CSV/manifest export."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .equilibrium import solve_equilibrium
from .errors import ConfigError, ModelError, SolverError
from .model import ExposureResponse


class SweepError(SolverError):
    """A grid cell failed to solve; the message names the cell."""


class CalibrationError(SolverError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    base: RunConfig
    rho_grid: tuple
    gamma_grid: tuple
    eta_grid: tuple = (1.0,)
    rho_band: tuple = (-0.35, 0.35)
    workers: int = 1

    def __post_init__(self):
        for name in ("rho_grid", "gamma_grid", "eta_grid"):
            grid = getattr(self, name)
            if len(grid) == 0:
                raise ConfigError(f"{name} is empty")
            if not all(math.isfinite(x) for x in grid):
                raise ConfigError(f"{name} has non-finite values")
        lo, hi = self.rho_band
        if any(not lo <= r <= hi for r in self.rho_grid):
            raise ConfigError(f"rho grid leaves the declared band [{lo}, {hi}]")
        if any(g <= 0 for g in self.gamma_grid) or any(e <= 0 for e in self.eta_grid):
            raise ConfigError("gamma and eta grids must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @classmethod
    def from_config(cls, cfg: RunConfig, workers: int = 1) -> "SweepSpec":
        return cls(cfg, cfg.rho_grid, cfg.gamma_grid, cfg.eta_grid, cfg.rho_band, workers)

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "rho_grid": list(self.rho_grid),
            "gamma_grid": list(self.gamma_grid),
            "eta_grid": list(self.eta_grid),
            "rho_band": list(self.rho_band),
        }

    @classmethod
    def from_dict(cls, data: dict, workers: int = 1) -> "SweepSpec":
        return cls(
            RunConfig.from_dict(data["base"]),
            tuple(data["rho_grid"]),
            tuple(data["gamma_grid"]),
            tuple(data["eta_grid"]),
            tuple(data["rho_band"]),
            workers,
        )


@dataclass(frozen=True)
class SweepRow:
    rho: float
    gamma: float
    eta: float
    e_star: float
    residual: float
    interior_all: bool
    avg_investment: float
    min_investment: float
    max_investment: float
    theta_coef: float


@dataclass(frozen=True)
class IncreaseRow:
    gamma: float
    eta: float
    k_prime: float
    e_star_low: float
    e_star_high: float
    relative_increase: float
    residual_max: float
    interior_all: bool


def _parallel_map(fn, items, workers: int):
    if workers == 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _solve_cell(args) -> SweepRow:
    cfg, gamma, rho, theta = args
    try:
        game = cfg.game(gamma=gamma, rho=rho, theta=theta)
        res = solve_equilibrium(game)
    except (SolverError, ModelError) as exc:
        raise SweepError(f"cell gamma={gamma}, rho={rho}, theta={theta}: {exc}") from exc
    a = res.investments.investments
    return SweepRow(
        rho=rho,
        gamma=gamma,
        eta=theta.eta,
        e_star=res.e_avg_star,
        residual=res.residual,
        interior_all=res.interior_all,
        avg_investment=res.avg_investment(game.pop),
        min_investment=float(a.min()),
        max_investment=float(a.max()),
        theta_coef=theta.coef,
    )


def run_figure2_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Equilibrium ARE on the (gamma, rho) grid with the linear exposure response.

    Rows come back gamma-major, in grid order, regardless of ``workers``.
    """
    cfg = spec.base
    theta = cfg.theta(cfg.population()) if cfg.theta_family == "linear" else None
    if theta is None:
        raise ConfigError("the ARE-vs-rho sweep uses the linear exposure response")
    cells = [(cfg, g, r, theta) for g in spec.gamma_grid for r in spec.rho_grid]
    return _parallel_map(_solve_cell, cells, spec.workers)


def _neutral_vulnerability(cfg: RunConfig, gamma: float, e: float) -> float:
    """d_avg * sum_d w_d p*(tau_A + d e): theta's argument on the neutral graph at ARE e."""
    game = cfg.game(gamma=gamma, rho=0.0)
    pop = game.pop
    r = game.threat.tau_a + pop.degrees * e
    return pop.avg_degree * float(np.dot(pop.edge_weights, game.brc.optimal_infection_probability(r)))


def calibration_target(cfg: RunConfig) -> float:
    """Neutral-graph equilibrium ARE at the calibration gamma with the linear response."""
    linear = dataclasses.replace(cfg, theta_family="linear")
    return solve_equilibrium(linear.game(gamma=cfg.calibration_gamma, rho=0.0)).e_avg_star


def calibrate_eta(cfg: RunConfig, eta: float, target_e: float, *,
                  gamma: float | None = None, method: str = "direct",
                  rtol: float = 1e-13) -> float:
    """Coefficient K' of theta(z) = K' z**eta giving neutral equilibrium ARE ``target_e``.

    ``method="direct"`` inverts the fixed point: at ARE e the neutral
    graph fixes theta's argument z(e), so K' = e / z(e)**eta.
    ``method="bisection"`` searches K' with full equilibrium solves
    (e* increases with K') and serves as an independent check.
    """
    if not target_e > 0:
        raise CalibrationError("target ARE must be positive")
    gamma = cfg.calibration_gamma if gamma is None else gamma
    if method == "direct":
        z = _neutral_vulnerability(cfg, gamma, target_e)
        if not z > 0:
            raise CalibrationError(f"target ARE {target_e} is unattainable")
        return target_e / z**eta
    if method != "bisection":
        raise ValueError(f"unknown calibration method {method!r}")

    def e_of(k):
        theta = ExposureResponse.power(k, eta)
        return solve_equilibrium(cfg.game(gamma=gamma, rho=0.0, theta=theta), scan=False).e_avg_star

    lo, hi = 1e-3, 1e3
    for _ in range(40):
        if e_of(lo) < target_e:
            break
        lo /= 1e3
    else:
        raise CalibrationError(f"target ARE {target_e} below reach")
    for _ in range(40):
        if e_of(hi) > target_e:
            break
        hi *= 1e3
    else:
        raise CalibrationError(f"target ARE {target_e} beyond reach")
    # geometric bisection: the bracket spans orders of magnitude
    while hi / lo - 1 > rtol:
        mid = math.sqrt(lo * hi)
        if e_of(mid) < target_e:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def _increase_cell(args) -> IncreaseRow:
    cfg, gamma, eta, k_prime, rho_lo, rho_hi = args
    theta = ExposureResponse.power(k_prime, eta)
    lo = _solve_cell((cfg, gamma, rho_lo, theta))
    hi = _solve_cell((cfg, gamma, rho_hi, theta))
    return IncreaseRow(
        gamma=gamma,
        eta=eta,
        k_prime=k_prime,
        e_star_low=lo.e_star,
        e_star_high=hi.e_star,
        relative_increase=(hi.e_star - lo.e_star) / lo.e_star,
        residual_max=max(lo.residual, hi.residual),
        interior_all=lo.interior_all and hi.interior_all,
    )


def run_figure3_sweep(spec: SweepSpec, target_e: float | None = None) -> list[IncreaseRow]:
    """Relative ARE increase between the ends of the rho grid, per (gamma, eta).

    K'(eta) is calibrated so every eta shares the same neutral equilibrium
    ARE at the calibration gamma (default: the linear-response value).
    """
    cfg = spec.base
    if target_e is None:
        target_e = calibration_target(cfg)
    k_primes = {eta: calibrate_eta(cfg, eta, target_e) for eta in spec.eta_grid}
    rho_lo, rho_hi = min(spec.rho_grid), max(spec.rho_grid)
    cells = [(cfg, g, eta, k_primes[eta], rho_lo, rho_hi)
             for g in spec.gamma_grid for eta in spec.eta_grid]
    return _parallel_map(_increase_cell, cells, spec.workers)


def _render(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def _parse(text: str):
    if text in ("true", "false"):
        return text == "true"
    return float(text)


def emit_outputs(rows, path: str | Path, manifest: dict | None = None,
                 svg: bool = False) -> list[Path]:
    """Write ``rows`` as CSV (12 significant digits), plus optional manifest and SVG.

    The manifest lands next to the CSV as ``<stem>.manifest.json``; the
    chart as ``<stem>.svg``. Returns the written paths.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("refusing to write an empty table")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path.parent}: {exc}") from exc
    names = [f.name for f in dataclasses.fields(rows[0])]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow([_render(getattr(row, n)) for n in names])
    written = [path]
    if manifest is not None:
        mpath = path.with_name(path.stem + ".manifest.json")
        mpath.write_text(json.dumps({"tool": "idsmix", "version": __version__, **manifest},
                                    indent=2, sort_keys=True) + "\n")
        written.append(mpath)
    if svg:
        written.append(_write_svg(rows, path.with_suffix(".svg")))
    return written


def read_table(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return [{k: _parse(v) for k, v in rec.items()} for rec in csv.DictReader(fh)]


def _write_svg(rows, path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "idsmix"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if isinstance(rows[0], SweepRow):
        key, x, y, xlabel, ylabel = "gamma", "rho", "e_star", "rho", "equilibrium ARE"
    else:
        key, x, y, xlabel, ylabel = "eta", "gamma", "relative_increase", "gamma", "relative ARE increase"
    for k in sorted({getattr(r, key) for r in rows}):
        sel = [r for r in rows if getattr(r, key) == k]
        ax.plot([getattr(r, x) for r in sel], [getattr(r, y) for r in sel],
                marker="o", ms=3, label=f"{key}={k:g}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def sweep_manifest(kind: str, spec: SweepSpec, seed: int | None = None) -> dict:
    return {"kind": kind, "spec": spec.to_dict(), "seed": seed}


def run_from_manifest(path: str | Path, workers: int = 1):
    """Re-run the sweep recorded in a manifest file; returns (kind, rows)."""
    data = json.loads(Path(path).read_text())
    kind = data.get("kind")
    spec = SweepSpec.from_dict(data["spec"], workers)
    if kind == "fig2":
        return kind, run_figure2_sweep(spec)
    if kind == "fig3":
        return kind, run_figure3_sweep(spec)
    raise ConfigError(f"manifest {path} has unknown kind {kind!r}")
