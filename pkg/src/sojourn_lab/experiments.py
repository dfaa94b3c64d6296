"""Experiment configuration, the replication engine and report files.

Every replication ``i`` draws from its own stream, a Philox generator keyed
by ``SeedSequence(seed, spawn_key=(i,))``. Replications are grouped in
fixed-size chunks, so the samples do not depend on how many worker
processes share the chunks.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import fields as fld
from .group_action import Arc, CellSet, GroupSpec, SphereCap, check_pushforward
from .oracle import enumerate_orbit_law
from .param_space import Space
from .sojourn import MC_ANTITHETIC, MC_PLAIN, sojourn_exact_discrete, sojourn_grid_circle, sojourn_mc
from .stats import DEFAULT_ALPHA, UniformityReport, uniformity_report

EXPERIMENTS = ("planet", "bridge", "matrix", "validate-nu", "oracle", "negative-control")
GROUPS = ("so", "circle", "shifts")
CHUNK_SIZE = 1000

DEFAULT_REPLICATIONS = {
    "planet": 100_000,
    "bridge": 10_000,
    "matrix": 100_000,
    "validate-nu": 100_000,
    "oracle": 1,
    "negative-control": 10_000,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    replications: int | None = None
    dim: int = 3
    summits: int = 20
    kernel_exp: float = 0.1
    eval_points: int = 100
    antithetic: bool = True
    bins: int = 50
    rows: int = 4
    cols: int = 5
    grid_size: int = fld.DEFAULT_BRIDGE_GRID
    bump: float = 3.0
    alpha: float = DEFAULT_ALPHA
    group: str = "so"
    base: tuple | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.replications is None:
            object.__setattr__(self, "replications", DEFAULT_REPLICATIONS[self.experiment])
        if self.base is not None:
            object.__setattr__(self, "base", tuple(tuple(float(x) for x in row) for row in self.base))
        self._validate()

    def _validate(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.bins < 1:
            raise ConfigError("bins must be >= 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.dim < 2:
            raise ConfigError("dim must be >= 2")
        if self.summits < 0:
            raise ConfigError("summits must be >= 0")
        if self.kernel_exp <= 0:
            raise ConfigError("kernel exponent must be positive")
        if self.eval_points < 2:
            raise ConfigError("eval-points must be >= 2")
        if self.antithetic and self.eval_points % 2:
            raise ConfigError("eval-points must be even with antithetic sampling")
        if self.rows < 1 or self.cols < 1:
            raise ConfigError("rows and cols must be >= 1")
        if self.grid_size < 2:
            raise ConfigError("grid-size must be >= 2")
        if self.group not in GROUPS:
            raise ConfigError(f"group must be one of {', '.join(GROUPS)}")
        if self.experiment == "negative-control" and self.bump == 0:
            raise ConfigError("negative control needs a nonzero bump")
        if self.base is not None:
            if len({len(r) for r in self.base}) != 1 or not self.base[0]:
                raise ConfigError("base matrix rows must be nonempty and of equal length")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["base"] = None if self.base is None else [list(r) for r in self.base]
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in known})


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    samples: np.ndarray | None
    report: UniformityReport | None
    extra: dict

    @property
    def passed(self) -> bool:
        if self.report is not None:
            return self.report.passed
        return self.extra.get("verdict") == "pass"

    def to_dict(self) -> dict:
        out = {"config": self.config.to_dict(), **self.extra}
        if self.report is not None:
            out["report"] = self.report.to_dict()
            out["verdict"] = self.report.verdict
        return out


def replication_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


# ---------------------------------------------------------------------------
# One replication per experiment kind; each returns (sample value, atom index)


def _replicate(cfg: ExperimentConfig, rng: np.random.Generator, anchor) -> tuple[float, int]:
    if cfg.experiment in ("planet", "negative-control"):
        if cfg.experiment == "planet":
            X = fld.gen_kernel_field(cfg.dim, cfg.summits, rng, cfg.kernel_exp)
        else:
            X = fld.gen_biased_field(cfg.dim, cfg.summits, cfg.bump, anchor, rng, cfg.kernel_exp)
        est = sojourn_mc(X, anchor, cfg.eval_points, cfg.antithetic, rng)
        return est.value, est.count
    if cfg.experiment == "bridge":
        est = sojourn_grid_circle(fld.gen_bridge_field(cfg.grid_size, rng), 0.0)
        return est.value, est.count
    est = sojourn_exact_discrete(fld.gen_matrix_field(cfg.rows, cfg.cols, rng), anchor)
    return est.value, est.count - 1


def _anchor(cfg: ExperimentConfig):
    if cfg.experiment in ("planet", "negative-control"):
        return Space.sphere(cfg.dim).north_pole()
    if cfg.experiment == "matrix":
        return Space.grid(cfg.rows, cfg.cols).point((1, 1))
    return None


def _run_chunk(cfg: ExperimentConfig, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    anchor = _anchor(cfg)
    values = np.empty(stop - start)
    atoms = np.empty(stop - start, dtype=np.int64)
    for offset, i in enumerate(range(start, stop)):
        values[offset], atoms[offset] = _replicate(cfg, replication_rng(cfg.seed, i), anchor)
    return values, atoms


def simulate(cfg: ExperimentConfig, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Sojourn samples and their atom indices for replications ``0..R-1``, in index order."""
    r = cfg.replications
    chunks = [(s, min(s + CHUNK_SIZE, r)) for s in range(0, r, CHUNK_SIZE)]
    if workers <= 1 or len(chunks) == 1:
        parts = [_run_chunk(cfg, s, e) for s, e in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [cfg] * len(chunks), *zip(*chunks)))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _atom_cells(cfg: ExperimentConfig) -> int | None:
    if cfg.experiment in ("planet", "negative-control"):
        return cfg.eval_points + 1
    if cfg.experiment == "matrix":
        return cfg.rows * cfg.cols
    return None


def _metadata(cfg: ExperimentConfig) -> dict:
    meta = {"experiment": cfg.experiment, "seed": cfg.seed}
    if cfg.experiment in ("planet", "negative-control"):
        meta.update(generator="biased-kernel" if cfg.experiment == "negative-control" else "kernel",
                    estimator=MC_ANTITHETIC if cfg.antithetic else MC_PLAIN, anchor="north-pole")
    elif cfg.experiment == "bridge":
        meta.update(generator="bridge", estimator="grid", level=0.0)
    elif cfg.experiment == "matrix":
        meta.update(generator="matrix", estimator="exact", anchor=[1, 1])
    return meta


def run_simulation(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    samples, atoms = simulate(cfg, workers)
    cells = _atom_cells(cfg)
    counts = None if cells is None else np.bincount(atoms, minlength=cells).tolist()
    report = uniformity_report(samples, cfg.bins, cfg.alpha, counts, _metadata(cfg))
    return ExperimentResult(cfg, samples, report, {})


def run_oracle(cfg: ExperimentConfig) -> ExperimentResult:
    if cfg.base is not None:
        base = np.array(cfg.base)
    else:
        base = fld.gen_matrix_field(cfg.rows, cfg.cols, np.random.Generator(np.random.Philox(cfg.seed))).values
    a = Space.grid(*base.shape).point((1, 1))
    law = enumerate_orbit_law(base, a)
    n = law.N
    # one sample per group element; each rank r occurs N * pmf_r times
    counts = [int(p * n) for p in law.pmf]
    samples = np.repeat(np.arange(1, n + 1) / n, counts)
    meta = {"experiment": "oracle", "seed": cfg.seed, "estimator": "exact-orbit", "anchor": [1, 1]}
    report = uniformity_report(samples, cfg.bins, cfg.alpha, counts, meta)
    extra = {"orbit_law": {"N": n, "pmf": law.as_strings(), "uniform": law.is_uniform},
             "base": base.tolist()}
    return ExperimentResult(replace(cfg, replications=n), samples, report, extra)


def nu_battery(cfg: ExperimentConfig):
    """Group, anchor and the standard test sets for ``validate-nu``."""
    if cfg.group == "so":
        space = Space.sphere(cfg.dim)
        sets = [SphereCap.with_measure(p, cfg.dim) for p in (0.1, 0.25, 0.5)] + [SphereCap(1.0, cfg.dim)]
        return GroupSpec(space), space.north_pole(), sets
    if cfg.group == "circle":
        space = Space.circle()
        return GroupSpec(space), space.point(0.0), [Arc(0.0, 0.1), Arc(0.0, 0.25), Arc(0.0, 0.5), Arc(0.3, 0.3)]
    space = Space.grid(cfg.rows, cfg.cols)
    sets = [CellSet(cfg.rows, cfg.cols, frozenset({p.index})) for p in space.points()]
    sets.append(CellSet(cfg.rows, cfg.cols, frozenset()))
    return GroupSpec(space), space.point((1, 1)), sets


def run_validate_nu(cfg: ExperimentConfig) -> ExperimentResult:
    group, a, sets = nu_battery(cfg)
    if group.is_finite:
        checks = check_pushforward(group, a, sets, None)
    else:
        checks = check_pushforward(group, a, sets, cfg.replications, replication_rng(cfg.seed, 0))
    flagged = [c.name for c in checks if c.flagged]
    extra = {"group": group.family, "space": str(group.space), "checks": [c.to_dict() for c in checks],
             "flagged": flagged, "verdict": "fail" if flagged else "pass"}
    return ExperimentResult(cfg, None, None, extra)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    if cfg.experiment == "oracle":
        return run_oracle(cfg)
    if cfg.experiment == "validate-nu":
        return run_validate_nu(cfg)
    return run_simulation(cfg, workers)


# ---------------------------------------------------------------------------
# Output files


def samples_csv(samples) -> str:
    return "value\n" + "".join(f"{float(x)!r}\n" for x in samples)


def report_json(result: ExperimentResult) -> str:
    return json.dumps(result.to_dict(), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def histogram_svg(report: UniformityReport, title: str = "") -> str:
    """Scaled histogram on [0, 1] with a dashed reference line at density 1."""
    w, h = 640, 400
    left, right, top, bottom = 60, 20, 40, 50
    pw, ph = w - left - right, h - top - bottom
    dens = report.histogram.density
    ymax = max(1.5, 1.1 * max(dens, default=0.0))

    def sx(x):
        return left + x * pw

    def sy(y):
        return top + ph - y / ymax * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{w / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
                     f'font-size="14">{title}</text>')
    edges = report.histogram.edges
    for lo, hi, d in zip(edges[:-1], edges[1:], dens):
        x0, x1 = sx(lo), sx(hi)
        parts.append(f'<rect x="{x0:.3f}" y="{sy(d):.3f}" width="{x1 - x0:.3f}" height="{sy(0) - sy(d):.3f}" '
                     f'fill="#8fb3d9" stroke="#34577a" stroke-width="0.5"/>')
    parts.append(f'<line x1="{sx(0):.3f}" y1="{sy(1):.3f}" x2="{sx(1):.3f}" y2="{sy(1):.3f}" '
                 f'stroke="#c0392b" stroke-width="1.5" stroke-dasharray="6,4"/>')
    parts.append(f'<line x1="{sx(0):.3f}" y1="{sy(0):.3f}" x2="{sx(1):.3f}" y2="{sy(0):.3f}" stroke="black"/>')
    parts.append(f'<line x1="{sx(0):.3f}" y1="{sy(0):.3f}" x2="{sx(0):.3f}" y2="{sy(ymax):.3f}" stroke="black"/>')
    for t in np.linspace(0, 1, 6):
        parts.append(f'<line x1="{sx(t):.3f}" y1="{sy(0):.3f}" x2="{sx(t):.3f}" y2="{sy(0) + 5:.3f}" stroke="black"/>')
        parts.append(f'<text x="{sx(t):.3f}" y="{sy(0) + 20:.3f}" text-anchor="middle" font-family="sans-serif" '
                     f'font-size="12">{t:.1f}</text>')
    step = 0.5 if ymax <= 3 else float(np.ceil(ymax / 6))
    for y in np.arange(0, ymax + 1e-9, step):
        parts.append(f'<line x1="{sx(0) - 5:.3f}" y1="{sy(y):.3f}" x2="{sx(0):.3f}" y2="{sy(y):.3f}" stroke="black"/>')
        parts.append(f'<text x="{sx(0) - 8:.3f}" y="{sy(y) + 4:.3f}" text-anchor="end" font-family="sans-serif" '
                     f'font-size="12">{y:.1f}</text>')
    parts.append(f'<text x="{sx(0.5):.3f}" y="{h - 10}" text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12">sojourn measure</text>')
    parts.append(f'<text x="15" y="{sy(ymax / 2):.3f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 15 {sy(ymax / 2):.3f})">density</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_outputs(result: ExperimentResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if result.samples is not None:
        p = out / "samples.csv"
        p.write_text(samples_csv(result.samples), encoding="utf-8")
        written.append(p)
    p = out / "report.json"
    p.write_text(report_json(result), encoding="utf-8")
    written.append(p)
    if result.report is not None:
        p = out / "histogram.svg"
        p.write_text(histogram_svg(result.report, result.config.experiment), encoding="utf-8")
        written.append(p)
    return written


def default_workers() -> int:
    return os.cpu_count() or 1
