"""
Monte Carlo MSE sweeps and wall-clock scaling runs for the three filters:

``block``       exact block LMMSE (cubic, n <= 2000 only)
``fg_colored``  state-space smoother using the true AR noise model
``fg_white``    the same smoother assuming white noise of equal power
"""
from __future__ import annotations

import csv
import gc
import io
import json
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ConfigError, LmmseError
from .messages import SymbolBeliefs
from .model import (ArModel, IsiChannel, observe, sample_ar_noise, sample_source,
                    stabilize_ar)
from .oracle import block_lmmse, noise_covariance
from .smoother import FilterOptions, fg_lmmse

FILTERS = ("block", "fg_colored", "fg_white")
BLOCK_MAX_N = 2000
MIN_REPEAT_MS = 200.0

CSV_HEADER = ("filter", "snr_db", "n", "L", "p", "a_coeffs", "eps", "trials",
              "mse", "mean_post_var", "wall_ms")


class ExperimentError(LmmseError):
    """A filter failed at a given operating point."""

    def __init__(self, filter_id, snr_db, trial, cause):
        where = "all trials" if trial is None else f"trial {trial}"
        super().__init__(f"{filter_id} at {snr_db} dB ({where}): {cause}")
        self.filter_id = filter_id
        self.snr_db = snr_db
        self.trial = trial
        self.cause = cause


def parse_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"complex pair must have two entries: {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ConfigError(f"cannot parse complex value {value!r}") from None
    if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
        return complex(value)
    raise ConfigError(f"cannot parse complex value {value!r}")


def format_complex(c: complex) -> str:
    """``re+imi`` with round-trip precision."""
    return f"{c.real}{c.imag:+}i"


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 1000
    channel: tuple = (1, 2, 0, 0, 0, 1)
    normalize_es: float | None = 1.0
    ar_coeffs: tuple = (0.9,)
    snr_grid_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    trials: int = 200
    seed: int = 0
    eps: float = 1e-5
    filters: tuple = FILTERS
    # scaling runs only
    n_grid: tuple = (1000, 2000, 4000, 8000)
    repeats: int = 5
    scaling_snr_db: float = 10.0
    # mse runs write NaN wall times unless asked, keeping the CSV reproducible
    record_timing: bool = False

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        try:
            set_("channel", tuple(parse_complex(c) for c in self.channel))
            set_("ar_coeffs", tuple(parse_complex(c) for c in self.ar_coeffs))
            set_("snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
            set_("n_grid", tuple(int(v) for v in self.n_grid))
            set_("filters", tuple(str(f) for f in self.filters))
            set_("n", int(self.n))
            set_("trials", int(self.trials))
            set_("repeats", int(self.repeats))
            set_("seed", int(self.seed))
            set_("eps", float(self.eps))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.n < 1 or self.trials < 1 or self.repeats < 1:
            raise ConfigError("n, trials and repeats must be positive")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db must not be empty")
        if not self.filters:
            raise ConfigError("at least one filter is required")
        unknown = set(self.filters) - set(FILTERS)
        if unknown:
            raise ConfigError(f"unknown filters {sorted(unknown)}; choose from {FILTERS}")
        if len(set(self.filters)) != len(self.filters):
            raise ConfigError("duplicate filter ids")
        if list(self.n_grid) != sorted(self.n_grid) or any(v < 1 for v in self.n_grid):
            raise ConfigError("n_grid must be positive and ascending")
        if not 1e-12 <= self.eps <= 1e-2:
            raise ConfigError("eps must lie in [1e-12, 1e-2]")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        try:
            self.isi_channel()
            stabilize_ar(self.ar_coeffs, 1.0)
        except LmmseError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    def isi_channel(self) -> IsiChannel:
        ch = IsiChannel(np.array(self.channel))
        if self.normalize_es is not None:
            ch = ch.scaled_to(float(self.normalize_es))
        return ch

    def validate_for_mse(self) -> None:
        if "block" in self.filters and self.n > BLOCK_MAX_N:
            raise ConfigError(f"block filter refuses n > {BLOCK_MAX_N}")


def load_config(path) -> ExperimentConfig:
    """Read a JSON object, or ``key = value`` lines with JSON values."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"line {lineno}: expected key = value")
            try:
                data[key.strip()] = json.loads(value.strip())
            except json.JSONDecodeError:
                raise ConfigError(f"line {lineno}: value is not valid JSON") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return ExperimentConfig.from_mapping(data)


@dataclass(frozen=True, eq=False)
class MseRecord:
    filter: str
    snr_db: float
    n: int
    L: int
    p: int
    a_coeffs: tuple
    eps: float
    trials: int
    mse: float
    mean_post_var: float
    wall_ms: float
    # not written to CSV: per-trial values for Monte Carlo bands
    trial_mse: np.ndarray = field(default=None, repr=False)
    trial_post_var: np.ndarray = field(default=None, repr=False)

    def row(self) -> list[str]:
        return [self.filter, f"{self.snr_db:g}", str(self.n), str(self.L), str(self.p),
                ";".join(format_complex(c) for c in self.a_coeffs),
                f"{self.eps:g}", str(self.trials), repr(float(self.mse)),
                repr(float(self.mean_post_var)), f"{self.wall_ms:.3f}"]

    def mse_stderr(self) -> float:
        """Standard error of ``mse`` from the spread of independent trials."""
        if self.trial_mse is None or self.trial_mse.size < 2:
            return float("nan")
        return float(np.std(self.trial_mse, ddof=1) / math.sqrt(self.trial_mse.size))

    def consistency_z(self) -> float:
        """(mse - mean_post_var) in units of its Monte Carlo standard error."""
        diff = self.trial_mse - self.trial_post_var
        se = np.std(diff, ddof=1) / math.sqrt(diff.size)
        return float(np.mean(diff) / se)


def paired_gap(worse: MseRecord, better: MseRecord) -> tuple[float, float]:
    """Mean per-trial MSE difference and its standard error (same realizations)."""
    diff = worse.trial_mse - better.trial_mse
    return float(np.mean(diff)), float(np.std(diff, ddof=1) / math.sqrt(diff.size))


def trial_seed(seed: int, snr_index: int, trial_index: int) -> np.random.Generator:
    """Generator for one realization; shared by every filter at that point."""
    return np.random.default_rng(np.random.SeedSequence([seed, snr_index, trial_index]))


def noise_model(cfg: ExperimentConfig, snr_db: float) -> ArModel:
    """AR model whose stationary variance gives Es/N0 = snr_db on the configured channel."""
    n0 = cfg.isi_channel().es / 10.0 ** (snr_db / 10.0)
    return stabilize_ar(cfg.ar_coeffs, n0)


def generate_trials(cfg: ExperimentConfig, ch: IsiChannel, ar: ArModel, snr_index: int,
                    n: int, trials: int) -> tuple[np.ndarray, np.ndarray]:
    """Source blocks (T, n) and observation blocks (T, n + L)."""
    xs = np.empty((trials, n), dtype=np.complex128)
    rs = np.empty((trials, n + ch.L), dtype=np.complex128)
    for t in range(trials):
        rng = trial_seed(cfg.seed, snr_index, t)
        xs[t] = sample_source(n, rng)
        rs[t] = observe(ch, xs[t], sample_ar_noise(ar, n + ch.L, rng))
    return xs, rs


def run_filter(filter_id: str, rs: np.ndarray, ch: IsiChannel, ar: ArModel, eps: float):
    opts = FilterOptions(eps=eps)
    if filter_id == "fg_colored":
        return fg_lmmse(rs, ch, ar, opts=opts)
    if filter_id == "fg_white":
        return fg_lmmse(rs, ch, ArModel.white(ar.n0), opts=opts)
    if filter_id == "block":
        n = rs.shape[-1] - ch.L
        return block_lmmse(rs, ch, noise_covariance(ar, n + ch.L, eps))
    raise ConfigError(f"unknown filter {filter_id!r}")


def _timed(fn, loops: int = 1):
    """Mean time per call of ``loops`` calls to ``fn``, single-threaded, GC paused."""
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        with threadpool_limits(limits=1):
            start = time.perf_counter()
            for _ in range(loops):
                out = fn()
            return out, (time.perf_counter() - start) * 1e3 / loops
    finally:
        if gc_was_enabled:
            gc.enable()


def _record(cfg, filter_id, snr_db, n, ch, xs, post, wall_ms) -> MseRecord:
    trial_mse = np.mean(np.abs(xs - post.mean) ** 2, axis=1)
    post_var = float(np.mean(post.var))
    return MseRecord(filter_id, snr_db, n, ch.L, len(cfg.ar_coeffs), cfg.ar_coeffs,
                     cfg.eps, xs.shape[0], float(np.mean(trial_mse)), post_var, wall_ms,
                     trial_mse, np.full(xs.shape[0], post_var))


def run_mse_experiment(cfg: ExperimentConfig) -> list[MseRecord]:
    """MSE and mean posterior variance per (snr, filter), paired across filters.

    Every filter sees the same realizations at a given snr point.  Trials are
    processed as one stacked batch per filter since the covariance recursion
    does not depend on the data.
    """
    cfg.validate_for_mse()
    ch = cfg.isi_channel()
    records = []
    for si, snr_db in enumerate(cfg.snr_grid_db):
        ar = noise_model(cfg, snr_db)
        xs, rs = generate_trials(cfg, ch, ar, si, cfg.n, cfg.trials)
        for filter_id in cfg.filters:
            try:
                post, wall_ms = _timed(lambda: run_filter(filter_id, rs, ch, ar, cfg.eps))
            except LmmseError as exc:
                raise ExperimentError(filter_id, snr_db, None, exc) from exc
            wall_ms = wall_ms / cfg.trials if cfg.record_timing else float("nan")
            records.append(_record(cfg, filter_id, snr_db, cfg.n, ch, xs, post, wall_ms))
    return records


def run_scaling_benchmark(cfg: ExperimentConfig, n_grid=None) -> list[MseRecord]:
    """Median wall time of ``cfg.repeats`` runs per (filter, n) at a fixed operating point.

    Each point gets one untimed warm-up run, which also sizes an inner loop
    so that every repetition lasts at least ``MIN_REPEAT_MS``.  Block rows are
    skipped for n above the block limit.
    """
    n_grid = tuple(cfg.n_grid if n_grid is None else n_grid)
    if list(n_grid) != sorted(n_grid) or not n_grid:
        raise ConfigError("n_grid must be nonempty and ascending")
    ch = cfg.isi_channel()
    snr_db = cfg.scaling_snr_db
    ar = noise_model(cfg, snr_db)
    records = []
    for n in n_grid:
        xs, rs = generate_trials(cfg, ch, ar, 0, n, 1)
        for filter_id in cfg.filters:
            if filter_id == "block" and n > BLOCK_MAX_N:
                continue
            times = []
            try:
                call = lambda: run_filter(filter_id, rs[0], ch, ar, cfg.eps)  # noqa: E731
                _, warm_ms = _timed(call)
                loops = max(1, math.ceil(MIN_REPEAT_MS / max(warm_ms, 1e-3)))
                for _ in range(cfg.repeats):
                    post, ms = _timed(call, loops)
                    times.append(ms)
            except LmmseError as exc:
                raise ExperimentError(filter_id, snr_db, 0, exc) from exc
            post = SymbolBeliefs(np.atleast_2d(post.mean), post.var)
            records.append(_record(cfg, filter_id, snr_db, n, ch, xs, post,
                                   float(np.median(times))))
    return records


def write_csv(records, out=None) -> str:
    """Serialize records; writes to ``out`` (path or text stream) and returns the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.row())
    text = buf.getvalue()
    if isinstance(out, (str, Path)):
        Path(out).write_text(text)
    elif out is not None:
        out.write(text)
    return text


def gnuplot_script(csv_path, records, kind: str = "mse") -> str:
    """gnuplot commands plotting the CSV: MSE vs Es/N0, or wall time vs n."""
    filters = list(dict.fromkeys(r.filter for r in records))
    lines = ['set datafile separator ","', "set key top right", "set grid", "set logscale y"]
    if kind == "mse":
        lines += ['set xlabel "Es/N0 [dB]"', 'set ylabel "MSE"']
        xcol, ycol = 2, 9
    else:
        lines += ["set logscale x", 'set xlabel "block length N"', 'set ylabel "wall time [ms]"']
        xcol, ycol = 3, 11
    plots = [f"'{csv_path}' every ::1 using {xcol}:(strcol(1) eq \"{f}\" ? ${ycol} : 1/0) "
             f"with linespoints title \"{f}\"" for f in filters]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
