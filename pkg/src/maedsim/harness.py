"""Monte-Carlo BER experiments.

Every frame is drawn from its own generator seeded by
``(master_seed, snr_index, frame_index)`` and all requested detectors see the
same frame, so comparisons between detectors are paired. JL-JED runs on the
jammer-free copy of each frame (same channel, data and noise). Bit-error
counts are summed, which makes the result independent of how frames are
split across worker processes.
"""

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .baselines import detect_genie_pos, detect_jl_jed, detect_lmmse_baseline, detect_maed
from .channel import JammerProfile, SystemConfig, frame_rng, synthesize_frame
from .errors import ConfigError, FrameError, MaedError
from .solver import SolverConfig

log = logging.getLogger(__name__)

DETECTORS = ("lmmse", "geniepos", "maed", "jljed")


def parse_detector(name):
    """Split ``"maed:10"`` into ``("maed", 10)``; plain names give ``t_max=None``."""
    base, _, suffix = name.partition(":")
    if base not in DETECTORS:
        raise ConfigError(f"unknown detector {name!r}; choose from {DETECTORS}")
    if not suffix:
        return base, None
    if base not in ("maed", "jljed"):
        raise ConfigError(f"detector {base!r} takes no iteration count")
    try:
        t_max = int(suffix)
    except ValueError:
        raise ConfigError(f"bad iteration count in detector {name!r}") from None
    return base, t_max


@dataclass(frozen=True)
class ExperimentSpec:
    base: SystemConfig = field(default_factory=SystemConfig)
    snr_grid_db: tuple = (0.0, 5.0, 10.0)
    detectors: tuple = ("lmmse", "geniepos", "maed", "jljed")
    frames_per_point: int = 100
    master_seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    per_ue_report: bool = False
    exclude_ues: tuple = ()
    workers: int = 1

    def __post_init__(self):
        if self.frames_per_point < 1:
            raise ConfigError("frames_per_point must be >= 1")
        if len(self.snr_grid_db) == 0:
            raise ConfigError("snr_grid_db must not be empty")
        if len(self.detectors) == 0:
            raise ConfigError("at least one detector is required")
        if len(set(self.detectors)) != len(self.detectors):
            raise ConfigError(f"duplicate detectors in {self.detectors}")
        for d in self.detectors:
            parse_detector(d)
        for u in self.exclude_ues:
            if not 0 <= u < self.base.U:
                raise ConfigError(f"excluded UE {u} out of range for U={self.base.U}")


@dataclass
class BerRecord:
    detector: str
    snr_db: float
    bit_errors: int
    bits_total: int
    ber: float
    per_ue_ber: list | None = None
    wallclock_s: float = 0.0


def _run_detector(name, frame, cfg, solver, jl_frame):
    base, t_max = parse_detector(name)
    if t_max is not None:
        solver = replace(solver, t_max=t_max)
    if base == "lmmse":
        return detect_lmmse_baseline(frame, cfg)
    if base == "geniepos":
        return detect_genie_pos(frame, cfg)
    if base == "maed":
        return detect_maed(frame, cfg, solver)
    return detect_jl_jed(jl_frame, cfg, solver)


def run_frames(spec, snr_index, frame_indices):
    """Per-UE bit-error counts and detector runtimes over a block of frames.

    Returns ``(errors, seconds)``: dicts keyed by detector name holding a
    length-U integer array and a float.
    """
    cfg = replace(spec.base, snr_db=float(spec.snr_grid_db[snr_index]))
    errors = {d: np.zeros(cfg.U, dtype=np.int64) for d in spec.detectors}
    seconds = dict.fromkeys(spec.detectors, 0.0)
    for fi in frame_indices:
        frame = synthesize_frame(cfg, frame_rng(spec.master_seed, snr_index, fi))
        jl_frame = None
        for d in spec.detectors:
            if d.startswith("jljed") and jl_frame is None:
                jl_frame = frame.without_jammer()
            t0 = time.perf_counter()
            try:
                out = _run_detector(d, frame, cfg, spec.solver, jl_frame)
            except MaedError as exc:
                raise FrameError(
                    f"detector {d} failed at snr={cfg.snr_db} dB (index {snr_index}), "
                    f"frame {fi}, seed {spec.master_seed}: {exc}"
                ) from exc
            seconds[d] += time.perf_counter() - t0
            errors[d] += np.count_nonzero(out.bits != frame.truth.bits, axis=1)
    return errors, seconds


def _chunks(n, k):
    bounds = np.linspace(0, n, k + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _records_for_point(spec, snr_db, errors, seconds, bits_per_ue):
    out = []
    U = spec.base.U
    keep = np.setdiff1d(np.arange(U), np.asarray(spec.exclude_ues, dtype=int))
    for d in spec.detectors:
        e = errors[d]
        total = bits_per_ue * U
        per_ue = (e / bits_per_ue).tolist() if spec.per_ue_report else None
        out.append(BerRecord(d, float(snr_db), int(e.sum()), int(total), e.sum() / total, per_ue, seconds[d]))
        if spec.exclude_ues:
            total = bits_per_ue * keep.size
            ek = int(e[keep].sum())
            out.append(BerRecord(f"{d}-excl", float(snr_db), ek, int(total), ek / total, None, seconds[d]))
    return out


def run_experiment(spec, progress=None):
    """Run every (SNR, detector) point of ``spec`` and return BerRecords.

    Records are ordered by detector (in ``spec.detectors`` order), then by
    ascending SNR.
    """
    bits_per_ue = 2 * spec.base.D * spec.frames_per_point
    records = []
    pool = ProcessPoolExecutor(spec.workers) if spec.workers > 1 else None
    try:
        for si, snr in enumerate(spec.snr_grid_db):
            if pool is None:
                errors, seconds = run_frames(spec, si, range(spec.frames_per_point))
            else:
                parts = [pool.submit(run_frames, spec, si, c) for c in _chunks(spec.frames_per_point, spec.workers)]
                errors = {d: np.zeros(spec.base.U, dtype=np.int64) for d in spec.detectors}
                seconds = dict.fromkeys(spec.detectors, 0.0)
                for fut in parts:
                    e, s = fut.result()
                    for d in spec.detectors:
                        errors[d] += e[d]
                        seconds[d] += s[d]
            point = _records_for_point(spec, snr, errors, seconds, bits_per_ue)
            records.extend(point)
            if progress is not None:
                progress(point)
    finally:
        if pool is not None:
            pool.shutdown()
    order = {d: i for i, d in enumerate(dict.fromkeys(r.detector for r in records))}
    records.sort(key=lambda r: (order[r.detector], r.snr_db))
    return records


def _fmt(x):
    return f"{x:.6g}"


def emit_csv(records, path, include_wallclock=True):
    """Write records as CSV. Floats carry 6 significant digits."""
    header = ["detector", "snr_db", "bits_total", "bit_errors", "ber"]
    if include_wallclock:
        header.append("wallclock_s")
    n_ue = max((len(r.per_ue_ber) for r in records if r.per_ue_ber is not None), default=0)
    header += [f"ue{i}_ber" for i in range(n_ue)]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in records:
                row = [r.detector, _fmt(r.snr_db), r.bits_total, r.bit_errors, _fmt(r.ber)]
                if include_wallclock:
                    row.append(_fmt(r.wallclock_s))
                per_ue = r.per_ue_ber or []
                row += [_fmt(b) for b in per_ue] + [""] * (n_ue - len(per_ue))
                w.writerow(row)
    except OSError as exc:
        raise MaedError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path):
    """Parse a CSV written by :func:`emit_csv` back into a list of dicts."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k, v in row.items():
            if k == "detector" or v == "":
                continue
            row[k] = int(v) if k in ("bits_total", "bit_errors") else float(v)
    return rows


# -- config files ---------------------------------------------------------

_SYSTEM_KEYS = {"B": int, "U": int, "T": int, "D": int, "Es": float}
_JAMMER_KEYS = {f.name: f.type for f in fields(JammerProfile)}
_SOLVER_KEYS = {f.name: f.type for f in fields(SolverConfig)}


def _to_bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


_CASTS = {"int": int, "float": float, "str": str, "bool": _to_bool, int: int, float: float, str: str, bool: _to_bool}


def parse_grid(text):
    """``"0,2,4"`` or ``"0:10:2"`` (stop inclusive) into a tuple of floats."""
    text = str(text).strip()
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"grid {text!r} must be start:stop:step with step > 0")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(n))
    return tuple(float(x) for x in text.replace(" ", "").split(",") if x)


def _int_list(text):
    return tuple(int(x) for x in str(text).replace(" ", "").split(",") if x)


def load_config(path):
    """Read a flat ``key = value`` file; ``#`` starts a comment."""
    entries = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            entries[key] = value
    return entries


def spec_from_entries(entries):
    """Build an ExperimentSpec from flat keys such as ``jammer.kind`` or ``solver.t_max``."""
    system, jammer, solver, top = {}, {}, {}, {}
    for key, value in entries.items():
        try:
            if key in _SYSTEM_KEYS:
                system[key] = _SYSTEM_KEYS[key](value)
            elif key in ("jammer", "jammer.kind"):
                jammer["kind"] = str(value)
            elif key.startswith("jammer."):
                name = key.split(".", 1)[1]
                if name not in _JAMMER_KEYS:
                    raise ConfigError(f"unknown jammer field {name!r}")
                jammer[name] = _CASTS[_JAMMER_KEYS[name]](value)
            elif key.startswith("solver."):
                name = key.split(".", 1)[1]
                if name not in _SOLVER_KEYS:
                    raise ConfigError(f"unknown solver field {name!r}")
                solver[name] = _CASTS[_SOLVER_KEYS[name]](value)
            elif key == "snr_grid_db":
                top[key] = parse_grid(value)
            elif key == "detectors":
                top[key] = tuple(d for d in str(value).replace(" ", "").split(",") if d)
            elif key in ("frames_per_point", "master_seed", "workers"):
                top[key] = int(value)
            elif key == "per_ue_report":
                top[key] = _to_bool(value)
            elif key == "exclude_ues":
                top[key] = _int_list(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from None
    base = SystemConfig(jammer=JammerProfile(**jammer), **system)
    return ExperimentSpec(base=base, solver=SolverConfig(**solver), **top)


# -- figure presets -------------------------------------------------------

_ALL = ("lmmse", "geniepos", "maed", "jljed")
_STRONG = dict(constellation="gaussian", strength_db=25.0, strength_mode="energy")
_WEAK = dict(constellation="qpsk", strength_db=0.0, strength_mode="power")
_KINDS = {"a": "barrage", "b": "pilot", "c": "data", "d": "sparse"}


def figure_presets():
    """Scenario for each BER figure, as ExperimentSpec keyword overrides."""
    presets = {}
    for letter, kind in _KINDS.items():
        presets[f"fig2{letter}"] = dict(jammer=dict(kind=kind, **_STRONG), detectors=_ALL)
        presets[f"fig3{letter}"] = dict(jammer=dict(kind=kind, **_WEAK), detectors=_ALL)
    presets["fig4a"] = dict(jammer=dict(kind="none"), detectors=_ALL)
    presets["fig4b"] = dict(jammer=dict(kind="none"), detectors=("maed:10", "maed:20", "maed:30", "maed:100", "jljed"))
    presets["fig4b-jammed"] = dict(
        jammer=dict(kind="barrage", **_STRONG), detectors=("maed:10", "maed:20", "maed:30", "maed:100", "jljed")
    )
    presets["fig5a"] = dict(
        jammer=dict(kind="impersonate_single", strength_db=25.0, strength_mode="power", target_ue=0),
        detectors=_ALL,
        exclude_ues=(0,),
    )
    presets["fig5b"] = dict(
        jammer=dict(kind="impersonate_average", strength_db=25.0, strength_mode="power", target_count=4),
        detectors=_ALL,
    )
    return presets


DEFAULT_FIGURE_GRID = tuple(float(x) for x in range(-6, 21, 2))


def figure_spec(name, frames=1000, snr_grid_db=DEFAULT_FIGURE_GRID, master_seed=0, workers=1, solver=None):
    presets = figure_presets()
    if name not in presets:
        raise ConfigError(f"unknown figure {name!r}; choose from {sorted(presets)}")
    p = presets[name]
    base = SystemConfig(jammer=JammerProfile(**p["jammer"]))
    return ExperimentSpec(
        base=base,
        snr_grid_db=tuple(snr_grid_db),
        detectors=tuple(p["detectors"]),
        frames_per_point=frames,
        master_seed=master_seed,
        solver=solver or SolverConfig(),
        per_ue_report=bool(p.get("exclude_ues")),
        exclude_ues=tuple(p.get("exclude_ues", ())),
        workers=workers,
    )


# -- post-processing --------------------------------------------------------


def binomial_sigma(errors, total):
    p = errors / total
    return math.sqrt(max(p * (1.0 - p), 0.0) / total)


def snr_at_ber(snr_db, ber, target=1e-3):
    """SNR where a BER curve first drops to ``target`` (log-linear interpolation).

    Returns None if the curve never gets there on the grid.
    """
    snr = np.asarray(snr_db, dtype=float)
    b = np.asarray(ber, dtype=float)
    order = np.argsort(snr)
    snr, b = snr[order], b[order]
    if b[0] <= target:
        return float(snr[0])
    for i in range(1, len(snr)):
        if b[i] <= target:
            if b[i] <= 0.0:
                # log interpolation is undefined at zero; fall back to linear
                frac = (b[i - 1] - target) / (b[i - 1] - b[i])
            else:
                lo, hi = math.log10(b[i - 1]), math.log10(b[i])
                frac = (lo - math.log10(target)) / (lo - hi)
            return float(snr[i - 1] + frac * (snr[i] - snr[i - 1]))
    return None
