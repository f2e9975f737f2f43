"""Command-line front end: ``sstboot {simulate,analyze,bootstrap,threshold}``.

Settings come from flags, then a ``key = value`` config file, then defaults.
Exit codes: 0 on success, 2 on a configuration error (the message names the
field), 3 on a numeric failure (the message names the stage).
"""

from __future__ import annotations

import argparse
import os
import sys
from contextlib import contextmanager
from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .core import SstBootError, TimeSeries
from .fileio import (
    MalformedCsv,
    MissingRate,
    read_series_csv,
    write_grid_csv,
    write_manifest,
    write_png,
    write_recon_csv,
    write_ridge_csv,
    write_series_csv,
    write_tfr_csv,
)
from .pipeline import PipelineConfig, analyze
from .simgen import gen_ahm, gen_null
from .tvar import dump_model, fit_tvar
from .uq import BandSpec, apply_threshold, bootstrap_bands, default_spec, noise_threshold

__all__ = ["RunConfig", "ConfigError", "NumericFailure", "main", "build_parser"]


class ConfigError(Exception):
    def __init__(self, field_name: str, msg: str):
        self.field = field_name
        super().__init__(f"{field_name}: {msg}")


class NumericFailure(Exception):
    def __init__(self, stage_name: str, exc: BaseException):
        self.stage = stage_name
        super().__init__(f"stage '{stage_name}': {exc}")


def _opt_float(s):
    return None if s is None or str(s).lower() in ("", "none", "auto") else float(s)


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_int(s):
    return None if s is None or str(s).lower() in ("", "none", "auto") else int(s)


def _opt_str(s):
    return None if s is None or str(s).lower() in ("", "none") else str(s)


def _f(default, conv, help, choices=None, flag=None):
    return field(default=default, metadata={"conv": conv, "help": help, "choices": choices, "flag": flag})


@dataclass
class RunConfig:
    seed: int = _f(0, int, "base seed; bootstrap replicate r uses seed XOR r")
    jobs: int | None = _f(None, _opt_int, "parallel workers (default: available cores)")
    out_dir: str = _f(".", str, "output directory")

    input: str | None = _f(None, _opt_str, "CSV with time_s,value or one value column")
    rate_hz: float | None = _f(None, _opt_float, "sampling rate in Hz", flag="--rate")
    simulate: str | None = _f(None, _opt_str, "use a simulated series instead of --input", ("null", "ahm"))
    n: int = _f(2048, int, "length of simulated series")

    window: str = _f("bump", str, "window family", ("bump", "truncgauss"))
    beta_s: float = _f(1.0, float, "window half-support in seconds", flag="--beta")
    c_max_hz: float | None = _f(None, _opt_float, "top of the analysis grid (default Nyquist)")
    d: int = _f(512, int, "number of analysis frequencies")
    alpha: float | None = _f(None, _opt_float, "SST kernel resolution in Hz^2")
    c_alpha: float = _f(2.0, float, "alpha = (delta_r / c_alpha)^2 when delta_r is given")
    nu: float = _f(1e-6, float, "reassignment magnitude threshold")
    nu_quantile: float | None = _f(None, _opt_float, "data-driven nu: off-ridge |V| quantile")
    real_part: bool = _f(True, _bool, "use only the real part of the reassignment rule")
    lambda_pen: float = _f(1.0, float, "ridge smoothness penalty", flag="--lambda")
    delta_r_hz: float | None = _f(None, _opt_float, "reconstruction half-band in Hz", flag="--delta-r")
    jump_cap: int = _f(2, int, "max ridge jump in bins per sample")

    b: int = _f(2, int, "tvAR order")
    m: int = _f(4, int, "basis functions per tvAR coefficient")
    half_window: int = _f(20, int, "moving-std half window for innovations")
    n_boot: int = _f(1000, int, "bootstrap replicates M")
    alpha_level: float = _f(0.05, float, "band / threshold level")
    time_step: int = _f(8, int, "coarse grid: every k-th sample")
    n_freqs: int = _f(64, int, "coarse grid: number of frequencies")
    assume_null: bool = _f(False, _bool, "treat the input as pure noise (skip reconstruction)")

    emit_tfr_csv: bool = _f(True, _bool, "write full TFR CSVs")
    emit_png: bool = _f(True, _bool, "write PNG rasters")
    cmap: str = _f("gray", str, "PNG colormap", ("gray", "heat"))
    scale: str = _f("log1p", str, "PNG intensity scale", ("linear", "log1p"))

    def pipeline(self) -> PipelineConfig:
        try:
            return PipelineConfig(
                window=self.window, beta_s=self.beta_s, c_max_hz=self.c_max_hz, d=self.d,
                alpha=self.alpha, c_alpha=self.c_alpha, nu=self.nu, nu_quantile=self.nu_quantile,
                real_part=self.real_part, lambda_pen=self.lambda_pen, delta_r_hz=self.delta_r_hz,
                jump_cap=self.jump_cap,
            )
        except SstBootError as exc:
            raise ConfigError("pipeline", str(exc)) from exc


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _flag(f) -> str:
    return f.metadata["flag"] or "--" + f.name.replace("_", "-")


def _convert(name: str, raw):
    f = _FIELDS[name]
    try:
        val = f.metadata["conv"](raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, f"cannot parse {raw!r}: {exc}") from None
    ch = f.metadata["choices"]
    if ch and val is not None and val not in ch:
        raise ConfigError(name, f"{val!r} is not one of {', '.join(ch)}")
    return val


def read_config_file(path) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"line {no}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.replace("-", "_")
        if k not in _FIELDS:
            raise ConfigError(k, f"unknown setting in {path} line {no}")
        out[k] = v
    return out


def _add_fields(p: argparse.ArgumentParser, names) -> None:
    for name in names:
        f = _FIELDS[name]
        kw = {"dest": name, "default": argparse.SUPPRESS, "help": f.metadata["help"]}
        if f.metadata["conv"] is _bool:
            p.add_argument(_flag(f), action=argparse.BooleanOptionalAction, **kw)
        else:
            p.add_argument(_flag(f), metavar=name.upper(), **kw)


_GLOBAL = ("seed", "jobs", "out_dir")
_INPUT = ("input", "rate_hz", "simulate", "n")
_PIPE = ("window", "beta_s", "c_max_hz", "d", "alpha", "c_alpha", "nu", "nu_quantile", "real_part",
         "lambda_pen", "delta_r_hz", "jump_cap")
_BOOT = ("b", "m", "half_window", "n_boot", "alpha_level", "time_step", "n_freqs", "assume_null")
_EMIT = ("emit_tfr_csv", "emit_png", "cmap", "scale")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _add_fields(common, _GLOBAL)
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value settings file")

    p = argparse.ArgumentParser(prog="sstboot", parents=[common], description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="write a simulated series to CSV")
    s.add_argument("simulate", choices=("null", "ahm"), help="generator")
    _add_fields(s, ("n",))

    for name, extra, hlp in (
        ("analyze", (), "STFT, SST, ridge and reconstruction"),
        ("bootstrap", _BOOT, "bootstrap percentile bands of |SST|"),
        ("threshold", _BOOT, "bootstrap noise threshold and thresholded SST"),
    ):
        a = sub.add_parser(name, parents=[common], help=hlp)
        _add_fields(a, _INPUT + _PIPE + tuple(extra) + _EMIT)
    return p


def resolve(argv) -> tuple[str, RunConfig, dict[str, str]]:
    """Parse ``argv`` and merge flags over the config file over defaults."""
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    cfg_path = ns.pop("config", None)
    file_vals = read_config_file(cfg_path) if cfg_path else {}
    values, sources = {}, {}
    for name, f in _FIELDS.items():
        if name in ns:
            values[name], sources[name] = _convert(name, ns[name]), "flag"
        elif name in file_vals:
            values[name], sources[name] = _convert(name, file_vals[name]), "config"
        else:
            default = f.default if f.default is not MISSING else None
            values[name], sources[name] = default, "default"
    cfg = RunConfig(**values)
    _validate(command, cfg)
    return command, cfg, sources


def _validate(command: str, c: RunConfig) -> None:
    if c.jobs is not None and c.jobs < 1:
        raise ConfigError("jobs", "must be at least 1")
    if c.rate_hz is not None and not c.rate_hz > 0:
        raise ConfigError("rate_hz", "must be positive")
    if command == "simulate" or c.simulate:
        lo = 1024 if c.simulate == "ahm" else 64
        if c.n < lo:
            raise ConfigError("n", f"{c.simulate} simulation needs n >= {lo}")
    if command != "simulate":
        if (c.input is None) == (c.simulate is None):
            raise ConfigError("input", "give exactly one of --input or --simulate")
        if c.input is not None and not Path(c.input).is_file():
            raise ConfigError("input", f"no such file: {c.input}")
    for name in ("d", "b", "m", "half_window", "time_step", "n_freqs"):
        if getattr(c, name) < 1:
            raise ConfigError(name, "must be at least 1")
    if c.jump_cap < 0:
        raise ConfigError("jump_cap", "must be non-negative")
    if command in ("bootstrap", "threshold"):
        if c.n_boot < 40:
            raise ConfigError("n_boot", "at least 40 replicates are needed")
        if not 0 < c.alpha_level < 1:
            raise ConfigError("alpha_level", "must lie in (0, 1)")
        if c.n_freqs < 4:
            raise ConfigError("n_freqs", "spline lifting needs at least 4 frequencies")
    if c.nu_quantile is not None and not 0 < c.nu_quantile < 1:
        raise ConfigError("nu_quantile", "must lie in (0, 1)")


@contextmanager
def stage(name: str):
    try:
        yield
    except (ConfigError, NumericFailure):
        raise
    except (SstBootError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise NumericFailure(name, exc) from exc


def load_series(c: RunConfig) -> tuple[TimeSeries, dict]:
    if c.simulate == "ahm":
        with stage("simulate"):
            truth = gen_ahm(c.n, c.seed)
        return truth.f, {"am": truth.am, "if_hz": truth.inst_freq, "phase": truth.phase}
    if c.simulate == "null":
        with stage("simulate"):
            return gen_null(c.n, c.seed), {}
    try:
        return read_series_csv(c.input, c.rate_hz), {}
    except MissingRate as exc:
        raise ConfigError("rate_hz", str(exc)) from None
    except MalformedCsv as exc:
        raise ConfigError("input", str(exc)) from None
    except SstBootError as exc:
        raise ConfigError("input", str(exc)) from None


def _manifest(out: Path, command: str, c: RunConfig, sources: dict, derived: dict) -> None:
    entries = {f.name: getattr(c, f.name) for f in fields(c)}
    entries["jobs"] = _jobs(c)
    entries.update(command=command, version=__version__, **derived)
    write_manifest(out / "run_manifest.txt", entries, {**sources, **{k: "derived" for k in derived}})


def _jobs(c: RunConfig) -> int:
    return c.jobs or os.cpu_count() or 1


def _out(c: RunConfig) -> Path:
    out = Path(c.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("out_dir", f"cannot create {out}: {exc.strerror}") from None
    return out


def cmd_simulate(c: RunConfig, sources: dict) -> None:
    out = _out(c)
    ts, extra = load_series(c)
    write_series_csv(out / "simulated.csv", ts, extra)
    _manifest(out, "simulate", c, sources, {"rate_hz_resolved": ts.rate_hz})


def _derived(res) -> dict:
    pipe = res.pipeline
    return {
        "window_m": pipe.window.m,
        "alpha_resolved": pipe.sst.alpha,
        "delta_r_resolved": pipe.delta_r_hz,
        "nu_resolved": res.nu,
        "grid_top_hz": pipe.grid.freqs_hz[-1],
        "grid_spacing_hz": pipe.grid.bin_width_hz,
    }


def _analysis(c: RunConfig, ts: TimeSeries):
    pc = c.pipeline()
    with stage("analysis"):
        return analyze(ts, pc)


def cmd_analyze(c: RunConfig, sources: dict) -> None:
    out = _out(c)
    ts, _ = load_series(c)
    res = _analysis(c, ts)
    with stage("export"):
        if c.emit_tfr_csv:
            write_tfr_csv(out / "stft.csv", res.stft)
            write_tfr_csv(out / "sst.csv", res.sst)
        write_ridge_csv(out / "ridge.csv", res.ridge)
        write_recon_csv(out / "recon.csv", res.component)
        if c.emit_png:
            write_png(out / "sst.png", res.sst, c.cmap, c.scale, res.ridge)
    _manifest(out, "analyze", c, sources, {**_derived(res), "rate_hz_resolved": ts.rate_hz})


def _noise_model(c: RunConfig, ts: TimeSeries):
    res = _analysis(c, ts)
    if c.assume_null:
        signal, resid = None, ts.samples
    else:
        signal = res.component.real
        resid = ts.samples - signal
    with stage("tvar_fit"):
        model = fit_tvar(resid, c.b, c.m, c.half_window)
    return res, signal, model


def _spec(c: RunConfig, n: int, d: int) -> BandSpec:
    try:
        return default_spec(n, d, c.time_step, c.n_freqs, c.alpha_level, c.n_boot)
    except SstBootError as exc:
        raise ConfigError("n_boot", str(exc)) from None


def cmd_bootstrap(c: RunConfig, sources: dict) -> None:
    out = _out(c)
    ts, _ = load_series(c)
    res, signal, model = _noise_model(c, ts)
    pipe = res.pipeline
    spec = _spec(c, ts.n, len(pipe.grid))
    base = None if signal is None else ts.with_samples(signal)
    with stage("bootstrap"):
        bands = bootstrap_bands(base, model, spec, pipe, ts.n, ts.rate_hz, c.seed, _jobs(c))
    with stage("export"):
        (out / "tvar_model.txt").write_text(dump_model(model))
        t = ts.times
        write_grid_csv(out / "bands.csv", t, pipe.grid.freqs_hz, {"lower": bands.lower, "upper": bands.upper})
        if c.emit_png:
            write_png(out / "bands_lower.png", bands.lower, c.cmap, c.scale)
            write_png(out / "bands_upper.png", bands.upper, c.cmap, c.scale)
    _manifest(out, "bootstrap", c, sources, {**_derived(res), "rate_hz_resolved": ts.rate_hz})


def cmd_threshold(c: RunConfig, sources: dict) -> None:
    out = _out(c)
    ts, _ = load_series(c)
    res, _, model = _noise_model(c, ts)
    pipe = res.pipeline
    spec = _spec(c, ts.n, len(pipe.grid))
    with stage("threshold"):
        thr = noise_threshold(model, spec, pipe, ts.n, ts.rate_hz, c.seed, _jobs(c))
        kept = apply_threshold(res.sst, thr)
    with stage("export"):
        (out / "tvar_model.txt").write_text(dump_model(model))
        write_grid_csv(out / "threshold.csv", ts.times, pipe.grid.freqs_hz, {"threshold": thr})
        if c.emit_tfr_csv:
            write_tfr_csv(out / "sst_thresholded.csv", kept)
        if c.emit_png:
            write_png(out / "sst_thresholded.png", kept, c.cmap, c.scale)
    _manifest(out, "threshold", c, sources, {**_derived(res), "rate_hz_resolved": ts.rate_hz})


COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "bootstrap": cmd_bootstrap,
    "threshold": cmd_threshold,
}


def main(argv=None) -> int:
    try:
        command, cfg, sources = resolve(argv)
        COMMANDS[command](cfg, sources)
    except ConfigError as exc:
        print(f"sstboot: configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericFailure as exc:
        print(f"sstboot: numeric failure in {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
