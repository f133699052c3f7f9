"""Command-line entry point: ``hawkesdepeg {extract,fit,simulate,intensity,ll}``.

All times are hours. Every command that writes files also writes a
``manifest.json`` recording its inputs and settings.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .ingest import (DENOMINATORS, IngestError, PercentileBand, band_mask, extract_events,
                     parse_ohlc_csv, read_events_csv, read_magnitudes_csv,
                     write_events_csv)
from .likelihood import log_likelihood
from .model import EventSequence, HawkesModel, intensity
from .optimizer import EmptyDimensionError, OptimizerConfig, fit
from .report import render_table
from .simulate import ExplosiveModelError, SimulationConfig, simulate

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger("hawkesdepeg")

SEED_ENV = "HAWKES_SEED"


class CliError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    inputs: list[str] = field(default_factory=list)
    bands: list[str] = field(default_factory=list)
    optimizer: Optional[dict] = None
    seed: Optional[int] = None
    out_dir: str = "."
    tool: str = "hawkesdepeg"
    version: str = __version__


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, obj) -> None:
    write_atomic(path, json.dumps(obj, indent=2) + "\n")


def write_manifest(out_dir: Path, manifest: RunManifest) -> None:
    write_json(out_dir / "manifest.json", asdict(manifest))


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"{path}: {e.strerror}") from None


def resolve_seed(args, file_seed: Optional[int] = None) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"{SEED_ENV}={env!r} is not an integer") from None
    return 0 if file_seed is None else int(file_seed)


def load_optimizer_config(args) -> OptimizerConfig:
    settings: dict = {}
    if args.config:
        text = _read_text(args.config)
        if args.config.endswith(".toml"):
            settings = tomllib.loads(text)
            settings = settings.get("optimizer", settings)
        else:
            settings = json.loads(text)
    if args.bounds:
        try:
            lo, hi = (float(x) for x in args.bounds.split(":"))
        except ValueError:
            raise CliError(f"--bounds expects lo:hi, got {args.bounds!r}") from None
        settings["lower_bound"], settings["upper_bound"] = lo, hi
    if args.max_iters is not None:
        settings["max_iterations"] = args.max_iters
    if args.restarts is not None:
        settings["restarts"] = args.restarts
    settings["seed"] = resolve_seed(args, settings.get("seed"))
    try:
        return OptimizerConfig.from_dict(settings)
    except (TypeError, ValueError) as e:
        raise CliError(f"invalid optimizer settings: {e}") from None


# -- events loading ------------------------------------------------------------

def _load_event_inputs(paths: list[str], horizon: Optional[float]):
    """Returns (times per dim, magnitudes per dim or None, horizon)."""
    if len(paths) == 1 and paths[0].endswith(".json"):
        try:
            seq = EventSequence.from_json(_read_text(paths[0]))
        except (KeyError, TypeError, ValueError) as e:
            raise CliError(f"{paths[0]}: invalid events JSON: {e!r}") from None
        return [a for a in seq.arrivals], None, horizon or seq.horizon
    times, mags = [], []
    for p in paths:
        try:
            evs = read_events_csv(_read_text(p))
        except IngestError as e:
            raise CliError(f"{p}: {e}") from None
        times.append(np.array([e.time for e in evs]))
        mags.append(np.array([e.magnitude for e in evs]))
    if horizon is None:
        last = [t[-1] for t in times if t.size]
        if not last:
            raise CliError("empty input: no events in any file; pass --horizon")
        horizon = float(max(last))
    return times, mags, horizon


def _load_sequence(args) -> EventSequence:
    times, _, horizon = _load_event_inputs(args.events, args.horizon)
    try:
        return EventSequence(tuple(times), horizon)
    except ValueError as e:
        raise CliError(str(e)) from None


def _load_model(path: str) -> HawkesModel:
    try:
        return HawkesModel.from_json(_read_text(path))
    except (KeyError, ValueError) as e:
        raise CliError(f"{path}: invalid model: {e}") from None


# -- commands ------------------------------------------------------------------

def cmd_extract(args) -> int:
    out_dir = Path(args.out_dir)
    inputs = args.input
    bands = [PercentileBand.parse(b) for b in (args.band or ["0.9:1.0"])]
    if len(bands) not in (1, len(inputs)):
        raise CliError("give one --band for all inputs or one per input")
    bands = bands * len(inputs) if len(bands) == 1 else bands
    sources = args.threshold_source or ["self"]
    if len(sources) not in (1, len(inputs)):
        raise CliError("give one --threshold-source for all inputs or one per input")
    sources = sources * len(inputs) if len(sources) == 1 else sources

    series = []
    for path in inputs:
        try:
            bars = parse_ohlc_csv(_read_text(path), source=path)
        except IngestError as e:
            raise CliError(str(e)) from None
        if not bars:
            raise CliError(f"{path}: empty input: no data rows")
        series.append(bars)
    origin = min(b[0].timestamp for b in series)
    horizon = (max(b[-1].timestamp for b in series) - origin) / 60.0
    if horizon <= 0:
        raise CliError("input spans zero time; need at least two distinct minutes")

    arrivals = []
    for k, (path, bars, band, src) in enumerate(zip(inputs, series, bands, sources)):
        try:
            threshold = "self" if src == "self" else read_magnitudes_csv(_read_text(src))
        except IngestError as e:
            raise CliError(f"{src}: {e}") from None
        try:
            events = extract_events(bars, band, threshold, args.denominator, origin)
        except ValueError as e:
            raise CliError(f"{path}: {e}") from None
        if not events:
            logger.warning("%s: band %s selected no events", path, band.label)
        name = f"events_{k + 1}_{Path(path).stem}.csv"
        buf = io.StringIO()
        write_events_csv(events, buf)
        write_atomic(out_dir / name, buf.getvalue())
        arrivals.append([e.time for e in events])
        print(f"{path}: {len(events)} events in band {band.label} -> {out_dir / name}")
    write_json(out_dir / "events.json", EventSequence(tuple(arrivals), horizon).to_dict())
    write_manifest(out_dir, RunManifest(
        command="extract", argv=args.argv, inputs=list(inputs) + [s for s in sources if s != "self"],
        bands=[f"{b.lower}:{b.upper}" for b in bands], out_dir=str(args.out_dir)))
    return 0


def cmd_fit(args) -> int:
    out_dir = Path(args.out_dir)
    config = load_optimizer_config(args)
    times, mags, horizon = _load_event_inputs(args.events, args.horizon)
    m = len(times)
    labels = args.labels.split(",") if args.labels else None
    if labels is not None and len(labels) != m:
        raise CliError(f"--labels needs {m} names")

    bands = [PercentileBand.parse(b) for b in args.band] if args.band else [None]
    if args.band and mags is None:
        raise CliError("--band needs CSV event files with magnitudes")
    band_dim = m - 1 if args.band_dim is None else args.band_dim - 1
    if not 0 <= band_dim < m:
        raise CliError(f"--band-dim must be in 1..{m}")

    rows, records, failed = [], [], 0
    for band in bands:
        arr = list(times)
        label = "all" if band is None else band.label
        if band is not None:
            pop = mags[band_dim][mags[band_dim] > 0]
            arr[band_dim] = times[band_dim][band_mask(mags[band_dim], band, pop)]
        seq = EventSequence(tuple(arr), horizon)
        try:
            res = fit(seq, config)
        except EmptyDimensionError as e:
            print(f"band {label}: skipped: {e}", file=sys.stderr)
            records.append({"band": label, "counts": seq.counts, "skipped": str(e)})
            rows.append((label, None))
            failed += 1
            continue
        records.append({"band": label, "counts": seq.counts, "result": res.to_dict()})
        rows.append((label, res))

    write_json(out_dir / "fit.json", {"horizon": horizon, "labels": labels, "bands": records})
    table = render_table(rows, labels)
    write_atomic(out_dir / "table.txt", table)
    write_manifest(out_dir, RunManifest(
        command="fit", argv=args.argv, inputs=list(args.events),
        bands=[] if args.band is None else list(args.band),
        optimizer=config.to_dict(), seed=config.seed, out_dir=str(args.out_dir)))
    sys.stdout.write(table)
    return 1 if failed else 0


def cmd_simulate(args) -> int:
    out_dir = Path(args.out_dir)
    model = _load_model(args.model)
    seed = resolve_seed(args)
    try:
        seq = simulate(SimulationConfig(model, args.horizon, seed))
    except ExplosiveModelError as e:
        raise CliError(str(e)) from None
    except ValueError as e:
        raise CliError(str(e)) from None
    write_json(out_dir / "events.json", seq.to_dict())
    if args.csv:
        lines = ["dimension,time_hours"]
        rows = sorted((t, k + 1) for k, a in enumerate(seq.arrivals) for t in a.tolist())
        lines += [f"{k},{t!r}" for t, k in rows]
        write_atomic(out_dir / "events.csv", "\n".join(lines) + "\n")
    write_manifest(out_dir, RunManifest(command="simulate", argv=args.argv, inputs=[args.model],
                                        seed=seed, out_dir=str(args.out_dir)))
    print(f"simulated {seq.counts} events on [0, {seq.horizon}] h -> {out_dir / 'events.json'}")
    return 0


def intensity_grid(model: HawkesModel, events: EventSequence, step: float):
    if not step > 0:
        raise ValueError(f"grid step must be > 0, got {step}")
    n = int(np.floor(events.horizon / step + 1e-9))
    grid = [min(k * step, events.horizon) for k in range(n + 1)]
    return grid, [[intensity(model, events, j, t) for j in range(model.dim)] for t in grid]


def cmd_intensity(args) -> int:
    out_dir = Path(args.out_dir)
    model = _load_model(args.model)
    seq = _load_sequence(args)
    try:
        grid, values = intensity_grid(model, seq, args.step)
    except ValueError as e:
        raise CliError(str(e)) from None
    header = ["t_hours"] + [f"lambda_{j + 1}_per_hour" for j in range(model.dim)]
    lines = [",".join(header)]
    lines += [",".join([repr(float(t))] + [repr(v) for v in row]) for t, row in zip(grid, values)]
    write_atomic(out_dir / "intensity.csv", "\n".join(lines) + "\n")
    write_manifest(out_dir, RunManifest(command="intensity", argv=args.argv,
                                        inputs=[args.model] + list(args.events),
                                        out_dir=str(args.out_dir)))
    print(f"{len(grid)} grid points -> {out_dir / 'intensity.csv'}")
    return 0


def cmd_ll(args) -> int:
    model = _load_model(args.model)
    seq = _load_sequence(args)
    print(repr(log_likelihood(model, seq)))
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hawkesdepeg", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--out-dir", default=".", help="output directory (default: .)")
        if seed:
            sp.add_argument("--seed", type=int, default=None,
                            help=f"random seed (fallback: ${SEED_ENV}, then 0)")

    e = sub.add_parser("extract", help="OHLC CSV -> jump event files")
    e.add_argument("--input", action="append", required=True,
                   help="timestamp,open,high,low,close CSV; repeat per series")
    e.add_argument("--band", action="append",
                   help="percentile band lo:hi (default 0.9:1.0); one, or one per input")
    e.add_argument("--denominator", choices=DENOMINATORS, default="open",
                   help="price the high-low range is divided by (default: open)")
    e.add_argument("--threshold-source", action="append",
                   help="single-column magnitude CSV for the quantiles, or 'self'")
    common(e)
    e.set_defaults(func=cmd_extract)

    f = sub.add_parser("fit", help="maximum-likelihood fit, one per band")
    f.add_argument("--events", action="append", required=True,
                   help="events CSV (time_hours,magnitude_pct) per dimension, or one events JSON")
    f.add_argument("--band", action="append", help="percentile band lo:hi applied to --band-dim")
    f.add_argument("--band-dim", type=int, default=None,
                   help="1-based dimension the bands filter (default: last)")
    f.add_argument("--horizon", type=float, default=None, help="T in hours (default: last arrival)")
    f.add_argument("--bounds", help="parameter box lo:hi (default 1e-12:10)")
    f.add_argument("--max-iters", type=int, default=None)
    f.add_argument("--restarts", type=int, default=None)
    f.add_argument("--config", help="optimizer settings, JSON or TOML")
    f.add_argument("--labels", help="comma-separated dimension labels (default s,c for two)")
    common(f, seed=True)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="simulate events from a model JSON")
    s.add_argument("--model", required=True)
    s.add_argument("--horizon", type=float, required=True, help="T in hours")
    s.add_argument("--csv", action="store_true", help="also write events.csv (dimension,time_hours)")
    common(s, seed=True)
    s.set_defaults(func=cmd_simulate)

    i = sub.add_parser("intensity", help="conditional intensities on a uniform grid")
    i.add_argument("--model", required=True)
    i.add_argument("--events", action="append", required=True)
    i.add_argument("--horizon", type=float, default=None)
    i.add_argument("--step", type=float, required=True, help="grid step in hours")
    common(i)
    i.set_defaults(func=cmd_intensity)

    ll = sub.add_parser("ll", help="print the log-likelihood of events under a model")
    ll.add_argument("--model", required=True)
    ll.add_argument("--events", action="append", required=True)
    ll.add_argument("--horizon", type=float, default=None)
    ll.set_defaults(func=cmd_ll)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (IngestError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
