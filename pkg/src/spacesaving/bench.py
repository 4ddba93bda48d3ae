"""Benchmark runner: sweep an experiment grid, time the engine, score accuracy.

Grid files are INI-style. Each section is one stanza; list-valued keys are
comma separated and the stanza expands to their Cartesian product::

    [vary-workers]
    n = 1e7
    k = 2000
    rho = 1.1
    workers = 1, 2, 4, 8
    mode = flat, hybrid
    threads_per_process = 8     ; hybrid only
    universe = 1e6
    seed = 0

In hybrid mode a cell with ``w`` workers uses ``T = min(threads_per_process,
w)`` threads per simulated process and ``P = w / T`` processes; cells where
``T`` does not divide ``w`` are skipped with a logged reason.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import itertools
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import datagen
from .engine import RunConfig, RunResult, run, serialize_candidates
from .errors import ConfigurationError, SpaceSavingError, UndefinedMetricError
from .evaluation import AccuracyReport, ExactCounts, evaluate, exact_count
from .summary import Counter

log = logging.getLogger(__name__)

RESULTS_HEADER = (
    "n", "k", "rho", "workers", "mode", "seed",
    "wall_s", "compute_s", "overhead_s", "speedup", "frac_overhead",
    "are_reported", "are_frequent", "precision", "recall",
)
TIMING_COLUMNS = ("wall_s", "compute_s", "overhead_s", "speedup", "frac_overhead")
MODES = ("flat", "hybrid")

# stream + sort buffer + unique output, with headroom
_BYTES_PER_ITEM = 8 * 4


def fractional_overhead(wall: float, compute_max: float) -> float:
    """``(wall - compute_max) / compute_max``, clamped at 0 for timer jitter.

    Raises:
        UndefinedMetricError: if ``compute_max`` is not positive.
    """
    if not compute_max > 0:
        raise UndefinedMetricError(f"fractional overhead undefined for compute time {compute_max}")
    return max(wall - compute_max, 0.0) / compute_max


@dataclass(frozen=True)
class Stanza:
    name: str
    n: tuple[int, ...]
    k: tuple[int, ...]
    rho: tuple[float, ...]
    workers: tuple[int, ...]
    mode: tuple[str, ...] = ("flat",)
    seed: tuple[int, ...] = (0,)
    universe: int = datagen.DEFAULT_UNIVERSE
    threads_per_process: int = 8


@dataclass
class ExperimentResult:
    n: int
    k: int
    rho: float
    workers: int
    mode: str
    seed: int
    universe: int
    wall_s: float
    compute_s: float
    overhead_s: float
    speedup: float
    frac_overhead: float
    accuracy: AccuracyReport
    candidates: list[Counter] = field(repr=False)

    def sort_key(self) -> tuple:
        return (self.n, self.k, self.rho, self.workers, self.mode, self.seed)

    def row(self) -> dict[str, str]:
        return {
            "n": str(self.n),
            "k": str(self.k),
            "rho": repr(self.rho),
            "workers": str(self.workers),
            "mode": self.mode,
            "seed": str(self.seed),
            "wall_s": f"{self.wall_s:.6f}",
            "compute_s": f"{self.compute_s:.6f}",
            "overhead_s": f"{self.overhead_s:.6f}",
            "speedup": f"{self.speedup:.4f}",
            "frac_overhead": f"{self.frac_overhead:.6f}",
            "are_reported": repr(self.accuracy.are),
            "are_frequent": repr(self.accuracy.are_frequent),
            "precision": repr(self.accuracy.precision),
            "recall": repr(self.accuracy.recall),
        }


def _parse_int(token: str) -> int:
    token = token.strip().replace("_", "")
    try:
        return int(token)
    except ValueError:
        value = float(token)
        if not value.is_integer():
            raise ConfigurationError(f"expected an integer, got {token!r}") from None
        return int(value)


def _split(value: str) -> list[str]:
    return [t.strip() for t in value.split(",") if t.strip()]


def parse_grid(text: str) -> list[Stanza]:
    """Parse grid-file text into stanzas.

    Raises:
        ConfigurationError: on unknown keys, missing required keys or bad values.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"bad grid file: {exc}") from exc
    known = {"n", "k", "rho", "workers", "mode", "seed", "universe", "threads_per_process"}
    stanzas = []
    for name in cp.sections():
        sec = cp[name]
        unknown = set(sec) - known
        if unknown:
            raise ConfigurationError(f"[{name}]: unknown keys {sorted(unknown)}")
        missing = {"n", "k", "rho", "workers"} - set(sec)
        if missing:
            raise ConfigurationError(f"[{name}]: missing keys {sorted(missing)}")
        modes = tuple(_split(sec.get("mode", "flat")))
        bad = set(modes) - set(MODES)
        if bad:
            raise ConfigurationError(f"[{name}]: unknown modes {sorted(bad)}")
        try:
            stanzas.append(
                Stanza(
                    name=name,
                    n=tuple(_parse_int(t) for t in _split(sec["n"])),
                    k=tuple(_parse_int(t) for t in _split(sec["k"])),
                    rho=tuple(float(t) for t in _split(sec["rho"])),
                    workers=tuple(_parse_int(t) for t in _split(sec["workers"])),
                    mode=modes,
                    seed=tuple(_parse_int(t) for t in _split(sec.get("seed", "0"))),
                    universe=_parse_int(sec.get("universe", str(datagen.DEFAULT_UNIVERSE))),
                    threads_per_process=_parse_int(sec.get("threads_per_process", "8")),
                )
            )
        except ValueError as exc:
            raise ConfigurationError(f"[{name}]: {exc}") from exc
    if not stanzas:
        raise ConfigurationError("grid file has no stanzas")
    return stanzas


def load_grid(path: str | os.PathLike) -> list[Stanza]:
    return parse_grid(Path(path).read_text())


def hybrid_layout(workers: int, threads_per_process: int) -> tuple[int, int] | None:
    threads = min(threads_per_process, workers)
    if threads < 1 or workers % threads:
        return None
    return workers // threads, threads


def physical_cores() -> int:
    """Physical cores this process may run on (logical count if unknown)."""
    try:
        usable = len(os.sched_getaffinity(0))
    except AttributeError:
        usable = os.cpu_count() or 1
    try:
        import psutil
    except ImportError:
        return usable
    return max(1, min(usable, psutil.cpu_count(logical=False) or usable))


def _available_memory() -> int | None:
    try:
        return os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return None


def time_cell(data: np.ndarray, cfg: RunConfig, reps: int) -> tuple[RunResult, list[RunResult]]:
    """Run a cell ``reps`` times; return the median-wall run and all runs."""
    runs = [run(data, cfg) for _ in range(reps)]
    order = sorted(range(reps), key=lambda i: runs[i].timing.wall)
    median = runs[order[(reps - 1) // 2]]
    first = serialize_candidates(runs[0].candidates)
    if any(serialize_candidates(r.candidates) != first for r in runs[1:]):
        log.error("non-deterministic output for %s", cfg)
    return median, runs


def run_experiment_grid(
    stanzas: Sequence[Stanza],
    reps: int = 3,
    seed: int | None = None,
) -> list[ExperimentResult]:
    """Execute every cell of every stanza, one cell at a time.

    Streams are generated once per ``(n, rho, universe, seed)`` and outside
    any timed region. Speedup is relative to the flat single-worker run of
    the same ``(n, k, rho, seed)``. ``seed`` overrides the stanzas' seeds.
    """
    if reps < 1:
        raise ConfigurationError(f"reps must be >= 1, got {reps}")
    if reps < 3:
        log.warning("reps=%d: timing medians are unreliable below 3 repetitions", reps)
    results: list[ExperimentResult] = []
    for st in stanzas:
        seeds = (seed,) if seed is not None else st.seed
        for n, rho, s in itertools.product(st.n, st.rho, seeds):
            avail = _available_memory()
            if avail is not None and n * _BYTES_PER_ITEM > avail:
                log.warning(
                    "[%s] skipping n=%d rho=%s seed=%d: needs ~%d MiB, %d MiB available",
                    st.name, n, rho, s, n * _BYTES_PER_ITEM >> 20, avail >> 20,
                )
                continue
            spec = datagen.ZipfSpec(universe=st.universe, skew=rho, length=n, seed=s)
            log.info("[%s] generating %s", st.name, spec)
            data = datagen.generate_zipf(spec)
            truth = exact_count(data)
            for k in st.k:
                results.extend(_run_k(st, data, truth, spec, k, reps))
            del data, truth
    return results


def _run_k(
    st: Stanza, data: np.ndarray, truth: ExactCounts, spec: datagen.ZipfSpec, k: int, reps: int
) -> list[ExperimentResult]:
    out = []
    baseline, _ = time_cell(data, RunConfig(k=k, workers=1), reps)
    t1 = baseline.timing.wall
    for workers, mode in itertools.product(st.workers, st.mode):
        if mode == "hybrid":
            layout = hybrid_layout(workers, st.threads_per_process)
            if layout is None:
                log.warning(
                    "[%s] skipping hybrid cell workers=%d: threads_per_process=%d does not divide it",
                    st.name, workers, st.threads_per_process,
                )
                continue
            cfg = RunConfig(k=k, workers=workers, hybrid=layout)
        else:
            cfg = RunConfig(k=k, workers=workers)
        if cfg == baseline.config:
            res = baseline
        else:
            res, _ = time_cell(data, cfg, reps)
        tm = res.timing
        acc = evaluate(res.candidates, truth, k)
        if acc.recall < 1.0:
            log.error("[%s] recall %.6f < 1 for %s", st.name, acc.recall, cfg)
        out.append(
            ExperimentResult(
                n=spec.length, k=k, rho=spec.skew, workers=workers, mode=cfg.mode, seed=spec.seed,
                universe=spec.universe,
                wall_s=tm.wall, compute_s=tm.compute_max, overhead_s=tm.overhead,
                speedup=t1 / tm.wall,
                frac_overhead=fractional_overhead(tm.wall, tm.compute_max) if tm.compute_max > 0 else 0.0,
                accuracy=acc, candidates=res.candidates,
            )
        )
        log.info("%s k=%d rho=%s: wall=%.3fs speedup=%.2f recall=%s", cfg.mode, k, spec.skew,
                 tm.wall, t1 / tm.wall, acc.recall)
    return out


def _series_key(r: ExperimentResult) -> tuple:
    return (r.n, r.k, r.rho, r.mode.split(":")[0], r.seed)


def _write_plot_file(path: Path, results: list[ExperimentResult], columns: Sequence[str]) -> None:
    rows = sorted(results, key=lambda r: (_series_key(r), r.workers))
    with path.open("w") as fh:
        fh.write("# workers " + " ".join(columns) + "\n")
        first = True
        for key, group in itertools.groupby(rows, key=_series_key):
            if not first:
                fh.write("\n\n")
            first = False
            n, k, rho, mode, seed = key
            fh.write(f"# series n={n} k={k} rho={rho} mode={mode} seed={seed}\n")
            for r in group:
                row = r.row()
                fh.write(" ".join([str(r.workers)] + [row[c] for c in columns]) + "\n")


def emit_report(results: Sequence[ExperimentResult], out_dir: str | os.PathLike) -> Path:
    """Write ``results.csv``, per-figure plot data and per-cell candidate lists.

    Raises:
        ValueError: if ``results`` is empty.
        OSError: if ``out_dir`` cannot be written.
    """
    if not results:
        raise ValueError("no results to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ordered = sorted(results, key=ExperimentResult.sort_key)
    path = out / "results.csv"
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULTS_HEADER, lineterminator="\n")
        w.writeheader()
        for r in ordered:
            w.writerow(r.row())
    _write_plot_file(out / "runtime_vs_workers.dat", ordered, ("wall_s", "speedup"))
    _write_plot_file(out / "are_vs_workers.dat", ordered, ("are_reported", "are_frequent"))
    _write_plot_file(out / "overhead_vs_workers.dat", ordered, ("frac_overhead", "overhead_s"))
    cand_dir = out / "candidates"
    cand_dir.mkdir(exist_ok=True)
    for r in ordered:
        name = f"n{r.n}_k{r.k}_rho{r.rho}_w{r.workers}_{r.mode.replace(':', '-')}_s{r.seed}.csv"
        (cand_dir / name).write_bytes(serialize_candidates(r.candidates))
    return path


def read_results(path: str | os.PathLike) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _parse_zipf(value: str) -> tuple[int, float, int]:
    parts = value.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected U,rho,n")
    try:
        return _parse_int(parts[0]), float(parts[1]), _parse_int(parts[2])
    except (ValueError, ConfigurationError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _parse_layout(value: str) -> tuple[int, int]:
    try:
        p, t = value.lower().split("x")
        return int(p), int(t)
    except ValueError:
        raise argparse.ArgumentTypeError("expected PxT, e.g. 2x8") from None


def _cmd_run(args: argparse.Namespace) -> int:
    stanzas = load_grid(args.grid)
    results = run_experiment_grid(stanzas, reps=args.reps, seed=args.seed)
    if not results:
        log.error("every cell was skipped; nothing to report")
        return 1
    path = emit_report(results, args.out)
    print(f"wrote {len(results)} rows to {path}")
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    universe, rho, n = args.zipf
    spec = datagen.ZipfSpec(universe=universe, skew=rho, length=n, seed=args.seed)
    if args.format == "binary":
        datagen.generate_to_file(spec, args.out)
    else:
        datagen.write_text(args.out, datagen.generate_zipf(spec))
        datagen.write_metadata(args.out, spec)
    print(f"wrote {n} items to {args.out}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    data = datagen.read_stream(args.stream, format=args.format)
    workers = args.workers
    if args.hybrid is not None and args.hybrid[0] * args.hybrid[1] != workers:
        raise ConfigurationError(f"--hybrid {args.hybrid[0]}x{args.hybrid[1]} does not match --workers {workers}")
    cfg = RunConfig(k=args.k, workers=workers, hybrid=args.hybrid)
    res = run(data, cfg)
    report = evaluate(res.candidates, exact_count(data), args.k)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            report.dump_csv(fh)
    else:
        sys.stdout.write(report.dumps_csv())
    print(
        f"n={data.size} k={args.k} mode={cfg.mode} workers={workers} reported={len(res.candidates)} "
        f"precision={report.precision!r} recall={report.recall!r} are={report.are!r} "
        f"are_frequent={report.are_frequent!r} wall_s={res.timing.wall:.6f}"
    )
    if report.flags:
        print("flags: " + ",".join(report.flags))
    return 0 if report.recall == 1.0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="Parallel Space Saving benchmarks")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment grid")
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override every stanza's seeds")
    p.add_argument("--reps", type=int, default=3)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("gen", help="generate a Zipf stream file")
    p.add_argument("--zipf", required=True, type=_parse_zipf, metavar="U,rho,n")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("binary", "text"), default="binary")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("verify", help="run the engine on a stream and score it against exact counts")
    p.add_argument("--stream", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--hybrid", type=_parse_layout, default=None, metavar="PxT")
    p.add_argument("--format", choices=("binary", "text"), default="binary")
    p.add_argument("--csv", default=None, help="write the per-item report here instead of stdout")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv: Iterable[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(None if argv is None else list(argv))
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (SpaceSavingError, OSError) as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
