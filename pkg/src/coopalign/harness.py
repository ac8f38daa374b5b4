"""Experiment orchestration: config loading, seeded trial execution,
CSV/manifest/trace persistence, and reproducibility plumbing.

Config files are JSON.  Every run writes results.csv plus manifest.json;
protocol schemes also write trace.jsonl with one record per backhaul
message.  A manifest is first written with status "incomplete" and only
rewritten "complete" (with output digests) after all files are flushed, so
a crashed run can never masquerade as a finished one.

Per-trial randomness comes from SeedSequence(root_seed, spawn_key=(trial,)),
so any trial is reproducible in isolation and results are independent of
worker scheduling.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .detection import ReducedSpec
from .errors import ConfigError, CoopAlignError
from .lattice import (ChannelMatrix, SubstreamTable, derive_params,
                      require_generic)
from .rx_protocol import run_rx_protocol
from .tradeoff import (_budget_report, centralized_report, illustrating_example,
                       rx_sum_upper_bound, tdma_report, tx_sum_upper_bound)
from .tx_protocol import InverseChannel, run_tx_backhaul, verify_diagonalization

SCHEMES = ("rx-coop", "tx-coop", "centralized", "tdma",
           "illustrating-example", "bounds-only")

CSV_COLUMNS = ("trial", "P", "scheme", "alpha", "dof", "load_bits",
               "rate_bits", "detail")


def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.15g" % x
    return str(x)


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    N: int
    eps: float = 0.05
    c1: float = 1.0
    c2: float = 1.0
    P_grid: tuple = (1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8)
    trials: int = 100
    rng_seed: int = 0
    channel_mode: str = "random-generic"
    fixed_channel: tuple = None       # nested (re, im) pairs when fixed
    gamma: complex = 1.5 + 0.5j       # used by the illustrating mode
    q: int = 5                        # protocol symbol half-width
    alpha_grid: tuple = (0.0, 0.5, 1.0)
    reduced_spec: dict = None
    output_dir: str = "out"

    def validate(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (isinstance(self.N, int) and self.N >= 1):
            raise ConfigError(f"N must be a positive integer, got {self.N!r}")
        if not 0 < self.eps < 1:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ConfigError("c1 and c2 must be positive")
        P = np.asarray(self.P_grid, dtype=float)
        if P.size < 4:
            raise ConfigError(f"P_grid needs at least 4 points, got {P.size}")
        if not np.all(np.diff(P) > 0):
            raise ConfigError("P_grid must be strictly increasing")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if not (isinstance(self.rng_seed, int) and 0 <= self.rng_seed < 2 ** 64):
            raise ConfigError(f"rng_seed must be a 64-bit value, got {self.rng_seed!r}")
        if self.channel_mode not in ("random-generic", "fixed", "illustrating"):
            raise ConfigError(f"unknown channel_mode {self.channel_mode!r}")
        if self.channel_mode == "fixed" and self.fixed_channel is None:
            raise ConfigError("channel_mode 'fixed' requires channel values")
        if self.q < 1:
            raise ConfigError(f"q must be >= 1, got {self.q}")
        if self.reduced_spec is not None:
            self.build_reduced_spec()
        return self

    def build_reduced_spec(self) -> ReducedSpec:
        d = dict(self.reduced_spec)
        try:
            d["active_coords"] = tuple(tuple(c) for c in d["active_coords"])
            return ReducedSpec(**d)
        except (KeyError, TypeError, CoopAlignError) as exc:
            raise ConfigError(f"invalid reduced_spec: {exc}") from exc

    def as_json_dict(self) -> dict:
        d = asdict(self)
        d["P_grid"] = list(self.P_grid)
        d["alpha_grid"] = list(self.alpha_grid)
        d["gamma"] = [self.gamma.real, self.gamma.imag]
        if self.fixed_channel is not None:
            d["fixed_channel"] = _listify(self.fixed_channel)
        return d


def _listify(x):
    if isinstance(x, tuple):
        return [_listify(v) for v in x]
    return x


def _tuplify(x):
    if isinstance(x, list):
        return tuple(_tuplify(v) for v in x)
    return x


def config_from_dict(raw: dict) -> ExperimentConfig:
    if "scheme" not in raw:
        raise ConfigError("missing required field: scheme")
    if "N" not in raw:
        raise ConfigError("missing required field: N")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    kw = dict(raw)
    if "P_grid" in kw:
        kw["P_grid"] = tuple(float(p) for p in kw["P_grid"])
    if "alpha_grid" in kw:
        kw["alpha_grid"] = tuple(float(a) for a in kw["alpha_grid"])
    if "gamma" in kw:
        g = kw["gamma"]
        kw["gamma"] = complex(g[0], g[1]) if isinstance(g, (list, tuple)) else complex(g)
    if "fixed_channel" in kw and kw["fixed_channel"] is not None:
        kw["fixed_channel"] = _tuplify(kw["fixed_channel"])
    return ExperimentConfig(**kw).validate()


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON experiment config."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(raw)


def save_config(config: ExperimentConfig, path):
    Path(path).write_text(json.dumps(config.as_json_dict(), indent=2) + "\n")


# ============================================================
# channels and per-trial execution
# ============================================================


def _channel_for(config: ExperimentConfig, rng) -> ChannelMatrix:
    if config.channel_mode == "fixed":
        h = np.array([[complex(re, im) for (re, im) in row]
                      for row in config.fixed_channel])
        return ChannelMatrix(h=h, tag="fixed")
    if config.channel_mode == "illustrating" \
            or config.scheme == "illustrating-example":
        return ChannelMatrix.illustrating(config.gamma, rng)
    ch = ChannelMatrix.random(rng)
    require_generic(ch, config.N)
    return ch


def _channel_listing(ch: ChannelMatrix):
    return [[[float(v.real), float(v.imag)] for v in row] for row in ch.h]


def _protocol_rows(config, trial, ledger, detail, label, load_spans_cube):
    report = _budget_report(ledger.total_symbols / 3.0, config.N, config.eps,
                            np.asarray(config.P_grid), label,
                            dense_limit=True, load_spans_cube=load_spans_cube)
    rows = []
    for i, P in enumerate(report.P_grid):
        l2 = np.log2(P)
        rows.append({"trial": trial, "P": float(P), "scheme": config.scheme,
                     "alpha": float(report.rb_bar[i] / l2),
                     "dof": float(report.rates[i].mean() / l2),
                     "load_bits": float(report.rb_bar[i]),
                     "rate_bits": float(report.rates[i].mean()),
                     "detail": detail})
    return rows


def _report_rows(config, trial, report):
    rows = []
    for i, P in enumerate(report.P_grid):
        l2 = np.log2(P)
        rows.append({"trial": trial, "P": float(P), "scheme": config.scheme,
                     "alpha": float(report.rb_bar[i] / l2),
                     "dof": float(report.rates[i].mean() / l2),
                     "load_bits": float(report.rb_bar[i]),
                     "rate_bits": float(report.rates[i].mean()),
                     "detail": ""})
    return rows


def run_trial(config: ExperimentConfig, trial: int):
    """Execute one trial; returns (rows, channel_listing, trace_records)."""
    ss = np.random.SeedSequence(entropy=config.rng_seed, spawn_key=(trial,))
    rng = np.random.default_rng(ss)
    scheme = config.scheme

    if scheme == "bounds-only":
        ch = _channel_for(config, rng)
        rows = []
        for a in config.alpha_grid:
            for P in config.P_grid:
                l2 = np.log2(P)
                for name, fn in (("rx-bound", rx_sum_upper_bound),
                                 ("tx-bound", tx_sum_upper_bound)):
                    bound = fn(ch.h, P, a * l2)
                    rows.append({"trial": trial, "P": float(P),
                                 "scheme": scheme, "alpha": float(a),
                                 "dof": float(bound / (6.0 * l2)),
                                 "load_bits": float(a * l2),
                                 "rate_bits": float(bound), "detail": name})
        return rows, _channel_listing(ch), []

    ch = _channel_for(config, rng)
    if scheme == "rx-coop":
        streams = tuple(SubstreamTable.random(i + 1, config.N, config.q, rng)
                        for i in range(3))
        res = run_rx_protocol(streams, ch)
        exact = all(np.array_equal(res.recovered[i], streams[i].values)
                    for i in range(3))
        rows = _protocol_rows(config, trial, res.ledger,
                              "exact" if exact else "contaminated",
                              "rx-coop", load_spans_cube=False)
        trace = [dict(r, trial=trial) for r in res.ledger.trace_records()]
        return rows, _channel_listing(ch), trace

    if scheme == "tx-coop":
        streams = tuple(SubstreamTable.random(i + 1, config.N, config.q, rng)
                        for i in range(3))
        res = run_tx_backhaul(streams)
        params = derive_params(config.P_grid[-1], config.N, config.eps,
                               config.c1, config.c2)
        chk = verify_diagonalization(streams, ch, params, built=res.built,
                                     inv=InverseChannel.of(ch))
        rows = _protocol_rows(config, trial, res.ledger,
                              "%.3e" % chk.residual, "tx-coop",
                              load_spans_cube=True)
        trace = [dict(r, trial=trial) for r in res.ledger.trace_records()]
        trace.append({"stage": "airtime", "source": 0, "destination": 0,
                      "round": res.rounds + 1, "length": 3,
                      "alphabet_halfwidth": 0, "trial": trial,
                      "payload_digest": hashlib.sha256(
                          np.asarray(chk.x).tobytes()).hexdigest()[:16]})
        return rows, _channel_listing(ch), trace

    if scheme == "centralized":
        report = centralized_report(ch.h, np.asarray(config.P_grid))
    elif scheme == "tdma":
        report = tdma_report(ch.h, np.asarray(config.P_grid))
    elif scheme == "illustrating-example":
        report = illustrating_example(config.gamma, base_H=ch,
                                      P_grid=np.asarray(config.P_grid))
    else:
        raise ConfigError(f"unhandled scheme {scheme!r}")
    return _report_rows(config, trial, report), _channel_listing(ch), []


# ============================================================
# persistence
# ============================================================


@dataclass
class RunManifest:
    config: dict
    version: str = __version__
    status: str = "incomplete"
    channels: list = field(default_factory=list)
    wall_time_s: float = 0.0
    outputs: dict = field(default_factory=dict)
    error: str = None

    def write(self, path):
        d = asdict(self)
        if d["error"] is None:
            d.pop("error")
        Path(path).write_text(json.dumps(d, indent=2) + "\n")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_results_csv(rows, path):
    rows = sorted(rows, key=lambda r: (r["trial"], r["P"], r["detail"]))
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        lines.append(",".join(_fmt(r[c]) for c in CSV_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def emit_tradeoff_csv(points, path):
    """Write alpha,dof,label rows for a list of operating points."""
    if not points:
        raise ConfigError("emit_tradeoff_csv needs a nonempty point list")
    lines = ["alpha,dof,label"]
    for p in points:
        lines.append(f"{_fmt(float(p.alpha))},{_fmt(float(p.dof))},{p.label}")
    Path(path).write_text("\n".join(lines) + "\n")


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> RunManifest:
    """Run all trials of the configured scheme and persist results.

    Writes results.csv, manifest.json and (for protocol schemes) trace.jsonl
    under config.output_dir.
    """
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=config.as_json_dict())
    manifest.write(out / "manifest.json")
    t0 = time.monotonic()

    trials = range(config.trials) if config.scheme != "bounds-only" else range(1)
    rows, channels, trace = [], [], []
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futs = [pool.submit(run_trial, config, t) for t in trials]
                results = [f.result() for f in futs]
        else:
            results = [run_trial(config, t) for t in trials]
        for r, chl, tr in results:
            rows.extend(r)
            channels.append(chl)
            trace.extend(tr)
    except Exception as exc:
        # flush whatever completed, leave the manifest incomplete
        write_results_csv(rows, out / "results.csv")
        manifest.error = f"{type(exc).__name__}: {exc}"
        manifest.wall_time_s = time.monotonic() - t0
        manifest.channels = channels
        manifest.write(out / "manifest.json")
        raise

    write_results_csv(rows, out / "results.csv")
    outputs = {"results.csv": _sha256(out / "results.csv")}
    if trace:
        with open(out / "trace.jsonl", "w") as fh:
            for rec in trace:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        outputs["trace.jsonl"] = _sha256(out / "trace.jsonl")
    manifest.status = "complete"
    manifest.channels = channels
    manifest.wall_time_s = time.monotonic() - t0
    manifest.outputs = outputs
    manifest.write(out / "manifest.json")
    return manifest
