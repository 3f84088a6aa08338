"""Command-line sweep runner that writes figure data as CSV or JSON.

Configuration is a flat ``key = value`` text file; command-line flags override
it.  The resolved configuration is echoed at the top of the output as
``# key=value`` lines, which parse back to the same :class:`SweepConfig`.

Exit codes: 0 success, 1 invalid configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import statistics
import sys
import warnings
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .core_model import ChannelConfig, ConfigError, make_rng
from .ergodic import onoff_optimize, rate_function, wideband_approx
from .leakage import (
    bsc_cascade,
    check_leakage_bound,
    conditional_capacity_discrete,
    entropy,
    evaluate,
    fano_bound,
    random_binning,
    ToySource,
)
from .mutual_info import (
    PowerProfile,
    is_eve_degraded,
    load_sounding,
    i_ab,
    i_ae,
    pn_sounding,
    vector_mi_closed_form,
    vector_mi_logdet_oracle,
)
from .outage import (
    OutageReport,
    backoff_threshold,
    exponent_curve,
    integer_dof,
    mi_ratio,
    outage_mc,
    outage_report,
)

COMMANDS = (
    "ergodic-snr",
    "ergodic-bandwidth",
    "outage-exponent",
    "outage-mc",
    "leakage",
    "mi-oracle",
    "degraded-check",
)
STOCHASTIC = {"ergodic-snr", "ergodic-bandwidth", "outage-mc", "leakage", "mi-oracle"}

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

_CHANNEL_FIELDS = tuple(f.name for f in fields(ChannelConfig))


@dataclass
class SweepConfig:
    """Everything one CLI run needs.

    ``grid_*`` describe the swept axis: SNR for ``ergodic-snr``, bandwidth for
    ``ergodic-bandwidth``/``outage-exponent``, backoff ``alpha`` for
    ``outage-mc``, block length for ``leakage``, sounding length for
    ``mi-oracle`` and sounding power for ``degraded-check``.
    """

    command: str
    channel: ChannelConfig
    grid_min: float
    grid_max: float
    grid_points: int = 10
    grid_log: bool = False
    deltas: tuple[float, ...] = ()
    snr: float | None = None
    alpha: float = 0.9
    lam: str = "1"
    samples: int = 100_000
    seed: int | None = None
    method: str = "auto"
    onoff: bool = False
    conditioned: bool = False
    oracle_bins: int = 4
    sounding_file: str | None = None
    source_csv: str | None = None
    bsc_p_xy: float = 0.1
    bsc_p_yz: float = 0.2
    key_rate: float | None = None
    public_rate: float | None = None
    out: str | None = None
    format: str = "csv"

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if not self.grid_min < self.grid_max:
            raise ConfigError("grid_min must be smaller than grid_max")
        if self.grid_points < 2:
            raise ConfigError("grid_points must be at least 2")
        if self.grid_log and self.grid_min <= 0:
            raise ConfigError("a logarithmic grid needs grid_min > 0")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.command in STOCHASTIC and self.seed is None:
            raise ConfigError(f"command {self.command} is stochastic and needs a seed")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if self.lam != "opt":
            try:
                lam = float(self.lam)
            except ValueError as exc:
                raise ConfigError("lambda must be a number in (0, 1] or 'opt'") from exc
            if not 0 < lam <= 1:
                raise ConfigError("lambda must lie in (0, 1]")
        if self.command == "ergodic-bandwidth" and self.snr is None:
            raise ConfigError("ergodic-bandwidth needs a fixed snr")
        if self.method not in ("auto", "exact", "mc"):
            raise ConfigError("method must be auto, exact or mc")

    def grid(self) -> np.ndarray:
        if self.grid_log:
            return np.geomspace(self.grid_min, self.grid_max, self.grid_points)
        return np.linspace(self.grid_min, self.grid_max, self.grid_points)

    def delta_values(self) -> tuple[float, ...]:
        return self.deltas or (self.channel.delta,)

    def to_pairs(self) -> list[tuple[str, str]]:
        """Canonical ``(key, value)`` pairs; ``None`` values are omitted."""
        pairs = [(name, _fmt(getattr(self.channel, name))) for name in _CHANNEL_FIELDS]
        for f in fields(self):
            if f.name == "channel":
                continue
            value = getattr(self, f.name)
            # the output path is not part of the experiment
            if value is None or f.name == "out" or (f.name == "deltas" and not value):
                continue
            key = "lambda" if f.name == "lam" else f.name
            pairs.append((key, _fmt(value)))
        return pairs

    def to_dict(self) -> dict:
        return dict(self.to_pairs())

    @classmethod
    def from_pairs(cls, pairs: dict[str, str]) -> "SweepConfig":
        data = dict(pairs)
        try:
            channel = ChannelConfig.from_dict(
                {k: data.pop(k) for k in _CHANNEL_FIELDS if k in data}
            )
        except TypeError as exc:
            raise ConfigError(f"incomplete channel configuration: {exc}") from exc
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in data.items():
            if key not in types or key == "channel":
                raise ConfigError(f"unknown configuration key {key!r}")
            kwargs[key] = _parse_value(key, raw, types[key])
        try:
            return cls(channel=channel, **kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def _parse_value(key: str, raw: str, type_hint: str):
    raw = raw.strip()
    try:
        if key == "deltas":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if "bool" in type_hint:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if type_hint.startswith("int"):
            return int(raw)
        if type_hint.startswith("float"):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key}={raw!r}") from exc


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def config_from_output(text: str) -> SweepConfig:
    """Recover the :class:`SweepConfig` echoed in a CSV output's comment header."""
    pairs = {}
    for line in text.splitlines():
        if not line.startswith("# "):
            break
        body = line[2:]
        if "=" in body:
            k, v = body.split("=", 1)
            pairs[k] = v
    return SweepConfig.from_pairs(pairs)


# ---------------------------------------------------------------- commands


def _rows_ergodic(cfg: SweepConfig, axis: str) -> tuple[list[str], list[list]]:
    deltas = cfg.delta_values()
    columns = ["snr" if axis == "snr" else "bandwidth_hz"]
    for d in deltas:
        tag = f"d{_fmt(d)}"
        columns += [f"rate_{tag}", f"stderr_{tag}", f"lambda_{tag}", f"approx_{tag}"]
    grid = cfg.grid()
    rows = [[float(v)] for v in grid]
    for j, d in enumerate(deltas):
        base = cfg.channel.replace(delta=d)
        fn = None
        if axis == "snr":
            fn = rate_function(base, cfg.method, cfg.samples, make_rng(cfg.seed, cfg.command, j))
        for i, value in enumerate(grid):
            if axis == "snr":
                c, snr = base, float(value)
            else:
                c, snr = base.replace(bandwidth_hz=float(value)), cfg.snr
                fn = rate_function(c, cfg.method, cfg.samples, make_rng(cfg.seed, cfg.command, j, i))
            if cfg.onoff:
                res = onoff_optimize(c, snr, rate_fn=fn)
                rate, err, lam = res.rate_bits, res.stderr, res.lambda_star
            else:
                rate, err = fn(snr)
                lam = 1.0
            rows[i] += [rate, err, lam, wideband_approx(c, snr)]
    return columns, rows


def _rows_exponent(cfg: SweepConfig) -> tuple[list[str], list[list]]:
    deltas = cfg.delta_values()
    eta = cfg.channel.eta
    A = 1.0 / eta**2 if eta > 0 else math.inf
    columns = ["bandwidth_hz", "a"]
    for d in deltas:
        columns += [f"L_d{_fmt(d)}", f"exponent_d{_fmt(d)}"]
    grid = cfg.grid()
    curves = [
        exponent_curve(cfg.channel.replace(delta=d), cfg.alpha, grid, A=A) for d in deltas
    ]
    rows = []
    for i, w in enumerate(grid):
        row = [float(w), curves[0][i].a]
        for curve in curves:
            row += [curve[i].L, curve[i].exponent]
        rows.append(row)
    if curves[0] and curves[0][0].a > 1:
        warnings.warn(
            f"backoff threshold a={curves[0][0].a:.6g} exceeds 1: outage is impossible, "
            "exponents written as inf",
            stacklevel=2,
        )
    return columns, rows


def _resolve_lambda(cfg: SweepConfig, c: ChannelConfig, snr: float, fn) -> float:
    if cfg.lam == "opt":
        return onoff_optimize(c, snr, rate_fn=fn).lambda_star
    return float(cfg.lam)


def _rows_outage_mc(cfg: SweepConfig) -> tuple[list[str], list[list]]:
    c = cfg.channel
    snr = cfg.snr if cfg.snr is not None else c.snr_b
    L = integer_dof(c)
    fn = rate_function(c, cfg.method, cfg.samples, make_rng(cfg.seed, cfg.command, "rate"))
    lam = _resolve_lambda(cfg, c, snr, fn)
    x = snr / (lam * L)
    A = mi_ratio(x, c.eta)
    if cfg.conditioned:
        base_rate = lam * L * (float(i_ab(x, x)) - c.theta * float(i_ae(x, x, c.eta)))
    else:
        base_rate = lam * fn(snr / lam)[0]
    columns = ["alpha", "lambda", "rate_bits", "A"] + OutageReport.csv_header()
    rows = []
    for i, alpha in enumerate(cfg.grid()):
        alpha = float(alpha)
        rate = alpha * base_rate
        mc = outage_mc(
            c,
            snr,
            rate,
            lam=lam,
            samples=cfg.samples,
            seed=make_rng(cfg.seed, cfg.command, i),
            force_dof=L if cfg.conditioned else None,
        )
        a = backoff_threshold(alpha, A, c.theta) if math.isfinite(A) else math.inf
        rep = outage_report(L, c.theta, a, mc=mc)
        rows.append([alpha, lam, rate, A] + list(rep.to_dict().values()))
    return columns, rows


def _load_source(cfg: SweepConfig) -> ToySource:
    if cfg.source_csv:
        return ToySource.from_csv(cfg.source_csv)
    return bsc_cascade(cfg.bsc_p_xy, cfg.bsc_p_yz)


def _rows_leakage(cfg: SweepConfig) -> tuple[list[str], list[list]]:
    src = _load_source(cfg)
    if not src.degraded:
        raise ConfigError("leakage command needs a degraded source")
    cs = conditional_capacity_discrete(src)
    h_x_given_y = entropy(src.p_xy) - entropy(src.p_xy.sum(axis=0))
    R = cfg.key_rate if cfg.key_rate is not None else cs + 0.25
    R_phi = cfg.public_rate if cfg.public_rate is not None else h_x_given_y + 0.25
    ns = sorted({int(round(v)) for v in cfg.grid()})
    columns = [
        "n", "schemes", "key_rate", "public_rate", "cs", "median_pe", "mean_key_entropy",
        "mean_leak", "mean_residual", "min_slack", "bound_holds", "fano_holds",
    ]
    rows = []
    for n in ns:
        reports = [
            evaluate(random_binning(n, R, R_phi, make_rng(cfg.seed, cfg.command, n, s), src.sizes[0]), src)
            for s in range(cfg.samples)
        ]
        checks = [check_leakage_bound(r) for r in reports]
        fano_ok = all(r.residual <= fano_bound(r, src.sizes[0]) + 1e-12 for r in reports)
        rows.append([
            n,
            len(reports),
            R,
            R_phi,
            cs,
            statistics.median(r.pe for r in reports),
            statistics.fmean(r.key_entropy for r in reports),
            statistics.fmean(r.leak for r in reports),
            statistics.fmean(r.residual for r in reports),
            min(s for _, s in checks),
            all(h for h, _ in checks),
            fano_ok,
        ])
    return columns, rows


def _rows_mi_oracle(cfg: SweepConfig) -> tuple[list[str], list[list]]:
    c = cfg.channel
    m = cfg.oracle_bins
    rng = make_rng(cfg.seed, cfg.command, "profile")
    s_ab = np.ones(m)
    s_e = (rng.random(m) < c.theta).astype(float)
    if not s_e.any():
        s_e[0] = 1.0
    var_h = rng.random(m) + 0.1
    var_h /= var_h.sum()
    var_he = (rng.random(m) + 0.1) * s_e
    var_he /= var_he.sum()
    profile = PowerProfile(var_h, var_he, s_ab, s_e)
    na, nb, ne = c.power / c.snr_a, c.power / c.snr_b, c.power / c.snr_e
    closed = vector_mi_closed_form(profile, c.snr_a, c.snr_b, c.snr_e, c.eta)
    columns = ["K", "i_xy_closed", "i_xz_closed", "i_xy_oracle", "i_xz_oracle", "rel_err_xy", "rel_err_xz"]
    rows = []
    if cfg.sounding_file:
        designs = [load_sounding(cfg.sounding_file)]
    else:
        ks = sorted({max(1, int(round(v))) for v in cfg.grid()})
        designs = [pn_sounding(c.power, k, make_rng(cfg.seed, cfg.command, k)) for k in ks]
    for design in designs:
        if abs(design.power - c.power) > 1e-9 * c.power:
            raise ConfigError(f"sounding power {design.power!r} differs from configured power {c.power!r}")
        oracle = vector_mi_logdet_oracle(design, profile, na, nb, ne, c.eta)
        rel = [abs(o - x) / x if x > 0 else abs(o - x) for o, x in zip(oracle, closed)]
        rows.append([design.d.size, *closed, *oracle, *rel])
    return columns, rows


def _rows_degraded(cfg: SweepConfig) -> tuple[list[str], list[list]]:
    c = cfg.channel
    var = 1.0 / c.mean_dof
    nb, ne = c.power / c.snr_b, c.power / c.snr_e
    columns = ["power", "bob_snr", "eve_snr", "degraded"]
    rows = []
    for p in cfg.grid():
        p = float(p)
        bob = var * p / nb
        eve = c.eta**2 * var * p / ((1 - c.eta**2) * var * p + ne)
        rows.append([p, bob, eve, is_eve_degraded(var, var, p, nb, ne, c.eta)])
    return columns, rows


def compute(cfg: SweepConfig) -> tuple[list[str], list[list]]:
    """Run the configured command; returns ``(columns, rows)`` in grid order."""
    if cfg.command == "ergodic-snr":
        return _rows_ergodic(cfg, "snr")
    if cfg.command == "ergodic-bandwidth":
        return _rows_ergodic(cfg, "bandwidth")
    if cfg.command == "outage-exponent":
        return _rows_exponent(cfg)
    if cfg.command == "outage-mc":
        return _rows_outage_mc(cfg)
    if cfg.command == "leakage":
        return _rows_leakage(cfg)
    if cfg.command == "mi-oracle":
        return _rows_mi_oracle(cfg)
    return _rows_degraded(cfg)


def render(cfg: SweepConfig, columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Serialize results; identical inputs give byte-identical text."""
    if cfg.format == "json":
        doc = {
            "version": __version__,
            "config": cfg.to_dict(),
            "columns": list(columns),
            "rows": [[_json_cell(v) for v in row] for row in rows],
        }
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# sparsekey {__version__} {cfg.command}\n")
    for key, value in cfg.to_pairs():
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def _json_cell(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "inf" if math.isinf(v) else v
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsekey", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, help="flat key=value configuration file")
    parser.add_argument("--command", choices=COMMANDS)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--out", help="output path (default: standard output)")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a configuration key (repeatable)",
    )
    return parser


def load_config(args: argparse.Namespace) -> SweepConfig:
    pairs: dict[str, str] = {}
    if args.config is not None:
        try:
            pairs.update(parse_config_text(args.config.read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        pairs[k.strip()] = v.strip()
    for key in ("command", "seed", "samples", "out", "format"):
        value = getattr(args, key)
        if value is not None:
            pairs[key] = str(value)
    if "command" not in pairs:
        raise ConfigError("no command given (use --command or a 'command' key)")
    return SweepConfig.from_pairs(pairs)


def run(cfg: SweepConfig) -> str:
    """Compute and serialize; writes ``cfg.out`` when set and returns the text."""
    columns, rows = compute(cfg)
    text = render(cfg, columns, rows)
    if cfg.out:
        Path(cfg.out).write_text(text)
    return text


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, ValueError) as exc:
        print(f"sparsekey: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            text = run(cfg)
        for w in caught:
            print(f"sparsekey: warning: {w.message}", file=sys.stderr)
    except ConfigError as exc:
        print(f"sparsekey: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any failure maps to exit code 2
        print(f"sparsekey: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if not cfg.out:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
