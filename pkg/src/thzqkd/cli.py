"""
Command-line front end: parameter sweeps emitted as plot-ready CSV or JSON.

Subcommands
-----------
rate       key rates and PLOB bound against distance, transmissivity or frequency
threshold  security-threshold frequencies against transmissivity
converter  converter frequency response, or steady-state occupations
plob       PLOB bound and its threshold frequency

Parameters resolve as: command-line flags, then ``--config`` (JSON object or
``key=value`` lines), then built-in defaults. Every CSV starts with a ``#``
line holding the fully resolved parameters as sorted JSON, followed by a
header row. Output contains no timestamps, so identical inputs give
byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 data or attenuation-table
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, converter, keyrate, linkmodel
from .errors import DomainError, NumericalError, UnresolvedBandError
from .physkit import ROOM_TEMPERATURE, preparation_variance

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


# ---------------------------------------------------------------------------
# value parsers (shared by flags and config files)

def _float(text) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {text!r}") from None


def _int(text) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ConfigError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return parse


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _w_policy(text) -> str:
    if text == "match-v0":
        return text
    if isinstance(text, str) and text.startswith("value:"):
        w = _float(text[len("value:"):])
        if not w >= 1:
            raise ConfigError(f"W must be >= 1, got {w!r}")
        return f"value:{w!r}"
    raise ConfigError(f"w-policy must be 'match-v0' or 'value:X', got {text!r}")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    lo: float
    hi: float
    points: int
    log: bool = False

    def values(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.lo, self.hi, self.points)
        return np.linspace(self.lo, self.hi, self.points)

    def __str__(self):
        tail = ":log" if self.log else ""
        return f"{self.variable}:{self.lo!r}:{self.hi!r}:{self.points}{tail}"


SWEEP_VARIABLES = ("distance", "frequency", "transmissivity", "omega")


def parse_sweep(text) -> SweepSpec:
    if isinstance(text, SweepSpec):
        return text
    parts = str(text).split(":")
    if len(parts) not in (4, 5):
        raise ConfigError(f"sweep must be VAR:MIN:MAX:POINTS[:log], got {text!r}")
    var = parts[0]
    if var not in SWEEP_VARIABLES:
        raise ConfigError(f"unknown sweep variable {var!r}")
    lo, hi, n = _float(parts[1]), _float(parts[2]), _int(parts[3])
    log = False
    if len(parts) == 5:
        if parts[4] not in ("log", "lin"):
            raise ConfigError(f"sweep spacing must be 'lin' or 'log', got {parts[4]!r}")
        log = parts[4] == "log"
    if n < 2 or not lo < hi:
        raise ConfigError(f"empty sweep {text!r}: need MIN < MAX and POINTS >= 2")
    if log and lo <= 0:
        raise ConfigError("log sweep needs MIN > 0")
    return SweepSpec(var, lo, hi, n, log)


# name -> (parser, default); None means "not set"
OPTIONS = {
    "freq": (_float, 30e12),
    "temp": (_float, ROOM_TEMPERATURE),
    "eta": (_float, 0.1),
    "trusted_noise": (_choice("unit", "match-v0", "optimize"), "optimize"),
    "w_policy": (_w_policy, "match-v0"),
    "va": (_float, keyrate.DEFAULT_MODULATION),
    "sweep": (parse_sweep, None),
    "distance": (_float, None),
    "transmissivity": (_float, None),
    "atten_table": (str, None),
    "converter_noise": (_float, 0.0),
    "injection": (_choice("input", "output"), "input"),
    "preset": (_choice(*converter.PRESETS), "calibrated-1K"),
    "occupations": (_bool, False),
    "format": (_choice("csv", "json"), "csv"),
    "out": (str, None),
    "seed": (_int, 0),
    "g_o": (_float, None),
    "g_t": (_float, None),
    "kappa_o": (_float, None),
    "kappa_t": (_float, None),
    "kappa_m": (_float, None),
    "n_o": (_float, None),
    "n_t": (_float, None),
    "n_m": (_float, None),
}

DEFAULT_SWEEPS = {
    "rate": "distance:0:300:601",
    "threshold": "transmissivity:0.05:0.95:19",
    "converter": "omega:-5e8:5e8:201",
    "plob": "transmissivity:0.01:0.99:99",
}

ALLOWED_SWEEPS = {
    "rate": ("distance", "transmissivity", "frequency"),
    "threshold": ("transmissivity",),
    "converter": ("omega",),
    "plob": ("distance", "transmissivity", "frequency"),
}


def load_config(path) -> dict:
    """Read a JSON object or ``key=value`` lines (``#`` starts a comment)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must hold an object")
    else:
        raw = {}
        for num, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{num}: expected key=value")
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()
    out = {}
    for key, value in raw.items():
        name = key.replace("-", "_")
        if name not in OPTIONS:
            raise ConfigError(f"unknown config key {key!r}")
        out[name] = OPTIONS[name][0](value)
    return out


def resolve(command: str, args: argparse.Namespace) -> dict:
    params = {name: default for name, (_, default) in OPTIONS.items()}
    if args.config:
        params.update(load_config(args.config))
    for name in OPTIONS:
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    params["command"] = command

    sweep = params["sweep"]
    if sweep is None:
        fixed = {"rate": "distance", "plob": "distance", "threshold": "transmissivity"}.get(command)
        single = params.get(fixed) if fixed else None
        if single is None and command in ("rate", "plob") and params["transmissivity"] is not None:
            single, fixed = params["transmissivity"], "transmissivity"
        if single is not None:
            params["points"] = [(fixed, float(single))]
        else:
            sweep = parse_sweep(DEFAULT_SWEEPS[command])
    if sweep is not None:
        if sweep.variable not in ALLOWED_SWEEPS[command]:
            raise ConfigError(f"{command} cannot sweep {sweep.variable!r}")
        params["sweep"] = sweep
        params["points"] = [(sweep.variable, float(x)) for x in sweep.values()]
    return params


# ---------------------------------------------------------------------------
# output

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def _json_value(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


def _metadata(params: dict) -> dict:
    # the output location is not part of the computation
    meta = {k: (str(v) if isinstance(v, SweepSpec) else v) for k, v in params.items() if k not in ("points", "out")}
    meta["version"] = __version__
    return {k: _json_value(v) for k, v in meta.items()}


def render(params: dict, columns: list[str], rows: list[tuple]) -> str:
    meta = _metadata(params)
    if params["format"] == "json":
        doc = {
            "parameters": meta,
            "columns": columns,
            "records": [{c: _json_value(v) for c, v in zip(columns, row)} for row in rows],
        }
        return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True, allow_nan=False) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit(params: dict, columns: list[str], rows: list[tuple]) -> None:
    text = render(params, columns, rows)
    if params["out"] in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(params["out"], "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {params['out']}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# commands

def _table(params):
    path = params["atten_table"]
    if path is None:
        return linkmodel.DEFAULT_TABLE
    try:
        return linkmodel.AttenuationTable.from_csv(path)
    except OSError as exc:
        raise DataError(f"cannot read attenuation table {path}: {exc.strerror}") from None
    except (DomainError, ValueError) as exc:
        raise DataError(f"bad attenuation table {path}: {exc}") from None


def _check_common(params):
    if not 0 < params["eta"] <= 1:
        raise ConfigError(f"eta must lie in (0, 1], got {params['eta']!r}")
    if not params["temp"] > 0:
        raise ConfigError(f"temperature must be positive, got {params['temp']!r}")
    if params["converter_noise"] < 0:
        raise ConfigError("converter noise must be >= 0")


def _link_point(params, table, variable, x):
    """Return ``(frequency, distance_m, T)`` for one sweep point."""
    freq = params["freq"]
    if variable == "frequency":
        freq = x
        d = params["distance"]
        if d is None:
            raise ConfigError("a frequency sweep needs --distance")
        T = linkmodel.transmissivity_from_distance(d, table(freq))
        return freq, d, T
    delta = table(freq)
    if variable == "distance":
        if x < 0:
            raise ConfigError(f"distance must be >= 0, got {x!r}")
        return freq, x, linkmodel.transmissivity_from_distance(x, delta)
    if not 0 <= x <= 1:
        raise ConfigError(f"transmissivity must lie in [0, 1], got {x!r}")
    d = linkmodel.distance_from_transmissivity(x, delta) if x > 0 else math.inf
    return freq, d, x


def cmd_rate(params) -> tuple[list[str], list[tuple]]:
    _check_common(params)
    table = _table(params)
    columns = ["distance_m", "T", "v0", "rate_dr", "rate_rr", "plob", "rate_dr_raw", "rate_rr_raw", "flags"]
    v_c = 2.0 * params["converter_noise"]
    rows = []
    for variable, x in params["points"]:
        freq, d, T = _link_point(params, table, variable, x)
        prep = preparation_variance(freq, params["temp"])
        w = prep.v0 if params["w_policy"] == "match-v0" else float(params["w_policy"].split(":", 1)[1])
        p = keyrate.ProtocolParams(v0=prep.v0, T=T, W=w, eta=params["eta"], va=params["va"])
        p = keyrate.inject_excess_noise(p, v_c, params["injection"])
        dr = keyrate.secret_key_rate(p, "DR", params["trusted_noise"])
        rr = keyrate.secret_key_rate(p, "RR", params["trusted_noise"])
        plob = keyrate.plob_bound(T, prep.nbar)
        flags = []
        if dr.status is not keyrate.RateStatus.FINITE:
            flags.append(dr.status.value)
        if rr.trusted_noise != 1.0:
            flags.append("rr-s-v0")
        rows.append((d, T, prep.v0, max(dr.rate, 0.0), max(rr.rate, 0.0), plob, dr.rate, rr.rate, ";".join(flags)))
    return columns, rows


def _threshold_value(res: linkmodel.ThresholdResult):
    return res.frequency if res.status == "root" else None


def cmd_threshold(params) -> tuple[list[str], list[tuple]]:
    _check_common(params)
    eta, temp = params["eta"], params["temp"]
    columns = ["T", "f_dr_eta", "f_dr_ideal", "f_rr_ideal", "f_rr_eta_trusted", "f_plob", "flags"]
    rows = []
    for _, T in params["points"]:
        if not 0 < T < 1:
            raise ConfigError(f"threshold transmissivity must lie in (0, 1), got {T!r}")
        curves = {
            "dr_eta": linkmodel.security_threshold_frequency(T, eta, "DR", params["trusted_noise"], temp),
            "dr_ideal": linkmodel.security_threshold_frequency(T, 1.0, "DR", "unit", temp),
            "rr_ideal": linkmodel.security_threshold_frequency(T, 1.0, "RR", "unit", temp),
            "rr_eta_trusted": linkmodel.security_threshold_frequency(T, eta, "RR", "match-v0", temp),
        }
        flags = [f"{k}:{r.status}" for k, r in curves.items() if r.status == "below-bracket" or r.multiple]
        rows.append(
            (T, *(_threshold_value(r) for r in curves.values()), linkmodel.plob_threshold_frequency(T, temp), ";".join(flags))
        )
    return columns, rows


def _converter_params(params) -> converter.ConverterParams:
    base = converter.PRESETS[params["preset"]]
    overrides = {k: params[k] for k in ("g_o", "g_t", "kappa_o", "kappa_t", "kappa_m", "n_o", "n_t", "n_m") if params[k] is not None}
    try:
        return base.with_(**overrides)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def cmd_converter(params) -> tuple[list[str], list[tuple]]:
    cp = _converter_params(params)
    if params["occupations"]:
        occ = converter.steady_state_occupations(cp)
        return ["n_o_eff", "n_thz_eff", "n_m_eff", "residual"], [(occ.n_o, occ.n_t, occ.n_m, occ.residual)]
    columns = ["omega_rad_per_s", "re_t", "im_t", "mag2", "phase_rad", "group_delay_s"]
    rows = []
    for _, w in params["points"]:
        t = converter.frequency_response(cp, w).t
        if t == 0:
            rows.append((w, 0.0, 0.0, 0.0, None, None))
            continue
        point = converter.magnitude_phase_delay(cp, w)
        rows.append((w, t.real, t.imag, point.mag2, point.phase, point.group_delay))
    return columns, rows


def cmd_plob(params) -> tuple[list[str], list[tuple]]:
    _check_common(params)
    table = _table(params)
    columns = ["distance_m", "T", "nbar", "plob", "f_threshold_hz"]
    rows = []
    for variable, x in params["points"]:
        freq, d, T = _link_point(params, table, variable, x)
        nbar = preparation_variance(freq, params["temp"]).nbar
        rows.append((d, T, nbar, keyrate.plob_bound(T, nbar), linkmodel.plob_threshold_frequency(T, params["temp"])))
    return columns, rows


COMMANDS = {"rate": cmd_rate, "threshold": cmd_threshold, "converter": cmd_converter, "plob": cmd_plob}


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _flag(parser, name, help, **kw):
    parse = OPTIONS[name][0]

    def typed(text):
        try:
            return parse(text)
        except ConfigError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    parser.add_argument("--" + name.replace("_", "-"), dest=name, type=typed, default=None, help=help, **kw)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _flag(common, "temp", "temperature in K (default 296)")
    _flag(common, "eta", "detector efficiency (default 0.1)")
    _flag(common, "sweep", "VAR:MIN:MAX:POINTS[:log]")
    _flag(common, "format", "csv or json (default csv)")
    _flag(common, "out", "output file (default stdout)")
    _flag(common, "seed", "reserved; recorded in the metadata only")
    common.add_argument("--config", default=None, help="JSON object or key=value file")

    link = argparse.ArgumentParser(add_help=False)
    _flag(link, "freq", "carrier frequency in Hz (default 30e12)")
    _flag(link, "distance", "fixed distance in m")
    _flag(link, "transmissivity", "fixed transmissivity")
    _flag(link, "atten_table", "CSV with f_min_hz,f_max_hz,delta_db_per_km")

    parser = _Parser(prog="thzqkd", description="Thermal-state CV-QKD rates, thresholds and converter response.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    rate = sub.add_parser("rate", parents=[common, link], help="key rates against distance")
    _flag(rate, "trusted_noise", "unit, match-v0 or optimize")
    _flag(rate, "w_policy", "match-v0 or value:X")
    _flag(rate, "va", "modulation variance in SNU (diagnostics only)")
    _flag(rate, "converter_noise", "THz occupation NBAR added by a converter (V_c = 2 NBAR)")
    _flag(rate, "injection", "input or output")

    thr = sub.add_parser("threshold", parents=[common], help="security-threshold frequencies")
    _flag(thr, "trusted_noise", "policy for the DR curve at --eta")
    _flag(thr, "transmissivity", "single transmissivity")

    conv = sub.add_parser("converter", parents=[common], help="converter response and occupations")
    _flag(conv, "preset", ", ".join(converter.PRESETS))
    conv.add_argument("--occupations", action="store_const", const=True, default=None, help="print steady-state occupations")
    for name in ("g_o", "g_t", "kappa_o", "kappa_t", "kappa_m", "n_o", "n_t", "n_m"):
        _flag(conv, name, f"override {name}")

    sub.add_parser("plob", parents=[common, link], help="PLOB bound")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        params = resolve(args.command, args)
        columns, rows = COMMANDS[args.command](params)
        emit(params, columns, rows)
    except ConfigError as exc:
        print(f"thzqkd: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnresolvedBandError, DataError) as exc:
        print(f"thzqkd: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"thzqkd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"thzqkd: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
