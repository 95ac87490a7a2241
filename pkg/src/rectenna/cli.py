"""Command-line front end.

Data (CSV) goes to stdout or ``--out``; diagnostics go to stderr. Exit codes:
0 success, 1 computation error, 2 usage error. Boundary units are GHz, mm,
dBm, ohm, nH, pF and ns; everything is converted to SI while parsing.
"""
import argparse
import csv
from dataclasses import dataclass, field
import io
import logging
import sys
from typing import Optional

from . import __version__
from .errors import RectennaError

log = logging.getLogger("rectenna")

GHZ, MM, PF, NH, NS = 1e9, 1e-3, 1e-12, 1e-9, 1e-9
TOPOLOGIES = ("series-diode", "shunt-diode", "voltage-doubler")


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: Optional[str] = None
    plot: Optional[str] = None
    verbose: int = 0


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0: {text!r}")
    return v


def _number(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if v != v or v in (float("inf"), float("-inf")):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return v


def _count(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _impedance(text):
    from .matching import parse_impedance
    try:
        return parse_impedance(text)
    except RectennaError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="key=value file; flags given on the command line win")
    common.add_argument("--out", metavar="FILE", help="write CSV here instead of stdout")
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="log progress to stderr (repeat for debug)")

    rect = argparse.ArgumentParser(add_help=False)
    rect.add_argument("--topology", choices=TOPOLOGIES, default="series-diode")
    rect.add_argument("--rl", type=_positive, default=10e3, help="load resistance, ohm")
    rect.add_argument("--cs", type=_positive, default=100.0,
                      help="smoothing capacitance, pF")
    rect.add_argument("--rsrc", type=_positive, default=50.0, help="source resistance, ohm")
    rect.add_argument("--f", type=_positive, default=1.8, help="frequency, GHz")
    rect.add_argument("--card", metavar="FILE", help="diode model card (KEY=value lines)")
    rect.add_argument("--steps", type=_count, default=200, help="time steps per RF period")
    rect.add_argument("--max-cycles", type=_count, default=2000)

    p = argparse.ArgumentParser(prog="rectenna",
                                description="Rectenna design and rectifier simulation")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("design-patch", parents=[common], help="rectangular patch dimensions")
    s.add_argument("--f0", type=_positive, required=True, help="design frequency, GHz")
    s.add_argument("--er", type=_number, required=True, help="relative permittivity")
    s.add_argument("--h", type=_positive, required=True, help="substrate thickness, mm")
    s.add_argument("--tand", type=_number, default=0.0, help="loss tangent")

    s = sub.add_parser("design-csr", parents=[common],
                       help="spiral resonator geometry for a target frequency "
                            "(or tank values for --length/--width)")
    s.add_argument("--f0", type=_positive, help="target resonance, GHz")
    s.add_argument("--lpul", type=_positive, default=1.0,
                   help="per-unit-length inductance, nH/mm")
    s.add_argument("--aspect", type=_positive, default=1.0, help="width / length")
    s.add_argument("--turns", type=_count, default=3)
    s.add_argument("--length", type=_positive, help="rectangle length, mm")
    s.add_argument("--width", type=_positive, help="rectangle width, mm")

    s = sub.add_parser("match", parents=[common], help="L-section solutions for a load")
    s.add_argument("--z", type=_impedance, required=True, help="load impedance, e.g. 25-j50")
    s.add_argument("--z0", type=_positive, default=50.0, help="reference impedance, ohm")
    s.add_argument("--f", type=_positive, default=1.8, help="frequency, GHz")

    s = sub.add_parser("simulate-rectifier", parents=[common, rect],
                       help="steady state at one input power")
    s.add_argument("--p", type=_number, default=-10.0, help="available input power, dBm")
    s.add_argument("--match", choices=("auto", "none"), default="auto")

    s = sub.add_parser("sweep", parents=[common, rect], help="input-power sweep")
    s.add_argument("--from", dest="start", type=_number, default=-20.0, help="dBm")
    s.add_argument("--to", dest="stop", type=_number, default=0.0, help="dBm")
    s.add_argument("--step", type=_positive, default=5.0, help="dB")
    s.add_argument("--match", choices=("auto", "none"), default="auto")
    s.add_argument("--match-at", type=_number, default=-10.0,
                   help="power at which the auto match is computed, dBm")
    s.add_argument("--workers", type=_count, default=1)
    s.add_argument("--plot", metavar="PNG", help="also render a figure")

    s = sub.add_parser("impedance", parents=[common, rect],
                       help="large-signal input impedance against power")
    s.add_argument("--from", dest="start", type=_number, default=-20.0, help="dBm")
    s.add_argument("--to", dest="stop", type=_number, default=0.0, help="dBm")
    s.add_argument("--step", type=_positive, default=5.0, help="dB")
    s.add_argument("--match", choices=("auto", "none"), default="none")
    s.add_argument("--match-at", type=_number, default=-10.0, help="dBm")
    s.add_argument("--plot", metavar="PNG", help="also render a figure")

    s = sub.add_parser("link-budget", parents=[common], help="Friis link and DC output")
    s.add_argument("--pt", type=_number, required=True, help="transmit power, dBm")
    s.add_argument("--gt", type=_number, required=True, help="transmit gain, dBi")
    s.add_argument("--gr", type=_number, default=2.5, help="receive gain, dBi")
    s.add_argument("--d", type=_positive, required=True, help="distance, m")
    s.add_argument("--f", type=_positive, default=1.8, help="frequency, GHz")
    s.add_argument("--curve", metavar="CSV", help="sweep CSV used as efficiency curve")

    s = sub.add_parser("transient", parents=[common], help="transient run of a netlist file")
    s.add_argument("netlist", help="SPICE-style netlist file")
    s.add_argument("--tstop", type=_positive, required=True, help="stop time, ns")
    s.add_argument("--dt", type=_positive, required=True, help="time step, ns")
    s.add_argument("--op", action="store_true", help="start from the DC operating point")
    return p


def _config_args(path, parser):
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        parser.error(f"cannot read config {path}: {exc.strerror}")
    args = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            parser.error(f"{path}:{lineno}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        args += ["--" + key.lstrip("-"), value]
    return args


def _expand_config(argv, parser):
    out, cfg = [], None
    it = iter(argv)
    for a in it:
        if a == "--config":
            cfg = next(it, None)
            if cfg is None:
                parser.error("--config needs a file")
        elif a.startswith("--config="):
            cfg = a.split("=", 1)[1]
        else:
            out.append(a)
    if cfg is None or not out:
        return out
    # config values go right after the subcommand so explicit flags override them
    return out[:1] + _config_args(cfg, parser) + out[1:]


def parse_args(argv=None):
    """Parse *argv* into a :class:`RunConfig`; usage errors exit with status 2."""
    parser = _build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    ns = parser.parse_args(_expand_config(argv, parser))
    params = {k: v for k, v in vars(ns).items()
              if k not in ("command", "config", "out", "plot", "verbose")}
    cmd = ns.command
    if cmd == "design-patch":
        params["f0"] *= GHZ
        params["h"] *= MM
        if params["er"] < 1:
            parser.error("--er must be >= 1")
    elif cmd == "design-csr":
        forward = params["length"] is not None or params["width"] is not None
        if forward and (params["length"] is None or params["width"] is None):
            parser.error("--length and --width go together")
        if not forward and params["f0"] is None:
            parser.error("design-csr needs --f0 or --length/--width")
        params["lpul"] *= NH / MM
        for k in ("length", "width"):
            if params[k] is not None:
                params[k] *= MM
        if params["f0"] is not None:
            params["f0"] *= GHZ
    elif cmd in ("match", "link-budget"):
        params["f"] *= GHZ
    elif cmd == "transient":
        params["tstop"] *= NS
        params["dt"] *= NS
    else:
        params["f"] *= GHZ
        params["cs"] *= PF
        if cmd != "simulate-rectifier" and params["start"] > params["stop"]:
            parser.error("--from must not exceed --to")
    return RunConfig(cmd, params, ns.out, getattr(ns, "plot", None), ns.verbose)


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    return f"{v:.9g}"


def _emit(cfg, header, rows, comments=()):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    _write(cfg, buf.getvalue())


def _write(cfg, text):
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _cmd_design_patch(cfg):
    from .patch import SubstrateSpec, design_patch
    p = cfg.params
    d = design_patch(p["f0"], SubstrateSpec(p["er"], p["tand"], p["h"]))
    _emit(cfg, ["W_mm", "L_mm", "eps_eff", "dL_mm"],
          [[d.W / MM, d.L / MM, d.eps_eff, d.delta_L / MM]])


def _cmd_design_csr(cfg):
    from .csr import CsrGeometry, csr_equivalent, csr_inverse_design
    p = cfg.params
    if p["length"] is not None:
        g = CsrGeometry(p["length"], p["width"], p["turns"], p["lpul"])
    else:
        g = csr_inverse_design(p["f0"], p["lpul"], p["aspect"], p["turns"])
    e = csr_equivalent(g)
    _emit(cfg, ["L_mm", "W_mm", "Lo_nH", "Ls_nH", "Cc_pF", "fo_GHz"],
          [[g.L / MM, g.W / MM, e.L_o / NH, e.L_s / NH, e.C_c / PF, e.f_o / GHZ]])


def _element_cells(kind, value):
    return ["L", value / NH, "nH"] if kind == "inductor" else ["C", value / PF, "pF"]


def _cmd_match(cfg):
    from .matching import input_impedance, reflection_coefficient, synthesize_l_section
    p = cfg.params
    rows = []
    for sec in synthesize_l_section(p["z"], p["z0"], p["f"]):
        g = abs(reflection_coefficient(input_impedance(sec, p["z"], p["f"]), p["z0"])[0])
        rows.append([sec.topology, *_element_cells(sec.series_kind, sec.series_value),
                     *_element_cells(sec.shunt_kind, sec.shunt_value), g])
    _emit(cfg, ["topology", "series", "series_value", "series_unit", "shunt", "shunt_value",
                "shunt_unit", "gamma"], rows)


def _rectifier_spec(p):
    from .diode import load_model_card
    from .rectifier import RectifierSpec
    try:
        card = load_model_card(p["card"])
    except OSError as exc:
        raise RectennaError(f"cannot read model card {p['card']}: {exc.strerror}") from None
    return RectifierSpec(topology=p["topology"], diode=card, smoothing_capacitance=p["cs"],
                         load_resistance=p["rl"], source_resistance=p["rsrc"],
                         frequency=p["f"], steps_per_period=p["steps"],
                         max_cycles=p["max_cycles"])


def _matched(spec, p_dbm):
    from dataclasses import replace
    from .rectifier import auto_match
    m = auto_match(spec, p_dbm)
    if m.network is None:
        return spec, [f"already matched at {p_dbm:g} dBm (|gamma| = {m.gamma:.4g})"]
    n = m.network
    s, h = _element_cells(n.series_kind, n.series_value), \
        _element_cells(n.shunt_kind, n.shunt_value)
    note = (f"matching at {p_dbm:g} dBm: {n.topology} series {s[0]} {s[1]:.6g} {s[2]}, "
            f"shunt {h[0]} {h[1]:.6g} {h[2]} (|gamma| = {m.gamma:.4g})")
    return replace(spec, matching=n), [note]


def _cmd_simulate(cfg):
    from .rectifier import steady_state
    p = cfg.params
    spec, notes = _rectifier_spec(p), []
    if p["match"] == "auto":
        spec, notes = _matched(spec, p["p"])
    r = steady_state(spec, p["p"])
    _emit(cfg, ["P_in_dBm", "V_dc_V", "efficiency", "ripple_V", "ReZin_ohm", "ImZin_ohm",
                "ReZport_ohm", "ImZport_ohm", "gamma", "cycles"],
          [[r.p_in_dbm, r.v_dc, r.efficiency, r.ripple, r.z_in.real, r.z_in.imag,
            r.z_port.real, r.z_port.imag, r.gamma, r.cycles]], notes)


def _cmd_sweep(cfg):
    from .rectifier import power_sweep
    p = cfg.params
    spec, notes = _rectifier_spec(p), []
    if p["match"] == "auto":
        spec, notes = _matched(spec, p["match_at"])
    res = power_sweep(spec, p["start"], p["stop"], p["step"], workers=p["workers"])
    buf = io.StringIO()
    res.write_csv(buf, notes)
    _write(cfg, buf.getvalue())
    if cfg.plot:
        from .plotting import plot_sweep
        plot_sweep(res, cfg.plot)
    failed = [r for r in res.rows if not r.ok]
    for r in failed:
        log.error("P_in = %g dBm failed: %s", r.p_in_dbm, r.error)
    return 1 if failed else 0


def _cmd_impedance(cfg):
    from .rectifier import steady_state, sweep_powers
    p = cfg.params
    spec, notes = _rectifier_spec(p), []
    if p["match"] == "auto":
        spec, notes = _matched(spec, p["match_at"])
    powers = sweep_powers(p["start"], p["stop"], p["step"])
    results = [steady_state(spec, q) for q in powers]
    _emit(cfg, ["P_in_dBm", "ReZin_ohm", "ImZin_ohm", "ReZport_ohm", "ImZport_ohm", "gamma"],
          [[r.p_in_dbm, r.z_in.real, r.z_in.imag, r.z_port.real, r.z_port.imag, r.gamma]
           for r in results], notes)
    if cfg.plot:
        from .plotting import plot_impedance
        plot_impedance(powers, [r.z_in for r in results], cfg.plot)


def _cmd_link(cfg):
    from .link import LinkBudget, end_to_end_dc, received_power
    from .rectifier import read_sweep_csv
    p = cfg.params
    link = LinkBudget(P_t=p["pt"], G_t=p["gt"], G_r=p["gr"], d=p["d"], f=p["f"])
    if p["curve"] is None:
        _emit(cfg, ["P_r_dBm"], [[received_power(link)]])
        return
    try:
        with open(p["curve"]) as fh:
            curve = read_sweep_csv(fh)
    except OSError as exc:
        raise RectennaError(f"cannot read curve {p['curve']}: {exc.strerror}") from None
    est = end_to_end_dc(link, curve)
    _emit(cfg, ["P_r_dBm", "efficiency", "P_dc_W", "V_dc_V"],
          [[est.p_r_dbm, est.efficiency, est.p_dc, est.v_dc]])


def _cmd_transient(cfg):
    from .circuit import parse_netlist_text, solve_dc, solve_transient
    p = cfg.params
    try:
        with open(p["netlist"]) as fh:
            text = fh.read()
    except OSError as exc:
        raise RectennaError(f"cannot read netlist {p['netlist']}: {exc.strerror}") from None
    net = parse_netlist_text(text)
    initial = solve_dc(net) if p["op"] else None
    wave = solve_transient(net, p["tstop"], p["dt"], initial)
    buf = io.StringIO()
    wave.write_csv(buf)
    _write(cfg, buf.getvalue())


COMMANDS = {
    "design-patch": _cmd_design_patch,
    "design-csr": _cmd_design_csr,
    "match": _cmd_match,
    "simulate-rectifier": _cmd_simulate,
    "sweep": _cmd_sweep,
    "impedance": _cmd_impedance,
    "link-budget": _cmd_link,
    "transient": _cmd_transient,
}


def run(config):
    """Execute *config*; returns the process exit code."""
    try:
        return COMMANDS[config.command](config) or 0
    except RectennaError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1
    except OSError as exc:
        log.error("%s", exc)
        return 1


def main(argv=None):
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else (0 if exc.code is None else 2)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(cfg.verbose, 2)]
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level)
    logging.getLogger("numba").setLevel(logging.WARNING)
    logging.captureWarnings(True)
    return run(cfg)
