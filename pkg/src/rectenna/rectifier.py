"""Large-signal rectifier characterization.

The rectifier is driven from a Thevenin source whose available power equals the
requested input power, integrated cycle by cycle until the load voltage settles,
and the port impedances are taken from the fundamental Fourier coefficients of
the final cycle.
"""
from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field, replace
import logging
import math
from typing import NamedTuple, Optional

import numpy as np

from .circuit import GROUND, TransientStepper, build_netlist
from .diode import DiodeModelCard
from .errors import InvalidInput, NoConvergence, RectennaError
from .matching import LSection, reflection_coefficient, synthesize_l_section

log = logging.getLogger(__name__)

TOPOLOGIES = ("series-diode", "shunt-diode", "voltage-doubler", "resistor")
SWEEP_HEADER = ("P_in_dBm", "V_dc_V", "efficiency", "ReZin_ohm", "ImZin_ohm")


def dbm_to_watts(p_dbm):
    return 1e-3 * 10 ** (p_dbm / 10)


def watts_to_dbm(p_w):
    return 10 * math.log10(p_w / 1e-3)


@dataclass(frozen=True)
class RectifierSpec:
    """Rectifier circuit description.

    ``resistor`` replaces the whole rectifier by ``stand_in_resistance`` and is
    meant for calibrating the extraction against linear theory.
    """
    topology: str = "series-diode"
    diode: DiodeModelCard = DiodeModelCard()
    matching: Optional[LSection] = None
    smoothing_capacitance: float = 100e-12
    load_resistance: float = 10e3
    source_resistance: float = 50.0
    frequency: float = 1.8e9
    coupling_capacitance: float = 100e-12
    choke_inductance: float = 100e-9
    stand_in_resistance: float = 50.0
    steps_per_period: int = 200
    max_cycles: int = 2000
    rtol: float = 1e-5

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise InvalidInput(f"unknown rectifier topology {self.topology!r}")
        for name in ("smoothing_capacitance", "load_resistance", "source_resistance",
                     "frequency", "coupling_capacitance", "choke_inductance",
                     "stand_in_resistance"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"{name} must be > 0")
        if self.steps_per_period < 8 or self.max_cycles < 2:
            raise InvalidInput("steps_per_period >= 8 and max_cycles >= 2 required")


@dataclass(frozen=True)
class RectifierResult:
    p_in_dbm: float
    v_dc: float
    efficiency: float
    ripple: float
    z_in: complex           # rectifier input, fundamental
    z_port: complex         # source port (after matching), fundamental
    gamma: float            # |reflection| at the source port
    cycles: int
    p_available: float
    last_cycle: dict = field(default=None, repr=False, compare=False)


def source_amplitude(p_in_dbm, r_src):
    """Thevenin amplitude whose available power into a matched load is ``p_in_dbm``."""
    return math.sqrt(8 * r_src * dbm_to_watts(p_in_dbm))


def rectifier_netlist(spec, p_in_dbm):
    """Netlist for *spec* plus the probe description used for extraction.

    Node names: ``src`` (Thevenin EMF), ``in`` (antenna port), ``rect``
    (rectifier input; equal to ``in`` without matching) and ``out`` (DC output).
    """
    f = spec.frequency
    rect = "rect" if spec.matching is not None else "in"
    els = [
        {"name": "Vs", "kind": "voltage-source", "nodes": ("src", GROUND),
         "source": {"amplitude": source_amplitude(p_in_dbm, spec.source_resistance),
                    "frequency": f}},
        {"name": "Rsrc", "kind": "resistor", "nodes": ("src", "in"),
         "value": spec.source_resistance},
    ]
    m = spec.matching
    if m is not None:
        ser_nodes = ("in", rect)
        sh_nodes = (rect, GROUND) if m.topology == "series-first" else ("in", GROUND)
        els.append({"name": "Mser", "kind": m.series_kind, "nodes": ser_nodes,
                    "value": m.series_value})
        els.append({"name": "Mshunt", "kind": m.shunt_kind, "nodes": sh_nodes,
                    "value": m.shunt_value})
    out = "out"
    t = spec.topology
    if t == "series-diode":
        els.append({"name": "D1", "kind": "diode", "nodes": (rect, "out"), "model": spec.diode})
        entry = "D1"
    elif t == "shunt-diode":
        els += [
            {"name": "Cc", "kind": "capacitor", "nodes": (rect, "a"),
             "value": spec.coupling_capacitance},
            {"name": "D1", "kind": "diode", "nodes": (GROUND, "a"), "model": spec.diode},
            {"name": "Lc", "kind": "inductor", "nodes": ("a", "out"),
             "value": spec.choke_inductance},
        ]
        entry = "Cc"
    elif t == "voltage-doubler":
        els += [
            {"name": "Cc", "kind": "capacitor", "nodes": (rect, "a"),
             "value": spec.coupling_capacitance},
            {"name": "D1", "kind": "diode", "nodes": (GROUND, "a"), "model": spec.diode},
            {"name": "D2", "kind": "diode", "nodes": ("a", "out"), "model": spec.diode},
        ]
        entry = "Cc"
    else:
        els.append({"name": "Rx", "kind": "resistor", "nodes": (rect, GROUND),
                    "value": spec.stand_in_resistance})
        entry = "Rx"
        out = rect
    if t != "resistor":
        els += [
            {"name": "Cs", "kind": "capacitor", "nodes": ("out", GROUND),
             "value": spec.smoothing_capacitance},
            {"name": "RL", "kind": "resistor", "nodes": ("out", GROUND),
             "value": spec.load_resistance},
        ]
    probes = {"rect": (rect, entry), "port": ("in", "Rsrc")}
    return build_netlist(els), out, probes


@dataclass(frozen=True)
class PeriodicSolution:
    cycles: int
    v_dc: float
    ripple: float
    phasors: dict           # probe -> (V1, I1)
    last_cycle: dict        # "t", "v_out" and per-probe "v_<p>", "i_<p>" samples

    def impedance(self, probe):
        v, i = self.phasors[probe]
        return v / i


def fundamental(samples):
    """Complex fundamental coefficient of one period of uniformly spaced samples.

    The convention matches ``Re(c * exp(j w t))`` reconstruction.
    """
    n = len(samples)
    k = np.arange(n)
    return 2.0 / n * np.sum(samples * np.exp(-2j * np.pi * k / n))


def periodic_steady_state(net, frequency, out_node, probes, steps_per_period=200,
                          max_cycles=2000, rtol=1e-5, atol=1e-9, min_cycles=3,
                          shooting=True, window=30):
    """Integrate whole periods until the cycle-averaged ``out_node`` voltage settles.

    *probes* maps a label to ``(node, element)``: the node voltage and the
    element current (first terminal to second) whose fundamentals are
    extracted.

    Convergence needs the cycle-averaged output and every probe phasor to
    change by less than ``rtol`` (relative) between consecutive cycles. If the
    output still drifts by more than ``rtol`` across the last ``window`` cycles,
    the remaining distance projected from the per-cycle decay ratio must also be
    below ``10 * rtol``; this keeps a slow charge-up from passing as settled.

    With ``shooting`` the integration is seeded by a Newton solve of the
    one-period map (finite-difference Jacobian), which removes the slow
    smoothing-capacitor transient. Periods spent shooting count toward
    ``max_cycles``.
    """
    period = 1.0 / frequency
    n = int(steps_per_period)
    stepper = TransientStepper(net, period / n)
    used = 0
    if shooting:
        used = _shoot(stepper, n, budget=max_cycles // 4)
    K = int(window)
    hist = []
    prev = None
    for cycle in range(used + 1, max_cycles + 1):
        X, CI, DI = stepper.advance(n)
        t = (stepper.step_index - n + np.arange(n + 1)) * stepper.dt
        volts = stepper.node_voltages(X)
        amps = stepper.element_currents(t, X, CI, DI)
        vout = volts[out_node] if out_node != GROUND else np.zeros(n + 1)
        v_dc = float(np.mean(vout[1:]))
        ph = {label: (fundamental(volts[node][1:]), fundamental(amps[elem][1:]))
              for label, (node, elem) in probes.items()}
        hist.append(v_dc)
        if prev is not None and len(hist) > min_cycles:
            pv, pph = prev
            ok = abs(v_dc - pv) <= rtol * abs(v_dc) + atol
            for label, (v1, i1) in ph.items():
                ok = ok and abs(v1 - pph[label][0]) <= rtol * abs(v1) + 1e-12
                ok = ok and abs(i1 - pph[label][1]) <= rtol * abs(i1) + 1e-15
            if ok and len(hist) > 2 * K:
                ok = _settled(hist, K, rtol, atol)
            elif ok and len(hist) > K:
                ok = abs(v_dc - hist[-1 - K]) <= rtol * abs(v_dc) + atol
            if ok:
                stepper.check_step_size()
                last = {"t": t[1:] - t[1], "v_out": vout[1:]}
                for label, (node, elem) in probes.items():
                    last[f"v_{label}"] = volts[node][1:]
                    last[f"i_{label}"] = amps[elem][1:]
                log.debug("steady state after %d periods (%d shooting)", cycle, used)
                return PeriodicSolution(cycle, v_dc, float(np.ptp(vout[1:])), ph, last)
        prev = (v_dc, ph)
    raise NoConvergence(f"no periodic steady state within {max_cycles} cycles")


def _settled(hist, K, rtol, atol):
    v = hist[-1]
    d2 = hist[-1] - hist[-1 - K]
    if abs(d2) <= rtol * abs(v) + atol:
        return True
    d1 = hist[-1 - K] - hist[-1 - 2 * K]
    if d1 == 0 or d1 * d2 <= 0 or abs(d2) >= abs(d1):
        return False
    r = (d2 / d1) ** (1.0 / K)
    return abs(hist[-1] - hist[-2]) / (1 - r) <= 10 * rtol * abs(v) + atol


def _shoot(stepper, n, budget, tol=1e-9, max_iter=12, warmup=3, chord=6):
    """Seed the stepper near the periodic orbit. Returns periods consumed.

    Newton iteration on ``x -> P(x)``, the state one period after a
    backward-Euler restart, makes the node-voltage and branch-current vector a
    complete state. The restart step biases that fixed point slightly, so the
    result is refined by chord steps on the plain trapezoidal map, which
    reuse the last Jacobian. The stepper is left mid-run with consistent
    trapezoidal history.
    """
    cc = stepper.cc
    m = cc.size
    scale = np.where(np.arange(m) < cc.n_nodes, 1.0, 1e-3)
    zc, zd = np.zeros(len(cc.cv)), np.zeros(len(cc.dv))
    used = 0
    for _ in range(warmup):
        stepper.advance(n)
        used += 1
    x = stepper.state[0].copy()

    def P(x0):
        stepper.set_state(x0, zc, zd)
        return stepper.advance(n)[0][-1].copy()

    def norm(r):
        return float(np.max(np.abs(r) / scale))

    A = None
    best = None
    for _ in range(max_iter):
        if used + m + 1 > budget:
            break
        px = P(x)
        used += 1
        r = px - x
        err = norm(r)
        if best is None or err < best[0]:
            best = (err, x.copy())
        if err < tol and A is not None:
            break
        J = np.empty((m, m))
        for i in range(m):
            xi = x.copy()
            d = 1e-7 * (abs(x[i]) + scale[i])
            xi[i] += d
            J[:, i] = (P(xi) - px) / d
            used += 1
        A = np.eye(m) - J
        try:
            dx = np.linalg.solve(A, r)
        except np.linalg.LinAlgError:
            A = None
            break
        big = float(np.max(np.abs(dx[:cc.n_nodes]))) if cc.n_nodes else 0.0
        if big > 0.5:
            dx *= 0.5 / big
        x = x + dx
    if best is not None:
        x = best[1]
    stepper.set_state(x, zc, zd)
    if A is None:
        return used
    for _ in range(chord):
        if used + 2 > budget:
            break
        x1 = stepper.advance(n)[0][-1].copy()
        x2 = stepper.advance(n)[0][-1].copy()
        used += 2
        r = x2 - x1
        if norm(r) < tol:
            break
        stepper.set_state(x2 + np.linalg.solve(A, r) - r, zc, zd)
    return used


def steady_state(spec, p_in_dbm):
    """Drive *spec* at available power ``p_in_dbm`` to periodic steady state."""
    net, out, probes = rectifier_netlist(spec, p_in_dbm)
    sol = periodic_steady_state(net, spec.frequency, out, probes, spec.steps_per_period,
                                spec.max_cycles, spec.rtol)
    p_av = dbm_to_watts(p_in_dbm)
    v_dc = sol.v_dc
    eff = v_dc * v_dc / (spec.load_resistance * p_av)
    z_port = sol.impedance("port")
    gamma = abs(reflection_coefficient(z_port, spec.source_resistance)[0])
    log.debug("P=%.2f dBm: V_dc=%.6f V eff=%.4f cycles=%d", p_in_dbm, v_dc, eff, sol.cycles)
    return RectifierResult(p_in_dbm, v_dc, eff, sol.ripple, sol.impedance("rect"), z_port,
                           gamma, sol.cycles, p_av, sol.last_cycle)


def large_signal_input_impedance(spec, p_in_dbm, f=None):
    """Fundamental-frequency input impedance of the rectifier (after any matching)."""
    if f is not None:
        spec = replace(spec, frequency=f)
    return steady_state(spec, p_in_dbm).z_in


class AutoMatch(NamedTuple):
    network: Optional[LSection]
    gamma: float
    iterations: int


def auto_match(spec, p_in_dbm=-10.0, f=None, target=0.05, max_iter=10):
    """Fixed-point large-signal match of the rectifier to the source resistance.

    Each iteration synthesizes an L-section for the rectifier impedance
    extracted with the previous network in place, then re-extracts the port
    reflection with the new network inserted.
    """
    spec = replace(spec, matching=None, frequency=f or spec.frequency)
    z0 = spec.source_resistance
    r = steady_state(spec, p_in_dbm)
    if r.gamma < target:
        return AutoMatch(None, r.gamma, 0)
    best = AutoMatch(None, r.gamma, 0)
    z = r.z_in
    for it in range(1, max_iter + 1):
        sols = synthesize_l_section(z, z0, spec.frequency)
        if not sols:
            return best
        net = sols[0]
        r = steady_state(replace(spec, matching=net), p_in_dbm)
        log.info("auto_match iteration %d: |gamma| = %.4g", it, r.gamma)
        if r.gamma < best.gamma:
            best = AutoMatch(net, r.gamma, it)
        if r.gamma < target:
            return AutoMatch(net, r.gamma, it)
        z = r.z_in
    err = NoConvergence(f"auto_match did not reach |gamma| < {target} in {max_iter} "
                        f"iterations (best {best.gamma:.4g})", residual=best.gamma)
    err.best = best
    raise err


def default_spec(match_dbm=-10.0, **overrides):
    """Series-diode rectifier with the default card, auto-matched at ``match_dbm``."""
    spec = RectifierSpec(**overrides)
    m = auto_match(spec, match_dbm)
    return replace(spec, matching=m.network)


@dataclass(frozen=True)
class SweepRow:
    p_in_dbm: float
    v_dc: float
    efficiency: float
    z_in: complex
    error: Optional[str] = None

    @property
    def ok(self):
        return self.error is None


@dataclass(frozen=True)
class SweepResult:
    rows: tuple

    def __post_init__(self):
        p = [r.p_in_dbm for r in self.rows]
        if any(b <= a for a, b in zip(p, p[1:])):
            raise InvalidInput("sweep powers must be strictly increasing")

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows if r.ok])

    def write_csv(self, fh, comments=()):
        """Gnuplot-friendly CSV: ``#`` comment lines, then the fixed header."""
        for c in comments:
            fh.write(f"# {c}\n")
        for r in self.rows:
            if not r.ok:
                fh.write(f"# P_in_dBm={r.p_in_dbm:g} failed: {r.error}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in self.rows:
            if r.ok:
                w.writerow([f"{r.p_in_dbm:.6g}", f"{r.v_dc:.9g}", f"{r.efficiency:.9g}",
                            f"{r.z_in.real:.9g}", f"{r.z_in.imag:.9g}"])
            else:
                w.writerow([f"{r.p_in_dbm:.6g}", "nan", "nan", "nan", "nan"])


def read_sweep_csv(fh):
    """Read a sweep CSV written by :meth:`SweepResult.write_csv`."""
    lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    rd = csv.reader(lines)
    header = tuple(next(rd))
    if header != SWEEP_HEADER:
        raise InvalidInput(f"unexpected sweep header {header}")
    rows = []
    for rec in rd:
        p, v, e, re_, im = (float(x) for x in rec)
        if any(math.isnan(x) for x in (v, e, re_, im)):
            rows.append(SweepRow(p, v, e, complex(re_, im), error="failed"))
        else:
            rows.append(SweepRow(p, v, e, complex(re_, im)))
    return SweepResult(tuple(rows))


def _sweep_point(args):
    spec, p = args
    try:
        r = steady_state(spec, p)
        return SweepRow(p, r.v_dc, r.efficiency, r.z_in)
    except RectennaError as exc:
        return SweepRow(p, math.nan, math.nan, complex(math.nan, math.nan), error=str(exc))


def sweep_powers(start, stop, step):
    if step <= 0 or start > stop:
        raise InvalidInput("need start <= stop and step > 0")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(n)]


def power_sweep(spec, start=-20.0, stop=0.0, step=5.0, workers=1):
    """Steady-state rows over an input-power grid; failed rows carry an error marker."""
    jobs = [(spec, p) for p in sweep_powers(start, stop, step)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    return SweepResult(tuple(rows))
