"""DC, small-signal AC and fixed-step transient analyses."""
import csv
from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from . import kernel
from .netlist import GROUND
from ..diode import depletion, junction
from ..errors import (InvalidInput, NoConvergence, NonlinearWithoutOP, SingularMatrix,
                      StepTooLargeWarning)

# Newton controls
ABSTOL = 1e-9      # A (KCL rows) and V (branch rows)
RELTOL = 1e-9
VNTOL = 1e-12
MAXIT = 100
GMIN = 1e-12       # S, shunted from every node to ground


@dataclass(frozen=True)
class OperatingPoint:
    voltages: dict          # node -> V (diode junction nodes appear as "<name>#j")
    currents: dict          # inductor / voltage-source name -> A (passive convention)
    x: np.ndarray = field(default=None, repr=False, compare=False)
    residual: float = 0.0
    iterations: int = 0


@dataclass(frozen=True)
class Waveform:
    time: np.ndarray
    voltages: dict          # node -> samples
    currents: dict          # element -> samples (passive convention)

    def __len__(self):
        return len(self.time)

    def write_csv(self, fh):
        """Write ``time_s`` followed by ``v(node)`` and ``i(element)`` columns."""
        w = csv.writer(fh, lineterminator="\n")
        vn = list(self.voltages)
        cn = list(self.currents)
        w.writerow(["time_s"] + [f"v({n})" for n in vn] + [f"i({n})" for n in cn])
        cols = [self.time] + [self.voltages[n] for n in vn] + [self.currents[n] for n in cn]
        for row in zip(*cols):
            w.writerow([f"{v:.12g}" for v in row])


class Compiled:
    """Index maps and packed element arrays for the kernels."""

    def __init__(self, net):
        self.net = net
        nodes = list(net.nodes)
        internal = [f"{e.name}#j" for e in net.elements
                    if e.kind == "diode" and e.model.Rs > 0]
        self.node_names = nodes + internal
        self.n_nodes = len(self.node_names)
        idx = {n: i for i, n in enumerate(self.node_names)}
        idx[GROUND] = -1
        self.index = idx

        vsrc = [e for e in net.elements if e.kind == "voltage-source"]
        inds = [e for e in net.elements if e.kind == "inductor"]
        self.branch = {}
        for k, e in enumerate(vsrc + inds):
            self.branch[e.name] = self.n_nodes + k
        self.size = self.n_nodes + len(self.branch)

        R, C, L, V, I, D = [], [], [], [], [], []
        for e in net.elements:
            a, b = idx[e.nodes[0]], idx[e.nodes[1]]
            if e.kind == "resistor":
                R.append((a, b, 1.0 / e.value))
            elif e.kind == "capacitor":
                C.append((a, b, e.value))
            elif e.kind == "inductor":
                L.append((a, b, self.branch[e.name], e.value))
            elif e.kind == "voltage-source":
                s = e.source
                V.append((a, b, self.branch[e.name], s.dc, s.amplitude,
                          2 * math.pi * s.frequency, s.phase))
            elif e.kind == "current-source":
                s = e.source
                I.append((a, b, s.dc, s.amplitude, 2 * math.pi * s.frequency, s.phase))
            else:
                m = e.model
                if m.Rs > 0:
                    j = idx[f"{e.name}#j"]
                    R.append((a, j, 1.0 / m.Rs))
                    a = j
                D.append((a, b, m.params()))
        self.ri = np.array([r[:2] for r in R], dtype=np.int64).reshape(-1, 2)
        self.rv = np.array([r[2] for r in R], dtype=float)
        self.ci = np.array([c[:2] for c in C], dtype=np.int64).reshape(-1, 2)
        self.cv = np.array([c[2] for c in C], dtype=float)
        self.li = np.array([l[:3] for l in L], dtype=np.int64).reshape(-1, 3)
        self.lv = np.array([l[3] for l in L], dtype=float)
        self.vi = np.array([v[:3] for v in V], dtype=np.int64).reshape(-1, 3)
        self.vv = np.array([v[3:] for v in V], dtype=float).reshape(-1, 4)
        self.ii = np.array([i[:2] for i in I], dtype=np.int64).reshape(-1, 2)
        self.iv = np.array([i[2:] for i in I], dtype=float).reshape(-1, 4)
        self.di = np.array([d[:2] for d in D], dtype=np.int64).reshape(-1, 2)
        self.dv = np.array([d[2] for d in D], dtype=float).reshape(-1, 8)

    def arrays(self):
        return (self.ri, self.rv, self.ci, self.cv, self.li, self.lv,
                self.vi, self.vv, self.ii, self.iv, self.di, self.dv)

    def zero_states(self):
        return (np.zeros(self.size), np.zeros(len(self.cv)), np.zeros(len(self.dv)),
                np.zeros(len(self.dv)))

    def states_from(self, x):
        """Element states consistent with a quiescent (DC) solution ``x``."""
        capi = np.zeros(len(self.cv))
        dq = np.zeros(len(self.dv))
        dic = np.zeros(len(self.dv))
        kernel.element_states(x, kernel.MODE_DC, 1.0, self.ci, self.cv, self.di, self.dv,
                              x, capi, dq, dic, capi, dq, dic)
        return x.copy(), capi, dq, dic

    def vector_from(self, op):
        x = np.zeros(self.size)
        for n, v in op.voltages.items():
            if n in self.index and self.index[n] >= 0:
                x[self.index[n]] = v
        for n, i in op.currents.items():
            if n in self.branch:
                x[self.branch[n]] = i
        return x

    def check_source_loops(self, include_inductors):
        """Raise SingularMatrix on a loop made only of voltage sources (and inductors at DC)."""
        parent = {}

        def find(u):
            while parent.get(u, u) != u:
                u = parent[u]
            return u

        for e in self.net.elements:
            if e.kind == "voltage-source" or (include_inductors and e.kind == "inductor"):
                ra, rb = find(e.nodes[0]), find(e.nodes[1])
                if ra == rb:
                    raise SingularMatrix(f"loop of voltage sources/inductors closed by {e.name}")
                parent[ra] = rb


def _compile(net):
    return Compiled(net)


def mna_matrix(net, mode="dc", dt=None):
    """Newton Jacobian of the MNA system at the zero state.

    ``mode`` is ``"dc"``, ``"be"`` or ``"trap"`` (the latter two need ``dt``).
    """
    cc = _compile(net)
    m = {"dc": kernel.MODE_DC, "be": kernel.MODE_BE, "trap": kernel.MODE_TRAP}[mode]
    x, capi, dq, dic = cc.zero_states()
    J = np.zeros((cc.size, cc.size))
    F = np.zeros(cc.size)
    kernel.assemble(x, 0.0, m, dt or 1.0, GMIN, 1.0, cc.n_nodes, *cc.arrays(),
                    x, capi, dq, dic, J, F)
    return J, cc


def _op_from_x(cc, x, residual=0.0, iterations=0):
    volts = {n: float(x[cc.index[n]]) for n in cc.node_names}
    amps = {n: float(x[k]) for n, k in cc.branch.items()}
    return OperatingPoint(volts, amps, x.copy(), residual, iterations)


def solve_dc(net, x0=None):
    """Newton-Raphson DC operating point (inductors short, capacitors open).

    Falls back to source stepping when the direct solve does not converge.
    """
    cc = _compile(net)
    cc.check_source_loops(include_inductors=True)
    x = np.zeros(cc.size) if x0 is None else np.array(x0, dtype=float)
    _, capi, dq, dic = cc.zero_states()

    def attempt(xg, scale):
        return kernel.newton(xg, 0.0, kernel.MODE_DC, 1.0, GMIN, scale, cc.n_nodes,
                             *cc.arrays(), xg, capi, dq, dic, MAXIT, ABSTOL, RELTOL, VNTOL)

    xt = x.copy()
    status, it, res = attempt(xt, 1.0)
    if status == kernel.SINGULAR:
        raise SingularMatrix("singular MNA matrix in DC analysis")
    if status != kernel.OK:
        xt = np.zeros(cc.size)
        total = it
        for scale in np.linspace(0.05, 1.0, 20):
            status, it, res = attempt(xt, scale)
            total += it
            if status == kernel.SINGULAR:
                raise SingularMatrix("singular MNA matrix in DC analysis")
            if status != kernel.OK:
                raise NoConvergence(f"DC analysis did not converge (residual {res:.3e} A)",
                                    residual=res)
        it = total
    return _op_from_x(cc, xt, res, it)


@dataclass(frozen=True)
class AcResult:
    freqs: np.ndarray
    voltages: dict          # node -> complex array
    currents: dict          # branch -> complex array
    z_port: np.ndarray = None


def _ac_matrix(cc, w, op):
    n = cc.size
    Y = np.zeros((n, n), dtype=complex)

    def stamp(a, b, y):
        if a >= 0:
            Y[a, a] += y
        if b >= 0:
            Y[b, b] += y
        if a >= 0 and b >= 0:
            Y[a, b] -= y
            Y[b, a] -= y

    for i in range(cc.n_nodes):
        Y[i, i] += GMIN
    for (a, b), g in zip(cc.ri, cc.rv):
        stamp(a, b, g)
    for (a, b), c in zip(cc.ci, cc.cv):
        stamp(a, b, 1j * w * c)
    for (a, b, k), l in zip(cc.li, cc.lv):
        for node, sgn in ((a, 1.0), (b, -1.0)):
            if node >= 0:
                Y[node, k] += sgn
                Y[k, node] += sgn
        Y[k, k] -= 1j * w * l
    for (a, b, k) in cc.vi:
        for node, sgn in ((a, 1.0), (b, -1.0)):
            if node >= 0:
                Y[node, k] += sgn
                Y[k, node] += sgn
    if len(cc.dv):
        x = cc.vector_from(op)
        for (a, b), p in zip(cc.di, cc.dv):
            vd = (x[a] if a >= 0 else 0.0) - (x[b] if b >= 0 else 0.0)
            g = junction(vd, p[0], p[1], p[2], p[3], p[4])[1]
            c = depletion(vd, p[5], p[6], p[7])[1]
            stamp(a, b, g + 1j * w * c)
    return Y


def solve_ac(net, freqs, port=None, op=None):
    """Small-signal phasor analysis.

    Sinusoidal sources act as AC stimuli with their amplitude and phase
    (``A sin(wt + p)`` maps to the phasor ``A exp(j(p - pi/2))``); DC values are
    ignored. When ``port`` (a node name or ``(node+, node-)`` pair) is given, the
    driving-point impedance seen there with all independent sources zeroed is
    returned in ``z_port``. Diodes require an operating point ``op``.
    """
    if not net.is_linear and op is None:
        raise NonlinearWithoutOP("circuit has diodes; pass an operating point to linearize")
    cc = _compile(net)
    cc.check_source_loops(include_inductors=False)
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    sols = np.zeros((len(freqs), cc.size), dtype=complex)
    zp = np.zeros(len(freqs), dtype=complex) if port is not None else None
    if port is not None:
        if isinstance(port, str):
            port = (port, GROUND)
        pa, pb = cc.index[port[0]], cc.index[port[1]]

    for m, f in enumerate(freqs):
        Y = _ac_matrix(cc, 2 * math.pi * f, op)
        rhs = np.zeros(cc.size, dtype=complex)
        for (a, b, k), p in zip(cc.vi, cc.vv):
            rhs[k] = p[1] * np.exp(1j * (p[3] - math.pi / 2))
        for (a, b), p in zip(cc.ii, cc.iv):
            ph = p[1] * np.exp(1j * (p[3] - math.pi / 2))
            if a >= 0:
                rhs[a] -= ph
            if b >= 0:
                rhs[b] += ph
        try:
            sols[m] = np.linalg.solve(Y, rhs)
            if port is not None:
                inj = np.zeros(cc.size, dtype=complex)
                if pa >= 0:
                    inj[pa] = 1.0
                if pb >= 0:
                    inj[pb] = -1.0
                z = np.linalg.solve(Y, inj)
                zp[m] = (z[pa] if pa >= 0 else 0) - (z[pb] if pb >= 0 else 0)
        except np.linalg.LinAlgError:
            raise SingularMatrix(f"singular MNA matrix at {f:g} Hz") from None
    volts = {n: sols[:, cc.index[n]] for n in net.nodes}
    amps = {n: sols[:, k] for n, k in cc.branch.items()}
    return AcResult(freqs, volts, amps, zp)


class TransientStepper:
    """Fixed-step trapezoidal integrator that can be advanced in chunks.

    The first step after construction uses backward Euler so that an arbitrary
    (possibly inconsistent) initial state does not seed the trapezoidal
    history with a wrong derivative.
    """

    def __init__(self, net, dt, initial=None):
        if not dt > 0:
            raise InvalidInput("dt must be > 0")
        self.cc = _compile(net)
        self.cc.check_source_loops(include_inductors=False)
        self.dt = float(dt)
        if initial is None or initial == "zero":
            self.state = self.cc.zero_states()
        else:
            self.state = self.cc.states_from(self.cc.vector_from(initial))
        self.step_index = 0
        self.restart = True
        self.heavy_steps = 0
        self.total_steps = 0

    @property
    def time(self):
        return self.step_index * self.dt

    def advance(self, nsteps):
        """Integrate ``nsteps`` steps; returns raw sample arrays (row 0 = current state)."""
        cc = self.cc
        x, capi, dq, dic = self.state
        X, CI, DQ, DI, iters, status, tf, res = kernel.run_steps(
            x, capi, dq, dic, self.time, self.dt, nsteps, self.restart, GMIN,
            cc.n_nodes, *cc.arrays(), MAXIT, ABSTOL, RELTOL, VNTOL)
        if status == kernel.SINGULAR:
            raise SingularMatrix(f"singular MNA matrix at t = {tf:.6e} s")
        if status != kernel.OK:
            raise NoConvergence(f"Newton failed at t = {tf:.6e} s (residual {res:.3e})",
                                residual=res, time=tf)
        self.heavy_steps += int(np.count_nonzero(iters > 50))
        self.total_steps += nsteps
        self.step_index += nsteps
        self.restart = False
        self.state = (X[-1].copy(), CI[-1].copy(), DQ[-1].copy(), DI[-1].copy())
        return X, CI, DI

    def set_state(self, x, capi, dic):
        """Replace the integrator state; the next step restarts with backward Euler."""
        cc = self.cc
        dq = np.zeros(len(cc.dv))
        scratch = np.zeros(len(cc.dv))
        kernel.element_states(x, kernel.MODE_DC, 1.0, cc.ci, cc.cv, cc.di, cc.dv,
                              x, capi, dq, scratch, np.zeros(len(cc.cv)), dq, scratch)
        self.state = (np.array(x, dtype=float), np.array(capi, dtype=float), dq,
                      np.array(dic, dtype=float))
        self.restart = True

    def element_currents(self, t, X, CI, DI):
        """Per-element currents (passive convention) for sample arrays from :meth:`advance`."""
        cc = self.cc
        out = {}
        ci_k = di_k = 0
        for e in cc.net.elements:
            a, b = cc.index[e.nodes[0]], cc.index[e.nodes[1]]
            va = X[:, a] if a >= 0 else 0.0
            vb = X[:, b] if b >= 0 else 0.0
            if e.kind == "resistor":
                out[e.name] = (va - vb) / e.value
            elif e.kind == "capacitor":
                out[e.name] = CI[:, ci_k].copy()
                ci_k += 1
            elif e.kind in ("inductor", "voltage-source"):
                out[e.name] = X[:, cc.branch[e.name]].copy()
            elif e.kind == "current-source":
                s = e.source
                out[e.name] = s.dc + s.amplitude * np.sin(2 * np.pi * s.frequency * t + s.phase)
            else:
                if e.model.Rs > 0:
                    j = cc.index[f"{e.name}#j"]
                    out[e.name] = (va - X[:, j]) / e.model.Rs
                else:
                    p = cc.dv[di_k]
                    ij = np.array([junction(v, p[0], p[1], p[2], p[3], p[4])[0]
                                   for v in np.atleast_1d(va - vb)])
                    out[e.name] = ij + DI[:, di_k]
                di_k += 1
        return out

    def node_voltages(self, X):
        cc = self.cc
        return {n: X[:, cc.index[n]].copy() for n in cc.net.nodes}

    def check_step_size(self):
        if self.total_steps and self.heavy_steps > 0.01 * self.total_steps:
            warnings.warn(f"Newton needed >50 iterations on {self.heavy_steps} of "
                          f"{self.total_steps} steps; consider a smaller dt",
                          StepTooLargeWarning, stacklevel=3)


def sample_count(t_stop, dt):
    return int(math.floor(t_stop / dt * (1 + 1e-12))) + 1


def solve_transient(net, t_stop, dt, initial=None):
    """Fixed-step trapezoidal transient over ``[0, t_stop]``.

    ``initial`` is an :class:`OperatingPoint` or ``None``/``"zero"`` for the
    all-zero state.
    """
    if not dt > 0:
        raise InvalidInput("dt must be > 0")
    if t_stop < dt:
        raise InvalidInput("t_stop must be >= dt")
    stepper = TransientStepper(net, dt, initial)
    n = sample_count(t_stop, dt)
    X, CI, DI = stepper.advance(n - 1)
    t = np.arange(n) * dt
    stepper.check_step_size()
    return Waveform(t, stepper.node_voltages(X), stepper.element_currents(t, X, CI, DI))
