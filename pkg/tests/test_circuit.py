import io
import math
import warnings

import numpy as np
import pytest

from rectenna.circuit import (OperatingPoint, TransientStepper, build_netlist, mna_matrix,
                              parse_netlist_text, sample_count, solve_ac, solve_dc,
                              solve_transient)
from rectenna.circuit.analysis import GMIN
from rectenna.diode import DiodeModelCard, diode_current
from rectenna.errors import (DanglingNode, EmptyCircuit, FloatingSubcircuit, InvalidInput,
                             NetlistError, NonlinearWithoutOP, NonPositiveValue,
                             SingularMatrix, StepTooLargeWarning)
from rectenna.matching import LSection
from rectenna.rectifier import RectifierSpec, rectifier_netlist


def R(name, a, b, v):
    return {"name": name, "kind": "resistor", "nodes": (a, b), "value": v}


def C(name, a, b, v):
    return {"name": name, "kind": "capacitor", "nodes": (a, b), "value": v}


def L(name, a, b, v):
    return {"name": name, "kind": "inductor", "nodes": (a, b), "value": v}


def V(name, a, b, dc=0.0, amp=0.0, f=0.0, phase=0.0):
    return {"name": name, "kind": "voltage-source", "nodes": (a, b),
            "source": {"dc": dc, "amplitude": amp, "frequency": f, "phase": phase}}


def lsq_phasor(t, y, f):
    """Least-squares fit of a sin(wt) + b cos(wt) + c; returns the phasor of A sin(wt + p)."""
    w = 2 * math.pi * f
    A = np.column_stack([np.sin(w * t), np.cos(w * t), np.ones_like(t)])
    (a, b, _), *_ = np.linalg.lstsq(A, y, rcond=None)
    return complex(a, b) * -1j  # A sin(wt+p) -> A e^{j(p - pi/2)}


class TestBuildNetlist:
    def test_single_resistor(self):
        net = build_netlist([R("R1", "a", "0", 1e3)])
        assert net.nodes == ("a",)

    def test_nodes_sorted(self):
        net = build_netlist([R("R1", "z", "0", 1), R("R2", "z", "b", 1), R("R3", "b", "gnd", 1)])
        assert net.nodes == ("b", "z")

    def test_empty(self):
        with pytest.raises(EmptyCircuit):
            build_netlist([])

    def test_dangling(self):
        with pytest.raises(DanglingNode):
            build_netlist({"nodes": ["a"], "elements": [R("R1", "a", "x", 1.0)]})

    def test_floating(self):
        with pytest.raises(FloatingSubcircuit):
            build_netlist([R("R1", "a", "0", 1.0), R("R2", "b", "c", 1.0)])

    @pytest.mark.parametrize("value", [0.0, -1.0, float("nan")])
    def test_non_positive(self, value):
        with pytest.raises(NonPositiveValue):
            build_netlist([C("C1", "a", "0", value)])

    def test_negative_amplitude(self):
        with pytest.raises(NonPositiveValue):
            build_netlist([V("V1", "a", "0", amp=-1.0, f=1e6), R("R1", "a", "0", 1.0)])

    def test_duplicate_names(self):
        with pytest.raises(NetlistError):
            build_netlist([R("R1", "a", "0", 1.0), R("R1", "a", "0", 2.0)])

    def test_default_rectifier_has_four_nodes(self):
        m = LSection("series-first", "inductor", 40e-9, "capacitor", 0.05e-12, 1.8e9)
        net, out, _ = rectifier_netlist(RectifierSpec(matching=m), -10)
        assert len(net.nodes) == 4 and out == "out"

    def test_text_netlist(self):
        net = parse_netlist_text("""
            * divider
            V1 in 0 DC 2
            R1 in mid 1k
            R2 mid 0 1k   # lower leg
            C1 mid 0 10p
            Vs s 0 SIN(0 1 1meg 90)
            Rs s 0 50
            D1 mid 0
            .end
        """)
        assert net.element("R1").value == 1e3
        assert net.element("C1").value == pytest.approx(10e-12)
        src = net.element("Vs").source
        assert (src.amplitude, src.frequency, src.phase) == (1.0, 1e6, pytest.approx(math.pi / 2))
        assert net.element("D1").model == DiodeModelCard()

    def test_replace_element(self):
        net = build_netlist([V("V1", "a", "0", dc=1.0), R("R1", "a", "0", 1e3)])
        assert net.replace("R1", value=2e3).element("R1").value == 2e3


class TestDC:
    def test_ohm(self):
        op = solve_dc(build_netlist([V("V1", "a", "0", dc=1.0), R("R1", "a", "0", 1e3)]))
        assert op.voltages["a"] == pytest.approx(1.0, abs=1e-12)
        # passive convention: current enters the + terminal, so a source delivering 1 mA reads -1 mA
        assert op.currents["V1"] == pytest.approx(-1e-3, rel=1e-9)
        assert op.residual < 1e-9

    def test_divider(self):
        net = build_netlist([V("V1", "a", "0", dc=2.0), R("R1", "a", "m", 1e3),
                             R("R2", "m", "0", 1e3)])
        assert solve_dc(net).voltages["m"] == pytest.approx(1.0, rel=1e-9)

    def test_inductor_short_capacitor_open(self):
        net = build_netlist([V("V1", "a", "0", dc=1.0), L("L1", "a", "b", 1e-6),
                             R("R1", "b", "0", 100.0), C("C1", "b", "0", 1e-9)])
        op = solve_dc(net)
        assert op.voltages["b"] == pytest.approx(1.0, rel=1e-9)
        assert op.currents["L1"] == pytest.approx(0.01, rel=1e-9)

    def test_diode_bisection_oracle(self):
        card = DiodeModelCard()
        net = build_netlist([V("V1", "a", "0", dc=0.5), R("R1", "a", "b", 100.0),
                             {"name": "D1", "kind": "diode", "nodes": ("b", "0")}])
        op = solve_dc(net)

        def mismatch(vj):
            # current through Rs, the anode voltage it implies, and the KCL error at the anode
            i = float(diode_current(vj, card)) + GMIN * vj
            vb = vj + card.Rs * i
            return (0.5 - vb) / 100.0 - GMIN * vb - i

        lo, hi = 0.0, 0.5
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if mismatch(mid) > 0 else (lo, mid)
        vj = 0.5 * (lo + hi)
        assert op.voltages["D1#j"] == pytest.approx(vj, abs=1e-12)
        assert 0.1 < vj < 0.3

    def test_voltage_source_loop_is_singular(self):
        net = build_netlist([V("V1", "a", "0", dc=1.0), V("V2", "a", "0", dc=2.0),
                             R("R1", "a", "0", 1.0)])
        with pytest.raises(SingularMatrix):
            solve_dc(net)

    def test_inductor_source_loop_is_singular_at_dc(self):
        net = build_netlist([V("V1", "a", "0", dc=1.0), L("L1", "a", "0", 1e-9)])
        with pytest.raises(SingularMatrix):
            solve_dc(net)


class TestAC:
    def test_series_resonance_is_real(self):
        Ls, Cs = 16.67e-9, 0.4698e-12
        f0 = 1 / (2 * math.pi * math.sqrt(Ls * Cs))
        net = build_netlist([R("R1", "p", "a", 10.0), L("L1", "a", "b", Ls),
                             C("C1", "b", "0", Cs)])
        z = solve_ac(net, [f0], port="p").z_port[0]
        assert z.real == pytest.approx(10.0, rel=1e-6)
        assert abs(z.imag) < 1e-6 * 10.0

    def test_capacitor_reactance(self):
        z = solve_ac(build_netlist([C("C1", "p", "0", 1e-12)]), [1.8e9], port="p").z_port[0]
        assert z.imag == pytest.approx(-1 / (2 * math.pi * 1.8e9 * 1e-12), rel=1e-9)
        assert z.imag == pytest.approx(-88.42, abs=0.01)

    def test_resistor_frequency_independent(self):
        z = solve_ac(build_netlist([R("R1", "p", "0", 75.0)]), [1.0, 1e6, 1e10], port="p").z_port
        np.testing.assert_allclose(z, 75.0, rtol=1e-9)

    def test_diode_needs_operating_point(self):
        net = build_netlist([V("V1", "a", "0", dc=0.1), {"name": "D1", "kind": "diode",
                                                          "nodes": ("a", "0")}])
        with pytest.raises(NonlinearWithoutOP):
            solve_ac(net, [1e6])

    def test_linearized_diode(self):
        net = build_netlist([V("V1", "a", "0", dc=0.2), R("R1", "a", "b", 1e3),
                             {"name": "D1", "kind": "diode", "nodes": ("b", "0"),
                              "model": DiodeModelCard(Rs=0.0, Cj0=0.0)}])
        op = solve_dc(net)
        z = solve_ac(net, [1e3], port="b", op=op).z_port[0]
        g = (diode_current(op.voltages["b"] + 1e-7) - diode_current(op.voltages["b"] - 1e-7)) / 2e-7
        assert z.real == pytest.approx(1 / (g + 1e-3 + 2 * GMIN), rel=1e-5)


class TestTransient:
    def test_rc_step(self):
        net = build_netlist([V("V1", "a", "0", dc=1.0), R("R1", "a", "b", 1e3),
                             C("C1", "b", "0", 1e-9)])
        w = solve_transient(net, 1e-6, 1e-9)
        assert len(w) == 1001
        assert w.voltages["b"][-1] == pytest.approx(1 - math.exp(-1), rel=1e-3)
        assert w.voltages["b"][-1] == pytest.approx(0.63212, rel=1e-3)

    def test_sample_count(self):
        assert sample_count(1e-6, 1e-9) == 1001
        assert sample_count(1.05e-6, 1e-7) == 11
        w = solve_transient(build_netlist([R("R1", "a", "0", 1.0)]), 1e-6, 3e-7)
        assert len(w) == 4 and np.all(np.diff(w.time) > 0)

    def test_zero_input_zero_state(self):
        net = build_netlist([V("V1", "a", "0", amp=0.0, f=1e9), R("R1", "a", "b", 50.0),
                             {"name": "D1", "kind": "diode", "nodes": ("b", "c")},
                             C("C1", "c", "0", 1e-12), L("L1", "c", "0", 1e-9)])
        w = solve_transient(net, 5e-9, 5e-12)
        for arr in list(w.voltages.values()) + list(w.currents.values()):
            assert np.all(arr == 0.0)

    def test_resistive_divider_sine(self):
        f = 1.8e9
        T = 1 / f
        net = build_netlist([V("V1", "a", "0", amp=1.0, f=f), R("R1", "a", "b", 50.0),
                             R("R2", "b", "0", 50.0)])
        w = solve_transient(net, 6 * T, T / 200)
        tail = w.voltages["b"][w.time > 5 * T]
        assert np.max(np.abs(tail)) == pytest.approx(0.5, rel=5e-3)

    def test_matches_ac_on_rlc(self):
        f = 1e6
        T = 1 / f
        net = build_netlist([V("V1", "s", "0", amp=1.0, f=f, phase=0.3), R("R1", "s", "a", 50.0),
                             L("L1", "a", "b", 5e-6), C("C1", "b", "0", 4e-9),
                             R("R2", "b", "0", 100.0)])
        ac = solve_ac(net, [f])
        w = solve_transient(net, 20 * T, T / 200)
        sel = w.time >= 10 * T
        for node in ("a", "b"):
            got = lsq_phasor(w.time[sel], w.voltages[node][sel], f)
            want = ac.voltages[node][0]
            assert abs(got - want) < 0.01 * abs(want)

    def test_dc_asymptote(self):
        net = build_netlist([V("V1", "a", "0", dc=1.5), R("R1", "a", "b", 100.0),
                             L("L1", "b", "c", 1e-6), C("C1", "c", "0", 1e-9),
                             R("R2", "c", "0", 300.0)])
        op = solve_dc(net)
        w = solve_transient(net, 20e-6, 1e-9)
        for n in ("b", "c"):
            assert abs(w.voltages[n][-1] - op.voltages[n]) < 1e-6

    def test_second_order_convergence(self):
        f = 1e6
        net = build_netlist([V("V1", "a", "0", amp=1.0, f=f), R("R1", "a", "b", 1e3),
                             C("C1", "b", "0", 200e-12)])
        t_end = 1.3e-6
        v = [solve_transient(net, t_end, dt).voltages["b"][-1]
             for dt in (t_end / 100, t_end / 200, t_end / 400)]
        e1, e2 = abs(v[0] - v[1]), abs(v[1] - v[2])
        assert e1 / e2 > 3.0

    def test_passive_decay_energy(self):
        Cv, Lv = 1e-9, 1e-6
        net = build_netlist([C("C1", "a", "0", Cv), L("L1", "a", "b", Lv), R("R1", "b", "0", 5.0)])
        init = OperatingPoint({"a": 1.0, "b": 0.0}, {"L1": 0.0})
        w = solve_transient(net, 2e-6, 1e-9, init)
        E = 0.5 * Cv * w.voltages["a"] ** 2 + 0.5 * Lv * w.currents["L1"] ** 2
        assert np.all(np.diff(E) <= 1e-12 * E[0])
        assert E[-1] < 0.5 * E[0]

    def test_lossless_lc_conserves_energy(self):
        Cv, Lv = 1e-9, 1e-6
        net = build_netlist([C("C1", "a", "0", Cv), L("L1", "a", "0", Lv)])
        init = OperatingPoint({"a": 1.0}, {"L1": 0.0})
        w = solve_transient(net, 2e-6, 1e-9, init)
        E = 0.5 * Cv * w.voltages["a"] ** 2 + 0.5 * Lv * w.currents["L1"] ** 2
        # only the node gmin dissipates
        assert np.all(np.diff(E) <= 1e-12 * E[0])
        assert E[-1] == pytest.approx(E[0], rel=1e-3)

    def test_bad_step(self):
        net = build_netlist([R("R1", "a", "0", 1.0)])
        with pytest.raises(InvalidInput):
            solve_transient(net, 1e-6, 0.0)
        with pytest.raises(InvalidInput):
            solve_transient(net, 1e-9, 1e-6)

    def test_step_too_large_advisory(self):
        st = TransientStepper(build_netlist([R("R1", "a", "0", 1.0)]), 1e-9)
        st.total_steps, st.heavy_steps = 100, 2
        with pytest.warns(StepTooLargeWarning):
            st.check_step_size()

    def test_waveform_csv(self):
        net = build_netlist([V("V1", "a", "0", dc=1.0), R("R1", "a", "0", 2.0)])
        buf = io.StringIO()
        solve_transient(net, 2e-9, 1e-9).write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "time_s,v(a),i(V1),i(R1)"
        assert len(lines) == 4
        assert lines[-1].split(",")[1] == "1"

    def test_rectifier_dt_convergence(self):
        f = 1.8e9
        T = 1 / f
        net = build_netlist([V("V1", "s", "0", amp=1.0, f=f), R("R1", "s", "a", 50.0),
                             {"name": "D1", "kind": "diode", "nodes": ("a", "o")},
                             C("C1", "o", "0", 2e-12), R("RL", "o", "0", 1e3)])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StepTooLargeWarning)
            v = [solve_transient(net, 3 * T, T / n).voltages["o"][-1] for n in (100, 200, 400)]
        e1, e2 = abs(v[0] - v[1]), abs(v[1] - v[2])
        assert e1 / e2 > 3.0


class TestMatrix:
    def test_rlc_symmetric(self):
        net = build_netlist([V("V1", "s", "0", dc=1.0), R("R1", "s", "a", 50.0),
                             L("L1", "a", "b", 1e-9), C("C1", "b", "0", 1e-12),
                             R("R2", "b", "c", 10.0), L("L2", "c", "0", 2e-9),
                             C("C2", "a", "c", 3e-12)])
        for mode in ("dc", "be", "trap"):
            J, cc = mna_matrix(net, mode, 1e-12)
            np.testing.assert_array_equal(J, J.T)

    def test_diode_breaks_no_structure(self):
        net = build_netlist([V("V1", "a", "0", dc=1.0),
                             {"name": "D1", "kind": "diode", "nodes": ("a", "0")}])
        J, cc = mna_matrix(net)
        assert J.shape == (cc.size, cc.size) == (3, 3)
