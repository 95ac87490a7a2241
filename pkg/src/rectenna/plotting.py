"""PNG figures for sweep and impedance reports (Agg backend, no display)."""
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
import numpy as np


def _save(fig, path):
    FigureCanvasAgg(fig)
    fig.tight_layout()
    # no Software/date metadata so identical inputs give identical files
    fig.savefig(path, dpi=120, metadata={"Software": None})


def plot_sweep(result, path):
    """Output voltage and efficiency against input power."""
    rows = [r for r in result.rows if r.ok]
    p = np.array([r.p_in_dbm for r in rows])
    fig = Figure(figsize=(6.4, 3.2))
    ax1, ax2 = fig.subplots(1, 2)
    ax1.plot(p, [r.v_dc for r in rows], "o-")
    ax1.set_xlabel("input power (dBm)")
    ax1.set_ylabel("output DC voltage (V)")
    ax2.plot(p, [100 * r.efficiency for r in rows], "s-", color="C1")
    ax2.set_xlabel("input power (dBm)")
    ax2.set_ylabel("RF-DC efficiency (%)")
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3)
    _save(fig, path)


def plot_impedance(p_dbm, z, path):
    """Real and imaginary input impedance against input power."""
    z = np.asarray(z, dtype=complex)
    fig = Figure(figsize=(4.8, 3.2))
    ax = fig.subplots()
    ax.plot(p_dbm, z.real, "o-", label="Re Z_in")
    ax.plot(p_dbm, z.imag, "s--", label="Im Z_in")
    ax.set_xlabel("input power (dBm)")
    ax.set_ylabel("impedance (ohm)")
    ax.grid(alpha=0.3)
    ax.legend()
    _save(fig, path)
