"""Figure rendering for CLI runs: control traces and waveform overview."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# keep figures responsive on hour-long runs
MAX_POINTS = 200_000


def _thin(*arrays):
    n = len(arrays[0])
    step = max(1, n // MAX_POINTS)
    return [a[::step] for a in arrays]


def render_controls(path, fs: float, f0_hz, gate_mode, rfs, delay, envelope):
    """Four stacked panels: pitch/gate, frequency shift, delay, envelope."""
    t = np.arange(len(delay)) / fs
    t, f0_hz, gate_mode, rfs, delay, envelope = _thin(
        t, f0_hz, gate_mode, rfs, delay, envelope)
    fig, axes = plt.subplots(4, 1, figsize=(10, 9), sharex=True)

    ax = axes[0]
    ax.plot(t, f0_hz, color="tab:blue", lw=0.8, label="f0 estimate")
    ax.set_ylabel("f0 [Hz]")
    gate_ax = ax.twinx()
    gate_ax.step(t, gate_mode, color="tab:gray", lw=0.8, alpha=0.6, where="post")
    gate_ax.set_yticks([0, 1, 2, 3])
    gate_ax.set_yticklabels(["inactive", "arming", "active", "releasing"])
    gate_ax.set_ylim(-0.2, 3.2)

    axes[1].plot(t, rfs, color="tab:green", lw=0.8)
    axes[1].set_ylabel("rel. freq. shift")
    axes[2].plot(t, delay, color="tab:red", lw=0.8)
    axes[2].axhline(512.0, color="black", lw=0.5, ls=":")
    axes[2].set_ylabel("delay [samples]")
    axes[3].plot(t, envelope, color="tab:purple", lw=0.8)
    axes[3].set_ylabel("envelope")
    axes[3].set_xlabel("time [s]")

    fig.align_ylabels(axes)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_waveforms(path, fs: float, input_wave, sidechain, output_wave):
    """Input, sidechain, and processed output on a shared time axis."""
    t = np.arange(len(input_wave)) / fs
    t, input_wave, sidechain, output_wave = _thin(
        t, input_wave, sidechain, output_wave)
    fig, axes = plt.subplots(3, 1, figsize=(10, 7), sharex=True)
    for ax, y, label in zip(axes, (input_wave, sidechain, output_wave),
                            ("input", "sidechain", "output")):
        ax.plot(t, y, lw=0.5)
        ax.set_ylabel(label)
    axes[2].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
