"""Command-line front end: stream one WAV through the effect, driven by another.

Simulates real-time use by pushing both files through the analyzer and
engine in small blocks (64 samples by default). Optionally dumps the
per-sample control traces as CSV and renders overview figures.
"""

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analyzer import GateMode, SidechainAnalyzer
from .audiofiles import read_wav, write_wav
from .engine import TransferEngine, TransferParams
from .report import render_controls, render_waveforms

DEFAULT_BLOCK = 64
MIN_BLOCK = 16
MAX_BLOCK = 2048
CSV_HEADER = "sample,f0_hz,gate,rfs,delay_samples,envelope"
_CSV_CHUNK = 65536
_GATE_NAMES = tuple(m.name.lower() for m in GateMode)


@dataclass(frozen=True)
class RunConfig:
    input_path: str
    sidechain_path: str
    output_path: str
    alpha_f: float = 1.0
    alpha_a: float = 1.0
    block_size: int = DEFAULT_BLOCK
    controls_csv_path: str | None = None
    plot_dir: str | None = None

    def __post_init__(self):
        if (not MIN_BLOCK <= self.block_size <= MAX_BLOCK
                or self.block_size & (self.block_size - 1)):
            raise ValueError(
                f"block size must be a power of two in [{MIN_BLOCK}, {MAX_BLOCK}],"
                f" got {self.block_size}")
        for name in ("alpha_f", "alpha_a"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def run(config: RunConfig) -> int:
    """Processes the configured files; returns a process exit status."""
    try:
        fs, x = read_wav(config.input_path)
        fs_sc, s = read_wav(config.sidechain_path)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if fs != fs_sc:
        print(f"error: sample-rate mismatch: input {fs} Hz, sidechain {fs_sc} Hz"
              " (resampling is not supported)", file=sys.stderr)
        return 1
    n = min(len(x), len(s))
    if n == 0:
        print("error: no overlapping audio to process", file=sys.stderr)
        return 1

    analyzer = SidechainAnalyzer(fs)
    engine = TransferEngine(fs, TransferParams(config.alpha_f, config.alpha_a))
    output = np.empty(n)
    want_traces = bool(config.controls_csv_path or config.plot_dir)
    if want_traces:
        rfs = np.empty(n)
        delay = np.empty(n)
        envelope = np.empty(n)
        f0 = np.empty(n)
        gate = np.empty(n, dtype=np.uint8)

    params = engine.params
    for start in range(0, n, config.block_size):
        stop = min(start + config.block_size, n)
        controls = analyzer.analyze_block(s[start:stop], params)
        output[start:stop] = engine.process_block(x[start:stop], controls)
        if want_traces:
            rfs[start:stop] = controls.rfs
            delay[start:stop] = controls.delay
            envelope[start:stop] = controls.envelope
            f0[start:stop] = controls.f0_hz
            gate[start:stop] = int(controls.gate.mode)

    try:
        write_wav(config.output_path, fs, output)
        if config.controls_csv_path:
            _write_csv(config.controls_csv_path, f0, gate, rfs, delay, envelope)
        if config.plot_dir:
            plot_dir = Path(config.plot_dir)
            plot_dir.mkdir(parents=True, exist_ok=True)
            render_controls(plot_dir / "controls.png", fs, f0, gate, rfs,
                            delay, envelope)
            render_waveforms(plot_dir / "waveforms.png", fs, x[:n], s[:n], output)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _write_csv(path, f0, gate, rfs, delay, envelope):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for start in range(0, len(delay), _CSV_CHUNK):
            stop = min(start + _CSV_CHUNK, len(delay))
            lines = [
                f"{i},{f0[i]:.4f},{_GATE_NAMES[gate[i]]},{rfs[i]:.9e},"
                f"{delay[i]:.6f},{envelope[i]:.9e}"
                for i in range(start, stop)
            ]
            fh.write("\n".join(lines))
            fh.write("\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vibrato-transfer",
        description="Transfer vibrato (FM and AM) from a sidechain recording"
                    " onto another signal.")
    parser.add_argument("--input", "-i", required=True, help="input WAV to process")
    parser.add_argument("--sidechain", "-s", required=True,
                        help="WAV whose vibrato is analyzed and transferred")
    parser.add_argument("--output", "-o", required=True, help="output WAV path")
    parser.add_argument("--alpha-f", type=float, default=1.0,
                        help="FM depth scale (default 1.0)")
    parser.add_argument("--alpha-a", type=float, default=1.0,
                        help="AM depth scale (default 1.0)")
    parser.add_argument("--block-size", type=int, default=DEFAULT_BLOCK,
                        help="streaming block size in samples (default 64)")
    parser.add_argument("--dump-controls", metavar="CSV",
                        help="write per-sample control traces to this CSV file")
    parser.add_argument("--plot-dir", metavar="DIR",
                        help="render control/waveform figures into this directory")
    args = parser.parse_args(argv)
    try:
        config = RunConfig(
            input_path=args.input,
            sidechain_path=args.sidechain,
            output_path=args.output,
            alpha_f=args.alpha_f,
            alpha_a=args.alpha_a,
            block_size=args.block_size,
            controls_csv_path=args.dump_controls,
            plot_dir=args.plot_dir,
        )
    except ValueError as exc:
        parser.error(str(exc))
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
