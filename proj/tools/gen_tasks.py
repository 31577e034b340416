#!/usr/bin/env python3
"""Generate the synthetic task trajectories shipped in data/tasks.

These are stand-ins with plausible shapes and magnitudes, not recorded robot
data. Angles in degrees, rates in deg/s, torques in Nm.
"""

import argparse
import math
from pathlib import Path

TASKS = {
    # name: (period s, roll amp/offset deg, pitch amp/offset deg, tau_roll amp, tau_pitch amp/offset)
    "walking": (1.0, (5.0, 0.0), (15.0, -5.0), 6.0, (30.0, 5.0)),
    "ramp": (1.2, (4.0, 0.0), (14.0, -11.3), 7.0, (36.0, 8.0)),
    "step": (1.6, (8.0, 0.0), (22.0, -25.0), 9.0, (42.0, 10.0)),
}


def write_task(path: Path, period, roll, pitch, tau_roll, tau_pitch, duration=2.0, rate_hz=100):
    w = 2.0 * math.pi / period
    lines = ["# synthetic task trajectory (generated by tools/gen_tasks.py)",
             "t,roll,pitch,roll_rate,pitch_rate,tau_roll,tau_pitch"]
    n = int(round(duration * rate_hz))
    for k in range(n + 1):
        t = k / rate_hz
        r = roll[1] + roll[0] * math.sin(w * t)
        rd = roll[0] * w * math.cos(w * t)
        p = pitch[1] + pitch[0] * math.sin(w * t + 0.3)
        pd = pitch[0] * w * math.cos(w * t + 0.3)
        tr = tau_roll * math.sin(w * t + 1.1)
        tp = tau_pitch[1] + tau_pitch[0] * math.sin(w * t + 0.8)
        lines.append(f"{t:.4f},{r:.6f},{p:.6f},{rd:.6f},{pd:.6f},{tr:.6f},{tp:.6f}")
    path.write_text("\n".join(lines) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "tasks")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, spec in TASKS.items():
        write_task(args.out / f"{name}.csv", *spec)


if __name__ == "__main__":
    main()
