"""Compare the compiled and NumPy rendering kernels.

Usage: python benchmarks/bench_render.py [--pixels 64] [--frames 16] [--reps 200]
"""

import argparse
import math
import time

import numpy as np

from mzi_align import _render_np, render
from mzi_align.beam_optics import GaussianBeam, q_from
from mzi_align.env import ControlState, EpisodeConfig, InterferometerEnv, SetupGeometry, derive_beams


def bench(fn, reps):
    fn()  # warm up
    start = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - start) / reps


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--pixels", type=int, default=64)
    parser.add_argument("--frames", type=int, default=16)
    parser.add_argument("--reps", type=int, default=200)
    args = parser.parse_args()

    geom = SetupGeometry()
    ctrl = ControlState(np.array([1e-3, -5e-4, 4e-4, -2e-4, 3.0]))
    upper, lower = derive_beams(ctrl, geom, geom.nominal_radius)
    phases = np.linspace(0, 2 * math.pi, args.frames, endpoint=False)
    noise = np.random.default_rng(0).standard_normal(
        (args.frames, args.pixels, args.pixels))

    impls = [("numpy", _render_np)]
    try:
        from mzi_align import _render_cy

        impls.append(("compiled", _render_cy))
    except ImportError:
        print("compiled kernel unavailable; benchmarking numpy only")

    print(f"render_stack: {args.frames} frames @ {args.pixels}x{args.pixels}, "
          f"{args.reps} reps (active backend: {render.BACKEND})")
    times = {}
    for name, impl in impls:
        dt = bench(lambda: render.render_stack(
            upper, lower, phases, 6.0, args.pixels, brightness=1.1,
            noise_rel=0.2, noise=noise, full_scale=4.0, impl=impl), args.reps)
        times[name] = dt
        print(f"  {name:10s} {dt * 1e3:8.3f} ms/stack "
              f"({args.frames / dt:8.0f} frames/s)")
    if len(times) == 2:
        print(f"  speedup: {times['numpy'] / times['compiled']:.2f}x")

    # end-to-end environment step in frame mode
    env = InterferometerEnv(EpisodeConfig(obs_mode="frames"))
    env.reset(seed=0)

    def step():
        if env.done:
            env.reset()
        env.step(np.zeros(5))

    dt = bench(step, args.reps)
    print(f"environment step (frames mode): {dt * 1e3:.3f} ms")


if __name__ == "__main__":
    main()
