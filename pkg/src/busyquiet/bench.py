"""Micro-benchmark comparing the separable band-pass against the direct form.

Both implementations run on identical random inputs; the report records
median wall times, MAC counts and throughput, and refuses to report timings
for implementations that disagree numerically.
"""

from __future__ import annotations

import statistics
import time

import numpy as np

from .clip import VideoClip
from .errors import ConfigError, NumericError
from .mbpm import bandpass_direct, count_macs, init_mbpm, mac_breakdown, mbpm_forward

AGREEMENT_TOL = 1e-5


def _time_repeats(fn, repeats: int) -> list[float]:
    fn()  # warm-up (page-in, allocator)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return times


def run_bench(
    shapes: list[tuple[int, int, int, int]],
    repeats: int,
    sigma: float = 1.1,
    k: int = 9,
    seed: int = 0,
) -> dict:
    """Benchmark separable vs direct evaluation on each (t, c, h, w) shape.

    repeats must be >= 3; the per-implementation time is the median over the
    repeats.  Raises NumericError if the two implementations disagree beyond
    1e-5 anywhere.
    """
    if repeats < 3:
        raise ConfigError(f"repeats must be >= 3, got {repeats}")
    if not shapes:
        raise ConfigError("no shapes to benchmark")
    rng = np.random.default_rng(seed)
    cases = []
    for shape in shapes:
        t, c, h, w = shape
        if t % 3 != 0:
            raise ConfigError(f"shape {shape}: t must be divisible by 3")
        clip = VideoClip(rng.uniform(0.0, 1.0, size=(t, c, h, w)))
        params = init_mbpm(sigma, k, c, 3)

        sep_out = mbpm_forward(clip, params)
        dir_out = bandpass_direct(clip, sigma, k, 3)
        max_diff = float(np.abs(sep_out.data - dir_out.data).max())
        if max_diff > AGREEMENT_TOL:
            raise NumericError(
                f"separable and direct outputs disagree by {max_diff:.3e} on shape {shape}"
            )

        sep_times = _time_repeats(lambda: mbpm_forward(clip, params), repeats)
        dir_times = _time_repeats(lambda: bandpass_direct(clip, sigma, k, 3), repeats)
        sep_median = statistics.median(sep_times)
        dir_median = statistics.median(dir_times)
        spatial, temporal = mac_breakdown(params, shape)
        cases.append(
            {
                "shape": list(shape),
                "sigma": sigma,
                "k": k,
                "macs": {"spatial": spatial, "temporal": temporal, "total": spatial + temporal},
                "max_abs_diff": max_diff,
                "separable": {
                    "median_seconds": sep_median,
                    "times": sep_times,
                    "throughput_fps": t / sep_median,
                },
                "direct": {
                    "median_seconds": dir_median,
                    "times": dir_times,
                    "throughput_fps": t / dir_median,
                },
                "faster": "separable" if sep_median <= dir_median else "direct",
            }
        )
    return {"repeats": repeats, "seed": seed, "agreement_tol": AGREEMENT_TOL, "cases": cases}
