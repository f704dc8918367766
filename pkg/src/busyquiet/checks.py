"""Self-verification suites behind the `check` CLI subcommand.

Quick versions of the analytic guarantees: separable/direct agreement,
static-input annihilation, complementarity of the quiet stream, gradient
correctness against finite differences, and lateral-connection init-identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bqn import BqnConfig, LateralSpec, build_bqn, forward
from .clip import VideoClip, temporal_avg_pool
from .disentangle import DisentangledPair
from .mbpm import bandpass_direct, finite_diff_check, init_mbpm, mbpm_forward


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_separable_direct(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for sigma, k in ((1.1, 9), (0.9, 7), (0.9, 3)):
        clip = VideoClip(rng.uniform(0.0, 1.0, size=(6, 3, 32, 32)))
        sep = mbpm_forward(clip, init_mbpm(sigma, k, 3, 3))
        direct = bandpass_direct(clip, sigma, k, 3)
        worst = max(worst, float(np.abs(sep.data - direct.data).max()))
    return CheckResult("separable-vs-direct", worst <= 1e-5, f"max abs diff {worst:.2e} (tol 1e-5)")


def _check_static_annihilation(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    frame = rng.uniform(size=(3, 16, 16))
    clip = VideoClip(np.repeat(frame[None], 9, axis=0))
    worst = 0.0
    for sigma in (0.9, 1.1):
        for k in (3, 7, 9):
            gamma = mbpm_forward(clip, init_mbpm(sigma, k, 3, 3))
            worst = max(worst, float(np.abs(gamma.data).max()))
    return CheckResult("static-annihilation", worst <= 1e-6, f"max |output| {worst:.2e} (tol 1e-6)")


def _check_complementarity(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(3):
        clip = VideoClip(rng.uniform(0.0, 1.0, size=(9, 3, 24, 24)))
        params = init_mbpm(1.1, 9, 3, 3)
        gamma = mbpm_forward(clip, params)
        avg = temporal_avg_pool(clip)
        quiet = avg.data - gamma.data
        worst = max(worst, float(np.abs(quiet + gamma.data - avg.data).max()))
    return CheckResult("complementarity", worst <= 1e-6, f"max abs error {worst:.2e} (tol 1e-6)")


def _check_gradients(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for s in range(3):
        clip = VideoClip(rng.uniform(0.0, 1.0, size=(6, 1, 8, 8)))
        report = finite_diff_check(clip, init_mbpm(0.9, 3, 1, 3))
        worst = max(worst, report["max_rel_err"])
    return CheckResult("gradient-check", worst <= 1e-3, f"max rel err {worst:.2e} (tol 1e-3)")


def _check_init_identity(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for s in range(3):
        widths = (8, 16, 32, 64)
        laterals = tuple(LateralSpec(index=i) for i in range(1, 5))
        pair = DisentangledPair(
            busy=VideoClip(rng.uniform(-1, 1, (4, 3, 24, 24))),
            quiet=VideoClip(rng.uniform(-1, 1, (4, 3, 16, 16))),
        )
        wired = build_bqn(BqnConfig(widths=widths, laterals=laterals, seed=seed + s))
        bare = build_bqn(BqnConfig(widths=widths, seed=seed + s))
        worst = max(worst, float(np.abs(forward(wired, pair) - forward(bare, pair)).max()))
    return CheckResult("bplc-init-identity", worst <= 1e-6, f"max abs diff {worst:.2e} (tol 1e-6)")


def run_check_suites(seed: int = 0) -> list[CheckResult]:
    """Run every suite; returns one result per suite."""
    return [
        _check_separable_direct(seed),
        _check_static_annihilation(seed),
        _check_complementarity(seed),
        _check_gradients(seed),
        _check_init_identity(seed),
    ]
