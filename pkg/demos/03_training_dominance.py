#!/usr/bin/env python3
"""Shape the filter against measured model mismatch and quantify the gain.

The purely model-based design is blind to the *linear abstraction*, but the
real plant has governor deadbands, AGC saturation, and sine-law tie flows.
Replaying healthy plant runs against the abstraction yields mismatch
signatures; each one induces a quadratic form whose value at a candidate
filter is exactly that filter's residual energy on the signature.  Training
minimises the average form, which drops the healthy-noise floor by orders
of magnitude and licenses a far tighter alarm threshold.
"""

import time

import numpy as np

from diagfilter import (
    AttackSpec,
    ExperimentConfig,
    ResidualFilter,
    average_q,
    calibrate_threshold,
    default_config,
    design_univariate,
    gram_matrix,
    mismatch_signature,
    q_matrix,
    residual_energy,
    simulate_linear,
    simulate_nonlinear,
)
from diagfilter.design import quadratic_value
from diagfilter.pipeline import build_context

M_TRAIN = 8


def main():
    cfg = default_config()
    cfg["train"]["m"] = M_TRAIN
    ctx = build_context(ExperimentConfig.from_dict(cfg))
    horizon = float(ctx.cfg.train["horizon_seconds"])
    gram = gram_matrix(ctx.a_coeffs, ctx.train_samples)

    print(f"=== training: {M_TRAIN} healthy plant runs of {horizon:.0f} s ===")
    t0 = time.perf_counter()
    q_list, sigs = [], []
    for i in range(M_TRAIN):
        spec = ctx.disturbance_spec(ctx.cfg.seed + i, horizon)
        plant_run = simulate_nonlinear(ctx.plant, spec, AttackSpec.none())
        model_run = simulate_linear(ctx.model_d, spec, AttackSpec.none())
        sig = mismatch_signature(plant_run.Y, model_run.Y)
        sigs.append(sig)
        q_list.append(q_matrix(ctx.stacked, sig, gram).Q)
        print(f"  instance {i}: max |mismatch| = {np.max(np.abs(sig)):.3e}")
    qbar = average_q(q_list)
    print(f"collected {len(q_list)} quadratic forms of shape {qbar.shape} "
          f"in {time.perf_counter() - t0:.1f} s")

    print("\n=== design: trained vs model-only ===")
    assisted = design_univariate(
        ctx.stacked, qbar, pole=0.5, mode="data_assisted", track_steady_state=True
    )
    pure = design_univariate(
        ctx.stacked, None, pole=0.5, mode="pure_model", track_steady_state=True
    )
    va = quadratic_value(assisted.nbar, qbar)
    vp = quadratic_value(pure.nbar, qbar)
    print(f"average mismatch energy, trained filter:    {va:.3e}")
    print(f"average mismatch energy, model-only filter: {vp:.3e}")
    print(f"improvement factor: {vp / max(va, 1e-300):.1e}")

    margin = float(ctx.cfg.filter["margin"])
    det_a = calibrate_threshold(assisted, q_list, margin, ctx.window_samples)
    det_p = calibrate_threshold(pure, q_list, margin, ctx.window_samples)
    print(f"\ncalibrated tau*: trained {det_a.tau_star:.3e}, "
          f"model-only {det_p.tau_star:.3e}")
    print(f"alarm thresholds (tau* + {margin}): trained {det_a.threshold:.6f}, "
          f"model-only {det_p.threshold:.6f}")

    print("\n=== replaying the training data through the trained filter ===")
    filt = ResidualFilter(assisted, ctx.dae.L)
    worst = max(
        float(residual_energy(filt.run(sig), det_a.window)[-1]) for sig in sigs
    )
    print(f"worst windowed energy over the {M_TRAIN} instances: {worst:.3e}")
    print(f"calibration tau* = {det_a.tau_star:.3e}; replay stays within "
          f"{abs(worst - det_a.tau_star):.1e} of it, far inside the alarm margin")


if __name__ == "__main__":
    main()
