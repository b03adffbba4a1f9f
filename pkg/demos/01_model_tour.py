#!/usr/bin/env python3
"""Tour of the three-area frequency-control model.

Builds the interconnected continuous-time model, inspects its spectrum
(the tie-line/angle pairs sit exactly on the imaginary axis, everything
else is damped), samples it with a zero-order hold, and verifies that the
difference-algebraic form reproduces the sampled dynamics row for row.
"""

import numpy as np

from diagfilter import (
    assemble_dae,
    assemble_multiarea,
    three_area_default,
    univariate_topology,
    zoh_discretize,
)
from diagfilter.agc import output_labels, state_labels

T_S = 0.5


def main():
    np.set_printoptions(precision=4, suppress=True, linewidth=110)

    areas = three_area_default()
    topology = univariate_topology()
    model, index = assemble_multiarea(areas, topology)

    print("=== model dimensions ===")
    print(f"states n_x = {model.n_x}, outputs n_y = {model.n_y}, "
          f"loads n_d = {model.n_d}, attack channels n_f = {model.n_f}")
    for a in areas:
        gens = ", ".join(f"t_ch={g.t_ch}" for g in a.generators)
        print(f"  area {a.area_id}: inertia {a.inertia}, ties to {a.tie_neighbors}, "
              f"generators [{gens}]")

    print("\n=== state / output labels ===")
    print("states: ", " ".join(state_labels(areas)))
    print("outputs:", " ".join(output_labels(areas)))

    print("\n=== continuous-time spectrum ===")
    eig = np.linalg.eigvals(model.A)
    marginal = np.abs(eig.real) < 1e-9
    print(f"marginal modes (tie/angle pairs): {int(marginal.sum())}")
    print(f"slowest damped mode: Re = {eig.real[~marginal].max():.4f}")
    print(f"fastest mode:        Re = {eig.real.min():.4f}")

    model_d = zoh_discretize(model, T_S)
    rho = np.abs(np.linalg.eigvals(model_d.A))
    print(f"\n=== sampled at t_s = {T_S} s ===")
    print(f"spectral radius {rho.max():.6f} "
          f"({int((rho > 1 - 1e-9).sum())} modes on the unit circle)")

    dae = assemble_dae(model_d)
    print("\n=== difference-algebraic form ===")
    print(f"H0 {dae.H0.shape}, H1 {dae.H1.shape}, L {dae.L.shape}, F {dae.F.shape}")

    # roll the sampled model forward and check the algebraic identity
    # H0 xi[k] + H1 xi[k+1] + L y[k] + F f[k] = 0 on every step
    rng = np.random.default_rng(7)
    x = np.zeros(model.n_x)
    worst = 0.0
    for _ in range(40):
        d = rng.normal(0.0, 0.02, size=model.n_d)
        f = rng.normal(0.0, 0.1, size=model.n_f)
        x_next = model_d.A @ x + model_d.B_d @ d + model_d.B_f @ f
        y = model_d.C @ x + model_d.D_f @ f
        xi = np.concatenate([x, d])
        xi_next = np.concatenate([x_next, d])
        gap = dae.H0 @ xi + dae.H1 @ xi_next + dae.L @ y + dae.F @ f
        worst = max(worst, float(np.max(np.abs(gap))))
        x = x_next
    print(f"worst identity violation over 40 random steps: {worst:.3e}")


if __name__ == "__main__":
    main()
