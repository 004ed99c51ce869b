"""Instance difficulty diagnostics.

For a given instance and policy class, tabulates the packing number of
the near-optimal action set at a range of optimality levels. A flat
table (always one ball) means the instance is benign at that bandwidth;
growth reveals the effective dimension of the near-optimal set, and the
log-log slope estimates the zooming exponent.
"""

import numpy as np

from smoothcb import default_policy_class, diagnose, make_named_instance

for name in ("absolute", "discontinuous"):
    env = make_named_instance(name)
    pc = default_policy_class(env, 100)
    rep = diagnose(env, pc, h=0.1, L=env.lipschitz_constant or 3.0,
                   epsilon_grid=np.geomspace(0.002, 0.05, 8))
    print(f"== {name} ==")
    print(f"{'eps':>8} {'M_h':>5} {'M_0':>5}")
    for row in rep.table:
        print(f"{row['eps']:>8.4f} {row['M_h']:>5.1f} {row['M_0']:>5.1f}")
    print(f"theta_h={rep.theta_h:.0f}  psi_L={rep.psi_L:.0f}  "
          f"z_hat={rep.z_hat:.2f} (fit rms {rep.fit_residual:.2f})  "
          f"alpha_unif={rep.alpha_unif:.1f}\n")
