#!/usr/bin/env python3
"""Projection statistics versus the inequality test on the same model.

Projection statistics measure how far a row sits from the cloud of the
other rows, so the two stiff rows of the 3-bus model (coefficients around
10) get flagged.  The inequality test asks the sharper question -- can a
bad measurement on this row actually drag an absolute-value fit? -- and
answers no for every row, which direct experiments confirm.
"""

import numpy as np

from lavse import (
    GrossErrorSpec,
    compute_ps,
    detect_all,
    fixture_model,
    inject_gross_errors,
    solve_lav,
)

theta_true = np.array([0.1, -0.2])
model = fixture_model("threebus-dc", states=theta_true)

ps = compute_ps(model)
print(ps.render_table(model.labels))

report = detect_all(model)
print("\ninequality test:", dict(zip(model.labels, report.verdicts)))

# Push a large gross error through each PS-flagged measurement and watch
# the estimate: it never moves, confirming the rows are not leverage
# points despite their size.
print("\ngross-error probes on the PS-flagged rows:")
for i in np.flatnonzero(ps.flagged):
    label = model.labels[i]
    for magnitude in (1.0, 10.0, 100.0):
        bad = inject_gross_errors(model, [GrossErrorSpec(label, magnitude)])
        sol = solve_lav(bad)
        shift = np.max(np.abs(sol.theta_hat - theta_true))
        print(f"  {label:<10} error {magnitude:>6.1f} p.u. -> max state shift {shift:.2e}")

print("\nPS flags size; the inequality test flags actual vulnerability.")
