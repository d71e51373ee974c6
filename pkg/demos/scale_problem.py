"""The scale problem on the synthetic two-output model.

``y1`` lives around 1 and never goes negative; ``y2`` is a thousand times
larger and dips below zero only in a small disc.  Minimising the robustness
of ``alw (y1 > 0 and y2 > 0)`` directly mostly chases ``y1``, because the
min over the conjunction is almost always the small channel.  The bandit
driver keeps one optimiser per conjunct and rewards progress relative to
each arm's own history, so the magnitude gap stops mattering.

    python demos/scale_problem.py [trials]
"""

import sys

from falsar import classify_spec, falsify_hc, falsify_mab_conj, load_model, parse

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 30
model = load_model("synthetic", m1=1.0, m2=1000.0)
phi = parse("alw_[0,10](y1 > 0 and y2 > 0)")
spec = classify_spec(phi)

hc = [falsify_hc(model, phi, 200, seed=s) for s in range(trials)]
ucb = [falsify_mab_conj(model, spec, 200, "ucb", seed=s) for s in range(trials)]
egr = [falsify_mab_conj(model, spec, 200, "egreedy", seed=s) for s in range(trials)]

for name, runs in (("hill climbing", hc), ("bandit, UCB1", ucb), ("bandit, eps-greedy", egr)):
    sr = sum(r.falsified for r in runs)
    sims = sum(r.simulations for r in runs) / len(runs)
    print(f"{name:20s} SR {sr:2d}/{trials}   mean simulations {sims:6.1f}")

example = next((r for r in ucb if r.falsified), None)
if example is not None:
    print("\nfirst UCB1 witness: arm sequence", example.arm_sequence,
          "robustness", round(example.witness_robustness, 3))
