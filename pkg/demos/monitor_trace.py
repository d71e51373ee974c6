"""Robustness of a few car requirements on one simulated trace.

    python demos/monitor_trace.py
"""

import numpy as np

from falsar import Signal, eval_robust, load_model, parse

car = load_model("car")
n = int(round(car.horizon / car.step)) + 1
t = np.arange(n) * car.step
# hard acceleration, then braking after 20 s
throttle = np.where(t < 20, 90.0, 0.0)
brake = np.where(t < 20, 0.0, 150.0)
y = car.simulate(Signal.from_columns(car.step, throttle=throttle, brake=brake))

print(f"top speed {y['speed'].max():.1f}, top rpm {y['rpm'].max():.0f}, gears used {sorted(set(y['gear'].astype(int).tolist()))}")
for text in (
    "alw_[0,30](speed < 120)",
    "alw_[0,30](speed < 120 and rpm < 4780)",
    "alw_[0,30](gear == 3 -> speed > 20.6)",
    "alw_[0,30](not(rpm > 4000) or (speed > 20))",
    "ev_[0,10](speed > 50)",
):
    print(f"{eval_robust(parse(text), y):10.3f}  {text}")
