"""Regenerates the bundled synthetic pressure-drop series."""
import datetime as dt
import math
import random

rng = random.Random(20200601)

# 8 h at 30 s. Stretching filter for the first half hour, then pressure rises
# with the cumulative aerosol mass; spurious noise during shutdown.
start = dt.datetime(2020, 6, 1, 8, 0, 0)
flow_lpm = 1.0
k_per_ug = 0.0025  # kPa per ug collected


def conc(t):
    if t < 30.0:
        return 0.0
    return 900.0 + 500.0 * math.sin((t - 30.0) / 445.0 * 2.0 * math.pi) + 300.0 * math.exp(-((t - 300.0) / 25.0) ** 2)


mass = 0.0
rows = []
t = 0.0
while t <= 480.0 + 1e-9:
    if t > 0.0:
        # ug/m^3 * L/min * min / 1000 L/m^3
        mass += 0.5 * (conc(t) + conc(t - 0.5)) * flow_lpm * 0.5 / 1000.0 if 30.0 <= t <= 475.0 else 0.0
    stretch = -0.03 * (1.0 - math.exp(-t / 8.0))
    value = 1.2 + stretch + k_per_ug * mass + rng.gauss(0.0, 0.002)
    if t > 475.0:
        value += rng.gauss(0.0, 0.05)
    temp = 22.0 + 0.3 * math.sin(t / 60.0) + rng.gauss(0.0, 0.05)
    stamp = (start + dt.timedelta(minutes=t)).strftime("%Y-%m-%dT%H:%M:%S")
    rows.append((stamp, value, temp))
    t += 0.5

with open("synthetic_mars.csv", "w") as f:
    f.write("time,pressure_drop,temperature_c\n")
    for stamp, value, temp in rows:
        f.write(f"{stamp},{value:.5f},{temp:.3f}\n")

with open("synthetic_mars.meta", "w") as f:
    f.write("# synthetic MARS-style run, mass accumulated between 30 and 475 minutes\n")
    f.write(f"filter_mass_ug = {mass:.3f}\n")
    f.write(f"flow_rate_lpm = {flow_lpm}\n")
    f.write("sample_id = SYN-01\n")

lin = random.Random(7)
with open("synthetic_linear.csv", "w") as f:
    f.write("time,pressure_drop\n")
    for i in range(121):
        f.write(f"{i},{0.5 + 0.01 * i + lin.gauss(0.0, 0.05):.5f}\n")
