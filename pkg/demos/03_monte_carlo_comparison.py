"""Monte-Carlo comparison: terrain-aware filter vs. terrain-blind baseline.

Both filters see the exact same measurement streams; only the filter-side
model differs.  Averages existence probability and OSPA error over many runs,
prints what happens inside the shadowed intervals, and writes the aggregate
CSV plus an SVG plot next to this script.
"""

import os
import time
from importlib import resources

from shadowtrack.harness import (
    ScenarioConfig,
    render_aggregate_svg,
    run_monte_carlo,
    write_aggregate_csv,
)

HERE = os.path.dirname(os.path.abspath(__file__))
N_RUNS = 50


def nlos_intervals(metrics):
    """Contiguous runs of steps where the true target is shadowed."""
    intervals, start = [], None
    for m in metrics:
        if not m.truth_los and start is None:
            start = m.k
        elif m.truth_los and start is not None:
            intervals.append((start, m.k - 1))
            start = None
    if start is not None:
        intervals.append((start, metrics[-1].k))
    return intervals


def main():
    config_path = resources.files("shadowtrack") / "data" / "default_scenario.json"
    config = ScenarioConfig.from_json(str(config_path))

    t0 = time.perf_counter()
    metrics_geo, metrics_nogeo, _raw = run_monte_carlo(config, N_RUNS, jobs=1)
    elapsed = time.perf_counter() - t0
    print(f"{N_RUNS} paired runs x {config.num_steps} steps in {elapsed:.1f} s")

    print("\nshadowed intervals (step range: mean q and mean OSPA, aware / blind)")
    for a, b in nlos_intervals(metrics_geo):
        g = [m for m in metrics_geo if a <= m.k <= b]
        n = [m for m in metrics_nogeo if a <= m.k <= b]
        q_g = sum(m.q_mean for m in g) / len(g)
        q_n = sum(m.q_mean for m in n) / len(n)
        o_g = sum(m.ospa_mean for m in g) / len(g)
        o_n = sum(m.ospa_mean for m in n) / len(n)
        print(
            f"  k {a:2d}-{b:2d}: q {q_g:.3f} / {q_n:.3f}   "
            f"OSPA {o_g:5.1f} m / {o_n:5.1f} m"
        )

    los_g = [m.ospa_mean for m in metrics_geo if m.truth_los]
    los_n = [m.ospa_mean for m in metrics_nogeo if m.truth_los]
    print(
        f"\nmean OSPA while visible: {sum(los_g) / len(los_g):.1f} m aware, "
        f"{sum(los_n) / len(los_n):.1f} m blind"
    )

    csv_path = os.path.join(HERE, "mc_aggregate.csv")
    svg_path = os.path.join(HERE, "mc_aggregate.svg")
    write_aggregate_csv(csv_path, metrics_geo, metrics_nogeo)
    render_aggregate_svg(csv_path, svg_path)
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")


if __name__ == "__main__":
    main()
