#!/usr/bin/env python3
"""Sweep injected backend delay and show how the pipeline degrades.

For each added delay the builtin hazard scenarios are re-run with that
delay injected; the table reports the fallback rate, mean latency, and
latency compliance.  With the default 20 s budget the fallback path takes
over once the total crosses the budget (delay > 9.5 s on top of the
12 s profile).
"""

import argparse

from hazcom import EngineConfig, ScriptedBackend, builtin_suite
from hazcom.clock import ticks_to_seconds
from hazcom.harness import Scenario, run_scenario
from hazcom.metrics import latency_compliance
from hazcom.perception import FaultProfile


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--t-max", type=float, default=20.0, help="budget in seconds")
    parser.add_argument(
        "--delays", default="0,2.5,5,7.5,10,15,20,25,30",
        help="comma-separated delays in seconds",
    )
    args = parser.parse_args()

    config = EngineConfig(t_max=round(args.t_max * 10))
    scenarios = [s for s in builtin_suite() if s.fault_profile is None]
    print(f"{'delay_s':>8} {'fallback_rate':>14} {'mean_latency_s':>15} {'eps_lat':>8}")
    for delay_s in (float(d) for d in args.delays.split(",")):
        fallbacks = 0
        outputs = 0
        latencies = []
        for scenario in scenarios:
            slowed = Scenario(
                scenario.scenario_id,
                scenario.observations,
                scenario.ground_truth,
                FaultProfile(added_delay=round(delay_s * 10)),
            )
            run = run_scenario(slowed, ScriptedBackend(), config)
            for record in run.trace:
                latencies.append(record.t_total)
                if record.criticality is not None:
                    outputs += 1
                    fallbacks += record.fallback
        mean_ticks = sum(latencies) / len(latencies)
        print(
            f"{delay_s:>8.1f} {fallbacks / outputs:>14.2f} "
            f"{ticks_to_seconds(round(mean_ticks)):>15.2f} "
            f"{latency_compliance(mean_ticks, config.t_max):>8.3f}"
        )


if __name__ == "__main__":
    main()
