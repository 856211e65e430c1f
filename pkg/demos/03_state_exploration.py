#!/usr/bin/env python3
"""Exhaustively explore the sharing protocol on a tiny world, then show the
explorer catching a deliberately broken monitor.

The honest run enumerates every reachable state under the full command set
and asserts the isolation invariants plus access-oracle equivalence at each
one. The mutant run disables the attach size-equality check; the explorer
finds the four-step sequence where an oversized consumer window swallows a
provider-private granule.
"""

import json

from csmsim.explorer import ExplorationConfig, explore


def main():
    cfg = ExplorationConfig(realm_count=2, granule_count=8, depth=4)
    print(f"exploring: {cfg.realm_count} realms, {cfg.granule_count} free "
          f"granules, depth {cfg.depth}")
    report = explore(cfg)
    print(f"  {report.states} states, {report.transitions} transitions, "
          f"{report.wall_time_s:.1f}s")
    print(f"  violations: {len(report.violations)}, "
          f"oracle mismatches: {len(report.oracle_mismatches)}")

    print("\nsame exploration with the attach size-equality check removed:")
    mutant = explore(ExplorationConfig(
        realm_count=2, granule_count=8, depth=4,
        disabled_checks=("attach_size_equality",)))
    shortest = min(mutant.violations, key=lambda v: len(v["sequence"]))
    print(f"  {len(mutant.violations)} violating states; shortest "
          f"counterexample ({len(shortest['sequence'])} commands):")
    for cmd in shortest["sequence"]:
        print(f"    {cmd}")
    print("  violated:")
    print(json.dumps(shortest["violations"], indent=4))


if __name__ == "__main__":
    main()
