#!/usr/bin/env python3
"""Run every built-in attack scenario and summarize each blocked attempt.

Each scenario expects the attack to fail with a specific error or fault;
exit code 0 therefore means "attack blocked exactly as documented". The
global isolation invariants are checked after every step of every run.
"""

from csmsim.harness import builtin_scenarios, run_scenario

ATTACKS = {
    "attack_impersonation": "wrong-image realm cannot pass attestation or "
                            "hijack a foreign sharing",
    "attack_fake_csm": "bait region is never attached: consumer's owner "
                       "rejects the attacker's token",
    "attack_oob_access": "window bounds enforced; oversized reservations "
                         "die at the attach rendezvous",
    "attack_overlap_reserve": "no second window over already shared memory",
    "attack_toctou_rd_swap": "swapped realm gets a fresh id; stale id is dead",
    "attack_host_probe": "hypervisor reads zero bytes of realm memory",
    "attack_double_map": "one granule never backs two realms uninvited",
    "starving_host": "denial of service remains possible, isolation intact",
}


def main():
    registry = builtin_scenarios()
    for name, summary in ATTACKS.items():
        trace, code = run_scenario(registry[name])
        steps = len(trace) - 1
        violations = sum(len(e.get("invariants", [])) for e in trace)
        status = "blocked" if code == 0 else "NOT BLOCKED"
        print(f"{name:24} {status:12} {steps:3} steps, "
              f"{violations} invariant violations")
        print(f"{'':24} {summary}")
    print("\nrun any of these yourself:  csmsim builtin <name> --trace out.jsonl")


if __name__ == "__main__":
    main()
