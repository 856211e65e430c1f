#!/usr/bin/env python3
"""Compare the three channel modes and plot the classic three-panel figure
(latency, throughput, CPU work per message) if matplotlib is available.

Protected sharing makes the encrypted mode unnecessary: the csm series is
the plaintext code path, and the aead series shows what encrypting over
host-visible memory costs as messages grow.
"""

import sys

from csmsim.bench import MODES, append_csv, bench_run

SIZES = [64, 1024, 16384, 65536, 262144, 1 << 20]


def main():
    iters = 600 if "--quick" in sys.argv else 1000
    results = {mode: [] for mode in MODES}
    for mode in MODES:
        for size in SIZES:
            report = bench_run(mode, size, iters)
            results[mode].append(report)
            print(f"{mode:9} {size:>8}B  latency {report.median_latency_ns/1e3:9.1f}us  "
                  f"throughput {report.throughput_bps/1e6:9.1f}MB/s  "
                  f"cpu {report.cpu_ns_per_msg/1e3:9.1f}us/msg")
    append_csv("channel_bench.csv", [r for rs in results.values() for r in rs])
    print("rows appended to channel_bench.csv")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping the plot")
        return
    fig, axes = plt.subplots(1, 3, figsize=(15, 4))
    panels = [("median latency (us)", lambda r: r.median_latency_ns / 1e3),
              ("throughput (MB/s)", lambda r: r.throughput_bps / 1e6),
              ("cpu per message (us)", lambda r: r.cpu_ns_per_msg / 1e3)]
    for ax, (title, pick) in zip(axes, panels):
        for mode in MODES:
            ax.plot(SIZES, [pick(r) for r in results[mode]], marker="o",
                    label=mode)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("message size (bytes)")
        ax.set_title(title)
        ax.legend()
    fig.tight_layout()
    fig.savefig("channel_bench.png", dpi=120)
    print("figure saved to channel_bench.png")


if __name__ == "__main__":
    main()
