"""Input-pattern memory experiments on a 40x40 open lattice.

For each pattern the firing rate per neuron is averaged over runs and
binned; the first bin, the late-time plateau and the time after which
the rate stays within epsilon of the plateau are reported.

    python scripts/input_memory.py --runs 100
"""

from _common import parser

from qnet.dynamics import SimParams
from qnet.experiments import InputPattern, input_experiment
from qnet.outputs import write_outputs


def main():
    p = parser(__doc__.splitlines()[0], "input_memory")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=0.05)
    args = p.parse_args()
    base = SimParams(v0=1.0, v=0.2, width=0.2, t_total=args.t_total, seed=args.seed)
    print(f"{'pattern':>12} {'first bin':>10} {'plateau':>9} {'decay time':>10}")
    for pattern in InputPattern:
        result = input_experiment(pattern, base, runs=args.runs, epsilon=args.epsilon, workers=args.workers)
        s = result.stats
        print(f"{pattern.value:>12} {s['first_bin_rate']:10.4f} {s['plateau_rate']:9.4f} {s['memory_decay_time']:10.3f}")
        write_outputs(result, args.out / pattern.value)
    print(f"outputs under {args.out}")


if __name__ == "__main__":
    main()
