"""Pulse-width sweep on a 40x40 periodic lattice, compared with the power law.

The prediction uses the normalization calibrated on the v=0.1 point of
the strength sweep's power law with q=1.4, so both tables share one k.

    python scripts/table2.py --runs 20
"""

from _common import parser

from qnet.dynamics import SimParams
from qnet.experiments import DEFAULT_Q, sweep
from qnet.outputs import write_sweep_outputs
from qnet.predictor import calibrate_k

VALUES = [0.1, 0.2, 0.3, 0.5, 1.0]


def main():
    p = parser(__doc__.splitlines()[0], "table2")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--k", type=float, default=None,
                   help="power-law normalization (default: calibrated on tau=0.050 at v=0.1)")
    args = p.parse_args()
    k = args.k if args.k is not None else calibrate_k(0.050, DEFAULT_Q, 1.0, 0.1, 0.2)
    base = SimParams(v0=1.0, v=0.2, width=0.2, t_total=args.t_total, seed=args.seed)
    results = sweep(VALUES, "width", base, runs_per_value=args.runs, k=k, workers=args.workers)
    print(f"k={k:.4f} q={DEFAULT_Q}")
    print(f"{'width':>6} {'T_pred':>8} {'T_sim':>8} {'rel':>7}")
    for r in results:
        tau = r.period.mean_period
        print(f"{r.params.width:6g} {r.prediction:8.4f} {tau:8.4f} {(r.prediction - tau) / r.prediction:+7.1%}")
    for path in write_sweep_outputs(results, "width", args.out):
        print(path)


if __name__ == "__main__":
    main()
