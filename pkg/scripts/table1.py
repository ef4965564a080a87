"""Pulse-strength sweep on a 40x40 periodic lattice, compared with the power law.

    python scripts/table1.py --runs 20
"""

from _common import parser

from qnet.dynamics import SimParams
from qnet.experiments import sweep
from qnet.outputs import write_sweep_outputs
from qnet.predictor import fit_kq

VALUES = [0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 10.0]


def main():
    p = parser(__doc__.splitlines()[0], "table1")
    p.add_argument("--runs", type=int, default=20)
    args = p.parse_args()
    base = SimParams(v0=1.0, v=0.2, width=0.2, t_total=args.t_total, seed=args.seed)
    results = sweep(VALUES, "v", base, runs_per_value=args.runs, workers=args.workers)
    fit = fit_kq([(r.params.v0, r.params.v, r.params.width, r.period.mean_period) for r in results])
    print(f"{'v':>6} {'T_pred':>8} {'T_sim':>8} {'stderr':>8}")
    for r in results:
        print(f"{r.params.v:6g} {r.prediction:8.4f} {r.period.mean_period:8.4f} {r.period.std_error:8.1e}")
    print(f"free fit: k={fit.k:.4g} q={fit.q:.4g} max relative residual {max(abs(fit.relative_residuals)):.1%}")
    for path in write_sweep_outputs(results, "v", args.out):
        print(path)


if __name__ == "__main__":
    main()
