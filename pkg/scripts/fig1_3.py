"""Single run at v0=1, v=0.2, width=0.2: firing raster plus tracked-node and
pooled cumulative counts, with their post burn-in linear fits.

The raster is spikes.csv; cumulative.csv and tracked_cumulative.csv hold
the pooled and single-node step functions.

    python scripts/fig1_3.py --t-total 2.0
"""

from _common import parser

from qnet.dynamics import SimParams
from qnet.experiments import SWEEP_LATTICE, single_run_diagnostics
from qnet.outputs import write_outputs


def main():
    p = parser(__doc__.splitlines()[0], "fig1_3")
    p.add_argument("--node", type=int, nargs=2, default=(20, 20), metavar=("ROW", "COL"))
    p.set_defaults(t_total=2.0)
    args = p.parse_args()
    params = SimParams(v0=1.0, v=0.2, width=0.2, t_total=args.t_total, seed=args.seed)
    result = single_run_diagnostics(params, SWEEP_LATTICE, tuple(args.node))
    print(f"{len(result.log)} firings, mean period {result.period.mean_period:.4f}")
    for name, fit in result.fits.items():
        print(f"{name:8s} slope={fit.slope:.5g} R2={fit.r_squared:.5f}")
    for path in write_outputs(result, args.out):
        print(path)


if __name__ == "__main__":
    main()
