"""Success rate of the planner as the oracle world model's per-step fidelity drops."""
import argparse

from dreamplan.bench import RunSpec, load_sites, make_gateway, run_grid, site_tasks, success_rate
from dreamplan.plan import PlannerConfig
from dreamplan.wm import SimConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--values", type=float, nargs="+", default=[1.0, 0.9, 0.75, 0.6, 0.5])
    ap.add_argument("--horizon", type=int, default=1)
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()

    graphs = load_sites()
    tasks = site_tasks(graphs)
    gateway = make_gateway(graphs.values())
    print("fidelity,success_rate,episodes")
    for p in args.values:
        specs = [RunSpec(planner=PlannerConfig(sim=SimConfig(horizon=args.horizon, fidelity=p, seed=s)))
                 for s in range(args.seeds)]
        records = run_grid(graphs, specs, tasks, gateway)
        print(f"{p},{success_rate(records):.4f},{len(records)}")


if __name__ == "__main__":
    main()
