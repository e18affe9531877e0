"""Success rate of the planner against simulation horizon, with per-step error compounding."""
import argparse

from dreamplan.bench import RunSpec, load_sites, make_gateway, run_grid, site_tasks, success_rate
from dreamplan.plan import PlannerConfig
from dreamplan.wm import SimConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizons", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--fidelity", type=float, default=0.85)
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()

    graphs = load_sites()
    tasks = site_tasks(graphs)
    gateway = make_gateway(graphs.values())
    print("horizon,fully_faithful_prob,success_rate,mean_steps")
    for h in args.horizons:
        specs = [RunSpec(planner=PlannerConfig(sim=SimConfig(horizon=h, fidelity=args.fidelity, seed=s)))
                 for s in range(args.seeds)]
        records = run_grid(graphs, specs, tasks, gateway)
        steps = sum(r.steps for r in records) / len(records)
        print(f"{h},{args.fidelity ** h:.4f},{success_rate(records):.4f},{steps:.2f}")


if __name__ == "__main__":
    main()
