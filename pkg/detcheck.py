import dataclasses
from pathlib import Path

from hierlab import harness


def main():
    tmp = Path("/tmp/det3")
    tmp.mkdir(exist_ok=True)
    cfg = harness.ExperimentConfig(
        task="MazeDesk", method="GoalHRL", seeds=[7, 8], total_env_steps=3_000,
        eval_every=1_500, eval_episodes=3, hidden_sizes=[16, 16], batch_size=32,
        warmup_steps=500, output_dir=str(tmp), save_checkpoints=False)
    harness.run_experiment(cfg, tmp / "a.csv")
    harness.run_experiment(cfg, tmp / "b.csv")
    harness.run_experiment(dataclasses.replace(cfg, workers=2), tmp / "c.csv")
    a = (tmp / "a.csv").read_text().splitlines()
    b = (tmp / "b.csv").read_text().splitlines()
    c = (tmp / "c.csv").read_text().splitlines()
    print("serial-vs-serial identical:", a == b)
    print("serial-vs-parallel identical:", a == c)
    for la, lc in zip(a, c):
        if la != lc:
            print("serial:  ", la[:110])
            print("parallel:", lc[:110])


if __name__ == "__main__":
    main()
