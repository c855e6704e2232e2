#!/usr/bin/env python3
"""Train the 4-class fault detector on a synthetic dataset and inspect it.

Generates the 600/200/200/400 labeled set (good, spool stuck, spring
failure, under voltage), trains the 2-36-24-12-4 LeakyReLU/softmax network
with RMSProp, and prints the test accuracy plus the mean-probability
confusion matrix as a text heat map.
"""

from valvehealth import gen_fault_dataset, train_fault
from valvehealth.models import FAULT_CLASSES
from valvehealth.tinynn import TrainConfig

SHADES = " .:-=+*#%@"


def shade(p: float) -> str:
    return SHADES[min(int(p * len(SHADES)), len(SHADES) - 1)]


def main():
    print("generating 1400 synthetic actuations (jittered valves, 1 mA noise)...")
    dataset = gen_fault_dataset(seed=0)

    print("training: epochs=50, batch=10, RMSProp, 70/20/10 split")
    model, history, report = train_fault(dataset, TrainConfig(seed=0))

    print(f"\nloss: {history.train_loss[0]:.4f} -> {history.train_loss[-1]:.4f} "
          f"(val {history.val_loss[-1]:.4f})")
    print(f"test accuracy: {report.accuracy:.4f}\n")

    names = [k.value for k in FAULT_CLASSES]
    width = max(len(n) for n in names)
    print("mean predicted probability per true class (rows = truth):")
    header = " " * (width + 2) + "  ".join(f"{n[:8]:>8}" for n in names)
    print(header)
    for i, name in enumerate(names):
        cells = "  ".join(f"{report.confusion[i, j]:>8.3f}" for j in range(4))
        bar = "".join(shade(p) for p in report.confusion[i])
        print(f"{name:<{width}}  {cells}   |{bar}|")

    print("\nper-class feature centroids (di/dt, AUC):")
    for c, name in enumerate(names):
        rows = dataset.x[dataset.y == c]
        print(f"  {name:<15} di/dt {rows[:, 0].mean():8.2f}   AUC {rows[:, 1].mean():8.2f}")


if __name__ == "__main__":
    main()
