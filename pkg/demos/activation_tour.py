"""Print the value, slope and properties of every activation at a few probe points."""
import numpy as np

from actbench import activations as act

PROBES = np.array([-3.0, -1.0, 0.0, 0.5, 2.0])


def main():
    print(f"{'name':<16}" + "".join(f"{x:>10g}" for x in PROBES) + "   range / monotone / saturating")
    for name in act.scalar_names():
        props = act.properties(name)
        values = "".join(f"{v:>10.4f}" for v in act.evaluate(name, PROBES))
        print(f"{name:<16}{values}   [{props.range_lo:.3g}, {props.range_hi:.3g}] "
              f"{props.monotone} {props.saturating}")
        print(f"{'  slope':<16}" + "".join(f"{d:>10.4f}" for d in act.derivative(name, PROBES)))

    # maxout pools groups of k pre-activations; the winner index is what backprop routes through
    z = np.array([0.2, -1.3, 0.9])
    print("\nmaxout-3 of", z, "->", act.eval_maxout("maxout-3", z))


if __name__ == "__main__":
    main()
