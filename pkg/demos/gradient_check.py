"""Finite-difference check of every model family for a handful of activations."""
from actbench import selfcheck


def main():
    checks = selfcheck.check_gradients_all(full=False)
    for check in checks:
        print(("ok  " if check.passed else "BAD ") + f"{check.name:<48} {check.detail}")
    print(f"{sum(c.passed for c in checks)}/{len(checks)} within {selfcheck.GRAD_TOL:g}")


if __name__ == "__main__":
    main()
