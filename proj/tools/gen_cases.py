#!/usr/bin/env python3
"""Writes synthetic lattice networks with convex piecewise-linear costs."""
import argparse
import random


def curve(rng, pmin, pmax):
    n = rng.randint(2, 6)
    inner = sorted(rng.uniform(pmin, pmax) for _ in range(n - 2))
    xs = [pmin] + inner + [pmax]
    xs = sorted(set(round(x, 1) for x in xs))
    slopes = sorted(rng.uniform(8.0, 60.0) for _ in range(len(xs) - 1))
    for i in range(1, len(slopes)):
        slopes[i] = max(slopes[i], slopes[i - 1] + 0.5)
    ys = [round(rng.uniform(0.0, 200.0), 2)]
    for i, s in enumerate(slopes):
        ys.append(round(ys[-1] + s * (xs[i + 1] - xs[i]), 4))
    return list(zip(xs, ys))


def build(name, rows, cols, seed, gen_every):
    rng = random.Random(seed)
    nb = rows * cols
    out = [f"function mpc = {name}", "% Synthetic lattice network.", "mpc.version = '2';",
           "mpc.baseMVA = 100;", "", "%% bus data",
           "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin",
           "mpc.bus = ["]
    gen_buses = [b for b in range(1, nb + 1) if (b - 1) % gen_every == gen_every // 2]
    load = {}
    for b in range(1, nb + 1):
        pd = round(rng.uniform(5.0, 25.0), 1)
        qd = round(pd * rng.uniform(0.1, 0.3), 1)
        load[b] = pd
        btype = 3 if b == gen_buses[0] else (2 if b in gen_buses else 1)
        out.append(f"\t{b}\t{btype}\t{pd}\t{qd}\t0\t0\t1\t1\t0\t138\t1\t1.06\t0.94;")
    out += ["];", "", "%% generator data",
            "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin", "mpc.gen = ["]
    total = sum(load.values())
    cap = 2.0 * total / len(gen_buses)
    gens = []
    for b in gen_buses:
        pmax = round(cap * rng.uniform(0.7, 1.3), 1)
        pmin = round(pmax * rng.choice([0.0, 0.0, 0.1, 0.2]), 1)
        gens.append((pmin, pmax))
        q = round(pmax * 0.6, 1)
        out.append(f"\t{b}\t{pmin}\t0\t{q}\t{-q}\t1\t100\t1\t{pmax}\t{pmin};")
    out += ["];", "", "%% branch data",
            "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax",
            "mpc.branch = ["]
    for r in range(rows):
        for c in range(cols):
            b = r * cols + c + 1
            nbrs = []
            if c + 1 < cols:
                nbrs.append(b + 1)
            if r + 1 < rows:
                nbrs.append(b + cols)
            for t in nbrs:
                x = round(rng.uniform(0.02, 0.05), 4)
                res = round(x * rng.uniform(0.08, 0.15), 5)
                ch = round(rng.uniform(0.0, 0.04), 4)
                rate = rng.choice([0, 250, 300, 400])
                out.append(f"\t{b}\t{t}\t{res}\t{x}\t{ch}\t{rate}\t{rate}\t{rate}"
                           "\t0\t0\t1\t-30\t30;")
    out += ["];", "", "%% generator cost data",
            "%\t1\tstartup\tshutdown\tn\tx1\ty1\t...\txn\tyn", "mpc.gencost = ["]
    for pmin, pmax in gens:
        pts = curve(rng, pmin, pmax)
        flat = "\t".join(f"{x}\t{y}" for x, y in pts)
        out.append(f"\t1\t0\t0\t{len(pts)}\t{flat};")
    out += ["];", ""]
    return "\n".join(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/cases")
    args = ap.parse_args()
    for name, rows, cols, seed, every in [("case30_lattice", 5, 6, 30, 5),
                                          ("case120_lattice", 10, 12, 118, 6),
                                          ("case300_lattice", 15, 20, 300, 7)]:
        with open(f"{args.out}/{name}.m", "w") as f:
            f.write(build(name, rows, cols, seed, every))


if __name__ == "__main__":
    main()
