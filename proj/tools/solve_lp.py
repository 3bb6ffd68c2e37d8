#!/usr/bin/env python3
"""Solve a CPLEX LP file with HiGHS and write the solution as JSON.

Output: {"status": ..., "objective": ..., "values": {name: value}}.
Exit code 2 when highspy is not importable, 1 when no solution was found.
"""
import argparse
import json
import sys


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("lp")
    ap.add_argument("-o", "--output", default="-")
    ap.add_argument("--time-limit", type=float, default=60.0)
    args = ap.parse_args()
    try:
        import highspy
    except ImportError:
        print("highspy not available", file=sys.stderr)
        return 2

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("mip_rel_gap", 0.0)
    if h.readModel(args.lp) == highspy.HighsStatus.kError:
        print("could not read " + args.lp, file=sys.stderr)
        return 1
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    info = h.getInfo()
    doc = {"status": status, "objective": None, "values": {}}
    if info.primal_solution_status == 2:
        lp = h.getLp()
        sol = h.getSolution()
        names = [lp.col_names_[i] for i in range(lp.num_col_)]
        doc["objective"] = info.objective_function_value
        doc["values"] = {n: v for n, v in zip(names, sol.col_value)}
    text = json.dumps(doc, indent=1, sort_keys=True)
    if args.output == "-":
        print(text)
    else:
        with open(args.output, "w") as f:
            f.write(text + "\n")
    return 0 if doc["values"] else 1


if __name__ == "__main__":
    sys.exit(main())
