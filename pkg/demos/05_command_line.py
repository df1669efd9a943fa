"""The command-line interface, driven from Python.

Each step is what one would type in a shell, e.g.
``policylimits simulate --scenario unconfounded --n 500 --out data.csv``.
Every output file starts with comment lines holding the version and the
exact arguments, so it can be regenerated byte for byte.
"""
import json
import os
import tempfile

from policylimits import dataio
from policylimits.cli import main

os.chdir(tempfile.mkdtemp())

main(["simulate", "--scenario", "unconfounded", "--n", "500", "--seed", "1", "--out", "data.csv"])
main(["fit-propensity", "data.csv", "--out", "model.json"])
main(["curve", "data.csv", "--policy", "threshold:tau=0.5", "--nominal", "logistic:model.json",
      "--gamma", "1", "2", "--alphas", "0.1:0.9:0.2", "--out", "curves.csv"])
print(open("curves.csv").read())
print("informativeness:", [c["informativeness"] for c in json.load(open("curves.json"))["curves"]])

main(["coverage", "--scenario", "unconfounded", "--runs", "50", "--draws", "200", "--gammas", "1",
      "--alphas", "0.1,0.5", "--out", "coverage.csv"])
print(open("coverage.csv").read())

#
# Regenerate from the embedded arguments and compare.
#
before = open("curves.csv", "rb").read()
main(dataio.read_config("curves.csv")["argv"])
print("byte-identical rerun:", open("curves.csv", "rb").read() == before)

#
# Errors in the input exit with status 2 and name the offending place.
#
with open("broken.csv", "w") as fh:
    fh.write("x1,a,l\n0.3,1,oops\n")
print("exit status:", main(["curve", "broken.csv", "--policy", "treat-all", "--nominal", "fit", "--out", "x.csv"]))
