"""Run a SyGuS-IF v2 file through the cvc5 Python bindings and print its answer.

Usable as a solver command: MG_SOLVER_CMD="python scripts/cvc5_sygus.py {input}".
Requires ``pip install cvc5``.
"""
import sys

import cvc5


def main(path):
    tm = cvc5.TermManager()
    solver = cvc5.Solver(tm)
    solver.setOption("sygus", "true")
    parser = cvc5.InputParser(solver)
    parser.setFileInput(cvc5.InputLanguage.SYGUS_2_1, path)
    sm = parser.getSymbolManager()
    while True:
        cmd = parser.nextCommand()
        if cmd.isNull():
            break
        sys.stdout.write(cmd.invoke(solver, sm))
    sys.stdout.flush()


if __name__ == "__main__":
    main(sys.argv[1])
