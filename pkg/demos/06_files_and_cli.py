"""Matrix files and the command-line interface.

Matrices travel in a small binary container (magic, dimensions, layout byte,
little-endian float64) or as plain CSV. The ``nnsparse`` command reads
either.
"""
import os
import subprocess
import sys
import tempfile

import numpy as np

from nnsparse import matio
from nnsparse.bench import gen_instance

work = tempfile.mkdtemp(prefix="nnsparse_cli_")
inst = gen_instance(200, 600, 20, 1e-4, 77)

# %% Save the matrix in both layouts and the vectors as CSV.
matio.save_matrix(os.path.join(work, "A.bin"), inst.A, matio.COL_MAJOR)
matio.save_matrix(os.path.join(work, "A_rows.bin"), inst.A, matio.ROW_MAJOR)
np.savetxt(os.path.join(work, "y.csv"), inst.y, delimiter=",")
np.savetxt(os.path.join(work, "x.csv"), inst.x_star, delimiter=",")
same = np.array_equal(matio.load_any(os.path.join(work, "A_rows.bin")), inst.A)
print("row-major file reads back identically:", same)


def nnsparse(*args):
    cmd = [sys.executable, "-m", "nnsparse", *args]
    print("$ nnsparse " + " ".join(args))
    proc = subprocess.run(cmd, capture_output=True, text=True)
    print(proc.stdout + proc.stderr + f"[exit {proc.returncode}]\n")


# %% Recover from files; the ground truth is optional and only used for reporting.
nnsparse("recover", "--algo", "ndrtp", "--k", "20", "--matrix", os.path.join(work, "A.bin"),
         "--y", os.path.join(work, "y.csv"), "--x-true", os.path.join(work, "x.csv"),
         "--success-tol", "1e-3", "--out", os.path.join(work, "run"))
print(open(os.path.join(work, "run", "config.txt")).read())

# %% The echoed config reruns the same thing.
nnsparse("recover", "--config", os.path.join(work, "run", "config.txt"),
         "--out", os.path.join(work, "rerun"))

# %% Theory checks and error handling.
nnsparse("verify", "--check", "lemma3", "--m", "6", "--n", "10", "--eps", "0.5",
         "--out", os.path.join(work, "verify"))
nnsparse("verify", "--m", "30", "--n", "40", "--s", "20", "--out", os.path.join(work, "v2"))
