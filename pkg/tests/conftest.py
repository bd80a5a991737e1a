import os

# single-threaded BLAS before numpy loads: small solves thrash otherwise,
# and the sweeps parallelize across processes instead
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")
