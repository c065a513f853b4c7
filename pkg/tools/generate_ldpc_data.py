"""Regenerate the bundled rate-1/2 LDPC parity-check files.

Run from the repo root:  python tools/generate_ldpc_data.py
"""

import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ddrake.coding import DATA_DIR, LdpcCode, peg_construct, write_alist  # noqa: E402


def main():
    os.makedirs(DATA_DIR, exist_ok=True)
    for n in (1024, 4096):
        t0 = time.perf_counter()
        H = peg_construct(n=n, m=n // 2, col_weight=3, seed=20240501 + n)
        code = LdpcCode.from_parity_check(H)  # fails on rank deficiency
        path = os.path.join(DATA_DIR, f"ldpc_n{n}_r12.alist")
        write_alist(H, path)
        print(
            f"n={n}: rate {code.rate:.3f}, "
            f"built in {time.perf_counter() - t0:.1f}s -> {path}"
        )


if __name__ == "__main__":
    main()
