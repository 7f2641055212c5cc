"""Write the NPY reader fixtures with numpy's own writer.

Each case is saved with ``np.save`` and described in ``expected.json``:
the header fields and every element's raw bit pattern in file order.
Run from this directory: ``python3 make_fixtures.py``.
"""

import json

import numpy as np

CASES = 50
rng = np.random.default_rng(20240531)

SPECIAL32 = np.array(
    [0.0, -0.0, np.inf, -np.inf, np.nan, 1e-45, -1e-45, 1.17549435e-38,
     3.4028235e38, -3.4028235e38, 1.0, -1.0],
    dtype=np.float32,
)
SPECIAL16 = np.array(
    [0.0, -0.0, np.inf, -np.inf, np.nan, 6e-8, -6e-8, 6.1035e-05, 65504.0,
     -65504.0, 1.0, -1.0],
    dtype=np.float16,
)


def shape_for(i):
    kind = i % 7
    if kind == 0:
        return (int(rng.integers(1, 300)),)
    if kind == 1:
        return (int(rng.integers(1, 40)), int(rng.integers(1, 40)))
    if kind == 2:
        return (int(rng.integers(1, 8)), int(rng.integers(1, 8)), int(rng.integers(1, 16)))
    if kind == 3:
        return (0, int(rng.integers(1, 64)))
    if kind == 4:
        return ()
    if kind == 5:
        return (1,)
    return (int(rng.integers(1, 5)), 200, 4)


def make(i):
    dtype = np.float32 if i % 2 == 0 else np.float16
    shape = shape_for(i)
    n = int(np.prod(shape)) if shape else 1
    values = rng.standard_normal(n) * 10.0 ** rng.integers(-6, 6)
    with np.errstate(over="ignore"):
        values = values.astype(dtype)
    special = SPECIAL32 if dtype == np.float32 else SPECIAL16
    for j in range(min(n, len(special))):
        if rng.random() < 0.5:
            values[int(rng.integers(0, n))] = special[j]
    arr = values.reshape(shape)
    if i % 10 == 9 and arr.ndim >= 2:
        arr = np.asfortranarray(arr)
    return arr


def main():
    expected = []
    for i in range(CASES):
        arr = make(i)
        name = f"case{i:02d}.npy"
        np.save(name, arr)
        fortran = bool(arr.flags.f_contiguous and not arr.flags.c_contiguous)
        order = "F" if fortran else "C"
        flat = arr.ravel(order=order)
        bits = flat.view(np.uint32 if arr.dtype == np.float32 else np.uint16)
        expected.append(
            {
                "file": name,
                "descr": arr.dtype.str,
                "fortran_order": fortran,
                "shape": list(arr.shape),
                "bits": [int(b) for b in bits],
            }
        )
    with open("expected.json", "w") as f:
        json.dump(expected, f, separators=(",", ":"))
        f.write("\n")


if __name__ == "__main__":
    main()
