"""Fixed-column MPS dump and reader.

Field layout (1-based columns): 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
Names are at most 8 characters, numbers at most 12. Columns with ``+inf``
cost are omitted and listed in ``*`` comment lines; they are fixed at zero anyway.
"""
import numpy as np
import scipy.sparse as sp

from .model import LinearProgram


def _num(v):
    for p in range(17, 0, -1):
        s = f"{v:.{p}g}"
        if len(s) <= 12:
            return s
    raise ValueError(f"cannot fit {v!r} into 12 characters")


def _line(f1="", f2="", f3="", f4="", f5="", f6=""):
    s = " " + f"{f1:<2}" + " " + f"{f2:<8}" + "  " + f"{f3:<8}" + "  " + f"{f4:>12}"
    if f5:
        s += "   " + f"{f5:<8}" + "  " + f"{f6:>12}"
    return s.rstrip()


def _names(prefix, k):
    width = 8 - len(prefix)
    if k > 10**width:
        raise ValueError(f"too many {prefix} entries for 8-character names")
    return [f"{prefix}{i:0{width}d}" for i in range(k)]


def write_mps(lp, fh, name=None):
    name = (name or lp.name)[:8]
    r, n = lp.A.shape
    rows = _names("R", r)
    cols = _names("X", n)
    A = lp.A.tocsc()
    out = [f"{'NAME':<14}{name}", "ROWS", _line("N", "COST")]
    out += [_line("E", rn) for rn in rows]
    out.append("COLUMNS")
    for j in range(n):
        if not np.isfinite(lp.c[j]):
            out.append(f"* {cols[j]} has infinite cost and is fixed at zero")
            continue
        entries = []
        if lp.c[j] != 0:
            entries.append(("COST", lp.c[j]))
        s, e = A.indptr[j], A.indptr[j + 1]
        entries += [(rows[i], v) for i, v in zip(A.indices[s:e], A.data[s:e])]
        if not entries:
            entries.append(("COST", 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k : k + 2]
            f = [cols[j], pair[0][0], _num(pair[0][1])]
            if len(pair) == 2:
                f += [pair[1][0], _num(pair[1][1])]
            out.append(_line("", *f))
    out.append("RHS")
    nz = [(rows[i], v) for i, v in enumerate(lp.b) if v != 0]
    for k in range(0, len(nz), 2):
        pair = nz[k : k + 2]
        f = ["RHS", pair[0][0], _num(pair[0][1])]
        if len(pair) == 2:
            f += [pair[1][0], _num(pair[1][1])]
        out.append(_line("", *f))
    out.append("ENDATA")
    text = "\n".join(out) + "\n"
    if hasattr(fh, "write"):
        fh.write(text)
    else:
        with open(fh, "w") as f:
            f.write(text)
    return text


def read_mps(text):
    """Parse the subset written by :func:`write_mps` (equality rows, default bounds)."""
    section = None
    rows, obj_row = [], None
    cols, entries, cost, rhs = [], {}, {}, {}
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        f = [raw[1:3].strip(), raw[4:12].strip(), raw[14:22].strip(), raw[24:36].strip(),
             raw[39:47].strip(), raw[49:61].strip()]
        if section == "ROWS":
            if f[0] == "N":
                obj_row = f[1]
            elif f[0] == "E":
                rows.append(f[1])
            else:
                raise ValueError(f"unsupported row type {f[0]!r}")
        elif section == "COLUMNS":
            if f[1] not in entries:
                cols.append(f[1])
                entries[f[1]] = {}
            for rn, v in ((f[2], f[3]), (f[4], f[5])):
                if not rn:
                    continue
                if rn == obj_row:
                    cost[f[1]] = float(v)
                else:
                    entries[f[1]][rn] = float(v)
        elif section == "RHS":
            for rn, v in ((f[2], f[3]), (f[4], f[5])):
                if rn:
                    rhs[rn] = float(v)
    ridx = {rn: i for i, rn in enumerate(rows)}
    A = sp.lil_matrix((len(rows), len(cols)))
    for j, cn in enumerate(cols):
        for rn, v in entries[cn].items():
            A[ridx[rn], j] = v
    c = np.array([cost.get(cn, 0.0) for cn in cols])
    b = np.array([rhs.get(rn, 0.0) for rn in rows])
    return LinearProgram(c, A.tocsc(), b)
