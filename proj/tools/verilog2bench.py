#!/usr/bin/env python3
"""Convert a flat gate-primitive Verilog netlist into ISCAS .bench text.

Used once to produce benchmarks/*.bench from the ISCAS-85 Verilog netlists
shipped with the circuitgraph package. Constant assigns (1'b0/1'b1) are
dropped together with the outputs they drive.
"""
import re
import sys

PRIMS = {"and", "nand", "or", "nor", "xor", "xnor", "not", "buf"}


def names(s):
    return [t for t in re.split(r"[\s,]+", s.strip()) if t]


def convert(text, name):
    text = re.sub(r"//.*", "", text)
    inputs, outputs, gates, consts = [], [], [], set()
    for stmt in text.split(";"):
        stmt = " ".join(stmt.split())
        if not stmt or stmt.startswith("module") or stmt == "endmodule":
            continue
        head = stmt.split(" ", 1)[0]
        if head == "endmodule":
            continue
        if head == "input":
            inputs += names(stmt[len("input"):])
        elif head == "output":
            outputs += names(stmt[len("output"):])
        elif head == "wire":
            continue
        elif head == "assign":
            lhs, rhs = [s.strip() for s in stmt[len("assign"):].split("=")]
            if "'b" in rhs:
                consts.add(lhs)
            else:
                gates.append((lhs, "BUF", [rhs]))
        elif head in PRIMS:
            m = re.match(r"\w+\s+\w+\s*\((.*)\)", stmt)
            pins = names(m.group(1))
            gates.append((pins[0], head.upper(), pins[1:]))
        else:
            raise SystemExit(f"unsupported statement: {stmt}")
    outputs = [o for o in outputs if o not in consts]
    lines = [f"# {name}", f"# {len(inputs)} inputs, {len(outputs)} outputs, {len(gates)} gates", ""]
    lines += [f"INPUT({i})" for i in inputs] + [""]
    lines += [f"OUTPUT({o})" for o in outputs] + [""]
    lines += [f"{o} = {k}({', '.join(a)})" for o, k, a in gates]
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    src, name = sys.argv[1], sys.argv[2]
    with open(src) as f:
        sys.stdout.write(convert(f.read(), name))
